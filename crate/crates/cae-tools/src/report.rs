//! Persisted evaluation artifacts: score CSVs, ROC CSVs, and SVG plots.
//!
//! Every table the experiment driver reports is re-derivable from the score
//! CSVs written here; nothing is kept in hidden state.

use std::path::Path;

use cae_core::metrics::{RocCurve, ScoreSet};
use cae_core::Label;

use crate::error::{PipelineError, Result};

/// Writes `score,label` rows at full float precision.
pub fn write_scores_csv(path: &Path, scores: &ScoreSet) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(PipelineError::Csv)?;
    writer.write_record(["score", "label"])?;
    for (score, label) in scores.entries() {
        writer.write_record([format!("{score}"), label.to_string()])?;
    }
    writer.flush().map_err(|e| PipelineError::io(path, e))?;
    Ok(())
}

/// Reads a `score,label` CSV back into a score set.
pub fn read_scores_csv(path: &Path, provenance: &str) -> Result<ScoreSet> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(PipelineError::Csv)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["score", "label"] {
        return Err(PipelineError::Config(format!(
            "{}: expected \"score,label\" header, got {headers:?}",
            path.display()
        )));
    }
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let score: f64 = record[0].parse().map_err(|_| {
            PipelineError::Config(format!(
                "{} line {line}: invalid score {:?}",
                path.display(),
                &record[0]
            ))
        })?;
        let label: Label = record[1].parse().map_err(|e: cae_core::Error| {
            PipelineError::Config(format!("{} line {line}: {e}", path.display()))
        })?;
        entries.push((score, label));
    }
    ScoreSet::new(entries, provenance).map_err(PipelineError::Core)
}

/// Writes the ROC sweep as `threshold,fpr,tpr,fnr` at full float precision.
pub fn write_roc_csv(path: &Path, roc: &RocCurve) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(PipelineError::Csv)?;
    writer.write_record(["threshold", "fpr", "tpr", "fnr"])?;
    for op in &roc.points {
        writer.write_record([
            format!("{}", op.threshold),
            format!("{}", op.fpr),
            format!("{}", op.tpr()),
            format!("{}", op.fnr),
        ])?;
    }
    writer.flush().map_err(|e| PipelineError::io(path, e))?;
    Ok(())
}

const PLOT_COLORS: [&str; 6] = ["#1f6fb2", "#d1495b", "#2e8b57", "#b8860b", "#6a4fa0", "#444444"];

/// Renders ROC curves (one per labeled series) into a standalone SVG. The
/// plot lives in (fraction of clients flagged, fraction of imposters
/// flagged) space with the chance diagonal for reference.
pub fn write_roc_svg(path: &Path, title: &str, series: &[(String, &RocCurve)]) -> Result<()> {
    const SIZE: f64 = 460.0;
    const MARGIN: f64 = 54.0;
    let span = SIZE - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + x * span;
    let sy = |y: f64| SIZE - MARGIN - y * span;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        SIZE / 2.0,
        xml_escape(title)
    ));

    // Axes, ticks, gridlines.
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
            sx(f),
            sy(0.0),
            sx(f),
            sy(1.0)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
            sx(0.0),
            sy(f),
            sx(1.0),
            sy(f)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{f:.2}</text>\n",
            sx(f),
            sy(0.0) + 16.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{f:.2}</text>\n",
            sx(0.0) - 6.0,
            sy(f) + 4.0
        ));
    }
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#999999\" stroke-dasharray=\"5,4\"/>\n",
        sx(0.0),
        sy(0.0),
        sx(1.0),
        sy(1.0)
    ));
    svg.push_str(&format!(
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{span:.1}\" height=\"{span:.1}\" fill=\"none\" stroke=\"black\"/>\n",
        sx(0.0),
        sy(1.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"middle\">FPR (positive = imposter)</text>\n",
        SIZE / 2.0,
        SIZE - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">TPR</text>\n",
        SIZE / 2.0,
        SIZE / 2.0
    ));

    for (i, (name, roc)) in series.iter().enumerate() {
        let color = PLOT_COLORS[i % PLOT_COLORS.len()];
        let mut points: Vec<(f64, f64)> = roc.points.iter().map(|op| (op.fnr, op.tpr())).collect();
        points.reverse(); // ascending x
        let path_points: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            path_points.join(" ")
        ));
        let ly = 40.0 + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            sx(0.0) + 6.0,
            sx(0.0) + 26.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{} (AUC {:.3})</text>\n",
            sx(0.0) + 32.0,
            ly + 4.0,
            xml_escape(name),
            roc.auc
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| PipelineError::io(path, e))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use cae_core::metrics::roc_curve;

    fn scores() -> ScoreSet {
        ScoreSet::new(
            vec![
                (0.12, Label::Client),
                (0.50, Label::Client),
                (0.75, Label::Imposter),
                (1.25, Label::Imposter),
            ],
            "unit",
        )
        .unwrap()
    }

    #[test]
    fn score_csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let original = scores();
        write_scores_csv(&path, &original).unwrap();
        let loaded = read_scores_csv(&path, "unit").unwrap();
        assert_eq!(loaded.entries(), original.entries());
    }

    #[test]
    fn roc_csv_includes_infinite_endpoints() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc.csv");
        let roc = roc_curve(&scores()).unwrap();
        write_roc_csv(&path, &roc).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("threshold,fpr,tpr,fnr\n"));
        assert!(text.contains("-inf"), "{text}");
        assert!(text.contains("inf"), "{text}");
    }

    #[test]
    fn svg_contains_all_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roc.svg");
        let roc = roc_curve(&scores()).unwrap();
        write_roc_svg(
            &path,
            "demo",
            &[("D1".to_string(), &roc), ("D2".to_string(), &roc)],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("<svg"));
        assert!(text.contains("D1 (AUC"));
        assert!(text.contains("D2 (AUC"));
        assert_eq!(text.matches("<polyline").count(), 2);
    }

    #[test]
    fn malformed_score_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        std::fs::write(&path, "score,label\nnot-a-number,client\n").unwrap();
        assert!(read_scores_csv(&path, "bad").is_err());
        std::fs::write(&path, "wrong,header\n1.0,client\n").unwrap();
        assert!(read_scores_csv(&path, "bad").is_err());
    }
}
