//! Deterministic synthetic image domains.
//!
//! Clients are smooth multi-blob color fields; imposters are client-style
//! fields passed through an attack transform (print flattening or screen
//! replay). A domain spec plus an image index fully determines every pixel,
//! so regenerating a domain is always byte-identical.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::raster::Raster;

/// How many images of each role a domain provides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SplitCounts {
    pub train_clients: usize,
    pub val_clients: usize,
    pub val_imposters: usize,
    pub test_clients: usize,
    pub test_imposters: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train_clients
            + self.val_clients
            + self.val_imposters
            + self.test_clients
            + self.test_imposters
    }

    pub fn clients(&self) -> usize {
        self.train_clients + self.val_clients + self.test_clients
    }

    pub fn imposters(&self) -> usize {
        self.val_imposters + self.test_imposters
    }
}

/// Client pattern parameters; all `(lo, hi)` pairs are inclusive sampling
/// ranges. Hues live on the [0, 1) color wheel and the range may extend past
/// 1 to wrap around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternParams {
    pub blob_count: (usize, usize),
    pub hue: (f64, f64),
    pub saturation: (f64, f64),
    pub brightness: (f64, f64),
    /// Blob radius as a fraction of the shorter image side; the smoothness
    /// ("blur") control.
    pub blob_radius: (f64, f64),
    /// Uniform per-pixel sensor noise amplitude applied to every image of
    /// the domain, clients and imposters alike.
    pub sensor_noise: f64,
}

/// The transform turning a client-style field into a presentation attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackParams {
    /// Printed-photo look: contrast compressed toward mid-gray plus
    /// monochrome paper grain.
    PrintFlatten { contrast: (f64, f64), grain: f64 },
    /// Screen-replay look: an additive high-frequency moire interference
    /// pattern.
    ScreenReplay { amplitude: (f64, f64), period: (f64, f64) },
}

/// A complete synthetic domain description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDomainSpec {
    /// Source tag recorded in manifests, e.g. `"baseline"`.
    pub domain: String,
    pub width: usize,
    pub height: usize,
    pub pattern: PatternParams,
    pub attack: AttackParams,
    /// Base seed; each image derives its own PRNG stream from it.
    pub seed: u64,
    pub counts: SplitCounts,
}

impl SynthDomainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.domain.is_empty() {
            return Err(Error::Config("domain tag must not be empty".into()));
        }
        if self.width < 8 || self.height < 8 {
            return Err(Error::Config(format!(
                "domain {}: images must be at least 8x8, got {}x{}",
                self.domain, self.width, self.height
            )));
        }
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        let p = &self.pattern;
        if p.blob_count.0 > p.blob_count.1 || p.blob_count.1 == 0 {
            return Err(Error::Config(format!(
                "domain {}: invalid blob count range {:?}",
                self.domain, p.blob_count
            )));
        }
        if !(ordered(p.hue) && ordered(p.saturation) && ordered(p.brightness) && ordered(p.blob_radius))
        {
            return Err(Error::Config(format!(
                "domain {}: pattern ranges must be finite with lo <= hi",
                self.domain
            )));
        }
        if p.blob_radius.0 <= 0.0 {
            return Err(Error::Config(format!(
                "domain {}: blob radius must be positive",
                self.domain
            )));
        }
        if !(p.sensor_noise >= 0.0) {
            return Err(Error::Config(format!(
                "domain {}: sensor noise must be non-negative",
                self.domain
            )));
        }
        match &self.attack {
            AttackParams::PrintFlatten { contrast, grain } => {
                if !ordered(*contrast) || contrast.0 <= 0.0 || !(*grain >= 0.0) {
                    return Err(Error::Config(format!(
                        "domain {}: invalid print-flatten parameters",
                        self.domain
                    )));
                }
            }
            AttackParams::ScreenReplay { amplitude, period } => {
                if !ordered(*amplitude) || !ordered(*period) || period.0 < 2.0 {
                    return Err(Error::Config(format!(
                        "domain {}: invalid screen-replay parameters (period must be >= 2)",
                        self.domain
                    )));
                }
            }
        }
        Ok(())
    }
}

const IMPOSTER_STREAM: u64 = 1 << 40;

fn image_rng(spec: &SynthDomainSpec, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    rng
}

fn sample(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = (h - math::floor(h)) * 6.0;
    let sector = math::floor(h) as usize % 6;
    let f = h - math::floor(h);
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

struct Blob {
    cx: f64,
    cy: f64,
    inv_two_sigma_sq: f64,
    color: [f64; 3],
}

/// Renders the smooth client field into a float RGB buffer in [0, 1].
fn render_field(spec: &SynthDomainSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (w, h) = (spec.width, spec.height);
    let p = &spec.pattern;
    let bg = hsv_to_rgb(
        sample(rng, p.hue),
        sample(rng, p.saturation),
        sample(rng, p.brightness) * 0.6,
    );
    let blob_count = rng.gen_range(p.blob_count.0..=p.blob_count.1);
    let min_side = w.min(h) as f64;
    let blobs: Vec<Blob> = (0..blob_count)
        .map(|_| {
            let cx = sample(rng, (0.1, 0.9)) * w as f64;
            let cy = sample(rng, (0.1, 0.9)) * h as f64;
            let sigma = sample(rng, p.blob_radius) * min_side;
            let color = hsv_to_rgb(
                sample(rng, p.hue),
                sample(rng, p.saturation),
                sample(rng, p.brightness),
            );
            Blob {
                cx,
                cy,
                inv_two_sigma_sq: 1.0 / (2.0 * sigma * sigma),
                color,
            }
        })
        .collect();

    let mut field = vec![0.0f64; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let mut px = bg;
            for blob in &blobs {
                let dx = x as f64 - blob.cx;
                let dy = y as f64 - blob.cy;
                let weight = math::exp(-(dx * dx + dy * dy) * blob.inv_two_sigma_sq);
                for c in 0..3 {
                    px[c] = px[c] * (1.0 - weight) + blob.color[c] * weight;
                }
            }
            let i = (y * w + x) * 3;
            field[i..i + 3].copy_from_slice(&px);
        }
    }
    if p.sensor_noise > 0.0 {
        let a = p.sensor_noise;
        for v in &mut field {
            *v += rng.gen_range(-a..a);
        }
    }
    for v in &mut field {
        *v = v.clamp(0.0, 1.0);
    }
    field
}

fn apply_attack(spec: &SynthDomainSpec, rng: &mut ChaCha8Rng, field: &mut [f64]) {
    let (w, h) = (spec.width, spec.height);
    match &spec.attack {
        AttackParams::PrintFlatten { contrast, grain } => {
            let gamma = sample(rng, *contrast);
            for y in 0..h {
                for x in 0..w {
                    let i = (y * w + x) * 3;
                    let g = if *grain > 0.0 {
                        rng.gen_range(-*grain..*grain)
                    } else {
                        0.0
                    };
                    for c in 0..3 {
                        let v = 0.5 + (field[i + c] - 0.5) * gamma + g;
                        field[i + c] = v.clamp(0.0, 1.0);
                    }
                }
            }
        }
        AttackParams::ScreenReplay { amplitude, period } => {
            let a = sample(rng, *amplitude);
            let px = sample(rng, *period);
            let py = sample(rng, *period);
            let phase_x = sample(rng, (0.0, core::f64::consts::TAU));
            let phase_y = sample(rng, (0.0, core::f64::consts::TAU));
            for y in 0..h {
                let sy = math::sin(core::f64::consts::TAU * y as f64 / py + phase_y);
                for x in 0..w {
                    let sx = math::sin(core::f64::consts::TAU * x as f64 / px + phase_x);
                    let m = a * sx * sy;
                    let i = (y * w + x) * 3;
                    for c in 0..3 {
                        field[i + c] = (field[i + c] + m).clamp(0.0, 1.0);
                    }
                }
            }
        }
    }
}

fn quantize(spec: &SynthDomainSpec, field: &[f64]) -> Raster {
    let data = field
        .iter()
        .map(|&v| math::round(v.clamp(0.0, 1.0) * 255.0) as u8)
        .collect();
    Raster::from_rgb8(spec.width, spec.height, data).expect("field buffer sized by construction")
}

/// The `index`-th client image of the domain.
pub fn client_image(spec: &SynthDomainSpec, index: u64) -> Raster {
    let mut rng = image_rng(spec, index);
    let field = render_field(spec, &mut rng);
    quantize(spec, &field)
}

/// The untransformed field behind the `index`-th imposter image.
pub fn imposter_source(spec: &SynthDomainSpec, index: u64) -> Raster {
    let mut rng = image_rng(spec, IMPOSTER_STREAM | index);
    let field = render_field(spec, &mut rng);
    quantize(spec, &field)
}

/// The `index`-th imposter image: a client-style field with the domain's
/// attack transform applied.
pub fn imposter_image(spec: &SynthDomainSpec, index: u64) -> Raster {
    let mut rng = image_rng(spec, IMPOSTER_STREAM | index);
    let mut field = render_field(spec, &mut rng);
    apply_attack(spec, &mut rng, &mut field);
    quantize(spec, &field)
}

/// The built-in four-domain setup used by the command-line `synth` command:
/// a warm `baseline` domain with screen-replay attacks, a full-gamut `wild`
/// domain, a mid-gamut `auxdb` domain, and a cool, sensor-noisy `unseen`
/// domain with print attacks that no training composition includes. Sizes
/// echo the reference corpus at one eighth scale.
pub fn default_domain_specs(base_seed: u64) -> Vec<SynthDomainSpec> {
    let seed = |i: u64| base_seed.wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    vec![
        SynthDomainSpec {
            domain: "baseline".into(),
            width: 80,
            height: 80,
            pattern: PatternParams {
                blob_count: (3, 5),
                hue: (0.02, 0.14),
                saturation: (0.30, 0.62),
                brightness: (0.40, 0.80),
                blob_radius: (0.20, 0.34),
                sensor_noise: 0.0,
            },
            attack: AttackParams::ScreenReplay {
                amplitude: (0.08, 0.14),
                period: (3.0, 6.0),
            },
            seed: seed(0),
            counts: SplitCounts {
                train_clients: 128,
                val_clients: 8,
                val_imposters: 10,
                test_clients: 16,
                test_imposters: 16,
            },
        },
        SynthDomainSpec {
            domain: "wild".into(),
            width: 96,
            height: 72,
            pattern: PatternParams {
                blob_count: (2, 6),
                hue: (0.0, 1.0),
                saturation: (0.20, 0.70),
                brightness: (0.30, 0.85),
                blob_radius: (0.14, 0.38),
                sensor_noise: 0.0,
            },
            attack: AttackParams::PrintFlatten {
                contrast: (0.50, 0.70),
                grain: 0.08,
            },
            seed: seed(1),
            counts: SplitCounts {
                train_clients: 20,
                val_clients: 4,
                val_imposters: 0,
                test_clients: 0,
                test_imposters: 0,
            },
        },
        SynthDomainSpec {
            domain: "auxdb".into(),
            width: 64,
            height: 64,
            pattern: PatternParams {
                blob_count: (3, 5),
                hue: (0.40, 0.92),
                saturation: (0.28, 0.65),
                brightness: (0.38, 0.82),
                blob_radius: (0.18, 0.32),
                sensor_noise: 0.0,
            },
            attack: AttackParams::PrintFlatten {
                contrast: (0.50, 0.70),
                grain: 0.08,
            },
            seed: seed(2),
            counts: SplitCounts {
                train_clients: 34,
                val_clients: 4,
                val_imposters: 0,
                test_clients: 0,
                test_imposters: 0,
            },
        },
        SynthDomainSpec {
            domain: "unseen".into(),
            width: 64,
            height: 64,
            pattern: PatternParams {
                blob_count: (4, 6),
                hue: (0.55, 0.68),
                saturation: (0.30, 0.62),
                brightness: (0.40, 0.80),
                blob_radius: (0.22, 0.34),
                sensor_noise: 0.06,
            },
            attack: AttackParams::PrintFlatten {
                contrast: (0.50, 0.65),
                grain: 0.10,
            },
            seed: seed(3),
            counts: SplitCounts {
                train_clients: 0,
                val_clients: 0,
                val_imposters: 0,
                test_clients: 16,
                test_imposters: 16,
            },
        },
    ]
}
