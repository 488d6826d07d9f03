//! Synthetic domain-shift generator.
//!
//! Labels keep one fixed meaning across all domains; what changes between
//! domains is the input distribution. In vector mode the three class
//! clusters sit on a ring inside a fixed 2-plane of feature space, and a
//! domain is a translation of everything plus a rotation of the ring, so
//! within-domain class geometry (and hence learnability) is preserved while
//! a model fitted to an earlier domain misreads the new one. In image mode
//! classes are stripe orientations and a domain adds its own brightness
//! offset, texture frequency, and noise level.

use rand::RngCore;

use crate::data::{Experience, Sample};
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::rng;
use crate::seed::derive_seed;
use serde::{Deserialize, Serialize};

pub const IMAGE_SIDE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    Vector,
    Image,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    pub seed: u64,
    #[serde(default = "defaults::mode")]
    pub mode: DataMode,
    /// Number of classes; class semantics are shared by every domain.
    #[serde(default = "defaults::classes")]
    pub classes: usize,
    /// Feature count in vector mode (images are fixed at 1x32x32).
    #[serde(default = "defaults::dims")]
    pub dims: usize,
    /// Amplitude of the class structure (cluster radius / stripe contrast).
    #[serde(default = "defaults::separation")]
    pub separation: f64,
    /// Gaussian noise scale; domains may override it.
    #[serde(default = "defaults::noise")]
    pub noise: f64,
    /// Stripe frequency of the class patterns (image mode).
    #[serde(default = "defaults::class_freq")]
    pub class_freq: f64,
    /// Amplitude of the per-domain texture overlay (image mode).
    #[serde(default = "defaults::texture_amp")]
    pub texture_amp: f64,
    pub domains: Vec<DomainSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub name: String,
    pub train: usize,
    pub test: usize,
    /// Additive mean shift per feature (vector mode). Shorter vectors are
    /// zero-padded to the feature count.
    #[serde(default)]
    pub shift: Vec<f64>,
    /// Rotation of the class ring inside its plane, degrees (vector mode).
    #[serde(default)]
    pub rotate_deg: f64,
    /// Additive brightness offset (image mode).
    #[serde(default)]
    pub brightness: f64,
    /// Frequency of this domain's texture overlay (image mode).
    #[serde(default = "defaults::texture_freq")]
    pub texture_freq: f64,
    /// Noise-scale override for this domain.
    #[serde(default)]
    pub noise: Option<f64>,
    /// Explicit per-class mean vectors (vector mode); replaces the ring
    /// construction entirely when given.
    #[serde(default)]
    pub class_means: Option<Vec<Vec<f64>>>,
}

mod defaults {
    use super::DataMode;

    pub fn mode() -> DataMode {
        DataMode::Vector
    }
    pub fn classes() -> usize {
        3
    }
    pub fn dims() -> usize {
        16
    }
    pub fn separation() -> f64 {
        0.14
    }
    pub fn noise() -> f64 {
        0.05
    }
    pub fn class_freq() -> f64 {
        3.0
    }
    pub fn texture_amp() -> f64 {
        0.12
    }
    pub fn texture_freq() -> f64 {
        2.0
    }
}

impl StreamSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.domains.len() < 2 {
            return fail(format!(
                "stream needs at least 2 domains, got {}",
                self.domains.len()
            ));
        }
        if self.classes < 2 {
            return fail(format!("classes must be at least 2, got {}", self.classes));
        }
        if self.mode == DataMode::Vector && self.dims < 3 {
            return fail(format!(
                "vector mode needs at least 3 feature dims, got {}",
                self.dims
            ));
        }
        if self.separation < 0.0 || self.noise < 0.0 || self.texture_amp < 0.0 {
            return fail("separation, noise, and texture_amp must be non-negative".into());
        }
        for d in &self.domains {
            if d.train == 0 || d.test == 0 {
                return fail(format!(
                    "domain \"{}\" needs non-empty train and test counts",
                    d.name
                ));
            }
            if self.mode == DataMode::Vector && d.shift.len() > self.dims {
                return fail(format!(
                    "domain \"{}\" shift has {} entries for {} feature dims",
                    d.name,
                    d.shift.len(),
                    self.dims
                ));
            }
            if let Some(n) = d.noise {
                if n < 0.0 {
                    return fail(format!("domain \"{}\" noise must be non-negative", d.name));
                }
            }
            if let Some(means) = &d.class_means {
                if means.len() != self.classes {
                    return fail(format!(
                        "domain \"{}\" gives {} class means for {} classes",
                        d.name,
                        means.len(),
                        self.classes
                    ));
                }
                if means.iter().any(|m| m.len() != self.dims) {
                    return fail(format!(
                        "domain \"{}\" class means must have {} entries each",
                        d.name, self.dims
                    ));
                }
            }
        }
        Ok(())
    }

    /// Sample shape produced by this spec.
    pub fn input_shape(&self) -> Vec<usize> {
        match self.mode {
            DataMode::Vector => vec![self.dims],
            DataMode::Image => vec![1, IMAGE_SIDE, IMAGE_SIDE],
        }
    }
}

/// The pinned three-domain benchmark stream used by the default configs and
/// the acceptance run. Domain 0 is a large, clean source. Domain 1 keeps the
/// class count but rotates the class ring a full class step and adds a small
/// translation and extra noise, so its labels contradict a domain-0 model
/// wherever the inputs overlap. Domain 2 is the rotated task seen through a
/// severely degraded sensor: class structure sits far below the noise floor,
/// which keeps the training pressure of the final stage weak without making
/// the stage a no-op.
///
/// The numbers are design constants, picked once from pilot sweeps and then
/// frozen. Changing any of them changes every seeded stream built here, so
/// treat them like a file format, not tuning knobs.
pub fn default_benchmark(seed: u64) -> StreamSpec {
    let dims = 16;
    let shift_pattern = |scale: f64, freq: f64, use_sin: bool| -> Vec<f64> {
        (0..dims)
            .map(|j| {
                let angle = std::f64::consts::TAU * freq * j as f64 / dims as f64;
                scale * if use_sin { angle.sin() } else { angle.cos() }
            })
            .collect()
    };
    StreamSpec {
        seed,
        mode: DataMode::Vector,
        classes: 3,
        dims,
        separation: 0.22,
        noise: 0.05,
        class_freq: defaults::class_freq(),
        texture_amp: defaults::texture_amp(),
        domains: vec![
            DomainSpec {
                name: "dom0".into(),
                train: 3000,
                test: 600,
                shift: vec![],
                rotate_deg: 0.0,
                brightness: 0.0,
                texture_freq: defaults::texture_freq(),
                noise: None,
                class_means: None,
            },
            DomainSpec {
                name: "dom1".into(),
                train: 900,
                test: 300,
                shift: shift_pattern(0.07, 2.0, false),
                rotate_deg: 120.0,
                brightness: 0.0,
                texture_freq: defaults::texture_freq(),
                noise: Some(0.15),
                class_means: None,
            },
            DomainSpec {
                name: "dom2".into(),
                train: 900,
                test: 300,
                shift: shift_pattern(0.05, 2.0, true),
                rotate_deg: 120.0,
                brightness: 0.0,
                texture_freq: defaults::texture_freq(),
                noise: Some(1.0),
                class_means: None,
            },
        ],
    }
}

/// Generates the full stream. Deterministic: equal specs produce
/// byte-identical streams, and each domain/split pair draws from its own
/// seeded sub-stream.
pub fn generate_synthetic_stream(spec: &StreamSpec) -> Result<Vec<Experience>> {
    spec.validate()?;
    let mut experiences = Vec::with_capacity(spec.domains.len());
    for (id, domain) in spec.domains.iter().enumerate() {
        let train = generate_split(spec, domain, "train", domain.train)?;
        let test = generate_split(spec, domain, "test", domain.test)?;
        experiences.push(Experience {
            id,
            name: domain.name.clone(),
            train,
            test,
        });
    }
    Ok(experiences)
}

fn generate_split(
    spec: &StreamSpec,
    domain: &DomainSpec,
    split: &str,
    count: usize,
) -> Result<Vec<Sample>> {
    let label = format!("gen/{}/{split}", domain.name);
    let mut rng = rng::chacha(derive_seed(spec.seed, &label));
    let noise = domain.noise.unwrap_or(spec.noise);
    let mut samples = Vec::with_capacity(count);
    for class in 0..spec.classes {
        let n = per_class_count(count, spec.classes, class);
        for _ in 0..n {
            let sample = match spec.mode {
                DataMode::Vector => vector_sample(spec, domain, class, noise, &mut rng)?,
                DataMode::Image => image_sample(spec, domain, class, noise, &mut rng)?,
            };
            samples.push(sample);
        }
    }
    Ok(samples)
}

/// Exact per-class counts: `count / classes` each, remainder going to the
/// lowest class indices. The generator assigns counts, never probabilities.
fn per_class_count(count: usize, classes: usize, class: usize) -> usize {
    count / classes + usize::from(class < count % classes)
}

/// Unit vectors spanning the fixed class plane: harmonically ordered cosine
/// and sine profiles over the feature axis (frequency 1), orthonormal for
/// any dims >= 3.
fn class_plane(dims: usize) -> (Vec<f64>, Vec<f64>) {
    let norm = (2.0 / dims as f64).sqrt();
    let mut p = Vec::with_capacity(dims);
    let mut q = Vec::with_capacity(dims);
    for j in 0..dims {
        let angle = std::f64::consts::TAU * j as f64 / dims as f64;
        p.push(norm * angle.cos());
        q.push(norm * angle.sin());
    }
    (p, q)
}

/// Mean vector of one class in one domain: 0.5 everywhere, plus the domain
/// translation, plus the class's point on the (possibly rotated) ring. The
/// ring directions sum to zero over classes, so the whole-domain mean is
/// exactly 0.5 + shift.
fn class_mean(spec: &StreamSpec, domain: &DomainSpec, class: usize) -> Vec<f64> {
    if let Some(means) = &domain.class_means {
        return means[class].clone();
    }
    let (p, q) = class_plane(spec.dims);
    let angle = std::f64::consts::TAU * class as f64 / spec.classes as f64
        + domain.rotate_deg.to_radians();
    let (sin, cos) = angle.sin_cos();
    (0..spec.dims)
        .map(|j| {
            let shift = domain.shift.get(j).copied().unwrap_or(0.0);
            0.5 + shift + spec.separation * (cos * p[j] + sin * q[j])
        })
        .collect()
}

fn vector_sample(
    spec: &StreamSpec,
    domain: &DomainSpec,
    class: usize,
    noise: f64,
    rng: &mut impl RngCore,
) -> Result<Sample> {
    let mean = class_mean(spec, domain, class);
    let data: Vec<f32> = mean
        .iter()
        .map(|&m| (m + noise * rng::gauss(rng)).clamp(0.0, 1.0) as f32)
        .collect();
    Ok(Sample {
        x: Tensor::from_vec(&[spec.dims], data)?,
        label: class,
    })
}

fn image_sample(
    spec: &StreamSpec,
    domain: &DomainSpec,
    class: usize,
    noise: f64,
    rng: &mut impl RngCore,
) -> Result<Sample> {
    let side = IMAGE_SIDE;
    // Class identity is a stripe orientation; the domain overlays its own
    // texture at a fixed diagonal orientation. Random phases decorrelate
    // samples without moving the per-pixel expectation off 0.5 + brightness.
    let class_theta = std::f64::consts::PI * class as f64 / spec.classes as f64;
    let texture_theta = 3.0 * std::f64::consts::FRAC_PI_4;
    let phase_class = std::f64::consts::TAU * rng::u01(rng);
    let phase_texture = std::f64::consts::TAU * rng::u01(rng);
    let (csin, ccos) = class_theta.sin_cos();
    let (tsin, tcos) = texture_theta.sin_cos();

    let mut data = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let (xf, yf) = (x as f64, y as f64);
            let class_wave = (std::f64::consts::TAU * spec.class_freq * (xf * ccos + yf * csin)
                / side as f64
                + phase_class)
                .sin();
            let texture_wave = (std::f64::consts::TAU
                * domain.texture_freq
                * (xf * tcos + yf * tsin)
                / side as f64
                + phase_texture)
                .sin();
            let v = 0.5
                + domain.brightness
                + spec.separation * class_wave
                + spec.texture_amp * texture_wave
                + noise * rng::gauss(rng);
            data.push(v.clamp(0.0, 1.0) as f32);
        }
    }
    Ok(Sample {
        x: Tensor::from_vec(&[1, side, side], data)?,
        label: class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cache;

    #[test]
    fn default_benchmark_has_expected_sizes() {
        let stream = generate_synthetic_stream(&default_benchmark(7)).unwrap();
        assert_eq!(stream.len(), 3);
        assert_eq!(stream[0].train.len(), 3000);
        assert_eq!(stream[0].test.len(), 600);
        assert_eq!(stream[1].train.len(), 900);
        assert_eq!(stream[2].test.len(), 300);
        for exp in &stream {
            for split in [&exp.train, &exp.test] {
                let mut counts = [0usize; 3];
                for s in split {
                    counts[s.label] += 1;
                }
                assert_eq!(counts[0], counts[1]);
                assert_eq!(counts[1], counts[2]);
                assert!(split
                    .iter()
                    .all(|s| s.x.data().iter().all(|&v| (0.0..=1.0).contains(&v))));
            }
        }
    }

    #[test]
    fn equal_specs_serialize_identically() {
        let a = generate_synthetic_stream(&default_benchmark(7)).unwrap();
        let b = generate_synthetic_stream(&default_benchmark(7)).unwrap();
        assert_eq!(cache::to_bytes(&a, 3).unwrap(), cache::to_bytes(&b, 3).unwrap());
        let c = generate_synthetic_stream(&default_benchmark(8)).unwrap();
        assert_ne!(cache::to_bytes(&a, 3).unwrap(), cache::to_bytes(&c, 3).unwrap());
    }

    #[test]
    fn domain_means_differ_by_configured_shift() {
        // Empirical check against the generator contract: the mean of a
        // domain differs from domain 0's mean by the shift difference,
        // feature by feature, within 3 standard errors. The contract holds
        // while draws stay inside the [0, 1] clamp, so this spec keeps the
        // noise small; the default benchmark's loudest domain saturates the
        // clamp on purpose and would flatten the means.
        let mut spec = default_benchmark(11);
        spec.domains[2].noise = Some(0.08);
        let stream = generate_synthetic_stream(&spec).unwrap();
        let stats = |samples: &[Sample], j: usize| {
            let n = samples.len() as f64;
            let mean = samples.iter().map(|s| s.x.data()[j] as f64).sum::<f64>() / n;
            let var = samples
                .iter()
                .map(|s| {
                    let d = s.x.data()[j] as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / (n - 1.0);
            (mean, var / n)
        };
        for i in 1..stream.len() {
            for j in 0..spec.dims {
                let (m0, se0) = stats(&stream[0].train, j);
                let (mi, sei) = stats(&stream[i].train, j);
                let expected = spec.domains[i].shift.get(j).copied().unwrap_or(0.0)
                    - spec.domains[0].shift.get(j).copied().unwrap_or(0.0);
                let se = (se0 + sei).sqrt();
                assert!(
                    ((mi - m0) - expected).abs() <= 3.0 * se,
                    "domain {i} feature {j}: diff {} vs expected {expected}, se {se}",
                    mi - m0
                );
            }
        }
    }

    #[test]
    fn image_mode_produces_unit_range_images() {
        let mut spec = default_benchmark(5);
        spec.mode = DataMode::Image;
        for d in &mut spec.domains {
            d.train = 30;
            d.test = 9;
            d.shift.clear();
        }
        spec.domains[1].brightness = 0.1;
        spec.domains[1].texture_freq = 5.0;
        let stream = generate_synthetic_stream(&spec).unwrap();
        assert_eq!(stream[0].train[0].x.shape(), &[1, 32, 32]);
        for exp in &stream {
            for s in exp.train.iter().chain(&exp.test) {
                assert!(s.x.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
        // Brightness shows up as a mean offset.
        let mean = |samples: &[Sample]| {
            samples
                .iter()
                .flat_map(|s| s.x.data())
                .map(|&v| v as f64)
                .sum::<f64>()
                / (samples.len() * 1024) as f64
        };
        let diff = mean(&stream[1].train) - mean(&stream[0].train);
        assert!((diff - 0.1).abs() < 0.02, "brightness diff {diff}");
    }

    #[test]
    fn degenerate_specs_are_config_errors() {
        let mut spec = default_benchmark(1);
        spec.domains.truncate(1);
        assert!(generate_synthetic_stream(&spec).is_err());

        let mut spec = default_benchmark(1);
        spec.domains[1].train = 0;
        assert!(generate_synthetic_stream(&spec).is_err());

        let mut spec = default_benchmark(1);
        spec.classes = 1;
        assert!(generate_synthetic_stream(&spec).is_err());
    }

    #[test]
    fn explicit_class_means_override_ring() {
        let mut spec = default_benchmark(3);
        spec.dims = 3;
        spec.noise = 0.0;
        for d in &mut spec.domains {
            d.shift.clear();
            d.train = 3;
            d.test = 3;
        }
        spec.domains[0].class_means = Some(vec![
            vec![0.1, 0.2, 0.3],
            vec![0.4, 0.5, 0.6],
            vec![0.7, 0.8, 0.9],
        ]);
        let stream = generate_synthetic_stream(&spec).unwrap();
        let s = &stream[0].train[0];
        assert_eq!(s.label, 0);
        assert_eq!(s.x.data(), &[0.1, 0.2, 0.3]);
    }
}
