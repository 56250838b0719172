//! Three-class triangular waveform curves on `[1, 21]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::sample::{Interval, SampledFunction};

pub const WAVE_CLASSES: usize = 3;

/// Triangular generating waveform `h_1`, `h_2` or `h_3`.
pub fn wave_h(t: f64, which: u8) -> f64 {
    let h1 = |t: f64| (6.0 - (t - 11.0).abs()).max(0.0);
    match which {
        1 => h1(t),
        2 => h1(t - 4.0),
        3 => h1(t + 4.0),
        _ => panic!("waveform index must be 1, 2 or 3, got {which}"),
    }
}

/// The pair of waveforms mixed for a class (0-based).
fn class_pair(class: usize) -> (u8, u8) {
    match class {
        0 => (1, 2),
        1 => (1, 3),
        2 => (2, 3),
        _ => panic!("waveform class must be below {WAVE_CLASSES}, got {class}"),
    }
}

/// Noise-free curve `u h_a(t) + (1 - u) h_b(t)` of `class` at `t`.
pub fn waveform_curve(class: usize, u: f64, t: f64) -> f64 {
    let (a, b) = class_pair(class);
    u * wave_h(t, a) + (1.0 - u) * wave_h(t, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    pub n_per_class: usize,
    pub m: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for WaveSpec {
    fn default() -> Self {
        Self {
            n_per_class: 150,
            m: 101,
            noise_sd: 1.0,
            seed: 0,
        }
    }
}

impl WaveSpec {
    pub fn domain() -> Interval<f64> {
        Interval { lo: 1.0, hi: 21.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::Config("n_per_class must be at least 1".into()));
        }
        if self.m < 2 {
            return Err(Error::Config("m must be at least 2".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config("noise_sd must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// `n_per_class` curves of each class on the uniform `m`-point grid, each with
/// its own mixing weight `u ~ U(0, 1)` and i.i.d. Gaussian observation noise.
/// Curves are grouped by class.
pub fn gen_waveform(spec: &WaveSpec) -> Result<LabeledDataset<f64>> {
    spec.validate()?;
    let domain = WaveSpec::domain();
    let grid = domain.uniform_grid(spec.m);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Config(e.to_string()))?;
    let mut functions = Vec::with_capacity(WAVE_CLASSES * spec.n_per_class);
    let mut labels = Vec::with_capacity(WAVE_CLASSES * spec.n_per_class);
    for class in 0..WAVE_CLASSES {
        for _ in 0..spec.n_per_class {
            let u: f64 = rng.random();
            let values = grid
                .iter()
                .map(|&t| waveform_curve(class, u, t) + noise.sample(&mut rng))
                .collect();
            functions.push(SampledFunction::new(domain, grid.clone(), values)?);
            labels.push(class);
        }
    }
    LabeledDataset::classification(domain, functions, labels, WAVE_CLASSES)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generating_waveforms() {
        assert_eq!(wave_h(11.0, 1), 6.0);
        assert_eq!(wave_h(5.0, 1), 0.0);
        assert_eq!(wave_h(17.0, 1), 0.0);
        assert_eq!(wave_h(15.0, 2), 6.0);
        assert_eq!(wave_h(7.0, 3), 6.0);
    }

    #[test]
    fn mixture_endpoint_is_pure_waveform() {
        let grid = WaveSpec::domain().uniform_grid(101);
        for &t in &grid {
            assert_eq!(waveform_curve(0, 1.0, t), wave_h(t, 1));
        }
        assert_eq!(waveform_curve(0, 0.5, 11.0), 4.0);
    }

    #[test]
    fn sizes_follow_spec() {
        let ds = gen_waveform(&WaveSpec::default()).unwrap();
        assert_eq!(ds.len(), 450);
        assert!(ds.functions().iter().all(|f| f.len() == 101));
        assert_eq!(ds.class_counts(), vec![150, 150, 150]);
    }

    #[test]
    fn noiseless_curves_are_convex_combinations() {
        let spec = WaveSpec {
            n_per_class: 20,
            noise_sd: 0.0,
            seed: 5,
            ..WaveSpec::default()
        };
        let ds = gen_waveform(&spec).unwrap();
        for (f, &c) in ds.functions().iter().zip(ds.labels().unwrap()) {
            let (a, b) = class_pair(c);
            for (t, y) in f.iter() {
                let (ha, hb) = (wave_h(t, a), wave_h(t, b));
                assert!(y >= ha.min(hb) - 1e-12 && y <= ha.max(hb) + 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = WaveSpec {
            n_per_class: 3,
            seed: 17,
            ..WaveSpec::default()
        };
        assert_eq!(gen_waveform(&spec).unwrap(), gen_waveform(&spec).unwrap());
        let other = WaveSpec { seed: 18, ..spec };
        assert_ne!(gen_waveform(&spec).unwrap(), gen_waveform(&other).unwrap());
    }
}
