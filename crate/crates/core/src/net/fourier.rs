use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;
use crate::{Error, Result};

/// How a query point is presented to the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalityMode {
    RawXYZ,
    Fourier,
}

/// Frozen random projection `x -> [sin(2 pi B x) | cos(2 pi B x)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFeatureMap {
    pub sigma: f64,
    pub seed: u64,
    /// `m` frequency rows.
    pub freqs: Vec<[f64; 3]>,
}

impl FourierFeatureMap {
    pub fn new(m: usize, sigma: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("fourier sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let freqs = (0..m)
            .map(|_| {
                [
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                ]
            })
            .collect();
        Ok(Self { sigma, seed, freqs })
    }

    pub fn m(&self) -> usize {
        self.freqs.len()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.freqs.len()
    }

    pub fn features_into(&self, p: [f64; 3], out: &mut Vec<f64>) {
        let tau = std::f64::consts::TAU;
        let proj: Vec<f64> = self
            .freqs
            .iter()
            .map(|b| tau * (b[0] * p[0] + b[1] * p[1] + b[2] * p[2]))
            .collect();
        out.extend(proj.iter().map(|v| v.sin()));
        out.extend(proj.iter().map(|v| v.cos()));
    }

    pub fn features(&self, p: [f64; 3]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.output_dim());
        self.features_into(p, &mut out);
        out
    }
}

/// Locality feature vector of one point.
pub fn locality_features(p: [f64; 3], mode: LocalityMode, fmap: Option<&FourierFeatureMap>) -> Result<Vec<f64>> {
    match mode {
        LocalityMode::RawXYZ => Ok(p.to_vec()),
        LocalityMode::Fourier => Ok(fmap.ok_or(Error::MissingFrequencyMap)?.features(p)),
    }
}

/// Locality features of many points as an `[n, dim]` tensor.
pub fn locality_batch(
    points: &[[f64; 3]],
    mode: LocalityMode,
    fmap: Option<&FourierFeatureMap>,
) -> Result<Tensor<f64>> {
    match mode {
        LocalityMode::RawXYZ => Tensor::matrix(points.len(), 3, points.iter().flatten().copied().collect()),
        LocalityMode::Fourier => {
            let f = fmap.ok_or(Error::MissingFrequencyMap)?;
            let mut data = Vec::with_capacity(points.len() * f.output_dim());
            for &p in points {
                f.features_into(p, &mut data);
            }
            Tensor::matrix(points.len(), f.output_dim(), data)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_maps_to_zero_sines_and_unit_cosines() {
        let f = FourierFeatureMap::new(16, 6.0, 1).unwrap();
        let v = f.features([0.0; 3]);
        assert!(v[..16].iter().all(|&s| s == 0.0));
        assert!(v[16..].iter().all(|&c| c == 1.0));
    }

    #[test]
    fn raw_mode_is_identity_and_fourier_needs_a_map() {
        let p = [0.1, -0.2, 0.3];
        assert_eq!(locality_features(p, LocalityMode::RawXYZ, None).unwrap(), p.to_vec());
        assert!(matches!(
            locality_features(p, LocalityMode::Fourier, None),
            Err(Error::MissingFrequencyMap)
        ));
    }

    #[test]
    fn same_seed_same_matrix() {
        assert_eq!(
            FourierFeatureMap::new(8, 2.0, 5).unwrap(),
            FourierFeatureMap::new(8, 2.0, 5).unwrap()
        );
        assert_ne!(
            FourierFeatureMap::new(8, 2.0, 5).unwrap(),
            FourierFeatureMap::new(8, 2.0, 6).unwrap()
        );
    }
}
