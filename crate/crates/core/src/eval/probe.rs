use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ridge strength used when ordinary least squares is ill-posed.
pub const PROBE_RIDGE: f64 = 1e-6;

/// `1 - SS_res / SS_tot`.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || truth.len() < 2 {
        return Err(Error::DegenerateTargets(format!(
            "need at least two paired values, got {} predictions for {} targets",
            pred.len(),
            truth.len()
        )));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateTargets("targets are constant".into()));
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub param: usize,
    pub truth: f64,
    pub predicted: f64,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// `latent_dim` rows of 4 coefficients.
    pub weights: Vec<[f64; 4]>,
    pub bias: [f64; 4],
    pub r2_train: [f64; 4],
    pub r2_test: [f64; 4],
    /// Whether the ridge fallback was used.
    pub ridge: bool,
    pub scatter: Vec<ScatterPoint>,
}

impl ProbeReport {
    pub fn predict(&self, z: &[f64]) -> [f64; 4] {
        std::array::from_fn(|k| self.bias[k] + z.iter().zip(&self.weights).map(|(a, w)| a * w[k]).sum::<f64>())
    }

    pub fn write_scatter_csv<W: std::io::Write>(&self, names: &[&str; 4], mut w: W) -> Result<()> {
        writeln!(w, "param,true,predicted,split")?;
        for s in &self.scatter {
            writeln!(w, "{},{},{},{}", names[s.param], s.truth, s.predicted, s.split)?;
        }
        Ok(())
    }
}

fn design(latents: &[Vec<f64>], rows: &[usize]) -> DMatrix<f64> {
    let d = latents[rows[0]].len();
    DMatrix::from_fn(rows.len(), d + 1, |i, j| if j < d { latents[rows[i]][j] } else { 1.0 })
}

/// Fits one affine map from latent codes to the four (already normalized)
/// parameters on `train`, and scores it on both splits.
///
/// Ordinary least squares is used when the training design matrix has full
/// column rank; otherwise a ridge penalty of [`PROBE_RIDGE`] is added on the
/// latent coefficients. A parameter that is constant on a split gets `NaN`.
pub fn linear_probe(latents: &[Vec<f64>], params: &[[f64; 4]], train: &[usize], test: &[usize]) -> Result<ProbeReport> {
    if train.is_empty() || latents.is_empty() || latents.len() != params.len() {
        return Err(Error::DegenerateTargets("empty or mismatched probe inputs".into()));
    }
    let d = latents[0].len();
    let x = design(latents, train);
    let y = DMatrix::from_fn(train.len(), 4, |i, k| params[train[i]][k]);

    let svd = SVD::new(x.clone(), true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > smax * 1e-10 * (d + 1) as f64)
        .count();
    let ridge = train.len() < d + 1 || rank < d + 1;
    let beta = if ridge {
        let mut xtx = x.transpose() * &x;
        for j in 0..d {
            xtx[(j, j)] += PROBE_RIDGE;
        }
        let xty = x.transpose() * &y;
        match xtx.clone().cholesky() {
            Some(c) => c.solve(&xty),
            None => xtx
                .lu()
                .solve(&xty)
                .ok_or_else(|| Error::DegenerateTargets("probe normal equations are singular".into()))?,
        }
    } else {
        svd.solve(&y, 0.0)
            .map_err(|e| Error::DegenerateTargets(e.to_string()))?
    };

    let weights: Vec<[f64; 4]> = (0..d).map(|j| std::array::from_fn(|k| beta[(j, k)])).collect();
    let bias = std::array::from_fn(|k| beta[(d, k)]);
    let mut report = ProbeReport {
        weights,
        bias,
        r2_train: [f64::NAN; 4],
        r2_test: [f64::NAN; 4],
        ridge,
        scatter: Vec::new(),
    };
    for (split, rows) in [("train", train), ("test", test)] {
        if rows.is_empty() {
            continue;
        }
        let preds: Vec<[f64; 4]> = rows.iter().map(|&i| report.predict(&latents[i])).collect();
        for k in 0..4 {
            let p: Vec<f64> = preds.iter().map(|v| v[k]).collect();
            let t: Vec<f64> = rows.iter().map(|&i| params[i][k]).collect();
            let r2 = match r_squared(&p, &t) {
                Ok(v) => v,
                Err(e) => {
                    log::warn!("parameter {k} on the {split} split: {e}; R^2 reported as NaN");
                    f64::NAN
                }
            };
            if split == "train" {
                report.r2_train[k] = r2;
            } else {
                report.r2_test[k] = r2;
            }
            for (pi, ti) in p.iter().zip(&t) {
                report.scatter.push(ScatterPoint {
                    param: k,
                    truth: *ti,
                    predicted: *pi,
                    split: split.to_string(),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn r_squared_fixtures() {
        let t = [0.0, 1.0, 2.0];
        assert_eq!(r_squared(&t, &t).unwrap(), 1.0);
        assert_eq!(r_squared(&[1.0; 3], &t).unwrap(), 0.0);
        assert!((r_squared(&[2.0, 1.0, 0.0], &t).unwrap() + 3.0).abs() < 1e-12);
        assert!(r_squared(&[1.0, 2.0], &[3.0, 3.0]).is_err());
    }

    fn dataset(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<[f64; 4]>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<[f64; 4]> = (0..n).map(|_| std::array::from_fn(|_| rng.random())).collect();
        let latents = params
            .iter()
            .map(|p| {
                let mut z: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
                z[..4].copy_from_slice(p);
                z
            })
            .collect();
        (latents, params)
    }

    #[test]
    fn identity_embedding_is_recovered() {
        let (z, p) = dataset(100, 1);
        let train: Vec<usize> = (0..85).collect();
        let test: Vec<usize> = (85..100).collect();
        let r = linear_probe(&z, &p, &train, &test).unwrap();
        assert!(!r.ridge);
        for k in 0..4 {
            assert!((r.r2_test[k] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn small_training_sets_fall_back_to_ridge() {
        let (z, p) = dataset(40, 2);
        let train: Vec<usize> = (0..30).collect();
        let r = linear_probe(&z, &p, &train, &[30, 31, 32]).unwrap();
        assert!(r.ridge);
        assert!(r.r2_train.iter().all(|&v| v >= 0.0));
    }
}
