/// Batch-adaptive loss multipliers and the statistics they are built from.
///
/// All matrices are indexed `[geometry][coordinate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub mu: Vec<f64>,
    pub bd: Vec<Vec<f64>>,
    pub mu_bd: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

pub const WEIGHT_EPS: f64 = 1e-8;

/// Per-coordinate weights from the spread of `values` (`B` rows of `N`) across the batch.
///
/// `w = 1 + ln((bd + m) / m)` with `bd = |v - mean|` and `m` the batch-mean of
/// `bd` floored at `eps`, so a column where every geometry agrees gets `w = 1`.
pub fn batch_weights(values: &[Vec<f64>], eps: f64) -> WeightField {
    let b = values.len();
    let n = values.first().map_or(0, Vec::len);
    assert!(values.iter().all(|r| r.len() == n), "ragged value matrix");
    let inv_b = 1.0 / b.max(1) as f64;
    let mu: Vec<f64> = (0..n)
        .map(|j| values.iter().map(|r| r[j]).sum::<f64>() * inv_b)
        .collect();
    let bd: Vec<Vec<f64>> = values
        .iter()
        .map(|r| r.iter().zip(&mu).map(|(v, m)| (v - m).abs()).collect())
        .collect();
    let mu_bd: Vec<f64> = (0..n).map(|j| bd.iter().map(|r| r[j]).sum::<f64>() * inv_b).collect();
    let w = bd
        .iter()
        .map(|r| {
            r.iter()
                .zip(&mu_bd)
                .map(|(d, m)| {
                    let m = m.max(eps);
                    1.0 + ((d + m) / m).ln()
                })
                .collect()
        })
        .collect();
    WeightField { mu, bd, mu_bd, w }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn agreement_gives_unit_weight() {
        let f = batch_weights(&col(&[0.2, 0.2, 0.2, 0.2]), WEIGHT_EPS);
        assert!(f.w.iter().all(|r| r[0] == 1.0));
    }

    #[test]
    fn two_geometry_fixture() {
        let f = batch_weights(&col(&[0.1, 0.3]), WEIGHT_EPS);
        for r in &f.w {
            assert!((r[0] - (1.0 + 2f64.ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn four_geometry_fixture() {
        let f = batch_weights(&col(&[0.0, 0.0, 0.0, 0.4]), WEIGHT_EPS);
        assert!((f.mu[0] - 0.1).abs() < 1e-15);
        assert!((f.mu_bd[0] - 0.15).abs() < 1e-15);
        for (r, want) in f.w.iter().zip([1.5108, 1.5108, 1.5108, 2.0986]) {
            assert!((r[0] - want).abs() < 1e-4);
        }
    }
}
