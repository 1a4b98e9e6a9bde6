use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Family, ParamVector};
use crate::{Error, Result};

/// Full factorial design over four parameters with a seeded train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignGrid {
    pub family: Family,
    pub levels_per_param: usize,
    pub ranges: [[f64; 2]; 4],
    pub entries: Vec<ParamVector>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl DesignGrid {
    /// Min-max normalized parameters of entry `i`, each in `[0, 1]`.
    pub fn normalized_params(&self, i: usize) -> [f64; 4] {
        let v = self.entries[i].values;
        std::array::from_fn(|k| {
            let [lo, hi] = self.ranges[k];
            if hi > lo {
                (v[k] - lo) / (hi - lo)
            } else {
                0.0
            }
        })
    }
}

pub fn sample_design_grid(
    family: Family,
    levels: usize,
    ranges: [[f64; 2]; 4],
    test_fraction: f64,
    seed: u64,
) -> Result<DesignGrid> {
    if levels < 2 {
        return Err(Error::Config(format!(
            "need at least 2 levels per parameter, got {levels}"
        )));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    for (k, [lo, hi]) in ranges.iter().enumerate() {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Config(format!("range {k} is inverted: [{lo}, {hi}]")));
        }
    }
    let level = |k: usize, i: usize| {
        let [lo, hi] = ranges[k];
        lo + (hi - lo) * i as f64 / (levels - 1) as f64
    };
    let n = levels.pow(4);
    let mut entries = Vec::with_capacity(n);
    for i0 in 0..levels {
        for i1 in 0..levels {
            for i2 in 0..levels {
                for i3 in 0..levels {
                    let p = ParamVector {
                        family,
                        values: [level(0, i0), level(1, i1), level(2, i2), level(3, i3)],
                    };
                    p.validate()?;
                    entries.push(p);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(DesignGrid {
        family,
        levels_per_param: levels,
        ranges,
        entries,
        train,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_levels_give_1296_entries() {
        let g = sample_design_grid(Family::CrashBox, 6, Family::CrashBox.default_ranges(), 96.0 / 1296.0, 1).unwrap();
        assert_eq!(g.entries.len(), 1296);
        assert_eq!(g.test.len(), 96);
        assert_eq!(g.train.len(), 1200);
    }

    #[test]
    fn two_levels_hit_interval_endpoints() {
        let r = Family::Bottle.default_ranges();
        let g = sample_design_grid(Family::Bottle, 2, r, 0.25, 3).unwrap();
        assert_eq!(g.entries.len(), 16);
        for e in &g.entries {
            for (v, [lo, hi]) in e.values.iter().zip(r) {
                assert!(*v == lo || *v == hi);
            }
        }
    }

    #[test]
    fn split_is_reproducible_and_disjoint() {
        let r = Family::CrashBox.default_ranges();
        let a = sample_design_grid(Family::CrashBox, 3, r, 1.0 / 9.0, 7).unwrap();
        let b = sample_design_grid(Family::CrashBox, 3, r, 1.0 / 9.0, 7).unwrap();
        assert_eq!(a.entries.len(), 81);
        assert_eq!((a.train.len(), a.test.len()), (72, 9));
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..81).collect::<Vec<_>>());
    }

    #[test]
    fn one_level_is_rejected() {
        assert!(sample_design_grid(Family::CrashBox, 1, Family::CrashBox.default_ranges(), 0.1, 0).is_err());
    }
}
