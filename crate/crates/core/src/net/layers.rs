use rand::Rng;

use crate::tensor::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::Result;

/// Records a stored tensor on the tape as a parameter or as a constant.
pub fn load(tape: &mut Tape<f64>, store: &ParamStore<f64>, id: ParamId, trainable: bool) -> Var {
    if trainable {
        tape.param(store, id)
    } else {
        tape.frozen(store, id)
    }
}

/// Affine layer `x W + b` with `W: [in, out]`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn new<R: Rng>(store: &mut ParamStore<f64>, rng: &mut R, name: &str, fan_in: usize, fan_out: usize) -> Self {
        Self::with_std(store, rng, name, fan_in, fan_out, (1.0 / fan_in as f64).sqrt())
    }

    pub fn with_std<R: Rng>(
        store: &mut ParamStore<f64>,
        rng: &mut R,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        std: f64,
    ) -> Self {
        let w = store.add(format!("{name}.w"), Tensor::randn(vec![fan_in, fan_out], std, rng));
        let b = store.add(format!("{name}.b"), Tensor::zeros(vec![fan_out]));
        Self { w, b }
    }

    pub fn forward(&self, tape: &mut Tape<f64>, store: &ParamStore<f64>, x: Var, trainable: bool) -> Result<Var> {
        let w = load(tape, store, self.w, trainable);
        let b = load(tape, store, self.b, trainable);
        let y = tape.matmul(x, w)?;
        tape.add_bias(y, b)
    }
}
