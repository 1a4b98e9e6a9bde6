use super::{ParamStore, Tensor};
use crate::{Error, Real, Result};

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(store: &ParamStore<T>, lr: f64) -> Self {
        let zeros = |t: &Tensor<T>| Tensor::zeros(t.shape().to_vec());
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: store.tensors().iter().map(zeros).collect(),
            v: store.tensors().iter().map(zeros).collect(),
        }
    }

    /// One update. Parameters without a gradient keep their value and moments.
    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &[Option<Tensor<T>>]) -> Result<()> {
        if grads.len() != store.len() || self.m.len() != store.len() {
            return Err(Error::ShapeMismatch {
                op: "adam_step",
                shapes: format!(
                    "{} params, {} grads, {} moments",
                    store.len(),
                    grads.len(),
                    self.m.len()
                ),
            });
        }
        self.step += 1;
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let c1 = T::lit(1.0 - self.beta1.powi(self.step as i32));
        let c2 = T::lit(1.0 - self.beta2.powi(self.step as i32));
        let (lr, eps) = (T::lit(self.lr), T::lit(self.eps));
        for (i, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            let id = super::ParamId(i);
            if g.shape() != store.get(id).shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam_step",
                    shapes: format!("{:?} vs {:?}", store.get(id).shape(), g.shape()),
                });
            }
            let p = store.get_mut(id).data_mut();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for k in 0..p.len() {
                let gk = g.data()[k];
                m[k] = b1 * m[k] + (T::one() - b1) * gk;
                v[k] = b2 * v[k] + (T::one() - b2) * gk * gk;
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p[k] -= lr * mh / (vh.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = ParamStore::<f64>::new();
        s.add("x", Tensor::new(vec![2], vec![1.0, -2.0]).unwrap());
        let mut adam = Adam::new(&s, 0.1);
        adam.step(&mut s, &[Some(Tensor::zeros(vec![2]))]).unwrap();
        assert_eq!(s.tensors()[0].data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut s = ParamStore::<f64>::new();
        s.add("x", Tensor::new(vec![3], vec![0.0, 0.0, 0.0]).unwrap());
        let mut adam = Adam::new(&s, 0.01);
        adam.step(&mut s, &[Some(Tensor::new(vec![3], vec![0.5, -3.0, 1e-3]).unwrap())])
            .unwrap();
        for (x, want) in s.tensors()[0].data().iter().zip([-0.01, 0.01, -0.01]) {
            assert!((x - want).abs() < 1e-6, "{x} vs {want}");
        }
    }

    #[test]
    fn converges_on_a_parabola() {
        let mut s = ParamStore::<f64>::new();
        let id = s.add("x", Tensor::new(vec![1], vec![0.0]).unwrap());
        let mut adam = Adam::new(&s, 0.1);
        for _ in 0..200 {
            let mut tape = Tape::new();
            let x = tape.param(&s, id);
            let three = tape.constant(Tensor::new(vec![1], vec![3.0]).unwrap());
            let d = tape.sub(x, three).unwrap();
            let sq = tape.mul(d, d).unwrap();
            let l = tape.reduce_mean(sq);
            let g = tape.backward(l).unwrap();
            let grads = g.for_params(&s);
            adam.step(&mut s, &grads).unwrap();
        }
        assert!((s.get(id).item() - 3.0).abs() < 0.05);
    }
}
