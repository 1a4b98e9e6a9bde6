use super::{ParamId, ParamStore, Tensor};
use crate::{Error, Real, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unary {
    Relu,
    Elu,
    Tanh,
    Sin,
    Cos,
    Sigmoid,
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    AddBias(Var, Var),
    Concat(Vec<Var>),
    Unary(Var, Unary),
    /// Convolution through an unrolled patch matrix kept for the backward pass.
    Conv {
        x: Var,
        w: Var,
        b: Var,
        cols: Vec<T>,
        /// For each patch-matrix entry, the source index into `x` (or `usize::MAX` for padding).
        src: Vec<usize>,
    },
    MeanPool(Var, Vec<usize>),
    MaxPool(Var, Vec<usize>),
    ReduceMean(Var),
    Mse(Var, Var),
    WeightedMse(Var, Var, Vec<T>),
    GatherRows(Var, Vec<usize>),
    ScatterAddRows(Var, Vec<usize>),
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Records a forward computation so it can be differentiated in reverse.
///
/// A tape is single-use per backward pass: [`Tape::backward`] consumes the
/// recorded graph and leaves an empty tape ready for the next step.
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    params: Vec<(ParamId, Var)>,
}

/// Gradients of leaf values produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    leaves: Vec<(Var, Tensor<T>)>,
    params: Vec<(ParamId, Var)>,
}

impl<T: Real> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.leaves.iter().find(|(k, _)| *k == v).map(|(_, g)| g)
    }

    /// Gradient per parameter of `store`, summed over every time it was loaded.
    pub fn for_params(&self, store: &ParamStore<T>) -> Vec<Option<Tensor<T>>> {
        let mut out: Vec<Option<Tensor<T>>> = vec![None; store.len()];
        for &(pid, var) in &self.params {
            if let Some(g) = self.get(var) {
                match &mut out[pid.0] {
                    Some(acc) => acc.data_mut().iter_mut().zip(g.data()).for_each(|(a, b)| *a += *b),
                    slot => *slot = Some(g.clone()),
                }
            }
        }
        out
    }
}

fn mismatch(op: &'static str, shapes: &[&[usize]]) -> Error {
    Error::ShapeMismatch {
        op,
        shapes: format!("{shapes:?}"),
    }
}

fn two_d(op: &'static str, s: &[usize]) -> Result<(usize, usize)> {
    match s {
        [r, c] => Ok((*r, *c)),
        _ => Err(mismatch(op, &[s])),
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    /// A value that never receives a gradient.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// A differentiable input.
    pub fn leaf(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Loads a trainable tensor; its gradient is reported by [`Gradients::for_params`].
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        let v = self.leaf(store.get(id).clone());
        self.params.push((id, v));
        v
    }

    /// Loads a tensor from a store without tracking gradients (frozen weights).
    pub fn frozen(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        self.constant(store.get(id).clone())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = two_d("matmul", self.value(a).shape())?;
        let (k2, n) = two_d("matmul", self.value(b).shape())?;
        if k != k2 {
            return Err(mismatch("matmul", &[self.value(a).shape(), self.value(b).shape()]));
        }
        let mut out = vec![T::zero(); m * n];
        T::gemm(
            m,
            k,
            n,
            T::one(),
            self.value(a).data(),
            k as isize,
            1,
            self.value(b).data(),
            n as isize,
            1,
            T::zero(),
            &mut out,
            n as isize,
            1,
        );
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(
            Tensor {
                shape: vec![m, n],
                data: out,
            },
            Op::MatMul(a, b),
            ng,
        ))
    }

    fn zip_same(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch(op, &[ta.shape(), tb.shape()]));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Ok(Tensor {
            shape: ta.shape().to_vec(),
            data,
        })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("add", a, b, |x, y| x + y)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(t, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("sub", a, b, |x, y| x - y)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(t, Op::Sub(a, b), ng))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same("mul", a, b, |x, y| x * y)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(t, Op::Mul(a, b), ng))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let ta = self.value(a);
        let t = Tensor {
            shape: ta.shape().to_vec(),
            data: ta.data().iter().map(|&x| x * c).collect(),
        };
        let ng = self.needs(a);
        self.push(t, Op::Scale(a, c), ng)
    }

    /// Adds a bias vector of length `cols` to every row of a 2D tensor.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (m, n) = two_d("add_bias", self.value(x).shape())?;
        if self.value(b).len() != n {
            return Err(mismatch("add_bias", &[self.value(x).shape(), self.value(b).shape()]));
        }
        let bias = self.value(b).data();
        let mut data = self.value(x).data().to_vec();
        for row in data.chunks_exact_mut(n) {
            row.iter_mut().zip(bias).for_each(|(v, &bb)| *v += bb);
        }
        let ng = self.needs(x) || self.needs(b);
        Ok(self.push(
            Tensor {
                shape: vec![m, n],
                data,
            },
            Op::AddBias(x, b),
            ng,
        ))
    }

    /// Column-wise concatenation of 2D tensors with equal row counts.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| mismatch("concat", &[]))?;
        let m = two_d("concat", self.value(first).shape())?.0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = two_d("concat", self.value(p).shape())?;
            if r != m {
                let shapes: Vec<&[usize]> = parts.iter().map(|&q| self.value(q).shape()).collect();
                return Err(mismatch("concat", &shapes));
            }
            widths.push(c);
        }
        let n: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(
            Tensor {
                shape: vec![m, n],
                data,
            },
            Op::Concat(parts.to_vec()),
            ng,
        ))
    }

    fn unary(&mut self, x: Var, kind: Unary) -> Var {
        let tx = self.value(x);
        let f: fn(T) -> T = match kind {
            Unary::Relu => |v| v.max(T::zero()),
            Unary::Elu => |v| if v > T::zero() { v } else { v.exp_m1() },
            Unary::Tanh => |v| v.tanh(),
            Unary::Sin => |v| v.sin(),
            Unary::Cos => |v| v.cos(),
            Unary::Sigmoid => |v| T::one() / (T::one() + (-v).exp()),
        };
        let t = Tensor {
            shape: tx.shape().to_vec(),
            data: tx.data().iter().map(|&v| f(v)).collect(),
        };
        let ng = self.needs(x);
        self.push(t, Op::Unary(x, kind), ng)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, Unary::Relu)
    }

    /// Exponential linear unit with unit scale.
    pub fn elu(&mut self, x: Var) -> Var {
        self.unary(x, Unary::Elu)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, Unary::Tanh)
    }

    pub fn sin(&mut self, x: Var) -> Var {
        self.unary(x, Unary::Sin)
    }

    pub fn cos(&mut self, x: Var) -> Var {
        self.unary(x, Unary::Cos)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, Unary::Sigmoid)
    }

    /// 3x3 convolution, stride 1, zero padding, over `images` stacked feature maps.
    ///
    /// `x` is `[images*h*w, c_in]` (one row per pixel, row-major within an image),
    /// `w` is `[9*c_in, c_out]` with rows ordered `(ky, kx, c_in)`, `b` has `c_out`
    /// entries. The result is `[images*h*w, c_out]`.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, images: usize, h: usize, wd: usize) -> Result<Var> {
        let (rows, cin) = two_d("conv2d", self.value(x).shape())?;
        if rows != images * h * wd {
            return Err(mismatch("conv2d", &[self.value(x).shape(), &[images, h, wd]]));
        }
        let mut src = Vec::with_capacity(rows * 9 * cin);
        for img in 0..images {
            for i in 0..h {
                for j in 0..wd {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let (ii, jj) = ((i + ky) as isize - 1, (j + kx) as isize - 1);
                            let inside = ii >= 0 && jj >= 0 && (ii as usize) < h && (jj as usize) < wd;
                            let pix = (img * h + ii.max(0) as usize) * wd + jj.max(0) as usize;
                            for c in 0..cin {
                                src.push(if inside { pix * cin + c } else { usize::MAX });
                            }
                        }
                    }
                }
            }
        }
        self.conv_unrolled("conv2d", x, w, b, src, 9 * cin)
    }

    /// Kernel-3 convolution, stride 1, zero padding, over `curves` stacked sequences.
    ///
    /// `x` is `[curves*len, c_in]`, `w` is `[3*c_in, c_out]` with rows ordered `(k, c_in)`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var, curves: usize, len: usize) -> Result<Var> {
        let (rows, cin) = two_d("conv1d", self.value(x).shape())?;
        if rows != curves * len {
            return Err(mismatch("conv1d", &[self.value(x).shape(), &[curves, len]]));
        }
        let mut src = Vec::with_capacity(rows * 3 * cin);
        for cv in 0..curves {
            for i in 0..len {
                for k in 0..3 {
                    let ii = (i + k) as isize - 1;
                    let inside = ii >= 0 && (ii as usize) < len;
                    let pt = cv * len + ii.max(0) as usize;
                    for c in 0..cin {
                        src.push(if inside { pt * cin + c } else { usize::MAX });
                    }
                }
            }
        }
        self.conv_unrolled("conv1d", x, w, b, src, 3 * cin)
    }

    fn conv_unrolled(&mut self, op: &'static str, x: Var, w: Var, b: Var, src: Vec<usize>, kdim: usize) -> Result<Var> {
        let (kw, cout) = two_d(op, self.value(w).shape())?;
        if kw != kdim || self.value(b).len() != cout {
            return Err(mismatch(
                op,
                &[self.value(x).shape(), self.value(w).shape(), self.value(b).shape()],
            ));
        }
        let xd = self.value(x).data();
        let cols: Vec<T> = src
            .iter()
            .map(|&s| if s == usize::MAX { T::zero() } else { xd[s] })
            .collect();
        let rows = cols.len() / kdim;
        let bias = self.value(b).data();
        let mut out = Vec::with_capacity(rows * cout);
        for _ in 0..rows {
            out.extend_from_slice(bias);
        }
        T::gemm(
            rows,
            kdim,
            cout,
            T::one(),
            &cols,
            kdim as isize,
            1,
            self.value(w).data(),
            cout as isize,
            1,
            T::one(),
            &mut out,
            cout as isize,
            1,
        );
        let ng = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(
            Tensor {
                shape: vec![rows, cout],
                data: out,
            },
            Op::Conv { x, w, b, cols, src },
            ng,
        ))
    }

    fn check_segments(&self, op: &'static str, x: Var, offsets: &[usize]) -> Result<(usize, usize)> {
        let (m, n) = two_d(op, self.value(x).shape())?;
        let ok = offsets.len() >= 2
            && offsets[0] == 0
            && *offsets.last().unwrap() == m
            && offsets.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(mismatch(op, &[self.value(x).shape(), offsets]));
        }
        Ok((m, n))
    }

    /// Mean over row segments `offsets[s]..offsets[s+1]`; one output row per segment.
    pub fn mean_pool(&mut self, x: Var, offsets: &[usize]) -> Result<Var> {
        let (_, n) = self.check_segments("mean_pool", x, offsets)?;
        let tx = self.value(x);
        let mut data = Vec::with_capacity((offsets.len() - 1) * n);
        for s in offsets.windows(2) {
            let inv = T::one() / T::lit((s[1] - s[0]) as f64);
            for c in 0..n {
                let mut acc = T::zero();
                for r in s[0]..s[1] {
                    acc += tx.data()[r * n + c];
                }
                data.push(acc * inv);
            }
        }
        let ng = self.needs(x);
        Ok(self.push(
            Tensor {
                shape: vec![offsets.len() - 1, n],
                data,
            },
            Op::MeanPool(x, offsets.to_vec()),
            ng,
        ))
    }

    /// Maximum over row segments; ties resolve to the first row.
    pub fn max_pool(&mut self, x: Var, offsets: &[usize]) -> Result<Var> {
        let (_, n) = self.check_segments("max_pool", x, offsets)?;
        let tx = self.value(x);
        let mut data = Vec::with_capacity((offsets.len() - 1) * n);
        let mut arg = Vec::with_capacity((offsets.len() - 1) * n);
        for s in offsets.windows(2) {
            for c in 0..n {
                let mut best = s[0];
                for r in s[0] + 1..s[1] {
                    if tx.data()[r * n + c] > tx.data()[best * n + c] {
                        best = r;
                    }
                }
                data.push(tx.data()[best * n + c]);
                arg.push(best * n + c);
            }
        }
        let ng = self.needs(x);
        Ok(self.push(
            Tensor {
                shape: vec![offsets.len() - 1, n],
                data,
            },
            Op::MaxPool(x, arg),
            ng,
        ))
    }

    pub fn reduce_mean(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let s: T = tx.data().iter().copied().sum();
        let v = s / T::lit(tx.len().max(1) as f64);
        let ng = self.needs(x);
        self.push(Tensor::scalar(v), Op::ReduceMean(x), ng)
    }

    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let diff = self.zip_same("mse", pred, target, |p, t| p - t)?;
        let v = diff.data().iter().map(|&d| d * d).sum::<T>() / T::lit(diff.len().max(1) as f64);
        let ng = self.needs(pred) || self.needs(target);
        Ok(self.push(Tensor::scalar(v), Op::Mse(pred, target), ng))
    }

    /// `mean(w_i * (pred_i - target_i)^2)` with `weights` held constant.
    pub fn weighted_mse(&mut self, pred: Var, target: Var, weights: &[T]) -> Result<Var> {
        let diff = self.zip_same("weighted_mse", pred, target, |p, t| p - t)?;
        if weights.len() != diff.len() {
            return Err(mismatch("weighted_mse", &[diff.shape(), &[weights.len()]]));
        }
        let v = diff.data().iter().zip(weights).map(|(&d, &w)| w * d * d).sum::<T>() / T::lit(diff.len().max(1) as f64);
        let ng = self.needs(pred) || self.needs(target);
        Ok(self.push(Tensor::scalar(v), Op::WeightedMse(pred, target, weights.to_vec()), ng))
    }

    /// Selects rows `idx` of a 2D tensor (rows may repeat).
    pub fn gather_rows(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let (m, n) = two_d("gather_rows", self.value(x).shape())?;
        if idx.iter().any(|&i| i >= m) {
            return Err(mismatch("gather_rows", &[self.value(x).shape(), &[idx.len()]]));
        }
        let tx = self.value(x);
        let mut data = Vec::with_capacity(idx.len() * n);
        for &i in idx {
            data.extend_from_slice(tx.row(i));
        }
        let ng = self.needs(x);
        Ok(self.push(
            Tensor {
                shape: vec![idx.len(), n],
                data,
            },
            Op::GatherRows(x, idx.to_vec()),
            ng,
        ))
    }

    /// Sums row `r` of `x` into output row `idx[r]` of a `[out_rows, cols]` result.
    pub fn scatter_add_rows(&mut self, x: Var, idx: &[usize], out_rows: usize) -> Result<Var> {
        let (m, n) = two_d("scatter_add_rows", self.value(x).shape())?;
        if idx.len() != m || idx.iter().any(|&i| i >= out_rows) {
            return Err(mismatch(
                "scatter_add_rows",
                &[self.value(x).shape(), &[idx.len(), out_rows]],
            ));
        }
        let tx = self.value(x);
        let mut data = vec![T::zero(); out_rows * n];
        for (r, &i) in idx.iter().enumerate() {
            data[i * n..(i + 1) * n]
                .iter_mut()
                .zip(tx.row(r))
                .for_each(|(o, &v)| *o += v);
        }
        let ng = self.needs(x);
        Ok(self.push(
            Tensor {
                shape: vec![out_rows, n],
                data,
            },
            Op::ScatterAddRows(x, idx.to_vec()),
            ng,
        ))
    }

    /// Reverse pass from a scalar `loss`. Clears the tape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>> {
        let shape = self.value(loss).shape().to_vec();
        if self.value(loss).len() != 1 {
            return Err(Error::NonScalarLoss(shape));
        }
        let nodes = std::mem::take(&mut self.nodes);
        let params = std::mem::take(&mut self.params);
        let mut grads: Vec<Option<Vec<T>>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);
        let mut leaves = Vec::new();

        for id in (0..=loss.0).rev() {
            let node = &nodes[id];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            let needs = |v: Var| nodes[v.0].needs_grad;
            let val = |v: Var| &nodes[v.0].value;
            let mut acc = |v: Var, f: &mut dyn FnMut(&mut [T])| {
                if !nodes[v.0].needs_grad {
                    return;
                }
                let slot = grads[v.0].get_or_insert_with(|| vec![T::zero(); nodes[v.0].value.len()]);
                f(slot);
            };
            match &node.op {
                Op::Leaf => {
                    leaves.push((
                        Var(id),
                        Tensor {
                            shape: node.value.shape().to_vec(),
                            data: g,
                        },
                    ));
                }
                &Op::MatMul(a, b) => {
                    let (m, k) = (val(a).shape()[0], val(a).shape()[1]);
                    let n = val(b).shape()[1];
                    if needs(a) {
                        let bd = val(b).data();
                        acc(a, &mut |ga| {
                            T::gemm(
                                m,
                                n,
                                k,
                                T::one(),
                                &g,
                                n as isize,
                                1,
                                bd,
                                1,
                                n as isize,
                                T::one(),
                                ga,
                                k as isize,
                                1,
                            )
                        });
                    }
                    if needs(b) {
                        let ad = val(a).data();
                        acc(b, &mut |gb| {
                            T::gemm(
                                k,
                                m,
                                n,
                                T::one(),
                                ad,
                                1,
                                k as isize,
                                &g,
                                n as isize,
                                1,
                                T::one(),
                                gb,
                                n as isize,
                                1,
                            )
                        });
                    }
                }
                &Op::Add(a, b) => {
                    acc(a, &mut |ga| ga.iter_mut().zip(&g).for_each(|(x, &d)| *x += d));
                    acc(b, &mut |gb| gb.iter_mut().zip(&g).for_each(|(x, &d)| *x += d));
                }
                &Op::Sub(a, b) => {
                    acc(a, &mut |ga| ga.iter_mut().zip(&g).for_each(|(x, &d)| *x += d));
                    acc(b, &mut |gb| gb.iter_mut().zip(&g).for_each(|(x, &d)| *x -= d));
                }
                &Op::Mul(a, b) => {
                    let (ad, bd) = (val(a).data(), val(b).data());
                    acc(a, &mut |ga| {
                        for i in 0..ga.len() {
                            ga[i] += g[i] * bd[i];
                        }
                    });
                    acc(b, &mut |gb| {
                        for i in 0..gb.len() {
                            gb[i] += g[i] * ad[i];
                        }
                    });
                }
                &Op::Scale(a, c) => {
                    acc(a, &mut |ga| ga.iter_mut().zip(&g).for_each(|(x, &d)| *x += d * c));
                }
                &Op::AddBias(x, b) => {
                    acc(x, &mut |gx| gx.iter_mut().zip(&g).for_each(|(v, &d)| *v += d));
                    let n = val(b).len();
                    acc(b, &mut |gb| {
                        for row in g.chunks_exact(n) {
                            gb.iter_mut().zip(row).for_each(|(v, &d)| *v += d);
                        }
                    });
                }
                Op::Concat(parts) => {
                    let total = node.value.cols();
                    let mut off = 0;
                    for &p in parts {
                        let w = val(p).cols();
                        acc(p, &mut |gp| {
                            for (i, row) in gp.chunks_exact_mut(w).enumerate() {
                                row.iter_mut()
                                    .zip(&g[i * total + off..i * total + off + w])
                                    .for_each(|(v, &d)| *v += d);
                            }
                        });
                        off += w;
                    }
                }
                &Op::Unary(x, kind) => {
                    let (xd, yd) = (val(x).data(), node.value.data());
                    acc(x, &mut |gx| {
                        for i in 0..gx.len() {
                            let dydx = match kind {
                                Unary::Relu => {
                                    if xd[i] > T::zero() {
                                        T::one()
                                    } else {
                                        T::zero()
                                    }
                                }
                                Unary::Elu => {
                                    if xd[i] > T::zero() {
                                        T::one()
                                    } else {
                                        yd[i] + T::one()
                                    }
                                }
                                Unary::Tanh => T::one() - yd[i] * yd[i],
                                Unary::Sin => xd[i].cos(),
                                Unary::Cos => -xd[i].sin(),
                                Unary::Sigmoid => yd[i] * (T::one() - yd[i]),
                            };
                            gx[i] += g[i] * dydx;
                        }
                    });
                }
                Op::Conv { x, w, b, cols, src } => {
                    let (x, w, b) = (*x, *w, *b);
                    let (kdim, cout) = (val(w).shape()[0], val(w).shape()[1]);
                    let rows = cols.len() / kdim;
                    acc(b, &mut |gb| {
                        for row in g.chunks_exact(cout) {
                            gb.iter_mut().zip(row).for_each(|(v, &d)| *v += d);
                        }
                    });
                    acc(w, &mut |gw| {
                        T::gemm(
                            kdim,
                            rows,
                            cout,
                            T::one(),
                            cols,
                            1,
                            kdim as isize,
                            &g,
                            cout as isize,
                            1,
                            T::one(),
                            gw,
                            cout as isize,
                            1,
                        )
                    });
                    if needs(x) {
                        let mut gcols = vec![T::zero(); cols.len()];
                        T::gemm(
                            rows,
                            cout,
                            kdim,
                            T::one(),
                            &g,
                            cout as isize,
                            1,
                            val(w).data(),
                            1,
                            cout as isize,
                            T::zero(),
                            &mut gcols,
                            kdim as isize,
                            1,
                        );
                        acc(x, &mut |gx| {
                            for (s, &d) in src.iter().zip(&gcols) {
                                if *s != usize::MAX {
                                    gx[*s] += d;
                                }
                            }
                        });
                    }
                }
                Op::MeanPool(x, offsets) => {
                    let n = node.value.cols();
                    acc(*x, &mut |gx| {
                        for (s, seg) in offsets.windows(2).enumerate() {
                            let inv = T::one() / T::lit((seg[1] - seg[0]) as f64);
                            for r in seg[0]..seg[1] {
                                for c in 0..n {
                                    gx[r * n + c] += g[s * n + c] * inv;
                                }
                            }
                        }
                    });
                }
                Op::MaxPool(x, arg) => {
                    acc(*x, &mut |gx| {
                        for (o, &src) in arg.iter().enumerate() {
                            gx[src] += g[o];
                        }
                    });
                }
                &Op::ReduceMean(x) => {
                    let d = g[0] / T::lit(val(x).len().max(1) as f64);
                    acc(x, &mut |gx| gx.iter_mut().for_each(|v| *v += d));
                }
                &Op::Mse(p, t) => {
                    let (pd, td) = (val(p).data(), val(t).data());
                    let c = T::lit(2.0) * g[0] / T::lit(pd.len().max(1) as f64);
                    acc(p, &mut |gp| {
                        for i in 0..gp.len() {
                            gp[i] += c * (pd[i] - td[i]);
                        }
                    });
                    acc(t, &mut |gt| {
                        for i in 0..gt.len() {
                            gt[i] -= c * (pd[i] - td[i]);
                        }
                    });
                }
                Op::WeightedMse(p, t, w) => {
                    let (p, t) = (*p, *t);
                    let (pd, td) = (val(p).data(), val(t).data());
                    let c = T::lit(2.0) * g[0] / T::lit(pd.len().max(1) as f64);
                    acc(p, &mut |gp| {
                        for i in 0..gp.len() {
                            gp[i] += c * w[i] * (pd[i] - td[i]);
                        }
                    });
                    acc(t, &mut |gt| {
                        for i in 0..gt.len() {
                            gt[i] -= c * w[i] * (pd[i] - td[i]);
                        }
                    });
                }
                Op::GatherRows(x, idx) => {
                    let n = node.value.cols();
                    acc(*x, &mut |gx| {
                        for (r, &i) in idx.iter().enumerate() {
                            gx[i * n..(i + 1) * n]
                                .iter_mut()
                                .zip(&g[r * n..(r + 1) * n])
                                .for_each(|(v, &d)| *v += d);
                        }
                    });
                }
                Op::ScatterAddRows(x, idx) => {
                    let n = node.value.cols();
                    acc(*x, &mut |gx| {
                        for (r, &i) in idx.iter().enumerate() {
                            gx[r * n..(r + 1) * n]
                                .iter_mut()
                                .zip(&g[i * n..(i + 1) * n])
                                .for_each(|(v, &d)| *v += d);
                        }
                    });
                }
            }
        }
        leaves.reverse();
        Ok(Gradients { leaves, params })
    }
}
