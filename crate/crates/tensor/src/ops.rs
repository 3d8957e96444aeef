//! Differentiable ops, implemented as methods on [`Tape`].
//!
//! Every op validates shapes, checks the result for non-finite values, and
//! (when the tape is recording and any input requires grad) pushes one
//! backward closure. Broadcasting in binary ops is limited to two forms:
//! scalar against tensor, and a row vector (`[d]` or `[1,d]`) against the
//! rows of an `[m,d]` matrix. Anything else is a shape error.

use crate::error::{Result, TensorError};
use crate::kernels::{self, ConvDims, Padding};
use crate::scalar::Scalar;
use crate::tape::Tape;
use crate::tensor::{ensure_finite, Tensor};

#[derive(Clone, Copy, Debug)]
enum Bcast {
    Same,
    LeftScalar,
    RightScalar,
    /// Left is `[m,d]`, right is a row of length d.
    RightRow { m: usize, d: usize },
    /// Right is `[m,d]`, left is a row of length d.
    LeftRow { m: usize, d: usize },
}

fn is_row(shape: &[usize], d: usize) -> bool {
    shape == [d] || shape == [1, d]
}

fn broadcast_plan(
    op: &'static str,
    a: &[usize],
    b: &[usize],
    a_numel: usize,
    b_numel: usize,
) -> Result<(Bcast, Vec<usize>)> {
    if a == b {
        return Ok((Bcast::Same, a.to_vec()));
    }
    if b_numel == 1 {
        return Ok((Bcast::RightScalar, a.to_vec()));
    }
    if a_numel == 1 {
        return Ok((Bcast::LeftScalar, b.to_vec()));
    }
    if let [m, d] = a {
        if is_row(b, *d) {
            return Ok((Bcast::RightRow { m: *m, d: *d }, a.to_vec()));
        }
    }
    if let [m, d] = b {
        if is_row(a, *d) {
            return Ok((Bcast::LeftRow { m: *m, d: *d }, b.to_vec()));
        }
    }
    Err(TensorError::ShapeMismatch {
        op,
        lhs: a.to_vec(),
        rhs: b.to_vec(),
    })
}

/// Reduce a full-size gradient back to the broadcast operand's size.
fn reduce_rows<S: Scalar>(g: &[S], m: usize, d: usize) -> Vec<S> {
    let mut out = vec![S::zero(); d];
    for i in 0..m {
        for (o, &v) in out.iter_mut().zip(&g[i * d..(i + 1) * d]) {
            *o += v;
        }
    }
    out
}

fn lane_geometry(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer: usize = shape[..axis].iter().product();
    let k = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, k, inner)
}

impl<S: Scalar> Tape<S> {
    fn finish(
        &self,
        op: &'static str,
        data: Vec<S>,
        shape: Vec<usize>,
        inputs: &[&Tensor<S>],
    ) -> Result<Tensor<S>> {
        ensure_finite(op, &data)?;
        let rg = self.is_recording() && inputs.iter().any(|t| t.requires_grad());
        Ok(Tensor::new_internal(data, shape, rg))
    }

    // ── linear algebra ──────────────────────────────────────────────

    pub fn matmul(&self, a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
        let (p, q) = a.as_2d("matmul")?;
        let (q2, r) = b.as_2d("matmul")?;
        if q != q2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let mut data = vec![S::zero(); p * r];
        kernels::matmul_acc(a.data(), b.data(), &mut data, p, q, r);
        let out = self.finish("matmul", data, vec![p, r], &[a, b])?;
        if out.requires_grad() {
            let (a, b, o) = (a.clone(), b.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                if a.requires_grad() {
                    let mut ga = vec![S::zero(); p * q];
                    kernels::matmul_nt_acc(g, b.data(), &mut ga, p, r, q);
                    a.accumulate_grad(&ga);
                }
                if b.requires_grad() {
                    let mut gb = vec![S::zero(); q * r];
                    kernels::matmul_tn_acc(a.data(), g, &mut gb, p, q, r);
                    b.accumulate_grad(&gb);
                }
            });
        }
        Ok(out)
    }

    pub fn transpose(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let (p, q) = x.as_2d("transpose")?;
        let xd = x.data();
        let mut data = vec![S::zero(); p * q];
        for i in 0..p {
            for j in 0..q {
                data[j * p + i] = xd[i * q + j];
            }
        }
        let out = self.finish("transpose", data, vec![q, p], &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let mut gx = vec![S::zero(); p * q];
                for j in 0..q {
                    for i in 0..p {
                        gx[i * q + j] = g[j * p + i];
                    }
                }
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    // ── convolution ─────────────────────────────────────────────────

    /// Cross-correlation of `x: [c_in,h,w]` with `kernel:
    /// [c_out,c_in,k,k]`, zero padding, optional per-channel bias.
    pub fn conv2d(
        &self,
        x: &Tensor<S>,
        kernel: &Tensor<S>,
        bias: Option<&Tensor<S>>,
        stride: usize,
        padding: Padding,
    ) -> Result<Tensor<S>> {
        let (c_in, h, w) = x.as_3d("conv2d")?;
        let kshape = kernel.shape();
        let [c_out, kc_in, k, k2] = kshape else {
            return Err(TensorError::BadShape {
                op: "conv2d",
                expected: "rank-4 kernel [c_out,c_in,k,k]".into(),
                got: kshape.to_vec(),
            });
        };
        let (c_out, kc_in, k) = (*c_out, *kc_in, *k);
        if k != *k2 || kc_in != c_in {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                lhs: x.shape().to_vec(),
                rhs: kshape.to_vec(),
            });
        }
        if stride == 0 {
            return Err(TensorError::BadShape {
                op: "conv2d",
                expected: "stride >= 1".into(),
                got: vec![stride],
            });
        }
        if padding == Padding::Same && k % 2 == 0 {
            return Err(TensorError::BadShape {
                op: "conv2d",
                expected: "odd kernel for SAME padding".into(),
                got: vec![k],
            });
        }
        if let Some(b) = bias {
            if b.numel() != c_out {
                return Err(TensorError::ShapeMismatch {
                    op: "conv2d bias",
                    lhs: vec![c_out],
                    rhs: b.shape().to_vec(),
                });
            }
        }
        let (oh, pad_y) = kernels::conv_out_dim(h, k, stride, padding);
        let (ow, pad_x) = kernels::conv_out_dim(w, k, stride, padding);
        let dims = ConvDims {
            c_in,
            h,
            w,
            c_out,
            k,
            stride,
            oh,
            ow,
            pad_y,
            pad_x,
        };
        let mut data = vec![S::zero(); c_out * oh * ow];
        if let Some(b) = bias {
            for (co, &bv) in b.data().iter().enumerate() {
                data[co * oh * ow..(co + 1) * oh * ow].fill(bv);
            }
        }
        kernels::conv2d_acc(x.data(), kernel.data(), &mut data, &dims);
        let mut inputs = vec![x, kernel];
        if let Some(b) = bias {
            inputs.push(b);
        }
        let out = self.finish("conv2d", data, vec![c_out, oh, ow], &inputs)?;
        if out.requires_grad() {
            let (x, kernel, o) = (x.clone(), kernel.clone(), out.clone());
            let bias = bias.cloned();
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let mut gx = x
                    .requires_grad()
                    .then(|| vec![S::zero(); x.numel()]);
                let mut gk = kernel
                    .requires_grad()
                    .then(|| vec![S::zero(); kernel.numel()]);
                kernels::conv2d_backward(
                    x.data(),
                    kernel.data(),
                    g,
                    gx.as_deref_mut(),
                    gk.as_deref_mut(),
                    &dims,
                );
                if let Some(gx) = gx {
                    x.accumulate_grad(&gx);
                }
                if let Some(gk) = gk {
                    kernel.accumulate_grad(&gk);
                }
                if let Some(b) = &bias {
                    if b.requires_grad() {
                        let plane = dims.oh * dims.ow;
                        let gb: Vec<S> = (0..dims.c_out)
                            .map(|co| g[co * plane..(co + 1) * plane].iter().copied().sum())
                            .collect();
                        b.accumulate_grad(&gb);
                    }
                }
            });
        }
        Ok(out)
    }

    /// Top-left spatial crop of `x: [c,h,w]` to `[c,new_h,new_w]`.
    pub fn crop2d(&self, x: &Tensor<S>, new_h: usize, new_w: usize) -> Result<Tensor<S>> {
        let (c, h, w) = x.as_3d("crop2d")?;
        if new_h > h || new_w > w {
            return Err(TensorError::BadShape {
                op: "crop2d",
                expected: format!("crop within {h}x{w}"),
                got: vec![new_h, new_w],
            });
        }
        let xd = x.data();
        let mut data = vec![S::zero(); c * new_h * new_w];
        for ci in 0..c {
            for y in 0..new_h {
                let src = ci * h * w + y * w;
                let dst = ci * new_h * new_w + y * new_w;
                data[dst..dst + new_w].copy_from_slice(&xd[src..src + new_w]);
            }
        }
        let out = self.finish("crop2d", data, vec![c, new_h, new_w], &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let mut gx = vec![S::zero(); c * h * w];
                for ci in 0..c {
                    for y in 0..new_h {
                        let src = ci * new_h * new_w + y * new_w;
                        let dst = ci * h * w + y * w;
                        gx[dst..dst + new_w].copy_from_slice(&g[src..src + new_w]);
                    }
                }
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    /// Reinterprets `[c,h,w]` as a feature matrix `[h*w, c]`: one row per
    /// spatial position (row-major over y then x), one column per channel.
    pub fn channels_to_rows(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let (c, h, w) = x.as_3d("channels_to_rows")?;
        let m = h * w;
        let xd = x.data();
        let mut data = vec![S::zero(); m * c];
        for ci in 0..c {
            for pos in 0..m {
                data[pos * c + ci] = xd[ci * m + pos];
            }
        }
        let out = self.finish("channels_to_rows", data, vec![m, c], &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let mut gx = vec![S::zero(); c * m];
                for ci in 0..c {
                    for pos in 0..m {
                        gx[ci * m + pos] = g[pos * c + ci];
                    }
                }
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    // ── elementwise ─────────────────────────────────────────────────

    pub fn add(&self, a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
        self.add_sub(a, b, false)
    }

    pub fn sub(&self, a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
        self.add_sub(a, b, true)
    }

    fn add_sub(&self, a: &Tensor<S>, b: &Tensor<S>, negate: bool) -> Result<Tensor<S>> {
        let op: &'static str = if negate { "sub" } else { "add" };
        let (plan, shape) = broadcast_plan(op, a.shape(), b.shape(), a.numel(), b.numel())?;
        let (ad, bd) = (a.data(), b.data());
        let sgn = if negate { -S::one() } else { S::one() };
        let data: Vec<S> = match plan {
            Bcast::Same => ad.iter().zip(bd).map(|(&x, &y)| x + sgn * y).collect(),
            Bcast::RightScalar => ad.iter().map(|&x| x + sgn * bd[0]).collect(),
            Bcast::LeftScalar => bd.iter().map(|&y| ad[0] + sgn * y).collect(),
            Bcast::RightRow { m, d } => {
                let mut v = Vec::with_capacity(m * d);
                for i in 0..m {
                    for j in 0..d {
                        v.push(ad[i * d + j] + sgn * bd[j]);
                    }
                }
                v
            }
            Bcast::LeftRow { m, d } => {
                let mut v = Vec::with_capacity(m * d);
                for i in 0..m {
                    for j in 0..d {
                        v.push(ad[j] + sgn * bd[i * d + j]);
                    }
                }
                v
            }
        };
        let out = self.finish(op, data, shape, &[a, b])?;
        if out.requires_grad() {
            let (a, b, o) = (a.clone(), b.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                if a.requires_grad() {
                    match plan {
                        Bcast::LeftScalar => a.accumulate_grad(&[g.iter().copied().sum()]),
                        Bcast::LeftRow { m, d } => a.accumulate_grad(&reduce_rows(g, m, d)),
                        _ => a.accumulate_grad(g),
                    }
                }
                if b.requires_grad() {
                    let gb: Vec<S> = match plan {
                        Bcast::RightScalar => vec![g.iter().copied().sum()],
                        Bcast::RightRow { m, d } => reduce_rows(g, m, d),
                        _ => g.clone(),
                    };
                    if negate {
                        let neg: Vec<S> = gb.iter().map(|&v| -v).collect();
                        b.accumulate_grad(&neg);
                    } else {
                        b.accumulate_grad(&gb);
                    }
                }
            });
        }
        Ok(out)
    }

    pub fn mul(&self, a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
        let (plan, shape) = broadcast_plan("mul", a.shape(), b.shape(), a.numel(), b.numel())?;
        let (ad, bd) = (a.data(), b.data());
        let data: Vec<S> = match plan {
            Bcast::Same => ad.iter().zip(bd).map(|(&x, &y)| x * y).collect(),
            Bcast::RightScalar => ad.iter().map(|&x| x * bd[0]).collect(),
            Bcast::LeftScalar => bd.iter().map(|&y| ad[0] * y).collect(),
            Bcast::RightRow { m, d } => {
                let mut v = Vec::with_capacity(m * d);
                for i in 0..m {
                    for j in 0..d {
                        v.push(ad[i * d + j] * bd[j]);
                    }
                }
                v
            }
            Bcast::LeftRow { m, d } => {
                let mut v = Vec::with_capacity(m * d);
                for i in 0..m {
                    for j in 0..d {
                        v.push(ad[j] * bd[i * d + j]);
                    }
                }
                v
            }
        };
        let out = self.finish("mul", data, shape, &[a, b])?;
        if out.requires_grad() {
            let (a, b, o) = (a.clone(), b.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let (ad, bd) = (a.data(), b.data());
                if a.requires_grad() {
                    let ga: Vec<S> = match plan {
                        Bcast::Same => g.iter().zip(bd).map(|(&gv, &y)| gv * y).collect(),
                        Bcast::RightScalar => g.iter().map(|&gv| gv * bd[0]).collect(),
                        Bcast::LeftScalar => {
                            vec![g.iter().zip(bd).map(|(&gv, &y)| gv * y).sum()]
                        }
                        Bcast::RightRow { m, d } => {
                            let mut v = Vec::with_capacity(m * d);
                            for i in 0..m {
                                for j in 0..d {
                                    v.push(g[i * d + j] * bd[j]);
                                }
                            }
                            v
                        }
                        Bcast::LeftRow { m, d } => {
                            let mut v = vec![S::zero(); d];
                            for i in 0..m {
                                for j in 0..d {
                                    v[j] += g[i * d + j] * bd[i * d + j];
                                }
                            }
                            v
                        }
                    };
                    a.accumulate_grad(&ga);
                }
                if b.requires_grad() {
                    let gb: Vec<S> = match plan {
                        Bcast::Same => g.iter().zip(ad).map(|(&gv, &x)| gv * x).collect(),
                        Bcast::LeftScalar => g.iter().map(|&gv| gv * ad[0]).collect(),
                        Bcast::RightScalar => {
                            vec![g.iter().zip(ad).map(|(&gv, &x)| gv * x).sum()]
                        }
                        Bcast::LeftRow { m, d } => {
                            let mut v = Vec::with_capacity(m * d);
                            for i in 0..m {
                                for j in 0..d {
                                    v.push(g[i * d + j] * ad[j]);
                                }
                            }
                            v
                        }
                        Bcast::RightRow { m, d } => {
                            let mut v = vec![S::zero(); d];
                            for i in 0..m {
                                for j in 0..d {
                                    v[j] += g[i * d + j] * ad[i * d + j];
                                }
                            }
                            v
                        }
                    };
                    b.accumulate_grad(&gb);
                }
            });
        }
        Ok(out)
    }

    pub fn scale(&self, x: &Tensor<S>, c: S) -> Result<Tensor<S>> {
        let data: Vec<S> = x.data().iter().map(|&v| v * c).collect();
        let out = self.finish("scale", data, x.shape().to_vec(), &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let gx: Vec<S> = g.iter().map(|&v| v * c).collect();
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    pub fn sigmoid(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let half = S::from_f64(0.5);
        // 0.5*(1+tanh(x/2)) gives exactly 0.5 at x=0 and is stable at both tails
        let data: Vec<S> = x
            .data()
            .iter()
            .map(|&v| half * ((v * half).tanh() + S::one()))
            .collect();
        let out = self.finish("sigmoid", data, x.shape().to_vec(), &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let gx: Vec<S> = g
                    .iter()
                    .zip(o.data())
                    .map(|(&gv, &y)| gv * y * (S::one() - y))
                    .collect();
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    pub fn tanh(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let data: Vec<S> = x.data().iter().map(|&v| v.tanh()).collect();
        let out = self.finish("tanh", data, x.shape().to_vec(), &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let gx: Vec<S> = g
                    .iter()
                    .zip(o.data())
                    .map(|(&gv, &y)| gv * (S::one() - y * y))
                    .collect();
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    pub fn relu(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let data: Vec<S> = x
            .data()
            .iter()
            .map(|&v| if v > S::zero() { v } else { S::zero() })
            .collect();
        let out = self.finish("relu", data, x.shape().to_vec(), &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let gx: Vec<S> = g
                    .iter()
                    .zip(x.data())
                    .map(|(&gv, &v)| if v > S::zero() { gv } else { S::zero() })
                    .collect();
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    // ── normalizers ─────────────────────────────────────────────────

    pub fn softmax(&self, x: &Tensor<S>, axis: usize) -> Result<Tensor<S>> {
        if axis >= x.rank() {
            return Err(TensorError::AxisOutOfRange {
                op: "softmax",
                axis,
                rank: x.rank(),
            });
        }
        let shape = x.shape().to_vec();
        let (outer, k, inner) = lane_geometry(&shape, axis);
        let xd = x.data();
        let mut data = vec![S::zero(); xd.len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * k * inner + i;
                let mut mx = S::neg_infinity();
                for j in 0..k {
                    mx = mx.max(xd[base + j * inner]);
                }
                let mut sum = S::zero();
                for j in 0..k {
                    let e = (xd[base + j * inner] - mx).exp();
                    data[base + j * inner] = e;
                    sum += e;
                }
                for j in 0..k {
                    data[base + j * inner] /= sum;
                }
            }
        }
        let out = self.finish("softmax", data, shape.clone(), &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let y = o.data();
                let mut gx = vec![S::zero(); y.len()];
                for ob in 0..outer {
                    for i in 0..inner {
                        let base = ob * k * inner + i;
                        let mut dot = S::zero();
                        for j in 0..k {
                            dot += g[base + j * inner] * y[base + j * inner];
                        }
                        for j in 0..k {
                            let idx = base + j * inner;
                            gx[idx] = y[idx] * (g[idx] - dot);
                        }
                    }
                }
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    pub fn log_softmax(&self, x: &Tensor<S>, axis: usize) -> Result<Tensor<S>> {
        if axis >= x.rank() {
            return Err(TensorError::AxisOutOfRange {
                op: "log_softmax",
                axis,
                rank: x.rank(),
            });
        }
        let shape = x.shape().to_vec();
        let (outer, k, inner) = lane_geometry(&shape, axis);
        let xd = x.data();
        let mut data = vec![S::zero(); xd.len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * k * inner + i;
                let mut mx = S::neg_infinity();
                for j in 0..k {
                    mx = mx.max(xd[base + j * inner]);
                }
                let mut sum = S::zero();
                for j in 0..k {
                    sum += (xd[base + j * inner] - mx).exp();
                }
                let lse = mx + sum.ln();
                for j in 0..k {
                    data[base + j * inner] = xd[base + j * inner] - lse;
                }
            }
        }
        let out = self.finish("log_softmax", data, shape.clone(), &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let y = o.data();
                let mut gx = vec![S::zero(); y.len()];
                for ob in 0..outer {
                    for i in 0..inner {
                        let base = ob * k * inner + i;
                        let mut gsum = S::zero();
                        for j in 0..k {
                            gsum += g[base + j * inner];
                        }
                        for j in 0..k {
                            let idx = base + j * inner;
                            gx[idx] = g[idx] - y[idx].exp() * gsum;
                        }
                    }
                }
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    // ── reductions / layout ─────────────────────────────────────────

    pub fn sum(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let total: S = x.data().iter().copied().sum();
        let out = self.finish("sum", vec![total], vec![1], &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let gx = vec![g[0]; x.numel()];
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }

    pub fn reshape(&self, x: &Tensor<S>, shape: &[usize]) -> Result<Tensor<S>> {
        let numel: usize = shape.iter().product();
        if numel != x.numel() {
            return Err(TensorError::LengthMismatch {
                len: x.numel(),
                shape: shape.to_vec(),
            });
        }
        let out = self.finish("reshape", x.data().to_vec(), shape.to_vec(), &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                x.accumulate_grad(g);
            });
        }
        Ok(out)
    }

    /// Row-major flatten to a single row `[1, numel]`.
    pub fn flatten(&self, x: &Tensor<S>) -> Result<Tensor<S>> {
        self.reshape(x, &[1, x.numel()])
    }

    pub fn concat(&self, parts: &[&Tensor<S>], axis: usize) -> Result<Tensor<S>> {
        let first = parts.first().ok_or(TensorError::BadShape {
            op: "concat",
            expected: "at least one input".into(),
            got: vec![],
        })?;
        let rank = first.rank();
        if axis >= rank {
            return Err(TensorError::AxisOutOfRange {
                op: "concat",
                axis,
                rank,
            });
        }
        let mut axis_total = 0;
        for p in parts {
            if p.rank() != rank
                || p.shape()[..axis] != first.shape()[..axis]
                || p.shape()[axis + 1..] != first.shape()[axis + 1..]
            {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: first.shape().to_vec(),
                    rhs: p.shape().to_vec(),
                });
            }
            axis_total += p.shape()[axis];
        }
        let mut shape = first.shape().to_vec();
        shape[axis] = axis_total;
        let (outer, _, inner) = lane_geometry(&shape, axis);
        let mut data = vec![S::zero(); outer * axis_total * inner];
        let mut offsets = Vec::with_capacity(parts.len());
        let mut off = 0;
        for p in parts {
            offsets.push(off);
            let ka = p.shape()[axis];
            let block = ka * inner;
            let pd = p.data();
            for o in 0..outer {
                let dst = o * axis_total * inner + off * inner;
                data[dst..dst + block].copy_from_slice(&pd[o * block..(o + 1) * block]);
            }
            off += ka;
        }
        let refs: Vec<&Tensor<S>> = parts.to_vec();
        let out = self.finish("concat", data, shape, &refs)?;
        if out.requires_grad() {
            let parts: Vec<Tensor<S>> = parts.iter().map(|p| (*p).clone()).collect();
            let o = out.clone();
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                for (p, &off) in parts.iter().zip(&offsets) {
                    if !p.requires_grad() {
                        continue;
                    }
                    let ka = p.shape()[axis];
                    let block = ka * inner;
                    let mut gp = vec![S::zero(); p.numel()];
                    for o_i in 0..outer {
                        let src = o_i * axis_total * inner + off * inner;
                        gp[o_i * block..(o_i + 1) * block]
                            .copy_from_slice(&g[src..src + block]);
                    }
                    p.accumulate_grad(&gp);
                }
            });
        }
        Ok(out)
    }

    /// Contiguous slice `[start, end)` along `axis`.
    pub fn slice(
        &self,
        x: &Tensor<S>,
        axis: usize,
        start: usize,
        end: usize,
    ) -> Result<Tensor<S>> {
        if axis >= x.rank() {
            return Err(TensorError::AxisOutOfRange {
                op: "slice",
                axis,
                rank: x.rank(),
            });
        }
        let k = x.shape()[axis];
        if start > end || end > k {
            return Err(TensorError::BadShape {
                op: "slice",
                expected: format!("0 <= start <= end <= {k}"),
                got: vec![start, end],
            });
        }
        let mut shape = x.shape().to_vec();
        shape[axis] = end - start;
        let (outer, _, inner) = lane_geometry(x.shape(), axis);
        let block = (end - start) * inner;
        let xd = x.data();
        let mut data = vec![S::zero(); outer * block];
        for o in 0..outer {
            let src = o * k * inner + start * inner;
            data[o * block..(o + 1) * block].copy_from_slice(&xd[src..src + block]);
        }
        let out = self.finish("slice", data, shape, &[x])?;
        if out.requires_grad() {
            let (x, o) = (x.clone(), out.clone());
            self.record(move || {
                let gref = o.grad_ref();
                let Some(g) = gref.as_ref() else { return };
                let mut gx = vec![S::zero(); x.numel()];
                for o_i in 0..outer {
                    let dst = o_i * k * inner + start * inner;
                    gx[dst..dst + block].copy_from_slice(&g[o_i * block..(o_i + 1) * block]);
                }
                x.accumulate_grad(&gx);
            });
        }
        Ok(out)
    }
}
