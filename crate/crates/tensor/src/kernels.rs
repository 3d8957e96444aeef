//! Pure numeric kernels shared by forward ops and their backward closures.

use crate::scalar::Scalar;

/// out[p x r] += a[p x q] * b[q x r]
pub fn matmul_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], p: usize, q: usize, r: usize) {
    debug_assert_eq!(a.len(), p * q);
    debug_assert_eq!(b.len(), q * r);
    debug_assert_eq!(out.len(), p * r);
    for i in 0..p {
        let arow = &a[i * q..(i + 1) * q];
        let orow = &mut out[i * r..(i + 1) * r];
        for (k, &aik) in arow.iter().enumerate() {
            let brow = &b[k * r..(k + 1) * r];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

/// out[p x q] += a[p x r] * b[q x r]^T
pub fn matmul_nt_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], p: usize, r: usize, q: usize) {
    debug_assert_eq!(a.len(), p * r);
    debug_assert_eq!(b.len(), q * r);
    debug_assert_eq!(out.len(), p * q);
    for i in 0..p {
        let arow = &a[i * r..(i + 1) * r];
        for j in 0..q {
            let brow = &b[j * r..(j + 1) * r];
            let mut acc = S::zero();
            for (&x, &y) in arow.iter().zip(brow) {
                acc += x * y;
            }
            out[i * q + j] += acc;
        }
    }
}

/// out[q x r] += a[p x q]^T * b[p x r]
pub fn matmul_tn_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], p: usize, q: usize, r: usize) {
    debug_assert_eq!(a.len(), p * q);
    debug_assert_eq!(b.len(), p * r);
    debug_assert_eq!(out.len(), q * r);
    for i in 0..p {
        let arow = &a[i * q..(i + 1) * q];
        let brow = &b[i * r..(i + 1) * r];
        for (k, &aik) in arow.iter().enumerate() {
            let orow = &mut out[k * r..(k + 1) * r];
            for (o, &bij) in orow.iter_mut().zip(brow) {
                *o += aik * bij;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Same,
    Valid,
}

/// Output spatial size and leading pad for one axis.
pub fn conv_out_dim(input: usize, k: usize, stride: usize, padding: Padding) -> (usize, usize) {
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let needed = ((out - 1) * stride + k).saturating_sub(input);
            (out, needed / 2)
        }
        Padding::Valid => {
            assert!(input >= k, "valid conv needs input >= kernel");
            ((input - k) / stride + 1, 0)
        }
    }
}

pub struct ConvDims {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
    pub oh: usize,
    pub ow: usize,
    pub pad_y: usize,
    pub pad_x: usize,
}

/// Cross-correlation with zero padding. x: [c_in,h,w], kernel:
/// [c_out,c_in,k,k], out: [c_out,oh,ow] (pre-zeroed or bias-filled).
pub fn conv2d_acc<S: Scalar>(x: &[S], kernel: &[S], out: &mut [S], d: &ConvDims) {
    for co in 0..d.c_out {
        let oplane = &mut out[co * d.oh * d.ow..(co + 1) * d.oh * d.ow];
        for ci in 0..d.c_in {
            let xplane = &x[ci * d.h * d.w..(ci + 1) * d.h * d.w];
            let kbase = (co * d.c_in + ci) * d.k * d.k;
            for ky in 0..d.k {
                for kx in 0..d.k {
                    let kv = kernel[kbase + ky * d.k + kx];
                    if kv == S::zero() {
                        continue;
                    }
                    for oy in 0..d.oh {
                        let iy = (oy * d.stride + ky) as isize - d.pad_y as isize;
                        if iy < 0 || iy >= d.h as isize {
                            continue;
                        }
                        let xrow = &xplane[iy as usize * d.w..(iy as usize + 1) * d.w];
                        let orow = &mut oplane[oy * d.ow..(oy + 1) * d.ow];
                        for (ox, o) in orow.iter_mut().enumerate() {
                            let ix = (ox * d.stride + kx) as isize - d.pad_x as isize;
                            if ix < 0 || ix >= d.w as isize {
                                continue;
                            }
                            *o += kv * xrow[ix as usize];
                        }
                    }
                }
            }
        }
    }
}

/// Gradients of conv2d. Either output may be None to skip that side.
pub fn conv2d_backward<S: Scalar>(
    x: &[S],
    kernel: &[S],
    gout: &[S],
    gx: Option<&mut [S]>,
    gk: Option<&mut [S]>,
    d: &ConvDims,
) {
    let mut gx = gx;
    let mut gk = gk;
    for co in 0..d.c_out {
        let gplane = &gout[co * d.oh * d.ow..(co + 1) * d.oh * d.ow];
        for ci in 0..d.c_in {
            let xplane = &x[ci * d.h * d.w..(ci + 1) * d.h * d.w];
            let kbase = (co * d.c_in + ci) * d.k * d.k;
            for ky in 0..d.k {
                for kx in 0..d.k {
                    let kv = kernel[kbase + ky * d.k + kx];
                    let mut kacc = S::zero();
                    for oy in 0..d.oh {
                        let iy = (oy * d.stride + ky) as isize - d.pad_y as isize;
                        if iy < 0 || iy >= d.h as isize {
                            continue;
                        }
                        let grow = &gplane[oy * d.ow..(oy + 1) * d.ow];
                        let xrow_base = iy as usize * d.w;
                        for (ox, &g) in grow.iter().enumerate() {
                            let ix = (ox * d.stride + kx) as isize - d.pad_x as isize;
                            if ix < 0 || ix >= d.w as isize {
                                continue;
                            }
                            kacc += g * xplane[xrow_base + ix as usize];
                            if let Some(gx) = gx.as_deref_mut() {
                                gx[ci * d.h * d.w + xrow_base + ix as usize] += kv * g;
                            }
                        }
                    }
                    if let Some(gk) = gk.as_deref_mut() {
                        gk[kbase + ky * d.k + kx] += kacc;
                    }
                }
            }
        }
    }
}
