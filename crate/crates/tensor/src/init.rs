//! Weight initializers. Feedforward weights use fan-in scaled truncated
//! normals; recurrent weights use (semi-)orthogonal matrices.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn sample_normal<S: Scalar, R: Rng>(rng: &mut R) -> S {
    let v: f64 = StandardNormal.sample(rng);
    S::from_f64(v)
}

/// Normal(0, stddev^2) resampled until |z| <= 2 stddev.
pub fn trunc_normal<S: Scalar, R: Rng>(rng: &mut R, shape: &[usize], stddev: f64) -> Tensor<S> {
    let n: usize = shape.iter().product();
    let data: Vec<S> = (0..n)
        .map(|_| {
            let mut z: f64 = StandardNormal.sample(rng);
            while z.abs() > 2.0 {
                z = StandardNormal.sample(rng);
            }
            S::from_f64(z * stddev)
        })
        .collect();
    Tensor::param(data, shape).expect("finite init")
}

/// Truncated normal with stddev 1/sqrt(fan_in). For a `[in, out]` matrix
/// applied as x*W, fan_in is `in`; for a `[c_out,c_in,k,k]` kernel it is
/// `c_in*k*k`.
pub fn fan_in_trunc_normal<S: Scalar, R: Rng>(rng: &mut R, shape: &[usize]) -> Tensor<S> {
    let fan_in: usize = match shape {
        [rows, _cols] => *rows,
        [_c_out, c_in, kh, kw] => c_in * kh * kw,
        other => other.iter().product(),
    };
    trunc_normal(rng, shape, 1.0 / (fan_in.max(1) as f64).sqrt())
}

pub fn normal<S: Scalar, R: Rng>(rng: &mut R, shape: &[usize], stddev: f64) -> Tensor<S> {
    let n: usize = shape.iter().product();
    let data: Vec<S> = (0..n)
        .map(|_| {
            let z: S = sample_normal(rng);
            z * S::from_f64(stddev)
        })
        .collect();
    Tensor::param(data, shape).expect("finite init")
}

pub fn constant<S: Scalar>(shape: &[usize], value: f64) -> Tensor<S> {
    let n: usize = shape.iter().product();
    Tensor::param(vec![S::from_f64(value); n], shape).expect("finite init")
}

pub fn zeros_param<S: Scalar>(shape: &[usize]) -> Tensor<S> {
    constant(shape, 0.0)
}

/// (Semi-)orthogonal `[rows, cols]` matrix via modified Gram-Schmidt on a
/// Gaussian draw. When rows > cols the columns are orthonormal; when
/// cols > rows the rows are.
pub fn orthogonal<S: Scalar, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor<S> {
    let (n, m, transposed) = if rows >= cols {
        (rows, cols, false)
    } else {
        (cols, rows, true)
    };
    // n x m with n >= m, orthonormalize the m columns
    let mut a = vec![0.0f64; n * m];
    for v in a.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    for j in 0..m {
        for k in 0..j {
            let mut dot = 0.0;
            for i in 0..n {
                dot += a[i * m + j] * a[i * m + k];
            }
            for i in 0..n {
                a[i * m + j] -= dot * a[i * m + k];
            }
        }
        let norm: f64 = (0..n).map(|i| a[i * m + j] * a[i * m + j]).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for i in 0..n {
                a[i * m + j] /= norm;
            }
        } else {
            // degenerate draw: fall back to a unit basis column
            for i in 0..n {
                a[i * m + j] = if i == j { 1.0 } else { 0.0 };
            }
        }
    }
    let mut data = vec![S::zero(); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let v = if transposed { a[j * m + i] } else { a[i * m + j] };
            data[i * cols + j] = S::from_f64(v);
        }
    }
    Tensor::param(data, &[rows, cols]).expect("finite init")
}
