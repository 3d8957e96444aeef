//! Central finite-difference oracle for gradient checks.
//!
//! Works at f64 only: central differences at f32 lose too many bits to be a
//! usable reference. The oracle never touches the reverse-mode path; it
//! re-runs a caller-supplied forward closure under elementwise
//! perturbations.

use crate::params::ParamMap;
use crate::tensor::Tensor;

/// Central difference gradient of `f` at `x` with step `h`.
pub fn fd_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe);
        probe[i] = x[i] - h;
        let minus = f(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

/// Symmetric relative error: |a - b| / (|a| + |b| + 1e-8).
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs() + 1e-8)
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| rel_err(a, n))
        .fold(0.0, f64::max)
}

#[derive(Debug)]
pub struct ParamCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub params_checked: usize,
    pub elements_checked: usize,
}

/// Checks analytic gradients of every parameter in `params` against central
/// differences of `loss_fn`, which must re-run the full forward pass from
/// the current parameter values and return the scalar loss.
///
/// Analytic gradients are read from the parameters' grad slots, so run the
/// backward pass before calling this.
pub fn check_params_against_fd(
    params: &ParamMap<f64>,
    h: f64,
    mut loss_fn: impl FnMut() -> f64,
) -> ParamCheckReport {
    let mut report = ParamCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        params_checked: 0,
        elements_checked: 0,
    };
    for (name, param) in params.iter() {
        let analytic = param
            .grad()
            .unwrap_or_else(|| panic!("no gradient on parameter {name}"));
        let base = param.value();
        let shape = base.shape().to_vec();
        let data = base.data().to_vec();
        for i in 0..data.len() {
            let mut probe = data.clone();
            probe[i] = data[i] + h;
            param.set(Tensor::param(probe.clone(), &shape).unwrap()).unwrap();
            let plus = loss_fn();
            probe[i] = data[i] - h;
            param.set(Tensor::param(probe, &shape).unwrap()).unwrap();
            let minus = loss_fn();
            let numeric = (plus - minus) / (2.0 * h);
            let err = rel_err(analytic[i], numeric);
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_param = name.to_string();
                report.worst_index = i;
            }
            report.elements_checked += 1;
        }
        param
            .set(Tensor::param(data, &shape).unwrap())
            .unwrap();
        report.params_checked += 1;
    }
    report
}
