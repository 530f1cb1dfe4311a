//! Central finite differences, the oracle for every analytic gradient.
//!
//! Nothing here touches [`super::Tape::backward`]; it only evaluates the
//! function being differentiated.

use alloc::vec::Vec;

use super::Network;
use crate::tensor::Tensor;

pub const FD_STEP: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-4;

/// Magnitudes below this are compared absolutely: central differences at
/// step 1e-4 carry ~1e-9 truncation error, which swamps a relative
/// comparison of near-zero derivatives.
pub const SCALE_FLOOR: f64 = 1e-3;

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every entry `i` of `at`.
pub fn central_difference(mut f: impl FnMut(&Tensor) -> f64, at: &Tensor, step: f64) -> Tensor {
    let mut probe = at.clone();
    let mut out = Tensor::zeros(at.rows(), at.cols());
    for i in 0..at.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - step;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (plus - minus) / (2.0 * step);
    }
    out
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(SCALE_FLOOR);
    (analytic - numeric).abs() / scale
}

pub fn max_relative_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    analytic.assert_same_shape(numeric);
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Largest relative error between `analytic` (in [`Network::params`] order)
/// and central differences of `loss` taken one parameter entry at a time.
/// `loss` must be deterministic in the network it is given.
pub fn network_max_relative_error(
    net: &Network,
    analytic: &[Tensor],
    mut loss: impl FnMut(&Network) -> f64,
) -> f64 {
    let params: Vec<Tensor> = net.params().into_iter().cloned().collect();
    assert_eq!(params.len(), analytic.len(), "gradient count");
    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    for (k, (p, a)) in params.iter().zip(analytic).enumerate() {
        let numeric = central_difference(
            |value| {
                *probe.params_mut()[k] = value.clone();
                loss(&probe)
            },
            p,
            FD_STEP,
        );
        *probe.params_mut()[k] = p.clone();
        worst = worst.max(max_relative_error(a, &numeric));
    }
    worst
}
