//! Central finite-difference check of analytic gradients, block by block.

use serde::Serialize;

use super::network::{loss_and_gradient, Example, Network};
use super::NnError;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Gradient magnitudes below this are compared absolutely rather than
/// relatively.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct BlockCheck {
    pub name: String,
    pub n_params: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
    pub max_rel_error: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Compares every parameter's analytic gradient with `(L(θ+h) − L(θ−h)) / 2h`.
pub fn finite_diff_check<N: Network>(
    net: &N,
    batch: &[Example<'_>],
    dropout_seed: Option<u64>,
    tolerance: f64,
) -> Result<GradCheckReport, NnError> {
    finite_diff_check_with_step(net, batch, dropout_seed, tolerance, DEFAULT_STEP)
}

pub fn finite_diff_check_with_step<N: Network>(
    net: &N,
    batch: &[Example<'_>],
    dropout_seed: Option<u64>,
    tolerance: f64,
    step: f64,
) -> Result<GradCheckReport, NnError> {
    let (_, analytic) = loss_and_gradient(net, batch, dropout_seed)?;
    let base = net.params_flat();
    let mut probe = net.clone();
    let mut theta = base.clone();

    let mut blocks = Vec::new();
    let mut offset = 0;
    for (name, len) in net.param_blocks() {
        let mut worst = 0.0f64;
        let mut worst_index = 0;
        for k in offset..offset + len {
            theta[k] = base[k] + step;
            probe.set_params_flat(&theta);
            let (plus, _) = loss_and_gradient(&probe, batch, dropout_seed)?;
            theta[k] = base[k] - step;
            probe.set_params_flat(&theta);
            let (minus, _) = loss_and_gradient(&probe, batch, dropout_seed)?;
            theta[k] = base[k];
            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(analytic[k], numeric);
            if err > worst {
                worst = err;
                worst_index = k - offset;
            }
        }
        blocks.push(BlockCheck {
            name,
            n_params: len,
            max_rel_error: worst,
            worst_index,
            passed: worst < tolerance,
        });
        offset += len;
    }
    let max_rel_error = blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        passed: blocks.iter().all(|b| b.passed),
        blocks,
        max_rel_error,
    })
}
