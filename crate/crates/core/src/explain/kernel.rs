//! Kernel SHAP estimator and the permutation-weight Shapley oracle.
//!
//! The coalition value of `S` is the model output averaged over the
//! background set, with players in `S` taken from the instance and the rest
//! from the background row. With all `2^M` coalitions enumerated, the
//! constrained weighted least-squares solution equals the Shapley values.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExplainError, ShapExplanation};
use crate::nn::Matrix;

/// Largest player count for exhaustive enumeration.
pub const EXACT_MAX_PLAYERS: usize = 12;

const RIDGE: f64 = 1e-10;

/// An input whose players can be swapped for a background row's.
pub trait Maskable: Clone + Send + Sync {
    fn n_players(&self) -> usize;

    /// Copy of `self` where players outside `coalition` come from `background`.
    fn masked(&self, background: &Self, coalition: &[bool]) -> Self;

    /// One summary value per player, used for display.
    fn player_values(&self) -> Vec<f64>;
}

impl Maskable for Vec<f64> {
    fn n_players(&self) -> usize {
        self.len()
    }

    fn masked(&self, background: &Self, coalition: &[bool]) -> Self {
        self.iter()
            .zip(background)
            .zip(coalition)
            .map(|((&x, &b), &keep)| if keep { x } else { b })
            .collect()
    }

    fn player_values(&self) -> Vec<f64> {
        self.clone()
    }
}

/// Columns are players: masking a column swaps its whole trajectory.
impl Maskable for Matrix {
    fn n_players(&self) -> usize {
        self.cols()
    }

    fn masked(&self, background: &Self, coalition: &[bool]) -> Self {
        let mut out = self.clone();
        for r in 0..self.rows() {
            for (c, &keep) in coalition.iter().enumerate() {
                if !keep {
                    out.set(r, c, background.get(r, c));
                }
            }
        }
        out
    }

    fn player_values(&self) -> Vec<f64> {
        self.column_means()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of a coalition of size `k` among `m` players.
/// Empty and full coalitions are constraints, not weighted rows.
pub fn shapley_kernel_weight(m: usize, k: usize) -> Result<f64, ExplainError> {
    if k == 0 || k >= m {
        return Err(ExplainError::Constraint(format!(
            "coalition size {k} of {m} is enforced as a constraint"
        )));
    }
    Ok((m - 1) as f64 / (binomial(m, k) * k as f64 * (m - k) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMode {
    /// Exact up to [`EXACT_MAX_PLAYERS`], sampled above.
    Auto,
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub mode: ShapMode,
}

fn check_inputs<X: Maskable>(instance: &X, background: &[X]) -> Result<usize, ExplainError> {
    let m = instance.n_players();
    if m == 0 {
        return Err(ExplainError::Empty("instance has no players".into()));
    }
    if background.is_empty() {
        return Err(ExplainError::Empty("background set is empty".into()));
    }
    if let Some(b) = background.iter().find(|b| b.n_players() != m) {
        return Err(ExplainError::Dimension(format!(
            "background row has {} players, instance has {m}",
            b.n_players()
        )));
    }
    Ok(m)
}

fn coalition_value<X, F>(f: &F, instance: &X, background: &[X], coalition: &[bool]) -> f64
where
    X: Maskable,
    F: Fn(&X) -> f64,
{
    let total: f64 = background.iter().map(|b| f(&instance.masked(b, coalition))).sum();
    total / background.len() as f64
}

fn mask_of(bits: u64, m: usize) -> Vec<bool> {
    (0..m).map(|i| bits >> i & 1 == 1).collect()
}

/// Kernel SHAP: exact when `m <= 12`, otherwise `n_samples` paired samples.
pub fn kernel_shap<X, F>(
    model_fn: F,
    instance: &X,
    background: &[X],
    n_samples: usize,
    seed: u64,
) -> Result<ShapExplanation, ExplainError>
where
    X: Maskable,
    F: Fn(&X) -> f64 + Sync,
{
    let opts = ShapOptions {
        n_samples,
        seed,
        mode: ShapMode::Auto,
    };
    kernel_shap_with(model_fn, instance, background, &opts)
}

pub fn kernel_shap_with<X, F>(
    model_fn: F,
    instance: &X,
    background: &[X],
    opts: &ShapOptions,
) -> Result<ShapExplanation, ExplainError>
where
    X: Maskable,
    F: Fn(&X) -> f64 + Sync,
{
    let m = check_inputs(instance, background)?;
    let exact = match opts.mode {
        ShapMode::Auto => m <= EXACT_MAX_PLAYERS,
        ShapMode::Exact if m > EXACT_MAX_PLAYERS => {
            return Err(ExplainError::TooManyPlayers {
                players: m,
                max: EXACT_MAX_PLAYERS,
            })
        }
        ShapMode::Exact => true,
        ShapMode::Sampled => false,
    };

    let fx = model_fn(instance);
    let phi0 = coalition_value(&model_fn, instance, background, &vec![false; m]);

    // (coalition, weight) rows of the regression, proper subsets only.
    let rows: Vec<(Vec<bool>, f64)> = if exact {
        (1..(1u64 << m) - 1)
            .map(|bits| {
                let mask = mask_of(bits, m);
                let k = mask.iter().filter(|&&b| b).count();
                let w = shapley_kernel_weight(m, k).expect("proper coalition");
                (mask, w)
            })
            .collect()
    } else {
        sample_coalitions(m, opts.n_samples, opts.seed)?
    };

    let values: Vec<f64> = rows
        .par_iter()
        .map(|(mask, _)| coalition_value(&model_fn, instance, background, mask))
        .collect();

    let phi = solve_constrained(m, &rows, &values, phi0, fx);
    Ok(ShapExplanation {
        feature_names: (0..m).map(|i| format!("x{}", i + 1)).collect(),
        phi,
        phi0,
        fx,
        feature_values: instance.player_values(),
        n_coalition_samples: rows.len(),
        exact,
    })
}

/// Paired sampling: a size is drawn with probability proportional to its
/// total kernel mass, then a uniform subset of that size and its complement.
fn sample_coalitions(m: usize, n_samples: usize, seed: u64) -> Result<Vec<(Vec<bool>, f64)>, ExplainError> {
    if m < 2 {
        return Ok(Vec::new());
    }
    if n_samples < 2 {
        return Err(ExplainError::Constraint("sampled mode needs at least 2 coalitions".into()));
    }
    let size_mass: Vec<f64> = (1..m).map(|k| 1.0 / (k * (m - k)) as f64).collect();
    let total: f64 = size_mass.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_samples);
    while rows.len() + 1 < n_samples {
        let mut u = rng.gen::<f64>() * total;
        let mut k = m - 1;
        for (j, &w) in size_mass.iter().enumerate() {
            if u < w {
                k = j + 1;
                break;
            }
            u -= w;
        }
        let mut mask = vec![false; m];
        for i in index::sample(&mut rng, m, k) {
            mask[i] = true;
        }
        let complement: Vec<bool> = mask.iter().map(|b| !b).collect();
        rows.push((mask, 1.0));
        rows.push((complement, 1.0));
    }
    Ok(rows)
}

/// Weighted least squares for `phi` subject to `phi0 + sum(phi) = fx`,
/// eliminating the last player.
fn solve_constrained(m: usize, rows: &[(Vec<bool>, f64)], values: &[f64], phi0: f64, fx: f64) -> Vec<f64> {
    let delta = fx - phi0;
    if m == 1 {
        return vec![delta];
    }
    let n = m - 1;
    let mut ata = vec![0.0; n * n];
    let mut atb = vec![0.0; n];
    let mut a = vec![0.0; n];
    for ((mask, w), v) in rows.iter().zip(values) {
        let zm = if mask[n] { 1.0 } else { 0.0 };
        for (i, ai) in a.iter_mut().enumerate() {
            *ai = (mask[i] as u8 as f64) - zm;
        }
        let y = v - phi0 - zm * delta;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            atb[i] += w * a[i] * y;
            for j in 0..n {
                ata[i * n + j] += w * a[i] * a[j];
            }
        }
    }
    let head = match solve_linear(&ata, &atb, n) {
        Some(x) => x,
        None => {
            log::warn!("singular Kernel SHAP system; applying ridge {RIDGE}");
            let mut reg = ata.clone();
            for i in 0..n {
                reg[i * n + i] += RIDGE;
            }
            solve_linear(&reg, &atb, n).unwrap_or_else(|| vec![0.0; n])
        }
    };
    let last = delta - head.iter().sum::<f64>();
    head.into_iter().chain(std::iter::once(last)).collect()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-13 * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= factor * a[col * n + j];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|j| a[r * n + j] * x[j]).sum();
        x[r] = (b[r] - tail) / a[r * n + r];
    }
    Some(x)
}

/// Shapley values by direct summation over all subsets with the classic
/// `|S|! (M-|S|-1)! / M!` weights.
pub fn exact_shap_enumeration<X, F>(model_fn: F, instance: &X, background: &[X]) -> Result<Vec<f64>, ExplainError>
where
    X: Maskable,
    F: Fn(&X) -> f64 + Sync,
{
    let m = check_inputs(instance, background)?;
    if m > EXACT_MAX_PLAYERS {
        return Err(ExplainError::TooManyPlayers {
            players: m,
            max: EXACT_MAX_PLAYERS,
        });
    }
    let values: Vec<f64> = (0..1u64 << m)
        .into_par_iter()
        .map(|bits| coalition_value(&model_fn, instance, background, &mask_of(bits, m)))
        .collect();
    let fact: Vec<f64> = (0..=m).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    })
    .collect();
    let phi = (0..m)
        .map(|i| {
            let bit = 1u64 << i;
            (0..1u64 << m)
                .filter(|s| s & bit == 0)
                .map(|s| {
                    let size = s.count_ones() as usize;
                    let w = fact[size] * fact[m - size - 1] / fact[m];
                    w * (values[(s | bit) as usize] - values[s as usize])
                })
                .sum()
        })
        .collect();
    Ok(phi)
}
