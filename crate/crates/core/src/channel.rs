//! Optimal channel problem
//!
//! ```text
//! R_c[q](λ) = min { E_w{c} : π_X w = q, I(X, Y) ≤ λ }
//! ```
//!
//! For a fixed inverse temperature `β` the minimizer of the Lagrangian
//! `E_w{c} + I(X, Y) / β` has the exponential form
//!
//! ```text
//! w(x, y) = q(x) p(y) exp(-β c(x, y) - κ(β, x)),   κ(β, x) = ln Σ_y p(y) exp(-β c(x, y))
//! ```
//!
//! with `p = π_Y w`. It is computed by Blahut-Arimoto alternating
//! minimization; `β` is then tuned by bisection until the information
//! budget is met.

use rayon::prelude::*;

use crate::bisection::search_beta;
pub use crate::bisection::{BETA_CAP, BISECTION_INFO_TOL};
use crate::error::{Error, Result};
use crate::measures::{mutual_information, CostMatrix, Distribution, InfoBudget, JointDistribution};
use crate::scalar::log_sum_exp;

/// Relative change of the Lagrangian below which Blahut-Arimoto stops.
pub const BA_LAGRANGIAN_TOL: f64 = 1e-12;
/// Relative change of each output atom (above [`NEGLIGIBLE_MASS`]) below
/// which Blahut-Arimoto stops. Checked together with [`BA_LAGRANGIAN_TOL`].
pub const BA_MARGINAL_TOL: f64 = 1e-11;
pub const BA_MAX_ITERATIONS: usize = 10_000;
/// Bound on `max_y ln(p_new(y) / p(y))`, which also bounds `β` times the
/// Lagrangian suboptimality of the current iterate.
pub const BA_GROWTH_TOL: f64 = 1e-10;
/// Weight of the uniform measure mixed into a warm start, so that outputs
/// which are unused at a neighbouring `β` can come back.
const WARM_START_MIX: f64 = 1e-3;
/// Mass below which a cell or atom is treated as empty in form checks.
pub const NEGLIGIBLE_MASS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ChannelSolution {
    /// `w = w(·|x) ⊗ q`.
    pub joint: JointDistribution,
    /// Expected cost `E_w{c}`.
    pub value: f64,
    /// Achieved `I(X, Y)` in nats.
    pub info: f64,
    /// Inverse temperature; `f64::INFINITY` when the information
    /// constraint does not bind.
    pub beta: f64,
    pub output_marginal: Distribution,
    /// Blahut-Arimoto iterations of the returned solve.
    pub ba_iterations: usize,
    pub bisection_iterations: usize,
    /// Largest per-iteration increase of the Lagrangian seen over every
    /// Blahut-Arimoto run performed for this solution.
    pub max_lagrangian_increase: f64,
    pub converged: bool,
}

impl ChannelSolution {
    /// Whether the information constraint was binding.
    pub fn is_active(&self) -> bool {
        self.beta.is_finite()
    }

    /// Largest spread, over `y`, of `ln(w(x,y) / (q(x) p(y))) + β c(x,y)`
    /// for each input `x`: zero exactly when the joint has the exponential
    /// form with normalizer `κ(β, x)`.
    ///
    /// For `β = ∞` the channel must live on the cost minimizers of each row
    /// and be proportional to `p` there.
    pub fn exponential_form_residual(&self, c: &CostMatrix) -> f64 {
        let q = self.joint.row_sums();
        let p = self.output_marginal.mass();
        let mut worst: f64 = 0.0;
        for (x, &qx) in q.iter().enumerate() {
            if qx <= 0.0 {
                continue;
            }
            let row_min = c.row(x).iter().copied().fold(f64::INFINITY, f64::min);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (y, &w) in self.joint.row(x).iter().enumerate() {
                if w <= NEGLIGIBLE_MASS {
                    continue;
                }
                let mut t = w.ln() - qx.ln() - p[y].ln();
                if self.beta.is_finite() {
                    t += self.beta * c.get(x, y);
                } else if c.get(x, y) > row_min + argmin_tol(c) {
                    return f64::INFINITY;
                }
                lo = lo.min(t);
                hi = hi.max(t);
            }
            if hi >= lo {
                worst = worst.max(hi - lo);
            }
        }
        worst
    }
}

fn argmin_tol(c: &CostMatrix) -> f64 {
    1e-12 * c.max_cost().max(1.0)
}

fn validate(q: &Distribution, c: &CostMatrix) -> Result<()> {
    if q.len() != c.rows() {
        return Err(Error::DimensionMismatch {
            expected: c.rows(),
            found: q.len(),
        });
    }
    Ok(())
}

struct BaRun {
    joint: Vec<f64>,
    iterations: usize,
    max_increase: f64,
    converged: bool,
}

/// Blahut-Arimoto at a fixed `β ∈ (0, ∞]`, started from output marginal
/// `init`.
fn blahut_arimoto(q: &[f64], c: &CostMatrix, beta: f64, init: &[f64]) -> BaRun {
    let (m, n) = (c.rows(), c.cols());
    let log_kernel: Vec<f64> = if beta.is_finite() {
        c.values().iter().map(|&v| -beta * v).collect()
    } else {
        // β → ∞: the channel may only use the cheapest outputs of each row.
        let tol = argmin_tol(c);
        (0..m)
            .flat_map(|x| {
                let row = c.row(x);
                let min = row.iter().copied().fold(f64::INFINITY, f64::min);
                row.iter()
                    .map(move |&v| if v <= min + tol { 0.0 } else { f64::NEG_INFINITY })
            })
            .collect()
    };

    let mut p = init.to_vec();
    let mut channel = vec![0.0; m * n];
    let mut prev_lagrangian: Option<f64> = None;
    let mut max_increase = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < BA_MAX_ITERATIONS {
        iterations += 1;
        for x in 0..m {
            let row = &mut channel[x * n..(x + 1) * n];
            if q[x] <= 0.0 {
                row.copy_from_slice(&p);
                continue;
            }
            let logits = (0..n).map(|y| p[y].ln() + log_kernel[x * n + y]);
            let norm = log_sum_exp(logits.clone());
            for (slot, t) in row.iter_mut().zip(logits) {
                *slot = (t - norm).exp();
            }
        }
        let mut p_new = vec![0.0; n];
        for x in 0..m {
            for y in 0..n {
                p_new[y] += q[x] * channel[x * n + y];
            }
        }

        let mut cost = 0.0;
        let mut info = 0.0;
        for x in 0..m {
            if q[x] <= 0.0 {
                continue;
            }
            for y in 0..n {
                let w = channel[x * n + y];
                if w > 0.0 {
                    cost += q[x] * w * c.get(x, y);
                    info += q[x] * w * (w.ln() - p_new[y].ln());
                }
            }
        }
        let lagrangian = if beta.is_finite() { cost + info / beta } else { info };

        let marginal_change = p_new
            .iter()
            .zip(&p)
            .filter(|(&a, _)| a > NEGLIGIBLE_MASS)
            .map(|(a, b)| (a - b).abs() / a)
            .fold(0.0, f64::max);
        let growth = p_new
            .iter()
            .zip(&p)
            .filter(|(_, &b)| b > 0.0)
            .map(|(a, b)| (a / b).ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut settled = false;
        if let Some(prev) = prev_lagrangian {
            max_increase = max_increase.max(lagrangian - prev);
            settled = (prev - lagrangian).abs() <= BA_LAGRANGIAN_TOL * lagrangian.abs().max(NEGLIGIBLE_MASS);
        }
        prev_lagrangian = Some(lagrangian);
        p = p_new;
        if settled && marginal_change <= BA_MARGINAL_TOL && growth <= BA_GROWTH_TOL {
            converged = true;
            break;
        }
    }

    let joint = (0..m)
        .flat_map(|x| channel[x * n..(x + 1) * n].iter().map(move |&w| q[x] * w).collect::<Vec<_>>())
        .collect();
    BaRun {
        joint,
        iterations,
        max_increase,
        converged,
    }
}

fn finish(
    c: &CostMatrix,
    run: BaRun,
    beta: f64,
    bisection_iterations: usize,
    max_increase: f64,
) -> Result<ChannelSolution> {
    let joint = JointDistribution::new(c.rows(), c.cols(), run.joint)?;
    let output_marginal = joint.col_marginal();
    Ok(ChannelSolution {
        value: joint.expected_cost(c),
        info: mutual_information(&joint),
        beta,
        output_marginal,
        joint,
        ba_iterations: run.iterations,
        bisection_iterations,
        max_lagrangian_increase: max_increase,
        converged: run.converged,
    })
}

/// `β = 0`: no information flows, so the channel ignores its input and
/// puts all mass on the output with the least expected cost (lowest index
/// on ties).
fn product_optimum(q: &Distribution, c: &CostMatrix) -> Result<ChannelSolution> {
    let expected: Vec<f64> = (0..c.cols())
        .map(|y| (0..c.rows()).map(|x| q.mass()[x] * c.get(x, y)).sum())
        .collect();
    let best = expected
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(y, _)| y)
        .expect("cost has at least one column");
    let out = Distribution::point_mass(c.cols(), best);
    let joint = JointDistribution::product(q, &out);
    Ok(ChannelSolution {
        value: joint.expected_cost(c),
        info: 0.0,
        beta: 0.0,
        output_marginal: out,
        joint,
        ba_iterations: 0,
        bisection_iterations: 0,
        max_lagrangian_increase: f64::NEG_INFINITY,
        converged: true,
    })
}

fn solve_at_beta_from(q: &Distribution, c: &CostMatrix, beta: f64, init: &[f64]) -> Result<ChannelSolution> {
    let run = blahut_arimoto(q.mass(), c, beta, init);
    let inc = run.max_increase;
    finish(c, run, beta, 0, inc)
}

/// Minimizer of `E_w{c} + I(X, Y) / β` over channels with input `q`.
///
/// `beta = 0` gives the best product coupling; `beta = f64::INFINITY`
/// gives the least-informative channel among those of minimal expected
/// cost.
pub fn solve_ocp_at_beta(q: &Distribution, c: &CostMatrix, beta: f64) -> Result<ChannelSolution> {
    validate(q, c)?;
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::Internal(format!("inverse temperature must be >= 0, got {beta}")));
    }
    if beta == 0.0 {
        return product_optimum(q, c);
    }
    solve_at_beta_from(q, c, beta, Distribution::uniform(c.cols()).mass())
}

/// `R_c[q](λ)` and its optimal channel.
///
/// If the least-informative cost-minimal channel already fits in the
/// budget it is returned with `beta = ∞`. Otherwise `β` is bracketed from
/// `50 / (smallest cost gap)` by doubling and bisected; the returned
/// solution is the bracket end with `info ≤ λ`.
pub fn solve_ocp(q: &Distribution, c: &CostMatrix, budget: InfoBudget) -> Result<ChannelSolution> {
    validate(q, c)?;
    let lambda = budget.lambda();
    let uniform = Distribution::uniform(c.cols());

    let unconstrained = solve_at_beta_from(q, c, f64::INFINITY, uniform.mass())?;
    if unconstrained.info <= lambda {
        return Ok(unconstrained);
    }
    if lambda == 0.0 {
        return product_optimum(q, c);
    }
    let mut max_increase = unconstrained.max_lagrangian_increase;
    let gap = c.smallest_positive_gap().unwrap_or(1.0);
    let found = search_beta(
        lambda,
        gap,
        product_optimum(q, c)?,
        |s: &ChannelSolution| s.info,
        |beta, warm| {
            let init = match warm {
                Some((s, _)) => s.output_marginal.mix(&uniform, WARM_START_MIX)?,
                None => uniform.clone(),
            };
            let sol = solve_at_beta_from(q, c, beta, init.mass())?;
            max_increase = max_increase.max(sol.max_lagrangian_increase);
            Ok(sol)
        },
    )?;
    let mut sol = found.solution;
    sol.bisection_iterations = found.bisections;
    sol.max_lagrangian_increase = max_increase;
    Ok(sol)
}

/// One point of the value-of-information curve.
#[derive(Debug, Clone, PartialEq)]
pub struct VoiPoint {
    pub lambda: f64,
    /// `R_c[q](λ)`.
    pub rate_value: f64,
    /// `V(λ) = R_c[q](0) - R_c[q](λ)`.
    pub value_of_information: f64,
    pub beta: f64,
    pub info: f64,
}

/// `V(λ) = R_c[q](0) - R_c[q](λ)` over an ascending budget grid.
/// Budgets are solved independently and in parallel.
pub fn value_of_information(q: &Distribution, c: &CostMatrix, lambdas: &[f64]) -> Result<Vec<VoiPoint>> {
    validate(q, c)?;
    let budgets = lambdas
        .iter()
        .map(|&l| InfoBudget::new(l))
        .collect::<Result<Vec<_>>>()?;
    if let Some(index) = lambdas.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::UnsortedBudgets { index: index + 1 });
    }
    let baseline = solve_ocp(q, c, InfoBudget::new(0.0)?)?.value;
    budgets
        .par_iter()
        .map(|&budget| {
            let sol = solve_ocp(q, c, budget)?;
            Ok(VoiPoint {
                lambda: budget.lambda(),
                rate_value: sol.value,
                value_of_information: baseline - sol.value,
                beta: sol.beta,
                info: sol.info,
            })
        })
        .collect()
}

/// Result of [`check_translation_invariant_form`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationCheck {
    pub holds: bool,
    /// `(max_x a_x - min_x a_x) / max_x a_x` with `a_x = q(x) exp(-κ(β, x))`.
    pub residual: f64,
}

pub const TRANSLATION_TOL: f64 = 1e-7;

/// Tests whether `q(x) exp(-κ(β, x))` is constant in `x`, i.e. whether the
/// channel reduces to `p(y) exp(-β c(x, y) - κ₀(β))`.
pub fn check_translation_invariant_form(sol: &ChannelSolution, c: &CostMatrix) -> Result<TranslationCheck> {
    if !c.is_square() {
        return Err(Error::NotSquare {
            rows: c.rows(),
            cols: c.cols(),
        });
    }
    if !sol.beta.is_finite() {
        return Err(Error::InfiniteBeta("κ(β, x) is undefined"));
    }
    let q = sol.joint.row_sums();
    let p = sol.output_marginal.mass();
    let a: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(x, &qx)| {
            let kappa = log_sum_exp((0..c.cols()).map(|y| p[y].ln() - sol.beta * c.get(x, y)));
            qx * (-kappa).exp()
        })
        .collect();
    let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    let residual = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    Ok(TranslationCheck {
        holds: residual <= TRANSLATION_TOL,
        residual,
    })
}
