//! Information-constrained optimal transport
//!
//! ```text
//! K_c[p, q](λ) = min { E_w{c} : π_X w = q, π_Y w = p, I(X, Y) ≤ λ }
//! ```
//!
//! When the budget binds the optimum is a Gibbs coupling
//! `w = a(x) b(y) q(x) p(y) exp(-β c(x, y))`, i.e. entropic optimal transport
//! against the reference `q ⊗ p`. The scalings are found by log-domain
//! alternating marginal scaling (Sinkhorn) and `β` by the same bracketing
//! and bisection as the channel solver.
//!
//! This module also compares the optimal channel with the constrained
//! transport plan: the channel value can only be lower, and the two agree
//! exactly when the transport output marginal is the channel's own.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};

use crate::bisection::search_beta;
use crate::channel::solve_ocp;
use crate::error::{Error, Result};
use crate::measures::{
    cross_information, kl_divergence, mutual_information, CostMatrix, Distribution, InfoBudget,
    JointDistribution,
};
use crate::scalar::{log_sum_exp, max_abs_diff};
use crate::transport_lp::{northwest_corner, solve_otp, TransportSolution};

/// Scaling stops once both marginals are within this of their targets.
pub const SCALING_TOL: f64 = 1e-10;
pub const SCALING_MAX_ITERATIONS: usize = 50_000;
/// Tolerance on `f(y) - g(x) = c(x, y)` for a cell to count as tight.
const TIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ConstrainedTransportSolution {
    pub plan: JointDistribution,
    pub value: f64,
    pub info: f64,
    /// Inverse temperature of the Gibbs form; `f64::INFINITY` when the
    /// budget does not bind.
    pub beta: f64,
    pub active: bool,
    pub scaling_iterations: usize,
    pub bisection_iterations: usize,
    pub converged: bool,
    /// Log scalings `(φ, ψ)` with
    /// `ln w(x, y) = ln q(x) + ln p(y) - β c(x, y) + φ(x) + ψ(y)`,
    /// present for Gibbs solutions with finite `β`.
    pub log_scalings: Option<(Vec<f64>, Vec<f64>)>,
}

impl ConstrainedTransportSolution {
    /// Largest deviation of `ln w` from its Gibbs form over cells with mass
    /// above `1e-12`; zero for solutions without a Gibbs form.
    pub fn gibbs_residual(&self, q: &Distribution, p: &Distribution, c: &CostMatrix) -> f64 {
        let Some((phi, psi)) = &self.log_scalings else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for x in 0..c.rows() {
            for y in 0..c.cols() {
                let w = self.plan.get(x, y);
                if w > 1e-12 {
                    let model = q.mass()[x].ln() + p.mass()[y].ln() - self.beta * c.get(x, y) + phi[x] + psi[y];
                    worst = worst.max((w.ln() - model).abs());
                }
            }
        }
        worst
    }
}

struct Scaled {
    plan: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Log-domain Sinkhorn for the kernel `exp(log_kernel)` against `q ⊗ p`.
/// Atoms of zero mass are left out and keep zero rows/columns.
fn scale(q: &[f64], p: &[f64], log_kernel: &[f64], psi_init: Option<Vec<f64>>) -> Scaled {
    let (m, n) = (q.len(), p.len());
    let rows: Vec<usize> = (0..m).filter(|&x| q[x] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&y| p[y] > 0.0).collect();
    let lq: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    let lp: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let mut phi = vec![0.0; m];
    let mut psi = psi_init.unwrap_or_else(|| vec![0.0; n]);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < SCALING_MAX_ITERATIONS {
        iterations += 1;
        for &x in &rows {
            phi[x] = -log_sum_exp(cols.iter().map(|&y| lp[y] + log_kernel[x * n + y] + psi[y]));
        }
        for &y in &cols {
            psi[y] = -log_sum_exp(rows.iter().map(|&x| lq[x] + log_kernel[x * n + y] + phi[x]));
        }
        // Columns are exact after the ψ update; measure the rows.
        let violation = rows
            .iter()
            .map(|&x| {
                let s = log_sum_exp(cols.iter().map(|&y| lp[y] + log_kernel[x * n + y] + psi[y])) + phi[x];
                (q[x] * s.exp() - q[x]).abs()
            })
            .fold(0.0, f64::max);
        if violation <= SCALING_TOL {
            converged = true;
            break;
        }
    }

    let mut plan = vec![0.0; m * n];
    for &x in &rows {
        for &y in &cols {
            plan[x * n + y] = (lq[x] + lp[y] + log_kernel[x * n + y] + phi[x] + psi[y]).exp();
        }
    }
    Scaled {
        plan,
        phi,
        psi,
        iterations,
        converged,
    }
}

fn validate(q: &Distribution, p: &Distribution, c: &CostMatrix) -> Result<()> {
    if q.len() != c.rows() {
        return Err(Error::DimensionMismatch {
            expected: c.rows(),
            found: q.len(),
        });
    }
    if p.len() != c.cols() {
        return Err(Error::DimensionMismatch {
            expected: c.cols(),
            found: p.len(),
        });
    }
    Ok(())
}

fn unconstrained(
    plan: JointDistribution,
    c: &CostMatrix,
    iterations: usize,
    converged: bool,
) -> ConstrainedTransportSolution {
    ConstrainedTransportSolution {
        value: plan.expected_cost(c),
        info: mutual_information(&plan),
        plan,
        beta: f64::INFINITY,
        active: false,
        scaling_iterations: iterations,
        bisection_iterations: 0,
        converged,
        log_scalings: None,
    }
}

/// Least-informative plan among the LP optima: scaling restricted to the
/// cells made tight by the optimal potentials. Every optimal plan lives on
/// those cells, and every coupling supported there is optimal.
fn least_informative_optimum(
    q: &Distribution,
    p: &Distribution,
    c: &CostMatrix,
    lp: &TransportSolution,
) -> Result<ConstrainedTransportSolution> {
    let tol = TIGHT_TOL * c.max_cost().max(1.0);
    let f = &lp.potentials.f;
    let g = &lp.potentials.g;
    let log_kernel: Vec<f64> = (0..c.rows())
        .flat_map(|x| {
            (0..c.cols()).map(move |y| {
                if (f[y] - g[x] - c.get(x, y)).abs() <= tol {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            })
        })
        .collect();
    let scaled = scale(q.mass(), p.mass(), &log_kernel, None);
    let plan = JointDistribution::new(c.rows(), c.cols(), scaled.plan)?;
    Ok(unconstrained(plan, c, scaled.iterations, scaled.converged))
}

fn gibbs(
    q: &Distribution,
    p: &Distribution,
    c: &CostMatrix,
    beta: f64,
    warm: Option<(&ConstrainedTransportSolution, f64)>,
) -> Result<ConstrainedTransportSolution> {
    let log_kernel: Vec<f64> = c.values().iter().map(|&v| -beta * v).collect();
    let psi_init = warm.and_then(|(sol, warm_beta)| {
        sol.log_scalings
            .as_ref()
            .map(|(_, psi)| psi.iter().map(|v| v * beta / warm_beta).collect())
    });
    let scaled = scale(q.mass(), p.mass(), &log_kernel, psi_init);
    let plan = JointDistribution::new(c.rows(), c.cols(), scaled.plan)?;
    Ok(ConstrainedTransportSolution {
        value: plan.expected_cost(c),
        info: mutual_information(&plan),
        plan,
        beta,
        active: true,
        scaling_iterations: scaled.iterations,
        bisection_iterations: 0,
        converged: scaled.converged,
        log_scalings: Some((scaled.phi, scaled.psi)),
    })
}

/// `K_c[p, q](λ)`.
///
/// The exact LP is solved first; if an LP optimum fits the budget it is
/// returned (`active = false`). `λ = 0` gives `q ⊗ p`. Otherwise `β` is
/// bisected over Gibbs couplings until `info` is within
/// [`crate::channel::BISECTION_INFO_TOL`] below `λ`.
pub fn solve_constrained_otp(
    q: &Distribution,
    p: &Distribution,
    c: &CostMatrix,
    budget: InfoBudget,
) -> Result<ConstrainedTransportSolution> {
    validate(q, p, c)?;
    let lambda = budget.lambda();
    let lp = solve_otp(q, p, c)?;
    if mutual_information(&lp.plan) <= lambda {
        return Ok(unconstrained(lp.plan, c, 0, true));
    }
    let least = least_informative_optimum(q, p, c, &lp)?;
    if least.converged && least.info <= lambda {
        return Ok(least);
    }

    let product = JointDistribution::product(q, p);
    let at_zero = ConstrainedTransportSolution {
        value: product.expected_cost(c),
        info: 0.0,
        plan: product,
        beta: 0.0,
        active: true,
        scaling_iterations: 0,
        bisection_iterations: 0,
        converged: true,
        log_scalings: Some((vec![0.0; q.len()], vec![0.0; p.len()])),
    };
    if lambda == 0.0 {
        return Ok(at_zero);
    }
    let gap = c.smallest_positive_gap().unwrap_or(1.0);
    let found = search_beta(
        lambda,
        gap,
        at_zero,
        |s: &ConstrainedTransportSolution| s.info,
        |beta, warm| gibbs(q, p, c, beta, warm),
    )?;
    let mut sol = found.solution;
    sol.bisection_iterations = found.bisections;
    Ok(sol)
}

/// Comparison of the optimal channel and the constrained transport plan
/// under one budget.
#[derive(Debug, Clone)]
pub struct Theorem1Report {
    /// `R_c[q](λ)`.
    pub channel_value: f64,
    /// `K_c[p, q](λ)`.
    pub transport_value: f64,
    /// `K_c[p, q](λ) - R_c[q](λ)`.
    pub gap: f64,
    /// Total variation distance between the two optimal plans.
    pub plan_distance: f64,
    /// `gap ≤ 1e-6`.
    pub equal: bool,
    /// `plan_distance ≤ 1e-7`.
    pub plans_coincide: bool,
    pub output_marginal: Distribution,
}

pub const THEOREM1_GAP_TOL: f64 = 1e-6;
pub const THEOREM1_PLAN_TOL: f64 = 1e-7;

/// Solves the channel problem for `(q, c, λ)` and the constrained transport
/// problem for `(q, p, c, λ)`, and compares them.
pub fn compare_channel_and_transport(
    q: &Distribution,
    p: &Distribution,
    c: &CostMatrix,
    budget: InfoBudget,
) -> Result<Theorem1Report> {
    validate(q, p, c)?;
    let channel = solve_ocp(q, c, budget)?;
    let transport = solve_constrained_otp(q, p, c, budget)?;
    let gap = transport.value - channel.value;
    let plan_distance = transport.plan.total_variation(&channel.joint);
    Ok(Theorem1Report {
        channel_value: channel.value,
        transport_value: transport.value,
        gap,
        plan_distance,
        equal: gap <= THEOREM1_GAP_TOL,
        plans_coincide: plan_distance <= THEOREM1_PLAN_TOL,
        output_marginal: p.clone(),
    })
}

/// The channel/transport comparison with the transport output marginal
/// set to the optimal channel's output marginal.
pub fn check_theorem1(q: &Distribution, c: &CostMatrix, budget: InfoBudget) -> Result<Theorem1Report> {
    let channel = solve_ocp(q, c, budget)?;
    compare_channel_and_transport(q, &channel.output_marginal, c, budget)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedExpressionReport {
    /// Largest `|(D[w, q⊗q] - D[p, q]) - I(X, Y)|` over the sampled plans.
    pub max_residual: f64,
    /// Plans for which `I ≤ λ` and `D[w, q⊗q] - λ ≤ D[p, q]` disagree.
    pub disagreements: usize,
    pub samples: usize,
}

pub const COMBINED_TOL: f64 = 1e-10;

/// Random point of `Γ[q, p]`: a Dirichlet(1) mixture of `vertices`
/// north-west-corner vertices under random orderings.
pub fn sample_coupling(q: &Distribution, p: &Distribution, vertices: usize, rng: &mut ChaCha8Rng) -> JointDistribution {
    let (m, n) = (q.len(), p.len());
    let mut mass = vec![0.0; m * n];
    let weights: Vec<f64> = (0..vertices.max(1)).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let mut rows: Vec<usize> = (0..m).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    for w in weights {
        rows.shuffle(rng);
        cols.shuffle(rng);
        let vertex = northwest_corner(q, p, &rows, &cols);
        for (acc, v) in mass.iter_mut().zip(vertex.mass()) {
            *acc += w / total * v;
        }
    }
    JointDistribution::new(m, n, mass).expect("mixture of couplings is a coupling")
}

/// Checks that, on `Γ[q, p]`, the budget `I(X, Y) ≤ λ` is the same
/// constraint as `D[p, q] ≥ D[w, q ⊗ q] - λ`, on `samples` random couplings
/// plus `q ⊗ p` and the constrained optimum.
pub fn verify_combined_expression(
    q: &Distribution,
    p: &Distribution,
    c: &CostMatrix,
    budget: InfoBudget,
    samples: usize,
    seed: u64,
) -> Result<CombinedExpressionReport> {
    validate(q, p, c)?;
    if !c.is_square() {
        return Err(Error::NotSquare {
            rows: c.rows(),
            cols: c.cols(),
        });
    }
    if let Some(index) = q.mass().iter().position(|&m| m <= 0.0) {
        return Err(Error::SupportViolation {
            index,
            detail: "cross-information needs a strictly positive input marginal",
        });
    }
    let lambda = budget.lambda();
    let divergence = kl_divergence(p, q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plans: Vec<JointDistribution> = (0..samples).map(|_| sample_coupling(q, p, 3, &mut rng)).collect();
    plans.push(JointDistribution::product(q, p));
    plans.push(solve_constrained_otp(q, p, c, budget)?.plan);

    let mut report = CombinedExpressionReport {
        max_residual: 0.0,
        disagreements: 0,
        samples: plans.len(),
    };
    for w in &plans {
        let distance = max_abs_diff(&w.row_sums(), q.mass());
        if distance > 1e-9 {
            return Err(Error::MarginalMismatch { distance });
        }
        let info = mutual_information(w);
        let cross = cross_information(w, q)?;
        let residual = (cross - divergence - info).abs();
        report.max_residual = report.max_residual.max(residual);
        // Pythagoras makes the two readings identical up to the residual.
        let by_info = info <= lambda + COMBINED_TOL;
        let by_cross = cross - lambda <= divergence + COMBINED_TOL;
        if by_info != by_cross && (info - lambda).abs() > COMBINED_TOL {
            report.disagreements += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn fixture() -> (Distribution, Distribution, CostMatrix) {
        (
            Distribution::uniform(2),
            Distribution::new(vec![0.75, 0.25]).unwrap(),
            CostMatrix::hamming(2),
        )
    }

    fn budget(l: f64) -> InfoBudget {
        InfoBudget::new(l).unwrap()
    }

    #[test]
    fn zero_budget_gives_product() {
        let (q, p, c) = fixture();
        let sol = solve_constrained_otp(&q, &p, &c, budget(0.0)).unwrap();
        assert_abs_diff_eq!(sol.value, 0.5, epsilon = 1e-15);
        assert_eq!(sol.info, 0.0);
        assert_eq!(sol.plan, JointDistribution::product(&q, &p));
    }

    #[test]
    fn slack_budget_gives_lp_value() {
        let (q, p, c) = fixture();
        let sol = solve_constrained_otp(&q, &p, &c, budget(LN_2)).unwrap();
        assert!(!sol.active);
        assert_eq!(sol.beta, f64::INFINITY);
        assert_abs_diff_eq!(sol.value, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn intermediate_budgets_interpolate() {
        let (q, p, c) = fixture();
        let lp_info = mutual_information(&solve_otp(&q, &p, &c).unwrap().plan);
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let lambda = lp_info * k as f64 / 8.0;
            let sol = solve_constrained_otp(&q, &p, &c, budget(lambda)).unwrap();
            assert!(sol.active);
            assert!(sol.value > 0.25 && sol.value < 0.5, "value {}", sol.value);
            assert!(sol.value <= last + 1e-12);
            assert!(sol.info <= lambda && lambda - sol.info <= 1e-6);
            assert!(sol.plan.marginal_violation(&q, &p) <= 1e-8);
            assert!(sol.gibbs_residual(&q, &p, &c) <= 1e-6);
            last = sol.value;
        }
    }

    #[test]
    fn tied_optima_use_least_informative_plan() {
        // Zero cost: every coupling is optimal, the product has no information.
        let q = Distribution::new(vec![0.2, 0.8]).unwrap();
        let p = Distribution::new(vec![0.6, 0.4]).unwrap();
        let c = CostMatrix::from_fn(2, 2, |_, _| 0.0);
        let sol = solve_constrained_otp(&q, &p, &c, budget(1e-6)).unwrap();
        assert!(!sol.active);
        assert!(sol.info <= 1e-6);
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn theorem1_on_point_mass() {
        let q = Distribution::point_mass(3, 0);
        let c = CostMatrix::grid_abs(3, 1.0);
        let report = check_theorem1(&q, &c, budget(0.2)).unwrap();
        assert!(report.gap.abs() <= 1e-12);
        assert!(report.equal && report.plans_coincide);
    }

    #[test]
    fn theorem1_on_fixture() {
        let q = Distribution::new(vec![0.2, 0.8]).unwrap();
        let c = CostMatrix::hamming(2);
        let report = check_theorem1(&q, &c, budget(0.1)).unwrap();
        assert!(report.gap.abs() <= THEOREM1_GAP_TOL, "gap {}", report.gap);
        assert!(report.plans_coincide, "distance {}", report.plan_distance);

        let perturbed = report.output_marginal.mix(&Distribution::uniform(2), 0.1).unwrap();
        let report = compare_channel_and_transport(&q, &perturbed, &c, budget(0.1)).unwrap();
        assert!(report.gap > 1e-4, "gap {}", report.gap);
        assert!(!report.plans_coincide);
    }

    #[test]
    fn combined_expression_on_fixture() {
        let (q, p, c) = fixture();
        let report = verify_combined_expression(&q, &p, &c, budget(0.2), 100, 3).unwrap();
        assert_eq!(report.samples, 102);
        assert!(report.max_residual <= COMBINED_TOL);
        assert_eq!(report.disagreements, 0);
    }

    #[test]
    fn combined_expression_needs_positive_input() {
        let q = Distribution::new(vec![0.0, 1.0]).unwrap();
        let p = Distribution::uniform(2);
        assert!(matches!(
            verify_combined_expression(&q, &p, &CostMatrix::hamming(2), budget(0.1), 5, 0),
            Err(Error::SupportViolation { index: 0, .. })
        ));
    }
}
