//! Brute-force and closed-form reference solvers, plus a seeded instance
//! generator.
//!
//! These are deliberately naive and share no code with the solvers they
//! check: [`lp_bruteforce`] enumerates every spanning-tree basis of the
//! transportation polytope, [`monotone_1d`] uses the CDF formula for
//! `|x - y|` costs on a line, and [`channel_gridsearch`] scans all 2×2
//! channel matrices on a grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};

use crate::error::{Error, Result};
use crate::measures::{CostMatrix, Distribution, InfoBudget, JointDistribution};

/// Largest `|X|·|Y|` accepted by [`lp_bruteforce`].
pub const BRUTEFORCE_CELL_CAP: usize = 12;
/// Finest grid accepted by [`channel_gridsearch`].
pub const MIN_GRID_STEP: f64 = 1e-3;
/// Negative flow tolerated in a basic solution before it counts as
/// infeasible.
const FEASIBILITY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// `c(x, y) = 1` if `x ≠ y`, else `0`.
    Hamming,
    /// `c(x, y) = |x - y|` on the integer grid.
    GridAbs,
    /// Independent uniform entries on `[0, 1]`.
    RandomUniform,
    /// `c(x, y) = h((y - x) mod n)` with `h(0) = 0` and `h(k)` uniform on
    /// `[0, 1]`; needs a square space.
    TranslationInvariantCyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarginalKind {
    Uniform,
    /// Dirichlet with all concentrations equal to one.
    RandomDirichlet,
    /// A point mass on a uniformly drawn atom.
    PointMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstanceSpec {
    pub nx: usize,
    pub ny: usize,
    pub seed: u64,
    pub cost_kind: CostKind,
    pub marginal_kind: MarginalKind,
}

/// Input marginal `q` on `X`, output marginal `p` on `Y`, cost on `X × Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub q: Distribution,
    pub p: Distribution,
    pub c: CostMatrix,
}

fn marginal(n: usize, kind: MarginalKind, rng: &mut ChaCha8Rng) -> Distribution {
    match kind {
        MarginalKind::Uniform => Distribution::uniform(n),
        MarginalKind::PointMass => Distribution::point_mass(n, rng.random_range(0..n)),
        MarginalKind::RandomDirichlet => {
            let weights: Vec<f64> = (0..n)
                .map(|_| loop {
                    let e: f64 = Exp1.sample(rng);
                    if e > 0.0 {
                        break e;
                    }
                })
                .collect();
            Distribution::new(weights).expect("exponential draws are positive")
        }
    }
}

/// Deterministic random instance for `spec`.
///
/// Fails only for an invalid spec: an empty space, or a cyclic cost on a
/// non-square space.
pub fn generate(spec: InstanceSpec) -> Result<Instance> {
    let InstanceSpec { nx, ny, seed, cost_kind, marginal_kind } = spec;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidWeights("instance spaces must be non-empty".into()));
    }
    if cost_kind == CostKind::TranslationInvariantCyclic && nx != ny {
        return Err(Error::NotSquare { rows: nx, cols: ny });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = marginal(nx, marginal_kind, &mut rng);
    let p = marginal(ny, marginal_kind, &mut rng);
    let c = match cost_kind {
        CostKind::Hamming => CostMatrix::from_fn(nx, ny, |x, y| if x == y { 0.0 } else { 1.0 }),
        CostKind::GridAbs => CostMatrix::from_fn(nx, ny, |x, y| x.abs_diff(y) as f64),
        CostKind::RandomUniform => {
            let values: Vec<f64> = (0..nx * ny).map(|_| rng.random::<f64>()).collect();
            CostMatrix::new(nx, ny, values)?
        }
        CostKind::TranslationInvariantCyclic => {
            let profile: Vec<f64> = (0..nx).map(|k| if k == 0 { 0.0 } else { rng.random::<f64>() }).collect();
            CostMatrix::cyclic(&profile)?
        }
    };
    let structural = match cost_kind {
        CostKind::Hamming => (0..nx).all(|x| (0..ny).all(|y| c.get(x, y) == f64::from(u8::from(x != y)))),
        CostKind::GridAbs => (0..nx).all(|x| (0..ny).all(|y| c.get(x, y) == x.abs_diff(y) as f64)),
        CostKind::RandomUniform => c.values().iter().all(|v| (0.0..1.0).contains(v)),
        CostKind::TranslationInvariantCyclic => c.is_cyclic_invariant(),
    };
    if !structural {
        return Err(Error::Internal(format!("generated cost violates {cost_kind:?} structure")));
    }
    if marginal_kind == MarginalKind::RandomDirichlet && !(q.is_strictly_positive() && p.is_strictly_positive()) {
        return Err(Error::Internal("Dirichlet marginal has a zero atom".into()));
    }
    Ok(Instance { q, p, c })
}

#[derive(Debug, Clone)]
pub struct BruteForceSolution {
    pub value: f64,
    pub plan: JointDistribution,
    /// Number of spanning-tree supports with a feasible basic solution.
    pub feasible_bases: usize,
}

/// Minimum of `E_w{c}` over all basic feasible solutions of `Γ[q, p]`.
///
/// Every vertex of the transportation polytope is the unique solution
/// supported on some spanning tree of the bipartite graph `X ∪ Y`, so
/// enumerating the `(|X| + |Y| - 1)`-subsets of cells that form a tree
/// visits all of them.
pub fn lp_bruteforce(q: &Distribution, p: &Distribution, c: &CostMatrix) -> Result<BruteForceSolution> {
    let (m, n) = (q.len(), p.len());
    if (c.rows(), c.cols()) != (m, n) {
        return Err(Error::DimensionMismatch {
            expected: c.rows() * c.cols(),
            found: m * n,
        });
    }
    if m * n > BRUTEFORCE_CELL_CAP {
        return Err(Error::SizeCapExceeded {
            size: m * n,
            cap: BRUTEFORCE_CELL_CAP,
        });
    }
    let cells = m * n;
    let edges = m + n - 1;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible_bases = 0;
    for subset in 0u32..(1u32 << cells) {
        if subset.count_ones() as usize != edges {
            continue;
        }
        let chosen: Vec<usize> = (0..cells).filter(|k| subset >> k & 1 == 1).collect();
        let Some(flows) = tree_solution(m, n, &chosen, q.mass(), p.mass()) else {
            continue;
        };
        if flows.iter().any(|&f| f < -FEASIBILITY_TOL) {
            continue;
        }
        feasible_bases += 1;
        let flows: Vec<f64> = flows.into_iter().map(|f| f.max(0.0)).collect();
        let value: f64 = flows.iter().zip(c.values()).map(|(f, v)| f * v).sum();
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, flows));
        }
    }
    let (value, flows) = best.ok_or_else(|| Error::Internal("no feasible basis found".into()))?;
    Ok(BruteForceSolution {
        value,
        plan: JointDistribution::new(m, n, flows)?,
        feasible_bases,
    })
}

/// Flows on the cells of `chosen` meeting the marginals, if `chosen` is a
/// spanning tree. Solved by repeatedly assigning the residual of a leaf
/// node to its only remaining edge.
fn tree_solution(m: usize, n: usize, chosen: &[usize], q: &[f64], p: &[f64]) -> Option<Vec<f64>> {
    let nodes = m + n;
    let endpoints = |cell: usize| (cell / n, m + cell % n);
    let mut degree = vec![0usize; nodes];
    for &cell in chosen {
        let (a, b) = endpoints(cell);
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut residual: Vec<f64> = q.iter().chain(p).copied().collect();
    let mut done = vec![false; chosen.len()];
    let mut flows = vec![0.0; m * n];
    for _ in 0..chosen.len() {
        // Any node of degree one; a forest with an edge always has one.
        let (slot, leaf, other) = chosen.iter().enumerate().filter(|(s, _)| !done[*s]).find_map(|(s, &cell)| {
            let (a, b) = endpoints(cell);
            if degree[a] == 1 {
                Some((s, a, b))
            } else if degree[b] == 1 {
                Some((s, b, a))
            } else {
                None
            }
        })?;
        done[slot] = true;
        flows[chosen[slot]] = residual[leaf];
        residual[other] -= residual[leaf];
        residual[leaf] = 0.0;
        degree[leaf] -= 1;
        degree[other] -= 1;
    }
    // A tree on all nodes leaves no isolated node behind and balances.
    if degree.iter().any(|&d| d != 0) || residual.iter().any(|r| r.abs() > 1e-12) {
        return None;
    }
    let mut touched = vec![false; nodes];
    for &cell in chosen {
        let (a, b) = endpoints(cell);
        touched[a] = true;
        touched[b] = true;
    }
    touched.iter().all(|&t| t).then_some(flows)
}

/// `spacing · Σ_k |F_q(k) - F_p(k)|`, the transport value for the cost
/// `|x - y|` on an evenly spaced line.
pub fn monotone_1d(q: &Distribution, p: &Distribution, spacing: f64) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            found: p.len(),
        });
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidParameter { name: "spacing", value: spacing });
    }
    let (mut fq, mut fp, mut total) = (0.0, 0.0, 0.0);
    for (a, b) in q.mass().iter().zip(p.mass()) {
        fq += a;
        fp += b;
        total += (fq - fp).abs();
    }
    Ok(spacing * total)
}

/// Minimum expected cost over 2×2 channels `P(y | x)` whose entries lie on
/// the grid `{0, step, 2 step, ..., 1}` and whose mutual information is at
/// most `λ`.
pub fn channel_gridsearch(q: &Distribution, c: &CostMatrix, budget: InfoBudget, step: f64) -> Result<f64> {
    if (c.rows(), c.cols()) != (2, 2) {
        return Err(Error::SizeCapExceeded {
            size: c.rows() * c.cols(),
            cap: 4,
        });
    }
    if q.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: q.len() });
    }
    if !(step >= MIN_GRID_STEP) || step > 1.0 {
        return Err(Error::InvalidParameter { name: "step", value: step });
    }
    let lambda = budget.lambda();
    let points = (1.0 / step).round() as usize;
    let (q0, q1) = (q.mass()[0], q.mass()[1]);
    let plogp = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
    let mut best = f64::INFINITY;
    for i in 0..=points {
        let a = i as f64 / points as f64; // P(y = 0 | x = 0)
        for j in 0..=points {
            let b = j as f64 / points as f64; // P(y = 0 | x = 1)
            let joint = [q0 * a, q0 * (1.0 - a), q1 * b, q1 * (1.0 - b)];
            let out0 = joint[0] + joint[2];
            // I = H(X) + H(Y) - H(X, Y) written with x ln x terms.
            let info = joint.iter().map(|&v| plogp(v)).sum::<f64>()
                - plogp(q0)
                - plogp(q1)
                - plogp(out0)
                - plogp(1.0 - out0);
            if info > lambda {
                continue;
            }
            let cost: f64 = joint.iter().zip(c.values()).map(|(w, v)| w * v).sum();
            best = best.min(cost);
        }
    }
    Ok(best)
}

/// Centered difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    fn spec(n: usize, seed: u64, cost_kind: CostKind) -> InstanceSpec {
        InstanceSpec {
            nx: n,
            ny: n,
            seed,
            cost_kind,
            marginal_kind: MarginalKind::RandomDirichlet,
        }
    }

    #[test]
    fn generator_examples() {
        let inst = generate(spec(2, 3, CostKind::Hamming)).unwrap();
        assert_eq!(inst.c.values(), &[0.0, 1.0, 1.0, 0.0]);
        let cyclic = generate(spec(3, 5, CostKind::TranslationInvariantCyclic)).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(cyclic.c.get((x + 1) % 3, (y + 1) % 3), cyclic.c.get(x, y));
            }
        }
        let again = generate(spec(3, 5, CostKind::TranslationInvariantCyclic)).unwrap();
        assert_eq!(cyclic, again);
        assert_ne!(cyclic, generate(spec(3, 6, CostKind::TranslationInvariantCyclic)).unwrap());
        assert!(cyclic.q.is_strictly_positive() && cyclic.p.is_strictly_positive());
    }

    #[test]
    fn generator_rejects_invalid_specs() {
        let mut s = spec(2, 0, CostKind::TranslationInvariantCyclic);
        s.ny = 3;
        assert_eq!(generate(s).unwrap_err(), Error::NotSquare { rows: 2, cols: 3 });
        s.nx = 0;
        assert!(generate(s).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        let q = d(&[0.5, 0.5]);
        let p = d(&[0.75, 0.25]);
        let sol = lp_bruteforce(&q, &p, &CostMatrix::hamming(2)).unwrap();
        assert_abs_diff_eq!(sol.value, 0.25, epsilon = 1e-15);
        assert!(sol.plan.marginal_violation(&q, &p) < 1e-15);
        let r = d(&[0.2, 0.3, 0.5]);
        assert_abs_diff_eq!(
            lp_bruteforce(&r, &r, &CostMatrix::grid_abs(3, 1.0)).unwrap().value,
            0.0,
            epsilon = 1e-15
        );
        let big = Distribution::uniform(4);
        assert_eq!(
            lp_bruteforce(&big, &big, &CostMatrix::hamming(4)).unwrap_err(),
            Error::SizeCapExceeded { size: 16, cap: 12 }
        );
    }

    #[test]
    fn bruteforce_counts_vertices_of_two_by_two() {
        // Γ[q, p] for 2×2 is a segment; its two endpoints are the vertices.
        let q = d(&[0.5, 0.5]);
        let p = d(&[0.75, 0.25]);
        let sol = lp_bruteforce(&q, &p, &CostMatrix::hamming(2)).unwrap();
        assert_eq!(sol.feasible_bases, 2);
    }

    #[test]
    fn monotone_examples() {
        let q = d(&[0.2, 0.8]);
        assert_eq!(monotone_1d(&q, &q, 1.0).unwrap(), 0.0);
        assert_eq!(monotone_1d(&d(&[1.0, 0.0]), &d(&[0.0, 1.0]), 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            monotone_1d(&d(&[1.0, 0.0, 0.0]), &d(&[0.0, 0.0, 1.0]), 0.5).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(monotone_1d(&q, &d(&[1.0, 1.0, 1.0]), 1.0).is_err());
        assert!(monotone_1d(&q, &q, 0.0).is_err());
    }

    #[test]
    fn gridsearch_examples() {
        let q = d(&[0.5, 0.5]);
        let c = CostMatrix::hamming(2);
        let large = channel_gridsearch(&q, &c, InfoBudget::new(1.0).unwrap(), 0.01).unwrap();
        assert_eq!(large, 0.0);
        let zero = channel_gridsearch(&q, &c, InfoBudget::new(0.0).unwrap(), 0.01).unwrap();
        assert_abs_diff_eq!(zero, 0.5, epsilon = 1e-12);
        let half = channel_gridsearch(&q, &c, InfoBudget::new(LN_2 / 2.0).unwrap(), 0.01).unwrap();
        assert!(half > 0.0 && half < 0.5);
        assert!(channel_gridsearch(&q, &c, InfoBudget::new(0.1).unwrap(), 1e-4).is_err());
        assert!(channel_gridsearch(&d(&[1.0, 1.0, 1.0]), &CostMatrix::hamming(3), InfoBudget::new(0.1).unwrap(), 0.1).is_err());
    }

    #[test]
    fn central_difference_of_a_quadratic_is_exact() {
        assert_abs_diff_eq!(central_difference(|x| x * x, 3.0, 0.5), 6.0, epsilon = 1e-14);
    }
}
