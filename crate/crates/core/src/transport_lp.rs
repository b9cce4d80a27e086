//! Exact solver for the finite transportation linear program
//!
//! ```text
//! K_c[p, q] = min Σ w(x, y) c(x, y)   s.t.  Σ_y w(x, ·) = q,  Σ_x w(·, y) = p,  w ≥ 0
//! ```
//!
//! solved by the network simplex method on the complete bipartite graph
//! `X → Y`. A basis is a spanning tree of the `|X| + |Y|` nodes; the tree
//! also yields the dual potentials.
//!
//! Dual potentials are stored in the Kantorovich form: `f` lives on the
//! output side (paired with `p`), `g` on the input side (paired with `q`),
//! with
//!
//! ```text
//! f(y) - g(x) ≤ c(x, y)        J_c[p, q] = E_p{f} - E_q{g}
//! ```
//!
//! so that on square spaces the formulas read the same as in the usual
//! statement with `X ≡ Y`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::measures::{CostMatrix, Distribution, JointDistribution};

/// Supply perturbation per atom, removed when the plan is extracted.
const PERTURBATION: f64 = 1e-13;
/// Relative threshold on a reduced cost for an arc to enter the basis.
const REDUCED_COST_TOL: f64 = 1e-12;
/// Mass below which a plan cell counts as empty for slackness checks.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// The pivot limit was reached before an optimal basis was found.
    IterationLimit,
}

/// Kantorovich dual pair. `f` is indexed by the output atoms `y`, `g` by
/// the input atoms `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Optimal coupling with row marginal `q` and column marginal `p`.
    pub plan: JointDistribution,
    pub value: f64,
    pub potentials: DualPotentials,
    /// Number of simplex pivots.
    pub iterations: usize,
    pub status: SolveStatus,
}

impl TransportSolution {
    /// `max(0, max_{x,y} f(y) - g(x) - c(x, y))`.
    pub fn dual_infeasibility(&self, c: &CostMatrix) -> f64 {
        let DualPotentials { f, g } = &self.potentials;
        let mut worst: f64 = 0.0;
        for (x, gx) in g.iter().enumerate() {
            for (y, fy) in f.iter().enumerate() {
                worst = worst.max(fy - gx - c.get(x, y));
            }
        }
        worst
    }

    /// Largest `|f(y) - g(x) - c(x, y)|` over cells carrying plan mass.
    pub fn slackness_residual(&self, c: &CostMatrix) -> f64 {
        let DualPotentials { f, g } = &self.potentials;
        let mut worst: f64 = 0.0;
        for (x, gx) in g.iter().enumerate() {
            for (y, fy) in f.iter().enumerate() {
                if self.plan.get(x, y) > SUPPORT_TOL {
                    worst = worst.max((fy - gx - c.get(x, y)).abs());
                }
            }
        }
        worst
    }
}

/// Solves the transportation problem with input marginal `q` (rows of `c`)
/// and output marginal `p` (columns of `c`).
///
/// Pivoting follows Bland's rule: the entering arc is the first cell in
/// row-major order with a negative reduced cost, and ties for the leaving
/// arc go to the lowest cell index.
pub fn solve_otp(q: &Distribution, p: &Distribution, c: &CostMatrix) -> Result<TransportSolution> {
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
    let mut simplex = NetworkSimplex::new(q.mass(), p.mass(), c);
    let status = simplex.run();
    let (u, v) = simplex.potentials();
    let flows = simplex.tree_flows(q.mass(), p.mass());
    let plan = JointDistribution::new(c.rows(), c.cols(), flows)?;
    let value = plan.expected_cost(c);
    Ok(TransportSolution {
        plan,
        value,
        potentials: DualPotentials {
            f: v,
            g: u.into_iter().map(|ux| -ux).collect(),
        },
        iterations: simplex.iterations,
        status,
    })
}

/// `J_c[p, q] = E_p{f} - E_q{g}` for the potentials of an optimal solve.
pub fn dual_value(sol: &TransportSolution, q: &Distribution, p: &Distribution) -> Result<f64> {
    if sol.status != SolveStatus::Optimal {
        return Err(Error::NotOptimal);
    }
    let DualPotentials { f, g } = &sol.potentials;
    if f.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            found: p.len(),
        });
    }
    if g.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            found: q.len(),
        });
    }
    Ok(p.expect(f) - q.expect(g))
}

/// North-west corner vertex of the transportation polytope `Γ[q, p]`,
/// visiting input atoms in `row_order` and output atoms in `col_order`.
/// Every permutation pair yields a vertex.
pub fn northwest_corner(
    q: &Distribution,
    p: &Distribution,
    row_order: &[usize],
    col_order: &[usize],
) -> JointDistribution {
    let (m, n) = (q.len(), p.len());
    assert_eq!(row_order.len(), m, "row order must be a permutation");
    assert_eq!(col_order.len(), n, "column order must be a permutation");
    let mut supply = q.mass().to_vec();
    let mut demand = p.mass().to_vec();
    let mut mass = vec![0.0; m * n];
    let (mut a, mut b) = (0, 0);
    while a < m && b < n {
        let (i, j) = (row_order[a], col_order[b]);
        let amount = if a == m - 1 {
            demand[j]
        } else if b == n - 1 {
            supply[i]
        } else {
            supply[i].min(demand[j])
        };
        let amount = amount.max(0.0);
        mass[i * n + j] += amount;
        supply[i] -= amount;
        demand[j] -= amount;
        if a < m - 1 && (b == n - 1 || supply[i] <= demand[j]) {
            a += 1;
        } else {
            b += 1;
        }
    }
    JointDistribution::new(m, n, mass).expect("north-west corner plan carries unit mass")
}

/// Transportation tableau with a spanning-tree basis. Node `i < m` is
/// input atom `i`, node `m + j` is output atom `j`; cell `i * n + j` is the
/// arc between them.
struct NetworkSimplex<'a> {
    m: usize,
    n: usize,
    cost: &'a CostMatrix,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    flow: Vec<f64>,
    iterations: usize,
    tol: f64,
}

impl<'a> NetworkSimplex<'a> {
    fn new(q: &[f64], p: &[f64], cost: &'a CostMatrix) -> Self {
        let (m, n) = (q.len(), p.len());
        let mut supply: Vec<f64> = q
            .iter()
            .enumerate()
            .map(|(i, &s)| s + PERTURBATION * (i + 1) as f64)
            .collect();
        let mut demand = p.to_vec();
        demand[n - 1] += PERTURBATION * (m * (m + 1) / 2) as f64;

        // North-west corner start: always m + n - 1 cells forming a tree.
        let mut basis = Vec::with_capacity(m + n - 1);
        let mut flow = vec![0.0; m * n];
        let (mut i, mut j) = (0, 0);
        loop {
            let amount = supply[i].min(demand[j]);
            flow[i * n + j] = amount;
            basis.push(i * n + j);
            supply[i] -= amount;
            demand[j] -= amount;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i < m - 1 && (j == n - 1 || supply[i] <= demand[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        let mut in_basis = vec![false; m * n];
        for &cell in &basis {
            in_basis[cell] = true;
        }
        Self {
            m,
            n,
            cost,
            basis,
            in_basis,
            flow,
            iterations: 0,
            tol: REDUCED_COST_TOL * cost.max_cost().max(1.0),
        }
    }

    fn pivot_limit(&self) -> usize {
        let cells = self.m * self.n;
        1000 + 50 * cells * (self.m + self.n)
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for &cell in &self.basis {
            let (i, j) = (cell / self.n, cell % self.n);
            adj[i].push((self.m + j, cell));
            adj[self.m + j].push((i, cell));
        }
        adj
    }

    /// Row potentials `u` and column potentials `v` with
    /// `u_i + v_j = c_ij` on every basic cell and `u_0 = 0`.
    fn potentials(&self) -> (Vec<f64>, Vec<f64>) {
        let adj = self.adjacency();
        let mut pot = vec![f64::NAN; self.m + self.n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(next, cell) in &adj[node] {
                if pot[next].is_nan() {
                    pot[next] = self.cost.values()[cell] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(self.m);
        (pot, v)
    }

    fn entering(&self, u: &[f64], v: &[f64]) -> Option<usize> {
        (0..self.m * self.n).find(|&cell| {
            !self.in_basis[cell] && {
                let (i, j) = (cell / self.n, cell % self.n);
                self.cost.values()[cell] - u[i] - v[j] < -self.tol
            }
        })
    }

    /// Tree path from output node `m + j` to input node `i`, as cells.
    fn tree_path(&self, i: usize, j: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        while let Some(node) = queue.pop_front() {
            for &(next, cell) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = self.m + j;
        while node != i {
            let (up, cell) = parent[node].expect("basis is a spanning tree");
            path.push(cell);
            node = up;
        }
        path
    }

    fn run(&mut self) -> SolveStatus {
        let limit = self.pivot_limit();
        loop {
            let (u, v) = self.potentials();
            let Some(enter) = self.entering(&u, &v) else {
                return SolveStatus::Optimal;
            };
            if self.iterations >= limit {
                return SolveStatus::IterationLimit;
            }
            let path = self.tree_path(enter / self.n, enter % self.n);
            // Along the cycle the entering cell gains flow; path cells
            // alternate lose, gain, lose, ...
            let leaving = path
                .iter()
                .step_by(2)
                .copied()
                .min_by(|&a, &b| self.flow[a].total_cmp(&self.flow[b]).then(a.cmp(&b)))
                .expect("cycle has at least one losing cell");
            let theta = self.flow[leaving];
            self.flow[enter] += theta;
            for (k, &cell) in path.iter().enumerate() {
                if k % 2 == 0 {
                    self.flow[cell] -= theta;
                } else {
                    self.flow[cell] += theta;
                }
            }
            self.flow[leaving] = 0.0;
            self.in_basis[leaving] = false;
            self.in_basis[enter] = true;
            let slot = self
                .basis
                .iter()
                .position(|&c| c == leaving)
                .expect("leaving cell is basic");
            self.basis[slot] = enter;
            self.iterations += 1;
        }
    }

    /// Basic solution of the final tree for the unperturbed marginals,
    /// obtained by repeatedly peeling leaves.
    fn tree_flows(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        let adj = self.adjacency();
        let mut residual: Vec<f64> = q.iter().chain(p).copied().collect();
        let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        let mut used = vec![false; self.m * self.n];
        let mut flows = vec![0.0; self.m * self.n];
        let mut leaves: VecDeque<usize> = (0..self.m + self.n).filter(|&k| degree[k] == 1).collect();
        while let Some(leaf) = leaves.pop_front() {
            if degree[leaf] != 1 {
                continue;
            }
            let &(other, cell) = adj[leaf]
                .iter()
                .find(|(_, cell)| !used[*cell])
                .expect("leaf has one unused arc");
            used[cell] = true;
            flows[cell] = residual[leaf].max(0.0);
            residual[other] -= residual[leaf];
            residual[leaf] = 0.0;
            degree[leaf] = 0;
            degree[other] -= 1;
            if degree[other] == 1 {
                leaves.push_back(other);
            }
        }
        flows
    }
}
