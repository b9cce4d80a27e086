//! Finite probability measures and the KL-family functionals on them.
//!
//! Everything lives on an indexed finite space, so integrals are sums. The
//! convention `0 · ln 0 = 0` is applied by skipping zero-mass atoms. A KL
//! divergence that is infinite (the first argument puts mass where the
//! second has none) is returned as `f64::INFINITY`, not as an error.

use crate::error::{Error, Result};
use crate::scalar::max_abs_diff;

fn validate_weights(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("empty weight vector".into()));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::InvalidWeights(format!("non-finite weight at index {i}")));
        }
        if w < 0.0 {
            return Err(Error::InvalidWeights(format!("negative weight {w} at index {i}")));
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidWeights("weights sum to zero".into()));
    }
    Ok(total)
}

/// A probability vector over `{0, .., n-1}`.
///
/// Constructed from arbitrary non-negative weights, which are normalized.
/// The pre-normalization total is kept in [`Distribution::original_total`].
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    mass: Vec<f64>,
    original_total: f64,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let total = validate_weights(&weights)?;
        let mass = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            mass,
            original_total: total,
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution on an empty space");
        Self {
            mass: vec![1.0 / n as f64; n],
            original_total: 1.0,
        }
    }

    pub fn point_mass(n: usize, atom: usize) -> Self {
        assert!(atom < n, "atom {atom} outside space of size {n}");
        let mut mass = vec![0.0; n];
        mass[atom] = 1.0;
        Self {
            mass,
            original_total: 1.0,
        }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn original_total(&self) -> f64 {
        self.original_total
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.mass.iter().all(|&m| m > 0.0)
    }

    /// Expectation of `values` under this measure.
    pub fn expect(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.mass.iter().zip(values).map(|(m, v)| m * v).sum()
    }

    /// `(1 - t) self + t other`.
    pub fn mix(&self, other: &Distribution, t: f64) -> Result<Distribution> {
        same_len(self.len(), other.len())?;
        Distribution::new(
            self.mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    pub fn total_variation(&self, other: &Distribution) -> f64 {
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        max_abs_diff(&self.mass, &other.mass)
    }
}

fn same_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A probability measure on `X × Y`, stored row-major (`x` indexes rows).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    mass: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidWeights("joint distribution needs rows and cols".into()));
        }
        same_len(rows * cols, weights.len())?;
        let total = validate_weights(&weights)?;
        let mass = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { rows, cols, mass })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * ncols);
        for row in rows {
            same_len(ncols, row.len())?;
            flat.extend_from_slice(row);
        }
        Self::new(rows.len(), ncols, flat)
    }

    /// The product measure `q ⊗ p`.
    pub fn product(q: &Distribution, p: &Distribution) -> Self {
        let mass = q
            .mass()
            .iter()
            .flat_map(|&a| p.mass().iter().map(move |&b| a * b))
            .collect();
        Self {
            rows: q.len(),
            cols: p.len(),
            mass,
        }
    }

    /// Mass of `q` placed on the diagonal of `X × X`.
    pub fn diagonal(q: &Distribution) -> Self {
        let n = q.len();
        let mut mass = vec![0.0; n * n];
        for (i, &m) in q.mass().iter().enumerate() {
            mass[i * n + i] = m;
        }
        Self { rows: n, cols: n, mass }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.mass[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.mass[x * self.cols..(x + 1) * self.cols]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|x| self.row(x).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for x in 0..self.rows {
            for (s, m) in sums.iter_mut().zip(self.row(x)) {
                *s += m;
            }
        }
        sums
    }

    /// `π_X w`.
    pub fn row_marginal(&self) -> Distribution {
        Distribution::new(self.row_sums()).expect("joint rows carry positive total mass")
    }

    /// `π_Y w`.
    pub fn col_marginal(&self) -> Distribution {
        Distribution::new(self.col_sums()).expect("joint cols carry positive total mass")
    }

    pub fn transpose(&self) -> Self {
        let mut mass = vec![0.0; self.mass.len()];
        for x in 0..self.rows {
            for y in 0..self.cols {
                mass[y * self.rows + x] = self.get(x, y);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            mass,
        }
    }

    /// Expected value of `c` under this measure.
    pub fn expected_cost(&self, c: &CostMatrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (c.rows(), c.cols()));
        self.mass.iter().zip(c.values()).map(|(w, c)| w * c).sum()
    }

    pub fn total_variation(&self, other: &JointDistribution) -> f64 {
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Maximum absolute deviation of the marginals from `(q, p)`.
    pub fn marginal_violation(&self, q: &Distribution, p: &Distribution) -> f64 {
        max_abs_diff(&self.row_sums(), q.mass()).max(max_abs_diff(&self.col_sums(), p.mass()))
    }

    /// The joint viewed as a distribution over the `rows * cols` cells.
    pub fn flatten(&self) -> Distribution {
        Distribution {
            mass: self.mass.clone(),
            original_total: 1.0,
        }
    }
}

/// Non-negative cost `c(x, y)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
    is_metric: bool,
}

const METRIC_TOL: f64 = 1e-12;

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, cost: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidCost("cost matrix needs rows and cols".into()));
        }
        same_len(rows * cols, cost.len())?;
        if let Some(i) = cost.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidCost(format!(
                "entry ({}, {}) = {} is not a finite non-negative number",
                i / cols,
                i % cols,
                cost[i]
            )));
        }
        let mut c = Self {
            rows,
            cols,
            cost,
            is_metric: false,
        };
        c.is_metric = c.check_metric();
        Ok(c)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * ncols);
        for row in rows {
            same_len(ncols, row.len())?;
            flat.extend_from_slice(row);
        }
        Self::new(rows.len(), ncols, flat)
    }

    /// 0/1 cost on `n` atoms.
    pub fn hamming(n: usize) -> Self {
        Self::from_fn(n, n, |x, y| if x == y { 0.0 } else { 1.0 })
    }

    /// `|x - y| * spacing` on an `n`-point grid.
    pub fn grid_abs(n: usize, spacing: f64) -> Self {
        Self::from_fn(n, n, |x, y| (x as f64 - y as f64).abs() * spacing)
    }

    /// `c(x, y) = profile[(y - x) mod n]`, invariant under the cyclic shift.
    pub fn cyclic(profile: &[f64]) -> Result<Self> {
        let n = profile.len();
        let mut cost = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                cost.push(profile[(y + n - x) % n]);
            }
        }
        Self::new(n, n, cost)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut cost = Vec::with_capacity(rows * cols);
        for x in 0..rows {
            for y in 0..cols {
                cost.push(f(x, y));
            }
        }
        Self::new(rows, cols, cost).expect("generated cost must be finite and non-negative")
    }

    fn check_metric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let n = self.rows;
        let tol = METRIC_TOL * self.max_cost().max(1.0);
        for i in 0..n {
            if self.get(i, i).abs() > tol {
                return false;
            }
            for j in 0..n {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
                for k in 0..n {
                    if self.get(i, k) > self.get(i, j) + self.get(j, k) + tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.cost
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.cost[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.cost[x * self.cols..(x + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Square, zero diagonal, symmetric and satisfying the triangle inequality.
    pub fn is_metric(&self) -> bool {
        self.is_metric
    }

    /// `c(x + a, y + a) = c(x, y)` with indices taken mod `n`.
    pub fn is_cyclic_invariant(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.rows;
        let tol = METRIC_TOL * self.max_cost().max(1.0);
        (0..n).all(|x| (0..n).all(|y| (self.get(x, y) - self.get((x + 1) % n, (y + 1) % n)).abs() <= tol))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |x, y| self.get(y, x))
    }

    pub fn max_cost(&self) -> f64 {
        self.cost.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive difference between two entries, if any.
    pub fn smallest_positive_gap(&self) -> Option<f64> {
        let mut sorted = self.cost.clone();
        sorted.sort_by(f64::total_cmp);
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|&d| d > METRIC_TOL * self.max_cost().max(1.0))
            .min_by(f64::total_cmp)
    }
}

/// Upper bound `λ` on mutual information, in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InfoBudget(f64);

impl InfoBudget {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || lambda.is_nan() || lambda == f64::INFINITY {
            return Err(Error::InvalidBudget(lambda));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(self) -> f64 {
        self.0
    }
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            sum += a * (a.ln() - b.ln());
        }
    }
    sum.max(0.0)
}

/// `D[p, q] = Σ p ln(p / q)`; `+inf` when `p` is not absolutely continuous
/// with respect to `q`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    same_len(p.len(), q.len())?;
    Ok(kl_raw(p.mass(), q.mass()))
}

/// KL divergence between two joint measures on the same `X × Y`.
pub fn joint_kl(w: &JointDistribution, v: &JointDistribution) -> Result<f64> {
    same_len(w.rows(), v.rows())?;
    same_len(w.cols(), v.cols())?;
    Ok(kl_raw(w.mass(), v.mass()))
}

/// Entropy relative to the counting measure, `-Σ p ln p`.
pub fn entropy(p: &Distribution) -> f64 {
    -p.mass()
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| m * m.ln())
        .sum::<f64>()
}

/// Entropy relative to a finite, strictly positive reference measure `r`,
/// `H[p/r] = -Σ p ln(p / r)`. `r` need not be normalized.
pub fn relative_entropy(p: &Distribution, reference: &[f64]) -> Result<f64> {
    same_len(p.len(), reference.len())?;
    if let Some(index) = reference.iter().position(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::ZeroReference { index });
    }
    Ok(-p
        .mass()
        .iter()
        .zip(reference)
        .filter(|(&m, _)| m > 0.0)
        .map(|(&m, &r)| m * (m.ln() - r.ln()))
        .sum::<f64>())
}

/// `I(X, Y) = D[w, π_X w ⊗ π_Y w]`.
pub fn mutual_information(w: &JointDistribution) -> f64 {
    let q = w.row_sums();
    let p = w.col_sums();
    let mut sum = 0.0;
    for x in 0..w.rows() {
        for (y, &m) in w.row(x).iter().enumerate() {
            if m > 0.0 {
                sum += m * (m.ln() - q[x].ln() - p[y].ln());
            }
        }
    }
    sum.max(0.0)
}

/// Tolerance on `π_X w = q` accepted by [`cross_information`].
pub const MARGINAL_TOL: f64 = 1e-9;

/// Cross-information `D[w, q ⊗ q]` for a joint on a square space whose
/// row marginal is `q`.
pub fn cross_information(w: &JointDistribution, q: &Distribution) -> Result<f64> {
    if w.rows() != w.cols() {
        return Err(Error::NotSquare {
            rows: w.rows(),
            cols: w.cols(),
        });
    }
    same_len(w.rows(), q.len())?;
    let distance = max_abs_diff(&w.row_sums(), q.mass());
    if distance > MARGINAL_TOL {
        return Err(Error::MarginalMismatch { distance });
    }
    joint_kl(w, &JointDistribution::product(q, q))
}

/// `(π_X w, π_Y w)`.
pub fn marginals(w: &JointDistribution) -> (Distribution, Distribution) {
    (w.row_marginal(), w.col_marginal())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn normalizes_and_keeps_zeros() {
        let p = d(&[2.0, 0.0, 6.0]);
        assert_eq!(p.mass(), &[0.25, 0.0, 0.75]);
        assert_eq!(p.original_total(), 8.0);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![0.0, 0.0]).is_err());
        assert!(Distribution::new(vec![1.0, -0.1]).is_err());
        assert!(Distribution::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&d(&[0.5, 0.5]), &d(&[0.5, 0.5])).unwrap(), 0.0);
        let expected = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        let got = kl_divergence(&d(&[0.75, 0.25]), &d(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.130_812_035_941_137_4, epsilon = 1e-12);
        assert_eq!(
            kl_divergence(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn kl_dimension_mismatch() {
        let err = kl_divergence(&d(&[0.5, 0.5]), &d(&[1.0, 1.0, 1.0])).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&d(&[0.5, 0.5])), LN_2, epsilon = 1e-15);
        assert_eq!(entropy(&d(&[1.0, 0.0])), 0.0);
        let p = d(&[0.75, 0.25]);
        let via_identity = LN_2 - kl_divergence(&p, &Distribution::uniform(2)).unwrap();
        let direct = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert_abs_diff_eq!(entropy(&p), via_identity, epsilon = 1e-15);
        assert_abs_diff_eq!(entropy(&p), direct, epsilon = 1e-15);
    }

    #[test]
    fn relative_entropy_matches_shifted_kl() {
        // H[p/r] = ln r(X) - D[p, r / r(X)]
        let p = d(&[0.2, 0.3, 0.5]);
        let r = [2.0, 1.0, 5.0];
        let r_total: f64 = r.iter().sum();
        let expected = r_total.ln() - kl_divergence(&p, &d(&r)).unwrap();
        assert_abs_diff_eq!(relative_entropy(&p, &r).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(
            relative_entropy(&p, &[1.0; 3]).unwrap(),
            entropy(&p),
            epsilon = 1e-15
        );
        assert_eq!(
            relative_entropy(&p, &[1.0, 0.0, 1.0]).unwrap_err(),
            Error::ZeroReference { index: 1 }
        );
    }

    #[test]
    fn mutual_information_examples() {
        let q = d(&[0.3, 0.7]);
        let p = d(&[0.1, 0.6, 0.3]);
        assert_abs_diff_eq!(mutual_information(&JointDistribution::product(&q, &p)), 0.0, epsilon = 1e-15);
        let diag = JointDistribution::diagonal(&d(&[0.5, 0.5]));
        assert_abs_diff_eq!(mutual_information(&diag), LN_2, epsilon = 1e-15);
    }

    #[test]
    fn mutual_information_is_flattened_kl() {
        let w = JointDistribution::from_rows(&[vec![0.2, 0.1], vec![0.3, 0.4]]).unwrap();
        let prod = JointDistribution::product(&w.row_marginal(), &w.col_marginal());
        let via_kl = kl_divergence(&w.flatten(), &prod.flatten()).unwrap();
        assert_abs_diff_eq!(mutual_information(&w), via_kl, epsilon = 1e-15);
    }

    #[test]
    fn cross_information_examples() {
        let q = d(&[0.3, 0.7]);
        let p = d(&[0.6, 0.4]);
        assert_eq!(cross_information(&JointDistribution::product(&q, &q), &q).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cross_information(&JointDistribution::product(&q, &p), &q).unwrap(),
            kl_divergence(&p, &q).unwrap(),
            epsilon = 1e-15
        );
        let half = d(&[0.5, 0.5]);
        let diag = JointDistribution::diagonal(&half);
        assert_abs_diff_eq!(cross_information(&diag, &half).unwrap(), LN_2, epsilon = 1e-15);
    }

    #[test]
    fn cross_information_rejects_wrong_marginal() {
        let diag = JointDistribution::diagonal(&d(&[0.5, 0.5]));
        assert!(matches!(
            cross_information(&diag, &d(&[0.4, 0.6])),
            Err(Error::MarginalMismatch { .. })
        ));
        let rect = JointDistribution::new(1, 2, vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            cross_information(&rect, &d(&[1.0])),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn marginals_examples() {
        let w = JointDistribution::from_rows(&[vec![0.2, 0.1], vec![0.3, 0.4]]).unwrap();
        let (q, p) = marginals(&w);
        assert_abs_diff_eq!(q.mass()[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(q.mass()[1], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mass()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mass()[1], 0.5, epsilon = 1e-15);

        let (q, p) = marginals(&JointDistribution::diagonal(&d(&[0.5, 0.5])));
        assert_eq!(q.mass(), &[0.5, 0.5]);
        assert_eq!(p.mass(), &[0.5, 0.5]);
    }

    #[test]
    fn cost_matrix_flags() {
        assert!(CostMatrix::hamming(3).is_metric());
        assert!(CostMatrix::grid_abs(4, 0.5).is_metric());
        assert!(CostMatrix::hamming(3).is_cyclic_invariant());
        assert!(!CostMatrix::grid_abs(4, 1.0).is_cyclic_invariant());
        let c = CostMatrix::cyclic(&[0.0, 1.0, 3.0]).unwrap();
        assert!(c.is_cyclic_invariant());
        assert!(!c.is_metric());
        let rect = CostMatrix::from_rows(&[vec![0.0, 1.0, 2.0]]).unwrap();
        assert!(!rect.is_metric());
        assert!(CostMatrix::from_rows(&[vec![0.0, -1.0]]).is_err());
        assert_eq!(CostMatrix::grid_abs(3, 1.0).smallest_positive_gap(), Some(1.0));
        assert_eq!(CostMatrix::from_fn(2, 2, |_, _| 0.0).smallest_positive_gap(), None);
    }

    #[test]
    fn budget_validation() {
        assert!(InfoBudget::new(0.0).is_ok());
        assert!(InfoBudget::new(-1e-3).is_err());
        assert!(InfoBudget::new(f64::NAN).is_err());
    }
}
