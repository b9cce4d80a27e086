//! KL geometry and the dual transport bound.
//!
//! Three-point decompositions of the KL divergence through a reference
//! measure `r`:
//!
//! ```text
//! D[p,q] = D[p,r] + D[r,q] - Σ ln(q/r) (p - r)        (law of cosines)
//! D[p,q] = D[p,r] - D[q,r] - Σ ln(q/r) (p - q)
//! D[q,r] + D[r,q] = Σ ln(q/r) (q - r)
//! ```
//!
//! When `p` and `q` are exponential tilts of `r`,
//! `p = exp(βf - κ[βf]) r` and `q = exp(αg - κ[αg]) r`, the second identity
//! turns into a bound on `D[p,q]` by the transport value `K_c[p,q]`, with
//! equality when `(f, g)` is an optimal dual pair and `α = β = 1`.
//!
//! Potentials follow the convention of [`crate::transport_lp`]: `f` is
//! paired with the column (output) marginal `p` and `g` with the row
//! (input) marginal `q`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, Uniform};

use crate::error::{Error, Result};
use crate::measures::{kl_divergence, CostMatrix, Distribution, JointDistribution};
use crate::scalar::log_sum_exp;
use crate::transport_lp::{northwest_corner, solve_otp};

/// Residual bound for the exact decomposition identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Slack allowed in checks that go through the LP solver.
pub const SOLVER_TOL: f64 = 1e-8;
/// Step of the centered finite difference of `κ`.
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-5;
/// Numerators `βf(y) - αg(x)` at or below this count as non-positive.
const POSITIVE_NUMERATOR: f64 = 1e-12;
/// Off-support cost increment used by [`check_theorem2`].
const THEOREM2_DELTA: f64 = 0.1;
const THEOREM2_ATTEMPTS: usize = 100;

/// Both sides of an identity and their absolute difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityResidual {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

fn same_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn strictly_positive_reference(r: &Distribution) -> Result<()> {
    match r.mass().iter().position(|&m| m <= 0.0) {
        Some(index) => Err(Error::ZeroReference { index }),
        None => Ok(()),
    }
}

/// `Σ ln(a/b) (s - t)` over all atoms; `a`, `b` strictly positive.
fn log_ratio_pairing(a: &[f64], b: &[f64], s: &[f64], t: &[f64]) -> f64 {
    (0..a.len()).map(|i| (a[i].ln() - b[i].ln()) * (s[i] - t[i])).sum()
}

fn check_triple(p: &Distribution, q: &Distribution, r: &Distribution) -> Result<()> {
    same_len(r.len(), p.len())?;
    same_len(r.len(), q.len())?;
    strictly_positive_reference(r)?;
    if let Some(index) = q.mass().iter().position(|&m| m <= 0.0) {
        return Err(Error::SupportViolation {
            index,
            detail: "q must be strictly positive for D[r, q] to be finite",
        });
    }
    Ok(())
}

/// Law of cosines for the KL divergence.
pub fn law_of_cosines(p: &Distribution, q: &Distribution, r: &Distribution) -> Result<IdentityResidual> {
    check_triple(p, q, r)?;
    let lhs = kl_divergence(p, q)?;
    let rhs = kl_divergence(p, r)? + kl_divergence(r, q)? - log_ratio_pairing(q.mass(), r.mass(), p.mass(), r.mass());
    Ok(IdentityResidual::new(lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlMinusReport {
    /// `D[p,q] = D[p,r] - D[q,r] - Σ ln(q/r)(p - q)`.
    pub decomposition: IdentityResidual,
    /// `D[q,r] + D[r,q] = Σ ln(q/r)(q - r)`.
    pub symmetrized: IdentityResidual,
}

impl KlMinusReport {
    pub fn max_residual(&self) -> f64 {
        self.decomposition.residual.max(self.symmetrized.residual)
    }
}

pub fn kl_minus_decomposition(p: &Distribution, q: &Distribution, r: &Distribution) -> Result<KlMinusReport> {
    check_triple(p, q, r)?;
    let d_pq = kl_divergence(p, q)?;
    let d_pr = kl_divergence(p, r)?;
    let d_qr = kl_divergence(q, r)?;
    let d_rq = kl_divergence(r, q)?;
    let decomposition = IdentityResidual::new(
        d_pq,
        d_pr - d_qr - log_ratio_pairing(q.mass(), r.mass(), p.mass(), q.mass()),
    );
    let symmetrized = IdentityResidual::new(d_qr + d_rq, log_ratio_pairing(q.mass(), r.mass(), q.mass(), r.mass()));
    Ok(KlMinusReport {
        decomposition,
        symmetrized,
    })
}

/// `κ[t f] = ln Σ r(x) exp(t f(x))`.
pub fn cumulant(f: &[f64], t: f64, r: &Distribution) -> Result<f64> {
    same_len(r.len(), f.len())?;
    Ok(log_sum_exp(
        r.mass()
            .iter()
            .zip(f)
            .filter(|(&m, _)| m > 0.0)
            .map(|(&m, &v)| m.ln() + t * v),
    ))
}

/// `exp(t f - κ[t f]) r` before renormalization, so its total can be
/// inspected.
pub fn exponential_tilt(f: &[f64], t: f64, r: &Distribution) -> Result<Vec<f64>> {
    let kappa = cumulant(f, t, r)?;
    Ok(r
        .mass()
        .iter()
        .zip(f)
        .map(|(&m, &v)| if m > 0.0 { (m.ln() + t * v - kappa).exp() } else { 0.0 })
        .collect())
}

fn tilt(f: &[f64], t: f64, r: &Distribution) -> Result<Distribution> {
    Distribution::new(exponential_tilt(f, t, r)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantIdentityReport {
    /// `E_p{f}` under the tilted measure.
    pub mean: f64,
    /// Centered difference `(κ[(β+h)f] - κ[(β-h)f]) / 2h`.
    pub finite_difference: f64,
    /// `|finite_difference - mean| / max(|mean|, 1)`.
    pub fd_relative_error: f64,
    /// `D[p, r] = β E_p{f} - κ[βf]`.
    pub legendre: IdentityResidual,
}

/// Checks `dκ[βf]/dβ = E_p{f}` and `D[p,r] = β E_p{f} - κ[βf]` for
/// `p = exp(βf - κ[βf]) r`.
pub fn cumulant_identities(f: &[f64], beta: f64, r: &Distribution) -> Result<CumulantIdentityReport> {
    strictly_positive_reference(r)?;
    let kappa = cumulant(f, beta, r)?;
    let p = tilt(f, beta, r)?;
    let mean = p.expect(f);
    let finite_difference = (cumulant(f, beta + FD_STEP, r)? - cumulant(f, beta - FD_STEP, r)?) / (2.0 * FD_STEP);
    Ok(CumulantIdentityReport {
        mean,
        finite_difference,
        fd_relative_error: (finite_difference - mean).abs() / mean.abs().max(1.0),
        legendre: IdentityResidual::new(kl_divergence(&p, r)?, beta * mean - kappa),
    })
}

/// Potentials `(f, g)` with multipliers `(β, α)` over a common space with
/// reference measure `r`; they define `p = exp(βf - κ[βf]) r` and
/// `q = exp(αg - κ[αg]) r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub reference: Distribution,
}

impl PotentialPair {
    pub fn new(f: Vec<f64>, g: Vec<f64>, alpha: f64, beta: f64, reference: Distribution) -> Result<Self> {
        same_len(reference.len(), f.len())?;
        same_len(reference.len(), g.len())?;
        strictly_positive_reference(&reference)?;
        for m in [alpha, beta] {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::Internal(format!("multiplier must be finite and >= 0, got {m}")));
            }
        }
        if f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::Internal("potentials must be finite".into()));
        }
        Ok(Self {
            f,
            g,
            alpha,
            beta,
            reference,
        })
    }

    /// `p = exp(βf - κ[βf]) r`.
    pub fn output_measure(&self) -> Distribution {
        tilt(&self.f, self.beta, &self.reference).expect("validated potential pair")
    }

    /// `q = exp(αg - κ[αg]) r`.
    pub fn input_measure(&self) -> Distribution {
        tilt(&self.g, self.alpha, &self.reference).expect("validated potential pair")
    }

    /// Largest deviation from 1 of the total mass of either exponential
    /// representation.
    pub fn renormalization_residual(&self) -> f64 {
        let total = |v: Vec<f64>| (v.iter().sum::<f64>() - 1.0).abs();
        let p = exponential_tilt(&self.f, self.beta, &self.reference).expect("validated potential pair");
        let q = exponential_tilt(&self.g, self.alpha, &self.reference).expect("validated potential pair");
        total(p).max(total(q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantReport {
    /// `κ[βf]`.
    pub kappa_f: f64,
    /// `κ[αg]`.
    pub kappa_g: f64,
    /// Smallest `ε ≥ 0` with `βf(y) - αg(x) ≤ ε c(x, y)`; infinite when a
    /// zero-cost cell has a positive numerator.
    pub epsilon: f64,
    /// `J_{c,ε} = (β E_p{f} - α E_q{g}) / ε`, zero when `ε` is zero or infinite.
    pub j_c_eps: f64,
}

fn check_cost(pp: &PotentialPair, c: &CostMatrix) -> Result<()> {
    same_len(pp.reference.len(), c.rows())?;
    same_len(pp.reference.len(), c.cols())
}

/// `ε` and `J_{c,ε}` for a potential pair.
pub fn epsilon_feasibility(pp: &PotentialPair, c: &CostMatrix) -> Result<CumulantReport> {
    check_cost(pp, c)?;
    let mut epsilon: f64 = 0.0;
    'cells: for x in 0..c.rows() {
        for y in 0..c.cols() {
            let numerator = pp.beta * pp.f[y] - pp.alpha * pp.g[x];
            if numerator <= 0.0 {
                continue;
            }
            let cost = c.get(x, y);
            if cost > 0.0 {
                epsilon = epsilon.max(numerator / cost);
            } else if numerator > POSITIVE_NUMERATOR {
                epsilon = f64::INFINITY;
                break 'cells;
            }
        }
    }
    let p = pp.output_measure();
    let q = pp.input_measure();
    let numerator = pp.beta * p.expect(&pp.f) - pp.alpha * q.expect(&pp.g);
    let j_c_eps = if epsilon == 0.0 {
        if numerator > POSITIVE_NUMERATOR {
            return Err(Error::Internal(format!(
                "epsilon is zero but the dual numerator is {numerator:e}"
            )));
        }
        0.0
    } else if epsilon.is_infinite() {
        0.0
    } else {
        numerator / epsilon
    };
    Ok(CumulantReport {
        kappa_f: cumulant(&pp.f, pp.beta, &pp.reference)?,
        kappa_g: cumulant(&pp.g, pp.alpha, &pp.reference)?,
        epsilon,
        j_c_eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlBoundReport {
    /// `D[p, q]`.
    pub divergence: f64,
    /// `ε K_c[p,q] - (κ[βf] - κ[αg]) - α Σ g (p - q)`.
    pub bound: f64,
    /// `bound - divergence`.
    pub slack: f64,
    pub epsilon: f64,
    pub transport_value: f64,
}

/// `D[p,q] ≤ ε K_c[p,q] - (κ[βf] - κ[αg]) - α Σ g (p - q)`, with `K_c`
/// from the exact LP.
pub fn kl_upper_bound(pp: &PotentialPair, c: &CostMatrix) -> Result<KlBoundReport> {
    let report = epsilon_feasibility(pp, c)?;
    if report.epsilon.is_infinite() {
        return Err(Error::InfiniteEpsilon);
    }
    let p = pp.output_measure();
    let q = pp.input_measure();
    let transport_value = solve_otp(&q, &p, c)?.value;
    let correction: f64 = (0..p.len()).map(|i| pp.g[i] * (p.mass()[i] - q.mass()[i])).sum();
    let bound = report.epsilon * transport_value - (report.kappa_f - report.kappa_g) - pp.alpha * correction;
    let divergence = kl_divergence(&p, &q)?;
    Ok(KlBoundReport {
        divergence,
        bound,
        slack: bound - divergence,
        epsilon: report.epsilon,
        transport_value,
    })
}

/// Both sides of `D[p,q] = K_c[p,q] - (κ[f] - κ[g]) - Σ g (p - q)` for a
/// pair with `α = β = 1`; `K_c` comes from the exact LP.
pub fn theorem2_identity(pp: &PotentialPair, c: &CostMatrix) -> Result<IdentityResidual> {
    check_cost(pp, c)?;
    let p = pp.output_measure();
    let q = pp.input_measure();
    let transport_value = solve_otp(&q, &p, c)?.value;
    let kappa_f = cumulant(&pp.f, 1.0, &pp.reference)?;
    let kappa_g = cumulant(&pp.g, 1.0, &pp.reference)?;
    let correction: f64 = (0..p.len()).map(|i| pp.g[i] * (p.mass()[i] - q.mass()[i])).sum();
    Ok(IdentityResidual::new(
        kl_divergence(&p, &q)?,
        transport_value - (kappa_f - kappa_g) - correction,
    ))
}

/// A synthesized instance where `(f, g)` is an optimal dual pair with
/// `α = β = 1`, and the resulting identity check.
#[derive(Debug, Clone)]
pub struct Theorem2Report {
    pub identity: IdentityResidual,
    pub pair: PotentialPair,
    pub cost: CostMatrix,
    pub attempts: usize,
}

/// Builds an instance satisfying the hypotheses of the dual/KL equality
/// and checks it.
///
/// `r`, `f`, `g` are drawn at random; `p` and `q` are their exponential
/// tilts. A north-west-corner coupling of `(q, p)` along potentials sorted
/// ascending fixes a support on which `c = f(y) - g(x)`; off the support
/// the cost is raised by `0.1`. Complementary slackness then makes `(f, g)`
/// dual-optimal. `f` is shifted by a constant (which leaves `p` unchanged)
/// to keep the cost non-negative.
pub fn check_theorem2(n: usize, seed: u64) -> Result<Theorem2Report> {
    if n < 2 {
        return Err(Error::InvalidWeights(format!("space size must be >= 2, got {n}")));
    }
    let spread = Uniform::new(-1.0, 1.0).expect("valid range");
    for attempt in 0..THEOREM2_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let r = Distribution::new((0..n).map(|_| Exp1.sample(&mut rng)).collect())?;
        if !r.is_strictly_positive() {
            continue;
        }
        let f: Vec<f64> = (0..n).map(|_| spread.sample(&mut rng)).collect();
        let g: Vec<f64> = (0..n).map(|_| spread.sample(&mut rng)).collect();
        let p = tilt(&f, 1.0, &r)?;
        let q = tilt(&g, 1.0, &r)?;

        let mut rows: Vec<usize> = (0..n).collect();
        rows.sort_by(|&a, &b| g[a].total_cmp(&g[b]));
        let mut cols: Vec<usize> = (0..n).collect();
        cols.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
        let plan: JointDistribution = northwest_corner(&q, &p, &rows, &cols);
        if plan.marginal_violation(&q, &p) > 1e-12 {
            continue;
        }

        let lowest = (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .map(|(x, y)| f[y] - g[x])
            .fold(f64::INFINITY, f64::min);
        let shift = (-lowest).max(0.0);
        let f: Vec<f64> = f.iter().map(|v| v + shift).collect();
        let cost = CostMatrix::from_fn(n, n, |x, y| {
            let tight = f[y] - g[x];
            if plan.get(x, y) > 0.0 {
                tight.max(0.0)
            } else {
                tight + THEOREM2_DELTA
            }
        });
        let pair = PotentialPair::new(f, g, 1.0, 1.0, r)?;
        let identity = theorem2_identity(&pair, &cost)?;
        return Ok(Theorem2Report {
            identity,
            pair,
            cost,
            attempts: attempt + 1,
        });
    }
    Err(Error::ConstructionFailed {
        attempts: THEOREM2_ATTEMPTS,
    })
}

fn check_joint_shape(len: usize, q: &Distribution, p: &Distribution) -> Result<()> {
    same_len(q.len() * p.len(), len)
}

/// `D*[u, q⊗p] = ln Σ q(x) p(y) exp(u(x, y))`, the convex conjugate of
/// `w ↦ D[w, q⊗p]`. `u` is row-major over `X × Y`.
pub fn kl_legendre(u: &[f64], q: &Distribution, p: &Distribution) -> Result<f64> {
    check_joint_shape(u.len(), q, p)?;
    let n = p.len();
    Ok(log_sum_exp((0..u.len()).filter_map(|k| {
        let weight = q.mass()[k / n] * p.mass()[k % n];
        (weight > 0.0).then(|| weight.ln() + u[k])
    })))
}

/// `D*[u, q⊗p] - (Σ w u - D[w, q⊗p])`; non-negative by the Fenchel
/// inequality.
pub fn fenchel_gap(u: &[f64], w: &JointDistribution, q: &Distribution, p: &Distribution) -> Result<f64> {
    check_joint_shape(u.len(), q, p)?;
    same_len(q.len(), w.rows())?;
    same_len(p.len(), w.cols())?;
    let conjugate = kl_legendre(u, q, p)?;
    let pairing: f64 = w.mass().iter().zip(u).filter(|(&m, _)| m > 0.0).map(|(m, v)| m * v).sum();
    let divergence = crate::measures::joint_kl(w, &JointDistribution::product(q, p))?;
    Ok(conjugate - (pairing - divergence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn law_of_cosines_trivial_cases() {
        let p = d(&[0.2, 0.3, 0.5]);
        let q = d(&[0.4, 0.4, 0.2]);
        let same = law_of_cosines(&p, &p, &p).unwrap();
        assert_eq!((same.lhs, same.rhs), (0.0, 0.0));
        let collapsed = law_of_cosines(&p, &q, &q).unwrap();
        assert!(collapsed.holds(1e-15));
        assert!(law_of_cosines(&p, &q, &d(&[0.3, 0.3, 0.4])).unwrap().holds(IDENTITY_TOL));
    }

    #[test]
    fn decomposition_support_errors() {
        let p = d(&[0.5, 0.5]);
        assert_eq!(
            law_of_cosines(&p, &p, &d(&[1.0, 0.0])).unwrap_err(),
            Error::ZeroReference { index: 1 }
        );
        assert!(matches!(
            kl_minus_decomposition(&p, &d(&[0.0, 1.0]), &p),
            Err(Error::SupportViolation { index: 0, .. })
        ));
    }

    #[test]
    fn kl_minus_trivial_cases() {
        let p = d(&[0.1, 0.6, 0.3]);
        let r = d(&[0.3, 0.3, 0.4]);
        let report = kl_minus_decomposition(&p, &r, &r).unwrap();
        assert_eq!(report.decomposition.lhs, report.decomposition.rhs);
        let report = kl_minus_decomposition(&p, &p, &r).unwrap();
        assert_eq!(report.decomposition.lhs, 0.0);
        assert!(report.max_residual() <= 1e-15);
    }

    #[test]
    fn cumulant_examples() {
        let r = d(&[0.5, 0.5]);
        assert_eq!(cumulant(&[0.0, 0.0], 1.0, &r).unwrap(), 0.0);
        assert_abs_diff_eq!(cumulant(&[3.0, -1.0], 0.0, &r).unwrap(), 0.0, epsilon = 1e-16);
        let expected = ((1f64.exp() + 1.0) / 2.0).ln();
        assert_abs_diff_eq!(cumulant(&[1.0, 0.0], 1.0, &r).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.620_114_506_958_277_5, epsilon = 1e-15);
    }

    #[test]
    fn cumulant_identities_trivial_cases() {
        let r = d(&[0.2, 0.5, 0.3]);
        let f = [1.0, -2.0, 0.5];
        let at_zero = cumulant_identities(&f, 0.0, &r).unwrap();
        assert_abs_diff_eq!(at_zero.mean, r.expect(&f), epsilon = 1e-15);
        assert!(at_zero.fd_relative_error <= FD_TOL);
        let constant = cumulant_identities(&[0.7; 3], 2.0, &r).unwrap();
        assert_abs_diff_eq!(constant.legendre.lhs, 0.0, epsilon = 1e-15);
        assert!(constant.legendre.holds(1e-14));
    }

    #[test]
    fn epsilon_examples() {
        let r = Distribution::uniform(2);
        let zero = PotentialPair::new(vec![0.0; 2], vec![0.0; 2], 1.0, 1.0, r.clone()).unwrap();
        let report = epsilon_feasibility(&zero, &CostMatrix::hamming(2)).unwrap();
        assert_eq!((report.epsilon, report.j_c_eps), (0.0, 0.0));

        // βf(0) > αg(0) on the zero-cost diagonal cell.
        let pp = PotentialPair::new(vec![1.0, 0.0], vec![0.0, 0.0], 1.0, 1.0, r).unwrap();
        let report = epsilon_feasibility(&pp, &CostMatrix::hamming(2)).unwrap();
        assert_eq!(report.epsilon, f64::INFINITY);
        assert_eq!(kl_upper_bound(&pp, &CostMatrix::hamming(2)).unwrap_err(), Error::InfiniteEpsilon);
    }

    #[test]
    fn bound_for_equal_measures() {
        let r = d(&[0.3, 0.7]);
        let pp = PotentialPair::new(vec![0.4, 0.1], vec![0.4, 0.1], 2.0, 2.0, r).unwrap();
        let c = CostMatrix::grid_abs(2, 1.0);
        let report = kl_upper_bound(&pp, &c).unwrap();
        assert_abs_diff_eq!(report.divergence, 0.0, epsilon = 1e-15);
        assert!(report.slack >= -SOLVER_TOL);
    }

    #[test]
    fn theorem2_small_instance() {
        let report = check_theorem2(2, 1).unwrap();
        assert!(report.identity.holds(SOLVER_TOL), "{:?}", report.identity);
        assert!(report.pair.renormalization_residual() <= 1e-12);
        assert!(check_theorem2(1, 0).is_err());
    }

    #[test]
    fn theorem2_constant_potentials() {
        let r = d(&[0.1, 0.2, 0.7]);
        let pp = PotentialPair::new(vec![0.3; 3], vec![0.3; 3], 1.0, 1.0, r).unwrap();
        let identity = theorem2_identity(&pp, &CostMatrix::grid_abs(3, 1.0)).unwrap();
        assert_abs_diff_eq!(identity.lhs, 0.0, epsilon = 1e-15);
        assert!(identity.holds(1e-12));
    }

    #[test]
    fn legendre_examples() {
        let q = d(&[0.3, 0.7]);
        let p = d(&[0.6, 0.4]);
        assert_abs_diff_eq!(kl_legendre(&[0.0; 4], &q, &p).unwrap(), 0.0, epsilon = 1e-15);
        let w = JointDistribution::from_rows(&[vec![0.1, 0.2], vec![0.4, 0.3]]).unwrap();
        let u: Vec<f64> = (0..4)
            .map(|k| (w.mass()[k] / (q.mass()[k / 2] * p.mass()[k % 2])).ln())
            .collect();
        assert_abs_diff_eq!(kl_legendre(&u, &q, &p).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fenchel_gap(&u, &w, &q, &p).unwrap(), 0.0, epsilon = 1e-15);
    }
}
