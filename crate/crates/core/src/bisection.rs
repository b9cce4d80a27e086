//! Inverse-temperature search shared by the channel and the constrained
//! transport solvers. Both have achieved information non-decreasing in `β`.

use crate::error::Result;

/// Bisection stops once the achieved information is within this of the
/// budget (from below).
pub const BISECTION_INFO_TOL: f64 = 1e-10;
/// Upper limit for the doubling phase of the bracket.
pub const BETA_CAP: f64 = 1e8;
/// The first bracket end is `BRACKET_SCALE / (smallest positive cost gap)`.
pub const BRACKET_SCALE: f64 = 50.0;
const MAX_BISECTIONS: usize = 200;

pub(crate) struct BetaSearch<S> {
    pub solution: S,
    pub bisections: usize,
}

/// Finds the largest bracketed `β` whose solution has `info ≤ λ`.
///
/// `at_zero` is the `β = 0` solution. `solve(β, warm)` receives the current
/// lower bracket end (solution and its `β`) when that end is positive.
pub(crate) fn search_beta<S>(
    lambda: f64,
    cost_gap: f64,
    at_zero: S,
    info: impl Fn(&S) -> f64,
    mut solve: impl FnMut(f64, Option<(&S, f64)>) -> Result<S>,
) -> Result<BetaSearch<S>> {
    let mut lo = 0.0;
    let mut lo_sol = at_zero;
    let mut hi = BRACKET_SCALE / cost_gap;
    loop {
        let warm = (lo > 0.0).then_some((&lo_sol, lo));
        let sol = solve(hi, warm)?;
        if info(&sol) > lambda {
            break;
        }
        lo = hi;
        lo_sol = sol;
        if hi >= BETA_CAP {
            return Ok(BetaSearch {
                solution: lo_sol,
                bisections: 0,
            });
        }
        hi = (hi * 2.0).min(BETA_CAP);
    }

    let mut bisections = 0;
    while info(&lo_sol) < lambda - BISECTION_INFO_TOL && bisections < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        bisections += 1;
        let warm = (lo > 0.0).then_some((&lo_sol, lo));
        let sol = solve(mid, warm)?;
        if info(&sol) <= lambda {
            lo = mid;
            lo_sol = sol;
        } else {
            hi = mid;
        }
    }
    Ok(BetaSearch {
        solution: lo_sol,
        bisections,
    })
}
