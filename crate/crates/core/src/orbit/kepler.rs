use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 50;
/// Largest eccentricity the solver is specified for.
pub const SOLVER_E_MAX: f64 = 0.95;

/// Eccentric anomaly together with its implicit partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeplerSolution {
    pub eccentric_anomaly: f64,
    pub de_dm: f64,
    pub de_de: f64,
}

/// Solve `M = E - e sin E` for `E` by Newton iteration.
///
/// `M` is reduced to `[0, 2π)` first, so the returned anomaly lies in the
/// same range. Partials follow from implicit differentiation of Kepler's
/// equation.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<KeplerSolution> {
    if !mean_anomaly.is_finite() {
        return Err(Error::Numeric(format!(
            "kepler: non-finite mean anomaly {mean_anomaly}"
        )));
    }
    if !(0.0..=SOLVER_E_MAX).contains(&e) {
        return Err(Error::Domain(format!(
            "kepler: eccentricity {e} outside [0, {SOLVER_E_MAX}]"
        )));
    }
    let m = mean_anomaly.rem_euclid(TAU);
    let mut ea = if e < 0.8 { m } else { PI };
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let f = ea - e * ea.sin() - m;
        let fp = 1.0 - e * ea.cos();
        let step = f / fp;
        ea -= step;
        if step.abs() < 1e-15 * (1.0 + ea.abs()) {
            converged = true;
            break;
        }
    }
    let residual = ea - e * ea.sin() - m;
    if !converged && residual.abs() >= 1e-12 {
        return Err(Error::Numeric(format!(
            "kepler: no convergence after {MAX_ITERATIONS} iterations (M = {m}, e = {e}, residual = {residual:e})"
        )));
    }
    let denom = 1.0 - e * ea.cos();
    Ok(KeplerSolution {
        eccentric_anomaly: ea,
        de_dm: 1.0 / denom,
        de_de: ea.sin() / denom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: bisection on the monotone Kepler function.
    fn bisect(m: f64, e: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, TAU);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - e * mid.sin() - m > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn circular_orbit_is_identity() {
        let s = solve_kepler(1.3, 0.0).unwrap();
        assert_eq!(s.eccentric_anomaly, 1.3);
        assert_eq!(s.de_dm, 1.0);
    }

    #[test]
    fn apoapsis_is_fixed_point() {
        let s = solve_kepler(PI, 0.4).unwrap();
        assert!((s.eccentric_anomaly - PI).abs() < 1e-15);
    }

    #[test]
    fn quarter_mean_anomaly_matches_bisection() {
        let oracle = bisect(PI / 2.0, 0.4);
        // frozen from the bisection oracle
        assert!((oracle - 1.943_355_822_627_007).abs() < 1e-12);
        let s = solve_kepler(PI / 2.0, 0.4).unwrap();
        assert!((s.eccentric_anomaly - oracle).abs() < 1e-12);
    }

    #[test]
    fn mean_anomaly_is_reduced() {
        let a = solve_kepler(0.7 + 4.0 * TAU, 0.3).unwrap();
        let b = solve_kepler(0.7, 0.3).unwrap();
        assert!((a.eccentric_anomaly - b.eccentric_anomaly).abs() < 1e-12);
        let neg = solve_kepler(-0.2, 0.3).unwrap();
        assert!(neg.eccentric_anomaly > PI);
    }

    #[test]
    fn rejects_out_of_range_eccentricity() {
        assert!(matches!(solve_kepler(1.0, 0.96), Err(Error::Domain(_))));
        assert!(matches!(solve_kepler(1.0, -0.1), Err(Error::Domain(_))));
        assert!(matches!(solve_kepler(f64::NAN, 0.1), Err(Error::Numeric(_))));
    }
}
