use std::f64::consts::PI;

use super::dual::Real;
use super::kepler::solve_kepler;
use super::{OrbitalElements, PhysicsConstants};
use crate::error::{Error, Result};

/// Earth-fixed position at time `t`, generic over the scalar so the same code
/// yields plain values or forward-mode tangents.
///
/// Returns the position and the orbital radius `r = a(1 - e cos E)`.
pub fn position_ecef_generic<T: Real>(
    e: T,
    i: T,
    omega: T,
    t: f64,
    c: &PhysicsConstants,
) -> Result<([T; 3], T)> {
    let mean_motion = (c.mu / (c.a * c.a * c.a)).sqrt();
    let m = mean_motion * t;
    let sol = solve_kepler(m, e.value())?;
    let ea = e.chain(sol.eccentric_anomaly, sol.de_de);

    let one = T::cst(1.0);
    let a = T::cst(c.a);
    let r = a * (one - e * ea.cos());
    let half = T::cst(0.5) * ea;
    let nu = T::cst(2.0) * ((one + e).sqrt() * half.sin()).atan2((one - e).sqrt() * half.cos());
    let xp = r * nu.cos();
    let yp = r * nu.sin();

    // R_z(ω): perifocal to the node frame
    let (sw, cw) = (omega.sin(), omega.cos());
    let x1 = xp * cw - yp * sw;
    let y1 = xp * sw + yp * cw;
    // R_x(i); the ascending node is pinned at zero longitude
    let (si, ci) = (i.sin(), i.cos());
    let xi = x1;
    let yi = y1 * ci;
    let zi = y1 * si;
    // R_z(-θ): inertial to Earth-fixed
    let theta = c.omega_earth * t;
    let (st, ct) = (T::cst(theta.sin()), T::cst(theta.cos()));
    let px = xi * ct + yi * st;
    let py = yi * ct - xi * st;
    Ok(([px, py, zi], r))
}

/// Earth-fixed (TRF) position of the satellite at time `t`, meters.
pub fn position_ecef(x: &OrbitalElements, t: f64, c: &PhysicsConstants) -> Result<[f64; 3]> {
    position_ecef_generic(x.e, x.i, x.omega, t, c).map(|(p, _)| p)
}

pub(crate) fn ground_track_generic<T: Real>(p: [T; 3]) -> Result<(T, T)> {
    let [px, py, pz] = p;
    let norm = (px * px + py * py + pz * pz).sqrt();
    if !(norm.value() > 0.0) {
        return Err(Error::Numeric("ground track of a zero-norm position".into()));
    }
    let mut lon = py.atan2(px);
    if lon.value() >= PI {
        lon = lon.with_value(-PI);
    }
    let lat = (pz / norm).asin();
    Ok((lon, lat))
}

/// Sub-satellite longitude in `[-π, π)` and latitude in `[-π/2, π/2]`.
pub fn ground_track(px: f64, py: f64, pz: f64) -> Result<(f64, f64)> {
    ground_track_generic([px, py, pz])
}
