mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use simpinn::orbit::{
    ground_track, position_ecef, rasterize, render, solve_kepler, OrbitalElements,
    PhysicsConstants, SplatPoint,
};

fn small_physics() -> PhysicsConstants {
    PhysicsConstants {
        width: 32,
        height: 32,
        n_samples: 64,
        ..PhysicsConstants::default()
    }
}

#[test]
fn kepler_grid_residuals_and_partials() {
    let (res, partial) = common::kepler_grid_errors();
    assert!(res < 1e-12, "worst residual {res:e}");
    assert!(partial < 1e-6, "worst partial error {partial:e}");
}

#[test]
fn kepler_agrees_with_bisection() {
    // independent root: bisection on E − e sin E − M over [0, 2π]
    let bisect = |m: f64, e: f64| {
        let (mut lo, mut hi) = (0.0f64, TAU);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - e * mid.sin() - m < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    for &(m, e) in &[(PI / 2.0, 0.4), (0.3, 0.9), (5.9, 0.95), (3.0, 0.1)] {
        let got = solve_kepler(m, e).unwrap().eccentric_anomaly;
        assert!((got - bisect(m, e)).abs() < 1e-12, "M {m}, e {e}");
    }
}

fn lon_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

proptest! {
    #[test]
    fn radius_stays_between_periapsis_and_apoapsis(
        e in 0.0f64..0.95, i in 0.0f64..TAU, w in 0.0f64..TAU, frac in 0.0f64..1.0,
    ) {
        let c = PhysicsConstants::default();
        let x = OrbitalElements::new(e, i, w).unwrap();
        let p = position_ecef(&x, frac * c.t_span, &c).unwrap();
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let slack = 1e-9 * c.a;
        prop_assert!(r >= c.a * (1.0 - e) - slack && r <= c.a * (1.0 + e) + slack);
    }

    #[test]
    fn ground_track_repeats_after_one_period_without_rotation(
        e in 0.0f64..0.95, i in 0.0f64..TAU, w in 0.0f64..TAU, frac in 0.0f64..1.0,
    ) {
        let c = PhysicsConstants { omega_earth: 0.0, ..PhysicsConstants::default() };
        let x = OrbitalElements::new(e, i, w).unwrap();
        let period = TAU * (c.a.powi(3) / c.mu).sqrt();
        let t = frac * period;
        let p0 = position_ecef(&x, t, &c).unwrap();
        let p1 = position_ecef(&x, t + period, &c).unwrap();
        let (lon0, lat0) = ground_track(p0[0], p0[1], p0[2]).unwrap();
        let (lon1, lat1) = ground_track(p1[0], p1[1], p1[2]).unwrap();
        prop_assert!((lat0 - lat1).abs() < 1e-9);
        // longitude is undefined at the poles; the latitude check covers it
        if lat0.abs() < PI / 2.0 - 1e-6 {
            prop_assert!(lon_distance(lon0, lon1) < 1e-9);
        }
    }

    #[test]
    fn splat_mass_is_conserved_away_from_latitude_edges(
        pts in prop::collection::vec((-PI..PI, -0.9f64..0.9, 0.5f64..2.0), 1..20),
    ) {
        let c = small_physics();
        // keep every point 4σ inside the top and bottom rows
        let margin = 4.0 * c.sigma_splat / c.height as f64 * PI;
        let points: Vec<SplatPoint> = pts
            .iter()
            .map(|&(lon, lat, weight)| SplatPoint {
                lon,
                lat: lat.clamp(-PI / 2.0 + margin, PI / 2.0 - margin),
                weight,
            })
            .collect();
        let image = rasterize(&points, &c);
        let total_weight: f64 = points.iter().map(|p| p.weight).sum();
        // Gaussian mass inside radius 4σ, i.e. 2πσ²·(1 − e^{-8})
        let unit_mass = TAU * c.sigma_splat * c.sigma_splat * (1.0 - (-8.0f64).exp());
        let expected = total_weight * unit_mass / c.n_samples as f64;
        let rel = (image.total() - expected).abs() / expected;
        prop_assert!(rel < 0.01, "relative mass error {}", rel);
    }

    #[test]
    fn render_ignores_full_turns(
        e in 0.0f64..0.95, i in 0.0f64..TAU, w in 0.0f64..TAU, ki in -2i32..3, kw in -2i32..3,
    ) {
        let c = PhysicsConstants { n_samples: 32, width: 24, height: 24, ..PhysicsConstants::default() };
        let base = render(&OrbitalElements::new(e, i, w).unwrap(), &c).unwrap();
        let shifted = OrbitalElements::new(e, i + ki as f64 * TAU, w + kw as f64 * TAU).unwrap();
        let moved = render(&shifted, &c).unwrap();
        let same = base.pixels().iter().zip(moved.pixels()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn render_is_non_negative_and_finite(e in 0.0f64..0.95, i in 0.0f64..TAU, w in 0.0f64..TAU) {
        let c = PhysicsConstants { n_samples: 32, width: 16, height: 16, ..PhysicsConstants::default() };
        let image = render(&OrbitalElements::new(e, i, w).unwrap(), &c).unwrap();
        prop_assert!(image.pixels().iter().all(|p| p.is_finite() && *p >= 0.0));
        prop_assert!(image.total() > 0.0);
    }
}
