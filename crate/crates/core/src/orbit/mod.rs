//! The differentiable forward operator: orbital elements to ground-track image.
//!
//! Pipeline: analytic Kepler propagation, perifocal to inertial rotation,
//! Earth-fixed rotation, ground-track projection and Gaussian splatting onto
//! an equirectangular grid. [`render_jacobian`] carries a three-dimensional
//! forward-mode tangent through the same code to produce `∂image/∂(e, i, ω)`.

mod dual;
mod kepler;
mod raster;
mod render;
mod track;

use std::f64::consts::TAU;

pub use dual::{Dual3, Real};
pub use kepler::{solve_kepler, KeplerSolution, SOLVER_E_MAX};
pub use raster::{rasterize, splat_kernel, SplatPoint, SPLAT_CUTOFF_SIGMAS};
pub use render::{render, render_jacobian, RenderJacobian};
pub use track::{ground_track, position_ecef, position_ecef_generic};

use crate::error::{Error, Result};

pub const MU_EARTH: f64 = 3.986_004_418e14;
pub const OMEGA_EARTH: f64 = 7.292_115_0e-5;
pub const SIDEREAL_DAY: f64 = 86_164.0;
/// Apogee radius of the reference geosynchronous-class orbit, meters.
pub const REFERENCE_APOGEE: f64 = 42_164e3;
pub const REFERENCE_ECCENTRICITY: f64 = 0.4;

/// Angles are stored on a grid of 2^-40 turns so that `θ` and `θ + 2π`
/// canonicalize to the same bit pattern.
const ANGLE_GRID: f64 = (1u64 << 40) as f64;

/// Reduce an angle to `[0, 2π)` on the canonical grid.
pub fn canonical_angle(theta: f64) -> f64 {
    let turns = theta / TAU;
    let frac = turns - turns.floor();
    let q = (frac * ANGLE_GRID).round() / ANGLE_GRID;
    if q >= 1.0 {
        0.0
    } else {
        q * TAU
    }
}

/// The three recovered Keplerian elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitalElements {
    /// Eccentricity, dimensionless, in `[0, 1)`.
    pub e: f64,
    /// Inclination, radians, in `[0, 2π)`.
    pub i: f64,
    /// Argument of periapsis, radians, in `[0, 2π)`.
    pub omega: f64,
}

impl OrbitalElements {
    pub fn new(e: f64, i: f64, omega: f64) -> Result<Self> {
        if !(e.is_finite() && i.is_finite() && omega.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite elements (e = {e}, i = {i}, ω = {omega})"
            )));
        }
        if !(0.0..1.0).contains(&e) {
            return Err(Error::Domain(format!("eccentricity {e} outside [0, 1)")));
        }
        Ok(OrbitalElements {
            e,
            i: canonical_angle(i),
            omega: canonical_angle(omega),
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.e, self.i, self.omega]
    }

    pub fn from_array(x: [f64; 3]) -> Result<Self> {
        Self::new(x[0], x[1], x[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntensityLaw {
    Uniform,
    /// Weight `(a(1-e)/r)^2`: brightest at periapsis.
    InverseSquare,
}

impl IntensityLaw {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntensityLaw::Uniform => "uniform",
            IntensityLaw::InverseSquare => "inverse_square",
        }
    }
}

impl std::str::FromStr for IntensityLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(IntensityLaw::Uniform),
            "inverse_square" => Ok(IntensityLaw::InverseSquare),
            other => Err(Error::Config(format!("unknown intensity law {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicsConstants {
    /// Semi-major axis, meters.
    pub a: f64,
    /// Gravitational parameter, m³/s².
    pub mu: f64,
    /// Earth rotation rate, rad/s.
    pub omega_earth: f64,
    /// Observation window, seconds.
    pub t_span: f64,
    pub n_samples: usize,
    /// Splat standard deviation, pixels.
    pub sigma_splat: f64,
    pub width: usize,
    pub height: usize,
    pub intensity_law: IntensityLaw,
    /// Largest admissible eccentricity.
    pub e_max: f64,
}

impl Default for PhysicsConstants {
    fn default() -> Self {
        PhysicsConstants {
            a: REFERENCE_APOGEE / (1.0 + REFERENCE_ECCENTRICITY),
            mu: MU_EARTH,
            omega_earth: OMEGA_EARTH,
            t_span: SIDEREAL_DAY,
            n_samples: 256,
            sigma_splat: 1.5,
            width: 64,
            height: 64,
            intensity_law: IntensityLaw::Uniform,
            e_max: 0.95,
        }
    }
}

impl PhysicsConstants {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad(format!("semi-major axis must be positive, got {}", self.a));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !self.omega_earth.is_finite() || !(self.t_span.is_finite() && self.t_span >= 0.0) {
            return bad("omega_earth and t_span must be finite, t_span non-negative".into());
        }
        if self.n_samples < 2 {
            return bad(format!("n_samples must be at least 2, got {}", self.n_samples));
        }
        if !(self.sigma_splat > 0.0 && self.sigma_splat.is_finite()) {
            return bad(format!("sigma_splat must be positive, got {}", self.sigma_splat));
        }
        if self.width == 0 || self.height == 0 {
            return bad("image dimensions must be non-zero".into());
        }
        if !(0.0..=SOLVER_E_MAX).contains(&self.e_max) {
            return bad(format!("e_max must lie in [0, {SOLVER_E_MAX}], got {}", self.e_max));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn orbital_period(&self) -> f64 {
        TAU * (self.a.powi(3) / self.mu).sqrt()
    }
}

/// Non-negative row-major intensity grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl SensorImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        SensorImage {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::dim(
                "SensorImage",
                format!("{} pixels for a {width}x{height} image", pixels.len()),
            ));
        }
        if let Some(p) = pixels.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Numeric(format!("invalid pixel value {p}")));
        }
        Ok(SensorImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn total(&self) -> f64 {
        self.pixels.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }
}
