use super::dual::{Dual3, Real};
use super::raster::{splat_into, SplatPoint, SplatTangent};
use super::track::{ground_track_generic, position_ecef_generic};
use super::{IntensityLaw, OrbitalElements, PhysicsConstants, SensorImage};
use crate::error::{Error, Result};

/// Image together with its Jacobian with respect to (e, i, ω).
#[derive(Clone, Debug)]
pub struct RenderJacobian {
    pub image: SensorImage,
    /// Row-major `(width·height) × 3`.
    pub jacobian: Vec<f64>,
}

impl RenderJacobian {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.jacobian.iter().skip(k).step_by(3).copied().collect()
    }
}

fn check_domain(x: &OrbitalElements, c: &PhysicsConstants) -> Result<()> {
    c.validate()?;
    if !(0.0..=c.e_max).contains(&x.e) {
        return Err(Error::Domain(format!(
            "eccentricity {} outside [0, {}]",
            x.e, c.e_max
        )));
    }
    Ok(())
}

fn sample_time(k: usize, c: &PhysicsConstants) -> f64 {
    k as f64 * c.t_span / (c.n_samples - 1) as f64
}

fn track_point<T: Real>(
    e: T,
    i: T,
    omega: T,
    t: f64,
    c: &PhysicsConstants,
) -> Result<(T, T, T)> {
    let (p, r) = position_ecef_generic(e, i, omega, t, c)?;
    let (lon, lat) = ground_track_generic(p)?;
    let weight = match c.intensity_law {
        IntensityLaw::Uniform => T::cst(1.0),
        IntensityLaw::InverseSquare => {
            let q = T::cst(c.a) * (T::cst(1.0) - e) / r;
            q * q
        }
    };
    Ok((lon, lat, weight))
}

fn finish(mut image: SensorImage, c: &PhysicsConstants) -> SensorImage {
    let inv_n = 1.0 / c.n_samples as f64;
    for p in image.pixels_mut() {
        *p *= inv_n;
    }
    image
}

/// Forward operator: ground-track image of the orbit over `[0, t_span]`.
pub fn render(x: &OrbitalElements, c: &PhysicsConstants) -> Result<SensorImage> {
    check_domain(x, c)?;
    let points = (0..c.n_samples)
        .map(|k| {
            let (lon, lat, weight) = track_point(x.e, x.i, x.omega, sample_time(k, c), c)?;
            Ok(SplatPoint { lon, lat, weight })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut image = SensorImage::zeros(c.width, c.height);
    splat_into(&points, None, c, image.pixels_mut(), None);
    Ok(finish(image, c))
}

/// [`render`] plus `∂pixels/∂(e, i, ω)` by forward-mode differentiation of the
/// whole pipeline. The image is bitwise equal to `render(x)`.
pub fn render_jacobian(x: &OrbitalElements, c: &PhysicsConstants) -> Result<RenderJacobian> {
    check_domain(x, c)?;
    let e = Dual3::variable(x.e, 0);
    let i = Dual3::variable(x.i, 1);
    let omega = Dual3::variable(x.omega, 2);
    let mut points = Vec::with_capacity(c.n_samples);
    let mut tangents = Vec::with_capacity(c.n_samples);
    for k in 0..c.n_samples {
        let (lon, lat, weight) = track_point(e, i, omega, sample_time(k, c), c)?;
        if !(lon.is_finite() && lat.is_finite() && weight.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite ground-track derivative at sample {k} (pole crossing?)"
            )));
        }
        points.push(SplatPoint {
            lon: lon.v,
            lat: lat.v,
            weight: weight.v,
        });
        tangents.push(SplatTangent {
            lon: lon.d,
            lat: lat.d,
            weight: weight.d,
        });
    }
    let mut image = SensorImage::zeros(c.width, c.height);
    let mut jacobian = vec![0.0; c.pixel_count() * 3];
    splat_into(&points, Some(&tangents), c, image.pixels_mut(), Some(&mut jacobian));
    let inv_n = 1.0 / c.n_samples as f64;
    for j in &mut jacobian {
        *j *= inv_n;
    }
    Ok(RenderJacobian {
        image: finish(image, c),
        jacobian,
    })
}
