use std::f64::consts::{PI, TAU};

use super::{PhysicsConstants, SensorImage};

/// Splat support radius in units of `sigma_splat`.
pub const SPLAT_CUTOFF_SIGMAS: f64 = 4.0;
/// Squared-distance parameter `s = d²/2σ²` at the cutoff radius.
const S_CUTOFF: f64 = 0.5 * SPLAT_CUTOFF_SIGMAS * SPLAT_CUTOFF_SIGMAS;
/// Start of the smooth taper, `d = 2√3 σ`.
const S_TAPER: f64 = 6.0;

/// One ground-track sample to deposit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatPoint {
    pub lon: f64,
    pub lat: f64,
    pub weight: f64,
}

/// Tangents of a splat point with respect to (e, i, ω).
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct SplatTangent {
    pub lon: [f64; 3],
    pub lat: [f64; 3],
    pub weight: [f64; 3],
}

/// Truncated Gaussian `exp(-s)` with a C¹ cubic taper on `s ∈ [6, 8]`.
///
/// Returns the kernel value and `dk/ds`. The taper makes the kernel and its
/// first derivative vanish at the 4σ cutoff, so pixels entering or leaving
/// the support do not introduce jumps into the image.
#[inline]
pub fn splat_kernel(s: f64) -> (f64, f64) {
    if s >= S_CUTOFF {
        return (0.0, 0.0);
    }
    taper((-s).exp(), s)
}

/// Kernel from a precomputed `g = exp(-s)`, for `s < S_CUTOFF`.
#[inline]
fn taper(g: f64, s: f64) -> (f64, f64) {
    if s <= S_TAPER {
        return (g, -g);
    }
    let t = (s - S_TAPER) / (S_CUTOFF - S_TAPER);
    let w = 1.0 - t * t * (3.0 - 2.0 * t);
    let dw_ds = -6.0 * t * (1.0 - t) / (S_CUTOFF - S_TAPER);
    (g * w, g * (dw_ds - w))
}

#[inline]
fn pixel_coords(p: &SplatPoint, c: &PhysicsConstants) -> (f64, f64) {
    let u = (p.lon + PI) / TAU * c.width as f64;
    let v = (p.lat + 0.5 * PI) / PI * c.height as f64;
    (u, v)
}

/// Deposit points into `image` (accumulated, not yet normalized) and, when
/// tangents are given, into the row-major `(width·height) × 3` Jacobian.
pub(crate) fn splat_into(
    points: &[SplatPoint],
    tangents: Option<&[SplatTangent]>,
    c: &PhysicsConstants,
    image: &mut [f64],
    mut jac: Option<&mut [f64]>,
) {
    let (w, h) = (c.width as i64, c.height as i64);
    let sigma = c.sigma_splat;
    let inv_two_sigma2 = 0.5 / (sigma * sigma);
    let inv_sigma2 = 1.0 / (sigma * sigma);
    let radius = SPLAT_CUTOFF_SIGMAS * sigma;
    let du_dlon = c.width as f64 / TAU;
    let dv_dlat = c.height as f64 / PI;

    // exp(-s) factors into per-column and per-row terms
    let mut cols: Vec<(usize, f64, f64, f64)> = Vec::new();
    for (k, p) in points.iter().enumerate() {
        let (u, v) = pixel_coords(p, c);
        let c_lo = (u - radius).ceil() as i64;
        let c_hi = (u + radius).floor() as i64;
        let r_lo = ((v - radius).ceil() as i64).max(0);
        let r_hi = ((v + radius).floor() as i64).min(h - 1);
        cols.clear();
        cols.extend((c_lo..=c_hi).map(|col| {
            let du = u - col as f64;
            let su = du * du * inv_two_sigma2;
            (col.rem_euclid(w) as usize, du, su, (-su).exp())
        }));
        // ds/dx = (du·∂u/∂x + dv·∂v/∂x)/σ², folded into the kernel slope below
        let tangent = tangents.map(|t| {
            let t = t[k];
            (t, t.lon.map(|d| d * du_dlon), t.lat.map(|d| d * dv_dlat))
        });
        for row in r_lo..=r_hi {
            let dv = v - row as f64;
            let sv = dv * dv * inv_two_sigma2;
            let ey = (-sv).exp();
            let base = row as usize * w as usize;
            for &(col, du, su, gx) in &cols {
                let s = su + sv;
                if s >= S_CUTOFF {
                    continue;
                }
                let (kv, dk_ds) = taper(gx * ey, s);
                let idx = base + col;
                image[idx] += p.weight * kv;
                if let (Some((t, dlon, dlat)), Some(jac)) = (tangent.as_ref(), jac.as_deref_mut()) {
                    let scale = p.weight * dk_ds * inv_sigma2;
                    let row_j = &mut jac[idx * 3..idx * 3 + 3];
                    for (x, slot) in row_j.iter_mut().enumerate() {
                        let ds = du * dlon[x] + dv * dlat[x];
                        *slot += t.weight[x] * kv + scale * ds;
                    }
                }
            }
        }
    }
}

/// Gaussian splatting of ground-track points onto an equirectangular grid.
///
/// Longitude wraps periodically, latitude is clipped at the image border, and
/// the result is divided by `n_samples`.
pub fn rasterize(points: &[SplatPoint], c: &PhysicsConstants) -> SensorImage {
    let mut image = SensorImage::zeros(c.width, c.height);
    splat_into(points, None, c, image.pixels_mut(), None);
    let inv_n = 1.0 / c.n_samples as f64;
    for p in image.pixels_mut() {
        *p *= inv_n;
    }
    image
}
