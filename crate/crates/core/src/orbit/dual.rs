//! Forward-mode dual numbers with a fixed three-dimensional tangent.
//!
//! The forward operator is written once, generically over [`Real`], and
//! instantiated with `f64` (plain render) and [`Dual3`] (render plus Jacobian
//! columns). Every `Dual3` operation computes its value part with exactly the
//! same floating-point operation as the `f64` instance, so both paths produce
//! bitwise-identical images.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn asin(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    /// New quantity whose value is `value` and whose derivative with respect
    /// to `self` is `slope` (implicit-function lifting).
    fn chain(self, value: f64, slope: f64) -> Self;
    /// Replace the value, keep the tangent (used for branch-cut remapping).
    fn with_value(self, value: f64) -> Self;
    fn is_finite(self) -> bool;
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn asin(self) -> Self {
        f64::asin(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    #[inline]
    fn chain(self, value: f64, _slope: f64) -> Self {
        value
    }
    #[inline]
    fn with_value(self, value: f64) -> Self {
        value
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Value plus gradient with respect to the three orbital elements (e, i, ω).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual3 {
    pub v: f64,
    pub d: [f64; 3],
}

impl Dual3 {
    pub fn variable(v: f64, index: usize) -> Self {
        let mut d = [0.0; 3];
        d[index] = 1.0;
        Dual3 { v, d }
    }

    #[inline]
    fn scaled(self, value: f64, slope: f64) -> Self {
        Dual3 {
            v: value,
            d: [slope * self.d[0], slope * self.d[1], slope * self.d[2]],
        }
    }
}

impl Add for Dual3 {
    type Output = Dual3;
    #[inline]
    fn add(self, o: Dual3) -> Dual3 {
        Dual3 {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1], self.d[2] + o.d[2]],
        }
    }
}

impl Sub for Dual3 {
    type Output = Dual3;
    #[inline]
    fn sub(self, o: Dual3) -> Dual3 {
        Dual3 {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1], self.d[2] - o.d[2]],
        }
    }
}

impl Mul for Dual3 {
    type Output = Dual3;
    #[inline]
    fn mul(self, o: Dual3) -> Dual3 {
        let mut d = [0.0; 3];
        for k in 0..3 {
            d[k] = self.d[k] * o.v + self.v * o.d[k];
        }
        Dual3 { v: self.v * o.v, d }
    }
}

impl Div for Dual3 {
    type Output = Dual3;
    #[inline]
    fn div(self, o: Dual3) -> Dual3 {
        let v = self.v / o.v;
        let mut d = [0.0; 3];
        for k in 0..3 {
            d[k] = (self.d[k] - v * o.d[k]) / o.v;
        }
        Dual3 { v, d }
    }
}

impl Neg for Dual3 {
    type Output = Dual3;
    #[inline]
    fn neg(self) -> Dual3 {
        Dual3 {
            v: -self.v,
            d: [-self.d[0], -self.d[1], -self.d[2]],
        }
    }
}

impl Real for Dual3 {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual3 { v, d: [0.0; 3] }
    }
    #[inline]
    fn value(self) -> f64 {
        self.v
    }
    #[inline]
    fn sin(self) -> Self {
        self.scaled(self.v.sin(), self.v.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        self.scaled(self.v.cos(), -self.v.sin())
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.scaled(s, 0.5 / s)
    }
    #[inline]
    fn asin(self) -> Self {
        self.scaled(self.v.asin(), 1.0 / (1.0 - self.v * self.v).sqrt())
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        let (y, xv) = (self.v, x.v);
        let r2 = xv * xv + y * y;
        let mut d = [0.0; 3];
        for k in 0..3 {
            d[k] = (xv * self.d[k] - y * x.d[k]) / r2;
        }
        Dual3 { v: y.atan2(xv), d }
    }
    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        self.scaled(value, slope)
    }
    #[inline]
    fn with_value(self, value: f64) -> Self {
        Dual3 { v: value, d: self.d }
    }
    fn is_finite(self) -> bool {
        self.v.is_finite() && self.d.iter().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_derivatives_match_finite_differences() {
        let x0 = 0.37;
        let x = Dual3::variable(x0, 0);
        let y = Dual3::cst(1.3);
        let cases: Vec<(Dual3, f64)> = vec![
            (x.sin() * x.cos(), fd(|t| t.sin() * t.cos(), x0)),
            ((x * x + y).sqrt(), fd(|t| (t * t + 1.3).sqrt(), x0)),
            (x.asin(), fd(f64::asin, x0)),
            (x.atan2(y - x), fd(|t| t.atan2(1.3 - t), x0)),
            (y / (x * x), fd(|t| 1.3 / (t * t), x0)),
        ];
        for (dual, expected) in cases {
            assert!((dual.d[0] - expected).abs() < 1e-8, "{dual:?} vs {expected}");
            assert_eq!(dual.d[1], 0.0);
        }
    }

    #[test]
    fn value_part_matches_f64_bitwise() {
        let a = 0.813_f64;
        let b = -2.2_f64;
        let da = Dual3::variable(a, 1);
        let db = Dual3::variable(b, 2);
        let plain = (a.sin() * b + a / b).atan2(b.cos() - a).sin();
        let dual = (da.sin() * db + da / db).atan2(db.cos() - da).sin();
        assert_eq!(plain.to_bits(), dual.v.to_bits());
    }
}
