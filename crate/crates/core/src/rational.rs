//! Rational functions on the Riemann sphere, their divisors and tame symbols.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{gcd, Polynomial};

/// Tolerance for deciding that a point is a root when counting multiplicities.
pub const ROOT_TOL: f64 = 1e-9;
/// Numerically computed roots closer than this (relative) are merged into one
/// divisor point. Aberth returns an `m`-fold root as a cluster of radius
/// roughly `eps^{1/m}`.
pub const CLUSTER_TOL: f64 = 1e-4;

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Point {
    Finite(Complex64),
    Infinity,
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Point::Finite(z)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Finite(z) => write!(f, "{z}"),
            Point::Infinity => write!(f, "inf"),
        }
    }
}

/// Zeros (positive order) and poles (negative order) of a rational function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divisor {
    pub points: Vec<(Complex64, i32)>,
    pub order_at_infinity: i32,
}

impl Divisor {
    /// Total degree including the point at infinity; zero for every rational function.
    pub fn degree(&self) -> i32 {
        self.points.iter().map(|(_, m)| m).sum::<i32>() + self.order_at_infinity
    }

    pub fn support(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.points.iter().map(|(z, _)| *z)
    }
}

/// Quotient of complex polynomials in lowest terms, denominator monic.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if num.is_zero() || den.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let common = gcd(&num, &den);
        let (num, den) = if common.degree() > 0 {
            (num.div_rem(&common).0, den.div_rem(&common).0)
        } else {
            (num, den)
        };
        let lead = den.leading().inv();
        Ok(Self {
            num: num.scale(lead),
            den: den.scale(lead),
        })
    }

    pub fn polynomial(p: Polynomial) -> Result<Self> {
        Self::new(p, Polynomial::one())
    }

    pub fn constant(c: Complex64) -> Result<Self> {
        Self::polynomial(Polynomial::constant(c))
    }

    pub fn identity() -> Self {
        Self {
            num: Polynomial::z(),
            den: Polynomial::one(),
        }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == 0
    }

    /// Value at a finite point; infinite at poles.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn mul(&self, other: &RationalFunction) -> Result<Self> {
        Self::new(&self.num * &other.num, &self.den * &other.den)
    }

    pub fn div(&self, other: &RationalFunction) -> Result<Self> {
        Self::new(&self.num * &other.den, &self.den * &other.num)
    }

    pub fn add(&self, other: &RationalFunction) -> Result<Self> {
        Self::new(
            &(&self.num * &other.den) + &(&other.num * &self.den),
            &self.den * &other.den,
        )
    }

    pub fn sub(&self, other: &RationalFunction) -> Result<Self> {
        Self::new(
            &(&self.num * &other.den) - &(&other.num * &self.den),
            &self.den * &other.den,
        )
    }

    pub fn powi(&self, e: i32) -> Result<Self> {
        let (n, d) = (self.num.powi(e.unsigned_abs()), self.den.powi(e.unsigned_abs()));
        if e >= 0 {
            Self::new(n, d)
        } else {
            Self::new(d, n)
        }
    }

    /// Order of vanishing at `x` and the value there of `f / t^order`, where
    /// `t = z - x` (or `1/z` at infinity) is the local coordinate.
    pub fn local_unit(&self, x: Point) -> (i32, Complex64) {
        match x {
            Point::Finite(x) => {
                let (zeros, num_rest) = self.num.root_multiplicity(x, ROOT_TOL);
                let (poles, den_rest) = self.den.root_multiplicity(x, ROOT_TOL);
                (zeros as i32 - poles as i32, num_rest.eval(x) / den_rest.eval(x))
            }
            Point::Infinity => (
                self.den.degree() as i32 - self.num.degree() as i32,
                self.num.leading() / self.den.leading(),
            ),
        }
    }

    pub fn order_at(&self, x: Point) -> i32 {
        self.local_unit(x).0
    }

    pub fn divisor(&self) -> Divisor {
        let mut points = cluster_roots(&self.num.roots());
        points.extend(cluster_roots(&self.den.roots()).into_iter().map(|(z, m)| (z, -m)));
        Divisor {
            points,
            order_at_infinity: self.order_at(Point::Infinity),
        }
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_polynomial() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "[{}] / [{}]", self.num, self.den)
        }
    }
}

fn cluster_roots(roots: &[Complex64]) -> Vec<(Complex64, i32)> {
    let mut clusters: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    for &r in roots {
        match clusters
            .iter_mut()
            .find(|(c, members)| {
                members
                    .iter()
                    .any(|m| (m - r).norm() < CLUSTER_TOL * c.norm().max(1.0))
            })
        {
            Some((center, members)) => {
                members.push(r);
                *center = members.iter().sum::<Complex64>() / members.len() as f64;
            }
            None => clusters.push((r, vec![r])),
        }
    }
    clusters
        .into_iter()
        .map(|(c, members)| (c, members.len() as i32))
        .collect()
}

pub fn order_at(f: &RationalFunction, x: Point) -> i32 {
    f.order_at(x)
}

/// `(-1)^{ab} (f^b / g^a)(x)` with `a = ord_x f`, `b = ord_x g`.
///
/// The `(z - x)`-powers are divided out of numerators and denominators before
/// evaluating, so the result is a plain product of local unit values.
pub fn tame_symbol(f: &RationalFunction, g: &RationalFunction, x: Point) -> Complex64 {
    let (a, u) = f.local_unit(x);
    let (b, v) = g.local_unit(x);
    let sign = if (a * b) % 2 == 0 { 1.0 } else { -1.0 };
    u.powi(b) / v.powi(a) * sign
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lin(root: f64) -> RationalFunction {
        RationalFunction::polynomial(Polynomial::linear(c(root, 0.0))).unwrap()
    }

    fn fin(x: f64) -> Point {
        Point::Finite(c(x, 0.0))
    }

    #[test]
    fn reduces_common_factors() {
        let f = lin(2.0).mul(&lin(1.0)).unwrap().div(&lin(1.0)).unwrap();
        assert_eq!(f.numerator().degree(), 1);
        assert_eq!(f.denominator().degree(), 0);
        assert!((f.eval(c(5.0, 0.0)) - 3.0).norm() < 1e-12);
    }

    #[test]
    fn order_examples() {
        let z = RationalFunction::identity();
        assert_eq!(order_at(&z, fin(0.0)), 1);
        let inv = RationalFunction::constant(c(1.0, 0.0)).unwrap().div(&lin(2.0)).unwrap();
        assert_eq!(order_at(&inv, fin(2.0)), -1);
        let f = lin(2.0).div(&lin(-3.0).powi(2).unwrap()).unwrap();
        assert_eq!(order_at(&f, Point::Infinity), 1);
        assert_eq!(order_at(&f, fin(-3.0)), -2);
        assert_eq!(order_at(&f, fin(7.0)), 0);
    }

    #[test]
    fn tame_examples() {
        let z = RationalFunction::identity();
        let one_minus_z = RationalFunction::constant(c(1.0, 0.0)).unwrap().sub(&z).unwrap();
        assert_eq!(tame_symbol(&z, &z, fin(0.0)), c(-1.0, 0.0));
        assert!((tame_symbol(&z, &one_minus_z, fin(0.0)) - 1.0).norm() < 1e-15);
        assert!((tame_symbol(&lin(2.0), &z, fin(0.0)) + 2.0).norm() < 1e-15);
        let two = RationalFunction::constant(c(2.0, 0.0)).unwrap();
        assert!((tame_symbol(&z, &two, fin(0.0)) - 0.5).norm() < 1e-15);
    }

    #[test]
    fn tame_at_infinity() {
        // ord_inf z = -1, ord_inf (z-2) = -1, local units both 1: (-1)^1 * 1 = -1.
        let z = RationalFunction::identity();
        assert!((tame_symbol(&z, &lin(2.0), Point::Infinity) + 1.0).norm() < 1e-15);
        // {3z, 2}: a = -1, b = 0 -> 3^0 / 2^{-1} = 2.
        let three_z = z.mul(&RationalFunction::constant(c(3.0, 0.0)).unwrap()).unwrap();
        let two = RationalFunction::constant(c(2.0, 0.0)).unwrap();
        assert!((tame_symbol(&three_z, &two, Point::Infinity) - 2.0).norm() < 1e-15);
    }

    #[test]
    fn divisor_has_degree_zero() {
        let f = lin(2.0)
            .mul(&lin(1.0).powi(2).unwrap())
            .unwrap()
            .div(&lin(-3.0).powi(3).unwrap())
            .unwrap();
        let d = f.divisor();
        assert_eq!(d.degree(), 0);
        assert_eq!(d.order_at_infinity, 0);
        let double = d.points.iter().find(|(z, _)| (z - 1.0).norm() < 1e-6).unwrap();
        assert_eq!(double.1, 2);
        let triple = d.points.iter().find(|(z, _)| (z + 3.0).norm() < 1e-4).unwrap();
        assert_eq!(triple.1, -3);
    }

    #[test]
    fn zero_is_rejected() {
        assert_eq!(lin(1.0).sub(&lin(1.0)).unwrap_err(), Error::ZeroFunction);
    }
}
