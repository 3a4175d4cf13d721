//! Dense complex polynomials, coefficients in ascending degree.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Coefficients below this (relative to the largest) are dropped by the
/// Euclidean gcd.
pub const GCD_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Self { coeffs }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn z() -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// `z - root`.
    pub fn linear(root: Complex64) -> Self {
        Self::new(vec![-root, Complex64::new(1.0, 0.0)])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == Complex64::new(0.0, 0.0)
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Sum of `|c_k| |x|^k`, the natural scale for rounding error in [`eval`](Self::eval).
    pub fn eval_scale(&self, x: Complex64) -> f64 {
        let r = x.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(Complex64::new(0.0, 0.0));
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn powi(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Quotient and remainder; `divisor` must be nonzero.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let dd = divisor.degree();
        if self.degree() < dd {
            return (Self::constant(Complex64::new(0.0, 0.0)), self.clone());
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Complex64::new(0.0, 0.0); self.degree() - dd + 1];
        for i in (0..quot.len()).rev() {
            let q = rem[i + dd] / lead;
            quot[i] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= q * d;
            }
        }
        rem.truncate(dd.max(1));
        (Self::new(quot), Self::new(rem))
    }

    /// Drops trailing coefficients that are negligible relative to `scale`.
    fn trimmed(&self, scale: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= GCD_CUTOFF * scale {
            coeffs.pop();
        }
        if coeffs.len() == 1 && coeffs[0].norm() <= GCD_CUTOFF * scale {
            coeffs[0] = Complex64::new(0.0, 0.0);
        }
        Self::new(coeffs)
    }

    /// Rescaled to unit max-coefficient with negligible coefficients dropped.
    fn normalized(&self) -> Self {
        let scale = self.max_abs();
        if scale == 0.0 {
            return self.clone();
        }
        let trimmed = self.trimmed(scale);
        if trimmed.is_zero() {
            return trimmed;
        }
        trimmed.scale(Complex64::new(1.0 / trimmed.max_abs(), 0.0))
    }

    fn monic(&self) -> Self {
        self.scale(self.leading().inv())
    }

    /// Synthetic division by `(z - x)`; returns quotient and `p(x)`.
    pub fn deflate(&self, x: Complex64) -> (Polynomial, Complex64) {
        let n = self.coeffs.len();
        if n == 1 {
            return (Self::constant(Complex64::new(0.0, 0.0)), self.coeffs[0]);
        }
        let mut quot = vec![Complex64::new(0.0, 0.0); n - 1];
        let mut acc = self.coeffs[n - 1];
        for k in (0..n - 1).rev() {
            quot[k] = acc;
            acc = acc * x + self.coeffs[k];
        }
        (Self::new(quot), acc)
    }

    /// Multiplicity of `x` as a root, judged against `tol` relative to the
    /// evaluation scale; also returns the cofactor `p / (z - x)^mult`.
    pub fn root_multiplicity(&self, x: Complex64, tol: f64) -> (u32, Polynomial) {
        let mut mult = 0;
        let mut current = self.clone();
        while current.degree() > 0 {
            let value = current.eval(x);
            if value.norm() > tol * current.eval_scale(x).max(f64::MIN_POSITIVE) {
                break;
            }
            current = current.deflate(x).0;
            mult += 1;
        }
        (mult, current)
    }

    /// All roots, by Aberth iteration. Repeated roots come back as tight clusters.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let monic = self.monic();
        let deriv = monic.derivative();
        // Initial guesses on a circle of Cauchy-bound radius, rotated off the axes.
        let radius = 1.0
            + monic.coeffs[..n]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(0.5 * radius, std::f64::consts::TAU * (k as f64 + 0.25) / n as f64 + 0.4))
            .collect();
        for _ in 0..500 {
            let mut max_step: f64 = 0.0;
            for i in 0..n {
                let p = monic.eval(z[i]);
                if p == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = p / deriv.eval(z[i]);
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (z[i] - z[j]).inv())
                    .sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if step.is_finite() {
                    z[i] -= step;
                    max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
                }
            }
            if max_step < 1e-15 {
                break;
            }
        }
        z
    }
}

/// Numeric gcd via the monic Euclidean algorithm with coefficient cutoff.
///
/// Every iterate is rescaled to unit max-coefficient so the cutoff is an
/// absolute threshold on normalized remainders.
pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
    let mut x = a.normalized();
    let mut y = b.normalized();
    if x.is_zero() {
        return if y.is_zero() { Polynomial::one() } else { y.monic() };
    }
    while !y.is_zero() {
        let (_, r) = x.div_rem(&y);
        x = y;
        y = r.trimmed(1.0).normalized();
    }
    x.monic()
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Polynomial::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        + rhs.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            match k {
                0 => {}
                1 => write!(f, "z")?,
                _ => write!(f, "z^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn from_roots(roots: &[Complex64]) -> Polynomial {
        roots
            .iter()
            .fold(Polynomial::one(), |acc, &x| &acc * &Polynomial::linear(x))
    }

    #[test]
    fn arithmetic_and_eval() {
        let p = &Polynomial::z() + &Polynomial::constant(r(3.0));
        let sq = p.powi(2);
        assert_eq!(sq.coeffs(), &[r(9.0), r(6.0), r(1.0)]);
        assert_eq!(sq.eval(r(-3.0)), r(0.0));
        assert_eq!(sq.derivative().coeffs(), &[r(6.0), r(2.0)]);
    }

    #[test]
    fn division() {
        let p = from_roots(&[r(1.0), r(2.0), r(-3.0)]);
        let (q, rem) = p.div_rem(&Polynomial::linear(r(2.0)));
        assert!(rem.max_abs() < 1e-14);
        assert!((q.eval(r(1.0))).norm() < 1e-14);
        let (q2, v) = p.deflate(r(2.0));
        assert_eq!(q, q2);
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn gcd_finds_common_factor() {
        let a = from_roots(&[r(1.0), r(2.0), Complex64::new(0.0, 1.0)]);
        let b = from_roots(&[r(2.0), r(-5.0), Complex64::new(0.0, 1.0)]);
        let g = gcd(&a, &b);
        assert_eq!(g.degree(), 2);
        assert!(g.eval(r(2.0)).norm() < 1e-9);
        assert!(g.eval(Complex64::new(0.0, 1.0)).norm() < 1e-9);
        let coprime = gcd(&Polynomial::linear(r(1.0)), &Polynomial::linear(r(2.0)));
        assert_eq!(coprime.degree(), 0);
    }

    #[test]
    fn roots_and_multiplicity() {
        let roots = [r(1.0), Complex64::new(-0.5, 2.0), r(3.0), r(3.0)];
        let p = from_roots(&roots).scale(Complex64::new(2.0, -1.0));
        let found = p.roots();
        assert_eq!(found.len(), 4);
        for x in [r(1.0), Complex64::new(-0.5, 2.0)] {
            assert!(found.iter().any(|z| (z - x).norm() < 1e-9));
        }
        let (m, rest) = p.root_multiplicity(r(3.0), 1e-9);
        assert_eq!(m, 2);
        assert_eq!(rest.degree(), 2);
        assert_eq!(p.root_multiplicity(r(0.0), 1e-9).0, 0);
    }
}
