//! Analytic evaluations of the regulator pairing `R{p, q}`.
//!
//! Two independent routes are provided. [`regulator_integral`] evaluates the
//! monodromy integral
//!
//! ```text
//! exp{ (1/2 pi i) ( int log p d log q  -  log q(1) int d log p ) }
//! ```
//!
//! by quadrature on the grid, and [`regulator_fourier`] evaluates the
//! equivalent Fourier-coefficient closed form
//!
//! ```text
//! (-1)^{mn} exp( n a(0) - m b(0) + sum_k k a(-k) b(k) )
//! ```
//!
//! where `m, n` are winding numbers and `a, b` the coefficients of the
//! continuous logarithms of `p / z^m` and `q / z^n`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::circle::{
    continuous_log, periodic_integral, spectral_derivative, theta_moment, CircleFunction,
    LogDecomposition, VANISH_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::{compose, Loop, SteinbergSymbolInstance};
use crate::rational::RationalFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    ContourIntegral,
    OperatorDeterminant,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::ContourIntegral => "contour_integral",
            Method::OperatorDeterminant => "operator_determinant",
        }
    }
}

/// A value of the pairing with the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegulatorValue {
    pub value: Complex64,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

impl RegulatorValue {
    fn new(value: Complex64, method: Method) -> Self {
        Self {
            value,
            method,
            diagnostics: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    /// `|self / other - 1|`.
    pub fn deviation_from(&self, other: Complex64) -> f64 {
        relative_deviation(self.value, other)
    }
}

/// Multiplicative deviation `|a / b - 1|`, the natural distance on `C^x`.
pub fn relative_deviation(a: Complex64, b: Complex64) -> f64 {
    (a / b - 1.0).norm()
}

/// Winding numbers and continuous logarithms of both entries of a symbol.
#[derive(Debug, Clone)]
pub struct SymbolDecomposition {
    pub p: LogDecomposition,
    pub q: LogDecomposition,
}

impl SymbolDecomposition {
    pub fn m(&self) -> i64 {
        self.p.winding
    }

    pub fn n(&self) -> i64 {
        self.q.winding
    }
}

fn checked_log(f: &CircleFunction) -> Result<LogDecomposition> {
    f.ensure_resolved()?;
    let d = continuous_log(f)?;
    d.alpha.ensure_resolved()?;
    Ok(d)
}

/// `p = z^m e^alpha`, `q = z^n e^beta`.
pub fn decompose_symbol(p: &CircleFunction, q: &CircleFunction) -> Result<SymbolDecomposition> {
    if p.grid_size() != q.grid_size() {
        return Err(Error::GridMismatch {
            left: p.grid_size(),
            right: q.grid_size(),
        });
    }
    Ok(SymbolDecomposition {
        p: checked_log(p)?,
        q: checked_log(q)?,
    })
}

fn parity_sign(e: i64) -> f64 {
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sum_k k a(-k) b(k)` over the resolved band, excluding the Nyquist mode.
pub fn helton_howe_exponent(alpha: &CircleFunction, beta: &CircleFunction) -> Complex64 {
    let (a, b) = (alpha.spectrum(), beta.spectrum());
    let kmax = a.max_mode();
    (1..=kmax)
        .map(|k| (b.get(k) * a.get(-k) - b.get(-k) * a.get(k)) * k as f64)
        .sum()
}

/// Closed form from an existing decomposition; branch choices in the
/// decomposition are the caller's.
pub fn closed_form(d: &SymbolDecomposition) -> RegulatorValue {
    let (m, n) = (d.m(), d.n());
    let exponent = d.p.alpha0 * n as f64 - d.q.alpha0 * m as f64
        + helton_howe_exponent(&d.p.alpha, &d.q.alpha);
    let (a, b) = (d.p.alpha.spectrum(), d.q.alpha.spectrum());
    let kmax = a.max_mode();
    let tail = kmax as f64
        * (a.get(kmax).norm() * b.get(-kmax).norm() + a.get(-kmax).norm() * b.get(kmax).norm());
    RegulatorValue::new(exponent.exp() * parity_sign(m * n), Method::ClosedForm)
        .with("grid", d.p.alpha.grid_size() as f64)
        .with("winding_p", m as f64)
        .with("winding_q", n as f64)
        .with("tail_bound", tail)
}

/// Reference evaluation through Fourier coefficients of the logarithms.
pub fn regulator_fourier(p: &CircleFunction, q: &CircleFunction) -> Result<RegulatorValue> {
    Ok(closed_form(&decompose_symbol(p, q)?))
}

/// Contour integral from given continuous logarithms of `p` and `q`.
///
/// `log p` is `i m theta + alpha(theta)`; its linear part is integrated against
/// `d log q` exactly via [`theta_moment`], the periodic part by the trapezoid
/// rule. `log q(1)` is the continuous logarithm of `q` at `theta = 0`.
pub fn integral_from_logs(
    p: &CircleFunction,
    q: &CircleFunction,
    dp: &LogDecomposition,
    dq: &LogDecomposition,
) -> Result<RegulatorValue> {
    let m = dp.winding;
    let dlog_q = spectral_derivative(q).div(q)?;
    let dlog_p = spectral_derivative(p).div(p)?;
    let i = Complex64::new(0.0, 1.0);
    let log_p_dlog_q =
        i * m as f64 * theta_moment(&dlog_q) + periodic_integral(&dp.alpha.mul(&dlog_q)?);
    let log_q_at_one = dq.full_log(0);
    let two_pi_i = Complex64::new(0.0, TAU);
    let exponent = (log_p_dlog_q - log_q_at_one * two_pi_i * m as f64) / two_pi_i;
    // The winding number as a quadrature of d log p, for comparison with m.
    let winding_residual = (periodic_integral(&dlog_p) / two_pi_i - m as f64).norm();
    Ok(RegulatorValue::new(exponent.exp(), Method::ContourIntegral)
        .with("grid", p.grid_size() as f64)
        .with("winding_p", m as f64)
        .with("winding_q", dq.winding as f64)
        .with("winding_residual", winding_residual))
}

pub fn regulator_integral(p: &CircleFunction, q: &CircleFunction) -> Result<RegulatorValue> {
    let d = decompose_symbol(p, q)?;
    integral_from_logs(p, q, &d.p, &d.q)
}

/// Pairing of the symbol `{f, g}` with the loop `gamma`, based at `gamma(0)`.
pub fn beilinson_pairing(
    f: &RationalFunction,
    g: &RationalFunction,
    gamma: &Loop,
    grid: usize,
) -> Result<RegulatorValue> {
    let sym = SteinbergSymbolInstance::from_rational(f, g, gamma, grid)?;
    let base = gamma.basepoint();
    Ok(regulator_integral(&sym.p, &sym.q)?
        .with("basepoint_re", base.re)
        .with("basepoint_im", base.im))
}

/// As [`beilinson_pairing`], regarding `{f, g}` as a symbol on the complement
/// of a larger puncture set: the loop must also avoid `punctures`.
pub fn beilinson_pairing_avoiding(
    f: &RationalFunction,
    g: &RationalFunction,
    gamma: &Loop,
    grid: usize,
    punctures: &[Complex64],
) -> Result<RegulatorValue> {
    gamma.ensure_avoids(punctures, grid)?;
    beilinson_pairing(f, g, gamma, grid)
}

/// `(1/2 pi) int_gamma log|f| d arg g - log|g| d arg f`.
pub fn real_regulator(
    f: &RationalFunction,
    g: &RationalFunction,
    gamma: &Loop,
    grid: usize,
) -> Result<f64> {
    let sym = SteinbergSymbolInstance::from_rational(f, g, gamma, grid)?;
    let (p, q) = (&sym.p, &sym.q);
    let darg_p = spectral_derivative(p).div(p)?.map(|z| Complex64::new(z.im, 0.0));
    let darg_q = spectral_derivative(q).div(q)?.map(|z| Complex64::new(z.im, 0.0));
    let log_abs_p = p.map(|z| Complex64::new(z.norm().ln(), 0.0));
    let log_abs_q = q.map(|z| Complex64::new(z.norm().ln(), 0.0));
    let integral =
        periodic_integral(&log_abs_p.mul(&darg_q)?) - periodic_integral(&log_abs_q.mul(&darg_p)?);
    Ok(integral.re / TAU)
}

/// Mahler measure of a polynomial together with the regulator it matches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MahlerMeasure {
    /// `(1/2 pi) int log|P(e^{i theta})| d theta`.
    pub value: f64,
    /// `log|R{P o circle, z}|`; the pairing is taken in the order `(P, z)`,
    /// the reversed order flips the sign.
    pub regulator_log_abs: f64,
    pub deviation: f64,
}

pub fn mahler_measure(poly: &RationalFunction, grid: usize) -> Result<MahlerMeasure> {
    if !poly.is_polynomial() {
        return Err(Error::NotPolynomial);
    }
    if let Some(root) = poly
        .numerator()
        .roots()
        .into_iter()
        .find(|r| (r.norm() - 1.0).abs() <= VANISH_TOL)
    {
        return Err(Error::RootOnContour { root });
    }
    let unit = Loop::unit_circle();
    let values = compose(poly, &unit, grid)?;
    let log_abs = values.map(|z| Complex64::new(z.norm().ln(), 0.0));
    let value = periodic_integral(&log_abs).re / TAU;
    let z = CircleFunction::mode(grid, 1)?;
    let regulator_log_abs = regulator_fourier(&values, &z)?.value.norm().ln();
    Ok(MahlerMeasure {
        value,
        regulator_log_abs,
        deviation: (value - regulator_log_abs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_rational;

    const G: usize = 1024;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z() -> CircleFunction {
        CircleFunction::mode(G, 1).unwrap()
    }

    fn cst(x: f64) -> CircleFunction {
        CircleFunction::constant(G, c(x, 0.0)).unwrap()
    }

    fn exp_modes(modes: &[(i64, Complex64)]) -> CircleFunction {
        CircleFunction::from_modes(G, modes).unwrap().exp()
    }

    #[test]
    fn decompose_examples() {
        let d = decompose_symbol(&z(), &z()).unwrap();
        assert_eq!((d.m(), d.n()), (1, 1));
        assert!(d.p.alpha.samples().iter().all(|a| a.norm() < 1e-14));

        let d = decompose_symbol(&z().scale(c(2.0, 0.0)), &cst(3.0)).unwrap();
        assert_eq!((d.m(), d.n()), (1, 0));
        assert!((d.p.alpha0 - 2f64.ln()).norm() < 1e-14);
        assert!((d.q.alpha0 - 3f64.ln()).norm() < 1e-14);

        let p = CircleFunction::from_fn(G, |t| Complex64::from_polar(t.cos().exp(), t)).unwrap();
        let d = decompose_symbol(&p, &cst(1.0)).unwrap();
        assert_eq!(d.m(), 1);
        assert!((d.p.alpha.coefficient(1) - 0.5).norm() < 1e-13);
    }

    #[test]
    fn closed_form_examples() {
        let v = regulator_fourier(&z(), &z()).unwrap();
        assert!((v.value + 1.0).norm() < 1e-12);
        let v = regulator_fourier(&z(), &cst(2.0)).unwrap();
        assert!((v.value - 0.5).norm() < 1e-14);
        let p = exp_modes(&[(1, c(0.3, 0.0))]);
        let q = exp_modes(&[(-1, c(0.2, 0.0))]);
        let v = regulator_fourier(&p, &q).unwrap();
        assert!((v.value - (-0.06f64).exp()).norm() < 1e-14);
    }

    #[test]
    fn integral_examples() {
        let v = regulator_integral(&z(), &z()).unwrap();
        assert!((v.value + 1.0).norm() < 1e-12, "{}", v.value);
        let v = regulator_integral(&z(), &cst(2.0)).unwrap();
        assert!((v.value - 0.5).norm() < 1e-13);
        let p = exp_modes(&[(1, c(0.3, 0.0))]);
        let q = exp_modes(&[(-1, c(0.2, 0.0))]);
        let v = regulator_integral(&p, &q).unwrap();
        assert!((v.value - (-0.06f64).exp()).norm() < 1e-13);
    }

    #[test]
    fn pairing_examples() {
        let unit = Loop::unit_circle();
        let (zf, two) = (parse_rational("z").unwrap(), parse_rational("2").unwrap());
        let v = beilinson_pairing(&zf, &two, &unit, G).unwrap();
        assert!((v.value - 0.5).norm() < 1e-13);
        let v = beilinson_pairing(&zf, &zf, &unit, G).unwrap();
        assert!((v.value + 1.0).norm() < 1e-12);
        let f = parse_rational("(z-1)/(z+0.5i)^2").unwrap();
        let g = parse_rational("z*(z-1.5)").unwrap();
        let far = Loop::circle(c(5.0, 0.0), 0.1);
        let v = beilinson_pairing(&f, &g, &far, G).unwrap();
        assert!((v.value - 1.0).norm() < 1e-12);
    }

    #[test]
    fn pairing_rejects_collisions() {
        let f = parse_rational("z-1").unwrap();
        let g = parse_rational("z").unwrap();
        let r = beilinson_pairing(&f, &g, &Loop::unit_circle(), G);
        assert!(matches!(r, Err(Error::DivisorCollision { .. })));
        let r = beilinson_pairing_avoiding(&g, &g, &Loop::unit_circle(), G, &[c(0.0, 1.0)]);
        assert!(matches!(r, Err(Error::DivisorCollision { .. })));
    }

    #[test]
    fn real_regulator_examples() {
        let unit = Loop::unit_circle();
        let zf = parse_rational("z").unwrap();
        let two = parse_rational("2").unwrap();
        assert!((real_regulator(&zf, &two, &unit, G).unwrap() + 2f64.ln()).abs() < 1e-13);
        assert!(real_regulator(&zf, &zf, &unit, G).unwrap().abs() < 1e-13);
        let shifted = parse_rational("z-2").unwrap();
        assert!((real_regulator(&shifted, &zf, &unit, G).unwrap() - 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn mahler_examples() {
        let m = mahler_measure(&parse_rational("z").unwrap(), G).unwrap();
        assert!(m.value.abs() < 1e-14);
        let m = mahler_measure(&parse_rational("z-2").unwrap(), G).unwrap();
        assert!((m.value - 2f64.ln()).abs() < 1e-13);
        assert!(m.deviation < 1e-12);
        let m = mahler_measure(&parse_rational("(z-2)*(z-3)").unwrap(), G).unwrap();
        assert!((m.value - 6f64.ln()).abs() < 1e-13);
        // A root inside the disk contributes nothing: M(z - 0.5) = 0.
        let m = mahler_measure(&parse_rational("z-0.5").unwrap(), G).unwrap();
        assert!(m.value.abs() < 1e-13);
        assert!(m.deviation < 1e-12);
    }

    #[test]
    fn mahler_errors() {
        assert_eq!(
            mahler_measure(&parse_rational("1/(z-2)").unwrap(), G).unwrap_err(),
            Error::NotPolynomial
        );
        assert!(matches!(
            mahler_measure(&parse_rational("z^2+1").unwrap(), G),
            Err(Error::RootOnContour { .. })
        ));
    }
}
