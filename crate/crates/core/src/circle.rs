//! Smooth functions on the circle, held as samples on a uniform periodic grid.
//!
//! A [`CircleFunction`] stores its values at `theta_j = 2 pi j / G` and
//! computes its discrete Fourier coefficients on first use. Everything else in
//! the crate (winding numbers, continuous logarithms, Toeplitz matrices,
//! quadrature) is built on these two views of the same data.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default number of grid points.
pub const DEFAULT_GRID: usize = 4096;
/// Smallest admissible grid.
pub const MIN_GRID: usize = 16;
/// Sample moduli at or below this are treated as zeros of the function.
pub const VANISH_TOL: f64 = 1e-9;
/// Largest Nyquist coefficient magnitude accepted as "resolved".
pub const RESOLVED_TOL: f64 = 1e-10;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

pub fn check_grid(g: usize) -> Result<()> {
    if g < MIN_GRID || !g.is_power_of_two() {
        return Err(Error::InvalidGrid(g));
    }
    Ok(())
}

/// Discrete Fourier coefficients `c(k)` for `-G/2 <= k < G/2`.
///
/// Stored in FFT order (`k mod G`); [`Spectrum::get`] takes signed modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    data: Vec<Complex64>,
}

impl Spectrum {
    fn from_fft_order(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    /// Builds a spectrum from `(mode, coefficient)` pairs; repeated modes add.
    pub fn from_modes(g: usize, modes: &[(i64, Complex64)]) -> Result<Self> {
        check_grid(g)?;
        let half = (g / 2) as i64;
        let mut data = vec![Complex64::new(0.0, 0.0); g];
        for &(k, c) in modes {
            if k < -half || k >= half {
                return Err(Error::InvalidConfig(format!(
                    "mode {k} outside the band [-{half}, {half}) of grid {g}"
                )));
            }
            data[k.rem_euclid(g as i64) as usize] += c;
        }
        Ok(Self { data })
    }

    pub fn grid_size(&self) -> usize {
        self.data.len()
    }

    pub fn min_mode(&self) -> i64 {
        -((self.data.len() / 2) as i64)
    }

    pub fn max_mode(&self) -> i64 {
        (self.data.len() / 2) as i64 - 1
    }

    /// Coefficient of `e^{ik theta}`; zero outside the band.
    pub fn get(&self, k: i64) -> Complex64 {
        if k < self.min_mode() || k > self.max_mode() {
            return Complex64::new(0.0, 0.0);
        }
        self.data[k.rem_euclid(self.data.len() as i64) as usize]
    }

    /// The coefficient at `-G/2`, the first mode the grid cannot resolve.
    pub fn nyquist(&self) -> Complex64 {
        self.get(self.min_mode())
    }

    /// `(k, c(k))` in increasing mode order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        (self.min_mode()..=self.max_mode()).map(move |k| (k, self.get(k)))
    }

    pub fn fft_order(&self) -> &[Complex64] {
        &self.data
    }

    /// Largest `|k|` with `|c(k)| > rel_tol * max |c|`.
    pub fn bandwidth(&self, rel_tol: f64) -> usize {
        let peak = self.data.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0;
        }
        self.iter()
            .filter(|(_, c)| c.norm() > rel_tol * peak)
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Inverse transform back to grid samples.
    pub fn synthesize(&self) -> Vec<Complex64> {
        let mut buf = self.data.clone();
        inverse_plan(buf.len()).process(&mut buf);
        buf
    }
}

/// A complex function on the circle, sampled at `G` equispaced points.
#[derive(Debug, Clone)]
pub struct CircleFunction {
    samples: Vec<Complex64>,
    spectrum: OnceLock<Spectrum>,
}

impl PartialEq for CircleFunction {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
    }
}

impl CircleFunction {
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self> {
        check_grid(samples.len())?;
        Ok(Self {
            samples,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_fn(g: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_grid(g)?;
        Self::from_samples((0..g).map(|j| f(theta(g, j))).collect())
    }

    /// Band-limited function `sum c_k e^{ik theta}`.
    pub fn from_modes(g: usize, modes: &[(i64, Complex64)]) -> Result<Self> {
        let spectrum = Spectrum::from_modes(g, modes)?;
        let samples = spectrum.synthesize();
        Ok(Self {
            samples,
            spectrum: OnceLock::from(spectrum),
        })
    }

    pub fn constant(g: usize, c: Complex64) -> Result<Self> {
        Self::from_fn(g, |_| c)
    }

    /// `e^{ik theta}`.
    pub fn mode(g: usize, k: i64) -> Result<Self> {
        Self::from_fn(g, |t| Complex64::from_polar(1.0, k as f64 * t))
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn theta(&self, j: usize) -> f64 {
        theta(self.grid_size(), j)
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let g = self.samples.len();
            let mut buf = self.samples.clone();
            forward_plan(g).process(&mut buf);
            let scale = 1.0 / g as f64;
            buf.iter_mut().for_each(|c| *c *= scale);
            Spectrum::from_fft_order(buf)
        })
    }

    pub fn coefficient(&self, k: i64) -> Complex64 {
        self.spectrum().get(k)
    }

    pub fn is_resolved(&self) -> bool {
        self.spectrum().nyquist().norm() < RESOLVED_TOL
    }

    pub fn ensure_resolved(&self) -> Result<()> {
        let nyquist = self.spectrum().nyquist().norm();
        if nyquist >= RESOLVED_TOL {
            return Err(Error::UnderResolved { nyquist });
        }
        Ok(())
    }

    /// Smallest sample modulus and where it occurs.
    pub fn min_modulus(&self) -> (usize, f64) {
        self.samples
            .iter()
            .enumerate()
            .map(|(j, z)| (j, z.norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
    }

    pub fn ensure_nonvanishing(&self) -> Result<()> {
        let (index, min_modulus) = self.min_modulus();
        if min_modulus <= VANISH_TOL {
            return Err(Error::NearZeroSymbol { index, min_modulus });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&z| f(z)).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn zip_with(
        &self,
        other: &CircleFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.grid_size() != other.grid_size() {
            return Err(Error::GridMismatch {
                left: self.grid_size(),
                right: other.grid_size(),
            });
        }
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            spectrum: OnceLock::new(),
        })
    }

    pub fn mul(&self, other: &CircleFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn div(&self, other: &CircleFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a / b)
    }

    pub fn add(&self, other: &CircleFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CircleFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| c * z)
    }

    pub fn recip(&self) -> Self {
        self.map(|z| z.inv())
    }

    pub fn exp(&self) -> Self {
        self.map(|z| z.exp())
    }

    /// Trigonometric interpolant evaluated at an arbitrary angle.
    ///
    /// The Nyquist mode is split symmetrically between `+-G/2` so that
    /// real-valued samples interpolate to a real function.
    pub fn interpolate(&self, t: f64) -> Complex64 {
        let spec = self.spectrum();
        let half = (self.grid_size() / 2) as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1 - half)..half {
            acc += spec.get(k) * Complex64::from_polar(1.0, k as f64 * t);
        }
        acc + spec.get(-half) * (half as f64 * t).cos()
    }

    /// Largest relative deviation between two sample sets.
    pub fn max_relative_deviation(&self, other: &CircleFunction) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm() / b.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

pub fn theta(g: usize, j: usize) -> f64 {
    TAU * j as f64 / g as f64
}

pub fn fourier_coefficients(f: &CircleFunction) -> &Spectrum {
    f.spectrum()
}

/// Principal-branch argument increments `arg(p_{j+1} / p_j)`, wrapping at the end.
fn argument_increments(samples: &[Complex64]) -> Result<Vec<f64>> {
    let g = samples.len();
    (0..g)
        .map(|j| {
            let inc = (samples[(j + 1) % g] / samples[j]).arg();
            if inc.abs() >= FRAC_PI_2 {
                Err(Error::AliasedArgument {
                    index: j,
                    increment: inc,
                })
            } else {
                Ok(inc)
            }
        })
        .collect()
}

/// Degree of `p` as a map `S^1 -> C^x`.
pub fn winding_number(p: &CircleFunction) -> Result<i64> {
    p.ensure_nonvanishing()?;
    let total: f64 = argument_increments(p.samples())?.iter().sum();
    Ok((total / TAU).round() as i64)
}

/// Winding number `m` and a continuous logarithm `alpha` with
/// `e^alpha = p e^{-i m theta}`.
#[derive(Debug, Clone)]
pub struct LogDecomposition {
    pub winding: i64,
    pub alpha: CircleFunction,
    /// Mean value `alpha_hat(0)`.
    pub alpha0: Complex64,
}

impl LogDecomposition {
    /// Same decomposition on the branch `alpha + 2 pi i turns`.
    pub fn shift_branch(&self, turns: i64) -> Self {
        let shift = Complex64::new(0.0, TAU * turns as f64);
        let alpha = self.alpha.map(|a| a + shift);
        let alpha0 = alpha.coefficient(0);
        Self {
            winding: self.winding,
            alpha,
            alpha0,
        }
    }

    /// Continuous logarithm of the original function, `i m theta + alpha(theta)`.
    ///
    /// Not periodic when `m != 0`; use [`theta_moment`] for integrals against it.
    pub fn full_log(&self, j: usize) -> Complex64 {
        Complex64::new(0.0, self.winding as f64 * self.alpha.theta(j)) + self.alpha.samples()[j]
    }
}

/// Splits off the winding and integrates argument increments of the remainder.
///
/// `alpha(0)` is the principal logarithm of `p(1)`.
pub fn continuous_log(p: &CircleFunction) -> Result<LogDecomposition> {
    let winding = winding_number(p)?;
    let g = p.grid_size();
    let rest: Vec<Complex64> = p
        .samples()
        .iter()
        .enumerate()
        .map(|(j, &z)| z * Complex64::from_polar(1.0, -(winding as f64) * theta(g, j)))
        .collect();
    let increments = argument_increments(&rest)?;
    let mut phase = rest[0].arg();
    let mut alpha = Vec::with_capacity(g);
    for (j, z) in rest.iter().enumerate() {
        alpha.push(Complex64::new(z.norm().ln(), phase));
        phase += increments[j];
    }
    let alpha = CircleFunction::from_samples(alpha)?;
    let alpha0 = alpha.coefficient(0);
    Ok(LogDecomposition {
        winding,
        alpha,
        alpha0,
    })
}

/// Derivative in `theta`, computed by multiplying coefficients by `ik`.
///
/// The Nyquist mode has no well-defined derivative on the grid and is dropped.
pub fn spectral_derivative(f: &CircleFunction) -> CircleFunction {
    let spec = f.spectrum();
    let g = f.grid_size();
    let half = (g / 2) as i64;
    let data: Vec<Complex64> = (0..g)
        .map(|idx| {
            let k = if idx < g / 2 {
                idx as i64
            } else {
                idx as i64 - g as i64
            };
            if k == -half {
                Complex64::new(0.0, 0.0)
            } else {
                spec.fft_order()[idx] * Complex64::new(0.0, k as f64)
            }
        })
        .collect();
    let spectrum = Spectrum::from_fft_order(data);
    CircleFunction {
        samples: spectrum.synthesize(),
        spectrum: OnceLock::from(spectrum),
    }
}

/// Trapezoid rule `(2 pi / G) sum f(theta_j)` over one period.
pub fn periodic_integral(f: &CircleFunction) -> Complex64 {
    let sum: Complex64 = f.samples().iter().sum();
    sum * (TAU / f.grid_size() as f64)
}

/// `int_0^{2 pi} theta f(theta) d theta` for periodic `f`.
///
/// The weight `theta` is not periodic, so the trapezoid rule would only be
/// first-order accurate; instead each Fourier mode is integrated exactly:
/// `int theta dtheta = 2 pi^2` and `int theta e^{ik theta} dtheta = 2 pi / (ik)`.
pub fn theta_moment(f: &CircleFunction) -> Complex64 {
    let spec = f.spectrum();
    let mut acc = spec.get(0) * (2.0 * PI * PI);
    for (k, c) in spec.iter() {
        if k != 0 && k != spec.min_mode() {
            acc += c * Complex64::new(0.0, -TAU / k as f64);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: usize = 256;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_has_only_mean() {
        let f = CircleFunction::constant(G, c(2.0, 0.0)).unwrap();
        let spec = fourier_coefficients(&f);
        assert!((spec.get(0) - c(2.0, 0.0)).norm() < 1e-14);
        assert!(spec.iter().filter(|(k, _)| *k != 0).all(|(_, v)| v.norm() < 1e-14));
    }

    #[test]
    fn pure_mode_and_cosine() {
        let f = CircleFunction::mode(G, 1).unwrap();
        assert!((f.coefficient(1) - 1.0).norm() < 1e-14);
        assert!(f.coefficient(0).norm() < 1e-14);
        let cos = CircleFunction::from_fn(G, |t| c(t.cos(), 0.0)).unwrap();
        assert!((cos.coefficient(1) - 0.5).norm() < 1e-14);
        assert!((cos.coefficient(-1) - 0.5).norm() < 1e-14);
        assert!(cos.coefficient(2).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(CircleFunction::constant(8, c(1.0, 0.0)).unwrap_err(), Error::InvalidGrid(8));
        assert_eq!(CircleFunction::constant(100, c(1.0, 0.0)).unwrap_err(), Error::InvalidGrid(100));
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&CircleFunction::mode(G, 3).unwrap()).unwrap(), 3);
        assert_eq!(winding_number(&CircleFunction::constant(G, c(2.0, 0.0)).unwrap()).unwrap(), 0);
        let shifted = CircleFunction::from_fn(G, |t| Complex64::from_polar(1.0, t) + 3.0).unwrap();
        assert_eq!(winding_number(&shifted).unwrap(), 0);
        assert_eq!(winding_number(&CircleFunction::mode(G, -2).unwrap()).unwrap(), -2);
    }

    #[test]
    fn winding_errors() {
        let coarse = CircleFunction::mode(16, 5).unwrap();
        assert!(matches!(winding_number(&coarse), Err(Error::AliasedArgument { .. })));
        let vanishing = CircleFunction::from_fn(G, |t| Complex64::from_polar(1.0, t) - 1.0).unwrap();
        assert!(matches!(winding_number(&vanishing), Err(Error::NearZeroSymbol { index: 0, .. })));
    }

    #[test]
    fn continuous_log_examples() {
        let cst: f64 = 0.7;
        let p = CircleFunction::from_fn(G, |t| Complex64::from_polar(cst.exp(), t)).unwrap();
        let d = continuous_log(&p).unwrap();
        assert_eq!(d.winding, 1);
        assert!(d.alpha.samples().iter().all(|a| (a - cst).norm() < 1e-13));

        let two = CircleFunction::constant(G, c(2.0, 0.0)).unwrap();
        let d = continuous_log(&two).unwrap();
        assert_eq!(d.winding, 0);
        assert!((d.alpha0 - 2f64.ln()).norm() < 1e-14);

        let e_cos = CircleFunction::from_fn(G, |t| c(t.cos().exp(), 0.0)).unwrap();
        let d = continuous_log(&e_cos).unwrap();
        assert_eq!(d.winding, 0);
        assert!((d.alpha.coefficient(1) - 0.5).norm() < 1e-13);
        assert!((d.alpha.coefficient(-1) - 0.5).norm() < 1e-13);
        assert!(d.alpha0.norm() < 1e-13);
    }

    #[test]
    fn continuous_log_reconstructs_and_is_periodic() {
        // Argument of 1 + 0.9 e^{i theta} swings through a wide range without winding.
        let p = CircleFunction::from_fn(G, |t| {
            Complex64::from_polar(1.0, -2.0 * t) * (c(1.0, 0.0) + Complex64::from_polar(0.9, t))
        })
        .unwrap();
        let d = continuous_log(&p).unwrap();
        assert_eq!(d.winding, -2);
        for j in 0..G {
            let rebuilt = d.full_log(j).exp();
            assert!((rebuilt - p.samples()[j]).norm() / p.samples()[j].norm() < 1e-12);
        }
        let a = d.alpha.samples();
        assert!((a[G - 1].im - a[0].im).abs() < PI);
        assert!(a[0].im > -PI && a[0].im <= PI);
    }

    #[test]
    fn derivative_examples() {
        let e = CircleFunction::mode(G, 1).unwrap();
        let de = spectral_derivative(&e);
        assert!(de.max_relative_deviation(&e.scale(c(0.0, 1.0))) < 1e-13);
        let k = spectral_derivative(&CircleFunction::constant(G, c(3.0, 1.0)).unwrap());
        assert!(k.samples().iter().all(|z| z.norm() < 1e-14));
        let cos = CircleFunction::from_fn(G, |t| c(t.cos(), 0.0)).unwrap();
        let d = spectral_derivative(&cos);
        for j in 0..G {
            assert!((d.samples()[j] + cos.theta(j).sin()).norm() < 1e-13);
        }
    }

    #[test]
    fn integral_examples() {
        let one = CircleFunction::constant(G, c(1.0, 0.0)).unwrap();
        assert!((periodic_integral(&one) - TAU).norm() < 1e-13);
        for k in [-127, -5, 1, 64, 127] {
            assert!(periodic_integral(&CircleFunction::mode(G, k).unwrap()).norm() < 1e-12);
        }
        let cos2 = CircleFunction::from_fn(G, |t| c(t.cos().powi(2), 0.0)).unwrap();
        assert!((periodic_integral(&cos2) - PI).norm() < 1e-13);
    }

    #[test]
    fn theta_moment_matches_hand_integrals() {
        // int theta dtheta = 2 pi^2; int theta cos theta = 0; int theta sin theta = -2 pi.
        let one = CircleFunction::constant(G, c(1.0, 0.0)).unwrap();
        assert!((theta_moment(&one) - 2.0 * PI * PI).norm() < 1e-12);
        let cos = CircleFunction::from_fn(G, |t| c(t.cos(), 0.0)).unwrap();
        assert!(theta_moment(&cos).norm() < 1e-12);
        let sin = CircleFunction::from_fn(G, |t| c(t.sin(), 0.0)).unwrap();
        assert!((theta_moment(&sin) + TAU).norm() < 1e-12);
    }

    #[test]
    fn nyquist_detects_underresolution() {
        let ok = CircleFunction::from_fn(G, |t| c((0.5 * t.cos()).exp(), 0.0)).unwrap();
        ok.ensure_resolved().unwrap();
        let bad = CircleFunction::from_fn(G, |t| c(1.0 / (1.01 - t.cos()), 0.0)).unwrap();
        assert!(matches!(bad.ensure_resolved(), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn interpolation_is_exact_for_band_limited() {
        let f = CircleFunction::from_modes(G, &[(0, c(1.0, 0.0)), (3, c(0.2, 0.1)), (-2, c(0.0, 0.3))])
            .unwrap();
        for t in [0.1, 1.3, 4.0] {
            let exact = c(1.0, 0.0)
                + c(0.2, 0.1) * Complex64::from_polar(1.0, 3.0 * t)
                + c(0.0, 0.3) * Complex64::from_polar(1.0, -2.0 * t);
            assert!((f.interpolate(t) - exact).norm() < 1e-13);
        }
    }

    #[test]
    fn binary_ops_require_equal_grids() {
        let a = CircleFunction::mode(32, 1).unwrap();
        let b = CircleFunction::mode(64, 1).unwrap();
        assert_eq!(a.mul(&b).unwrap_err(), Error::GridMismatch { left: 32, right: 64 });
    }
}
