//! Closed loops in the plane and the circle functions they induce.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::circle::{theta, CircleFunction, VANISH_TOL};
use crate::error::{Error, Result};
use crate::rational::RationalFunction;

/// Orientation-preserving circle map `phi(theta) = theta + shift + sum_k (a_k cos k theta + b_k sin k theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparameterization {
    pub shift: f64,
    /// `(k, a_k, b_k)` with `k >= 1`.
    pub terms: Vec<(u32, f64, f64)>,
}

impl Reparameterization {
    pub fn identity() -> Self {
        Self {
            shift: 0.0,
            terms: Vec::new(),
        }
    }

    pub fn rotation(shift: f64) -> Self {
        Self {
            shift,
            terms: Vec::new(),
        }
    }

    /// `theta + amplitude sin(k theta)`.
    pub fn sine(k: u32, amplitude: f64) -> Self {
        Self {
            shift: 0.0,
            terms: vec![(k, 0.0, amplitude)],
        }
    }

    pub fn apply(&self, t: f64) -> f64 {
        t + self.shift
            + self
                .terms
                .iter()
                .map(|&(k, a, b)| {
                    let (s, c) = (k as f64 * t).sin_cos();
                    a * c + b * s
                })
                .sum::<f64>()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        1.0 + self
            .terms
            .iter()
            .map(|&(k, a, b)| {
                let (s, c) = (k as f64 * t).sin_cos();
                k as f64 * (b * c - a * s)
            })
            .sum::<f64>()
    }

    /// Fails with `NotDiffeomorphism` unless `phi' > 0` at every grid point.
    pub fn check(&self, g: usize) -> Result<()> {
        for j in 0..g {
            let d = self.derivative(theta(g, j));
            if d <= 0.0 {
                return Err(Error::NotDiffeomorphism {
                    index: j,
                    derivative: d,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoopKind {
    Circle { center: Complex64, radius: f64 },
    /// `sum_k c_k e^{ik theta}`.
    Fourier { modes: Vec<(i64, Complex64)> },
    /// An arbitrary curve known through samples; evaluated off-grid by
    /// trigonometric interpolation.
    Samples(CircleFunction),
    /// `base(theta) + t direction(theta)`.
    Deformed {
        base: Box<Loop>,
        direction: Box<Loop>,
        t: f64,
    },
    /// `base(phi(theta))`.
    Reparameterized {
        base: Box<Loop>,
        phi: Reparameterization,
    },
}

/// A smooth closed curve `gamma: S^1 -> C`, parametrized over `[0, 2 pi)`;
/// its base point is `gamma(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    kind: LoopKind,
}

impl Loop {
    pub fn circle(center: Complex64, radius: f64) -> Self {
        Self {
            kind: LoopKind::Circle { center, radius },
        }
    }

    pub fn unit_circle() -> Self {
        Self::circle(Complex64::new(0.0, 0.0), 1.0)
    }

    pub fn fourier(modes: Vec<(i64, Complex64)>) -> Self {
        Self {
            kind: LoopKind::Fourier { modes },
        }
    }

    pub fn from_samples(samples: CircleFunction) -> Self {
        Self {
            kind: LoopKind::Samples(samples),
        }
    }

    /// Constant displacement, for use as a deformation direction.
    pub fn constant(c: Complex64) -> Self {
        Self::fourier(vec![(0, c)])
    }

    pub fn kind(&self) -> &LoopKind {
        &self.kind
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match &self.kind {
            LoopKind::Circle { center, radius } => center + Complex64::from_polar(*radius, t),
            LoopKind::Fourier { modes } => modes
                .iter()
                .map(|&(k, c)| c * Complex64::from_polar(1.0, k as f64 * t))
                .sum(),
            LoopKind::Samples(f) => f.interpolate(t),
            LoopKind::Deformed { base, direction, t: s } => base.eval(t) + direction.eval(t) * *s,
            LoopKind::Reparameterized { base, phi } => base.eval(phi.apply(t).rem_euclid(TAU)),
        }
    }

    pub fn basepoint(&self) -> Complex64 {
        self.eval(0.0)
    }

    pub fn sample(&self, g: usize) -> Result<CircleFunction> {
        if let LoopKind::Samples(f) = &self.kind {
            if f.grid_size() == g {
                return Ok(f.clone());
            }
        }
        CircleFunction::from_fn(g, |t| self.eval(t))
    }

    /// Fails with `DivisorCollision` if any sample comes within `VANISH_TOL`
    /// of one of `points`.
    pub fn ensure_avoids(&self, points: &[Complex64], g: usize) -> Result<()> {
        let curve = self.sample(g)?;
        let hits: Vec<Complex64> = points
            .iter()
            .copied()
            .filter(|&x| curve.samples().iter().any(|&z| (z - x).norm() <= VANISH_TOL))
            .collect();
        if hits.is_empty() {
            Ok(())
        } else {
            Err(Error::DivisorCollision { points: hits })
        }
    }

    /// Smallest distance from the sampled curve to any of `points`.
    pub fn distance_to(&self, points: &[Complex64], g: usize) -> Result<f64> {
        let curve = self.sample(g)?;
        Ok(points
            .iter()
            .flat_map(|&x| curve.samples().iter().map(move |&z| (z - x).norm()))
            .fold(f64::INFINITY, f64::min))
    }
}

/// `gamma_t = gamma + t direction`.
pub fn deform(gamma: &Loop, direction: &Loop, t: f64) -> Loop {
    Loop {
        kind: LoopKind::Deformed {
            base: Box::new(gamma.clone()),
            direction: Box::new(direction.clone()),
            t,
        },
    }
}

/// `gamma o phi`, after checking `phi' > 0` on a grid of `g` points.
pub fn reparameterize(gamma: &Loop, phi: &Reparameterization, g: usize) -> Result<Loop> {
    phi.check(g)?;
    Ok(Loop {
        kind: LoopKind::Reparameterized {
            base: Box::new(gamma.clone()),
            phi: phi.clone(),
        },
    })
}

/// Samples of `f o gamma` on a grid of `g` points.
pub fn compose(f: &RationalFunction, gamma: &Loop, g: usize) -> Result<CircleFunction> {
    let support: Vec<Complex64> = f.divisor().support().collect();
    gamma.ensure_avoids(&support, g)?;
    let curve = gamma.sample(g)?;
    let values = curve.map(|z| f.eval(z));
    if let Some(j) = values.samples().iter().position(|v| !v.is_finite()) {
        return Err(Error::DivisorCollision {
            points: vec![curve.samples()[j]],
        });
    }
    values.ensure_nonvanishing()?;
    values.ensure_resolved()?;
    Ok(values)
}

/// A pair of nowhere-vanishing, resolved circle functions on a shared grid.
#[derive(Debug, Clone)]
pub struct SteinbergSymbolInstance {
    pub p: CircleFunction,
    pub q: CircleFunction,
}

impl SteinbergSymbolInstance {
    pub fn new(p: CircleFunction, q: CircleFunction) -> Result<Self> {
        if p.grid_size() != q.grid_size() {
            return Err(Error::GridMismatch {
                left: p.grid_size(),
                right: q.grid_size(),
            });
        }
        for f in [&p, &q] {
            f.ensure_nonvanishing()?;
            f.ensure_resolved()?;
        }
        Ok(Self { p, q })
    }

    /// `(f o gamma, g o gamma)`.
    pub fn from_rational(
        f: &RationalFunction,
        g: &RationalFunction,
        gamma: &Loop,
        grid: usize,
    ) -> Result<Self> {
        Self::new(compose(f, gamma, grid)?, compose(g, gamma, grid)?)
    }

    pub fn grid_size(&self) -> usize {
        self.p.grid_size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::winding_number;
    use crate::parse::parse_rational;

    const G: usize = 512;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn compose_examples() {
        let z = parse_rational("z").unwrap();
        let f = compose(&z, &Loop::unit_circle(), G).unwrap();
        assert!(f.max_relative_deviation(&CircleFunction::mode(G, 1).unwrap()) < 1e-14);

        let two = parse_rational("2").unwrap();
        let f = compose(&two, &Loop::circle(c(0.3, 1.0), 0.2), G).unwrap();
        assert!(f.samples().iter().all(|&v| v == c(2.0, 0.0)));

        let inv = parse_rational("1/z").unwrap();
        let f = compose(&inv, &Loop::circle(c(0.0, 0.0), 2.0), G).unwrap();
        let expected = CircleFunction::mode(G, -1).unwrap().scale(c(0.5, 0.0));
        assert!(f.max_relative_deviation(&expected) < 1e-14);
    }

    #[test]
    fn compose_detects_collisions() {
        let f = parse_rational("1/(z-1)").unwrap();
        match compose(&f, &Loop::unit_circle(), G) {
            Err(Error::DivisorCollision { points }) => assert!((points[0] - 1.0).norm() < 1e-9),
            other => panic!("expected collision, got {other:?}"),
        }
        let near = Loop::circle(c(0.0, 0.0), 1.0 - 1e-4);
        assert!(matches!(compose(&f, &near, G), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn deform_examples() {
        let gamma = Loop::unit_circle();
        let same = deform(&gamma, &Loop::fourier(vec![(2, c(1.0, 0.0))]), 0.0);
        let (a, b) = (gamma.sample(G).unwrap(), same.sample(G).unwrap());
        assert_eq!(a.samples(), b.samples());

        let wobbly = deform(&gamma, &Loop::fourier(vec![(2, c(1.0, 0.0))]), 0.1);
        assert!((wobbly.eval(TAU) - wobbly.eval(0.0)).norm() < 1e-14);
        let z = parse_rational("z").unwrap();
        assert_eq!(winding_number(&compose(&z, &wobbly, G).unwrap()).unwrap(), 1);

        let moved = deform(&gamma, &Loop::constant(c(3.0, -1.0)), 1.0);
        assert!((moved.basepoint() - c(4.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn reparameterize_examples() {
        let gamma = Loop::unit_circle();
        let same = reparameterize(&gamma, &Reparameterization::identity(), G).unwrap();
        assert_eq!(same.sample(G).unwrap(), gamma.sample(G).unwrap());

        let warped = reparameterize(&gamma, &Reparameterization::sine(1, 0.3), G).unwrap();
        assert!(warped.sample(G).unwrap().samples().iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        assert_eq!(warped.basepoint(), gamma.basepoint());

        let rotated = reparameterize(&gamma, &Reparameterization::rotation(0.5), G).unwrap();
        assert!((rotated.basepoint() - Complex64::from_polar(1.0, 0.5)).norm() < 1e-15);

        let folded = Reparameterization::sine(1, 1.5);
        assert!(matches!(reparameterize(&gamma, &folded, G), Err(Error::NotDiffeomorphism { .. })));
    }

    #[test]
    fn sampled_loops_interpolate() {
        let gamma = Loop::fourier(vec![(1, c(1.0, 0.0)), (-1, c(0.2, 0.1))]);
        let sampled = Loop::from_samples(gamma.sample(64).unwrap());
        for t in [0.3, 2.0, 5.5] {
            assert!((sampled.eval(t) - gamma.eval(t)).norm() < 1e-13);
        }
    }
}
