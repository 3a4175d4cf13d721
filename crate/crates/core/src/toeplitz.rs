//! Truncated Toeplitz operators and the determinants built from them.
//!
//! Operators on `H+ = span{1, z, z^2, ...}` are truncated to the first `N`
//! modes. Identities of the form `I + (trace class)` only hold for the
//! infinite operators, so every product is formed at the internal dimension
//! `N` and only afterwards is the leading `M x M` (or `2M x 2M`) principal
//! block cut out and its determinant taken. Edge effects from truncating each
//! factor live in the bottom-right corner and spread inward by one symbol
//! bandwidth per product, hence the padding rule `N >= M + 4 * bandwidth`.
//!
//! The determinant of a multiplicative commutator of finite matrices is
//! identically 1; taking the determinant of the full `N x N` product would
//! therefore compute nothing.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::circle::CircleFunction;
use crate::error::{Error, Result};
use crate::linalg::{solve_right, CMatrix};
use crate::regulator::helton_howe_exponent;

/// Coefficients below this fraction of the peak do not count toward bandwidth.
pub const BANDWIDTH_TOL: f64 = 1e-13;
/// Internal dimension must exceed the outer truncation by this many bandwidths.
pub const PADDING_FACTOR: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Circulant embedding of a Toeplitz matrix, for `O(N log N)` products.
#[derive(Debug)]
struct Embedding {
    len: usize,
    /// FFT of the first column of the circulant.
    spectrum: Vec<Complex64>,
}

impl Embedding {
    /// `coeff(d)` is the entry on diagonal `j - k = d`.
    fn new(dim: usize, coeff: impl Fn(i64) -> Complex64) -> Self {
        let len = (2 * dim).next_power_of_two();
        let mut col = vec![ZERO; len];
        for d in 0..dim as i64 {
            col[d as usize] = coeff(d);
        }
        for d in 1..dim as i64 {
            col[len - d as usize] = coeff(-d);
        }
        FftPlanner::new().plan_fft_forward(len).process(&mut col);
        Self { len, spectrum: col }
    }

    /// `T v` for the embedded `dim x dim` Toeplitz matrix.
    fn apply(&self, planner: &mut FftPlanner<f64>, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![ZERO; self.len];
        buf[..v.len()].copy_from_slice(v);
        planner.plan_fft_forward(self.len).process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        planner.plan_fft_inverse(self.len).process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf.truncate(v.len());
        buf.iter_mut().for_each(|b| *b *= scale);
        buf
    }
}

/// The `N x N` truncation of `T(f)`, entries `f_hat(j - k)`.
#[derive(Debug)]
pub struct ToeplitzTruncation {
    dim: usize,
    /// `f_hat(d)` for `d = -(N-1) ..= N-1`, stored at `d + N - 1`.
    coeffs: Vec<Complex64>,
    forward: Embedding,
    transposed: Embedding,
}

impl ToeplitzTruncation {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry on diagonal `j - k = d`.
    pub fn diagonal(&self, d: i64) -> Complex64 {
        let n = self.dim as i64;
        if d <= -n || d >= n {
            return ZERO;
        }
        self.coeffs[(d + n - 1) as usize]
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.diagonal(j as i64 - k as i64)
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |j, k| self.entry(j, k))
    }

    /// `strip * T`, row by row.
    pub fn left_mul(&self, strip: &CMatrix) -> CMatrix {
        assert_eq!(strip.cols(), self.dim);
        let mut planner = FftPlanner::new();
        let rows: Vec<Vec<Complex64>> = (0..strip.rows())
            .map(|i| self.transposed.apply(&mut planner, strip.row(i)))
            .collect();
        CMatrix::from_rows(&rows)
    }

    /// `T * cols`, column by column.
    pub fn right_mul(&self, cols: &CMatrix) -> CMatrix {
        assert_eq!(cols.rows(), self.dim);
        let mut planner = FftPlanner::new();
        let t = cols.transpose();
        let out: Vec<Vec<Complex64>> = (0..t.rows())
            .map(|i| self.forward.apply(&mut planner, t.row(i)))
            .collect();
        CMatrix::from_rows(&out).transpose()
    }
}

/// Toeplitz truncation of `f` at dimension `n`.
pub fn toeplitz_matrix(f: &CircleFunction, n: usize) -> Result<ToeplitzTruncation> {
    f.ensure_resolved()?;
    let capacity = f.grid_size() / 2;
    if n == 0 || n > capacity {
        return Err(Error::DimensionExceedsGrid { dim_n: n, capacity });
    }
    let spec = f.spectrum();
    let coeffs: Vec<Complex64> = (-(n as i64 - 1)..n as i64).map(|d| spec.get(d)).collect();
    let forward = Embedding::new(n, |d| spec.get(d));
    let transposed = Embedding::new(n, |d| spec.get(-d));
    Ok(ToeplitzTruncation {
        dim: n,
        coeffs,
        forward,
        transposed,
    })
}

/// `coeff * F[0] * F[1] * ...`; no factors means `coeff * I`.
#[derive(Debug, Clone, PartialEq)]
struct Word {
    coeff: Complex64,
    factors: Vec<usize>,
}

fn word(coeff: f64, factors: &[usize]) -> Word {
    Word {
        coeff: Complex64::new(coeff, 0.0),
        factors: factors.to_vec(),
    }
}

/// A `size x size` grid of `N x N` blocks, each a linear combination of
/// products of Toeplitz truncations.
///
/// Blocks are held symbolically; [`block`](Self::block) materializes one,
/// while [`left_apply`](Self::left_apply) and [`right_apply`](Self::right_apply)
/// act on thin strips without ever forming the dense operator.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    dim: usize,
    size: usize,
    factors: Vec<Arc<ToeplitzTruncation>>,
    entries: Vec<Vec<Word>>,
}

impl BlockOperator {
    fn new(dim: usize, size: usize, factors: Vec<Arc<ToeplitzTruncation>>) -> Self {
        Self {
            dim,
            size,
            factors,
            entries: vec![Vec::new(); size * size],
        }
    }

    fn set(&mut self, i: usize, j: usize, words: Vec<Word>) {
        self.entries[i * self.size + j] = words;
    }

    fn entry(&self, i: usize, j: usize) -> &[Word] {
        &self.entries[i * self.size + j]
    }

    pub fn identity(dim: usize, size: usize) -> Self {
        let mut op = Self::new(dim, size, Vec::new());
        for i in 0..size {
            op.set(i, i, vec![word(1.0, &[])]);
        }
        op
    }

    /// `J = (0 1; -1 0)`.
    pub fn rotation(dim: usize) -> Self {
        let mut op = Self::new(dim, 2, Vec::new());
        op.set(0, 1, vec![word(1.0, &[])]);
        op.set(1, 0, vec![word(-1.0, &[])]);
        op
    }

    /// Block-diagonal operator with one Toeplitz truncation (or identity) per block.
    pub fn diagonal(dim: usize, blocks: Vec<Option<Arc<ToeplitzTruncation>>>) -> Self {
        let size = blocks.len();
        let mut op = Self::new(dim, size, Vec::new());
        for (i, b) in blocks.into_iter().enumerate() {
            match b {
                Some(t) => {
                    op.factors.push(t);
                    let idx = op.factors.len() - 1;
                    op.set(i, i, vec![word(1.0, &[idx])]);
                }
                None => op.set(i, i, vec![word(1.0, &[])]),
            }
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Dense `N x N` block `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for w in self.entry(i, j) {
            let mut prod = CMatrix::identity(self.dim);
            for &f in &w.factors {
                prod = prod.matmul(&self.factors[f].matrix());
            }
            out.axpy(w.coeff, &prod);
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(self.size * n, self.size * n);
        for i in 0..self.size {
            for j in 0..self.size {
                out.set_block(i * n, j * n, &self.block(i, j));
            }
        }
        out
    }

    /// `strip * self` for a strip with `size * N` columns.
    pub fn left_apply(&self, strip: &CMatrix) -> CMatrix {
        let n = self.dim;
        assert_eq!(strip.cols(), self.size * n);
        let r = strip.rows();
        let mut out = CMatrix::zeros(r, self.size * n);
        for i in 0..self.size {
            let source = strip.block(0, i * n, r, n);
            // strip_i * (prefix of a word), memoized across the row's words.
            let mut memo: HashMap<Vec<usize>, CMatrix> = HashMap::new();
            for j in 0..self.size {
                let mut acc = CMatrix::zeros(r, n);
                for w in self.entry(i, j) {
                    let mut cur = source.clone();
                    for len in 1..=w.factors.len() {
                        let key = w.factors[..len].to_vec();
                        cur = match memo.get(&key) {
                            Some(m) => m.clone(),
                            None => {
                                let next = self.factors[w.factors[len - 1]].left_mul(&cur);
                                memo.insert(key, next.clone());
                                next
                            }
                        };
                    }
                    acc.axpy(w.coeff, &cur);
                }
                let mut block = out.block(0, j * n, r, n);
                block.axpy(ONE, &acc);
                out.set_block(0, j * n, &block);
            }
        }
        out
    }

    /// `self * cols` for a strip with `size * N` rows.
    pub fn right_apply(&self, cols: &CMatrix) -> CMatrix {
        let n = self.dim;
        assert_eq!(cols.rows(), self.size * n);
        let c = cols.cols();
        let mut out = CMatrix::zeros(self.size * n, c);
        for j in 0..self.size {
            let source = cols.block(j * n, 0, n, c);
            let mut memo: HashMap<Vec<usize>, CMatrix> = HashMap::new();
            for i in 0..self.size {
                let mut acc = CMatrix::zeros(n, c);
                for w in self.entry(i, j) {
                    let mut cur = source.clone();
                    let k = w.factors.len();
                    for len in 1..=k {
                        let key = w.factors[k - len..].to_vec();
                        cur = match memo.get(&key) {
                            Some(m) => m.clone(),
                            None => {
                                let next = self.factors[w.factors[k - len]].right_mul(&cur);
                                memo.insert(key, next.clone());
                                next
                            }
                        };
                    }
                    acc.axpy(w.coeff, &cur);
                }
                let mut block = out.block(i * n, 0, n, c);
                block.axpy(ONE, &acc);
                out.set_block(i * n, 0, &block);
            }
        }
        out
    }
}

/// `H(p) = ((2 - T(p)T(1/p)) T(p), -1 + T(p)T(1/p); 1 - T(1/p)T(p), T(1/p))`.
pub fn h_block(p: &CircleFunction, n: usize) -> Result<BlockOperator> {
    p.ensure_nonvanishing()?;
    let tp = Arc::new(toeplitz_matrix(p, n)?);
    let tinv = Arc::new(toeplitz_matrix(&p.recip(), n)?);
    let mut op = BlockOperator::new(n, 2, vec![tp, tinv]);
    op.set(0, 0, vec![word(2.0, &[0]), word(-1.0, &[0, 1, 0])]);
    op.set(0, 1, vec![word(-1.0, &[]), word(1.0, &[0, 1])]);
    op.set(1, 0, vec![word(1.0, &[]), word(-1.0, &[1, 0])]);
    op.set(1, 1, vec![word(1.0, &[1])]);
    Ok(op)
}

/// A truncated determinant with its convergence history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterminantResult {
    pub value: Complex64,
    /// Outer truncation of the final value.
    pub trunc_m: usize,
    /// Internal dimension.
    pub dim_n: usize,
    /// `(M_i, value_i)` in increasing `M_i`; the last entry is `value`.
    pub convergence_history: Vec<(usize, Complex64)>,
}

impl DeterminantResult {
    fn from_history(dim_n: usize, history: Vec<(usize, Complex64)>) -> Self {
        let &(trunc_m, value) = history.last().expect("nonempty history");
        Self {
            value,
            trunc_m,
            dim_n,
            convergence_history: history,
        }
    }

    /// `|value_M - value_{M'}|` for the last two history entries.
    pub fn last_delta(&self) -> f64 {
        match self.convergence_history.as_slice() {
            [.., (_, a), (_, b)] => (b - a).norm(),
            _ => 0.0,
        }
    }
}

/// `M/4, M/2, M`, dropping duplicates and zeros.
pub fn default_history(m: usize) -> Vec<usize> {
    let mut ms: Vec<usize> = [m / 4, m / 2, m].into_iter().filter(|&x| x > 0).collect();
    ms.dedup();
    ms
}

fn bandwidth_of(fs: &[&CircleFunction]) -> usize {
    fs.iter()
        .map(|f| f.spectrum().bandwidth(BANDWIDTH_TOL))
        .max()
        .unwrap_or(0)
}

fn check_padding(dim_n: usize, trunc_m: usize, bandwidth: usize) -> Result<()> {
    let required = trunc_m + PADDING_FACTOR * bandwidth;
    if dim_n < required {
        return Err(Error::PaddingTooSmall {
            dim_n,
            trunc_m,
            required,
        });
    }
    Ok(())
}

fn check_history(ms: &[usize]) -> Result<usize> {
    if ms.is_empty() || ms.contains(&0) || ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!(
            "truncation list {ms:?} must be nonempty, positive and increasing"
        )));
    }
    Ok(*ms.last().unwrap())
}

/// Rows `{0..m} u {N..N+m}` of the `2N x 2N` identity.
fn leading_rows(n: usize, m: usize, size: usize) -> CMatrix {
    let mut e = CMatrix::zeros(size * m, size * n);
    for b in 0..size {
        for i in 0..m {
            e[(b * m + i, b * n + i)] = ONE;
        }
    }
    e
}

/// Leading `size * mi` block of a matrix laid out as `size` groups of `m`.
fn leading_minor(x: &CMatrix, m: usize, mi: usize, size: usize) -> CMatrix {
    let idx: Vec<usize> = (0..size).flat_map(|b| (0..mi).map(move |i| b * m + i)).collect();
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| x[(idx[i], idx[j])])
}

/// `det(J H(-pq) J H(p) H(q))`, history at [`default_history`] of `m`.
pub fn steinberg_operator_determinant(
    p: &CircleFunction,
    q: &CircleFunction,
    n: usize,
    m: usize,
) -> Result<DeterminantResult> {
    steinberg_operator_history(p, q, n, &default_history(m))
}

/// As [`steinberg_operator_determinant`], reporting every truncation in `ms`.
pub fn steinberg_operator_history(
    p: &CircleFunction,
    q: &CircleFunction,
    n: usize,
    ms: &[usize],
) -> Result<DeterminantResult> {
    let m = check_history(ms)?;
    let pq = p.mul(q)?;
    for f in [p, q] {
        f.ensure_nonvanishing()?;
        f.ensure_resolved()?;
    }
    let (pi, qi, pqi) = (p.recip(), q.recip(), pq.recip());
    check_padding(n, m, bandwidth_of(&[p, q, &pq, &pi, &qi, &pqi]))?;

    let j = BlockOperator::rotation(n);
    let h_pq = h_block(&pq.scale(-ONE), n)?;
    let h_p = h_block(p, n)?;
    let h_q = h_block(q, n)?;

    let rows = leading_rows(n, m, 2);
    let mut strip = j.left_apply(&rows);
    strip = h_pq.left_apply(&strip);
    strip = j.left_apply(&strip);
    strip = h_p.left_apply(&strip);
    let cols = h_q.right_apply(&rows.transpose());
    let leading = strip.matmul(&cols);

    let history = ms
        .iter()
        .map(|&mi| Ok((mi, leading_minor(&leading, m, mi, 2).determinant()?.value())))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeterminantResult::from_history(n, history))
}

/// `det(T(e^a) T(e^b) T(e^a)^{-1} T(e^b)^{-1})` on the leading `m x m` block,
/// with all inverses taken at internal dimension `n`.
pub fn commutator_determinant(
    alpha: &CircleFunction,
    beta: &CircleFunction,
    n: usize,
    m: usize,
) -> Result<DeterminantResult> {
    commutator_history(alpha, beta, n, &default_history(m))
}

pub fn commutator_history(
    alpha: &CircleFunction,
    beta: &CircleFunction,
    n: usize,
    ms: &[usize],
) -> Result<DeterminantResult> {
    let m = check_history(ms)?;
    let (ea, eb) = (alpha.exp(), beta.exp());
    let (ea_inv, eb_inv) = (ea.recip(), eb.recip());
    check_padding(n, m, bandwidth_of(&[&ea, &eb, &ea_inv, &eb_inv]))?;
    let ta = toeplitz_matrix(&ea, n)?;
    let tb = toeplitz_matrix(&eb, n)?;
    let lu_a_t = ta.matrix().transpose().lu()?;
    let lu_b_t = tb.matrix().transpose().lu()?;

    let rows = leading_rows(n, m, 1);
    let mut strip = ta.left_mul(&rows);
    strip = tb.left_mul(&strip);
    strip = solve_right(&lu_a_t, &strip);
    strip = solve_right(&lu_b_t, &strip);
    let leading = strip.block(0, 0, m, m);

    let history = ms
        .iter()
        .map(|&mi| Ok((mi, leading.block(0, 0, mi, mi).determinant()?.value())))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeterminantResult::from_history(n, history))
}

/// `exp(sum_k k a(-k) b(k)) = exp tr(T(a)T(b) - T(b)T(a))`, the limit of
/// [`commutator_determinant`].
pub fn helton_howe_value(alpha: &CircleFunction, beta: &CircleFunction) -> Result<Complex64> {
    for f in [alpha, beta] {
        f.ensure_resolved()?;
    }
    if alpha.grid_size() != beta.grid_size() {
        return Err(Error::GridMismatch {
            left: alpha.grid_size(),
            right: beta.grid_size(),
        });
    }
    Ok(helton_howe_exponent(alpha, beta).exp())
}

/// `tr(wedge^k K)` for `k = 0..=terms`, from the power sums `tr(K^j)` by
/// Newton's identities.
pub fn exterior_traces(k: &CMatrix, terms: usize) -> Vec<Complex64> {
    assert!(k.is_square());
    let mut power_sums = Vec::with_capacity(terms);
    let mut power = k.clone();
    for j in 0..terms {
        if j > 0 {
            power = power.matmul(k);
        }
        power_sums.push(power.trace());
    }
    let mut e = vec![ONE];
    for j in 1..=terms {
        let s: Complex64 = (1..=j)
            .map(|i| {
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                e[j - i] * power_sums[i - 1] * sign
            })
            .sum();
        e.push(s / j as f64);
    }
    e
}

/// Partial sum `1 + tr(K) + tr(wedge^2 K) + ... ` up to `terms` exterior powers.
pub fn grothendieck_det(k: &CMatrix, terms: usize) -> Complex64 {
    exterior_traces(k, terms).into_iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsRoute {
    /// Double trapezoid of `|f(t) - f(s)|^2 / sin^2((t - s)/2)`.
    Integral,
    /// Entries of `[M_f, F]` on the modes `-N..N`.
    Matrix,
}

/// Squared Hilbert-Schmidt norm of `[M_f, F]`, `F = P+ - P-`.
///
/// The integral route fills the removable diagonal singularity with its limit
/// `4 |f'(t)|^2`. The matrix route sums `|f_hat(j - k) (s_k - s_j)|^2` over
/// modes `-N <= j, k < N`, where `s` is the sign of the mode (`+1` for `k >= 0`).
pub fn hs_commutator_norm_sq(f: &CircleFunction, route: HsRoute, n: usize) -> Result<f64> {
    f.ensure_resolved()?;
    let g = f.grid_size();
    match route {
        HsRoute::Integral => {
            let d = crate::circle::spectral_derivative(f);
            let weights: Vec<f64> = (0..g)
                .map(|k| {
                    let s = (std::f64::consts::PI * k as f64 / g as f64).sin();
                    if k == 0 {
                        0.0
                    } else {
                        1.0 / (s * s)
                    }
                })
                .collect();
            let v = f.samples();
            let mut total = 0.0;
            for i in 0..g {
                total += 4.0 * d.samples()[i].norm_sqr();
                for j in 0..g {
                    if i != j {
                        total += (v[i] - v[j]).norm_sqr() * weights[(i + g - j) % g];
                    }
                }
            }
            // (1 / 4 pi^2) * (2 pi / G)^2 = 1 / G^2
            Ok(total / (g * g) as f64)
        }
        HsRoute::Matrix => {
            if 2 * n > g / 2 {
                return Err(Error::DimensionExceedsGrid {
                    dim_n: n,
                    capacity: g / 4,
                });
            }
            let spec = f.spectrum();
            let n = n as i64;
            let sign = |k: i64| if k >= 0 { 1.0 } else { -1.0 };
            let mut total = 0.0;
            for j in -n..n {
                for k in -n..n {
                    let s = sign(k) - sign(j);
                    if s != 0.0 {
                        total += (spec.get(j - k) * s).norm_sqr();
                    }
                }
            }
            Ok(total)
        }
    }
}
