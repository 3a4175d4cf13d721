//! Exact values and operator identities checked against independent evaluations.

use num_complex::Complex64;
use toeplitz_regulator::circle::CircleFunction;
use toeplitz_regulator::linalg::CMatrix;
use toeplitz_regulator::regulator::{relative_deviation, regulator_fourier, regulator_integral};
use toeplitz_regulator::toeplitz::{
    commutator_determinant, grothendieck_det, h_block, helton_howe_value,
    steinberg_operator_determinant, toeplitz_matrix, BlockOperator,
};

const G: usize = 2048;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn z() -> CircleFunction {
    CircleFunction::mode(G, 1).unwrap()
}

fn modes(m: &[(i64, Complex64)]) -> CircleFunction {
    CircleFunction::from_modes(G, m).unwrap()
}

/// `0.7 + 0.3 cos + 0.2i sin 2t`, split into nonnegative and negative parts.
fn alpha_parts() -> (CircleFunction, CircleFunction, CircleFunction) {
    let plus = [(0, c(0.7, 0.0)), (1, c(0.15, 0.0)), (2, c(0.1, 0.0))];
    let minus = [(-1, c(0.15, 0.0)), (-2, c(-0.1, 0.0))];
    let all: Vec<_> = plus.iter().chain(&minus).copied().collect();
    (modes(&all), modes(&plus), modes(&minus))
}

fn projection(n: usize, ks: &[usize]) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    for &k in ks {
        p[(k, k)] = c(1.0, 0.0);
    }
    p
}

#[test]
fn case_one_symbol_z_z_is_minus_one() {
    let (p, q) = (z(), z());
    assert!((regulator_fourier(&p, &q).unwrap().value + 1.0).norm() < 1e-12);
    assert!((regulator_integral(&p, &q).unwrap().value + 1.0).norm() < 1e-12);
    assert!((steinberg_operator_determinant(&p, &q, 256, 64).unwrap().value + 1.0).norm() < 1e-10);
}

#[test]
fn h_of_z_is_shift_block() {
    let n = 12;
    let h = h_block(&z(), n).unwrap();
    let s = toeplitz_matrix(&z(), n).unwrap().matrix();
    let sa = toeplitz_matrix(&CircleFunction::mode(G, -1).unwrap(), n).unwrap().matrix();
    let inner = |m: &CMatrix| m.block(0, 0, n - 2, n - 2);
    assert!(inner(&h.block(0, 0)).max_diff(&inner(&s)) < 1e-14);
    assert!(inner(&h.block(0, 1)).max_diff(&inner(&projection(n, &[0]).scale(c(-1.0, 0.0)))) < 1e-14);
    assert!(inner(&h.block(1, 0)).max_abs() < 1e-14);
    assert!(inner(&h.block(1, 1)).max_diff(&inner(&sa)) < 1e-14);
}

#[test]
fn rotated_h_of_minus_z_squared() {
    // J H(-z^2) J = (S*^2, 0; -(P0 + P1), S^2)
    let n = 16;
    let minus_z2 = CircleFunction::mode(G, 2).unwrap().scale(c(-1.0, 0.0));
    let j = BlockOperator::rotation(n).to_dense();
    let h = h_block(&minus_z2, n).unwrap().to_dense();
    let jhj = j.matmul(&h).matmul(&j);
    let s = toeplitz_matrix(&z(), n).unwrap().matrix();
    let sa = toeplitz_matrix(&CircleFunction::mode(G, -1).unwrap(), n).unwrap().matrix();
    let k = n - 4;
    let blk = |r: usize, col: usize| jhj.block(r * n, col * n, k, k);
    assert!(blk(0, 0).max_diff(&sa.matmul(&sa).block(0, 0, k, k)) < 1e-14);
    assert!(blk(0, 1).max_abs() < 1e-14);
    assert!(blk(1, 0).max_diff(&projection(k, &[0, 1]).scale(c(-1.0, 0.0))) < 1e-14);
    assert!(blk(1, 1).max_diff(&s.matmul(&s).block(0, 0, k, k)) < 1e-14);
}

#[test]
fn case_one_product_transposes_first_two_components() {
    // J H(-z^2) J H(z)^2 = (1, 0; 0, T) with T swapping the modes 0 and 1.
    let n = 16;
    let minus_z2 = CircleFunction::mode(G, 2).unwrap().scale(c(-1.0, 0.0));
    let j = BlockOperator::rotation(n).to_dense();
    let hz = h_block(&z(), n).unwrap().to_dense();
    let prod = j
        .matmul(&h_block(&minus_z2, n).unwrap().to_dense())
        .matmul(&j)
        .matmul(&hz)
        .matmul(&hz);
    let k = n - 6;
    let mut swap = CMatrix::identity(k);
    swap[(0, 0)] = c(0.0, 0.0);
    swap[(1, 1)] = c(0.0, 0.0);
    swap[(0, 1)] = c(1.0, 0.0);
    swap[(1, 0)] = c(1.0, 0.0);
    assert!(prod.block(0, 0, k, k).max_diff(&CMatrix::identity(k)) < 1e-14);
    assert!(prod.block(0, n, k, k).max_abs() < 1e-14);
    assert!(prod.block(n, 0, k, k).max_abs() < 1e-14);
    assert!(prod.block(n, n, k, k).max_diff(&swap) < 1e-14);
    assert!((swap.determinant().unwrap().value() + 1.0).norm() < 1e-15);
}

#[test]
fn case_two_z_against_exponential() {
    let (alpha, plus, minus) = alpha_parts();
    let expected = (-0.7f64).exp();
    for a in [&alpha, &plus] {
        let ea = a.exp();
        let cf = regulator_fourier(&z(), &ea).unwrap().value;
        let integral = regulator_integral(&z(), &ea).unwrap().value;
        let op = steinberg_operator_determinant(&z(), &ea, 256, 64).unwrap().value;
        for v in [cf, integral, op] {
            assert!((v - expected).norm() < 1e-10, "{v}");
        }
    }
    let em = minus.exp();
    assert!((regulator_fourier(&z(), &em).unwrap().value - 1.0).norm() < 1e-12);
    assert!((steinberg_operator_determinant(&z(), &em, 256, 64).unwrap().value - 1.0).norm() < 1e-10);
}

#[test]
fn case_two_rank_one_collapse() {
    // A = -T(e^{a+}) P0 T(e^{-a+}) + P0 T(e^{-a+}) has rank one, so
    // det(1 + A) = 1 + tr A.
    let n = 48;
    let (_, plus, _) = alpha_parts();
    let tp = toeplitz_matrix(&plus.exp(), n).unwrap().matrix();
    let tm = toeplitz_matrix(&plus.scale(c(-1.0, 0.0)).exp(), n).unwrap().matrix();
    let p0 = projection(n, &[0]);
    let a = p0.matmul(&tm).sub(&tp.matmul(&p0).matmul(&tm));
    let one_term = grothendieck_det(&a, 1);
    let lu = CMatrix::identity(n).add(&a).determinant().unwrap().value();
    assert!((one_term - lu).norm() < 1e-12);
    assert!((one_term - (-0.7f64).exp()).norm() < 1e-12);
}

#[test]
fn case_three_helton_howe() {
    let a = modes(&[(1, c(0.3, 0.0)), (-2, c(0.1, 0.05)), (0, c(0.2, 0.0))]);
    let b = modes(&[(-1, c(0.2, 0.0)), (2, c(-0.15, 0.1)), (3, c(0.05, 0.0))]);
    // sum_k k a(-k) b(k)
    let exponent = c(-1.0 * 0.3 * 0.2, 0.0) + c(0.1, 0.05) * c(-0.15, 0.1) * 2.0;
    let expected = exponent.exp();
    assert!(relative_deviation(helton_howe_value(&a, &b).unwrap(), expected) < 1e-14);
    let det = commutator_determinant(&a, &b, 256, 64).unwrap().value;
    assert!(relative_deviation(det, expected) < 1e-10);
    assert!(relative_deviation(regulator_fourier(&a.exp(), &b.exp()).unwrap().value, expected) < 1e-12);
}

#[test]
fn additive_commutator_trace() {
    // exp of the trace of [T(a), T(b)] read off a leading block of truncations
    // taken at a larger dimension. The trace is of the commutator of the
    // logarithms; the commutator of the exponentials has a different trace.
    let a = modes(&[(1, c(0.9, 0.0)), (-1, c(0.3, 0.0))]);
    let b = modes(&[(-1, c(0.6, 0.0)), (2, c(0.3, 0.0))]);
    let (n, m) = (128, 64);
    let leading_trace = |f: &CircleFunction, g: &CircleFunction| {
        let tf = toeplitz_matrix(f, n).unwrap().matrix();
        let tg = toeplitz_matrix(g, n).unwrap().matrix();
        let comm = tf.matmul(&tg).sub(&tg.matmul(&tf));
        // The full finite commutator is traceless.
        assert!(comm.trace().norm() < 1e-12);
        comm.block(0, 0, m, m).trace()
    };
    let expected = helton_howe_value(&a, &b).unwrap();
    assert!((leading_trace(&a, &b).exp() - expected).norm() < 1e-12);
    let of_exponentials = leading_trace(&a.exp(), &b.exp()).exp();
    assert!((of_exponentials - expected).norm() > 0.05);
}

#[test]
fn assembled_formula_from_the_three_cases() {
    // R{z^m e^a, z^n e^b} = R{z,z}^{mn} R{z,e^b}^m R{z,e^a}^{-n} R{e^a,e^b}
    let a = modes(&[(0, c(0.4, 0.1)), (1, c(0.2, 0.0)), (-1, c(0.1, -0.1))]);
    let b = modes(&[(0, c(-0.3, 0.2)), (-2, c(0.15, 0.0)), (1, c(0.05, 0.05))]);
    let (ea, eb) = (a.exp(), b.exp());
    for (m, n) in [(2, -1), (1, 1), (-2, 2), (0, 3)] {
        let p = CircleFunction::mode(G, m).unwrap().mul(&ea).unwrap();
        let q = CircleFunction::mode(G, n).unwrap().mul(&eb).unwrap();
        let r_zz = regulator_fourier(&z(), &z()).unwrap().value;
        let r_zb = regulator_fourier(&z(), &eb).unwrap().value;
        let r_za = regulator_fourier(&z(), &ea).unwrap().value;
        let r_ab = regulator_fourier(&ea, &eb).unwrap().value;
        let assembled = r_zz.powi((m * n) as i32) * r_zb.powi(m as i32) * r_za.powi(-n as i32) * r_ab;
        let direct = regulator_integral(&p, &q).unwrap().value;
        assert!(relative_deviation(direct, assembled) < 1e-11, "m={m} n={n}");
        let op = steinberg_operator_determinant(&p, &q, 256, 64).unwrap().value;
        assert!(relative_deviation(op, assembled) < 1e-9, "m={m} n={n}");
    }
}
