//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use toeplitz_regulator::harness::{evaluate_pair, selftest, RunConfig, SelftestReport};
use toeplitz_regulator::{mahler_measure, parse_rational, CircleFunction, Method};

struct Line {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn suites(report: &SelftestReport, names: &[&str]) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        match report.suite(name) {
            Some(s) => {
                pass &= s.pass;
                parts.push(format!("{name} worst={:.2e} tol={:.0e}", s.worst, s.tolerance));
                if let Some(note) = &s.note {
                    parts.push(note.clone());
                }
            }
            None => {
                pass = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    (pass, parts.join("; "))
}

fn case_one(config: &RunConfig) -> (bool, String) {
    let start = Instant::now();
    let z = match CircleFunction::mode(config.grid, 1) {
        Ok(z) => z,
        Err(e) => return (false, e.to_string()),
    };
    let report = evaluate_pair(&z, &z, "acceptance".into(), BTreeMap::new(), config);
    let secs = start.elapsed().as_secs_f64();
    let minus_one = Complex64::new(-1.0, 0.0);
    let err = |m| report.value(m).map_or(f64::INFINITY, |v| (v - minus_one).norm());
    let (cf, int, op) = (
        err(Method::ClosedForm),
        err(Method::ContourIntegral),
        err(Method::OperatorDeterminant),
    );
    let pass = cf <= 1e-10 && int <= 1e-10 && op <= 1e-6 && secs < 2.0;
    (pass, format!("closed {cf:.1e} integral {int:.1e} operator {op:.1e} in {secs:.2}s"))
}

fn mahler() -> (bool, String) {
    let m = match parse_rational("z-2").map_err(Into::into).and_then(|p| mahler_measure(&p, 4096)) {
        Ok(m) => m,
        Err(e) => return (false, e.to_string()),
    };
    let value_err = (m.value - 2f64.ln()).abs();
    let pass = value_err <= 1e-10 && m.deviation <= 1e-8;
    (pass, format!("|m - log 2| = {value_err:.1e}, |m - log|R|| = {:.1e}", m.deviation))
}

fn main() -> ExitCode {
    let config = RunConfig::default();
    let mut lines = Vec::new();

    let (pass, detail) = case_one(&config);
    lines.push(Line { id: 1, title: "symbol (z, z) evaluates to -1", pass, detail });

    let report = match selftest(&config, "acceptance".into()) {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL selftest could not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    let secs = |name: &str| report.suite(name).map_or(f64::INFINITY, |s| s.wall_seconds);

    let (pass, detail) = suites(&report, &["regulator.oracle_agreement"]);
    let t = secs("regulator.oracle_agreement");
    lines.push(Line {
        id: 2,
        title: "closed form vs contour integral on 100 random pairs",
        pass: pass && t < 10.0,
        detail: format!("{detail}; {t:.2}s"),
    });

    let (pass, detail) = suites(&report, &["toeplitz.operator_convergence"]);
    let t = secs("toeplitz.operator_convergence");
    lines.push(Line {
        id: 3,
        title: "operator determinant vs closed form on 20 symbols",
        pass: pass && t < 60.0,
        detail: format!("{detail}; {t:.2}s"),
    });

    let (pass, detail) = suites(&report, &["toeplitz.helton_howe"]);
    lines.push(Line { id: 4, title: "multiplicative commutator trace formula", pass, detail });

    let (pass, detail) = suites(
        &report,
        &[
            "regulator.skew_symmetry",
            "regulator.bimultiplicativity",
            "regulator.steinberg_relation",
            "regulator.branch_invariance",
        ],
    );
    lines.push(Line { id: 5, title: "algebraic identities", pass, detail });

    let (pass, detail) = suites(
        &report,
        &[
            "regulator.homotopy_invariance",
            "regulator.reparameterization_invariance",
            "regulator.tame_limit",
        ],
    );
    lines.push(Line { id: 6, title: "geometric invariances and tame limit", pass, detail });

    let (pass, detail) = suites(&report, &["toeplitz.hs_two_summability"]);
    lines.push(Line { id: 7, title: "Hilbert-Schmidt commutator norms", pass, detail });

    let (pass, detail) = mahler();
    lines.push(Line { id: 8, title: "Mahler measure of z - 2", pass, detail });

    let (pass, detail) = suites(&report, &["toeplitz.grothendieck"]);
    lines.push(Line { id: 9, title: "Grothendieck series vs LU", pass, detail });

    for l in &lines {
        let tag = if l.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {} ({})", l.id, l.title, l.detail);
    }
    if lines.iter().all(|l| l.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
