//! `k2reg`: evaluate and cross-check regulator pairings from the shell.
//!
//! Exit codes: 0 success, 1 tolerance failure, 2 input error. A JSON (or CSV)
//! report goes to stdout on every path; diagnostics go to stderr.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;
use toeplitz_regulator::harness::{self, OutputFormat, RunConfig};
use toeplitz_regulator::{
    compose, mahler_measure, parse_loop, parse_point, parse_rational, parse_symbol, tame_symbol,
    Error, Method,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Closed,
    Integral,
    Operator,
}

impl MethodArg {
    fn method(self) -> Method {
        match self {
            MethodArg::Closed => Method::ClosedForm,
            MethodArg::Integral => Method::ContourIntegral,
            MethodArg::Operator => Method::OperatorDeterminant,
        }
    }

    fn name(self) -> &'static str {
        match self {
            MethodArg::Closed => "closed",
            MethodArg::Integral => "integral",
            MethodArg::Operator => "operator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "k2reg", version, about = "Regulator pairings of Steinberg symbols on loops")]
struct Cli {
    /// Samples per loop (power of two, at least 16).
    #[arg(long, global = true, default_value_t = 4096)]
    grid: usize,
    /// Internal dimension of the Toeplitz truncations.
    #[arg(long, global = true, default_value_t = 512)]
    dim_n: usize,
    /// Outer truncation of the determinant.
    #[arg(long, global = true, default_value_t = 64)]
    trunc_m: usize,
    #[arg(long, global = true, value_delimiter = ',', default_values = ["closed", "integral", "operator"])]
    methods: Vec<MethodArg>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Closed form against contour integral.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_analytic: f64,
    /// Operator determinant against the analytic value.
    #[arg(long, global = true, default_value_t = 1e-4)]
    tol_operator: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pair the symbol {f, g} with a loop, e.g. `pair z 1-z 'circle(0,0,0.5)'`.
    Pair { f: String, g: String, r#loop: String },
    /// Pair two circle functions given as symbol literals, e.g. `symbol z 'exp(fourier(1:1,0;-1:1,0))'`.
    Symbol { p: String, q: String },
    /// Tame symbol of {f, g} at a point (`inf` for infinity).
    Tame { f: String, g: String, point: String },
    /// Mahler measure of a polynomial and the matching regulator.
    Mahler { poly: String },
    /// Operator determinant at each truncation in `--ms`.
    Converge {
        f: String,
        g: String,
        r#loop: String,
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32, 64])]
        ms: Vec<usize>,
    },
    /// Run every property suite.
    Selftest,
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

impl Cli {
    fn config(&self) -> RunConfig {
        RunConfig {
            grid: self.grid,
            dim_n: self.dim_n,
            trunc_m: self.trunc_m,
            tol_analytic: self.tol_analytic,
            tol_operator: self.tol_operator,
            methods: self.methods.iter().map(|m| m.method()).collect::<BTreeSet<_>>(),
            format: match self.format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            },
            seed: self.seed,
        }
    }

    /// A command line with every option spelled out.
    fn echo(&self) -> String {
        let mut methods: Vec<MethodArg> = self.methods.clone();
        methods.sort_by_key(|m| m.method());
        methods.dedup();
        let mut s = format!(
            "k2reg --grid {} --dim-n {} --trunc-m {} --methods {} --format {} --seed {} --tol-analytic {:e} --tol-operator {:e}",
            self.grid,
            self.dim_n,
            self.trunc_m,
            methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
            match self.format {
                FormatArg::Json => "json",
                FormatArg::Csv => "csv",
            },
            self.seed,
            self.tol_analytic,
            self.tol_operator
        );
        let args: Vec<&str> = match &self.command {
            Command::Pair { f, g, r#loop } => vec!["pair", f, g, r#loop],
            Command::Symbol { p, q } => vec!["symbol", p, q],
            Command::Tame { f, g, point } => vec!["tame", f, g, point],
            Command::Mahler { poly } => vec!["mahler", poly],
            Command::Converge { f, g, r#loop, .. } => vec!["converge", f, g, r#loop],
            Command::Selftest => vec!["selftest"],
        };
        s.push(' ');
        s.push_str(args[0]);
        for a in &args[1..] {
            write!(s, " {}", quote(a)).unwrap();
        }
        if let Command::Converge { ms, .. } = &self.command {
            let list: Vec<String> = ms.iter().map(usize::to_string).collect();
            write!(s, " --ms {}", list.join(",")).unwrap();
        }
        s
    }
}

/// Outcome of a subcommand: the report text and whether it passed.
struct Outcome {
    text: String,
    pass: bool,
}

fn cx(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let config = cli.config();
    config.validate()?;
    let command = cli.echo();
    let csv = config.format == OutputFormat::Csv;
    match &cli.command {
        Command::Pair { f, g, r#loop } => {
            let (fr, gr, gamma) = (parse_rational(f)?, parse_rational(g)?, parse_loop(r#loop)?);
            let p = compose(&fr, &gamma, config.grid)?;
            let q = compose(&gr, &gamma, config.grid)?;
            let inputs = BTreeMap::from([
                ("f".to_string(), f.clone()),
                ("g".to_string(), g.clone()),
                ("loop".to_string(), r#loop.clone()),
            ]);
            let report = harness::evaluate_pair(&p, &q, command, inputs, &config);
            let text = if csv { report.to_csv() } else { report.to_json() };
            Ok(Outcome { text, pass: report.pass })
        }
        Command::Symbol { p, q } => {
            let ps = parse_symbol(p)?.sample(config.grid)?;
            let qs = parse_symbol(q)?.sample(config.grid)?;
            for s in [&ps, &qs] {
                s.ensure_nonvanishing()?;
                s.ensure_resolved()?;
            }
            let inputs = BTreeMap::from([("p".to_string(), p.clone()), ("q".to_string(), q.clone())]);
            let report = harness::evaluate_pair(&ps, &qs, command, inputs, &config);
            let text = if csv { report.to_csv() } else { report.to_json() };
            Ok(Outcome { text, pass: report.pass })
        }
        Command::Tame { f, g, point } => {
            let (fr, gr, x) = (parse_rational(f)?, parse_rational(g)?, parse_point(point)?);
            let v = tame_symbol(&fr, &gr, x);
            let text = if csv {
                format!("re,im\n{:e},{:e}\n", v.re, v.im)
            } else {
                pretty(&json!({
                    "schema": harness::SCHEMA_VERSION,
                    "command": command,
                    "inputs": { "f": f, "g": g, "point": point },
                    "point": x.to_string(),
                    "value": cx(v),
                }))
            };
            Ok(Outcome { text, pass: true })
        }
        Command::Mahler { poly } => {
            let m = mahler_measure(&parse_rational(poly)?, config.grid)?;
            let pass = m.deviation <= config.tol_analytic;
            let text = if csv {
                format!(
                    "value,regulator_log_abs,deviation,pass\n{:e},{:e},{:e},{pass}\n",
                    m.value, m.regulator_log_abs, m.deviation
                )
            } else {
                pretty(&json!({
                    "schema": harness::SCHEMA_VERSION,
                    "command": command,
                    "inputs": { "poly": poly },
                    "value": m.value,
                    "regulator_log_abs": m.regulator_log_abs,
                    "deviation": m.deviation,
                    "tolerance": config.tol_analytic,
                    "pass": pass,
                }))
            };
            Ok(Outcome { text, pass })
        }
        Command::Converge { f, g, r#loop, ms } => {
            let (fr, gr, gamma) = (parse_rational(f)?, parse_rational(g)?, parse_loop(r#loop)?);
            let p = compose(&fr, &gamma, config.grid)?;
            let q = compose(&gr, &gamma, config.grid)?;
            let report = harness::converge(&p, &q, config.dim_n, ms, command)?;
            let text = if csv { report.to_csv() } else { report.to_json() };
            Ok(Outcome { text, pass: true })
        }
        Command::Selftest => {
            let report = harness::selftest(&config, command)?;
            for s in &report.suites {
                eprintln!(
                    "{} {:<42} worst {:.3e} (tol {:.1e}, {} cases)",
                    if s.pass { "PASS" } else { "FAIL" },
                    s.name,
                    s.worst,
                    s.tolerance,
                    s.cases
                );
                if let Some(note) = &s.note {
                    eprintln!("     {note}");
                }
            }
            let text = if csv { report.to_csv() } else { report.to_json() };
            Ok(Outcome { text, pass: report.pass })
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse(_) => "parse",
        Error::DivisorCollision { .. } => "divisor_collision",
        Error::UnderResolved { .. } => "under_resolved",
        Error::NearZeroSymbol { .. } => "near_zero_symbol",
        Error::InvalidConfig(_) | Error::InvalidGrid(_) | Error::DimensionExceedsGrid { .. } => "config",
        Error::PaddingTooSmall { .. } => "padding_too_small",
        Error::RootOnContour { .. } => "root_on_contour",
        Error::NotPolynomial => "not_polynomial",
        _ => "input",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            if !outcome.text.ends_with('\n') {
                println!();
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("tolerance check failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut err = json!({ "kind": error_kind(&e), "message": e.to_string() });
            if let Error::Parse(p) = &e {
                err["offset"] = json!(p.offset);
                err["expected"] = json!(p.expected);
            }
            println!(
                "{}",
                pretty(&json!({
                    "schema": harness::SCHEMA_VERSION,
                    "command": cli.echo(),
                    "error": err,
                }))
            );
            ExitCode::from(2)
        }
    }
}
