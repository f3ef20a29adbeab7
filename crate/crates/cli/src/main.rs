use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use mtphi::archimedean::{self, BdConventions, B1};
use mtphi::padic::{parse_rational, LocalField, Scalar};
use mtphi::{corpus, filmod, grading, json as js, lie, linalg, logpoint, Error, FilPhiNModule, Result};

const DEFAULT_PRECISION: i64 = 20;

#[derive(Parser)]
#[command(name = "mtphi", version, about = "Mixed Tate filtered phi-modules and their periods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON result here instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct FieldArgs {
    /// Field description (JSON); overrides the field embedded in the input.
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long)]
    p: Option<u64>,
    /// Absolute precision; defaults to $MTPHI_PRECISION, then 20.
    #[arg(long)]
    precision: Option<i64>,
    /// Branch of log(p), a rational "a/b".
    #[arg(long)]
    branch: Option<String>,
    /// Eisenstein polynomial, ascending comma-separated rationals including the leading 1.
    #[arg(long, allow_hyphen_values = true)]
    eisenstein: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bernoulli {
    MinusHalf,
    PlusHalf,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a module and report its invariants.
    Check { input: PathBuf, #[command(flatten)] field: FieldArgs },
    /// The period automorphism eta in the slope basis.
    Eta { input: PathBuf, #[command(flatten)] field: FieldArgs },
    /// The semistable period automorphism, with entries in K[X], X = log_st(p).
    EtaSt { input: PathBuf, #[command(flatten)] field: FieldArgs },
    /// The class of an extension of K(0) by K(n).
    ExtClass {
        input: PathBuf,
        /// Twist; inferred from the slopes when omitted.
        #[arg(long)]
        n: Option<i64>,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// The extension of K(0) by K(n) with class a.
    ExtBuild {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long)]
        n: i64,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Baer sum of two extensions of K(0) by K(n).
    BaerSum {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        n: Option<i64>,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// The Kummer module of q.
    Kummer {
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Whether the monodromy vanishes.
    Crystalline { input: PathBuf, #[command(flatten)] field: FieldArgs },
    /// The graded object with automorphism attached to a mixed Tate module.
    Psi { input: PathBuf, #[command(flatten)] field: FieldArgs },
    /// The mixed Tate module attached to a graded object with automorphism.
    PhiInv { input: PathBuf, #[command(flatten)] field: FieldArgs },
    /// Rebuild eta from the generator actions and compare with the stored one.
    ReconstructEta { input: PathBuf, #[command(flatten)] field: FieldArgs },
    /// Graded dimensions of the free Lie algebra with d generators in each degree.
    LieDims {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        cutoff: usize,
    },
    /// The archimedean automorphism d and its logarithm for a real mixed Tate Hodge structure.
    ArchD {
        input: PathBuf,
        /// Tolerance for the structural zeros of d.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Li_k(z) for |z| <= 0.95.
    ArchPolylog {
        #[arg(long)]
        k: u32,
        /// Complex number "re" or "re,im".
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
    },
    /// The Beilinson-Deligne polylogarithm value.
    ArchBd {
        #[arg(long)]
        k: u32,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
        #[arg(long, value_enum, default_value = "minus-half")]
        b1: Bernoulli,
        /// Let the Bernoulli sum run up to l = k.
        #[arg(long)]
        include_top: bool,
        /// Use -i as the square root of -1.
        #[arg(long)]
        conjugate: bool,
    },
    /// Run the invariant suite on seeded random objects.
    Corpus {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        count: usize,
        #[command(flatten)]
        field: FieldArgs,
    },
}

fn read_json(path: &PathBuf) -> Result<Value> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text)
    } else {
        std::fs::File::open(path).and_then(|mut f| f.read_to_string(&mut text))
    }
    .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Invalid(format!("{}: malformed JSON at line {} column {}: {e}", path.display(), e.line(), e.column())))
}

fn default_precision() -> Result<i64> {
    match std::env::var("MTPHI_PRECISION") {
        Ok(s) => s.trim().parse().map_err(|_| Error::Invalid(format!("MTPHI_PRECISION={s:?} is not an integer"))),
        Err(_) => Ok(DEFAULT_PRECISION),
    }
}

fn parse_eisenstein(s: &str) -> Result<Vec<num_rational::BigRational>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| parse_rational(t.trim())).collect()
}

impl FieldArgs {
    fn overridden(&self) -> bool {
        self.field.is_some() || self.p.is_some() || self.precision.is_some() || self.branch.is_some() || self.eisenstein.is_some()
    }

    /// The field described by the flags, on top of `base` (from the input file) if any.
    fn resolve(&self, base: Option<&Value>) -> Result<LocalField> {
        let from_file;
        let base = match &self.field {
            Some(path) => {
                from_file = read_json(path)?;
                Some(&from_file)
            }
            None => base,
        };
        let base = base.map(|v| js::field_from_json(v, "$.field")).transpose()?;
        let p = match (self.p, &base) {
            (Some(p), _) => p,
            (None, Some(k)) => k.p(),
            (None, None) => return Err(Error::Invalid("no field given: pass --p or --field".into())),
        };
        let precision = match (self.precision, &base) {
            (Some(n), _) => n,
            (None, Some(k)) if std::env::var("MTPHI_PRECISION").is_err() => k.precision(),
            _ => default_precision()?,
        };
        let eis = match (&self.eisenstein, &base) {
            (Some(s), _) => parse_eisenstein(s)?,
            (None, Some(k)) => k.eisenstein().to_vec(),
            (None, None) => Vec::new(),
        };
        match (&self.branch, &base) {
            (Some(b), _) => LocalField::new(p, precision, eis, parse_rational(b)?),
            (None, Some(k)) if k.p() == p => match k.branch_rational() {
                Some(b) => LocalField::new(p, precision, eis, b.clone()),
                None => LocalField::with_padic_branch(p, precision, eis, k.branch_qp().clone()),
            },
            _ => LocalField::new(p, precision, eis, num_rational::BigRational::from_integer(0.into())),
        }
    }

    fn module(&self, path: &PathBuf) -> Result<FilPhiNModule> {
        let v = read_json(path)?;
        if self.overridden() {
            let k = self.resolve(v.get("field"))?;
            js::module_from_json(&v, Some(&k))
        } else {
            js::module_from_json(&v, None)
        }
    }

    fn ceta(&self, path: &PathBuf) -> Result<grading::CEtaObject> {
        let v = read_json(path)?;
        if self.overridden() {
            let k = self.resolve(v.get("field"))?;
            js::ceta_from_json(&v, Some(&k))
        } else {
            js::ceta_from_json(&v, None)
        }
    }
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Invalid(format!("cannot read {s:?} as a complex number \"re,im\""));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(bad()),
    }
}

/// A scalar, with its rational value when one is recognisable.
fn scalar_report(x: &Scalar) -> Value {
    let rational = if x.in_base_field() {
        x.base_coord().with_precision(x.field().precision()).rational_reconstruction().map(|q| mtphi::padic::format_rational(&q))
    } else {
        None
    };
    json!({"value": js::scalar_to_json(x), "rational": rational})
}

/// The twist of an extension of K(0) by K(n), read off its slopes.
fn infer_twist(m: &FilPhiNModule) -> Result<i64> {
    let slopes = filmod::slope_dims(m)?;
    let other: Vec<i64> = slopes.keys().copied().filter(|s| *s != 0).collect();
    match (slopes.get(&0), other.as_slice()) {
        (Some(1), [s]) if slopes[s] == 1 => Ok(-s),
        _ => Err(Error::WrongShape("not an extension of K(0) by K(n); pass --n".into())),
    }
}

fn check(m: &FilPhiNModule) -> Result<(Value, bool)> {
    let report = m.validate();
    let valid = report.is_valid();
    let mut out = json!({"valid": valid, "violations": report.violations, "dim": m.dim()});
    if valid {
        let mixed = m.is_mixed_tate()?;
        out["mixed_tate"] = json!(mixed);
        out["crystalline"] = json!(m.is_crystalline());
        if mixed {
            let slopes = filmod::slope_dims(m)?;
            out["slopes"] = json!(slopes.iter().map(|(s, k)| json!({"slope": s, "dim": k})).collect::<Vec<_>>());
            out["newton"] = js::polygon_to_json(&m.newton_polygon()?);
            out["hodge"] = js::polygon_to_json(&m.hodge_polygon()?);
        }
    }
    Ok((out, valid))
}

/// Runs a subcommand; the flag says whether the outcome counts as success.
fn run(cmd: Command) -> Result<(Value, bool)> {
    Ok(match cmd {
        Command::Check { input, field } => return check(&field.module(&input)?),
        Command::Eta { input, field } => (js::eta_to_json(&logpoint::eta(&field.module(&input)?)?), true),
        Command::EtaSt { input, field } => (js::eta_to_json(&logpoint::eta_st(&field.module(&input)?)?), true),
        Command::ExtClass { input, n, field } => {
            let m = field.module(&input)?;
            let n = n.map_or_else(|| infer_twist(&m), Ok)?;
            (scalar_report(&logpoint::ext_class(&m, n)?), true)
        }
        Command::ExtBuild { a, n, field } => {
            let k = field.resolve(None)?;
            let a = js::scalar_from_json(&k, &Value::String(a), "--a")?;
            (js::module_to_json(&logpoint::ext_build(&a, n)?), true)
        }
        Command::BaerSum { first, second, n, field } => {
            let e1 = field.module(&first)?;
            let e2 = field.module(&second)?;
            let n = n.map_or_else(|| infer_twist(&e1), Ok)?;
            (js::module_to_json(&logpoint::baer_sum(&e1, &e2, n)?), true)
        }
        Command::Kummer { q, field } => {
            let k = field.resolve(None)?;
            let q = js::scalar_from_json(&k, &Value::String(q), "--q")?;
            (js::module_to_json(&logpoint::kummer_module(&q)?), true)
        }
        Command::Crystalline { input, field } => {
            (json!({"crystalline": logpoint::is_crystalline(&field.module(&input)?)}), true)
        }
        Command::Psi { input, field } => (js::ceta_to_json(&grading::psi(&field.module(&input)?)?), true),
        Command::PhiInv { input, field } => (js::module_to_json(&grading::phi_inv(&field.ceta(&input)?)?), true),
        Command::ReconstructEta { input, field } => {
            let v = field.ceta(&input)?;
            let eta = grading::reconstruct_eta(&v)?;
            let ok = linalg::mat_eq_prec(&eta, v.eta());
            (json!({"eta": js::matrix_to_json(&eta), "matches": ok}), ok)
        }
        Command::LieDims { d, cutoff } => (json!(lie::lie_dims(d, cutoff)?), true),
        Command::ArchD { input, tol } => {
            let h = js::mths_from_json(&read_json(&input)?)?;
            let d = archimedean::compute_d(&h)?;
            let eps = archimedean::epsilon_arch(&h)?;
            let cleaned = d.cleaned(tol)?;
            let out = json!({
                "coweights": d.coweights,
                "d": js::complex_matrix_to_json(&cleaned),
                "epsilon": js::complex_matrix_to_json(&eps),
                "reality_defect": d.reality_defect(),
                "unipotence_defect": d.unipotence_defect(),
            });
            (out, true)
        }
        Command::ArchPolylog { k, z, tol } => (js::complex_to_json(archimedean::polylog(k, parse_complex(&z)?, tol)?), true),
        Command::ArchBd { k, z, tol, b1, include_top, conjugate } => {
            let conv = BdConventions {
                b1: match b1 {
                    Bernoulli::MinusHalf => B1::MinusHalf,
                    Bernoulli::PlusHalf => B1::PlusHalf,
                },
                include_top,
                sqrt_minus_one: if conjugate { -1 } else { 1 },
            };
            (js::complex_to_json(archimedean::bd_value(k, parse_complex(&z)?, tol, conv)?), true)
        }
        Command::Corpus { seed, count, field } => {
            let field = if field.p.is_none() && field.field.is_none() { FieldArgs { p: Some(5), ..field } } else { field };
            let report = corpus::run_corpus(&field.resolve(None)?, seed, count);
            let ok = report.all_passed();
            (report.to_json(), ok)
        }
    })
}

fn emit(value: &Value, output: Option<&PathBuf>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((value, ok)) => {
            if let Err(e) = emit(&value, cli.output.as_ref()) {
                eprintln!("mtphi: cannot write output: {e}");
                return ExitCode::from(2);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("mtphi: check failed");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("mtphi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
