//! Command-line front end: every subcommand is a thin adapter from JSON
//! files to one library call. Exit codes: 0 success, 1 mathematical
//! refutation, 2 input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use momentforge::algebra::{add_convolve, entrywise_power, hadamard, moments, mult_convolve};
use momentforge::combinatorics::Exactness;
use momentforge::diagop::{DiagonalOperator, Rep};
use momentforge::dualmap::{dual_apply, k_moment_preservation_check};
use momentforge::json as mf_json;
use momentforge::levy::divisibility_scan;
use momentforge::positivity::{
    is_psd_with, moment_membership_check_with, schur_product, Cone, MembershipOutcome, PsdOptions,
    PsdStatus, SymMatrix, DEFAULT_FLOAT_TOL,
};
use momentforge::{Mode, Scalar};

#[derive(Parser)]
#[command(
    name = "momentforge",
    version,
    about = "Moment sequences, atomic measures, and diagonal positivity preservers"
)]
struct Cli {
    /// Output rendering
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    output: Output,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConvMode {
    Add,
    Mult,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConeArg {
    Fullspace,
    Orthant,
}

impl From<ConeArg> for Cone {
    fn from(c: ConeArg) -> Cone {
        match c {
            ConeArg::Fullspace => Cone::FullSpace,
            ConeArg::Orthant => Cone::NonnegOrthant,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RepArg {
    T,
    C,
    D,
}

impl From<RepArg> for Rep {
    fn from(r: RepArg) -> Rep {
        match r {
            RepArg::T => Rep::EigT,
            RepArg::C => Rep::CoefC,
            RepArg::D => Rep::CoefD,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Moments of an atomic measure on an explicit degree window
    Moments {
        /// Measure JSON file
        measure: PathBuf,
        #[arg(long)]
        degree: u32,
    },
    /// Additive or multiplicative convolution of two atomic measures
    Convolve {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_enum)]
        mode: ConvMode,
    },
    /// Entrywise product of two moment sequences on the same window
    Hadamard {
        left: PathBuf,
        right: PathBuf,
    },
    /// Entrywise power s_α ↦ s_α^c (entries must be positive)
    Power {
        sequence: PathBuf,
        #[arg(long)]
        c: f64,
    },
    /// Hankel / localizing PSD evidence for K-moment membership
    HankelCheck {
        sequence: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long, value_enum, default_value_t = ConeArg::Fullspace)]
        cone: ConeArg,
    },
    /// Convert a diagonal operator between the t, c and d representations
    ConvertRep {
        operator: PathBuf,
        /// Representation the input must be in
        #[arg(long, value_enum)]
        from: RepArg,
        #[arg(long, value_enum)]
        to: RepArg,
        /// Window degree of the result (defaults to the input window)
        #[arg(long)]
        degree: Option<u32>,
    },
    /// Apply a diagonal operator to a polynomial
    ApplyOp {
        operator: PathBuf,
        polynomial: PathBuf,
    },
    /// Exponentiate a generator entrywise: eigenvalues e^{a_α}, float mode
    ExpGen {
        operator: PathBuf,
    },
    /// Moments of the infinitely ⊙-divisible sequence of a Lévy triplet
    LevyMoments {
        triplet: PathBuf,
        #[arg(long)]
        degree: u32,
        /// Emit log-moments instead (exact in rational mode, never overflows)
        #[arg(long)]
        log: bool,
    },
    /// Compare the binomial transform of the generator against direct log-moments
    LevyConsistency {
        triplet: PathBuf,
        #[arg(long)]
        degree: u32,
    },
    /// Hadamard-power PSD scan of a sequence over a grid of exponents
    DivisibilityScan {
        sequence: PathBuf,
        #[arg(long)]
        degree: u32,
        /// Comma-separated exponents, e.g. 0.1,0.25,0.5,1,2
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ConeArg::Fullspace)]
        cone: ConeArg,
    },
    /// Entrywise products of random rational Gram-matrix pairs must stay PSD
    SchurTest {
        #[arg(long, default_value_t = 25)]
        trials: u32,
        /// Matrix order of each Gram factor
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
    /// Dual action of a differential operator on a moment sequence
    DualApply {
        operator: PathBuf,
        sequence: PathBuf,
        #[arg(long)]
        degree: u32,
    },
    /// Sampled finite-level evidence for K-moment preservation
    KmomentCheck {
        operator: PathBuf,
        /// JSON file {"samples": [[...], ...]} of points in the cone
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        degree: u32,
        #[arg(long, value_enum, default_value_t = ConeArg::Fullspace)]
        cone: ConeArg,
    },
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

fn psd_options() -> Result<PsdOptions> {
    match std::env::var("MOMENTFORGE_FLOAT_TOL") {
        Ok(raw) => {
            let tol: f64 = raw
                .parse()
                .map_err(|_| anyhow!("MOMENTFORGE_FLOAT_TOL={raw:?} is not a number"))?;
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(anyhow!("MOMENTFORGE_FLOAT_TOL must be a positive number"));
            }
            Ok(PsdOptions { float_tol: tol })
        }
        Err(_) => Ok(PsdOptions {
            float_tol: DEFAULT_FLOAT_TOL,
        }),
    }
}

fn read_samples(path: &Path) -> Result<Vec<Vec<Scalar>>> {
    let v = read_json(path)?;
    let obj = v
        .as_object()
        .ok_or_else(|| anyhow!("samples file must be a JSON object"))?;
    let rows = obj
        .get("samples")
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow!("samples file needs a \"samples\" array"))?;
    let declared = obj.get("mode").and_then(Value::as_str);
    let mode = match declared {
        Some("rational") => Mode::Rational,
        Some("float") => Mode::Float,
        Some(other) => return Err(anyhow!("unknown mode {other:?}")),
        None => {
            let any_string = rows
                .iter()
                .flat_map(|r| r.as_array().into_iter().flatten())
                .any(Value::is_string);
            if any_string {
                Mode::Rational
            } else {
                Mode::Float
            }
        }
    };
    rows.iter()
        .map(|row| {
            let coords = row
                .as_array()
                .ok_or_else(|| anyhow!("each sample must be an array of coordinates"))?;
            coords
                .iter()
                .map(|c| mf_json::scalar_from_json(c, mode).map_err(anyhow::Error::from))
                .collect()
        })
        .collect()
}

/// Payload plus process exit code (0 ok, 1 refuted).
struct Outcome {
    payload: Value,
    code: u8,
}

fn ok(payload: Value) -> Result<Outcome> {
    Ok(Outcome { payload, code: 0 })
}

fn verdict_code(outcome: MembershipOutcome) -> u8 {
    match outcome {
        MembershipOutcome::Refuted => 1,
        _ => 0,
    }
}

fn run(cmd: Cmd) -> Result<Outcome> {
    match cmd {
        Cmd::Moments { measure, degree } => {
            let mu = mf_json::measure_from_json(&read_json(&measure)?)?;
            ok(mf_json::sequence_to_json(&moments(&mu, degree))?)
        }
        Cmd::Convolve { left, right, mode } => {
            let mu = mf_json::measure_from_json(&read_json(&left)?)?;
            let nu = mf_json::measure_from_json(&read_json(&right)?)?;
            let out = match mode {
                ConvMode::Add => add_convolve(&mu, &nu)?,
                ConvMode::Mult => mult_convolve(&mu, &nu)?,
            };
            ok(mf_json::measure_to_json(&out)?)
        }
        Cmd::Hadamard { left, right } => {
            let s = mf_json::sequence_from_json(&read_json(&left)?)?;
            let t = mf_json::sequence_from_json(&read_json(&right)?)?;
            ok(mf_json::sequence_to_json(&hadamard(&s, &t)?)?)
        }
        Cmd::Power { sequence, c } => {
            let s = mf_json::sequence_from_json(&read_json(&sequence)?)?;
            ok(mf_json::sequence_to_json(&entrywise_power(&s, c)?)?)
        }
        Cmd::HankelCheck {
            sequence,
            degree,
            cone,
        } => {
            let s = mf_json::sequence_from_json(&read_json(&sequence)?)?;
            let report = moment_membership_check_with(&s, degree, cone.into(), &psd_options()?)?;
            let code = verdict_code(report.outcome);
            Ok(Outcome {
                payload: mf_json::membership_to_json(&report)?,
                code,
            })
        }
        Cmd::ConvertRep {
            operator,
            from,
            to,
            degree,
        } => {
            let op = mf_json::operator_from_json(&read_json(&operator)?)?;
            if op.rep() != Rep::from(from) {
                return Err(anyhow!(
                    "operator file is in the {} representation, not {}",
                    op.rep(),
                    Rep::from(from)
                ));
            }
            let degree = degree.unwrap_or_else(|| op.coeffs().degree());
            let (coeffs, exactness) = op.convert_coeffs(to.into(), degree)?;
            let converted = match Rep::from(to) {
                Rep::EigT => DiagonalOperator::from_eigenvalues(coeffs),
                Rep::CoefC => DiagonalOperator::from_c_coeffs(coeffs),
                Rep::CoefD => DiagonalOperator::from_d_coeffs(coeffs)?,
            };
            let mut payload = mf_json::operator_to_json(&converted)?;
            payload["exactness"] = Value::String(
                match exactness {
                    Exactness::Exact => "exact",
                    Exactness::Partial => "partial",
                }
                .into(),
            );
            ok(payload)
        }
        Cmd::ApplyOp {
            operator,
            polynomial,
        } => {
            let op = mf_json::operator_from_json(&read_json(&operator)?)?;
            let p = mf_json::polynomial_from_json(&read_json(&polynomial)?)?;
            ok(mf_json::polynomial_to_json(&op.apply(&p)?)?)
        }
        Cmd::ExpGen { operator } => {
            let op = mf_json::operator_from_json(&read_json(&operator)?)?;
            ok(mf_json::operator_to_json(&op.exp_op()?)?)
        }
        Cmd::LevyMoments {
            triplet,
            degree,
            log,
        } => {
            let tr = mf_json::triplet_from_json(&read_json(&triplet)?)?;
            let s = if log {
                tr.infdiv_log_moments(degree)?
            } else {
                tr.infdiv_moments(degree)?
            };
            ok(mf_json::sequence_to_json(&s)?)
        }
        Cmd::LevyConsistency { triplet, degree } => {
            let tr = mf_json::triplet_from_json(&read_json(&triplet)?)?;
            let report = tr.consistency_check(degree)?;
            let code = u8::from(!report.passed);
            Ok(Outcome {
                payload: mf_json::consistency_to_json(&report),
                code,
            })
        }
        Cmd::DivisibilityScan {
            sequence,
            degree,
            grid,
            cone,
        } => {
            let s = mf_json::sequence_from_json(&read_json(&sequence)?)?;
            let scan = divisibility_scan(&s, degree, &grid, cone.into(), &psd_options()?)?;
            let code = verdict_code(scan.outcome);
            Ok(Outcome {
                payload: mf_json::scan_to_json(&scan)?,
                code,
            })
        }
        Cmd::SchurTest {
            trials,
            order,
            seed,
        } => {
            if order == 0 || order > 12 {
                return Err(anyhow!("order must be between 1 and 12"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gram = |rng: &mut ChaCha8Rng| {
                let g: Vec<Vec<Scalar>> = (0..order)
                    .map(|_| {
                        (0..order)
                            .map(|_| {
                                Scalar::ratio(rng.random_range(-9..=9), rng.random_range(1..=9))
                            })
                            .collect()
                    })
                    .collect();
                let entries: Vec<Scalar> = (0..order)
                    .flat_map(|i| {
                        let g = &g;
                        (0..order).map(move |j| {
                            let mut acc = Scalar::zero(Mode::Rational);
                            for k in 0..order {
                                acc = acc + &g[k][i] * &g[k][j];
                            }
                            acc
                        })
                    })
                    .collect();
                SymMatrix::new(order, Mode::Rational, entries).expect("Gram matrix is symmetric")
            };
            let opts = psd_options()?;
            let mut failures = Vec::new();
            for trial in 0..trials {
                let a = gram(&mut rng);
                let b = gram(&mut rng);
                let product = schur_product(&a, &b)?;
                let verdict = is_psd_with(&product, &opts);
                if verdict.status != PsdStatus::Psd {
                    failures.push(json!({
                        "trial": trial,
                        "verdict": mf_json::verdict_to_json(&verdict)?,
                    }));
                }
            }
            let code = u8::from(!failures.is_empty());
            Ok(Outcome {
                payload: json!({
                    "trials": trials,
                    "order": order,
                    "seed": seed,
                    "all_psd": failures.is_empty(),
                    "failures": failures,
                }),
                code,
            })
        }
        Cmd::DualApply {
            operator,
            sequence,
            degree,
        } => {
            let t = mf_json::diffop_from_json(&read_json(&operator)?)?;
            let s = mf_json::sequence_from_json(&read_json(&sequence)?)?;
            ok(mf_json::sequence_to_json(&dual_apply(&t, &s, degree)?)?)
        }
        Cmd::KmomentCheck {
            operator,
            samples,
            degree,
            cone,
        } => {
            let t = mf_json::diffop_from_json(&read_json(&operator)?)?;
            let ys = read_samples(&samples)?;
            let report =
                k_moment_preservation_check(&t, &ys, degree, cone.into(), &psd_options()?)?;
            let code = verdict_code(report.outcome);
            Ok(Outcome {
                payload: mf_json::kmoment_to_json(&report)?,
                code,
            })
        }
    }
}

/// Plain-text rendering: nested keys indented, arrays as numbered rows.
fn render_table(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) if !is_leaf_array(val) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_table(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", leaf(val))),
                }
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::Object(_) | Value::Array(_) if !is_leaf_array(item) => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        render_table(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}[{i}] {}\n", leaf(item))),
                }
            }
        }
        leaf_value => out.push_str(&format!("{pad}{}\n", leaf(leaf_value))),
    }
}

/// Arrays of plain scalars print on one line.
fn is_leaf_array(v: &Value) -> bool {
    v.as_array()
        .map(|items| {
            items
                .iter()
                .all(|x| !matches!(x, Value::Object(_) | Value::Array(_)))
        })
        .unwrap_or(false)
}

fn leaf(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(leaf).collect();
            format!("[{}]", parts.join(", "))
        }
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(Outcome { payload, code }) => {
            match cli.output {
                Output::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&payload).expect("payload serializes")
                ),
                Output::Table => {
                    let mut text = String::new();
                    render_table(&payload, 0, &mut text);
                    print!("{text}");
                }
            }
            ExitCode::from(code)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
