//! `mprat`: batch front end for the mprat-core library.
//!
//! Every subcommand prints one JSON document on standard output. Exit
//! codes: 0 success or zero verdict, 1 nonzero witness or not invertible,
//! 2 usage or parse error, 3 undefined at the point.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mprat_core::calculus::delta;
use mprat_core::eval::{bf_alphabet, bf_evaluate, mp_evaluate};
use mprat_core::expr::{parse, Alphabet, RationalExpr};
use mprat_core::identity::{domain_scan, equivalent, is_zero, TestConfig};
use mprat_core::json::{
    expr_matrix_from_json, expr_matrix_to_json, matrix_from_json, BfPointFile, JsonMatrix, PointFile, RealizationFile,
};
use mprat_core::matrix_rational::{matrix_inverse_expr, matrix_invertible, partial_evaluate, Invertibility, MatrixRationalError};
use mprat_core::realization::{real_reduce, realize, RealizationError};
use serde::Serialize;

use report::*;

#[derive(Parser)]
#[command(name = "mprat", version, about = "Multipartite noncommutative rational functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression at a multipartite point.
    Eval {
        #[command(flatten)]
        input: ExprInput,
        #[arg(long)]
        point: PathBuf,
    },
    /// Decide whether an expression is zero.
    CheckZero {
        #[command(flatten)]
        input: ExprInput,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Decide whether two expressions agree wherever both are defined.
    Equiv {
        #[arg(long)]
        alphabet: String,
        lhs: PathBuf,
        rhs: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Difference-differential operator with respect to one letter.
    Delta {
        #[command(flatten)]
        input: ExprInput,
        #[arg(long)]
        part: usize,
        #[arg(long)]
        index: usize,
    },
    /// Linear-pencil realization about a base point.
    Realize {
        #[command(flatten)]
        input: ExprInput,
        #[arg(long)]
        base_point: PathBuf,
    },
    /// Evaluation in the bi-free model over X_1..X_g (part 1), Y_1..Y_g (part 2).
    BfEval {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        expr: PathBuf,
        #[arg(long)]
        point: PathBuf,
    },
    /// Smallest sampled level where the expression is defined.
    DomainScan {
        #[command(flatten)]
        input: ExprInput,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Symbolic inverse of a square matrix of expressions.
    MatInv {
        #[arg(long)]
        alphabet: String,
        /// JSON array of rows of expression strings.
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Substitute constant matrices for the letters of one part.
    PartialEval {
        #[command(flatten)]
        input: ExprInput,
        #[arg(long, default_value_t = 1)]
        part: usize,
        /// JSON array of the part's matrices.
        #[arg(long)]
        tuple: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Args)]
struct ExprInput {
    /// Alphabet as G:g1,...,gG.
    #[arg(long)]
    alphabet: String,
    #[arg(long)]
    expr: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = 4)]
    max_level: usize,
    #[arg(long, default_value_t = 8)]
    trials: usize,
    #[arg(long, default_value_t = 10)]
    bound: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ConfigArgs {
    fn config(&self) -> Result<TestConfig, Failure> {
        let seed = match std::env::var("MPRAT_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("MPRAT_SEED={v:?} is not an unsigned integer")))?,
            Err(_) => self.seed,
        };
        let cfg = TestConfig {
            max_level: self.max_level,
            trials_per_level: self.trials,
            entry_bound: self.bound,
            seed,
        };
        cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(cfg)
    }
}

/// An error report plus its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
}

type Outcome = Result<(String, i32), Failure>;

fn emit<T: Serialize>(report: &T, code: i32) -> Outcome {
    Ok((serde_json::to_string(report).map_err(Failure::internal)?, code))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn alphabet(text: &str) -> Result<Alphabet, Failure> {
    text.parse().map_err(|e: mprat_core::expr::ExprError| Failure::usage(e.to_string()))
}

fn expression(path: &Path, alphabet: &Alphabet) -> Result<RationalExpr, Failure> {
    let text = read(path)?;
    parse(&text, alphabet).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load(input: &ExprInput) -> Result<(Alphabet, RationalExpr), Failure> {
    let a = alphabet(&input.alphabet)?;
    let e = expression(&input.expr, &a)?;
    Ok((a, e))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Eval { input, point } => {
            let (a, e) = load(&input)?;
            let pt = PointFile::from_text(&read(&point)?)
                .and_then(|f| f.to_point())
                .map_err(|err| Failure::usage(err.to_string()))?;
            pt.check_alphabet(&a).map_err(|err| Failure::usage(err.to_string()))?;
            let value = mp_evaluate(&e, &pt).map_err(|err| Failure::usage(err.to_string()))?;
            let (report, code) = EvalReport::new(&value);
            emit(&report, code)
        }
        Command::CheckZero { input, cfg } => {
            let (a, e) = load(&input)?;
            let report = is_zero(&e, &a, &cfg.config()?).map_err(Failure::internal)?;
            let (report, code) = VerdictReport::new(&report);
            emit(&report, code)
        }
        Command::Equiv {
            alphabet: text,
            lhs,
            rhs,
            cfg,
        } => {
            let a = alphabet(&text)?;
            let (l, r) = (expression(&lhs, &a)?, expression(&rhs, &a)?);
            let report = equivalent(&l, &r, &a, &cfg.config()?).map_err(Failure::internal)?;
            let (report, code) = VerdictReport::new(&report);
            emit(&report, code)
        }
        Command::Delta { input, part, index } => {
            let (a, e) = load(&input)?;
            let d = delta(&a, part, index, &e).map_err(|err| Failure::usage(err.to_string()))?;
            emit(
                &DeltaReport {
                    alphabet: a.to_string(),
                    delta: d.to_string(),
                },
                0,
            )
        }
        Command::Realize { input, base_point } => {
            let (a, e) = load(&input)?;
            let p = PointFile::from_text(&read(&base_point)?)
                .and_then(|f| f.to_nc_point(&a))
                .map_err(|err| Failure::usage(err.to_string()))?;
            match realize(&e, &a, &p) {
                Ok(r) => emit(
                    &RealizeReport {
                        reduced_dim: real_reduce(&r).dim(),
                        realization: RealizationFile::from_realization(&r),
                    },
                    0,
                ),
                Err(RealizationError::BasePointOutsideDomain { subexpr }) => Err(Failure {
                    code: 3,
                    message: format!("base point is outside the domain of {subexpr}"),
                }),
                Err(other) => Err(Failure::usage(other.to_string())),
            }
        }
        Command::BfEval { g, expr, point } => {
            if g == 0 {
                return Err(Failure::usage("--g must be at least 1"));
            }
            let a = bf_alphabet(g);
            let e = expression(&expr, &a)?;
            let pt = BfPointFile::from_text(&read(&point)?)
                .and_then(|f| f.to_point())
                .map_err(|err| Failure::usage(err.to_string()))?;
            if pt.g() != g {
                return Err(Failure::usage(format!("point has g = {}, expected {g}", pt.g())));
            }
            let value = bf_evaluate(&e, &pt).map_err(|err| Failure::usage(err.to_string()))?;
            let (report, code) = EvalReport::new(&value);
            emit(&report, code)
        }
        Command::DomainScan { input, cfg } => {
            let (a, e) = load(&input)?;
            let scan = domain_scan(&e, &a, &cfg.config()?).map_err(Failure::internal)?;
            let code = if scan.first_defined_level.is_some() { 0 } else { 3 };
            emit(
                &DomainScanReport {
                    first_defined_level: scan.first_defined_level,
                    witness: scan.witness.as_ref().map(PointFile::from_point),
                },
                code,
            )
        }
        Command::MatInv {
            alphabet: text,
            matrix,
            cfg,
        } => {
            let a = alphabet(&text)?;
            let m = expr_matrix_from_json(&read(&matrix)?, &a).map_err(|err| Failure::usage(err.to_string()))?;
            let cfg = cfg.config()?;
            let witness = match matrix_invertible(&m, &cfg).map_err(Failure::internal)? {
                Invertibility::InvertibleWitness { point, .. } => point,
                Invertibility::ProbablyNotInvertible { max_level, trials } => {
                    return emit(&MatInvReport::ProbablyNotInvertible { max_level, trials }, 1)
                }
            };
            match matrix_inverse_expr(&m, &cfg) {
                Ok(c) => emit(
                    &MatInvReport::Invertible {
                        witness: PointFile::from_point(&witness),
                        inverse: expr_matrix_to_json(&c.inverse),
                        pivots: c
                            .pivots
                            .iter()
                            .map(|p| PivotReport {
                                block_size: p.block_size,
                                row: p.row,
                                col: p.col,
                                entry: p.entry.to_string(),
                                witness_level: p.witness_level,
                                witness_trial: p.witness_trial,
                            })
                            .collect(),
                    },
                    0,
                ),
                Err(err @ MatrixRationalError::NotInvertible { .. }) => {
                    emit(&MatInvReport::NotInvertible { reason: err.to_string() }, 1)
                }
                Err(other) => Err(Failure::internal(other)),
            }
        }
        Command::PartialEval {
            input,
            part,
            tuple,
            cfg,
        } => {
            let (a, e) = load(&input)?;
            let mats: Vec<JsonMatrix> =
                serde_json::from_str(&read(&tuple)?).map_err(|err| Failure::usage(err.to_string()))?;
            let mats = mats
                .iter()
                .map(matrix_from_json)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|err| Failure::usage(err.to_string()))?;
            match partial_evaluate(&e, &a, part, &mats, &cfg.config()?) {
                Ok(s) => emit(
                    &PartialReport {
                        matrix: expr_matrix_to_json(&s),
                    },
                    0,
                ),
                Err(err @ MatrixRationalError::PartialUndefined { .. }) => Err(Failure {
                    code: 3,
                    message: err.to_string(),
                }),
                Err(err) => Err(Failure::usage(err.to_string())),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((json, code)) => {
            println!("{json}");
            ExitCode::from(code as u8)
        }
        Err(failure) => {
            let report = ErrorReport {
                error: failure.message.clone(),
            };
            println!("{}", serde_json::to_string(&report).expect("plain strings serialize"));
            eprintln!("mprat: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
