//! JSON reports written to standard output. Field order is fixed by the
//! struct definitions, so identical runs print identical bytes.

use mprat_core::eval::{Evaluation, Undefined};
use mprat_core::field::Rational;
use mprat_core::identity::{ZeroReport, ZeroVerdict};
use mprat_core::json::{matrix_to_json, JsonMatrix, PointFile, RealizationFile};
use serde::Serialize;

#[derive(Serialize)]
pub struct UndefinedReport {
    pub path: Vec<usize>,
    pub subexpr: String,
}

impl From<&Undefined> for UndefinedReport {
    fn from(u: &Undefined) -> Self {
        UndefinedReport {
            path: u.path.clone(),
            subexpr: u.subexpr.to_string(),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum EvalReport {
    Defined { value: JsonMatrix },
    Undefined { undefined: UndefinedReport },
}

impl EvalReport {
    pub fn new(ev: &Evaluation<Rational>) -> (Self, i32) {
        match ev {
            Evaluation::Defined(m) => (EvalReport::Defined { value: matrix_to_json(m) }, 0),
            Evaluation::Undefined(u) => (EvalReport::Undefined { undefined: u.into() }, 3),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum VerdictReport {
    ExactZero,
    ExactNonzero,
    NonzeroWitness {
        level: usize,
        trial: u64,
        point: PointFile,
        value: JsonMatrix,
    },
    ProbablyZero { max_level: usize, trials: usize },
    NowhereDefined { undefined: Option<UndefinedReport> },
}

impl VerdictReport {
    pub fn new(report: &ZeroReport<Rational>) -> (Self, i32) {
        match &report.verdict {
            ZeroVerdict::ExactZero => (VerdictReport::ExactZero, 0),
            ZeroVerdict::ExactNonzero => (VerdictReport::ExactNonzero, 1),
            ZeroVerdict::NonzeroWitness {
                level,
                trial,
                point,
                value,
            } => (
                VerdictReport::NonzeroWitness {
                    level: *level,
                    trial: *trial,
                    point: PointFile::from_point(point),
                    value: matrix_to_json(value),
                },
                1,
            ),
            ZeroVerdict::ProbablyZeroUpTo {
                max_level,
                trials_per_level,
                ..
            } => (
                VerdictReport::ProbablyZero {
                    max_level: *max_level,
                    trials: *trials_per_level,
                },
                0,
            ),
            ZeroVerdict::NowhereDefined { undefined } => (
                VerdictReport::NowhereDefined {
                    undefined: undefined.as_ref().map(Into::into),
                },
                3,
            ),
        }
    }
}

#[derive(Serialize)]
pub struct DeltaReport {
    pub alphabet: String,
    pub delta: String,
}

#[derive(Serialize)]
pub struct RealizeReport {
    pub realization: RealizationFile,
    pub reduced_dim: usize,
}

#[derive(Serialize)]
pub struct DomainScanReport {
    pub first_defined_level: Option<usize>,
    pub witness: Option<PointFile>,
}

#[derive(Serialize)]
pub struct PivotReport {
    pub block_size: usize,
    pub row: usize,
    pub col: usize,
    pub entry: String,
    pub witness_level: usize,
    pub witness_trial: u64,
}

#[derive(Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum MatInvReport {
    Invertible {
        witness: PointFile,
        inverse: Vec<Vec<String>>,
        pivots: Vec<PivotReport>,
    },
    ProbablyNotInvertible { max_level: usize, trials: usize },
    NotInvertible { reason: String },
}

#[derive(Serialize)]
pub struct PartialReport {
    pub matrix: Vec<Vec<String>>,
}

#[derive(Serialize)]
pub struct ErrorReport {
    pub error: String,
}
