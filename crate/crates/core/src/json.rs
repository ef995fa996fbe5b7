//! JSON documents for points, bi-free points, realizations and expression
//! matrices. Exact rationals travel as strings `"p/q"`; integers are also
//! accepted on input.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{BfPoint, EvalError, MpPoint, NcPoint};
use crate::expr::{parse, Alphabet, ParseError};
use crate::field::{parse_rational, Rational};
use crate::matrix::Matrix;
use crate::matrix_rational::{ExprMatrix, MatrixRationalError};
use crate::realization::{PencilTerm, Realization, RealizationError};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("entry {0:?} is not an exact rational")]
    Entry(String),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Realization(#[from] RealizationError),
    #[error(transparent)]
    MatrixRational(#[from] MatrixRationalError),
}

/// A matrix entry as it may appear in an input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Int(i64),
    Text(String),
}

impl Entry {
    fn to_rational(&self) -> Result<Rational, JsonError> {
        match self {
            Entry::Int(v) => Ok(Rational::from_integer((*v).into())),
            Entry::Text(t) => parse_rational(t).ok_or_else(|| JsonError::Entry(t.clone())),
        }
    }
}

/// Row-major rows of entries.
pub type JsonMatrix = Vec<Vec<Entry>>;

pub fn matrix_to_json(m: &Matrix<Rational>) -> JsonMatrix {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|q| Entry::Text(q.to_string())).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<Matrix<Rational>, JsonError> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(Entry::to_rational).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(JsonError::Shape("empty matrix".into()));
    }
    Matrix::from_rows(rows).map_err(|e| JsonError::Shape(e.to_string()))
}

fn matrices_from_json(ms: &[JsonMatrix]) -> Result<Vec<Matrix<Rational>>, JsonError> {
    ms.iter().map(matrix_from_json).collect()
}

/// `{"dims": [n_1, …], "parts": [[matrix, …], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFile {
    pub dims: Vec<usize>,
    pub parts: Vec<Vec<JsonMatrix>>,
}

impl PointFile {
    pub fn from_text(text: &str) -> Result<Self, JsonError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_point(p: &MpPoint<Rational>) -> Self {
        PointFile {
            dims: p.dims().to_vec(),
            parts: p.parts().iter().map(|part| part.iter().map(matrix_to_json).collect()).collect(),
        }
    }

    pub fn to_point(&self) -> Result<MpPoint<Rational>, JsonError> {
        let parts = self
            .parts
            .iter()
            .map(|part| matrices_from_json(part))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MpPoint::new(self.dims.clone(), parts)?)
    }

    /// Reads the file as a point of one matrix size for every letter of
    /// `alphabet` (all `dims` must agree).
    pub fn to_nc_point(&self, alphabet: &Alphabet) -> Result<NcPoint<Rational>, JsonError> {
        let n = *self.dims.first().ok_or_else(|| JsonError::Shape("no parts".into()))?;
        if self.dims.iter().any(|&d| d != n) {
            return Err(JsonError::Shape("a base point needs one common matrix size".into()));
        }
        let mats = self
            .parts
            .iter()
            .map(|part| matrices_from_json(part))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        Ok(NcPoint::from_letters(alphabet, n, mats)?)
    }
}

/// `{"n": n, "a_prime": [...], "a_second": [...], "b_prime": [...], "b_second": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfPointFile {
    pub n: usize,
    pub a_prime: Vec<JsonMatrix>,
    pub a_second: Vec<JsonMatrix>,
    pub b_prime: Vec<JsonMatrix>,
    pub b_second: Vec<JsonMatrix>,
}

impl BfPointFile {
    pub fn from_text(text: &str) -> Result<Self, JsonError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_point(&self) -> Result<BfPoint<Rational>, JsonError> {
        Ok(BfPoint::new(
            self.n,
            matrices_from_json(&self.a_prime)?,
            matrices_from_json(&self.a_second)?,
            matrices_from_json(&self.b_prime)?,
            matrices_from_json(&self.b_second)?,
        )?)
    }
}

/// One coefficient pair of a serialized realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFile {
    pub letter: String,
    pub c: JsonMatrix,
    pub b: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationFile {
    pub alphabet: String,
    pub base_size: usize,
    pub dim: usize,
    pub rho: usize,
    pub base_point: Vec<JsonMatrix>,
    pub c: JsonMatrix,
    pub b: JsonMatrix,
    pub terms: Vec<TermFile>,
}

impl RealizationFile {
    pub fn from_realization(r: &Realization<Rational>) -> Self {
        let letters = r.alphabet().letters();
        RealizationFile {
            alphabet: r.alphabet().to_string(),
            base_size: r.base_size(),
            dim: r.dim(),
            rho: r.rho(),
            base_point: r.base_point().iter().map(matrix_to_json).collect(),
            c: matrix_to_json(r.c()),
            b: matrix_to_json(r.b()),
            terms: r
                .terms()
                .iter()
                .map(|t| TermFile {
                    letter: letters[t.letter].to_string(),
                    c: matrix_to_json(&t.c),
                    b: matrix_to_json(&t.b),
                })
                .collect(),
        }
    }

    pub fn to_realization(&self) -> Result<Realization<Rational>, JsonError> {
        let alphabet: Alphabet = self
            .alphabet
            .parse()
            .map_err(|e: crate::expr::ExprError| JsonError::Shape(e.to_string()))?;
        let letters: Vec<String> = alphabet.letters().iter().map(ToString::to_string).collect();
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let letter = letters
                    .iter()
                    .position(|l| *l == t.letter)
                    .ok_or_else(|| JsonError::Shape(format!("unknown letter {}", t.letter)))?;
                Ok(PencilTerm {
                    letter,
                    c: matrix_from_json(&t.c)?,
                    b: matrix_from_json(&t.b)?,
                })
            })
            .collect::<Result<Vec<_>, JsonError>>()?;
        Ok(Realization::new(
            alphabet,
            matrices_from_json(&self.base_point)?,
            matrix_from_json(&self.c)?,
            matrix_from_json(&self.b)?,
            terms,
        )?)
    }
}

/// An expression matrix as rows of expression strings.
pub fn expr_matrix_from_json(text: &str, alphabet: &Alphabet) -> Result<ExprMatrix, JsonError> {
    let rows: Vec<Vec<String>> = serde_json::from_str(text)?;
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|t| parse(t, alphabet)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExprMatrix::new(alphabet.clone(), rows)?)
}

pub fn expr_matrix_to_json(m: &ExprMatrix) -> Vec<Vec<String>> {
    m.rows()
        .iter()
        .map(|r| r.iter().map(ToString::to_string).collect())
        .collect()
}
