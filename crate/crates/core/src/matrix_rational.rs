//! Square matrices of rational expressions: invertibility by sampling,
//! symbolic inversion through Schur complements, and partial evaluation of
//! an expression at a fixed tuple for one part.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::eval::{mp_evaluate, EvalError, Evaluation, MpPoint};
use crate::expr::{Alphabet, Expr, RationalExpr};
use crate::field::{Field, Rational};
use crate::identity::{is_zero, sample_point, square_dims, IdentityError, TestConfig, ZeroVerdict};
use crate::matrix::{commutation_matrix, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixRationalError {
    #[error("matrix of expressions is not invertible (no certified pivot in a {size}x{size} block)")]
    NotInvertible { size: usize },
    #[error("partial evaluation undefined: the matrix for {subexpr} is not invertible")]
    PartialUndefined { subexpr: RationalExpr },
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A `d x d` matrix of expressions over one alphabet, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprMatrix {
    alphabet: Alphabet,
    d: usize,
    entries: Vec<RationalExpr>,
}

impl ExprMatrix {
    pub fn new(alphabet: Alphabet, rows: Vec<Vec<RationalExpr>>) -> Result<Self, MatrixRationalError> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(MatrixRationalError::Shape("expression matrices must be square and nonempty".into()));
        }
        let entries: Vec<RationalExpr> = rows.into_iter().flatten().collect();
        for e in &entries {
            e.validate(&alphabet)
                .map_err(|err| MatrixRationalError::Shape(err.to_string()))?;
        }
        Ok(ExprMatrix { alphabet, d, entries })
    }

    fn from_fn(alphabet: &Alphabet, d: usize, mut f: impl FnMut(usize, usize) -> RationalExpr) -> Self {
        let entries = (0..d * d).map(|k| f(k / d, k % d)).collect();
        ExprMatrix {
            alphabet: alphabet.clone(),
            d,
            entries,
        }
    }

    /// `e` on the diagonal, zero elsewhere.
    pub fn diagonal(alphabet: &Alphabet, d: usize, e: &RationalExpr) -> Self {
        Self::from_fn(alphabet, d, |i, j| if i == j { e.clone() } else { RationalExpr::zero() })
    }

    pub fn identity(alphabet: &Alphabet, d: usize) -> Self {
        Self::diagonal(alphabet, d, &RationalExpr::one())
    }

    pub fn constant(alphabet: &Alphabet, a: &Matrix<Rational>) -> Result<Self, MatrixRationalError> {
        if !a.is_square() || a.rows() == 0 {
            return Err(MatrixRationalError::Shape("constant block must be square".into()));
        }
        Ok(Self::from_fn(alphabet, a.rows(), |i, j| RationalExpr::constant(a[(i, j)].clone())))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalExpr {
        &self.entries[i * self.d + j]
    }

    pub fn rows(&self) -> Vec<Vec<RationalExpr>> {
        self.entries.chunks(self.d).map(<[RationalExpr]>::to_vec).collect()
    }

    /// Sum of the tree sizes of all entries.
    pub fn total_size(&self) -> usize {
        self.entries.iter().map(RationalExpr::tree_size).sum()
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, MatrixRationalError> {
        self.check_same(rhs)?;
        Ok(Self::from_fn(&self.alphabet, self.d, |i, j| add(self.get(i, j), rhs.get(i, j))))
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self, MatrixRationalError> {
        self.check_same(rhs)?;
        let d = self.d;
        Ok(Self::from_fn(&self.alphabet, d, |i, j| {
            sum((0..d).map(|t| mul(self.get(i, t), rhs.get(t, j))))
        }))
    }

    fn check_same(&self, rhs: &Self) -> Result<(), MatrixRationalError> {
        if self.d != rhs.d {
            return Err(MatrixRationalError::Shape(format!("{0}x{0} against {1}x{1}", self.d, rhs.d)));
        }
        Ok(())
    }

    fn all_constant(&self) -> Option<Matrix<Rational>> {
        let data = self
            .entries
            .iter()
            .map(|e| e.as_const().cloned())
            .collect::<Option<Vec<_>>>()?;
        Matrix::from_vec(self.d, self.d, data).ok()
    }

    /// The `dN x dN` block matrix of entry values at `a`, or the first
    /// undefined entry.
    pub fn evaluate<F: Field>(&self, a: &MpPoint<F>) -> Result<Evaluation<F>, EvalError> {
        let mut blocks = Vec::with_capacity(self.d);
        for i in 0..self.d {
            let mut row = Vec::with_capacity(self.d);
            for j in 0..self.d {
                match mp_evaluate(self.get(i, j), a)? {
                    Evaluation::Defined(v) => row.push(v),
                    undefined => return Ok(undefined),
                }
            }
            blocks.push(row);
        }
        Ok(Evaluation::Defined(Matrix::from_blocks(&blocks)?))
    }
}

impl fmt::Display for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.entries.chunks(self.d) {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

fn add(a: &RationalExpr, b: &RationalExpr) -> RationalExpr {
    sum([a.clone(), b.clone()])
}

/// Sum with literal zeros dropped and constants folded.
fn sum(terms: impl IntoIterator<Item = RationalExpr>) -> RationalExpr {
    let mut constant = <Rational as Field>::zero();
    let mut rest = Vec::new();
    for t in terms {
        match t.as_const() {
            Some(q) => constant = Field::add(&constant, q),
            None => rest.push(t),
        }
    }
    if !Field::is_zero(&constant) || rest.is_empty() {
        rest.push(RationalExpr::constant(constant));
    }
    RationalExpr::sum(rest)
}

/// Product with literal ones dropped, zero absorbing and constant pairs
/// folded.
fn mul(a: &RationalExpr, b: &RationalExpr) -> RationalExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => RationalExpr::constant(Field::mul(x, y)),
        _ if a.is_literal_zero() || b.is_literal_zero() => RationalExpr::zero(),
        _ if a.is_literal_one() => b.clone(),
        _ if b.is_literal_one() => a.clone(),
        _ => RationalExpr::product([a.clone(), b.clone()]),
    }
}

fn neg(a: &RationalExpr) -> RationalExpr {
    if a.is_literal_zero() {
        a.clone()
    } else {
        a.neg()
    }
}

fn inv(a: &RationalExpr) -> RationalExpr {
    match a.as_const().and_then(Field::inv) {
        Some(q) => RationalExpr::constant(q),
        None => a.inv(),
    }
}

/// Outcome of [`matrix_invertible`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Invertibility {
    /// All entries are defined at `point` and the assembled matrix has
    /// nonzero determinant there.
    InvertibleWitness { level: usize, trial: u64, point: MpPoint<Rational> },
    ProbablyNotInvertible { max_level: usize, trials: usize },
}

impl Invertibility {
    pub fn is_invertible(&self) -> bool {
        matches!(self, Invertibility::InvertibleWitness { .. })
    }
}

/// Samples square levels `1..=cfg.max_level` for a point where `M` is
/// defined with nonzero determinant.
pub fn matrix_invertible(m: &ExprMatrix, cfg: &TestConfig) -> Result<Invertibility, MatrixRationalError> {
    cfg.validate()?;
    for level in 1..=cfg.max_level {
        let dims = square_dims(&m.alphabet, level);
        for trial in 0..cfg.trials_per_level as u64 {
            let point = sample_point::<Rational>(&m.alphabet, &dims, cfg, trial);
            if let Evaluation::Defined(v) = m.evaluate(&point)? {
                if !Field::is_zero(&v.det().map_err(EvalError::from)?) {
                    return Ok(Invertibility::InvertibleWitness { level, trial, point });
                }
            }
        }
    }
    Ok(Invertibility::ProbablyNotInvertible {
        max_level: cfg.max_level,
        trials: cfg.trials_per_level,
    })
}

/// A pivot chosen during symbolic inversion, with the certificate that it
/// is a nonzero function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PivotRecord {
    /// Size of the block being inverted.
    pub block_size: usize,
    pub row: usize,
    pub col: usize,
    pub entry: RationalExpr,
    pub witness_level: usize,
    pub witness_trial: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseConstruction {
    pub inverse: ExprMatrix,
    pub pivots: Vec<PivotRecord>,
}

/// Symbolic inverse by recursive Schur complements.
pub fn matrix_inverse_expr(m: &ExprMatrix, cfg: &TestConfig) -> Result<InverseConstruction, MatrixRationalError> {
    let mut pivots = Vec::new();
    let inverse = invert(m, cfg, &mut pivots)?;
    Ok(InverseConstruction { inverse, pivots })
}

fn invert(m: &ExprMatrix, cfg: &TestConfig, log: &mut Vec<PivotRecord>) -> Result<ExprMatrix, MatrixRationalError> {
    let d = m.d;
    if let Some(a) = m.all_constant() {
        let a_inv = a
            .inverse()
            .map_err(EvalError::from)?
            .ok_or(MatrixRationalError::NotInvertible { size: d })?;
        return ExprMatrix::constant(&m.alphabet, &a_inv);
    }
    let (pi, pj) = find_pivot(m, cfg, log)?.ok_or(MatrixRationalError::NotInvertible { size: d })?;
    // Move the pivot to (0, 0): rows 0 and pi swapped, columns 0 and pj.
    let swap = |k: usize, p: usize| if k == 0 { p } else if k == p { 0 } else { k };
    let mp = ExprMatrix::from_fn(&m.alphabet, d, |i, j| m.get(swap(i, pi), swap(j, pj)).clone());
    let inv_p = invert_pivoted(&mp, cfg, log)?;
    // M⁻¹ = Q M'⁻¹ P: rows 0 and pj swapped, columns 0 and pi.
    Ok(ExprMatrix::from_fn(&m.alphabet, d, |i, j| {
        inv_p.get(swap(i, pj), swap(j, pi)).clone()
    }))
}

/// Row-major scan for the first entry with a nonzero witness.
fn find_pivot(
    m: &ExprMatrix,
    cfg: &TestConfig,
    log: &mut Vec<PivotRecord>,
) -> Result<Option<(usize, usize)>, MatrixRationalError> {
    for i in 0..m.d {
        for j in 0..m.d {
            let e = m.get(i, j);
            if e.is_literal_zero() {
                continue;
            }
            if let ZeroVerdict::NonzeroWitness { level, trial, .. } = is_zero(e, &m.alphabet, cfg)?.verdict {
                log.push(PivotRecord {
                    block_size: m.d,
                    row: i,
                    col: j,
                    entry: e.clone(),
                    witness_level: level,
                    witness_trial: trial,
                });
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// Inverse of `[[a, b], [c, D]]` with `a` certified nonzero:
/// `S = D - c a⁻¹ b` and
/// `[[a⁻¹ + a⁻¹ b S⁻¹ c a⁻¹, -a⁻¹ b S⁻¹], [-S⁻¹ c a⁻¹, S⁻¹]]`.
fn invert_pivoted(m: &ExprMatrix, cfg: &TestConfig, log: &mut Vec<PivotRecord>) -> Result<ExprMatrix, MatrixRationalError> {
    let d = m.d;
    let ai = inv(m.get(0, 0));
    if d == 1 {
        return Ok(ExprMatrix::from_fn(&m.alphabet, 1, |_, _| ai.clone()));
    }
    let k = d - 1;
    let b: Vec<&RationalExpr> = (1..d).map(|j| m.get(0, j)).collect();
    let c: Vec<&RationalExpr> = (1..d).map(|i| m.get(i, 0)).collect();
    let ai_b: Vec<RationalExpr> = b.iter().map(|x| mul(&ai, x)).collect();
    let schur = ExprMatrix::from_fn(&m.alphabet, k, |i, j| {
        let correction = mul(c[i], &ai_b[j]);
        if correction.is_literal_zero() {
            m.get(i + 1, j + 1).clone()
        } else {
            add(m.get(i + 1, j + 1), &neg(&correction))
        }
    });
    let si = invert(&schur, cfg, log)?;
    // a⁻¹ b S⁻¹ (a row) and S⁻¹ c a⁻¹ (a column)
    let top_right: Vec<RationalExpr> = (0..k)
        .map(|j| sum((0..k).map(|t| mul(&ai_b[t], si.get(t, j)))))
        .collect();
    let left: Vec<RationalExpr> = (0..k)
        .map(|i| mul(&sum((0..k).map(|t| mul(si.get(i, t), c[t]))), &ai))
        .collect();
    let corner = sum((0..k).map(|t| mul(&top_right[t], c[t])));
    let top_left = add(&ai, &mul(&corner, &ai));
    Ok(ExprMatrix::from_fn(&m.alphabet, d, |i, j| match (i, j) {
        (0, 0) => top_left.clone(),
        (0, j) => neg(&top_right[j - 1]),
        (i, 0) => neg(&left[i - 1]),
        (i, j) => si.get(i - 1, j - 1).clone(),
    }))
}

/// Replaces the letters of `part` by the constant `d x d` matrices
/// `a[j]`, producing a matrix over the remaining letters.
pub fn partial_evaluate(
    e: &RationalExpr,
    alphabet: &Alphabet,
    part: usize,
    a: &[Matrix<Rational>],
    cfg: &TestConfig,
) -> Result<ExprMatrix, MatrixRationalError> {
    if part == 0 || part > alphabet.parts() || a.len() != alphabet.size(part) {
        return Err(MatrixRationalError::Shape(format!("part {part} needs {} matrices", alphabet.size(part))));
    }
    let d = a[0].rows();
    if d == 0 || a.iter().any(|x| x.shape() != (d, d)) {
        return Err(MatrixRationalError::Shape("the fixed tuple must be square of one size".into()));
    }
    e.validate(alphabet).map_err(|err| MatrixRationalError::Shape(err.to_string()))?;
    let mut p = Partial {
        alphabet,
        part,
        a,
        d,
        cfg,
        memo: HashMap::new(),
    };
    p.eval(e)
}

struct Partial<'a> {
    alphabet: &'a Alphabet,
    part: usize,
    a: &'a [Matrix<Rational>],
    d: usize,
    cfg: &'a TestConfig,
    memo: HashMap<usize, ExprMatrix>,
}

impl Partial<'_> {
    fn eval(&mut self, e: &RationalExpr) -> Result<ExprMatrix, MatrixRationalError> {
        if let Some(hit) = self.memo.get(&e.node_id()) {
            return Ok(hit.clone());
        }
        let out = match e.node() {
            Expr::Const(_) => ExprMatrix::diagonal(self.alphabet, self.d, e),
            Expr::Var(v) if v.part == self.part && !v.primed => ExprMatrix::constant(self.alphabet, &self.a[v.index - 1])?,
            Expr::Var(_) => ExprMatrix::diagonal(self.alphabet, self.d, e),
            Expr::Sum(children) => {
                let mut acc = self.eval(&children[0])?;
                for c in &children[1..] {
                    acc = acc.add(&self.eval(c)?)?;
                }
                acc
            }
            Expr::Product(children) => {
                let mut acc = self.eval(&children[0])?;
                for c in &children[1..] {
                    acc = acc.mul(&self.eval(c)?)?;
                }
                acc
            }
            Expr::Inverse(inner) => {
                let m = self.eval(inner)?;
                match matrix_inverse_expr(&m, self.cfg) {
                    Ok(c) => c.inverse,
                    Err(MatrixRationalError::NotInvertible { .. }) => {
                        return Err(MatrixRationalError::PartialUndefined { subexpr: e.clone() })
                    }
                    Err(other) => return Err(other),
                }
            }
        };
        self.memo.insert(e.node_id(), out.clone());
        Ok(out)
    }
}

/// Compares `mp_evaluate(e, a)` with the partial evaluation `s` at the
/// point `a` whose `part` holds the fixed tuple used to build `s`: the two
/// agree up to the shuffle that moves that tensor factor to the front.
/// `None` when either side is undefined at `a`.
pub fn partial_agreement(
    e: &RationalExpr,
    part: usize,
    s: &ExprMatrix,
    a: &MpPoint<Rational>,
) -> Result<Option<bool>, MatrixRationalError> {
    let Evaluation::Defined(full) = mp_evaluate(e, a)? else {
        return Ok(None);
    };
    // `s` does not mention `part`, so a 1x1 slot there leaves its value alone
    let mut dims = a.dims().to_vec();
    dims[part - 1] = 1;
    let mut parts = a.parts().to_vec();
    parts[part - 1] = vec![Matrix::identity(1); parts[part - 1].len()];
    let rest = MpPoint::new(dims, parts)?;
    let Evaluation::Defined(blocks) = s.evaluate(&rest)? else {
        return Ok(None);
    };
    let g = a.dims().len();
    let pi: Vec<usize> = std::iter::once(part).chain((1..=g).filter(|&t| t != part)).collect();
    let k: Matrix<Rational> = commutation_matrix(&pi, a.dims()).map_err(EvalError::from)?;
    let shuffled = k.transpose().mul(&blocks).and_then(|x| x.mul(&k)).map_err(EvalError::from)?;
    Ok(Some(shuffled == full))
}
