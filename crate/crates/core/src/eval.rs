//! Evaluation of rational expressions on matrix points.
//!
//! * nc-evaluation substitutes one `n x n` matrix per letter.
//! * mp-evaluation takes one tuple of `n_i x n_i` matrices per part and
//!   first embeds part `i` into slot `i` of `M_{n_1} ⊗ ... ⊗ M_{n_G}`, so
//!   letters of different parts commute by construction.
//! * bf-evaluation is the bi-free model on `g + 2` tensor slots.
//!
//! An evaluation is undefined when some inverse is applied to a singular
//! matrix; the first such inverse (in evaluation order) is reported along
//! with its path from the root.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::expr::{Alphabet, Expr, RationalExpr, Variable};
use crate::field::Field;
use crate::matrix::{tau_embed, Matrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no matrix assigned to {0}")]
    MissingVariable(Variable),
    #[error("point does not fit the alphabet: {0}")]
    PointShape(String),
    #[error("constant {0} has no image in the field")]
    ConstantNotRepresentable(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Where an evaluation broke down: an `Inverse` node whose argument
/// evaluated to a singular matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Undefined {
    /// Child indices from the root to the offending `Inverse` node.
    pub path: Vec<usize>,
    pub subexpr: RationalExpr,
}

/// Result of evaluating an expression at a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evaluation<F: Field> {
    Defined(Matrix<F>),
    Undefined(Undefined),
}

impl<F: Field> Evaluation<F> {
    pub fn defined(self) -> Option<Matrix<F>> {
        match self {
            Evaluation::Defined(m) => Some(m),
            Evaluation::Undefined(_) => None,
        }
    }

    pub fn as_defined(&self) -> Option<&Matrix<F>> {
        match self {
            Evaluation::Defined(m) => Some(m),
            Evaluation::Undefined(_) => None,
        }
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, Evaluation::Defined(_))
    }
}

/// One `n x n` matrix per letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcPoint<F: Field> {
    n: usize,
    mats: BTreeMap<Variable, Matrix<F>>,
}

impl<F: Field> NcPoint<F> {
    pub fn new(n: usize, mats: impl IntoIterator<Item = (Variable, Matrix<F>)>) -> Result<Self, EvalError> {
        let mats: BTreeMap<_, _> = mats.into_iter().collect();
        for (v, m) in &mats {
            if m.shape() != (n, n) {
                return Err(EvalError::PointShape(format!(
                    "{v} is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(NcPoint { n, mats })
    }

    /// Assigns `mats[k]` to the `k`-th letter of `alphabet` in flattened
    /// order.
    pub fn from_letters(alphabet: &Alphabet, n: usize, mats: Vec<Matrix<F>>) -> Result<Self, EvalError> {
        let letters = alphabet.letters();
        if letters.len() != mats.len() {
            return Err(EvalError::PointShape(format!(
                "{} matrices for {} letters",
                mats.len(),
                letters.len()
            )));
        }
        Self::new(n, letters.into_iter().zip(mats))
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, v: &Variable) -> Option<&Matrix<F>> {
        self.mats.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Matrix<F>)> {
        self.mats.iter()
    }

    pub fn insert(&mut self, v: Variable, m: Matrix<F>) -> Result<(), EvalError> {
        if m.shape() != (self.n, self.n) {
            return Err(EvalError::PointShape(format!("{v} has the wrong size")));
        }
        self.mats.insert(v, m);
        Ok(())
    }

    /// Matrices in the flattened letter order of `alphabet`.
    pub fn letters(&self, alphabet: &Alphabet) -> Result<Vec<Matrix<F>>, EvalError> {
        alphabet
            .letters()
            .iter()
            .map(|v| self.get(v).cloned().ok_or(EvalError::MissingVariable(*v)))
            .collect()
    }
}

/// A point of the multipartite matrix space: part `i` holds `g_i` matrices
/// of size `n_i`. Primed copies of a part may be attached for evaluating
/// difference-differential expressions; they live in the same tensor slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpPoint<F: Field> {
    dims: Vec<usize>,
    parts: Vec<Vec<Matrix<F>>>,
    primed: BTreeMap<usize, Vec<Matrix<F>>>,
}

impl<F: Field> MpPoint<F> {
    pub fn new(dims: Vec<usize>, parts: Vec<Vec<Matrix<F>>>) -> Result<Self, EvalError> {
        if dims.len() != parts.len() {
            return Err(EvalError::PointShape(format!(
                "{} dims for {} parts",
                dims.len(),
                parts.len()
            )));
        }
        for (i, (part, &n)) in parts.iter().zip(&dims).enumerate() {
            check_square_tuple(part, n, i + 1)?;
        }
        Ok(MpPoint {
            dims,
            parts,
            primed: BTreeMap::new(),
        })
    }

    /// Attaches the primed copy of `part` (1-based).
    pub fn with_primed(mut self, part: usize, mats: Vec<Matrix<F>>) -> Result<Self, EvalError> {
        if part == 0 || part > self.dims.len() {
            return Err(EvalError::PointShape(format!("no part {part}")));
        }
        check_square_tuple(&mats, self.dims[part - 1], part)?;
        self.primed.insert(part, mats);
        Ok(self)
    }

    /// Reads part `i` of a uniform nc point as the `i`-th tuple.
    pub fn from_nc(alphabet: &Alphabet, b: &NcPoint<F>) -> Result<Self, EvalError> {
        let n = b.size();
        let parts = (1..=alphabet.parts())
            .map(|p| {
                (1..=alphabet.size(p))
                    .map(|j| {
                        let v = Variable::new(p, j);
                        b.get(&v).cloned().ok_or(EvalError::MissingVariable(v))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(vec![n; alphabet.parts()], parts)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parts(&self) -> &[Vec<Matrix<F>>] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &[Matrix<F>] {
        &self.parts[i - 1]
    }

    pub fn primed_part(&self, i: usize) -> Option<&[Matrix<F>]> {
        self.primed.get(&i).map(Vec::as_slice)
    }

    /// Size `n_1 ⋯ n_G` of the evaluation.
    pub fn total_size(&self) -> usize {
        self.dims.iter().product()
    }

    /// The same point with part `i` replaced.
    pub fn replace_part(&self, i: usize, mats: Vec<Matrix<F>>) -> Result<Self, EvalError> {
        let mut dims = self.dims.clone();
        let n = mats.first().map_or(dims[i - 1], Matrix::rows);
        dims[i - 1] = n;
        let mut parts = self.parts.clone();
        parts[i - 1] = mats;
        MpPoint::new(dims, parts)
    }

    /// Checks the number of matrices per part against `alphabet`.
    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<(), EvalError> {
        if alphabet.parts() != self.parts.len() {
            return Err(EvalError::PointShape(format!(
                "alphabet has {} parts, point has {}",
                alphabet.parts(),
                self.parts.len()
            )));
        }
        for (i, part) in self.parts.iter().enumerate() {
            if part.len() != alphabet.size(i + 1) {
                return Err(EvalError::PointShape(format!(
                    "part {} has {} matrices, alphabet expects {}",
                    i + 1,
                    part.len(),
                    alphabet.size(i + 1)
                )));
            }
        }
        Ok(())
    }
}

fn check_square_tuple<F: Field>(mats: &[Matrix<F>], n: usize, part: usize) -> Result<(), EvalError> {
    for (j, m) in mats.iter().enumerate() {
        if m.shape() != (n, n) {
            return Err(EvalError::PointShape(format!(
                "part {part} letter {} is {}x{}, expected {n}x{n}",
                j + 1,
                m.rows(),
                m.cols()
            )));
        }
    }
    Ok(())
}

/// Embeds every letter of part `i` by `τ_i`; the result has size
/// `n_1 ⋯ n_G`.
pub fn tau_point<F: Field>(a: &MpPoint<F>) -> Result<NcPoint<F>, EvalError> {
    let mut mats = BTreeMap::new();
    for (i, part) in a.parts.iter().enumerate() {
        for (j, m) in part.iter().enumerate() {
            mats.insert(Variable::new(i + 1, j + 1), tau_embed(i + 1, m, &a.dims)?);
        }
    }
    for (&i, part) in &a.primed {
        for (j, m) in part.iter().enumerate() {
            mats.insert(Variable::primed(i, j + 1), tau_embed(i, m, &a.dims)?);
        }
    }
    Ok(NcPoint {
        n: a.total_size(),
        mats,
    })
}

/// Evaluates `e` with each letter replaced by its matrix in `p`.
pub fn nc_evaluate<F: Field>(e: &RationalExpr, p: &NcPoint<F>) -> Result<Evaluation<F>, EvalError> {
    let mut ev = Evaluator {
        point: p,
        memo: HashMap::new(),
        path: Vec::new(),
    };
    Ok(match ev.eval(e)? {
        Ok(m) => Evaluation::Defined(m),
        Err(u) => Evaluation::Undefined(u),
    })
}

/// `e(τ(a))`, an element of `M_{n_1 ⋯ n_G}`.
pub fn mp_evaluate<F: Field>(e: &RationalExpr, a: &MpPoint<F>) -> Result<Evaluation<F>, EvalError> {
    nc_evaluate(e, &tau_point(a)?)
}

struct Evaluator<'a, F: Field> {
    point: &'a NcPoint<F>,
    // Keyed by node address; the root keeps every node alive for the call.
    memo: HashMap<usize, Result<Matrix<F>, Undefined>>,
    path: Vec<usize>,
}

impl<F: Field> Evaluator<'_, F> {
    fn eval(&mut self, e: &RationalExpr) -> Result<Result<Matrix<F>, Undefined>, EvalError> {
        if let Some(hit) = self.memo.get(&e.node_id()) {
            return Ok(hit.clone());
        }
        let n = self.point.n;
        let value = match e.node() {
            Expr::Const(q) => {
                let c = F::from_rational(q).ok_or_else(|| EvalError::ConstantNotRepresentable(q.to_string()))?;
                Ok(Matrix::scalar(n, c))
            }
            Expr::Var(v) => Ok(self.point.get(v).cloned().ok_or(EvalError::MissingVariable(*v))?),
            Expr::Sum(children) => self.fold(children, |acc, m| acc.add(&m))?,
            Expr::Product(children) => self.fold(children, |acc, m| acc.mul(&m))?,
            Expr::Inverse(child) => {
                self.path.push(0);
                let inner = self.eval(child)?;
                self.path.pop();
                match inner {
                    Ok(m) => match m.inverse()? {
                        Some(inv) => Ok(inv),
                        None => Err(Undefined {
                            path: self.path.clone(),
                            subexpr: e.clone(),
                        }),
                    },
                    Err(u) => Err(u),
                }
            }
        };
        self.memo.insert(e.node_id(), value.clone());
        Ok(value)
    }

    fn fold(
        &mut self,
        children: &[RationalExpr],
        op: impl Fn(&Matrix<F>, Matrix<F>) -> Result<Matrix<F>, MatrixError>,
    ) -> Result<Result<Matrix<F>, Undefined>, EvalError> {
        let mut acc: Option<Matrix<F>> = None;
        for (i, c) in children.iter().enumerate() {
            self.path.push(i);
            let v = self.eval(c)?;
            self.path.pop();
            let m = match v {
                Ok(m) => m,
                Err(u) => return Ok(Err(u)),
            };
            acc = Some(match acc {
                None => m,
                Some(a) => op(&a, m)?,
            });
        }
        Ok(Ok(acc.expect("sums and products have children")))
    }
}

/// Point of the bi-free model: for each `i ≤ g` the matrices `a'_i, a''_i,
/// b'_i, b''_i`, all `n x n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfPoint<F: Field> {
    n: usize,
    a_prime: Vec<Matrix<F>>,
    a_second: Vec<Matrix<F>>,
    b_prime: Vec<Matrix<F>>,
    b_second: Vec<Matrix<F>>,
}

impl<F: Field> BfPoint<F> {
    pub fn new(
        n: usize,
        a_prime: Vec<Matrix<F>>,
        a_second: Vec<Matrix<F>>,
        b_prime: Vec<Matrix<F>>,
        b_second: Vec<Matrix<F>>,
    ) -> Result<Self, EvalError> {
        let g = a_prime.len();
        if [a_second.len(), b_prime.len(), b_second.len()].iter().any(|&l| l != g) || g == 0 {
            return Err(EvalError::PointShape("bf point needs g matrices in each of the four families".into()));
        }
        for family in [&a_prime, &a_second, &b_prime, &b_second] {
            check_square_tuple(family, n, 1)?;
        }
        Ok(BfPoint {
            n,
            a_prime,
            a_second,
            b_prime,
            b_second,
        })
    }

    pub fn g(&self) -> usize {
        self.a_prime.len()
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn a_prime(&self) -> &[Matrix<F>] {
        &self.a_prime
    }
    pub fn a_second(&self) -> &[Matrix<F>] {
        &self.a_second
    }
    pub fn b_prime(&self) -> &[Matrix<F>] {
        &self.b_prime
    }
    pub fn b_second(&self) -> &[Matrix<F>] {
        &self.b_second
    }

    /// The nc point of size `n^{g+2}` used by [`bf_evaluate`]: `X_i` (written
    /// `X1_i`) goes to `a'_i ⊗ (a''_i in middle slot i) ⊗ I` and `Y_i`
    /// (written `X2_i`) to `I ⊗ (b''_i in middle slot i) ⊗ b'_i`.
    pub fn to_nc_point(&self) -> Result<NcPoint<F>, EvalError> {
        let g = self.g();
        let dims = vec![self.n; g + 2];
        let mut mats = BTreeMap::new();
        for i in 0..g {
            let x = tau_embed(1, &self.a_prime[i], &dims)?.mul(&tau_embed(i + 2, &self.a_second[i], &dims)?)?;
            let y = tau_embed(i + 2, &self.b_second[i], &dims)?.mul(&tau_embed(g + 2, &self.b_prime[i], &dims)?)?;
            mats.insert(Variable::new(1, i + 1), x);
            mats.insert(Variable::new(2, i + 1), y);
        }
        Ok(NcPoint {
            n: dims.iter().product(),
            mats,
        })
    }
}

/// The alphabet of bi-free expressions: part 1 holds `X_1..X_g`, part 2
/// holds `Y_1..Y_g`.
pub fn bf_alphabet(g: usize) -> Alphabet {
    Alphabet::new(vec![g, g]).expect("g >= 1")
}

/// bf-evaluation of an expression over `{X_1..X_g, Y_1..Y_g}`.
pub fn bf_evaluate<F: Field>(e: &RationalExpr, p: &BfPoint<F>) -> Result<Evaluation<F>, EvalError> {
    nc_evaluate(e, &p.to_nc_point()?)
}

/// Linear map `M_n^{⊗G} → M_n` sending `c_1 ⊗ ⋯ ⊗ c_G` to the product
/// `c_1 ⋯ c_G`.
pub fn ell_collapse<F: Field>(m: &Matrix<F>, n: usize, g: usize) -> Result<Matrix<F>, MatrixError> {
    let size = n.checked_pow(g as u32).unwrap_or(usize::MAX);
    if !m.is_square() || m.rows() != size || g == 0 {
        return Err(MatrixError::Dimension(format!(
            "{}x{} is not of size {n}^{g}",
            m.rows(),
            m.cols()
        )));
    }
    // E_{i1 j1} ⋯ E_{iG jG} = E_{i1 jG} when j_t = i_{t+1} for all t, else 0.
    // Writing the row digits as (s, chain) and the column digits as
    // (chain, t), the coefficient of E_{st} sums over all chains.
    let inner = n.pow(g as u32 - 1);
    let mut out = Matrix::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            let mut acc = F::zero();
            for chain in 0..inner {
                acc = acc.add(&m[(s * inner + chain, chain * n + t)]);
            }
            out[(s, t)] = acc;
        }
    }
    Ok(out)
}

/// True when letters of different parts commute pairwise.
pub fn check_multipartite_tuple<F: Field>(p: &NcPoint<F>) -> bool {
    let vars: Vec<(&Variable, &Matrix<F>)> = p.iter().collect();
    for (i, (v1, m1)) in vars.iter().enumerate() {
        for (v2, m2) in &vars[i + 1..] {
            if v1.part == v2.part {
                continue;
            }
            let lhs = m1.mul(m2).expect("uniform size");
            let rhs = m2.mul(m1).expect("uniform size");
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}
