//! Partial difference-differential operators.
//!
//! `delta(i, j, r)` is defined by structural recursion:
//!
//! ```text
//! Δ(α)      = 0
//! Δ(X)      = 1 if X is the j-th letter of part i, else 0
//! Δ(r + s)  = Δ(r) + Δ(s)
//! Δ(r s)    = r' Δ(s) + Δ(r) s
//! Δ(r⁻¹)    = -r'⁻¹ Δ(r) r⁻¹
//! ```
//!
//! where `r'` renames the letters of part `i` to their primed copies. The
//! result is checked against evaluation on the block upper-triangular point
//! `[[a'⊗I, v I], [0, I⊗a]]`, whose value carries `r` on the diagonal and
//! `v·Δ(r)` in the corner.

use std::collections::HashMap;

use num_traits::Zero;
use thiserror::Error;

use crate::eval::{mp_evaluate, EvalError, Evaluation, MpPoint, Undefined};
use crate::expr::{Alphabet, Expr, RationalExpr};
use crate::field::{Field, Rational};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalculusError {
    #[error("no letter X{part}_{index} in the alphabet")]
    IndexOutOfRange { part: usize, index: usize },
    #[error("direction has {got} entries, part has {want} letters")]
    Direction { got: usize, want: usize },
    #[error("evaluation undefined at {}", .0.subexpr)]
    Undefined(Undefined),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `Δ^{(part)}_{index}(e)`, an expression over the alphabet extended by the
/// primed copy of `part`.
pub fn delta(alphabet: &Alphabet, part: usize, index: usize, e: &RationalExpr) -> Result<RationalExpr, CalculusError> {
    if part == 0 || part > alphabet.parts() || index == 0 || index > alphabet.size(part) {
        return Err(CalculusError::IndexOutOfRange { part, index });
    }
    let mut d = Delta::new(part, index);
    Ok(d.delta(e))
}

/// `v·Δ^{(part)}(e) = Σ_j v_j Δ^{(part)}_j(e)`.
pub fn directional_delta(
    alphabet: &Alphabet,
    part: usize,
    v: &[Rational],
    e: &RationalExpr,
) -> Result<RationalExpr, CalculusError> {
    if part == 0 || part > alphabet.parts() {
        return Err(CalculusError::IndexOutOfRange { part, index: 1 });
    }
    if v.len() != alphabet.size(part) {
        return Err(CalculusError::Direction {
            got: v.len(),
            want: alphabet.size(part),
        });
    }
    let mut terms = Vec::new();
    for (j, c) in v.iter().enumerate() {
        if Zero::is_zero(c) {
            continue;
        }
        let d = delta(alphabet, part, j + 1, e)?;
        if d.is_literal_zero() {
            continue;
        }
        terms.push(product([RationalExpr::constant(c.clone()), d]));
    }
    Ok(sum(terms))
}

struct Delta {
    part: usize,
    index: usize,
    derived: HashMap<usize, RationalExpr>,
    primed: HashMap<usize, RationalExpr>,
}

impl Delta {
    fn new(part: usize, index: usize) -> Self {
        Delta {
            part,
            index,
            derived: HashMap::new(),
            primed: HashMap::new(),
        }
    }

    /// `e` with part `self.part` primed; shared subtrees stay shared.
    fn prime(&mut self, e: &RationalExpr) -> RationalExpr {
        if let Some(hit) = self.primed.get(&e.node_id()) {
            return hit.clone();
        }
        let out = match e.node() {
            Expr::Const(_) => e.clone(),
            Expr::Var(v) if v.part == self.part && !v.primed => {
                RationalExpr::var(crate::expr::Variable::primed(v.part, v.index))
            }
            Expr::Var(_) => e.clone(),
            Expr::Sum(c) => RationalExpr::sum(c.iter().map(|x| self.prime(x)).collect::<Vec<_>>()),
            Expr::Product(c) => RationalExpr::product(c.iter().map(|x| self.prime(x)).collect::<Vec<_>>()),
            Expr::Inverse(c) => self.prime(c).inv(),
        };
        self.primed.insert(e.node_id(), out.clone());
        out
    }

    fn delta(&mut self, e: &RationalExpr) -> RationalExpr {
        if let Some(hit) = self.derived.get(&e.node_id()) {
            return hit.clone();
        }
        let out = match e.node() {
            Expr::Const(_) => RationalExpr::zero(),
            Expr::Var(v) => {
                if v.part == self.part && v.index == self.index && !v.primed {
                    RationalExpr::one()
                } else {
                    RationalExpr::zero()
                }
            }
            Expr::Sum(c) => {
                let terms: Vec<_> = c.iter().map(|x| self.delta(x)).collect();
                sum(terms)
            }
            Expr::Product(c) => {
                // Δ(f_1 ⋯ f_k) = Σ_t f_1' ⋯ f_{t-1}' Δ(f_t) f_{t+1} ⋯ f_k, listed from the
                // last factor back, as repeated use of the binary rule orders them.
                let mut terms = Vec::new();
                for t in (0..c.len()).rev() {
                    let d = self.delta(&c[t]);
                    if d.is_literal_zero() {
                        continue;
                    }
                    let mut factors: Vec<RationalExpr> = c[..t].iter().map(|x| self.prime(x)).collect();
                    factors.push(d);
                    factors.extend(c[t + 1..].iter().cloned());
                    terms.push(product(factors));
                }
                sum(terms)
            }
            Expr::Inverse(r) => {
                let d = self.delta(r);
                if d.is_literal_zero() {
                    RationalExpr::zero()
                } else {
                    let primed_inv = self.prime(e);
                    product([RationalExpr::int(-1), primed_inv, d, e.clone()])
                }
            }
        };
        self.derived.insert(e.node_id(), out.clone());
        out
    }
}

/// Sum that drops literal zeros.
fn sum(terms: impl IntoIterator<Item = RationalExpr>) -> RationalExpr {
    RationalExpr::sum(terms.into_iter().filter(|t| !t.is_literal_zero()).collect::<Vec<_>>())
}

/// Product that drops literal ones and collapses to zero on a literal zero.
fn product(factors: impl IntoIterator<Item = RationalExpr>) -> RationalExpr {
    let mut kept = Vec::new();
    for f in factors {
        if f.is_literal_zero() {
            return RationalExpr::zero();
        }
        if !f.is_literal_one() {
            kept.push(f);
        }
    }
    RationalExpr::product(kept)
}

/// The evaluation point of the fundamental formula: part 1 holds
/// `[[a'_j ⊗ I_m, v_j I_{m'm}], [0, I_{m'} ⊗ a_j]]` (size `2 m' m`), the
/// other parts are `rest`.
pub fn fund_block_point<F: Field>(
    a_prime: &[Matrix<F>],
    a: &[Matrix<F>],
    v: &[F],
    rest: &[Vec<Matrix<F>>],
) -> Result<MpPoint<F>, CalculusError> {
    let g1 = a.len();
    if a_prime.len() != g1 || v.len() != g1 || g1 == 0 {
        return Err(CalculusError::Direction { got: v.len(), want: g1 });
    }
    let mp = a_prime[0].rows();
    let m = a[0].rows();
    let id_m = Matrix::identity(m);
    let id_mp = Matrix::identity(mp);
    let mut first = Vec::with_capacity(g1);
    for j in 0..g1 {
        if !a_prime[j].is_square() || a_prime[j].rows() != mp || !a[j].is_square() || a[j].rows() != m {
            return Err(EvalError::PointShape("first-part tuples must be square and uniform".into()).into());
        }
        let tl = a_prime[j].kron(&id_m);
        let tr = Matrix::scalar(mp * m, v[j].clone());
        let br = id_mp.kron(&a[j]);
        let zero = Matrix::zeros(mp * m, mp * m);
        first.push(Matrix::from_blocks(&[vec![tl, tr], vec![zero, br]]).map_err(EvalError::from)?);
    }
    let mut dims = vec![2 * mp * m];
    let mut parts = vec![first];
    for part in rest {
        let n = part.first().map_or(1, Matrix::rows);
        dims.push(n);
        parts.push(part.clone());
    }
    Ok(MpPoint::new(dims, parts)?)
}

/// Block-by-block outcome of [`verify_fund`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FundCheck {
    pub top_left: bool,
    pub bottom_right: bool,
    pub top_right: bool,
    pub lower_left_zero: bool,
}

impl FundCheck {
    pub fn holds(&self) -> bool {
        self.top_left && self.bottom_right && self.top_right && self.lower_left_zero
    }
}

/// Checks the fundamental formula for `e` (over `alphabet`, letters of part
/// 1 differentiated along `v`) at `(a', a, rest)`.
pub fn verify_fund<F: Field>(
    alphabet: &Alphabet,
    e: &RationalExpr,
    a_prime: &[Matrix<F>],
    a: &[Matrix<F>],
    v: &[Rational],
    rest: &[Vec<Matrix<F>>],
) -> Result<FundCheck, CalculusError> {
    let v_field: Vec<F> = v
        .iter()
        .map(|c| F::from_rational(c).ok_or_else(|| EvalError::ConstantNotRepresentable(c.to_string())))
        .collect::<Result<_, _>>()?;
    let block = fund_block_point(a_prime, a, &v_field, rest)?;
    let mp = a_prime[0].rows();
    let m = a[0].rows();
    let id_m = Matrix::identity(m);
    let id_mp = Matrix::identity(mp);
    let left_tuple: Vec<Matrix<F>> = a_prime.iter().map(|x| x.kron(&id_m)).collect();
    let right_tuple: Vec<Matrix<F>> = a.iter().map(|x| id_mp.kron(x)).collect();

    let rest_point = |first: Vec<Matrix<F>>| -> Result<MpPoint<F>, CalculusError> {
        let mut dims = vec![mp * m];
        let mut parts = vec![first];
        for part in rest {
            dims.push(part.first().map_or(1, Matrix::rows));
            parts.push(part.clone());
        }
        Ok(MpPoint::new(dims, parts)?)
    };

    let whole = defined(mp_evaluate(e, &block)?)?;
    let top_left = defined(mp_evaluate(e, &rest_point(left_tuple.clone())?)?)?;
    let bottom_right = defined(mp_evaluate(e, &rest_point(right_tuple.clone())?)?)?;
    let dv = directional_delta(alphabet, 1, v, e)?;
    let corner_point = rest_point(right_tuple)?.with_primed(1, left_tuple)?;
    let top_right = defined(mp_evaluate(&dv, &corner_point)?)?;

    let h = top_left.rows();
    Ok(FundCheck {
        top_left: whole.block(0, 0, h, h) == top_left,
        bottom_right: whole.block(h, h, h, h) == bottom_right,
        top_right: whole.block(0, h, h, h) == top_right,
        lower_left_zero: whole.block(h, 0, h, h).is_zero(),
    })
}

fn defined<F: Field>(ev: Evaluation<F>) -> Result<Matrix<F>, CalculusError> {
    match ev {
        Evaluation::Defined(m) => Ok(m),
        Evaluation::Undefined(u) => Err(CalculusError::Undefined(u)),
    }
}
