//! Shared fixtures for the integration tests: a corpus of expressions and a
//! naive evaluator written without any of the library's linear algebra.
#![allow(dead_code)]

use mprat_core::eval::MpPoint;
use mprat_core::expr::{parse, Alphabet, Expr, RationalExpr, Variable};
use mprat_core::field::Rational;
use mprat_core::matrix::Matrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Two parts: `X1_1, X1_2` and `X2_1`.
pub fn corpus_alphabet() -> Alphabet {
    Alphabet::new(vec![2, 1]).unwrap()
}

/// Twenty expressions of inversion height 0, 1 and 2, each defined on a
/// dense set of points at every level.
pub const CORPUS: [&str; 20] = [
    "X1_1",
    "X2_1 + 3",
    "X1_1 * X2_1 - 2 * X1_2",
    "X1_1 * X1_2 - X1_2 * X1_1",
    "X1_1 * X2_1 * X1_2 + 1/2",
    "(X1_1 + X2_1) * (X1_2 - X2_1)",
    "X1_2 * X1_2 * X1_1",
    "inv(X1_1)",
    "inv(X2_1)",
    "inv(X1_1 + X2_1)",
    "X1_2 * inv(X1_1) * X2_1",
    "inv(1 + X1_1 * X1_2)",
    "inv(X1_1 * X2_1 - X1_2) + X1_1",
    "inv(X1_1) * inv(X1_2) - 2",
    "inv(inv(X1_1) + X1_2)",
    "inv(X1_1 + inv(X2_1 + 1))",
    "inv(inv(X1_1) + inv(inv(X1_2) - X1_1))",
    "X2_1 * inv(1 + X1_1 * inv(X1_2))",
    "inv(X1_1 * X1_2 - X1_2 * X1_1 + inv(X2_1))",
    "inv(inv(X1_1 + X2_1) - X1_2) * X1_1",
];

pub fn corpus() -> Vec<RationalExpr> {
    let a = corpus_alphabet();
    CORPUS.iter().map(|t| parse(t, &a).unwrap()).collect()
}

pub fn q(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64) -> Matrix<Rational> {
    let data = (0..rows * cols).map(|_| q(rng.gen_range(-bound..=bound))).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize, bound: i64) -> Matrix<Rational> {
    loop {
        let m = random_matrix(rng, n, n, bound);
        if oracle::inverse(&oracle::from_matrix(&m)).is_some() {
            return m;
        }
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, alphabet: &Alphabet, dims: &[usize], bound: i64) -> MpPoint<Rational> {
    let parts = dims
        .iter()
        .enumerate()
        .map(|(i, &n)| (0..alphabet.size(i + 1)).map(|_| random_matrix(rng, n, n, bound)).collect())
        .collect();
    MpPoint::new(dims.to_vec(), parts).unwrap()
}

/// Reference arithmetic on `Vec<Vec<Rational>>` with textbook algorithms.
pub mod oracle {
    use super::*;
    use std::collections::BTreeMap;

    pub type M = Vec<Vec<Rational>>;

    pub fn from_matrix(m: &Matrix<Rational>) -> M {
        (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
    }

    pub fn to_matrix(m: &M) -> Matrix<Rational> {
        Matrix::from_rows(m.clone()).unwrap()
    }

    pub fn identity(n: usize) -> M {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect()
    }

    pub fn scalar(n: usize, c: &Rational) -> M {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { c.clone() } else { Rational::zero() }).collect())
            .collect()
    }

    pub fn add(a: &M, b: &M) -> M {
        a.iter()
            .zip(b)
            .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
            .collect()
    }

    pub fn mul(a: &M, b: &M) -> M {
        let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| (0..k).fold(Rational::zero(), |acc, t| acc + &a[i][t] * &b[t][j]))
                    .collect()
            })
            .collect()
    }

    /// Entry `(i, j)` of `a ⊗ b` is `a[i / p][j / q] * b[i % p][j % q]`.
    pub fn kron(a: &M, b: &M) -> M {
        let (p, qq) = (b.len(), b[0].len());
        (0..a.len() * p)
            .map(|i| (0..a[0].len() * qq).map(|j| &a[i / p][j / qq] * &b[i % p][j % qq]).collect())
            .collect()
    }

    /// Gauss-Jordan with partial search for a nonzero pivot.
    pub fn inverse(a: &M) -> Option<M> {
        let n = a.len();
        let mut aug: Vec<Vec<Rational>> = a
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = r.clone();
                row.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !aug[r][col].is_zero())?;
            aug.swap(col, pivot);
            let inv = aug[col][col].recip();
            for x in aug[col].iter_mut() {
                *x = &*x * &inv;
            }
            for r in 0..n {
                if r != col && !aug[r][col].is_zero() {
                    let f = aug[r][col].clone();
                    let pivot_row = aug[col].clone();
                    for (x, y) in aug[r].iter_mut().zip(&pivot_row) {
                        *x = &*x - &f * y;
                    }
                }
            }
        }
        Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
    }

    pub fn is_zero(a: &M) -> bool {
        a.iter().flatten().all(Zero::is_zero)
    }

    /// `I ⊗ … ⊗ a ⊗ … ⊗ I` with `a` in slot `part` (1-based).
    pub fn embed(part: usize, a: &M, dims: &[usize]) -> M {
        dims.iter().enumerate().fold(identity(1), |acc, (t, &n)| {
            if t + 1 == part {
                kron(&acc, a)
            } else {
                kron(&acc, &identity(n))
            }
        })
    }

    /// mp-evaluation by direct recursion; `None` when an inverse fails.
    pub fn evaluate(e: &RationalExpr, point: &MpPoint<Rational>) -> Option<M> {
        let dims = point.dims();
        let size: usize = dims.iter().product();
        let mut letters: BTreeMap<Variable, M> = BTreeMap::new();
        for (i, part) in point.parts().iter().enumerate() {
            for (j, m) in part.iter().enumerate() {
                letters.insert(Variable::new(i + 1, j + 1), embed(i + 1, &from_matrix(m), dims));
            }
            if let Some(primed) = point.primed_part(i + 1) {
                for (j, m) in primed.iter().enumerate() {
                    letters.insert(Variable::primed(i + 1, j + 1), embed(i + 1, &from_matrix(m), dims));
                }
            }
        }
        walk(e, size, &letters)
    }

    fn walk(e: &RationalExpr, size: usize, letters: &BTreeMap<Variable, M>) -> Option<M> {
        match e.node() {
            Expr::Const(c) => Some(scalar(size, c)),
            Expr::Var(v) => Some(letters[v].clone()),
            Expr::Sum(children) => {
                let mut acc = scalar(size, &Rational::zero());
                for c in children {
                    acc = add(&acc, &walk(c, size, letters)?);
                }
                Some(acc)
            }
            Expr::Product(children) => {
                let mut acc = identity(size);
                for c in children {
                    acc = mul(&acc, &walk(c, size, letters)?);
                }
                Some(acc)
            }
            Expr::Inverse(inner) => inverse(&walk(inner, size, letters)?),
        }
    }
}

/// The two structural laws of mp-evaluation, written as predicates so the
/// property tests and the acceptance run share them.
pub mod laws {
    use mprat_core::eval::{mp_evaluate, Evaluation, MpPoint};
    use mprat_core::expr::RationalExpr;
    use mprat_core::field::Rational;
    use mprat_core::matrix::{commutation_matrix, Matrix};

    /// Moves `part` to the front and keeps the others in order.
    pub fn front_shuffle(part: usize, g: usize) -> Vec<usize> {
        std::iter::once(part).chain((1..=g).filter(|&t| t != part)).collect()
    }

    fn shuffled(part: usize, m: &Matrix<Rational>, dims: &[usize]) -> Matrix<Rational> {
        let k: Matrix<Rational> = commutation_matrix(&front_shuffle(part, dims.len()), dims).unwrap();
        k.mul(m).unwrap().mul(&k.transpose()).unwrap()
    }

    /// Evaluates at the point whose `part` is `a_part ⊕ b_part` and whose
    /// other parts come from `a`. After moving that factor to the front the
    /// value must be block diagonal with the two separate values. Returns
    /// `None` when either side is undefined; definedness must agree.
    pub fn direct_sum(e: &RationalExpr, a: &MpPoint<Rational>, b_part: &[Matrix<Rational>], part: usize) -> Option<bool> {
        let a_part = a.part(part);
        let summed: Vec<_> = a_part.iter().zip(b_part).map(|(x, y)| x.direct_sum(y)).collect();
        let pa = a.clone();
        let pb = a.replace_part(part, b_part.to_vec()).unwrap();
        let ps = a.replace_part(part, summed).unwrap();
        let va = mp_evaluate(e, &pa).unwrap();
        let vb = mp_evaluate(e, &pb).unwrap();
        let vs = mp_evaluate(e, &ps).unwrap();
        match (va, vb, vs) {
            (Evaluation::Defined(x), Evaluation::Defined(y), Evaluation::Defined(s)) => {
                let expected = shuffled(part, &x, pa.dims()).direct_sum(&shuffled(part, &y, pb.dims()));
                Some(shuffled(part, &s, ps.dims()) == expected)
            }
            (x, y, s) => {
                let both = x.is_defined() && y.is_defined();
                if both != s.is_defined() {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }

    /// Conjugating part `i` by `s[i]` conjugates the value by `⊗ s[i]`.
    pub fn similarity(e: &RationalExpr, a: &MpPoint<Rational>, s: &[Matrix<Rational>]) -> Option<bool> {
        let inv: Vec<_> = s.iter().map(|x| x.inverse().unwrap().unwrap()).collect();
        let parts = a
            .parts()
            .iter()
            .enumerate()
            .map(|(i, p)| p.iter().map(|x| s[i].mul(x).unwrap().mul(&inv[i]).unwrap()).collect())
            .collect();
        let conj = MpPoint::new(a.dims().to_vec(), parts).unwrap();
        let big = s[1..].iter().fold(s[0].clone(), |acc, x| acc.kron(x));
        let big_inv = inv[1..].iter().fold(inv[0].clone(), |acc, x| acc.kron(x));
        match (mp_evaluate(e, a).unwrap(), mp_evaluate(e, &conj).unwrap()) {
            (Evaluation::Defined(x), Evaluation::Defined(y)) => {
                Some(big.mul(&x).unwrap().mul(&big_inv).unwrap() == y)
            }
            (x, y) if x.is_defined() != y.is_defined() => Some(false),
            _ => None,
        }
    }
}
