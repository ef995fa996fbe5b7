//! Linear-pencil realizations about a base point.
//!
//! A realization of `r` about `p = (p_1, …, p_g)` (all `m x m`) is
//!
//! ```text
//! r(Z) = c (I - L(Z - p))⁻¹ b,   L(Z - p) = Σ_i Σ_j C_ij (I_n ⊗ (Z_i - p_i)) B_ij
//! ```
//!
//! with `c` of shape `m x nm`, `b` of shape `nm x m` and every `C_ij`,
//! `B_ij` of shape `nm x nm`, read as `n x n` block matrices over `M_m(k)`.
//! At a point of size `sm`, each `m x m` block `Y` of the constant data is
//! replaced by `I_s ⊗ Y`.
//!
//! Letters are the flattened alphabet ([`Alphabet::letters`]); the `i`-th
//! letter is `Z_i`.

use std::collections::HashMap;

use thiserror::Error;

use crate::eval::{nc_evaluate, EvalError, Evaluation, NcPoint};
use crate::expr::{Alphabet, Expr, RationalExpr};
use crate::field::Field;
use crate::matrix::{Matrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealizationError {
    #[error("base point is outside the domain of {subexpr}")]
    BasePointOutsideDomain { subexpr: RationalExpr },
    #[error("point size {size} is not a multiple of the base size {base}")]
    SizeNotMultiple { size: usize, base: usize },
    #[error("the pencil is singular at this point")]
    PencilSingular,
    #[error("inconsistent realization data: {0}")]
    Shape(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<MatrixError> for RealizationError {
    fn from(e: MatrixError) -> Self {
        RealizationError::Eval(EvalError::Matrix(e))
    }
}

/// One coefficient pair `(C, B)` attached to a letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PencilTerm<F: Field> {
    /// Flat letter index, 0-based.
    pub letter: usize,
    pub c: Matrix<F>,
    pub b: Matrix<F>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization<F: Field> {
    alphabet: Alphabet,
    m: usize,
    n: usize,
    base: Vec<Matrix<F>>,
    c: Matrix<F>,
    b: Matrix<F>,
    terms: Vec<PencilTerm<F>>,
}

impl<F: Field> Realization<F> {
    /// Assembles a realization from raw data after checking every shape.
    pub fn new(
        alphabet: Alphabet,
        base: Vec<Matrix<F>>,
        c: Matrix<F>,
        b: Matrix<F>,
        terms: Vec<PencilTerm<F>>,
    ) -> Result<Self, RealizationError> {
        let g = alphabet.num_letters();
        if base.len() != g {
            return Err(RealizationError::Shape(format!("{} base matrices for {g} letters", base.len())));
        }
        let m = c.rows();
        if m == 0 || base.iter().any(|p| p.shape() != (m, m)) {
            return Err(RealizationError::Shape("base point must be m x m with m = rows of c".into()));
        }
        if c.cols() % m != 0 || c.cols() == 0 {
            return Err(RealizationError::Shape("c must be m x nm".into()));
        }
        let big = c.cols();
        if b.shape() != (big, m) {
            return Err(RealizationError::Shape("b must be nm x m".into()));
        }
        for t in &terms {
            if t.letter >= g || t.c.shape() != (big, big) || t.b.shape() != (big, big) {
                return Err(RealizationError::Shape("coefficient blocks must be nm x nm".into()));
            }
        }
        Ok(Realization {
            alphabet,
            m,
            n: big / m,
            base,
            c,
            b,
            terms,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Size `m` of the base-point matrices.
    pub fn base_size(&self) -> usize {
        self.m
    }

    /// Number `n` of state blocks.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Largest number of coefficient pairs attached to a single letter.
    pub fn rho(&self) -> usize {
        (0..self.base.len()).map(|i| self.terms_of(i).count()).max().unwrap_or(0)
    }

    pub fn base_point(&self) -> &[Matrix<F>] {
        &self.base
    }

    pub fn c(&self) -> &Matrix<F> {
        &self.c
    }

    pub fn b(&self) -> &Matrix<F> {
        &self.b
    }

    pub fn terms(&self) -> &[PencilTerm<F>] {
        &self.terms
    }

    fn terms_of(&self, letter: usize) -> impl Iterator<Item = &PencilTerm<F>> {
        self.terms.iter().filter(move |t| t.letter == letter)
    }

    /// `(C_ij, B_ij)` with `i` the 0-based letter and `j < rho()`; pairs
    /// beyond those the construction produced are zero.
    pub fn coefficient(&self, letter: usize, j: usize) -> (Matrix<F>, Matrix<F>) {
        match self.terms_of(letter).nth(j) {
            Some(t) => (t.c.clone(), t.b.clone()),
            None => {
                let big = self.n * self.m;
                (Matrix::zeros(big, big), Matrix::zeros(big, big))
            }
        }
    }

    /// `I - L(a - p)` amplified to the size of `a`.
    fn pencil(&self, a: &NcPoint<F>) -> Result<Matrix<F>, RealizationError> {
        let size = a.size();
        if size % self.m != 0 || size == 0 {
            return Err(RealizationError::SizeNotMultiple { size, base: self.m });
        }
        let s = size / self.m;
        let letters = a.letters(&self.alphabet)?;
        let shifts: Vec<Matrix<F>> = letters
            .iter()
            .zip(&self.base)
            .map(|(ai, pi)| ai.sub(&Matrix::identity(s).kron(pi)))
            .collect::<Result<_, _>>()?;
        let big = self.n * self.m;
        let mut pencil = Matrix::identity(big * s);
        for term in &self.terms {
            for (u, w) in elementary(term, self.n, self.m) {
                let contribution = amplify(&u, self.m, s).mul(&shifts[term.letter])?.mul(&amplify(&w, self.m, s))?;
                pencil = pencil.sub(&contribution)?;
            }
        }
        Ok(pencil)
    }
}

/// Splits `C (I_n ⊗ Δ) B` into its nonzero rank-`m` pieces `u Δ w`.
fn elementary<F: Field>(term: &PencilTerm<F>, n: usize, m: usize) -> Vec<(Matrix<F>, Matrix<F>)> {
    let big = n * m;
    (0..n)
        .map(|t| (term.c.block(0, t * m, big, m), term.b.block(t * m, 0, m, big)))
        .filter(|(u, w)| !u.is_zero() && !w.is_zero())
        .collect()
}

/// Replaces every `m x m` block `Y` of `x` by `I_s ⊗ Y`.
pub fn amplify<F: Field>(x: &Matrix<F>, m: usize, s: usize) -> Matrix<F> {
    if s == 1 {
        return x.clone();
    }
    let (br, bc) = (x.rows() / m, x.cols() / m);
    let mut out = Matrix::zeros(x.rows() * s, x.cols() * s);
    for bi in 0..br {
        for bj in 0..bc {
            for ii in 0..m {
                for jj in 0..m {
                    let v = &x[(bi * m + ii, bj * m + jj)];
                    if v.is_zero() {
                        continue;
                    }
                    for k in 0..s {
                        out[((bi * s + k) * m + ii, (bj * s + k) * m + jj)] = v.clone();
                    }
                }
            }
        }
    }
    out
}

/// Builds a realization of `e` about `p` by structural recursion.
pub fn realize<F: Field>(e: &RationalExpr, alphabet: &Alphabet, p: &NcPoint<F>) -> Result<Realization<F>, RealizationError> {
    let base = p.letters(alphabet)?;
    let m = p.size();
    if m == 0 {
        return Err(RealizationError::Shape("base point of size 0".into()));
    }
    let mut builder = Builder {
        alphabet,
        base: &base,
        m,
        memo: HashMap::new(),
    };
    let r = builder.build(e)?;
    Realization::new(alphabet.clone(), base, r.c, r.b, r.terms)
}

#[derive(Clone)]
struct Partial<F: Field> {
    c: Matrix<F>,
    b: Matrix<F>,
    terms: Vec<PencilTerm<F>>,
}

impl<F: Field> Partial<F> {
    fn big(&self) -> usize {
        self.c.cols()
    }
}

struct Builder<'a, F: Field> {
    alphabet: &'a Alphabet,
    base: &'a [Matrix<F>],
    m: usize,
    memo: HashMap<usize, Partial<F>>,
}

impl<F: Field> Builder<'_, F> {
    fn build(&mut self, e: &RationalExpr) -> Result<Partial<F>, RealizationError> {
        if let Some(hit) = self.memo.get(&e.node_id()) {
            return Ok(hit.clone());
        }
        let m = self.m;
        let out = match e.node() {
            Expr::Const(q) => {
                let alpha = F::from_rational(q).ok_or_else(|| EvalError::ConstantNotRepresentable(q.to_string()))?;
                Partial {
                    c: Matrix::scalar(m, alpha),
                    b: Matrix::identity(m),
                    terms: Vec::new(),
                }
            }
            Expr::Var(v) => {
                let k = self.alphabet.flat_index(v).ok_or(EvalError::MissingVariable(*v))?;
                let id = Matrix::identity(m);
                let zero = Matrix::zeros(m, m);
                Partial {
                    c: Matrix::from_blocks(&[vec![id.clone(), zero.clone()]])?,
                    b: Matrix::from_blocks(&[vec![self.base[k].clone()], vec![id.clone()]])?,
                    terms: vec![PencilTerm {
                        letter: k,
                        c: Matrix::from_blocks(&[vec![zero.clone(), id.clone()], vec![zero.clone(), zero]])?,
                        b: Matrix::identity(2 * m),
                    }],
                }
            }
            Expr::Sum(children) => {
                let mut parts = children.iter().map(|x| self.build(x));
                let first = parts.next().expect("sums have children")?;
                parts.try_fold(first, |acc, next| Ok::<_, RealizationError>(parallel(&acc, &next?)))?
            }
            Expr::Product(children) => {
                let mut parts = children.iter().map(|x| self.build(x));
                let first = parts.next().expect("products have children")?;
                parts.try_fold(first, |acc, next| series(&acc, &next?))?
            }
            Expr::Inverse(inner) => {
                let r = self.build(inner)?;
                invert(&r, m).ok_or_else(|| RealizationError::BasePointOutsideDomain { subexpr: e.clone() })??
            }
        };
        self.memo.insert(e.node_id(), out.clone());
        Ok(out)
    }
}

/// Realization of `r1 + r2`: block-diagonal state.
fn parallel<F: Field>(r1: &Partial<F>, r2: &Partial<F>) -> Partial<F> {
    let (n1, n2) = (r1.big(), r2.big());
    let mut terms = Vec::with_capacity(r1.terms.len() + r2.terms.len());
    for t in &r1.terms {
        terms.push(PencilTerm {
            letter: t.letter,
            c: t.c.direct_sum(&Matrix::zeros(n2, n2)),
            b: t.b.direct_sum(&Matrix::zeros(n2, n2)),
        });
    }
    for t in &r2.terms {
        terms.push(PencilTerm {
            letter: t.letter,
            c: Matrix::zeros(n1, n1).direct_sum(&t.c),
            b: Matrix::zeros(n1, n1).direct_sum(&t.b),
        });
    }
    Partial {
        c: concat_cols(&r1.c, &r2.c),
        b: concat_rows(&r1.b, &r2.b),
        terms,
    }
}

/// Realization of `r1 r2`. With `U⁻¹ = [[I, b1 c2], [0, I]]` the product is
/// `[c1, 0] (I - U⁻¹ diag(L1, L2))⁻¹ U⁻¹ [0; b2]`.
fn series<F: Field>(r1: &Partial<F>, r2: &Partial<F>) -> Result<Partial<F>, RealizationError> {
    let (n1, n2) = (r1.big(), r2.big());
    let coupling = r1.b.mul(&r2.c)?;
    let mut terms = Vec::with_capacity(r1.terms.len() + r2.terms.len());
    for t in &r1.terms {
        terms.push(PencilTerm {
            letter: t.letter,
            c: t.c.direct_sum(&Matrix::zeros(n2, n2)),
            b: t.b.direct_sum(&Matrix::zeros(n2, n2)),
        });
    }
    for t in &r2.terms {
        let mut c = Matrix::zeros(n1 + n2, n1 + n2);
        c.set_block(0, n1, &coupling.mul(&t.c)?);
        c.set_block(n1, n1, &t.c);
        terms.push(PencilTerm {
            letter: t.letter,
            c,
            b: Matrix::zeros(n1, n1).direct_sum(&t.b),
        });
    }
    Ok(Partial {
        c: concat_cols(&r1.c, &Matrix::zeros(r1.c.rows(), n2)),
        b: concat_rows(&coupling.mul(&r2.b)?, &r2.b),
        terms,
    })
}

/// Realization of `r⁻¹`, `None` when `r(p) = c b` is singular. With
/// `U = [[I, b], [-c, 0]]` the inverse is
/// `[0, I] (I - U⁻¹ diag(L, 0))⁻¹ U⁻¹ [0; I]`.
fn invert<F: Field>(r: &Partial<F>, m: usize) -> Option<Result<Partial<F>, RealizationError>> {
    let value = r.c.mul(&r.b).ok()?;
    let s_inv = value.inverse().ok()??;
    Some((|| {
        let big = r.big();
        let b_s = r.b.mul(&s_inv)?;
        let s_c = s_inv.mul(&r.c)?;
        let top_left = Matrix::identity(big).sub(&b_s.mul(&r.c)?)?;
        let mut terms = Vec::with_capacity(r.terms.len());
        for t in &r.terms {
            let mut c = Matrix::zeros(big + m, big + m);
            c.set_block(0, 0, &top_left.mul(&t.c)?);
            c.set_block(big, 0, &s_c.mul(&t.c)?);
            terms.push(PencilTerm {
                letter: t.letter,
                c,
                b: t.b.direct_sum(&Matrix::zeros(m, m)),
            });
        }
        Ok(Partial {
            c: concat_cols(&Matrix::zeros(m, big), &Matrix::identity(m)),
            b: concat_rows(&b_s.neg(), &s_inv),
            terms,
        })
    })())
}

fn concat_cols<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    Matrix::from_blocks(&[vec![a.clone(), b.clone()]]).expect("equal row counts")
}

fn concat_rows<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    Matrix::from_blocks(&[vec![a.clone()], vec![b.clone()]]).expect("equal column counts")
}

/// `c^ι (I - L(a - p^ι))⁻¹ b^ι` at a point of size `s m`.
pub fn real_evaluate<F: Field>(r: &Realization<F>, a: &NcPoint<F>) -> Result<Matrix<F>, RealizationError> {
    let pencil = r.pencil(a)?;
    let s = a.size() / r.m;
    let x = pencil
        .solve(&amplify(&r.b, r.m, s))?
        .ok_or(RealizationError::PencilSingular)?;
    Ok(amplify(&r.c, r.m, s).mul(&x)?)
}

/// Whether the amplified pencil is invertible at `a`.
pub fn real_domain_contains<F: Field>(r: &Realization<F>, a: &NcPoint<F>) -> Result<bool, RealizationError> {
    Ok(!r.pencil(a)?.det()?.is_zero())
}

/// Value of the realized expression at the base point, `c b`.
pub fn base_value<F: Field>(r: &Realization<F>) -> Matrix<F> {
    r.c.mul(&r.b).expect("c is m x nm, b is nm x m")
}

/// Restricts to the reachable and then the observable part of the state
/// space, repeating until the dimension stops dropping. Returns `r` itself
/// when nothing can be removed.
pub fn real_reduce<F: Field>(r: &Realization<F>) -> Realization<F> {
    let mut current = r.clone();
    loop {
        let candidate = reduce_once(&current);
        if candidate.n < current.n {
            current = candidate;
        } else {
            return current;
        }
    }
}

/// A state-space system with rank-`m` terms `u Δ_letter w`, states not yet
/// grouped into blocks.
struct Flat<F: Field> {
    c: Matrix<F>,
    b: Matrix<F>,
    terms: Vec<(usize, Matrix<F>, Matrix<F>)>,
}

fn reduce_once<F: Field>(r: &Realization<F>) -> Realization<F> {
    let mut terms = Vec::new();
    for t in &r.terms {
        for (u, w) in elementary(t, r.n, r.m) {
            terms.push((t.letter, u, w));
        }
    }
    let flat = Flat {
        c: r.c.clone(),
        b: r.b.clone(),
        terms,
    };
    let reachable = restrict_reachable(&flat);
    let observable = restrict_reachable(&reachable.dual()).dual();
    regroup(r, observable)
}

impl<F: Field> Flat<F> {
    /// The transposed system, whose reachable part is the observable part
    /// of `self`.
    fn dual(&self) -> Flat<F> {
        Flat {
            c: self.b.transpose(),
            b: self.c.transpose(),
            terms: self
                .terms
                .iter()
                .map(|(k, u, w)| (*k, w.transpose(), u.transpose()))
                .collect(),
        }
    }
}

/// Restriction to the smallest subspace containing the columns of `b` and
/// invariant under every term that sees it.
fn restrict_reachable<F: Field>(sys: &Flat<F>) -> Flat<F> {
    let mut span = Span::new(sys.b.rows());
    for j in 0..sys.b.cols() {
        span.insert(column(&sys.b, j));
    }
    let mut active = vec![false; sys.terms.len()];
    loop {
        let mut grew = false;
        for (t, (_, u, w)) in sys.terms.iter().enumerate() {
            if active[t] || !span.basis.iter().any(|q| !mat_vec(w, q).iter().all(F::is_zero)) {
                continue;
            }
            active[t] = true;
            grew = true;
            for j in 0..u.cols() {
                span.insert(column(u, j));
            }
        }
        if !grew {
            break;
        }
    }
    let d = span.basis.len();
    let q = Matrix::from_vec(
        sys.b.rows(),
        d,
        (0..sys.b.rows())
            .flat_map(|i| span.basis.iter().map(move |v| v[i].clone()))
            .collect(),
    )
    .expect("sized buffer");
    let coords = |x: &Matrix<F>| -> Matrix<F> {
        let cols: Vec<Vec<F>> = (0..x.cols()).map(|j| span.coordinates(&column(x, j))).collect();
        Matrix::from_vec(d, x.cols(), (0..d).flat_map(|i| cols.iter().map(move |c| c[i].clone())).collect())
            .expect("sized buffer")
    };
    Flat {
        c: sys.c.mul(&q).expect("c acts on the state"),
        b: coords(&sys.b),
        terms: sys
            .terms
            .iter()
            .zip(&active)
            .filter(|(_, &on)| on)
            .map(|((k, u, w), _)| (*k, coords(u), w.mul(&q).expect("w acts on the state")))
            .collect(),
    }
}

/// Packs a flat system back into `n x n` block form, padding the state with
/// inert coordinates up to a multiple of `m` and placing up to `n` rank-`m`
/// terms of the same letter in one coefficient pair.
fn regroup<F: Field>(r: &Realization<F>, sys: Flat<F>) -> Realization<F> {
    let m = r.m;
    let d = sys.c.cols();
    let n = d.div_ceil(m).max(1);
    let big = n * m;
    let pad_cols = |x: &Matrix<F>| {
        let mut out = Matrix::zeros(x.rows(), big);
        out.set_block(0, 0, x);
        out
    };
    let pad_rows = |x: &Matrix<F>| {
        let mut out = Matrix::zeros(big, x.cols());
        out.set_block(0, 0, x);
        out
    };
    let mut terms: Vec<PencilTerm<F>> = Vec::new();
    for letter in 0..r.base.len() {
        let mine: Vec<_> = sys.terms.iter().filter(|(k, _, _)| *k == letter).collect();
        for chunk in mine.chunks(n) {
            let mut c = Matrix::zeros(big, big);
            let mut b = Matrix::zeros(big, big);
            for (slot, (_, u, w)) in chunk.iter().enumerate() {
                c.set_block(0, slot * m, &pad_rows(u));
                b.set_block(slot * m, 0, &pad_cols(w));
            }
            terms.push(PencilTerm { letter, c, b });
        }
    }
    Realization {
        alphabet: r.alphabet.clone(),
        m,
        n,
        base: r.base.clone(),
        c: pad_cols(&sys.c),
        b: pad_rows(&sys.b),
        terms,
    }
}

fn column<F: Field>(x: &Matrix<F>, j: usize) -> Vec<F> {
    (0..x.rows()).map(|i| x[(i, j)].clone()).collect()
}

fn mat_vec<F: Field>(x: &Matrix<F>, v: &[F]) -> Vec<F> {
    (0..x.rows())
        .map(|i| x.row(i).iter().zip(v).fold(F::zero(), |acc, (a, b)| acc.add(&a.mul(b))))
        .collect()
}

/// Incrementally grown subspace of `F^dim` remembering the vectors that
/// were accepted, with coordinates relative to them.
struct Span<F: Field> {
    basis: Vec<Vec<F>>,
    /// Echelon rows: (pivot, reduced vector with 1 at pivot, combination of
    /// `basis` vectors that produces it).
    echelon: Vec<(usize, Vec<F>, Vec<F>)>,
}

impl<F: Field> Span<F> {
    fn new(_dim: usize) -> Self {
        Span {
            basis: Vec::new(),
            echelon: Vec::new(),
        }
    }

    /// Reduces `v` against the echelon rows; returns the residue and the
    /// combination of basis vectors subtracted from it.
    fn reduce(&self, v: &[F]) -> (Vec<F>, Vec<F>) {
        let mut rest = v.to_vec();
        let mut used = vec![F::zero(); self.basis.len()];
        for (pivot, row, combo) in &self.echelon {
            let f = rest[*pivot].clone();
            if f.is_zero() {
                continue;
            }
            for (x, y) in rest.iter_mut().zip(row) {
                *x = x.sub(&f.mul(y));
            }
            for (x, y) in used.iter_mut().zip(combo) {
                *x = x.add(&f.mul(y));
            }
        }
        (rest, used)
    }

    fn insert(&mut self, v: Vec<F>) -> bool {
        let (rest, used) = self.reduce(&v);
        let Some(pivot) = rest.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let scale = rest[pivot].inv().expect("nonzero pivot");
        // rest = v - Σ used_k basis_k, and v becomes the newest basis vector
        let mut combo: Vec<F> = used.iter().map(|x| x.neg().mul(&scale)).collect();
        combo.push(scale.clone());
        for (_, _, c) in &mut self.echelon {
            c.push(F::zero());
        }
        let row = rest.iter().map(|x| x.mul(&scale)).collect();
        self.echelon.push((pivot, row, combo));
        self.basis.push(v);
        true
    }

    /// Coordinates of `v` (assumed inside the span) in terms of `basis`.
    fn coordinates(&self, v: &[F]) -> Vec<F> {
        let (rest, used) = self.reduce(v);
        debug_assert!(rest.iter().all(F::is_zero), "vector outside the span");
        used
    }
}

/// Checks that `realize` was given a point in the domain: the expression
/// itself must be defined there.
pub fn base_point_in_domain<F: Field>(e: &RationalExpr, p: &NcPoint<F>) -> Result<bool, RealizationError> {
    Ok(matches!(nc_evaluate(e, p)?, Evaluation::Defined(_)))
}
