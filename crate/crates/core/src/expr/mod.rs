//! Formal rational expressions over a multipartite alphabet.
//!
//! Letters are written `X{part}_{index}` (both 1-based); a trailing `'`
//! marks the primed copy of a letter, which only appears in the output of
//! the difference-differential operators. Letters from different parts
//! commute, letters within a part do not.
//!
//! Expressions are immutable trees with shared children, so subtrees
//! produced by realization or Schur-complement constructions can be reused
//! without copying. Sums and products are n-ary and flattened; no algebraic
//! simplification happens beyond folding the sign of a negated literal.

mod normal_form;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::field::{Field, Rational};

pub use normal_form::{poly_normal_form, Monomial, PolyNormalForm};
pub use parse::{parse, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("alphabet {0:?} is not of the form G:g1,...,gG")]
    AlphabetSyntax(String),
    #[error("alphabet needs at least one part and every part at least one letter")]
    EmptyAlphabet,
    #[error("variable {0} is not in the alphabet")]
    UnknownVariable(Variable),
    #[error("index {index} out of range for part {part}")]
    IndexOutOfRange { part: usize, index: usize },
    #[error("expression contains an inverse")]
    HasInverse,
}

/// Multipartite alphabet: `sizes[i - 1]` letters in part `i`, optionally
/// extended by primed copies of some parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    sizes: Vec<usize>,
    primed: Vec<bool>,
}

impl Alphabet {
    pub fn new(sizes: Vec<usize>) -> Result<Self, ExprError> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(ExprError::EmptyAlphabet);
        }
        let primed = vec![false; sizes.len()];
        Ok(Alphabet { sizes, primed })
    }

    /// The same alphabet with primed letters added for `part`.
    pub fn with_primed(&self, part: usize) -> Self {
        let mut out = self.clone();
        if (1..=self.parts()).contains(&part) {
            out.primed[part - 1] = true;
        }
        out
    }

    /// Drops all primed letters.
    pub fn unprimed(&self) -> Self {
        Alphabet {
            sizes: self.sizes.clone(),
            primed: vec![false; self.sizes.len()],
        }
    }

    pub fn parts(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of letters in `part` (1-based).
    pub fn size(&self, part: usize) -> usize {
        self.sizes[part - 1]
    }

    pub fn has_primed(&self, part: usize) -> bool {
        self.primed.get(part.wrapping_sub(1)).copied().unwrap_or(false)
    }

    pub fn check(&self, v: &Variable) -> Result<(), ExprError> {
        if v.part == 0 || v.part > self.parts() || (v.primed && !self.has_primed(v.part)) {
            return Err(ExprError::UnknownVariable(*v));
        }
        if v.index == 0 || v.index > self.size(v.part) {
            return Err(ExprError::IndexOutOfRange {
                part: v.part,
                index: v.index,
            });
        }
        Ok(())
    }

    pub fn contains(&self, v: &Variable) -> bool {
        self.check(v).is_ok()
    }

    /// All letters in flattened order: unprimed letters part by part, then
    /// the primed ones in the same order.
    pub fn letters(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        for primed in [false, true] {
            for (p, &g) in self.sizes.iter().enumerate() {
                if primed && !self.primed[p] {
                    continue;
                }
                for j in 1..=g {
                    out.push(Variable {
                        part: p + 1,
                        index: j,
                        primed,
                    });
                }
            }
        }
        out
    }

    /// Position of `v` in [`Alphabet::letters`].
    pub fn flat_index(&self, v: &Variable) -> Option<usize> {
        self.letters().iter().position(|l| l == v)
    }

    pub fn num_letters(&self) -> usize {
        self.letters().len()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.parts())?;
        for (i, g) in self.sizes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Alphabet {
    type Err = ExprError;

    /// Reads `G:g1,…,gG`, the format produced by `Display`.
    fn from_str(text: &str) -> Result<Self, ExprError> {
        let bad = || ExprError::AlphabetSyntax(text.to_string());
        let (count, sizes) = text.trim().split_once(':').ok_or_else(bad)?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        let sizes = sizes
            .split(',')
            .map(|g| g.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        if sizes.len() != count {
            return Err(bad());
        }
        Alphabet::new(sizes)
    }
}

/// A letter `X{part}_{index}`, possibly primed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    pub part: usize,
    pub index: usize,
    pub primed: bool,
}

impl Variable {
    pub fn new(part: usize, index: usize) -> Self {
        Variable {
            part,
            index,
            primed: false,
        }
    }

    pub fn primed(part: usize, index: usize) -> Self {
        Variable {
            part,
            index,
            primed: true,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}_{}", self.part, self.index)?;
        if self.primed {
            write!(f, "'")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Rational),
    Var(Variable),
    Sum(Vec<RationalExpr>),
    Product(Vec<RationalExpr>),
    Inverse(RationalExpr),
}

/// Shared handle to an expression node.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalExpr(Arc<Expr>);

impl RationalExpr {
    fn new(e: Expr) -> Self {
        RationalExpr(Arc::new(e))
    }

    pub fn node(&self) -> &Expr {
        &self.0
    }

    /// Address of the shared node; equal for clones of the same handle.
    pub fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(q: Rational) -> Self {
        Self::new(Expr::Const(q))
    }

    pub fn int(v: i64) -> Self {
        Self::constant(Rational::from_i64(v))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn var(v: Variable) -> Self {
        Self::new(Expr::Var(v))
    }

    /// Unprimed letter `X{part}_{index}`.
    pub fn x(part: usize, index: usize) -> Self {
        Self::var(Variable::new(part, index))
    }

    /// n-ary sum; nested sums are flattened, a single term is returned as
    /// is and the empty sum is `0`.
    pub fn sum(terms: impl IntoIterator<Item = RationalExpr>) -> Self {
        let mut flat = Vec::new();
        for t in terms {
            match t.node() {
                Expr::Sum(children) => flat.extend(children.iter().cloned()),
                _ => flat.push(t),
            }
        }
        match flat.len() {
            0 => Self::zero(),
            1 => flat.pop().unwrap(),
            _ => Self::new(Expr::Sum(flat)),
        }
    }

    /// n-ary product, flattened like [`RationalExpr::sum`]; the empty
    /// product is `1`.
    pub fn product(factors: impl IntoIterator<Item = RationalExpr>) -> Self {
        let mut flat = Vec::new();
        for t in factors {
            match t.node() {
                Expr::Product(children) => flat.extend(children.iter().cloned()),
                _ => flat.push(t),
            }
        }
        match flat.len() {
            0 => Self::one(),
            1 => flat.pop().unwrap(),
            _ => Self::new(Expr::Product(flat)),
        }
    }

    pub fn inv(&self) -> Self {
        Self::new(Expr::Inverse(self.clone()))
    }

    /// `-self`: literals flip sign, anything else is multiplied by `-1`.
    pub fn neg(&self) -> Self {
        match self.node() {
            Expr::Const(q) => Self::constant(-q),
            _ => Self::product([Self::int(-1), self.clone()]),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::sum([self.clone(), rhs.clone()])
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::sum([self.clone(), rhs.neg()])
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self::product([self.clone(), rhs.clone()])
    }

    /// `self * rhs - rhs * self`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Expr::Const(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_literal_zero(&self) -> bool {
        self.as_const().is_some_and(Zero::is_zero)
    }

    pub fn is_literal_one(&self) -> bool {
        self.as_const().is_some_and(One::is_one)
    }

    /// Children in source order.
    pub fn children(&self) -> &[RationalExpr] {
        match self.node() {
            Expr::Const(_) | Expr::Var(_) => &[],
            Expr::Sum(c) | Expr::Product(c) => c,
            Expr::Inverse(c) => std::slice::from_ref(c),
        }
    }

    /// Maximum number of nested inverses.
    pub fn inversion_height(&self) -> usize {
        let below = self
            .children()
            .iter()
            .map(RationalExpr::inversion_height)
            .max()
            .unwrap_or(0);
        match self.node() {
            Expr::Inverse(_) => below + 1,
            _ => below,
        }
    }

    /// Number of nodes in the tree, counting shared subtrees once per use.
    pub fn tree_size(&self) -> usize {
        1 + self.children().iter().map(RationalExpr::tree_size).sum::<usize>()
    }

    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Variable>) {
        if let Expr::Var(v) = self.node() {
            out.insert(*v);
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    /// Checks every letter against `alphabet`.
    pub fn validate(&self, alphabet: &Alphabet) -> Result<(), ExprError> {
        self.variables().iter().try_for_each(|v| alphabet.check(v))
    }

    /// Subexpression at `path` (child indices from the root).
    pub fn at_path(&self, path: &[usize]) -> Option<&RationalExpr> {
        let mut cur = self;
        for &i in path {
            cur = cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Rebuilds the tree with every letter replaced by `f(letter)`.
    pub fn substitute(&self, f: &impl Fn(&Variable) -> RationalExpr) -> RationalExpr {
        match self.node() {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => f(v),
            Expr::Sum(c) => Self::sum(c.iter().map(|x| x.substitute(f))),
            Expr::Product(c) => Self::product(c.iter().map(|x| x.substitute(f))),
            Expr::Inverse(c) => c.substitute(f).inv(),
        }
    }

    /// Renames the letters of `part` to their primed copies.
    pub fn prime_part(&self, part: usize) -> RationalExpr {
        self.substitute(&|v| {
            if v.part == part && !v.primed {
                Self::var(Variable::primed(v.part, v.index))
            } else {
                Self::var(*v)
            }
        })
    }
}

impl fmt::Debug for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

/// Text form of `e` in the expression grammar; `parse(format(e)) == e`.
pub fn format(e: &RationalExpr) -> String {
    e.to_string()
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &RationalExpr) -> fmt::Result {
    match e.node() {
        Expr::Sum(terms) => {
            write_term(f, &terms[0])?;
            for t in &terms[1..] {
                match negated_term(t) {
                    Some(Negated::Literal(q)) => write!(f, " - {q}")?,
                    Some(Negated::Factors(rest)) => {
                        write!(f, " - ")?;
                        write_factors(f, rest)?;
                    }
                    None => {
                        write!(f, " + ")?;
                        write_term(f, t)?;
                    }
                }
            }
            Ok(())
        }
        _ => write_term(f, e),
    }
}

enum Negated<'a> {
    Literal(Rational),
    Factors(&'a [RationalExpr]),
}

/// Sum terms that print back through the parser's `- term` rule.
fn negated_term(t: &RationalExpr) -> Option<Negated<'_>> {
    match t.node() {
        Expr::Const(q) if q.is_negative() => Some(Negated::Literal(-q)),
        Expr::Product(fs)
            if fs[0].as_const().is_some_and(|q| *q == -<Rational as One>::one())
                && fs[1].as_const().is_none() =>
        {
            Some(Negated::Factors(&fs[1..]))
        }
        _ => None,
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, e: &RationalExpr) -> fmt::Result {
    match e.node() {
        Expr::Product(fs) => write_factors(f, fs),
        _ => write_factor(f, e),
    }
}

fn write_factors(f: &mut fmt::Formatter<'_>, fs: &[RationalExpr]) -> fmt::Result {
    for (i, x) in fs.iter().enumerate() {
        if i > 0 {
            write!(f, " * ")?;
        }
        write_factor(f, x)?;
    }
    Ok(())
}

fn write_factor(f: &mut fmt::Formatter<'_>, e: &RationalExpr) -> fmt::Result {
    match e.node() {
        Expr::Const(q) => write!(f, "{q}"),
        Expr::Var(v) => write!(f, "{v}"),
        Expr::Inverse(c) => {
            write!(f, "inv(")?;
            write_expr(f, c)?;
            write!(f, ")")
        }
        Expr::Sum(_) | Expr::Product(_) => {
            write!(f, "(")?;
            write_expr(f, e)?;
            write!(f, ")")
        }
    }
}

/// Maximum number of nested inverses in `e`.
pub fn inversion_height(e: &RationalExpr) -> usize {
    e.inversion_height()
}
