//! Canonical form of inverse-free expressions in the multipartite free
//! algebra. A monomial keeps one word per part; letters of different parts
//! commute and are sorted by part, letters of the same part keep their order.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::{Expr, ExprError, RationalExpr, Variable};
use crate::field::Rational;

/// One word per part, `words[p - 1]` for part `p`, with trailing empty
/// words dropped so the representation does not depend on the number of
/// parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    words: Vec<Vec<Variable>>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn letter(v: Variable) -> Self {
        let mut words = vec![Vec::new(); v.part];
        words[v.part - 1].push(v);
        Monomial { words }
    }

    pub fn word(&self, part: usize) -> &[Variable] {
        self.words.get(part - 1).map_or(&[], Vec::as_slice)
    }

    pub fn degree(&self) -> usize {
        self.words.iter().map(Vec::len).sum()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.words.len().max(rhs.words.len());
        let words = (0..n)
            .map(|p| {
                let mut w = self.words.get(p).cloned().unwrap_or_default();
                w.extend(rhs.words.get(p).into_iter().flatten().copied());
                w
            })
            .collect();
        Monomial { words }
    }
}

impl Ord for Monomial {
    /// Parts ascending; within a part, shorter words first, then
    /// lexicographic.
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.words.len().max(other.words.len());
        for p in 1..=n {
            let (a, b) = (self.word(p), other.word(p));
            let ord = a.len().cmp(&b.len()).then_with(|| a.cmp(b));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let letters: Vec<String> = self.words.iter().flatten().map(|v| v.to_string()).collect();
        write!(f, "{}", letters.join("*"))
    }
}

/// Finite linear combination of monomials with nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolyNormalForm {
    terms: BTreeMap<Monomial, Rational>,
}

impl PolyNormalForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut out = Self::zero();
        out.add_term(Monomial::one(), c);
        out
    }

    pub fn letter(v: Variable) -> Self {
        let mut out = Self::zero();
        out.add_term(Monomial::letter(v), Rational::one());
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Highest total degree, 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        PolyNormalForm {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for PolyNormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m}")?;
        }
        Ok(())
    }
}

/// Expands an inverse-free expression into its canonical form; two such
/// expressions are equal in the multipartite free algebra iff their normal
/// forms are equal.
pub fn poly_normal_form(e: &RationalExpr) -> Result<PolyNormalForm, ExprError> {
    match e.node() {
        Expr::Const(q) => Ok(PolyNormalForm::constant(q.clone())),
        Expr::Var(v) => Ok(PolyNormalForm::letter(*v)),
        Expr::Sum(children) => children
            .iter()
            .try_fold(PolyNormalForm::zero(), |acc, c| Ok(acc.add(&poly_normal_form(c)?))),
        Expr::Product(children) => children.iter().try_fold(
            PolyNormalForm::constant(Rational::one()),
            |acc, c| Ok(acc.mul(&poly_normal_form(c)?)),
        ),
        Expr::Inverse(_) => Err(ExprError::HasInverse),
    }
}
