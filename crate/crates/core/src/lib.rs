//! Exact evaluation and identity testing for multipartite noncommutative
//! rational functions.
//!
//! Letters are grouped into parts. Within a part they do not commute;
//! across parts they do, because each part acts on its own tensor factor.
//! The guide in `book/` walks through the modules with runnable examples.

pub mod calculus;
pub mod eval;
pub mod expr;
pub mod field;
pub mod identity;
pub mod json;
pub mod matrix;
pub mod matrix_rational;
pub mod realization;

// The book's code listings, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/identity-testing.md")]
    mod identity_testing {}
    #[doc = include_str!("../../../book/src/derivatives.md")]
    mod derivatives {}
    #[doc = include_str!("../../../book/src/realizations.md")]
    mod realizations {}
    #[doc = include_str!("../../../book/src/matrices.md")]
    mod matrices {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
