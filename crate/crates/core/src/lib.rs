//! Constituent parsing by reduction to dependency parsing.
//!
//! A lexicalized constituent tree maps to a *head-ordered* dependency tree
//! whose arc labels record the constituent label and the order of
//! attachment. The mapping is invertible for unaryless trees, so a labeled
//! dependency parser predicting these labels parses constituents.
//!
//! ```
//! use headorder::fixtures;
//! use headorder::reduction::{ctree_to_dtree, dtree_to_ctree};
//!
//! let t = fixtures::english_unaryless();
//! assert_eq!(dtree_to_ctree(&ctree_to_dtree(&t).unwrap()).unwrap(), t);
//! ```
//!
//! The guide in `book/` walks through each module.

pub mod encoding;
pub mod eval;
pub mod fixtures;
pub mod gen;
pub mod headrules;
pub mod io;
pub mod labeler;
pub mod model;
pub mod parser;
pub mod pipeline;
pub mod reduction;
pub mod trees;
pub mod unary;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/encodings.md")]
    mod encodings {}
    #[doc = include_str!("../../../book/src/parsing.md")]
    mod parsing {}
    #[doc = include_str!("../../../book/src/unaries.md")]
    mod unaries {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/generation.md")]
    mod generation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
