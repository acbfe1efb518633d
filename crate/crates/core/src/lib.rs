//! Finite-element toolkit for group-invariant Trudinger–Moser problems on
//! closed surfaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod discretization;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod maximizer;
pub mod spectrum;

pub use error::{Error, Result};
