// negated comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catalog;
pub mod config;
pub mod emit;
pub mod error;
pub mod fd;
pub mod geodesics;
pub mod hypersurface;
pub mod invariants;
pub mod linalg;
pub mod normalization;
pub mod nullframe;
pub mod selftest;
pub mod surface;
pub mod tensorcalc;

pub use error::{Error, Result, UnavailableReason};
