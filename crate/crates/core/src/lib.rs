//! Frobenius-descent cocycle towers over `k[t^{±1}]`, `k((t))` and
//! `k((t^{-1}))` in characteristic `p`.

pub mod arith;
pub mod cli;
pub mod error;
pub mod matrix;
pub mod rank1;
pub mod seq;
pub mod series;
pub mod special;
pub mod tower;
pub mod unipotent;

pub use error::{Error, Result};
