//! Library surface of the povmlab command-line runner, exposed so the
//! acceptance suite can run both as `povmlab selftest` and as an
//! integration test target.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting guards

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiment;
pub mod export;
pub mod report;
