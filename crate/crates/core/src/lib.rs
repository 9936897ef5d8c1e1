#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod building;
pub mod center;
pub mod cli;
pub mod common;
pub mod cosim;
pub mod error;
pub mod kpi;
pub mod loads;
pub mod network;
pub mod scenario;
pub mod sim;
pub mod storage;

pub use error::{Error, Result};
