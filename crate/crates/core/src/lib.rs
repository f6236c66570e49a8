#![no_std]

extern crate alloc;

pub mod algebra;
pub mod brst;
pub mod bv;
pub mod error;
pub mod expr;
pub mod fock;
pub mod grading;
pub mod linalg;
pub mod partitions;
pub mod qseries;
pub mod rational;
pub mod wick;

pub use algebra::{AlgebraSpec, LatticeSpec};
pub use error::{Error, Result};
pub use expr::{Factor, Monomial, OperatorExpr};
pub use grading::{BiDegree, ModeIndex};
pub use linalg::{exact_rank, exact_signature, Echelon, SparseMatrix, SparseVec};
pub use rational::Rational;
pub use wick::WickEngine;
