//! Bidegrees and mode labels.

use core::fmt;
use core::ops::Add;

use crate::rational::Rational;

/// The pair (fermion degree `|v|`, weight `‖v‖`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BiDegree {
    pub fermion: i64,
    pub weight: Rational,
}

impl BiDegree {
    pub fn new(fermion: i64, weight: impl Into<Rational>) -> Self {
        BiDegree {
            fermion,
            weight: weight.into(),
        }
    }

    /// Degrees of the formal variable `z`: `|z| = 0`, `‖z‖ = -1`.
    pub fn variable() -> Self {
        BiDegree::new(0, -1)
    }

    pub fn is_odd(&self) -> bool {
        self.fermion.rem_euclid(2) == 1
    }
}

impl Add for BiDegree {
    type Output = BiDegree;
    fn add(self, rhs: BiDegree) -> BiDegree {
        BiDegree {
            fermion: self.fermion + rhs.fermion,
            weight: self.weight + rhs.weight,
        }
    }
}

impl fmt::Display for BiDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.fermion, self.weight)
    }
}

/// Integer mode label `n` of `u(n)` in `u(z) = Σ u(n) z^{-n-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex(pub i64);

impl ModeIndex {
    /// Degrees of the mode `u(n)` for an operator of degrees `op`:
    /// `‖u(n)‖ = -n - 1 + ‖u‖`, `|u(n)| = |u|`.
    pub fn degree_of(self, op: &BiDegree) -> BiDegree {
        BiDegree {
            fermion: op.fermion,
            weight: &op.weight - &Rational::from_integer(self.0 + 1),
        }
    }
}

/// Koszul sign `(-1)^{a b}`.
pub fn koszul(a: i64, b: i64) -> i64 {
    if (a * b).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}
