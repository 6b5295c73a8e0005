//! The oriented lattice, its transition kernel and single-step sampling.
//!
//! Every other module reads the law of the walk from here: the exact
//! evolution engines ask the kernel for row coefficients, the samplers ask it
//! for neighbours by index.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A site of ℤ².
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub x1: i64,
    pub x2: i64,
}

impl Vertex {
    pub const ORIGIN: Vertex = Vertex { x1: 0, x2: 0 };

    pub const fn new(x1: i64, x2: i64) -> Self {
        Vertex { x1, x2 }
    }

    pub fn checked_offset(self, d1: i64, d2: i64) -> Result<Self> {
        match (self.x1.checked_add(d1), self.x2.checked_add(d2)) {
            (Some(x1), Some(x2)) => Ok(Vertex { x1, x2 }),
            _ => Err(Error::Overflow(self)),
        }
    }

    /// Point reflection through `c`, which must lie on the axis for the
    /// reflection to be a symmetry of ℍ.
    pub fn reflect_through(self, c: Vertex) -> Result<Self> {
        let x1 = c.x1.checked_mul(2).and_then(|v| v.checked_sub(self.x1));
        let x2 = c.x2.checked_mul(2).and_then(|v| v.checked_sub(self.x2));
        match (x1, x2) {
            (Some(x1), Some(x2)) => Ok(Vertex { x1, x2 }),
            _ => Err(Error::Overflow(self)),
        }
    }

    pub fn l1_norm(self) -> u64 {
        self.x1.unsigned_abs() + self.x2.unsigned_abs()
    }

    pub fn on_axis(self) -> bool {
        self.x2 == 0
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

impl From<(i64, i64)> for Vertex {
    fn from((x1, x2): (i64, i64)) -> Self {
        Vertex { x1, x2 }
    }
}

/// Direction of the horizontal edges on each row.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    /// ε₀ = 0 and ε_y = sgn(y): rows above the axis point right, rows below
    /// point left, the axis itself has no horizontal edge.
    #[default]
    SignRule,
    /// Explicit per-row values with a required default.
    Table { values: BTreeMap<i64, i8>, default: i8 },
}

impl Orientation {
    pub fn table(values: BTreeMap<i64, i64>, default: i64) -> Result<Self> {
        let check = |v: i64| -> Result<i8> {
            if (-1..=1).contains(&v) {
                Ok(v as i8)
            } else {
                Err(Error::InvalidOrientation(v))
            }
        };
        let values = values
            .into_iter()
            .map(|(row, v)| check(v).map(|v| (row, v)))
            .collect::<Result<_>>()?;
        Ok(Orientation::Table {
            values,
            default: check(default)?,
        })
    }

    #[inline]
    pub fn at(&self, y: i64) -> i8 {
        match self {
            Orientation::SignRule => y.signum() as i8,
            Orientation::Table { values, default } => *values.get(&y).unwrap_or(default),
        }
    }

    pub fn is_sign_rule(&self) -> bool {
        matches!(self, Orientation::SignRule)
    }
}

/// ε_y for the given orientation.
pub fn orientation_at(or: &Orientation, y: i64) -> i8 {
    or.at(y)
}

/// Transition kernel of the simple random walk on an ε-oriented lattice.
///
/// Neighbours are always listed in the order up, down, horizontal.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Kernel {
    orientation: Orientation,
}

impl Kernel {
    pub fn new(orientation: Orientation) -> Self {
        Kernel { orientation }
    }

    /// The walk on ℍ.
    pub fn sign_rule() -> Self {
        Kernel::new(Orientation::SignRule)
    }

    pub fn orientation(&self) -> &Orientation {
        &self.orientation
    }

    #[inline]
    pub fn epsilon(&self, row: i64) -> i8 {
        self.orientation.at(row)
    }

    /// d⁻ for any vertex on `row`.
    #[inline]
    pub fn row_degree(&self, row: i64) -> u32 {
        if self.epsilon(row) == 0 {
            2
        } else {
            3
        }
    }

    #[inline]
    pub fn out_degree(&self, u: Vertex) -> u32 {
        self.row_degree(u.x2)
    }

    /// Probability of each outgoing edge of a vertex on `row`.
    pub fn row_step_prob(&self, row: i64) -> Rational64 {
        Rational64::new(1, self.row_degree(row) as i64)
    }

    /// The `index`-th neighbour of `u` in (up, down, horizontal) order.
    #[inline]
    pub fn neighbor(&self, u: Vertex, index: u32) -> Result<Vertex> {
        match index {
            0 => u.checked_offset(0, 1),
            1 => u.checked_offset(0, -1),
            _ => u.checked_offset(self.epsilon(u.x2) as i64, 0),
        }
    }

    pub fn out_neighbors(&self, u: Vertex) -> Result<Vec<(Vertex, Rational64)>> {
        let d = self.out_degree(u);
        let p = Rational64::new(1, d as i64);
        (0..d).map(|i| Ok((self.neighbor(u, i)?, p))).collect()
    }

    pub fn transition_prob(&self, u: Vertex, v: Vertex) -> Rational64 {
        let d = self.out_degree(u);
        let eps = self.epsilon(u.x2) as i64;
        let dx1 = v.x1 as i128 - u.x1 as i128;
        let dx2 = v.x2 as i128 - u.x2 as i128;
        let is_edge = (dx1 == 0 && dx2.abs() == 1) || (eps != 0 && dx2 == 0 && dx1 == eps as i128);
        if is_edge {
            Rational64::new(1, d as i64)
        } else {
            Rational64::new(0, 1)
        }
    }

    /// Sample one step from `u`.
    pub fn step<R: Rng + ?Sized>(&self, u: Vertex, rng: &mut R) -> Result<Vertex> {
        let d = self.out_degree(u);
        self.neighbor(u, rng.gen_range(0..d))
    }
}
