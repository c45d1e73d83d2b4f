//! Finite boxes `{-R, …, R}^d` used to truncate `ℓ²(Z^d)`.
//!
//! Points are enumerated lexicographically with the first coordinate most
//! significant: `index(x) = Σ_i (x_i + R) · (2R+1)^{d-1-i}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Hops leaving the box are dropped.
    Open,
    /// Hops wrap around with the same coefficient.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    dim: usize,
    radius: usize,
    boundary: Boundary,
}

impl LatticeBox {
    pub fn new(dim: usize, radius: usize, boundary: Boundary) -> Result<Self> {
        if radius < 1 {
            return Err(Error::BoxTooSmall(radius));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("box dimension must be positive".into()));
        }
        Ok(Self { dim, radius, boundary })
    }

    pub fn open(dim: usize, radius: usize) -> Result<Self> {
        Self::new(dim, radius, Boundary::Open)
    }

    pub fn periodic(dim: usize, radius: usize) -> Result<Self> {
        Self::new(dim, radius, Boundary::Periodic)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Points per axis, `2R + 1`.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index distance between neighbors along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.side().pow((self.dim - 1 - axis) as u32)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim && x.iter().all(|c| c.unsigned_abs() as usize <= self.radius)
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side();
        let r = self.radius as i64;
        Some(x.iter().fold(0usize, |acc, c| acc * side + (c + r) as usize))
    }

    pub fn point(&self, mut index: usize) -> Vec<i64> {
        let side = self.side();
        let r = self.radius as i64;
        let mut x = vec![0i64; self.dim];
        for c in x.iter_mut().rev() {
            *c = (index % side) as i64 - r;
            index /= side;
        }
        x
    }

    /// Index of `x + e_axis`, wrapping for periodic boxes.
    pub fn forward_neighbor(&self, index: usize, coord: i64, axis: usize) -> Option<usize> {
        let r = self.radius as i64;
        let stride = self.stride(axis);
        if coord < r {
            Some(index + stride)
        } else {
            match self.boundary {
                Boundary::Open => None,
                Boundary::Periodic => Some(index - 2 * self.radius * stride),
            }
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}
