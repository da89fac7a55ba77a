use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least {min} cells per axis, got {n}")]
    TooCoarse { n: usize, min: usize },
}

/// Uniform `n × n` marker-and-cell partition of the unit square.
///
/// Storage layout (index `[i, j]`, `i` along x):
///
/// | quantity                | position              | shape            |
/// |-------------------------|-----------------------|------------------|
/// | first vector component  | `(i h, (j + ½) h)`    | `(n + 1) × n`    |
/// | second vector component | `((i + ½) h, j h)`    | `n × (n + 1)`    |
/// | cell scalar (pressure)  | `((i + ½) h, (j + ½) h)` | `n × n`       |
/// | node scalar (curl)      | `(i h, j h)`          | `(n + 1) × (n + 1)` |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct StaggeredGrid {
    n: usize,
}

impl StaggeredGrid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(n: usize) -> Result<Self, GridError> {
        if n < Self::MIN_CELLS {
            return Err(GridError::TooCoarse {
                n,
                min: Self::MIN_CELLS,
            });
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh width, always recomputed as `1 / n`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Shape of the first face component (normal to x).
    pub fn face1_shape(&self) -> (usize, usize) {
        (self.n + 1, self.n)
    }

    /// Shape of the second face component (normal to y).
    pub fn face2_shape(&self) -> (usize, usize) {
        (self.n, self.n + 1)
    }

    pub fn center_shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    pub fn node_shape(&self) -> (usize, usize) {
        (self.n + 1, self.n + 1)
    }

    pub fn face1_position(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        (i as f64 * h, (j as f64 + 0.5) * h)
    }

    pub fn face2_position(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, j as f64 * h)
    }

    pub fn center_position(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    pub fn node_position(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        (i as f64 * h, j as f64 * h)
    }

    /// Trapezoidal end weight along one axis for an index running over `0..=n`.
    #[inline]
    pub(crate) fn end_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.n {
            0.5
        } else {
            1.0
        }
    }

    /// Number of unconstrained face values for fields with zero normal component.
    pub fn interior_face_count(&self) -> usize {
        2 * (self.n - 1) * self.n
    }
}
