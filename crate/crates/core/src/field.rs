//! Staggered field storage, the weighted L² pairing and discrete norms.

use ndarray::{Array2, Zip};
use serde::Serialize;
use thiserror::Error;

use crate::grid::StaggeredGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("location mismatch: expected {expected:?}, got {found:?}")]
    LocationMismatch { expected: Location, found: Location },
    #[error("grid mismatch: {left} vs {right} cells per axis")]
    GridMismatch { left: usize, right: usize },
}

/// Where the values of a field live on the staggered grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Location {
    /// Vector field, one component per face family.
    Faces,
    Centers,
    Nodes,
}

/// Boundary behaviour carried by a face field.
///
/// Both `NoSlip` and `Tangent` pin the normal component on the boundary
/// faces to zero. They differ in how the tangential component meets the
/// wall: `NoSlip` has it vanish there (velocity), `Tangent` leaves it free
/// (magnetic field with `b·n = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FaceBc {
    NoSlip,
    Tangent,
    /// Right-hand sides and other operator outputs.
    Free,
}

/// L² and H¹-seminorm of a discrete field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldNorms {
    pub l2: f64,
    pub h1_semi: f64,
}

impl FieldNorms {
    /// Full H¹ norm, `sqrt(l2² + h1_semi²)`.
    pub fn h1(&self) -> f64 {
        self.l2.hypot(self.h1_semi)
    }
}

/// Operations every discrete field supports.
pub trait Field {
    fn grid(&self) -> StaggeredGrid;
    fn location(&self) -> Location;
    /// Quadrature-weighted L² pairing with a field at the same location.
    fn dot(&self, other: &Self) -> Result<f64, FieldError>;
    fn norms(&self) -> FieldNorms;
}

/// `⟨a, b⟩`: h²-weighted sum, half weights on boundary-constrained rows.
pub fn inner_product<F: Field>(a: &F, b: &F) -> Result<f64, FieldError> {
    a.dot(b)
}

pub fn norms<F: Field>(v: &F) -> FieldNorms {
    v.norms()
}

fn check_grid(a: StaggeredGrid, b: StaggeredGrid) -> Result<(), FieldError> {
    if a != b {
        return Err(FieldError::GridMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    Ok(())
}

pub(crate) fn expect_location(found: Location, expected: Location) -> Result<(), FieldError> {
    if found != expected {
        return Err(FieldError::LocationMismatch { expected, found });
    }
    Ok(())
}

/// Face-centred vector field: first component on x-normal faces, second on
/// y-normal faces.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: StaggeredGrid,
    bc: FaceBc,
    c1: Array2<f64>,
    c2: Array2<f64>,
}

impl VectorField {
    pub fn zeros(grid: StaggeredGrid, bc: FaceBc) -> Self {
        Self {
            grid,
            bc,
            c1: Array2::zeros(grid.face1_shape()),
            c2: Array2::zeros(grid.face2_shape()),
        }
    }

    /// Samples `(f1, f2)` at the face positions, then applies the boundary
    /// constraint of `bc`.
    pub fn from_fn(
        grid: StaggeredGrid,
        bc: FaceBc,
        f1: impl Fn(f64, f64) -> f64,
        f2: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let c1 = Array2::from_shape_fn(grid.face1_shape(), |(i, j)| {
            let (x, y) = grid.face1_position(i, j);
            f1(x, y)
        });
        let c2 = Array2::from_shape_fn(grid.face2_shape(), |(i, j)| {
            let (x, y) = grid.face2_position(i, j);
            f2(x, y)
        });
        let mut v = Self { grid, bc, c1, c2 };
        v.enforce_bc();
        v
    }

    pub fn from_components(grid: StaggeredGrid, bc: FaceBc, c1: Array2<f64>, c2: Array2<f64>) -> Self {
        assert_eq!(c1.dim(), grid.face1_shape(), "first component shape");
        assert_eq!(c2.dim(), grid.face2_shape(), "second component shape");
        Self { grid, bc, c1, c2 }
    }

    pub fn bc(&self) -> FaceBc {
        self.bc
    }

    pub fn with_bc(mut self, bc: FaceBc) -> Self {
        self.bc = bc;
        self.enforce_bc();
        self
    }

    pub fn c1(&self) -> &Array2<f64> {
        &self.c1
    }

    pub fn c2(&self) -> &Array2<f64> {
        &self.c2
    }

    pub fn c1_mut(&mut self) -> &mut Array2<f64> {
        &mut self.c1
    }

    pub fn c2_mut(&mut self) -> &mut Array2<f64> {
        &mut self.c2
    }

    /// Zeroes the normal component on the boundary unless the field is `Free`.
    pub fn enforce_bc(&mut self) {
        if self.bc != FaceBc::Free {
            self.zero_boundary_normal();
        }
    }

    /// Zeroes the values on the boundary faces (the pinned normal component).
    pub fn zero_boundary_normal(&mut self) {
        let n = self.grid.n();
        for j in 0..n {
            self.c1[[0, j]] = 0.0;
            self.c1[[n, j]] = 0.0;
        }
        for i in 0..n {
            self.c2[[i, 0]] = 0.0;
            self.c2[[i, n]] = 0.0;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        debug_assert_eq!(self.grid, other.grid);
        self.c1.scaled_add(a, &other.c1);
        self.c2.scaled_add(a, &other.c2);
    }

    pub fn scale(&mut self, a: f64) {
        self.c1.mapv_inplace(|v| v * a);
        self.c2.mapv_inplace(|v| v * a);
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `a * x + b * y`, keeping the boundary tag of `x`.
    pub fn lin_comb(a: f64, x: &VectorField, b: f64, y: &VectorField) -> VectorField {
        debug_assert_eq!(x.grid, y.grid);
        let mut c1 = x.c1.clone();
        let mut c2 = x.c2.clone();
        Zip::from(&mut c1).and(&y.c1).for_each(|c, &yv| *c = a * *c + b * yv);
        Zip::from(&mut c2).and(&y.c2).for_each(|c, &yv| *c = a * *c + b * yv);
        VectorField {
            grid: x.grid,
            bc: x.bc,
            c1,
            c2,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.c1
            .iter()
            .chain(self.c2.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Values on the faces that are not pinned by the normal boundary condition,
    /// first component then second, each in `j`-major order.
    pub fn interior_values(&self) -> Vec<f64> {
        let n = self.grid.n();
        let mut out = Vec::with_capacity(self.grid.interior_face_count());
        for j in 0..n {
            for i in 1..n {
                out.push(self.c1[[i, j]]);
            }
        }
        for j in 1..n {
            for i in 0..n {
                out.push(self.c2[[i, j]]);
            }
        }
        out
    }

    /// Inverse of [`VectorField::interior_values`]; boundary-normal values are zero.
    pub fn from_interior_values(grid: StaggeredGrid, bc: FaceBc, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.interior_face_count());
        let n = grid.n();
        let mut v = Self::zeros(grid, bc);
        let mut k = 0;
        for j in 0..n {
            for i in 1..n {
                v.c1[[i, j]] = values[k];
                k += 1;
            }
        }
        for j in 1..n {
            for i in 0..n {
                v.c2[[i, j]] = values[k];
                k += 1;
            }
        }
        v
    }

    /// Component-wise difference-quotient energy.
    ///
    /// For `NoSlip` fields the tangential wall value is zero, so the wall
    /// row contributes `(2 v / h)²` with half weight. For this choice the
    /// seminorm squared equals `⟨−Δ_h v, v⟩` exactly.
    fn h1_semi_squared(&self) -> f64 {
        let g = self.grid;
        let n = g.n();
        let h = g.h();
        let w = h * h;
        let no_slip = self.bc == FaceBc::NoSlip;
        let mut acc = 0.0;

        // first component: x-differences at centers, y-differences at nodes
        for j in 0..n {
            for i in 0..n {
                let d = (self.c1[[i + 1, j]] - self.c1[[i, j]]) / h;
                acc += w * d * d;
            }
        }
        for j in 1..n {
            for i in 0..=n {
                let d = (self.c1[[i, j]] - self.c1[[i, j - 1]]) / h;
                acc += w * g.end_weight(i) * d * d;
            }
        }
        if no_slip {
            for i in 0..=n {
                for wall in [self.c1[[i, 0]], self.c1[[i, n - 1]]] {
                    let d = 2.0 * wall / h;
                    acc += 0.5 * w * g.end_weight(i) * d * d;
                }
            }
        }

        // second component, mirrored
        for j in 0..n {
            for i in 0..n {
                let d = (self.c2[[i, j + 1]] - self.c2[[i, j]]) / h;
                acc += w * d * d;
            }
        }
        for j in 0..=n {
            for i in 1..n {
                let d = (self.c2[[i, j]] - self.c2[[i - 1, j]]) / h;
                acc += w * g.end_weight(j) * d * d;
            }
        }
        if no_slip {
            for j in 0..=n {
                for wall in [self.c2[[0, j]], self.c2[[n - 1, j]]] {
                    let d = 2.0 * wall / h;
                    acc += 0.5 * w * g.end_weight(j) * d * d;
                }
            }
        }
        acc
    }
}

impl Field for VectorField {
    fn grid(&self) -> StaggeredGrid {
        self.grid
    }

    fn location(&self) -> Location {
        Location::Faces
    }

    fn dot(&self, other: &Self) -> Result<f64, FieldError> {
        check_grid(self.grid, other.grid)?;
        let g = self.grid;
        let n = g.n();
        let w = g.h() * g.h();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..=n {
                acc += g.end_weight(i) * self.c1[[i, j]] * other.c1[[i, j]];
            }
        }
        for j in 0..=n {
            for i in 0..n {
                acc += g.end_weight(j) * self.c2[[i, j]] * other.c2[[i, j]];
            }
        }
        Ok(w * acc)
    }

    fn norms(&self) -> FieldNorms {
        let l2 = self.dot(self).expect("same grid").max(0.0).sqrt();
        FieldNorms {
            l2,
            h1_semi: self.h1_semi_squared().sqrt(),
        }
    }
}

/// Scalar field at cell centres or grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: StaggeredGrid,
    location: Location,
    values: Array2<f64>,
}

impl ScalarField {
    pub fn zeros_centers(grid: StaggeredGrid) -> Self {
        Self {
            grid,
            location: Location::Centers,
            values: Array2::zeros(grid.center_shape()),
        }
    }

    pub fn zeros_nodes(grid: StaggeredGrid) -> Self {
        Self {
            grid,
            location: Location::Nodes,
            values: Array2::zeros(grid.node_shape()),
        }
    }

    pub fn centers_from_fn(grid: StaggeredGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.center_shape(), |(i, j)| {
            let (x, y) = grid.center_position(i, j);
            f(x, y)
        });
        Self {
            grid,
            location: Location::Centers,
            values,
        }
    }

    pub fn nodes_from_fn(grid: StaggeredGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.node_shape(), |(i, j)| {
            let (x, y) = grid.node_position(i, j);
            f(x, y)
        });
        Self {
            grid,
            location: Location::Nodes,
            values,
        }
    }

    pub fn from_values(grid: StaggeredGrid, location: Location, values: Array2<f64>) -> Self {
        let shape = match location {
            Location::Centers => grid.center_shape(),
            Location::Nodes => grid.node_shape(),
            Location::Faces => panic!("scalar fields live at centers or nodes"),
        };
        assert_eq!(values.dim(), shape);
        Self { grid, location, values }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    /// Position of value `[i, j]` in the unit square.
    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        match self.location {
            Location::Centers => self.grid.center_position(i, j),
            _ => self.grid.node_position(i, j),
        }
    }

    /// Quadrature mean over the unit square.
    pub fn mean(&self) -> f64 {
        let ones = match self.location {
            Location::Centers => ScalarField::centers_from_fn(self.grid, |_, _| 1.0),
            _ => ScalarField::nodes_from_fn(self.grid, |_, _| 1.0),
        };
        self.dot(&ones).expect("same location")
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        self.values.mapv_inplace(|v| v - m);
    }

    /// Zeroes the boundary nodes; no-op for cell fields.
    pub fn zero_boundary_nodes(&mut self) {
        if self.location != Location::Nodes {
            return;
        }
        let n = self.grid.n();
        for k in 0..=n {
            self.values[[0, k]] = 0.0;
            self.values[[n, k]] = 0.0;
            self.values[[k, 0]] = 0.0;
            self.values[[k, n]] = 0.0;
        }
    }

    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.location, other.location);
        self.values.scaled_add(a, &other.values);
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| v * a);
        out
    }

    pub fn lin_comb(a: f64, x: &ScalarField, b: f64, y: &ScalarField) -> ScalarField {
        let mut out = x.scaled(a);
        out.axpy(b, y);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        match self.location {
            Location::Centers => 1.0,
            _ => self.grid.end_weight(i) * self.grid.end_weight(j),
        }
    }
}

impl Field for ScalarField {
    fn grid(&self) -> StaggeredGrid {
        self.grid
    }

    fn location(&self) -> Location {
        self.location
    }

    fn dot(&self, other: &Self) -> Result<f64, FieldError> {
        check_grid(self.grid, other.grid)?;
        expect_location(other.location, self.location)?;
        let h = self.grid.h();
        let (nx, ny) = self.values.dim();
        let mut acc = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                acc += self.weight(i, j) * self.values[[i, j]] * other.values[[i, j]];
            }
        }
        Ok(h * h * acc)
    }

    fn norms(&self) -> FieldNorms {
        let l2 = self.dot(self).expect("same field").max(0.0).sqrt();
        let g = self.grid;
        let h = g.h();
        let w = h * h;
        let (nx, ny) = self.values.dim();
        let v = &self.values;
        let mut acc = 0.0;
        match self.location {
            Location::Centers => {
                for j in 0..ny {
                    for i in 1..nx {
                        let d = (v[[i, j]] - v[[i - 1, j]]) / h;
                        acc += w * d * d;
                    }
                }
                for j in 1..ny {
                    for i in 0..nx {
                        let d = (v[[i, j]] - v[[i, j - 1]]) / h;
                        acc += w * d * d;
                    }
                }
            }
            _ => {
                for j in 0..ny {
                    for i in 1..nx {
                        let d = (v[[i, j]] - v[[i - 1, j]]) / h;
                        acc += w * g.end_weight(j) * d * d;
                    }
                }
                for j in 1..ny {
                    for i in 0..nx {
                        let d = (v[[i, j]] - v[[i, j - 1]]) / h;
                        acc += w * g.end_weight(i) * d * d;
                    }
                }
            }
        }
        FieldNorms {
            l2,
            h1_semi: acc.sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> StaggeredGrid {
        StaggeredGrid::new(n).unwrap()
    }

    #[test]
    fn pairing_with_zero_vanishes() {
        let g = grid(8);
        let v = VectorField::from_fn(g, FaceBc::Free, |x, y| x + y, |x, y| x * y);
        let z = VectorField::zeros(g, FaceBc::Free);
        assert_eq!(inner_product(&z, &v).unwrap(), 0.0);
    }

    #[test]
    fn unit_area() {
        let g = grid(8);
        let one = ScalarField::centers_from_fn(g, |_, _| 1.0);
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-15);
        let one = ScalarField::nodes_from_fn(g, |_, _| 1.0);
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-15);
        let ones = VectorField::from_fn(g, FaceBc::Free, |_, _| 1.0, |_, _| 0.0);
        assert!((inner_product(&ones, &ones).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sine_product_approaches_quarter() {
        let f = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        // the midpoint rule integrates sin² exactly on a uniform partition
        let s = ScalarField::centers_from_fn(grid(8), f);
        assert!((inner_product(&s, &s).unwrap() - 0.25).abs() < 1e-14);
        let g = |x: f64, y: f64| (x + y).exp();
        let exact = ((2.0f64.exp() - 1.0) / 2.0).powi(2);
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32, 64] {
            let s = ScalarField::centers_from_fn(grid(n), g);
            let err = (inner_product(&s, &s).unwrap() - exact).abs();
            assert!(err < prev / 3.5);
            prev = err;
        }
        // trapezoid on nodes is exact for this product of sines
        let s = ScalarField::nodes_from_fn(grid(16), f);
        assert!((inner_product(&s, &s).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = grid(8);
        let z = VectorField::zeros(g, FaceBc::NoSlip);
        assert_eq!(norms(&z), FieldNorms { l2: 0.0, h1_semi: 0.0 });
        let c = ScalarField::centers_from_fn(g, |_, _| -3.0);
        let nc = norms(&c);
        assert!((nc.l2 - 3.0).abs() < 1e-14);
        assert_eq!(nc.h1_semi, 0.0);
    }

    #[test]
    fn mismatched_locations_are_rejected() {
        let g = grid(8);
        let a = ScalarField::zeros_centers(g);
        let b = ScalarField::zeros_nodes(g);
        assert_eq!(
            inner_product(&a, &b),
            Err(FieldError::LocationMismatch {
                expected: Location::Centers,
                found: Location::Nodes
            })
        );
        let c = ScalarField::zeros_centers(grid(9));
        assert!(matches!(inner_product(&a, &c), Err(FieldError::GridMismatch { .. })));
    }

    #[test]
    fn interior_value_roundtrip() {
        let g = grid(6);
        let v = VectorField::from_fn(g, FaceBc::NoSlip, |x, y| x * y + 1.0, |x, y| x - y);
        let w = VectorField::from_interior_values(g, FaceBc::NoSlip, &v.interior_values());
        assert_eq!(v, w);
    }

    #[test]
    fn mean_projection() {
        let g = grid(8);
        let mut p = ScalarField::centers_from_fn(g, |x, y| x * x + 3.0 * y);
        p.subtract_mean();
        assert!(p.mean().abs() < 1e-15);
    }
}
