//! Factor-once, solve-many direct solvers for the two constant-coefficient
//! systems of every time step.
//!
//! * generalized Stokes: `σ u − ν Δ_h u + ∇p = f`, `∇·u = 0`, `u = 0` on the wall;
//! * magnetic: `σ b + η (curl curl b − grad div b) = f`, `b·n = 0`, `ω = 0` on the wall.
//!
//! Unknowns are the unpinned face values (see [`VectorField::interior_values`])
//! followed, for Stokes, by the cell pressures. The Stokes pressure nullspace
//! is removed by replacing the continuity row of cell `(0, 0)` with `p = 0`;
//! that equation is implied by the others because the total boundary flux
//! vanishes. Pressures are returned with zero mean.
//!
//! Every solve is checked against the field operators in [`crate::ops`]; one
//! step of iterative refinement is applied when the scaled residual exceeds
//! [`RESIDUAL_TOL`].

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{FaceBc, Field, FieldError, ScalarField, VectorField};
use crate::grid::StaggeredGrid;
use crate::ops;

/// Scale-relative residual every solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-11;

const MAX_REFINEMENTS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("{name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("magnetic operator failed the positivity probe (⟨Av, v⟩ = {0})")]
    NotPositiveDefinite(f64),
    #[error("solve residual {achieved:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { achieved: f64, tolerance: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SolverError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(SolverError::InvalidParameter { name, value });
    }
    Ok(())
}

/// Identifies the `(grid, σ, coefficient)` a factorization was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub n: usize,
    sigma_bits: u64,
    coeff_bits: u64,
}

impl Fingerprint {
    pub fn new(grid: StaggeredGrid, sigma: f64, coeff: f64) -> Self {
        Self {
            n: grid.n(),
            sigma_bits: sigma.to_bits(),
            coeff_bits: coeff.to_bits(),
        }
    }

    pub fn sigma(&self) -> f64 {
        f64::from_bits(self.sigma_bits)
    }
}

/// Velocity/pressure pair returned by a Stokes solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesSolution {
    pub u: VectorField,
    pub p: ScalarField,
    /// Achieved scale-relative residual.
    pub residual: f64,
}

/// Pre-factored generalized Stokes saddle-point system.
#[derive(Debug)]
pub struct StokesSystem {
    grid: StaggeredGrid,
    sigma: f64,
    nu: f64,
    lu: Lu<usize, f64>,
}

pub fn factor_stokes(grid: StaggeredGrid, sigma: f64, nu: f64) -> Result<StokesSystem, SolverError> {
    StokesSystem::factor(grid, sigma, nu)
}

pub fn solve_stokes(sys: &StokesSystem, f: &VectorField) -> Result<StokesSolution, SolverError> {
    sys.solve(f)
}

impl StokesSystem {
    pub fn factor(grid: StaggeredGrid, sigma: f64, nu: f64) -> Result<Self, SolverError> {
        check_positive("sigma", sigma)?;
        check_positive("nu", nu)?;
        let dim = grid.interior_face_count() + grid.n() * grid.n();
        let triplets = stokes_triplets(grid, sigma, nu);
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &triplets)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        Ok(Self { grid, sigma, nu, lu })
    }

    pub fn grid(&self) -> StaggeredGrid {
        self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::new(self.grid, self.sigma, self.nu)
    }

    pub fn solve(&self, f: &VectorField) -> Result<StokesSolution, SolverError> {
        Ok(self.solve_many(&[f])?.pop().expect("one right-hand side"))
    }

    /// Solves for several right-hand sides with one pass over the factors.
    pub fn solve_many(&self, rhs: &[&VectorField]) -> Result<Vec<StokesSolution>, SolverError> {
        for f in rhs {
            if f.grid() != self.grid {
                return Err(FieldError::GridMismatch {
                    left: self.grid.n(),
                    right: f.grid().n(),
                }
                .into());
            }
        }
        let nf = self.grid.interior_face_count();
        let nc = self.grid.n() * self.grid.n();
        let mut x = Mat::<f64>::zeros(nf + nc, rhs.len());
        for (k, f) in rhs.iter().enumerate() {
            for (r, v) in f.interior_values().into_iter().enumerate() {
                x[(r, k)] = v;
            }
        }
        self.lu.solve_in_place(x.as_mut());

        let mut out = Vec::with_capacity(rhs.len());
        for (k, f) in rhs.iter().enumerate() {
            let (mut u, mut p) = self.unpack(&x, k);
            let mut residual = self.residual(f, &u, &p)?;
            let mut refinements = 0;
            while residual.0 > RESIDUAL_TOL && refinements < MAX_REFINEMENTS {
                let (du, dp) = self.correction(f, &u, &p)?;
                u.axpy(1.0, &du);
                p.axpy(1.0, &dp);
                residual = self.residual(f, &u, &p)?;
                refinements += 1;
            }
            if residual.0 > RESIDUAL_TOL {
                return Err(SolverError::ResidualTooLarge {
                    achieved: residual.0,
                    tolerance: RESIDUAL_TOL,
                });
            }
            p.subtract_mean();
            out.push(StokesSolution {
                u,
                p,
                residual: residual.0,
            });
        }
        Ok(out)
    }

    fn unpack(&self, x: &Mat<f64>, col: usize) -> (VectorField, ScalarField) {
        let g = self.grid;
        let n = g.n();
        let nf = g.interior_face_count();
        let faces: Vec<f64> = (0..nf).map(|r| x[(r, col)]).collect();
        let u = VectorField::from_interior_values(g, FaceBc::NoSlip, &faces);
        let mut p = ScalarField::zeros_centers(g);
        let pv = p.values_mut();
        for j in 0..n {
            for i in 0..n {
                pv[[i, j]] = x[(nf + i + n * j, col)];
            }
        }
        (u, p)
    }

    /// `(scaled residual, momentum residual, divergence)`.
    fn residual(
        &self,
        f: &VectorField,
        u: &VectorField,
        p: &ScalarField,
    ) -> Result<(f64, VectorField, ScalarField), SolverError> {
        let mut r = f.clone().with_bc(FaceBc::Free);
        r.zero_boundary_normal();
        r.axpy(-1.0, &ops::stokes_momentum(u, p, self.sigma, self.nu)?);
        let div = ops::divergence(u);
        let scale = f.norms().l2 + self.sigma * u.norms().l2;
        let raw = r.norms().l2.max(div.norms().l2);
        let rel = if raw == 0.0 { 0.0 } else { raw / scale };
        Ok((rel, r, div))
    }

    fn correction(
        &self,
        f: &VectorField,
        u: &VectorField,
        p: &ScalarField,
    ) -> Result<(VectorField, ScalarField), SolverError> {
        let (_, r, div) = self.residual(f, u, p)?;
        let g = self.grid;
        let n = g.n();
        let nf = g.interior_face_count();
        let mut x = Mat::<f64>::zeros(nf + n * n, 1);
        for (k, v) in r.interior_values().into_iter().enumerate() {
            x[(k, 0)] = v;
        }
        // continuity rows hold −div u; the pinned row stays zero
        for j in 0..n {
            for i in 0..n {
                if i + j > 0 {
                    x[(nf + i + n * j, 0)] = div.values()[[i, j]];
                }
            }
        }
        self.lu.solve_in_place(x.as_mut());
        Ok(self.unpack(&x, 0))
    }
}

fn stokes_triplets(grid: StaggeredGrid, sigma: f64, nu: f64) -> Vec<Triplet<usize, usize, f64>> {
    let n = grid.n();
    let h = grid.h();
    let ih = 1.0 / h;
    let visc = nu / (h * h);
    let nu1 = (n - 1) * n;
    let nf = grid.interior_face_count();
    let u1 = |i: usize, j: usize| (i - 1) + (n - 1) * j;
    let u2 = |i: usize, j: usize| nu1 + i + n * (j - 1);
    let pc = |i: usize, j: usize| nf + i + n * j;
    let pinned = pc(0, 0);

    let mut t = Vec::with_capacity(14 * nf + n * n);
    // gradient column entry plus its transposed continuity entry
    let couple = |t: &mut Vec<Triplet<usize, usize, f64>>, face: usize, cell: usize, v: f64| {
        t.push(Triplet::new(face, cell, v));
        if cell != pinned {
            t.push(Triplet::new(cell, face, v));
        }
    };

    for j in 0..n {
        for i in 1..n {
            let r = u1(i, j);
            let mut diag = sigma + 4.0 * visc;
            if i > 1 {
                t.push(Triplet::new(r, u1(i - 1, j), -visc));
            }
            if i < n - 1 {
                t.push(Triplet::new(r, u1(i + 1, j), -visc));
            }
            if j > 0 {
                t.push(Triplet::new(r, u1(i, j - 1), -visc));
            } else {
                diag += visc;
            }
            if j < n - 1 {
                t.push(Triplet::new(r, u1(i, j + 1), -visc));
            } else {
                diag += visc;
            }
            t.push(Triplet::new(r, r, diag));
            couple(&mut t, r, pc(i, j), ih);
            couple(&mut t, r, pc(i - 1, j), -ih);
        }
    }
    for j in 1..n {
        for i in 0..n {
            let r = u2(i, j);
            let mut diag = sigma + 4.0 * visc;
            if j > 1 {
                t.push(Triplet::new(r, u2(i, j - 1), -visc));
            }
            if j < n - 1 {
                t.push(Triplet::new(r, u2(i, j + 1), -visc));
            }
            if i > 0 {
                t.push(Triplet::new(r, u2(i - 1, j), -visc));
            } else {
                diag += visc;
            }
            if i < n - 1 {
                t.push(Triplet::new(r, u2(i + 1, j), -visc));
            } else {
                diag += visc;
            }
            t.push(Triplet::new(r, r, diag));
            couple(&mut t, r, pc(i, j), ih);
            couple(&mut t, r, pc(i, j - 1), -ih);
        }
    }
    t.push(Triplet::new(pinned, pinned, 1.0));
    t
}

/// Pre-factored SPD magnetic system.
#[derive(Debug)]
pub struct MagneticSystem {
    grid: StaggeredGrid,
    sigma: f64,
    eta: f64,
    llt: Llt<usize, f64>,
}

pub fn factor_magnetic(grid: StaggeredGrid, sigma: f64, eta: f64) -> Result<MagneticSystem, SolverError> {
    MagneticSystem::factor(grid, sigma, eta)
}

pub fn solve_magnetic(sys: &MagneticSystem, f: &VectorField) -> Result<MagneticSolution, SolverError> {
    sys.solve(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagneticSolution {
    pub b: VectorField,
    pub residual: f64,
}

impl MagneticSystem {
    pub fn factor(grid: StaggeredGrid, sigma: f64, eta: f64) -> Result<Self, SolverError> {
        check_positive("sigma", sigma)?;
        check_positive("eta", eta)?;
        let dim = grid.interior_face_count();
        let triplets = magnetic_triplets(grid, sigma, eta);
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &triplets)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;

        // positivity probe on a fixed pseudo-random vector
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let v = Mat::<f64>::from_fn(dim, 1, |_, _| rng.random_range(-1.0..1.0));
        let av = &mat * &v;
        let quad: f64 = (0..dim).map(|r| av[(r, 0)] * v[(r, 0)]).sum();
        if quad.is_nan() || quad <= 0.0 {
            return Err(SolverError::NotPositiveDefinite(quad));
        }

        let llt = mat
            .sp_cholesky(Side::Lower)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        Ok(Self { grid, sigma, eta, llt })
    }

    pub fn grid(&self) -> StaggeredGrid {
        self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::new(self.grid, self.sigma, self.eta)
    }

    pub fn solve(&self, f: &VectorField) -> Result<MagneticSolution, SolverError> {
        Ok(self.solve_many(&[f])?.pop().expect("one right-hand side"))
    }

    pub fn solve_many(&self, rhs: &[&VectorField]) -> Result<Vec<MagneticSolution>, SolverError> {
        for f in rhs {
            if f.grid() != self.grid {
                return Err(FieldError::GridMismatch {
                    left: self.grid.n(),
                    right: f.grid().n(),
                }
                .into());
            }
        }
        let dim = self.grid.interior_face_count();
        let mut x = Mat::<f64>::zeros(dim, rhs.len());
        for (k, f) in rhs.iter().enumerate() {
            for (r, v) in f.interior_values().into_iter().enumerate() {
                x[(r, k)] = v;
            }
        }
        self.llt.solve_in_place(x.as_mut());

        let mut out = Vec::with_capacity(rhs.len());
        for (k, f) in rhs.iter().enumerate() {
            let col: Vec<f64> = (0..dim).map(|r| x[(r, k)]).collect();
            let mut b = VectorField::from_interior_values(self.grid, FaceBc::Tangent, &col);
            let (mut residual, mut r) = self.residual(f, &b);
            let mut refinements = 0;
            while residual > RESIDUAL_TOL && refinements < MAX_REFINEMENTS {
                let mut dx = Mat::<f64>::from_fn(dim, 1, |_, _| 0.0);
                for (row, v) in r.interior_values().into_iter().enumerate() {
                    dx[(row, 0)] = v;
                }
                self.llt.solve_in_place(dx.as_mut());
                let dcol: Vec<f64> = (0..dim).map(|row| dx[(row, 0)]).collect();
                b.axpy(
                    1.0,
                    &VectorField::from_interior_values(self.grid, FaceBc::Tangent, &dcol),
                );
                (residual, r) = self.residual(f, &b);
                refinements += 1;
            }
            if residual > RESIDUAL_TOL {
                return Err(SolverError::ResidualTooLarge {
                    achieved: residual,
                    tolerance: RESIDUAL_TOL,
                });
            }
            out.push(MagneticSolution { b, residual });
        }
        Ok(out)
    }

    fn residual(&self, f: &VectorField, b: &VectorField) -> (f64, VectorField) {
        let mut r = f.clone().with_bc(FaceBc::Free);
        r.zero_boundary_normal();
        r.axpy(-1.0, &ops::magnetic_forward(b, self.sigma, self.eta));
        let raw = r.norms().l2;
        let scale = f.norms().l2 + self.sigma * b.norms().l2;
        let rel = if raw == 0.0 { 0.0 } else { raw / scale };
        (rel, r)
    }
}

/// `σ I + η (CᵀC + DᵀD)` from the row stencils of the discrete curl `C`
/// (interior nodes) and divergence `D` (cells).
fn magnetic_triplets(grid: StaggeredGrid, sigma: f64, eta: f64) -> Vec<Triplet<usize, usize, f64>> {
    let n = grid.n();
    let ih = 1.0 / grid.h();
    let nu1 = (n - 1) * n;
    let b1 = |i: usize, j: usize| (i - 1) + (n - 1) * j;
    let b2 = |i: usize, j: usize| nu1 + i + n * (j - 1);
    let dim = grid.interior_face_count();

    let mut t = Vec::with_capacity(dim + 32 * n * n);
    for r in 0..dim {
        t.push(Triplet::new(r, r, sigma));
    }
    let outer = |t: &mut Vec<Triplet<usize, usize, f64>>, row: &[(usize, f64)]| {
        for &(a, va) in row {
            for &(b, vb) in row {
                t.push(Triplet::new(a, b, eta * va * vb));
            }
        }
    };

    let mut row = Vec::with_capacity(4);
    for j in 1..n {
        for i in 1..n {
            row.clear();
            row.push((b2(i, j), ih));
            row.push((b2(i - 1, j), -ih));
            row.push((b1(i, j), -ih));
            row.push((b1(i, j - 1), ih));
            outer(&mut t, &row);
        }
    }
    for j in 0..n {
        for i in 0..n {
            row.clear();
            if i + 1 < n {
                row.push((b1(i + 1, j), ih));
            }
            if i > 0 {
                row.push((b1(i, j), -ih));
            }
            if j + 1 < n {
                row.push((b2(i, j + 1), ih));
            }
            if j > 0 {
                row.push((b2(i, j), -ih));
            }
            outer(&mut t, &row);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inner_product;

    fn grid(n: usize) -> StaggeredGrid {
        StaggeredGrid::new(n).unwrap()
    }

    #[test]
    fn rejects_nonpositive_coefficients() {
        let g = grid(8);
        assert_eq!(
            factor_stokes(g, 0.0, 0.01).unwrap_err(),
            SolverError::InvalidParameter {
                name: "sigma",
                value: 0.0
            }
        );
        assert!(factor_stokes(g, 1.0, -1.0).is_err());
        assert!(factor_magnetic(g, 1.0, 0.0).is_err());
        assert!(factor_magnetic(g, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let g = grid(8);
        let s = factor_stokes(g, 1.0, 0.01).unwrap();
        let sol = s.solve(&VectorField::zeros(g, FaceBc::Free)).unwrap();
        assert_eq!(sol.u.max_abs(), 0.0);
        assert_eq!(sol.p.max_abs(), 0.0);
        let m = factor_magnetic(g, 1.0, 0.01).unwrap();
        assert_eq!(m.solve(&VectorField::zeros(g, FaceBc::Free)).unwrap().b.max_abs(), 0.0);
    }

    #[test]
    fn pure_gradient_forcing() {
        let g = grid(8);
        let s = factor_stokes(g, 1.0, 0.01).unwrap();
        let mut p0 = ScalarField::centers_from_fn(g, |x, y| (3.0 * x).sin() + x * y * y);
        let f = ops::gradient(&p0).unwrap();
        let sol = s.solve(&f).unwrap();
        p0.subtract_mean();
        assert!(sol.u.max_abs() < 1e-12);
        let mut d = sol.p.clone();
        d.axpy(-1.0, &p0);
        assert!(d.max_abs() < 1e-12 * p0.max_abs());
        assert!(sol.residual <= RESIDUAL_TOL);
    }

    #[test]
    fn stokes_solution_is_divergence_free_and_energy_compatible() {
        let g = grid(8);
        let s = factor_stokes(g, 1.0, 0.01).unwrap();
        let f = VectorField::from_fn(g, FaceBc::Free, |x, y| (x * 5.0).cos() * y, |x, y| x * x - y);
        let sol = s.solve(&f).unwrap();
        assert!(ops::divergence(&sol.u).max_abs() < 1e-10);
        let gp = ops::gradient(&sol.p).unwrap();
        let pair = inner_product(&gp, &sol.u).unwrap();
        assert!(pair.abs() <= 1e-11 * gp.norms().l2 * sol.u.norms().l2);
    }

    #[test]
    fn fingerprints_distinguish_inputs() {
        let g = grid(8);
        let a = factor_stokes(g, 1.0, 0.01).unwrap();
        let b = factor_stokes(g, 2.0, 0.01).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), Fingerprint::new(g, 1.0, 0.01));
        assert_eq!(a.fingerprint().sigma(), 1.0);
    }

    #[test]
    fn magnetic_grid_mismatch() {
        let m = factor_magnetic(grid(8), 1.0, 0.01).unwrap();
        assert!(matches!(
            m.solve(&VectorField::zeros(grid(6), FaceBc::Free)),
            Err(SolverError::Field(FieldError::GridMismatch { .. }))
        ));
    }
}
