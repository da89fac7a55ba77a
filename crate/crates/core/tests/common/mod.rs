#![allow(dead_code)]

pub mod consistency;
pub mod monolithic;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sav_mhd::field::{FaceBc, ScalarField, VectorField};
use sav_mhd::harness::ManufacturedCase;
use sav_mhd::StaggeredGrid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent uniform values on every stored face, with `bc` applied.
pub fn random_faces(rng: &mut ChaCha8Rng, grid: StaggeredGrid, bc: FaceBc) -> VectorField {
    let mut v = VectorField::zeros(grid, FaceBc::Free);
    v.c1_mut().mapv_inplace(|_| rng.random_range(-1.0..1.0));
    v.c2_mut().mapv_inplace(|_| rng.random_range(-1.0..1.0));
    v.with_bc(bc)
}

pub fn random_centers(rng: &mut ChaCha8Rng, grid: StaggeredGrid) -> ScalarField {
    let mut s = ScalarField::zeros_centers(grid);
    s.values_mut().mapv_inplace(|_| rng.random_range(-1.0..1.0));
    s
}

pub fn random_nodes(rng: &mut ChaCha8Rng, grid: StaggeredGrid) -> ScalarField {
    let mut s = ScalarField::zeros_nodes(grid);
    s.values_mut().mapv_inplace(|_| rng.random_range(-1.0..1.0));
    s
}

/// Composite Simpson rule on `(0,1)²` with `m` (even) panels per axis.
pub fn simpson2d(m: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    assert!(m.is_multiple_of(2));
    let h = 1.0 / m as f64;
    let w = |k: usize| {
        if k == 0 || k == m {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut acc = 0.0;
    for j in 0..=m {
        for i in 0..=m {
            acc += w(i) * w(j) * f(i as f64 * h, j as f64 * h);
        }
    }
    acc * h * h / 9.0
}

/// Forcing obtained by central finite differences of the exact fields only.
pub struct FdForcing<'a> {
    pub case: &'a ManufacturedCase,
    pub h: f64,
    pub tau: f64,
}

impl FdForcing<'_> {
    fn dx<F: Fn(f64, f64) -> f64>(&self, f: F, x: f64, y: f64) -> f64 {
        (f(x + self.h, y) - f(x - self.h, y)) / (2.0 * self.h)
    }

    fn dy<F: Fn(f64, f64) -> f64>(&self, f: F, x: f64, y: f64) -> f64 {
        (f(x, y + self.h) - f(x, y - self.h)) / (2.0 * self.h)
    }

    fn lap<F: Fn(f64, f64) -> f64>(&self, f: F, x: f64, y: f64) -> f64 {
        let h2 = self.h * self.h;
        (f(x + self.h, y) + f(x - self.h, y) + f(x, y + self.h) + f(x, y - self.h) - 4.0 * f(x, y)) / h2
    }

    fn omega(&self, x: f64, y: f64, t: f64) -> f64 {
        let c = self.case;
        self.dx(|x, y| c.b(x, y, t)[1], x, y) - self.dy(|x, y| c.b(x, y, t)[0], x, y)
    }

    pub fn f_u(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let c = self.case;
        let prm = c.params;
        let u = c.u(x, y, t);
        let b = c.b(x, y, t);
        let w = self.omega(x, y, t);
        let lorentz = [-w * b[1], w * b[0]];
        let mut out = [0.0; 2];
        for k in 0..2 {
            let comp = |x: f64, y: f64| c.u(x, y, t)[k];
            let ut = (c.u(x, y, t + self.tau)[k] - c.u(x, y, t - self.tau)[k]) / (2.0 * self.tau);
            let conv = u[0] * self.dx(comp, x, y) + u[1] * self.dy(comp, x, y);
            let gp = if k == 0 {
                self.dx(|x, y| c.p(x, y, t), x, y)
            } else {
                self.dy(|x, y| c.p(x, y, t), x, y)
            };
            out[k] = ut + conv - prm.nu * self.lap(comp, x, y) + gp - prm.alpha * lorentz[k];
        }
        out
    }

    pub fn f_b(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let c = self.case;
        let eta = c.params.eta;
        let w = |x: f64, y: f64| self.omega(x, y, t);
        let psi = |x: f64, y: f64| {
            let (b, u) = (c.b(x, y, t), c.u(x, y, t));
            b[0] * u[1] - b[1] * u[0]
        };
        let bt = |k: usize| (c.b(x, y, t + self.tau)[k] - c.b(x, y, t - self.tau)[k]) / (2.0 * self.tau);
        [
            bt(0) + eta * self.dy(w, x, y) + self.dy(psi, x, y),
            bt(1) - eta * self.dx(w, x, y) - self.dx(psi, x, y),
        ]
    }
}

/// Largest absolute gap between the closed-form forcing and its
/// finite-difference reconstruction (spacing `h` in space, `1e-6` in time)
/// at `points` random `(x, y, t)`.
pub fn forcing_oracle_worst(case: &ManufacturedCase, h: f64, points: usize, seed: u64) -> f64 {
    let fd = FdForcing { case, h, tau: 1e-6 };
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let (x, y, t) = (
            r.random_range(0.0..1.0),
            r.random_range(0.0..1.0),
            r.random_range(0.0..1.0),
        );
        let (a, b) = (case.forcing_u(x, y, t), fd.f_u(x, y, t));
        let (c, d) = (case.forcing_b(x, y, t), fd.f_b(x, y, t));
        for k in 0..2 {
            worst = worst.max((a[k] - b[k]).abs()).max((c[k] - d[k]).abs());
        }
    }
    worst
}
