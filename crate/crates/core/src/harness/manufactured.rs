//! Closed-form manufactured solution and the forcing that makes it exact.
//!
//! The velocity comes from the stream function `ψ = k sin²(πx) sin²(πy) cos t`
//! so it is divergence free and vanishes on the wall together with its
//! tangential part. The magnetic field `k (sin πx cos πy, −cos πx sin πy) cos t`
//! is divergence free, tangent to the wall and has `ω = 2πk sin πx sin πy cos t`,
//! which vanishes on the wall. The pressure is `k (x − ½)(y − ½) cos t / 10`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::field::{FaceBc, ScalarField, VectorField};
use crate::grid::StaggeredGrid;
use crate::stepper::{Forcing, Params, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManufacturedCase {
    pub k: f64,
    pub params: Params,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        Self {
            k: 0.01,
            params: Params::default(),
        }
    }
}

/// Spatial profiles at one point; every field is `profile · cos t`.
struct Profiles {
    u: [f64; 2],
    du: [[f64; 2]; 2],
    lap_u: [f64; 2],
    grad_p: [f64; 2],
    b: [f64; 2],
    omega: f64,
    curl_omega: [f64; 2],
}

impl ManufacturedCase {
    fn profiles(&self, x: f64, y: f64) -> Profiles {
        let k = self.k;
        let (sx, cx) = (PI * x).sin_cos();
        let (sy, cy) = (PI * y).sin_cos();
        let (s2x, c2x) = (2.0 * PI * x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * y).sin_cos();
        let pi2 = PI * PI;
        Profiles {
            u: [PI * k * sx * sx * s2y, -PI * k * s2x * sy * sy],
            // du[c][d] = ∂_d u_c
            du: [
                [pi2 * k * s2x * s2y, 2.0 * pi2 * k * sx * sx * c2y],
                [-2.0 * pi2 * k * c2x * sy * sy, -pi2 * k * s2x * s2y],
            ],
            lap_u: [
                2.0 * PI * pi2 * k * s2y * (c2x - 2.0 * sx * sx),
                -2.0 * PI * pi2 * k * s2x * (c2y - 2.0 * sy * sy),
            ],
            grad_p: [k * (y - 0.5) / 10.0, k * (x - 0.5) / 10.0],
            b: [k * sx * cy, -k * cx * sy],
            omega: 2.0 * PI * k * sx * sy,
            curl_omega: [2.0 * pi2 * k * sx * cy, -2.0 * pi2 * k * cx * sy],
        }
    }

    pub fn u(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let pr = self.profiles(x, y);
        [pr.u[0] * t.cos(), pr.u[1] * t.cos()]
    }

    pub fn p(&self, x: f64, y: f64, t: f64) -> f64 {
        self.k * (x - 0.5) * (y - 0.5) * t.cos() / 10.0
    }

    pub fn b(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let pr = self.profiles(x, y);
        [pr.b[0] * t.cos(), pr.b[1] * t.cos()]
    }

    /// Scalar curl `∂x b₂ − ∂y b₁`.
    pub fn omega(&self, x: f64, y: f64, t: f64) -> f64 {
        self.profiles(x, y).omega * t.cos()
    }

    /// `u_t + (u·∇)u − νΔu + ∇p − α(∇×b)×b`.
    pub fn forcing_u(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let pr = self.profiles(x, y);
        let (c, s) = (t.cos(), t.sin());
        let Params { nu, alpha, .. } = self.params;
        let mut f = [0.0; 2];
        for (comp, fc) in f.iter_mut().enumerate() {
            let conv = pr.u[0] * pr.du[comp][0] + pr.u[1] * pr.du[comp][1];
            // (∇×b)×b = ω (−b₂, b₁)
            let lorentz = if comp == 0 {
                -pr.omega * pr.b[1]
            } else {
                pr.omega * pr.b[0]
            };
            *fc = -s * pr.u[comp] + c * c * conv - nu * c * pr.lap_u[comp] + c * pr.grad_p[comp]
                - alpha * c * c * lorentz;
        }
        f
    }

    /// `b_t + η∇×∇×b + ∇×(b×u)`. The last term vanishes identically for this
    /// pair of fields because `b₁u₂ − b₂u₁ = 0`.
    pub fn forcing_b(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let pr = self.profiles(x, y);
        let (c, s) = (t.cos(), t.sin());
        let eta = self.params.eta;
        [
            -s * pr.b[0] + eta * c * pr.curl_omega[0],
            -s * pr.b[1] + eta * c * pr.curl_omega[1],
        ]
    }

    /// The exact solution sampled on `grid` at time `t`, with `q = exp(−t/T)`.
    pub fn exact_state(&self, grid: StaggeredGrid, t: f64) -> State {
        let u = VectorField::from_fn(
            grid,
            FaceBc::NoSlip,
            |x, y| self.u(x, y, t)[0],
            |x, y| self.u(x, y, t)[1],
        );
        let b = VectorField::from_fn(
            grid,
            FaceBc::Tangent,
            |x, y| self.b(x, y, t)[0],
            |x, y| self.b(x, y, t)[1],
        );
        let mut p = ScalarField::centers_from_fn(grid, |x, y| self.p(x, y, t));
        p.subtract_mean();
        State {
            u,
            p,
            b,
            q: (-t / self.params.t_final).exp(),
            step: 0,
            t,
        }
    }

    /// Closed-form forcing sampled on the faces of `grid`.
    pub fn forcing(&self, grid: StaggeredGrid, t: f64) -> Forcing {
        Forcing {
            fu: VectorField::from_fn(
                grid,
                FaceBc::Free,
                |x, y| self.forcing_u(x, y, t)[0],
                |x, y| self.forcing_u(x, y, t)[1],
            ),
            fb: VectorField::from_fn(
                grid,
                FaceBc::Free,
                |x, y| self.forcing_b(x, y, t)[0],
                |x, y| self.forcing_b(x, y, t)[1],
            ),
        }
    }
}
