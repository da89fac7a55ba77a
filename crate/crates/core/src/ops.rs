//! Discrete differential and nonlinear operators on the staggered grid.
//!
//! Pairing rules that the time integrators rely on:
//!
//! * `⟨divergence(v), p⟩ = −⟨v, gradient(p)⟩` whenever `v·n = 0` on the boundary;
//! * `⟨curl_scalar(ω), v⟩ = ⟨ω, curl2d(v)⟩` whenever `ω = 0` on boundary nodes;
//! * [`laplacian_velocity`] is symmetric negative definite on no-slip fields.
//!
//! Nonlinear terms use the plain (non skew-symmetrized) forms with 2- and
//! 4-point averages between staggered locations.

use crate::field::{expect_location, FaceBc, Field, FieldError, Location, ScalarField, VectorField};
use crate::grid::StaggeredGrid;

fn same_grid(a: StaggeredGrid, b: StaggeredGrid) -> Result<(), FieldError> {
    if a != b {
        return Err(FieldError::GridMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    Ok(())
}

/// Cell-centred pressure to faces. Boundary faces get no contribution.
pub fn gradient(p: &ScalarField) -> Result<VectorField, FieldError> {
    expect_location(p.location(), Location::Centers)?;
    let g = p.grid();
    let n = g.n();
    let h = g.h();
    let pv = p.values();
    let mut out = VectorField::zeros(g, FaceBc::Free);
    {
        let c1 = out.c1_mut();
        for j in 0..n {
            for i in 1..n {
                c1[[i, j]] = (pv[[i, j]] - pv[[i - 1, j]]) / h;
            }
        }
    }
    {
        let c2 = out.c2_mut();
        for j in 1..n {
            for i in 0..n {
                c2[[i, j]] = (pv[[i, j]] - pv[[i, j - 1]]) / h;
            }
        }
    }
    Ok(out)
}

/// Conservative cell-centred divergence.
pub fn divergence(v: &VectorField) -> ScalarField {
    let g = v.grid();
    let n = g.n();
    let h = g.h();
    let (a, b) = (v.c1(), v.c2());
    let mut out = ScalarField::zeros_centers(g);
    let d = out.values_mut();
    for j in 0..n {
        for i in 0..n {
            d[[i, j]] = (a[[i + 1, j]] - a[[i, j]] + b[[i, j + 1]] - b[[i, j]]) / h;
        }
    }
    out
}

/// Scalar curl `∂x b2 − ∂y b1` at nodes; boundary nodes carry `ω = 0`.
pub fn curl2d(b: &VectorField) -> ScalarField {
    let g = b.grid();
    let n = g.n();
    let h = g.h();
    let (b1, b2) = (b.c1(), b.c2());
    let mut out = ScalarField::zeros_nodes(g);
    let w = out.values_mut();
    for j in 1..n {
        for i in 1..n {
            w[[i, j]] = (b2[[i, j]] - b2[[i - 1, j]] - b1[[i, j]] + b1[[i, j - 1]]) / h;
        }
    }
    out
}

/// `∇ × (ω ẑ) = (∂y ω, −∂x ω)` from nodes onto every face.
pub fn curl_scalar(omega: &ScalarField) -> Result<VectorField, FieldError> {
    expect_location(omega.location(), Location::Nodes)?;
    let g = omega.grid();
    let n = g.n();
    let h = g.h();
    let w = omega.values();
    let mut out = VectorField::zeros(g, FaceBc::Free);
    {
        let c1 = out.c1_mut();
        for j in 0..n {
            for i in 0..=n {
                c1[[i, j]] = (w[[i, j + 1]] - w[[i, j]]) / h;
            }
        }
    }
    {
        let c2 = out.c2_mut();
        for j in 0..=n {
            for i in 0..n {
                c2[[i, j]] = -(w[[i + 1, j]] - w[[i, j]]) / h;
            }
        }
    }
    Ok(out)
}

/// Five-point Laplacian per component with homogeneous Dirichlet walls.
///
/// The tangential wall condition uses the reflected ghost value `−v`, the
/// normal one uses the stored (zero) boundary face. Boundary faces of the
/// result are zero.
pub fn laplacian_velocity(v: &VectorField) -> VectorField {
    let g = v.grid();
    let n = g.n();
    let ih2 = 1.0 / (g.h() * g.h());
    let (a, b) = (v.c1(), v.c2());
    let mut out = VectorField::zeros(g, FaceBc::Free);
    {
        let c1 = out.c1_mut();
        for j in 0..n {
            for i in 1..n {
                let c = a[[i, j]];
                let down = if j == 0 { -c } else { a[[i, j - 1]] };
                let up = if j == n - 1 { -c } else { a[[i, j + 1]] };
                c1[[i, j]] = (a[[i + 1, j]] + a[[i - 1, j]] + up + down - 4.0 * c) * ih2;
            }
        }
    }
    {
        let c2 = out.c2_mut();
        for j in 1..n {
            for i in 0..n {
                let c = b[[i, j]];
                let left = if i == 0 { -c } else { b[[i - 1, j]] };
                let right = if i == n - 1 { -c } else { b[[i + 1, j]] };
                c2[[i, j]] = (b[[i, j + 1]] + b[[i, j - 1]] + left + right - 4.0 * c) * ih2;
            }
        }
    }
    out
}

/// `(u·∇) w` at interior faces.
///
/// Cross velocity components are 4-point averages; derivatives of `w` are
/// centred, with no-slip ghost values (`−w`) beyond the tangential walls.
pub fn convective(u: &VectorField, w: &VectorField) -> Result<VectorField, FieldError> {
    same_grid(u.grid(), w.grid())?;
    let g = u.grid();
    let n = g.n();
    let inv2h = 0.5 / g.h();
    let (u1, u2) = (u.c1(), u.c2());
    let (w1, w2) = (w.c1(), w.c2());
    let mut out = VectorField::zeros(g, FaceBc::Free);
    {
        let c1 = out.c1_mut();
        for j in 0..n {
            for i in 1..n {
                let vx = u1[[i, j]];
                let vy = 0.25 * (u2[[i - 1, j]] + u2[[i, j]] + u2[[i - 1, j + 1]] + u2[[i, j + 1]]);
                let c = w1[[i, j]];
                let down = if j == 0 { -c } else { w1[[i, j - 1]] };
                let up = if j == n - 1 { -c } else { w1[[i, j + 1]] };
                let dx = (w1[[i + 1, j]] - w1[[i - 1, j]]) * inv2h;
                let dy = (up - down) * inv2h;
                c1[[i, j]] = vx * dx + vy * dy;
            }
        }
    }
    {
        let c2 = out.c2_mut();
        for j in 1..n {
            for i in 0..n {
                let vx = 0.25 * (u1[[i, j - 1]] + u1[[i + 1, j - 1]] + u1[[i, j]] + u1[[i + 1, j]]);
                let vy = u2[[i, j]];
                let c = w2[[i, j]];
                let left = if i == 0 { -c } else { w2[[i - 1, j]] };
                let right = if i == n - 1 { -c } else { w2[[i + 1, j]] };
                let dx = (right - left) * inv2h;
                let dy = (w2[[i, j + 1]] - w2[[i, j - 1]]) * inv2h;
                c2[[i, j]] = vx * dx + vy * dy;
            }
        }
    }
    Ok(out)
}

/// `(∇×b)×b = ω (−b2, b1)` at interior faces, with `ω = curl2d(b)`.
pub fn lorentz(b: &VectorField) -> VectorField {
    let g = b.grid();
    let n = g.n();
    let omega = curl2d(b);
    let w = omega.values();
    let (b1, b2) = (b.c1(), b.c2());
    let mut out = VectorField::zeros(g, FaceBc::Free);
    {
        let c1 = out.c1_mut();
        for j in 0..n {
            for i in 1..n {
                let om = 0.5 * (w[[i, j]] + w[[i, j + 1]]);
                let b2m = 0.25 * (b2[[i - 1, j]] + b2[[i, j]] + b2[[i - 1, j + 1]] + b2[[i, j + 1]]);
                c1[[i, j]] = -om * b2m;
            }
        }
    }
    {
        let c2 = out.c2_mut();
        for j in 1..n {
            for i in 0..n {
                let om = 0.5 * (w[[i, j]] + w[[i + 1, j]]);
                let b1m = 0.25 * (b1[[i, j - 1]] + b1[[i + 1, j - 1]] + b1[[i, j]] + b1[[i + 1, j]]);
                c2[[i, j]] = om * b1m;
            }
        }
    }
    out
}

/// `∇×(b×u)` in 2D: `ψ = b1 u2 − b2 u1` at nodes, then `(∂y ψ, −∂x ψ)`.
///
/// `ψ` vanishes on boundary nodes because the velocity does.
pub fn induction_nl(b: &VectorField, u: &VectorField) -> Result<VectorField, FieldError> {
    same_grid(b.grid(), u.grid())?;
    let g = b.grid();
    let n = g.n();
    let (b1, b2) = (b.c1(), b.c2());
    let (u1, u2) = (u.c1(), u.c2());
    let mut psi = ScalarField::zeros_nodes(g);
    {
        let s = psi.values_mut();
        for j in 1..n {
            for i in 1..n {
                let b1m = 0.5 * (b1[[i, j - 1]] + b1[[i, j]]);
                let u1m = 0.5 * (u1[[i, j - 1]] + u1[[i, j]]);
                let b2m = 0.5 * (b2[[i - 1, j]] + b2[[i, j]]);
                let u2m = 0.5 * (u2[[i - 1, j]] + u2[[i, j]]);
                s[[i, j]] = b1m * u2m - b2m * u1m;
            }
        }
    }
    curl_scalar(&psi)
}

/// Discrete `∇×∇×b − ∇(∇·b)`, i.e. `−Δb` in curl/grad-div form.
///
/// Paired with a tangent field it gives `‖curl2d b‖² + ‖div b‖²`.
pub fn magnetic_operator(b: &VectorField) -> VectorField {
    let mut out = curl_scalar(&curl2d(b)).expect("curl2d yields nodes");
    let gd = gradient(&divergence(b)).expect("divergence yields centers");
    out.axpy(-1.0, &gd);
    out
}

/// `σ v − ν Δ_h v + ∇p` on interior faces: the generalized Stokes momentum operator.
pub fn stokes_momentum(v: &VectorField, p: &ScalarField, sigma: f64, nu: f64) -> Result<VectorField, FieldError> {
    same_grid(v.grid(), p.grid())?;
    let mut out = VectorField::lin_comb(sigma, v, -nu, &laplacian_velocity(v));
    out.axpy(1.0, &gradient(p)?);
    out.zero_boundary_normal();
    Ok(out.with_bc(FaceBc::Free))
}

/// `σ b + η (∇×∇×b − ∇(∇·b))` on interior faces.
pub fn magnetic_forward(b: &VectorField, sigma: f64, eta: f64) -> VectorField {
    let mut out = VectorField::lin_comb(sigma, b, eta, &magnetic_operator(b));
    out.zero_boundary_normal();
    out.with_bc(FaceBc::Free)
}
