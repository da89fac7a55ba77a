//! Direct dense solve of one fully coupled SAV step.
//!
//! The unknowns `(u, p, b, q, λ)` are solved together from the step
//! equations as written, with no splitting. The matrix is built by applying
//! the field operators to unit vectors, and `λ` is a multiplier that pins the
//! pressure sum to zero.

use nalgebra::{DMatrix, DVector};
use sav_mhd::field::{inner_product, FaceBc, Field, ScalarField, VectorField};
use sav_mhd::ops;
use sav_mhd::stepper::{Forcing, Params, SchemeOrder, State};
use sav_mhd::StaggeredGrid;

pub struct Monolithic {
    pub u: VectorField,
    pub p: ScalarField,
    pub b: VectorField,
    pub q: f64,
}

/// Time-level data entering one step of either scheme.
struct StepData {
    sigma: f64,
    q_mass: f64,
    rhs_u: VectorField,
    rhs_b: VectorField,
    rhs_q: f64,
    conv: VectorField,
    lor: VectorField,
    ind: VectorField,
    growth: f64,
}

/// `state` is level n; `prev` is level n−1 for BDF2 and ignored otherwise.
pub fn solve(
    order: SchemeOrder,
    state: &State,
    prev: Option<&State>,
    params: &Params,
    dt: f64,
    forcing: Option<&Forcing>,
) -> Monolithic {
    let g = state.u.grid();
    let t_new = (state.step + 1) as f64 * dt;
    let growth = (t_new / params.t_final).exp();
    let data = match order {
        SchemeOrder::First => {
            let (ub, bb) = (&state.u, &state.b);
            StepData {
                sigma: 1.0 / dt,
                q_mass: 1.0 / dt + 1.0 / params.t_final,
                rhs_u: state.u.scaled(1.0 / dt),
                rhs_b: state.b.scaled(1.0 / dt),
                rhs_q: state.q / dt,
                conv: ops::convective(ub, ub).unwrap(),
                lor: ops::lorentz(bb),
                ind: ops::induction_nl(bb, ub).unwrap(),
                growth,
            }
        }
        SchemeOrder::Second => {
            let prev = prev.expect("BDF2 needs two levels");
            let ub = VectorField::lin_comb(2.0, &state.u, -1.0, &prev.u);
            let bb = VectorField::lin_comb(2.0, &state.b, -1.0, &prev.b);
            StepData {
                sigma: 1.5 / dt,
                q_mass: 1.5 / dt + 1.0 / params.t_final,
                rhs_u: VectorField::lin_comb(2.0 / dt, &state.u, -0.5 / dt, &prev.u),
                rhs_b: VectorField::lin_comb(2.0 / dt, &state.b, -0.5 / dt, &prev.b),
                rhs_q: (4.0 * state.q - prev.q) / (2.0 * dt),
                conv: ops::convective(&ub, &ub).unwrap(),
                lor: ops::lorentz(&bb),
                ind: ops::induction_nl(&bb, &ub).unwrap(),
                growth,
            }
        }
    };
    let mut data = data;
    if let Some(f) = forcing {
        data.rhs_u.axpy(1.0, &f.fu);
        data.rhs_b.axpy(1.0, &f.fb);
    }
    assemble_and_solve(g, params, &data)
}

fn assemble_and_solve(g: StaggeredGrid, params: &Params, d: &StepData) -> Monolithic {
    let n = g.n();
    let nf = g.interior_face_count();
    let nc = n * n;
    let (iu, ip, ib, iq, il) = (0, nf, nf + nc, 2 * nf + nc, 2 * nf + nc + 1);
    let dim = il + 1;
    let alpha = params.alpha;
    let n_u = VectorField::lin_comb(alpha, &d.lor, -1.0, &d.conv);
    let n_b = d.ind.scaled(-1.0);

    let split = |x: &[f64]| {
        let u = VectorField::from_interior_values(g, FaceBc::NoSlip, &x[iu..iu + nf]);
        let mut p = ScalarField::zeros_centers(g);
        for j in 0..n {
            for i in 0..n {
                p.values_mut()[[i, j]] = x[ip + i + n * j];
            }
        }
        let b = VectorField::from_interior_values(g, FaceBc::Tangent, &x[ib..ib + nf]);
        (u, p, b, x[iq], x[il])
    };

    // applies the homogeneous part of the coupled step equations
    let apply = |x: &[f64]| -> Vec<f64> {
        let (u, p, b, q, lambda) = split(x);
        let s = d.growth * q;
        let mut ru = u.scaled(d.sigma);
        ru.axpy(-params.nu, &ops::laplacian_velocity(&u));
        ru.axpy(1.0, &ops::gradient(&p).unwrap());
        ru.axpy(-s, &n_u);
        let div = ops::divergence(&u);
        let mut rb = b.scaled(d.sigma);
        rb.axpy(params.eta, &ops::magnetic_operator(&b));
        rb.axpy(-s, &n_b);
        let pairing = inner_product(&d.conv, &u).unwrap() - alpha * inner_product(&d.lor, &u).unwrap()
            + alpha * inner_product(&d.ind, &b).unwrap();
        let mut out = Vec::with_capacity(dim);
        out.extend(ru.interior_values());
        for j in 0..n {
            for i in 0..n {
                out.push(-div.values()[[i, j]] + lambda);
            }
        }
        out.extend(rb.interior_values());
        out.push(d.q_mass * q - d.growth * pairing);
        out.push(p.values().sum());
        out
    };

    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for col in 0..dim {
        e[col] = 1.0;
        for (row, v) in apply(&e).into_iter().enumerate() {
            a[(row, col)] = v;
        }
        e[col] = 0.0;
    }
    let mut rhs = DVector::<f64>::zeros(dim);
    for (k, v) in d.rhs_u.interior_values().into_iter().enumerate() {
        rhs[iu + k] = v;
    }
    for (k, v) in d.rhs_b.interior_values().into_iter().enumerate() {
        rhs[ib + k] = v;
    }
    rhs[iq] = d.rhs_q;

    let x = a.lu().solve(&rhs).expect("coupled system is nonsingular");
    let (u, p, b, q, _) = split(x.as_slice());
    Monolithic { u, p, b, q }
}
