//! Operator checks shared by the operator tests and the acceptance suite.

use std::f64::consts::PI;

use sav_mhd::field::{inner_product, FaceBc, Field, ScalarField, VectorField};
use sav_mhd::harness::ManufacturedCase;
use sav_mhd::ops;
use sav_mhd::StaggeredGrid;

pub const GRIDS: [usize; 4] = [16, 32, 64, 128];

/// Worst relative mismatch of `⟨div v, p⟩ = −⟨v, grad p⟩` and of
/// `⟨curl_scalar ω, v⟩ = ⟨ω, curl2d v⟩` over `trials` random fields.
pub fn adjointness(seed: u64, trials: usize) -> (f64, f64) {
    let mut r = super::rng(seed);
    let (mut worst_div, mut worst_curl) = (0.0f64, 0.0f64);
    for trial in 0..trials {
        let g = StaggeredGrid::new(4 + trial % 13).unwrap();
        let v = super::random_faces(&mut r, g, FaceBc::NoSlip);
        let p = super::random_centers(&mut r, g);
        let div = ops::divergence(&v);
        let lhs = inner_product(&div, &p).unwrap();
        let rhs = -inner_product(&v, &ops::gradient(&p).unwrap()).unwrap();
        worst_div = worst_div.max((lhs - rhs).abs() / (div.norms().l2 * p.norms().l2));

        let b = super::random_faces(&mut r, g, FaceBc::Tangent);
        let mut w = super::random_nodes(&mut r, g);
        w.zero_boundary_nodes();
        let curl = ops::curl2d(&b);
        let lhs = inner_product(&ops::curl_scalar(&w).unwrap(), &b).unwrap();
        let rhs = inner_product(&w, &curl).unwrap();
        worst_curl = worst_curl.max((lhs - rhs).abs() / (w.norms().l2 * curl.norms().l2));
    }
    (worst_div, worst_curl)
}

/// `log2` ratios of consecutive errors.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

// fourth-order central differences; accurate to ~1e-10 for these fields
const FD_H: f64 = 1e-3;

fn d_dx(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
    let h = FD_H;
    (-f(x + 2.0 * h, y) + 8.0 * f(x + h, y) - 8.0 * f(x - h, y) + f(x - 2.0 * h, y)) / (12.0 * h)
}

fn d_dy(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
    d_dx(|a, b| f(b, a), y, x)
}

fn d2_dx2(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
    let h = FD_H;
    (-f(x + 2.0 * h, y) + 16.0 * f(x + h, y) - 30.0 * f(x, y) + 16.0 * f(x - h, y) - f(x - 2.0 * h, y)) / (12.0 * h * h)
}

fn lap(f: impl Fn(f64, f64) -> f64 + Copy, x: f64, y: f64) -> f64 {
    d2_dx2(f, x, y) + d2_dx2(|a, b| f(b, a), y, x)
}

/// Max error over the faces not pinned by the normal boundary condition.
pub fn face_error(v: &VectorField, exact: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
    let g = v.grid();
    let n = g.n();
    let mut err = 0.0f64;
    for j in 0..n {
        for i in 1..n {
            let (x, y) = g.face1_position(i, j);
            err = err.max((v.c1()[[i, j]] - exact(x, y)[0]).abs());
        }
    }
    for j in 1..n {
        for i in 0..n {
            let (x, y) = g.face2_position(i, j);
            err = err.max((v.c2()[[i, j]] - exact(x, y)[1]).abs());
        }
    }
    err
}

fn scalar_error(s: &ScalarField, exact: impl Fn(f64, f64) -> f64, interior_only: bool) -> f64 {
    let (ni, nj) = s.values().dim();
    let skip = usize::from(interior_only);
    let mut err = 0.0f64;
    for j in skip..nj - skip {
        for i in skip..ni - skip {
            let (x, y) = s.position(i, j);
            err = err.max((s.values()[[i, j]] - exact(x, y)).abs());
        }
    }
    err
}

fn study(f: impl Fn(StaggeredGrid) -> f64) -> Vec<f64> {
    GRIDS.iter().map(|&n| f(StaggeredGrid::new(n).unwrap())).collect()
}

/// Max-norm errors of every spatial operator on smooth fields over [`GRIDS`],
/// against fourth-order finite differences of the closed forms.
pub fn operator_studies() -> Vec<(&'static str, Vec<f64>)> {
    let case = ManufacturedCase::default();
    let u = |x, y| case.u(x, y, 0.0);
    let b = |x, y| case.b(x, y, 0.0);
    let mut out = Vec::new();

    let p = |x: f64, y: f64| (PI * x).cos() * (2.0 * y).sin() + x * y * y;
    out.push((
        "gradient",
        study(|g| {
            let gp = ops::gradient(&ScalarField::centers_from_fn(g, p)).unwrap();
            face_error(&gp, |x, y| [d_dx(p, x, y), d_dy(p, x, y)])
        }),
    ));

    let v = |x: f64, y: f64| [(2.0 * x + y).sin(), (x - 3.0 * y).cos()];
    out.push((
        "divergence",
        study(|g| {
            let f = VectorField::from_fn(g, FaceBc::Free, |x, y| v(x, y)[0], |x, y| v(x, y)[1]);
            scalar_error(
                &ops::divergence(&f),
                |x, y| d_dx(|x, y| v(x, y)[0], x, y) + d_dy(|x, y| v(x, y)[1], x, y),
                false,
            )
        }),
    ));

    out.push((
        "curl2d",
        study(|g| {
            let w = ops::curl2d(&case.exact_state(g, 0.0).b);
            scalar_error(
                &w,
                |x, y| d_dx(|x, y| b(x, y)[1], x, y) - d_dy(|x, y| b(x, y)[0], x, y),
                true,
            )
        }),
    ));

    let om = |x, y| case.omega(x, y, 0.0);
    out.push((
        "curl_scalar",
        study(|g| {
            let c = ops::curl_scalar(&ScalarField::nodes_from_fn(g, om)).unwrap();
            face_error(&c, |x, y| [d_dy(om, x, y), -d_dx(om, x, y)])
        }),
    ));

    out.push((
        "laplacian_velocity",
        study(|g| {
            let l = ops::laplacian_velocity(&case.exact_state(g, 0.0).u);
            face_error(&l, |x, y| [lap(|x, y| u(x, y)[0], x, y), lap(|x, y| u(x, y)[1], x, y)])
        }),
    ));

    out.push((
        "convective",
        study(|g| {
            let s = case.exact_state(g, 0.0);
            let c = ops::convective(&s.u, &s.u).unwrap();
            face_error(&c, |x, y| {
                let w = u(x, y);
                let comp = |k: usize| w[0] * d_dx(|x, y| u(x, y)[k], x, y) + w[1] * d_dy(|x, y| u(x, y)[k], x, y);
                [comp(0), comp(1)]
            })
        }),
    ));

    out.push((
        "lorentz",
        study(|g| {
            let l = ops::lorentz(&case.exact_state(g, 0.0).b);
            face_error(&l, |x, y| {
                let w = d_dx(|x, y| b(x, y)[1], x, y) - d_dy(|x, y| b(x, y)[0], x, y);
                let bb = b(x, y);
                [-w * bb[1], w * bb[0]]
            })
        }),
    ));

    // the manufactured pair has b₁u₂ − b₂u₁ ≡ 0, so use another magnetic field
    let bf = |x: f64, y: f64| [(PI * x).sin() * (y + 1.0), x * (PI * y).sin()];
    let psi = |x: f64, y: f64| {
        let (bb, uu) = (bf(x, y), u(x, y));
        bb[0] * uu[1] - bb[1] * uu[0]
    };
    out.push((
        "induction_nl",
        study(|g| {
            let bb = VectorField::from_fn(g, FaceBc::Tangent, |x, y| bf(x, y)[0], |x, y| bf(x, y)[1]);
            let r = ops::induction_nl(&bb, &case.exact_state(g, 0.0).u).unwrap();
            face_error(&r, |x, y| [d_dy(psi, x, y), -d_dx(psi, x, y)])
        }),
    ));
    out
}
