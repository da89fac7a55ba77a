//! First-order (backward Euler) and second-order (BDF2) IMEX SAV steps.
//!
//! Each step evaluates the nonlinear terms once at the extrapolated state,
//! solves two generalized Stokes and two magnetic problems against
//! pre-factored operators, and closes the system with one scalar equation
//! for `S = exp(t/T) q`.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::field::{inner_product, FaceBc, Field, FieldError, ScalarField, VectorField};
use crate::grid::StaggeredGrid;
use crate::ops;
use crate::solver::{Fingerprint, MagneticSystem, SolverError, StokesSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("{name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("factorization was built for σ = {built}, this step needs σ = {needed}")]
    OperatorMismatch { built: f64, needed: f64 },
    #[error("states are not consecutive (steps {older} and {newer})")]
    NonConsecutive { older: u64, newer: u64 },
    #[error("scalar closure is singular: denominator {denominator:.3e} below {threshold:.3e}")]
    SingularClosure { denominator: f64, threshold: f64 },
    #[error("non-finite value in the scalar closure at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn check_positive(name: &'static str, value: f64) -> Result<(), StepError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(StepError::InvalidParameter { name, value });
    }
    Ok(())
}

/// Physical parameters: viscosity, magnetic diffusivity, coupling constant
/// and the time scale `T` of the auxiliary variable `q(t) = exp(−t/T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub nu: f64,
    pub eta: f64,
    pub alpha: f64,
    pub t_final: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            nu: 0.01,
            eta: 0.01,
            alpha: 1.0,
            t_final: 1.0,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), StepError> {
        check_positive("nu", self.nu)?;
        check_positive("eta", self.eta)?;
        check_positive("alpha", self.alpha)?;
        check_positive("t_final", self.t_final)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SchemeOrder {
    First,
    Second,
}

impl SchemeOrder {
    /// Mass coefficient of the implicit operators for step size `dt`.
    pub fn sigma(self, dt: f64) -> f64 {
        match self {
            SchemeOrder::First => 1.0 / dt,
            SchemeOrder::Second => 3.0 / (2.0 * dt),
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            SchemeOrder::First => 1,
            SchemeOrder::Second => 2,
        }
    }
}

/// One time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: VectorField,
    pub p: ScalarField,
    pub b: VectorField,
    pub q: f64,
    /// Time index; the time itself is `step · Δt`.
    pub step: u64,
    pub t: f64,
}

impl State {
    /// Initial level with `q = 1`, zero pressure and boundary conditions enforced.
    pub fn initial(mut u: VectorField, mut b: VectorField) -> Self {
        let grid = u.grid();
        u = u.with_bc(FaceBc::NoSlip);
        b = b.with_bc(FaceBc::Tangent);
        Self {
            u,
            p: ScalarField::zeros_centers(grid),
            b,
            q: 1.0,
            step: 0,
            t: 0.0,
        }
    }

    pub fn zero(grid: StaggeredGrid, q: f64) -> Self {
        Self {
            u: VectorField::zeros(grid, FaceBc::NoSlip),
            p: ScalarField::zeros_centers(grid),
            b: VectorField::zeros(grid, FaceBc::Tangent),
            q,
            step: 0,
            t: 0.0,
        }
    }

    pub fn grid(&self) -> StaggeredGrid {
        self.u.grid()
    }
}

/// Body forces added to the implicit side of the momentum and induction equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub fu: VectorField,
    pub fb: VectorField,
}

/// The three dissipation terms of the discrete energy law.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Dissipation {
    /// `ν Δt |u|²_{H¹}`
    pub viscous: f64,
    /// `η α Δt (‖curl b‖² + ‖div b‖²)`
    pub magnetic: f64,
    /// `(Δt/T) q²`
    pub auxiliary: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.viscous + self.magnetic + self.auxiliary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub step: u64,
    pub t: f64,
    /// `½‖u‖² + α/2 ‖b‖² + ½q²` of the new level.
    pub energy: f64,
    /// BDF2 modified energy of the new pair of levels (second-order steps only).
    pub modified_energy: Option<f64>,
    pub dissipation: Dissipation,
    pub a1: f64,
    pub a2: f64,
    /// Coefficient of `q^{n+1}` in the scalar closure, scaled by `exp(−2t/T)`:
    /// `exp(−2t/T)·mass − A₂`.
    pub s_denominator: f64,
    /// `exp(t/T)·q`. Without nonlinear terms it scales nothing and may
    /// overflow to infinity on very long runs.
    pub s: f64,
    /// Largest scale-relative residual among the four linear solves.
    pub max_residual: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Pre-factored Stokes and magnetic systems for one `(grid, Δt, order)`.
#[derive(Debug)]
pub struct FactoredOperators {
    grid: StaggeredGrid,
    dt: f64,
    order: SchemeOrder,
    stokes: StokesSystem,
    magnetic: MagneticSystem,
}

impl FactoredOperators {
    pub fn new(grid: StaggeredGrid, params: &Params, dt: f64, order: SchemeOrder) -> Result<Self, StepError> {
        params.validate()?;
        check_positive("dt", dt)?;
        let sigma = order.sigma(dt);
        Ok(Self {
            grid,
            dt,
            order,
            stokes: StokesSystem::factor(grid, sigma, params.nu)?,
            magnetic: MagneticSystem::factor(grid, sigma, params.eta)?,
        })
    }

    pub fn grid(&self) -> StaggeredGrid {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn order(&self) -> SchemeOrder {
        self.order
    }

    pub fn stokes(&self) -> &StokesSystem {
        &self.stokes
    }

    pub fn magnetic(&self) -> &MagneticSystem {
        &self.magnetic
    }

    fn check(&self, params: &Params, dt: f64, order: SchemeOrder) -> Result<(), StepError> {
        let sigma = order.sigma(dt);
        let fits = self.stokes.fingerprint() == Fingerprint::new(self.grid, sigma, params.nu)
            && self.magnetic.fingerprint() == Fingerprint::new(self.grid, sigma, params.eta);
        if !fits {
            return Err(StepError::OperatorMismatch {
                built: self.stokes.sigma(),
                needed: sigma,
            });
        }
        Ok(())
    }
}

/// `½‖u‖² + α/2 ‖b‖² + ½q²`.
pub fn energy(state: &State, params: &Params) -> f64 {
    0.5 * state.u.norms().l2.powi(2) + 0.5 * params.alpha * state.b.norms().l2.powi(2) + 0.5 * state.q * state.q
}

/// `¼(‖u‖² + α‖b‖² + q²) + ¼(‖2u − uⁿ‖² + α‖2b − bⁿ‖² + (2q − qⁿ)²)` for
/// the pair (`new`, `old`) of consecutive levels.
pub fn modified_energy_bdf2(new: &State, old: &State, params: &Params) -> f64 {
    let du = VectorField::lin_comb(2.0, &new.u, -1.0, &old.u);
    let db = VectorField::lin_comb(2.0, &new.b, -1.0, &old.b);
    let dq = 2.0 * new.q - old.q;
    let sq = |v: &VectorField| v.norms().l2.powi(2);
    0.25 * (sq(&new.u) + params.alpha * sq(&new.b) + new.q * new.q)
        + 0.25 * (sq(&du) + params.alpha * sq(&db) + dq * dq)
}

pub fn dissipation_report(state: &State, params: &Params, dt: f64) -> Dissipation {
    let curl = ops::curl2d(&state.b).norms().l2;
    let div = ops::divergence(&state.b).norms().l2;
    Dissipation {
        viscous: params.nu * dt * state.u.norms().h1_semi.powi(2),
        magnetic: params.eta * params.alpha * dt * (curl * curl + div * div),
        auxiliary: dt / params.t_final * state.q * state.q,
    }
}

/// Advances `state` by one backward-Euler SAV step.
///
/// `forcing`, if given, is evaluated at the new time level. `factored` must have
/// been built with [`SchemeOrder::First`] for the same `dt`.
pub fn step_first_order(
    state: &State,
    params: &Params,
    dt: f64,
    forcing: Option<&Forcing>,
    factored: &FactoredOperators,
) -> Result<(State, StepReport), StepError> {
    params.validate()?;
    check_positive("dt", dt)?;
    factored.check(params, dt, SchemeOrder::First)?;
    let rhs_u = state.u.scaled(1.0 / dt);
    let rhs_b = state.b.scaled(1.0 / dt);
    let closure = Closure {
        mass: 1.0 / dt + 1.0 / params.t_final,
        history: state.q / dt,
    };
    split_step(
        &state.u, &state.b, rhs_u, rhs_b, closure, state.step, params, dt, forcing, factored,
    )
}

/// Advances the pair (`prev`, `state`) by one BDF2 SAV step.
///
/// `factored` must have been built with [`SchemeOrder::Second`]; the first step of
/// a run is taken with [`step_first_order`].
pub fn step_second_order(
    state: &State,
    prev: &State,
    params: &Params,
    dt: f64,
    forcing: Option<&Forcing>,
    factored: &FactoredOperators,
) -> Result<(State, StepReport), StepError> {
    params.validate()?;
    check_positive("dt", dt)?;
    factored.check(params, dt, SchemeOrder::Second)?;
    if state.step != prev.step + 1 {
        return Err(StepError::NonConsecutive {
            older: prev.step,
            newer: state.step,
        });
    }
    let ubar = VectorField::lin_comb(2.0, &state.u, -1.0, &prev.u);
    let bbar = VectorField::lin_comb(2.0, &state.b, -1.0, &prev.b);
    let rhs_u = VectorField::lin_comb(2.0 / dt, &state.u, -0.5 / dt, &prev.u);
    let rhs_b = VectorField::lin_comb(2.0 / dt, &state.b, -0.5 / dt, &prev.b);
    let closure = Closure {
        mass: 3.0 / (2.0 * dt) + 1.0 / params.t_final,
        history: (4.0 * state.q - prev.q) / (2.0 * dt),
    };
    let (next, mut report) = split_step(
        &ubar, &bbar, rhs_u, rhs_b, closure, state.step, params, dt, forcing, factored,
    )?;
    report.modified_energy = Some(modified_energy_bdf2(&next, state, params));
    Ok((next, report))
}

/// Scalar equation `mass · q − exp(t/T)(A₁ + S A₂) = history`.
struct Closure {
    mass: f64,
    history: f64,
}

#[allow(clippy::too_many_arguments)]
fn split_step(
    ubar: &VectorField,
    bbar: &VectorField,
    mut rhs_u: VectorField,
    mut rhs_b: VectorField,
    closure: Closure,
    step: u64,
    params: &Params,
    dt: f64,
    forcing: Option<&Forcing>,
    factored: &FactoredOperators,
) -> Result<(State, StepReport), StepError> {
    let started = Instant::now();
    let grid = factored.grid();
    for g in [ubar.grid(), bbar.grid()] {
        if g != grid {
            return Err(FieldError::GridMismatch {
                left: grid.n(),
                right: g.n(),
            }
            .into());
        }
    }
    let alpha = params.alpha;

    // The same three arrays feed both the right-hand sides and A₁, A₂.
    let conv = ops::convective(ubar, ubar)?;
    let lor = ops::lorentz(bbar);
    let ind = ops::induction_nl(bbar, ubar)?;
    let n_u = VectorField::lin_comb(alpha, &lor, -1.0, &conv);
    let n_b = ind.scaled(-1.0);

    if let Some(f) = forcing {
        rhs_u.axpy(1.0, &f.fu);
        rhs_b.axpy(1.0, &f.fb);
    }
    let mut st = factored.stokes().solve_many(&[&rhs_u, &n_u])?.into_iter();
    let (s1, s2) = (st.next().expect("two solutions"), st.next().expect("two solutions"));
    let mut mg = factored.magnetic().solve_many(&[&rhs_b, &n_b])?.into_iter();
    let (m1, m2) = (mg.next().expect("two solutions"), mg.next().expect("two solutions"));

    let pairing = |u: &VectorField, b: &VectorField| -> Result<f64, FieldError> {
        Ok(inner_product(&conv, u)? - alpha * inner_product(&lor, u)? + alpha * inner_product(&ind, b)?)
    };
    let a1 = pairing(&s1.u, &m1.b)?;
    let a2 = pairing(&s2.u, &m2.b)?;

    let step_new = step + 1;
    let t_new = step_new as f64 * dt;
    let scaled_t = t_new / params.t_final;
    let inert = n_u.max_abs() == 0.0 && n_b.max_abs() == 0.0;
    let (q, s, denominator) = if inert {
        // no nonlinear terms: q decays on its own and S multiplies zero fields
        let q = closure.history / closure.mass;
        let s = if q == 0.0 { 0.0 } else { q.signum() * (scaled_t + q.abs().ln()).exp() };
        (q, s, (-2.0 * scaled_t).exp() * closure.mass)
    } else {
        // Closure multiplied through by exp(−2t/T), so long runs cannot overflow:
        // (exp(−2t/T)·mass − A₂) q = exp(−2t/T)·history + exp(−t/T)·A₁
        let decay = (-scaled_t).exp();
        let denominator = decay * decay * closure.mass - a2;
        let threshold = 1e-12 * decay * decay * closure.mass;
        if !denominator.is_finite() {
            return Err(StepError::NonFinite { t: t_new });
        }
        if denominator.abs() <= threshold {
            return Err(StepError::SingularClosure { denominator, threshold });
        }
        let q = (decay * decay * closure.history + decay * a1) / denominator;
        let s = (decay * closure.history + a1) / denominator;
        (q, s, denominator)
    };
    if !(q.is_finite() && (inert || s.is_finite())) {
        return Err(StepError::NonFinite { t: t_new });
    }

    let (mut u, mut p, mut b) = (s1.u, s1.p, m1.b);
    if !inert {
        u.axpy(s, &s2.u);
        p.axpy(s, &s2.p);
        b.axpy(s, &m2.b);
    }

    let next = State {
        u,
        p,
        b,
        q,
        step: step_new,
        t: t_new,
    };
    let report = StepReport {
        step: step_new,
        t: t_new,
        energy: energy(&next, params),
        modified_energy: None,
        dissipation: dissipation_report(&next, params, dt),
        a1,
        a2,
        s_denominator: denominator,
        s,
        max_residual: [s1.residual, s2.residual, m1.residual, m2.residual]
            .into_iter()
            .fold(0.0, f64::max),
        wall_time: started.elapsed(),
    };
    Ok((next, report))
}
