//! Unforced decay runs that check the discrete energy law step by step.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::{integrate, ManufacturedCase};
use crate::field::{FaceBc, ScalarField};
use crate::grid::{GridError, StaggeredGrid};
use crate::ops;
use crate::stepper::{energy, modified_energy_bdf2, Params, SchemeOrder, State, StepError};

/// Smallest admissible energy gap; anything below is a stability failure.
pub const GAP_TOLERANCE: f64 = -1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecayError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Step(StepError),
    #[error("energy law violated at step {step}: gap {gap:.3e}")]
    StabilityFailure { step: u64, gap: f64, trace: DecayTrace },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub step: u64,
    pub t: f64,
    /// Energy of the level; for BDF2 steps the modified two-level energy.
    pub energy: f64,
    /// The previous level measured with the same functional as `energy`.
    pub previous_energy: f64,
    pub dissipation: f64,
    /// `previous_energy − energy − dissipation`.
    pub gap: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayTrace {
    pub order: SchemeOrder,
    pub dt: f64,
    pub rows: Vec<DecayRow>,
}

/// Smooth random solenoidal initial data: both fields are discrete curls of
/// random node stream functions that vanish on the wall, scaled to amplitude
/// `k`.
pub fn random_initial_state(grid: StaggeredGrid, seed: u64, k: f64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stream = || {
        let coeffs: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScalarField::nodes_from_fn(grid, |x, y| {
            let mut acc = 0.0;
            for m in 1..=4 {
                for n in 1..=4 {
                    let c = coeffs[(m - 1) * 4 + (n - 1)] / (m * m + n * n) as f64;
                    acc += c * (m as f64 * PI * x).sin() * (n as f64 * PI * y).sin();
                }
            }
            k * acc
        })
    };
    let (mut psi_u, mut psi_b) = (stream(), stream());
    psi_u.zero_boundary_nodes();
    psi_b.zero_boundary_nodes();
    let u = ops::curl_scalar(&psi_u).expect("node field").with_bc(FaceBc::NoSlip);
    let b = ops::curl_scalar(&psi_b).expect("node field").with_bc(FaceBc::Tangent);
    State::initial(u, b)
}

/// Runs `steps` unforced steps from the manufactured data at `t = 0` with
/// amplitude `k` or, with a seed, from [`random_initial_state`] with the
/// same amplitude.
///
/// Row 0 is the initial level. Every later row must satisfy
/// `gap ≥ GAP_TOLERANCE`; otherwise the run stops with
/// [`DecayError::StabilityFailure`] carrying the trace so far.
pub fn run_decay(
    params: &Params,
    order: SchemeOrder,
    n: usize,
    dt: f64,
    steps: u64,
    k: f64,
    seed: Option<u64>,
) -> Result<DecayTrace, DecayError> {
    let grid = StaggeredGrid::new(n)?;
    let initial = match seed {
        Some(s) => random_initial_state(grid, s, k),
        None => ManufacturedCase { k, params: *params }.exact_state(grid, 0.0),
    };
    let e0 = energy(&initial, params);
    let mut trace = DecayTrace {
        order,
        dt,
        rows: vec![DecayRow {
            step: 0,
            t: 0.0,
            energy: e0,
            previous_energy: e0,
            dissipation: 0.0,
            gap: 0.0,
            q: initial.q,
        }],
    };
    // modified energy of the last pair of levels, once two exist
    let mut last_modified: Option<f64> = None;
    let mut failure: Option<(u64, f64)> = None;

    let outcome = integrate(
        grid,
        params,
        order,
        dt,
        steps,
        initial,
        |_| None,
        |next, cur, report| {
            let prev_row = trace.rows.last().expect("initial row");
            let (previous_energy, energy_now) = match report.modified_energy {
                Some(m) => (last_modified.expect("BDF2 steps follow a first step"), m),
                None => (prev_row.energy, report.energy),
            };
            if order == SchemeOrder::Second {
                last_modified = Some(modified_energy_bdf2(next, cur, params));
            }
            let dissipation = report.dissipation.total();
            let gap = previous_energy - energy_now - dissipation;
            trace.rows.push(DecayRow {
                step: next.step,
                t: next.t,
                energy: energy_now,
                previous_energy,
                dissipation,
                gap,
                q: next.q,
            });
            if gap < GAP_TOLERANCE {
                failure = Some((next.step, gap));
                // stop stepping; reported below
                return Err(StepError::NonFinite { t: f64::NAN });
            }
            Ok(())
        },
    );

    if let Some((step, gap)) = failure {
        return Err(DecayError::StabilityFailure { step, gap, trace });
    }
    outcome.map_err(DecayError::Step)?;
    Ok(trace)
}
