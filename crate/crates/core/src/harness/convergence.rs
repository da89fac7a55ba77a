//! Temporal convergence study on the manufactured solution.

use serde::Serialize;
use thiserror::Error;

use super::{integrate, parallel_map, row_threads, ManufacturedCase};
use crate::field::{Field, ScalarField, VectorField};
use crate::grid::{GridError, StaggeredGrid};
use crate::stepper::{SchemeOrder, State, StepError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvergenceError {
    #[error("time-step ladder is empty")]
    EmptyLadder,
    #[error("time steps must be positive and strictly decreasing (entry {index} = {dt})")]
    BadLadder { index: usize, dt: f64 },
    #[error("T = {t_final} is not an integer multiple of dt = {dt}")]
    NonIntegerSteps { dt: f64, t_final: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("spatial floor run failed: {0}")]
    FloorRun(StepError),
}

/// Final-time errors against the exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub u_l2: f64,
    pub u_h1: f64,
    pub p_l2: f64,
    pub b_l2: f64,
    pub b_h1: f64,
}

impl ErrorNorms {
    pub fn between(numeric: &State, exact: &State) -> Self {
        let eu = VectorField::lin_comb(1.0, &numeric.u, -1.0, &exact.u).norms();
        let eb = VectorField::lin_comb(1.0, &numeric.b, -1.0, &exact.b).norms();
        let ep = ScalarField::lin_comb(1.0, &numeric.p, -1.0, &exact.p).norms();
        Self {
            u_l2: eu.l2,
            u_h1: eu.h1(),
            p_l2: ep.l2,
            b_l2: eb.l2,
            b_h1: eb.h1(),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.u_l2, self.u_h1, self.p_l2, self.b_l2, self.b_h1]
    }

    fn map2(a: &Self, b: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            u_l2: f(a.u_l2, b.u_l2),
            u_h1: f(a.u_h1, b.u_h1),
            p_l2: f(a.p_l2, b.p_l2),
            b_l2: f(a.b_l2, b.b_l2),
            b_h1: f(a.b_h1, b.b_h1),
        }
    }
}

/// Observed orders between a row and the one above it. `None` where either
/// row failed or sits below the spatial floor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FittedOrders {
    pub u_l2: Option<f64>,
    pub u_h1: Option<f64>,
    pub p_l2: Option<f64>,
    pub b_l2: Option<f64>,
    pub b_h1: Option<f64>,
    pub q: Option<f64>,
}

impl FittedOrders {
    pub fn as_array(&self) -> [Option<f64>; 6] {
        [self.u_l2, self.u_h1, self.p_l2, self.b_l2, self.b_h1, self.q]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub steps: u64,
    pub errors: Option<ErrorNorms>,
    /// `max_n |qⁿ − exp(−tⁿ/T)|`.
    pub q_error: Option<f64>,
    /// Per norm, whether the error is within 10× of the spatial floor.
    pub below_floor: [bool; 5],
    pub orders: FittedOrders,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub order: SchemeOrder,
    pub n: usize,
    pub case: ManufacturedCase,
    /// Estimated spatial error at `n`, when the ladder has at least two rows.
    pub spatial_floor: Option<ErrorNorms>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// All fitted orders of one column, top to bottom.
    pub fn fitted(&self, column: usize) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.orders.as_array()[column]).collect()
    }
}

/// Runs the manufactured case to `T` for every `dt` in `dts` on an `n × n`
/// grid and fits orders between consecutive rows.
///
/// When there are at least two rows the smallest `dt` is rerun at `n/2`; the
/// spatial floor is taken as a third of the error change, since the spatial
/// error is second order in `h`.
pub fn run_convergence(
    case: &ManufacturedCase,
    order: SchemeOrder,
    n: usize,
    dts: &[f64],
) -> Result<ConvergenceReport, ConvergenceError> {
    let grid = StaggeredGrid::new(n)?;
    let t_final = case.params.t_final;
    if dts.is_empty() {
        return Err(ConvergenceError::EmptyLadder);
    }
    let mut steps = Vec::with_capacity(dts.len());
    for (index, &dt) in dts.iter().enumerate() {
        if !(dt.is_finite() && dt > 0.0) || (index > 0 && dt >= dts[index - 1]) {
            return Err(ConvergenceError::BadLadder { index, dt });
        }
        let m = (t_final / dt).round();
        if m < 1.0 || (m * dt - t_final).abs() > 1e-12 * t_final {
            return Err(ConvergenceError::NonIntegerSteps { dt, t_final });
        }
        steps.push(m as u64);
    }

    let jobs: Vec<(f64, u64)> = dts.iter().copied().zip(steps.iter().copied()).collect();
    let mut rows: Vec<ConvergenceRow> = parallel_map(&jobs, row_threads(), |&(dt, m)| {
        (dt, m, run_row(case, order, grid, dt, m))
    })
    .into_iter()
    .map(|(dt, m, outcome)| match outcome {
        Ok((errors, q_error)) => ConvergenceRow {
            dt,
            steps: m,
            errors: Some(errors),
            q_error: Some(q_error),
            below_floor: [false; 5],
            orders: FittedOrders::default(),
            failure: None,
        },
        Err(e) => ConvergenceRow {
            dt,
            steps: m,
            errors: None,
            q_error: None,
            below_floor: [false; 5],
            orders: FittedOrders::default(),
            failure: Some(e.to_string()),
        },
    })
    .collect();

    let spatial_floor = match (dts.len() >= 2, rows.last().and_then(|r| r.errors)) {
        (true, Some(fine)) if n >= 8 => {
            let coarse = StaggeredGrid::new(n / 2)?;
            let (e_coarse, _) = run_row(case, order, coarse, dts[dts.len() - 1], steps[steps.len() - 1])
                .map_err(ConvergenceError::FloorRun)?;
            Some(ErrorNorms::map2(&e_coarse, &fine, |c, f| (c - f).abs() / 3.0))
        }
        _ => None,
    };

    if let Some(floor) = spatial_floor {
        for row in &mut rows {
            if let Some(e) = row.errors {
                let (e, fl) = (e.as_array(), floor.as_array());
                for c in 0..5 {
                    row.below_floor[c] = e[c] < 10.0 * fl[c];
                }
            }
        }
    }

    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        let (Some(ea), Some(eb)) = (a.errors, b.errors) else {
            continue;
        };
        let ratio = (a.dt / b.dt).ln();
        let fit = |x: f64, y: f64, skip: bool| (!skip && x > 0.0 && y > 0.0).then(|| (x / y).ln() / ratio);
        let (ea, eb) = (ea.as_array(), eb.as_array());
        let o: Vec<Option<f64>> = (0..5)
            .map(|c| fit(ea[c], eb[c], a.below_floor[c] || b.below_floor[c]))
            .collect();
        let q = fit(a.q_error.unwrap_or(0.0), b.q_error.unwrap_or(0.0), false);
        rows[i].orders = FittedOrders {
            u_l2: o[0],
            u_h1: o[1],
            p_l2: o[2],
            b_l2: o[3],
            b_h1: o[4],
            q,
        };
    }

    Ok(ConvergenceReport {
        order,
        n,
        case: *case,
        spatial_floor,
        rows,
    })
}

fn run_row(
    case: &ManufacturedCase,
    order: SchemeOrder,
    grid: StaggeredGrid,
    dt: f64,
    steps: u64,
) -> Result<(ErrorNorms, f64), StepError> {
    let t_final = case.params.t_final;
    let mut q_error = 0.0f64;
    let last = integrate(
        grid,
        &case.params,
        order,
        dt,
        steps,
        case.exact_state(grid, 0.0),
        |t| Some(case.forcing(grid, t)),
        |next, _, _| {
            q_error = q_error.max((next.q - (-next.t / t_final).exp()).abs());
            Ok(())
        },
    )?;
    let exact = case.exact_state(grid, last.t);
    Ok((ErrorNorms::between(&last, &exact), q_error))
}
