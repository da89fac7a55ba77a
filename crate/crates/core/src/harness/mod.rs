//! Verification runs: manufactured-solution convergence studies and
//! energy-decay experiments.

mod convergence;
mod decay;
mod manufactured;

pub use convergence::{run_convergence, ConvergenceError, ConvergenceReport, ConvergenceRow, ErrorNorms, FittedOrders};
pub use decay::{random_initial_state, run_decay, DecayError, DecayRow, DecayTrace};
pub use manufactured::ManufacturedCase;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::grid::StaggeredGrid;
use crate::stepper::{
    step_first_order, step_second_order, FactoredOperators, Forcing, Params, SchemeOrder, State, StepError, StepReport,
};

/// Advances `initial` by `steps` uniform steps of size `dt`.
///
/// The first step of a second-order run is a first-order step. `forcing` is
/// called with the new time level of every step; `observe` sees the new
/// level, the level before it and the step report.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    grid: StaggeredGrid,
    params: &Params,
    order: SchemeOrder,
    dt: f64,
    steps: u64,
    initial: State,
    forcing: impl Fn(f64) -> Option<Forcing>,
    mut observe: impl FnMut(&State, &State, &StepReport) -> Result<(), StepError>,
) -> Result<State, StepError> {
    let first = FactoredOperators::new(grid, params, dt, SchemeOrder::First)?;
    let second = match order {
        SchemeOrder::First => None,
        SchemeOrder::Second if steps > 1 => Some(FactoredOperators::new(grid, params, dt, SchemeOrder::Second)?),
        SchemeOrder::Second => None,
    };
    let mut prev: Option<State> = None;
    let mut cur = initial;
    for _ in 0..steps {
        let t_new = (cur.step + 1) as f64 * dt;
        let f = forcing(t_new);
        let (next, report) = match (&second, &prev) {
            (Some(ops2), Some(p)) => step_second_order(&cur, p, params, dt, f.as_ref(), ops2)?,
            _ => step_first_order(&cur, params, dt, f.as_ref(), &first)?,
        };
        observe(&next, &cur, &report)?;
        prev = Some(cur);
        cur = next;
    }
    Ok(cur)
}

/// Worker threads for independent convergence rows: `SAV_MHD_THREADS` when
/// set to a positive integer, otherwise the available parallelism.
pub fn row_threads() -> usize {
    std::env::var("SAV_MHD_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |t| t.get()))
}

/// Maps `f` over `items` on up to `threads` scoped threads; output order
/// follows `items`.
fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                slots.lock().expect("row slot lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("row slot lock")
        .into_iter()
        .map(|r| r.expect("every row ran"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..37).collect();
        for threads in [1, 2, 5, 64] {
            let out = parallel_map(&items, threads, |x| x * x);
            assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
        }
        assert!(parallel_map(&[] as &[u8], 4, |x| *x).is_empty());
    }
}
