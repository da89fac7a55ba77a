//! Runs a configuration and renders its report.

use std::fmt::Write as _;

use sav_mhd::harness::{
    integrate, random_initial_state, run_convergence, run_decay, ConvergenceReport, DecayError, DecayTrace,
    ManufacturedCase,
};
use sav_mhd::stepper::State;
use sav_mhd::{Field, StaggeredGrid, VectorField};
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, Mode, RunConfig};

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_NUMERICAL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// Machine-readable failure record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
}

/// Report text and the exit code it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub text: String,
    pub exit_code: u8,
}

/// Shortest round-trip form; exponent notation only for very small or large
/// magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_error(out: &mut String, e: &ErrorRecord) {
    // one line, so keep the message free of line breaks
    let message = e.message.replace(['\n', '\r'], " ");
    writeln!(out, "# error kind={} message=\"{}\"", e.kind, message.replace('"', "'")).unwrap();
}

fn json_text(config: &RunConfig, result: serde_json::Value, error: Option<&ErrorRecord>) -> String {
    let value = json!({
        "status": if error.is_some() { "error" } else { "ok" },
        "config": config,
        "result": result,
        "error": error,
    });
    let mut s = serde_json::to_string_pretty(&value).expect("report serializes");
    s.push('\n');
    s
}

/// Runs `config` and renders the report in its output format.
pub fn render(config: &RunConfig) -> Rendered {
    match config.mode {
        Mode::Convergence => convergence(config),
        Mode::Decay => decay(config),
        Mode::Simulate => simulate(config),
    }
}

const CONVERGENCE_HEADER: &str = "dt,err_u_l2,err_u_h1,err_p_l2,err_b_l2,err_b_h1,\
order_u_l2,order_u_h1,order_p_l2,order_b_l2,order_b_h1,err_q,order_q,status";

fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::new();
    writeln!(out, "{CONVERGENCE_HEADER}").unwrap();
    for row in &report.rows {
        let mut cells = vec![fmt_f64(row.dt)];
        match row.errors {
            Some(e) => cells.extend(e.as_array().map(fmt_f64)),
            None => cells.extend(std::iter::repeat_n(String::new(), 5)),
        }
        cells.extend(row.orders.as_array()[..5].iter().map(|&o| opt(o)));
        cells.push(opt(row.q_error));
        cells.push(opt(row.orders.q));
        let status = if row.failure.is_some() {
            "failed"
        } else if row.below_floor.iter().any(|&b| b) {
            "below_spatial_floor"
        } else {
            "ok"
        };
        cells.push(status.to_string());
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

fn convergence(config: &RunConfig) -> Rendered {
    let case = ManufacturedCase {
        k: config.k,
        params: config.params,
    };
    let (report, error) = match run_convergence(&case, config.scheme, config.n, &config.dt_ladder) {
        Ok(report) => {
            let failure = report.rows.iter().find_map(|r| {
                r.failure.as_ref().map(|m| ErrorRecord {
                    kind: "step_failure",
                    message: format!("dt {}: {m}", fmt_f64(r.dt)),
                })
            });
            (Some(report), failure)
        }
        Err(e) => (
            None,
            Some(ErrorRecord {
                kind: "step_failure",
                message: e.to_string(),
            }),
        ),
    };
    let text = match config.format {
        Format::Csv => {
            let mut s = report
                .as_ref()
                .map(convergence_csv)
                .unwrap_or_else(|| format!("{CONVERGENCE_HEADER}\n"));
            if let Some(e) = &error {
                csv_error(&mut s, e);
            }
            s
        }
        Format::Json => json_text(config, serde_json::to_value(&report).unwrap(), error.as_ref()),
    };
    Rendered {
        text,
        exit_code: if error.is_some() { EXIT_NUMERICAL } else { EXIT_OK },
    }
}

fn decay_csv(trace: Option<&DecayTrace>) -> String {
    let mut out = String::from("step,t,energy,dissipation,gap\n");
    for row in trace.map_or(&[][..], |t| &t.rows) {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.step,
            fmt_f64(row.t),
            fmt_f64(row.energy),
            fmt_f64(row.dissipation),
            fmt_f64(row.gap)
        )
        .unwrap();
    }
    out
}

fn decay(config: &RunConfig) -> Rendered {
    let dt = config.dt.expect("decay runs have a step size");
    let steps = config.steps.unwrap_or(20);
    let (trace, error) = match run_decay(
        &config.params,
        config.scheme,
        config.n,
        dt,
        steps,
        config.k,
        config.seed,
    ) {
        Ok(trace) => (Some(trace), None),
        Err(DecayError::StabilityFailure { trace, step, gap }) => (
            Some(trace),
            Some(ErrorRecord {
                kind: "stability_failure",
                message: format!("energy law violated at step {step}: gap {}", fmt_f64(gap)),
            }),
        ),
        Err(e) => (
            None,
            Some(ErrorRecord {
                kind: "step_failure",
                message: e.to_string(),
            }),
        ),
    };
    let text = match config.format {
        Format::Csv => {
            let mut s = decay_csv(trace.as_ref());
            if let Some(e) = &error {
                csv_error(&mut s, e);
            }
            s
        }
        Format::Json => json_text(config, serde_json::to_value(&trace).unwrap(), error.as_ref()),
    };
    Rendered {
        text,
        exit_code: if error.is_some() { EXIT_NUMERICAL } else { EXIT_OK },
    }
}

#[derive(Debug, Serialize)]
struct Sample {
    component: &'static str,
    x: f64,
    y: f64,
    value: f64,
}

/// Every stored value of the final state with its position.
fn samples(state: &State) -> Vec<Sample> {
    let g = state.u.grid();
    let mut out = Vec::new();
    let mut faces = |names: [&'static str; 2], v: &VectorField| {
        for ((i, j), &value) in v.c1().indexed_iter() {
            let (x, y) = g.face1_position(i, j);
            out.push(Sample {
                component: names[0],
                x,
                y,
                value,
            });
        }
        for ((i, j), &value) in v.c2().indexed_iter() {
            let (x, y) = g.face2_position(i, j);
            out.push(Sample {
                component: names[1],
                x,
                y,
                value,
            });
        }
    };
    faces(["u1", "u2"], &state.u);
    faces(["b1", "b2"], &state.b);
    for ((i, j), &value) in state.p.values().indexed_iter() {
        let (x, y) = g.center_position(i, j);
        out.push(Sample {
            component: "p",
            x,
            y,
            value,
        });
    }
    out
}

fn simulate(config: &RunConfig) -> Rendered {
    let dt = config.dt.expect("simulate runs have a step size");
    let steps = config
        .steps
        .unwrap_or_else(|| (config.params.t_final / dt).round() as u64);
    let grid = StaggeredGrid::new(config.n).expect("validated grid size");
    let case = ManufacturedCase {
        k: config.k,
        params: config.params,
    };
    let initial = match config.seed {
        Some(seed) => random_initial_state(grid, seed, config.k),
        None => case.exact_state(grid, 0.0),
    };
    let forced = config.seed.is_none();
    let outcome = integrate(
        grid,
        &config.params,
        config.scheme,
        dt,
        steps,
        initial,
        |t| forced.then(|| case.forcing(grid, t)),
        |_, _, _| Ok(()),
    );
    let (state, error) = match outcome {
        Ok(s) => (Some(s), None),
        Err(e) => (
            None,
            Some(ErrorRecord {
                kind: "step_failure",
                message: e.to_string(),
            }),
        ),
    };
    let text = match config.format {
        Format::Csv => {
            let mut s = String::from("component,x,y,value\n");
            if let Some(state) = &state {
                for r in samples(state) {
                    writeln!(
                        s,
                        "{},{},{},{}",
                        r.component,
                        fmt_f64(r.x),
                        fmt_f64(r.y),
                        fmt_f64(r.value)
                    )
                    .unwrap();
                }
                writeln!(s, "q,,,{}", fmt_f64(state.q)).unwrap();
            }
            if let Some(e) = &error {
                csv_error(&mut s, e);
            }
            s
        }
        Format::Json => {
            let result = state
                .as_ref()
                .map(|s| json!({ "step": s.step, "t": s.t, "q": s.q, "n": config.n, "samples": samples(s) }));
            json_text(config, result.unwrap_or(serde_json::Value::Null), error.as_ref())
        }
    };
    Rendered {
        text,
        exit_code: if error.is_some() { EXIT_NUMERICAL } else { EXIT_OK },
    }
}
