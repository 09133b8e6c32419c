//! Success probability of the W-state setup as a function of the injection
//! splitter angle: evaluation, grid sweeps and maximization.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use crate::circuit::{build_w4_circuit, run_circuit, w4_input_state, RunOutput, W4Variant};
use crate::error::{Error, Result};
use crate::postselect::{applicable_w_target, coincidence_project, fidelity, project_after_filter, Projection};
use crate::reference::success_law;
use crate::state::StateVector;

/// Result of running the setup once and post-selecting.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub theta: f64,
    pub run: RunOutput,
    pub probability: f64,
    pub conditional: StateVector,
    /// Fidelity with the applicable W target; `None` when the event is impossible.
    pub fidelity: Option<f64>,
}

pub fn evaluate(theta: f64, variant: W4Variant) -> Result<Evaluation> {
    let circuit = build_w4_circuit(theta, variant)?;
    let run = run_circuit(&circuit, &w4_input_state())?;
    let pattern = circuit.postselect().expect("built-in setup has a coincidence pattern");
    let Projection {
        probability,
        conditional,
    } = if circuit.has_filter() {
        project_after_filter(&run.final_state, pattern)?
    } else {
        coincidence_project(&run.final_state, pattern)?
    };
    let fidelity = match applicable_w_target(&conditional, pattern.detectors()) {
        Some(target) => Some(fidelity(&conditional, &target)?),
        None => None,
    };
    Ok(Evaluation {
        theta,
        run,
        probability,
        conditional,
        fidelity,
    })
}

/// Four-fold coincidence probability of the plain setup.
pub fn success_probability(theta: f64) -> Result<f64> {
    Ok(evaluate(theta, W4Variant::Plain)?.probability)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub theta: f64,
    pub probability: f64,
    /// Zero where the coincidence event is impossible.
    pub fidelity: f64,
    pub closed_form: f64,
    pub deviation: f64,
}

/// Evaluates the plain setup on `steps` evenly spaced angles, endpoints
/// included.
pub fn sweep_theta(theta_min: f64, theta_max: f64, steps: usize) -> Result<Vec<SweepRecord>> {
    if !(0.0 <= theta_min && theta_min < theta_max && theta_max <= FRAC_PI_2) {
        return Err(Error::InvalidRange(format!(
            "need 0 <= min < max <= pi/2, got [{theta_min}, {theta_max}]"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidRange(format!("need at least 2 steps, got {steps}")));
    }
    let width = theta_max - theta_min;
    (0..steps)
        .map(|i| {
            let theta = if i + 1 == steps {
                theta_max
            } else {
                theta_min + width * i as f64 / (steps - 1) as f64
            };
            let eval = evaluate(theta, W4Variant::Plain)?;
            let closed_form = success_law(theta);
            Ok(SweepRecord {
                theta,
                probability: eval.probability,
                fidelity: eval.fidelity.unwrap_or(0.0),
                closed_form,
                deviation: (eval.probability - closed_form).abs(),
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "theta_rad,theta_deg,probability,closed_form,deviation,fidelity";

/// One CSV line (no newline) with 17 significant digits per field.
pub fn csv_row(r: &SweepRecord) -> String {
    format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.theta,
        r.theta.to_degrees(),
        r.probability,
        r.closed_form,
        r.deviation,
        r.fidelity
    )
}

pub fn write_csv<W: Write>(records: &[SweepRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", csv_row(r))?;
    }
    out.flush()
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns the midpoint of the final bracket, whose width is at most `tol`.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub theta: f64,
    pub probability: f64,
}

/// Maximizes the simulated success probability over `[0, pi/2]`.
pub fn maximize_success(tol: f64) -> Result<Optimum> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidRange(format!("tolerance must be positive, got {tol}")));
    }
    let theta = golden_section_max(success_probability, 0.0, FRAC_PI_2, tol)?;
    Ok(Optimum {
        theta,
        probability: success_probability(theta)?,
    })
}
