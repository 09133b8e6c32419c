//! End-to-end verification of the W-state setup: stage states, the success
//! law, the optimum, heralded states, completeness and element properties.
//! Each check has a pinned tolerance; a caller-supplied tolerance can only
//! tighten it. The optimal-angle check is exempt because a flat maximum
//! cannot locate its argument below about 1e-8.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::time::Instant;

use num_complex::Complex64;

use crate::analysis::{evaluate, maximize_success, success_probability};
use crate::circuit::{build_w4_circuit, run_circuit, w4_input_state, RunOutput, W4Variant};
use crate::elements::{apply_map, beam_splitter_map, check_unitary};
use crate::error::Result;
use crate::format::{parse_circuit, serialize_circuit};
use crate::oracle::DenseTransfer;
use crate::postselect::{count_probability, enumerate_count_patterns, CoincidencePattern, W4_READOUT};
use crate::reference::{self, diff_terms, max_deviation, success_law, TermDiff};
use crate::state::{norm, tensor, Convention, Occupation, StateVector};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Angles at which the injection stage is compared with the dense oracle.
pub const INJECTION_ANGLES: [f64; 3] = [0.3, 0.7, 1.1];

/// Budget for a full verification run.
pub const RUNTIME_BUDGET_SECS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: &'static str,
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(id: &'static str, name: &'static str, measured: f64, threshold: f64, detail: String) -> Self {
        CheckResult {
            id,
            name,
            measured,
            threshold,
            pass: measured <= threshold,
            detail,
        }
    }

    /// For yes/no properties: measured is the number of violations.
    fn flag(id: &'static str, name: &'static str, violations: usize, detail: String) -> Self {
        CheckResult {
            id,
            name,
            measured: violations as f64,
            threshold: 0.0,
            pass: violations == 0,
            detail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    /// Terms of the transcribed injection stage that disagree with the
    /// simulation (summed over [`INJECTION_ANGLES`]).
    pub injection_diff_notes: Vec<String>,
    pub elapsed_secs: f64,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// `k`-th point of a golden-ratio sequence mapped into `(0, pi/2)`; spreads
/// test angles without a random source.
pub fn spread_angle(k: usize) -> f64 {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let u = ((k as f64 + 1.0) * golden).fract();
    0.02 + u * (FRAC_PI_2 - 0.04)
}

/// 50 evenly spaced interior angles.
pub fn law_grid() -> Vec<f64> {
    (1..=50).map(|k| k as f64 * FRAC_PI_2 / 51.0).collect()
}

pub fn optimal_theta() -> f64 {
    (1.0 / 3f64.sqrt()).acos()
}

fn tight(pinned: f64, tol: f64) -> f64 {
    pinned.min(tol)
}

/// Split stage followed by the two injected photons still waiting in e, f.
pub fn split_stage_reference() -> StateVector {
    let waiting: Occupation = "|H>e|H>f".parse().expect("ket");
    tensor(
        &reference::split_pair(),
        &StateVector::from_terms(Convention::Fock, [(waiting, Complex64::new(1.0, 0.0))]),
    )
    .expect("disjoint modes")
}

/// Term-level differences between the taps of a built-in run and the
/// transcribed stage states. Only the coincidence part of the last tap is
/// compared.
pub fn stage_diffs(theta: f64, run: &RunOutput, pattern: &CoincidencePattern) -> Vec<(String, TermDiff)> {
    let mut out = Vec::new();
    let mut push = |stage: &str, sim: Option<&StateVector>, transcribed: StateVector| {
        if let Some(sim) = sim {
            for d in diff_terms(sim, &transcribed, 1e-10) {
                out.push((stage.to_string(), d));
            }
        }
    };
    push("psi1", run.tap("psi1"), split_stage_reference());
    push("psi2", run.tap("psi2"), reference::injected(theta));
    push("psi3", run.tap("psi3"), reference::recombined(theta));
    let coincident = run.tap("psi4").map(|s| s.filtered(|o| pattern.matches(o)));
    push("psi4", coincident.as_ref(), reference::coincidence_part(theta));
    out
}

pub fn check_split_stage(tol: f64) -> Result<CheckResult> {
    let c = build_w4_circuit(0.5, W4Variant::Plain)?;
    let run = run_circuit(&c, &w4_input_state())?;
    let dev = max_deviation(run.tap("psi1").expect("psi1 tap"), &split_stage_reference());
    Ok(CheckResult::new(
        "1",
        "polarization split stage",
        dev,
        tight(1e-12, tol),
        String::new(),
    ))
}

/// Returns the check and the transcription diff notes.
pub fn check_injection_stage(tol: f64) -> Result<(CheckResult, Vec<String>)> {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for theta in INJECTION_ANGLES {
        let c = build_w4_circuit(theta, W4Variant::Plain)?;
        let tap = &c.taps()[1];
        let sparse = run_circuit(&c, &w4_input_state())?;
        let sparse = sparse.tap(&tap.name).expect("psi2 tap");
        let dense = DenseTransfer::of_prefix(&c, tap.after + 1).propagate(&w4_input_state())?;
        worst = worst.max(max_deviation(sparse, &dense));
        for d in diff_terms(sparse, &reference::injected(theta), 1e-10) {
            notes.push(format!("theta={theta}: {d}"));
        }
    }
    let detail = format!("{} transcription diff note(s)", notes.len());
    Ok((
        CheckResult::new("2", "injection stage vs dense oracle", worst, tight(1e-10, tol), detail),
        notes,
    ))
}

pub fn check_coincidence_prefactor(tol: f64) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut bad_terms = 0;
    for k in 0..10 {
        let theta = spread_angle(k);
        let eval = evaluate(theta, W4Variant::Plain)?;
        let psi4 = eval.run.tap("psi4").expect("psi4 tap");
        let expected = theta.cos() * theta.sin().powi(2) / (2.0 * 2f64.sqrt());
        let pattern = build_w4_circuit(theta, W4Variant::Plain)?
            .postselect()
            .cloned()
            .expect("pattern");
        let coincident: Vec<Complex64> = psi4
            .terms()
            .filter(|(o, _)| pattern.matches(o))
            .map(|(_, a)| *a)
            .collect();
        if coincident.len() != 4 {
            bad_terms += 1;
        }
        for a in coincident {
            worst = worst.max((a - Complex64::new(expected, 0.0)).norm());
        }
    }
    let measured = if bad_terms > 0 { f64::INFINITY } else { worst };
    Ok(CheckResult::new(
        "3",
        "coincidence amplitudes cos(t)sin^2(t)/(2 sqrt 2), positive",
        measured,
        tight(1e-12, tol),
        format!("10 angles, {bad_terms} with wrong coincidence term count"),
    ))
}

pub fn check_success_law(tol: f64) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for theta in law_grid() {
        worst = worst.max((success_probability(theta)? - success_law(theta)).abs());
    }
    Ok(CheckResult::new(
        "4",
        "probability law cos^2 sin^4 / 2",
        worst,
        tight(1e-10, tol),
        "50 angles".into(),
    ))
}

pub fn check_optimum(tol: f64) -> Result<Vec<CheckResult>> {
    let opt = maximize_success(1e-6)?;
    Ok(vec![
        CheckResult::new(
            "5a",
            "optimal angle arccos(1/sqrt 3)",
            (opt.theta - optimal_theta()).abs(),
            // the maximum is quadratic, so the angle resolves only to about sqrt(eps)
            1e-6,
            format!("theta* = {:.10}", opt.theta),
        ),
        CheckResult::new(
            "5b",
            "optimal probability 2/27",
            (opt.probability - 2.0 / 27.0).abs(),
            tight(1e-9, tol),
            format!("p* = {:.12}", opt.probability),
        ),
    ])
}

pub fn check_w4_fidelity(tol: f64) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for theta in law_grid() {
        let eval = evaluate(theta, W4Variant::Plain)?;
        match crate::postselect::fidelity(&eval.conditional, &reference::heralded_w4()) {
            Ok(f) => worst = worst.max((1.0 - f).abs()),
            Err(_) => missing += 1,
        }
    }
    let measured = if missing > 0 { f64::INFINITY } else { worst };
    Ok(CheckResult::new(
        "6",
        "heralded four-photon W fidelity",
        measured,
        tight(1e-12, tol),
        "50 angles".into(),
    ))
}

pub fn check_polarizer_variant(tol: f64) -> Result<CheckResult> {
    let eval = evaluate(optimal_theta(), W4Variant::PolarizerD1)?;
    // detector 1 always holds one H photon; drop it to compare with the 3-photon ket
    let h1 = crate::mode::PolarizedMode::h("1");
    let stray = eval
        .conditional
        .terms()
        .filter(|(o, _)| o.spatial_count("1") != 1 || o.count(&h1) != 1)
        .count();
    let reduced = StateVector::from_terms(
        Convention::Fock,
        eval.conditional.terms().map(|(o, a)| (o.without_spatial("1"), *a)),
    );
    let dev = max_deviation(&reduced, &reference::heralded_w3());
    let measured = if stray > 0 { f64::INFINITY } else { dev };
    Ok(CheckResult::new(
        "7",
        "polarizer variant heralds three-photon W",
        measured,
        tight(1e-12, tol),
        format!("event probability {:.12}", eval.probability),
    ))
}

pub fn check_completeness(tol: f64) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for theta in [0.4, optimal_theta(), 1.3] {
        let c = build_w4_circuit(theta, W4Variant::Plain)?;
        let fin = run_circuit(&c, &w4_input_state())?.final_state;
        let mut total = 0.0;
        for counts in enumerate_count_patterns(W4_READOUT.len(), 4) {
            let counts: Vec<(&str, u32)> = W4_READOUT.iter().copied().zip(counts).collect();
            total += count_probability(&fin, &counts)?;
        }
        worst = worst.max((total - 1.0).abs());
    }
    Ok(CheckResult::new(
        "8",
        "detector count patterns sum to one",
        worst,
        tight(1e-10, tol),
        "3 angles".into(),
    ))
}

pub fn check_properties(tol: f64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    let bs = beam_splitter_map(FRAC_PI_4, ("m", "n"), ("p", "q"))?;
    let pair: Occupation = "|H>m|H>n".parse().expect("ket");
    let input = StateVector::from_terms(Convention::Monomial, [(pair, Complex64::new(1.0, 0.0))]);
    let out_state = apply_map(&input, &bs)?.to_fock();
    let split: Occupation = "|H>p|H>q".parse().expect("ket");
    out.push(CheckResult::new(
        "9a",
        "HOM dip on balanced splitter",
        out_state.coefficient(&split).norm(),
        tight(1e-12, tol),
        String::new(),
    ));

    let mut worst_unitary: f64 = 0.0;
    let mut norm_dev: f64 = 0.0;
    let mut photon_violations = 0;
    let mut round_trip_failures = 0;
    for k in 0..5 {
        let theta = spread_angle(k);
        for variant in [W4Variant::Plain, W4Variant::PolarizerD1] {
            let c = build_w4_circuit(theta, variant)?;
            for el in c.elements() {
                if let Some(map) = el.mode_map()? {
                    worst_unitary = worst_unitary.max(check_unitary(&map).max_deviation);
                }
            }
            if parse_circuit(&serialize_circuit(&c)).ok().as_ref() != Some(&c) {
                round_trip_failures += 1;
            }
            if variant == W4Variant::Plain {
                let run = run_circuit(&c, &w4_input_state())?;
                for (_, s) in run
                    .taps
                    .iter()
                    .chain(std::iter::once(&("final".to_string(), run.final_state.clone())))
                {
                    norm_dev = norm_dev.max((norm(s)? - 1.0).abs());
                    if s.photon_numbers().into_iter().any(|n| n != 4) {
                        photon_violations += 1;
                    }
                }
            }
        }
    }
    out.push(CheckResult::new(
        "9b",
        "unitarity of built-in elements",
        worst_unitary,
        tight(1e-12, tol),
        String::new(),
    ));
    out.push(CheckResult::new(
        "9c",
        "norm preservation",
        norm_dev,
        tight(1e-12, tol),
        String::new(),
    ));
    out.push(CheckResult::flag(
        "9d",
        "photon-number conservation",
        photon_violations,
        String::new(),
    ));
    out.push(CheckResult::flag(
        "9e",
        "circuit serialize/parse round trip",
        round_trip_failures,
        String::new(),
    ));
    Ok(out)
}

/// Runs every check. `tol` tightens (never loosens) the pinned tolerances.
pub fn run_verification(tol: f64) -> Result<VerifyReport> {
    let start = Instant::now();
    let mut checks = vec![check_split_stage(tol)?];
    let (injection, notes) = check_injection_stage(tol)?;
    checks.push(injection);
    checks.push(check_coincidence_prefactor(tol)?);
    checks.push(check_success_law(tol)?);
    checks.extend(check_optimum(tol)?);
    checks.push(check_w4_fidelity(tol)?);
    checks.push(check_polarizer_variant(tol)?);
    checks.push(check_completeness(tol)?);
    checks.extend(check_properties(tol)?);
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(CheckResult::new(
        "10",
        "verification runtime (s)",
        elapsed,
        RUNTIME_BUDGET_SECS,
        String::new(),
    ));
    Ok(VerifyReport {
        checks,
        injection_diff_notes: notes,
        elapsed_secs: elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes() {
        let report = run_verification(DEFAULT_TOL).unwrap();
        for c in &report.checks {
            assert!(c.pass, "{} {}: {} > {}", c.id, c.name, c.measured, c.threshold);
        }
        // the published injection stage differs in the sign of one term pair
        assert_eq!(report.injection_diff_notes.len(), 2 * INJECTION_ANGLES.len());
    }

    #[test]
    fn only_the_sign_typo_pair_differs() {
        let c = build_w4_circuit(0.7, W4Variant::Plain).unwrap();
        let run = run_circuit(&c, &w4_input_state()).unwrap();
        let diffs = stage_diffs(0.7, &run, c.postselect().unwrap());
        let stages: Vec<&str> = diffs.iter().map(|(s, _)| s.as_str()).collect();
        assert_eq!(stages, ["psi2", "psi2", "psi3", "psi3"]);
        for (_, d) in &diffs {
            assert_eq!(d.kind, crate::reference::DiffKind::Mismatch);
            assert!((d.simulated + d.transcribed).norm() < 1e-12);
        }
    }

    #[test]
    fn impossible_tolerance_fails_the_law() {
        let law = check_success_law(1e-30).unwrap();
        assert!(!law.pass);
    }

    #[test]
    fn spread_angles_are_interior() {
        for k in 0..100 {
            let t = spread_angle(k);
            assert!(t > 0.0 && t < FRAC_PI_2);
        }
    }
}
