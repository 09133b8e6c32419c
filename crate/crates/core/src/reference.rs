//! Hand-transcribed stage states of the four-photon W-state setup, as
//! closed-form functions of the injection-splitter angle, and a term-by-term
//! diff against simulated states.
//!
//! The transcriptions are kept exactly as published, including the sign of
//! the `cos 2θ sin θ / √2` pair in the injection stage, which the simulation
//! does not reproduce. The diff reports such terms rather than hiding them.

use std::collections::BTreeSet;
use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::state::{Convention, Occupation, StateVector};

fn build(terms: &[(&str, f64)]) -> StateVector {
    StateVector::from_terms(
        Convention::Fock,
        terms.iter().map(|(k, a)| {
            let occ: Occupation = k.parse().expect("transcribed kets are well formed");
            (occ, Complex64::new(*a, 0.0))
        }),
    )
}

/// State after the first two polarizing splitters.
pub fn split_pair() -> StateVector {
    let a = 1.0 / SQRT_2;
    build(&[("|H>b|V>c", a), ("|V>a|H>d", a)])
}

/// State after the two injection splitters, as published.
pub fn injected(theta: f64) -> StateVector {
    let (c, s) = (theta.cos(), theta.sin());
    let c2 = (2.0 * theta).cos();
    build(&[
        ("|2H>b|V>c|H>d", c * s * s),
        ("|V>a|H>b|2H>d", c * s * s),
        ("|H>b|V>c|H>e|H>f", c2 * c / SQRT_2),
        ("|V>a|H>d|H>e|H>f", c2 * c / SQRT_2),
        ("|H>b|V>c|H>d|H>e", c2 * s / SQRT_2),
        ("|V>a|H>b|H>d|H>f", c2 * s / SQRT_2),
        ("|V>c|2H>e|H>f", c * c * s),
        ("|V>a|H>e|2H>f", c * c * s),
        ("|2H>b|V>c|H>f", -c * c * s),
        ("|V>a|2H>d|H>e", -c * c * s),
        ("|V>c|H>d|2H>e", -c * s * s),
        ("|V>a|H>b|2H>f", -c * s * s),
    ])
}

/// State after recombination into branches 1 and 2, as published.
pub fn recombined(theta: f64) -> StateVector {
    let (c, s) = (theta.cos(), theta.sin());
    let c2 = (2.0 * theta).cos();
    build(&[
        ("|2H>1|V>2|H>2", c * s * s),
        ("|V>1|H>1|2H>2", c * s * s),
        ("|H>1|V>2|H>e|H>f", c2 * c / SQRT_2),
        ("|V>1|H>2|H>e|H>f", c2 * c / SQRT_2),
        ("|H>1|V>2|H>2|H>e", c2 * s / SQRT_2),
        ("|V>1|H>1|H>2|H>f", c2 * s / SQRT_2),
        ("|V>2|2H>e|H>f", c * c * s),
        ("|V>1|H>e|2H>f", c * c * s),
        ("|2H>1|V>2|H>f", -c * c * s),
        ("|V>1|2H>2|H>e", -c * c * s),
        ("|V>2|H>2|2H>e", -c * s * s),
        ("|V>1|H>1|2H>f", -c * s * s),
    ])
}

/// The four-fold coincidence part of the detector-stage state.
pub fn coincidence_part(theta: f64) -> StateVector {
    let a = theta.cos() * theta.sin().powi(2) / (2.0 * SQRT_2);
    build(&[
        ("|H>1|H>3|H>2|V>4", a),
        ("|H>1|H>3|V>2|H>4", a),
        ("|V>1|H>3|H>2|H>4", a),
        ("|H>1|V>3|H>2|H>4", a),
    ])
}

/// The heralded four-photon W state.
pub fn heralded_w4() -> StateVector {
    build(&[
        ("|H>1|H>3|H>2|V>4", 0.5),
        ("|H>1|H>3|V>2|H>4", 0.5),
        ("|V>1|H>3|H>2|H>4", 0.5),
        ("|H>1|V>3|H>2|H>4", 0.5),
    ])
}

/// The heralded three-photon W state on detectors 3, 2, 4 (detector 1 sits
/// behind a horizontal polarizer and is not part of the published ket).
pub fn heralded_w3() -> StateVector {
    let a = 1.0 / 3f64.sqrt();
    build(&[("|H>3|H>2|V>4", a), ("|H>3|V>2|H>4", a), ("|V>3|H>2|H>4", a)])
}

/// `cos²θ sin⁴θ / 2`.
pub fn success_law(theta: f64) -> f64 {
    theta.cos().powi(2) * theta.sin().powi(4) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffKind {
    OnlySimulated,
    OnlyTranscribed,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermDiff {
    pub ket: String,
    pub kind: DiffKind,
    pub simulated: Complex64,
    pub transcribed: Complex64,
}

impl std::fmt::Display for TermDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let what = match self.kind {
            DiffKind::OnlySimulated => "only in simulation",
            DiffKind::OnlyTranscribed => "only in transcription",
            DiffKind::Mismatch => "amplitude mismatch",
        };
        write!(
            f,
            "{} {what}: simulated {:+.12} vs transcribed {:+.12}",
            self.ket, self.simulated.re, self.transcribed.re
        )
    }
}

/// Terms whose amplitudes differ by more than `tol`. Terms with magnitude
/// below `tol` on one side count as absent there.
pub fn diff_terms(simulated: &StateVector, transcribed: &StateVector, tol: f64) -> Vec<TermDiff> {
    let keys: BTreeSet<&Occupation> = simulated.terms().chain(transcribed.terms()).map(|(o, _)| o).collect();
    let mut out = Vec::new();
    for occ in keys {
        let (s, t) = (simulated.coefficient(occ), transcribed.coefficient(occ));
        if (s - t).norm() <= tol {
            continue;
        }
        let kind = match (s.norm() > tol, t.norm() > tol) {
            (true, false) => DiffKind::OnlySimulated,
            (false, true) => DiffKind::OnlyTranscribed,
            _ => DiffKind::Mismatch,
        };
        out.push(TermDiff {
            ket: occ.to_string(),
            kind,
            simulated: s,
            transcribed: t,
        });
    }
    out
}

/// Largest amplitude difference over the union of terms.
pub fn max_deviation(a: &StateVector, b: &StateVector) -> f64 {
    a.terms()
        .chain(b.terms())
        .map(|(o, _)| (a.coefficient(o) - b.coefficient(o)).norm())
        .fold(0.0, f64::max)
}
