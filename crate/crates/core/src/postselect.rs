//! Coincidence post-selection, W-state targets and fidelity.
//!
//! Detectors count photons per spatial mode and cannot see polarization.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode::{Polarization, PolarizedMode};
use crate::state::{inner_product, norm, Convention, Occupation, StateVector, PRUNE_EPS};

/// Inputs to projections and fidelities must have unit norm to this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Detector order used when reading out the four-photon W state.
pub const W4_READOUT: [&str; 4] = ["1", "3", "2", "4"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidencePattern {
    detectors: Vec<String>,
    required_count: u32,
}

impl CoincidencePattern {
    pub fn new<S: Into<String>>(detectors: impl IntoIterator<Item = S>, required_count: u32) -> Result<Self> {
        let detectors: Vec<String> = detectors.into_iter().map(Into::into).collect();
        if required_count == 0 {
            return Err(Error::InvalidPattern("required count must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for d in &detectors {
            if !seen.insert(d.as_str()) {
                return Err(Error::InvalidPattern(format!("detector {d:?} listed twice")));
            }
        }
        Ok(CoincidencePattern {
            detectors,
            required_count,
        })
    }

    /// One photon in each detector.
    pub fn single_photons<S: Into<String>>(detectors: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(detectors, 1)
    }

    pub fn detectors(&self) -> &[String] {
        &self.detectors
    }

    pub fn required_count(&self) -> u32 {
        self.required_count
    }

    pub fn matches(&self, occ: &Occupation) -> bool {
        self.detectors
            .iter()
            .all(|d| occ.spatial_count(d) == self.required_count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub probability: f64,
    /// Renormalized post-selected state; empty when the event is impossible.
    pub conditional: StateVector,
}

fn restrict<F>(state: &StateVector, keep: F) -> Result<Projection>
where
    F: FnMut(&Occupation) -> bool,
{
    let kept = state.filtered(keep);
    let probability = norm(&kept)?.powi(2);
    let conditional = if probability < PRUNE_EPS * PRUNE_EPS {
        StateVector::zero(Convention::Fock)
    } else {
        kept.scaled(Complex64::new(1.0 / probability.sqrt(), 0.0))
    };
    Ok(Projection {
        probability,
        conditional,
    })
}

fn require_unit_norm(state: &StateVector) -> Result<()> {
    let n = norm(state)?;
    if (n - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Unnormalized(n));
    }
    Ok(())
}

/// Projects a normalized Fock-convention state onto the coincidence event.
pub fn coincidence_project(state: &StateVector, pattern: &CoincidencePattern) -> Result<Projection> {
    require_unit_norm(state)?;
    restrict(state, |o| pattern.matches(o))
}

/// Like [`coincidence_project`] but for states already thinned by a lossy
/// filter (a polarizer). The state may have norm below one; the returned
/// probability is relative to the unfiltered, normalized input.
pub fn project_after_filter(state: &StateVector, pattern: &CoincidencePattern) -> Result<Projection> {
    let n = norm(state)?;
    if n > 1.0 + NORMALIZATION_TOL {
        return Err(Error::Unnormalized(n));
    }
    restrict(state, |o| pattern.matches(o))
}

/// Probability that the detectors register exactly the given counts.
pub fn count_probability(state: &StateVector, counts: &[(&str, u32)]) -> Result<f64> {
    require_unit_norm(state)?;
    Ok(restrict(state, |o| counts.iter().all(|(d, n)| o.spatial_count(d) == *n))?.probability)
}

/// Every count vector over `detectors` with total at most `max_photons`,
/// in lexicographic order.
pub fn enumerate_count_patterns(detectors: usize, max_photons: u32) -> Vec<Vec<u32>> {
    fn go(slot: usize, left: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot == current.len() {
            out.push(current.clone());
            return;
        }
        for n in 0..=left {
            current[slot] = n;
            go(slot + 1, left - n, current, out);
        }
        current[slot] = 0;
    }
    let mut out = Vec::new();
    go(0, max_photons, &mut vec![0; detectors], &mut out);
    out
}

/// Equal superposition of the `n` single-photon kets with exactly one V
/// photon, over the given spatial modes. `modes[0]` carries the V photon in
/// the last term, matching `|HHHV> + |HHVH> + |HVHH> + |VHHH>`.
pub fn w_state(n: usize, modes: &[&str]) -> Result<StateVector> {
    if !(n == 3 || n == 4) {
        return Err(Error::UnsupportedWSize(n));
    }
    if modes.len() != n {
        return Err(Error::ModeCount {
            expected: n,
            found: modes.len(),
        });
    }
    let amplitude = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let terms = (0..n).rev().map(|flipped| {
        let occ = Occupation::from_counts(modes.iter().enumerate().map(|(i, m)| {
            let pol = if i == flipped { Polarization::V } else { Polarization::H };
            (PolarizedMode::new(*m, pol), 1)
        }));
        (occ, amplitude)
    });
    Ok(StateVector::from_terms(Convention::Fock, terms))
}

/// `|<target|state>|^2` for normalized pure states.
pub fn fidelity(state: &StateVector, target: &StateVector) -> Result<f64> {
    require_unit_norm(state)?;
    require_unit_norm(target)?;
    Ok(inner_product(target, state)?.norm_sqr().clamp(0.0, 1.0))
}

/// Picks the W state a post-selected output should be compared with.
///
/// Detectors whose single photon has the same polarization in every term are
/// treated as fixed product factors; the remaining three or four detectors
/// form the W target. Returns `None` for empty states or when no W state of
/// a supported size applies.
pub fn applicable_w_target(conditional: &StateVector, detectors: &[String]) -> Option<StateVector> {
    let first = conditional.terms().next()?.0;
    let mut fixed = Vec::new();
    let mut free = Vec::new();
    for d in detectors {
        let pol_of = |o: &Occupation| -> Option<Polarization> {
            let h = o.count(&PolarizedMode::h(d.as_str()));
            let v = o.count(&PolarizedMode::v(d.as_str()));
            match (h, v) {
                (1, 0) => Some(Polarization::H),
                (0, 1) => Some(Polarization::V),
                _ => None,
            }
        };
        let p0 = pol_of(first)?;
        if conditional.terms().all(|(o, _)| pol_of(o) == Some(p0)) {
            fixed.push((d.as_str(), p0));
        } else {
            free.push(d.as_str());
        }
    }
    let mut target = w_state(free.len(), &free).ok()?;
    for (d, pol) in fixed {
        let factor = StateVector::single_photon(d, pol, Convention::Fock);
        target = crate::state::tensor(&target, &factor).ok()?;
    }
    Some(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ket(s: &str) -> Occupation {
        s.parse().unwrap()
    }

    fn fock(terms: &[(&str, f64)]) -> StateVector {
        StateVector::from_terms(
            Convention::Fock,
            terms.iter().map(|(k, a)| (ket(k), Complex64::new(*a, 0.0))),
        )
    }

    fn w4() -> StateVector {
        w_state(4, &W4_READOUT).unwrap()
    }

    #[test]
    fn pattern_validation() {
        assert!(CoincidencePattern::new(["1", "1"], 1).is_err());
        assert!(CoincidencePattern::new(["1"], 0).is_err());
        let p = CoincidencePattern::single_photons(["1", "2"]).unwrap();
        assert!(p.matches(&ket("|H>1|V>2")));
        assert!(p.matches(&ket("|V>1|H>2|H>e")));
        assert!(!p.matches(&ket("|H>1|V>1")));
    }

    #[test]
    fn projection_is_polarization_blind() {
        let s = fock(&[("|H>1|V>2", 0.6), ("|2H>1", 0.8)]);
        let p = coincidence_project(&s, &CoincidencePattern::single_photons(["1", "2"]).unwrap()).unwrap();
        assert!((p.probability - 0.36).abs() < 1e-15);
        assert!((norm(&p.conditional).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(p.conditional.len(), 1);
    }

    #[test]
    fn projection_on_empty_detector_is_impossible() {
        let s = fock(&[("|H>1|V>2", 1.0)]);
        let p = coincidence_project(&s, &CoincidencePattern::single_photons(["9"]).unwrap()).unwrap();
        assert_eq!(p.probability, 0.0);
        assert!(p.conditional.is_empty());
    }

    #[test]
    fn projection_rejects_unnormalized() {
        let s = fock(&[("|H>1", 2.0)]);
        let pat = CoincidencePattern::single_photons(["1"]).unwrap();
        assert_eq!(coincidence_project(&s, &pat), Err(Error::Unnormalized(2.0)));
        assert!(project_after_filter(&s, &pat).is_err());
        let thin = fock(&[("|H>1", 0.5)]);
        let p = project_after_filter(&thin, &pat).unwrap();
        assert!((p.probability - 0.25).abs() < 1e-15);
    }

    #[test]
    fn w_state_shapes() {
        let w = w4();
        assert_eq!(w.len(), 4);
        assert!(w.terms().all(|(_, a)| (a.re - 0.5).abs() < 1e-15));
        assert!((norm(&w).unwrap() - 1.0).abs() < 1e-15);
        assert!(w
            .terms()
            .any(|(o, _)| o.render_ordered(&W4_READOUT) == "|H>1|H>3|H>2|V>4"));

        let w3 = w_state(3, &["3", "2", "4"]).unwrap();
        assert_eq!(w3.len(), 3);
        assert!(w3.terms().all(|(_, a)| (a.re - 1.0 / 3f64.sqrt()).abs() < 1e-15));
        assert!((norm(&w3).unwrap() - 1.0).abs() < 1e-15);

        assert_eq!(w_state(5, &["a", "b", "c", "d", "e"]), Err(Error::UnsupportedWSize(5)));
        assert!(matches!(w_state(3, &["a"]), Err(Error::ModeCount { .. })));
    }

    #[test]
    fn fidelity_examples() {
        assert!((fidelity(&w4(), &w4()).unwrap() - 1.0).abs() < 1e-12);

        // flipping H<->V on detector 1 in every term leaves no overlap
        let flipped = StateVector::from_terms(
            Convention::Fock,
            w4().terms().map(|(o, a)| {
                let counts = o.iter().map(|(m, n)| {
                    if m.spatial == "1" {
                        (PolarizedMode::new("1", m.pol.orthogonal()), n)
                    } else {
                        (m.clone(), n)
                    }
                });
                (Occupation::from_counts(counts), *a)
            }),
        );
        assert!(fidelity(&flipped, &w4()).unwrap() < 1e-15);

        let half = fock(&[("|H>1|H>3|H>2|V>4", FRAC_1_SQRT_2), ("|H>1|H>3|V>2|H>4", FRAC_1_SQRT_2)]);
        assert!((fidelity(&half, &w4()).unwrap() - 0.5).abs() < 1e-12);
        assert!(fidelity(&fock(&[("|H>1", 2.0)]), &w4()).is_err());
    }

    #[test]
    fn w_state_permutation_symmetry() {
        let modes = W4_READOUT;
        let mut idx = [0usize, 1, 2, 3];
        let mut count = 0;
        permute(&mut idx, 0, &mut |p| {
            let perm: Vec<&str> = p.iter().map(|&i| modes[i]).collect();
            let permuted = w_state(4, &perm).unwrap();
            assert!((fidelity(&permuted, &w4()).unwrap() - 1.0).abs() < 1e-12);
            assert!((fidelity(&w4(), &permuted).unwrap() - 1.0).abs() < 1e-12);
            count += 1;
        });
        assert_eq!(count, 24);
    }

    fn permute(a: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
        if k == a.len() {
            f(a);
            return;
        }
        for i in k..a.len() {
            a.swap(k, i);
            permute(a, k + 1, f);
            a.swap(k, i);
        }
    }

    #[test]
    fn count_patterns_enumerated() {
        let pats = enumerate_count_patterns(4, 4);
        // C(4+4, 4) vectors with sum <= 4
        assert_eq!(pats.len(), 70);
        assert!(pats.iter().all(|p| p.iter().sum::<u32>() <= 4));
        assert_eq!(enumerate_count_patterns(2, 1), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn target_selection() {
        let detectors: Vec<String> = W4_READOUT.iter().map(|s| s.to_string()).collect();
        let t = applicable_w_target(&w4(), &detectors).unwrap();
        assert!((fidelity(&t, &w4()).unwrap() - 1.0).abs() < 1e-12);

        let w3 = w_state(3, &["3", "2", "4"]).unwrap();
        let h1 = StateVector::single_photon("1", Polarization::H, Convention::Fock);
        let with_fixed = crate::state::tensor(&w3, &h1).unwrap();
        let t = applicable_w_target(&with_fixed, &detectors).unwrap();
        assert!((fidelity(&with_fixed, &t).unwrap() - 1.0).abs() < 1e-12);

        assert!(applicable_w_target(&StateVector::zero(Convention::Fock), &detectors).is_none());
    }
}
