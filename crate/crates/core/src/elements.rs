//! Optical elements as linear substitutions on creation operators.
//!
//! Each element rewrites `a†_in -> sum_k w_k a†_out_k`. Applying an element
//! to a state substitutes every creation operator of every monomial and
//! expands the products, so states must be in the monomial convention.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode::{Polarization, PolarizedMode};
use crate::state::{Convention, Occupation, StateVector, PRUNE_EPS};

/// Tolerance for [`check_unitary`].
pub const UNITARITY_TOL: f64 = 1e-12;

/// Which input port of a beam splitter picks up the minus sign on reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitterSign {
    /// `a†_m -> cos a†_m' + sin a†_n'`, `a†_n -> cos a†_n' - sin a†_m'`.
    SecondInput,
    /// `a†_m -> cos a†_m' - sin a†_n'`, `a†_n -> cos a†_n' + sin a†_m'`.
    FirstInput,
}

/// Beam-splitter sign convention used throughout the crate. With this choice
/// the simulated two-photon injection stage reproduces every term of the
/// published expansion except the two `cos 2θ sin θ / √2` terms, which come
/// out with the opposite overall sign (no real convention matches them all).
pub const SPLITTER_SIGN: SplitterSign = SplitterSign::SecondInput;

type Column = Vec<(PolarizedMode, Complex64)>;

/// A linear substitution on creation operators. Modes without a column are
/// left untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMap {
    pub name: String,
    columns: BTreeMap<PolarizedMode, Column>,
    pub unitary: bool,
}

impl ModeMap {
    pub fn identity(name: impl Into<String>) -> Self {
        ModeMap {
            name: name.into(),
            columns: BTreeMap::new(),
            unitary: true,
        }
    }

    /// Hand-built map; `unitary` is a claim that [`check_unitary`] can audit.
    pub fn from_columns<I>(name: impl Into<String>, columns: I, unitary: bool) -> Self
    where
        I: IntoIterator<Item = (PolarizedMode, Column)>,
    {
        ModeMap {
            name: name.into(),
            columns: columns.into_iter().collect(),
            unitary,
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = (&PolarizedMode, &Column)> {
        self.columns.iter()
    }

    /// Image of `a†_mode`.
    pub fn image(&self, mode: &PolarizedMode) -> Column {
        match self.columns.get(mode) {
            Some(col) => col.clone(),
            None => vec![(mode.clone(), Complex64::new(1.0, 0.0))],
        }
    }

    /// The substitution "apply `self`, then `next`".
    pub fn then(&self, next: &ModeMap) -> ModeMap {
        let mut columns: BTreeMap<PolarizedMode, Column> = BTreeMap::new();
        let inputs = self.columns.keys().chain(next.columns.keys());
        for input in inputs {
            if columns.contains_key(input) {
                continue;
            }
            let mut acc: BTreeMap<PolarizedMode, Complex64> = BTreeMap::new();
            for (mid, w1) in self.image(input) {
                for (out, w2) in next.image(&mid) {
                    *acc.entry(out).or_default() += w1 * w2;
                }
            }
            let col = acc.into_iter().filter(|(_, w)| w.norm() >= PRUNE_EPS).collect();
            columns.insert(input.clone(), col);
        }
        ModeMap {
            name: format!("{}*{}", self.name, next.name),
            columns,
            unitary: self.unitary && next.unitary,
        }
    }

    /// Spatial labels read or written by this map.
    pub fn spatial_labels(&self) -> Vec<&str> {
        let mut labels: Vec<&str> = self
            .columns
            .iter()
            .flat_map(|(m, col)| std::iter::once(m.spatial.as_str()).chain(col.iter().map(|(o, _)| o.spatial.as_str())))
            .collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if (0.0..=FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange(theta))
    }
}

/// Two-port elements are either fully in place (`m = m'`, `n = n'`) or use
/// four distinct labels.
pub(crate) fn check_ports(element: &str, inputs: (&str, &str), outputs: (&str, &str)) -> Result<()> {
    let collision = |detail: String| Error::LabelCollision {
        element: element.to_string(),
        detail,
    };
    if inputs.0 == inputs.1 {
        return Err(collision(format!("both inputs are {:?}", inputs.0)));
    }
    if outputs.0 == outputs.1 {
        return Err(collision(format!("both outputs are {:?}", outputs.0)));
    }
    let in_place = inputs.0 == outputs.0 && inputs.1 == outputs.1;
    let distinct = ![outputs.0, outputs.1].contains(&inputs.0) && ![outputs.0, outputs.1].contains(&inputs.1);
    if in_place || distinct {
        Ok(())
    } else {
        Err(collision(format!(
            "inputs ({}, {}) and outputs ({}, {}) partially overlap",
            inputs.0, inputs.1, outputs.0, outputs.1
        )))
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Polarization-independent beam splitter with transmittance `cos θ` and
/// reflectance `sin θ`. Port `m` transmits to `m'`, port `n` to `n'`.
pub fn beam_splitter_map(theta: f64, inputs: (&str, &str), outputs: (&str, &str)) -> Result<ModeMap> {
    check_angle(theta)?;
    check_ports("beam splitter", inputs, outputs)?;
    let (c, s) = (theta.cos(), theta.sin());
    let (sm, sn) = match SPLITTER_SIGN {
        SplitterSign::SecondInput => (s, -s),
        SplitterSign::FirstInput => (-s, s),
    };
    let mut columns = BTreeMap::new();
    for pol in Polarization::BOTH {
        let (m, n) = (PolarizedMode::new(inputs.0, pol), PolarizedMode::new(inputs.1, pol));
        let (mo, no) = (PolarizedMode::new(outputs.0, pol), PolarizedMode::new(outputs.1, pol));
        columns.insert(m, vec![(mo.clone(), real(c)), (no.clone(), real(sm))]);
        columns.insert(n, vec![(no, real(c)), (mo, real(sn))]);
    }
    Ok(ModeMap {
        name: format!(
            "BS({:.6})[{},{}->{},{}]",
            theta, inputs.0, inputs.1, outputs.0, outputs.1
        ),
        columns,
        unitary: true,
    })
}

/// Polarizing beam splitter: H transmits (`m -> m'`, `n -> n'`), V reflects
/// (`m -> n'`, `n -> m'`). No phase on either path.
pub fn pbs_map(inputs: (&str, &str), outputs: (&str, &str)) -> Result<ModeMap> {
    check_ports("polarizing beam splitter", inputs, outputs)?;
    let one = real(1.0);
    let columns = [
        (PolarizedMode::h(inputs.0), vec![(PolarizedMode::h(outputs.0), one)]),
        (PolarizedMode::h(inputs.1), vec![(PolarizedMode::h(outputs.1), one)]),
        (PolarizedMode::v(inputs.0), vec![(PolarizedMode::v(outputs.1), one)]),
        (PolarizedMode::v(inputs.1), vec![(PolarizedMode::v(outputs.0), one)]),
    ];
    Ok(ModeMap::from_columns(
        format!("PBS[{},{}->{},{}]", inputs.0, inputs.1, outputs.0, outputs.1),
        columns,
        true,
    ))
}

/// Path fold: relabels `mode` to `out` with unit coefficient.
pub fn mirror_map(mode: &str, out: &str) -> ModeMap {
    let columns = Polarization::BOTH.map(|pol| {
        (
            PolarizedMode::new(mode, pol),
            vec![(PolarizedMode::new(out, pol), real(1.0))],
        )
    });
    ModeMap::from_columns(format!("M[{mode}->{out}]"), columns, true)
}

/// Substitutes `map` into every monomial of `state` and merges like terms.
pub fn apply_map(state: &StateVector, map: &ModeMap) -> Result<StateVector> {
    state.require(Convention::Monomial)?;
    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, coeff) in state.terms() {
        let mut partial: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        partial.insert(Occupation::vacuum(), *coeff);
        for (mode, n) in occ.iter() {
            let image = map.image(mode);
            for _ in 0..n {
                let mut next: BTreeMap<Occupation, Complex64> = BTreeMap::new();
                for (partial_occ, pc) in &partial {
                    for (target, w) in &image {
                        *next.entry(partial_occ.with_added(target)).or_default() += pc * w;
                    }
                }
                partial = next;
            }
        }
        for (o, c) in partial {
            *out.entry(o).or_default() += c;
        }
    }
    Ok(StateVector::from_map(Convention::Monomial, out).pruned())
}

/// Ideal polarizer in front of `mode`: removes every term with a photon in
/// the orthogonal polarization. The result is not renormalized.
pub fn polarizer_filter(state: &StateVector, mode: &str, orientation: Polarization) -> StateVector {
    let blocked = PolarizedMode::new(mode, orientation.orthogonal());
    state.filtered(|occ| occ.count(&blocked) == 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitarityReport {
    pub max_deviation: f64,
    pub pass: bool,
}

/// Audits `U†U = I` over the map's input columns. Rows range over every
/// polarized mode the map writes to.
pub fn check_unitary(map: &ModeMap) -> UnitarityReport {
    let inputs: Vec<&PolarizedMode> = map.columns.keys().collect();
    let mut rows: Vec<&PolarizedMode> = map
        .columns
        .values()
        .flat_map(|col| col.iter().map(|(m, _)| m))
        .collect();
    rows.sort();
    rows.dedup();
    let dense: Vec<Vec<Complex64>> = inputs
        .iter()
        .map(|input| {
            let col = &map.columns[*input];
            rows.iter()
                .map(|r| col.iter().filter(|(m, _)| m == *r).map(|(_, w)| *w).sum::<Complex64>())
                .collect()
        })
        .collect();
    let mut max_deviation: f64 = 0.0;
    for (i, ci) in dense.iter().enumerate() {
        for (j, cj) in dense.iter().enumerate() {
            let gram: Complex64 = ci.iter().zip(cj).map(|(a, b)| a.conj() * b).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            max_deviation = max_deviation.max((gram - expected).norm());
        }
    }
    UnitarityReport {
        max_deviation,
        pass: max_deviation <= UNITARITY_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{norm, tensor};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn ket(s: &str) -> Occupation {
        s.parse().unwrap()
    }

    fn fock(terms: &[(&str, f64)]) -> StateVector {
        StateVector::from_terms(Convention::Fock, terms.iter().map(|(k, a)| (ket(k), real(*a))))
    }

    fn run(state: &StateVector, map: &ModeMap) -> StateVector {
        apply_map(&state.to_monomial(), map).unwrap().to_fock()
    }

    fn assert_close(a: &StateVector, b: &StateVector, tol: f64) {
        let keys: std::collections::BTreeSet<_> = a.terms().chain(b.terms()).map(|(o, _)| o.clone()).collect();
        for k in keys {
            let d = (a.coefficient(&k) - b.coefficient(&k)).norm();
            assert!(d <= tol, "{k}: {} vs {}", a.coefficient(&k), b.coefficient(&k));
        }
    }

    #[test]
    fn splitter_extreme_angles() {
        let bs0 = beam_splitter_map(0.0, ("m", "n"), ("m", "n")).unwrap();
        let s = fock(&[("|H>m|V>n", 1.0)]);
        assert_close(&run(&s, &bs0), &s, 0.0);

        let full = beam_splitter_map(FRAC_PI_2, ("m", "n"), ("p", "q")).unwrap();
        assert_close(&run(&fock(&[("|H>m", 1.0)]), &full), &fock(&[("|H>q", 1.0)]), 1e-15);
        assert_close(&run(&fock(&[("|H>n", 1.0)]), &full), &fock(&[("|H>p", -1.0)]), 1e-15);
    }

    #[test]
    fn splitter_amplitudes_at_one_third_transmittance() {
        let theta = (1.0 / 3f64.sqrt()).acos();
        let bs = beam_splitter_map(theta, ("m", "n"), ("p", "q")).unwrap();
        let out = run(&fock(&[("|H>m", 1.0)]), &bs);
        assert!((out.coefficient(&ket("|H>p")).re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((out.coefficient(&ket("|H>q")).re - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn splitter_rejects_bad_input() {
        assert_eq!(
            beam_splitter_map(-0.1, ("m", "n"), ("p", "q")),
            Err(Error::AngleOutOfRange(-0.1))
        );
        assert!(beam_splitter_map(2.0, ("m", "n"), ("p", "q")).is_err());
        assert!(beam_splitter_map(f64::NAN, ("m", "n"), ("p", "q")).is_err());
        assert!(matches!(
            beam_splitter_map(0.3, ("m", "m"), ("p", "q")),
            Err(Error::LabelCollision { .. })
        ));
        assert!(beam_splitter_map(0.3, ("m", "n"), ("m", "q")).is_err());
        assert!(beam_splitter_map(0.3, ("m", "n"), ("n", "m")).is_err());
        assert!(pbs_map(("m", "n"), ("p", "p")).is_err());
    }

    #[test]
    fn hom_dip_on_balanced_splitter() {
        // (cos a† + sin b†)(cos b† - sin a†) at π/4 = (b†² - a†²)/2
        let bs = beam_splitter_map(FRAC_PI_4, ("m", "n"), ("p", "q")).unwrap();
        let out = run(&fock(&[("|H>m|H>n", 1.0)]), &bs);
        assert_eq!(out.coefficient(&ket("|H>p|H>q")), real(0.0));
        assert_eq!(out.len(), 2);
        assert_close(
            &out,
            &fock(&[("|2H>p", -FRAC_1_SQRT_2), ("|2H>q", FRAC_1_SQRT_2)]),
            1e-15,
        );
    }

    #[test]
    fn pbs_routing() {
        let pbs = pbs_map(("m", "n"), ("p", "q")).unwrap();
        assert_close(&run(&fock(&[("|H>m", 1.0)]), &pbs), &fock(&[("|H>p", 1.0)]), 0.0);
        assert_close(&run(&fock(&[("|V>m", 1.0)]), &pbs), &fock(&[("|V>q", 1.0)]), 0.0);
        assert_close(&run(&fock(&[("|V>n", 1.0)]), &pbs), &fock(&[("|V>p", 1.0)]), 0.0);
    }

    #[test]
    fn epr_through_first_pbs_pair() {
        let s = 0.5f64.sqrt();
        let epr = fock(&[("|H>1|V>2", s), ("|V>1|H>2", s)]);
        let pbs1 = pbs_map(("1", "v1"), ("b", "a")).unwrap();
        let pbs2 = pbs_map(("2", "v2"), ("d", "c")).unwrap();
        let out = run(&run(&epr, &pbs1), &pbs2);
        assert_close(&out, &fock(&[("|H>b|V>c", s), ("|V>a|H>d", s)]), 1e-15);
    }

    #[test]
    fn mirror_relabels() {
        let m = mirror_map("x", "y");
        assert_close(&run(&fock(&[("|H>x", 1.0)]), &m), &fock(&[("|H>y", 1.0)]), 0.0);
        assert_close(&run(&fock(&[("|2H>x", 0.7)]), &m), &fock(&[("|2H>y", 0.7)]), 1e-15);
        let vac = StateVector::vacuum(Convention::Fock);
        assert_close(&run(&vac, &m), &vac, 0.0);
    }

    #[test]
    fn identity_map_returns_input() {
        let s = fock(&[("|2H>b|V>c", 0.6), ("|H>x", -0.8)]);
        assert_eq!(run(&s, &ModeMap::identity("id")), s);
    }

    #[test]
    fn apply_requires_monomial() {
        let s = fock(&[("|H>x", 1.0)]);
        assert!(matches!(
            apply_map(&s, &mirror_map("x", "y")),
            Err(Error::ConventionMismatch { .. })
        ));
    }

    #[test]
    fn polarizer_examples() {
        let s = 0.5f64.sqrt();
        let plus = fock(&[("|H>1", s), ("|V>1", s)]);
        let filtered = polarizer_filter(&plus, "1", Polarization::H);
        assert_close(&filtered, &fock(&[("|H>1", s)]), 0.0);
        assert!((norm(&filtered).unwrap().powi(2) - 0.5).abs() < 1e-15);
        let h_only = fock(&[("|H>1|V>2", 1.0)]);
        assert_eq!(polarizer_filter(&h_only, "1", Polarization::H), h_only);
    }

    #[test]
    fn unitarity_reports() {
        for theta in [0.0, 0.3, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let r = check_unitary(&beam_splitter_map(theta, ("m", "n"), ("p", "q")).unwrap());
            assert!(r.pass, "θ={theta}: {}", r.max_deviation);
        }
        assert!(check_unitary(&pbs_map(("m", "n"), ("p", "q")).unwrap()).pass);
        assert!(check_unitary(&mirror_map("m", "p")).pass);
        let doubler = ModeMap::from_columns(
            "x2",
            [(PolarizedMode::h("a"), vec![(PolarizedMode::h("a"), real(2.0))])],
            false,
        );
        let r = check_unitary(&doubler);
        assert!(!r.pass);
        assert!((r.max_deviation - 3.0).abs() < 1e-15);
    }

    #[test]
    fn splitter_undone_by_port_swapped_copy() {
        let theta = 0.77;
        let fwd = beam_splitter_map(theta, ("m", "n"), ("p", "q")).unwrap();
        let back = beam_splitter_map(theta, ("q", "p"), ("n", "m")).unwrap();
        let round = fwd.then(&back);
        let s = fock(&[("|2H>m|V>n", 0.6), ("|H>m|H>n", 0.8)]);
        assert_close(&run(&s, &round), &s, 1e-12);
    }

    fn arb_state() -> impl Strategy<Value = StateVector> {
        let labels = ["m", "n", "p", "q", "r", "s"];
        prop::collection::vec(
            (
                prop::collection::vec((0usize..6, any::<bool>()), 0..=4),
                -1.0f64..1.0,
                -1.0f64..1.0,
            ),
            1..6,
        )
        .prop_map(move |terms| {
            StateVector::from_terms(
                Convention::Fock,
                terms.into_iter().map(|(photons, re, im)| {
                    let occ = Occupation::from_counts(photons.into_iter().map(|(l, v)| {
                        let pol = if v { Polarization::V } else { Polarization::H };
                        (PolarizedMode::new(labels[l], pol), 1)
                    }));
                    (occ, Complex64::new(re, im))
                }),
            )
        })
    }

    fn arb_unitary() -> impl Strategy<Value = ModeMap> {
        let pairs = [("m", "n"), ("p", "q"), ("r", "s"), ("n", "p")];
        (0usize..4, 0.0f64..FRAC_PI_2, 0usize..3).prop_map(move |(pair, theta, kind)| {
            let (a, b) = pairs[pair];
            match kind {
                0 => beam_splitter_map(theta, (a, b), (a, b)).unwrap(),
                1 => pbs_map((a, b), (a, b)).unwrap(),
                _ => beam_splitter_map(theta, (b, a), (b, a)).unwrap(),
            }
        })
    }

    proptest! {
        #[test]
        fn unitary_maps_preserve_norm_and_photon_number(s in arb_state(), u in arb_unitary()) {
            let out = run(&s, &u);
            prop_assert!((norm(&out).unwrap() - norm(&s).unwrap()).abs() < 1e-12);
            for (o, _) in out.terms() {
                prop_assert!(s.photon_numbers().contains(&o.total_photons()));
            }
        }

        #[test]
        fn single_term_photon_number_conserved(u in arb_unitary(), n in 1u32..=4) {
            let s = StateVector::from_terms(Convention::Fock, [(Occupation::from_counts([(PolarizedMode::h("m"), n)]), real(1.0))]);
            for (o, _) in run(&s, &u).terms() {
                prop_assert_eq!(o.total_photons(), n);
            }
        }

        #[test]
        fn composition_matches_sequential(s in arb_state(), u1 in arb_unitary(), u2 in arb_unitary()) {
            let sequential = run(&run(&s, &u1), &u2);
            let composed = run(&s, &u1.then(&u2));
            let keys: Vec<_> = sequential.terms().chain(composed.terms()).map(|(o, _)| o.clone()).collect();
            for k in keys {
                prop_assert!((sequential.coefficient(&k) - composed.coefficient(&k)).norm() < 1e-12);
            }
        }

        #[test]
        fn polarizer_is_idempotent(s in arb_state(), v in any::<bool>()) {
            let pol = if v { Polarization::V } else { Polarization::H };
            let once = polarizer_filter(&s, "m", pol);
            prop_assert_eq!(polarizer_filter(&once, "m", pol), once);
        }

        #[test]
        fn tensor_then_split_commutes(theta in 0.0f64..FRAC_PI_2) {
            // a splitter acting on one factor leaves the other untouched
            let left = fock(&[("|H>m", 1.0)]);
            let right = fock(&[("|V>z", 1.0)]);
            let bs = beam_splitter_map(theta, ("m", "n"), ("m", "n")).unwrap();
            let joint = run(&tensor(&left, &right).unwrap(), &bs);
            let split = tensor(&run(&left, &bs), &right).unwrap();
            prop_assert_eq!(joint, split);
        }
    }
}
