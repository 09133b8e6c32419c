//! Sparse multimode bosonic states.
//!
//! A [`StateVector`] stores one complex coefficient per occupation pattern.
//! Coefficients are either creation-monomial coefficients (the natural form
//! for substituting creation operators) or Fock amplitudes of normalized kets
//! (the natural form for measurement). The two differ by `sqrt(prod n!)` per
//! term, and the [`Convention`] tag makes mixing them an error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mode::{Polarization, PolarizedMode};

/// Coefficients with magnitude below this are dropped after every element.
pub const PRUNE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convention {
    /// Coefficient of `prod (a†)^n |0>`.
    Monomial,
    /// Amplitude of the normalized Fock ket `prod |n>`.
    Fock,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convention::Monomial => f.write_str("monomial"),
            Convention::Fock => f.write_str("fock"),
        }
    }
}

/// Photon counts per polarized mode. Zero counts are never stored and the
/// entries are kept sorted, so equal occupations compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Occupation(Vec<(PolarizedMode, u32)>);

impl Occupation {
    pub fn vacuum() -> Self {
        Occupation(Vec::new())
    }

    /// Builds an occupation, summing repeated modes and dropping zeros.
    pub fn from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (PolarizedMode, u32)>,
    {
        let mut merged: BTreeMap<PolarizedMode, u32> = BTreeMap::new();
        for (mode, n) in counts {
            *merged.entry(mode).or_default() += n;
        }
        Occupation(merged.into_iter().filter(|(_, n)| *n > 0).collect())
    }

    pub fn single(mode: PolarizedMode) -> Self {
        Occupation(vec![(mode, 1)])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PolarizedMode, u32)> {
        self.0.iter().map(|(m, n)| (m, *n))
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_photons(&self) -> u32 {
        self.0.iter().map(|(_, n)| n).sum()
    }

    pub fn count(&self, mode: &PolarizedMode) -> u32 {
        self.0
            .binary_search_by(|(m, _)| m.cmp(mode))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    /// Photons in a spatial mode, summed over both polarizations.
    pub fn spatial_count(&self, spatial: &str) -> u32 {
        self.0
            .iter()
            .filter(|(m, _)| m.spatial == spatial)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn spatial_modes(&self) -> BTreeSet<&str> {
        self.0.iter().map(|(m, _)| m.spatial.as_str()).collect()
    }

    /// `prod n!` over all modes.
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|(_, n)| factorial(*n)).product()
    }

    /// Adds one photon to `mode`.
    pub fn with_added(&self, mode: &PolarizedMode) -> Self {
        let mut entries = self.0.clone();
        match entries.binary_search_by(|(m, _)| m.cmp(mode)) {
            Ok(i) => entries[i].1 += 1,
            Err(i) => entries.insert(i, (mode.clone(), 1)),
        }
        Occupation(entries)
    }

    /// Concatenates two occupations on disjoint spatial modes.
    pub fn merged(&self, other: &Occupation) -> Self {
        Occupation::from_counts(self.0.iter().chain(other.0.iter()).cloned())
    }

    /// Drops every entry on the given spatial mode.
    pub fn without_spatial(&self, spatial: &str) -> Self {
        Occupation(self.0.iter().filter(|(m, _)| m.spatial != spatial).cloned().collect())
    }

    /// Renders the ket with the listed spatial modes first, in that order,
    /// followed by any remaining modes in canonical order.
    pub fn render_ordered(&self, order: &[&str]) -> String {
        if self.is_vacuum() {
            return "|vac>".to_string();
        }
        let mut out = String::new();
        let mut seen = vec![false; self.0.len()];
        for label in order {
            for (i, (m, n)) in self.0.iter().enumerate() {
                if !seen[i] && m.spatial == *label {
                    seen[i] = true;
                    push_ket(&mut out, m, *n);
                }
            }
        }
        for (i, (m, n)) in self.0.iter().enumerate() {
            if !seen[i] {
                push_ket(&mut out, m, *n);
            }
        }
        out
    }
}

fn push_ket(out: &mut String, mode: &PolarizedMode, n: u32) {
    if n == 1 {
        out.push_str(&format!("|{}>{}", mode.pol, mode.spatial));
    } else {
        out.push_str(&format!("|{}{}>{}", n, mode.pol, mode.spatial));
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_ordered(&[]))
    }
}

/// Parses kets written as `|H>1|V>2` or `|2H>b`; `|vac>` is the vacuum.
impl FromStr for Occupation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s == "|vac>" || s.is_empty() {
            return Ok(Occupation::vacuum());
        }
        let mut counts = Vec::new();
        for part in s.split('|').skip(1) {
            let (inside, label) = part
                .split_once('>')
                .ok_or_else(|| format!("missing '>' in ket {s:?}"))?;
            if label.is_empty() {
                return Err(format!("missing mode label in ket {s:?}"));
            }
            let (digits, pol) = inside.split_at(inside.len().saturating_sub(1));
            let pol: Polarization = pol.parse()?;
            let n = if digits.is_empty() {
                1
            } else {
                digits
                    .parse::<u32>()
                    .map_err(|_| format!("bad photon count {digits:?} in ket {s:?}"))?
            };
            counts.push((PolarizedMode::new(label, pol), n));
        }
        if !s.starts_with('|') {
            return Err(format!("ket {s:?} must start with '|'"));
        }
        Ok(Occupation::from_counts(counts))
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Converts a creation-monomial coefficient to the Fock amplitude of the
/// corresponding normalized ket: `coeff * sqrt(prod n!)`.
pub fn fock_amplitude(coeff: Complex64, occ: &Occupation) -> Complex64 {
    coeff * occ.factorial_product().sqrt()
}

/// Inverse of [`fock_amplitude`].
pub fn monomial_coefficient(amplitude: Complex64, occ: &Occupation) -> Complex64 {
    amplitude / occ.factorial_product().sqrt()
}

/// Sparse superposition of occupation patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    terms: BTreeMap<Occupation, Complex64>,
    convention: Convention,
}

impl StateVector {
    /// The empty (zero) vector.
    pub fn zero(convention: Convention) -> Self {
        StateVector {
            terms: BTreeMap::new(),
            convention,
        }
    }

    pub fn vacuum(convention: Convention) -> Self {
        let mut s = Self::zero(convention);
        s.add_term(Occupation::vacuum(), Complex64::new(1.0, 0.0));
        s
    }

    /// `|pol>_spatial`; identical in both conventions.
    pub fn single_photon(spatial: &str, pol: Polarization, convention: Convention) -> Self {
        let mut s = Self::zero(convention);
        s.add_term(
            Occupation::single(PolarizedMode::new(spatial, pol)),
            Complex64::new(1.0, 0.0),
        );
        s
    }

    pub fn from_terms<I>(convention: Convention, terms: I) -> Self
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        let mut s = Self::zero(convention);
        for (occ, c) in terms {
            s.add_term(occ, c);
        }
        s
    }

    /// Adds `coeff` to the stored coefficient of `occ`, merging like terms.
    pub fn add_term(&mut self, occ: Occupation, coeff: Complex64) {
        *self.terms.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += coeff;
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, occ: &Occupation) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Drops coefficients with magnitude below `eps`.
    pub fn prune(&mut self, eps: f64) {
        self.terms.retain(|_, c| c.norm() >= eps);
    }

    pub fn pruned(mut self) -> Self {
        self.prune(PRUNE_EPS);
        self
    }

    pub fn to_fock(&self) -> Self {
        match self.convention {
            Convention::Fock => self.clone(),
            Convention::Monomial => StateVector {
                terms: self
                    .terms
                    .iter()
                    .map(|(o, c)| (o.clone(), fock_amplitude(*c, o)))
                    .collect(),
                convention: Convention::Fock,
            },
        }
    }

    pub fn to_monomial(&self) -> Self {
        match self.convention {
            Convention::Monomial => self.clone(),
            Convention::Fock => StateVector {
                terms: self
                    .terms
                    .iter()
                    .map(|(o, c)| (o.clone(), monomial_coefficient(*c, o)))
                    .collect(),
                convention: Convention::Monomial,
            },
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        StateVector {
            terms: self.terms.iter().map(|(o, c)| (o.clone(), c * factor)).collect(),
            convention: self.convention,
        }
    }

    /// Keeps only the terms satisfying `keep`.
    pub fn filtered<F>(&self, mut keep: F) -> Self
    where
        F: FnMut(&Occupation) -> bool,
    {
        StateVector {
            terms: self
                .terms
                .iter()
                .filter(|(o, _)| keep(o))
                .map(|(o, c)| (o.clone(), *c))
                .collect(),
            convention: self.convention,
        }
    }

    pub fn spatial_modes(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|o| o.spatial_modes().into_iter().map(str::to_string))
            .collect()
    }

    /// Distinct total photon numbers across terms.
    pub fn photon_numbers(&self) -> BTreeSet<u32> {
        self.terms.keys().map(Occupation::total_photons).collect()
    }

    pub fn norm(&self) -> Result<f64> {
        norm(self)
    }

    pub(crate) fn require(&self, convention: Convention) -> Result<()> {
        if self.convention == convention {
            Ok(())
        } else {
            Err(Error::ConventionMismatch {
                expected: convention,
                found: self.convention,
            })
        }
    }

    pub(crate) fn from_map(convention: Convention, terms: BTreeMap<Occupation, Complex64>) -> Self {
        StateVector { terms, convention }
    }
}

/// `sqrt(sum |amplitude|^2)` of a Fock-convention state.
pub fn norm(state: &StateVector) -> Result<f64> {
    state.require(Convention::Fock)?;
    Ok(state.terms.values().map(Complex64::norm_sqr).sum::<f64>().sqrt())
}

/// `<s1|s2>`, conjugate-linear in `s1`.
pub fn inner_product(s1: &StateVector, s2: &StateVector) -> Result<Complex64> {
    s1.require(Convention::Fock)?;
    s2.require(Convention::Fock)?;
    let (small, large, conj_small) = if s1.len() <= s2.len() {
        (s1, s2, true)
    } else {
        (s2, s1, false)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (occ, c) in &small.terms {
        if let Some(d) = large.terms.get(occ) {
            acc += if conj_small { c.conj() * d } else { d.conj() * c };
        }
    }
    Ok(acc)
}

/// Tensor product of states on disjoint spatial modes.
pub fn tensor(s1: &StateVector, s2: &StateVector) -> Result<StateVector> {
    if s1.convention != s2.convention {
        return Err(Error::ConventionMismatch {
            expected: s1.convention,
            found: s2.convention,
        });
    }
    let left = s1.spatial_modes();
    if let Some(shared) = s2.spatial_modes().into_iter().find(|m| left.contains(m)) {
        return Err(Error::OverlappingModes(shared));
    }
    let mut out = StateVector::zero(s1.convention);
    for (o1, c1) in &s1.terms {
        for (o2, c2) in &s2.terms {
            out.add_term(o1.merged(o2), c1 * c2);
        }
    }
    Ok(out)
}
