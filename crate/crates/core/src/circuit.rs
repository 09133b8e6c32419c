//! Circuits: declared modes, an input state, an ordered element list, named
//! taps for intermediate states and an optional coincidence pattern.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;

use crate::elements::{self, ModeMap};
use crate::error::{Error, Result};
use crate::mode::{Polarization, PolarizedMode};
use crate::postselect::{CoincidencePattern, W4_READOUT};
use crate::state::{Convention, Occupation, StateVector};

/// Splitting ratio of the two detector-side splitters, in degrees. The
/// coincidence amplitudes only come out uniform for a balanced split.
pub const DETECTOR_SPLITTER_DEG: f64 = 45.0;

/// Spatial modes of the built-in setup. `v1`/`v2` are the unused input ports
/// of the first two polarizing splitters, `u1`/`u2` the unused exits of the
/// recombining ones. `e` and `f` keep whatever leaves the injection splitters
/// undetected.
pub const W4_MODES: [&str; 14] = ["1", "2", "v1", "v2", "a", "b", "c", "d", "e", "f", "u1", "u2", "3", "4"];

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Angle kept in degrees so circuit files round-trip exactly.
    BeamSplitter {
        theta_deg: f64,
        inputs: [String; 2],
        outputs: [String; 2],
    },
    Pbs {
        inputs: [String; 2],
        outputs: [String; 2],
    },
    Mirror {
        input: String,
        output: String,
    },
    Polarizer {
        mode: String,
        orientation: Polarization,
    },
}

impl Element {
    /// `theta` in radians.
    pub fn beam_splitter(theta: f64, inputs: [&str; 2], outputs: [&str; 2]) -> Self {
        // to_degrees can land an ulp above 90 at pi/2
        let deg = theta.to_degrees();
        let theta_deg = if deg > 90.0 && deg - 90.0 < 1e-9 { 90.0 } else { deg };
        Element::BeamSplitter {
            theta_deg,
            inputs: inputs.map(str::to_string),
            outputs: outputs.map(str::to_string),
        }
    }

    pub fn pbs(inputs: [&str; 2], outputs: [&str; 2]) -> Self {
        Element::Pbs {
            inputs: inputs.map(str::to_string),
            outputs: outputs.map(str::to_string),
        }
    }

    pub fn mirror(input: &str, output: &str) -> Self {
        Element::Mirror {
            input: input.to_string(),
            output: output.to_string(),
        }
    }

    pub fn polarizer(mode: &str, orientation: Polarization) -> Self {
        Element::Polarizer {
            mode: mode.to_string(),
            orientation,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Element::BeamSplitter { .. } => "bs",
            Element::Pbs { .. } => "pbs",
            Element::Mirror { .. } => "mirror",
            Element::Polarizer { .. } => "polarizer",
        }
    }

    /// Mode labels with their field path suffix, for validation messages.
    fn labels(&self) -> Vec<(String, &str)> {
        match self {
            Element::BeamSplitter { inputs, outputs, .. } | Element::Pbs { inputs, outputs } => inputs
                .iter()
                .enumerate()
                .map(|(i, m)| (format!("in[{i}]"), m.as_str()))
                .chain(
                    outputs
                        .iter()
                        .enumerate()
                        .map(|(i, m)| (format!("out[{i}]"), m.as_str())),
                )
                .collect(),
            Element::Mirror { input, output } => vec![
                ("in[0]".to_string(), input.as_str()),
                ("out[0]".to_string(), output.as_str()),
            ],
            Element::Polarizer { mode, .. } => vec![("in[0]".to_string(), mode.as_str())],
        }
    }

    /// The substitution this element performs; `None` for filters.
    pub fn mode_map(&self) -> Result<Option<ModeMap>> {
        fn pair(p: &[String; 2]) -> (&str, &str) {
            (&p[0], &p[1])
        }
        Ok(match self {
            Element::BeamSplitter {
                theta_deg,
                inputs,
                outputs,
            } => Some(elements::beam_splitter_map(
                theta_deg.to_radians().min(FRAC_PI_2),
                pair(inputs),
                pair(outputs),
            )?),
            Element::Pbs { inputs, outputs } => Some(elements::pbs_map(pair(inputs), pair(outputs))?),
            Element::Mirror { input, output } => Some(elements::mirror_map(input, output)),
            Element::Polarizer { .. } => None,
        })
    }

    /// Applies the element to a monomial-convention state.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        match self {
            Element::Polarizer { mode, orientation } => {
                state.require(Convention::Monomial)?;
                Ok(elements::polarizer_filter(state, mode, *orientation))
            }
            other => {
                let map = other.mode_map()?.expect("non-filter elements have a mode map");
                elements::apply_map(state, &map)
            }
        }
    }
}

/// One term of a circuit's input state: a Fock amplitude on a product of
/// photon groups.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTerm {
    pub amplitude: Complex64,
    pub photons: Occupation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tap {
    /// Index of the element after which the state is captured.
    pub after: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    modes: Vec<String>,
    input: Vec<InputTerm>,
    elements: Vec<Element>,
    taps: Vec<Tap>,
    postselect: Option<CoincidencePattern>,
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

impl Circuit {
    /// Validates and assembles a circuit. Error locations are field paths
    /// such as `elements[3].in[1]`.
    pub fn new(
        modes: Vec<String>,
        input: Vec<InputTerm>,
        elements: Vec<Element>,
        taps: Vec<Tap>,
        postselect: Option<CoincidencePattern>,
    ) -> Result<Self> {
        let mut declared = BTreeSet::new();
        for (i, m) in modes.iter().enumerate() {
            if m.is_empty() {
                return Err(invalid(format!("modes[{i}]"), "empty mode label"));
            }
            if !declared.insert(m.as_str()) {
                return Err(invalid(format!("modes[{i}]"), format!("mode {m:?} declared twice")));
            }
        }
        let undeclared = |mode: &str, location: String| Error::UndeclaredMode {
            mode: mode.to_string(),
            location,
        };
        for (t, term) in input.iter().enumerate() {
            if let Some(m) = term.photons.spatial_modes().into_iter().find(|m| !declared.contains(m)) {
                return Err(undeclared(m, format!("input[{t}]")));
            }
        }
        for (i, el) in elements.iter().enumerate() {
            for (field, label) in el.labels() {
                if !declared.contains(label) {
                    return Err(undeclared(label, format!("elements[{i}].{field}")));
                }
            }
            if let Element::BeamSplitter { theta_deg, .. } = el {
                if !(0.0..=90.0).contains(theta_deg) {
                    return Err(invalid(
                        format!("elements[{i}].theta_deg"),
                        format!("angle {theta_deg} deg is outside [0, 90]"),
                    ));
                }
            }
            if let Err(e) = el.mode_map() {
                return Err(invalid(format!("elements[{i}]"), e.to_string()));
            }
        }
        let mut names = BTreeSet::new();
        for (k, tap) in taps.iter().enumerate() {
            if tap.after >= elements.len() {
                return Err(invalid(
                    format!("taps[{k}].after"),
                    format!("element index {} out of range ({} elements)", tap.after, elements.len()),
                ));
            }
            if k > 0 && tap.after <= taps[k - 1].after {
                return Err(invalid(
                    format!("taps[{k}].after"),
                    "tap positions must be strictly increasing",
                ));
            }
            if !names.insert(tap.name.as_str()) {
                return Err(invalid(
                    format!("taps[{k}].name"),
                    format!("duplicate tap name {:?}", tap.name),
                ));
            }
        }
        if let Some(p) = &postselect {
            for (i, d) in p.detectors().iter().enumerate() {
                if !declared.contains(d.as_str()) {
                    return Err(undeclared(d, format!("postselect.detectors[{i}]")));
                }
            }
        }
        Ok(Circuit {
            modes,
            input,
            elements,
            taps,
            postselect,
        })
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn input(&self) -> &[InputTerm] {
        &self.input
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn tap_names(&self) -> Vec<&str> {
        self.taps.iter().map(|t| t.name.as_str()).collect()
    }

    pub fn postselect(&self) -> Option<&CoincidencePattern> {
        self.postselect.as_ref()
    }

    /// Whether any element discards amplitude.
    pub fn has_filter(&self) -> bool {
        self.elements.iter().any(|e| matches!(e, Element::Polarizer { .. }))
    }

    /// The declared input as a Fock-convention state (vacuum if none given).
    pub fn input_state(&self) -> StateVector {
        if self.input.is_empty() {
            return StateVector::vacuum(Convention::Fock);
        }
        StateVector::from_terms(
            Convention::Fock,
            self.input.iter().map(|t| (t.photons.clone(), t.amplitude)),
        )
    }
}

/// `(|H>1|V>2 + |V>1|H>2)/√2 ⊗ |H>e ⊗ |H>f`.
pub fn w4_input_state() -> StateVector {
    let amp = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let term = |pol1: Polarization, pol2: Polarization| {
        Occupation::from_counts([
            (PolarizedMode::new("1", pol1), 1),
            (PolarizedMode::new("2", pol2), 1),
            (PolarizedMode::h("e"), 1),
            (PolarizedMode::h("f"), 1),
        ])
    };
    StateVector::from_terms(
        Convention::Fock,
        [
            (term(Polarization::H, Polarization::V), amp),
            (term(Polarization::V, Polarization::H), amp),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum W4Variant {
    Plain,
    /// Horizontal polarizer in front of detector 1.
    PolarizerD1,
}

/// The four-photon W-state setup at injection-splitter angle `theta`.
///
/// The EPR pair is split by polarization into arms a/b and c/d, one photon
/// is injected into each H arm through a splitter at `theta`, the arms are
/// recombined into branches 1 and 2, and each branch is split evenly onto a
/// pair of detectors (1,3) and (2,4).
pub fn build_w4_circuit(theta: f64, variant: W4Variant) -> Result<Circuit> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::AngleOutOfRange(theta));
    }
    let mut elements = vec![
        Element::pbs(["1", "v1"], ["b", "a"]),
        Element::pbs(["2", "v2"], ["d", "c"]),
        Element::beam_splitter(theta, ["b", "e"], ["b", "e"]),
        Element::beam_splitter(theta, ["d", "f"], ["d", "f"]),
        Element::mirror("a", "a"),
        Element::mirror("b", "b"),
        Element::mirror("c", "c"),
        Element::mirror("d", "d"),
        Element::pbs(["b", "a"], ["1", "u1"]),
        Element::pbs(["d", "c"], ["2", "u2"]),
        Element::BeamSplitter {
            theta_deg: DETECTOR_SPLITTER_DEG,
            inputs: ["1".into(), "3".into()],
            outputs: ["1".into(), "3".into()],
        },
        Element::BeamSplitter {
            theta_deg: DETECTOR_SPLITTER_DEG,
            inputs: ["2".into(), "4".into()],
            outputs: ["2".into(), "4".into()],
        },
    ];
    if variant == W4Variant::PolarizerD1 {
        elements.push(Element::polarizer("1", Polarization::H));
    }
    let taps = [(1, "psi1"), (3, "psi2"), (9, "psi3"), (11, "psi4")]
        .into_iter()
        .map(|(after, name)| Tap {
            after,
            name: name.to_string(),
        })
        .collect();
    let input = w4_input_state()
        .terms()
        .map(|(o, a)| InputTerm {
            amplitude: *a,
            photons: o.clone(),
        })
        .collect();
    Circuit::new(
        W4_MODES.iter().map(|s| s.to_string()).collect(),
        input,
        elements,
        taps,
        Some(CoincidencePattern::single_photons(W4_READOUT)?),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Fock-convention state after the last element, before post-selection.
    pub final_state: StateVector,
    /// Fock-convention snapshots in tap order.
    pub taps: Vec<(String, StateVector)>,
}

impl RunOutput {
    pub fn tap(&self, name: &str) -> Option<&StateVector> {
        self.taps.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}

/// Runs `input` through the circuit's elements in order.
pub fn run_circuit(circuit: &Circuit, input: &StateVector) -> Result<RunOutput> {
    let declared: BTreeSet<&str> = circuit.modes.iter().map(String::as_str).collect();
    if let Some(m) = input
        .spatial_modes()
        .into_iter()
        .find(|m| !declared.contains(m.as_str()))
    {
        return Err(Error::UndeclaredMode {
            mode: m,
            location: "input state".to_string(),
        });
    }
    let mut state = input.to_monomial();
    let mut taps = Vec::with_capacity(circuit.taps.len());
    let mut pending = circuit.taps.iter().peekable();
    for (i, el) in circuit.elements.iter().enumerate() {
        state = el.apply(&state)?;
        while let Some(tap) = pending.next_if(|t| t.after == i) {
            taps.push((tap.name.clone(), state.to_fock()));
        }
    }
    Ok(RunOutput {
        final_state: state.to_fock(),
        taps,
    })
}
