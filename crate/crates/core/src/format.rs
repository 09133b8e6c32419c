//! JSON circuit description files.
//!
//! ```json
//! {
//!   "modes": ["a", "b"],
//!   "input": [{"mode": "a", "pol": "H", "count": 1}],
//!   "elements": [{"type": "bs", "theta_deg": 45, "in": ["a", "b"], "out": ["a", "b"]}],
//!   "taps": [{"after": 0, "name": "split"}],
//!   "postselect": {"detectors": ["a", "b"], "count": 1}
//! }
//! ```
//!
//! `input` is either a list of photon groups forming one product term, or a
//! list of weighted terms `{"amplitude": [re, im], "photons": [groups]}`
//! whose amplitudes are Fock amplitudes. Angles are in degrees. Unknown keys
//! are rejected, and every error names a line, column and field path.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::circuit::{Circuit, Element, InputTerm, Tap};
use crate::error::{Error, Result};
use crate::mode::{Polarization, PolarizedMode};
use crate::postselect::CoincidencePattern;
use crate::state::Occupation;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Seg {
    Key(String),
    Index(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Path(Vec<Seg>);

impl Path {
    fn key(&self, k: &str) -> Path {
        let mut p = self.0.clone();
        p.push(Seg::Key(k.to_string()));
        Path(p)
    }

    fn index(&self, i: usize) -> Path {
        let mut p = self.0.clone();
        p.push(Seg::Index(i));
        Path(p)
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for seg in &self.0 {
            match seg {
                Seg::Key(k) => {
                    if !out.is_empty() {
                        out.push('.');
                    }
                    out.push_str(k);
                }
                Seg::Index(i) => out.push_str(&format!("[{i}]")),
            }
        }
        if out.is_empty() {
            out.push_str("<root>");
        }
        out
    }

    /// Inverse of `render` for paths produced by circuit validation.
    fn parse(s: &str) -> Path {
        let mut segs = Vec::new();
        for part in s.split('.') {
            let (key, rest) = part.split_once('[').map_or((part, ""), |(k, r)| (k, r));
            if !key.is_empty() {
                segs.push(Seg::Key(key.to_string()));
            }
            for idx in rest.split('[') {
                if let Ok(i) = idx.trim_end_matches(']').parse() {
                    segs.push(Seg::Index(i));
                }
            }
        }
        Path(segs)
    }
}

/// Finds the line and column (1-based) where the value at `path` starts.
/// `text` must already be valid JSON.
fn locate(text: &str, path: &Path) -> Option<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    skip_ws(bytes, &mut pos);
    for seg in &path.0 {
        match (seg, bytes.get(pos)?) {
            (Seg::Key(want), b'{') => {
                pos += 1;
                loop {
                    skip_ws(bytes, &mut pos);
                    if bytes.get(pos)? == &b'}' {
                        return None;
                    }
                    let start = pos;
                    skip_string(bytes, &mut pos)?;
                    let key = &text[start + 1..pos - 1];
                    skip_ws(bytes, &mut pos);
                    pos += 1; // ':'
                    skip_ws(bytes, &mut pos);
                    if key == want {
                        break;
                    }
                    skip_value(bytes, &mut pos)?;
                    skip_ws(bytes, &mut pos);
                    if bytes.get(pos)? == &b',' {
                        pos += 1;
                    }
                }
            }
            (Seg::Index(want), b'[') => {
                pos += 1;
                for _ in 0..*want {
                    skip_ws(bytes, &mut pos);
                    if bytes.get(pos)? == &b']' {
                        return None;
                    }
                    skip_value(bytes, &mut pos)?;
                    skip_ws(bytes, &mut pos);
                    if bytes.get(pos)? == &b',' {
                        pos += 1;
                    }
                }
                skip_ws(bytes, &mut pos);
            }
            _ => return None,
        }
    }
    let before = &text[..pos];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.chars().count(), |nl| before[nl + 1..].chars().count())
        + 1;
    Some((line, col))
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while matches!(bytes.get(*pos), Some(b' ' | b'\t' | b'\n' | b'\r')) {
        *pos += 1;
    }
}

fn skip_string(bytes: &[u8], pos: &mut usize) -> Option<()> {
    *pos += 1;
    loop {
        match bytes.get(*pos)? {
            b'\\' => *pos += 2,
            b'"' => {
                *pos += 1;
                return Some(());
            }
            _ => *pos += 1,
        }
    }
}

fn skip_value(bytes: &[u8], pos: &mut usize) -> Option<()> {
    match bytes.get(*pos)? {
        b'"' => skip_string(bytes, pos),
        b'{' | b'[' => {
            let mut depth = 0usize;
            loop {
                match bytes.get(*pos)? {
                    b'"' => {
                        skip_string(bytes, pos)?;
                        continue;
                    }
                    b'{' | b'[' => depth += 1,
                    b'}' | b']' => {
                        depth -= 1;
                        if depth == 0 {
                            *pos += 1;
                            return Some(());
                        }
                    }
                    _ => {}
                }
                *pos += 1;
            }
        }
        _ => {
            while !matches!(
                bytes.get(*pos),
                None | Some(b',' | b'}' | b']' | b' ' | b'\n' | b'\r' | b'\t')
            ) {
                *pos += 1;
            }
            Some(())
        }
    }
}

fn describe(text: &str, path: &Path) -> String {
    match locate(text, path) {
        Some((line, col)) => format!("line {line}, column {col} ({})", path.render()),
        None => path.render(),
    }
}

type Walk<T> = std::result::Result<T, (Path, String)>;

fn object<'v>(v: &'v Value, path: &Path, allowed: &[&str]) -> Walk<&'v Map<String, Value>> {
    let map = v
        .as_object()
        .ok_or_else(|| (path.clone(), "expected an object".to_string()))?;
    if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err((path.key(k), format!("unknown key {k:?}")));
    }
    Ok(map)
}

fn required<'v>(map: &'v Map<String, Value>, key: &str, path: &Path) -> Walk<&'v Value> {
    map.get(key)
        .ok_or_else(|| (path.clone(), format!("missing required key {key:?}")))
}

fn string(v: &Value, path: &Path) -> Walk<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| (path.clone(), "expected a string".to_string()))
}

fn array<'v>(v: &'v Value, path: &Path) -> Walk<&'v Vec<Value>> {
    v.as_array()
        .ok_or_else(|| (path.clone(), "expected an array".to_string()))
}

fn count(v: &Value, path: &Path) -> Walk<u32> {
    v.as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .filter(|n| *n >= 1)
        .ok_or_else(|| (path.clone(), "expected an integer >= 1".to_string()))
}

fn polarization(v: &Value, path: &Path) -> Walk<Polarization> {
    string(v, path)?.parse().map_err(|e| (path.clone(), e))
}

fn labels<const N: usize>(v: &Value, path: &Path) -> Walk<[String; N]> {
    let items = array(v, path)?;
    if items.len() != N {
        return Err((
            path.clone(),
            format!("expected {N} mode label(s), found {}", items.len()),
        ));
    }
    let mut out: [String; N] = std::array::from_fn(|_| String::new());
    for (i, item) in items.iter().enumerate() {
        out[i] = string(item, &path.index(i))?;
    }
    Ok(out)
}

fn group(v: &Value, path: &Path) -> Walk<(PolarizedMode, u32)> {
    let map = object(v, path, &["mode", "pol", "count"])?;
    let mode = string(required(map, "mode", path)?, &path.key("mode"))?;
    let pol = polarization(required(map, "pol", path)?, &path.key("pol"))?;
    let n = count(required(map, "count", path)?, &path.key("count"))?;
    Ok((PolarizedMode::new(mode, pol), n))
}

fn input(v: &Value, path: &Path) -> Walk<Vec<InputTerm>> {
    let items = array(v, path)?;
    let weighted = items
        .first()
        .and_then(Value::as_object)
        .is_some_and(|m| m.contains_key("amplitude"));
    if !weighted {
        let groups = items
            .iter()
            .enumerate()
            .map(|(i, g)| group(g, &path.index(i)))
            .collect::<Walk<Vec<_>>>()?;
        if groups.is_empty() {
            return Ok(Vec::new());
        }
        return Ok(vec![InputTerm {
            amplitude: Complex64::new(1.0, 0.0),
            photons: Occupation::from_counts(groups),
        }]);
    }
    let mut terms = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let p = path.index(i);
        let map = object(item, &p, &["amplitude", "photons"])?;
        let amp_path = p.key("amplitude");
        let amp = array(required(map, "amplitude", &p)?, &amp_path)?;
        let parts: Vec<f64> = amp.iter().filter_map(Value::as_f64).collect();
        if amp.len() != 2 || parts.len() != 2 {
            return Err((amp_path, "expected [re, im]".to_string()));
        }
        let photons_path = p.key("photons");
        let groups = array(required(map, "photons", &p)?, &photons_path)?
            .iter()
            .enumerate()
            .map(|(j, g)| group(g, &photons_path.index(j)))
            .collect::<Walk<Vec<_>>>()?;
        terms.push(InputTerm {
            amplitude: Complex64::new(parts[0], parts[1]),
            photons: Occupation::from_counts(groups),
        });
    }
    Ok(terms)
}

fn element(v: &Value, path: &Path) -> Walk<Element> {
    let kind = v
        .as_object()
        .and_then(|m| m.get("type"))
        .ok_or_else(|| (path.clone(), "element needs a \"type\"".to_string()))?;
    let kind = string(kind, &path.key("type"))?;
    match kind.as_str() {
        "bs" => {
            let map = object(v, path, &["type", "theta_deg", "in", "out"])?;
            let theta_deg = map
                .get("theta_deg")
                .ok_or_else(|| (path.clone(), "beam splitter needs \"theta_deg\"".to_string()))?
                .as_f64()
                .ok_or_else(|| (path.key("theta_deg"), "expected a number".to_string()))?;
            Ok(Element::BeamSplitter {
                theta_deg,
                inputs: labels(required(map, "in", path)?, &path.key("in"))?,
                outputs: labels(required(map, "out", path)?, &path.key("out"))?,
            })
        }
        "pbs" => {
            let map = object(v, path, &["type", "in", "out"])?;
            Ok(Element::Pbs {
                inputs: labels(required(map, "in", path)?, &path.key("in"))?,
                outputs: labels(required(map, "out", path)?, &path.key("out"))?,
            })
        }
        "mirror" => {
            let map = object(v, path, &["type", "in", "out"])?;
            let [input] = labels::<1>(required(map, "in", path)?, &path.key("in"))?;
            let [output] = labels::<1>(required(map, "out", path)?, &path.key("out"))?;
            Ok(Element::Mirror { input, output })
        }
        "polarizer" => {
            let map = object(v, path, &["type", "in", "out", "orientation"])?;
            let [mode] = labels::<1>(required(map, "in", path)?, &path.key("in"))?;
            if let Some(out) = map.get("out") {
                let [o] = labels::<1>(out, &path.key("out"))?;
                if o != mode {
                    return Err((
                        path.key("out"),
                        "a polarizer acts in place; \"out\" must equal \"in\"".to_string(),
                    ));
                }
            }
            let orientation = polarization(required(map, "orientation", path)?, &path.key("orientation"))?;
            Ok(Element::Polarizer { mode, orientation })
        }
        other => Err((path.key("type"), format!("unknown element type {other:?}"))),
    }
}

fn tap(v: &Value, path: &Path) -> Walk<Tap> {
    let map = object(v, path, &["after", "name"])?;
    let after = required(map, "after", path)?
        .as_u64()
        .ok_or_else(|| (path.key("after"), "expected an element index".to_string()))? as usize;
    let name = string(required(map, "name", path)?, &path.key("name"))?;
    Ok(Tap { after, name })
}

fn postselect(v: &Value, path: &Path) -> Walk<(Vec<String>, u32)> {
    let map = object(v, path, &["detectors", "count"])?;
    let dpath = path.key("detectors");
    let detectors = array(required(map, "detectors", path)?, &dpath)?
        .iter()
        .enumerate()
        .map(|(i, d)| string(d, &dpath.index(i)))
        .collect::<Walk<Vec<_>>>()?;
    let n = match map.get("count") {
        Some(c) => count(c, &path.key("count"))?,
        None => 1,
    };
    Ok((detectors, n))
}

type Parts = (
    Vec<String>,
    Vec<InputTerm>,
    Vec<Element>,
    Vec<Tap>,
    Option<(Vec<String>, u32)>,
);

fn walk(root: &Value) -> Walk<Parts> {
    let top = Path::default();
    let map = object(root, &top, &["modes", "input", "elements", "taps", "postselect"])?;
    let mpath = top.key("modes");
    let modes = array(required(map, "modes", &top)?, &mpath)?
        .iter()
        .enumerate()
        .map(|(i, m)| string(m, &mpath.index(i)))
        .collect::<Walk<Vec<_>>>()?;
    let input = match map.get("input") {
        Some(v) => input(v, &top.key("input"))?,
        None => Vec::new(),
    };
    let mut elements = Vec::new();
    if let Some(v) = map.get("elements") {
        let epath = top.key("elements");
        for (i, e) in array(v, &epath)?.iter().enumerate() {
            elements.push(element(e, &epath.index(i))?);
        }
    }
    let mut taps = Vec::new();
    if let Some(v) = map.get("taps") {
        let tpath = top.key("taps");
        for (i, t) in array(v, &tpath)?.iter().enumerate() {
            taps.push(tap(t, &tpath.index(i))?);
        }
    }
    let post = match map.get("postselect") {
        Some(v) => Some(postselect(v, &top.key("postselect"))?),
        None => None,
    };
    Ok((modes, input, elements, taps, post))
}

/// Parses and validates a circuit description.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let (modes, input, elements, taps, post) = walk(&root).map_err(|(path, message)| Error::Parse {
        location: describe(text, &path),
        message,
    })?;
    let postselect = match post {
        Some((detectors, n)) => Some(CoincidencePattern::new(detectors, n).map_err(|e| Error::Parse {
            location: describe(text, &Path::default().key("postselect")),
            message: e.to_string(),
        })?),
        None => None,
    };
    Circuit::new(modes, input, elements, taps, postselect).map_err(|e| match e {
        Error::UndeclaredMode { mode, location } => Error::UndeclaredMode {
            mode,
            location: describe(text, &Path::parse(&location)),
        },
        Error::Parse { location, message } => Error::Parse {
            location: describe(text, &Path::parse(&location)),
            message,
        },
        other => other,
    })
}

#[derive(Serialize)]
struct GroupOut<'a> {
    mode: &'a str,
    pol: Polarization,
    count: u32,
}

#[derive(Serialize)]
struct TermOut<'a> {
    amplitude: [f64; 2],
    photons: Vec<GroupOut<'a>>,
}

#[derive(Serialize)]
struct ElementOut<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_deg: Option<f64>,
    #[serde(rename = "in")]
    inputs: Vec<&'a str>,
    #[serde(rename = "out", skip_serializing_if = "Vec::is_empty")]
    outputs: Vec<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<Polarization>,
}

#[derive(Serialize)]
struct TapOut<'a> {
    after: usize,
    name: &'a str,
}

#[derive(Serialize)]
struct PostselectOut<'a> {
    detectors: Vec<&'a str>,
    count: u32,
}

#[derive(Serialize)]
struct CircuitOut<'a> {
    modes: Vec<&'a str>,
    input: Vec<TermOut<'a>>,
    elements: Vec<ElementOut<'a>>,
    taps: Vec<TapOut<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    postselect: Option<PostselectOut<'a>>,
}

/// Writes a circuit in the description format; [`parse_circuit`] reads it
/// back to an equal circuit.
pub fn serialize_circuit(circuit: &Circuit) -> String {
    fn element(e: &Element) -> ElementOut<'_> {
        match e {
            Element::BeamSplitter {
                theta_deg,
                inputs,
                outputs,
            } => ElementOut {
                kind: "bs",
                theta_deg: Some(*theta_deg),
                inputs: inputs.iter().map(String::as_str).collect(),
                outputs: outputs.iter().map(String::as_str).collect(),
                orientation: None,
            },
            Element::Pbs { inputs, outputs } => ElementOut {
                kind: "pbs",
                theta_deg: None,
                inputs: inputs.iter().map(String::as_str).collect(),
                outputs: outputs.iter().map(String::as_str).collect(),
                orientation: None,
            },
            Element::Mirror { input, output } => ElementOut {
                kind: "mirror",
                theta_deg: None,
                inputs: vec![input],
                outputs: vec![output],
                orientation: None,
            },
            Element::Polarizer { mode, orientation } => ElementOut {
                kind: "polarizer",
                theta_deg: None,
                inputs: vec![mode],
                outputs: Vec::new(),
                orientation: Some(*orientation),
            },
        }
    }
    let out = CircuitOut {
        modes: circuit.modes().iter().map(String::as_str).collect(),
        input: circuit
            .input()
            .iter()
            .map(|t| TermOut {
                amplitude: [t.amplitude.re, t.amplitude.im],
                photons: t
                    .photons
                    .iter()
                    .map(|(m, n)| GroupOut {
                        mode: &m.spatial,
                        pol: m.pol,
                        count: n,
                    })
                    .collect(),
            })
            .collect(),
        elements: circuit.elements().iter().map(element).collect(),
        taps: circuit
            .taps()
            .iter()
            .map(|t| TapOut {
                after: t.after,
                name: &t.name,
            })
            .collect(),
        postselect: circuit.postselect().map(|p| PostselectOut {
            detectors: p.detectors().iter().map(String::as_str).collect(),
            count: p.required_count(),
        }),
    };
    serde_json::to_string_pretty(&out).expect("circuit serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_w4_circuit, W4Variant};
    use proptest::prelude::*;

    #[test]
    fn minimal_circuit() {
        let c = parse_circuit(r#"{"modes": ["a"]}"#).unwrap();
        assert_eq!(c.elements().len(), 0);
        assert_eq!(c.modes(), ["a"]);
        assert!(c.postselect().is_none());
    }

    #[test]
    fn undeclared_mode_is_located() {
        let text = "{\n  \"modes\": [\"a\", \"b\"],\n  \"elements\": [\n    {\"type\": \"mirror\", \"in\": [\"a\"], \"out\": [\"q\"]}\n  ]\n}";
        let err = parse_circuit(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"q\""), "{msg}");
        assert!(msg.contains("line 4, column 45"), "{msg}");
        assert!(msg.contains("elements[0].out[0]"), "{msg}");
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_circuit("{\n  \"modes\": [\"a\",]\n}").unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.starts_with("line 2"), "{location}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_documents() {
        let cases = [
            (r#"{"modes": ["a"], "extra": 1}"#, "unknown key"),
            (
                r#"{"modes": ["a", "b"], "elements": [{"type": "bs", "in": ["a","b"], "out": ["a","b"]}]}"#,
                "theta_deg",
            ),
            (
                r#"{"modes": ["a"], "elements": [{"type": "laser", "in": ["a"]}]}"#,
                "unknown element type",
            ),
            (
                r#"{"modes": ["a"], "elements": [{"type": "mirror", "in": ["a"], "out": ["a"], "theta_deg": 3}]}"#,
                "unknown key",
            ),
            (
                r#"{"modes": ["a"], "elements": [{"type": "mirror", "in": ["a"], "out": ["a"]}], "taps": [{"after": 0, "name": "x"}, {"after": 0, "name": "x"}]}"#,
                "strictly increasing",
            ),
            (
                r#"{"modes": ["a", "b"], "elements": [{"type": "mirror", "in": ["a"], "out": ["b"]}, {"type": "mirror", "in": ["b"], "out": ["a"]}], "taps": [{"after": 0, "name": "x"}, {"after": 1, "name": "x"}]}"#,
                "duplicate tap",
            ),
            (
                r#"{"modes": ["a", "b"], "elements": [{"type": "bs", "theta_deg": 120, "in": ["a","b"], "out": ["a","b"]}]}"#,
                "outside",
            ),
            (
                r#"{"modes": ["a"], "input": [{"mode": "a", "pol": "X", "count": 1}]}"#,
                "polarization",
            ),
            (
                r#"{"modes": ["a"], "input": [{"mode": "a", "pol": "H", "count": 0}]}"#,
                "integer >= 1",
            ),
            (
                r#"{"modes": ["a"], "postselect": {"detectors": ["a", "a"], "count": 1}}"#,
                "twice",
            ),
            (
                r#"{"modes": ["a"], "elements": [{"type": "polarizer", "in": ["a"], "orientation": "H", "out": ["b"]}]}"#,
                "in place",
            ),
            (r#"{"modes": "a"}"#, "expected an array"),
            (r#"[1]"#, "expected an object"),
        ];
        for (text, needle) in cases {
            let err = parse_circuit(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn product_and_weighted_inputs() {
        let product = parse_circuit(
            r#"{"modes": ["a", "b"], "input": [{"mode": "a", "pol": "H", "count": 2}, {"mode": "b", "pol": "V", "count": 1}]}"#,
        )
        .unwrap();
        assert_eq!(product.input().len(), 1);
        assert_eq!(product.input()[0].photons.to_string(), "|2H>a|V>b");

        let weighted = parse_circuit(
            r#"{"modes": ["a"], "input": [{"amplitude": [0.6, 0], "photons": [{"mode": "a", "pol": "H", "count": 1}]}, {"amplitude": [0, 0.8], "photons": [{"mode": "a", "pol": "V", "count": 1}]}]}"#,
        )
        .unwrap();
        assert_eq!(weighted.input().len(), 2);
        assert_eq!(weighted.input()[1].amplitude, Complex64::new(0.0, 0.8));
    }

    #[test]
    fn polarizer_out_is_optional() {
        let c = parse_circuit(
            r#"{"modes": ["a"], "elements": [{"type": "polarizer", "in": ["a"], "out": ["a"], "orientation": "V"}]}"#,
        )
        .unwrap();
        assert_eq!(c.elements()[0], Element::polarizer("a", Polarization::V));
    }

    #[test]
    fn path_parse_round_trip() {
        for s in [
            "elements[3].in[1]",
            "taps[0].name",
            "modes[2]",
            "postselect.detectors[0]",
        ] {
            assert_eq!(Path::parse(s).render(), s);
        }
    }

    #[test]
    fn builtin_circuits_round_trip() {
        for variant in [W4Variant::Plain, W4Variant::PolarizerD1] {
            let c = build_w4_circuit(0.955, variant).unwrap();
            assert_eq!(parse_circuit(&serialize_circuit(&c)).unwrap(), c);
        }
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(theta in 0.0f64..=std::f64::consts::FRAC_PI_2, polarizer in any::<bool>()) {
            let variant = if polarizer { W4Variant::PolarizerD1 } else { W4Variant::Plain };
            let c = build_w4_circuit(theta, variant).unwrap();
            let text = serialize_circuit(&c);
            prop_assert_eq!(parse_circuit(&text).unwrap(), c);
            prop_assert_eq!(serialize_circuit(&parse_circuit(&text).unwrap()), text);
        }
    }
}
