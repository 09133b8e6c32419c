//! Command-line front end. [`run_cli`] takes the arguments and output
//! streams explicitly and returns the process exit code, so the whole
//! interface is testable in-process.
//!
//! Exit codes: 0 success, 1 runtime or validation failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{csv_row, evaluate, maximize_success, sweep_theta, write_csv, CSV_HEADER};
use crate::circuit::{run_circuit, W4Variant};
use crate::format::parse_circuit;
use crate::postselect::{applicable_w_target, coincidence_project, fidelity, project_after_filter, W4_READOUT};
use crate::state::{norm, StateVector};
use crate::verify::{run_verification, stage_diffs, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lopost",
    version,
    about = "Exact simulation of post-selected linear-optics experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a circuit once and report tap states and the post-selected output.
    Run(RunArgs),
    /// Tabulate the success probability over a grid of splitter angles.
    Sweep(SweepArgs),
    /// Find the splitter angle that maximizes the success probability.
    Optimize(OptimizeArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Builtin {
    W4,
    W4Polarizer,
}

impl Builtin {
    fn variant(self) -> W4Variant {
        match self {
            Builtin::W4 => W4Variant::Plain,
            Builtin::W4Polarizer => W4Variant::PolarizerD1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Builtin::W4 => "w4",
            Builtin::W4Polarizer => "w4-polarizer",
        }
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["builtin", "circuit"])))]
struct RunArgs {
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    /// Circuit description file (JSON).
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Injection splitter angle in degrees; built-in circuits only.
    #[arg(long, allow_negative_numbers = true)]
    theta_deg: Option<f64>,
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Aligned text output (the default).
    #[arg(long)]
    text: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    min_deg: f64,
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    max_deg: f64,
    #[arg(long, default_value_t = 91)]
    steps: usize,
    /// Destination CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// Final bracket width in radians.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Upper bound on every tolerance; pinned tolerances below it are kept.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Optimize(a) => cmd_optimize(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TapSummary {
    pub name: String,
    pub terms: usize,
    pub norm: f64,
}

#[derive(Debug, Serialize)]
pub struct TermReport {
    pub ket: String,
    pub re: f64,
    pub im: f64,
}

/// Everything `run` reports. Conditional terms are sorted by ket string.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub source: &'static str,
    pub circuit: String,
    pub theta_rad: Option<f64>,
    pub theta_deg: Option<f64>,
    pub taps: Vec<TapSummary>,
    pub probability: Option<f64>,
    pub conditional: Vec<TermReport>,
    pub fidelity: Option<f64>,
    pub transcription_diff: Vec<String>,
}

fn term_reports(state: &StateVector, order: &[&str]) -> Vec<TermReport> {
    let mut terms: Vec<TermReport> = state
        .terms()
        .map(|(o, a)| TermReport {
            ket: o.render_ordered(order),
            re: a.re,
            im: a.im,
        })
        .collect();
    terms.sort_by(|a, b| a.ket.cmp(&b.ket));
    terms
}

fn tap_summaries(taps: &[(String, StateVector)]) -> crate::Result<Vec<TapSummary>> {
    taps.iter()
        .map(|(name, s)| {
            Ok(TapSummary {
                name: name.clone(),
                terms: s.len(),
                norm: norm(s)?,
            })
        })
        .collect()
}

fn builtin_report(builtin: Builtin, theta_deg: f64) -> std::result::Result<RunReport, Failure> {
    if !(0.0..=90.0).contains(&theta_deg) {
        return Err(Failure::Usage(format!(
            "--theta-deg must lie in [0, 90], got {theta_deg}"
        )));
    }
    let theta = theta_deg.to_radians().min(std::f64::consts::FRAC_PI_2);
    let eval = evaluate(theta, builtin.variant())?;
    let circuit = crate::circuit::build_w4_circuit(theta, builtin.variant())?;
    let pattern = circuit.postselect().expect("built-in setup has a coincidence pattern");
    let transcription_diff = stage_diffs(theta, &eval.run, pattern)
        .into_iter()
        .map(|(stage, d)| format!("{stage}: {d}"))
        .collect();
    Ok(RunReport {
        source: "builtin",
        circuit: builtin.name().to_string(),
        theta_rad: Some(theta),
        theta_deg: Some(theta_deg),
        taps: tap_summaries(&eval.run.taps)?,
        probability: Some(eval.probability),
        conditional: term_reports(&eval.conditional, &W4_READOUT),
        fidelity: eval.fidelity,
        transcription_diff,
    })
}

fn file_report(path: &PathBuf) -> std::result::Result<RunReport, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("cannot read circuit file {}: {e}", path.display())))?;
    let circuit = parse_circuit(&text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let run = run_circuit(&circuit, &circuit.input_state())?;
    let (probability, conditional, fid, order) = match circuit.postselect() {
        Some(pattern) => {
            let proj = if circuit.has_filter() {
                project_after_filter(&run.final_state, pattern)?
            } else {
                coincidence_project(&run.final_state, pattern)?
            };
            let fid = match applicable_w_target(&proj.conditional, pattern.detectors()) {
                Some(target) => Some(fidelity(&proj.conditional, &target)?),
                None => None,
            };
            (
                Some(proj.probability),
                proj.conditional,
                fid,
                pattern.detectors().to_vec(),
            )
        }
        None => (None, run.final_state.clone(), None, Vec::new()),
    };
    let order: Vec<&str> = order.iter().map(String::as_str).collect();
    Ok(RunReport {
        source: "file",
        circuit: path.display().to_string(),
        theta_rad: None,
        theta_deg: None,
        taps: tap_summaries(&run.taps)?,
        probability,
        conditional: term_reports(&conditional, &order),
        fidelity: fid,
        transcription_diff: Vec::new(),
    })
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.12}"))
}

fn write_text(r: &RunReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{:<13}{} {}", "source", r.source, r.circuit)?;
    if let (Some(rad), Some(deg)) = (r.theta_rad, r.theta_deg) {
        writeln!(out, "{:<13}{rad:.12} rad ({deg} deg)", "theta")?;
    }
    writeln!(out, "{:<13}{}", "probability", opt_num(r.probability))?;
    writeln!(out, "{:<13}{}", "fidelity", opt_num(r.fidelity))?;
    if !r.taps.is_empty() {
        writeln!(out, "taps")?;
        let width = r.taps.iter().map(|t| t.name.len()).max().unwrap_or(0);
        for t in &r.taps {
            writeln!(out, "  {:<width$}  {:>4} terms  norm {:.12}", t.name, t.terms, t.norm)?;
        }
    }
    writeln!(out, "conditional state ({} terms)", r.conditional.len())?;
    for t in &r.conditional {
        writeln!(out, "  {:>+16.12} {:>+16.12}i  {}", t.re, t.im, t.ket)?;
    }
    if !r.transcription_diff.is_empty() {
        writeln!(out, "transcription differences ({})", r.transcription_diff.len())?;
        for d in &r.transcription_diff {
            writeln!(out, "  {d}")?;
        }
    }
    Ok(())
}

fn cmd_run(a: RunArgs, out: &mut dyn Write) -> Outcome {
    let report = match (a.builtin, &a.circuit) {
        (Some(b), None) => {
            let deg = a
                .theta_deg
                .ok_or_else(|| Failure::Usage("--theta-deg is required with --builtin".into()))?;
            builtin_report(b, deg)?
        }
        (None, Some(path)) => {
            if a.theta_deg.is_some() {
                return Err(Failure::Usage(
                    "--theta-deg applies to built-in circuits; file circuits carry their own angles".into(),
                ));
            }
            file_report(path)?
        }
        _ => return Err(Failure::Usage("give exactly one of --builtin or --circuit".into())),
    };
    if a.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
        writeln!(out, "{text}")?;
    } else {
        write_text(&report, out)?;
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Outcome {
    if a.steps < 2 {
        return Err(Failure::Usage(format!("--steps must be at least 2, got {}", a.steps)));
    }
    if !(0.0 <= a.min_deg && a.min_deg < a.max_deg && a.max_deg <= 90.0) {
        return Err(Failure::Usage(format!(
            "need 0 <= --min-deg < --max-deg <= 90, got {} and {}",
            a.min_deg, a.max_deg
        )));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let records = sweep_theta(a.min_deg.to_radians(), a.max_deg.to_radians().min(half_pi), a.steps)?;
    let file =
        fs::File::create(&a.out).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", a.out.display())))?;
    write_csv(&records, std::io::BufWriter::new(file))
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", a.out.display())))?;
    // first maximum wins on ties
    let best = records.iter().fold(
        &records[0],
        |best, r| if r.probability > best.probability { r } else { best },
    );
    writeln!(out, "{CSV_HEADER}")?;
    writeln!(out, "{}", csv_row(best))?;
    Ok(EXIT_OK)
}

fn cmd_optimize(a: OptimizeArgs, out: &mut dyn Write) -> Outcome {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(Failure::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let opt = maximize_success(a.tol)?;
    if a.json {
        let value = serde_json::json!({
            "theta_rad": opt.theta,
            "theta_deg": opt.theta.to_degrees(),
            "probability": opt.probability,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("plain values"))?;
    } else {
        writeln!(out, "{:<13}{:.12}", "theta_rad", opt.theta)?;
        writeln!(out, "{:<13}{:.10}", "theta_deg", opt.theta.to_degrees())?;
        writeln!(out, "{:<13}{:.15}", "probability", opt.probability)?;
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Outcome {
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(Failure::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let report = run_verification(a.tol)?;
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &report.checks {
        write!(
            out,
            "{}  {:<3} {:<width$}  measured {:.3e}  threshold {:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.measured,
            c.threshold
        )?;
        if c.detail.is_empty() {
            writeln!(out)?;
        } else {
            writeln!(out, "  ({})", c.detail)?;
        }
    }
    writeln!(
        out,
        "injection-stage transcription diff notes: {}",
        report.injection_diff_notes.len()
    )?;
    for n in &report.injection_diff_notes {
        writeln!(out, "  {n}")?;
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    if failed == 0 {
        writeln!(out, "all {} checks passed", report.checks.len())?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "{failed} of {} checks failed", report.checks.len())?;
        Ok(EXIT_FAILURE)
    }
}
