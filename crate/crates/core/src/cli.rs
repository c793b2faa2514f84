//! `ncspred` command-line front end.
//!
//! Exit codes: 0 success, 2 malformed input or usage error, 3 numerical
//! failure, 4 synthesis initialization failed, 5 synthesis or verification
//! did not certify, 6 simulation left the drop-bound hypothesis.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cclsynth::{ccl_synthesize, CclError, CclResult, CclSettings, CclStatus};
use crate::densela::{eig_2x2, eig_sym, LinAlgError, Matrix};
use crate::demo;
use crate::files::{fingerprint, FileError, GainFile, ModeSet, ModelFile};
use crate::ncsmodel::{verify_stability, GainSchedule, ModelError, SwitchedPlant, Verification, DEFAULT_EPSILON};
use crate::plot::render_svg;
use crate::sdp::{SdpError, SdpSettings};
use crate::sim::{self, DropKind, DropModel, SimConfig, SimError, SimTrace, SwitchKind, SwitchSignal};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INIT_FAILED: i32 = 4;
pub const EXIT_NOT_CERTIFIED: i32 = 5;
pub const EXIT_MODEL_VIOLATION: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "ncspred", version, about = "Predictive control synthesis for switched plants over lossy networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file (JSON).
    model: PathBuf,
    /// Override the sample period (continuous models only).
    #[arg(long)]
    h: Option<f64>,
    /// Override the drop bound N_drop.
    #[arg(long)]
    ndrop: Option<usize>,
}

#[derive(Debug, Args)]
struct TolArgs {
    /// Strictness margin of the matrix inequalities.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: f64,
    /// Newton-step budget per SDP phase.
    #[arg(long, default_value_t = SdpSettings::default().max_iterations)]
    sdp_max_newton: usize,
}

impl TolArgs {
    fn sdp(&self) -> SdpSettings {
        SdpSettings {
            max_iterations: self.sdp_max_newton,
            ..SdpSettings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DropArg {
    Bernoulli,
    UniformEta,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SwitchArg {
    RandomAtEffective,
    RandomEveryStep,
    Fixed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discretize continuous modes and print F, G and the eigenvalues of F.
    Discretize {
        #[command(flatten)]
        model: ModelArgs,
        /// Write the discrete-mode model here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cone-complementarity synthesis loop.
    Synthesize {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long, default_value_t = 30)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-4)]
        trace_tol: f64,
        /// Gain file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Search for a common Lyapunov certificate for given gains.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Gain file (JSON).
        gains: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Simulate the closed loop and write a trace CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Gain file (JSON).
        gains: PathBuf,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DropArg::Bernoulli)]
        drop_model: DropArg,
        /// Loss probability on both links.
        #[arg(long, default_value_t = 0.3)]
        p_loss: f64,
        #[arg(long)]
        p_sensor_loss: Option<f64>,
        #[arg(long)]
        p_control_loss: Option<f64>,
        /// Allow runs of N_drop or more lost packets (reports a violation).
        #[arg(long)]
        no_enforce_bound: bool,
        #[arg(long, value_enum, default_value_t = SwitchArg::RandomAtEffective)]
        switch: SwitchArg,
        /// Mode used by `--switch fixed` (1-based).
        #[arg(long, default_value_t = 1)]
        mode: usize,
        #[arg(long, default_value_t = 1)]
        dwell_min: usize,
        /// Initial state, comma separated.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
        x0: Vec<f64>,
        #[arg(long)]
        settle_threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a trace CSV as an SVG chart.
    Plot {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// State columns to draw (1-based, comma separated); all by default.
        #[arg(long, value_delimiter = ',')]
        columns: Vec<usize>,
    },
    /// Run the DC-motor case study end to end.
    Demo {
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self::new(EXIT_INPUT, message)
    }
}

fn linalg_code(_: &LinAlgError) -> i32 {
    EXIT_NUMERICAL
}

fn model_code(e: &ModelError) -> i32 {
    match e {
        ModelError::LinAlg(l) => linalg_code(l),
        ModelError::Sdp(s) => sdp_code(s),
        _ => EXIT_INPUT,
    }
}

fn sdp_code(e: &SdpError) -> i32 {
    match e {
        SdpError::LinAlg(_) => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        let code = match &e {
            FileError::Model(m) => model_code(m),
            _ => EXIT_INPUT,
        };
        Self::new(code, e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::new(model_code(&e), e.to_string())
    }
}

impl From<CclError> for CliError {
    fn from(e: CclError) -> Self {
        let code = match &e {
            CclError::InvalidSettings(_) => EXIT_INPUT,
            CclError::Model(m) => model_code(m),
            CclError::Sdp(s) => sdp_code(s),
            CclError::LinAlg(_) => EXIT_NUMERICAL,
        };
        Self::new(code, e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let code = match &e {
            SimError::ModelViolation { .. } => EXIT_MODEL_VIOLATION,
            SimError::Model(m) => model_code(m),
            _ => EXIT_INPUT,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult = Result<i32, CliError>;

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_model(args: &ModelArgs) -> Result<(ModelFile, String), CliError> {
    let text = read_text(&args.model)?;
    let model_file = ModelFile::from_json(&text).map_err(|e| CliError::input(format!("{}: {e}", args.model.display())))?;
    Ok((model_file, text))
}

fn load_plant(args: &ModelArgs) -> Result<(SwitchedPlant, String), CliError> {
    let (model_file, text) = load_model(args)?;
    Ok((model_file.plant(args.h, args.ndrop)?, text))
}

fn load_gains(path: &Path) -> Result<GainFile, CliError> {
    GainFile::from_json(&read_text(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn fmt_matrix(m: &Matrix) -> String {
    m.to_rows()
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
            format!("  [{}]", cells.join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn eigen_line(f: &Matrix) -> Result<String, CliError> {
    if f.shape() == (2, 2) {
        let (a, b) = eig_2x2(f).map_err(|e| CliError::new(linalg_code(&e), e.to_string()))?;
        Ok(format!("{a}, {b}"))
    } else if f.is_symmetric(1e-12) {
        let e = eig_sym(f).map_err(|e| CliError::new(linalg_code(&e), e.to_string()))?;
        Ok(e.eigenvalues.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", "))
    } else {
        Ok("(eigenvalues reported for 2x2 or symmetric F only)".into())
    }
}

fn discretization_report(plant: &SwitchedPlant) -> Result<String, CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "sample_period = {}", plant.sample_period());
    for (l, mode) in plant.modes().iter().enumerate() {
        let _ = writeln!(s, "mode {} ({})", l + 1, mode.label);
        let _ = writeln!(s, " F =\n{}", fmt_matrix(&mode.f));
        let _ = writeln!(s, " G =\n{}", fmt_matrix(&mode.g));
        let _ = writeln!(s, " eig(F) = {}", eigen_line(&mode.f)?);
    }
    Ok(s)
}

fn cmd_discretize(model: &ModelArgs, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult {
    let (model_file, _) = load_model(model)?;
    if !matches!(model_file.modes, ModeSet::Continuous(_)) {
        return Err(CliError::input(format!(
            "{}: continuous_modes: discretize needs continuous modes",
            model.model.display()
        )));
    }
    let plant = model_file.plant(model.h, model.ndrop)?;
    let _ = write!(stdout, "{}", discretization_report(&plant)?);
    if let Some(path) = out {
        write_file(path, ModelFile::from_plant(&plant).to_json().as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn synthesis_summary(result: &CclResult) -> String {
    let mut s = String::new();
    for r in &result.history {
        let _ = writeln!(
            s,
            "iter {:>2}  objective {:.6e}  |PQ-I|_F {:.3e}  verified {}",
            r.iteration, r.objective, r.inverse_gap, r.verified
        );
    }
    let _ = writeln!(s, "status: {:?}", result.status);
    match result.final_worst_margin() {
        Some(m) => {
            let _ = writeln!(s, "worst_margin: {m:.6e}");
        }
        None => {
            let _ = writeln!(s, "initialization margin: {:.6e}", result.initial_margin);
        }
    }
    for (q, k) in result.gains.gains().iter().enumerate() {
        let _ = writeln!(s, "K{} = {:?}", q + 1, k.to_rows());
    }
    s
}

fn synthesis_code(status: CclStatus) -> i32 {
    match status {
        CclStatus::Stabilized => EXIT_OK,
        CclStatus::InitializationFailed => EXIT_INIT_FAILED,
        CclStatus::IterationLimit | CclStatus::TraceConvergedUnverified => EXIT_NOT_CERTIFIED,
    }
}

fn run_synthesis(
    plant: &SwitchedPlant,
    settings: &CclSettings,
    model_text: &str,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<(CclResult, i32), CliError> {
    let result = ccl_synthesize(plant, settings)?;
    let file = GainFile::from_result(&result, settings, Some(fingerprint(model_text.as_bytes())));
    write_file(out, file.to_json().as_bytes())?;
    let _ = write!(stdout, "{}", synthesis_summary(&result));
    let code = synthesis_code(result.status);
    Ok((result, code))
}

fn verification_report(v: &Verification) -> String {
    let mut s = String::new();
    for ((l, eta), ok) in v.per_pair_schur() {
        let _ = writeln!(s, "mode {} eta {}: Schur stable {}", l + 1, eta, ok);
    }
    let _ = writeln!(s, "common P found: {}", v.is_certified());
    let _ = writeln!(s, "phase-1 margin: {:.6e}", v.phase1_margin());
    let _ = writeln!(s, "worst_margin: {:.6e}", v.worst_margin());
    s
}

fn verify(plant: &SwitchedPlant, gains: &GainSchedule, tol: &TolArgs) -> Result<Verification, CliError> {
    Ok(verify_stability(plant, gains, tol.eps, &tol.sdp())?)
}

fn cmd_verify(model: &ModelArgs, gains: &Path, tol: &TolArgs, stdout: &mut dyn Write) -> CliResult {
    let (plant, _) = load_plant(model)?;
    let schedule = load_gains(gains)?.schedule()?;
    let v = verify(&plant, &schedule, tol)?;
    let _ = write!(stdout, "{}", verification_report(&v));
    Ok(if v.is_certified() { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

fn trace_summary_line(trace: &SimTrace) -> String {
    let s = &trace.summary;
    format!(
        "settled_at: {}\nmax_norm_after_settle: {}\neffective_steps: {}\n",
        s.settled_at.map_or_else(|| "none".into(), |k| k.to_string()),
        s.max_norm_after_settle.map_or_else(|| "none".into(), |v| format!("{v:.6e}")),
        s.effective_steps
    )
}

fn write_trace(trace: &SimTrace, path: &Path) -> Result<(), CliError> {
    let mut buf = Vec::new();
    sim::write_trace_csv(trace, &mut buf).map_err(|e| CliError::input(e.to_string()))?;
    write_file(path, &buf)
}

fn cmd_plot(trace_path: &Path, out: &Path, columns: &[usize]) -> CliResult {
    let bytes = fs::read(trace_path).map_err(|e| CliError::input(format!("{}: {e}", trace_path.display())))?;
    let trace = sim::read_trace_csv(bytes.as_slice())
        .map_err(|e| CliError::input(format!("{}: {e}", trace_path.display())))?;
    let svg = render_svg(&trace, columns).map_err(|e| CliError::input(e.to_string()))?;
    write_file(out, svg.as_bytes())?;
    Ok(EXIT_OK)
}

fn stage(stdout: &mut dyn Write, name: &str, code: i32) {
    let verdict = if code == EXIT_OK { "pass" } else { "FAIL" };
    let _ = writeln!(stdout, "[{verdict}] {name}");
}

fn demo_discretization(plant: &SwitchedPlant) -> Result<(String, bool), CliError> {
    let mut s = discretization_report(plant)?;
    if (plant.sample_period() - 0.1).abs() > 1e-12 {
        let _ = writeln!(s, "no reference values for this sample period");
        return Ok((s, true));
    }
    let mut ok = true;
    let _ = writeln!(s, "\nreference comparison (tolerance 5e-5 on F and G)");
    for (l, (mode, (f, g))) in plant.modes().iter().zip(demo::REFERENCE_DISCRETE_H01).enumerate() {
        let f_ref = Matrix::from_rows(&f).expect("finite");
        let g_ref = Matrix::column(&g);
        let df = mode.f.sub(&f_ref).map_err(|e| CliError::new(EXIT_NUMERICAL, e.to_string()))?.max_abs();
        let dg = mode.g.sub(&g_ref).map_err(|e| CliError::new(EXIT_NUMERICAL, e.to_string()))?.max_abs();
        let pass = df <= 5e-5 && dg <= 5e-5;
        ok &= pass;
        let _ = writeln!(
            s,
            "mode {}: max|F-F_ref| = {df:.2e}  max|G-G_ref| = {dg:.2e}  {}",
            l + 1,
            if pass { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(s, "\nlisted eigenvalues (informational, tolerance 5e-4)");
    for (l, (mode, listed)) in plant.modes().iter().zip(demo::REFERENCE_EIGENVALUES_H01).enumerate() {
        let (a, b) = eig_2x2(&mode.f).map_err(|e| CliError::new(EXIT_NUMERICAL, e.to_string()))?;
        let dev = (a.re - listed[0]).abs().max((b.re - listed[1]).abs());
        let _ = writeln!(
            s,
            "mode {}: computed {:.4}, {:.4}  listed {}, {}  max deviation {dev:.2e}{}",
            l + 1,
            a.re,
            b.re,
            listed[0],
            listed[1],
            if dev <= 5e-4 { "" } else { "  (exceeds tolerance)" }
        );
    }
    Ok((s, ok))
}

fn cmd_demo(h: f64, out_dir: &Path, stdout: &mut dyn Write) -> CliResult {
    if !demo::SAMPLE_PERIODS.iter().any(|p| (p - h).abs() < 1e-12) {
        return Err(CliError::input(format!("--h must be one of {:?}", demo::SAMPLE_PERIODS)));
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;

    let model_file = ModelFile {
        sample_period: h,
        n_drop: demo::N_DROP,
        modes: ModeSet::Continuous(demo::continuous_modes()),
    };
    let model_text = model_file.to_json();
    write_file(&out_dir.join("model.json"), model_text.as_bytes())?;
    let plant = model_file.plant(None, None)?;
    let mut first_failure = EXIT_OK;
    let mut record = |stdout: &mut dyn Write, name: &str, code: i32| {
        stage(stdout, name, code);
        if first_failure == EXIT_OK {
            first_failure = code;
        }
    };

    let (report, ok) = demo_discretization(&plant)?;
    write_file(&out_dir.join("discretization.txt"), report.as_bytes())?;
    record(stdout, "discretization", if ok { EXIT_OK } else { EXIT_NUMERICAL });

    let settings = CclSettings::default();
    let mut synth_log = Vec::new();
    let (result, code) = run_synthesis(&plant, &settings, &model_text, &out_dir.join("gains.json"), &mut synth_log)?;
    write_file(&out_dir.join("synthesis.txt"), &synth_log)?;
    record(stdout, "synthesis", code);

    let tol = TolArgs {
        eps: settings.epsilon,
        sdp_max_newton: settings.sdp.max_iterations,
    };
    let mut report = String::from("synthesized gains\n");
    let v = verify(&plant, &result.gains, &tol)?;
    report.push_str(&verification_report(&v));
    let mut code = if v.is_certified() { EXIT_OK } else { EXIT_NOT_CERTIFIED };
    if let Some(published) = demo::published_gains(h) {
        let vp = verify(&plant, &published, &tol)?;
        report.push_str("\npublished gains\n");
        report.push_str(&verification_report(&vp));
        if !vp.is_certified() {
            code = EXIT_NOT_CERTIFIED;
        }
    }
    write_file(&out_dir.join("verification.txt"), report.as_bytes())?;
    record(stdout, "verification", code);

    let config = SimConfig {
        plant: plant.clone(),
        gains: result.gains.clone(),
        x0: demo::X0.to_vec(),
        horizon: demo::DEMO_STEPS,
        drop: DropModel::bernoulli(demo::DEMO_P_LOSS, demo::DEMO_P_LOSS, demo::DEMO_SEED),
        switching: SwitchSignal::random_at_effective(demo::DEMO_SEED),
        settle_threshold: None,
    };
    let trace = sim::simulate(&config)?;
    let trace_path = out_dir.join("trace.csv");
    write_trace(&trace, &trace_path)?;
    let _ = write!(stdout, "{}", trace_summary_line(&trace));
    record(
        stdout,
        "simulation",
        if trace.summary.settled_at.is_some() { EXIT_OK } else { EXIT_NOT_CERTIFIED },
    );

    let code = cmd_plot(&trace_path, &out_dir.join("trace.svg"), &[])?;
    record(stdout, "plot", code);
    Ok(first_failure)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Discretize { model, out } => cmd_discretize(&model, out.as_deref(), stdout),
        Command::Synthesize {
            model,
            tol,
            max_iter,
            trace_tol,
            out,
        } => {
            let (plant, text) = load_plant(&model)?;
            let settings = CclSettings {
                max_iterations: max_iter,
                trace_tol,
                epsilon: tol.eps,
                sdp: tol.sdp(),
            };
            Ok(run_synthesis(&plant, &settings, &text, &out, stdout)?.1)
        }
        Command::Verify { model, gains, tol } => cmd_verify(&model, &gains, &tol, stdout),
        Command::Simulate {
            model,
            gains,
            steps,
            seed,
            drop_model,
            p_loss,
            p_sensor_loss,
            p_control_loss,
            no_enforce_bound,
            switch,
            mode,
            dwell_min,
            x0,
            settle_threshold,
            out,
        } => {
            let (plant, _) = load_plant(&model)?;
            let schedule = load_gains(&gains)?.schedule()?;
            let (kind, ps, pc) = match drop_model {
                DropArg::Bernoulli => (
                    DropKind::BernoulliLinks,
                    p_sensor_loss.unwrap_or(p_loss),
                    p_control_loss.unwrap_or(p_loss),
                ),
                DropArg::UniformEta => (DropKind::UniformEta, 0.0, 0.0),
                DropArg::None => (DropKind::BernoulliLinks, 0.0, 0.0),
            };
            let config = SimConfig {
                plant,
                gains: schedule,
                x0,
                horizon: steps,
                drop: DropModel {
                    kind,
                    p_sensor_loss: ps,
                    p_control_loss: pc,
                    enforce_bound: !no_enforce_bound,
                    seed,
                },
                switching: SwitchSignal {
                    kind: match switch {
                        SwitchArg::RandomAtEffective => SwitchKind::RandomAtEffective,
                        SwitchArg::RandomEveryStep => SwitchKind::RandomEveryStep,
                        SwitchArg::Fixed => SwitchKind::Fixed(mode),
                    },
                    dwell_min,
                    seed,
                },
                settle_threshold,
            };
            let trace = sim::simulate(&config)?;
            write_trace(&trace, &out)?;
            let _ = write!(stdout, "{}", trace_summary_line(&trace));
            Ok(EXIT_OK)
        }
        Command::Plot { trace, out, columns } => cmd_plot(&trace, &out, &columns),
        Command::Demo { h, out_dir } => cmd_demo(h, &out_dir, stdout),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("ncspred").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["verify"]).0, 2);
    }

    #[test]
    fn missing_model_file_exits_2() {
        let (code, _, err) = run_capture(&["discretize", "/nonexistent/model.json"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/model.json"));
    }

    #[test]
    fn zero_a_model_discretizes_to_identity() {
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("m.json");
        fs::write(
            &model,
            r#"{"sample_period": 0.5, "n_drop": 1, "continuous_modes": [{"a": [[0, 0], [0, 0]], "b": [[1], [2]]}]}"#,
        )
        .unwrap();
        let out = dir.path().join("d.json");
        let (code, text, _) = run_capture(&["discretize", model.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(text.contains("1.000000"));
        let model_file = ModelFile::from_json(&fs::read_to_string(out).unwrap()).unwrap();
        let plant = model_file.plant(None, None).unwrap();
        assert_eq!(plant.modes()[0].f, Matrix::identity(2));
        assert_eq!(plant.modes()[0].g, Matrix::column(&[0.5, 1.0]));
    }

    #[test]
    fn demo_rejects_unknown_period() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, _) = run_capture(&["demo", "--h", "0.3", "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(code, 2);
    }
}
