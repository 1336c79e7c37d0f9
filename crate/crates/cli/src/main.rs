//! `freeconv`: densities, supports and component-count bounds of free
//! additive convolutions from the command line.
//!
//! Exit codes: 0 success, 1 bad input, 2 numerical failure, 3 bound violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freeconv::analysis::{bounds_report, BoundsInput, BoundsReport};
use freeconv::rmt::{validate, Ensemble, TrialConfig, ValidationReport};
use freeconv::spectral::{
    density_grid, detect_support, DensityGrid, Problem, ResultKind, SupportReport, DEFAULT_POINTS,
    SUPPORT_THRESHOLD,
};
use freeconv::subordination::{LadderOptions, PAIR_TOLERANCE, SEMIGROUP_TOLERANCE};
use freeconv::{build_measure, MeasureSpec, MultiCutMeasure};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "freeconv", version, about = "Free additive convolution of multi-cut measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct GridArgs {
    /// Energy window; defaults to the predicted support hull plus 5%.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    /// Number of grid points.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_POINTS)]
    points: usize,
    /// Output path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Density of μ_α ⊞ μ_β on a grid (CSV) plus its support report.
    Convolve {
        alpha: PathBuf,
        beta: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Density of μ^{⊞t} on a grid (CSV) plus its support report.
    Semigroup {
        measure: PathBuf,
        #[arg(long)]
        t: f64,
        /// Admit purely atomic measures.
        #[arg(long)]
        allow_atomic: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Support report only. Two measures: pair; one measure with --t: semigroup.
    Support {
        #[arg(num_args = 1..=2, required = true)]
        measures: Vec<PathBuf>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        allow_atomic: bool,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Check the component-count bounds; exits 3 on a violation.
    BoundsCheck {
        #[arg(num_args = 1..=2, required = true)]
        measures: Vec<PathBuf>,
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare the predicted density with spectra of A + U B U*.
    RmtValidate {
        alpha: PathBuf,
        beta: PathBuf,
        #[arg(long, value_name = "S", default_value_t = 0)]
        seed: u64,
        /// Matrix size.
        #[arg(long, default_value_t = 1000)]
        size: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = EnsembleArg::Orthogonal)]
        ensemble: EnsembleArg,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EnsembleArg {
    Orthogonal,
    Unitary,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Orthogonal => Ensemble::Orthogonal,
            EnsembleArg::Unitary => Ensemble::Unitary,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
    Violation,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Violation => 3,
        }
    }
}

impl From<freeconv::Error> for Failure {
    fn from(e: freeconv::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

struct Input {
    path: PathBuf,
    spec: MeasureSpec,
    measure: MultiCutMeasure,
}

fn load(path: &Path) -> Outcome<Input> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let spec = MeasureSpec::from_json(&text)
        .map_err(|e| Failure::Input(format!("{}: invalid measure spec: {e}", path.display())))?;
    let measure = build_measure(&spec).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(Input { path: path.to_path_buf(), spec, measure })
}

fn write(path: &Path, contents: &str) -> Outcome<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn window(problem: &Problem<'_>, grid: &GridArgs) -> Outcome<(f64, f64)> {
    match grid.window.as_deref() {
        None => Ok(problem.default_window()),
        Some(&[lo, hi]) if lo < hi && lo.is_finite() && hi.is_finite() => Ok((lo, hi)),
        Some(w) => Err(Failure::Input(format!("invalid window {w:?}"))),
    }
}

/// Shortest round-trip text; scientific outside `[1e-4, 1e15)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn grid_csv(dg: &DensityGrid) -> Outcome<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let failure = |e: csv::Error| Failure::Input(format!("csv: {e}"));
    match dg.kind {
        ResultKind::Pair => {
            w.write_record(["E", "rho", "im_omega_alpha", "im_omega_beta", "boundary_error"]).map_err(failure)?;
            for k in 0..dg.len() {
                w.write_record(&[
                    num(dg.grid[k]),
                    num(dg.density[k]),
                    num(dg.im_omega_alpha[k]),
                    num(dg.im_omega[k]),
                    num(dg.boundary_error[k]),
                ])
                .map_err(failure)?;
            }
        }
        ResultKind::Semigroup => {
            w.write_record(["E", "rho", "im_omega_t", "boundary_error"]).map_err(failure)?;
            for k in 0..dg.len() {
                w.write_record(&[
                    num(dg.grid[k]),
                    num(dg.density[k]),
                    num(dg.im_omega[k]),
                    num(dg.boundary_error[k]),
                ])
                .map_err(failure)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure::Input(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

/// `dir/stem.support.json` next to `out`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "grid".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn meta_path(out: &Path) -> PathBuf {
    out.with_file_name("run_meta.json")
}

fn summarize(report: &SupportReport) {
    let pieces: Vec<String> = report.components.iter().map(|(l, r)| format!("[{l:.8}, {r:.8}]")).collect();
    println!(
        "I = {}, C0 = {}, Cinf = {}; components {}",
        report.counts.i,
        report.counts.c0,
        report.counts.cinf,
        pieces.join(" ")
    );
    for m in &report.edge_mismatches {
        eprintln!(
            "warning: edge {} has no edge-equation candidate within tolerance (nearest {})",
            m.detected, m.nearest_candidate
        );
    }
}

struct Meta<'a> {
    command: &'a str,
    inputs: Vec<&'a Input>,
    t: Option<f64>,
    allow_atomic: bool,
    grid: &'a GridArgs,
    window: (f64, f64),
    threads: Option<usize>,
    extra: serde_json::Value,
    outputs: Vec<PathBuf>,
}

fn write_meta(path: &Path, meta: Meta<'_>) -> Outcome<()> {
    let ladder = LadderOptions::default();
    let inputs: Vec<_> = meta
        .inputs
        .iter()
        .map(|i| json!({ "path": i.path, "spec": i.spec }))
        .collect();
    let value = json!({
        "tool": "freeconv",
        "version": env!("CARGO_PKG_VERSION"),
        "command": meta.command,
        "inputs": inputs,
        "config": {
            "t": meta.t,
            "allow_atomic": meta.allow_atomic,
            "window": [meta.window.0, meta.window.1],
            "points": meta.grid.points,
            "threads": meta.threads,
            "extra": meta.extra,
        },
        "tolerances": {
            "pair_residual": PAIR_TOLERANCE,
            "semigroup_residual": SEMIGROUP_TOLERANCE,
            "support_threshold": SUPPORT_THRESHOLD,
            "ladder_levels": ladder.eta_levels.len(),
            "ladder_final_eta": ladder.final_eta(),
        },
        "outputs": meta.outputs,
    });
    write(path, &to_json(&value))
}

fn problem_for<'a>(inputs: &'a [Input], t: Option<f64>, allow_atomic: bool) -> Outcome<Problem<'a>> {
    match (inputs, t) {
        ([a, b], None) => Ok(Problem::pair(&a.measure, &b.measure)?),
        ([mu], Some(t)) => Ok(Problem::semigroup(&mu.measure, t, allow_atomic)?),
        ([_, _], Some(_)) => Err(Failure::Input("--t applies to a single measure".into())),
        _ => Err(Failure::Input("a single measure needs --t".into())),
    }
}

fn density_run(
    command: &str,
    inputs: Vec<Input>,
    t: Option<f64>,
    allow_atomic: bool,
    grid: &GridArgs,
    threads: Option<usize>,
) -> Outcome<()> {
    let problem = problem_for(&inputs, t, allow_atomic)?;
    let window = window(&problem, grid)?;
    let out = grid.out.clone().unwrap_or_else(|| PathBuf::from(format!("{command}.csv")));
    let dg = density_grid(&problem, window, grid.points)?;
    if !dg.failed.is_empty() {
        eprintln!("warning: {} grid points interpolated after ladder failures", dg.failed.len());
    }
    write(&out, &grid_csv(&dg)?)?;
    let support = detect_support(&dg, &problem)?;
    let support_path = sibling(&out, "support.json");
    write(&support_path, &to_json(&support))?;
    summarize(&support);
    write_meta(
        &meta_path(&out),
        Meta {
            command,
            inputs: inputs.iter().collect(),
            t,
            allow_atomic,
            grid,
            window,
            threads,
            extra: serde_json::Value::Null,
            outputs: vec![out, support_path],
        },
    )
}

fn support_run(
    inputs: Vec<Input>,
    t: Option<f64>,
    allow_atomic: bool,
    grid: &GridArgs,
    threads: Option<usize>,
) -> Outcome<()> {
    let problem = problem_for(&inputs, t, allow_atomic)?;
    let window = window(&problem, grid)?;
    let out = grid.out.clone().unwrap_or_else(|| PathBuf::from("support.json"));
    let dg = density_grid(&problem, window, grid.points)?;
    let support = detect_support(&dg, &problem)?;
    write(&out, &to_json(&support))?;
    summarize(&support);
    write_meta(
        &meta_path(&out),
        Meta {
            command: "support",
            inputs: inputs.iter().collect(),
            t,
            allow_atomic,
            grid,
            window,
            threads,
            extra: serde_json::Value::Null,
            outputs: vec![out],
        },
    )
}

fn bounds_run(inputs: Vec<Input>, t: Option<f64>, grid: &GridArgs, threads: Option<usize>) -> Outcome<()> {
    let problem = problem_for(&inputs, t, false)?;
    let window = window(&problem, grid)?;
    let out = grid.out.clone().unwrap_or_else(|| PathBuf::from("bounds.json"));
    let dg = density_grid(&problem, window, grid.points)?;
    let support = detect_support(&dg, &problem)?;
    let input = match (inputs.as_slice(), t) {
        ([a, b], None) => BoundsInput::Pair { alpha: &a.measure, beta: &b.measure },
        ([mu], Some(t)) => BoundsInput::Semigroup { mu: &mu.measure, t },
        _ => unreachable!("checked by problem_for"),
    };
    let report: BoundsReport = bounds_report(input, &support, None)?;
    write(&out, &to_json(&report))?;
    println!(
        "{:?}: measured I + C = {} within [{}, {}]: {}",
        report.kind,
        report.measured.i + report.measured.c0,
        report.lower,
        report.upper,
        if report.passed() { "ok" } else { "VIOLATED" }
    );
    write_meta(
        &meta_path(&out),
        Meta {
            command: "bounds-check",
            inputs: inputs.iter().collect(),
            t,
            allow_atomic: false,
            grid,
            window,
            threads,
            extra: serde_json::Value::Null,
            outputs: vec![out],
        },
    )?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Violation)
    }
}

fn rmt_run(inputs: Vec<Input>, cfg: TrialConfig, grid: &GridArgs, threads: Option<usize>) -> Outcome<()> {
    let problem = problem_for(&inputs, None, false)?;
    let window = window(&problem, grid)?;
    let out = grid.out.clone().unwrap_or_else(|| PathBuf::from("rmt.json"));
    let dg = density_grid(&problem, window, grid.points)?;
    let support = detect_support(&dg, &problem)?;
    let report: ValidationReport = validate(&inputs[0].measure, &inputs[1].measure, &cfg, &dg, Some(&support))?;
    write(&out, &to_json(&report))?;
    println!(
        "KS distance {:.5} over {} eigenvalues; components empirical {} predicted {}",
        report.ks_distance, report.eigenvalues, report.empirical_components, support.counts.i
    );
    write_meta(
        &meta_path(&out),
        Meta {
            command: "rmt-validate",
            inputs: inputs.iter().collect(),
            t: None,
            allow_atomic: false,
            grid,
            window,
            threads,
            extra: json!(cfg),
            outputs: vec![out],
        },
    )
}

fn run(cli: Cli) -> Outcome<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::Input("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
    }
    let threads = cli.threads;
    match cli.command {
        Command::Convolve { alpha, beta, grid } => {
            let inputs = vec![load(&alpha)?, load(&beta)?];
            density_run("convolve", inputs, None, false, &grid, threads)
        }
        Command::Semigroup { measure, t, allow_atomic, grid } => {
            density_run("semigroup", vec![load(&measure)?], Some(t), allow_atomic, &grid, threads)
        }
        Command::Support { measures, t, allow_atomic, grid } => {
            let inputs = measures.iter().map(|p| load(p)).collect::<Outcome<Vec<_>>>()?;
            support_run(inputs, t, allow_atomic, &grid, threads)
        }
        Command::BoundsCheck { measures, t, grid } => {
            let inputs = measures.iter().map(|p| load(p)).collect::<Outcome<Vec<_>>>()?;
            bounds_run(inputs, t, &grid, threads)
        }
        Command::RmtValidate { alpha, beta, seed, size, trials, ensemble, grid } => {
            let inputs = vec![load(&alpha)?, load(&beta)?];
            let cfg = TrialConfig { matrix_size: size, trials, seed, ensemble: ensemble.into() };
            rmt_run(inputs, cfg, &grid, threads)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Input(msg) => eprintln!("error: {msg}"),
                Failure::Numerical(msg) => eprintln!("numerical failure: {msg}"),
                Failure::Violation => eprintln!("bound violation"),
            }
            ExitCode::from(failure.code())
        }
    }
}
