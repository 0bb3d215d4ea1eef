mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use memsosc::checks::build_report;
use memsosc::mna::{ac_sweep, Probe};
use memsosc::oscillator::{
    detune_sweep, loop_gain_report, loop_gain_response, plan_tank, write_detune_csv,
};
use memsosc::phase_noise::{design_pn, fom, noise_factor, write_pn_curve};
use memsosc::resonator::{build_rft_netlist, resonator_phase_at, synthesize_motional, RftMode};
use memsosc::{parse_netlist, validate_netlist, Error, FrequencyGrid};

use config::{ConfigError, RunConfig};

const THREADS_ENV: &str = "MEMSOSC_THREADS";

#[derive(Parser)]
#[command(name = "memsosc", version, about = "MEMS resonator oscillator workbench")]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dot-path override into the configuration, e.g. `design.q_l0=12`.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resonator netlist and synthesized motional values.
    Model {
        #[arg(long, value_enum, default_value_t = Mode::Half)]
        mode: Mode,
        /// Also write the netlist text here.
        #[arg(long)]
        netlist_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// AC sweep of a netlist file.
    Ac(AcArgs),
    /// Resonator phase at the resonance frequency.
    Phase {
        /// Evaluation frequency, Hz; the resonance when omitted.
        #[arg(long)]
        freq: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Broken-loop gain and Barkhausen check.
    Loopgain {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the open-loop response around f0 as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Half width of the curve, Hz.
        #[arg(long, default_value_t = 50e6)]
        span: f64,
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
    /// Noise factor, phase noise and figure of merit.
    Pn {
        /// Offset from the carrier, Hz; overrides `offset_hz`.
        #[arg(long)]
        offset: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write phase noise from 1 kHz to 100 MHz as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Phase noise and oscillation frequency against tank detuning.
    Detune {
        /// Comma-separated detunings, Hz; overrides `detune_deltas_hz`.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every headline number and check; exits 1 when a check fails.
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Half,
    Differential,
}

#[derive(Args)]
struct AcArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Linear grid: START STOP POINTS.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "POINTS"], conflicts_with = "log", required_unless_present = "log")]
    lin: Option<Vec<f64>>,
    /// Logarithmic grid: START STOP POINTS.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "POINTS"])]
    log: Option<Vec<f64>>,
    /// `v(node)`, `v(a,b)` or `i(element)`; every node voltage when omitted.
    #[arg(long)]
    probe: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Unreadable(String),
    Solver(String),
    Write(String),
    Checks(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Checks(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Usage(_) => 64,
            Failure::Unreadable(_) => 66,
            Failure::Solver(_) => 70,
            Failure::Write(_) => 73,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m)
            | Failure::Validation(m)
            | Failure::Unreadable(m)
            | Failure::Solver(m)
            | Failure::Write(m)
            | Failure::Checks(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::Singular { .. } | Error::Extraction(_) => Failure::Solver(m),
            Error::Output(_) => Failure::Write(m),
            _ => Failure::Validation(m),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Unreadable(m) => Failure::Unreadable(format!("cannot read config: {m}")),
            ConfigError::Invalid(m) => Failure::Validation(format!("invalid config: {m}")),
        }
    }
}

type Outcome = Result<(), Failure>;

fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    let res = match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(bytes).and_then(|_| s.flush()).map_err(|e| e.to_string())
        }
    };
    res.map_err(|m| Failure::Write(format!("cannot write output: {m}")))
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("outputs serialize");
    s.push('\n');
    s.into_bytes()
}

fn with_writer(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> memsosc::Result<()>) -> Outcome {
    let mut buf = Vec::new();
    f(&mut buf)?;
    emit(Some(path), &buf)
}

fn model(cfg: &RunConfig, mode: Mode, netlist_out: Option<&Path>, out: Option<&Path>) -> Outcome {
    #[derive(Serialize)]
    struct ModelOut {
        mode: RftMode,
        motional: memsosc::resonator::MotionalBranch,
        netlist: String,
    }
    let mode = match mode {
        Mode::Half => RftMode::Half,
        Mode::Differential => RftMode::Differential,
    };
    let p = &cfg.design.resonator;
    let net = build_rft_netlist(p, mode)?;
    let text = net.to_text();
    if let Some(path) = netlist_out {
        emit(Some(path), text.as_bytes())?;
    }
    emit(
        out,
        &json(&ModelOut {
            mode,
            motional: synthesize_motional(p)?,
            netlist: text,
        }),
    )
}

fn grid_of(a: &AcArgs) -> Result<FrequencyGrid, Failure> {
    let (bounds, log) = match (&a.lin, &a.log) {
        (Some(v), None) => (v, false),
        (None, Some(v)) => (v, true),
        _ => return Err(Failure::Usage("give exactly one of --lin or --log".into())),
    };
    let n = bounds[2];
    if !(n.fract() == 0.0 && n >= 2.0) {
        return Err(Failure::Usage(format!("POINTS must be an integer >= 2, got {n}")));
    }
    let n = n as usize;
    Ok(if log {
        FrequencyGrid::log(bounds[0], bounds[1], n)
    } else {
        FrequencyGrid::linear(bounds[0], bounds[1], n)
    })
}

fn ac(a: &AcArgs) -> Outcome {
    let text = std::fs::read_to_string(&a.netlist)
        .map_err(|e| Failure::Unreadable(format!("cannot read netlist {}: {e}", a.netlist.display())))?;
    let net = parse_netlist(&text).map_err(Error::from)?;
    let issues = validate_netlist(&net);
    if !issues.is_empty() {
        let lines: Vec<_> = issues.iter().map(|v| v.reason.clone()).collect();
        return Err(Failure::Validation(format!("invalid netlist:\n  {}", lines.join("\n  "))));
    }
    let grid = grid_of(a)?;
    let probes: Vec<Probe> = if a.probe.is_empty() {
        net.node_names()
            .iter()
            .skip(1)
            .map(|n| Probe::Node(n.clone()))
            .collect()
    } else {
        a.probe
            .iter()
            .map(|s| s.parse().map_err(|e: Error| Failure::Usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let responses = ac_sweep(&net, &grid, &probes)?;
    let phases: Vec<Vec<f64>> = responses.iter().map(|r| r.unwrapped_phase_deg()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["freq_hz".to_string()];
    for p in &probes {
        for part in ["re", "im", "mag", "phase_deg"] {
            header.push(format!("{p}_{part}"));
        }
    }
    let wr = |e: csv::Error| Failure::Write(e.to_string());
    w.write_record(&header).map_err(wr)?;
    for i in 0..responses[0].len() {
        let mut row = vec![responses[0].samples[i].0.to_string()];
        for (r, ph) in responses.iter().zip(&phases) {
            let v = r.samples[i].1;
            row.extend([v.re, v.im, v.norm(), ph[i]].map(|x| x.to_string()));
        }
        w.write_record(&row).map_err(wr)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Write(e.to_string()))?;
    emit(a.out.as_deref(), &bytes)
}

fn phase(cfg: &RunConfig, freq: Option<f64>, out: Option<&Path>) -> Outcome {
    #[derive(Serialize)]
    struct PhaseOut {
        freq_hz: f64,
        phase_deg: f64,
        target_deg: f64,
        error_deg: f64,
    }
    let p = &cfg.design.resonator;
    let f = freq.unwrap_or(p.f0);
    let ph = resonator_phase_at(p, f)?;
    emit(
        out,
        &json(&PhaseOut {
            freq_hz: f,
            phase_deg: ph,
            target_deg: 270.0,
            error_deg: ph - 270.0,
        }),
    )
}

fn loopgain(cfg: &RunConfig, out: Option<&Path>, curve: Option<&Path>, span: f64, points: usize) -> Outcome {
    let d = &cfg.design;
    let report = loop_gain_report(d)?;
    if let Some(path) = curve {
        let f0 = d.resonator.f0;
        let grid = FrequencyGrid::linear(f0 - span, f0 + span, points);
        let resp = loop_gain_response(d, &plan_tank(d)?, &grid)?;
        with_writer(path, |w| resp.write_csv(w))?;
    }
    emit(out, &json(&report))
}

fn pn(cfg: &RunConfig, offset: Option<f64>, out: Option<&Path>, curve: Option<&Path>) -> Outcome {
    #[derive(Serialize)]
    struct PnOut {
        noise_factor: memsosc::phase_noise::NoiseFactor,
        phase_noise: memsosc::phase_noise::PhaseNoiseResult,
        fom: memsosc::phase_noise::FomResult,
    }
    let d = &cfg.design;
    let off = offset.unwrap_or(cfg.offset_hz);
    let r = design_pn(d, off, &cfg.pn)?;
    let f = fom(r.pn_dbchz, d.resonator.f0, off, d.p_dc)?;
    if let Some(path) = curve {
        let offsets: Vec<f64> = (0..=50).map(|i| 10f64.powf(3.0 + f64::from(i) / 10.0)).collect();
        with_writer(path, |w| write_pn_curve(d, &offsets, &cfg.pn, w))?;
    }
    emit(
        out,
        &json(&PnOut {
            noise_factor: noise_factor(d)?,
            phase_noise: r,
            fom: f,
        }),
    )
}

fn detune(cfg: &RunConfig, deltas: Option<&[f64]>, out: Option<&Path>) -> Outcome {
    let deltas = deltas.unwrap_or(&cfg.detune_deltas_hz);
    let pts = detune_sweep(&cfg.design, deltas, cfg.offset_hz, &cfg.pn)?;
    let mut buf = Vec::new();
    write_detune_csv(&pts, &mut buf)?;
    emit(out, &buf)
}

fn report(cfg: &RunConfig, out: Option<&Path>, json_out: Option<&Path>) -> Outcome {
    let r = build_report(&cfg.design, &cfg.pn, cfg.offset_hz, &cfg.detune_deltas_hz)?;
    if let Some(p) = json_out {
        let mut s = r.to_json();
        s.push('\n');
        emit(Some(p), s.as_bytes())?;
    }
    emit(out, r.to_text().as_bytes())?;
    let failed: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.id, c.name))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Checks(format!("checks failed: {}", failed.join(", "))))
    }
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    if let Command::Ac(a) = &cli.command {
        return ac(a);
    }
    let cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    match &cli.command {
        Command::Model {
            mode,
            netlist_out,
            out,
        } => model(&cfg, *mode, netlist_out.as_deref(), out.as_deref()),
        Command::Ac(_) => unreachable!("handled above"),
        Command::Phase { freq, out } => phase(&cfg, *freq, out.as_deref()),
        Command::Loopgain {
            out,
            curve,
            span,
            points,
        } => loopgain(&cfg, out.as_deref(), curve.as_deref(), *span, *points),
        Command::Pn { offset, out, curve } => pn(&cfg, *offset, out.as_deref(), curve.as_deref()),
        Command::Detune { deltas, out } => detune(&cfg, deltas.as_deref(), out.as_deref()),
        Command::Report { out, json } => report(&cfg, out.as_deref(), json.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("memsosc: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
