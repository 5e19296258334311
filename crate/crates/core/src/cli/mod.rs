//! Command-line front end. Each command reads a JSON experiment file, runs
//! it, writes CSV artifacts and prints a short summary.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage or config error.

mod config;

pub use config::{artifact_header, config_hash, CoreChoice, ExperimentConfig, ScenarioName};

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    self, calibrate_samples, histogram, histogram_to_csv, is_non_decreasing, is_non_increasing, rates, samples_for,
    stats_to_csv, sweep_receiver_length, sweep_to_csv, AnalysisError,
};
use crate::channel::{
    self, appendix_scenario, fig4_scenario, gen_channel_program, samples_to_csv, ChannelError, ChannelParams,
    Fig4Variant, NoiseModel, SecretBits,
};
use crate::model::{CoreConfig, FuPreset, ModelError, Program, SchedulerPolicy};
use crate::sim::{self, render_diagram, SimError, Trace};

const DEFAULT_OUT: &str = "rewind-out";
const DEFAULT_LADDER: [u32; 8] = [3, 6, 9, 12, 15, 24, 48, 72];

#[derive(Debug, Parser)]
#[command(name = "rewind", version, about = "Simulate functional-unit contention between transient and retiring µops")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a built-in scenario; write its trace CSV and pipeline diagram.
    RunScenario(RunScenarioArgs),
    /// Send the configured secret bits through the channel and measure it.
    Transmit(TransmitArgs),
    /// Repeat the transmission over a ladder of receiver chain lengths.
    Sweep(SweepArgs),
    /// Print the attack taxonomy of the configured scenario.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args)]
pub struct RunScenarioArgs {
    /// Scenario to simulate.
    #[arg(value_enum)]
    pub name: ScenarioName,
    /// Receiver chain length for channel0/channel1.
    #[arg(long, default_value_t = 12)]
    pub recv_divs: u32,
    /// Divider preset for channel0/channel1.
    #[arg(long, default_value = "skylake_divsd")]
    pub fu_preset: FuPreset,
    /// Core preset for channel0/channel1 (the other scenarios fix their own core).
    #[arg(long, default_value = "skylake")]
    pub core: String,
    /// Directory for the trace CSV and diagram.
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// Diagram columns per page.
    #[arg(long, default_value_t = 80)]
    pub width: usize,
}

#[derive(Debug, Args)]
pub struct TransmitArgs {
    /// JSON experiment file.
    pub config: PathBuf,
    /// Secret bits, e.g. `0110`, or `@FILE` to read them from a file.
    #[arg(long)]
    pub bits: Option<String>,
    /// Trials per bit.
    #[arg(long)]
    pub trials: Option<u32>,
    /// Noise model: `none`, `uniform:LO:HI` or `gaussian:SIGMA`.
    #[arg(long)]
    pub noise: Option<NoiseModel>,
    /// RNG seed; falls back to the config's `seed`, and one of the two is required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; falls back to the config's `outputs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Histogram bin width in cycles.
    #[arg(long, default_value_t = 1)]
    pub bin_width: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON experiment file.
    pub config: PathBuf,
    /// Receiver chain lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LADDER)]
    pub lengths: Vec<u32>,
    /// Scheduler policy override: `oldest-first` or `strict-in-order`.
    #[arg(long)]
    pub policy: Option<SchedulerPolicy>,
    /// Trials per bit.
    #[arg(long)]
    pub trials: Option<u32>,
    /// Noise model: `none`, `uniform:LO:HI` or `gaussian:SIGMA`.
    #[arg(long)]
    pub noise: Option<NoiseModel>,
    /// RNG seed; falls back to the config's `seed`, and one of the two is required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; falls back to the config's `outputs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// JSON experiment file. Its `scenario` picks what to classify
    /// (`channel1` when absent; `cache-fixture` is also accepted).
    pub config: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => m.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::InvalidParams(_) | ChannelError::InvalidNoise(_) | ChannelError::Model(_) => {
                CliError::Usage(e.to_string())
            }
            ChannelError::Sim(s) => s.into(),
            ChannelError::NoMeasurement => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Channel(c) => c.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
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
                let _ = write!(out, "{text}");
            } else {
                let usage = Cli::command().render_usage();
                let _ = write!(err, "{text}\n{usage}\n");
            }
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::RunScenario(a) => run_scenario(a, out),
        Command::Transmit(a) => transmit(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Classify(a) => classify(a, out),
    }
}

fn write_artifact(dir: &Path, name: &str, header: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, format!("{header}{body}"))?;
    Ok(path)
}

fn require_seed(flag: Option<u64>, config: &ExperimentConfig) -> Result<u64, CliError> {
    flag.or(config.seed).ok_or_else(|| CliError::Usage("no seed: pass --seed or set `seed` in the config".into()))
}

fn out_dir(flag: &Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.clone().or_else(|| config.outputs.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn parse_bits(arg: &str) -> Result<SecretBits, CliError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => {
            fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read bits from {path}: {e}")))?
        }
        None => arg.to_string(),
    };
    Ok(text.parse()?)
}

struct Built {
    program: Program,
    config: CoreConfig,
    baseline: Option<Program>,
}

fn channel_run(bit: u8, params: &ChannelParams, core: &CoreConfig) -> Result<Built, CliError> {
    let config = core.clone().with_fu(params.fu_preset.spec());
    let program = gen_channel_program(bit, params)?;
    let baseline = if bit == 1 { Some(gen_channel_program(0, params)?) } else { None };
    Ok(Built { program, config, baseline })
}

fn build(name: ScenarioName, params: &ChannelParams, core: &CoreConfig) -> Result<Built, CliError> {
    let paired = |s: channel::Scenario| Built { program: s.program, config: s.config, baseline: Some(s.baseline) };
    Ok(match name {
        ScenarioName::Fig4a => paired(fig4_scenario(Fig4Variant::ReadyVictimPipelined)),
        ScenarioName::Fig4b => paired(fig4_scenario(Fig4Variant::WaitingVictimPipelined)),
        ScenarioName::Fig4c => paired(fig4_scenario(Fig4Variant::WaitingVictimBlocking)),
        ScenarioName::Appendix => paired(appendix_scenario()),
        ScenarioName::Channel0 => channel_run(0, params, core)?,
        ScenarioName::Channel1 => channel_run(1, params, core)?,
        ScenarioName::CacheFixture => {
            return Err(CliError::Usage("cache-fixture is a hand-written trace and cannot be simulated".into()))
        }
    })
}

fn attack_time(trace: &Trace) -> Result<u64, CliError> {
    trace.attack_time.ok_or_else(|| CliError::Runtime("program has no start/stop timer pair".into()))
}

fn scenario_label(name: ScenarioName) -> String {
    serde_json::to_value(name).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn run_scenario(a: &RunScenarioArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = ChannelParams::default().with_recv_divs(a.recv_divs).with_preset(a.fu_preset);
    let built = build(a.name, &params, &CoreConfig::preset(&a.core)?)?;
    let label = scenario_label(a.name);

    #[derive(Serialize)]
    struct Inputs<'a> {
        scenario: &'a str,
        program: String,
        config: &'a CoreConfig,
    }
    let hash = config_hash(&Inputs { scenario: &label, program: built.program.to_json(), config: &built.config });
    let header = artifact_header(None, &hash);

    let trace = sim::run(&built.program, &built.config)?;
    let time = attack_time(&trace)?;
    let csv = write_artifact(&a.out, &format!("{label}.trace.csv"), &header, &trace.to_csv())?;
    let diagram = write_artifact(&a.out, &format!("{label}.diagram.txt"), &header, &render_diagram(&trace, a.width))?;
    writeln!(out, "scenario={label}")?;
    writeln!(out, "attack_time={time}")?;
    if let Some(baseline) = &built.baseline {
        let base = sim::run(baseline, &built.config)?;
        let base_time = attack_time(&base)?;
        write_artifact(&a.out, &format!("{label}.baseline.trace.csv"), &header, &base.to_csv())?;
        writeln!(out, "baseline_attack_time={base_time}")?;
        writeln!(out, "delta={:+} cycles", time as i64 - base_time as i64)?;
    }
    writeln!(out, "wrote {} and {}", csv.display(), diagram.display())?;
    Ok(())
}

/// The fully resolved inputs of a transmit or sweep run, hashed into every
/// artifact header.
#[derive(Serialize)]
struct ResolvedRun<'a> {
    command: &'a str,
    core: &'a CoreConfig,
    channel: &'a ChannelParams,
    noise: &'a NoiseModel,
    seed: u64,
    clock_hz: f64,
    lengths: &'a [u32],
    bin_width: u64,
}

fn transmit(a: &TransmitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(bits) = &a.bits {
        cfg.channel.secret_bits = parse_bits(bits)?;
    }
    if let Some(trials) = a.trials {
        cfg.channel.trials_per_bit = trials;
    }
    if let Some(noise) = a.noise {
        cfg.noise = noise;
    }
    if a.bin_width == 0 {
        return Err(CliError::Usage("--bin-width must be at least 1".into()));
    }
    let seed = require_seed(a.seed, &cfg)?;
    let core = cfg.core.resolve()?;
    let dir = out_dir(&a.out, &cfg);
    let resolved = ResolvedRun {
        command: "transmit",
        core: &core,
        channel: &cfg.channel,
        noise: &cfg.noise,
        seed,
        clock_hz: cfg.clock_hz,
        lengths: &[],
        bin_width: a.bin_width,
    };
    let header = artifact_header(Some(seed), &config_hash(&resolved));

    let samples = channel::transmit(&cfg.channel, &core, &cfg.noise, seed)?;
    write_artifact(&dir, "samples.csv", &header, &samples_to_csv(&samples))?;
    let threshold = calibrate_samples(&samples)?;
    let stats = rates(&samples, threshold, cfg.clock_hz);
    write_artifact(&dir, "stats.csv", &header, &stats_to_csv(&stats))?;
    for bit in [0u8, 1] {
        let bins = histogram(&samples_for(&samples, bit), a.bin_width)?;
        write_artifact(&dir, &format!("histogram{bit}.csv"), &header, &histogram_to_csv(&bins))?;
    }

    writeln!(out, "bits={} trials_per_bit={}", samples.len(), cfg.channel.trials_per_bit)?;
    writeln!(out, "threshold={}", stats.threshold)?;
    writeln!(out, "error_rate={}", stats.error_rate)?;
    writeln!(
        out,
        "transfer_rate={} bits/cycle ({:.1} KB/s at a nominal {} GHz)",
        stats.transfer_rate_bits_per_cycle,
        stats.transfer_rate_kbps,
        cfg.clock_hz / 1e9
    )?;
    writeln!(out, "wrote samples.csv, stats.csv, histogram0.csv, histogram1.csv to {}", dir.display())?;
    Ok(())
}

fn sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(trials) = a.trials {
        cfg.channel.trials_per_bit = trials;
    }
    if let Some(noise) = a.noise {
        cfg.noise = noise;
    }
    if a.lengths.is_empty() || a.lengths.contains(&0) {
        return Err(CliError::Usage("--lengths must be positive integers".into()));
    }
    let seed = require_seed(a.seed, &cfg)?;
    let mut core = cfg.core.resolve()?;
    if let Some(policy) = a.policy {
        core = core.with_policy(policy);
    }
    let dir = out_dir(&a.out, &cfg);
    let resolved = ResolvedRun {
        command: "sweep",
        core: &core,
        channel: &cfg.channel,
        noise: &cfg.noise,
        seed,
        clock_hz: cfg.clock_hz,
        lengths: &a.lengths,
        bin_width: 0,
    };
    let header = artifact_header(Some(seed), &config_hash(&resolved));

    let rows = sweep_receiver_length(&a.lengths, &cfg.channel, &core, &cfg.noise, seed)?;
    let path = write_artifact(&dir, "sweep.csv", &header, &sweep_to_csv(&rows))?;
    writeln!(
        out,
        "{:>6} {:>9} {:>9} {:>6} {:>14} {:>10}",
        "n_divs", "median0", "median1", "diff", "bits/cycle", "error"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:>6} {:>9} {:>9} {:>6} {:>14.8} {:>10.4}",
            r.n_divs, r.median0, r.median1, r.diff, r.bits_per_cycle, r.error_rate
        )?;
    }
    let diffs: Vec<i64> = rows.iter().map(|r| r.diff).collect();
    let bpc: Vec<f64> = rows.iter().map(|r| r.bits_per_cycle).collect();
    let verdict = |ok: bool| if ok { "yes" } else { "no" };
    writeln!(out, "diff non-decreasing: {}", verdict(is_non_decreasing(&diffs)))?;
    writeln!(out, "bits_per_cycle non-increasing: {}", verdict(is_non_increasing(&bpc)))?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn classify(a: &ClassifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let name = cfg.scenario.unwrap_or(ScenarioName::Channel1);
    let (program, trace) = match name {
        ScenarioName::CacheFixture => analysis::forward_stateful_fixture(),
        other => {
            let built = build(other, &cfg.channel, &cfg.core.resolve()?)?;
            let trace = sim::run(&built.program, &built.config)?;
            (built.program, trace)
        }
    };
    let taxonomy = analysis::classify(&program, &trace)?;
    writeln!(out, "{taxonomy}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with(std::iter::once("rewind").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_scenario_is_a_usage_error() {
        let (code, _, err) = run(&["run-scenario", "fig9"]);
        assert_eq!(code, 2);
        assert!(err.contains("Usage"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        for cmd in ["run-scenario", "transmit", "sweep", "classify"] {
            assert!(out.contains(cmd));
        }
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let (code, _, err) = run(&["classify", "/nonexistent/rewind.json"]);
        assert_eq!(code, 2);
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn bits_literal_or_file() {
        assert_eq!(parse_bits("0110").unwrap().bits(), &[0, 1, 1, 0]);
        assert!(matches!(parse_bits("01x"), Err(CliError::Usage(_))));
        assert!(matches!(parse_bits("@/nonexistent"), Err(CliError::Usage(_))));
    }

    #[test]
    fn scenario_labels() {
        assert_eq!(scenario_label(ScenarioName::Fig4a), "fig4a");
        assert_eq!(scenario_label(ScenarioName::CacheFixture), "cache-fixture");
    }
}
