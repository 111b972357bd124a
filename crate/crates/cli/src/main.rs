mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use ajscc::device::MosfetParams;
use ajscc::experiments::{count_misdecodes, fmt_sig, rmse, score, sweep_lambda, sweep_phi, SweepParam};
use ajscc::multimos::{assign_levels, decode_bank, BankDecodeMode};
use ajscc::precircuit::{power_estimate, quantize, quantize_staged, QuantizerConfig};
use ajscc::receiver::{decode_pair, DecoderConfig};
use ajscc::transmitter::{encode, SensorPair};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Invalid(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Invalid(m) => write!(f, "{m}"),
        }
    }
}

impl From<ajscc::Error> for CliError {
    fn from(e: ajscc::Error) -> Self {
        match e {
            ajscc::Error::Io(m) => CliError::Io(m),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Analog joint source-channel coding with a single MOSFET.
#[derive(Debug, Parser)]
#[command(name = "ajscc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quantize a sensor voltage and print the stage trace.
    Quantize {
        #[arg(long)]
        vin: f64,
        #[command(flatten)]
        q: QuantArgs,
    },
    /// Encode one sensor pair into a drain current.
    Encode {
        #[arg(long)]
        y: f64,
        #[arg(long)]
        x: f64,
        #[command(flatten)]
        q: QuantArgs,
        #[command(flatten)]
        dev: DeviceArgs,
    },
    /// Decode two consecutive drain currents.
    Decode {
        #[arg(long)]
        ids1: f64,
        #[arg(long)]
        ids2: f64,
        #[command(flatten)]
        q: QuantArgs,
        #[command(flatten)]
        dev: DeviceArgs,
        #[arg(long, default_value_t = 4.5)]
        vds_min: f64,
        #[arg(long, default_value_t = 10.0)]
        vds_max: f64,
        /// Return the best slope match without the range check.
        #[arg(long)]
        no_correction: bool,
    },
    /// Run a φ or (φ, λ) sweep and write CSV.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ParamArg::Phi)]
        param: ParamArg,
        /// CSV destination; overrides `[output] path`. Stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Precircuit power estimate in µW.
    Power {
        #[arg(long, default_value_t = 0.5)]
        phi: f64,
        #[arg(long, default_value_t = 1.0)]
        vgs_min: f64,
        #[arg(long, default_value_t = 5.0)]
        vgs_max: f64,
        /// One shared stage for the whole bank.
        #[arg(long)]
        shared: bool,
    },
    /// Decode a multi-device bank in genie and union mode.
    MultimosSweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        devices: usize,
        #[arg(long, default_value_t = 20)]
        levels: usize,
        /// Spacing of the combined level grid, starting at vgs_min.
        #[arg(long, default_value_t = 0.2)]
        phi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ParamArg {
    Phi,
    Lambda,
}

#[derive(Debug, Args)]
struct QuantArgs {
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    vgs_min: f64,
    #[arg(long, default_value_t = 5.0)]
    vgs_max: f64,
}

impl QuantArgs {
    fn config(&self) -> CliResult<QuantizerConfig> {
        Ok(QuantizerConfig::new(self.phi, self.vgs_min, self.vgs_max)?)
    }
}

#[derive(Debug, Args)]
struct DeviceArgs {
    #[arg(long, default_value_t = 155e-6)]
    kprime: f64,
    #[arg(long, default_value_t = 0.74)]
    vth: f64,
    #[arg(long, default_value_t = 0.037)]
    lambda: f64,
}

impl DeviceArgs {
    fn params(&self) -> CliResult<MosfetParams> {
        Ok(MosfetParams::new(self.kprime, self.vth, self.lambda)?)
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Quantize { vin, q } => cmd_quantize(vin, &q.config()?),
        Command::Encode { y, x, q, dev } => {
            let s = encode(SensorPair { y_raw: y, x_raw: x }, &q.config()?, &dev.params()?)?;
            let t = s.truth.expect("encode sets truth");
            println!("vgs_V = {}", fmt_sig(t.vgs_level));
            println!("vds_V = {}", fmt_sig(t.vds));
            println!("ids_A = {}", fmt_sig(s.ids));
            Ok(())
        }
        Command::Decode {
            ids1,
            ids2,
            q,
            dev,
            vds_min,
            vds_max,
            no_correction,
        } => {
            let cfg = DecoderConfig::new(q.config()?.levels(), dev.params()?, (vds_min, vds_max))?;
            let d = decode_pair(&cfg, ids1, ids2, !no_correction)?;
            println!("vgs_hat_V = {}", fmt_sig(d.vgs_hat));
            println!("vds_hat_1_V = {}", fmt_sig(d.vds_hat_1));
            println!("vds_hat_2_V = {}", fmt_sig(d.vds_hat_2));
            println!("rank_used = {}", d.rank_used);
            println!("corrected = {}", d.corrected);
            Ok(())
        }
        Command::Sweep { config, param, out } => cmd_sweep(config, param, out),
        Command::Power {
            phi,
            vgs_min,
            vgs_max,
            shared,
        } => {
            let q = QuantizerConfig::new(phi, vgs_min, vgs_max)?;
            let p = power_estimate(&q, shared)?;
            println!("opamps = {}", p.opamps);
            println!("comparators = {}", p.comparators);
            println!("total_uW = {}", fmt_sig(p.total_uw));
            Ok(())
        }
        Command::MultimosSweep {
            config,
            devices,
            levels,
            phi,
            out,
        } => cmd_multimos(config, devices, levels, phi, out),
    }
}

fn cmd_quantize(vin: f64, q: &QuantizerConfig) -> CliResult<()> {
    if q.uses_circuit() {
        let t = quantize_staged(vin, q)?;
        println!("phi = {}  code = {}  ilq = {}", fmt_sig(q.phi), t.code, fmt_sig(t.ilq));
        println!("stage,input_V,emitted_V,kind");
        for s in &t.stages {
            println!("{},{},{},{}", s.stage, fmt_sig(s.input), fmt_sig(s.emitted), s.kind);
        }
        println!("vgs_V = {}", fmt_sig(t.output));
    } else {
        println!("phi = {}  (behavioral quantizer)", fmt_sig(q.phi));
        println!("vgs_V = {}", fmt_sig(quantize(vin, q)?));
    }
    Ok(())
}

fn open_out(path: &PathBuf) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn cmd_sweep(config: Option<PathBuf>, param: ParamArg, out: Option<PathBuf>) -> CliResult<()> {
    let mut cfg = RunConfig::load(config.as_deref())?;
    if out.is_some() {
        cfg.output.path = out;
    }
    cfg.validate()?;
    let spec = cfg.sweep_spec();
    let result = match param {
        ParamArg::Phi => sweep_phi(&spec)?,
        ParamArg::Lambda => sweep_lambda(&spec)?,
    };
    let kind = match result.param {
        SweepParam::Phi => "phi",
        SweepParam::Lambda => "lambda",
    };
    let comments = vec![format!("sweep = \"{kind}\""), cfg.to_toml()];
    match &cfg.output.path {
        Some(p) => {
            let mut w = open_out(p)?;
            result.write_csv(&mut w, &comments)?;
            w.flush()?;
        }
        None => result.write_csv(io::stdout().lock(), &comments)?,
    }
    let s = result.summary();
    let threshold = s.threshold_phi.map_or("none".to_string(), fmt_sig);
    eprintln!(
        "{kind} sweep: {} cells, max rmse_vgs before {} V after {} V, max rmse_vds before {} V after {} V, largest erroneous phi {threshold}",
        result.cells.len(),
        fmt_sig(s.max_rmse_vgs_before),
        fmt_sig(s.max_rmse_vgs_after),
        fmt_sig(s.max_rmse_vds_before),
        fmt_sig(s.max_rmse_vds_after),
    );
    Ok(())
}

fn cmd_multimos(
    config: Option<PathBuf>,
    devices: usize,
    n_levels: usize,
    phi: f64,
    out: Option<PathBuf>,
) -> CliResult<()> {
    let cfg = RunConfig::load(config.as_deref())?;
    cfg.device.validate()?;
    cfg.vds.validate()?;
    if !(phi.is_finite() && phi > 0.0) {
        return Err(CliError::Invalid(format!("phi must be > 0, got {phi}")));
    }
    let levels: Vec<f64> = (0..n_levels)
        .map(|i| cfg.quantizer.vgs_min + phi * i as f64)
        .collect();
    let bank = assign_levels(&levels, devices, &cfg.device)?;
    let segments = bank.encode_grid(&cfg.vds)?;
    let pairing = cfg.sweep.pairing;
    let range = (cfg.vds.min, cfg.vds.max);

    let mut lines = vec!["mode,rmse_vgs_V,rmse_vds_V,misdecodes,pairs".to_string()];
    for (name, mode) in [("genie", BankDecodeMode::Genie), ("union", BankDecodeMode::Union)] {
        let d = decode_bank(&bank, &segments, mode, pairing, range, true)?;
        let (g, v) = rmse(&score(&d, &segments, pairing)?)?;
        lines.push(format!(
            "{name},{},{},{},{}",
            fmt_sig(g),
            fmt_sig(v),
            count_misdecodes(&d, &segments)?,
            d.pairs.len()
        ));
    }
    let spacing = bank.min_device_spacing().map_or("n/a".to_string(), fmt_sig);
    let header = format!("# devices = {devices}\n# levels = {n_levels}\n# phi = {}\n# per-device spacing = {spacing}", fmt_sig(phi));
    match out {
        Some(p) => {
            let mut w = open_out(&p)?;
            writeln!(w, "{header}")?;
            for l in &lines {
                writeln!(w, "{l}")?;
            }
            w.flush()?;
        }
        None => {
            println!("{header}");
            for l in &lines {
                println!("{l}");
            }
        }
    }
    Ok(())
}
