//! Command-line driver for the photon-echo memory simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use echo_core::experiment::{
    bin_times, build_fig1_sequence, fit_fringe, four_state_protocol, run_phase_scan, simulate_bins, visibility_curve,
    write_visibility_csv, FOUR_STATE_PREPARATIONS,
};
use echo_core::pathways::{enumerate_pathways, Relaxation};
use echo_core::qubit::{apply_memory_channel, make_timebin, postselected_fidelity};
use echo_core::{EchoBin, EchoError};
use thiserror::Error;

use crate::config::{load_config, ConfigError, RunConfig};
use crate::output::{check_writable, write_atomic};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  bad command line or configuration (parse error, unknown key, value out of range)
  3  invalid experiment parameters (pulse ordering, data areas outside the linear regime)
  4  simulation error (revival inside the window, sampling too coarse, window outside the signal)
  5  fringe fit failed (non-positive mean level)
  6  output directory or file I/O error";

#[derive(Debug, Parser)]
#[command(name = "echomem", version, about = "Stimulated photon-echo memory simulator", after_long_help = EXIT_CODES)]
pub struct Cli {
    /// TOML configuration with [ensemble], [sequence] and [scan] sections
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Override one configuration key, e.g. `--set sequence.dt=70`
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the five-pulse sequence around the echo bins and write the field
    #[command(after_long_help = "\
Writes signal.csv with columns:
  time_ns   sample time, ns
  re, im    emitted field, arbitrary units (ensemble average of (u + iv) / 2)
  in_pulse  1 while a pulse is on, else 0")]
    Simulate(SimulateArgs),
    /// Scan one pulse phase and integrate the three echo bins
    #[command(after_long_help = "\
Writes fringe_scan.csv with columns:
  phase_rad  value of the scanned phase, 0 to 2π inclusive
  central    background-subtracted area of the central bin (D2|R1 + D1|R2)
  left       area of the left bin (D1|R1)
  right      area of the right bin (D2|R2)")]
    ScanPhase(ScanArgs),
    /// Central-bin visibility versus data intensity ratio R
    #[command(after_long_help = "\
Writes visibility.csv with columns:
  R      intensity ratio of the two data pulses
  V_sim  fitted visibility of the simulated central-bin fringe
  V_eq3  2√R / (1 + R)")]
    VisibilityCurve,
    /// Four prepared phases α3 ∈ {0, π/2, π, 3π/2}, each analysed by scanning α5
    #[command(after_long_help = "\
Writes four_state.csv with columns:
  alpha3_rad        prepared phase of the second data pulse
  mean              fitted mean central-bin area
  visibility        fitted visibility
  phase_offset_rad  fitted fringe offset φ0 in mean·(1 + V·cos(α5 + φ0))
  rms_residual      rms fit residual")]
    FourState,
    /// List coherence pathways of the configured sequence
    #[command(after_long_help = "\
Writes pathways.csv with columns:
  echo_time_ns  rephasing time, from pulse mid-points
  phase_rad     total phase of the contribution (drive phases and i-factors)
  amplitude     magnitude of the contribution, including relaxation
  orders        coherence order before the first pulse and after each pulse
  pulses        pulses at which the order changes")]
    Pathways,
    /// Post-selected fidelity and retrieval probability of the storage channel
    #[command(after_long_help = "\
Writes fidelity.txt with `key = value` lines: t_d1_ns, dt_ns, t2_ns, ratio, phi_rad,
fidelity, retrieval_probability.")]
    Fidelity(FidelityArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Window start, ns (default: five pulse durations before the left bin)
    #[arg(long)]
    pub from: Option<f64>,
    /// Window end, ns (default: five pulse durations after the right bin)
    #[arg(long)]
    pub to: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Scanned phase (a2, a3, a4 or a5); overrides scan.phase
    #[arg(long)]
    pub phase: Option<String>,
}

#[derive(Debug, Args)]
pub struct FidelityArgs {
    /// Storage time of the early bin, ns (default: sequence.t_d1)
    #[arg(long = "t-d1")]
    pub t_d1: Option<f64>,
    /// Bin separation, ns (default: sequence.dt)
    #[arg(long)]
    pub dt: Option<f64>,
    /// Coherence time, ns (default: ensemble.t2)
    #[arg(long)]
    pub t2: Option<f64>,
    /// Intensity ratio early/late
    #[arg(long, default_value_t = 1.0)]
    pub ratio: f64,
    /// Relative phase, rad
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Echo(#[from] EchoError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Echo(e) => match e {
                EchoError::InvalidSpec(_)
                | EchoError::InvalidSequence(_)
                | EchoError::InvalidParameter(_)
                | EchoError::TooManyPulses(_)
                | EchoError::ShapeMismatch(_) => 3,
                EchoError::DegenerateFit(_) => 5,
                _ => 4,
            },
            CliError::Io { .. } => 6,
        }
    }
}

/// Runs one subcommand and returns its one-line summary.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = load_config(cli.config.as_deref(), &cli.overrides)?;
    check_writable(&cli.out)?;
    dispatch(&cfg, &cli.command, &cli.out)
}

pub fn dispatch(cfg: &RunConfig, command: &Command, out: &Path) -> Result<String, CliError> {
    let spec = cfg.ensemble_spec()?;
    let p = cfg.fig1_params();
    match command {
        Command::Simulate(args) => {
            let sig = if args.from.is_none() && args.to.is_none() {
                simulate_bins(&p, &spec)?
            } else {
                let bins = bin_times(&p)?;
                let pd = p.pulse_duration;
                let window = (args.from.unwrap_or(bins[0] - 5.0 * pd), args.to.unwrap_or(bins[2] + 5.0 * pd));
                echo_core::bloch::simulate_sequence(&build_fig1_sequence(&p)?, &spec, window, p.dt_samp)?
            };
            write_atomic(out, "signal.csv", |w| sig.write_csv(w))?;
            let (t_peak, i_peak) = (0..sig.len())
                .filter(|&i| !sig.in_pulse[i])
                .map(|i| (sig.time(i), sig.intensity(i)))
                .fold((f64::NAN, -1.0), |best, x| if x.1 > best.1 { x } else { best });
            Ok(format!("signal.csv: {} samples, strongest echo |E|² = {i_peak:.4e} at {t_peak} ns", sig.len()))
        }
        Command::ScanPhase(args) => {
            let scanned = match &args.phase {
                Some(name) => name.parse().map_err(|e: EchoError| ConfigError::Range(e.to_string()))?,
                None => cfg.scanned_phase()?,
            };
            let scan = run_phase_scan(&p, &spec, scanned, cfg.scan.n_steps)?;
            write_atomic(out, "fringe_scan.csv", |w| scan.write_csv(w))?;
            let fit = fit_fringe(&scan, EchoBin::Central)?;
            Ok(format!(
                "fringe_scan.csv: scanned {}, central V = {:.4}, offset = {:.4} rad",
                scanned.name(),
                fit.visibility,
                fit.phase_offset
            ))
        }
        Command::VisibilityCurve => {
            let points = visibility_curve(&cfg.scan.ratios, &p, &spec, cfg.scan.n_steps)?;
            write_atomic(out, "visibility.csv", |w| write_visibility_csv(&points, w))?;
            let worst = points.iter().map(|pt| (pt.v_sim - pt.v_eq3).abs()).fold(0.0, f64::max);
            Ok(format!("visibility.csv: {} ratios, max |V_sim - V_eq3| = {worst:.4}", points.len()))
        }
        Command::FourState => {
            let fits = four_state_protocol(&p, &spec, cfg.scan.n_steps)?;
            write_atomic(out, "four_state.csv", |w| {
                writeln!(w, "alpha3_rad,mean,visibility,phase_offset_rad,rms_residual")?;
                for (a3, f) in FOUR_STATE_PREPARATIONS.iter().zip(&fits) {
                    writeln!(w, "{a3},{},{},{},{}", f.mean, f.visibility, f.phase_offset, f.rms_residual)?;
                }
                Ok(())
            })?;
            let vs: Vec<String> = fits.iter().map(|f| format!("{:.4}", f.visibility)).collect();
            let offsets: Vec<String> = fits.iter().map(|f| format!("{:.4}", f.phase_offset)).collect();
            Ok(format!("four_state.csv: V = [{}], offsets = [{}] rad", vs.join(", "), offsets.join(", ")))
        }
        Command::Pathways => {
            let seq = build_fig1_sequence(&p)?;
            let mut paths = enumerate_pathways(&seq, Relaxation::from(&spec))?;
            paths.sort_by(|a, b| a.echo_time.total_cmp(&b.echo_time).then(b.amplitude.total_cmp(&a.amplitude)));
            let mut table = String::new();
            writeln!(table, "echo_time_ns,phase_rad,amplitude,orders,pulses").unwrap();
            for q in &paths {
                writeln!(
                    table,
                    "{},{},{},{},{}",
                    q.echo_time,
                    q.total_phase(),
                    q.amplitude,
                    q.orders.iter().map(|o| o.label()).collect::<Vec<_>>().join(" "),
                    q.participating_pulses.join(" ")
                )
                .unwrap();
            }
            write_atomic(out, "pathways.csv", |w| w.write_all(table.as_bytes()))?;
            print!("{table}");
            let central = bin_times(&p)?[1];
            let mut at_central: Vec<String> = paths
                .iter()
                .filter(|q| (q.echo_time - central).abs() < 1e-9 && q.participating_pulses.len() == 3)
                .map(|q| format!("({}|{})", q.participating_pulses[1], q.participating_pulses[2]))
                .collect();
            at_central.sort();
            at_central.dedup();
            Ok(format!(
                "pathways.csv: {} pathways; central bin at {central} ns holds {}",
                paths.len(),
                if at_central.is_empty() { "no stimulated echo".to_string() } else { at_central.join(" + ") }
            ))
        }
        Command::Fidelity(args) => {
            let t_d1 = args.t_d1.unwrap_or(p.t_d1);
            let dt = args.dt.unwrap_or(p.dt);
            let t2 = args.t2.unwrap_or(spec.t2);
            let input = make_timebin(args.ratio, args.phi, dt)?;
            let retrieved = apply_memory_channel(&input, t_d1, t2)?;
            let f = postselected_fidelity(&input, &retrieved)?;
            let report = format!(
                "t_d1_ns = {t_d1}\ndt_ns = {dt}\nt2_ns = {t2}\nratio = {}\nphi_rad = {}\nfidelity = {f}\nretrieval_probability = {}\n",
                args.ratio, args.phi, retrieved.retrieval_probability
            );
            write_atomic(out, "fidelity.txt", |w| w.write_all(report.as_bytes()))?;
            Ok(format!("fidelity.txt: F = {f:.10}, retrieval probability = {:.7}", retrieved.retrieval_probability))
        }
    }
}
