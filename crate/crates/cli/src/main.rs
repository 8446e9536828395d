mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use neuropath::{ArcMode, Semiring};

#[derive(Parser)]
#[command(name = "neuropath", version, about = "Dense correspondence by aggregating matched activation paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Disparity map (and optionally the cost volume) for a rectified pair.
    Stereo(commands::StereoArgs),
    /// Backward pass against brute-force path enumeration on random toy cases.
    Oracle(commands::OracleArgs),
    /// Backward-pass timing over growing synthetic depths.
    Bench(commands::BenchArgs),
    /// Err_1..Err_5 of a predicted disparity map against ground truth.
    Eval(commands::EvalArgs),
    /// Per-layer activation extents and checksums.
    Forward(commands::ForwardArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SemiringArg {
    SumProduct,
    MaxProduct,
    MaxMin,
}

impl From<SemiringArg> for Semiring {
    fn from(s: SemiringArg) -> Self {
        match s {
            SemiringArg::SumProduct => Semiring::SumProduct,
            SemiringArg::MaxProduct => Semiring::MaxProduct,
            SemiringArg::MaxMin => Semiring::MaxMin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ArcModeArg {
    Full,
    Central,
}

impl From<ArcModeArg> for ArcMode {
    fn from(a: ArcModeArg) -> Self {
        match a {
            ArcModeArg::Full => ArcMode::Full,
            ArcModeArg::Central => ArcMode::Central,
        }
    }
}

/// Layers `s:t`, both 1-based and inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layers {
    first: usize,
    last: usize,
}

fn parse_layers(s: &str) -> Result<Layers, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected s:t, got {s:?}"))?;
    let first = a.trim().parse().map_err(|_| format!("bad first layer {a:?}"))?;
    let last = b.trim().parse().map_err(|_| format!("bad last layer {b:?}"))?;
    if first < 1 || first > last {
        return Err(format!("need 1 <= s <= t, got {first}:{last}"));
    }
    Ok(Layers { first, last })
}

/// `d0=K[,noise=x]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Synthetic {
    d0: usize,
    noise: f32,
}

fn parse_synthetic(s: &str) -> Result<Synthetic, String> {
    let (mut d0, mut noise) = (None, 0.0);
    for part in s.split(',') {
        match part.split_once('=') {
            Some(("d0", v)) => d0 = Some(v.parse().map_err(|_| format!("bad d0 {v:?}"))?),
            Some(("noise", v)) => noise = v.parse().map_err(|_| format!("bad noise {v:?}"))?,
            _ => return Err(format!("unknown synthetic option {part:?}")),
        }
    }
    let d0 = d0.ok_or("d0=K is required")?;
    if !(noise >= 0.0 && f32::is_finite(noise)) {
        return Err(format!("noise must be a non-negative number, got {noise}"));
    }
    Ok(Synthetic { d0, noise })
}

/// Options shared by commands that run the network on an image pair.
#[derive(Args, Clone, Debug)]
struct NetArgs {
    /// NPW1 weights; without it a seeded toy network is used.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Activation layers s:t (default 2:8 with --weights, 1:L for the toy network).
    #[arg(long, value_parser = parse_layers)]
    layers: Option<Layers>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("NEUROPATH_THREADS") else { return Ok(()) };
    let n: usize = value.trim().parse().with_context(|| format!("NEUROPATH_THREADS={value:?} is not a number"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Stereo(args) => commands::stereo(args),
        Command::Oracle(args) => commands::oracle(args),
        Command::Bench(args) => commands::bench(args),
        Command::Eval(args) => commands::eval(args),
        Command::Forward(args) => commands::forward_cmd(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> anyhow::Result<()> {
    if !cond {
        bail!(msg());
    }
    Ok(())
}
