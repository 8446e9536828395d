use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};

use neuropath::aggregation::count_arcs;
use neuropath::stereo::{corr_baseline, err_metric, lr_check, make_synthetic_pair, normalize, wta};
use neuropath::toy::{oracle_suite, random_texture, rng, toy_stereo_network, uniform_conv_network};
use neuropath::{
    backward, count_paths, forward, CostVolume, DisparityMap, Grid, LayerRange, NetworkSpec, Semiring, ShiftSet,
};

use crate::output::{fnv1a, load_gray, load_network, open, write_atomic};
use crate::{parse_synthetic, require, ArcModeArg, Layers, NetArgs, SemiringArg, Synthetic};

const DEFAULT_LAYERS: Layers = Layers { first: 2, last: 8 };
const SYNTHETIC_SIZE: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    /// Aggregated activation paths.
    Path,
    /// Normalized cross-correlation of stacked layer responses.
    Corr,
}

#[derive(Args, Debug)]
pub struct StereoArgs {
    /// Reference (left) image, 8-bit PGM or PPM.
    #[arg(long, requires = "right", required_unless_present = "synthetic")]
    left: Option<PathBuf>,
    /// Searched (right) image.
    #[arg(long, requires = "left")]
    right: Option<PathBuf>,
    /// Generated constant-shift pair instead of image files.
    #[arg(long, value_parser = parse_synthetic, conflicts_with_all = ["left", "right"])]
    synthetic: Option<Synthetic>,
    #[command(flatten)]
    net: NetArgs,
    /// Largest disparity searched (default 228; max(15, 2*d0) for --synthetic).
    #[arg(long)]
    dmax: Option<u32>,
    #[arg(long, value_enum, default_value_t = SemiringArg::SumProduct)]
    semiring: SemiringArg,
    #[arg(long, value_enum, default_value_t = ArcModeArg::Full)]
    arc_mode: ArcModeArg,
    #[arg(long, value_enum, default_value_t = Baseline::Path)]
    baseline: Baseline,
    /// Patch size of the correlation baseline (odd).
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Drop pixels whose right-view disparity disagrees by more than --lr-tolerance.
    #[arg(long)]
    lr_check: bool,
    #[arg(long, default_value_t = 1.0)]
    lr_tolerance: f32,
    /// Disparity map, 16-bit PGM (value * 256, 0 = invalid).
    #[arg(long)]
    out: PathBuf,
    /// Cost volume in NPCV format (normalized for the path method).
    #[arg(long)]
    volume_out: Option<PathBuf>,
}

struct Timer {
    last: Instant,
    steps: Vec<(&'static str, Duration)>,
}

impl Timer {
    fn new() -> Self {
        Self { last: Instant::now(), steps: Vec::new() }
    }

    fn lap(&mut self, step: &'static str) {
        let now = Instant::now();
        self.steps.push((step, now - self.last));
        self.last = now;
    }

    fn report(&self) {
        let total: Duration = self.steps.iter().map(|s| s.1).sum();
        for (step, d) in &self.steps {
            println!("  {step:<10} {:>10.1} ms", d.as_secs_f64() * 1e3);
        }
        println!("  {:<10} {:>10.1} ms", "total", total.as_secs_f64() * 1e3);
    }
}

fn network(args: &NetArgs) -> anyhow::Result<(NetworkSpec, Layers)> {
    let (net, default) = match &args.weights {
        Some(path) => (load_network(path)?, DEFAULT_LAYERS),
        None => {
            let net = toy_stereo_network(args.seed);
            let last = net.depth();
            (net, Layers { first: 1, last })
        }
    };
    let layers = args.layers.unwrap_or(default);
    require(layers.last <= net.depth(), || {
        format!("layers {}:{} exceed the network depth {}", layers.first, layers.last, net.depth())
    })?;
    Ok((net, layers))
}

/// Reference view, searched view.
struct Pair {
    left: Grid,
    right: Grid,
}

impl Pair {
    fn flipped(&self) -> Pair {
        Pair { left: self.right.flip_horizontal(), right: self.left.flip_horizontal() }
    }
}

fn flip_map(map: &DisparityMap) -> DisparityMap {
    let w = map.width();
    let mut out = map.clone();
    for x in 0..w {
        for y in 0..map.height() {
            out.set(x, y, map.get(w - 1 - x, y));
        }
    }
    out
}

struct Method<'a> {
    net: &'a NetworkSpec,
    layers: Layers,
    shifts: ShiftSet,
    semiring: Semiring,
    args: &'a StereoArgs,
}

impl Method<'_> {
    /// Forward pass and aggregation; the volume is normalized for the path method.
    fn volume(&self, pair: &Pair, timer: &mut Timer) -> anyhow::Result<CostVolume> {
        let Layers { first, last } = self.layers;
        let r = forward(self.net, &pair.left, first, last)?;
        let s = forward(self.net, &pair.right, first, last)?;
        timer.lap("forward");
        Ok(match self.args.baseline {
            Baseline::Path => {
                let range = LayerRange::through_layers(first, last)?;
                let raw = backward(&r, &s, &self.shifts, self.semiring, range, self.args.arc_mode.into())?;
                timer.lap("backward");
                let v = normalize(&raw);
                timer.lap("normalize");
                v
            }
            Baseline::Corr => {
                let v = corr_baseline(&r, &s, &self.shifts, LayerRange::new(first, last)?, self.args.window)?;
                timer.lap("corr");
                v
            }
        })
    }
}

pub fn stereo(args: StereoArgs) -> anyhow::Result<ExitCode> {
    let mut timer = Timer::new();
    let (net, layers) = network(&args.net)?;
    let q = net.total_stride(layers.last);
    let (pair, dmax) = match (&args.left, &args.right, args.synthetic) {
        (Some(l), Some(r), _) => {
            let (left, right) = (load_gray(l)?, load_gray(r)?);
            require(left.dims() == right.dims(), || {
                format!("{} is {}x{}, {} is {}x{}", l.display(), left.width(), left.height(), r.display(), right.width(), right.height())
            })?;
            (Pair { left, right }, args.dmax.unwrap_or(228))
        }
        (_, _, Some(Synthetic { d0, noise })) => {
            let (left, right, _) = make_synthetic_pair(SYNTHETIC_SIZE, SYNTHETIC_SIZE, d0, noise, args.net.seed)?;
            (Pair { left, right }, args.dmax.unwrap_or(15.max(2 * d0 as u32)))
        }
        _ => bail!("give --left and --right, or --synthetic"),
    };
    let cropped = Pair { left: pair.left.center_crop_to_multiple(q)?, right: pair.right.center_crop_to_multiple(q)? };
    if cropped.left.dims() != pair.left.dims() {
        eprintln!(
            "note: center-cropped {}x{} to {}x{} (multiple of the pooling stride {q})",
            pair.left.width(),
            pair.left.height(),
            cropped.left.width(),
            cropped.left.height()
        );
    }
    let pair = cropped;
    timer.lap("load");

    let method = Method { net: &net, layers, shifts: ShiftSet::stereo(dmax), semiring: args.semiring.into(), args: &args };
    let volume = method.volume(&pair, &mut timer)?;
    let mut disparity = wta(&volume);
    timer.lap("wta");
    if args.lr_check {
        let right_view = flip_map(&wta(&method.volume(&pair.flipped(), &mut timer)?));
        disparity = lr_check(&disparity, &right_view, args.lr_tolerance)?;
        timer.lap("lr-check");
    }

    write_atomic(&args.out, |w| disparity.write_pgm16(w))?;
    if let Some(path) = &args.volume_out {
        write_atomic(path, |w| volume.write_npcv(w))?;
    }
    timer.lap("write");

    let (w, h) = (disparity.width(), disparity.height());
    let method_name = match args.baseline {
        Baseline::Path => format!("paths {}:{} {} {}", layers.first, layers.last, method.semiring, args.arc_mode.name()),
        Baseline::Corr => format!("corr {}:{} window {}", layers.first, layers.last, args.window),
    };
    println!("{w}x{h}, disparities 0..={dmax}, {method_name}");
    println!("valid pixels {}/{}", disparity.valid_count(), w * h);
    timer.report();
    Ok(ExitCode::SUCCESS)
}

impl ArcModeArg {
    fn name(self) -> &'static str {
        neuropath::ArcMode::from(self).name()
    }
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 50)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SemiringArg::SumProduct, conflicts_with = "all_semirings")]
    semiring: SemiringArg,
    /// Cycle through every semiring.
    #[arg(long)]
    all_semirings: bool,
}

pub fn oracle(args: OracleArgs) -> anyhow::Result<ExitCode> {
    let semirings = if args.all_semirings { Semiring::ALL.to_vec() } else { vec![args.semiring.into()] };
    let reports = oracle_suite(args.seed, args.cases, &semirings)?;
    let mut failures = 0;
    for (i, r) in reports.iter().enumerate() {
        let deviation = if r.exact { "exact".to_string() } else { format!("{:.2e}", r.max_rel_deviation) };
        let status = if r.passed { "ok" } else { "FAIL" };
        println!("{i:>4} {status:<4} dev {deviation:<9} paths {:>8}  {}", r.enumerated_paths, r.case);
        if !r.counts_match {
            println!("     path count {} != enumerated {}", r.counted_paths, r.enumerated_paths);
        }
        failures += usize::from(!r.passed);
    }
    let total: u64 = reports.iter().map(|r| r.enumerated_paths).sum();
    let worst = reports.iter().map(|r| r.max_rel_deviation).fold(0.0, f64::max);
    println!("{}/{} passed, {total} paths enumerated, max relative deviation {worst:.2e}", reports.len() - failures, reports.len());
    if failures > 0 {
        for r in reports.iter().filter(|r| !r.passed) {
            eprintln!("mismatch: {}", r.case);
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = ArcModeArg::Full)]
    arc_mode: ArcModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Image width and height.
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value_t = 4)]
    channels: usize,
    #[arg(long, default_value_t = 15)]
    dmax: u32,
    /// Timings per depth; the minimum is reported.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
}

pub fn bench(args: BenchArgs) -> anyhow::Result<ExitCode> {
    require(args.repeats > 0 && args.size > 0 && args.channels > 0, || "size, channels and repeats must be positive".into())?;
    let shifts = ShiftSet::stereo(args.dmax);
    let arc_mode = args.arc_mode.into();
    println!(
        "{0}x{0} images, {1} channels, |D| = {2}, {3} arcs, best of {4}",
        args.size,
        args.channels,
        shifts.len(),
        args.arc_mode.name(),
        args.repeats
    );
    println!("{:>3} {:>12} {:>12} {:>16} {:>22}", "L", "arcs", "time ms", "ns/(arc*shift)", "paths per origin");
    let mut times = Vec::new();
    for layers in [2, 4, 8] {
        let net = uniform_conv_network(layers, args.channels, args.seed);
        let mut g = rng(args.seed.wrapping_add(1));
        let a = random_texture(&mut g, args.size, args.size, args.channels);
        let b = random_texture(&mut g, args.size, args.size, args.channels);
        let range = LayerRange::new(0, layers)?;
        let (r, s) = (forward(&net, &a, 0, layers)?, forward(&net, &b, 0, layers)?);
        let arcs = count_arcs(&r, range, arc_mode)?;
        let paths = count_paths(&r, range, arc_mode)?.at(args.size / 2, args.size / 2);
        let mut best = Duration::MAX;
        for _ in 0..args.repeats {
            let start = Instant::now();
            backward(&r, &s, &shifts, Semiring::SumProduct, range, arc_mode)?;
            best = best.min(start.elapsed());
        }
        let secs = best.as_secs_f64();
        let per_arc = secs * 1e9 / (arcs as f64 * shifts.len() as f64);
        println!("{layers:>3} {arcs:>12} {:>12.2} {per_arc:>16.3} {paths:>22}", secs * 1e3);
        times.push(secs);
    }
    println!("ratio L=4/L=2 {:.2}", times[1] / times[0]);
    println!("ratio L=8/L=4 {:.2}", times[2] / times[1]);
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted disparities, 16-bit PGM.
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth, 16-bit PGM; zero marks pixels without ground truth.
    #[arg(long)]
    gt: PathBuf,
}

pub fn eval(args: EvalArgs) -> anyhow::Result<ExitCode> {
    let read = |p: &PathBuf| DisparityMap::read_pgm16(open(p)?).with_context(|| format!("reading {}", p.display()));
    let (pred, gt) = (read(&args.pred)?, read(&args.gt)?);
    let report = err_metric(&pred, &gt)?;
    print!("{report}");
    println!("evaluated {} pixels", report.evaluated);
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug)]
pub struct ForwardArgs {
    /// Input image; a seeded random texture when absent.
    #[arg(long)]
    image: Option<PathBuf>,
    #[command(flatten)]
    net: NetArgs,
}

pub fn forward_cmd(args: ForwardArgs) -> anyhow::Result<ExitCode> {
    let (net, layers) = network(&args.net)?;
    let image = match &args.image {
        Some(path) => load_gray(path)?,
        None => random_texture(&mut rng(args.net.seed), SYNTHETIC_SIZE, SYNTHETIC_SIZE, 1),
    };
    let image = image.center_crop_to_multiple(net.total_stride(layers.last))?;
    let stack = forward(&net, &image, 0, layers.last)?;
    println!("network {} ({} layers), input channels {}", net.kind_string(), net.depth(), net.input_channels());
    for (l, layer) in stack.layers().iter().enumerate() {
        let a = &layer.activations;
        let kind = if l == 0 { 'i' } else { net.layer(l).kind.letter() };
        println!("{l:>3} {kind} {:>5}x{:<5}x{:>4}  fnv1a {:016x}", a.width(), a.height(), a.channels(), fnv1a(a.data()));
    }
    Ok(ExitCode::SUCCESS)
}
