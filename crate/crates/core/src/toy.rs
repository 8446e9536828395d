//! Seeded random networks and instances for tests, the CLI and benchmarks.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregation::{backward, brute_force_limited, count_paths, ArcMode, LayerRange};
use crate::error::Result;
use crate::grid::{Grid, Shift, ShiftSet};
use crate::network::{forward, ActivationStack, LayerKind, LayerSpec, NetworkSpec, VGG16_PREFIX};
use crate::semiring::Semiring;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A `k × k` conv layer with uniform weights scaled by `1/sqrt(fan_in)`
/// and a small positive bias, so that ReLU outputs are rarely all zero.
pub fn random_conv<R: Rng>(rng: &mut R, cin: usize, cout: usize, k: usize) -> LayerSpec {
    let bound = (3.0 / (cin * k * k) as f32).sqrt();
    let weights = (0..cout * cin * k * k).map(|_| rng.random_range(-bound..bound)).collect();
    let bias = (0..cout).map(|_| rng.random_range(0.0..0.1)).collect();
    LayerSpec::conv_relu(cin, cout, (k, k), weights, bias).expect("well-formed conv")
}

/// Random-weight network with the given layer kinds; conv layers produce
/// `channels` outputs, pooling layers use 2×2 windows.
pub fn random_network<R: Rng>(rng: &mut R, input_channels: usize, kinds: &[(LayerKind, usize)]) -> NetworkSpec {
    let mut layers = Vec::with_capacity(kinds.len());
    let mut c = input_channels;
    for &(kind, out) in kinds {
        layers.push(match kind {
            LayerKind::ConvRelu => random_conv(rng, c, out, 3),
            LayerKind::MaxPool => LayerSpec::max_pool(c, 2).expect("2x2 pooling"),
        });
        if kind == LayerKind::ConvRelu {
            c = out;
        }
    }
    NetworkSpec::new(layers).expect("consistent channel chain")
}

/// Three-layer toy stereo network: conv 1→8, 2×2 pool, conv 8→8.
pub fn toy_stereo_network(seed: u64) -> NetworkSpec {
    random_network(
        &mut rng(seed),
        1,
        &[(LayerKind::ConvRelu, 8), (LayerKind::MaxPool, 8), (LayerKind::ConvRelu, 8)],
    )
}

/// `layers` conv layers of constant width `channels` (input included).
pub fn uniform_conv_network(layers: usize, channels: usize, seed: u64) -> NetworkSpec {
    random_network(&mut rng(seed), channels, &vec![(LayerKind::ConvRelu, channels); layers])
}

/// The VGG-16 prefix layout with random weights.
pub fn vgg16_prefix_random(seed: u64) -> NetworkSpec {
    random_network(&mut rng(seed), 3, &VGG16_PREFIX)
}

/// Uniform random texture.
pub fn random_texture<R: Rng>(rng: &mut R, width: usize, height: usize, channels: usize) -> Grid {
    Grid::from_fn(width, height, channels, |_, _, _| rng.random::<f32>()).expect("finite texture")
}

/// A randomly drawn small matching problem.
#[derive(Clone, Debug)]
pub struct OracleCase {
    pub seed: u64,
    pub network: NetworkSpec,
    pub reference: Grid,
    pub searched: Grid,
    pub shifts: ShiftSet,
    pub range: LayerRange,
    pub semiring: Semiring,
    pub arc_mode: ArcMode,
}

impl fmt::Display for OracleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shifts: Vec<String> = self.shifts.shifts().iter().map(|s| format!("({},{})", s.dx, s.dy)).collect();
        let channels: Vec<String> = self.network.layers().iter().map(|l| l.out_channels.to_string()).collect();
        write!(
            f,
            "seed={} net={} ch={}->{} image={}x{} range={}:{} shifts=[{}] semiring={} arcs={}",
            self.seed,
            self.network.kind_string(),
            self.network.input_channels(),
            channels.join(","),
            self.reference.width(),
            self.reference.height(),
            self.range.start,
            self.range.end,
            shifts.join(" "),
            self.semiring,
            self.arc_mode,
        )
    }
}

/// Bounds for random oracle cases.
pub const ORACLE_MAX_LAYERS: usize = 4;
pub const ORACLE_MAX_CHANNELS: usize = 3;
pub const ORACLE_MAX_EXTENT: usize = 8;
pub const ORACLE_MAX_SHIFTS: usize = 4;
/// Cases whose enumeration would exceed this many path evaluations are redrawn.
pub const ORACLE_PATH_BUDGET: u64 = 400_000;
/// Cases with fewer paths than this are redrawn as uninformative.
pub const ORACLE_MIN_PATHS: u64 = 32;

impl OracleCase {
    /// Draws a case with at most four layers, three channels, extents up to
    /// eight and four shifts, redrawing until brute force is affordable and
    /// the case has enough paths to be informative.
    pub fn random(seed: u64, semiring: Semiring, arc_mode: ArcMode) -> Result<Self> {
        let mut rng = rng(seed);
        loop {
            let case = Self::draw(&mut rng, seed, semiring, arc_mode)?;
            let (r, _) = case.stacks()?;
            let paths = count_paths(&r, case.range, arc_mode)?.total().unwrap_or(u64::MAX);
            let work = paths.saturating_mul(case.shifts.len() as u64);
            if (ORACLE_MIN_PATHS..=ORACLE_PATH_BUDGET).contains(&work) {
                return Ok(case);
            }
        }
    }

    fn draw(rng: &mut ChaCha8Rng, seed: u64, semiring: Semiring, arc_mode: ArcMode) -> Result<Self> {
        let depth = if rng.random_bool(0.15) { 1 } else { rng.random_range(2..=ORACLE_MAX_LAYERS) };
        let mut kinds = Vec::with_capacity(depth);
        let mut pools = 0;
        for i in 0..depth {
            // at most two pools so that an 8-pixel extent stays divisible
            if i > 0 && pools < 2 && rng.random_bool(0.35) {
                kinds.push((LayerKind::MaxPool, 0));
                pools += 1;
            } else {
                kinds.push((LayerKind::ConvRelu, rng.random_range(1..=ORACLE_MAX_CHANNELS)));
            }
        }
        let input_channels = rng.random_range(1..=ORACLE_MAX_CHANNELS);
        let network = random_network(rng, input_channels, &kinds);
        let q = 1usize << pools;
        let multiples: Vec<usize> = (1..=ORACLE_MAX_EXTENT / q).map(|m| m * q).collect();
        let width = *multiples.choose(rng).expect("non-empty");
        let height = *multiples.choose(rng).expect("non-empty");

        let reference = random_texture(rng, width, height, input_channels);
        // half of the cases search a shifted copy so that pooling gates open
        let searched = if rng.random_bool(0.5) {
            let offset = rng.random_range(0..=3usize);
            Grid::from_fn(width, height, input_channels, |x, y, c| {
                reference.get((x + offset).min(width - 1), y, c)
            })?
        } else {
            random_texture(rng, width, height, input_channels)
        };

        let count = rng.random_range(1..=ORACLE_MAX_SHIFTS);
        let mut shifts: Vec<Shift> = Vec::with_capacity(count);
        while shifts.len() < count {
            let dy = if rng.random_bool(0.2) { rng.random_range(-1..=1) } else { 0 };
            let s = Shift::new(rng.random_range(-3..=7), dy);
            if !shifts.contains(&s) {
                shifts.push(s);
            }
        }
        // mostly ranges spanning two or more layers
        let start = if rng.random_bool(0.2) { depth } else { rng.random_range(0..depth) };
        Ok(Self {
            seed,
            network,
            reference,
            searched,
            shifts: ShiftSet::new(shifts)?,
            range: LayerRange::new(start, depth)?,
            semiring,
            arc_mode,
        })
    }

    pub fn stacks(&self) -> Result<(ActivationStack, ActivationStack)> {
        let (s, t) = (self.range.start, self.range.end);
        Ok((forward(&self.network, &self.reference, s, t)?, forward(&self.network, &self.searched, s, t)?))
    }
}

/// Outcome of comparing the backward pass with enumeration on one case.
#[derive(Clone, Debug)]
pub struct CaseReport {
    pub case: String,
    pub semiring: Semiring,
    /// Largest `|a - b| / max(|a|, |b|)` over the volume.
    pub max_rel_deviation: f64,
    pub exact: bool,
    pub enumerated_paths: u64,
    pub counted_paths: u64,
    /// `count_paths` agrees with enumeration at every origin.
    pub counts_match: bool,
    pub passed: bool,
}

/// Relative tolerance for rounding semirings.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

pub fn relative_deviation(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn run_case(case: &OracleCase) -> Result<CaseReport> {
    let (r, s) = case.stacks()?;
    let fast = backward(&r, &s, &case.shifts, case.semiring, case.range, case.arc_mode)?;
    let slow = brute_force_limited(&r, &s, &case.shifts, case.semiring, case.range, case.arc_mode, u64::MAX)?;
    let counted = count_paths(&r, case.range, case.arc_mode)?;
    let max_rel_deviation = fast
        .values()
        .iter()
        .zip(slow.volume.values())
        .map(|(&a, &b)| relative_deviation(a, b))
        .fold(0.0, f64::max);
    let exact = fast.values() == slow.volume.values();
    let counts_match = counted.per_origin == slow.path_counts;
    let within = if case.semiring == Semiring::MaxMin { exact } else { max_rel_deviation <= ORACLE_TOLERANCE };
    Ok(CaseReport {
        case: case.to_string(),
        semiring: case.semiring,
        max_rel_deviation,
        exact,
        enumerated_paths: slow.total_paths(),
        counted_paths: counted.total().unwrap_or(u64::MAX),
        counts_match,
        passed: within && counts_match,
    })
}

/// `cases` random cases cycling through `semirings` and both arc modes.
pub fn oracle_suite(seed: u64, cases: usize, semirings: &[Semiring]) -> Result<Vec<CaseReport>> {
    (0..cases)
        .map(|i| {
            let semiring = semirings[i % semirings.len()];
            let arc_mode = if (i / semirings.len()).is_multiple_of(2) { ArcMode::Full } else { ArcMode::Central };
            let case_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            run_case(&OracleCase::random(case_seed, semiring, arc_mode)?)
        })
        .collect()
}
