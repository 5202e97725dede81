//! Seeded randomized checks of the three counting lemmas for sums of
//! functions and for slope-bounded polygons:
//!
//! * A.1: `0 < g ≤ δ` implies `N_δ(f + g) ≥ ½ N_δ(f)`;
//! * A.2: `N_δ(f + g) ≥ N_δ(g) / (2 n_f)` where `n_f` bounds the boxes `f`
//!   meets per column;
//! * A.3: a polygon with slopes bounded by `k` meets at most `k + 1` boxes
//!   per column.
//!
//! A.1 and A.2 count cells on a shared sample lattice; A.3 uses exact
//! column ranges. Every trial draws from its own ChaCha stream, so results
//! do not depend on execution order.

use num_rational::Ratio;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{column_profile, GridScale};
use crate::polyline::PiecewiseLinear;

/// Seeds whose suites are part of the test contract.
pub const PUBLISHED_SEEDS: [u64; 10] = [1, 7, 42, 1729, 2024, 31337, 65537, 271828, 314159, 9_999_991];

/// Every abscissa and value lies on the lattice `ℤ / 2^20`.
pub const LATTICE_BITS: u32 = 20;

type Q = Ratio<i128>;
pub type Polygon = PiecewiseLinear<i128>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub trials: u64,
    /// Inclusive range for the number of breakpoints.
    pub breakpoints: (usize, usize),
    /// Largest slope bound `k` drawn for A.3.
    pub max_slope: u32,
    /// Scales used by A.1 and A.2.
    pub sum_scales: Vec<u64>,
    /// Inclusive scale range for A.3.
    pub profile_scales: (u64, u64),
    /// Abscissae `j / samples` for `j = 0..samples` (a power of two).
    pub samples: u64,
}

impl TrialConfig {
    pub fn new(seed: u64, trials: u64) -> Self {
        Self {
            seed,
            trials,
            breakpoints: (1, 24),
            max_slope: 8,
            sum_scales: vec![8, 64, 512],
            profile_scales: (1, 1 << 10),
            samples: 1 << 11,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.breakpoints;
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if lo == 0 || lo > hi || hi as u64 > 1 << 10 {
            return Err(Error::Parameter(format!("breakpoint range {lo}..={hi} is invalid")));
        }
        SampleGrid::new(self.samples)?;
        if self.sum_scales.is_empty() || self.sum_scales.contains(&0) {
            return Err(Error::Parameter("sum scales must be non-empty and positive".into()));
        }
        if self.profile_scales.0 == 0 || self.profile_scales.0 > self.profile_scales.1 {
            return Err(Error::Parameter("profile scale range is invalid".into()));
        }
        Ok(())
    }

    /// Independent stream for one trial.
    pub fn rng_for(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }

    fn sample_grid(&self) -> SampleGrid {
        SampleGrid { count: self.samples }
    }
}

/// The abscissae `j / count`, `j = 0..count`, with `count` a power of two
/// dividing `2^20`. The point `x = 1` is left out, matching the half-open
/// columns of the exact column profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleGrid {
    pub count: u64,
}

impl SampleGrid {
    pub fn new(count: u64) -> Result<Self> {
        if !count.is_power_of_two() || count > 1 << LATTICE_BITS {
            return Err(Error::Parameter("sample count must be a power of two up to 2^20".into()));
        }
        Ok(Self { count })
    }

    pub fn points(&self) -> Vec<Q> {
        (0..self.count as i128).map(|j| Q::new(j, self.count as i128)).collect()
    }

    /// Exact values `(num, den)` of `f` at every sample, computed with
    /// integer arithmetic on the lattice. Breakpoints must lie on the lattice
    /// and values stay below `2^40`.
    fn values(&self, f: &Polygon) -> Result<Vec<(i128, i128)>> {
        let d = lattice();
        let on_lattice = |r: &Q| {
            if d % r.denom() != 0 || r.numer().abs() > 1 << 60 {
                return Err(Error::Domain(format!("breakpoint coordinate {r} is off the 2^-20 lattice")));
            }
            Ok(r.numer() * (d / r.denom()))
        };
        let bps = f
            .breakpoints()
            .iter()
            .map(|(x, y)| Ok((on_lattice(x)?, on_lattice(y)?)))
            .collect::<Result<Vec<(i128, i128)>>>()?;
        let stride = d / self.count as i128;
        let mut out = Vec::with_capacity(self.count as usize);
        let mut seg = 0usize;
        for j in 0..self.count as i128 {
            let x = j * stride;
            while seg + 1 < bps.len() && bps[seg + 1].0 <= x {
                seg += 1;
            }
            let (x0, y0) = bps[seg];
            if x <= x0 || seg + 1 == bps.len() {
                // before the first breakpoint, at a breakpoint, or past the last one
                out.push((y0, d));
            } else {
                let (x1, y1) = bps[seg + 1];
                let dx = x1 - x0;
                out.push((y0 * dx + (y1 - y0) * (x - x0), d * dx));
            }
        }
        Ok(out)
    }

    fn cells(&self, values: impl Iterator<Item = (i128, i128)>, m: GridScale) -> u64 {
        let mi = m.get() as i128;
        let mut keys: Vec<(i128, i128)> = values
            .enumerate()
            .map(|(j, (num, den))| {
                let col = j as i128 * mi / self.count as i128;
                (col, (num * mi).div_euclid(den))
            })
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len() as u64
    }

    /// Cell counts of `f`, `g` and `f + g` over the grid.
    pub fn sum_counts(&self, f: &Polygon, g: &Polygon, m: GridScale) -> Result<(u64, u64, u64)> {
        let vf = self.values(f)?;
        let vg = self.values(g)?;
        let sum = vf.iter().zip(&vg).map(|(&(a, b), &(c, e))| (a * e + c * b, b * e));
        let n_sum = self.cells(sum, m);
        Ok((self.cells(vf.iter().copied(), m), self.cells(vg.iter().copied(), m), n_sum))
    }
}

fn lattice() -> i128 {
    1 << LATTICE_BITS
}

/// Strictly increasing abscissae on the lattice, starting at 0 and, when
/// there are at least two, ending at 1.
fn random_abscissae<R: Rng>(rng: &mut R, n: usize) -> Vec<i128> {
    let d = lattice();
    if n == 1 {
        return vec![0];
    }
    let mut inner = std::collections::BTreeSet::new();
    while inner.len() < n - 2 {
        inner.insert(rng.gen_range(1..d));
    }
    let mut xs = vec![0];
    xs.extend(inner);
    xs.push(d);
    xs
}

/// A random polygon with values in `[lo, hi]` (lattice numerators) and,
/// when `slope` is given, every segment slope in `[−slope, slope]`.
pub fn random_polygon<R: Rng>(rng: &mut R, n: usize, lo: i128, hi: i128, slope: Option<u32>) -> Polygon {
    let d = lattice();
    let xs = random_abscissae(rng, n);
    let mut pts = Vec::with_capacity(n);
    let mut y = rng.gen_range(lo..=hi);
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            let (a, b) = match slope {
                // |Δy| ≤ k·Δx, both in lattice units
                Some(k) => {
                    let step = k as i128 * (x - xs[i - 1]);
                    ((y - step).max(lo), (y + step).min(hi))
                }
                None => (lo, hi),
            };
            y = rng.gen_range(a..=b);
        }
        pts.push((Q::new(x, d), Q::new(y, d)));
    }
    PiecewiseLinear::new(pts).expect("lattice breakpoints are valid")
}

/// The generator used by all suites: breakpoint count from the config,
/// values in `[0, 1]`.
pub fn random_piecewise_linear<R: Rng>(rng: &mut R, config: &TrialConfig, slope: Option<u32>) -> Polygon {
    let n = rng.gen_range(config.breakpoints.0..=config.breakpoints.1);
    random_polygon(rng, n, 0, lattice(), slope)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// The drawn functions violate the lemma's hypothesis.
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SumCheck {
    pub outcome: Outcome,
    pub n_f: u64,
    pub n_g: u64,
    pub n_sum: u64,
}

/// Small perturbations keep half the cells: `N_δ(f + g) ≥ ½ N_δ(f)` for
/// `0 < g ≤ δ` with `strict`, and for `0 ≤ g ≤ δ` (vanishing tails) without.
pub fn check_lemma_a1(f: &Polygon, g: &Polygon, m: GridScale, grid: SampleGrid, strict: bool) -> Result<SumCheck> {
    let mi = m.get() as i128;
    let ok = grid
        .values(g)?
        .into_iter()
        .all(|(num, den)| (if strict { num > 0 } else { num >= 0 }) && num * mi <= den);
    let (n_f, n_g, n_sum) = grid.sum_counts(f, g, m)?;
    let outcome = if !ok {
        Outcome::Skip
    } else if 2 * n_sum >= n_f {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    Ok(SumCheck { outcome, n_f, n_g, n_sum })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct A2Check {
    pub outcome: Outcome,
    /// Largest number of boxes `f` meets in one column.
    pub column_max_f: u64,
    pub column_max_g: u64,
    pub n_f: u64,
    pub n_g: u64,
    pub n_sum: u64,
    /// `N(f+g) ≥ N(g) / (2 n_f)`.
    pub as_stated: bool,
    /// `N(f+g) ≥ N(f) / (2 n_g)`, the orientation used when building witnesses.
    pub swapped: bool,
}

/// `N_δ(f + g) ≥ N_δ(g) / (2 n_f)`, with `n_f` the largest column count of
/// `f`, checked with `f` and `g` in both roles.
pub fn check_lemma_a2(f: &Polygon, g: &Polygon, m: GridScale, grid: SampleGrid) -> Result<A2Check> {
    let nonneg = grid.values(f)?.iter().chain(&grid.values(g)?).all(|v| v.0 >= 0);
    let column_max_f = column_profile(f, m)?.into_iter().max().unwrap_or(1);
    let column_max_g = column_profile(g, m)?.into_iter().max().unwrap_or(1);
    let (n_f, n_g, n_sum) = grid.sum_counts(f, g, m)?;
    let as_stated = 2 * column_max_f * n_sum >= n_g;
    let swapped = 2 * column_max_g * n_sum >= n_f;
    let outcome = if !nonneg {
        Outcome::Skip
    } else if as_stated && swapped {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    Ok(A2Check { outcome, column_max_f, column_max_g, n_f, n_g, n_sum, as_stated, swapped })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct A3Check {
    pub outcome: Outcome,
    pub max_column: u64,
    pub bound: u64,
}

/// A `k`-Lipschitz polygon meets at most `⌊k⌋ + 1` cells per column.
pub fn check_lemma_a3(f: &Polygon, k: &Q, m: GridScale) -> Result<A3Check> {
    if f.max_abs_slope() > *k {
        return Err(Error::Parameter(format!(
            "slope {} exceeds the bound {}",
            f.max_abs_slope(),
            k
        )));
    }
    let bound = k.floor().to_integer() as u64 + 1;
    let max_column = column_profile(f, m)?.into_iter().max().unwrap_or(0);
    let outcome = if max_column <= bound { Outcome::Pass } else { Outcome::Fail };
    Ok(A3Check { outcome, max_column, bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Suite {
    #[serde(rename = "A1")]
    A1,
    /// A.1 with `g ≥ 0` allowed to vanish.
    #[serde(rename = "A1-tail")]
    A1Tail,
    #[serde(rename = "A2")]
    A2,
    #[serde(rename = "A3")]
    A3,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::A1, Suite::A1Tail, Suite::A2, Suite::A3];

    pub fn name(self) -> &'static str {
        match self {
            Suite::A1 => "A1",
            Suite::A1Tail => "A1-tail",
            Suite::A2 => "A2",
            Suite::A3 => "A3",
        }
    }
}

/// Aggregate of one suite run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: u64,
    pub passes: u64,
    pub skips: u64,
    pub failures: u64,
    /// Trial indices that failed (at most 20).
    pub failing_trials: Vec<u64>,
}

impl SuiteReport {
    pub fn skip_rate(&self) -> f64 {
        self.skips as f64 / self.trials as f64
    }
}

fn run_trial(suite: Suite, config: &TrialConfig, grid: SampleGrid, trial: u64) -> Result<Outcome> {
    let mut rng = config.rng_for(trial);
    match suite {
        Suite::A1 | Suite::A1Tail => {
            let m = config.sum_scales[rng.gen_range(0..config.sum_scales.len())];
            let f = random_piecewise_linear(&mut rng, config, None);
            // g on the lattice inside (0, δ], or [0, δ] for the tail form
            let top = lattice() / m as i128;
            let lo = if suite == Suite::A1 { 1 } else { 0 };
            let n = rng.gen_range(config.breakpoints.0..=config.breakpoints.1);
            let g = random_polygon(&mut rng, n, lo, top.max(lo), None);
            Ok(check_lemma_a1(&f, &g, GridScale::new(m)?, grid, suite == Suite::A1)?.outcome)
        }
        Suite::A2 => {
            let m = config.sum_scales[rng.gen_range(0..config.sum_scales.len())];
            let f = random_piecewise_linear(&mut rng, config, None);
            let g = random_piecewise_linear(&mut rng, config, None);
            Ok(check_lemma_a2(&f, &g, GridScale::new(m)?, grid)?.outcome)
        }
        Suite::A3 => {
            let m = rng.gen_range(config.profile_scales.0..=config.profile_scales.1);
            let k = rng.gen_range(0..=config.max_slope);
            let f = random_piecewise_linear(&mut rng, config, Some(k));
            match check_lemma_a3(&f, &Q::from_integer(k as i128), GridScale::new(m)?) {
                Ok(c) => Ok(c.outcome),
                Err(Error::Parameter(_)) => Ok(Outcome::Skip),
                Err(e) => Err(e),
            }
        }
    }
}

/// Runs `config.trials` independent trials of one suite.
pub fn run_suite(suite: Suite, config: &TrialConfig) -> Result<SuiteReport> {
    config.validate()?;
    let grid = config.sample_grid();
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(suite, config, grid, t))
        .collect::<Result<Vec<_>>>()?;
    let mut report = SuiteReport {
        suite,
        seed: config.seed,
        trials: config.trials,
        passes: 0,
        skips: 0,
        failures: 0,
        failing_trials: Vec::new(),
    };
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Outcome::Pass => report.passes += 1,
            Outcome::Skip => report.skips += 1,
            Outcome::Fail => {
                report.failures += 1;
                if report.failing_trials.len() < 20 {
                    report.failing_trials.push(t as u64);
                }
            }
        }
    }
    Ok(report)
}
