//! The iteration `F = Σ f_i` reaching graph ratio `a = limsup log g_m / log m`.
//!
//! Stage `i` receives the height cap
//! `p_i = min{δ_1/2^{i-1}, δ_2/2^{i-2}, …, δ_{i-1}/2, 1/2^i}` and builds
//! `f_i` at a new scale `m_i > max{i, m_{i-1}}` against `F_{i-1}`. The scale
//! is the first schedule entry whose certified ratio
//! `log N_{δ_i}(F_i) / log m_i` reaches `a − 1/i`; if none does, the one with
//! the best ratio is kept and the record says so.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{build_witness_over, fraction};
use crate::analysis::{estimate_dimension, ratio_series, Counter, EstimateOptions, ScaleSchedule};
use crate::error::{Error, Result};
use crate::grid::{graph_box_count, GridScale};
use crate::polyline::{ratio_to_f64, BigRational, PiecewiseLinear};
use crate::sets::CountedSet;

/// Everything recorded about one stage; the boolean fields are the stage
/// conditions, evaluated exactly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub m: u64,
    pub delta: String,
    /// Cap `p_i` the witness was built with.
    pub height_cap: String,
    /// `min{δ_1/2^i, …, δ_i/2, 1/2^i}`.
    pub norm_bound: String,
    pub sup_norm: String,
    pub sup_norm_f64: f64,
    /// `N_{δ_i}(F_i)` over the points of the set.
    pub cells: u64,
    pub ratio: f64,
    /// `a − 1/i`.
    pub target: f64,
    /// `log g_{m_i} / log m_i`.
    pub g_ratio: f64,
    /// `N_{δ_i}(F)` for the final sum `F`.
    pub final_cells: u64,
    /// `F_i = Σ_{j ≤ i} f_j` at every breakpoint.
    pub partial_sum: bool,
    /// `log N_{δ_i}(F_i) / −log δ_i ≥ a − 1/i`.
    pub ratio_reached: bool,
    /// `δ_i < min{1/i, δ_{i-1}}`.
    pub scale_decreasing: bool,
    /// `‖f_i‖ ≤ min{δ_1/2^i, …, δ_i/2, 1/2^i}`.
    pub norm_verbatim: bool,
    /// `‖f_i‖ ≤ p_i`.
    pub norm_cap: bool,
    /// `Σ_{j>i} ‖f_j‖ < δ_i`.
    pub tail_small: bool,
    /// `N_{δ_i}(F) ≥ ½ N_{δ_i}(F_i)`.
    pub final_half: bool,
}

impl StageRecord {
    /// Conditions (1)–(4) as written: partial sum, ratio, decreasing scale and
    /// the verbatim norm bound.
    pub fn conditions_verbatim(&self) -> bool {
        self.partial_sum && self.ratio_reached && self.scale_decreasing && self.norm_verbatim
    }

    /// The same with the norm bound the construction actually uses.
    pub fn conditions_as_constructed(&self) -> bool {
        self.partial_sum && self.ratio_reached && self.scale_decreasing && self.norm_cap && self.tail_small
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Run {
    /// Limsup proxy of the g-ratio series over the schedule.
    pub a: f64,
    pub stages: Vec<StageRecord>,
    #[serde(skip)]
    pub function: PiecewiseLinear,
    #[serde(skip)]
    pub parts: Vec<PiecewiseLinear>,
}

fn big(n: u64) -> BigInt {
    BigInt::from(n)
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

fn cells_over(samples: &[BigRational], f: &PiecewiseLinear, m: GridScale) -> Result<u64> {
    let pts: Vec<(BigRational, BigRational)> = samples.iter().map(|x| (x.clone(), f.eval(x))).collect();
    graph_box_count(&pts, m)
}

fn ratio(cells: u64, m: u64) -> f64 {
    (cells.max(1) as f64).ln() / (m as f64).ln()
}

/// `min{δ_1/2^{i-j+1}…}` over the listed scales, together with `1/2^i`.
fn norm_cap(scales: &[u64], i: usize, shift: usize) -> BigRational {
    let mut best = Ratio::new(BigInt::one(), pow2(i));
    for (j, &mj) in scales.iter().enumerate() {
        // stage j+1 contributes δ_{j+1} / 2^{i-(j+1)+shift}
        let v = Ratio::new(BigInt::one(), big(mj) * pow2(i - (j + 1) + shift));
        if v < best {
            best = v;
        }
    }
    best
}

pub fn iterate_theorem1(set: &CountedSet, stages: usize, schedule: &ScaleSchedule) -> Result<Theorem1Run> {
    if stages == 0 {
        return Err(Error::Parameter("at least one stage is required".into()));
    }
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let series = ratio_series(set, schedule, Counter::Gm)?;
    let a = estimate_dimension(&series, EstimateOptions::default())?.limsup_proxy;
    let m_max = *schedule.scales().last().expect("schedules are non-empty");
    let points = set.explicit_for(m_max, m_max)?;
    let samples: Vec<BigRational> = points.points().iter().map(|p| p.to_big_rational()).collect();

    let mut total = PiecewiseLinear::zero();
    let mut scales: Vec<u64> = Vec::new();
    let mut parts: Vec<PiecewiseLinear> = Vec::new();
    let mut partials: Vec<PiecewiseLinear> = Vec::new();
    let mut pending = Vec::new();
    for i in 1..=stages {
        let cap = norm_cap(&scales, i, 0);
        let floor = scales.last().copied().unwrap_or(0).max(i as u64);
        let target = a - 1.0 / i as f64;
        let mut chosen: Option<(u64, PiecewiseLinear, PiecewiseLinear, u64)> = None;
        let mut best: Option<(u64, PiecewiseLinear, PiecewiseLinear, u64)> = None;
        for &mv in schedule.scales().iter().filter(|&&mv| mv > floor) {
            let m = GridScale::new(mv)?;
            let w = match build_witness_over(&points, &total, m, &cap) {
                Ok(w) => w,
                Err(Error::Capacity { .. }) => continue,
                Err(e) => return Err(e),
            };
            let next = total.add(&w.function);
            let cells = cells_over(&samples, &next, m)?;
            let r = ratio(cells, mv);
            if r >= target {
                chosen = Some((mv, w.function, next, cells));
                break;
            }
            if best.as_ref().is_none_or(|b| r > ratio(b.3, b.0)) {
                best = Some((mv, w.function, next, cells));
            }
        }
        let (mv, f, next, cells) = chosen
            .or(best)
            .ok_or_else(|| Error::Schedule(format!("schedule exhausted before stage {i}")))?;
        let g_ratio = series
            .entries
            .iter()
            .find(|e| e.m == mv)
            .map(|e| e.ratio)
            .unwrap_or(f64::NAN);
        let prev_m = scales.last().copied();
        scales.push(mv);
        let sup = f.sup_norm();
        pending.push((i, mv, cap, sup, cells, target, g_ratio, prev_m));
        parts.push(f);
        partials.push(next.clone());
        total = next;
    }

    let mut records = Vec::with_capacity(stages);
    for (idx, (i, mv, cap, sup, cells, target, g_ratio, prev_m)) in pending.into_iter().enumerate() {
        let m = GridScale::new(mv)?;
        let final_cells = cells_over(&samples, &total, m)?;
        let verbatim = norm_cap(&scales[..i], i, 1);
        let tail: BigRational = parts[idx + 1..].iter().map(|f| f.sup_norm()).fold(BigRational::zero(), |s, v| s + v);
        let delta = Ratio::new(BigInt::one(), big(mv));
        let partial_sum = partials[idx].breakpoints().iter().all(|(x, y)| {
            let sum = parts[..=idx].iter().fold(BigRational::zero(), |s, f| s + f.eval(x));
            sum == *y
        });
        records.push(StageRecord {
            stage: i,
            m: mv,
            delta: fraction(&delta),
            height_cap: fraction(&cap),
            norm_bound: fraction(&verbatim),
            sup_norm: fraction(&sup),
            sup_norm_f64: ratio_to_f64(&sup),
            cells,
            ratio: ratio(cells, mv),
            target,
            g_ratio,
            final_cells,
            partial_sum,
            ratio_reached: ratio(cells, mv) >= target,
            scale_decreasing: mv > i as u64 && prev_m.is_none_or(|p| mv > p),
            norm_verbatim: sup <= verbatim,
            norm_cap: sup <= cap,
            tail_small: tail < delta,
            final_half: 2 * final_cells >= cells,
        });
    }
    Ok(Theorem1Run { a, stages: records, function: total, parts })
}
