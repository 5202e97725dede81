//! The `g_m` occupancy sum, log-ratio series and dimension estimators, plus
//! the finite-scale inequality checks that hold at every scale.

use std::fmt;
use std::str::FromStr;

use num_integer::Roots;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Cap, GridScale};
use crate::sets::CountedSet;

/// `g_m(X) = Σ_k min{m, #(X ∩ B_k)}`.
pub fn gm(set: &CountedSet, m: GridScale) -> Result<u64> {
    gm_capped(set, m, Cap::Bounded(m.get()))
}

/// `Σ_k min{cap, #(X ∩ B_k)}`, saturating at `u64::MAX`.
pub fn gm_capped(set: &CountedSet, m: GridScale, cap: Cap) -> Result<u64> {
    Ok(set.occupancy(m, cap)?.total())
}

/// What each scale of a ratio series counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Counter {
    /// Occupied boxes `N_{1/m}`.
    Box,
    /// The capped sum `g_m`.
    Gm,
}

impl Counter {
    pub fn evaluate(self, set: &CountedSet, m: GridScale) -> Result<u64> {
        match self {
            Counter::Box => set.box_count_1d(m),
            Counter::Gm => gm(set, m),
        }
    }
}

impl FromStr for Counter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(Counter::Box),
            "gm" => Ok(Counter::Gm),
            _ => Err(Error::Parse(format!("unknown counter {s:?} (expected box or gm)"))),
        }
    }
}

impl fmt::Display for Counter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Counter::Box => "box",
            Counter::Gm => "gm",
        })
    }
}

/// A strictly increasing list of scales, all `≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScaleSchedule(Vec<u64>);

impl ScaleSchedule {
    /// `m_min, m_min·base, m_min·base², …` up to `m_max`.
    pub fn geometric(base: u64, m_min: u64, m_max: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::Schedule(format!("geometric base {base} must be at least 2")));
        }
        if m_min < 2 || m_min > m_max {
            return Err(Error::Schedule(format!("need 2 <= m_min <= m_max, got {m_min}..{m_max}")));
        }
        let mut scales = Vec::new();
        let mut m = m_min;
        while m <= m_max {
            scales.push(m);
            match m.checked_mul(base) {
                Some(next) => m = next,
                None => break,
            }
        }
        Ok(Self(scales))
    }

    /// Sorts and deduplicates an explicit list.
    pub fn explicit(mut scales: Vec<u64>) -> Result<Self> {
        scales.sort_unstable();
        scales.dedup();
        if scales.is_empty() {
            return Err(Error::Schedule("empty schedule".into()));
        }
        if scales[0] < 2 {
            return Err(Error::Schedule("scales must be at least 2".into()));
        }
        Ok(Self(scales))
    }

    pub fn scales(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for ScaleSchedule {
    type Err = Error;

    /// `geo:<base>:<min>:<max>` or `list:<m1>,<m2>,…`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad schedule {s:?}; expected geo:base:min:max or list:m1,m2,..."));
        if let Some(rest) = s.strip_prefix("geo:") {
            let parts: Vec<u64> = rest
                .split(':')
                .map(|p| p.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            match parts.as_slice() {
                [base, lo, hi] => ScaleSchedule::geometric(*base, *lo, *hi),
                _ => Err(bad()),
            }
        } else if let Some(rest) = s.strip_prefix("list:") {
            let scales = rest
                .split(',')
                .map(|p| p.trim().parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            ScaleSchedule::explicit(scales)
        } else {
            Err(bad())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioEntry {
    pub m: u64,
    pub value: u64,
    pub ratio: f64,
}

/// Values and `log v_m / log m` along a schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioSeries {
    pub counter: Counter,
    pub entries: Vec<RatioEntry>,
}

impl RatioSeries {
    /// Builds a series from precomputed `(m, value)` pairs.
    pub fn from_values(counter: Counter, values: &[(u64, u64)]) -> Result<Self> {
        let mut entries = Vec::with_capacity(values.len());
        for (i, &(m, value)) in values.iter().enumerate() {
            if m < 2 || (i > 0 && values[i - 1].0 >= m) {
                return Err(Error::Schedule("series scales must be >= 2 and strictly increasing".into()));
            }
            if value == 0 {
                return Err(Error::EmptySet);
            }
            let ratio = (value as f64).ln() / (m as f64).ln();
            entries.push(RatioEntry { m, value, ratio });
        }
        Ok(Self { counter, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Evaluates the counter at every scale. Scales are evaluated in parallel
/// and merged in schedule order.
pub fn ratio_series(set: &CountedSet, schedule: &ScaleSchedule, counter: Counter) -> Result<RatioSeries> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let values = schedule
        .scales()
        .par_iter()
        .map(|&m| Ok((m, counter.evaluate(set, GridScale::new(m)?)?)))
        .collect::<Result<Vec<_>>>()?;
    RatioSeries::from_values(counter, &values)
}

/// Which scales enter the least-squares slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SlopeWindow {
    /// Every scale of the series.
    All,
    /// Scales `m ≥ m_max / 10` (at least the last two).
    TopDecade,
    /// The last `n` scales.
    Last(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateOptions {
    /// Share of the series (from the fine end) over which the maximum ratio
    /// stands in for the limsup.
    pub tail_fraction: f64,
    pub slope_window: SlopeWindow,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { tail_fraction: 0.5, slope_window: SlopeWindow::TopDecade }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub counter: Counter,
    pub limsup_proxy: f64,
    pub slope: f64,
    /// Scales `(first, last)` of the limsup tail.
    pub tail: (u64, u64),
    /// Scales `(first, last)` of the slope window.
    pub slope_range: (u64, u64),
    /// Every value is at most one: the set looks like a single point, and
    /// dimension bounds that assume an infinite set do not apply.
    pub degenerate: bool,
    pub target: Option<f64>,
}

/// Least-squares slope of `ln v` against `ln m`.
pub fn log_log_slope(points: &[(u64, u64)]) -> f64 {
    if points.len() == 1 {
        let (m, v) = points[0];
        return (v as f64).ln() / (m as f64).ln();
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| (p.1 as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn estimate_dimension(series: &RatioSeries, opts: EstimateOptions) -> Result<DimensionEstimate> {
    let len = series.len();
    if len == 0 {
        return Err(Error::Schedule("cannot estimate from an empty series".into()));
    }
    if !(opts.tail_fraction > 0.0 && opts.tail_fraction <= 1.0) {
        return Err(Error::Parameter(format!("tail fraction {} must lie in (0, 1]", opts.tail_fraction)));
    }
    let e = &series.entries;
    let tail_len = ((opts.tail_fraction * len as f64).ceil() as usize).clamp(1, len);
    let tail = &e[len - tail_len..];
    let limsup_proxy = tail.iter().map(|t| t.ratio).fold(f64::NEG_INFINITY, f64::max);

    let window_start = match opts.slope_window {
        SlopeWindow::All => 0,
        SlopeWindow::Last(n) => {
            if n == 0 || n > len {
                return Err(Error::Schedule(format!("slope window of {n} scales exceeds the series length {len}")));
            }
            len - n
        }
        SlopeWindow::TopDecade => {
            let top = e[len - 1].m as f64;
            let first = e.iter().position(|t| t.m as f64 >= top / 10.0).unwrap_or(len - 1);
            first.min(len.saturating_sub(2))
        }
    };
    let window: Vec<(u64, u64)> = e[window_start..].iter().map(|t| (t.m, t.value)).collect();
    Ok(DimensionEstimate {
        counter: series.counter,
        limsup_proxy,
        slope: log_log_slope(&window),
        tail: (tail[0].m, tail[tail_len - 1].m),
        slope_range: (window[0].0, window[window.len() - 1].0),
        degenerate: e.iter().all(|t| t.value <= 1),
        target: None,
    })
}

/// Finite-scale consequences of `1 ≤ gdim ≤ dim + 1` and of the lower bound
/// `gdim ≥ 2·dim`, evaluated at one scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsReport {
    pub m: u64,
    pub n: u64,
    pub gm: u64,
    pub sqrt_m: u64,
    pub g_sqrt: u64,
    /// `N ≤ g_m ≤ min(m·N, m²)`.
    pub sandwich: bool,
    /// `g_{⌊√m⌋} ≥ N/2`.
    pub root_scale: bool,
}

impl BoundsReport {
    pub fn pass(&self) -> bool {
        self.sandwich && self.root_scale
    }
}

pub fn finite_bounds_check(set: &CountedSet, m: GridScale) -> Result<BoundsReport> {
    let mv = m.get();
    if mv < 4 {
        return Err(Error::Parameter(format!("bounds check needs m >= 4, got {mv}")));
    }
    let sqrt_m = mv.sqrt();
    let n = set.box_count_1d(m)?;
    let g = gm(set, m)?;
    let g_sqrt = gm(set, GridScale::new(sqrt_m)?)?;
    let upper = (mv as u128 * n as u128).min(mv as u128 * mv as u128);
    Ok(BoundsReport {
        m: mv,
        n,
        gm: g,
        sqrt_m,
        g_sqrt,
        sandwich: n <= g && (g as u128) <= upper,
        root_scale: 2 * g_sqrt as u128 >= n as u128,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{Exponent, ExplicitSet};
    use proptest::prelude::*;

    fn m(v: u64) -> GridScale {
        GridScale::new(v).unwrap()
    }

    fn harmonic() -> CountedSet {
        CountedSet::power(Exponent::integer(1).unwrap())
    }

    fn explicit(xs: &[f64]) -> CountedSet {
        CountedSet::explicit(ExplicitSet::from_f64(xs).unwrap())
    }

    #[test]
    fn gm_examples() {
        assert_eq!(gm(&explicit(&[]), m(7)).unwrap(), 0);
        assert_eq!(gm(&explicit(&[0.1]), m(5)).unwrap(), 1);
        assert_eq!(gm(&harmonic(), m(4)).unwrap(), 8);
        assert_eq!(gm(&harmonic(), m(3)).unwrap(), 6);
    }

    #[test]
    fn capped_gm_examples() {
        let h = harmonic();
        assert_eq!(gm_capped(&h, m(4), Cap::Bounded(1)).unwrap(), 4);
        assert_eq!(gm_capped(&h, m(4), Cap::Bounded(2)).unwrap(), 6);
        let finite = explicit(&[0.0, 0.01, 0.02, 0.5, 0.9]);
        assert_eq!(gm_capped(&finite, m(3), Cap::Unbounded).unwrap(), 5);
    }

    #[test]
    fn schedules() {
        assert_eq!(ScaleSchedule::geometric(2, 4, 32).unwrap().scales(), &[4, 8, 16, 32]);
        assert_eq!(ScaleSchedule::explicit(vec![10, 10, 3]).unwrap().scales(), &[3, 10]);
        assert_eq!(ScaleSchedule::geometric(3, 3, 729).unwrap().scales(), &[3, 9, 27, 81, 243, 729]);
        assert!(ScaleSchedule::explicit(vec![]).is_err());
        assert!(ScaleSchedule::geometric(2, 1, 8).is_err());
        assert!(ScaleSchedule::geometric(2, 9, 8).is_err());
        assert_eq!("geo:2:4:8".parse::<ScaleSchedule>().unwrap().scales(), &[4, 8]);
        assert_eq!("list:16,4".parse::<ScaleSchedule>().unwrap().scales(), &[4, 16]);
        assert!("geo:2:4".parse::<ScaleSchedule>().is_err());
    }

    #[test]
    fn ratio_series_examples() {
        let s = ratio_series(&explicit(&[0.0, 1.0]), &ScaleSchedule::explicit(vec![10]).unwrap(), Counter::Box).unwrap();
        assert!((s.entries[0].ratio - 2f64.ln() / 10f64.ln()).abs() < 1e-12);
        let s = ratio_series(&harmonic(), &ScaleSchedule::explicit(vec![4]).unwrap(), Counter::Gm).unwrap();
        assert!((s.entries[0].ratio - 1.5).abs() < 1e-12);
        let e = ratio_series(&explicit(&[]), &ScaleSchedule::explicit(vec![4]).unwrap(), Counter::Gm);
        assert_eq!(e.unwrap_err(), Error::EmptySet);
        assert_eq!(Error::EmptySet.to_string(), "empty set has no ratio");
    }

    #[test]
    fn constant_ratio_series_estimates() {
        let values: Vec<(u64, u64)> = (1..=8).map(|j| (1u64 << (2 * j), 1u64 << j)).collect();
        let s = RatioSeries::from_values(Counter::Box, &values).unwrap();
        let est = estimate_dimension(&s, EstimateOptions::default()).unwrap();
        assert!((est.limsup_proxy - 0.5).abs() < 1e-12);
        assert!((est.slope - 0.5).abs() < 1e-12);
        let all = EstimateOptions { slope_window: SlopeWindow::All, ..Default::default() };
        assert!((estimate_dimension(&s, all).unwrap().slope - 0.5).abs() < 1e-12);
        let too_long = EstimateOptions { slope_window: SlopeWindow::Last(9), ..Default::default() };
        assert!(estimate_dimension(&s, too_long).is_err());
    }

    #[test]
    fn singletons_are_flagged_degenerate() {
        let s = ratio_series(&explicit(&[0.5]), &ScaleSchedule::geometric(2, 2, 64).unwrap(), Counter::Gm).unwrap();
        let est = estimate_dimension(&s, EstimateOptions::default()).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.limsup_proxy, 0.0);
    }

    #[test]
    fn bounds_check_examples() {
        let r = finite_bounds_check(&explicit(&[0.0, 0.5]), m(4)).unwrap();
        assert_eq!((r.n, r.gm), (2, 2));
        assert!(r.pass());
        let r = finite_bounds_check(&harmonic(), m(16)).unwrap();
        assert_eq!((r.n, r.g_sqrt), (8, 8));
        assert!(r.pass());
        let c = CountedSet::cantor(1, 3, 8).unwrap();
        assert!(finite_bounds_check(&c, m(81)).unwrap().pass());
        assert!(finite_bounds_check(&harmonic(), m(3)).is_err());
    }

    #[test]
    fn saturated_sets_have_gm_equal_m_times_n() {
        // 64 points in each of two boxes at m = 8
        let mut xs: Vec<f64> = (0..64).map(|i| i as f64 / 1024.0).collect();
        xs.extend((0..64).map(|i| 0.5 + i as f64 / 1024.0));
        let s = explicit(&xs);
        let sc = m(8);
        assert!(s.occupancy(sc, Cap::Unbounded).unwrap().entries().iter().all(|e| e.1 >= 8));
        assert_eq!(gm(&s, sc).unwrap(), 8 * s.box_count_1d(sc).unwrap());
    }

    proptest! {
        #[test]
        fn refinement_sandwich_and_cap_monotonicity(
            raw in proptest::collection::vec((0u64..=10_000, 1u64..=10_000), 1..200),
            mv in 4u64..=300,
        ) {
            let pts: Vec<_> = raw.into_iter().filter(|(n, d)| n <= d)
                .map(|(n, d)| crate::grid::RationalPoint::new(n, d).unwrap()).collect();
            prop_assume!(!pts.is_empty());
            let s = CountedSet::explicit_from_points(pts);
            let g1 = gm(&s, m(mv)).unwrap();
            let g2 = gm(&s, m(2 * mv)).unwrap();
            prop_assert!(g1 <= g2 && g2 <= 4 * g1);
            let r = finite_bounds_check(&s, m(mv)).unwrap();
            prop_assert!(r.pass());
            let mut prev = 0;
            let mut caps = [1, 2, 3, mv / 2, mv, mv + 1];
            caps.sort_unstable();
            for cap in caps {
                let v = gm_capped(&s, m(mv), Cap::Bounded(cap)).unwrap();
                prop_assert!(v >= prev);
                prev = v;
            }
            prop_assert_eq!(gm_capped(&s, m(mv), Cap::Bounded(mv)).unwrap(), g1);
        }
    }
}
