//! Ground truth for the counting code: direct enumeration along a separate
//! code path, and the asymptotic closed forms for the power sequence.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Cap, GridScale, OccupancyProfile, INFINITE};
use crate::sets::{Exponent, ExplicitSet};

/// Largest scale the oracle enumerates.
pub const ORACLE_SCALE_MAX: u64 = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub enum Generator<'a> {
    Power(Exponent),
    Points(&'a ExplicitSet),
}

/// Exact capped occupancy by enumeration.
///
/// Explicit points are indexed one by one as `⌊x·m⌋` over big rationals.
/// For `{n^{-p}}` with `p = s/t` the number of terms at or above `k/m` is
/// `⌊(⌊m^t / k^t⌋)^{1/s}⌋`, an integer root, and box counts are differences
/// of consecutive values; box 0 holds the infinite tail.
pub fn brute_force_occupancy(generator: &Generator<'_>, m: GridScale, cap: Cap) -> Result<OccupancyProfile> {
    let mv = m.get();
    if mv > ORACLE_SCALE_MAX {
        return Err(Error::Budget(format!("oracle scale {mv} exceeds {ORACLE_SCALE_MAX}")));
    }
    let counts = match generator {
        Generator::Points(set) => explicit_counts(set, mv),
        Generator::Power(p) => power_counts(*p, mv),
    };
    let entries = counts
        .into_iter()
        .filter(|&(_, c)| c > 0)
        .map(|(k, c)| (k, cap.apply_u128(c)))
        .collect();
    OccupancyProfile::from_entries(m, cap, entries)
}

fn explicit_counts(set: &ExplicitSet, m: u64) -> Vec<(u64, u128)> {
    let mut counts = BTreeMap::new();
    let mb = BigInt::from(m);
    for p in set.points() {
        let r = p.to_big_rational();
        let k = (r.numer() * &mb).div_floor(r.denom()).to_u64().expect("point in [0,1]").min(m - 1);
        *counts.entry(k).or_insert(0u128) += 1;
    }
    counts.into_iter().collect()
}

/// `#{n ≥ 1 : n^{-s/t} ≥ k/m}`.
fn terms_at_least(s: u32, t: u32, k: u64, m: u64) -> u128 {
    let small = (m as u128)
        .checked_pow(t)
        .zip((k as u128).checked_pow(t))
        .map(|(mt, kt)| (mt / kt).nth_root(s));
    match small {
        Some(c) => c,
        None => {
            let q = BigUint::from(m).pow(t) / BigUint::from(k).pow(t);
            q.nth_root(s).to_u128().expect("count fits u128")
        }
    }
}

fn power_counts(p: Exponent, m: u64) -> Vec<(u64, u128)> {
    let (s, t) = (p.num(), p.den());
    let mut out = vec![(0, INFINITE as u128)];
    if m == 1 {
        return out;
    }
    // box m-1 is closed and also holds n = 1
    let mut above = 0u128;
    for k in (1..m).rev() {
        let at_least = terms_at_least(s, t, k, m);
        out.push((k, at_least - above));
        above = at_least;
    }
    out[1..].reverse();
    out
}

/// `⌊y⌋` for a floating value that should be an integer root, nudged so
/// that exact integers computed with rounding error are not lost.
fn floor_nudged(y: f64) -> u64 {
    (y + 1e-9).floor().max(1.0) as u64
}

/// Occupied-box count predicted by the smooth approximation: the `n_0`
/// largest terms each sit alone in a box and the rest fill boxes
/// `0..⌊m·n_0^{-p}⌋`, with `n_0 = ⌊(m p)^{1/(p+1)}⌋`.
pub fn power_n_closed_form(p: Exponent, m: u64) -> u64 {
    let pv = p.value();
    let n0 = floor_nudged((m as f64 * pv).powf(1.0 / (pv + 1.0)));
    n0 + (m as f64 * (n0 as f64).powf(-pv) + 1e-9).floor() as u64
}

/// `g_m` predicted by the same approximation with `n_0' = ⌊(m² p)^{1/(p+1)}⌋`
/// and every box below `⌊m·n_0'^{-p}⌋` counted `m` times.
pub fn power_g_closed_form(p: Exponent, m: u64) -> u64 {
    let pv = p.value();
    let n0 = floor_nudged(((m as f64).powi(2) * pv).powf(1.0 / (pv + 1.0)));
    n0 + m * (m as f64 * (n0 as f64).powf(-pv) + 1e-9).floor() as u64
}

/// Largest deviations of the closed forms from enumeration over a range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlackCalibration {
    pub exponent: String,
    pub m_max: u64,
    /// `max |N_closed − N|`
    pub n_slack: u64,
    pub n_worst_m: u64,
    /// `max |g_closed − g_m| / m`
    pub g_slack_per_m: f64,
    pub g_worst_m: u64,
}

/// Sweeps `m = 2..=m_max` comparing closed forms with enumeration.
pub fn calibrate_closed_forms(p: Exponent, m_max: u64) -> Result<SlackCalibration> {
    let mut cal = SlackCalibration {
        exponent: p.to_string(),
        m_max,
        n_slack: 0,
        n_worst_m: 2,
        g_slack_per_m: 0.0,
        g_worst_m: 2,
    };
    for mv in 2..=m_max {
        let m = GridScale::new(mv)?;
        let g = brute_force_occupancy(&Generator::Power(p), m, Cap::Bounded(mv))?;
        let n = g.occupied();
        let dn = power_n_closed_form(p, mv).abs_diff(n);
        if dn > cal.n_slack {
            cal.n_slack = dn;
            cal.n_worst_m = mv;
        }
        let dg = power_g_closed_form(p, mv).abs_diff(g.total()) as f64 / mv as f64;
        if dg > cal.g_slack_per_m {
            cal.g_slack_per_m = dg;
            cal.g_worst_m = mv;
        }
    }
    Ok(cal)
}
