//! The power sequence `A = {n^{-p} : n ≥ 1} ∪ {0}` counted analytically.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::ExplicitSet;
use crate::error::{Error, Result};
use crate::grid::{parse_exact_rational, Cap, GridScale, OccupancyProfile, RationalPoint, INFINITE};

/// Largest scale at which analytic counts are guaranteed exact.
pub const POWER_SCALE_MAX: u64 = 1 << 40;

/// A positive rational exponent `p = num/den` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Exponent {
    num: u32,
    den: u32,
}

impl Exponent {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Parameter(format!("exponent {num}/{den} must be positive")));
        }
        let g = num.gcd(&den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn integer(p: u32) -> Result<Self> {
        Self::new(p, 1)
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let r = parse_exact_rational(s)?;
        let num = r.numer().to_u32();
        let den = r.denom().to_u32();
        match (num, den) {
            (Some(n), Some(d)) if n > 0 => Exponent::new(n, d),
            _ => Err(Error::Parameter(format!("exponent {s:?} must be a positive rational with 32-bit parts"))),
        }
    }
}

/// Largest `n ≥ 0` with `pred(n)`, for a predicate that holds on `0..=n*`
/// and fails above; starts from `guess` and gallops in either direction.
pub(crate) fn largest_satisfying(guess: u128, pred: impl Fn(u128) -> bool) -> u128 {
    let (mut lo, mut hi);
    if pred(guess) {
        lo = guess;
        let mut step = 1u128;
        loop {
            let probe = lo.saturating_add(step);
            if probe == lo || !pred(probe) {
                hi = probe;
                break;
            }
            lo = probe;
            step = step.saturating_mul(2);
        }
        if hi == lo {
            return lo;
        }
    } else {
        hi = guess;
        let mut step = 1u128;
        loop {
            if hi == 0 {
                return 0;
            }
            let probe = hi.saturating_sub(step);
            if pred(probe) {
                lo = probe;
                break;
            }
            hi = probe;
            step = step.saturating_mul(2);
        }
    }
    // pred(lo) and !pred(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn checked_pow(base: u128, exp: u32) -> Option<u128> {
    base.checked_pow(exp)
}

/// Decides `n^s · k^t ≤ m^t` exactly.
pub(crate) fn power_product_le(n: u128, s: u32, k: u128, t: u32, m: u128) -> bool {
    let fast = (|| {
        let lhs = checked_pow(n, s)?.checked_mul(checked_pow(k, t)?)?;
        let rhs = checked_pow(m, t)?;
        Some(lhs <= rhs)
    })();
    match fast {
        Some(b) => b,
        None => {
            let lhs = BigUint::from(n).pow(s) * BigUint::from(k).pow(t);
            lhs <= BigUint::from(m).pow(t)
        }
    }
}

/// The sequence `n^{-p}` together with its limit point `0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSequence {
    exponent: Exponent,
}

impl PowerSequence {
    pub fn new(exponent: Exponent) -> Self {
        Self { exponent }
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    /// `#{n ≥ 1 : n^{-p} ≥ k/m}` for `1 ≤ k ≤ m`.
    ///
    /// The floating estimate `(m/k)^{1/p}` is corrected by exact integer
    /// comparisons; the loops move at most a couple of steps at `m ≤ 2^40`.
    pub fn count_at_least(&self, k: u64, m: u64) -> u128 {
        debug_assert!(k >= 1 && k <= m);
        let (s, t) = (self.exponent.num, self.exponent.den);
        let le = |n: u128| power_product_le(n, s, k as u128, t, m as u128);
        let est = ((m as f64).ln() - (k as f64).ln()) * t as f64 / s as f64;
        let guess = if est.is_finite() { est.exp().floor() } else { 1.0 };
        let guess = if guess >= 1.0 { guess.min(1e36) as u128 } else { 1 };
        largest_satisfying(guess, le)
    }

    /// Box (scale `m`) holding the point `n^{-p}`.
    pub fn box_of_point(&self, n: u128, m: u64) -> u64 {
        let (s, t) = (self.exponent.num, self.exponent.den);
        // largest k ≤ m with k^t n^s ≤ m^t
        let le = |k: u128| k <= m as u128 && power_product_le(n, s, k, t, m as u128);
        let est = (m as f64) * (-(self.exponent.value()) * (n as f64).ln()).exp();
        let guess = if est.is_finite() && est >= 0.0 { (est.floor() as u64).min(m) } else { 0 };
        (largest_satisfying(guess as u128, le) as u64).min(m - 1)
    }

    /// Capped occupancy, visiting only occupied boxes.
    ///
    /// Walking from the top, the next unassigned point `n` lands in some box
    /// `k`; every point `≥ k/m` not yet assigned belongs to that box, so its
    /// count is `count_at_least(k) - (n - 1)`. Box 0 holds `0` and the whole
    /// tail, so it is infinite.
    pub fn occupancy(&self, m: GridScale, cap: Cap) -> Result<OccupancyProfile> {
        let mv = m.get();
        if mv > POWER_SCALE_MAX {
            return Err(Error::Resolution { requested: mv, max: POWER_SCALE_MAX });
        }
        let mut entries = Vec::new();
        let mut next_n: u128 = 1;
        loop {
            let k = self.box_of_point(next_n, mv);
            if k == 0 {
                entries.push((0, cap.apply(INFINITE)));
                break;
            }
            let through = self.count_at_least(k, mv);
            let count = through + 1 - next_n;
            entries.push((k, cap.apply_u128(count)));
            next_n = through + 1;
        }
        entries.reverse();
        OccupancyProfile::from_entries(m, cap, entries)
    }

    /// Number of leading terms `n ≤ n_max` needed so that an explicit
    /// truncation reproduces the capped occupancy at scale `m`.
    pub fn truncation_for(&self, m: u64, cap: u64) -> u128 {
        self.count_at_least(1, m) + cap.saturating_sub(1) as u128
    }

    /// The finite set `{0} ∪ {n^{-p} : n ≤ n_max}`; integer exponents only, so
    /// every point stays rational.
    pub fn truncate(&self, n_max: u64) -> Result<ExplicitSet> {
        if !self.exponent.is_integer() {
            return Err(Error::Parameter(format!(
                "exponent {} is not an integer; its terms are irrational",
                self.exponent
            )));
        }
        if n_max > 50_000_000 {
            return Err(Error::Budget(format!("truncation at n={n_max} is too large")));
        }
        let s = self.exponent.num;
        let mut pts = Vec::with_capacity(n_max as usize + 1);
        pts.push(RationalPoint::zero());
        for n in (1..=n_max).rev() {
            let p = match n.checked_pow(s) {
                Some(den) => RationalPoint::new(1, den)?,
                None => RationalPoint::from_big(BigUint::one(), BigUint::from(n).pow(s))?,
            };
            pts.push(p);
        }
        Ok(ExplicitSet::from_sorted_unchecked(pts))
    }
}
