//! Exact grid indexing and occupancy counting at integer scales.
//!
//! A scale `m` splits `[0, 1]` into the disjoint boxes
//! `B_k = [k/m, (k+1)/m)` for `k < m - 1` and `B_{m-1} = [(m-1)/m, 1]`.
//! Graph rows use the same half-open rule without the closed top box.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyline::{BigRational, PiecewiseLinear, Scalar};

/// Count used for a box holding infinitely many points under an unbounded cap.
pub const INFINITE: u64 = u64::MAX;

/// Integer scale `m ≥ 1`, box width `δ = 1/m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridScale(u64);

impl GridScale {
    pub fn new(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("grid scale must be at least 1".into()));
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn width(self) -> f64 {
        1.0 / self.0 as f64
    }
}

impl fmt::Display for GridScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-box cap applied to occupancy counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cap {
    Bounded(u64),
    Unbounded,
}

impl Cap {
    pub fn apply(self, count: u64) -> u64 {
        match self {
            Cap::Bounded(c) => count.min(c),
            Cap::Unbounded => count,
        }
    }

    pub fn apply_u128(self, count: u128) -> u64 {
        let c = u64::try_from(count).unwrap_or(INFINITE);
        self.apply(c)
    }
}

/// An exact point of `[0, 1]` stored as `num/den`, not necessarily reduced.
#[derive(Clone, Debug)]
pub struct RationalPoint(Repr);

#[derive(Clone, Debug)]
enum Repr {
    Small { num: u64, den: u64 },
    Big(Box<(BigUint, BigUint)>),
}

impl RationalPoint {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        if num > den {
            return Err(Error::Domain(format!("{num}/{den} is outside [0,1]")));
        }
        Ok(Self(Repr::Small { num, den }))
    }

    pub fn from_big(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        if num > den {
            return Err(Error::Domain(format!("{num}/{den} is outside [0,1]")));
        }
        match (num.to_u64(), den.to_u64()) {
            (Some(n), Some(d)) => Ok(Self(Repr::Small { num: n, den: d })),
            _ => Ok(Self(Repr::Big(Box::new((num, den))))),
        }
    }

    /// Exact conversion of a finite `f64` in `[0, 1]`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("{x} is outside [0,1]")));
        }
        let r = BigRational::from_float(x).ok_or_else(|| Error::Domain(format!("{x}")))?;
        Self::from_big_rational(&r)
    }

    pub fn from_big_rational(r: &BigRational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::Domain(format!("{r} is outside [0,1]")));
        }
        let num = r.numer().to_biguint().expect("non-negative");
        let den = r.denom().to_biguint().expect("positive");
        Self::from_big(num, den)
    }

    pub fn zero() -> Self {
        Self(Repr::Small { num: 0, den: 1 })
    }

    pub fn one() -> Self {
        Self(Repr::Small { num: 1, den: 1 })
    }

    pub fn numer(&self) -> BigUint {
        match &self.0 {
            Repr::Small { num, .. } => BigUint::from(*num),
            Repr::Big(b) => b.0.clone(),
        }
    }

    pub fn denom(&self) -> BigUint {
        match &self.0 {
            Repr::Small { den, .. } => BigUint::from(*den),
            Repr::Big(b) => b.1.clone(),
        }
    }

    pub fn to_big_rational(&self) -> BigRational {
        Ratio::new(BigInt::from(self.numer()), BigInt::from(self.denom()))
    }

    /// Conversion into a rational over a smaller integer type, when it fits.
    pub fn to_ratio<T: Scalar>(&self) -> Option<Ratio<T>> {
        match &self.0 {
            Repr::Small { num, den } => Some(Ratio::new(T::from_u64(*num)?, T::from_u64(*den)?)),
            Repr::Big(_) => {
                let r = self.to_big_rational();
                let n = T::from_i128(r.numer().to_i128()?)?;
                let d = T::from_i128(r.denom().to_i128()?)?;
                Some(Ratio::new(n, d))
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small { num, den } => *num as f64 / *den as f64,
            Repr::Big(_) => self.to_big_rational().to_f64().unwrap_or(f64::NAN),
        }
    }

    /// `⌊x·m⌋` without clamping.
    pub fn scaled_floor(&self, m: u64) -> u64 {
        match &self.0 {
            Repr::Small { num, den } => ((*num as u128 * m as u128) / *den as u128) as u64,
            Repr::Big(b) => ((&b.0 * m) / &b.1).to_u64().expect("x <= 1 so x*m fits"),
        }
    }

    /// Index of the box of scale `m` holding this point.
    pub fn box_index(&self, m: GridScale) -> u64 {
        self.scaled_floor(m.0).min(m.0 - 1)
    }

    /// Reduced `num/den` form, for export.
    pub fn to_fraction_string(&self) -> String {
        let r = self.to_big_rational();
        format!("{}/{}", r.numer(), r.denom())
    }

    /// Parses `num/den` or a decimal literal (optionally with an exponent)
    /// exactly.
    pub fn parse(s: &str) -> Result<Self> {
        let r = parse_exact_rational(s)?;
        Self::from_big_rational(&r).map_err(|_| Error::Domain(format!("{s} is outside [0,1]")))
    }
}

impl PartialEq for RationalPoint {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for RationalPoint {}

impl PartialOrd for RationalPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RationalPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
                (*a as u128 * *d as u128).cmp(&(*c as u128 * *b as u128))
            }
            _ => (self.numer() * other.denom()).cmp(&(other.numer() * self.denom())),
        }
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_fraction_string())
    }
}

impl FromStr for RationalPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Parses `num/den`, an integer, or a decimal literal such as `0.125` or
/// `1.5e-3` into an exact rational.
pub fn parse_exact_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let err = || Error::Parse(format!("not a number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Ratio::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let r = if scale >= 0 {
        Ratio::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Ratio::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

/// Box index of a point given as `f64`.
///
/// The floating guess `⌊x·m⌋` is checked against the exact binary value of
/// `x`, so boundary points always land in their own (upper) box.
pub fn box_index_real(x: f64, m: GridScale) -> Result<u64> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{x} is outside [0,1]")));
    }
    let guess = ((x * m.0 as f64).floor() as u64).min(m.0 - 1);
    let exact = RationalPoint::from_f64(x)?;
    let lo = RationalPoint::new(guess, m.0)?;
    if exact < lo {
        return Ok(guess - 1);
    }
    if guess + 1 < m.0 && exact >= RationalPoint::new(guess + 1, m.0)? {
        return Ok(guess + 1);
    }
    Ok(guess)
}

/// Values that can be placed on the grid: `⌊v·m⌋` for `v ≥ 0`.
pub trait GridCoordinate {
    fn scaled_floor(&self, m: u64) -> Result<u64>;
    /// Whether the value is at most one (needed for column indices).
    fn at_most_one(&self) -> bool;
}

impl GridCoordinate for RationalPoint {
    fn scaled_floor(&self, m: u64) -> Result<u64> {
        Ok(RationalPoint::scaled_floor(self, m))
    }

    fn at_most_one(&self) -> bool {
        true
    }
}

impl<T: Scalar> GridCoordinate for Ratio<T> {
    fn scaled_floor(&self, m: u64) -> Result<u64> {
        if self.is_negative() {
            return Err(Error::Domain(format!("negative coordinate {self:?}")));
        }
        let mm = T::from_u64(m).ok_or_else(|| Error::Domain("scale too large".into()))?;
        (self.numer().clone() * mm)
            .div_floor(self.denom())
            .to_u64()
            .ok_or_else(|| Error::Domain(format!("coordinate {self:?} too large for scale {m}")))
    }

    fn at_most_one(&self) -> bool {
        *self <= Ratio::one()
    }
}

impl GridCoordinate for f64 {
    fn scaled_floor(&self, m: u64) -> Result<u64> {
        if !self.is_finite() || *self < 0.0 {
            return Err(Error::Domain(format!("invalid coordinate {self}")));
        }
        let r = BigRational::from_float(*self).expect("finite");
        r.scaled_floor(m)
    }

    fn at_most_one(&self) -> bool {
        *self <= 1.0
    }
}

/// Column index of an abscissa: `min(⌊x·m⌋, m-1)`.
pub fn column_index<X: GridCoordinate>(x: &X, m: GridScale) -> Result<u64> {
    if !x.at_most_one() {
        return Err(Error::Domain("abscissa outside [0,1]".into()));
    }
    Ok(x.scaled_floor(m.0)?.min(m.0 - 1))
}

/// Row `⌊y·m⌋` of a non-negative ordinate. Rows are half-open with no
/// closed top row, since graphs may rise above 1.
pub fn row_index<Y: GridCoordinate>(y: &Y, m: GridScale) -> Result<u64> {
    y.scaled_floor(m.0)
}

/// Sparse per-box counts at one scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyProfile {
    scale: GridScale,
    cap: Cap,
    entries: Vec<(u64, u64)>,
}

impl OccupancyProfile {
    /// Builds a profile from `(box, count)` entries. Entries must be sorted by
    /// strictly increasing box index with nonzero counts; the cap is applied.
    pub fn from_entries(scale: GridScale, cap: Cap, entries: Vec<(u64, u64)>) -> Result<Self> {
        for (i, &(k, c)) in entries.iter().enumerate() {
            if k >= scale.0 {
                return Err(Error::Domain(format!("box index {k} outside scale {scale}")));
            }
            if c == 0 {
                return Err(Error::Domain("occupancy entries must be nonzero".into()));
            }
            if i > 0 && entries[i - 1].0 >= k {
                return Err(Error::Domain("box indices must be strictly increasing".into()));
            }
        }
        let entries = entries.into_iter().map(|(k, c)| (k, cap.apply(c))).collect();
        Ok(Self { scale, cap, entries })
    }

    /// Counts a sorted slice of points.
    pub fn from_sorted_points(points: &[RationalPoint], scale: GridScale, cap: Cap) -> Self {
        let mut entries: Vec<(u64, u64)> = Vec::new();
        for p in points {
            let k = p.box_index(scale);
            match entries.last_mut() {
                Some((last, c)) if *last == k => *c += 1,
                _ => entries.push((k, 1)),
            }
        }
        for e in &mut entries {
            e.1 = cap.apply(e.1);
        }
        Self { scale, cap, entries }
    }

    pub fn scale(&self) -> GridScale {
        self.scale
    }

    pub fn cap(&self) -> Cap {
        self.cap
    }

    pub fn entries(&self) -> &[(u64, u64)] {
        &self.entries
    }

    /// Number of occupied boxes.
    pub fn occupied(&self) -> u64 {
        self.entries.len() as u64
    }

    /// Sum of the (capped) counts, saturating at [`INFINITE`].
    pub fn total(&self) -> u64 {
        self.entries.iter().fold(0u64, |acc, &(_, c)| acc.saturating_add(c))
    }

    /// Re-caps an existing profile with a tighter (or equal) cap.
    pub fn recap(&self, cap: Cap) -> Self {
        let entries = self.entries.iter().map(|&(k, c)| (k, cap.apply(c))).collect();
        Self { scale: self.scale, cap, entries }
    }
}

/// Set of occupied 2D cells `(column, row)` at one scale.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet2D {
    scale: GridScale,
    cells: BTreeSet<(u64, u64)>,
}

impl CellSet2D {
    pub fn from_samples<X: GridCoordinate, Y: GridCoordinate>(
        samples: &[(X, Y)],
        m: GridScale,
    ) -> Result<Self> {
        let mut cells = BTreeSet::new();
        for (x, y) in samples {
            let i = column_index(x, m)?;
            let j = row_index(y, m)?;
            cells.insert((i, j));
        }
        Ok(Self { scale: m, cells })
    }

    pub fn scale(&self) -> GridScale {
        self.scale
    }

    pub fn cells(&self) -> &BTreeSet<(u64, u64)> {
        &self.cells
    }

    pub fn len(&self) -> u64 {
        self.cells.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Number of distinct cells hit by the samples.
pub fn graph_box_count<X: GridCoordinate, Y: GridCoordinate>(
    samples: &[(X, Y)],
    m: GridScale,
) -> Result<u64> {
    Ok(CellSet2D::from_samples(samples, m)?.len())
}

/// Exact number of rows met by the graph of `f` over each column.
///
/// Every column is taken half-open, `[i/m, (i+1)/m)`, including the last:
/// the single point `x = 1` is ignored. The image of a column is an interval
/// whose endpoints are found among the values at the column's left edge,
/// interior breakpoints and the right edge. A supremum reached only at the
/// excluded right edge does not add its row.
pub fn column_profile<T: Scalar>(f: &PiecewiseLinear<T>, m: GridScale) -> Result<Vec<u64>> {
    let mm = m.0;
    let m_t = T::from_u64(mm).ok_or_else(|| Error::Domain("scale too large".into()))?;
    let bps = f.breakpoints();
    let mut profile = Vec::with_capacity(mm as usize);
    let mut next_bp = 0usize;
    for i in 0..mm {
        let a = Ratio::new(T::from_u64(i).expect("fits"), m_t.clone());
        let b = Ratio::new(T::from_u64(i + 1).expect("fits"), m_t.clone());
        // (value, attained)
        let mut candidates: Vec<(Ratio<T>, bool)> = vec![(f.eval(&a), true)];
        while next_bp < bps.len() && bps[next_bp].0 <= a {
            next_bp += 1;
        }
        let mut k = next_bp;
        while k < bps.len() && bps[k].0 < b {
            candidates.push((bps[k].1.clone(), true));
            k += 1;
        }
        candidates.push((f.eval(&b), false));

        let lo = candidates.iter().map(|(v, _)| v).min().expect("non-empty").clone();
        let hi = candidates.iter().map(|(v, _)| v).max().expect("non-empty").clone();
        let hi_attained = candidates.iter().any(|(v, att)| *att && *v == hi);

        let bottom = row_index(&lo, m)?;
        let scaled_hi = &hi * Ratio::from_integer(m_t.clone());
        let top = if !hi_attained && scaled_hi.is_integer() {
            scaled_hi.to_integer().to_u64().expect("non-negative") - 1
        } else {
            row_index(&hi, m)?
        };
        profile.push(top.max(bottom) - bottom + 1);
    }
    Ok(profile)
}
