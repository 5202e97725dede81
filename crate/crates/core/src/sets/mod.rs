//! Counted subsets of `[0, 1]`: explicit point lists, the power sequence,
//! Cantor endpoint sets, and the prescribed-dimension construction.

mod cantor;
mod paper;
mod power;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::ToPrimitive;

pub use cantor::{cantor_endpoints, CANTOR_MAX_DEPTH};
pub use paper::{
    floor_rational_power, BlockReport, PaperSet, PaperSetInfo, PaperSetParams, SpecialScale,
    PAPER_SET_POINT_BUDGET,
};
pub use power::{Exponent, PowerSequence, POWER_SCALE_MAX};

use crate::error::{Error, Result};
use crate::grid::{parse_exact_rational, Cap, GridScale, OccupancyProfile, RationalPoint};

/// A finite, sorted, duplicate-free list of exact points.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExplicitSet {
    points: Vec<RationalPoint>,
}

impl ExplicitSet {
    /// Sorts and deduplicates.
    pub fn from_points(mut points: Vec<RationalPoint>) -> Self {
        points.sort();
        points.dedup();
        Self { points }
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        let pts = values.iter().map(|&x| RationalPoint::from_f64(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_points(pts))
    }

    pub(crate) fn from_sorted_unchecked(points: Vec<RationalPoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        Self { points }
    }

    pub fn points(&self) -> &[RationalPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn occupancy(&self, m: GridScale, cap: Cap) -> OccupancyProfile {
        OccupancyProfile::from_sorted_points(&self.points, m, cap)
    }

    /// Points lying in box `k` at scale `m`, ascending.
    pub fn points_in_box(&self, k: u64, m: GridScale) -> &[RationalPoint] {
        let start = self.points.partition_point(|p| p.box_index(m) < k);
        let end = self.points.partition_point(|p| p.box_index(m) <= k);
        &self.points[start..end]
    }

    /// Reads a point file: one value per line, decimal or `num/den`;
    /// blank lines and lines starting with `#` are ignored.
    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse_points(&text)
    }

    pub fn parse_points(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p = RationalPoint::parse(line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            pts.push(p);
        }
        Ok(Self::from_points(pts))
    }
}

/// Largest scale at which a set's counts are faithful to the intended set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScaleLimit {
    Unbounded,
    Finite(BigUint),
}

impl ScaleLimit {
    pub fn check(&self, m: GridScale) -> Result<()> {
        match self {
            ScaleLimit::Unbounded => Ok(()),
            ScaleLimit::Finite(max) if BigUint::from(m.get()) <= *max => Ok(()),
            ScaleLimit::Finite(max) => Err(Error::Resolution {
                requested: m.get(),
                max: max.to_u64().unwrap_or(u64::MAX),
            }),
        }
    }

    /// The limit as `u64`, saturating; `None` when unbounded.
    pub fn as_u64(&self) -> Option<u64> {
        match self {
            ScaleLimit::Unbounded => None,
            ScaleLimit::Finite(max) => Some(max.to_u64().unwrap_or(u64::MAX)),
        }
    }
}

impl fmt::Display for ScaleLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleLimit::Unbounded => write!(f, "unbounded"),
            ScaleLimit::Finite(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    Explicit,
    Power,
    Cantor,
    Paper,
}

#[derive(Clone, Debug)]
enum Body {
    Points(ExplicitSet),
    Power(PowerSequence),
}

/// A subset of `[0, 1]` exposed through capped per-box counts.
#[derive(Clone, Debug)]
pub struct CountedSet {
    kind: SetKind,
    body: Body,
    limit: ScaleLimit,
}

impl CountedSet {
    pub fn explicit(set: ExplicitSet) -> Self {
        Self { kind: SetKind::Explicit, body: Body::Points(set), limit: ScaleLimit::Unbounded }
    }

    pub fn explicit_from_points(points: Vec<RationalPoint>) -> Self {
        Self::explicit(ExplicitSet::from_points(points))
    }

    pub fn power(p: Exponent) -> Self {
        Self {
            kind: SetKind::Power,
            body: Body::Power(PowerSequence::new(p)),
            limit: ScaleLimit::Finite(BigUint::from(POWER_SCALE_MAX)),
        }
    }

    pub fn cantor(num: u64, den: u64, depth: u32) -> Result<Self> {
        let set = cantor_endpoints(num, den, depth)?;
        Ok(Self { kind: SetKind::Cantor, body: Body::Points(set), limit: ScaleLimit::Unbounded })
    }

    pub fn paper(params: PaperSetParams) -> Result<(Self, PaperSet)> {
        let generated = PaperSet::generate(params)?;
        let set = Self {
            kind: SetKind::Paper,
            body: Body::Points(generated.set().clone()),
            limit: ScaleLimit::Finite(generated.valid_scale_max().clone()),
        };
        Ok((set, generated))
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn valid_scale_range(&self) -> &ScaleLimit {
        &self.limit
    }

    pub fn as_explicit(&self) -> Option<&ExplicitSet> {
        match &self.body {
            Body::Points(s) => Some(s),
            Body::Power(_) => None,
        }
    }

    pub fn as_power(&self) -> Option<&PowerSequence> {
        match &self.body {
            Body::Power(p) => Some(p),
            Body::Points(_) => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.body {
            Body::Points(s) => s.is_empty(),
            Body::Power(_) => false,
        }
    }

    /// Number of points, `None` for infinite sets.
    pub fn cardinality(&self) -> Option<usize> {
        self.as_explicit().map(ExplicitSet::len)
    }

    pub fn occupancy(&self, m: GridScale, cap: Cap) -> Result<OccupancyProfile> {
        self.limit.check(m)?;
        match &self.body {
            Body::Points(s) => Ok(s.occupancy(m, cap)),
            Body::Power(p) => p.occupancy(m, cap),
        }
    }

    /// `N_{1/m}(X)`: the number of occupied boxes.
    pub fn box_count_1d(&self, m: GridScale) -> Result<u64> {
        Ok(self.occupancy(m, Cap::Bounded(1))?.occupied())
    }

    /// A finite set whose capped counts agree with this one for every scale
    /// up to `m_max` and every cap up to `cap`. Explicit sets return
    /// themselves; power sequences are truncated.
    pub fn explicit_for(&self, m_max: u64, cap: u64) -> Result<ExplicitSet> {
        match &self.body {
            Body::Points(s) => Ok(s.clone()),
            Body::Power(p) => {
                let n = p.truncation_for(m_max, cap);
                let n = u64::try_from(n).map_err(|_| Error::Budget("truncation too large".into()))?;
                p.truncate(n)
            }
        }
    }
}

/// Set-spec mini-language accepted by the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetSpec {
    Power { p: Exponent },
    Cantor { num: u64, den: u64, depth: u32 },
    Paper(PaperSetParams),
    File(std::path::PathBuf),
}

fn kv_pairs(body: &str) -> Result<Vec<(&str, &str)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {kv:?}")))
        })
        .collect()
}

fn small_ratio(s: &str) -> Result<Ratio<u64>> {
    let r = parse_exact_rational(s)?;
    match (r.numer().to_u64(), r.denom().to_u64()) {
        (Some(n), Some(d)) => Ok(Ratio::new(n, d)),
        _ => Err(Error::Parse(format!("{s:?} must be a non-negative rational with 64-bit parts"))),
    }
}

fn parse_int<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("{key}={v:?} is not an integer")))
}

impl FromStr for SetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("set spec {s:?} needs a kind prefix")))?;
        match kind {
            "file" => Ok(SetSpec::File(body.into())),
            "power" => {
                let mut p = None;
                for (k, v) in kv_pairs(body)? {
                    match k {
                        "p" => p = Some(v.parse()?),
                        _ => return Err(Error::Parse(format!("unknown power key {k:?}"))),
                    }
                }
                Ok(SetSpec::Power { p: p.ok_or_else(|| Error::Parse("power needs p".into()))? })
            }
            "cantor" => {
                let (mut ratio, mut depth) = (None, None);
                for (k, v) in kv_pairs(body)? {
                    match k {
                        "ratio" => ratio = Some(small_ratio(v)?),
                        "depth" => depth = Some(parse_int(k, v)?),
                        _ => return Err(Error::Parse(format!("unknown cantor key {k:?}"))),
                    }
                }
                let ratio = ratio.ok_or_else(|| Error::Parse("cantor needs ratio".into()))?;
                let depth = depth.ok_or_else(|| Error::Parse("cantor needs depth".into()))?;
                Ok(SetSpec::Cantor { num: *ratio.numer(), den: *ratio.denom(), depth })
            }
            "paper" => {
                let (mut a, mut c, mut levels, mut x1, mut gamma) = (None, None, None, 2, 4);
                for (k, v) in kv_pairs(body)? {
                    match k {
                        "a" => a = Some(small_ratio(v)?),
                        "c" => c = Some(small_ratio(v)?),
                        "levels" => levels = Some(parse_int(k, v)?),
                        "x1" => x1 = parse_int(k, v)?,
                        "gamma" => gamma = parse_int(k, v)?,
                        _ => return Err(Error::Parse(format!("unknown paper key {k:?}"))),
                    }
                }
                Ok(SetSpec::Paper(PaperSetParams::new(
                    a.ok_or_else(|| Error::Parse("paper needs a".into()))?,
                    c.ok_or_else(|| Error::Parse("paper needs c".into()))?,
                    levels.ok_or_else(|| Error::Parse("paper needs levels".into()))?,
                    x1,
                    gamma,
                )))
            }
            _ => Err(Error::Parse(format!("unknown set kind {kind:?}"))),
        }
    }
}

impl SetSpec {
    pub fn build(&self) -> Result<CountedSet> {
        Ok(self.build_with_metadata()?.0)
    }

    /// Builds the set; the construction also returns its generated blocks.
    pub fn build_with_metadata(&self) -> Result<(CountedSet, Option<PaperSet>)> {
        match self {
            SetSpec::Power { p } => Ok((CountedSet::power(*p), None)),
            SetSpec::Cantor { num, den, depth } => Ok((CountedSet::cantor(*num, *den, *depth)?, None)),
            SetSpec::Paper(params) => {
                let (set, generated) = CountedSet::paper(params.clone())?;
                Ok((set, Some(generated)))
            }
            SetSpec::File(path) => Ok((CountedSet::explicit(ExplicitSet::read_file(path)?), None)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: u64) -> GridScale {
        GridScale::new(v).unwrap()
    }

    #[test]
    fn explicit_sets_sort_and_dedup() {
        let s = ExplicitSet::from_f64(&[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points()[1], RationalPoint::new(1, 2).unwrap());
        assert!(ExplicitSet::from_f64(&[]).unwrap().is_empty());
        let s = ExplicitSet::from_f64(&[1.0, 0.1]).unwrap();
        assert_eq!(s.points()[1], RationalPoint::one());
        assert!(ExplicitSet::from_f64(&[1.5]).is_err());
    }

    #[test]
    fn valid_scale_ranges() {
        let e = CountedSet::explicit(ExplicitSet::default());
        assert_eq!(e.valid_scale_range(), &ScaleLimit::Unbounded);
        let p = CountedSet::power(Exponent::integer(1).unwrap());
        assert_eq!(p.valid_scale_range().as_u64(), Some(1 << 40));
        let (paper, _) = CountedSet::paper(PaperSetParams::new(Ratio::new(1, 2), Ratio::new(0, 1), 1, 2, 4)).unwrap();
        assert_eq!(paper.valid_scale_range(), &ScaleLimit::Finite(BigUint::from(65536u32)));
        let small = ScaleLimit::Finite(BigUint::from(100u32));
        assert!(small.check(m(100)).is_ok());
        assert_eq!(small.check(m(101)).unwrap_err(), Error::Resolution { requested: 101, max: 100 });
    }

    #[test]
    fn box_counts() {
        let empty = CountedSet::explicit(ExplicitSet::default());
        assert_eq!(empty.box_count_1d(m(16)).unwrap(), 0);
        let ends = CountedSet::explicit(ExplicitSet::from_f64(&[0.0, 1.0]).unwrap());
        assert_eq!(ends.box_count_1d(m(10)).unwrap(), 2);
        let h = CountedSet::power(Exponent::integer(1).unwrap());
        assert_eq!(h.box_count_1d(m(4)).unwrap(), 4);
        let sq = CountedSet::power(Exponent::integer(2).unwrap());
        assert_eq!(sq.box_count_1d(m(100)).unwrap(), 8);
    }

    #[test]
    fn parses_set_specs() {
        assert_eq!(
            "power:p=1".parse::<SetSpec>().unwrap(),
            SetSpec::Power { p: Exponent::integer(1).unwrap() }
        );
        assert_eq!(
            "cantor:ratio=1/3,depth=4".parse::<SetSpec>().unwrap(),
            SetSpec::Cantor { num: 1, den: 3, depth: 4 }
        );
        let paper: SetSpec = "paper:a=0.5,c=1/3,levels=2,x1=2,gamma=4".parse().unwrap();
        assert_eq!(paper, SetSpec::Paper(PaperSetParams::new(Ratio::new(1, 2), Ratio::new(1, 3), 2, 2, 4)));
        assert_eq!("file:pts.txt".parse::<SetSpec>().unwrap(), SetSpec::File("pts.txt".into()));
        assert!("power:q=1".parse::<SetSpec>().is_err());
        assert!("blob:x=1".parse::<SetSpec>().is_err());
        assert!("cantor:ratio=1/3".parse::<SetSpec>().is_err());
    }

    #[test]
    fn point_files_accept_comments_and_fractions() {
        let s = ExplicitSet::parse_points("# header\n0.5\n\n1/8\n  3/4 \n# trailing\n").unwrap();
        let got: Vec<String> = s.points().iter().map(|p| p.to_string()).collect();
        assert_eq!(got, ["1/8", "1/2", "3/4"]);
        assert!(ExplicitSet::parse_points("0.5\n2\n").is_err());
        let missing = SetSpec::File("/nonexistent/points.txt".into()).build();
        assert!(matches!(missing, Err(Error::Io(_))));
    }

    #[test]
    fn points_in_box_slices_sorted_points() {
        let s = ExplicitSet::from_f64(&[0.1, 0.2, 0.6]).unwrap();
        assert_eq!(s.points_in_box(0, m(2)).len(), 2);
        assert_eq!(s.points_in_box(1, m(2)).len(), 1);
        assert!(s.points_in_box(1, m(10)).len() == 1);
        assert!(s.points_in_box(3, m(10)).is_empty());
    }
}
