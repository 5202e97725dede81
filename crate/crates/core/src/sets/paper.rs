//! The two-parameter construction with prescribed box and graph box
//! dimensions, at desk scale.
//!
//! Level `n` contributes `k_n = ⌊x_n^a⌋` blocks
//! `X_{n,i} = { i/x_n − j/x_{n+2} : j = 1..⌊x_n^c⌋ }`. The gap sequence is
//! `x_{n+1} = x_n^γ` starting from `x_1`, which keeps every point an exact
//! rational with denominator `x_{n+2}`.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::ExplicitSet;
use crate::error::{Error, Result};
use crate::grid::RationalPoint;

/// Maximum number of generated points.
pub const PAPER_SET_POINT_BUDGET: u64 = 5_000_000;
/// Maximum bit length of any gap value `x_n`.
const MAX_GAP_BITS: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PaperSetParams {
    pub a: Ratio<u64>,
    pub c: Ratio<u64>,
    pub levels: u32,
    pub x1: u64,
    pub gamma: u32,
}

impl PaperSetParams {
    pub fn new(a: Ratio<u64>, c: Ratio<u64>, levels: u32, x1: u64, gamma: u32) -> Self {
        Self { a, c, levels, x1, gamma }
    }

    fn validate(&self) -> Result<()> {
        let zero = Ratio::zero();
        let one = Ratio::one();
        if self.a <= zero || self.a > one {
            return Err(Error::Parameter(format!("a = {} must lie in (0, 1]", self.a)));
        }
        if self.c >= one {
            return Err(Error::Parameter(format!("c = {} must lie in [0, 1)", self.c)));
        }
        if self.levels == 0 {
            return Err(Error::Parameter("levels must be at least 1".into()));
        }
        if self.x1 < 2 {
            return Err(Error::Parameter("x1 must be at least 2".into()));
        }
        if self.gamma < 2 {
            return Err(Error::Parameter("gamma must be at least 2".into()));
        }
        Ok(())
    }

    /// The graph box dimension the construction targets:
    /// `max{1, 2(a+c)/(1+c)}`.
    pub fn predicted_graph_dimension(&self) -> Ratio<u64> {
        let b = (self.a + self.c) * 2u64 / (Ratio::one() + self.c);
        b.max(Ratio::one())
    }
}

/// `⌊x^r⌋` for a non-negative rational exponent, computed exactly as the
/// integer `den`-th root of `x^num`.
pub fn floor_rational_power(x: &BigUint, r: Ratio<u64>) -> Result<BigUint> {
    let num = u32::try_from(*r.numer()).map_err(|_| Error::Parameter(format!("exponent {r} too large")))?;
    let den = u32::try_from(*r.denom()).map_err(|_| Error::Parameter(format!("exponent {r} too large")))?;
    if x.bits().saturating_mul(num as u64) > 1 << 24 {
        return Err(Error::Budget(format!("x^{r} is too large to evaluate exactly")));
    }
    Ok(x.pow(num).nth_root(den))
}

/// Scale `m_n = ⌊x_{n+1}^{(1+c)/2}⌋` at which level `n+1` realizes the lower
/// bound on `g_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecialScale {
    pub level: u32,
    /// `None` when the scale does not fit in 64 bits.
    pub m: Option<u64>,
    /// Whether level `n+1` was generated, so the bound is testable.
    pub realized: bool,
}

/// Metadata of a generated construction.
#[derive(Clone, Debug, Serialize)]
pub struct PaperSetInfo {
    pub params: PaperSetParams,
    /// `x_1 ..= x_{levels+2}` as decimal strings.
    pub gaps: Vec<String>,
    pub blocks_per_level: Vec<u64>,
    pub points_per_block: Vec<u64>,
    pub special_scales: Vec<SpecialScale>,
    pub predicted_dimension: f64,
    pub predicted_graph_dimension: f64,
    pub cardinality: u64,
}

/// Result of the exact block-property checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockReport {
    pub blocks_checked: u64,
    /// `(i−1)/x_n ≤ inf X_{n,i} ≤ sup X_{n,i} ≤ i/x_n` for every block.
    pub within_cell: bool,
    /// `diam X_{n,i} ≤ 1/x_{n+1}` for every block.
    pub diameter: bool,
    /// `|X_n| ≤ x_n^2` for every level.
    pub level_size: bool,
}

impl BlockReport {
    pub fn all_pass(&self) -> bool {
        self.within_cell && self.diameter && self.level_size
    }
}

/// A generated construction: blocks by level plus the flattened set.
#[derive(Clone, Debug)]
pub struct PaperSet {
    params: PaperSetParams,
    gaps: Vec<BigUint>,
    blocks_per_level: Vec<u64>,
    points_per_block: Vec<u64>,
    /// `blocks[n-1][i-1]` holds the points of `X_{n,i}`, ascending.
    blocks: Vec<Vec<Vec<RationalPoint>>>,
    set: ExplicitSet,
}

impl PaperSet {
    pub fn generate(params: PaperSetParams) -> Result<Self> {
        params.validate()?;
        let levels = params.levels as usize;
        let mut gaps = vec![BigUint::from(params.x1)];
        for _ in 0..levels + 1 {
            let prev = gaps.last().expect("non-empty");
            if prev.bits().saturating_mul(params.gamma as u64) > MAX_GAP_BITS {
                return Err(Error::Budget("gap sequence outgrows exact representation".into()));
            }
            gaps.push(prev.pow(params.gamma));
        }

        let mut blocks_per_level = Vec::with_capacity(levels);
        let mut points_per_block = Vec::with_capacity(levels);
        let mut total: u64 = 0;
        for x in gaps.iter().take(levels) {
            let k = floor_rational_power(x, params.a)?
                .to_u64()
                .ok_or_else(|| Error::Budget("too many blocks".into()))?;
            let r = floor_rational_power(x, params.c)?
                .to_u64()
                .ok_or_else(|| Error::Budget("too many points per block".into()))?;
            if k == 0 || r == 0 {
                return Err(Error::Parameter("every level needs at least one block and one point".into()));
            }
            total = total.saturating_add(k.saturating_mul(r));
            blocks_per_level.push(k);
            points_per_block.push(r);
        }
        if total > PAPER_SET_POINT_BUDGET {
            return Err(Error::Budget(format!(
                "construction has {total} points, over the budget of {PAPER_SET_POINT_BUDGET}"
            )));
        }

        let mut blocks = Vec::with_capacity(levels);
        let mut all = Vec::with_capacity(total as usize + 1);
        all.push(RationalPoint::zero());
        for n in 0..levels {
            let fine = &gaps[n + 2];
            let ratio = fine / &gaps[n];
            let mut level = Vec::with_capacity(blocks_per_level[n] as usize);
            for i in 1..=blocks_per_level[n] {
                let top = &ratio * i;
                let mut block = Vec::with_capacity(points_per_block[n] as usize);
                for j in (1..=points_per_block[n]).rev() {
                    let p = RationalPoint::from_big(&top - j, fine.clone())?;
                    block.push(p);
                }
                all.extend(block.iter().cloned());
                level.push(block);
            }
            blocks.push(level);
        }
        let set = ExplicitSet::from_points(all);
        Ok(Self { params, gaps, blocks_per_level, points_per_block, blocks, set })
    }

    pub fn params(&self) -> &PaperSetParams {
        &self.params
    }

    pub fn set(&self) -> &ExplicitSet {
        &self.set
    }

    pub fn into_set(self) -> ExplicitSet {
        self.set
    }

    /// `x_n` for `1 ≤ n ≤ levels + 2`.
    pub fn gap(&self, n: usize) -> &BigUint {
        &self.gaps[n - 1]
    }

    pub fn blocks(&self, level: usize) -> &[Vec<RationalPoint>] {
        &self.blocks[level - 1]
    }

    /// Largest faithful scale: the finest intra-block gap is `1/x_{levels+2}`.
    pub fn valid_scale_max(&self) -> &BigUint {
        self.gaps.last().expect("non-empty")
    }

    pub fn special_scales(&self) -> Result<Vec<SpecialScale>> {
        let exp = (Ratio::one() + self.params.c) / 2u64;
        (1..=self.params.levels)
            .map(|n| {
                let m = floor_rational_power(&self.gaps[n as usize], exp)?;
                Ok(SpecialScale { level: n, m: m.to_u64(), realized: n < self.params.levels })
            })
            .collect()
    }

    /// Checks `g ≥ x_{n+1}^{a+c} / (16·x_n)` exactly.
    pub fn meets_lower_bound(&self, level: u32, g: u64) -> Result<bool> {
        let n = level as usize;
        let e = self.params.a + self.params.c;
        let num = u32::try_from(*e.numer()).map_err(|_| Error::Parameter("a+c too fine".into()))?;
        let den = u32::try_from(*e.denom()).map_err(|_| Error::Parameter("a+c too fine".into()))?;
        let lhs = (BigUint::from(16u32) * &self.gaps[n - 1] * g).pow(den);
        let rhs = self.gaps[n].pow(num);
        Ok(lhs >= rhs)
    }

    /// The lower bound `x_{n+1}^{a+c} / (16·x_n)` as a float, for reporting.
    pub fn lower_bound_value(&self, level: u32) -> f64 {
        let n = level as usize;
        let e = self.params.a + self.params.c;
        let e = *e.numer() as f64 / *e.denom() as f64;
        let log_next = big_log2(&self.gaps[n]);
        let log_cur = big_log2(&self.gaps[n - 1]);
        (e * log_next - 4.0 - log_cur).exp2()
    }

    pub fn check_blocks(&self) -> BlockReport {
        let mut report = BlockReport { blocks_checked: 0, within_cell: true, diameter: true, level_size: true };
        for (idx, level) in self.blocks.iter().enumerate() {
            let x = &self.gaps[idx];
            let next = &self.gaps[idx + 1];
            let size: u64 = level.iter().map(|b| b.len() as u64).sum();
            if BigUint::from(size) > x * x {
                report.level_size = false;
            }
            for (i, block) in level.iter().enumerate() {
                report.blocks_checked += 1;
                let i = i as u64 + 1;
                let inf = block.iter().min().expect("block is non-empty");
                let sup = block.iter().max().expect("block is non-empty");
                let left = RationalPoint::from_big(BigUint::from(i - 1), x.clone()).expect("in range");
                let right = RationalPoint::from_big(BigUint::from(i), x.clone()).expect("in range");
                if !(left <= *inf && inf <= sup && *sup <= right) {
                    report.within_cell = false;
                }
                // (sup − inf)·x_{n+1} ≤ 1, cross-multiplied
                let (sn, sd) = (sup.numer(), sup.denom());
                let (inn, ind) = (inf.numer(), inf.denom());
                let diff_num = &sn * &ind - &inn * &sd;
                if diff_num * next > sd * ind {
                    report.diameter = false;
                }
            }
        }
        report
    }

    pub fn info(&self) -> Result<PaperSetInfo> {
        let p = &self.params;
        let a = *p.a.numer() as f64 / *p.a.denom() as f64;
        let b = p.predicted_graph_dimension();
        Ok(PaperSetInfo {
            params: p.clone(),
            gaps: self.gaps.iter().map(|g| g.to_string()).collect(),
            blocks_per_level: self.blocks_per_level.clone(),
            points_per_block: self.points_per_block.clone(),
            special_scales: self.special_scales()?,
            predicted_dimension: a,
            predicted_graph_dimension: *b.numer() as f64 / *b.denom() as f64,
            cardinality: self.set.len() as u64,
        })
    }
}

fn big_log2(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 52 {
        return x.to_f64().expect("small").log2();
    }
    let shift = bits - 52;
    let top = (x >> shift).to_f64().expect("52 bits");
    top.log2() + shift as f64
}
