//! Polygonal witness functions whose graphs over `X` meet many boxes.
//!
//! In every occupied box `k` the `n_k = min{⌊h·m⌋, #X∩B_k}` smallest points
//! are lifted to distinct rows below the height cap `h`, so the graph meets
//! at least `Σ_k min{⌊h·m⌋, #X∩B_k}` cells at scale `1/m`.

mod theorem1;

use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

pub use theorem1::{iterate_theorem1, StageRecord, Theorem1Run};

use crate::error::{Error, Result};
use crate::grid::{graph_box_count, row_index, GridScale, RationalPoint};
use crate::polyline::{BigRational, PiecewiseLinear, Scalar};
use crate::sets::ExplicitSet;

/// Points chosen per occupied box: `(box, points ascending)`.
pub type Selection = Vec<(u64, Vec<RationalPoint>)>;

/// For each occupied box, its `min{cap, count}` smallest points.
pub fn select_points(set: &ExplicitSet, m: GridScale, cap: u64) -> Selection {
    let mut out: Selection = Vec::new();
    for p in set.points() {
        let k = p.box_index(m);
        match out.last_mut() {
            Some((last, pts)) if *last == k => {
                if (pts.len() as u64) < cap {
                    pts.push(p.clone());
                }
            }
            _ if cap > 0 => out.push((k, vec![p.clone()])),
            _ => {}
        }
    }
    out
}

/// Number of rows `⌊h·m⌋` that fit under the height cap.
pub fn row_capacity(m: GridScale, h: &BigRational) -> u64 {
    (h.numer() * BigInt::from(m.get()))
        .div_floor(h.denom())
        .to_u64()
        .unwrap_or(0)
}

/// Heights `(j + ½)/m` for `j = 0..n_k`; all lie strictly below `h`.
pub fn assign_heights(n_k: u64, m: GridScale, h: &BigRational) -> Result<Vec<BigRational>> {
    let capacity = row_capacity(m, h);
    if n_k > capacity {
        return Err(Error::Capacity { count: n_k, capacity });
    }
    let two_m = BigInt::from(2 * m.get() as u128);
    Ok((0..n_k)
        .map(|j| Ratio::new(BigInt::from(2 * j + 1), two_m.clone()))
        .collect())
}

/// One lifted point of a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessPoint {
    pub x: RationalPoint,
    /// Value of the witness at `x`.
    pub height: BigRational,
    pub column: u64,
    /// Row of the lifted graph point (of `base + witness` when built over a
    /// base function).
    pub row: u64,
}

#[derive(Clone, Debug)]
pub struct WitnessResult {
    pub m: GridScale,
    pub h: BigRational,
    pub points: Vec<WitnessPoint>,
    pub function: PiecewiseLinear,
    /// `Σ_k min{⌊h·m⌋, #X∩B_k}`.
    pub bound: u64,
    /// Cells met by the graph over the selected points.
    pub achieved: u64,
}

/// Serializable digest of a [`WitnessResult`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessSummary {
    pub m: u64,
    pub h: String,
    pub selected: usize,
    pub bound: u64,
    pub achieved: u64,
    pub sup_norm: String,
    pub sound: bool,
}

impl WitnessResult {
    pub fn sup_norm(&self) -> BigRational {
        self.function.sup_norm()
    }

    /// No two points of one column share a row.
    pub fn columns_distinct(&self) -> bool {
        let mut cells: Vec<(u64, u64)> = self.points.iter().map(|p| (p.column, p.row)).collect();
        cells.sort_unstable();
        cells.windows(2).all(|w| w[0] != w[1])
    }

    /// `achieved ≥ bound` and `‖f‖_∞ < h`.
    pub fn is_sound(&self) -> bool {
        self.achieved >= self.bound && self.sup_norm() < self.h
    }

    pub fn summary(&self) -> WitnessSummary {
        WitnessSummary {
            m: self.m.get(),
            h: self.h.to_string(),
            selected: self.points.len(),
            bound: self.bound,
            achieved: self.achieved,
            sup_norm: self.sup_norm().to_string(),
            sound: self.is_sound(),
        }
    }

    /// CSV with columns `x,height,box_column,box_row`, exact rationals as
    /// `num/den`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "height", "box_column", "box_row"]).map_err(csv_err)?;
        for p in &self.points {
            w.write_record([
                p.x.to_fraction_string(),
                fraction(&p.height),
                p.column.to_string(),
                p.row.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `num/den`, also for integers.
pub fn fraction(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn check_height_cap(h: &BigRational) -> Result<()> {
    if *h <= BigRational::zero() {
        return Err(Error::Parameter(format!("height cap {h} must be positive")));
    }
    Ok(())
}

/// Witness over the zero function: heights `(j + ½)/m` inside each box.
pub fn build_witness(set: &ExplicitSet, m: GridScale, h: &BigRational) -> Result<WitnessResult> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    check_height_cap(h)?;
    let capacity = row_capacity(m, h);
    if capacity == 0 {
        return Err(Error::Capacity { count: 1, capacity: 0 });
    }
    let selection = select_points(set, m, capacity);
    let mut points = Vec::new();
    for (k, pts) in &selection {
        let heights = assign_heights(pts.len() as u64, m, h)?;
        for (x, height) in pts.iter().zip(heights) {
            let row = row_index(&height, m)?;
            points.push(WitnessPoint { x: x.clone(), height, column: *k, row });
        }
    }
    finish(m, h, &selection, points, None)
}

/// Witness against a base function `g`: the selected points receive values
/// `f(b) ∈ [0, h)` so that `g + f` puts as many of them as possible into
/// distinct rows of their column. Each point can reach the rows met by
/// `[g(b), g(b) + h)`; rows are matched greedily by earliest last row,
/// which is optimal for interval-to-slot matching. Unmatched points get
/// `f(b) = 0`.
pub fn build_witness_over(
    set: &ExplicitSet,
    base: &PiecewiseLinear,
    m: GridScale,
    h: &BigRational,
) -> Result<WitnessResult> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    check_height_cap(h)?;
    let capacity = row_capacity(m, h);
    if capacity == 0 {
        return Err(Error::Capacity { count: 1, capacity: 0 });
    }
    let two_m = BigInt::from(2 * m.get() as u128);
    let selection = select_points(set, m, capacity);
    let mut points = Vec::new();
    for (k, pts) in &selection {
        // (lowest row, highest row, index, base value)
        let mut slots = Vec::with_capacity(pts.len());
        for (idx, x) in pts.iter().enumerate() {
            let g = base.eval(&x.to_big_rational());
            let lo = row_index(&g, m)?;
            // rows r with max(g, (r + ½)/m) < g + h
            let top = &g + h;
            let scaled = top.numer() * &two_m;
            // largest r with (2r + 1) * den < 2m * num  ⇔  2r + 1 < 2m·top
            let twice = (scaled - BigInt::from(1)).div_floor(top.denom());
            let hi_mid = (twice - BigInt::from(1)).div_floor(&BigInt::from(2));
            let hi = hi_mid.to_u64().unwrap_or(0).max(lo);
            slots.push((lo, hi, idx, g));
        }
        slots.sort_by_key(|s| (s.1, s.0, s.2));
        let mut taken = std::collections::BTreeSet::new();
        let mut lifted: Vec<Option<(BigRational, u64)>> = vec![None; pts.len()];
        for (lo, hi, idx, g) in slots {
            let mut r = lo;
            while r <= hi && taken.contains(&r) {
                r += 1;
            }
            let value = if r <= hi {
                let mid = Ratio::new(BigInt::from(2 * r as u128 + 1), two_m.clone());
                let y = if mid > g { mid } else { g.clone() };
                let f = &y - &g;
                if f < *h && row_index(&y, m)? == r {
                    taken.insert(r);
                    Some(f)
                } else {
                    None
                }
            } else {
                None
            };
            let f = value.unwrap_or_else(BigRational::zero);
            let row = row_index(&(&g + &f), m)?;
            lifted[idx] = Some((f, row));
        }
        for (x, l) in pts.iter().zip(lifted) {
            let (height, row) = l.expect("every point processed");
            points.push(WitnessPoint { x: x.clone(), height, column: *k, row });
        }
    }
    finish(m, h, &selection, points, Some(base))
}

fn finish(
    m: GridScale,
    h: &BigRational,
    selection: &Selection,
    points: Vec<WitnessPoint>,
    base: Option<&PiecewiseLinear>,
) -> Result<WitnessResult> {
    let bound = selection.iter().map(|(_, p)| p.len() as u64).sum();
    let breakpoints = points
        .iter()
        .map(|p| (p.x.to_big_rational(), p.height.clone()))
        .collect();
    let function = PiecewiseLinear::new(breakpoints)?;
    let samples: Vec<(BigRational, BigRational)> = points
        .iter()
        .map(|p| {
            let x = p.x.to_big_rational();
            let y = match base {
                Some(g) => g.eval(&x) + &p.height,
                None => p.height.clone(),
            };
            (x, y)
        })
        .collect();
    let achieved = graph_box_count(&samples, m)?;
    Ok(WitnessResult { m, h: h.clone(), points, function, bound, achieved })
}

/// Cell counts of `f`, `g` and `f + g` sampled at the same abscissae.
pub fn shifted_sum_count<T: Scalar>(
    f: &PiecewiseLinear<T>,
    g: &PiecewiseLinear<T>,
    samples: &[Ratio<T>],
    m: GridScale,
) -> Result<(u64, u64, u64)> {
    let mut sf = Vec::with_capacity(samples.len());
    let mut sg = Vec::with_capacity(samples.len());
    let mut sfg = Vec::with_capacity(samples.len());
    for x in samples {
        let (a, b) = (f.eval(x), g.eval(x));
        sfg.push((x.clone(), &a + &b));
        sf.push((x.clone(), a));
        sg.push((x.clone(), b));
    }
    Ok((
        graph_box_count(&sf, m)?,
        graph_box_count(&sg, m)?,
        graph_box_count(&sfg, m)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::gm_capped;
    use crate::grid::Cap;
    use crate::sets::{CountedSet, Exponent};
    use proptest::prelude::*;

    fn m(v: u64) -> GridScale {
        GridScale::new(v).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        Ratio::new(BigInt::from(n), BigInt::from(d))
    }

    fn pts(xs: &[(u64, u64)]) -> ExplicitSet {
        ExplicitSet::from_points(xs.iter().map(|&(n, d)| RationalPoint::new(n, d).unwrap()).collect())
    }

    fn strings(sel: &Selection) -> Vec<(u64, Vec<String>)> {
        sel.iter()
            .map(|(k, p)| (*k, p.iter().map(|x| x.to_string()).collect()))
            .collect()
    }

    #[test]
    fn selection_examples() {
        let s = pts(&[(1, 10), (2, 10), (6, 10)]);
        assert_eq!(
            strings(&select_points(&s, m(2), 2)),
            vec![(0, vec!["1/10".into(), "1/5".into()]), (1, vec!["3/5".to_string()])]
        );
        assert_eq!(
            strings(&select_points(&s, m(2), 1)),
            vec![(0, vec!["1/10".to_string()]), (1, vec!["3/5".to_string()])]
        );
        let harmonic = CountedSet::power(Exponent::integer(1).unwrap());
        let trunc = harmonic.explicit_for(64, 1).unwrap();
        let sel = select_points(&trunc, m(2), 3);
        assert_eq!(sel[0].1.len(), 3);
        assert_eq!(sel[0].1[0], RationalPoint::zero());
        assert_eq!(strings(&sel)[1], (1, vec!["1/2".to_string(), "1/1".to_string()]));
    }

    #[test]
    fn height_examples() {
        assert_eq!(assign_heights(3, m(4), &q(1, 1)).unwrap(), vec![q(1, 8), q(3, 8), q(5, 8)]);
        assert_eq!(assign_heights(2, m(2), &q(1, 1)).unwrap(), vec![q(1, 4), q(3, 4)]);
        assert_eq!(
            assign_heights(1, m(10), &q(1, 20)).unwrap_err(),
            Error::Capacity { count: 1, capacity: 0 }
        );
    }

    #[test]
    fn witness_examples() {
        let w = build_witness(&pts(&[(3, 10)]), m(2), &q(1, 1)).unwrap();
        assert_eq!((w.bound, w.achieved), (1, 1));
        let w = build_witness(&pts(&[(0, 1), (1, 8), (1, 4), (1, 2)]), m(2), &q(1, 1)).unwrap();
        assert_eq!(w.bound, 3);
        assert!(w.achieved >= 3);
        let harmonic = CountedSet::power(Exponent::integer(1).unwrap());
        let trunc = harmonic.explicit_for(4, 4).unwrap();
        let w = build_witness(&trunc, m(4), &q(1, 1)).unwrap();
        assert_eq!(w.bound, 8);
        assert!(w.is_sound() && w.columns_distinct());
        assert_eq!(build_witness(&ExplicitSet::default(), m(4), &q(1, 1)).unwrap_err(), Error::EmptySet);
    }

    #[test]
    fn csv_export_is_exact() {
        let w = build_witness(&pts(&[(0, 1), (1, 8)]), m(2), &q(1, 1)).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "x,height,box_column,box_row\n0/1,1/4,0,0\n1/8,3/4,0,1\n");
    }

    #[test]
    fn zero_base_matches_plain_construction() {
        let s = pts(&[(0, 1), (1, 9), (2, 9), (1, 3), (5, 6), (1, 1)]);
        let plain = build_witness(&s, m(3), &q(1, 1)).unwrap();
        let over = build_witness_over(&s, &PiecewiseLinear::zero(), m(3), &q(1, 1)).unwrap();
        assert_eq!(plain.points, over.points);
        assert_eq!(plain.achieved, over.achieved);
    }

    #[test]
    fn base_function_rows_are_matched() {
        // base already splits the two points of box 0 into different rows
        let s = pts(&[(0, 1), (1, 8)]);
        let base = PiecewiseLinear::new(vec![(q(0, 1), q(0, 1)), (q(1, 8), q(5, 8))]).unwrap();
        let w = build_witness_over(&s, &base, m(2), &q(1, 1)).unwrap();
        assert_eq!(w.achieved, 2);
        assert!(w.sup_norm() < q(1, 1));
        // a cap of half a column admits one point per box
        let w = build_witness_over(&s, &base, m(2), &q(1, 2)).unwrap();
        assert_eq!((w.bound, w.achieved), (1, 1));
    }

    #[test]
    fn shifted_sum_examples() {
        let samples: Vec<Ratio<i128>> = (0..8).map(|k| Ratio::new(k, 8)).collect();
        let zero = PiecewiseLinear::<i128>::zero();
        let half_row = PiecewiseLinear::constant(Ratio::new(1, 8)).unwrap();
        assert_eq!(shifted_sum_count(&zero, &half_row, &samples, m(4)).unwrap(), (4, 4, 4));
        let c = PiecewiseLinear::constant(Ratio::new(3, 10)).unwrap();
        assert_eq!(shifted_sum_count(&c, &c, &samples, m(4)).unwrap(), (4, 4, 4));
        let fine: Vec<Ratio<i128>> = (0..16).map(|k| Ratio::new(k, 16)).collect();
        let id = PiecewiseLinear::new(vec![(Ratio::new(0, 1), Ratio::new(0, 1)), (Ratio::new(1, 1), Ratio::new(1, 1))]).unwrap();
        let (nf, _, nfg) = shifted_sum_count(&id, &half_row, &fine, m(4)).unwrap();
        assert!(2 * nfg >= nf);
    }

    proptest! {
        #[test]
        fn witnesses_are_sound(
            raw in proptest::collection::vec((0u64..=1 << 16, 1u64..=1 << 16), 1..300),
            mv in 1u64..=300,
            hd in 1i64..=4,
        ) {
            let set = ExplicitSet::from_points(raw.into_iter().filter(|(n, d)| n <= d)
                .map(|(n, d)| RationalPoint::new(n, d).unwrap()).collect());
            prop_assume!(!set.is_empty());
            let h = q(1, hd);
            prop_assume!(row_capacity(m(mv), &h) >= 1);
            let w = build_witness(&set, m(mv), &h).unwrap();
            prop_assert!(w.is_sound());
            prop_assert!(w.columns_distinct());
            let counted = CountedSet::explicit(set.clone());
            let cap = Cap::Bounded(row_capacity(m(mv), &h));
            prop_assert_eq!(w.bound, gm_capped(&counted, m(mv), cap).unwrap());
            // a graph below height 1 never beats g_m
            let all: Vec<_> = set.points().iter().map(|x| {
                let xr = x.to_big_rational();
                let y = w.function.eval(&xr);
                (xr, y)
            }).collect();
            prop_assert!(graph_box_count(&all, m(mv)).unwrap() <= crate::analysis::gm(&counted, m(mv)).unwrap());
        }
    }
}
