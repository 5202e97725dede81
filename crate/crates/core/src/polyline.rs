//! Exact piecewise-linear functions on `[0, 1]`.
//!
//! Breakpoints and values are exact rationals. The scalar type is generic so
//! the witness builder can use big integers while the randomized lemma
//! suites run on `i128` rationals.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::{BigInt, ToBigInt};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Integer type backing the exact rationals of a [`PiecewiseLinear`].
pub trait Scalar:
    Clone + Debug + Integer + Signed + ToPrimitive + FromPrimitive + ToBigInt + From<i64> + Send + Sync
{
}

impl<T> Scalar for T where
    T: Clone + Debug + Integer + Signed + ToPrimitive + FromPrimitive + ToBigInt + From<i64> + Send + Sync
{
}

pub type BigRational = Ratio<BigInt>;

/// A polygonal function given by breakpoints `(x, y)` with strictly
/// increasing `x ∈ [0, 1]` and `y ≥ 0`. Linear between breakpoints,
/// constant beyond the first and last one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseLinear<T: Scalar = BigInt> {
    points: Vec<(Ratio<T>, Ratio<T>)>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    pub fn new(points: Vec<(Ratio<T>, Ratio<T>)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("piecewise-linear function needs a breakpoint".into()));
        }
        let zero = Ratio::<T>::zero();
        let one = Ratio::from_integer(T::one());
        for (i, (x, y)) in points.iter().enumerate() {
            if *x < zero || *x > one {
                return Err(Error::Domain(format!("breakpoint x={x:?} outside [0,1]")));
            }
            if *y < zero {
                return Err(Error::Domain(format!("negative value y={y:?} at x={x:?}")));
            }
            if i > 0 && points[i - 1].0 >= *x {
                return Err(Error::Domain("breakpoints must be strictly increasing".into()));
            }
        }
        Ok(Self { points })
    }

    pub fn constant(y: Ratio<T>) -> Result<Self> {
        Self::new(vec![(Ratio::zero(), y)])
    }

    pub fn zero() -> Self {
        Self { points: vec![(Ratio::zero(), Ratio::zero())] }
    }

    pub fn breakpoints(&self) -> &[(Ratio<T>, Ratio<T>)] {
        &self.points
    }

    /// True when the breakpoints span the whole of `[0, 1]`.
    pub fn covers_unit_interval(&self) -> bool {
        self.points.len() >= 2
            && self.points[0].0.is_zero()
            && self.points[self.points.len() - 1].0 == Ratio::from_integer(T::one())
    }

    pub fn eval(&self, x: &Ratio<T>) -> Ratio<T> {
        let pts = &self.points;
        // index of the first breakpoint with abscissa > x
        let idx = pts.partition_point(|(px, _)| px <= x);
        if idx == 0 {
            return pts[0].1.clone();
        }
        if idx == pts.len() {
            return pts[pts.len() - 1].1.clone();
        }
        let (x0, y0) = &pts[idx - 1];
        if x0 == x {
            return y0.clone();
        }
        let (x1, y1) = &pts[idx];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Supremum norm; attained at a breakpoint.
    pub fn sup_norm(&self) -> Ratio<T> {
        self.points
            .iter()
            .map(|(_, y)| y.clone())
            .max()
            .unwrap_or_else(Ratio::zero)
    }

    /// Largest absolute slope over all segments.
    pub fn max_abs_slope(&self) -> Ratio<T> {
        self.points
            .windows(2)
            .map(|w| ((&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0)).abs())
            .max()
            .unwrap_or_else(Ratio::zero)
    }

    /// Pointwise sum. The result breaks at the union of both breakpoint sets,
    /// so it agrees with `self.eval(x) + other.eval(x)` everywhere.
    pub fn add(&self, other: &Self) -> Self {
        let mut xs: Vec<Ratio<T>> = Vec::with_capacity(self.points.len() + other.points.len());
        let (mut i, mut j) = (0, 0);
        while i < self.points.len() || j < other.points.len() {
            let next = match (self.points.get(i), other.points.get(j)) {
                (Some(a), Some(b)) => match a.0.cmp(&b.0) {
                    Ordering::Less => {
                        i += 1;
                        a.0.clone()
                    }
                    Ordering::Greater => {
                        j += 1;
                        b.0.clone()
                    }
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        a.0.clone()
                    }
                },
                (Some(a), None) => {
                    i += 1;
                    a.0.clone()
                }
                (None, Some(b)) => {
                    j += 1;
                    b.0.clone()
                }
                (None, None) => unreachable!(),
            };
            xs.push(next);
        }
        let points = xs
            .into_iter()
            .map(|x| {
                let y = self.eval(&x) + other.eval(&x);
                (x, y)
            })
            .collect();
        Self { points }
    }
}

impl PiecewiseLinear<BigInt> {
    /// Breakpoint values as `f64`, for reporting.
    pub fn to_f64_points(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|(x, y)| (ratio_to_f64(x), ratio_to_f64(y)))
            .collect()
    }
}

pub(crate) fn ratio_to_f64<T: Scalar>(r: &Ratio<T>) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
