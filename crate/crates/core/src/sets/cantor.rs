//! Endpoints of the level-`d` intervals of a symmetric Cantor construction.

use num_bigint::BigUint;
use num_traits::Zero;

use super::ExplicitSet;
use crate::error::{Error, Result};
use crate::grid::RationalPoint;

/// Largest depth accepted; `2^{d+1}` endpoints are materialized.
pub const CANTOR_MAX_DEPTH: u32 = 22;

/// Builds the endpoint set for ratio `λ = num/den ∈ (0, 1/2]` at depth `d`.
///
/// Each interval `[l, l + L]` is replaced by `[l, l + λL]` and
/// `[l + L - λL, l + L]`. Lengths are kept as integers over the common
/// denominator `den^d`, so every endpoint is exact.
pub fn cantor_endpoints(num: u64, den: u64, depth: u32) -> Result<ExplicitSet> {
    if num == 0 || den == 0 || 2 * num as u128 > den as u128 {
        return Err(Error::Parameter(format!("cantor ratio {num}/{den} must lie in (0, 1/2]")));
    }
    if depth > CANTOR_MAX_DEPTH {
        return Err(Error::Budget(format!("cantor depth {depth} exceeds {CANTOR_MAX_DEPTH}")));
    }
    let denominator = BigUint::from(den).pow(depth);
    // interval length at level j, in units of 1/den^d
    let length = |j: u32| BigUint::from(num).pow(j) * BigUint::from(den).pow(depth - j);
    let mut lefts = vec![BigUint::zero()];
    for j in 0..depth {
        let (outer, inner) = (length(j), length(j + 1));
        let shift = &outer - &inner;
        let mut next = Vec::with_capacity(lefts.len() * 2);
        for l in &lefts {
            next.push(l.clone());
            next.push(l + &shift);
        }
        lefts = next;
    }
    let last = length(depth);
    let mut pts = Vec::with_capacity(lefts.len() * 2);
    for l in lefts {
        let r = &l + &last;
        pts.push(RationalPoint::from_big(l, denominator.clone())?);
        pts.push(RationalPoint::from_big(r, denominator.clone())?);
    }
    // λ = 1/2 makes neighbouring intervals touch; duplicates collapse
    Ok(ExplicitSet::from_points(pts))
}
