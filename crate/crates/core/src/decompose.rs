//! Factorization of 1-Lipschitz splines into 1-Lipschitz factors with at
//! most three linear regions.

use serde::Serialize;

use crate::cpwl1d::{oracle_grid, LinearSpline1D};
use crate::error::{Error, Result};

/// Tolerance for extremum and sign tests on composed splines.
pub const CASE_TOL: f64 = 1e-10;
/// Slack on the 1-Lipschitz precondition.
pub const LIPSCHITZ_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-12;

/// Factors `g_1, …, g_n` applied first to last: `g = g_n ∘ ⋯ ∘ g_1`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompositionChain {
    factors: Vec<LinearSpline1D>,
}

impl CompositionChain {
    pub fn new(factors: Vec<LinearSpline1D>) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &[LinearSpline1D] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<LinearSpline1D> {
        self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.factors.iter().fold(x, |acc, f| f.eval(acc))
    }

    /// The composed spline; the identity for an empty chain.
    pub fn compose(&self) -> LinearSpline1D {
        let mut it = self.factors.iter();
        let Some(first) = it.next() else {
            return LinearSpline1D::identity();
        };
        it.fold(first.simplify(), |acc, f| f.compose(&acc))
    }

    fn extend(&mut self, other: CompositionChain) {
        self.factors.extend(other.factors);
    }
}

/// Which construction applies to a spline with unit outer slopes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    UpToThreeRegions,
    /// Interior knot (0-based index into the knots) that is a one-sided
    /// extremum, and which kind.
    Case1 { knot: usize, side: Side, kind: Extremum },
    Case2,
    Case3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Extremum {
    Max,
    Min,
}

fn check_lipschitz(g: &LinearSpline1D) -> Result<()> {
    let l = g.lipschitz();
    if l > 1.0 + LIPSCHITZ_TOL {
        return Err(Error::NotOneLipschitz(l));
    }
    Ok(())
}

fn unit_sign(s: f64) -> f64 {
    if s < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn is_unit(s: f64) -> bool {
    (s.abs() - 1.0).abs() <= UNIT_TOL
}

/// Splits `g = core ∘ pre` where `core` agrees with `g` on the hull of its
/// knots and has outer slopes ±1, and `pre` is a monotone 1-Lipschitz
/// spline with at most three regions (empty when `g` is already normalized).
pub fn normalize_outer_slopes(g: &LinearSpline1D) -> Result<(LinearSpline1D, CompositionChain)> {
    check_lipschitz(g)?;
    let g = g.simplify();
    let (sl, sr) = (g.left_slope(), g.right_slope());
    if is_unit(sl) && is_unit(sr) {
        return Ok((g, CompositionChain::default()));
    }
    if let Some(c) = g.affine_offset() {
        let core = LinearSpline1D::affine(unit_sign(sl), c);
        return Ok((core, CompositionChain::new(vec![LinearSpline1D::affine(sl.abs(), 0.0)])));
    }
    let knots = g.knots().to_vec();
    let values = g.values().to_vec();
    let (a1, am) = (knots[0], *knots.last().expect("knotted"));
    let pre = if a1 == am {
        LinearSpline1D::new(vec![a1], vec![a1], sl.abs(), sr.abs())?
    } else {
        LinearSpline1D::new(vec![a1, am], vec![a1, am], sl.abs(), sr.abs())?
    }
    .simplify();
    let core = LinearSpline1D::new(knots, values, unit_sign(sl), unit_sign(sr))?.simplify();
    Ok((core, CompositionChain::new(vec![pre])))
}

/// Classifies a spline with unit outer slopes.
pub fn case_split(g: &LinearSpline1D) -> Result<CaseTag> {
    let g = g.simplify();
    if g.num_regions() <= 3 {
        return Ok(CaseTag::UpToThreeRegions);
    }
    let (sl, sr) = (g.left_slope(), g.right_slope());
    if !is_unit(sl) || !is_unit(sr) {
        return Err(Error::InvalidArgument(format!(
            "outer slopes {sl} and {sr} are not of unit magnitude"
        )));
    }
    let v = g.values();
    let m = v.len();
    for j in 1..m - 1 {
        let left = &v[..=j];
        let right = &v[j..];
        let is_max = |s: &[f64]| s.iter().all(|&x| v[j] >= x - CASE_TOL);
        let is_min = |s: &[f64]| s.iter().all(|&x| v[j] <= x + CASE_TOL);
        let found = if sl > 0.0 && is_max(left) {
            Some((Side::Left, Extremum::Max))
        } else if sl < 0.0 && is_min(left) {
            Some((Side::Left, Extremum::Min))
        } else if sr < 0.0 && is_max(right) {
            Some((Side::Right, Extremum::Max))
        } else if sr > 0.0 && is_min(right) {
            Some((Side::Right, Extremum::Min))
        } else {
            None
        };
        if let Some((side, kind)) = found {
            return Ok(CaseTag::Case1 { knot: j, side, kind });
        }
    }
    if (sl > 0.0) == (sr > 0.0) {
        Ok(CaseTag::Case2)
    } else {
        Ok(CaseTag::Case3)
    }
}

fn mismatch(case: &str) -> Error {
    Error::Internal(format!("spline does not match {case}"))
}

/// Case 1 for a maximum on `(−∞, a_j]`: `g̃₁` follows `g` up to `a_j` and
/// continues with slope 1; `g̃₂` is the identity below `g(a_j)`.
fn split_max_left(g: &LinearSpline1D, j: usize) -> Result<(LinearSpline1D, LinearSpline1D)> {
    let a = g.knots();
    let v = g.values();
    if j == 0 || j + 1 >= a.len() || !v[..=j].iter().all(|&x| v[j] >= x - CASE_TOL) || g.left_slope() <= 0.0 {
        return Err(mismatch("case 1"));
    }
    let g1 = LinearSpline1D::new(a[..=j].to_vec(), v[..=j].to_vec(), g.left_slope(), 1.0)?;
    let shift = v[j] - a[j];
    let mut knots = vec![v[j]];
    let mut values = vec![v[j]];
    for i in j + 1..a.len() {
        knots.push(a[i] + shift);
        values.push(v[i]);
    }
    let g2 = LinearSpline1D::new(knots, values, 1.0, g.right_slope())?;
    Ok((g1.simplify(), g2.simplify()))
}

pub fn split_case1(g: &LinearSpline1D, knot: usize, side: Side, kind: Extremum) -> Result<(LinearSpline1D, LinearSpline1D)> {
    let g = g.simplify();
    let m = g.knots().len();
    match (side, kind) {
        (Side::Left, Extremum::Max) => split_max_left(&g, knot),
        (Side::Left, Extremum::Min) => {
            let (h1, h2) = split_max_left(&g.negate(), knot)?;
            Ok((h1, h2.negate()))
        }
        (Side::Right, Extremum::Max) => {
            let (h1, h2) = split_max_left(&g.mirror(), m - 1 - knot)?;
            Ok((h1.mirror(), h2))
        }
        (Side::Right, Extremum::Min) => {
            let (h1, h2) = split_max_left(&g.mirror().negate(), m - 1 - knot)?;
            Ok((h1.mirror(), h2.negate()))
        }
    }
}

/// Case 2 (equal outer slopes): reflect the hull part of `g` around `g(a₁)`.
pub fn split_case2(g: &LinearSpline1D) -> Result<(LinearSpline1D, LinearSpline1D)> {
    let g = g.simplify();
    if g.left_slope() < 0.0 {
        let (h1, h2) = split_case2(&g.negate())?;
        return Ok((h1, h2.negate()));
    }
    if g.knots().len() < 2 || g.right_slope() <= 0.0 {
        return Err(mismatch("case 2"));
    }
    let a = g.knots();
    let v = g.values();
    let (g_a1, g_am) = (v[0], *v.last().expect("knotted"));
    if g_am >= g_a1 {
        return Err(mismatch("case 2"));
    }
    let values: Vec<f64> = v.iter().map(|&x| 2.0 * g_a1 - x).collect();
    let g1 = LinearSpline1D::new(a.to_vec(), values, g.left_slope(), g.right_slope())?;
    let top = 2.0 * g_a1 - g_am;
    let g2 = LinearSpline1D::new(vec![g_a1, top], vec![g_a1, g_am], 1.0, 1.0)?;
    Ok((g1.simplify(), g2.simplify()))
}

/// Case 3 (opposite outer slopes): fold at the larger end knot.
pub fn split_case3(g: &LinearSpline1D) -> Result<(LinearSpline1D, LinearSpline1D)> {
    let g = g.simplify();
    if g.left_slope() < 0.0 {
        let (h1, h2) = split_case3(&g.negate())?;
        return Ok((h1, h2.negate()));
    }
    if g.knots().is_empty() || g.right_slope() >= 0.0 {
        return Err(mismatch("case 3"));
    }
    let a = g.knots();
    let v = g.values();
    let last = a.len() - 1;
    let star = if v[0] >= v[last] { 0 } else { last };
    let peak = v[star];
    let mut values = v.to_vec();
    for x in values.iter_mut().skip(star + 1) {
        *x = 2.0 * peak - *x;
    }
    let g1 = LinearSpline1D::new(a.to_vec(), values, g.left_slope(), -g.right_slope())?;
    let g2 = LinearSpline1D::new(vec![peak], vec![peak], 1.0, -1.0)?;
    Ok((g1.simplify(), g2.simplify()))
}

fn decompose_normalized(g: &LinearSpline1D, depth: usize, limit: usize) -> Result<CompositionChain> {
    if depth > limit {
        return Err(Error::Internal(format!("decomposition recursion exceeded depth {limit}")));
    }
    let g = g.simplify();
    match case_split(&g)? {
        CaseTag::UpToThreeRegions => Ok(CompositionChain::new(vec![g])),
        CaseTag::Case1 { knot, side, kind } => {
            let (g1, g2) = split_case1(&g, knot, side, kind)?;
            let mut chain = decompose_normalized(&g1, depth + 1, limit)?;
            chain.extend(decompose_normalized(&g2, depth + 1, limit)?);
            Ok(chain)
        }
        CaseTag::Case2 => {
            let (g1, g2) = split_case2(&g)?;
            let mut chain = decompose_normalized(&g1, depth + 1, limit)?;
            chain.factors.push(g2);
            Ok(chain)
        }
        CaseTag::Case3 => {
            let (g1, g2) = split_case3(&g)?;
            let mut chain = decompose_normalized(&g1, depth + 1, limit)?;
            chain.factors.push(g2);
            Ok(chain)
        }
    }
}

/// Factors a 1-Lipschitz spline into 1-Lipschitz splines with at most three
/// regions each.
pub fn decompose(g: &LinearSpline1D) -> Result<CompositionChain> {
    let (core, mut chain) = normalize_outer_slopes(g)?;
    let limit = 4 * core.num_regions() + 16;
    chain.extend(decompose_normalized(&core, 0, limit)?);
    Ok(chain)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainVerification {
    pub max_grid_error: f64,
    pub outer_slope_error: f64,
    pub grid_points: usize,
    pub chain_length: usize,
    pub factor_region_counts: Vec<usize>,
    pub factor_lipschitz: Vec<f64>,
    pub ok: bool,
}

/// Compares the composed chain with `g` on the oracle grid spanning three
/// times the knot range (at least five units of margin) and checks the
/// factor invariants.
pub fn verify_chain(g: &LinearSpline1D, chain: &CompositionChain, grid_points: usize) -> ChainVerification {
    let composed = chain.compose();
    let mut knots: Vec<f64> = g.knots().to_vec();
    knots.extend_from_slice(composed.knots());
    let (lo, hi) = knots
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &k| (l.min(k), h.max(k)));
    let margin = if knots.is_empty() { 5.0 } else { (hi - lo).max(5.0) };
    let grid = oracle_grid(&knots, grid_points, margin);
    let mut err = g.max_abs_diff_on(&composed, &grid);
    // values along the chain, without forming the composition
    for &x in &grid {
        err = err.max((chain.eval(x) - g.eval(x)).abs());
    }
    let slope_err = (composed.left_slope() - g.left_slope())
        .abs()
        .max((composed.right_slope() - g.right_slope()).abs());
    let counts: Vec<usize> = chain.factors().iter().map(|f| f.simplify().num_regions()).collect();
    let lips: Vec<f64> = chain.factors().iter().map(LinearSpline1D::lipschitz).collect();
    let ok = err < 1e-9
        && slope_err < 1e-9
        && counts.iter().all(|&c| c <= 3)
        && lips.iter().all(|&l| l <= 1.0 + LIPSCHITZ_TOL);
    ChainVerification {
        max_grid_error: err,
        outer_slope_error: slope_err,
        grid_points: grid.len(),
        chain_length: chain.len(),
        factor_region_counts: counts,
        factor_lipschitz: lips,
        ok,
    }
}
