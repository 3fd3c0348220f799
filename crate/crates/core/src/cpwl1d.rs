//! Scalar continuous piecewise-linear functions on the whole real line.
//!
//! A [`LinearSpline1D`] stores its knots, the value at each knot and the two
//! outer slopes. Interior slopes are always derived from consecutive
//! `(knot, value)` pairs, so a discontinuous function cannot be represented.
//! Every algebra operation returns the simplified (canonical) form in which no
//! two adjacent regions share a slope.

use crate::error::{Error, Result};

/// Absolute tolerance under which two abscissas are treated as the same knot.
pub const KNOT_TOL: f64 = 1e-12;
/// Relative tolerance under which two adjacent slopes are merged.
pub const SLOPE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Affine {
        slope: f64,
        value_at_zero: f64,
    },
    Knotted {
        knots: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    },
}

/// A continuous piecewise-linear function `R -> R`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSpline1D {
    repr: Repr,
}

/// Region-by-region view of a spline: `slopes[i]` holds on the region that
/// ends at `breakpoints[i]` (the last slope holds beyond the last breakpoint).
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeProfile {
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl SlopeProfile {
    pub fn region_count(&self) -> usize {
        self.slopes.len()
    }
}

pub(crate) fn slopes_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= SLOPE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Sorts and merges abscissas closer than [`KNOT_TOL`].
fn sort_dedup(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        match out.last() {
            Some(&last) if x - last <= KNOT_TOL => {}
            _ => out.push(x),
        }
    }
    out
}

impl LinearSpline1D {
    /// Builds a spline from raw knots and values. The result is *not*
    /// simplified; call [`LinearSpline1D::simplify`] for the canonical form.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidSpline(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if !left_slope.is_finite() || !right_slope.is_finite() {
            return Err(Error::NonFinite("outer slope"));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("knot or value"));
        }
        if let Some(w) = knots.windows(2).find(|w| w[1] - w[0] <= KNOT_TOL) {
            return Err(Error::InvalidSpline(format!(
                "knots must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        if knots.is_empty() {
            return Err(Error::InvalidSpline(
                "a spline without knots must be built with LinearSpline1D::affine".into(),
            ));
        }
        Ok(Self {
            repr: Repr::Knotted {
                knots,
                values,
                left_slope,
                right_slope,
            },
        })
    }

    /// Builds a spline from its knots, the value at the first knot and the
    /// slope of every region (`knots.len() + 1` slopes, left to right).
    pub fn from_slopes(knots: Vec<f64>, first_value: f64, slopes: &[f64]) -> Result<Self> {
        if slopes.len() != knots.len() + 1 {
            return Err(Error::InvalidSpline(format!(
                "{} knots need {} slopes, got {}",
                knots.len(),
                knots.len() + 1,
                slopes.len()
            )));
        }
        if knots.is_empty() {
            return Ok(Self::affine(slopes[0], first_value));
        }
        let mut values = Vec::with_capacity(knots.len());
        values.push(first_value);
        for i in 1..knots.len() {
            let prev = values[i - 1];
            values.push(prev + slopes[i] * (knots[i] - knots[i - 1]));
        }
        Self::new(knots, values, slopes[0], slopes[slopes.len() - 1])
    }

    pub fn affine(slope: f64, value_at_zero: f64) -> Self {
        Self {
            repr: Repr::Affine {
                slope,
                value_at_zero,
            },
        }
    }

    pub fn identity() -> Self {
        Self::affine(1.0, 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::affine(0.0, c)
    }

    /// `x -> |x - center| + offset`.
    pub fn abs_shifted(center: f64, offset: f64) -> Self {
        Self {
            repr: Repr::Knotted {
                knots: vec![center],
                values: vec![offset],
                left_slope: -1.0,
                right_slope: 1.0,
            },
        }
    }

    pub fn relu() -> Self {
        Self {
            repr: Repr::Knotted {
                knots: vec![0.0],
                values: vec![0.0],
                left_slope: 0.0,
                right_slope: 1.0,
            },
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.repr, Repr::Affine { .. })
    }

    pub fn knots(&self) -> &[f64] {
        match &self.repr {
            Repr::Affine { .. } => &[],
            Repr::Knotted { knots, .. } => knots,
        }
    }

    pub fn values(&self) -> &[f64] {
        match &self.repr {
            Repr::Affine { .. } => &[],
            Repr::Knotted { values, .. } => values,
        }
    }

    pub fn left_slope(&self) -> f64 {
        match self.repr {
            Repr::Affine { slope, .. } => slope,
            Repr::Knotted { left_slope, .. } => left_slope,
        }
    }

    pub fn right_slope(&self) -> f64 {
        match self.repr {
            Repr::Affine { slope, .. } => slope,
            Repr::Knotted { right_slope, .. } => right_slope,
        }
    }

    /// Value at zero for an affine spline, `None` otherwise.
    pub fn affine_offset(&self) -> Option<f64> {
        match self.repr {
            Repr::Affine { value_at_zero, .. } => Some(value_at_zero),
            Repr::Knotted { .. } => None,
        }
    }

    /// Slopes of all regions, left to right.
    pub fn slopes(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Affine { slope, .. } => vec![*slope],
            Repr::Knotted {
                knots,
                values,
                left_slope,
                right_slope,
            } => {
                let mut s = Vec::with_capacity(knots.len() + 1);
                s.push(*left_slope);
                for i in 1..knots.len() {
                    s.push((values[i] - values[i - 1]) / (knots[i] - knots[i - 1]));
                }
                s.push(*right_slope);
                s
            }
        }
    }

    pub fn profile(&self) -> SlopeProfile {
        let simple = self.simplify();
        SlopeProfile {
            breakpoints: simple.knots().to_vec(),
            slopes: simple.slopes(),
        }
    }

    /// Number of maximal intervals of constant slope.
    pub fn num_regions(&self) -> usize {
        self.simplify().knots().len() + 1
    }

    /// Exact evaluation. Non-finite input propagates; see [`Self::try_eval`].
    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Affine {
                slope,
                value_at_zero,
            } => value_at_zero + slope * x,
            Repr::Knotted {
                knots,
                values,
                left_slope,
                right_slope,
            } => {
                let n = knots.len();
                if x <= knots[0] {
                    return values[0] + left_slope * (x - knots[0]);
                }
                if x >= knots[n - 1] {
                    return values[n - 1] + right_slope * (x - knots[n - 1]);
                }
                // knots[i] <= x < knots[i + 1]
                let i = knots.partition_point(|&k| k <= x) - 1;
                let t = (x - knots[i]) / (knots[i + 1] - knots[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("evaluation point"));
        }
        Ok(self.eval(x))
    }

    /// Largest absolute slope. In one dimension this is the Lipschitz
    /// constant for every p-norm.
    pub fn lipschitz(&self) -> f64 {
        self.slopes().into_iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Second-order total variation: the sum of absolute slope changes.
    pub fn tv2(&self) -> f64 {
        self.simplify()
            .slopes()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .sum()
    }

    /// Canonical form: drops every knot whose two adjacent slopes agree.
    pub fn simplify(&self) -> Self {
        let Repr::Knotted {
            knots,
            values,
            left_slope,
            right_slope,
        } = &self.repr
        else {
            return self.clone();
        };
        let n = knots.len();
        let mut kk: Vec<f64> = Vec::with_capacity(n);
        let mut vv: Vec<f64> = Vec::with_capacity(n);
        for i in 0..n {
            let slope_in = match (kk.last(), vv.last()) {
                (Some(&k), Some(&v)) => (values[i] - v) / (knots[i] - k),
                _ => *left_slope,
            };
            let slope_out = if i + 1 < n {
                (values[i + 1] - values[i]) / (knots[i + 1] - knots[i])
            } else {
                *right_slope
            };
            if !slopes_equal(slope_in, slope_out) {
                kk.push(knots[i]);
                vv.push(values[i]);
            }
        }
        if kk.is_empty() {
            let value_at_zero = values[0] - left_slope * knots[0];
            return Self::affine(*left_slope, value_at_zero);
        }
        Self {
            repr: Repr::Knotted {
                knots: kk,
                values: vv,
                left_slope: *left_slope,
                right_slope: *right_slope,
            },
        }
    }

    /// Builds the canonical spline through `points`, evaluating `f` there.
    fn from_eval(
        points: Vec<f64>,
        f: impl Fn(f64) -> f64,
        left_slope: f64,
        right_slope: f64,
        affine_value_at_zero: impl FnOnce() -> f64,
    ) -> Self {
        let points = sort_dedup(points);
        if points.is_empty() {
            debug_assert!(slopes_equal(left_slope, right_slope));
            return Self::affine(left_slope, affine_value_at_zero());
        }
        let values = points.iter().map(|&x| f(x)).collect();
        Self {
            repr: Repr::Knotted {
                knots: points,
                values,
                left_slope,
                right_slope,
            },
        }
        .simplify()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearSpline1D) -> Self {
        let outer = self;
        let outer_knots = outer.knots();
        // outer knots strictly inside the open value interval (lo, hi)
        let knots_between = |lo: f64, hi: f64| -> &[f64] {
            let start = outer_knots.partition_point(|&t| t <= lo);
            let end = outer_knots.partition_point(|&t| t < hi);
            if start < end {
                &outer_knots[start..end]
            } else {
                &[]
            }
        };
        let mut cands: Vec<f64> = inner.knots().to_vec();
        match &inner.repr {
            Repr::Affine {
                slope,
                value_at_zero,
            } => {
                if *slope != 0.0 {
                    cands.extend(outer_knots.iter().map(|&t| (t - value_at_zero) / slope));
                }
            }
            Repr::Knotted {
                knots,
                values,
                left_slope,
                right_slope,
            } => {
                let n = knots.len();
                if *left_slope > 0.0 {
                    for &t in knots_between(f64::NEG_INFINITY, values[0]) {
                        cands.push(knots[0] + (t - values[0]) / left_slope);
                    }
                } else if *left_slope < 0.0 {
                    for &t in knots_between(values[0], f64::INFINITY) {
                        cands.push(knots[0] + (t - values[0]) / left_slope);
                    }
                }
                for i in 0..n.saturating_sub(1) {
                    let (v0, v1) = (values[i], values[i + 1]);
                    if v0 == v1 {
                        continue;
                    }
                    let (k0, k1) = (knots[i], knots[i + 1]);
                    for &t in knots_between(v0.min(v1), v0.max(v1)) {
                        cands.push(k0 + (t - v0) * (k1 - k0) / (v1 - v0));
                    }
                }
                if *right_slope > 0.0 {
                    for &t in knots_between(values[n - 1], f64::INFINITY) {
                        cands.push(knots[n - 1] + (t - values[n - 1]) / right_slope);
                    }
                } else if *right_slope < 0.0 {
                    for &t in knots_between(f64::NEG_INFINITY, values[n - 1]) {
                        cands.push(knots[n - 1] + (t - values[n - 1]) / right_slope);
                    }
                }
            }
        }
        let outer_slope_at = |s: f64, toward_plus: bool| -> f64 {
            // slope of the result on a ray where inner has slope s
            if s == 0.0 {
                0.0
            } else if (s > 0.0) == toward_plus {
                s * outer.right_slope()
            } else {
                s * outer.left_slope()
            }
        };
        let left = outer_slope_at(inner.left_slope(), false);
        let right = outer_slope_at(inner.right_slope(), true);
        Self::from_eval(
            cands,
            |x| outer.eval(inner.eval(x)),
            left,
            right,
            || outer.eval(inner.eval(0.0)),
        )
    }

    fn extremum(&self, other: &Self, take_max: bool) -> Self {
        let f = self;
        let g = other;
        let pick = |a: f64, b: f64| if take_max { a.max(b) } else { a.min(b) };
        let diff = |x: f64| f.eval(x) - g.eval(x);
        let union = sort_dedup(f.knots().iter().chain(g.knots()).copied().collect());
        let mut cands = union.clone();
        if union.is_empty() {
            let ds = f.left_slope() - g.left_slope();
            if ds != 0.0 {
                cands.push(-diff(0.0) / ds);
            }
        } else {
            let first = union[0];
            let ds = f.left_slope() - g.left_slope();
            if ds != 0.0 {
                let x = first - diff(first) / ds;
                if x < first {
                    cands.push(x);
                }
            }
            for w in union.windows(2) {
                let (da, db) = (diff(w[0]), diff(w[1]));
                if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
                    cands.push(w[0] + (w[1] - w[0]) * da / (da - db));
                }
            }
            let last = union[union.len() - 1];
            let ds = f.right_slope() - g.right_slope();
            if ds != 0.0 {
                let x = last - diff(last) / ds;
                if x > last {
                    cands.push(x);
                }
            }
        }
        let cands = sort_dedup(cands);
        // Which function dominates on each outer ray.
        let anchor_l = cands.first().copied().unwrap_or(0.0);
        let anchor_r = cands.last().copied().unwrap_or(0.0);
        let f_wins_left = {
            let (fs, gs) = (f.left_slope(), g.left_slope());
            // toward -inf the smaller slope ends up larger
            let f_larger = if fs != gs { fs < gs } else { diff(anchor_l) >= 0.0 };
            f_larger == take_max
        };
        let f_wins_right = {
            let (fs, gs) = (f.right_slope(), g.right_slope());
            let f_larger = if fs != gs { fs > gs } else { diff(anchor_r) >= 0.0 };
            f_larger == take_max
        };
        let left = if f_wins_left { f.left_slope() } else { g.left_slope() };
        let right = if f_wins_right { f.right_slope() } else { g.right_slope() };
        Self::from_eval(
            cands,
            |x| pick(f.eval(x), g.eval(x)),
            left,
            right,
            || pick(f.eval(0.0), g.eval(0.0)),
        )
    }

    /// Pointwise maximum, with crossing points inserted as knots.
    pub fn max(&self, other: &Self) -> Self {
        self.extremum(other, true)
    }

    /// Pointwise minimum, with crossing points inserted as knots.
    pub fn min(&self, other: &Self) -> Self {
        self.extremum(other, false)
    }

    /// `sum_i c_i f_i(x) + constant`.
    pub fn linear_combination(terms: &[(f64, &LinearSpline1D)], constant: f64) -> Self {
        let cands: Vec<f64> = terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .flat_map(|(_, f)| f.knots().iter().copied())
            .collect();
        let eval = |x: f64| constant + terms.iter().map(|(c, f)| c * f.eval(x)).sum::<f64>();
        let left = terms.iter().map(|(c, f)| c * f.left_slope()).sum();
        let right = terms.iter().map(|(c, f)| c * f.right_slope()).sum();
        Self::from_eval(cands, eval, left, right, || eval(0.0))
    }

    /// `a * self(x) + b`.
    pub fn scale_shift(&self, a: f64, b: f64) -> Self {
        Self::linear_combination(&[(a, self)], b)
    }

    /// `x -> -self(x)`.
    pub fn negate(&self) -> Self {
        match &self.repr {
            Repr::Affine {
                slope,
                value_at_zero,
            } => Self::affine(-slope, -value_at_zero),
            Repr::Knotted {
                knots,
                values,
                left_slope,
                right_slope,
            } => Self {
                repr: Repr::Knotted {
                    knots: knots.clone(),
                    values: values.iter().map(|v| -v).collect(),
                    left_slope: -left_slope,
                    right_slope: -right_slope,
                },
            },
        }
    }

    /// `x -> self(-x)`.
    pub fn mirror(&self) -> Self {
        match &self.repr {
            Repr::Affine {
                slope,
                value_at_zero,
            } => Self::affine(-slope, *value_at_zero),
            Repr::Knotted {
                knots,
                values,
                left_slope,
                right_slope,
            } => Self {
                repr: Repr::Knotted {
                    knots: knots.iter().rev().map(|k| -k).collect(),
                    values: values.iter().rev().copied().collect(),
                    left_slope: -right_slope,
                    right_slope: -left_slope,
                },
            },
        }
    }

    /// Linear interpolant of the samples, constant outside their range.
    pub fn from_samples(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySamples);
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::NonFinite("sample"));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots: Vec<f64> = Vec::with_capacity(pts.len());
        let mut values: Vec<f64> = Vec::with_capacity(pts.len());
        for (x, y) in pts {
            if let (Some(&k), Some(&v)) = (knots.last(), values.last()) {
                if x - k <= KNOT_TOL {
                    if (y - v).abs() > KNOT_TOL * v.abs().max(1.0) {
                        return Err(Error::InconsistentSamples {
                            x: format!("{x}"),
                            y0: v,
                            y1: y,
                        });
                    }
                    continue;
                }
            }
            knots.push(x);
            values.push(y);
        }
        Ok(Self::new(knots, values, 0.0, 0.0)?.simplify())
    }

    /// Largest absolute difference to `other` over `grid`.
    pub fn max_abs_diff_on(&self, other: &Self, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Evaluation grid deciding equality of CPWL functions: all knots, all
/// midpoints between consecutive knots and `n` uniform points over
/// `[min knot - margin, max knot + margin]`.
pub fn oracle_grid(knots: &[f64], n: usize, margin: f64) -> Vec<f64> {
    let mut ks: Vec<f64> = knots.to_vec();
    ks.sort_by(|a, b| a.total_cmp(b));
    let (lo, hi) = match (ks.first(), ks.last()) {
        (Some(&a), Some(&b)) => (a - margin, b + margin),
        _ => (-margin, margin),
    };
    let mut grid = ks.clone();
    grid.extend(ks.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    if n == 1 {
        grid.push(0.5 * (lo + hi));
    } else {
        let step = (hi - lo) / (n - 1) as f64;
        grid.extend((0..n).map(|i| lo + step * i as f64));
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat() -> LinearSpline1D {
        LinearSpline1D::new(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], 0.0, 0.0).unwrap()
    }

    fn sigma(k: i32) -> LinearSpline1D {
        LinearSpline1D::abs_shifted(0.0, -0.5f64.powi(k))
    }

    #[test]
    fn eval_examples() {
        assert_eq!(hat().eval(0.0), 1.0);
        assert_eq!(hat().eval(0.5), 0.5);
        assert_eq!(hat().eval(-7.0), 0.0);
        assert_eq!(LinearSpline1D::identity().eval(7.25), 7.25);
        assert!(hat().try_eval(f64::NAN).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(hat().lipschitz(), 1.0);
        assert_eq!(LinearSpline1D::abs_shifted(0.0, -0.5).lipschitz(), 1.0);
        assert_eq!(LinearSpline1D::affine(-3.0, 2.0).lipschitz(), 3.0);
    }

    #[test]
    fn tv2_examples() {
        assert_eq!(hat().tv2(), 4.0);
        let two_abs = LinearSpline1D::new(vec![0.5], vec![0.0], -2.0, 2.0).unwrap();
        assert_eq!(two_abs.tv2(), 4.0);
        assert_eq!(sigma(1).tv2(), 2.0);
        let f3 = sigma(3).compose(&sigma(2).compose(&sigma(1)));
        assert_eq!(f3.tv2(), 14.0);
    }

    #[test]
    fn compose_sawtooth_two() {
        let f2 = sigma(2).compose(&sigma(1));
        assert_eq!(f2.num_regions(), 4);
        assert_eq!(f2.knots(), &[-0.5, 0.0, 0.5]);
        assert_eq!(f2.tv2(), 6.0);
    }

    #[test]
    fn compose_with_identity() {
        let id = LinearSpline1D::identity();
        assert_eq!(id.compose(&hat()), hat().simplify());
        assert_eq!(hat().compose(&id), hat().simplify());
    }

    #[test]
    fn compose_constant_inner_region_hitting_knot() {
        // inner constant 0 on [0, 1], exactly at the outer knot
        let inner =
            LinearSpline1D::new(vec![0.0, 1.0], vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let outer = LinearSpline1D::abs_shifted(0.0, 0.0);
        let h = outer.compose(&inner);
        for x in [-2.0, -0.5, 0.0, 0.3, 1.0, 2.5] {
            assert_eq!(h.eval(x), outer.eval(inner.eval(x)));
        }
        assert_eq!(h.knots(), &[0.0, 1.0]);
    }

    #[test]
    fn compose_affine_inner() {
        let inner = LinearSpline1D::affine(-2.0, 1.0);
        let h = hat().compose(&inner);
        for i in -40..40 {
            let x = i as f64 * 0.05;
            assert!((h.eval(x) - hat().eval(inner.eval(x))).abs() < 1e-15);
        }
        assert_eq!(LinearSpline1D::affine(3.0, 1.0).compose(&inner), LinearSpline1D::affine(-6.0, 4.0));
    }

    #[test]
    fn max_min_examples() {
        let id = LinearSpline1D::identity();
        let neg = LinearSpline1D::affine(-1.0, 0.0);
        let abs = id.max(&neg);
        assert_eq!(abs, LinearSpline1D::abs_shifted(0.0, 0.0));
        assert_eq!(hat().max(&hat()), hat().simplify());
        let m = id.min(&LinearSpline1D::constant(1.0));
        assert_eq!(m.knots(), &[1.0]);
        assert_eq!(m.slopes(), vec![1.0, 0.0]);
    }

    #[test]
    fn max_of_parallel_affines() {
        let a = LinearSpline1D::affine(1.0, 0.0);
        let b = LinearSpline1D::affine(1.0, 2.0);
        assert_eq!(a.max(&b), b);
        assert_eq!(a.min(&b), a);
    }

    #[test]
    fn max_crossing_on_outer_ray() {
        // hat vs the line 0.25 x - 2: crossings only on the rays
        let line = LinearSpline1D::affine(0.25, -2.0);
        let m = hat().min(&line);
        let grid = oracle_grid(&[-20.0, 20.0], 2001, 1.0);
        for &x in &grid {
            assert!((m.eval(x) - hat().eval(x).min(line.eval(x))).abs() < 1e-12);
        }
        assert_eq!(m.knots(), &[8.0]);
    }

    #[test]
    fn samples_examples() {
        let s = LinearSpline1D::from_samples(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(s.knots(), &[0.0, 1.0]);
        assert_eq!(s.lipschitz(), 1.0);
        let v = LinearSpline1D::from_samples(&[(1.0, 1.0), (-1.0, 1.0), (0.0, 0.0)]).unwrap();
        assert_eq!(v.eval(-0.5), 0.5);
        assert_eq!(v.eval(3.0), 1.0);
        assert_eq!(v.eval(-3.0), 1.0);
        let err = LinearSpline1D::from_samples(&[(0.0, 0.0), (0.0, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("inconsistent samples"));
        assert!(LinearSpline1D::from_samples(&[(0.0, 2.0), (0.0, 2.0)]).is_ok());
        assert!(LinearSpline1D::from_samples(&[]).is_err());
    }

    #[test]
    fn single_sample_is_constant() {
        let s = LinearSpline1D::from_samples(&[(3.0, -1.0)]).unwrap();
        assert_eq!(s, LinearSpline1D::constant(-1.0));
    }

    #[test]
    fn simplify_removes_redundant_knots() {
        let s = LinearSpline1D::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], 1.0, 0.0).unwrap();
        let c = s.simplify();
        assert_eq!(c.knots(), &[2.0]);
        let lin = LinearSpline1D::new(vec![0.0, 1.0], vec![1.0, 3.0], 2.0, 2.0).unwrap();
        assert_eq!(lin.simplify(), LinearSpline1D::affine(2.0, 1.0));
    }

    #[test]
    fn mirror_and_negate() {
        let f = LinearSpline1D::from_slopes(vec![-1.0, 2.0], 0.5, &[0.3, -1.0, 0.7]).unwrap();
        let m = f.mirror();
        let n = f.negate();
        for i in -30..30 {
            let x = i as f64 * 0.2;
            assert!((m.eval(x) - f.eval(-x)).abs() < 1e-14);
            assert_eq!(n.eval(x), -f.eval(x));
        }
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(LinearSpline1D::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.0, 0.0).is_err());
        assert!(LinearSpline1D::new(vec![0.0], vec![0.0, 1.0], 0.0, 0.0).is_err());
        assert!(LinearSpline1D::new(vec![0.0], vec![f64::INFINITY], 0.0, 0.0).is_err());
        assert!(LinearSpline1D::from_slopes(vec![0.0], 0.0, &[1.0]).is_err());
    }

    #[test]
    fn profile_counts_regions() {
        let p = hat().profile();
        assert_eq!(p.region_count(), 4);
        assert_eq!(p.slopes, vec![0.0, 1.0, -1.0, 0.0]);
        assert_eq!(p.breakpoints.len() + 1, p.region_count());
    }
}
