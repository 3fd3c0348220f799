//! Seeded generators for splines, matrices and constrained networks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use rand::SeedableRng;

use crate::cpwl1d::LinearSpline1D;
use crate::error::Result;
use crate::lipnet::{operator_norm, ActivationSpec, ConstrainedNet, ConstraintSpec, Layer};
use crate::norm::NormIndex;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut Rng64) -> f64 {
    StandardNormal.sample(rng)
}

/// Spline with `k ~ U{0..=max_knots}` knots drawn i.i.d. standard normal,
/// slopes uniform in `[−1, 1]` and a standard normal value at the first knot.
pub fn random_spline(rng: &mut Rng64, max_knots: usize) -> LinearSpline1D {
    let k = rng.random_range(0..=max_knots);
    random_spline_with(rng, k, |r| r.random_range(-1.0..=1.0))
}

/// Spline with exactly `k` knots (before simplification) and slopes drawn
/// by `slope`.
pub fn random_spline_with(rng: &mut Rng64, k: usize, mut slope: impl FnMut(&mut Rng64) -> f64) -> LinearSpline1D {
    let mut knots: Vec<f64> = (0..k).map(|_| normal(rng)).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let slopes: Vec<f64> = (0..=knots.len()).map(|_| slope(rng)).collect();
    let first = normal(rng);
    if knots.is_empty() {
        return LinearSpline1D::affine(slopes[0], first);
    }
    LinearSpline1D::from_slopes(knots, first, &slopes)
        .expect("sorted distinct knots")
        .simplify()
}

/// Spline whose slopes all have magnitude one. Knots and values are
/// rounded to multiples of 2^-24 so that the slopes are exactly ±1.
pub fn random_unit_slope_spline(rng: &mut Rng64, max_knots: usize) -> LinearSpline1D {
    let k = rng.random_range(0..=max_knots);
    let grid = (1u64 << 24) as f64;
    let mut knots: Vec<f64> = (0..k).map(|_| (normal(rng) * grid).round() / grid).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let slopes: Vec<f64> = (0..=knots.len())
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let first = (normal(rng) * grid).round() / grid;
    if knots.is_empty() {
        return LinearSpline1D::affine(slopes[0], first);
    }
    LinearSpline1D::from_slopes(knots, first, &slopes)
        .expect("sorted distinct knots")
        .simplify()
}

pub fn random_matrix(rng: &mut Rng64, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

pub fn random_vector(rng: &mut Rng64, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

/// Scales `w` to `‖w‖_p = 1` exactly when the norm is computable, otherwise
/// to a known upper bound of 1.
pub fn normalize_to_unit(w: &DMatrix<f64>, p: NormIndex) -> DMatrix<f64> {
    let n = operator_norm(w, p).value;
    if n == 0.0 {
        return w.clone();
    }
    let mut out = w / n;
    let again = operator_norm(&out, p).value;
    if again > 1.0 {
        out /= again;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActivationFamily {
    Relu,
    Leaky,
}

/// Random `ReLU` or leaky CPWL activation from the unit-slope-on-an-interval
/// class: slope `c ∈ [0, 0.9]` outside, interval around a normal center.
pub fn random_activation(rng: &mut Rng64, family: ActivationFamily) -> ActivationSpec {
    match family {
        ActivationFamily::Relu => ActivationSpec::Relu,
        ActivationFamily::Leaky => {
            let c = rng.random_range(0.0..=0.9);
            let center = normal(rng);
            let half = rng.random_range(0.1..1.5);
            let (lo, hi) = match rng.random_range(0..4) {
                0 => (center - half, f64::INFINITY),
                1 => (f64::NEG_INFINITY, center + half),
                _ => (center - half, center + half),
            };
            ActivationSpec::leaky(c, lo, hi, 0.5 * normal(rng))
        }
    }
}

/// Scalar-output net with the given hidden widths whose weights all have
/// `‖W‖_p = 1` (or a certified bound of 1 where the norm is not computable).
pub fn random_constrained_net(
    rng: &mut Rng64,
    input_dim: usize,
    hidden: &[usize],
    family: ActivationFamily,
    p: NormIndex,
) -> Result<ConstrainedNet> {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input_dim;
    for &w in hidden {
        let weight = normalize_to_unit(&random_matrix(rng, w, prev), p);
        let bias = random_vector(rng, w) * 0.5;
        layers.push(Layer::new(weight, bias, Some(random_activation(rng, family))));
        prev = w;
    }
    let weight = normalize_to_unit(&random_matrix(rng, 1, prev), p);
    layers.push(Layer::new(weight, random_vector(rng, 1) * 0.5, None));
    ConstrainedNet::new(layers, ConstraintSpec::pnorm(p))
}
