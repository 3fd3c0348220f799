use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};

use crate::cpwl1d::LinearSpline1D;
use crate::error::{Error, Result};
use crate::norm::{dot, NormIndex};

use super::constraint::operator_norm;

/// Distance under which a pre-activation counts as sitting on a boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ActivationSpec {
    Relu,
    /// `x + offset` on `[lo, hi]`, slope `c` outside. Either end may be
    /// infinite, which drops the corresponding knot.
    LeakyCpwl { c: f64, lo: f64, hi: f64, offset: f64 },
    /// One spline per neuron.
    Spline(Vec<LinearSpline1D>),
    /// Sorts consecutive groups ascending. The last `passthrough`
    /// coordinates are left untouched.
    GroupSort { group_size: usize, passthrough: usize },
    /// `z` if `v^T z > 0`, `(I - 2 v v^T) z` otherwise, per group of `|v|`.
    Householder { v: Vec<f64> },
}

impl ActivationSpec {
    pub fn max_min() -> Self {
        Self::GroupSort {
            group_size: 2,
            passthrough: 0,
        }
    }

    pub fn leaky(c: f64, lo: f64, hi: f64, offset: f64) -> Self {
        Self::LeakyCpwl { c, lo, hi, offset }
    }

    pub fn is_componentwise(&self) -> bool {
        matches!(self, Self::Relu | Self::LeakyCpwl { .. } | Self::Spline(_))
    }

    pub(crate) fn validate(&self, width: usize) -> Result<()> {
        match self {
            Self::Relu => Ok(()),
            Self::LeakyCpwl { c, lo, hi, offset } => {
                if !(0.0..1.0).contains(c) {
                    return Err(Error::InvalidNet(format!("leaky slope c = {c} must lie in [0, 1)")));
                }
                if lo.is_nan() || hi.is_nan() || lo >= hi || !offset.is_finite() {
                    return Err(Error::InvalidNet(format!("bad unit-slope interval [{lo}, {hi}]")));
                }
                Ok(())
            }
            Self::Spline(s) => {
                if s.len() != width {
                    return Err(Error::InvalidNet(format!(
                        "{} spline activations for width {width}",
                        s.len()
                    )));
                }
                Ok(())
            }
            Self::GroupSort {
                group_size,
                passthrough,
            } => {
                if *group_size < 2 || *passthrough > width || !(width - passthrough).is_multiple_of(*group_size) {
                    return Err(Error::InvalidNet(format!(
                        "group size {group_size} with passthrough {passthrough} does not tile width {width}"
                    )));
                }
                Ok(())
            }
            Self::Householder { v } => {
                if v.is_empty() || !width.is_multiple_of(v.len()) {
                    return Err(Error::InvalidNet(format!(
                        "Householder vector of length {} does not tile width {width}",
                        v.len()
                    )));
                }
                let n = dot(v, v).sqrt();
                if (n - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidNet(format!("Householder vector has norm {n}")));
                }
                Ok(())
            }
        }
    }

    /// The scalar spline applied to neuron `i` (component-wise activations).
    pub fn neuron_spline(&self, i: usize) -> Option<Cow<'_, LinearSpline1D>> {
        match self {
            Self::Relu => Some(Cow::Owned(LinearSpline1D::relu())),
            Self::LeakyCpwl { c, lo, hi, offset } => Some(Cow::Owned(leaky_spline(*c, *lo, *hi, *offset))),
            Self::Spline(s) => s.get(i).map(Cow::Borrowed),
            _ => None,
        }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Self::Relu => z.iter().map(|v| v.max(0.0)).collect(),
            Self::LeakyCpwl { .. } | Self::Spline(_) => z
                .iter()
                .enumerate()
                .map(|(i, &v)| self.neuron_spline(i).expect("component-wise").eval(v))
                .collect(),
            Self::GroupSort {
                group_size,
                passthrough,
            } => {
                let mut out = z.to_vec();
                let sorted = z.len() - passthrough;
                for chunk in out[..sorted].chunks_mut(*group_size) {
                    chunk.sort_by(|a, b| a.total_cmp(b));
                }
                out
            }
            Self::Householder { v } => {
                let mut out = z.to_vec();
                for chunk in out.chunks_mut(v.len()) {
                    let s = dot(v, chunk);
                    if s <= 0.0 {
                        for (c, vi) in chunk.iter_mut().zip(v) {
                            *c -= 2.0 * s * vi;
                        }
                    }
                }
                out
            }
        }
    }

    /// Jacobian at `z` and whether `z` lies within [`BOUNDARY_TOL`] of a
    /// region boundary (where the derivative is not defined).
    pub fn jacobian(&self, z: &[f64]) -> (DMatrix<f64>, bool) {
        let n = z.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut boundary = false;
        match self {
            Self::Relu | Self::LeakyCpwl { .. } | Self::Spline(_) => {
                for (i, &zi) in z.iter().enumerate() {
                    let s = self.neuron_spline(i).expect("component-wise").simplify();
                    let knots = s.knots();
                    if knots.iter().any(|k| (zi - k).abs() <= BOUNDARY_TOL) {
                        boundary = true;
                    }
                    let region = knots.partition_point(|&k| k <= zi);
                    jac[(i, i)] = s.slopes()[region];
                }
            }
            Self::GroupSort {
                group_size,
                passthrough,
            } => {
                let sorted = n - passthrough;
                for start in (0..sorted).step_by(*group_size) {
                    let mut idx: Vec<usize> = (start..start + group_size).collect();
                    idx.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
                    if idx.windows(2).any(|w| (z[w[1]] - z[w[0]]).abs() <= BOUNDARY_TOL) {
                        boundary = true;
                    }
                    for (k, &src) in idx.iter().enumerate() {
                        jac[(start + k, src)] = 1.0;
                    }
                }
                for i in sorted..n {
                    jac[(i, i)] = 1.0;
                }
            }
            Self::Householder { v } => {
                let m = v.len();
                for start in (0..n).step_by(m) {
                    let s = dot(v, &z[start..start + m]);
                    if s.abs() <= BOUNDARY_TOL {
                        boundary = true;
                    }
                    let reflect = s <= 0.0;
                    for r in 0..m {
                        for c in 0..m {
                            let id = if r == c { 1.0 } else { 0.0 };
                            jac[(start + r, start + c)] = if reflect { id - 2.0 * v[r] * v[c] } else { id };
                        }
                    }
                }
            }
        }
        (jac, boundary)
    }

    /// Lipschitz constant with respect to the p-norm, and whether it is exact.
    pub fn lipschitz(&self, width: usize, p: NormIndex) -> (f64, bool) {
        match self {
            Self::Relu => (1.0, true),
            Self::LeakyCpwl { .. } => (1.0, true),
            Self::Spline(s) => (s.iter().map(|f| f.lipschitz()).fold(0.0, f64::max), true),
            Self::GroupSort { .. } => (1.0, true),
            Self::Householder { v } => {
                let _ = width;
                let h = householder_matrix(v);
                let norm = operator_norm(&h, p);
                (norm.value.max(1.0), norm.exact)
            }
        }
    }

    pub(crate) fn units(&self, width: usize) -> Vec<Unit> {
        match self {
            Self::Relu | Self::LeakyCpwl { .. } | Self::Spline(_) => (0..width)
                .map(|i| spline_unit(i, &self.neuron_spline(i).expect("component-wise")))
                .collect(),
            Self::GroupSort {
                group_size,
                passthrough,
            } => {
                let sorted = width - passthrough;
                let mut units: Vec<Unit> = (0..sorted)
                    .step_by(*group_size)
                    .map(|s| sort_unit(s, *group_size))
                    .collect();
                units.extend((sorted..width).map(identity_unit));
                units
            }
            Self::Householder { v } => (0..width).step_by(v.len()).map(|s| householder_unit(s, v)).collect(),
        }
    }
}

pub(crate) fn leaky_spline(c: f64, lo: f64, hi: f64, offset: f64) -> LinearSpline1D {
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => LinearSpline1D::affine(1.0, offset),
        (true, false) => LinearSpline1D::new(vec![lo], vec![lo + offset], c, 1.0).expect("valid"),
        (false, true) => LinearSpline1D::new(vec![hi], vec![hi + offset], 1.0, c).expect("valid"),
        (true, true) => {
            LinearSpline1D::new(vec![lo, hi], vec![lo + offset, hi + offset], c, c).expect("valid")
        }
    }
}

pub fn householder_matrix(v: &[f64]) -> DMatrix<f64> {
    let m = v.len();
    DMatrix::from_fn(m, m, |r, c| (if r == c { 1.0 } else { 0.0 }) - 2.0 * v[r] * v[c])
}

/// Half-space `coeff . z + constant >= 0` over the inputs of one unit.
#[derive(Clone, Debug)]
pub(crate) struct LocalRow {
    pub coeff: Vec<f64>,
    pub constant: f64,
}

/// One linear piece of a unit: the half-spaces selecting it and its affine
/// output map `map * z + offset`.
#[derive(Clone, Debug)]
pub(crate) struct LocalRegion {
    pub rows: Vec<LocalRow>,
    pub map: DMatrix<f64>,
    pub offset: DVector<f64>,
}

/// A block of an activation acting on `start..start + len`. `perturbation`
/// breaks ties on region boundaries: a row with zero slack is kept exactly
/// when `coeff . perturbation > 0`, so every point lands in one region.
#[derive(Clone, Debug)]
pub(crate) struct Unit {
    pub start: usize,
    pub len: usize,
    pub perturbation: Vec<f64>,
    pub regions: Vec<LocalRegion>,
}

fn spline_unit(i: usize, s: &LinearSpline1D) -> Unit {
    let s = s.simplify();
    let knots = s.knots();
    let slopes = s.slopes();
    let regions = (0..slopes.len())
        .map(|r| {
            let mut rows = Vec::new();
            if r > 0 {
                rows.push(LocalRow {
                    coeff: vec![1.0],
                    constant: -knots[r - 1],
                });
            }
            if r < knots.len() {
                rows.push(LocalRow {
                    coeff: vec![-1.0],
                    constant: knots[r],
                });
            }
            // affine piece through a point of the region
            let anchor = if knots.is_empty() { 0.0 } else { knots[r.min(knots.len() - 1)] };
            let slope = slopes[r];
            LocalRegion {
                rows,
                map: DMatrix::from_element(1, 1, slope),
                offset: DVector::from_element(1, s.eval(anchor) - slope * anchor),
            }
        })
        .collect();
    Unit {
        start: i,
        len: 1,
        perturbation: vec![1.0],
        regions,
    }
}

fn identity_unit(i: usize) -> Unit {
    Unit {
        start: i,
        len: 1,
        perturbation: vec![1.0],
        regions: vec![LocalRegion {
            rows: vec![],
            map: DMatrix::identity(1, 1),
            offset: DVector::zeros(1),
        }],
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

fn sort_unit(start: usize, n: usize) -> Unit {
    let regions = permutations(n)
        .into_iter()
        .map(|perm| {
            // output k is input perm[k]; requires z[perm[k]] <= z[perm[k + 1]]
            let rows = perm
                .windows(2)
                .map(|w| {
                    let mut coeff = vec![0.0; n];
                    coeff[w[1]] += 1.0;
                    coeff[w[0]] -= 1.0;
                    LocalRow { coeff, constant: 0.0 }
                })
                .collect();
            let mut map = DMatrix::zeros(n, n);
            for (k, &src) in perm.iter().enumerate() {
                map[(k, src)] = 1.0;
            }
            LocalRegion {
                rows,
                map,
                offset: DVector::zeros(n),
            }
        })
        .collect();
    Unit {
        start,
        len: n,
        perturbation: (1..=n).map(|i| i as f64).collect(),
        regions,
    }
}

fn householder_unit(start: usize, v: &[f64]) -> Unit {
    let m = v.len();
    let identity = LocalRegion {
        rows: vec![LocalRow {
            coeff: v.to_vec(),
            constant: 0.0,
        }],
        map: DMatrix::identity(m, m),
        offset: DVector::zeros(m),
    };
    let reflection = LocalRegion {
        rows: vec![LocalRow {
            coeff: v.iter().map(|x| -x).collect(),
            constant: 0.0,
        }],
        map: householder_matrix(v),
        offset: DVector::zeros(m),
    };
    Unit {
        start,
        len: m,
        perturbation: v.iter().map(|x| -x).collect(),
        regions: vec![identity, reflection],
    }
}
