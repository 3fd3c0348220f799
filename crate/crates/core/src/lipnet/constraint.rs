use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::{pnorm, NormIndex};

const POWER_SEED: u64 = 0x5eed_0002;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;
const ORTHO_TOL: f64 = 1e-10;
const ORTHO_MAX_ITER: usize = 200;
const RANK_TOL: f64 = 1e-12;

/// Slack allowed when checking `‖W‖_p ≤ 1` and orthogonality after projection.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConstraintSpec {
    Pnorm { p: NormIndex },
    Orthogonal,
    None,
}

impl ConstraintSpec {
    pub fn pnorm(p: NormIndex) -> Self {
        Self::Pnorm { p }
    }

    pub fn spectral() -> Self {
        Self::Pnorm { p: NormIndex::TWO }
    }

    /// Norm used to measure layers and the Lipschitz bound.
    pub fn norm_index(&self) -> NormIndex {
        match self {
            Self::Pnorm { p } => *p,
            _ => NormIndex::TWO,
        }
    }

    pub fn project(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Self::Pnorm { p } => Ok(project_pnorm(w, *p)),
            Self::Orthogonal => project_orthogonal(w),
            Self::None => Ok(w.clone()),
        }
    }
}

/// An operator norm value; `exact` is false when only an upper bound is known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorNorm {
    pub value: f64,
    pub exact: bool,
}

/// Largest singular value by power iteration on `WᵀW`.
pub fn spectral_norm(w: &DMatrix<f64>) -> f64 {
    let n = w.ncols();
    if n == 0 || w.nrows() == 0 || w.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut v = nalgebra::DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    v /= v.norm();
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let wv = w * &v;
        let next = wv.norm();
        let mut u = w.transpose() * wv;
        let un = u.norm();
        if un == 0.0 {
            // start vector in the kernel: restart along a fixed axis
            v = nalgebra::DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
            continue;
        }
        u /= un;
        v = u;
        if (next - sigma).abs() <= POWER_TOL * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    (w * &v).norm().max(sigma)
}

fn max_col_sum(w: &DMatrix<f64>) -> f64 {
    w.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_row_sum(w: &DMatrix<f64>) -> f64 {
    w.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖W‖_{p→p}`. Exact for p ∈ {1, 2, ∞} and for matrices with at most one
/// non-zero row or column; otherwise the Riesz–Thorin bound
/// `‖W‖₁^{1/p} ‖W‖_∞^{1−1/p}`.
pub fn operator_norm(w: &DMatrix<f64>, p: NormIndex) -> OperatorNorm {
    let exact = |value| OperatorNorm { value, exact: true };
    let nonzero_rows: Vec<usize> = (0..w.nrows()).filter(|&i| w.row(i).iter().any(|&x| x != 0.0)).collect();
    match nonzero_rows.as_slice() {
        [] => return exact(0.0),
        [i] => {
            let row: Vec<f64> = w.row(*i).iter().copied().collect();
            return exact(pnorm(&row, p.dual()));
        }
        _ => {}
    }
    let nonzero_cols: Vec<usize> = (0..w.ncols()).filter(|&j| w.column(j).iter().any(|&x| x != 0.0)).collect();
    if let [j] = nonzero_cols.as_slice() {
        let col: Vec<f64> = w.column(*j).iter().copied().collect();
        return exact(pnorm(&col, p));
    }
    if p == NormIndex::ONE {
        exact(max_col_sum(w))
    } else if p.is_inf() {
        exact(max_row_sum(w))
    } else if p == NormIndex::TWO {
        exact(spectral_norm(w))
    } else {
        let t = 1.0 / p.value();
        OperatorNorm {
            value: max_col_sum(w).powf(t) * max_row_sum(w).powf(1.0 - t),
            exact: false,
        }
    }
}

/// Rescales `W` so that `‖W‖_p ≤ 1`; matrices already inside the ball are
/// returned unchanged.
pub fn project_pnorm(w: &DMatrix<f64>, p: NormIndex) -> DMatrix<f64> {
    let n = operator_norm(w, p).value;
    if n <= 1.0 {
        return w.clone();
    }
    let mut out = w / n;
    // guard against the power iteration underestimating by a few ulps
    let again = operator_norm(&out, p).value;
    if again > 1.0 {
        out /= again;
    }
    out
}

/// `‖WᵀW − I‖_F` for tall or square `W`, `‖WWᵀ − I‖_F` for wide `W`.
pub fn orthogonality_residual(w: &DMatrix<f64>) -> f64 {
    let g = if w.nrows() >= w.ncols() {
        w.transpose() * w
    } else {
        w * w.transpose()
    };
    let n = g.nrows();
    (g - DMatrix::identity(n, n)).norm()
}

/// Nearest matrix with orthonormal columns (or rows, for wide `W`).
pub fn project_orthogonal(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("weight matrix"));
    }
    if w.nrows() < w.ncols() {
        return project_orthogonal(&w.transpose()).map(|q| q.transpose());
    }
    if w.is_empty() {
        return Err(Error::RankDeficient);
    }
    let svd = w.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if s_max == 0.0 || s_min <= RANK_TOL * s_max {
        return Err(Error::RankDeficient);
    }
    let n = w.ncols();
    let id = DMatrix::<f64>::identity(n, n);
    let mut q = w / s_max;
    for _ in 0..ORTHO_MAX_ITER {
        let g = q.transpose() * &q;
        let residual = (&g - &id).norm();
        if residual < ORTHO_TOL {
            return Ok(q);
        }
        if !residual.is_finite() || residual > 1e3 {
            break;
        }
        q = &q * (&id * 3.0 - g) * 0.5;
    }
    // polar factor U Vᵀ
    let u = svd.u.ok_or_else(|| Error::Internal("svd without U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Internal("svd without Vᵀ".into()))?;
    Ok(u * vt)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerCheck {
    pub index: usize,
    pub weight_norm: f64,
    pub weight_norm_exact: bool,
    pub orthogonality_residual: f64,
    pub activation_lipschitz: Option<f64>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub constraint: ConstraintSpec,
    pub p: NormIndex,
    pub layers: Vec<LayerCheck>,
    /// Product of layer norms and activation Lipschitz constants.
    pub lipschitz_bound: f64,
    pub lipschitz_bound_exact_factors: bool,
    pub violations: Vec<String>,
    pub satisfied: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        assert!((spectral_norm(&d) - 4.0).abs() < 1e-12);
        let ones = DMatrix::from_element(2, 2, 1.0);
        assert!((spectral_norm(&ones) - 2.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&DMatrix::zeros(3, 2)), 0.0);
    }

    #[test]
    fn projection_examples() {
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let pw = project_pnorm(&w, NormIndex::TWO);
        assert!((pw - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5])).norm() < 1e-12);
        let w = DMatrix::from_row_slice(1, 2, &[0.0, 4.0]);
        assert_eq!(project_pnorm(&w, NormIndex::INF), DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        let w = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let q = project_orthogonal(&w).unwrap();
        assert!((q - DMatrix::identity(2, 2)).norm() < 1e-10);
        assert_eq!(project_orthogonal(&DMatrix::zeros(2, 2)), Err(Error::RankDeficient));
    }

    #[test]
    fn operator_norm_shapes() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.0, 3.0, 1.0, 1.0]);
        assert_eq!(operator_norm(&m, NormIndex::ONE).value, 4.0);
        assert_eq!(operator_norm(&m, NormIndex::INF).value, 5.0);
        let row = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert_eq!(operator_norm(&row, NormIndex::INF).value, 7.0);
        assert_eq!(operator_norm(&row, NormIndex::ONE).value, 4.0);
        let r = operator_norm(&m, NormIndex::new(1.5).unwrap());
        assert!(!r.exact && r.value >= spectral_norm(&m) - 1e-12);
        let padded = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]);
        let r = operator_norm(&padded, NormIndex::new(3.0).unwrap());
        assert!(r.exact);
        assert_eq!(r.value, pnorm(&[3.0, 4.0], NormIndex::new(1.5).unwrap()));
    }

    #[test]
    fn orthogonal_wide_and_tall() {
        let w = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0]);
        let q = project_orthogonal(&w).unwrap();
        assert!(orthogonality_residual(&q) < 1e-10);
        assert_eq!(q.shape(), (2, 3));
        let q = project_orthogonal(&w.transpose()).unwrap();
        assert!(orthogonality_residual(&q) < 1e-10);
    }
}
