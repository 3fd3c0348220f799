//! Constrained feed-forward networks `A_K ∘ σ_{K−1} ∘ A_{K−1} ∘ ⋯ ∘ σ_1 ∘ A_1`.

mod activation;
mod constraint;
mod lp;
mod regions;
mod restrict;

use nalgebra::{DMatrix, DVector};

use crate::cpwl1d::LinearSpline1D;
use crate::error::{Error, Result};
use crate::norm::NormIndex;

pub use activation::{householder_matrix, ActivationSpec, BOUNDARY_TOL};
pub use constraint::{
    operator_norm, orthogonality_residual, project_orthogonal, project_pnorm, spectral_norm, ConstraintReport,
    ConstraintSpec, LayerCheck, OperatorNorm, CHECK_TOL,
};
pub use lp::{chebyshev_margin, INTERIOR_TOL};
pub use regions::{RegionEntry, RegionReport, ENUMERATION_MAX_NEURONS, ENUMERATION_MAX_PATTERNS, UNIT_NORM_TOL};

/// One affine map `z ↦ W z + b`, optionally followed by an activation.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Option<ActivationSpec>,
}

impl Layer {
    pub fn new(weight: DMatrix<f64>, bias: DVector<f64>, activation: Option<ActivationSpec>) -> Self {
        Self {
            weight,
            bias,
            activation,
        }
    }

    pub fn linear(weight: DMatrix<f64>) -> Self {
        let n = weight.nrows();
        Self::new(weight, DVector::zeros(n), None)
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn pre_activation(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.weight * x + &self.bias
    }
}

/// Result of [`ConstrainedNet::jacobian`]. When `x` sat within
/// [`BOUNDARY_TOL`] of an activation boundary, the matrix is taken at the
/// nearby point `evaluated_at` and `on_boundary` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct NetJacobian {
    pub matrix: DMatrix<f64>,
    pub on_boundary: bool,
    pub evaluated_at: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedNet {
    layers: Vec<Layer>,
    constraint: ConstraintSpec,
}

impl ConstrainedNet {
    pub fn new(layers: Vec<Layer>, constraint: ConstraintSpec) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNet("a network needs at least one layer".into()));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.output_dim() {
                return Err(Error::InvalidNet(format!(
                    "layer {k}: bias length {} for {} rows",
                    layer.bias.len(),
                    layer.output_dim()
                )));
            }
            if layer.output_dim() == 0 || layer.input_dim() == 0 {
                return Err(Error::InvalidNet(format!("layer {k} has an empty weight matrix")));
            }
            if layer.weight.iter().chain(layer.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("network parameters"));
            }
            if k > 0 && layers[k - 1].output_dim() != layer.input_dim() {
                return Err(Error::InvalidNet(format!(
                    "layer {k} expects {} inputs but layer {} has {} outputs",
                    layer.input_dim(),
                    k - 1,
                    layers[k - 1].output_dim()
                )));
            }
            if let Some(act) = &layer.activation {
                act.validate(layer.output_dim())
                    .map_err(|e| Error::InvalidNet(format!("layer {k}: {e}")))?;
            }
        }
        Ok(Self { layers, constraint })
    }

    /// Projects every weight matrix onto `constraint` and returns the new net.
    pub fn projected(layers: Vec<Layer>, constraint: ConstraintSpec) -> Result<Self> {
        let layers = layers
            .into_iter()
            .map(|l| {
                Ok(Layer {
                    weight: constraint.project(&l.weight)?,
                    ..l
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, constraint)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn constraint(&self) -> ConstraintSpec {
        self.constraint
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    /// Number of neurons carrying an activation.
    pub fn neuron_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.activation.is_some())
            .map(Layer::output_dim)
            .sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut h = DVector::from_column_slice(x);
        for layer in &self.layers {
            let z = layer.pre_activation(&h);
            h = match &layer.activation {
                Some(act) => DVector::from_vec(act.apply(z.as_slice())),
                None => z,
            };
        }
        h.as_slice().to_vec()
    }

    fn jacobian_at(&self, x: &[f64]) -> (DMatrix<f64>, bool) {
        let mut h = DVector::from_column_slice(x);
        let mut jac = DMatrix::identity(x.len(), x.len());
        let mut boundary = false;
        for layer in &self.layers {
            let z = layer.pre_activation(&h);
            jac = &layer.weight * jac;
            h = match &layer.activation {
                Some(act) => {
                    let (d, b) = act.jacobian(z.as_slice());
                    boundary |= b;
                    jac = d * jac;
                    DVector::from_vec(act.apply(z.as_slice()))
                }
                None => z,
            };
        }
        (jac, boundary)
    }

    /// Derivative of the network at `x`. Off activation boundaries this is
    /// the exact Jacobian of the affine piece containing `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<NetJacobian> {
        self.check_input(x)?;
        let (matrix, boundary) = self.jacobian_at(x);
        if !boundary {
            return Ok(NetJacobian {
                matrix,
                on_boundary: false,
                evaluated_at: x.to_vec(),
            });
        }
        // deterministic nudges of growing size until a regular point is hit
        let d = x.len();
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut last = (matrix, x.to_vec());
        for k in 0..12 {
            let h = scale * 1e-9 * 4f64.powi(k);
            let y: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(i, v)| v + h * (1.0 + i as f64) / d as f64)
                .collect();
            let (m, b) = self.jacobian_at(&y);
            last = (m, y);
            if !b {
                break;
            }
        }
        Ok(NetJacobian {
            matrix: last.0,
            on_boundary: true,
            evaluated_at: last.1,
        })
    }

    /// Layer norms, activation Lipschitz constants and the product bound,
    /// measured in the constraint's norm.
    pub fn check_constraints(&self) -> ConstraintReport {
        self.check_constraints_in(self.constraint.norm_index())
    }

    pub fn check_constraints_in(&self, p: NormIndex) -> ConstraintReport {
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut violations = Vec::new();
        let mut bound = 1.0;
        let mut all_exact = true;
        for (k, layer) in self.layers.iter().enumerate() {
            let norm = operator_norm(&layer.weight, p);
            let residual = orthogonality_residual(&layer.weight);
            let act_lip = layer
                .activation
                .as_ref()
                .map(|a| a.lipschitz(layer.output_dim(), p));
            let mut ok = true;
            match self.constraint {
                ConstraintSpec::Pnorm { .. } => {
                    if norm.value > 1.0 + CHECK_TOL {
                        ok = false;
                        violations.push(format!(
                            "layer {k}: weight {p}-norm {}{}",
                            if norm.exact { "" } else { "bound " },
                            norm.value
                        ));
                    }
                }
                ConstraintSpec::Orthogonal => {
                    if residual > CHECK_TOL {
                        ok = false;
                        violations.push(format!("layer {k}: orthogonality residual {residual:e}"));
                    }
                }
                ConstraintSpec::None => {}
            }
            if let Some((lip, _)) = act_lip {
                if lip > 1.0 + 1e-12 {
                    ok = false;
                    violations.push(format!("layer {k}: activation Lipschitz constant {lip}"));
                }
            }
            bound *= norm.value * act_lip.map_or(1.0, |(l, _)| l);
            all_exact &= norm.exact && act_lip.is_none_or(|(_, e)| e);
            layers.push(LayerCheck {
                index: k,
                weight_norm: norm.value,
                weight_norm_exact: norm.exact,
                orthogonality_residual: residual,
                activation_lipschitz: act_lip.map(|(l, _)| l),
                satisfied: ok,
            });
        }
        ConstraintReport {
            constraint: self.constraint,
            p,
            layers,
            lipschitz_bound: bound,
            lipschitz_bound_exact_factors: all_exact,
            satisfied: violations.is_empty(),
            violations,
        }
    }

    /// Every affine piece of the network, by activation pattern, with the
    /// p-operator norm of its Jacobian.
    pub fn enumerate_regions(&self, p: NormIndex) -> Result<RegionReport> {
        regions::enumerate(self, p)
    }

    /// `t ↦ Φ(origin + t·direction)` as exact splines (one per output).
    pub fn restrict_to_line(&self, origin: &[f64], direction: &[f64]) -> Result<Vec<LinearSpline1D>> {
        self.check_input(origin)?;
        self.check_input(direction)?;
        restrict::restrict(self, origin, direction)
    }

    /// Scalar-output version of [`Self::restrict_to_line`].
    pub fn restrict_scalar(&self, origin: &[f64], direction: &[f64]) -> Result<LinearSpline1D> {
        if self.output_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.output_dim(),
            });
        }
        Ok(self.restrict_to_line(origin, direction)?.remove(0))
    }
}

/// MaxMin written with two orthogonal layers and the spline activations
/// `(x, |x|)`: `W₂ (z₁, |z₂|)` with `z = W₁ x`, `W₁ = H/√2`, `W₂` the same
/// matrix with its rows swapped so the output is sorted ascending.
pub fn maxmin_as_spline_net() -> ConstrainedNet {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let w1 = DMatrix::from_row_slice(2, 2, &[r, r, r, -r]);
    let w2 = DMatrix::from_row_slice(2, 2, &[r, -r, r, r]);
    let act = ActivationSpec::Spline(vec![LinearSpline1D::identity(), LinearSpline1D::abs_shifted(0.0, 0.0)]);
    ConstrainedNet::new(
        vec![Layer::new(w1, DVector::zeros(2), Some(act)), Layer::linear(w2)],
        ConstraintSpec::Orthogonal,
    )
    .expect("valid construction")
}

fn permutation_matrix(perm: &[usize]) -> DMatrix<f64> {
    let n = perm.len();
    let mut m = DMatrix::zeros(n, n);
    for (row, &col) in perm.iter().enumerate() {
        m[(row, col)] = 1.0;
    }
    m
}

/// Sorting network for `n` inputs from MaxMin stages (odd-even transposition).
/// Each stage permutes the comparators' pairs to the front, and the last
/// layer undoes the final permutation, so every weight is a permutation
/// matrix.
pub fn groupsort_as_maxmin_net(n: usize) -> Result<ConstrainedNet> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("group size {n} must be at least 2")));
    }
    let mut layers = Vec::new();
    // position of the current layout: slot -> logical index
    let mut layout: Vec<usize> = (0..n).collect();
    for round in 0..n {
        let first = round % 2;
        let pairs: Vec<usize> = (first..n.saturating_sub(1)).step_by(2).collect();
        if pairs.is_empty() {
            continue;
        }
        let mut order: Vec<usize> = Vec::with_capacity(n);
        for &i in &pairs {
            order.push(i);
            order.push(i + 1);
        }
        let rest: Vec<usize> = (0..n).filter(|i| !order.contains(i)).collect();
        order.extend(rest);
        // slot s of the new layout holds logical index order[s]
        let inv_layout = {
            let mut inv = vec![0; n];
            for (slot, &logical) in layout.iter().enumerate() {
                inv[logical] = slot;
            }
            inv
        };
        let perm: Vec<usize> = order.iter().map(|&logical| inv_layout[logical]).collect();
        layers.push(Layer::new(
            permutation_matrix(&perm),
            DVector::zeros(n),
            Some(ActivationSpec::GroupSort {
                group_size: 2,
                passthrough: n - 2 * pairs.len(),
            }),
        ));
        layout = order;
    }
    let inv_layout = {
        let mut inv = vec![0; n];
        for (slot, &logical) in layout.iter().enumerate() {
            inv[logical] = slot;
        }
        inv
    };
    layers.push(Layer::linear(permutation_matrix(&inv_layout)));
    ConstrainedNet::new(layers, ConstraintSpec::Orthogonal)
}
