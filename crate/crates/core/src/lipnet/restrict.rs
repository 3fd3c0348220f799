use crate::cpwl1d::LinearSpline1D;
use crate::error::Result;

use super::{ActivationSpec, ConstrainedNet};

fn apply(act: &ActivationSpec, z: Vec<LinearSpline1D>) -> Vec<LinearSpline1D> {
    match act {
        ActivationSpec::Relu | ActivationSpec::LeakyCpwl { .. } | ActivationSpec::Spline(_) => z
            .iter()
            .enumerate()
            .map(|(i, zi)| act.neuron_spline(i).expect("component-wise").compose(zi))
            .collect(),
        ActivationSpec::GroupSort {
            group_size,
            passthrough,
        } => {
            let sorted = z.len() - passthrough;
            let mut out = z;
            for start in (0..sorted).step_by(*group_size) {
                // odd-even transposition on the group
                let g = &mut out[start..start + group_size];
                for round in 0..*group_size {
                    let mut i = round % 2;
                    while i + 1 < g.len() {
                        let lo = g[i].min(&g[i + 1]);
                        let hi = g[i].max(&g[i + 1]);
                        g[i] = lo;
                        g[i + 1] = hi;
                        i += 2;
                    }
                }
            }
            out
        }
        ActivationSpec::Householder { v } => {
            let m = v.len();
            let mut out = Vec::with_capacity(z.len());
            for chunk in z.chunks(m) {
                // σ_v(z) = z − 2 min(vᵀz, 0) v
                let terms: Vec<(f64, &LinearSpline1D)> = v.iter().copied().zip(chunk).collect();
                let s = LinearSpline1D::linear_combination(&terms, 0.0).min(&LinearSpline1D::constant(0.0));
                for (zi, vi) in chunk.iter().zip(v) {
                    out.push(LinearSpline1D::linear_combination(&[(1.0, zi), (-2.0 * vi, &s)], 0.0));
                }
            }
            out
        }
    }
}

pub(crate) fn restrict(net: &ConstrainedNet, origin: &[f64], direction: &[f64]) -> Result<Vec<LinearSpline1D>> {
    let mut h: Vec<LinearSpline1D> = origin
        .iter()
        .zip(direction)
        .map(|(&o, &d)| LinearSpline1D::affine(d, o))
        .collect();
    for layer in net.layers() {
        let z: Vec<LinearSpline1D> = (0..layer.output_dim())
            .map(|r| {
                let terms: Vec<(f64, &LinearSpline1D)> = (0..layer.input_dim())
                    .filter(|&c| layer.weight[(r, c)] != 0.0)
                    .map(|c| (layer.weight[(r, c)], &h[c]))
                    .collect();
                LinearSpline1D::linear_combination(&terms, layer.bias[r])
            })
            .collect();
        h = match &layer.activation {
            Some(act) => apply(act, z),
            None => z,
        };
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::super::{ConstraintSpec, Layer};
    use super::*;

    #[test]
    fn restriction_matches_forward() {
        let w1 = DMatrix::from_row_slice(4, 2, &[0.3, -0.2, 0.5, 0.1, -0.4, 0.4, 0.2, 0.2]);
        let b1 = DVector::from_vec(vec![0.1, -0.2, 0.0, 0.3]);
        let v = std::f64::consts::FRAC_1_SQRT_2;
        let layers = vec![
            Layer::new(w1.clone(), b1.clone(), Some(ActivationSpec::max_min())),
            Layer::new(
                DMatrix::identity(4, 4),
                DVector::zeros(4),
                Some(ActivationSpec::Householder { v: vec![v, -v] }),
            ),
            Layer::new(w1.transpose(), DVector::zeros(2), Some(ActivationSpec::leaky(0.3, -0.1, 0.2, 0.05))),
            Layer::linear(DMatrix::from_row_slice(1, 2, &[1.0, -0.5])),
        ];
        let net = ConstrainedNet::new(layers, ConstraintSpec::None).unwrap();
        let o = [0.2, -0.1];
        let d = [1.0, 0.7];
        let f = net.restrict_scalar(&o, &d).unwrap();
        for k in 0..400 {
            let t = -5.0 + k as f64 * 0.025;
            let x = [o[0] + t * d[0], o[1] + t * d[1]];
            let y = net.forward(&x).unwrap()[0];
            assert!((f.eval(t) - y).abs() < 1e-12, "t = {t}");
        }
    }
}
