//! Multivariate CPWL functions written as a minimum over groups of maxima of
//! affine pieces, the Lipschitz-optimal interpolant built from that form, and
//! an exact export of any such lattice to a ReLU network.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lipnet::{ActivationSpec, ConstrainedNet, ConstraintSpec, Layer};
use crate::norm::{dot, pnorm, NormIndex};

/// `x -> <gradient, x> + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece {
    pub gradient: Vec<f64>,
    pub offset: f64,
}

impl AffinePiece {
    pub fn new(gradient: Vec<f64>, offset: f64) -> Self {
        Self { gradient, offset }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(vec![0.0; dim], c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.gradient, x) + self.offset
    }
}

/// `x -> min_i max_j pieces[i][j](x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeCPWL {
    dim: usize,
    groups: Vec<Vec<AffinePiece>>,
}

impl LatticeCPWL {
    pub fn new(dim: usize, groups: Vec<Vec<AffinePiece>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidLattice("no groups".into()));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidLattice(format!("group {i} is empty")));
            }
            for piece in g {
                if piece.gradient.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: piece.gradient.len(),
                    });
                }
                if !piece.offset.is_finite() || piece.gradient.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("affine piece"));
                }
            }
        }
        Ok(Self { dim, groups })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[Vec<AffinePiece>] {
        &self.groups
    }

    pub fn pieces(&self) -> impl Iterator<Item = &AffinePiece> {
        self.groups.iter().flatten()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.groups
            .iter()
            .map(|g| g.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_m ‖gradient_m‖_q`, an upper bound on the p-Lipschitz constant.
    pub fn lipschitz_bound(&self, p: NormIndex) -> f64 {
        let q = p.dual();
        self.pieces()
            .map(|piece| pnorm(&piece.gradient, q))
            .fold(0.0, f64::max)
    }
}

/// Scattered data together with its Lipschitz constant
/// `max_{i,j} |y_i - y_j| / ‖x_i - x_j‖_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationProblem {
    points: Vec<(Vec<f64>, f64)>,
    p: NormIndex,
    lipschitz: f64,
}

impl InterpolationProblem {
    /// Exact duplicate points are merged; duplicates with different values
    /// are rejected.
    pub fn new(points: Vec<(Vec<f64>, f64)>, p: NormIndex) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySamples);
        }
        let dim = points[0].0.len();
        let mut unique: Vec<(Vec<f64>, f64)> = Vec::with_capacity(points.len());
        for (x, y) in points {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("data point"));
            }
            if let Some((_, y0)) = unique.iter().find(|(u, _)| *u == x) {
                if *y0 != y {
                    return Err(Error::InconsistentSamples {
                        x: format!("{x:?}"),
                        y0: *y0,
                        y1: y,
                    });
                }
                continue;
            }
            unique.push((x, y));
        }
        let mut lipschitz: f64 = 0.0;
        for i in 0..unique.len() {
            for j in i + 1..unique.len() {
                let diff: Vec<f64> = sub(&unique[i].0, &unique[j].0);
                let q = (unique[i].1 - unique[j].1).abs() / pnorm(&diff, p);
                lipschitz = lipschitz.max(q);
            }
        }
        Ok(Self {
            points: unique,
            p,
            lipschitz,
        })
    }

    pub fn points(&self) -> &[(Vec<f64>, f64)] {
        &self.points
    }

    pub fn p(&self) -> NormIndex {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.points[0].0.len()
    }

    /// The data Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Vector `u` saturating Hölder's inequality against `xi - xj`:
/// `<u, xi - xj> = ‖u‖_q ‖xi - xj‖_p`.
///
/// For finite `p > 1` the components are `sign(d_k) |d_k|^(p-1)`. For `p = 1`
/// the sign vector of `d` is used; for `p = inf` a signed one-hot vector at
/// the first index of maximal magnitude.
pub fn holder_witness(xi: &[f64], xj: &[f64], p: NormIndex) -> Result<Vec<f64>> {
    if xi.len() != xj.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.len(),
            got: xj.len(),
        });
    }
    let d = sub(xi, xj);
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::CoincidentPoints);
    }
    let pv = p.value();
    let u = if pv.is_infinite() {
        let mut k0 = 0;
        for (k, v) in d.iter().enumerate() {
            if v.abs() > d[k0].abs() {
                k0 = k;
            }
        }
        let mut u = vec![0.0; d.len()];
        u[k0] = d[k0].signum();
        u
    } else if pv == 1.0 {
        d.iter()
            .map(|&v| if v == 0.0 { 0.0 } else { v.signum() })
            .collect()
    } else {
        // p / q = p - 1
        d.iter().map(|&v| v.signum() * v.abs().powf(pv - 1.0)).collect()
    };
    Ok(u)
}

/// Interpolant through every data point whose p-Lipschitz constant equals
/// the data Lipschitz constant.
///
/// Group `i` collects the pieces `g_ij`, each passing through `(x_i, y_i)`
/// and `(x_j, y_j)` along the Hölder witness of `x_j - x_i`.
pub fn build_interpolant(prob: &InterpolationProblem) -> Result<LatticeCPWL> {
    let pts = prob.points();
    let dim = prob.dim();
    let p = prob.p();
    let q = p.dual();
    if pts.len() == 1 {
        return LatticeCPWL::new(dim, vec![vec![AffinePiece::constant(dim, pts[0].1)]]);
    }
    let mut groups = Vec::with_capacity(pts.len());
    for (i, (xi, yi)) in pts.iter().enumerate() {
        let mut group = Vec::with_capacity(pts.len() - 1);
        for (j, (xj, yj)) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let piece = if yj == yi {
                AffinePiece::constant(dim, *yi)
            } else {
                let u = holder_witness(xj, xi, p)?;
                let dist = pnorm(&sub(xj, xi), p);
                let c = (yj - yi) / (dist * pnorm(&u, q));
                let gradient: Vec<f64> = u.iter().map(|v| c * v).collect();
                let offset = yi - dot(&gradient, xi);
                AffinePiece::new(gradient, offset)
            };
            group.push(piece);
        }
        groups.push(group);
    }
    LatticeCPWL::new(dim, groups)
}

/// Free function form of [`LatticeCPWL::eval`].
pub fn eval_lattice(g: &LatticeCPWL, x: &[f64]) -> Result<f64> {
    g.eval(x)
}

/// Free function form of [`LatticeCPWL::lipschitz_bound`].
pub fn lattice_lipschitz_bound(g: &LatticeCPWL, p: NormIndex) -> f64 {
    g.lipschitz_bound(p)
}

#[derive(Clone, Copy, Debug)]
enum StageOp {
    Pass(usize),
    Max(usize, usize),
    Min(usize, usize),
}

/// Exact ReLU network for `g`, built from `max(a, b) = b + relu(a - b)` and
/// `min(a, b) = a - relu(a - b)` folded as balanced binary trees: first the
/// maxima inside every group, then the minimum over groups. Every carried
/// value `v` crosses a ReLU layer as `relu(v) - relu(-v)`.
///
/// Weights are left unconstrained; a constrained ReLU network cannot
/// reproduce such lattices in general.
pub fn lattice_to_relu_net(g: &LatticeCPWL) -> Result<ConstrainedNet> {
    let d = g.dim();
    // state: affine map (rows x cols) from the previous layer output
    let pieces: Vec<&AffinePiece> = g.pieces().collect();
    let mut state_w = DMatrix::from_fn(pieces.len(), d, |r, c| pieces[r].gradient[c]);
    let mut state_b = DVector::from_fn(pieces.len(), |r, _| pieces[r].offset);

    let mut stages: Vec<Vec<StageOp>> = Vec::new();
    // index lists of each group inside the current state
    let mut start = 0;
    let mut groups: Vec<Vec<usize>> = g
        .groups()
        .iter()
        .map(|grp| {
            let ids = (start..start + grp.len()).collect();
            start += grp.len();
            ids
        })
        .collect();
    loop {
        let longest = groups.iter().map(Vec::len).max().unwrap_or(1);
        if longest <= 1 {
            break;
        }
        let mut ops = Vec::new();
        let mut next_groups = Vec::with_capacity(groups.len());
        for grp in &groups {
            let mut next = Vec::new();
            for pair in grp.chunks(2) {
                next.push(ops.len());
                ops.push(match pair {
                    [a, b] => StageOp::Max(*a, *b),
                    [a] => StageOp::Pass(*a),
                    _ => unreachable!(),
                });
            }
            next_groups.push(next);
        }
        stages.push(ops);
        groups = next_groups;
    }
    let mut current: Vec<usize> = groups.into_iter().map(|g| g[0]).collect();
    while current.len() > 1 {
        let mut ops = Vec::new();
        let mut next = Vec::new();
        for pair in current.chunks(2) {
            next.push(ops.len());
            ops.push(match pair {
                [a, b] => StageOp::Min(*a, *b),
                [a] => StageOp::Pass(*a),
                _ => unreachable!(),
            });
        }
        stages.push(ops);
        current = next;
    }

    let mut layers = Vec::with_capacity(stages.len() + 1);
    for ops in &stages {
        let n_state = state_w.nrows();
        let mut pre_rows: Vec<DVector<f64>> = Vec::new();
        let mut recon: Vec<Vec<(usize, f64)>> = Vec::new();
        let unit = |i: usize| {
            let mut v = DVector::zeros(n_state);
            v[i] = 1.0;
            v
        };
        for op in ops {
            let base = pre_rows.len();
            match *op {
                StageOp::Pass(a) => {
                    pre_rows.push(unit(a));
                    pre_rows.push(-unit(a));
                    recon.push(vec![(base, 1.0), (base + 1, -1.0)]);
                }
                StageOp::Max(a, b) => {
                    pre_rows.push(unit(b));
                    pre_rows.push(-unit(b));
                    pre_rows.push(unit(a) - unit(b));
                    recon.push(vec![(base, 1.0), (base + 1, -1.0), (base + 2, 1.0)]);
                }
                StageOp::Min(a, b) => {
                    pre_rows.push(unit(a));
                    pre_rows.push(-unit(a));
                    pre_rows.push(unit(a) - unit(b));
                    recon.push(vec![(base, 1.0), (base + 1, -1.0), (base + 2, -1.0)]);
                }
            }
        }
        let hidden = pre_rows.len();
        let select = DMatrix::from_fn(hidden, n_state, |r, c| pre_rows[r][c]);
        layers.push(Layer::new(
            &select * &state_w,
            &select * &state_b,
            Some(ActivationSpec::Relu),
        ));
        let mut r = DMatrix::zeros(recon.len(), hidden);
        for (row, entries) in recon.iter().enumerate() {
            for &(col, v) in entries {
                r[(row, col)] = v;
            }
        }
        state_w = r;
        state_b = DVector::zeros(recon.len());
    }
    layers.push(Layer::new(state_w, state_b, None));
    ConstrainedNet::new(layers, ConstraintSpec::None)
}
