//! Experiment drivers: sawtooth growth of TV², the one-hidden-layer TV²
//! bound, and the unit-Jacobian campaign for constrained ReLU-type nets.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::cpwl1d::LinearSpline1D;
use crate::error::{Error, Result};
use crate::lattice::holder_witness;
use crate::lipnet::{ActivationSpec, ConstrainedNet, ConstraintSpec, Layer};
use crate::norm::{pnorm, NormIndex};
use crate::random::{self, ActivationFamily, Rng64};

pub const SAWTOOTH_MAX_DEPTH: usize = 20;
pub const TV2_TOL: f64 = 1e-9;

/// `σ_k(x) = |x| − 2^{−k}`.
pub fn sawtooth_factor(k: usize) -> LinearSpline1D {
    LinearSpline1D::abs_shifted(0.0, -0.5f64.powi(k as i32))
}

fn check_depth(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("sawtooth depth must be at least 1".into()));
    }
    if m > SAWTOOTH_MAX_DEPTH {
        return Err(Error::DepthBudget(format!(
            "sawtooth depth {m} exceeds {SAWTOOTH_MAX_DEPTH} (2^{m} regions)"
        )));
    }
    Ok(())
}

/// `F_m = σ_m ∘ ⋯ ∘ σ_1`, with `2^m` regions of slope ±1.
pub fn build_sawtooth(m: usize) -> Result<LinearSpline1D> {
    check_depth(m)?;
    let mut f = sawtooth_factor(1);
    for k in 2..=m {
        f = sawtooth_factor(k).compose(&f);
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SawtoothSpec {
    pub depth: usize,
    pub u: Vec<f64>,
    pub p: NormIndex,
}

impl SawtoothSpec {
    pub fn new(depth: usize, u: Vec<f64>, p: NormIndex) -> Result<Self> {
        check_depth(depth)?;
        if u.is_empty() || u.iter().any(|v| !v.is_finite()) || u.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument("direction u must be finite and non-zero".into()));
        }
        Ok(Self { depth, u, p })
    }

    /// `u / ‖u‖_p`, the direction along which the net realizes `F_K` exactly.
    pub fn unit_direction(&self) -> Vec<f64> {
        let n = pnorm(&self.u, self.p);
        self.u.iter().map(|v| v / n).collect()
    }
}

/// Deep spline net with `Φ(t û) = F_K(t)` for `û = u/‖u‖_p`: the first layer
/// projects onto a unit-dual-norm vector saturating Hölder's inequality
/// against `u`, later layers apply `σ_k` to the first neuron.
pub fn build_sawtooth_net(spec: &SawtoothSpec) -> Result<ConstrainedNet> {
    let d = spec.u.len();
    let zero = vec![0.0; d];
    let w = holder_witness(&spec.u, &zero, spec.p)?;
    let wn = pnorm(&w, spec.p.dual());
    let mut first = DMatrix::zeros(d, d);
    for (c, wc) in w.iter().enumerate() {
        first[(0, c)] = wc / wn;
    }
    let mut layers = Vec::with_capacity(spec.depth + 1);
    for k in 1..=spec.depth {
        let mut splines = vec![LinearSpline1D::constant(0.0); d];
        splines[0] = sawtooth_factor(k);
        let weight = if k == 1 { first.clone() } else { DMatrix::identity(d, d) };
        layers.push(Layer::new(weight, DVector::zeros(d), Some(ActivationSpec::Spline(splines))));
    }
    let mut last = DMatrix::zeros(1, d);
    last[(0, 0)] = 1.0;
    layers.push(Layer::linear(last));
    ConstrainedNet::new(layers, ConstraintSpec::pnorm(spec.p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SawtoothReport {
    pub depth: usize,
    pub regions: usize,
    pub tv2: f64,
    pub expected_tv2: f64,
    pub all_unit_slopes: bool,
    pub alternating_signs: bool,
    pub net: Option<SawtoothNetCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SawtoothNetCheck {
    pub dim: usize,
    pub p: NormIndex,
    pub constraints_satisfied: bool,
    pub lipschitz_bound: f64,
    pub restriction_tv2: f64,
    pub restriction_max_error: f64,
}

pub fn expected_sawtooth_tv2(m: usize) -> f64 {
    2.0 * (2f64.powi(m as i32) - 1.0)
}

pub fn sawtooth_report(spec: &SawtoothSpec, with_net: bool) -> Result<SawtoothReport> {
    let f = build_sawtooth(spec.depth)?;
    let slopes = f.slopes();
    let net = if with_net {
        let net = build_sawtooth_net(spec)?;
        let check = net.check_constraints();
        let zero = vec![0.0; spec.u.len()];
        let r = net.restrict_scalar(&zero, &spec.unit_direction())?;
        let grid = crate::cpwl1d::oracle_grid(f.knots(), 10_000, 2.0);
        Some(SawtoothNetCheck {
            dim: spec.u.len(),
            p: spec.p,
            constraints_satisfied: check.satisfied,
            lipschitz_bound: check.lipschitz_bound,
            restriction_tv2: r.tv2(),
            restriction_max_error: r.max_abs_diff_on(&f, &grid),
        })
    } else {
        None
    };
    Ok(SawtoothReport {
        depth: spec.depth,
        regions: f.num_regions(),
        tv2: f.tv2(),
        expected_tv2: expected_sawtooth_tv2(spec.depth),
        all_unit_slopes: slopes.iter().all(|s| s.abs() == 1.0),
        alternating_signs: slopes.windows(2).all(|w| w[0] == -w[1]),
        net,
    })
}

/// `x ↦ Σᵢ uᵢ σ(wᵢ x + bᵢ)` as an exact spline.
pub fn one_hidden_layer(sigma: &LinearSpline1D, w: &[f64], b: &[f64], u: &[f64]) -> LinearSpline1D {
    let terms: Vec<LinearSpline1D> = w
        .iter()
        .zip(b)
        .map(|(&wi, &bi)| sigma.compose(&LinearSpline1D::affine(wi, bi)))
        .collect();
    let weighted: Vec<(f64, &LinearSpline1D)> = u.iter().copied().zip(terms.iter()).collect();
    LinearSpline1D::linear_combination(&weighted, 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tv2BoundReport {
    pub p: NormIndex,
    pub trials: usize,
    pub seed: u64,
    /// Largest `TV²(f) / TV²(σ)` over trials with `TV²(σ) > 0`.
    pub max_ratio: f64,
    /// Largest `TV²(f)` over the trials that used `σ = ReLU`.
    pub relu_max_tv2: f64,
    pub relu_trials: usize,
    /// Ratio for width 1, `u = w = 1`, `b = 0`.
    pub equality_case_ratio: f64,
    pub max_width: usize,
    pub violations: Vec<usize>,
}

/// Random one-hidden-layer scalar nets `x ↦ uᵀσ(wx + b)` with
/// `‖w‖_p = ‖u‖_q = 1`, checking `TV²(f) ≤ TV²(σ)`.
pub fn tv2_bound_experiment(p: NormIndex, trials: usize, seed: u64) -> Tv2BoundReport {
    let mut rng = random::rng(seed);
    let q = p.dual();
    let mut max_ratio: f64 = 0.0;
    let mut relu_max: f64 = 0.0;
    let mut relu_trials = 0;
    let mut max_width = 0;
    let mut violations = Vec::new();
    let mut equality = None;
    for trial in 0..trials {
        let sigma = if trial % 4 == 0 {
            relu_trials += 1;
            LinearSpline1D::relu()
        } else {
            random::random_spline(&mut rng, 8)
        };
        let n = rng.random_range(1..=32);
        max_width = max_width.max(n);
        let w = unit_vector(&mut rng, n, p);
        let u = unit_vector(&mut rng, n, q);
        let b: Vec<f64> = (0..n).map(|_| random::normal(&mut rng)).collect();
        let f = one_hidden_layer(&sigma, &w, &b, &u);
        let (tf, ts) = (f.tv2(), sigma.tv2());
        if tf > ts + TV2_TOL {
            violations.push(trial);
        }
        if ts > 0.0 {
            max_ratio = max_ratio.max(tf / ts);
            if equality.is_none() {
                let g = one_hidden_layer(&sigma, &[1.0], &[0.0], &[1.0]);
                equality = Some(g.tv2() / ts);
            }
        }
        if trial % 4 == 0 {
            relu_max = relu_max.max(tf);
        }
    }
    Tv2BoundReport {
        p,
        trials,
        seed,
        max_ratio,
        relu_max_tv2: relu_max,
        relu_trials,
        equality_case_ratio: equality.unwrap_or_else(|| {
            let s = LinearSpline1D::relu();
            one_hidden_layer(&s, &[1.0], &[0.0], &[1.0]).tv2() / s.tv2()
        }),
        max_width,
        violations,
    }
}

fn unit_vector(rng: &mut Rng64, n: usize, p: NormIndex) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| random::normal(rng)).collect();
        let norm = pnorm(&v, p);
        if norm > 0.0 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prop31Violation {
    pub trial: usize,
    pub unit_norm_pieces: usize,
    pub widths: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbsFit {
    /// Constrained single-input ReLU nets examined.
    pub relu_nets: usize,
    /// Smallest `sup_{[−1,1]} |f + c − |x||` over those nets, with the best
    /// constant shift `c` for each.
    pub best_relu_sup_error: f64,
    /// The same error for the one-neuron spline net with `σ = |·|`.
    pub spline_sup_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prop31Report {
    pub p: NormIndex,
    pub trials: usize,
    pub seed: u64,
    pub width_budget: usize,
    pub nets_checked: usize,
    pub budget_skipped: usize,
    pub partial: bool,
    pub max_unit_norm_pieces: usize,
    pub regions_enumerated: usize,
    pub violations: Vec<Prop31Violation>,
    /// Largest TV² of a restriction `t ↦ Φ(t u)` with `‖u‖_∞ = 1`, for
    /// ReLU nets under the ∞-norm constraint (`None` for other p).
    pub max_line_tv2: Option<f64>,
    pub abs_fit: AbsFit,
}

/// `min_c sup_{[−1,1]} |f(x) + c − |x||`.
pub fn abs_fit_error(f: &LinearSpline1D) -> f64 {
    let abs = LinearSpline1D::abs_shifted(0.0, 0.0);
    let e = LinearSpline1D::linear_combination(&[(1.0, &abs), (-1.0, f)], 0.0);
    let mut pts = vec![-1.0, 1.0];
    pts.extend(e.knots().iter().copied().filter(|k| k.abs() < 1.0));
    let (lo, hi) = pts
        .iter()
        .map(|&x| e.eval(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    0.5 * (hi - lo)
}

/// Random constrained ReLU / leaky-CPWL nets (one to three hidden layers,
/// widths up to `width_budget`), each checked for at most one affine piece
/// with unit Jacobian norm.
pub fn prop31_campaign(p: NormIndex, trials: usize, seed: u64, width_budget: usize) -> Result<Prop31Report> {
    if p.value() <= 1.0 {
        return Err(Error::InvalidArgument(
            "p = 1 is excluded: the unit-piece bound needs p in (1, inf]".into(),
        ));
    }
    if width_budget == 0 {
        return Err(Error::InvalidArgument("width budget must be positive".into()));
    }
    let mut rng = random::rng(seed);
    let mut report = Prop31Report {
        p,
        trials,
        seed,
        width_budget,
        nets_checked: 0,
        budget_skipped: 0,
        partial: false,
        max_unit_norm_pieces: 0,
        regions_enumerated: 0,
        violations: Vec::new(),
        max_line_tv2: p.is_inf().then_some(0.0),
        abs_fit: AbsFit {
            relu_nets: 0,
            best_relu_sup_error: f64::INFINITY,
            spline_sup_error: f64::NAN,
        },
    };
    for trial in 0..trials {
        let depth = rng.random_range(1..=3);
        let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=width_budget)).collect();
        let d = if trial % 3 == 0 { 1 } else { rng.random_range(1..=3) };
        let family = if trial % 2 == 0 {
            ActivationFamily::Relu
        } else {
            ActivationFamily::Leaky
        };
        let net = random::random_constrained_net(&mut rng, d, &widths, family, p)?;
        let regions = match net.enumerate_regions(p) {
            Ok(r) => r,
            Err(Error::EnumerationBudget(_)) => {
                report.budget_skipped += 1;
                report.partial = true;
                continue;
            }
            Err(e) => return Err(e),
        };
        report.nets_checked += 1;
        report.regions_enumerated += regions.regions.len();
        report.max_unit_norm_pieces = report.max_unit_norm_pieces.max(regions.unit_norm_pieces);
        if regions.unit_norm_pieces > 1 {
            report.violations.push(Prop31Violation {
                trial,
                unit_norm_pieces: regions.unit_norm_pieces,
                widths: widths.clone(),
            });
        }
        if family == ActivationFamily::Relu {
            if let Some(m) = report.max_line_tv2.as_mut() {
                let mut u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
                u[rng.random_range(0..d)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let tv = net.restrict_scalar(&vec![0.0; d], &u)?.tv2();
                *m = m.max(tv);
            }
            if d == 1 {
                let f = net.restrict_scalar(&[0.0], &[1.0])?;
                report.abs_fit.relu_nets += 1;
                report.abs_fit.best_relu_sup_error = report.abs_fit.best_relu_sup_error.min(abs_fit_error(&f));
            }
        }
    }
    let abs_net = ConstrainedNet::new(
        vec![
            Layer::new(
                DMatrix::identity(1, 1),
                DVector::zeros(1),
                Some(ActivationSpec::Spline(vec![LinearSpline1D::abs_shifted(0.0, 0.0)])),
            ),
            Layer::linear(DMatrix::identity(1, 1)),
        ],
        ConstraintSpec::pnorm(p),
    )?;
    report.abs_fit.spline_sup_error = abs_fit_error(&abs_net.restrict_scalar(&[0.0], &[1.0])?);
    Ok(report)
}
