use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::NormIndex;

use super::activation::Unit;
use super::constraint::operator_norm;
use super::lp::{chebyshev_margin, INTERIOR_TOL};
use super::ConstrainedNet;

pub const ENUMERATION_MAX_NEURONS: usize = 24;
pub const ENUMERATION_MAX_PATTERNS: f64 = (1u64 << 24) as f64;
/// Jacobian norms at least `1 − UNIT_NORM_TOL` count as unit norm.
pub const UNIT_NORM_TOL: f64 = 1e-9;
const ZERO_ROW_TOL: f64 = 1e-12;
const PIECE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionEntry {
    /// Region index of every activation unit, layer by layer.
    pub activation_pattern: Vec<Vec<usize>>,
    /// Rows of the `n_K × d` Jacobian.
    pub jacobian: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub p_opnorm: f64,
    pub p_opnorm_exact: bool,
    pub witness_point: Vec<f64>,
    /// Distance from the witness to the nearest region boundary (capped at 1).
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionReport {
    pub p: NormIndex,
    /// Patterns with a full-dimensional region, in lexicographic order.
    pub regions: Vec<RegionEntry>,
    /// Partial patterns discarded because their region has empty interior.
    pub empty_patterns: usize,
    pub lp_solves: usize,
    /// Distinct affine maps among `regions`.
    pub distinct_pieces: usize,
    /// Distinct affine maps with `‖J‖_p ≥ 1 − UNIT_NORM_TOL`.
    pub unit_norm_pieces: usize,
}

struct Search<'a> {
    net: &'a ConstrainedNet,
    units: Vec<Vec<Unit>>,
    dim: usize,
    p: NormIndex,
    out: Vec<RegionEntry>,
    empty: usize,
    lp_solves: usize,
}

/// Half-spaces in input space, `a·x + b ≥ 0`.
type Rows = Vec<(Vec<f64>, f64)>;

impl Search<'_> {
    /// Explores unit `u` of layer `k`, whose pre-activation is `pre_a x + pre_c`.
    #[allow(clippy::too_many_arguments)]
    fn visit(
        &mut self,
        k: usize,
        u: usize,
        pre_a: &DMatrix<f64>,
        pre_c: &DVector<f64>,
        post_a: &mut DMatrix<f64>,
        post_c: &mut DVector<f64>,
        rows: &mut Rows,
        pattern: &mut Vec<Vec<usize>>,
        witness: (f64, Vec<f64>),
    ) {
        let layers = self.net.layers();
        if k == layers.len() {
            self.record(pre_a, pre_c, pattern, witness);
            return;
        }
        if layers[k].activation.is_none() || u == self.units[k].len() {
            // layer done: move to the next pre-activation
            let (a, c) = if layers[k].activation.is_none() {
                (pre_a.clone(), pre_c.clone())
            } else {
                (post_a.clone(), post_c.clone())
            };
            if k + 1 == layers.len() {
                self.record(&a, &c, pattern, witness);
                return;
            }
            let next = &layers[k + 1];
            let na = &next.weight * &a;
            let nc = &next.weight * &c + &next.bias;
            let width = next.output_dim();
            let mut pa = DMatrix::zeros(width, self.dim);
            let mut pc = DVector::zeros(width);
            pattern.push(Vec::new());
            self.visit(k + 1, 0, &na, &nc, &mut pa, &mut pc, rows, pattern, witness);
            pattern.pop();
            return;
        }
        let unit = self.units[k][u].clone();
        let local_a = pre_a.rows(unit.start, unit.len).into_owned();
        let local_c = pre_c.rows(unit.start, unit.len).into_owned();
        let single = unit.regions.len() == 1;
        for (r, region) in unit.regions.iter().enumerate() {
            let mut added = 0;
            let mut dead = false;
            for row in &region.rows {
                let coeff = DVector::from_column_slice(&row.coeff);
                let a: Vec<f64> = (coeff.transpose() * &local_a).iter().copied().collect();
                let b = coeff.dot(&local_c) + row.constant;
                let scale = a.iter().fold(b.abs().max(1.0), |m, v| m.max(v.abs()));
                if a.iter().all(|v| v.abs() <= ZERO_ROW_TOL * scale) {
                    // constant row: decided by the value, ties by the perturbation
                    let keep = if b.abs() <= ZERO_ROW_TOL * scale {
                        row.coeff.iter().zip(&unit.perturbation).map(|(c, e)| c * e).sum::<f64>() > 0.0
                    } else {
                        b > 0.0
                    };
                    if !keep {
                        dead = true;
                        break;
                    }
                } else {
                    rows.push((a, b));
                    added += 1;
                }
            }
            let next_witness = if dead {
                None
            } else if added == 0 || single {
                Some(witness.clone())
            } else {
                // the current witness often survives the new rows
                let slack = rows[rows.len() - added..]
                    .iter()
                    .map(|(a, b)| {
                        let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                        (a.iter().zip(&witness.1).map(|(ai, xi)| ai * xi).sum::<f64>() + b) / n
                    })
                    .fold(witness.0, f64::min);
                if slack > INTERIOR_TOL {
                    Some((slack, witness.1.clone()))
                } else {
                    self.lp_solves += 1;
                    let (t, x) = chebyshev_margin(rows, self.dim);
                    (t > INTERIOR_TOL).then_some((t, x))
                }
            };
            match next_witness {
                Some(w) => {
                    let map_a = &region.map * &local_a;
                    let map_c = &region.map * &local_c + &region.offset;
                    post_a.rows_mut(unit.start, unit.len).copy_from(&map_a);
                    post_c.rows_mut(unit.start, unit.len).copy_from(&map_c);
                    pattern.last_mut().expect("layer entry").push(r);
                    self.visit(k, u + 1, pre_a, pre_c, post_a, post_c, rows, pattern, w);
                    pattern.last_mut().expect("layer entry").pop();
                }
                None => self.empty += 1,
            }
            rows.truncate(rows.len() - added);
        }
    }

    fn record(&mut self, a: &DMatrix<f64>, c: &DVector<f64>, pattern: &[Vec<usize>], witness: (f64, Vec<f64>)) {
        let norm = operator_norm(a, self.p);
        self.out.push(RegionEntry {
            activation_pattern: pattern.to_vec(),
            jacobian: a.row_iter().map(|r| r.iter().copied().collect()).collect(),
            offset: c.iter().copied().collect(),
            p_opnorm: norm.value,
            p_opnorm_exact: norm.exact,
            witness_point: witness.1,
            margin: witness.0,
        });
    }
}

fn same_piece(x: &RegionEntry, y: &RegionEntry) -> bool {
    let close = |a: f64, b: f64| (a - b).abs() <= PIECE_TOL * a.abs().max(b.abs()).max(1.0);
    x.offset.iter().zip(&y.offset).all(|(a, b)| close(*a, *b))
        && x
            .jacobian
            .iter()
            .flatten()
            .zip(y.jacobian.iter().flatten())
            .all(|(a, b)| close(*a, *b))
}

fn distinct(entries: &[&RegionEntry]) -> usize {
    let mut reps: Vec<&RegionEntry> = Vec::new();
    for e in entries {
        if !reps.iter().any(|r| same_piece(r, e)) {
            reps.push(e);
        }
    }
    reps.len()
}

pub(crate) fn enumerate(net: &ConstrainedNet, p: NormIndex) -> Result<RegionReport> {
    let neurons = net.neuron_count();
    let units: Vec<Vec<Unit>> = net
        .layers()
        .iter()
        .map(|l| l.activation.as_ref().map_or_else(Vec::new, |a| a.units(l.output_dim())))
        .collect();
    let patterns: f64 = units.iter().flatten().map(|u| u.regions.len() as f64).product();
    if neurons > ENUMERATION_MAX_NEURONS || patterns > ENUMERATION_MAX_PATTERNS {
        return Err(Error::EnumerationBudget(format!(
            "{neurons} neurons and {patterns} activation patterns (limits {ENUMERATION_MAX_NEURONS} and 2^24)"
        )));
    }
    let dim = net.input_dim();
    let mut search = Search {
        net,
        units,
        dim,
        p,
        out: Vec::new(),
        empty: 0,
        lp_solves: 0,
    };
    let first = &net.layers()[0];
    let width = first.output_dim();
    let mut pa = DMatrix::zeros(width, dim);
    let mut pc = DVector::zeros(width);
    let mut rows = Vec::new();
    let mut pattern = vec![Vec::new()];
    search.visit(
        0,
        0,
        &first.weight.clone(),
        &first.bias.clone(),
        &mut pa,
        &mut pc,
        &mut rows,
        &mut pattern,
        (1.0, vec![0.0; dim]),
    );
    let regions = search.out;
    let all: Vec<&RegionEntry> = regions.iter().collect();
    let unit: Vec<&RegionEntry> = regions
        .iter()
        .filter(|r| r.p_opnorm >= 1.0 - UNIT_NORM_TOL)
        .collect();
    Ok(RegionReport {
        p,
        distinct_pieces: distinct(&all),
        unit_norm_pieces: distinct(&unit),
        regions,
        empty_patterns: search.empty,
        lp_solves: search.lp_solves,
    })
}
