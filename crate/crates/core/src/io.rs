//! Versioned JSON documents and CSV grids.
//!
//! Every emitted document carries `schema`, `seed` and `version`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cpwl1d::LinearSpline1D;
use crate::decompose::{ChainVerification, CompositionChain};
use crate::error::{Error, Result};
use crate::lattice::{AffinePiece, InterpolationProblem, LatticeCPWL};
use crate::lipnet::{ActivationSpec, ConstrainedNet, ConstraintSpec, Layer};
use crate::norm::NormIndex;
use crate::VERSION;

/// Scattered `(x, y)` samples.
pub type Samples = Vec<(Vec<f64>, f64)>;

pub const SPLINE_V1: &str = "spline.v1";
pub const LATTICE_V1: &str = "lattice.v1";
pub const POINTS_V1: &str = "points.v1";
pub const NET_V1: &str = "net.v1";
pub const CHAIN_V1: &str = "chain.v1";
pub const REPORT_V1: &str = "report.v1";

fn default_version() -> String {
    VERSION.to_string()
}

/// Knot form of a spline. Affine splines have no knots and give their value
/// at zero instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineBody {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub left_slope: f64,
    pub right_slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_at_zero: Option<f64>,
}

impl From<&LinearSpline1D> for SplineBody {
    fn from(s: &LinearSpline1D) -> Self {
        Self {
            knots: s.knots().to_vec(),
            values: s.values().to_vec(),
            left_slope: s.left_slope(),
            right_slope: s.right_slope(),
            value_at_zero: s.affine_offset(),
        }
    }
}

impl TryFrom<&SplineBody> for LinearSpline1D {
    type Error = Error;

    fn try_from(b: &SplineBody) -> Result<Self> {
        if b.knots.is_empty() {
            if !b.values.is_empty() {
                return Err(Error::InvalidSpline("values given without knots".into()));
            }
            let c = b
                .value_at_zero
                .ok_or_else(|| Error::InvalidSpline("affine spline needs `value_at_zero`".into()))?;
            if b.left_slope != b.right_slope {
                return Err(Error::InvalidSpline("affine spline needs equal outer slopes".into()));
            }
            if !c.is_finite() || !b.left_slope.is_finite() {
                return Err(Error::NonFinite("spline parameters"));
            }
            return Ok(LinearSpline1D::affine(b.left_slope, c));
        }
        if b.value_at_zero.is_some() {
            return Err(Error::InvalidSpline("`value_at_zero` is only valid without knots".into()));
        }
        LinearSpline1D::new(b.knots.clone(), b.values.clone(), b.left_slope, b.right_slope)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_version")]
    pub version: String,
}

impl Header {
    pub fn new(schema: &str, seed: u64) -> Self {
        Self {
            schema: schema.to_string(),
            seed,
            version: VERSION.to_string(),
        }
    }

    fn expect(&self, schema: &str) -> Result<()> {
        if self.schema != schema {
            return Err(Error::InvalidArgument(format!(
                "expected schema `{schema}`, found `{}`",
                self.schema
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineDoc {
    #[serde(flatten)]
    pub header: Header,
    #[serde(flatten)]
    pub spline: SplineBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceBody {
    pub gradient: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDoc {
    #[serde(flatten)]
    pub header: Header,
    #[serde(rename = "d", alias = "dim")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<NormIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub groups: Vec<Vec<PieceBody>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointBody {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointsDoc {
    #[serde(flatten)]
    pub header: Header,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<NormIndex>,
    pub points: Vec<PointBody>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActivationBody {
    Relu,
    LeakyCpwl {
        c: f64,
        /// `null` for −∞.
        lo: Option<f64>,
        /// `null` for +∞.
        hi: Option<f64>,
        #[serde(default)]
        offset: f64,
    },
    Spline {
        splines: Vec<SplineBody>,
    },
    Groupsort {
        group_size: usize,
        #[serde(default)]
        passthrough: usize,
    },
    Householder {
        v: Vec<f64>,
    },
}

impl From<&ActivationSpec> for ActivationBody {
    fn from(a: &ActivationSpec) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        match a {
            ActivationSpec::Relu => Self::Relu,
            ActivationSpec::LeakyCpwl { c, lo, hi, offset } => Self::LeakyCpwl {
                c: *c,
                lo: finite(*lo),
                hi: finite(*hi),
                offset: *offset,
            },
            ActivationSpec::Spline(s) => Self::Spline {
                splines: s.iter().map(SplineBody::from).collect(),
            },
            ActivationSpec::GroupSort {
                group_size,
                passthrough,
            } => Self::Groupsort {
                group_size: *group_size,
                passthrough: *passthrough,
            },
            ActivationSpec::Householder { v } => Self::Householder { v: v.clone() },
        }
    }
}

impl TryFrom<&ActivationBody> for ActivationSpec {
    type Error = Error;

    fn try_from(b: &ActivationBody) -> Result<Self> {
        Ok(match b {
            ActivationBody::Relu => Self::Relu,
            ActivationBody::LeakyCpwl { c, lo, hi, offset } => Self::LeakyCpwl {
                c: *c,
                lo: lo.unwrap_or(f64::NEG_INFINITY),
                hi: hi.unwrap_or(f64::INFINITY),
                offset: *offset,
            },
            ActivationBody::Spline { splines } => {
                Self::Spline(splines.iter().map(LinearSpline1D::try_from).collect::<Result<_>>()?)
            }
            ActivationBody::Groupsort {
                group_size,
                passthrough,
            } => Self::GroupSort {
                group_size: *group_size,
                passthrough: *passthrough,
            },
            ActivationBody::Householder { v } => Self::Householder { v: v.clone() },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerBody {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub activation: Option<ActivationBody>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetDoc {
    #[serde(flatten)]
    pub header: Header,
    pub layers: Vec<LayerBody>,
    pub constraint: ConstraintSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainVerificationBody {
    pub max_grid_error: f64,
    pub outer_slope_error: f64,
    pub grid_points: usize,
    pub factor_region_counts: Vec<usize>,
    pub factor_lipschitz: Vec<f64>,
    pub ok: bool,
}

impl From<&ChainVerification> for ChainVerificationBody {
    fn from(v: &ChainVerification) -> Self {
        Self {
            max_grid_error: v.max_grid_error,
            outer_slope_error: v.outer_slope_error,
            grid_points: v.grid_points,
            factor_region_counts: v.factor_region_counts.clone(),
            factor_lipschitz: v.factor_lipschitz.clone(),
            ok: v.ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDoc {
    #[serde(flatten)]
    pub header: Header,
    pub factors: Vec<SplineBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<ChainVerificationBody>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    #[serde(flatten)]
    pub header: Header,
    pub kind: String,
    pub report: serde_json::Value,
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed JSON: {e}")))
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable document");
    s.push('\n');
    s
}

/// Schema name of a document, if it has one.
pub fn schema_of(text: &str) -> Result<String> {
    #[derive(Deserialize)]
    struct Probe {
        schema: String,
    }
    parse::<Probe>(text).map(|p| p.schema)
}

pub fn spline_to_json(s: &LinearSpline1D, seed: u64) -> String {
    to_json(&SplineDoc {
        header: Header::new(SPLINE_V1, seed),
        spline: SplineBody::from(s),
    })
}

pub fn spline_from_json(text: &str) -> Result<LinearSpline1D> {
    let doc: SplineDoc = parse(text)?;
    doc.header.expect(SPLINE_V1)?;
    LinearSpline1D::try_from(&doc.spline)
}

pub fn lattice_to_json(g: &LatticeCPWL, p: Option<NormIndex>, lipschitz: Option<f64>, seed: u64) -> String {
    to_json(&LatticeDoc {
        header: Header::new(LATTICE_V1, seed),
        dim: g.dim(),
        p,
        lipschitz,
        groups: g
            .groups()
            .iter()
            .map(|grp| {
                grp.iter()
                    .map(|a| PieceBody {
                        gradient: a.gradient.clone(),
                        offset: a.offset,
                    })
                    .collect()
            })
            .collect(),
    })
}

pub fn lattice_from_json(text: &str) -> Result<LatticeCPWL> {
    let doc: LatticeDoc = parse(text)?;
    doc.header.expect(LATTICE_V1)?;
    let groups = doc
        .groups
        .iter()
        .map(|grp| grp.iter().map(|a| AffinePiece::new(a.gradient.clone(), a.offset)).collect())
        .collect();
    LatticeCPWL::new(doc.dim, groups)
}

pub fn points_to_json(points: &[(Vec<f64>, f64)], p: Option<NormIndex>, seed: u64) -> String {
    to_json(&PointsDoc {
        header: Header::new(POINTS_V1, seed),
        p,
        points: points.iter().map(|(x, y)| PointBody { x: x.clone(), y: *y }).collect(),
    })
}

/// Samples and the norm index stored with them, if any.
pub fn points_from_json(text: &str) -> Result<(Samples, Option<NormIndex>)> {
    let doc: PointsDoc = parse(text)?;
    doc.header.expect(POINTS_V1)?;
    Ok((doc.points.into_iter().map(|p| (p.x, p.y)).collect(), doc.p))
}

pub fn problem_from_json(text: &str, p: Option<NormIndex>) -> Result<InterpolationProblem> {
    let (points, stored) = points_from_json(text)?;
    let p = p.or(stored).ok_or_else(|| Error::InvalidArgument("no norm index given".into()))?;
    InterpolationProblem::new(points, p)
}

pub fn net_to_doc(net: &ConstrainedNet, seed: u64) -> NetDoc {
    NetDoc {
        header: Header::new(NET_V1, seed),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerBody {
                w: l.weight.row_iter().map(|r| r.iter().copied().collect()).collect(),
                b: l.bias.iter().copied().collect(),
                activation: l.activation.as_ref().map(ActivationBody::from),
            })
            .collect(),
        constraint: net.constraint(),
    }
}

pub fn net_to_json(net: &ConstrainedNet, seed: u64) -> String {
    to_json(&net_to_doc(net, seed))
}

pub fn net_from_json(text: &str) -> Result<ConstrainedNet> {
    let doc: NetDoc = parse(text)?;
    doc.header.expect(NET_V1)?;
    let layers = doc
        .layers
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let rows = l.w.len();
            let cols = l.w.first().map_or(0, Vec::len);
            if l.w.iter().any(|r| r.len() != cols) {
                return Err(Error::InvalidNet(format!("layer {k}: ragged weight matrix")));
            }
            let w = DMatrix::from_fn(rows, cols, |r, c| l.w[r][c]);
            let act = l.activation.as_ref().map(ActivationSpec::try_from).transpose()?;
            Ok(Layer::new(w, DVector::from_column_slice(&l.b), act))
        })
        .collect::<Result<Vec<_>>>()?;
    ConstrainedNet::new(layers, doc.constraint)
}

pub fn chain_to_json(chain: &CompositionChain, verification: Option<&ChainVerification>, seed: u64) -> String {
    to_json(&ChainDoc {
        header: Header::new(CHAIN_V1, seed),
        factors: chain.factors().iter().map(SplineBody::from).collect(),
        verification: verification.map(ChainVerificationBody::from),
    })
}

pub fn chain_from_json(text: &str) -> Result<CompositionChain> {
    let doc: ChainDoc = parse(text)?;
    doc.header.expect(CHAIN_V1)?;
    let factors = doc
        .factors
        .iter()
        .map(LinearSpline1D::try_from)
        .collect::<Result<Vec<_>>>()?;
    Ok(CompositionChain::new(factors))
}

pub fn report_to_json<T: Serialize>(kind: &str, report: &T, seed: u64) -> String {
    to_json(&ReportDoc {
        header: Header::new(REPORT_V1, seed),
        kind: kind.to_string(),
        report: serde_json::to_value(report).expect("serializable report"),
    })
}

pub fn report_from_json(text: &str) -> Result<ReportDoc> {
    let doc: ReportDoc = parse(text)?;
    doc.header.expect(REPORT_V1)?;
    Ok(doc)
}

/// CSV with a header row and every value at 17 significant digits.
pub fn csv_grid(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").expect("string write");
        }
        out.push('\n');
    }
    out
}

/// `(x, f(x))` rows on `n` uniform points of `[lo, hi]`.
pub fn spline_csv(f: &LinearSpline1D, lo: f64, hi: f64, n: usize) -> String {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let x = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            vec![x, f.eval(x)]
        })
        .collect();
    csv_grid(&["x", "y"], &rows)
}
