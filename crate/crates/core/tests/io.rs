use lipspline::decompose::{decompose, verify_chain};
use lipspline::io::{
    chain_from_json, chain_to_json, csv_grid, lattice_from_json, lattice_to_json, net_from_json, net_to_json,
    points_from_json, points_to_json, problem_from_json, report_from_json, report_to_json, schema_of,
    spline_csv, spline_from_json, spline_to_json,
};
use lipspline::lattice::build_interpolant;
use lipspline::lipnet::{groupsort_as_maxmin_net, maxmin_as_spline_net};
use lipspline::random::{random_constrained_net, random_spline, rng, ActivationFamily};
use lipspline::{
    ActivationSpec, ConstrainedNet, ConstraintSpec, InterpolationProblem, Layer, LinearSpline1D, NormIndex,
};
use nalgebra::{DMatrix, DVector};

#[test]
fn splines_round_trip() {
    let mut r = rng(1);
    for _ in 0..200 {
        let s = random_spline(&mut r, 8);
        let text = spline_to_json(&s, 7);
        assert_eq!(spline_from_json(&text).unwrap(), s);
        assert_eq!(schema_of(&text).unwrap(), "spline.v1");
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], 7);
        assert!(v["version"].is_string());
    }
    let a = LinearSpline1D::affine(0.5, -2.0);
    assert_eq!(spline_from_json(&spline_to_json(&a, 0)).unwrap(), a);
}

#[test]
fn lattices_and_points_round_trip() {
    let points = vec![(vec![0.0, 1.0], 0.5), (vec![1.0, -1.0], -0.25), (vec![2.0, 0.5], 1.0)];
    for p in [NormIndex::ONE, NormIndex::TWO, NormIndex::INF] {
        let text = points_to_json(&points, Some(p), 0);
        let (back, stored) = points_from_json(&text).unwrap();
        assert_eq!(back, points);
        assert_eq!(stored, Some(p));
        let prob = problem_from_json(&text, None).unwrap();
        let g = build_interpolant(&prob).unwrap();
        let lt = lattice_to_json(&g, Some(p), Some(prob.lipschitz()), 3);
        assert_eq!(lattice_from_json(&lt).unwrap(), g);
    }
    let text = points_to_json(&points, Some(NormIndex::INF), 0);
    assert!(text.contains("\"inf\""));
    let bare = points_to_json(&points, None, 0);
    assert!(problem_from_json(&bare, None).is_err());
    let prob = problem_from_json(&bare, Some(NormIndex::TWO)).unwrap();
    assert_eq!(prob, InterpolationProblem::new(points, NormIndex::TWO).unwrap());
}

fn every_activation_net() -> ConstrainedNet {
    let layers = vec![
        Layer::new(DMatrix::identity(4, 2), DVector::zeros(4), Some(ActivationSpec::Relu)),
        Layer::new(
            DMatrix::identity(4, 4),
            DVector::zeros(4),
            Some(ActivationSpec::leaky(0.2, f64::NEG_INFINITY, 1.0, 0.0)),
        ),
        Layer::new(
            DMatrix::identity(4, 4),
            DVector::zeros(4),
            Some(ActivationSpec::GroupSort { group_size: 2, passthrough: 0 }),
        ),
        Layer::new(
            DMatrix::identity(4, 4),
            DVector::zeros(4),
            Some(ActivationSpec::Householder { v: vec![0.6, 0.8] }),
        ),
        Layer::new(
            DMatrix::identity(2, 4),
            DVector::zeros(2),
            Some(ActivationSpec::Spline(vec![LinearSpline1D::relu(), LinearSpline1D::abs_shifted(0.0, 0.0)])),
        ),
        Layer::linear(DMatrix::from_row_slice(1, 2, &[0.5, 0.5])),
    ];
    ConstrainedNet::new(layers, ConstraintSpec::spectral()).unwrap()
}

#[test]
fn nets_round_trip() {
    let mut r = rng(2);
    let mut nets = vec![every_activation_net(), maxmin_as_spline_net(), groupsort_as_maxmin_net(4).unwrap()];
    for p in [NormIndex::TWO, NormIndex::INF, NormIndex::new(1.5).unwrap()] {
        nets.push(random_constrained_net(&mut r, 3, &[4, 2], ActivationFamily::Leaky, p).unwrap());
    }
    for net in nets {
        let text = net_to_json(&net, 11);
        let back = net_from_json(&text).unwrap();
        assert_eq!(net_to_json(&back, 11), text);
        assert_eq!(back.layers(), net.layers());
        assert_eq!(back.constraint(), net.constraint());
    }
    let text = net_to_json(&every_activation_net(), 0);
    assert!(text.contains("\"lo\": null"));
}

#[test]
fn chains_and_reports_round_trip() {
    let mut r = rng(3);
    for _ in 0..50 {
        let g = random_spline(&mut r, 8);
        let chain = decompose(&g).unwrap();
        let v = verify_chain(&g, &chain, 1000);
        let text = chain_to_json(&chain, Some(&v), 5);
        let back = chain_from_json(&text).unwrap();
        assert_eq!(back, chain);
        assert_eq!(chain_to_json(&back, Some(&v), 5), text);
    }
    let text = report_to_json("demo", &serde_json::json!({"a": 1.5, "b": [1, 2]}), 9);
    let doc = report_from_json(&text).unwrap();
    assert_eq!(doc.kind, "demo");
    assert_eq!(doc.header.seed, 9);
    assert_eq!(doc.report["a"], 1.5);
}

#[test]
fn malformed_input_is_diagnosed() {
    let err = spline_from_json("{\"schema\": \"spline.v1\", \"knots\": [1,").unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");
    let wrong = spline_to_json(&LinearSpline1D::relu(), 0).replace("spline.v1", "net.v1");
    assert!(spline_from_json(&wrong).is_err());
    let missing = "{\"schema\": \"spline.v1\", \"knots\": [0.0], \"values\": [0.0], \"left_slope\": 0.0}";
    assert!(spline_from_json(missing).unwrap_err().to_string().contains("right_slope"));
}

#[test]
fn csv_format() {
    let text = csv_grid(&["x", "y"], &[vec![0.1, 1.0 / 3.0]]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row, vec![0.1, 1.0 / 3.0]);
    let csv = spline_csv(&LinearSpline1D::relu(), -1.0, 1.0, 5);
    assert_eq!(csv.lines().count(), 6);
}
