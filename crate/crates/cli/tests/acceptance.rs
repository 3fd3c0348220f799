//! End-to-end acceptance checks. Every criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use lipspline::analysis::{build_sawtooth, one_hidden_layer, prop31_campaign, tv2_bound_experiment};
use lipspline::cpwl1d::oracle_grid;
use lipspline::decompose::{decompose, verify_chain};
use lipspline::io::points_to_json;
use lipspline::lattice::{build_interpolant, eval_lattice, holder_witness, lattice_to_relu_net};
use lipspline::lipnet::{groupsort_as_maxmin_net, maxmin_as_spline_net, spectral_norm};
use lipspline::norm::pnorm;
use lipspline::random::{normal, random_matrix, random_spline, random_unit_slope_spline, rng, Rng64};
use lipspline::{
    ActivationSpec, CompositionChain, ConstrainedNet, ConstraintSpec, InterpolationProblem, Layer, LinearSpline1D,
    NormIndex,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Reason a criterion failed.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<String, Failure>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure(msg()))
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), Failure> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64())
    })
}

fn np(v: f64) -> NormIndex {
    NormIndex::new(v).unwrap()
}

fn c1_sawtooth_tv2() -> Outcome {
    let start = Instant::now();
    for m in 1..=12 {
        let f = build_sawtooth(m)?;
        // integer slope changes: every interior knot flips a slope of ±1
        let changes: u64 = f.slopes().windows(2).map(|w| (w[1] - w[0]).abs() as u64).sum();
        let expected = 2 * ((1u64 << m) - 1);
        ensure(changes == expected && f.tv2() == expected as f64, || {
            format!("m = {m}: TV² {} vs {expected}", f.tv2())
        })?;
        ensure(f.num_regions() == 1 << m, || format!("m = {m}: {} regions", f.num_regions()))?;
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("m = 1..12 exact in {:.3} s", start.elapsed().as_secs_f64()))
}

fn dist(a: &[f64], b: &[f64], p: NormIndex) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    pnorm(&d, p)
}

fn c2_interpolant() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let mut worst_fit: f64 = 0.0;
    let mut worst_quot: f64 = 0.0;
    for trial in 0..50 {
        let p = [NormIndex::ONE, NormIndex::TWO, NormIndex::INF][trial % 3];
        let d = r.random_range(1..=5);
        let n = r.random_range(2..=12);
        let points: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| ((0..d).map(|_| normal(&mut r)).collect(), 2.0 * normal(&mut r)))
            .collect();
        let mut lip: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                lip = lip.max((points[i].1 - points[j].1).abs() / dist(&points[i].0, &points[j].0, p));
            }
        }
        let prob = InterpolationProblem::new(points.clone(), p)?;
        let g = build_interpolant(&prob)?;
        for (x, y) in &points {
            worst_fit = worst_fit.max((eval_lattice(&g, x)? - y).abs());
        }
        for _ in 0..100_000 {
            let x: Vec<f64> = (0..d).map(|_| 2.0 * normal(&mut r)).collect();
            let y: Vec<f64> = if r.random_bool(0.5) {
                x.iter().map(|v| v + 0.05 * normal(&mut r)).collect()
            } else {
                (0..d).map(|_| 2.0 * normal(&mut r)).collect()
            };
            let q = (eval_lattice(&g, &x)? - eval_lattice(&g, &y)?).abs() / dist(&x, &y, p);
            worst_quot = worst_quot.max(q / lip);
        }
    }
    ensure(worst_fit <= 1e-10, || format!("interpolation error {worst_fit:e}"))?;
    ensure(worst_quot <= 1.0 + 1e-9, || format!("quotient / L = {worst_quot}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "fit error {worst_fit:.1e}, max quotient / L = {worst_quot:.12} in {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn c3_holder() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for p in [np(1.0), np(1.5), np(2.0), np(3.0), NormIndex::INF] {
        for _ in 0..2000 {
            let d = r.random_range(1..=6);
            let a: Vec<f64> = (0..d).map(|_| normal(&mut r)).collect();
            let b: Vec<f64> = (0..d).map(|_| normal(&mut r)).collect();
            let u = holder_witness(&a, &b, p)?;
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let inner: f64 = u.iter().zip(&diff).map(|(x, y)| x * y).sum();
            let rhs = pnorm(&u, p.dual()) * pnorm(&diff, p);
            worst = worst.max((inner - rhs).abs() / rhs);
        }
    }
    ensure(worst <= 1e-10, || format!("relative saturation gap {worst:e}"))?;
    Ok(format!("max relative gap {worst:.1e}"))
}

/// Grid error of a chain against `g`, applying the factors one by one.
fn chain_error(g: &LinearSpline1D, chain: &CompositionChain) -> f64 {
    let grid = oracle_grid(g.knots(), 4000, 10.0);
    grid.iter()
        .map(|&x| {
            let y = chain.factors().iter().fold(x, |v, f| f.eval(v));
            (y - g.eval(x)).abs()
        })
        .fold(0.0, f64::max)
}

fn c4_decompose() -> Outcome {
    let start = Instant::now();
    let mut r = rng(4);
    let mut inputs: Vec<LinearSpline1D> = (0..200).map(|_| random_spline(&mut r, 9)).collect();
    inputs.extend((1..=6).map(|m| build_sawtooth(m).unwrap()));
    let mut worst: f64 = 0.0;
    let mut longest = 0;
    for (i, g) in inputs.iter().enumerate() {
        let chain = decompose(g)?;
        for f in chain.factors() {
            ensure(f.simplify().num_regions() <= 3, || format!("input {i}: factor with {} regions", f.num_regions()))?;
            ensure(f.lipschitz() <= 1.0 + 1e-12, || format!("input {i}: factor Lipschitz {}", f.lipschitz()))?;
        }
        let err = chain_error(g, &chain);
        let v = verify_chain(g, &chain, 4000);
        ensure(err < 1e-9 && v.ok, || format!("input {i}: grid error {err:e}, {v:?}"))?;
        worst = worst.max(err).max(v.max_grid_error);
        longest = longest.max(chain.len());
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "206 inputs, max grid error {worst:.1e}, longest chain {longest}, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn c5_unit_slopes() -> Outcome {
    let mut r = rng(5);
    let mut inputs: Vec<LinearSpline1D> = (0..200).map(|_| random_unit_slope_spline(&mut r, 9)).collect();
    inputs.extend((1..=6).map(|m| build_sawtooth(m).unwrap()));
    let mut factors = 0;
    for (i, g) in inputs.iter().enumerate() {
        ensure(g.slopes().iter().all(|s| s.abs() == 1.0), || format!("input {i} is not unit-slope"))?;
        let chain = decompose(g)?;
        for f in chain.factors() {
            ensure(f.slopes().iter().all(|s| (s.abs() - 1.0).abs() <= 1e-12), || {
                format!("input {i}: factor slopes {:?}", f.slopes())
            })?;
            factors += 1;
        }
        ensure(chain_error(g, &chain) < 1e-9, || format!("input {i}: chain does not compose back"))?;
    }
    Ok(format!("{} inputs, {factors} factors, all slopes ±1", inputs.len()))
}

fn c6_unit_pieces() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    for p in [np(1.5), NormIndex::TWO, NormIndex::INF] {
        let r = prop31_campaign(p, 150, 6, 4)?;
        ensure(r.nets_checked >= 100 && !r.partial, || format!("p = {p}: only {} nets checked", r.nets_checked))?;
        ensure(r.violations.is_empty(), || format!("p = {p}: violations {:?}", r.violations))?;
        ensure(r.abs_fit.spline_sup_error == 0.0, || format!("p = {p}: spline |x| error {}", r.abs_fit.spline_sup_error))?;
        summary.push(format!("p={p}: {} nets, max {} unit piece(s)", r.nets_checked, r.max_unit_norm_pieces));
    }
    within(start.elapsed(), 120.0)?;
    Ok(format!("{} in {:.2} s", summary.join("; "), start.elapsed().as_secs_f64()))
}

/// TV² of `x ↦ Σ uᵢ σ(wᵢ x + bᵢ)` from pointwise values at the breakpoints.
fn tv2_oracle(sigma: &LinearSpline1D, w: &[f64], b: &[f64], u: &[f64]) -> f64 {
    let f = |x: f64| -> f64 { (0..w.len()).map(|i| u[i] * sigma.eval(w[i] * x + b[i])).sum() };
    let mut bps: Vec<f64> = Vec::new();
    for i in 0..w.len() {
        if w[i] != 0.0 {
            bps.extend(sigma.knots().iter().map(|k| (k - b[i]) / w[i]));
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    if bps.is_empty() {
        return 0.0;
    }
    let h = 1.0;
    let mut xs = vec![bps[0] - h];
    xs.extend(&bps);
    xs.push(bps[bps.len() - 1] + h);
    let slopes: Vec<f64> = xs.windows(2).map(|s| (f(s[1]) - f(s[0])) / (s[1] - s[0])).collect();
    slopes.windows(2).map(|s| (s[1] - s[0]).abs()).sum()
}

fn unit_vector(r: &mut Rng64, n: usize, p: NormIndex) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| normal(r)).collect();
    let s = pnorm(&v, p);
    v.iter().map(|x| x / s).collect()
}

fn c7_tv2_bound() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [NormIndex::ONE, np(1.5), NormIndex::TWO, NormIndex::INF] {
        let report = tv2_bound_experiment(p, 1000, 7);
        ensure(report.violations.is_empty(), || format!("p = {p}: violations {:?}", report.violations))?;
        ensure(report.equality_case_ratio == 1.0, || format!("equality ratio {}", report.equality_case_ratio))?;
        worst = worst.max(report.max_ratio);
    }
    // independent replay with TV² from pointwise values
    let mut r = rng(77);
    let mut worst_oracle: f64 = 0.0;
    for trial in 0..1000 {
        let p = [NormIndex::ONE, NormIndex::TWO, NormIndex::INF][trial % 3];
        let sigma = if trial % 5 == 0 { LinearSpline1D::relu() } else { random_spline(&mut r, 8) };
        let n = r.random_range(1..=32);
        let w = unit_vector(&mut r, n, p);
        let u = unit_vector(&mut r, n, p.dual());
        let b: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
        let exact = one_hidden_layer(&sigma, &w, &b, &u).tv2();
        let oracle = tv2_oracle(&sigma, &w, &b, &u);
        ensure((exact - oracle).abs() <= 1e-7 * oracle.max(1.0), || {
            format!("trial {trial}: exact TV² {exact} vs pointwise {oracle}")
        })?;
        ensure(oracle <= sigma.tv2() + 1e-9, || format!("trial {trial}: TV² {oracle} > {}", sigma.tv2()))?;
        if sigma.tv2() > 0.0 {
            worst_oracle = worst_oracle.max(oracle / sigma.tv2());
        }
    }
    let relu = LinearSpline1D::relu();
    let eq = one_hidden_layer(&relu, &[1.0], &[0.0], &[1.0]).tv2() / relu.tv2();
    ensure(eq == 1.0, || format!("width-1 ratio {eq}"))?;
    Ok(format!("4000 trials max ratio {worst:.12}, 1000 replayed max ratio {worst_oracle:.12}, equality ratio 1"))
}

fn c8_sorting() -> Outcome {
    let mut r = rng(8);
    let mm = maxmin_as_spline_net();
    let direct = ActivationSpec::max_min();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let x = [3.0 * normal(&mut r), 3.0 * normal(&mut r)];
        let (a, b) = (mm.forward(&x)?, direct.apply(&x));
        worst = worst.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
    }
    let norms: Vec<f64> = mm.layers().iter().map(|l| spectral_norm(&l.weight)).collect();
    ensure(norms.len() == 2 && norms.iter().all(|n| (n - 1.0).abs() <= 1e-12), || format!("layer norms {norms:?}"))?;
    for n in 2..=6 {
        let net = groupsort_as_maxmin_net(n)?;
        let gs = ActivationSpec::GroupSort { group_size: n, passthrough: 0 };
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
            let (a, b) = (net.forward(&x)?, gs.apply(&x));
            for (ai, bi) in a.iter().zip(&b) {
                worst = worst.max((ai - bi).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}, rewrite layer norms {norms:?}"))
}

fn c9_export() -> Outcome {
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for trial in 0..9 {
        let p = [NormIndex::ONE, NormIndex::TWO, NormIndex::INF][trial % 3];
        let d = r.random_range(1..=5);
        let n = r.random_range(2..=12);
        let points = (0..n)
            .map(|_| ((0..d).map(|_| normal(&mut r)).collect(), normal(&mut r)))
            .collect();
        let g = build_interpolant(&InterpolationProblem::new(points, p)?)?;
        let net = lattice_to_relu_net(&g)?;
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..d).map(|_| 3.0 * normal(&mut r)).collect();
            worst = worst.max((eval_lattice(&g, &x)? - net.forward(&x)?[0]).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("9 lattices x 10^4 points, max deviation {worst:.1e}"))
}

fn family_net(r: &mut Rng64, family: usize) -> ConstrainedNet {
    let act = |r: &mut Rng64| match family {
        0 => ActivationSpec::Relu,
        1 => ActivationSpec::leaky(0.3, -0.2, 0.4, 0.1),
        2 => ActivationSpec::Spline((0..4).map(|_| random_spline(r, 6)).collect()),
        3 => ActivationSpec::max_min(),
        _ => {
            let (a, b) = (normal(r), normal(r));
            let n = (a * a + b * b).sqrt();
            ActivationSpec::Householder { v: vec![a / n, b / n] }
        }
    };
    let layers = vec![
        Layer::new(random_matrix(r, 4, 3), DVector::from_element(4, 0.2), Some(act(r))),
        Layer::new(random_matrix(r, 4, 4), DVector::from_element(4, -0.1), Some(act(r))),
        Layer::linear(random_matrix(r, 2, 4)),
    ];
    ConstrainedNet::projected(layers, ConstraintSpec::spectral()).unwrap()
}

fn fd_jacobian(net: &ConstrainedNet, x: &[f64], h: f64) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(net.output_dim(), x.len());
    for c in 0..x.len() {
        let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
        xp[c] += h;
        xm[c] -= h;
        let (fp, fm) = (net.forward(&xp).unwrap(), net.forward(&xm).unwrap());
        for row in 0..fp.len() {
            j[(row, c)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    j
}

fn c10_jacobian() -> Outcome {
    let names = ["relu", "leaky", "spline", "groupsort", "householder"];
    let mut r = rng(10);
    let mut worst: f64 = 0.0;
    for (family, name) in names.iter().enumerate() {
        let net = family_net(&mut r, family);
        let mut accepted = 0;
        let mut tries = 0;
        while accepted < 100 {
            tries += 1;
            ensure(tries < 10_000, || format!("{name}: too few off-boundary points"))?;
            let x: Vec<f64> = (0..3).map(|_| normal(&mut r)).collect();
            let j = net.jacobian(&x)?;
            // off-boundary: the analytic Jacobian is constant on a ball
            // much larger than the difference step
            let stable = (0..8).all(|_| {
                let y: Vec<f64> = x.iter().map(|v| v + 1e-4 * normal(&mut r)).collect();
                net.jacobian(&y).map(|jy| jy.matrix == j.matrix).unwrap_or(false)
            });
            if j.on_boundary || !stable {
                continue;
            }
            let gap = (&j.matrix - fd_jacobian(&net, &x, 1e-6)).amax();
            ensure(gap <= 1e-5, || format!("{name}: gap {gap:e} at {x:?}"))?;
            worst = worst.max(gap);
            accepted += 1;
        }
    }
    Ok(format!("5 families x 100 points, max gap {worst:.1e}"))
}

type Blobs = Vec<Vec<u8>>;

fn c11_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_lipspline");
    let dir = tempfile::tempdir()?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let mut r = rng(11);
    let points: Vec<(Vec<f64>, f64)> = (0..8)
        .map(|_| ((0..3).map(|_| normal(&mut r)).collect(), normal(&mut r)))
        .collect();
    std::fs::write(path("points.json"), points_to_json(&points, Some(NormIndex::INF), 0))?;
    let runs: Vec<Vec<String>> = vec![
        vec!["sawtooth".into(), "--depth".into(), "5".into(), "--dim".into(), "3".into(), "--u".into(), "1,-2,0.5".into(), "--p".into(), "inf".into(), "--spline-out".into(), path("saw.json")],
        vec!["decompose".into(), "--in".into(), path("saw.json"), "--out".into(), path("chain.json")],
        vec!["interpolate".into(), "--in".into(), path("points.json"), "--out".into(), path("lattice.json")],
        vec!["to-relu".into(), "--in".into(), path("lattice.json"), "--out".into(), path("net.json")],
        vec!["verify".into(), "--in".into(), path("net.json")],
        vec!["tv2-bound".into(), "--p".into(), "1.5".into(), "--trials".into(), "300".into(), "--seed".into(), "42".into()],
        vec!["prop31".into(), "--p".into(), "2".into(), "--trials".into(), "40".into(), "--seed".into(), "42".into()],
    ];
    let files = ["saw.json", "chain.json", "lattice.json", "net.json"];
    let mut first: Option<(Blobs, Blobs)> = None;
    for _ in 0..2 {
        let mut stdouts = Vec::new();
        for args in &runs {
            let out = Command::new(bin).args(args).output()?;
            ensure(out.status.success(), || {
                format!("{args:?} exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
            })?;
            stdouts.push(out.stdout);
        }
        let contents: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(path(f)).unwrap()).collect();
        match &first {
            None => first = Some((stdouts, contents)),
            Some((s, c)) => {
                ensure(*s == stdouts, || "stdout differs between runs".into())?;
                ensure(*c == contents, || "output files differ between runs".into())?;
            }
        }
    }
    Ok(format!("{} commands and {} files byte-identical across runs", runs.len(), files.len()))
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("sawtooth TV² = 2(2^m - 1)", c1_sawtooth_tv2),
        ("optimal Lipschitz interpolation", c2_interpolant),
        ("Hölder saturation", c3_holder),
        ("decomposition round trip", c4_decompose),
        ("unit-slope preservation", c5_unit_slopes),
        ("at most one unit-norm piece", c6_unit_pieces),
        ("one-hidden-layer TV² bound", c7_tv2_bound),
        ("MaxMin / GroupSort rewrites", c8_sorting),
        ("lattice to ReLU export", c9_export),
        ("Jacobian vs finite differences", c10_jacobian),
        ("CLI determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let res = std::panic::catch_unwind(check).unwrap_or_else(|_| Err(Failure("panicked".into())));
        match res {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(Failure(detail)) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
