use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lipspline::analysis::{build_sawtooth, prop31_campaign, sawtooth_report, tv2_bound_experiment, SawtoothSpec};
use lipspline::decompose::{decompose, verify_chain};
use lipspline::io::{
    chain_from_json, chain_to_json, lattice_from_json, lattice_to_json, net_from_json, net_to_json,
    problem_from_json, report_to_json, schema_of, spline_csv, spline_from_json, spline_to_json,
};
use lipspline::lattice::{build_interpolant, lattice_to_relu_net};
use lipspline::random::{normal, rng};
use lipspline::NormIndex;
use serde_json::json;

/// Lipschitz-constrained spline networks: interpolation, decomposition and
/// verification tools.
#[derive(Parser, Debug)]
#[command(name = "lipspline", version)]
struct Cli {
    /// Seed recorded in every output and used by randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for the invariant checks of the command.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    /// Uniform grid points used by grid checks and CSV dumps.
    #[arg(long, global = true, default_value_t = 2000)]
    grid: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the optimal-Lipschitz lattice interpolant of a points file.
    Interpolate {
        #[arg(long)]
        p: Option<NormIndex>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a lattice as an exact ReLU network.
    ToRelu {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Factor a 1-Lipschitz spline into splines with at most three regions.
    Decompose {
        #[arg(long = "in")]
        input: PathBuf,
        /// Chain file; the verification report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the weight and activation constraints of a network.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Norm to check in, instead of the one stored with the net.
        #[arg(long)]
        p: Option<NormIndex>,
        /// Skip the enumeration of affine regions.
        #[arg(long)]
        no_regions: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sawtooth function of the given depth and its deep spline network.
    Sawtooth {
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Direction of the line restriction, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        u: Option<Vec<f64>>,
        #[arg(long, default_value = "2")]
        p: NormIndex,
        /// Print only the second-order total variation.
        #[arg(long)]
        emit_tv2: bool,
        /// Write `(x, F(x))` samples as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the sawtooth spline document.
        #[arg(long)]
        spline_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Second-order total variation of a spline.
    Tv2 {
        #[arg(long = "in")]
        input: PathBuf,
        /// Print only the number.
        #[arg(long)]
        plain: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random one-hidden-layer nets against the TV² bound of their activation.
    Tv2Bound {
        #[arg(long)]
        p: NormIndex,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random constrained ReLU-type nets checked for unit-norm pieces.
    Prop31 {
        #[arg(long)]
        p: NormIndex,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        width_budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a spline, chain, lattice or net document.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        /// Point to evaluate at, comma separated; may be repeated.
        #[arg(long, required = true, allow_hyphen_values = true)]
        x: Vec<String>,
    },
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

/// Result of a command that ran to completion.
enum Outcome {
    Ok,
    Violation(String),
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Outcome {
    if ok {
        Outcome::Ok
    } else {
        Outcome::Violation(what())
    }
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("invalid coordinate `{v}`")))
        .collect()
}

fn run(cli: Cli) -> Result<Outcome> {
    let seed = cli.seed;
    match cli.command {
        Command::Interpolate { p, input, out } => {
            let prob = problem_from_json(&read(&input)?, p)?;
            let g = build_interpolant(&prob)?;
            emit(out.as_deref(), &lattice_to_json(&g, Some(prob.p()), Some(prob.lipschitz()), seed))?;
            let mut worst: f64 = 0.0;
            for (x, y) in prob.points() {
                worst = worst.max((g.eval(x)? - y).abs());
            }
            Ok(check(worst <= cli.tol, || format!("interpolation error {worst:e}")))
        }
        Command::ToRelu { input, out } => {
            let g = lattice_from_json(&read(&input)?)?;
            let net = lattice_to_relu_net(&g)?;
            emit(out.as_deref(), &net_to_json(&net, seed))?;
            let mut r = rng(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..1000 {
                let x: Vec<f64> = (0..g.dim()).map(|_| 2.0 * normal(&mut r)).collect();
                let (a, b) = (g.eval(&x)?, net.forward(&x)?[0]);
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
            Ok(check(worst <= cli.tol, || format!("export mismatch {worst:e}")))
        }
        Command::Decompose { input, out } => {
            let g = spline_from_json(&read(&input)?)?;
            let chain = decompose(&g)?;
            let v = verify_chain(&g, &chain, cli.grid);
            if let Some(path) = out.as_deref() {
                emit(Some(path), &chain_to_json(&chain, Some(&v), seed))?;
            }
            print!("{}", report_to_json("decompose", &v, seed));
            let ok = v.ok && v.max_grid_error < cli.tol;
            Ok(check(ok, || format!("chain check failed, grid error {:e}", v.max_grid_error)))
        }
        Command::Verify {
            input,
            p,
            no_regions,
            out,
        } => {
            let net = net_from_json(&read(&input)?)?;
            let p = p.unwrap_or(net.constraint().norm_index());
            let report = net.check_constraints_in(p);
            let mut body = json!({ "constraints": report, "regions": null });
            if !no_regions {
                match net.enumerate_regions(p) {
                    Ok(regions) => body["regions"] = serde_json::to_value(regions)?,
                    Err(lipspline::Error::EnumerationBudget(why)) => body["regions_skipped"] = json!(why),
                    Err(e) => return Err(e.into()),
                }
            }
            emit(out.as_deref(), &report_to_json("verify", &body, seed))?;
            Ok(check(report.satisfied, || report.violations.join("; ")))
        }
        Command::Sawtooth {
            depth,
            dim,
            u,
            p,
            emit_tv2,
            csv,
            spline_out,
            out,
        } => {
            let u = u.unwrap_or_else(|| {
                let mut e = vec![0.0; dim.max(1)];
                e[0] = 1.0;
                e
            });
            if u.len() != dim {
                bail!("--u has {} coordinates but --dim is {dim}", u.len());
            }
            let spec = SawtoothSpec::new(depth, u, p)?;
            let f = build_sawtooth(depth)?;
            if let Some(path) = spline_out.as_deref() {
                emit(Some(path), &spline_to_json(&f, seed))?;
            }
            if let Some(path) = csv.as_deref() {
                emit(Some(path), &spline_csv(&f, -1.5, 1.5, cli.grid))?;
            }
            let report = sawtooth_report(&spec, true)?;
            if emit_tv2 {
                println!("{}", report.tv2);
            } else {
                emit(out.as_deref(), &report_to_json("sawtooth", &report, seed))?;
            }
            let net = report.net.as_ref().expect("net check requested");
            let ok = report.tv2 == report.expected_tv2
                && report.all_unit_slopes
                && report.alternating_signs
                && net.constraints_satisfied
                && (net.restriction_tv2 - report.expected_tv2).abs() <= cli.tol
                && net.restriction_max_error <= cli.tol;
            Ok(check(ok, || format!("sawtooth invariants failed: {report:?}")))
        }
        Command::Tv2 { input, plain, out } => {
            let f = spline_from_json(&read(&input)?)?;
            let tv2 = f.tv2();
            if plain {
                emit(out.as_deref(), &format!("{tv2}\n"))?;
            } else {
                let body = json!({
                    "tv2": tv2,
                    "regions": f.simplify().num_regions(),
                    "lipschitz": f.lipschitz(),
                });
                emit(out.as_deref(), &report_to_json("tv2", &body, seed))?;
            }
            Ok(Outcome::Ok)
        }
        Command::Tv2Bound { p, trials, out } => {
            let report = tv2_bound_experiment(p, trials, seed);
            emit(out.as_deref(), &report_to_json("tv2-bound", &report, seed))?;
            Ok(check(report.violations.is_empty(), || {
                format!("TV² bound violated in trials {:?}", report.violations)
            }))
        }
        Command::Prop31 {
            p,
            trials,
            width_budget,
            out,
        } => {
            let report = prop31_campaign(p, trials, seed, width_budget)?;
            emit(out.as_deref(), &report_to_json("prop31", &report, seed))?;
            Ok(check(report.violations.is_empty(), || {
                format!("{} nets with several unit-norm pieces", report.violations.len())
            }))
        }
        Command::Eval { input, x } => {
            let text = read(&input)?;
            let points = x.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?;
            let scalar = |pt: &Vec<f64>| -> Result<f64> {
                match pt.as_slice() {
                    [v] => Ok(*v),
                    _ => bail!("a one-dimensional document needs scalar points, got {pt:?}"),
                }
            };
            let mut lines = String::new();
            match schema_of(&text)?.as_str() {
                "spline.v1" => {
                    let f = spline_from_json(&text)?;
                    for pt in &points {
                        lines += &format!("{}\n", f.try_eval(scalar(pt)?)?);
                    }
                }
                "chain.v1" => {
                    let c = chain_from_json(&text)?;
                    for pt in &points {
                        lines += &format!("{}\n", c.eval(scalar(pt)?));
                    }
                }
                "lattice.v1" => {
                    let g = lattice_from_json(&text)?;
                    for pt in &points {
                        lines += &format!("{}\n", g.eval(pt)?);
                    }
                }
                "net.v1" => {
                    let net = net_from_json(&text)?;
                    for pt in &points {
                        let y: Vec<String> = net.forward(pt)?.iter().map(f64::to_string).collect();
                        lines += &format!("{}\n", y.join(","));
                    }
                }
                other => bail!("cannot evaluate a `{other}` document"),
            }
            emit(None, &lines)?;
            Ok(Outcome::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation(msg)) => {
            eprintln!("invariant violation: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
