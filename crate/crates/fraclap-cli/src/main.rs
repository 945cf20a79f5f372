//! Batch front end: every subcommand reads a fully explicit configuration,
//! runs one computation, and emits a JSON report (stdout or --out) with the
//! toolkit version and the resolved configuration embedded, plus CSV side
//! files for bulk numerics. Exit codes: 0 success, 2 violated precondition,
//! 1 internal error.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fraclap_core::error::Error as CoreError;
use fraclap_core::extension::{calibrate_dtn, solve_mode, MeshSpec};
use fraclap_core::gamma::{
    admissible, ft_homogeneous_constant, ft_homogeneous_constant_unit_freq, lambda_factor,
    lambda_spectral, scattering_prefactor, sign_walk, SignOutcome,
};
use fraclap_core::grid::FracParams;
use fraclap_core::models::{
    bubble_residual, bubble_residual_direct, completeness_probe, growth_diagnostic,
    hankel_ft_oracle, verify_homogeneous_action, BubbleGridSpec, BubbleParams,
    HomogeneityGridSpec, QuadratureSpec, SingularModel,
};
use fraclap_core::spectral::{apply_pv, apply_spectral, MultiplierSpec, ZeroModePolicy};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "fraclap",
    version,
    about = "Fractional conformal Laplacian toolkit: operators, constants, model verifications"
)]
struct Cli {
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct MeshArgs {
    /// Nodes of the graded extension mesh
    #[arg(long, default_value_t = 2000)]
    nodes: usize,
    /// Scaled domain size z_max (physical X_max = z_max/|eta|)
    #[arg(long, default_value_t = 12.0)]
    z_max: f64,
    /// Grading exponent (default max(2, 1/gamma))
    #[arg(long)]
    grading: Option<f64>,
}

impl MeshArgs {
    fn to_spec(&self) -> MeshSpec {
        MeshSpec {
            nodes: self.nodes,
            z_max: self.z_max,
            grading: self.grading,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply the spectral multiplier |eta|^{2 gamma} to a field file
    Apply {
        #[arg(long)]
        gamma: f64,
        /// Input .field file (JSON header, inline or sidecar payload)
        #[arg(long = "in")]
        input: PathBuf,
        /// Output .field file
        #[arg(long = "out-field")]
        output: PathBuf,
        /// Zero-mode policy for gamma < 0: annihilate | identity | error
        #[arg(long, default_value = "annihilate")]
        zero_mode: String,
    },
    /// Evaluate the regularized principal-value form at one grid point
    Pv {
        #[arg(long)]
        gamma: f64,
        #[arg(long = "in")]
        input: PathBuf,
        /// Grid index of the evaluation point, comma-separated
        #[arg(long)]
        point: String,
    },
    /// Solve the weighted extension ODE for one mode
    Extend {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        f0: f64,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Write the (x, U) profile as CSV here
        #[arg(long)]
        profile_csv: Option<PathBuf>,
    },
    /// Calibrate the Dirichlet-to-Neumann constant d_gamma
    Calibrate {
        #[arg(long)]
        gamma: f64,
        /// Mode norms to fit across, comma-separated
        #[arg(long, default_value = "1,2,4")]
        etas: String,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Also write a d_gamma-vs-gamma table (gamma grid 0.1..0.9) as CSV
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// The multiplicative factor lambda(n, k, gamma)
    Lambda {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        gamma: f64,
    },
    /// Admissibility predicate for one triple, or a CSV scan
    Admissible {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        gamma: f64,
        /// Scan all k < n into a CSV file instead of one report
        #[arg(long)]
        scan: Option<PathBuf>,
    },
    /// Sign of the admissibility ratio along a gamma grid
    Signwalk {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 0.01)]
        gamma_min: f64,
        #[arg(long)]
        gamma_max: Option<f64>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Verify the homogeneous-action exponent and prefactor on a grid
    ModelVerify {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Points per transverse axis
        #[arg(long, default_value_t = 2048)]
        points: usize,
        /// Mollification radius in grid cells
        #[arg(long, default_value_t = 4.0)]
        moll_cells: f64,
    },
    /// Bubble residual under the critical-exponent equation
    Bubble {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Grid route: points per axis (omit for the direct quadrature route)
        #[arg(long)]
        points: Option<usize>,
        /// Grid route: box length
        #[arg(long)]
        box_length: Option<f64>,
        /// Boundary-decay tolerance override
        #[arg(long, default_value_t = 1e-3)]
        boundary_tol: f64,
        /// Write a Lambda-vs-(n,gamma) table (direct route) as CSV
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Growth diagnostic sup u d^{(n-2 gamma)/2} from CSV samples
    Growth {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        gamma: f64,
        /// CSV of samples: x0,..,x_{n-1},value per row
        #[arg(long)]
        samples: PathBuf,
        /// CSV of singular-set points: x0,..,x_{n-1} per row
        #[arg(long)]
        lambda_set: PathBuf,
        /// Optional completeness probe input: distance,value per row,
        /// ordered by decreasing distance
        #[arg(long)]
        ray: Option<PathBuf>,
    },
    /// Numerical Hankel-transform oracle for c(N, alpha)
    FtOracle {
        #[arg(long)]
        n_dim: u32,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 400)]
        segments: usize,
    },
    /// Run the acceptance criteria and print a pass/fail table
    Selftest {
        /// Comma-separated criterion indices (default: all of 1..9)
        #[arg(long)]
        criteria: Option<String>,
    },
}

fn init_threads() {
    let n = std::env::var("FRACLAP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
}

fn emit(report: Value, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(&report)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {p:?}"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn with_meta(cmd: &str, config: Value, body: Value) -> Value {
    json!({
        "toolkit_version": fraclap_core::VERSION,
        "command": cmd,
        "config": config,
        "report": body,
    })
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad {what} entry {t:?}: {e}"))
        })
        .collect()
}

fn read_point_rows(path: &PathBuf, n: usize, with_value: bool) -> anyhow::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<f64> = parse_list(line, "csv")?;
        let want = if with_value { n + 1 } else { n };
        if cols.len() != want {
            anyhow::bail!("{path:?} line {}: expected {want} columns, got {}", i + 1, cols.len());
        }
        rows.push(cols);
    }
    Ok(rows)
}

fn sign_str(s: SignOutcome) -> &'static str {
    match s {
        SignOutcome::Positive => "+",
        SignOutcome::Negative => "-",
        SignOutcome::Indeterminate => "indeterminate",
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Apply {
            gamma,
            input,
            output,
            zero_mode,
        } => {
            let policy = match zero_mode.as_str() {
                "annihilate" => ZeroModePolicy::Annihilate,
                "identity" => ZeroModePolicy::Identity,
                "error" => ZeroModePolicy::Error,
                other => {
                    return Err(CoreError::Domain(format!("unknown zero-mode policy {other:?}"))
                        .into())
                }
            };
            let field = fraclap_core::fieldio::read_field(&input)?;
            let spec = MultiplierSpec {
                gamma,
                zero_mode_policy: policy,
            };
            let result = apply_spectral(&field, &spec)?;
            fraclap_core::fieldio::write_field(&output, &result, true)?;
            emit(
                with_meta(
                    "apply",
                    json!({"gamma": gamma, "in": input, "out_field": output, "zero_mode": zero_mode,
                           "dims": field.dims(), "box_lengths": field.box_lengths()}),
                    json!({
                        "input_max_abs": field.max_abs(),
                        "output_max_abs": result.max_abs(),
                        "output_imag_residue": result.imag_residue(),
                    }),
                ),
                &cli.out,
            )
        }
        Cmd::Pv { gamma, input, point } => {
            let field = fraclap_core::fieldio::read_field(&input)?;
            let pt: Vec<usize> = parse_list(&point, "point")?;
            let pv = apply_pv(&field, gamma, &pt)?;
            emit(
                with_meta(
                    "pv",
                    json!({"gamma": gamma, "in": input, "point": pt,
                           "dims": field.dims(), "box_lengths": field.box_lengths()}),
                    json!({
                        "value_re": pv.value_re,
                        "value_im": pv.value_im,
                        "tail_estimate": pv.tail_estimate,
                    }),
                ),
                &cli.out,
            )
        }
        Cmd::Extend {
            gamma,
            eta,
            f0,
            mesh,
            profile_csv,
        } => {
            let spec = mesh.to_spec();
            let prof = solve_mode(eta, gamma, &spec, f0)?;
            if let Some(p) = &profile_csv {
                let mut csv = String::from("x,u\n");
                for (x, u) in prof.x_nodes.iter().zip(&prof.u_values) {
                    csv.push_str(&format!("{x:.17e},{u:.17e}\n"));
                }
                std::fs::write(p, csv)?;
            }
            emit(
                with_meta(
                    "extend",
                    json!({"gamma": gamma, "eta": eta, "f0": f0, "mesh": spec,
                           "profile_csv": profile_csv}),
                    json!({
                        "dtn_value": prof.dtn_value,
                        "fit_residual": prof.fit_residual,
                        "nodes": prof.x_nodes.len(),
                        "x_max": prof.x_nodes.last(),
                    }),
                ),
                &cli.out,
            )
        }
        Cmd::Calibrate {
            gamma,
            etas,
            mesh,
            table,
        } => {
            let spec = mesh.to_spec();
            let eta_list: Vec<f64> = parse_list(&etas, "etas")?;
            let cal = calibrate_dtn(gamma, &eta_list, &spec)?;
            if let Some(p) = &table {
                let mut csv = String::from("gamma,kappa,d_gamma_estimate,fit_exponent,fit_deviation\n");
                for i in 1..=17 {
                    let g = 0.05 * i as f64;
                    let c = calibrate_dtn(g, &eta_list, &spec)?;
                    csv.push_str(&format!(
                        "{g:.2},{:.12e},{:.12e},{:.12e},{:.3e}\n",
                        c.kappa, c.d_gamma_estimate, c.fit_exponent, c.fit_deviation
                    ));
                }
                std::fs::write(p, csv)?;
            }
            emit(
                with_meta(
                    "calibrate",
                    json!({"gamma": gamma, "etas": eta_list, "mesh": spec, "table": table}),
                    serde_json::to_value(&cal)?,
                ),
                &cli.out,
            )
        }
        Cmd::Lambda { n, k, gamma } => {
            let printed = lambda_factor(n, k, gamma)?;
            let spectral = lambda_spectral(n, k, gamma)?;
            let prefactor = scattering_prefactor(gamma).ok();
            emit(
                with_meta(
                    "lambda",
                    json!({"n": n, "k": k, "gamma": gamma}),
                    json!({
                        "lambda": printed,
                        "lambda_value": printed.value(),
                        "lambda_spectral": spectral,
                        "lambda_spectral_value": spectral.value(),
                        "scattering_prefactor": prefactor,
                    }),
                ),
                &cli.out,
            )
        }
        Cmd::Admissible { n, k, gamma, scan } => {
            if let Some(path) = scan {
                let mut csv = String::from("n,k,gamma,ratio_sign,lambda,simple_bound,dimrest\n");
                for kk in 0..n {
                    let r = admissible(n, kk, gamma)?;
                    csv.push_str(&format!(
                        "{n},{kk},{gamma},{},{:e},{},{}\n",
                        sign_str(r.ratio_sign),
                        r.lambda_value,
                        r.simple_bound_holds,
                        r.dimrest_holds
                    ));
                }
                std::fs::write(&path, csv)?;
                return emit(
                    with_meta(
                        "admissible",
                        json!({"n": n, "gamma": gamma, "scan": path}),
                        json!({"rows": n}),
                    ),
                    &cli.out,
                );
            }
            let k = k.ok_or_else(|| {
                CoreError::Domain("admissible: --k required unless --scan is given".into())
            })?;
            let r = admissible(n, k, gamma)?;
            emit(
                with_meta(
                    "admissible",
                    json!({"n": n, "k": k, "gamma": gamma}),
                    json!({
                        "dimrest": r.dimrest_holds,
                        "simple_bound": r.simple_bound_holds,
                        "lambda_sign": sign_str(r.ratio_sign),
                        "lambda_value": r.lambda_value,
                    }),
                ),
                &cli.out,
            )
        }
        Cmd::Signwalk {
            n,
            k,
            gamma_min,
            gamma_max,
            steps,
        } => {
            let hi = gamma_max.unwrap_or(n as f64 / 2.0 - 1e-6);
            if steps < 2 || !(gamma_min < hi) {
                return Err(CoreError::Domain("signwalk: need gamma_min < gamma_max, steps >= 2".into()).into());
            }
            let grid: Vec<f64> = (0..steps)
                .map(|i| gamma_min + (hi - gamma_min) * i as f64 / (steps - 1) as f64)
                .collect();
            let walk = sign_walk(n, k, &grid)?;
            let rows: Vec<Value> = walk
                .iter()
                .map(|&(g, s)| json!({"gamma": g, "sign": sign_str(s)}))
                .collect();
            emit(
                with_meta(
                    "signwalk",
                    json!({"n": n, "k": k, "gamma_min": gamma_min, "gamma_max": hi, "steps": steps}),
                    json!({"walk": rows}),
                ),
                &cli.out,
            )
        }
        Cmd::ModelVerify {
            n,
            k,
            gamma,
            amplitude,
            points,
            moll_cells,
        } => {
            let model = SingularModel::new(n, k, gamma, amplitude)?;
            let spec = HomogeneityGridSpec::new(points);
            let h = spec.box_length / points as f64;
            let rep = verify_homogeneous_action(&model, &spec, moll_cells * h)?;
            emit(
                with_meta(
                    "model-verify",
                    json!({"n": n, "k": k, "gamma": gamma, "amplitude": amplitude,
                           "points": points, "moll_cells": moll_cells,
                           "box_length": spec.box_length}),
                    serde_json::to_value(&rep)?,
                ),
                &cli.out,
            )
        }
        Cmd::Bubble {
            n,
            gamma,
            mu,
            amplitude,
            points,
            box_length,
            boundary_tol,
            table,
        } => {
            if let Some(path) = &table {
                let mut csv = String::from("n,gamma,mu,lambda_estimate,residual_cv,route\n");
                for (nn, g) in [(1u32, 0.25), (1, 0.3), (1, 0.4), (2, 0.5), (2, 0.6), (2, 0.75)] {
                    let b = BubbleParams::new(nn, g, 1.0, vec![0.0; nn as usize], 1.0)?;
                    let r = bubble_residual_direct(&b)?;
                    csv.push_str(&format!(
                        "{nn},{g},{},{:.12e},{:.3e},{}\n",
                        1.0, r.lambda_estimate, r.residual_cv, r.route
                    ));
                }
                std::fs::write(path, csv)?;
            }
            let params = BubbleParams::new(n, gamma, mu, vec![0.0; n as usize], amplitude)?;
            let rep = match (points, box_length) {
                (Some(p), Some(l)) => {
                    let mut spec = BubbleGridSpec::new(p, l);
                    spec.boundary_decay_tol = boundary_tol;
                    bubble_residual(&params, &spec)?
                }
                _ => bubble_residual_direct(&params)?,
            };
            emit(
                with_meta(
                    "bubble",
                    json!({"n": n, "gamma": gamma, "mu": mu, "amplitude": amplitude,
                           "points": points, "box_length": box_length,
                           "boundary_tol": boundary_tol, "table": table}),
                    serde_json::to_value(&rep)?,
                ),
                &cli.out,
            )
        }
        Cmd::Growth {
            n,
            gamma,
            samples,
            lambda_set,
            ray,
        } => {
            let params = FracParams::new(n, gamma)?;
            let sample_rows = read_point_rows(&samples, n as usize, true)?;
            let lambda_rows = read_point_rows(&lambda_set, n as usize, false)?;
            let samples_vec: Vec<(Vec<f64>, f64)> = sample_rows
                .iter()
                .map(|r| (r[..n as usize].to_vec(), r[n as usize]))
                .collect();
            let rep = growth_diagnostic(&samples_vec, &lambda_rows, &params)?;
            let probe = match &ray {
                Some(p) => {
                    let rows = read_point_rows(p, 1, true)?;
                    let ray_vec: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
                    Some(completeness_probe(&ray_vec, &params)?)
                }
                None => None,
            };
            emit(
                with_meta(
                    "growth",
                    json!({"n": n, "gamma": gamma, "samples": samples,
                           "lambda_set": lambda_set, "ray": ray}),
                    json!({"growth": rep, "completeness": probe}),
                ),
                &cli.out,
            )
        }
        Cmd::FtOracle {
            n_dim,
            alpha,
            segments,
        } => {
            let quad = QuadratureSpec {
                segments,
                ..Default::default()
            };
            let oracle = hankel_ft_oracle(n_dim, alpha, &quad)?;
            let printed = ft_homogeneous_constant(n_dim, alpha)?;
            let unit = ft_homogeneous_constant_unit_freq(n_dim, alpha)?;
            emit(
                with_meta(
                    "ft-oracle",
                    json!({"n_dim": n_dim, "alpha": alpha, "segments": segments}),
                    json!({
                        "oracle": oracle,
                        "printed_variant": printed,
                        "unit_freq_variant": unit,
                        "matches_printed": ((oracle - printed)/printed).abs() <= 1e-3,
                        "matches_unit_freq": ((oracle - unit)/unit).abs() <= 1e-3,
                    }),
                ),
                &cli.out,
            )
        }
        Cmd::Selftest { criteria } => {
            let results = match &criteria {
                Some(list) => {
                    let idx: Vec<usize> = parse_list(list, "criteria")?;
                    fraclap_core::selftest::run_selected(&idx)
                }
                None => fraclap_core::selftest::run_all(),
            };
            let mut all_pass = true;
            for r in &results {
                println!(
                    "criterion {}: {} [{}] ({:.2}s)",
                    r.index,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.seconds
                );
                for line in r.details.lines() {
                    println!("    {line}");
                }
                all_pass &= r.passed;
            }
            if let Some(p) = &cli.out {
                std::fs::write(p, serde_json::to_string_pretty(&results)?)?;
            }
            if !all_pass {
                std::process::exit(1);
            }
            Ok(())
        }
    }
}

fn main() {
    init_threads();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = match e.downcast_ref::<CoreError>() {
            Some(ce) if ce.is_precondition() => 2,
            _ => 1,
        };
        std::process::exit(code);
    }
}
