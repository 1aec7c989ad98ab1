//! One pipeline per subcommand. Each merges flags over the config file,
//! fills defaults, runs, and writes its artifacts.

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use jacdet::quadrature::PolarRule;
use jacdet::*;

use crate::config::{merge, Emitter};
use crate::svg::heatmap;
use crate::{CliError, Context, Outcome};

type Result<T, E = CliError> = std::result::Result<T, E>;

/// A boundary trace or input function: a name with default parameters on
/// the command line, or a full tagged object in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Named(String),
    Full(AnalyticSolution),
}

fn parse_function(s: &str) -> std::result::Result<FunctionSpec, String> {
    Ok(FunctionSpec::Named(s.to_string()))
}

impl FunctionSpec {
    fn resolve(&self, p: Option<f64>) -> Result<AnalyticSolution, CliError> {
        let f = match self {
            FunctionSpec::Full(f) => *f,
            FunctionSpec::Named(name) => match name.as_str() {
                "aronsson" => AnalyticSolution::Aronsson,
                "saddle" => AnalyticSolution::Saddle,
                "affine" => AnalyticSolution::Affine {
                    b: 0.0,
                    a: [1.0, 0.0],
                },
                "cone" => AnalyticSolution::Cone { vertex: [0.0, 0.0] },
                "radial_p" => AnalyticSolution::RadialP {
                    p: p.unwrap_or(4.0),
                },
                other => {
                    return Err(CliError::Config(format!(
                        "unknown function '{other}' (aronsson, saddle, affine, cone, radial_p)"
                    )))
                }
            },
        };
        f.validate()?;
        Ok(f)
    }
}

fn pair(v: &Option<Vec<f64>>, default: [f64; 2], what: &str) -> Result<[f64; 2], CliError> {
    match v.as_deref() {
        None => Ok(default),
        Some([a, b]) => Ok([*a, *b]),
        Some(other) => Err(CliError::Config(format!(
            "{what} needs two values, got {}",
            other.len()
        ))),
    }
}

fn list(v: &Option<Vec<f64>>, default: &[f64]) -> Vec<f64> {
    v.clone().unwrap_or_else(|| default.to_vec())
}

fn to_json(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn square_grid(domain: [f64; 2], n: usize) -> Result<GridSpec, CliError> {
    Ok(GridSpec::square(n, domain[0], domain[1])?)
}

fn done(pass: bool, report: std::path::PathBuf, mut extra: Vec<std::path::PathBuf>) -> Outcome {
    extra.insert(0, report.clone());
    Outcome {
        pass,
        report,
        artifacts: extra,
    }
}

// ---------------------------------------------------------------- solve

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// Boundary trace: aronsson, saddle, affine, cone or radial_p.
    #[arg(long, value_parser = parse_function)]
    pub bc: Option<FunctionSpec>,
    /// Square domain `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    /// Cells per side.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Solve the p-Laplace equation with the standard ε-continuation.
    #[arg(long)]
    pub p: Option<f64>,
    /// Exponent β of the regularized equation (ignored with --p).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Regularization ε of the regularized equation (ignored with --p).
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_newton: Option<usize>,
    /// Write a heatmap of the pointwise determinant.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,
    /// Embed the solved field in the JSON report.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub save_field: Option<bool>,
}

#[derive(Debug, Serialize)]
struct SolveParams {
    bc: AnalyticSolution,
    domain: [f64; 2],
    grid: usize,
    p: Option<f64>,
    solver: SolveConfig,
    svg: bool,
    save_field: bool,
}

/// Whether `f` solves the equation exactly, making it an oracle.
fn is_exact_solution(f: &AnalyticSolution, cfg: &SolveConfig) -> bool {
    match *f {
        AnalyticSolution::Affine { .. } => true,
        AnalyticSolution::Saddle => cfg.beta == 0.0,
        AnalyticSolution::RadialP { p } => cfg.epsilon == 0.0 && cfg.p() == p,
        _ => false,
    }
}

/// Largest amount by which interior values leave the boundary range.
fn max_principle_excess(u: &ScalarField) -> f64 {
    let g = u.grid;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, j, _) in g.nodes() {
        if g.is_boundary(i, j) {
            lo = lo.min(u.at(i, j));
            hi = hi.max(u.at(i, j));
        }
    }
    u.values
        .iter()
        .fold(0.0f64, |m, v| m.max(v - hi).max(lo - v))
}

pub fn solve(ctx: &Context, flags: &SolveArgs) -> Result<Outcome, CliError> {
    let a = merge("solve", flags, ctx.file.as_ref())?;
    let p = a.p;
    let bc =
        a.bc.clone()
            .unwrap_or(FunctionSpec::Named("aronsson".into()))
            .resolve(p)?;
    let mut solver = match p {
        Some(p) => {
            if !(p > 1.0 && p.is_finite()) {
                return Err(CliError::Config(format!("p must exceed 1, got {p}")));
            }
            SolveConfig::pharmonic(p)
        }
        None => SolveConfig::new(a.beta.unwrap_or(0.0), a.eps.unwrap_or(0.0)),
    };
    if let Some(t) = a.tol {
        solver.tol = t;
    }
    if let Some(m) = a.max_newton {
        solver.max_newton = m;
    }
    solver.validate()?;
    let params = SolveParams {
        bc,
        domain: pair(&a.domain, [1.0, 2.0], "domain")?,
        grid: a.grid.unwrap_or(64),
        p,
        solver,
        svg: a.svg.unwrap_or(false),
        save_field: a.save_field.unwrap_or(false),
    };
    let grid = square_grid(params.domain, params.grid)?;
    if bc.meets_rectangle([grid.x0, grid.y0], [grid.x1(), grid.y1()])
        && !matches!(bc, AnalyticSolution::Aronsson)
    {
        return Err(CliError::Config(format!(
            "the domain meets the singular set of {}",
            bc.name()
        )));
    }
    let emit = Emitter::new(&ctx.output_dir, "solve", &params, ctx.seed)?;

    let out = solve_regularized(&grid, &params.solver, &|x| bc.value(x), None)?;
    let excess = max_principle_excess(&out.u);
    let oracle_error = is_exact_solution(&bc, &params.solver).then(|| {
        out.u
            .max_abs_diff(&ScalarField::sample(grid, |x| bc.value(x)).expect("finite trace"))
    });
    let monotone = out.report.energy_monotone();
    let pass = monotone && excess <= 1e-12;
    let mut results = json!({
        "report": to_json(&out.report),
        "iterations": out.report.iterations(),
        "residual": out.report.residual(),
        "energy_monotone": monotone,
        "max_principle_excess": excess,
        "oracle_error": oracle_error,
    });
    if params.save_field {
        results["field"] = to_json(&out.u);
    }
    let mut extra = Vec::new();
    if params.svg {
        let det = pointwise_det(DetSource::Sampled(&out.u), params.solver.beta, p, 0.0)?;
        let title = format!("det DV_beta, beta = {}", params.solver.beta);
        extra.push(emit.svg(&heatmap(&det.det, Some(&det.masked), &title))?);
    }
    Ok(done(pass, emit.json(pass, results)?, extra))
}

// ------------------------------------------------------------- jacobian

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Weak,
    Pointwise,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobianArgs {
    /// Field JSON to pair; otherwise the function named by --u is sampled.
    #[arg(long)]
    pub field: Option<std::path::PathBuf>,
    #[arg(long, value_parser = parse_function)]
    pub u: Option<FunctionSpec>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Exponent of a p-harmonic input.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub psi_center: Option<Vec<f64>>,
    #[arg(long)]
    pub psi_radius: Option<f64>,
    /// Use the plateau bump instead of the polynomial one.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plateau: Option<bool>,
    #[arg(long)]
    pub psi_order: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Radius of the ball for the bound checks (defaults to the bump radius).
    #[arg(long)]
    pub ball_radius: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub orthogonal: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,
}

#[derive(Debug, Serialize)]
struct JacobianParams {
    source: Value,
    beta: f64,
    options: PairingOptions,
    psi: TestBump,
    mode: ModeArg,
    ball_radius: f64,
    tol: f64,
    svg: bool,
}

pub fn jacobian(ctx: &Context, flags: &JacobianArgs) -> Result<Outcome, CliError> {
    let a = merge("jacobian", flags, ctx.file.as_ref())?;
    let (u, exact, source) = match &a.field {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let u = ScalarField::from_json(&text)?;
            (u, None, json!({ "field": path }))
        }
        None => {
            let f =
                a.u.clone()
                    .unwrap_or(FunctionSpec::Named("aronsson".into()))
                    .resolve(a.p)?;
            let domain = pair(&a.domain, [1.0, 2.0], "domain")?;
            let grid = square_grid(domain, a.grid.unwrap_or(128))?;
            if f.meets_rectangle([grid.x0, grid.y0], [grid.x1(), grid.y1()]) {
                return Err(CliError::Config(format!(
                    "the domain meets the singular set of {}",
                    f.name()
                )));
            }
            let u = ScalarField::sample(grid, |x| f.value(x))?;
            (
                u,
                Some(f),
                json!({ "function": f, "domain": domain, "grid": grid.nx }),
            )
        }
    };
    let g = u.grid;
    let mid = [g.x0 + 0.5 * (g.x1() - g.x0), g.y0 + 0.5 * (g.y1() - g.y0)];
    let center = pair(&a.psi_center, mid, "psi_center")?;
    let radius = a
        .psi_radius
        .unwrap_or(0.4 * (g.x1() - g.x0).min(g.y1() - g.y0));
    let psi = if a.plateau.unwrap_or(false) {
        TestBump::plateau(center, radius)?
    } else {
        TestBump::with_order(center, radius, a.psi_order.unwrap_or(bump::DEFAULT_ORDER))?
    };
    let params = JacobianParams {
        source,
        beta: a.beta.unwrap_or(0.0),
        options: PairingOptions {
            epsilon: a.eps.unwrap_or(0.0),
            orthogonal: a.orthogonal.unwrap_or(false),
            p: a.p,
        },
        psi,
        mode: a.mode.unwrap_or(ModeArg::Weak),
        ball_radius: a.ball_radius.unwrap_or(radius),
        tol: a.tol.unwrap_or(1e-3),
        svg: a.svg.unwrap_or(false),
    };
    let emit = Emitter::new(&ctx.output_dir, "jacobian", &params, ctx.seed)?;
    let det_source = match &exact {
        Some(f) => DetSource::Exact { f, grid: g },
        None => DetSource::Sampled(&u),
    };
    let report = match params.mode {
        ModeArg::Weak => weak_det_pairing(&u, params.beta, &psi, &params.options)?,
        ModeArg::Pointwise => pointwise_pairing(det_source, params.beta, &psi, &params.options)?,
    };
    let verdict = check_bounds(&report, center, params.ball_radius, &g, params.tol)?;
    let mut extra = Vec::new();
    if params.svg {
        let det = pointwise_det(
            det_source,
            params.beta,
            params.options.p,
            params.options.epsilon,
        )?;
        let title = format!("det DV_beta, beta = {}", params.beta);
        extra.push(emit.svg(&heatmap(&det.det, Some(&det.masked), &title))?);
    }
    let results = json!({ "pairing": to_json(&report), "bounds": to_json(&verdict) });
    Ok(done(verdict.pass, emit.json(verdict.pass, results)?, extra))
}

// ------------------------------------------------------------- identity

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityArgs {
    /// Identity names separated by commas, or `all`.
    #[arg(long, value_delimiter = ',')]
    pub which: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub degree: Option<usize>,
    /// Sample points per trial for the pointwise identities.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Residual threshold; defaults to 1e-11 for pointwise identities and
    /// 1e-8 for the integrated ones.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Serialize)]
struct IdentityParams {
    which: Vec<IdentityId>,
    beta: Vec<f64>,
    eps: Vec<f64>,
    p: Vec<f64>,
    trials: u64,
    degree: usize,
    samples: usize,
    tol: Option<f64>,
}

const GRADIENT_FILTER: f64 = 0.05;
const POINTWISE_TOL: f64 = 1e-11;
const QUADRATURE_TOL: f64 = 1e-8;

fn default_tol(id: IdentityId) -> f64 {
    match id {
        IdentityId::WeakStructural | IdentityId::USquared => QUADRATURE_TOL,
        _ => POINTWISE_TOL,
    }
}

/// All residual records of one trial, in a fixed order.
fn identity_trial(
    prm: &IdentityParams,
    trial: u64,
    seed: u64,
) -> Result<Vec<IdentityResidual>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = PolyField::random(prm.degree, &mut rng)?;
    let all = uniform_samples(prm.samples, [-1.0, -1.0], [1.0, 1.0], seed);
    let regular: Vec<Point> = all
        .iter()
        .copied()
        .filter(|&x| {
            let g = v.gradient(x);
            g[0].hypot(g[1]) > GRADIENT_FILTER
        })
        .collect();
    let mut out = Vec::new();
    for &id in &prm.which {
        match id {
            IdentityId::DivStructure => out.push(check_div_structure(&v, &all)),
            IdentityId::HessianIdentity => out.push(check_hessian_identity(&v, &all)),
            IdentityId::Structural => {
                for &b in &prm.beta {
                    for &e in &prm.eps {
                        let s = if e == 0.0 { &regular } else { &all };
                        out.push(check_structural_identity(&v, b, e, s)?);
                    }
                }
            }
            IdentityId::WeakStructural => {
                let psi = TestBump::with_order([0.0, 0.0], 0.8, 8)?;
                let grid = GridSpec::square(256, -1.0, 1.0)?;
                for &b in &prm.beta {
                    for &e in prm.eps.iter().filter(|e| **e > 0.0) {
                        out.push(check_weak_identity(&v, b, e, &psi, &grid)?);
                    }
                }
            }
            IdentityId::USquared => {
                // infinity-harmonic inputs: random affine functions and cones
                // with the vertex outside the square
                let f = if trial % 2 == 0 {
                    AnalyticSolution::Affine {
                        b: rng.gen_range(-1.0..1.0),
                        a: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    }
                } else {
                    let t = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r = rng.gen_range(2.0..3.0);
                    AnalyticSolution::Cone {
                        vertex: [r * t.cos(), r * t.sin()],
                    }
                };
                let psi = TestBump::with_order([0.0, 0.0], 0.9, 8)?;
                let grid = GridSpec::square(256, -1.0, 1.0)?;
                out.push(check_u2_formula(&f, &psi, &grid)?);
            }
            IdentityId::PHarmonic => {
                for &p in &prm.p {
                    for &b in &prm.beta {
                        out.push(check_pharmonic_formula(p, &v, b, &regular)?);
                    }
                }
            }
            IdentityId::LogGradient => {
                for &p in &prm.p {
                    out.push(check_log_gradient_identity(p, &v, &regular)?);
                }
            }
        }
    }
    Ok(out.into_iter().map(|r| r.with_seed(seed)).collect())
}

pub fn identity(ctx: &Context, flags: &IdentityArgs) -> Result<Outcome, CliError> {
    let a = merge("identity", flags, ctx.file.as_ref())?;
    let names = a.which.clone().unwrap_or_else(|| vec!["all".into()]);
    let which = if names.iter().any(|n| n == "all") {
        IdentityId::ALL.to_vec()
    } else {
        names
            .iter()
            .map(|n| IdentityId::parse(n))
            .collect::<jacdet::Result<Vec<_>>>()?
    };
    let prm = IdentityParams {
        which,
        beta: list(&a.beta, &[-0.5, 0.0, 0.5, 1.0, 2.0]),
        eps: list(&a.eps, &[0.1, 1.0]),
        p: list(&a.p, &[1.5, 2.0, 3.0, 4.0, 10.0]),
        trials: a.trials.unwrap_or(50),
        degree: a.degree.unwrap_or(4),
        samples: a.samples.unwrap_or(100),
        tol: a.tol,
    };
    if prm.degree > poly::MAX_DEGREE {
        return Err(CliError::Config(format!(
            "degree must be at most {}",
            poly::MAX_DEGREE
        )));
    }
    let emit = Emitter::new(&ctx.output_dir, "identity", &prm, ctx.seed)?;
    let per_trial = (0..prm.trials)
        .into_par_iter()
        .map(|t| identity_trial(&prm, t, ctx.seed.wrapping_add(t)).map(|r| (t, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut worst = serde_json::Map::new();
    let mut pass = true;
    for (t, residuals) in per_trial {
        for r in residuals {
            let tol = prm.tol.unwrap_or_else(|| default_tol(r.identity));
            let ok = r.max_rel_residual <= tol && r.inequality_holds != Some(false);
            pass &= ok;
            let key = r.identity.name().to_string();
            let prev = worst.get(&key).and_then(Value::as_f64).unwrap_or(0.0);
            worst.insert(key, json!(prev.max(r.max_rel_residual)));
            let mut rec = to_json(&r);
            rec["trial"] = json!(t);
            rec["pass"] = json!(ok);
            records.push(rec);
        }
    }
    let lines = emit.jsonl(&records)?;
    let results = json!({ "records": records.len(), "max_rel_residual": worst });
    Ok(done(pass, emit.json(pass, results)?, vec![lines]))
}

// ------------------------------------------------------------- extremal

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremalArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Angular samples of the annulus.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub radial: Option<usize>,
    /// Dyadic annulus indices for the energy table.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ks: Option<Vec<i32>>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub sharp_tol: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ExtremalRun {
    p: f64,
    beta: f64,
    sample: AnnulusSample,
    ks: Vec<i32>,
    tol: f64,
    sharp_tol: f64,
}

pub fn extremal(ctx: &Context, flags: &ExtremalArgs) -> Result<Outcome, CliError> {
    let a = merge("extremal", flags, ctx.file.as_ref())?;
    let base = AnnulusSample::default();
    let prm = ExtremalRun {
        p: a.p.unwrap_or(2.0),
        beta: a.beta.unwrap_or(0.0),
        sample: AnnulusSample {
            angular: a.samples.unwrap_or(base.angular),
            radial: a.radial.unwrap_or(base.radial),
            ..base
        },
        ks: a.ks.clone().unwrap_or_else(|| (0..=6).collect()),
        tol: a.tol.unwrap_or(1e-8),
        sharp_tol: a.sharp_tol.unwrap_or(1e-6),
    };
    let params = ExtremalParams::new(prm.p)?;
    let emit = Emitter::new(&ctx.output_dir, "extremal", &prm, ctx.seed)?;
    let dist = distortion_sup(&params, prm.beta, &prm.sample)?;
    let sharp = sharpness_constants(&params, prm.beta, &prm.sample)?;
    let energies = annulus_log_energy(&params, &prm.ks)?;
    let pass = dist.matches_target(prm.tol) && (sharp.lhs_sup - sharp.rhs).abs() <= prm.sharp_tol;
    let rows: Vec<Vec<String>> = energies
        .iter()
        .map(|e| {
            vec![
                e.k.to_string(),
                e.inner.to_string(),
                e.outer.to_string(),
                e.energy.to_string(),
            ]
        })
        .collect();
    let csv = emit.csv(&["k", "inner", "outer", "energy"], &rows)?;
    let results = json!({
        "params": to_json(&params),
        "distortion": to_json(&dist),
        "sharpness": to_json(&sharp),
        "energies": to_json(&energies),
    });
    Ok(done(pass, emit.json(pass, results)?, vec![csv]))
}

// ------------------------------------------------------------- estimate

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateArg {
    Gradient,
    L4,
    Flatness,
    Mass,
    Cone,
    Liouville,
    All,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateArgs {
    #[arg(long, value_enum, value_delimiter = ',')]
    pub which: Option<Vec<EstimateArg>>,
    /// Input function: aronsson, saddle, affine, cone or radial_p.
    #[arg(long, value_parser = parse_function)]
    pub u: Option<FunctionSpec>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Affine comparison `b,a1,a2`; defaults to the least-squares fit on `B(c, 2r)`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub affine: Option<Vec<f64>>,
    /// Radii for the Liouville functional.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long)]
    pub radial: Option<usize>,
    #[arg(long)]
    pub angular: Option<usize>,
}

#[derive(Debug, Serialize)]
struct EstimateParams {
    which: Vec<EstimateArg>,
    u: AnalyticSolution,
    center: [f64; 2],
    radius: f64,
    affine: Option<Affine>,
    radii: Vec<f64>,
    radial: usize,
    angular: usize,
}

pub fn estimate(ctx: &Context, flags: &EstimateArgs) -> Result<Outcome, CliError> {
    use EstimateArg::*;
    let a = merge("estimate", flags, ctx.file.as_ref())?;
    let mut which = a.which.clone().unwrap_or_else(|| vec![All]);
    if which.contains(&All) {
        which = vec![Gradient, L4, Flatness, Mass, Cone, Liouville];
    }
    let affine = match a.affine.as_deref() {
        None => None,
        Some([b, a1, a2]) => Some(Affine {
            b: *b,
            a: [*a1, *a2],
        }),
        Some(v) => {
            return Err(CliError::Config(format!(
                "affine needs b,a1,a2; got {} values",
                v.len()
            )))
        }
    };
    let rule = PolarRule::default();
    let prm = EstimateParams {
        which,
        u: a.u
            .clone()
            .unwrap_or(FunctionSpec::Named("aronsson".into()))
            .resolve(None)?,
        center: pair(&a.center, [2.0, 1.5], "center")?,
        radius: a.radius.unwrap_or(0.5),
        affine,
        radii: list(&a.radii, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]),
        radial: a.radial.unwrap_or(rule.radial),
        angular: a.angular.unwrap_or(rule.angular),
    };
    let rule = PolarRule::new(prm.radial, prm.angular);
    let emit = Emitter::new(&ctx.output_dir, "estimate", &prm, ctx.seed)?;
    let u = &prm.u;
    let (c, r) = (prm.center, prm.radius);
    let p = match prm.affine {
        Some(p) => p,
        None => affine_fit(&rule, u, c, 2.0 * r)?,
    };
    let mut reports = Vec::new();
    let mut extra = Vec::new();
    let mut liouville = Value::Null;
    for w in &prm.which {
        match w {
            Gradient => reports.push(gradient_estimate_ratio(&rule, u, c, r)?),
            L4 => reports.push(l4_bound_ratio(&rule, u, c, r)?),
            Flatness => reports.push(flatness_ratio(&rule, u, &p, c, r)?),
            Mass => reports.push(jacobian_mass_bound(&rule, u, c, r)?),
            Cone => reports.push(cone_comparison_bound(&rule, u, &p, c, r)?),
            Liouville => {
                let pts = liouville_residual(&rule, u, &prm.radii)?;
                let rows: Vec<Vec<String>> = pts
                    .iter()
                    .map(|q| {
                        vec![
                            q.radius.to_string(),
                            q.h.to_string(),
                            q.affine_residual.to_string(),
                        ]
                    })
                    .collect();
                extra.push(emit.csv(&["R", "h", "affine_residual"], &rows)?);
                let growth = (pts.len() >= 2).then(|| growth_exponent(&pts));
                liouville = json!({ "points": to_json(&pts), "growth_exponent": growth });
            }
            All => unreachable!("expanded above"),
        }
    }
    let pass = reports.iter().all(|r| r.holds != Some(false) && !r.anomaly);
    let results =
        json!({ "affine": to_json(&p), "reports": to_json(&reports), "liouville": liouville });
    Ok(done(pass, emit.json(pass, results)?, extra))
}

// ---------------------------------------------------------------- sweep

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    /// Ascending exponents, each warm-started from the previous solution.
    #[arg(long, value_delimiter = ',')]
    pub ps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    /// Boundary trace, also the infinity-harmonic limit.
    #[arg(long, value_parser = parse_function)]
    pub bc: Option<FunctionSpec>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub psi_center: Option<Vec<f64>>,
    #[arg(long)]
    pub psi_radius: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepParams {
    ps: Vec<f64>,
    beta: Vec<f64>,
    bc: AnalyticSolution,
    domain: [f64; 2],
    grid: usize,
    psi: TestBump,
}

pub fn sweep(ctx: &Context, flags: &SweepArgs) -> Result<Outcome, CliError> {
    let a = merge("sweep", flags, ctx.file.as_ref())?;
    let domain = pair(&a.domain, [1.0, 2.0], "domain")?;
    let mid = 0.5 * (domain[0] + domain[1]);
    let prm = SweepParams {
        ps: list(&a.ps, &solver::DEFAULT_P_SCHEDULE),
        beta: list(&a.beta, &[0.0]),
        bc: a
            .bc
            .clone()
            .unwrap_or(FunctionSpec::Named("aronsson".into()))
            .resolve(None)?,
        domain,
        grid: a.grid.unwrap_or(64),
        psi: TestBump::plateau(
            pair(&a.psi_center, [mid, mid], "psi_center")?,
            a.psi_radius.unwrap_or(0.4 * (domain[1] - domain[0])),
        )?,
    };
    let grid = square_grid(domain, prm.grid)?;
    let bc = prm.bc;
    if bc.meets_rectangle([grid.x0, grid.y0], [grid.x1(), grid.y1()])
        && !matches!(bc, AnalyticSolution::Aronsson)
    {
        return Err(CliError::Config(format!(
            "the domain meets the singular set of {}",
            bc.name()
        )));
    }
    let emit = Emitter::new(&ctx.output_dir, "sweep", &prm, ctx.seed)?;
    let header = ["p", "beta", "pairing", "gap"];
    if prm.ps.is_empty() {
        let csv = emit.csv(&header, &[])?;
        return Ok(done(
            true,
            emit.json(true, json!({ "rows": 0 }))?,
            vec![csv],
        ));
    }
    let sols = infinity_approx(&grid, &|x| bc.value(x), &prm.ps)?;
    let u_inf = ScalarField::sample(grid, |x| bc.value(x))?;
    let fields: Vec<ScalarField> = sols.iter().map(|s| s.u.clone()).collect();
    let seqs = prm
        .beta
        .par_iter()
        .map(|&b| {
            weak_convergence_pairings(&fields, &u_inf, b, &prm.psi, &PairingOptions::default())
        })
        .collect::<jacdet::Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (b, seq) in prm.beta.iter().zip(&seqs) {
        for (k, p) in prm.ps.iter().enumerate() {
            rows.push(vec![
                p.to_string(),
                b.to_string(),
                seq.pairings[k].to_string(),
                seq.gaps[k].to_string(),
            ]);
        }
    }
    let pass = seqs.iter().all(|s| s.gaps_strictly_decreasing());
    let csv = emit.csv(&header, &rows)?;
    let results = json!({
        "sequences": prm.beta.iter().zip(&seqs).map(|(b, s)| json!({"beta": b, "sequence": to_json(s)})).collect::<Vec<_>>(),
        "solves": sols.iter().map(|s| to_json(&s.report)).collect::<Vec<_>>(),
    });
    Ok(done(pass, emit.json(pass, results)?, vec![csv]))
}
