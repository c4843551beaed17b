//! Command-line interface for the asymptotic quantum estimation toolkit.
//!
//! Subcommands map one-to-one onto the library operations: model inspection,
//! SLD/Fisher analysis, invariance checks and extension construction, the
//! representation bound, Gaussian-family calculus, finite-n convergence
//! diagnostics, and estimator risk experiments. Exit codes: 0 success,
//! 1 validation error, 2 numerical-convergence error.

mod output;

use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qestim_core::linalg::{complexify, CMatrix, RMatrix};
use qestim_core::model::registry::parse_matrix;
use qestim_core::model::{self, LoadedModel, Model, ModelRegistry};
use qestim_core::{asym, bound, dext, estim, gauss, Error};

use output::{render, write_out, Format, RunInfo, Table};

#[derive(Parser)]
#[command(
    name = "qestim",
    version,
    about = "Asymptotic quantum estimation toolkit",
    after_help = "Models are selected by builtin tag (pure_1d, spin_coherent, bloch_ball, \
                  product_non_iid) or by the path to a JSON model-definition file."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file (defaults to stdout; relative paths land in $QESTIM_OUTPUT_DIR).
    #[arg(long, global = true)]
    output: Option<String>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct ModelArg {
    /// Builtin model tag or path to a model-definition JSON file.
    #[arg(long)]
    model: String,
}

#[derive(Args)]
struct ThetaArg {
    /// Parameter point, comma-separated decimals (e.g. 0.1,0.2,0).
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a model: evaluate the state at a parameter point.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
    /// Symmetric logarithmic derivatives at a parameter point.
    Sld {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
    },
    /// SLD Fisher information matrix at a parameter point.
    Fisher {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
    },
    /// Invariant-extension analysis of the SLD span.
    Dext {
        #[command(subcommand)]
        cmd: DextCmd,
    },
    /// The asymptotic representation bound (Holevo bound of the limit family).
    Bound {
        #[command(subcommand)]
        cmd: BoundCmd,
    },
    /// Gaussian shift family calculus.
    Gauss {
        #[command(subcommand)]
        cmd: GaussCmd,
    },
    /// Finite-n convergence diagnostics.
    Asym {
        #[command(subcommand)]
        cmd: AsymCmd,
    },
    /// Estimator risk experiments.
    Estim {
        #[command(subcommand)]
        cmd: EstimCmd,
    },
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Print the density matrix at a parameter point.
    Show {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
        /// Site index for product families (1-based).
        #[arg(long)]
        site: Option<usize>,
    },
}

#[derive(Subcommand)]
enum DextCmd {
    /// Check whether the SLD span is invariant under the commutation operator.
    Check {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
        /// Invariance tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Build the invariant extension and its Gaussian data.
    Build {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
    },
}

#[derive(Subcommand)]
enum BoundCmd {
    /// Bound from an explicit Gaussian spec file (fields sigma, f).
    Rep {
        /// Path to a JSON file with "sigma" ([[re,im],...] rows) and real "f".
        #[arg(long)]
        spec: String,
        /// Weight matrix: "identity" or a path to a JSON real matrix.
        #[arg(long, default_value = "identity")]
        weight: String,
    },
    /// Full pipeline for an i.i.d. model: SLDs, extension, bound.
    Holevo {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
        /// Weight matrix: "identity", "fisher", or a path to a JSON real matrix.
        #[arg(long, default_value = "identity")]
        weight: String,
    },
}

#[derive(Subcommand)]
enum GaussCmd {
    /// Purity of the Gaussian state with the given covariance.
    Purity {
        /// Path to a JSON file with "sigma".
        #[arg(long)]
        spec: String,
    },
    /// Split a covariance into classical and quantum blocks.
    Split {
        #[arg(long)]
        spec: String,
    },
    /// Characteristic function at a shift and frequency.
    Char {
        #[arg(long)]
        spec: String,
        /// Shift vector, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        /// Frequency vector, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
    },
}

#[derive(Subcommand)]
enum AsymCmd {
    /// Sandwich condition gap at finite block count.
    Sandwich {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        #[arg(long, allow_hyphen_values = true)]
        eta: String,
        #[arg(long)]
        n: u64,
    },
    /// Quasi-characteristic convergence under a local shift.
    Clt {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        /// Frequency vector; repeat the flag for an ordered product.
        #[arg(long, allow_hyphen_values = true, required = true)]
        xi: Vec<String>,
        #[arg(long)]
        n: u64,
    },
    /// Weyl commutation residual at finite block count.
    Weyl {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        #[arg(long, allow_hyphen_values = true)]
        eta: String,
        #[arg(long)]
        n: u64,
    },
    /// Local expansion residual on small tensor powers.
    Qlan {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long)]
        n: u32,
    },
    /// Limiting-measurement demonstration on the pure one-parameter family.
    PovmDemo {
        /// Shift values, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long)]
        n: u64,
    },
}

#[derive(Subcommand)]
enum EstimCmd {
    /// Truncated-estimator risk curve.
    Hodges {
        /// Grid of first-coordinate values, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 64)]
        radial_order: usize,
        #[arg(long, default_value_t = 32)]
        angular_order: usize,
        /// Disable the truncation (plain estimator; flat curve).
        #[arg(long)]
        no_truncation: bool,
    },
    /// Shrinkage-estimator risk by seeded Monte Carlo.
    JamesStein {
        /// Shift vector, three comma-separated decimals.
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Constant risk curve of the bound-achieving regular estimator.
    Regular {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long, default_value = "identity")]
        weight: String,
        /// Shift grid; repeat the flag per point.
        #[arg(long, allow_hyphen_values = true, required = true)]
        h: Vec<String>,
    },
    /// Supremum of a stored risk curve over an index subset.
    Minimax {
        /// Path to a risk-curve CSV produced by this tool.
        #[arg(long)]
        curve: String,
        /// Comma-separated indices (defaults to the full curve).
        #[arg(long)]
        indices: Option<String>,
    },
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("cannot parse `{tok}` as a decimal")))
        })
        .collect()
}

fn parse_indices(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| Error::Invalid(format!("cannot parse `{tok}` as an index")))
        })
        .collect()
}

fn resolve_single(model: &str) -> Result<Arc<dyn Model>, Error> {
    ModelRegistry::builtin().resolve(model)?.single()
}

fn parse_real_matrix_file(path: &str) -> Result<RMatrix, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read matrix file {path}: {e}")))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Invalid(format!("matrix file is not valid JSON: {e}")))?;
    let rows = doc
        .as_array()
        .ok_or_else(|| Error::Invalid("matrix file must be a 2-d array".into()))?;
    let n = rows.len();
    let ncols = rows
        .first()
        .and_then(|r| r.as_array())
        .map(|r| r.len())
        .unwrap_or(0);
    let mut g = RMatrix::zeros(n, ncols);
    for (i, row) in rows.iter().enumerate() {
        let cols = row
            .as_array()
            .filter(|c| c.len() == ncols)
            .ok_or_else(|| Error::Invalid("matrix rows must have equal length".into()))?;
        for (j, v) in cols.iter().enumerate() {
            g[(i, j)] = v
                .as_f64()
                .ok_or_else(|| Error::Invalid("matrix entries must be numbers".into()))?;
        }
    }
    Ok(g)
}

fn resolve_weight(weight: &str, m: &dyn Model, theta: &[f64]) -> Result<RMatrix, Error> {
    match weight {
        "identity" => Ok(RMatrix::identity(m.param_dim(), m.param_dim())),
        "fisher" => model::sld_fisher(m, theta),
        path => parse_real_matrix_file(path),
    }
}

/// Load `{"sigma": ..., "f": ...}` (complex `[re, im]` entries for sigma,
/// plain decimals for f). `f` defaults to the identity.
fn load_gaussian_spec(path: &str) -> Result<(CMatrix, RMatrix), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read spec file {path}: {e}")))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Invalid(format!("spec file is not valid JSON: {e}")))?;
    let sigma = parse_matrix(
        doc.get("sigma")
            .ok_or_else(|| Error::Invalid("spec file needs a matrix field `sigma`".into()))?,
    )?;
    let r = sigma.nrows();
    let f = match doc.get("f") {
        None => RMatrix::identity(r, r),
        Some(v) => {
            let rows = v
                .as_array()
                .ok_or_else(|| Error::Invalid("`f` must be a 2-d array".into()))?;
            let d = rows
                .first()
                .and_then(|r| r.as_array())
                .map(|r| r.len())
                .unwrap_or(0);
            let mut f = RMatrix::zeros(rows.len(), d);
            for (i, row) in rows.iter().enumerate() {
                let cols = row
                    .as_array()
                    .filter(|c| c.len() == d)
                    .ok_or_else(|| Error::Invalid("`f` rows must have equal length".into()))?;
                for (j, v) in cols.iter().enumerate() {
                    f[(i, j)] = v
                        .as_f64()
                        .ok_or_else(|| Error::Invalid("`f` entries must be numbers".into()))?;
                }
            }
            f
        }
    };
    Ok((sigma, f))
}

fn site_family(spec: &str, theta: &[f64]) -> Result<asym::SiteFamily, Error> {
    match ModelRegistry::builtin().resolve(spec)? {
        LoadedModel::Single(m) => asym::SiteFamily::from_model(m, theta),
        LoadedModel::Product(p) => asym::SiteFamily::from_product(p, theta),
    }
}

fn bound_table(res: &bound::BoundResult) -> Table {
    let mut t = Table::new(vec!["name", "i", "j", "re", "im"]);
    t.push(vec![
        json!("value"),
        json!(0),
        json!(0),
        json!(res.value),
        json!(0.0),
    ]);
    t.push(vec![
        json!("iterations"),
        json!(0),
        json!(0),
        json!(res.diagnostics.iterations as f64),
        json!(0.0),
    ]);
    t.push(vec![
        json!("gap_estimate"),
        json!(0),
        json!(0),
        json!(res.diagnostics.gap_estimate),
        json!(0.0),
    ]);
    t.push_real_matrix("k_star", &res.k_star);
    t.push_matrix("z_star", &res.z_star);
    t.push_real_matrix("v_star", &res.v_star);
    t
}

fn scalar_table(pairs: &[(&'static str, Value)]) -> Table {
    let mut t = Table::new(vec!["key", "value"]);
    for (k, v) in pairs {
        t.push(vec![json!(k), v.clone()]);
    }
    t
}

/// Read back a risk-curve CSV written by this tool (comment lines skipped).
fn read_curve_csv(path: &str) -> Result<estim::RiskCurve, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read curve file {path}: {e}")))?;
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Invalid("curve file is empty".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let a_idx = cols
        .iter()
        .position(|c| *c == "abscissa")
        .ok_or_else(|| Error::Invalid("curve file needs an `abscissa` column".into()))?;
    let r_idx = cols
        .iter()
        .position(|c| *c == "risk")
        .ok_or_else(|| Error::Invalid("curve file needs a `risk` column".into()))?;
    let s_idx = cols.iter().position(|c| *c == "stderr");
    let mut abscissa = Vec::new();
    let mut risk = Vec::new();
    let mut stderr = Vec::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> Result<f64, Error> {
            cells
                .get(i)
                .and_then(|c| c.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Invalid(format!("bad curve row `{line}`")))
        };
        abscissa.push(get(a_idx)?);
        risk.push(get(r_idx)?);
        if let Some(i) = s_idx {
            stderr.push(get(i)?);
        }
    }
    let curve = estim::RiskCurve {
        abscissa,
        risk,
        stderr: if stderr.is_empty() {
            None
        } else {
            Some(stderr)
        },
        meta: estim::CurveMeta::default(),
    };
    curve.validate()?;
    Ok(curve)
}

fn curve_table(curve: &estim::RiskCurve) -> Table {
    let mut t = if curve.stderr.is_some() {
        Table::new(vec!["abscissa", "risk", "stderr"])
    } else {
        Table::new(vec!["abscissa", "risk"])
    };
    for i in 0..curve.abscissa.len() {
        let mut row = vec![json!(curve.abscissa[i]), json!(curve.risk[i])];
        if let Some(se) = &curve.stderr {
            row.push(json!(se[i]));
        }
        t.push(row);
    }
    t
}

fn run(cli: &Cli) -> Result<(Table, Option<u64>), Error> {
    match &cli.command {
        Command::Model {
            cmd: ModelCmd::Show { model, theta, site },
        } => {
            let theta = parse_list(&theta.theta)?;
            let loaded = ModelRegistry::builtin().resolve(&model.model)?;
            let rho = match (&loaded, site) {
                (LoadedModel::Product(p), site) => {
                    let k = site.unwrap_or(1).max(1);
                    model::state_at(&p.site(k), &theta)?
                }
                (LoadedModel::Single(m), None) => model::state_at(m.as_ref(), &theta)?,
                (LoadedModel::Single(_), Some(_)) => {
                    return Err(Error::Invalid(
                        "--site applies only to product families".into(),
                    ))
                }
            };
            let mut t = Table::new(vec!["name", "i", "j", "re", "im"]);
            t.push_matrix("rho", rho.matrix());
            Ok((t, None))
        }
        Command::Sld { model, theta } => {
            let theta = parse_list(&theta.theta)?;
            let m = resolve_single(&model.model)?;
            let slds = model::sld(m.as_ref(), &theta)?;
            let mut t = Table::new(vec!["name", "i", "j", "re", "im"]);
            for (idx, l) in slds.iter().enumerate() {
                t.push_matrix(&format!("L{}", idx + 1), l.matrix());
            }
            Ok((t, None))
        }
        Command::Fisher { model, theta } => {
            let theta = parse_list(&theta.theta)?;
            let m = resolve_single(&model.model)?;
            let j = model::sld_fisher(m.as_ref(), &theta)?;
            let mut t = Table::new(vec!["name", "i", "j", "re", "im"]);
            t.push_real_matrix("fisher", &j);
            Ok((t, None))
        }
        Command::Dext { cmd } => match cmd {
            DextCmd::Check { model, theta, tol } => {
                let theta = parse_list(&theta.theta)?;
                let m = resolve_single(&model.model)?;
                let rho = model::state_at(m.as_ref(), &theta)?;
                let slds = model::sld(m.as_ref(), &theta)?;
                let report = dext::check_d_invariance(&rho, &slds, *tol)?;
                Ok((
                    scalar_table(&[
                        ("invariant", json!(report.invariant)),
                        ("max_residual", json!(report.max_residual())),
                        ("condition_i_gap", json!(report.condition_i_gap)),
                        ("gram_min_eig", json!(report.gram_min_eig)),
                    ]),
                    None,
                ))
            }
            DextCmd::Build { model, theta } => {
                let theta = parse_list(&theta.theta)?;
                let m = resolve_single(&model.model)?;
                let rho = model::state_at(m.as_ref(), &theta)?;
                let slds = model::sld(m.as_ref(), &theta)?;
                let ext = dext::build_d_extension(&rho, &slds)?;
                let mut t = Table::new(vec!["name", "i", "j", "re", "im"]);
                t.push(vec![
                    json!("r"),
                    json!(0),
                    json!(0),
                    json!(ext.r() as f64),
                    json!(0.0),
                ]);
                for (idx, x) in ext.observables.iter().enumerate() {
                    t.push_matrix(&format!("X{}", idx + 1), x.matrix());
                }
                t.push_matrix("sigma", &ext.sigma);
                t.push_real_matrix("a", &ext.a);
                t.push_real_matrix("f", &ext.f);
                t.push_matrix("tau", &ext.tau);
                Ok((t, None))
            }
        },
        Command::Bound { cmd } => match cmd {
            BoundCmd::Rep { spec, weight } => {
                let (sigma, f) = load_gaussian_spec(spec)?;
                let tau = &sigma * complexify(&f);
                let d = f.ncols();
                let g = match weight.as_str() {
                    "identity" => RMatrix::identity(d, d),
                    path => parse_real_matrix_file(path)?,
                };
                let res = bound::rep_bound(&sigma, &tau, &g)?;
                Ok((bound_table(&res), None))
            }
            BoundCmd::Holevo {
                model,
                theta,
                weight,
            } => {
                let theta = parse_list(&theta.theta)?;
                let m = resolve_single(&model.model)?;
                let g = resolve_weight(weight, m.as_ref(), &theta)?;
                let res = bound::holevo_bound_iid(m.as_ref(), &theta, &g)?;
                Ok((bound_table(&res), None))
            }
        },
        Command::Gauss { cmd } => match cmd {
            GaussCmd::Purity { spec } => {
                let (sigma, _) = load_gaussian_spec(spec)?;
                let p = gauss::purity(&sigma)?;
                Ok((
                    scalar_table(&[
                        ("tr_rho_sq", json!(p.tr_rho_sq)),
                        ("is_pure", json!(p.is_pure)),
                        ("det_v", json!(p.det_v)),
                        ("det_s", json!(p.det_s)),
                    ]),
                    None,
                ))
            }
            GaussCmd::Split { spec } => {
                let (sigma, _) = load_gaussian_spec(spec)?;
                let split = gauss::split_classical_quantum(&sigma)?;
                let mut t = Table::new(vec!["name", "i", "j", "re", "im"]);
                t.push(vec![
                    json!("r_c"),
                    json!(0),
                    json!(0),
                    json!(split.r_c as f64),
                    json!(0.0),
                ]);
                t.push(vec![
                    json!("r_q"),
                    json!(0),
                    json!(0),
                    json!(split.r_q as f64),
                    json!(0.0),
                ]);
                t.push(vec![
                    json!("condition_number"),
                    json!(0),
                    json!(0),
                    json!(split.condition_number),
                    json!(0.0),
                ]);
                t.push(vec![
                    json!("residual"),
                    json!(0),
                    json!(0),
                    json!(split.residual),
                    json!(0.0),
                ]);
                t.push_real_matrix("transform", &split.transform);
                t.push_real_matrix("sigma_c", &split.sigma_c);
                t.push_matrix("sigma_q", &split.sigma_q);
                Ok((t, None))
            }
            GaussCmd::Char { spec, h, xi } => {
                let (sigma, f) = load_gaussian_spec(spec)?;
                let gspec = gauss::GaussianShiftSpec::from_sigma_f(sigma, f)?;
                let h = parse_list(h)?;
                let xi = parse_list(xi)?;
                let v = gauss::char_function(&gspec, &h, &xi)?;
                Ok((
                    scalar_table(&[("re", json!(v.re)), ("im", json!(v.im))]),
                    None,
                ))
            }
        },
        Command::Asym { cmd } => match cmd {
            AsymCmd::Sandwich {
                model,
                theta,
                xi,
                eta,
                n,
            } => {
                let theta = parse_list(&theta.theta)?;
                let fam = site_family(&model.model, &theta)?;
                let out = asym::sandwich_value(&fam, &parse_list(xi)?, &parse_list(eta)?, *n)?;
                Ok((
                    scalar_table(&[
                        ("lhs_re", json!(out.lhs.re)),
                        ("lhs_im", json!(out.lhs.im)),
                        ("rhs_re", json!(out.rhs.re)),
                        ("rhs_im", json!(out.rhs.im)),
                        ("gap", json!(out.gap)),
                    ]),
                    None,
                ))
            }
            AsymCmd::Clt {
                model,
                theta,
                h,
                xi,
                n,
            } => {
                let theta = parse_list(&theta.theta)?;
                let fam = site_family(&model.model, &theta)?;
                let h = parse_list(h)?;
                let xis = xi
                    .iter()
                    .map(|s| parse_list(s))
                    .collect::<Result<Vec<_>, _>>()?;
                let out = asym::quasi_char_finite_n(&fam, &h, &xis, *n)?;
                Ok((
                    scalar_table(&[
                        ("finite_n_re", json!(out.finite_n.re)),
                        ("finite_n_im", json!(out.finite_n.im)),
                        ("limit_re", json!(out.limit.re)),
                        ("limit_im", json!(out.limit.im)),
                        ("gap", json!(out.gap)),
                    ]),
                    None,
                ))
            }
            AsymCmd::Weyl {
                model,
                theta,
                xi,
                eta,
                n,
            } => {
                let theta = parse_list(&theta.theta)?;
                let fam = site_family(&model.model, &theta)?;
                let r = asym::weyl_residual(&fam, &parse_list(xi)?, &parse_list(eta)?, *n)?;
                Ok((scalar_table(&[("residual", json!(r))]), None))
            }
            AsymCmd::Qlan { model, theta, h, n } => {
                let theta = parse_list(&theta.theta)?;
                let m = resolve_single(&model.model)?;
                let report = asym::qlan_residual(m.as_ref(), &theta, &parse_list(h)?, *n)?;
                Ok((
                    scalar_table(&[
                        ("residual", json!(report.residual)),
                        ("singular_mass", json!(report.singular_mass)),
                        ("drift_norm", json!(report.drift_norm)),
                        ("quadratic_term", json!(report.quadratic_term)),
                    ]),
                    None,
                ))
            }
            AsymCmd::PovmDemo { h, n } => {
                let rows = asym::no_limit_povm_demo(&parse_list(h)?, *n)?;
                let mut t = Table::new(vec![
                    "h",
                    "finite_n_prob",
                    "limit_prob",
                    "m_quadrature",
                    "m_check_gap",
                    "m_max",
                ]);
                for row in rows {
                    t.push(vec![
                        json!(row.h),
                        json!(row.finite_n_prob),
                        json!(row.limit_prob),
                        json!(row.m_quadrature),
                        json!(row.m_check_gap),
                        json!(row.m_max),
                    ]);
                }
                Ok((t, None))
            }
        },
        Command::Estim { cmd } => match cmd {
            EstimCmd::Hodges {
                grid,
                n,
                radial_order,
                angular_order,
                no_truncation,
            } => {
                let opts = estim::HodgesOptions {
                    radial_order: *radial_order,
                    angular_order: *angular_order,
                    truncation: !no_truncation,
                };
                let curve = estim::hodges_risk(&parse_list(grid)?, *n, &opts)?;
                Ok((curve_table(&curve), None))
            }
            EstimCmd::JamesStein { h, samples, seed } => {
                let h = parse_list(h)?;
                if h.len() != 3 {
                    return Err(Error::Invalid("--h must have three components".into()));
                }
                let out = estim::james_stein_risk(&[h[0], h[1], h[2]], *samples, *seed)?;
                Ok((
                    scalar_table(&[
                        ("risk", json!(out.risk)),
                        ("stderr", json!(out.stderr)),
                        ("rng", json!(estim::RNG_ALGORITHM)),
                    ]),
                    Some(*seed),
                ))
            }
            EstimCmd::Regular {
                model,
                theta,
                weight,
                h,
            } => {
                let theta = parse_list(&theta.theta)?;
                let m = resolve_single(&model.model)?;
                let g = resolve_weight(weight, m.as_ref(), &theta)?;
                let res = bound::holevo_bound_iid(m.as_ref(), &theta, &g)?;
                let grid = h
                    .iter()
                    .map(|s| parse_list(s))
                    .collect::<Result<Vec<_>, _>>()?;
                let curve = estim::regular_risk(&res, &g, &grid)?;
                Ok((curve_table(&curve), None))
            }
            EstimCmd::Minimax { curve, indices } => {
                let c = read_curve_csv(curve)?;
                let subset = match indices {
                    Some(s) => parse_indices(s)?,
                    None => (0..c.risk.len()).collect(),
                };
                let sup = estim::minimax_scan(&c, &subset)?;
                Ok((
                    scalar_table(&[
                        ("sup_risk", json!(sup)),
                        ("subset_size", json!(subset.len())),
                    ]),
                    None,
                ))
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let command = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match run(&cli) {
        Ok((table, seed)) => {
            let timestamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let text = render(&table, &RunInfo { command, seed }, cli.format, timestamp);
            match write_out(&text, cli.output.as_deref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
