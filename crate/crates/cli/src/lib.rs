//! Pipeline driver behind the `fbms` command line tool.
//!
//! Every subcommand runs the same skeleton: build or load a surface, immerse
//! it in the requested ambient space, run the requested checks, and emit a
//! JSON artifact stamped with the tool version and a hash of the resolved
//! configuration.  All computation is deterministic: random test fields come
//! from a seeded generator and the `FBMS_THREADS` environment variable is
//! recorded but does not influence any numerical path.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::Vector3;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use fbms_core::ambient::{AmbientError, AmbientSpace, FreeBoundaryReport, ImmersedSurface};
use fbms_core::bounds::{
    self, BoundReport, BoundsError, InequalityInputs, RiemannRoch,
};
use fbms_core::dbar::{self, DbarError};
use fbms_core::forms::{
    assemble_area_form, assemble_energy_form, assemble_robin_bundle_form,
    assemble_tangential_form, FormAssembly, FormsError,
};
use fbms_core::heat::{
    self, BoundMode, ClosedFormBound, HeatError, HeatSource, HeatTrace,
    KernelDominationReport,
};
use fbms_core::mesh::{
    builtin_by_name, load_mesh, MeshError, MeshFormat, TopologyInvariants,
    TriangulatedSurface,
};
use fbms_core::section::{SectionField, SectionKind};
use fbms_core::spectral::{
    beta_count, classify_spectrum, solve_spectrum, Classification, SpectralError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Ambient(#[from] AmbientError),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Dbar(#[from] DbarError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which second-variation form a spectral subcommand targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormChoice {
    Area,
    Energy,
    Tangential,
}

impl FormChoice {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "area" => Ok(Self::Area),
            "energy" => Ok(Self::Energy),
            "tangential" => Ok(Self::Tangential),
            other => Err(CliError::Config(format!(
                "unknown form {other:?}; expected area, energy or tangential"
            ))),
        }
    }
}

/// Fully resolved run configuration; serialized into every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub builtin: Option<String>,
    pub mesh_path: Option<PathBuf>,
    pub mesh_format: Option<String>,
    pub resolution: u32,
    pub refine: u32,
    pub ambient: String,
    pub form: FormChoice,
    pub k: usize,
    pub tol_zero: Option<f64>,
    pub tol_min: f64,
    pub tol_orth: f64,
    /// (lo, hi, count) of the logarithmic heat-trace grid.
    pub t_grid: (f64, f64, usize),
    pub c1: f64,
    pub c2: f64,
    pub c_empirical: f64,
    pub seed: u64,
    /// Value of `FBMS_THREADS` at invocation.  Recorded for provenance; the
    /// pipeline is single-threaded so results never depend on it.
    pub threads: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            builtin: Some("flat_disk".into()),
            mesh_path: None,
            mesh_format: None,
            resolution: 8,
            refine: 0,
            ambient: "unit_ball_3".into(),
            form: FormChoice::Area,
            k: 12,
            tol_zero: None,
            tol_min: 0.05,
            tol_orth: 0.05,
            t_grid: (1e-3, 1e2, 32),
            c1: 1.0,
            c2: 1.0,
            c_empirical: 1.0,
            seed: 7,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.resolution < 1 {
            return Err(CliError::Config("resolution must be at least 1".into()));
        }
        if self.builtin.is_none() && self.mesh_path.is_none() {
            return Err(CliError::Config(
                "either a builtin name or a mesh path is required".into(),
            ));
        }
        if self.tol_min <= 0.0 || self.tol_orth <= 0.0 {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if let Some(tz) = self.tol_zero {
            if tz <= 0.0 {
                return Err(CliError::Config("tol-zero must be positive".into()));
            }
        }
        let (lo, hi, count) = self.t_grid;
        if lo <= 0.0 || hi <= lo || count < 2 {
            return Err(CliError::Config(
                "t-grid needs 0 < lo < hi and at least two points".into(),
            ));
        }
        if self.k == 0 {
            return Err(CliError::Config("k must be positive".into()));
        }
        if self.c1 <= 0.0 || self.c2 <= 0.0 || self.c_empirical <= 0.0 {
            return Err(CliError::Config("constants must be positive".into()));
        }
        Ok(())
    }

    /// Reads `FBMS_THREADS` into the config (recorded, never used).
    pub fn capture_threads(&mut self) {
        self.threads = std::env::var("FBMS_THREADS")
            .ok()
            .and_then(|s| s.parse().ok());
    }

    pub fn t_grid_points(&self) -> Vec<f64> {
        heat::log_grid(self.t_grid.0, self.t_grid.1, self.t_grid.2)
    }

    fn surface_id(&self) -> String {
        match (&self.builtin, &self.mesh_path) {
            (Some(b), _) => b.clone(),
            (None, Some(p)) => p.display().to_string(),
            (None, None) => "unspecified".into(),
        }
    }
}

/// Result of one subcommand run.
#[derive(Debug)]
pub struct Outcome {
    /// Full JSON artifact (version + config hash + data).
    pub artifact: serde_json::Value,
    /// False means an assertion-style check failed (exit code 2).
    pub pass: bool,
    /// Human-readable table for standard output.
    pub summary: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn wrap_artifact<T: Serialize>(
    command: &str,
    config: &RunConfig,
    pass: bool,
    data: &T,
) -> Result<serde_json::Value, CliError> {
    let config_json = serde_json::to_string(config)?;
    Ok(serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": sha256_hex(config_json.as_bytes()),
        "seed": config.seed,
        "config": serde_json::to_value(config)?,
        "pass": pass,
        "data": serde_json::to_value(data)?,
    }))
}

/// Builds (or loads) the surface and applies the requested refinement.
pub fn load_surface(config: &RunConfig) -> Result<TriangulatedSurface, CliError> {
    let base = if let Some(name) = &config.builtin {
        builtin_by_name(name, config.resolution)?
    } else {
        let path = config.mesh_path.as_ref().unwrap();
        let format = match config.mesh_format.as_deref() {
            Some("off") | None => MeshFormat::Off,
            Some("obj") => MeshFormat::Obj,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "unknown mesh format {other:?}; expected off or obj"
                )))
            }
        };
        load_mesh(path, format)?
    };
    Ok(if config.refine > 0 {
        base.refine(config.refine)
    } else {
        base
    })
}

/// Loads the surface and immerses it in the configured ambient space.
pub fn load_immersed(config: &RunConfig) -> Result<ImmersedSurface, CliError> {
    let surface = load_surface(config)?;
    let ambient = AmbientSpace::parse(&config.ambient)?;
    Ok(ImmersedSurface::new(surface, ambient)?)
}

fn assemble(immersed: &ImmersedSurface, form: FormChoice) -> Result<FormAssembly, CliError> {
    Ok(match form {
        FormChoice::Area => assemble_area_form(immersed)?,
        FormChoice::Energy => assemble_energy_form(immersed)?,
        FormChoice::Tangential => assemble_tangential_form(immersed)?,
    })
}

// ---------------------------------------------------------------------------
// Subcommand payloads
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct TopoData {
    pub surface: String,
    pub invariants: TopologyInvariants,
    pub upsilon: u64,
    pub acs_lower: bounds::Rational,
    /// Riemann–Roch bookkeeping of the antiholomorphic setup `mu = 2 chi`.
    pub riemann_roch: RiemannRoch,
}

#[derive(Debug, Serialize)]
pub struct ValidateData {
    pub surface: String,
    pub report: FreeBoundaryReport,
    pub tol_min: f64,
    pub tol_orth: f64,
}

#[derive(Debug, Serialize)]
pub struct SpectrumData {
    pub surface: String,
    pub form: FormChoice,
    pub eigenvalues: Vec<f64>,
    pub tol_zero: f64,
    pub reduced_dim: usize,
    pub classification: Classification,
}

#[derive(Debug, Serialize)]
pub struct CompareCase {
    pub field: String,
    pub with_reparametrization: bool,
    pub e_val: f64,
    pub a_val: f64,
    pub defect_integral: f64,
    pub identity_residual: f64,
    pub relative_residual: f64,
    pub dbar_residual: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CompareData {
    pub surface: String,
    pub cases: Vec<CompareCase>,
    pub tolerance: f64,
}

#[derive(Debug, Serialize)]
pub struct HeatData {
    pub surface: String,
    pub rho: f64,
    pub alpha: f64,
    pub beta: usize,
    pub beta_truncated: bool,
    pub ind_energy: usize,
    pub nul_energy: usize,
    pub index_nullity_below_beta: bool,
    pub bundle_trace: HeatTrace,
    pub growth_margin: f64,
    pub growth_holds: bool,
    pub domination: Option<KernelDominationReport>,
}

#[derive(Debug, Serialize)]
pub struct RatioStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Serialize)]
pub struct SobolevData {
    pub surface: String,
    pub constant_field_sobolev_ratio: f64,
    pub constant_field_trace_ratio: f64,
    pub sobolev_ratios: RatioStats,
    pub trace_ratios: RatioStats,
    /// Largest observed ratio = empirical inverse Sobolev constant.
    pub empirical_sobolev_constant: f64,
    pub empirical_trace_constant: f64,
    /// The paper's constants are non-constructive; only stability of these
    /// empirical ratios across refinement is checkable.
    pub constants_are_empirical_only: bool,
}

#[derive(Debug, Serialize)]
pub struct BoundsData {
    pub surface: String,
    pub area: f64,
    pub boundary_length: f64,
    pub rho: f64,
    pub closed_form: ClosedFormBound,
    pub fraser_li: bounds::AreaBoundReport,
}

#[derive(Debug, Serialize)]
pub struct ReportData {
    pub validate: ValidateData,
    pub area_classification: Classification,
    pub energy_classification: Classification,
    pub tangential_classification: Classification,
    pub beta: usize,
    pub beta_truncated: bool,
    pub bound_report: BoundReport,
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

pub fn run_topo(config: &RunConfig) -> Result<Outcome, CliError> {
    let surface = load_surface(config)?;
    let invariants = surface.topology()?;
    let (g, m) = (invariants.genus, invariants.boundary_count);
    let chi = invariants.euler_char;
    let data = TopoData {
        surface: config.surface_id(),
        invariants,
        upsilon: bounds::upsilon(g, m),
        acs_lower: bounds::acs_lower_bound(g, m),
        riemann_roch: bounds::riemann_roch(1, chi, 2 * chi),
    };
    let summary = format!(
        "surface {}: genus {g}, boundary loops {m}, chi {chi}, upsilon {}, \
         acs lower bound {}/{}\n",
        data.surface, data.upsilon, data.acs_lower.num, data.acs_lower.den
    );
    Ok(Outcome {
        artifact: wrap_artifact("topo", config, true, &data)?,
        pass: true,
        summary,
    })
}

pub fn run_validate(config: &RunConfig) -> Result<Outcome, CliError> {
    let immersed = load_immersed(config)?;
    let report = immersed.validate_free_boundary(config.tol_min, config.tol_orth);
    let pass = report.pass;
    let data = ValidateData {
        surface: config.surface_id(),
        report: report.clone(),
        tol_min: config.tol_min,
        tol_orth: config.tol_orth,
    };
    let summary = format!(
        "surface {}: mean-curvature residual {:.3e}, orthogonality residual {:.3e} -> {}\n",
        data.surface,
        report.mean_curvature_residual,
        report.orthogonality_residual,
        if pass { "valid" } else { "INVALID" }
    );
    Ok(Outcome {
        artifact: wrap_artifact("validate", config, pass, &data)?,
        pass,
        summary,
    })
}

fn spectrum_outcome(config: &RunConfig, command: &str) -> Result<Outcome, CliError> {
    let immersed = load_immersed(config)?;
    let form = assemble(&immersed, config.form)?;
    let spectrum = solve_spectrum(&form, config.k.min(form.reduced_dim()), config.tol_zero)?;
    let classification = classify_spectrum(&spectrum);
    let data = SpectrumData {
        surface: config.surface_id(),
        form: config.form,
        eigenvalues: spectrum.eigenvalues().to_vec(),
        tol_zero: spectrum.tol_zero(),
        reduced_dim: spectrum.reduced_dim(),
        classification,
    };
    let mut summary = format!(
        "surface {}, {:?} form: index {}, nullity {} (tol_zero {:.3e}{})\n",
        data.surface,
        config.form,
        classification.index,
        classification.nullity,
        data.tol_zero,
        if classification.ambiguous {
            ", near-threshold eigenvalue present"
        } else {
            ""
        }
    );
    if command == "spectrum" {
        let _ = writeln!(summary, "eigenvalues: {:?}", data.eigenvalues);
    }
    Ok(Outcome {
        artifact: wrap_artifact(command, config, true, &data)?,
        pass: true,
        summary,
    })
}

pub fn run_spectrum(config: &RunConfig) -> Result<Outcome, CliError> {
    spectrum_outcome(config, "spectrum")
}

pub fn run_index(config: &RunConfig) -> Result<Outcome, CliError> {
    spectrum_outcome(config, "index")
}

/// Relative tolerance of the comparison-identity checks.
pub const COMPARE_TOL: f64 = 1e-2;

pub fn run_compare(config: &RunConfig) -> Result<Outcome, CliError> {
    let immersed = load_immersed(config)?;
    let v = immersed.surface().vertex_count();
    let is_disk = {
        let t = immersed.surface().topology()?;
        t.genus == 0 && t.boundary_count == 1
    };
    let presets: [(&str, Box<dyn Fn(&Vector3<f64>) -> f64>); 3] = [
        ("x", Box::new(|p: &Vector3<f64>| p.x)),
        ("1", Box::new(|_: &Vector3<f64>| 1.0)),
        ("x^2 - y^2", Box::new(|p: &Vector3<f64>| p.x * p.x - p.y * p.y)),
    ];
    let mut cases = Vec::new();
    let mut pass = true;
    for (name, f) in &presets {
        let phi: Vec<f64> = immersed.surface().vertices().iter().map(|p| f(p)).collect();
        let xi = SectionField::from_scalar(&phi, immersed.normals()).assume_admissible();
        let zero = SectionField::zeros(v, SectionKind::Tangential);
        let base = dbar::comparison_defect(&immersed, &xi, &zero)?;
        let scale = base.e_val.abs().max(base.a_val.abs()).max(1.0);
        let rel = base.identity_residual.abs() / scale;
        pass &= rel <= COMPARE_TOL;
        cases.push(CompareCase {
            field: (*name).to_string(),
            with_reparametrization: false,
            e_val: base.e_val,
            a_val: base.a_val,
            defect_integral: base.defect_integral,
            identity_residual: base.identity_residual,
            relative_residual: rel,
            dbar_residual: None,
        });
        if is_disk {
            let sol = dbar::solve_dbar_reparametrization(&immersed, &xi)?;
            let with_x = dbar::comparison_defect(&immersed, &xi, &sol.field)?;
            let rel = with_x.identity_residual.abs().max(with_x.defect_integral) / scale;
            pass &= rel <= COMPARE_TOL;
            cases.push(CompareCase {
                field: (*name).to_string(),
                with_reparametrization: true,
                e_val: with_x.e_val,
                a_val: with_x.a_val,
                defect_integral: with_x.defect_integral,
                identity_residual: with_x.identity_residual,
                relative_residual: rel,
                dbar_residual: Some(sol.residual),
            });
        }
    }
    let mut summary = String::new();
    for c in &cases {
        let _ = writeln!(
            summary,
            "xi = ({}) nu{}: e {:.6}, a {:.6}, defect {:.3e}, residual {:.3e}",
            c.field,
            if c.with_reparametrization {
                ", X from dbar solve"
            } else {
                ", X = 0"
            },
            c.e_val,
            c.a_val,
            c.defect_integral,
            c.relative_residual
        );
    }
    let data = CompareData {
        surface: config.surface_id(),
        cases,
        tolerance: COMPARE_TOL,
    };
    Ok(Outcome {
        artifact: wrap_artifact("compare", config, pass, &data)?,
        pass,
        summary,
    })
}

/// DOF cap for the dense heat-kernel comparison.
pub const HEAT_MAX_DOFS: usize = 600;

pub fn run_heat(config: &RunConfig) -> Result<Outcome, CliError> {
    let immersed = load_immersed(config)?;
    let t_grid = config.t_grid_points();
    let probes: Vec<_> = immersed.surface().vertices().to_vec();
    let (rho, alpha) = immersed.ambient().ambient_bounds(&probes);

    // Eigenvalue counts: beta from the Robin bundle form, index/nullity from
    // the energy form on admissible sections.
    let bundle = assemble_robin_bundle_form(&immersed)?;
    let k = config.k.max(24).min(bundle.reduced_dim());
    let bundle_spectrum = solve_spectrum(&bundle, k, config.tol_zero)?;
    let (beta, beta_truncated) = beta_count(&bundle_spectrum, rho);

    let energy = assemble_energy_form(&immersed)?;
    let ke = config.k.max(24).min(energy.reduced_dim());
    let energy_spectrum = solve_spectrum(&energy, ke, config.tol_zero)?;
    let energy_class = classify_spectrum(&energy_spectrum);

    let index_nullity_below_beta =
        energy_class.index + energy_class.nullity <= beta;
    let (bundle_trace, growth_margin) = heat::eigenvalue_growth_check(
        &bundle_spectrum,
        &t_grid,
        beta,
        rho,
        HeatSource::BundleRobin,
    )?;
    let growth_holds = growth_margin >= -1e-9;

    let domination = if 3 * immersed.surface().vertex_count() <= HEAT_MAX_DOFS {
        Some(heat::kernel_domination_check(&immersed, &t_grid, HEAT_MAX_DOFS)?)
    } else {
        None
    };
    let mut pass = index_nullity_below_beta && growth_holds && !beta_truncated;
    if let Some(d) = &domination {
        pass &= d.domination_holds && d.mass_bound_holds && d.rank_trace_bound_holds;
    }

    let mut summary = format!(
        "surface {}: beta {beta}, ind_E {} + nul_E {} <= beta: {}, growth margin {:.3e}\n",
        config.surface_id(),
        energy_class.index,
        energy_class.nullity,
        index_nullity_below_beta,
        growth_margin
    );
    if let Some(d) = &domination {
        let _ = writeln!(
            summary,
            "kernel domination: {}, mass bound: {} (max row sum {:.9})",
            d.domination_holds, d.mass_bound_holds, d.max_mass_row_sum
        );
    } else {
        let _ = writeln!(summary, "kernel domination skipped: mesh above {HEAT_MAX_DOFS} DOFs");
    }
    let data = HeatData {
        surface: config.surface_id(),
        rho,
        alpha,
        beta,
        beta_truncated,
        ind_energy: energy_class.index,
        nul_energy: energy_class.nullity,
        index_nullity_below_beta,
        bundle_trace,
        growth_margin,
        growth_holds,
        domination,
    };
    Ok(Outcome {
        artifact: wrap_artifact("heat", config, pass, &data)?,
        pass,
        summary,
    })
}

/// Number of random fields in the Sobolev suite.
pub const SOBOLEV_FIELDS: usize = 100;

/// Deterministic analytic test fields: sums of three plane waves whose
/// parameters come from the seeded generator.  Evaluating the same seed on
/// two refinements of a mesh samples the same smooth function.
pub fn random_field_parameters(seed: u64, count: usize) -> Vec<[f64; 7]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = Uniform::new(0.2, 1.0);
    let wave = Uniform::new(-2.0, 2.0);
    let phase = Uniform::new(0.0, std::f64::consts::TAU);
    (0..count)
        .map(|_| {
            [
                amp.sample(&mut rng),
                wave.sample(&mut rng),
                wave.sample(&mut rng),
                wave.sample(&mut rng),
                phase.sample(&mut rng),
                amp.sample(&mut rng),
                phase.sample(&mut rng),
            ]
        })
        .collect()
}

/// Evaluates one parameter vector as a smooth scalar field.
pub fn evaluate_field(params: &[f64; 7], p: &Vector3<f64>) -> f64 {
    let [a, wx, wy, wz, th, b, ph] = *params;
    a * (wx * p.x + wy * p.y + wz * p.z + th).sin()
        + b * (2.0 * wx * p.y - wz * p.x + ph).cos()
}

fn stats(values: &[f64]) -> RatioStats {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    RatioStats {
        count: values.len(),
        min,
        max,
        mean,
    }
}

pub fn run_sobolev(config: &RunConfig) -> Result<Outcome, CliError> {
    let immersed = load_immersed(config)?;
    let vs = immersed.surface().vertices();
    let ones = vec![1.0; vs.len()];
    let anchor_sobolev = heat::sobolev_check(&immersed, &ones)?.ratio;
    let anchor_trace = heat::boundary_trace_check(&immersed, &ones)?.ratio;

    let params = random_field_parameters(config.seed, SOBOLEV_FIELDS);
    let mut sob = Vec::with_capacity(params.len());
    let mut tra = Vec::with_capacity(params.len());
    for prm in &params {
        let phi: Vec<f64> = vs.iter().map(|p| evaluate_field(prm, p)).collect();
        sob.push(heat::sobolev_check(&immersed, &phi)?.ratio);
        tra.push(heat::boundary_trace_check(&immersed, &phi)?.ratio);
    }
    let data = SobolevData {
        surface: config.surface_id(),
        constant_field_sobolev_ratio: anchor_sobolev,
        constant_field_trace_ratio: anchor_trace,
        sobolev_ratios: stats(&sob),
        trace_ratios: stats(&tra),
        empirical_sobolev_constant: sob.iter().copied().fold(anchor_sobolev, f64::max),
        empirical_trace_constant: tra.iter().copied().fold(anchor_trace, f64::max),
        constants_are_empirical_only: true,
    };
    let summary = format!(
        "surface {}: constant-field ratios {:.6} / {:.6}; {} random fields, \
         sobolev ratio in [{:.4}, {:.4}], trace ratio in [{:.4}, {:.4}]\n\
         note: the continuum constants are non-constructive; reported values are empirical\n",
        data.surface,
        anchor_sobolev,
        anchor_trace,
        SOBOLEV_FIELDS,
        data.sobolev_ratios.min,
        data.sobolev_ratios.max,
        data.trace_ratios.min,
        data.trace_ratios.max,
    );
    Ok(Outcome {
        artifact: wrap_artifact("sobolev", config, true, &data)?,
        pass: true,
        summary,
    })
}

pub fn run_bounds(config: &RunConfig) -> Result<Outcome, CliError> {
    let immersed = load_immersed(config)?;
    let topo = immersed.surface().topology()?;
    let area = immersed.surface().total_area();
    let boundary_length = immersed.surface().boundary_length();
    let probes: Vec<_> = immersed.surface().vertices().to_vec();
    let (rho, alpha) = immersed.ambient().ambient_bounds(&probes);
    let closed_form =
        heat::index_bound_closed_form(area, rho, config.c1, config.c2, 3, BoundMode::Dim2)?;
    // The Fraser-Li cap needs a positive convexity constant; for flat
    // ambient boundaries (alpha = 0 from the probes) evaluate at alpha = 1.
    let alpha_eff = if alpha > 0.0 { alpha } else { 1.0 };
    let fraser_li = bounds::geometric_area_bounds(
        topo.genus,
        topo.boundary_count,
        bounds::AreaBoundRegime::Convex { alpha: alpha_eff },
        area,
        boundary_length,
        config.c1,
    )?;
    let pass = fraser_li.line.pass;
    let data = BoundsData {
        surface: config.surface_id(),
        area,
        boundary_length,
        rho,
        closed_form,
        fraser_li,
    };
    let summary = format!(
        "surface {}: area {:.6}, closed-form eigenvalue-count bound {:.6} at t* {:.3e}{}, \
         Fraser-Li cap {:.6}\n",
        data.surface,
        area,
        data.closed_form.bound,
        data.closed_form.t_star,
        if data.closed_form.at_grid_boundary {
            " (grid boundary)"
        } else {
            ""
        },
        data.fraser_li.line.rhs
    );
    Ok(Outcome {
        artifact: wrap_artifact("bounds", config, pass, &data)?,
        pass,
        summary,
    })
}

pub fn run_report(config: &RunConfig) -> Result<Outcome, CliError> {
    let immersed = load_immersed(config)?;
    let validation = immersed.validate_free_boundary(config.tol_min, config.tol_orth);
    let validate_data = ValidateData {
        surface: config.surface_id(),
        report: validation.clone(),
        tol_min: config.tol_min,
        tol_orth: config.tol_orth,
    };
    let topo = immersed.surface().topology()?;
    let probes: Vec<_> = immersed.surface().vertices().to_vec();
    let (rho, _) = immersed.ambient().ambient_bounds(&probes);

    let classify = |choice: FormChoice| -> Result<Classification, CliError> {
        let form = assemble(&immersed, choice)?;
        let spectrum =
            solve_spectrum(&form, config.k.min(form.reduced_dim()), config.tol_zero)?;
        Ok(classify_spectrum(&spectrum))
    };
    let area_class = classify(FormChoice::Area)?;
    let energy_class = classify(FormChoice::Energy)?;
    let tangential_class = classify(FormChoice::Tangential)?;

    let bundle = assemble_robin_bundle_form(&immersed)?;
    let kb = config.k.max(24).min(bundle.reduced_dim());
    let bundle_spectrum = solve_spectrum(&bundle, kb, config.tol_zero)?;
    let (beta, beta_truncated) = beta_count(&bundle_spectrum, rho);

    let area = immersed.surface().total_area();
    let boundary_length = immersed.surface().boundary_length();
    let closed_form =
        heat::index_bound_closed_form(area, rho, config.c1, config.c2, 3, BoundMode::Dim2)?;
    let inputs = InequalityInputs {
        surface_id: config.surface_id(),
        genus: topo.genus,
        boundary_count: topo.boundary_count,
        ind_area: area_class.index,
        nul_area: area_class.nullity,
        ind_energy: energy_class.index,
        nul_energy: energy_class.nullity,
        nul_energy_tangential: tangential_class.nullity,
        beta,
        area,
        boundary_length,
        closed_form_bound: Some(closed_form.bound),
    };
    let bound_report = bounds::verify_inequalities(&inputs, config.c_empirical)?;
    let pass = validation.pass && bound_report.all_pass && !beta_truncated;

    let mut summary = format!(
        "surface {} (g {}, m {}): ind_A {}, nul_A {}, ind_E {}, nul_E {}, nul_E^T {}, beta {}\n",
        inputs.surface_id,
        topo.genus,
        topo.boundary_count,
        inputs.ind_area,
        inputs.nul_area,
        inputs.ind_energy,
        inputs.nul_energy,
        inputs.nul_energy_tangential,
        beta
    );
    if !validation.pass {
        let _ = writeln!(
            summary,
            "free-boundary validation FAILED: mean-curvature residual {:.3e}, \
             orthogonality residual {:.3e}",
            validation.mean_curvature_residual, validation.orthogonality_residual
        );
    }
    for line in &bound_report.inequalities {
        let _ = writeln!(
            summary,
            "  {:<48} {:>10.4} <= {:>10.4}  margin {:>10.4}  {}",
            line.name,
            line.lhs,
            line.rhs,
            line.margin,
            if line.pass {
                "ok"
            } else if line.advisory {
                "advisory miss"
            } else {
                "VIOLATED"
            }
        );
    }
    let data = ReportData {
        validate: validate_data,
        area_classification: area_class,
        energy_classification: energy_class,
        tangential_classification: tangential_class,
        beta,
        beta_truncated,
        bound_report,
    };
    Ok(Outcome {
        artifact: wrap_artifact("report", config, pass, &data)?,
        pass,
        summary,
    })
}

/// Dispatches one subcommand.
pub fn run(command: &str, config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    match command {
        "topo" => run_topo(config),
        "validate" => run_validate(config),
        "spectrum" => run_spectrum(config),
        "index" => run_index(config),
        "compare" => run_compare(config),
        "heat" => run_heat(config),
        "sobolev" => run_sobolev(config),
        "bounds" => run_bounds(config),
        "report" => run_report(config),
        other => Err(CliError::Config(format!("unknown subcommand {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> RunConfig {
        RunConfig {
            resolution: 6,
            ..RunConfig::default()
        }
    }

    #[test]
    fn topo_reports_disk_invariants() {
        let out = run("topo", &base_config()).unwrap();
        assert!(out.pass);
        let d = &out.artifact["data"];
        assert_eq!(d["invariants"]["genus"], 0);
        assert_eq!(d["invariants"]["boundary_count"], 1);
        assert_eq!(d["upsilon"], 0);
    }

    #[test]
    fn topo_reports_catenoid_invariants() {
        let mut cfg = base_config();
        cfg.builtin = Some("critical_catenoid".into());
        let out = run("topo", &cfg).unwrap();
        let d = &out.artifact["data"];
        assert_eq!(d["invariants"]["euler_char"], 0);
        assert_eq!(d["upsilon"], 1);
    }

    #[test]
    fn index_subcommand_classifies_flat_disk() {
        let mut cfg = base_config();
        cfg.resolution = 16;
        cfg.tol_zero = Some(0.1);
        let out = run("index", &cfg).unwrap();
        assert!(out.pass);
        let c = &out.artifact["data"]["classification"];
        assert_eq!(c["index"], 1);
        assert_eq!(c["nullity"], 2);
    }

    #[test]
    fn validate_passes_on_builtin_and_artifact_has_hash() {
        let out = run("validate", &base_config()).unwrap();
        assert!(out.pass);
        let hash = out.artifact["config_hash"].as_str().unwrap();
        assert_eq!(hash.len(), 64);
        assert_eq!(out.artifact["version"], env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = base_config();
        cfg.k = 0;
        assert!(matches!(run("topo", &cfg), Err(CliError::Config(_))));
        let mut cfg = base_config();
        cfg.t_grid = (1.0, 0.5, 8);
        assert!(matches!(run("topo", &cfg), Err(CliError::Config(_))));
        assert!(matches!(
            run("frobnicate", &base_config()),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn compare_passes_on_flat_disk() {
        let mut cfg = base_config();
        cfg.resolution = 8;
        let out = run("compare", &cfg).unwrap();
        assert!(out.pass, "{}", out.summary);
        // Disk cases come in pairs: without and with the dbar solve.
        assert_eq!(out.artifact["data"]["cases"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn sobolev_statistics_are_deterministic_in_the_seed() {
        let cfg = base_config();
        let a = run("sobolev", &cfg).unwrap();
        let b = run("sobolev", &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a.artifact).unwrap(),
            serde_json::to_string(&b.artifact).unwrap()
        );
        let mut cfg2 = cfg.clone();
        cfg2.seed = 8;
        let c = run("sobolev", &cfg2).unwrap();
        assert_ne!(
            a.artifact["data"]["sobolev_ratios"]["mean"],
            c.artifact["data"]["sobolev_ratios"]["mean"]
        );
    }

    #[test]
    fn report_runs_end_to_end_on_small_disk() {
        let mut cfg = base_config();
        cfg.resolution = 8;
        cfg.tol_zero = Some(0.1);
        let out = run("report", &cfg).unwrap();
        assert!(out.pass, "{}", out.summary);
        let r = &out.artifact["data"]["bound_report"];
        assert_eq!(r["upsilon"], 0);
        assert_eq!(r["ind_area"], r["ind_energy"]);
    }

    #[test]
    fn threads_variable_is_recorded_but_does_not_change_output() {
        let mut cfg = base_config();
        std::env::set_var("FBMS_THREADS", "1");
        cfg.capture_threads();
        assert_eq!(cfg.threads, Some(1));
        let a = run("sobolev", &cfg).unwrap();
        std::env::set_var("FBMS_THREADS", "8");
        let b = run("sobolev", &cfg).unwrap();
        std::env::remove_var("FBMS_THREADS");
        assert_eq!(
            serde_json::to_string(&a.artifact["data"]).unwrap(),
            serde_json::to_string(&b.artifact["data"]).unwrap()
        );
    }
}
