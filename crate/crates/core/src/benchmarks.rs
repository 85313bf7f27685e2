//! Benchmark problem library, run driver, error metrics and result files.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::basis::DGBasis;
use crate::collided::max_wavespeed;
use crate::error::{Error, Result};
use crate::field::{Discretization, KineticField, MomentField};
use crate::hybrid::{
    berk2_corrected_step, berk2_step, euler_step, kinetic_inflow, select_dt, HybridSetup, HybridState,
    PredictorFlux, StepReport,
};
use crate::imex::{imex_step, ImexTableau};
use crate::mesh::SpatialMesh;
use crate::quadrature::gauss_legendre;
use crate::uncollided::BoundarySpec;
use crate::velocity::{Moments, Primitives, VelocityGrid};

pub const PROBLEMS: [&str; 6] = ["asymptotic", "accuracy", "sod", "lax", "shu-osher", "gas-injection"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Berk2,
    Berk2Corrected,
    Imex2,
    Imex3,
    EulerOnly,
}

impl Scheme {
    pub fn is_imex(self) -> bool {
        matches!(self, Scheme::Imex2 | Scheme::Imex3)
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "berk2" => Ok(Scheme::Berk2),
            "berk2-corrected" => Ok(Scheme::Berk2Corrected),
            "imex2" => Ok(Scheme::Imex2),
            "imex3" => Ok(Scheme::Imex3),
            "euler-only" => Ok(Scheme::EulerOnly),
            _ => Err(Error::Config(format!(
                "unknown scheme '{s}' (expected berk2, berk2-corrected, imex2, imex3, euler-only)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Periodic,
    /// Inflow from the Maxwellian of the initial state at each end.
    Dirichlet,
}

/// Initial primitive variables. Pressures, not temperatures, for the
/// gas-dynamics data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `ρ = 1 + a sin(k x)` with constant `u` and `p`.
    SmoothAdvection { amplitude: f64, wavenumber: f64, u: f64, p: f64 },
    /// `(ρ, u, p)` left of `interface` (inclusive) and right of it.
    Riemann { interface: f64, left: [f64; 3], right: [f64; 3] },
    /// Shock state left of `interface`, `(1 + 0.2 sin 5x, 0, 1)` right of it.
    ShuOsher { interface: f64 },
    /// Constant `(ρ, u, θ)`.
    Uniform { rho: f64, u: f64, theta: f64 },
}

impl InitialData {
    pub fn primitives(&self, x: f64) -> Primitives {
        match *self {
            InitialData::SmoothAdvection {
                amplitude,
                wavenumber,
                u,
                p,
            } => Primitives::from_pressure(1.0 + amplitude * (wavenumber * x).sin(), u, p),
            InitialData::Riemann { interface, left, right } => {
                let s = if x <= interface { left } else { right };
                Primitives::from_pressure(s[0], s[1], s[2])
            }
            InitialData::ShuOsher { interface } => {
                if x <= interface {
                    Primitives::from_pressure(1.756757, 2.005122, 10.333333)
                } else {
                    Primitives::from_pressure(1.0 + 0.2 * (5.0 * x).sin(), 0.0, 1.0)
                }
            }
            InitialData::Uniform { rho, u, theta } => Primitives::new(rho, u, theta),
        }
    }
}

/// `S(x, v) = η(x) ℰ(ρ, u, θ)(v)` with a Gaussian profile `η` normalized to
/// unit integral over `[norm_left, norm_right]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
    pub center: f64,
    pub width: f64,
    pub norm_left: f64,
    pub norm_right: f64,
}

impl SourceSpec {
    pub fn profile(&self) -> impl Fn(f64) -> f64 {
        let (x0, s) = (self.center, self.width);
        let bump = move |x: f64| (-(x - x0) * (x - x0) / (2.0 * s * s)).exp();
        // composite Gauss-Legendre, ample for a smooth Gaussian
        let (nodes, weights) = gauss_legendre(8);
        let panels = 64;
        let h = (self.norm_right - self.norm_left) / panels as f64;
        let mut integral = 0.0;
        for p in 0..panels {
            let c = self.norm_left + h * (p as f64 + 0.5);
            for (xi, w) in nodes.iter().zip(&weights) {
                integral += 0.5 * h * w * bump(c + 0.5 * h * xi);
            }
        }
        let c0 = integral.recip();
        move |x| c0 * bump(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub name: String,
    pub x_left: f64,
    pub x_right: f64,
    pub v_max: f64,
    pub nx: usize,
    pub nv: usize,
    /// Polynomial degree `N`; the scheme is of order `N + 1` (DG`N+1`).
    pub degree: usize,
    pub epsilon: f64,
    pub t_final: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub boundary: BoundaryKind,
    /// TVB constant; absent means no limiter.
    #[serde(default)]
    pub limiter: Option<f64>,
    pub initial: InitialData,
    #[serde(default)]
    pub source: Option<SourceSpec>,
    #[serde(default)]
    pub predictor: PredictorFlux,
}

/// Command-line style parameter overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigOverrides {
    pub nx: Option<usize>,
    pub nv: Option<usize>,
    pub degree: Option<usize>,
    pub epsilon: Option<f64>,
    pub cfl: Option<f64>,
    pub t_final: Option<f64>,
    pub v_max: Option<f64>,
    pub scheme: Option<Scheme>,
    /// `Some(None)` switches the limiter off.
    pub limiter: Option<Option<f64>>,
    pub predictor: Option<PredictorFlux>,
}

/// Default CFL constant of the shock problems for a scheme.
fn shock_cfl(scheme: Scheme) -> f64 {
    match scheme {
        Scheme::Imex3 => 0.14,
        _ => 0.2,
    }
}

/// Accuracy-test CFL constant for polynomial degree `N`.
pub fn accuracy_cfl(degree: usize) -> f64 {
    match degree {
        0 | 1 => 0.2,
        2 => 0.1,
        _ => 0.05,
    }
}

const TVB_M: f64 = 20.0;
const SHOCK_EPSILON: f64 = 1e-6;

/// Named benchmark with its published parameters, then `overrides`.
pub fn build_problem(name: &str, overrides: &ConfigOverrides) -> Result<ProblemConfig> {
    let scheme = overrides.scheme;
    let smooth = InitialData::SmoothAdvection {
        amplitude: 0.2,
        wavenumber: 10.0,
        u: 1.0,
        p: 1.0,
    };
    let pi = std::f64::consts::PI;
    let shock = |name: &str, x_left: f64, x_right: f64, v_max: f64, nx: usize, t_final: f64, initial: InitialData| {
        let scheme = scheme.unwrap_or(Scheme::Berk2);
        ProblemConfig {
            name: name.into(),
            x_left,
            x_right,
            v_max,
            nx,
            nv: nx,
            degree: 2,
            epsilon: SHOCK_EPSILON,
            t_final,
            cfl: shock_cfl(scheme),
            scheme,
            boundary: BoundaryKind::Dirichlet,
            limiter: Some(TVB_M),
            initial,
            source: None,
            predictor: PredictorFlux::default(),
        }
    };
    let mut cfg = match name {
        "asymptotic" => ProblemConfig {
            name: name.into(),
            x_left: -pi,
            x_right: pi,
            v_max: 7.0,
            nx: 64,
            nv: 100,
            degree: 3,
            epsilon: 1e-12,
            t_final: 0.1,
            cfl: 0.1,
            scheme: scheme.unwrap_or(Scheme::Berk2Corrected),
            boundary: BoundaryKind::Periodic,
            limiter: None,
            initial: smooth,
            source: None,
            predictor: PredictorFlux::default(),
        },
        "accuracy" => {
            let degree = overrides.degree.unwrap_or(2);
            ProblemConfig {
                name: name.into(),
                x_left: -pi,
                x_right: pi,
                v_max: 7.0,
                nx: 64,
                nv: 100,
                degree,
                epsilon: 1.0,
                t_final: 0.1,
                cfl: accuracy_cfl(degree),
                scheme: scheme.unwrap_or(Scheme::Berk2Corrected),
                boundary: BoundaryKind::Periodic,
                limiter: None,
                initial: smooth,
                source: None,
                predictor: PredictorFlux::default(),
            }
        }
        "sod" => shock(
            name,
            0.0,
            1.0,
            6.0,
            100,
            0.1,
            InitialData::Riemann {
                interface: 0.5,
                left: [1.0, 0.0, 1.0],
                right: [0.125, 0.0, 0.1],
            },
        ),
        "lax" => shock(
            name,
            -0.5,
            1.5,
            15.0,
            100,
            0.1,
            InitialData::Riemann {
                interface: 0.5,
                left: [0.445, 0.698, 3.528],
                right: [0.5, 0.0, 0.571],
            },
        ),
        "shu-osher" => shock(name, -10.0, 10.0, 14.0, 200, 1.8, InitialData::ShuOsher { interface: -4.0 }),
        "gas-injection" => {
            let mut c = shock(
                name,
                -3.0,
                19.0,
                110.0,
                200,
                0.1,
                InitialData::Uniform {
                    rho: 1.0,
                    u: 0.0,
                    theta: 0.1,
                },
            );
            c.nv = 1000;
            c.cfl = 0.1;
            c.source = Some(SourceSpec {
                rho: 0.01,
                u: 100.0,
                theta: 100.0,
                center: 0.5,
                width: 0.1,
                norm_left: 0.0,
                norm_right: 1.0,
            });
            c
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown problem '{name}' (expected one of {})",
                PROBLEMS.join(", ")
            )))
        }
    };
    apply_overrides(&mut cfg, overrides);
    cfg.validate()?;
    Ok(cfg)
}

/// Replaces every field of `cfg` that `o` sets.
pub fn apply_overrides(cfg: &mut ProblemConfig, o: &ConfigOverrides) {
    if let Some(v) = o.nx {
        cfg.nx = v;
    }
    if let Some(v) = o.nv {
        cfg.nv = v;
    }
    if let Some(v) = o.degree {
        cfg.degree = v;
    }
    if let Some(v) = o.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = o.cfl {
        cfg.cfl = v;
    }
    if let Some(v) = o.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = o.v_max {
        cfg.v_max = v;
    }
    if let Some(v) = o.scheme {
        cfg.scheme = v;
    }
    if let Some(v) = o.limiter {
        cfg.limiter = v;
    }
    if let Some(v) = o.predictor {
        cfg.predictor = v;
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.nx == 0 || self.nv == 0 {
            return bad(format!("{}: nx and nv must be positive", self.name));
        }
        if !(self.x_left < self.x_right) {
            return bad(format!("{}: empty domain", self.name));
        }
        for (label, v) in [
            ("v_max", self.v_max),
            ("epsilon", self.epsilon),
            ("t_final", self.t_final),
            ("cfl", self.cfl),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{}: {label} must be positive and finite, got {v}", self.name));
            }
        }
        if let Some(m) = self.limiter {
            if !(m >= 0.0) {
                return bad(format!("{}: TVB constant must be non-negative", self.name));
            }
        }
        if let Some(s) = &self.source {
            if !(s.width > 0.0 && s.norm_left < s.norm_right) {
                return bad(format!("{}: degenerate source profile", self.name));
            }
        }
        Ok(())
    }

    pub fn discretization(&self) -> Result<Discretization> {
        let mesh = SpatialMesh::uniform(self.x_left, self.x_right, self.nx)?;
        let grid = VelocityGrid::new(self.nv, self.v_max)?;
        Ok(Discretization::new(mesh, self.degree, grid))
    }

    pub fn initial_moments(&self, disc: &Discretization) -> MomentField {
        MomentField::from_fn(disc, |x| self.initial.primitives(x).to_moments())
    }

    pub fn boundary_spec(&self, disc: &Discretization) -> Result<BoundarySpec> {
        Ok(match self.boundary {
            BoundaryKind::Periodic => BoundarySpec::Periodic,
            BoundaryKind::Dirichlet => {
                let left = disc.grid.discrete_maxwellian(&self.initial.primitives(self.x_left).to_moments())?;
                let right = disc.grid.discrete_maxwellian(&self.initial.primitives(self.x_right).to_moments())?;
                BoundarySpec::Dirichlet { left, right }
            }
        })
    }

    pub fn source_field(&self, disc: &Discretization) -> Result<Option<KineticField>> {
        let Some(s) = &self.source else { return Ok(None) };
        let eta = s.profile();
        let m = disc.grid.discrete_maxwellian(&Primitives::new(s.rho, s.u, s.theta).to_moments())?;
        let x = disc.node_positions();
        let mut f = KineticField::zeros_like(disc);
        for (k, &mk) in m.iter().enumerate() {
            for (dst, &xj) in f.velocity_mut(k).iter_mut().zip(&x) {
                *dst = eta(xj) * mk;
            }
        }
        Ok(Some(f))
    }

    /// Nominal fixed step `C h / v_max` of the IMEX baselines.
    pub fn imex_dt(&self) -> f64 {
        self.cfl * (self.x_right - self.x_left) / self.nx as f64 / self.v_max
    }
}

/// Reads a TOML problem file.
pub fn load_config(path: &Path) -> Result<ProblemConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: ProblemConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        what: path.display().to_string(),
        msg: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ProblemConfig,
    pub disc: Discretization,
    pub moments: MomentField,
    /// `(ρ, u, θ)` at every DG node, cell-major.
    pub primitives: Vec<Primitives>,
    pub node_x: Vec<f64>,
    /// Final distribution (absent for `euler-only`).
    pub distribution: Option<KineticField>,
    pub steps: usize,
    pub final_time: f64,
    pub lambda_range: (f64, f64),
    pub wall_time: Duration,
    pub reports: Vec<StepReport>,
}

impl RunResult {
    pub fn density(&self) -> Vec<f64> {
        self.moments.component(0)
    }

    pub fn field(&self, name: &str) -> Result<Vec<f64>> {
        Ok(match name {
            "rho" => self.primitives.iter().map(|p| p.rho).collect(),
            "u" => self.primitives.iter().map(|p| p.u).collect(),
            "theta" => self.primitives.iter().map(|p| p.theta).collect(),
            _ => return Err(Error::Config(format!("unknown field '{name}'"))),
        })
    }

    pub fn dg(&self, values: &'_ [f64]) -> DgFunction<'_> {
        DgFunction {
            coeffs: values.to_vec(),
            mesh: &self.disc.mesh,
            basis: &self.disc.basis,
        }
    }
}

fn primitives_at_nodes(q: &MomentField) -> Result<Vec<Primitives>> {
    q.values
        .iter()
        .map(|m| {
            if m.is_vacuum() {
                Ok(Primitives::new(0.0, 0.0, 0.0))
            } else {
                m.to_primitives()
            }
        })
        .collect()
}

/// Step size that lands exactly on `t_final`.
fn clip(dt: f64, t: f64, t_final: f64) -> f64 {
    let left = t_final - t;
    // avoid a sliver step from rounding in the accumulated time
    if dt >= left * (1.0 - 1e-9) {
        left
    } else {
        dt
    }
}

fn failed(step: usize, time: f64, e: Error) -> Error {
    Error::StepFailed {
        step,
        time,
        source: Box::new(e),
    }
}

/// Runs a configured problem to its final time.
pub fn run(config: &ProblemConfig) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let disc = config.discretization()?;
    let q0 = config.initial_moments(&disc);
    let bc = config.boundary_spec(&disc)?;
    let source = config.source_field(&disc)?;
    let t_final = config.t_final;
    let h_min = disc.mesh.h_min();
    let mut reports = Vec::new();

    let (moments, distribution, final_time) = match config.scheme {
        Scheme::EulerOnly => {
            let fluid_bc = kinetic_inflow(&disc, &bc);
            let mut q = q0;
            let mut t = 0.0;
            while t < t_final {
                let step = reports.len();
                let s = Instant::now();
                let lambda = max_wavespeed(&q);
                let dt = clip(select_dt(&q, config.cfl, h_min).map_err(|e| failed(step, t, e))?, t, t_final);
                q = euler_step(&disc, &q, dt, &fluid_bc, config.limiter).map_err(|e| failed(step, t, e))?;
                if !q.is_finite() {
                    return Err(failed(step, t, Error::Inadmissible { rho: f64::NAN, theta: f64::NAN }));
                }
                t += dt;
                reports.push(StepReport {
                    dt_used: dt,
                    lambda,
                    sweep_iterations: 0,
                    wall_time: s.elapsed(),
                });
            }
            (q, None, t)
        }
        Scheme::Imex2 | Scheme::Imex3 => {
            let tableau = if config.scheme == Scheme::Imex2 {
                ImexTableau::ssp2_322()
            } else {
                ImexTableau::ars_443()
            };
            let dt_nominal = config.imex_dt();
            let n = crate::imex::imex_step_count(t_final, config.cfl, disc.mesh.h_min(), config.v_max);
            let mut f = KineticField::maxwellian(&q0, &disc.grid)?;
            let mut t = 0.0;
            for step in 0..n {
                let s = Instant::now();
                let lambda = max_wavespeed(&f.moments(&disc.grid));
                let dt = if step + 1 == n { t_final - t } else { dt_nominal };
                f = imex_step(&disc, &f, dt, config.epsilon, &tableau, &bc, source.as_ref(), config.limiter.is_some())
                    .map_err(|e| failed(step, t, e))?;
                if !f.is_finite() {
                    return Err(failed(step, t, Error::Inadmissible { rho: f64::NAN, theta: f64::NAN }));
                }
                t += dt;
                reports.push(StepReport {
                    dt_used: dt,
                    lambda,
                    sweep_iterations: 0,
                    wall_time: s.elapsed(),
                });
            }
            (f.moments(&disc.grid), Some(f), t)
        }
        Scheme::Berk2 | Scheme::Berk2Corrected => {
            let setup = HybridSetup {
                disc: &disc,
                epsilon: config.epsilon,
                bc: bc.clone(),
                source,
                limiter: config.limiter,
                predictor: config.predictor,
            };
            let step_fn = if config.scheme == Scheme::Berk2 {
                berk2_step
            } else {
                berk2_corrected_step
            };
            let mut state = HybridState {
                g: KineticField::maxwellian(&q0, &disc.grid)?,
                t: 0.0,
                step_index: 0,
            };
            while state.t < t_final {
                let (step, t) = (state.step_index, state.t);
                let q = state.g.moments(&disc.grid);
                let dt = clip(select_dt(&q, config.cfl, h_min).map_err(|e| failed(step, t, e))?, t, t_final);
                let (next, report) = step_fn(&setup, &state, dt).map_err(|e| failed(step, t, e))?;
                state = next;
                reports.push(report);
            }
            (state.g.moments(&disc.grid), Some(state.g), state.t)
        }
    };

    let primitives = primitives_at_nodes(&moments).map_err(|e| failed(reports.len(), final_time, e))?;
    let lambda_range = reports
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.lambda), hi.max(r.lambda)));
    Ok(RunResult {
        config: config.clone(),
        node_x: disc.node_positions(),
        disc,
        moments,
        primitives,
        distribution,
        steps: reports.len(),
        final_time,
        lambda_range,
        wall_time: start.elapsed(),
        reports,
    })
}

/// Broken polynomial on a mesh, nodal coefficients laid out cell-major.
#[derive(Debug, Clone)]
pub struct DgFunction<'a> {
    pub coeffs: Vec<f64>,
    pub mesh: &'a SpatialMesh,
    pub basis: &'a DGBasis,
}

impl DgFunction<'_> {
    fn eval_in(&self, cell: usize, x: f64) -> f64 {
        let np = self.basis.n_nodes();
        let xi = 2.0 * (x - self.mesh.centers[cell]) / self.mesh.widths[cell];
        self.basis.interpolate(&self.coeffs[cell * np..(cell + 1) * np], xi)
    }
}

/// Quadrature points and weights on the common refinement of two meshes,
/// tagged with the cell of each mesh that contains them.
fn common_quadrature(a: &SpatialMesh, b: &SpatialMesh, n_points: usize) -> Result<Vec<(f64, f64, usize, usize)>> {
    let tol = 1e-12 * a.length().max(b.length());
    if (a.x_left - b.x_left).abs() > tol || (a.x_right - b.x_right).abs() > tol {
        return Err(Error::MeshMismatch(format!(
            "[{}, {}] vs [{}, {}]",
            a.x_left, a.x_right, b.x_left, b.x_right
        )));
    }
    let mut breaks: Vec<f64> = a.edges.iter().chain(&b.edges).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() <= tol);
    let (nodes, weights) = gauss_legendre(n_points);
    let mut out = Vec::with_capacity((breaks.len() - 1) * n_points);
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let (ca, _) = a.locate(mid)?;
        let (cb, _) = b.locate(mid)?;
        for (xi, wt) in nodes.iter().zip(&weights) {
            out.push((mid + half * xi, half * wt, ca, cb));
        }
    }
    Ok(out)
}

/// `‖a − b‖_{L²}`, integrated exactly on the common refinement of the two
/// meshes (a fine field is thereby evaluated on the coarse one directly).
pub fn l2_error(a: &DgFunction, b: &DgFunction) -> Result<f64> {
    let n = a.basis.degree.max(b.basis.degree) + 2;
    let sum: f64 = common_quadrature(a.mesh, b.mesh, n)?
        .into_iter()
        .map(|(x, w, ca, cb)| {
            let d = a.eval_in(ca, x) - b.eval_in(cb, x);
            w * d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// Max-norm difference sampled at the same quadrature points as [`l2_error`].
pub fn linf_error(a: &DgFunction, b: &DgFunction) -> Result<f64> {
    let n = a.basis.degree.max(b.basis.degree) + 2;
    Ok(common_quadrature(a.mesh, b.mesh, n)?
        .into_iter()
        .map(|(x, _, ca, cb)| (a.eval_in(ca, x) - b.eval_in(cb, x)).abs())
        .fold(0.0, f64::max))
}

/// `‖a − f‖_{L²}` against a smooth function, with `extra_points` quadrature
/// points beyond the polynomial degree per cell.
pub fn l2_error_exact(a: &DgFunction, f: impl Fn(f64) -> f64, extra_points: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(a.basis.degree + 1 + extra_points);
    let mut sum = 0.0;
    for cell in 0..a.mesh.n_cells() {
        let half = 0.5 * a.mesh.widths[cell];
        for (xi, w) in nodes.iter().zip(&weights) {
            let x = a.mesh.to_physical(cell, *xi);
            let d = a.eval_in(cell, x) - f(x);
            sum += half * w * d * d;
        }
    }
    sum.sqrt()
}

/// `L¹` difference on the common refinement.
pub fn l1_error(a: &DgFunction, b: &DgFunction) -> Result<f64> {
    let n = a.basis.degree.max(b.basis.degree) + 2;
    Ok(common_quadrature(a.mesh, b.mesh, n)?
        .into_iter()
        .map(|(x, w, ca, cb)| w * (a.eval_in(ca, x) - b.eval_in(cb, x)).abs())
        .sum())
}

/// Observed orders `log(E_h / E_{h/2}) / log 2` for `(h, E_h)` pairs with
/// halving `h`.
pub fn convergence_order(entries: &[(f64, f64)]) -> Result<Vec<f64>> {
    if entries.len() < 2 {
        return Err(Error::Config("convergence order needs at least two entries".into()));
    }
    entries
        .windows(2)
        .map(|w| {
            let ((h0, e0), (h1, e1)) = (w[0], w[1]);
            if ((h0 / h1) - 2.0).abs() > 1e-9 {
                return Err(Error::Config(format!("mesh sizes {h0} -> {h1} do not halve")));
            }
            if e0 == e1 {
                return Ok(0.0);
            }
            Ok((e0 / e1).ln() / 2f64.ln())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub error: f64,
    pub order: Option<f64>,
}

/// Density self-convergence: runs every `nx` and twice the last, and
/// reports `‖ρ_h − ρ_{h/2}‖` per level.
pub fn self_convergence(base: &ProblemConfig, nx_list: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let Some(&last) = nx_list.last() else {
        return Err(Error::Config("empty resolution list".into()));
    };
    let mut levels: Vec<usize> = nx_list.to_vec();
    levels.push(2 * last);
    let runs = levels
        .iter()
        .map(|&nx| run(&ProblemConfig { nx, ..base.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(nx_list.len());
    for pair in runs.windows(2) {
        let (ra, rb) = (&pair[0].density(), &pair[1].density());
        let e = l2_error(&pair[0].dg(ra), &pair[1].dg(rb))?;
        rows.push(ConvergenceRow {
            nx: pair[0].config.nx,
            error: e,
            order: None,
        });
    }
    fill_orders(base, &mut rows)?;
    Ok(rows)
}

fn fill_orders(base: &ProblemConfig, rows: &mut [ConvergenceRow]) -> Result<()> {
    if rows.len() < 2 {
        return Ok(());
    }
    let len = base.x_right - base.x_left;
    let entries: Vec<(f64, f64)> = rows.iter().map(|r| (len / r.nx as f64, r.error)).collect();
    for (row, order) in rows[1..].iter_mut().zip(convergence_order(&entries)?) {
        row.order = Some(order);
    }
    Ok(())
}

/// Errors against an exact density `ρ(x)` at the final time.
pub fn exact_convergence(
    base: &ProblemConfig,
    nx_list: &[usize],
    exact: impl Fn(f64) -> f64,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(nx_list.len());
    for &nx in nx_list {
        let r = run(&ProblemConfig { nx, ..base.clone() })?;
        let rho = r.density();
        rows.push(ConvergenceRow {
            nx,
            error: l2_error_exact(&r.dg(&rho), &exact, 4),
            order: None,
        });
    }
    fill_orders(base, &mut rows)?;
    Ok(rows)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `x,rho,u,theta` at every DG node, 12 significant digits.
pub fn profile_csv(result: &RunResult) -> String {
    let mut s = String::from("x,rho,u,theta\n");
    for (x, p) in result.node_x.iter().zip(&result.primitives) {
        s.push_str(&format!("{x:.11e},{:.11e},{:.11e},{:.11e}\n", p.rho, p.u, p.theta));
    }
    s
}

pub fn write_profile(result: &RunResult, path: &Path) -> Result<()> {
    write(path, &profile_csv(result))
}

/// Parses a profile CSV back into node positions and primitives.
pub fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<Primitives>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |msg: String| Error::Parse {
        what: path.display().to_string(),
        msg,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,rho,u,theta") {
        return Err(perr("missing header x,rho,u,theta".into()));
    }
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(format!("line {}: {e}", i + 2)))?;
        if v.len() != 4 {
            return Err(perr(format!("line {}: expected 4 columns", i + 2)));
        }
        xs.push(v[0]);
        ps.push(Primitives::new(v[1], v[2], v[3]));
    }
    Ok((xs, ps))
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("N_x,error,order\n");
    for r in rows {
        match r.order {
            Some(o) => s.push_str(&format!("{},{:.11e},{:.6}\n", r.nx, r.error, o)),
            None => s.push_str(&format!("{},{:.11e},\n", r.nx, r.error)),
        }
    }
    s
}

pub fn write_convergence(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    write(path, &convergence_csv(rows))
}

/// Summary of a run, stored next to its profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ProblemConfig,
    pub steps: usize,
    pub final_time: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub wall_time_seconds: f64,
    pub total: [f64; 3],
}

impl Manifest {
    pub fn from_result(r: &RunResult) -> Self {
        let total: Moments = r.moments.total(&r.disc.mesh, &r.disc.basis);
        Manifest {
            config: r.config.clone(),
            steps: r.steps,
            final_time: r.final_time,
            lambda_min: r.lambda_range.0,
            lambda_max: r.lambda_range.1,
            wall_time_seconds: r.wall_time.as_secs_f64(),
            total: total.to_array(),
        }
    }
}

pub fn write_manifest(result: &RunResult, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&Manifest::from_result(result)).expect("manifest serializes");
    write(path, &text)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        what: path.display().to_string(),
        msg: e.to_string(),
    })
}

pub fn steps_csv(result: &RunResult) -> String {
    let mut s = String::from("step,dt,lambda,sweep_iterations,wall_seconds\n");
    for (i, r) in result.reports.iter().enumerate() {
        s.push_str(&format!(
            "{},{:.11e},{:.11e},{},{:.6e}\n",
            i,
            r.dt_used,
            r.lambda,
            r.sweep_iterations,
            r.wall_time.as_secs_f64()
        ));
    }
    s
}

/// Writes `profile.csv`, `steps.csv` and `manifest.json` into `dir`.
pub fn emit(result: &RunResult, dir: &Path) -> Result<()> {
    write_profile(result, &dir.join("profile.csv"))?;
    write(&dir.join("steps.csv"), &steps_csv(result))?;
    write_manifest(result, &dir.join("manifest.json"))
}

/// A finished run loaded back from an [`emit`] directory.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub manifest: Manifest,
    pub mesh: SpatialMesh,
    pub basis: DGBasis,
    pub primitives: Vec<Primitives>,
}

impl StoredRun {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = read_manifest(&dir.join("manifest.json"))?;
        let c = &manifest.config;
        let mesh = SpatialMesh::uniform(c.x_left, c.x_right, c.nx)?;
        let basis = DGBasis::new(c.degree);
        let (_, primitives) = read_profile(&dir.join("profile.csv"))?;
        if primitives.len() != mesh.n_cells() * basis.n_nodes() {
            return Err(Error::MeshMismatch(format!(
                "{}: {} rows for {} cells of degree {}",
                dir.display(),
                primitives.len(),
                c.nx,
                c.degree
            )));
        }
        Ok(StoredRun {
            manifest,
            mesh,
            basis,
            primitives,
        })
    }

    pub fn field(&self, name: &str) -> Result<DgFunction<'_>> {
        let coeffs = match name {
            "rho" => self.primitives.iter().map(|p| p.rho).collect(),
            "u" => self.primitives.iter().map(|p| p.u).collect(),
            "theta" => self.primitives.iter().map(|p| p.theta).collect(),
            _ => return Err(Error::Config(format!("unknown field '{name}'"))),
        };
        Ok(DgFunction {
            coeffs,
            mesh: &self.mesh,
            basis: &self.basis,
        })
    }
}
