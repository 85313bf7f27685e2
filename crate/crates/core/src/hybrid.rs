//! Hybrid BERK2 time integration: backward Euler sweeps for the uncollided
//! distribution, an explicit predictor-corrector for the collided Euler
//! moments, and the optional BDF2 correction with conservation fix.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::collided::{collided_rhs, euler_operator, max_wavespeed, tvb_limit, FluidBoundary};
use crate::error::{Error, Result};
use crate::field::{Discretization, KineticField, MomentField};
use crate::uncollided::{sweep_backward_euler, sweep_bdf2_with_source, BoundarySpec};
use crate::velocity::Moments;

/// State passed to the collided flux in the predictor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorFlux {
    /// Flux of the reset collided state `q_c = 0`, i.e. no flux. The
    /// `ε → 0` limit is then a forward Euler step for the Euler equations.
    Literal,
    /// Flux of `w qⁿ`, where `w = 1 - (1 - e^{-x})/x`, `x = Δt/(2ε)` is the
    /// mean fraction of the mass that has collided over the half step. Tends
    /// to `Φ(qⁿ)` as `ε → 0` (midpoint predictor) and to zero as `ε → ∞`.
    #[default]
    Buildup,
}

/// Mean collided fraction over a half step of length `dt/2`.
pub fn buildup_weight(dt: f64, epsilon: f64) -> f64 {
    let x = 0.5 * dt / epsilon;
    if x < 1e-4 {
        x / 2.0 - x * x / 6.0
    } else {
        1.0 + (-x).exp_m1() / x
    }
}

/// Relabeled distribution `g` at the start of a step. The collided moments
/// are zero between steps and live only inside a step.
#[derive(Debug, Clone)]
pub struct HybridState {
    pub g: KineticField,
    pub t: f64,
    pub step_index: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepReport {
    pub dt_used: f64,
    pub lambda: f64,
    pub sweep_iterations: usize,
    pub wall_time: Duration,
}

/// Fixed ingredients of a hybrid run.
#[derive(Debug, Clone)]
pub struct HybridSetup<'a> {
    pub disc: &'a Discretization,
    pub epsilon: f64,
    pub bc: BoundarySpec,
    pub source: Option<KineticField>,
    /// TVB constant; `None` disables the limiter.
    pub limiter: Option<f64>,
    pub predictor: PredictorFlux,
}

impl HybridSetup<'_> {
    fn fluid_bc(&self) -> FluidBoundary {
        if self.bc.is_periodic() {
            FluidBoundary::Periodic
        } else {
            FluidBoundary::outflow_only()
        }
    }

    fn limit(&self, q: MomentField) -> MomentField {
        match self.limiter {
            Some(m) => tvb_limit(self.disc, &q, m, self.bc.is_periodic()),
            None => q,
        }
    }
}

/// Intermediate quantities of one BERK2 step.
struct Berk2Stages {
    f_half: KineticField,
    q_c_half: MomentField,
    f_new: KineticField,
    q_u_new: MomentField,
    q_c_new: MomentField,
    iterations: usize,
}

fn berk2_stages(setup: &HybridSetup, g: &KineticField, dt: f64) -> Result<Berk2Stages> {
    let disc = setup.disc;
    let eps = setup.epsilon;
    let grid = &disc.grid;
    let fluid_bc = setup.fluid_bc();
    let source = setup.source.as_ref();

    let (f_half, it1) = sweep_backward_euler(disc, g, 0.5 * dt, eps, source, &setup.bc)?;
    let q_u_half = f_half.moments(grid);
    let flux_state = match setup.predictor {
        PredictorFlux::Literal => MomentField::zeros_like(disc),
        PredictorFlux::Buildup => g.moments(grid).scaled(buildup_weight(dt, eps)),
    };
    let rhs = collided_rhs(disc, &flux_state, &q_u_half, eps, &fluid_bc)?;
    let q_c_half = setup.limit(rhs.scaled(0.5 * dt));

    let (f_new, it2) = sweep_backward_euler(disc, g, dt, eps, source, &setup.bc)?;
    let q_u_new = f_new.moments(grid);
    let rhs = collided_rhs(disc, &q_c_half, &q_u_new, eps, &fluid_bc)?;
    let q_c_new = setup.limit(rhs.scaled(dt));

    Ok(Berk2Stages {
        f_half,
        q_c_half,
        f_new,
        q_u_new,
        q_c_new,
        iterations: it1.max(it2),
    })
}

fn finish(state: &HybridState, g: KineticField, dt: f64, lambda: f64, iterations: usize, start: Instant) -> Result<(HybridState, StepReport)> {
    if !g.is_finite() {
        return Err(Error::Inadmissible {
            rho: f64::NAN,
            theta: f64::NAN,
        });
    }
    Ok((
        HybridState {
            g,
            t: state.t + dt,
            step_index: state.step_index + 1,
        },
        StepReport {
            dt_used: dt,
            lambda,
            sweep_iterations: iterations,
            wall_time: start.elapsed(),
        },
    ))
}

/// One BERK2 step (uncollided backward Euler, collided predictor-corrector,
/// reconstruction and relabeling).
pub fn berk2_step(setup: &HybridSetup, state: &HybridState, dt: f64) -> Result<(HybridState, StepReport)> {
    let start = Instant::now();
    let s = berk2_stages(setup, &state.g, dt)?;
    let mut g = KineticField::maxwellian(&s.q_c_new, &setup.disc.grid)?;
    g.axpy(1.0, &s.f_new);
    let lambda = max_wavespeed(&state.g.moments(&setup.disc.grid));
    finish(state, g, dt, lambda, s.iterations, start)
}

/// BERK2 followed by the BDF2 relaxation step against the conservation-fixed
/// Maxwellian of the hybrid moments, and a final conservation fix.
pub fn berk2_corrected_step(setup: &HybridSetup, state: &HybridState, dt: f64) -> Result<(HybridState, StepReport)> {
    let start = Instant::now();
    let disc = setup.disc;
    let grid = &disc.grid;
    let s = berk2_stages(setup, &state.g, dt)?;

    let mut g_half = KineticField::maxwellian(&s.q_c_half, grid)?;
    g_half.axpy(1.0, &s.f_half);
    let q_new = s.q_u_new.add_scaled(1.0, &s.q_c_new);
    let mut m_new = KineticField::maxwellian(&q_new, grid)?;
    m_new.fix_moments(&q_new, grid)?;
    let (mut f, it3) = sweep_bdf2_with_source(
        disc,
        &g_half,
        &state.g,
        dt,
        setup.epsilon,
        &m_new,
        setup.source.as_ref(),
        &setup.bc,
    )?;
    f.fix_moments(&q_new, grid)?;
    let lambda = max_wavespeed(&state.g.moments(grid));
    finish(state, f, dt, lambda, s.iterations.max(it3), start)
}

/// `Δt = C h_min / Λ`.
pub fn select_dt(q_total: &MomentField, cfl: f64, h_min: f64) -> Result<f64> {
    if !(cfl > 0.0) {
        return Err(Error::Config(format!("CFL constant must be positive, got {cfl}")));
    }
    let lambda = max_wavespeed(q_total);
    if !(lambda > 1e-12) {
        return Err(Error::NoWaveScale(lambda));
    }
    Ok(cfl * h_min / lambda)
}

/// Incoming kinetic fluxes `Σ_{v·n<0} ω v e G⁻` implied by Dirichlet data.
pub fn kinetic_inflow(disc: &Discretization, bc: &BoundarySpec) -> FluidBoundary {
    match bc {
        BoundarySpec::Periodic => FluidBoundary::Periodic,
        BoundarySpec::Dirichlet { left, right } => {
            let mut l = Moments::ZERO;
            let mut r = Moments::ZERO;
            for (k, &v) in disc.grid.points.iter().enumerate() {
                let c = Moments::from_vector(&disc.grid.column(k));
                if v > 0.0 {
                    l += (v * left[k]) * c;
                } else if v < 0.0 {
                    r += (v * right[k]) * c;
                }
            }
            FluidBoundary::Kinetic {
                left_inflow: l,
                right_inflow: r,
            }
        }
    }
}

/// Second-order predictor-corrector for the Euler equations with the same
/// DG operator, limiter and kinetic boundary fluxes as the collided solver;
/// the formal `ε → 0` limit of the hybrid scheme.
pub fn euler_step(disc: &Discretization, q: &MomentField, dt: f64, bc: &FluidBoundary, limiter: Option<f64>) -> Result<MomentField> {
    let periodic = matches!(bc, FluidBoundary::Periodic);
    let limit = |q: MomentField| match limiter {
        Some(m) => tvb_limit(disc, &q, m, periodic),
        None => q,
    };
    let half = limit(q.add_scaled(0.5 * dt, &euler_operator(disc, q, bc)?));
    Ok(limit(q.add_scaled(dt, &euler_operator(disc, &half, bc)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SpatialMesh;
    use crate::velocity::{Primitives, VelocityGrid};
    use approx::assert_relative_eq;

    fn setup_disc(nx: usize) -> Discretization {
        Discretization::new(
            SpatialMesh::uniform(0.0, 1.0, nx).unwrap(),
            2,
            VelocityGrid::new(40, 8.0).unwrap(),
        )
    }

    #[test]
    fn buildup_weight_limits() {
        assert!(buildup_weight(1e-3, 1e-12) > 1.0 - 1e-8);
        let w = buildup_weight(1e-3, 1e12);
        assert_relative_eq!(w, 1e-3 / 4e12, max_relative = 1e-6);
        // continuity across the series switch
        let a = buildup_weight(2e-4 * (1.0 - 1e-9), 1.0);
        let b = buildup_weight(2e-4 * (1.0 + 1e-9), 1.0);
        assert!((a - b).abs() < 1e-12);
        assert_relative_eq!(buildup_weight(2.0, 1.0), (-1.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn global_maxwellian_is_a_fixed_point() {
        let d = setup_disc(8);
        let q = MomentField::from_fn(&d, |_| Primitives::new(1.0, 0.3, 1.0).to_moments());
        let g = KineticField::maxwellian(&q, &d.grid).unwrap();
        for eps in [1e-6, 1.0] {
            let setup = HybridSetup {
                disc: &d,
                epsilon: eps,
                bc: BoundarySpec::Periodic,
                source: None,
                limiter: Some(20.0),
                predictor: PredictorFlux::Buildup,
            };
            let mut state = HybridState { g: g.clone(), t: 0.0, step_index: 0 };
            for _ in 0..3 {
                state = berk2_corrected_step(&setup, &state, 0.01).unwrap().0;
            }
            assert!(state.g.max_abs_diff(&g) < 1e-12, "eps {eps}");
            let mut state = HybridState { g: g.clone(), t: 0.0, step_index: 0 };
            for _ in 0..3 {
                state = berk2_step(&setup, &state, 0.01).unwrap().0;
            }
            // relabeling reconstructs the Maxwellian from its own quadrature
            // moments, exact up to the velocity truncation (7.7 thermal widths)
            assert!(state.g.max_abs_diff(&g) < 1e-12, "eps {eps}: {}", state.g.max_abs_diff(&g));
        }
    }

    #[test]
    fn select_dt_uniform_state() {
        let d = setup_disc(4);
        let q = MomentField::from_fn(&d, |_| Moments::new(1.0, 0.0, 0.5));
        assert_relative_eq!(select_dt(&q, 1.0, 1.0).unwrap(), 1.0 / 3f64.sqrt(), max_relative = 1e-15);
        assert!(select_dt(&MomentField::zeros_like(&d), 1.0, 1.0).is_err());
        assert!(select_dt(&q, 0.0, 1.0).is_err());
    }

    #[test]
    fn kinetic_inflow_of_equilibrium_matches_half_range_flux() {
        let d = setup_disc(4);
        let q = Primitives::new(1.0, 0.2, 0.9).to_moments();
        let m = d.grid.discrete_maxwellian(&q).unwrap();
        let bc = BoundarySpec::Dirichlet { left: m.clone(), right: m };
        match kinetic_inflow(&d, &bc) {
            FluidBoundary::Kinetic { left_inflow, right_inflow } => {
                assert!((left_inflow - d.grid.half_range_flux(&q, 1.0).unwrap()).max_abs() < 1e-15);
                assert!((right_inflow - d.grid.half_range_flux(&q, -1.0).unwrap()).max_abs() < 1e-15);
            }
            _ => panic!("expected kinetic boundary"),
        }
    }
}
