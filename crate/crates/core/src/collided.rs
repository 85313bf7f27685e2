//! Nodal DG discretization of the Euler moment system (`γ = 3`, `d = 1`):
//! flux, Jacobian, local Lax-Friedrichs interface flux, kinetic boundary
//! fluxes, wave-speed estimate and the TVB slope limiter.

use nalgebra::{DVector, Matrix3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Discretization, MomentField};
use crate::velocity::Moments;

/// Fluid boundary treatment.
#[derive(Debug, Clone, PartialEq)]
pub enum FluidBoundary {
    Periodic,
    /// Boundary flux = prescribed incoming kinetic flux
    /// `Σ_{v·n<0} ω v e G⁻` plus the outgoing half-range flux of the
    /// Maxwellian of the interior trace.
    Kinetic { left_inflow: Moments, right_inflow: Moments },
}

impl FluidBoundary {
    /// Kinetic boundary with zero incoming flux (the collided equation).
    pub fn outflow_only() -> Self {
        FluidBoundary::Kinetic {
            left_inflow: Moments::ZERO,
            right_inflow: Moments::ZERO,
        }
    }
}

/// `Φ(q) = (m, m²/ρ + ρθ, u(E + ρθ))`; zero at vacuum. With `γ = 3`,
/// `Φ₂ = 2E` identically.
pub fn euler_flux(q: &Moments) -> Moments {
    if q.is_vacuum() {
        return Moments::ZERO;
    }
    let u = q.m / q.rho;
    let p = 2.0 * q.energy - q.m * u;
    Moments::new(q.m, q.m * u + p, u * (q.energy + p))
}

/// Flux Jacobian `∂Φ/∂q`.
pub fn flux_jacobian(q: &Moments) -> Result<Matrix3<f64>> {
    let p = q.to_primitives()?;
    let (u, e) = (p.u, q.energy / q.rho);
    Ok(Matrix3::new(
        0.0,
        1.0,
        0.0,
        0.0,
        0.0,
        2.0,
        -3.0 * e * u + 2.0 * u * u * u,
        3.0 * e - 3.0 * u * u,
        3.0 * u,
    ))
}

/// Largest characteristic speed `|u| + sqrt(3θ)`; zero at vacuum, negative
/// temperatures clamped.
pub fn wave_speed(q: &Moments) -> f64 {
    if q.is_vacuum() || !(q.rho > 0.0) {
        return 0.0;
    }
    let u = q.m / q.rho;
    let theta = (2.0 * q.energy - q.m * u) / q.rho;
    u.abs() + (3.0 * theta.max(0.0)).sqrt()
}

/// Local Lax-Friedrichs flux between left state `a` and right state `b`.
pub fn llf_flux(a: &Moments, b: &Moments) -> Moments {
    let lambda = wave_speed(a).max(wave_speed(b));
    0.5 * (euler_flux(a) + euler_flux(b) - lambda * (*b - *a))
}

/// Interface fluxes at the `n_cells + 1` edges.
fn interface_fluxes(disc: &Discretization, q: &MomentField, bc: &FluidBoundary) -> Result<Vec<Moments>> {
    let nc = disc.n_cells();
    let np = disc.n_nodes();
    let right_trace = |i: usize| q.values[i * np + np - 1];
    let left_trace = |i: usize| q.values[i * np];
    let mut fluxes = vec![Moments::ZERO; nc + 1];
    for e in 1..nc {
        fluxes[e] = llf_flux(&right_trace(e - 1), &left_trace(e));
    }
    match bc {
        FluidBoundary::Periodic => {
            let f = llf_flux(&right_trace(nc - 1), &left_trace(0));
            fluxes[0] = f;
            fluxes[nc] = f;
        }
        FluidBoundary::Kinetic {
            left_inflow,
            right_inflow,
        } => {
            fluxes[0] = *left_inflow + disc.grid.half_range_flux(&left_trace(0), -1.0)?;
            fluxes[nc] = *right_inflow + disc.grid.half_range_flux(&right_trace(nc - 1), 1.0)?;
        }
    }
    Ok(fluxes)
}

/// Semi-discrete DG operator `-∂x Φ(q)`.
pub fn euler_operator(disc: &Discretization, q: &MomentField, bc: &FluidBoundary) -> Result<MomentField> {
    let np = disc.n_nodes();
    let fluxes = interface_fluxes(disc, q, bc)?;
    let m = &disc.matrices;
    let mut out = MomentField::zeros_like(disc);
    out.values.par_chunks_mut(np).enumerate().for_each(|(i, out_i)| {
        let cell = q.cell(i);
        let nodal: Vec<Moments> = cell.iter().map(euler_flux).collect();
        let scale = 2.0 / disc.mesh.widths[i];
        for c in 0..3 {
            let phi = DVector::from_iterator(np, nodal.iter().map(|f| f.to_array()[c]));
            let mut r = &m.stiffness * phi;
            r[np - 1] -= fluxes[i + 1].to_array()[c];
            r[0] += fluxes[i].to_array()[c];
            let d = scale * (&m.mass_inverse * r);
            for (o, dv) in out_i.iter_mut().zip(d.iter()) {
                let mut a = o.to_array();
                a[c] = *dv;
                *o = Moments::from_array(a);
            }
        }
    });
    Ok(out)
}

/// Collided right-hand side `-∂x Φ(q_c) + q_u / ε`.
pub fn collided_rhs(
    disc: &Discretization,
    q_c: &MomentField,
    q_u: &MomentField,
    epsilon: f64,
    bc: &FluidBoundary,
) -> Result<MomentField> {
    let r = euler_operator(disc, q_c, bc)?;
    Ok(r.add_scaled(epsilon.recip(), q_u))
}

/// Λ: largest characteristic speed over the cell-edge traces.
pub fn max_wavespeed(q: &MomentField) -> f64 {
    let np = q.n_nodes;
    (0..q.n_cells)
        .flat_map(|i| [q.values[i * np], q.values[i * np + np - 1]])
        .map(|s| wave_speed(&s))
        .fold(0.0, f64::max)
}

fn minmod(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Minmod with the TVB dead band `|a| ≤ M h²`.
fn tvb_minmod(a: f64, b: f64, c: f64, bound: f64) -> f64 {
    if a.abs() <= bound {
        a
    } else {
        minmod(a, b, c)
    }
}

/// Componentwise TVB limiter (Cockburn-Shu) with constant `m_tvb`. Cells
/// whose edge deviations from the mean exceed the dead band and disagree
/// with the neighbouring mean differences are replaced by their mean plus a
/// limited linear part; cell means are untouched. Non-periodic ends use
/// zero-gradient ghost means.
///
/// Cells left with inadmissible nodal states (negative density or
/// temperature) but an admissible mean are then contracted toward the mean
/// just enough to restore admissibility; this also catches states that
/// componentwise limiting itself made inadmissible.
pub fn tvb_limit(disc: &Discretization, q: &MomentField, m_tvb: f64, periodic: bool) -> MomentField {
    if disc.n_nodes() < 2 || !m_tvb.is_finite() {
        return q.clone();
    }
    let mut out = q.clone();
    for c in 0..3 {
        let mut u = q.component(c);
        tvb_limit_scalar(disc, &mut u, m_tvb, periodic);
        for (node, x) in out.values.iter_mut().zip(u) {
            let mut a = node.to_array();
            a[c] = x;
            *node = Moments::from_array(a);
        }
    }
    let w = &disc.basis.node_weights;
    out.values.par_chunks_mut(disc.n_nodes()).for_each(|cell| {
        let ok = |m: &Moments| m.is_vacuum() || m.to_primitives().is_ok();
        if cell.iter().all(ok) {
            return;
        }
        let mean = cell.iter().zip(w).fold(Moments::ZERO, |acc, (m, wl)| acc + (0.5 * wl) * *m);
        if mean.is_vacuum() || mean.to_primitives().is_err() {
            return;
        }
        // the admissible set is convex: bisect on the contraction factor
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let t = 0.5 * (lo + hi);
            if cell.iter().all(|m| ok(&(mean + t * (*m - mean)))) {
                lo = t;
            } else {
                hi = t;
            }
        }
        for m in cell.iter_mut() {
            *m = mean + lo * (*m - mean);
        }
    });
    out
}

/// [`tvb_limit`] for one scalar broken polynomial, nodal values cell-major.
pub fn tvb_limit_scalar(disc: &Discretization, u: &mut [f64], m_tvb: f64, periodic: bool) {
    let np = disc.n_nodes();
    let nc = disc.n_cells();
    if np < 2 || !m_tvb.is_finite() {
        return;
    }
    let w = &disc.basis.node_weights;
    // (3/2) J ξ gives the first Legendre coefficient as a dot product
    let legendre1 = 1.5 * (&disc.matrices.mass * DVector::from_column_slice(&disc.basis.nodes));
    let means: Vec<f64> = u
        .chunks(np)
        .map(|cell| 0.5 * cell.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
        .collect();

    for (i, cell) in u.chunks_mut(np).enumerate() {
        let bound = m_tvb * disc.mesh.widths[i].powi(2);
        let mean = means[i];
        let left = match i {
            0 if periodic => means[nc - 1],
            0 => mean,
            _ => means[i - 1],
        };
        let right = if i + 1 < nc {
            means[i + 1]
        } else if periodic {
            means[0]
        } else {
            mean
        };
        let (dp, dm) = (right - mean, mean - left);
        let dev_r = cell[np - 1] - mean;
        let dev_l = mean - cell[0];
        if tvb_minmod(dev_r, dp, dm, bound) == dev_r && tvb_minmod(dev_l, dp, dm, bound) == dev_l {
            continue;
        }
        let a1: f64 = cell.iter().zip(legendre1.iter()).map(|(a, l)| a * l).sum();
        let slope = tvb_minmod(a1, dp, dm, bound);
        for (node, x) in cell.iter_mut().zip(&disc.basis.nodes) {
            *node = mean + slope * x;
        }
    }
}

/// Euler-system time step used by the standalone fluid solver and checks.
pub fn euler_dt(q: &MomentField, cfl: f64, h_min: f64) -> Result<f64> {
    let lambda = max_wavespeed(q);
    if !(lambda > 1e-300) {
        return Err(Error::NoWaveScale(lambda));
    }
    Ok(cfl * h_min / lambda)
}
