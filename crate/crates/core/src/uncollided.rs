//! Upwind DG discrete-velocity transport: implicit sweeps for the damped
//! advection equation, the explicit advection operator, and the
//! characteristics solution used as a test oracle.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Discretization, KineticField};


/// Kinetic boundary data.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    Periodic,
    /// Inflow values `G⁻(x, v_k)` per velocity at each end; outflow entries
    /// are ignored.
    Dirichlet { left: Vec<f64>, right: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl BoundarySpec {
    /// Dirichlet data with zero inflow.
    pub fn vacuum(n_velocities: usize) -> Self {
        BoundarySpec::Dirichlet {
            left: vec![0.0; n_velocities],
            right: vec![0.0; n_velocities],
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundarySpec::Periodic)
    }
}

/// Ghost-cell nodal values beyond `side` for velocity `k`: the opposite end
/// cell of `f_k` when periodic, the inflow value at every node otherwise.
pub fn apply_boundary(bc: &BoundarySpec, side: Side, k: usize, f_k: &[f64], n_nodes: usize) -> Vec<f64> {
    match bc {
        BoundarySpec::Periodic => match side {
            Side::Left => f_k[f_k.len() - n_nodes..].to_vec(),
            Side::Right => f_k[..n_nodes].to_vec(),
        },
        BoundarySpec::Dirichlet { left, right } => {
            let g = match side {
                Side::Left => left[k],
                Side::Right => right[k],
            };
            vec![g; n_nodes]
        }
    }
}

/// Implicit damped-advection problem
/// `(f - base)/tau + v ∂x f + f/eps = extra`, with `tau` or `eps` possibly
/// infinite.
#[derive(Debug, Clone, Copy)]
pub struct SweepParams {
    pub tau: f64,
    pub epsilon: f64,
}

impl SweepParams {
    fn sigma(&self) -> f64 {
        self.tau.recip() + self.epsilon.recip()
    }
}

/// Per-velocity cell operators: `f_i = B s_i + c * inflow`, where `s` is the
/// pointwise right-hand side and `inflow` the upwind trace times `|v|`.
struct CellSolve {
    b: DMatrix<f64>,
    c: DVector<f64>,
}

fn cell_solve(disc: &Discretization, v: f64, h: f64, sigma: f64) -> Result<CellSolve> {
    let m = &disc.matrices;
    let np = disc.n_nodes();
    let half_mass = (0.5 * h) * &m.mass;
    let mut a = sigma * &half_mass;
    let mut e = DVector::zeros(np);
    if v > 0.0 {
        a += v * (&m.l1 - &m.stiffness);
        e[0] = 1.0;
    } else if v < 0.0 {
        a += v * (-&m.l4 - &m.stiffness);
        e[np - 1] = 1.0;
    }
    let lu = a.lu();
    let b = lu.solve(&half_mass).ok_or(Error::SingularSystem(np))?;
    let c = lu.solve(&e).ok_or(Error::SingularSystem(np))?;
    if !(b.iter().all(|x| x.is_finite()) && c.iter().all(|x| x.is_finite())) {
        return Err(Error::SingularSystem(np));
    }
    Ok(CellSolve { b, c })
}

/// One upwind sweep of velocity `k` with a fixed inflow trace.
fn sweep_once(
    disc: &Discretization,
    solves: &[CellSolve],
    cell_of_width: &[usize],
    v: f64,
    rhs: &[f64],
    inflow: f64,
    out: &mut [f64],
) {
    let np = disc.n_nodes();
    let nc = disc.n_cells();
    let mut upwind = inflow;
    let order: Box<dyn Iterator<Item = usize>> = if v >= 0.0 {
        Box::new(0..nc)
    } else {
        Box::new((0..nc).rev())
    };
    for i in order {
        let s = &solves[cell_of_width[i]];
        let r = DVector::from_column_slice(&rhs[i * np..(i + 1) * np]);
        let f = &s.b * r + (v.abs() * upwind) * &s.c;
        out[i * np..(i + 1) * np].copy_from_slice(f.as_slice());
        upwind = if v >= 0.0 { f[np - 1] } else { f[0] };
    }
}

/// Distinct cell widths of the mesh and the index of each cell's width.
fn width_classes(disc: &Discretization) -> (Vec<f64>, Vec<usize>) {
    let mut widths: Vec<f64> = Vec::new();
    let mut idx = Vec::with_capacity(disc.n_cells());
    for &h in &disc.mesh.widths {
        match widths.iter().position(|&w| w == h) {
            Some(p) => idx.push(p),
            None => {
                widths.push(h);
                idx.push(widths.len() - 1);
            }
        }
    }
    (widths, idx)
}

/// Solves `(f - base)/tau + v_k ∂x f + f/eps = extra` for every velocity by
/// upwind sweeps. Returns the solution and the number of sweeps per velocity
/// (2 for periodic boundaries, 1 for inflow boundaries).
pub fn sweep(
    disc: &Discretization,
    base: &KineticField,
    params: SweepParams,
    extra: Option<&KineticField>,
    bc: &BoundarySpec,
) -> Result<(KineticField, usize)> {
    let sigma = params.sigma();
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!(
            "sweep needs finite positive 1/tau + 1/eps, got {sigma}"
        )));
    }
    let inv_tau = params.tau.recip();
    let n = disc.n_dofs();
    let np = disc.n_nodes();
    let (widths, cell_of_width) = width_classes(disc);
    let mut out = KineticField::zeros_like(disc);

    let iterations = out
        .values
        .par_chunks_mut(n)
        .enumerate()
        .map(|(k, out_k)| -> Result<usize> {
            let v = disc.grid.points[k];
            let base_k = base.velocity(k);
            let rhs: Vec<f64> = match extra {
                Some(e) => base_k
                    .iter()
                    .zip(e.velocity(k))
                    .map(|(b, s)| b * inv_tau + s)
                    .collect(),
                None => base_k.iter().map(|b| b * inv_tau).collect(),
            };
            if v == 0.0 {
                for (o, r) in out_k.iter_mut().zip(&rhs) {
                    *o = r / sigma;
                }
                return Ok(1);
            }
            let solves = widths
                .iter()
                .map(|&h| cell_solve(disc, v, h, sigma))
                .collect::<Result<Vec<_>>>()?;
            let side = if v > 0.0 { Side::Left } else { Side::Right };
            match bc {
                BoundarySpec::Dirichlet { .. } => {
                    let ghost = apply_boundary(bc, side, k, base_k, np);
                    let inflow = if v > 0.0 { ghost[np - 1] } else { ghost[0] };
                    sweep_once(disc, &solves, &cell_of_width, v, &rhs, inflow, out_k);
                    Ok(1)
                }
                BoundarySpec::Periodic => {
                    let trace = |f: &[f64]| {
                        let ghost = apply_boundary(bc, side, k, f, np);
                        if v > 0.0 {
                            ghost[np - 1]
                        } else {
                            ghost[0]
                        }
                    };
                    // the outflow trace is affine in the inflow trace, a + b·inflow:
                    // one sweep from zero inflow and one homogeneous unit sweep
                    // give the periodic inflow a / (1 - b) exactly
                    sweep_once(disc, &solves, &cell_of_width, v, &rhs, 0.0, out_k);
                    let a = trace(out_k);
                    let mut unit = vec![0.0; n];
                    sweep_once(disc, &solves, &cell_of_width, v, &vec![0.0; n], 1.0, &mut unit);
                    let b = trace(&unit);
                    if !(b.is_finite() && b < 1.0) {
                        return Err(Error::PeriodicSweepDegenerate { transmission: b });
                    }
                    let inflow = a / (1.0 - b);
                    for (o, u) in out_k.iter_mut().zip(&unit) {
                        *o += inflow * u;
                    }
                    Ok(2)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(1);
    Ok((out, iterations))
}

/// Backward Euler step of the uncollided equation with optional source.
pub fn sweep_backward_euler(
    disc: &Discretization,
    f_in: &KineticField,
    tau: f64,
    epsilon: f64,
    source: Option<&KineticField>,
    bc: &BoundarySpec,
) -> Result<(KineticField, usize)> {
    if !(tau > 0.0 && epsilon > 0.0) {
        return Err(Error::Config(format!(
            "backward Euler needs tau > 0 and eps > 0 (tau = {tau}, eps = {epsilon})"
        )));
    }
    sweep(disc, f_in, SweepParams { tau, epsilon }, source, bc)
}

/// BDF2 relaxation step against a frozen Maxwellian:
/// `(f - 4/3 g_half + 1/3 g_n)/(dt/3) + v ∂x f + f/eps = M/eps + S`.
pub fn sweep_bdf2_with_source(
    disc: &Discretization,
    g_half: &KineticField,
    g_n: &KineticField,
    dt: f64,
    epsilon: f64,
    m_source: &KineticField,
    source: Option<&KineticField>,
    bc: &BoundarySpec,
) -> Result<(KineticField, usize)> {
    if !(dt > 0.0 && epsilon > 0.0) {
        return Err(Error::Config(format!(
            "BDF2 step needs dt > 0 and eps > 0 (dt = {dt}, eps = {epsilon})"
        )));
    }
    let mut base = g_half.clone();
    for (b, g) in base.values.iter_mut().zip(&g_n.values) {
        *b = (4.0 * *b - g) / 3.0;
    }
    let mut extra = m_source.clone();
    let inv_eps = epsilon.recip();
    extra.values.iter_mut().for_each(|m| *m *= inv_eps);
    if let Some(s) = source {
        extra.axpy(1.0, s);
    }
    sweep(
        disc,
        &base,
        SweepParams {
            tau: dt / 3.0,
            epsilon,
        },
        Some(&extra),
        bc,
    )
}

/// Semi-discrete upwind advection `-v_k ∂x f` for every velocity.
pub fn advection_operator(disc: &Discretization, f: &KineticField, bc: &BoundarySpec) -> KineticField {
    let n = disc.n_dofs();
    let np = disc.n_nodes();
    let nc = disc.n_cells();
    let m = &disc.matrices;
    let mut out = KineticField::zeros_like(disc);
    out.values.par_chunks_mut(n).enumerate().for_each(|(k, out_k)| {
        let v = disc.grid.points[k];
        if v == 0.0 {
            return;
        }
        let f_k = f.velocity(k);
        let left = apply_boundary(bc, Side::Left, k, f_k, np);
        let right = apply_boundary(bc, Side::Right, k, f_k, np);
        for i in 0..nc {
            let fi = DVector::from_column_slice(&f_k[i * np..(i + 1) * np]);
            // v ∫ f w' minus the upwind trace terms
            let mut r = v * (m.stiffness.clone() * &fi);
            if v > 0.0 {
                let inflow = if i == 0 { left[np - 1] } else { f_k[i * np - 1] };
                r[np - 1] -= v * fi[np - 1];
                r[0] += v * inflow;
            } else {
                let inflow = if i + 1 == nc { right[0] } else { f_k[(i + 1) * np] };
                r[np - 1] -= v * inflow;
                r[0] += v * fi[0];
            }
            let d = (2.0 / disc.mesh.widths[i]) * (&m.mass_inverse * r);
            out_k[i * np..(i + 1) * np].copy_from_slice(d.as_slice());
        }
    });
    out
}

/// Exact solution of `∂t f + v ∂x f = -f/eps` on `[x_left, x_right]` from
/// data `g(x)` at `t_n`, with inflow `inflow(x_b, t)` entering at the upwind
/// boundary. Characteristics are traced through `x - v (t - t_n)`.
pub fn exact_uncollided(
    x: f64,
    v: f64,
    t: f64,
    t_n: f64,
    g: impl Fn(f64) -> f64,
    inflow: impl Fn(f64, f64) -> f64,
    epsilon: f64,
    domain: (f64, f64),
) -> f64 {
    let elapsed = t - t_n;
    if v == 0.0 {
        return (-elapsed / epsilon).exp() * g(x);
    }
    let boundary = if v > 0.0 { domain.0 } else { domain.1 };
    // time since the characteristic left the inflow boundary
    let s_star = (x - boundary) / v;
    if elapsed <= s_star {
        (-elapsed / epsilon).exp() * g(x - v * elapsed)
    } else {
        (-s_star / epsilon).exp() * inflow(boundary, t - s_star)
    }
}
