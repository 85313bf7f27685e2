//! IMEX Runge-Kutta baselines for the unsplit discrete-velocity BGK system:
//! upwind DG advection explicit, BGK relaxation implicit.

use rayon::prelude::*;

use crate::collided::tvb_limit_scalar;
use crate::error::Result;
use crate::field::{Discretization, KineticField};
use crate::uncollided::{advection_operator, BoundarySpec};

/// Additive Runge-Kutta pair: explicit `(Ã, b̃, c̃)`, diagonally implicit
/// `(A, b, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexTableau {
    pub name: &'static str,
    pub order: usize,
    pub a_explicit: Vec<Vec<f64>>,
    pub b_explicit: Vec<f64>,
    pub c_explicit: Vec<f64>,
    pub a_implicit: Vec<Vec<f64>>,
    pub b_implicit: Vec<f64>,
    pub c_implicit: Vec<f64>,
}

fn square(rows: &[&[f64]], n: usize) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let mut row = r.to_vec();
            row.resize(n, 0.0);
            row
        })
        .collect()
}

impl ImexTableau {
    /// IMEX-SSP2(3,2,2), stiffly accurate (Pareschi & Russo).
    pub fn ssp2_322() -> Self {
        ImexTableau {
            name: "IMEX-SSP2(3,2,2)",
            order: 2,
            a_explicit: square(&[&[], &[0.0], &[0.0, 1.0]], 3),
            b_explicit: vec![0.0, 0.5, 0.5],
            c_explicit: vec![0.0, 0.0, 1.0],
            a_implicit: square(&[&[0.5], &[-0.5, 0.5], &[0.0, 0.5, 0.5]], 3),
            b_implicit: vec![0.0, 0.5, 0.5],
            c_implicit: vec![0.5, 0.0, 1.0],
        }
    }

    /// IMEX-ARS(4,4,3) (Ascher, Ruuth & Spiteri), with the explicit first
    /// stage written out.
    pub fn ars_443() -> Self {
        ImexTableau {
            name: "IMEX-ARS(4,4,3)",
            order: 3,
            a_explicit: square(
                &[
                    &[],
                    &[0.5],
                    &[11.0 / 18.0, 1.0 / 18.0],
                    &[5.0 / 6.0, -5.0 / 6.0, 0.5],
                    &[0.25, 1.75, 0.75, -1.75],
                ],
                5,
            ),
            b_explicit: vec![0.25, 1.75, 0.75, -1.75, 0.0],
            c_explicit: vec![0.0, 0.5, 2.0 / 3.0, 0.5, 1.0],
            a_implicit: square(
                &[
                    &[0.0],
                    &[0.0, 0.5],
                    &[0.0, 1.0 / 6.0, 0.5],
                    &[0.0, -0.5, 0.5, 0.5],
                    &[0.0, 1.5, -1.5, 0.5, 0.5],
                ],
                5,
            ),
            b_implicit: vec![0.0, 1.5, -1.5, 0.5, 0.5],
            c_implicit: vec![0.0, 0.5, 2.0 / 3.0, 0.5, 1.0],
        }
    }

    pub fn stages(&self) -> usize {
        self.b_explicit.len()
    }
}

/// Outcome of [`validate_tableau`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableauReport {
    pub passed: Vec<String>,
    pub violated: Vec<String>,
}

impl TableauReport {
    pub fn is_valid(&self) -> bool {
        self.violated.is_empty()
    }

    fn check(&mut self, label: String, value: f64, expect: f64) {
        if (value - expect).abs() <= 1e-13 {
            self.passed.push(label);
        } else {
            self.violated.push(format!("{label}: {value} != {expect}"));
        }
    }
}

/// Structural checks and order conditions up to the advertised order,
/// including all explicit/implicit coupling conditions.
pub fn validate_tableau(t: &ImexTableau) -> TableauReport {
    let mut r = TableauReport::default();
    let s = t.stages();
    let dims_ok = [&t.b_implicit, &t.c_explicit, &t.c_implicit].iter().all(|v| v.len() == s)
        && t.a_explicit.len() == s
        && t.a_implicit.len() == s
        && t.a_explicit.iter().chain(&t.a_implicit).all(|row| row.len() == s);
    if !dims_ok {
        r.violated.push("inconsistent stage counts".into());
        return r;
    }
    for i in 0..s {
        for j in i..s {
            if t.a_explicit[i][j] != 0.0 {
                r.violated.push(format!("explicit A[{i}][{j}] not strictly lower"));
            }
        }
        for j in i + 1..s {
            if t.a_implicit[i][j] != 0.0 {
                r.violated.push(format!("implicit A[{i}][{j}] above diagonal"));
            }
        }
        let row_e: f64 = t.a_explicit[i].iter().sum();
        let row_i: f64 = t.a_implicit[i].iter().sum();
        r.check(format!("c̃[{i}] = Σ_j Ã[{i}][j]"), row_e, t.c_explicit[i]);
        r.check(format!("c[{i}] = Σ_j A[{i}][j]"), row_i, t.c_implicit[i]);
    }

    let bs = [("b̃", &t.b_explicit), ("b", &t.b_implicit)];
    let cs = [("c̃", &t.c_explicit), ("c", &t.c_implicit)];
    let as_ = [("Ã", &t.a_explicit), ("A", &t.a_implicit)];
    for (bn, b) in bs {
        r.check(format!("Σ {bn} = 1"), b.iter().sum(), 1.0);
    }
    if t.order >= 2 {
        for (bn, b) in bs {
            for (cn, c) in cs {
                let v: f64 = (0..s).map(|i| b[i] * c[i]).sum();
                r.check(format!("Σ {bn}·{cn} = 1/2"), v, 0.5);
            }
        }
    }
    if t.order >= 3 {
        for (bn, b) in bs {
            for (i1, (c1n, c1)) in cs.iter().enumerate() {
                for (c2n, c2) in cs.iter().skip(i1) {
                    let v: f64 = (0..s).map(|i| b[i] * c1[i] * c2[i]).sum();
                    r.check(format!("Σ {bn}·{c1n}·{c2n} = 1/3"), v, 1.0 / 3.0);
                }
            }
            for (an, a) in as_ {
                for (cn, c) in cs {
                    let v: f64 = (0..s).map(|i| b[i] * (0..s).map(|j| a[i][j] * c[j]).sum::<f64>()).sum();
                    r.check(format!("Σ {bn}·{an}·{cn} = 1/6"), v, 1.0 / 6.0);
                }
            }
        }
    }
    r
}

/// Per-velocity minmod (TVD) limiting of a kinetic field. Limited nodal
/// values lie between neighbouring cell means, so non-negative means give a
/// non-negative field and hence realizable moments.
pub fn limit_kinetic(disc: &Discretization, f: &mut KineticField, periodic: bool) {
    let n = f.n_cells * f.n_nodes;
    f.values
        .par_chunks_mut(n)
        .for_each(|fk| tvb_limit_scalar(disc, fk, 0.0, periodic));
}

/// One IMEX step of `∂t f + v ∂x f = (M(f) - f)/ε + S`.
///
/// Each implicit stage `F = Y + a Δt (M(F) - F)/ε` is solved in closed form:
/// relaxation conserves moments, so `M(F) = M(Y)` once the discrete
/// Maxwellian is conservation-fixed to the moments of `Y`. With `limit`,
/// every stage accumulation `Y` and the result pass through
/// [`limit_kinetic`].
#[allow(clippy::too_many_arguments)]
pub fn imex_step(
    disc: &Discretization,
    f: &KineticField,
    dt: f64,
    epsilon: f64,
    tableau: &ImexTableau,
    bc: &BoundarySpec,
    source: Option<&KineticField>,
    limiter: bool,
) -> Result<KineticField> {
    let limit = |f: &mut KineticField| {
        if limiter {
            limit_kinetic(disc, f, bc.is_periodic());
        }
    };
    let s = tableau.stages();
    let grid = &disc.grid;
    let needs_transport: Vec<bool> = (0..s)
        .map(|j| tableau.b_explicit[j] != 0.0 || (j + 1..s).any(|i| tableau.a_explicit[i][j] != 0.0))
        .collect();
    let needs_relax: Vec<bool> = (0..s)
        .map(|j| tableau.b_implicit[j] != 0.0 || (j + 1..s).any(|i| tableau.a_implicit[i][j] != 0.0))
        .collect();
    let mut transport: Vec<Option<KineticField>> = vec![None; s];
    let mut relax: Vec<Option<KineticField>> = vec![None; s];

    for i in 0..s {
        let mut y = f.clone();
        for j in 0..i {
            let ae = tableau.a_explicit[i][j];
            if ae != 0.0 {
                y.axpy(dt * ae, transport[j].as_ref().expect("explicit stage evaluated"));
            }
            let ai = tableau.a_implicit[i][j];
            if ai != 0.0 {
                y.axpy(dt * ai, relax[j].as_ref().expect("implicit stage evaluated"));
            }
        }
        if !(needs_transport[i] || needs_relax[i]) {
            continue;
        }
        if i > 0 {
            limit(&mut y);
        }
        let q = y.moments(grid);
        let mut m = KineticField::maxwellian(&q, grid)?;
        m.fix_moments(&q, grid)?;
        // R = (M - F)/ε = (M - Y)/(ε + a Δt)
        let a = dt * tableau.a_implicit[i][i];
        let mut r = m;
        r.axpy(-1.0, &y);
        let scale = (epsilon + a).recip();
        r.values.iter_mut().for_each(|x| *x *= scale);
        let mut stage = y;
        stage.axpy(a, &r);
        if needs_transport[i] {
            let mut t = advection_operator(disc, &stage, bc);
            if let Some(src) = source {
                t.axpy(1.0, src);
            }
            transport[i] = Some(t);
        }
        if needs_relax[i] {
            relax[i] = Some(r);
        }
    }

    let mut out = f.clone();
    for i in 0..s {
        if tableau.b_explicit[i] != 0.0 {
            out.axpy(dt * tableau.b_explicit[i], transport[i].as_ref().expect("explicit stage evaluated"));
        }
        if tableau.b_implicit[i] != 0.0 {
            out.axpy(dt * tableau.b_implicit[i], relax[i].as_ref().expect("implicit stage evaluated"));
        }
    }
    limit(&mut out);
    Ok(out)
}

/// Number of fixed IMEX steps `⌈t_final / (C h / v_max)⌉`.
pub fn imex_step_count(t_final: f64, cfl: f64, h: f64, v_max: f64) -> usize {
    let dt = cfl * h / v_max;
    // absorb representation error in t_final / dt
    ((t_final / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MomentField;
    use crate::mesh::SpatialMesh;
    use crate::velocity::{Primitives, VelocityGrid};

    #[test]
    fn ssp2_passes_order_two_and_fails_order_three() {
        let t = ImexTableau::ssp2_322();
        let r = validate_tableau(&t);
        assert!(r.is_valid(), "{:?}", r.violated);
        let mut t3 = t.clone();
        t3.order = 3;
        let r3 = validate_tableau(&t3);
        assert!(r3.violated.iter().any(|v| v.starts_with("Σ b·c·c = 1/3")));
    }

    #[test]
    fn ars_passes_order_three() {
        let r = validate_tableau(&ImexTableau::ars_443());
        assert!(r.is_valid(), "{:?}", r.violated);
        assert!(r.passed.len() > 20);
    }

    #[test]
    fn forward_euler_tableau_fails_c_conditions() {
        let t = ImexTableau {
            name: "forward Euler",
            order: 2,
            a_explicit: vec![vec![0.0]],
            b_explicit: vec![1.0],
            c_explicit: vec![0.0],
            a_implicit: vec![vec![0.0]],
            b_implicit: vec![1.0],
            c_implicit: vec![0.0],
        };
        let r = validate_tableau(&t);
        assert!(r.passed.iter().any(|p| p == "Σ b = 1"));
        assert!(r.passed.iter().any(|p| p == "Σ b̃ = 1"));
        assert!(r.violated.iter().any(|v| v.contains("1/2")));
    }

    #[test]
    fn step_counts() {
        assert_eq!(imex_step_count(0.1, 0.2, 0.01, 6.0), 300);
        assert_eq!(imex_step_count(0.1, 0.14, 0.01, 6.0), 429);
        assert_eq!(imex_step_count(0.1, 0.2, 0.02, 15.0), 375);
        assert_eq!(imex_step_count(1.8, 0.2, 0.1, 14.0), 1260);
    }

    #[test]
    fn equilibrium_is_preserved() {
        let d = Discretization::new(
            SpatialMesh::uniform(0.0, 1.0, 6).unwrap(),
            2,
            VelocityGrid::new(30, 8.0).unwrap(),
        );
        let q = MomentField::from_fn(&d, |_| Primitives::new(0.9, -0.2, 1.1).to_moments());
        // discrete equilibrium: the conservation-fixed Maxwellian
        let mut g = KineticField::maxwellian(&q, &d.grid).unwrap();
        g.fix_moments(&q, &d.grid).unwrap();
        for t in [ImexTableau::ssp2_322(), ImexTableau::ars_443()] {
            for eps in [1e-6, 1.0] {
                let mut f = g.clone();
                for _ in 0..3 {
                    f = imex_step(&d, &f, 0.005, eps, &t, &BoundarySpec::Periodic, None, false).unwrap();
                }
                assert!(f.max_abs_diff(&g) < 1e-12, "{} eps {eps} {}", t.name, f.max_abs_diff(&g));
            }
        }
    }

    #[test]
    fn relaxation_conserves_moments() {
        let d = Discretization::new(
            SpatialMesh::uniform(0.0, 1.0, 4).unwrap(),
            1,
            VelocityGrid::new(30, 8.0).unwrap(),
        );
        let f = KineticField::from_fn(&d, |x, v| (1.0 + 0.5 * x) * (-(v - 0.5) * (v - 0.5)).exp() * (1.0 + 0.1 * v * v));
        let q0 = f.moments(&d.grid).total(&d.mesh, &d.basis);
        for t in [ImexTableau::ssp2_322(), ImexTableau::ars_443()] {
            let g = imex_step(&d, &f, 0.01, 1e-3, &t, &BoundarySpec::Periodic, None, false).unwrap();
            let q1 = g.moments(&d.grid).total(&d.mesh, &d.basis);
            assert!((q1 - q0).max_abs() < 1e-12 * q0.max_abs());
        }
    }
}
