//! Discrete velocity grid, moments of the collision invariants, Maxwellians
//! and the conservation-fix projection.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Densities below this are vacuum.
pub const RHO_FLOOR: f64 = 1e-13;
/// Temperatures at or below this are inadmissible.
pub const THETA_FLOOR: f64 = 1e-13;

/// Conserved moments `(rho, m, E)` of the collision invariants `(1, v, v²/2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub rho: f64,
    pub m: f64,
    pub energy: f64,
}

/// Primitive variables `(rho, u, theta)`; pressure is `rho * theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitives {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
}

impl Moments {
    pub const ZERO: Moments = Moments {
        rho: 0.0,
        m: 0.0,
        energy: 0.0,
    };

    pub fn new(rho: f64, m: f64, energy: f64) -> Self {
        Moments { rho, m, energy }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.rho, self.m, self.energy]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Moments::new(a[0], a[1], a[2])
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.rho, self.m, self.energy)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Moments::new(v[0], v[1], v[2])
    }

    /// Vacuum: no Maxwellian, zero flux, zero wave speed.
    pub fn is_vacuum(&self) -> bool {
        self.rho.abs() < RHO_FLOOR
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.m.is_finite() && self.energy.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.rho.abs().max(self.m.abs()).max(self.energy.abs())
    }

    /// `u = m / rho`, `theta = (2E - rho u²) / rho`.
    pub fn to_primitives(&self) -> Result<Primitives> {
        let rho = self.rho;
        if !(rho > RHO_FLOOR) || !self.is_finite() {
            return Err(Error::Inadmissible {
                rho,
                theta: f64::NAN,
            });
        }
        let u = self.m / rho;
        let theta = (2.0 * self.energy - rho * u * u) / rho;
        if !(theta > THETA_FLOOR) {
            return Err(Error::Inadmissible { rho, theta });
        }
        Ok(Primitives { rho, u, theta })
    }
}

impl Add for Moments {
    type Output = Moments;
    fn add(self, o: Moments) -> Moments {
        Moments::new(self.rho + o.rho, self.m + o.m, self.energy + o.energy)
    }
}

impl Sub for Moments {
    type Output = Moments;
    fn sub(self, o: Moments) -> Moments {
        Moments::new(self.rho - o.rho, self.m - o.m, self.energy - o.energy)
    }
}

impl Neg for Moments {
    type Output = Moments;
    fn neg(self) -> Moments {
        Moments::new(-self.rho, -self.m, -self.energy)
    }
}

impl Mul<Moments> for f64 {
    type Output = Moments;
    fn mul(self, q: Moments) -> Moments {
        Moments::new(self * q.rho, self * q.m, self * q.energy)
    }
}

impl AddAssign for Moments {
    fn add_assign(&mut self, o: Moments) {
        *self = *self + o;
    }
}

impl SubAssign for Moments {
    fn sub_assign(&mut self, o: Moments) {
        *self = *self - o;
    }
}

impl Primitives {
    pub fn new(rho: f64, u: f64, theta: f64) -> Self {
        Primitives { rho, u, theta }
    }

    /// From density, velocity and pressure.
    pub fn from_pressure(rho: f64, u: f64, p: f64) -> Self {
        Primitives::new(rho, u, p / rho)
    }

    pub fn pressure(&self) -> f64 {
        self.rho * self.theta
    }

    pub fn sound_speed(&self) -> f64 {
        (3.0 * self.theta.max(0.0)).sqrt()
    }

    pub fn to_moments(&self) -> Moments {
        let m = self.rho * self.u;
        Moments::new(self.rho, m, 0.5 * self.rho * (self.u * self.u + self.theta))
    }

    /// `rho / sqrt(2 pi theta) * exp(-(v - u)² / (2 theta))`.
    pub fn maxwellian(&self, v: f64) -> f64 {
        let d = v - self.u;
        self.rho / (2.0 * PI * self.theta).sqrt() * (-d * d / (2.0 * self.theta)).exp()
    }
}

/// Maxwellian with the moments `q`, evaluated at `v`.
pub fn maxwellian_at(q: &Moments, v: f64) -> Result<f64> {
    Ok(q.to_primitives()?.maxwellian(v))
}

/// Gauss-Legendre velocities on `[-v_max, v_max]` with the moment matrix
/// `E = [w_k e_k]`.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    pub v_max: f64,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    gram_inverse: Option<Matrix3<f64>>,
}

impl VelocityGrid {
    pub fn new(n_points: usize, v_max: f64) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::Config("velocity grid needs at least one point".into()));
        }
        if !(v_max > 0.0 && v_max.is_finite()) {
            return Err(Error::Config(format!("v_max must be positive, got {v_max}")));
        }
        let (x, w) = gauss_legendre(n_points);
        let points: Vec<f64> = x.iter().map(|x| x * v_max).collect();
        let weights: Vec<f64> = w.iter().map(|w| w * v_max).collect();

        let mut gram = Matrix3::zeros();
        for (&v, &w) in points.iter().zip(&weights) {
            let c = w * invariants(v);
            gram += c * c.transpose();
        }
        let gram_inverse = if n_points >= 3 { gram.try_inverse() } else { None };
        Ok(VelocityGrid {
            v_max,
            points,
            weights,
            gram_inverse,
        })
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// Column `k` of `E`.
    pub fn column(&self, k: usize) -> Vector3<f64> {
        self.weights[k] * invariants(self.points[k])
    }

    /// `q = E f`.
    pub fn moments(&self, f: &[f64]) -> Moments {
        debug_assert_eq!(f.len(), self.n_points());
        let mut q = Vector3::zeros();
        for k in 0..f.len() {
            q += f[k] * self.column(k);
        }
        Moments::from_vector(&q)
    }

    /// `ℰ(q)(v_k)` for every velocity; vacuum gives zeros.
    pub fn discrete_maxwellian(&self, q: &Moments) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_points()];
        self.fill_maxwellian(q, &mut out)?;
        Ok(out)
    }

    pub fn fill_maxwellian(&self, q: &Moments, out: &mut [f64]) -> Result<()> {
        if q.is_vacuum() {
            out.iter_mut().for_each(|x| *x = 0.0);
            return Ok(());
        }
        let p = q.to_primitives()?;
        for (o, &v) in out.iter_mut().zip(&self.points) {
            *o = p.maxwellian(v);
        }
        Ok(())
    }

    /// Minimal-norm correction `f + Eᵀ(EEᵀ)⁻¹(q - E f)`.
    pub fn conservation_fix(&self, f: &mut [f64], target: &Moments) -> Result<()> {
        let gram_inverse = self
            .gram_inverse
            .as_ref()
            .ok_or(Error::RankDeficient(self.n_points()))?;
        let residual = target.to_vector() - self.moments(f).to_vector();
        let lambda = gram_inverse * residual;
        for (k, fk) in f.iter_mut().enumerate() {
            *fk += self.column(k).dot(&lambda);
        }
        Ok(())
    }

    /// `Σ_{k: sign·v_k > 0} w_k v_k e_k ℰ(q)(v_k)`: flux carried by the
    /// Maxwellian of `q` through a boundary with outward normal `sign`.
    pub fn half_range_flux(&self, q: &Moments, sign: f64) -> Result<Moments> {
        if q.is_vacuum() {
            return Ok(Moments::ZERO);
        }
        let p = q.to_primitives()?;
        let mut flux = Vector3::zeros();
        for (k, &v) in self.points.iter().enumerate() {
            if sign * v > 0.0 {
                flux += v * p.maxwellian(v) * self.column(k);
            }
        }
        Ok(Moments::from_vector(&flux))
    }
}

/// Collision invariants `(1, v, v²/2)`.
pub fn invariants(v: f64) -> Vector3<f64> {
    Vector3::new(1.0, v, 0.5 * v * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn two_point_grid() {
        let g = VelocityGrid::new(2, 1.0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_relative_eq!(g.points[0], -s, epsilon = 1e-15);
        assert_relative_eq!(g.points[1], s, epsilon = 1e-15);
        assert_relative_eq!(g.weights[0], 1.0, epsilon = 1e-15);
        let q = g.moments(&[1.0, 1.0]);
        assert_relative_eq!(q.rho, 2.0, epsilon = 1e-15);
        assert!(q.m.abs() < 1e-15);
        assert_relative_eq!(q.energy, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn weight_sums_and_symmetry() {
        for (n, vmax) in [(100, 6.0), (1000, 110.0), (7, 2.5)] {
            let g = VelocityGrid::new(n, vmax).unwrap();
            let sum: f64 = g.weights.iter().sum();
            assert_relative_eq!(sum, 2.0 * vmax, max_relative = 1e-12);
            for k in 0..n {
                assert_eq!(g.points[k], -g.points[n - 1 - k]);
                assert_eq!(g.weights[k], g.weights[n - 1 - k]);
            }
            let q = g.moments(&vec![1.0; n]);
            assert_relative_eq!(q.energy, vmax.powi(3) / 3.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn three_point_rule_is_exact_through_degree_five() {
        let g = VelocityGrid::new(3, 2.0).unwrap();
        for p in 0..=5 {
            let got: f64 = g.points.iter().zip(&g.weights).map(|(v, w)| w * v.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 * 2f64.powi(p + 1) / (p as f64 + 1.0) };
            assert!((got - exact).abs() < 1e-12, "degree {p}");
        }
    }

    #[test]
    fn primitive_conversions() {
        let p = Moments::new(1.0, 0.0, 0.5).to_primitives().unwrap();
        assert_eq!((p.rho, p.u, p.theta), (1.0, 0.0, 1.0));
        let p = Moments::new(1.0, 1.0, 1.0).to_primitives().unwrap();
        assert_relative_eq!(p.theta, 1.0);
        let lax = Primitives::from_pressure(0.445, 0.698, 3.528);
        let back = lax.to_moments().to_primitives().unwrap();
        assert_relative_eq!(back.rho, lax.rho, max_relative = 1e-14);
        assert_relative_eq!(back.u, lax.u, max_relative = 1e-14);
        assert_relative_eq!(back.theta, lax.theta, max_relative = 1e-14);
        assert_relative_eq!(lax.to_moments().m, 0.31061, max_relative = 1e-14);
    }

    #[test]
    fn inadmissible_states_are_rejected() {
        assert!(Moments::new(0.0, 0.0, 0.0).to_primitives().is_err());
        assert!(Moments::new(-1.0, 0.0, 1.0).to_primitives().is_err());
        assert!(Moments::new(1.0, 1.0, 0.5).to_primitives().is_err());
        assert!(Moments::new(f64::NAN, 0.0, 1.0).to_primitives().is_err());
        assert!(maxwellian_at(&Moments::new(1.0, 2.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn maxwellian_values() {
        let q = Moments::new(1.0, 0.0, 0.5);
        assert_relative_eq!(maxwellian_at(&q, 0.0).unwrap(), 0.3989422804014327, max_relative = 1e-14);
        assert_relative_eq!(maxwellian_at(&q, 1.0).unwrap(), 0.24197072451914337, max_relative = 1e-14);
    }

    #[test]
    fn vacuum_reconstructs_to_zero() {
        let g = VelocityGrid::new(10, 5.0).unwrap();
        assert!(g.discrete_maxwellian(&Moments::ZERO).unwrap().iter().all(|&x| x == 0.0));
        assert_eq!(g.moments(&vec![0.0; 10]), Moments::ZERO);
        assert_eq!(g.half_range_flux(&Moments::ZERO, 1.0).unwrap(), Moments::ZERO);
    }

    #[test]
    fn conservation_fix_needs_three_velocities() {
        let g = VelocityGrid::new(2, 1.0).unwrap();
        let mut f = vec![1.0, 1.0];
        assert!(matches!(
            g.conservation_fix(&mut f, &Moments::new(1.0, 0.0, 1.0)),
            Err(Error::RankDeficient(2))
        ));
    }

    #[test]
    fn conservation_fix_matches_dense_least_squares() {
        let g = VelocityGrid::new(12, 4.0).unwrap();
        let f: Vec<f64> = (0..12).map(|k| 0.3 + 0.1 * (k as f64).sin()).collect();
        let target = Moments::new(1.1, 0.2, 1.7);
        let mut fixed = f.clone();
        g.conservation_fix(&mut fixed, &target).unwrap();

        // KKT system [I Eᵀ; E 0] [x; λ] = [f; q]
        let n = 12;
        let mut kkt = DMatrix::zeros(n + 3, n + 3);
        let mut rhs = nalgebra::DVector::zeros(n + 3);
        for k in 0..n {
            kkt[(k, k)] = 1.0;
            let c = g.column(k);
            for r in 0..3 {
                kkt[(k, n + r)] = c[r];
                kkt[(n + r, k)] = c[r];
            }
            rhs[k] = f[k];
        }
        rhs[n] = target.rho;
        rhs[n + 1] = target.m;
        rhs[n + 2] = target.energy;
        let sol = kkt.lu().solve(&rhs).unwrap();
        for k in 0..n {
            assert!((sol[k] - fixed[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_maxwellian_is_restored() {
        let g = VelocityGrid::new(100, 6.0).unwrap();
        let q = Moments::new(1.0, 0.0, 0.5);
        let m = g.discrete_maxwellian(&q).unwrap();
        let exact = g.moments(&m);
        let mut f = m.clone();
        f[37] += 1e-3;
        g.conservation_fix(&mut f, &exact).unwrap();
        let fixed = g.moments(&f);
        assert_relative_eq!(fixed.rho, exact.rho, max_relative = 1e-12);
        assert!((fixed.m - exact.m).abs() < 1e-12);
        assert_relative_eq!(fixed.energy, exact.energy, max_relative = 1e-12);
        let dist: f64 = f.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(dist <= 1e-3);
    }

    #[test]
    fn half_range_fluxes_sum_to_full_flux() {
        let g = VelocityGrid::new(100, 8.0).unwrap();
        let q = Primitives::new(0.7, 0.4, 1.2).to_moments();
        let plus = g.half_range_flux(&q, 1.0).unwrap();
        let minus = g.half_range_flux(&q, -1.0).unwrap();
        let m = g.discrete_maxwellian(&q).unwrap();
        let vm: Vec<f64> = m.iter().zip(&g.points).map(|(f, v)| f * v).collect();
        let full = g.moments(&vm);
        assert!((plus + minus - full).max_abs() < 1e-14);
        assert!(plus.rho > 0.0 && minus.rho < 0.0);
    }

    fn admissible() -> impl Strategy<Value = Primitives> {
        (0.05f64..5.0, -2.0f64..2.0, 0.05f64..3.0).prop_map(|(r, u, t)| Primitives::new(r, u, t))
    }

    proptest! {
        #[test]
        fn moment_round_trip(p in admissible()) {
            let back = p.to_moments().to_primitives().unwrap();
            prop_assert!((back.rho - p.rho).abs() <= 1e-14 * p.rho);
            prop_assert!((back.u - p.u).abs() <= 1e-13 * (1.0 + p.u.abs()));
            prop_assert!((back.theta - p.theta).abs() <= 1e-13 * p.theta.max(1.0));
        }

        #[test]
        fn maxwellian_is_even_about_bulk_velocity(p in admissible(), d in 0.0f64..4.0) {
            let a = p.maxwellian(p.u + d);
            let b = p.maxwellian(p.u - d);
            // rounding in u ± d is amplified by d/θ in the exponent
            prop_assert!((a - b).abs() <= 1e-11 * a.max(1e-300));
        }

        #[test]
        fn discrete_maxwellian_reproduces_moments(p in admissible()) {
            // seven standard deviations between the bulk velocity and the cutoff
            let v_max = p.u.abs() + 7.0 * p.theta.sqrt();
            let g = VelocityGrid::new(100, v_max).unwrap();
            let q = p.to_moments();
            let got = g.moments(&g.discrete_maxwellian(&q).unwrap());
            let scale = q.max_abs();
            prop_assert!((got - q).max_abs() < 1e-8 * scale);
        }

        #[test]
        fn conservation_fix_is_an_idempotent_projection(
            f in proptest::collection::vec(-1.0f64..1.0, 20),
            p in admissible(),
        ) {
            let g = VelocityGrid::new(20, 5.0).unwrap();
            let q = p.to_moments();
            let mut once = f.clone();
            g.conservation_fix(&mut once, &q).unwrap();
            let got = g.moments(&once);
            prop_assert!((got - q).max_abs() <= 1e-12 * q.max_abs().max(1.0));
            let mut twice = once.clone();
            g.conservation_fix(&mut twice, &q).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-13);
            }
            // unchanged when already on target
            let own = g.moments(&f);
            let mut same = f.clone();
            g.conservation_fix(&mut same, &own).unwrap();
            for (a, b) in f.iter().zip(&same) {
                prop_assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
