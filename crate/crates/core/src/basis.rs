//! Nodal Gauss-Lobatto Lagrange basis on the reference cell [-1, 1] and the
//! element matrices shared by the kinetic and fluid discretizations.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::mesh::SpatialMesh;
use crate::quadrature::{gauss_legendre, gauss_lobatto};

/// Degree-`N` Lagrange basis interpolating at the `N + 1` Gauss-Lobatto points.
#[derive(Debug, Clone, PartialEq)]
pub struct DGBasis {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub node_weights: Vec<f64>,
}

impl DGBasis {
    /// Degree 0 uses the single node `xi = 0`.
    pub fn new(degree: usize) -> Self {
        let (nodes, node_weights) = gauss_lobatto(degree + 1);
        DGBasis {
            degree,
            nodes,
            node_weights,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Value of the `l`-th cardinal polynomial at `xi`.
    pub fn eval(&self, l: usize, xi: f64) -> f64 {
        let xl = self.nodes[l];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != l)
            .map(|(_, &xm)| (xi - xm) / (xl - xm))
            .product()
    }

    /// Derivative of the `l`-th cardinal polynomial at `xi`.
    pub fn eval_derivative(&self, l: usize, xi: f64) -> f64 {
        let xl = self.nodes[l];
        let mut total = 0.0;
        for (j, &xj) in self.nodes.iter().enumerate() {
            if j == l {
                continue;
            }
            let mut term = 1.0 / (xl - xj);
            for (m, &xm) in self.nodes.iter().enumerate() {
                if m != l && m != j {
                    term *= (xi - xm) / (xl - xm);
                }
            }
            total += term;
        }
        total
    }

    /// All basis values at `xi`.
    pub fn values_at(&self, xi: f64) -> Vec<f64> {
        (0..self.n_nodes()).map(|l| self.eval(l, xi)).collect()
    }

    /// Evaluates the polynomial with nodal values `coeffs` at `xi`.
    pub fn interpolate(&self, coeffs: &[f64], xi: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| c * self.eval(l, xi))
            .sum()
    }
}

/// Reference-cell matrices.
///
/// `stiffness[(l, m)] = ∫ p_l'(ξ) p_m(ξ) dξ`, the orientation for which the
/// weak upwind operator reads `L1 f_i - L2 f_{i-1} - K f_i` and
/// `K + Kᵀ = L1 - L4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    /// `J[(l, m)] = ∫ p_l p_m dξ`.
    pub mass: DMatrix<f64>,
    pub mass_inverse: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// `p_l(1) p_m(1)`: right trace of the own cell.
    pub l1: DMatrix<f64>,
    /// `p_l(-1) p_m(1)`: right trace of the left neighbour.
    pub l2: DMatrix<f64>,
    /// `p_l(1) p_m(-1)`: left trace of the right neighbour.
    pub l3: DMatrix<f64>,
    /// `p_l(-1) p_m(-1)`: left trace of the own cell.
    pub l4: DMatrix<f64>,
}

impl ElementMatrices {
    pub fn new(basis: &DGBasis) -> Self {
        let n = basis.n_nodes();
        // N + 2 Gauss points integrate degree 2N + 3 exactly.
        let (qx, qw) = gauss_legendre(basis.degree + 2);
        let values: Vec<Vec<f64>> = qx.iter().map(|&x| basis.values_at(x)).collect();
        let derivs: Vec<Vec<f64>> = qx
            .iter()
            .map(|&x| (0..n).map(|l| basis.eval_derivative(l, x)).collect())
            .collect();

        let mut mass = DMatrix::zeros(n, n);
        let mut stiffness = DMatrix::zeros(n, n);
        for q in 0..qx.len() {
            for l in 0..n {
                for m in 0..n {
                    mass[(l, m)] += qw[q] * values[q][l] * values[q][m];
                    stiffness[(l, m)] += qw[q] * derivs[q][l] * values[q][m];
                }
            }
        }
        let mass_inverse = mass
            .clone()
            .try_inverse()
            .expect("Gauss-Lobatto mass matrix is SPD");

        let (first, last) = (0, n - 1);
        let unit = |r: usize, c: usize| {
            let mut m = DMatrix::zeros(n, n);
            m[(r, c)] = 1.0;
            m
        };
        // With a single node both traces sit on the same coefficient.
        ElementMatrices {
            mass,
            mass_inverse,
            stiffness,
            l1: unit(last, last),
            l2: unit(first, last),
            l3: unit(last, first),
            l4: unit(first, first),
        }
    }
}

/// Evaluates a broken polynomial field stored as `coeffs[cell * (N + 1) + l]`.
pub fn evaluate_field(coeffs: &[f64], x: f64, mesh: &SpatialMesh, basis: &DGBasis) -> Result<f64> {
    let (cell, xi) = mesh.locate(x)?;
    let np = basis.n_nodes();
    Ok(basis.interpolate(&coeffs[cell * np..(cell + 1) * np], xi))
}

/// Nodal interpolant of `f`, laid out as in [`evaluate_field`].
pub fn interpolate_nodal(f: impl Fn(f64) -> f64, mesh: &SpatialMesh, basis: &DGBasis) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.n_cells() * basis.n_nodes());
    for cell in 0..mesh.n_cells() {
        for &xi in &basis.nodes {
            out.push(f(mesh.to_physical(cell, xi)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn linear_basis_matrices() {
        let m = ElementMatrices::new(&DGBasis::new(1));
        let j = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        let k = DMatrix::from_row_slice(2, 2, &[-0.5, -0.5, 0.5, 0.5]);
        assert!((m.mass - j).abs().max() < 1e-15);
        assert!((m.stiffness - k).abs().max() < 1e-15);
    }

    #[test]
    fn piecewise_constant_basis() {
        let basis = DGBasis::new(0);
        assert_eq!(basis.nodes, vec![0.0]);
        let m = ElementMatrices::new(&basis);
        assert_relative_eq!(m.mass[(0, 0)], 2.0, epsilon = 1e-15);
        assert_eq!(m.stiffness[(0, 0)], 0.0);
    }

    #[test]
    fn trace_matrices_have_single_unit_entry() {
        for degree in 1..=5 {
            let m = ElementMatrices::new(&DGBasis::new(degree));
            let last = degree;
            for (mat, (r, c)) in [(&m.l1, (last, last)), (&m.l2, (0, last)), (&m.l3, (last, 0)), (&m.l4, (0, 0))] {
                assert_eq!(mat.sum(), 1.0);
                assert_eq!(mat[(r, c)], 1.0);
            }
        }
    }

    #[test]
    fn integration_by_parts_identity() {
        for degree in 0..=6 {
            let m = ElementMatrices::new(&DGBasis::new(degree));
            let lhs = &m.stiffness + m.stiffness.transpose();
            let rhs = &m.l1 - &m.l4;
            // degree 0: both traces coincide, L1 - L4 = 0 = 2K
            assert!((lhs - rhs).abs().max() < 1e-12, "degree {degree}");
        }
    }

    #[test]
    fn mass_matrix_symmetric_positive_definite_and_solvable() {
        for degree in 0..=8 {
            let m = ElementMatrices::new(&DGBasis::new(degree));
            assert!((&m.mass - m.mass.transpose()).abs().max() < 1e-15);
            assert!(m.mass.clone().cholesky().is_some());
            let b = DMatrix::from_fn(degree + 1, 1, |i, _| (i as f64 + 1.0).sin());
            let y = &m.mass_inverse * &b;
            assert!((&m.mass * y - b).abs().max() < 1e-12);
        }
    }

    #[test]
    fn mass_matrix_matches_monomial_integrals() {
        // J applied to nodal values of xi^a, xi^b: ∫ xi^(a+b) exactly.
        for degree in 1..=6 {
            let basis = DGBasis::new(degree);
            let m = ElementMatrices::new(&basis);
            for a in 0..=degree {
                for b in 0..=degree {
                    let fa = DMatrix::from_iterator(degree + 1, 1, basis.nodes.iter().map(|x| x.powi(a as i32)));
                    let fb = DMatrix::from_iterator(degree + 1, 1, basis.nodes.iter().map(|x| x.powi(b as i32)));
                    let got = (fa.transpose() * &m.mass * fb)[(0, 0)];
                    let p = a + b;
                    let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                    assert!((got - exact).abs() < 1e-13, "degree {degree} a {a} b {b}");
                }
            }
        }
    }

    #[test]
    fn cardinality_and_weights() {
        for degree in 0..=8 {
            let basis = DGBasis::new(degree);
            for (l, _) in basis.nodes.iter().enumerate() {
                for (m, &xm) in basis.nodes.iter().enumerate() {
                    let expect = if l == m { 1.0 } else { 0.0 };
                    assert!((basis.eval(l, xm) - expect).abs() < 1e-13);
                }
            }
            assert!((basis.node_weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(basis.nodes.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn constant_and_linear_reproduction() {
        let mesh = SpatialMesh::uniform(-2.0, 3.0, 7).unwrap();
        for degree in 1..=4 {
            let basis = DGBasis::new(degree);
            let c = interpolate_nodal(|_| 2.5, &mesh, &basis);
            let lin = interpolate_nodal(|x| x, &mesh, &basis);
            for x in [-2.0, -1.3, 0.0, 0.5, 2.99, 3.0] {
                assert_relative_eq!(evaluate_field(&c, x, &mesh, &basis).unwrap(), 2.5, epsilon = 1e-14);
                assert_relative_eq!(evaluate_field(&lin, x, &mesh, &basis).unwrap(), x, epsilon = 1e-13);
            }
        }
        let basis = DGBasis::new(2);
        let c = interpolate_nodal(|_| 1.0, &mesh, &basis);
        assert!(evaluate_field(&c, 3.5, &mesh, &basis).is_err());
    }

    #[test]
    fn interior_edges_take_left_trace() {
        let mesh = SpatialMesh::uniform(0.0, 1.0, 2).unwrap();
        let basis = DGBasis::new(1);
        let coeffs = vec![0.0, 1.0, 5.0, 6.0];
        assert_eq!(evaluate_field(&coeffs, 0.5, &mesh, &basis).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn recovers_random_polynomials(coeffs in proptest::collection::vec(-1.0f64..1.0, 1..6), x in -1.0f64..4.0) {
            let degree = coeffs.len() - 1;
            let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
            let mesh = SpatialMesh::uniform(-1.0, 4.0, 5).unwrap();
            let basis = DGBasis::new(degree.max(1));
            let nodal = interpolate_nodal(poly, &mesh, &basis);
            let got = evaluate_field(&nodal, x, &mesh, &basis).unwrap();
            prop_assert!((got - poly(x)).abs() < 1e-12);
        }
    }
}
