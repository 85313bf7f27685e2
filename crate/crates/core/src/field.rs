//! Nodal DG fields: the kinetic distribution at every discrete velocity and
//! the moment field of the fluid variables.

use rayon::prelude::*;

use crate::basis::{DGBasis, ElementMatrices};
use crate::error::Result;
use crate::mesh::SpatialMesh;
use crate::velocity::{Moments, VelocityGrid};

/// Everything needed to discretize in space and velocity; immutable.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: SpatialMesh,
    pub basis: DGBasis,
    pub matrices: ElementMatrices,
    pub grid: VelocityGrid,
}

impl Discretization {
    pub fn new(mesh: SpatialMesh, degree: usize, grid: VelocityGrid) -> Self {
        let basis = DGBasis::new(degree);
        let matrices = ElementMatrices::new(&basis);
        Discretization {
            mesh,
            basis,
            matrices,
            grid,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    pub fn n_nodes(&self) -> usize {
        self.basis.n_nodes()
    }

    /// Spatial degrees of freedom per velocity.
    pub fn n_dofs(&self) -> usize {
        self.n_cells() * self.n_nodes()
    }

    pub fn n_velocities(&self) -> usize {
        self.grid.n_points()
    }

    /// Physical coordinates of all nodes, cell-major.
    pub fn node_positions(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_dofs());
        for i in 0..self.n_cells() {
            for &xi in &self.basis.nodes {
                x.push(self.mesh.to_physical(i, xi));
            }
        }
        x
    }
}

/// Nodal values `f[k][i][l]`, stored velocity-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    pub n_velocities: usize,
    pub n_cells: usize,
    pub n_nodes: usize,
    pub values: Vec<f64>,
}

impl KineticField {
    pub fn zeros(n_velocities: usize, n_cells: usize, n_nodes: usize) -> Self {
        KineticField {
            n_velocities,
            n_cells,
            n_nodes,
            values: vec![0.0; n_velocities * n_cells * n_nodes],
        }
    }

    pub fn zeros_like(disc: &Discretization) -> Self {
        Self::zeros(disc.n_velocities(), disc.n_cells(), disc.n_nodes())
    }

    /// `f(x, v_k)` sampled at the nodes.
    pub fn from_fn(disc: &Discretization, f: impl Fn(f64, f64) -> f64) -> Self {
        let x = disc.node_positions();
        let mut out = Self::zeros_like(disc);
        for (k, &v) in disc.grid.points.iter().enumerate() {
            for (o, &xj) in out.velocity_mut(k).iter_mut().zip(&x) {
                *o = f(xj, v);
            }
        }
        out
    }

    /// Nodal Maxwellian of a moment field; vacuum nodes give zero.
    pub fn maxwellian(q: &MomentField, grid: &VelocityGrid) -> Result<Self> {
        let n_dofs = q.values.len();
        let mut out = Self::zeros(grid.n_points(), q.n_cells, q.n_nodes);
        let mut column = vec![0.0; grid.n_points()];
        for (j, qj) in q.values.iter().enumerate() {
            grid.fill_maxwellian(qj, &mut column)?;
            for (k, c) in column.iter().enumerate() {
                out.values[k * n_dofs + j] = *c;
            }
        }
        Ok(out)
    }

    pub fn n_dofs(&self) -> usize {
        self.n_cells * self.n_nodes
    }

    pub fn velocity(&self, k: usize) -> &[f64] {
        let n = self.n_dofs();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn velocity_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.n_dofs();
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn cell(&self, k: usize, i: usize) -> &[f64] {
        let np = self.n_nodes;
        &self.velocity(k)[i * np..(i + 1) * np]
    }

    /// All velocities at spatial node `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let n = self.n_dofs();
        (0..self.n_velocities).map(|k| self.values[k * n + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, column: &[f64]) {
        let n = self.n_dofs();
        for (k, c) in column.iter().enumerate() {
            self.values[k * n + j] = *c;
        }
    }

    /// `q = E f` at every node.
    pub fn moments(&self, grid: &VelocityGrid) -> MomentField {
        let n = self.n_dofs();
        let mut acc = vec![[0.0; 3]; n];
        for k in 0..self.n_velocities {
            let c = grid.column(k);
            for (a, f) in acc.iter_mut().zip(self.velocity(k)) {
                a[0] += c[0] * f;
                a[1] += c[1] * f;
                a[2] += c[2] * f;
            }
        }
        MomentField {
            n_cells: self.n_cells,
            n_nodes: self.n_nodes,
            values: acc.into_iter().map(Moments::from_array).collect(),
        }
    }

    /// Conservation fix at every node so that `E f = target`.
    pub fn fix_moments(&mut self, target: &MomentField, grid: &VelocityGrid) -> Result<()> {
        let n = self.n_dofs();
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut col = self.column(j);
                grid.conservation_fix(&mut col, &target.values[j])?;
                Ok(col)
            })
            .collect::<Result<_>>()?;
        for (j, col) in columns.iter().enumerate() {
            self.set_column(j, col);
        }
        Ok(())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &KineticField) {
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &KineticField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Nodal moments, `values[i * (N + 1) + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentField {
    pub n_cells: usize,
    pub n_nodes: usize,
    pub values: Vec<Moments>,
}

impl MomentField {
    pub fn zeros(n_cells: usize, n_nodes: usize) -> Self {
        MomentField {
            n_cells,
            n_nodes,
            values: vec![Moments::ZERO; n_cells * n_nodes],
        }
    }

    pub fn zeros_like(disc: &Discretization) -> Self {
        Self::zeros(disc.n_cells(), disc.n_nodes())
    }

    pub fn from_fn(disc: &Discretization, f: impl Fn(f64) -> Moments) -> Self {
        MomentField {
            n_cells: disc.n_cells(),
            n_nodes: disc.n_nodes(),
            values: disc.node_positions().into_iter().map(f).collect(),
        }
    }

    pub fn cell(&self, i: usize) -> &[Moments] {
        &self.values[i * self.n_nodes..(i + 1) * self.n_nodes]
    }

    pub fn cell_mut(&mut self, i: usize) -> &mut [Moments] {
        let np = self.n_nodes;
        &mut self.values[i * np..(i + 1) * np]
    }

    /// One conserved component as a scalar DG field (0 = rho, 1 = m, 2 = E).
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|q| q.to_array()[c]).collect()
    }

    /// Domain integral of each component.
    pub fn total(&self, mesh: &SpatialMesh, basis: &DGBasis) -> Moments {
        let mut total = Moments::ZERO;
        for i in 0..self.n_cells {
            let half = 0.5 * mesh.widths[i];
            for (q, w) in self.cell(i).iter().zip(&basis.node_weights) {
                total += (half * w) * *q;
            }
        }
        total
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &MomentField) -> MomentField {
        MomentField {
            n_cells: self.n_cells,
            n_nodes: self.n_nodes,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(s, o)| *s + a * *o)
                .collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> MomentField {
        MomentField {
            n_cells: self.n_cells,
            n_nodes: self.n_nodes,
            values: self.values.iter().map(|q| a * *q).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(Moments::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(Moments::max_abs).fold(0.0, f64::max)
    }
}
