//! Uniform one-dimensional cell meshes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partition of `[x_left, x_right]` into cells `S_i = (edges[i], edges[i + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialMesh {
    pub x_left: f64,
    pub x_right: f64,
    pub edges: Vec<f64>,
    pub widths: Vec<f64>,
    pub centers: Vec<f64>,
}

impl SpatialMesh {
    /// Uniform mesh of `n_cells` cells.
    pub fn uniform(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite()) || x_left >= x_right {
            return Err(Error::Config(format!(
                "degenerate domain [{x_left}, {x_right}]"
            )));
        }
        if n_cells == 0 {
            return Err(Error::Config("mesh needs at least one cell".into()));
        }
        let h = (x_right - x_left) / n_cells as f64;
        let mut edges: Vec<f64> = (0..=n_cells).map(|i| x_left + h * i as f64).collect();
        edges[n_cells] = x_right;
        let widths = vec![h; n_cells];
        let centers = (0..n_cells).map(|i| x_left + h * (i as f64 + 0.5)).collect();
        Ok(SpatialMesh {
            x_left,
            x_right,
            edges,
            widths,
            centers,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn h_min(&self) -> f64 {
        self.widths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.widths.iter().copied().fold(0.0, f64::max)
    }

    /// Physical position of reference coordinate `xi` in cell `i`.
    pub fn to_physical(&self, cell: usize, xi: f64) -> f64 {
        self.centers[cell] + 0.5 * self.widths[cell] * xi
    }

    /// Cell containing `x` and the reference coordinate of `x` in it.
    ///
    /// Interior edges belong to the cell on their left.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let tol = 1e-14 * self.length().max(1.0);
        if !(x >= self.x_left - tol && x <= self.x_right + tol) {
            return Err(Error::OutsideDomain {
                x,
                left: self.x_left,
                right: self.x_right,
            });
        }
        // first edge index with edges[j] >= x
        let j = self.edges.partition_point(|&e| e < x);
        let cell = j.saturating_sub(1).min(self.n_cells() - 1);
        let xi = (2.0 * (x - self.centers[cell]) / self.widths[cell]).clamp(-1.0, 1.0);
        Ok((cell, xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_hundred_cells() {
        let mesh = SpatialMesh::uniform(0.0, 1.0, 100).unwrap();
        assert_eq!(mesh.edges.len(), 101);
        assert!(mesh.widths.iter().all(|&h| (h - 0.01).abs() < 1e-16));
        assert_eq!(mesh.edges[100], 1.0);
    }

    #[test]
    fn single_cell() {
        let mesh = SpatialMesh::uniform(-1.0, 1.0, 1).unwrap();
        assert_eq!(mesh.edges, vec![-1.0, 1.0]);
        assert_eq!(mesh.centers, vec![0.0]);
    }

    #[test]
    fn shu_osher_mesh_centers() {
        let mesh = SpatialMesh::uniform(-10.0, 10.0, 200).unwrap();
        for (i, c) in mesh.centers.iter().enumerate() {
            assert!((c - (-9.95 + 0.1 * i as f64)).abs() < 1e-12);
        }
        assert!((mesh.h_min() - 0.1).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_domains() {
        assert!(matches!(SpatialMesh::uniform(1.0, 1.0, 4), Err(Error::Config(_))));
        assert!(matches!(SpatialMesh::uniform(2.0, 1.0, 4), Err(Error::Config(_))));
        assert!(matches!(SpatialMesh::uniform(0.0, 1.0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn locate_uses_left_cell_at_interior_edges() {
        let mesh = SpatialMesh::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(mesh.locate(0.25).unwrap(), (0, 1.0));
        assert_eq!(mesh.locate(0.0).unwrap(), (0, -1.0));
        assert_eq!(mesh.locate(1.0).unwrap(), (3, 1.0));
        let (cell, xi) = mesh.locate(0.3).unwrap();
        assert_eq!(cell, 1);
        assert!((xi - (-0.6)).abs() < 1e-12);
        assert!(matches!(mesh.locate(1.5), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn widths_partition_the_domain() {
        for n in [1, 3, 7, 64, 513] {
            let mesh = SpatialMesh::uniform(-std::f64::consts::PI, std::f64::consts::PI, n).unwrap();
            let total: f64 = mesh.widths.iter().sum();
            assert!((total - mesh.length()).abs() <= 1e-13 * mesh.length());
            assert!(mesh.edges.windows(2).all(|e| e[0] < e[1]));
        }
    }
}
