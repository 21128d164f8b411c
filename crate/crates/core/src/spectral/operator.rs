use nalgebra::DMatrix;

use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::geometry::apply_matrix;

use super::grid::AngleGrid;

/// Discretized transfer operator on the grid nodes, stored row-compressed
/// (each row has at most two entries per atom).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    size: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl OperatorMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[j]..self.row_ptr[j + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.row(j).filter(|&(c, _)| c == k).map(|(_, v)| v).sum()
    }

    pub fn row_sum(&self, j: usize) -> f64 {
        self.row(j).map(|(_, v)| v).sum()
    }

    /// `(P φ)_j = Σ_k P_jk φ_k`.
    pub fn apply(&self, phi: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.row(j).map(|(k, v)| v * phi[k]).sum();
        }
    }

    /// `(μ P)_k = Σ_j μ_j P_jk`.
    pub fn apply_transpose(&self, mu: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &m) in mu.iter().enumerate() {
            if m != 0.0 {
                for (k, v) in self.row(j) {
                    out[k] += m * v;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.size, self.size);
        for j in 0..self.size {
            for (k, v) in self.row(j) {
                d[(j, k)] += v;
            }
        }
        d
    }
}

/// Assembles `P_s φ(x_j) = Σᵢ pᵢ |gᵢ x_j|^s φ(gᵢ·x_j)` with `φ` linearly
/// interpolated between nodes.
pub fn assemble(ens: &Ensemble, s: f64, grid: &AngleGrid) -> Result<OperatorMatrix> {
    if ens.dim() != 2 {
        return Err(Error::UnsupportedDimension(ens.dim()));
    }
    if grid.space() != ens.space() || grid.norm != ens.norm() {
        return Err(Error::invalid("grid space or norm does not match the ensemble"));
    }
    let size = grid.len();
    let mut row_ptr = Vec::with_capacity(size + 1);
    let mut cols = Vec::with_capacity(size * 2 * ens.atoms().len());
    let mut vals = Vec::with_capacity(cols.capacity());
    row_ptr.push(0);
    let mut y = [0.0; 2];
    for j in 0..size {
        let x = grid.point(j);
        let start = cols.len();
        for atom in ens.atoms() {
            let len = apply_matrix(&atom.matrix, &x, &mut y, ens.norm());
            let w = atom.prob * (s * len.ln()).exp();
            let (k0, k1, f) = grid.stencil_of(&y);
            push_merged(&mut cols, &mut vals, start, k0, w * (1.0 - f));
            push_merged(&mut cols, &mut vals, start, k1, w * f);
        }
        row_ptr.push(cols.len());
    }
    Ok(OperatorMatrix { size, row_ptr, cols, vals })
}

fn push_merged(cols: &mut Vec<usize>, vals: &mut Vec<f64>, start: usize, k: usize, v: f64) {
    if v == 0.0 {
        return;
    }
    if let Some(pos) = cols[start..].iter().position(|&c| c == k) {
        vals[start + pos] += v;
    } else {
        cols.push(k);
        vals.push(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::presets::*;
    use crate::spectral::grid::GridKind;
    use crate::NormKind;

    fn line(m: usize) -> AngleGrid {
        AngleGrid::new(GridKind::ProjectiveLine, m, NormKind::Euclidean).unwrap()
    }

    #[test]
    fn conformal_rows_are_scalar() {
        let ens = conformal(&[(2.0, 0.5), (3.0, 0.5)]);
        for s in [-0.2, 0.0, 0.13] {
            let p = assemble(&ens, s, &line(128)).unwrap();
            let expect = (2f64.powf(s) + 3f64.powf(s)) / 2.0;
            for j in 0..p.size() {
                assert!((p.row_sum(j) - expect).abs() < 1e-14);
                assert!((p.get(j, j) - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn stochastic_at_zero() {
        for ens in [positive_pair(), unipotent_pair()] {
            let grid = AngleGrid::for_space(ens.space(), 200, ens.norm()).unwrap();
            let p = assemble(&ens, 0.0, &grid).unwrap();
            for j in 0..p.size() {
                assert!((p.row_sum(j) - 1.0).abs() < 1e-14);
                assert!(p.row(j).all(|(_, v)| v >= 0.0));
            }
        }
    }

    #[test]
    fn positive_pair_node_value_matches_direct_sum() {
        let ens = positive_pair();
        let grid = AngleGrid::new(GridKind::QuadrantArc, 512, NormKind::Euclidean).unwrap();
        let p = assemble(&ens, 1.0, &grid).unwrap();
        let j = 256;
        let ones = vec![1.0; grid.len()];
        let mut out = vec![0.0; grid.len()];
        p.apply(&ones, &mut out);
        // x = (1,1)/√2: |Ax| = |(3,2)|/√2, |Bx| = |(2,3)|/√2
        let direct = 0.5 * ((13.0f64 / 2.0).sqrt() + (13.0f64 / 2.0).sqrt());
        assert!((out[j] - direct).abs() < 1e-12);
    }

    #[test]
    fn transpose_and_dense_agree() {
        let ens = unipotent_pair();
        let p = assemble(&ens, 0.1, &line(64)).unwrap();
        let dense = p.to_dense();
        let mu: Vec<f64> = (0..64).map(|j| (j as f64 * 0.3).cos().abs()).collect();
        let mut out = vec![0.0; 64];
        p.apply_transpose(&mu, &mut out);
        for k in 0..64 {
            let direct: f64 = (0..64).map(|j| mu[j] * dense[(j, k)]).sum();
            assert!((out[k] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_higher_dimension() {
        let ens = crate::Ensemble::build(
            vec![(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 1.0)],
            crate::ClassTag::Invertible,
            NormKind::Euclidean,
        )
        .unwrap();
        assert!(matches!(assemble(&ens, 0.0, &line(64)), Err(Error::UnsupportedDimension(3))));
    }
}
