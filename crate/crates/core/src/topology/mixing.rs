use serde::Serialize;

use super::{symmetric_eigen, Graph, SymmetricEigen, TopologyError};

const ROW_SUM_TOL: f64 = 1e-12;
// |lambda_p| for p >= 2 must stay this far below 1 for the geometric series
// behind c0 and c_i to be usable.
const GAP_TOL: f64 = 1e-9;

/// Network constants bounding count-estimation error (`c0`) and per-agent
/// variance inflation (`ci`) of the consensus estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralConstants {
    pub c0: f64,
    pub ci: Vec<f64>,
}

/// Symmetric row-stochastic consensus matrix `P = I - (kappa / d_max) L`
/// with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    m: usize,
    kappa: Option<f64>,
    dense: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    eigen: SymmetricEigen,
}

impl MixingMatrix {
    pub fn new(graph: &Graph, kappa: f64) -> Result<Self, TopologyError> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(TopologyError::InvalidKappa(kappa));
        }
        let m = graph.len();
        let d_max = graph.max_degree();
        let mut dense = vec![0.0; m * m];
        if d_max == 0 {
            // single agent
            dense[0] = 1.0;
        } else {
            let w = kappa / d_max as f64;
            for i in 0..m {
                dense[i * m + i] = 1.0 - w * graph.degree(i) as f64;
                for j in graph.neighbors(i) {
                    dense[i * m + j] = w;
                }
            }
        }
        let mut mm = Self::assemble(m, dense)?;
        mm.kappa = Some(kappa);
        Ok(mm)
    }

    /// Wraps an explicit symmetric row-stochastic matrix (row-major).
    pub fn from_symmetric(m: usize, dense: Vec<f64>) -> Result<Self, TopologyError> {
        if m == 0 || dense.len() != m * m {
            return Err(TopologyError::NotSquare { row: 0, len: dense.len(), m });
        }
        for i in 0..m {
            for j in i + 1..m {
                if (dense[i * m + j] - dense[j * m + i]).abs() > ROW_SUM_TOL {
                    return Err(TopologyError::NotSymmetric(i, j));
                }
            }
        }
        Self::assemble(m, dense)
    }

    fn assemble(m: usize, dense: Vec<f64>) -> Result<Self, TopologyError> {
        for i in 0..m {
            let sum: f64 = dense[i * m..(i + 1) * m].iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(TopologyError::NotStochastic { row: i, sum });
            }
        }
        let rows = (0..m)
            .map(|i| (0..m).filter(|&j| dense[i * m + j] != 0.0).map(|j| (j, dense[i * m + j])).collect())
            .collect();
        let mut eigen = symmetric_eigen(&dense, m)?;
        for u in eigen.vectors.iter_mut() {
            // fix the sign so the component with the largest magnitude is positive
            let pivot = u.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            if pivot < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
            }
        }
        if let Some(u1) = eigen.vectors.first_mut() {
            if u1.iter().sum::<f64>() < 0.0 {
                u1.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(Self { m, kappa: None, dense, rows, eigen })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dense[i * self.m + j]
    }

    pub fn dense(&self) -> &[f64] {
        &self.dense
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.dense.chunks(self.m).map(|r| r.iter().sum()).collect()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Unit eigenvectors matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigen.vectors
    }

    /// `out = P x`, using only the nonzero entries of each row.
    pub fn mix_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.m);
        assert_eq!(out.len(), self.m);
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, w)| w * x[j]).sum();
        }
    }

    pub fn mix(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.mix_into(x, &mut out);
        out
    }

    /// Largest `|P u_j - lambda_j u_j|` entry over all eigenpairs.
    pub fn eigen_residual(&self) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for (lambda, u) in self.eigen.values.iter().zip(&self.eigen.vectors) {
            for i in 0..m {
                let pu: f64 = (0..m).map(|k| self.dense[i * m + k] * u[k]).sum();
                worst = worst.max((pu - lambda * u[i]).abs());
            }
        }
        worst
    }

    /// Largest entry of `|U^T U - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let u = &self.eigen.vectors;
        let mut worst: f64 = 0.0;
        for a in 0..self.m {
            for b in 0..self.m {
                let dot: f64 = u[a].iter().zip(&u[b]).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Max-row-sum norm of `P^t - (1/M) 1 1^T`, by repeated multiplication.
    pub fn consensus_distance(&self, t: usize) -> f64 {
        let m = self.m;
        let mut power = vec![0.0; m * m];
        for i in 0..m {
            power[i * m + i] = 1.0;
        }
        let mut col = vec![0.0; m];
        let mut next = vec![0.0; m];
        for _ in 0..t {
            for c in 0..m {
                for r in 0..m {
                    col[r] = power[r * m + c];
                }
                self.mix_into(&col, &mut next);
                for r in 0..m {
                    power[r * m + c] = next[r];
                }
            }
        }
        let avg = 1.0 / m as f64;
        power.chunks(m).map(|row| row.iter().map(|x| (x - avg).abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Computes `c0` and `c_i`.
    ///
    /// `c0 = sqrt(M) * sum_{p>=2} |l_p| / (1 - |l_p|)` and
    /// `c_i = M * sum_{p>=1} sum_{k>=2} w_pk * a_pk(i)` with
    /// `w_pk = |l_p||l_k| / (1 - |l_p||l_k|)`. The weights `a_pk(i)` use the
    /// signed partial inner products
    /// `nu+_pk = sum_d u_p[d] u_k[d] [u_p[d] u_k[d] >= 0]` (and `nu-` for
    /// `<= 0`), and the diagonal entry `x = u_p[i] u_k[i]`:
    ///
    /// * `l_p l_k >= 0`, `x >= 0`: `nu+_pk * x`
    /// * `l_p l_k >= 0`, `x <= 0`: `nu-_pk * x`
    /// * `l_p l_k < 0`: `max(|nu-_pk|, nu+_pk)`
    ///
    /// Every case is non-negative, so `c_i >= 0`. The `p = k` terms alone
    /// equal `M` times the stationary excess variance of a synchronized
    /// consensus average at agent `i`.
    pub fn spectral_constants(&self) -> Result<SpectralConstants, TopologyError> {
        let m = self.m;
        let lambda = &self.eigen.values;
        let u = &self.eigen.vectors;
        for (p, &l) in lambda.iter().enumerate().skip(1) {
            if l.abs() >= 1.0 - GAP_TOL {
                return Err(TopologyError::SpectralGap { index: p + 1, value: l.abs() });
            }
        }
        let abs: Vec<f64> = lambda.iter().map(|l| l.abs()).collect();
        let c0 = (m as f64).sqrt() * abs.iter().skip(1).map(|&a| a / (1.0 - a)).sum::<f64>();

        let mut nu_plus = vec![0.0; m * m];
        let mut nu_minus = vec![0.0; m * m];
        for p in 0..m {
            for k in 1..m {
                let (mut pos, mut neg) = (0.0, 0.0);
                for (a, b) in u[p].iter().zip(&u[k]) {
                    let x = a * b;
                    if x >= 0.0 {
                        pos += x;
                    }
                    if x <= 0.0 {
                        neg += x;
                    }
                }
                nu_plus[p * m + k] = pos;
                nu_minus[p * m + k] = neg;
            }
        }

        let ci = (0..m)
            .map(|i| {
                let mut total = 0.0;
                for p in 0..m {
                    for k in 1..m {
                        let prod = abs[p] * abs[k];
                        let w = prod / (1.0 - prod);
                        let (pos, neg) = (nu_plus[p * m + k], nu_minus[p * m + k]);
                        let a = if lambda[p] * lambda[k] >= 0.0 {
                            let x = u[p][i] * u[k][i];
                            if x >= 0.0 {
                                pos * x
                            } else {
                                neg * x
                            }
                        } else {
                            neg.abs().max(pos)
                        };
                        total += w * a;
                    }
                }
                m as f64 * total
            })
            .collect();
        Ok(SpectralConstants { c0, ci })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Topology;

    #[test]
    fn cycle_three_entries() {
        let g = Graph::build(Topology::Cycle, 3).unwrap();
        let p = MixingMatrix::new(&g, 1.0).unwrap();
        let expected = [0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0];
        for (a, b) in p.dense().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn complete_three_spectrum() {
        let g = Graph::build(Topology::Complete, 3).unwrap();
        let p = MixingMatrix::new(&g, 1.0).unwrap();
        let ev = p.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] + 0.5).abs() < 1e-12);
        assert!((ev[2] + 0.5).abs() < 1e-12);
        let c = p.spectral_constants().unwrap();
        assert!((c.c0 - 2.0 * 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn kappa_domain() {
        let g = Graph::build(Topology::Cycle, 4).unwrap();
        assert!(matches!(MixingMatrix::new(&g, 0.0), Err(TopologyError::InvalidKappa(_))));
        assert!(matches!(MixingMatrix::new(&g, 1.5), Err(TopologyError::InvalidKappa(_))));
        assert!(MixingMatrix::new(&g, 1.0).is_ok());
    }

    #[test]
    fn bipartite_cycle_at_full_step_has_no_gap() {
        let g = Graph::build(Topology::Cycle, 6).unwrap();
        let p = MixingMatrix::new(&g, 1.0).unwrap();
        assert!(matches!(p.spectral_constants(), Err(TopologyError::SpectralGap { .. })));
        let p = MixingMatrix::new(&g, 0.5).unwrap();
        assert!(p.spectral_constants().is_ok());
    }

    #[test]
    fn perfect_mixing_has_zero_constants() {
        let m = 6;
        let g = Graph::build(Topology::Complete, m).unwrap();
        let p = MixingMatrix::new(&g, (m as f64 - 1.0) / m as f64).unwrap();
        for x in p.dense() {
            assert!((x - 1.0 / m as f64).abs() < 1e-15);
        }
        let c = p.spectral_constants().unwrap();
        assert!(c.c0.abs() < 1e-12);
        assert!(c.ci.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn single_agent_is_identity() {
        let g = Graph::build(Topology::Complete, 1).unwrap();
        let p = MixingMatrix::new(&g, 0.5).unwrap();
        assert_eq!(p.dense(), &[1.0]);
        let c = p.spectral_constants().unwrap();
        assert_eq!(c.c0, 0.0);
        assert_eq!(c.ci, vec![0.0]);
    }

    #[test]
    fn from_symmetric_validates() {
        assert!(matches!(
            MixingMatrix::from_symmetric(2, vec![0.5, 0.4, 0.4, 0.5]),
            Err(TopologyError::NotStochastic { row: 0, .. })
        ));
        assert!(matches!(
            MixingMatrix::from_symmetric(2, vec![0.5, 0.5, 0.4, 0.6]),
            Err(TopologyError::NotSymmetric(0, 1))
        ));
        let identity = MixingMatrix::from_symmetric(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(identity.spectral_constants().is_err());
    }

    #[test]
    fn leading_eigenvector_is_uniform() {
        for topo in [Topology::Cycle, Topology::Star, Topology::Path, Topology::Complete] {
            let g = Graph::build(topo, 9).unwrap();
            let p = MixingMatrix::new(&g, 0.5).unwrap();
            assert!((p.eigenvalues()[0] - 1.0).abs() < 1e-10, "{topo}");
            let target = 1.0 / 3.0;
            assert!(p.eigenvectors()[0].iter().all(|x| (x - target).abs() < 1e-10), "{topo}");
            assert!(*p.eigenvalues().last().unwrap() >= -1.0 - 1e-12);
        }
    }
}
