//! The linear system behind absorption probabilities.
//!
//! For transient nodes the affinities `x` satisfy `(I - Q) x = b` with
//! `b = Σ_j β(s_j) R[:, j]`. Multiplying through by the degree matrix `D`
//! gives `(D - A) x = D b`, where `A` is the adjacency matrix of the
//! subgraph induced by the transient nodes. `D - A` is symmetric and
//! diagonally dominant, and strictly so on at least one row of every
//! connected transient component (the row of a node adjacent to a seed), so
//! it is positive definite.
//!
//! Row `v` of `D b` is simply the summed affinity of the seeds adjacent to
//! `v`, so assembly never forms `R`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::detect::SeedSet;
use crate::error::{Error, Result};
use crate::markov::AbsorbingChain;

/// Largest system [`solve_direct`] will factorise densely.
pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Default relative-residual tolerance of the iterative solver.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Default iteration budget for a system of dimension `dim`.
pub fn default_max_iter(dim: usize) -> usize {
    10 * dim + 100
}

#[derive(Debug, Clone)]
pub struct AbsorbingSystem {
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    rhs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

impl AbsorbingSystem {
    /// Builds `D - A` and one right-hand side per community.
    ///
    /// `seeds` must cover exactly the absorbing states of `chain`.
    pub fn assemble(chain: &AbsorbingChain<'_>, seeds: &SeedSet) -> Result<Self> {
        if seeds.len() != chain.absorbing_count()
            || !chain.seeds().iter().all(|&s| seeds.affinities(s).is_some())
        {
            return Err(Error::SeedMismatch);
        }
        let graph = chain.graph();
        let l = seeds.communities();
        let tau = chain.transient_count();

        let mut diag = Vec::with_capacity(tau);
        let mut offsets = Vec::with_capacity(tau + 1);
        let mut cols = Vec::new();
        let mut rhs = vec![vec![0.0; tau]; l];
        offsets.push(0);
        for (i, &v) in chain.transient_nodes().iter().enumerate() {
            let nbrs = graph.neighbors(v);
            diag.push(nbrs.len() as f64);
            for &w in nbrs {
                match chain.transient_index(w) {
                    Some(k) => cols.push(k),
                    None => {
                        let beta = seeds.affinities(w).expect("seed coverage checked above");
                        for (c, &b) in beta.iter().enumerate() {
                            rhs[c][i] += b;
                        }
                    }
                }
            }
            offsets.push(cols.len());
        }

        Ok(AbsorbingSystem {
            diag,
            offsets,
            cols,
            rhs,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn communities(&self) -> usize {
        self.rhs.len()
    }

    /// Diagonal of `D - A`: degrees in the original graph.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Transient neighbours of transient row `i`; each is a `-1` entry.
    pub fn off_diagonal(&self, i: usize) -> &[usize] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn rhs(&self, community: usize) -> Result<&[f64]> {
        self.rhs
            .get(community)
            .map(Vec::as_slice)
            .ok_or(Error::CommunityOutOfRange {
                community,
                communities: self.communities(),
            })
    }

    /// `y = (D - A) x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let off: f64 = self.off_diagonal(i).iter().map(|&k| x[k]).sum();
            *yi = self.diag[i] * x[i] - off;
        }
    }

    /// `‖(D - A) x - rhs‖₂`.
    pub fn residual_norm(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.dim()];
        self.apply(x, &mut ax);
        norm(&ax.iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>())
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &k in self.off_diagonal(i) {
                m[(i, k)] -= 1.0;
            }
        }
        m
    }
}

/// Dense Cholesky factorisation of `D - A`, reusable across communities.
pub struct DirectSolver<'a> {
    system: &'a AbsorbingSystem,
    factor: Option<Cholesky<f64, Dyn>>,
}

impl<'a> DirectSolver<'a> {
    pub fn new(system: &'a AbsorbingSystem, cap: usize) -> Result<Self> {
        let dim = system.dim();
        if dim > cap {
            return Err(Error::DenseCapExceeded { dim, cap });
        }
        let factor =
            if dim == 0 {
                None
            } else {
                Some(Cholesky::new(system.to_dense()).ok_or_else(|| {
                    Error::Numerical("system matrix is not positive definite".into())
                })?)
            };
        Ok(DirectSolver { system, factor })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let Some(factor) = &self.factor else {
            return Ok(Vec::new());
        };
        let b_norm = norm(rhs);
        if b_norm == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        let x: Vec<f64> = factor
            .solve(&DVector::from_column_slice(rhs))
            .iter()
            .copied()
            .collect();
        let residual = self.system.residual_norm(&x, rhs);
        if residual.is_nan() || residual > 1e-10 * b_norm {
            return Err(Error::Numerical(format!(
                "dense solve residual {residual:e} exceeds 1e-10 relative"
            )));
        }
        Ok(x)
    }
}

/// Jacobi-preconditioned conjugate gradient on `D - A`.
pub struct CgSolver<'a> {
    system: &'a AbsorbingSystem,
    inv_diag: Vec<f64>,
}

impl<'a> CgSolver<'a> {
    pub fn new(system: &'a AbsorbingSystem) -> Self {
        let inv_diag = system.diag.iter().map(|d| 1.0 / d).collect();
        CgSolver { system, inv_diag }
    }

    /// Iterates until `‖(D - A) x - rhs‖ / ‖rhs‖ ≤ tol`.
    ///
    /// Convergence is judged on the true residual, not the recurrence. On
    /// exhausting `max_iter` the iterate with the smallest residual seen is
    /// returned with `converged == false`.
    pub fn solve(&self, rhs: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, SolveReport) {
        let n = self.system.dim();
        assert_eq!(rhs.len(), n);
        let b_norm = norm(rhs);
        if b_norm == 0.0 {
            return (
                vec![0.0; n],
                SolveReport {
                    iterations: 0,
                    relative_residual: 0.0,
                    converged: true,
                },
            );
        }

        let mut x = vec![0.0; n];
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);

        let mut best_x = x.clone();
        let mut best_res = 1.0;
        let mut iterations = 0;

        while iterations < max_iter {
            iterations += 1;
            self.system.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }

            let rec_res = norm(&r) / b_norm;
            if rec_res <= tol {
                // Guard against recurrence drift before declaring victory.
                let true_res = self.system.residual_norm(&x, rhs) / b_norm;
                if true_res <= tol {
                    return (
                        x,
                        SolveReport {
                            iterations,
                            relative_residual: true_res,
                            converged: true,
                        },
                    );
                }
                // Restart from the true residual.
                self.system.apply(&x, &mut ap);
                for i in 0..n {
                    r[i] = rhs[i] - ap[i];
                    z[i] = r[i] * self.inv_diag[i];
                }
                p.copy_from_slice(&z);
                rz = dot(&r, &z);
                continue;
            }
            if rec_res < best_res {
                best_res = rec_res;
                best_x.copy_from_slice(&x);
            }

            for i in 0..n {
                z[i] = r[i] * self.inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }

        let relative_residual = self.system.residual_norm(&best_x, rhs) / b_norm;
        (
            best_x,
            SolveReport {
                iterations,
                relative_residual,
                converged: relative_residual <= tol,
            },
        )
    }
}

/// Dense solve of one community's system, capped at [`DEFAULT_DENSE_CAP`].
pub fn solve_direct(system: &AbsorbingSystem, community: usize) -> Result<Vec<f64>> {
    let rhs = system.rhs(community)?;
    DirectSolver::new(system, DEFAULT_DENSE_CAP)?.solve(rhs)
}

/// Preconditioned CG solve of one community's system.
pub fn solve_iterative(
    system: &AbsorbingSystem,
    community: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let rhs = system.rhs(community)?;
    Ok(CgSolver::new(system).solve(rhs, tol, max_iter))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
