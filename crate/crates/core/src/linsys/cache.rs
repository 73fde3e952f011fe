//! Per-interval transition factors over a fixed grid.
//!
//! A sweep over grid pairs would otherwise re-integrate long spans once per
//! pair. The cache integrates each consecutive interval once (forward and
//! backward), in parallel, and composes factors on demand; the factors are
//! read-only after the build, so lookups need no synchronization.

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::Mat;
use crate::real::Real;

use super::{IntegratorConfig, LinearSystem};

pub struct TransitionCache<T> {
    grid: Vec<T>,
    dim: usize,
    /// fwd[i] = Φ(grid[i+1], grid[i])
    fwd: Vec<Mat<T>>,
    /// bwd[i] = Φ(grid[i], grid[i+1]), integrated backward (not inverted)
    bwd: Vec<Mat<T>>,
}

impl<T: Real> TransitionCache<T> {
    /// Integrate all consecutive intervals of a strictly increasing grid.
    pub fn build(
        sys: &LinearSystem<T>,
        grid: &[T],
        cfg: &IntegratorConfig<T>,
    ) -> Result<Self> {
        assert!(
            grid.windows(2).all(|w| w[0] < w[1]),
            "cache grid must be strictly increasing"
        );
        let jobs: Vec<(T, T, bool)> = grid
            .windows(2)
            .flat_map(|w| [(w[1], w[0], true), (w[0], w[1], false)])
            .collect();
        let factors: Vec<Result<Mat<T>>> = jobs
            .par_iter()
            .map(|&(t, s, _)| sys.transition_mat(t, s, cfg))
            .collect();
        let mut fwd = Vec::with_capacity(grid.len().saturating_sub(1));
        let mut bwd = Vec::with_capacity(grid.len().saturating_sub(1));
        for chunk in factors.chunks(2) {
            match chunk {
                [f, b] => {
                    fwd.push(f.clone()?);
                    bwd.push(b.clone()?);
                }
                _ => unreachable!("jobs come in forward/backward pairs"),
            }
        }
        Ok(TransitionCache {
            grid: grid.to_vec(),
            dim: sys.dim(),
            fwd,
            bwd,
        })
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Φ(grid[to], grid[from]) by composing interval factors.
    pub fn phi(&self, to: usize, from: usize) -> Mat<T> {
        let mut m = Mat::identity(self.dim);
        if to >= from {
            // Φ(t_j, t_i) = F_{j-1} ··· F_i
            for k in from..to {
                m = self.fwd[k].matmul(&m);
            }
        } else {
            // Φ(t_i, t_j) = B_i ··· B_{j-1}, composed from the right
            for k in (to..from).rev() {
                m = self.bwd[k].matmul(&m);
            }
        }
        m
    }

    /// Propagate a state vector from `grid[from]` to every grid point.
    /// Entry `k` of the result is x(grid[k]).
    pub fn propagate(&self, from: usize, x0: &[T]) -> Vec<Vec<T>> {
        let mut out = vec![Vec::new(); self.grid.len()];
        out[from] = x0.to_vec();
        let mut x = x0.to_vec();
        for k in from..self.grid.len() - 1 {
            x = self.fwd[k].matvec(&x);
            out[k + 1] = x.clone();
        }
        let mut x = x0.to_vec();
        for k in (0..from).rev() {
            x = self.bwd[k].matvec(&x);
            out[k] = x.clone();
        }
        out
    }
}
