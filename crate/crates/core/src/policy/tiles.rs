//! Uniform-offset tile coding over a box-shaped state space.

use crate::error::check_len;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TileCoder {
    low: Vec<f64>,
    high: Vec<f64>,
    tilings: usize,
    tiles_per_dim: usize,
}

impl TileCoder {
    /// `tilings` grids of `tiles_per_dim` tiles per dimension, each displaced
    /// by `k/tilings` of a tile width. Every grid carries one extra tile per
    /// dimension so that displaced grids still cover the box.
    pub fn new(low: Vec<f64>, high: Vec<f64>, tilings: usize, tiles_per_dim: usize) -> Result<Self> {
        check_len("tile coder bounds", low.len(), high.len())?;
        if low.is_empty() || tilings == 0 || tiles_per_dim == 0 {
            return Err(Error::invalid("tile coder needs a non-empty box and at least one tile"));
        }
        if low.iter().zip(&high).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::invalid("tile coder bounds must be finite with low < high"));
        }
        Ok(Self {
            low,
            high,
            tilings,
            tiles_per_dim,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.low.len()
    }

    pub fn tilings(&self) -> usize {
        self.tilings
    }

    fn tiles_per_tiling(&self) -> usize {
        (self.tiles_per_dim + 1).pow(self.state_dim() as u32)
    }

    pub fn n_features(&self) -> usize {
        self.tilings * self.tiles_per_tiling()
    }

    /// Indices of the active tile in each tiling (one per tiling).
    pub fn active(&self, state: &[f64]) -> Vec<usize> {
        let per = self.tiles_per_tiling();
        let side = self.tiles_per_dim + 1;
        (0..self.tilings)
            .map(|k| {
                let shift = k as f64 / self.tilings as f64;
                let mut index = 0;
                for (d, s) in state.iter().enumerate() {
                    let (lo, hi) = (self.low[d], self.high[d]);
                    let unit = ((s.clamp(lo, hi) - lo) / (hi - lo)) * self.tiles_per_dim as f64;
                    let cell = ((unit + shift).floor() as usize).min(self.tiles_per_dim);
                    index = index * side + cell;
                }
                k * per + index
            })
            .collect()
    }

    /// Dense binary feature vector `φ(s)`.
    pub fn features(&self, state: &[f64]) -> Vec<f64> {
        let mut phi = vec![0.0; self.n_features()];
        for i in self.active(state) {
            phi[i] = 1.0;
        }
        phi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_active_tile_per_tiling() {
        let coder = TileCoder::new(vec![-2.0, -2.0], vec![2.0, 2.0], 8, 8).unwrap();
        assert_eq!(coder.n_features(), 8 * 81);
        for s in [[0.0, 0.0], [-2.0, 2.0], [1.99, -0.3], [5.0, -5.0]] {
            let active = coder.active(&s);
            assert_eq!(active.len(), 8);
            for (k, i) in active.iter().enumerate() {
                assert!(*i >= k * 81 && *i < (k + 1) * 81);
            }
            assert_eq!(coder.features(&s).iter().sum::<f64>(), 8.0);
        }
    }

    #[test]
    fn nearby_states_share_most_tiles() {
        let coder = TileCoder::new(vec![0.0], vec![1.0], 8, 8).unwrap();
        let a = coder.active(&[0.500]);
        let b = coder.active(&[0.505]);
        let shared = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        assert!(shared >= 7);
    }
}
