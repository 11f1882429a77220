use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Finite momentum lattice on a cubic 3-torus of side `l`.
///
/// The dynamical modes are k = (2π/l)·n with n ∈ Z³, 0 < ‖n‖∞ ≤ cutoff.
/// The zero mode is excluded and handled separately as the "mean sector"
/// of every function living on the grid: the transverse/longitudinal split
/// and the inverse Laplacian are undefined at k = 0.
#[derive(Debug)]
pub struct ModeGrid {
    l: f64,
    cutoff: i32,
    modes: Vec<[i32; 3]>,
    index: HashMap<[i32; 3], usize>,
    conj: Vec<usize>,
}

impl ModeGrid {
    pub fn new(l: f64, cutoff: i32) -> Result<Arc<Self>> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Invalid(format!("torus side must be positive, got {l}")));
        }
        if cutoff < 1 {
            return Err(Error::Invalid(format!("mode cutoff must be >= 1, got {cutoff}")));
        }
        let mut modes = Vec::new();
        for nx in -cutoff..=cutoff {
            for ny in -cutoff..=cutoff {
                for nz in -cutoff..=cutoff {
                    if nx == 0 && ny == 0 && nz == 0 {
                        continue;
                    }
                    modes.push([nx, ny, nz]);
                }
            }
        }
        let index: HashMap<_, _> = modes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let conj = modes
            .iter()
            .map(|&[a, b, c]| index[&[-a, -b, -c]])
            .collect();
        Ok(Arc::new(ModeGrid { l, cutoff, modes, index, conj }))
    }

    /// Desk-scale grid: side 2π so that k = n exactly.
    pub fn desk(cutoff: i32) -> Result<Arc<Self>> {
        Self::new(std::f64::consts::TAU, cutoff)
    }

    pub fn side(&self) -> f64 {
        self.l
    }

    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    /// Torus volume L³: the weight of the Parseval pairing.
    pub fn volume(&self) -> f64 {
        self.l * self.l * self.l
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[[i32; 3]] {
        &self.modes
    }

    /// Momentum vector of mode `i`.
    pub fn k(&self, i: usize) -> [f64; 3] {
        let f = std::f64::consts::TAU / self.l;
        let n = self.modes[i];
        [f * n[0] as f64, f * n[1] as f64, f * n[2] as f64]
    }

    /// |k| of mode `i`.
    pub fn omega(&self, i: usize) -> f64 {
        let k = self.k(i);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
    }

    /// |k|² of mode `i`.
    pub fn k2(&self, i: usize) -> f64 {
        let k = self.k(i);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    pub fn mode_index(&self, n: [i32; 3]) -> Option<usize> {
        self.index.get(&n).copied()
    }

    /// Index of the mode -n for mode index `i`.
    pub fn conj_index(&self, i: usize) -> usize {
        self.conj[i]
    }

    /// Indices of one representative per ±pair (the lexicographically
    /// positive member). Used by samplers that draw one complex value per
    /// pair and fill the partner by conjugation.
    pub fn half_modes(&self) -> impl Iterator<Item = usize> + '_ {
        self.modes.iter().enumerate().filter_map(|(i, &n)| {
            if n > [0, 0, 0] {
                Some(i)
            } else {
                None
            }
        })
    }

    pub fn same_grid(&self, other: &ModeGrid) -> bool {
        self.l == other.l && self.cutoff == other.cutoff
    }
}
