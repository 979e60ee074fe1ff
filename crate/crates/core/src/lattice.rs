//! Periodic square lattice with spins on edges.
//!
//! Cell `(x, y)` owns two edges: the horizontal edge `2(y·Lx + x)` running
//! from vertex `(x, y)` to `(x+1, y)`, and the vertical edge `2(y·Lx + x) + 1`
//! running from `(x, y)` to `(x, y+1)`, both with periodic wrap-around.
//! Vertex `(x, y)` and plaquette `(x, y)` share the index `y·Lx + x`.
//!
//! Supports are stored as incidence lists of length four. On tori with a
//! side of length one an edge can meet the same vertex twice, so a support
//! may list an edge twice; the corresponding Pauli product then squares to
//! the identity on that edge, which is what the XOR masks encode.

use crate::error::{Error, Result};

/// Largest number of loop-group generators (`Nv - 1`) accepted by default.
/// A loop-basis vector then holds `2^24` complex amplitudes.
pub const DEFAULT_MAX_GENERATOR_BITS: u32 = 24;

/// Edge bitmasks are `u64`.
pub const MAX_SPINS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusLattice {
    lx: usize,
    ly: usize,
    star_support: Vec<[usize; 4]>,
    plaquette_support: Vec<[usize; 4]>,
    edge_endpoints: Vec<(usize, usize)>,
    star_masks: Vec<u64>,
    plaquette_masks: Vec<u64>,
}

impl TorusLattice {
    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        Self::with_budget(lx, ly, DEFAULT_MAX_GENERATOR_BITS)
    }

    /// Build an `lx × ly` torus, rejecting it if the loop basis would need
    /// more than `2^max_generator_bits` amplitudes.
    pub fn with_budget(lx: usize, ly: usize, max_generator_bits: u32) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::Config(format!(
                "lattice dimensions must be positive, got {lx}x{ly}"
            )));
        }
        let nv = lx
            .checked_mul(ly)
            .ok_or_else(|| Error::TooLarge(format!("{lx}x{ly}")))?;
        let n = 2 * nv;
        if n > MAX_SPINS {
            return Err(Error::TooLarge(format!(
                "{lx}x{ly} torus has {n} spins, at most {MAX_SPINS} supported"
            )));
        }
        if (nv - 1) as u32 > max_generator_bits {
            return Err(Error::TooLarge(format!(
                "{lx}x{ly} torus needs 2^{} loop amplitudes, budget is 2^{max_generator_bits}",
                nv - 1
            )));
        }

        let cell = |x: usize, y: usize| (y % ly) * lx + (x % lx);
        let horizontal = |x: usize, y: usize| 2 * cell(x, y);
        let vertical = |x: usize, y: usize| 2 * cell(x, y) + 1;

        let mut edge_endpoints = vec![(0, 0); n];
        let mut star_support = Vec::with_capacity(nv);
        let mut plaquette_support = Vec::with_capacity(nv);
        for y in 0..ly {
            for x in 0..lx {
                edge_endpoints[horizontal(x, y)] = (cell(x, y), cell(x + 1, y));
                edge_endpoints[vertical(x, y)] = (cell(x, y), cell(x, y + 1));
                star_support.push([
                    horizontal(x, y),
                    horizontal(x + lx - 1, y),
                    vertical(x, y),
                    vertical(x, y + ly - 1),
                ]);
                plaquette_support.push([
                    horizontal(x, y),
                    vertical(x + 1, y),
                    horizontal(x, y + 1),
                    vertical(x, y),
                ]);
            }
        }

        let xor_mask = |support: &[usize; 4]| support.iter().fold(0u64, |m, &e| m ^ (1u64 << e));
        let star_masks = star_support.iter().map(xor_mask).collect();
        let plaquette_masks = plaquette_support.iter().map(xor_mask).collect();

        Ok(Self {
            lx,
            ly,
            star_support,
            plaquette_support,
            edge_endpoints,
            star_masks,
            plaquette_masks,
        })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    /// Number of spins `N = 2·Lx·Ly`.
    pub fn num_spins(&self) -> usize {
        2 * self.lx * self.ly
    }

    pub fn num_vertices(&self) -> usize {
        self.lx * self.ly
    }

    pub fn num_plaquettes(&self) -> usize {
        self.lx * self.ly
    }

    /// Loop-group generators: every star except the last one.
    pub fn num_generators(&self) -> usize {
        self.num_vertices() - 1
    }

    /// Mask with one bit per spin.
    pub fn spin_mask(&self) -> u64 {
        if self.num_spins() == 64 {
            u64::MAX
        } else {
            (1u64 << self.num_spins()) - 1
        }
    }

    /// Edge incidences of the star at vertex `v` (right, left, up, down).
    pub fn star_support(&self, v: usize) -> &[usize; 4] {
        &self.star_support[v]
    }

    /// Edge incidences of plaquette `p` (bottom, right, top, left).
    pub fn plaquette_support(&self, p: usize) -> &[usize; 4] {
        &self.plaquette_support[p]
    }

    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        self.edge_endpoints[e]
    }

    /// Spins flipped by the star operator `A_v`.
    pub fn star_mask(&self, v: usize) -> u64 {
        self.star_masks[v]
    }

    pub fn star_masks(&self) -> &[u64] {
        &self.star_masks
    }

    /// Spins acted on (an odd number of times) by the plaquette operator `B_p`.
    pub fn plaquette_mask(&self, p: usize) -> u64 {
        self.plaquette_masks[p]
    }

    pub fn plaquette_masks(&self) -> &[u64] {
        &self.plaquette_masks
    }

    /// Split the spins into two halves of `N/2` edges each.
    ///
    /// With an even number of columns block A is the left half of the
    /// columns (both edges of every cell with `x < Lx/2`). Otherwise block A
    /// is the first `N/2` edge indices.
    pub fn equal_block_bipartition(&self) -> Bipartition {
        let n = self.num_spins();
        let block_a: Vec<usize> = if self.lx % 2 == 0 {
            (0..n)
                .filter(|&e| (e / 2) % self.lx < self.lx / 2)
                .collect()
        } else {
            (0..n / 2).collect()
        };
        Bipartition::new(block_a, n).expect("equal split is a valid bipartition")
    }
}

/// Build an `lx × ly` torus with the default loop-basis budget.
pub fn build_lattice(lx: usize, ly: usize) -> Result<TorusLattice> {
    TorusLattice::new(lx, ly)
}

/// Two disjoint blocks of spins covering the whole lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    block_a: Vec<usize>,
    block_b: Vec<usize>,
    mask_a: u64,
    num_spins: usize,
}

impl Bipartition {
    /// `block_a` is given explicitly; block B is its complement in `0..num_spins`.
    pub fn new(mut block_a: Vec<usize>, num_spins: usize) -> Result<Self> {
        if num_spins > MAX_SPINS {
            return Err(Error::TooLarge(format!("{num_spins} spins")));
        }
        block_a.sort_unstable();
        block_a.dedup();
        if let Some(&e) = block_a.iter().find(|&&e| e >= num_spins) {
            return Err(Error::Config(format!(
                "edge {e} outside a {num_spins}-spin lattice"
            )));
        }
        let mask_a = block_a.iter().fold(0u64, |m, &e| m | (1u64 << e));
        let block_b = (0..num_spins)
            .filter(|e| mask_a & (1u64 << e) == 0)
            .collect();
        Ok(Self {
            block_a,
            block_b,
            mask_a,
            num_spins,
        })
    }

    pub fn block_a(&self) -> &[usize] {
        &self.block_a
    }

    pub fn block_b(&self) -> &[usize] {
        &self.block_b
    }

    pub fn mask_a(&self) -> u64 {
        self.mask_a
    }

    pub fn mask_b(&self) -> u64 {
        let all = if self.num_spins == 64 {
            u64::MAX
        } else {
            (1u64 << self.num_spins) - 1
        };
        all & !self.mask_a
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn is_equal_split(&self) -> bool {
        self.block_a.len() == self.block_b.len()
    }
}
