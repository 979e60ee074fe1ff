//! Brute-force reference implementation on the full `2^N` Hilbert space.
//!
//! Nothing here uses the loop group or the Walsh transform. The Hamiltonian
//! is assembled term by term from Pauli products on computational basis
//! states (bit `i` set means spin `i` points down), diagonalized exactly,
//! and every quantity is computed from dense amplitudes. Sizes are capped
//! at [`MAX_ORACLE_SPINS`].
//!
//! The Hamiltonian is diagonalized over the connected components of its
//! nonzero pattern; blocks that never couple are solved independently,
//! which is exact and keeps the 12-spin case cheap.

mod validate;

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, Eigh, SVD, UPLO};
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lattice::{Bipartition, TorusLattice};
use crate::linalg::{hermitian_deviation, nonzero_components};
use crate::loopgroup::{LoopGroup, LoopStateVector};

pub use validate::{
    check_diagonality, check_echo, check_ggm_bipartitions, check_ground_states, check_negativity,
    check_schmidt, check_sector_spectrum, max_local_coherence, random_evolved_states,
    run_validation, EvolvedPair, ValidationCheck, ValidationOptions,
};

pub const MAX_ORACLE_SPINS: usize = 12;

fn guard(num_spins: usize) -> Result<()> {
    if num_spins > MAX_ORACLE_SPINS {
        return Err(Error::TooLarge(format!(
            "oracle supports at most {MAX_ORACLE_SPINS} spins, got {num_spins}"
        )));
    }
    Ok(())
}

/// Full `2^N` state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    amps: Array1<Complex64>,
}

impl DenseState {
    pub fn new(amps: Array1<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(amps.len()));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Numerical(format!("dense state has norm {norm}")));
        }
        Ok(Self { amps })
    }

    /// `∑_g ψ_g · g|0…0⟩`.
    pub fn from_loop_state(psi: &LoopStateVector<f64>, group: &LoopGroup) -> Result<Self> {
        guard(group.num_spins())?;
        let mut amps = Array1::<Complex64>::zeros(1 << group.num_spins());
        for (a, &f) in psi.amps().iter().zip(group.flips()) {
            amps[f as usize] += *a;
        }
        Self::new(amps)
    }

    /// Computational basis state with the given down-spin mask.
    pub fn basis(num_spins: usize, index: usize) -> Result<Self> {
        guard(num_spins)?;
        let mut amps = Array1::<Complex64>::zeros(1 << num_spins);
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn amps(&self) -> &Array1<Complex64> {
        &self.amps
    }

    pub fn num_spins(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `⟨ψ|H|ψ⟩` for a real symmetric `H`.
    pub fn expectation(&self, h: &Array2<f64>) -> f64 {
        let hpsi = h.map(|&x| Complex64::new(x, 0.0)).dot(&self.amps);
        self.amps
            .iter()
            .zip(hpsi.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Nonzero amplitudes as `(basis index, amplitude)`.
    fn support(&self) -> Vec<(usize, Complex64)> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, a)| (i, *a))
            .collect()
    }
}

/// Dense `2^N × 2^N` density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseDensityMatrix {
    entries: Array2<Complex64>,
}

impl DenseDensityMatrix {
    /// Checks shape, Hermiticity and unit trace (both to `1e-10`).
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || !entries.nrows().is_power_of_two() {
            return Err(Error::Config(format!(
                "density matrix of shape {:?}",
                entries.dim()
            )));
        }
        let deviation = hermitian_deviation(entries.view());
        if deviation > 1e-10 {
            return Err(Error::NonHermitian(deviation));
        }
        let trace: Complex64 = entries.diag().sum();
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::Numerical(format!("density matrix trace {trace}")));
        }
        Ok(Self { entries })
    }

    pub fn new_unchecked(entries: Array2<Complex64>) -> Self {
        Self { entries }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &DenseState) -> Self {
        let a = psi.amps();
        let n = a.len();
        Self {
            entries: Array2::from_shape_fn((n, n), |(r, c)| a[r] * a[c].conj()),
        }
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<Complex64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_spins(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diag().sum()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        crate::linalg::block_eigvalsh(self.entries.view())
    }

    /// Largest off-diagonal modulus.
    pub fn max_off_diagonal(&self) -> f64 {
        self.entries
            .indexed_iter()
            .filter(|((r, c), _)| r != c)
            .map(|(_, x)| x.norm())
            .fold(0.0, f64::max)
    }
}

/// Basis-state mask flipped by `∏_{i∈v} σ^x_i`, one toggle per incidence.
fn star_flip(lat: &TorusLattice, v: usize) -> usize {
    lat.star_support(v)
        .iter()
        .fold(0usize, |m, &e| m ^ (1 << e))
}

/// `σ^z_i` eigenvalue of basis state `s`.
fn sz(s: usize, i: usize) -> f64 {
    if s >> i & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Diagonal part of `H(β)`: `-∑_p ∏_{i∈p} σ^z_i + ∑_v exp(-β ∑_{i∈v} σ^z_i)`.
pub fn hamiltonian_diagonal(beta: f64, lat: &TorusLattice) -> Result<Vec<f64>> {
    let n = lat.num_spins();
    guard(n)?;
    Ok((0..1usize << n)
        .map(|s| {
            let plaquettes: f64 = (0..lat.num_plaquettes())
                .map(|p| {
                    lat.plaquette_support(p)
                        .iter()
                        .map(|&i| sz(s, i))
                        .product::<f64>()
                })
                .sum();
            let perturbation: f64 = (0..lat.num_vertices())
                .map(|v| (-beta * lat.star_support(v).iter().map(|&i| sz(s, i)).sum::<f64>()).exp())
                .sum();
            perturbation - plaquettes
        })
        .collect())
}

/// Basis-state flip masks of the star operators, as the oracle assembles them.
pub fn star_flips(lat: &TorusLattice) -> Vec<usize> {
    (0..lat.num_vertices()).map(|v| star_flip(lat, v)).collect()
}

/// Dense `H(β)`; real symmetric.
pub fn build_hamiltonian(beta: f64, lat: &TorusLattice) -> Result<Array2<f64>> {
    let diag = hamiltonian_diagonal(beta, lat)?;
    let dim = diag.len();
    let mut h = Array2::<f64>::zeros((dim, dim));
    for (s, &d) in diag.iter().enumerate() {
        h[[s, s]] += d;
    }
    for v in 0..lat.num_vertices() {
        let flip = star_flip(lat, v);
        for s in 0..dim {
            h[[s ^ flip, s]] -= 1.0;
        }
    }
    Ok(h)
}

#[derive(Clone, Debug)]
struct SpectralBlock {
    indices: Vec<usize>,
    values: Array1<f64>,
    vectors: Array2<f64>,
}

/// Exact eigendecomposition of a real symmetric matrix, organized by the
/// connected components of its nonzero pattern.
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    dim: usize,
    blocks: Vec<SpectralBlock>,
}

impl DenseSpectrum {
    pub fn new(h: &Array2<f64>) -> Result<Self> {
        let dim = h.nrows();
        let mut blocks = Vec::new();
        for indices in nonzero_components(h.view()) {
            let block = Array2::from_shape_fn((indices.len(), indices.len()), |(a, b)| {
                h[[indices[a], indices[b]]]
            });
            let (values, vectors) = block
                .eigh(UPLO::Lower)
                .map_err(|e| Error::Numerical(format!("symmetric eigensolve failed: {e}")))?;
            blocks.push(SpectralBlock {
                indices,
                values,
                vectors,
            });
        }
        Ok(Self { dim, blocks })
    }

    pub fn for_hamiltonian(beta: f64, lat: &TorusLattice) -> Result<Self> {
        Self::new(&build_hamiltonian(beta, lat)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| b.values.iter().copied())
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        all
    }

    /// Eigenvalues of the block containing basis state `index`, ascending.
    pub fn block_eigenvalues(&self, index: usize) -> Vec<f64> {
        self.block_of(index)
            .map(|b| b.values.to_vec())
            .unwrap_or_default()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues()[0]
    }

    fn block_of(&self, index: usize) -> Option<&SpectralBlock> {
        self.blocks
            .iter()
            .find(|b| b.indices.binary_search(&index).is_ok())
    }

    /// `e^{-iHt}|ψ⟩`.
    pub fn evolve(&self, psi: &DenseState, t: f64) -> DenseState {
        let mut out = Array1::<Complex64>::zeros(self.dim);
        for block in &self.blocks {
            let local: Vec<Complex64> = block.indices.iter().map(|&i| psi.amps[i]).collect();
            if local.iter().all(|a| a.is_zero()) {
                continue;
            }
            let k = block.indices.len();
            let coeffs: Vec<Complex64> = (0..k)
                .map(|j| {
                    let c: Complex64 = (0..k).map(|i| local[i] * block.vectors[[i, j]]).sum();
                    c * Complex64::from_polar(1.0, -block.values[j] * t)
                })
                .collect();
            for (i, &idx) in block.indices.iter().enumerate() {
                out[idx] = (0..k).map(|j| coeffs[j] * block.vectors[[i, j]]).sum();
            }
        }
        DenseState { amps: out }
    }
}

/// `e^{-iHt}|ψ⟩` for a precomputed spectrum.
pub fn dense_evolve(psi: &DenseState, spectrum: &DenseSpectrum, t: f64) -> DenseState {
    spectrum.evolve(psi, t)
}

#[derive(Clone, Debug)]
pub struct DenseGroundState {
    pub state: DenseState,
    pub energy: f64,
    /// Eigenvalues of the whole Hamiltonian within `1e-10` of the lowest.
    pub degeneracy: usize,
    /// Dimension of the sector reachable from `|0…0⟩`.
    pub sector_dimension: usize,
}

/// Lowest eigenvector of `H(β)` in the sector reachable from `|0…0⟩`.
///
/// The ground space is four-fold degenerate on the torus; restricting to
/// the component of the Hamiltonian's coupling graph that contains
/// `|0…0⟩` picks the topologically trivial representative. The phase is
/// fixed so that the largest-magnitude amplitude is real positive.
pub fn dense_ground_state(beta: f64, lat: &TorusLattice) -> Result<DenseGroundState> {
    let spectrum = DenseSpectrum::for_hamiltonian(beta, lat)?;
    let all = spectrum.eigenvalues();
    let energy = all[0];
    let degeneracy = all.iter().take_while(|&&e| e - energy < 1e-10).count();

    let block = spectrum
        .block_of(0)
        .expect("every basis state belongs to a block");
    if block.values.len() > 1 && block.values[1] - block.values[0] < 1e-10 {
        return Err(Error::Numerical(format!(
            "degenerate ground state inside the trivial sector at beta={beta}"
        )));
    }
    if (block.values[0] - energy).abs() > 1e-10 {
        log::warn!(
            "trivial sector minimum {} above global minimum {energy}",
            block.values[0]
        );
    }
    let column = block.vectors.column(0);
    let pivot = column
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    let mut amps = Array1::<Complex64>::zeros(spectrum.dim());
    for (i, &idx) in block.indices.iter().enumerate() {
        amps[idx] = Complex64::new(sign * column[i], 0.0);
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.mapv_inplace(|a| a / norm);
    Ok(DenseGroundState {
        state: DenseState::new(amps)?,
        energy: block.values[0],
        degeneracy,
        sector_dimension: block.indices.len(),
    })
}

/// Reduced density matrix on `subset`; bit `j` of the reduced index is
/// spin `subset[j]`.
pub fn reduced_density_matrix(psi: &DenseState, subset: &[usize]) -> Result<DenseDensityMatrix> {
    let n = psi.num_spins();
    guard(n)?;
    if let Some(&e) = subset.iter().find(|&&e| e >= n) {
        return Err(Error::Config(format!("spin {e} outside a {n}-spin state")));
    }
    let keep: usize = subset.iter().fold(0, |m, &e| m | (1 << e));
    let local = |s: usize| {
        subset
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &e)| acc | ((s >> e & 1) << j))
    };

    // group amplitudes by the traced-out part; only amplitudes that share
    // it contribute to the same reduced entries
    let mut by_rest: HashMap<usize, Vec<(usize, Complex64)>> = HashMap::new();
    for (s, a) in psi.support() {
        by_rest.entry(s & !keep).or_default().push((local(s), a));
    }
    let dim = 1usize << subset.len();
    let mut rho = Array2::<Complex64>::zeros((dim, dim));
    for members in by_rest.values() {
        for &(r, a) in members {
            for &(c, b) in members {
                rho[[r, c]] += a * b.conj();
            }
        }
    }
    Ok(DenseDensityMatrix { entries: rho })
}

/// Largest eigenvalue of the reduced state on the spins in `subset_mask`.
///
/// Uses the reshaped amplitude matrix restricted to rows and columns that
/// carry weight, then the smaller Gram matrix.
pub fn max_rdm_eigenvalue(psi: &DenseState, subset_mask: usize) -> Result<f64> {
    let support = psi.support();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    let mut entries = Vec::with_capacity(support.len());
    for (s, a) in support {
        let next = rows.len();
        let r = *rows.entry(s & subset_mask).or_insert(next);
        let next = cols.len();
        let c = *cols.entry(s & !subset_mask).or_insert(next);
        entries.push((r, c, a));
    }
    let (nr, nc) = (rows.len(), cols.len());
    let mut m = Array2::<Complex64>::zeros((nr, nc));
    for (r, c, a) in entries {
        m[[r, c]] = a;
    }
    let gram = if nr <= nc {
        m.dot(&m.t().mapv(|x| x.conj()))
    } else {
        m.t().mapv(|x| x.conj()).dot(&m)
    };
    let values = gram
        .eigvalsh(UPLO::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolve failed: {e}")))?;
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug)]
pub struct BipartitionScan {
    /// `1 - max` largest eigenvalue over every bipartition.
    pub ggm: f64,
    /// Spin mask of a subset attaining the maximum.
    pub best_subset: usize,
    /// Number of bipartitions examined, `2^{N-1} - 1`.
    pub count: usize,
}

/// GGM by exhaustive enumeration of every bipartition `M : rest`.
pub fn ggm_all_bipartitions(psi: &DenseState) -> Result<BipartitionScan> {
    let n = psi.num_spins();
    guard(n)?;
    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut count = 0;
    for subset in 1usize..(1 << n) - 1 {
        let size = subset.count_ones() as usize;
        // each bipartition once: the smaller side, and for equal halves the
        // side not containing the last spin
        if 2 * size > n || (2 * size == n && subset >> (n - 1) & 1 == 1) {
            continue;
        }
        count += 1;
        let lambda = max_rdm_eigenvalue(psi, subset)?;
        if lambda > best.0 {
            best = (lambda, subset);
        }
    }
    Ok(BipartitionScan {
        ggm: 1.0 - best.0,
        best_subset: best.1,
        count,
    })
}

/// Schmidt coefficients across `bip` from the SVD of the reshaped dense vector.
pub fn schmidt_values(psi: &DenseState, bip: &Bipartition) -> Result<Vec<f64>> {
    let n = psi.num_spins();
    guard(n)?;
    let (a, b) = (bip.block_a(), bip.block_b());
    let index = |block: &[usize], s: usize| {
        block
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &e)| acc | ((s >> e & 1) << j))
    };
    let mut m = Array2::<Complex64>::zeros((1 << a.len(), 1 << b.len()));
    for (s, amp) in psi.amps.iter().enumerate() {
        m[[index(a, s), index(b, s)]] = *amp;
    }
    let (_, sigma, _) = m
        .svd(false, false)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?;
    Ok(sigma.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{ground_state, GroundStateSpec};
    use crate::lattice::build_lattice;

    fn ghz(n: usize) -> DenseState {
        let mut amps = Array1::<Complex64>::zeros(1 << n);
        amps[0] = Complex64::new(0.5f64.sqrt(), 0.0);
        amps[(1 << n) - 1] = Complex64::new(0.5f64.sqrt(), 0.0);
        DenseState::new(amps).unwrap()
    }

    #[test]
    fn hamiltonian_is_symmetric_and_terms_commute() {
        let lat = build_lattice(2, 2).unwrap();
        let h = build_hamiltonian(0.7, &lat).unwrap();
        assert_eq!(h, h.t());
        // A_v flips spins touching B_p an even number of times
        for v in 0..lat.num_vertices() {
            let flip = star_flip(&lat, v);
            for p in 0..lat.num_plaquettes() {
                for s in 0..256 {
                    let bp = |s| {
                        lat.plaquette_support(p)
                            .iter()
                            .map(|&i| sz(s, i))
                            .product::<f64>()
                    };
                    assert_eq!(bp(s), bp(s ^ flip));
                }
            }
        }
    }

    #[test]
    fn toric_ground_energy() {
        let lat = build_lattice(2, 2).unwrap();
        let spectrum = DenseSpectrum::for_hamiltonian(0.0, &lat).unwrap();
        assert!((spectrum.ground_energy() + 4.0).abs() < 1e-12);
        // 256 states split into 32 sectors of 8 loop configurations
        assert_eq!(spectrum.num_blocks(), 32);
    }

    #[test]
    fn blockwise_spectrum_matches_full_lapack() {
        let lat = build_lattice(2, 2).unwrap();
        let h = build_hamiltonian(0.35, &lat).unwrap();
        let (full, _) = h.eigh(UPLO::Lower).unwrap();
        let blocked = DenseSpectrum::new(&h).unwrap().eigenvalues();
        for (a, b) in full.iter().zip(&blocked) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn loop_sector_spectrum_at_zero_beta() {
        // -∑A_v - Np + Nv restricted to the sector of |0…0⟩
        let lat = build_lattice(2, 3).unwrap();
        let spectrum = DenseSpectrum::for_hamiltonian(0.0, &lat).unwrap();
        let group = LoopGroup::new(&lat);
        let shift = (lat.num_vertices() as f64) - (lat.num_plaquettes() as f64);
        let mut expected: Vec<f64> = group.energies().iter().map(|&e| e as f64 + shift).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = spectrum.block_eigenvalues(0);
        assert_eq!(got.len(), expected.len());
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_state_is_four_fold_degenerate() {
        let lat = build_lattice(2, 2).unwrap();
        for beta in [0.0, 0.5] {
            let gs = dense_ground_state(beta, &lat).unwrap();
            assert_eq!(gs.degeneracy, 4);
            assert_eq!(gs.sector_dimension, 8);
            assert!((gs.energy + 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn evolution_is_unitary_and_conserves_energy() {
        let lat = build_lattice(2, 2).unwrap();
        let h = build_hamiltonian(0.0, &lat).unwrap();
        let spectrum = DenseSpectrum::new(&h).unwrap();
        let group = LoopGroup::new(&lat);
        let psi = DenseState::from_loop_state(
            &ground_state(&GroundStateSpec::new(0.9).unwrap(), &group),
            &group,
        )
        .unwrap();
        let e0 = psi.expectation(&h);
        let same = dense_evolve(&psi, &spectrum, 0.0);
        assert!((same.inner(&psi).re - 1.0).abs() < 1e-12);
        for t in [0.4, 2.5, 7.0] {
            let out = dense_evolve(&psi, &spectrum, t);
            assert!((out.norm() - 1.0).abs() < 1e-10);
            assert!((out.expectation(&h) - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn reduced_states() {
        let lat = build_lattice(2, 2).unwrap();
        let group = LoopGroup::new(&lat);
        let product = DenseState::basis(8, 0).unwrap();
        let rho = reduced_density_matrix(&product, &[1, 4, 6]).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-15);

        let toric = DenseState::from_loop_state(
            &ground_state(&GroundStateSpec::new(0.0).unwrap(), &group),
            &group,
        )
        .unwrap();
        for i in 0..8 {
            let rho = reduced_density_matrix(&toric, &[i]).unwrap();
            assert!((rho.entries()[[0, 0]].re - 0.5).abs() < 1e-15);
            assert!((rho.entries()[[1, 1]].re - 0.5).abs() < 1e-15);
            assert_eq!(rho.max_off_diagonal(), 0.0);
        }
        let rho = reduced_density_matrix(&toric, &[0, 2, 5]).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!(rho.eigenvalues().unwrap().iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn max_eigenvalue_matches_full_reduced_state() {
        let lat = build_lattice(2, 2).unwrap();
        let group = LoopGroup::new(&lat);
        let toric = DenseState::from_loop_state(
            &ground_state(&GroundStateSpec::new(0.3).unwrap(), &group),
            &group,
        )
        .unwrap();
        let spectrum = DenseSpectrum::for_hamiltonian(0.0, &lat).unwrap();
        let psi = spectrum.evolve(&toric, 1.3);
        for subset in [vec![0], vec![1, 3], vec![0, 2, 4, 6], vec![5, 6, 7]] {
            let mask = subset.iter().fold(0, |m, &e| m | (1 << e));
            let full = reduced_density_matrix(&psi, &subset)
                .unwrap()
                .eigenvalues()
                .unwrap();
            let fast = max_rdm_eigenvalue(&psi, mask).unwrap();
            assert!((full.last().unwrap() - fast).abs() < 1e-12);
        }
    }

    #[test]
    fn bipartition_enumeration() {
        let scan = ggm_all_bipartitions(&DenseState::basis(6, 0).unwrap()).unwrap();
        assert_eq!(scan.count, 31);
        assert!(scan.ggm.abs() < 1e-12);
        for n in [4, 6, 8] {
            let scan = ggm_all_bipartitions(&ghz(n)).unwrap();
            assert_eq!(scan.count, (1 << (n - 1)) - 1);
            assert!((scan.ggm - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn schmidt_values_square_to_reduced_spectrum() {
        let lat = build_lattice(2, 2).unwrap();
        let group = LoopGroup::new(&lat);
        let bip = lat.equal_block_bipartition();
        let spectrum = DenseSpectrum::for_hamiltonian(0.0, &lat).unwrap();
        let psi0 = DenseState::from_loop_state(
            &ground_state(&GroundStateSpec::new(0.6).unwrap(), &group),
            &group,
        )
        .unwrap();
        let psi = spectrum.evolve(&psi0, 2.1);
        let sigma = schmidt_values(&psi, &bip).unwrap();
        let mut lambdas = reduced_density_matrix(&psi, bip.block_a())
            .unwrap()
            .eigenvalues()
            .unwrap();
        lambdas.reverse();
        for (s, l) in sigma.iter().zip(&lambdas) {
            assert!((s * s - l).abs() < 1e-12);
        }
    }

    #[test]
    fn size_guards() {
        let lat = build_lattice(2, 4).unwrap();
        assert!(matches!(
            build_hamiltonian(0.0, &lat),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(DenseState::basis(14, 0), Err(Error::TooLarge(_))));
    }
}
