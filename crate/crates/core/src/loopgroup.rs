//! The Abelian group of contractible loop operators and its characters.
//!
//! The stars `A_0 … A_{Nv-2}` generate the group freely; the last star is
//! the product of all the others. A group element is therefore an
//! `(Nv-1)`-bit mask, composition is XOR, and the loop sector containing
//! `|0…0⟩` has the orthonormal basis `{ g|0…0⟩ }` indexed by these masks.
//!
//! Acting with a star on that basis is a translation of the index, so the
//! Walsh–Hadamard transform diagonalizes `-∑_v A_v` with eigenvalue
//! `-(∑_{v<Nv-1} χ_v + ∏_{v<Nv-1} χ_v)` on character `χ`.

use std::ops::BitXor;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lattice::TorusLattice;
use crate::scalar::{compensated_sum, Real};

/// Vertex-subset bitmask over the `Nv - 1` canonical generators.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(pub u64);

impl GroupElement {
    pub const IDENTITY: Self = GroupElement(0);

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }
}

impl BitXor for GroupElement {
    type Output = Self;
    fn bitxor(self, rhs: Self) -> Self {
        GroupElement(self.0 ^ rhs.0)
    }
}

/// Edge bitmask; a set bit means the spin is flipped relative to `|0…0⟩`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SpinConfig(pub u64);

impl SpinConfig {
    pub fn flipped(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_flipped(self, edge: usize) -> bool {
        self.0 >> edge & 1 == 1
    }
}

impl BitXor for SpinConfig {
    type Output = Self;
    fn bitxor(self, rhs: Self) -> Self {
        SpinConfig(self.0 ^ rhs.0)
    }
}

/// Character of `Z_2^{Nv-1}`, `χ_v = (-1)^{bit v}`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CharacterIndex(pub u64);

impl CharacterIndex {
    pub const TRIVIAL: Self = CharacterIndex(0);

    /// `χ_v` for a generator `v`, or the forced value `∏ χ` for the last vertex.
    pub fn value(self, v: usize, lat: &TorusLattice) -> i32 {
        if v < lat.num_generators() {
            1 - 2 * (self.0 >> v & 1) as i32
        } else {
            if self.0.count_ones() % 2 == 0 {
                1
            } else {
                -1
            }
        }
    }
}

/// Spins flipped by the loop operator `g`.
pub fn flip_pattern(g: GroupElement, lat: &TorusLattice) -> SpinConfig {
    let mut bits = g.0;
    let mut mask = 0u64;
    while bits != 0 {
        let v = bits.trailing_zeros() as usize;
        mask ^= lat.star_mask(v);
        bits &= bits - 1;
    }
    SpinConfig(mask)
}

/// `∑_i σ^z_i` of a spin configuration: `N - 2·(#flipped)`.
pub fn magnetization(c: SpinConfig, num_spins: usize) -> i32 {
    num_spins as i32 - 2 * c.flipped() as i32
}

/// Loop-sector energy of character `χ` under `-∑_v A_v`.
///
/// The constants `-Np` (plaquettes) and `+Nv` (the unperturbed `e^0` terms)
/// are left out; they only contribute a global phase.
pub fn character_energy(chi: CharacterIndex, lat: &TorusLattice) -> i32 {
    energy_of_popcount(lat.num_generators(), chi.0.count_ones())
}

fn energy_of_popcount(generators: usize, popcount: u32) -> i32 {
    let sum = generators as i32 - 2 * popcount as i32;
    let product = if popcount % 2 == 0 { 1 } else { -1 };
    -(sum + product)
}

/// Lookup tables for one lattice: flip pattern and magnetization of every
/// group element, and the energy of every character.
#[derive(Clone, Debug)]
pub struct LoopGroup {
    num_spins: usize,
    generators: usize,
    flips: Vec<u64>,
    magnetizations: Vec<i32>,
    energies: Vec<i32>,
}

impl LoopGroup {
    pub fn new(lat: &TorusLattice) -> Self {
        let generators = lat.num_generators();
        let order = 1usize << generators;
        let mut flips = vec![0u64; order];
        for g in 1..order {
            // clear the lowest bit and add that generator back
            let low = g.trailing_zeros() as usize;
            flips[g] = flips[g & (g - 1)] ^ lat.star_mask(low);
        }
        let n = lat.num_spins();
        let magnetizations = flips
            .iter()
            .map(|&f| magnetization(SpinConfig(f), n))
            .collect();
        let energies = (0..order as u64)
            .map(|c| energy_of_popcount(generators, c.count_ones()))
            .collect();
        Self {
            num_spins: n,
            generators,
            flips,
            magnetizations,
            energies,
        }
    }

    /// `|G| = 2^{Nv-1}`.
    pub fn order(&self) -> usize {
        self.flips.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn flip(&self, g: GroupElement) -> SpinConfig {
        SpinConfig(self.flips[g.0 as usize])
    }

    /// Flip patterns indexed by group element.
    pub fn flips(&self) -> &[u64] {
        &self.flips
    }

    pub fn magnetizations(&self) -> &[i32] {
        &self.magnetizations
    }

    /// Character energies indexed by `chi_mask`.
    pub fn energies(&self) -> &[i32] {
        &self.energies
    }
}

/// Complex amplitudes over the loop basis `{ g|0…0⟩ : g ∈ G }`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopStateVector<T> {
    amps: Vec<Complex<T>>,
}

impl<T: Real> LoopStateVector<T> {
    pub fn new(amps: Vec<Complex<T>>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(amps.len()));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Numerical("non-finite amplitude".into()));
        }
        Ok(Self { amps })
    }

    pub(crate) fn from_vec_unchecked(amps: Vec<Complex<T>>) -> Self {
        debug_assert!(amps.len().is_power_of_two());
        Self { amps }
    }

    /// `|g⟩` for a single group element.
    pub fn basis(group: &LoopGroup, g: GroupElement) -> Self {
        let mut amps = vec![Complex::zero(); group.order()];
        amps[g.0 as usize] = Complex::new(T::one(), T::zero());
        Self { amps }
    }

    pub fn amps(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> T {
        compensated_sum(self.amps.iter().map(|a| a.norm_sqr())).sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .fold(Complex::zero(), |s, x| s + x)
    }

    /// Probability `|amp_g|²` of each loop configuration.
    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// In-place orthonormal Walsh–Hadamard transform. The transform is its own
/// inverse.
pub fn walsh_hadamard_in_place<T: Real>(data: &mut [Complex<T>]) -> Result<()> {
    let n = data.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut half = 1;
    while half < n {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
    let scale = T::one() / T::of(n as f64).sqrt();
    for a in data.iter_mut() {
        *a = *a * scale;
    }
    Ok(())
}

/// Walsh–Hadamard transform of a loop-basis vector. With the orthonormal
/// convention forward and inverse coincide; `inverse` is accepted for
/// call-site readability.
pub fn walsh_transform<T: Real>(v: &LoopStateVector<T>, inverse: bool) -> LoopStateVector<T> {
    let _ = inverse;
    let mut amps = v.amps.clone();
    walsh_hadamard_in_place(&mut amps).expect("loop vectors have power-of-two length");
    LoopStateVector { amps }
}
