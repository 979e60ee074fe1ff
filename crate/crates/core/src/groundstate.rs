//! Exact ground state of `H(β) = -∑A_v - ∑B_p + ∑_v exp(-β ∑_{i∈v} σ^z_i)`.
//!
//! Every term `exp(-β S_v) - A_v` annihilates
//!
//! ```text
//! |GS(β)⟩ = Z(β)^{-1/2} ∑_{g∈G} exp(β/2 · M(g)) g|0…0⟩,   Z(β) = ∑_g exp(β · M(g))
//! ```
//!
//! where `M(g)` is the magnetization of the flip pattern of `g`, so the state
//! sits at energy `-Np`. The weights are the Boltzmann weights of a 2D Ising
//! model at coupling `β`, whose critical point is [`BETA_CRITICAL`].

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lattice::TorusLattice;
use crate::loopgroup::{LoopGroup, LoopStateVector};
use crate::oracle;
use crate::scalar::{compensated_sum, Real};

/// `½ ln(1 + √2)`.
pub const BETA_CRITICAL: f64 = 0.440_686_793_509_771_5;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct GroundStateSpec<T> {
    pub beta: T,
}

impl<T: Real> GroundStateSpec<T> {
    pub fn new(beta: T) -> Result<Self> {
        if !beta.is_finite() || beta < T::zero() {
            return Err(Error::Config(format!(
                "beta must be finite and non-negative, got {beta}"
            )));
        }
        Ok(Self { beta })
    }
}

/// Normalized `|GS(β)⟩` in the loop basis. All amplitudes are real and
/// positive; the largest magnetization is factored out before exponentiating.
pub fn ground_state<T: Real>(spec: &GroundStateSpec<T>, group: &LoopGroup) -> LoopStateVector<T> {
    let m = group.magnetizations();
    let m_max = *m.iter().max().expect("group is non-empty");
    let half = spec.beta / T::of(2.0);
    let weights: Vec<T> = m
        .iter()
        .map(|&mg| (half * T::of((mg - m_max) as f64)).exp())
        .collect();
    let norm = compensated_sum(weights.iter().map(|&w| w * w)).sqrt();
    LoopStateVector::from_vec_unchecked(
        weights
            .into_iter()
            .map(|w| Complex::new(w / norm, T::zero()))
            .collect(),
    )
}

/// `ln Z(β)`, finite for any β the amplitudes can represent.
pub fn log_partition_function<T: Real>(spec: &GroundStateSpec<T>, group: &LoopGroup) -> T {
    let m = group.magnetizations();
    let m_max = *m.iter().max().expect("group is non-empty");
    let shifted: T = m
        .iter()
        .map(|&mg| (spec.beta * T::of((mg - m_max) as f64)).exp())
        .sum();
    spec.beta * T::of(m_max as f64) + shifted.ln()
}

/// `Z(β) = ∑_g exp(β·M(g))`. Overflows to infinity once `β·N` exceeds the
/// exponent range; use [`log_partition_function`] there.
pub fn partition_function<T: Real>(spec: &GroundStateSpec<T>, group: &LoopGroup) -> T {
    log_partition_function(spec, group).exp()
}

/// `⟨ψ|H(β)|ψ⟩` evaluated directly in the loop basis.
///
/// `A_v` pairs `g` with `g·a_v`; the perturbation is diagonal with
/// `S_v(g) = ∑_{i∈v} σ^z_i` summed over the star's incidences.
pub fn loop_energy(
    psi: &LoopStateVector<f64>,
    beta: f64,
    lat: &TorusLattice,
    group: &LoopGroup,
) -> f64 {
    let amps = psi.amps();
    let generators = lat.num_generators();
    let mut energy = -(lat.num_plaquettes() as f64) * psi.norm().powi(2);
    for v in 0..lat.num_vertices() {
        // the last star is the product of every generator
        let shift = if v < generators {
            1usize << v
        } else {
            (1usize << generators) - 1
        };
        let hop: f64 = (0..amps.len())
            .map(|g| (amps[g].conj() * amps[g ^ shift]).re)
            .sum();
        let support = lat.star_support(v);
        let diag: f64 = (0..amps.len())
            .map(|g| {
                let flips = group.flips()[g];
                let s: i32 = support
                    .iter()
                    .map(|&e| 1 - 2 * (flips >> e & 1) as i32)
                    .sum();
                amps[g].norm_sqr() * (-beta * s as f64).exp()
            })
            .sum();
        energy += diag - hop;
    }
    energy
}

#[derive(Clone, Debug)]
pub struct GroundStateReport {
    pub beta: f64,
    /// `|⟨GS_loop|GS_dense⟩|²`.
    pub fidelity: f64,
    /// Energy of the loop-basis state evaluated in the loop basis.
    pub loop_energy: f64,
    /// Lowest eigenvalue of the dense Hamiltonian.
    pub dense_energy: f64,
    /// Number of dense eigenvalues within `1e-10` of the lowest.
    pub degeneracy: usize,
}

impl GroundStateReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.fidelity > 1.0 - tol && (self.loop_energy - self.dense_energy).abs() < 1e-9
    }
}

/// Compare the loop-basis ground state with the lowest eigenvector of the
/// dense Hamiltonian. Needs `N ≤ 12`.
///
/// A fidelity well below one means the exponent convention (β against β/2)
/// is wrong.
pub fn verify_ground_state(beta: f64, lat: &TorusLattice) -> Result<GroundStateReport> {
    let spec = GroundStateSpec::new(beta)?;
    let group = LoopGroup::new(lat);
    let psi = ground_state(&spec, &group);
    let dense = oracle::dense_ground_state(beta, lat)?;
    let embedded = oracle::DenseState::from_loop_state(&psi, &group)?;
    let fidelity = embedded.inner(&dense.state).norm_sqr();
    let report = GroundStateReport {
        beta,
        fidelity,
        loop_energy: loop_energy(&psi, beta, lat, &group),
        dense_energy: dense.energy,
        degeneracy: dense.degeneracy,
    };
    if report.fidelity < 1.0 - 1e-10 {
        log::warn!(
            "ground-state fidelity {:.3e} at beta={beta}: check the exponent convention",
            report.fidelity
        );
    }
    Ok(report)
}
