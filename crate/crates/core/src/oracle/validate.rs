//! Cross-checks between the loop-sector pipeline and the dense oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    dense_ground_state, ggm_all_bipartitions, reduced_density_matrix, schmidt_values,
    DenseDensityMatrix, DenseSpectrum, DenseState,
};
use crate::entanglement::{block_schmidt, ggm, log_negativity_mixed, log_negativity_pure};
use crate::error::Result;
use crate::groundstate::{ground_state, verify_ground_state, GroundStateSpec, BETA_CRITICAL};
use crate::lattice::{build_lattice, TorusLattice};
use crate::loopgroup::{LoopGroup, LoopStateVector};
use crate::quench::Quench;

#[derive(Clone, Debug)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl ValidationCheck {
    fn new(
        name: impl Into<String>,
        max_error: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed: max_error < tolerance,
            max_error,
            tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Copy, Clone, Debug)]
pub struct ValidationOptions {
    /// Random `(β₀, t)` pairs per lattice.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            samples: 50,
            seed: 2024,
        }
    }
}

/// Evolved loop state and its dense embedding.
pub struct EvolvedPair {
    pub beta0: f64,
    pub t: f64,
    pub loop_state: LoopStateVector<f64>,
    pub dense: DenseState,
}

/// `samples` random quenched states with `β₀ ∈ [0, 1.5]`, `t ∈ [0, 10]`.
pub fn random_evolved_states(
    group: &LoopGroup,
    samples: usize,
    seed: u64,
) -> Result<Vec<EvolvedPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let beta0 = rng.gen_range(0.0..=1.5);
            let t = rng.gen_range(0.0..=10.0);
            let psi0 = ground_state(&GroundStateSpec::new(beta0)?, group);
            let loop_state = Quench::new(&psi0, group)?.state_at(t);
            let dense = DenseState::from_loop_state(&loop_state, group)?;
            Ok(EvolvedPair {
                beta0,
                t,
                loop_state,
                dense,
            })
        })
        .collect()
}

fn label(lat: &TorusLattice) -> String {
    format!("{}x{}", lat.lx(), lat.ly())
}

pub fn check_ground_states(lat: &TorusLattice) -> Result<ValidationCheck> {
    let mut worst = 0.0f64;
    for beta in [0.0, 0.2, BETA_CRITICAL, 0.8, 1.5] {
        let report = verify_ground_state(beta, lat)?;
        worst = worst
            .max(1.0 - report.fidelity)
            .max((report.loop_energy - report.dense_energy).abs());
    }
    let zero = dense_ground_state(0.0, lat)?;
    worst = worst.max((zero.energy + lat.num_plaquettes() as f64).abs());
    Ok(ValidationCheck::new(
        format!("ground-state fidelity {}", label(lat)),
        worst,
        1e-10,
        format!("degeneracy {}", zero.degeneracy),
    ))
}

/// Loop-sector block of `H(0)` against the Walsh character energies.
pub fn check_sector_spectrum(lat: &TorusLattice) -> Result<ValidationCheck> {
    let group = LoopGroup::new(lat);
    let spectrum = DenseSpectrum::for_hamiltonian(0.0, lat)?;
    let shift = lat.num_vertices() as f64 - lat.num_plaquettes() as f64;
    let mut expected: Vec<f64> = group.energies().iter().map(|&e| e as f64 + shift).collect();
    expected.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let got = spectrum.block_eigenvalues(0);
    let worst = if got.len() == expected.len() {
        got.iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(ValidationCheck::new(
        format!("sector spectrum {}", label(lat)),
        worst,
        1e-10,
        format!("{} levels", got.len()),
    ))
}

pub fn check_echo(lat: &TorusLattice, opts: ValidationOptions) -> Result<ValidationCheck> {
    let group = LoopGroup::new(lat);
    let spectrum = DenseSpectrum::for_hamiltonian(0.0, lat)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..opts.samples {
        let beta0 = rng.gen_range(0.0..=1.5);
        let t = rng.gen_range(0.0..=10.0);
        let psi0 = ground_state(&GroundStateSpec::new(beta0)?, &group);
        let quench = Quench::new(&psi0, &group)?;
        let dense0 = DenseState::from_loop_state(&psi0, &group)?;
        let echo = spectrum.evolve(&dense0, t).inner(&dense0).norm_sqr();
        worst = worst.max((quench.echo(t) - echo).abs());
        let moved = DenseState::from_loop_state(&quench.state_at(t), &group)?;
        worst = worst.max((1.0 - moved.inner(&spectrum.evolve(&dense0, t)).norm()).abs());
    }
    Ok(ValidationCheck::new(
        format!("echo and evolution {}", label(lat)),
        worst,
        1e-10,
        format!("{} samples", opts.samples),
    ))
}

pub fn check_ggm_bipartitions(lat: &TorusLattice, opts: ValidationOptions) -> Result<ValidationCheck> {
    let group = LoopGroup::new(lat);
    let mut worst = 0.0f64;
    let mut count = 0;
    for pair in random_evolved_states(&group, opts.samples, opts.seed)? {
        let scan = ggm_all_bipartitions(&pair.dense)?;
        count = scan.count;
        worst = worst.max((scan.ggm - ggm(&pair.loop_state, &group)).abs());
    }
    Ok(ValidationCheck::new(
        format!("GGM vs all bipartitions {}", label(lat)),
        worst,
        1e-10,
        format!("{} samples x {count} bipartitions", opts.samples),
    ))
}

/// Largest off-diagonal entry over every 1- and 2-site reduced state.
pub fn max_local_coherence(psi: &DenseState) -> Result<f64> {
    let n = psi.num_spins();
    let mut worst = 0.0f64;
    for i in 0..n {
        worst = worst.max(reduced_density_matrix(psi, &[i])?.max_off_diagonal());
        for j in i + 1..n {
            worst = worst.max(reduced_density_matrix(psi, &[i, j])?.max_off_diagonal());
        }
    }
    Ok(worst)
}

pub fn check_diagonality(lat: &TorusLattice, opts: ValidationOptions) -> Result<ValidationCheck> {
    let group = LoopGroup::new(lat);
    let samples = opts.samples.min(10);
    let mut worst = 0.0f64;
    for pair in random_evolved_states(&group, samples, opts.seed ^ 0xd1a6)? {
        worst = worst.max(max_local_coherence(&pair.dense)?);
    }
    Ok(ValidationCheck::new(
        format!("local diagonality {}", label(lat)),
        worst,
        1e-12,
        format!("{samples} samples"),
    ))
}

pub fn check_schmidt(lat: &TorusLattice, opts: ValidationOptions) -> Result<ValidationCheck> {
    let group = LoopGroup::new(lat);
    let bip = lat.equal_block_bipartition();
    let samples = opts.samples.min(10);
    let mut worst = 0.0f64;
    for pair in random_evolved_states(&group, samples, opts.seed ^ 0x5c41)? {
        let ours = block_schmidt(&pair.loop_state, &group, &bip)?;
        let reference = schmidt_values(&pair.dense, &bip)?;
        for (k, r) in reference.iter().enumerate() {
            let a = ours.coefficients().get(k).copied().unwrap_or(0.0);
            worst = worst.max((a - r).abs());
        }
    }
    Ok(ValidationCheck::new(
        format!("block Schmidt vs SVD {}", label(lat)),
        worst,
        1e-9,
        format!("{samples} samples"),
    ))
}

pub fn check_negativity(lat: &TorusLattice, opts: ValidationOptions) -> Result<ValidationCheck> {
    let group = LoopGroup::new(lat);
    let bip = lat.equal_block_bipartition();
    let samples = opts.samples.min(5);
    let mut worst = 0.0f64;
    for pair in random_evolved_states(&group, samples, opts.seed ^ 0x10e6)? {
        let pure = log_negativity_pure(&block_schmidt(&pair.loop_state, &group, &bip)?);
        let mixed = log_negativity_mixed(&DenseDensityMatrix::pure(&pair.dense), &bip)?;
        worst = worst.max((pure - mixed).abs());
    }
    Ok(ValidationCheck::new(
        format!("pure vs mixed negativity {}", label(lat)),
        worst,
        1e-9,
        format!("{samples} samples"),
    ))
}

/// Every cross-check on the 2×2 and 2×3 tori.
pub fn run_validation(opts: ValidationOptions) -> Result<Vec<ValidationCheck>> {
    let small = build_lattice(2, 2)?;
    let medium = build_lattice(2, 3)?;
    let mut checks = Vec::new();
    for lat in [&small, &medium] {
        checks.push(check_ground_states(lat)?);
        checks.push(check_sector_spectrum(lat)?);
        checks.push(check_echo(lat, opts)?);
        checks.push(check_ggm_bipartitions(lat, opts)?);
        checks.push(check_diagonality(lat, opts)?);
        checks.push(check_schmidt(lat, opts)?);
    }
    checks.push(check_negativity(&small, opts)?);
    Ok(checks)
}
