//! Exact simulation of the toric code with a nonlinear magnetic
//! perturbation: ground states, quench dynamics, entanglement and
//! open-system evolution.
//!
//! The closed-system pipeline never builds the `2^N` Hilbert space. Every
//! state it touches is a superposition of closed-loop flip patterns, indexed
//! by the `2^{N_v-1}` elements of the loop group, and the post-quench
//! Hamiltonian is diagonalized by a Walsh-Hadamard transform on that index.
//! The [`oracle`] module redoes everything densely for small tori.

pub mod entanglement;
pub mod error;
pub mod groundstate;
pub mod lattice;
pub mod linalg;
pub mod lindblad;
pub mod loopgroup;
pub mod oracle;
pub mod quench;
pub mod scalar;
pub mod sweep;

pub use entanglement::{
    block_schmidt, ggm, log_negativity_mixed, log_negativity_pure, single_site_probabilities,
    time_average, SchmidtPlan, SchmidtSpectrum, TimeSeries,
};
pub use error::{Error, Result};
pub use groundstate::{ground_state, verify_ground_state, GroundStateSpec, BETA_CRITICAL};
pub use lattice::{build_lattice, Bipartition, TorusLattice};
pub use loopgroup::{
    walsh_transform, CharacterIndex, GroupElement, LoopGroup, LoopStateVector, SpinConfig,
};
pub use quench::{
    evolve, loschmidt_echo, rate_function, EchoSeries, Quench, QuenchProtocol, TimeGrid,
};
pub use scalar::Real;

pub type LoopState = LoopStateVector<f64>;
pub type LoopState32 = LoopStateVector<f32>;
pub type Schmidt64 = SchmidtSpectrum<f64>;
pub type Schmidt32 = SchmidtSpectrum<f32>;
pub type GroundStateSpec64 = GroundStateSpec<f64>;
