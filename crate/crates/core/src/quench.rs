//! Sudden quench `H(β₀) → H(0)` and the Loschmidt echo.
//!
//! In the loop sector the post-quench Hamiltonian is `-∑_v A_v` plus a
//! constant, diagonal in the Walsh basis. Evolving means transforming once,
//! multiplying by `e^{-i E_χ t}` and transforming back. The echo only needs
//! the spectral weights `|c_χ|²`, which are aggregated per energy level.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loopgroup::{walsh_hadamard_in_place, LoopGroup, LoopStateVector};
use crate::scalar::{phase, Real};

/// Echo values are floored here before taking the logarithm.
pub const ECHO_FLOOR: f64 = 1e-300;

/// Closed, uniformly spaced time grid `t_i, t_i + dt, …, t_f`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub ti: f64,
    pub tf: f64,
    pub dt: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            ti: 0.0,
            tf: 10.0,
            dt: 0.01,
        }
    }
}

impl TimeGrid {
    pub fn new(ti: f64, tf: f64, dt: f64) -> Result<Self> {
        let grid = Self { ti, tf, dt };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ti.is_finite() && self.tf.is_finite() && self.dt.is_finite()) {
            return Err(Error::Config("time grid must be finite".into()));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if self.tf <= self.ti {
            return Err(Error::Config(format!(
                "empty time grid [{}, {}]",
                self.ti, self.tf
            )));
        }
        Ok(())
    }

    /// Number of grid points, endpoints included.
    pub fn len(&self) -> usize {
        ((self.tf - self.ti) / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.ti + k as f64 * self.dt)
            .collect()
    }
}

/// Quench parameters. Only `β₁ = 0` is supported.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchProtocol {
    pub beta0: f64,
    pub beta1: f64,
    pub times: TimeGrid,
}

impl QuenchProtocol {
    pub fn new(beta0: f64, times: TimeGrid) -> Result<Self> {
        let protocol = Self {
            beta0,
            beta1: 0.0,
            times,
        };
        protocol.validate()?;
        Ok(protocol)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta0.is_finite() || self.beta0 < 0.0 {
            return Err(Error::Config(format!(
                "beta0 must be finite and non-negative, got {}",
                self.beta0
            )));
        }
        if self.beta1 != 0.0 {
            return Err(Error::Config(format!(
                "only quenches to beta1 = 0 are supported, got {}",
                self.beta1
            )));
        }
        self.times.validate()
    }
}

/// Walsh-basis decomposition of an initial state, reused for every time.
#[derive(Clone, Debug)]
pub struct Quench<'g, T> {
    group: &'g LoopGroup,
    coefficients: Vec<Complex<T>>,
    /// `(E, ∑_{E_χ = E} |c_χ|²)` for each energy level present.
    levels: Vec<(i32, T)>,
    energy_offset: i32,
}

impl<'g, T: Real> Quench<'g, T> {
    pub fn new(psi0: &LoopStateVector<T>, group: &'g LoopGroup) -> Result<Self> {
        if psi0.len() != group.order() {
            return Err(Error::Config(format!(
                "state has {} amplitudes, loop group has order {}",
                psi0.len(),
                group.order()
            )));
        }
        let mut coefficients = psi0.amps().to_vec();
        walsh_hadamard_in_place(&mut coefficients)?;

        let energies = group.energies();
        let energy_offset = -*energies.iter().min().expect("non-empty");
        let span = (energies.iter().max().expect("non-empty") + energy_offset) as usize + 1;
        let mut weights = vec![T::zero(); span];
        for (c, &e) in coefficients.iter().zip(energies) {
            weights[(e + energy_offset) as usize] =
                weights[(e + energy_offset) as usize] + c.norm_sqr();
        }
        let levels = weights
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > T::zero())
            .map(|(i, w)| (i as i32 - energy_offset, w))
            .collect();
        Ok(Self {
            group,
            coefficients,
            levels,
            energy_offset,
        })
    }

    pub fn group(&self) -> &LoopGroup {
        self.group
    }

    /// Spectral weight carried by each loop-sector energy level.
    pub fn levels(&self) -> &[(i32, T)] {
        &self.levels
    }

    /// `e^{-iHt}|ψ₀⟩` in the loop basis.
    pub fn state_at(&self, t: T) -> LoopStateVector<T> {
        let energies = self.group.energies();
        let emax = *energies.iter().max().expect("non-empty");
        let phases: Vec<Complex<T>> = (-self.energy_offset..=emax)
            .map(|e| phase(T::of(e as f64) * t))
            .collect();
        let mut amps: Vec<Complex<T>> = self
            .coefficients
            .iter()
            .zip(energies)
            .map(|(c, &e)| *c * phases[(e + self.energy_offset) as usize])
            .collect();
        walsh_hadamard_in_place(&mut amps).expect("power-of-two length");
        LoopStateVector::from_vec_unchecked(amps)
    }

    /// `⟨ψ₀|ψ_t⟩ = ∑_χ |c_χ|² e^{-i E_χ t}`.
    pub fn overlap(&self, t: T) -> Complex<T> {
        self.levels.iter().fold(Complex::zero(), |acc, &(e, w)| {
            acc + phase(T::of(e as f64) * t) * w
        })
    }

    /// `L(t) = |⟨ψ_t|ψ₀⟩|²`.
    pub fn echo(&self, t: T) -> T {
        self.overlap(t).norm_sqr()
    }

    pub fn echo_series(&self, times: &[f64], num_spins: usize) -> EchoSeries {
        let echo: Vec<f64> = times
            .iter()
            .map(|&t| self.echo(T::of(t)).as_f64())
            .collect();
        let rate = echo.iter().map(|&l| rate_function(l, num_spins)).collect();
        EchoSeries {
            times: times.to_vec(),
            echo,
            rate,
        }
    }
}

/// `e^{-iH(0)t}|ψ₀⟩`, global phase from the plaquette and unperturbed
/// star constants dropped.
pub fn evolve<T: Real>(
    psi0: &LoopStateVector<T>,
    t: T,
    group: &LoopGroup,
) -> Result<LoopStateVector<T>> {
    Ok(Quench::new(psi0, group)?.state_at(t))
}

pub fn loschmidt_echo<T: Real>(psi0: &LoopStateVector<T>, t: T, group: &LoopGroup) -> Result<T> {
    Ok(Quench::new(psi0, group)?.echo(t))
}

/// `Λ = ln(L)/N` with `L` floored at [`ECHO_FLOOR`]. Non-positive; the
/// DQPT literature's `-Λ` is [`EchoSeries::negated_rate`].
pub fn rate_function(echo: f64, num_spins: usize) -> f64 {
    echo.max(ECHO_FLOOR).ln() / num_spins as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct EchoSeries {
    pub times: Vec<f64>,
    pub echo: Vec<f64>,
    pub rate: Vec<f64>,
}

impl EchoSeries {
    pub fn negated_rate(&self) -> Vec<f64> {
        self.rate.iter().map(|r| -r).collect()
    }

    pub fn min_echo(&self) -> f64 {
        self.echo.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{ground_state, GroundStateSpec};
    use crate::lattice::build_lattice;
    use crate::loopgroup::GroupElement;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(order: usize, rng: &mut impl Rng) -> LoopStateVector<f64> {
        let amps: Vec<Complex<f64>> = (0..order)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        LoopStateVector::new(amps.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    #[test]
    fn grid_points() {
        let grid = TimeGrid::default();
        assert_eq!(grid.len(), 1001);
        let pts = grid.points();
        assert_eq!(pts[0], 0.0);
        assert!((pts[1000] - 10.0).abs() < 1e-12);
        assert!(TimeGrid::new(0.0, 0.0, 0.01).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn protocol_rejects_other_targets() {
        let mut p = QuenchProtocol::new(0.3, TimeGrid::default()).unwrap();
        p.beta1 = 0.2;
        assert!(p.validate().is_err());
        assert!(QuenchProtocol::new(-1.0, TimeGrid::default()).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let lat = build_lattice(2, 3).unwrap();
        let group = LoopGroup::new(&lat);
        let psi = random_state(group.order(), &mut ChaCha8Rng::seed_from_u64(1));
        let out = evolve(&psi, 0.0, &group).unwrap();
        for (a, b) in out.amps().iter().zip(psi.amps()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((loschmidt_echo(&psi, 0.0, &group).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn toric_ground_state_is_stationary() {
        let lat = build_lattice(2, 3).unwrap();
        let group = LoopGroup::new(&lat);
        let psi = ground_state(&GroundStateSpec::new(0.0f64).unwrap(), &group);
        let q = Quench::new(&psi, &group).unwrap();
        for t in [0.3, 1.7, 9.9] {
            assert!((q.state_at(t).inner(&psi).norm() - 1.0).abs() < 1e-12);
            assert!((q.echo(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dynamics_of_a_single_basis_state() {
        // |0…0⟩ spreads over the loop group and refocuses with period π/2
        // since all level spacings are multiples of 4.
        let lat = build_lattice(2, 2).unwrap();
        let group = LoopGroup::new(&lat);
        let delta = LoopStateVector::<f64>::basis(&group, GroupElement::IDENTITY);
        let q = Quench::new(&delta, &group).unwrap();
        assert!((q.echo(std::f64::consts::FRAC_PI_2) - 1.0).abs() < 1e-12);
        assert!(q.echo(0.4) < 1.0);
    }

    #[test]
    fn unitarity_and_composition() {
        let lat = build_lattice(3, 3).unwrap();
        let group = LoopGroup::new(&lat);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let psi = random_state(group.order(), &mut rng);
            let (t1, t2) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let a = evolve(&evolve(&psi, t1, &group).unwrap(), t2, &group).unwrap();
            let b = evolve(&psi, t1 + t2, &group).unwrap();
            assert!((a.norm() - 1.0).abs() < 1e-10);
            for (x, y) in a.amps().iter().zip(b.amps()) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn spectral_echo_matches_direct_overlap() {
        let lat = build_lattice(2, 4).unwrap();
        let group = LoopGroup::new(&lat);
        let psi = ground_state(&GroundStateSpec::new(0.8).unwrap(), &group);
        let q = Quench::new(&psi, &group).unwrap();
        for k in 0..50 {
            let t = 0.2 * k as f64;
            let direct = q.state_at(t).inner(&psi).norm_sqr();
            assert!((direct - q.echo(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn echo_in_single_precision() {
        let lat = build_lattice(2, 3).unwrap();
        let group = LoopGroup::new(&lat);
        let psi32 = ground_state(&GroundStateSpec::new(0.6f32).unwrap(), &group);
        let psi64 = ground_state(&GroundStateSpec::new(0.6f64).unwrap(), &group);
        let (q32, q64) = (
            Quench::new(&psi32, &group).unwrap(),
            Quench::new(&psi64, &group).unwrap(),
        );
        for t in [0.5f32, 1.1, 3.3] {
            assert!((q32.echo(t) as f64 - q64.echo(t as f64)).abs() < 1e-5);
        }
    }

    #[test]
    fn rate_function_values() {
        assert_eq!(rate_function(1.0, 28), 0.0);
        assert!((rate_function((-28f64).exp(), 28) + 1.0).abs() < 1e-12);
        let floored = rate_function(0.0, 28);
        assert!(floored.is_finite());
        assert!((floored - ECHO_FLOOR.ln() / 28.0).abs() < 1e-12);
        assert!((floored * 28.0 + 690.8).abs() < 0.1);
    }

    #[test]
    fn rejects_mismatched_state() {
        let group = LoopGroup::new(&build_lattice(2, 2).unwrap());
        let psi = LoopStateVector::<f64>::new(vec![Complex::new(1.0, 0.0); 16]).unwrap();
        assert!(Quench::new(&psi, &group).is_err());
    }
}
