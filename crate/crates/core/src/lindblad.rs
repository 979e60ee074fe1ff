//! Open-system evolution under a thermal repeated-interaction bath.
//!
//! ```text
//! dρ/dt = -i[H(0), ρ] + D(ρ)
//! D(ρ)  = 2k ∑_i ∑_{l=0,1} p_l [2 η_i^{l+1} ρ η_i^l - {η_i^l η_i^{l+1}, ρ}]
//! η^α   = (σ^x + i(-1)^α σ^y) / 2,   superscripts mod 2
//! p_l   = exp((-1)^l B/T_E) / (exp(B/T_E) + exp(-B/T_E))
//! ```
//!
//! `η^1` lowers `|↑⟩ → |↓⟩` at rate `p₀` and `η^0` raises at rate `p₁`, so
//! each site relaxes to `p(↑) = p₁`, `p(↓) = p₀`.
//!
//! Starting from a loop-sector pure state, `ρ[r, c]` is only ever nonzero
//! when `r ⊕ c` is a loop flip pattern: the star terms shift the offset by
//! a generator and both the plaquettes and the dissipator preserve it. So
//! the density matrix is stored as `|G|` offset diagonals of length `2^N`
//! instead of `4^N` entries. [`dissipator`] is the dense reference.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::entanglement::{log_negativity_mixed, TimeSeries};
use crate::error::{Error, Result};
use crate::groundstate::{ground_state, GroundStateSpec};
use crate::lattice::{Bipartition, TorusLattice};
use crate::linalg::hermitian_deviation;
use crate::loopgroup::{LoopGroup, LoopStateVector};
use crate::oracle::{self, DenseDensityMatrix};
use crate::quench::TimeGrid;

/// Densities are aborted once `|tr ρ - 1|` exceeds this.
pub const TRACE_ABORT: f64 = 1e-6;

const DEFAULT_K: f64 = 0.05;
const DEFAULT_RATIO: f64 = 10.0;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Coupling strength `k`.
    pub k: f64,
    /// `B / T_E`.
    pub ratio: f64,
}

impl Default for BathParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            ratio: DEFAULT_RATIO,
        }
    }
}

impl BathParams {
    pub fn new(k: f64, ratio: f64) -> Result<Self> {
        let bath = Self { k, ratio };
        bath.validate()?;
        Ok(bath)
    }

    /// From field strength `B` and bath temperature `T_E`.
    pub fn from_field(k: f64, field: f64, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::Config(format!(
                "bath temperature must be positive, got {temperature}"
            )));
        }
        Self::new(k, field / temperature)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::Config(format!(
                "bath coupling must be finite and non-negative, got {}",
                self.k
            )));
        }
        if !self.ratio.is_finite() {
            return Err(Error::Config(format!(
                "bath field ratio must be finite, got {}",
                self.ratio
            )));
        }
        Ok(())
    }

    pub fn p0(&self) -> f64 {
        1.0 / (1.0 + (-2.0 * self.ratio).exp())
    }

    pub fn p1(&self) -> f64 {
        1.0 / (1.0 + (2.0 * self.ratio).exp())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt_ode: f64,
    pub resymmetrize_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt_ode: 1e-3,
            resymmetrize_every: 100,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ode > 0.0) || !self.dt_ode.is_finite() {
            return Err(Error::Config(format!(
                "ODE step must be positive, got {}",
                self.dt_ode
            )));
        }
        Ok(())
    }
}

/// Dense `D(ρ)` summed over all `num_spins` sites.
pub fn dissipator(
    rho: &DenseDensityMatrix,
    bath: &BathParams,
    num_spins: usize,
) -> Result<Array2<Complex64>> {
    let m = rho.entries();
    let deviation = hermitian_deviation(m.view());
    if deviation > 1e-10 {
        return Err(Error::NonHermitian(deviation));
    }
    if rho.dim() != 1 << num_spins {
        return Err(Error::Config(format!(
            "density matrix of dimension {} for {num_spins} spins",
            rho.dim()
        )));
    }
    let dim = rho.dim();
    let (p0, p1) = (bath.p0(), bath.p1());
    let mut out = Array2::<Complex64>::zeros((dim, dim));
    for i in 0..num_spins {
        let bit = 1usize << i;
        // σ⁻ρσ⁺ moves (r, c) up-up entries to down-down; σ⁺ρσ⁻ the reverse
        for r in 0..dim {
            for c in 0..dim {
                let (ru, cu) = (r >> i & 1 == 0, c >> i & 1 == 0);
                let mut v = Complex64::new(0.0, 0.0);
                if !ru && !cu {
                    v += 2.0 * p0 * m[[r ^ bit, c ^ bit]];
                }
                if ru && cu {
                    v += 2.0 * p1 * m[[r | bit, c | bit]];
                }
                let up_count = ru as u8 + cu as u8;
                let loss = p0 * up_count as f64 + p1 * (2 - up_count) as f64;
                v -= loss * m[[r, c]];
                out[[r, c]] += 2.0 * bath.k * v;
            }
        }
    }
    Ok(out)
}

/// Density matrix supported on offsets `r ⊕ c` inside the loop group.
#[derive(Clone, Debug)]
pub struct LoopSectorDensity {
    dim: usize,
    flips: Vec<usize>,
    /// `entries[d·dim + r] = ρ[r, r ⊕ flip(d)]`.
    entries: Vec<Complex64>,
}

impl LoopSectorDensity {
    pub fn pure(psi: &LoopStateVector<f64>, group: &LoopGroup) -> Result<Self> {
        oracle_guard(group.num_spins())?;
        let dim = 1usize << group.num_spins();
        let flips: Vec<usize> = group.flips().iter().map(|&f| f as usize).collect();
        let amps = psi.amps();
        let mut entries = vec![Complex64::new(0.0, 0.0); flips.len() * dim];
        for (a, &fa) in flips.iter().enumerate() {
            for (b, &cb) in amps.iter().enumerate() {
                entries[(a ^ b) * dim + fa] = amps[a] * cb.conj();
            }
        }
        Ok(Self {
            dim,
            flips,
            entries,
        })
    }

    /// Fails if `rho` has weight on an offset outside the loop group.
    pub fn from_dense(rho: &DenseDensityMatrix, group: &LoopGroup) -> Result<Self> {
        let dim = rho.dim();
        if dim != 1 << group.num_spins() {
            return Err(Error::Config(format!(
                "density matrix of dimension {dim} for {} spins",
                group.num_spins()
            )));
        }
        let flips: Vec<usize> = group.flips().iter().map(|&f| f as usize).collect();
        let m = rho.entries();
        let mut entries = vec![Complex64::new(0.0, 0.0); flips.len() * dim];
        for (d, &f) in flips.iter().enumerate() {
            for r in 0..dim {
                entries[d * dim + r] = m[[r, r ^ f]];
            }
        }
        let captured: f64 = entries.iter().map(|x| x.norm_sqr()).sum();
        if (captured - rho.purity()).abs() > 1e-12 {
            return Err(Error::Config(
                "density matrix has coherences outside the loop sector".into(),
            ));
        }
        Ok(Self {
            dim,
            flips,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_offsets(&self) -> usize {
        self.flips.len()
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.flips
            .iter()
            .position(|&f| f == r ^ c)
            .map(|d| self.entries[d * self.dim + r])
            .unwrap_or_default()
    }

    pub fn to_dense(&self) -> DenseDensityMatrix {
        let mut m = Array2::<Complex64>::zeros((self.dim, self.dim));
        for (d, &f) in self.flips.iter().enumerate() {
            for r in 0..self.dim {
                m[[r, r ^ f]] = self.entries[d * self.dim + r];
            }
        }
        DenseDensityMatrix::new_unchecked(m)
    }

    pub fn trace(&self) -> f64 {
        self.entries[..self.dim].iter().map(|x| x.re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Largest `|ρ - ρ†|` entry.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (d, &f) in self.flips.iter().enumerate() {
            let row = &self.entries[d * self.dim..(d + 1) * self.dim];
            for r in 0..self.dim {
                worst = worst.max((row[r] - row[r ^ f].conj()).norm());
            }
        }
        worst
    }

    /// Replace `ρ` by `(ρ + ρ†)/2`.
    pub fn hermitize(&mut self) {
        for (d, &f) in self.flips.iter().enumerate() {
            let row = &mut self.entries[d * self.dim..(d + 1) * self.dim];
            for r in 0..self.dim {
                let c = r ^ f;
                if c >= r {
                    let avg = (row[r] + row[c].conj()) * 0.5;
                    row[r] = avg;
                    row[c] = avg.conj();
                }
            }
        }
    }

    /// Probability that spin `i` points up.
    pub fn up_probability(&self, i: usize) -> f64 {
        self.entries[..self.dim]
            .iter()
            .enumerate()
            .filter(|(r, _)| r >> i & 1 == 0)
            .map(|(_, x)| x.re)
            .sum()
    }

    /// Smallest eigenvalue. ρ is block diagonal over the cosets `r ⊕ G`.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let order = self.flips.len();
        let mut seen = vec![false; self.dim];
        let mut lowest = f64::INFINITY;
        for start in 0..self.dim {
            if seen[start] {
                continue;
            }
            let members: Vec<usize> = self.flips.iter().map(|&f| start ^ f).collect();
            for &m in &members {
                seen[m] = true;
            }
            // ρ[start⊕f_a, start⊕f_b] sits at offset a⊕b
            let block = Array2::from_shape_fn((order, order), |(a, b)| {
                self.entries[(a ^ b) * self.dim + members[a]]
            });
            if block.iter().all(|x| x.norm() == 0.0) {
                lowest = lowest.min(0.0);
                continue;
            }
            let values = crate::linalg::block_eigvalsh(block.view())?;
            lowest = lowest.min(values[0]);
        }
        Ok(lowest)
    }
}

fn oracle_guard(num_spins: usize) -> Result<()> {
    if num_spins > oracle::MAX_ORACLE_SPINS {
        return Err(Error::TooLarge(format!(
            "open-system evolution supports at most {} spins, got {num_spins}",
            oracle::MAX_ORACLE_SPINS
        )));
    }
    Ok(())
}

/// `L(ρ) = -i[H(0), ρ] + D(ρ)` acting on [`LoopSectorDensity`] storage.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    dim: usize,
    num_spins: usize,
    flips: Vec<usize>,
    /// Basis-state flip mask and group-index shift of each star.
    stars: Vec<(usize, usize)>,
    diagonal: Vec<f64>,
    bath: BathParams,
    coherent: bool,
}

impl Lindbladian {
    pub fn new(lat: &TorusLattice, group: &LoopGroup, bath: BathParams) -> Result<Self> {
        bath.validate()?;
        oracle_guard(lat.num_spins())?;
        let generators = lat.num_generators();
        let flips: Vec<usize> = group.flips().iter().map(|&f| f as usize).collect();
        let stars = oracle::star_flips(lat)
            .into_iter()
            .enumerate()
            .map(|(v, mask)| {
                (
                    mask,
                    if v < generators {
                        1usize << v
                    } else {
                        (1usize << generators) - 1
                    },
                )
            })
            .collect();
        Ok(Self {
            dim: 1 << lat.num_spins(),
            num_spins: lat.num_spins(),
            flips,
            stars,
            diagonal: oracle::hamiltonian_diagonal(0.0, lat)?,
            bath,
            coherent: true,
        })
    }

    /// `D` alone, without the Hamiltonian part.
    pub fn dissipative(lat: &TorusLattice, group: &LoopGroup, bath: BathParams) -> Result<Self> {
        Ok(Self {
            coherent: false,
            ..Self::new(lat, group, bath)?
        })
    }

    pub fn bath(&self) -> &BathParams {
        &self.bath
    }

    /// `out = L(x)` with both in offset storage.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let dim = self.dim;
        let i_unit = Complex64::new(0.0, 1.0);
        let k2 = 2.0 * self.bath.k;
        let (p0, p1) = (self.bath.p0(), self.bath.p1());
        for (d, &f) in self.flips.iter().enumerate() {
            let row = &x[d * dim..(d + 1) * dim];
            let target = &mut out[d * dim..(d + 1) * dim];
            for r in 0..dim {
                let mut v = Complex64::new(0.0, 0.0);
                if self.coherent {
                    // -i (H_diag[r] - H_diag[c]) ρ[r, c]
                    v -= i_unit * (self.diagonal[r] - self.diagonal[r ^ f]) * row[r];
                    // stars enter H with a minus sign: +i (ρ[r⊕s, c] - ρ[r, c⊕s])
                    let mut hop = Complex64::new(0.0, 0.0);
                    for &(mask, shift) in &self.stars {
                        let ds = d ^ shift;
                        let shifted = &x[ds * dim..(ds + 1) * dim];
                        hop += shifted[r ^ mask] - shifted[r];
                    }
                    v += i_unit * hop;
                }
                if k2 != 0.0 {
                    let mut diss = Complex64::new(0.0, 0.0);
                    for i in 0..self.num_spins {
                        if f >> i & 1 == 1 {
                            diss -= row[r];
                        } else if r >> i & 1 == 1 {
                            diss += 2.0 * p0 * row[r ^ 1 << i] - 2.0 * p1 * row[r];
                        } else {
                            diss += 2.0 * p1 * row[r | 1 << i] - 2.0 * p0 * row[r];
                        }
                    }
                    v += k2 * diss;
                }
                target[r] = v;
            }
        }
    }

    /// One classical RK4 step of size `h`.
    pub fn rk4_step(&self, rho: &mut LoopSectorDensity, h: f64, scratch: &mut Rk4Scratch) {
        let n = rho.entries.len();
        scratch.resize(n);
        let Rk4Scratch {
            k1,
            k2,
            k3,
            k4,
            tmp,
        } = scratch;
        self.apply(&rho.entries, k1);
        for j in 0..n {
            tmp[j] = rho.entries[j] + k1[j] * (h / 2.0);
        }
        self.apply(tmp, k2);
        for j in 0..n {
            tmp[j] = rho.entries[j] + k2[j] * (h / 2.0);
        }
        self.apply(tmp, k3);
        for j in 0..n {
            tmp[j] = rho.entries[j] + k3[j] * h;
        }
        self.apply(tmp, k4);
        for j in 0..n {
            rho.entries[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Rk4Scratch {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4Scratch {
    fn resize(&mut self, n: usize) {
        for v in [
            &mut self.k1,
            &mut self.k2,
            &mut self.k3,
            &mut self.k4,
            &mut self.tmp,
        ] {
            v.resize(n, Complex64::new(0.0, 0.0));
        }
    }
}

/// Integrates from grid point to grid point, yielding `(t, ρ(t))` starting
/// with the initial state.
pub struct LindbladTrajectory {
    generator: Lindbladian,
    rho: LoopSectorDensity,
    times: Vec<f64>,
    next: usize,
    cfg: IntegratorConfig,
    steps: usize,
    scratch: Rk4Scratch,
    max_trace_drift: f64,
    max_hermitian_deviation: f64,
    failed: bool,
}

impl LindbladTrajectory {
    pub fn new(
        generator: Lindbladian,
        rho: LoopSectorDensity,
        cfg: IntegratorConfig,
        times: &TimeGrid,
    ) -> Result<Self> {
        cfg.validate()?;
        times.validate()?;
        if (rho.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!(
                "initial density matrix has trace {}",
                rho.trace()
            )));
        }
        Ok(Self {
            generator,
            rho,
            times: times.points(),
            next: 0,
            cfg,
            steps: 0,
            scratch: Rk4Scratch::default(),
            max_trace_drift: 0.0,
            max_hermitian_deviation: 0.0,
            failed: false,
        })
    }

    pub fn state(&self) -> &LoopSectorDensity {
        &self.rho
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.max_trace_drift
    }

    pub fn max_hermitian_deviation(&self) -> f64 {
        self.max_hermitian_deviation
    }

    /// Advance to the next grid time; returns it, or `None` at the end.
    pub fn advance(&mut self) -> Result<Option<f64>> {
        if self.failed || self.next >= self.times.len() {
            return Ok(None);
        }
        let t = self.times[self.next];
        if self.next > 0 {
            let span = t - self.times[self.next - 1];
            let substeps = ((span / self.cfg.dt_ode).round() as usize).max(1);
            let h = span / substeps as f64;
            for _ in 0..substeps {
                self.generator.rk4_step(&mut self.rho, h, &mut self.scratch);
                self.steps += 1;
                if self.cfg.resymmetrize_every > 0 && self.steps % self.cfg.resymmetrize_every == 0
                {
                    self.max_hermitian_deviation = self
                        .max_hermitian_deviation
                        .max(self.rho.hermitian_deviation());
                    self.rho.hermitize();
                }
            }
        }
        let drift = (self.rho.trace() - 1.0).abs();
        self.max_trace_drift = self.max_trace_drift.max(drift);
        if !drift.is_finite() || drift > TRACE_ABORT {
            self.failed = true;
            return Err(Error::Numerical(format!(
                "trace drift {drift:.3e} at t={t} exceeds {TRACE_ABORT:.0e}; reduce the ODE step (currently {})",
                self.cfg.dt_ode
            )));
        }
        self.next += 1;
        Ok(Some(t))
    }
}

impl Iterator for LindbladTrajectory {
    type Item = Result<(f64, DenseDensityMatrix)>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.advance() {
            Ok(Some(t)) => Some(Ok((t, self.rho.to_dense()))),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    }
}

/// Trajectory of `ρ₀` under `H(0)` and the bath on the grid `times`.
pub fn lindblad_evolve(
    rho0: &DenseDensityMatrix,
    bath: &BathParams,
    cfg: &IntegratorConfig,
    times: &TimeGrid,
    lat: &TorusLattice,
) -> Result<LindbladTrajectory> {
    let group = LoopGroup::new(lat);
    let rho = LoopSectorDensity::from_dense(rho0, &group)?;
    LindbladTrajectory::new(Lindbladian::new(lat, &group, *bath)?, rho, *cfg, times)
}

#[derive(Clone, Debug)]
pub struct NoisyLnSeries {
    pub series: TimeSeries,
    pub max_trace_drift: f64,
    pub max_hermitian_deviation: f64,
    /// Smallest eigenvalue of ρ seen on the grid.
    pub min_eigenvalue: f64,
    pub final_purity: f64,
}

/// Block log-negativity of `ρ(t)` started from `|GS(β₀)⟩⟨GS(β₀)|`.
pub fn noisy_ln_series(
    beta0: f64,
    bath: &BathParams,
    cfg: &IntegratorConfig,
    lat: &TorusLattice,
    bip: &Bipartition,
    times: &TimeGrid,
) -> Result<NoisyLnSeries> {
    let group = LoopGroup::new(lat);
    let psi0 = ground_state(&GroundStateSpec::new(beta0)?, &group);
    let rho = LoopSectorDensity::pure(&psi0, &group)?;
    let mut trajectory =
        LindbladTrajectory::new(Lindbladian::new(lat, &group, *bath)?, rho, *cfg, times)?;
    let mut ts = Vec::with_capacity(times.len());
    let mut values = Vec::with_capacity(times.len());
    let mut min_eigenvalue = f64::INFINITY;
    while let Some(t) = trajectory.advance()? {
        let state = trajectory.state();
        min_eigenvalue = min_eigenvalue.min(state.min_eigenvalue()?);
        let ln = log_negativity_mixed(&state.to_dense(), bip)?;
        if !ln.is_finite() {
            return Err(Error::Numerical(format!(
                "log-negativity is {ln} at t={t}, beta0={beta0}"
            )));
        }
        ts.push(t);
        values.push(ln);
    }
    if min_eigenvalue < -1e-6 {
        log::warn!("density matrix eigenvalue {min_eigenvalue:.3e} at beta0={beta0}");
    }
    Ok(NoisyLnSeries {
        series: TimeSeries::new(ts, values)?,
        max_trace_drift: trajectory.max_trace_drift(),
        max_hermitian_deviation: trajectory.max_hermitian_deviation(),
        min_eigenvalue,
        final_purity: trajectory.state().purity(),
    })
}
