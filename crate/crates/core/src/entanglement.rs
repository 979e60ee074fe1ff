//! Entanglement of loop-sector states: generalized geometric measure, block
//! Schmidt spectra and logarithmic negativity, plus time averaging.
//!
//! Reduced density matrices of loop-sector states are diagonal in the
//! computational basis, because no two loop configurations differ on a
//! single spin. Coarse-graining a diagonal state only merges eigenvalues, so
//! the largest eigenvalue over all bipartitions is attained on a single
//! site, and the GGM reduces to `1 - max_i max(p_i, 1 - p_i)`.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::{Complex, Complex64};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lattice::Bipartition;
use crate::linalg::{block_eigvalsh, hermitian_deviation, singular_values};
use crate::loopgroup::{LoopGroup, LoopStateVector};
use crate::oracle::DenseDensityMatrix;
use crate::scalar::{compensated_sum, Real};

/// Largest Schmidt block (rows or columns) the planner accepts.
pub const MAX_SCHMIDT_BLOCK: usize = 4096;

/// `p_i`: probability that spin `i` points up. The single-site reduced
/// state is `diag(p_i, 1 - p_i)`.
pub fn single_site_probabilities<T: Real>(psi: &LoopStateVector<T>, group: &LoopGroup) -> Vec<T> {
    let n = group.num_spins();
    let mut flipped = vec![T::zero(); n];
    for (a, &f) in psi.amps().iter().zip(group.flips()) {
        let p = a.norm_sqr();
        let mut bits = f;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            flipped[i] = flipped[i] + p;
            bits &= bits - 1;
        }
    }
    let total = psi.norm() * psi.norm();
    flipped.into_iter().map(|q| total - q).collect()
}

/// Generalized geometric measure from single-site spectra; lies in `[0, 1/2]`.
pub fn ggm<T: Real>(psi: &LoopStateVector<T>, group: &LoopGroup) -> T {
    ggm_from_probabilities(&single_site_probabilities(psi, group))
}

pub fn ggm_from_probabilities<T: Real>(p: &[T]) -> T {
    let largest = p
        .iter()
        .map(|&x| x.max(T::one() - x))
        .fold(T::zero(), T::max);
    T::one() - largest
}

/// Schmidt coefficients, descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum<T> {
    coefficients: Vec<T>,
}

impl<T: Real> SchmidtSpectrum<T> {
    /// Sorts the input; fails on negative or non-finite entries.
    pub fn new(mut coefficients: Vec<T>) -> Result<Self> {
        if coefficients
            .iter()
            .any(|c| !c.is_finite() || *c < T::zero())
        {
            return Err(Error::Numerical(
                "Schmidt coefficients must be finite and non-negative".into(),
            ));
        }
        coefficients.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    /// `∑ c_α²`, one for a normalized state.
    pub fn norm_sqr(&self) -> T {
        compensated_sum(self.coefficients.iter().map(|&c| c * c))
    }

    /// Number of coefficients above `tol`.
    pub fn rank(&self, tol: T) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }
}

/// `E_LN = log₂ (∑_α c_α)²`.
pub fn log_negativity_pure<T: Real>(s: &SchmidtSpectrum<T>) -> T {
    let sum: T = s.coefficients.iter().copied().sum();
    T::of(2.0) * sum.log2()
}

/// Precomputed block structure of the amplitude matrix `M[a, b]` for a
/// fixed lattice and bipartition.
///
/// Every group element contributes one entry at (its block-A pattern, its
/// block-B pattern). Rows and columns that never share an entry decouple,
/// so the singular values are those of the connected blocks.
#[derive(Clone, Debug)]
pub struct SchmidtPlan {
    blocks: Vec<SchmidtBlock>,
}

#[derive(Clone, Debug)]
struct SchmidtBlock {
    rows: usize,
    cols: usize,
    /// (group element, local row, local column)
    entries: Vec<(usize, usize, usize)>,
}

impl SchmidtPlan {
    pub fn new(group: &LoopGroup, bip: &Bipartition) -> Result<Self> {
        let (mask_a, mask_b) = (bip.mask_a(), bip.mask_b());
        let mut row_ids: HashMap<u64, usize> = HashMap::new();
        let mut col_ids: HashMap<u64, usize> = HashMap::new();
        let mut coords = Vec::with_capacity(group.order());
        for &f in group.flips() {
            let next = row_ids.len();
            let r = *row_ids.entry(f & mask_a).or_insert(next);
            let next = col_ids.len();
            let c = *col_ids.entry(f & mask_b).or_insert(next);
            coords.push((r, c));
        }

        // union rows (0..R) with columns (R..R+C)
        let rows = row_ids.len();
        let mut parent: Vec<usize> = (0..rows + col_ids.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(r, c) in &coords {
            let (a, b) = (find(&mut parent, r), find(&mut parent, rows + c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }

        let mut block_of_root: HashMap<usize, usize> = HashMap::new();
        let mut blocks: Vec<SchmidtBlock> = Vec::new();
        let mut local_row: HashMap<usize, usize> = HashMap::new();
        let mut local_col: HashMap<usize, usize> = HashMap::new();
        for (g, &(r, c)) in coords.iter().enumerate() {
            let root = find(&mut parent, r);
            let next = blocks.len();
            let b = *block_of_root.entry(root).or_insert(next);
            if b == blocks.len() {
                blocks.push(SchmidtBlock {
                    rows: 0,
                    cols: 0,
                    entries: Vec::new(),
                });
            }
            let block = &mut blocks[b];
            let lr = *local_row.entry(r).or_insert_with(|| {
                block.rows += 1;
                block.rows - 1
            });
            let lc = *local_col.entry(c).or_insert_with(|| {
                block.cols += 1;
                block.cols - 1
            });
            block.entries.push((g, lr, lc));
        }
        if let Some(b) = blocks
            .iter()
            .find(|b| b.rows.min(b.cols) > MAX_SCHMIDT_BLOCK)
        {
            return Err(Error::TooLarge(format!(
                "Schmidt block of {}x{} exceeds budget",
                b.rows, b.cols
            )));
        }
        Ok(Self { blocks })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Largest block as `(rows, cols)`.
    pub fn largest_block(&self) -> (usize, usize) {
        self.blocks
            .iter()
            .map(|b| (b.rows, b.cols))
            .max_by_key(|&(r, c)| r * c)
            .unwrap_or((0, 0))
    }

    pub fn spectrum<T: Real>(&self, psi: &LoopStateVector<T>) -> SchmidtSpectrum<T> {
        let amps = psi.amps();
        let mut coefficients = Vec::new();
        for block in &self.blocks {
            if block.entries.len() == 1 {
                coefficients.push(amps[block.entries[0].0].norm());
                continue;
            }
            let mut m = vec![Complex::<T>::zero(); block.rows * block.cols];
            for &(g, r, c) in &block.entries {
                m[r * block.cols + c] = amps[g];
            }
            coefficients.extend(singular_values(block.rows, block.cols, &m));
        }
        SchmidtSpectrum::new(coefficients).expect("singular values are non-negative")
    }
}

/// Schmidt spectrum of `psi` across `bip`.
pub fn block_schmidt<T: Real>(
    psi: &LoopStateVector<T>,
    group: &LoopGroup,
    bip: &Bipartition,
) -> Result<SchmidtSpectrum<T>> {
    Ok(SchmidtPlan::new(group, bip)?.spectrum(psi))
}

/// Partial transpose over the spins of block A.
pub fn partial_transpose(rho: &DenseDensityMatrix, bip: &Bipartition) -> Array2<Complex64> {
    let m = rho.entries();
    let (mask_a, mask_b) = (bip.mask_a() as usize, bip.mask_b() as usize);
    Array2::from_shape_fn(m.raw_dim(), |(r, c)| {
        let r2 = (r & mask_b) | (c & mask_a);
        let c2 = (c & mask_b) | (r & mask_a);
        m[[r2, c2]]
    })
}

/// `E_LN(ρ) = log₂ ‖ρ^{T_A}‖₁`.
pub fn log_negativity_mixed(rho: &DenseDensityMatrix, bip: &Bipartition) -> Result<f64> {
    if rho.num_spins() != bip.num_spins() {
        return Err(Error::Config(format!(
            "density matrix has {} spins, bipartition {}",
            rho.num_spins(),
            bip.num_spins()
        )));
    }
    let deviation = hermitian_deviation(rho.entries().view());
    if deviation > 1e-8 {
        return Err(Error::NonHermitian(deviation));
    }
    let pt = partial_transpose(rho, bip);
    let trace_norm: f64 = block_eigvalsh(pt.view())?.iter().map(|l| l.abs()).sum();
    let ln = trace_norm.log2();
    if ln < 0.0 {
        if ln < -1e-10 {
            log::warn!("log-negativity {ln:e} below zero, clamped");
        }
        return Ok(0.0);
    }
    Ok(ln)
}

/// Values sampled on strictly increasing times.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Config(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("times must be strictly increasing".into()));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Unweighted mean over the grid points.
pub fn time_average(series: &TimeSeries) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Config("cannot average an empty series".into()));
    }
    Ok(series.values.iter().sum::<f64>() / series.len() as f64)
}
