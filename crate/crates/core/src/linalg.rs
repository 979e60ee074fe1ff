//! Small dense kernels.
//!
//! [`singular_values`] is a one-sided Jacobi SVD, generic over [`Real`] so
//! the Schmidt decomposition works in either precision and keeps full
//! relative accuracy on tiny singular values. The Hermitian eigensolves
//! used by the oracle and the Lindblad path go through LAPACK, split into
//! the connected components of the matrix's nonzero pattern first.

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::{Complex, Complex64};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Singular values of a `rows × cols` complex matrix given in row-major
/// order, sorted in descending order. Returns `min(rows, cols)` values.
pub fn singular_values<T: Real>(rows: usize, cols: usize, data: &[Complex<T>]) -> Vec<T> {
    assert_eq!(data.len(), rows * cols, "matrix data has the wrong length");
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // Orthogonalize the shorter dimension: columns of M if rows >= cols,
    // otherwise columns of M†.
    let (len, count) = if rows >= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let mut vecs: Vec<Vec<Complex<T>>> = (0..count)
        .map(|j| {
            (0..len)
                .map(|i| {
                    if rows >= cols {
                        data[i * cols + j]
                    } else {
                        data[j * cols + i].conj()
                    }
                })
                .collect()
        })
        .collect();

    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..count {
            for q in p + 1..count {
                let (left, right) = vecs.split_at_mut(q);
                let (u, v) = (&mut left[p], &mut right[0]);
                let alpha: T = u.iter().map(|x| x.norm_sqr()).sum();
                let beta: T = v.iter().map(|x| x.norm_sqr()).sum();
                let gamma = u
                    .iter()
                    .zip(v.iter())
                    .fold(Complex::zero(), |s, (a, b)| s + a.conj() * b);
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g == T::zero() {
                    continue;
                }
                rotated = true;
                // rotate (u, e^{-iφ} v) with a real Jacobi rotation
                let unit = gamma / g;
                let zeta = (beta - alpha) / (T::of(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for (a, b) in u.iter_mut().zip(v.iter_mut()) {
                    let bw = *b * unit.conj();
                    let (x, y) = (*a, bw);
                    *a = x * c - y * s;
                    *b = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values: Vec<T> = vecs
        .iter()
        .map(|v| v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt())
        .collect();
    values.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    values
}

/// Connected components of the graph with an edge `(i, j)` wherever
/// `m[i, j]` or `m[j, i]` is nonzero. Component members are sorted.
pub fn nonzero_components<A: Zero + PartialEq + Copy>(m: ArrayView2<'_, A>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for ((i, j), value) in m.indexed_iter() {
        if j > i && (*value != A::zero() || m[[j, i]] != A::zero()) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        if index[root] == usize::MAX {
            index[root] = components.len();
            components.push(Vec::new());
        }
        components[index[root]].push(i);
    }
    components
}

/// Largest `|m - m†|` entry.
pub fn hermitian_deviation(m: ArrayView2<'_, Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

/// All eigenvalues of a Hermitian matrix, ascending, solved blockwise over
/// the components of its nonzero pattern.
pub fn block_eigvalsh(m: ArrayView2<'_, Complex64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Numerical(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut values = Vec::with_capacity(m.nrows());
    for component in nonzero_components(m) {
        if component.len() == 1 {
            let i = component[0];
            values.push(m[[i, i]].re);
            continue;
        }
        let block = Array2::from_shape_fn((component.len(), component.len()), |(a, b)| {
            m[[component[a], component[b]]]
        });
        let eig = block
            .eigvalsh(UPLO::Lower)
            .map_err(|e| Error::Numerical(format!("Hermitian eigensolve failed: {e}")))?;
        values.extend(eig.iter().copied());
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::SVD;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        (0..rows * cols)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn jacobi_matches_lapack_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (rows, cols) in [(1, 1), (3, 3), (5, 2), (2, 7), (16, 16), (9, 30)] {
            let data = random_matrix(rows, cols, &mut rng);
            let ours = singular_values(rows, cols, &data);
            let m = Array2::from_shape_vec((rows, cols), data).unwrap();
            let (_, reference, _) = m.svd(false, false).unwrap();
            assert_eq!(ours.len(), reference.len());
            for (a, b) in ours.iter().zip(reference.iter()) {
                assert!(
                    (a - b).abs() < 1e-12 * reference[0].max(1.0),
                    "{rows}x{cols}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn jacobi_rank_deficient() {
        // rank one: outer product
        let u = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let v = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        let data: Vec<Complex64> = u
            .iter()
            .flat_map(|a| v.iter().map(move |b| a * b.conj()))
            .collect();
        let s = singular_values(2, 3, &data);
        assert!((s[0] - 1.0).abs() < 1e-15);
        assert!(s[1].abs() < 1e-15);
    }

    #[test]
    fn jacobi_single_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = random_matrix(6, 4, &mut rng);
        let single: Vec<Complex<f32>> = data
            .iter()
            .map(|c| Complex::new(c.re as f32, c.im as f32))
            .collect();
        let a = singular_values(6, 4, &data);
        let b = singular_values(6, 4, &single);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - *y as f64).abs() < 1e-5);
        }
    }

    #[test]
    fn components_and_block_eigenvalues() {
        let mut m = Array2::<Complex64>::zeros((5, 5));
        m[[0, 0]] = Complex64::new(1.0, 0.0);
        m[[0, 3]] = Complex64::new(0.0, 0.5);
        m[[3, 0]] = Complex64::new(0.0, -0.5);
        m[[3, 3]] = Complex64::new(1.0, 0.0);
        m[[1, 1]] = Complex64::new(-2.0, 0.0);
        m[[2, 4]] = Complex64::new(1.0, 0.0);
        m[[4, 2]] = Complex64::new(1.0, 0.0);
        let comps = nonzero_components(m.view());
        assert_eq!(comps, vec![vec![0, 3], vec![1], vec![2, 4]]);
        let values = block_eigvalsh(m.view()).unwrap();
        let expected = [-2.0, -1.0, 0.5, 1.0, 1.5];
        for (a, b) in values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(hermitian_deviation(m.view()), 0.0);
    }
}
