//! Small complex-vector helpers used by the channel and MAC layers: combining
//! gains, column normalization, and the zero-forcing combiner.

use num_complex::Complex64;

use crate::error::{Result, SgfError};

/// Conjugated inner product `v^H h`.
pub fn cdot(v: &[Complex64], h: &[Complex64]) -> Complex64 {
    debug_assert_eq!(v.len(), h.len());
    v.iter().zip(h).map(|(a, b)| a.conj() * b).sum()
}

/// `|v^H h|^2`, the power gain of channel `h` through combiner `v`.
pub fn combining_gain(v: &[Complex64], h: &[Complex64]) -> f64 {
    cdot(v, h).norm_sqr()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Scale `v` to unit Euclidean norm. Degenerate all-zero vectors fall back to
/// the first basis vector so downstream invariants hold.
pub fn normalize(v: &mut [Complex64]) {
    let n = norm_sqr(v).sqrt();
    if n < 1e-12 {
        for z in v.iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        v[0] = Complex64::new(1.0, 0.0);
        return;
    }
    for z in v.iter_mut() {
        *z /= n;
    }
}

/// Invert a square complex matrix (row-major) by Gauss-Jordan elimination with
/// partial pivoting. Sized for the small per-slot systems (K x K, K <= 8).
pub fn invert(a: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let n = a.len();
    let mut m: Vec<Vec<Complex64>> = a.iter().map(|row| {
        debug_assert_eq!(row.len(), n);
        row.clone()
    }).collect();
    let mut inv: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .norm_sqr()
                    .partial_cmp(&m[j][col].norm_sqr())
                    .unwrap()
            })
            .unwrap();
        if m[pivot][col].norm_sqr() < 1e-300 {
            return Err(SgfError::Numerical("singular matrix in combiner solve".into()));
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);

        let scale = m[col][col];
        for j in 0..n {
            m[col][j] /= scale;
            inv[col][j] /= scale;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row][col];
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                let mj = m[col][j];
                let ij = inv[col][j];
                m[row][j] -= factor * mj;
                inv[row][j] -= factor * ij;
            }
        }
    }
    Ok(inv)
}

/// Zero-forcing receive combiner for channel columns `h_k` (each of length A,
/// K <= A): `V = H (H^H H)^{-1}` with unit-normalized columns. Column k then
/// nulls every other user's channel while keeping gain on its own.
pub fn zero_forcing(channels: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let k = channels.len();
    assert!(k >= 1, "zero_forcing needs at least one channel");
    let a = channels[0].len();
    assert!(k <= a, "zero-forcing requires K <= A");

    // Gram matrix G[i][j] = h_i^H h_j
    let gram: Vec<Vec<Complex64>> = (0..k)
        .map(|i| (0..k).map(|j| cdot(&channels[i], &channels[j])).collect())
        .collect();
    let ginv = invert(&gram)?;

    let mut columns = Vec::with_capacity(k);
    for col in 0..k {
        let mut v = vec![Complex64::new(0.0, 0.0); a];
        for (j, h) in channels.iter().enumerate() {
            let w = ginv[j][col];
            for (vi, hi) in v.iter_mut().zip(h) {
                *vi += hi * w;
            }
        }
        normalize(&mut v);
        columns.push(v);
    }
    Ok(columns)
}
