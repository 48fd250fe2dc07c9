//! Batched dense linear algebra on a strided contiguous layout.
//!
//! A batch stores `count` equally sized objects back to back, `stride`
//! elements apart. Matrices are column-major within their slot. Every
//! operation treats entries independently and processes a single entry
//! sequentially, so results do not depend on how entries are spread over
//! worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StridedMatrixBatch {
    count: usize,
    dim: usize,
    stride: usize,
    data: Vec<f64>,
}

impl StridedMatrixBatch {
    pub fn zeros(count: usize, dim: usize) -> Self {
        Self::with_stride(count, dim, dim * dim).expect("dim^2 is a valid stride")
    }

    pub fn with_stride(count: usize, dim: usize, stride: usize) -> Result<Self> {
        if stride < dim * dim {
            return Err(Error::Shape(format!("stride {stride} < dim^2 = {}", dim * dim)));
        }
        Ok(Self {
            count,
            dim,
            stride,
            data: vec![0.0; count * stride],
        })
    }

    pub fn from_vec(count: usize, dim: usize, stride: usize, data: Vec<f64>) -> Result<Self> {
        if stride < dim * dim || data.len() != count * stride {
            return Err(Error::Shape(format!(
                "buffer of length {} does not hold {count} matrices of order {dim} at stride {stride}",
                data.len()
            )));
        }
        Ok(Self {
            count,
            dim,
            stride,
            data,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Column-major storage of entry `k` (length `dim * dim`).
    pub fn matrix(&self, k: usize) -> &[f64] {
        let off = k * self.stride;
        &self.data[off..off + self.dim * self.dim]
    }

    pub fn matrix_mut(&mut self, k: usize) -> &mut [f64] {
        let off = k * self.stride;
        &mut self.data[off..off + self.dim * self.dim]
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[k * self.stride + j * self.dim + i]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[k * self.stride + j * self.dim + i] = v;
    }

    pub(crate) fn slots_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.stride.max(1))
    }

    pub(crate) fn par_slots_mut(&mut self) -> rayon::slice::ChunksExactMut<'_, f64> {
        self.data.par_chunks_exact_mut(self.stride.max(1))
    }

    pub(crate) fn par_slots(&self) -> rayon::slice::ChunksExact<'_, f64> {
        self.data.par_chunks_exact(self.stride.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StridedVectorBatch {
    count: usize,
    dim: usize,
    stride: usize,
    data: Vec<f64>,
}

impl StridedVectorBatch {
    pub fn zeros(count: usize, dim: usize) -> Self {
        Self::with_stride(count, dim, dim).expect("dim is a valid stride")
    }

    pub fn with_stride(count: usize, dim: usize, stride: usize) -> Result<Self> {
        if stride < dim {
            return Err(Error::Shape(format!("stride {stride} < dim {dim}")));
        }
        Ok(Self {
            count,
            dim,
            stride,
            data: vec![0.0; count * stride],
        })
    }

    pub fn from_vec(count: usize, dim: usize, stride: usize, data: Vec<f64>) -> Result<Self> {
        if stride < dim || data.len() != count * stride {
            return Err(Error::Shape(format!(
                "buffer of length {} does not hold {count} vectors of length {dim} at stride {stride}",
                data.len()
            )));
        }
        Ok(Self {
            count,
            dim,
            stride,
            data,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let off = k * self.stride;
        &self.data[off..off + self.dim]
    }

    pub fn vector_mut(&mut self, k: usize) -> &mut [f64] {
        let off = k * self.stride;
        &mut self.data[off..off + self.dim]
    }

    pub(crate) fn slots_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.stride.max(1))
    }

    pub(crate) fn par_slots_mut(&mut self) -> rayon::slice::ChunksExactMut<'_, f64> {
        self.data.par_chunks_exact_mut(self.stride.max(1))
    }

    pub(crate) fn par_slots(&self) -> rayon::slice::ChunksExact<'_, f64> {
        self.data.par_chunks_exact(self.stride.max(1))
    }
}

/// One scalar per batch entry.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchScalars(pub Vec<f64>);

impl BatchScalars {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// In-place lower Cholesky factor of one column-major matrix of order `n`.
/// On failure returns the offending pivot row.
pub fn potrf_lower(a: &mut [f64], n: usize) -> std::result::Result<(), usize> {
    for j in 0..n {
        let (done, rest) = a.split_at_mut(j * n);
        let col = &mut rest[..n];
        for k in 0..j {
            let lk = &done[k * n..(k + 1) * n];
            let ljk = lk[j];
            if ljk != 0.0 {
                for (c, &l) in col[j..].iter_mut().zip(&lk[j..]) {
                    *c -= ljk * l;
                }
            }
        }
        let d = col[j];
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let r = d.sqrt();
        col[j] = r;
        let inv = 1.0 / r;
        for c in &mut col[j + 1..] {
            *c *= inv;
        }
    }
    Ok(())
}

/// Solve `L x = b` in place, `L` column-major lower triangular of order `n`.
/// On failure returns the row with a zero diagonal.
pub fn trsv_lower(l: &[f64], n: usize, x: &mut [f64]) -> std::result::Result<(), usize> {
    for j in 0..n {
        let col = &l[j * n..(j + 1) * n];
        let d = col[j];
        if d == 0.0 || !d.is_finite() {
            return Err(j);
        }
        let xj = x[j] / d;
        x[j] = xj;
        if xj != 0.0 {
            for (xi, &lij) in x[j + 1..n].iter_mut().zip(&col[j + 1..]) {
                *xi -= xj * lij;
            }
        }
    }
    Ok(())
}

/// Inner product accumulated in ascending index order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Factor every entry in place. The lower triangle of each entry is read;
/// the strict upper triangle is left untouched.
pub fn batch_potrf(a: &mut StridedMatrixBatch) -> Result<()> {
    let n = a.dim;
    if n == 0 {
        return Ok(());
    }
    let failure = a
        .par_slots_mut()
        .enumerate()
        .filter_map(|(k, slot)| potrf_lower(&mut slot[..n * n], n).err().map(|p| (k, p)))
        .min();
    match failure {
        Some((index, pivot)) => Err(Error::NotPositiveDefinite { index, pivot }),
        None => Ok(()),
    }
}

fn check_pair(l: &StridedMatrixBatch, b: &StridedVectorBatch) -> Result<()> {
    if l.count != b.count || l.dim != b.dim {
        return Err(Error::Shape(format!(
            "matrix batch {}x({}x{}) vs vector batch {}x{}",
            l.count, l.dim, l.dim, b.count, b.dim
        )));
    }
    Ok(())
}

/// Forward substitution per entry, overwriting `b` with the solution.
pub fn batch_trsv_in_place(l: &StridedMatrixBatch, b: &mut StridedVectorBatch) -> Result<()> {
    check_pair(l, b)?;
    let n = l.dim;
    if n == 0 {
        return Ok(());
    }
    let failure = l
        .par_slots()
        .zip(b.par_slots_mut())
        .enumerate()
        .filter_map(|(k, (ls, xs))| trsv_lower(&ls[..n * n], n, &mut xs[..n]).err().map(|r| (k, r)))
        .min();
    match failure {
        Some((index, row)) => Err(Error::Singular { index, row }),
        None => Ok(()),
    }
}

/// Forward substitution per entry, returning the solutions.
pub fn batch_trsv(l: &StridedMatrixBatch, b: &StridedVectorBatch) -> Result<StridedVectorBatch> {
    let mut x = b.clone();
    batch_trsv_in_place(l, &mut x)?;
    Ok(x)
}

pub fn batch_dot(a: &StridedVectorBatch, b: &StridedVectorBatch) -> Result<BatchScalars> {
    if a.count != b.count || a.dim != b.dim {
        return Err(Error::Shape(format!(
            "vector batches {}x{} and {}x{}",
            a.count, a.dim, b.count, b.dim
        )));
    }
    let n = a.dim;
    if n == 0 {
        return Ok(BatchScalars(vec![0.0; a.count]));
    }
    let values = a
        .par_slots()
        .zip(b.par_slots())
        .map(|(x, y)| dot(&x[..n], &y[..n]))
        .collect();
    Ok(BatchScalars(values))
}

/// `sum_i ln L_ii`, i.e. half the log-determinant of `L L^T`.
pub fn half_log_det(l: &[f64], n: usize) -> Result<f64> {
    let mut s = 0.0;
    for i in 0..n {
        let d = l[i * n + i];
        if !(d > 0.0) {
            return Err(Error::Domain(format!("diagonal entry {i} of factor is {d}")));
        }
        s += d.ln();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn identity_batch_factors_to_identity() {
        let mut a = StridedMatrixBatch::zeros(3, 4);
        for k in 0..3 {
            for i in 0..4 {
                a.set(k, i, i, 1.0);
            }
        }
        let want = a.clone();
        batch_potrf(&mut a).unwrap();
        assert_eq!(a, want);
    }

    #[test]
    fn hand_cholesky() {
        let mut a = StridedMatrixBatch::from_vec(1, 2, 4, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        batch_potrf(&mut a).unwrap();
        assert_eq!(a.get(0, 0, 0), 2.0);
        assert_eq!(a.get(0, 1, 0), 1.0);
        assert!((a.get(0, 1, 1) - SQRT2).abs() < 1e-15);
        // upper triangle untouched
        assert_eq!(a.get(0, 0, 1), 2.0);
    }

    #[test]
    fn non_pd_entry_is_reported() {
        let mut a = StridedMatrixBatch::from_vec(
            3,
            2,
            4,
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 0.0, 0.0, -1.0],
        )
        .unwrap();
        let err = batch_potrf(&mut a).unwrap_err();
        assert_eq!(err, Error::NotPositiveDefinite { index: 1, pivot: 1 });
    }

    #[test]
    fn hand_forward_substitution() {
        let l = StridedMatrixBatch::from_vec(1, 2, 4, vec![2.0, 1.0, 0.0, SQRT2]).unwrap();
        let b = StridedVectorBatch::from_vec(1, 2, 2, vec![2.0, 1.0 + SQRT2]).unwrap();
        let x = batch_trsv(&l, &b).unwrap();
        assert!((x.vector(0)[0] - 1.0).abs() < 1e-15);
        assert!((x.vector(0)[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_solve_is_noop() {
        let mut l = StridedMatrixBatch::zeros(2, 3);
        for k in 0..2 {
            for i in 0..3 {
                l.set(k, i, i, 1.0);
            }
        }
        let b = StridedVectorBatch::from_vec(2, 3, 3, vec![1.0, -2.0, 3.5, 0.0, 7.0, 1e-3]).unwrap();
        assert_eq!(batch_trsv(&l, &b).unwrap(), b);
    }

    #[test]
    fn singular_factor_is_reported() {
        let l = StridedMatrixBatch::from_vec(2, 2, 4, vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.5, 0.0, 0.0]).unwrap();
        let b = StridedVectorBatch::zeros(2, 2);
        assert_eq!(
            batch_trsv(&l, &b).unwrap_err(),
            Error::Singular { index: 1, row: 1 }
        );
    }

    #[test]
    fn dot_examples() {
        let e1 = StridedVectorBatch::from_vec(1, 3, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(batch_dot(&e1, &e1).unwrap().values(), &[1.0]);
        let a = StridedVectorBatch::from_vec(1, 3, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let b = StridedVectorBatch::from_vec(1, 3, 3, vec![4.0, 5.0, 6.0]).unwrap();
        assert_eq!(batch_dot(&a, &b).unwrap().values(), &[32.0]);
        let c = StridedVectorBatch::zeros(2, 3);
        assert!(matches!(batch_dot(&a, &c), Err(Error::Shape(_))));
    }

    #[test]
    fn half_log_det_examples() {
        assert_eq!(half_log_det(&[1.0, 0.0, 0.0, 1.0], 2).unwrap(), 0.0);
        let v = half_log_det(&[2.0, 1.0, 0.0, SQRT2], 2).unwrap();
        assert!((v - 1.5 * 2f64.ln()).abs() < 1e-15);
        assert!(half_log_det(&[1.0, 0.0, 0.0, 0.0], 2).is_err());
    }

    #[test]
    fn padded_stride_leaves_padding_alone() {
        let mut a = StridedMatrixBatch::with_stride(2, 1, 3).unwrap();
        a.as_mut_slice().copy_from_slice(&[9.0, -1.0, -1.0, 16.0, -1.0, -1.0]);
        batch_potrf(&mut a).unwrap();
        assert_eq!(a.as_slice(), &[3.0, -1.0, -1.0, 4.0, -1.0, -1.0]);
    }

    #[test]
    fn bad_shapes() {
        assert!(StridedMatrixBatch::with_stride(1, 3, 8).is_err());
        assert!(StridedVectorBatch::from_vec(2, 3, 3, vec![0.0; 5]).is_err());
    }
}
