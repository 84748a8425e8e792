//! Dense complex tensors with named-axis contraction, matrix views, and the
//! residual metrics used by every verifier in this crate.
//!
//! Storage is row-major over the shape. Gate tensors follow the convention
//! (out-left, out-right, in-left, in-right), with time flowing upward.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape {shape:?} holds {expected} entries, got {got}")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entry at flat index {0}")]
    NonFinite(usize),
    #[error("contraction pair ({axis_a},{axis_b}) joins dimensions {dim_a} and {dim_b}")]
    ContractionMismatch {
        axis_a: usize,
        axis_b: usize,
        dim_a: usize,
        dim_b: usize,
    },
    #[error("axis {0} out of range for rank-{1} tensor")]
    AxisOutOfRange(usize, usize),
    #[error("axis {0} appears more than once in a view")]
    OverlappingAxes(usize),
    #[error("view must cover every axis exactly once: got {got:?} of rank {rank}")]
    IncompleteView { got: Vec<usize>, rank: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("expected a rank-2 tensor, got rank {0}")]
    NotMatrix(usize),
}

/// Dense multi-index array of complex amplitudes, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::ShapeMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TensorError::NonFinite(i));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn scalar(z: Complex64) -> Self {
        Self {
            shape: vec![],
            data: vec![z],
        }
    }

    /// Identity matrix as a rank-2 tensor.
    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        t
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Self {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for ax in (0..self.shape.len().saturating_sub(1)).rev() {
            s[ax] = s[ax + 1] * self.shape[ax + 1];
        }
        s
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        debug_assert_eq!(idx.len(), self.shape.len());
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[flat]
    }

    pub fn set(&mut self, idx: &[usize], z: Complex64) {
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[flat] = z;
    }

    /// Reinterpret under a new shape with the same entry count.
    pub fn reshape(&self, shape: Vec<usize>) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(TensorError::ShapeMismatch {
                shape,
                expected,
                got: self.data.len(),
            });
        }
        Ok(Self {
            shape,
            data: self.data.clone(),
        })
    }

    /// Axis permutation: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self, TensorError> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        for &p in perm {
            if p >= rank {
                return Err(TensorError::AxisOutOfRange(p, rank));
            }
            if seen[p] {
                return Err(TensorError::OverlappingAxes(p));
            }
            seen[p] = true;
        }
        if perm.len() != rank {
            return Err(TensorError::IncompleteView {
                got: perm.to_vec(),
                rank,
            });
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = self.strides();
        let mut out = Self::zeros(new_shape.clone());
        let mut idx = vec![0usize; rank];
        for slot in 0..self.data.len() {
            let src: usize = idx
                .iter()
                .zip(perm)
                .map(|(&i, &p)| i * old_strides[p])
                .sum();
            out.data[slot] = self.data[src];
            for ax in (0..rank).rev() {
                idx[ax] += 1;
                if idx[ax] < new_shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Ok(out)
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|w| w * z).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        if self.shape != other.shape {
            return Err(TensorError::ShapeMismatch {
                shape: other.shape.clone(),
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Kronecker-style outer product: result shape = self.shape ++ other.shape.
    pub fn outer(&self, other: &Self) -> Self {
        let mut shape = self.shape.clone();
        shape.extend_from_slice(&other.shape);
        let mut data = Vec::with_capacity(self.len() * other.len());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Self { shape, data }
    }

    pub(crate) fn to_dmatrix(&self) -> Result<DMatrix<Complex64>, TensorError> {
        if self.rank() != 2 {
            return Err(TensorError::NotMatrix(self.rank()));
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        Ok(DMatrix::from_fn(r, c, |i, j| self.data[i * c + j]))
    }

    pub(crate) fn from_dmatrix(m: &DMatrix<Complex64>) -> Self {
        let (r, c) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                data.push(m[(i, j)]);
            }
        }
        Self {
            shape: vec![r, c],
            data,
        }
    }
}

/// Contract `a` and `b` over the given (axis-of-a, axis-of-b) pairs.
///
/// The result carries the unpaired axes of `a` followed by the unpaired axes
/// of `b`, in their original order.
pub fn contract(
    a: &ComplexTensor,
    b: &ComplexTensor,
    pairs: &[(usize, usize)],
) -> Result<ComplexTensor, TensorError> {
    for &(ax_a, ax_b) in pairs {
        if ax_a >= a.rank() {
            return Err(TensorError::AxisOutOfRange(ax_a, a.rank()));
        }
        if ax_b >= b.rank() {
            return Err(TensorError::AxisOutOfRange(ax_b, b.rank()));
        }
        if a.shape[ax_a] != b.shape[ax_b] {
            return Err(TensorError::ContractionMismatch {
                axis_a: ax_a,
                axis_b: ax_b,
                dim_a: a.shape[ax_a],
                dim_b: b.shape[ax_b],
            });
        }
    }
    let mut seen_a = vec![false; a.rank()];
    let mut seen_b = vec![false; b.rank()];
    for &(ax_a, ax_b) in pairs {
        if seen_a[ax_a] {
            return Err(TensorError::OverlappingAxes(ax_a));
        }
        if seen_b[ax_b] {
            return Err(TensorError::OverlappingAxes(ax_b));
        }
        seen_a[ax_a] = true;
        seen_b[ax_b] = true;
    }

    let free_a: Vec<usize> = (0..a.rank()).filter(|ax| !seen_a[*ax]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|ax| !seen_b[*ax]).collect();

    // Reorder a as (free..., contracted...) and b as (contracted..., free...),
    // then multiply as matrices.
    let mut perm_a = free_a.clone();
    perm_a.extend(pairs.iter().map(|p| p.0));
    let mut perm_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    perm_b.extend(free_b.clone());

    let pa = a.permute(&perm_a)?;
    let pb = b.permute(&perm_b)?;

    let m: usize = free_a.iter().map(|&ax| a.shape[ax]).product();
    let k: usize = pairs.iter().map(|&(ax, _)| a.shape[ax]).product();
    let n: usize = free_b.iter().map(|&ax| b.shape[ax]).product();

    let ma = DMatrix::from_row_slice(m, k, &pa.data);
    let mb = DMatrix::from_row_slice(k, n, &pb.data);
    let prod = ma * mb;

    let mut shape: Vec<usize> = free_a.iter().map(|&ax| a.shape[ax]).collect();
    shape.extend(free_b.iter().map(|&ax| b.shape[ax]));
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            data.push(prod[(i, j)]);
        }
    }
    ComplexTensor::new(shape, data)
}

/// A grouping of tensor axes into matrix rows and columns.
#[derive(Debug, Clone)]
pub struct MatrixView {
    pub row_axes: Vec<usize>,
    pub col_axes: Vec<usize>,
}

impl MatrixView {
    pub fn new(row_axes: Vec<usize>, col_axes: Vec<usize>) -> Self {
        Self { row_axes, col_axes }
    }

    fn validate(&self, rank: usize) -> Result<(), TensorError> {
        let mut seen = vec![false; rank];
        for &ax in self.row_axes.iter().chain(&self.col_axes) {
            if ax >= rank {
                return Err(TensorError::AxisOutOfRange(ax, rank));
            }
            if seen[ax] {
                return Err(TensorError::OverlappingAxes(ax));
            }
            seen[ax] = true;
        }
        if self.row_axes.len() + self.col_axes.len() != rank {
            let mut got = self.row_axes.clone();
            got.extend(&self.col_axes);
            return Err(TensorError::IncompleteView { got, rank });
        }
        Ok(())
    }
}

/// Flatten a tensor to the rank-2 matrix selected by `view`.
pub fn as_matrix(t: &ComplexTensor, view: &MatrixView) -> Result<ComplexTensor, TensorError> {
    view.validate(t.rank())?;
    let mut perm = view.row_axes.clone();
    perm.extend(&view.col_axes);
    let p = t.permute(&perm)?;
    let rows: usize = view.row_axes.iter().map(|&ax| t.shape()[ax]).product();
    let cols: usize = view.col_axes.iter().map(|&ax| t.shape()[ax]).product();
    p.reshape(vec![rows, cols])
}

/// Invert `as_matrix`: scatter a rank-2 tensor back into the original layout.
pub fn from_matrix(
    m: &ComplexTensor,
    view: &MatrixView,
    shape: &[usize],
) -> Result<ComplexTensor, TensorError> {
    view.validate(shape.len())?;
    let grouped_shape: Vec<usize> = view
        .row_axes
        .iter()
        .chain(&view.col_axes)
        .map(|&ax| shape[ax])
        .collect();
    let g = m.reshape(grouped_shape)?;
    // g's axis k corresponds to original axis (row_axes ++ col_axes)[k];
    // invert that permutation.
    let fwd: Vec<usize> = view.row_axes.iter().chain(&view.col_axes).copied().collect();
    let mut inv = vec![0usize; fwd.len()];
    for (k, &ax) in fwd.iter().enumerate() {
        inv[ax] = k;
    }
    g.permute(&inv)
}

/// Conjugate transpose with respect to a view, restored to tensor layout.
///
/// The result has row and column axis groups exchanged in place, so it can be
/// contracted exactly where the original tensor stood.
pub fn dagger(t: &ComplexTensor, view: &MatrixView) -> Result<ComplexTensor, TensorError> {
    let m = as_matrix(t, view)?;
    let md = m.to_dmatrix()?.adjoint();
    let flipped = MatrixView::new(view.col_axes.clone(), view.row_axes.clone());
    from_matrix(&ComplexTensor::from_dmatrix(&md), &flipped, t.shape())
}

/// max(‖M†M − 1‖_F, ‖MM† − 1‖_F) for a square rank-2 tensor; zero iff unitary.
pub fn unitarity_residual(m: &ComplexTensor) -> Result<f64, TensorError> {
    let dm = m.to_dmatrix()?;
    if dm.nrows() != dm.ncols() {
        return Err(TensorError::NotSquare {
            rows: dm.nrows(),
            cols: dm.ncols(),
        });
    }
    Ok(unitarity_residual_dmatrix(&dm))
}

pub(crate) fn unitarity_residual_dmatrix(dm: &DMatrix<Complex64>) -> f64 {
    let n = dm.nrows();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let r1 = (dm.adjoint() * dm - &eye).norm();
    let r2 = (dm * dm.adjoint() - &eye).norm();
    r1.max(r2)
}

/// Singular values in descending order; length = min(rows, cols).
pub fn svd_values(m: &ComplexTensor) -> Result<Vec<f64>, TensorError> {
    let dm = m.to_dmatrix()?;
    let mut sv: Vec<f64> = dm.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn swap_tensor() -> ComplexTensor {
        ComplexTensor::from_fn(vec![2, 2, 2, 2], |ix| {
            if ix[0] == ix[3] && ix[1] == ix[2] {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    #[test]
    fn identity_composition() {
        let i2 = ComplexTensor::identity(2);
        let out = contract(&i2, &i2, &[(1, 0)]).unwrap();
        assert_eq!(out, i2);
    }

    #[test]
    fn vector_self_overlap_is_scalar_one() {
        let v = ComplexTensor::new(vec![2], vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let s = contract(&v, &v, &[(0, 0)]).unwrap();
        assert_eq!(s.shape(), &[] as &[usize]);
        assert!((s.data()[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn h0_squares_to_twice_identity() {
        let h0 = ComplexTensor::new(
            vec![2, 2],
            vec![c(1., 0.), c(1., 0.), c(1., 0.), c(-1., 0.)],
        )
        .unwrap();
        let prod = contract(&h0, &h0, &[(1, 0)]).unwrap();
        let twice_eye = ComplexTensor::identity(2).scale(c(2.0, 0.0));
        assert!(prod.add(&twice_eye.scale(c(-1.0, 0.0))).unwrap().norm() < 1e-12);
    }

    #[test]
    fn contraction_mismatch_names_axes() {
        let a = ComplexTensor::zeros(vec![2, 3]);
        let b = ComplexTensor::zeros(vec![2, 2]);
        let err = contract(&a, &b, &[(1, 0)]).unwrap_err();
        assert_eq!(
            err,
            TensorError::ContractionMismatch {
                axis_a: 1,
                axis_b: 0,
                dim_a: 3,
                dim_b: 2
            }
        );
    }

    #[test]
    fn swap_views_give_swap_matrix_both_ways() {
        let sw = swap_tensor();
        let m = as_matrix(&sw, &MatrixView::new(vec![0, 1], vec![2, 3])).unwrap();
        // SWAP matrix: |ab><ba|
        for a in 0..2 {
            for b in 0..2 {
                for cc in 0..2 {
                    for d in 0..2 {
                        let expect = if a == d && b == cc { 1.0 } else { 0.0 };
                        assert_eq!(m.get(&[a * 2 + b, cc * 2 + d]).re, expect);
                    }
                }
            }
        }
        // Regrouped rows=(0,2), cols=(1,3): enumerating entries by hand gives
        // M'[(a,c),(b,d)] = delta(a,d) delta(b,c), the same 4x4 permutation.
        let m2 = as_matrix(&sw, &MatrixView::new(vec![0, 2], vec![1, 3])).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for cc in 0..2 {
                    for d in 0..2 {
                        let expect = if a == d && b == cc { 1.0 } else { 0.0 };
                        assert_eq!(m2.get(&[a * 2 + cc, b * 2 + d]).re, expect);
                    }
                }
            }
        }
    }

    #[test]
    fn as_matrix_roundtrip_is_exact() {
        let t = ComplexTensor::from_fn(vec![2, 3, 2], |ix| {
            c((ix[0] * 31 + ix[1] * 7 + ix[2]) as f64, (ix[1]) as f64)
        });
        let view = MatrixView::new(vec![2, 0], vec![1]);
        let m = as_matrix(&t, &view).unwrap();
        let back = from_matrix(&m, &view, t.shape()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn overlapping_view_rejected() {
        let t = ComplexTensor::zeros(vec![2, 2]);
        let err = as_matrix(&t, &MatrixView::new(vec![0, 0], vec![1])).unwrap_err();
        assert_eq!(err, TensorError::OverlappingAxes(0));
    }

    #[test]
    fn unitarity_residual_examples() {
        assert!(unitarity_residual(&ComplexTensor::identity(4)).unwrap() < 1e-15);
        let d = ComplexTensor::new(
            vec![2, 2],
            vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0.5, 0.)],
        )
        .unwrap();
        let r = unitarity_residual(&d).unwrap();
        assert!((r - 0.75).abs() < 1e-12, "got {r}");
        let h0 = ComplexTensor::new(
            vec![2, 2],
            vec![c(1., 0.), c(1., 0.), c(1., 0.), c(-1., 0.)],
        )
        .unwrap()
        .scale(c(1.0 / 2f64.sqrt(), 0.0));
        assert!(unitarity_residual(&h0).unwrap() < 1e-12);
    }

    #[test]
    fn svd_of_identity_and_rank_one() {
        let sv = svd_values(&ComplexTensor::identity(2)).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-12 && (sv[1] - 1.0).abs() < 1e-12);
        // outer product of unit vectors
        let m = ComplexTensor::new(
            vec![2, 2],
            vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)],
        )
        .unwrap();
        let sv = svd_values(&m).unwrap();
        assert!((sv[0] - 1.0).abs() < 1e-12 && sv[1].abs() < 1e-12);
    }

    #[test]
    fn dagger_is_involution() {
        let t = ComplexTensor::from_fn(vec![2, 2, 2, 2], |ix| {
            c(
                (ix[0] + 2 * ix[1]) as f64 * 0.3 - 0.1 * (ix[2] as f64),
                (ix[3] + ix[1]) as f64 * 0.7,
            )
        });
        let view = MatrixView::new(vec![0, 1], vec![2, 3]);
        let dd = dagger(&dagger(&t, &view).unwrap(), &view).unwrap();
        assert!(t.add(&dd.scale(c(-1.0, 0.0))).unwrap().norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn contracting_identity_is_noop(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t = ComplexTensor::from_fn(vec![2, 3, 4], |_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let eye = ComplexTensor::identity(3);
            let out = contract(&t, &eye, &[(1, 0)]).unwrap();
            // result axes: (0, 2, new-1) -> permute back
            let back = out.permute(&[0, 2, 1]).unwrap();
            prop_assert!(t.add(&back.scale(c(-1.0, 0.0))).unwrap().norm() < 1e-12);
        }

        #[test]
        fn svd_frobenius_consistency(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = ComplexTensor::from_fn(vec![4, 5], |_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let sv = svd_values(&m).unwrap();
            let sum_sq: f64 = sv.iter().map(|s| s * s).sum();
            let frob = m.norm();
            prop_assert!((sum_sq - frob * frob).abs() < 1e-10 * frob * frob.max(1.0));
        }

        #[test]
        fn contraction_is_bilinear(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rnd = |shape: Vec<usize>| ComplexTensor::from_fn(shape, |_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let a = rnd(vec![2, 3]);
            let b = rnd(vec![2, 3]);
            let x = rnd(vec![3, 2]);
            let alpha = c(0.6, -1.2);
            let lhs = contract(&a.scale(alpha).add(&b).unwrap(), &x, &[(1, 0)]).unwrap();
            let rhs = contract(&a, &x, &[(1, 0)]).unwrap().scale(alpha)
                .add(&contract(&b, &x, &[(1, 0)]).unwrap()).unwrap();
            prop_assert!(lhs.add(&rhs.scale(c(-1.0, 0.0))).unwrap().norm() < 1e-12);
        }
    }
}
