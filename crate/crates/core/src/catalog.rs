//! Biunitary building blocks: complex Hadamard matrices, two-site gates,
//! quantum crosses, unitary error bases, quantum Latin squares, and solvable
//! tensors, together with their verifiers.
//!
//! Every generator here is paired with a residual-reporting verifier; the
//! verifier, not the construction, is the contract of record.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tensor::{
    as_matrix, contract, unitarity_residual, ComplexTensor, MatrixView, TensorError,
};

/// Default tolerance for every pass/fail decision in the crate.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("matrix is not a complex Hadamard matrix: modulus residual {modulus:.3e}, unitarity residual {unitarity:.3e}")]
    NotHadamard { modulus: f64, unitarity: f64 },
    #[error("component dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("gate tensor has shape {0:?}, expected {1:?}")]
    BadGateShape(Vec<usize>, Vec<usize>),
    #[error("entry modulus {0} is not 1")]
    NotUnimodular(f64),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

// ---------------------------------------------------------------------------
// Complex Hadamard matrices
// ---------------------------------------------------------------------------

/// A q x q matrix with unimodular entries and H†H = q·1.
#[derive(Debug, Clone, PartialEq)]
pub struct ChmMatrix {
    q: usize,
    entries: ComplexTensor,
}

#[derive(Debug, Clone, Copy)]
pub struct ChmReport {
    pub modulus_residual: f64,
    pub unitarity_residual: f64,
    pub pass: bool,
}

impl ChmMatrix {
    /// Wrap a candidate matrix, refusing anything that fails `verify_chm`.
    pub fn new(entries: ComplexTensor) -> Result<Self, CatalogError> {
        Self::with_tolerance(entries, DEFAULT_TOL)
    }

    pub fn with_tolerance(entries: ComplexTensor, tol: f64) -> Result<Self, CatalogError> {
        let report = verify_chm(&entries, tol)?;
        if !report.pass {
            return Err(CatalogError::NotHadamard {
                modulus: report.modulus_residual,
                unitarity: report.unitarity_residual,
            });
        }
        let q = entries.shape()[0];
        Ok(Self { q, entries })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn entries(&self) -> &ComplexTensor {
        &self.entries
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.entries.get(&[a, b])
    }

    /// H/sqrt(q), a plain unitary.
    pub fn normalized(&self) -> ComplexTensor {
        self.entries.scale(c(1.0 / (self.q as f64).sqrt(), 0.0))
    }
}

/// Residuals of the CHM axioms for a square matrix: unit-modulus entries and
/// H†H = q·1 (checked as unitarity of H/sqrt(q)).
pub fn verify_chm(entries: &ComplexTensor, tol: f64) -> Result<ChmReport, CatalogError> {
    if entries.rank() != 2 {
        return Err(CatalogError::Tensor(TensorError::NotMatrix(entries.rank())));
    }
    let (r, cdim) = (entries.shape()[0], entries.shape()[1]);
    if r != cdim {
        return Err(CatalogError::Tensor(TensorError::NotSquare {
            rows: r,
            cols: cdim,
        }));
    }
    let modulus_residual = entries
        .data()
        .iter()
        .map(|z| (z.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let scaled = entries.scale(c(1.0 / (r as f64).sqrt(), 0.0));
    let unitarity = unitarity_residual(&scaled)?;
    Ok(ChmReport {
        modulus_residual,
        unitarity_residual: unitarity,
        pass: modulus_residual < tol && unitarity < tol,
    })
}

/// Fourier matrix, entries ω^{jk} with ω = exp(2πi/q).
pub fn fourier_chm(q: usize) -> Result<ChmMatrix, CatalogError> {
    if q < 2 {
        return Err(CatalogError::DimensionTooSmall(q));
    }
    let entries = ComplexTensor::from_fn(vec![q, q], |ix| {
        cis(2.0 * PI * (ix[0] * ix[1]) as f64 / q as f64)
    });
    ChmMatrix::new(entries)
}

/// The pair of 2x2 Hadamard matrices H0 and H1(φ).
pub fn paper_chm_pair(phi: f64) -> (ChmMatrix, ChmMatrix) {
    let h0 = ComplexTensor::new(
        vec![2, 2],
        vec![c(1., 0.), c(1., 0.), c(1., 0.), c(-1., 0.)],
    )
    .unwrap();
    let h1 = ComplexTensor::new(
        vec![2, 2],
        vec![cis(phi), c(1., 0.), c(1., 0.), -cis(-phi)],
    )
    .unwrap();
    (
        ChmMatrix::new(h0).expect("H0 is Hadamard"),
        ChmMatrix::new(h1).expect("H1 is Hadamard for every phi"),
    )
}

pub fn h0() -> ChmMatrix {
    paper_chm_pair(0.0).0
}

// ---------------------------------------------------------------------------
// Two-site gates
// ---------------------------------------------------------------------------

/// A two-site unitary with independent local dimensions.
///
/// Tensor axes are ordered (out-left, out-right, in-left, in-right); time
/// flows upward.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate2 {
    d_left: usize,
    d_right: usize,
    tensor: ComplexTensor,
}

impl Gate2 {
    pub fn from_tensor(tensor: ComplexTensor) -> Result<Self, CatalogError> {
        let s = tensor.shape().to_vec();
        if s.len() != 4 || s[0] != s[2] || s[1] != s[3] {
            return Err(CatalogError::BadGateShape(
                s.clone(),
                vec![s.first().copied().unwrap_or(0); 4],
            ));
        }
        Ok(Self {
            d_left: s[0],
            d_right: s[1],
            tensor,
        })
    }

    /// Build from a (dl·dr) x (dl·dr) matrix in the product basis.
    pub fn from_matrix(dl: usize, dr: usize, m: &ComplexTensor) -> Result<Self, CatalogError> {
        let t = m.reshape(vec![dl, dr, dl, dr]).map_err(CatalogError::Tensor)?;
        Self::from_tensor(t)
    }

    pub fn d_left(&self) -> usize {
        self.d_left
    }

    pub fn d_right(&self) -> usize {
        self.d_right
    }

    /// Total dimension dl·dr of the underlying matrix.
    pub fn dim(&self) -> usize {
        self.d_left * self.d_right
    }

    pub fn tensor(&self) -> &ComplexTensor {
        &self.tensor
    }

    /// The gate as a (dl·dr)² matrix, rows = outputs.
    pub fn matrix(&self) -> ComplexTensor {
        as_matrix(&self.tensor, &MatrixView::new(vec![0, 1], vec![2, 3])).unwrap()
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.matrix()).unwrap()
    }

    /// Matrix transpose, reshaped back to a gate.
    pub fn transpose(&self) -> Gate2 {
        Gate2::from_tensor(self.tensor.permute(&[2, 3, 0, 1]).unwrap()).unwrap()
    }

    /// Hermitian conjugate as a gate.
    pub fn dagger(&self) -> Gate2 {
        Gate2::from_tensor(self.tensor.conj().permute(&[2, 3, 0, 1]).unwrap()).unwrap()
    }

    pub fn entry(&self, out_l: usize, out_r: usize, in_l: usize, in_r: usize) -> Complex64 {
        self.tensor.get(&[out_l, out_r, in_l, in_r])
    }
}

/// SWAP on q ⊗ q.
pub fn swap_gate(q: usize) -> Gate2 {
    Gate2::from_tensor(ComplexTensor::from_fn(vec![q, q, q, q], |ix| {
        if ix[0] == ix[3] && ix[1] == ix[2] {
            c(1., 0.)
        } else {
            c(0., 0.)
        }
    }))
    .unwrap()
}

/// Identity gate on q ⊗ q.
pub fn identity_gate(q: usize) -> Gate2 {
    Gate2::from_tensor(ComplexTensor::from_fn(vec![q, q, q, q], |ix| {
        if ix[0] == ix[2] && ix[1] == ix[3] {
            c(1., 0.)
        } else {
            c(0., 0.)
        }
    }))
    .unwrap()
}

/// CNOT with the control on the left wire.
pub fn cnot_gate() -> Gate2 {
    Gate2::from_tensor(ComplexTensor::from_fn(vec![2, 2, 2, 2], |ix| {
        let (a, b, cc, d) = (ix[0], ix[1], ix[2], ix[3]);
        if a == cc && b == (cc + d) % 2 {
            c(1., 0.)
        } else {
            c(0., 0.)
        }
    }))
    .unwrap()
}

/// Dual-unitary gate from four Hadamard matrices:
/// U_{ab,cd} = K1_{ab} K2_{bd} K3_{dc} K4_{ca} / q.
pub fn du_from_chm(
    k1: &ChmMatrix,
    k2: &ChmMatrix,
    k3: &ChmMatrix,
    k4: &ChmMatrix,
) -> Result<Gate2, CatalogError> {
    let q = k1.q();
    for k in [k2, k3, k4] {
        if k.q() != q {
            return Err(CatalogError::DimensionMismatch(q, k.q()));
        }
    }
    let inv_q = c(1.0 / q as f64, 0.0);
    let t = ComplexTensor::from_fn(vec![q, q, q, q], |ix| {
        let (a, b, cc, d) = (ix[0], ix[1], ix[2], ix[3]);
        k1.get(a, b) * k2.get(b, d) * k3.get(d, cc) * k4.get(cc, a) * inv_q
    });
    Gate2::from_tensor(t)
}

/// Diagonal two-site gate D_{ab,cd} = δ_{ac} δ_{bd} H_{ab}.
pub fn diagonal_gate(h: &ChmMatrix) -> Gate2 {
    let q = h.q();
    Gate2::from_tensor(ComplexTensor::from_fn(vec![q, q, q, q], |ix| {
        if ix[0] == ix[2] && ix[1] == ix[3] {
            h.get(ix[0], ix[1])
        } else {
            c(0., 0.)
        }
    }))
    .unwrap()
}

/// Haar-random unitary of the given dimension, deterministic per seed.
///
/// QR of a complex Gaussian matrix with the phase of R's diagonal absorbed
/// into Q.
pub fn haar_unitary(dim: usize, seed: u64) -> ComplexTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            // Box-Muller normals
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..2.0 * PI);
            let r = (-2.0 * u1.ln()).sqrt();
            g[(i, j)] = c(r * u2.cos(), r * u2.sin()) / c(2f64.sqrt(), 0.0);
        }
    }
    let qr = g.qr();
    let rmat = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = rmat[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1., 0.) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexTensor::from_dmatrix(&q)
}

/// Haar-random two-site gate (generic, not dual-unitary).
pub fn haar_gate(d_left: usize, d_right: usize, seed: u64) -> Result<Gate2, CatalogError> {
    if d_left < 2 || d_right < 2 {
        return Err(CatalogError::DimensionTooSmall(d_left.min(d_right)));
    }
    let u = haar_unitary(d_left * d_right, seed);
    Gate2::from_matrix(d_left, d_right, &u)
}

// ---------------------------------------------------------------------------
// Quantum crosses (dual-unitary interactions round-a-face)
// ---------------------------------------------------------------------------

/// A family of unitaries (F_ab)_{cd} whose reshuffle (F̃_cd)_{ab} is also
/// unitary. Tensor axes: [a, b, c, d].
#[derive(Debug, Clone)]
pub struct QuantumCross {
    q: usize,
    tensor: ComplexTensor,
}

#[derive(Debug, Clone, Copy)]
pub struct DuirfReport {
    pub vertical_residual: f64,
    pub horizontal_residual: f64,
    pub pass: bool,
}

impl QuantumCross {
    pub fn from_tensor(tensor: ComplexTensor) -> Result<Self, CatalogError> {
        let s = tensor.shape();
        if s.len() != 4 || s.iter().any(|&d| d != s[0]) {
            return Err(CatalogError::BadGateShape(s.to_vec(), vec![s[0]; 4]));
        }
        Ok(Self { q: s[0], tensor })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn tensor(&self) -> &ComplexTensor {
        &self.tensor
    }

    pub fn entry(&self, a: usize, b: usize, cc: usize, d: usize) -> Complex64 {
        self.tensor.get(&[a, b, cc, d])
    }
}

/// Phased-shift cross: (F_ab)_{cd} = e^{i g(a,b,c,d)} δ_{c, d+a−b mod q}.
/// Both reshuffles are phased permutation matrices by construction.
pub fn phased_shift_cross(
    q: usize,
    mut phase: impl FnMut(usize, usize, usize, usize) -> f64,
) -> Result<QuantumCross, CatalogError> {
    if q < 2 {
        return Err(CatalogError::DimensionTooSmall(q));
    }
    let t = ComplexTensor::from_fn(vec![q, q, q, q], |ix| {
        let (a, b, cc, d) = (ix[0], ix[1], ix[2], ix[3]);
        if cc == (d + a + q - b) % q {
            cis(phase(a, b, cc, d))
        } else {
            c(0., 0.)
        }
    });
    QuantumCross::from_tensor(t)
}

/// Seeded random-phase shift cross.
pub fn random_phased_cross(q: usize, seed: u64) -> Result<QuantumCross, CatalogError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phases = vec![0.0; q * q * q * q];
    for p in phases.iter_mut() {
        *p = rng.gen_range(0.0..2.0 * PI);
    }
    phased_shift_cross(q, move |a, b, cc, d| {
        phases[((a * q + b) * q + cc) * q + d]
    })
}

/// Vertical residual: every F_ab unitary. Horizontal: every reshuffled F̃_cd
/// unitary.
pub fn verify_duirf(cross_tensor: &ComplexTensor, tol: f64) -> Result<DuirfReport, CatalogError> {
    let s = cross_tensor.shape();
    if s.len() != 4 || s.iter().any(|&d| d != s[0]) {
        return Err(CatalogError::BadGateShape(s.to_vec(), vec![s[0]; 4]));
    }
    let q = s[0];
    let mut vertical: f64 = 0.0;
    let mut horizontal: f64 = 0.0;
    for x in 0..q {
        for y in 0..q {
            let f_xy = ComplexTensor::from_fn(vec![q, q], |ix| {
                cross_tensor.get(&[x, y, ix[0], ix[1]])
            });
            vertical = vertical.max(unitarity_residual(&f_xy)?);
            let ft_xy = ComplexTensor::from_fn(vec![q, q], |ix| {
                cross_tensor.get(&[ix[0], ix[1], x, y])
            });
            horizontal = horizontal.max(unitarity_residual(&ft_xy)?);
        }
    }
    Ok(DuirfReport {
        vertical_residual: vertical,
        horizontal_residual: horizontal,
        pass: vertical < tol && horizontal < tol,
    })
}

// ---------------------------------------------------------------------------
// Unitary error bases
// ---------------------------------------------------------------------------

/// q² unitaries, pairwise trace-orthogonal: Tr[V_a† V_b] = q δ_ab.
#[derive(Debug, Clone)]
pub struct Ueb {
    q: usize,
    members: Vec<ComplexTensor>,
}

#[derive(Debug, Clone, Copy)]
pub struct UebReport {
    pub unitarity_residual: f64,
    pub orthogonality_residual: f64,
    pub pass: bool,
}

impl Ueb {
    pub fn new(q: usize, members: Vec<ComplexTensor>) -> Result<Self, CatalogError> {
        if members.len() != q * q {
            return Err(CatalogError::DimensionMismatch(members.len(), q * q));
        }
        Ok(Self { q, members })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn members(&self) -> &[ComplexTensor] {
        &self.members
    }

    pub fn member(&self, a: usize) -> &ComplexTensor {
        &self.members[a]
    }
}

/// Weyl (clock-and-shift) basis: V_{(j,k)} = X^j Z^k.
pub fn weyl_ueb(q: usize) -> Result<Ueb, CatalogError> {
    if q < 2 {
        return Err(CatalogError::DimensionTooSmall(q));
    }
    let omega = 2.0 * PI / q as f64;
    let mut members = Vec::with_capacity(q * q);
    for j in 0..q {
        for k in 0..q {
            members.push(ComplexTensor::from_fn(vec![q, q], |ix| {
                // (X^j Z^k)_{r,c} = δ_{r, c+j} ω^{k c}
                if ix[0] == (ix[1] + j) % q {
                    cis(omega * (k * ix[1]) as f64)
                } else {
                    c(0., 0.)
                }
            }));
        }
    }
    Ueb::new(q, members)
}

pub fn verify_ueb(ueb: &Ueb, tol: f64) -> Result<UebReport, CatalogError> {
    let q = ueb.q;
    let mut uni: f64 = 0.0;
    for m in &ueb.members {
        uni = uni.max(unitarity_residual(m)?);
    }
    let mut orth: f64 = 0.0;
    for a in 0..q * q {
        for b in 0..q * q {
            let prod = contract(&ueb.members[a].conj(), &ueb.members[b], &[(0, 0), (1, 1)])?;
            let tr = prod.data()[0];
            let expect = if a == b { q as f64 } else { 0.0 };
            orth = orth.max((tr - c(expect, 0.0)).norm());
        }
    }
    Ok(UebReport {
        unitarity_residual: uni,
        orthogonality_residual: orth,
        pass: uni < tol && orth < tol,
    })
}

// ---------------------------------------------------------------------------
// Quantum Latin squares
// ---------------------------------------------------------------------------

/// q x q grid of q-dimensional states whose rows and columns are orthonormal
/// bases. grid[a][b] is the state Q_ab.
#[derive(Debug, Clone)]
pub struct Qls {
    q: usize,
    grid: Vec<Vec<ComplexTensor>>,
}

#[derive(Debug, Clone, Copy)]
pub struct QlsReport {
    pub row_residual: f64,
    pub col_residual: f64,
    /// Whether the reshuffle (Q̃_ab)_c = (Q_ac)_b is itself a QLS.
    pub reshuffle_is_qls: bool,
    pub reshuffle_residual: f64,
    pub pass: bool,
}

impl Qls {
    pub fn new(q: usize, grid: Vec<Vec<ComplexTensor>>) -> Result<Self, CatalogError> {
        if grid.len() != q || grid.iter().any(|row| row.len() != q) {
            return Err(CatalogError::DimensionMismatch(grid.len(), q));
        }
        Ok(Self { q, grid })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn state(&self, a: usize, b: usize) -> &ComplexTensor {
        &self.grid[a][b]
    }

    pub fn amplitude(&self, a: usize, b: usize, cc: usize) -> Complex64 {
        self.grid[a][b].get(&[cc])
    }

    /// The reshuffled grid (Q̃_ab)_c = (Q_ac)_b.
    pub fn reshuffle(&self) -> Qls {
        let q = self.q;
        let grid = (0..q)
            .map(|a| {
                (0..q)
                    .map(|b| {
                        ComplexTensor::from_fn(vec![q], |ix| self.amplitude(a, ix[0], b))
                    })
                    .collect()
            })
            .collect();
        Qls { q, grid }
    }
}

/// Cyclic QLS: Q_ab = |a+b mod q>.
pub fn cyclic_qls(q: usize) -> Result<Qls, CatalogError> {
    if q < 2 {
        return Err(CatalogError::DimensionTooSmall(q));
    }
    let grid = (0..q)
        .map(|a| {
            (0..q)
                .map(|b| {
                    ComplexTensor::from_fn(vec![q], |ix| {
                        if ix[0] == (a + b) % q {
                            c(1., 0.)
                        } else {
                            c(0., 0.)
                        }
                    })
                })
                .collect()
        })
        .collect();
    Qls::new(q, grid)
}

fn basis_residual(states: Vec<&ComplexTensor>) -> f64 {
    let q = states.len();
    let mut worst: f64 = 0.0;
    for i in 0..q {
        for j in 0..q {
            let olap = contract(&states[i].conj(), states[j], &[(0, 0)])
                .unwrap()
                .data()[0];
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((olap - c(expect, 0.0)).norm());
        }
    }
    worst
}

pub fn verify_qls(qls: &Qls, tol: f64) -> QlsReport {
    let q = qls.q;
    let mut row: f64 = 0.0;
    let mut col: f64 = 0.0;
    for a in 0..q {
        row = row.max(basis_residual((0..q).map(|b| qls.state(a, b)).collect()));
    }
    for b in 0..q {
        col = col.max(basis_residual((0..q).map(|a| qls.state(a, b)).collect()));
    }
    let resh = qls.reshuffle();
    let mut rr: f64 = 0.0;
    for a in 0..q {
        rr = rr.max(basis_residual((0..q).map(|b| resh.state(a, b)).collect()));
    }
    for b in 0..q {
        rr = rr.max(basis_residual((0..q).map(|a| resh.state(a, b)).collect()));
    }
    QlsReport {
        row_residual: row,
        col_residual: col,
        reshuffle_is_qls: rr < tol,
        reshuffle_residual: rr,
        pass: row < tol && col < tol,
    }
}

// ---------------------------------------------------------------------------
// Solvable initial-state tensors
// ---------------------------------------------------------------------------

/// Building block of a solvable initial state.
///
/// For two-site-gate circuits this is a two-site vertex whose horizontal
/// reshuffle is proportional to an isometry (Bell pairs are the standard
/// instance). For interactions-round-a-face circuits it is a family of q
/// unitaries indexed by the neighboring face.
#[derive(Debug, Clone)]
pub enum SolvableVertex {
    /// State tensor on q ⊗ q, axes [left, right], normalized to unit norm.
    BondState { q: usize, tensor: ComplexTensor },
    /// q matrices of size q x q; member s is the tensor (v_s)_{cd}.
    CrossFamily { q: usize, members: Vec<ComplexTensor> },
}

impl SolvableVertex {
    pub fn q(&self) -> usize {
        match self {
            SolvableVertex::BondState { q, .. } => *q,
            SolvableVertex::CrossFamily { q, .. } => *q,
        }
    }
}

/// Bell-pair product vertex: (1/sqrt q) Σ_i |ii>.
pub fn solvable_bell_state(q: usize) -> Result<SolvableVertex, CatalogError> {
    if q < 2 {
        return Err(CatalogError::DimensionTooSmall(q));
    }
    let norm = 1.0 / (q as f64).sqrt();
    let tensor = ComplexTensor::from_fn(vec![q, q], |ix| {
        if ix[0] == ix[1] {
            c(norm, 0.0)
        } else {
            c(0., 0.)
        }
    });
    Ok(SolvableVertex::BondState { q, tensor })
}

/// Solvable vertex for face circuits: a set of q unitary matrices.
pub fn solvable_cross_family(
    q: usize,
    members: Vec<ComplexTensor>,
) -> Result<SolvableVertex, CatalogError> {
    if members.len() != q {
        return Err(CatalogError::DimensionMismatch(members.len(), q));
    }
    for m in &members {
        if m.shape() != [q, q] {
            return Err(CatalogError::BadGateShape(m.shape().to_vec(), vec![q, q]));
        }
    }
    Ok(SolvableVertex::CrossFamily { q, members })
}

/// Residual of the horizontal unitarity condition defining solvable states.
///
/// Bond states: the q x q matrix M_{lr} = sqrt(q) ψ_{lr} must be unitary.
/// Cross families: every member must be unitary.
pub fn verify_solvable(v: &SolvableVertex) -> f64 {
    match v {
        SolvableVertex::BondState { q, tensor } => {
            let m = tensor.scale(c((*q as f64).sqrt(), 0.0));
            unitarity_residual(&m).unwrap_or(f64::INFINITY)
        }
        SolvableVertex::CrossFamily { members, .. } => members
            .iter()
            .map(|m| unitarity_residual(m).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_matrices_are_hadamard() {
        for q in 2..=5 {
            let h = fourier_chm(q).unwrap();
            let rep = verify_chm(h.entries(), DEFAULT_TOL).unwrap();
            assert!(rep.pass, "q={q}: {rep:?}");
        }
        assert!(fourier_chm(1).is_err());
    }

    #[test]
    fn fourier_q2_is_h0() {
        let f = fourier_chm(2).unwrap();
        let h = h0();
        for a in 0..2 {
            for b in 0..2 {
                assert!((f.get(a, b) - h.get(a, b)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn h1_at_zero_phase_is_h0() {
        let (h0m, h1m) = paper_chm_pair(0.0);
        for a in 0..2 {
            for b in 0..2 {
                assert!((h0m.get(a, b) - h1m.get(a, b)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn h1_sweep_stays_hadamard() {
        for k in 0..100 {
            let phi = 2.0 * PI * k as f64 / 100.0;
            let (_, h1m) = paper_chm_pair(phi);
            let rep = verify_chm(h1m.entries(), 1e-12).unwrap();
            assert!(rep.modulus_residual < 1e-12 && rep.unitarity_residual < 1e-12);
        }
    }

    #[test]
    fn all_ones_matrix_fails_chm() {
        let ones = ComplexTensor::from_fn(vec![2, 2], |_| Complex64::new(1.0, 0.0));
        let rep = verify_chm(&ones, DEFAULT_TOL).unwrap();
        assert!(!rep.pass);
        assert!((rep.unitarity_residual - 2.0).abs() < 1e-12);
        assert!(ChmMatrix::new(ones).is_err());
    }

    #[test]
    fn haar_gate_is_seeded_and_unitary() {
        let g1 = haar_gate(2, 2, 7).unwrap();
        let g2 = haar_gate(2, 2, 7).unwrap();
        assert_eq!(g1.tensor(), g2.tensor());
        assert!(g1.unitarity_residual() < 1e-12);
        let g3 = haar_gate(2, 2, 8).unwrap();
        assert_ne!(g1.tensor(), g3.tensor());
    }

    #[test]
    fn phased_cross_passes_duirf_and_tamper_fails() {
        let cross = random_phased_cross(3, 5).unwrap();
        let rep = verify_duirf(cross.tensor(), DEFAULT_TOL).unwrap();
        assert!(rep.pass, "{rep:?}");

        // zero-phase cross at q=2 is X^(a-b)
        let plain = phased_shift_cross(2, |_, _, _, _| 0.0).unwrap();
        assert!(verify_duirf(plain.tensor(), DEFAULT_TOL).unwrap().pass);

        // tamper a modulus
        let mut t = plain.tensor().clone();
        let ix = [0usize, 0, 0, 0];
        let old = t.get(&ix);
        t.set(&ix, old * Complex64::new(0.9, 0.0));
        assert!(!verify_duirf(&t, DEFAULT_TOL).unwrap().pass);
    }

    #[test]
    fn constant_cross_fails_horizontal() {
        // F_ab = fixed unitary for all (a,b): vertical passes, horizontal fails
        let u = haar_unitary(2, 3);
        let t = ComplexTensor::from_fn(vec![2, 2, 2, 2], |ix| u.get(&[ix[2], ix[3]]));
        let rep = verify_duirf(&t, DEFAULT_TOL).unwrap();
        assert!(rep.vertical_residual < 1e-12);
        assert!(rep.horizontal_residual > 0.1);
    }

    #[test]
    fn weyl_basis_is_ueb() {
        for q in 2..=3 {
            let u = weyl_ueb(q).unwrap();
            let rep = verify_ueb(&u, DEFAULT_TOL).unwrap();
            assert!(rep.pass, "q={q}: {rep:?}");
        }
        // duplicate member breaks orthogonality
        let mut u = weyl_ueb(2).unwrap();
        u.members[1] = u.members[0].clone();
        assert!(!verify_ueb(&u, DEFAULT_TOL).unwrap().pass);
    }

    #[test]
    fn cyclic_qls_verifies_and_reshuffles() {
        let q = cyclic_qls(2).unwrap();
        let rep = verify_qls(&q, DEFAULT_TOL);
        assert!(rep.pass);
        assert!(rep.reshuffle_is_qls);

        // repeated state in a row fails
        let mut bad = cyclic_qls(2).unwrap();
        bad.grid[0][1] = bad.grid[0][0].clone();
        assert!(!verify_qls(&bad, DEFAULT_TOL).pass);
    }

    #[test]
    fn fourier_phased_qls_accepted_iff_verifier_passes() {
        // Q_ab = (1/sqrt q) Σ_c ω^{c(a+b)} |c>: rows/columns are Fourier bases.
        let q = 3usize;
        let omega = 2.0 * PI / q as f64;
        let grid: Vec<Vec<ComplexTensor>> = (0..q)
            .map(|a| {
                (0..q)
                    .map(|b| {
                        ComplexTensor::from_fn(vec![q], |ix| {
                            cis(omega * (ix[0] * (a + b)) as f64)
                                * c(1.0 / (q as f64).sqrt(), 0.0)
                        })
                    })
                    .collect()
            })
            .collect();
        let cand = Qls::new(q, grid).unwrap();
        let rep = verify_qls(&cand, DEFAULT_TOL);
        // rows with fixed a: states indexed by b=0..q-1 give phases c(a+b):
        // b and b' differ by a Fourier phase shift, so rows are orthonormal.
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn bell_vertex_is_solvable() {
        let v = solvable_bell_state(2).unwrap();
        assert!(verify_solvable(&v) < 1e-12);
    }

    #[test]
    fn cross_family_solvability() {
        let good = solvable_cross_family(2, vec![ComplexTensor::identity(2); 2]).unwrap();
        assert!(verify_solvable(&good) < 1e-12);
        let mut bad_m = ComplexTensor::identity(2);
        bad_m.set(&[0, 0], Complex64::new(0.5, 0.0));
        let bad = solvable_cross_family(2, vec![ComplexTensor::identity(2), bad_m]).unwrap();
        assert!(verify_solvable(&bad) > 1e-2);
    }

    #[test]
    fn cnot_is_unitary_gate() {
        assert!(cnot_gate().unitarity_residual() < 1e-14);
        assert!(swap_gate(3).unitarity_residual() < 1e-14);
    }

    #[test]
    fn diagonal_gate_of_h0_is_cz() {
        let d = diagonal_gate(&h0());
        let m = d.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j {
                    if i == 3 {
                        -1.0
                    } else {
                        1.0
                    }
                } else {
                    0.0
                };
                assert!((m.get(&[i, j]) - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }
}
