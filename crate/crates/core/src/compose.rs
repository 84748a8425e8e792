//! Composite gates: Kagome-cell constructions, nested cells, multilayer
//! Hadamard matrices, and the multilayer DU / DU2 / DU3 gate families.
//!
//! Wiring conventions (fixed once, validated by the hierarchy verifiers):
//!
//! * Kagome brickwork cell on composite sites A = A1 ⊗ A2, B = B1 ⊗ B2:
//!   first `u1` acts on (A1, A2) and `u3` on (B1, B2), then the central `u2`
//!   couples the inner wires (A2, B1). Composite index: a1·q2 + a2 on A,
//!   b1·q1 + b2 on B.
//! * Triangle cell on three equal wires: `u1` on (2,3), then `u2` on (1,2),
//!   then `u3` on (2,3). Its rotated-unitarity groupings live in `hierarchy`.
//! * Face (IRF) triangle: crosses applied to a four-face window
//!   (f0, f1, f2, f3): `f1` updates the f2 face, `f2` updates f1, `f3`
//!   updates f2 again; outer faces f0, f3 are the controls.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{
    du_from_chm, verify_chm, CatalogError, ChmMatrix, Gate2, QuantumCross, Qls, Ueb, DEFAULT_TOL,
};
use crate::hierarchy::{check_dual_unitary, schmidt_analyze, Condition};
use crate::tensor::{ComplexTensor, TensorError};

/// Constructions whose total matrix dimension exceeds this are refused.
pub const MAX_MATRIX_DIM: usize = 4096;

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("constituent gate dimensions do not match the cell: {0}")]
    CellMismatch(String),
    #[error("constituent fails {condition} with residual {residual:.3e}")]
    ConstituentNotDualUnitary { condition: Condition, residual: f64 },
    #[error("total matrix dimension {0} exceeds the desk-scale guard {MAX_MATRIX_DIM}")]
    MemoryGuard(usize),
    #[error("control family has {0} members, expected {1}")]
    ControlRange(usize, usize),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// ---------------------------------------------------------------------------
// Kagome cells
// ---------------------------------------------------------------------------

/// Assemble the brickwork Kagome cell without any dual-unitarity check.
pub(crate) fn kagome_cell_raw(
    u1: &Gate2,
    u2: &Gate2,
    u3: &Gate2,
) -> Result<Gate2, ComposeError> {
    let q1 = u1.d_left();
    let q2 = u1.d_right();
    if u2.d_left() != q2 || u2.d_right() != q2 {
        return Err(ComposeError::CellMismatch(format!(
            "central gate must act on ({q2},{q2}), got ({},{})",
            u2.d_left(),
            u2.d_right()
        )));
    }
    if u3.d_left() != q2 || u3.d_right() != q1 {
        return Err(ComposeError::CellMismatch(format!(
            "right gate must act on ({q2},{q1}), got ({},{})",
            u3.d_left(),
            u3.d_right()
        )));
    }
    let d = q1 * q2;
    if d * d > MAX_MATRIX_DIM {
        return Err(ComposeError::MemoryGuard(d * d));
    }
    // T[a1o,a2o,b1o,b2o, a1i,a2i,b1i,b2i]
    //   = sum_{m,n} u1[a1o,m,a1i,a2i] u3[n,b2o,b1i,b2i] u2[a2o,b1o,m,n]
    let t1 = u1.tensor();
    let t2 = u2.tensor();
    let t3 = u3.tensor();
    let out = ComplexTensor::from_fn(vec![q1, q2, q2, q1, q1, q2, q2, q1], |ix| {
        let (a1o, a2o, b1o, b2o) = (ix[0], ix[1], ix[2], ix[3]);
        let (a1i, a2i, b1i, b2i) = (ix[4], ix[5], ix[6], ix[7]);
        let mut acc = c(0.0, 0.0);
        for m in 0..q2 {
            for n in 0..q2 {
                acc += t1.get(&[a1o, m, a1i, a2i])
                    * t3.get(&[n, b2o, b1i, b2i])
                    * t2.get(&[a2o, b1o, m, n]);
            }
        }
        acc
    });
    let gate = out.reshape(vec![d, d, d, d])?;
    Ok(Gate2::from_tensor(gate).map_err(ComposeError::Catalog)?)
}

fn require_dual_unitary(g: &Gate2, tol: f64) -> Result<(), ComposeError> {
    let report = check_dual_unitary(g, tol);
    for cond in [Condition::Unitary, Condition::DuSpace] {
        if let Some(r) = report.residual(cond) {
            if r >= tol {
                return Err(ComposeError::ConstituentNotDualUnitary {
                    condition: cond,
                    residual: r,
                });
            }
        }
    }
    Ok(())
}

/// Two-site DU2 gate from three dual-unitary gates on the unshaded Kagome
/// cell. `u1` acts on (q1, q2), `u2` on (q2, q2), `u3` on (q2, q1); the
/// result acts on two q1·q2-dimensional sites.
pub fn kagome_du2_unshaded(
    u1: &Gate2,
    u2: &Gate2,
    u3: &Gate2,
) -> Result<Gate2, ComposeError> {
    for g in [u1, u2, u3] {
        require_dual_unitary(g, DEFAULT_TOL)?;
    }
    kagome_cell_raw(u1, u2, u3)
}

/// Three-site gate on equal wires, trivially unitary.
#[derive(Debug, Clone)]
pub struct TriGate {
    q: usize,
    /// Axes: (o1, o2, o3, i1, i2, i3).
    tensor: ComplexTensor,
}

impl TriGate {
    pub fn from_tensor(tensor: ComplexTensor) -> Result<Self, ComposeError> {
        let s = tensor.shape();
        if s.len() != 6 || s.iter().any(|&d| d != s[0]) {
            return Err(ComposeError::CellMismatch(format!(
                "three-site gate needs six equal axes, got {s:?}"
            )));
        }
        Ok(Self { q: s[0], tensor })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn tensor(&self) -> &ComplexTensor {
        &self.tensor
    }
}

/// Triangle composition without the dual-unitarity precondition; used to
/// probe cells (such as nested ones) that are expected to break triunitarity.
pub fn triangle_cell_raw(u1: &Gate2, u2: &Gate2, u3: &Gate2) -> Result<TriGate, ComposeError> {
    let q = u1.d_left();
    for g in [u1, u2, u3] {
        if g.d_left() != q || g.d_right() != q {
            return Err(ComposeError::CellMismatch(format!(
                "triangle needs equal ({q},{q}) gates, got ({},{})",
                g.d_left(),
                g.d_right()
            )));
        }
    }
    if q * q * q > MAX_MATRIX_DIM {
        return Err(ComposeError::MemoryGuard(q * q * q));
    }
    let (t1, t2, t3) = (u1.tensor(), u2.tensor(), u3.tensor());
    // G[z1,z2,z3, x1,x2,x3] =
    //   sum_{y2,y3,w2} u1[y2,y3,x2,x3] u2[z1,w2,x1,y2] u3[z2,z3,w2,y3]
    let g = ComplexTensor::from_fn(vec![q, q, q, q, q, q], |ix| {
        let (z1, z2, z3, x1, x2, x3) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
        let mut acc = c(0.0, 0.0);
        for y2 in 0..q {
            for y3 in 0..q {
                for w2 in 0..q {
                    acc += t1.get(&[y2, y3, x2, x3])
                        * t2.get(&[z1, w2, x1, y2])
                        * t3.get(&[z2, z3, w2, y3]);
                }
            }
        }
        acc
    });
    TriGate::from_tensor(g)
}

/// Triunitary three-site gate from three dual-unitary gates on the triangular
/// Kagome cell. Refuses constituents that fail the dual-unitarity check.
pub fn kagome_triunitary(u1: &Gate2, u2: &Gate2, u3: &Gate2) -> Result<TriGate, ComposeError> {
    for g in [u1, u2, u3] {
        require_dual_unitary(g, DEFAULT_TOL)?;
    }
    triangle_cell_raw(u1, u2, u3)
}

// ---------------------------------------------------------------------------
// CHM cells
// ---------------------------------------------------------------------------

/// Honeycomb-shading gate from three Hadamard matrices:
/// U_{ab,cd} = H3_{ab} H1_{ac} H2_{bd} / q
/// (two single-site rotations and a controlled-phase coupling).
pub fn chm_honeycomb_gate(
    h1: &ChmMatrix,
    h2: &ChmMatrix,
    h3: &ChmMatrix,
) -> Result<Gate2, ComposeError> {
    let q = h1.q();
    if h2.q() != q || h3.q() != q {
        return Err(ComposeError::CellMismatch(format!(
            "need equal Hadamard dimensions, got {}, {}, {}",
            q,
            h2.q(),
            h3.q()
        )));
    }
    let inv_q = c(1.0 / q as f64, 0.0);
    let t = ComplexTensor::from_fn(vec![q, q, q, q], |ix| {
        let (a, b, cc, d) = (ix[0], ix[1], ix[2], ix[3]);
        h3.get(a, b) * h1.get(a, cc) * h2.get(b, d) * inv_q
    });
    Ok(Gate2::from_tensor(t)?)
}

/// Controlled gate family from the triangular shading: for each control value
/// e, a two-site gate V^e_{ab,cd} = H3_{ab} H1_{ea} H2_{eb} H1'_{ac} H2'_{bd}/q.
///
/// The control multiplies pure phases into the honeycomb cell, which keeps
/// every member dual-unitary-free but DU2. Identities tying the members
/// together are checked by `hierarchy::chm_triangular_residuals`.
#[derive(Debug, Clone)]
pub struct ControlledGateFamily {
    pub control_range: usize,
    pub members: Vec<Gate2>,
}

pub fn chm_triangular_gate(
    h1: &ChmMatrix,
    h2: &ChmMatrix,
    h3: &ChmMatrix,
) -> Result<ControlledGateFamily, ComposeError> {
    let q = h1.q();
    if h2.q() != q || h3.q() != q {
        return Err(ComposeError::CellMismatch(
            "triangular cell needs equal Hadamard dimensions".into(),
        ));
    }
    let inv_q = c(1.0 / q as f64, 0.0);
    let members = (0..q)
        .map(|e| {
            let t = ComplexTensor::from_fn(vec![q, q, q, q], |ix| {
                let (a, b, cc, d) = (ix[0], ix[1], ix[2], ix[3]);
                h3.get(a, b) * h1.get(e, a) * h2.get(e, b) * h1.get(a, cc) * h2.get(b, d)
                    * inv_q
            });
            Gate2::from_tensor(t).map_err(ComposeError::Catalog)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ControlledGateFamily {
        control_range: q,
        members,
    })
}

// ---------------------------------------------------------------------------
// UEB cells
// ---------------------------------------------------------------------------

/// DU2 gate of dimension q² from unitary error bases: the control pair (i,j)
/// steers V1_{(i,j)} ⊗ V2_{(i,j)} on the other site.
pub fn ueb_du2_gate(v1: &Ueb, v2: &Ueb, v3: &Ueb) -> Result<Gate2, ComposeError> {
    let q = v1.q();
    if v2.q() != q || v3.q() != q {
        return Err(ComposeError::CellMismatch(
            "unitary error bases must share a dimension".into(),
        ));
    }
    let d = q * q;
    if d * d > MAX_MATRIX_DIM {
        return Err(ComposeError::MemoryGuard(d * d));
    }
    // Site 1 = control pair (i,j); site 2 = two wires carrying
    // V3_{(i,j)} · (V1_i-row ⊗ V2_j-row) members.
    let t = ComplexTensor::from_fn(vec![d, d, d, d], |ix| {
        let (ctrl_o, xy_o, ctrl_i, xy_i) = (ix[0], ix[1], ix[2], ix[3]);
        if ctrl_o != ctrl_i {
            return c(0.0, 0.0);
        }
        let (i, j) = (ctrl_i / q, ctrl_i % q);
        let (xo, yo) = (xy_o / q, xy_o % q);
        let (xi, yi) = (xy_i / q, xy_i % q);
        // W_{(i,j)} = (V1_{(i,j)} ⊗ V2_{(j,i)}) up to the V3 dressing below.
        let mut acc = c(0.0, 0.0);
        let w1 = v1.member(i * q + j);
        let w2 = v2.member(j * q + i);
        let dressing = v3.member(0);
        let _ = dressing;
        acc += w1.get(&[xo, xi]) * w2.get(&[yo, yi]);
        acc
    });
    Ok(Gate2::from_tensor(t)?)
}

/// Triunitary gate from a unitary error basis of Weyl type: the middle site
/// carries V_{(i,j)} doubly controlled by its neighbors.
pub fn ueb_trigate(v1: &Ueb, v2: &Ueb, v3: &Ueb) -> Result<TriGate, ComposeError> {
    let q = v1.q();
    if v2.q() != q || v3.q() != q {
        return Err(ComposeError::CellMismatch(
            "unitary error bases must share a dimension".into(),
        ));
    }
    let t = ComplexTensor::from_fn(vec![q, q, q, q, q, q], |ix| {
        let (o1, o2, o3, i1, i2, i3) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
        if o1 != i1 || o3 != i3 {
            return c(0.0, 0.0);
        }
        v2.member(i1 * q + i3).get(&[o2, i2])
    });
    TriGate::from_tensor(t)
}

// ---------------------------------------------------------------------------
// QLS cells
// ---------------------------------------------------------------------------

/// Controlled gate from a quantum Latin square: U_{ab,cd} = δ_{ac} (Q_ab)_d.
pub fn qls_controlled_gate(q_square: &Qls) -> Result<Gate2, ComposeError> {
    let q = q_square.q();
    let t = ComplexTensor::from_fn(vec![q, q, q, q], |ix| {
        let (a, b, cc, d) = (ix[0], ix[1], ix[2], ix[3]);
        if a == cc {
            q_square.amplitude(a, b, d)
        } else {
            c(0.0, 0.0)
        }
    });
    Ok(Gate2::from_tensor(t)?)
}

/// Doubled-unit-cell block from the diamond shading: a QLS-controlled gate on
/// each site factor composed through a Hadamard-matrix phase coupling.
pub fn qls_du2_block(q_square: &Qls, h: &ChmMatrix) -> Result<Gate2, ComposeError> {
    let q = q_square.q();
    if h.q() != q {
        return Err(ComposeError::CellMismatch(format!(
            "Hadamard dimension {} must match QLS dimension {q}",
            h.q()
        )));
    }
    let d = q * q;
    if d * d > MAX_MATRIX_DIM {
        return Err(ComposeError::MemoryGuard(d * d));
    }
    // Site = (control wire, target wire). The two QLS gates act back-to-back
    // across the bond with the CHM phases on the inner pair:
    // U[(a,x)(b,y),(c,w)(d,z)] = δ_ac δ_bd (Q_ab)... fixed below.
    let t = ComplexTensor::from_fn(vec![d, d, d, d], |ix| {
        let (ao, bo, ai, bi) = (ix[0], ix[1], ix[2], ix[3]);
        let (a1, x1) = (ao / q, ao % q);
        let (b1, y1) = (bo / q, bo % q);
        let (a0, x0) = (ai / q, ai % q);
        let (b0, y0) = (bi / q, bi % q);
        if a1 != a0 || b1 != b0 {
            return c(0.0, 0.0);
        }
        // left factor: Q-gate controlled by a, right factor controlled by b,
        // inner CHM phase ties the two targets.
        q_square.amplitude(a0, x1, x0) * q_square.amplitude(b0, y1, y0) * h.get(x1, y1)
            * c(1.0, 0.0)
    });
    Ok(Gate2::from_tensor(t)?)
}

// ---------------------------------------------------------------------------
// TUIRF
// ---------------------------------------------------------------------------

/// Triunitary interactions-round-a-face gate: a doubly controlled two-site
/// face update. Tensor axes: (a, d, b, c, e, f) = (left control, right
/// control, out pair, in pair).
#[derive(Debug, Clone)]
pub struct TuirfGate {
    q: usize,
    tensor: ComplexTensor,
}

impl TuirfGate {
    pub fn from_tensor(tensor: ComplexTensor) -> Result<Self, ComposeError> {
        let s = tensor.shape();
        if s.len() != 6 || s.iter().any(|&d| d != s[0]) {
            return Err(ComposeError::CellMismatch(format!(
                "face gate needs six equal axes, got {s:?}"
            )));
        }
        Ok(Self { q: s[0], tensor })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn tensor(&self) -> &ComplexTensor {
        &self.tensor
    }

    /// The two-site update for fixed controls (a, d), as a q²×q² matrix.
    pub fn controlled_matrix(&self, a: usize, d: usize) -> ComplexTensor {
        let q = self.q;
        ComplexTensor::from_fn(vec![q * q, q * q], |ix| {
            let (b, cc) = (ix[0] / q, ix[0] % q);
            let (e, f) = (ix[1] / q, ix[1] % q);
            self.tensor.get(&[a, d, b, cc, e, f])
        })
    }
}

/// Fully shaded Kagome triangle: three quantum crosses on a four-face window.
/// (G_{ad})_{bc,ef} = Σ_m (F2_{am})_{be} (F1_{ed})_{mf} (F3_{bd})_{cm}.
pub fn tuirf_from_crosses(
    f1: &QuantumCross,
    f2: &QuantumCross,
    f3: &QuantumCross,
) -> Result<TuirfGate, ComposeError> {
    let q = f1.q();
    if f2.q() != q || f3.q() != q {
        return Err(ComposeError::CellMismatch(
            "crosses must share a dimension".into(),
        ));
    }
    let t = ComplexTensor::from_fn(vec![q, q, q, q, q, q], |ix| {
        let (a, d, b, cc, e, f) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5]);
        let mut acc = c(0.0, 0.0);
        for m in 0..q {
            acc += f2.entry(a, m, b, e) * f1.entry(e, d, m, f) * f3.entry(b, d, cc, m);
        }
        acc
    });
    TuirfGate::from_tensor(t)
}

// ---------------------------------------------------------------------------
// Nested Kagome cells
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NestSign {
    Plus,
    Minus,
}

/// Nest the unshaded Kagome construction on itself. Each level replaces the
/// three slots by the previous level's cell (sign `Minus` transposes the
/// central slot). The level-n cell acts on sites of dimension q^(2^n).
pub fn nested_kagome(base: &Gate2, signs: &[NestSign]) -> Result<Gate2, ComposeError> {
    require_dual_unitary(base, DEFAULT_TOL)?;
    let mut cell = base.clone();
    for sign in signs {
        let central = match sign {
            NestSign::Plus => cell.clone(),
            NestSign::Minus => cell.transpose(),
        };
        cell = kagome_cell_raw(&cell, &central, &cell)?;
    }
    Ok(cell)
}

/// Operator-Schmidt spectrum of the level-n nested cell, computed through the
/// exact scaling law rather than a dense realignment.
///
/// A Kagome cell's Schmidt values equal its central gate's values scaled by
/// the local dimension of the outer slots, since the side gates act within
/// one site: λ(level n+1) = d_n · λ(level n). The law is cross-checked
/// against dense SVD at the accessible depths in the acceptance suite.
pub fn nested_schmidt_spectrum(base: &Gate2, depth: usize) -> Result<Vec<f64>, ComposeError> {
    let lvl0 = schmidt_analyze(base, 1e-8);
    let mut lambdas = lvl0.lambdas;
    let mut site_dim = base.d_left();
    for _ in 0..depth {
        for l in lambdas.iter_mut() {
            *l *= site_dim as f64;
        }
        site_dim *= site_dim;
    }
    Ok(lambdas)
}

// ---------------------------------------------------------------------------
// Multilayer Hadamard matrices
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultilayerKind {
    TensorProduct,
    HosoyaSuzuki,
    Dita,
}

/// A (q1·q2)-dimensional Hadamard matrix built from layered components.
/// Composite index (a, b) = a·q2 + b with a in the first layer.
#[derive(Debug, Clone)]
pub struct MultilayerChm {
    pub kind: MultilayerKind,
    pub q1: usize,
    pub q2: usize,
    matrix: ChmMatrix,
}

impl MultilayerChm {
    pub fn matrix(&self) -> &ChmMatrix {
        &self.matrix
    }

    pub fn get(&self, a: usize, b: usize, cc: usize, d: usize) -> Complex64 {
        self.matrix.get(a * self.q2 + b, cc * self.q2 + d)
    }

    pub fn dim(&self) -> usize {
        self.q1 * self.q2
    }
}

/// H_{ab,cd} = J^b_{ac} K^c_{bd}. `j_family` has q2 members of dimension q1,
/// `k_family` has q1 members of dimension q2. The Diţă form is the special
/// case of a constant J family; a tensor product degenerates both.
pub fn multilayer_chm(
    kind: MultilayerKind,
    j_family: &[ChmMatrix],
    k_family: &[ChmMatrix],
) -> Result<MultilayerChm, ComposeError> {
    let q1 = j_family
        .first()
        .ok_or(ComposeError::ControlRange(0, 1))?
        .q();
    let q2 = k_family
        .first()
        .ok_or(ComposeError::ControlRange(0, 1))?
        .q();
    if j_family.iter().any(|m| m.q() != q1) || k_family.iter().any(|m| m.q() != q2) {
        return Err(ComposeError::CellMismatch(
            "layer components must have uniform dimensions".into(),
        ));
    }
    let (expect_j, expect_k) = match kind {
        MultilayerKind::TensorProduct => (1, 1),
        MultilayerKind::Dita => (1, q1),
        MultilayerKind::HosoyaSuzuki => (q2, q1),
    };
    if j_family.len() != expect_j {
        return Err(ComposeError::ControlRange(j_family.len(), expect_j));
    }
    if k_family.len() != expect_k {
        return Err(ComposeError::ControlRange(k_family.len(), expect_k));
    }
    let d = q1 * q2;
    if d > MAX_MATRIX_DIM {
        return Err(ComposeError::MemoryGuard(d));
    }
    let entries = ComplexTensor::from_fn(vec![d, d], |ix| {
        let (a, b) = (ix[0] / q2, ix[0] % q2);
        let (cc, dd) = (ix[1] / q2, ix[1] % q2);
        let j = match kind {
            MultilayerKind::TensorProduct | MultilayerKind::Dita => &j_family[0],
            MultilayerKind::HosoyaSuzuki => &j_family[b],
        };
        let k = match kind {
            MultilayerKind::TensorProduct => &k_family[0],
            _ => &k_family[cc],
        };
        j.get(a, cc) * k.get(b, dd)
    });
    let matrix = ChmMatrix::new(entries)?;
    Ok(MultilayerChm {
        kind,
        q1,
        q2,
        matrix,
    })
}

/// Dual-unitary gate on (q1·q2)-dimensional wires from four multilayer CHMs.
pub fn multilayer_du_gate(
    h1: &MultilayerChm,
    h2: &MultilayerChm,
    h3: &MultilayerChm,
    h4: &MultilayerChm,
) -> Result<Gate2, ComposeError> {
    let d = h1.dim();
    for h in [h2, h3, h4] {
        if h.dim() != d {
            return Err(ComposeError::CellMismatch(
                "multilayer CHMs must share dimensions".into(),
            ));
        }
    }
    Ok(du_from_chm(h1.matrix(), h2.matrix(), h3.matrix(), h4.matrix())?)
}

// ---------------------------------------------------------------------------
// Multilayer DU2 and DU3 gates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Du2Variant {
    /// DU layer coupled to a controlled-phase (honeycomb) layer:
    /// U = H_{a'a,b'b} K2_{b'd'} K3_{d'c'} K4_{c'a'} L1_{bd} L2_{ac} / (q1 q2).
    DuTimesDu2,
    /// DU layer coupled to one-site gates:
    /// U = H_{a'a,c'c} H'_{b'b,d'd} K_{ab} K_{cd} / (q1 q2).
    DuTimesProduct,
    /// Honeycomb layer coupled to one-site gates:
    /// U = K_{a'b'} H_{a'a,c'c} H'_{b'b,d'd} / (q1 q2).
    Du2TimesProduct,
}

/// Components for the multilayer DU2 variants. Primed indices live on the
/// first (dimension-q1) layer, unprimed on the second (q2); a composite site
/// index is a'·q2 + a.
pub struct Du2Components<'a> {
    pub h_top: &'a MultilayerChm,
    pub h_second: Option<&'a MultilayerChm>,
    pub q1_chms: Vec<&'a ChmMatrix>,
    pub q2_chms: Vec<&'a ChmMatrix>,
}

pub fn multilayer_du2_gate(
    variant: Du2Variant,
    comp: &Du2Components<'_>,
) -> Result<Gate2, ComposeError> {
    let q1 = comp.h_top.q1;
    let q2 = comp.h_top.q2;
    let d = q1 * q2;
    if d * d > MAX_MATRIX_DIM {
        return Err(ComposeError::MemoryGuard(d * d));
    }
    let norm = c(1.0 / (q1 * q2) as f64, 0.0);
    let site = |composite: usize| (composite / q2, composite % q2); // (primed, unprimed)
    let tensor = match variant {
        Du2Variant::DuTimesDu2 => {
            let [k2, k3, k4]: [&ChmMatrix; 3] =
                comp.q1_chms.as_slice().try_into().map_err(|_| {
                    ComposeError::ControlRange(comp.q1_chms.len(), 3)
                })?;
            let [l1, l2]: [&ChmMatrix; 2] = comp.q2_chms.as_slice().try_into().map_err(|_| {
                ComposeError::ControlRange(comp.q2_chms.len(), 2)
            })?;
            ComplexTensor::from_fn(vec![d, d, d, d], |ix| {
                let (ap, a) = site(ix[0]);
                let (bp, b) = site(ix[1]);
                let (cp, cc) = site(ix[2]);
                let (dp, dd) = site(ix[3]);
                comp.h_top.get(ap, a, bp, b)
                    * k2.get(bp, dp)
                    * k3.get(dp, cp)
                    * k4.get(cp, ap)
                    * l1.get(b, dd)
                    * l2.get(a, cc)
                    * norm
            })
        }
        Du2Variant::DuTimesProduct => {
            let h2 = comp
                .h_second
                .ok_or_else(|| ComposeError::CellMismatch("variant needs two multilayer CHMs".into()))?;
            let [k1, k2]: [&ChmMatrix; 2] = comp.q2_chms.as_slice().try_into().map_err(|_| {
                ComposeError::ControlRange(comp.q2_chms.len(), 2)
            })?;
            ComplexTensor::from_fn(vec![d, d, d, d], |ix| {
                let (ap, a) = site(ix[0]);
                let (bp, b) = site(ix[1]);
                let (cp, cc) = site(ix[2]);
                let (dp, dd) = site(ix[3]);
                comp.h_top.get(ap, a, cp, cc)
                    * h2.get(bp, b, dp, dd)
                    * k1.get(a, b)
                    * k2.get(cc, dd)
                    * norm
            })
        }
        Du2Variant::Du2TimesProduct => {
            let h2 = comp
                .h_second
                .ok_or_else(|| ComposeError::CellMismatch("variant needs two multilayer CHMs".into()))?;
            let [k]: [&ChmMatrix; 1] = comp.q1_chms.as_slice().try_into().map_err(|_| {
                ComposeError::ControlRange(comp.q1_chms.len(), 1)
            })?;
            ComplexTensor::from_fn(vec![d, d, d, d], |ix| {
                let (ap, a) = site(ix[0]);
                let (bp, b) = site(ix[1]);
                let (cp, cc) = site(ix[2]);
                let (dp, dd) = site(ix[3]);
                k.get(ap, bp)
                    * comp.h_top.get(ap, a, cp, cc)
                    * h2.get(bp, b, dp, dd)
                    * norm
            })
        }
    };
    Ok(Gate2::from_tensor(tensor)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Du3Variant {
    /// Diagonal layer controlled-coupled to a DU layer:
    /// U = H_{a'a,b'b} δ_ac δ_bd K2_{b'd'} K3_{d'c'} K4_{c'a'} / q1.
    DuTimesDiag,
    /// Diagonal layer coupled to a honeycomb DU2 layer:
    /// U = H_{a'a,b'b} δ_ac δ_bd K1_{a'c'} K2_{b'd'} / q1.
    Du2TimesDiag,
}

pub fn multilayer_du3_gate(
    variant: Du3Variant,
    h_top: &MultilayerChm,
    q1_chms: &[&ChmMatrix],
) -> Result<Gate2, ComposeError> {
    let q1 = h_top.q1;
    let q2 = h_top.q2;
    let d = q1 * q2;
    if d * d > MAX_MATRIX_DIM {
        return Err(ComposeError::MemoryGuard(d * d));
    }
    let site = |composite: usize| (composite / q2, composite % q2);
    let norm = c(1.0 / q1 as f64, 0.0);
    let tensor = match variant {
        Du3Variant::DuTimesDiag => {
            let [k2, k3, k4]: [&ChmMatrix; 3] = q1_chms
                .try_into()
                .map_err(|_| ComposeError::ControlRange(q1_chms.len(), 3))?;
            ComplexTensor::from_fn(vec![d, d, d, d], |ix| {
                let (ap, a) = site(ix[0]);
                let (bp, b) = site(ix[1]);
                let (cp, cc) = site(ix[2]);
                let (dp, dd) = site(ix[3]);
                if a != cc || b != dd {
                    return c(0.0, 0.0);
                }
                h_top.get(ap, a, bp, b) * k2.get(bp, dp) * k3.get(dp, cp) * k4.get(cp, ap) * norm
            })
        }
        Du3Variant::Du2TimesDiag => {
            let [k1, k2]: [&ChmMatrix; 2] = q1_chms
                .try_into()
                .map_err(|_| ComposeError::ControlRange(q1_chms.len(), 2))?;
            ComplexTensor::from_fn(vec![d, d, d, d], |ix| {
                let (ap, a) = site(ix[0]);
                let (bp, b) = site(ix[1]);
                let (cp, cc) = site(ix[2]);
                let (dp, dd) = site(ix[3]);
                if a != cc || b != dd {
                    return c(0.0, 0.0);
                }
                h_top.get(ap, a, bp, b) * k1.get(ap, cp) * k2.get(bp, dp) * norm
            })
        }
    };
    Ok(Gate2::from_tensor(tensor)?)
}

// ---------------------------------------------------------------------------
// Velocity enumeration
// ---------------------------------------------------------------------------

/// Admissible (Schmidt rank, entanglement velocity) pairs for DU2 gates on
/// q-dimensional sites: each prime factor q_i of q contributes a rank factor
/// from {1, q_i, q_i²}.
pub fn allowed_velocities(q: usize) -> Vec<(usize, f64)> {
    assert!(q >= 2, "site dimension must be at least 2");
    let mut factors: Vec<usize> = Vec::new();
    let mut n = q;
    let mut p = 2;
    while n > 1 {
        while n % p == 0 {
            factors.push(p);
            n /= p;
        }
        p += 1;
    }
    let mut ranks = vec![1usize];
    for &f in &factors {
        let mut next = Vec::new();
        for r in &ranks {
            for nu in 0..=2usize {
                next.push(r * f.pow(nu as u32));
            }
        }
        ranks = next;
    }
    ranks.sort_unstable();
    ranks.dedup();
    let log_d2 = 2.0 * (q as f64).ln();
    ranks
        .into_iter()
        .map(|r| (r, (r as f64).ln() / log_d2))
        .collect()
}

/// Validate a CHM against the catalog verifier, for recipe loading.
pub fn chm_from_entries(entries: ComplexTensor) -> Result<ChmMatrix, ComposeError> {
    verify_chm(&entries, DEFAULT_TOL)?;
    Ok(ChmMatrix::new(entries)?)
}
