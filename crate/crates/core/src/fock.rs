//! Truncated Fock-space operators and hybrid qubit-oscillator states.
//!
//! Ladder operators act on `span{|0>, ..., |dim-1>}`. The position operator
//! is `Q = (a + a†)/sqrt(2)`; its eigenvectors give the position basis used
//! to evaluate any function of `Q` exactly within the truncation.
//!
//! Hybrid states are stored qubit-major, oscillator-minor. Qubit 0 is the
//! most significant bit of the qubit index and oscillator 0 the most
//! significant oscillator digit.

use serde::{Deserialize, Serialize};

use crate::linalg::sorted_symmetric_eigen;
use crate::{CMatrix, CVector, Error, RMatrix, Result, C64};

/// Default oscillator truncation.
pub const DEFAULT_DIM: usize = 30;

/// Upper bound on hybrid state-vector length accepted by [`HybridLayout::new`].
pub const MAX_STATE_LEN: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockConfig {
    pub dim: usize,
}

impl FockConfig {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig(format!("Fock dimension must be at least 2, got {dim}")));
        }
        Ok(Self { dim })
    }
}

impl Default for FockConfig {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM }
    }
}

/// Annihilation operator `a` with `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(cfg: FockConfig) -> RMatrix {
    RMatrix::from_fn(cfg.dim, cfg.dim, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// Creation operator `a†`.
pub fn creation(cfg: FockConfig) -> RMatrix {
    annihilation(cfg).transpose()
}

/// Number operator, built directly as `diag(0, 1, ..., dim-1)`.
pub fn number_operator(cfg: FockConfig) -> RMatrix {
    RMatrix::from_diagonal(&nalgebra::DVector::from_fn(cfg.dim, |i, _| i as f64))
}

/// Position quadrature `(a + a†)/sqrt(2)`.
pub fn position_operator(cfg: FockConfig) -> RMatrix {
    let a = annihilation(cfg);
    (&a + a.transpose()) * std::f64::consts::FRAC_1_SQRT_2
}

/// Momentum quadrature `i(a† - a)/sqrt(2)`.
pub fn momentum_operator(cfg: FockConfig) -> CMatrix {
    let a = annihilation(cfg);
    (a.transpose() - &a).map(|x| C64::new(0.0, x * std::f64::consts::FRAC_1_SQRT_2))
}

/// Eigenbasis of the truncated position operator.
///
/// The nodes are the zeros of the Hermite polynomial `H_dim` and the squared
/// first components of the eigenvectors are the matching Gauss-Hermite weights.
#[derive(Clone, Debug)]
pub struct PositionBasis {
    nodes: Vec<f64>,
    vectors: RMatrix,
}

impl PositionBasis {
    pub fn new(cfg: FockConfig) -> Self {
        let (nodes, mut vectors) = sorted_symmetric_eigen(position_operator(cfg));
        for mut col in vectors.column_iter_mut() {
            if col[0] < 0.0 {
                col.neg_mut();
            }
        }
        Self { nodes, vectors }
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Eigenvalues of `Q`, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Orthogonal matrix whose column `j` is the eigenvector for node `j`.
    pub fn vectors(&self) -> &RMatrix {
        &self.vectors
    }

    /// `f(Q)` for a complex-valued `f`.
    pub fn function<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let n = self.dim();
        let values: Vec<C64> = self.nodes.iter().map(|&x| f(x)).collect();
        CMatrix::from_fn(n, n, |r, c| (0..n).map(|j| values[j] * (self.vectors[(r, j)] * self.vectors[(c, j)])).sum())
    }

    /// `f(Q)` for a real-valued `f`.
    pub fn real_function<F: Fn(f64) -> f64>(&self, f: F) -> RMatrix {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.nodes[j]);
        }
        scaled * self.vectors.transpose()
    }

    /// Components `<x_j|psi>` of a Fock-basis vector.
    pub fn to_position(&self, psi: &CVector) -> CVector {
        self.vectors.map(C64::from).transpose() * psi
    }
}

/// `exp(i theta Q)`.
pub fn phase_operator(cfg: FockConfig, theta: f64) -> CMatrix {
    PositionBasis::new(cfg).function(|x| C64::from_polar(1.0, theta * x))
}

/// Displacement `exp(alpha a† - conj(alpha) a)` within the truncation.
pub fn displacement_operator(cfg: FockConfig, alpha: C64) -> CMatrix {
    let a = annihilation(cfg).map(C64::from);
    let generator = a.transpose() * alpha - &a * alpha.conj();
    // generator is anti-Hermitian: exp(G) = exp(-i H) with H = i G.
    let h = generator * C64::i();
    crate::linalg::exp_i_hermitian(&h, 1.0)
}

/// Shape of a hybrid register of qubits and identical truncated oscillators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HybridLayout {
    pub n_qubits: usize,
    pub n_osc: usize,
    pub dim: usize,
}

impl HybridLayout {
    pub fn new(n_qubits: usize, n_osc: usize, dim: usize) -> Result<Self> {
        FockConfig::new(dim)?;
        dim.checked_pow(n_osc as u32).and_then(|o| o.checked_mul(1usize.checked_shl(n_qubits as u32)?)).filter(|&l| l <= MAX_STATE_LEN).ok_or_else(
            || Error::InvalidConfig(format!("{n_qubits} qubits and {n_osc} oscillators of dimension {dim} exceed the state-size limit")),
        )?;
        Ok(Self { n_qubits, n_osc, dim })
    }

    /// Number of oscillator amplitudes per qubit basis state.
    pub fn osc_len(&self) -> usize {
        self.dim.pow(self.n_osc as u32)
    }

    pub fn len(&self) -> usize {
        (1 << self.n_qubits) * self.osc_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bit mask of qubit `q` inside the qubit index.
    pub fn qubit_mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    /// Stride of oscillator `r` inside the oscillator index.
    pub fn osc_stride(&self, r: usize) -> usize {
        self.dim.pow((self.n_osc - 1 - r) as u32)
    }

    /// Flat index of qubit bitstring `qubits` and Fock occupations `occ`.
    pub fn index(&self, qubits: usize, occ: &[usize]) -> usize {
        let o = occ.iter().fold(0, |acc, &n| acc * self.dim + n);
        qubits * self.osc_len() + o
    }
}

#[derive(Clone, Debug)]
pub struct HybridState {
    layout: HybridLayout,
    amplitudes: CVector,
}

impl HybridState {
    pub fn from_amplitudes(layout: HybridLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.len() {
            return Err(Error::DimensionMismatch(format!("expected {} amplitudes, got {}", layout.len(), amplitudes.len())));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Product state of computational-basis qubits and per-oscillator Fock vectors.
    pub fn product(layout: HybridLayout, qubit_bits: &[u8], oscillators: &[CVector]) -> Result<Self> {
        if qubit_bits.len() != layout.n_qubits || oscillators.len() != layout.n_osc {
            return Err(Error::DimensionMismatch("product state factors do not match the layout".into()));
        }
        if let Some(v) = oscillators.iter().find(|v| v.len() != layout.dim) {
            return Err(Error::DimensionMismatch(format!("oscillator vector of length {} for dimension {}", v.len(), layout.dim)));
        }
        let q = qubit_bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        let mut osc = CVector::from_element(1, C64::from(1.0));
        for v in oscillators {
            osc = osc.kronecker(v);
        }
        let mut amplitudes = CVector::zeros(layout.len());
        let off = q * layout.osc_len();
        amplitudes.rows_mut(off, layout.osc_len()).copy_from(&osc);
        Ok(Self { layout, amplitudes })
    }

    /// All qubits in `|0>` and every oscillator in vacuum.
    pub fn vacuum(layout: HybridLayout) -> Self {
        let mut amplitudes = CVector::zeros(layout.len());
        amplitudes[0] = C64::from(1.0);
        Self { layout, amplitudes }
    }

    pub fn layout(&self) -> HybridLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut CVector {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes /= C64::from(n);
        }
        n
    }

    /// Probability of every qubit bitstring, summed over oscillators.
    pub fn qubit_probabilities(&self) -> Vec<f64> {
        let ol = self.layout.osc_len();
        (0..1 << self.layout.n_qubits).map(|q| self.amplitudes.rows(q * ol, ol).norm_squared()).collect()
    }

    /// Reduced density matrix of oscillator `r`.
    pub fn reduced_oscillator(&self, r: usize) -> Result<CMatrix> {
        if r >= self.layout.n_osc {
            return Err(Error::DimensionMismatch(format!("no oscillator {r}")));
        }
        let d = self.layout.dim;
        let stride = self.layout.osc_stride(r);
        let mut rho = CMatrix::zeros(d, d);
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let n = (idx / stride) % d;
            let base = idx - n * stride;
            for m in 0..d {
                let other = self.amplitudes[base + m * stride];
                rho[(n, m)] += amp * other.conj();
            }
        }
        Ok(rho)
    }
}

/// `|<a|b>|^2` for states of identical layout.
pub fn fidelity(a: &HybridState, b: &HybridState) -> Result<f64> {
    if a.layout != b.layout {
        return Err(Error::DimensionMismatch("fidelity between states of different layouts".into()));
    }
    Ok(a.amplitudes.dotc(&b.amplitudes).norm_sqr())
}

/// Fock-basis vector `|n>`.
pub fn fock_state(cfg: FockConfig, n: usize) -> Result<CVector> {
    if n >= cfg.dim {
        return Err(Error::InvalidConfig(format!("|{n}> lies outside dimension {}", cfg.dim)));
    }
    let mut v = CVector::zeros(cfg.dim);
    v[n] = C64::from(1.0);
    Ok(v)
}

/// Vacuum displaced so that `<Q>` equals `q_shift` and `<P>` equals `p_shift`.
pub fn displaced_vacuum(cfg: FockConfig, q_shift: f64, p_shift: f64) -> CVector {
    let alpha = C64::new(q_shift, p_shift) * std::f64::consts::FRAC_1_SQRT_2;
    let d = displacement_operator(cfg, alpha);
    d.column(0).into_owned()
}
