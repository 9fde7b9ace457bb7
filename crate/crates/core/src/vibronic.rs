//! Vibronic coupling models and their truncated matrices.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = sum_r ω_r (n_r + 1/2) + sum_n |n><n| (E_n + sum_r f_r^(n)(Q_r))
//!   + sum_{n<m} sum_r λ_r^(nm) (|n><m| + |m><n|) Q_r
//! ```
//!
//! in the physical electronic basis. A Morse entry replaces the harmonic
//! potential `ω/2 Q^2` of its state, so its diagonal function is stored as
//! `V_Morse(Q) - ω/2 Q^2`. Every diagonal function is evaluated as an exact
//! function of the truncated `Q`.

use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::UracilDataset;
use crate::fock::{FockConfig, PositionBasis};
use crate::linalg::lanczos_max_eigenvalue;
use crate::potentials::PotentialSpec;
use crate::{CVector, Error, Exec, RMatrix, Result, C64};

/// Largest total dimension accepted by any assembly routine.
pub const MAX_TOTAL_DIM: usize = 1_000_000;
/// Largest total dimension for which a dense matrix is built.
pub const MAX_DENSE_DIM: usize = 8192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeModel {
    pub label: String,
    /// Harmonic frequency in eV.
    pub omega: f64,
    /// Tabulated potential `f_r^(n)` per model state.
    pub potentials: Vec<PotentialSpec>,
    /// Whether the state's potential replaces the harmonic `ω/2 Q^2`.
    pub replaces_harmonic: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub n: usize,
    pub m: usize,
    pub mode: usize,
    /// Coupling constant in eV.
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VibronicModel {
    pub name: String,
    pub states: Vec<String>,
    /// State energies `E_n` in eV.
    pub energies: Vec<f64>,
    pub modes: Vec<ModeModel>,
    /// Off-diagonal couplings with `n < m`.
    pub couplings: Vec<Coupling>,
}

/// Restricts the dataset to the named modes and states (all of them when a list is empty).
pub fn build_model(ds: &UracilDataset, modes: &[String], states: &[String]) -> Result<VibronicModel> {
    ds.validate()?;
    let state_names: Vec<String> = if states.is_empty() { ds.states.clone() } else { states.to_vec() };
    for s in &state_names {
        ds.state_index(s)?;
    }
    if (1..state_names.len()).any(|i| state_names[..i].contains(&state_names[i])) {
        return Err(Error::InvalidConfig("state subset lists a state twice".into()));
    }
    let mode_entries =
        if modes.is_empty() { ds.modes.iter().collect::<Vec<_>>() } else { modes.iter().map(|l| ds.mode(l)).collect::<Result<Vec<_>>>()? };
    if (1..mode_entries.len()).any(|i| mode_entries[..i].iter().any(|m| m.label == mode_entries[i].label)) {
        return Err(Error::InvalidConfig("mode subset lists a mode twice".into()));
    }
    let energies = state_names.iter().map(|s| ds.energy(ds.state_index(s).unwrap_or(0))).collect();
    let mut out_modes = Vec::new();
    let mut couplings = Vec::new();
    for (r, m) in mode_entries.iter().enumerate() {
        let mut potentials = Vec::new();
        let mut replaces = Vec::new();
        for s in &state_names {
            let entry = m.state(s);
            potentials.push(entry.map_or(PotentialSpec::Zero, |e| e.potential()));
            replaces.push(entry.is_some_and(|e| e.morse.is_some()));
        }
        for n in 0..state_names.len() {
            for k in n + 1..state_names.len() {
                let lambda = m.coupling(&state_names[n], &state_names[k]);
                if lambda != 0.0 {
                    couplings.push(Coupling { n, m: k, mode: r, lambda });
                }
            }
        }
        out_modes.push(ModeModel { label: m.label.clone(), omega: m.omega_ev(), potentials, replaces_harmonic: replaces });
    }
    let model = VibronicModel { name: ds.name.clone(), states: state_names, energies, modes: out_modes, couplings };
    model.validate()?;
    Ok(model)
}

impl VibronicModel {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        if n == 0 {
            return Err(Error::InvalidConfig("model has no electronic states".into()));
        }
        if self.energies.len() != n {
            return Err(Error::InvalidConfig("one energy per state is required".into()));
        }
        for m in &self.modes {
            if m.potentials.len() != n || m.replaces_harmonic.len() != n {
                return Err(Error::InvalidConfig(format!("mode {} needs one potential per state", m.label)));
            }
            if !(m.omega > 0.0 && m.omega.is_finite()) {
                return Err(Error::InvalidConfig(format!("mode {} has non-positive frequency", m.label)));
            }
            m.potentials.iter().try_for_each(|p| p.validate())?;
        }
        for c in &self.couplings {
            if c.n >= c.m || c.m >= n || c.mode >= self.n_modes() || !c.lambda.is_finite() {
                return Err(Error::InvalidConfig(format!("invalid coupling {c:?}")));
            }
        }
        Ok(())
    }

    /// Index of the state called `name`.
    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states.iter().position(|s| s == name).ok_or_else(|| Error::InvalidConfig(format!("state {name:?} is not in the model")))
    }

    /// Index of the mode labelled `label`.
    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.modes.iter().position(|m| m.label == label).ok_or_else(|| Error::InvalidConfig(format!("mode {label:?} is not in the model")))
    }

    pub fn is_anharmonic_mode(&self, r: usize) -> bool {
        self.modes[r].potentials.iter().any(|p| p.is_anharmonic())
    }

    /// Number of anharmonic modes `M'`.
    pub fn n_anharmonic_modes(&self) -> usize {
        (0..self.n_modes()).filter(|&r| self.is_anharmonic_mode(r)).count()
    }

    /// `(n, r)` pairs whose diagonal function is anharmonic.
    pub fn anharmonic_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n_modes())
            .flat_map(|r| (0..self.n_states()).map(move |n| (n, r)))
            .filter(|&(n, r)| self.modes[r].potentials[n].is_anharmonic())
            .collect()
    }

    /// Diagonal function added to `ω_r (n_r + 1/2)` for state `n`.
    pub fn diagonal_function(&self, n: usize, r: usize) -> PotentialSpec {
        let m = &self.modes[r];
        let f = m.potentials[n].clone();
        if m.replaces_harmonic[n] {
            f.plus(PotentialSpec::Quadratic { gamma: -m.omega })
        } else {
            f
        }
    }

    /// Coupling constant between states `n` and `m` on mode `r`.
    pub fn coupling(&self, n: usize, m: usize, r: usize) -> f64 {
        let (a, b) = (n.min(m), n.max(m));
        self.couplings.iter().find(|c| c.n == a && c.m == b && c.mode == r).map_or(0.0, |c| c.lambda)
    }

    /// Quadratic vibronic coupling variant: every Morse term replaced by its Taylor expansion at `q0`.
    pub fn qvc_variant(&self) -> VibronicModel {
        let mut out = self.clone();
        for m in &mut out.modes {
            m.potentials = m.potentials.iter().map(|p| p.qvc_approximation()).collect();
        }
        out
    }

    /// The same model without off-diagonal couplings.
    pub fn without_couplings(&self) -> VibronicModel {
        VibronicModel { couplings: Vec::new(), ..self.clone() }
    }

    /// `N · dim^M`, if it does not overflow.
    pub fn total_dim(&self, cfg: FockConfig) -> Option<usize> {
        cfg.dim.checked_pow(self.n_modes() as u32)?.checked_mul(self.n_states())
    }

    /// Plain-text summary of states, modes, `M'`, `Γ` and dimension.
    pub fn summary(&self, cfg: FockConfig, gamma: Option<f64>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model: {}", self.name);
        let _ = writeln!(s, "states (N = {}): {}", self.n_states(), self.states.join(", "));
        let _ = writeln!(s, "modes (M = {}): {}", self.n_modes(), self.modes.iter().map(|m| m.label.as_str()).collect::<Vec<_>>().join(", "));
        let anh: Vec<&str> = (0..self.n_modes()).filter(|&r| self.is_anharmonic_mode(r)).map(|r| self.modes[r].label.as_str()).collect();
        let _ = writeln!(s, "anharmonic modes (M' = {}): {}", anh.len(), anh.join(", "));
        let _ = writeln!(s, "couplings: {}", self.couplings.len());
        match self.total_dim(cfg) {
            Some(d) => {
                let _ = writeln!(s, "Fock dimension per mode: {}; total dimension: {d}", cfg.dim);
            }
            None => {
                let _ = writeln!(s, "Fock dimension per mode: {}; total dimension overflows", cfg.dim);
            }
        }
        if let Some(g) = gamma {
            let _ = writeln!(s, "commutator bound Gamma: {g:.6e} eV^2");
        }
        s
    }
}

/// Single-mode matrices of a model on a truncated Fock space.
#[derive(Clone, Debug)]
pub struct ModelOperators {
    pub dim: usize,
    pub n_states: usize,
    pub n_modes: usize,
    pub basis: PositionBasis,
    pub q: RMatrix,
    /// `ω_r (n + 1/2)` per mode.
    pub harmonic: Vec<RMatrix>,
    /// `f_r^(n)(Q)` indexed `[n][r]`.
    pub diagonal: Vec<Vec<RMatrix>>,
    pub energies: Vec<f64>,
    pub couplings: Vec<Coupling>,
}

impl ModelOperators {
    pub fn new(model: &VibronicModel, cfg: FockConfig) -> Result<Self> {
        model.validate()?;
        let total = model.total_dim(cfg).filter(|&d| d <= MAX_TOTAL_DIM).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "{} states x {}^{} oscillator levels exceed the dimension limit {MAX_TOTAL_DIM}",
                model.n_states(),
                cfg.dim,
                model.n_modes()
            ))
        })?;
        let _ = total;
        let basis = PositionBasis::new(cfg);
        let q = crate::fock::position_operator(cfg);
        let harmonic = model.modes.iter().map(|m| RMatrix::from_diagonal(&DVector::from_fn(cfg.dim, |i, _| m.omega * (i as f64 + 0.5)))).collect();
        let mut diagonal = Vec::with_capacity(model.n_states());
        for n in 0..model.n_states() {
            let mut row = Vec::with_capacity(model.n_modes());
            for r in 0..model.n_modes() {
                let f = model.diagonal_function(n, r);
                let values: Vec<f64> = basis.nodes().iter().map(|&x| f.evaluate(x)).collect::<Result<_>>()?;
                let mut scaled = basis.vectors().clone();
                for (j, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= values[j];
                }
                row.push(scaled * basis.vectors().transpose());
            }
            diagonal.push(row);
        }
        Ok(Self {
            dim: cfg.dim,
            n_states: model.n_states(),
            n_modes: model.n_modes(),
            basis,
            q,
            harmonic,
            diagonal,
            energies: model.energies.clone(),
            couplings: model.couplings.clone(),
        })
    }

    pub fn osc_len(&self) -> usize {
        self.dim.pow(self.n_modes as u32)
    }

    pub fn total_dim(&self) -> usize {
        self.n_states * self.osc_len()
    }

    #[allow(clippy::too_many_arguments)]
    fn add_mode_op(&self, v: &[C64], out: &mut [C64], block_in: usize, block_out: usize, r: usize, a: &RMatrix, coeff: f64) {
        let ol = self.osc_len();
        let src = &v[block_in * ol..(block_in + 1) * ol];
        let dst = &mut out[block_out * ol..(block_out + 1) * ol];
        mode_matvec(src, dst, self.dim, self.n_modes, r, a, C64::new(coeff, 0.0));
    }

    /// Action of all diagonal terms (harmonic, energies, diagonal functions).
    pub fn apply_diagonal(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(v.len());
        let (vs, os) = (v.as_slice(), out.as_mut_slice());
        let ol = self.osc_len();
        for n in 0..self.n_states {
            for i in 0..ol {
                os[n * ol + i] += vs[n * ol + i] * self.energies[n];
            }
            for r in 0..self.n_modes {
                self.add_mode_op(vs, os, n, n, r, &self.harmonic[r], 1.0);
                self.add_mode_op(vs, os, n, n, r, &self.diagonal[n][r], 1.0);
            }
        }
        out
    }

    /// Action of the off-diagonal couplings, optionally restricted to one of them.
    pub fn apply_offdiagonal(&self, v: &CVector, only: Option<usize>) -> CVector {
        let mut out = CVector::zeros(v.len());
        let (vs, os) = (v.as_slice(), out.as_mut_slice());
        for (k, c) in self.couplings.iter().enumerate() {
            if only.is_some_and(|o| o != k) {
                continue;
            }
            self.add_mode_op(vs, os, c.m, c.n, c.mode, &self.q, c.lambda);
            self.add_mode_op(vs, os, c.n, c.m, c.mode, &self.q, c.lambda);
        }
        out
    }

    pub fn apply_hamiltonian(&self, v: &CVector) -> CVector {
        self.apply_diagonal(v) + self.apply_offdiagonal(v, None)
    }

    /// `I ⊗ ... ⊗ A ⊗ ... ⊗ I` on the oscillator space, with `A` on mode `r`.
    fn embed_mode(&self, r: usize, a: &RMatrix) -> RMatrix {
        let left = self.dim.pow(r as u32);
        let right = self.dim.pow((self.n_modes - 1 - r) as u32);
        RMatrix::identity(left, left).kronecker(a).kronecker(&RMatrix::identity(right, right))
    }

    fn check_dense(&self) -> Result<()> {
        if self.total_dim() > MAX_DENSE_DIM {
            return Err(Error::InvalidConfig(format!("dense assembly of dimension {} exceeds the limit {MAX_DENSE_DIM}", self.total_dim())));
        }
        Ok(())
    }

    /// Dense diagonal part.
    pub fn dense_diagonal(&self) -> Result<RMatrix> {
        self.check_dense()?;
        let ol = self.osc_len();
        let mut h = RMatrix::zeros(self.total_dim(), self.total_dim());
        for n in 0..self.n_states {
            let mut blk = RMatrix::identity(ol, ol) * self.energies[n];
            for r in 0..self.n_modes {
                blk += self.embed_mode(r, &(&self.harmonic[r] + &self.diagonal[n][r]));
            }
            h.view_mut((n * ol, n * ol), (ol, ol)).copy_from(&blk);
        }
        Ok(h)
    }

    /// Dense off-diagonal part, or one coupling term.
    pub fn dense_offdiagonal(&self, only: Option<usize>) -> Result<RMatrix> {
        self.check_dense()?;
        let ol = self.osc_len();
        let mut h = RMatrix::zeros(self.total_dim(), self.total_dim());
        for (k, c) in self.couplings.iter().enumerate() {
            if only.is_some_and(|o| o != k) {
                continue;
            }
            let blk = self.embed_mode(c.mode, &self.q) * c.lambda;
            let mut v = h.view_mut((c.n * ol, c.m * ol), (ol, ol));
            v += &blk;
            let mut v = h.view_mut((c.m * ol, c.n * ol), (ol, ol));
            v += &blk;
        }
        Ok(h)
    }
}

/// `dst += coeff · (A on mode r) src` for one oscillator block of `dim^n_modes` amplitudes.
pub(crate) fn mode_matvec(src: &[C64], dst: &mut [C64], dim: usize, n_modes: usize, r: usize, a: &RMatrix, coeff: C64) {
    let stride = dim.pow((n_modes - 1 - r) as u32);
    let mut column = vec![C64::new(0.0, 0.0); dim];
    for outer in 0..src.len() / (dim * stride) {
        let base = outer * dim * stride;
        for inner in 0..stride {
            for (k, c) in column.iter_mut().enumerate() {
                *c = src[base + k * stride + inner];
            }
            for i in 0..dim {
                let mut s = C64::new(0.0, 0.0);
                for (k, c) in column.iter().enumerate() {
                    s += c * a[(i, k)];
                }
                dst[base + i * stride + inner] += s * coeff;
            }
        }
    }
}

/// Dense Hamiltonian in the physical electronic basis.
#[derive(Clone, Debug)]
pub struct TruncatedHamiltonian {
    pub matrix: RMatrix,
    pub n_states: usize,
    pub dim: usize,
    pub n_modes: usize,
}

impl TruncatedHamiltonian {
    /// `max |H - H^T|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// Block `(n, m)` of the electronic block structure.
    pub fn block(&self, n: usize, m: usize) -> RMatrix {
        let ol = self.dim.pow(self.n_modes as u32);
        self.matrix.view((n * ol, m * ol), (ol, ol)).into_owned()
    }
}

pub fn assemble_matrix(model: &VibronicModel, cfg: FockConfig) -> Result<TruncatedHamiltonian> {
    let ops = ModelOperators::new(model, cfg)?;
    let matrix = ops.dense_diagonal()? + ops.dense_offdiagonal(None)?;
    Ok(TruncatedHamiltonian { matrix, n_states: model.n_states(), dim: cfg.dim, n_modes: model.n_modes() })
}

/// Commutator bound
///
/// ```text
/// Γ = ‖[Σ H_diag, Σ H_off]‖ + Σ_r Σ_{(n,m) ≠ (n',m')} ‖[H_off^(n,m,r), H_off^(n',m',r)]‖
/// ```
///
/// with spectral norms on the truncated space. The first norm comes from
/// Lanczos on `C†C`; the pair terms factor as `|λλ'| ‖[X, X']‖ ‖Q^2‖`.
pub fn commutator_bound(model: &VibronicModel, cfg: FockConfig) -> Result<f64> {
    commutator_bound_with(&ModelOperators::new(model, cfg)?, Exec::default())
}

pub fn commutator_bound_with(ops: &ModelOperators, _exec: Exec) -> Result<f64> {
    if ops.couplings.is_empty() {
        return Ok(0.0);
    }
    let commutator = |v: &CVector| ops.apply_diagonal(&ops.apply_offdiagonal(v, None)) - ops.apply_offdiagonal(&ops.apply_diagonal(v), None);
    // C is real antisymmetric, so C†C = -C^2.
    let first = lanczos_max_eigenvalue(ops.total_dim(), |v| -commutator(&commutator(v))).max(0.0).sqrt();
    let q2 = ops.basis.nodes().iter().map(|x| x * x).fold(0.0, f64::max);
    let n = ops.n_states;
    let x = |c: &Coupling| {
        let mut m = RMatrix::zeros(n, n);
        m[(c.n, c.m)] = 1.0;
        m[(c.m, c.n)] = 1.0;
        m
    };
    let mut pairs = 0.0;
    for (i, a) in ops.couplings.iter().enumerate() {
        for (j, b) in ops.couplings.iter().enumerate() {
            if i == j || a.mode != b.mode {
                continue;
            }
            let (xa, xb) = (x(a), x(b));
            let comm = &xa * &xb - &xb * &xa;
            let norm = comm.singular_values().iter().cloned().fold(0.0, f64::max);
            pairs += (a.lambda * b.lambda).abs() * norm * q2;
        }
    }
    Ok(first + pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sorted_symmetric_eigen;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn reduced(states: &[&str]) -> VibronicModel {
        build_model(&UracilDataset::builtin(), &names(&["nu21", "nu26"]), &names(states)).unwrap()
    }

    #[test]
    fn subset_shapes() {
        let m = reduced(&["D1", "D3"]);
        assert_eq!((m.n_modes(), m.n_states(), m.n_anharmonic_modes()), (2, 2, 1));
        assert_eq!(m.couplings.len(), 2);
        let full = build_model(&UracilDataset::builtin(), &[], &[]).unwrap();
        assert_eq!((full.n_states(), full.n_modes(), full.n_anharmonic_modes()), (4, 12, 5));
        assert!(full.couplings.iter().all(|c| !(c.m == 3 && (c.n == 0 || c.n == 2))));
        assert!(build_model(&UracilDataset::builtin(), &names(&["nu99"]), &[]).is_err());
        assert!(build_model(&UracilDataset::builtin(), &[], &names(&["D7"])).is_err());
    }

    #[test]
    fn morse_replaces_the_harmonic_potential() {
        let m = reduced(&["D0", "D2"]);
        let r = m.mode_index("nu26").unwrap();
        let f = m.diagonal_function(1, r);
        let omega = m.modes[r].omega;
        let x: f64 = 0.7;
        let morse = 9.46894 * ((-0.08653 * (x - 0.37635)).exp() - 1.0).powi(2) - 0.01037;
        assert!((f.evaluate(x).unwrap() - (morse - 0.5 * omega * x * x)).abs() < 1e-12);
        let r21 = m.mode_index("nu21").unwrap();
        assert!(!m.modes[r21].replaces_harmonic[0]);
    }

    #[test]
    fn harmonic_spectrum() {
        let ds = UracilDataset::builtin();
        let mut m = build_model(&ds, &names(&["nu7"]), &names(&["D0"])).unwrap();
        m.modes[0].potentials[0] = PotentialSpec::Zero;
        let cfg = FockConfig::new(12).unwrap();
        let h = assemble_matrix(&m, cfg).unwrap();
        let (ev, _) = sorted_symmetric_eigen(h.matrix);
        let w = m.modes[0].omega;
        for (n, e) in ev.iter().take(6).enumerate() {
            assert!((e - w * (n as f64 + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn block_structure_and_hermiticity() {
        let m = reduced(&["D0", "D2"]);
        let cfg = FockConfig::new(30).unwrap();
        let h = assemble_matrix(&m, cfg).unwrap();
        assert!(h.hermiticity_defect() <= 1e-12);
        let uncoupled = assemble_matrix(&m.without_couplings(), cfg).unwrap();
        assert_eq!(uncoupled.block(0, 1).amax(), 0.0);
        assert!(h.block(0, 1).amax() > 0.0);
    }

    #[test]
    fn structured_action_matches_dense() {
        let m = reduced(&["D1", "D3"]);
        let ops = ModelOperators::new(&m, FockConfig::new(6).unwrap()).unwrap();
        let dense = ops.dense_diagonal().unwrap() + ops.dense_offdiagonal(None).unwrap();
        let v = CVector::from_fn(ops.total_dim(), |i, _| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
        let expect = crate::linalg::to_complex(&dense) * &v;
        assert!((ops.apply_hamiltonian(&v) - expect).camax() < 1e-12);
    }

    #[test]
    fn qvc_variant_differs_from_morse() {
        let m = reduced(&["D0", "D2"]);
        let cfg = FockConfig::new(20).unwrap();
        let a = assemble_matrix(&m, cfg).unwrap().matrix;
        let b = assemble_matrix(&m.qvc_variant(), cfg).unwrap().matrix;
        assert!((a - b).norm() > 0.0);
    }

    #[test]
    fn same_mode_diagonals_commute() {
        let m = build_model(&UracilDataset::builtin(), &names(&["nu26"]), &[]).unwrap();
        let ops = ModelOperators::new(&m, FockConfig::new(20).unwrap()).unwrap();
        for n in 0..4 {
            for k in 0..4 {
                let (a, b) = (&ops.diagonal[n][0], &ops.diagonal[k][0]);
                assert!((a * b - b * a).amax() <= 1e-10);
            }
        }
    }

    fn dense_gamma(ops: &ModelOperators) -> f64 {
        let d = ops.dense_diagonal().unwrap();
        let o = ops.dense_offdiagonal(None).unwrap();
        let norm = |m: RMatrix| m.singular_values().iter().cloned().fold(0.0, f64::max);
        let mut g = norm(&d * &o - &o * &d);
        for i in 0..ops.couplings.len() {
            for j in 0..ops.couplings.len() {
                if i != j && ops.couplings[i].mode == ops.couplings[j].mode {
                    let a = ops.dense_offdiagonal(Some(i)).unwrap();
                    let b = ops.dense_offdiagonal(Some(j)).unwrap();
                    g += norm(&a * &b - &b * &a);
                }
            }
        }
        g
    }

    #[test]
    fn gamma_matches_dense_oracle() {
        let cfg = FockConfig::new(8).unwrap();
        for states in [vec!["D0", "D2"], vec!["D0", "D1", "D2"]] {
            let m = build_model(&UracilDataset::builtin(), &names(&["nu21", "nu26", "nu10"]), &names(&states)).unwrap();
            let ops = ModelOperators::new(&m, cfg).unwrap();
            let g = commutator_bound_with(&ops, Exec::default()).unwrap();
            let oracle = dense_gamma(&ops);
            assert!(g > 0.0);
            assert!((g - oracle).abs() <= 1e-8 * oracle.max(1.0), "{g} vs {oracle}");
        }
        let m = reduced(&["D0", "D2"]).without_couplings();
        assert_eq!(commutator_bound(&m, cfg).unwrap(), 0.0);
    }

    #[test]
    fn gamma_is_invariant_under_relabelling_states() {
        // Swapping the state order is a unitary conjugation of every block.
        let cfg = FockConfig::new(10).unwrap();
        let a = reduced(&["D0", "D2"]);
        let b = reduced(&["D2", "D0"]);
        let (ga, gb) = (commutator_bound(&a, cfg).unwrap(), commutator_bound(&b, cfg).unwrap());
        assert!((ga - gb).abs() <= 1e-8 * ga);
    }

    #[test]
    fn dimension_guards() {
        let full = build_model(&UracilDataset::builtin(), &[], &[]).unwrap();
        assert!(ModelOperators::new(&full, FockConfig::new(30).unwrap()).is_err());
        let m = reduced(&["D0", "D2"]);
        let ops = ModelOperators::new(&m, FockConfig::new(70).unwrap()).unwrap();
        assert!(ops.dense_diagonal().is_err());
    }

    #[test]
    fn summary_mentions_counts() {
        let m = reduced(&["D1", "D3"]);
        let s = m.summary(FockConfig::new(30).unwrap(), Some(0.5));
        assert!(s.contains("M' = 1"));
        assert!(s.contains("total dimension: 1800"));
    }
}
