//! Generalized quantum signal processing with a bosonic signal operator.
//!
//! A program realizes the 2x2 operator-valued unitary
//!
//! ```text
//! e^{i lambda Z} R_{-d} (B R_{-d+1}) ... (B R_0) (A R_1) ... (A R_d) = [[F, -G*], [G, F*]]
//! ```
//!
//! with `R_j = e^{i phi_j X} e^{i theta_j Z}`, `A = diag(w, 1)`, `B = diag(1, 1/w)`
//! and `w = exp(i pi Q / L)`. [`complete`] finds `G` for a given `F` by
//! Fejér-Riesz factorization of `1 - |F|^2`; [`find_angles`] extracts the
//! rotation angles by layer stripping.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::poly::{polynomial_roots, LaurentPoly};
use crate::{Error, Exec, Result, C64};

/// Default safety margin kept between `sup |F|` and 1.
pub const DEFAULT_MARGIN: f64 = 1e-6;
/// Largest Laurent degree accepted by [`complete`].
pub const MAX_DEGREE: usize = 200;
/// Grid size used for residual checks.
pub const CHECK_POINTS: usize = 4096;

/// 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

pub(crate) fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub(crate) fn mat_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// `e^{i theta Z}`.
pub(crate) fn rz(theta: f64) -> Mat2 {
    let z = C64::new(0.0, 0.0);
    [[C64::from_polar(1.0, theta), z], [z, C64::from_polar(1.0, -theta)]]
}

/// `e^{i phi X}`.
pub(crate) fn rx(phi: f64) -> Mat2 {
    let c = C64::from(phi.cos());
    let s = C64::new(0.0, phi.sin());
    [[c, s], [s, c]]
}

/// `e^{i phi X} e^{i theta Z}`.
pub(crate) fn rotation(theta: f64, phi: f64) -> Mat2 {
    mat_mul(&rx(phi), &rz(theta))
}

/// Factorizes an SU(2) matrix as `e^{i lambda Z} e^{i phi X} e^{i theta Z}`, returning `(lambda, phi, theta)`.
fn euler_zxz(u: &Mat2) -> (f64, f64, f64) {
    let alpha = u[0][0];
    let beta = u[1][0];
    let phi = beta.norm().atan2(alpha.norm());
    let tiny = 1e-14;
    if beta.norm() <= tiny {
        (0.0, phi, alpha.arg())
    } else if alpha.norm() <= tiny {
        (0.0, phi, beta.arg() - std::f64::consts::FRAC_PI_2)
    } else {
        let (a, b) = (alpha.arg(), beta.arg());
        let theta = 0.5 * (a + b - std::f64::consts::FRAC_PI_2);
        let lambda = 0.5 * (a - b + std::f64::consts::FRAC_PI_2);
        (lambda, phi, theta)
    }
}

/// A Laurent pair with `|F|^2 + |G|^2 = 1` on the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletedPair {
    pub f: LaurentPoly,
    pub g: LaurentPoly,
    /// `scale * f` equals the polynomial handed to [`complete`].
    pub scale: f64,
}

impl CompletedPair {
    pub fn degree(&self) -> usize {
        self.f.degree()
    }

    /// `max | |F|^2 + |G|^2 - 1 |` over `points` equispaced circle samples.
    pub fn residual(&self, points: usize) -> f64 {
        (0..points)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / points as f64;
                (self.f.eval_angle(t).norm_sqr() + self.g.eval_angle(t).norm_sqr() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CompletionOptions {
    pub margin: f64,
    pub pairing_tolerance: f64,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self { margin: DEFAULT_MARGIN, pairing_tolerance: 1e-7 }
    }
}

/// Finds `G` with `|F|^2 + |G|^2 = 1`, rescaling `F` first if `sup |F| > 1 - margin`.
pub fn complete(f: &LaurentPoly, opts: &CompletionOptions) -> Result<CompletedPair> {
    let d = f.degree();
    if d > MAX_DEGREE {
        return Err(Error::DegreeTooLarge { degree: d, max: MAX_DEGREE });
    }
    if f.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Completion("non-finite coefficient".into()));
    }
    // An F that is already unimodular (a monomial of modulus one) needs no partner.
    let unimodular = (0..256).all(|j| (f.eval_angle(std::f64::consts::TAU * j as f64 / 256.0).norm_sqr() - 1.0).abs() < 1e-13);
    if unimodular {
        let pair = CompletedPair { f: f.clone(), g: LaurentPoly::zero(d), scale: 1.0 };
        if pair.residual(CHECK_POINTS) <= 1e-12 {
            return Ok(pair);
        }
    }
    let sup = f.sup_norm_on_circle();
    let scale = if sup > 1.0 - opts.margin { sup / (1.0 - opts.margin) } else { 1.0 };
    let fs = f.scaled(1.0 / scale);
    let g = partner(&fs, opts)?;
    let pair = CompletedPair { f: fs, g, scale };
    let res = pair.residual(CHECK_POINTS);
    if !(res <= 1e-8) {
        return Err(Error::Completion(format!("completion residual {res:.3e} exceeds 1e-8")));
    }
    Ok(pair)
}

fn partner(f: &LaurentPoly, opts: &CompletionOptions) -> Result<LaurentPoly> {
    let d = f.degree();
    let c = |k: i64| f.coefficient(k);
    // A_m = delta_{m0} - sum_k c_k conj(c_{k-m}), m in [-2d, 2d]
    let dd = d as i64;
    let a: Vec<C64> = (-2 * dd..=2 * dd)
        .map(|m| {
            let mut s = if m == 0 { C64::from(1.0) } else { C64::new(0.0, 0.0) };
            for k in -dd..=dd {
                s -= c(k) * c(k - m).conj();
            }
            s
        })
        .collect();
    let amax = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // Leading and trailing coefficients vanish together (A is Hermitian); each
    // vanishing pair contributes a root at 0 and one at infinity.
    let mut t = 0;
    while t < 2 * d && a[a.len() - 1 - t].norm() <= 1e-15 * amax {
        t += 1;
    }
    let core = &a[t..a.len() - t];
    let roots = polynomial_roots(core)?;
    let half = 2 * d - t;
    if roots.len() != 2 * half {
        return Err(Error::Completion("unexpected number of roots".into()));
    }
    if let Some(r) = roots.iter().find(|r| (r.norm() - 1.0).abs() < opts.pairing_tolerance) {
        return Err(Error::Completion(format!("root {r} lies on the unit circle; |F| touches 1 and the factorization is singular")));
    }
    let mut sorted = roots.clone();
    sorted.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    let (inside, outside) = sorted.split_at(half);
    if inside.last().is_some_and(|r| r.norm() >= 1.0) || outside.first().is_some_and(|r| r.norm() <= 1.0) {
        return Err(Error::Completion("roots do not split evenly across the unit circle".into()));
    }
    // Average each inside root with the reflection of its partner.
    let mut unused: Vec<C64> = outside.to_vec();
    let mut inner = Vec::with_capacity(half);
    for r in inside {
        let (idx, _) =
            unused.iter().enumerate().map(|(i, o)| (i, (1.0 / o.conj() - r).norm())).min_by(|x, y| x.1.total_cmp(&y.1)).unwrap_or((usize::MAX, 0.0));
        if idx == usize::MAX {
            inner.push(*r);
            continue;
        }
        let o = unused.swap_remove(idx);
        let reflected = 1.0 / o.conj();
        let rel = (reflected - r).norm() / r.norm().max(1e-300);
        inner.push(if rel < 1e-4 { 0.5 * (r + reflected) } else { *r });
    }
    // G(z) = K z^{-d+t} prod (z - r_i); sample it on the circle and read off coefficients.
    let n = (8 * (d + 1)).next_power_of_two().max(64);
    let zs: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64)).collect();
    let prod: Vec<C64> = zs.iter().map(|&z| inner.iter().fold(C64::from(1.0), |acc, r| acc * (z - r)) * z.powi(t as i32 - d as i32)).collect();
    let target: f64 = zs.iter().map(|&z| 1.0 - f.eval(z).norm_sqr()).sum();
    let have: f64 = prod.iter().map(|p| p.norm_sqr()).sum();
    if !(have > 0.0) {
        return Err(Error::Completion("degenerate partner polynomial".into()));
    }
    let k = (target / have).max(0.0).sqrt();
    let mut buf: Vec<C64> = prod.iter().map(|p| p * k).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let coeffs = (-(d as i64)..=d as i64).map(|j| buf[j.rem_euclid(n as i64) as usize] / n as f64).collect();
    LaurentPoly::new(coeffs)
}

/// Where a program came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_t: Option<f64>,
    #[serde(default)]
    pub refined: bool,
}

/// Rotation angles realizing a completed pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GqspProgram {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_period: f64,
    pub lambda: f64,
    /// `theta_{-d}, ..., theta_d`.
    pub theta: Vec<f64>,
    /// `phi_{-d}, ..., phi_d`.
    pub phi: Vec<f64>,
    pub scale: f64,
    #[serde(default)]
    pub provenance: Provenance,
}

impl GqspProgram {
    pub fn theta_at(&self, j: i64) -> f64 {
        self.theta[(j + self.d as i64) as usize]
    }

    pub fn phi_at(&self, j: i64) -> f64 {
        self.phi[(j + self.d as i64) as usize]
    }

    pub fn validate(&self) -> Result<()> {
        let n = 2 * self.d + 1;
        if self.theta.len() != n || self.phi.len() != n {
            return Err(Error::InvalidConfig(format!(
                "program of degree {} needs {n} theta and phi values, got {} and {}",
                self.d,
                self.theta.len(),
                self.phi.len()
            )));
        }
        let all = self.theta.iter().chain(&self.phi).chain([&self.lambda, &self.scale, &self.half_period]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("program contains non-finite values".into()));
        }
        if self.half_period <= 0.0 || self.scale <= 0.0 {
            return Err(Error::InvalidConfig("program half-period and scale must be positive".into()));
        }
        Ok(())
    }

    /// The 2x2 matrix of the program for signal value `w` on the unit circle.
    pub fn matrix_at(&self, w: C64) -> Mat2 {
        let zero = C64::new(0.0, 0.0);
        let one = C64::from(1.0);
        let a = [[w, zero], [zero, one]];
        let b = [[one, zero], [zero, 1.0 / w]];
        let d = self.d as i64;
        let mut m = mat_mul(&rz(self.lambda), &rotation(self.theta_at(-d), self.phi_at(-d)));
        for j in -d + 1..=d {
            let sig = if j <= 0 { &b } else { &a };
            m = mat_mul(&mat_mul(&m, sig), &rotation(self.theta_at(j), self.phi_at(j)));
        }
        m
    }

    /// `F` at `samples` equispaced points `w_j = exp(2 pi i j / samples)`.
    pub fn reconstruct_f(&self, samples: usize, exec: Exec) -> Vec<C64> {
        exec.map(samples, |j| self.matrix_at(C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / samples as f64))[0][0])
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: GqspProgram = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

/// Tolerance on coefficients that layer stripping discards.
const STRIP_TOLERANCE: f64 = 1e-6;
/// Tolerance on the coefficient-vector norm between layers.
const DRIFT_TOLERANCE: f64 = 1e-6;

/// Extracts rotation angles from a completed pair by layer stripping, for the default half-period.
pub fn find_angles(pair: &CompletedPair) -> Result<GqspProgram> {
    find_angles_with_period(pair, crate::fourier::DEFAULT_HALF_PERIOD)
}

/// As [`find_angles`], recording the half-period `L` of the signal operator.
pub fn find_angles_with_period(pair: &CompletedPair, half_period: f64) -> Result<GqspProgram> {
    let d = pair.f.degree().max(pair.g.degree());
    let f = pair.f.padded(d);
    let g = pair.g.padded(d);
    let n = 2 * d;
    // P = w^d F and Q = w^d G as ordinary polynomials in w.
    let mut p = f.coeffs.clone();
    let mut q = g.coeffs.clone();
    let norm0: f64 = p.iter().chain(&q).map(|z| z.norm_sqr()).sum();
    if (norm0 - 1.0).abs() > DRIFT_TOLERANCE {
        return Err(Error::Drift { layer: 0, drift: (norm0 - 1.0).abs() });
    }
    let s0 = norm0.sqrt();
    p.iter_mut().chain(q.iter_mut()).for_each(|z| *z /= s0);

    // V = R'_0 A R'_1 A ... A R'_n has first column (P, Q).
    let mut layers: Vec<Mat2> = Vec::with_capacity(n + 1);
    for step in 0..n {
        let deg = n - step;
        let (pn, qn) = (p[deg], q[deg]);
        let lead = (pn.norm_sqr() + qn.norm_sqr()).sqrt();
        let (a, b) = if lead > 1e-13 {
            (pn.conj() / lead, qn.conj() / lead)
        } else {
            let (p0, q0) = (p[0], q[0]);
            let low = (p0.norm_sqr() + q0.norm_sqr()).sqrt();
            if low > 1e-13 {
                (q0 / low, -p0 / low)
            } else {
                (C64::from(1.0), C64::new(0.0, 0.0))
            }
        };
        let (c, dd) = (-b.conj(), a.conj());
        let lo: Vec<C64> = (0..=deg).map(|i| a * p[i] + b * q[i]).collect();
        let hi: Vec<C64> = (0..=deg).map(|i| c * p[i] + dd * q[i]).collect();
        let residual = lo[0].norm().max(hi[deg].norm());
        if residual > STRIP_TOLERANCE {
            return Err(Error::InconsistentPair { layer: step, residual });
        }
        p = lo[1..=deg].to_vec();
        q = hi[..deg].to_vec();
        let norm: f64 = p.iter().chain(&q).map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > DRIFT_TOLERANCE {
            return Err(Error::Drift { layer: step + 1, drift: (norm - 1.0).abs() });
        }
        let s = norm.sqrt();
        p.iter_mut().chain(q.iter_mut()).for_each(|z| *z /= s);
        // R'_k is the adjoint of the stripping rotation [[a, b], [c, dd]].
        layers.push(mat_adjoint(&[[a, b], [c, dd]]));
    }
    let (p0, q0) = (p[0], q[0]);
    layers.push([[p0, -q0.conj()], [q0, p0.conj()]]);

    // Push the leading Z rotation of every layer leftwards through the diagonal signal operator.
    let mut theta = vec![0.0; n + 1];
    let mut phi = vec![0.0; n + 1];
    let mut carry = 0.0;
    let mut lambda = 0.0;
    for k in (0..=n).rev() {
        let u = mat_mul(&layers[k], &rz(carry));
        let (l, ph, th) = euler_zxz(&u);
        theta[k] = th;
        phi[k] = ph;
        if k == 0 {
            lambda = l;
        } else {
            carry = l;
        }
    }
    let program = GqspProgram { d, half_period, lambda, theta, phi, scale: pair.scale, provenance: Provenance::default() };
    Ok(program)
}

/// `max |reconstructed F - F|` over `samples` circle points.
pub fn reconstruction_error(program: &GqspProgram, f: &LaurentPoly, samples: usize, exec: Exec) -> f64 {
    let rec = program.reconstruct_f(samples, exec);
    rec.iter().enumerate().map(|(j, r)| (r - f.eval_angle(std::f64::consts::TAU * j as f64 / samples as f64)).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{fourier_coefficients, PhaseTarget};
    use crate::potentials::PotentialSpec;
    use rand::{Rng, SeedableRng};

    fn laurent(v: &[(f64, f64)]) -> LaurentPoly {
        LaurentPoly::new(v.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap()
    }

    fn random_f(d: usize, sup: f64, seed: u64) -> LaurentPoly {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = LaurentPoly::new((0..2 * d + 1).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()).unwrap();
        p.scaled(sup / p.sup_norm_on_circle())
    }

    #[test]
    fn cosine_completes_to_sine() {
        let f = laurent(&[(0.5, 0.0), (0.0, 0.0), (0.5, 0.0)]);
        let pair = complete(&f, &CompletionOptions::default()).unwrap();
        assert!(pair.scale > 1.0 && pair.scale < 1.0 + 2e-6);
        for j in 0..64 {
            let t = j as f64 * 0.1;
            let g = pair.g.eval_angle(t).norm();
            let expected = (1.0 - (t.cos() / pair.scale).powi(2)).sqrt();
            assert!((g - expected).abs() < 1e-7, "t={t}: {g} vs {expected}");
        }
        assert!(pair.residual(CHECK_POINTS) < 1e-12);
    }

    #[test]
    fn constant_completes_to_constant() {
        let f = laurent(&[(0.6, 0.0)]);
        let pair = complete(&f, &CompletionOptions::default()).unwrap();
        assert_eq!(pair.scale, 1.0);
        assert!((pair.g.coeffs[0].norm() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn random_completion_residuals() {
        for (d, seed) in [(10, 1), (10, 2), (30, 3), (50, 4)] {
            let pair = complete(&random_f(d, 0.9, seed), &CompletionOptions::default()).unwrap();
            assert!(pair.residual(CHECK_POINTS) <= 1e-8);
        }
    }

    #[test]
    fn degenerate_end_coefficients() {
        // F with c_{-d} = c_d = 0 produces roots at zero and infinity
        let f = laurent(&[(0.0, 0.0), (0.3, 0.1), (0.2, 0.0), (0.1, -0.2), (0.0, 0.0)]);
        let pair = complete(&f, &CompletionOptions::default()).unwrap();
        assert!(pair.residual(CHECK_POINTS) <= 1e-10);
        let prog = find_angles(&pair).unwrap();
        assert!(reconstruction_error(&prog, &pair.f, CHECK_POINTS, Exec::Sequential) < 1e-8);
    }

    #[test]
    fn too_large_degree_is_rejected() {
        let f = LaurentPoly::zero(MAX_DEGREE + 1);
        assert!(matches!(complete(&f, &CompletionOptions::default()), Err(Error::DegreeTooLarge { .. })));
    }

    #[test]
    fn monomial_gives_zero_angles() {
        let f = laurent(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        let pair = complete(&f, &CompletionOptions::default()).unwrap();
        assert_eq!(pair.scale, 1.0);
        let prog = find_angles(&pair).unwrap();
        assert!(prog.theta.iter().chain(&prog.phi).all(|a| a.abs() < 1e-14));
        assert!(prog.lambda.abs() < 1e-14);
        for (j, f) in prog.reconstruct_f(64, Exec::Sequential).iter().enumerate() {
            let w = C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / 64.0);
            assert!((f - w).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_program_for_unit_constant() {
        let pair = complete(&laurent(&[(1.0, 0.0)]), &CompletionOptions::default()).unwrap();
        let prog = find_angles(&pair).unwrap();
        assert_eq!(prog.theta.len(), 1);
        assert!(prog.lambda.abs() < 1e-15 && prog.theta[0].abs() < 1e-15 && prog.phi[0].abs() < 1e-15);
    }

    #[test]
    fn random_pair_reconstructs() {
        let pair = complete(&random_f(25, 0.95, 7), &CompletionOptions::default()).unwrap();
        let prog = find_angles(&pair).unwrap();
        assert_eq!(prog.theta.len(), 51);
        assert!(reconstruction_error(&prog, &pair.f, CHECK_POINTS, Exec::default()) <= 1e-8);
        for j in 0..50 {
            let m = prog.matrix_at(C64::from_polar(1.0, 0.37 * j as f64));
            let u = mat_mul(&m, &mat_adjoint(&m));
            assert!((u[0][0] - 1.0).norm() < 1e-12 && u[0][1].norm() < 1e-12 && (u[1][1] - 1.0).norm() < 1e-12);
            // G appears in the lower-left entry
            let w = C64::from_polar(1.0, 0.37 * j as f64);
            assert!((m[1][0] - pair.g.eval(w)).norm() < 1e-8);
        }
    }

    #[test]
    fn morse_program_reproduces_series() {
        let p = PotentialSpec::Morse { d0: 9.46894, a: -0.08653, q0: 0.37635, e0: -0.01037 };
        let t = PhaseTarget::new(p, 0.3, 8.0).unwrap();
        let series = fourier_coefficients(&t, 39).unwrap();
        let f = LaurentPoly::from_series(&series);
        let pair = complete(&f, &CompletionOptions::default()).unwrap();
        let prog = find_angles(&pair).unwrap();
        let rec = prog.reconstruct_f(CHECK_POINTS, Exec::default());
        let worst = rec
            .iter()
            .enumerate()
            .map(|(j, r)| (r * prog.scale - f.eval_angle(std::f64::consts::TAU * j as f64 / CHECK_POINTS as f64)).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
        // scale bookkeeping: s * F_scaled = F_input
        for (a, b) in pair.f.coeffs.iter().zip(&f.coeffs) {
            assert!((a * pair.scale - b).norm() <= 1e-15 * b.norm().max(1.0) * 4.0);
        }
    }

    #[test]
    fn program_toml_round_trip() {
        let pair = complete(&random_f(3, 0.8, 9), &CompletionOptions::default()).unwrap();
        let prog = find_angles_with_period(&pair, 8.0).unwrap();
        let back = GqspProgram::from_toml_str(&prog.to_toml_string().unwrap()).unwrap();
        assert_eq!(prog, back);
        let mut bad = prog.clone();
        bad.theta.pop();
        assert!(GqspProgram::from_toml_str(&bad.to_toml_string().unwrap()).is_err());
    }

    #[test]
    fn inconsistent_pair_is_detected() {
        let f = random_f(4, 0.8, 5);
        let mut pair = complete(&f, &CompletionOptions::default()).unwrap();
        pair.g.coeffs.reverse();
        assert!(find_angles(&pair).is_err());
    }
}
