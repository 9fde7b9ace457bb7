//! Fourier approximation of phase functions `g(x) = exp(i theta(x))` on `[-L, L]`.
//!
//! For a potential `f` and time step `dt`, the phase is `theta = -dt f(x)/hbar`.
//! A bare phase is not periodic on `[-L, L]`, so its Fourier series suffers
//! Gibbs oscillations at the boundary. A [`PhaseWindow`] blends the phase to
//! the constant `theta_c` outside a trust region `[-T, T]` with an erf profile,
//! which makes the periodic extension analytic while leaving the phase inside
//! the trust region unchanged to about 1e-10.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::potentials::{erf_complex, PotentialSpec};
use crate::units::HBAR_EV_FS;
use crate::{Error, Exec, Result, C64};

/// Default half-period `L` in dimensionless position units.
pub const DEFAULT_HALF_PERIOD: f64 = 8.0;
/// Default trust-region half-width `T`.
pub const DEFAULT_TRUST: f64 = 5.0;
/// Coefficient sets from successive quadrature refinements must agree to this.
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;
/// Maximum number of quadrature doublings.
pub const MAX_DOUBLINGS: usize = 20;

/// Smooth cut-off of the phase outside `[-trust, trust]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub trust: f64,
}

impl PhaseWindow {
    pub fn new(trust: f64) -> Self {
        Self { trust }
    }

    fn centre_and_width(&self, half_period: f64) -> (f64, f64) {
        let c = 0.5 * (self.trust + half_period);
        let s = (half_period - self.trust) / 9.0;
        (c, s)
    }

    /// Window weight, 1 inside the trust region and 0 near `+-L`.
    pub fn weight(&self, x: f64, half_period: f64) -> f64 {
        let (c, s) = self.centre_and_width(half_period);
        0.5 * (erf_complex(C64::from((x + c) / s)).re - erf_complex(C64::from((x - c) / s)).re)
    }

    fn weight_complex(&self, z: C64, half_period: f64) -> C64 {
        let (c, s) = self.centre_and_width(half_period);
        (erf_complex((z + c) / s) - erf_complex((z - c) / s)) * 0.5
    }
}

/// The phase function `exp(-i dt f(x)/hbar)` of a potential, optionally windowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTarget {
    pub potential: PotentialSpec,
    pub delta_t: f64,
    pub half_period: f64,
    pub window: Option<PhaseWindow>,
}

impl PhaseTarget {
    /// Windowed target with the default trust region.
    pub fn new(potential: PotentialSpec, delta_t: f64, half_period: f64) -> Result<Self> {
        let trust = DEFAULT_TRUST.min(0.625 * half_period);
        Self::with_window(potential, delta_t, half_period, Some(PhaseWindow::new(trust)))
    }

    pub fn with_window(potential: PotentialSpec, delta_t: f64, half_period: f64, window: Option<PhaseWindow>) -> Result<Self> {
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(Error::InvalidConfig(format!("half-period must be positive, got {half_period}")));
        }
        if !delta_t.is_finite() {
            return Err(Error::InvalidConfig(format!("time step must be finite, got {delta_t}")));
        }
        if let Some(w) = window {
            if !(w.trust > 0.0 && w.trust < half_period) {
                return Err(Error::InvalidConfig(format!("trust region {} must lie strictly inside the half-period {half_period}", w.trust)));
            }
        }
        potential.validate()?;
        Ok(Self { potential, delta_t, half_period, window })
    }

    fn raw_phase(&self, x: f64) -> Result<f64> {
        Ok(-self.delta_t * self.potential.evaluate(x)? / HBAR_EV_FS)
    }

    fn raw_phase_complex(&self, z: C64) -> Result<C64> {
        Ok(self.potential.evaluate_complex(z)? * (-self.delta_t / HBAR_EV_FS))
    }

    fn centre_phase(&self, w: &PhaseWindow) -> Result<f64> {
        let (c, _) = w.centre_and_width(self.half_period);
        Ok(0.5 * (self.raw_phase(-c)? + self.raw_phase(c)?))
    }

    /// Phase `theta(x)` after windowing.
    pub fn phase(&self, x: f64) -> Result<f64> {
        match &self.window {
            None => self.raw_phase(x),
            Some(w) => {
                let wt = w.weight(x, self.half_period);
                let tc = self.centre_phase(w)?;
                if wt < 1e-300 {
                    return Ok(tc);
                }
                Ok(wt * self.raw_phase(x)? + (1.0 - wt) * tc)
            }
        }
    }

    pub fn value(&self, x: f64) -> Result<C64> {
        Ok(C64::from_polar(1.0, self.phase(x)?))
    }

    /// Holomorphic continuation of `g` at complex `z`.
    pub fn value_complex(&self, z: C64) -> Result<C64> {
        let theta = match &self.window {
            None => self.raw_phase_complex(z)?,
            Some(w) => {
                let wt = w.weight_complex(z, self.half_period);
                let tc = self.centre_phase(w)?;
                wt * self.raw_phase_complex(z)? + (C64::from(1.0) - wt) * tc
            }
        };
        Ok((C64::i() * theta).exp())
    }

    /// Half-width of the region where the windowed phase equals the bare phase.
    pub fn trust_half_width(&self) -> f64 {
        self.window.map_or(self.half_period, |w| w.trust)
    }
}

/// Truncated Fourier series `sum_{k=-d}^{d} c_k exp(i pi k x / L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub half_period: f64,
    /// Coefficients `c_{-d}, ..., c_d`.
    pub coeffs: Vec<C64>,
    /// Certified sup-norm error against the source, once computed.
    pub tail_bound: Option<f64>,
    pub source: Option<PhaseTarget>,
}

impl FourierSeries {
    pub fn degree(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn delta_t(&self) -> Option<f64> {
        self.source.as_ref().map(|s| s.delta_t)
    }

    /// `c_k`, zero outside the stored range.
    pub fn coefficient(&self, k: i64) -> C64 {
        let d = self.degree() as i64;
        if k.abs() > d {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + d) as usize]
        }
    }

    pub fn evaluate(&self, x: f64) -> C64 {
        let w = C64::from_polar(1.0, std::f64::consts::PI * x / self.half_period);
        let d = self.degree() as i32;
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc * w.powi(-d)
    }

    /// Keeps only `|k| <= degree`.
    pub fn truncate(&self, degree: usize) -> FourierSeries {
        let d = self.degree();
        let keep = degree.min(d);
        FourierSeries {
            half_period: self.half_period,
            coeffs: self.coeffs[d - keep..=d + keep].to_vec(),
            tail_bound: None,
            source: self.source.clone(),
        }
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> FourierSeries {
        FourierSeries { coeffs: self.coeffs.iter().map(|c| c * s).collect(), tail_bound: None, ..self.clone() }
    }

    /// Empirical sup-norm error against the source target on `[-L, L]`.
    pub fn certify_tail(&self, oversample: usize) -> Result<f64> {
        let target = self.source.as_ref().ok_or_else(|| Error::InvalidConfig("series has no source target to certify against".into()))?;
        certify_tail_against(|x| target.value(x), self, oversample, Exec::default())
    }

    /// Writes the header block and `k,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# half_period: {}", self.half_period)?;
        writeln!(out, "# degree: {}", self.degree())?;
        match self.delta_t() {
            Some(dt) => writeln!(out, "# delta_t_fs: {dt}")?,
            None => writeln!(out, "# delta_t_fs: none")?,
        }
        match self.tail_bound {
            Some(t) => writeln!(out, "# tail_bound: {t:e}")?,
            None => writeln!(out, "# tail_bound: none")?,
        }
        writeln!(out, "k,re,im")?;
        let d = self.degree() as i64;
        for (i, c) in self.coeffs.iter().enumerate() {
            // adding 0.0 turns -0 into 0
            writeln!(out, "{},{},{}", i as i64 - d, c.re + 0.0, c.im + 0.0)?;
        }
        Ok(())
    }
}

/// Trapezoidal DFT estimate of `c_{-d..d}` from `m` samples on `[-L, L)`.
///
/// The `x = -L` sample is replaced by the average of the two endpoint values,
/// which makes this the closed trapezoid rule for non-periodic integrands.
fn dft_coefficients(samples: &[C64], endpoint: C64, degree: usize, planner: &mut FftPlanner<f64>) -> Vec<C64> {
    let m = samples.len();
    let mut buf = samples.to_vec();
    buf[0] = 0.5 * (buf[0] + endpoint);
    planner.plan_fft_forward(m).process(&mut buf);
    let d = degree as i64;
    (-d..=d)
        .map(|k| {
            let idx = k.rem_euclid(m as i64) as usize;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            buf[idx] * (sign / m as f64)
        })
        .collect()
}

fn sample<F>(f: &F, half_period: f64, m: usize, exec: Exec) -> Result<(Vec<C64>, C64)>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    let xs: Vec<f64> = (0..m).map(|j| -half_period + 2.0 * half_period * j as f64 / m as f64).collect();
    let values: Result<Vec<C64>> = exec.map_slice(&xs, |&x| f(x)).into_iter().collect();
    Ok((values?, f(half_period)?))
}

/// Fourier coefficients of an arbitrary function on `[-L, L]`.
pub fn fourier_coefficients_of<F>(f: F, half_period: f64, degree: usize, exec: Exec) -> Result<FourierSeries>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    if !(half_period.is_finite() && half_period > 0.0) {
        return Err(Error::InvalidConfig(format!("half-period must be positive, got {half_period}")));
    }
    let mut planner = FftPlanner::new();
    let mut m = 16 * (2 * degree + 1);
    let (s, e) = sample(&f, half_period, m, exec)?;
    let mut coeffs = dft_coefficients(&s, e, degree, &mut planner);
    let mut prev_change = f64::INFINITY;
    for doubling in 1..=MAX_DOUBLINGS {
        m *= 2;
        let (s, e) = sample(&f, half_period, m, exec)?;
        let next = dft_coefficients(&s, e, degree, &mut planner);
        let change = coeffs.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        coeffs = next;
        if change <= QUADRATURE_TOLERANCE {
            return Ok(FourierSeries { half_period, coeffs, tail_bound: None, source: None });
        }
        // Give up early when the observed convergence rate cannot reach the
        // tolerance within the remaining doublings.
        let ratio = (change / prev_change).min(1.0);
        let remaining = (MAX_DOUBLINGS - doubling) as i32;
        if doubling >= 3 && change * ratio.powi(remaining) > QUADRATURE_TOLERANCE {
            return Err(Error::NonConvergent { doublings: doubling, change });
        }
        prev_change = change;
    }
    Err(Error::NonConvergent { doublings: MAX_DOUBLINGS, change: prev_change })
}

/// Fourier coefficients of the phase function of `target`.
pub fn fourier_coefficients(target: &PhaseTarget, degree: usize) -> Result<FourierSeries> {
    fourier_coefficients_with(target, degree, Exec::default())
}

pub fn fourier_coefficients_with(target: &PhaseTarget, degree: usize, exec: Exec) -> Result<FourierSeries> {
    let mut s = fourier_coefficients_of(|x| target.value(x), target.half_period, degree, exec)?;
    s.source = Some(target.clone());
    Ok(s)
}

fn certification_points(degree: usize, oversample: usize) -> usize {
    (oversample.max(1) * (2 * degree + 1)).max(2048)
}

/// Sup-norm of `g - g_(d)` over a uniform grid of `oversample (2d+1)` points (at least 2048).
pub fn certify_tail_against<F>(f: F, series: &FourierSeries, oversample: usize, exec: Exec) -> Result<f64>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    let p = certification_points(series.degree(), oversample);
    let l = series.half_period;
    let (g, _) = sample(&f, l, p, exec)?;
    let approx = series_on_grid(&series.coeffs, p, &mut FftPlanner::new());
    Ok(g.iter().zip(&approx).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

/// Values of `sum c_k exp(i pi k x_j/L)` on `x_j = -L + 2 L j / p`.
fn series_on_grid(coeffs: &[C64], p: usize, planner: &mut FftPlanner<f64>) -> Vec<C64> {
    let d = (coeffs.len() / 2) as i64;
    let mut buf = vec![C64::new(0.0, 0.0); p];
    for (i, c) in coeffs.iter().enumerate() {
        let k = i as i64 - d;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        buf[k.rem_euclid(p as i64) as usize] += c * sign;
    }
    planner.plan_fft_inverse(p).process(&mut buf);
    buf
}

/// Smallest `d` with `L/(pi sigma) ln(2B/((1 - 1/rho) eps)) <= d`, `rho = exp(pi sigma/L)`.
pub fn select_degree(b: f64, sigma: f64, half_period: f64, epsilon: f64) -> Result<usize> {
    if !(b >= 1.0 && b.is_finite()) {
        return Err(Error::InvalidConfig(format!("strip bound B must be finite and at least 1, got {b}")));
    }
    if !(sigma > 0.0 && half_period > 0.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig("select_degree needs sigma, L > 0 and 0 < epsilon < 1".into()));
    }
    let rho = (std::f64::consts::PI * sigma / half_period).exp();
    let bound = half_period / (std::f64::consts::PI * sigma) * (2.0 * b / ((1.0 - 1.0 / rho) * epsilon)).ln();
    Ok(bound.max(0.0).ceil() as usize)
}

/// Result of the strip-analyticity degree bound for one choice of `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripBound {
    pub sigma: f64,
    pub b: f64,
    pub degree: usize,
}

/// `1.25 max |g(x +- i sigma)|` over `x` in `[-L, L]`.
pub fn estimate_strip_bound(target: &PhaseTarget, sigma: f64, exec: Exec) -> Result<f64> {
    let n = 1024;
    let l = target.half_period;
    let vals: Result<Vec<f64>> = exec
        .map(n + 1, |j| {
            let x = -l + 2.0 * l * j as f64 / n as f64;
            let a = target.value_complex(C64::new(x, sigma))?.norm();
            let b = target.value_complex(C64::new(x, -sigma))?.norm();
            Ok(a.max(b))
        })
        .into_iter()
        .collect();
    Ok(1.25 * vals?.into_iter().fold(1.0, f64::max))
}

/// Degree from the analytic bound, minimised over a scan of `sigma` in `(0, L]`.
pub fn analytic_degree(target: &PhaseTarget, epsilon: f64, exec: Exec) -> Result<StripBound> {
    let l = target.half_period;
    let mut best: Option<StripBound> = None;
    for j in 1..=64 {
        let sigma = l * j as f64 / 64.0;
        let b = estimate_strip_bound(target, sigma, exec)?;
        if !b.is_finite() {
            continue;
        }
        let degree = select_degree(b, sigma, l, epsilon)?;
        if best.is_none_or(|s| degree < s.degree) {
            best = Some(StripBound { sigma, b, degree });
        }
    }
    best.ok_or_else(|| Error::NotAnalytic("phase function (strip bound is infinite for every sigma)".into()))
}

/// Outcome of an empirical degree search.
#[derive(Clone, Debug)]
pub struct DegreeSelection {
    pub series: FourierSeries,
    pub empirical_error: f64,
    /// Sup-norm error restricted to the trust region, against the bare phase.
    pub trust_error: f64,
}

/// Smallest degree whose certified error is at most `epsilon`, up to `max_degree`.
pub fn minimal_degree(target: &PhaseTarget, epsilon: f64, max_degree: usize, exec: Exec) -> Result<DegreeSelection> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {epsilon}")));
    }
    let full = fourier_coefficients_with(target, max_degree, exec)?;
    let l = target.half_period;
    let p = certification_points(max_degree, 16);
    let (g, _) = sample(&|x| target.value(x), l, p, exec)?;
    let xs: Vec<f64> = (0..p).map(|j| -l + 2.0 * l * j as f64 / p as f64).collect();
    let mut planner = FftPlanner::new();
    for d in 0..=max_degree {
        let trial = full.truncate(d);
        let approx = series_on_grid(&trial.coeffs, p, &mut planner);
        let err = g.iter().zip(&approx).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if err <= epsilon {
            let bare = PhaseTarget { window: None, ..target.clone() };
            let trust = target.trust_half_width();
            let mut trust_error: f64 = 0.0;
            for (j, x) in xs.iter().enumerate() {
                if x.abs() <= trust {
                    trust_error = trust_error.max((bare.value(*x)? - approx[j]).norm());
                }
            }
            let mut series = trial;
            series.tail_bound = Some(err);
            return Ok(DegreeSelection { series, empirical_error: err, trust_error });
        }
    }
    Err(Error::DegreeNotReached { epsilon, max_degree })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn morse_target() -> PhaseTarget {
        let p = PotentialSpec::Morse { d0: 9.46894, a: -0.08653, q0: 0.37635, e0: -0.01037 };
        PhaseTarget::new(p, 0.3, DEFAULT_HALF_PERIOD).unwrap()
    }

    /// Adaptive Simpson quadrature, used as an independent coefficient oracle.
    fn adaptive_simpson<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64) -> C64 {
        #[allow(clippy::too_many_arguments)]
        fn rec<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> C64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let diff = left + right - whole;
            if depth == 0 || diff.norm() <= 15.0 * tol {
                return left + right + diff / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    #[test]
    fn zero_potential_gives_unit_constant() {
        let t = PhaseTarget::new(PotentialSpec::Zero, 0.3, 8.0).unwrap();
        let s = fourier_coefficients(&t, 5).unwrap();
        for k in -5..=5i64 {
            let expected = if k == 0 { 1.0 } else { 0.0 };
            assert!((s.coefficient(k) - expected).norm() < 1e-14);
        }
        assert!(s.certify_tail(16).unwrap() < 1e-14);
    }

    #[test]
    fn cosine_has_two_half_coefficients() {
        let l = 3.0;
        let s = fourier_coefficients_of(|x| Ok(C64::from((std::f64::consts::PI * x / l).cos())), l, 4, Exec::Sequential).unwrap();
        for k in -4..=4i64 {
            let expected = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((s.coefficient(k) - expected).norm() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn morse_coefficients_match_adaptive_quadrature() {
        let t = morse_target();
        let s = fourier_coefficients(&t, 39).unwrap();
        let l = t.half_period;
        for k in [-39i64, -20, -3, 0, 1, 7, 25, 39] {
            let f = |x: f64| t.value(x).unwrap() * C64::from_polar(1.0, -std::f64::consts::PI * k as f64 * x / l);
            let oracle = adaptive_simpson(&f, -l, l, 1e-14) / (2.0 * l);
            assert!((s.coefficient(k) - oracle).norm() < 1e-10, "k={k}: {} vs {}", s.coefficient(k), oracle);
        }
    }

    #[test]
    fn unwindowed_morse_still_converges_by_quadrature() {
        let p = PotentialSpec::Morse { d0: 9.46894, a: -0.08653, q0: 0.37635, e0: -0.01037 };
        let t = PhaseTarget::with_window(p, 0.3, 8.0, None).unwrap();
        let s = fourier_coefficients(&t, 10).unwrap();
        // the jump in the periodic extension keeps the truncation error large
        assert!(s.certify_tail(16).unwrap() > 0.5);
    }

    #[test]
    fn rough_input_reports_non_convergence() {
        let r = fourier_coefficients_of(|x| Ok(C64::from(x.abs().sqrt().sin() * (1.0 / x.abs().max(1e-300)).sin())), 1.0, 2, Exec::Sequential);
        assert!(matches!(r, Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn select_degree_closed_form() {
        let l = 8.0;
        let d = select_degree(1.0, l, l, 1e-3).unwrap();
        let expected = ((2.0 / ((1.0 - (-std::f64::consts::PI).exp()) * 1e-3)).ln() / std::f64::consts::PI).ceil() as usize;
        assert_eq!(d, expected);
        assert_eq!(d, 3);
        assert!(select_degree(0.5, 1.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn select_degree_is_monotone() {
        let mut last = 0;
        for i in 0..30 {
            let eps = 0.5f64.powi(i + 1);
            let d = select_degree(3.0, 1.0, 8.0, eps).unwrap();
            assert!(d >= last);
            last = d;
        }
        let mut last = usize::MAX;
        for j in 1..=20 {
            let d = select_degree(3.0, 0.4 * j as f64, 8.0, 1e-6).unwrap();
            assert!(d <= last);
            last = d;
        }
    }

    #[test]
    fn morse_error_decays_exponentially() {
        let t = morse_target();
        let s = fourier_coefficients(&t, 60).unwrap();
        let ds = [10usize, 20, 30, 39];
        let errs: Vec<f64> = ds.iter().map(|&d| s.truncate(d).certify_tail(16).unwrap()).collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0] + 1e-12, "{errs:?}");
        }
        // least-squares slope of ln(error) against d
        let n = ds.len() as f64;
        let mx = ds.iter().map(|&d| d as f64).sum::<f64>() / n;
        let my = errs.iter().map(|e| e.ln()).sum::<f64>() / n;
        let slope = ds.iter().zip(&errs).map(|(&d, e)| (d as f64 - mx) * (e.ln() - my)).sum::<f64>()
            / ds.iter().map(|&d| (d as f64 - mx).powi(2)).sum::<f64>();
        assert!(slope < -0.1, "slope {slope}");
    }

    #[test]
    fn truncated_modulus_stays_near_one() {
        let t = morse_target();
        let mut s = fourier_coefficients(&t, 39).unwrap();
        let tail = s.certify_tail(16).unwrap();
        s.tail_bound = Some(tail);
        for j in 0..=4000 {
            let x = -8.0 + 16.0 * j as f64 / 4000.0;
            let m = s.evaluate(x).norm();
            assert!(m <= 1.0 + tail + 1e-12 && m >= 1.0 - 2.0 * tail - 1e-12);
        }
    }

    #[test]
    fn window_preserves_trust_region() {
        let t = morse_target();
        let bare = PhaseTarget { window: None, ..t.clone() };
        for j in 0..=100 {
            let x = -5.0 + 0.1 * j as f64;
            assert!((t.phase(x).unwrap() - bare.phase(x).unwrap()).abs() < 1e-8);
        }
        let edge = (t.value(-8.0).unwrap() - t.value(8.0).unwrap()).norm();
        assert!(edge < 1e-8);
    }

    #[test]
    fn minimal_degree_meets_tolerance() {
        let t = morse_target();
        let sel = minimal_degree(&t, 1e-3, 120, Exec::default()).unwrap();
        let d = sel.series.degree();
        assert!(sel.empirical_error <= 1e-3);
        assert!(sel.series.truncate(d.saturating_sub(1)).certify_tail(16).unwrap() > 1e-3 || d == 0);
        assert!(sel.trust_error <= 1e-3 + 1e-8);
    }

    #[test]
    fn analytic_degree_covers_empirical_degree() {
        let t = morse_target();
        let bound = analytic_degree(&t, 1e-3, Exec::default()).unwrap();
        let s = fourier_coefficients(&t, bound.degree).unwrap();
        assert!(s.certify_tail(16).unwrap() <= 1e-3);
        assert!(bound.b >= 1.25);
    }

    #[test]
    fn complex_continuation_agrees_on_real_axis() {
        let t = morse_target();
        for x in [-7.0, -2.0, 0.4, 6.3] {
            assert!((t.value_complex(C64::from(x)).unwrap() - t.value(x).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn csv_has_header_block() {
        let t = PhaseTarget::new(PotentialSpec::Zero, 0.3, 8.0).unwrap();
        let sel = minimal_degree(&t, 1e-3, 4, Exec::Sequential).unwrap();
        assert_eq!(sel.series.degree(), 0);
        let mut buf = Vec::new();
        sel.series.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows, vec!["k,re,im", "0,1,0"]);
    }
}
