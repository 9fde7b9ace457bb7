//! Laurent polynomials on the unit circle and polynomial root finding.
//!
//! Roots are the eigenvalues of the balanced companion matrix, computed with
//! a complex single-shift QR iteration on the Hessenberg form and polished by
//! Newton steps on the original polynomial.

use serde::{Deserialize, Serialize};

use crate::fourier::FourierSeries;
use crate::{Error, Result, C64};

/// `sum_{k=-d}^{d} c_k w^k`, stored as `c_{-d}, ..., c_d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentPoly {
    pub coeffs: Vec<C64>,
}

impl LaurentPoly {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::InvalidConfig(format!("Laurent coefficient vector must have odd length 2d+1, got {}", coeffs.len())));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(degree: usize) -> Self {
        Self { coeffs: vec![C64::new(0.0, 0.0); 2 * degree + 1] }
    }

    pub fn from_series(s: &FourierSeries) -> Self {
        Self { coeffs: s.coeffs.clone() }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coefficient(&self, k: i64) -> C64 {
        let d = self.degree() as i64;
        if k.abs() > d {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + d) as usize]
        }
    }

    pub fn eval(&self, w: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc * w.powi(-(self.degree() as i32))
    }

    /// Value at `w = exp(i t)`.
    pub fn eval_angle(&self, t: f64) -> C64 {
        self.eval(C64::from_polar(1.0, t))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Pads with zero coefficients up to `degree`.
    pub fn padded(&self, degree: usize) -> Self {
        let d = self.degree();
        if degree <= d {
            return self.clone();
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * degree + 1];
        coeffs[degree - d..=degree + d].copy_from_slice(&self.coeffs);
        Self { coeffs }
    }

    /// `max |p|` on the unit circle: dense sampling followed by golden-section refinement.
    pub fn sup_norm_on_circle(&self) -> f64 {
        let n = (64 * (2 * self.degree() + 1)).max(1024);
        let h = std::f64::consts::TAU / n as f64;
        let vals: Vec<f64> = (0..n).map(|j| self.eval_angle(j as f64 * h).norm()).collect();
        let mut best = vals.iter().cloned().fold(0.0, f64::max);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        for &j in idx.iter().take(8) {
            let (mut a, mut b) = ((j as f64 - 1.0) * h, (j as f64 + 1.0) * h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let f = |t: f64| self.eval_angle(t).norm();
            let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
            let (mut fc, mut fd) = (f(c), f(d));
            for _ in 0..60 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = f(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = f(d);
                }
            }
            best = best.max(fc).max(fd);
        }
        best
    }
}

/// Roots of `sum_i a[i] z^i`; the leading coefficient must be non-zero.
pub fn polynomial_roots(a: &[C64]) -> Result<Vec<C64>> {
    let n = a.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = a[n];
    if lead.norm() == 0.0 || a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidConfig("polynomial needs a finite, non-zero leading coefficient".into()));
    }
    let zeros = a.iter().take_while(|c| c.norm() == 0.0).count();
    let core = &a[zeros..];
    let m = core.len() - 1;
    let mut roots = vec![C64::new(0.0, 0.0); zeros];
    if m > 0 {
        let mut h = vec![vec![C64::new(0.0, 0.0); m]; m];
        for j in 0..m {
            h[0][j] = -core[m - 1 - j] / lead;
        }
        for i in 1..m {
            h[i][i - 1] = C64::from(1.0);
        }
        balance(&mut h);
        let eig = hessenberg_eigenvalues(h)?;
        roots.extend(eig.into_iter().map(|z| polish(core, z)));
    }
    Ok(roots)
}

/// Parlett-Reinsch balancing by powers of two.
fn balance(h: &mut [Vec<C64>]) {
    const RADIX: f64 = 2.0;
    let n = h.len();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| h[j][i].norm()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| h[i][j].norm()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / RADIX {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            while c > r * RADIX {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    h[i][j] /= f;
                }
                for row in h.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by shifted QR with deflation.
fn hessenberg_eigenvalues(mut h: Vec<Vec<C64>>) -> Result<Vec<C64>> {
    let n = h.len();
    let mut eig = vec![C64::new(0.0, 0.0); n];
    let norm = h.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n as isize - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi >= 0 {
        let hiu = hi as usize;
        // locate the start of the active unreduced block
        let mut l = hiu;
        while l > 0 {
            let s = h[l][l].norm() + h[l - 1][l - 1].norm();
            let s = if s == 0.0 { norm } else { s };
            if h[l][l - 1].norm() <= eps * s {
                h[l][l - 1] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hiu {
            eig[hiu] = h[hiu][hiu];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 60 * n.max(10) {
            return Err(Error::Completion("QR iteration for polynomial roots did not converge".into()));
        }
        let mu = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[hiu][hiu] + C64::new(0.75 * h[hiu][hiu - 1].norm(), 0.4375 * h[hiu][hiu - 1].norm())
        } else {
            wilkinson_shift(h[hiu - 1][hiu - 1], h[hiu - 1][hiu], h[hiu][hiu - 1], h[hiu][hiu])
        };
        for k in l..=hiu {
            h[k][k] -= mu;
        }
        let mut rots = Vec::with_capacity(hiu - l);
        for k in l..hiu {
            let a = h[k][k];
            let b = h[k + 1][k];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (g00, g01, g10, g11) = if r == 0.0 {
                (C64::from(1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from(1.0))
            } else {
                (a.conj() / r, b.conj() / r, -b / r, a / r)
            };
            for j in k..=hiu {
                let x = h[k][j];
                let y = h[k + 1][j];
                h[k][j] = g00 * x + g01 * y;
                h[k + 1][j] = g10 * x + g11 * y;
            }
            rots.push((g00, g01, g10, g11));
        }
        for (off, &(g00, g01, g10, g11)) in rots.iter().enumerate() {
            let k = l + off;
            let top = (k + 2).min(hiu);
            for row in h.iter_mut().take(top + 1).skip(l) {
                let x = row[k];
                let y = row[k + 1];
                // right multiplication by the adjoint rotation
                row[k] = x * g00.conj() + y * g01.conj();
                row[k + 1] = x * g10.conj() + y * g11.conj();
            }
        }
        for k in l..=hiu {
            h[k][k] += mu;
        }
    }
    Ok(eig)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() < (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

fn horner_with_derivative(a: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for c in a.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Newton steps that are kept only while they reduce `|p(z)|`.
fn polish(a: &[C64], mut z: C64) -> C64 {
    let (mut p, mut dp) = horner_with_derivative(a, z);
    for _ in 0..4 {
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, dpc) = horner_with_derivative(a, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
            dp = dpc;
        } else {
            break;
        }
    }
    z
}
