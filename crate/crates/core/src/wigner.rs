//! Wigner quasi-probability maps from the displaced-parity formula
//! `W(q, p) = (1/pi) Tr[rho D(alpha) Pi D(alpha)†]`, `alpha = (q + i p)/sqrt(2)`.
//!
//! `D(alpha) Pi D(alpha)† = D(2 alpha) Pi`, and the matrix elements of
//! `D(2 alpha)` between Fock states have a closed form in associated Laguerre
//! polynomials. Evaluating them directly avoids truncating the displacement.

use std::io::Write;

use crate::{CMatrix, CVector, Error, Exec, Result, C64};

/// Rectangular phase-space sampling grid, endpoints included.
#[derive(Clone, Copy, Debug)]
pub struct WignerGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_points: usize,
    pub p_points: usize,
    pub exec: Exec,
}

impl WignerGrid {
    /// `[-half_width, half_width]^2` with `resolution` points per axis.
    pub fn square(half_width: f64, resolution: usize) -> Self {
        Self {
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            q_points: resolution,
            p_points: resolution,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (min + max)];
        }
        (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Sampled Wigner function, stored row-major with `p` outer and `q` inner.
#[derive(Clone, Debug)]
pub struct WignerMap {
    pub qs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerMap {
    pub fn value(&self, iq: usize, ip: usize) -> f64 {
        self.values[ip * self.qs.len() + iq]
    }

    /// Riemann-sum integral over the sampled window.
    pub fn integral(&self) -> f64 {
        let dq = if self.qs.len() > 1 { self.qs[1] - self.qs[0] } else { 1.0 };
        let dp = if self.ps.len() > 1 { self.ps[1] - self.ps[0] } else { 1.0 };
        self.values.iter().sum::<f64>() * dq * dp
    }

    /// Writes `q,p,w` rows under a single header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "q,p,w")?;
        for (ip, p) in self.ps.iter().enumerate() {
            for (iq, q) in self.qs.iter().enumerate() {
                writeln!(out, "{q},{p},{}", self.value(iq, ip))?;
            }
        }
        Ok(())
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Wigner function of density matrix `rho` at one phase-space point.
pub fn wigner_point(rho: &CMatrix, q: f64, p: f64) -> f64 {
    let lnf = ln_factorials(rho.nrows());
    point_with(rho, q, p, &lnf)
}

fn point_with(rho: &CMatrix, q: f64, p: f64, lnf: &[f64]) -> f64 {
    let d = rho.nrows();
    let beta = C64::new(q, p) * std::f64::consts::SQRT_2;
    let x = beta.norm_sqr();
    let r = beta.norm();
    let arg = beta.arg();
    let gauss = (-0.5 * x).exp();
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..d {
        if r == 0.0 && k > 0 {
            break;
        }
        let upper = C64::from_polar(1.0, k as f64 * arg);
        let lower = if k % 2 == 0 { upper.conj() } else { -upper.conj() };
        let lnr = if k == 0 { 0.0 } else { k as f64 * r.ln() };
        let (mut prev, mut cur) = (0.0, gauss);
        for l in 0..d - k {
            if l > 0 {
                let next = ((2.0 * (l - 1) as f64 + 1.0 + k as f64 - x) * cur - ((l - 1) + k) as f64 * prev) / l as f64;
                prev = cur;
                cur = next;
            }
            let mag = (lnr + 0.5 * (lnf[l] - lnf[l + k])).exp() * cur;
            // element <l+k|D|l> and, for k > 0, <l|D|l+k>
            let m = l + k;
            let sign_l = if l % 2 == 0 { 1.0 } else { -1.0 };
            sum += rho[(l, m)] * upper * (mag * sign_l);
            if k > 0 {
                let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
                sum += rho[(m, l)] * lower * (mag * sign_m);
            }
        }
    }
    sum.re / std::f64::consts::PI
}

fn check_trace(rho: &CMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::DimensionMismatch("density matrix must be square".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::NotNormalized(tr.norm()));
    }
    Ok(())
}

/// Samples the Wigner function of `rho` on `grid`.
pub fn wigner_map(rho: &CMatrix, grid: &WignerGrid) -> Result<WignerMap> {
    check_trace(rho)?;
    let qs = WignerGrid::axis(grid.q_min, grid.q_max, grid.q_points);
    let ps = WignerGrid::axis(grid.p_min, grid.p_max, grid.p_points);
    let lnf = ln_factorials(rho.nrows());
    let rows = grid.exec.map(ps.len(), |ip| qs.iter().map(|&q| point_with(rho, q, ps[ip], &lnf)).collect::<Vec<_>>());
    Ok(WignerMap { values: rows.concat(), qs, ps })
}

/// Samples the Wigner function of the pure state `psi`.
pub fn wigner_map_pure(psi: &CVector, grid: &WignerGrid) -> Result<WignerMap> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    wigner_map(&(psi * psi.adjoint()), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{displaced_vacuum, fock_state, FockConfig};
    use crate::linalg::expm;

    fn padded_oracle(psi: &CVector, q: f64, p: f64, pad: usize) -> f64 {
        let n = pad;
        let mut v = CVector::zeros(n);
        v.rows_mut(0, psi.len()).copy_from(psi);
        let alpha = C64::new(q, p) * std::f64::consts::FRAC_1_SQRT_2;
        let a = CMatrix::from_fn(n, n, |i, j| if j == i + 1 { C64::from((j as f64).sqrt()) } else { C64::from(0.0) });
        let d = expm(&(a.adjoint() * alpha - &a * alpha.conj()));
        let parity = CMatrix::from_fn(n, n, |i, j| if i == j { C64::from(if i % 2 == 0 { 1.0 } else { -1.0 }) } else { C64::from(0.0) });
        let op = &d * parity * d.adjoint();
        v.dotc(&(op * &v)).re / std::f64::consts::PI
    }

    #[test]
    fn vacuum_is_a_gaussian() {
        let psi = fock_state(FockConfig::new(10).unwrap(), 0).unwrap();
        let rho = &psi * psi.adjoint();
        for (q, p) in [(0.0f64, 0.0f64), (1.0, -0.5), (2.5, 1.5)] {
            let expected = (-(q * q) - p * p).exp() / std::f64::consts::PI;
            assert!((wigner_point(&rho, q, p) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn single_photon_is_negative_at_origin() {
        let psi = fock_state(FockConfig::new(6).unwrap(), 1).unwrap();
        let w = wigner_point(&(&psi * psi.adjoint()), 0.0, 0.0);
        assert!((w + 1.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn matches_displaced_parity_in_padded_space() {
        let c = FockConfig::new(8).unwrap();
        let mut psi = displaced_vacuum(c, 0.7, -0.4) + fock_state(c, 3).unwrap() * C64::new(0.2, 0.5);
        psi /= C64::from(psi.norm());
        let rho = &psi * psi.adjoint();
        for (q, p) in [(0.0, 0.0), (0.8, 0.3), (-1.2, 1.0), (1.5, -1.5)] {
            let oracle = padded_oracle(&psi, q, p, 90);
            assert!((wigner_point(&rho, q, p) - oracle).abs() < 1e-10, "({q},{p})");
        }
    }

    #[test]
    fn integrates_to_one() {
        let c = FockConfig::new(30).unwrap();
        let grid = WignerGrid::square(6.0, 121);
        for psi in [fock_state(c, 0).unwrap(), fock_state(c, 3).unwrap(), {
            let v = displaced_vacuum(c, 1.0, -1.0);
            &v / C64::from(v.norm())
        }] {
            let map = wigner_map_pure(&psi, &grid).unwrap();
            assert!((map.integral() - 1.0).abs() < 1e-3, "{}", map.integral());
        }
    }

    #[test]
    fn rejects_unnormalized_state() {
        let c = FockConfig::new(5).unwrap();
        let psi = fock_state(c, 1).unwrap() * C64::from(2.0);
        assert!(matches!(wigner_map_pure(&psi, &WignerGrid::square(1.0, 3)), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn csv_is_row_major_over_p() {
        let psi = fock_state(FockConfig::new(4).unwrap(), 0).unwrap();
        let map = wigner_map_pure(&psi, &WignerGrid::square(1.0, 3)).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "q,p,w");
        assert_eq!(lines.len(), 10);
        assert!(lines[1].starts_with("-1,-1,"));
        assert!(lines[2].starts_with("0,-1,"));
    }

    #[test]
    fn policies_agree() {
        let c = FockConfig::new(12).unwrap();
        let psi = fock_state(c, 2).unwrap();
        let g = WignerGrid::square(3.0, 15);
        let a = wigner_map_pure(&psi, &g.with_exec(Exec::Sequential)).unwrap();
        let b = wigner_map_pure(&psi, &g.with_exec(Exec::Parallel)).unwrap();
        assert_eq!(a.values, b.values);
    }
}
