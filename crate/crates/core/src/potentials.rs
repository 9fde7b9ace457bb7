//! One-dimensional potentials `f(Q)` in eV of a dimensionless mode coordinate.

use errorfunctions::ComplexErrorFunctions as _;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// A potential family with its parameters.
///
/// `Quadratic` follows the `gamma/2 Q^2` convention and `Quartic` the
/// `k/24 Q^4` convention. `Morse` is `d0 (exp(a (Q - q0)) - 1)^2 + e0`
/// with the sign of `a` taken literally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant { value: f64 },
    Linear { kappa: f64 },
    Quadratic { gamma: f64 },
    Quartic { k: f64 },
    Morse { d0: f64, a: f64, q0: f64, e0: f64 },
    Tabulated(CubicSpline),
    Sum { terms: Vec<PotentialSpec> },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            PotentialSpec::Zero | PotentialSpec::Tabulated(_) => Ok(()),
            PotentialSpec::Constant { value } => finite("constant", *value),
            PotentialSpec::Linear { kappa } => finite("kappa", *kappa),
            PotentialSpec::Quadratic { gamma } => finite("gamma", *gamma),
            PotentialSpec::Quartic { k } => finite("k", *k),
            PotentialSpec::Morse { d0, a, q0, e0 } => {
                for (n, v) in [("d0", d0), ("a", a), ("q0", q0), ("e0", e0)] {
                    finite(n, *v)?;
                }
                if *d0 <= 0.0 {
                    return Err(Error::InvalidConfig(format!("Morse depth d0 must be positive, got {d0}")));
                }
                Ok(())
            }
            PotentialSpec::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
        }
    }

    /// Value at real `x`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidConfig(format!("potential argument must be finite, got {x}")));
        }
        Ok(match self {
            PotentialSpec::Tabulated(s) => s.evaluate(x)?,
            PotentialSpec::Sum { terms } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.evaluate(x)?;
                }
                acc
            }
            _ => self.evaluate_complex(C64::from(x))?.re,
        })
    }

    /// Holomorphic extension at complex `z`; tabulated data has none.
    pub fn evaluate_complex(&self, z: C64) -> Result<C64> {
        Ok(match self {
            PotentialSpec::Zero => C64::new(0.0, 0.0),
            PotentialSpec::Constant { value } => C64::from(*value),
            PotentialSpec::Linear { kappa } => z * *kappa,
            PotentialSpec::Quadratic { gamma } => z * z * (0.5 * gamma),
            PotentialSpec::Quartic { k } => z * z * z * z * (k / 24.0),
            PotentialSpec::Morse { d0, a, q0, e0 } => {
                let u = ((z - *q0) * *a).exp() - 1.0;
                u * u * *d0 + *e0
            }
            PotentialSpec::Tabulated(_) => return Err(Error::NotAnalytic("tabulated potential".into())),
            PotentialSpec::Sum { terms } => {
                let mut acc = C64::new(0.0, 0.0);
                for t in terms {
                    acc += t.evaluate_complex(z)?;
                }
                acc
            }
        })
    }

    /// Quartic, Morse and tabulated terms make a potential anharmonic.
    pub fn is_anharmonic(&self) -> bool {
        match self {
            PotentialSpec::Quartic { k } => *k != 0.0,
            PotentialSpec::Morse { .. } | PotentialSpec::Tabulated(_) => true,
            PotentialSpec::Sum { terms } => terms.iter().any(|t| t.is_anharmonic()),
            _ => false,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::Zero => true,
            PotentialSpec::Constant { value } => *value == 0.0,
            PotentialSpec::Linear { kappa } => *kappa == 0.0,
            PotentialSpec::Quadratic { gamma } => *gamma == 0.0,
            PotentialSpec::Quartic { k } => *k == 0.0,
            PotentialSpec::Sum { terms } => terms.iter().all(|t| t.is_zero()),
            _ => false,
        }
    }

    /// `(c, kappa, gamma)` with `f = c + kappa Q + gamma/2 Q^2`, if `f` is at most quadratic.
    pub fn polynomial_parts(&self) -> Option<(f64, f64, f64)> {
        match self {
            PotentialSpec::Zero => Some((0.0, 0.0, 0.0)),
            PotentialSpec::Constant { value } => Some((*value, 0.0, 0.0)),
            PotentialSpec::Linear { kappa } => Some((0.0, *kappa, 0.0)),
            PotentialSpec::Quadratic { gamma } => Some((0.0, 0.0, *gamma)),
            PotentialSpec::Quartic { k } if *k == 0.0 => Some((0.0, 0.0, 0.0)),
            PotentialSpec::Sum { terms } => terms.iter().try_fold((0.0, 0.0, 0.0), |acc, t| {
                let (c, k, g) = t.polynomial_parts()?;
                Some((acc.0 + c, acc.1 + k, acc.2 + g))
            }),
            _ => None,
        }
    }

    /// Replaces every Morse term by its second-order Taylor expansion about `q0`.
    pub fn qvc_approximation(&self) -> PotentialSpec {
        match self {
            PotentialSpec::Morse { d0, a, q0, e0 } => {
                let c = d0 * a * a;
                PotentialSpec::Sum {
                    terms: vec![
                        PotentialSpec::Constant { value: e0 + c * q0 * q0 },
                        PotentialSpec::Linear { kappa: -2.0 * c * q0 },
                        PotentialSpec::Quadratic { gamma: 2.0 * c },
                    ],
                }
            }
            PotentialSpec::Sum { terms } => PotentialSpec::Sum { terms: terms.iter().map(|t| t.qvc_approximation()).collect() },
            other => other.clone(),
        }
    }

    /// Adds `other`, flattening nested sums and dropping zero terms.
    pub fn plus(self, other: PotentialSpec) -> PotentialSpec {
        let mut terms = Vec::new();
        for p in [self, other] {
            match p {
                PotentialSpec::Sum { terms: t } => terms.extend(t),
                p if p.is_zero() => {}
                p => terms.push(p),
            }
        }
        match terms.len() {
            0 => PotentialSpec::Zero,
            1 => terms.pop().unwrap(),
            _ => PotentialSpec::Sum { terms },
        }
    }
}

/// Natural cubic spline through tabulated points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineTable", into = "SplineTable")]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SplineTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TryFrom<SplineTable> for CubicSpline {
    type Error = Error;
    fn try_from(t: SplineTable) -> Result<Self> {
        CubicSpline::new(t.xs, t.ys)
    }
}

impl From<CubicSpline> for SplineTable {
    fn from(s: CubicSpline) -> Self {
        SplineTable { xs: s.xs, ys: s.ys }
    }
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidConfig("tabulated potential needs at least two (x, y) pairs of equal length".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("tabulated potential contains non-finite values".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("tabulated abscissae must be strictly increasing".into()));
        }
        let n = xs.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the interior second derivatives.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let rhs = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                second[i] = d[i] - c[i] * second[i + 1];
            }
        }
        Ok(Self { xs, ys, second })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&x) {
            return Err(Error::OutOfRange { x, lo, hi });
        }
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, self.xs.len() - 1) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        Ok(a * self.ys[i] + b * self.ys[i + 1] + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0)
    }
}

/// Complex error function, re-exported for window continuations.
pub(crate) fn erf_complex(z: C64) -> C64 {
    z.erf()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn morse() -> PotentialSpec {
        PotentialSpec::Morse { d0: 9.46894, a: -0.08653, q0: 0.37635, e0: -0.01037 }
    }

    #[test]
    fn morse_at_minimum_is_e0() {
        assert_eq!(morse().evaluate(0.37635).unwrap(), -0.01037);
    }

    #[test]
    fn quartic_uses_one_over_24() {
        let v = PotentialSpec::Quartic { k: 0.03317 }.evaluate(2.0).unwrap();
        assert!((v - 0.03317 * 16.0 / 24.0).abs() < 1e-16);
        assert!((v - 0.0221133).abs() < 1e-7);
    }

    #[test]
    fn linear_and_quadratic_conventions() {
        assert_eq!(PotentialSpec::Linear { kappa: 0.04139 }.evaluate(1.0).unwrap(), 0.04139);
        assert_eq!(PotentialSpec::Quadratic { gamma: 0.5 }.evaluate(2.0).unwrap(), 1.0);
    }

    #[test]
    fn complex_extension_agrees_on_real_axis() {
        let p = morse().plus(PotentialSpec::Quartic { k: 0.1 });
        for x in [-3.0, 0.0, 1.7] {
            let z = p.evaluate_complex(C64::from(x)).unwrap();
            assert!((z.re - p.evaluate(x).unwrap()).abs() < 1e-14 && z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn morse_requires_positive_depth() {
        let p = PotentialSpec::Morse { d0: 0.0, a: 1.0, q0: 0.0, e0: 0.0 };
        assert!(p.validate().is_err());
    }

    #[test]
    fn qvc_approximation_matches_taylor_expansion() {
        let m = morse();
        let q = m.qvc_approximation();
        let (c, k, g) = q.polynomial_parts().unwrap();
        // value, slope and curvature at q0
        let q0 = 0.37635;
        let h = 1e-4;
        assert!((q.evaluate(q0).unwrap() - m.evaluate(q0).unwrap()).abs() < 1e-14);
        let slope = k + g * q0;
        assert!(slope.abs() < 1e-14);
        let curv = (m.evaluate(q0 + h).unwrap() - 2.0 * m.evaluate(q0).unwrap() + m.evaluate(q0 - h).unwrap()) / (h * h);
        assert!((curv - g).abs() < 1e-5);
        let _ = c;
    }

    #[test]
    fn spline_interpolates_knots_and_cubics() {
        let xs: Vec<f64> = (0..21).map(|i| -2.0 + 0.2 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = PotentialSpec::Tabulated(CubicSpline::new(xs.clone(), ys.clone()).unwrap());
        for (x, y) in xs.iter().zip(&ys) {
            assert!((s.evaluate(*x).unwrap() - y).abs() < 1e-14);
        }
        assert!((s.evaluate(0.31).unwrap() - 0.31f64.sin()).abs() < 2e-3);
        assert!(matches!(s.evaluate(2.5), Err(Error::OutOfRange { .. })));
        assert!(s.evaluate_complex(C64::from(0.0)).is_err());
        assert!(s.is_anharmonic());
    }

    #[test]
    fn spline_rejects_unsorted_abscissae() {
        assert!(CubicSpline::new(vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = morse().plus(PotentialSpec::Tabulated(CubicSpline::new(vec![0.0, 1.0, 3.0], vec![1.0, 0.5, 2.0]).unwrap()));
        let text = toml::to_string(&p).unwrap();
        let back: PotentialSpec = toml::from_str(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn erf_continuation_matches_real_erf() {
        let z = erf_complex(C64::new(0.5, 0.0));
        assert!((z.re - 0.520_499_877_813_046_5).abs() < 1e-14);
    }
}
