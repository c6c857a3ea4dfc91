//! Gamma and two-parameter Mittag-Leffler functions for real arguments.

use crate::quadrature::integrate_breaks;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlfError {
    #[error("alpha must lie in (0, 2], got {0}")]
    Domain(f64),
    #[error("argument {0} is not finite")]
    NotFinite(f64),
    #[error("result overflows at x = {0}")]
    Overflow(f64),
    #[error("gamma has a pole at {0}")]
    Pole(f64),
    #[error("integral representation failed to converge at x = {0}")]
    NoConvergence(f64),
}

/// Parameters of E_{alpha,beta}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlfParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MlfParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, MlfError> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(MlfError::Domain(alpha));
        }
        if !beta.is_finite() {
            return Err(MlfError::NotFinite(beta));
        }
        Ok(Self { alpha, beta })
    }
}

const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

fn stirling_tail(w: f64) -> f64 {
    let r = 1.0 / w;
    let r2 = r * r;
    let mut s = 0.0;
    for c in STIRLING.iter().rev() {
        s = s * r2 + c;
    }
    s * r
}

/// sin(pi x) with exact argument reduction.
pub fn sinpi(x: f64) -> f64 {
    let n = (2.0 * x).round();
    let r = x - 0.5 * n;
    let s = match (n as i64).rem_euclid(4) {
        0 => (PI * r).sin(),
        1 => (PI * r).cos(),
        2 => -(PI * r).sin(),
        _ => -(PI * r).cos(),
    };
    s
}

fn gamma_pos(z: f64) -> f64 {
    if z == z.floor() && z <= 171.0 {
        let mut p = 1.0;
        let mut k = 2.0;
        while k < z {
            p *= k;
            k += 1.0;
        }
        return p;
    }
    let mut w = z;
    let mut prod = 1.0;
    while w < 15.0 {
        prod *= w;
        w += 1.0;
    }
    let half = 0.5 * (w - 0.5);
    let p = w.powf(half);
    let g = (2.0 * PI).sqrt() * (p * (-w).exp()) * p * stirling_tail(w).exp();
    g / prod
}

/// Gamma function on the real line.
pub fn gamma_fn(z: f64) -> Result<f64, MlfError> {
    if !z.is_finite() {
        return Err(MlfError::NotFinite(z));
    }
    if z <= 0.0 && z == z.floor() {
        return Err(MlfError::Pole(z));
    }
    if z > 171.624 {
        return Err(MlfError::Overflow(z));
    }
    if z >= 0.5 {
        Ok(gamma_pos(z))
    } else {
        let g = gamma_pos(1.0 - z);
        Ok(PI / (sinpi(z) * g))
    }
}

/// Reciprocal gamma, zero at the poles and for arguments whose gamma overflows.
pub fn rgamma(z: f64) -> f64 {
    if z <= 0.0 && z == z.floor() {
        return 0.0;
    }
    if z > 171.6 {
        return (-ln_gamma(z)).exp();
    }
    if z >= 0.5 {
        1.0 / gamma_pos(z)
    } else if 1.0 - z > 171.6 {
        sinpi(z) / PI * ln_gamma(1.0 - z).exp()
    } else {
        sinpi(z) * gamma_pos(1.0 - z) / PI
    }
}

/// ln |Gamma(z)| for z > 0.
pub fn ln_gamma(z: f64) -> f64 {
    assert!(z > 0.0, "ln_gamma needs a positive argument");
    let mut w = z;
    let mut lp = 0.0;
    while w < 15.0 {
        lp += w.ln();
        w += 1.0;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + stirling_tail(w) - lp
}

const SERIES_CAP: usize = 500;
const ASYM_CAP: usize = 80;

/// Cached evaluator of E_{alpha,beta}.
#[derive(Debug, Clone)]
pub struct MittagLeffler {
    params: MlfParams,
    series: Vec<f64>,
    asym: Vec<f64>,
    asym_env: Vec<f64>,
    r0: f64,
    r1: f64,
}

/// Which evaluation regime served a call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Series,
    Asymptotic,
    Integral,
    Closed,
}

impl MittagLeffler {
    pub fn new(params: MlfParams) -> Self {
        let MlfParams { alpha, beta } = params;
        let series = (0..SERIES_CAP).map(|k| rgamma(alpha * k as f64 + beta)).collect();
        let mut asym = Vec::new();
        for k in 1..=ASYM_CAP {
            let z = beta - alpha * k as f64;
            if z < -170.0 {
                break;
            }
            asym.push(rgamma(z));
        }
        let asym_env = (1..=asym.len())
            .map(|k| {
                let g = alpha * k as f64 + 1.0 - beta;
                if g > 0.0 { ln_gamma(g) } else { f64::NAN }
            })
            .collect();
        let r0 = 1.0 + 2.0 * alpha;
        let r1 = if alpha <= 1.0 { 10f64.max(25f64.powf(alpha)) } else { 10f64.powf(alpha) };
        Self { params, series, asym, asym_env, r0, r1 }
    }

    pub fn params(&self) -> MlfParams {
        self.params
    }

    /// Radii (r0, r1) separating the series, transition and asymptotic regimes.
    pub fn radii(&self) -> (f64, f64) {
        (self.r0, self.r1)
    }

    pub fn eval(&self, x: f64) -> Result<f64, MlfError> {
        self.eval_with_regime(x).map(|r| r.0)
    }

    pub fn eval_with_regime(&self, x: f64) -> Result<(f64, Regime), MlfError> {
        if !x.is_finite() {
            return Err(MlfError::NotFinite(x));
        }
        let MlfParams { alpha, beta } = self.params;
        if alpha == 1.0 && beta == 1.0 {
            let v = x.exp();
            return if v.is_finite() { Ok((v, Regime::Closed)) } else { Err(MlfError::Overflow(x)) };
        }
        if x.abs() <= self.r0 {
            return self.series(x).map(|v| (v, Regime::Series));
        }
        if x > 0.0 {
            return self.positive(x);
        }
        if alpha > 1.0 {
            return self.negative_oscillatory(x);
        }
        if x <= -self.r1 {
            if let Some(v) = self.asymptotic(x) {
                return Ok((v, Regime::Asymptotic));
            }
        }
        self.integral(x).map(|v| (v, Regime::Integral))
    }

    /// Truncated power series.
    pub fn series(&self, x: f64) -> Result<f64, MlfError> {
        let MlfParams { alpha, beta } = self.params;
        let mut sum = 0.0;
        let mut pk = 1.0;
        let mut small = 0;
        let peak = x.abs().powf(1.0 / alpha);
        for k in 0..20_000usize {
            let c = if k < SERIES_CAP { self.series[k] } else { rgamma(alpha * k as f64 + beta) };
            let term = pk * c;
            if !term.is_finite() {
                return Err(MlfError::Overflow(x));
            }
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() && alpha * k as f64 + beta > peak {
                small += 1;
                if small >= 2 {
                    break;
                }
            } else {
                small = 0;
            }
            pk *= x;
            if pk == 0.0 {
                return Ok(sum);
            }
        }
        if small < 2 {
            return Err(MlfError::NoConvergence(x));
        }
        Ok(sum)
    }

    /// Algebraic asymptotic expansion with smallest-term truncation.
    ///
    /// Returns `None` when the smallest term is too large to meet the target accuracy.
    pub fn asymptotic(&self, x: f64) -> Option<f64> {
        let (sum, last) = self.algebraic_tail(x);
        if last <= 1e-15 * sum.abs().max(1e-300) {
            Some(sum)
        } else {
            None
        }
    }

    fn algebraic_tail(&self, x: f64) -> (f64, f64) {
        let inv = 1.0 / x;
        let lx = x.abs().ln();
        let mut pk = 1.0;
        let mut sum = 0.0;
        let mut prev_env = f64::INFINITY;
        let mut rem = f64::INFINITY;
        for (i, c) in self.asym.iter().enumerate() {
            let k = (i + 1) as f64;
            pk *= inv;
            let lg = self.asym_env[i];
            let env = if lg.is_nan() { (pk * c).abs() } else { (lg - k * lx).exp() / PI };
            if env > prev_env {
                break;
            }
            sum -= pk * c;
            prev_env = env;
            rem = env * x.abs().recip();
            if env <= 1e-18 * sum.abs() {
                break;
            }
        }
        if self.asym.iter().all(|c| *c == 0.0) {
            rem = 0.0;
        }
        (sum, rem)
    }

    fn positive(&self, x: f64) -> Result<(f64, Regime), MlfError> {
        let MlfParams { alpha, beta } = self.params;
        let z = x.powf(1.0 / alpha);
        if z > 705.0 {
            return Err(MlfError::Overflow(x));
        }
        if z < 40.0 {
            return self.series(x).map(|v| (v, Regime::Series));
        }
        let lead = x.powf((1.0 - beta) / alpha) * z.exp() / alpha;
        let (alg, _) = self.algebraic_tail(x);
        Ok((lead + alg, Regime::Asymptotic))
    }

    fn negative_oscillatory(&self, x: f64) -> Result<(f64, Regime), MlfError> {
        let MlfParams { alpha, beta } = self.params;
        let r = (-x).powf(1.0 / alpha);
        if r <= 10.0 {
            return self.series(x).map(|v| (v, Regime::Series));
        }
        let th = PI / alpha;
        let ln_r = r.ln();
        let mag = ((1.0 - beta) * ln_r + r * th.cos()).exp();
        let ph = (1.0 - beta) * th + r * th.sin();
        let lead = 2.0 / alpha * mag * ph.cos();
        let (alg, _) = self.algebraic_tail(x);
        Ok((lead + alg, Regime::Asymptotic))
    }

    /// Real-integral representation on the transition band, alpha <= 1.
    pub fn integral(&self, x: f64) -> Result<f64, MlfError> {
        let MlfParams { alpha, beta } = self.params;
        if alpha == 1.0 {
            return self.integral_alpha_one(x);
        }
        let z = x;
        let eps = 1.0;
        let q = (1.0 - beta) / alpha;
        let s1 = (PI * (1.0 - beta)).sin();
        let s2 = (PI * (1.0 - beta + alpha)).sin();
        let ca = (alpha * PI).cos();
        let kfun = |chi: f64| {
            let e = (-chi.powf(1.0 / alpha)).exp();
            if e == 0.0 {
                return 0.0;
            }
            chi.powf(q) * e * (chi * s1 - z * s2) / (chi * chi - 2.0 * chi * z * ca + z * z) / (alpha * PI)
        };
        let chi_max = 745f64.powf(alpha).max(2.0);
        let mut breaks = vec![eps];
        let mut b = 2.0;
        while b < chi_max {
            breaks.push(b);
            b *= 2.0;
        }
        breaks.push(chi_max);
        let centre = z * ca;
        let width = (z * (alpha * PI).sin()).abs();
        if centre > eps && width > 0.0 {
            breaks.push(centre);
            let mut d = width;
            while d < chi_max {
                breaks.push(centre - d);
                breaks.push(centre + d);
                d *= 3.0;
            }
            breaks.retain(|b| *b >= eps && *b <= chi_max);
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.dedup();
        }
        let mut kf = kfun;
        let i1 = integrate_breaks(&mut kf, &breaks, 1e-17, 1e-14, 4000);
        let pfun = |phi: f64| {
            let e1a = eps.powf(1.0 / alpha);
            let om = e1a * (phi / alpha).sin() + phi * (1.0 + q);
            let amp = eps.powf(1.0 + q) * (e1a * (phi / alpha).cos()).exp() / (2.0 * alpha * PI);
            let dr = eps * phi.cos() - z;
            let di = eps * phi.sin();
            let den = dr * dr + di * di;
            amp * (om.cos() * dr + om.sin() * di) / den
        };
        let mut pf = pfun;
        let nb = 8;
        let top = alpha * PI;
        let pb: Vec<f64> = (0..=nb).map(|i| top * i as f64 / nb as f64).collect();
        let i2 = integrate_breaks(&mut pf, &pb, 1e-17, 1e-14, 4000);
        let v = i1.value + 2.0 * i2.value;
        let settled = |r: &crate::quadrature::Integral| r.converged || r.error <= 1e-12 * v.abs().max(1e-4);
        if !settled(&i1) || !settled(&i2) {
            return Err(MlfError::NoConvergence(x));
        }
        Ok(v)
    }

    fn integral_alpha_one(&self, x: f64) -> Result<f64, MlfError> {
        let beta = self.params.beta;
        if beta > 1.0 {
            let c = rgamma(beta - 1.0);
            let p = beta - 2.0;
            let mut f = |s: f64| (x * s).exp() * (1.0 - s).powf(p);
            let mut br = vec![0.0];
            let w = (1.0 / -x).min(0.5);
            let mut b = w;
            while b < 1.0 {
                br.push(b);
                b *= 4.0;
            }
            br.push(1.0);
            let r = integrate_breaks(&mut f, &br, 1e-300, 1e-14, 4000);
            if !r.converged {
                return Err(MlfError::NoConvergence(x));
            }
            Ok(c * r.value)
        } else {
            let up = MittagLeffler::new(MlfParams { alpha: 1.0, beta: beta + 1.0 });
            Ok(x * up.eval(x)? + rgamma(beta))
        }
    }
}

/// E_{alpha,beta}(x).
pub fn mlf(params: MlfParams, x: f64) -> Result<f64, MlfError> {
    MlfParams::new(params.alpha, params.beta)?;
    MittagLeffler::new(params).eval(x)
}
