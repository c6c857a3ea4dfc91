//! Problem data, eigenfunction-series solutions and exact semidiscrete solutions in 1D.

use crate::linalg::jacobi_eigen;
use crate::mesh_fem::{FemError, GridFunction, Mesh, MeshKind, SparseOperator};
use crate::mittag_leffler::{gamma_fn, MittagLeffler, MlfError, MlfParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefError {
    #[error("unsupported data: {0}")]
    Unsupported(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("dimension {0} exceeds the dense eigensolver cap of 400")]
    DimensionCap(usize),
    #[error("series truncation did not settle: change {0:e}")]
    Truncation(f64),
    #[error(transparent)]
    Mlf(#[from] MlfError),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Spatial factor of a source term, or smooth initial data.
///
/// `SineMode` is the L2-normalized Dirichlet eigenfunction (sqrt(2) sin(m pi x), or 2 sin(m pi x) sin(n pi y)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialFactor {
    Zero,
    Constant { value: f64 },
    #[serde(rename = "bubble1d")]
    Bubble1D,
    #[serde(rename = "bubble2d")]
    Bubble2D,
    SineMode {
        m: usize,
        #[serde(default)]
        n: usize,
    },
    XSin2PiX,
    Nodal { values: Vec<f64> },
}

impl SpatialFactor {
    pub fn check_domain(&self, kind: MeshKind) -> Result<(), String> {
        let ok = match self {
            SpatialFactor::Bubble1D | SpatialFactor::XSin2PiX => kind == MeshKind::Interval,
            SpatialFactor::Bubble2D => kind == MeshKind::UnitSquare,
            SpatialFactor::SineMode { m, n } => *m >= 1 && (kind == MeshKind::Interval || *n >= 1),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{self:?} is not defined on {kind:?}"))
        }
    }

    /// Pointwise value.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            SpatialFactor::Zero | SpatialFactor::Nodal { .. } => 0.0,
            SpatialFactor::Constant { value } => *value,
            SpatialFactor::Bubble1D => x * (1.0 - x),
            SpatialFactor::Bubble2D => x * (1.0 - x) * y * (1.0 - y),
            SpatialFactor::SineMode { m, n } => {
                if *n == 0 {
                    SQRT_2 * (*m as f64 * PI * x).sin()
                } else {
                    2.0 * (*m as f64 * PI * x).sin() * (*n as f64 * PI * y).sin()
                }
            }
            SpatialFactor::XSin2PiX => x * (2.0 * PI * x).sin(),
        }
    }

    /// Pointwise Laplacian.
    pub fn laplacian(&self, x: f64, y: f64) -> f64 {
        match self {
            SpatialFactor::Zero | SpatialFactor::Nodal { .. } | SpatialFactor::Constant { .. } => 0.0,
            SpatialFactor::Bubble1D => -2.0,
            SpatialFactor::Bubble2D => -2.0 * y * (1.0 - y) - 2.0 * x * (1.0 - x),
            SpatialFactor::SineMode { m, n } => {
                let l = PI * PI * ((*m * *m) as f64 + (*n * *n) as f64);
                -l * self.eval(x, y)
            }
            SpatialFactor::XSin2PiX => {
                4.0 * PI * (2.0 * PI * x).cos() - 4.0 * PI * PI * x * (2.0 * PI * x).sin()
            }
        }
    }
}

/// Initial data catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Zero,
    SineMode {
        m: usize,
        #[serde(default)]
        n: usize,
    },
    XSin2PiX,
    DiracPoint {
        x0: f64,
    },
    /// Boundary of [1/4, 3/4]^2.
    DiracLine,
    Nodal { values: Vec<f64> },
}

impl InitialData {
    pub fn is_zero(&self) -> bool {
        matches!(self, InitialData::Zero)
    }

    pub fn is_very_weak(&self) -> bool {
        matches!(self, InitialData::DiracPoint { .. } | InitialData::DiracLine)
    }

    /// The smooth function behind the data, when there is one.
    pub fn as_spatial(&self) -> Option<SpatialFactor> {
        match self {
            InitialData::Zero => Some(SpatialFactor::Zero),
            InitialData::SineMode { m, n } => Some(SpatialFactor::SineMode { m: *m, n: *n }),
            InitialData::XSin2PiX => Some(SpatialFactor::XSin2PiX),
            InitialData::Nodal { values: c } => Some(SpatialFactor::Nodal { values: c.clone() }),
            _ => None,
        }
    }
}

/// Time factor g(t) of a separable source term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeFactor {
    Constant { c: f64 },
    Power { c: f64, gamma: f64 },
    ExpMinusOne { c: f64 },
}

impl TimeFactor {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeFactor::Constant { c } => c,
            TimeFactor::Power { c, gamma } => {
                if gamma == 0.0 {
                    c
                } else {
                    c * t.powf(gamma)
                }
            }
            TimeFactor::ExpMinusOne { c } => c * t.exp_m1(),
        }
    }

    /// l-th derivative at t = 0, when it exists.
    pub fn derivative_at_zero(&self, l: usize) -> Result<f64, String> {
        match *self {
            TimeFactor::Constant { c } => Ok(if l == 0 { c } else { 0.0 }),
            TimeFactor::ExpMinusOne { c } => Ok(if l == 0 { 0.0 } else { c }),
            TimeFactor::Power { c, gamma } => {
                let lf = l as f64;
                if gamma == gamma.floor() && gamma >= 0.0 {
                    if lf == gamma {
                        Ok(c * gamma_fn(gamma + 1.0).map_err(|e| e.to_string())?)
                    } else {
                        Ok(0.0)
                    }
                } else if gamma > lf {
                    Ok(0.0)
                } else {
                    Err(format!("t^{gamma} has no bounded derivative of order {l} at t = 0"))
                }
            }
        }
    }

    /// Integral over [a, b].
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            TimeFactor::Constant { c } => c * (b - a),
            TimeFactor::Power { c, gamma } => c * (b.powf(gamma + 1.0) - a.powf(gamma + 1.0)) / (gamma + 1.0),
            TimeFactor::ExpMinusOne { c } => c * ((b.exp() - a.exp()) - (b - a)),
        }
    }
}

/// One separable source term g(t) w(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableTerm {
    pub time: TimeFactor,
    pub space: SpatialFactor,
}

/// The model problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub domain: MeshKind,
    pub alpha: f64,
    pub t_final: f64,
    pub initial: InitialData,
    #[serde(default)]
    pub source: Vec<SeparableTerm>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), RefError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(RefError::Invalid(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        if !(self.t_final > 0.0) {
            return Err(RefError::Invalid("horizon must be positive".into()));
        }
        if let InitialData::DiracLine = self.initial {
            if self.domain != MeshKind::UnitSquare {
                return Err(RefError::Invalid("line source needs the square".into()));
            }
        }
        if let InitialData::DiracPoint { x0 } = self.initial {
            if self.domain != MeshKind::Interval || !(x0 > 0.0 && x0 < 1.0) {
                return Err(RefError::Invalid("point source needs an interior point of (0,1)".into()));
            }
        }
        for term in &self.source {
            if let TimeFactor::Power { gamma, .. } = term.time {
                if gamma <= -1.0 {
                    return Err(RefError::Invalid(format!("t^{gamma} is not integrable")));
                }
            }
            term.space.check_domain(self.domain).map_err(RefError::Invalid)?;
        }
        Ok(())
    }

    pub fn has_source(&self) -> bool {
        !self.source.is_empty()
    }
}

fn xsin_coeff(m: usize) -> f64 {
    let c = |k: i64| -> f64 {
        if k == 0 {
            0.5
        } else {
            let s = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            (s - 1.0) / ((k * k) as f64 * PI * PI)
        }
    };
    let m = m as i64;
    SQRT_2 * 0.5 * (c(m - 2) - c(m + 2))
}

fn bubble_coeff(m: usize) -> f64 {
    if m % 2 == 1 {
        SQRT_2 * 4.0 / (m as f64 * PI).powi(3)
    } else {
        0.0
    }
}

fn line_factors(m: usize) -> (f64, f64) {
    let k = m as f64 * PI;
    let s = (k / 4.0).sin() + (3.0 * k / 4.0).sin();
    let i = ((k / 4.0).cos() - (3.0 * k / 4.0).cos()) / k;
    (s, i)
}

/// Expansion coefficients (v, phi_j) for j up to (mx, my); row-major in (m, n), my = 1 in 1D.
pub fn eigen_coeffs(kind: MeshKind, item: &InitialData, mx: usize, my: usize) -> Result<Vec<f64>, RefError> {
    let my = if kind == MeshKind::Interval { 1 } else { my };
    let mut out = vec![0.0; mx * my];
    match item {
        InitialData::Zero => {}
        InitialData::SineMode { m, n } => {
            let n = if kind == MeshKind::Interval { 1 } else { *n };
            if *m >= 1 && *m <= mx && n >= 1 && n <= my {
                out[(m - 1) * my + (n - 1)] = 1.0;
            }
        }
        InitialData::XSin2PiX => {
            if kind != MeshKind::Interval {
                return Err(RefError::Unsupported("x sin(2 pi x) lives on the interval".into()));
            }
            for m in 1..=mx {
                out[m - 1] = xsin_coeff(m);
            }
        }
        InitialData::DiracPoint { x0 } => {
            if kind != MeshKind::Interval {
                return Err(RefError::Unsupported("point source lives on the interval".into()));
            }
            for m in 1..=mx {
                out[m - 1] = SQRT_2 * (m as f64 * PI * x0).sin();
            }
        }
        InitialData::DiracLine => {
            if kind != MeshKind::UnitSquare {
                return Err(RefError::Unsupported("line source lives on the square".into()));
            }
            let fy: Vec<(f64, f64)> = (1..=my).map(line_factors).collect();
            for m in 1..=mx {
                let (sm, im) = line_factors(m);
                for n in 1..=my {
                    let (sn, i_n) = fy[n - 1];
                    out[(m - 1) * my + (n - 1)] = 2.0 * (sn * im + sm * i_n);
                }
            }
        }
        InitialData::Nodal { .. } => {
            return Err(RefError::Unsupported("nodal data has no continuous expansion".into()));
        }
    }
    Ok(out)
}

/// Expansion coefficients of a spatial factor.
pub fn spatial_coeffs(kind: MeshKind, w: &SpatialFactor, mx: usize, my: usize) -> Result<Vec<f64>, RefError> {
    let my = if kind == MeshKind::Interval { 1 } else { my };
    match w {
        SpatialFactor::Zero => Ok(vec![0.0; mx * my]),
        SpatialFactor::SineMode { m, n } => eigen_coeffs(kind, &InitialData::SineMode { m: *m, n: *n }, mx, my),
        SpatialFactor::XSin2PiX => eigen_coeffs(kind, &InitialData::XSin2PiX, mx, my),
        SpatialFactor::Bubble1D if kind == MeshKind::Interval => Ok((1..=mx).map(bubble_coeff).collect()),
        SpatialFactor::Bubble2D if kind == MeshKind::UnitSquare => {
            let mut out = vec![0.0; mx * my];
            for m in 1..=mx {
                for n in 1..=my {
                    out[(m - 1) * my + (n - 1)] = bubble_coeff(m) * bubble_coeff(n);
                }
            }
            Ok(out)
        }
        SpatialFactor::Constant { value: c } => {
            let one = |m: usize| if m % 2 == 1 { SQRT_2 * 2.0 / (m as f64 * PI) } else { 0.0 };
            let mut out = vec![0.0; mx * my];
            for m in 1..=mx {
                for n in 1..=my {
                    let v = if kind == MeshKind::Interval { one(m) } else { one(m) * one(n) };
                    out[(m - 1) * my + (n - 1)] = c * v;
                }
            }
            Ok(out)
        }
        _ => Err(RefError::Unsupported(format!("{w:?} has no closed-form expansion here"))),
    }
}

/// Scalar Duhamel response int_0^t (t-s)^(a-1) E_{a,a}(-lambda (t-s)^a) g(s) ds.
#[derive(Debug, Clone)]
pub struct TimeKernel {
    alpha: f64,
    g: TimeFactor,
    ml: Vec<MittagLeffler>,
}

const EXP_TERMS: usize = 60;

impl TimeKernel {
    pub fn new(alpha: f64, g: TimeFactor) -> Result<Self, RefError> {
        let ml = match g {
            TimeFactor::Constant { .. } => vec![MittagLeffler::new(MlfParams::new(alpha, alpha + 1.0)?)],
            TimeFactor::Power { gamma, .. } => {
                vec![MittagLeffler::new(MlfParams::new(alpha, gamma + alpha + 1.0)?)]
            }
            TimeFactor::ExpMinusOne { .. } => (1..=EXP_TERMS)
                .map(|k| MlfParams::new(alpha, alpha + k as f64 + 1.0).map(MittagLeffler::new))
                .collect::<Result<_, _>>()?,
        };
        Ok(Self { alpha, g, ml })
    }

    pub fn eval(&self, lambda: f64, t: f64) -> Result<f64, RefError> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let a = self.alpha;
        let x = -lambda * t.powf(a);
        match self.g {
            TimeFactor::Constant { c } => Ok(c * t.powf(a) * self.ml[0].eval(x)?),
            TimeFactor::Power { c, gamma } => {
                Ok(c * gamma_fn(gamma + 1.0)? * t.powf(gamma + a) * self.ml[0].eval(x)?)
            }
            TimeFactor::ExpMinusOne { c } => {
                let mut s = 0.0;
                let mut tk = t.powf(a);
                for ml in &self.ml {
                    tk *= t;
                    let term = tk * ml.eval(x)?;
                    s += term;
                    if term.abs() < 1e-17 * s.abs() {
                        break;
                    }
                }
                Ok(c * s)
            }
        }
    }
}

/// Truncated eigenfunction series with L2-normalized modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesField {
    pub kind: MeshKind,
    pub mx: usize,
    pub my: usize,
    pub coeffs: Vec<f64>,
}

impl SeriesField {
    pub fn coeff(&self, m: usize, n: usize) -> f64 {
        self.coeffs[(m - 1) * self.my + (n - 1)]
    }

    pub fn eigenvalue(kind: MeshKind, m: usize, n: usize) -> f64 {
        match kind {
            MeshKind::Interval => (m as f64 * PI).powi(2),
            MeshKind::UnitSquare => PI * PI * ((m * m + n * n) as f64),
        }
    }

    /// Pointwise value; separable sums cost O(mx + my) sines per point.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let sx: Vec<f64> = (1..=self.mx).map(|m| (m as f64 * PI * x).sin()).collect();
        match self.kind {
            MeshKind::Interval => SQRT_2 * self.coeffs.iter().zip(&sx).map(|(c, s)| c * s).sum::<f64>(),
            MeshKind::UnitSquare => {
                let sy: Vec<f64> = (1..=self.my).map(|n| (n as f64 * PI * y).sin()).collect();
                let mut s = 0.0;
                for m in 0..self.mx {
                    let row = &self.coeffs[m * self.my..(m + 1) * self.my];
                    s += sx[m] * row.iter().zip(&sy).map(|(c, s)| c * s).sum::<f64>();
                }
                2.0 * s
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Number of modes per dimension with lambda t^alpha <= cap.
pub fn truncation_order(kind: MeshKind, alpha: f64, t: f64, cap: f64) -> usize {
    let lam = cap / t.powf(alpha);
    let m = match kind {
        MeshKind::Interval => lam.sqrt() / PI,
        MeshKind::UnitSquare => lam.sqrt() / PI,
    };
    (m.ceil() as usize).max(8)
}

/// Series solution u(t) truncated to (mx, my) modes.
pub fn exact_solution(spec: &ProblemSpec, t: f64, mx: usize, my: usize) -> Result<SeriesField, RefError> {
    spec.validate()?;
    let kind = spec.domain;
    let my = if kind == MeshKind::Interval { 1 } else { my };
    let alpha = spec.alpha;
    let v = eigen_coeffs(kind, &spec.initial, mx, my)?;
    let e1 = MittagLeffler::new(MlfParams::new(alpha, 1.0)?);
    let mut coeffs = vec![0.0; mx * my];
    let ta = t.powf(alpha);
    for m in 1..=mx {
        for n in 1..=my {
            let k = (m - 1) * my + (n - 1);
            if v[k] != 0.0 {
                let lam = SeriesField::eigenvalue(kind, m, n);
                coeffs[k] = v[k] * e1.eval(-lam * ta)?;
            }
        }
    }
    for term in &spec.source {
        let w = spatial_coeffs(kind, &term.space, mx, my)?;
        let kern = TimeKernel::new(alpha, term.time)?;
        for m in 1..=mx {
            for n in 1..=my {
                let k = (m - 1) * my + (n - 1);
                if w[k] != 0.0 {
                    coeffs[k] += w[k] * kern.eval(SeriesField::eigenvalue(kind, m, n), t)?;
                }
            }
        }
    }
    Ok(SeriesField { kind, mx, my, coeffs })
}

/// Series solution with a truncation-doubling check on point values: the mode count doubles until
/// two successive truncations agree to `tol` (relative, floored at 1) or a size cap is reached.
pub fn exact_solution_checked(spec: &ProblemSpec, t: f64, points: &[(f64, f64)], tol: f64) -> Result<Vec<f64>, RefError> {
    let cap = match spec.domain {
        MeshKind::Interval => 1 << 18,
        MeshKind::UnitSquare => 1 << 11,
    };
    let mut m = truncation_order(spec.domain, spec.alpha, t, 50.0);
    let eval = |m: usize| -> Result<Vec<f64>, RefError> {
        let f = exact_solution(spec, t, m, m)?;
        Ok(points.iter().map(|&(x, y)| f.eval(x, y)).collect())
    };
    let mut prev = eval(m)?;
    loop {
        let next = eval(2 * m)?;
        let change = prev.iter().zip(&next).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max);
        if change <= tol {
            return Ok(next);
        }
        m *= 2;
        if 2 * m > cap {
            return Err(RefError::Truncation(change));
        }
        prev = next;
    }
}

const DENSE_CAP: usize = 400;

/// Generalized eigenpairs A phi = lambda M phi with M-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct DiscreteEigen {
    pub lambdas: Vec<f64>,
    /// Row-major dof x dof; column j is phi_j.
    pub vecs: Vec<f64>,
    mass: SparseOperator,
}

impl DiscreteEigen {
    pub fn new(mass: &SparseOperator, stiff: &SparseOperator) -> Result<Self, RefError> {
        let n = mass.dim;
        if n > DENSE_CAP {
            return Err(RefError::DimensionCap(n));
        }
        // Cholesky of M (banded in practice, dense here at n <= 400).
        let mut l = vec![0.0; n * n];
        let p = mass.bandwidth();
        for i in 0..n {
            for j in i.saturating_sub(p)..=i {
                let mut s = mass.get(i, j);
                for k in i.saturating_sub(p).max(j.saturating_sub(p))..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(RefError::Fem(FemError::Breakdown(i)));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        // C = L^{-1} A L^{-T}: first Y = L^{-1} A (column by column), then C = L^{-1} Y^T.
        let mut y = vec![0.0; n * n];
        for c in 0..n {
            for i in 0..n {
                let mut s = stiff.get(i, c);
                for k in i.saturating_sub(p)..i {
                    s -= l[i * n + k] * y[k * n + c];
                }
                y[i * n + c] = s / l[i * n + i];
            }
        }
        let mut cm = vec![0.0; n * n];
        for c in 0..n {
            for i in 0..n {
                let mut s = y[c * n + i];
                for k in i.saturating_sub(p)..i {
                    s -= l[i * n + k] * cm[k * n + c];
                }
                cm[i * n + c] = s / l[i * n + i];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let a = 0.5 * (cm[i * n + j] + cm[j * n + i]);
                cm[i * n + j] = a;
                cm[j * n + i] = a;
            }
        }
        let (lambdas, q) = jacobi_eigen(&cm, n, 1e-13);
        // phi = L^{-T} q
        let mut vecs = vec![0.0; n * n];
        for c in 0..n {
            for i in (0..n).rev() {
                let mut s = q[i * n + c];
                for k in (i + 1)..(i + 1 + p).min(n) {
                    s -= l[k * n + i] * vecs[k * n + c];
                }
                vecs[i * n + c] = s / l[i * n + i];
            }
        }
        Ok(Self { lambdas, vecs, mass: mass.clone() })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// (v, phi_j)_M for all j.
    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        self.load_coefficients(&self.mass.apply(v))
    }

    /// phi_j^T b for all j.
    pub fn load_coefficients(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let bi = b[i];
            let row = &self.vecs[i * n..(i + 1) * n];
            for (o, p) in out.iter_mut().zip(row) {
                *o += p * bi;
            }
        }
        out
    }

    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.vecs[i * n..(i + 1) * n].iter().zip(c).map(|(p, c)| p * c).sum()).collect()
    }

    /// Exact-in-time semidiscrete solution at t for initial vector v_h and source loads.
    pub fn solve(&self, alpha: f64, v_h: &[f64], sources: &[(TimeFactor, Vec<f64>)], t: f64) -> Result<Vec<f64>, RefError> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        if t <= 0.0 {
            return Ok(v_h.to_vec());
        }
        let e1 = MittagLeffler::new(MlfParams::new(alpha, 1.0)?);
        let ta = t.powf(alpha);
        let v = self.coefficients(v_h);
        for j in 0..n {
            c[j] = v[j] * e1.eval(-self.lambdas[j] * ta)?;
        }
        for (g, load) in sources {
            let w = self.load_coefficients(load);
            let kern = TimeKernel::new(alpha, *g)?;
            for j in 0..n {
                c[j] += w[j] * kern.eval(self.lambdas[j], t)?;
            }
        }
        Ok(self.synthesize(&c))
    }
}

/// Exact semidiscrete solution on the interval.
pub fn semidiscrete_exact_1d(
    spec: &ProblemSpec,
    mass: &SparseOperator,
    stiff: &SparseOperator,
    v_h: &GridFunction,
    t: f64,
) -> Result<GridFunction, RefError> {
    if spec.domain != MeshKind::Interval {
        return Err(RefError::Unsupported("discrete eigen reference needs the interval".into()));
    }
    let mesh: Mesh = v_h.mesh;
    if t <= 0.0 {
        return Ok(v_h.clone());
    }
    let eig = DiscreteEigen::new(mass, stiff)?;
    let mut sources = Vec::new();
    for term in &spec.source {
        sources.push((term.time, crate::mesh_fem::load_vector(&mesh, &term.space)?));
    }
    let u = eig.solve(spec.alpha, &v_h.coeffs, &sources, t)?;
    Ok(GridFunction::new(mesh, u))
}
