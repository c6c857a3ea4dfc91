//! Shared spatial frame and the convolution time march used by the CQ and L1 schemes.

use crate::mesh_fem::{
    assemble_lumped_mass, assemble_mass, assemble_stiffness, interpolate, l2_project, line_functional,
    load_vector, lumped_project, ritz_project, FemError, GridFunction, Mesh, Polyline, SparseOperator, SpdFactor,
};
use crate::spectral_reference::{InitialData, ProblemSpec, SpatialFactor, TimeFactor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Spatial scheme: consistent (standard Galerkin) or lumped mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FemScheme {
    #[default]
    Sg,
    Lm,
}

/// How v_h is built from the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VhRule {
    L2,
    LumpedL2,
    Ritz,
    Nodal,
}

impl VhRule {
    /// Ritz projection for smooth data, L2 projection otherwise.
    pub fn default_for(initial: &InitialData) -> Self {
        match initial {
            InitialData::SineMode { .. } | InitialData::XSin2PiX => VhRule::Ritz,
            _ => VhRule::L2,
        }
    }
}

/// Entries psi_j(x0) of the point evaluation functional on the interval.
pub fn point_functional(mesh: &Mesh, x0: f64) -> Result<Vec<f64>, FemError> {
    if mesh.kind != crate::mesh_fem::MeshKind::Interval {
        return Err(FemError::Unsupported("point source needs the interval".into()));
    }
    let mut b = vec![0.0; mesh.dof()];
    for (j, bj) in b.iter_mut().enumerate() {
        let xj = (j + 1) as f64 * mesh.h;
        *bj = (1.0 - (x0 - xj).abs() / mesh.h).max(0.0);
    }
    Ok(b)
}

/// Load vector (v, psi_j) of the initial data, including distributions.
pub fn initial_load(mesh: &Mesh, initial: &InitialData) -> Result<Vec<f64>, FemError> {
    match initial {
        InitialData::Zero => Ok(vec![0.0; mesh.dof()]),
        InitialData::DiracPoint { x0 } => point_functional(mesh, *x0),
        InitialData::DiracLine => line_functional(mesh, &Polyline::square_loop(0.25, 0.75)),
        other => load_vector(mesh, &other.as_spatial().expect("smooth data")),
    }
}

/// Discrete initial value v_h.
pub fn initial_vector(mesh: &Mesh, initial: &InitialData, rule: VhRule) -> Result<GridFunction, FemError> {
    if let InitialData::Nodal { values: c } = initial {
        if c.len() != mesh.dof() {
            return Err(FemError::Dimension { op: mesh.dof(), len: c.len() });
        }
        return Ok(GridFunction::new(*mesh, c.clone()));
    }
    if initial.is_zero() {
        return Ok(GridFunction::zeros(*mesh));
    }
    match rule {
        VhRule::L2 => l2_project(mesh, &initial_load(mesh, initial)?),
        VhRule::LumpedL2 => lumped_project(mesh, &initial_load(mesh, initial)?),
        VhRule::Ritz | VhRule::Nodal => {
            let v: SpatialFactor = initial
                .as_spatial()
                .ok_or_else(|| FemError::Unsupported("distributional data needs an L2-type projection".into()))?;
            if rule == VhRule::Ritz {
                ritz_project(mesh, &v)
            } else {
                interpolate(mesh, &v)
            }
        }
    }
}

/// Assembled operators and source loads for one mesh and spatial scheme.
#[derive(Debug, Clone)]
pub struct SpaceDisc {
    pub mesh: Mesh,
    pub scheme: FemScheme,
    pub mass: SparseOperator,
    pub stiff: SparseOperator,
    pub loads: Vec<(TimeFactor, Vec<f64>)>,
}

impl SpaceDisc {
    pub fn new(spec: &ProblemSpec, mesh: Mesh, scheme: FemScheme) -> Result<Self, FemError> {
        if mesh.kind != spec.domain {
            return Err(FemError::Unsupported("mesh and problem domain differ".into()));
        }
        let mass = match scheme {
            FemScheme::Sg => assemble_mass(&mesh),
            FemScheme::Lm => assemble_lumped_mass(&mesh),
        };
        let mut loads = Vec::new();
        for term in &spec.source {
            loads.push((term.time, load_vector(&mesh, &term.space)?));
        }
        Ok(Self { mesh, scheme, mass, stiff: assemble_stiffness(&mesh), loads })
    }

    pub fn dof(&self) -> usize {
        self.mesh.dof()
    }

    /// Accumulates c * sum_i g_i(t) load_i into `out`.
    pub fn add_source(&self, t: f64, c: f64, out: &mut [f64]) {
        for (g, load) in &self.loads {
            let gv = c * g.value(t);
            if gv != 0.0 {
                for (o, l) in out.iter_mut().zip(load) {
                    *o += gv * l;
                }
            }
        }
    }

    /// Load of the l-th time derivative of the source at t = 0.
    pub fn source_derivative(&self, l: usize) -> Result<Vec<f64>, StepError> {
        let mut out = vec![0.0; self.dof()];
        for (g, load) in &self.loads {
            let d = g.derivative_at_zero(l).map_err(StepError::Precondition)?;
            if d != 0.0 {
                for (o, x) in out.iter_mut().zip(load) {
                    *o += d * x;
                }
            }
        }
        Ok(out)
    }
}

/// Nodal states U^0..U^N on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub tau: f64,
    pub label: String,
    pub dof: usize,
    pub data: Vec<f64>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.data.len() / self.dof - 1
    }

    pub fn state(&self, n: usize) -> &[f64] {
        &self.data[n * self.dof..(n + 1) * self.dof]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.steps())
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn grid_function(&self, n: usize) -> GridFunction {
        GridFunction::new(self.mesh, self.state(n).to_vec())
    }
}

const BLOCK: usize = 64;
const PANEL: usize = 4096;

/// Solves (w_0 M + A) W^n = R^n - A v - M sum_{j=1}^{n-1} w_j W^{n-j}, U^n = v + W^n, for n = 1..steps.
///
/// `rhs(n, buf)` fills R^n into a zeroed buffer. Far history is accumulated blockwise with dgemm.
pub fn convolution_march<F>(
    disc: &SpaceDisc,
    v: &[f64],
    omega: &[f64],
    steps: usize,
    tau: f64,
    label: &str,
    mut rhs: F,
) -> Result<Trajectory, StepError>
where
    F: FnMut(usize, &mut [f64]) -> Result<(), StepError>,
{
    let d = disc.dof();
    if v.len() != d {
        return Err(FemError::Dimension { op: d, len: v.len() }.into());
    }
    if omega.len() < steps + 1 {
        return Err(StepError::Precondition("too few convolution weights".into()));
    }
    let lhs = disc.mass.combine(omega[0], &disc.stiff, 1.0);
    let fac = SpdFactor::new(&lhs)?;
    let av = disc.stiff.apply(v);
    let mut w = vec![0.0; (steps + 1) * d];
    let mut far = vec![0.0; BLOCK * d];
    let mut toeplitz = vec![0.0; BLOCK * PANEL];
    let mut hist = vec![0.0; d];
    let mut buf = vec![0.0; d];
    let mut n0 = 1;
    while n0 <= steps {
        let nb = BLOCK.min(steps + 1 - n0);
        far[..nb * d].iter_mut().for_each(|x| *x = 0.0);
        // far[r] = sum_{m=1}^{n0-1} omega[n0+r-m] W^m
        let mut m0 = 1;
        while m0 < n0 {
            let mc = PANEL.min(n0 - m0);
            for r in 0..nb {
                for c in 0..mc {
                    toeplitz[r * mc + c] = omega[n0 + r - (m0 + c)];
                }
            }
            unsafe {
                matrixmultiply::dgemm(
                    nb,
                    mc,
                    d,
                    1.0,
                    toeplitz.as_ptr(),
                    mc as isize,
                    1,
                    w.as_ptr().add(m0 * d),
                    d as isize,
                    1,
                    1.0,
                    far.as_mut_ptr(),
                    d as isize,
                    1,
                );
            }
            m0 += mc;
        }
        for r in 0..nb {
            let n = n0 + r;
            hist.copy_from_slice(&far[r * d..(r + 1) * d]);
            for m in n0..n {
                let c = omega[n - m];
                let wm = &w[m * d..(m + 1) * d];
                for (h, x) in hist.iter_mut().zip(wm) {
                    *h += c * x;
                }
            }
            buf.iter_mut().for_each(|x| *x = 0.0);
            rhs(n, &mut buf)?;
            for (b, a) in buf.iter_mut().zip(&av) {
                *b -= a;
            }
            disc.mass.matvec_add(-1.0, &hist, &mut buf);
            fac.solve_in_place(&mut buf)?;
            w[n * d..(n + 1) * d].copy_from_slice(&buf);
        }
        n0 += nb;
    }
    for n in 0..=steps {
        for (x, vi) in w[n * d..(n + 1) * d].iter_mut().zip(v) {
            *x += vi;
        }
    }
    Ok(Trajectory { mesh: disc.mesh, tau, label: label.to_string(), dof: d, data: w })
}
