//! Uniform P1 meshes, operator assembly, projections and SPD solvers.

use crate::linalg::{BandLdl, BandMatrix, TridiagLdl};
use crate::quadrature::gauss_legendre;
use crate::spectral_reference::{SeriesField, SpatialFactor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("mesh needs at least one cell per dimension")]
    EmptyMesh,
    #[error("polyline is not aligned with the mesh (n = {0} must be divisible by 4)")]
    Misaligned(usize),
    #[error("operator dimension {op} does not match vector length {len}")]
    Dimension { op: usize, len: usize },
    #[error("factorization broke down at row {0}")]
    Breakdown(usize),
    #[error("conjugate gradient stalled at relative residual {0:e}")]
    NoConvergence(f64),
    #[error("data not supported here: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Interval,
    UnitSquare,
}

/// Uniform mesh of (0,1) or (0,1)^2; squares are split along the lower-left to upper-right diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub kind: MeshKind,
    pub n: usize,
    pub h: f64,
}

impl Mesh {
    pub fn new(kind: MeshKind, n: usize) -> Result<Self, FemError> {
        if n == 0 {
            return Err(FemError::EmptyMesh);
        }
        Ok(Self { kind, n, h: 1.0 / n as f64 })
    }

    pub fn interval(n: usize) -> Self {
        Self::new(MeshKind::Interval, n).expect("positive cell count")
    }

    pub fn square(n: usize) -> Self {
        Self::new(MeshKind::UnitSquare, n).expect("positive cell count")
    }

    /// Number of interior (unknown) nodes.
    pub fn dof(&self) -> usize {
        match self.kind {
            MeshKind::Interval => self.n - 1,
            MeshKind::UnitSquare => (self.n - 1) * (self.n - 1),
        }
    }

    /// Coordinates of interior node `k`.
    pub fn node(&self, k: usize) -> (f64, f64) {
        match self.kind {
            MeshKind::Interval => ((k + 1) as f64 * self.h, 0.0),
            MeshKind::UnitSquare => {
                let m = self.n - 1;
                (((k % m) + 1) as f64 * self.h, ((k / m) + 1) as f64 * self.h)
            }
        }
    }

    /// Interior index of grid node (i, j), or None on the boundary.
    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.n;
        match self.kind {
            MeshKind::Interval => (i > 0 && i < n).then(|| i - 1),
            MeshKind::UnitSquare => (i > 0 && i < n && j > 0 && j < n).then(|| (j - 1) * (n - 1) + (i - 1)),
        }
    }

    /// Triangles as grid-index triples; empty on the interval.
    pub fn triangles(&self) -> Vec<[(usize, usize); 3]> {
        let mut t = Vec::new();
        if self.kind == MeshKind::UnitSquare {
            for j in 0..self.n {
                for i in 0..self.n {
                    t.push([(i, j), (i + 1, j), (i + 1, j + 1)]);
                    t.push([(i, j), (i + 1, j + 1), (i, j + 1)]);
                }
            }
        }
        t
    }
}

/// Symmetric sparse matrix in compressed-row form over interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub symmetric: bool,
}

impl SparseOperator {
    pub fn from_triplets(dim: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = Self { dim, row_ptr, cols, vals, symmetric: false };
        op.symmetric = op.check_symmetric(0.0);
        op
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        let dim = d.len();
        Self { dim, row_ptr: (0..=dim).collect(), cols: (0..dim).collect(), vals: d, symmetric: true }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![1.0; dim])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn check_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if (self.vals[k] - self.get(j, i)).abs() > tol * self.vals[k].abs().max(1.0) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| self.cols[self.row_ptr[i]..self.row_ptr[i + 1]].iter().all(|&j| j == i))
    }

    /// Largest |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut p = 0;
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                p = p.max(i.abs_diff(self.cols[k]));
            }
        }
        p
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.dim {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// y += c * (self x)
    pub fn matvec_add(&self, c: f64, x: &[f64], y: &mut [f64]) {
        for i in 0..self.dim {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] += c * s;
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.vals[k] * x[self.cols[k]];
            }
            s += x[i] * r;
        }
        s
    }

    /// a * self + b * other.
    pub fn combine(&self, a: f64, other: &SparseOperator, b: f64) -> SparseOperator {
        assert_eq!(self.dim, other.dim);
        let mut t = Vec::with_capacity(self.vals.len() + other.vals.len());
        for (op, c) in [(self, a), (other, b)] {
            for i in 0..op.dim {
                for k in op.row_ptr[i]..op.row_ptr[i + 1] {
                    t.push((i, op.cols[k], c * op.vals[k]));
                }
            }
        }
        let mut s = SparseOperator::from_triplets(self.dim, t);
        s.symmetric = self.symmetric && other.symmetric;
        s
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum()).collect()
    }

    pub fn to_band(&self) -> BandMatrix<f64> {
        let p = self.bandwidth();
        let mut b = BandMatrix::zeros(self.dim, p);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                if j <= i {
                    b.add(i, j, self.vals[k]);
                }
            }
        }
        b
    }
}

/// Coefficient vector over the interior nodes of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub mesh: Mesh,
    pub coeffs: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: Mesh, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), mesh.dof(), "coefficient length must equal the interior node count");
        Self { mesh, coeffs }
    }

    pub fn zeros(mesh: Mesh) -> Self {
        Self { mesh, coeffs: vec![0.0; mesh.dof()] }
    }
}

const CG_SWITCH: usize = 300 * 300;

/// Reusable SPD solver: diagonal, tridiagonal, banded LDL^T or conjugate gradients.
#[derive(Debug, Clone)]
pub enum SpdFactor {
    Diagonal(Vec<f64>),
    Tridiagonal(TridiagLdl),
    Banded(BandLdl<f64>),
    Cg(SparseOperator),
}

impl SpdFactor {
    pub fn new(op: &SparseOperator) -> Result<Self, FemError> {
        if op.is_diagonal() {
            let d: Vec<f64> = (0..op.dim).map(|i| op.get(i, i)).collect();
            if d.iter().any(|x| !(*x > 0.0)) {
                return Err(FemError::Breakdown(d.iter().position(|x| !(*x > 0.0)).unwrap()));
            }
            return Ok(Self::Diagonal(d));
        }
        let p = op.bandwidth();
        if p == 1 {
            let diag: Vec<f64> = (0..op.dim).map(|i| op.get(i, i)).collect();
            let off: Vec<f64> = (0..op.dim.saturating_sub(1)).map(|i| op.get(i + 1, i)).collect();
            return TridiagLdl::factor(&diag, &off).map(Self::Tridiagonal).map_err(|b| FemError::Breakdown(b.row));
        }
        if op.dim > CG_SWITCH {
            return Ok(Self::Cg(op.clone()));
        }
        BandLdl::factor(&op.to_band()).map(Self::Banded).map_err(|b| FemError::Breakdown(b.row))
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<(), FemError> {
        match self {
            Self::Diagonal(d) => {
                for (xi, di) in x.iter_mut().zip(d) {
                    *xi /= di;
                }
                Ok(())
            }
            Self::Tridiagonal(f) => {
                f.solve_in_place(x);
                Ok(())
            }
            Self::Banded(f) => {
                f.solve_in_place(x);
                Ok(())
            }
            Self::Cg(op) => {
                let b = x.to_vec();
                let sol = conjugate_gradient(op, &b, 1e-12, 10 * op.dim + 100)?;
                x.copy_from_slice(&sol);
                Ok(())
            }
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(op: &SparseOperator, b: &[f64], rtol: f64, max_iter: usize) -> Result<Vec<f64>, FemError> {
    let n = op.dim;
    let dinv: Vec<f64> = (0..n).map(|i| 1.0 / op.get(i, i)).collect();
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut res = 1.0;
    for _ in 0..max_iter {
        op.matvec(&p, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bn;
        if res <= rtol {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::NoConvergence(res))
}

/// Solves op x = rhs for SPD op.
pub fn solve_spd(op: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
    if op.dim != rhs.len() {
        return Err(FemError::Dimension { op: op.dim, len: rhs.len() });
    }
    SpdFactor::new(op)?.solve(rhs)
}

fn assemble_1d(mesh: &Mesh, diag: f64, off: f64) -> SparseOperator {
    let m = mesh.dof();
    let mut t = Vec::with_capacity(3 * m);
    for i in 0..m {
        t.push((i, i, diag));
        if i + 1 < m {
            t.push((i, i + 1, off));
            t.push((i + 1, i, off));
        }
    }
    SparseOperator::from_triplets(m, t)
}

fn grad_p1(p: [(f64, f64); 3]) -> ([(f64, f64); 3], f64) {
    let (x1, y1) = p[0];
    let (x2, y2) = p[1];
    let (x3, y3) = p[2];
    let det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
    let g = [
        ((y2 - y3) / det, (x3 - x2) / det),
        ((y3 - y1) / det, (x1 - x3) / det),
        ((y1 - y2) / det, (x2 - x1) / det),
    ];
    (g, 0.5 * det.abs())
}

fn assemble_2d(mesh: &Mesh, stiff: bool) -> SparseOperator {
    let h = mesh.h;
    let mut t = Vec::with_capacity(7 * mesh.dof());
    for tri in mesh.triangles() {
        let pts = tri.map(|(i, j)| (i as f64 * h, j as f64 * h));
        let (g, area) = grad_p1(pts);
        for a in 0..3 {
            let Some(ia) = mesh.interior_index(tri[a].0, tri[a].1) else { continue };
            for b in 0..3 {
                let Some(ib) = mesh.interior_index(tri[b].0, tri[b].1) else { continue };
                let v = if stiff {
                    area * (g[a].0 * g[b].0 + g[a].1 * g[b].1)
                } else if a == b {
                    area / 6.0
                } else {
                    area / 12.0
                };
                t.push((ia, ib, v));
            }
        }
    }
    SparseOperator::from_triplets(mesh.dof(), t)
}

/// P1 stiffness matrix with Dirichlet nodes eliminated.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseOperator {
    match mesh.kind {
        MeshKind::Interval => assemble_1d(mesh, 2.0 / mesh.h, -1.0 / mesh.h),
        MeshKind::UnitSquare => assemble_2d(mesh, true),
    }
}

/// Consistent P1 mass matrix with Dirichlet nodes eliminated.
pub fn assemble_mass(mesh: &Mesh) -> SparseOperator {
    match mesh.kind {
        MeshKind::Interval => assemble_1d(mesh, 2.0 * mesh.h / 3.0, mesh.h / 6.0),
        MeshKind::UnitSquare => assemble_2d(mesh, false),
    }
}

/// Lumped mass: row sums of the consistent mass on the diagonal.
pub fn assemble_lumped_mass(mesh: &Mesh) -> SparseOperator {
    let d = match mesh.kind {
        MeshKind::Interval => vec![mesh.h; mesh.dof()],
        MeshKind::UnitSquare => vec![mesh.h * mesh.h; mesh.dof()],
    };
    SparseOperator::diagonal(d)
}

/// Degree-5 exact rule on the reference triangle (barycentric, weights sum to 1).
const TRI7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059715871789769820459;
    const B1: f64 = 0.470142064105115089770;
    const A2: f64 = 0.797426985353087322398;
    const B2: f64 = 0.101286507323456338801;
    const W0: f64 = 0.225;
    const W1: f64 = 0.132394152788506181000;
    const W2: f64 = 0.125939180544827152595;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

fn integrate_against_hats<F: Fn(f64, f64) -> f64>(mesh: &Mesh, f: F) -> Vec<f64> {
    let mut b = vec![0.0; mesh.dof()];
    let h = mesh.h;
    match mesh.kind {
        MeshKind::Interval => {
            let (gx, gw) = gauss_legendre(8);
            for e in 0..mesh.n {
                let x0 = e as f64 * h;
                for (t, w) in gx.iter().zip(&gw) {
                    let s = 0.5 * (1.0 + t);
                    let x = x0 + s * h;
                    let fx = f(x, 0.0) * 0.5 * w * h;
                    if let Some(i) = mesh.interior_index(e, 0) {
                        b[i] += fx * (1.0 - s);
                    }
                    if let Some(i) = mesh.interior_index(e + 1, 0) {
                        b[i] += fx * s;
                    }
                }
            }
        }
        MeshKind::UnitSquare => {
            let area = 0.5 * h * h;
            for tri in mesh.triangles() {
                let pts = tri.map(|(i, j)| (i as f64 * h, j as f64 * h));
                let idx = tri.map(|(i, j)| mesh.interior_index(i, j));
                if idx.iter().all(|k| k.is_none()) {
                    continue;
                }
                for (lam, w) in TRI7.iter() {
                    let x = lam[0] * pts[0].0 + lam[1] * pts[1].0 + lam[2] * pts[2].0;
                    let y = lam[0] * pts[0].1 + lam[1] * pts[1].1 + lam[2] * pts[2].1;
                    let fx = f(x, y) * w * area;
                    for a in 0..3 {
                        if let Some(i) = idx[a] {
                            b[i] += fx * lam[a];
                        }
                    }
                }
            }
        }
    }
    b
}

/// Entries (w, psi_j) by elementwise quadrature.
pub fn load_vector(mesh: &Mesh, w: &SpatialFactor) -> Result<Vec<f64>, FemError> {
    match w {
        SpatialFactor::Nodal { values: c } => {
            if c.len() != mesh.dof() {
                return Err(FemError::Dimension { op: mesh.dof(), len: c.len() });
            }
            Ok(assemble_mass(mesh).apply(c))
        }
        _ => {
            w.check_domain(mesh.kind).map_err(FemError::Unsupported)?;
            Ok(integrate_against_hats(mesh, |x, y| w.eval(x, y)))
        }
    }
}

/// Axis-aligned closed polyline given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<(f64, f64)>,
}

impl Polyline {
    /// Boundary of [lo, hi]^2.
    pub fn square_loop(lo: f64, hi: f64) -> Self {
        Self { vertices: vec![(lo, lo), (hi, lo), (hi, hi), (lo, hi)] }
    }
}

/// Entries of the line functional int_Gamma psi_j ds for a mesh-aligned closed polyline.
pub fn line_functional(mesh: &Mesh, gamma: &Polyline) -> Result<Vec<f64>, FemError> {
    if mesh.kind != MeshKind::UnitSquare {
        return Err(FemError::Unsupported("line functional needs the square mesh".into()));
    }
    let n = mesh.n as f64;
    let snap = |v: f64| -> Result<usize, FemError> {
        let k = (v * n).round();
        if (v * n - k).abs() > 1e-9 || k <= 0.0 || k >= n {
            Err(FemError::Misaligned(mesh.n))
        } else {
            Ok(k as usize)
        }
    };
    let mut b = vec![0.0; mesh.dof()];
    let h = mesh.h;
    let nv = gamma.vertices.len();
    for s in 0..nv {
        let (x0, y0) = gamma.vertices[s];
        let (x1, y1) = gamma.vertices[(s + 1) % nv];
        let (i0, j0, i1, j1) = (snap(x0)?, snap(y0)?, snap(x1)?, snap(y1)?);
        if i0 != i1 && j0 != j1 {
            return Err(FemError::Misaligned(mesh.n));
        }
        let steps = i0.abs_diff(i1).max(j0.abs_diff(j1));
        for k in 0..=steps {
            let t = |a: usize, b: usize| if b >= a { a + k } else { a - k };
            let (i, j) = if i0 == i1 { (i0, t(j0, j1)) } else { (t(i0, i1), j0) };
            let w = if k == 0 || k == steps { 0.5 * h } else { h };
            if let Some(idx) = mesh.interior_index(i, j) {
                b[idx] += w;
            }
        }
    }
    Ok(b)
}

/// L2 projection: solves M c = load.
pub fn l2_project(mesh: &Mesh, load: &[f64]) -> Result<GridFunction, FemError> {
    let c = solve_spd(&assemble_mass(mesh), load)?;
    Ok(GridFunction::new(*mesh, c))
}

/// Lumped L2 projection: solves Mbar c = load.
pub fn lumped_project(mesh: &Mesh, load: &[f64]) -> Result<GridFunction, FemError> {
    let c = solve_spd(&assemble_lumped_mass(mesh), load)?;
    Ok(GridFunction::new(*mesh, c))
}

/// Ritz projection: solves A c = b with b_j = (-Laplacian v, psi_j).
pub fn ritz_project(mesh: &Mesh, v: &SpatialFactor) -> Result<GridFunction, FemError> {
    v.check_domain(mesh.kind).map_err(FemError::Unsupported)?;
    if matches!(v, SpatialFactor::Nodal { .. }) {
        return Err(FemError::Unsupported("Ritz projection needs a continuous function".into()));
    }
    let b = integrate_against_hats(mesh, |x, y| -v.laplacian(x, y));
    let c = solve_spd(&assemble_stiffness(mesh), &b)?;
    Ok(GridFunction::new(*mesh, c))
}

/// Nodal interpolant.
pub fn interpolate(mesh: &Mesh, v: &SpatialFactor) -> Result<GridFunction, FemError> {
    if let SpatialFactor::Nodal { values: c } = v {
        return Ok(GridFunction::new(*mesh, c.clone()));
    }
    v.check_domain(mesh.kind).map_err(FemError::Unsupported)?;
    let c = (0..mesh.dof()).map(|k| {
        let (x, y) = mesh.node(k);
        v.eval(x, y)
    });
    Ok(GridFunction::new(*mesh, c.collect()))
}

/// sqrt(c^T M c).
pub fn l2_norm(mesh: &Mesh, g: &GridFunction) -> f64 {
    assemble_mass(mesh).quad_form(&g.coeffs).max(0.0).sqrt()
}

/// Value of a P1 grid function at (x, y).
pub fn eval_grid_function(g: &GridFunction, x: f64, y: f64) -> f64 {
    let mesh = &g.mesh;
    let n = mesh.n;
    let val = |i: usize, j: usize| mesh.interior_index(i, j).map_or(0.0, |k| g.coeffs[k]);
    let fx = (x * n as f64).clamp(0.0, n as f64);
    let i = (fx.floor() as usize).min(n - 1);
    let s = fx - i as f64;
    match mesh.kind {
        MeshKind::Interval => (1.0 - s) * val(i, 0) + s * val(i + 1, 0),
        MeshKind::UnitSquare => {
            let fy = (y * n as f64).clamp(0.0, n as f64);
            let j = (fy.floor() as usize).min(n - 1);
            let t = fy - j as f64;
            if s >= t {
                (1.0 - s) * val(i, j) + (s - t) * val(i + 1, j) + t * val(i + 1, j + 1)
            } else {
                (1.0 - t) * val(i, j) + (t - s) * val(i, j + 1) + s * val(i + 1, j + 1)
            }
        }
    }
}

/// L2 distance between a grid function and a pointwise field by elementwise quadrature.
pub fn l2_error_quadrature<F: Fn(f64, f64) -> f64>(g: &GridFunction, exact: F) -> f64 {
    let mesh = &g.mesh;
    let h = mesh.h;
    let mut s = 0.0;
    match mesh.kind {
        MeshKind::Interval => {
            let (gx, gw) = gauss_legendre(8);
            for e in 0..mesh.n {
                for (t, w) in gx.iter().zip(&gw) {
                    let x = (e as f64 + 0.5 * (1.0 + t)) * h;
                    let d = eval_grid_function(g, x, 0.0) - exact(x, 0.0);
                    s += 0.5 * w * h * d * d;
                }
            }
        }
        MeshKind::UnitSquare => {
            let area = 0.5 * h * h;
            for tri in mesh.triangles() {
                let pts = tri.map(|(i, j)| (i as f64 * h, j as f64 * h));
                let vals = tri.map(|(i, j)| mesh.interior_index(i, j).map_or(0.0, |k| g.coeffs[k]));
                for (lam, w) in TRI7.iter() {
                    let x = lam[0] * pts[0].0 + lam[1] * pts[1].0 + lam[2] * pts[2].0;
                    let y = lam[0] * pts[0].1 + lam[1] * pts[1].1 + lam[2] * pts[2].1;
                    let gv = lam[0] * vals[0] + lam[1] * vals[1] + lam[2] * vals[2];
                    let d = gv - exact(x, y);
                    s += w * area * d * d;
                }
            }
        }
    }
    s.sqrt()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Moments (g, phi_mn) of a grid function against the L2-normalized sine modes, m < mx, n < my.
///
/// Hats on this mesh are three-direction box splines, so every moment is a closed form.
pub fn sine_moments(g: &GridFunction, mx: usize, my: usize) -> Vec<f64> {
    use std::f64::consts::{PI, SQRT_2};
    let mesh = &g.mesh;
    let n = mesh.n;
    let h = mesh.h;
    let period = 2 * n;
    match mesh.kind {
        MeshKind::Interval => {
            let s: Vec<f64> = (0..period)
                .map(|m| {
                    (1..n).map(|j| g.coeffs[j - 1] * ((m * j) as f64 * PI / n as f64).sin()).sum()
                })
                .collect();
            (1..=mx)
                .map(|m| {
                    let sc = sinc(m as f64 * PI * h / 2.0);
                    SQRT_2 * h * sc * sc * s[m % period]
                })
                .collect()
        }
        MeshKind::UnitSquare => {
            let d = n - 1;
            let mut cos_t = vec![0.0; period * d];
            let mut sin_t = vec![0.0; period * d];
            for m in 0..period {
                for i in 1..n {
                    let a = (m * i) as f64 * PI / n as f64;
                    cos_t[m * d + i - 1] = a.cos();
                    sin_t[m * d + i - 1] = a.sin();
                }
            }
            // Row-wise transforms in y, then in x.
            let mut uc = vec![0.0; d * period];
            let mut us = vec![0.0; d * period];
            for i in 0..d {
                for q in 0..period {
                    let (mut a, mut b) = (0.0, 0.0);
                    for j in 0..d {
                        let u = g.coeffs[j * d + i];
                        a += u * cos_t[q * d + j];
                        b += u * sin_t[q * d + j];
                    }
                    uc[i * period + q] = a;
                    us[i * period + q] = b;
                }
            }
            let mut cc = vec![0.0; period * period];
            let mut ss = vec![0.0; period * period];
            for p in 0..period {
                for q in 0..period {
                    let (mut a, mut b) = (0.0, 0.0);
                    for i in 0..d {
                        a += cos_t[p * d + i] * uc[i * period + q];
                        b += sin_t[p * d + i] * us[i * period + q];
                    }
                    cc[p * period + q] = a;
                    ss[p * period + q] = b;
                }
            }
            let psi = |k1: f64, k2: f64| h * h * sinc(h * k1 / 2.0) * sinc(h * k2 / 2.0) * sinc(h * (k1 + k2) / 2.0);
            let mut out = vec![0.0; mx * my];
            for m in 1..=mx {
                let a = m as f64 * PI;
                for nn in 1..=my {
                    let b = nn as f64 * PI;
                    let k = (m % period) * period + nn % period;
                    out[(m - 1) * my + nn - 1] = psi(a, -b) * (cc[k] + ss[k]) - psi(a, b) * (cc[k] - ss[k]);
                }
            }
            out
        }
    }
}

/// L2 distance between a grid function and a truncated eigenfunction series, evaluated by Parseval.
pub fn l2_error_vs_series(g: &GridFunction, exact: &SeriesField) -> f64 {
    let my = if g.mesh.kind == MeshKind::Interval { 1 } else { exact.my };
    let gm = sine_moments(g, exact.mx, my);
    let norm_g = assemble_mass(&g.mesh).quad_form(&g.coeffs);
    let cross: f64 = gm.iter().zip(&exact.coeffs).map(|(a, b)| a * b).sum();
    (norm_g - 2.0 * cross + exact.norm_sq()).max(0.0).sqrt()
}
