//! Kepler and rotating Kepler dynamics on `T*(R^3 \ {0})`, plus the
//! regularized Hamiltonians on the cotangent bundle of the 3-sphere.
//!
//! Phase-space vectors are ordered `(q1, q2, q3, p1, p2, p3)`; sphere vectors
//! `(x0, x1, x2, x3, y0, y1, y2, y3)` with `x` as position and `y` as
//! momentum. Hamilton's equations read `q' = dH/dp`, `p' = -dH/dq`, and the
//! Poisson bracket is `{f, g} = f_q . g_p - f_p . g_q`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorConfig, OdeSystem};
use crate::regularization::SphereCotangent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vector3<f64>,
    pub p: Vector3<f64>,
}

impl PhasePoint {
    pub fn new(q: [f64; 3], p: [f64; 3]) -> Self {
        PhasePoint { q: Vector3::from(q), p: Vector3::from(p) }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.q[0], self.q[1], self.q[2], self.p[0], self.p[1], self.p[2]]
    }

    pub fn from_slice(z: &[f64]) -> Self {
        PhasePoint::new([z[0], z[1], z[2]], [z[3], z[4], z[5]])
    }

    fn ensure_off_collision(&self) -> Result<()> {
        if self.q.norm() == 0.0 {
            return Err(Error::Domain("q = 0 is the collision locus".into()));
        }
        Ok(())
    }
}

/// A point in either chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "kebab-case")]
pub enum ChartPoint {
    Phase(PhasePoint),
    Sphere(SphereCotangent),
}

impl ChartPoint {
    pub fn as_phase(&self) -> Option<&PhasePoint> {
        match self {
            ChartPoint::Phase(p) => Some(p),
            ChartPoint::Sphere(_) => None,
        }
    }

    pub fn as_sphere(&self) -> Option<&SphereCotangent> {
        match self {
            ChartPoint::Sphere(s) => Some(s),
            ChartPoint::Phase(_) => None,
        }
    }
}

/// Energy, angular momentum and Laplace-Runge-Lenz vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantTriple {
    pub energy: f64,
    pub angular_momentum: Vector3<f64>,
    pub lrl: Vector3<f64>,
}

pub fn invariants(x: &PhasePoint) -> Result<InvariantTriple> {
    x.ensure_off_collision()?;
    let r = x.q.norm();
    let l = x.q.cross(&x.p);
    Ok(InvariantTriple {
        energy: 0.5 * x.p.norm_squared() - 1.0 / r,
        angular_momentum: l,
        lrl: x.p.cross(&l) - x.q / r,
    })
}

/// Which Hamiltonian to evaluate or flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum HamiltonianId {
    /// `E = |p|^2/2 - 1/|q|`.
    KeplerE,
    /// `L3 = q1 p2 - q2 p1`; on the sphere chart `x1 y2 - x2 y1`.
    AngularL3,
    /// `H = E + L3`.
    RotatingH,
    /// `(r^2/2)|x|^2|y|^2` on the unit-sphere chart, with `r = sqrt(-2 E0)`.
    MoserKr { r: f64 },
    /// The regularized rotating Hamiltonian at Jacobi constant `c`.
    MoserKc { c: f64 },
}

impl HamiltonianId {
    pub fn moser_kr_for_energy(e0: f64) -> Result<Self> {
        if !(e0 < 0.0) {
            return Err(Error::Domain(format!("regularization needs negative energy, got {e0}")));
        }
        Ok(HamiltonianId::MoserKr { r: (-2.0 * e0).sqrt() })
    }
}

// ---------------------------------------------------------------------------
// Internal Hamiltonian systems over flat coordinate slices.

pub(crate) trait HamSys: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;
    /// `(dH/dq, dH/dp)`.
    fn gradient(&self, z: &[f64]) -> Vec<f64>;
    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        fd_hessian(self, z)
    }
    fn check(&self, _z: &[f64]) -> Result<()> {
        Ok(())
    }

    fn field(&self, z: &[f64]) -> Vec<f64> {
        let g = self.gradient(z);
        let n = self.dim() / 2;
        let mut f = vec![0.0; 2 * n];
        for i in 0..n {
            f[i] = g[n + i];
            f[n + i] = -g[i];
        }
        f
    }

    /// Derivative of the vector field, `J * Hess`.
    fn field_jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let h = self.hessian(z);
        let n = self.dim() / 2;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for c in 0..2 * n {
            for i in 0..n {
                j[(i, c)] = h[(n + i, c)];
                j[(n + i, c)] = -h[(i, c)];
            }
        }
        j
    }
}

fn fd_hessian<S: HamSys + ?Sized>(s: &S, z: &[f64]) -> DMatrix<f64> {
    let d = s.dim();
    let mut h = DMatrix::zeros(d, d);
    let mut zp = z.to_vec();
    for j in 0..d {
        let step = 1e-5 * (1.0 + z[j].abs());
        zp[j] = z[j] + step;
        let gp = s.gradient(&zp);
        zp[j] = z[j] - step;
        let gm = s.gradient(&zp);
        zp[j] = z[j] + 0.5 * step;
        let gp2 = s.gradient(&zp);
        zp[j] = z[j] - 0.5 * step;
        let gm2 = s.gradient(&zp);
        zp[j] = z[j];
        for i in 0..d {
            let coarse = (gp[i] - gm[i]) / (2.0 * step);
            let fine = (gp2[i] - gm2[i]) / step;
            h[(i, j)] = (4.0 * fine - coarse) / 3.0;
        }
    }
    (&h + h.transpose()) * 0.5
}

fn collision_guard(z: &[f64], floor: f64) -> Result<()> {
    let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
    if r < floor {
        return Err(Error::CollisionApproach { distance: r, floor });
    }
    Ok(())
}

pub(crate) struct KeplerSys {
    pub floor: f64,
}

impl HamSys for KeplerSys {
    fn dim(&self) -> usize {
        6
    }
    fn value(&self, z: &[f64]) -> f64 {
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        0.5 * (z[3] * z[3] + z[4] * z[4] + z[5] * z[5]) - 1.0 / r
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        let r3 = r * r * r;
        vec![z[0] / r3, z[1] / r3, z[2] / r3, z[3], z[4], z[5]]
    }
    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let r = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
        let r3 = r.powi(3);
        let r5 = r.powi(5);
        let mut h = DMatrix::zeros(6, 6);
        for i in 0..3 {
            for j in 0..3 {
                h[(i, j)] = if i == j { 1.0 / r3 } else { 0.0 } - 3.0 * z[i] * z[j] / r5;
            }
            h[(3 + i, 3 + i)] = 1.0;
        }
        h
    }
    fn check(&self, z: &[f64]) -> Result<()> {
        collision_guard(z, self.floor)
    }
}

pub(crate) struct L3Sys;

impl HamSys for L3Sys {
    fn dim(&self) -> usize {
        6
    }
    fn value(&self, z: &[f64]) -> f64 {
        z[0] * z[4] - z[1] * z[3]
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        vec![z[4], -z[3], 0.0, -z[1], z[0], 0.0]
    }
    fn hessian(&self, _z: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(6, 6);
        h[(0, 4)] = 1.0;
        h[(4, 0)] = 1.0;
        h[(1, 3)] = -1.0;
        h[(3, 1)] = -1.0;
        h
    }
}

pub(crate) struct RotatingSys {
    pub floor: f64,
}

impl HamSys for RotatingSys {
    fn dim(&self) -> usize {
        6
    }
    fn value(&self, z: &[f64]) -> f64 {
        KeplerSys { floor: self.floor }.value(z) + L3Sys.value(z)
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let a = KeplerSys { floor: self.floor }.gradient(z);
        let b = L3Sys.gradient(z);
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }
    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        KeplerSys { floor: self.floor }.hessian(z) + L3Sys.hessian(z)
    }
    fn check(&self, z: &[f64]) -> Result<()> {
        collision_guard(z, self.floor)
    }
}

/// `(r^2/2)|x|^2|y|^2`: agrees with `r^2|y|^2/2` on the unit sphere and its
/// flow preserves `|x|` and `x . y`.
pub(crate) struct MoserKrSys {
    pub r: f64,
}

impl HamSys for MoserKrSys {
    fn dim(&self) -> usize {
        8
    }
    fn value(&self, z: &[f64]) -> f64 {
        let x2: f64 = z[..4].iter().map(|v| v * v).sum();
        let y2: f64 = z[4..].iter().map(|v| v * v).sum();
        0.5 * self.r * self.r * x2 * y2
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let r2 = self.r * self.r;
        let x2: f64 = z[..4].iter().map(|v| v * v).sum();
        let y2: f64 = z[4..].iter().map(|v| v * v).sum();
        (0..8).map(|i| if i < 4 { r2 * y2 * z[i] } else { r2 * x2 * z[i] }).collect()
    }
    fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let r2 = self.r * self.r;
        let x2: f64 = z[..4].iter().map(|v| v * v).sum();
        let y2: f64 = z[4..].iter().map(|v| v * v).sum();
        let mut h = DMatrix::zeros(8, 8);
        for i in 0..4 {
            h[(i, i)] = r2 * y2;
            h[(4 + i, 4 + i)] = r2 * x2;
            for j in 0..4 {
                let m = 2.0 * r2 * z[i] * z[4 + j];
                h[(i, 4 + j)] = m;
                h[(4 + j, i)] = m;
            }
        }
        h
    }
}

/// `x1 y2 - x2 y1`, the angular momentum about the vertical axis in the sphere chart.
pub(crate) struct SphereL3Sys;

impl HamSys for SphereL3Sys {
    fn dim(&self) -> usize {
        8
    }
    fn value(&self, z: &[f64]) -> f64 {
        z[1] * z[6] - z[2] * z[5]
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        vec![0.0, z[6], -z[5], 0.0, 0.0, -z[2], z[1], 0.0]
    }
    fn hessian(&self, _z: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(8, 8);
        h[(1, 6)] = 1.0;
        h[(6, 1)] = 1.0;
        h[(2, 5)] = -1.0;
        h[(5, 2)] = -1.0;
        h
    }
}

/// `K_c = |y|^2 (r + (1 - x0)(x1 y2 - x2 y1)/r^2)^2 / 2` with `r = sqrt(-2c)`.
pub(crate) struct MoserKcSys {
    pub r: f64,
}

impl HamSys for MoserKcSys {
    fn dim(&self) -> usize {
        8
    }
    fn value(&self, z: &[f64]) -> f64 {
        let y2: f64 = z[4..].iter().map(|v| v * v).sum();
        let s = self.r + (1.0 - z[0]) * (z[1] * z[6] - z[2] * z[5]) / (self.r * self.r);
        0.5 * y2 * s * s
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let r2 = self.r * self.r;
        let y2: f64 = z[4..].iter().map(|v| v * v).sum();
        let f = z[1] * z[6] - z[2] * z[5];
        let w = 1.0 - z[0];
        let s = self.r + w * f / r2;
        // gradient of s
        let mut ds = [0.0; 8];
        ds[0] = -f / r2;
        ds[1] = w * z[6] / r2;
        ds[2] = -w * z[5] / r2;
        ds[5] = -w * z[2] / r2;
        ds[6] = w * z[1] / r2;
        let mut g: Vec<f64> = ds.iter().map(|d| y2 * s * d).collect();
        for i in 4..8 {
            g[i] += z[i] * s * s;
        }
        g
    }
}

pub(crate) fn ham_sys(h: &HamiltonianId, chart: &ChartPoint, cfg: &IntegratorConfig) -> Result<Box<dyn HamSys>> {
    let floor = cfg.collision_floor;
    match (h, chart) {
        (HamiltonianId::KeplerE, ChartPoint::Phase(_)) => Ok(Box::new(KeplerSys { floor })),
        (HamiltonianId::AngularL3, ChartPoint::Phase(_)) => Ok(Box::new(L3Sys)),
        (HamiltonianId::AngularL3, ChartPoint::Sphere(_)) => Ok(Box::new(SphereL3Sys)),
        (HamiltonianId::RotatingH, ChartPoint::Phase(_)) => Ok(Box::new(RotatingSys { floor })),
        (HamiltonianId::MoserKr { r }, ChartPoint::Sphere(_)) => {
            if !(*r > 0.0) {
                return Err(Error::Domain(format!("K_r needs r > 0, got {r}")));
            }
            Ok(Box::new(MoserKrSys { r: *r }))
        }
        (HamiltonianId::MoserKc { c }, ChartPoint::Sphere(_)) => {
            if !(*c < 0.0) {
                return Err(Error::Domain(format!("K_c needs c < 0, got {c}")));
            }
            Ok(Box::new(MoserKcSys { r: (-2.0 * c).sqrt() }))
        }
        (h, ChartPoint::Phase(_)) => Err(Error::ChartMismatch(format!("{h:?} lives on the sphere chart"))),
        (h, ChartPoint::Sphere(_)) => Err(Error::ChartMismatch(format!("{h:?} lives on the phase-space chart"))),
    }
}

/// Flat coordinates of a chart point. Sphere points are first moved to the
/// unit-sphere chart.
pub(crate) fn chart_coords(x: &ChartPoint) -> Result<Vec<f64>> {
    match x {
        ChartPoint::Phase(p) => {
            p.ensure_off_collision()?;
            Ok(p.to_vec())
        }
        ChartPoint::Sphere(s) => Ok(s.to_unit().to_vec()),
    }
}

fn rebuild(template: &ChartPoint, z: &[f64]) -> ChartPoint {
    match template {
        ChartPoint::Phase(_) => ChartPoint::Phase(PhasePoint::from_slice(z)),
        ChartPoint::Sphere(_) => ChartPoint::Sphere(SphereCotangent::from_slice(1.0, z)),
    }
}

pub fn hamiltonian_value(h: &HamiltonianId, x: &ChartPoint) -> Result<f64> {
    let sys = ham_sys(h, x, &IntegratorConfig::default())?;
    Ok(sys.value(&chart_coords(x)?))
}

/// Symplectic gradient at `x`, a 6- or 8-vector depending on the chart.
pub fn vector_field(h: &HamiltonianId, x: &ChartPoint) -> Result<DVector<f64>> {
    let sys = ham_sys(h, x, &IntegratorConfig::default())?;
    Ok(DVector::from_vec(sys.field(&chart_coords(x)?)))
}

pub(crate) struct FlowOde<'a> {
    pub sys: &'a dyn HamSys,
}

impl OdeSystem for FlowOde<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        dy.copy_from_slice(&self.sys.field(y));
    }
    fn check(&self, y: &[f64]) -> Result<()> {
        self.sys.check(y)
    }
}

/// State plus column-major fundamental matrix.
pub(crate) struct VariationalOde<'a> {
    pub sys: &'a dyn HamSys,
}

impl OdeSystem for VariationalOde<'_> {
    fn dim(&self) -> usize {
        let d = self.sys.dim();
        d + d * d
    }
    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let d = self.sys.dim();
        let (state, mat) = y.split_at(d);
        dy[..d].copy_from_slice(&self.sys.field(state));
        let j = self.sys.field_jacobian(state);
        let m = DMatrix::from_column_slice(d, d, mat);
        let prod = j * m;
        dy[d..].copy_from_slice(prod.as_slice());
    }
    fn check(&self, y: &[f64]) -> Result<()> {
        self.sys.check(&y[..self.sys.dim()])
    }
}

pub(crate) fn variational_initial(z: &[f64]) -> Vec<f64> {
    let d = z.len();
    let mut y = z.to_vec();
    y.extend_from_slice(DMatrix::<f64>::identity(d, d).as_slice());
    y
}

pub(crate) fn split_variational(y: &[f64], d: usize) -> (Vec<f64>, DMatrix<f64>) {
    (y[..d].to_vec(), DMatrix::from_column_slice(d, d, &y[d..]))
}

/// Time-`t` map of the Hamiltonian flow. Sphere inputs are moved to the
/// unit-sphere chart and the result is returned there.
pub fn flow(h: &HamiltonianId, x: &ChartPoint, t: f64, cfg: &IntegratorConfig) -> Result<ChartPoint> {
    let sys = ham_sys(h, x, cfg)?;
    let z = chart_coords(x)?;
    let out = integrate(&FlowOde { sys: sys.as_ref() }, &z, t, cfg)?;
    Ok(rebuild(x, &out))
}

/// Flow together with its linearization in chart coordinates.
pub fn variational_flow(h: &HamiltonianId, x: &ChartPoint, t: f64, cfg: &IntegratorConfig) -> Result<(ChartPoint, DMatrix<f64>)> {
    let sys = ham_sys(h, x, cfg)?;
    let z = chart_coords(x)?;
    let out = integrate(&VariationalOde { sys: sys.as_ref() }, &variational_initial(&z), t, cfg)?;
    let (state, m) = split_variational(&out, z.len());
    Ok((rebuild(x, &state), m))
}

// ---------------------------------------------------------------------------
// Observables and Poisson brackets.

/// Scalar observables on phase space with analytic gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "component", rename_all = "kebab-case")]
pub enum Observable {
    Energy,
    AngularMomentum(usize),
    Lrl(usize),
    RotatingH,
}

impl Observable {
    pub fn value(&self, x: &PhasePoint) -> f64 {
        let r = x.q.norm();
        match *self {
            Observable::Energy => 0.5 * x.p.norm_squared() - 1.0 / r,
            Observable::AngularMomentum(i) => x.q.cross(&x.p)[i],
            Observable::Lrl(i) => {
                let l = x.q.cross(&x.p);
                (x.p.cross(&l) - x.q / r)[i]
            }
            Observable::RotatingH => 0.5 * x.p.norm_squared() - 1.0 / r + x.q[0] * x.p[1] - x.q[1] * x.p[0],
        }
    }

    /// `(df/dq, df/dp)`.
    pub fn gradient(&self, x: &PhasePoint) -> (Vector3<f64>, Vector3<f64>) {
        let q = x.q;
        let p = x.p;
        let r = q.norm();
        match *self {
            Observable::Energy => (q / r.powi(3), p),
            Observable::AngularMomentum(i) => {
                // L_i = e_i . (q x p): d/dq = p x e_i, d/dp = e_i x q
                let e = Vector3::ith(i, 1.0);
                (p.cross(&e), e.cross(&q))
            }
            Observable::Lrl(i) => {
                // A = q|p|^2 - p (q.p) - q/r
                let qp = q.dot(&p);
                let p2 = p.norm_squared();
                let mut dq = Vector3::zeros();
                let mut dp = Vector3::zeros();
                for j in 0..3 {
                    let d = if i == j { 1.0 } else { 0.0 };
                    dq[j] = d * p2 - p[i] * p[j] - (d / r - q[i] * q[j] / r.powi(3));
                    dp[j] = 2.0 * q[i] * p[j] - d * qp - p[i] * q[j];
                }
                (dq, dp)
            }
            Observable::RotatingH => {
                let (eq, ep) = Observable::Energy.gradient(x);
                (eq + Vector3::new(p[1], -p[0], 0.0), ep + Vector3::new(-q[1], q[0], 0.0))
            }
        }
    }
}

fn fd_gradient(f: &dyn Fn(&PhasePoint) -> f64, x: &PhasePoint, h: f64) -> (Vector3<f64>, Vector3<f64>) {
    let base = x.to_vec();
    let mut g = [0.0; 6];
    let central = |i: usize, step: f64| {
        let mut zp = base.clone();
        let mut zm = base.clone();
        zp[i] += step;
        zm[i] -= step;
        (f(&PhasePoint::from_slice(&zp)) - f(&PhasePoint::from_slice(&zm))) / (2.0 * step)
    };
    for (i, gi) in g.iter_mut().enumerate() {
        let coarse = central(i, h);
        let fine = central(i, 0.5 * h);
        *gi = (4.0 * fine - coarse) / 3.0;
    }
    (Vector3::new(g[0], g[1], g[2]), Vector3::new(g[3], g[4], g[5]))
}

/// Poisson bracket from analytic gradients.
pub fn poisson_bracket_analytic(f: &Observable, g: &Observable, x: &PhasePoint) -> f64 {
    let (fq, fp) = f.gradient(x);
    let (gq, gp) = g.gradient(x);
    fq.dot(&gp) - fp.dot(&gq)
}

/// Poisson bracket of arbitrary functions by central differences with step
/// `h` and one Richardson refinement.
pub fn poisson_bracket_fd(f: &dyn Fn(&PhasePoint) -> f64, g: &dyn Fn(&PhasePoint) -> f64, x: &PhasePoint, h: f64) -> f64 {
    let (fq, fp) = fd_gradient(f, x, h);
    let (gq, gp) = fd_gradient(g, x, h);
    fq.dot(&gp) - fp.dot(&gq)
}

/// Poisson bracket of two observables. With `Some(h)` the gradients come from
/// finite differences, otherwise from the closed forms.
pub fn poisson_bracket(f: &Observable, g: &Observable, x: &PhasePoint, h: Option<f64>) -> Result<f64> {
    x.ensure_off_collision()?;
    Ok(match h {
        None => poisson_bracket_analytic(f, g, x),
        Some(h) => {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!("difference step must be positive, got {h}")));
            }
            poisson_bracket_fd(&|y| f.value(y), &|y| g.value(y), x, h)
        }
    })
}

// ---------------------------------------------------------------------------
// Conics and periods.

/// In-plane reference direction: the projection of `e1` onto the orbital
/// plane, or of `e2` when `L` is parallel to `e1`.
pub fn plane_reference(l: &Vector3<f64>) -> Vector3<f64> {
    let n = l.normalize();
    for e in [Vector3::x(), Vector3::y()] {
        let v = e - n * n.dot(&e);
        if v.norm() > 1e-8 {
            return v.normalize();
        }
    }
    unreachable!("e1 and e2 cannot both be parallel to a unit vector")
}

/// Angle of `v` inside the orbital plane, measured from [`plane_reference`]
/// counterclockwise about `L`.
pub fn plane_angle(l: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    let n = l.normalize();
    let e1 = plane_reference(l);
    let e2 = n.cross(&e1);
    v.dot(&e2).atan2(v.dot(&e1))
}

/// Argument of perigee `g`; zero for circular orbits.
pub fn argument_of_perigee(inv: &InvariantTriple) -> f64 {
    if inv.lrl.norm() < 1e-14 {
        0.0
    } else {
        plane_angle(&inv.angular_momentum, &inv.lrl)
    }
}

/// Radius of the Kepler conic at in-plane angle `theta`:
/// `|L|^2 / (1 + |A| cos(theta - g))`.
pub fn conic_trace(inv: &InvariantTriple, theta: f64) -> Result<f64> {
    let l2 = inv.angular_momentum.norm_squared();
    if l2 == 0.0 {
        return Err(Error::Domain("collision orbits (L = 0) have no conic trace".into()));
    }
    let g = argument_of_perigee(inv);
    let denom = 1.0 + inv.lrl.norm() * (theta - g).cos();
    if !(denom > 0.0) {
        return Err(Error::Domain(format!("angle {theta} is outside the conic's range")));
    }
    Ok(l2 / denom)
}

/// Period of a bounded Kepler orbit, `2 pi / (-2E)^{3/2}`.
pub fn kepler_period(energy: f64) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(Error::Domain(format!("Kepler period needs E < 0, got {energy}")));
    }
    Ok(2.0 * PI / (-2.0 * energy).powf(1.5))
}

/// First return time of the flow through the hyperplane orthogonal to the
/// vector field at `x`, searched on `(0, t_max]`.
pub fn first_return_time(h: &HamiltonianId, x: &PhasePoint, cfg: &IntegratorConfig, t_max: f64) -> Result<f64> {
    let chart = ChartPoint::Phase(*x);
    let sys = ham_sys(h, &chart, cfg)?;
    let z0 = chart_coords(&chart)?;
    let f0 = sys.field(&z0);
    let fnorm = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if fnorm == 0.0 {
        return Err(Error::Domain("equilibrium point has no return time".into()));
    }
    let scale = z0.iter().map(|v| v * v).sum::<f64>().sqrt() + 1.0;
    let section = |z: &[f64]| z.iter().zip(&z0).zip(&f0).map(|((a, b), f)| (a - b) * f).sum::<f64>();
    let distance = |z: &[f64]| z.iter().zip(&z0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let ode = FlowOde { sys: sys.as_ref() };
    let samples = 20_000usize;
    let dt = t_max / samples as f64;
    let mut z = z0.clone();
    let mut s_prev = 0.0;
    for i in 1..=samples {
        let z_next = integrate(&ode, &z, dt, cfg)?;
        let s = section(&z_next);
        if i > 1 && s_prev < 0.0 && s >= 0.0 && distance(&z_next) < 0.1 * scale {
            // bisection on [t_{i-1}, t_i]
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let zm = integrate(&ode, &z, mid, cfg)?;
                if section(&zm) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 * t_max {
                    break;
                }
            }
            return Ok((i - 1) as f64 * dt + 0.5 * (lo + hi));
        }
        s_prev = s;
        z = z_next;
    }
    Err(Error::Domain(format!("no return within t_max = {t_max}")))
}

// ---------------------------------------------------------------------------
// Rotating Hamiltonian in cylindrical coordinates (r, theta, z, p_r, p_theta, p_z).

/// `H = (p_r^2 + p_theta^2/r^2 + p_z^2)/2 - 1/sqrt(r^2 + z^2) + p_theta`.
pub(crate) struct CylindricalRotatingSys;

impl HamSys for CylindricalRotatingSys {
    fn dim(&self) -> usize {
        6
    }
    fn value(&self, s: &[f64]) -> f64 {
        let (r, z, pr, pt, pz) = (s[0], s[2], s[3], s[4], s[5]);
        0.5 * (pr * pr + pt * pt / (r * r) + pz * pz) - 1.0 / (r * r + z * z).sqrt() + pt
    }
    fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let (r, z, pr, pt, pz) = (s[0], s[2], s[3], s[4], s[5]);
        let big_r3 = (r * r + z * z).powf(1.5);
        vec![-pt * pt / r.powi(3) + r / big_r3, 0.0, z / big_r3, pr, pt / (r * r) + 1.0, pz]
    }
    fn hessian(&self, s: &[f64]) -> DMatrix<f64> {
        let (r, z, pt) = (s[0], s[2], s[4]);
        let rr2 = r * r + z * z;
        let r3 = rr2.powf(1.5);
        let r5 = rr2.powf(2.5);
        let mut h = DMatrix::zeros(6, 6);
        h[(0, 0)] = 3.0 * pt * pt / r.powi(4) + 1.0 / r3 - 3.0 * r * r / r5;
        h[(0, 2)] = -3.0 * r * z / r5;
        h[(2, 0)] = h[(0, 2)];
        h[(0, 4)] = -2.0 * pt / r.powi(3);
        h[(4, 0)] = h[(0, 4)];
        h[(2, 2)] = 1.0 / r3 - 3.0 * z * z / r5;
        h[(3, 3)] = 1.0;
        h[(4, 4)] = 1.0 / (r * r);
        h[(5, 5)] = 1.0;
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_state() -> PhasePoint {
        PhasePoint::new([0.9, -0.2, 0.3], [0.1, 0.95, -0.2])
    }

    #[test]
    fn circular_orbit_invariants() {
        let inv = invariants(&PhasePoint::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])).unwrap();
        assert_relative_eq!(inv.energy, -0.5);
        assert_relative_eq!(inv.angular_momentum, Vector3::new(0.0, 0.0, 1.0));
        assert!(inv.lrl.norm() < 1e-15);
    }

    #[test]
    fn collision_point_is_rejected() {
        assert!(invariants(&PhasePoint::new([0.0; 3], [1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn analytic_hessians_match_differences() {
        let z = sample_state().to_vec();
        let systems: Vec<Box<dyn HamSys>> = vec![Box::new(KeplerSys { floor: 0.0 }), Box::new(L3Sys), Box::new(RotatingSys { floor: 0.0 })];
        for s in &systems {
            let fd = fd_hessian(s.as_ref(), &z);
            assert!((s.hessian(&z) - fd).amax() < 1e-7);
        }
        let w = [0.3, 0.5, -0.4, 0.7, 0.2, -0.1, 0.6, 0.3];
        let kr = MoserKrSys { r: 1.7 };
        assert!((kr.hessian(&w) - fd_hessian(&kr, &w)).amax() < 1e-7);
        let cyl = CylindricalRotatingSys;
        let c = [0.8, 0.3, 0.2, 0.1, 0.7, -0.3];
        assert!((cyl.hessian(&c) - fd_hessian(&cyl, &c)).amax() < 1e-7);
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let x = sample_state();
        let obs = [Observable::Energy, Observable::AngularMomentum(0), Observable::AngularMomentum(2), Observable::Lrl(0), Observable::Lrl(1), Observable::Lrl(2), Observable::RotatingH];
        for o in obs {
            let (aq, ap) = o.gradient(&x);
            let (fq, fp) = fd_gradient(&|y| o.value(y), &x, 1e-4);
            assert!((aq - fq).amax() < 1e-9 && (ap - fp).amax() < 1e-9, "{o:?}");
        }
    }

    #[test]
    fn kc_gradient_matches_differences() {
        let s = MoserKcSys { r: 2.0 };
        let w = [0.3, 0.5, -0.4, 0.7, 0.2, -0.1, 0.6, 0.3];
        let g = s.gradient(&w);
        for i in 0..8 {
            let mut a = w;
            let mut b = w;
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fd = (s.value(&a) - s.value(&b)) / 2e-6;
            assert!((g[i] - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn bracket_of_lrl_with_l_example() {
        let x = PhasePoint::new([0.0, 0.0, 1.0], [0.5, 0.0, 0.0]);
        let b = poisson_bracket(&Observable::Lrl(0), &Observable::AngularMomentum(1), &x, None).unwrap();
        assert_relative_eq!(b, -0.75, epsilon = 1e-14);
        let fd = poisson_bracket(&Observable::Lrl(0), &Observable::AngularMomentum(1), &x, Some(1e-5)).unwrap();
        assert_relative_eq!(fd, -0.75, epsilon = 1e-9);
    }

    #[test]
    fn conic_trace_of_circle_is_constant() {
        let inv = invariants(&PhasePoint::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])).unwrap();
        for th in [0.0, 1.0, 2.5] {
            assert_relative_eq!(conic_trace(&inv, th).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn conic_trace_hits_perigee() {
        // q at perigee on the x-axis: r = |L|^2/(1 + |A|)
        let x = PhasePoint::new([0.5, 0.0, 0.0], [0.0, 1.6, 0.0]);
        let inv = invariants(&x).unwrap();
        assert_relative_eq!(argument_of_perigee(&inv), 0.0, epsilon = 1e-14);
        assert_relative_eq!(conic_trace(&inv, 0.0).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn period_of_unit_circle() {
        assert_relative_eq!(kepler_period(-0.5).unwrap(), 2.0 * PI);
        assert!(kepler_period(0.1).is_err());
    }

    #[test]
    fn chart_mismatch_is_reported() {
        let x = ChartPoint::Phase(sample_state());
        assert!(matches!(hamiltonian_value(&HamiltonianId::MoserKr { r: 1.0 }, &x), Err(Error::ChartMismatch(_))));
    }

    #[test]
    fn collision_floor_stops_radial_fall() {
        let x = ChartPoint::Phase(PhasePoint::new([1.0, 0.0, 0.0], [0.0; 3]));
        let err = flow(&HamiltonianId::KeplerE, &x, 2.0, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::CollisionApproach { .. }), "{err:?}");
    }
}
