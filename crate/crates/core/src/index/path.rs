//! Paths of symplectic matrices on an interval `[0, T]`.
//!
//! Matrices act in a frame `(v1, w1, v2, w2, ...)` with `omega(v_i, w_i) = 1`,
//! so symplecticity reads `Psi^T Omega Psi = Omega` with `Omega` from
//! [`crate::math::omega_blocks`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Closed-form paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticKind {
    /// Linearized rotating flow along a planar circular orbit, `omega0 = +-1/sqrt(-2E)`.
    PlanarCircular { omega0: f64 },
    /// Linearized regularized Kepler flow along a collision orbit.
    CollisionKepler { r: f64 },
    /// Linearized `L3` flow at a point of the vertical axis.
    AngularMomentum,
}

impl AnalyticKind {
    pub fn dim(&self) -> usize {
        4
    }

    pub fn value(&self, t: f64) -> DMatrix<f64> {
        match *self {
            AnalyticKind::PlanarCircular { omega0: w } => {
                let a = t / w.powi(3);
                let (s, c) = a.sin_cos();
                DMatrix::from_row_slice(4, 4, &[
                    c, -s / w, 0.0, 0.0,
                    w * s, c, 0.0, 0.0,
                    0.0, 0.0, c, -s / w.powi(3),
                    0.0, 0.0, w.powi(3) * s, c,
                ])
            }
            AnalyticKind::CollisionKepler { r } => {
                let (s, c) = (r * t).sin_cos();
                DMatrix::from_row_slice(4, 4, &[
                    c, -s / r, 0.0, 0.0,
                    r * s, c, 0.0, 0.0,
                    0.0, 0.0, c, -s / r,
                    0.0, 0.0, r * s, c,
                ])
            }
            AnalyticKind::AngularMomentum => {
                let (s, c) = t.sin_cos();
                DMatrix::from_row_slice(4, 4, &[
                    c, 0.0, -s, 0.0,
                    0.0, c, 0.0, -s,
                    s, 0.0, c, 0.0,
                    0.0, s, 0.0, c,
                ])
            }
        }
    }

    pub fn derivative(&self, t: f64) -> DMatrix<f64> {
        match *self {
            AnalyticKind::PlanarCircular { omega0: w } => {
                let k = 1.0 / w.powi(3);
                let (s, c) = (t * k).sin_cos();
                DMatrix::from_row_slice(4, 4, &[
                    -s, -c / w, 0.0, 0.0,
                    w * c, -s, 0.0, 0.0,
                    0.0, 0.0, -s, -c / w.powi(3),
                    0.0, 0.0, w.powi(3) * c, -s,
                ]) * k
            }
            AnalyticKind::CollisionKepler { r } => {
                let (s, c) = (r * t).sin_cos();
                DMatrix::from_row_slice(4, 4, &[
                    -s, -c / r, 0.0, 0.0,
                    r * c, -s, 0.0, 0.0,
                    0.0, 0.0, -s, -c / r,
                    0.0, 0.0, r * c, -s,
                ]) * r
            }
            AnalyticKind::AngularMomentum => {
                let (s, c) = t.sin_cos();
                DMatrix::from_row_slice(4, 4, &[
                    -s, 0.0, -c, 0.0,
                    0.0, -s, 0.0, -c,
                    c, 0.0, -s, 0.0,
                    0.0, c, 0.0, -s,
                ])
            }
        }
    }

    /// Times in `[0, T]` where the path returns to the identity.
    pub fn identity_times(&self, duration: f64) -> Vec<f64> {
        let spacing = match *self {
            AnalyticKind::PlanarCircular { omega0 } => 2.0 * PI * omega0.abs().powi(3),
            AnalyticKind::CollisionKepler { r } => 2.0 * PI / r,
            AnalyticKind::AngularMomentum => 2.0 * PI,
        };
        let mut out = Vec::new();
        let mut n = 0u64;
        loop {
            let t = n as f64 * spacing;
            if t > duration * (1.0 + 1e-12) {
                break;
            }
            out.push(t.min(duration));
            n += 1;
        }
        out
    }
}

/// Reparametrization `w(t) = t + a T sin(2 pi t / T) / (2 pi)` with `|a| < 1`.
/// It is increasing and fixes both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Warp {
    pub amplitude: f64,
    pub duration: f64,
}

impl Warp {
    pub fn value(&self, t: f64) -> f64 {
        t + self.amplitude * self.duration * (2.0 * PI * t / self.duration).sin() / (2.0 * PI)
    }

    pub fn rate(&self, t: f64) -> f64 {
        1.0 + self.amplitude * (2.0 * PI * t / self.duration).cos()
    }
}

/// Evaluates a sampled path between samples.
pub type Refiner = Arc<dyn Fn(f64) -> Result<DMatrix<f64>> + Send + Sync>;

/// A path known on a grid, optionally with an evaluator for arbitrary times.
#[derive(Clone)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
    pub refiner: Option<Refiner>,
}

impl fmt::Debug for SampledPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledPath")
            .field("samples", &self.times.len())
            .field("refiner", &self.refiner.is_some())
            .finish()
    }
}

impl SampledPath {
    pub fn new(times: Vec<f64>, matrices: Vec<DMatrix<f64>>, refiner: Option<Refiner>) -> Result<Self> {
        if times.len() < 2 || times.len() != matrices.len() {
            return Err(Error::InvalidArgument("a sampled path needs at least two matching samples".into()));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sample times must start at 0 and increase".into()));
        }
        let d = matrices[0].nrows();
        if !d.is_multiple_of(2) || matrices.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::InvalidArgument("samples must be square matrices of one even size".into()));
        }
        Ok(SampledPath { times, matrices, refiner })
    }

    fn interpolate(&self, t: f64) -> DMatrix<f64> {
        let n = self.times.len();
        let i = match self.times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.matrices[i].clone(),
            Err(i) => i.clamp(1, n - 1),
        };
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let s = (t - t0) / (t1 - t0);
        &self.matrices[i - 1] * (1.0 - s) + &self.matrices[i] * s
    }
}

/// A path of symplectic matrices on `[0, duration]` starting at the identity.
#[derive(Debug, Clone)]
pub enum SymplecticPath {
    Analytic { kind: AnalyticKind, duration: f64 },
    Sampled(SampledPath),
    /// Pointwise product `A(t) B(t)`.
    Product(Box<SymplecticPath>, Box<SymplecticPath>),
    /// `inner(w(t))`.
    Warped { inner: Box<SymplecticPath>, warp: Warp },
}

impl SymplecticPath {
    pub fn analytic(kind: AnalyticKind, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidArgument(format!("path duration must be positive, got {duration}")));
        }
        match kind {
            AnalyticKind::PlanarCircular { omega0 } if omega0 == 0.0 || !omega0.is_finite() => {
                return Err(Error::Domain("omega0 must be finite and non-zero".into()))
            }
            AnalyticKind::CollisionKepler { r } if !(r > 0.0) => return Err(Error::Domain("r must be positive".into())),
            _ => {}
        }
        Ok(SymplecticPath::Analytic { kind, duration })
    }

    pub fn product(a: SymplecticPath, b: SymplecticPath) -> Result<Self> {
        if a.dim() != b.dim() || (a.duration() - b.duration()).abs() > 1e-12 * a.duration().max(1.0) {
            return Err(Error::InvalidArgument("product paths need equal dimension and interval".into()));
        }
        Ok(SymplecticPath::Product(Box::new(a), Box::new(b)))
    }

    pub fn warped(inner: SymplecticPath, amplitude: f64) -> Result<Self> {
        if !(amplitude.abs() < 1.0) {
            return Err(Error::InvalidArgument("warp amplitude must lie in (-1, 1)".into()));
        }
        let duration = inner.duration();
        Ok(SymplecticPath::Warped { inner: Box::new(inner), warp: Warp { amplitude, duration } })
    }

    pub fn dim(&self) -> usize {
        match self {
            SymplecticPath::Analytic { kind, .. } => kind.dim(),
            SymplecticPath::Sampled(s) => s.matrices[0].nrows(),
            SymplecticPath::Product(a, _) => a.dim(),
            SymplecticPath::Warped { inner, .. } => inner.dim(),
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            SymplecticPath::Analytic { duration, .. } => *duration,
            SymplecticPath::Sampled(s) => *s.times.last().unwrap(),
            SymplecticPath::Product(a, _) => a.duration(),
            SymplecticPath::Warped { inner, .. } => inner.duration(),
        }
    }

    pub fn value(&self, t: f64) -> Result<DMatrix<f64>> {
        Ok(match self {
            SymplecticPath::Analytic { kind, .. } => kind.value(t),
            SymplecticPath::Sampled(s) => match &s.refiner {
                Some(f) => f(t)?,
                None => s.interpolate(t),
            },
            SymplecticPath::Product(a, b) => a.value(t)? * b.value(t)?,
            SymplecticPath::Warped { inner, warp } => inner.value(warp.value(t))?,
        })
    }

    /// Time derivative; central differences with step `h` where no closed form exists.
    pub fn derivative(&self, t: f64, h: f64) -> Result<DMatrix<f64>> {
        Ok(match self {
            SymplecticPath::Analytic { kind, .. } => kind.derivative(t),
            SymplecticPath::Sampled(_) => (self.value(t + h)? - self.value(t - h)?) / (2.0 * h),
            SymplecticPath::Product(a, b) => a.derivative(t, h)? * b.value(t)? + a.value(t)? * b.derivative(t, h)?,
            SymplecticPath::Warped { inner, warp } => inner.derivative(warp.value(t), h)? * warp.rate(t),
        })
    }

    /// Exact crossing times when the path is given in closed form.
    pub fn exact_crossings(&self) -> Option<Vec<f64>> {
        match self {
            SymplecticPath::Analytic { kind, duration } => Some(kind.identity_times(*duration)),
            _ => None,
        }
    }

    /// Grid used by the crossing scan. Sampled paths use their own samples.
    pub fn scan_grid(&self, samples: usize) -> Vec<f64> {
        match self {
            SymplecticPath::Sampled(s) => s.times.clone(),
            _ => {
                let t = self.duration();
                (0..=samples).map(|i| t * i as f64 / samples as f64).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::symplectic_defect;

    fn kinds() -> Vec<AnalyticKind> {
        vec![
            AnalyticKind::PlanarCircular { omega0: 0.44 },
            AnalyticKind::PlanarCircular { omega0: -0.57 },
            AnalyticKind::CollisionKepler { r: 2.05 },
            AnalyticKind::AngularMomentum,
        ]
    }

    #[test]
    fn analytic_paths_are_symplectic_and_start_at_identity() {
        for k in kinds() {
            assert!((k.value(0.0) - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
            for t in [0.3, 1.7, 4.0] {
                assert!(symplectic_defect(&k.value(t)) < 1e-12, "{k:?}");
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        for k in kinds() {
            for t in [0.2, 1.1] {
                let h = 1e-6;
                let fd = (k.value(t + h) - k.value(t - h)) / (2.0 * h);
                assert!((k.derivative(t) - fd).amax() < 1e-7, "{k:?}");
            }
        }
    }

    #[test]
    fn identity_times_are_returns() {
        for k in kinds() {
            for t in k.identity_times(20.0) {
                assert!((k.value(t) - DMatrix::<f64>::identity(4, 4)).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn warp_fixes_endpoints_and_increases() {
        let w = Warp { amplitude: 0.6, duration: 3.0 };
        assert_eq!(w.value(0.0), 0.0);
        assert!((w.value(3.0) - 3.0).abs() < 1e-15);
        assert!((0..100).all(|i| w.rate(0.03 * i as f64) > 0.0));
    }

    #[test]
    fn sampled_path_validation() {
        let m = DMatrix::<f64>::identity(2, 2);
        assert!(SampledPath::new(vec![0.0, 1.0], vec![m.clone(), m.clone()], None).is_ok());
        assert!(SampledPath::new(vec![0.5, 1.0], vec![m.clone(), m.clone()], None).is_err());
        assert!(SampledPath::new(vec![0.0], vec![m], None).is_err());
    }
}
