//! Moser regularization: stereographic projection between `T*S^3_r` and
//! `T*R^3`, the switch map, sphere rescaling and the collision orbits.
//!
//! Regularized Hamiltonians are evaluated on the unit-sphere chart. A point on
//! the sphere of radius `r` moves there through `(x, y) -> (x/r, r y)`.

use nalgebra::{Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::dynamics::PhasePoint;
use crate::error::{Error, Result};

/// A covector `y` at a point `x` of the 3-sphere of radius `radius` in `R^4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereCotangent {
    pub x: Vector4<f64>,
    pub y: Vector4<f64>,
    pub radius: f64,
}

impl SphereCotangent {
    pub fn new(radius: f64, x: [f64; 4], y: [f64; 4]) -> Self {
        SphereCotangent { x: Vector4::from(x), y: Vector4::from(y), radius }
    }

    pub fn from_slice(radius: f64, z: &[f64]) -> Self {
        SphereCotangent::new(radius, [z[0], z[1], z[2], z[3]], [z[4], z[5], z[6], z[7]])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.x.iter().chain(self.y.iter()).copied().collect()
    }

    /// Largest of `||x| - radius|` and `|x . y|`.
    pub fn constraint_defect(&self) -> f64 {
        (self.x.norm() - self.radius).abs().max(self.x.dot(&self.y).abs())
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::Domain(format!("sphere radius must be positive, got {}", self.radius)));
        }
        let d = self.constraint_defect();
        if d > tol * self.radius.max(1.0) {
            return Err(Error::Domain(format!("point is off T*S^3 (defect {d:e})")));
        }
        Ok(())
    }

    /// Same point in the unit-sphere chart, `(x/r, r y)`.
    pub fn to_unit(&self) -> SphereCotangent {
        scaling_map_inverse(self)
    }
}

/// `sc_{1,r}: (x, y) -> (r x, y / r)` from the unit sphere to radius `r`.
pub fn scaling_map(unit: &SphereCotangent, r: f64) -> Result<SphereCotangent> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("scaling radius must be positive, got {r}")));
    }
    let u = unit.to_unit();
    Ok(SphereCotangent { x: u.x * r, y: u.y / r, radius: r })
}

/// Inverse of [`scaling_map`]: back to the unit sphere.
pub fn scaling_map_inverse(sc: &SphereCotangent) -> SphereCotangent {
    let r = sc.radius;
    SphereCotangent { x: sc.x / r, y: sc.y * r, radius: 1.0 }
}

/// Stereographic projection from the north pole `(r, 0, 0, 0)`:
/// `(x, y) -> (r x_vec / (r - x0), ((r - x0)/r) y_vec + (y0/r) x_vec)`.
///
/// The first component is the Kepler momentum `p`, the second is `-q`.
pub fn stereo_project(sc: &SphereCotangent) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let r = sc.radius;
    let x0 = sc.x[0];
    let gap = r - x0;
    if !(gap.abs() > 1e-14 * r) {
        return Err(Error::Domain("the north pole has no stereographic image".into()));
    }
    let xv = sc.x.fixed_rows::<3>(1).into_owned();
    let yv = sc.y.fixed_rows::<3>(1).into_owned();
    let a = xv * (r / gap);
    let b = yv * (gap / r) + xv * (sc.y[0] / r);
    Ok((a, b))
}

/// Inverse stereographic projection `(p, q) -> (x, y)` onto `T*S^3_r`.
pub fn stereo_lift(r: f64, p: &Vector3<f64>, q: &Vector3<f64>) -> Result<SphereCotangent> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("sphere radius must be positive, got {r}")));
    }
    let p2 = p.norm_squared();
    let r2 = r * r;
    let s = p2 + r2;
    let pq = p.dot(q);
    let x0 = r * (p2 - r2) / s;
    let xv = p * (2.0 * r2 / s);
    let y0 = pq / r;
    let yv = q * (s / (2.0 * r2)) - p * (pq / r2);
    Ok(SphereCotangent {
        x: Vector4::new(x0, xv[0], xv[1], xv[2]),
        y: Vector4::new(y0, yv[0], yv[1], yv[2]),
        radius: r,
    })
}

/// Relative residuals of the four identities satisfied by the lift of
/// `(p, q)` to the sphere of radius `r`:
/// `r - x0 = 2r^3/(|p|^2 + r^2)`, `|p|^2 = 2r^3/(r - x0) - r^2`,
/// `|y|^2 = ((|p|^2 + r^2)^2 / 4r^4)|q|^2` and `|q| = ((r - x0)/r)|y|`.
pub fn lift_relation_residuals(r: f64, p: &Vector3<f64>, q: &Vector3<f64>) -> Result<[f64; 4]> {
    let sc = stereo_lift(r, p, q)?;
    let s = p.norm_squared() + r * r;
    let gap = r - sc.x[0];
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    Ok([
        rel(gap, 2.0 * r.powi(3) / s),
        rel(p.norm_squared(), 2.0 * r.powi(3) / gap - r * r),
        rel(sc.y.norm_squared(), s * s / (4.0 * r.powi(4)) * q.norm_squared()),
        rel(q.norm(), gap / r * sc.y.norm()),
    ])
}

/// `(q, p) -> (p, -q)`.
pub fn switch_map(x: &PhasePoint) -> PhasePoint {
    PhasePoint { q: x.p, p: -x.q }
}

pub fn switch_map_inverse(x: &PhasePoint) -> PhasePoint {
    PhasePoint { q: -x.p, p: x.q }
}

/// Regularizing chart at energy `e0 < 0`: switch, lift to the sphere of
/// radius `sqrt(-2 e0)`, then rescale to the unit sphere.
pub fn regularize(x: &PhasePoint, e0: f64) -> Result<SphereCotangent> {
    if !(e0 < 0.0) {
        return Err(Error::Domain(format!("regularization needs e0 < 0, got {e0}")));
    }
    let r = (-2.0 * e0).sqrt();
    let s = switch_map(x);
    Ok(stereo_lift(r, &s.q, &s.p)?.to_unit())
}

/// Inverse of [`regularize`] for a unit-chart point at energy `e0`.
pub fn unregularize(unit: &SphereCotangent, e0: f64) -> Result<PhasePoint> {
    if !(e0 < 0.0) {
        return Err(Error::Domain(format!("regularization needs e0 < 0, got {e0}")));
    }
    let on_r = scaling_map(unit, (-2.0 * e0).sqrt())?;
    let (a, b) = stereo_project(&on_r)?;
    Ok(switch_map_inverse(&PhasePoint { q: a, p: b }))
}

/// Regularized Kepler Hamiltonian at energy `e0`, for a point on the sphere of
/// radius `r`: `|y|^2 (r^2 + (r - x0)(-r/2 - e0/r))^2 / 2`.
///
/// Pulled back to `T*R^3` this is `(((|p|^2 - 2 e0)/2)|q|)^2 / 2`; when
/// `r^2 = -2 e0` it reduces to `r^4 |y|^2 / 2`.
pub fn regularized_kepler(e0: f64, sc: &SphereCotangent) -> f64 {
    let r = sc.radius;
    let f = r * r + (r - sc.x[0]) * (-0.5 * r - e0 / r);
    0.5 * sc.y.norm_squared() * f * f
}

/// `(((|p|^2 - 2 e0)/2)|q|)^2 / 2` on phase space.
pub fn flat_regularized_kepler(e0: f64, x: &PhasePoint) -> f64 {
    let v = 0.5 * (x.p.norm_squared() - 2.0 * e0) * x.q.norm();
    0.5 * v * v
}

/// Closed-form collision orbit of `K_r` on the unit-sphere chart:
/// `x = (-cos rt, 0, 0, s sin rt)`, `y = (sin(rt)/r, 0, 0, s cos(rt)/r)`
/// with `s = sign`. Its flat image is `q = (0, 0, -s (1 + cos rt)/r^2)`, so
/// `s = -1` is the orbit on the positive `q3` half-axis.
pub fn collision_orbit(r: f64, sign: f64, t: f64) -> Result<SphereCotangent> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("collision orbit needs r > 0, got {r}")));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    let (s, c) = (r * t).sin_cos();
    Ok(SphereCotangent::new(1.0, [-c, 0.0, 0.0, sign * s], [s / r, 0.0, 0.0, sign * c / r]))
}

/// Flat image `(q3, p3)` of [`collision_orbit`]; undefined where `cos rt = -1`.
pub fn collision_orbit_flat(r: f64, sign: f64, t: f64) -> Result<(f64, f64)> {
    let (s, c) = (r * t).sin_cos();
    if 1.0 + c < 1e-12 {
        return Err(Error::Domain("the collision orbit passes the pole at this time".into()));
    }
    Ok((-sign * (1.0 + c) / (r * r), sign * r * s / (1.0 + c)))
}
