//! Moduli of Kepler orbits at fixed negative energy as `S^2 x S^2`, via
//! `(L, A) -> (sqrt(-2E) L - A, sqrt(-2E) L + A)`.

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::inertia;

/// Absolute tolerance for equalities between sphere coordinates.
pub const LOCUS_TOL: f64 = 1e-9;

/// Tolerance of the orbit invariants accepted by [`to_sphere_pair`].
pub const INVARIANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePair {
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
}

impl SpherePair {
    pub fn new(x: [f64; 3], y: [f64; 3]) -> Self {
        SpherePair { x: Vector3::from(x), y: Vector3::from(y) }
    }

    pub fn norm_defect(&self) -> f64 {
        (self.x.norm() - 1.0).abs().max((self.y.norm() - 1.0).abs())
    }
}

fn check_energy(energy: f64) -> Result<f64> {
    if !(energy < 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!("the moduli space is defined for E < 0, got {energy}")));
    }
    Ok((-2.0 * energy).sqrt())
}

/// Moduli point of the orbit with angular momentum `l` and Laplace-Runge-Lenz
/// vector `a` at energy `energy`.
pub fn to_sphere_pair(energy: f64, l: &Vector3<f64>, a: &Vector3<f64>) -> Result<SpherePair> {
    let s = check_energy(energy)?;
    let orth = a.dot(l);
    let ecc = a.norm_squared() - 2.0 * energy * l.norm_squared() - 1.0;
    if orth.abs() > INVARIANT_TOL || ecc.abs() > INVARIANT_TOL {
        return Err(Error::Domain(format!("inconsistent invariants: A.L = {orth:e}, |A|^2 - 2E|L|^2 - 1 = {ecc:e}")));
    }
    Ok(SpherePair { x: l * s - a, y: l * s + a })
}

/// Inverse map: `L = (x + y) / (2 sqrt(-2E))`, `A = -(x - y) / 2`.
pub fn from_sphere_pair(energy: f64, sp: &SpherePair) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let s = check_energy(energy)?;
    Ok(((sp.x + sp.y) / (2.0 * s), -(sp.x - sp.y) / 2.0))
}

/// The four orbits singled out by the rotation about the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedPoint {
    /// `((0,0,1), (0,0,1))`.
    Retrograde,
    /// `((0,0,-1), (0,0,-1))`.
    Direct,
    /// `((0,0,1), (0,0,-1))`, `A = (0,0,-1)`.
    #[serde(rename = "collision+")]
    CollisionPlus,
    /// `((0,0,-1), (0,0,1))`, `A = (0,0,1)`.
    #[serde(rename = "collision-")]
    CollisionMinus,
}

impl NamedPoint {
    pub const ALL: [NamedPoint; 4] = [NamedPoint::Retrograde, NamedPoint::Direct, NamedPoint::CollisionPlus, NamedPoint::CollisionMinus];

    pub fn point(self) -> SpherePair {
        let (a, b) = match self {
            NamedPoint::Retrograde => (1.0, 1.0),
            NamedPoint::Direct => (-1.0, -1.0),
            NamedPoint::CollisionPlus => (1.0, -1.0),
            NamedPoint::CollisionMinus => (-1.0, 1.0),
        };
        SpherePair::new([0.0, 0.0, a], [0.0, 0.0, b])
    }

    pub fn label(self) -> &'static str {
        match self {
            NamedPoint::Retrograde => "retrograde",
            NamedPoint::Direct => "direct",
            NamedPoint::CollisionPlus => "collision+",
            NamedPoint::CollisionMinus => "collision-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LocusTags {
    pub circular: bool,
    pub collision: bool,
    pub planar: bool,
    pub vertical: bool,
    pub retrograde: bool,
    pub direct: bool,
    #[serde(rename = "collision+")]
    pub collision_plus: bool,
    #[serde(rename = "collision-")]
    pub collision_minus: bool,
}

impl LocusTags {
    /// Names of the set flags, in declaration order.
    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.circular, "circular"),
            (self.collision, "collision"),
            (self.planar, "planar"),
            (self.vertical, "vertical"),
            (self.retrograde, "retrograde"),
            (self.direct, "direct"),
            (self.collision_plus, "collision+"),
            (self.collision_minus, "collision-"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect()
    }

    pub fn named(&self) -> Option<NamedPoint> {
        if self.retrograde {
            Some(NamedPoint::Retrograde)
        } else if self.direct {
            Some(NamedPoint::Direct)
        } else if self.collision_plus {
            Some(NamedPoint::CollisionPlus)
        } else if self.collision_minus {
            Some(NamedPoint::CollisionMinus)
        } else {
            None
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= LOCUS_TOL
}

/// Circular orbits sit on the diagonal, collisions on the anti-diagonal,
/// planar orbits (`L` vertical, `A` horizontal) on `x3 = y3`,
/// `(x1, x2) = -(y1, y2)`, and vertical orbits on `x3 = -y3`,
/// `(x1, x2) = (y1, y2)`.
pub fn classify_point(sp: &SpherePair) -> LocusTags {
    let (x, y) = (&sp.x, &sp.y);
    let all = |f: &dyn Fn(usize) -> bool| (0..3).all(f);
    let named = |n: NamedPoint| {
        let p = n.point();
        all(&|i| close(x[i], p.x[i]) && close(y[i], p.y[i]))
    };
    LocusTags {
        circular: all(&|i| close(x[i], y[i])),
        collision: all(&|i| close(x[i], -y[i])),
        planar: close(x[0], -y[0]) && close(x[1], -y[1]) && close(x[2], y[2]),
        vertical: close(x[0], y[0]) && close(x[1], y[1]) && close(x[2], -y[2]),
        retrograde: named(NamedPoint::Retrograde),
        direct: named(NamedPoint::Direct),
        collision_plus: named(NamedPoint::CollisionPlus),
        collision_minus: named(NamedPoint::CollisionMinus),
    }
}

/// Functions on the moduli space whose critical points are the named orbits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModuliFunction {
    /// `L3 = (x3 + y3) / (2 sqrt(-2E))`.
    L3,
    /// `A3 = -(x3 - y3) / 2`.
    A3,
}

impl ModuliFunction {
    pub fn value(self, energy: f64, sp: &SpherePair) -> Result<f64> {
        let s = check_energy(energy)?;
        Ok(match self {
            ModuliFunction::L3 => (sp.x[2] + sp.y[2]) / (2.0 * s),
            ModuliFunction::A3 => -(sp.x[2] - sp.y[2]) / 2.0,
        })
    }

    /// Ambient gradient in `R^3 x R^3`.
    fn ambient_gradient(self, s: f64) -> (Vector3<f64>, Vector3<f64>) {
        match self {
            ModuliFunction::L3 => (Vector3::z() / (2.0 * s), Vector3::z() / (2.0 * s)),
            ModuliFunction::A3 => (-Vector3::z() / 2.0, Vector3::z() / 2.0),
        }
    }

    /// Norm of the gradient projected to the tangent space of `S^2 x S^2`.
    pub fn projected_gradient_norm(self, energy: f64, sp: &SpherePair) -> Result<f64> {
        let s = check_energy(energy)?;
        let (gx, gy) = self.ambient_gradient(s);
        let px = gx - sp.x * gx.dot(&sp.x);
        let py = gy - sp.y * gy.dot(&sp.y);
        Ok((px.norm_squared() + py.norm_squared()).sqrt())
    }
}

/// A critical point with its value and Morse index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: SpherePair,
    pub name: Option<NamedPoint>,
    pub value: f64,
    pub morse_index: usize,
}

/// Two unit vectors completing `x` to an orthonormal frame.
fn tangent_basis(x: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if x[0].abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = (helper - x * helper.dot(x)).normalize();
    (t1, x.cross(&t1))
}

/// Morse index from the finite-difference Hessian in the chart
/// `u -> normalize(x + u1 t1 + u2 t2)` on each factor.
fn morse_index(f: ModuliFunction, energy: f64, sp: &SpherePair) -> Result<usize> {
    let (a1, a2) = tangent_basis(&sp.x);
    let (b1, b2) = tangent_basis(&sp.y);
    let eval = |u: &[f64; 4]| -> Result<f64> {
        let x = (sp.x + a1 * u[0] + a2 * u[1]).normalize();
        let y = (sp.y + b1 * u[2] + b2 * u[3]).normalize();
        f.value(energy, &SpherePair { x, y })
    };
    let h = 1e-4;
    let mut hess = DMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut u = [0.0; 4];
                u[i] += si * h;
                u[j] += sj * h;
                acc += w * eval(&u)?;
            }
            hess[(i, j)] = acc / (4.0 * h * h);
        }
    }
    let (_, neg, zero) = inertia(&hess, 1e-6);
    if zero > 0 {
        return Err(Error::Domain("degenerate critical point".into()));
    }
    Ok(neg)
}

/// Points of `S^2` on a latitude-longitude grid, poles included once.
fn sphere_grid(n_lat: usize, n_lon: usize) -> Vec<Vector3<f64>> {
    let mut out = vec![Vector3::z(), -Vector3::z()];
    for i in 1..n_lat {
        let th = std::f64::consts::PI * i as f64 / n_lat as f64;
        for j in 0..n_lon {
            let ph = 2.0 * std::f64::consts::PI * j as f64 / n_lon as f64;
            out.push(Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
        }
    }
    out
}

/// Critical points of `f` found by scanning the projected gradient on a
/// product grid of `S^2 x S^2`, each with its Morse index. Sorted by value.
pub fn morse_data(f: ModuliFunction, energy: f64, n_lat: usize, threshold: f64) -> Result<Vec<CriticalPoint>> {
    check_energy(energy)?;
    if n_lat < 2 {
        return Err(Error::InvalidArgument("the scan needs at least two latitude bands".into()));
    }
    let grid = sphere_grid(n_lat, 2 * n_lat);
    let mut out: Vec<CriticalPoint> = Vec::new();
    for x in &grid {
        for y in &grid {
            let sp = SpherePair { x: *x, y: *y };
            if f.projected_gradient_norm(energy, &sp)? >= threshold {
                continue;
            }
            if out.iter().any(|c| (c.point.x - sp.x).norm() < 1e-9 && (c.point.y - sp.y).norm() < 1e-9) {
                continue;
            }
            out.push(CriticalPoint {
                point: sp,
                name: classify_point(&sp).named(),
                value: f.value(energy, &sp)?,
                morse_index: morse_index(f, energy, &sp)?,
            });
        }
    }
    out.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap().then(a.morse_index.cmp(&b.morse_index)));
    Ok(out)
}

/// Morse data of `L3`: minimum at the direct orbit, saddles at the collision
/// orbits, maximum at the retrograde orbit.
pub fn l3_morse_data(energy: f64) -> Result<Vec<CriticalPoint>> {
    morse_data(ModuliFunction::L3, energy, 24, 1e-6)
}

/// Morse data of `A3`: extrema at the collision orbits, saddles at the
/// circular ones.
pub fn a3_morse_data(energy: f64) -> Result<Vec<CriticalPoint>> {
    morse_data(ModuliFunction::A3, energy, 24, 1e-6)
}

/// `n` points of the level set `L3 = value`, drawing `x3` uniformly from its
/// admissible interval and both azimuths uniformly.
pub fn level_set_sample(energy: f64, value: f64, n: usize, seed: u64) -> Result<Vec<SpherePair>> {
    let s = check_energy(energy)?;
    let sum = 2.0 * s * value;
    if value == 0.0 {
        return Err(Error::Domain("L3 = 0 is the singular level through the collision orbits, not a manifold".into()));
    }
    if !(sum.abs() < 2.0) {
        return Err(Error::Domain(format!("L3 = {value} is outside the open range (-1/sqrt(-2E), 1/sqrt(-2E))")));
    }
    let lo = (sum - 1.0).max(-1.0);
    let hi = (sum + 1.0).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let on_circle = |z: f64, ph: f64| {
        let rho = (1.0 - z * z).max(0.0).sqrt();
        Vector3::new(rho * ph.cos(), rho * ph.sin(), z)
    };
    Ok((0..n)
        .map(|_| {
            let x3 = rng.gen_range(lo..=hi);
            let y3 = sum - x3;
            let px = rng.gen_range(0.0..std::f64::consts::TAU);
            let py = rng.gen_range(0.0..std::f64::consts::TAU);
            SpherePair { x: on_circle(x3, px), y: on_circle(y3, py) }
        })
        .collect())
}

pub use crate::catalog::{bifurcation_record as bifurcation_schedule, BifurcationRecord};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_points_from_invariants() {
        let sp = to_sphere_pair(-0.5, &Vector3::z(), &Vector3::zeros()).unwrap();
        assert_eq!(sp, NamedPoint::Retrograde.point());
        let sp = to_sphere_pair(-0.5, &Vector3::zeros(), &Vector3::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(sp, NamedPoint::CollisionPlus.point());
        let sp = to_sphere_pair(-0.5, &Vector3::zeros(), &Vector3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(sp, SpherePair::new([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]));
        assert!(to_sphere_pair(-0.5, &Vector3::z(), &Vector3::z()).is_err());
    }

    #[test]
    fn inverse_map() {
        let (l, a) = from_sphere_pair(-0.5, &NamedPoint::Retrograde.point()).unwrap();
        assert_eq!(l, Vector3::z());
        assert_eq!(a, Vector3::zeros());
    }

    #[test]
    fn tags() {
        let t = classify_point(&NamedPoint::Retrograde.point());
        assert_eq!(t.names(), vec!["circular", "planar", "retrograde"]);
        let t = classify_point(&NamedPoint::CollisionMinus.point());
        assert_eq!(t.names(), vec!["collision", "vertical", "collision-"]);
        assert!(classify_point(&SpherePair::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])).names().is_empty());
    }

    #[test]
    fn l3_has_four_critical_points() {
        let cps = l3_morse_data(-0.5).unwrap();
        let summary: Vec<_> = cps.iter().map(|c| (c.name.unwrap(), c.morse_index)).collect();
        assert_eq!(summary.len(), 4);
        assert_eq!(summary[0], (NamedPoint::Direct, 0));
        assert_eq!(summary[3], (NamedPoint::Retrograde, 4));
        assert!(summary[1..3].iter().all(|&(_, i)| i == 2));
        assert!((cps[0].value + 1.0).abs() < 1e-15 && (cps[3].value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn a3_extrema_are_the_collision_orbits() {
        let cps = a3_morse_data(-0.5).unwrap();
        assert_eq!(cps.len(), 4);
        assert_eq!((cps[0].name, cps[0].morse_index, cps[0].value), (Some(NamedPoint::CollisionPlus), 0, -1.0));
        assert_eq!((cps[3].name, cps[3].morse_index, cps[3].value), (Some(NamedPoint::CollisionMinus), 4, 1.0));
    }

    #[test]
    fn level_sets() {
        let pts = level_set_sample(-0.5, 0.5, 200, 7).unwrap();
        for p in &pts {
            assert!(p.norm_defect() < 1e-12);
            assert!(((p.x[2] + p.y[2]) / 2.0 - 0.5).abs() < 1e-12);
        }
        assert_eq!(pts, level_set_sample(-0.5, 0.5, 200, 7).unwrap());
        assert!(level_set_sample(-0.5, 0.0, 5, 1).is_err());
        assert!(level_set_sample(-0.5, 1.0, 5, 1).is_err());
    }
}
