//! Periodic orbits of the rotating Kepler problem below the critical Jacobi
//! constant: circular and collision orbits, resonant torus families and the
//! Hill region.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{cz_circular, cz_collision, rs_family, CircularSign, HalfInteger};
use crate::math::gcd;

/// Jacobi constant of the critical point of the effective potential.
pub const CRITICAL_JACOBI: f64 = -1.5;

/// Absolute tolerance of the genericity test.
pub const GENERICITY_TOL: f64 = 1e-9;

/// Real roots of `2E(c - E)^2 + 1 = 0`, the Kepler energies of circular
/// orbits at Jacobi constant `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "roots", rename_all = "kebab-case")]
pub enum CircularRoots {
    /// `c < -3/2`: retrograde < direct < outer.
    Three { retrograde: f64, direct: f64, outer: f64 },
    /// `c = -3/2`: the direct and outer roots merge at `E = -1/2`.
    Degenerate { retrograde: f64, double: f64 },
    /// `c > -3/2`: only the retrograde orbit.
    Single { retrograde: f64 },
}

impl CircularRoots {
    pub fn retrograde(&self) -> f64 {
        match *self {
            CircularRoots::Three { retrograde, .. } | CircularRoots::Degenerate { retrograde, .. } | CircularRoots::Single { retrograde } => retrograde,
        }
    }

    pub fn direct(&self) -> Option<f64> {
        match *self {
            CircularRoots::Three { direct, .. } => Some(direct),
            _ => None,
        }
    }

    pub fn outer(&self) -> Option<f64> {
        match *self {
            CircularRoots::Three { outer, .. } => Some(outer),
            _ => None,
        }
    }

    /// All roots in increasing order, with multiplicity.
    pub fn all(&self) -> Vec<f64> {
        match *self {
            CircularRoots::Three { retrograde, direct, outer } => vec![retrograde, direct, outer],
            CircularRoots::Degenerate { retrograde, double } => vec![retrograde, double, double],
            CircularRoots::Single { retrograde } => vec![retrograde],
        }
    }
}

fn circular_cubic(c: f64, e: f64) -> f64 {
    2.0 * e * (c - e) * (c - e) + 1.0
}

fn circular_cubic_derivative(c: f64, e: f64) -> f64 {
    2.0 * (c - e) * (c - 3.0 * e)
}

/// Bisection on a sign change followed by two Newton steps.
fn bracketed_root(c: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = circular_cubic(c, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = circular_cubic(c, mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut e = 0.5 * (lo + hi);
    for _ in 0..2 {
        let d = circular_cubic_derivative(c, e);
        if d == 0.0 {
            break;
        }
        let next = e - circular_cubic(c, e) / d;
        if next.is_finite() && circular_cubic(c, next).abs() <= circular_cubic(c, e).abs() {
            e = next;
        }
    }
    e
}

/// Kepler energies of the circular orbits at Jacobi constant `c`.
///
/// The cubic has critical points at `E = c` (value 1) and `E = c/3`
/// (value `1 + 8c^3/27`), which bracket the roots.
pub fn circular_energies(c: f64) -> Result<CircularRoots> {
    if !c.is_finite() {
        return Err(Error::Domain(format!("Jacobi constant must be finite, got {c}")));
    }
    let top = c.min(0.0);
    let mut lo = top - 1.0;
    while circular_cubic(c, lo) >= 0.0 {
        lo = top - 2.0 * (top - lo);
    }
    let retrograde = bracketed_root(c, lo, top);
    if c >= 0.0 {
        return Ok(CircularRoots::Single { retrograde });
    }
    let dip = circular_cubic(c, c / 3.0);
    if dip.abs() <= 1e-12 {
        return Ok(CircularRoots::Degenerate { retrograde, double: c / 3.0 });
    }
    if dip > 0.0 {
        return Ok(CircularRoots::Single { retrograde });
    }
    Ok(CircularRoots::Three {
        retrograde,
        direct: bracketed_root(c, c, c / 3.0),
        outer: bracketed_root(c, c / 3.0, 0.0),
    })
}

/// Resonance energy `E_{k,l} = -(k/l)^{2/3} / 2`: the Kepler period equals
/// `2 pi l / k`.
pub fn resonance_energy(k: u64, l: u64) -> f64 {
    -0.5 * (k as f64 / l as f64).powf(2.0 / 3.0)
}

/// Jacobi constants `c_{k,l}^{-+} = E_{k,l} -+ 1/sqrt(-2 E_{k,l})` at which
/// the family `Sigma_{k,l}` is born out of the direct orbit and dies into the
/// retrograde orbit.
pub fn bifurcation_energies(k: u64, l: u64) -> (f64, f64) {
    let e = resonance_energy(k, l);
    let s = 1.0 / (-2.0 * e).sqrt();
    (e - s, e + s)
}

/// Coprime resonance pair `(k, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FamilyId {
    pub k: u64,
    pub l: u64,
}

impl FamilyId {
    /// Reduces `(k, l)` by their gcd; the second value is that gcd.
    pub fn new(k: u64, l: u64) -> Result<(FamilyId, u64)> {
        if k == 0 || l == 0 {
            return Err(Error::InvalidArgument(format!("family indices must be positive, got ({k}, {l})")));
        }
        let g = gcd(k, l);
        Ok((FamilyId { k: k / g, l: l / g }, g))
    }

    pub fn energy(&self) -> f64 {
        resonance_energy(self.k, self.l)
    }

    pub fn ratio(&self) -> f64 {
        self.k as f64 / self.l as f64
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.l)
    }
}

/// Why a Jacobi constant fails the genericity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonGenericWitness {
    pub k: u64,
    pub l: u64,
    pub reason: String,
}

impl NonGenericWitness {
    pub fn into_error(self, c: f64) -> Error {
        Error::NonGeneric { c, k: self.k, l: self.l, reason: self.reason }
    }
}

/// First coprime `(k, l)` with `k <= k_max` such that `c` equals `E_{k,l}` or
/// one of `c_{k,l}^{-+}`.
///
/// For a given `c` each condition pins `k/l` to a value `(-2E)^{3/2}` with
/// `E = c` or `E` a root of the circular cubic, so only the two `l` nearest to
/// `k/ratio` need checking.
pub fn genericity_witness(c: f64, k_max: u64) -> Option<NonGenericWitness> {
    let mut ratios = vec![(-2.0 * c).powf(1.5)];
    if let Ok(roots) = circular_energies(c) {
        ratios.extend(roots.all().into_iter().map(|e| (-2.0 * e).powf(1.5)));
    }
    for k in 1..=k_max {
        for &rho in &ratios {
            if !(rho > 0.0 && rho.is_finite()) {
                continue;
            }
            let guess = k as f64 / rho;
            for l in [guess.floor() as u64, guess.ceil() as u64] {
                if l == 0 || gcd(k, l) != 1 {
                    continue;
                }
                let e = resonance_energy(k, l);
                let (cm, cp) = bifurcation_energies(k, l);
                let hit = if (c - e).abs() < GENERICITY_TOL {
                    Some("c equals the resonance energy E_{k,l}")
                } else if (c - cm).abs() < GENERICITY_TOL {
                    Some("c equals the birth value c^-_{k,l}")
                } else if (c - cp).abs() < GENERICITY_TOL {
                    Some("c equals the death value c^+_{k,l}")
                } else {
                    None
                };
                if let Some(reason) = hit {
                    return Some(NonGenericWitness { k, l, reason: reason.to_string() });
                }
            }
        }
    }
    None
}

pub fn is_generic(c: f64, k_max: u64) -> bool {
    genericity_witness(c, k_max).is_none()
}

fn require_below_critical(c: f64) -> Result<CircularRoots> {
    if !(c < CRITICAL_JACOBI) {
        return Err(Error::AboveCritical { c });
    }
    circular_energies(c)
}

/// Families `Sigma_{k,l}` present at Jacobi constant `c`: coprime `(k, l)`
/// with `k <= k_max` and `E_+ < E_{k,l} < E_-`, i.e.
/// `(-2E_-)^{3/2} < k/l < (-2E_+)^{3/2}`. Sorted by `k`, then `l`.
pub fn enumerate_families(c: f64, k_max: u64) -> Result<Vec<FamilyId>> {
    let roots = require_below_critical(c)?;
    if let Some(w) = genericity_witness(c, k_max) {
        return Err(w.into_error(c));
    }
    let lo = (-2.0 * roots.direct().unwrap()).powf(1.5);
    let hi = (-2.0 * roots.retrograde()).powf(1.5);
    let mut out = Vec::new();
    for k in 1..=k_max {
        let l_min = (k as f64 / hi).floor().max(1.0) as u64;
        let l_max = (k as f64 / lo).ceil() as u64;
        for l in l_min..=l_max {
            let ratio = k as f64 / l as f64;
            if gcd(k, l) == 1 && ratio > lo && ratio < hi {
                out.push(FamilyId { k, l });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitKind {
    Retrograde,
    Direct,
    /// Collision orbit on the positive `q3` half-axis.
    #[serde(rename = "collision+")]
    CollisionPlus,
    /// Collision orbit on the negative `q3` half-axis.
    #[serde(rename = "collision-")]
    CollisionMinus,
    Family,
}

impl OrbitKind {
    pub fn label(&self) -> &'static str {
        match self {
            OrbitKind::Retrograde => "retrograde",
            OrbitKind::Direct => "direct",
            OrbitKind::CollisionPlus => "collision+",
            OrbitKind::CollisionMinus => "collision-",
            OrbitKind::Family => "family",
        }
    }
}

impl fmt::Display for OrbitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One periodic orbit or orbit family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub kind: OrbitKind,
    pub family: Option<FamilyId>,
    pub cover: u32,
    pub kepler_energy: f64,
    /// Period of the simple orbit in the rotating frame.
    pub period: f64,
    /// Conley-Zehnder index of the cover, or Robbin-Salamon index of a family.
    pub index: HalfInteger,
    /// Sign of `L3 = c - E`.
    pub l3_sign: i8,
}

impl OrbitRecord {
    pub fn label(&self) -> String {
        match self.family {
            Some(f) => format!("family{f}"),
            None => format!("{}^{}", self.kind, self.cover),
        }
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Closed-form record of the `cover`-fold isolated orbit of the given kind.
pub fn isolated_orbit(c: f64, kind: OrbitKind, cover: u32) -> Result<OrbitRecord> {
    let roots = require_below_critical(c)?;
    let (energy, period, index) = match kind {
        OrbitKind::Retrograde | OrbitKind::Direct => {
            let sign = if kind == OrbitKind::Retrograde { CircularSign::Retrograde } else { CircularSign::Direct };
            let e = if kind == OrbitKind::Retrograde { roots.retrograde() } else { roots.direct().unwrap() };
            (e, crate::index::circular_period(e, sign)?, cz_circular(e, sign, cover)?)
        }
        OrbitKind::CollisionPlus | OrbitKind::CollisionMinus => (c, 2.0 * PI / (-2.0 * c).powf(1.5), cz_collision(cover)?),
        OrbitKind::Family => return Err(Error::InvalidArgument("families are listed by enumerate_families".into())),
    };
    Ok(OrbitRecord { kind, family: None, cover, kepler_energy: energy, period, index, l3_sign: sign_of(c - energy) })
}

/// Record of a family: period `2 pi l`, index `4k - 1/2`.
pub fn family_orbit(c: f64, family: FamilyId) -> OrbitRecord {
    let e = family.energy();
    OrbitRecord {
        kind: OrbitKind::Family,
        family: Some(family),
        cover: 1,
        kepler_energy: e,
        period: 2.0 * PI * family.l as f64,
        index: rs_family(family),
        l3_sign: sign_of(c - e),
    }
}

/// All isolated orbits with covers `1..=n_max`, followed by the families with
/// `k <= k_max`.
pub fn catalog(c: f64, n_max: u32, k_max: u64) -> Result<Vec<OrbitRecord>> {
    require_below_critical(c)?;
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    if let Some(w) = genericity_witness(c, k_max) {
        return Err(w.into_error(c));
    }
    let mut out = Vec::new();
    for kind in [OrbitKind::Retrograde, OrbitKind::Direct, OrbitKind::CollisionPlus, OrbitKind::CollisionMinus] {
        for n in 1..=n_max {
            out.push(isolated_orbit(c, kind, n)?);
        }
    }
    out.extend(enumerate_families(c, k_max)?.into_iter().map(|f| family_orbit(c, f)));
    Ok(out)
}

/// Birth and death of a family as `c` increases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationRecord {
    pub family: FamilyId,
    pub c_birth: f64,
    pub born_from: String,
    pub c_death: f64,
    pub dies_into: String,
}

/// `Sigma_{k,l}` appears at `c^-_{k,l}` out of `direct^{k-l}` and
/// disappears at `c^+_{k,l}` into `retrograde^{k+l}`.
pub fn bifurcation_record(k: u64, l: u64) -> Result<BifurcationRecord> {
    let (family, _) = FamilyId::new(k, l)?;
    if family.k <= family.l {
        return Err(Error::Domain(format!("families bifurcate from the direct orbit only for k > l, got {family}")));
    }
    let (cm, cp) = bifurcation_energies(family.k, family.l);
    Ok(BifurcationRecord {
        family,
        c_birth: cm,
        born_from: format!("direct^{}", family.k - family.l),
        c_death: cp,
        dies_into: format!("retrograde^{}", family.k + family.l),
    })
}

// ---------------------------------------------------------------------------
// Hill region.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HillTag {
    /// Admissible, in the component around the origin.
    BoundedComponent,
    /// Admissible, in the outer component.
    UnboundedComponent,
    /// `U(q) > c`.
    Forbidden,
    /// Admissible, with `c >= -3/2` so the region is connected.
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillClassification {
    pub tag: HillTag,
    /// Boundary radii along the ray through `q`, when they exist.
    pub inner_radius: Option<f64>,
    pub outer_radius: Option<f64>,
}

/// Effective potential `U(q) = -1/|q| - (q1^2 + q2^2)/2`.
pub fn effective_potential(q: &Vector3<f64>) -> f64 {
    -1.0 / q.norm() - 0.5 * (q[0] * q[0] + q[1] * q[1])
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let fa_neg = f(a) < 0.0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        if (f(m) < 0.0) == fa_neg {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Component of the Hill region `{U <= c}` containing `q`, found by locating
/// the boundary radii on the ray through `q`.
pub fn hill_classify(c: f64, q: &Vector3<f64>) -> Result<HillClassification> {
    let s = q.norm();
    if !(s > 0.0) {
        return Err(Error::Domain("q = 0 is the collision locus".into()));
    }
    let u = q / s;
    let rho2 = u[0] * u[0] + u[1] * u[1];
    let on_ray = |t: f64| -1.0 / t - 0.5 * t * t * rho2 - c;
    let forbidden = effective_potential(q) > c;
    if c >= CRITICAL_JACOBI {
        let tag = if forbidden { HillTag::Forbidden } else { HillTag::Connected };
        return Ok(HillClassification { tag, inner_radius: None, outer_radius: None });
    }
    // U along the ray rises from -inf to its maximum at t* = rho^{-2/3}, then falls.
    let tol = 1e-10;
    let (inner, outer) = if rho2 == 0.0 {
        (-1.0 / c, None)
    } else {
        let t_star = rho2.powf(-1.0 / 3.0);
        let inner = bisect(on_ray, 1e-300f64.max(-1e-3 / c.abs()).min(t_star * 1e-6), t_star, tol);
        let mut far = 2.0 * t_star;
        while on_ray(far) > 0.0 {
            far *= 2.0;
        }
        (inner, Some(bisect(on_ray, t_star, far, tol)))
    };
    let tag = if forbidden {
        HillTag::Forbidden
    } else if outer.is_some_and(|o| s >= 0.5 * (inner + o)) {
        HillTag::UnboundedComponent
    } else {
        HillTag::BoundedComponent
    };
    Ok(HillClassification { tag, inner_radius: Some(inner), outer_radius: outer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn roots_at_reference_jacobi_constant() {
        let r = circular_energies(-2.1).unwrap();
        let CircularRoots::Three { retrograde, direct, outer } = r else { panic!("{r:?}") };
        assert!((retrograde + 2.543383).abs() < 1e-6);
        assert!((direct + 1.527956).abs() < 1e-6);
        assert!((outer + 0.128661).abs() < 1e-6);
        for e in r.all() {
            assert!(circular_cubic(-2.1, e).abs() < 1e-12);
        }
        assert_relative_eq!(-2.1, retrograde + 1.0 / (-2.0 * retrograde).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(-2.1, direct - 1.0 / (-2.0 * direct).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(-2.1, outer - 1.0 / (-2.0 * outer).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn critical_value_has_a_double_root() {
        let r = circular_energies(-1.5).unwrap();
        let CircularRoots::Degenerate { double, .. } = r else { panic!("{r:?}") };
        assert_relative_eq!(double, -0.5);
        assert!(matches!(circular_energies(-1.0).unwrap(), CircularRoots::Single { .. }));
    }

    #[test]
    fn families_at_reference_jacobi_constant() {
        let fams = enumerate_families(-2.1, 11).unwrap();
        let pairs: Vec<_> = fams.iter().map(|f| (f.k, f.l)).collect();
        assert_eq!(pairs, vec![(6, 1), (7, 1), (8, 1), (9, 1), (10, 1), (11, 1), (11, 2)]);
    }

    #[test]
    fn non_generic_values_are_caught() {
        // c = E_{8,1} = -2 and c = c^-_{8,1} = -2.5
        let w = genericity_witness(-2.0, 11).unwrap();
        assert_eq!((w.k, w.l), (8, 1));
        let w = genericity_witness(-2.5, 11).unwrap();
        assert_eq!((w.k, w.l), (8, 1));
        assert!(is_generic(-2.1, 20));
        assert!(matches!(enumerate_families(-2.5, 11), Err(Error::NonGeneric { k: 8, l: 1, .. })));
    }

    #[test]
    fn bifurcation_of_eight_one() {
        let b = bifurcation_record(8, 1).unwrap();
        assert_relative_eq!(b.c_birth, -2.5, epsilon = 1e-14);
        assert_relative_eq!(b.c_death, -1.5, epsilon = 1e-14);
        assert_eq!(b.born_from, "direct^7");
        assert_eq!(b.dies_into, "retrograde^9");
    }

    #[test]
    fn family_reduction() {
        let (f, g) = FamilyId::new(16, 2).unwrap();
        assert_eq!((f.k, f.l, g), (8, 1, 2));
        assert!(FamilyId::new(0, 1).is_err());
    }

    #[test]
    fn catalog_shape() {
        let cat = catalog(-2.1, 3, 11).unwrap();
        assert_eq!(cat.len(), 12 + 7);
        assert_eq!(cat.iter().filter(|o| o.kind == OrbitKind::Family).count(), 7);
        assert!(matches!(catalog(-1.0, 3, 11), Err(Error::AboveCritical { .. })));
    }

    #[test]
    fn hill_examples() {
        let t = |q: [f64; 3]| hill_classify(-2.0, &Vector3::from(q)).unwrap().tag;
        assert_eq!(t([0.1, 0.0, 0.0]), HillTag::BoundedComponent);
        assert_eq!(t([10.0, 0.0, 0.0]), HillTag::UnboundedComponent);
        assert_eq!(t([1.0, 0.0, 0.0]), HillTag::Forbidden);
        assert_eq!(t([0.0, 0.0, 0.3]), HillTag::BoundedComponent);
        assert_eq!(t([0.0, 0.0, 3.0]), HillTag::Forbidden);
        assert_eq!(hill_classify(-1.0, &Vector3::new(1.0, 0.0, 0.0)).unwrap().tag, HillTag::Connected);
    }

    #[test]
    fn hill_boundary_radii_solve_the_potential() {
        let h = hill_classify(-2.0, &Vector3::new(0.3, 0.2, 0.1)).unwrap();
        let u = Vector3::new(0.3, 0.2, 0.1).normalize();
        for r in [h.inner_radius.unwrap(), h.outer_radius.unwrap()] {
            assert!((effective_potential(&(u * r)) + 2.0).abs() < 1e-8);
        }
    }
}
