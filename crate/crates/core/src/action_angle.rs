//! Spherical coordinates, Delaunay and Laplace-Runge-Lenz actions, and the
//! linearized return map of the resonant tori `Sigma_{k,l}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::catalog::FamilyId;
use crate::dynamics::PhasePoint;
use crate::error::{Error, Result};
use crate::math::numerical_rank;

/// Relative singular-value threshold for Jacobian ranks.
pub const RANK_TOL: f64 = 1e-8;

/// Tolerance below which a coordinate counts as zero when tagging states.
pub const TAG_TOL: f64 = 1e-10;

/// `(r, psi, phi)` with polar angle `psi` and azimuth `phi`, and their
/// conjugate momenta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub r: f64,
    pub psi: f64,
    pub phi: f64,
    pub p_r: f64,
    pub p_psi: f64,
    pub p_phi: f64,
}

impl SphericalPoint {
    pub fn to_array(&self) -> [f64; 6] {
        [self.r, self.psi, self.phi, self.p_r, self.p_psi, self.p_phi]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        SphericalPoint { r: a[0], psi: a[1], phi: a[2], p_r: a[3], p_psi: a[4], p_phi: a[5] }
    }

    fn check_chart(&self) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(Error::Domain(format!("spherical chart needs r > 0, got {}", self.r)));
        }
        if !(self.psi.sin() > 0.0) {
            return Err(Error::Domain("the spherical chart excludes the q3-axis".into()));
        }
        Ok(())
    }

    /// `p_psi^2 + p_phi^2 / sin^2 psi = |L|^2`.
    pub fn total_angular_momentum_squared(&self) -> f64 {
        let s = self.psi.sin();
        self.p_psi * self.p_psi + self.p_phi * self.p_phi / (s * s)
    }
}

fn frame(psi: f64, phi: f64) -> [Vector3<f64>; 3] {
    let (sp, cp) = psi.sin_cos();
    let (sf, cf) = phi.sin_cos();
    [Vector3::new(sp * cf, sp * sf, cp), Vector3::new(cp * cf, cp * sf, -sp), Vector3::new(-sf, cf, 0.0)]
}

pub fn to_spherical(x: &PhasePoint) -> Result<SphericalPoint> {
    let q = x.q;
    let r = q.norm();
    let rho = (q[0] * q[0] + q[1] * q[1]).sqrt();
    if !(rho > 0.0) {
        return Err(Error::Domain("the spherical chart excludes the q3-axis".into()));
    }
    let psi = rho.atan2(q[2]);
    let phi = q[1].atan2(q[0]);
    let [er, epsi, ephi] = frame(psi, phi);
    Ok(SphericalPoint { r, psi, phi, p_r: x.p.dot(&er), p_psi: r * x.p.dot(&epsi), p_phi: rho * x.p.dot(&ephi) })
}

pub fn from_spherical(sp: &SphericalPoint) -> Result<PhasePoint> {
    sp.check_chart()?;
    let [er, epsi, ephi] = frame(sp.psi, sp.phi);
    let q = er * sp.r;
    let p = er * sp.p_r + epsi * (sp.p_psi / sp.r) + ephi * (sp.p_phi / (sp.r * sp.psi.sin()));
    Ok(PhasePoint { q, p })
}

/// `(p_l, p_g, p_theta) = (1/sqrt(-2E), |L|, L3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaunayActions {
    pub p_l: f64,
    pub p_g: f64,
    pub p_theta: f64,
}

/// `-2E = 2/r - p_r^2 - p_psi^2/r^2 - p_phi^2/(r^2 sin^2 psi)`.
fn minus_two_energy(sp: &SphericalPoint) -> f64 {
    2.0 / sp.r - sp.p_r * sp.p_r - sp.total_angular_momentum_squared() / (sp.r * sp.r)
}

pub fn delaunay_actions(sp: &SphericalPoint) -> Result<DelaunayActions> {
    sp.check_chart()?;
    let m = minus_two_energy(sp);
    if !(m > 0.0) {
        return Err(Error::Domain(format!("Delaunay actions need a bound state, got E = {}", -m / 2.0)));
    }
    Ok(DelaunayActions { p_l: m.powf(-0.5), p_g: sp.total_angular_momentum_squared().sqrt(), p_theta: sp.p_phi })
}

/// Which rows of the Delaunay Jacobian certify its rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianCase {
    /// Non-planar, `p_r != 0`: the momentum rows are independent.
    Eccentric,
    /// Non-planar at an apsis (`p_r = 0`): the `r` row together with the
    /// `p_psi` and `p_phi` rows. Its leading entry vanishes exactly on
    /// circular orbits.
    Apsis,
    /// Planar (`psi = pi/2`, `p_psi = 0`): the `p_g` and `p_theta` columns
    /// are dependent.
    Planar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    /// Rows `(r, psi, phi, p_r, p_psi, p_phi)`, columns the three actions.
    pub matrix: DMatrix<f64>,
    pub case: JacobianCase,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

fn report(matrix: DMatrix<f64>, case: JacobianCase) -> JacobianReport {
    let mut sv: Vec<f64> = matrix.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let rank = numerical_rank(&matrix, RANK_TOL);
    JacobianReport { matrix, case, rank, singular_values: sv }
}

fn check_non_vertical(sp: &SphericalPoint) -> Result<()> {
    if sp.p_phi == 0.0 {
        return Err(Error::Domain("vertical orbits (p_phi = 0) are outside the Delaunay chart".into()));
    }
    Ok(())
}

fn is_planar(sp: &SphericalPoint) -> bool {
    sp.psi.cos().abs() < TAG_TOL && sp.p_psi.abs() < TAG_TOL
}

/// `-1/r + p_psi^2/r^2 + p_phi^2/(r^2 sin^2 psi)`, the factor of the `r`
/// derivative of `p_l` (which equals `-(p_l^3/r)` times it).
pub fn radial_factor(sp: &SphericalPoint) -> f64 {
    -1.0 / sp.r + sp.total_angular_momentum_squared() / (sp.r * sp.r)
}

/// Closed form of [`radial_factor`] in terms of the energy:
/// `1/r + 2E - p_r^2`. At an apsis it vanishes exactly for circular orbits.
pub fn radial_factor_identity(sp: &SphericalPoint) -> f64 {
    let e = -0.5 * minus_two_energy(sp);
    1.0 / sp.r + 2.0 * e - sp.p_r * sp.p_r
}

/// Jacobian of `(p_l, p_g, p_theta)` with respect to the spherical
/// coordinates.
pub fn delaunay_jacobian(sp: &SphericalPoint) -> Result<JacobianReport> {
    let act = delaunay_actions(sp)?;
    check_non_vertical(sp)?;
    let (s, c) = sp.psi.sin_cos();
    let r = sp.r;
    let pl3 = act.p_l.powi(3);
    let pg = act.p_g;
    let pf2 = sp.p_phi * sp.p_phi;
    let mut m = DMatrix::zeros(6, 3);
    // p_l
    m[(0, 0)] = -pl3 / r * radial_factor(sp);
    m[(1, 0)] = -pl3 * pf2 * c / (r * r * s.powi(3));
    m[(3, 0)] = pl3 * sp.p_r;
    m[(4, 0)] = pl3 * sp.p_psi / (r * r);
    m[(5, 0)] = pl3 * sp.p_phi / (r * r * s * s);
    // p_g
    m[(1, 1)] = -pf2 * c / (s.powi(3) * pg);
    m[(4, 1)] = sp.p_psi / pg;
    m[(5, 1)] = sp.p_phi / (s * s * pg);
    // p_theta
    m[(5, 2)] = 1.0;
    let case = if is_planar(sp) {
        JacobianCase::Planar
    } else if sp.p_r.abs() < TAG_TOL {
        JacobianCase::Apsis
    } else {
        JacobianCase::Eccentric
    };
    Ok(report(m, case))
}

/// `p_eta = A3 = (cos psi / r)(p_psi^2 + p_phi^2/sin^2 psi) + sin psi p_r p_psi - cos psi`.
pub fn lrl_action(sp: &SphericalPoint) -> Result<f64> {
    sp.check_chart()?;
    let (s, c) = sp.psi.sin_cos();
    Ok(c / sp.r * sp.total_angular_momentum_squared() + s * sp.p_r * sp.p_psi - c)
}

/// Jacobian of `(p_l, p_eta, p_theta)` with respect to the spherical
/// coordinates.
pub fn lrl_jacobian(sp: &SphericalPoint) -> Result<JacobianReport> {
    let d = delaunay_jacobian(sp)?;
    let (s, c) = sp.psi.sin_cos();
    let r = sp.r;
    let g2 = sp.total_angular_momentum_squared();
    let pf2 = sp.p_phi * sp.p_phi;
    let mut m = d.matrix;
    m[(0, 1)] = -c * g2 / (r * r);
    m[(1, 1)] = -s * g2 / r - 2.0 * pf2 * c * c / (r * s.powi(3)) + c * sp.p_r * sp.p_psi + s;
    m[(2, 1)] = 0.0;
    m[(3, 1)] = s * sp.p_psi;
    m[(4, 1)] = 2.0 * c * sp.p_psi / r + s * sp.p_r;
    m[(5, 1)] = 2.0 * c * sp.p_phi / (r * s * s);
    Ok(report(m, d.case))
}

/// Linearized Delaunay flow of the Kepler Hamiltonian `-1/(2 p_l^2)` at time
/// `t`, in the order `(l, g, theta, p_l, p_g, p_theta)`: the identity plus
/// `-3t/p_l^4` in the `(l, p_l)` entry.
pub fn delaunay_linearized_flow(p_l: f64, t: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(6, 6);
    m[(0, 3)] = -3.0 * t / p_l.powi(4);
    m
}

/// Return map of the torus family `Sigma_{k,l}` and its transversality test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapReport {
    pub family: FamilyId,
    pub p_l: f64,
    /// Return time `2 pi l = 2 pi k p_l^3`.
    pub period: f64,
    pub matrix: DMatrix<f64>,
    /// `nu = -p_l^3 d_{p_l} + d_{p_theta}`, normal to the level set of `H`.
    pub normal: DVector<f64>,
    /// `d_l` component of `(Psi - I) nu`, equal to `6 pi k p_l^2`.
    pub displacement: f64,
    pub morse_bott: bool,
}

pub fn delaunay_return_map(k: u64, l: u64) -> Result<ReturnMapReport> {
    let (family, g) = FamilyId::new(k, l)?;
    if g != 1 {
        return Err(Error::InvalidArgument(format!("({k}, {l}) is not coprime")));
    }
    let p_l = (l as f64 / k as f64).cbrt();
    let period = 2.0 * PI * l as f64;
    let mut matrix = DMatrix::identity(6, 6);
    matrix[(0, 3)] = -6.0 * PI * k as f64 / p_l;
    let mut normal = DVector::zeros(6);
    normal[3] = -p_l.powi(3);
    normal[5] = 1.0;
    let moved = &matrix * &normal - &normal;
    let displacement = moved[0];
    Ok(ReturnMapReport { family, p_l, period, matrix, normal, displacement, morse_bott: displacement != 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::invariants;
    use approx::assert_relative_eq;

    fn numeric_jacobian(f: impl Fn(&SphericalPoint) -> [f64; 3], sp: &SphericalPoint) -> DMatrix<f64> {
        let h = 1e-6;
        let mut m = DMatrix::zeros(6, 3);
        for i in 0..6 {
            let mut a = sp.to_array();
            let mut b = sp.to_array();
            a[i] += h;
            b[i] -= h;
            let fa = f(&SphericalPoint::from_array(a));
            let fb = f(&SphericalPoint::from_array(b));
            for j in 0..3 {
                m[(i, j)] = (fa[j] - fb[j]) / (2.0 * h);
            }
        }
        m
    }

    fn inclined() -> SphericalPoint {
        to_spherical(&PhasePoint::new([0.9, 0.2, 0.3], [-0.2, 0.8, 0.35])).unwrap()
    }

    #[test]
    fn chart_example() {
        let sp = to_spherical(&PhasePoint::new([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])).unwrap();
        assert_relative_eq!(sp.r, 1.0);
        assert_relative_eq!(sp.psi, PI / 2.0);
        assert_relative_eq!(sp.phi, 0.0);
        assert_relative_eq!(sp.p_r, 0.0);
        assert!(sp.p_psi.abs() < 1e-16);
        assert_relative_eq!(sp.p_phi, 1.0);
        assert!(to_spherical(&PhasePoint::new([0.0, 0.0, 1.0], [1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn actions_match_invariants() {
        let x = PhasePoint::new([0.9, 0.2, 0.3], [-0.2, 0.8, 0.35]);
        let inv = invariants(&x).unwrap();
        let a = delaunay_actions(&to_spherical(&x).unwrap()).unwrap();
        assert_relative_eq!(a.p_l, 1.0 / (-2.0 * inv.energy).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(a.p_g, inv.angular_momentum.norm(), epsilon = 1e-12);
        assert_relative_eq!(a.p_theta, inv.angular_momentum[2], epsilon = 1e-12);
        assert_relative_eq!(lrl_action(&to_spherical(&x).unwrap()).unwrap(), inv.lrl[2], epsilon = 1e-12);
        let rest = delaunay_actions(&to_spherical(&PhasePoint::new([2.0, 0.0, 0.0], [0.0; 3])).unwrap()).unwrap();
        assert_eq!((rest.p_l, rest.p_g, rest.p_theta), (1.0, 0.0, 0.0));
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let sp = inclined();
        let d = delaunay_jacobian(&sp).unwrap();
        let fd = numeric_jacobian(
            |s| {
                let a = delaunay_actions(s).unwrap();
                [a.p_l, a.p_g, a.p_theta]
            },
            &sp,
        );
        assert!((&d.matrix - fd).amax() < 1e-7);
        let l = lrl_jacobian(&sp).unwrap();
        let fd = numeric_jacobian(|s| [delaunay_actions(s).unwrap().p_l, lrl_action(s).unwrap(), s.p_phi], &sp);
        assert!((&l.matrix - fd).amax() < 1e-7);
    }

    #[test]
    fn rank_cases() {
        let d = delaunay_jacobian(&inclined()).unwrap();
        assert_eq!((d.case, d.rank), (JacobianCase::Eccentric, 3));
        // apsis of an eccentric inclined orbit
        let apsis = SphericalPoint { r: 1.0, psi: 1.2, phi: 0.0, p_r: 0.0, p_psi: 0.4, p_phi: 1.1 };
        let d = delaunay_jacobian(&apsis).unwrap();
        assert_eq!((d.case, d.rank), (JacobianCase::Apsis, 3));
        assert_relative_eq!(radial_factor(&apsis), radial_factor_identity(&apsis), epsilon = 1e-14);
        let planar = to_spherical(&PhasePoint::new([1.0, 0.0, 0.0], [0.3, 1.0, 0.0])).unwrap();
        let d = delaunay_jacobian(&planar).unwrap();
        assert_eq!(d.case, JacobianCase::Planar);
        assert!(d.rank < 3);
        assert_eq!(lrl_jacobian(&planar).unwrap().rank, 3);
    }

    #[test]
    fn circular_inclined_orbit_is_rank_deficient() {
        // circular orbit of radius 1 tilted about the q1-axis
        let (s, c) = 0.4f64.sin_cos();
        let sp = to_spherical(&PhasePoint::new([1.0, 0.0, 0.0], [0.0, c, s])).unwrap();
        assert!(radial_factor(&sp).abs() < 1e-14);
        assert_eq!(delaunay_jacobian(&sp).unwrap().rank, 2);
    }

    #[test]
    fn return_map_of_eight_one() {
        let rm = delaunay_return_map(8, 1).unwrap();
        assert_eq!(rm.p_l, 0.5);
        assert_relative_eq!(rm.matrix[(0, 3)], -96.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(rm.displacement, 12.0 * PI, epsilon = 1e-12);
        let one = delaunay_return_map(1, 1).unwrap();
        assert_relative_eq!(one.displacement, 6.0 * PI, epsilon = 1e-12);
        assert!(delaunay_return_map(4, 2).is_err());
        assert!((delaunay_linearized_flow(0.5, rm.period) - &rm.matrix).amax() < 1e-12);
    }
}
