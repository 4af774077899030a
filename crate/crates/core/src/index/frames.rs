//! Symplectic trivializations of the contact structure along the isolated
//! orbits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::closed_form::CircularSign;
use crate::dynamics::{CylindricalRotatingSys, HamSys, MoserKrSys};
use crate::error::{Error, Result};
use crate::math::{omega_blocks, omega_gram};
use crate::regularization::collision_orbit;

/// Four vectors spanning the contact plane at `base`, with complementary
/// directions that complete them to a basis of the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub base: Vec<f64>,
    pub vectors: Vec<DVector<f64>>,
    pub complement: Vec<DVector<f64>>,
    /// Differential of the Hamiltonian at `base`.
    pub dh: DVector<f64>,
    /// Contact form at `base`.
    pub lambda: DVector<f64>,
}

/// Defects of a frame: `|dH(v)|`, `|lambda(v)|` and the distance of the Gram
/// matrix from the standard form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameCheck {
    pub energy_defect: f64,
    pub contact_defect: f64,
    pub gram_defect: f64,
}

impl FrameCheck {
    pub fn max(&self) -> f64 {
        self.energy_defect.max(self.contact_defect).max(self.gram_defect)
    }
}

impl Frame {
    /// Columns: frame vectors, then the complement.
    pub fn basis(&self) -> DMatrix<f64> {
        let cols: Vec<_> = self.vectors.iter().chain(&self.complement).cloned().collect();
        DMatrix::from_columns(&cols)
    }

    pub fn check(&self) -> FrameCheck {
        let v = DMatrix::from_columns(&self.vectors);
        FrameCheck {
            energy_defect: self.vectors.iter().map(|x| self.dh.dot(x).abs()).fold(0.0, f64::max),
            contact_defect: self.vectors.iter().map(|x| self.lambda.dot(x).abs()).fold(0.0, f64::max),
            gram_defect: (omega_gram(&v) - omega_blocks(4)).amax(),
        }
    }

    /// Block of a linearized flow acting on the frame, after projecting out
    /// the complement.
    pub fn restrict(&self, basis_inverse: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
        let b = self.basis();
        (basis_inverse * m * b).view((0, 0), (4, 4)).into_owned()
    }
}

fn e(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// Frame along a planar circular orbit in cylindrical coordinates
/// `(r, theta, z, p_r, p_theta, p_z)` at the point `(omega0^2, 0, 0, 0, omega0, 0)`:
/// `X1 = d_theta + d_{p_r}/omega0`, `X2 = omega0 d_r`, `X3 = d_{p_z}`, `X4 = d_z`,
/// completed by `N1 = d_theta/omega0` (Reeb direction) and
/// `N2 = omega0 d_{p_theta} + omega0^2 d_r`.
pub fn frame_planar(energy: f64, sign: CircularSign) -> Result<Frame> {
    if !(energy < 0.0) {
        return Err(Error::Domain(format!("circular orbits need E < 0, got {energy}")));
    }
    let w = sign.omega0(energy);
    let base = vec![w * w, 0.0, 0.0, 0.0, w, 0.0];
    let x1 = e(6, 1) + e(6, 3) / w;
    let x2 = e(6, 0) * w;
    let x3 = e(6, 5);
    let x4 = e(6, 2);
    let n1 = e(6, 1) / w;
    let n2 = e(6, 4) * w + e(6, 0) * (w * w);
    let dh = DVector::from_vec(CylindricalRotatingSys.gradient(&base));
    // lambda = p_theta d_theta - r d_{p_r} - z d_{p_z}
    let mut lambda = DVector::zeros(6);
    lambda[1] = base[4];
    lambda[3] = -base[0];
    lambda[5] = -base[2];
    Ok(Frame { base, vectors: vec![x1, x2, x3, x4], complement: vec![n1, n2], dh, lambda })
}

/// Frame `(d_{y1}, d_{x1}, d_{y2}, d_{x2})` along a collision orbit on the
/// unit-sphere chart `(x0..x3, y0..y3)`, completed by the remaining
/// coordinate directions.
pub fn frame_collision(r: f64, sign: f64) -> Result<Frame> {
    let sc = collision_orbit(r, sign, 0.0)?;
    let base = sc.to_vec();
    let vectors = vec![e(8, 5), e(8, 1), e(8, 6), e(8, 2)];
    let complement = vec![e(8, 4), e(8, 0), e(8, 7), e(8, 3)];
    let dh = DVector::from_vec(MoserKrSys { r }.gradient(&base));
    // lambda = y . dx
    let mut lambda = DVector::zeros(8);
    for i in 0..4 {
        lambda[i] = base[4 + i];
    }
    Ok(Frame { base, vectors, complement, dh, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_frame_is_symplectic_in_the_contact_plane() {
        for (e, s) in [(-2.5436, CircularSign::Retrograde), (-1.5292, CircularSign::Direct), (-0.3, CircularSign::Retrograde)] {
            let f = frame_planar(e, s).unwrap();
            assert!(f.check().max() < 1e-12, "{:?}", f.check());
            assert_eq!(crate::math::numerical_rank(&f.basis(), 1e-10), 6);
        }
    }

    #[test]
    fn planar_frame_energy_differential_is_along_n2() {
        // dH = (1 + 1/omega0^3) dp_theta on the orbit
        let e = -2.0;
        let f = frame_planar(e, CircularSign::Retrograde).unwrap();
        let w = CircularSign::Retrograde.omega0(e);
        assert!((f.dh[4] - (1.0 + 1.0 / w.powi(3))).abs() < 1e-12);
        assert!(f.dh.iter().enumerate().all(|(i, v)| i == 4 || v.abs() < 1e-12));
    }

    #[test]
    fn collision_frame_is_symplectic_in_the_contact_plane() {
        let f = frame_collision(4.2f64.sqrt(), -1.0).unwrap();
        assert!(f.check().max() < 1e-14);
    }
}
