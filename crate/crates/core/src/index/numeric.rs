//! Indices of the isolated orbits from integrated linearized flows.
//!
//! Circular orbits: the linearized rotating flow in cylindrical coordinates,
//! restricted to the planar frame. Collision orbits: the linearized
//! regularized Kepler flow and the linearized `L3` flow, each restricted to
//! the collision frame; their indices add up.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::closed_form::{circular_period, cz_circular, cz_collision, CircularSign};
use super::crossing::{rs_index_scanned, Crossing, CrossingOptions};
use super::frames::{frame_collision, frame_planar, Frame};
use super::path::{SampledPath, SymplecticPath};
use super::HalfInteger;
use crate::catalog::{circular_energies, OrbitKind};
use crate::dynamics::{split_variational, variational_initial, CylindricalRotatingSys, HamSys, MoserKrSys, SphereL3Sys, VariationalOde};
use crate::error::{Error, Result};
use crate::integrate::{integrate, integrate_samples, IntegratorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericConfig {
    pub integrator: IntegratorConfig,
    /// Grid points per simple period.
    pub samples_per_period: usize,
    pub crossing: CrossingOptions,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig { integrator: IntegratorConfig::default(), samples_per_period: 2048, crossing: CrossingOptions::default() }
    }
}

/// One integrated piece of the index computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericPiece {
    pub name: String,
    pub duration: f64,
    pub index: HalfInteger,
    pub crossings: Vec<Crossing>,
    pub max_symplectic_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericIndexReport {
    pub kind: OrbitKind,
    pub cover: u32,
    pub jacobi: f64,
    pub index: HalfInteger,
    pub closed_form: HalfInteger,
    pub pieces: Vec<NumericPiece>,
}

impl NumericIndexReport {
    pub fn agrees(&self) -> bool {
        self.index == self.closed_form
    }
}

/// Integrates the linearized flow of `sys` from `base` on a uniform grid and
/// wraps the frame block as a sampled path that can be re-evaluated anywhere.
fn frame_path(sys: Arc<dyn HamSys>, frame: &Frame, duration: f64, samples: usize, cfg: &IntegratorConfig) -> Result<SymplecticPath> {
    let d = sys.dim();
    let basis = frame.basis();
    let binv = basis.clone().try_inverse().ok_or_else(|| Error::Domain("frame is not a basis".into()))?;
    let times: Vec<f64> = (0..=samples).map(|i| duration * i as f64 / samples as f64).collect();
    let y0 = variational_initial(&frame.base);
    let states = {
        let ode = VariationalOde { sys: sys.as_ref() };
        let mut s = vec![y0.clone()];
        s.extend(integrate_samples(&ode, &y0, &times[1..], cfg)?);
        s
    };
    let matrices: Vec<DMatrix<f64>> = states.iter().map(|y| frame.restrict(&binv, &split_variational(y, d).1)).collect();
    let grid = times.clone();
    let frame = frame.clone();
    let cfg = *cfg;
    let refiner = Arc::new(move |t: f64| -> Result<DMatrix<f64>> {
        let i = match grid.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let ode = VariationalOde { sys: sys.as_ref() };
        let y = integrate(&ode, &states[i], t - grid[i], &cfg)?;
        Ok(frame.restrict(&binv, &split_variational(&y, d).1))
    });
    Ok(SymplecticPath::Sampled(SampledPath::new(times, matrices, Some(refiner))?))
}

fn piece(name: &str, path: &SymplecticPath, opts: &CrossingOptions) -> Result<NumericPiece> {
    let rep = rs_index_scanned(path, opts)?;
    Ok(NumericPiece {
        name: name.to_string(),
        duration: path.duration(),
        index: rep.index,
        crossings: rep.crossings,
        max_symplectic_defect: rep.max_symplectic_defect,
    })
}

/// Sphere-chart sign of a collision orbit: the orbit on the positive `q3`
/// half-axis (`A = (0, 0, -1)`) is the `-1` branch.
pub fn collision_sign(kind: OrbitKind) -> Option<f64> {
    match kind {
        OrbitKind::CollisionPlus => Some(-1.0),
        OrbitKind::CollisionMinus => Some(1.0),
        _ => None,
    }
}

/// Conley-Zehnder index of the `N`-fold cover of an isolated orbit at
/// Jacobi constant `c`, computed from the integrated linearized flow.
pub fn numeric_cz(c: f64, kind: OrbitKind, cover: u32, cfg: &NumericConfig) -> Result<NumericIndexReport> {
    if cover == 0 {
        return Err(Error::InvalidArgument("cover must be at least 1".into()));
    }
    cfg.integrator.validate()?;
    let samples = cfg.samples_per_period * cover as usize;
    let n = cover as f64;
    let (pieces, closed_form) = match kind {
        OrbitKind::Retrograde | OrbitKind::Direct => {
            let sign = if kind == OrbitKind::Retrograde { CircularSign::Retrograde } else { CircularSign::Direct };
            let roots = circular_energies(c)?;
            let energy = match sign {
                CircularSign::Retrograde => roots.retrograde(),
                CircularSign::Direct => roots.direct().ok_or(Error::AboveCritical { c })?,
            };
            let frame = frame_planar(energy, sign)?;
            let duration = n * circular_period(energy, sign)?;
            let path = frame_path(Arc::new(CylindricalRotatingSys), &frame, duration, samples, &cfg.integrator)?;
            (vec![piece("rotating", &path, &cfg.crossing)?], cz_circular(energy, sign, cover)?)
        }
        OrbitKind::CollisionPlus | OrbitKind::CollisionMinus => {
            if !(c < 0.0) {
                return Err(Error::Domain(format!("collision orbits need c < 0, got {c}")));
            }
            let r = (-2.0 * c).sqrt();
            let frame = frame_collision(r, collision_sign(kind).unwrap())?;
            let kepler = frame_path(Arc::new(MoserKrSys { r }), &frame, 2.0 * PI * n / r, samples, &cfg.integrator)?;
            let rotation = frame_path(Arc::new(SphereL3Sys), &frame, 2.0 * PI * n / r.powi(3), samples, &cfg.integrator)?;
            (vec![piece("kepler", &kepler, &cfg.crossing)?, piece("rotation", &rotation, &cfg.crossing)?], cz_collision(cover)?)
        }
        OrbitKind::Family => return Err(Error::InvalidArgument("numeric indices cover the isolated orbits only".into())),
    };
    let index = pieces.iter().map(|p| p.index).sum();
    Ok(NumericIndexReport { kind, cover, jacobi: c, index, closed_form, pieces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_retrograde_orbit() {
        let rep = numeric_cz(-2.1, OrbitKind::Retrograde, 1, &NumericConfig::default()).unwrap();
        assert_eq!(rep.index, HalfInteger::from_int(2));
        assert!(rep.agrees());
        let cr = &rep.pieces[0].crossings;
        assert_eq!(cr.len(), 1);
        assert_eq!((cr[0].time, cr[0].signature, cr[0].kernel_dim), (0.0, 4, 4));
    }

    #[test]
    fn doubled_collision_orbit() {
        let rep = numeric_cz(-2.1, OrbitKind::CollisionPlus, 2, &NumericConfig::default()).unwrap();
        assert_eq!(rep.index, HalfInteger::from_int(8));
        assert_eq!(rep.pieces[0].index, HalfInteger::from_int(8));
        assert_eq!(rep.pieces[1].index, HalfInteger::ZERO);
    }
}
