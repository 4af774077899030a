//! Closed-form indices of the periodic orbits of the rotating Kepler problem.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::crossing::{rs_index, CrossingOptions};
use super::path::{AnalyticKind, SymplecticPath};
use super::HalfInteger;
use crate::catalog::{resonance_energy, FamilyId};
use crate::error::{Error, Result};
use crate::math::nearest_integer;

/// Direction of a circular orbit relative to the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircularSign {
    /// `L3 > 0`.
    Retrograde,
    /// `L3 < 0`.
    Direct,
}

impl CircularSign {
    /// `omega0 = s / sqrt(-2E)` with `s = +1` for retrograde orbits.
    pub fn omega0(self, energy: f64) -> f64 {
        let w = 1.0 / (-2.0 * energy).sqrt();
        match self {
            CircularSign::Retrograde => w,
            CircularSign::Direct => -w,
        }
    }
}

fn check_energy(energy: f64) -> Result<f64> {
    if !(energy < 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!("circular orbits need E < 0, got {energy}")));
    }
    Ok((-2.0 * energy).powf(1.5))
}

/// Rotation numbers `mu_+- = x / (x +- 1)` with `x = (-2E)^{3/2}`.
/// The direct value needs `E < -1/2`.
pub fn rotation_number(energy: f64, sign: CircularSign) -> Result<f64> {
    let x = check_energy(energy)?;
    match sign {
        CircularSign::Retrograde => Ok(x / (x + 1.0)),
        CircularSign::Direct => {
            if !(x > 1.0) {
                return Err(Error::Domain(format!("the direct circular orbit needs E < -1/2, got {energy}")));
            }
            Ok(x / (x - 1.0))
        }
    }
}

/// Period of the circular orbit in the rotating frame, `2 pi / |x +- 1|`.
pub fn circular_period(energy: f64, sign: CircularSign) -> Result<f64> {
    let x = check_energy(energy)?;
    let d = match sign {
        CircularSign::Retrograde => x + 1.0,
        CircularSign::Direct => x - 1.0,
    };
    if !(d.abs() > 0.0) {
        return Err(Error::Domain("the direct orbit at E = -1/2 is a circle of fixed points".into()));
    }
    Ok(2.0 * PI / d.abs())
}

/// Conley-Zehnder index of the `N`-fold cover of a circular orbit,
/// `2 + 4 floor(N mu_+-)`.
pub fn cz_circular(energy: f64, sign: CircularSign, cover: u32) -> Result<HalfInteger> {
    if cover == 0 {
        return Err(Error::InvalidArgument("cover must be at least 1".into()));
    }
    let mu = rotation_number(energy, sign)?;
    let nm = cover as f64 * mu;
    let (dist, m) = nearest_integer(nm);
    if dist <= 1e-12 * nm.max(1.0) {
        let m = m as u64;
        let n = cover as u64;
        let (k, l) = match sign {
            CircularSign::Retrograde => (m, n.saturating_sub(m)),
            CircularSign::Direct => (m, m.saturating_sub(n)),
        };
        return Err(Error::ResonantEnergy { energy, cover, k, l });
    }
    Ok(HalfInteger::from_int(2 + 4 * nm.floor() as i64))
}

/// Conley-Zehnder index of the `N`-fold collision orbit, `4N`.
pub fn cz_collision(cover: u32) -> Result<HalfInteger> {
    if cover == 0 {
        return Err(Error::InvalidArgument("cover must be at least 1".into()));
    }
    Ok(HalfInteger::from_int(4 * cover as i64))
}

/// Robbin-Salamon index of the Morse-Bott family `Sigma_{k,l}`, `4k - 1/2`.
pub fn rs_family(family: FamilyId) -> HalfInteger {
    HalfInteger::from_doubled(8 * family.k as i64 - 1)
}

/// Dimension of the family as a Morse-Bott manifold in the energy surface.
pub const FAMILY_DIMENSION: i64 = 3;

/// Degree shift of a family in the Morse-Bott spectral sequence,
/// `mu_RS - dim/2 = 4k - 2`.
pub fn morse_bott_shift(family: FamilyId) -> HalfInteger {
    rs_family(family) - HalfInteger::from_doubled(FAMILY_DIMENSION)
}

/// Both halves of the collision-orbit index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub kepler: HalfInteger,
    pub rotation: HalfInteger,
    pub total: HalfInteger,
}

/// Index of `gamma_c^N` as the sum of the regularized Kepler part over
/// `N` periods `2 pi / r` and the `L3` part over the physical period
/// `2 pi N / r^3`.
pub fn decomposition_index(r: f64, cover: u32, opts: &CrossingOptions) -> Result<DecompositionReport> {
    if cover == 0 {
        return Err(Error::InvalidArgument("cover must be at least 1".into()));
    }
    let n = cover as f64;
    let kepler = rs_index(&SymplecticPath::analytic(AnalyticKind::CollisionKepler { r }, 2.0 * PI * n / r)?, opts)?.index;
    let rotation = rs_index(&SymplecticPath::analytic(AnalyticKind::AngularMomentum, 2.0 * PI * n / r.powi(3))?, opts)?.index;
    Ok(DecompositionReport { kepler, rotation, total: kepler + rotation })
}

/// Energies at which the index of the `N`-fold cover jumps, in increasing
/// order. Retrograde covers drop by 4 at `E_{N-k,k}` (`k < N`); direct covers
/// rise by 4 at `E_{N+k,k}`, listed for `k <= k_limit`.
pub fn index_jump_energies(sign: CircularSign, cover: u32, k_limit: u32) -> Vec<(f64, u64, u64)> {
    let n = cover as u64;
    let mut out: Vec<(f64, u64, u64)> = match sign {
        CircularSign::Retrograde => (1..n).map(|k| (resonance_energy(n - k, k), n - k, k)).collect(),
        CircularSign::Direct => (1..=k_limit as u64).map(|k| (resonance_energy(n + k, k), n + k, k)).collect(),
    };
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_at_reference_energies() {
        // c = -2.1: E+ ~ -2.544, E- ~ -1.529
        let ep = -2.5436;
        let em = -1.5292;
        assert_eq!(cz_circular(ep, CircularSign::Retrograde, 1).unwrap(), HalfInteger::from_int(2));
        assert_eq!(cz_circular(ep, CircularSign::Retrograde, 3).unwrap(), HalfInteger::from_int(10));
        assert_eq!(cz_circular(em, CircularSign::Direct, 1).unwrap(), HalfInteger::from_int(6));
        assert_eq!(cz_circular(em, CircularSign::Direct, 2).unwrap(), HalfInteger::from_int(10));
    }

    #[test]
    fn resonant_energy_is_reported() {
        // 3 mu_+ = 2 at E_{2,1}
        let e = resonance_energy(2, 1);
        let err = cz_circular(e, CircularSign::Retrograde, 3).unwrap_err();
        assert!(matches!(err, Error::ResonantEnergy { k: 2, l: 1, .. }), "{err:?}");
        let err = cz_circular(resonance_energy(8, 1), CircularSign::Direct, 7).unwrap_err();
        assert!(matches!(err, Error::ResonantEnergy { k: 8, l: 1, .. }), "{err:?}");
    }

    #[test]
    fn family_index_and_shift() {
        let f = FamilyId::new(8, 1).unwrap().0;
        assert_eq!(rs_family(f).to_string(), "63/2");
        assert_eq!(morse_bott_shift(f), HalfInteger::from_int(30));
    }

    #[test]
    fn collision_decomposition() {
        let r = 4.2f64.sqrt();
        for n in 1..=4 {
            let d = decomposition_index(r, n, &CrossingOptions::default()).unwrap();
            assert_eq!(d.kepler, HalfInteger::from_int(4 * n as i64));
            assert_eq!(d.rotation, HalfInteger::ZERO);
            assert_eq!(d.total, cz_collision(n).unwrap());
        }
    }

    #[test]
    fn direct_orbit_needs_deep_energy() {
        assert!(cz_circular(-0.4, CircularSign::Direct, 1).is_err());
        assert!(circular_period(-0.5, CircularSign::Direct).is_err());
    }
}
