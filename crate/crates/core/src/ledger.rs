//! Degree bookkeeping for the positive part of the `S^1`-equivariant
//! symplectic homology of `T*S^3`, built from the periodic orbits of the
//! rotating Kepler problem.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{circular_energies, enumerate_families, family_orbit, genericity_witness, isolated_orbit, FamilyId, OrbitKind, CRITICAL_JACOBI};
use crate::error::{Error, Result};
use crate::index::{cz_circular, morse_bott_shift, rs_family, CircularSign, HalfInteger, FAMILY_DIMENSION};

/// One generator of the chain complex, or one Morse-Bott family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorEntry {
    pub label: String,
    pub kind: OrbitKind,
    pub family: Option<FamilyId>,
    pub cover: u32,
    /// Conley-Zehnder index of an isolated orbit, or the shift of a family.
    pub degree: HalfInteger,
    /// Robbin-Salamon index of a family.
    pub rs_index: Option<HalfInteger>,
    pub period: f64,
    /// Degrees receiving a rank-one contribution: the index of an isolated
    /// orbit; `sh` and `sh + 3` for a family (homology of `S^3`).
    pub contributes: Vec<i64>,
}

/// Rank of the reference group: 1 in degree 2, 2 in even degrees from 4 on.
pub fn sh_reference(degree: i64) -> u32 {
    match degree {
        2 => 1,
        d if d >= 4 && d % 2 == 0 => 2,
        _ => 0,
    }
}

/// Morse-Bott shift `4k - 2` of `Sigma_{k,l}`.
pub fn mbss_shift(k: u64, l: u64) -> Result<i64> {
    let (f, _) = FamilyId::new(k, l)?;
    Ok(4 * f.k as i64 - 2)
}

/// Generators with contributions in degrees `<= degree_cap`, using covers up
/// to `n_max` and families with `k <= k_max`. Sorted by degree, then period.
pub fn generator_table(c: f64, degree_cap: i64, n_max: u32, k_max: u64) -> Result<Vec<GeneratorEntry>> {
    if degree_cap < 1 {
        return Err(Error::InvalidArgument("degree cap must be at least 1".into()));
    }
    if !(c < CRITICAL_JACOBI) {
        return Err(Error::AboveCritical { c });
    }
    if let Some(w) = genericity_witness(c, k_max.max(n_max as u64 + 1)) {
        return Err(w.into_error(c));
    }
    let mut out = Vec::new();
    for kind in [OrbitKind::Retrograde, OrbitKind::Direct, OrbitKind::CollisionPlus, OrbitKind::CollisionMinus] {
        for n in 1..=n_max {
            let rec = isolated_orbit(c, kind, n)?;
            let d = rec.index.as_integer().expect("isolated orbits have integer indices");
            if d > degree_cap {
                // indices grow with the cover
                break;
            }
            out.push(GeneratorEntry {
                label: rec.label(),
                kind,
                family: None,
                cover: n,
                degree: rec.index,
                rs_index: None,
                period: rec.period * n as f64,
                contributes: vec![d],
            });
        }
    }
    for f in enumerate_families(c, k_max)? {
        let sh = morse_bott_shift(f);
        let d = sh.as_integer().expect("family shifts are integers");
        if d > degree_cap {
            continue;
        }
        let rec = family_orbit(c, f);
        out.push(GeneratorEntry {
            label: rec.label(),
            kind: OrbitKind::Family,
            family: Some(f),
            cover: 1,
            degree: sh,
            rs_index: Some(rs_family(f)),
            period: rec.period,
            contributes: [d, d + 3].into_iter().filter(|&x| x <= degree_cap).collect(),
        });
    }
    out.sort_by(|a, b| a.degree.cmp(&b.degree).then(a.period.partial_cmp(&b.period).unwrap()));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeStatus {
    Match,
    Mismatch,
    /// Above the range where the generators cannot interact.
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub degree: i64,
    pub generators: Vec<String>,
    pub multiplicity: u32,
    pub reference: u32,
    pub status: DegreeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub jacobi: f64,
    pub degree_cap: i64,
    /// Largest degree compared with the reference.
    pub verified_up_to: i64,
    pub rows: Vec<DegreeRow>,
    pub generators: Vec<GeneratorEntry>,
    pub all_match: bool,
}

/// Degrees below which no differential can connect generators at `c`.
///
/// With `x_- = (-2E_-)^{3/2}` and `x_+ = (-2E_+)^{3/2}`, the first family has
/// `k = floor(x_-) + 1` and shift `4k - 2`, which is also where the index of
/// the direct orbit first jumps past the regular pattern. Retrograde covers
/// stay regular below `4(floor(x_+) + 2) - 2`.
pub fn verification_limit(c: f64) -> Result<i64> {
    let roots = circular_energies(c)?;
    let direct = roots.direct().ok_or(Error::AboveCritical { c })?;
    let x_minus = (-2.0 * direct).powf(1.5);
    let x_plus = (-2.0 * roots.retrograde()).powf(1.5);
    let k_min = x_minus.floor() as i64 + 1;
    let retro_break = 4 * (x_plus.floor() as i64 + 2) - 2;
    Ok((4 * k_min - 2).min(retro_break) - 1)
}

/// Largest `N` with `c < c^-_{N+1,1}`: below that the isolated orbits alone
/// reproduce the reference up to degree `4N + 4`.
pub fn regime_cover(c: f64) -> u32 {
    let mut n = 0;
    while c < crate::catalog::bifurcation_energies(n as u64 + 2, 1).0 {
        n += 1;
    }
    n
}

/// Per-degree generator counts compared with [`sh_reference`]. Degrees past
/// [`verification_limit`] are reported as unverified.
pub fn compare_with_reference(c: f64, degree_cap: i64, n_max: Option<u32>, k_max: Option<u64>) -> Result<LedgerReport> {
    // index >= 2 N for every isolated cover, and families need 4k - 2 <= cap
    let n_max = n_max.unwrap_or((degree_cap / 2).max(1) as u32);
    let k_max = k_max.unwrap_or(((degree_cap + 2) / 4).max(1) as u64);
    let generators = generator_table(c, degree_cap, n_max, k_max)?;
    let limit = verification_limit(c)?;
    let mut by_degree: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    for d in 1..=degree_cap {
        by_degree.insert(d, Vec::new());
    }
    for g in &generators {
        for &d in &g.contributes {
            let name = if g.family.is_some() && d != g.contributes[0] { format!("{}[+3]", g.label) } else { g.label.clone() };
            by_degree.entry(d).or_default().push(name);
        }
    }
    let mut rows = Vec::new();
    for (degree, gens) in by_degree {
        let multiplicity = gens.len() as u32;
        let reference = sh_reference(degree);
        if multiplicity == 0 && reference == 0 {
            continue;
        }
        let status = if degree > limit {
            DegreeStatus::Unverified
        } else if multiplicity == reference {
            DegreeStatus::Match
        } else {
            DegreeStatus::Mismatch
        };
        rows.push(DegreeRow { degree, generators: gens, multiplicity, reference, status });
    }
    let all_match = rows.iter().all(|r| r.status != DegreeStatus::Mismatch);
    Ok(LedgerReport { jacobi: c, degree_cap, verified_up_to: limit.min(degree_cap), rows, generators, all_match })
}

/// Degrees on both sides of the birth of `Sigma_{k,l}` out of the direct
/// orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCheck {
    pub family: FamilyId,
    pub epsilon: f64,
    /// Degree of `direct^{k-l}` at `c^- - epsilon`, before the family exists.
    pub before: Vec<i64>,
    /// Degree of `direct^{k-l}` at `c^- + epsilon`, then the family's two
    /// contributions.
    pub after: Vec<i64>,
    /// `before` plus the cancelling pair `{4k + 1, 4k + 2}`.
    pub expected_after: Vec<i64>,
    pub passed: bool,
}

/// At birth the family takes over the degree `4k - 2` of the direct orbit,
/// whose index moves to `4k + 2` and pairs with the family's `4k + 1`.
pub fn bifurcation_invariance(k: u64, l: u64, epsilon: f64) -> Result<BifurcationCheck> {
    let (family, _) = FamilyId::new(k, l)?;
    if family.k <= family.l {
        return Err(Error::Domain(format!("family {family} is not born from the direct orbit")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let cover = (family.k - family.l) as u32;
    let (cm, _) = crate::catalog::bifurcation_energies(family.k, family.l);
    let direct_degree = |c: f64| -> Result<i64> {
        let e = circular_energies(c)?.direct().ok_or(Error::AboveCritical { c })?;
        Ok(cz_circular(e, CircularSign::Direct, cover)?.as_integer().unwrap())
    };
    let before = vec![direct_degree(cm - epsilon)?];
    let sh = morse_bott_shift(family).as_integer().unwrap();
    let mut after = vec![direct_degree(cm + epsilon)?, sh, sh + 3];
    after.sort_unstable();
    let four_k = 4 * family.k as i64;
    let mut expected_after = vec![before[0], four_k + 1, four_k + 2];
    expected_after.sort_unstable();
    let passed = before[0] == four_k - 2 && after == expected_after;
    Ok(BifurcationCheck { family, epsilon, before, after, expected_after, passed })
}

/// `mu_RS(Sigma_{k,l}) - dim/2` against `4k - 2`, in exact arithmetic.
pub fn shift_identity_holds(k: u64, l: u64) -> Result<bool> {
    let (f, _) = FamilyId::new(k, l)?;
    let lhs = rs_family(f) - HalfInteger::from_doubled(FAMILY_DIMENSION);
    Ok(lhs == HalfInteger::from_int(mbss_shift(k, l)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_ranks() {
        assert_eq!(sh_reference(2), 1);
        assert_eq!(sh_reference(6), 2);
        assert_eq!(sh_reference(3), 0);
        assert_eq!(sh_reference(0), 0);
    }

    #[test]
    fn ledger_at_reference_jacobi_constant() {
        let rep = compare_with_reference(-2.1, 10, None, None).unwrap();
        assert!(rep.all_match);
        let counts: Vec<_> = rep.rows.iter().map(|r| (r.degree, r.multiplicity)).collect();
        assert_eq!(counts, vec![(2, 1), (4, 2), (6, 2), (8, 2), (10, 2)]);
        assert!(rep.rows.iter().all(|r| r.status == DegreeStatus::Match));
        let six = &rep.rows[2].generators;
        assert!(six.contains(&"retrograde^2".to_string()) && six.contains(&"direct^1".to_string()));
    }

    #[test]
    fn verified_range_at_reference_jacobi_constant() {
        assert_eq!(verification_limit(-2.1).unwrap(), 21);
        let rep = compare_with_reference(-2.1, 26, None, None).unwrap();
        assert!(rep.all_match);
        assert!(rep.rows.iter().filter(|r| r.degree <= 20).all(|r| r.status == DegreeStatus::Match));
        assert!(rep.rows.iter().filter(|r| r.degree > 21).all(|r| r.status == DegreeStatus::Unverified));
        let fam = rep.generators.iter().find(|g| g.family == Some(FamilyId { k: 6, l: 1 })).unwrap();
        assert_eq!(fam.contributes, vec![22, 25]);
    }

    #[test]
    fn small_cap() {
        let rep = compare_with_reference(-2.1, 3, None, None).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!((rep.rows[0].degree, rep.rows[0].multiplicity), (2, 1));
    }

    #[test]
    fn shifts() {
        assert_eq!(mbss_shift(8, 1).unwrap(), 30);
        for k in 1..=50 {
            assert!(shift_identity_holds(k, 1).unwrap());
        }
    }

    #[test]
    fn regime() {
        assert_eq!(regime_cover(-2.1), 4);
    }

    #[test]
    fn bifurcations_preserve_the_ledger() {
        for (k, l) in [(2, 1), (4, 1), (8, 1)] {
            let b = bifurcation_invariance(k, l, 1e-3).unwrap();
            assert!(b.passed, "{b:?}");
        }
        assert!(bifurcation_invariance(1, 2, 1e-3).is_err());
    }
}
