//! C interface to `kepler-cz`.
//!
//! Every fallible function returns a [`KczStatus`]; on failure the message is
//! available from [`kcz_last_error`] on the same thread. Indices cross the
//! boundary as doubled integers, so `63/2` arrives as `63`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use kepler_cz::catalog::{catalog, isolated_orbit, FamilyId, OrbitKind, OrbitRecord};
use kepler_cz::dynamics::{invariants, PhasePoint};
use kepler_cz::index::{numeric_cz, rs_family, NumericConfig};
use kepler_cz::ledger::compare_with_reference;
use kepler_cz::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KczStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// Input outside the model: above the critical value, off the chart.
    Domain = 2,
    /// The Jacobi constant or energy sits on a bifurcation or resonance.
    NotGeneric = 3,
    /// Integration or crossing detection failed.
    Numerical = 4,
    /// A numeric result disagrees with its closed form.
    Verification = 5,
    NullPointer = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KczOrbitKind {
    Retrograde = 0,
    Direct = 1,
    CollisionPlus = 2,
    CollisionMinus = 3,
    Family = 4,
}

impl From<OrbitKind> for KczOrbitKind {
    fn from(k: OrbitKind) -> Self {
        match k {
            OrbitKind::Retrograde => KczOrbitKind::Retrograde,
            OrbitKind::Direct => KczOrbitKind::Direct,
            OrbitKind::CollisionPlus => KczOrbitKind::CollisionPlus,
            OrbitKind::CollisionMinus => KczOrbitKind::CollisionMinus,
            OrbitKind::Family => KczOrbitKind::Family,
        }
    }
}

impl From<KczOrbitKind> for OrbitKind {
    fn from(k: KczOrbitKind) -> Self {
        match k {
            KczOrbitKind::Retrograde => OrbitKind::Retrograde,
            KczOrbitKind::Direct => OrbitKind::Direct,
            KczOrbitKind::CollisionPlus => OrbitKind::CollisionPlus,
            KczOrbitKind::CollisionMinus => OrbitKind::CollisionMinus,
            KczOrbitKind::Family => OrbitKind::Family,
        }
    }
}

/// One catalog row. `k` and `l` are zero for isolated orbits.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KczOrbit {
    pub kind: KczOrbitKind,
    pub k: u64,
    pub l: u64,
    pub cover: u32,
    pub kepler_energy: f64,
    pub period: f64,
    /// Twice the index.
    pub index_doubled: i64,
    pub l3_sign: i8,
}

impl From<&OrbitRecord> for KczOrbit {
    fn from(o: &OrbitRecord) -> Self {
        KczOrbit {
            kind: o.kind.into(),
            k: o.family.map_or(0, |f| f.k),
            l: o.family.map_or(0, |f| f.l),
            cover: o.cover,
            kepler_energy: o.kepler_energy,
            period: o.period,
            index_doubled: o.index.doubled(),
            l3_sign: o.l3_sign,
        }
    }
}

/// Energy, angular momentum and Laplace-Runge-Lenz vector of a state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KczInvariants {
    pub energy: f64,
    pub angular_momentum: [f64; 3],
    pub lrl: [f64; 3],
}

/// Opaque list of catalog rows.
pub struct KczCatalog {
    rows: Vec<KczOrbit>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KczStatus {
    match e {
        Error::InvalidArgument(_) => KczStatus::InvalidArgument,
        Error::Verification(_) => KczStatus::Verification,
        Error::NonGeneric { .. } | Error::ResonantEnergy { .. } => KczStatus::NotGeneric,
        Error::DegenerateCrossing { .. } | Error::NotSymplectic { .. } | Error::Integration(_) => KczStatus::Numerical,
        Error::Domain(_) | Error::AboveCritical { .. } | Error::ChartMismatch(_) | Error::CollisionApproach { .. } => KczStatus::Domain,
    }
}

/// Runs `f`, recording errors and panics for `kcz_last_error`.
fn guard(f: impl FnOnce() -> Result<(), (KczStatus, String)> + UnwindSafe) -> KczStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(f) {
        Ok(Ok(())) => KczStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            KczStatus::Panic
        }
    }
}

fn lib<T>(r: kepler_cz::Result<T>) -> Result<T, (KczStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (KczStatus, String) {
    (KczStatus::NullPointer, format!("{name} is null"))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn kcz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kcz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the orbit catalog at Jacobi constant `c` with covers up to `n_max`
/// and families with `k <= k_max`. Free the result with `kcz_catalog_free`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn kcz_catalog_new(c: f64, n_max: u32, k_max: u64, out: *mut *mut KczCatalog) -> KczStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let rows = lib(catalog(c, n_max, k_max))?.iter().map(KczOrbit::from).collect();
        // SAFETY: checked non-null; the caller guarantees validity.
        unsafe { *out = Box::into_raw(Box::new(KczCatalog { rows })) };
        Ok(())
    })
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `cat` must be null or a handle from `kcz_catalog_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kcz_catalog_len(cat: *const KczCatalog) -> usize {
    // SAFETY: see the function contract.
    unsafe { cat.as_ref() }.map_or(0, |c| c.rows.len())
}

/// Copies row `i` into `out`.
///
/// # Safety
/// `cat` must be a live handle and `out` valid for one `KczOrbit`.
#[no_mangle]
pub unsafe extern "C" fn kcz_catalog_get(cat: *const KczCatalog, i: usize, out: *mut KczOrbit) -> KczStatus {
    guard(|| {
        // SAFETY: see the function contract.
        let cat = unsafe { cat.as_ref() }.ok_or_else(|| null("catalog"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let row = cat.rows.get(i).ok_or_else(|| (KczStatus::InvalidArgument, format!("row {i} out of range (len {})", cat.rows.len())))?;
        // SAFETY: checked non-null.
        unsafe { *out = *row };
        Ok(())
    })
}

/// Releases a catalog. Null is ignored.
///
/// # Safety
/// `cat` must be null or a handle from `kcz_catalog_new`, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn kcz_catalog_free(cat: *mut KczCatalog) {
    if !cat.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(cat) });
    }
}

/// Invariants of the state `(q1, q2, q3, p1, p2, p3)`.
///
/// # Safety
/// `state` must point to six doubles and `out` to one `KczInvariants`.
#[no_mangle]
pub unsafe extern "C" fn kcz_invariants(state: *const f64, out: *mut KczInvariants) -> KczStatus {
    guard(|| {
        if state.is_null() {
            return Err(null("state"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: see the function contract.
        let z = unsafe { std::slice::from_raw_parts(state, 6) };
        let inv = lib(invariants(&PhasePoint::from_slice(z)))?;
        // SAFETY: checked non-null.
        unsafe { *out = KczInvariants { energy: inv.energy, angular_momentum: inv.angular_momentum.into(), lrl: inv.lrl.into() } };
        Ok(())
    })
}

/// Closed-form index (doubled) of the `cover`-fold isolated orbit at `c`.
///
/// # Safety
/// `index_doubled` must be valid for one `int64_t`.
#[no_mangle]
pub unsafe extern "C" fn kcz_cz_closed_form(c: f64, kind: KczOrbitKind, cover: u32, index_doubled: *mut i64) -> KczStatus {
    guard(|| {
        if index_doubled.is_null() {
            return Err(null("index_doubled"));
        }
        if kind == KczOrbitKind::Family {
            return Err((KczStatus::InvalidArgument, "use kcz_rs_family for families".into()));
        }
        let rec = lib(isolated_orbit(c, kind.into(), cover))?;
        // SAFETY: checked non-null.
        unsafe { *index_doubled = rec.index.doubled() };
        Ok(())
    })
}

/// Index (doubled) of the torus family `(k, l)`, which must be coprime.
///
/// # Safety
/// `index_doubled` must be valid for one `int64_t`.
#[no_mangle]
pub unsafe extern "C" fn kcz_rs_family(k: u64, l: u64, index_doubled: *mut i64) -> KczStatus {
    guard(|| {
        if index_doubled.is_null() {
            return Err(null("index_doubled"));
        }
        let (f, g) = lib(FamilyId::new(k, l))?;
        if g != 1 {
            return Err((KczStatus::InvalidArgument, format!("({k}, {l}) is not coprime")));
        }
        // SAFETY: checked non-null.
        unsafe { *index_doubled = rs_family(f).doubled() };
        Ok(())
    })
}

/// Index recomputed from the integrated linearized flow. Both outputs are
/// written whenever the computation finishes; the status is
/// `Verification` when they differ.
///
/// # Safety
/// Both output pointers must be valid for one `int64_t`.
#[no_mangle]
pub unsafe extern "C" fn kcz_cz_numeric(c: f64, kind: KczOrbitKind, cover: u32, numeric_doubled: *mut i64, closed_form_doubled: *mut i64) -> KczStatus {
    guard(|| {
        if numeric_doubled.is_null() || closed_form_doubled.is_null() {
            return Err(null("output"));
        }
        if kind == KczOrbitKind::Family {
            return Err((KczStatus::InvalidArgument, "numeric indices cover isolated orbits only".into()));
        }
        let rep = lib(numeric_cz(c, kind.into(), cover, &NumericConfig::default()))?;
        // SAFETY: checked non-null.
        unsafe {
            *numeric_doubled = rep.index.doubled();
            *closed_form_doubled = rep.closed_form.doubled();
        }
        if !rep.agrees() {
            return Err((KczStatus::Verification, format!("numeric {} differs from closed form {}", rep.index, rep.closed_form)));
        }
        Ok(())
    })
}

/// Degree-by-degree comparison with the reference ranks as a JSON string.
/// Free it with `kcz_string_free`.
///
/// # Safety
/// `out` must be valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn kcz_ledger_json(c: f64, degree_cap: i64, out: *mut *mut c_char) -> KczStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let rep = lib(compare_with_reference(c, degree_cap, None, None))?;
        let text = serde_json::to_string(&rep).map_err(|e| (KczStatus::Panic, e.to_string()))?;
        let s = CString::new(text).map_err(|e| (KczStatus::Panic, e.to_string()))?;
        // SAFETY: checked non-null.
        unsafe { *out = s.into_raw() };
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn kcz_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the string came from CString::into_raw.
        drop(unsafe { CString::from_raw(s) });
    }
}
