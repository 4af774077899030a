//! Crossing detection and the Robbin-Salamon index
//! `mu = sig(Q_0)/2 + sum_{0<t<T} sig(Q_t) + sig(Q_T)/2`, where
//! `Q_t = Omega Psi'(t)` restricted to `ker(Psi(t) - I)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::path::SymplecticPath;
use super::HalfInteger;
use crate::error::{Error, Result};
use crate::math::{inertia, omega_blocks, symplectic_defect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingOptions {
    /// Grid size for paths without their own samples.
    pub samples: usize,
    /// A refined minimum of the smallest singular value below this is a crossing.
    pub dip: f64,
    /// Width of the refined bracket.
    pub time_tol: f64,
    /// Singular values below this span the kernel.
    pub kernel_tol: f64,
    /// Central-difference step for the derivative of sampled paths.
    pub derivative_step: f64,
    pub symplectic_tol: f64,
    /// Eigenvalues of the crossing form below this fraction of the largest count as zero.
    pub form_zero_tol: f64,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        CrossingOptions {
            samples: 4096,
            dip: 1e-4,
            time_tol: 1e-10,
            kernel_tol: 1e-7,
            derivative_step: 1e-6,
            symplectic_tol: 1e-6,
            form_zero_tol: 1e-6,
        }
    }
}

/// One crossing of a symplectic path with the Maslov cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub time: f64,
    pub kernel_dim: usize,
    pub signature: i64,
    pub endpoint: bool,
    /// Eigenvalues of the crossing form on the kernel.
    pub form_eigenvalues: Vec<f64>,
    /// Contribution to the index (half the signature at an endpoint).
    pub contribution: HalfInteger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub index: HalfInteger,
    pub crossings: Vec<Crossing>,
    pub max_symplectic_defect: f64,
}

fn smallest_singular(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    sv.min()
}

fn shifted(psi: &DMatrix<f64>) -> DMatrix<f64> {
    psi - DMatrix::<f64>::identity(psi.nrows(), psi.ncols())
}

/// Kernel basis of `Psi - I` as orthonormal columns.
fn kernel_basis(psi: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = shifted(psi).svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < tol)
        .map(|(i, _)| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(psi.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Evaluates the crossing form at `t`. Returns `None` when the kernel is empty.
fn crossing_at(path: &SymplecticPath, t: f64, endpoint: bool, opts: &CrossingOptions) -> Result<Option<Crossing>> {
    let psi = path.value(t)?;
    let k = kernel_basis(&psi, opts.kernel_tol);
    if k.ncols() == 0 {
        return Ok(None);
    }
    let dpsi = path.derivative(t, opts.derivative_step)?;
    let om = omega_blocks(psi.nrows());
    let q = k.transpose() * om * dpsi * &k;
    let q = (&q + q.transpose()) * 0.5;
    let (pos, neg, zero) = inertia(&q, opts.form_zero_tol);
    if zero > 0 {
        return Err(Error::DegenerateCrossing { time: t, detail: format!("crossing form has {zero} zero eigenvalue(s)") });
    }
    let mut eig: Vec<f64> = q.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let signature = pos as i64 - neg as i64;
    let contribution = if endpoint { HalfInteger::from_doubled(signature) } else { HalfInteger::from_int(signature) };
    Ok(Some(Crossing { time: t, kernel_dim: k.ncols(), signature, endpoint, form_eigenvalues: eig, contribution }))
}

/// Golden-section minimization of `sigma_min(Psi(t) - I)` on `[a, b]`.
fn refine_minimum(path: &SymplecticPath, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |t: f64| -> Result<f64> { Ok(smallest_singular(&shifted(&path.value(t)?))) };
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    // the minimum may sit on an end of the bracket
    let mut best = (0.5 * (a + b), f(0.5 * (a + b))?);
    for t in [a, b] {
        let v = f(t)?;
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

fn check_start(path: &SymplecticPath, opts: &CrossingOptions) -> Result<()> {
    let psi0 = path.value(0.0)?;
    let off = shifted(&psi0).amax();
    if off > opts.kernel_tol {
        return Err(Error::InvalidArgument(format!("path does not start at the identity (defect {off:e})")));
    }
    Ok(())
}

fn finish(crossings: Vec<Crossing>, defect: f64) -> IndexReport {
    let index = crossings.iter().map(|c| c.contribution).sum();
    IndexReport { index, crossings, max_symplectic_defect: defect }
}

/// Robbin-Salamon index. Closed-form paths use their exact crossing times;
/// every other path goes through [`rs_index_scanned`].
pub fn rs_index(path: &SymplecticPath, opts: &CrossingOptions) -> Result<IndexReport> {
    let Some(times) = path.exact_crossings() else {
        return rs_index_scanned(path, opts);
    };
    check_start(path, opts)?;
    let duration = path.duration();
    let mut defect: f64 = 0.0;
    for i in 0..=16 {
        defect = defect.max(symplectic_defect(&path.value(duration * i as f64 / 16.0)?));
    }
    if defect > opts.symplectic_tol {
        return Err(Error::NotSymplectic { defect, tolerance: opts.symplectic_tol });
    }
    let mut crossings = Vec::new();
    for t in times {
        let endpoint = t == 0.0 || (t - duration).abs() <= 1e-12 * duration.max(1.0);
        if let Some(c) = crossing_at(path, t, endpoint, opts)? {
            crossings.push(c);
        }
    }
    Ok(finish(crossings, defect))
}

/// Robbin-Salamon index from a scan of the smallest singular value of
/// `Psi(t) - I` on a grid, with golden-section refinement of each local
/// minimum.
pub fn rs_index_scanned(path: &SymplecticPath, opts: &CrossingOptions) -> Result<IndexReport> {
    check_start(path, opts)?;
    let duration = path.duration();
    let grid = path.scan_grid(opts.samples);
    let mut sigma = Vec::with_capacity(grid.len());
    let mut defect: f64 = 0.0;
    for &t in &grid {
        let psi = path.value(t)?;
        defect = defect.max(symplectic_defect(&psi));
        sigma.push(smallest_singular(&shifted(&psi)));
    }
    if defect > opts.symplectic_tol {
        return Err(Error::NotSymplectic { defect, tolerance: opts.symplectic_tol });
    }
    let n = grid.len() - 1;
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-9 * duration.max(1.0);
    let mut crossings = Vec::new();
    if let Some(c) = crossing_at(path, 0.0, true, opts)? {
        crossings.push(c);
    }
    let mut found: Vec<f64> = Vec::new();
    for i in 1..=n {
        let left_ok = sigma[i] <= sigma[i - 1];
        let right_ok = i == n || sigma[i] <= sigma[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let hi = grid[(i + 1).min(n)];
        let (t, s) = refine_minimum(path, grid[i - 1], hi, opts.time_tol)?;
        if s >= opts.dip || near(t, 0.0) || found.iter().any(|&f| near(f, t)) {
            continue;
        }
        let endpoint = near(t, duration);
        let t = if endpoint { duration } else { t };
        if let Some(c) = crossing_at(path, t, endpoint, opts)? {
            found.push(t);
            crossings.push(c);
        }
    }
    Ok(finish(crossings, defect))
}
