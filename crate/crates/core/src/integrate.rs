//! Explicit extrapolation integrator (Gragg-Bulirsch-Stoer).
//!
//! Each step runs the modified midpoint rule with the substep sequence
//! 2, 4, 6, ... and extrapolates to zero step size with Neville's scheme.
//! The adaptive scheme compares the last two diagonal entries of the
//! tableau to control the step; the fixed scheme uses the same step with a
//! constant size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of extrapolation columns. Order of the accepted solution is `2 * COLUMNS`.
const COLUMNS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scheme {
    Adaptive { rtol: f64, atol: f64 },
    Fixed { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub max_steps: usize,
    /// Flows in the unregularized chart stop with an error once `|q|` drops below this.
    pub collision_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            scheme: Scheme::Adaptive { rtol: 1e-10, atol: 1e-10 },
            max_steps: 2_000_000,
            collision_floor: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        IntegratorConfig { scheme: Scheme::Adaptive { rtol, atol }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.scheme {
            Scheme::Adaptive { rtol, atol } => {
                if !(rtol > 0.0 && atol > 0.0 && rtol.is_finite() && atol.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "tolerances must be positive, got rtol = {rtol}, atol = {atol}"
                    )));
                }
            }
            Scheme::Fixed { step } => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(Error::InvalidArgument(format!("fixed step must be positive, got {step}")));
                }
            }
        }
        if !(self.collision_floor >= 0.0) {
            return Err(Error::InvalidArgument("collision floor must be non-negative".into()));
        }
        Ok(())
    }
}

/// Autonomous first-order system `y' = f(y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[f64], dy: &mut [f64]);
    /// Called after every accepted step; an error aborts the integration.
    fn check(&self, _y: &[f64]) -> Result<()> {
        Ok(())
    }
}

struct Workspace {
    tableau: Vec<Vec<f64>>,
    z0: Vec<f64>,
    z1: Vec<f64>,
    f: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            tableau: vec![vec![0.0; n]; COLUMNS],
            z0: vec![0.0; n],
            z1: vec![0.0; n],
            f: vec![0.0; n],
        }
    }
}

fn modified_midpoint<S: OdeSystem>(sys: &S, y: &[f64], f0: &[f64], big_h: f64, steps: usize, ws: &mut Workspace, out_row: usize) {
    let n = y.len();
    let h = big_h / steps as f64;
    let Workspace { tableau, z0, z1, f } = ws;
    z0.copy_from_slice(y);
    for i in 0..n {
        z1[i] = y[i] + h * f0[i];
    }
    for _ in 1..steps {
        sys.rhs(z1, f);
        for i in 0..n {
            let next = z0[i] + 2.0 * h * f[i];
            z0[i] = z1[i];
            z1[i] = next;
        }
    }
    sys.rhs(z1, f);
    let out = &mut tableau[out_row];
    for i in 0..n {
        out[i] = 0.5 * (z0[i] + z1[i] + h * f[i]);
    }
}

/// One extrapolated step. Fills the tableau diagonal in place and returns the
/// scaled error estimate (only meaningful when `tol` is given).
fn extrapolated_step<S: OdeSystem>(sys: &S, y: &[f64], f0: &[f64], h: f64, ws: &mut Workspace, tol: Option<(f64, f64)>) -> (Vec<f64>, f64) {
    let n = y.len();
    // Column m of row j is stored by overwriting tableau rows from the top:
    // after processing row j, tableau[m] holds T[j][m].
    let mut prev: Vec<Vec<f64>> = Vec::with_capacity(COLUMNS);
    for j in 0..COLUMNS {
        let nj = 2 * (j + 1);
        modified_midpoint(sys, y, f0, h, nj, ws, j);
        let mut row: Vec<Vec<f64>> = Vec::with_capacity(j + 1);
        row.push(ws.tableau[j].clone());
        for m in 1..=j {
            let nk = 2 * (j - m + 1);
            let ratio = (nj as f64 / nk as f64).powi(2) - 1.0;
            let a = &row[m - 1];
            let b = &prev[m - 1];
            let v: Vec<f64> = (0..n).map(|i| a[i] + (a[i] - b[i]) / ratio).collect();
            row.push(v);
        }
        prev = row;
    }
    let best = prev[COLUMNS - 1].clone();
    let err = match tol {
        Some((rtol, atol)) => {
            let lower = &prev[COLUMNS - 2];
            let mut e: f64 = 0.0;
            for i in 0..n {
                let sc = atol + rtol * y[i].abs().max(best[i].abs());
                e = e.max((best[i] - lower[i]).abs() / sc);
            }
            e
        }
        None => 0.0,
    };
    (best, err)
}

/// Integrates from time 0 to `t` (which may be negative) and returns the final state.
pub fn integrate<S: OdeSystem>(sys: &S, y0: &[f64], t: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("integration time must be finite, got {t}")));
    }
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::InvalidArgument(format!("state has length {}, expected {n}", y0.len())));
    }
    let mut y = y0.to_vec();
    if t == 0.0 {
        return Ok(y);
    }
    let dir = t.signum();
    let span = t.abs();
    let mut ws = Workspace::new(n);
    let mut f0 = vec![0.0; n];
    let mut done = 0.0;
    let mut steps = 0usize;

    match cfg.scheme {
        Scheme::Fixed { step } => {
            while done < span {
                let h = step.min(span - done);
                sys.rhs(&y, &mut f0);
                let (next, _) = extrapolated_step(sys, &y, &f0, dir * h, &mut ws, None);
                if next.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Integration("non-finite state".into()));
                }
                y = next;
                sys.check(&y)?;
                done += h;
                steps += 1;
                if steps > cfg.max_steps {
                    return Err(Error::Integration("step budget exhausted".into()));
                }
            }
        }
        Scheme::Adaptive { rtol, atol } => {
            sys.rhs(&y, &mut f0);
            let ynorm = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let fnorm = f0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut h = if fnorm > 0.0 { 0.1 * (ynorm + 1e-3) / fnorm } else { span };
            h = h.min(span);
            while done < span {
                let last = h >= span - done;
                let hh = if last { span - done } else { h };
                sys.rhs(&y, &mut f0);
                let (next, err) = extrapolated_step(sys, &y, &f0, dir * hh, &mut ws, Some((rtol, atol)));
                steps += 1;
                if steps > cfg.max_steps {
                    return Err(Error::Integration("step budget exhausted".into()));
                }
                let finite = err.is_finite() && next.iter().all(|v| v.is_finite());
                if finite && err <= 1.0 {
                    y = next;
                    sys.check(&y)?;
                    done = if last { span } else { done + hh };
                    let fac = if err == 0.0 { 3.0 } else { (0.9 * err.powf(-1.0 / (2 * COLUMNS - 1) as f64)).clamp(0.2, 3.0) };
                    h = hh * fac;
                } else {
                    let fac = if finite { (0.9 * err.powf(-1.0 / (2 * COLUMNS - 1) as f64)).clamp(0.1, 0.5) } else { 0.25 };
                    h = hh * fac;
                    if h < 1e-14 * span.max(1.0) {
                        return Err(Error::Integration(format!("step size underflow at t = {}", dir * done)));
                    }
                }
            }
        }
    }
    Ok(y)
}

/// States at each of the increasing `times`, starting from `y0` at time 0.
pub fn integrate_samples<S: OdeSystem>(sys: &S, y0: &[f64], times: &[f64], cfg: &IntegratorConfig) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.to_vec();
    let mut now = 0.0;
    for &t in times {
        y = integrate(sys, &y, t - now, cfg)?;
        now = t;
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    struct Decay;
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = -y[0];
        }
    }

    #[test]
    fn oscillator_period_is_reproduced() {
        let y = integrate(&Oscillator, &[1.0, 0.0], 2.0 * std::f64::consts::PI, &IntegratorConfig::default()).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9, "{y:?}");
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let cfg = IntegratorConfig::default();
        let fwd = integrate(&Oscillator, &[0.3, -0.7], 5.0, &cfg).unwrap();
        let back = integrate(&Oscillator, &fwd, -5.0, &cfg).unwrap();
        assert!((back[0] - 0.3).abs() < 1e-9 && (back[1] + 0.7).abs() < 1e-9);
    }

    #[test]
    fn fixed_scheme_matches_exponential() {
        let cfg = IntegratorConfig { scheme: Scheme::Fixed { step: 0.25 }, ..Default::default() };
        let y = integrate(&Decay, &[1.0], 3.0, &cfg).unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn samples_follow_the_grid() {
        let times = [0.5, 1.0, 1.5];
        let ys = integrate_samples(&Decay, &[2.0], &times, &IntegratorConfig::default()).unwrap();
        for (t, y) in times.iter().zip(ys) {
            assert!((y[0] - 2.0 * (-t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_tolerances() {
        let cfg = IntegratorConfig::adaptive(0.0, 1e-10);
        assert!(integrate(&Decay, &[1.0], 1.0, &cfg).is_err());
    }
}
