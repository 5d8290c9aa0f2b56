//! Fixed-step classical Runge-Kutta for linear moment equations.

use crate::error::{Result, RsfError};

pub trait OdeState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    /// Name of the first block holding a non-finite entry, if any.
    fn non_finite_block(&self) -> Option<&'static str>;
}

pub fn rk4_step<S, F>(f: &F, y: &S, h: f64) -> Result<S>
where
    S: OdeState,
    F: Fn(&S) -> Result<S>,
{
    let k1 = f(y)?;
    let mut y2 = y.clone();
    y2.axpy(0.5 * h, &k1);
    let k2 = f(&y2)?;
    let mut y3 = y.clone();
    y3.axpy(0.5 * h, &k2);
    let k3 = f(&y3)?;
    let mut y4 = y.clone();
    y4.axpy(h, &k3);
    let k4 = f(&y4)?;
    let mut out = y.clone();
    out.axpy(h / 6.0, &k1);
    out.axpy(h / 3.0, &k2);
    out.axpy(h / 3.0, &k3);
    out.axpy(h / 6.0, &k4);
    Ok(out)
}

/// Advances `y` by `duration` in equal steps no longer than `dt_max`.
pub fn advance<S, F>(f: &F, y: &S, t0: f64, duration: f64, dt_max: f64) -> Result<S>
where
    S: OdeState,
    F: Fn(&S) -> Result<S>,
{
    if !(dt_max > 0.0) || !dt_max.is_finite() {
        return Err(RsfError::StepSize(dt_max));
    }
    if duration < 0.0 {
        return Err(RsfError::InvalidParameter(format!("negative duration {duration}")));
    }
    if duration == 0.0 {
        return Ok(y.clone());
    }
    let steps = (duration / dt_max).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let mut cur = y.clone();
    for k in 0..steps {
        cur = rk4_step(f, &cur, h)?;
        if let Some(block) = cur.non_finite_block() {
            return Err(RsfError::NonFinite {
                block,
                t: t0 + (k + 1) as f64 * h,
            });
        }
    }
    Ok(cur)
}
