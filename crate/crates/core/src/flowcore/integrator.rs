//! Embedded Dormand–Prince 5(4) stepper with cubic Hermite dense output.
//!
//! One error controller drives everything integrated alongside the position:
//! the variational (tangent) equation and the Liouville log-determinant ride
//! in the same state vector, so their accuracy is tied to the same tolerance.

use nalgebra::SVector;

use crate::error::{FlowError, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order weights (also the last stage row: FSAL)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// difference to the embedded 4th-order solution
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const SAFETY: f64 = 0.9;

/// One accepted step, carrying enough data for cubic Hermite interpolation.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: SVector<f64, N>,
    pub y1: SVector<f64, N>,
    pub f0: SVector<f64, N>,
    pub f1: SVector<f64, N>,
}

impl<const N: usize> Step<N> {
    /// Interpolate the state at `t` inside [t0, t1] (cubic Hermite).
    pub fn interp(&self, t: f64) -> SVector<f64, N> {
        let h = self.t1 - self.t0;
        if h == 0.0 {
            return self.y0;
        }
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.y0 * h00 + self.f0 * (h10 * h) + self.y1 * h01 + self.f1 * (h11 * h)
    }
}

/// Whether to keep integrating after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    Halt,
}

/// Counters reported with every trajectory.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct IntegrationStats {
    pub steps: u64,
    pub rejected: u64,
    pub max_error_estimate: f64,
}

/// Final state of a run (time where the driver stopped, possibly early).
#[derive(Debug, Clone)]
pub struct RunEnd<const N: usize> {
    pub t: f64,
    pub y: SVector<f64, N>,
    pub stats: IntegrationStats,
    pub halted: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

impl Integrator {
    pub fn with_tol(tol: f64) -> Self {
        Integrator { rtol: tol, atol: tol * 1e-3, h_max: 0.5 }
    }

    /// Integrate y' = rhs(t, y) from (t0, y0) to t_end (either direction).
    /// `on_step` sees every accepted step and may halt the run.
    pub fn run<const N: usize>(
        &self,
        mut rhs: impl FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
        t0: f64,
        t_end: f64,
        y0: SVector<f64, N>,
        mut on_step: impl FnMut(&Step<N>) -> StepControl,
    ) -> Result<RunEnd<N>> {
        let mut stats = IntegrationStats::default();
        if t_end == t0 {
            return Ok(RunEnd { t: t0, y: y0, stats, halted: false });
        }
        let dir = (t_end - t0).signum();
        let span = (t_end - t0).abs();

        let mut t = t0;
        let mut y = y0;
        let mut f = rhs(t, &y);

        // initial step: conservative scale guess, the controller adapts fast
        let ynorm = y.amax().max(1.0);
        let fnorm = f.amax();
        let mut h = if fnorm > 0.0 {
            (0.01 * ynorm / fnorm).min(self.h_max).min(span)
        } else {
            self.h_max.min(span)
        } * dir;

        let h_floor = (span * 1e-14).max(1e-300);

        loop {
            if (t - t_end) * dir >= 0.0 {
                return Ok(RunEnd { t, y, stats, halted: false });
            }
            // do not step past the end point
            if (t + h - t_end) * dir > 0.0 {
                h = t_end - t;
            }
            if h.abs() < h_floor {
                return Err(FlowError::StepSizeUnderflow(t));
            }

            let k1 = f;
            let k2 = rhs(t + 0.2 * h, &(y + k1 * (A21 * h)));
            let k3 = rhs(t + 0.3 * h, &(y + k1 * (A31 * h) + k2 * (A32 * h)));
            let k4 = rhs(t + 0.8 * h, &(y + k1 * (A41 * h) + k2 * (A42 * h) + k3 * (A43 * h)));
            let k5 = rhs(
                t + 8.0 / 9.0 * h,
                &(y + k1 * (A51 * h) + k2 * (A52 * h) + k3 * (A53 * h) + k4 * (A54 * h)),
            );
            let k6 = rhs(
                t + h,
                &(y + k1 * (A61 * h)
                    + k2 * (A62 * h)
                    + k3 * (A63 * h)
                    + k4 * (A64 * h)
                    + k5 * (A65 * h)),
            );
            let y_new =
                y + k1 * (B1 * h) + k3 * (B3 * h) + k4 * (B4 * h) + k5 * (B5 * h) + k6 * (B6 * h);
            let k7 = rhs(t + h, &y_new);

            let err_vec = k1 * (E1 * h)
                + k3 * (E3 * h)
                + k4 * (E4 * h)
                + k5 * (E5 * h)
                + k6 * (E6 * h)
                + k7 * (E7 * h);
            let mut err = 0.0f64;
            for i in 0..N {
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                let e = err_vec[i] / scale;
                err += e * e;
            }
            err = (err / N as f64).sqrt();

            if err <= 1.0 {
                let step = Step { t0: t, t1: t + h, y0: y, y1: y_new, f0: k1, f1: k7 };
                stats.steps += 1;
                stats.max_error_estimate = stats.max_error_estimate.max(err);
                t += h;
                y = y_new;
                f = k7; // FSAL
                let control = on_step(&step);
                if control == StepControl::Halt {
                    return Ok(RunEnd { t, y, stats, halted: true });
                }
                let scale = if err == 0.0 {
                    MAX_SCALE
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
                };
                h = (h * scale).clamp(-self.h_max, self.h_max);
                if h == 0.0 {
                    h = h_floor * dir;
                }
            } else {
                stats.rejected += 1;
                let scale = (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, 1.0);
                h *= scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector1;

    #[test]
    fn exponential_decay() {
        let integ = Integrator::with_tol(1e-10);
        let end = integ
            .run(|_, y: &Vector1<f64>| -y, 0.0, 3.0, Vector1::new(1.0), |_| StepControl::Continue)
            .unwrap();
        assert!((end.y[0] - (-3.0f64).exp()).abs() < 1e-10);
        assert!(end.stats.steps > 0);
    }

    #[test]
    fn backward_integration() {
        let integ = Integrator::with_tol(1e-10);
        let end = integ
            .run(|_, y: &Vector1<f64>| *y, 0.0, -2.0, Vector1::new(1.0), |_| StepControl::Continue)
            .unwrap();
        assert!((end.y[0] - (-2.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_matches_closed_form() {
        // y' = cos(t): interpolant should track sin(t) inside each step
        let integ = Integrator::with_tol(1e-12);
        let mut worst: f64 = 0.0;
        integ
            .run(
                |t, _: &Vector1<f64>| Vector1::new(t.cos()),
                0.0,
                6.0,
                Vector1::new(0.0),
                |step| {
                    for k in 1..5 {
                        let tm = step.t0 + (step.t1 - step.t0) * k as f64 / 5.0;
                        worst = worst.max((step.interp(tm)[0] - tm.sin()).abs());
                    }
                    StepControl::Continue
                },
            )
            .unwrap();
        assert!(worst < 5e-7, "dense output error {worst}");
    }

    #[test]
    fn zero_span_is_identity() {
        let integ = Integrator::with_tol(1e-8);
        let end = integ
            .run(|_, y: &Vector1<f64>| *y, 1.0, 1.0, Vector1::new(7.0), |_| StepControl::Continue)
            .unwrap();
        assert_eq!(end.y[0], 7.0);
        assert_eq!(end.stats.steps, 0);
    }
}
