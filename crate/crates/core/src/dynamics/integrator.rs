//! Adaptive Dormand-Prince 5(4) integrator.

use thiserror::Error;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
// Fifth-order weights (also the last stage row).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Smallest step before the integration is declared failed (s).
pub const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("step size underflow (h = {h:e} s) at t = {t} s: problem too stiff or singular")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t} s")]
    NonFinite { t: f64 },
    #[error("invalid integrator options: {0}")]
    Options(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk45Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            h_max: 1e-3,
        }
    }
}

impl Rk45Options {
    fn validate(&self) -> Result<(), IntegrationError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.rel_tol) && ok(self.abs_tol) && ok(self.h_max) {
            Ok(())
        } else {
            Err(IntegrationError::Options(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrator state carried between calls: the step size proposal and
/// counters.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub options: Rk45Options,
    next_step: Option<f64>,
    pub stats: IntegratorStats,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    proposal: Vec<f64>,
}

impl Dopri5 {
    pub fn new(options: Rk45Options) -> Result<Self, IntegrationError> {
        options.validate()?;
        Ok(Self {
            options,
            next_step: None,
            stats: IntegratorStats::default(),
            k: Default::default(),
            stage: Vec::new(),
            proposal: Vec::new(),
        })
    }

    /// Advances `y` from `t0` to `t1`. `rhs(t, y, dy)` writes the derivative;
    /// `on_accept(t, y)` runs after every accepted step and may project the
    /// state (e.g. renormalize quaternions).
    pub fn integrate<F, G>(
        &mut self,
        rhs: &mut F,
        t0: f64,
        y: &mut [f64],
        t1: f64,
        on_accept: &mut G,
    ) -> Result<(), IntegrationError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        G: FnMut(f64, &mut [f64]),
    {
        let n = y.len();
        for k in &mut self.k {
            k.resize(n, 0.0);
        }
        self.stage.resize(n, 0.0);
        self.proposal.resize(n, 0.0);

        let mut t = t0;
        if t1 <= t0 {
            return Ok(());
        }
        rhs(t, y, &mut self.k[0]);
        self.stats.evaluations += 1;
        let mut h = match self.next_step {
            Some(h) => h,
            None => self.initial_step(rhs, t, y, t1 - t0),
        };
        h = h.min(self.options.h_max);

        loop {
            let remaining = t1 - t;
            // Stretch slightly rather than leave a sliver before t1.
            let last = 1.01 * h >= remaining && remaining <= self.options.h_max * (1.0 + 1e-9);
            let step = if last { remaining } else { h };
            if step < MIN_STEP {
                return Err(IntegrationError::StepUnderflow { t, h: step });
            }

            let err = self.attempt(rhs, t, y, step);
            if !err.is_finite() {
                // Treat blow-ups inside a stage as a rejected step.
                h = step * 0.1;
                self.stats.rejected += 1;
                if h < MIN_STEP {
                    return Err(IntegrationError::NonFinite { t });
                }
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.stats.accepted += 1;
                t = if last { t1 } else { t + step };
                y.copy_from_slice(&self.proposal);
                on_accept(t, y);
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(IntegrationError::NonFinite { t });
                }
                // The last stage is the derivative at the new point unless the
                // hook altered the state.
                if *y == self.proposal[..] {
                    self.k.swap(0, 6);
                } else {
                    rhs(t, y, &mut self.k[0]);
                    self.stats.evaluations += 1;
                }
                // Keep the unclipped proposal when the final step was
                // shortened to land on t1.
                let proposed = if last && step < h { h } else { step * factor };
                h = proposed.min(self.options.h_max);
                if last {
                    self.next_step = Some(h);
                    return Ok(());
                }
            } else {
                self.stats.rejected += 1;
                h = step * factor.min(1.0);
            }
        }
    }

    /// Tries one step of size `h`; leaves the fifth-order result in
    /// `self.proposal`, the derivative there in `self.k[6]`, and returns the
    /// scaled RMS error.
    fn attempt<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], h: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let stage = &mut self.stage;

        for i in 0..n {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        rhs(t + C2 * h, stage, k2);
        for i in 0..n {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, stage, k3);
        for i in 0..n {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, stage, k4);
        for i in 0..n {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, stage, k5);
        for i in 0..n {
            stage[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, stage, k6);
        let proposal = &mut self.proposal;
        for i in 0..n {
            proposal[i] =
                y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rhs(t + h, proposal, k7);
        self.stats.evaluations += 6;

        let mut sum = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.options.abs_tol + self.options.rel_tol * y[i].abs().max(proposal[i].abs());
            sum += (e / scale).powi(2);
        }
        if n == 0 {
            0.0
        } else {
            (sum / n as f64).sqrt()
        }
    }

    /// Starting step from the magnitudes of the state and its first two
    /// derivatives (Hairer, Nørsett & Wanner). Systems with no dynamics
    /// start at the maximum step.
    fn initial_step<F>(&mut self, rhs: &mut F, t: f64, y: &[f64], span: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len().max(1) as f64;
        let scale = |i: usize| self.options.abs_tol + self.options.rel_tol * y[i].abs();
        let norm = |v: &[f64]| {
            (v.iter().enumerate().map(|(i, x)| (x / scale(i)).powi(2)).sum::<f64>() / n).sqrt()
        };
        let d0 = norm(y);
        let d1 = norm(&self.k[0]);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span).min(self.options.h_max);
        let probe: Vec<f64> = y.iter().zip(&self.k[0]).map(|(a, b)| a + h0 * b).collect();
        let mut f1 = vec![0.0; y.len()];
        rhs(t + h0, &probe, &mut f1);
        self.stats.evaluations += 1;
        let diff: Vec<f64> = f1.iter().zip(&self.k[0]).map(|(a, b)| a - b).collect();
        let d2 = norm(&diff) / h0;
        if d1.max(d2) <= 1e-15 {
            return self.options.h_max;
        }
        let h1 = (0.01 / d1.max(d2)).powf(0.2);
        (100.0 * h0).min(h1)
    }
}

/// Integrates `rhs` from `t0` to `t1` and returns `(t, y)` at every accepted
/// step, starting with the initial condition.
pub fn rk45_integrate<F>(
    mut rhs: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    options: Rk45Options,
) -> Result<Vec<(f64, Vec<f64>)>, IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut solver = Dopri5::new(options)?;
    let mut samples = vec![(t0, y0.to_vec())];
    let mut y = y0.to_vec();
    solver.integrate(&mut rhs, t0, &mut y, t1, &mut |t, y: &mut [f64]| {
        samples.push((t, y.to_vec()));
    })?;
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(rel_tol: f64) -> Rk45Options {
        Rk45Options {
            rel_tol,
            abs_tol: rel_tol * 1e-3,
            h_max: 0.1,
        }
    }

    #[test]
    fn exponential_decay() {
        let out = rk45_integrate(|_, y, dy| dy[0] = -y[0], &[1.0], 0.0, 1.0, opts(1e-8)).unwrap();
        let (t, y) = out.last().unwrap();
        assert_eq!(*t, 1.0);
        assert!((y[0] - (-1f64).exp()).abs() < 1e-7, "{}", y[0]);
    }

    #[test]
    fn constant_system_takes_maximal_steps() {
        let options = Rk45Options {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            h_max: 0.25,
        };
        let out = rk45_integrate(|_, _, dy| dy[0] = 0.0, &[3.0], 0.0, 1.0, options).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|(_, y)| y[0] == 3.0));
        for w in out.windows(2) {
            assert!(w[1].0 - w[0].0 <= 0.25 + 1e-15);
        }
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let period = 2.0 * std::f64::consts::PI;
        let out = rk45_integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            0.0,
            10.0 * period,
            Rk45Options {
                rel_tol: 1e-9,
                abs_tol: 1e-12,
                h_max: 1.0,
            },
        )
        .unwrap();
        let (_, y) = out.last().unwrap();
        let energy = 0.5 * (y[0] * y[0] + y[1] * y[1]);
        assert!((energy - 0.5).abs() / 0.5 < 1e-5, "{energy}");
        assert!((y[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn step_never_exceeds_h_max() {
        let options = Rk45Options {
            rel_tol: 1e-3,
            abs_tol: 1e-3,
            h_max: 0.01,
        };
        let out = rk45_integrate(|t, _, dy| dy[0] = t.cos(), &[0.0], 0.0, 1.0, options).unwrap();
        for w in out.windows(2) {
            assert!(w[1].0 - w[0].0 <= 0.01 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn tightening_tolerance_reduces_error() {
        let error = |tol: f64| {
            let options = Rk45Options { h_max: 1.0, ..opts(tol) };
            let out = rk45_integrate(|_, y, dy| dy[0] = -y[0], &[1.0], 0.0, 1.0, options).unwrap();
            (out.last().unwrap().1[0] - (-1f64).exp()).abs()
        };
        let errors: Vec<f64> = [1e-3, 1e-5, 1e-7, 1e-9].iter().map(|&t| error(t)).collect();
        for w in errors.windows(2) {
            assert!(w[1] < w[0], "{errors:?}");
        }
    }

    #[test]
    fn underflow_is_reported() {
        // Finite-time blow-up at t = 1.
        let result = rk45_integrate(|_, y, dy| dy[0] = y[0] * y[0], &[1.0], 0.0, 2.0, opts(1e-8));
        match result {
            Err(IntegrationError::StepUnderflow { t, .. }) | Err(IntegrationError::NonFinite { t }) => {
                assert!((t - 1.0).abs() < 1e-2, "{t}")
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_options() {
        assert!(Dopri5::new(Rk45Options {
            rel_tol: 0.0,
            abs_tol: 1.0,
            h_max: 1.0
        })
        .is_err());
    }
}
