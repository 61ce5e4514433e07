//! Adaptive Dormand-Prince 5(4) integration of complex linear systems.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Step-size control for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step the controller may take, in time units.
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-10, max_step: 1.0 }
    }
}

impl IntegratorConfig {
    pub fn new(rel_tol: f64, abs_tol: f64, max_step: f64) -> Result<Self> {
        let cfg = Self { rel_tol, abs_tol, max_step };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-3) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1e-3], got {tol}")));
            }
        }
        if !(self.max_step > 0.0 && self.max_step.is_finite()) {
            return Err(Error::InvalidConfig(format!("max_step must be positive and finite, got {}", self.max_step)));
        }
        Ok(())
    }

    /// Both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, max_step: self.max_step }
    }
}

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn rhs(&self, t: f64, y: &[C64], dydt: &mut [C64]);
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl std::ops::AddAssign for StepStats {
    fn add_assign(&mut self, other: Self) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
    }
}

/// Why an integration stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeFailure {
    pub t: f64,
    pub reason: String,
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order solution minus embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 50_000_000;

/// Dormand-Prince 5(4) with FSAL and the usual mixed absolute/relative
/// error norm (RMS over components).
pub struct DormandPrince {
    cfg: IntegratorConfig,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    h_prev: Option<f64>,
}

impl DormandPrince {
    pub fn new(dim: usize, cfg: IntegratorConfig) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self { cfg, k: std::array::from_fn(|_| z.clone()), tmp: z.clone(), y_new: z, h_prev: None }
    }

    fn error_norm(&self, y: &[C64], h: f64) -> f64 {
        let k = &self.k;
        let mut acc = 0.0;
        for i in 0..y.len() {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let sc = self.cfg.abs_tol + self.cfg.rel_tol * y[i].norm_sqr().max(self.y_new[i].norm_sqr()).sqrt();
            acc += e.norm_sqr() / (sc * sc);
        }
        (acc / y.len() as f64).sqrt()
    }

    fn initial_step<S: OdeSystem>(&mut self, sys: &S, t0: f64, y: &[C64], span: f64) -> f64 {
        // Hairer, Nørsett & Wanner, II.4
        let sc = |v: C64, cfg: &IntegratorConfig| cfg.abs_tol + cfg.rel_tol * v.norm();
        let n = y.len() as f64;
        let d0 = (y.iter().map(|v| (v.norm() / sc(*v, &self.cfg)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 =
            (y.iter().zip(&self.k[0]).map(|(v, f)| (f.norm() / sc(*v, &self.cfg)).powi(2)).sum::<f64>() / n).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span).min(self.cfg.max_step);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k[0][i] * h0;
        }
        sys.rhs(t0 + h0, &self.tmp, &mut self.k[1]);
        let d2 = (y
            .iter()
            .zip(self.k[1].iter().zip(&self.k[0]))
            .map(|(v, (f1, f0))| ((f1 - f0).norm() / sc(*v, &self.cfg)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / 5.0) };
        (100.0 * h0).min(h1).min(span).min(self.cfg.max_step)
    }

    /// Integrates `y` in place from `t0` to `t1` (`t1 >= t0`). `observer` is
    /// called after every accepted step with the new time and state.
    pub fn integrate<S, F>(
        &mut self,
        sys: &S,
        t0: f64,
        t1: f64,
        y: &mut [C64],
        mut observer: F,
    ) -> std::result::Result<StepStats, OdeFailure>
    where
        S: OdeSystem,
        F: FnMut(f64, &[C64]),
    {
        let mut stats = StepStats::default();
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(stats);
        }
        let mut t = t0;
        sys.rhs(t, y, &mut self.k[0]);
        let mut h = match self.h_prev {
            Some(h) => h.min(span).min(self.cfg.max_step),
            None => self.initial_step(sys, t0, y, span),
        };
        let mut last_rejected = false;
        let h_min = 16.0 * f64::EPSILON * t0.abs().max(t1.abs()).max(1.0);

        while t < t1 {
            if stats.accepted + stats.rejected >= MAX_STEPS {
                return Err(OdeFailure { t, reason: format!("step budget of {MAX_STEPS} exhausted") });
            }
            let mut last = false;
            if t + h >= t1 || t + 1.01 * h >= t1 {
                h = t1 - t;
                last = true;
            }
            self.stages(sys, t, h, y);
            let err = self.error_norm(y, h);
            if !err.is_finite() {
                return Err(OdeFailure { t, reason: "non-finite state".into() });
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                stats.accepted += 1;
                observer(t, y);
                let mut fac = SAFETY * err.max(1e-10).powf(-0.2);
                fac = fac.clamp(MIN_FACTOR, MAX_FACTOR);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                if !last {
                    self.h_prev = Some(h);
                }
                h = (h * fac).min(self.cfg.max_step);
                last_rejected = false;
            } else {
                stats.rejected += 1;
                let fac = (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
                h *= fac;
                last_rejected = true;
                if h < h_min {
                    return Err(OdeFailure { t, reason: format!("step size underflow (h = {h:e})") });
                }
            }
        }
        Ok(stats)
    }

    fn stages<S: OdeSystem>(&mut self, sys: &S, t: f64, h: f64, y: &[C64]) {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (h * A21);
        }
        sys.rhs(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        sys.rhs(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        sys.rhs(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        sys.rhs(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        sys.rhs(t + h, tmp, k6);
        for i in 0..n {
            self.y_new[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        sys.rhs(t + h, &self.y_new, k7);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation {
        omega: f64,
    }

    impl OdeSystem for Rotation {
        fn rhs(&self, _t: f64, y: &[C64], dydt: &mut [C64]) {
            dydt[0] = C64::new(0.0, -self.omega) * y[0];
        }
    }

    /// Two-level Rabi problem with a known closed form.
    struct Rabi {
        omega: f64,
    }

    impl OdeSystem for Rabi {
        fn rhs(&self, _t: f64, y: &[C64], dydt: &mut [C64]) {
            let mi = C64::new(0.0, -self.omega);
            dydt[0] = mi * y[1];
            dydt[1] = mi * y[0];
        }
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(1e-10, 1e-10, 1.0).is_ok());
        assert!(IntegratorConfig::new(0.0, 1e-10, 1.0).is_err());
        assert!(IntegratorConfig::new(1e-2, 1e-10, 1.0).is_err());
        assert!(IntegratorConfig::new(1e-8, 1e-8, 0.0).is_err());
        IntegratorConfig::default().validate().unwrap();
    }

    #[test]
    fn phase_rotation_is_accurate() {
        let sys = Rotation { omega: 3.0 };
        let mut y = [C64::new(1.0, 0.0)];
        let mut dp = DormandPrince::new(1, IntegratorConfig::default());
        dp.integrate(&sys, 0.0, 10.0, &mut y, |_, _| {}).unwrap();
        let exact = C64::from_polar(1.0, -30.0);
        assert!((y[0] - exact).norm() < 1e-8, "{}", (y[0] - exact).norm());
    }

    #[test]
    fn rabi_matches_closed_form_and_converges() {
        let sys = Rabi { omega: 1.3 };
        let run = |tol: f64| {
            let mut y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
            let mut dp = DormandPrince::new(2, IntegratorConfig::new(tol, tol, 1.0).unwrap());
            let st = dp.integrate(&sys, 0.0, 7.0, &mut y, |_, _| {}).unwrap();
            (y, st)
        };
        let (y, st) = run(1e-10);
        let exact = [C64::new((1.3f64 * 7.0).cos(), 0.0), C64::new(0.0, -(1.3f64 * 7.0).sin())];
        assert!((y[0] - exact[0]).norm() < 1e-9 && (y[1] - exact[1]).norm() < 1e-9);
        let (y2, st2) = run(1e-12);
        assert!(st2.accepted > st.accepted);
        assert!((y[1] - y2[1]).norm() < 1e-9);
    }

    #[test]
    fn reversed_interval_is_noop() {
        let sys = Rotation { omega: 1.0 };
        let mut y = [C64::new(1.0, 0.0)];
        let mut dp = DormandPrince::new(1, IntegratorConfig::default());
        let st = dp.integrate(&sys, 1.0, 1.0, &mut y, |_, _| {}).unwrap();
        assert_eq!(st.accepted, 0);
    }
}
