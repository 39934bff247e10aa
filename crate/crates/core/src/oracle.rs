//! Direct fixed-step RK4 integration of the manifold equations of motion
//!
//! ```text
//! ċ_0 = i g_oe c_e e^{iΔ_oe t}
//! ċ_e = i g_oe c_0 e^{−iΔ_oe t} + i g_eb c_b e^{iΔ_eb t}
//! ċ_b = i g_eb c_e e^{−iΔ_eb t}
//! ```
//!
//! with the detuning phases evaluated at every stage. Nothing here depends
//! on the dressed-state solution, so it serves as an independent check of
//! [`crate::dynamics`].

use num_complex::Complex64 as C64;

use crate::dynamics::Manifold;
use crate::error::{Error, Result};
use crate::spectrum::{CouplingPair, DetuningSet};

/// Largest allowed dt × (fastest rate in the equations).
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Store every k-th step.
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            record_every: 1,
        }
    }

    /// Step of `phase_per_step` radians at the fastest rate of the manifold.
    pub fn resolving(d: &DetuningSet, c: &CouplingPair, t_end: f64, phase_per_step: f64) -> Self {
        let rate = fastest_rate(d, c).max(f64::MIN_POSITIVE);
        Self::new((phase_per_step / rate).min(t_end.max(f64::MIN_POSITIVE)), t_end)
    }

    pub fn record_every(self, k: usize) -> Self {
        Self {
            record_every: k.max(1),
            ..self
        }
    }

    fn validate(&self, rate: f64) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", format!("must be >= 0, got {}", self.t_end)));
        }
        let product = self.dt * rate;
        if product > STABILITY_LIMIT {
            return Err(Error::StepTooLarge {
                product,
                limit: STABILITY_LIMIT,
            });
        }
        Ok(())
    }
}

/// Upper bound on every frequency in the equations: detunings, couplings
/// and the Gershgorin radius of the manifold matrix.
pub fn fastest_rate(d: &DetuningSet, c: &CouplingPair) -> f64 {
    let gershgorin = c
        .oe
        .max(c.oe + d.oe.abs() + c.eb)
        .max(c.eb + d.ob.abs());
    [d.oe.abs(), d.eb.abs(), d.ob.abs(), c.oe, c.eb, gershgorin]
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[C64; 3]>,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        let norm = |s: &[C64; 3]| s.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let n0 = self.states.first().map_or(0.0, norm);
        self.states
            .iter()
            .map(|s| (norm(s) - n0).abs())
            .fold(0.0, f64::max)
    }
}

struct Equations {
    g_oe: f64,
    g_eb: f64,
    delta_oe: f64,
    delta_eb: f64,
}

impl Equations {
    fn rhs(&self, t: f64, c: &[C64; 3]) -> [C64; 3] {
        let i = C64::i();
        let e_oe = C64::from_polar(1.0, self.delta_oe * t);
        let e_eb = C64::from_polar(1.0, self.delta_eb * t);
        [
            i * self.g_oe * c[1] * e_oe,
            i * self.g_oe * c[0] * e_oe.conj() + i * self.g_eb * c[2] * e_eb,
            i * self.g_eb * c[1] * e_eb.conj(),
        ]
    }
}

fn axpy(y: &[C64; 3], a: f64, x: &[C64; 3]) -> [C64; 3] {
    [y[0] + x[0] * a, y[1] + x[1] * a, y[2] + x[2] * a]
}

/// Classical RK4 from t = 0 to `cfg.t_end`. The step is shrunk slightly so
/// a whole number of steps lands on `t_end`.
pub fn integrate_manifold(
    d: &DetuningSet,
    c: &CouplingPair,
    initial: [C64; 3],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate(fastest_rate(d, c))?;
    let eq = Equations {
        g_oe: c.oe,
        g_eb: c.eb,
        delta_oe: d.oe,
        delta_eb: d.eb,
    };
    let steps = (cfg.t_end / cfg.dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { cfg.t_end / steps as f64 };
    let capacity = steps / cfg.record_every + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
    };
    let mut state = initial;
    traj.times.push(0.0);
    traj.states.push(state);
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = eq.rhs(t, &state);
        let k2 = eq.rhs(t + 0.5 * h, &axpy(&state, 0.5 * h, &k1));
        let k3 = eq.rhs(t + 0.5 * h, &axpy(&state, 0.5 * h, &k2));
        let k4 = eq.rhs(t + h, &axpy(&state, h, &k3));
        for j in 0..3 {
            state[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
        if (k + 1) % cfg.record_every == 0 || k + 1 == steps {
            traj.times.push((k + 1) as f64 * h);
            traj.states.push(state);
        }
    }
    Ok(traj)
}

/// Largest |analytic − integrated| over recorded samples and components.
pub fn compare_with_analytic(manifold: &Manifold, cfg: &IntegratorConfig) -> Result<f64> {
    let traj = integrate_manifold(&manifold.detunings, &manifold.couplings, manifold.initial, cfg)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let a = manifold.amplitudes(t);
            (0..3).map(|k| (a[k] - s[k]).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}
