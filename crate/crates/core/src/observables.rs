//! Photon statistics, level populations, inversions and collapse–revival
//! metrics computed from amplitude sets.

use std::f64::consts::PI;

use crate::dynamics::{AmplitudeSet, Manifold};
use crate::error::{Error, Result};

/// p(n, t) indexed by photon number.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDistribution {
    pub t: f64,
    pub p: Vec<f64>,
}

impl PhotonDistribution {
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Most probable photon number; ties resolve to the larger n.
    pub fn argmax(&self) -> usize {
        self.p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(n, _)| n)
    }
}

/// Traces out the dot. Photon number n collects |0, n⟩ from manifold n−1,
/// |e, n⟩ from manifold n and |b, n⟩ from manifold n+1.
pub fn photon_distribution(set: &AmplitudeSet) -> PhotonDistribution {
    let len = set
        .manifolds
        .iter()
        .map(|m| (m.n + 2).max(0) as usize)
        .max()
        .unwrap_or(0);
    let mut p = vec![0.0; len];
    for m in &set.manifolds {
        p[(m.n + 1) as usize] += m.c0.norm_sqr();
        if m.n >= 0 {
            p[m.n as usize] += m.ce.norm_sqr();
        }
        if m.n >= 1 {
            p[(m.n - 1) as usize] += m.cb.norm_sqr();
        }
    }
    PhotonDistribution { t: set.t, p }
}

/// Σ n p(n).
pub fn mean_photon(dist: &PhotonDistribution) -> f64 {
    dist.p.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionSample {
    pub t: f64,
    /// P_0 − P_e
    pub w0e: f64,
    /// P_e − P_b
    pub web: f64,
    pub p0: f64,
    pub pe: f64,
    pub pb: f64,
}

pub fn inversions(set: &AmplitudeSet) -> InversionSample {
    let (mut p0, mut pe, mut pb) = (0.0, 0.0, 0.0);
    for m in &set.manifolds {
        p0 += m.c0.norm_sqr();
        pe += m.ce.norm_sqr();
        pb += m.cb.norm_sqr();
    }
    InversionSample {
        t: set.t,
        w0e: p0 - pe,
        web: pe - pb,
        p0,
        pe,
        pb,
    }
}

/// Σ n p(n) + P_e + 2 P_b, conserved by the ladder coupling.
pub fn excitation_number(dist: &PhotonDistribution, inv: &InversionSample) -> f64 {
    mean_photon(dist) + inv.pe + 2.0 * inv.pb
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RevivalConfig {
    /// Width of the moving-maximum window, in time units.
    pub window: f64,
    /// Collapse when the envelope drops below this fraction of its initial value.
    pub collapse_fraction: f64,
    /// A revival peak is confirmed once the envelope falls below this
    /// fraction of the peak.
    pub peak_drop: f64,
}

impl RevivalConfig {
    pub fn new(window: f64) -> Self {
        Self {
            window,
            collapse_fraction: 0.1,
            peak_drop: 0.75,
        }
    }

    /// Window of 1.5 periods of the slowest population oscillation in `manifold`.
    pub fn for_manifold(manifold: &Manifold) -> Result<Self> {
        Ok(Self::new(1.5 * rabi_period(manifold)?))
    }
}

/// 2π over the smallest nonzero spacing of the dressed frequencies; level
/// populations oscillate at the spacings.
pub fn rabi_period(manifold: &Manifold) -> Result<f64> {
    let w = manifold.eigen.omega;
    let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let spacing = [w[1] - w[0], w[2] - w[1], w[2] - w[0]]
        .into_iter()
        .filter(|s| *s > 1e-9 * scale)
        .fold(f64::INFINITY, f64::min);
    if !spacing.is_finite() {
        return Err(Error::Revival("manifold has no Rabi oscillation".into()));
    }
    Ok(2.0 * PI / spacing)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RevivalMetrics {
    pub collapse_time: f64,
    pub revival_center: f64,
    pub revival_amplitude: f64,
    /// Time average of the series.
    pub mean: f64,
}

/// Moving maximum of |w − mean(w)| over a centered window.
pub fn envelope(times: &[f64], values: &[f64], window: f64) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).abs()).collect();
    let half = 0.5 * window;
    let mut out = Vec::with_capacity(dev.len());
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut deque: std::collections::VecDeque<usize> = Default::default();
    for &t in times {
        while hi < times.len() && times[hi] <= t + half {
            while deque.back().is_some_and(|&j| dev[j] <= dev[hi]) {
                deque.pop_back();
            }
            deque.push_back(hi);
            hi += 1;
        }
        while times[lo] < t - half {
            lo += 1;
        }
        while deque.front().is_some_and(|&j| j < lo) {
            deque.pop_front();
        }
        out.push(deque.front().map_or(0.0, |&j| dev[j]));
    }
    out
}

pub fn revival_metrics(series: &[InversionSample], cfg: &RevivalConfig) -> Result<RevivalMetrics> {
    let times: Vec<f64> = series.iter().map(|s| s.t).collect();
    let values: Vec<f64> = series.iter().map(|s| s.w0e).collect();
    revival_metrics_of(&times, &values, cfg)
}

/// Collapse time and first revival of an oscillating series. The revival
/// is the first envelope peak after the collapse that rises above the
/// collapse threshold and is followed by a drop below `peak_drop` of itself;
/// its center is the middle of the peak's plateau.
pub fn revival_metrics_of(times: &[f64], values: &[f64], cfg: &RevivalConfig) -> Result<RevivalMetrics> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::Revival("series too short".into()));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let env = envelope(times, values, cfg.window);
    let threshold = cfg.collapse_fraction * env[0];
    if env[0] <= 0.0 {
        return Err(Error::Revival("series has no initial oscillation; no collapse".into()));
    }
    let collapse = env
        .iter()
        .position(|&e| e < threshold)
        .ok_or_else(|| Error::Revival("envelope never collapses".into()))?;

    let mut peak: Option<(usize, usize, f64)> = None;
    for (i, &e) in env.iter().enumerate().skip(collapse) {
        match peak {
            _ if e >= threshold && peak.is_none_or(|(_, _, v)| e > v) => peak = Some((i, i, e)),
            Some((start, end, v)) if e == v && end + 1 == i => peak = Some((start, i, v)),
            Some((start, end, v)) if e < cfg.peak_drop * v => {
                return Ok(RevivalMetrics {
                    collapse_time: times[collapse],
                    revival_center: 0.5 * (times[start] + times[end]),
                    revival_amplitude: v,
                    mean,
                });
            }
            _ => {}
        }
    }
    Err(Error::Revival(format!(
        "no revival after collapse at t = {} within the series",
        times[collapse]
    )))
}
