//! Coherent-field initial state and closed-form evolution of every manifold.
//!
//! Manifold `n` holds `{|0, n+1⟩, |e, n⟩, |b, n−1⟩}`. Its amplitudes are
//!
//! ```text
//! c_0(t) = Σ_i A_i e^{iΩ_i t}
//! c_e(t) = Σ_i B_i e^{iΩ_i t} · e^{−iΔ_oe t}
//! c_b(t) = Σ_i C_i e^{iΩ_i t} · e^{−iΔ_ob t}
//! ```
//!
//! The nine coefficients are fixed by the amplitudes at t = 0 together with
//! their first two derivatives, which the equations of motion supply as
//! `H c(0)` and `H² c(0)`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectrum::{
    cubic_coefficients, manifold_matrix, solve_cubic, Convention, CouplingPair,
    CubicCoefficients, DetuningSet, EigenTriple, SweepParams,
};

/// Default bound on the coherent-state probability lost to truncation.
pub const TRUNCATION_TOL: f64 = 1e-10;

/// Relative eigenvalue separation below which roots are treated as one.
const DEGENERACY_TOL: f64 = 1e-10;

/// Photon-number amplitudes of a coherent state with zero phase.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialField {
    pub mean_photons: f64,
    pub n_max: usize,
    /// c_n(0) for n = 0..=n_max, real and nonnegative.
    pub weights: Vec<f64>,
    /// Poisson probability beyond n_max.
    pub tail: f64,
}

impl InitialField {
    pub fn probability(&self, n: usize) -> f64 {
        self.weights.get(n).map_or(0.0, |w| w * w)
    }

    /// Σ_n |c_n(0)|² over the retained photon numbers.
    pub fn retained(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// ⌈n̄ + 8√n̄ + 10⌉
pub fn default_n_max(mean_photons: f64) -> usize {
    (mean_photons + 8.0 * mean_photons.sqrt() + 10.0).ceil() as usize
}

pub fn coherent_weights(mean_photons: f64, n_max: usize) -> Result<InitialField> {
    coherent_weights_with_tolerance(mean_photons, n_max, TRUNCATION_TOL)
}

/// |c_n(0)|² = n̄ⁿ e^{−n̄} / n!, with the Poisson tail beyond `n_max`
/// required to stay below `tolerance`.
pub fn coherent_weights_with_tolerance(
    mean_photons: f64,
    n_max: usize,
    tolerance: f64,
) -> Result<InitialField> {
    if !(mean_photons.is_finite() && mean_photons >= 0.0) {
        return Err(Error::invalid("nbar", format!("must be finite and >= 0, got {mean_photons}")));
    }
    if mean_photons == 0.0 {
        let mut weights = vec![0.0; n_max + 1];
        weights[0] = 1.0;
        return Ok(InitialField {
            mean_photons,
            n_max,
            weights,
            tail: 0.0,
        });
    }

    // ln p_n = ln p_{n−1} + (ln n̄ − ln n); for integer n̄ this makes
    // p_{n̄−1} and p_{n̄} bit-identical.
    let ln_mean = mean_photons.ln();
    let mut ln_p = -mean_photons;
    let mut probs = vec![ln_p.exp()];
    let mut n = 0usize;
    loop {
        n += 1;
        ln_p += ln_mean - (n as f64).ln();
        let p = ln_p.exp();
        probs.push(p);
        if n as f64 > mean_photons && (p < 1e-30 || p == 0.0) && n > n_max {
            break;
        }
    }
    // suffix sums give the tail beyond every cutoff
    let mut tails = vec![0.0; probs.len() + 1];
    for k in (0..probs.len()).rev() {
        tails[k] = tails[k + 1] + probs[k];
    }
    let tail = tails[n_max + 1];
    if tail > tolerance {
        let required = (0..probs.len())
            .find(|&k| tails[k + 1] <= tolerance)
            .unwrap_or(probs.len());
        return Err(Error::Truncation {
            n_max,
            tail,
            tolerance,
            required,
        });
    }
    Ok(InitialField {
        mean_photons,
        n_max,
        weights: probs[..=n_max].iter().map(|p| p.sqrt()).collect(),
        tail,
    })
}

/// Model parameters shared by all manifolds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Base coupling g (per-photon Rabi frequency of the exciton transition).
    pub g: f64,
    /// r_b = |μ_b / μ_e|.
    pub dipole_ratio: f64,
    /// Cavity detuning from the exciton transition, Δ_oe.
    pub delta_oe: f64,
    /// Biexciton binding frequency ΔE/ħ.
    pub binding: f64,
    /// Drop the biexciton: g_eb = 0 and Δ_ob = 0 in every manifold.
    pub two_level: bool,
    pub convention: Convention,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            g: 1.0,
            dipole_ratio: std::f64::consts::SQRT_2,
            delta_oe: 0.0,
            binding: 0.0,
            two_level: false,
            convention: Convention::Matrix,
        }
    }
}

impl ModelParams {
    pub fn two_level_mode(self, enabled: bool) -> Self {
        Self {
            two_level: enabled,
            ..self
        }
    }

    pub fn sweep(&self, n: i64) -> SweepParams {
        SweepParams {
            g: self.g,
            dipole_ratio: self.dipole_ratio,
            n,
            binding: self.binding,
            two_level: self.two_level,
            convention: self.convention,
        }
    }

    pub fn manifold_params(&self, n: i64) -> Result<(DetuningSet, CouplingPair)> {
        self.sweep(n).manifold_at(self.delta_oe)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifold {
    pub detunings: DetuningSet,
    pub couplings: CouplingPair,
    pub cubic: CubicCoefficients,
    pub eigen: EigenTriple,
    /// (c_0, c_e, c_b) at t = 0.
    pub initial: [C64; 3],
    /// Row i holds (A_i, B_i, C_i), paired with eigen.omega[i].
    pub coefficients: [[C64; 3]; 3],
}

impl Manifold {
    pub fn new(
        detunings: DetuningSet,
        couplings: CouplingPair,
        convention: Convention,
        initial: [C64; 3],
    ) -> Result<Self> {
        let cubic = cubic_coefficients(&detunings, &couplings, convention);
        let eigen = solve_cubic(&cubic)?;
        let coefficients = vandermonde_coefficients(&detunings, &couplings, &eigen, initial)?;
        Ok(Self {
            detunings,
            couplings,
            cubic,
            eigen,
            initial,
            coefficients,
        })
    }

    pub fn n(&self) -> i64 {
        self.couplings.n
    }

    /// Same manifold restarted from another state.
    pub fn with_initial(&self, initial: [C64; 3]) -> Result<Self> {
        let coefficients =
            vandermonde_coefficients(&self.detunings, &self.couplings, &self.eigen, initial)?;
        Ok(Self {
            initial,
            coefficients,
            ..self.clone()
        })
    }

    /// Amplitudes with the detuning phases removed: Σ_i row_i e^{iΩ_i t}.
    pub fn rotating_amplitudes(&self, t: f64) -> [C64; 3] {
        let mut out = [C64::new(0.0, 0.0); 3];
        for (row, &w) in self.coefficients.iter().zip(&self.eigen.omega) {
            let phase = C64::from_polar(1.0, w * t);
            for k in 0..3 {
                out[k] += row[k] * phase;
            }
        }
        out
    }

    /// (c_0, c_e, c_b) at time t.
    pub fn amplitudes(&self, t: f64) -> [C64; 3] {
        let [c0, ce, cb] = self.rotating_amplitudes(t);
        [
            c0,
            ce * C64::from_polar(1.0, -self.detunings.oe * t),
            cb * C64::from_polar(1.0, -self.detunings.ob * t),
        ]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.initial.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Manifold `n` of the model, starting in |0, n+1⟩ with amplitude `weight`.
pub fn build_manifold(params: &ModelParams, n: i64, weight: f64) -> Result<Manifold> {
    let (d, c) = params.manifold_params(n)?;
    let zero = C64::new(0.0, 0.0);
    Manifold::new(d, c, params.convention, [C64::new(weight, 0.0), zero, zero])
}

fn mat_vec(h: &[[f64; 3]; 3], v: &[C64; 3]) -> [C64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|j| v[j] * h[i][j]).sum())
}

/// Solves Σ_i Ω_i^k X_i = H^k c(0), k = 0, 1, 2 for the coefficient rows
/// X_i = (A_i, B_i, C_i). Coinciding roots are merged and the reduced
/// system solved; merged rows stay zero.
pub fn vandermonde_coefficients(
    d: &DetuningSet,
    c: &CouplingPair,
    eigen: &EigenTriple,
    initial: [C64; 3],
) -> Result<[[C64; 3]; 3]> {
    let h = manifold_matrix(d, c);
    let m1 = mat_vec(&h, &initial);
    let m2 = mat_vec(&h, &m1);
    let moments = [initial, m1, m2];

    let scale = eigen
        .omega
        .iter()
        .map(|w| w.abs())
        .chain(h.iter().flatten().map(|x| x.abs()))
        .fold(f64::MIN_POSITIVE, f64::max);

    // distinct roots and the row each one is written to
    let mut reps: Vec<(usize, f64)> = Vec::with_capacity(3);
    for (i, &w) in eigen.omega.iter().enumerate() {
        match reps.last() {
            Some(&(_, prev)) if (w - prev).abs() <= DEGENERACY_TOL * scale => {}
            _ => reps.push((i, w)),
        }
    }
    let dim = reps.len();

    let mut a = [[0.0f64; 3]; 3];
    let mut rhs = [[C64::new(0.0, 0.0); 3]; 3];
    for k in 0..dim {
        for (j, &(_, w)) in reps.iter().enumerate() {
            a[k][j] = w.powi(k as i32);
        }
        rhs[k] = moments[k];
    }
    let x = gauss_solve(&mut a, &mut rhs, dim).ok_or(Error::Singular { n: c.n })?;

    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for (j, &(row, _)) in reps.iter().enumerate() {
        out[row] = x[j];
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting on the leading `dim` block.
fn gauss_solve(a: &mut [[f64; 3]; 3], b: &mut [[C64; 3]; 3], dim: usize) -> Option<[[C64; 3]; 3]> {
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..dim {
            let f = a[row][col] / a[col][col];
            for k in col..dim {
                a[row][k] -= f * a[col][k];
            }
            let pivot_rhs = b[col];
            for (dst, src) in b[row].iter_mut().zip(pivot_rhs) {
                *dst -= src * f;
            }
        }
    }
    let mut x = [[C64::new(0.0, 0.0); 3]; 3];
    for row in (0..dim).rev() {
        let mut acc = b[row];
        for k in row + 1..dim {
            for comp in 0..3 {
                acc[comp] -= x[k][comp] * a[row][k];
            }
        }
        x[row] = acc.map(|v| v / a[row][row]);
    }
    Some(x)
}

/// The explicit cofactor expressions for the coefficients of a manifold
/// starting in its ground ket with amplitude `weight`:
///
/// ```text
/// (A_i, B_i, C_i) = −c/|M| · β_jk (α_jk + g_oe², g_oe(Δ_oe − γ_jk), g_oe g_eb)
/// ```
///
/// with (i; j, k) cyclic, α = Ω_jΩ_k, β = Ω_j − Ω_k, γ = Ω_j + Ω_k and
/// |M| the Vandermonde determinant. Returns `None` when |M| vanishes.
pub fn cofactor_coefficients(
    d: &DetuningSet,
    c: &CouplingPair,
    eigen: &EigenTriple,
    weight: f64,
) -> Option<[[C64; 3]; 3]> {
    let [w1, w2, w3] = eigen.omega;
    let det = (w2 - w1) * (w3 - w1) * (w3 - w2);
    let scale = eigen.omega.iter().fold(0.0f64, |m, w| m.max(w.abs())).max(f64::MIN_POSITIVE);
    if det.abs() <= (DEGENERACY_TOL * scale).powi(3) {
        return None;
    }
    let g2 = c.oe * c.oe;
    let pre = -weight / det;
    let row = |wj: f64, wk: f64| {
        let (alpha, beta, gamma) = (wj * wk, wj - wk, wj + wk);
        [
            C64::new(pre * beta * (alpha + g2), 0.0),
            C64::new(pre * c.oe * beta * (d.oe - gamma), 0.0),
            C64::new(pre * c.oe * c.eb * beta, 0.0),
        ]
    };
    Some([row(w2, w3), row(w3, w1), row(w1, w2)])
}

/// The two-level reduction of the cofactor formulas as commonly printed,
///
/// ```text
/// (A_p, B_p) = −c/(Ω_p − Ω_q) · (−Ω_q,  g_oe)
/// (A_q, B_q) = −c/(Ω_p − Ω_q) · ( Ω_p, −g_oe)
/// ```
///
/// where Ω_p < Ω_q are the two nonzero roots. The zero-root row is empty.
/// This form starts from −c rather than c: it equals the true coefficients
/// times −1.
pub fn two_level_printed_coefficients(
    c: &CouplingPair,
    eigen: &EigenTriple,
    weight: f64,
) -> [[C64; 3]; 3] {
    let zero_row = (0..3)
        .min_by(|&i, &j| eigen.omega[i].abs().total_cmp(&eigen.omega[j].abs()))
        .unwrap_or(1);
    let others: Vec<usize> = (0..3).filter(|&i| i != zero_row).collect();
    let (p, q) = (others[0], others[1]);
    let (wp, wq) = (eigen.omega[p], eigen.omega[q]);
    let pre = -weight / (wp - wq);
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    out[p] = [C64::new(-pre * wq, 0.0), C64::new(pre * c.oe, 0.0), C64::new(0.0, 0.0)];
    out[q] = [C64::new(pre * wp, 0.0), C64::new(-pre * c.oe, 0.0), C64::new(0.0, 0.0)];
    out
}

/// Amplitudes of one manifold at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldAmplitudes {
    pub n: i64,
    /// |0, n+1⟩
    pub c0: C64,
    /// |e, n⟩
    pub ce: C64,
    /// |b, n−1⟩
    pub cb: C64,
}

impl ManifoldAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.ce.norm_sqr() + self.cb.norm_sqr()
    }
}

/// All manifolds at time `t`, ordered by n starting at −1.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeSet {
    pub t: f64,
    pub manifolds: Vec<ManifoldAmplitudes>,
}

impl AmplitudeSet {
    pub fn get(&self, n: i64) -> Option<&ManifoldAmplitudes> {
        let first = self.manifolds.first()?.n;
        let idx = usize::try_from(n - first).ok()?;
        self.manifolds.get(idx).filter(|m| m.n == n)
    }
}

/// Evaluate every manifold on a time grid. Samples are computed in parallel.
pub fn evolve(manifolds: &[Manifold], times: &[f64]) -> Vec<AmplitudeSet> {
    times
        .par_iter()
        .map(|&t| AmplitudeSet {
            t,
            manifolds: manifolds
                .iter()
                .map(|m| {
                    let [c0, ce, cb] = m.amplitudes(t);
                    ManifoldAmplitudes {
                        n: m.n(),
                        c0,
                        ce,
                        cb,
                    }
                })
                .collect(),
        })
        .collect()
}

/// Cavity mode in a coherent state coupled to the dot, resolved into
/// manifolds n = −1 ..= n_max − 1.
#[derive(Clone, Debug)]
pub struct DressedSystem {
    pub params: ModelParams,
    pub field: InitialField,
    pub manifolds: Vec<Manifold>,
}

impl DressedSystem {
    pub fn new(params: ModelParams, field: InitialField) -> Result<Self> {
        // manifold n starts in |0, n+1⟩, so it carries the (n+1)-photon amplitude
        let manifolds = (-1..field.n_max as i64)
            .into_par_iter()
            .map(|n| build_manifold(&params, n, field.weights[(n + 1) as usize]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            field,
            manifolds,
        })
    }

    pub fn manifold(&self, n: i64) -> Option<&Manifold> {
        self.manifolds.get(usize::try_from(n + 1).ok()?)
    }

    pub fn evolve(&self, times: &[f64]) -> Vec<AmplitudeSet> {
        evolve(&self.manifolds, times)
    }
}
