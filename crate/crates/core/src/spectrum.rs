//! Dressed-state spectrum of a single excitation manifold.
//!
//! Substituting `c_0 = A e^{iΩt}`, `c_e = B e^{i(Ω−Δ_oe)t}`,
//! `c_b = C e^{i(Ω−Δ_ob)t}` into the equations of motion turns each
//! manifold into the eigenproblem of the real symmetric matrix
//!
//! ```text
//! [ 0     g_oe   0    ]
//! [ g_oe  Δ_oe   g_eb ]
//! [ 0     g_eb   Δ_ob ]
//! ```
//!
//! whose characteristic polynomial is `Ω³ + a2 Ω² + a1 Ω + a0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Cavity detunings from the exciton and biexciton transitions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetuningSet {
    /// Δ_oe = ω − ω_oe
    pub oe: f64,
    /// Δ_eb = ω − ω_eb
    pub eb: f64,
    /// Δ_ob = Δ_oe + Δ_eb, the two-photon detuning
    pub ob: f64,
}

impl DetuningSet {
    /// From the exciton detuning and the binding frequency ΔE/ħ.
    pub fn from_exciton(delta_oe: f64, binding: f64) -> Self {
        let eb = delta_oe + binding;
        Self {
            oe: delta_oe,
            eb,
            ob: delta_oe + eb,
        }
    }

    /// Two-level substitution: Δ_ob = 0, so Δ_eb = −Δ_oe.
    pub fn two_level(delta_oe: f64) -> Self {
        Self {
            oe: delta_oe,
            eb: -delta_oe,
            ob: 0.0,
        }
    }
}

/// Δ_oe(eb) = ω − ω_oe(eb).
pub fn detunings(omega_cavity: f64, omega_oe: f64, omega_eb: f64) -> DetuningSet {
    let oe = omega_cavity - omega_oe;
    let eb = omega_cavity - omega_eb;
    DetuningSet { oe, eb, ob: oe + eb }
}

/// Couplings of manifold `n`, the block `{|0, n+1⟩, |e, n⟩, |b, n−1⟩}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingPair {
    pub n: i64,
    pub oe: f64,
    pub eb: f64,
}

/// g_oe = g √(n+1), g_eb = r_b g √n. Manifold −1 is the bare vacuum |0, 0⟩.
pub fn couplings(g: f64, dipole_ratio: f64, n: i64) -> Result<CouplingPair> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::invalid("g", format!("must be finite and >= 0, got {g}")));
    }
    if !(dipole_ratio.is_finite() && dipole_ratio >= 0.0) {
        return Err(Error::invalid("dipole_ratio", format!("must be >= 0, got {dipole_ratio}")));
    }
    if n < -1 {
        return Err(Error::invalid("n", format!("manifold index must be >= -1, got {n}")));
    }
    Ok(CouplingPair {
        n,
        oe: g * ((n + 1) as f64).sqrt(),
        eb: dipole_ratio * g * (n.max(0) as f64).sqrt(),
    })
}

/// Sign convention for the constant term of the characteristic cubic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convention {
    /// a0 = +g_oe² Δ_ob, the characteristic polynomial of the manifold matrix.
    #[default]
    Matrix,
    /// a0 = −g_oe² Δ_ob as commonly printed; not consistent with the dynamics
    /// when Δ_ob ≠ 0.
    AsPrinted,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Matrix => "matrix",
            Convention::AsPrinted => "as-printed",
        })
    }
}

impl FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "matrix" => Ok(Convention::Matrix),
            "as-printed" => Ok(Convention::AsPrinted),
            other => Err(format!("unknown convention `{other}` (expected matrix or as-printed)")),
        }
    }
}

/// Ω³ + a2 Ω² + a1 Ω + a0. The single real coefficients are sometimes
/// written a2, a1², a0³; those exponents are labels, not powers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicCoefficients {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub convention: Convention,
}

impl CubicCoefficients {
    pub fn new(a2: f64, a1: f64, a0: f64) -> Self {
        Self {
            a2,
            a1,
            a0,
            convention: Convention::Matrix,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((x + self.a2) * x + self.a1) * x + self.a0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (3.0 * x + 2.0 * self.a2) * x + self.a1
    }

    /// Frequency scale of the coefficients: max(|a2|, |a1|^½, |a0|^⅓).
    pub fn scale(&self) -> f64 {
        self.a2
            .abs()
            .max(self.a1.abs().sqrt())
            .max(self.a0.abs().cbrt())
    }

    /// 4a1³ − a1²a2² − 18 a1 a2 a0 + 27 a0² + 4 a0 a2³: negative when all
    /// three roots are real and distinct.
    pub fn radicand(&self) -> f64 {
        let (a2, a1, a0) = (self.a2, self.a1, self.a0);
        4.0 * a1.powi(3) - a1 * a1 * a2 * a2 - 18.0 * a1 * a2 * a0 + 27.0 * a0 * a0
            + 4.0 * a0 * a2.powi(3)
    }
}

pub fn cubic_coefficients(
    d: &DetuningSet,
    c: &CouplingPair,
    convention: Convention,
) -> CubicCoefficients {
    let a0 = c.oe * c.oe * d.ob;
    CubicCoefficients {
        a2: -(d.oe + d.ob),
        a1: d.oe * d.ob - c.oe * c.oe - c.eb * c.eb,
        a0: match convention {
            Convention::Matrix => a0,
            Convention::AsPrinted => -a0,
        },
        convention,
    }
}

/// Real symmetric matrix whose eigenvalues are the dressed frequencies.
pub fn manifold_matrix(d: &DetuningSet, c: &CouplingPair) -> [[f64; 3]; 3] {
    [
        [0.0, c.oe, 0.0],
        [c.oe, d.oe, c.eb],
        [0.0, c.eb, d.ob],
    ]
}

/// Dressed frequencies Ω1 ≤ Ω2 ≤ Ω3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenTriple {
    pub omega: [f64; 3],
    /// a2 / 3, the trace offset.
    pub offset: f64,
}

impl EigenTriple {
    /// Ω'_j = Ω_j + a2/3: the roots of the depressed cubic, summing to zero.
    pub fn shifted(&self) -> [f64; 3] {
        self.omega.map(|w| w + self.offset)
    }

    /// Largest relative violation of the three Vieta identities.
    pub fn vieta_error(&self, c: &CubicCoefficients) -> f64 {
        let [x, y, z] = self.omega;
        let s = c.scale().max(f64::MIN_POSITIVE);
        let e1 = (x + y + z + c.a2).abs() / s;
        let e2 = (x * y + x * z + y * z - c.a1).abs() / (s * s);
        let e3 = (x * y * z + c.a0).abs() / (s * s * s);
        e1.max(e2).max(e3)
    }

    /// Largest |p(Ω_j)| relative to the coefficient scale.
    pub fn residual(&self, c: &CubicCoefficients) -> f64 {
        let s = c.scale().max(1.0);
        self.omega
            .iter()
            .map(|&w| c.eval(w).abs() / s.powi(3))
            .fold(0.0, f64::max)
    }
}

/// Discriminant tolerance separating "three real roots, rounding noise"
/// from a genuinely complex pair.
const COMPLEX_ROOT_TOL: f64 = 1e-8;

/// Three real roots by the trigonometric (Viète) method, each polished by
/// one Newton step.
pub fn solve_cubic(coeffs: &CubicCoefficients) -> Result<EigenTriple> {
    let offset = coeffs.a2 / 3.0;
    let scale = coeffs.scale();
    if !(scale.is_finite()) {
        return Err(Error::invalid("coefficients", "must be finite"));
    }
    if scale == 0.0 {
        return Ok(EigenTriple {
            omega: [0.0; 3],
            offset,
        });
    }
    // work in units of `scale`
    let a2 = coeffs.a2 / scale;
    let a1 = coeffs.a1 / (scale * scale);
    let a0 = coeffs.a0 / (scale * scale * scale);
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2.powi(3) / 27.0 - a2 * a1 / 3.0 + a0;
    let disc = 4.0 * p.powi(3) + 27.0 * q * q;
    let size = 4.0 * p.abs().powi(3) + 27.0 * q * q;
    if disc > COMPLEX_ROOT_TOL * size + 1e-24 {
        return Err(Error::ComplexRoots {
            a2: coeffs.a2,
            a1: coeffs.a1,
            a0: coeffs.a0,
            discriminant: coeffs.radicand(),
        });
    }

    if coeffs.a0 == 0.0 {
        // Ω = 0 exactly; the rest is Ω² + a2 Ω + a1
        let (a2, a1) = (coeffs.a2, coeffs.a1);
        let root = (a2 * a2 - 4.0 * a1).max(0.0).sqrt();
        let big = -0.5 * (a2 + a2.signum() * root);
        let small = if big != 0.0 { a1 / big } else { 0.0 };
        let mut omega = [0.0, big, small];
        omega.sort_by(f64::total_cmp);
        return Ok(EigenTriple { omega, offset });
    }

    let depressed: [f64; 3] = if p.abs() < 1e-14 {
        let y = -q.cbrt();
        [y; 3]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        [0, 1, 2].map(|k| r * (theta - 2.0 * PI * k as f64 / 3.0).cos())
    };

    let mut omega = depressed.map(|y| (y - a2 / 3.0) * scale);
    for w in omega.iter_mut() {
        let f = coeffs.eval(*w);
        let df = coeffs.derivative(*w);
        if df != 0.0 {
            let polished = *w - f / df;
            if coeffs.eval(polished).abs() < f.abs() {
                *w = polished;
            }
        }
    }
    omega.sort_by(f64::total_cmp);
    Ok(EigenTriple { omega, offset })
}

/// Radical (Cardano-type) form of the roots using complex intermediates:
///
/// ```text
/// X³ = 36 a1 a2 − 108 a0 − 8 a2³ + 12√3 √(radicand)
/// Y² = a1 − a2²/3
/// Ω1   = −a2/3 + (X² − 12Y²) / (6X)
/// Ω2,3 = −a2/3 − (X² e^{∓iπ/3} − 12Y² e^{±iπ/3}) / (6X)
/// ```
///
/// with X the principal cube root. Real parts are returned in ascending
/// order. Falls back to [`solve_cubic`] when |X| vanishes (triple root).
pub fn solve_cubic_closed_form(coeffs: &CubicCoefficients) -> Result<EigenTriple> {
    let (a2, a1, a0) = (coeffs.a2, coeffs.a1, coeffs.a0);
    let radicand = C64::new(coeffs.radicand(), 0.0);
    let x3 = C64::new(36.0 * a1 * a2 - 108.0 * a0 - 8.0 * a2.powi(3), 0.0)
        + 12.0 * 3f64.sqrt() * radicand.sqrt();
    let x = x3.cbrt();
    if x.norm() < 1e-12 * coeffs.scale().max(1.0) {
        return solve_cubic(coeffs);
    }
    let y2 = a1 - a2 * a2 / 3.0;
    let minus = C64::from_polar(1.0, -PI / 3.0);
    let plus = C64::from_polar(1.0, PI / 3.0);
    let base = -a2 / 3.0;
    let x2 = x * x;
    let w1 = base + (x2 - 12.0 * y2) / (6.0 * x);
    let w2 = base - (x2 * minus - 12.0 * y2 * plus) / (6.0 * x);
    let w3 = base - (x2 * plus - 12.0 * y2 * minus) / (6.0 * x);
    let mut omega = [w1.re, w2.re, w3.re];
    omega.sort_by(f64::total_cmp);
    Ok(EigenTriple {
        omega,
        offset: a2 / 3.0,
    })
}

/// Manifold parameters held fixed across a detuning sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepParams {
    pub g: f64,
    pub dipole_ratio: f64,
    pub n: i64,
    /// ΔE/ħ in the same frequency unit as `g`.
    pub binding: f64,
    pub two_level: bool,
    pub convention: Convention,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub delta_oe: f64,
    pub omega: [f64; 3],
    pub shifted: [f64; 3],
}

impl SweepParams {
    pub fn manifold_at(&self, delta_oe: f64) -> Result<(DetuningSet, CouplingPair)> {
        let mut c = couplings(self.g, self.dipole_ratio, self.n)?;
        let d = if self.two_level {
            c.eb = 0.0;
            DetuningSet::two_level(delta_oe)
        } else {
            DetuningSet::from_exciton(delta_oe, self.binding)
        };
        Ok((d, c))
    }
}

/// Dressed frequencies along a grid of exciton detunings. Rows are computed
/// independently, then branches are reordered so each follows the linear
/// extrapolation of its previous two points.
pub fn eigen_sweep(params: &SweepParams, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = grid
        .par_iter()
        .map(|&delta| {
            let (d, c) = params.manifold_at(delta)?;
            let e = solve_cubic(&cubic_coefficients(&d, &c, params.convention))?;
            Ok(SweepRow {
                delta_oe: delta,
                omega: e.omega,
                shifted: e.shifted(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    match_branches(&mut rows);
    Ok(rows)
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn match_branches(rows: &mut [SweepRow]) {
    for k in 1..rows.len() {
        let prev = rows[k - 1].omega;
        let predicted = if k >= 2 {
            let pp = rows[k - 2].omega;
            let (t0, t1, t2) = (rows[k - 2].delta_oe, rows[k - 1].delta_oe, rows[k].delta_oe);
            let h = t1 - t0;
            let ratio = if h != 0.0 { (t2 - t1) / h } else { 0.0 };
            [0, 1, 2].map(|j| prev[j] + (prev[j] - pp[j]) * ratio)
        } else {
            prev
        };
        let cur = rows[k].omega;
        let cost = |perm: &[usize; 3]| -> f64 {
            (0..3).map(|j| (cur[perm[j]] - predicted[j]).abs()).sum()
        };
        let mut best = PERMUTATIONS[0];
        let mut best_cost = cost(&best);
        for perm in &PERMUTATIONS[1..] {
            let c = cost(perm);
            // strict improvement keeps ascending order at exact ties
            if c < best_cost * (1.0 - 1e-12) {
                best = *perm;
                best_cost = c;
            }
        }
        let shifted = rows[k].shifted;
        rows[k].omega = best.map(|i| cur[i]);
        rows[k].shifted = best.map(|i| shifted[i]);
    }
}
