//! Quantum-dot material model: confinement energies of a spherical
//! infinite well, envelope functions and dipole ratios.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::{legendre, GaussLegendre};

/// ħ in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_9;

/// ħ²/(2 m_o) in eV·nm², m_o the free-electron mass.
pub const HBAR2_OVER_2M0_EV_NM2: f64 = 0.038_099_82;

/// Energy in meV to angular frequency in rad/ps.
pub fn mev_to_rad_per_ps(energy_mev: f64) -> f64 {
    energy_mev / HBAR_MEV_PS
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialParams {
    /// ħω_g, eV.
    pub band_gap: f64,
    /// Biexciton binding energy ΔE, meV.
    pub binding_energy: f64,
    /// Dot radius R, nm.
    pub dot_radius: f64,
    /// Exciton Bohr radius a_B, nm.
    pub bohr_radius: f64,
    /// Electron effective mass in units of m_o.
    pub electron_mass: f64,
    /// m_h / m_e.
    pub mass_ratio: f64,
    /// |μ_b / μ_e|.
    pub dipole_ratio: f64,
    /// Replaces the reduced mass derived from `electron_mass` and `mass_ratio`.
    pub reduced_mass: Option<f64>,
    /// Replaces the confinement formula for the exciton transition, eV.
    pub exciton_energy: Option<f64>,
}

impl MaterialParams {
    /// CdS nanocrystal. The electron mass 0.19 m_o is a literature value,
    /// not part of the measured parameter set.
    pub fn cds() -> Self {
        Self {
            band_gap: 2.56,
            binding_energy: 28.0,
            dot_radius: 1.7,
            bohr_radius: 2.9,
            electron_mass: 0.19,
            mass_ratio: 4.2,
            dipole_ratio: SQRT_2,
            reduced_mass: None,
            exciton_energy: None,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cds" => Some(Self::cds()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("band_gap", self.band_gap),
            ("binding_energy", self.binding_energy),
            ("dot_radius", self.dot_radius),
            ("bohr_radius", self.bohr_radius),
            ("electron_mass", self.electron_mass),
            ("mass_ratio", self.mass_ratio),
            ("dipole_ratio", self.dipole_ratio),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if let Some(m) = self.reduced_mass {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::invalid("reduced_mass", format!("must be > 0, got {m}")));
            }
        }
        if let Some(e) = self.exciton_energy {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::invalid("exciton_energy", format!("must be > 0, got {e}")));
            }
        }
        Ok(())
    }

    pub fn hole_mass(&self) -> f64 {
        self.electron_mass * self.mass_ratio
    }

    /// m_r = m_e m_h / (m_e + m_h), in units of m_o.
    pub fn reduced_mass(&self) -> f64 {
        self.reduced_mass.unwrap_or_else(|| {
            let (me, mh) = (self.electron_mass, self.hole_mass());
            me * mh / (me + mh)
        })
    }

    pub fn strong_confinement(&self) -> bool {
        self.dot_radius < self.bohr_radius
    }

    /// Exciton transition energy in eV, honoring the `exciton_energy` override.
    pub fn exciton_energy(&self, level: LevelIndex) -> Result<f64> {
        match self.exciton_energy {
            Some(e) => Ok(e),
            None => exciton_transition_energy(self, level),
        }
    }

    /// Parse `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut band_gap = None;
        let mut binding_energy = None;
        let mut dot_radius = None;
        let mut bohr_radius = None;
        let mut electron_mass = None;
        let mut mass_ratio = None;
        let mut dipole_ratio = None;
        let mut reduced_mass = None;
        let mut exciton_energy = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno,
                reason: format!("expected key = value, got `{line}`"),
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|e| Error::Parse {
                line: lineno,
                reason: format!("`{}`: {e}", value.trim()),
            })?;
            let slot = match key {
                "band_gap" => &mut band_gap,
                "binding_energy" => &mut binding_energy,
                "dot_radius" => &mut dot_radius,
                "bohr_radius" => &mut bohr_radius,
                "electron_mass" => &mut electron_mass,
                "mass_ratio" => &mut mass_ratio,
                "dipole_ratio" => &mut dipole_ratio,
                "reduced_mass" => &mut reduced_mass,
                "exciton_energy" => &mut exciton_energy,
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        reason: format!("unknown key `{other}`"),
                    })
                }
            };
            *slot = Some(value);
        }

        let need = |v: Option<f64>, name: &'static str| {
            v.ok_or_else(|| Error::invalid(name, "missing from material file"))
        };
        let params = Self {
            band_gap: need(band_gap, "band_gap")?,
            binding_energy: need(binding_energy, "binding_energy")?,
            dot_radius: need(dot_radius, "dot_radius")?,
            bohr_radius: need(bohr_radius, "bohr_radius")?,
            electron_mass: need(electron_mass, "electron_mass")?,
            mass_ratio: need(mass_ratio, "mass_ratio")?,
            dipole_ratio: dipole_ratio.unwrap_or(SQRT_2),
            reduced_mass,
            exciton_energy,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "band_gap={:?}", self.band_gap);
        let _ = writeln!(s, "binding_energy={:?}", self.binding_energy);
        let _ = writeln!(s, "dot_radius={:?}", self.dot_radius);
        let _ = writeln!(s, "bohr_radius={:?}", self.bohr_radius);
        let _ = writeln!(s, "electron_mass={:?}", self.electron_mass);
        let _ = writeln!(s, "mass_ratio={:?}", self.mass_ratio);
        let _ = writeln!(s, "dipole_ratio={:?}", self.dipole_ratio);
        if let Some(m) = self.reduced_mass {
            let _ = writeln!(s, "reduced_mass={m:?}");
        }
        if let Some(e) = self.exciton_energy {
            let _ = writeln!(s, "exciton_energy={e:?}");
        }
        s
    }
}

/// Confined level: `m`-th zero (m ≥ 1) of the order-`l` spherical Bessel function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LevelIndex {
    pub m: u32,
    pub l: u32,
}

impl LevelIndex {
    pub const GROUND: LevelIndex = LevelIndex { m: 1, l: 0 };

    pub fn new(m: u32, l: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "root index starts at 1"));
        }
        Ok(Self { m, l })
    }
}

/// Spherical Bessel function of the first kind, j_l(x).
pub fn spherical_bessel_j(l: u32, x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-300 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let lf = l as f64;
    let value = if ax <= lf.max(1.0) {
        series_j(l, ax)
    } else {
        let mut jm = ax.sin() / ax;
        if l == 0 {
            jm
        } else {
            let mut j = jm / ax - ax.cos() / ax;
            for k in 1..l {
                let next = (2 * k + 1) as f64 / ax * j - jm;
                jm = j;
                j = next;
            }
            j
        }
    };
    // j_l(-x) = (-1)^l j_l(x)
    if x < 0.0 && l % 2 == 1 {
        -value
    } else {
        value
    }
}

fn series_j(l: u32, x: f64) -> f64 {
    let lf = l as f64;
    // x^l / (2l+1)!!
    let mut lead = 1.0;
    for k in 0..l {
        lead *= x / (2 * k + 3) as f64;
    }
    let half_x2 = 0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -half_x2 / (kf * (2.0 * lf + 2.0 * kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// `level.m`-th positive zero of j_l, located by scanning for a sign change
/// and refined by bisection.
pub fn bessel_root(level: LevelIndex) -> Result<f64> {
    let LevelIndex { m, l } = level;
    if m == 0 {
        return Err(Error::invalid("m", "root index starts at 1"));
    }
    // Zeros of j_l lie above l + 1/2; consecutive zeros are roughly π apart.
    let limit = (m as f64 + l as f64 + 2.0) * PI + l as f64;
    let step = 0.05;
    let mut x0 = l as f64 + 0.5;
    let mut f0 = spherical_bessel_j(l, x0);
    let mut found = 0;
    while x0 < limit {
        let x1 = x0 + step;
        let f1 = spherical_bessel_j(l, x1);
        if f1 == 0.0 {
            found += 1;
            if found == m {
                return Ok(x1);
            }
        } else if f0 != 0.0 && f0.signum() != f1.signum() {
            found += 1;
            if found == m {
                return Ok(bisect(|x| spherical_bessel_j(l, x), x0, x1));
            }
        }
        x0 = x1;
        f0 = f1;
    }
    Err(Error::BesselBracket { l, m, limit })
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// ħω_oe = ħω_g + (ħ²/2m_r)(κ_ml/R)², in eV.
pub fn exciton_transition_energy(mat: &MaterialParams, level: LevelIndex) -> Result<f64> {
    mat.validate()?;
    let kappa = bessel_root(level)?;
    Ok(mat.band_gap + confinement_energy(mat.reduced_mass(), mat.dot_radius, kappa))
}

/// Kinetic confinement term in eV for reduced mass `m_r` (units of m_o) and radius in nm.
pub fn confinement_energy(reduced_mass: f64, radius: f64, kappa: f64) -> f64 {
    HBAR2_OVER_2M0_EV_NM2 / reduced_mass * (kappa / radius).powi(2)
}

/// ħω_eb = ħω_oe − ΔE. Both energies must share a unit.
pub fn biexciton_transition_energy(exciton_energy: f64, binding_energy: f64) -> Result<f64> {
    if binding_energy < 0.0 {
        return Err(Error::invalid("binding_energy", "must be >= 0"));
    }
    Ok(exciton_energy - binding_energy)
}

/// Single-particle envelope of a spherical infinite well,
/// φ(r, θ) ∝ j_l(κ r / R) P_l(cos θ), rescaled to unit norm on the sphere.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub level: LevelIndex,
    pub kappa: f64,
    pub radius: f64,
    raw_prefactor: f64,
    norm: f64,
}

const QUAD_ORDER: usize = 16;
const QUAD_TOL: f64 = 1e-13;
const MAX_PANELS: usize = 512;

impl Envelope {
    /// Envelope with the conventional prefactor √(2 a_B³/R³)/j_{l+1}(κ).
    pub fn new(mat: &MaterialParams, level: LevelIndex) -> Result<Self> {
        let kappa = bessel_root(level)?;
        let raw = (2.0 * mat.bohr_radius.powi(3) / mat.dot_radius.powi(3)).sqrt()
            / spherical_bessel_j(level.l + 1, kappa);
        Self::with_raw_prefactor(mat.dot_radius, level, raw)
    }

    pub fn with_raw_prefactor(radius: f64, level: LevelIndex, raw_prefactor: f64) -> Result<Self> {
        if !(raw_prefactor.is_finite() && raw_prefactor != 0.0) {
            return Err(Error::invalid("raw_prefactor", "must be finite and nonzero"));
        }
        let kappa = bessel_root(level)?;
        let mut env = Self {
            level,
            kappa,
            radius,
            raw_prefactor,
            norm: 1.0,
        };
        let n2 = env.raw_overlap(&env)?;
        env.norm = n2.sqrt().recip();
        Ok(env)
    }

    fn radial(&self, r: f64) -> f64 {
        self.raw_prefactor * spherical_bessel_j(self.level.l, self.kappa * r / self.radius)
    }

    /// Normalized envelope at radius `r` and polar cosine `mu`.
    pub fn value(&self, r: f64, mu: f64) -> f64 {
        self.norm * self.radial(r) * legendre(self.level.l as usize, mu)
    }

    fn raw_overlap(&self, other: &Envelope) -> Result<f64> {
        let r_max = self.radius.min(other.radius);
        let radial = |r: f64| self.radial(r) * other.radial(r) * r * r;
        let radial = converged(|gl, panels| gl.integrate(radial, 0.0, r_max, panels), |gl| {
            gl.integrate(|r| radial(r).abs(), 0.0, r_max, 64)
        })?;
        let (la, lb) = (self.level.l as usize, other.level.l as usize);
        let angular = |mu: f64| legendre(la, mu) * legendre(lb, mu);
        let angular = converged(
            |gl, panels| 2.0 * PI * gl.integrate(angular, -1.0, 1.0, panels),
            |gl| 2.0 * PI * gl.integrate(|mu| angular(mu).abs(), -1.0, 1.0, 64),
        )?;
        Ok(radial * angular)
    }

    /// ∫ φ_a φ_b dV over the dot.
    pub fn overlap(&self, other: &Envelope) -> Result<f64> {
        Ok(self.norm * other.norm * self.raw_overlap(other)?)
    }
}

/// Doubles the panel count until successive estimates agree relative to
/// `scale`, the integral of the absolute integrand.
fn converged<F, S>(f: F, scale: S) -> Result<f64>
where
    F: Fn(&GaussLegendre, usize) -> f64,
    S: Fn(&GaussLegendre) -> f64,
{
    let gl = GaussLegendre::new(QUAD_ORDER);
    let scale = scale(&gl).max(f64::MIN_POSITIVE);
    let mut panels = 2;
    let mut prev = f(&gl, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let cur = f(&gl, panels);
        if (cur - prev).abs() <= QUAD_TOL * scale {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        previous: prev,
        current: f(&gl, panels),
    })
}

/// ∫ φ_a φ_b dV for two levels of the same dot.
pub fn envelope_overlap(mat: &MaterialParams, a: LevelIndex, b: LevelIndex) -> Result<f64> {
    Envelope::new(mat, a)?.overlap(&Envelope::new(mat, b)?)
}

/// Dipole moments relative to the bare interband moment μ_oe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleRatios {
    /// μ_e / μ_oe
    pub exciton: f64,
    /// |μ_b / μ_e|
    pub biexciton: f64,
}

/// Dipole ratios for an electron–hole pair sharing `level`, with product
/// envelopes for the exciton and biexciton.
pub fn dipole_ratios(mat: &MaterialParams, level: LevelIndex) -> Result<DipoleRatios> {
    mat.validate()?;
    dipole_ratios_for(&Envelope::new(mat, level)?)
}

pub fn dipole_ratios_for(env: &Envelope) -> Result<DipoleRatios> {
    // electron-hole overlap of the exciton
    let pair = env.overlap(env)?;
    // biexciton: electron and hole factors each integrate against the
    // exciton's conjugate, the shared coordinate against itself
    let biexciton = SQRT_2 * pair * pair * pair;
    Ok(DipoleRatios {
        exciton: pair,
        biexciton: (biexciton / pair).abs(),
    })
}
