//! `qdcavity`: dressed-state spectra, populations, photon statistics and
//! inversion for a three-level quantum dot in a cavity.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qd_cavity::runner::{self, Command, Grid, MaterialSource, RunConfig, OUT_DIR_ENV};
use qd_cavity::spectrum::Convention;

#[derive(Parser)]
#[command(name = "qdcavity", version, about = "Three-level quantum dot in a single-mode cavity")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dressed-state frequencies Ω'_j over a sweep of the exciton detuning
    Spectrum(Common),
    /// Ground, exciton and biexciton populations in time
    Populations(Common),
    /// Photon-number distribution p(n, t) and its slice at n = n̄
    Photons(Common),
    /// Inversions W_0e, W_eb and collapse–revival metrics
    Inversion(Common),
    /// Run the analytic-vs-integrator oracle suite
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Built-in material preset (cds)
    #[arg(long, conflicts_with = "material")]
    preset: Option<String>,
    /// Material file with key = value lines
    #[arg(long)]
    material: Option<PathBuf>,
    /// Base coupling (units of g, or meV with --physical)
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Biexciton-to-exciton dipole ratio r_b
    #[arg(long, allow_negative_numbers = true)]
    rb: Option<f64>,
    /// Mean photon number of the initial coherent field
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    nbar: f64,
    /// Largest retained photon number (default ⌈n̄ + 8√n̄ + 10⌉)
    #[arg(long)]
    n_max: Option<usize>,
    /// Manifold index for `spectrum`
    #[arg(long, default_value_t = 10, allow_negative_numbers = true)]
    n: i64,
    /// Exciton detuning Δ_oe (units of g, or meV with --physical)
    #[arg(long, allow_negative_numbers = true)]
    delta_oe: Option<f64>,
    /// Cavity photon energy in eV (with --physical, sets Δ_oe)
    #[arg(long)]
    cavity_energy: Option<f64>,
    /// Biexciton binding ΔE/ħ (units of g, or meV with --physical)
    #[arg(long, allow_negative_numbers = true)]
    binding: Option<f64>,
    /// Detuning sweep start:stop:count
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Time grid start:stop:count
    #[arg(long, allow_hyphen_values = true)]
    time: Option<String>,
    /// Drop the biexciton (g_eb = 0, Δ_ob = 0)
    #[arg(long)]
    two_level: bool,
    /// Cubic constant-term sign: matrix or as-printed
    #[arg(long, default_value = "matrix")]
    coefficient_convention: String,
    /// meV / ps units computed from the material model
    #[arg(long)]
    physical: bool,
    /// Seed for `validate` draws
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of randomized draws for `validate`
    #[arg(long, default_value_t = 100)]
    draws: usize,
    /// Also write amplitudes.csv (populations)
    #[arg(long)]
    dump_amplitudes: bool,
    /// Output directory
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn into_config(self) -> Result<RunConfig, String> {
        let grid = |s: Option<String>| -> Result<Option<Grid>, String> {
            s.map(|s| s.parse::<Grid>().map_err(|e| e.to_string())).transpose()
        };
        let convention: Convention = self.coefficient_convention.parse()?;
        let material = match (self.preset, self.material) {
            (Some(p), _) => Some(MaterialSource::Preset(p)),
            (None, Some(f)) => Some(MaterialSource::File(f)),
            (None, None) => None,
        };
        Ok(RunConfig {
            material,
            g: self.g,
            dipole_ratio: self.rb,
            nbar: self.nbar,
            n_max: self.n_max,
            n: self.n,
            delta_oe: self.delta_oe,
            cavity_energy: self.cavity_energy,
            binding: self.binding,
            range: grid(self.range)?,
            time: grid(self.time)?,
            two_level: self.two_level,
            convention,
            physical: self.physical,
            seed: self.seed,
            draws: self.draws,
            dump_amplitudes: self.dump_amplitudes,
            out_dir: self.out,
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match cli.command {
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Populations(a) => (Command::Populations, a),
        Cmd::Photons(a) => (Command::Photons, a),
        Cmd::Inversion(a) => (Command::Inversion, a),
        Cmd::Validate(a) => (Command::Validate, a),
    };
    let cfg = match args.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match runner::run(command, &cfg) {
        Ok(outcome) => {
            for m in &outcome.messages {
                eprintln!("warning: {m}");
            }
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            match outcome.report {
                Some(report) => {
                    print!("{}", report.summary());
                    ExitCode::from(if report.passed() { 0 } else { 1 })
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
