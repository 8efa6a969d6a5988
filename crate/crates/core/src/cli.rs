//! Command-line driver: `acse run`, `acse fci`, `acse check`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::fci::fci_solve;
use crate::hamio::{build_reduced_hamiltonian, read_fcidump, OrbitalSpace};
use crate::rdm::{read_rdm, spin_summed_occupations, validate, write_rdm, Rdm1, Tolerances};
use crate::recon::ReconstructionKind;
use crate::residual::MaskMode;
use crate::solver::{load_reference, AcseResult, Propagator, SolverConfig, Termination, TrajectoryWriter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_STOPPED: i32 = 2;
pub const EXIT_MAX_ITER: i32 = 3;
pub const EXIT_SIZE_CAP: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "acse", version, about = "ACSE 2-RDM solver with a full-CI oracle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Propagate a reference 2-RDM with the ACSE.
    Run(RunArgs),
    /// Solve for the lowest eigenstates by full CI.
    Fci(FciArgs),
    /// Validate an RDM file against the trace and symmetry identities.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub fcidump: PathBuf,
    /// `hf` or an ACSE-RDM v1 file.
    #[arg(long, default_value = "hf")]
    pub reference: String,
    #[arg(long, default_value = "v", value_parser = parse_kind)]
    pub recon: ReconstructionKind,
    #[arg(long, default_value = "propagate", value_parser = parse_mask)]
    pub mask: MaskMode,
    /// 1-based orbital list, e.g. `4-7,9`.
    #[arg(long)]
    pub active: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub etol: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value = "trajectory.csv")]
    pub trajectory: PathBuf,
    /// Keep the reference 1-RDM instead of refreshing it from the 2-RDM.
    #[arg(long = "frozen-d1")]
    pub frozen_d1: bool,
}

#[derive(Args, Debug)]
pub struct FciArgs {
    #[arg(long)]
    pub fcidump: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub states: usize,
    /// Write 1- and 2-RDMs of one state in ACSE-RDM v1 format.
    #[arg(long = "rdm-out")]
    pub rdm_out: Option<PathBuf>,
    /// 0-based state whose RDMs go to `--rdm-out`.
    #[arg(long = "rdm-state", default_value_t = 0)]
    pub rdm_state: usize,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub rdm: PathBuf,
    #[arg(long)]
    pub fcidump: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<ReconstructionKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mask(s: &str) -> std::result::Result<MaskMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parse a 1-based list such as `4-7,9` into sorted 0-based indices.
pub fn parse_active(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(format!("empty item in active list '{s}'"));
        }
        let num = |t: &str| -> std::result::Result<usize, String> {
            match t.trim().parse::<usize>() {
                Ok(0) => Err("active orbitals are numbered from 1".into()),
                Ok(v) => Ok(v - 1),
                Err(_) => Err(format!("invalid orbital number '{t}'")),
            }
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("descending range '{part}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Failure carrying its exit status.
struct Exit(i32, String);

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::SizeCap(_) => EXIT_SIZE_CAP,
            Error::NonFinite { .. } => EXIT_STOPPED,
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_INPUT,
        };
        Exit(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Exit {
    Exit(EXIT_USAGE, msg.into())
}

/// Parse arguments and dispatch. Returns the process exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let res = configure_threads().and_then(|_| match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Fci(a) => cmd_fci(a, out),
        Command::Check(a) => cmd_check(a, out),
    });
    match res {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn configure_threads() -> std::result::Result<(), Exit> {
    let Ok(v) = std::env::var("ACSE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| usage(format!("ACSE_THREADS must be a non-negative integer, got '{v}'")))?;
    if n > 0 {
        // A pool installed earlier in the same process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Exit + '_ {
    move |source| Exit::from(Error::Io { path: path.into(), source })
}

pub fn run_manifest(a: &RunArgs) -> std::result::Result<(SolverConfig, Option<Vec<usize>>), String> {
    let active = a.active.as_deref().map(parse_active).transpose()?;
    if a.mask == MaskMode::RestrictActive && active.as_ref().map_or(true, |v| v.is_empty()) {
        return Err("--mask restrict requires a non-empty --active set".into());
    }
    let cfg = SolverConfig {
        epsilon: a.epsilon,
        recon: a.recon,
        mask: a.mask,
        e_tol: a.etol,
        max_iter: a.max_iter,
        refresh_d1: !a.frozen_d1,
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok((cfg, active))
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> std::result::Result<i32, Exit> {
    let (cfg, active) = run_manifest(a).map_err(usage)?;
    let (space, ints) = read_fcidump(&a.fcidump)?;
    let space = match active {
        Some(v) => space.with_active(v).map_err(|e| usage(e.to_string()))?,
        None => space,
    };
    let k = build_reduced_hamiltonian(&ints, &space)?;
    let (d1, d2) = load_reference(&a.reference, &space)?;
    let eps = cfg.epsilon;
    let prop = Propagator::new(&k, d1, d2, &space, cfg)?;
    let mut csv = TrajectoryWriter::create(&a.trajectory)?;
    let path = a.trajectory.clone();
    let result = prop.run(|rec| csv.write(rec).map_err(|source| Error::Io { path: path.clone(), source }));
    match result {
        Ok(r) => {
            summary(out, &r, eps, &space).map_err(io_err(Path::new("<stdout>")))?;
            Ok(match r.termination {
                Termination::EnergyConverged => EXIT_OK,
                Termination::EnergyIncreased | Termination::ResidualIncreased => EXIT_STOPPED,
                Termination::MaxIter => EXIT_MAX_ITER,
            })
        }
        Err(Error::NonFinite { iteration, last }) => {
            summary(out, &last, eps, &space).map_err(io_err(Path::new("<stdout>")))?;
            Err(Exit(EXIT_STOPPED, format!("non-finite energy or residual at iteration {iteration}")))
        }
        Err(e) => Err(e.into()),
    }
}

/// Spin-summed occupations of the highest occupied and lowest unoccupied
/// natural orbitals.
pub fn hono_luno(d1: &Rdm1, space: &OrbitalSpace) -> Result<(f64, Option<f64>)> {
    let occ = spin_summed_occupations(d1)?;
    let h = space.n_alpha().max(1) - 1;
    Ok((occ[h], occ.get(h + 1).copied()))
}

fn summary(out: &mut dyn Write, r: &AcseResult, eps: f64, space: &OrbitalSpace) -> std::io::Result<()> {
    writeln!(out, "energy       {:.12}", r.energy)?;
    writeln!(out, "termination  {}", r.termination)?;
    writeln!(out, "iterations   {}", r.iteration)?;
    writeln!(out, "lambda       {:.12}", r.lambda(eps))?;
    match hono_luno(&r.d1, space) {
        Ok((h, l)) => {
            writeln!(out, "HONO         {h:.12}")?;
            match l {
                Some(l) => writeln!(out, "LUNO         {l:.12}")?,
                None => writeln!(out, "LUNO         none")?,
            }
        }
        Err(e) => writeln!(out, "HONO/LUNO    unavailable ({e})")?,
    }
    Ok(())
}

fn cmd_fci(a: &FciArgs, out: &mut dyn Write) -> std::result::Result<i32, Exit> {
    if a.states == 0 {
        return Err(usage("--states must be at least 1"));
    }
    if a.rdm_out.is_some() && a.rdm_state >= a.states {
        return Err(usage(format!("--rdm-state {} needs --states > {}", a.rdm_state, a.rdm_state)));
    }
    let (space, ints) = read_fcidump(&a.fcidump)?;
    let states = fci_solve(&ints, &space, a.states)?;
    let stdout = Path::new("<stdout>");
    for s in &states {
        writeln!(out, "state {:<3} {:.12}", s.index, s.energy).map_err(io_err(stdout))?;
    }
    if let Some(path) = &a.rdm_out {
        let (d1, d2) = states[a.rdm_state].rdm12();
        let f = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(f);
        write_rdm(&mut w, space.n_alpha(), space.n_beta(), &d1, &d2)
            .and_then(|_| w.flush())
            .map_err(io_err(path))?;
    }
    Ok(EXIT_OK)
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> std::result::Result<i32, Exit> {
    let (space, ints) = read_fcidump(&a.fcidump)?;
    let stdout = Path::new("<stdout>");
    let file = match read_rdm(&a.rdm) {
        Ok(f) => f,
        Err(Error::Parse { line, msg }) if msg.contains("symmetry violation") => {
            writeln!(out, "{:<28} {:>12} {:>10}  FAIL  (line {line}: {msg})", "2D Hermitian", "-", "1e-8")
                .map_err(io_err(stdout))?;
            return Err(Exit(EXIT_CHECK_FAILED, "symmetry identity violated".into()));
        }
        Err(e) => return Err(e.into()),
    };
    if file.norb != space.norb() {
        return Err(Exit(EXIT_INPUT, format!("RDM file has {} orbitals, FCIDUMP has {}", file.norb, space.norb())));
    }
    if (file.n_alpha, file.n_beta) != (space.n_alpha(), space.n_beta()) {
        writeln!(
            out,
            "note: file declares nelec {} {}, FCIDUMP implies {} {}; traces are checked against the FCIDUMP",
            file.n_alpha,
            file.n_beta,
            space.n_alpha(),
            space.n_beta()
        )
        .map_err(io_err(stdout))?;
    }
    let checks = validate(&file.d1, &file.d2, &space, Tolerances::default())?;
    let mut failed = Vec::new();
    for c in &checks {
        let verdict = if c.passed() { "pass" } else { "FAIL" };
        writeln!(out, "{:<28} {:>12.3e} {:>10.0e}  {verdict}", c.name, c.deviation, c.tolerance).map_err(io_err(stdout))?;
        if !c.passed() {
            failed.push(format!("{} (deviation {:.3e})", c.name, c.deviation));
        }
    }
    let e = ints.energy(&file.d1, &file.d2)?;
    writeln!(out, "energy       {e:.12}").map_err(io_err(stdout))?;
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        Err(Exit(EXIT_CHECK_FAILED, format!("failed identities: {}", failed.join("; "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn active_lists() {
        assert_eq!(parse_active("4-7,9").unwrap(), vec![3, 4, 5, 6, 8]);
        assert_eq!(parse_active("2, 1").unwrap(), vec![0, 1]);
        for bad in ["", "0", "3-1", "a", "1,,2"] {
            assert!(parse_active(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn restrict_without_active_is_usage_error() {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let code = main_with(
            ["acse", "run", "--fcidump", "/nonexistent", "--recon", "ny", "--mask", "restrict"],
            &mut o,
            &mut e,
        );
        assert_eq!(code, EXIT_USAGE);
        assert!(String::from_utf8(e).unwrap().contains("--active"));
    }

    #[test]
    fn clap_errors_are_usage_errors() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with(["acse", "run"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(main_with(["acse", "run", "--fcidump", "x", "--recon", "q"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(main_with(["acse", "--help"], &mut o, &mut e), EXIT_OK);
    }
}
