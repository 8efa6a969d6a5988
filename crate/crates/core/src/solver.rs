//! Euler propagation of the 2-RDM along the ACSE update direction.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hamio::{energy_from_reduced_h, OrbitalSpace, ReducedH};
use crate::rdm::{cumulant2, ensure_valid, hf_reference, partial_trace_2to1, read_rdm, Rdm1, Rdm2, Tolerances};
use crate::recon::{OccupationSignature, ReconstructionKind};
use crate::residual::{apply_mask, residual_norm, ContractionContext, MaskMode, ResidualTensor};

/// Cumulant norm over the active space above which NY is flagged.
const NY_WARN_CUMULANT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub recon: ReconstructionKind,
    pub mask: MaskMode,
    pub e_tol: f64,
    pub max_iter: usize,
    pub refresh_d1: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            recon: ReconstructionKind::Valdemoro,
            mask: MaskMode::PropagateActive,
            e_tol: 1e-6,
            max_iter: 10_000,
            refresh_d1: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.e_tol > 0.0) {
            return Err(Error::Config(format!("energy tolerance must be positive, got {}", self.e_tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    EnergyConverged,
    EnergyIncreased,
    ResidualIncreased,
    MaxIter,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::EnergyConverged => "EnergyConverged",
            Self::EnergyIncreased => "EnergyIncreased",
            Self::ResidualIncreased => "ResidualIncreased",
            Self::MaxIter => "MaxIter",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub lambda: f64,
    pub energy: f64,
    /// Frobenius norm of the residual before masking.
    pub residual_norm: f64,
}

#[derive(Clone, Debug)]
pub struct AcseResult {
    pub d1: Rdm1,
    pub d2: Rdm2,
    pub energy: f64,
    pub termination: Termination,
    /// Iteration index of the returned RDMs.
    pub iteration: usize,
    /// Every evaluated iterate, including a rejected final one.
    pub trajectory: Vec<TrajectoryRecord>,
}

impl AcseResult {
    pub fn lambda(&self, epsilon: f64) -> f64 {
        epsilon * self.iteration as f64
    }
}

/// Current point of the propagation.
struct Iterate {
    n: usize,
    d1: Rdm1,
    d2: Rdm2,
    energy: f64,
    residual: ResidualTensor,
    residual_norm: f64,
    ctx: ContractionContext,
}

/// Stepwise driver. [`solve`] wraps it with the stopping rules.
pub struct Propagator<'a> {
    k: &'a ReducedH,
    space: &'a OrbitalSpace,
    cfg: SolverConfig,
    sig: Option<OccupationSignature>,
    current: Iterate,
    trajectory: Vec<TrajectoryRecord>,
}

impl<'a> Propagator<'a> {
    pub fn new(k: &'a ReducedH, d1: Rdm1, d2: Rdm2, space: &'a OrbitalSpace, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        space.require_pairs()?;
        if k.n_electrons != space.n_electrons() {
            return Err(Error::Config(format!(
                "reduced Hamiltonian built for N={}, space has N={}",
                k.n_electrons,
                space.n_electrons()
            )));
        }
        ensure_valid(&d1, &d2, space, Tolerances::default())?;
        let sig = match cfg.recon {
            ReconstructionKind::Valdemoro => None,
            ReconstructionKind::NakatsujiYasuda => {
                warn_if_correlated(&d1, &d2, space)?;
                Some(OccupationSignature::aufbau(space))
            }
        };
        let current = evaluate(k, 0, d1, d2, cfg.recon, sig.as_ref())?;
        let mut p = Self { k, space, cfg, sig, current, trajectory: Vec::new() };
        p.record();
        Ok(p)
    }

    fn record(&mut self) {
        let c = &self.current;
        self.trajectory.push(TrajectoryRecord {
            n: c.n,
            lambda: self.cfg.epsilon * c.n as f64,
            energy: c.energy,
            residual_norm: c.residual_norm,
        });
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn trajectory(&self) -> &[TrajectoryRecord] {
        &self.trajectory
    }

    pub fn last_record(&self) -> TrajectoryRecord {
        *self.trajectory.last().unwrap()
    }

    pub fn d1(&self) -> &Rdm1 {
        &self.current.d1
    }

    pub fn d2(&self) -> &Rdm2 {
        &self.current.d2
    }

    pub fn energy(&self) -> f64 {
        self.current.energy
    }

    pub fn iteration(&self) -> usize {
        self.current.n
    }

    /// One Euler step from the current iterate, which it replaces; the
    /// previous one is returned.
    fn advance(&mut self) -> Result<Iterate> {
        let c = &self.current;
        let masked = apply_mask(&c.residual, self.space, self.cfg.mask)?;
        let u = c.ctx.update(&masked)?;
        let mut d2 = c.d2.clone();
        d2.add_scaled(self.cfg.epsilon, &u);
        d2.symmetrize(1.0);
        let d1 = if self.cfg.refresh_d1 { partial_trace_2to1(&d2, self.space)? } else { c.d1.clone() };
        let next = evaluate(self.k, c.n + 1, d1, d2, self.cfg.recon, self.sig.as_ref())?;
        let prev = std::mem::replace(&mut self.current, next);
        self.record();
        Ok(prev)
    }

    /// Take one step unconditionally and return its trajectory record.
    pub fn step(&mut self) -> Result<TrajectoryRecord> {
        self.advance()?;
        Ok(self.last_record())
    }

    fn finish(&self, it: &Iterate, termination: Termination) -> AcseResult {
        AcseResult {
            d1: it.d1.clone(),
            d2: it.d2.clone(),
            energy: it.energy,
            termination,
            iteration: it.n,
            trajectory: self.trajectory.clone(),
        }
    }

    /// Iterate until a stopping rule fires. `on_record` sees every record as
    /// it is produced, starting with the reference point.
    pub fn run(mut self, mut on_record: impl FnMut(&TrajectoryRecord) -> Result<()>) -> Result<AcseResult> {
        on_record(&self.last_record())?;
        if !self.current.energy.is_finite() {
            return Err(Error::Config(format!("reference energy is not finite ({})", self.current.energy)));
        }
        loop {
            let prev = self.advance()?;
            let rec = self.last_record();
            on_record(&rec)?;
            let cur = &self.current;
            if !cur.energy.is_finite() || !cur.residual_norm.is_finite() {
                let last = self.finish(&prev, Termination::EnergyIncreased);
                return Err(Error::NonFinite { iteration: cur.n, last: Box::new(last) });
            }
            let outcome = if cur.energy > prev.energy {
                Some((Termination::EnergyIncreased, &prev))
            } else if cur.residual_norm > prev.residual_norm {
                Some((Termination::ResidualIncreased, &prev))
            } else if (cur.energy - prev.energy).abs() < self.cfg.e_tol {
                Some((Termination::EnergyConverged, cur))
            } else if cur.n >= self.cfg.max_iter {
                Some((Termination::MaxIter, cur))
            } else {
                None
            };
            if let Some((t, it)) = outcome {
                log::info!("ACSE stopped at n={} ({t}), E={:.12}", rec.n, it.energy);
                return Ok(self.finish(it, t));
            }
            log::debug!("n={} E={:.12} |R|={:.3e}", rec.n, rec.energy, rec.residual_norm);
        }
    }
}

fn evaluate(
    k: &ReducedH,
    n: usize,
    d1: Rdm1,
    d2: Rdm2,
    kind: ReconstructionKind,
    sig: Option<&OccupationSignature>,
) -> Result<Iterate> {
    let energy = energy_from_reduced_h(k, &d2)?;
    let ctx = ContractionContext::new(&d2, &d1, kind, sig)?;
    let residual = ctx.residual(k)?;
    let residual_norm = residual_norm(&residual);
    Ok(Iterate { n, d1, d2, energy, residual, residual_norm, ctx })
}

fn warn_if_correlated(d1: &Rdm1, d2: &Rdm2, space: &OrbitalSpace) -> Result<()> {
    let dl = cumulant2(d2, d1)?;
    let mask = if space.active().is_empty() { vec![true; space.norb()] } else { space.active_mask() };
    let mut sq = 0.0;
    for b in dl.blocks() {
        for ((i, j, k, l), v) in b.indexed_iter() {
            if mask[i] && mask[j] && mask[k] && mask[l] {
                sq += v * v;
            }
        }
    }
    let norm = sq.sqrt();
    if norm > NY_WARN_CUMULANT {
        log::warn!(
            "reference cumulant norm {norm:.3} over the active space exceeds {NY_WARN_CUMULANT}; \
             the NY signature assumes a single-determinant reference"
        );
    }
    Ok(())
}

/// Run the ACSE from a validated reference pair.
pub fn solve(k: &ReducedH, d1: Rdm1, d2: Rdm2, space: &OrbitalSpace, cfg: SolverConfig) -> Result<AcseResult> {
    Propagator::new(k, d1, d2, space, cfg)?.run(|_| Ok(()))
}

/// `"hf"` for the aufbau determinant, otherwise an ACSE-RDM v1 file path.
pub fn load_reference(source: &str, space: &OrbitalSpace) -> Result<(Rdm1, Rdm2)> {
    if source.eq_ignore_ascii_case("hf") {
        return hf_reference(space);
    }
    let f = read_rdm(source)?;
    if (f.norb, f.n_alpha, f.n_beta) != (space.norb(), space.n_alpha(), space.n_beta()) {
        return Err(Error::Validation(format!(
            "{source}: file describes norb={} nelec=({}, {}), integrals have norb={} nelec=({}, {})",
            f.norb,
            f.n_alpha,
            f.n_beta,
            space.norb(),
            space.n_alpha(),
            space.n_beta()
        )));
    }
    ensure_valid(&f.d1, &f.d2, space, Tolerances::default())
        .map_err(|e| Error::Validation(format!("{source}: {e}")))?;
    Ok((f.d1, f.d2))
}

pub const TRAJECTORY_HEADER: &str = "n,lambda,energy,residual_norm";

/// CSV trajectory sink, flushed after every row.
pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl TrajectoryWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::new(BufWriter::new(f)).map_err(|source| Error::Io { path: path.into(), source })
    }
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &TrajectoryRecord) -> std::io::Result<()> {
        writeln!(self.out, "{},{:.16e},{:.16e},{:.16e}", r.n, r.lambda, r.energy, r.residual_norm)?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { e_tol: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { max_iter: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn csv_format() {
        let mut w = TrajectoryWriter::new(Vec::new()).unwrap();
        w.write(&TrajectoryRecord { n: 2, lambda: 2e-3, energy: -1.5, residual_norm: 0.25 }).unwrap();
        let s = String::from_utf8(w.into_inner()).unwrap();
        assert_eq!(s, "n,lambda,energy,residual_norm\n2,2.0000000000000000e-3,-1.5000000000000000e0,2.5000000000000000e-1\n");
    }
}
