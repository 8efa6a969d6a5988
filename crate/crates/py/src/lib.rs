//! Python module `acse`: FCIDUMP loading, reference RDMs, the ACSE solver and
//! the full-CI oracle.

use std::fs::File;
use std::io::BufWriter;

use acse_core::fci::{fci_solve, FciState};
use acse_core::hamio::{build_reduced_hamiltonian, energy_from_reduced_h, read_fcidump, IntegralSet, OrbitalSpace};
use acse_core::rdm::{hf_reference, natural_occupations, validate, write_rdm, Rdm1, Rdm2, Tolerances};
use acse_core::residual::{residual_norm, ContractionContext};
use acse_core::solver::{load_reference, Propagator, SolverConfig, TrajectoryRecord};
use acse_core::{Error, MaskMode, OccupationSignature, ReconstructionKind};
use ndarray::{Array2, Array4};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::NonFinite { .. } | Error::NoConvergence(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn mat(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn flat4(a: &Array4<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

/// Integrals and electron counts read from an FCIDUMP file.
#[pyclass(frozen, module = "acse")]
pub struct Hamiltonian {
    space: OrbitalSpace,
    ints: IntegralSet,
}

#[pymethods]
impl Hamiltonian {
    #[staticmethod]
    fn from_fcidump(path: &str) -> PyResult<Self> {
        let (space, ints) = read_fcidump(path).map_err(to_py)?;
        Ok(Self { space, ints })
    }

    #[getter]
    fn norb(&self) -> usize {
        self.space.norb()
    }

    #[getter]
    fn nelec(&self) -> (usize, usize) {
        (self.space.n_alpha(), self.space.n_beta())
    }

    #[getter]
    fn e_nuc(&self) -> f64 {
        self.ints.e_nuc
    }

    /// Energy of an RDM pair from the raw integrals.
    fn energy(&self, rdm: &Rdms) -> PyResult<f64> {
        self.ints.energy(&rdm.d1, &rdm.d2).map_err(to_py)
    }

    /// Lowest `n_states` full-CI eigenpairs as `(energy, Rdms)`.
    #[pyo3(signature = (n_states = 1))]
    fn fci(&self, py: Python<'_>, n_states: usize) -> PyResult<Vec<(f64, Rdms)>> {
        let states: Vec<FciState> = py.detach(|| fci_solve(&self.ints, &self.space, n_states)).map_err(to_py)?;
        Ok(states
            .iter()
            .map(|s| {
                let (d1, d2) = s.rdm12();
                (s.energy, Rdms { d1, d2, nelec: self.nelec() })
            })
            .collect())
    }

    fn hf(&self) -> PyResult<Rdms> {
        let (d1, d2) = hf_reference(&self.space).map_err(to_py)?;
        Ok(Rdms { d1, d2, nelec: self.nelec() })
    }

    /// `"hf"` or an ACSE-RDM v1 file, validated against this Hamiltonian.
    fn load_reference(&self, source: &str) -> PyResult<Rdms> {
        let (d1, d2) = load_reference(source, &self.space).map_err(to_py)?;
        Ok(Rdms { d1, d2, nelec: self.nelec() })
    }

    /// Pre-mask Frobenius norm of the contracted residual at `rdm`.
    #[pyo3(signature = (rdm, recon = "v"))]
    fn residual_norm(&self, rdm: &Rdms, recon: &str) -> PyResult<f64> {
        let kind: ReconstructionKind = recon.parse().map_err(to_py)?;
        let k = build_reduced_hamiltonian(&self.ints, &self.space).map_err(to_py)?;
        let sig = OccupationSignature::aufbau(&self.space);
        let ctx = ContractionContext::new(&rdm.d2, &rdm.d1, kind, Some(&sig)).map_err(to_py)?;
        Ok(residual_norm(&ctx.residual(&k).map_err(to_py)?))
    }

    /// Run the ACSE from `reference`. `active` is a 0-based orbital list.
    #[pyo3(signature = (reference, recon = "v", mask = "propagate", active = None, epsilon = 1e-3, e_tol = 1e-6, max_iter = 10000, refresh_d1 = true))]
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        py: Python<'_>,
        reference: &Rdms,
        recon: &str,
        mask: &str,
        active: Option<Vec<usize>>,
        epsilon: f64,
        e_tol: f64,
        max_iter: usize,
        refresh_d1: bool,
    ) -> PyResult<AcseRun> {
        let space = match active {
            Some(a) => self.space.clone().with_active(a).map_err(to_py)?,
            None => self.space.clone(),
        };
        let cfg = SolverConfig {
            epsilon,
            recon: recon.parse().map_err(to_py)?,
            mask: mask.parse::<MaskMode>().map_err(to_py)?,
            e_tol,
            max_iter,
            refresh_d1,
        };
        let (d1, d2) = (reference.d1.clone(), reference.d2.clone());
        let nelec = self.nelec();
        py.detach(|| {
            let k = build_reduced_hamiltonian(&self.ints, &space)?;
            Propagator::new(&k, d1, d2, &space, cfg)?.run(|_| Ok(()))
        })
        .map(|r| AcseRun {
            energy: r.energy,
            termination: r.termination.to_string(),
            iteration: r.iteration,
            trajectory: r.trajectory,
            rdms: Rdms { d1: r.d1, d2: r.d2, nelec },
        })
        .map_err(to_py)
    }

    /// Energy from the reduced two-body Hamiltonian; equals `energy` for valid RDMs.
    fn reduced_energy(&self, rdm: &Rdms) -> PyResult<f64> {
        let k = build_reduced_hamiltonian(&self.ints, &self.space).map_err(to_py)?;
        energy_from_reduced_h(&k, &rdm.d2).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Hamiltonian(norb={}, nelec={:?})", self.norb(), self.nelec())
    }
}

/// Spin-blocked 1- and 2-RDMs.
#[pyclass(frozen, skip_from_py_object, module = "acse")]
#[derive(Clone)]
pub struct Rdms {
    d1: Rdm1,
    d2: Rdm2,
    nelec: (usize, usize),
}

#[pymethods]
impl Rdms {
    #[getter]
    fn d1a(&self) -> Vec<Vec<f64>> {
        mat(&self.d1.a)
    }

    #[getter]
    fn d1b(&self) -> Vec<Vec<f64>> {
        mat(&self.d1.b)
    }

    /// `(aa, ab, bb)` blocks, each flattened in row-major `[i, j, k, l]` order.
    fn d2_blocks(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (flat4(&self.d2.aa), flat4(&self.d2.ab), flat4(&self.d2.bb))
    }

    /// `[Tr 2D_aa, Tr 2D_ab, Tr 2D_bb]`.
    fn traces(&self) -> [f64; 3] {
        self.d2.traces()
    }

    /// Natural occupations `(alpha, beta)`, descending.
    fn natural_occupations(&self) -> PyResult<(Vec<f64>, Vec<f64>)> {
        natural_occupations(&self.d1).map_err(to_py)
    }

    /// `(name, deviation, tolerance, passed)` for every trace and symmetry identity.
    fn validate(&self, ham: &Hamiltonian) -> PyResult<Vec<(String, f64, f64, bool)>> {
        let checks = validate(&self.d1, &self.d2, &ham.space, Tolerances::default()).map_err(to_py)?;
        Ok(checks.into_iter().map(|c| (c.name.to_string(), c.deviation, c.tolerance, c.passed())).collect())
    }

    /// Write in ACSE-RDM v1 format.
    fn write(&self, path: &str) -> PyResult<()> {
        let f = File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        write_rdm(BufWriter::new(f), self.nelec.0, self.nelec.1, &self.d1, &self.d2)
            .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
    }
}

/// Outcome of [`Hamiltonian::solve`].
#[pyclass(frozen, module = "acse")]
pub struct AcseRun {
    #[pyo3(get)]
    energy: f64,
    #[pyo3(get)]
    termination: String,
    #[pyo3(get)]
    iteration: usize,
    trajectory: Vec<TrajectoryRecord>,
    rdms: Rdms,
}

#[pymethods]
impl AcseRun {
    /// Rows `(n, lambda, energy, residual_norm)`.
    #[getter]
    fn trajectory(&self) -> Vec<(usize, f64, f64, f64)> {
        self.trajectory.iter().map(|r| (r.n, r.lambda, r.energy, r.residual_norm)).collect()
    }

    #[getter]
    fn rdms(&self) -> Rdms {
        self.rdms.clone()
    }

    fn __repr__(&self) -> String {
        format!("AcseRun(energy={:.12}, termination={}, iteration={})", self.energy, self.termination, self.iteration)
    }
}

#[pymodule]
fn acse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Hamiltonian>()?;
    m.add_class::<Rdms>()?;
    m.add_class::<AcseRun>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
