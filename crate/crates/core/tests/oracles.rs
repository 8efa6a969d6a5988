mod common;

use acse_core::fci::{fci_solve, CommutatorOracle};
use acse_core::hamio::build_reduced_hamiltonian;
use acse_core::recon::{reconstruct_3rdm, OccupationSignature, ReconstructionKind};
use acse_core::residual::{commutator_exact, residual_exact, update_exact, ContractionContext, Layout};
use acse_core::rdm::cumulant2;
use common::*;

#[test]
fn six_term_commutator_matches_fock_space() {
    let mut g = rng(11);
    for name in ["h2_sto3g.fcidump", "h3_sto3g.fcidump", "h4_sto3g.fcidump"] {
        let (space, _) = load(name);
        let psi = random_state(&space, &mut g);
        let (_, d2) = psi.rdm12();
        let d3 = psi.rdm3().unwrap();
        for s in [1.0, -1.0] {
            let t = random_operator(space.norb(), s, &mut g);
            let oracle = CommutatorOracle::new(&psi, &t).unwrap().tensor();
            let ours = commutator_exact(&t, &d2, &d3).unwrap();
            let d = max_diff(&oracle, &ours);
            assert!(d < 1e-10, "{name} s={s}: {d:e}");
        }
    }
}

#[test]
fn residual_vanishes_on_fci_ground_state() {
    for name in ["h2_sto3g.fcidump", "h4_sto3g.fcidump"] {
        let (space, ints) = load(name);
        let k = build_reduced_hamiltonian(&ints, &space).unwrap();
        let psi = &fci_solve(&ints, &space, 1).unwrap()[0];
        let (_, d2) = psi.rdm12();
        let r = residual_exact(&k, &d2, &psi.rdm3().unwrap()).unwrap();
        assert!(r.frobenius() < 1e-8, "{name}: {:e}", r.frobenius());
    }
}

#[test]
fn contracted_matches_explicit_reconstruction() {
    let mut g = rng(5);
    for name in ["h2_sto3g.fcidump", "h3_sto3g.fcidump", "h4_sto3g.fcidump"] {
        let (space, ints) = load(name);
        let k = build_reduced_hamiltonian(&ints, &space).unwrap();
        let psi = random_state(&space, &mut g);
        let (d1, d2) = psi.rdm12();
        let sig = OccupationSignature::aufbau(&space);
        for kind in [ReconstructionKind::Valdemoro, ReconstructionKind::NakatsujiYasuda] {
            let dl = cumulant2(&d2, &d1).unwrap();
            let d3 = reconstruct_3rdm(kind, &dl, &d1, Some(&sig)).unwrap();
            let r_ex = residual_exact(&k, &d2, &d3).unwrap();
            for layout in [Layout::SpinBlocked, Layout::SpinOrbital] {
                let ctx = ContractionContext::with_layout(layout, &d2, &d1, kind, Some(&sig)).unwrap();
                let r = ctx.residual(&k).unwrap();
                let dr = max_diff(&r, &r_ex);
                assert!(dr < 1e-10, "{name} {kind} {layout:?} residual: {dr:e}");
                let u = ctx.update(&r).unwrap();
                let u_ex = update_exact(&r, &d2, &d3).unwrap();
                let du = max_diff(&u, &u_ex);
                assert!(du < 1e-10, "{name} {kind} {layout:?} update: {du:e}");
            }
        }
    }
}
