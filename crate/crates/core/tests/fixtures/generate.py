"""Regenerate the committed integral and reference-RDM fixtures.

Requires PySCF. Run from this directory:

    python3 generate.py

Writes FCIDUMP files (MO basis, chemist-notation integrals) and, for the
CASSCF references, spin-blocked 1-/2-RDMs in the ACSE-RDM v1 text format.
A summary of reference energies is printed and written to energies.txt.
"""
import hashlib
import numpy as np
import pyscf
from pyscf import gto, scf, mcscf, fci
from pyscf.tools import fcidump


def chain(n, d, basis, spin=0):
    atoms = [("H", (0.0, 0.0, i * d)) for i in range(n)]
    return gto.M(atom=atoms, basis=basis, unit="Angstrom", spin=spin,
                 symmetry=False, verbose=0)


def write_rdm(path, norb, nelec, dm1s, dm2s, note):
    """dm2s follow the PySCF layout dm2[p,q,r,s] = <p+ r+ s q>."""
    na, nb = nelec
    with open(path, "w") as f:
        f.write("# ACSE-RDM v1\n")
        f.write(f"# {note}\n")
        f.write(f"norb {norb}\n")
        f.write(f"nelec {na} {nb}\n")
        for tag, dm in zip(("a", "b"), dm1s):
            f.write(f"block 1RDM {tag}\n")
            for i in range(norb):
                for j in range(norb):
                    v = dm[i, j]
                    if abs(v) > 1e-14:
                        f.write(f"{i+1} {j+1} {v:.17e}\n")
        for tag, dm in zip(("aa", "ab", "bb"), dm2s):
            # D^{ij}_{kl} = 1/2 <i+ j+ l k> = 1/2 dm2[i,k,j,l]
            d = 0.5 * dm.transpose(0, 2, 1, 3)
            f.write(f"block 2RDM {tag}\n")
            for i, j, k, l in zip(*np.nonzero(np.abs(d) > 1e-14)):
                f.write(f"{i+1} {j+1} {k+1} {l+1} {d[i,j,k,l]:.17e}\n")


def embed(norb, ncore, ncas, casdm1s, casdm2s):
    """Embed active-space RDMs into the full MO space (doubly occupied core)."""
    assert ncore == 0, "fixtures use an all-electron active space"
    dm1s = []
    for d in casdm1s:
        full = np.zeros((norb, norb))
        full[:ncas, :ncas] = d
        dm1s.append(full)
    dm2s = []
    for d in casdm2s:
        full = np.zeros((norb,) * 4)
        full[:ncas, :ncas, :ncas, :ncas] = d
        dm2s.append(full)
    return dm1s, dm2s


log = []


def record(line):
    print(line)
    log.append(line)


def minimal(name, mol, rohf=False):
    mf = (scf.ROHF(mol) if rohf else scf.RHF(mol)).run(conv_tol=1e-12)
    fcidump.from_mo(mol, f"{name}.fcidump", mf.mo_coeff, tol=1e-15)
    h1 = mf.mo_coeff.T @ mf.get_hcore() @ mf.mo_coeff
    eri = pyscf.ao2mo.full(mol, mf.mo_coeff)
    norb = h1.shape[0]
    cis = fci.direct_spin1.FCI()
    cis.conv_tol = 1e-13
    # extra roots: with nroots=4 the Davidson guess skips a state of N2
    e, _ = cis.kernel(h1, eri, norb, mol.nelec, ecore=mol.energy_nuc(), nroots=8)
    e = np.atleast_1d(e)[:4]
    record(f"{name}: norb={norb} nelec={mol.nelec} E_HF={mf.e_tot:.12f} "
           f"E_FCI[0..{len(e)}]=" + ",".join(f"{x:.12f}" for x in e))


def h6_casscf(d):
    mol = chain(6, d, "6-31g")
    mf = scf.RHF(mol).run(conv_tol=1e-12)
    mc = mcscf.CASSCF(mf, 6, 6)
    mc.conv_tol = 1e-11
    mc.natorb = True
    mc.kernel()
    # Re-solve the CAS problem in the final orbital basis so RDMs and
    # FCIDUMP share the exact same MOs.
    ci = mcscf.CASCI(mf, 6, 6)
    ci.fcisolver.conv_tol = 1e-13
    ci.kernel(mc.mo_coeff)
    casdm1s, casdm2s = ci.fcisolver.make_rdm12s(ci.ci, 6, (3, 3))
    norb = mc.mo_coeff.shape[1]
    dm1s, dm2s = embed(norb, ci.ncore, 6, casdm1s, casdm2s)
    tag = f"h6_631g_{d:.1f}".replace(".", "p")
    fcidump.from_mo(mol, f"{tag}.fcidump", mc.mo_coeff, tol=1e-15)
    write_rdm(f"{tag}_cas66.rdm", norb, (3, 3), dm1s, dm2s,
              f"linear H6 6-31G R={d} A CASSCF[6,6] natural orbitals, "
              f"E_CASSCF={ci.e_tot:.12f}")
    occ = np.sort(np.linalg.eigvalsh(casdm1s[0] + casdm1s[1]))[::-1]
    h1 = mc.mo_coeff.T @ mf.get_hcore() @ mc.mo_coeff
    eri = pyscf.ao2mo.full(mol, mc.mo_coeff)
    cis = fci.direct_spin1.FCI()
    cis.conv_tol = 1e-12
    efci, _ = cis.kernel(h1, eri, norb, (3, 3), ecore=mol.energy_nuc())
    record(f"{tag}: norb={norb} E_HF={mf.e_tot:.12f} E_CASSCF={ci.e_tot:.12f} "
           f"E_FCI={efci:.12f} occ={','.join(f'{x:.6f}' for x in occ)}")


if __name__ == "__main__":
    record(f"pyscf {pyscf.__version__}")
    minimal("h2_sto3g", chain(2, 0.74, "sto-3g"))
    minimal("h2_sto3g_stretched", chain(2, 2.0, "sto-3g"))
    minimal("h3_sto3g", chain(3, 0.9, "sto-3g", spin=1), rohf=True)
    minimal("h4_sto3g", chain(4, 0.8, "sto-3g"))
    n2 = gto.M(atom="N 0 0 0; N 0 0 1.1", basis="sto-3g", unit="Angstrom",
               symmetry=False, verbose=0)
    minimal("n2_sto3g", n2)
    for d in (0.9, 1.4, 5.0):
        h6_casscf(d)
    import glob
    for p in sorted(glob.glob("*.fcidump") + glob.glob("*.rdm")):
        with open(p, "rb") as f:
            record(f"sha256 {hashlib.sha256(f.read()).hexdigest()}  {p}")
    with open("energies.txt", "w") as f:
        f.write("\n".join(log) + "\n")
