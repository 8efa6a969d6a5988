//! Block Davidson with a diagonal preconditioner.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};

use crate::error::{Error, Result};

pub(crate) struct Options {
    pub n_roots: usize,
    /// Extra vectors carried in the block to separate near-degenerate roots.
    pub guard: usize,
    pub tol: f64,
    pub max_subspace: usize,
    pub max_iter: usize,
}

pub(crate) struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Array1<f64>>,
    pub residuals: Vec<f64>,
}

fn orthonormalize_against(v: &mut Array1<f64>, basis: &[Array1<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.scaled_add(-c, b);
        }
    }
    let n = v.dot(v).sqrt();
    if n > 0.0 {
        *v /= n;
    }
    n
}

pub(crate) fn davidson(
    diag: &Array1<f64>,
    apply: impl Fn(ArrayView1<f64>, ArrayViewMut1<f64>),
    opts: &Options,
) -> Result<Eigenpairs> {
    let n = diag.len();
    let block = (opts.n_roots + opts.guard).min(n);
    let max_sub = opts.max_subspace.max(3 * block).min(n);

    // Unit vectors on the lowest diagonal entries; ties broken by index.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    let mut v: Vec<Array1<f64>> = Vec::new();
    let mut av: Vec<Array1<f64>> = Vec::new();
    let mut pending: Vec<Array1<f64>> = order[..block]
        .iter()
        .map(|&i| {
            let mut e = Array1::zeros(n);
            e[i] = 1.0;
            e
        })
        .collect();

    for _iter in 0..opts.max_iter {
        for mut x in pending.drain(..) {
            if orthonormalize_against(&mut x, &v) > 1e-10 {
                let mut y = Array1::zeros(n);
                apply(x.view(), y.view_mut());
                v.push(x);
                av.push(y);
            }
        }
        if v.is_empty() {
            return Err(Error::NoConvergence("Davidson subspace collapsed".into()));
        }
        let m = v.len();
        let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (v[i].dot(&av[j]) + v[j].dot(&av[i])));
        let eig = SymmetricEigen::new(h);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let nkeep = block.min(m);
        let mut ritz = Vec::with_capacity(nkeep);
        let mut aritz = Vec::with_capacity(nkeep);
        let mut theta = Vec::with_capacity(nkeep);
        for &k in &idx[..nkeep] {
            let mut x = Array1::zeros(n);
            let mut y = Array1::zeros(n);
            for j in 0..m {
                let c = eig.eigenvectors[(j, k)];
                x.scaled_add(c, &v[j]);
                y.scaled_add(c, &av[j]);
            }
            ritz.push(x);
            aritz.push(y);
            theta.push(eig.eigenvalues[k]);
        }
        let mut res_norms = Vec::with_capacity(nkeep);
        let mut corrections = Vec::new();
        for k in 0..nkeep {
            let mut rvec = &aritz[k] - &(theta[k] * &ritz[k]);
            let rn = rvec.dot(&rvec).sqrt();
            res_norms.push(rn);
            if rn > opts.tol {
                rvec.zip_mut_with(diag, |x, &d| {
                    let den = d - theta[k];
                    *x /= if den.abs() < 1e-8 { 1e-8f64.copysign(den) } else { den };
                });
                corrections.push(rvec);
            }
        }
        let wanted = opts.n_roots.min(nkeep);
        if res_norms[..wanted].iter().all(|&r| r <= opts.tol) {
            return Ok(Eigenpairs {
                values: theta[..wanted].to_vec(),
                vectors: ritz[..wanted].to_vec(),
                residuals: res_norms[..wanted].to_vec(),
            });
        }
        if m + corrections.len() > max_sub {
            // Thick restart on the current Ritz vectors.
            v = ritz;
            av = aritz;
        }
        if corrections.is_empty() {
            return Err(Error::NoConvergence("Davidson produced no new directions".into()));
        }
        pending = corrections;
    }
    Err(Error::NoConvergence(format!("Davidson did not reach residual {:e} in {} iterations", opts.tol, opts.max_iter)))
}

/// Dense symmetric eigendecomposition, ascending.
pub(crate) fn dense_lowest(h: &Array2<f64>, n_roots: usize) -> Eigenpairs {
    let n = h.nrows();
    let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| h[[i, j]]));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    let mut residuals = Vec::new();
    for &k in idx.iter().take(n_roots) {
        let mut x = Array1::from_iter(eig.eigenvectors.column(k).iter().copied());
        // Fix the sign so the largest-magnitude coefficient is positive.
        let big = x.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
        if big < 0.0 {
            x.mapv_inplace(|c| -c);
        }
        let r = h.dot(&x) - eig.eigenvalues[k] * &x;
        residuals.push(r.dot(&r).sqrt());
        values.push(eig.eigenvalues[k]);
        vectors.push(x);
    }
    Eigenpairs { values, vectors, residuals }
}
