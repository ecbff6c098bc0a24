//! Constrained symmetric generalized eigensolvers and spectrum
//! classification.
//!
//! A [`crate::forms::FormAssembly`] is reduced onto its admissible subspace
//! (`B = C^T A C`, `Mr = C^T M C`) and the lowest eigenvalues of the pencil
//! `B v = lambda Mr v` are computed: densely below [`DENSE_LIMIT`] degrees of
//! freedom, otherwise by shift-invert Lanczos with full reorthogonalization
//! in the mass inner product.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::FormAssembly;

/// Reduced dimension above which the solver switches to Lanczos.
pub const DENSE_LIMIT: usize = 2000;

/// Maximum eigenpair residual accepted by the solvers.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("requested {k} eigenpairs but the reduced dimension is {dim}")]
    Dimension { k: usize, dim: usize },
    #[error("eigensolver failed to converge (worst residual {0:.3e})")]
    Convergence(f64),
    #[error("mass matrix is not positive definite")]
    MassNotPd,
    #[error("could not find a positive definite shift for the pencil")]
    Shift,
    #[error("form error: {0}")]
    Form(#[from] crate::forms::FormsError),
}

/// Sorted lowest eigenvalues of a reduced pencil.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Ritz vectors in constraint-reduced coordinates, one column each.
    eigenvectors: DMatrix<f64>,
    tol_zero: f64,
    mesh_scale: f64,
    reduced_dim: usize,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors in constraint-reduced coordinates (columns).
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn tol_zero(&self) -> f64 {
        self.tol_zero
    }

    pub fn mesh_scale(&self) -> f64 {
        self.mesh_scale
    }

    /// Dimension of the admissible subspace the pencil was reduced to.
    pub fn reduced_dim(&self) -> usize {
        self.reduced_dim
    }
}

/// Index/nullity classification of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub index: usize,
    pub nullity: usize,
    /// Smallest |lambda| among eigenvalues classified nonzero.
    pub gap_nonzero: f64,
    /// Largest |lambda| among eigenvalues classified zero (0 if none).
    pub gap_zero: f64,
    /// True when an eigenvalue sits within 10% of the zero threshold, making
    /// the classification unstable under refinement.
    pub ambiguous: bool,
}

/// Computes the k lowest eigenpairs of the assembled form on its admissible
/// subspace. `tol_zero` defaults to `1e-3 |lambda_min|` (floored at 1e-9)
/// when not given.
pub fn solve_spectrum(
    form: &FormAssembly,
    k: usize,
    tol_zero: Option<f64>,
) -> Result<Spectrum, SpectralError> {
    let c = form.constraint_basis();
    let ct = c.transpose();
    let b = &ct * &(form.stiffness() * c);
    let mr = &ct * &(form.mass() * c);
    let dim = b.nrows();
    if k > dim {
        return Err(SpectralError::Dimension { k, dim });
    }
    // Extra pairs guard against eigenvalue clusters straddling the cutoff,
    // which would spoil the subspace refinement of the last returned pair.
    let k_int = (k + 8).min(dim);
    let (mut eigenvalues, mut eigenvectors) = if dim <= DENSE_LIMIT {
        // Shift-inverted subspace-iteration sweeps tighten the dense
        // eigenpairs to residuals below the acceptance threshold.
        let (mut vals, mut vecs) = solve_dense(&b, &mr, k_int)?;
        for _ in 0..3 {
            if max_residual(&b, &mr, &vals, &vecs) <= RESIDUAL_TOL {
                break;
            }
            match subspace_refine(&b, &mr, &vecs) {
                Ok((v2, w2)) => {
                    vals = v2;
                    vecs = w2;
                }
                Err(_) => break,
            }
        }
        (vals, vecs)
    } else {
        solve_lanczos(&b, &mr, k_int)?
    };
    eigenvalues.truncate(k);
    eigenvectors = eigenvectors.columns(0, k).into_owned();
    check_residuals(&b, &mr, &eigenvalues, &eigenvectors)?;
    let lambda_min = eigenvalues.first().copied().unwrap_or(0.0);
    let tol_zero = tol_zero.unwrap_or_else(|| (1e-3 * lambda_min.abs()).max(1e-9));
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        tol_zero,
        mesh_scale: form.mesh_scale(),
        reduced_dim: dim,
    })
}

fn max_residual(
    b: &CscMatrix<f64>,
    mr: &CscMatrix<f64>,
    eigenvalues: &[f64],
    eigenvectors: &DMatrix<f64>,
) -> f64 {
    let mut worst = 0.0_f64;
    for (i, &lam) in eigenvalues.iter().enumerate() {
        let v = eigenvectors.column(i).into_owned();
        let mv = mr * &v;
        let r = (b * &v - &mv * lam).norm() / mv.norm();
        worst = worst.max(r);
    }
    worst
}

fn check_residuals(
    b: &CscMatrix<f64>,
    mr: &CscMatrix<f64>,
    eigenvalues: &[f64],
    eigenvectors: &DMatrix<f64>,
) -> Result<(), SpectralError> {
    let worst = max_residual(b, mr, eigenvalues, eigenvectors);
    if worst <= RESIDUAL_TOL {
        Ok(())
    } else {
        Err(SpectralError::Convergence(worst))
    }
}

/// Dense path: Cholesky of the mass matrix and a symmetric eigendecomposition
/// of the congruence-transformed stiffness.
fn solve_dense(
    b: &CscMatrix<f64>,
    mr: &CscMatrix<f64>,
    k: usize,
) -> Result<(Vec<f64>, DMatrix<f64>), SpectralError> {
    let bd = DMatrix::from(b);
    let md = DMatrix::from(mr);
    let chol = md.clone().cholesky().ok_or(SpectralError::MassNotPd)?;
    let l = chol.l();
    // W = L^{-1} B L^{-T}, symmetric.
    let mut w = l.solve_lower_triangular(&bd).unwrap();
    w.transpose_mut();
    let mut w = l.solve_lower_triangular(&w).unwrap();
    w = (&w + w.transpose()) * 0.5;
    let eig = w.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut values = Vec::with_capacity(k);
    let mut vectors = DMatrix::zeros(bd.nrows(), k);
    for (out, &idx) in order.iter().take(k).enumerate() {
        values.push(eig.eigenvalues[idx]);
        let y = eig.eigenvectors.column(idx).into_owned();
        let z = l.transpose().solve_upper_triangular(&y).unwrap();
        vectors.set_column(out, &z);
    }
    Ok((values, vectors))
}

/// One step of shift-inverted subspace iteration followed by Rayleigh-Ritz
/// extraction on the refined block.
fn subspace_refine(
    b: &CscMatrix<f64>,
    mr: &CscMatrix<f64>,
    vectors: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>), SpectralError> {
    let (_, factor) = find_shift_factorization(b, mr)?;
    let k = vectors.ncols();
    let dim = vectors.nrows();
    let mut z = DMatrix::zeros(dim, k);
    for j in 0..k {
        let col = vectors.column(j).into_owned();
        let rhs = DMatrix::from_column_slice(dim, 1, (mr * &col).as_slice());
        z.set_column(j, &factor.solve(&rhs).column(0).into_owned());
    }
    // Mass-orthonormalize the block (modified Gram-Schmidt).
    for j in 0..k {
        for i in 0..j {
            let qi = z.column(i).into_owned();
            let c = z.column(j).dot(&(mr * &qi));
            let update = z.column(j) - &qi * c;
            z.set_column(j, &update);
        }
        let qj = z.column(j).into_owned();
        let n = qj.dot(&(mr * &qj)).sqrt();
        if n < 1e-13 {
            return Err(SpectralError::Convergence(f64::INFINITY));
        }
        z.set_column(j, &(qj / n));
    }
    // Rayleigh-Ritz on the refined block.
    let mut bz = DMatrix::zeros(dim, k);
    let mut mz = DMatrix::zeros(dim, k);
    for j in 0..k {
        let col = z.column(j).into_owned();
        bz.set_column(j, &(b * &col));
        mz.set_column(j, &(mr * &col));
    }
    let br = z.transpose() * &bz;
    let mr_small = z.transpose() * &mz;
    let chol = mr_small.clone().cholesky().ok_or(SpectralError::MassNotPd)?;
    let l = chol.l();
    let mut w = l.solve_lower_triangular(&br).unwrap();
    w.transpose_mut();
    let mut w = l.solve_lower_triangular(&w).unwrap();
    w = (&w + w.transpose()) * 0.5;
    let eig = w.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut values = Vec::with_capacity(k);
    let mut out = DMatrix::zeros(dim, k);
    for (slot, &idx) in order.iter().enumerate() {
        values.push(eig.eigenvalues[idx]);
        let y = eig.eigenvectors.column(idx).into_owned();
        let coeff = l.transpose().solve_upper_triangular(&y).unwrap();
        out.set_column(slot, &(&z * coeff));
    }
    Ok((values, out))
}

/// Finds a shift sigma with `B - sigma Mr` positive definite (hence sigma
/// below the smallest pencil eigenvalue), doubling from -1.
fn find_shift_factorization(
    b: &CscMatrix<f64>,
    mr: &CscMatrix<f64>,
) -> Result<(f64, CscCholesky<f64>), SpectralError> {
    let mut sigma = -1.0;
    for _ in 0..60 {
        let shifted = b + &(mr * (-sigma));
        if let Ok(f) = CscCholesky::factor(&shifted) {
            return Ok((sigma, f));
        }
        sigma *= 2.0;
    }
    Err(SpectralError::Shift)
}

/// Shift-invert Lanczos with full reorthogonalization in the Mr inner
/// product. The operator `(B - sigma Mr)^{-1} Mr` is positive definite and
/// self-adjoint in that inner product; its largest Ritz values map to the
/// smallest pencil eigenvalues via `lambda = sigma + 1/theta`.
fn solve_lanczos(
    b: &CscMatrix<f64>,
    mr: &CscMatrix<f64>,
    k: usize,
) -> Result<(Vec<f64>, DMatrix<f64>), SpectralError> {
    let dim = b.nrows();
    let (sigma, factor) = find_shift_factorization(b, mr)?;
    let mut steps = (2 * k + 30).min(dim);
    for _attempt in 0..3 {
        let (values, vectors) = lanczos_run(b, mr, &factor, sigma, k, steps)?;
        if check_residuals(b, mr, &values, &vectors).is_ok() {
            return Ok((values, vectors));
        }
        if steps == dim {
            break;
        }
        steps = (2 * steps).min(dim);
    }
    // Final run at the largest step count; the caller re-checks residuals.
    lanczos_run(b, mr, &factor, sigma, k, steps)
}

fn lanczos_run(
    _b: &CscMatrix<f64>,
    mr: &CscMatrix<f64>,
    factor: &CscCholesky<f64>,
    sigma: f64,
    k: usize,
    steps: usize,
) -> Result<(Vec<f64>, DMatrix<f64>), SpectralError> {
    let dim = mr.nrows();
    // Deterministic start vector.
    let mut v = DVector::from_fn(dim, |i, _| 0.7 + (i as f64 * 0.754877666).sin());
    let m_norm = |x: &DVector<f64>, mx: &DVector<f64>| x.dot(mx).sqrt();
    let mut mv = mr * &v;
    let n0 = m_norm(&v, &mv);
    v /= n0;
    mv /= n0;

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut m_basis: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    basis.push(v);
    m_basis.push(mv);

    for j in 0..steps {
        // w = (B - sigma Mr)^{-1} Mr v_j
        let rhs = DMatrix::from_column_slice(dim, 1, m_basis[j].as_slice());
        let sol = factor.solve(&rhs);
        let mut w: DVector<f64> = sol.column(0).into_owned();
        let alpha = w.dot(&m_basis[j]);
        alphas.push(alpha);
        // Full reorthogonalization (twice) against the Mr-orthonormal basis.
        for _ in 0..2 {
            for (q, mq) in basis.iter().zip(&m_basis) {
                let c = w.dot(mq);
                w -= q * c;
            }
        }
        let mw = mr * &w;
        let beta = m_norm(&w, &mw);
        if j + 1 == steps || beta < 1e-13 {
            break;
        }
        betas.push(beta);
        basis.push(&w / beta);
        m_basis.push(&mw / beta);
    }

    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m && i < betas.len() {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    // Largest theta first -> smallest lambda first.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let take = k.min(m);
    let mut values = Vec::with_capacity(take);
    let mut vectors = DMatrix::zeros(dim, take);
    for (out, &idx) in order.iter().take(take).enumerate() {
        let theta = eig.eigenvalues[idx];
        values.push(sigma + 1.0 / theta);
        let s = eig.eigenvectors.column(idx);
        let mut z = DVector::zeros(dim);
        for (coeff, q) in s.iter().zip(&basis) {
            z += q * *coeff;
        }
        vectors.set_column(out, &(&z / z.norm()));
    }
    if take < k {
        return Err(SpectralError::Dimension { k, dim: take });
    }
    Ok((values, vectors))
}

/// Counts negative and near-zero eigenvalues relative to the spectrum's zero
/// tolerance, and reports how close the classification is to the threshold.
pub fn classify_spectrum(spectrum: &Spectrum) -> Classification {
    let tol = spectrum.tol_zero();
    let mut index = 0;
    let mut nullity = 0;
    let mut gap_nonzero = f64::INFINITY;
    let mut gap_zero = 0.0_f64;
    let mut ambiguous = false;
    for &lam in spectrum.eigenvalues() {
        if lam < -tol {
            index += 1;
            gap_nonzero = gap_nonzero.min(lam.abs());
        } else if lam.abs() <= tol {
            nullity += 1;
            gap_zero = gap_zero.max(lam.abs());
        } else {
            gap_nonzero = gap_nonzero.min(lam.abs());
        }
        if (lam.abs() - tol).abs() <= 0.1 * tol {
            ambiguous = true;
        }
    }
    Classification {
        index,
        nullity,
        gap_nonzero,
        gap_zero,
        ambiguous,
    }
}

/// Number of eigenvalues at most `rho` (up to the zero tolerance). Returns
/// the count and whether it was truncated at the computed portion of the
/// spectrum.
pub fn beta_count(spectrum: &Spectrum, rho: f64) -> (usize, bool) {
    let count = spectrum
        .eigenvalues()
        .iter()
        .filter(|&&l| l <= rho + spectrum.tol_zero())
        .count();
    let truncated =
        count == spectrum.eigenvalues().len() && count < spectrum.reduced_dim();
    (count, truncated)
}
