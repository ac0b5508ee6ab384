//! Symmetric eigenvalue machinery for block-tridiagonal Hessian windows.
//!
//! Scalar chains (`d = 1`) use Sturm-sequence bisection directly on the
//! tridiagonal bands. Block windows are reduced to tridiagonal form first.
//! The cyclic Jacobi solver is kept deliberately simple: it is the
//! independent oracle the bisection route is checked against.

use nalgebra::linalg::SymmetricTridiagonal;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dense dimension accepted for `d > 1` windows and for the Jacobi oracle.
pub const DENSE_LIMIT: usize = 2000;

const SYMMETRY_TOL: f64 = 1e-12;

/// Finite section of a symmetric block-tridiagonal operator.
///
/// Row `n` reads `E_{n-1}ᵀ ξ_{n-1} + D_n ξ_n + E_n ξ_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianWindow {
    dim: usize,
    diag: Vec<DMatrix<f64>>,
    off: Vec<DMatrix<f64>>,
}

impl HessianWindow {
    pub fn new(dim: usize, diag: Vec<DMatrix<f64>>, off: Vec<DMatrix<f64>>) -> Result<Self> {
        if dim == 0 || diag.is_empty() {
            return Err(Error::usage("Hessian window must have at least one 1x1 block"));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::usage(format!(
                "{} diagonal blocks need {} off-diagonal blocks, got {}",
                diag.len(),
                diag.len() - 1,
                off.len()
            )));
        }
        for b in diag.iter().chain(&off) {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::usage(format!("block is not {dim}x{dim}")));
            }
        }
        for (n, b) in diag.iter().enumerate() {
            let asym = (b - b.transpose()).amax();
            if asym > SYMMETRY_TOL {
                return Err(Error::usage(format!(
                    "diagonal block {n} is not symmetric (max deviation {asym:e})"
                )));
            }
        }
        Ok(HessianWindow { dim, diag, off })
    }

    pub fn from_scalar(diag: &[f64], off: &[f64]) -> Result<Self> {
        Self::new(
            1,
            diag.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
            off.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
        )
    }

    /// Block size `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of sites `N`.
    pub fn sites(&self) -> usize {
        self.diag.len()
    }

    /// Total matrix dimension `N·d`.
    pub fn order(&self) -> usize {
        self.dim * self.diag.len()
    }

    pub fn diag_blocks(&self) -> &[DMatrix<f64>] {
        &self.diag
    }

    pub fn off_blocks(&self) -> &[DMatrix<f64>] {
        &self.off
    }

    /// Diagonal and off-diagonal bands when `d = 1`.
    pub fn scalar_bands(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        (self.dim == 1).then(|| {
            (
                self.diag.iter().map(|b| b[(0, 0)]).collect(),
                self.off.iter().map(|b| b[(0, 0)]).collect(),
            )
        })
    }

    /// Principal sub-window over sites `first..first+len`.
    pub fn principal(&self, first: usize, len: usize) -> Result<Self> {
        if len == 0 || first + len > self.sites() {
            return Err(Error::usage(format!(
                "sub-window {first}..{} outside 0..{}",
                first + len,
                self.sites()
            )));
        }
        Ok(HessianWindow {
            dim: self.dim,
            diag: self.diag[first..first + len].to_vec(),
            off: self.off[first..first + len - 1].to_vec(),
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim;
        let n = self.order();
        let mut m = DMatrix::zeros(n, n);
        for (i, b) in self.diag.iter().enumerate() {
            m.view_mut((i * d, i * d), (d, d)).copy_from(b);
        }
        for (i, b) in self.off.iter().enumerate() {
            m.view_mut((i * d, (i + 1) * d), (d, d)).copy_from(b);
            m.view_mut(((i + 1) * d, i * d), (d, d)).copy_from(&b.transpose());
        }
        m
    }

    /// `H ξ` for a flat vector of length `N·d`.
    pub fn apply(&self, xi: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let n = self.sites();
        let block = |i: usize| DVector::from_column_slice(&xi[i * d..(i + 1) * d]);
        let mut out = vec![0.0; n * d];
        for i in 0..n {
            let mut row = &self.diag[i] * block(i);
            if i > 0 {
                row += self.off[i - 1].transpose() * block(i - 1);
            }
            if i + 1 < n {
                row += &self.off[i] * block(i + 1);
            }
            out[i * d..(i + 1) * d].copy_from_slice(row.as_slice());
        }
        out
    }

    /// Solves `H x = b` by block LU without pivoting across blocks.
    /// Returns `None` when a pivot block is numerically singular.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let d = self.dim;
        let n = self.sites();
        if rhs.len() != n * d {
            return None;
        }
        let scale = self
            .diag
            .iter()
            .chain(&self.off)
            .map(|b| b.amax())
            .fold(1.0f64, f64::max);
        let mut pivots = Vec::with_capacity(n);
        let mut ys: Vec<DVector<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut p = self.diag[i].clone();
            let mut y = DVector::from_column_slice(&rhs[i * d..(i + 1) * d]);
            if i > 0 {
                let lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> = &pivots[i - 1];
                let e = &self.off[i - 1];
                let pe = lu.solve(e)?;
                let py = lu.solve(&ys[i - 1])?;
                p -= e.transpose() * pe;
                y -= e.transpose() * py;
            }
            let lu = p.lu();
            let u = lu.u();
            let smallest = (0..d).map(|j| u[(j, j)].abs()).fold(f64::INFINITY, f64::min);
            if !(smallest > 1e-14 * scale) {
                return None;
            }
            pivots.push(lu);
            ys.push(y);
        }
        let mut xs: Vec<DVector<f64>> = vec![DVector::zeros(d); n];
        for i in (0..n).rev() {
            let mut t = ys[i].clone();
            if i + 1 < n {
                t -= &self.off[i] * &xs[i + 1];
            }
            xs[i] = pivots[i].solve(&t)?;
        }
        Some(xs.iter().flat_map(|x| x.iter().copied()).collect())
    }
}

/// Extreme and near-zero spectral data of a finite window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralExtrema {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Smallest `|E|` over the spectrum.
    pub abs_min: f64,
    /// `max(|lambda_min|, |lambda_max|)`.
    pub abs_max: f64,
}

impl SpectralExtrema {
    /// `abs_min / abs_max`, the finite-section gap parameter.
    pub fn gap_parameter(&self) -> f64 {
        if self.abs_max == 0.0 {
            0.0
        } else {
            self.abs_min / self.abs_max
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    All,
    /// Smallest and largest eigenvalue.
    Extreme,
    /// The eigenvalues adjacent to 0: the largest negative and the smallest
    /// non-negative one, whichever exist.
    NearZero,
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let max_e2 = off.iter().map(|e| e * e).fold(1.0f64, f64::max);
    let pivmin = f64::MIN_POSITIVE * max_e2;
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        q = if i == 0 {
            diag[0] - x
        } else {
            diag[i] - x - off[i - 1] * off[i - 1] / q
        };
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Interval containing every eigenvalue, widened slightly past the Gershgorin discs.
pub fn gershgorin_bounds(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let pad = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) * n as f64 + f64::MIN_POSITIVE;
    (lo - pad, hi + pad)
}

/// `index`-th eigenvalue (ascending, 0-based) by bisection to width `tol`.
fn bisect_eigenvalue(diag: &[f64], off: &[f64], index: usize, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_bands(diag: &[f64], off: &[f64], tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::usage("tolerance must be positive"));
    }
    if diag.is_empty() {
        return Err(Error::usage("empty matrix"));
    }
    if off.len() + 1 != diag.len() {
        return Err(Error::usage(format!(
            "off-diagonal length {} must be diagonal length {} minus one",
            off.len(),
            diag.len()
        )));
    }
    Ok(())
}

/// Eigenvalues of the symmetric tridiagonal matrix with bands `diag`, `off`,
/// sorted ascending, each bracketed to width `tol`. Repeated eigenvalues are
/// reported with multiplicity.
pub fn sturm_eigen_tridiagonal(diag: &[f64], off: &[f64], which: Which, tol: f64) -> Result<Vec<f64>> {
    check_bands(diag, off, tol)?;
    let n = diag.len();
    let (lo, hi) = gershgorin_bounds(diag, off);
    let indices: Vec<usize> = match which {
        Which::All => (0..n).collect(),
        Which::Extreme if n == 1 => vec![0],
        Which::Extreme => vec![0, n - 1],
        Which::NearZero => {
            let below = sturm_count(diag, off, 0.0);
            let mut idx = Vec::new();
            if below > 0 {
                idx.push(below - 1);
            }
            if below < n {
                idx.push(below);
            }
            idx
        }
    };
    Ok(indices
        .into_iter()
        .map(|k| bisect_eigenvalue(diag, off, k, lo, hi, tol))
        .collect())
}

/// All eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
/// sweeping until the off-diagonal Frobenius norm is below `tol`.
pub fn jacobi_eigen_dense(m: &DMatrix<f64>, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::usage("tolerance must be positive"));
    }
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::usage("matrix is not square"));
    }
    if n > DENSE_LIMIT {
        return Err(Error::Capacity {
            what: format!("dense matrix of order {n}"),
            limit: DENSE_LIMIT,
        });
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 {
        return Err(Error::usage(format!("matrix is not symmetric (max deviation {asym:e})")));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let off_norm = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off_norm(&a) > tol {
        sweeps += 1;
        if sweeps > 100 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Spectral extrema with the default dense limit.
pub fn spectral_extrema(h: &HessianWindow, tol: f64) -> Result<SpectralExtrema> {
    spectral_extrema_with_limit(h, tol, DENSE_LIMIT)
}

pub fn spectral_extrema_with_limit(h: &HessianWindow, tol: f64, dense_limit: usize) -> Result<SpectralExtrema> {
    if !(tol > 0.0) {
        return Err(Error::usage("tolerance must be positive"));
    }
    let (diag, off) = match h.scalar_bands() {
        Some(bands) => bands,
        None => {
            if h.order() > dense_limit {
                return Err(Error::Capacity {
                    what: format!("block window of order {} (d = {})", h.order(), h.dim()),
                    limit: dense_limit,
                });
            }
            let tri = SymmetricTridiagonal::new(h.to_dense());
            let (d, e) = tri.unpack_tridiagonal();
            (d.as_slice().to_vec(), e.as_slice().to_vec())
        }
    };
    let ext = sturm_eigen_tridiagonal(&diag, &off, Which::Extreme, tol)?;
    let lambda_min = ext[0];
    let lambda_max = *ext.last().unwrap();
    let abs_max = lambda_min.abs().max(lambda_max.abs());
    let near = sturm_eigen_tridiagonal(&diag, &off, Which::NearZero, tol * abs_max.max(1.0))?;
    let abs_min = near.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min).min(abs_max);
    Ok(SpectralExtrema {
        lambda_min,
        lambda_max,
        abs_min,
        abs_max,
    })
}
