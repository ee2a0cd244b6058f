//! Dense real symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by implicit-shift QL
//! iterations (the EISPACK `tred2`/`tql2` pair). The working matrix is kept
//! transposed so that the inner loops run over contiguous memory and each
//! eigenvector ends up as a contiguous row.

use crate::coupling::{MBlock, SymPacked};
use crate::{Error, Result};

const MAX_QL_ITERATIONS: usize = 60;
const DEGENERATE_GAP: f64 = 1e-12;
const FALLBACK_STEP: f64 = 1e-5;

/// Eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Row `i` is the unit eigenvector of `eigenvalues[i]`, oriented so that
    /// its largest-magnitude component is positive.
    pub eigenvectors: Option<Vec<f64>>,
    /// Largest `‖Hv − λv‖₂` over all pairs when vectors were computed,
    /// otherwise the a priori bound `dim · ε · ‖H‖_F`.
    pub residual_bound: f64,
}

impl EigenResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> Option<&[f64]> {
        let n = self.dim();
        self.eigenvectors.as_deref().map(|v| &v[i * n..(i + 1) * n])
    }
}

/// All eigenvalues, and optionally eigenvectors, of an `MBlock`'s matrix.
pub fn eig_sym(block: &MBlock, want_vectors: bool) -> Result<EigenResult> {
    eig_sym_packed(&block.h, want_vectors)
}

pub fn eig_sym_packed(matrix: &SymPacked, want_vectors: bool) -> Result<EigenResult> {
    let n = matrix.dim();
    for (i, j, v) in matrix.entries() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    let frob = matrix.frobenius_norm();
    if n == 0 {
        return Ok(EigenResult { eigenvalues: vec![], eigenvectors: want_vectors.then(Vec::new), residual_bound: 0.0 });
    }

    let mut w = matrix.to_dense();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut w, n, &mut d, &mut e, want_vectors);
    let vectors = if want_vectors { Some(&mut w[..]) } else { None };
    tridiagonal_ql(&mut d, &mut e, n, vectors)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    if !want_vectors {
        return Ok(EigenResult { eigenvalues, eigenvectors: None, residual_bound: n as f64 * f64::EPSILON * frob });
    }

    let mut vectors = Vec::with_capacity(n * n);
    for &src in &order {
        let row = &w[src * n..(src + 1) * n];
        let pivot = row.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.extend(row.iter().map(|x| sign * x));
    }

    let mut residual_bound = 0.0f64;
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let v = &vectors[i * n..(i + 1) * n];
        let hv = matrix.mul_vec(v);
        let r = hv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        residual_bound = residual_bound.max(r);
    }

    Ok(EigenResult { eigenvalues, eigenvectors: Some(vectors), residual_bound })
}

/// Householder reduction. `w` holds the transposed working matrix; on exit
/// `d`/`e` are the diagonal and subdiagonal (`e[0] = 0`), and if
/// `accumulate` is set `w` holds the transposed orthogonal transformation.
fn tridiagonalize(w: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    // w[c * n + r] is element (r, c)
    macro_rules! at {
        ($r:expr, $c:expr) => {
            w[($c) * n + ($r)]
        };
    }

    for j in 0..n {
        d[j] = at!(n - 1, j);
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = at!(i - 1, j);
                at!(i, j) = 0.0;
                at!(j, i) = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                at!(j, i) = f;
                g = e[j] + at!(j, j) * f;
                let col = j * n;
                for k in (j + 1)..i {
                    let v = w[col + k];
                    g += v * d[k];
                    e[k] += v * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = j * n;
                for k in j..i {
                    w[col + k] -= f * e[k] + g * d[k];
                }
                d[j] = at!(i - 1, j);
                at!(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = at!(j, j);
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n - 1 {
        at!(n - 1, i) = at!(i, i);
        at!(i, i) = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = at!(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += at!(k, i + 1) * at!(k, j);
                }
                for k in 0..=i {
                    at!(k, j) -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            at!(k, i + 1) = 0.0;
        }
    }
    for j in 0..n {
        d[j] = at!(n - 1, j);
        at!(n - 1, j) = 0.0;
    }
    at!(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal `(d, e)`. Rotations are applied to
/// the rows of `vectors` when given.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], n: usize, mut vectors: Option<&mut [f64]>) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence { index: l, iterations: MAX_QL_ITERATIONS, dim: n });
                }

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    if let Some(v) = vectors.as_deref_mut() {
                        let (lo, hi) = v.split_at_mut((i + 1) * n);
                        let row_i = &mut lo[i * n..];
                        let row_next = &mut hi[..n];
                        for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// First-order eigenvalue derivatives `dn_i/dξ = v_iᵀ (dH/dξ) v_i`, aligned
/// with the ascending eigenvalues.
///
/// Within a (near-)degenerate cluster the per-vector derivative is not
/// defined; those indices are taken from central differences of the sorted
/// spectra instead.
pub fn eigen_derivative(block: &MBlock, result: &EigenResult) -> Result<Vec<f64>> {
    derivative_with_gap(block, result, DEGENERATE_GAP)
}

fn derivative_with_gap(block: &MBlock, result: &EigenResult, gap: f64) -> Result<Vec<f64>> {
    if result.eigenvectors.is_none() {
        return Err(Error::MissingVectors);
    }
    let n = result.dim();
    let values = &result.eigenvalues;
    let mut out = Vec::with_capacity(n);
    let mut degenerate = vec![false; n];
    for i in 0..n {
        let below = i > 0 && values[i] - values[i - 1] < gap;
        let above = i + 1 < n && values[i + 1] - values[i] < gap;
        degenerate[i] = below || above;
        let v = result.vector(i).expect("checked above");
        out.push(block.dh_dxi.quadratic_form(v));
    }

    if degenerate.iter().any(|&d| d) && block.f_c != 0.0 {
        let step = FALLBACK_STEP * block.xi.max(1e-3);
        let plus = eig_sym(&block.rebuild_at(block.xi + step), false)?;
        let minus = eig_sym(&block.rebuild_at(block.xi - step), false)?;
        for i in (0..n).filter(|&i| degenerate[i]) {
            out[i] = (plus.eigenvalues[i] - minus.eigenvalues[i]) / (2.0 * step);
        }
    }
    Ok(out)
}
