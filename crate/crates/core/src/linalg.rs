//! Dense symmetric eigensolver and a block power method for the top of the
//! spectrum. Matrices are row-major `Vec<F>` of `n * n`.
#![allow(clippy::needless_range_loop)]

use crate::Scalar;

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub(crate) struct SymmetricEigen<F> {
    pub values: Vec<F>,
    /// `vectors[i]` is the unit eigenvector of `values[i]`.
    pub vectors: Vec<Vec<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct NoConvergence;

/// Householder tridiagonalisation followed by implicit QL with shifts.
pub(crate) fn symmetric_eigen<F: Scalar>(matrix: &[F], n: usize) -> Result<SymmetricEigen<F>, NoConvergence> {
    assert_eq!(matrix.len(), n * n);
    if n == 0 {
        return Ok(SymmetricEigen { values: vec![], vectors: vec![] });
    }
    let mut v = matrix.to_vec();
    let mut d = vec![F::zero(); n];
    let mut e = vec![F::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e, n);
    tridiagonal_ql(&mut v, &mut d, &mut e, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&j| d[j]).collect();
    let vectors = order.iter().map(|&j| (0..n).map(|k| v[k * n + j]).collect()).collect();
    Ok(SymmetricEigen { values, vectors })
}

fn tridiagonalize<F: Scalar>(v: &mut [F], d: &mut [F], e: &mut [F], n: usize) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = F::zero();
        let mut h = F::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == F::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = F::zero();
                v[at(j, i)] = F::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > F::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = F::zero();
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = F::zero();
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
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[at(k, j)] -= upd;
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = F::zero();
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = F::one();
        let h = d[i + 1];
        if h != F::zero() {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = F::zero();
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[at(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = F::zero();
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = F::zero();
    }
    v[at(n - 1, n - 1)] = F::one();
    e[0] = F::zero();
}

fn tridiagonal_ql<F: Scalar>(v: &mut [F], d: &mut [F], e: &mut [F], n: usize) -> Result<(), NoConvergence> {
    let at = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = F::zero();

    let two = F::lit(2.0);
    let eps = F::epsilon();
    let mut f = F::zero();
    let mut tst1 = F::zero();
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
                if iterations > 60 {
                    return Err(NoConvergence);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(F::one());
                if p < F::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = F::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = F::zero();
                let mut s2 = F::zero();
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
                    for k in 0..n {
                        h = v[at(k, i + 1)];
                        v[at(k, i + 1)] = s * v[at(k, i)] + c * h;
                        v[at(k, i)] = c * v[at(k, i)] - s * h;
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
        e[l] = F::zero();
    }
    Ok(())
}

/// Modified Gram-Schmidt on the rows of `basis`, in place. Rows that become
/// numerically dependent are replaced by the next unused coordinate axis
/// orthogonalised against the rest.
pub(crate) fn orthonormalize_rows<F: Scalar>(basis: &mut [Vec<F>]) {
    let dim = basis.first().map_or(0, Vec::len);
    let mut axis = 0;
    for i in 0..basis.len() {
        loop {
            for j in 0..i {
                let proj = dot(&basis[i], &basis[j]);
                let (head, tail) = basis.split_at_mut(i);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= proj * *y;
                }
            }
            let norm = dot(&basis[i], &basis[i]).sqrt();
            if norm > F::lit(1e-10) {
                for x in basis[i].iter_mut() {
                    *x /= norm;
                }
                break;
            }
            // degenerate row: restart from a coordinate axis
            basis[i] = vec![F::zero(); dim];
            basis[i][axis % dim] = F::one();
            axis += 1;
        }
    }
}

#[inline]
pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Top-`rank` eigenpairs of the symmetric PSD operator `apply` on `dim`-space
/// by orthogonal (block power) iteration with a final Rayleigh-Ritz step.
pub(crate) fn top_eigen_subspace<F, Op>(
    dim: usize,
    rank: usize,
    apply: Op,
    max_iter: usize,
    tol: F,
) -> Result<SymmetricEigen<F>, NoConvergence>
where
    F: Scalar,
    Op: Fn(&[F]) -> Vec<F>,
{
    let block = (rank + 8).min(dim);
    // deterministic start: a fixed quasi-random pattern
    let mut basis: Vec<Vec<F>> = (0..block)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let t = ((i * 7919 + j * 104_729 + 13) % 1_000_003) as f64 / 1_000_003.0;
                    F::lit(t - 0.5)
                })
                .collect()
        })
        .collect();
    orthonormalize_rows(&mut basis);

    let mut previous: Option<Vec<F>> = None;
    for _ in 0..max_iter {
        let mut next: Vec<Vec<F>> = basis.iter().map(|q| apply(q)).collect();
        let ritz = rayleigh_ritz(&basis, &next)?;
        orthonormalize_rows(&mut next);
        basis = next;
        let current: Vec<F> = ritz.values.iter().take(rank).copied().collect();
        if let Some(prev) = &previous {
            let scale = current.first().copied().unwrap_or(F::one()).abs().max(F::min_positive_value());
            let delta = current.iter().zip(prev).fold(F::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
            if delta <= tol * scale {
                return finish_subspace(&basis, &apply, rank);
            }
        }
        previous = Some(current);
    }
    finish_subspace(&basis, &apply, rank)
}

fn rayleigh_ritz<F: Scalar>(basis: &[Vec<F>], images: &[Vec<F>]) -> Result<SymmetricEigen<F>, NoConvergence> {
    let b = basis.len();
    let mut small = vec![F::zero(); b * b];
    for i in 0..b {
        for j in 0..b {
            small[i * b + j] = dot(&basis[i], &images[j]);
        }
    }
    for i in 0..b {
        for j in (i + 1)..b {
            let avg = (small[i * b + j] + small[j * b + i]) * F::lit(0.5);
            small[i * b + j] = avg;
            small[j * b + i] = avg;
        }
    }
    symmetric_eigen(&small, b)
}

fn finish_subspace<F, Op>(basis: &[Vec<F>], apply: &Op, rank: usize) -> Result<SymmetricEigen<F>, NoConvergence>
where
    F: Scalar,
    Op: Fn(&[F]) -> Vec<F>,
{
    let images: Vec<Vec<F>> = basis.iter().map(|q| apply(q)).collect();
    let ritz = rayleigh_ritz(basis, &images)?;
    let dim = basis[0].len();
    let mut vectors: Vec<Vec<F>> = ritz
        .vectors
        .iter()
        .take(rank)
        .map(|coef| {
            let mut out = vec![F::zero(); dim];
            for (c, q) in coef.iter().zip(basis) {
                for (o, x) in out.iter_mut().zip(q) {
                    *o += *c * *x;
                }
            }
            out
        })
        .collect();
    orthonormalize_rows(&mut vectors);
    Ok(SymmetricEigen { values: ritz.values.into_iter().take(rank).collect(), vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(eig: &SymmetricEigen<f64>, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for (val, vec) in eig.values.iter().zip(&eig.vectors) {
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] += val * vec[i] * vec[j];
                }
            }
        }
        out
    }

    #[test]
    fn diagonal_matrix_sorted_descending() {
        let m: Vec<f64> = vec![1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0];
        let eig = symmetric_eigen(&m, 3).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0]);
        assert!((eig.vectors[0][1].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstructs_random_symmetric() {
        let n = 9;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = ((i * 31 + j * 17) % 11) as f64 - 5.0;
                m[i * n + j] = x;
                m[j * n + i] = x;
            }
        }
        let eig = symmetric_eigen(&m, n).unwrap();
        let back = reconstruct(&eig, n);
        for (a, b) in m.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        for i in 0..n {
            for j in 0..n {
                let d = dot(&eig.vectors[i], &eig.vectors[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_by_one_and_zero_matrix() {
        let eig = symmetric_eigen(&[4.0_f64], 1).unwrap();
        assert_eq!(eig.values, vec![4.0]);
        let eig = symmetric_eigen(&[0.0_f32; 4], 2).unwrap();
        assert_eq!(eig.values, vec![0.0, 0.0]);
    }

    #[test]
    fn subspace_iteration_matches_dense_top() {
        let n = 12;
        // well separated spectrum 12, 11, ..., 1 rotated by a fixed orthogonal basis
        let mut basis: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| ((i * 5 + j * 3) % 7) as f64 + if i == j { 3.0 } else { 0.0 }).collect())
            .collect();
        orthonormalize_rows(&mut basis);
        let mut m = vec![0.0; n * n];
        for (k, q) in basis.iter().enumerate() {
            let lambda = (n - k) as f64;
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += lambda * q[i] * q[j];
                }
            }
        }
        let apply = |x: &[f64]| -> Vec<f64> { (0..n).map(|i| dot(&m[i * n..(i + 1) * n], x)).collect() };
        let top = top_eigen_subspace(n, 3, apply, 500, 1e-14).unwrap();
        let dense = symmetric_eigen(&m, n).unwrap();
        for i in 0..3 {
            assert!((top.values[i] - dense.values[i]).abs() < 1e-9);
            assert!((dot(&top.vectors[i], &dense.vectors[i]).abs() - 1.0).abs() < 1e-9);
        }
    }
}
