//! Latent semantic indexing baseline: a rank-`K` truncated SVD of the raw
//! count table.
//!
//! The top singular triplets come from Golub-Kahan-Lanczos
//! bidiagonalization with full reorthogonalization on the sparse table.
//! The small bidiagonal matrix is diagonalized by one-sided Jacobi
//! rotations. The Krylov basis grows until every wanted triplet meets the
//! residual tolerance, or the basis spans the smaller dimension, at which
//! point the decomposition is exact up to rounding.

use rand::Rng;

use crate::corpus::CountMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdDecomposition<T> {
    /// `N x K`, orthonormal columns.
    pub u: DenseMatrix<T>,
    /// Descending, nonnegative.
    pub sigma: Vec<T>,
    /// `M x K`, orthonormal columns; largest-magnitude entry of each column is positive.
    pub v: DenseMatrix<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions<T> {
    /// Target for `||A^t u - sigma v||` of every returned triplet
    /// (`||A v - sigma u||` vanishes by construction).
    pub tol: T,
    pub seed: u64,
}

impl<T: Scalar> Default for SvdOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-8),
            seed: 0,
        }
    }
}

/// Sparse operator over the count table, optionally transposed.
struct Operator<'a, T> {
    cells: &'a [(usize, usize, T)],
    rows: usize,
    cols: usize,
    transposed: bool,
}

impl<T: Scalar> Operator<'_, T> {
    fn shape(&self) -> (usize, usize) {
        if self.transposed {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        }
    }

    /// `y = A x`
    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.shape().0];
        for &(i, j, a) in self.cells {
            let (i, j) = if self.transposed { (j, i) } else { (i, j) };
            y[i] += a * x[j];
        }
        y
    }

    /// `x = A^t y`
    fn apply_t(&self, y: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.shape().1];
        for &(i, j, a) in self.cells {
            let (i, j) = if self.transposed { (j, i) } else { (i, j) };
            x[j] += a * y[i];
        }
        x
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Two passes of modified Gram-Schmidt against `basis`.
fn orthogonalize<T: Scalar>(x: &mut [T], basis: &[Vec<T>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, x);
            for (xi, &qi) in x.iter_mut().zip(q) {
                *xi -= c * qi;
            }
        }
    }
}

/// First standard basis vector with a substantial component outside `basis`,
/// orthogonalized and normalized.
fn fresh_direction<T: Scalar>(basis: &[Vec<T>], dim: usize) -> Vec<T> {
    for i in 0..dim {
        let mut e = vec![T::zero(); dim];
        e[i] = T::one();
        orthogonalize(&mut e, basis);
        let n = norm(&e);
        if n > T::of(0.5) {
            e.iter_mut().for_each(|x| *x /= n);
            return e;
        }
    }
    unreachable!("basis of size {} cannot span dimension {dim}", basis.len())
}

/// Singular value decomposition of a small dense square matrix by one-sided
/// Jacobi. Returns `(sigma, left, right)` with singular vectors as columns,
/// sorted by descending `sigma`.
pub(crate) fn jacobi_svd<T: Scalar>(a: &DenseMatrix<T>) -> (Vec<T>, DenseMatrix<T>, DenseMatrix<T>) {
    let (rows, n) = (a.rows(), a.cols());
    let mut w: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut y: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for col in [&mut w, &mut y] {
                    let (lo, hi) = col.split_at_mut(j);
                    for (p, q) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
                        let (pi, qi) = (*p, *q);
                        *p = c * pi - s * qi;
                        *q = s * pi + c * qi;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<T> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));

    let scale = sigma.iter().fold(T::zero(), |m, &s| m.max(s));
    let negligible = scale * eps * T::of_usize(n.max(1));
    let mut left_cols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut sorted_sigma = Vec::with_capacity(n);
    let mut right = DenseMatrix::zeros(n, n);
    for (out, &j) in order.iter().enumerate() {
        let s = sigma[j];
        let col = if s > negligible {
            w[j].iter().map(|&x| x / s).collect()
        } else {
            // null direction: any unit vector orthogonal to the ones so far
            fresh_direction(&left_cols, rows)
        };
        left_cols.push(col);
        sorted_sigma.push(if s > negligible { s } else { T::zero() });
        for i in 0..n {
            right[(i, out)] = y[j][i];
        }
    }
    let mut left = DenseMatrix::zeros(rows, n);
    for (j, col) in left_cols.iter().enumerate() {
        for i in 0..rows {
            left[(i, j)] = col[i];
        }
    }
    (sorted_sigma, left, right)
}

/// Top-`k` singular triplets of the count table.
pub fn truncated_svd<T: Scalar>(counts: &CountMatrix, k: usize) -> Result<SvdDecomposition<T>> {
    truncated_svd_with(counts, k, &SvdOptions::default())
}

pub fn truncated_svd_with<T: Scalar>(
    counts: &CountMatrix,
    k: usize,
    options: &SvdOptions<T>,
) -> Result<SvdDecomposition<T>> {
    let (n, m) = (counts.n_docs(), counts.n_terms());
    let small = n.min(m);
    if k < 1 || k > small {
        return Err(Error::InvalidArgument(format!(
            "rank {k} outside [1, {small}] for a {n}x{m} table"
        )));
    }
    let cells: Vec<(usize, usize, T)> = counts
        .entries()
        .iter()
        .map(|e| (e.doc, e.term, T::of(f64::from(e.count))))
        .collect();
    // the right-hand Krylov space lives in the smaller dimension
    let op = Operator {
        cells: &cells,
        rows: n,
        cols: m,
        transposed: m > n,
    };
    let (left_dim, right_dim) = op.shape();

    let mut rng = stream(options.seed, Stream::Init);
    let mut start: Vec<T> = (0..right_dim).map(|_| T::of(1.0 + 0.5 * rng.random::<f64>())).collect();
    let s = norm(&start);
    start.iter_mut().for_each(|x| *x /= s);

    let mut us: Vec<Vec<T>> = Vec::new();
    let mut vs: Vec<Vec<T>> = vec![start];
    let mut alphas: Vec<T> = Vec::new();
    // betas[j] couples v_{j+1} to u_j
    let mut betas: Vec<T> = Vec::new();
    let mut target = (2 * k + 10).min(right_dim);
    let breakdown = |scale: T| scale * T::epsilon() * T::of(64.0);
    let mut scale = T::zero();

    loop {
        while us.len() < target {
            let j = us.len();
            let mut u = op.apply(&vs[j]);
            if j > 0 {
                let b = betas[j - 1];
                for (x, &p) in u.iter_mut().zip(&us[j - 1]) {
                    *x -= b * p;
                }
            }
            orthogonalize(&mut u, &us);
            let mut alpha = norm(&u);
            scale = scale.max(alpha);
            if alpha <= breakdown(scale) {
                alpha = T::zero();
                u = fresh_direction(&us, left_dim);
            } else {
                u.iter_mut().for_each(|x| *x /= alpha);
            }
            us.push(u);
            alphas.push(alpha);
            if vs.len() == right_dim {
                break;
            }
            let mut v = op.apply_t(&us[j]);
            for (x, &p) in v.iter_mut().zip(&vs[j]) {
                *x -= alpha * p;
            }
            orthogonalize(&mut v, &vs);
            let mut beta = norm(&v);
            scale = scale.max(beta);
            if beta <= breakdown(scale) {
                beta = T::zero();
                v = fresh_direction(&vs, right_dim);
            } else {
                v.iter_mut().for_each(|x| *x /= beta);
            }
            vs.push(v);
            betas.push(beta);
        }

        let p = us.len();
        let mut b = DenseMatrix::zeros(p, p);
        for j in 0..p {
            b[(j, j)] = alphas[j];
            if j + 1 < p {
                b[(j, j + 1)] = betas[j];
            }
        }
        let (sigma, x, y) = jacobi_svd(&b);
        let complete = vs.len() == p;
        let tail = if complete { T::zero() } else { betas[p - 1] };
        let tol = options.tol.max(T::epsilon() * T::of(100.0) * sigma[0]);
        let converged = (0..k).all(|i| (tail * x[(p - 1, i)]).abs() <= tol);
        if converged || complete || p == right_dim {
            return Ok(assemble(&op, &us, &vs[..p], &sigma, &x, &y, k));
        }
        target = (2 * p).min(right_dim);
    }
}

fn assemble<T: Scalar>(
    op: &Operator<'_, T>,
    us: &[Vec<T>],
    vs: &[Vec<T>],
    sigma: &[T],
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    k: usize,
) -> SvdDecomposition<T> {
    let (left_dim, right_dim) = op.shape();
    let p = us.len();
    let mut left = DenseMatrix::<T>::zeros(left_dim, k);
    let mut right = DenseMatrix::zeros(right_dim, k);
    for c in 0..k {
        for j in 0..p {
            let (xc, yc) = (x[(j, c)], y[(j, c)]);
            for i in 0..left_dim {
                left[(i, c)] += us[j][i] * xc;
            }
            for i in 0..right_dim {
                right[(i, c)] += vs[j][i] * yc;
            }
        }
    }
    // A = L S R^t for the operator; undo the transposition
    let (mut u, mut v) = if op.transposed { (right, left) } else { (left, right) };
    for c in 0..k {
        let col = v.column(c);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, T::zero()), |best, (i, &a)| if a.abs() > best.1 { (i, a.abs()) } else { best })
            .0;
        if col[pivot] < T::zero() {
            for i in 0..v.rows() {
                v[(i, c)] = -v[(i, c)];
            }
            for i in 0..u.rows() {
                u[(i, c)] = -u[(i, c)];
            }
        }
    }
    SvdDecomposition {
        u,
        sigma: sigma[..k].to_vec(),
        v,
    }
}

impl<T: Scalar> SvdDecomposition<T> {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(sigma) V^t`.
    pub fn reconstruct(&self) -> DenseMatrix<T> {
        self.u.scale_columns(&self.sigma).matmul(&self.v.transpose())
    }

    /// Document coordinates: rows of `U diag(sigma)`.
    pub fn doc_coords(&self) -> DenseMatrix<T> {
        self.u.scale_columns(&self.sigma)
    }

    /// Projects a sparse `(term, count)` query onto the latent space: `q^t V`.
    /// Terms beyond the vocabulary are dropped.
    pub fn fold_in(&self, query: &[(usize, u32)]) -> Result<Vec<T>> {
        let known: Vec<_> = query
            .iter()
            .filter(|&&(w, c)| w < self.v.rows() && c > 0)
            .collect();
        if known.is_empty() {
            return Err(Error::ZeroVector);
        }
        let mut out = vec![T::zero(); self.k()];
        for &&(w, c) in &known {
            let c = T::of(f64::from(c));
            for (o, &x) in out.iter_mut().zip(self.v.row(w)) {
                *o += c * x;
            }
        }
        Ok(out)
    }

    /// Largest `||A v_i - sigma_i u_i||` and `||A^t u_i - sigma_i v_i||` over all triplets.
    pub fn max_residual(&self, counts: &CountMatrix) -> T {
        let mut worst = T::zero();
        for i in 0..self.k() {
            let (u, v, s) = (self.u.column(i), self.v.column(i), self.sigma[i]);
            let mut av: Vec<T> = u.iter().map(|&x| -s * x).collect();
            let mut atu: Vec<T> = v.iter().map(|&x| -s * x).collect();
            for e in counts.entries() {
                let a = T::of(f64::from(e.count));
                av[e.doc] += a * v[e.term];
                atu[e.term] += a * u[e.doc];
            }
            worst = worst.max(norm(&av)).max(norm(&atu));
        }
        worst
    }
}

/// Rows of `U diag(sigma)`.
pub fn lsi_doc_coords<T: Scalar>(decomp: &SvdDecomposition<T>) -> DenseMatrix<T> {
    decomp.doc_coords()
}

/// `q^t V` for a sparse query.
pub fn lsi_fold_in<T: Scalar>(decomp: &SvdDecomposition<T>, query: &[(usize, u32)]) -> Result<Vec<T>> {
    decomp.fold_in(query)
}
