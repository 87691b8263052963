//! Linear solvers: a banded direct LU behind a reverse Cuthill-McKee ordering,
//! block-diagonal inverses for discontinuous spaces, BiCGStab, and dense
//! symmetric generalized eigenvalues.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::sparse::{SparseOperator, Symmetry, TripletBuilder};
use crate::{Error, Result};

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[old] = new`.
pub fn rcm_ordering(a: &SparseOperator) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let mut visited = alloc::vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    while order.len() < n {
        // start each component from a minimum-degree vertex
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| adj[i].len())
            .expect("unvisited vertex");
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    let mut perm = alloc::vec![0; n];
    for (new, &old) in order.iter().rev().enumerate() {
        perm[old] = new;
    }
    perm
}

pub fn bandwidth(a: &SparseOperator) -> usize {
    a.triplets().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
}

/// LU factorization without pivoting in band storage.
///
/// Stable for matrices whose symmetric part is positive definite, which
/// covers every system assembled in this crate (mass plus skew terms).
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    band: usize,
    perm: Vec<usize>,
    data: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let perm = rcm_ordering(a);
        let pa = a.permuted(&perm);
        let band = bandwidth(&pa);
        let width = 2 * band + 1;
        let mut data = alloc::vec![0.0; n * width];
        for (i, j, v) in pa.triplets() {
            data[i * width + j + band - i] += v;
        }
        let scale = a.max_abs();
        for k in 0..n {
            let pivot = data[k * width + band];
            if !(libm::fabs(pivot) > 1e-14 * scale) {
                return Err(Error::ZeroPivot(k));
            }
            let end = (k + band + 1).min(n);
            for i in k + 1..end {
                let ik = i * width + k + band - i;
                let l = data[ik] / pivot;
                if l == 0.0 {
                    continue;
                }
                data[ik] = l;
                for j in k + 1..end {
                    data[i * width + j + band - i] -= l * data[k * width + j + band - k];
                }
            }
        }
        Ok(Self { n, band, perm, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.band
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let (n, band) = (self.n, self.band);
        let width = 2 * band + 1;
        let mut y = alloc::vec![0.0; n];
        for (old, &new) in self.perm.iter().enumerate() {
            y[new] = b[old];
        }
        for i in 0..n {
            let lo = i.saturating_sub(band);
            let mut s = y[i];
            for j in lo..i {
                s -= self.data[i * width + j + band - i] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + band + 1).min(n);
            let mut s = y[i];
            for j in i + 1..hi {
                s -= self.data[i * width + j + band - i] * y[j];
            }
            y[i] = s / self.data[i * width + band];
        }
        self.perm.iter().map(|&new| y[new]).collect()
    }
}

/// Exact inverse of a block-diagonal operator, one dense block per group of
/// DOFs (for discontinuous spaces: the DOFs of one element).
#[derive(Debug, Clone)]
pub struct BlockDiagonalInverse {
    n: usize,
    groups: Vec<Vec<usize>>,
    inverses: Vec<DMatrix<f64>>,
}

impl BlockDiagonalInverse {
    /// Fails if `a` couples two different groups or a block is singular.
    pub fn new(a: &SparseOperator, groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = a.nrows();
        let mut owner = alloc::vec![usize::MAX; n];
        for (g, dofs) in groups.iter().enumerate() {
            for &d in dofs {
                owner[d] = g;
            }
        }
        if owner.contains(&usize::MAX) {
            return Err(Error::InvalidParameter("block groups do not cover every row".into()));
        }
        for (i, j, v) in a.triplets() {
            if owner[i] != owner[j] && v != 0.0 {
                return Err(Error::InvalidParameter(format!("entry ({i}, {j}) couples two blocks")));
            }
        }
        let mut inverses = Vec::with_capacity(groups.len());
        for dofs in &groups {
            let m = dofs.len();
            let block = DMatrix::from_fn(m, m, |r, c| a.get(dofs[r], dofs[c]));
            let inv = block.lu().try_inverse().ok_or(Error::ZeroPivot(dofs[0]))?;
            inverses.push(inv);
        }
        Ok(Self { n, groups, inverses })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn block_inverse(&self, g: usize) -> &DMatrix<f64> {
        &self.inverses[g]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = alloc::vec![0.0; self.n];
        for (dofs, inv) in self.groups.iter().zip(&self.inverses) {
            for (r, &dr) in dofs.iter().enumerate() {
                y[dr] = dofs.iter().enumerate().map(|(c, &dc)| inv[(r, c)] * x[dc]).sum();
            }
        }
        y
    }

    /// Sparse `B^T A^{-1} B` for a `B` whose rows split along the groups.
    pub fn congruence(&self, b: &SparseOperator) -> SparseOperator {
        assert_eq!(b.nrows(), self.n);
        let mut t = TripletBuilder::new(b.ncols(), b.ncols());
        for (dofs, inv) in self.groups.iter().zip(&self.inverses) {
            // local columns touched by this block's rows
            let mut cols: Vec<usize> = dofs.iter().flat_map(|&r| b.row(r).map(|(c, _)| c)).collect();
            cols.sort_unstable();
            cols.dedup();
            let local = DMatrix::from_fn(dofs.len(), cols.len(), |r, c| b.get(dofs[r], cols[c]));
            let prod = local.transpose() * inv * &local;
            for (p, &cp) in cols.iter().enumerate() {
                for (q, &cq) in cols.iter().enumerate() {
                    t.push(cp, cq, prod[(p, q)]);
                }
            }
        }
        t.build(Symmetry::General)
    }
}

/// Unpreconditioned BiCGStab. Returns the solution and iteration count.
pub fn bicgstab(a: &SparseOperator, b: &[f64], x0: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let norm = |u: &[f64]| libm::sqrt(dot(u, u));
    let bnorm = norm(b);
    let mut x = x0.to_vec();
    if bnorm == 0.0 {
        return Ok((alloc::vec![0.0; b.len()], 0));
    }
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = alloc::vec![0.0; b.len()];
    let mut p = alloc::vec![0.0; b.len()];
    let mut residual = norm(&r) / bnorm;
    if residual <= tol {
        return Ok((x, 0));
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..p.len() {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        a.mul_vec_into(&p, &mut v);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm(&s) / bnorm <= tol {
            for i in 0..x.len() {
                x[i] += alpha * p[i];
            }
            return Ok((x, it));
        }
        let t = a.mul_vec(&s);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..x.len() {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        residual = norm(&r) / bnorm;
        if residual <= tol {
            return Ok((x, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Eigenvalues of `L^{-1} A L^{-T}` where `M = L L^T`, i.e. the generalized
/// eigenvalues of the symmetric pencil `(A, M)`, ascending. When `deflate` is
/// given, the direction `deflate` (in the original coordinates) is removed
/// from the pencil and its eigenvalue is not reported.
pub fn generalized_symmetric_eigenvalues(a: &DMatrix<f64>, m: &DMatrix<f64>, deflate: Option<&DVector<f64>>) -> Result<Vec<f64>> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let li = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(m.nrows(), m.nrows()))
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let mut s = &li * a * li.transpose();
    s = (&s + s.transpose()) * 0.5;
    let mut drop_one = false;
    if let Some(d) = deflate {
        // M-orthogonal complement of d corresponds to the Euclidean
        // complement of L^T d
        let mut v = l.transpose() * d;
        let vn = v.norm();
        if vn == 0.0 {
            return Err(Error::Eigen("zero deflation vector".into()));
        }
        v /= vn;
        let p = DMatrix::identity(s.nrows(), s.nrows()) - &v * v.transpose();
        s = &p * s * &p;
        s = (&s + s.transpose()) * 0.5;
        // the deflated direction now has eigenvalue ~0; shift it above the spectrum
        let shift = 1.0 + s.iter().fold(0.0f64, |acc, x| acc + libm::fabs(*x));
        s += &v * v.transpose() * shift;
        drop_one = true;
    }
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    if drop_one {
        ev.pop();
    }
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseOperator {
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, 4.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0 + 0.3);
                t.push(i + 1, i, -1.0 - 0.3);
            }
        }
        t.build(Symmetry::General)
    }

    #[test]
    fn banded_lu_matches_dense() {
        let a = tridiag(30).permuted(&(0..30).map(|i| (i * 7) % 30).collect::<Vec<_>>());
        let lu = BandedLu::factor(&a).unwrap();
        assert_eq!(lu.bandwidth(), 1);
        let b: Vec<f64> = (0..30).map(|i| libm::sin(i as f64)).collect();
        let x = lu.solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!(libm::fabs(ri - bi) < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_reported() {
        let a = SparseOperator::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0)], Symmetry::Skew).unwrap();
        assert!(matches!(BandedLu::factor(&a), Err(Error::ZeroPivot(_))));
    }

    #[test]
    fn bicgstab_solves() {
        let a = tridiag(40);
        let b = alloc::vec![1.0; 40];
        let (x, _) = bicgstab(&a, &b, &alloc::vec![0.0; 40], 1e-12, 400).unwrap();
        let r = a.mul_vec(&x);
        assert!(r.iter().zip(&b).all(|(p, q)| libm::fabs(p - q) < 1e-10));
    }

    #[test]
    fn block_inverse_rejects_coupling() {
        let a = tridiag(4);
        assert!(BlockDiagonalInverse::new(&a, alloc::vec![alloc::vec![0, 1], alloc::vec![2, 3]]).is_err());
        let inv = BlockDiagonalInverse::new(&a, alloc::vec![alloc::vec![0, 1, 2, 3]]).unwrap();
        let y = inv.apply(&a.mul_vec(&[1.0, 2.0, 3.0, 4.0]));
        assert!(y.iter().zip([1.0, 2.0, 3.0, 4.0]).all(|(p, q)| libm::fabs(p - q) < 1e-14));
    }

    #[test]
    fn deflated_pencil() {
        // A = diag(0, 1, 3), M = I; deflating e0 leaves {1, 3}
        let a = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![0.0, 1.0, 3.0]));
        let m = DMatrix::identity(3, 3);
        let d = DVector::from_vec(alloc::vec![1.0, 0.0, 0.0]);
        let ev = generalized_symmetric_eigenvalues(&a, &m, Some(&d)).unwrap();
        assert_eq!(ev.len(), 2);
        assert!(libm::fabs(ev[0] - 1.0) < 1e-14 && libm::fabs(ev[1] - 3.0) < 1e-14);
    }
}
