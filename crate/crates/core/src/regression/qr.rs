//! Householder QR with column-norm pivoting (Businger-Golub).

use nalgebra::DMatrix;

/// Relative threshold on |R_kk| / |R_00| below which a column counts as
/// linearly dependent on its predecessors.
pub const RANK_TOL: f64 = 1e-10;

pub struct PivotedQr {
    /// Upper-triangular factor, columns in pivot order.
    pub r: DMatrix<f64>,
    /// `perm[k]` is the original index of the k-th pivoted column.
    pub perm: Vec<usize>,
    pub rank: usize,
    /// Qᵀ applied to the right-hand side, if one was given.
    pub qty: Option<Vec<f64>>,
}

impl PivotedQr {
    /// Original indices of the columns beyond the numerical rank.
    pub fn dependent_columns(&self) -> Vec<usize> {
        let mut cols = self.perm[self.rank..].to_vec();
        cols.sort_unstable();
        cols
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.perm.len()
    }

    /// Least-squares coefficients in original column order. Requires full
    /// column rank and a right-hand side.
    pub fn solve(&self) -> Option<Vec<f64>> {
        let qty = self.qty.as_ref()?;
        if !self.is_full_rank() {
            return None;
        }
        let p = self.perm.len();
        let mut z = vec![0.0; p];
        for k in (0..p).rev() {
            let s: f64 = (k + 1..p).map(|j| self.r[(k, j)] * z[j]).sum();
            z[k] = (qty[k] - s) / self.r[(k, k)];
        }
        let mut beta = vec![0.0; p];
        for (k, &orig) in self.perm.iter().enumerate() {
            beta[orig] = z[k];
        }
        Some(beta)
    }
}

pub fn pivoted_qr(x: &DMatrix<f64>, rhs: Option<&[f64]>) -> PivotedQr {
    let (m, n) = x.shape();
    let mut a = x.clone();
    let mut b = rhs.map(|r| r.to_vec());
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut r00 = 0.0;
    let mut rank = steps;

    for k in 0..steps {
        let (mut best, mut best_norm) = (k, -1.0);
        for j in k..n {
            let s: f64 = (k..m).map(|i| a[(i, j)] * a[(i, j)]).sum();
            if s > best_norm {
                best = j;
                best_norm = s;
            }
        }
        if best != k {
            a.swap_columns(k, best);
            perm.swap(k, best);
        }
        let norm = best_norm.sqrt();
        if k == 0 {
            r00 = norm;
        }
        if norm <= RANK_TOL * r00 || norm == 0.0 {
            rank = k;
            break;
        }
        let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|e| e * e).sum();
        if vtv > 0.0 {
            for j in k + 1..n {
                let dot: f64 = v.iter().enumerate().map(|(o, vi)| vi * a[(k + o, j)]).sum();
                let f = 2.0 * dot / vtv;
                for (o, vi) in v.iter().enumerate() {
                    a[(k + o, j)] -= f * vi;
                }
            }
            if let Some(b) = b.as_mut() {
                let dot: f64 = v.iter().enumerate().map(|(o, vi)| vi * b[k + o]).sum();
                let f = 2.0 * dot / vtv;
                for (o, vi) in v.iter().enumerate() {
                    b[k + o] -= f * vi;
                }
            }
        }
        a[(k, k)] = alpha;
        for i in k + 1..m {
            a[(i, k)] = 0.0;
        }
    }
    if m < n {
        rank = rank.min(m);
    }
    let r = a.rows(0, steps).into_owned();
    PivotedQr {
        r,
        perm,
        rank,
        qty: b,
    }
}
