//! Small dense complex linear algebra: LU determinants, Hessenberg reduction
//! with shifted QR iteration for eigenvalues, pivoted QR for null spaces,
//! and one-sided Jacobi SVD.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::{cone, czero, Real, C};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("QR iteration did not converge within {0} iterations")]
    ConvergenceFailure(usize),
}

/// Square dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![czero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).fold(czero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }

    /// `self - z I`.
    pub fn shifted(&self, z: C<T>) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] -= z;
        }
        m
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x.norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> C<T> {
        (0..self.n).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == czero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> C<T> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = cone::<T>();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::zero() {
                return czero();
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let factor = a[i * n + k] / pivot;
                if factor == czero() {
                    continue;
                }
                for j in k + 1..n {
                    let t = a[k * n + j];
                    a[i * n + j] -= factor * t;
                }
            }
        }
        det
    }

    /// All eigenvalues, via Householder reduction to upper Hessenberg form
    /// followed by single-shift complex QR iteration with deflation.
    pub fn eigenvalues(&self) -> Result<Vec<C<T>>, LinalgError> {
        let mut h = self.clone();
        h.reduce_to_hessenberg();
        h.hessenberg_qr()
    }

    fn reduce_to_hessenberg(&mut self) {
        let n = self.n;
        if n < 3 {
            return;
        }
        let two = T::lit(2.0);
        for k in 0..n - 2 {
            let x: Vec<C<T>> = (k + 1..n).map(|i| self[(i, k)]).collect();
            let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt();
            if xnorm == T::zero() {
                continue;
            }
            let phase = if x[0].norm() == T::zero() {
                cone()
            } else {
                x[0] / x[0].norm()
            };
            let alpha = -phase * xnorm;
            let mut v = x;
            v[0] -= alpha;
            let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
            if vnorm == T::zero() {
                continue;
            }
            for c in v.iter_mut() {
                *c /= vnorm;
            }
            // left: rows k+1.. of (I - 2 v v^H) A
            for j in 0..n {
                let s = v
                    .iter()
                    .enumerate()
                    .fold(czero::<T>(), |acc, (r, vr)| acc + vr.conj() * self[(k + 1 + r, j)]);
                for (r, vr) in v.iter().enumerate() {
                    self[(k + 1 + r, j)] -= *vr * s * two;
                }
            }
            // right: columns k+1.. of A (I - 2 v v^H)
            for i in 0..n {
                let s = v
                    .iter()
                    .enumerate()
                    .fold(czero::<T>(), |acc, (r, vr)| acc + self[(i, k + 1 + r)] * *vr);
                for (r, vr) in v.iter().enumerate() {
                    self[(i, k + 1 + r)] -= s * vr.conj() * two;
                }
            }
            for i in k + 2..n {
                self[(i, k)] = czero();
            }
        }
    }

    fn hessenberg_qr(mut self) -> Result<Vec<C<T>>, LinalgError> {
        let n = self.n;
        let mut eig = Vec::with_capacity(n);
        if n == 0 {
            return Ok(eig);
        }
        let eps = T::epsilon();
        let scale = self.norm_inf().max(T::min_positive_value());
        let max_iter_per_eig = 60;
        let budget = max_iter_per_eig * n.max(1);
        let mut total = 0usize;
        let mut iter = 0usize;
        let mut hi = n - 1;
        loop {
            if hi == 0 {
                eig.push(self[(0, 0)]);
                break;
            }
            // active block [lo, hi]
            let mut lo = hi;
            while lo > 0 {
                let sub = self[(lo, lo - 1)].norm();
                let mut diag = self[(lo - 1, lo - 1)].norm() + self[(lo, lo)].norm();
                if diag == T::zero() {
                    diag = scale;
                }
                if sub <= eps * diag {
                    self[(lo, lo - 1)] = czero();
                    break;
                }
                lo -= 1;
            }
            if lo == hi {
                eig.push(self[(hi, hi)]);
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            total += 1;
            if total > budget {
                return Err(LinalgError::ConvergenceFailure(budget));
            }
            let shift = if iter.is_multiple_of(10) {
                // exceptional shift to break cycling
                let sub = self[(hi, hi - 1)].norm();
                self[(hi, hi)] + C::new(T::lit(0.75) * sub, T::lit(0.4375) * sub)
            } else {
                self.wilkinson_shift(hi)
            };
            self.qr_step(lo, hi, shift);
        }
        Ok(eig)
    }

    fn wilkinson_shift(&self, hi: usize) -> C<T> {
        let a = self[(hi - 1, hi - 1)];
        let b = self[(hi - 1, hi)];
        let c = self[(hi, hi - 1)];
        let d = self[(hi, hi)];
        let half = T::lit(0.5);
        let m = (a + d) * half;
        let p = (a - d) * half;
        let disc = (p * p + b * c).sqrt();
        let l1 = m + disc;
        let l2 = m - disc;
        if (l1 - d).norm() <= (l2 - d).norm() {
            l1
        } else {
            l2
        }
    }

    fn qr_step(&mut self, lo: usize, hi: usize, shift: C<T>) {
        for i in lo..=hi {
            self[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let a = self[(k, k)];
            let b = self[(k + 1, k)];
            let (c, s) = givens(a, b);
            for j in k..=hi {
                let x = self[(k, j)];
                let y = self[(k + 1, j)];
                self[(k, j)] = x * c + s * y;
                self[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = lo + idx;
            let last = (k + 2).min(hi);
            for i in lo..=last {
                let x = self[(i, k)];
                let y = self[(i, k + 1)];
                self[(i, k)] = x * c + y * s.conj();
                self[(i, k + 1)] = -x * s + y * c;
            }
        }
        for i in lo..=hi {
            self[(i, i)] += shift;
        }
    }
}

/// Complex Givens rotation `[[c, s], [-conj(s), c]]` with real `c`, mapping
/// `(a, b)` to `(r, 0)`.
fn givens<T: Real>(a: C<T>, b: C<T>) -> (T, C<T>) {
    let na = a.norm();
    let nb = b.norm();
    if nb == T::zero() {
        return (T::one(), czero());
    }
    if na == T::zero() {
        return (T::zero(), cone());
    }
    let nu = na.hypot(nb);
    let c = na / nu;
    let s = (a / na) * b.conj() / nu;
    (c, s)
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.n + j]
    }
}

/// Singular values of a square matrix with their right singular vectors,
/// ordered by increasing singular value.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub singular_values: Vec<T>,
    /// `vectors[k]` is the right singular vector for `singular_values[k]`.
    pub vectors: Vec<Vec<C<T>>>,
}

/// One-sided (Hestenes) Jacobi SVD. Orthogonalises the columns of `a`
/// by unitary plane rotations accumulated into `V`; small singular values
/// come out with high relative accuracy, which is what null-space
/// extraction needs.
pub fn jacobi_svd<T: Real>(a: &CMatrix<T>) -> Svd<T> {
    let n = a.dim();
    // column-major working copies
    let mut cols: Vec<Vec<C<T>>> = (0..n).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<C<T>>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { cone() } else { czero() }).collect())
        .collect();
    let eps = T::epsilon();
    let tiny = T::min_positive_value();
    let sq = |c: &[C<T>]| c.iter().map(|x| x.norm_sqr()).sum::<T>();
    let mut norms: Vec<T> = cols.iter().map(|c| sq(c)).collect();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = norms[i];
                let beta = norms[j];
                let gamma = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .fold(czero::<T>(), |acc, (x, y)| acc + x.conj() * *y);
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g <= tiny {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let ph = phase.conj();
                rotate_pair(&mut cols, i, j, c, s, ph);
                rotate_pair(&mut v, i, j, c, s, ph);
                norms[i] = sq(&cols[i]);
                norms[j] = sq(&cols[j]);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(T, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (c.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt(), j))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    Svd {
        singular_values: order.iter().map(|(s, _)| *s).collect(),
        vectors: order.iter().map(|&(_, j)| v[j].clone()).collect(),
    }
}

/// Rank-revealing null-space basis from Householder QR with column pivoting.
#[derive(Debug, Clone)]
pub struct NullBasis<T> {
    /// `|R_ii|` in pivot order; non-increasing.
    pub diagonal: Vec<T>,
    /// Orthonormal basis of the span of the `k` trailing-column null vectors.
    pub vectors: Vec<Vec<C<T>>>,
}

/// Computes `A P = Q R` and returns `k` vectors spanning the approximate
/// null space associated with the last `k` pivots. When `A` has fewer than
/// `k` small pivots the extra vectors are not null vectors; compare
/// `diagonal` against a threshold to detect that.
pub fn qrcp_null_space<T: Real>(a: &CMatrix<T>, k: usize) -> NullBasis<T> {
    let n = a.dim();
    let k = k.min(n);
    let mut cols: Vec<Vec<C<T>>> = (0..n).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut diagonal = Vec::with_capacity(n);
    let mut v = vec![czero::<T>(); n];
    for j in 0..n {
        let tail = |c: &Vec<C<T>>| c[j..].iter().map(|x| x.norm_sqr()).sum::<T>();
        let p = (j..n)
            .map(|c| (tail(&cols[c]), c))
            .fold((-T::one(), j), |best, cur| if cur.0 > best.0 { cur } else { best })
            .1;
        cols.swap(j, p);
        perm.swap(j, p);
        let norm = tail(&cols[j]).sqrt();
        diagonal.push(norm);
        if norm == T::zero() {
            continue;
        }
        let x0 = cols[j][j];
        let phase = if x0.norm() == T::zero() { cone() } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        v[j..].copy_from_slice(&cols[j][j..]);
        v[j] -= alpha;
        let vv = v[j..].iter().map(|x| x.norm_sqr()).sum::<T>();
        cols[j][j] = alpha;
        cols[j][j + 1..].fill(czero());
        if vv == T::zero() {
            continue;
        }
        for col in cols.iter_mut().skip(j + 1) {
            let dot = v[j..].iter().zip(&col[j..]).fold(czero::<T>(), |acc, (a, b)| acc + a.conj() * *b);
            let f = dot * (T::lit(2.0) / vv);
            for (x, vi) in col[j..].iter_mut().zip(&v[j..]) {
                *x -= *vi * f;
            }
        }
    }
    // null vectors y = [-R11^{-1} R12 e_t ; e_t] in pivoted coordinates
    let r = n - k;
    let mut basis: Vec<Vec<C<T>>> = Vec::with_capacity(k);
    for t in r..n {
        let mut y = vec![czero::<T>(); n];
        y[t] = cone();
        for i in (0..r).rev() {
            let mut acc = cols[t][i];
            for l in i + 1..r {
                acc += cols[l][i] * y[l];
            }
            let d = cols[i][i];
            y[i] = if d.norm() == T::zero() { czero() } else { -acc / d };
        }
        let mut x = vec![czero::<T>(); n];
        for (i, yi) in y.into_iter().enumerate() {
            x[perm[i]] = yi;
        }
        for b in &basis {
            let dot = b.iter().zip(&x).fold(czero::<T>(), |acc, (p, q)| acc + p.conj() * *q);
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= *bi * dot;
            }
        }
        let nx = x.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
        for xi in x.iter_mut() {
            *xi /= nx;
        }
        basis.push(x);
    }
    NullBasis { diagonal, vectors: basis }
}

// col_i <- c col_i - s ph col_j ; col_j <- s col_i + c ph col_j   (ph = e^{-i phi})
fn rotate_pair<T: Real>(cols: &mut [Vec<C<T>>], i: usize, j: usize, c: T, s: T, ph: C<T>) {
    let (left, right) = cols.split_at_mut(j);
    let ci = &mut left[i];
    let cj = &mut right[0];
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let yp = *y * ph;
        let nx = *x * c - yp * s;
        let ny = *x * s + yp * c;
        *x = nx;
        *y = ny;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn sorted(mut v: Vec<C<f64>>) -> Vec<C<f64>> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn determinant_small() {
        let m = CMatrix::from_fn(2, |i, j| [[c(1.0, 0.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]][i][j]);
        assert!((m.determinant() - c(-2.0, 0.0)).norm() < 1e-14);
        assert_eq!(CMatrix::<f64>::identity(5).determinant(), c(1.0, 0.0));
        assert_eq!(CMatrix::<f64>::zeros(3).determinant(), c(0.0, 0.0));
    }

    #[test]
    fn eigenvalues_of_companion() {
        // companion matrix of (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let rows = [[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let m = CMatrix::from_fn(3, |i, j| c(rows[i][j], 0.0));
        let ev = sorted(m.eigenvalues().unwrap());
        for (got, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - c(want, 0.0)).norm() < 1e-10, "{got}");
        }
    }

    #[test]
    fn eigenvalues_of_cyclic_permutation() {
        let n = 5;
        let m = CMatrix::from_fn(n, |i, j| if j == (i + 1) % n { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let ev = m.eigenvalues().unwrap();
        assert_eq!(ev.len(), n);
        for z in &ev {
            assert!((z.powu(5) - c(1.0, 0.0)).norm() < 1e-10);
        }
        let sum = ev.iter().fold(c(0.0, 0.0), |a, b| a + b);
        assert!(sum.norm() < 1e-10);
    }

    #[test]
    fn eigenvalues_f32() {
        let m = CMatrix::from_fn(2, |i, j| {
            let r = [[0.0f32, -1.0], [1.0, 0.0]];
            C::new(r[i][j], 0.0)
        });
        let ev = m.eigenvalues().unwrap();
        for z in ev {
            assert!((z.norm() - 1.0).abs() < 1e-5);
            assert!(z.re.abs() < 1e-5);
        }
    }

    #[test]
    fn qrcp_null_space_rank_two_deficient() {
        // rank 2 in dimension 4: rows are combinations of two vectors
        let u = [c(1.0, 0.0), c(2.0, -1.0), c(0.0, 1.0), c(-1.0, 0.5)];
        let w = [c(0.5, 0.5), c(0.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)];
        let m = CMatrix::from_fn(4, |i, j| u[j] * c(i as f64 + 1.0, 0.0) + w[j] * c(1.0, i as f64));
        let basis = qrcp_null_space(&m, 2);
        assert!(basis.diagonal[2] < 1e-12 && basis.diagonal[3] < 1e-12);
        assert!(basis.diagonal[1] > 1e-3);
        for v in &basis.vectors {
            let r = m.mul_vec(v);
            assert!(r.iter().all(|x| x.norm() < 1e-12));
        }
        let g = basis.vectors[0].iter().zip(&basis.vectors[1]).fold(c(0.0, 0.0), |a, (x, y)| a + x.conj() * y);
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn svd_null_space() {
        // rank-1 matrix u v^T
        let u = [c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)];
        let w = [c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 0.5)];
        let m = CMatrix::from_fn(3, |i, j| u[i] * w[j]);
        let svd = jacobi_svd(&m);
        assert!(svd.singular_values[0] < 1e-13);
        assert!(svd.singular_values[1] < 1e-13);
        assert!(svd.singular_values[2] > 1.0);
        for v in &svd.vectors[..2] {
            let r = m.mul_vec(v);
            assert!(r.iter().all(|x| x.norm() < 1e-13));
            let nv: f64 = v.iter().map(|x| x.norm_sqr()).sum();
            assert!((nv - 1.0).abs() < 1e-13);
        }
    }
}
