//! Small dense linear algebra: a row-major matrix, an LU solver and a real
//! nonsymmetric eigenvalue routine.
//!
//! The matrices seen here are at most 10x10 (transition matrices) or 5x5
//! (Jacobians), so nothing is blocked or vectorised.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { rows: n, cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Row vector times matrix, `v M`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot vanishes relative to the matrix scale.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.data.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let tiny = scale * f64::EPSILON * n as f64;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .expect("non-empty range");
        if m[(pivot, col)].abs() <= tiny {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.data.swap(pivot * n + j, col * n + j);
            }
            x.swap(pivot, col);
        }
        for i in col + 1..n {
            let factor = m[(i, col)] / m[(col, col)];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(i, j)] -= factor * v;
            }
            x[i] -= factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| m[(i, j)] * x[j]).sum();
        x[i] = (x[i] - tail) / m[(i, i)];
    }
    Some(x)
}

/// Reduces a square matrix to upper Hessenberg form by Householder
/// similarity transforms. Entries below the subdiagonal are zeroed.
pub fn hessenberg(a: &Matrix) -> Matrix {
    let n = a.rows;
    assert_eq!(a.cols, n);
    let mut h = a.clone();
    if n < 3 {
        return h;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let f = (m..=high).rev().map(|i| ort[i] * h[(i, j)]).sum::<f64>() / hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let f = (m..=high).rev().map(|j| ort[j] * h[(i, j)]).sum::<f64>() / hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }
    for i in 2..n {
        for j in 0..i - 1 {
            h[(i, j)] = 0.0;
        }
    }
    h
}

const MAX_QR_ITERATIONS: usize = 60;

/// Eigenvalues of a real square matrix: Hessenberg reduction followed by
/// Francis double-shift QR. Complex eigenvalues come out as conjugate pairs.
/// The order is unspecified.
// The iteration works on 1-based index ranges over several arrays at once.
#[allow(clippy::needless_range_loop)]
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    let n = a.rows;
    assert_eq!(a.cols, n, "eigenvalues need a square matrix");
    if n == 0 {
        return Ok(Vec::new());
    }
    let h = hessenberg(a);

    // The shifted QR sweep is written with 1-based indices; row and column 0
    // of `q` are unused.
    let mut q = vec![vec![0.0_f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            q[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += q[i][j].abs();
        }
    }

    let mut nn = n as isize;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // Look for a single small subdiagonal element.
            let mut l = nu;
            while l >= 2 {
                let mut s = q[l - 1][l - 1].abs() + q[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if q[l][l - 1].abs() + s == s {
                    q[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = q[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
            } else {
                let mut y = q[nu - 1][nu - 1];
                let mut w = q[nu][nu - 1] * q[nu - 1][nu];
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let qq = p * p + w;
                    let mut z = qq.abs().sqrt();
                    x += t;
                    if qq >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != 0.0 {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = 0.0;
                        wi[nu] = 0.0;
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_QR_ITERATIONS {
                        return Err(Error::EigenNoConvergence(n));
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // Exceptional shift.
                        t += x;
                        for i in 1..=nu {
                            q[i][i] -= x;
                        }
                        let s = q[nu][nu - 1].abs() + q[nu - 1][nu - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;

                    // Look for two consecutive small subdiagonal elements.
                    let mut m = nu - 2;
                    let (mut p, mut qv, mut r);
                    loop {
                        let z = q[m][m];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / q[m + 1][m] + q[m][m + 1];
                        qv = q[m + 1][m + 1] - z - rr - ss;
                        r = q[m + 2][m + 1];
                        let s = p.abs() + qv.abs() + r.abs();
                        p /= s;
                        qv /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = q[m][m - 1].abs() * (qv.abs() + r.abs());
                        let v = p.abs() * (q[m - 1][m - 1].abs() + z.abs() + q[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nu {
                        q[i][i - 2] = 0.0;
                        if i != m + 2 {
                            q[i][i - 3] = 0.0;
                        }
                    }
                    // Double QR step on rows l..nn and columns m..nn.
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = q[k][k - 1];
                            qv = q[k + 1][k - 1];
                            r = if k != nu - 1 { q[k + 2][k - 1] } else { 0.0 };
                            x = p.abs() + qv.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                qv /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + qv * qv + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    q[k][k - 1] = -q[k][k - 1];
                                }
                            } else {
                                q[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = qv / s;
                            let z = r / s;
                            qv /= p;
                            r /= p;
                            for j in k..=nu {
                                let mut pp = q[k][j] + qv * q[k + 1][j];
                                if k != nu - 1 {
                                    pp += r * q[k + 2][j];
                                    q[k + 2][j] -= pp * z;
                                }
                                q[k + 1][j] -= pp * y;
                                q[k][j] -= pp * x;
                            }
                            let mmin = nu.min(k + 3);
                            for i in l..=mmin {
                                let mut pp = x * q[i][k] + y * q[i][k + 1];
                                if k != nu - 1 {
                                    pp += z * q[i][k + 2];
                                    q[i][k + 2] -= pp * r;
                                }
                                q[i][k + 1] -= pp * qv;
                                q[i][k] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 1 || l as isize >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Smallest achievable maximum pairwise distance between two equally sized
/// multisets of complex numbers, minimised over all pairings.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets differ in size");
    fn go(a: &[Complex64], b: &[Complex64], used: &mut Vec<bool>, i: usize, worst: f64, best: &mut f64) {
        if worst >= *best {
            return;
        }
        if i == a.len() {
            *best = worst;
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(a, b, used, i + 1, worst.max((a[i] - b[j]).norm()), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
    if a.is_empty() {
        0.0
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(solve(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn solve_detects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn hessenberg_shape() {
        let a = Matrix::from_rows(&[
            vec![4.0, 1.0, -2.0, 2.0],
            vec![1.0, 2.0, 0.0, 1.0],
            vec![-2.0, 0.0, 3.0, -2.0],
            vec![2.0, 1.0, -2.0, -1.0],
        ]);
        let h = hessenberg(&a);
        for i in 2..4 {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], 0.0);
            }
        }
        let trace = |m: &Matrix| (0..4).map(|i| m[(i, i)]).sum::<f64>();
        assert!((trace(&a) - trace(&h)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_and_triangular() {
        let a = Matrix::from_rows(&[vec![3.0, 1.0, 4.0], vec![0.0, -2.0, 5.0], vec![0.0, 0.0, 0.5]]);
        let ev = sorted(eigenvalues(&a).unwrap());
        let want = [-2.0, 0.5, 3.0];
        for (e, w) in ev.iter().zip(want) {
            assert!((e.re - w).abs() < 1e-12 && e.im.abs() < 1e-12, "{e} vs {w}");
        }
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let a = Matrix::from_rows(&[vec![0.0, -2.0], vec![2.0, 0.0]]);
        let ev = sorted(eigenvalues(&a).unwrap());
        assert!(ev[0].re.abs() < 1e-15 && (ev[0].im + 2.0).abs() < 1e-14);
        assert!(ev[1].re.abs() < 1e-15 && (ev[1].im - 2.0).abs() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 has roots 1, 2, 3, 4.
        let a = Matrix::from_rows(&[
            vec![10.0, -35.0, 50.0, -24.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        let ev = sorted(eigenvalues(&a).unwrap());
        for (e, w) in ev.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((e.re - w).abs() < 1e-9 && e.im.abs() < 1e-9, "{e}");
        }
    }

    #[test]
    fn complex_pair_in_five_by_five() {
        // Block diagonal: rotation-scaling block plus three reals, then a
        // similarity transform to hide the structure.
        let d = Matrix::from_rows(&[
            vec![-0.5, 1.5, 0.0, 0.0, 0.0],
            vec![-1.5, -0.5, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 2.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, -3.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 0.25],
        ]);
        let mut s = Matrix::identity(5);
        for i in 0..5 {
            for j in 0..5 {
                if i < j {
                    s[(i, j)] = 0.3 * (i + j) as f64;
                }
            }
        }
        // S is unit upper triangular; its inverse is computed column-wise.
        let mut s_inv = Matrix::zeros(5, 5);
        for j in 0..5 {
            let mut e = vec![0.0; 5];
            e[j] = 1.0;
            let col = solve(&s, &e).unwrap();
            for i in 0..5 {
                s_inv[(i, j)] = col[i];
            }
        }
        let mul = |a: &Matrix, b: &Matrix| {
            let mut c = Matrix::zeros(5, 5);
            for i in 0..5 {
                for j in 0..5 {
                    c[(i, j)] = (0..5).map(|k| a[(i, k)] * b[(k, j)]).sum();
                }
            }
            c
        };
        let a = mul(&mul(&s, &d), &s_inv);
        let ev = eigenvalues(&a).unwrap();
        let want = vec![
            Complex64::new(-0.5, 1.5),
            Complex64::new(-0.5, -1.5),
            Complex64::new(2.0, 0.0),
            Complex64::new(-3.0, 0.0),
            Complex64::new(0.25, 0.0),
        ];
        assert!(multiset_distance(&ev, &want) < 1e-10);
    }

    #[test]
    fn zero_matrix() {
        let ev = eigenvalues(&Matrix::zeros(4, 4)).unwrap();
        assert!(ev.iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn multiset_distance_finds_best_pairing() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        let b = [Complex64::new(2.0, 1e-9), Complex64::new(1.0, 0.0)];
        assert!(multiset_distance(&a, &b) <= 1e-9);
    }
}
