//! Small dense linear algebra: LU solves and eigenvalue extraction via
//! Hessenberg reduction followed by shifted QR iterations.
//!
//! Matrices here are a few hundred rows at most (Markov chains over EA
//! states), so simple dense routines are sufficient.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense square matrix, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }
}

/// LU factorization with partial pivoting.
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    sign: f64,
}

pub fn lu_factor(m: &Mat) -> Result<Lu> {
    let n = m.dim();
    let mut lu = m.a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let mut p = k;
        let mut max = lu[k * n + k].abs();
        for i in k + 1..n {
            let v = lu[i * n + k].abs();
            if v > max {
                max = v;
                p = i;
            }
        }
        if max < 1e-300 {
            return Err(Error::Numerical(format!(
                "singular system at pivot column {k}"
            )));
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            for j in k + 1..n {
                lu[i * n + j] -= f * lu[k * n + j];
            }
        }
    }
    Ok(Lu { n, lu, piv, sign })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    pub fn determinant(&self) -> f64 {
        let mut det = self.sign;
        for i in 0..self.n {
            det *= self.lu[i * self.n + i];
        }
        det
    }
}

/// All eigenvalues of a real square matrix to near machine precision.
///
/// Reduces to upper Hessenberg form by stabilized elimination, then runs
/// double-shift QR sweeps with deflation. Errors if any eigenvalue fails to
/// deflate within the sweep bound.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    let n = m.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Complex64::new(m[(0, 0)], 0.0)]);
    }
    // 1-based scratch copy: index arithmetic below follows the classic
    // Hessenberg-QR formulation directly.
    let mut a = vec![0.0f64; (n + 1) * (n + 1)];
    for i in 0..n {
        for j in 0..n {
            a[(i + 1) * (n + 1) + (j + 1)] = m[(i, j)];
        }
    }
    elmhes(&mut a, n);
    // clear elimination multipliers below the subdiagonal
    for i in 1..=n {
        for j in 1..=n {
            if i > j + 1 {
                a[i * (n + 1) + j] = 0.0;
            }
        }
    }
    let mut eigs = hqr(&mut a, n)?;
    eigs.sort_by(|x, y| {
        y.norm()
            .partial_cmp(&x.norm())
            .unwrap()
            .then(y.re.partial_cmp(&x.re).unwrap())
            .then(y.im.partial_cmp(&x.im).unwrap())
    });
    Ok(eigs)
}

/// Reduce to upper Hessenberg form by Gaussian elimination with pivoting.
/// Operates on a 1-based (n+1)x(n+1) buffer.
fn elmhes(a: &mut [f64], n: usize) {
    let w = n + 1;
    for m in 2..n {
        let mut x = 0.0f64;
        let mut i = m;
        for j in m..=n {
            if a[j * w + m - 1].abs() > x.abs() {
                x = a[j * w + m - 1];
                i = j;
            }
        }
        if i != m {
            for j in m - 1..=n {
                a.swap(i * w + j, m * w + j);
            }
            for j in 1..=n {
                a.swap(j * w + i, j * w + m);
            }
        }
        if x != 0.0 {
            for i in m + 1..=n {
                let mut y = a[i * w + m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i * w + m - 1] = y;
                    for j in m..=n {
                        a[i * w + j] -= y * a[m * w + j];
                    }
                    for j in 1..=n {
                        a[j * w + m] += y * a[j * w + i];
                    }
                }
            }
        }
    }
}

fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Double-shift QR on an upper Hessenberg matrix in a 1-based buffer.
fn hqr(a: &mut [f64], n: usize) -> Result<Vec<Complex64>> {
    let w = n + 1;
    let eps = f64::EPSILON;
    let mut eigs = vec![Complex64::new(0.0, 0.0); n];
    let mut anorm = 0.0f64;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i * w + j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0f64;
    while nn >= 1 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = 1;
            for ll in (2..=nn).rev() {
                let mut s = a[(ll - 1) * w + ll - 1].abs() + a[ll * w + ll].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[ll * w + ll - 1].abs() <= eps * s {
                    a[ll * w + ll - 1] = 0.0;
                    l = ll;
                    break;
                }
            }
            let mut x = a[nn * w + nn];
            if l == nn {
                eigs[nn - 1] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let y = a[(nn - 1) * w + nn - 1];
            let mut ww = a[nn * w + nn - 1] * a[(nn - 1) * w + nn];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + ww;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign_of(z, p);
                    let r1 = x + z;
                    let r2 = if z != 0.0 { x - ww / z } else { x + z };
                    eigs[nn - 2] = Complex64::new(r1, 0.0);
                    eigs[nn - 1] = Complex64::new(r2, 0.0);
                } else {
                    eigs[nn - 2] = Complex64::new(x + p, z);
                    eigs[nn - 1] = Complex64::new(x + p, -z);
                }
                nn -= 2;
                break;
            }
            if its == 30 {
                return Err(Error::Numerical(format!(
                    "QR iteration failed to deflate eigenvalue {nn} of {n} after 30 sweeps"
                )));
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a[i * w + i] -= x;
                }
                let s = a[nn * w + nn - 1].abs() + a[(nn - 1) * w + nn - 2].abs();
                x = 0.75 * s;
                ww = -0.4375 * s * s;
            }
            let y = if its == 10 || its == 20 { x } else { y };
            its += 1;
            // form shift and look for two consecutive small subdiagonals
            let mut m = l;
            let mut p = 0.0f64;
            let mut q = 0.0f64;
            let mut r = 0.0f64;
            for mm in (l..=nn - 2).rev() {
                let z = a[mm * w + mm];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - ww) / a[(mm + 1) * w + mm] + a[mm * w + mm + 1];
                q = a[(mm + 1) * w + mm + 1] - z - rr - ss;
                r = a[(mm + 2) * w + mm + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                m = mm;
                if mm == l {
                    break;
                }
                let u = a[mm * w + mm - 1].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (a[(mm - 1) * w + mm - 1].abs() + z.abs() + a[(mm + 1) * w + mm + 1].abs());
                if u <= eps * v {
                    break;
                }
            }
            for i in m + 2..=nn {
                a[i * w + i - 2] = 0.0;
                if i != m + 2 {
                    a[i * w + i - 3] = 0.0;
                }
            }
            // double QR step on rows l..nn, columns m..nn
            for k in m..=nn - 1 {
                if k != m {
                    p = a[k * w + k - 1];
                    q = a[(k + 1) * w + k - 1];
                    r = if k != nn - 1 { a[(k + 2) * w + k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[k * w + k - 1] = -a[k * w + k - 1];
                    }
                } else {
                    a[k * w + k - 1] = -s * x;
                }
                p += s;
                x = p / s;
                let y2 = q / s;
                let z2 = r / s;
                q /= p;
                r /= p;
                for j in k..=nn {
                    let mut pp = a[k * w + j] + q * a[(k + 1) * w + j];
                    if k != nn - 1 {
                        pp += r * a[(k + 2) * w + j];
                        a[(k + 2) * w + j] -= pp * z2;
                    }
                    a[(k + 1) * w + j] -= pp * y2;
                    a[k * w + j] -= pp * x;
                }
                let mmin = nn.min(k + 3);
                for i in l..=mmin {
                    let mut pp = x * a[i * w + k] + y2 * a[i * w + k + 1];
                    if k != nn - 1 {
                        pp += z2 * a[i * w + k + 2];
                        a[i * w + k + 2] -= pp * r;
                    }
                    a[i * w + k + 1] -= pp * q;
                    a[i * w + k] -= pp;
                }
            }
        }
    }
    Ok(eigs)
}
