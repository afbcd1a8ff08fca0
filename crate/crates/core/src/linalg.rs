//! Dense complex matrices and a Hermitian eigensolver.
//!
//! The eigensolver reduces a Hermitian matrix to real symmetric tridiagonal
//! form with Householder reflections (a diagonal phase turns the complex
//! off-diagonal real), then diagonalises the tridiagonal matrix with the
//! implicit-shift QL algorithm. Products use the `matrixmultiply` kernels.

use crate::error::{Error, Result};
use crate::Complex;
use std::ops::{Index, IndexMut};

const ZERO: Complex = Complex { re: 0.0, im: 0.0 };
const ONE: Complex = Complex { re: 1.0, im: 0.0 };

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from nested rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        Self::from_fn(rows.len(), rows.first().map_or(0, |r| r.len()), |i, j| Complex::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// Sub-block `[r0, r0+nr) × [c0, c0+nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    /// `self · other`.
    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows, other.cols);
        gemm(self, Layout::Normal, other, Layout::Normal, &mut out);
        out
    }

    /// `self · other*`.
    pub fn matmul_adjoint(&self, other: &CMatrix) -> CMatrix {
        let conj = other.conj();
        let mut out = CMatrix::zeros(self.rows, other.rows);
        gemm(self, Layout::Normal, &conj, Layout::Transposed, &mut out);
        out
    }

    /// `self* · self`.
    pub fn gram(&self) -> CMatrix {
        self.adjoint().matmul(self)
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `max |a_ij − b_ij|`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖A − A*‖_max`.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `‖U*U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        self.gram().max_abs_diff(&CMatrix::identity(self.cols))
    }

    /// Scales column `j` by `s[j]`.
    pub fn scale_columns(&mut self, s: &[Complex]) {
        for i in 0..self.rows {
            for (z, f) in self.row_mut(i).iter_mut().zip(s) {
                *z *= f;
            }
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Clone, Copy)]
enum Layout {
    Normal,
    Transposed,
}

fn gemm(a: &CMatrix, la: Layout, b: &CMatrix, lb: Layout, c: &mut CMatrix) {
    let (m, k, rsa, csa) = match la {
        Layout::Normal => (a.rows, a.cols, a.cols as isize, 1),
        Layout::Transposed => (a.cols, a.rows, 1, a.cols as isize),
    };
    let (kb, n, rsb, csb) = match lb {
        Layout::Normal => (b.rows, b.cols, b.cols as isize, 1),
        Layout::Transposed => (b.cols, b.rows, 1, b.cols as isize),
    };
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!((c.rows, c.cols), (m, n), "output shape mismatch");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.data.fill(ZERO);
        return;
    }
    // SAFETY: `Complex<f64>` is `repr(C)` with fields (re, im), identical in
    // layout to `[f64; 2]`; the strides describe the buffers exactly and the
    // output does not alias the inputs (distinct borrows).
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.data.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b.data.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            [0.0, 0.0],
            c.data.as_mut_ptr() as *mut [f64; 2],
            c.cols as isize,
            1,
        );
    }
}

/// A Hermitian matrix (validated on construction).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Entrywise tolerance of the symmetry check.
    pub const TOL: f64 = 1e-14;

    pub fn new(m: CMatrix) -> Result<Self> {
        let defect = m.hermitian_defect();
        let scale = m.max_abs().max(1.0);
        if defect > Self::TOL * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix already known to be Hermitian (symmetrises it exactly).
    pub(crate) fn from_trusted(mut m: CMatrix) -> Self {
        let n = m.rows;
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in i + 1..n {
                m[(j, i)] = m[(i, j)].conj();
            }
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// A unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    /// Checks `‖U*U − I‖_max ≤ 1e−10·d`.
    pub fn new(m: CMatrix) -> Result<Self> {
        let d = m.rows;
        if m.cols != d {
            return Err(Error::InvalidParameter("unitary matrix must be square".into()));
        }
        let defect = m.unitarity_defect();
        if defect > 1e-10 * d as f64 {
            return Err(Error::InvalidParameter(format!("unitarity defect {defect}")));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn identity(d: usize) -> Self {
        Self(CMatrix::identity(d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

/// Householder reduction `A = Q T Q*` with `T` real symmetric tridiagonal
/// after a diagonal phase change.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Reflectors `(k, v, β)` acting on indices `k+1..n` as `I − β v v*`.
    reflectors: Vec<(usize, Vec<Complex>, f64)>,
    /// Diagonal phases `D` with `T_complex = D T D*`.
    phases: Vec<Complex>,
}

fn tridiagonalize(a: &CMatrix, keep: bool) -> Tridiagonal {
    let n = a.rows;
    let mut m = a.clone();
    let mut reflectors = Vec::new();
    let mut sub = vec![ZERO; n.saturating_sub(1)];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(1) {
        let len = n - k - 1;
        let x: Vec<Complex> = (k + 1..n).map(|i| m[(i, k)]).collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if tail == 0.0 {
            sub[k] = x[0];
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * norm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let beta = 2.0 / vnorm2;
        // p = β A22 v, w = p − (β/2)(v* p) v, A22 ← A22 − v w* − w v*
        for (ii, pi) in p[..len].iter_mut().enumerate() {
            let row = &m.row(k + 1 + ii)[k + 1..];
            let mut acc = ZERO;
            for (r, vj) in row.iter().zip(&v) {
                acc += r * vj;
            }
            *pi = acc * beta;
        }
        let vp: Complex = v.iter().zip(&p[..len]).map(|(vi, pi)| vi.conj() * pi).sum();
        let kcoef = vp * (0.5 * beta);
        let w: Vec<Complex> = p[..len].iter().zip(&v).map(|(pi, vi)| pi - kcoef * vi).collect();
        for ii in 0..len {
            let (vi, wi) = (v[ii], w[ii]);
            let row = &mut m.row_mut(k + 1 + ii)[k + 1..];
            for ((r, vj), wj) in row.iter_mut().zip(&v).zip(&w) {
                *r -= vi * wj.conj() + wi * vj.conj();
            }
        }
        sub[k] = alpha;
        if keep {
            reflectors.push((k, v, beta));
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut phases = vec![ONE; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(1) {
        let r = sub[k].norm();
        off[k] = r;
        phases[k + 1] = if r > 0.0 { phases[k] * sub[k] / r } else { phases[k] };
    }
    Tridiagonal { diag, off, reflectors, phases }
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix. `zt`, if given,
/// holds eigenvector *rows* (the transpose of the usual column layout) and is
/// rotated alongside. Total iterations are capped at `30·n`.
fn tridiagonal_ql(d: &mut [f64], off: &[f64], mut zt: Option<&mut [Vec<f64>]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let budget = 30 * n.max(1);
    let mut spent = 0;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            spent += 1;
            if spent > budget {
                return Err(Error::NoConvergence { iterations: spent, residual: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut(i + 1);
                    let (zi, zi1) = (&mut lo[i], &mut hi[0]);
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues in ascending order.
pub fn hermitian_eigenvalues(a: &HermitianMatrix) -> Result<Vec<f64>> {
    let t = tridiagonalize(a.matrix(), false);
    let mut d = t.diag;
    tridiagonal_ql(&mut d, &t.off, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigen-decomposition `A = V diag(λ) V*`, eigenvalues ascending and the
/// columns of `V` the matching orthonormal eigenvectors.
pub fn hermitian_eigen(a: &HermitianMatrix) -> Result<(Vec<f64>, UnitaryMatrix)> {
    let n = a.dim();
    let t = tridiagonalize(a.matrix(), true);
    let mut d = t.diag;
    let mut zt: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    tridiagonal_ql(&mut d, &t.off, Some(&mut zt))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    // V = Q D Z: row k of D Z is phase_k · (k-th entry of each eigenvector)
    let mut v = CMatrix::from_fn(n, n, |k, j| t.phases[k] * zt[order[j]][k]);
    for (k, u, beta) in t.reflectors.iter().rev() {
        let mut proj = vec![ZERO; n];
        for (ii, ui) in u.iter().enumerate() {
            let cu = ui.conj();
            for (acc, x) in proj.iter_mut().zip(v.row(k + 1 + ii)) {
                *acc += cu * x;
            }
        }
        for (ii, ui) in u.iter().enumerate() {
            let coef = ui * *beta;
            for (x, pj) in v.row_mut(k + 1 + ii).iter_mut().zip(&proj) {
                *x -= coef * pj;
            }
        }
    }
    let values = order.iter().map(|&i| d[i]).collect();
    Ok((values, UnitaryMatrix::from_trusted(v)))
}

/// `exp(i A)` for Hermitian `A`, via the eigen-decomposition.
pub fn expi_hermitian(a: &HermitianMatrix) -> Result<UnitaryMatrix> {
    let (values, v) = hermitian_eigen(a)?;
    let v = v.into_matrix();
    let mut scaled = v.clone();
    let phases: Vec<Complex> = values.iter().map(|&l| Complex::new(0.0, l).exp()).collect();
    scaled.scale_columns(&phases);
    Ok(UnitaryMatrix::from_trusted(scaled.matmul_adjoint(&v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let a = HermitianMatrix::new(CMatrix::from_real_rows(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]))
            .unwrap();
        assert_eq!(hermitian_eigenvalues(&a).unwrap(), vec![1.0, 2.0, 3.0]);
        let b = HermitianMatrix::new(CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let (l, v) = hermitian_eigen(&b).unwrap();
        assert!((l[0] + 1.0).abs() < 1e-15 && (l[1] - 1.0).abs() < 1e-15);
        assert!(v.matrix().unitarity_defect() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[2.0, 0.0]]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn complex_two_by_two() {
        // [[1, i], [−i, 1]] has eigenvalues 0 and 2
        let m = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => Complex::new(0.0, 1.0),
            (1, 0) => Complex::new(0.0, -1.0),
            _ => ONE,
        });
        let (l, v) = hermitian_eigen(&HermitianMatrix::new(m.clone()).unwrap()).unwrap();
        assert!(l[0].abs() < 1e-15 && (l[1] - 2.0).abs() < 1e-15);
        let mut vl = v.matrix().clone();
        vl.scale_columns(&l.iter().map(|&x| Complex::new(x, 0.0)).collect::<Vec<_>>());
        assert!(m.matmul(v.matrix()).max_abs_diff(&vl) < 1e-14);
    }

    #[test]
    fn products() {
        let a = CMatrix::from_fn(3, 2, |i, j| Complex::new(i as f64, j as f64 + 1.0));
        let b = CMatrix::from_fn(2, 4, |i, j| Complex::new((i * j) as f64, 1.0));
        let c = a.matmul(&b);
        for i in 0..3 {
            for j in 0..4 {
                let direct: Complex = (0..2).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert!((c[(i, j)] - direct).norm() < 1e-14);
            }
        }
        let d = a.matmul_adjoint(&a);
        assert!(d.max_abs_diff(&a.matmul(&a.adjoint())) < 1e-14);
    }
}
