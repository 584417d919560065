//! Dense row-major linear algebra: Householder QR, Cholesky, least squares,
//! orthonormal null-space bases and cached row-space projectors.

use crate::error::{Error, Result};

/// Relative pivot tolerance used for every rank decision.
pub const RANK_TOL: f64 = 1e-12;

/// Dense real matrix in row-major order. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite matrix entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Input("ragged rows".into()));
        }
        DenseMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`.
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "matvec_t dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), dst);
                }
            }
        }
        out
    }

    /// `A Aᵀ`, exploiting symmetry.
    pub fn gram_rows(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    /// Submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn scaled(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Householder QR factorization `M = Q R`.
///
/// The reflectors are stored below the diagonal of `packed` (LAPACK style,
/// unit leading entry implied) and `R` occupies the upper triangle.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    packed: DenseMatrix,
    tau: Vec<f64>,
    input_norm: f64,
}

pub fn qr_householder(m: &DenseMatrix) -> Result<HouseholderQr> {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let steps = rows.min(cols);
    let mut tau = vec![0.0; steps];

    for j in 0..steps {
        let mut below = 0.0;
        for i in j + 1..rows {
            below += a[(i, j)] * a[(i, j)];
        }
        if below == 0.0 {
            // Already reduced: H = I, R keeps the diagonal entry as is.
            tau[j] = 0.0;
            continue;
        }
        let x0 = a[(j, j)];
        let norm = (x0 * x0 + below).sqrt();
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let v0 = x0 - alpha;
        // v = x - alpha e1 scaled so that v[0] = 1.
        for i in j + 1..rows {
            a[(i, j)] /= v0;
        }
        let t = -v0 / alpha;
        tau[j] = t;
        a[(j, j)] = alpha;

        for c in j + 1..cols {
            let mut s = a[(j, c)];
            for i in j + 1..rows {
                s += a[(i, j)] * a[(i, c)];
            }
            s *= t;
            a[(j, c)] -= s;
            for i in j + 1..rows {
                let vij = a[(i, j)];
                a[(i, c)] -= s * vij;
            }
        }
    }

    Ok(HouseholderQr {
        input_norm: m.frobenius_norm(),
        packed: a,
        tau,
    })
}

impl HouseholderQr {
    pub fn rows(&self) -> usize {
        self.packed.rows
    }

    pub fn cols(&self) -> usize {
        self.packed.cols
    }

    /// Upper-trapezoidal factor, `min(rows, cols) x cols`.
    pub fn r(&self) -> DenseMatrix {
        let k = self.rows().min(self.cols());
        let mut r = DenseMatrix::zeros(k, self.cols());
        for i in 0..k {
            for j in i..self.cols() {
                r[(i, j)] = self.packed[(i, j)];
            }
        }
        r
    }

    /// Overwrite `v` with `Qᵀ v`.
    pub fn apply_qt(&self, v: &mut [f64]) {
        assert_eq!(v.len(), self.rows());
        for j in 0..self.tau.len() {
            self.reflect(j, v);
        }
    }

    /// Overwrite `v` with `Q v`.
    pub fn apply_q(&self, v: &mut [f64]) {
        assert_eq!(v.len(), self.rows());
        for j in (0..self.tau.len()).rev() {
            self.reflect(j, v);
        }
    }

    fn reflect(&self, j: usize, v: &mut [f64]) {
        let t = self.tau[j];
        if t == 0.0 {
            return;
        }
        let rows = self.rows();
        let mut s = v[j];
        for i in j + 1..rows {
            s += self.packed[(i, j)] * v[i];
        }
        s *= t;
        v[j] -= s;
        for i in j + 1..rows {
            v[i] -= s * self.packed[(i, j)];
        }
    }

    /// Explicit orthogonal factor, `rows x rows`.
    pub fn q_full(&self) -> DenseMatrix {
        let n = self.rows();
        let mut q = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[c] = 1.0;
            self.apply_q(&mut e);
            for (r, &val) in e.iter().enumerate() {
                q[(r, c)] = val;
            }
        }
        q
    }

    /// Numerical rank decision on the diagonal of `R`, relative to `‖M‖_F`.
    pub fn is_full_rank(&self) -> bool {
        let k = self.rows().min(self.cols());
        let threshold = RANK_TOL * self.input_norm.max(f64::MIN_POSITIVE);
        (0..k).all(|i| self.packed[(i, i)].abs() > threshold)
    }
}

/// Lower-triangular Cholesky factor `L` with `S = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

pub fn cholesky_spd(s: &DenseMatrix) -> Result<Cholesky> {
    let n = s.rows;
    if s.cols != n {
        return Err(Error::Input("cholesky needs a square matrix".into()));
    }
    let scale = s.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Input(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let floor = RANK_TOL * s.trace() / n.max(1) as f64;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) || d <= 0.0 {
            return Err(Error::RankDeficient(format!(
                "non-positive Cholesky pivot {d:e} at index {j}"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(Cholesky { l })
}

impl Cholesky {
    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    /// Solve `S x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s = dot(&row[..i], &x[..i]);
            x[i] = (x[i] - s) / row[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }
}

/// Minimizer of `‖B x − c‖₂` for a tall full-column-rank `B`.
pub fn least_squares(b: &DenseMatrix, c: &[f64]) -> Result<Vec<f64>> {
    if b.rows < b.cols {
        return Err(Error::Precondition(format!(
            "least squares needs rows >= cols, got {}x{}",
            b.rows, b.cols
        )));
    }
    if c.len() != b.rows {
        return Err(Error::Input("right-hand side length mismatch".into()));
    }
    let qr = qr_householder(b)?;
    if !qr.is_full_rank() {
        return Err(Error::RankDeficient("least-squares matrix".into()));
    }
    let mut rhs = c.to_vec();
    qr.apply_qt(&mut rhs);
    let n = b.cols;
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= qr.packed[(i, j)] * x[j];
        }
        x[i] = s / qr.packed[(i, i)];
    }
    Ok(x)
}

/// Orthonormal basis of `null(A)` for a full-row-rank `A` with `m < n`.
#[derive(Debug, Clone)]
pub struct NullBasis {
    pub m: usize,
    pub n: usize,
    /// `n x (n − m)`, orthonormal columns.
    pub basis: DenseMatrix,
}

impl NullBasis {
    pub fn dim(&self) -> usize {
        self.basis.cols
    }

    /// `N v`.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        self.basis.matvec(v)
    }

    /// `Nᵀ w`.
    pub fn coords(&self, w: &[f64]) -> Vec<f64> {
        self.basis.matvec_t(w)
    }

    /// Orthogonal projection `N Nᵀ u` onto the null space.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        self.lift(&self.coords(u))
    }
}

pub fn nullspace_basis(a: &DenseMatrix) -> Result<NullBasis> {
    let (m, n) = (a.rows, a.cols);
    if m >= n {
        return Err(Error::Precondition(format!(
            "null-space basis needs m < n, got {m}x{n}"
        )));
    }
    let qr = qr_householder(&a.transpose())?;
    if !qr.is_full_rank() {
        return Err(Error::RankDeficient("matrix does not have full row rank".into()));
    }
    let q = qr.q_full();
    let cols: Vec<usize> = (m..n).collect();
    Ok(NullBasis {
        m,
        n,
        basis: q.select_columns(&cols),
    })
}

/// Orthogonal projector onto `range(Aᵀ)`, `u ↦ Aᵀ (A Aᵀ)⁻¹ A u`, backed by a
/// cached Cholesky factor of `A Aᵀ`.
#[derive(Debug, Clone)]
pub struct RowProjector {
    a: DenseMatrix,
    chol: Option<Cholesky>,
}

impl RowProjector {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if a.rows > a.cols {
            return Err(Error::Precondition(format!(
                "row-space projector needs m <= n, got {}x{}",
                a.rows, a.cols
            )));
        }
        let chol = if a.rows == 0 {
            None
        } else {
            Some(cholesky_spd(&a.gram_rows())?)
        };
        Ok(RowProjector {
            a: a.clone(),
            chol,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    /// `ν = (A Aᵀ)⁻¹ A u`, so that the projection equals `Aᵀ ν`.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        match &self.chol {
            Some(ch) => ch.solve(&self.a.matvec(u)),
            None => Vec::new(),
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        match &self.chol {
            Some(_) => self.a.matvec_t(&self.coefficients(u)),
            None => vec![0.0; u.len()],
        }
    }

    /// Complementary projection `u − P u` onto `null(A)`.
    pub fn null_apply(&self, u: &[f64]) -> Vec<f64> {
        let p = self.apply(u);
        u.iter().zip(&p).map(|(x, y)| x - y).collect()
    }

    /// Minimum-norm solution `Aᵀ (A Aᵀ)⁻¹ y` of `A x = y`.
    pub fn least_norm(&self, y: &[f64]) -> Vec<f64> {
        match &self.chol {
            Some(ch) => self.a.matvec_t(&ch.solve(y)),
            None => vec![0.0; self.a.cols],
        }
    }

    /// Dense `n x n` matrix of the null-space projector `I − Aᵀ(AAᵀ)⁻¹A`.
    pub fn dense_null_projector(&self) -> DenseMatrix {
        let n = self.a.cols;
        let mut p = DenseMatrix::identity(n);
        if let Some(ch) = &self.chol {
            // W = L⁻¹ A, then P_row = Wᵀ W.
            let m = self.a.rows;
            let l = ch.factor();
            let mut w = self.a.clone();
            for i in 0..m {
                for k in 0..i {
                    let lik = l[(i, k)];
                    if lik != 0.0 {
                        for j in 0..n {
                            let v = w[(k, j)];
                            w[(i, j)] -= lik * v;
                        }
                    }
                }
                let d = l[(i, i)];
                for j in 0..n {
                    w[(i, j)] /= d;
                }
            }
            for k in 0..m {
                let row = w.row(k).to_vec();
                for i in 0..n {
                    let ri = row[i];
                    if ri != 0.0 {
                        let dst = &mut p.data[i * n..(i + 1) * n];
                        axpy(-ri, &row, dst);
                    }
                }
            }
        }
        p
    }
}
