//! Dense real and complex matrix kernel.
//!
//! Everything here is sized for desk-scale problems (n up to roughly 100):
//! row-major storage, partial/complete pivoting LU, Padé scaling-and-squaring
//! for the exponential, and Hessenberg + Francis double-shift QR for the
//! eigenvalues of nonsymmetric matrices.

use std::fmt;
use std::ops::{Add, Div, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dimension for which the adjugate is assembled from explicit cofactors.
pub const COFACTOR_LIMIT: usize = 10;

/// Default cap on Francis QR sweeps per eigenvalue.
pub const DEFAULT_QR_ITERATIONS: usize = 60;

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// `m · x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `x · m` for a row vector `x`.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Dimension(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn require_square(&self, what: &str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::Dimension(format!(
                "{what} needs a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    /// Copy with row `skip_row` and column `skip_col` removed.
    fn minor(&self, skip_row: usize, skip_col: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for i in (0..self.rows).filter(|&i| i != skip_row) {
            for j in (0..self.cols).filter(|&j| j != skip_col) {
                out.push(self[(i, j)]);
            }
        }
        out
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

/// Dense row-major complex square matrix, used for characteristic-function
/// evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn determinant(&self) -> Complex64 {
        let mut a = self.data.clone();
        lu_factor(self.n, &mut a).determinant(self.n, &a)
    }

    /// `tr(self⁻¹ · rhs)`, or `None` when `self` is numerically singular.
    pub fn trace_of_solve(&self, rhs: &ComplexMatrix) -> Option<Complex64> {
        let n = self.n;
        let mut a = self.data.clone();
        let lu = lu_factor(n, &mut a);
        if lu.singular {
            return None;
        }
        let mut trace = Complex64::new(0.0, 0.0);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = rhs.data[i * n + j];
            }
            lu.solve_in_place(n, &a, &mut col);
            trace += col[j];
        }
        Some(trace)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

trait Field:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn one() -> Self;
    fn modulus(self) -> f64;
}

impl Field for f64 {
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Field for Complex64 {
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

struct LuFactors {
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

/// In-place LU with partial pivoting: `P·A = L·U`, unit lower `L` stored
/// below the diagonal.
fn lu_factor<T: Field>(n: usize, a: &mut [T]) -> LuFactors {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut singular = false;
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, a[i * n + k].modulus()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax == 0.0 {
            singular = true;
            continue;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let factor = a[i * n + k] / pivot;
            a[i * n + k] = factor;
            for j in k + 1..n {
                let ukj = a[k * n + j];
                a[i * n + j] = a[i * n + j] - factor * ukj;
            }
        }
    }
    LuFactors {
        perm,
        sign,
        singular,
    }
}

impl LuFactors {
    fn determinant<T: Field>(&self, n: usize, a: &[T]) -> T {
        let mut det = if self.sign > 0.0 { T::one() } else { -T::one() };
        for i in 0..n {
            det = det * a[i * n + i];
        }
        det
    }

    fn solve_in_place<T: Field>(&self, n: usize, a: &[T], b: &mut [T]) {
        let permuted: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s = s - a[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s = s - a[i * n + j] * b[j];
            }
            b[i] = s / a[i * n + i];
        }
    }
}

fn det_raw(n: usize, mut a: Vec<f64>) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let lu = lu_factor(n, &mut a);
    if lu.singular {
        return 0.0;
    }
    lu.determinant(n, &a)
}

/// Determinant by LU with partial pivoting.
pub fn determinant(m: &Matrix) -> Result<f64> {
    let n = m.require_square("determinant")?;
    Ok(det_raw(n, m.data.clone()))
}

/// Solves `m · X = rhs`.
pub fn solve(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let n = m.require_square("solve")?;
    if rhs.rows != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, expected {n}",
            rhs.rows
        )));
    }
    let mut a = m.data.clone();
    let lu = lu_factor(n, &mut a);
    if lu.singular {
        return Err(Error::Numerical("singular matrix in solve".into()));
    }
    let mut out = Matrix::zeros(n, rhs.cols);
    let mut col = vec![0.0; n];
    for j in 0..rhs.cols {
        for i in 0..n {
            col[i] = rhs[(i, j)];
        }
        lu.solve_in_place(n, &a, &mut col);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// Gaussian elimination with complete pivoting; the rank-revealing
/// workhorse for null vectors.
struct CompletePivoting {
    n: usize,
    u: Vec<f64>,
    col_perm: Vec<usize>,
    rank: usize,
}

fn complete_pivoting(m: &Matrix, tol: f64) -> CompletePivoting {
    let n = m.rows;
    let mut u = m.data.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = n;
    for k in 0..n {
        let mut best = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                let v = u[i * n + j].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= tol {
            rank = k;
            break;
        }
        let (p, q, _) = best;
        if p != k {
            for j in 0..n {
                u.swap(k * n + j, p * n + j);
            }
        }
        if q != k {
            for i in 0..n {
                u.swap(i * n + k, i * n + q);
            }
            col_perm.swap(k, q);
        }
        let pivot = u[k * n + k];
        for i in k + 1..n {
            let factor = u[i * n + k] / pivot;
            u[i * n + k] = 0.0;
            for j in k + 1..n {
                u[i * n + j] -= factor * u[k * n + j];
            }
        }
    }
    CompletePivoting {
        n,
        u,
        col_perm,
        rank,
    }
}

impl CompletePivoting {
    /// Right null vector of the factored matrix, assuming rank `n - 1`.
    fn null_vector(&self) -> Vec<f64> {
        let n = self.n;
        let r = self.rank;
        let mut y = vec![0.0; n];
        y[n - 1] = 1.0;
        for k in (0..r).rev() {
            let s: f64 = (k + 1..n).map(|j| self.u[k * n + j] * y[j]).sum();
            y[k] = -s / self.u[k * n + k];
        }
        let mut v = vec![0.0; n];
        for (j, &c) in self.col_perm.iter().enumerate() {
            v[c] = y[j];
        }
        v
    }
}

/// Tolerance below which an eigenvalue or pivot counts as zero.
pub fn zero_tolerance(m: &Matrix) -> f64 {
    1e-9 * m.norm_inf().max(1.0)
}

/// Numerical rank via complete pivoting with the zero tolerance.
pub fn rank(m: &Matrix) -> Result<usize> {
    m.require_square("rank")?;
    Ok(complete_pivoting(m, zero_tolerance(m)).rank)
}

/// Left null vector `v` with `v · m ≈ 0`, unnormalized.
///
/// Fails with [`Error::Ambiguity`] unless `m` has numerical rank exactly
/// `n - 1`.
pub fn left_null_vector(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.require_square("left_null_vector")?;
    if n == 1 {
        return if m[(0, 0)].abs() <= zero_tolerance(m) {
            Ok(vec![1.0])
        } else {
            Err(Error::Ambiguity("1x1 matrix is nonsingular".into()))
        };
    }
    let tol = zero_tolerance(m);
    let fact = complete_pivoting(&m.transpose(), tol);
    if fact.rank != n - 1 {
        return Err(Error::Ambiguity(format!(
            "expected a one-dimensional null space, numerical rank is {} of {n}",
            fact.rank
        )));
    }
    let v = fact.null_vector();
    let residual = m.vec_mul(&v).iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let vnorm = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if residual > tol * vnorm * m.norm_inf().max(1.0) {
        return Err(Error::Numerical(format!(
            "null vector residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(v)
}

fn cofactor(m: &Matrix, i: usize, j: usize) -> f64 {
    let sign = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * det_raw(m.rows - 1, m.minor(i, j))
}

/// Classical adjoint: the transpose of the cofactor matrix.
///
/// A 1x1 matrix has adjugate `[1]` by convention. Up to
/// [`COFACTOR_LIMIT`] the cofactors are computed directly. Larger matrices
/// use `det(m)·m⁻¹` when nonsingular, the rank-one form `c·r·ℓᵀ` (right and
/// left null vectors, scaled by one explicit cofactor) at rank `n - 1`, and
/// zero below that.
pub fn adjugate(m: &Matrix) -> Result<Matrix> {
    let n = m.require_square("adjugate")?;
    if n == 1 {
        return Ok(Matrix::identity(1));
    }
    if n <= COFACTOR_LIMIT {
        return Ok(Matrix::from_fn(n, n, |i, j| cofactor(m, j, i)));
    }
    let tol = zero_tolerance(m);
    let fact = complete_pivoting(m, tol);
    match fact.rank {
        r if r == n => {
            let det = determinant(m)?;
            Ok(solve(m, &Matrix::identity(n))?.scale(det))
        }
        r if r == n - 1 => {
            let right = fact.null_vector();
            let left = complete_pivoting(&m.transpose(), tol).null_vector();
            let (mut bi, mut bj, mut best) = (0, 0, 0.0);
            for (i, ri) in right.iter().enumerate() {
                for (j, lj) in left.iter().enumerate() {
                    if (ri * lj).abs() > best {
                        best = (ri * lj).abs();
                        bi = i;
                        bj = j;
                    }
                }
            }
            let c = cofactor(m, bj, bi) / (right[bi] * left[bj]);
            Ok(Matrix::from_fn(n, n, |i, j| c * right[i] * left[j]))
        }
        _ => Ok(Matrix::zeros(n, n)),
    }
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.53939833006323e-1,
    9.504178996162932e-1,
    2.097847961257068e0,
    5.371920351148152e0,
];

fn lin_comb(terms: &[(f64, &Matrix)]) -> Matrix {
    let (c0, m0) = terms[0];
    let mut out = m0.scale(c0);
    for &(c, m) in &terms[1..] {
        for (o, v) in out.data.iter_mut().zip(&m.data) {
            *o += c * v;
        }
    }
    out
}

fn pade_low(a: &Matrix, b: &[f64]) -> (Matrix, Matrix) {
    let n = a.rows;
    let a2 = a.mul_unchecked(a);
    let mut powers = vec![Matrix::identity(n), a2.clone()];
    while powers.len() * 2 < b.len() {
        let next = powers.last().unwrap().mul_unchecked(&a2);
        powers.push(next);
    }
    let odd: Vec<(f64, &Matrix)> = powers
        .iter()
        .enumerate()
        .map(|(k, p)| (b[2 * k + 1], p))
        .collect();
    let even: Vec<(f64, &Matrix)> = powers.iter().enumerate().map(|(k, p)| (b[2 * k], p)).collect();
    (a.mul_unchecked(&lin_comb(&odd)), lin_comb(&even))
}

fn pade13(a: &Matrix) -> (Matrix, Matrix) {
    let b = &PADE13;
    let n = a.rows;
    let id = Matrix::identity(n);
    let a2 = a.mul_unchecked(a);
    let a4 = a2.mul_unchecked(&a2);
    let a6 = a4.mul_unchecked(&a2);
    let inner_u = a6.mul_unchecked(&lin_comb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]));
    let u = a.mul_unchecked(&lin_comb(&[
        (1.0, &inner_u),
        (b[7], &a6),
        (b[5], &a4),
        (b[3], &a2),
        (b[1], &id),
    ]));
    let inner_v = a6.mul_unchecked(&lin_comb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]));
    let v = lin_comb(&[
        (1.0, &inner_v),
        (b[6], &a6),
        (b[4], &a4),
        (b[2], &a2),
        (b[0], &id),
    ]);
    (u, v)
}

/// `e^{m·t}` by scaling and squaring with a diagonal Padé approximant
/// (degree 3 to 13 chosen from the 1-norm).
pub fn mat_exp(m: &Matrix, t: f64) -> Result<Matrix> {
    let n = m.require_square("mat_exp")?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Argument(format!("time must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let a = m.scale(t);
    let norm = a.norm_one();
    let mut squarings = 0;
    let (u, v) = if norm <= THETA[0] {
        pade_low(&a, &PADE3)
    } else if norm <= THETA[1] {
        pade_low(&a, &PADE5)
    } else if norm <= THETA[2] {
        pade_low(&a, &PADE7)
    } else if norm <= THETA[3] {
        pade_low(&a, &PADE9)
    } else {
        squarings = (norm / THETA[4]).log2().ceil().max(0.0) as i32;
        pade13(&a.scale(0.5_f64.powi(squarings)))
    };
    let mut r = solve(&v.sub(&u)?, &v.add(&u)?)?;
    for _ in 0..squarings {
        r = r.mul_unchecked(&r);
    }
    Ok(r)
}

/// Eigenvalues with a count of those that are numerically zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Sorted by ascending real part, ties by ascending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub zero_multiplicity: usize,
}

impl Spectrum {
    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_modulus(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// All eigenvalues of a general real matrix.
pub fn eigenvalues(m: &Matrix) -> Result<Spectrum> {
    eigenvalues_with(m, DEFAULT_QR_ITERATIONS)
}

/// [`eigenvalues`] with an explicit cap on QR sweeps per eigenvalue.
pub fn eigenvalues_with(m: &Matrix, max_iterations: usize) -> Result<Spectrum> {
    let n = m.require_square("eigenvalues")?;
    let mut a = m.data.clone();
    balance(n, &mut a);
    reduce_to_hessenberg(n, &mut a);
    let mut values = hessenberg_qr(n, &mut a, max_iterations)?;
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let tol = zero_tolerance(m);
    let zero_multiplicity = values.iter().filter(|z| z.norm() < tol).count();
    Ok(Spectrum {
        eigenvalues: values,
        zero_multiplicity,
    })
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable.
fn balance(n: usize, a: &mut [f64]) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                c += a[j * n + i].abs();
                r += a[i * n + j].abs();
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                for j in 0..n {
                    a[i * n + j] *= ginv;
                }
                for j in 0..n {
                    a[j * n + i] *= f;
                }
            }
        }
    }
}

/// Similarity reduction to upper Hessenberg form by stabilized elementary
/// transformations; entries below the subdiagonal are zeroed on exit.
fn reduce_to_hessenberg(n: usize, a: &mut [f64]) {
    for m in 1..n.saturating_sub(1) {
        let mut x: f64 = 0.0;
        let mut piv = m;
        for j in m..n {
            if a[j * n + m - 1].abs() > x.abs() {
                x = a[j * n + m - 1];
                piv = j;
            }
        }
        if piv != m {
            for j in m - 1..n {
                a.swap(piv * n + j, m * n + j);
            }
            for j in 0..n {
                a.swap(j * n + piv, j * n + m);
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[i * n + m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i * n + m - 1] = y;
                    for j in m..n {
                        a[i * n + j] -= y * a[m * n + j];
                    }
                    for j in 0..n {
                        a[j * n + m] += y * a[j * n + i];
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..i - 1 {
            a[i * n + j] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
fn hessenberg_qr(n: usize, a: &mut [f64], max_iterations: usize) -> Result<Vec<Complex64>> {
    let idx = |i: isize, j: isize| (i as usize) * n + j as usize;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i * n + j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        let mut l;
        loop {
            l = nn;
            while l >= 1 {
                let mut s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(l, l - 1)].abs() + s == s {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[idx(nn, nn)];
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
            } else {
                let mut y = a[idx(nn - 1, nn - 1)];
                let mut w = a[idx(nn, nn - 1)] * a[idx(nn - 1, nn)];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    let (i1, i0) = (nn as usize, nn as usize - 1);
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[i0] = x + z;
                        wr[i1] = x + z;
                        if z != 0.0 {
                            wr[i1] = x - w / z;
                        }
                        wi[i0] = 0.0;
                        wi[i1] = 0.0;
                    } else {
                        wr[i0] = x + p;
                        wr[i1] = x + p;
                        wi[i0] = -z;
                        wi[i1] = z;
                    }
                    nn -= 2;
                } else {
                    if its >= max_iterations {
                        return Err(Error::Numerical(format!(
                            "QR iteration did not converge after {its} sweeps \
                             (active block ends at row {nn}, subdiagonal {:e})",
                            a[idx(nn, nn - 1)]
                        )));
                    }
                    if its == 10 || its == 20 {
                        t += x;
                        for i in 0..=nn {
                            a[idx(i, i)] -= x;
                        }
                        let s = a[idx(nn, nn - 1)].abs() + a[idx(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let (mut p, mut q, mut r, mut z);
                    let mut m = nn - 2;
                    loop {
                        z = a[idx(m, m)];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                        q = a[idx(m + 1, m + 1)] - z - r - s;
                        r = a[idx(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs()
                            * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[idx(i, i - 2)] = 0.0;
                        if i != m + 2 {
                            a[idx(i, i - 3)] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[idx(k, k - 1)];
                            q = a[idx(k + 1, k - 1)];
                            r = 0.0;
                            if k != nn - 1 {
                                r = a[idx(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                                }
                            } else {
                                a[idx(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
                                if k != nn - 1 {
                                    pp += r * a[idx(k + 2, j)];
                                    a[idx(k + 2, j)] -= pp * z;
                                }
                                a[idx(k + 1, j)] -= pp * y;
                                a[idx(k, j)] -= pp * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                                if k != nn - 1 {
                                    pp += z * a[idx(i, k + 2)];
                                    a[idx(i, k + 2)] -= pp * r;
                                }
                                a[idx(i, k + 1)] -= pp * q;
                                a[idx(i, k)] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}
