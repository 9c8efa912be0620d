//! Dense exact linear algebra over F_q: reduced echelon forms, kernels,
//! inverses, characteristic polynomials, eigenvalues in the ground field and
//! commutant dimensions. Subspaces are kept in a canonical reduced
//! column-echelon basis so subspace equality is plain equality.

use crate::field::{ElementJson, FieldElement, FiniteField};
use crate::poly::Poly;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Column vector.
pub type Vector = Vec<FieldElement>;

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: FiniteField,
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>, // row-major
}

impl std::hash::Hash for Matrix {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rows.hash(state);
        self.cols.hash(state);
        self.data.hash(state);
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} over {:?} [", self.rows, self.cols, self.field)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:?} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Result of reduced row-echelon computation.
pub struct Rref {
    pub matrix: Matrix,
    pub rank: usize,
    pub pivot_cols: Vec<usize>,
}

impl Matrix {
    pub fn zeros(field: &FiniteField, rows: usize, cols: usize) -> Matrix {
        Matrix {
            field: field.clone(),
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: &FiniteField, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn scalar(field: &FiniteField, n: usize, c: &FieldElement) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, c.clone());
        }
        m
    }

    pub fn from_rows(field: &FiniteField, rows: Vec<Vec<FieldElement>>) -> Matrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for e in row {
                assert!(e.field() == field, "entry from a different field");
                data.push(e);
            }
        }
        Matrix {
            field: field.clone(),
            rows: r,
            cols: c,
            data,
        }
    }

    /// Integer literal constructor, entries reduced mod p.
    pub fn from_i64(field: &FiniteField, rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            field,
            rows.iter()
                .map(|r| r.iter().map(|&x| field.from_i64(x)).collect())
                .collect(),
        )
    }

    pub fn from_fn(
        field: &FiniteField,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> FieldElement,
    ) -> Matrix {
        let mut m = Matrix::zeros(field, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
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

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElement) {
        assert!(v.field() == &self.field, "entry from a different field");
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vector {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn col(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(&self.field, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(&self.field, self.rows, self.cols, |i, j| {
            self.get(i, j) + rhs.get(i, j)
        })
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(&self.field, self.rows, self.cols, |i, j| {
            self.get(i, j) - rhs.get(i, j)
        })
    }

    pub fn neg(&self) -> Matrix {
        Matrix::from_fn(&self.field, self.rows, self.cols, |i, j| -self.get(i, j))
    }

    pub fn scale(&self, c: &FieldElement) -> Matrix {
        Matrix::from_fn(&self.field, self.rows, self.cols, |i, j| self.get(i, j) * c)
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        assert!(self.field == rhs.field, "fields differ in product");
        if self.field.degree() == 1 {
            return self.mul_prime_fast(rhs);
        }
        let mut out = Matrix::zeros(&self.field, self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = self.field.zero();
                for k in 0..self.cols {
                    acc = &acc + &(self.get(i, k) * rhs.get(k, j));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    fn mul_prime_fast(&self, rhs: &Matrix) -> Matrix {
        let p = self.field.characteristic();
        let a = self.raw_prime();
        let b = rhs.raw_prime();
        let (n, m, l) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0u64; n * l];
        for i in 0..n {
            for k in 0..m {
                let aik = a[i * m + k];
                if aik == 0 {
                    continue;
                }
                for j in 0..l {
                    let cell = &mut out[i * l + j];
                    *cell = (*cell + aik * b[k * l + j]) % p;
                }
            }
        }
        Matrix::from_raw_prime(&self.field, n, l, &out)
    }

    fn raw_prime(&self) -> Vec<u64> {
        debug_assert_eq!(self.field.degree(), 1);
        self.data.iter().map(|e| e.coeffs()[0]).collect()
    }

    fn from_raw_prime(field: &FiniteField, rows: usize, cols: usize, raw: &[u64]) -> Matrix {
        Matrix {
            field: field.clone(),
            rows,
            cols,
            data: raw.iter().map(|&x| field.from_u64(x)).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[FieldElement]) -> Vector {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = self.field.zero();
                for k in 0..self.cols {
                    acc = &acc + &(self.get(i, k) * &v[k]);
                }
                acc
            })
            .collect()
    }

    pub fn pow(&self, mut e: u64) -> Matrix {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Matrix::identity(&self.field, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self.get(i, j).is_one()
                    } else {
                        self.get(i, j).is_zero()
                    }
                })
            })
    }

    /// `Some(c)` when the matrix is the scalar matrix c I.
    pub fn as_scalar(&self) -> Option<FieldElement> {
        if !self.is_square() || self.rows == 0 {
            return None;
        }
        let c = self.get(0, 0).clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let want_zero = i != j;
                if want_zero && !self.get(i, j).is_zero() {
                    return None;
                }
                if !want_zero && self.get(i, j) != &c {
                    return None;
                }
            }
        }
        Some(c)
    }

    pub fn hstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows);
        Matrix::from_fn(&self.field, self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                rhs.get(i, j - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.cols);
        Matrix::from_fn(&self.field, self.rows + rhs.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j).clone()
            } else {
                rhs.get(i - self.rows, j).clone()
            }
        })
    }

    /// Assemble from an r x c grid of equally-sized blocks.
    pub fn from_blocks(blocks: &[Vec<Matrix>]) -> Matrix {
        let field = blocks[0][0].field.clone();
        let bh = blocks[0][0].rows;
        let bw = blocks[0][0].cols;
        let rows = blocks.len() * bh;
        let cols = blocks[0].len() * bw;
        Matrix::from_fn(&field, rows, cols, |i, j| {
            blocks[i / bh][j / bw].get(i % bh, j % bw).clone()
        })
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        Matrix::from_fn(&self.field, r1 - r0, c1 - c0, |i, j| {
            self.get(r0 + i, c0 + j).clone()
        })
    }

    /// Reduced row echelon form with rank and pivot columns.
    pub fn rref(&self) -> Rref {
        if self.field.degree() == 1 {
            return self.rref_prime_fast();
        }
        let mut m = self.clone();
        let mut pivot_cols = vec![];
        let mut r = 0usize;
        for c in 0..m.cols {
            let Some(pr) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    let a = m.get(r, j).clone();
                    let b = m.get(pr, j).clone();
                    m.set(r, j, b);
                    m.set(pr, j, a);
                }
            }
            let inv = m.get(r, c).inv().unwrap();
            for j in 0..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let factor = m.get(i, c).clone();
                for j in 0..m.cols {
                    let v = m.get(i, j) - &(&factor * m.get(r, j));
                    m.set(i, j, v);
                }
            }
            pivot_cols.push(c);
            r += 1;
            if r == m.rows {
                break;
            }
        }
        Rref {
            matrix: m,
            rank: r,
            pivot_cols,
        }
    }

    fn rref_prime_fast(&self) -> Rref {
        let p = self.field.characteristic() as u128;
        let mut m: Vec<u128> = self.data.iter().map(|e| e.coeffs()[0] as u128).collect();
        let (rows, cols) = (self.rows, self.cols);
        let mut pivot_cols = vec![];
        let mut r = 0usize;
        for c in 0..cols {
            let Some(pr) = (r..rows).find(|&i| m[i * cols + c] != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..cols {
                    m.swap(r * cols + j, pr * cols + j);
                }
            }
            let inv = mod_inv_u128(m[r * cols + c], p);
            for j in 0..cols {
                m[r * cols + j] = m[r * cols + j] * inv % p;
            }
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let factor = m[i * cols + c];
                if factor == 0 {
                    continue;
                }
                for j in 0..cols {
                    let sub = factor * m[r * cols + j] % p;
                    let cell = &mut m[i * cols + j];
                    *cell = (*cell + p - sub) % p;
                }
            }
            pivot_cols.push(c);
            r += 1;
            if r == rows {
                break;
            }
        }
        let raw: Vec<u64> = m.iter().map(|&x| x as u64).collect();
        Rref {
            matrix: Matrix::from_raw_prime(&self.field, rows, cols, &raw),
            rank: r,
            pivot_cols,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Basis of the right kernel {v : Av = 0}, canonical.
    pub fn kernel(&self) -> Subspace {
        let rr = self.rref();
        let pivots = &rr.pivot_cols;
        let mut basis = vec![];
        let mut is_pivot = vec![false; self.cols];
        for &c in pivots {
            is_pivot[c] = true;
        }
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut v = vec![self.field.zero(); self.cols];
            v[free] = self.field.one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -rr.matrix.get(r, free);
            }
            basis.push(v);
        }
        Subspace::from_vectors(&self.field, self.cols, basis)
    }

    pub fn det(&self) -> FieldElement {
        assert!(self.is_square());
        let mut m = self.clone();
        let n = self.rows;
        let mut det = self.field.one();
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| !m.get(i, c).is_zero()) else {
                return self.field.zero();
            };
            if pr != c {
                det = -&det;
                for j in 0..n {
                    let a = m.get(c, j).clone();
                    let b = m.get(pr, j).clone();
                    m.set(c, j, b);
                    m.set(pr, j, a);
                }
            }
            let piv = m.get(c, c).clone();
            det = &det * &piv;
            let inv = piv.inv().unwrap();
            for i in (c + 1)..n {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let factor = &m.get(i, c).clone() * &inv;
                for j in c..n {
                    let v = m.get(i, j) - &(&factor * m.get(c, j));
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && !self.det().is_zero()
    }

    pub fn inverse(&self) -> Option<Matrix> {
        assert!(self.is_square());
        let n = self.rows;
        let aug = self.hstack(&Matrix::identity(&self.field, n));
        let rr = aug.rref();
        if rr.rank < n || rr.pivot_cols.iter().take(n).ne((0..n).collect::<Vec<_>>().iter()) {
            return None;
        }
        Some(rr.matrix.submatrix(0, n, n, 2 * n))
    }

    /// Characteristic polynomial det(x I - A), division-free recursion on
    /// principal submatrices (Samuelson-Berkowitz style).
    pub fn char_poly(&self) -> Poly {
        assert!(self.is_square());
        let n = self.rows;
        let f = &self.field;
        let mut q = Poly::one(f); // char poly of the empty trailing block
        for k in 1..=n {
            let top = n - k;
            let a = self.get(top, top).clone();
            // char = (x - a) q - sum_i (R M^i C) s_i,  s_i = tails of q
            let mut next = Poly::x_minus(&a).mul(&q);
            if k > 1 {
                let m = k - 1;
                let r_vec: Vec<FieldElement> =
                    (top + 1..n).map(|j| self.get(top, j).clone()).collect();
                let mut v: Vec<FieldElement> =
                    (top + 1..n).map(|i| self.get(i, top).clone()).collect();
                let qc = q.coeffs().to_vec();
                for i in 0..m {
                    let mut dot = f.zero();
                    for t in 0..m {
                        dot = &dot + &(&r_vec[t] * &v[t]);
                    }
                    if !dot.is_zero() {
                        // s_i(x) = sum_{j=i+1}^{m} q_j x^{j-1-i}
                        let tail: Vec<FieldElement> =
                            qc.iter().skip(i + 1).cloned().collect();
                        let s = Poly::new(f, tail);
                        next = next.sub(&s.scale(&dot));
                    }
                    if i + 1 < m {
                        // v = M v where M is the trailing (k-1) block
                        let mut nv = vec![f.zero(); m];
                        for (ri, row) in (top + 1..n).enumerate() {
                            let mut acc = f.zero();
                            for (ci, col) in (top + 1..n).enumerate() {
                                acc = &acc + &(self.get(row, col) * &v[ci]);
                            }
                            nv[ri] = acc;
                        }
                        v = nv;
                    }
                }
            }
            q = next;
        }
        q
    }

    /// Eigenvalues lying in the ground field, with algebraic multiplicities,
    /// in canonical element order.
    pub fn eigenvalues_in_field(&self) -> Vec<(FieldElement, usize)> {
        self.char_poly().roots_with_multiplicity()
    }

    /// dim {X : XA = AX} via the kernel of the commutator operator.
    pub fn commutant_dim(&self) -> usize {
        assert!(self.is_square());
        let n = self.rows;
        let f = &self.field;
        let mut op = Matrix::zeros(f, n * n, n * n);
        // column (k,l) is flatten(E_kl A - A E_kl):
        // (E_kl A)_{ij} = [i=k] A_{lj},  (A E_kl)_{ij} = A_{ik} [j=l]
        for k in 0..n {
            for l in 0..n {
                let colidx = k * n + l;
                for j in 0..n {
                    let cur = op.get(k * n + j, colidx) + self.get(l, j);
                    op.set(k * n + j, colidx, cur);
                }
                for i in 0..n {
                    let cur = op.get(i * n + l, colidx) - self.get(i, k);
                    op.set(i * n + l, colidx, cur);
                }
            }
        }
        n * n - op.rank()
    }

    /// rank(A - I).
    pub fn rank_minus_identity(&self) -> usize {
        assert!(self.is_square());
        self.sub(&Matrix::identity(&self.field, self.rows)).rank()
    }

    /// True when (A - I)^n = 0, i.e. all eigenvalues are 1.
    pub fn is_unipotent(&self) -> bool {
        assert!(self.is_square());
        let n = self.rows as u64;
        let nilp = self.sub(&Matrix::identity(&self.field, self.rows));
        // (A-I)^m with m the least power of 2 >= n suffices
        let mut pw = nilp;
        let mut e = 1;
        while e < n {
            pw = pw.mul(&pw);
            e *= 2;
        }
        pw.is_zero()
    }

    /// True when the minimal polynomial is squarefree.
    pub fn is_semisimple(&self) -> bool {
        assert!(self.is_square());
        let rad = self.char_poly().radical();
        self.eval_poly(&rad).is_zero()
    }

    pub fn eval_poly(&self, p: &Poly) -> Matrix {
        assert!(self.is_square());
        let n = self.rows;
        let mut acc = Matrix::zeros(&self.field, n, n);
        for c in p.coeffs().iter().rev() {
            acc = acc.mul(self);
            acc = acc.add(&Matrix::scalar(&self.field, n, c));
        }
        acc
    }

    /// Multiplicative order; the matrix must be invertible. `cap` bounds the
    /// search.
    pub fn multiplicative_order(&self, cap: u64) -> Option<u64> {
        let mut acc = self.clone();
        for k in 1..=cap {
            if acc.is_identity() {
                return Some(k);
            }
            acc = acc.mul(self);
        }
        None
    }

    // --- JSON: {"rows": int, "cols": int, "entries": [[elem]]} ---

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            entries: (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self.get(i, j).to_json()).collect())
                .collect(),
        }
    }

    pub fn from_json(field: &FiniteField, raw: &MatrixJson) -> Result<Matrix, String> {
        if raw.entries.len() != raw.rows {
            return Err("entry grid does not match row count".into());
        }
        let mut rows = vec![];
        for row in &raw.entries {
            if row.len() != raw.cols {
                return Err("entry grid does not match column count".into());
            }
            rows.push(
                row.iter()
                    .map(|e| FieldElement::from_json(field, e).map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        Ok(Matrix::from_rows(field, rows))
    }
}

fn mod_inv_u128(a: u128, p: u128) -> u128 {
    let mut acc: u128 = 1;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

#[derive(Serialize, Deserialize, Clone)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<ElementJson>>,
}

/// A subspace of F_q^n held by its canonical basis: the unique basis in
/// reduced column-echelon form. Two `Subspace` values are equal exactly when
/// they are the same subspace.
#[derive(Clone, PartialEq, Eq)]
pub struct Subspace {
    field: FiniteField,
    ambient: usize,
    /// ambient x dim, reduced column echelon
    basis: Matrix,
    /// pivot row of each basis column, strictly increasing
    pivot_rows: Vec<usize>,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} of F^{})", self.dim(), self.ambient)
    }
}

impl Subspace {
    pub fn zero(field: &FiniteField, ambient: usize) -> Subspace {
        Subspace {
            field: field.clone(),
            ambient,
            basis: Matrix::zeros(field, ambient, 0),
            pivot_rows: vec![],
        }
    }

    pub fn full(field: &FiniteField, ambient: usize) -> Subspace {
        Subspace::from_columns(&Matrix::identity(field, ambient))
    }

    /// Span of the columns of `m`, canonicalized.
    pub fn from_columns(m: &Matrix) -> Subspace {
        let rr = m.transpose().rref();
        let dim = rr.rank;
        let basis = Matrix::from_fn(m.field(), m.rows(), dim, |i, j| {
            rr.matrix.get(j, i).clone()
        });
        Subspace {
            field: m.field().clone(),
            ambient: m.rows(),
            basis,
            pivot_rows: rr.pivot_cols,
        }
    }

    pub fn from_vectors(field: &FiniteField, ambient: usize, vecs: Vec<Vector>) -> Subspace {
        if vecs.is_empty() {
            return Subspace::zero(field, ambient);
        }
        let m = Matrix::from_rows(field, vecs).transpose();
        assert_eq!(m.rows(), ambient);
        Subspace::from_columns(&m)
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// The canonical basis, one column per basis vector.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vector(&self, j: usize) -> Vector {
        self.basis.col(j)
    }

    pub fn pivot_rows(&self) -> &[usize] {
        &self.pivot_rows
    }

    /// Rows that carry no pivot; the canonical complement coordinates.
    pub fn complement_rows(&self) -> Vec<usize> {
        let mut is_p = vec![false; self.ambient];
        for &r in &self.pivot_rows {
            is_p[r] = true;
        }
        (0..self.ambient).filter(|&r| !is_p[r]).collect()
    }

    /// Residual of v after eliminating all pivot coordinates against the
    /// basis; zero iff v lies in the subspace.
    pub fn reduce(&self, v: &[FieldElement]) -> Vector {
        assert_eq!(v.len(), self.ambient);
        let mut out = v.to_vec();
        for (col, &pr) in self.pivot_rows.iter().enumerate() {
            let c = out[pr].clone();
            if c.is_zero() {
                continue;
            }
            for i in 0..self.ambient {
                out[i] = &out[i] - &(&c * self.basis.get(i, col));
            }
        }
        out
    }

    pub fn contains(&self, v: &[FieldElement]) -> bool {
        self.reduce(v).iter().all(|e| e.is_zero())
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        (0..other.dim()).all(|j| self.contains(&other.basis_vector(j)))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(self.ambient, other.ambient);
        Subspace::from_columns(&self.basis.hstack(&other.basis))
    }

    /// Kernel-style intersection via the sum formula on stacked bases.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(&self.field, self.ambient);
        }
        // solve B1 x = B2 y: kernel of [B1 | -B2]
        let joint = self.basis.hstack(&other.basis.neg());
        let ker = joint.kernel();
        let mut vecs = vec![];
        for j in 0..ker.dim() {
            let coeffs = ker.basis_vector(j);
            let x = &coeffs[..self.dim()];
            let v = self.basis.mul_vec(x);
            vecs.push(v);
        }
        Subspace::from_vectors(&self.field, self.ambient, vecs)
    }

    /// True when M maps the subspace into itself.
    pub fn is_invariant_under(&self, m: &Matrix) -> bool {
        (0..self.dim()).all(|j| self.contains(&m.mul_vec(&self.basis_vector(j))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> FiniteField {
        FiniteField::prime(7).unwrap()
    }

    #[test]
    fn rref_examples() {
        let f = f7();
        let id = Matrix::identity(&f, 3);
        let rr = id.rref();
        assert_eq!(rr.matrix, id);
        assert_eq!(rr.rank, 3);

        let z = Matrix::zeros(&f, 2, 4);
        let rr = z.rref();
        assert_eq!(rr.matrix, z);
        assert_eq!(rr.rank, 0);

        // row 2 = 5 * row 1 mod 7
        let m = Matrix::from_i64(&f, &[&[2, 4], &[3, 6]]);
        assert_eq!(m.rref().rank, 1);
    }

    #[test]
    fn rref_idempotent() {
        let f = f7();
        let m = Matrix::from_i64(&f, &[&[1, 2, 3], &[4, 5, 6], &[6, 5, 4]]);
        let r1 = m.rref().matrix;
        let r2 = r1.rref().matrix;
        assert_eq!(r1, r2);
    }

    #[test]
    fn kernel_examples() {
        let f = f7();
        // diag(2,4) - I = diag(1,3) invertible -> zero kernel
        let g1 = Matrix::from_i64(&f, &[&[2, 0], &[0, 4]]);
        let k = g1.sub(&Matrix::identity(&f, 2)).kernel();
        assert_eq!(k.dim(), 0);

        // -2I invertible
        let m = Matrix::from_i64(&f, &[&[-2, 0], &[0, -2]]);
        assert_eq!(m.kernel().dim(), 0);

        let z = Matrix::zeros(&f, 3, 3);
        assert_eq!(z.kernel().dim(), 3);
    }

    #[test]
    fn rank_nullity_random() {
        let f = f7();
        let mut s = 1u64;
        for _ in 0..40 {
            let m = Matrix::from_fn(&f, 4, 6, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f.from_u64((s >> 33) % 7)
            });
            assert_eq!(m.rank() + m.kernel().dim(), m.cols());
        }
    }

    #[test]
    fn eigenvalues_examples() {
        let f = f7();
        let g1 = Matrix::from_i64(&f, &[&[2, 0], &[0, 4]]);
        let ev = g1.eigenvalues_in_field();
        assert_eq!(ev, vec![(f.from_u64(2), 1), (f.from_u64(4), 1)]);

        // g2 has char poly x^2 + 1, no roots mod 7
        let g2 = Matrix::from_i64(&f, &[&[0, 6], &[1, 0]]);
        assert!(g2.eigenvalues_in_field().is_empty());

        let id = Matrix::identity(&f, 4);
        assert_eq!(id.eigenvalues_in_field(), vec![(f.one(), 4)]);
    }

    #[test]
    fn eigenvalues_match_exhaustive_det() {
        for (p, k) in [(7, 1), (11, 1), (7, 2)] {
            let f = FiniteField::new(p, k, None).unwrap();
            if f.order() > 49 {
                continue;
            }
            let m = Matrix::from_i64(&f, &[&[1, 2, 0], &[0, 1, 5], &[3, 0, 2]]);
            let ev = m.eigenvalues_in_field();
            for x in f.elements() {
                let shifted = Matrix::scalar(&f, 3, &x).sub(&m);
                let is_eig = shifted.det().is_zero();
                assert_eq!(is_eig, ev.iter().any(|(l, _)| *l == x));
            }
        }
    }

    #[test]
    fn char_poly_matches_det() {
        let f = f7();
        let m = Matrix::from_i64(&f, &[&[1, 2, 3], &[0, 4, 1], &[5, 5, 2]]);
        let cp = m.char_poly();
        assert_eq!(cp.degree(), 3);
        for x in f.elements() {
            let direct = Matrix::scalar(&f, 3, &x).sub(&m).det();
            assert_eq!(cp.eval(&x), direct);
        }
    }

    #[test]
    fn commutant_examples() {
        let f = f7();
        let scalar = Matrix::scalar(&f, 3, &f.from_u64(5));
        assert_eq!(scalar.commutant_dim(), 9);

        let g1 = Matrix::from_i64(&f, &[&[2, 0], &[0, 4]]);
        assert_eq!(g1.commutant_dim(), 2);

        let g2 = Matrix::from_i64(&f, &[&[0, 6], &[1, 0]]);
        assert_eq!(g2.commutant_dim(), 2);
    }

    #[test]
    fn commutant_at_least_n() {
        let f = f7();
        let m = Matrix::from_i64(&f, &[&[1, 1, 0], &[0, 1, 0], &[0, 0, 3]]);
        assert!(m.commutant_dim() >= 3);
        // distinct eigenvalues: commutant hits the lower bound n,
        // and equals the sum of squared eigenvalue multiplicities
        let d = Matrix::from_i64(&f, &[&[1, 0, 0], &[0, 2, 0], &[0, 0, 2]]);
        assert_eq!(d.commutant_dim(), 1 + 4);
    }

    #[test]
    fn rank_minus_identity_examples() {
        let f = f7();
        assert_eq!(Matrix::identity(&f, 3).rank_minus_identity(), 0);
        let m = Matrix::from_i64(&f, &[&[-1, 0], &[0, -1]]);
        assert_eq!(m.rank_minus_identity(), 2);
        let g1 = Matrix::from_i64(&f, &[&[2, 0], &[0, 4]]);
        assert_eq!(g1.rank_minus_identity(), 2);
    }

    #[test]
    fn inverse_round_trip() {
        let f = f7();
        let m = Matrix::from_i64(&f, &[&[1, 2], &[3, 4]]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        let sing = Matrix::from_i64(&f, &[&[1, 2], &[2, 4]]);
        assert!(sing.inverse().is_none());
    }

    #[test]
    fn subspace_canonical_equality() {
        let f = f7();
        let a = Subspace::from_vectors(
            &f,
            3,
            vec![
                vec![f.from_u64(1), f.from_u64(1), f.from_u64(0)],
                vec![f.from_u64(0), f.from_u64(1), f.from_u64(1)],
            ],
        );
        let b = Subspace::from_vectors(
            &f,
            3,
            vec![
                vec![f.from_u64(1), f.from_u64(2), f.from_u64(1)],
                vec![f.from_u64(2), f.from_u64(3), f.from_u64(1)],
            ],
        );
        assert_eq!(a, b);
        assert_eq!(a.dim(), 2);
        assert!(a.contains(&[f.from_u64(1), f.from_u64(1), f.from_u64(0)]));
        assert!(!a.contains(&[f.from_u64(1), f.from_u64(0), f.from_u64(0)]));
    }

    #[test]
    fn subspace_sum_and_intersection() {
        let f = f7();
        let e1 = Subspace::from_vectors(&f, 3, vec![vec![f.one(), f.zero(), f.zero()]]);
        let e12 = Subspace::from_vectors(
            &f,
            3,
            vec![
                vec![f.one(), f.zero(), f.zero()],
                vec![f.zero(), f.one(), f.zero()],
            ],
        );
        let e23 = Subspace::from_vectors(
            &f,
            3,
            vec![
                vec![f.zero(), f.one(), f.zero()],
                vec![f.zero(), f.zero(), f.one()],
            ],
        );
        assert_eq!(e12.sum(&e23).dim(), 3);
        let i = e12.intersect(&e23);
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&[f.zero(), f.one(), f.zero()]));
        assert_eq!(e1.sum(&e12), e12);
    }

    #[test]
    fn unipotent_and_semisimple() {
        let f = f7();
        let u = Matrix::from_i64(&f, &[&[1, 1], &[0, 1]]);
        assert!(u.is_unipotent());
        assert!(!u.is_semisimple());
        let d = Matrix::from_i64(&f, &[&[2, 0], &[0, 2]]);
        assert!(d.is_semisimple());
        assert!(!d.is_unipotent());
        assert!(Matrix::identity(&f, 2).is_unipotent());
        assert!(Matrix::identity(&f, 2).is_semisimple());
    }

    #[test]
    fn json_round_trip() {
        let f = f7();
        let m = Matrix::from_i64(&f, &[&[1, 2], &[3, 4]]);
        let s = serde_json::to_string(&m.to_json()).unwrap();
        let raw: MatrixJson = serde_json::from_str(&s).unwrap();
        assert_eq!(Matrix::from_json(&f, &raw).unwrap(), m);
    }
}
