use super::field::{FieldCtx, FieldElem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("system is singular or inconsistent")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Dense row-major matrix of field codes. Arithmetic takes the field explicitly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![FieldElem::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, FieldElem::ONE);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<FieldElem>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn from_codes(rows: &[&[u32]]) -> Result<Self, LinalgError> {
        let v: Vec<Vec<FieldElem>> = rows
            .iter()
            .map(|r| r.iter().map(|&c| FieldElem(c)).collect())
            .collect();
        Self::from_rows(&v)
    }

    pub fn column(v: &[FieldElem]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[FieldElem] {
        &self.data
    }

    pub fn to_codes(&self) -> Vec<Vec<u32>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|e| e.0).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, f: &FieldCtx, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for c in 0..rhs.cols {
                let mut acc = FieldElem::ZERO;
                for k in 0..self.cols {
                    acc = f.add(acc, f.mul(self.get(r, k), rhs.get(k, c)));
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, f: &FieldCtx, v: &[FieldElem]) -> Vec<FieldElem> {
        (0..self.rows).map(|r| f.dot(self.row(r), v)).collect()
    }

    /// Reduces in place to reduced row-echelon form, pivoting on the first
    /// nonzero entry of each column. Returns pivot columns and the determinant
    /// factor accumulated from swaps and scalings.
    fn rref(&mut self, f: &FieldCtx, limit_cols: usize) -> (Vec<usize>, FieldElem) {
        let mut pivots = Vec::new();
        let mut det = FieldElem::ONE;
        let mut r = 0;
        for c in 0..limit_cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for k in 0..self.cols {
                    self.data.swap(pr * self.cols + k, r * self.cols + k);
                }
                det = f.neg(det);
            }
            let pv = self.get(r, c);
            det = f.mul(det, pv);
            let inv = f.inv(pv).expect("pivot is nonzero");
            for k in 0..self.cols {
                let v = f.mul(self.get(r, k), inv);
                self.set(r, k, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for k in 0..self.cols {
                    let v = f.sub(self.get(i, k), f.mul(factor, self.get(r, k)));
                    self.set(i, k, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (pivots, det)
    }

    pub fn rank(&self, f: &FieldCtx) -> usize {
        let mut m = self.clone();
        let cols = m.cols;
        m.rref(f, cols).0.len()
    }

    pub fn determinant(&self, f: &FieldCtx) -> Result<FieldElem, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension("determinant of non-square".into()));
        }
        let mut m = self.clone();
        let n = m.cols;
        let (pivots, det) = m.rref(f, n);
        Ok(if pivots.len() == n { det } else { FieldElem::ZERO })
    }

    pub fn inverse(&self, f: &FieldCtx) -> Result<Matrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension("inverse of non-square".into()));
        }
        solve_linear(f, self, &Matrix::identity(self.rows))
    }
}

/// Solves `A X = B` for a square or overdetermined consistent system.
pub fn solve_linear(f: &FieldCtx, a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if a.rows != b.rows {
        return Err(LinalgError::Dimension(format!(
            "A has {} rows, B has {}",
            a.rows, b.rows
        )));
    }
    let n = a.cols;
    let mut aug = Matrix::zeros(a.rows, n + b.cols);
    for r in 0..a.rows {
        for c in 0..n {
            aug.set(r, c, a.get(r, c));
        }
        for c in 0..b.cols {
            aug.set(r, n + c, b.get(r, c));
        }
    }
    let (pivots, _) = aug.rref(f, n);
    if pivots.len() < n {
        return Err(LinalgError::Singular);
    }
    for r in n..aug.rows {
        if (n..aug.cols).any(|c| !aug.get(r, c).is_zero()) {
            return Err(LinalgError::Singular);
        }
    }
    let mut x = Matrix::zeros(n, b.cols);
    for r in 0..n {
        for c in 0..b.cols {
            x.set(r, c, aug.get(r, n + c));
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::field_new;

    #[test]
    fn identity_solve_returns_rhs() {
        let f = field_new(3, 1).unwrap();
        let b = Matrix::from_codes(&[&[1, 2], &[0, 1], &[2, 2]]).unwrap();
        assert_eq!(solve_linear(&f, &Matrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn singular_and_inconsistent() {
        let f = field_new(3, 1).unwrap();
        let a = Matrix::from_codes(&[&[1, 2], &[2, 1]]).unwrap();
        let b = Matrix::column(&[FieldElem(1), FieldElem(0)]);
        assert_eq!(solve_linear(&f, &a, &b), Err(LinalgError::Singular));
        assert_eq!(a.rank(&f), 1);
        assert_eq!(a.determinant(&f).unwrap(), FieldElem::ZERO);

        let over = Matrix::from_codes(&[&[1, 0], &[0, 1], &[1, 1]]).unwrap();
        let good = Matrix::column(&[FieldElem(1), FieldElem(1), FieldElem(2)]);
        let bad = Matrix::column(&[FieldElem(1), FieldElem(1), FieldElem(0)]);
        assert_eq!(
            solve_linear(&f, &over, &good).unwrap(),
            Matrix::column(&[FieldElem(1), FieldElem(1)])
        );
        assert_eq!(solve_linear(&f, &over, &bad), Err(LinalgError::Singular));
    }

    #[test]
    fn determinant_tracks_swaps() {
        let f = field_new(5, 1).unwrap();
        let a = Matrix::from_codes(&[&[0, 1], &[1, 0]]).unwrap();
        assert_eq!(a.determinant(&f).unwrap(), FieldElem(4));
        let b = Matrix::from_codes(&[&[2, 3], &[1, 4]]).unwrap();
        assert_eq!(b.determinant(&f).unwrap(), FieldElem(0));
        let c = Matrix::from_codes(&[&[2, 3], &[1, 1]]).unwrap();
        assert_eq!(c.determinant(&f).unwrap(), f.scalar(2 - 3));
    }

    #[test]
    fn inverse_round_trip() {
        let f = field_new(2, 3).unwrap();
        let a = Matrix::from_codes(&[&[1, 2, 3], &[4, 5, 6], &[7, 1, 2]]).unwrap();
        if let Ok(inv) = a.inverse(&f) {
            assert_eq!(a.mul(&f, &inv).unwrap(), Matrix::identity(3));
        } else {
            assert_eq!(a.determinant(&f).unwrap(), FieldElem::ZERO);
        }
    }
}
