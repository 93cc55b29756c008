use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

/// Matrix-valued affine function of the model's scalar unknowns:
/// `constant + sum_i x_i * coeffs[i]`.
///
/// Coefficients are stored densely per unknown; the models built in this
/// crate have at most a few hundred unknowns and blocks of a few dozen rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    rows: usize,
    cols: usize,
    pub(crate) constant: DMatrix<f64>,
    pub(crate) coeffs: BTreeMap<usize, DMatrix<f64>>,
}

impl AffineExpr {
    pub fn constant(m: DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        Self {
            rows,
            cols,
            constant: m,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    pub fn scalar(value: f64) -> Self {
        Self::constant(DMatrix::from_element(1, 1, value))
    }

    pub(crate) fn from_parts(constant: DMatrix<f64>, coeffs: BTreeMap<usize, DMatrix<f64>>) -> Self {
        let (rows, cols) = constant.shape();
        Self {
            rows,
            cols,
            constant,
            coeffs,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn constant_term(&self) -> &DMatrix<f64> {
        &self.constant
    }

    /// Iterator over `(unknown index, coefficient matrix)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &DMatrix<f64>)> {
        self.coeffs.iter().map(|(&i, m)| (i, m))
    }

    /// Evaluate at a full vector of scalar unknowns.
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (&i, c) in &self.coeffs {
            out += c * x[i];
        }
        out
    }

    fn map(&self, rows: usize, cols: usize, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        let constant = f(&self.constant);
        debug_assert_eq!(constant.shape(), (rows, cols));
        Self {
            rows,
            cols,
            constant,
            coeffs: self.coeffs.iter().map(|(&i, c)| (i, f(c))).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        self.map(self.cols, self.rows, |m| m.transpose())
    }

    /// `M * self`.
    pub fn lmul(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.ncols(), self.rows, "lmul shape mismatch");
        self.map(m.nrows(), self.cols, |c| m * c)
    }

    /// `self * M`.
    pub fn rmul(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), self.cols, "rmul shape mismatch");
        self.map(self.rows, m.ncols(), |c| c * m)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(self.rows, self.cols, |c| c * s)
    }

    pub fn trace(&self) -> Self {
        assert_eq!(self.rows, self.cols, "trace of non-square expression");
        self.map(1, 1, |c| DMatrix::from_element(1, 1, c.trace()))
    }

    /// `(self + self^T) / 2`.
    pub fn symmetric_part(&self) -> Self {
        self.map(self.rows, self.cols, |c| (c + c.transpose()) * 0.5)
    }

    /// Largest entrywise asymmetry of the constant and coefficients.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        std::iter::once(&self.constant)
            .chain(self.coeffs.values())
            .map(|c| (c - c.transpose()).amax())
            .fold(0.0, f64::max)
    }

    /// Assemble a block matrix from a grid of expressions. Row heights and
    /// column widths must agree along each block row/column.
    pub fn blocks(grid: &[Vec<AffineExpr>]) -> Self {
        assert!(!grid.is_empty(), "empty block grid");
        let heights: Vec<usize> = grid.iter().map(|row| row[0].rows).collect();
        let widths: Vec<usize> = grid[0].iter().map(|e| e.cols).collect();
        let rows: usize = heights.iter().sum();
        let cols: usize = widths.iter().sum();
        let mut constant = DMatrix::zeros(rows, cols);
        let mut coeffs: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
        let mut r0 = 0;
        for (bi, row) in grid.iter().enumerate() {
            assert_eq!(row.len(), widths.len(), "ragged block grid");
            let mut c0 = 0;
            for (bj, e) in row.iter().enumerate() {
                assert_eq!(e.shape(), (heights[bi], widths[bj]), "block ({bi},{bj}) shape");
                constant.view_mut((r0, c0), e.shape()).copy_from(&e.constant);
                for (&i, c) in &e.coeffs {
                    coeffs
                        .entry(i)
                        .or_insert_with(|| DMatrix::zeros(rows, cols))
                        .view_mut((r0, c0), e.shape())
                        .copy_from(c);
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        Self::from_parts(constant, coeffs)
    }

    /// Drops coefficient matrices that are identically zero.
    pub fn prune(mut self) -> Self {
        self.coeffs.retain(|_, c| c.iter().any(|v| *v != 0.0));
        self
    }
}

impl Add for &AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: &AffineExpr) -> AffineExpr {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        let mut out = self.clone();
        out.constant += &rhs.constant;
        for (&i, c) in &rhs.coeffs {
            out.coeffs.entry(i).and_modify(|e| *e += c).or_insert_with(|| c.clone());
        }
        out
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: AffineExpr) -> AffineExpr {
        &self + &rhs
    }
}

impl Add<&DMatrix<f64>> for &AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: &DMatrix<f64>) -> AffineExpr {
        assert_eq!(self.constant.shape(), rhs.shape(), "add shape mismatch");
        let mut out = self.clone();
        out.constant += rhs;
        out
    }
}

impl Add<&DMatrix<f64>> for AffineExpr {
    type Output = AffineExpr;
    fn add(self, rhs: &DMatrix<f64>) -> AffineExpr {
        &self + rhs
    }
}

impl Sub<&DMatrix<f64>> for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: &DMatrix<f64>) -> AffineExpr {
        &self + &(-rhs)
    }
}

impl Neg for &AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scale(-1.0)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scale(-1.0)
    }
}

impl Sub for &AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: &AffineExpr) -> AffineExpr {
        self + &(-rhs)
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        &self - &rhs
    }
}

impl Mul<f64> for &AffineExpr {
    type Output = AffineExpr;
    fn mul(self, s: f64) -> AffineExpr {
        self.scale(s)
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(self, s: f64) -> AffineExpr {
        self.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn var(i: usize, rows: usize, cols: usize, r: usize, c: usize) -> AffineExpr {
        let mut m = DMatrix::zeros(rows, cols);
        m[(r, c)] = 1.0;
        AffineExpr::from_parts(DMatrix::zeros(rows, cols), [(i, m)].into_iter().collect())
    }

    #[test]
    fn algebra_matches_evaluation() {
        let x = var(0, 2, 2, 0, 1) + var(1, 2, 2, 1, 1) + &DMatrix::identity(2, 2);
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        let e = x.lmul(&a).rmul(&a.transpose()).transpose() * 2.0 - x.clone();
        let vals = [0.5, -1.5];
        let xv = x.eval(&vals);
        let expected = (&a * &xv * a.transpose()).transpose() * 2.0 - &xv;
        assert!((e.eval(&vals) - expected).amax() < 1e-12);
        assert!((x.trace().eval(&vals)[(0, 0)] - xv.trace()).abs() < 1e-14);
    }

    #[test]
    fn block_assembly() {
        let x = var(0, 1, 1, 0, 0);
        let z = AffineExpr::zeros(1, 2);
        let m = AffineExpr::constant(dmatrix![1.0, 2.0; 3.0, 4.0]);
        let b = AffineExpr::blocks(&[vec![x.clone(), z.clone()], vec![z.transpose(), m]]);
        assert_eq!(b.shape(), (3, 3));
        let v = b.eval(&[7.0]);
        assert_eq!(v[(0, 0)], 7.0);
        assert_eq!(v[(2, 1)], 3.0);
        assert_eq!(v[(0, 2)], 0.0);
    }
}
