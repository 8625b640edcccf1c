//! LU factorisation with partial pivoting for the tiny per-node systems
//! `Ω(z) x = b` (N is 1..4 in practice).

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct SmallLu {
    n: usize,
    /// Packed L (unit diagonal, strictly lower) and U, row-major.
    lu: Vec<Complex64>,
    /// Row `i` of the factored matrix is row `perm[i]` of the input.
    perm: Vec<usize>,
    det: Complex64,
}

impl SmallLu {
    /// Factor the row-major `n × n` matrix `a`. Exactly singular input is
    /// not an error; the determinant is then zero and solves return
    /// non-finite values.
    pub fn factor(a: &[Complex64], n: usize) -> SmallLu {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| lu[r * n + col].norm().total_cmp(&lu[s * n + col].norm()))
                .unwrap_or(col);
            if pivot != col {
                for k in 0..n {
                    lu.swap(pivot * n + k, col * n + k);
                }
                perm.swap(pivot, col);
                det = -det;
            }
            let d = lu[col * n + col];
            det *= d;
            if d == Complex64::new(0.0, 0.0) {
                continue;
            }
            for r in col + 1..n {
                let l = lu[r * n + col] / d;
                lu[r * n + col] = l;
                for k in col + 1..n {
                    let u = lu[col * n + k];
                    lu[r * n + k] -= l * u;
                }
            }
        }
        SmallLu { n, lu, perm, det }
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for k in 0..r {
                let l = self.lu[r * n + k];
                let xk = x[k];
                x[r] -= l * xk;
            }
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                let u = self.lu[r * n + k];
                let xk = x[k];
                x[r] -= u * xk;
            }
            x[r] /= self.lu[r * n + r];
        }
        x
    }

    /// Solve `Aᵗ x = b` (plain transpose, no conjugation).
    pub fn solve_transposed(&self, b: &[Complex64]) -> Vec<Complex64> {
        // A = Pᵗ L U  ⇒  Aᵗ = Uᵗ Lᵗ P
        let n = self.n;
        let mut w = b.to_vec();
        for r in 0..n {
            for k in 0..r {
                let u = self.lu[k * n + r];
                let wk = w[k];
                w[r] -= u * wk;
            }
            w[r] /= self.lu[r * n + r];
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                let l = self.lu[k * n + r];
                let wk = w[k];
                w[r] -= l * wk;
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn matvec(a: &[Complex64], x: &[Complex64], n: usize, transposed: bool) -> Vec<Complex64> {
        (0..n)
            .map(|r| (0..n).map(|k| if transposed { a[k * n + r] } else { a[r * n + k] } * x[k]).sum())
            .collect()
    }

    #[test]
    fn solves_and_transposed_solves() {
        let a = vec![
            c(0.0, 0.0), c(1.0, 2.0), c(-1.0, 0.5),
            c(2.0, -1.0), c(0.3, 0.0), c(0.0, 1.0),
            c(1.0, 1.0), c(-2.0, 0.0), c(4.0, -3.0),
        ];
        let b = vec![c(1.0, 0.0), c(0.0, -1.0), c(2.5, 0.5)];
        let lu = SmallLu::factor(&a, 3);
        let x = lu.solve(&b);
        let y = lu.solve_transposed(&b);
        for (got, want) in matvec(&a, &x, 3, false).iter().zip(&b) {
            assert!((got - want).norm() < 1e-13);
        }
        for (got, want) in matvec(&a, &y, 3, true).iter().zip(&b) {
            assert!((got - want).norm() < 1e-13);
        }
    }

    #[test]
    fn determinant_with_pivoting() {
        // det [[0, 1], [2, 3]] = −2 needs a row swap
        let lu = SmallLu::factor(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 2);
        assert!((lu.det() - c(-2.0, 0.0)).norm() < 1e-15);
        let diag = SmallLu::factor(&[c(0.0, 2.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)], 2);
        assert_eq!(diag.det(), c(0.0, 6.0));
        assert_eq!(SmallLu::factor(&[], 0).det(), c(1.0, 0.0));
    }

    #[test]
    fn singular_matrix_has_zero_det() {
        let lu = SmallLu::factor(&[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)], 2);
        assert_eq!(lu.det(), c(0.0, 0.0));
    }
}
