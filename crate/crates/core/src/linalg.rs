//! Dense complex LU factorization with partial pivoting.
//!
//! The nodal systems built here stay below a few dozen unknowns, so a plain
//! row-major dense factorization is all the engine needs.

use num_complex::Complex64;

/// Relative pivot threshold below which a matrix is reported singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.n + col] += value;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|r| {
                self.data[r * self.n..(r + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Largest row sum of magnitudes.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.n)
            .map(|r| {
                self.data[r * self.n..(r + 1) * self.n]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Pivot that fell below the singularity threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub column: usize,
    pub magnitude: f64,
    pub threshold: f64,
}

/// Packed LU factors (unit lower triangle below the diagonal) plus the row
/// permutation chosen by partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(mut a: DenseMatrix) -> Result<Self, SingularPivot> {
        let n = a.n;
        let threshold = PIVOT_TOLERANCE * a.max_row_norm();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, mag) = (k..n)
                .map(|r| (r, a.get(r, k).norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(mag > threshold) {
                return Err(SingularPivot {
                    column: k,
                    magnitude: mag.max(0.0),
                    threshold,
                });
            }
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = a.get(k, k);
            for r in (k + 1)..n {
                let factor = a.get(r, k) / pivot;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                a.data[r * n + k] = factor;
                for c in (k + 1)..n {
                    let upper = a.data[k * n + c];
                    a.data[r * n + c] -= factor * upper;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.n;
        assert_eq!(b.len(), n, "right-hand side has wrong length");
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut acc = x[r];
            for c in 0..r {
                acc -= self.lu.get(r, c) * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                acc -= self.lu.get(r, c) * x[c];
            }
            x[r] = acc / self.lu.get(r, r);
        }
        x
    }
}
