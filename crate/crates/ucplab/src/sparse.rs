//! Minimal CSR storage for the symmetric operators assembled here.

/// Compressed sparse row matrix; assembly combines duplicate entries.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub nrows: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Build from triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in &triplets {
            debug_assert!(r < nrows && c < nrows);
            if prev == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] = indices.len();
                prev = Some((r, c));
            }
        }
        for row in 0..nrows {
            if indptr[row + 1] < indptr[row] {
                indptr[row + 1] = indptr[row];
            }
        }
        CsrMatrix {
            nrows,
            indptr,
            indices,
            data,
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.nrows);
        for row in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.indptr[row]..self.indptr[row + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[row] = acc;
        }
    }

    /// Entry lookup (O(row nnz)); zero if absent.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        for k in self.indptr[row]..self.indptr[row + 1] {
            if self.indices[k] == col {
                return self.data[k];
            }
        }
        0.0
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.nrows);
        for row in 0..self.nrows {
            for k in self.indptr[row]..self.indptr[row + 1] {
                m[(row, self.indices[k])] += self.data[k];
            }
        }
        m
    }

    /// Maximum absolute asymmetry |a_ij - a_ji| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for row in 0..self.nrows {
            for k in self.indptr[row]..self.indptr[row + 1] {
                let col = self.indices[k];
                worst = worst.max((self.data[k] - self.get(col, row)).abs());
            }
        }
        worst
    }

    /// Gershgorin upper bound on the spectral radius.
    pub fn norm_estimate(&self) -> f64 {
        let mut worst = 0.0f64;
        for row in 0..self.nrows {
            let mut diag = 0.0;
            let mut off = 0.0;
            for k in self.indptr[row]..self.indptr[row + 1] {
                if self.indices[k] == row {
                    diag += self.data[k];
                } else {
                    off += self.data[k].abs();
                }
            }
            worst = worst.max(diag.abs() + off);
        }
        worst
    }

    /// Gershgorin lower bound on the smallest eigenvalue.
    pub fn lower_bound(&self) -> f64 {
        let mut lo = f64::INFINITY;
        for row in 0..self.nrows {
            let mut diag = 0.0;
            let mut off = 0.0;
            for k in self.indptr[row]..self.indptr[row + 1] {
                if self.indices[k] == row {
                    diag += self.data[k];
                } else {
                    off += self.data[k].abs();
                }
            }
            lo = lo.min(diag - off);
        }
        if lo.is_finite() {
            lo
        } else {
            0.0
        }
    }

    /// Maximum absolute entrywise difference.
    pub fn max_entry_diff(&self, other: &CsrMatrix) -> f64 {
        let mut worst = 0.0f64;
        for row in 0..self.nrows {
            for k in self.indptr[row]..self.indptr[row + 1] {
                worst = worst.max((self.data[k] - other.get(row, self.indices[k])).abs());
            }
            for k in other.indptr[row]..other.indptr[row + 1] {
                worst = worst.max((other.data[k] - self.get(row, other.indices[k])).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_combine_duplicates() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), -1.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matvec_matches_dense() {
        let m = CsrMatrix::from_triplets(
            3,
            vec![(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0), (2, 0, 0.5), (2, 2, 1.0)],
        );
        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 3];
        m.mul_vec(&x, &mut y);
        let dense = m.to_dense();
        let xd = nalgebra::DVector::from_row_slice(&x);
        let yd = dense * xd;
        for i in 0..3 {
            assert!((y[i] - yd[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_rows_handled() {
        let m = CsrMatrix::from_triplets(4, vec![(3, 3, 5.0)]);
        let x = [1.0; 4];
        let mut y = [0.0; 4];
        m.mul_vec(&x, &mut y);
        assert_eq!(y, [0.0, 0.0, 0.0, 5.0]);
    }
}
