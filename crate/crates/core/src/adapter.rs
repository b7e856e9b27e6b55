//! Low-rank adapter arithmetic at double precision.
//!
//! A frozen base matrix `W0` (d×k) is adjusted by the product of two thin
//! matrices, `B` (d×r) and `A` (r×k), scaled by `alpha / r`:
//!
//! ```text
//! forward(x) = W0·x + (alpha/r)·B·(A·x)
//! merge()    = W0 + (alpha/r)·B·A
//! ```
//!
//! Both routes use fixed summation order so results are reproducible
//! bit-for-bit on a given platform.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdapterError {
    #[error("{what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: String,
        got: String,
    },
    #[error("rank {rank} must be in 1..={max}")]
    Rank { rank: usize, max: usize },
    #[error("matrix data length {len} does not fill {rows}x{cols}")]
    Shape { rows: usize, cols: usize, len: usize },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AdapterError> {
        if data.len() != rows * cols {
            return Err(AdapterError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AdapterError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(AdapterError::Shape {
                    rows: rows.len(),
                    cols,
                    len: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn shape(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    /// Matrix-vector product, each entry summed left to right.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, AdapterError> {
        if x.len() != self.cols {
            return Err(AdapterError::Dimension {
                what: "input vector length",
                expected: self.cols.to_string(),
                got: x.len().to_string(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).fold(0.0, |acc, (w, v)| acc + w * v))
            .collect())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, AdapterError> {
        if self.cols != other.rows {
            return Err(AdapterError::Dimension {
                what: "inner dimension",
                expected: self.cols.to_string(),
                got: other.rows.to_string(),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for t in 0..self.cols {
                    acc += self.get(i, t) * other.get(t, j);
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }
}

/// A base matrix with its low-rank update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterConfig {
    base: Matrix,
    down: Matrix,
    up: Matrix,
    alpha: f64,
}

impl AdapterConfig {
    /// `base` is W0 (d×k), `down` is A (r×k), `up` is B (d×r).
    pub fn new(base: Matrix, down: Matrix, up: Matrix, alpha: f64) -> Result<Self, AdapterError> {
        let (d, k) = (base.rows, base.cols);
        let rank = down.rows;
        let max = d.min(k);
        if rank == 0 || rank > max {
            return Err(AdapterError::Rank { rank, max });
        }
        if down.cols != k {
            return Err(AdapterError::Dimension {
                what: "A shape",
                expected: format!("{rank}x{k}"),
                got: down.shape(),
            });
        }
        if up.rows != d || up.cols != rank {
            return Err(AdapterError::Dimension {
                what: "B shape",
                expected: format!("{d}x{rank}"),
                got: up.shape(),
            });
        }
        Ok(Self {
            base,
            down,
            up,
            alpha,
        })
    }

    pub fn d(&self) -> usize {
        self.base.rows
    }

    pub fn k(&self) -> usize {
        self.base.cols
    }

    pub fn rank(&self) -> usize {
        self.down.rows
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base(&self) -> &Matrix {
        &self.base
    }

    pub fn scale(&self) -> f64 {
        self.alpha / self.rank() as f64
    }
}

/// `W0·x + (alpha/r)·B·(A·x)` without materializing the merged matrix.
pub fn adapter_forward(cfg: &AdapterConfig, x: &[f64]) -> Result<Vec<f64>, AdapterError> {
    let base = cfg.base.apply(x)?;
    let projected = cfg.down.apply(x)?;
    let delta = cfg.up.apply(&projected)?;
    let scale = cfg.scale();
    Ok(base
        .into_iter()
        .zip(delta)
        .map(|(b, d)| b + scale * d)
        .collect())
}

/// `W0 + (alpha/r)·B·A` as a dense d×k matrix.
pub fn adapter_merge(cfg: &AdapterConfig) -> Result<Matrix, AdapterError> {
    let delta = cfg.up.matmul(&cfg.down)?;
    let scale = cfg.scale();
    let data = cfg
        .base
        .data
        .iter()
        .zip(&delta.data)
        .map(|(w, d)| w + scale * d)
        .collect();
    Matrix::from_row_major(cfg.d(), cfg.k(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn scalar_case() {
        let cfg = AdapterConfig::new(m(&[&[2.0]]), m(&[&[3.0]]), m(&[&[4.0]]), 2.0).unwrap();
        assert_eq!(adapter_forward(&cfg, &[1.0]).unwrap(), vec![26.0]);
        let merged = adapter_merge(&cfg).unwrap();
        assert_eq!(merged, m(&[&[26.0]]));
        assert_eq!(merged.apply(&[1.0]).unwrap(), vec![26.0]);
    }

    #[test]
    fn zero_update_is_base() {
        let base = m(&[&[1.5, -2.0, 0.25], &[3.0, 0.1, -7.0]]);
        let down = m(&[&[0.3, 0.7, -1.1]]);
        let cfg = AdapterConfig::new(base.clone(), down, Matrix::zeros(2, 1), 16.0).unwrap();
        let x = [0.9, -0.4, 2.2];
        assert_eq!(adapter_forward(&cfg, &x).unwrap(), base.apply(&x).unwrap());
        assert_eq!(adapter_merge(&cfg).unwrap(), base);
    }

    #[test]
    fn rejects_bad_shapes() {
        let base = Matrix::zeros(3, 2);
        assert_eq!(
            AdapterConfig::new(base.clone(), Matrix::zeros(3, 2), Matrix::zeros(3, 3), 1.0)
                .unwrap_err(),
            AdapterError::Rank { rank: 3, max: 2 }
        );
        assert!(matches!(
            AdapterConfig::new(base.clone(), Matrix::zeros(1, 3), Matrix::zeros(3, 1), 1.0),
            Err(AdapterError::Dimension { what: "A shape", .. })
        ));
        assert!(matches!(
            AdapterConfig::new(base.clone(), Matrix::zeros(1, 2), Matrix::zeros(2, 1), 1.0),
            Err(AdapterError::Dimension { what: "B shape", .. })
        ));
        assert!(AdapterConfig::new(base.clone(), Matrix::zeros(0, 2), Matrix::zeros(3, 0), 1.0).is_err());
        let cfg =
            AdapterConfig::new(base, Matrix::zeros(1, 2), Matrix::zeros(3, 1), 1.0).unwrap();
        assert!(matches!(
            adapter_forward(&cfg, &[1.0, 2.0, 3.0]),
            Err(AdapterError::Dimension { .. })
        ));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Matrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
    }
}
