//! Symmetric banded matrices and their Cholesky factorization.

/// Lower band of a symmetric matrix: `band[i * (bw + 1) + d]` holds `A[i][i - d]`.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedMatrix {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Adds `v` to the symmetric pair `(i, j)`, `(j, i)`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(r, c);
        self.band[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.band[self.slot(r, c)]
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.band[s] += v;
        }
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n)
            .map(|i| self.band[self.slot(i, i)].abs())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.band[self.slot(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place Cholesky factor `A = L Lᵀ`; `None` if a pivot is not positive.
    pub fn cholesky(mut self) -> Option<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // L[i][j] = (A[i][j] - Σ_k L[i][k] L[j][k]) / L[j][j]
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = self.band[i * w + (i - j)];
                for k in klo..j {
                    s -= self.band[i * w + (i - k)] * self.band[j * w + (j - k)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    self.band[i * w] = s.sqrt();
                } else {
                    self.band[i * w + (i - j)] = s / self.band[j * w];
                }
            }
        }
        Some(BandedCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedMatrix,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let (n, bw, w) = (l.n, l.bw, l.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= l.band[i * w + (i - k)] * y[k];
            }
            y[i] = s / l.band[i * w];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in (i + 1)..=hi {
                s -= l.band[k * w + (k - i)] * y[k];
            }
            y[i] = s / l.band[i * w];
        }
        y
    }
}
