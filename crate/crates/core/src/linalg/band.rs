//! Symmetric band matrices stored by lower diagonals.

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Lower band of a symmetric matrix: entry `(i, i - d)` for `d ≤ bandwidth`.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    /// Lower band of `a + shift·b`.
    pub fn from_csr_combination(a: &CsrMatrix, shift: f64, b: Option<&CsrMatrix>) -> Self {
        let bw = b.map_or(a.bandwidth(), |b| a.bandwidth().max(b.bandwidth()));
        let mut out = Self::zeros(a.dim(), bw);
        for (i, j, v) in a.iter() {
            if j <= i {
                *out.at_mut(i, j) += v;
            }
        }
        if let Some(b) = b {
            for (i, j, v) in b.iter() {
                if j <= i {
                    *out.at_mut(i, j) += shift * v;
                }
            }
        }
        out
    }

    pub fn from_csr(a: &CsrMatrix) -> Self {
        Self::from_csr_combination(a, 0.0, None)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Entry `(i, j)` with `j ≤ i`; zero outside the band.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }
}

/// Band Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    l: SymBand,
}

impl BandCholesky {
    pub fn factor(mut a: SymBand) -> Result<Self> {
        let (n, bw) = (a.n, a.bw);
        for j in 0..n {
            let k0 = j.saturating_sub(bw);
            let mut s = a.at(j, j);
            for k in k0..j {
                let l = a.at(j, k);
                s -= l * l;
            }
            if !(s > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    row: j,
                    pivot: s,
                    context: "band Cholesky".into(),
                });
            }
            let d = s.sqrt();
            *a.at_mut(j, j) = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let k0 = i.saturating_sub(bw);
                let mut s = a.at(i, j);
                for k in k0..j {
                    s -= a.at(i, k) * a.at(j, k);
                }
                *a.at_mut(i, j) = s / d;
            }
        }
        Ok(Self { l: a })
    }

    pub fn dim(&self) -> usize {
        self.l.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.l.n, self.l.bw);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l.at(i, k) * x[k];
            }
            x[i] = s / self.l.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l.at(k, i) * x[k];
            }
            x[i] = s / self.l.at(i, i);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.l.n).map(|i| 2.0 * self.l.at(i, i).ln()).sum()
    }
}

/// Signature of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    pub(crate) fn add_block(&mut self, a: f64, c: f64, e: f64) {
        let det = a * e - c * c;
        if det < 0.0 {
            self.negative += 1;
            self.positive += 1;
        } else if det > 0.0 {
            if a + e > 0.0 {
                self.positive += 2;
            } else {
                self.negative += 2;
            }
        } else {
            self.zero += 1;
            self.add_scalar(a + e);
        }
    }

    pub(crate) fn add_scalar(&mut self, d: f64) {
        if d > 0.0 {
            self.positive += 1;
        } else if d < 0.0 {
            self.negative += 1;
        } else {
            self.zero += 1;
        }
    }
}

/// Bunch–Kaufman growth parameter `(1 + √17)/8`.
pub(crate) const BK_ALPHA: f64 = 0.640_388_203_202_208_4;

/// Inertia of a symmetric band matrix from a block `LDLᵀ` factorization.
///
/// Pivots are 1×1 or 2×2 blocks on adjacent rows chosen with the
/// Bunch–Kaufman test restricted to the next row; no interchanges are made,
/// so fill stays inside the band. A pivot that vanishes exactly is reported
/// as [`Inertia::zero`].
pub fn band_inertia(mut w: SymBand) -> Inertia {
    let (n, bw) = (w.n, w.bw);
    let mut inertia = Inertia::default();
    let mut k = 0;
    while k < n {
        let last = (k + bw).min(n - 1);
        let akk = w.at(k, k);
        let omega = (k + 1..=last).map(|i| w.at(i, k).abs()).fold(0.0, f64::max);
        let use_two = k + 1 < n && akk.abs() < BK_ALPHA * omega && {
            let (c, e) = (w.at(k + 1, k), w.at(k + 1, k + 1));
            let det = akk * e - c * c;
            let scale = akk.abs().max(c.abs()).max(e.abs());
            det.abs() > 1e-14 * scale * scale
        };
        if !use_two {
            inertia.add_scalar(akk);
            if akk == 0.0 {
                k += 1;
                continue;
            }
            for j in k + 1..=last {
                let ljk = w.at(j, k) / akk;
                if ljk == 0.0 {
                    continue;
                }
                for i in j..=last {
                    let v = w.at(i, k);
                    *w.at_mut(i, j) -= v * ljk;
                }
            }
            k += 1;
        } else {
            let (a, c, e) = (akk, w.at(k + 1, k), w.at(k + 1, k + 1));
            inertia.add_block(a, c, e);
            let det = a * e - c * c;
            let last2 = (k + 1 + bw).min(n - 1);
            // rows i ≥ k+2: [x_i, y_i] = [W(i,k), W(i,k+1)]; update with D⁻¹.
            for j in k + 2..=last2 {
                let (xj, yj) = (w.at(j, k), w.at(j, k + 1));
                if xj == 0.0 && yj == 0.0 {
                    continue;
                }
                // D⁻¹ [xj, yj]ᵀ
                let pj = (e * xj - c * yj) / det;
                let qj = (a * yj - c * xj) / det;
                for i in j..=last2 {
                    let (xi, yi) = (w.at(i, k), w.at(i, k + 1));
                    *w.at_mut(i, j) -= xi * pj + yi * qj;
                }
            }
            k += 2;
        }
    }
    inertia
}
