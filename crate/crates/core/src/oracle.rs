//! Reference oracles used by the validation suite and the tests.
//!
//! These routines are deliberately naive: adaptive Gauss–Kronrod quadrature
//! for integrals and dense `NM×NM` matrices for the OTFS operators. They
//! share no code path with the closed forms and FFT implementations they
//! check. Dense operators are limited to `N·M ≤ 64`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::otfs::{BinGainGrid, DDPath};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
    let (value, err) = whole;
    if err <= tol || depth >= 48 {
        return value;
    }
    let mid = 0.5 * (a + b);
    let left = gk15(f, a, mid);
    let right = gk15(f, mid, b);
    adapt(f, a, mid, 0.5 * tol, left, depth + 1) + adapt(f, mid, b, 0.5 * tol, right, depth + 1)
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    // Seed the tolerance from a coarse pass over 16 panels.
    let panels = 16;
    let width = (b - a) / panels as f64;
    let pieces: Vec<(f64, f64, (f64, f64))> = (0..panels)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == panels { b } else { lo + width };
            (lo, hi, gk15(&f, lo, hi))
        })
        .collect();
    let estimate: f64 = pieces.iter().map(|p| p.2 .0).sum();
    let tol = (rel_tol * estimate.abs()).max(abs_tol) / panels as f64;
    pieces
        .into_iter()
        .map(|(lo, hi, whole)| adapt(&f, lo, hi, tol, whole, 0))
        .sum()
}

/// Integral of `f` over `[a, ∞)` through the map `x = a + t/(1-t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    integrate(
        |t: f64| {
            let s = 1.0 - t;
            let v = f(a + t / s);
            if v == 0.0 {
                0.0
            } else {
                v / (s * s)
            }
        },
        0.0,
        1.0,
        rel_tol,
        abs_tol,
    )
}

const DENSE_LIMIT: usize = 64;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        let mut out = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            out.set(i, i, v);
        }
        out
    }

    /// Unitary DFT matrix with entries `e^{-j2π ab/n}/√n`.
    pub fn dft(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        let scale = 1.0 / (n as f64).sqrt();
        for a in 0..n {
            for b in 0..n {
                let ang = -2.0 * std::f64::consts::PI * ((a * b) % n) as f64 / n as f64;
                out.set(a, b, Complex64::from_polar(scale, ang));
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.at(r, c).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.at(k, c);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.at(r, c) * v[c]).sum())
            .collect()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.at(r1, c1);
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out.set(r1 * other.rows + r2, c1 * other.cols + c2, a * other.at(r2, c2));
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.at(i, i)).sum()
    }
}

fn check_dense(n: usize, m: usize) -> Result<()> {
    if n * m > DENSE_LIMIT {
        return Err(Error::Unsupported(format!(
            "dense oracle limited to N*M <= {DENSE_LIMIT}, got {}",
            n * m
        )));
    }
    Ok(())
}

/// Explicit block-circulant DD channel matrix: each path contributes
/// `g` at `((n + n_p) mod N, (m + m_p) mod M)` for input index `(n, m)`.
pub fn block_circulant_matrix(paths: &[DDPath], n: usize, m: usize) -> Result<DenseMatrix> {
    check_dense(n, m)?;
    let nm = n * m;
    let mut h = DenseMatrix::zeros(nm, nm);
    for col_n in 0..n {
        for col_m in 0..m {
            let col = col_n * m + col_m;
            for p in paths {
                let row = ((col_n + p.doppler_tap) % n) * m + (col_m + p.delay_tap) % m;
                h.data[row * nm + col] += p.gain;
            }
        }
    }
    Ok(h)
}

/// Direct double sum over the first column of the DD channel matrix.
pub fn bin_gains_direct(first_column: &[Complex64], n: usize, m: usize) -> Vec<Complex64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = vec![Complex64::new(0.0, 0.0); n * m];
    for k in 0..n {
        for l in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for dn in 0..n {
                for dm in 0..m {
                    let a = first_column[dn * m + dm];
                    let ang = two_pi * ((l * dm) as f64 / m as f64 - (k * dn) as f64 / n as f64);
                    acc += a * Complex64::from_polar(1.0, ang);
                }
            }
            out[k * m + l] = acc;
        }
    }
    out
}

/// Direct double-sum ISFFT in `[k][l]` output layout.
pub fn isfft_direct(x: &[Complex64], n: usize, m: usize, tx_power: f64) -> Vec<Complex64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let scale = tx_power.sqrt() / ((n * m) as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); n * m];
    for k in 0..n {
        for l in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for dn in 0..n {
                for dm in 0..m {
                    let ang = two_pi * ((dn * k) as f64 / n as f64 - (dm * l) as f64 / m as f64);
                    acc += x[dn * m + dm] * Complex64::from_polar(1.0, ang);
                }
            }
            out[k * m + l] = acc * scale;
        }
    }
    out
}

/// Explicit ZF operator `(F_N^H ⊗ F_M) D^{-1} (F_N ⊗ F_M^H)`.
pub fn zf_matrix(d: &BinGainGrid) -> Result<DenseMatrix> {
    let (n, m) = d.shape();
    check_dense(n, m)?;
    let fnm = DenseMatrix::dft(n);
    let fm = DenseMatrix::dft(m);
    let left = fnm.adjoint().kron(&fm);
    let right = fnm.kron(&fm.adjoint());
    let inv: Vec<Complex64> = d.values().iter().map(|g| 1.0 / g).collect();
    Ok(left.matmul(&DenseMatrix::diagonal(&inv)).matmul(&right))
}

/// Noise enhancement from the trace of the explicit post-ZF covariance
/// `(F_N^H ⊗ F_M) D^{-1} D^{-H} (F_N ⊗ F_M^H)`, divided by `NM`.
pub fn phi_trace(d: &BinGainGrid) -> Result<f64> {
    let (n, m) = d.shape();
    check_dense(n, m)?;
    let theta = zf_matrix(d)?;
    let cov = theta.matmul(&theta.adjoint());
    Ok(cov.trace().re / (n * m) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_polynomials_and_exponentials() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-13, 1e-300);
        assert!((v - 9.0).abs() < 1e-12);
        let e = integrate_to_inf(|x| (-x).exp(), 0.0, 1e-13, 1e-300);
        assert!((e - 1.0).abs() < 1e-12);
        let g = integrate_to_inf(|x| x.powi(4) * (-2.0 * x).exp(), 0.0, 1e-13, 1e-300);
        assert!((g - 24.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn dft_is_unitary() {
        let f = DenseMatrix::dft(5);
        let id = f.matmul(&f.adjoint());
        for r in 0..5 {
            for c in 0..5 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((id.at(r, c) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dense_size_gate() {
        let p = [DDPath::new(0, 0, Complex64::new(1.0, 0.0))];
        assert!(block_circulant_matrix(&p, 8, 8).is_ok());
        assert!(block_circulant_matrix(&p, 8, 16).is_err());
    }
}
