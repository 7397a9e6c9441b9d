//! OTFS frame transforms, delay-Doppler channels and ZF/MRT processing.
//!
//! Frames are stored Doppler-major: entry `(n, m)` of an `N×M` DD frame
//! sits at `n*M + m`, matching the stacking `x = [x_0ᵀ … x_{N-1}ᵀ]ᵀ`.
//! Time-frequency frames and bin-gain grids use the same layout with
//! `(k, l)` at `k*M + l`.
//!
//! The DD channel for integer taps is block circulant and diagonalized by
//! `V = F_N ⊗ F_Mᴴ`; its eigenvalues are the bin gains `D^{k,l}`. All
//! `NM×NM` operators are applied through 2-D FFTs.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, Error, Result};

/// Delay-Doppler frame geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OTFSGrid {
    pub n_doppler: usize,
    pub m_delay: usize,
    /// Symbol period T in seconds. Physical scaling only.
    pub symbol_period: Option<f64>,
    /// Subcarrier spacing Δf in hertz. Physical scaling only.
    pub subcarrier_spacing: Option<f64>,
}

impl OTFSGrid {
    pub fn new(n_doppler: usize, m_delay: usize) -> Result<Self> {
        let g = Self {
            n_doppler,
            m_delay,
            symbol_period: None,
            subcarrier_spacing: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_physical(mut self, symbol_period: f64, subcarrier_spacing: f64) -> Result<Self> {
        self.symbol_period = Some(symbol_period);
        self.subcarrier_spacing = Some(subcarrier_spacing);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_doppler == 0 || self.m_delay == 0 {
            return Err(domain("OTFS grid needs N >= 1 and M >= 1"));
        }
        for (name, v) in [("symbol_period", self.symbol_period), ("subcarrier_spacing", self.subcarrier_spacing)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(domain(format!("{name} must be a positive finite value")));
                }
            }
        }
        if let (Some(t), Some(df)) = (self.symbol_period, self.subcarrier_spacing) {
            if ((t * df) - 1.0).abs() > 1e-9 {
                return Err(domain(format!("T·Δf must equal 1, got {}", t * df)));
            }
        }
        Ok(())
    }

    /// Number of bins `N·M`.
    pub fn bins(&self) -> usize {
        self.n_doppler * self.m_delay
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_doppler, self.m_delay)
    }
}

macro_rules! complex_grid {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            n: usize,
            m: usize,
            values: Vec<Complex64>,
        }

        impl $name {
            pub fn zeros(n: usize, m: usize) -> Self {
                Self { n, m, values: vec![Complex64::new(0.0, 0.0); n * m] }
            }

            pub fn from_vec(n: usize, m: usize, values: Vec<Complex64>) -> Result<Self> {
                if values.len() != n * m {
                    return Err(domain(format!(
                        "expected {} values for a {n}x{m} grid, got {}",
                        n * m,
                        values.len()
                    )));
                }
                Ok(Self { n, m, values })
            }

            /// `(N, M)`.
            pub fn shape(&self) -> (usize, usize) {
                (self.n, self.m)
            }

            pub fn values(&self) -> &[Complex64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [Complex64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<Complex64> {
                self.values
            }

            pub fn get(&self, row: usize, col: usize) -> Complex64 {
                self.values[row * self.m + col]
            }

            pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
                self.values[row * self.m + col] = v;
            }

            pub fn energy(&self) -> f64 {
                self.values.iter().map(|v| v.norm_sqr()).sum()
            }
        }
    };
}

complex_grid!(
    /// Delay-Doppler frame, row `n` holds the `M` delay entries.
    DDFrame
);
complex_grid!(
    /// Time-frequency frame, row `k` (time slot) holds `M` subcarriers `l`.
    TfFrame
);
complex_grid!(
    /// Frequency-bin channel gains `D^{k,l}`.
    BinGainGrid
);

/// Single integer-tap path of a delay-Doppler channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DDPath {
    pub delay_tap: usize,
    pub doppler_tap: usize,
    pub gain: Complex64,
}

impl DDPath {
    pub fn new(delay_tap: usize, doppler_tap: usize, gain: Complex64) -> Self {
        Self {
            delay_tap,
            doppler_tap,
            gain,
        }
    }
}

/// Distance, path-loss exponent and transmit power of one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub distance: f64,
    pub pathloss_exp: f64,
    pub tx_power: f64,
}

impl LinkGain {
    pub fn new(distance: f64, pathloss_exp: f64, tx_power: f64) -> Result<Self> {
        for (name, v) in [("distance", distance), ("pathloss_exp", pathloss_exp), ("tx_power", tx_power)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            distance,
            pathloss_exp,
            tx_power,
        })
    }

    /// Received amplitude scaling `√(Ps / d^α)`.
    pub fn amplitude(&self) -> f64 {
        (self.tx_power / self.distance.powf(self.pathloss_exp)).sqrt()
    }
}

#[derive(Clone, Copy)]
enum Dir {
    Forward,
    Inverse,
}

/// FFT plans for one grid shape. Buffers are allocated per call.
pub struct OtfsTransform {
    n: usize,
    m: usize,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
    fwd_m: Arc<dyn Fft<f64>>,
    inv_m: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OtfsTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OtfsTransform")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish()
    }
}

impl OtfsTransform {
    pub fn new(grid: &OTFSGrid) -> Result<Self> {
        grid.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            n: grid.n_doppler,
            m: grid.m_delay,
            fwd_n: planner.plan_fft_forward(grid.n_doppler),
            inv_n: planner.plan_fft_inverse(grid.n_doppler),
            fwd_m: planner.plan_fft_forward(grid.m_delay),
            inv_m: planner.plan_fft_inverse(grid.m_delay),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    fn check(&self, shape: (usize, usize)) -> Result<()> {
        if shape != (self.n, self.m) {
            return Err(Error::ShapeMismatch {
                expected: (self.n, self.m),
                found: shape,
            });
        }
        Ok(())
    }

    /// In-place 2-D DFT over an `N×M` row-major buffer, scaled by `scale`.
    fn transform(&self, data: &mut [Complex64], outer: Dir, inner: Dir, scale: f64) {
        let (n, m) = (self.n, self.m);
        match inner {
            Dir::Forward => self.fwd_m.process(data),
            Dir::Inverse => self.inv_m.process(data),
        }
        let mut cols = vec![Complex64::new(0.0, 0.0); n * m];
        for r in 0..n {
            for c in 0..m {
                cols[c * n + r] = data[r * m + c];
            }
        }
        match outer {
            Dir::Forward => self.fwd_n.process(&mut cols),
            Dir::Inverse => self.inv_n.process(&mut cols),
        }
        for r in 0..n {
            for c in 0..m {
                data[r * m + c] = cols[c * n + r] * scale;
            }
        }
    }

    fn unit_scale(&self) -> f64 {
        1.0 / ((self.n * self.m) as f64).sqrt()
    }

    /// `V x`, kernel `e^{-j2π kn/N} e^{+j2π lm/M}` (unitary).
    fn to_bins(&self, data: &mut [Complex64]) {
        self.transform(data, Dir::Forward, Dir::Inverse, self.unit_scale());
    }

    /// `Vᴴ x`, the inverse of [`Self::to_bins`].
    fn bins_to_dd(&self, data: &mut [Complex64]) {
        self.transform(data, Dir::Inverse, Dir::Forward, self.unit_scale());
    }

    /// Inverse symplectic finite Fourier transform, DD → TF.
    pub fn isfft(&self, x: &DDFrame, tx_power: f64) -> Result<TfFrame> {
        self.check(x.shape())?;
        let mut data = x.values.clone();
        self.transform(&mut data, Dir::Inverse, Dir::Forward, tx_power.sqrt() * self.unit_scale());
        TfFrame::from_vec(self.n, self.m, data)
    }

    /// Symplectic finite Fourier transform, TF → DD.
    pub fn sfft(&self, y: &TfFrame) -> Result<DDFrame> {
        self.check(y.shape())?;
        let mut data = y.values.clone();
        self.transform(&mut data, Dir::Forward, Dir::Inverse, self.unit_scale());
        DDFrame::from_vec(self.n, self.m, data)
    }

    pub fn bin_gains(&self, paths: &[DDPath]) -> Result<BinGainGrid> {
        let first = first_column(paths, self.n, self.m)?;
        let mut data = first;
        // D = √(NM) · V c for the first column c.
        self.transform(&mut data, Dir::Forward, Dir::Inverse, 1.0);
        BinGainGrid::from_vec(self.n, self.m, data)
    }

    /// Noiseless `√(Ps/d^α) H x` through the bin gains of `d_grid`.
    pub fn apply_bins(&self, x: &DDFrame, d_grid: &BinGainGrid, amplitude: f64) -> Result<DDFrame> {
        self.check(x.shape())?;
        self.check(d_grid.shape())?;
        let mut data = x.values.clone();
        self.to_bins(&mut data);
        for (v, d) in data.iter_mut().zip(&d_grid.values) {
            *v *= d * amplitude;
        }
        self.bins_to_dd(&mut data);
        DDFrame::from_vec(self.n, self.m, data)
    }

    pub fn apply_dd_channel<R: Rng + ?Sized>(
        &self,
        x: &DDFrame,
        paths: &[DDPath],
        link: &LinkGain,
        noise_power: f64,
        rng: &mut R,
    ) -> Result<DDFrame> {
        let d = self.bin_gains(paths)?;
        let mut y = self.apply_bins(x, &d, link.amplitude())?;
        add_noise(&mut y, noise_power, rng)?;
        Ok(y)
    }

    /// Sum of `K` precoded antenna frames through their own channels, plus noise.
    pub fn apply_miso_channel<R: Rng + ?Sized>(
        &self,
        frames: &[DDFrame],
        antenna_paths: &[Vec<DDPath>],
        link: &LinkGain,
        noise_power: f64,
        rng: &mut R,
    ) -> Result<DDFrame> {
        if frames.len() != antenna_paths.len() || frames.is_empty() {
            return Err(domain(format!(
                "need one path list per antenna frame, got {} frames and {} path lists",
                frames.len(),
                antenna_paths.len()
            )));
        }
        let mut y = DDFrame::zeros(self.n, self.m);
        for (frame, paths) in frames.iter().zip(antenna_paths) {
            let d = self.bin_gains(paths)?;
            let part = self.apply_bins(frame, &d, link.amplitude())?;
            for (acc, v) in y.values.iter_mut().zip(part.values) {
                *acc += v;
            }
        }
        add_noise(&mut y, noise_power, rng)?;
        Ok(y)
    }

    /// `Θ y = Vᴴ D^{-1} V y`.
    pub fn zf_equalize(&self, y: &DDFrame, d_grid: &BinGainGrid) -> Result<DDFrame> {
        self.check(y.shape())?;
        self.check(d_grid.shape())?;
        check_bins(d_grid.values.iter().map(|d| d.norm()), self.m)?;
        let mut data = y.values.clone();
        self.to_bins(&mut data);
        for (v, d) in data.iter_mut().zip(&d_grid.values) {
            *v /= d;
        }
        self.bins_to_dd(&mut data);
        DDFrame::from_vec(self.n, self.m, data)
    }

    /// Per-antenna frames `Vᴴ (w_i ⊙ V x)`, precoding every bin.
    pub fn mrt_precode(&self, x: &DDFrame, weights: &[BinGainGrid]) -> Result<Vec<DDFrame>> {
        self.check(x.shape())?;
        let mut bins = x.values.clone();
        self.to_bins(&mut bins);
        weights
            .iter()
            .map(|w| {
                self.check(w.shape())?;
                let mut data: Vec<Complex64> =
                    bins.iter().zip(&w.values).map(|(b, wi)| b * wi).collect();
                self.bins_to_dd(&mut data);
                DDFrame::from_vec(self.n, self.m, data)
            })
            .collect()
    }
}

fn first_column(paths: &[DDPath], n: usize, m: usize) -> Result<Vec<Complex64>> {
    if paths.is_empty() {
        return Err(domain("channel needs at least one path"));
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n * m];
    for p in paths {
        if p.delay_tap >= m || p.doppler_tap >= n {
            return Err(domain(format!(
                "path taps (delay {}, doppler {}) outside {n}x{m} grid",
                p.delay_tap, p.doppler_tap
            )));
        }
        col[p.doppler_tap * m + p.delay_tap] += p.gain;
    }
    Ok(col)
}

fn add_noise<R: Rng + ?Sized>(y: &mut DDFrame, noise_power: f64, rng: &mut R) -> Result<()> {
    if !(noise_power >= 0.0) || !noise_power.is_finite() {
        return Err(domain(format!("noise power must be >= 0, got {noise_power}")));
    }
    if noise_power > 0.0 {
        let normal = Normal::new(0.0, (0.5 * noise_power).sqrt()).map_err(|e| domain(e.to_string()))?;
        for v in y.values.iter_mut() {
            *v += Complex64::new(normal.sample(rng), normal.sample(rng));
        }
    }
    Ok(())
}

/// Relative threshold below which a bin counts as singular.
pub const SINGULAR_REL: f64 = 1e-12;

fn check_bins(mags: impl Iterator<Item = f64> + Clone, m: usize) -> Result<()> {
    let max = mags.clone().fold(0.0_f64, f64::max);
    for (i, mag) in mags.enumerate() {
        if !(mag > 0.0) || mag < SINGULAR_REL * max {
            return Err(Error::SingularChannel {
                k: i / m,
                l: i % m,
                magnitude: mag,
            });
        }
    }
    Ok(())
}

pub fn isfft(x: &DDFrame, tx_power: f64) -> Result<TfFrame> {
    let (n, m) = x.shape();
    OtfsTransform::new(&OTFSGrid::new(n, m)?)?.isfft(x, tx_power)
}

pub fn sfft(y: &TfFrame) -> Result<DDFrame> {
    let (n, m) = y.shape();
    OtfsTransform::new(&OTFSGrid::new(n, m)?)?.sfft(y)
}

/// `D^{k,l} = Σ_p g_p e^{j2π l m_p/M} e^{-j2π k n_p/N}`.
pub fn bin_gains_from_paths(paths: &[DDPath], grid: &OTFSGrid) -> Result<BinGainGrid> {
    OtfsTransform::new(grid)?.bin_gains(paths)
}

pub fn apply_dd_channel<R: Rng + ?Sized>(
    x: &DDFrame,
    paths: &[DDPath],
    link: &LinkGain,
    noise_power: f64,
    rng: &mut R,
) -> Result<DDFrame> {
    let (n, m) = x.shape();
    OtfsTransform::new(&OTFSGrid::new(n, m)?)?.apply_dd_channel(x, paths, link, noise_power, rng)
}

pub fn zf_equalize(y: &DDFrame, d_grid: &BinGainGrid) -> Result<DDFrame> {
    let (n, m) = y.shape();
    OtfsTransform::new(&OTFSGrid::new(n, m)?)?.zf_equalize(y, d_grid)
}

/// Noise-enhancement factor `(1/NM) Σ |D^{k,l}|^{-2}` of ZF equalization.
pub fn phi_zf(d_grid: &BinGainGrid) -> Result<f64> {
    let (_, m) = d_grid.shape();
    check_bins(d_grid.values.iter().map(|d| d.norm()), m)?;
    let n = d_grid.values.len() as f64;
    Ok(d_grid.values.iter().map(|d| 1.0 / d.norm_sqr()).sum::<f64>() / n)
}

fn antenna_energy(d_grids: &[BinGainGrid]) -> Result<(usize, usize, Vec<f64>)> {
    let first = d_grids
        .first()
        .ok_or_else(|| domain("MRT needs at least one antenna"))?;
    let shape = first.shape();
    let mut energy = vec![0.0; first.values.len()];
    for g in d_grids {
        if g.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: g.shape(),
            });
        }
        for (e, d) in energy.iter_mut().zip(&g.values) {
            *e += d.norm_sqr();
        }
    }
    check_bins(energy.iter().map(|e| e.sqrt()), shape.1)?;
    Ok((shape.0, shape.1, energy))
}

/// Per-bin MRT weights `w_i = D_iᴴ / √(Σ_k |D_k|²)`.
pub fn mrt_weights(d_grids: &[BinGainGrid]) -> Result<Vec<BinGainGrid>> {
    let (n, m, energy) = antenna_energy(d_grids)?;
    d_grids
        .iter()
        .map(|g| {
            let w = g
                .values
                .iter()
                .zip(&energy)
                .map(|(d, e)| d.conj() / e.sqrt())
                .collect();
            BinGainGrid::from_vec(n, m, w)
        })
        .collect()
}

/// Effective single-stream grid `Σ_i D_i w_i` after MRT precoding.
pub fn mrt_combined_grid(d_grids: &[BinGainGrid], weights: &[BinGainGrid]) -> Result<BinGainGrid> {
    if d_grids.len() != weights.len() || d_grids.is_empty() {
        return Err(domain("need matching, non-empty channel and weight lists"));
    }
    let (n, m) = d_grids[0].shape();
    let mut out = BinGainGrid::zeros(n, m);
    for (d, w) in d_grids.iter().zip(weights) {
        if d.shape() != (n, m) || w.shape() != (n, m) {
            return Err(Error::ShapeMismatch {
                expected: (n, m),
                found: if d.shape() != (n, m) { d.shape() } else { w.shape() },
            });
        }
        for ((acc, di), wi) in out.values.iter_mut().zip(&d.values).zip(&w.values) {
            *acc += di * wi;
        }
    }
    Ok(out)
}

/// `(1/NM) Σ_{k,l} 1 / Σ_i |D_i^{k,l}|²`.
pub fn phi_mrt(d_grids: &[BinGainGrid]) -> Result<f64> {
    let (_, _, energy) = antenna_energy(d_grids)?;
    Ok(energy.iter().map(|e| 1.0 / e).sum::<f64>() / energy.len() as f64)
}

/// Post-equalization SNR `Ps / (σ² φ d^α)`.
pub fn snr_from_phi(phi: f64, link: &LinkGain, noise_power: f64) -> f64 {
    link.tx_power / (noise_power * phi * link.distance.powf(link.pathloss_exp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::rng::Substream;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_frame(n: usize, m: usize, rng: &mut Substream) -> DDFrame {
        let v = (0..n * m)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        DDFrame::from_vec(n, m, v).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(OTFSGrid::new(0, 4).is_err());
        assert!(OTFSGrid::new(4, 4).unwrap().with_physical(1e-3, 1e3).is_ok());
        assert!(OTFSGrid::new(4, 4).unwrap().with_physical(1e-3, 2e3).is_err());
    }

    #[test]
    fn zero_and_impulse_transforms() {
        let z = DDFrame::zeros(4, 8);
        assert!(isfft(&z, 2.0).unwrap().values().iter().all(|v| v.norm() == 0.0));
        assert!(sfft(&TfFrame::zeros(4, 8)).unwrap().values().iter().all(|v| v.norm() == 0.0));
        let mut imp = DDFrame::zeros(4, 8);
        imp.set(0, 0, c(1.0, 0.0));
        let tf = isfft(&imp, 1.0).unwrap();
        let want = 1.0 / 32f64.sqrt();
        assert!(tf.values().iter().all(|v| (v - c(want, 0.0)).norm() < 1e-15));
        let back = sfft(&tf).unwrap();
        assert!(max_diff(back.values(), imp.values()) < 1e-15);
    }

    #[test]
    fn isfft_matches_direct_sum() {
        let mut rng = Substream::new(1, 0, 0);
        for &(n, m) in &[(2, 2), (4, 4), (3, 5), (8, 4)] {
            let x = random_frame(n, m, &mut rng);
            let fast = isfft(&x, 2.5).unwrap();
            let slow = oracle::isfft_direct(x.values(), n, m, 2.5);
            assert!(max_diff(fast.values(), &slow) < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_energy() {
        let mut rng = Substream::new(2, 0, 0);
        for &n in &[2, 4, 8, 16] {
            for &m in &[2, 4, 8, 16] {
                let x = random_frame(n, m, &mut rng);
                let ps = 3.0;
                let tf = isfft(&x, ps).unwrap();
                assert!((tf.energy() - ps * x.energy()).abs() < 1e-10 * x.energy());
                let back = sfft(&tf).unwrap();
                let scaled: Vec<Complex64> = x.values().iter().map(|v| v * ps.sqrt()).collect();
                assert!(max_diff(back.values(), &scaled) < 1e-10);
            }
        }
    }

    #[test]
    fn single_path_bin_gains() {
        let grid = OTFSGrid::new(4, 8).unwrap();
        let g = c(0.6, -0.3);
        let flat = bin_gains_from_paths(&[DDPath::new(0, 0, g)], &grid).unwrap();
        assert!(flat.values().iter().all(|d| (d - g).norm() < 1e-14));
        let ramp = bin_gains_from_paths(&[DDPath::new(3, 2, g)], &grid).unwrap();
        assert!(ramp.values().iter().all(|d| (d.norm() - g.norm()).abs() < 1e-14));
        assert!(bin_gains_from_paths(&[], &grid).is_err());
        assert!(bin_gains_from_paths(&[DDPath::new(8, 0, g)], &grid).is_err());
        assert!(bin_gains_from_paths(&[DDPath::new(0, 4, g)], &grid).is_err());
    }

    #[test]
    fn bin_gains_match_double_sum() {
        let mut rng = Substream::new(3, 0, 0);
        let grid = OTFSGrid::new(4, 4).unwrap();
        for _ in 0..20 {
            let paths: Vec<DDPath> = (0..2)
                .map(|_| {
                    DDPath::new(
                        rng.random_range(0..4),
                        rng.random_range(0..4),
                        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                    )
                })
                .collect();
            let fast = bin_gains_from_paths(&paths, &grid).unwrap();
            let col = first_column(&paths, 4, 4).unwrap();
            let slow = oracle::bin_gains_direct(&col, 4, 4);
            assert!(max_diff(fast.values(), &slow) < 1e-12);
        }
    }

    #[test]
    fn identity_channel_scales() {
        let mut rng = Substream::new(4, 0, 0);
        let x = random_frame(4, 4, &mut rng);
        let link = LinkGain::new(2.0, 2.0, 8.0).unwrap();
        let y = apply_dd_channel(&x, &[DDPath::new(0, 0, c(1.0, 0.0))], &link, 0.0, &mut rng).unwrap();
        let want: Vec<Complex64> = x.values().iter().map(|v| v * link.amplitude()).collect();
        assert!(max_diff(y.values(), &want) < 1e-14);
        assert!((link.amplitude() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn channel_matches_explicit_block_circulant() {
        let mut rng = Substream::new(5, 0, 0);
        let link = LinkGain::new(1.0, 2.0, 1.0).unwrap();
        for &(n, m) in &[(4, 4), (2, 4), (4, 2), (3, 3)] {
            let paths = vec![
                DDPath::new(1 % m, 2 % n, c(0.8, 0.1)),
                DDPath::new(m - 1, 1, c(-0.2, 0.5)),
            ];
            let x = random_frame(n, m, &mut rng);
            let y = apply_dd_channel(&x, &paths, &link, 0.0, &mut rng).unwrap();
            let h = oracle::block_circulant_matrix(&paths, n, m).unwrap();
            let want = h.matvec(x.values());
            assert!(max_diff(y.values(), &want) < 1e-10);
        }
    }

    #[test]
    fn noise_only_variance() {
        let mut rng = Substream::new(6, 0, 0);
        let link = LinkGain::new(1.0, 2.0, 1.0).unwrap();
        let x = DDFrame::zeros(16, 16);
        let paths = [DDPath::new(0, 0, c(1.0, 0.0))];
        let mut acc = 0.0;
        let mut count = 0usize;
        while count < 100_000 {
            let y = apply_dd_channel(&x, &paths, &link, 0.7, &mut rng).unwrap();
            acc += y.energy();
            count += 256;
        }
        let var = acc / count as f64;
        assert!((var - 0.7).abs() < 0.01, "{var}");
    }

    #[test]
    fn zf_flat_identity_and_singular() {
        let mut rng = Substream::new(7, 0, 0);
        let x = random_frame(4, 4, &mut rng);
        let grid = OTFSGrid::new(4, 4).unwrap();
        let flat = bin_gains_from_paths(&[DDPath::new(0, 0, c(1.0, 0.0))], &grid).unwrap();
        let out = zf_equalize(&x, &flat).unwrap();
        assert!(max_diff(out.values(), x.values()) < 1e-14);

        let mut bad = flat.clone();
        bad.set(2, 3, c(0.0, 0.0));
        match zf_equalize(&x, &bad) {
            Err(Error::SingularChannel { k, l, .. }) => assert_eq!((k, l), (2, 3)),
            other => panic!("expected singular channel, got {other:?}"),
        }
        let mut tiny = flat.clone();
        tiny.set(1, 0, c(1e-14, 0.0));
        assert!(matches!(phi_zf(&tiny), Err(Error::SingularChannel { k: 1, l: 0, .. })));
    }

    #[test]
    fn zf_recovers_random_qpsk() {
        let mut rng = Substream::new(8, 0, 0);
        let grid = OTFSGrid::new(8, 8).unwrap();
        let tr = OtfsTransform::new(&grid).unwrap();
        let link = LinkGain::new(3.0, 2.0, 5.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = DDFrame::from_vec(
            8,
            8,
            (0..64)
                .map(|_| {
                    c(
                        if rng.random::<bool>() { s } else { -s },
                        if rng.random::<bool>() { s } else { -s },
                    )
                })
                .collect(),
        )
        .unwrap();
        let paths = [
            DDPath::new(0, 0, c(1.0, 0.0)),
            DDPath::new(3, 5, c(0.4, -0.3)),
        ];
        let d = tr.bin_gains(&paths).unwrap();
        let y = tr.apply_dd_channel(&x, &paths, &link, 0.0, &mut rng).unwrap();
        let xr = tr.zf_equalize(&y, &d).unwrap();
        let want: Vec<Complex64> = x.values().iter().map(|v| v * link.amplitude()).collect();
        let err = max_diff(xr.values(), &want) / link.amplitude();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn zf_matches_dense_operator() {
        let mut rng = Substream::new(9, 0, 0);
        let grid = OTFSGrid::new(4, 4).unwrap();
        let paths = [DDPath::new(0, 0, c(1.0, 0.2)), DDPath::new(2, 1, c(0.3, 0.3))];
        let d = bin_gains_from_paths(&paths, &grid).unwrap();
        let y = random_frame(4, 4, &mut rng);
        let fast = zf_equalize(&y, &d).unwrap();
        let theta = oracle::zf_matrix(&d).unwrap();
        assert!(max_diff(fast.values(), &theta.matvec(y.values())) < 1e-12);
    }

    #[test]
    fn phi_zf_values() {
        let ones = BinGainGrid::from_vec(2, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.6, 0.8)]).unwrap();
        assert!((phi_zf(&ones).unwrap() - 1.0).abs() < 1e-15);
        let two = BinGainGrid::from_vec(1, 2, vec![c(1.0, 0.0), c(0.0, 2.0)]).unwrap();
        assert!((phi_zf(&two).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn phi_zf_matches_trace_oracle() {
        let mut rng = Substream::new(10, 0, 0);
        let d = BinGainGrid::from_vec(
            4,
            4,
            (0..16)
                .map(|_| c(rng.random::<f64>() + 0.2, rng.random::<f64>() - 0.5))
                .collect(),
        )
        .unwrap();
        let fast = phi_zf(&d).unwrap();
        let slow = oracle::phi_trace(&d).unwrap();
        assert!(((fast - slow) / slow).abs() < 1e-10);
    }

    #[test]
    fn mrt_weight_properties() {
        let single = vec![BinGainGrid::from_vec(1, 2, vec![c(3.0, 4.0), c(0.0, -2.0)]).unwrap()];
        let w = mrt_weights(&single).unwrap();
        assert!(w[0].values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        assert!((w[0].get(0, 0) - c(0.6, -0.8)).norm() < 1e-15);

        let grids = vec![
            BinGainGrid::from_vec(1, 1, vec![c(3.0, 0.0)]).unwrap(),
            BinGainGrid::from_vec(1, 1, vec![c(0.0, 4.0)]).unwrap(),
        ];
        let w = mrt_weights(&grids).unwrap();
        let norm: f64 = w.iter().map(|g| g.get(0, 0).norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
        let comb = mrt_combined_grid(&grids, &w).unwrap();
        assert!((comb.get(0, 0) - c(5.0, 0.0)).norm() < 1e-14);

        let zero = vec![
            BinGainGrid::from_vec(1, 2, vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap(),
            BinGainGrid::from_vec(1, 2, vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap(),
        ];
        assert!(matches!(mrt_weights(&zero), Err(Error::SingularChannel { k: 0, l: 0, .. })));
        assert!(mrt_weights(&[]).is_err());
    }

    #[test]
    fn phi_mrt_reductions() {
        let unit = BinGainGrid::from_vec(2, 2, vec![c(1.0, 0.0); 4]).unwrap();
        let k4 = vec![unit.clone(); 4];
        assert!((phi_mrt(&k4).unwrap() - 0.25).abs() < 1e-15);

        let mut rng = Substream::new(12, 0, 0);
        let rand_grid = |rng: &mut Substream| {
            BinGainGrid::from_vec(
                4,
                4,
                (0..16)
                    .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect(),
            )
            .unwrap()
        };
        let g1 = rand_grid(&mut rng);
        assert!((phi_mrt(std::slice::from_ref(&g1)).unwrap() - phi_zf(&g1).unwrap()).abs() < 1e-12);
        let grids: Vec<BinGainGrid> = (0..4).map(|_| rand_grid(&mut rng)).collect();
        let w = mrt_weights(&grids).unwrap();
        let comb = mrt_combined_grid(&grids, &w).unwrap();
        assert!(comb.values().iter().all(|v| v.im.abs() < 1e-14 && v.re > 0.0));
        let a = phi_mrt(&grids).unwrap();
        let b = phi_zf(&comb).unwrap();
        assert!(((a - b) / b).abs() < 1e-10);
    }

    #[test]
    fn snr_arithmetic() {
        let link = LinkGain::new(1.0, 2.0, 1.0).unwrap();
        assert!((snr_from_phi(1.0, &link, 1.0) - 1.0).abs() < 1e-15);
        assert!((snr_from_phi(2.0, &link, 1.0) - 0.5).abs() < 1e-15);
        let link = LinkGain::new(2.0, 2.0, 2.0).unwrap();
        assert!((snr_from_phi(0.5, &link, 1.0) - 1.0).abs() < 1e-15);
        assert!(LinkGain::new(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let tr = OtfsTransform::new(&OTFSGrid::new(4, 4).unwrap()).unwrap();
        let bad = DDFrame::zeros(2, 8);
        assert!(matches!(tr.sfft(&TfFrame::zeros(2, 8)), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(tr.isfft(&bad, 1.0), Err(Error::ShapeMismatch { .. })));
    }
}
