//! Monte Carlo validation of the analytical approximations.
//!
//! Each trial draws its own substream from `(master_seed, domain, trial)`,
//! and results are collected in trial order, so output is bit-identical
//! for any worker count. Bin gains are drawn i.i.d. across the `N×M` grid
//! (the statistical model the closed forms assume); the physically
//! correlated frame model is exercised by [`frame_consistency_check`].

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::fading::{NakagamiParams, NakagamiPowerSampler, SRParams, SrGainSampler};
use crate::otfs::{
    mrt_combined_grid, mrt_weights, phi_mrt, phi_zf, BinGainGrid, DDFrame, DDPath, LinkGain,
    OTFSGrid, OtfsTransform,
};
use crate::outage::LinkBudget;
use crate::rng::{domain as stream, Substream};

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;
/// z for a two-sided 99% interval.
pub const Z99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MCConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub histogram_bins: usize,
}

impl MCConfig {
    pub const DEFAULT_TRIALS: usize = 100_000;
    pub const DEFAULT_BINS: usize = 50;

    pub fn new(trials: usize, master_seed: u64) -> Self {
        Self {
            trials,
            master_seed,
            workers: 1,
            histogram_bins: Self::DEFAULT_BINS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(domain("Monte Carlo needs trials >= 1"));
        }
        if self.workers == 0 {
            return Err(domain("Monte Carlo needs workers >= 1"));
        }
        if self.histogram_bins < 10 {
            return Err(domain("histogram needs at least 10 bins"));
        }
        Ok(())
    }
}

impl Default for MCConfig {
    fn default() -> Self {
        Self::new(Self::DEFAULT_TRIALS, 0)
    }
}

/// Outage estimate with its two-sided 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OPEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub failures: usize,
    pub trials: usize,
}

impl OPEstimate {
    pub fn from_counts(failures: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(failures, trials, Z95);
        Self {
            p_hat: failures as f64 / trials as f64,
            ci_low,
            ci_high,
            failures,
            trials,
        }
    }

    pub fn interval(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.failures, self.trials, z)
    }
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo.min(p), hi.max(p))
}

/// Simulated φ draws. `mean_defined` is false when `E[φ]` diverges
/// (Nakagami `m ≤ 1`, or a single SR antenna), samples are still produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSamples {
    pub values: Vec<f64>,
    pub mean_defined: bool,
}

fn run_trials<F>(cfg: &MCConfig, domain_tag: u64, trial: F) -> Result<Vec<f64>>
where
    F: Fn(&mut Substream) -> f64 + Sync,
{
    cfg.validate()?;
    let seed = cfg.master_seed;
    let body = || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| trial(&mut Substream::new(seed, domain_tag, i)))
            .collect::<Vec<f64>>()
    };
    if cfg.workers == 1 {
        return Ok((0..cfg.trials as u64)
            .map(|i| trial(&mut Substream::new(seed, domain_tag, i)))
            .collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| domain(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(body))
}

/// Per trial: `NM` independent bin sums `ρ = Σ_i |h_i|²`, then `φ = mean(1/ρ)`.
pub fn sim_phi_sr(p: &SRParams, antennas: usize, grid: &OTFSGrid, cfg: &MCConfig) -> Result<PhiSamples> {
    if antennas == 0 {
        return Err(domain("need at least one antenna"));
    }
    grid.validate()?;
    let sampler = SrGainSampler::new(p)?;
    let bins = grid.bins();
    let values = run_trials(cfg, stream::LINK_SR, |rng| {
        let mut acc = 0.0;
        for _ in 0..bins {
            let rho: f64 = (0..antennas).map(|_| sampler.sample_power(rng)).sum();
            acc += 1.0 / rho;
        }
        acc / bins as f64
    })?;
    Ok(PhiSamples {
        values,
        mean_defined: antennas >= 2,
    })
}

/// Per trial: `NM` i.i.d. Nakagami powers, `φ = mean(1/|D|²)`.
pub fn sim_phi_rd(p: &NakagamiParams, grid: &OTFSGrid, cfg: &MCConfig) -> Result<PhiSamples> {
    grid.validate()?;
    let sampler = NakagamiPowerSampler::new(p)?;
    let bins = grid.bins();
    let values = run_trials(cfg, stream::LINK_RD, |rng| {
        let mut acc = 0.0;
        for _ in 0..bins {
            acc += 1.0 / sampler.sample(rng);
        }
        acc / bins as f64
    })?;
    Ok(PhiSamples {
        values,
        mean_defined: p.m > 1.0,
    })
}

/// Fraction of trials with post-ZF SNR at or below `γ_th`.
pub fn mc_outage(phi: &[f64], budget: &LinkBudget) -> Result<OPEstimate> {
    if phi.is_empty() {
        return Err(domain("outage estimate needs at least one sample"));
    }
    budget.validate()?;
    let t = budget.phi_threshold();
    let failures = phi.iter().filter(|&&v| v >= t).count();
    Ok(OPEstimate::from_counts(failures, phi.len()))
}

/// DF outage: a paired trial fails if either hop fails.
pub fn mc_outage_e2e(
    phi1: &[f64],
    phi2: &[f64],
    budget1: &LinkBudget,
    budget2: &LinkBudget,
) -> Result<OPEstimate> {
    if phi1.len() != phi2.len() {
        return Err(domain(format!(
            "paired samples need equal lengths, got {} and {}",
            phi1.len(),
            phi2.len()
        )));
    }
    if phi1.is_empty() {
        return Err(domain("outage estimate needs at least one sample"));
    }
    budget1.validate()?;
    budget2.validate()?;
    let (t1, t2) = (budget1.phi_threshold(), budget2.phi_threshold());
    let failures = phi1
        .iter()
        .zip(phi2)
        .filter(|(a, b)| **a >= t1 || **b >= t2)
        .count();
    Ok(OPEstimate::from_counts(failures, phi1.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMetrics {
    pub nmse: f64,
    pub kl: f64,
    pub bins: usize,
    pub support: (f64, f64),
}

/// Histogram of the samples next to the model on the same bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFit {
    pub edges: Vec<f64>,
    pub hist_density: Vec<f64>,
    pub model_density: Vec<f64>,
    pub metrics: FitMetrics,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Composite Simpson mass of `pdf` over `[a, b]`.
fn bin_mass<F: Fn(f64) -> f64>(pdf: &F, a: f64, b: f64) -> f64 {
    const PANELS: usize = 32;
    let h = (b - a) / PANELS as f64;
    let mut acc = pdf(a) + pdf(b);
    for i in 1..PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * pdf(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Histogram on the 0.1–99.9 percentile range against model bin masses.
///
/// Both the empirical and model masses are normalized over the support.
/// NMSE compares bin densities, KL compares masses with model masses
/// floored at 1e-12.
pub fn histogram_fit<F>(samples: &[f64], model_pdf: F, cfg: &MCConfig) -> Result<HistogramFit>
where
    F: Fn(f64) -> f64,
{
    let bins = cfg.histogram_bins;
    if bins < 10 {
        return Err(domain("histogram needs at least 10 bins"));
    }
    if samples.len() < 10 * bins {
        return Err(domain(format!(
            "fit needs at least {} samples for {bins} bins, got {}",
            10 * bins,
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(domain("samples must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&sorted, 0.001);
    let hi = quantile_sorted(&sorted, 0.999);
    if !(hi > lo) {
        return Err(domain("degenerate histogram support: samples are (nearly) constant"));
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();

    let mut counts = vec![0usize; bins];
    for &v in &sorted {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let in_range: usize = counts.iter().sum();
    let emp_mass: Vec<f64> = counts.iter().map(|&c| c as f64 / in_range as f64).collect();

    let raw_model: Vec<f64> = edges.windows(2).map(|e| bin_mass(&model_pdf, e[0], e[1]).max(0.0)).collect();
    let model_total: f64 = raw_model.iter().sum();
    if !(model_total > 0.0) || !model_total.is_finite() {
        return Err(domain("model assigns no probability mass to the histogram support"));
    }
    let model_mass: Vec<f64> = raw_model.iter().map(|m| m / model_total).collect();

    let hist_density: Vec<f64> = emp_mass.iter().map(|m| m / width).collect();
    let model_density: Vec<f64> = model_mass.iter().map(|m| m / width).collect();
    let num: f64 = hist_density
        .iter()
        .zip(&model_density)
        .map(|(e, m)| (e - m) * (e - m))
        .sum();
    let den: f64 = hist_density.iter().map(|e| e * e).sum();
    let kl: f64 = emp_mass
        .iter()
        .zip(&model_mass)
        .filter(|(e, _)| **e > 0.0)
        .map(|(e, m)| e * (e / m.max(1e-12)).ln())
        .sum();
    Ok(HistogramFit {
        edges,
        hist_density,
        model_density,
        metrics: FitMetrics {
            nmse: num / den,
            kl: kl.max(0.0),
            bins,
            support: (lo, hi),
        },
    })
}

pub fn fit_metrics<F>(samples: &[f64], model_pdf: F, cfg: &MCConfig) -> Result<FitMetrics>
where
    F: Fn(f64) -> f64,
{
    histogram_fit(samples, model_pdf, cfg).map(|h| h.metrics)
}

/// One physical-frame configuration: path lists per transmit antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyCase {
    pub name: String,
    pub grid: OTFSGrid,
    pub antenna_paths: Vec<Vec<DDPath>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyResult {
    pub name: String,
    /// `phi_zf` (one antenna) or `phi_mrt` of the bin grids.
    pub expected: f64,
    /// Mean post-ZF error power over the noise draws.
    pub observed: f64,
    pub rel_error: f64,
    pub passed: bool,
    pub skipped: Option<String>,
}

pub const CONSISTENCY_TOL: f64 = 0.02;
pub const CONSISTENCY_DRAWS: usize = 10_000;

/// Random QPSK frames through the full precode/channel/ZF chain with unit
/// noise power; the mean squared error per entry must match φ of the bin
/// grids within 2%.
pub fn frame_consistency_check(
    cases: &[ConsistencyCase],
    draws: usize,
    cfg: &MCConfig,
) -> Vec<ConsistencyResult> {
    cases
        .iter()
        .enumerate()
        .map(|(idx, case)| match run_consistency_case(case, idx as u64, draws, cfg) {
            Ok(r) => r,
            Err(e) => ConsistencyResult {
                name: case.name.clone(),
                expected: f64::NAN,
                observed: f64::NAN,
                rel_error: f64::NAN,
                passed: false,
                skipped: Some(e.to_string()),
            },
        })
        .collect()
}

fn run_consistency_case(case: &ConsistencyCase, idx: u64, draws: usize, cfg: &MCConfig) -> Result<ConsistencyResult> {
    if draws == 0 {
        return Err(domain("consistency check needs at least one noise draw"));
    }
    let tr = OtfsTransform::new(&case.grid)?;
    let (n, m) = case.grid.shape();
    let grids: Vec<BinGainGrid> = case
        .antenna_paths
        .iter()
        .map(|p| tr.bin_gains(p))
        .collect::<Result<_>>()?;
    let (expected, eq_grid, weights) = if grids.len() == 1 {
        (phi_zf(&grids[0])?, grids[0].clone(), None)
    } else {
        let w = mrt_weights(&grids)?;
        (phi_mrt(&grids)?, mrt_combined_grid(&grids, &w)?, Some(w))
    };
    let link = LinkGain::new(1.0, 2.0, 1.0)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut err_power = 0.0;
    for d in 0..draws as u64 {
        let mut rng = Substream::new(cfg.master_seed, stream::FRAME_CHECK, (idx << 32) | d);
        let symbols = (0..n * m)
            .map(|_| {
                let re = if rng.random::<bool>() { s } else { -s };
                let im = if rng.random::<bool>() { s } else { -s };
                Complex64::new(re, im)
            })
            .collect();
        let x = DDFrame::from_vec(n, m, symbols)?;
        let y = match &weights {
            None => tr.apply_dd_channel(&x, &case.antenna_paths[0], &link, 1.0, &mut rng)?,
            Some(w) => {
                let frames = tr.mrt_precode(&x, w)?;
                tr.apply_miso_channel(&frames, &case.antenna_paths, &link, 1.0, &mut rng)?
            }
        };
        let xr = tr.zf_equalize(&y, &eq_grid)?;
        err_power += xr
            .values()
            .iter()
            .zip(x.values())
            .map(|(a, b)| (a - b * link.amplitude()).norm_sqr())
            .sum::<f64>();
    }
    let observed = err_power / (draws * n * m) as f64;
    let rel_error = ((observed - expected) / expected).abs();
    Ok(ConsistencyResult {
        name: case.name.clone(),
        expected,
        observed,
        rel_error,
        passed: rel_error <= CONSISTENCY_TOL,
        skipped: None,
    })
}

fn cn<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    use rand_distr::{Distribution, StandardNormal};
    let s = (0.5 * power).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Random integer-tap channel: a unit-magnitude leading path plus weaker
/// CN(0, `scatter_power`) echoes at distinct random taps.
pub fn random_paths<R: Rng + ?Sized>(
    grid: &OTFSGrid,
    echoes: usize,
    scatter_power: f64,
    rng: &mut R,
) -> Vec<DDPath> {
    let (n, m) = grid.shape();
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    let mut paths = vec![DDPath::new(0, 0, Complex64::from_polar(1.0, theta))];
    while paths.len() < echoes + 1 && paths.len() < n * m {
        let tap = (rng.random_range(0..m), rng.random_range(0..n));
        if paths.iter().any(|p| (p.delay_tap, p.doppler_tap) == tap) {
            continue;
        }
        paths.push(DDPath::new(tap.0, tap.1, cn(rng, scatter_power)));
    }
    paths
}

/// Cases exercised by validation: flat unit channel, two single-antenna
/// multipath channels and a four-antenna MRT channel.
pub fn shipped_consistency_cases(seed: u64) -> Vec<ConsistencyCase> {
    let mut rng = Substream::new(seed, stream::CHANNEL_DRAW, 0);
    let g8 = OTFSGrid::new(8, 8).expect("static grid");
    let g48 = OTFSGrid::new(4, 8).expect("static grid");
    vec![
        ConsistencyCase {
            name: "single_path_unit".into(),
            grid: g8,
            antenna_paths: vec![vec![DDPath::new(0, 0, Complex64::new(1.0, 0.0))]],
        },
        ConsistencyCase {
            name: "two_path_8x8".into(),
            grid: g8,
            antenna_paths: vec![random_paths(&g8, 1, 0.25, &mut rng)],
        },
        ConsistencyCase {
            name: "three_path_4x8".into(),
            grid: g48,
            antenna_paths: vec![random_paths(&g48, 2, 0.1, &mut rng)],
        },
        ConsistencyCase {
            name: "mrt_k4_8x8".into(),
            grid: g8,
            antenna_paths: (0..4).map(|_| random_paths(&g8, 1, 1.0, &mut rng)).collect(),
        },
    ]
}
