//! Fading laws for the two hops.
//!
//! The satellite-to-HAPS hop is shadowed Rician (SR) per transmit antenna.
//! With integer severity `m` the instantaneous power density is a finite
//! sum of Gamma kernels, which makes the MRT sum over `K` i.i.d. antennas
//! and its inverse moments available in closed form. The HAPS-to-BS hop
//! uses Nakagami-m frequency-bin gains.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{domain, Error, Result};
use crate::special::{hyp1f1_int, ln_beta, ln_factorial, ln_gamma};

/// Shadowed-Rician parameters: severity `m`, half scatter power `b0`
/// and average LOS power `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SRParams {
    pub m: u32,
    pub b0: f64,
    pub omega: f64,
}

impl SRParams {
    /// Frequent heavy shadowing.
    pub const FHS: SRParams = SRParams {
        m: 1,
        b0: 0.063,
        omega: 7e-4,
    };
    /// Karasawa et al. measurement set.
    pub const KARASAWA: SRParams = SRParams {
        m: 2,
        b0: 0.0158,
        omega: 0.123,
    };

    pub fn new(m: u32, b0: f64, omega: f64) -> Result<Self> {
        let p = Self { m, b0, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(domain("shadowed-Rician m must be a positive integer"));
        }
        if !(self.b0 > 0.0) || !self.b0.is_finite() {
            return Err(domain(format!("shadowed-Rician b0 must be > 0, got {}", self.b0)));
        }
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return Err(domain(format!(
                "shadowed-Rician omega must be >= 0, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    /// Mean instantaneous power `Ω + 2b0`.
    pub fn mean_power(&self) -> f64 {
        self.omega + 2.0 * self.b0
    }
}

/// Coefficients of `f(x) = α e^{-βx} ₁F₁(m; 1; cx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SRCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
}

impl SRCoeffs {
    /// Exponential rate `β - c` shared by every term of the finite series.
    pub fn rate(&self) -> f64 {
        self.beta - self.c
    }
}

pub fn sr_coeffs(p: &SRParams) -> Result<SRCoeffs> {
    p.validate()?;
    let two_b0 = 2.0 * p.b0;
    let m = p.m as f64;
    let denom = two_b0 * m + p.omega;
    let alpha = (two_b0 * m / denom).powf(m) / two_b0;
    let beta = 1.0 / two_b0;
    let c = p.omega / (two_b0 * denom);
    debug_assert!(beta > c);
    Ok(SRCoeffs { alpha, beta, c })
}

/// ln ξ(k) with ξ(k) = (-1)^k (1-m)_k c^k / (k!)².
///
/// `(-1)^k (1-m)_k = (m-1)!/(m-1-k)!`, so ξ(k) ≥ 0 and only its log is
/// needed. Returns `-∞` when `c = 0` and `k > 0`.
fn ln_xi(m: u32, c: f64, k: u32) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if c == 0.0 {
        return f64::NEG_INFINITY;
    }
    ln_factorial(m - 1) - ln_factorial(m - 1 - k) + k as f64 * c.ln() - 2.0 * ln_factorial(k)
}

/// Power density of one SR antenna from the finite Pochhammer series.
pub fn sr_power_pdf(p: &SRParams, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("power must be >= 0, got {x}")));
    }
    let co = sr_coeffs(p)?;
    let rate = co.rate();
    let mut acc = 0.0;
    for k in 0..p.m {
        let lx = ln_xi(p.m, co.c, k);
        if lx == f64::NEG_INFINITY {
            continue;
        }
        let xk = if k == 0 { 1.0 } else { x.powi(k as i32) };
        acc += lx.exp() * co.alpha * xk * (-rate * x).exp();
    }
    Ok(acc)
}

/// Same density in its Kummer form `α e^{-βx} ₁F₁(m;1;cx)`.
pub fn sr_power_pdf_kummer(p: &SRParams, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("power must be >= 0, got {x}")));
    }
    let co = sr_coeffs(p)?;
    Ok(co.alpha * (-co.beta * x).exp() * hyp1f1_int(p.m, co.c * x)?)
}

/// Upper bound on the `m^K` enumeration of the MRT sum law.
pub const MAX_MRT_TERMS: u64 = 1 << 22;

/// Law of `ρ = Σ_{i=1}^K |h_i|²` for `K` i.i.d. SR antennas.
///
/// Built by enumerating every index tuple `(k_1..k_K) ∈ [0, m)^K` with
/// weight `Ξ(K) = Πξ(k_i)·α^K·Π_j B(Σ_{l≤j}k_l + j, k_{j+1}+1)` and shape
/// `Λ = Σk_i + K`. Tuples sharing `Λ` are merged in log space, so the
/// density is `Σ_Λ W_Λ z^{Λ-1} e^{-(β-c)z}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MrtSumLaw {
    antennas: usize,
    rate: f64,
    /// `(Λ, ln W_Λ)` sorted by shape.
    terms: Vec<(u32, f64)>,
}

impl MrtSumLaw {
    pub fn new(p: &SRParams, antennas: usize) -> Result<Self> {
        if antennas == 0 {
            return Err(domain("MRT sum needs at least one antenna"));
        }
        let co = sr_coeffs(p)?;
        let m = p.m;
        let count = (m as u64).checked_pow(antennas as u32).unwrap_or(u64::MAX);
        if count > MAX_MRT_TERMS {
            return Err(Error::Unsupported(format!(
                "MRT sum enumeration needs {m}^{antennas} terms (limit {MAX_MRT_TERMS})"
            )));
        }
        let ln_xis: Vec<f64> = (0..m).map(|k| ln_xi(m, co.c, k)).collect();
        let k_max = antennas as u32 * (m - 1);
        let mut buckets = vec![f64::NEG_INFINITY; k_max as usize + 1];
        let ln_alpha_k = antennas as f64 * co.alpha.ln();

        let mut idx = vec![0u32; antennas];
        'outer: loop {
            let mut ln_w = ln_alpha_k;
            let mut partial = 0u32;
            for (j, &k) in idx.iter().enumerate() {
                ln_w += ln_xis[k as usize];
                if j > 0 {
                    ln_w += ln_beta((partial + j as u32) as f64, (k + 1) as f64);
                }
                partial += k;
            }
            if ln_w > f64::NEG_INFINITY {
                let b = &mut buckets[partial as usize];
                *b = log_add_exp(*b, ln_w);
            }
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < m {
                    continue 'outer;
                }
                *slot = 0;
            }
            break;
        }
        let terms = buckets
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > f64::NEG_INFINITY)
            .map(|(s, w)| (s as u32 + antennas as u32, w))
            .collect();
        Ok(Self {
            antennas,
            rate: co.rate(),
            terms,
        })
    }

    /// Rejects per-antenna parameter lists that are not identical.
    pub fn from_antennas(params: &[SRParams]) -> Result<Self> {
        let first = params
            .first()
            .ok_or_else(|| domain("MRT sum needs at least one antenna"))?;
        if params.iter().any(|p| p != first) {
            return Err(Error::Unsupported(
                "MRT sum law requires identical per-antenna shadowed-Rician parameters".into(),
            ));
        }
        Self::new(first, params.len())
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Merged `(Λ, ln W_Λ)` terms.
    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(domain(format!("MRT sum density needs z >= 0, got {z}")));
        }
        if z == 0.0 {
            return Ok(self
                .terms
                .iter()
                .filter(|(s, _)| *s == 1)
                .map(|(_, w)| w.exp())
                .sum());
        }
        let ln_z = z.ln();
        Ok(self
            .terms
            .iter()
            .map(|&(s, w)| (w + (s as f64 - 1.0) * ln_z - self.rate * z).exp())
            .sum())
    }

    /// `E[ρ^{-n}] = Σ W_Λ Γ(Λ-n) / (β-c)^{Λ-n}`, finite only for `n < K`.
    pub fn inverse_moment(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(domain("inverse moment order must be >= 1"));
        }
        if self.antennas <= n as usize {
            return Err(Error::DivergentMoment {
                order: n,
                antennas: self.antennas,
            });
        }
        let ln_rate = self.rate.ln();
        Ok(self
            .terms
            .iter()
            .map(|&(s, w)| {
                let shape = s as f64 - n as f64;
                (w + ln_gamma(shape) - shape * ln_rate).exp()
            })
            .sum())
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn mrt_sum_pdf(p: &SRParams, antennas: usize, z: f64) -> Result<f64> {
    MrtSumLaw::new(p, antennas)?.pdf(z)
}

pub fn sr_inverse_moment(p: &SRParams, antennas: usize, n: u32) -> Result<f64> {
    if antennas <= n as usize {
        return Err(Error::DivergentMoment {
            order: n,
            antennas,
        });
    }
    MrtSumLaw::new(p, antennas)?.inverse_moment(n)
}

/// Nakagami-m bin gain: `|D|² ~ Gamma(shape m, mean Ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiParams {
    pub m: f64,
    pub omega: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        let p = Self { m, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 0.5) || !self.m.is_finite() {
            return Err(domain(format!("Nakagami m must be >= 0.5, got {}", self.m)));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(domain(format!("Nakagami omega must be > 0, got {}", self.omega)));
        }
        Ok(())
    }
}

/// Inverse-gamma law in shape/scale form: density ∝ x^{-α-1} e^{-β/x}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IGParams {
    pub alpha_ig: f64,
    pub beta_ig: f64,
}

impl IGParams {
    pub fn mean(&self) -> Option<f64> {
        (self.alpha_ig > 1.0).then(|| self.beta_ig / (self.alpha_ig - 1.0))
    }

    pub fn variance(&self) -> Option<f64> {
        (self.alpha_ig > 2.0).then(|| {
            let a1 = self.alpha_ig - 1.0;
            self.beta_ig * self.beta_ig / (a1 * a1 * (self.alpha_ig - 2.0))
        })
    }
}

/// Reciprocal of a Gamma(m, mean Ω) power: IG(shape m, scale m/Ω).
pub fn ig_from_nakagami(p: &NakagamiParams) -> Result<IGParams> {
    p.validate()?;
    Ok(IGParams {
        alpha_ig: p.m,
        beta_ig: p.m / p.omega,
    })
}

/// Draws complex SR gains `h = A e^{jθ} + w`.
///
/// `A` is Nakagami(m, Ω), `θ` uniform, and `w ~ CN(0, 2b0)`.
#[derive(Debug, Clone)]
pub struct SrGainSampler {
    los_power: Option<Gamma<f64>>,
    scatter: Normal<f64>,
}

impl SrGainSampler {
    pub fn new(p: &SRParams) -> Result<Self> {
        p.validate()?;
        let los_power = if p.omega > 0.0 {
            let m = p.m as f64;
            Some(Gamma::new(m, p.omega / m).map_err(|e| domain(e.to_string()))?)
        } else {
            None
        };
        let scatter = Normal::new(0.0, p.b0.sqrt()).map_err(|e| domain(e.to_string()))?;
        Ok(Self { los_power, scatter })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let amp = self.los_power.map_or(0.0, |g| g.sample(rng).sqrt());
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let los = Complex64::from_polar(amp, theta);
        los + Complex64::new(self.scatter.sample(rng), self.scatter.sample(rng))
    }

    /// `|h|²` of one draw. The scatter is circularly symmetric, so the
    /// LOS phase does not change the law of the power and is not drawn.
    pub fn sample_power<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let amp = self.los_power.map_or(0.0, |g| g.sample(rng).sqrt());
        let re = amp + self.scatter.sample(rng);
        let im = self.scatter.sample(rng);
        re * re + im * im
    }
}

pub fn sample_sr_gain<R: Rng + ?Sized>(p: &SRParams, rng: &mut R) -> Result<Complex64> {
    Ok(SrGainSampler::new(p)?.sample(rng))
}

#[derive(Debug, Clone)]
pub struct NakagamiPowerSampler {
    power: Gamma<f64>,
}

impl NakagamiPowerSampler {
    pub fn new(p: &NakagamiParams) -> Result<Self> {
        p.validate()?;
        let power = Gamma::new(p.m, p.omega / p.m).map_err(|e| domain(e.to_string()))?;
        Ok(Self { power })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.power.sample(rng)
    }
}

pub fn sample_nakagami_power<R: Rng + ?Sized>(p: &NakagamiParams, rng: &mut R) -> Result<f64> {
    Ok(NakagamiPowerSampler::new(p)?.sample(rng))
}
