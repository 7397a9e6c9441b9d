//! Closed-form outage probability of the dual-hop DF link.
//!
//! Hop 1 (MRT over shadowed-Rician antennas) uses a Gaussian law for the
//! bin-averaged noise enhancement `φ_sr`, with mean and variance from the
//! inverse moments of the MRT sum. Hop 2 (Nakagami-m bins) replaces the
//! average of `NM` inverse-gamma terms with a moment-matched Gamma law.
//! A hop is in outage when `φ ≥ t = Ps / (σ² d^α γ_th)`.

use crate::error::{domain, Error, Result};
use crate::fading::{IGParams, MrtSumLaw, SRParams};
use crate::otfs::OTFSGrid;
use crate::special::{ln_gamma, ln_one_minus_exp, ln_q_function, ln_reg_gamma_pair, q_function, reg_gamma_upper, EvalTolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power: f64,
    pub distance: f64,
    pub pathloss_exp: f64,
    pub noise_power: f64,
    /// Linear SNR threshold γ_th.
    pub snr_threshold: f64,
}

impl LinkBudget {
    pub fn new(
        tx_power: f64,
        distance: f64,
        pathloss_exp: f64,
        noise_power: f64,
        snr_threshold: f64,
    ) -> Result<Self> {
        let b = Self {
            tx_power,
            distance,
            pathloss_exp,
            noise_power,
            snr_threshold,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tx_power", self.tx_power),
            ("distance", self.distance),
            ("pathloss_exp", self.pathloss_exp),
            ("noise_power", self.noise_power),
            ("snr_threshold", self.snr_threshold),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("link budget {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `Ps / (σ² d^α)`, the average SNR of the hop before equalization.
    pub fn average_snr(&self) -> f64 {
        self.tx_power / (self.noise_power * self.distance.powf(self.pathloss_exp))
    }

    pub fn average_snr_db(&self) -> f64 {
        10.0 * self.average_snr().log10()
    }

    /// Copy with `Ps` chosen so that the average SNR equals `snr_db`.
    pub fn at_average_snr_db(&self, snr_db: f64) -> Self {
        let tx_power =
            10f64.powf(snr_db / 10.0) * self.noise_power * self.distance.powf(self.pathloss_exp);
        Self { tx_power, ..*self }
    }

    /// Outage threshold on φ: the hop fails iff `φ ≥ t`.
    pub fn phi_threshold(&self) -> f64 {
        self.average_snr() / self.snr_threshold
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Mean and variance of the bin-averaged `φ_sr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiStats {
    pub mean: f64,
    pub variance: f64,
}

impl PhiStats {
    /// Density of the Gaussian approximation.
    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.variance.sqrt();
        (-0.5 * z * z).exp() / (std::f64::consts::TAU * self.variance).sqrt()
    }
}

/// Gamma law (shape `alpha_g`, rate `beta_g`) fitted to `φ_rd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaApprox {
    pub alpha_g: f64,
    pub beta_g: f64,
    pub source_ig: IGParams,
}

impl GammaApprox {
    pub fn mean(&self) -> f64 {
        self.alpha_g / self.beta_g
    }

    pub fn variance(&self) -> f64 {
        self.alpha_g / (self.beta_g * self.beta_g)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        ((self.alpha_g - 1.0) * x.ln() + self.alpha_g * self.beta_g.ln()
            - self.beta_g * x
            - ln_gamma(self.alpha_g))
        .exp()
    }
}

/// Per-hop and end-to-end outage at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePoint {
    pub p_link1: f64,
    pub p_link2: f64,
    pub p_e2e: f64,
}

impl OutagePoint {
    pub fn new(p_link1: f64, p_link2: f64) -> Result<Self> {
        Ok(Self {
            p_link1,
            p_link2,
            p_e2e: op_end_to_end(p_link1, p_link2)?,
        })
    }
}

/// An outage probability and its complement, both in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogOutage {
    pub ln_p: f64,
    pub ln_complement: f64,
}

impl LogOutage {
    /// Strict ordering `self > other` as probabilities, read from whichever
    /// side still resolves it: one of `ln p`, `ln(1-p)` must move strictly
    /// and neither may move the wrong way.
    pub fn strictly_above(&self, other: &Self) -> bool {
        let no_reversal = self.ln_p >= other.ln_p && self.ln_complement <= other.ln_complement;
        no_reversal && (self.ln_p > other.ln_p || self.ln_complement < other.ln_complement)
    }

    /// DF combination `p = p1 + p2(1-p1)`, `1-p = (1-p1)(1-p2)`.
    pub fn end_to_end(&self, other: &Self) -> Self {
        let ln_complement = self.ln_complement + other.ln_complement;
        // Near p = 1 the complement carries the precision, near 0 the sum does.
        let ln_p = if ln_complement < -std::f64::consts::LN_2 {
            ln_one_minus_exp(ln_complement)
        } else {
            let a = self.ln_p;
            let b = other.ln_p + self.ln_complement;
            let hi = a.max(b);
            if hi == f64::NEG_INFINITY {
                hi
            } else {
                (hi + ((a - hi).exp() + (b - hi).exp()).ln()).min(0.0)
            }
        };
        Self { ln_p, ln_complement }
    }
}

pub fn phi_sr_stats(p: &SRParams, antennas: usize, grid: &OTFSGrid) -> Result<PhiStats> {
    if antennas <= 2 {
        return Err(Error::DivergentMoment {
            order: 2,
            antennas,
        });
    }
    grid.validate()?;
    let law = MrtSumLaw::new(p, antennas)?;
    let m1 = law.inverse_moment(1)?;
    let m2 = law.inverse_moment(2)?;
    let variance = (m2 - m1 * m1) / grid.bins() as f64;
    if !(variance > 0.0) {
        return Err(domain(format!("non-positive φ_sr variance {variance:e}")));
    }
    Ok(PhiStats { mean: m1, variance })
}

/// Moment-matched Gamma for the average of `NM` i.i.d. IG(α, β) terms:
/// `α_G = NM(α-2)`, `β_G = NM(α-1)(α-2)/β`.
pub fn gamma_approx(ig: &IGParams, grid: &OTFSGrid) -> Result<GammaApprox> {
    if !(ig.alpha_ig > 2.0) {
        return Err(Error::UndefinedVariance { shape: ig.alpha_ig });
    }
    if !(ig.beta_ig > 0.0) {
        return Err(domain("inverse-gamma scale must be positive"));
    }
    grid.validate()?;
    let nm = grid.bins() as f64;
    let a = ig.alpha_ig;
    Ok(GammaApprox {
        alpha_g: nm * (a - 2.0),
        beta_g: nm * (a - 1.0) * (a - 2.0) / ig.beta_ig,
        source_ig: *ig,
    })
}

fn sr_z(stats: &PhiStats, budget: &LinkBudget) -> Result<f64> {
    if !(stats.mean > 0.0) || !(stats.variance > 0.0) {
        return Err(domain("φ_sr statistics need positive mean and variance"));
    }
    budget.validate()?;
    Ok((budget.phi_threshold() - stats.mean) / stats.variance.sqrt())
}

/// `Q((t - E[φ_sr]) / √V[φ_sr])`.
pub fn op_link_sr(stats: &PhiStats, budget: &LinkBudget) -> Result<f64> {
    q_function(sr_z(stats, budget)?)
}

pub fn op_link_sr_log(stats: &PhiStats, budget: &LinkBudget) -> Result<LogOutage> {
    let z = sr_z(stats, budget)?;
    Ok(LogOutage {
        ln_p: ln_q_function(z)?,
        ln_complement: ln_q_function(-z)?,
    })
}

/// `Pr(φ_rd ≥ t) = Q(α_G, β_G t)`, the regularized upper incomplete gamma.
pub fn op_link_nakagami(g: &GammaApprox, budget: &LinkBudget) -> Result<f64> {
    budget.validate()?;
    reg_gamma_upper(g.alpha_g, g.beta_g * budget.phi_threshold())
}

pub fn op_link_nakagami_log(g: &GammaApprox, budget: &LinkBudget) -> Result<LogOutage> {
    budget.validate()?;
    let (ln_p, ln_q) = ln_reg_gamma_pair(
        g.alpha_g,
        g.beta_g * budget.phi_threshold(),
        &EvalTolerance::default(),
    )?;
    Ok(LogOutage {
        ln_p: ln_q,
        ln_complement: ln_p,
    })
}

/// DF end-to-end outage `1 - (1-p1)(1-p2)`.
pub fn op_end_to_end(p1: f64, p2: f64) -> Result<f64> {
    for p in [p1, p2] {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain(format!("probability must lie in [0, 1], got {p}")));
        }
    }
    Ok((p1 + p2 - p1 * p2).clamp(p1.max(p2), 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{ig_from_nakagami, sr_coeffs, NakagamiParams};
    use proptest::prelude::*;

    fn unit_budget(tx_power: f64) -> LinkBudget {
        LinkBudget::new(tx_power, 1.0, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn phi_stats_fhs() {
        let g8 = OTFSGrid::new(8, 8).unwrap();
        let s = phi_sr_stats(&SRParams::FHS, 4, &g8).unwrap();
        assert!((s.mean - 2.6309).abs() < 1e-4);
        let lam = sr_coeffs(&SRParams::FHS).unwrap().rate();
        let want_var = (lam * lam / 6.0 - lam * lam / 9.0) / 64.0;
        assert!(((s.variance - want_var) / want_var).abs() < 1e-12);
        let g16 = OTFSGrid::new(16, 8).unwrap();
        let s2 = phi_sr_stats(&SRParams::FHS, 4, &g16).unwrap();
        assert!((s2.variance * 2.0 - s.variance).abs() < 1e-15);
        assert_eq!(s2.mean, s.mean);
        assert!(matches!(
            phi_sr_stats(&SRParams::FHS, 2, &g8),
            Err(Error::DivergentMoment { order: 2, antennas: 2 })
        ));
    }

    #[test]
    fn gamma_approx_values() {
        let g8 = OTFSGrid::new(8, 8).unwrap();
        let ig = IGParams {
            alpha_ig: 3.0,
            beta_ig: 3.0,
        };
        let g = gamma_approx(&ig, &g8).unwrap();
        assert_eq!(g.alpha_g, 64.0);
        assert!((g.beta_g - 128.0 / 3.0).abs() < 1e-12);
        assert!((g.mean() - 1.5).abs() < 1e-14);

        let ig8 = ig_from_nakagami(&NakagamiParams::new(8.0, 1.0).unwrap()).unwrap();
        let g = gamma_approx(&ig8, &g8).unwrap();
        assert_eq!(g.alpha_g, 384.0);
        assert!((g.beta_g - 336.0).abs() < 1e-12);
        assert!((g.mean() - ig8.mean().unwrap()).abs() < 1e-14);
        assert!((g.variance() - ig8.variance().unwrap() / 64.0).abs() < 1e-15);

        let g4 = OTFSGrid::new(2, 2).unwrap();
        assert!((gamma_approx(&ig8, &g4).unwrap().mean() - 8.0 / 7.0).abs() < 1e-14);
        let bad = IGParams {
            alpha_ig: 2.0,
            beta_ig: 1.0,
        };
        assert_eq!(
            gamma_approx(&bad, &g8),
            Err(Error::UndefinedVariance { shape: 2.0 })
        );
    }

    #[test]
    fn sr_outage_edges() {
        let s = PhiStats {
            mean: 0.8,
            variance: 0.01,
        };
        assert_eq!(op_link_sr(&s, &unit_budget(0.8)).unwrap(), 0.5);
        assert!(op_link_sr(&s, &unit_budget(0.8e6)).unwrap() < 1e-12);
    }

    #[test]
    fn nakagami_outage_edges() {
        let g = gamma_approx(
            &IGParams {
                alpha_ig: 8.0,
                beta_ig: 8.0,
            },
            &OTFSGrid::new(8, 8).unwrap(),
        )
        .unwrap();
        assert!((op_link_nakagami(&g, &unit_budget(1e-9)).unwrap() - 1.0).abs() < 1e-12);
        assert!(op_link_nakagami(&g, &unit_budget(1e3)).unwrap() < 1e-100);
    }

    #[test]
    fn end_to_end_values() {
        assert_eq!(op_end_to_end(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(op_end_to_end(1.0, 0.37).unwrap(), 1.0);
        assert!((op_end_to_end(0.1, 0.2).unwrap() - 0.28).abs() < 1e-15);
        assert!(op_end_to_end(-0.1, 0.2).is_err());
        assert!(op_end_to_end(0.1, 1.2).is_err());
        assert!(op_end_to_end(f64::NAN, 0.2).is_err());
        let pt = OutagePoint::new(0.1, 0.2).unwrap();
        assert!((pt.p_e2e - 0.28).abs() < 1e-15);
    }

    #[test]
    fn log_forms_agree() {
        let g8 = OTFSGrid::new(8, 8).unwrap();
        let s = phi_sr_stats(&SRParams::FHS, 8, &g8).unwrap();
        let g = gamma_approx(
            &ig_from_nakagami(&NakagamiParams::new(8.0, 1.0).unwrap()).unwrap(),
            &g8,
        )
        .unwrap();
        for db in [-3.0, 0.0, 0.5, 1.0] {
            let b = unit_budget(db_to_linear(db));
            let p = op_link_sr(&s, &b).unwrap();
            let lp = op_link_sr_log(&s, &b).unwrap();
            assert!((lp.ln_p.exp() - p).abs() < 1e-12);
            assert!((lp.ln_complement.exp() - (1.0 - p)).abs() < 1e-12);
            let p = op_link_nakagami(&g, &b).unwrap();
            let lp = op_link_nakagami_log(&g, &b).unwrap();
            assert!((lp.ln_p.exp() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_snr_conversion() {
        let b = LinkBudget::new(1.0, 3.0, 2.0, 0.5, db_to_linear(0.0)).unwrap();
        let c = b.at_average_snr_db(-4.5);
        assert!((c.average_snr_db() + 4.5).abs() < 1e-12);
        assert!(LinkBudget::new(1.0, 1.0, 2.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn end_to_end_dominance(p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            let e = op_end_to_end(p1, p2).unwrap();
            prop_assert!(e >= p1.max(p2));
            prop_assert!(e <= p1 + p2 + 1e-15);
            prop_assert!(e <= 1.0);
        }

        #[test]
        fn log_end_to_end_matches_linear(p1 in 1e-9f64..1.0, p2 in 1e-9f64..1.0) {
            let l = |p: f64| LogOutage { ln_p: p.ln(), ln_complement: (1.0 - p).ln() };
            let e = l(p1).end_to_end(&l(p2));
            let lin = op_end_to_end(p1, p2).unwrap();
            prop_assert!((e.ln_p.exp() - lin).abs() < 1e-12);
            prop_assert!((e.ln_complement.exp() - (1.0 - lin)).abs() < 1e-12);
        }

        #[test]
        fn outage_monotone_in_power_and_threshold(
            snr_db in -10.0f64..10.0,
            step in 0.05f64..2.0,
            th_db in -3.0f64..3.0,
        ) {
            let grid = OTFSGrid::new(4, 4).unwrap();
            let s = phi_sr_stats(&SRParams::FHS, 8, &grid).unwrap();
            let g = gamma_approx(&IGParams { alpha_ig: 5.0, beta_ig: 5.0 }, &grid).unwrap();
            let base = LinkBudget::new(1.0, 1.0, 2.0, 1.0, db_to_linear(th_db)).unwrap();
            let lo = base.at_average_snr_db(snr_db);
            let hi = base.at_average_snr_db(snr_db + step);
            let a = op_link_sr_log(&s, &lo).unwrap();
            let b = op_link_sr_log(&s, &hi).unwrap();
            prop_assert!(a.strictly_above(&b), "{a:?} {b:?}");
            let a = op_link_nakagami_log(&g, &lo).unwrap();
            let b = op_link_nakagami_log(&g, &hi).unwrap();
            prop_assert!(a.strictly_above(&b), "{a:?} {b:?}");
            // Raising γ_th at fixed power raises outage.
            let stricter = LinkBudget { snr_threshold: lo.snr_threshold * 1.5, ..lo };
            prop_assert!(op_link_sr_log(&s, &stricter).unwrap().strictly_above(&op_link_sr_log(&s, &lo).unwrap()));
            prop_assert!(op_link_nakagami_log(&g, &stricter).unwrap().strictly_above(&op_link_nakagami_log(&g, &lo).unwrap()));
        }
    }
}
