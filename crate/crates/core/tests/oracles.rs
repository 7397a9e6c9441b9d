//! Independent numerical oracles for the closed forms and samplers.

use otfs_outage::fading::{
    ig_from_nakagami, mrt_sum_pdf, sr_coeffs, sr_inverse_moment, sr_power_pdf, NakagamiParams,
    NakagamiPowerSampler, SRParams, SrGainSampler,
};
use otfs_outage::montecarlo::{mc_outage, mc_outage_e2e, sim_phi_rd, MCConfig};
use otfs_outage::oracle::{integrate, integrate_to_inf};
use otfs_outage::otfs::OTFSGrid;
use otfs_outage::outage::{gamma_approx, op_end_to_end, LinkBudget};
use otfs_outage::rng::Substream;
use otfs_outage::special::reg_gamma_lower;

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`.
fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// 99% critical value of the one-sample KS statistic.
fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[test]
fn sr_power_sampler_matches_pdf() {
    for p in [SRParams::FHS, SRParams::KARASAWA] {
        let s = SrGainSampler::new(&p).unwrap();
        let mut rng = Substream::new(21, 1, 0);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| s.sample(&mut rng).norm_sqr()).collect();
        // CDF by quadrature of the closed-form density on a fine table.
        let hi = draws.iter().cloned().fold(0.0, f64::max) * 1.01;
        let steps = 4000;
        let h = hi / steps as f64;
        let mut table = vec![0.0];
        for i in 0..steps {
            let a = i as f64 * h;
            let v = integrate(|x| sr_power_pdf(&p, x).unwrap(), a, a + h, 1e-12, 1e-300);
            table.push(table[i] + v);
        }
        let cdf = |x: f64| {
            let pos = (x / h).min(steps as f64 - 1e-9);
            let i = pos.floor() as usize;
            table[i] + (pos - i as f64) * (table[i + 1] - table[i])
        };
        let d = ks_statistic(&mut draws, cdf);
        assert!(d < ks_critical(n), "{p:?}: D = {d}");
    }
}

#[test]
fn phase_free_power_sampling_has_the_same_law() {
    let s = SrGainSampler::new(&SRParams::KARASAWA).unwrap();
    let mut rng = Substream::new(12, 1, 0);
    let n = 20_000;
    let a: Vec<f64> = (0..n).map(|_| s.sample(&mut rng).norm_sqr()).collect();
    let mut b: Vec<f64> = (0..n).map(|_| s.sample_power(&mut rng)).collect();
    let mut sorted_a = a.clone();
    sorted_a.sort_by(f64::total_cmp);
    let ecdf_a = |x: f64| sorted_a.partition_point(|&v| v <= x) as f64 / n as f64;
    let d = ks_statistic(&mut b, ecdf_a);
    // Two-sample 99% critical value with equal sizes.
    assert!(d < 1.628 * (2.0 / n as f64).sqrt(), "D = {d}");
}

#[test]
fn nakagami_sampler_matches_gamma_cdf() {
    for (m, omega) in [(3.0, 1.0), (8.0, 2.0), (0.7, 1.0)] {
        let s = NakagamiPowerSampler::new(&NakagamiParams::new(m, omega).unwrap()).unwrap();
        let mut rng = Substream::new(13, 1, 0);
        let n = 20_000;
        let mut draws: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let d = ks_statistic(&mut draws, |x| reg_gamma_lower(m, m * x / omega).unwrap());
        assert!(d < ks_critical(n), "m={m}: D = {d}");
    }
}

#[test]
fn two_antenna_law_is_self_convolution() {
    for p in [SRParams::KARASAWA, SRParams::new(3, 0.1, 0.8).unwrap()] {
        let lam = sr_coeffs(&p).unwrap().rate();
        for z in [0.2 / lam, 1.0 / lam, 3.0 / lam] {
            let conv = integrate(
                |x| sr_power_pdf(&p, x).unwrap() * sr_power_pdf(&p, z - x).unwrap(),
                0.0,
                z,
                1e-12,
                1e-300,
            );
            let closed = mrt_sum_pdf(&p, 2, z).unwrap();
            assert!(((closed - conv) / conv).abs() < 1e-9, "{p:?} z={z}: {closed} vs {conv}");
        }
    }
}

#[test]
fn inverse_moments_against_quadrature_of_sum_law() {
    let p = SRParams::new(4, 0.05, 0.4).unwrap();
    let lam = sr_coeffs(&p).unwrap().rate();
    for k in [3usize, 5] {
        for n in 1..k as u32 {
            let quad = integrate_to_inf(
                |u| {
                    let z = u / lam;
                    mrt_sum_pdf(&p, k, z).unwrap() * z.powi(-(n as i32)) / lam
                },
                0.0,
                1e-12,
                1e-300,
            );
            let closed = sr_inverse_moment(&p, k, n).unwrap();
            assert!(((closed - quad) / quad).abs() < 1e-8, "K={k} n={n}");
        }
    }
}

fn digamma(x: f64) -> f64 {
    // Recurrence up to x >= 6, then the asymptotic series.
    let mut x = x;
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let f = 1.0 / (x * x);
    acc + x.ln() - 0.5 / x - f * (1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f / 240.0)))
}

#[test]
fn inverse_gamma_mapping_by_maximum_likelihood() {
    let nak = NakagamiParams::new(3.0, 1.0).unwrap();
    let s = NakagamiPowerSampler::new(&nak).unwrap();
    let mut rng = Substream::new(14, 1, 0);
    let n = 1_000_000;
    // 1/X ~ IG(α, β) exactly when X ~ Gamma(α, rate β), so fit a Gamma law to X.
    let x: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let mean_ln = x.iter().map(|v| v.ln()).sum::<f64>() / n as f64;
    let target = mean.ln() - mean_ln;
    let mut a = 0.5 / target;
    for _ in 0..50 {
        let g = a.ln() - digamma(a) - target;
        let dg = 1.0 / a - (digamma(a + 1e-6) - digamma(a - 1e-6)) / 2e-6;
        a -= g / dg;
    }
    let b = a / mean;
    let ig = ig_from_nakagami(&nak).unwrap();
    assert!(((a - ig.alpha_ig) / ig.alpha_ig).abs() < 0.01, "shape {a}");
    assert!(((b - ig.beta_ig) / ig.beta_ig).abs() < 0.01, "scale {b}");
}

#[test]
fn gamma_approx_moments_match_simulation() {
    let grid = OTFSGrid::new(8, 8).unwrap();
    let nak = NakagamiParams::new(8.0, 1.0).unwrap();
    let g = gamma_approx(&ig_from_nakagami(&nak).unwrap(), &grid).unwrap();
    assert_eq!((g.alpha_g, g.beta_g), (384.0, 336.0));
    let phi = sim_phi_rd(&nak, &grid, &MCConfig::new(1_000_000, 15)).unwrap().values;
    let n = phi.len() as f64;
    let mean = phi.iter().sum::<f64>() / n;
    let var = phi.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(((mean - g.mean()) / g.mean()).abs() < 0.01);
    assert!(((var - g.variance()) / g.variance()).abs() < 0.01);
}

#[test]
fn paired_outage_matches_marginal_combination() {
    let grid = OTFSGrid::new(4, 4).unwrap();
    let cfg = MCConfig::new(100_000, 16);
    let phi1 = sim_phi_rd(&NakagamiParams::new(3.0, 1.0).unwrap(), &grid, &cfg).unwrap().values;
    let phi2 = sim_phi_rd(&NakagamiParams::new(5.0, 2.0).unwrap(), &grid, &MCConfig::new(100_000, 17))
        .unwrap()
        .values;
    for t in [1.2, 1.5, 1.9] {
        let b = LinkBudget::new(t, 1.0, 2.0, 1.0, 1.0).unwrap();
        let p1 = mc_outage(&phi1, &b).unwrap().p_hat;
        let p2 = mc_outage(&phi2, &b).unwrap().p_hat;
        let e = mc_outage_e2e(&phi1, &phi2, &b, &b).unwrap();
        let combined = op_end_to_end(p1, p2).unwrap();
        assert!(e.ci_low <= combined && combined <= e.ci_high, "t={t}: {combined} vs {e:?}");
    }
}
