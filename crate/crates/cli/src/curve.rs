//! Outage-versus-SNR sweep.

use std::fmt::Write as _;
use std::path::Path;

use otfs_outage::config::Scenario;
use otfs_outage::fading::ig_from_nakagami;
use otfs_outage::montecarlo::{mc_outage, mc_outage_e2e, sim_phi_rd, sim_phi_sr, OPEstimate};
use otfs_outage::outage::{gamma_approx, op_end_to_end, op_link_nakagami, op_link_sr, phi_sr_stats};

use crate::{load_scenario, write_file, CliError, McOverrides};

pub const CURVE_HEADER: &str =
    "snr_db,op_an_1,op_mc_1,ci1_lo,ci1_hi,op_an_2,op_mc_2,ci2_lo,ci2_hi,op_an_e2e,op_mc_e2e,cie_lo,cie_hi";

/// Analytical/MC gap the summary line flags.
pub const AGREEMENT_TOL: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub snr_db: f64,
    pub op_an_1: f64,
    pub mc_1: OPEstimate,
    pub op_an_2: f64,
    pub mc_2: OPEstimate,
    pub op_an_e2e: f64,
    pub mc_e2e: OPEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    pub rows: Vec<CurveRow>,
    pub trials: usize,
}

impl OutageCurve {
    /// Largest `|analytical − MC|` over the sweep for link 1, link 2 and end to end.
    pub fn max_gaps(&self) -> [f64; 3] {
        let mut g = [0.0f64; 3];
        for r in &self.rows {
            g[0] = g[0].max((r.op_an_1 - r.mc_1.p_hat).abs());
            g[1] = g[1].max((r.op_an_2 - r.mc_2.p_hat).abs());
            g[2] = g[2].max((r.op_an_e2e - r.mc_e2e.p_hat).abs());
        }
        g
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CURVE_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.snr_db,
                r.op_an_1,
                r.mc_1.p_hat,
                r.mc_1.ci_low,
                r.mc_1.ci_high,
                r.op_an_2,
                r.mc_2.p_hat,
                r.mc_2.ci_low,
                r.mc_2.ci_high,
                r.op_an_e2e,
                r.mc_e2e.p_hat,
                r.mc_e2e.ci_low,
                r.mc_e2e.ci_high,
            );
        }
        let g = self.max_gaps();
        let agree = g.iter().all(|&x| x <= AGREEMENT_TOL);
        let _ = writeln!(
            s,
            "# summary trials={} max_gap_1={:e} max_gap_2={:e} max_gap_e2e={:e} within_{}={}",
            self.trials, g[0], g[1], g[2], AGREEMENT_TOL, agree
        );
        s
    }
}

/// Simulates each hop once and thresholds the same samples at every SNR.
pub fn op_curve(s: &Scenario) -> Result<OutageCurve, CliError> {
    let stats1 = phi_sr_stats(&s.link1.sr, s.link1.antennas, &s.grid)?;
    let gamma2 = gamma_approx(&ig_from_nakagami(&s.link2.nakagami)?, &s.grid)?;
    let phi1 = sim_phi_sr(&s.link1.sr, s.link1.antennas, &s.grid, &s.mc)?;
    let phi2 = sim_phi_rd(&s.link2.nakagami, &s.grid, &s.mc)?;
    let mut rows = Vec::new();
    for snr_db in s.sweep.points() {
        let b1 = s.link1_budget(snr_db);
        let b2 = s.link2_budget(snr_db);
        let op_an_1 = op_link_sr(&stats1, &b1)?;
        let op_an_2 = op_link_nakagami(&gamma2, &b2)?;
        rows.push(CurveRow {
            snr_db,
            op_an_1,
            mc_1: mc_outage(&phi1.values, &b1)?,
            op_an_2,
            mc_2: mc_outage(&phi2.values, &b2)?,
            op_an_e2e: op_end_to_end(op_an_1, op_an_2)?,
            mc_e2e: mc_outage_e2e(&phi1.values, &phi2.values, &b1, &b2)?,
        });
    }
    Ok(OutageCurve {
        rows,
        trials: s.mc.trials,
    })
}

/// Parses the config, runs the sweep and only then creates `out`.
pub fn run_op_curve(config: &Path, out: &Path, overrides: &McOverrides) -> Result<OutageCurve, CliError> {
    let mut s = load_scenario(config)?;
    overrides.apply(&mut s)?;
    let curve = op_curve(&s)?;
    write_file(out, &curve.to_csv())?;
    Ok(curve)
}
