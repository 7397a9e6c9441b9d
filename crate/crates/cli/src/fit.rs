//! Histogram-versus-approximation study for each hop.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use otfs_outage::config::Scenario;
use otfs_outage::fading::ig_from_nakagami;
use otfs_outage::montecarlo::{histogram_fit, sim_phi_rd, sim_phi_sr, HistogramFit};
use otfs_outage::outage::{gamma_approx, phi_sr_stats};

use crate::{load_scenario, write_file, CliError, McOverrides};

pub const HISTOGRAM_HEADER: &str = "link,bin,edge_lo,edge_hi,hist_density,model_density";
pub const METRICS_HEADER: &str = "link,nmse,kl,bins,support_lo,support_hi,samples";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkChoice {
    Link1,
    Link2,
    Both,
}

impl LinkChoice {
    fn links(self) -> &'static [u8] {
        match self {
            LinkChoice::Link1 => &[1],
            LinkChoice::Link2 => &[2],
            LinkChoice::Both => &[1, 2],
        }
    }
}

impl FromStr for LinkChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" => Ok(LinkChoice::Link1),
            "2" => Ok(LinkChoice::Link2),
            "both" => Ok(LinkChoice::Both),
            other => Err(format!("expected 1, 2 or both, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// `(link, fit)` in link order.
    pub fits: Vec<(u8, HistogramFit)>,
    pub samples: usize,
}

impl FitReport {
    pub fn histogram_csv(&self) -> String {
        let mut s = String::from(HISTOGRAM_HEADER);
        s.push('\n');
        for (link, fit) in &self.fits {
            for (b, e) in fit.edges.windows(2).enumerate() {
                let _ = writeln!(
                    s,
                    "{link},{b},{:e},{:e},{:e},{:e}",
                    e[0], e[1], fit.hist_density[b], fit.model_density[b]
                );
            }
        }
        s
    }

    pub fn metrics_csv(&self) -> String {
        let mut s = String::from(METRICS_HEADER);
        s.push('\n');
        for (link, fit) in &self.fits {
            let m = &fit.metrics;
            let _ = writeln!(
                s,
                "{link},{:e},{:e},{},{:e},{:e},{}",
                m.nmse, m.kl, m.bins, m.support.0, m.support.1, self.samples
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .fits
            .iter()
            .map(|(link, f)| format!("link{link}: nmse={:.4e} kl={:.4e}", f.metrics.nmse, f.metrics.kl))
            .collect();
        format!("{} ({} samples, {} bins)", parts.join("; "), self.samples, self.fits[0].1.metrics.bins)
    }
}

/// Link 1 against its Gaussian law, link 2 against its Gamma law.
pub fn pdf_fit(s: &Scenario, which: LinkChoice) -> Result<FitReport, CliError> {
    let mut fits = Vec::new();
    for &link in which.links() {
        let fit = if link == 1 {
            let stats = phi_sr_stats(&s.link1.sr, s.link1.antennas, &s.grid)?;
            let phi = sim_phi_sr(&s.link1.sr, s.link1.antennas, &s.grid, &s.mc)?;
            histogram_fit(&phi.values, |x| stats.pdf(x), &s.mc)?
        } else {
            let g = gamma_approx(&ig_from_nakagami(&s.link2.nakagami)?, &s.grid)?;
            let phi = sim_phi_rd(&s.link2.nakagami, &s.grid, &s.mc)?;
            histogram_fit(&phi.values, |x| g.pdf(x), &s.mc)?
        };
        fits.push((link, fit));
    }
    Ok(FitReport {
        fits,
        samples: s.mc.trials,
    })
}

/// `out.csv` → `out.metrics.csv`.
pub fn metrics_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.metrics.csv"))
}

pub fn run_pdf_fit(config: &Path, out: &Path, which: LinkChoice, overrides: &McOverrides) -> Result<FitReport, CliError> {
    let mut s = load_scenario(config)?;
    overrides.apply(&mut s)?;
    let report = pdf_fit(&s, which)?;
    write_file(out, &report.histogram_csv())?;
    write_file(&metrics_path(out), &report.metrics_csv())?;
    Ok(report)
}
