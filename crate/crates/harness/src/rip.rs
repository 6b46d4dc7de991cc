//! Monte-Carlo restricted isometry probe.

use std::fmt::Write as _;

use metasp_core::metrics::{rip_probe, RipEstimate};
use metasp_core::seed::{derive_seed, label_hash};
use metasp_core::synthetic::{generate_dataset, generate_ground_truth};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const RIP_HEADER: &str = "probe,ratio";
pub const RIP_SUMMARY_HEADER: &str = "r,d,m,T,probes,min_ratio,max_ratio,delta_hat,theory_bound,within_bound";

/// Probes the design of the base DGP point.
pub fn run_rip(cfg: &ExperimentConfig) -> Result<RipEstimate> {
    let r = cfg
        .rip
        .as_ref()
        .ok_or_else(|| HarnessError::config("rip-probe needs a [rip] section"))?;
    let seed = derive_seed(&[cfg.experiment.seed_base, label_hash("rip")]);
    let dgp = cfg.dgp_config(cfg.base_point(), seed)?;
    let gt = generate_ground_truth(&dgp)?;
    let dataset = generate_dataset(&gt, &dgp)?;
    Ok(rip_probe(&dataset, r.r, r.probes, derive_seed(&[seed, 1]), r.a, r.eps)?)
}

pub fn rip_csv(est: &RipEstimate) -> String {
    let mut out = String::from(RIP_HEADER);
    out.push('\n');
    for (i, v) in est.ratios.iter().enumerate() {
        writeln!(out, "{i},{v:?}").unwrap();
    }
    out
}

pub fn rip_summary_csv(cfg: &ExperimentConfig, est: &RipEstimate) -> String {
    let p = cfg.base_point();
    format!(
        "{RIP_SUMMARY_HEADER}\n{},{},{},{},{},{:?},{:?},{:?},{:?},{}\n",
        est.rank_probed,
        p.d,
        p.m,
        p.t,
        est.samples,
        est.min_ratio,
        est.max_ratio,
        est.delta_hat,
        est.theory_bound,
        est.within(est.theory_bound)
    )
}
