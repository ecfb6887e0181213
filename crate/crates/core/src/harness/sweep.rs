use serde::{Deserialize, Serialize};

use super::{estimate_error, ExperimentConfig, HarnessError};
use crate::adversary::AttackConfig;
use crate::capacity::{compute_c_k, SearchConfig};
use crate::codec::CodecConfig;
use crate::model::AvcSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Budget,
    Rate,
}

/// One grid point: the Monte-Carlo estimate next to the solver's brackets.
///
/// Rates and capacities are in bits per channel use; costs per symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub budget: f64,
    pub rate: f64,
    pub k: usize,
    pub c_lower: f64,
    pub c_hat: f64,
    pub c_upper: f64,
    pub trials: usize,
    pub avg_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub max_error: f64,
    pub attack_fail_rate: f64,
    pub cost_violation_rate: f64,
    pub aborts: usize,
    pub erasures: usize,
}

/// Runs one experiment per grid value, varying either the budget or the rate.
pub fn sweep(
    avc: &AvcSpec,
    axis: SweepAxis,
    grid: &[f64],
    cfg: &ExperimentConfig,
    codec: &CodecConfig,
    attack: &AttackConfig,
    search: &SearchConfig,
) -> Result<Vec<SweepRow>, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let base_budget = cfg.budget.unwrap_or(avc.budget());
    let fixed = match axis {
        SweepAxis::Rate => Some(compute_c_k(&avc.with_budget(base_budget), cfg.k, search)),
        SweepAxis::Budget => None,
    };
    grid.iter()
        .map(|&g| {
            let mut c = cfg.clone();
            match axis {
                SweepAxis::Budget => c.budget = Some(g),
                SweepAxis::Rate => c.rate = g,
            }
            let budget = c.budget.unwrap_or(base_budget);
            let cap = match &fixed {
                Some(r) => r.clone(),
                None => compute_c_k(&avc.with_budget(budget), c.k, search),
            };
            let rep = estimate_error(avc, &c, codec, attack)?;
            Ok(SweepRow {
                budget,
                rate: c.rate,
                k: c.k,
                c_lower: cap.lower,
                c_hat: cap.value,
                c_upper: cap.upper,
                trials: rep.trials,
                avg_error: rep.avg_error,
                ci_low: rep.ci_low,
                ci_high: rep.ci_high,
                max_error: rep.max_error,
                attack_fail_rate: rep.attack_fail_rate,
                cost_violation_rate: rep.cost_violation_rate,
                aborts: rep.aborts,
                erasures: rep.erasures,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Strategy;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n: 40,
            k: 2,
            rate: 0.1,
            trials: 10,
            seed: 1,
            strategy: Strategy::StandDown,
            ..ExperimentConfig::default()
        }
    }

    fn quick_search() -> SearchConfig {
        SearchConfig {
            grid_resolution: 0.25,
            starts: 1,
            refine_top: 1,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn empty_grid_is_rejected() {
        let r = sweep(
            &AvcSpec::xor(0.0),
            SweepAxis::Budget,
            &[],
            &small(),
            &CodecConfig::default(),
            &AttackConfig::default(),
            &quick_search(),
        );
        assert!(matches!(r, Err(HarnessError::EmptyGrid)));
    }

    #[test]
    fn budget_sweep_is_reproducible_and_monotone() {
        let grid = [0.0, 0.1, 0.2, 0.3];
        let run = || {
            let rows = sweep(
                &AvcSpec::xor(0.0),
                SweepAxis::Budget,
                &grid,
                &small(),
                &CodecConfig::default(),
                &AttackConfig::default(),
                &quick_search(),
            )
            .unwrap();
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf).unwrap();
            (rows, buf)
        };
        let (rows, a) = run();
        let (_, b) = run();
        assert_eq!(a, b);
        assert_eq!(rows.len(), 4);
        for w in rows.windows(2) {
            assert!(w[1].c_hat <= w[0].c_hat + 0.02);
        }
        for r in &rows {
            assert!(r.c_lower <= r.c_hat + 1e-9 && r.c_hat <= r.c_upper + 1e-9);
        }
        let header = String::from_utf8(a).unwrap();
        assert!(header.starts_with("budget,rate,k,c_lower,c_hat,c_upper,trials,avg_error"));
    }
}
