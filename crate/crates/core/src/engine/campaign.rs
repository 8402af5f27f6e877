use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use super::scene::Scene;
use super::sim::run_scene;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub seed: u64,
    /// A reflected path existed at the replication's initial MS position.
    pub nlos_available: bool,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub replications: usize,
    pub blockage_events: usize,
    pub events_survived: usize,
    /// Pooled over every blockage event of every replication.
    pub sync_preservation_rate: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// Mean of the per-replication preservation rates.
    pub mean_replication_rate: f64,
    pub outage_count: usize,
    pub total_reacquisition_time_s: f64,
    pub mean_discovery_airtime_fraction: f64,
    pub measurement_count: u64,
    pub nbo_entries: usize,
    pub recovery_failures: usize,
    pub sync_loss_threshold: u32,
    /// Sorted by seed.
    pub runs: Vec<ReplicationResult>,
}

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (low, high)
}

/// Seed of replication `i`: consecutive seeds from the master. Each seed
/// is expanded into independent streams, so neighbours are uncorrelated.
pub fn replication_seed(master_seed: u64, i: usize) -> u64 {
    master_seed.wrapping_add(i as u64)
}

/// `n` replications of `template`, each with its own seed, run in parallel.
pub fn campaign(template: &ScenarioConfig, n: usize, master_seed: u64) -> Result<CampaignSummary> {
    if n == 0 {
        return Err(Error::invalid("n", "at least one replication is required"));
    }
    let seeds: Vec<u64> = (0..n).map(|i| replication_seed(master_seed, i)).collect();
    campaign_seeds(template, &seeds)
}

/// Replications for an explicit list of seeds. The summary does not depend
/// on the order of `seeds`.
pub fn campaign_seeds(template: &ScenarioConfig, seeds: &[u64]) -> Result<CampaignSummary> {
    if seeds.is_empty() {
        return Err(Error::invalid("n", "at least one replication is required"));
    }
    template.validate()?;
    let mut runs = seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = template.clone();
            cfg.seed = seed;
            cfg.engine.record_trace = false;
            let scene = Scene::build(&cfg)?;
            let out = run_scene(&scene)?;
            Ok(ReplicationResult {
                seed,
                nlos_available: scene.nlos_available(),
                metrics: out.metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| r.seed);
    Ok(aggregate(runs, template.sync.loss_threshold))
}

fn aggregate(runs: Vec<ReplicationResult>, sync_loss_threshold: u32) -> CampaignSummary {
    let n = runs.len();
    let events: usize = runs.iter().map(|r| r.metrics.blockage_events).sum();
    let survived: usize = runs.iter().map(|r| r.metrics.events_survived).sum();
    let (ci95_low, ci95_high) = wilson_interval(survived, events);
    let mean =
        |f: &dyn Fn(&Metrics) -> f64| runs.iter().map(|r| f(&r.metrics)).sum::<f64>() / n as f64;
    CampaignSummary {
        replications: n,
        blockage_events: events,
        events_survived: survived,
        sync_preservation_rate: if events == 0 {
            1.0
        } else {
            survived as f64 / events as f64
        },
        ci95_low,
        ci95_high,
        mean_replication_rate: mean(&|m| m.sync_preservation_rate),
        outage_count: runs.iter().map(|r| r.metrics.outage_count).sum(),
        total_reacquisition_time_s: runs
            .iter()
            .map(|r| r.metrics.total_reacquisition_time_s)
            .sum(),
        mean_discovery_airtime_fraction: mean(&|m| m.discovery_airtime_fraction),
        measurement_count: runs.iter().map(|r| r.metrics.measurement_count).sum(),
        nbo_entries: runs.iter().map(|r| r.metrics.nbo_entries).sum(),
        recovery_failures: runs.iter().map(|r| r.metrics.recovery_failures).sum(),
        sync_loss_threshold,
        runs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(10, 10);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.6 && lo < 0.8);
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.35);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn wilson_matches_closed_form() {
        // 48 of 50: centre and half-width evaluated by hand
        let (lo, hi) = wilson_interval(48, 50);
        assert!((lo - 0.8654).abs() < 1e-3, "{lo}");
        assert!((hi - 0.9890).abs() < 1e-3, "{hi}");
    }
}
