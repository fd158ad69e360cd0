//! Discrete-event simulation of the preemptive network itself.
//!
//! All edge services together form a Poisson process of rate `mu` (the sum of
//! augmented edge rates). Each event picks edge `(u, w)` with probability
//! `mu_uw / mu`; every age grows by the gap, then `w` keeps the fresher of its
//! own packet and `u`'s (the source resets to zero when the virtual edge
//! fires). Ages are piecewise linear, so time integrals and threshold
//! occupancies are accumulated exactly per gap with no discretisation.
//!
//! This is the independent check on the shortest-path characterisation used
//! by the exact engine and the sampler.

use std::io::Write;

use rand::RngCore;
use rand_distr::{Distribution, WeightedAliasIndex};

use crate::error::{Error, Result};
use crate::network::{AugmentedNetwork, NodeId, SubsetId};
use crate::par::{map_indexed, Exec};
use crate::rng::{exponential, RngPolicy};
use crate::sampler::Estimate;

/// Number of batches used for batch-means error bars.
pub const BATCHES: usize = 32;
pub const DEFAULT_BURN_IN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub total_events: u64,
    /// Fraction of events discarded before accumulation starts.
    pub burn_in_fraction: f64,
    pub master_seed: u64,
    /// Per-user-node starting ages; zeros when `None`.
    pub initial_ages: Option<Vec<f64>>,
    /// Also measure how long each edge's endpoints hold identical ages.
    pub track_coincidence: bool,
    /// Node sets whose minimum age is integrated alongside the single nodes.
    pub subsets: Vec<SubsetId>,
}

impl SimConfig {
    pub fn new(total_events: u64, master_seed: u64) -> Self {
        SimConfig {
            total_events,
            burn_in_fraction: DEFAULT_BURN_IN,
            master_seed,
            initial_ages: None,
            track_coincidence: false,
            subsets: Vec::new(),
        }
    }

    fn burn_in_events(&self) -> u64 {
        (self.burn_in_fraction * self.total_events as f64).ceil() as u64
    }
}

/// Exact time integrals of the age trajectories over the post-burn-in window.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// One column per user node, then one per tracked subset.
    columns: usize,
    subsets: Vec<SubsetId>,
    thresholds: Vec<f64>,
    integral: Vec<f64>,
    integral_sq: Vec<f64>,
    /// `occupancy[v * thresholds + k]`: time with age of `v` at least `thresholds[k]`.
    occupancy: Vec<f64>,
    window_length: f64,
    events_used: u64,
    batch_length: Vec<f64>,
    batch_integral: Vec<f64>,
    batch_occupancy: Vec<f64>,
    coincidence: Vec<(NodeId, NodeId, f64)>,
}

impl SimResult {
    pub fn window_length(&self) -> f64 {
        self.window_length
    }

    pub fn events_used(&self) -> u64 {
        self.events_used
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// `integral of age_v dt` over the window.
    pub fn integral(&self, v: NodeId) -> f64 {
        self.integral[v.0]
    }

    /// `integral of age_v^2 dt` over the window.
    pub fn integral_sq(&self, v: NodeId) -> f64 {
        self.integral_sq[v.0]
    }

    pub fn occupancy(&self, v: NodeId, d: f64) -> Result<f64> {
        let k = self.threshold_index(d)?;
        Ok(self.occupancy[v.0 * self.thresholds.len() + k])
    }

    fn threshold_index(&self, d: f64) -> Result<usize> {
        self.thresholds.iter().position(|&t| t == d).ok_or(Error::ThresholdNotRequested(d))
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if self.window_length <= 0.0 {
            return Err(Error::EmptyWindow);
        }
        if v.0 >= self.columns - self.subsets.len() {
            return Err(Error::InvalidArgument(format!("node index {} out of range", v.0)));
        }
        Ok(())
    }

    fn batch_stderr(&self, per_batch: impl Fn(usize) -> f64) -> f64 {
        let b = self.batch_length.len();
        if b < 2 {
            return f64::NAN;
        }
        let xs: Vec<f64> = (0..b).map(|i| per_batch(i) / self.batch_length[i]).collect();
        let mean = xs.iter().sum::<f64>() / b as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    }

    /// Long-run average age of `v` over the window.
    pub fn time_average(&self, v: NodeId) -> Result<f64> {
        self.check(v)?;
        Ok(self.integral[v.0] / self.window_length)
    }

    /// Time average with a batch-means standard error.
    pub fn time_average_estimate(&self, v: NodeId) -> Result<Estimate> {
        let value = self.time_average(v)?;
        let stderr = self.batch_stderr(|b| self.batch_integral[b * self.columns + v.0]);
        Ok(Estimate { value, stderr })
    }

    /// Second moment of the age of `v`.
    pub fn time_average_sq(&self, v: NodeId) -> Result<f64> {
        self.check(v)?;
        Ok(self.integral_sq[v.0] / self.window_length)
    }

    /// Exact fraction of the window during which the age of `v` is at least `d`.
    pub fn violation_fraction(&self, v: NodeId, d: f64) -> Result<f64> {
        self.check(v)?;
        Ok(self.occupancy(v, d)? / self.window_length)
    }

    pub fn violation_estimate(&self, v: NodeId, d: f64) -> Result<Estimate> {
        let value = self.violation_fraction(v, d)?;
        let k = self.threshold_index(d)?;
        let t = self.thresholds.len();
        let stderr = self.batch_stderr(|b| self.batch_occupancy[(b * self.columns + v.0) * t + k]);
        Ok(Estimate { value, stderr })
    }

    fn column(&self, a: &SubsetId) -> Result<usize> {
        if a.len() == 1 {
            return Ok(a.indices()[0]);
        }
        let nodes = self.columns - self.subsets.len();
        self.subsets
            .iter()
            .position(|s| s == a)
            .map(|k| nodes + k)
            .ok_or_else(|| Error::InvalidArgument("subset was not tracked by the simulation".into()))
    }

    /// Time average of the minimum age over `a`. Subsets of two or more nodes
    /// must have been listed in [`SimConfig::subsets`].
    pub fn subset_time_average_estimate(&self, a: &SubsetId) -> Result<Estimate> {
        if self.window_length <= 0.0 {
            return Err(Error::EmptyWindow);
        }
        let c = self.column(a)?;
        let value = self.integral[c] / self.window_length;
        let stderr = self.batch_stderr(|b| self.batch_integral[b * self.columns + c]);
        Ok(Estimate { value, stderr })
    }

    pub fn subset_violation_estimate(&self, a: &SubsetId, d: f64) -> Result<Estimate> {
        if self.window_length <= 0.0 {
            return Err(Error::EmptyWindow);
        }
        let c = self.column(a)?;
        let k = self.threshold_index(d)?;
        let t = self.thresholds.len();
        let value = self.occupancy[c * t + k] / self.window_length;
        let stderr = self.batch_stderr(|b| self.batch_occupancy[(b * self.columns + c) * t + k]);
        Ok(Estimate { value, stderr })
    }

    /// Fraction of the window during which both ends of edge `(u, w)` held the
    /// same age. Requires `track_coincidence`.
    pub fn coincidence_fraction(&self, u: NodeId, w: NodeId) -> Option<f64> {
        if self.window_length <= 0.0 {
            return None;
        }
        self.coincidence.iter().find(|c| c.0 == u && c.1 == w).map(|c| c.2 / self.window_length)
    }
}

/// Runs the simulation and accumulates integrals for the requested thresholds.
pub fn simulate(net: &AugmentedNetwork, cfg: &SimConfig, thresholds: &[f64]) -> Result<SimResult> {
    run(net, cfg, thresholds, None)
}

/// Like [`simulate`], also writing every event as a CSV row:
/// `event,time,edge,<age of each user node after the event>`.
pub fn simulate_traced(
    net: &AugmentedNetwork,
    cfg: &SimConfig,
    thresholds: &[f64],
    trace: &mut dyn Write,
) -> Result<SimResult> {
    run(net, cfg, thresholds, Some(trace))
}

/// Independent runs, one per configuration, possibly in parallel. Results
/// come back in the order of `cfgs`.
pub fn simulate_many(
    net: &AugmentedNetwork,
    cfgs: &[SimConfig],
    thresholds: &[f64],
    exec: Exec,
) -> Vec<Result<SimResult>> {
    map_indexed(exec, cfgs.len(), |k| simulate(net, &cfgs[k], thresholds))
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn run(
    net: &AugmentedNetwork,
    cfg: &SimConfig,
    thresholds: &[f64],
    mut trace: Option<&mut dyn Write>,
) -> Result<SimResult> {
    if cfg.total_events == 0 {
        return Err(Error::InvalidArgument("total_events must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&cfg.burn_in_fraction) {
        return Err(Error::InvalidArgument(format!(
            "burn-in fraction must lie in [0, 1), got {}",
            cfg.burn_in_fraction
        )));
    }
    if thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::InvalidArgument("threshold is NaN".into()));
    }
    let n = net.node_count();
    let mut ages = match &cfg.initial_ages {
        Some(a) if a.len() == n && a.iter().all(|x| x.is_finite() && *x >= 0.0) => a.clone(),
        Some(_) => return Err(Error::InvalidArgument("initial ages must be one non-negative value per node".into())),
        None => vec![0.0; n],
    };

    for a in &cfg.subsets {
        if a.is_empty() || a.indices().iter().any(|&i| i >= n) {
            return Err(Error::InvalidArgument("tracked subsets must be non-empty sets of user nodes".into()));
        }
    }
    let cols = n + cfg.subsets.len();
    let mut view = vec![0.0; cols];

    let edges = net.edges();
    let alias = WeightedAliasIndex::new(edges.iter().map(|e| e.rate).collect())
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let total_rate = net.total_rate();
    let tp = net.theta_prime();
    let source = net.source().0;
    let mut rng = RngPolicy::new(cfg.master_seed).simulator_rng();

    let nt = thresholds.len();
    let burn = cfg.burn_in_events().min(cfg.total_events);
    let used = cfg.total_events - burn;
    let batches = (BATCHES as u64).min(used) as usize;
    let mut res = SimResult {
        columns: cols,
        subsets: cfg.subsets.clone(),
        thresholds: thresholds.to_vec(),
        integral: vec![0.0; cols],
        integral_sq: vec![0.0; cols],
        occupancy: vec![0.0; cols * nt],
        window_length: 0.0,
        events_used: used,
        batch_length: vec![0.0; batches],
        batch_integral: vec![0.0; batches * cols],
        batch_occupancy: vec![0.0; batches * cols * nt],
        coincidence: Vec::new(),
    };
    let tracked: Vec<(usize, usize)> = if cfg.track_coincidence {
        edges.iter().filter(|e| e.from != tp).map(|e| (e.from.0, e.to.0)).collect()
    } else {
        Vec::new()
    };
    let mut tie_time = vec![0.0; tracked.len()];

    if let Some(w) = trace.as_deref_mut() {
        write!(w, "event,time,edge").map_err(io)?;
        for l in net.labels() {
            write!(w, ",{l}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }

    let mut clock = 0.0;
    for event in 0..cfg.total_events {
        let gap = exponential(rng.next_u64(), total_rate);
        let k = alias.sample(&mut rng);

        if event >= burn {
            let j = event - burn;
            let batch = (j * batches as u64 / used) as usize;
            res.window_length += gap;
            res.batch_length[batch] += gap;
            let (g2, g3) = (gap * gap, gap * gap * gap);
            view[..n].copy_from_slice(&ages);
            for (slot, a) in view[n..].iter_mut().zip(&cfg.subsets) {
                *slot = a.indices().iter().map(|&i| ages[i]).fold(f64::INFINITY, f64::min);
            }
            for (v, &a) in view.iter().enumerate() {
                let area = a * gap + g2 / 2.0;
                res.integral[v] += area;
                res.integral_sq[v] += a * a * gap + a * g2 + g3 / 3.0;
                res.batch_integral[batch * cols + v] += area;
                for (t, &d) in thresholds.iter().enumerate() {
                    let above = (gap - (d - a).max(0.0)).max(0.0);
                    res.occupancy[v * nt + t] += above;
                    res.batch_occupancy[(batch * cols + v) * nt + t] += above;
                }
            }
            for (slot, &(u, w)) in tracked.iter().enumerate() {
                if ages[u] == ages[w] {
                    tie_time[slot] += gap;
                }
            }
        }

        clock += gap;
        for a in ages.iter_mut() {
            *a += gap;
        }
        let e = &edges[k];
        let w = e.to.0;
        if w == source {
            ages[w] = 0.0;
        } else {
            let before = ages[w];
            ages[w] = ages[w].min(ages[e.from.0]);
            debug_assert!(ages[w] <= before);
        }

        if let Some(out) = trace.as_deref_mut() {
            write!(out, "{},{},{}", event + 1, clock, net.edge_label(e)).map_err(io)?;
            for a in &ages {
                write!(out, ",{a}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
    }

    res.coincidence = tracked.iter().zip(tie_time).map(|(&(u, w), t)| (NodeId(u), NodeId(w), t)).collect();
    Ok(res)
}
