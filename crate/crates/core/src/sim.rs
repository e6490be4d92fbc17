//! Synthetic scenarios: evolving sparse topologies observed through a graph
//! filter.
//!
//! # Random streams
//!
//! Every random draw comes from a ChaCha8 generator seeded with
//! `seed_from_u64(seed)` and placed on stream `trial` (see [`trial_rng`]), so
//! Monte-Carlo trials use disjoint substreams of one seed and can run in any
//! order. Within a trial the draw order is fixed:
//!
//! 1. the initial support (`init_edge_count` distinct edges),
//! 2. then for each `t = 1..=t_max`:
//!    * at event times (`t % change_interval == 0`), per toggle: one uniform
//!      `[0, 1)` coin (`< 0.5` adds), one uniform edge pick, and for an add
//!      one standard normal for the new weight,
//!    * one standard normal per active edge (ascending index) for process
//!      noise,
//!    * `N` standard normals for the input `q_t`,
//!    * `N` standard normals for the measurement noise.

use std::io::{Read, Write};

use nalgebra::DVector;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{measurement, PolynomialFilter};
use crate::graph::{build_incidence, EdgeIndexMap, EdgeSet};

/// Generator for Monte-Carlo trial `trial` of an experiment seeded with
/// `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn default_changes() -> usize {
    1
}
fn default_new_edge_mean() -> f64 {
    1.0
}
fn default_new_edge_var() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    pub t_max: usize,
    pub init_edge_count: usize,
    /// Steps between support-change events; events happen at multiples of
    /// this value.
    pub change_interval: usize,
    #[serde(default = "default_changes")]
    pub changes_per_event: usize,
    /// Process-noise standard deviation on active edges.
    pub sigma_e: f64,
    /// Measurement-noise standard deviation.
    pub sigma_v: f64,
    pub filter: PolynomialFilter,
    #[serde(default = "default_new_edge_mean")]
    pub new_edge_mean: f64,
    #[serde(default = "default_new_edge_var")]
    pub new_edge_var: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn max_edges(&self) -> usize {
        self.n_nodes * self.n_nodes.saturating_sub(1) / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::invalid("n_nodes must be at least 2"));
        }
        if self.t_max < 1 {
            return Err(Error::invalid("t_max must be at least 1"));
        }
        if self.change_interval < 1 {
            return Err(Error::invalid("change_interval must be at least 1"));
        }
        if self.init_edge_count > self.max_edges() {
            return Err(Error::invalid(format!(
                "init_edge_count {} exceeds the {} candidate edges",
                self.init_edge_count,
                self.max_edges()
            )));
        }
        for (name, v) in [
            ("sigma_e", self.sigma_e),
            ("sigma_v", self.sigma_v),
            ("new_edge_var", self.new_edge_var),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        if !self.new_edge_mean.is_finite() {
            return Err(Error::invalid("new_edge_mean must be finite"));
        }
        Ok(())
    }

    /// Event times within `1..=t_max`.
    pub fn event_times(&self) -> Vec<usize> {
        (1..=self.t_max)
            .filter(|t| t % self.change_interval == 0)
            .collect()
    }
}

/// Ground truth for one run. Index `i` of each sequence is time `t = i + 1`;
/// the state before the first step is `initial_state`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n_nodes: usize,
    pub initial_state: DVector<f64>,
    pub initial_support: EdgeSet,
    pub true_states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub observations: Vec<DVector<f64>>,
    pub true_supports: Vec<EdgeSet>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.true_states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_states.is_empty()
    }

    /// Support at step index `i - 1`, or the initial support for `i == 0`.
    pub fn previous_support(&self, i: usize) -> &EdgeSet {
        if i == 0 {
            &self.initial_support
        } else {
            &self.true_supports[i - 1]
        }
    }

    /// Edges that became active at step index `i`.
    pub fn newly_active(&self, i: usize) -> EdgeSet {
        self.true_supports[i]
            .difference(self.previous_support(i))
            .copied()
            .collect()
    }

    /// One row per time step: `t, x_0.., q_0.., y_0.., support`, where
    /// `support` lists the active edge indices separated by spaces. Row
    /// `t = 0` carries the initial state with empty input and observation
    /// fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let m = self.initial_state.len();
        let n = self.n_nodes;
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((0..m).map(|i| format!("x{i}")))
            .chain((0..n).map(|i| format!("q{i}")))
            .chain((0..n).map(|i| format!("y{i}")))
            .chain(std::iter::once("support".to_string()))
            .collect();
        w.write_record(&header)?;

        let mut row = Vec::with_capacity(header.len());
        row.push("0".to_string());
        row.extend(self.initial_state.iter().map(|v| format!("{v:?}")));
        row.extend(std::iter::repeat_n(String::new(), 2 * n));
        row.push(join_support(&self.initial_support));
        w.write_record(&row)?;

        for i in 0..self.len() {
            row.clear();
            row.push((i + 1).to_string());
            for v in self.true_states[i]
                .iter()
                .chain(self.inputs[i].iter())
                .chain(self.observations[i].iter())
            {
                row.push(format!("{v:?}"));
            }
            row.push(join_support(&self.true_supports[i]));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }

    /// Inverse of [`Trajectory::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let m = header.iter().filter(|h| h.starts_with('x')).count();
        let n = header.iter().filter(|h| h.starts_with('q')).count();
        if header.len() != 2 + m + 2 * n || n < 2 || m != n * (n - 1) / 2 || &header[1 + m + 2 * n] != "support" {
            return Err(Error::Csv(format!(
                "unexpected trajectory header with {m} weights and {n} nodes"
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Csv(format!("bad number {s:?}: {e}")))
        };
        let support = |s: &str| -> Result<EdgeSet> {
            s.split_whitespace()
                .map(|v| match v.parse::<usize>() {
                    Ok(e) if e < m => Ok(e),
                    _ => Err(Error::Csv(format!("bad support entry {v:?}"))),
                })
                .collect()
        };

        let mut out = Trajectory {
            n_nodes: n,
            initial_state: DVector::zeros(m),
            initial_support: EdgeSet::new(),
            true_states: Vec::new(),
            inputs: Vec::new(),
            observations: Vec::new(),
            true_supports: Vec::new(),
        };
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let t: usize = rec[0]
                .parse()
                .map_err(|e| Error::Csv(format!("bad time index: {e}")))?;
            if t != line {
                return Err(Error::Csv(format!("expected t = {line}, found {t}")));
            }
            let x = DVector::from_iterator(m, (1..=m).map(|i| parse(&rec[i])).collect::<Result<Vec<_>>>()?);
            let active = support(&rec[1 + m + 2 * n])?;
            if t == 0 {
                out.initial_support = active;
                out.initial_state = x;
                continue;
            }
            let q = (1 + m..1 + m + n).map(|i| parse(&rec[i])).collect::<Result<Vec<_>>>()?;
            let y = (1 + m + n..1 + m + 2 * n)
                .map(|i| parse(&rec[i]))
                .collect::<Result<Vec<_>>>()?;
            out.true_supports.push(active);
            out.true_states.push(x);
            out.inputs.push(DVector::from_vec(q));
            out.observations.push(DVector::from_vec(y));
        }
        Ok(out)
    }
}

fn join_support(s: &EdgeSet) -> String {
    s.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
}

/// Generates the trajectory for trial stream 0 of `config.seed`.
pub fn generate(config: &ScenarioConfig) -> Result<Trajectory> {
    generate_with_rng(config, &mut trial_rng(config.seed, 0))
}

pub fn generate_with_rng<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Trajectory> {
    config.validate()?;
    let map = EdgeIndexMap::new(config.n_nodes)?;
    let b = build_incidence(&map);
    let m_edges = map.max_edges();
    let n = config.n_nodes;

    let mut support: EdgeSet = index::sample(rng, m_edges, config.init_edge_count)
        .into_iter()
        .collect();
    let mut x = DVector::zeros(m_edges);
    for &m in &support {
        x[m] = 1.0;
    }

    let mut traj = Trajectory {
        n_nodes: n,
        initial_state: x.clone(),
        initial_support: support.clone(),
        true_states: Vec::with_capacity(config.t_max),
        inputs: Vec::with_capacity(config.t_max),
        observations: Vec::with_capacity(config.t_max),
        true_supports: Vec::with_capacity(config.t_max),
    };

    let new_edge_sd = config.new_edge_var.sqrt();
    for t in 1..=config.t_max {
        if t % config.change_interval == 0 {
            for _ in 0..config.changes_per_event {
                let add = rng.random::<f64>() < 0.5;
                if add {
                    let absent: Vec<usize> = (0..m_edges).filter(|m| !support.contains(m)).collect();
                    if absent.is_empty() {
                        continue;
                    }
                    let m = absent[rng.random_range(0..absent.len())];
                    let z: f64 = rng.sample(StandardNormal);
                    x[m] = (config.new_edge_mean + new_edge_sd * z).max(0.0);
                    support.insert(m);
                } else {
                    if support.is_empty() {
                        continue;
                    }
                    let present: Vec<usize> = support.iter().copied().collect();
                    let m = present[rng.random_range(0..present.len())];
                    x[m] = 0.0;
                    support.remove(&m);
                }
            }
        }

        for &m in &support {
            let z: f64 = rng.sample(StandardNormal);
            x[m] = (x[m] + config.sigma_e * z).max(0.0);
        }

        let q = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = measurement(&config.filter, &b, &x, &q)? + noise * config.sigma_v;

        traj.true_states.push(x.clone());
        traj.inputs.push(q);
        traj.observations.push(y);
        traj.true_supports.push(support.clone());
    }
    Ok(traj)
}
