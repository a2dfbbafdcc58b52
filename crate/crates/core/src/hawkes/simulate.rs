//! Simulation through the cluster representation.
//!
//! Immigrants of type `i` arrive as a homogeneous Poisson process of rate `μ_i`. An event
//! of type `j` at time `s` has a Poisson number of type-`i` children with mean
//! `G_ij · (1 − exp(−β_ij (T − s)))`, placed at exponential offsets conditioned to land
//! before the horizon `T`.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::{HawkesError, HawkesModel};

/// Largest expected number of events a simulation may produce.
pub const EVENT_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub process: usize,
    /// Index of the immigrant that started this event's cluster.
    pub root: usize,
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventStream {
    pub names: Vec<String>,
    pub horizon: f64,
    /// Sorted by time.
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.names.len()];
        for e in &self.events {
            c[e.process] += 1;
        }
        c
    }
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Exponential(`beta`) variable conditioned to be at most `window`.
fn truncated_exp<R: Rng + ?Sized>(rng: &mut R, beta: f64, window: f64) -> f64 {
    let mass = -(-beta * window).exp_m1();
    let u: f64 = rng.random();
    -(-u * mass).ln_1p() / beta
}

/// One realization on `[0, horizon]`.
pub fn simulate<R: Rng + ?Sized>(model: &HawkesModel, horizon: f64, rng: &mut R) -> Result<EventStream, HawkesError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(HawkesError::InsufficientData("horizon must be positive and finite".into()));
    }
    let lam = model.mean_intensity()?;
    let expected = lam.sum() * horizon;
    if expected > EVENT_BUDGET {
        return Err(HawkesError::Budget { expected, budget: EVENT_BUDGET });
    }
    let n = model.dim();
    let (g, beta) = (model.g(), model.beta());
    let mut events = Vec::new();
    let mut queue = VecDeque::new();
    for i in 0..n {
        for _ in 0..poisson(rng, model.mu()[i] * horizon) {
            let root = events.len() + queue.len();
            queue.push_back(Event { time: rng.random::<f64>() * horizon, process: i, root, generation: 0 });
        }
    }
    // Roots are numbered in creation order above; children inherit them.
    while let Some(e) = queue.pop_front() {
        let window = horizon - e.time;
        for i in 0..n {
            let gij = g[(i, e.process)];
            if gij <= 0.0 {
                continue;
            }
            let b = beta[(i, e.process)];
            for _ in 0..poisson(rng, gij * -(-b * window).exp_m1()) {
                let time = e.time + truncated_exp(rng, b, window);
                queue.push_back(Event { time: time.min(horizon), process: i, root: e.root, generation: e.generation + 1 });
            }
        }
        events.push(e);
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.process.cmp(&b.process)));
    Ok(EventStream { names: model.names().to_vec(), horizon, events })
}

/// Event counts per process in one cluster rooted at a `root` event, with no horizon.
/// When `first_children` is given, the root's own children are restricted to those
/// processes, which injects an event that propagates only along the chosen edges.
pub fn simulate_cluster<R: Rng + ?Sized>(
    model: &HawkesModel,
    root: usize,
    first_children: Option<&[usize]>,
    rng: &mut R,
) -> Result<Vec<u64>, HawkesError> {
    model.ensure_valid()?;
    let n = model.dim();
    if root >= n {
        return Err(HawkesError::UnknownProcess(format!("#{root}")));
    }
    let g = model.g();
    let mut counts = vec![0u64; n];
    counts[root] = 1;
    let mut frontier: Vec<u64> = vec![0; n];
    for i in 0..n {
        if first_children.is_none_or(|allowed| allowed.contains(&i)) {
            frontier[i] = poisson(rng, g[(i, root)]);
        }
    }
    let mut total: u64 = 1;
    while frontier.iter().any(|&c| c > 0) {
        let mut next = vec![0u64; n];
        for (j, &c) in frontier.iter().enumerate() {
            counts[j] += c;
            total += c;
            for (i, slot) in next.iter_mut().enumerate() {
                // A sum of `c` independent Poisson(G_ij) draws.
                *slot += poisson(rng, c as f64 * g[(i, j)]);
            }
        }
        if total as f64 > EVENT_BUDGET {
            return Err(HawkesError::Budget { expected: total as f64, budget: EVENT_BUDGET });
        }
        frontier = next;
    }
    Ok(counts)
}
