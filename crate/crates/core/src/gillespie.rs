//! Exact stochastic simulation of the gate jump process.
//!
//! Two modes:
//!
//! - frozen: the generator is fixed (node potential held), so the process
//!   is the literal finite-state Markov chain of the master equation;
//! - live node: the output voltage moves by `q / C_g` whenever an electron
//!   crosses the node boundary, and the gate-electrode rates are refreshed
//!   after every such jump. Node transfers carry the half-charging-energy
//!   shift so the discrete chain detailed-balances against the node energy.
//!
//! Trajectories are reproducible: each takes an independent counter-based
//! stream derived from `(master seed, trajectory index)`, so ensembles give
//! identical results for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::device::{ElectrodeLabel, GateState, N_STATES};
use crate::error::{Error, Result};
use crate::master::{NandSystem, RateMatrix, SingleParticleRates};

/// One electron jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub from: u8,
    pub to: u8,
}

/// One realization of the jump process.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial_state: GateState,
    pub initial_v_out: f64,
    pub events: Vec<JumpEvent>,
    pub final_state: GateState,
    pub final_v_out: f64,
    pub seed: u64,
    pub stream: u64,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_waiting_time(rng: &mut ChaCha8Rng, total_rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / total_rate
}

/// Next state of the frozen chain, drawn from the generator column.
fn pick_column(rng: &mut ChaCha8Rng, gen_rates: &RateMatrix, state: usize, total: f64) -> usize {
    let r: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for to in 0..N_STATES {
        if to == state {
            continue;
        }
        acc += gen_rates.entry(to, state);
        if r < acc {
            return to;
        }
    }
    state
}

/// Trajectory of a frozen generator (no node feedback), for any generator
/// over the sixteen-state space.
pub fn frozen_trajectory(
    gen_rates: &RateMatrix,
    initial: GateState,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Trajectory {
    let mut rng = stream_rng(seed, stream);
    let mut t = 0.0;
    let mut state = initial.index();
    let mut events = Vec::new();
    loop {
        let total = gen_rates.exit_rate(state);
        if total <= 0.0 {
            break;
        }
        let dt = draw_waiting_time(&mut rng, total);
        if t + dt > horizon {
            break;
        }
        t += dt;
        let next = pick_column(&mut rng, gen_rates, state, total);
        if next == state {
            continue;
        }
        events.push(JumpEvent {
            time: t,
            from: state as u8,
            to: next as u8,
        });
        state = next;
    }
    Trajectory {
        initial_state: initial,
        initial_v_out: 0.0,
        final_state: GateState::from_index(state),
        final_v_out: 0.0,
        events,
        seed,
        stream,
    }
}

/// Empirical state marginals of the frozen process at the given checkpoint
/// times (ascending), over `n_traj` independent trajectories.
pub fn frozen_marginals_at(
    gen_rates: &RateMatrix,
    initial: GateState,
    checkpoints: &[f64],
    n_traj: usize,
    seed: u64,
) -> Vec<[f64; N_STATES]> {
    let zero = || vec![[0u64; N_STATES]; checkpoints.len()];
    let counts = (0..n_traj)
        .into_par_iter()
        .fold(zero, |mut acc, i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut t = 0.0;
            let mut state = initial.index();
            let mut next_cp = 0;
            while next_cp < checkpoints.len() {
                let total = gen_rates.exit_rate(state);
                let dt = if total > 0.0 {
                    draw_waiting_time(&mut rng, total)
                } else {
                    f64::INFINITY
                };
                while next_cp < checkpoints.len() && t + dt > checkpoints[next_cp] {
                    acc[next_cp][state] += 1;
                    next_cp += 1;
                }
                if next_cp >= checkpoints.len() {
                    break;
                }
                t += dt;
                state = pick_column(&mut rng, gen_rates, state, total);
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b.iter()) {
                for (x, y) in ra.iter_mut().zip(rb.iter()) {
                    *x += y;
                }
            }
            a
        });
    counts
        .into_iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            let mut m = [0.0; N_STATES];
            for (slot, c) in m.iter_mut().zip(row.iter()) {
                *slot = *c as f64 / total as f64;
            }
            m
        })
        .collect()
}

#[derive(Clone, Copy)]
struct Edge {
    to: u8,
    rate: f64,
    /// Electrons added to the node by this jump (-1, 0, +1).
    node_delta: i8,
}

const NO_EDGE: Edge = Edge {
    to: 0,
    rate: 0.0,
    node_delta: 0,
};

/// Outgoing edges of `state` under `rates`: at most six contacts plus two
/// island hops.
fn out_edges(rates: &SingleParticleRates, state: GateState, edges: &mut [Edge; 8]) -> (usize, f64) {
    let mut n = 0;
    let mut total = 0.0;
    for c in &rates.contacts {
        let occupied = state.occupied(c.transistor);
        let rate = if occupied {
            c.into_electrode
        } else {
            c.into_island
        };
        if rate <= 0.0 {
            continue;
        }
        let node_delta = if c.electrode == ElectrodeLabel::Gate {
            if occupied {
                1 // electron leaves the island into the node
            } else {
                -1
            }
        } else {
            0
        };
        edges[n] = Edge {
            to: state.with_flipped(c.transistor).index() as u8,
            rate,
            node_delta,
        };
        total += rate;
        n += 1;
    }
    for h in &rates.hops {
        if state.occupied(h.from) && !state.occupied(h.to) && h.rate > 0.0 {
            edges[n] = Edge {
                to: state.with_flipped(h.from).with_flipped(h.to).index() as u8,
                rate: h.rate,
                node_delta: 0,
            };
            total += h.rate;
            n += 1;
        }
    }
    (n, total)
}

/// Live-node stepper: jump process plus discrete node voltage.
pub struct NodeSampler<'a> {
    system: &'a NandSystem,
    rates: SingleParticleRates,
    pub state: GateState,
    pub v_out: f64,
    pub time: f64,
    rng: ChaCha8Rng,
    dv_per_electron: f64,
    node_shift: f64,
}

impl<'a> NodeSampler<'a> {
    pub fn new(
        system: &'a NandSystem,
        initial: GateState,
        v0: f64,
        seed: u64,
        stream: u64,
    ) -> Self {
        let node_shift = system.node_shift();
        let q = system.params.constants.charge;
        Self {
            system,
            rates: system.rates_at(v0, node_shift),
            state: initial,
            v_out: v0,
            time: 0.0,
            rng: stream_rng(seed, stream),
            dv_per_electron: q / system.params.c_g,
            node_shift,
        }
    }

    fn apply(&mut self, e: Edge) {
        self.state = GateState::from_index(e.to as usize);
        if e.node_delta != 0 {
            self.v_out += e.node_delta as f64 * self.dv_per_electron;
            self.rates = self.system.rates_at(self.v_out, self.node_shift);
        }
    }

    /// Run until `horizon`, reporting each jump to `visit`. The waiting
    /// time that would carry past the horizon is discarded.
    pub fn run_to(&mut self, horizon: f64, mut visit: impl FnMut(JumpEvent)) {
        let mut edges = [NO_EDGE; 8];
        loop {
            let (n, total) = out_edges(&self.rates, self.state, &mut edges);
            if n == 0 || total <= 0.0 {
                self.time = horizon;
                return;
            }
            let dt = draw_waiting_time(&mut self.rng, total);
            if self.time + dt > horizon {
                self.time = horizon;
                return;
            }
            self.time += dt;
            let r: f64 = self.rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, e) in edges.iter().take(n).enumerate() {
                acc += e.rate;
                if r < acc {
                    chosen = i;
                    break;
                }
            }
            let e = edges[chosen];
            let event = JumpEvent {
                time: self.time,
                from: self.state.index() as u8,
                to: e.to,
            };
            self.apply(e);
            visit(event);
        }
    }
}

/// Statistically exact realization of the gate jump process with node
/// feedback. Identical `(system, initial, v0, horizon, seed, stream)` give
/// a bit-identical trajectory.
pub fn sample_trajectory(
    system: &NandSystem,
    initial: GateState,
    v0: f64,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Trajectory {
    let mut sampler = NodeSampler::new(system, initial, v0, seed, stream);
    let mut events = Vec::new();
    sampler.run_to(horizon, |e| events.push(e));
    Trajectory {
        initial_state: initial,
        initial_v_out: v0,
        events,
        final_state: sampler.state,
        final_v_out: sampler.v_out,
        seed,
        stream,
    }
}

/// Node-voltage snapshots at `burn_in` from independent trajectories.
pub fn voltage_snapshots(
    system: &NandSystem,
    initial: GateState,
    v0: f64,
    burn_in: f64,
    n_samples: usize,
    seed: u64,
) -> Vec<f64> {
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut sampler = NodeSampler::new(system, initial, v0, seed, i as u64);
            sampler.run_to(burn_in, |_| {});
            sampler.v_out
        })
        .collect()
}

/// Sojourn times in `state` collected from a frozen-generator run.
pub fn frozen_sojourn_times(
    gen_rates: &RateMatrix,
    initial: GateState,
    state: GateState,
    n_sojourns: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    let mut times = Vec::with_capacity(n_sojourns);
    let mut current = initial.index();
    let mut entered = 0.0f64;
    let mut t = 0.0f64;
    while times.len() < n_sojourns {
        let total = gen_rates.exit_rate(current);
        if total <= 0.0 {
            break;
        }
        let dt = draw_waiting_time(&mut rng, total);
        t += dt;
        if current == state.index() {
            times.push(t - entered);
        }
        let next = pick_column(&mut rng, gen_rates, current, total);
        if next == state.index() {
            entered = t;
        }
        current = next;
    }
    times
}

/// Kolmogorov-Smirnov statistic of `times` against Exponential(`rate`).
pub fn ks_statistic_exponential(times: &[f64], rate: f64) -> f64 {
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &t) in sorted.iter().enumerate() {
        let cdf = 1.0 - (-rate * t).exp();
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
    }
    d
}

/// Histogram with uniform bins spanning the sample range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `n_bins + 1` edges (V).
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], n_bins: usize) -> Self {
        assert!(n_bins > 0 && !samples.is_empty());
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if max > min {
            (max - min) / n_bins as f64
        } else {
            1.0
        };
        let edges: Vec<f64> = (0..=n_bins).map(|i| min + i as f64 * width).collect();
        let mut counts = vec![0u64; n_bins];
        for &x in samples {
            let mut idx = ((x - min) / width) as usize;
            if idx >= n_bins {
                idx = n_bins - 1;
            }
            counts[idx] += 1;
        }
        Histogram { edges, counts }
    }

    /// CSV export: `bin_left_V, bin_right_V, count`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "bin_left_V,bin_right_V,count")?;
        for (i, &c) in self.counts.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e},{c}", self.edges[i], self.edges[i + 1])?;
        }
        Ok(())
    }
}

/// Moments and histogram of an output-voltage sample.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance (V^2).
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub histogram: Histogram,
}

impl OutputStats {
    pub fn from_samples(samples: &[f64], n_bins: usize) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidParams(
                "output statistics need at least two samples".into(),
            ));
        }
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        let mut m4 = 0.0;
        for &x in samples {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= nf;
        m3 /= nf;
        m4 /= nf;
        let variance = m2 * nf / (nf - 1.0);
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Ok(OutputStats {
            n,
            mean,
            variance,
            skewness,
            excess_kurtosis,
            histogram: Histogram::from_samples(samples, n_bins),
        })
    }

    /// Standard error of the sample mean (V).
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianityThresholds {
    pub max_abs_skewness: f64,
    pub max_abs_excess_kurtosis: f64,
}

impl Default for GaussianityThresholds {
    fn default() -> Self {
        Self {
            max_abs_skewness: 0.15,
            max_abs_excess_kurtosis: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianityReport {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub thresholds: GaussianityThresholds,
    pub pass: bool,
}

/// Moment-based normality screen.
pub fn gaussianity_check(
    stats: &OutputStats,
    thresholds: GaussianityThresholds,
) -> GaussianityReport {
    let pass = stats.skewness.abs() < thresholds.max_abs_skewness
        && stats.excess_kurtosis.abs() < thresholds.max_abs_excess_kurtosis;
    GaussianityReport {
        skewness: stats.skewness,
        excess_kurtosis: stats.excess_kurtosis,
        thresholds,
        pass,
    }
}
