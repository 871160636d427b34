//! Master equation of one NAND gate.
//!
//! The generator acts on probability vectors over the sixteen occupancy
//! microstates. Entry `(m, n)` is the rate from state `n` to state `m`;
//! every column sums to zero. Electrode-island transfers carry Fermi
//! factors, island-island transfers carry (capped) Bose factors, and only
//! single-electron moves along the physical wiring are allowed:
//!
//! ```text
//! d <-> P1, d <-> P2, g <-> P1, g <-> P2, g <-> N1, s <-> N2,
//! P1 <-> P2, N1 <-> N2
//! ```
//!
//! Propagation uses uniformization: the step operator is a truncated
//! Poisson mixture of powers of `I + D/Lambda`, which preserves positivity
//! and normalization for any step size. The output node voltage advances
//! alongside from the exact within-step time integral of the occupations,
//! and the generator is refreshed quasi-statically between steps.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::device::{
    capped_island_factors, fermi_occupation, nand_energy_levels, ElectrodeLabel, ElectrodeSpec,
    GateState, NandParams, TransistorLabel, TransistorSpec, N_STATES,
};
use crate::error::{Error, Result};

type Vec16 = SVector<f64, 16>;
type Mat16 = SMatrix<f64, 16, 16>;

/// Physical wiring of Fig-style NAND kinetics: which island touches which
/// electrode.
pub const CONTACTS: [(TransistorLabel, ElectrodeLabel); 6] = [
    (TransistorLabel::P1, ElectrodeLabel::Drain),
    (TransistorLabel::P2, ElectrodeLabel::Drain),
    (TransistorLabel::P1, ElectrodeLabel::Gate),
    (TransistorLabel::P2, ElectrodeLabel::Gate),
    (TransistorLabel::N1, ElectrodeLabel::Gate),
    (TransistorLabel::N2, ElectrodeLabel::Source),
];

/// Island pairs exchanging electrons directly.
pub const ISLAND_PAIRS: [(TransistorLabel, TransistorLabel); 2] = [
    (TransistorLabel::P1, TransistorLabel::P2),
    (TransistorLabel::N1, TransistorLabel::N2),
];

/// One electrode-island contact with its directed single-particle rates.
#[derive(Debug, Clone, Copy)]
pub struct ContactRates {
    pub transistor: TransistorLabel,
    pub electrode: ElectrodeLabel,
    /// Electrode -> island rate when the island is empty (1/s).
    pub into_island: f64,
    /// Island -> electrode rate when the island is occupied (1/s).
    pub into_electrode: f64,
}

/// One directed island-island hop.
#[derive(Debug, Clone, Copy)]
pub struct IslandHop {
    pub from: TransistorLabel,
    pub to: TransistorLabel,
    /// Hop rate when `from` is occupied and `to` is empty (1/s).
    pub rate: f64,
}

/// All single-particle rates of a gate at one node voltage.
#[derive(Debug, Clone)]
pub struct SingleParticleRates {
    pub contacts: [ContactRates; 6],
    pub hops: [IslandHop; 4],
    /// Chemical potentials (J) indexed
    /// by [`ElectrodeLabel::index`].
    pub mu: [f64; 3],
}

impl SingleParticleRates {
    /// Build single-particle rates from explicit level/electrode specs.
    ///
    /// `node_shift` (J) is the half-charging-energy correction applied to
    /// the gate-electrode potential per transfer direction: transfers that
    /// add an electron to the node see `mu_g + node_shift`, removals see
    /// `mu_g - node_shift`. The mean-field master equation uses zero; the
    /// discrete-node stochastic simulator uses `q^2 / 2 C_g`.
    pub fn from_specs(
        transistors: &[TransistorSpec; 4],
        electrodes: &[ElectrodeSpec; 3],
        gamma: f64,
        beta: f64,
        bose_rate_cap: f64,
        node_shift: f64,
    ) -> Result<Self> {
        let mut mu = [0.0; 3];
        for e in electrodes {
            mu[e.label.index()] = e.chemical_potential;
        }
        let energy = |t: TransistorLabel| transistors[t.bit()].energy;

        let mut contacts = [ContactRates {
            transistor: TransistorLabel::N1,
            electrode: ElectrodeLabel::Gate,
            into_island: 0.0,
            into_electrode: 0.0,
        }; 6];
        for (slot, &(t, e)) in contacts.iter_mut().zip(CONTACTS.iter()) {
            let (mu_in, mu_out) = if e == ElectrodeLabel::Gate {
                // adding to the node = island -> gate electrode
                (mu[e.index()] - node_shift, mu[e.index()] + node_shift)
            } else {
                (mu[e.index()], mu[e.index()])
            };
            let f_in = fermi_occupation(energy(t), mu_in, beta)?;
            let f_out = fermi_occupation(energy(t), mu_out, beta)?;
            *slot = ContactRates {
                transistor: t,
                electrode: e,
                into_island: gamma * f_in,
                into_electrode: gamma * (1.0 - f_out),
            };
        }

        let mut hops = [IslandHop {
            from: TransistorLabel::N1,
            to: TransistorLabel::N2,
            rate: 0.0,
        }; 4];
        for (k, &(a, b)) in ISLAND_PAIRS.iter().enumerate() {
            let de = energy(b) - energy(a);
            let (fwd, bwd) = capped_island_factors(de, beta, bose_rate_cap)?;
            hops[2 * k] = IslandHop {
                from: a,
                to: b,
                rate: gamma * fwd,
            };
            hops[2 * k + 1] = IslandHop {
                from: b,
                to: a,
                rate: gamma * bwd,
            };
        }

        Ok(Self { contacts, hops, mu })
    }

    /// Net electron rate into the output node (electrons/s) for mean
    /// occupations `occ` (label-bit order N1, N2, P1, P2).
    pub fn node_electron_rate(&self, occ: &[f64; 4]) -> f64 {
        self.contacts
            .iter()
            .filter(|c| c.electrode == ElectrodeLabel::Gate)
            .map(|c| {
                let n = occ[c.transistor.bit()];
                c.into_electrode * n - c.into_island * (1.0 - n)
            })
            .sum()
    }

    /// Dissipation rate (W) of the supply/ground channels referenced to the
    /// node potential `mu_g` (J): sum of electron number currents times
    /// `(mu_i - mu_g)` over the s->N2, d->P1, d->P2 contacts.
    pub fn dissipation_rate(&self, occ: &[f64; 4], mu_g: f64) -> f64 {
        self.contacts
            .iter()
            .filter(|c| c.electrode != ElectrodeLabel::Gate)
            .map(|c| {
                let n = occ[c.transistor.bit()];
                let electron_rate = c.into_island * (1.0 - n) - c.into_electrode * n;
                electron_rate * (self.mu[c.electrode.index()] - mu_g)
            })
            .sum()
    }
}

/// Current (A) from electrode `i` into island `j` given the directed rates
/// and the island's mean occupation: `q [d_ji (1 - <n>) - d_ij <n>]`.
pub fn electrode_current(
    into_island: f64,
    into_electrode: f64,
    mean_occupation: f64,
    charge: f64,
) -> f64 {
    charge * (into_island * (1.0 - mean_occupation) - into_electrode * mean_occupation)
}

/// Dense 16x16 generator; entry `(m, n)` is the rate from `n` to `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    m: Mat16,
}

impl RateMatrix {
    pub fn from_rates(rates: &SingleParticleRates) -> Self {
        let mut m = Mat16::zeros();
        for n in 0..N_STATES {
            let state = GateState::from_index(n);
            for c in &rates.contacts {
                let to = state.with_flipped(c.transistor).index();
                if state.occupied(c.transistor) {
                    m[(to, n)] += c.into_electrode;
                } else {
                    m[(to, n)] += c.into_island;
                }
            }
            for h in &rates.hops {
                if state.occupied(h.from) && !state.occupied(h.to) {
                    let to = state.with_flipped(h.from).with_flipped(h.to).index();
                    m[(to, n)] += h.rate;
                }
            }
        }
        // diagonal closes each column exactly
        for n in 0..N_STATES {
            let mut total = 0.0;
            for to in 0..N_STATES {
                if to != n {
                    total += m[(to, n)];
                }
            }
            m[(n, n)] = -total;
        }
        RateMatrix { m }
    }

    /// Generator from explicit off-diagonal rates `f(to, from)`; the
    /// diagonal is closed to make every column sum to zero.
    pub fn from_fn(f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Mat16::zeros();
        for from in 0..N_STATES {
            let mut total = 0.0;
            for to in 0..N_STATES {
                if to == from {
                    continue;
                }
                let r = f(to, from);
                m[(to, from)] = r;
                total += r;
            }
            m[(from, from)] = -total;
        }
        RateMatrix { m }
    }

    #[inline]
    pub fn entry(&self, to: usize, from: usize) -> f64 {
        self.m[(to, from)]
    }

    /// Total exit rate `F_n` of state `n`.
    #[inline]
    pub fn exit_rate(&self, n: usize) -> f64 {
        -self.m[(n, n)]
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..N_STATES).fold(0.0f64, |a, n| a.max(self.exit_rate(n)))
    }

    pub fn column_sum(&self, n: usize) -> f64 {
        (0..N_STATES).map(|to| self.m[(to, n)]).sum()
    }

    pub fn min_off_diagonal(&self) -> f64 {
        let mut min = f64::INFINITY;
        for n in 0..N_STATES {
            for to in 0..N_STATES {
                if to != n {
                    min = min.min(self.m[(to, n)]);
                }
            }
        }
        min
    }

    pub fn as_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(N_STATES, N_STATES, |r, c| self.m[(r, c)])
    }

    #[inline]
    pub fn apply(&self, v: &Vec16) -> Vec16 {
        self.m * v
    }
}

/// Probability vector over the sixteen microstates.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVector(Vec16);

impl DistributionVector {
    pub fn uniform() -> Self {
        DistributionVector(Vec16::repeat(1.0 / N_STATES as f64))
    }

    pub fn delta(state: GateState) -> Self {
        let mut v = Vec16::zeros();
        v[state.index()] = 1.0;
        DistributionVector(v)
    }

    pub fn from_slice(p: &[f64]) -> Result<Self> {
        if p.len() != N_STATES {
            return Err(Error::InvalidParams(format!(
                "distribution needs {N_STATES} entries, got {}",
                p.len()
            )));
        }
        let d = DistributionVector(Vec16::from_iterator(p.iter().copied()));
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &p) in self.0.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite("distribution entry"));
            }
            if p < -1e-12 {
                return Err(Error::InvalidParams(format!(
                    "negative probability {p} at state {i}"
                )));
            }
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "distribution sums to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn probability(&self, state: usize) -> f64 {
        self.0[state]
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Mean island occupations in bit order (N1, N2, P1, P2).
    pub fn mean_occupations(&self) -> [f64; 4] {
        let mut occ = [0.0; 4];
        for n in 0..N_STATES {
            let p = self.0[n];
            let s = GateState::from_index(n);
            for t in TransistorLabel::ALL {
                if s.occupied(t) {
                    occ[t.bit()] += p;
                }
            }
        }
        occ
    }

    /// Total-variation distance to another distribution.
    pub fn tv_distance(&self, other: &DistributionVector) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    fn inner(&self) -> &Vec16 {
        &self.0
    }
}

/// Unique stationary distribution of an arbitrary generator (column
/// convention), for any state count. Reducible generators are reported
/// distinctly from linear-algebra failures.
pub fn stationary_distribution(generator: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = generator.nrows();
    if generator.ncols() != n || n == 0 {
        return Err(Error::InvalidParams("generator must be square".into()));
    }
    if !strongly_connected(generator) {
        return Err(Error::ReducibleGenerator(
            "generator has more than one communicating class".into(),
        ));
    }
    // replace the first balance equation with the normalization constraint
    let mut a = generator.clone();
    for c in 0..n {
        a[(0, c)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    let lu = a.lu();
    let mut pi = lu
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular system in stationary solve".into()))?;
    let scale = generator.amax().max(1.0);
    for p in pi.iter_mut() {
        if *p < 0.0 {
            if *p < -1e-9 {
                return Err(Error::Numerical(format!(
                    "stationary solve produced probability {p}"
                )));
            }
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi /= total;
    let residual = (generator * &pi).amax();
    if residual > 1e-10 * scale {
        return Err(Error::Numerical(format!(
            "stationary residual {residual} exceeds tolerance"
        )));
    }
    Ok(pi)
}

fn strongly_connected(g: &DMatrix<f64>) -> bool {
    let n = g.nrows();
    let reach = |transpose: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if v == u || seen[v] {
                    continue;
                }
                let rate = if transpose { g[(u, v)] } else { g[(v, u)] };
                if rate > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(false) && reach(true)
}

/// Stationary distribution of a NAND generator.
pub fn steady_state(matrix: &RateMatrix) -> Result<DistributionVector> {
    let pi = stationary_distribution(&matrix.as_dmatrix())?;
    DistributionVector::from_slice(pi.as_slice())
}

/// One gate with fixed inputs; the generator depends only on the output
/// node voltage through the gate-electrode potential.
#[derive(Debug, Clone)]
pub struct NandSystem {
    pub params: NandParams,
}

impl NandSystem {
    pub fn new(params: NandParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    /// Single-particle rates at node voltage `v_out`. `node_shift` as in
    /// [`SingleParticleRates::from_specs`].
    pub fn rates_at(&self, v_out: f64, node_shift: f64) -> SingleParticleRates {
        let (ts, es) = nand_energy_levels(&self.params, v_out);
        SingleParticleRates::from_specs(
            &ts,
            &es,
            self.params.gamma,
            self.params.constants.beta(),
            self.params.bose_rate_cap,
            node_shift,
        )
        .expect("finite gate parameters")
    }

    /// Mean-field generator at node voltage `v_out`.
    pub fn generator(&self, v_out: f64) -> RateMatrix {
        RateMatrix::from_rates(&self.rates_at(v_out, 0.0))
    }

    /// Half charging energy `q^2 / 2 C_g` (J) for discrete-node sampling.
    pub fn node_shift(&self) -> f64 {
        let q = self.params.constants.charge;
        q * q / (2.0 * self.params.c_g)
    }

    /// Ideal logic output voltage for the gate's configured inputs.
    pub fn ideal_output(&self) -> f64 {
        let half = 0.5 * (self.params.v_d + self.params.v_s);
        let a = self.params.v_a > half;
        let b = self.params.v_b > half;
        if a && b {
            self.params.v_s
        } else {
            self.params.v_d
        }
    }
}

/// Generator source for propagation: either a frozen matrix or a gate whose
/// generator is refreshed from the instantaneous node voltage.
pub enum MatrixProvider<'a> {
    Frozen(&'a RateMatrix),
    SelfConsistent(&'a NandSystem),
}

/// Step-control options for master-equation propagation.
#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    /// Maximum `Lambda * dt` per uniformization step.
    pub lambda_budget: f64,
    /// Maximum node-voltage motion per step as a fraction of the supply.
    pub voltage_step_fraction: f64,
    /// Series truncation for the Poisson mixture.
    pub tail_tolerance: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            lambda_budget: 40.0,
            voltage_step_fraction: 0.004,
            tail_tolerance: 1e-13,
        }
    }
}

/// One accepted step: final distribution and exact within-step time
/// integral of the distribution.
fn uniform_step(gen: &RateMatrix, dist: &Vec16, dt: f64, tail_tol: f64) -> (Vec16, Vec16) {
    let lambda = gen.max_exit_rate();
    if lambda <= 0.0 || dt <= 0.0 {
        return (*dist, dist * dt);
    }
    let mean = lambda * dt;
    let mut s_k = *dist;
    let mut weight = (-mean).exp();
    let mut cdf = weight;
    let mut end = s_k * weight;
    let mut integral = s_k * (1.0 - cdf);
    let mut k = 0usize;
    loop {
        k += 1;
        // s_{k+1} = (I + D/Lambda) s_k
        s_k += gen.apply(&s_k) / lambda;
        weight *= mean / k as f64;
        cdf += weight;
        end += s_k * weight;
        integral += s_k * (1.0 - cdf);
        if (1.0 - cdf) < tail_tol && (k as f64) > mean {
            break;
        }
        if k > 4096 {
            break;
        }
    }
    (end, integral / lambda)
}

fn renormalize(mut v: Vec16) -> Result<Vec16> {
    let mut sum = 0.0;
    for p in v.iter_mut() {
        if *p < 0.0 {
            if *p < -1e-9 {
                return Err(Error::Numerical(format!(
                    "propagation produced probability {p}"
                )));
            }
            *p = 0.0;
        }
        sum += *p;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "propagation lost normalization: sum = {sum}"
        )));
    }
    Ok(v / sum)
}

/// Advance the master equation by `dt`.
///
/// With a frozen provider the node voltage is held; with a self-consistent
/// provider the node voltage advances from the integrated gate-electrode
/// current and the generator is refreshed each internal step. Returns the
/// final distribution and node voltage.
pub fn propagate(
    dist: &DistributionVector,
    v_out: f64,
    dt: f64,
    provider: &MatrixProvider,
    opts: &PropagateOptions,
) -> Result<(DistributionVector, f64)> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("dt = {dt} must be > 0")));
    }
    match provider {
        MatrixProvider::Frozen(gen) => {
            let mut s = *dist.inner();
            let mut remaining = dt;
            let lambda = gen.max_exit_rate().max(f64::MIN_POSITIVE);
            let step = opts.lambda_budget / lambda;
            while remaining > 0.0 {
                let h = step.min(remaining);
                let (end, _) = uniform_step(gen, &s, h, opts.tail_tolerance);
                s = renormalize(end)?;
                remaining -= h;
            }
            Ok((DistributionVector(s), v_out))
        }
        MatrixProvider::SelfConsistent(system) => {
            let trace = propagate_trace(system, dist, v_out, dt, opts)?;
            let last = trace.rows.last().expect("trace has rows");
            Ok((
                DistributionVector::from_slice(&last.distribution)?,
                last.v_out,
            ))
        }
    }
}

/// One recorded instant of a propagation run.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub time: f64,
    pub v_out: f64,
    pub distribution: [f64; 16],
    /// Mean occupations in bit order (N1, N2, P1, P2).
    pub occupations: [f64; 4],
}

/// Time-resolved node trajectory of one gate.
#[derive(Debug, Clone)]
pub struct NodeTrace {
    pub rows: Vec<TraceRow>,
}

impl NodeTrace {
    pub fn duration(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.time)
    }

    /// Node voltage at `t` by linear interpolation.
    pub fn voltage_at(&self, t: f64) -> Option<f64> {
        interpolate(&self.rows, t, |r| r.v_out)
    }

    /// CSV export: `time_s, v_out_V, p_state_0..p_state_15, n_P1, n_P2,
    /// n_N1, n_N2`, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        write!(w, "time_s,v_out_V")?;
        for i in 0..16 {
            write!(w, ",p_state_{i}")?;
        }
        writeln!(w, ",n_P1,n_P2,n_N1,n_N2")?;
        for r in &self.rows {
            write!(w, "{:.16e},{:.16e}", r.time, r.v_out)?;
            for p in r.distribution {
                write!(w, ",{p:.16e}")?;
            }
            writeln!(
                w,
                ",{:.16e},{:.16e},{:.16e},{:.16e}",
                r.occupations[TransistorLabel::P1.bit()],
                r.occupations[TransistorLabel::P2.bit()],
                r.occupations[TransistorLabel::N1.bit()],
                r.occupations[TransistorLabel::N2.bit()],
            )?;
        }
        Ok(())
    }
}

fn interpolate(rows: &[TraceRow], t: f64, f: impl Fn(&TraceRow) -> f64) -> Option<f64> {
    if rows.is_empty() || t < rows[0].time || t > rows[rows.len() - 1].time {
        return None;
    }
    let idx = rows.partition_point(|r| r.time <= t);
    if idx == 0 {
        return Some(f(&rows[0]));
    }
    if idx >= rows.len() {
        return Some(f(&rows[rows.len() - 1]));
    }
    let (a, b) = (&rows[idx - 1], &rows[idx]);
    let span = b.time - a.time;
    if span <= 0.0 {
        return Some(f(a));
    }
    let w = (t - a.time) / span;
    Some(f(a) * (1.0 - w) + f(b) * w)
}

/// Integrate the coupled (distribution, node voltage) dynamics over
/// `horizon`, recording every accepted step.
pub fn propagate_trace(
    system: &NandSystem,
    init: &DistributionVector,
    v0: f64,
    horizon: f64,
    opts: &PropagateOptions,
) -> Result<NodeTrace> {
    init.validate()?;
    let q = system.params.constants.charge;
    let c_g = system.params.c_g;
    let span = system.params.v_d - system.params.v_s;
    let dv_cap = opts.voltage_step_fraction * span;

    let mut s = *init.inner();
    let mut v = v0;
    let mut t = 0.0;
    let mut rows = Vec::with_capacity(256);
    push_row(&mut rows, t, v, &s);

    while t < horizon {
        let rates = system.rates_at(v, 0.0);
        let gen = RateMatrix::from_rates(&rates);
        let lambda = gen.max_exit_rate().max(f64::MIN_POSITIVE);
        let mut dt = (opts.lambda_budget / lambda).min(horizon - t);
        let occ = DistributionVector(s).mean_occupations();
        let slew = q * rates.node_electron_rate(&occ).abs() / c_g;
        if slew > 0.0 {
            dt = dt.min(dv_cap / slew);
        }
        loop {
            let (end, time_integral) = uniform_step(&gen, &s, dt, opts.tail_tolerance);
            let dv = q * node_transfer(&rates, &time_integral, dt) / c_g;
            if dv.abs() <= 1.5 * dv_cap || dt <= 1e-6 / system.params.gamma {
                s = renormalize(end)?;
                v += dv;
                t += dt;
                break;
            }
            dt *= 0.5;
        }
        push_row(&mut rows, t, v, &s);
        if rows.len() > 4_000_000 {
            return Err(Error::Numerical(
                "propagation exceeded step budget".into(),
            ));
        }
    }
    Ok(NodeTrace { rows })
}

fn push_row(rows: &mut Vec<TraceRow>, t: f64, v: f64, s: &Vec16) {
    let d = DistributionVector(*s);
    let mut distribution = [0.0; 16];
    distribution.copy_from_slice(d.as_slice());
    rows.push(TraceRow {
        time: t,
        v_out: v,
        distribution,
        occupations: d.mean_occupations(),
    });
}

/// Net electrons into the node over a step, from the within-step time
/// integral of the distribution.
fn node_transfer(rates: &SingleParticleRates, time_integral: &Vec16, dt: f64) -> f64 {
    let mut occ_int = [0.0; 4];
    for n in 0..N_STATES {
        let w = time_integral[n];
        let state = GateState::from_index(n);
        for tl in TransistorLabel::ALL {
            if state.occupied(tl) {
                occ_int[tl.bit()] += w;
            }
        }
    }
    rates
        .contacts
        .iter()
        .filter(|c| c.electrode == ElectrodeLabel::Gate)
        .map(|c| {
            let occupied_time = occ_int[c.transistor.bit()];
            c.into_electrode * occupied_time - c.into_island * (dt - occupied_time)
        })
        .sum()
}

/// Self-consistent stationary point of one gate: distribution and node
/// voltage with zero mean node current.
#[derive(Debug, Clone)]
pub struct SettledGate {
    pub distribution: DistributionVector,
    pub v_out: f64,
}

/// Mean node electron current (electrons/s) at the stationary distribution
/// for a trial node voltage.
fn stationary_node_current(system: &NandSystem, v: f64) -> Result<f64> {
    let rates = system.rates_at(v, 0.0);
    let gen = RateMatrix::from_rates(&rates);
    let pi = steady_state(&gen)?;
    Ok(rates.node_electron_rate(&pi.mean_occupations()))
}

/// Solve the gate's operating point. The node current at the stationary
/// distribution is a decreasing function of the node voltage near any
/// stable point; starting from `v_guess` the bracket expands geometrically
/// until it straddles the zero, then bisects.
pub fn settle(system: &NandSystem, v_guess: f64) -> Result<SettledGate> {
    let vt = system.params.constants.thermal_voltage();
    let lo_limit = system.params.v_s - 10.0 * vt;
    let hi_limit = system.params.v_d + 10.0 * vt;
    let guess = v_guess.clamp(lo_limit, hi_limit);

    let f = |v: f64| stationary_node_current(system, v);
    let f_guess = f(guess)?;
    let mut lo;
    let mut hi;
    if f_guess > 0.0 {
        // node still charging: zero lies above
        lo = guess;
        hi = guess;
        let mut step = 0.25 * vt;
        loop {
            hi = (hi + step).min(hi_limit);
            if f(hi)? <= 0.0 {
                break;
            }
            if hi >= hi_limit {
                return Err(Error::Numerical(
                    "settle: no stationary node voltage below the bracket ceiling".into(),
                ));
            }
            step *= 2.0;
        }
    } else {
        hi = guess;
        lo = guess;
        let mut step = 0.25 * vt;
        loop {
            lo = (lo - step).max(lo_limit);
            if f(lo)? >= 0.0 {
                break;
            }
            if lo <= lo_limit {
                return Err(Error::Numerical(
                    "settle: no stationary node voltage above the bracket floor".into(),
                ));
            }
            step *= 2.0;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    let v = 0.5 * (lo + hi);
    let distribution = steady_state(&system.generator(v))?;
    Ok(SettledGate {
        distribution,
        v_out: v,
    })
}

/// Dissipated work over `[0, tau]` from a recorded trace, by trapezoidal
/// quadrature of the supply/ground channel powers on the trace grid.
#[derive(Debug, Clone, Copy)]
pub struct Dissipation {
    pub joules: f64,
    pub kt: f64,
}

pub fn nand_dissipation(system: &NandSystem, trace: &NodeTrace, tau: f64) -> Result<Dissipation> {
    if tau < 0.0 {
        return Err(Error::InvalidParams(format!("tau = {tau} must be >= 0")));
    }
    let covered = trace.duration();
    if tau > covered * (1.0 + 1e-12) + f64::MIN_POSITIVE {
        return Err(Error::BeyondTrace {
            requested_s: tau,
            covered_s: covered,
        });
    }
    let q = system.params.constants.charge;
    let power = |row: &TraceRow| {
        let rates = system.rates_at(row.v_out, 0.0);
        rates.dissipation_rate(&row.occupations, q * row.v_out)
    };
    let mut total = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for row in &trace.rows {
        if row.time >= tau {
            break;
        }
        let p = power(row);
        if let Some((t0, p0)) = prev {
            total += 0.5 * (p0 + p) * (row.time - t0);
        }
        prev = Some((row.time, p));
    }
    // partial last interval up to tau
    if let Some((t0, p0)) = prev {
        if tau > t0 {
            if let (Some(v_tau), Some(occ)) = (
                trace.voltage_at(tau),
                interpolated_occupations(&trace.rows, tau),
            ) {
                let rates = system.rates_at(v_tau, 0.0);
                let p_tau = rates.dissipation_rate(&occ, q * v_tau);
                total += 0.5 * (p0 + p_tau) * (tau - t0);
            }
        }
    }
    let kt = system.params.constants.kt();
    Ok(Dissipation {
        joules: total,
        kt: total / kt,
    })
}

fn interpolated_occupations(rows: &[TraceRow], t: f64) -> Option<[f64; 4]> {
    let mut occ = [0.0; 4];
    for (k, slot) in occ.iter_mut().enumerate() {
        *slot = interpolate(rows, t, |r| r.occupations[k])?;
    }
    Some(occ)
}

/// First time after which the node voltage stays inside the decision band
/// `|v - expected| <= alpha * v_d` for the rest of the trace.
pub fn propagation_delay(
    trace: &NodeTrace,
    expected_volts: f64,
    v_d: f64,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} must lie in (0, 0.5)"
        )));
    }
    let band = alpha * v_d;
    let inside = |v: f64| (v - expected_volts).abs() <= band;
    let rows = &trace.rows;
    if rows.is_empty() {
        return Err(Error::InvalidParams("empty trace".into()));
    }
    let last = rows.last().unwrap();
    if !inside(last.v_out) {
        return Err(Error::NeverSettles {
            gate: "nand".into(),
            expected_volts,
            horizon_s: last.time,
        });
    }
    // walk back to the last excursion outside the band
    let mut first_inside = 0usize;
    for (i, r) in rows.iter().enumerate().rev() {
        if !inside(r.v_out) {
            first_inside = i + 1;
            break;
        }
    }
    if first_inside == 0 {
        return Ok(0.0);
    }
    // linear band-crossing time between the excursion and re-entry
    let a = &rows[first_inside - 1];
    let b = &rows[first_inside];
    let da = (a.v_out - expected_volts).abs() - band;
    let db = (b.v_out - expected_volts).abs() - band;
    if da <= 0.0 || db > 0.0 || (da - db).abs() < f64::MIN_POSITIVE {
        return Ok(b.time);
    }
    Ok(a.time + (b.time - a.time) * da / (da - db))
}
