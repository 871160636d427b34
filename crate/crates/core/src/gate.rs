//! Four-NAND XOR network: ternary readout, per-operation energy matrix,
//! input-transition statistics, and the switching-model baseline.
//!
//! Wiring: `NAND1(A,B) -> u`, `NAND2(A,u) -> v`, `NAND3(u,B) -> w`,
//! `NAND4(v,w) -> Y`. Gates are simulated sequentially in topological
//! order; each downstream gate sees the upstream *settled* output voltage,
//! so the network state space stays at sixteen states per gate.
//!
//! The energy of an input transition `prev -> next` initializes every gate
//! in its `prev` operating point, switches the inputs, integrates each gate
//! to its propagation delay under the `next` inputs, and sums the four
//! dissipated works.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::device::{GateState, LevelMap, NandParams, N_STATES};
use crate::error::{Error, Result};
use crate::gillespie::{voltage_snapshots, OutputStats};
use crate::master::{
    nand_dissipation, propagate_trace, propagation_delay, settle, NandSystem, NodeTrace,
    PropagateOptions, SettledGate,
};

/// Joint input symbol of an XOR gate, canonical order `00, 01, 10, 11`
/// (first bit = input A, second = input B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputPair(u8);

impl InputPair {
    pub const ALL: [InputPair; 4] = [InputPair(0), InputPair(1), InputPair(2), InputPair(3)];

    pub fn new(a: bool, b: bool) -> Self {
        InputPair(((a as u8) << 1) | b as u8)
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 4);
        InputPair(i as u8)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn a(self) -> bool {
        self.0 & 0b10 != 0
    }

    #[inline]
    pub fn b(self) -> bool {
        self.0 & 0b01 != 0
    }

    /// XOR of the two input bits.
    #[inline]
    pub fn parity(self) -> bool {
        self.a() ^ self.b()
    }

    pub fn label(self) -> &'static str {
        ["00", "01", "10", "11"][self.index()]
    }
}

/// Ternary readout symbol: logic levels plus the undecided band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ternary {
    Zero,
    One,
    Empty,
}

impl Ternary {
    pub const ALL: [Ternary; 3] = [Ternary::Zero, Ternary::One, Ternary::Empty];

    pub fn index(self) -> usize {
        match self {
            Ternary::Zero => 0,
            Ternary::One => 1,
            Ternary::Empty => 2,
        }
    }
}

/// Threshold readout: `0` for `v <= alpha v_d`, `1` for
/// `v >= (1 - alpha) v_d`, undecided in between.
pub fn logic_map(v: f64, v_d: f64, alpha: f64) -> Ternary {
    debug_assert!(alpha > 0.0 && alpha < 0.5);
    if v <= alpha * v_d {
        Ternary::Zero
    } else if v >= (1.0 - alpha) * v_d {
        Ternary::One
    } else {
        Ternary::Empty
    }
}

/// Shared parameters of the four NAND gates in one XOR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XorParams {
    /// Supply voltage (V).
    pub v_d: f64,
    /// Load capacitance of the XOR output node (F).
    pub c_g_output: f64,
    /// Capacitance of the interior nodes u, v, w (F).
    pub c_g_interior: f64,
    /// Threshold factor.
    pub alpha: f64,
    /// Rate constant (1/s).
    pub gamma: f64,
    pub bose_rate_cap: f64,
    pub level_map: LevelMap,
    pub constants: PhysicalConstants,
}

impl XorParams {
    pub fn with_supply(v_d: f64) -> Self {
        let c_g_output = 1.62e-16;
        Self {
            v_d,
            c_g_output,
            c_g_interior: c_g_output / 50.0,
            alpha: 0.2,
            gamma: 1e12,
            bose_rate_cap: 10.0,
            level_map: LevelMap::default(),
            constants: PhysicalConstants::default(),
        }
    }

    fn nand_params(&self, gate: usize, v_in_a: f64, v_in_b: f64) -> NandParams {
        NandParams {
            v_d: self.v_d,
            v_s: 0.0,
            v_a: v_in_a,
            v_b: v_in_b,
            c_g: if gate == 3 {
                self.c_g_output
            } else {
                self.c_g_interior
            },
            gamma: self.gamma,
            alpha: self.alpha,
            bose_rate_cap: self.bose_rate_cap,
            level_map: self.level_map,
            constants: self.constants,
        }
    }
}

/// Ideal Boolean levels of the interior nodes and output for one input pair,
/// in gate order `(u, v, w, y)`.
pub fn ideal_nodes(ab: InputPair) -> [bool; 4] {
    let (a, b) = (ab.a(), ab.b());
    let u = !(a & b);
    let v = !(a & u);
    let w = !(u & b);
    let y = !(v & w);
    [u, v, w, y]
}

/// Self-consistent operating point of the whole chain under one input pair.
#[derive(Debug, Clone)]
pub struct ChainOperatingPoint {
    pub inputs: InputPair,
    pub gate_params: [NandParams; 4],
    pub settled: [SettledGate; 4],
}

impl ChainOperatingPoint {
    /// Node voltages in gate order `(u, v, w, y)`.
    pub fn node_voltages(&self) -> [f64; 4] {
        core::array::from_fn(|i| self.settled[i].v_out)
    }

    pub fn output_voltage(&self) -> f64 {
        self.settled[3].v_out
    }
}

/// The four-NAND XOR.
#[derive(Debug, Clone)]
pub struct XorNetlist {
    pub params: XorParams,
}

impl XorNetlist {
    pub fn new(params: XorParams) -> Result<Self> {
        // validate through a representative gate
        params.nand_params(0, 0.0, 0.0).validate()?;
        if params.c_g_interior <= 0.0 {
            return Err(Error::InvalidParams("c_g_interior must be > 0".into()));
        }
        Ok(Self { params })
    }

    fn input_volts(&self, bit: bool) -> f64 {
        if bit {
            self.params.v_d
        } else {
            0.0
        }
    }

    /// Gate input voltages given the upstream node voltages
    /// `(u, v, w, _)`; external inputs are ideal levels.
    fn gate_inputs(&self, gate: usize, ab: InputPair, nodes: &[f64; 4]) -> (f64, f64) {
        let va = self.input_volts(ab.a());
        let vb = self.input_volts(ab.b());
        match gate {
            0 => (va, vb),
            1 => (va, nodes[0]),
            2 => (nodes[0], vb),
            3 => (nodes[1], nodes[2]),
            _ => unreachable!(),
        }
    }

    /// Settle all four gates in topological order under `ab`.
    pub fn settle_chain(&self, ab: InputPair) -> Result<ChainOperatingPoint> {
        let ideal = ideal_nodes(ab);
        let mut nodes = [0.0f64; 4];
        let mut gate_params = [self.params.nand_params(0, 0.0, 0.0); 4];
        let mut settled: Vec<SettledGate> = Vec::with_capacity(4);
        for gate in 0..4 {
            let (va, vb) = self.gate_inputs(gate, ab, &nodes);
            let p = self.params.nand_params(gate, va, vb);
            let sys = NandSystem::new(p)?;
            let guess = if ideal[gate] { p.v_d } else { 0.0 };
            let s = settle(&sys, guess).map_err(|e| tag_gate(e, gate, ab, ab))?;
            nodes[gate] = s.v_out;
            gate_params[gate] = p;
            settled.push(s);
        }
        let settled: [SettledGate; 4] = settled.try_into().expect("four gates");
        Ok(ChainOperatingPoint {
            inputs: ab,
            gate_params,
            settled,
        })
    }

    /// Readout of the settled output under the gate's own threshold map.
    pub fn settled_output_symbol(&self, chain: &ChainOperatingPoint) -> Ternary {
        logic_map(chain.output_voltage(), self.params.v_d, self.params.alpha)
    }

    /// Output-voltage samples of the final gate from the exact jump process,
    /// with upstream gates at their settled operating points.
    pub fn xor_output_distribution(
        &self,
        ab: InputPair,
        n_samples: usize,
        burn_in: f64,
        seed: u64,
        n_bins: usize,
    ) -> Result<OutputStats> {
        if n_samples < 100 {
            return Err(Error::InvalidParams(
                "output distribution needs at least 100 samples".into(),
            ));
        }
        let chain = self.settle_chain(ab)?;
        let sys = NandSystem::new(chain.gate_params[3])?;
        let settled = &chain.settled[3];
        // start on the electron grid nearest the settled node voltage
        let q = self.params.constants.charge;
        let dv = q / self.params.c_g_output;
        let v0 = (settled.v_out / dv).round() * dv;
        let init = most_likely_state(settled);
        let samples = voltage_snapshots(&sys, init, v0, burn_in, n_samples, seed);
        OutputStats::from_samples(&samples, n_bins)
    }
}

fn most_likely_state(s: &SettledGate) -> GateState {
    let mut best = 0;
    for i in 1..N_STATES {
        if s.distribution.probability(i) > s.distribution.probability(best) {
            best = i;
        }
    }
    GateState::from_index(best)
}

fn tag_gate(e: Error, gate: usize, prev: InputPair, next: InputPair) -> Error {
    let name = format!("NAND{} ({} -> {})", gate + 1, prev.label(), next.label());
    match e {
        Error::NeverSettles {
            expected_volts,
            horizon_s,
            ..
        } => Error::NeverSettles {
            gate: name,
            expected_volts,
            horizon_s,
        },
        Error::Numerical(msg) => Error::Numerical(format!("{name}: {msg}")),
        other => other,
    }
}

/// Integrate a gate transient, in chunks, until the node voltage has held
/// inside the decision band of its expected logic level for two
/// consecutive chunk boundaries. Everything consumed downstream (the
/// propagation delay, the stays-in-band check, and the dissipation
/// integral, which stops at the delay) is complete once that holds; the
/// exact stationary point may still drift by a fraction of a percent on
/// exponentially slow internal modes.
fn transient_trace(
    sys: &NandSystem,
    init: &SettledGate,
    expected_volts: f64,
    opts: &PropagateOptions,
) -> Result<NodeTrace> {
    let gamma = sys.params.gamma;
    let band = sys.params.alpha * sys.params.v_d;
    let chunk = 400.0 / gamma;
    let max_horizon = 60_000.0 / gamma;
    let in_band = |v: f64| (v - expected_volts).abs() <= band;

    let first = if in_band(init.v_out) {
        20.0 / gamma
    } else {
        chunk
    };
    let mut trace = propagate_trace(sys, &init.distribution, init.v_out, first, opts)?;
    let mut settled_boundaries = usize::from(in_band(init.v_out));
    loop {
        let last = trace.rows.last().expect("rows");
        if in_band(last.v_out) {
            settled_boundaries += 1;
            if settled_boundaries >= 2 {
                return Ok(trace);
            }
        } else {
            settled_boundaries = 0;
        }
        if last.time >= max_horizon {
            return Err(Error::NeverSettles {
                gate: "nand".into(),
                expected_volts,
                horizon_s: last.time,
            });
        }
        let dist = crate::master::DistributionVector::from_slice(&last.distribution)?;
        let (t0, v0) = (last.time, last.v_out);
        let next = propagate_trace(sys, &dist, v0, chunk, opts)?;
        trace.rows.extend(next.rows.into_iter().skip(1).map(|mut r| {
            r.time += t0;
            r
        }));
    }
}

/// Per-operation dissipated energies of the sixteen input transitions (kT).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMatrix {
    /// `entries[prev][next]` in kT.
    pub entries: [[f64; 4]; 4],
}

impl EnergyMatrix {
    pub fn constant(c: f64) -> Self {
        EnergyMatrix {
            entries: [[c; 4]; 4],
        }
    }

    pub fn min_of_row(&self, prev: usize) -> f64 {
        self.entries[prev]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV block with row/column labels; energies in kT (see header line).
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# energy matrix, kT units, rows = previous input")?;
        writeln!(w, "prev\\next,00,01,10,11")?;
        for (i, row) in self.entries.iter().enumerate() {
            write!(w, "{}", InputPair::from_index(i).label())?;
            for e in row {
                write!(w, ",{e:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Energy matrix of the XOR network: full transition-by-transition
/// simulation of the four gates.
pub fn xor_energy_matrix(netlist: &XorNetlist) -> Result<EnergyMatrix> {
    let opts = PropagateOptions::default();
    let chains: Vec<ChainOperatingPoint> = InputPair::ALL
        .into_par_iter()
        .map(|ab| netlist.settle_chain(ab))
        .collect::<Result<_>>()?;
    let kt = netlist.params.constants.kt();
    let v_d = netlist.params.v_d;
    let alpha = netlist.params.alpha;

    let pairs: Vec<(usize, usize)> = (0..4)
        .flat_map(|p| (0..4).map(move |n| (p, n)))
        .collect();
    let energies: Vec<f64> = pairs
        .par_iter()
        .map(|&(prev, next)| -> Result<f64> {
            let chain_prev = &chains[prev];
            let chain_next = &chains[next];
            let ideal = ideal_nodes(InputPair::from_index(next));
            let mut total_kt = 0.0;
            for gate in 0..4 {
                let sys = NandSystem::new(chain_next.gate_params[gate])?;
                let init = &chain_prev.settled[gate];
                let expected = if ideal[gate] { v_d } else { 0.0 };
                let trace = transient_trace(&sys, init, expected, &opts).map_err(|e| {
                    tag_gate(
                        e,
                        gate,
                        InputPair::from_index(prev),
                        InputPair::from_index(next),
                    )
                })?;
                let tau = propagation_delay(&trace, expected, v_d, alpha).map_err(|e| {
                    tag_gate(
                        e,
                        gate,
                        InputPair::from_index(prev),
                        InputPair::from_index(next),
                    )
                })?;
                total_kt += nand_dissipation(&sys, &trace, tau)?.joules / kt;
            }
            Ok(total_kt)
        })
        .collect::<Result<_>>()?;

    let mut entries = [[0.0; 4]; 4];
    for (&(p, n), e) in pairs.iter().zip(energies.iter()) {
        entries[p][n] = *e;
    }
    Ok(EnergyMatrix { entries })
}

/// Joint two-step input statistics: `joint[prev][next]` is the probability
/// of seeing `prev` then `next`; the sixteen entries sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub joint: [[f64; 4]; 4],
}

impl TransitionMatrix {
    /// Independent symbols with per-step marginals `marginal[4]`.
    pub fn from_marginals(marginal: [f64; 4]) -> Self {
        let mut joint = [[0.0; 4]; 4];
        for p in 0..4 {
            for n in 0..4 {
                joint[p][n] = marginal[p] * marginal[n];
            }
        }
        TransitionMatrix { joint }
    }

    /// Marginal over the four symbols implied by the joint weights.
    pub fn symbol_marginal(&self) -> [f64; 4] {
        core::array::from_fn(|p| self.joint[p].iter().sum())
    }

    /// Conditional next-symbol distribution given `prev` (row-stochastic
    /// view; identical for every row under independent inputs).
    pub fn conditional_row(&self, prev: usize) -> [f64; 4] {
        let mass: f64 = self.joint[prev].iter().sum();
        core::array::from_fn(|n| self.joint[prev][n] / mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.joint.iter().flatten().sum()
    }

    /// Probability that the next symbol lands in column `next`.
    pub fn column_mass(&self, next: usize) -> f64 {
        (0..4).map(|p| self.joint[p][next]).sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# joint input-transition weights, total mass 1")?;
        writeln!(w, "prev\\next,00,01,10,11")?;
        for (i, row) in self.joint.iter().enumerate() {
            write!(w, "{}", InputPair::from_index(i).label())?;
            for e in row {
                write!(w, ",{e:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Transition matrix of independent inputs with `P(a = 0) = p_a`,
/// `P(b = 0) = p_b`, i.i.d. across time steps.
pub fn input_transition_matrix(p_a: f64, p_b: f64) -> Result<TransitionMatrix> {
    for (name, p) in [("p_a", p_a), ("p_b", p_b)] {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::InvalidParams(format!(
                "{name} = {p} must lie in [0, 1]"
            )));
        }
    }
    let marginal = [
        p_a * p_b,
        p_a * (1.0 - p_b),
        (1.0 - p_a) * p_b,
        (1.0 - p_a) * (1.0 - p_b),
    ];
    Ok(TransitionMatrix::from_marginals(marginal))
}

/// Average per-operation energy: elementwise contraction of the energy
/// matrix with the joint transition weights (kT).
pub fn average_xor_energy(energy: &EnergyMatrix, transitions: &TransitionMatrix) -> f64 {
    let mut total = 0.0;
    for p in 0..4 {
        for n in 0..4 {
            total += energy.entries[p][n] * transitions.joint[p][n];
        }
    }
    total
}

/// Conventional switching-model estimate of one operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingEnergy {
    pub joules: f64,
    pub kt: f64,
}

/// `zeta * C * V_dd^2` per operation; multiply by the operating frequency
/// to recover the conventional power figure.
pub fn switching_model_energy(
    zeta: f64,
    capacitance: f64,
    v_dd: f64,
    constants: &PhysicalConstants,
) -> Result<SwitchingEnergy> {
    if zeta < 0.0 || capacitance <= 0.0 || v_dd < 0.0 {
        return Err(Error::InvalidParams(
            "switching model needs zeta >= 0, C > 0, V_dd >= 0".into(),
        ));
    }
    let joules = zeta * capacitance * v_dd * v_dd;
    Ok(SwitchingEnergy {
        joules,
        kt: joules / constants.kt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vt() -> f64 {
        PhysicalConstants::default().thermal_voltage()
    }

    /// Small-capacitance network: same physics, much faster transients.
    fn fast_params(vd_over_vt: f64) -> XorParams {
        let mut p = XorParams::with_supply(vd_over_vt * vt());
        p.c_g_output = 4e-18;
        p.c_g_interior = 4e-18 / 50.0;
        p
    }

    #[test]
    fn logic_map_thresholds() {
        let v_d = 0.4;
        assert_eq!(logic_map(0.0, v_d, 0.2), Ternary::Zero);
        assert_eq!(logic_map(v_d, v_d, 0.2), Ternary::One);
        assert_eq!(logic_map(0.5 * v_d, v_d, 0.2), Ternary::Empty);
        assert_eq!(logic_map(0.2 * v_d, v_d, 0.2), Ternary::Zero);
        assert_eq!(logic_map(0.8 * v_d, v_d, 0.2), Ternary::One);
    }

    #[test]
    fn netlist_realizes_xor_and_nand_truth_tables() {
        let netlist = XorNetlist::new(XorParams::with_supply(15.0 * vt())).unwrap();
        let v_d = netlist.params.v_d;
        let alpha = netlist.params.alpha;
        for ab in InputPair::ALL {
            let chain = netlist.settle_chain(ab).unwrap();
            let ideal = ideal_nodes(ab);
            for gate in 0..4 {
                let symbol = logic_map(chain.settled[gate].v_out, v_d, alpha);
                let expect = if ideal[gate] {
                    Ternary::One
                } else {
                    Ternary::Zero
                };
                assert_eq!(symbol, expect, "{} gate {}", ab.label(), gate + 1);
            }
            let y = netlist.settled_output_symbol(&chain);
            let expect = if ab.parity() { Ternary::One } else { Ternary::Zero };
            assert_eq!(y, expect, "{}", ab.label());
        }
    }

    #[test]
    fn transition_matrix_cases() {
        // deterministic inputs concentrate on the (00 -> 00) cell
        let t = input_transition_matrix(1.0, 1.0).unwrap();
        assert_eq!(t.joint[0][0], 1.0);
        assert_eq!(t.total_mass(), 1.0);

        // uniform independent inputs: every cell 1/16
        let t = input_transition_matrix(0.5, 0.5).unwrap();
        for row in &t.joint {
            for &x in row {
                assert!((x - 1.0 / 16.0).abs() < 1e-15);
            }
        }

        // asymmetric case frozen from the closed form
        let t = input_transition_matrix(0.39, 1.0).unwrap();
        assert!((t.joint[0][0] - 0.39f64 * 0.39).abs() < 1e-15);
        for p in 0..4 {
            for n in 0..4 {
                let has_b1 = p == 1 || p == 3 || n == 1 || n == 3;
                if has_b1 {
                    assert_eq!(t.joint[p][n], 0.0, "({p},{n})");
                }
            }
        }
    }

    #[test]
    fn transition_matrix_mass_grid() {
        for i in 0..=20 {
            for j in 0..=20 {
                let t = input_transition_matrix(i as f64 / 20.0, j as f64 / 20.0).unwrap();
                assert!((t.total_mass() - 1.0).abs() < 1e-12, "({i},{j})");
                for p in 0..4 {
                    let row: f64 = t.conditional_row(p).iter().sum();
                    if row.is_finite() {
                        assert!((row - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn average_energy_contraction() {
        let mut e = EnergyMatrix::constant(0.0);
        e.entries[2][1] = 7.5;
        let mut t = TransitionMatrix::from_marginals([0.25; 4]);
        // concentrate all mass on (10 -> 01)
        t.joint = [[0.0; 4]; 4];
        t.joint[2][1] = 1.0;
        assert_eq!(average_xor_energy(&e, &t), 7.5);

        let e = EnergyMatrix::constant(3.25);
        let t = input_transition_matrix(0.3, 0.8).unwrap();
        assert!((average_xor_energy(&e, &t) - 3.25).abs() < 1e-12);
    }

    #[test]
    fn average_energy_monotone_in_entries() {
        let t = input_transition_matrix(0.3, 0.6).unwrap();
        let mut e = EnergyMatrix::constant(1.0);
        let base = average_xor_energy(&e, &t);
        for p in 0..4 {
            for n in 0..4 {
                let mut bumped = e.clone();
                bumped.entries[p][n] += 1.0;
                assert!(average_xor_energy(&bumped, &t) >= base);
            }
        }
        e.entries[0][0] = 5.0;
        assert!(average_xor_energy(&e, &t) >= base);
    }

    #[test]
    fn switching_model_reference_point() {
        let c = PhysicalConstants::default();
        let v_dd = 15.0 * c.thermal_voltage();
        let e = switching_model_energy(0.2, 1.62e-16, v_dd, &c).unwrap();
        assert!((e.joules - 4.87e-18).abs() < 0.01e-18, "{}", e.joules);
        assert!((e.kt - 1176.28).abs() < 0.5, "{}", e.kt);
        assert_eq!(
            switching_model_energy(0.0, 1.62e-16, v_dd, &c).unwrap().joules,
            0.0
        );
        let doubled = switching_model_energy(0.2, 1.62e-16, 2.0 * v_dd, &c).unwrap();
        assert!((doubled.joules / e.joules - 4.0).abs() < 1e-12);
    }

    #[test]
    fn energy_matrix_structure() {
        let netlist = XorNetlist::new(fast_params(15.0)).unwrap();
        let e = xor_energy_matrix(&netlist).unwrap();
        for p in 0..4 {
            for n in 0..4 {
                assert!(e.entries[p][n].is_finite());
                assert!(e.entries[p][n] >= -1e-6, "({p},{n}): {}", e.entries[p][n]);
            }
            // a hold is never costlier than the cheapest entry of its row
            let hold = e.entries[p][p];
            assert!(
                hold <= e.min_of_row(p) + 1e-9,
                "row {p}: hold {hold} vs min {}",
                e.min_of_row(p)
            );
        }
        // parity-flip transitions swing the output node and dominate every
        // same-parity transition
        let mut min_flip = f64::INFINITY;
        let mut max_same = f64::NEG_INFINITY;
        for p in 0..4 {
            for n in 0..4 {
                if p == n {
                    continue;
                }
                let flip = InputPair::from_index(p).parity() != InputPair::from_index(n).parity();
                if flip {
                    min_flip = min_flip.min(e.entries[p][n]);
                } else {
                    max_same = max_same.max(e.entries[p][n]);
                }
            }
        }
        assert!(
            min_flip > max_same,
            "min parity-flip {min_flip} vs max same-parity {max_same}"
        );
    }

    #[test]
    fn full_swing_energy_matches_rc_charging_scale() {
        // 00 -> 11 at the 7 nm reference point: the work should sit within
        // 2x of 1/2 C dV^2 summed over full-swing nodes
        let netlist = XorNetlist::new(XorParams::with_supply(15.0 * vt())).unwrap();
        let chains: Vec<_> = InputPair::ALL
            .iter()
            .map(|&ab| netlist.settle_chain(ab).unwrap())
            .collect();
        let prev = &chains[0];
        let next = &chains[3];
        let kt = netlist.params.constants.kt();
        let opts = PropagateOptions::default();
        let mut total = 0.0;
        let mut rc_estimate = 0.0;
        let ideal = ideal_nodes(InputPair::from_index(3));
        for gate in 0..4 {
            let sys = NandSystem::new(next.gate_params[gate]).unwrap();
            let expected = if ideal[gate] { netlist.params.v_d } else { 0.0 };
            let trace = transient_trace(&sys, &prev.settled[gate], expected, &opts).unwrap();
            let tau =
                propagation_delay(&trace, expected, netlist.params.v_d, netlist.params.alpha)
                    .unwrap();
            total += nand_dissipation(&sys, &trace, tau).unwrap().joules / kt;
            let dv = (next.settled[gate].v_out - prev.settled[gate].v_out).abs();
            if dv > 0.5 * netlist.params.v_d {
                rc_estimate += 0.5 * next.gate_params[gate].c_g * dv * dv / kt;
            }
        }
        assert!(
            total > 0.5 * rc_estimate && total < 2.0 * rc_estimate,
            "total {total} kT vs RC {rc_estimate} kT"
        );
    }

    #[test]
    fn energy_matrix_gamma_invariance() {
        let mut a = fast_params(10.0);
        let mut b = a;
        a.gamma = 1e11;
        b.gamma = 1e12;
        let ea = xor_energy_matrix(&XorNetlist::new(a).unwrap()).unwrap();
        let eb = xor_energy_matrix(&XorNetlist::new(b).unwrap()).unwrap();
        let scale = ea.max_entry();
        for p in 0..4 {
            for n in 0..4 {
                let d = (ea.entries[p][n] - eb.entries[p][n]).abs();
                assert!(
                    d < 0.01 * scale,
                    "({p},{n}): {} vs {}",
                    ea.entries[p][n],
                    eb.entries[p][n]
                );
            }
        }
    }
}
