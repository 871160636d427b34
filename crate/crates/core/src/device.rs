//! Gate parameterisation, microstates, and occupation statistics.
//!
//! One NAND gate holds four single-electron transistors:
//!
//! - `P1`, `P2`: P-type, in parallel between the drain electrode `d`
//!   (supply) and the output node `g`,
//! - `N1`, `N2`: N-type, in series between the output node `g` and the
//!   source electrode `s` (ground); `N1` contacts the node, `N2` contacts
//!   the source.
//!
//! Input A gates `P1`/`N1`, input B gates `P2`/`N2`. Electrode-transistor
//! transfer rates carry Fermi factors; transfers between adjacent
//! transistors exchange energy with the phonon bath and carry Bose factors.
//!
//! The energy level of each island responds affinely to its gate voltage
//! (lever arm `kappa`): N-type levels are pulled down by a high input,
//! P-type levels are pushed up. The affine offsets default to values that
//! place the "on" level a configurable thermal margin inside the transport
//! window and the "off" level well outside it, so NAND truth-table behavior
//! is a consequence of the level map rather than an assumption.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Fermi-Dirac occupation `[e^{beta(energy - mu)} + 1]^{-1}`.
///
/// Stable for `|beta * (energy - mu)|` up to several hundred: the
/// exponential is only ever taken of a non-positive argument.
pub fn fermi_occupation(energy: f64, mu: f64, beta: f64) -> Result<f64> {
    if !energy.is_finite() || !mu.is_finite() || !beta.is_finite() {
        return Err(Error::NonFinite("fermi_occupation argument"));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParams(format!("beta = {beta} must be > 0")));
    }
    let x = beta * (energy - mu);
    if x >= 0.0 {
        let e = (-x).exp();
        Ok(e / (1.0 + e))
    } else {
        Ok(1.0 / (x.exp() + 1.0))
    }
}

/// Bose-Einstein rate factor for an inter-island hop with level difference
/// `delta_energy` (energy of destination minus origin).
///
/// Uphill hops (`delta_energy > 0`) absorb a boson: `[e^{beta de} - 1]^{-1}`.
/// Downhill hops emit: `1 + [e^{beta |de|} - 1]^{-1}`. The forward/backward
/// ratio is the Boltzmann factor `e^{-beta de}`.
///
/// Near degeneracy the factor is evaluated through the expansion
/// `1/(beta de) - 1/2`, and diverges as the levels align; rate construction
/// caps it (see [`capped_island_factors`]).
pub fn bose_factor(delta_energy: f64, beta: f64) -> Result<f64> {
    if !delta_energy.is_finite() || !beta.is_finite() {
        return Err(Error::NonFinite("bose_factor argument"));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParams(format!("beta = {beta} must be > 0")));
    }
    let x = beta * delta_energy;
    if x.abs() < 1e-8 {
        // expansion of 1/(e^x - 1); |...| folds the emission branch in
        Ok((1.0 / x - 0.5).abs())
    } else {
        Ok((1.0 / x.exp_m1()).abs())
    }
}

/// Bose factors for both directions of one island pair, capped at `cap`
/// while preserving the detailed-balance ratio exactly.
///
/// `delta_energy` is oriented forward (destination minus origin); returns
/// `(forward, backward)`. When the downhill factor exceeds `cap`, the pair
/// is replaced by `(cap * e^{-beta |de|}, cap)` (oriented appropriately), so
/// forward/backward = `e^{-beta de}` holds for every level difference,
/// including exact degeneracy.
pub fn capped_island_factors(delta_energy: f64, beta: f64, cap: f64) -> Result<(f64, f64)> {
    let fwd = bose_factor(delta_energy, beta)?;
    let bwd = bose_factor(-delta_energy, beta)?;
    let x = beta * delta_energy;
    if fwd.max(bwd) <= cap {
        return Ok((fwd, bwd));
    }
    let suppressed = cap * (-x.abs()).exp();
    if x >= 0.0 {
        Ok((suppressed, cap))
    } else {
        Ok((cap, suppressed))
    }
}

/// Island (transistor) identity. The microstate bit order is
/// `N1, N2, P1, P2` from least significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransistorLabel {
    N1,
    N2,
    P1,
    P2,
}

impl TransistorLabel {
    pub const ALL: [TransistorLabel; 4] = [
        TransistorLabel::N1,
        TransistorLabel::N2,
        TransistorLabel::P1,
        TransistorLabel::P2,
    ];

    /// Bit position in the microstate index.
    #[inline]
    pub fn bit(self) -> usize {
        match self {
            TransistorLabel::N1 => 0,
            TransistorLabel::N2 => 1,
            TransistorLabel::P1 => 2,
            TransistorLabel::P2 => 3,
        }
    }

    pub fn kind(self) -> TransistorKind {
        match self {
            TransistorLabel::N1 | TransistorLabel::N2 => TransistorKind::NType,
            TransistorLabel::P1 | TransistorLabel::P2 => TransistorKind::PType,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransistorKind {
    NType,
    PType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElectrodeLabel {
    Drain,
    Source,
    Gate,
}

impl ElectrodeLabel {
    pub const ALL: [ElectrodeLabel; 3] = [
        ElectrodeLabel::Drain,
        ElectrodeLabel::Source,
        ElectrodeLabel::Gate,
    ];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            ElectrodeLabel::Drain => 0,
            ElectrodeLabel::Source => 1,
            ElectrodeLabel::Gate => 2,
        }
    }
}

/// One island with its instantaneous energy level (J).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransistorSpec {
    pub label: TransistorLabel,
    pub kind: TransistorKind,
    pub energy: f64,
}

/// One electrode with its chemical potential (J).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeSpec {
    pub label: ElectrodeLabel,
    pub chemical_potential: f64,
}

/// Affine voltage-to-level map.
///
/// `eps_N(v_gate) = eps0_n - kappa q v_gate`,
/// `eps_P(v_gate) = eps0_p + kappa q (v_d - v_gate)`.
///
/// When `eps0_n`/`eps0_p` are not given explicitly they default to
///
/// `eps0_n = kappa q v_d + q v_s + margin_n kT`,
/// `eps0_p = (1 - kappa) q v_d - margin_p kT`,
///
/// which puts the conducting N level `margin_n kT` above the source and the
/// conducting P level `margin_p kT` below the drain, for any supply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelMap {
    /// Gate lever arm (dimensionless).
    pub kappa: f64,
    /// Conducting N-level offset above the source potential, in kT.
    pub margin_n_kt: f64,
    /// Conducting P-level offset below the drain potential, in kT.
    pub margin_p_kt: f64,
    /// Absolute N-level offset (J); overrides the margin-derived default.
    pub eps0_n: Option<f64>,
    /// Absolute P-level offset (J); overrides the margin-derived default.
    pub eps0_p: Option<f64>,
}

impl Default for LevelMap {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            margin_n_kt: 1.5,
            margin_p_kt: 2.0,
            eps0_n: None,
            eps0_p: None,
        }
    }
}

impl LevelMap {
    /// Resolved `(eps0_n, eps0_p)` in joules for a given supply.
    pub fn offsets(&self, v_d: f64, v_s: f64, constants: &PhysicalConstants) -> (f64, f64) {
        let q = constants.charge;
        let kt = constants.kt();
        let eps0_n = self
            .eps0_n
            .unwrap_or(self.kappa * q * v_d + q * v_s + self.margin_n_kt * kt);
        let eps0_p = self
            .eps0_p
            .unwrap_or((1.0 - self.kappa) * q * v_d - self.margin_p_kt * kt);
        (eps0_n, eps0_p)
    }
}

/// Full parameterisation of one NAND gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NandParams {
    /// Supply voltage (V).
    pub v_d: f64,
    /// Ground voltage (V).
    pub v_s: f64,
    /// Input A voltage (V); gates P1 and N1.
    pub v_a: f64,
    /// Input B voltage (V); gates P2 and N2.
    pub v_b: f64,
    /// Output node capacitance (F).
    pub c_g: f64,
    /// Bare tunnelling rate constant (1/s).
    pub gamma: f64,
    /// Logic threshold factor, in (0, 0.5).
    pub alpha: f64,
    /// Cap on the Bose rate factor for inter-island hops, as a multiple of
    /// `gamma`.
    pub bose_rate_cap: f64,
    pub level_map: LevelMap,
    pub constants: PhysicalConstants,
}

impl NandParams {
    /// Default gate at the given supply with both inputs grounded.
    pub fn with_supply(v_d: f64) -> Self {
        Self {
            v_d,
            v_s: 0.0,
            v_a: 0.0,
            v_b: 0.0,
            c_g: 1.62e-16,
            gamma: 1e12,
            alpha: 0.2,
            bose_rate_cap: 10.0,
            level_map: LevelMap::default(),
            constants: PhysicalConstants::default(),
        }
    }

    pub fn with_inputs(mut self, v_a: f64, v_b: f64) -> Self {
        self.v_a = v_a;
        self.v_b = v_b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("v_d", self.v_d),
            ("v_s", self.v_s),
            ("v_a", self.v_a),
            ("v_b", self.v_b),
            ("c_g", self.c_g),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.c_g <= 0.0 {
            return Err(Error::InvalidParams(format!("c_g = {} must be > 0", self.c_g)));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma = {} must be > 0",
                self.gamma
            )));
        }
        if self.v_d <= self.v_s {
            return Err(Error::InvalidParams(format!(
                "v_d = {} must exceed v_s = {}",
                self.v_d, self.v_s
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidParams(format!(
                "alpha = {} must lie in (0, 0.5)",
                self.alpha
            )));
        }
        if self.bose_rate_cap <= 0.0 {
            return Err(Error::InvalidParams(
                "bose_rate_cap must be > 0".to_string(),
            ));
        }
        Ok(())
    }
}

/// Island energy levels and electrode potentials for one gate at output
/// voltage `v_out`. The gate-electrode potential tracks the output node:
/// `mu_g = q * v_out`.
pub fn nand_energy_levels(
    params: &NandParams,
    v_out: f64,
) -> ([TransistorSpec; 4], [ElectrodeSpec; 3]) {
    let q = params.constants.charge;
    let (eps0_n, eps0_p) = params
        .level_map
        .offsets(params.v_d, params.v_s, &params.constants);
    let kappa = params.level_map.kappa;
    let eps_n = |v_gate: f64| eps0_n - kappa * q * v_gate;
    let eps_p = |v_gate: f64| eps0_p + kappa * q * (params.v_d - v_gate);

    let transistors = [
        TransistorSpec {
            label: TransistorLabel::N1,
            kind: TransistorKind::NType,
            energy: eps_n(params.v_a),
        },
        TransistorSpec {
            label: TransistorLabel::N2,
            kind: TransistorKind::NType,
            energy: eps_n(params.v_b),
        },
        TransistorSpec {
            label: TransistorLabel::P1,
            kind: TransistorKind::PType,
            energy: eps_p(params.v_a),
        },
        TransistorSpec {
            label: TransistorLabel::P2,
            kind: TransistorKind::PType,
            energy: eps_p(params.v_b),
        },
    ];
    let electrodes = [
        ElectrodeSpec {
            label: ElectrodeLabel::Drain,
            chemical_potential: q * params.v_d,
        },
        ElectrodeSpec {
            label: ElectrodeLabel::Source,
            chemical_potential: q * params.v_s,
        },
        ElectrodeSpec {
            label: ElectrodeLabel::Gate,
            chemical_potential: q * v_out,
        },
    ];
    (transistors, electrodes)
}

/// Electron configuration of one gate: occupancy of the four islands,
/// encoded as `index = n_N1 + 2 n_N2 + 4 n_P1 + 8 n_P2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GateState(u8);

pub const N_STATES: usize = 16;

impl GateState {
    pub fn from_index(index: usize) -> Self {
        assert!(index < N_STATES, "state index {index} out of range");
        GateState(index as u8)
    }

    pub fn from_occupancy(n_n1: bool, n_n2: bool, n_p1: bool, n_p2: bool) -> Self {
        GateState(
            (n_n1 as u8) | ((n_n2 as u8) << 1) | ((n_p1 as u8) << 2) | ((n_p2 as u8) << 3),
        )
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn occupied(self, t: TransistorLabel) -> bool {
        (self.0 >> t.bit()) & 1 == 1
    }

    /// Occupancies in label order `(N1, N2, P1, P2)`.
    pub fn occupancy(self) -> (bool, bool, bool, bool) {
        (
            self.occupied(TransistorLabel::N1),
            self.occupied(TransistorLabel::N2),
            self.occupied(TransistorLabel::P1),
            self.occupied(TransistorLabel::P2),
        )
    }

    /// State with the occupancy of `t` flipped.
    #[inline]
    pub fn with_flipped(self, t: TransistorLabel) -> Self {
        GateState(self.0 ^ (1 << t.bit()))
    }

    /// Total electron number on the four islands.
    #[inline]
    pub fn electron_count(self) -> u32 {
        self.0.count_ones()
    }
}

/// All sixteen microstates in canonical index order.
pub fn enumerate_states() -> [GateState; N_STATES] {
    core::array::from_fn(GateState::from_index)
}
