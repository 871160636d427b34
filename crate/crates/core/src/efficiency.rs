//! Information-energy ratio of the XOR gate, its genetic-algorithm
//! optimization, and the two-XOR parity-check circuit.
//!
//! The ratio divides the per-operation mutual information of the readout
//! channel by the average dissipated energy of the transition model, both
//! evaluated at the same supply and input statistics. The energy matrix
//! depends only on the supply, so evaluations cache it keyed by voltage;
//! the optimizer additionally caches fitness per chromosome.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{
    average_xor_energy, input_transition_matrix, xor_energy_matrix, EnergyMatrix, InputPair,
    TransitionMatrix, XorNetlist, XorParams,
};
use crate::info::{channel_from_gaussian, mutual_information_reduced, ChannelMatrix};

/// One evaluated operating point of the XOR information-energy trade-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IerPoint {
    /// Supply (V).
    pub v_d: f64,
    /// Supply in thermal-voltage units.
    pub v_d_over_vt: f64,
    /// Probability of logic 0 at input A.
    pub p_a: f64,
    /// Probability of logic 0 at input B.
    pub p_b: f64,
    /// Per-operation mutual information (bits).
    pub mutual_information: f64,
    /// Average per-operation energy (kT).
    pub average_energy_kt: f64,
    /// bits / kT.
    pub eta: f64,
}

/// Shared evaluation context: gate parameters templated on the supply plus
/// an energy-matrix cache.
pub struct EfficiencyContext {
    base: XorParams,
    energy_cache: Mutex<HashMap<u64, Arc<EnergyMatrix>>>,
}

impl EfficiencyContext {
    pub fn new(base: XorParams) -> Self {
        Self {
            base,
            energy_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn base(&self) -> &XorParams {
        &self.base
    }

    pub fn params_at(&self, v_d: f64) -> XorParams {
        let mut p = self.base;
        p.v_d = v_d;
        p
    }

    /// Energy matrix at the given supply, computed once per distinct value.
    pub fn energy_matrix_at(&self, v_d: f64) -> Result<Arc<EnergyMatrix>> {
        let key = v_d.to_bits();
        if let Some(e) = self.energy_cache.lock().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let netlist = XorNetlist::new(self.params_at(v_d))?;
        let matrix = Arc::new(xor_energy_matrix(&netlist)?);
        self.energy_cache
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| matrix.clone());
        Ok(matrix)
    }

    /// Readout channel at the given supply (noise set by the output load).
    pub fn channel_at(&self, v_d: f64) -> Result<ChannelMatrix> {
        channel_from_gaussian(
            v_d,
            self.base.c_g_output,
            self.base.alpha,
            self.base.constants.beta(),
        )
    }

    pub fn cached_energy_matrices(&self) -> usize {
        self.energy_cache.lock().unwrap().len()
    }

    /// Information-energy ratio at one operating point.
    pub fn information_energy_ratio(&self, v_d: f64, p_a: f64, p_b: f64) -> Result<IerPoint> {
        let channel = self.channel_at(v_d)?;
        let energy = self.energy_matrix_at(v_d)?;
        self.ratio_with(&channel, &energy, v_d, p_a, p_b)
    }

    fn ratio_with(
        &self,
        channel: &ChannelMatrix,
        energy: &EnergyMatrix,
        v_d: f64,
        p_a: f64,
        p_b: f64,
    ) -> Result<IerPoint> {
        let mi = mutual_information_reduced(channel, p_a, p_b)?;
        let transitions = input_transition_matrix(p_a, p_b)?;
        let avg = average_xor_energy(energy, &transitions);
        let eta = if avg > 0.0 {
            mi / avg
        } else if mi <= 0.0 {
            0.0
        } else {
            return Err(Error::UndefinedRatio);
        };
        Ok(IerPoint {
            v_d,
            v_d_over_vt: v_d / self.base.constants.thermal_voltage(),
            p_a,
            p_b,
            mutual_information: mi,
            average_energy_kt: avg,
            eta,
        })
    }
}

/// Binary-coded optimizer configuration. Three variables (supply and the
/// two zero-probabilities) share one chromosome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    /// Bits per variable.
    pub gene_bits: u32,
    pub population: usize,
    pub generations: usize,
    pub mutation_probability: f64,
    pub crossover_probability: f64,
    pub tournament_size: usize,
    /// Individuals copied unchanged into the next generation.
    pub elitism: usize,
    /// Supply bounds in thermal-voltage units.
    pub v_d_min_vt: f64,
    pub v_d_max_vt: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            gene_bits: 10,
            population: 80,
            generations: 100,
            mutation_probability: 0.001,
            crossover_probability: 0.8,
            tournament_size: 2,
            elitism: 1,
            v_d_min_vt: 4.0,
            v_d_max_vt: 6.0,
            seed: 42,
        }
    }
}

impl GaConfig {
    fn total_bits(&self) -> u32 {
        3 * self.gene_bits
    }

    fn validate(&self) -> Result<()> {
        if self.gene_bits == 0 || self.gene_bits > 10 {
            return Err(Error::InvalidParams(
                "gene_bits must lie in 1..=10".into(),
            ));
        }
        if self.population < 2 || self.generations == 0 {
            return Err(Error::InvalidParams(
                "population >= 2 and generations >= 1 required".into(),
            ));
        }
        if self.elitism >= self.population || self.tournament_size == 0 {
            return Err(Error::InvalidParams(
                "elitism < population and tournament_size >= 1 required".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability)
            || !(0.0..=1.0).contains(&self.crossover_probability)
        {
            return Err(Error::InvalidParams("probabilities must lie in [0, 1]".into()));
        }
        if !(self.v_d_min_vt > 0.0 && self.v_d_max_vt > self.v_d_min_vt) {
            return Err(Error::InvalidParams("need 0 < v_d_min_vt < v_d_max_vt".into()));
        }
        Ok(())
    }

    /// Decode a chromosome into `(v_d_over_vt, p_a, p_b)`.
    pub fn decode(&self, chromosome: u32) -> (f64, f64, f64) {
        let bits = self.gene_bits;
        let mask = (1u32 << bits) - 1;
        let levels = mask as f64;
        let gene = |i: u32| ((chromosome >> (i * bits)) & mask) as f64 / levels;
        let v = self.v_d_min_vt + gene(2) * (self.v_d_max_vt - self.v_d_min_vt);
        (v, gene(1), gene(0))
    }
}

/// Per-generation record of the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaTracePoint {
    pub generation: usize,
    pub best_eta: f64,
    pub mean_eta: f64,
    pub best_v_d_over_vt: f64,
    pub best_p_a: f64,
    pub best_p_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: IerPoint,
    pub trace: Vec<GaTracePoint>,
    /// Distinct chromosomes evaluated.
    pub evaluations: usize,
}

struct GaRun {
    best_chromosome: u32,
    best_fitness: f64,
    trace: Vec<(usize, f64, f64, u32)>,
    evaluations: usize,
}

/// Elitist generational engine over binary chromosomes. Fitness is cached
/// by chromosome value; each generation hands its uncached chromosomes to
/// `batch_eval` in one deterministic sorted batch (the fitness must be a
/// pure function of the chromosome).
fn ga_engine(config: &GaConfig, batch_eval: &dyn Fn(&[u32]) -> Vec<f64>) -> Result<GaRun> {
    config.validate()?;
    let total_bits = config.total_bits();
    let space = 1u64 << total_bits;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<u32> = (0..config.population)
        .map(|_| (rng.gen_range(0..space)) as u32)
        .collect();
    let mut cache: HashMap<u32, f64> = HashMap::new();
    let mut trace = Vec::with_capacity(config.generations);
    let mut best_chromosome = population[0];
    let mut best_fitness = f64::NEG_INFINITY;

    for generation in 0..config.generations {
        let missing: BTreeSet<u32> = population
            .iter()
            .copied()
            .filter(|c| !cache.contains_key(c))
            .collect();
        let missing: Vec<u32> = missing.into_iter().collect();
        let computed = batch_eval(&missing);
        cache.extend(missing.iter().copied().zip(computed));

        let scores: Vec<f64> = population.iter().map(|c| cache[c]).collect();
        let mut gen_best = 0usize;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[gen_best] {
                gen_best = i;
            }
        }
        if scores[gen_best] > best_fitness {
            best_fitness = scores[gen_best];
            best_chromosome = population[gen_best];
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        trace.push((generation, best_fitness, mean, best_chromosome));

        let mut next = Vec::with_capacity(config.population);
        for _ in 0..config.elitism {
            next.push(best_chromosome);
        }
        let select = |rng: &mut ChaCha8Rng| {
            let mut winner = rng.gen_range(0..config.population);
            for _ in 1..config.tournament_size {
                let rival = rng.gen_range(0..config.population);
                if scores[rival] > scores[winner] {
                    winner = rival;
                }
            }
            population[winner]
        };
        while next.len() < config.population {
            let parent_a = select(&mut rng);
            let parent_b = select(&mut rng);
            let mut child = if rng.gen::<f64>() < config.crossover_probability {
                let point = rng.gen_range(1..total_bits);
                let low_mask = (1u32 << point) - 1;
                (parent_a & !low_mask) | (parent_b & low_mask)
            } else {
                parent_a
            };
            for bit in 0..total_bits {
                if rng.gen::<f64>() < config.mutation_probability {
                    child ^= 1 << bit;
                }
            }
            next.push(child);
        }
        population = next;
    }
    Ok(GaRun {
        best_chromosome,
        best_fitness,
        trace,
        evaluations: cache.len(),
    })
}

/// Maximize the information-energy ratio over the configured box.
/// Deterministic for a fixed configuration (including its seed).
pub fn ga_optimize(ctx: &EfficiencyContext, config: &GaConfig) -> Result<GaResult> {
    config.validate()?;
    let vt = ctx.base().constants.thermal_voltage();
    // warm the energy cache over the batch's distinct supplies first, so
    // the expensive builds parallelize without duplication
    let batch_eval = |codes: &[u32]| -> Vec<f64> {
        let supplies: BTreeSet<u64> = codes
            .iter()
            .map(|&c| (config.decode(c).0 * vt).to_bits())
            .collect();
        let supplies: Vec<u64> = supplies.into_iter().collect();
        supplies.par_iter().for_each(|&bits| {
            let _ = ctx.energy_matrix_at(f64::from_bits(bits));
        });
        codes
            .par_iter()
            .map(|&c| {
                let (v_vt, p_a, p_b) = config.decode(c);
                ctx.information_energy_ratio(v_vt * vt, p_a, p_b)
                    .map_or(0.0, |p| p.eta)
            })
            .collect()
    };
    let run = ga_engine(config, &batch_eval)?;
    let (v_vt, p_a, p_b) = config.decode(run.best_chromosome);
    let best = ctx.information_energy_ratio(v_vt * vt, p_a, p_b)?;
    debug_assert!((best.eta - run.best_fitness).abs() <= 1e-12 * best.eta.abs().max(1.0));
    let trace = run
        .trace
        .into_iter()
        .map(|(generation, best_eta, mean_eta, chromo)| {
            let (v, pa, pb) = config.decode(chromo);
            GaTracePoint {
                generation,
                best_eta,
                mean_eta,
                best_v_d_over_vt: v,
                best_p_a: pa,
                best_p_b: pb,
            }
        })
        .collect();
    Ok(GaResult {
        best,
        trace,
        evaluations: run.evaluations,
    })
}

/// Exhaustive box search over `(v_d, p_a, p_b)`; the independent optimum
/// estimate the optimizer is compared against.
pub fn grid_search(
    ctx: &EfficiencyContext,
    config: &GaConfig,
    n_supply: usize,
    n_prob: usize,
) -> Result<IerPoint> {
    let vt = ctx.base().constants.thermal_voltage();
    let mut best: Option<IerPoint> = None;
    for i in 0..n_supply {
        let frac = i as f64 / (n_supply - 1) as f64;
        let v_d = (config.v_d_min_vt + frac * (config.v_d_max_vt - config.v_d_min_vt)) * vt;
        let channel = ctx.channel_at(v_d)?;
        let energy = ctx.energy_matrix_at(v_d)?;
        for j in 0..n_prob {
            for k in 0..n_prob {
                let p_a = j as f64 / (n_prob - 1) as f64;
                let p_b = k as f64 / (n_prob - 1) as f64;
                let point = ctx.ratio_with(&channel, &energy, v_d, p_a, p_b)?;
                if best.as_ref().is_none_or(|b| point.eta > b.eta) {
                    best = Some(point);
                }
            }
        }
    }
    Ok(best.expect("non-empty grid"))
}

/// Generic optimizer entry for self-tests: maximizes an arbitrary fitness
/// over the decoded box.
pub fn ga_optimize_generic(
    config: &GaConfig,
    fitness: impl Fn(f64, f64, f64) -> f64 + Sync,
) -> Result<(f64, f64, f64, f64, Vec<f64>)> {
    let batch = |codes: &[u32]| -> Vec<f64> {
        codes
            .par_iter()
            .map(|&c| {
                let (v, a, b) = config.decode(c);
                fitness(v, a, b)
            })
            .collect()
    };
    let run = ga_engine(config, &batch)?;
    let (v, a, b) = config.decode(run.best_chromosome);
    let best_trace = run.trace.iter().map(|t| t.1).collect();
    Ok((v, a, b, run.best_fitness, best_trace))
}

/// Zero-probabilities of the three parity-circuit inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityParams {
    pub p_a: f64,
    pub p_b: f64,
    pub p_c: f64,
}

impl ParityParams {
    pub fn uniform() -> Self {
        Self {
            p_a: 0.5,
            p_b: 0.5,
            p_c: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [("p_a", self.p_a), ("p_b", self.p_b), ("p_c", self.p_c)] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} = {p} must lie in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Two-step statistics of the second stage's first input: the ideal first
/// XOR output is 0 with probability `p_a p_b + (1-p_a)(1-p_b)` each step,
/// independently across steps.
pub fn first_stage_zero_probability(p_a: f64, p_b: f64) -> f64 {
    p_a * p_b + (1.0 - p_a) * (1.0 - p_b)
}

/// Input-transition matrices of both cascade stages plus the two-step
/// weights `lambda = (00, 01, 10, 11)` of the first stage's output.
pub fn parity_transition_matrices(
    params: &ParityParams,
) -> Result<(TransitionMatrix, TransitionMatrix, [f64; 4])> {
    params.validate()?;
    let first = input_transition_matrix(params.p_a, params.p_b)?;
    let w0 = first_stage_zero_probability(params.p_a, params.p_b);
    let lambda = [
        w0 * w0,
        w0 * (1.0 - w0),
        (1.0 - w0) * w0,
        (1.0 - w0) * (1.0 - w0),
    ];
    // second stage sees (first-stage output, C), independent across steps
    let second = input_transition_matrix(w0, params.p_c)?;
    Ok((first, second, lambda))
}

/// Average energy of one parity operation: both XOR stages contracted
/// against their own transition statistics (kT).
pub fn parity_energy(
    energy: &EnergyMatrix,
    first: &TransitionMatrix,
    second: &TransitionMatrix,
) -> f64 {
    average_xor_energy(energy, first) + average_xor_energy(energy, second)
}

/// End-to-end conditional readout of the cascade for one input triple.
/// An undecided first stage propagates straight to an undecided output.
fn parity_readout_row(channel: &ChannelMatrix, a: bool, b: bool, c: bool) -> [f64; 3] {
    let first = channel.row(InputPair::new(a, b));
    let mut out = [0.0f64; 3];
    for (y1, &p1) in first.iter().enumerate() {
        if p1 <= 0.0 {
            continue;
        }
        match y1 {
            0 | 1 => {
                let second = channel.row(InputPair::new(y1 == 1, c));
                for y in 0..3 {
                    out[y] += p1 * second[y];
                }
            }
            _ => out[2] += p1,
        }
    }
    out
}

/// Mutual information between the three inputs and the parity output
/// (bits), by the full sum over the eight input triples and three output
/// symbols.
pub fn parity_mutual_information(channel: &ChannelMatrix, params: &ParityParams) -> Result<f64> {
    params.validate()?;
    channel.validate()?;
    let p_bit = |p0: f64, bit: bool| if bit { 1.0 - p0 } else { p0 };
    let mut rows = Vec::with_capacity(8);
    let mut marginal = [0.0f64; 3];
    for idx in 0..8usize {
        let a = idx & 0b100 != 0;
        let b = idx & 0b010 != 0;
        let c = idx & 0b001 != 0;
        let p_abc =
            p_bit(params.p_a, a) * p_bit(params.p_b, b) * p_bit(params.p_c, c);
        let row = parity_readout_row(channel, a, b, c);
        for y in 0..3 {
            marginal[y] += p_abc * row[y];
        }
        rows.push((p_abc, row));
    }
    let mut bits = 0.0;
    for (p_abc, row) in rows {
        if p_abc <= 0.0 {
            continue;
        }
        for y in 0..3 {
            if row[y] > 0.0 && marginal[y] > 0.0 {
                bits += p_abc * row[y] * (row[y] / marginal[y]).log2();
            }
        }
    }
    Ok(bits)
}

/// One evaluated operating point of the parity circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityPoint {
    pub v_d: f64,
    pub v_d_over_vt: f64,
    pub mutual_information: f64,
    pub energy_kt: f64,
    pub eta: f64,
}

/// Energy efficiency of the parity circuit at one supply.
pub fn parity_efficiency(
    ctx: &EfficiencyContext,
    v_d: f64,
    params: &ParityParams,
) -> Result<ParityPoint> {
    let channel = ctx.channel_at(v_d)?;
    let energy = ctx.energy_matrix_at(v_d)?;
    let (first, second, _) = parity_transition_matrices(params)?;
    let mi = parity_mutual_information(&channel, params)?;
    let e = parity_energy(&energy, &first, &second);
    let eta = if e > 0.0 {
        mi / e
    } else if mi <= 0.0 {
        0.0
    } else {
        return Err(Error::UndefinedRatio);
    };
    Ok(ParityPoint {
        v_d,
        v_d_over_vt: v_d / ctx.base().constants.thermal_voltage(),
        mutual_information: mi,
        energy_kt: e,
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PhysicalConstants;
    use crate::info::mutual_information;
    use crate::info::InputDistribution;

    fn vt() -> f64 {
        PhysicalConstants::default().thermal_voltage()
    }

    fn fast_ctx() -> EfficiencyContext {
        let mut p = XorParams::with_supply(5.0 * vt());
        p.c_g_output = 4e-18;
        p.c_g_interior = 4e-18 / 50.0;
        EfficiencyContext::new(p)
    }

    #[test]
    fn constant_inputs_give_zero_ratio() {
        let ctx = fast_ctx();
        let p = ctx
            .information_energy_ratio(5.0 * vt(), 1.0, 1.0)
            .unwrap();
        assert_eq!(p.eta, 0.0);
        assert_eq!(p.mutual_information, 0.0);
    }

    #[test]
    fn eta_is_the_quotient_and_scales_inversely_with_energy() {
        let ctx = fast_ctx();
        let p = ctx
            .information_energy_ratio(5.0 * vt(), 0.39, 0.7)
            .unwrap();
        assert!(p.eta > 0.0);
        assert!((p.eta - p.mutual_information / p.average_energy_kt).abs() <= 1e-12 * p.eta);

        // doubling every energy entry halves the ratio
        let channel = ctx.channel_at(5.0 * vt()).unwrap();
        let energy = ctx.energy_matrix_at(5.0 * vt()).unwrap();
        let mut doubled = (*energy).clone();
        for row in doubled.entries.iter_mut() {
            for e in row.iter_mut() {
                *e *= 2.0;
            }
        }
        let transitions = input_transition_matrix(0.39, 0.7).unwrap();
        let mi = mutual_information_reduced(&channel, 0.39, 0.7).unwrap();
        let eta2 = mi / average_xor_energy(&doubled, &transitions);
        assert!((eta2 - 0.5 * p.eta).abs() < 1e-12);
    }

    #[test]
    fn ga_finds_the_optimum_of_a_smooth_bowl() {
        let config = GaConfig {
            population: 60,
            generations: 60,
            seed: 7,
            ..GaConfig::default()
        };
        // negative sphere centered inside the box
        let center = (5.3, 0.4, 0.7);
        let f = |v: f64, a: f64, b: f64| {
            -((v - center.0).powi(2) / 4.0 + (a - center.1).powi(2) + (b - center.2).powi(2))
        };
        let (v, a, b, best, trace) = ga_optimize_generic(&config, f).unwrap();
        // within 1% of the box diagonal of the known optimum
        let err = (((v - center.0) / 2.0).powi(2) + (a - center.1).powi(2) + (b - center.2).powi(2))
            .sqrt()
            / 3f64.sqrt();
        assert!(err < 0.01, "decoded ({v}, {a}, {b}), err {err}");
        assert!(best <= 0.0);
        for w in trace.windows(2) {
            assert!(w[1] >= w[0], "best-fitness trace must be nondecreasing");
        }
    }

    #[test]
    fn ga_is_deterministic_under_seed() {
        let config = GaConfig {
            population: 30,
            generations: 20,
            seed: 11,
            ..GaConfig::default()
        };
        let f = |v: f64, a: f64, b: f64| -(v - 4.5).abs() - (a - 0.2).abs() - (b - 0.9).abs();
        let r1 = ga_optimize_generic(&config, f).unwrap();
        let r2 = ga_optimize_generic(&config, f).unwrap();
        assert_eq!(r1.0.to_bits(), r2.0.to_bits());
        assert_eq!(r1.3.to_bits(), r2.3.to_bits());
        assert_eq!(r1.4, r2.4);
    }

    #[test]
    fn decode_covers_the_box() {
        let config = GaConfig::default();
        let (v, a, b) = config.decode(0);
        assert_eq!((v, a, b), (4.0, 0.0, 0.0));
        let all_ones = (1u32 << config.total_bits()) - 1;
        let (v, a, b) = config.decode(all_ones);
        assert!((v - 6.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_optimizer_is_deterministic() {
        let config = GaConfig {
            gene_bits: 4,
            population: 8,
            generations: 3,
            seed: 19,
            ..GaConfig::default()
        };
        let a = ga_optimize(&fast_ctx(), &config).unwrap();
        let b = ga_optimize(&fast_ctx(), &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lambda_weights_form_a_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let params = ParityParams {
                p_a: rng.gen(),
                p_b: rng.gen(),
                p_c: rng.gen(),
            };
            let (_, _, lambda) = parity_transition_matrices(&params).unwrap();
            let sum: f64 = lambda.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(lambda.iter().all(|&l| l >= 0.0));
        }
    }

    #[test]
    fn degenerate_first_stage_concentrates_lambda() {
        let params = ParityParams {
            p_a: 1.0,
            p_b: 1.0,
            p_c: 0.3,
        };
        let (_, second, lambda) = parity_transition_matrices(&params).unwrap();
        assert_eq!(lambda, [1.0, 0.0, 0.0, 0.0]);
        // second stage reduces to the (0, c) pattern
        let expect = input_transition_matrix(1.0, 0.3).unwrap();
        for p in 0..4 {
            for n in 0..4 {
                assert!((second.joint[p][n] - expect.joint[p][n]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn uniform_inputs_make_second_stage_uniform() {
        let (_, second, _) =
            parity_transition_matrices(&ParityParams::uniform()).unwrap();
        for row in &second.joint {
            for &x in row {
                assert!((x - 1.0 / 16.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parity_matrices_match_monte_carlo() {
        // push i.i.d. triples through an ideal first XOR and tabulate the
        // second stage's observed input transitions
        let params = ParityParams {
            p_a: 0.37,
            p_b: 0.81,
            p_c: 0.55,
        };
        let (_, second, lambda) = parity_transition_matrices(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let n = 1_000_000usize;
        let mut counts = [[0u64; 4]; 4];
        let mut lambda_counts = [0u64; 4];
        let draw = |rng: &mut ChaCha8Rng, p0: f64| rng.gen::<f64>() >= p0; // true = logic 1
        for _ in 0..n {
            let (a0, b0, c0) = (
                draw(&mut rng, params.p_a),
                draw(&mut rng, params.p_b),
                draw(&mut rng, params.p_c),
            );
            let (a1, b1, c1) = (
                draw(&mut rng, params.p_a),
                draw(&mut rng, params.p_b),
                draw(&mut rng, params.p_c),
            );
            let y0 = a0 ^ b0;
            let y1 = a1 ^ b1;
            let prev = InputPair::new(y0, c0).index();
            let next = InputPair::new(y1, c1).index();
            counts[prev][next] += 1;
            lambda_counts[((y0 as usize) << 1) | y1 as usize] += 1;
        }
        for p in 0..4 {
            for q in 0..4 {
                let expect = second.joint[p][q];
                let obs = counts[p][q] as f64 / n as f64;
                let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
                assert!(
                    (obs - expect).abs() <= 3.0 * sigma + 3e-6,
                    "cell ({p},{q}): {obs} vs {expect}"
                );
            }
        }
        for k in 0..4 {
            let obs = lambda_counts[k] as f64 / n as f64;
            let sigma = (lambda[k] * (1.0 - lambda[k]) / n as f64).sqrt();
            assert!((obs - lambda[k]).abs() <= 3.0 * sigma + 3e-6, "lambda {k}");
        }
    }

    #[test]
    fn parity_energy_linearity() {
        let e = EnergyMatrix::constant(4.0);
        let t = input_transition_matrix(0.3, 0.7).unwrap();
        assert!((parity_energy(&e, &t, &t) - 8.0).abs() < 1e-12);

        let mut e2 = EnergyMatrix::constant(0.0);
        e2.entries[1][2] = 10.0;
        let doubled = {
            let mut d = e2.clone();
            d.entries[1][2] *= 2.0;
            d
        };
        let base = parity_energy(&e2, &t, &t);
        assert!((parity_energy(&doubled, &t, &t) - 2.0 * base).abs() < 1e-12);
    }

    #[test]
    fn noiseless_uniform_parity_carries_one_bit() {
        let channel = ChannelMatrix::binary_symmetric(0.0);
        let mi = parity_mutual_information(&channel, &ParityParams::uniform()).unwrap();
        assert!((mi - 1.0).abs() < 1e-12);

        let constant = ParityParams {
            p_a: 1.0,
            p_b: 1.0,
            p_c: 1.0,
        };
        let mi = parity_mutual_information(&channel, &constant).unwrap();
        assert!(mi.abs() < 1e-12);
    }

    #[test]
    fn noisy_parity_matches_enumeration_oracle() {
        // independent brute-force over the 8 x 3 joint table
        let flip = 0.05;
        let channel = ChannelMatrix::binary_symmetric(flip);
        let params = ParityParams {
            p_a: 0.6,
            p_b: 0.45,
            p_c: 0.5,
        };
        let p_bit = |p0: f64, bit: bool| if bit { 1.0 - p0 } else { p0 };
        // oracle: y = (a^b)^c with two independent symmetric flips
        let mut joint = vec![vec![0.0f64; 3]; 8];
        for idx in 0..8usize {
            let a = idx & 0b100 != 0;
            let b = idx & 0b010 != 0;
            let c = idx & 0b001 != 0;
            let p_abc = p_bit(params.p_a, a) * p_bit(params.p_b, b) * p_bit(params.p_c, c);
            for (first_flip, p1) in [(false, 1.0 - flip), (true, flip)] {
                for (second_flip, p2) in [(false, 1.0 - flip), (true, flip)] {
                    let y = ((a ^ b) ^ first_flip) ^ c ^ second_flip;
                    joint[idx][y as usize] += p_abc * p1 * p2;
                }
            }
        }
        let mut marginal = [0.0f64; 3];
        let mut p_in = [0.0f64; 8];
        for idx in 0..8 {
            for y in 0..3 {
                marginal[y] += joint[idx][y];
                p_in[idx] += joint[idx][y];
            }
        }
        let mut oracle = 0.0;
        for idx in 0..8 {
            for y in 0..3 {
                if joint[idx][y] > 0.0 {
                    oracle += joint[idx][y] * (joint[idx][y] / (p_in[idx] * marginal[y])).log2();
                }
            }
        }
        let mi = parity_mutual_information(&channel, &params).unwrap();
        assert!((mi - oracle).abs() < 1e-12, "{mi} vs {oracle}");
    }

    #[test]
    fn parity_efficiency_halves_when_energy_doubles() {
        let channel = ChannelMatrix::binary_symmetric(0.01);
        let params = ParityParams::uniform();
        let (first, second, _) = parity_transition_matrices(&params).unwrap();
        let e = EnergyMatrix::constant(5.0);
        let mut e2 = e.clone();
        for row in e2.entries.iter_mut() {
            for x in row.iter_mut() {
                *x *= 2.0;
            }
        }
        let mi = parity_mutual_information(&channel, &params).unwrap();
        let eta1 = mi / parity_energy(&e, &first, &second);
        let eta2 = mi / parity_energy(&e2, &first, &second);
        assert!((eta2 - 0.5 * eta1).abs() < 1e-12);
    }

    #[test]
    fn swap_symmetry_of_the_ratio() {
        let ctx = fast_ctx();
        let a = ctx.information_energy_ratio(5.0 * vt(), 0.3, 0.8).unwrap();
        let b = ctx.information_energy_ratio(5.0 * vt(), 0.8, 0.3).unwrap();
        // interior nodes share one capacitance, so the energy matrix is
        // symmetric under swapping the input legs
        assert!(
            (a.eta - b.eta).abs() < 2e-2 * a.eta.max(b.eta),
            "{} vs {}",
            a.eta,
            b.eta
        );
    }

    #[test]
    fn mutual_information_reduced_agrees_with_full_distribution_here() {
        let ctx = fast_ctx();
        let channel = ctx.channel_at(5.0 * vt()).unwrap();
        let direct = mutual_information(
            &channel,
            &InputDistribution::from_marginals(0.3, 0.8).unwrap(),
        );
        let reduced = mutual_information_reduced(&channel, 0.3, 0.8).unwrap();
        assert!((direct - reduced).abs() < 1e-12);
    }
}
