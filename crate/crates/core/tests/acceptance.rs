//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Tolerances are fixed here, not tuned at runtime.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mesogate::constants::PhysicalConstants;
use mesogate::device::{GateState, LevelMap, N_STATES};
use mesogate::efficiency::{
    ga_optimize, grid_search, parity_efficiency, parity_transition_matrices, EfficiencyContext,
    GaConfig, ParityParams,
};
use mesogate::gate::{
    average_xor_energy, input_transition_matrix, switching_model_energy, xor_energy_matrix,
    InputPair, XorNetlist, XorParams,
};
use mesogate::gillespie::{
    frozen_marginals_at, gaussianity_check, GaussianityThresholds,
};
use mesogate::info::{
    capacity, channel_from_gaussian, entropy_bits, error_probability_low_branch,
    fit_noise_capacitance, mutual_information, mutual_information_reduced, noise_decomposition,
    ChannelMatrix, InputDistribution,
};
use mesogate::master::{
    propagate, DistributionVector, MatrixProvider, NandSystem, PropagateOptions,
};
use mesogate::NandParams;

fn vt() -> f64 {
    PhysicalConstants::default().thermal_voltage()
}

fn beta() -> f64 {
    PhysicalConstants::default().beta()
}

#[test]
fn criterion_01_generator_validity() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n_draws = 1000;
    for draw in 0..n_draws {
        let v_d = vt() * rng.gen_range(2.0..20.0);
        let c_g = 10f64.powf(rng.gen_range(-18.0..-15.0));
        let gamma = 10f64.powf(rng.gen_range(10.0..13.0));
        let alpha = rng.gen_range(0.05..0.45);
        let pick_input = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
            0 => 0.0,
            1 => v_d,
            _ => rng.gen_range(0.0..v_d),
        };
        let params = NandParams {
            v_d,
            v_s: 0.0,
            v_a: pick_input(&mut rng),
            v_b: pick_input(&mut rng),
            c_g,
            gamma,
            alpha,
            bose_rate_cap: rng.gen_range(1.0..50.0),
            level_map: LevelMap {
                kappa: rng.gen_range(1.0..3.0),
                margin_n_kt: rng.gen_range(0.5..3.0),
                margin_p_kt: rng.gen_range(0.5..3.0),
                eps0_n: None,
                eps0_p: None,
            },
            constants: PhysicalConstants::default(),
        };
        let sys = NandSystem::new(params).unwrap();
        let v_out = rng.gen_range(-0.2 * v_d..1.2 * v_d);
        let gen = sys.generator(v_out);
        let scale = gen.max_exit_rate();
        for n in 0..N_STATES {
            let residual = gen.column_sum(n).abs();
            assert!(
                residual <= 1e-12 * scale,
                "draw {draw}: column {n} residual {residual:e} vs scale {scale:e}"
            );
        }
        assert!(
            gen.min_off_diagonal() >= 0.0,
            "draw {draw}: negative off-diagonal rate"
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime budget exceeded: {elapsed:?}");
    println!(
        "criterion 01 (generator validity): PASS - {n_draws} random parameter draws, \
         column residuals <= 1e-12 relative, off-diagonals >= 0, {elapsed:.2?}"
    );
}

#[test]
fn criterion_02_master_equation_gillespie_agreement() {
    let t0 = Instant::now();
    // switching transient of a NAND driven to (1,1), node potential frozen
    // mid-swing so the jump process and the master equation share one
    // generator exactly
    let p = NandParams::with_supply(15.0 * vt()).with_inputs(15.0 * vt(), 15.0 * vt());
    let sys = NandSystem::new(p).unwrap();
    let v_frozen = 0.4 * p.v_d;
    let gen = sys.generator(v_frozen);
    let start = GateState::from_index(0);
    let checkpoints = [0.3 / p.gamma, 1.5 / p.gamma, 8.0 / p.gamma];
    let n_traj = 10_000;
    let marginals = frozen_marginals_at(&gen, start, &checkpoints, n_traj, 202);

    let opts = PropagateOptions::default();
    let mut dist = DistributionVector::delta(start);
    let mut prev_t = 0.0;
    let mut worst_tv = 0.0f64;
    for (k, &cp) in checkpoints.iter().enumerate() {
        let (next, _) = propagate(
            &dist,
            v_frozen,
            cp - prev_t,
            &MatrixProvider::Frozen(&gen),
            &opts,
        )
        .unwrap();
        dist = next;
        prev_t = cp;
        let tv: f64 = 0.5
            * (0..N_STATES)
                .map(|i| (marginals[k][i] - dist.probability(i)).abs())
                .sum::<f64>();
        worst_tv = worst_tv.max(tv);
        assert!(tv < 0.02, "checkpoint {k}: TV = {tv}");
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "runtime budget exceeded: {elapsed:?}");
    println!(
        "criterion 02 (master equation vs jump process): PASS - worst TV {worst_tv:.4} \
         over 3 checkpoints, {n_traj} trajectories, {elapsed:.2?}"
    );
}

#[test]
fn criterion_03_gaussian_output_model() {
    let t0 = Instant::now();
    let params = XorParams::with_supply(15.0 * vt());
    let netlist = XorNetlist::new(params).unwrap();
    let n = 10_000;
    let burn_in = 2500.0 / params.gamma;
    let model_variance = 1.0 / (params.constants.beta() * params.c_g_output);
    let mut lines = Vec::new();
    for (ab, expect_mean) in [
        (InputPair::from_index(0), 0.0),
        (InputPair::from_index(1), params.v_d),
    ] {
        let stats = netlist
            .xor_output_distribution(ab, n, burn_in, 303, 60)
            .unwrap();
        let report = gaussianity_check(&stats, GaussianityThresholds::default());
        assert!(
            report.pass,
            "branch {}: skew {:.3}, excess kurtosis {:.3}",
            ab.label(),
            report.skewness,
            report.excess_kurtosis
        );
        let mean_err = (stats.mean - expect_mean).abs();
        let three_se = 3.0 * stats.standard_error();
        assert!(
            mean_err <= three_se,
            "branch {}: mean error {mean_err:.2e} V exceeds {three_se:.2e} V",
            ab.label()
        );
        let variance_ratio = stats.variance / model_variance;
        assert!(
            (0.5..=2.0).contains(&variance_ratio),
            "branch {}: variance ratio {variance_ratio:.3}",
            ab.label()
        );
        lines.push(format!(
            "branch {}: mean err {:.1e} V (3se {:.1e}), var/model {:.3}, skew {:.3}, exkurt {:.3}",
            ab.label(),
            mean_err,
            three_se,
            variance_ratio,
            report.skewness,
            report.excess_kurtosis
        ));
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "runtime budget exceeded: {elapsed:?}");
    println!(
        "criterion 03 (gaussian output model): PASS - {} samples/branch; {}; {}; {elapsed:.2?}",
        n, lines[0], lines[1]
    );
}

#[test]
fn criterion_04_mutual_information_identities() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    // reduced two-class form against the direct four-symbol sum
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let v_d = vt() * rng.gen_range(3.0..8.0);
        let c_g = 10f64.powf(rng.gen_range(-17.0..-15.0));
        let channel = channel_from_gaussian(v_d, c_g, 0.2, beta()).unwrap();
        let p_a: f64 = rng.gen();
        let p_b: f64 = rng.gen();
        let direct = mutual_information(
            &channel,
            &InputDistribution::from_marginals(p_a, p_b).unwrap(),
        );
        let reduced = mutual_information_reduced(&channel, p_a, p_b).unwrap();
        let diff = (direct - reduced).abs();
        worst = worst.max(diff);
        assert!(diff < 1e-12, "pa {p_a}, pb {p_b}: diff {diff:e}");
    }
    // entropy decomposition identity on arbitrary channels
    let mut worst_omega = 0.0f64;
    for _ in 0..50 {
        let mut rows = [[0.0f64; 3]; 4];
        for row in rows.iter_mut() {
            let raw: [f64; 3] = core::array::from_fn(|_| rng.gen::<f64>() + 1e-3);
            let total: f64 = raw.iter().sum();
            *row = core::array::from_fn(|i| raw[i] / total);
        }
        let channel = ChannelMatrix { rows };
        let raw: [f64; 4] = core::array::from_fn(|_| rng.gen::<f64>() + 1e-3);
        let total: f64 = raw.iter().sum();
        let inputs = InputDistribution(core::array::from_fn(|i| raw[i] / total));
        let d = noise_decomposition(&channel, &inputs);
        let mi = mutual_information(&channel, &inputs);
        let diff = (d.information_bits - mi).abs();
        worst_omega = worst_omega.max(diff);
        assert!(diff < 1e-12, "decomposition mismatch {diff:e}");
        assert!((d.information_bits - (d.output_bits - d.noise_bits)).abs() < 1e-12);
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "runtime budget exceeded: {elapsed:?}");
    println!(
        "criterion 04 (information identities): PASS - reduced form worst |diff| {worst:.1e} \
         over 1000 draws; decomposition worst |diff| {worst_omega:.1e} over 50 draws; {elapsed:.2?}"
    );
}

#[test]
fn criterion_05_capacity_oracle() {
    let t0 = Instant::now();
    for flip in [0.01, 0.05, 0.1] {
        let channel = ChannelMatrix::binary_symmetric(flip);
        let result = capacity(&channel).unwrap();
        let closed_form = 1.0 - entropy_bits(&[flip, 1.0 - flip]);
        // independent oracle: exhaustive scan over the even-class mass
        let mut grid_best = 0.0f64;
        let even = channel.rows[0];
        let odd = channel.rows[1];
        let mut w = 0.0;
        while w <= 1.0 {
            let q: [f64; 3] = core::array::from_fn(|y| w * even[y] + (1.0 - w) * odd[y]);
            let mi = entropy_bits(&q) - w * entropy_bits(&even) - (1.0 - w) * entropy_bits(&odd);
            grid_best = grid_best.max(mi);
            w += 1e-4;
        }
        assert!(
            (result.bits - closed_form).abs() < 1e-6,
            "flip {flip}: capacity {} vs closed form {closed_form}",
            result.bits
        );
        assert!(
            (result.bits - grid_best).abs() < 1e-6,
            "flip {flip}: capacity {} vs grid {grid_best}",
            result.bits
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime budget exceeded: {elapsed:?}");
    println!(
        "criterion 05 (capacity vs grid oracle): PASS - flip 0.01/0.05/0.1 all within 1e-6; \
         {elapsed:.2?}"
    );
}

#[test]
fn criterion_06_average_energy_vs_switching_model() {
    let t0 = Instant::now();
    let params = XorParams::with_supply(15.0 * vt());
    let netlist = XorNetlist::new(params).unwrap();
    let energy = xor_energy_matrix(&netlist).unwrap();
    let uniform = input_transition_matrix(0.5, 0.5).unwrap();
    let st_model = average_xor_energy(&energy, &uniform);
    let switching =
        switching_model_energy(0.2, params.c_g_output, params.v_d, &params.constants).unwrap();
    let deviation = (st_model - switching.kt) / switching.kt;
    let elapsed = t0.elapsed();
    assert!(
        deviation.abs() <= 0.35,
        "deviation {:.1}% exceeds the 35% gate (ST {st_model:.1} kT vs {:.1} kT)",
        100.0 * deviation,
        switching.kt
    );
    assert!(elapsed.as_secs_f64() < 600.0, "runtime budget exceeded: {elapsed:?}");
    let within_claim = if deviation.abs() <= 0.10 {
        "inside"
    } else {
        "outside"
    };
    println!(
        "criterion 06 (average energy vs switching model): PASS - ST {st_model:.1} kT vs \
         zeta C V^2 = {:.1} kT, deviation {:+.1}% (recorded; {within_claim} the published \
         10% figure, which depends on unpublished level constants); {elapsed:.2?}",
        switching.kt,
        100.0 * deviation
    );
}

#[test]
fn criterion_07_error_probability_crossing() {
    let t0 = Instant::now();
    // fit the readout capacitance so the misread probability crosses 1%
    // at 4 thermal-voltage units, then freeze it for the sweep
    let alpha = 0.2;
    let c_fit = fit_noise_capacitance(0.01, 4.0 * vt(), alpha, beta()).unwrap();
    let points = 31;
    let mut errors = Vec::with_capacity(points);
    for i in 0..points {
        let v = (3.0 + 3.0 * i as f64 / (points - 1) as f64) * vt();
        errors.push((
            v / vt(),
            error_probability_low_branch(v, c_fit, alpha, beta()).unwrap(),
        ));
    }
    for w in errors.windows(2) {
        assert!(
            w[1].1 < w[0].1,
            "error probability not strictly decreasing at {} VT",
            w[1].0
        );
    }
    // locate the 1% crossing by linear interpolation
    let mut crossing = None;
    for w in errors.windows(2) {
        if w[0].1 >= 0.01 && w[1].1 < 0.01 {
            let f = (w[0].1 - 0.01) / (w[0].1 - w[1].1);
            crossing = Some(w[0].0 + f * (w[1].0 - w[0].0));
        }
    }
    let crossing = crossing.expect("1% crossing inside the sweep");
    assert!(
        (3.8..=4.2).contains(&crossing),
        "crossing at {crossing:.3} VT outside [3.8, 4.2]"
    );
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime budget exceeded: {elapsed:?}");
    println!(
        "criterion 07 (error-probability crossing): PASS - fitted C_g = {c_fit:.4e} F, \
         strictly decreasing over [3, 6] VT, 1% crossing at {crossing:.3} VT; {elapsed:.2?}"
    );
}

/// Optimizer mechanics: exact published configuration, nondecreasing
/// convergence, dominance over the exhaustive grid, and the ratio identity.
#[test]
fn criterion_08a_optimizer_convergence() {
    let t0 = Instant::now();
    let ctx = EfficiencyContext::new(XorParams::with_supply(15.0 * vt()));
    let config = GaConfig::default();
    assert_eq!(
        (config.gene_bits, config.population, config.generations),
        (10, 80, 100)
    );
    assert_eq!(config.mutation_probability, 0.001);
    assert_eq!((config.v_d_min_vt, config.v_d_max_vt), (4.0, 6.0));

    let grid = grid_search(&ctx, &config, 33, 21).unwrap();
    let ga = ga_optimize(&ctx, &config).unwrap();
    for w in ga.trace.windows(2) {
        assert!(
            w[1].best_eta >= w[0].best_eta,
            "best-fitness trace decreased at generation {}",
            w[1].generation
        );
    }
    assert!(
        ga.best.eta >= grid.eta * 0.98,
        "GA best {:.4e} fell below grid best {:.4e} - 2%",
        ga.best.eta,
        grid.eta
    );
    let identity = (ga.best.eta - ga.best.mutual_information / ga.best.average_energy_kt).abs();
    assert!(identity <= 1e-12 * ga.best.eta.max(1.0), "eta identity: {identity:e}");
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1800.0, "runtime budget exceeded: {elapsed:?}");
    println!(
        "criterion 08a (optimizer convergence): PASS - GA best eta {:.4e} bits/kT at \
         vd {:.3} VT, pa {:.4}, pb {:.4}; grid best {:.4e}; {} distinct evaluations; {elapsed:.2?}",
        ga.best.eta, ga.best.v_d_over_vt, ga.best.p_a, ga.best.p_b, grid.eta, ga.evaluations
    );
}

/// Comparison of the converged ratio against the published 2.6e-4 bits/kT,
/// required to agree within a factor of five.
///
/// This check cannot pass under this model: with the published load
/// (1.62e-16 F) the per-operation switching energy near 4-6 thermal-voltage
/// supplies is tens to hundreds of kT, holds are settle-bounded and nearly
/// free, and the optimizer legitimately reaches rare-switching inputs where
/// the ratio is two orders of magnitude above the published value. The
/// published figure is also irreconcilable with the same source's own
/// energy-scale claims (a 10%-of-zeta-C-V^2 average at 15 VT and a 3.66x
/// parity-efficiency gain at 5 VT jointly imply a ratio near 3e-3, not
/// 2.6e-4). Kept red rather than loosened; see the decisions ledger.
#[test]
fn criterion_08b_reported_ratio_band() {
    let t0 = Instant::now();
    let ctx = EfficiencyContext::new(XorParams::with_supply(15.0 * vt()));
    let config = GaConfig::default();
    let ga = ga_optimize(&ctx, &config).unwrap();
    let reported = 2.6e-4;
    let (lo, hi) = (reported / 5.0, reported * 5.0);
    let elapsed = t0.elapsed();
    println!(
        "criterion 08b (reported-ratio band): measured eta {:.4e} bits/kT vs required \
         [{lo:.2e}, {hi:.2e}]; {elapsed:.2?}",
        ga.best.eta
    );
    assert!(
        ga.best.eta >= lo && ga.best.eta <= hi,
        "converged eta {:.4e} bits/kT outside the x5 band [{lo:.2e}, {hi:.2e}] around the \
         published 2.6e-4; structural - see test doc comment and decisions ledger",
        ga.best.eta
    );
}

#[test]
fn criterion_09_parity_efficiency_gain() {
    let t0 = Instant::now();
    let ctx = EfficiencyContext::new(XorParams::with_supply(15.0 * vt()));
    let uniform = ParityParams::uniform();
    let low = parity_efficiency(&ctx, 5.0 * vt(), &uniform).unwrap();
    let high = parity_efficiency(&ctx, 15.0 * vt(), &uniform).unwrap();
    let ratio = low.eta / high.eta;
    assert!(
        ratio > 2.0,
        "efficiency gain {ratio:.2} at 5 VT vs 15 VT does not exceed 2x"
    );
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1200.0, "runtime budget exceeded: {elapsed:?}");
    let warn = if (2.5..=5.5).contains(&ratio) {
        ""
    } else {
        " [warning: ratio outside the published-comparison band [2.5, 5.5]; the energy \
         scales as the supply squared here, giving (15/5)^2 = 9]"
    };
    println!(
        "criterion 09 (parity efficiency gain): PASS - eta(5VT) {:.4e} / eta(15VT) {:.4e} \
         = {ratio:.2}x{warn}; {elapsed:.2?}",
        low.eta, high.eta
    );
}

#[test]
fn criterion_10_parity_statistics_oracle() {
    let t0 = Instant::now();
    let mut seed_rng = ChaCha8Rng::seed_from_u64(1010);
    let n = 1_000_000usize;
    for draw in 0..20 {
        let params = ParityParams {
            p_a: seed_rng.gen(),
            p_b: seed_rng.gen(),
            p_c: seed_rng.gen(),
        };
        let (first, second, lambda) = parity_transition_matrices(&params).unwrap();
        // Monte-Carlo oracle: i.i.d. triples through an ideal first XOR
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + draw);
        let mut counts_first = [[0u64; 4]; 4];
        let mut counts_second = [[0u64; 4]; 4];
        let mut counts_lambda = [0u64; 4];
        let bit = |rng: &mut ChaCha8Rng, p0: f64| rng.gen::<f64>() >= p0;
        for _ in 0..n {
            let (a0, b0, c0) = (
                bit(&mut rng, params.p_a),
                bit(&mut rng, params.p_b),
                bit(&mut rng, params.p_c),
            );
            let (a1, b1, c1) = (
                bit(&mut rng, params.p_a),
                bit(&mut rng, params.p_b),
                bit(&mut rng, params.p_c),
            );
            counts_first[InputPair::new(a0, b0).index()][InputPair::new(a1, b1).index()] += 1;
            let (y0, y1) = (a0 ^ b0, a1 ^ b1);
            counts_second[InputPair::new(y0, c0).index()][InputPair::new(y1, c1).index()] += 1;
            counts_lambda[((y0 as usize) << 1) | y1 as usize] += 1;
        }
        let check = |observed: u64, expected: f64, what: &str| {
            let obs = observed as f64 / n as f64;
            let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
            assert!(
                (obs - expected).abs() <= 3.0 * sigma + 3e-6,
                "draw {draw} {what}: observed {obs:.5} vs expected {expected:.5}"
            );
        };
        for p in 0..4 {
            for q in 0..4 {
                check(counts_first[p][q], first.joint[p][q], "first-stage cell");
                check(counts_second[p][q], second.joint[p][q], "second-stage cell");
            }
        }
        for k in 0..4 {
            check(counts_lambda[k], lambda[k], "lambda");
        }
        let lambda_sum: f64 = lambda.iter().sum();
        assert!((lambda_sum - 1.0).abs() < 1e-12);
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "runtime budget exceeded: {elapsed:?}");
    println!(
        "criterion 10 (parity statistics vs Monte-Carlo): PASS - 20 random parameter draws, \
         1e6 samples each, all cells within 3 sigma; {elapsed:.2?}"
    );
}
