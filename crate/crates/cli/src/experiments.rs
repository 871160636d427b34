//! The named experiments. Each consumes a resolved configuration, emits
//! CSV tables plus a run record into the output directory, and returns a
//! JSON summary.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use mesogate::efficiency::{
    ga_optimize, parity_efficiency, parity_transition_matrices, EfficiencyContext, ParityParams,
};
use mesogate::gate::{
    average_xor_energy, input_transition_matrix, switching_model_energy, xor_energy_matrix,
    InputPair, XorNetlist,
};
use mesogate::gillespie::{frozen_marginals_at, gaussianity_check, GaussianityThresholds};
use mesogate::info::{
    capacity, channel_from_gaussian, error_probability_low_branch, flip_probabilities,
    mutual_information_reduced, noise_decomposition, InputDistribution,
};
use mesogate::master::{propagate, DistributionVector, MatrixProvider, NandSystem, PropagateOptions};
use mesogate::device::{GateState, N_STATES};
use mesogate::NandParams;

use crate::config::{RunConfig, Sweep};
use crate::output::{write_atomic, CsvTable, CsvValue, RunRecord};
use crate::CliError;

pub fn run(experiment: &str, config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let t0 = Instant::now();
    let hash = config.hash(experiment);
    let snapshot = toml::to_string(&config.to_raw(experiment))
        .map_err(|e| CliError::Io(format!("snapshot: {e}")))?;
    let mut record = RunRecord::new(experiment, &hash, snapshot);

    match experiment {
        "xor-energy" => xor_energy(config, out_dir, &hash, &mut record)?,
        "xor-mi" => xor_mi(config, out_dir, &hash, &mut record)?,
        "ier-optimize" => ier_optimize(config, out_dir, &hash, &mut record)?,
        "error-sweep" => error_sweep(config, out_dir, &hash, &mut record)?,
        "parity-efficiency" => parity_sweep(config, out_dir, &hash, &mut record)?,
        "gillespie-validate" => gillespie_validate(config, out_dir, &hash, &mut record)?,
        other => return Err(CliError::Config(format!("unknown experiment '{other}'"))),
    }

    record.wall_clock_s = t0.elapsed().as_secs_f64();
    let path = record.write(out_dir)?;
    eprintln!(
        "{experiment}: wrote {} files to {} in {:.2}s (config {hash})",
        record.files.len() + 1,
        out_dir.display(),
        record.wall_clock_s
    );
    let _ = path;
    Ok(())
}

fn supply_axis(config: &RunConfig) -> Vec<f64> {
    match &config.sweep {
        Some(sweep) => sweep.values(),
        None => vec![config.v_d_volts / config.thermal_voltage()],
    }
}

fn xor_energy(
    config: &RunConfig,
    out: &Path,
    hash: &str,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let vt = config.thermal_voltage();
    let base = config.xor_params();

    // matrices at the configured operating point
    let netlist = XorNetlist::new(base)?;
    let energy = xor_energy_matrix(&netlist)?;
    let transitions = input_transition_matrix(config.p_a, config.p_b)?;
    let mut block = Vec::new();
    energy
        .write_csv(&mut block)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let mut table = CsvTable::new(hash, &[], &[]);
    table.raw(std::str::from_utf8(&block).unwrap());
    record.add_file(&write_atomic(out, "energy_matrix.csv", &table.finish())?);

    let mut block = Vec::new();
    transitions
        .write_csv(&mut block)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let mut table = CsvTable::new(hash, &[], &[]);
    table.raw(std::str::from_utf8(&block).unwrap());
    record.add_file(&write_atomic(out, "transition_matrix.csv", &table.finish())?);

    // supply sweep of the averages
    let ctx = EfficiencyContext::new(base);
    let axis = supply_axis(config);
    let rows: Vec<[f64; 5]> = axis
        .par_iter()
        .map(|&vd_vt| -> Result<[f64; 5], CliError> {
            let v_d = vd_vt * vt;
            let e = ctx.energy_matrix_at(v_d)?;
            let uniform = input_transition_matrix(0.5, 0.5)?;
            let st_uniform = average_xor_energy(&e, &uniform);
            let st_inputs = average_xor_energy(&e, &transitions);
            let sw = switching_model_energy(config.zeta, config.c_g_farads, v_d, &base.constants)?;
            Ok([
                vd_vt,
                st_uniform,
                st_inputs,
                sw.kt,
                (st_uniform - sw.kt) / sw.kt,
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut table = CsvTable::new(
        hash,
        &["energies in kT; deviation relative to the switching model"],
        &[
            "vd_over_VT",
            "st_energy_uniform_kT",
            "st_energy_at_inputs_kT",
            "switching_model_kT",
            "deviation",
        ],
    );
    for r in &rows {
        table.float_row(r);
    }
    record.add_file(&write_atomic(out, "xor_energy.csv", &table.finish())?);

    let last = rows.last().unwrap();
    record.summary = json!({
        "st_energy_uniform_kT": last[1],
        "switching_model_kT": last[3],
        "deviation": last[4],
    });
    Ok(())
}

fn xor_mi(
    config: &RunConfig,
    out: &Path,
    hash: &str,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let vt = config.thermal_voltage();
    let beta = config.constants().beta();

    let channel = channel_from_gaussian(config.v_d_volts, config.c_g_farads, config.alpha, beta)?;
    let mut block = Vec::new();
    channel
        .write_csv(&mut block)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let mut table = CsvTable::new(hash, &[], &[]);
    table.raw(std::str::from_utf8(&block).unwrap());
    record.add_file(&write_atomic(out, "channel.csv", &table.finish())?);

    let axis = supply_axis(config);
    let rows: Vec<[f64; 7]> = axis
        .par_iter()
        .map(|&vd_vt| -> Result<[f64; 7], CliError> {
            let v_d = vd_vt * vt;
            let ch = channel_from_gaussian(v_d, config.c_g_farads, config.alpha, beta)?;
            let mi = mutual_information_reduced(&ch, config.p_a, config.p_b)?;
            let cap = capacity(&ch)?;
            let d = noise_decomposition(
                &ch,
                &InputDistribution::from_marginals(config.p_a, config.p_b)?,
            );
            Ok([
                vd_vt,
                mi,
                cap.bits,
                cap.factorized.bits,
                d.input_bits,
                d.output_bits,
                d.noise_bits,
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut table = CsvTable::new(
        hash,
        &["mutual information and capacity of the ternary readout channel"],
        &[
            "vd_over_VT",
            "mi_bits",
            "capacity_bits",
            "capacity_factorized_bits",
            "input_entropy_bits",
            "output_entropy_bits",
            "noise_bits",
        ],
    );
    for r in &rows {
        table.float_row(r);
    }
    record.add_file(&write_atomic(out, "xor_mi.csv", &table.finish())?);
    let last = rows.last().unwrap();
    record.summary = json!({"mi_bits": last[1], "capacity_bits": last[2]});
    Ok(())
}

fn ier_optimize(
    config: &RunConfig,
    out: &Path,
    hash: &str,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let ctx = EfficiencyContext::new(config.xor_params());
    let result = ga_optimize(&ctx, &config.ga)?;

    let mut table = CsvTable::new(
        hash,
        &["per-generation best/mean information-energy ratio (bits/kT)"],
        &[
            "generation",
            "best_eta",
            "mean_eta",
            "best_vd_over_VT",
            "best_pa",
            "best_pb",
        ],
    );
    for t in &result.trace {
        table.row(&[
            CsvValue::Int(t.generation as i64),
            CsvValue::Float(t.best_eta),
            CsvValue::Float(t.mean_eta),
            CsvValue::Float(t.best_v_d_over_vt),
            CsvValue::Float(t.best_p_a),
            CsvValue::Float(t.best_p_b),
        ]);
    }
    record.add_file(&write_atomic(out, "ga_trace.csv", &table.finish())?);

    let best_json = serde_json::to_value(result.best)
        .map_err(|e| CliError::Io(format!("serialize: {e}")))?;
    let result_json = json!({
        "config_hash": hash,
        "best": best_json,
        "evaluations": result.evaluations,
        "generations": result.trace.len(),
    });
    record.add_file(&write_atomic(
        out,
        "ga_result.json",
        serde_json::to_string_pretty(&result_json)
            .map_err(|e| CliError::Io(e.to_string()))?
            .as_bytes(),
    )?);
    record.summary = json!({
        "best_eta_bits_per_kT": result.best.eta,
        "best_vd_over_VT": result.best.v_d_over_vt,
        "best_pa": result.best.p_a,
        "best_pb": result.best.p_b,
    });
    Ok(())
}

fn error_sweep(
    config: &RunConfig,
    out: &Path,
    hash: &str,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let vt = config.thermal_voltage();
    let beta = config.constants().beta();
    let sweep = config.sweep.clone().unwrap_or(Sweep {
        variable: "v_d_vt".into(),
        start: 3.0,
        stop: 6.0,
        points: 31,
    });
    let rows: Vec<[f64; 5]> = sweep
        .values()
        .par_iter()
        .map(|&vd_vt| -> Result<[f64; 5], CliError> {
            let v_d = vd_vt * vt;
            let err = error_probability_low_branch(v_d, config.c_g_farads, config.alpha, beta)?;
            let f = flip_probabilities(v_d, config.c_g_farads, config.alpha, beta)?;
            Ok([vd_vt, err, f.one_given_low, f.zero_given_high, f.empty_given_low])
        })
        .collect::<Result<_, _>>()?;
    let mut table = CsvTable::new(
        hash,
        &["misread statistics of the low branch vs supply"],
        &[
            "vd_over_VT",
            "error_prob",
            "one_given_low",
            "zero_given_high",
            "empty_given_low",
        ],
    );
    for r in &rows {
        table.float_row(r);
    }
    record.add_file(&write_atomic(out, "error_sweep.csv", &table.finish())?);
    record.summary = json!({
        "points": rows.len(),
        "first_error": rows.first().map(|r| r[1]),
        "last_error": rows.last().map(|r| r[1]),
    });
    Ok(())
}

fn parity_sweep(
    config: &RunConfig,
    out: &Path,
    hash: &str,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let vt = config.thermal_voltage();
    let ctx = EfficiencyContext::new(config.xor_params());
    let params = ParityParams {
        p_a: config.p_a,
        p_b: config.p_b,
        p_c: config.p_c,
    };
    let sweep = config.sweep.clone().unwrap_or(Sweep {
        variable: "v_d_vt".into(),
        start: 4.0,
        stop: 15.0,
        points: 23,
    });
    let rows: Vec<[f64; 4]> = sweep
        .values()
        .par_iter()
        .map(|&vd_vt| -> Result<[f64; 4], CliError> {
            let point = parity_efficiency(&ctx, vd_vt * vt, &params)?;
            Ok([vd_vt, point.mutual_information, point.energy_kt, point.eta])
        })
        .collect::<Result<_, _>>()?;
    let mut table = CsvTable::new(
        hash,
        &["two-stage parity circuit: information, energy, efficiency"],
        &["vd_over_VT", "mi_bits", "energy_kT", "eta"],
    );
    for r in &rows {
        table.float_row(r);
    }
    record.add_file(&write_atomic(out, "parity_efficiency.csv", &table.finish())?);

    let (_, _, lambda) = parity_transition_matrices(&params)?;
    record.summary = json!({
        "points": rows.len(),
        "lambda": lambda.to_vec(),
        "eta_first": rows.first().map(|r| r[3]),
        "eta_last": rows.last().map(|r| r[3]),
    });
    Ok(())
}

fn gillespie_validate(
    config: &RunConfig,
    out: &Path,
    hash: &str,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let base = config.xor_params();
    let netlist = XorNetlist::new(base)?;
    let burn_in = config.burn_in_gamma_units / config.gamma_per_second;
    let mut summaries = Vec::new();
    for (ab, name, expect) in [
        (InputPair::from_index(0), "branch0", 0.0),
        (InputPair::from_index(1), "branch1", config.v_d_volts),
    ] {
        let stats =
            netlist.xor_output_distribution(ab, config.n_samples, burn_in, config.seed, config.n_bins)?;
        let report = gaussianity_check(&stats, GaussianityThresholds::default());
        let mut block = Vec::new();
        stats
            .histogram
            .write_csv(&mut block)
            .map_err(|e| CliError::Io(e.to_string()))?;
        let mut table = CsvTable::new(hash, &[], &[]);
        table.raw(std::str::from_utf8(&block).unwrap());
        record.add_file(&write_atomic(
            out,
            &format!("histogram_{name}.csv"),
            &table.finish(),
        )?);
        summaries.push(json!({
            "input": ab.label(),
            "samples": stats.n,
            "mean_V": stats.mean,
            "expected_mean_V": expect,
            "variance_V2": stats.variance,
            "model_variance_V2": 1.0 / (base.constants.beta() * config.c_g_farads),
            "skewness": report.skewness,
            "excess_kurtosis": report.excess_kurtosis,
            "gaussianity_pass": report.pass,
        }));
    }

    // frozen-generator cross-check against the master equation
    let p = NandParams::with_supply(config.v_d_volts)
        .with_inputs(config.v_d_volts, config.v_d_volts);
    let sys = NandSystem::new(p)?;
    let gen = sys.generator(0.4 * p.v_d);
    let checkpoints = [
        0.3 / config.gamma_per_second,
        1.5 / config.gamma_per_second,
        8.0 / config.gamma_per_second,
    ];
    let n_traj = config.n_samples.max(1000);
    let marginals = frozen_marginals_at(
        &gen,
        GateState::from_index(0),
        &checkpoints,
        n_traj,
        config.seed,
    );
    let opts = PropagateOptions::default();
    let mut dist = DistributionVector::delta(GateState::from_index(0));
    let mut prev_t = 0.0;
    let mut table = CsvTable::new(
        hash,
        &["total-variation distance between sampled and propagated marginals"],
        &["checkpoint", "time_s", "tv_distance"],
    );
    let mut tvs = Vec::new();
    for (k, &cp) in checkpoints.iter().enumerate() {
        let (next, _) = propagate(
            &dist,
            0.4 * p.v_d,
            cp - prev_t,
            &MatrixProvider::Frozen(&gen),
            &opts,
        )?;
        dist = next;
        prev_t = cp;
        let tv: f64 = 0.5
            * (0..N_STATES)
                .map(|i| (marginals[k][i] - dist.probability(i)).abs())
                .sum::<f64>();
        table.row(&[
            CsvValue::Int(k as i64),
            CsvValue::Float(cp),
            CsvValue::Float(tv),
        ]);
        tvs.push(tv);
    }
    record.add_file(&write_atomic(out, "marginal_tv.csv", &table.finish())?);
    record.summary = json!({
        "branches": summaries,
        "marginal_tv": tvs,
        "trajectories": n_traj,
    });
    Ok(())
}
