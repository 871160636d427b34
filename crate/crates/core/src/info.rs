//! Readout channel of the XOR gate and its information measures.
//!
//! The settled output voltage is Gaussian around 0 or `V_d` (depending on
//! the parity of the inputs) with variance `kT / C_g`. Thresholding at
//! `alpha V_d` and `(1 - alpha) V_d` turns the voltage into the ternary
//! symbol set `{0, 1, empty}`; the conditional symbol masses are exact
//! Gaussian tails, evaluated through the complementary error function so
//! probabilities remain meaningful down to the underflow floor.


use crate::error::{Error, Result};
use crate::gate::{input_transition_matrix, InputPair};

const LN_2: f64 = core::f64::consts::LN_2;

/// Upper Gaussian tail `Q(z) = P(Z >= z)`, numerically stable on both
/// sides.
pub fn gaussian_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

/// `ln Q(z)`; switches to the asymptotic series once `erfc` underflows
/// territory, so log-probabilities stay finite for any tail argument.
pub fn ln_gaussian_tail(z: f64) -> f64 {
    if z < 8.0 {
        gaussian_tail(z).ln()
    } else {
        // Q(z) = phi(z)/z (1 - 1/z^2 + 3/z^4 - ...)
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - (z * (2.0 * core::f64::consts::PI).sqrt()).ln() + series.ln()
    }
}

fn check_channel_args(v_d: f64, c_g: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(v_d.is_finite() && c_g.is_finite() && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::NonFinite("channel argument"));
    }
    if c_g <= 0.0 || beta <= 0.0 {
        return Err(Error::InvalidParams("c_g and beta must be > 0".into()));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParams(format!(
            "alpha = {alpha} must lie in (0, 0.5)"
        )));
    }
    // readout noise: variance kT / C_g in V^2
    Ok((1.0 / (beta * c_g)).sqrt())
}

/// Exact misread and undecided-band masses of the two Gaussian branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipProbabilities {
    /// Readout noise sigma (V).
    pub sigma: f64,
    /// P(read 1 | mean 0).
    pub one_given_low: f64,
    /// P(undecided | mean 0).
    pub empty_given_low: f64,
    /// P(read 0 | mean V_d).
    pub zero_given_high: f64,
    /// P(undecided | mean V_d).
    pub empty_given_high: f64,
}

pub fn flip_probabilities(v_d: f64, c_g: f64, alpha: f64, beta: f64) -> Result<FlipProbabilities> {
    let sigma = check_channel_args(v_d, c_g, alpha, beta)?;
    let q = |x: f64| gaussian_tail(x / sigma);
    Ok(FlipProbabilities {
        sigma,
        one_given_low: q((1.0 - alpha) * v_d),
        empty_given_low: q(alpha * v_d) - q((1.0 - alpha) * v_d),
        zero_given_high: q((1.0 - alpha) * v_d),
        empty_given_high: q(alpha * v_d) - q((1.0 - alpha) * v_d),
    })
}

/// Misread probability of the low branch including the undecided band:
/// `P(readout != 0 | mean 0)`.
pub fn error_probability_low_branch(v_d: f64, c_g: f64, alpha: f64, beta: f64) -> Result<f64> {
    let sigma = check_channel_args(v_d, c_g, alpha, beta)?;
    Ok(gaussian_tail(alpha * v_d / sigma))
}

/// Printed closed-form tail estimates, kept verbatim for comparison with
/// the exact tails. Their normalization differs from the standard Gaussian
/// tail expansion (the exponents carry no factor 1/2), so only log-scale
/// agreement is meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTails {
    /// Verbatim "one minus small" form for the low branch.
    pub low_branch_value: f64,
    /// Small magnitude of the low-branch estimate and its log.
    pub low_small: f64,
    pub ln_low_small: f64,
    /// High-branch estimate (already the small magnitude) and its log.
    pub high_small: f64,
    pub ln_high_small: f64,
}

pub fn asymptotic_flip_probabilities(
    v_d: f64,
    c_g: f64,
    alpha: f64,
    beta: f64,
) -> Result<AsymptoticTails> {
    check_channel_args(v_d, c_g, alpha, beta)?;
    let bc = beta * c_g;
    let prefactor = 1.0 / (2.0 * (core::f64::consts::PI * bc).sqrt());
    let ln_low =
        -bc * (1.0 - alpha) * (1.0 - alpha) * v_d * v_d + (prefactor / ((1.0 - alpha) * v_d)).ln();
    let ln_high = -bc * alpha * alpha * v_d * v_d + (prefactor / (alpha * v_d)).ln();
    let low_small = ln_low.exp();
    let high_small = ln_high.exp();
    Ok(AsymptoticTails {
        low_branch_value: 1.0 - low_small,
        low_small,
        ln_low_small: ln_low,
        high_small,
        ln_high_small: ln_high,
    })
}

/// Log of the exact misread probabilities, finite at any tail argument.
pub fn ln_exact_tails(v_d: f64, c_g: f64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let sigma = check_channel_args(v_d, c_g, alpha, beta)?;
    Ok((
        ln_gaussian_tail((1.0 - alpha) * v_d / sigma),
        ln_gaussian_tail(alpha * v_d / sigma),
    ))
}

/// Conditional readout distribution `p(y | ab)`: rows in canonical input
/// order, columns `(0, 1, empty)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub rows: [[f64; 3]; 4],
}

impl ChannelMatrix {
    /// Channel that depends on the inputs only through their parity.
    pub fn from_class_rows(even_row: [f64; 3], odd_row: [f64; 3]) -> Self {
        ChannelMatrix {
            rows: [even_row, odd_row, odd_row, even_row],
        }
    }

    /// Binary symmetric readout with flip probability `p` and no undecided
    /// mass.
    pub fn binary_symmetric(p: f64) -> Self {
        Self::from_class_rows([1.0 - p, p, 0.0], [p, 1.0 - p, 0.0])
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let mut sum = 0.0;
            for &p in row {
                if !(0.0..=1.0 + 1e-12).contains(&p) {
                    return Err(Error::InvalidParams(format!(
                        "channel row {i} entry {p} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "channel row {i} sums to {sum}"
                )));
            }
        }
        Ok(())
    }

    pub fn row(&self, input: InputPair) -> &[f64; 3] {
        &self.rows[input.index()]
    }

    /// CSV export, rows labeled by input symbol.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "input,y0,y1,yE")?;
        for (i, row) in self.rows.iter().enumerate() {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e}",
                InputPair::from_index(i).label(),
                row[0],
                row[1],
                row[2]
            )?;
        }
        Ok(())
    }
}

/// Ternary readout channel of the Gaussian output model.
pub fn channel_from_gaussian(v_d: f64, c_g: f64, alpha: f64, beta: f64) -> Result<ChannelMatrix> {
    let sigma = check_channel_args(v_d, c_g, alpha, beta)?;
    let row_for_mean = |mean: f64| {
        let p_zero = gaussian_tail((mean - alpha * v_d) / sigma);
        let p_one = gaussian_tail(((1.0 - alpha) * v_d - mean) / sigma);
        let p_empty = (1.0 - p_zero - p_one).max(0.0);
        [p_zero, p_one, p_empty]
    };
    let channel = ChannelMatrix::from_class_rows(row_for_mean(0.0), row_for_mean(v_d));
    channel.validate()?;
    Ok(channel)
}

/// Distribution over the four joint input symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution(pub [f64; 4]);

impl InputDistribution {
    pub fn uniform() -> Self {
        InputDistribution([0.25; 4])
    }

    /// Factorized inputs with `P(a = 0) = p_a`, `P(b = 0) = p_b`.
    pub fn from_marginals(p_a: f64, p_b: f64) -> Result<Self> {
        let t = input_transition_matrix(p_a, p_b)?;
        Ok(InputDistribution(t.symbol_marginal()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for &p in &self.0 {
            if !(0.0..=1.0 + 1e-12).contains(&p) {
                return Err(Error::InvalidParams(format!(
                    "input probability {p} outside [0, 1]"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("inputs sum to {sum}")));
        }
        Ok(())
    }
}

#[inline]
fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Shannon entropy (bits) with the 0 log 0 = 0 convention.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().copied().map(xlog2x).sum::<f64>()
}

/// Output-symbol marginal under the given inputs.
pub fn output_marginal(channel: &ChannelMatrix, inputs: &InputDistribution) -> [f64; 3] {
    let mut q = [0.0; 3];
    for (x, row) in channel.rows.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            q[y] += inputs.0[x] * p;
        }
    }
    q
}

/// Mutual information (bits) by the direct double sum over inputs and
/// ternary outputs.
pub fn mutual_information(channel: &ChannelMatrix, inputs: &InputDistribution) -> f64 {
    let q = output_marginal(channel, inputs);
    let mut bits = 0.0;
    for (x, row) in channel.rows.iter().enumerate() {
        let px = inputs.0[x];
        if px <= 0.0 {
            continue;
        }
        for (y, &pyx) in row.iter().enumerate() {
            if pyx > 0.0 && q[y] > 0.0 {
                bits += px * pyx * (pyx / q[y]).log2();
            }
        }
    }
    bits
}

/// Mutual information (bits) through the two-class regrouping: the channel
/// sees the inputs only through their parity, so the sum collapses onto the
/// class masses read off the transition-matrix columns.
pub fn mutual_information_reduced(channel: &ChannelMatrix, p_a: f64, p_b: f64) -> Result<f64> {
    let transitions = input_transition_matrix(p_a, p_b)?;
    // class masses as column-mass sums of the joint transition matrix
    let w_even = transitions.column_mass(0) + transitions.column_mass(3);
    let w_odd = transitions.column_mass(1) + transitions.column_mass(2);

    // class-conditional rows (input-mass weighted within each class)
    let marginal = transitions.symbol_marginal();
    let mut row_even = [0.0; 3];
    let mut row_odd = [0.0; 3];
    for y in 0..3 {
        if w_even > 0.0 {
            row_even[y] = (marginal[0] * channel.rows[0][y] + marginal[3] * channel.rows[3][y])
                / w_even;
        }
        if w_odd > 0.0 {
            row_odd[y] =
                (marginal[1] * channel.rows[1][y] + marginal[2] * channel.rows[2][y]) / w_odd;
        }
    }

    let mut q = [0.0; 3];
    for y in 0..3 {
        q[y] = w_even * row_even[y] + w_odd * row_odd[y];
    }
    let mut bits = 0.0;
    for (w, row) in [(w_even, row_even), (w_odd, row_odd)] {
        if w <= 0.0 {
            continue;
        }
        for y in 0..3 {
            if row[y] > 0.0 && q[y] > 0.0 {
                bits += w * row[y] * (row[y] / q[y]).log2();
            }
        }
    }
    Ok(bits)
}

/// Entropy bookkeeping of one use of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDecomposition {
    /// Input entropy (bits).
    pub input_bits: f64,
    /// Output entropy (bits).
    pub output_bits: f64,
    /// Conditional output entropy given the input (bits).
    pub noise_bits: f64,
    /// `output_bits - noise_bits` (bits).
    pub information_bits: f64,
}

pub fn noise_decomposition(
    channel: &ChannelMatrix,
    inputs: &InputDistribution,
) -> NoiseDecomposition {
    let input_bits = entropy_bits(&inputs.0);
    let output_bits = entropy_bits(&output_marginal(channel, inputs));
    let noise_bits: f64 = channel
        .rows
        .iter()
        .zip(inputs.0.iter())
        .map(|(row, &px)| px * entropy_bits(row))
        .sum();
    NoiseDecomposition {
        input_bits,
        output_bits,
        noise_bits,
        information_bits: output_bits - noise_bits,
    }
}

/// Best factorized input found for comparison with the unconstrained
/// capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizedOptimum {
    pub p_a: f64,
    pub p_b: f64,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub bits: f64,
    pub input: InputDistribution,
    pub iterations: usize,
    pub factorized: FactorizedOptimum,
}

/// Channel capacity by alternating maximization over the full input
/// simplex, to relative tolerance 1e-9, plus a grid-and-refine search over
/// factorized inputs.
pub fn capacity(channel: &ChannelMatrix) -> Result<CapacityResult> {
    channel.validate()?;
    let mut r = [0.25f64; 4];
    let max_iter = 200_000;
    let mut best_bits = 0.0;
    let mut converged_at = None;
    for iter in 0..max_iter {
        let mut q = [0.0f64; 3];
        for (x, row) in channel.rows.iter().enumerate() {
            for y in 0..3 {
                q[y] += r[x] * row[y];
            }
        }
        // per-input divergences in nats
        let mut d = [0.0f64; 4];
        for (x, row) in channel.rows.iter().enumerate() {
            for y in 0..3 {
                if row[y] > 0.0 && q[y] > 0.0 {
                    d[x] += row[y] * (row[y] / q[y]).ln();
                }
            }
        }
        let lower: f64 = r.iter().zip(d.iter()).map(|(a, b)| a * b).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best_bits = lower / LN_2;
        if upper - lower <= 1e-12 + 1e-9 * upper.abs() {
            converged_at = Some(iter + 1);
            break;
        }
        let mut z = 0.0;
        for x in 0..4 {
            r[x] *= (d[x] - upper).exp();
            z += r[x];
        }
        for x in r.iter_mut() {
            *x /= z;
        }
    }
    let iterations = match converged_at {
        Some(n) => n,
        None => {
            return Err(Error::CapacityNotConverged {
                iterations: max_iter,
                best_bits,
            })
        }
    };

    // factorized comparison: coarse grid, then coordinate refinement
    let mi = |pa: f64, pb: f64| {
        mutual_information(
            channel,
            &InputDistribution::from_marginals(pa, pb).expect("probabilities in range"),
        )
    };
    let mut best = FactorizedOptimum {
        p_a: 0.5,
        p_b: 0.5,
        bits: mi(0.5, 0.5),
    };
    let n_grid = 40;
    for i in 0..=n_grid {
        for j in 0..=n_grid {
            let (pa, pb) = (i as f64 / n_grid as f64, j as f64 / n_grid as f64);
            let bits = mi(pa, pb);
            if bits > best.bits {
                best = FactorizedOptimum { p_a: pa, p_b: pb, bits };
            }
        }
    }
    for _ in 0..4 {
        best.p_a = golden_max(|x| mi(x, best.p_b), (best.p_a - 0.05).max(0.0), (best.p_a + 0.05).min(1.0));
        best.p_b = golden_max(|x| mi(best.p_a, x), (best.p_b - 0.05).max(0.0), (best.p_b + 0.05).min(1.0));
    }
    best.bits = mi(best.p_a, best.p_b);

    Ok(CapacityResult {
        bits: best_bits,
        input: InputDistribution(r),
        iterations,
        factorized: best,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}

/// Fit the readout capacitance so the low-branch misread probability at
/// supply `v_d` equals `target_error`. Monotone in `c_g`, solved by
/// bisection on a log grid.
pub fn fit_noise_capacitance(target_error: f64, v_d: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(target_error > 0.0 && target_error < 0.5) {
        return Err(Error::InvalidParams(format!(
            "target error {target_error} must lie in (0, 0.5)"
        )));
    }
    let mut lo = 1e-22f64.ln();
    let mut hi = 1e-12f64.ln();
    // error decreases as c_g grows (noise shrinks)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let err = error_probability_low_branch(v_d, mid.exp(), alpha, beta)?;
        if err > target_error {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
