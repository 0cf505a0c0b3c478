//! Monte Carlo error machinery for serially correlated sample series.
//!
//! The chain samples are correlated cycle to cycle, so naive `var/n`
//! error bars are too tight. The effective sample size follows Geyer's
//! initial positive sequence rule: autocorrelations are summed in
//! consecutive lag pairs for as long as the pair sums stay positive.
//! Anti-correlated series can yield an effective length larger than the
//! sample count; the clamp below allows up to 1.5x.

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 10;
const ESS_INFLATION_CAP: f64 = 1.5;

/// Biased (1/n) sample variance.
pub fn sample_variance(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    series.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Autocovariance at `lag`, normalized by the full length.
pub fn autocovariance(series: &[f64], lag: usize) -> f64 {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0;
    for t in 0..(n - lag) {
        acc += (series[t] - mean) * (series[t + lag] - mean);
    }
    acc / n as f64
}

/// Geyer effective sample size.
///
/// ESS = n / tau with tau = 2 * sum of initial positive pair sums
/// Gamma_m = rho_{2m} + rho_{2m+1} minus 1. Degenerate (zero-variance)
/// series report their own length.
pub fn effective_length(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < MIN_SAMPLES {
        return Err(Error::NotEnoughSamples {
            needed: MIN_SAMPLES,
            have: n,
        });
    }
    let c0 = sample_variance(series);
    if c0 == 0.0 {
        return Ok(n as f64);
    }
    let mut tau = 0.0;
    let mut m = 0usize;
    loop {
        let lag_a = 2 * m;
        let lag_b = 2 * m + 1;
        if lag_b >= n {
            break;
        }
        let rho_a = if lag_a == 0 {
            1.0
        } else {
            autocovariance(series, lag_a) / c0
        };
        let rho_b = autocovariance(series, lag_b) / c0;
        let gamma = rho_a + rho_b;
        if gamma <= 0.0 {
            break;
        }
        tau += 2.0 * gamma;
        m += 1;
    }
    tau -= 1.0;
    // Anti-correlation can push tau below 1; cap the inflation at 1.5x.
    let tau = tau.max(1.0 / ESS_INFLATION_CAP);
    Ok(n as f64 / tau)
}

/// Monte Carlo standard error: sqrt(sample variance / effective length).
pub fn mc_std_error(series: &[f64]) -> Result<f64> {
    let var = sample_variance(series);
    if var == 0.0 {
        return Ok(0.0);
    }
    let eff = effective_length(series)?;
    Ok((var / eff).sqrt())
}

/// Error bar for a complex series: real and imaginary parts are treated
/// as separate correlated series and combined root-sum-square. Returns
/// `(std_error, effective_length, variance)` with the effective length
/// reported as the smaller of the two parts and the variance as their sum.
pub fn mc_std_error_complex(re: &[f64], im: &[f64]) -> Result<(f64, f64, f64)> {
    let var_re = sample_variance(re);
    let var_im = sample_variance(im);
    let eff_re = if var_re == 0.0 {
        re.len() as f64
    } else {
        effective_length(re)?
    };
    let eff_im = if var_im == 0.0 {
        im.len() as f64
    } else {
        effective_length(im)?
    };
    let err = (var_re / eff_re + var_im / eff_im).sqrt();
    Ok((err, eff_re.min(eff_im), var_re + var_im))
}

/// Sample standard deviation of per-replicate estimates.
pub fn empirical_std_error(replicates: &[f64]) -> Result<f64> {
    let n = replicates.len();
    if n < 2 {
        return Err(Error::NotEnoughSamples { needed: 2, have: n });
    }
    let mean = replicates.iter().sum::<f64>() / n as f64;
    let ss: f64 = replicates.iter().map(|&x| (x - mean) * (x - mean)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}
