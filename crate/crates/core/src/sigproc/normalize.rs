use crate::error::{Error, Result};
use crate::signal::Signal;

/// Subtracts the least-squares line through the samples.
pub fn detrend(signal: &Signal) -> Result<Signal> {
    let x = signal.values();
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("detrend needs at least two samples"));
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let x_mean = x.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (v - x_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    signal.with_values(
        x.iter()
            .enumerate()
            .map(|(i, v)| v - x_mean - slope * (i as f64 - t_mean))
            .collect(),
    )
}

/// Zero mean and unit population standard deviation.
pub fn znormalize(signal: &Signal) -> Result<Signal> {
    let x = signal.values();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let std = (centered.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if std <= f64::EPSILON * scale {
        return Err(Error::invalid("znormalize: signal has zero variance"));
    }
    // a second centring pass removes the rounding left by the first
    let scaled: Vec<f64> = centered.iter().map(|v| v / std).collect();
    let m2 = scaled.iter().sum::<f64>() / n;
    signal.with_values(scaled.iter().map(|v| v - m2).collect())
}
