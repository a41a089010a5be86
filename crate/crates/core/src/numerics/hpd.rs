use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 20;

/// Highest posterior density interval from posterior samples.
///
/// Sorts the samples and scans every window `[s_i, s_{i+k}]` with
/// `k = ⌈level·m⌉` (capped at `m - 1`), returning the narrowest; the leftmost
/// window wins ties.
pub fn hpd_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("HPD level must lie in (0, 1), got {level}")));
    }
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "HPD needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("HPD samples must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let k = ((level * m as f64).ceil() as usize).min(m - 1);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for i in 0..m - k {
        let width = sorted[i + k] - sorted[i];
        if width < best_width {
            best_width = width;
            best = i;
        }
    }
    Ok((sorted[best], sorted[best + k]))
}
