use serde::Serialize;

use crate::scalar::Real;

use super::{EngineError, Trajectory};

/// Shape of a single emission pulse; times in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PulseMetrics {
    pub peak: f64,
    /// Time of the maximum, i.e. the delay.
    pub peak_time: f64,
    pub fwhm: f64,
    /// Time from the peak until the signal falls to half maximum.
    pub decay_time: f64,
    /// Time from the half-maximum crossing before the peak to the peak.
    pub rise_time: f64,
}

/// Metrics of component `i`, refined on the continuous extension when
/// the trajectory stores one for that component.
pub fn pulse_metrics<T: Real>(tr: &Trajectory<T>, i: usize) -> Result<PulseMetrics, EngineError> {
    let times: Vec<f64> = tr.times.iter().map(|t| t.to_f64()).collect();
    let values: Vec<f64> = tr.states.iter().map(|y| y[i].to_f64()).collect();
    pulse_metrics_of(&times, &values, |t| tr.value_at(i, T::c(t)).to_f64())
}

/// Metrics of a sampled signal with continuous interpolant `f`.
pub fn pulse_metrics_of(times: &[f64], values: &[f64], f: impl Fn(f64) -> f64) -> Result<PulseMetrics, EngineError> {
    let n = values.len();
    if n < 3 || times.len() != n {
        return Err(EngineError::NoPulse);
    }
    let k = values
        .iter()
        .enumerate()
        .fold(0, |best, (j, &v)| if v > values[best] { j } else { best });
    if k == 0 || k == n - 1 {
        return Err(EngineError::NoPulse);
    }
    let (peak_time, peak) = golden_max(&f, times[k - 1], times[k + 1]);
    let (peak_time, peak) = if peak >= values[k] { (peak_time, peak) } else { (times[k], values[k]) };
    let half = 0.5 * peak;
    let after = (k..n).find(|&j| values[j] < half).ok_or(EngineError::IncompletePulse)?;
    let t_fall = bisect(&f, half, times[after - 1], times[after]);
    let t_rise = match (0..=k).rev().find(|&j| values[j] < half) {
        Some(j) => bisect(&f, half, times[j], times[j + 1]),
        None => times[0],
    };
    Ok(PulseMetrics {
        peak,
        peak_time,
        fwhm: t_fall - t_rise,
        decay_time: t_fall - peak_time,
        rise_time: peak_time - t_rise,
    })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Root of `f(t) = level` in `[a, b]`, assuming a sign change.
fn bisect(f: &impl Fn(f64) -> f64, level: f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a) - level;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) - level).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Interior local maxima whose prominence over the lower of the two
/// neighbouring minima exceeds `prominence`.
pub fn count_local_maxima(values: &[f64], prominence: f64) -> usize {
    let mut count = 0;
    let mut last_min = match values.first() {
        Some(v) => *v,
        None => return 0,
    };
    let mut candidate: Option<f64> = None;
    for w in values.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        if b > a && b >= c {
            candidate = Some(candidate.map_or(b, |m: f64| m.max(b)));
        }
        if b < a && b <= c {
            if let Some(m) = candidate {
                if m - last_min.max(b) > prominence {
                    count += 1;
                    candidate = None;
                    last_min = b;
                    continue;
                }
            }
            if candidate.is_none() {
                last_min = last_min.min(b);
            }
        }
    }
    if let (Some(m), Some(&end)) = (candidate, values.last()) {
        if m - last_min.max(end) > prominence {
            count += 1;
        }
    }
    count
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// positive points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_pulse() {
        let times: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
        let f = |t: f64| (-(t - 5.0f64).powi(2)).exp();
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let m = pulse_metrics_of(&times, &values, f).unwrap();
        assert!((m.peak - 1.0).abs() < 1e-12);
        assert!((m.peak_time - 5.0).abs() < 1e-6);
        assert!((m.fwhm - 2.0 * 2f64.ln().sqrt()).abs() < 1e-10);
        assert!((m.decay_time - 2f64.ln().sqrt()).abs() < 1e-6);
    }

    #[test]
    fn monotone_signal_has_no_pulse() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let values = times.clone();
        assert_eq!(pulse_metrics_of(&times, &values, |t| t), Err(EngineError::NoPulse));
    }

    #[test]
    fn unfinished_pulse() {
        let times: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64).collect();
        let f = |t: f64| (-(t - 4.5f64).powi(2)).exp();
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        assert_eq!(pulse_metrics_of(&times, &values, f), Err(EngineError::IncompletePulse));
    }

    #[test]
    fn damped_oscillation_maxima() {
        let v: Vec<f64> = (0..2000).map(|k| {
            let t = k as f64 * 0.01;
            (-0.2 * t).exp() * t.cos().powi(2)
        }).collect();
        assert_eq!(count_local_maxima(&v, 1e-3), 6);
        assert_eq!(count_local_maxima(&v, 0.5), 1);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 1.5).abs() < 1e-12);
    }
}
