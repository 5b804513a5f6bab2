//! Run metrics: Jain fairness, aggregate femtocell capacity and the
//! operational convergence criterion.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{IterationRecord, SimConfig, TraceSummary};

/// Jain's fairness index `(sum x)^2 / (n sum x^2)`, in `[1/n, 1]` for
/// nonnegative inputs. Equals 1 exactly when all values are equal; the
/// all-zero input is defined as 1 by convention (a degenerate run where
/// nobody got anything is perfectly "fair").
pub fn jain_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("jain index of an empty set".into()));
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if sum_sq == 0.0 {
        return Ok(1.0);
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

/// The default measurement window: the final 10% of iterations (at least
/// one), which falls entirely in the pure-exploitation tail under the
/// default exploration schedule.
pub fn default_window(len: usize) -> Range<usize> {
    let tail = (len / 10).max(1).min(len);
    len - tail..len
}

/// Mean over the window of the total femtocell capacity
/// `sum_i sum_n C_i^(n)` (bits/sec/Hz).
pub fn aggregate_femto_capacity(records: &[IterationRecord], window: Range<usize>) -> Result<f64> {
    if window.is_empty() || window.end > records.len() {
        return Err(Error::EmptyWindow);
    }
    let len = window.len() as f64;
    let sum: f64 = records[window]
        .iter()
        .map(|rec| rec.femto_capacity.iter().sum::<f64>())
        .sum();
    Ok(sum / len)
}

/// Per-femtocell capacity (summed over subcarriers) averaged over the
/// window; the input vector for the fairness index.
pub fn per_femto_window_capacity(
    records: &[IterationRecord],
    n_femto: usize,
    n_sub: usize,
    window: Range<usize>,
) -> Result<Vec<f64>> {
    if window.is_empty() || window.end > records.len() {
        return Err(Error::EmptyWindow);
    }
    let len = window.len() as f64;
    let mut acc = vec![0.0; n_femto];
    for rec in &records[window] {
        for (i, slot) in acc.iter_mut().enumerate() {
            *slot += rec.femto_capacity[i * n_sub..(i + 1) * n_sub]
                .iter()
                .sum::<f64>();
        }
    }
    for slot in &mut acc {
        *slot /= len;
    }
    Ok(acc)
}

/// Convergence diagnosis of the macro capacity toward its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// First iteration opening a `hold`-long run inside the band; equals
    /// the trace length when `converged` is false.
    pub iteration: usize,
    /// Mean |C_o - target| over the final 10% of iterations and all
    /// subcarriers.
    pub terminal_deviation: f64,
}

/// Default band half-width around the target (bits/sec/Hz).
pub const DEFAULT_CONVERGENCE_BAND: f64 = 0.5;
/// Default number of consecutive in-band iterations required.
pub const DEFAULT_CONVERGENCE_HOLD: usize = 100;

/// Finds the first iteration that starts `hold` consecutive iterations
/// with `|C_o^(n) - target| <= band` on every subcarrier.
pub fn convergence_metrics(
    records: &[IterationRecord],
    target: f64,
    band: f64,
    hold: usize,
) -> Result<ConvergenceReport> {
    if band <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "band {band} must be positive"
        )));
    }
    if hold == 0 {
        return Err(Error::InvalidParameter("hold must be at least 1".into()));
    }
    let in_band = |rec: &IterationRecord| {
        rec.macro_capacity
            .iter()
            .all(|c| (c - target).abs() <= band)
    };

    let mut run_start = None;
    let mut run_len = 0usize;
    let mut found = None;
    for (t, rec) in records.iter().enumerate() {
        if in_band(rec) {
            if run_len == 0 {
                run_start = Some(t);
            }
            run_len += 1;
            if run_len >= hold {
                found = run_start;
                break;
            }
        } else {
            run_len = 0;
            run_start = None;
        }
    }

    let window = default_window(records.len().max(1));
    let mut dev_sum = 0.0;
    let mut dev_count = 0usize;
    for rec in records.get(window).unwrap_or(&[]) {
        for c in &rec.macro_capacity {
            dev_sum += (c - target).abs();
            dev_count += 1;
        }
    }
    let terminal_deviation = if dev_count == 0 {
        f64::NAN
    } else {
        dev_sum / dev_count as f64
    };

    Ok(ConvergenceReport {
        converged: found.is_some(),
        iteration: found.unwrap_or(records.len()),
        terminal_deviation,
    })
}

/// Per-subcarrier mean |C_o - target| over the window.
pub fn per_subcarrier_deviation(
    records: &[IterationRecord],
    target: f64,
    window: Range<usize>,
) -> Result<Vec<f64>> {
    if window.is_empty() || window.end > records.len() {
        return Err(Error::EmptyWindow);
    }
    let slice = &records[window];
    let n_sub = slice[0].macro_capacity.len();
    let mut out = vec![0.0; n_sub];
    for rec in slice {
        for (s, c) in rec.macro_capacity.iter().enumerate() {
            out[s] += (c - target).abs();
        }
    }
    for v in &mut out {
        *v /= slice.len() as f64;
    }
    Ok(out)
}

/// End-of-run summary over the default window.
pub fn summarize(records: &[IterationRecord], cfg: &SimConfig) -> Result<TraceSummary> {
    let window = default_window(records.len());
    let aggregate = aggregate_femto_capacity(records, window.clone())?;
    let per_femto = per_femto_window_capacity(records, cfg.n_femto, cfg.n_sub, window)?;
    let jain = if cfg.n_femto == 0 {
        1.0
    } else {
        jain_index(&per_femto)?
    };
    let convergence = convergence_metrics(
        records,
        cfg.reward.target_capacity,
        DEFAULT_CONVERGENCE_BAND,
        DEFAULT_CONVERGENCE_HOLD,
    )?;
    Ok(TraceSummary {
        aggregate_femto_capacity: aggregate,
        jain_index: jain,
        convergence,
        shared_entries: records.last().map_or(0, |r| r.shared_entries),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::AgentStep;

    fn record(macro_caps: Vec<f64>, femto_caps: Vec<f64>) -> IterationRecord {
        let steps = vec![
            AgentStep {
                state: 0,
                action_dbm: -20.0,
                reward: 0.0
            };
            femto_caps.len()
        ];
        IterationRecord {
            macro_capacity: macro_caps,
            femto_capacity: femto_caps,
            steps,
            shared_entries: 0,
        }
    }

    #[test]
    fn jain_reference_values() {
        assert_eq!(jain_index(&[3.0, 3.0, 3.0, 3.0]).unwrap(), 1.0);
        assert_eq!(jain_index(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
        assert!((jain_index(&[2.0, 1.0]).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(jain_index(&[0.0, 0.0]).unwrap(), 1.0);
        assert!(jain_index(&[]).is_err());
    }

    #[test]
    fn jain_bounds_and_scale_invariance() {
        let values = [0.3, 1.8, 0.0, 2.6, 0.9];
        let f = jain_index(&values).unwrap();
        assert!(f >= 1.0 / values.len() as f64 && f <= 1.0);
        for c in [0.1, 2.0, 1e6] {
            let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
            assert!((jain_index(&scaled).unwrap() - f).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_capacity_reference_values() {
        // Two iterations with femto-capacity sums 4 and 6 average to 5.
        let records = vec![
            record(vec![6.0], vec![1.0, 3.0]),
            record(vec![6.0], vec![2.0, 4.0]),
        ];
        assert_eq!(aggregate_femto_capacity(&records, 0..2).unwrap(), 5.0);
        assert_eq!(aggregate_femto_capacity(&records, 1..2).unwrap(), 6.0);
        assert!(aggregate_femto_capacity(&records, 1..1).is_err());
        assert!(aggregate_femto_capacity(&records, 0..3).is_err());

        let silent = vec![record(vec![6.0], vec![0.0, 0.0]); 4];
        assert_eq!(aggregate_femto_capacity(&silent, 0..4).unwrap(), 0.0);
    }

    #[test]
    fn default_window_is_last_tenth() {
        assert_eq!(default_window(3000), 2700..3000);
        assert_eq!(default_window(10), 9..10);
        assert_eq!(default_window(1), 0..1);
    }

    #[test]
    fn convergence_on_constant_trace() {
        let records = vec![record(vec![6.0, 6.2], vec![1.0]); 200];
        let rep = convergence_metrics(&records, 6.0, 0.5, 100).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iteration, 0);
        assert!((rep.terminal_deviation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn convergence_never_entering_band() {
        let records = vec![record(vec![8.0], vec![1.0]); 200];
        let rep = convergence_metrics(&records, 6.0, 0.5, 100).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iteration, 200);
    }

    #[test]
    fn convergence_detects_late_entry() {
        // Out of band until iteration 1800, in band afterwards.
        let mut records = Vec::new();
        for t in 0..3000 {
            let c = if t < 1800 { 9.0 } else { 6.1 };
            records.push(record(vec![c], vec![0.5]));
        }
        let rep = convergence_metrics(&records, 6.0, 0.5, 100).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iteration, 1800);
    }

    #[test]
    fn convergence_requires_the_hold_on_every_subcarrier() {
        // Subcarrier 1 keeps breaking the band every 50 iterations.
        let mut records = Vec::new();
        for t in 0..500 {
            let c1 = if t % 50 == 49 { 7.0 } else { 6.0 };
            records.push(record(vec![6.0, c1], vec![0.5]));
        }
        let rep = convergence_metrics(&records, 6.0, 0.5, 100).unwrap();
        assert!(!rep.converged);
    }

    #[test]
    fn convergence_validates_arguments() {
        let records = vec![record(vec![6.0], vec![0.0]); 10];
        assert!(convergence_metrics(&records, 6.0, 0.0, 100).is_err());
        assert!(convergence_metrics(&records, 6.0, 0.5, 0).is_err());
    }

    #[test]
    fn per_femto_window_capacity_sums_subcarriers() {
        let records = vec![
            record(vec![6.0, 6.0], vec![1.0, 2.0, 3.0, 4.0]),
            record(vec![6.0, 6.0], vec![3.0, 2.0, 1.0, 0.0]),
        ];
        let caps = per_femto_window_capacity(&records, 2, 2, 0..2).unwrap();
        assert_eq!(caps, vec![4.0, 4.0]);
    }
}
