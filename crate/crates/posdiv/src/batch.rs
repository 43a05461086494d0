//! Analysis of single fields and of discriminant ranges.

use std::time::Instant;

use rayon::prelude::*;

use posdiv_core::fields::{is_fundamental_discriminant, quadratic_field, FieldData};
use posdiv_core::pipeline::{analyze, verify_invariants, AnalysisOptions};

use crate::filter::Filter;
use crate::report::{AnalysisReport, RunError};

/// Fields analysed per parallel round; output is flushed after each round.
const ROUND: usize = 64;

/// Analyse one field. With `verify`, the field data and the per-element
/// identities are checked first.
pub fn run_field(f: &FieldData, options: &AnalysisOptions, verify: bool, timed: bool) -> Result<AnalysisReport, RunError> {
    let start = Instant::now();
    if verify {
        f.verify()?;
        verify_invariants(f, options.policy.initial)?;
    }
    let a = analyze(f, options)?;
    let ms = timed.then(|| start.elapsed().as_secs_f64() * 1e3);
    Ok(AnalysisReport::from_analysis(&a, ms))
}

pub fn run_discriminant(d: i64, options: &AnalysisOptions, verify: bool, timed: bool) -> AnalysisReport {
    let result = quadratic_field(d).map_err(RunError::from).and_then(|f| run_field(&f, options, verify, timed));
    result.unwrap_or_else(|e| AnalysisReport::from_error(d.to_string(), &e))
}

/// Fundamental discriminants in `lo..=hi`, ascending.
pub fn discriminants(lo: i64, hi: i64) -> Vec<i64> {
    (lo..=hi).filter(|&d| is_fundamental_discriminant(d)).collect()
}

/// Analyse every fundamental discriminant in `lo..=hi` on `jobs` threads,
/// handing reports to `sink` in ascending order of discriminant.
pub fn run_batch(
    lo: i64,
    hi: i64,
    filter: Option<&Filter>,
    jobs: usize,
    options: &AnalysisOptions,
    mut sink: impl FnMut(&AnalysisReport),
) -> Result<(), rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let ds = discriminants(lo, hi);
    for chunk in ds.chunks(ROUND) {
        let reports: Vec<AnalysisReport> = pool.install(|| chunk.par_iter().map(|&d| run_discriminant(d, options, false, false)).collect());
        for r in reports.iter().filter(|r| filter.map_or(true, |f| f.matches(r))) {
            sink(r);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_range() {
        assert_eq!(discriminants(-10, 10), [-8, -7, -4, -3, 5, 8]);
        assert!(discriminants(2, 3).is_empty());
    }

    #[test]
    fn job_count_does_not_change_output() {
        let opts = AnalysisOptions::default();
        let collect = |jobs| {
            let mut v = Vec::new();
            run_batch(-120, -60, None, jobs, &opts, |r| v.push(r.clone())).unwrap();
            v
        };
        assert_eq!(collect(1), collect(4));
    }
}
