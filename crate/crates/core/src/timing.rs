//! How quickly abusive posts are reported and deleted.

use serde::{Deserialize, Serialize};

use crate::corpus::{EventCorpus, PostKind};
use crate::error::{Error, Result};
use crate::stats::{empirical_distribution, DistributionKind, EmpiricalDistribution};

pub const ONE_DAY_SECONDS: u64 = 86_400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletionDelaySummary {
    pub kind: PostKind,
    pub n: usize,
    /// Share of delays strictly below one day.
    pub within_one_day: f64,
    pub within_three_days: f64,
}

/// `(post timestamp, report time, deletion time)` of every valid flag on a
/// post of `kind`.
fn valid_flag_times(corpus: &EventCorpus, kind: PostKind) -> Vec<(u64, u64, u64)> {
    corpus
        .flags()
        .iter()
        .filter(|f| f.valid)
        .filter_map(|f| {
            let post = corpus.post(&f.target_post)?;
            (post.kind == kind).then_some(())?;
            Some((post.timestamp, f.report_time, f.deletion_time?))
        })
        .collect()
}

fn no_flags(kind: PostKind) -> Error {
    Error::InsufficientData(format!("no valid flags on {} posts", kind.as_str()))
}

/// Seconds from posting to deletion for every valid flag on `kind`.
pub fn deletion_delays(corpus: &EventCorpus, kind: PostKind) -> Vec<f64> {
    valid_flag_times(corpus, kind)
        .into_iter()
        .map(|(posted, _, deleted)| (deleted - posted) as f64)
        .collect()
}

pub fn deletion_delay_cdf(corpus: &EventCorpus, kind: PostKind) -> Result<EmpiricalDistribution> {
    let delays = deletion_delays(corpus, kind);
    if delays.is_empty() {
        return Err(no_flags(kind));
    }
    empirical_distribution(&delays, DistributionKind::Cdf)
}

pub fn deletion_delay_summary(corpus: &EventCorpus, kind: PostKind) -> Result<DeletionDelaySummary> {
    let delays = deletion_delays(corpus, kind);
    if delays.is_empty() {
        return Err(no_flags(kind));
    }
    let share = |limit: u64| delays.iter().filter(|d| **d < limit as f64).count() as f64 / delays.len() as f64;
    Ok(DeletionDelaySummary {
        kind,
        n: delays.len(),
        within_one_day: share(ONE_DAY_SECONDS),
        within_three_days: share(3 * ONE_DAY_SECONDS),
    })
}

/// Seconds from posting to each valid report on `kind`.
pub fn report_time_to_flag_cdf(corpus: &EventCorpus, kind: PostKind) -> Result<EmpiricalDistribution> {
    let delays: Vec<f64> = valid_flag_times(corpus, kind)
        .into_iter()
        .map(|(posted, reported, _)| (reported - posted) as f64)
        .collect();
    if delays.is_empty() {
        return Err(no_flags(kind));
    }
    empirical_distribution(&delays, DistributionKind::Cdf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::stats::quantile_sorted;

    fn corpus(flags: Vec<crate::corpus::FlagEvent>) -> EventCorpus {
        EventCorpus::new(
            vec![user("a", false), user("b", false), user("c", false)],
            vec![question("q", "a", 0), answer("x", "b", "q", 100)],
            flags,
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_deletion_jumps_at_delay() {
        let c = corpus(vec![flag("b", "a", "q", 10, Some(600))]);
        let d = deletion_delay_cdf(&c, PostKind::Question).unwrap();
        assert_eq!(d.cdf(599.0), 0.0);
        assert_eq!(d.cdf(600.0), 1.0);
        let s = deletion_delay_summary(&c, PostKind::Question).unwrap();
        assert_eq!((s.within_one_day, s.within_three_days), (1.0, 1.0));
    }

    #[test]
    fn invalid_flags_are_excluded() {
        let c = corpus(vec![flag("b", "a", "q", 10, None), flag("c", "a", "q", 20, Some(90_000))]);
        let s = deletion_delay_summary(&c, PostKind::Question).unwrap();
        assert_eq!(s.n, 1);
        assert_eq!(s.within_one_day, 0.0);
        assert!(deletion_delay_cdf(&c, PostKind::Answer).is_err());
    }

    #[test]
    fn report_delay_median() {
        let c = corpus(vec![flag("b", "a", "q", 300, Some(1000)), flag("c", "a", "q", 900, Some(1000))]);
        let d = report_time_to_flag_cdf(&c, PostKind::Question).unwrap();
        assert_eq!(quantile_sorted(d.values(), 0.5), 600.0);
        let c = corpus(vec![flag("a", "b", "x", 100, Some(100))]);
        assert_eq!(report_time_to_flag_cdf(&c, PostKind::Answer).unwrap().values(), &[0.0]);
    }
}
