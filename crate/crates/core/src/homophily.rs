//! Network position of answers, abuse reports and deviance: how interaction
//! probability decays with hop distance and whether deviance is assortative.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EventCorpus, FlagEvent, PostKind};
use crate::error::{Error, Result};
use crate::graph::{BfsWorkspace, DirectedGraph, Orientation};
use crate::stats::{geometric_mean_smoothed, pearson, variance, DEFAULT_EPSILON};

pub const DEFAULT_SAMPLE_SIZE: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub hop: usize,
    pub probability: f64,
    /// Sampled users with at least one follower at this hop.
    pub n_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub points: Vec<ProfilePoint>,
}

impl DistanceProfile {
    pub fn probabilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.probability).collect()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].probability < w[0].probability)
    }
}

/// Sorted uniform sample of at most `size` of `candidates`.
pub fn sample_nodes(candidates: &[usize], size: usize, seed: u64) -> Vec<usize> {
    if candidates.len() <= size {
        return candidates.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = index::sample(&mut rng, candidates.len(), size)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    out.sort_unstable();
    out
}

/// Per-user fraction of h-hop followers for which `event(u, follower)`
/// holds, for h in 1..=max_hop. `None` where u has no follower at h.
pub fn per_user_hop_fractions<F>(
    g: &DirectedGraph,
    sources: &[usize],
    max_hop: usize,
    event: F,
) -> Vec<Vec<Option<f64>>>
where
    F: Fn(usize, usize) -> bool + Sync,
{
    let n = g.node_count();
    sources
        .par_iter()
        .map_init(
            || BfsWorkspace::new(n),
            |ws, &u| {
                let d = ws.run(g, u, max_hop, Orientation::Reverse);
                (1..=max_hop)
                    .map(|h| {
                        let level = d.at_hop(h);
                        if level.is_empty() {
                            return None;
                        }
                        let hits = level.iter().filter(|&&v| event(u, v)).count();
                        Some(hits as f64 / level.len() as f64)
                    })
                    .collect()
            },
        )
        .collect()
}

fn aggregate(per_user: &[Vec<Option<f64>>], max_hop: usize) -> DistanceProfile {
    let points = (0..max_hop)
        .map(|h| {
            let vals: Vec<f64> = per_user.iter().filter_map(|row| row[h]).collect();
            ProfilePoint {
                hop: h + 1,
                probability: geometric_mean_smoothed(&vals, DEFAULT_EPSILON).min(1.0),
                n_users: vals.len(),
            }
        })
        .collect();
    DistanceProfile { points }
}

fn check_inputs(g: &DirectedGraph, corpus: &EventCorpus, max_hop: usize) -> Result<()> {
    if g.node_count() != corpus.users().len() {
        return Err(Error::LengthMismatch {
            left: g.node_count(),
            right: corpus.users().len(),
        });
    }
    if max_hop == 0 {
        return Err(Error::InvalidConfig {
            field: "max_hop",
            message: "must be at least 1".into(),
        });
    }
    Ok(())
}

/// Generic profile over a sample of `candidates`, where `related[u]` is the
/// sorted set of users that acted on u.
fn related_profile(
    g: &DirectedGraph,
    related: &[Vec<usize>],
    candidates: &[usize],
    max_hop: usize,
    sample_size: usize,
    seed: u64,
) -> DistanceProfile {
    let sources = sample_nodes(candidates, sample_size, seed);
    let per_user = per_user_hop_fractions(g, &sources, max_hop, |u, v| related[u].binary_search(&v).is_ok());
    aggregate(&per_user, max_hop)
}

fn sorted_sets(sets: &mut [Vec<usize>]) {
    for s in sets {
        s.sort_unstable();
        s.dedup();
    }
}

/// Probability that an h-hop follower of an asker answered at least one of
/// the asker's questions.
pub fn answer_distance_profile(
    ff: &DirectedGraph,
    corpus: &EventCorpus,
    max_hop: usize,
    sample_size: usize,
    seed: u64,
) -> Result<DistanceProfile> {
    check_inputs(ff, corpus, max_hop)?;
    let idx = |id| corpus.user_index(id).expect("validated corpus");
    let mut answerers = vec![Vec::new(); ff.node_count()];
    for p in corpus.posts().iter().filter(|p| p.kind == PostKind::Answer) {
        let parent = corpus
            .post(p.parent_question.as_ref().expect("validated answer"))
            .expect("validated parent");
        answerers[idx(&parent.author)].push(idx(&p.author));
    }
    sorted_sets(&mut answerers);
    let askers: Vec<usize> = (0..answerers.len()).filter(|&u| !answerers[u].is_empty()).collect();
    Ok(related_profile(ff, &answerers, &askers, max_hop, sample_size, seed))
}

/// Probability that an h-hop follower of a user filed a valid flag against
/// them. `g` may be the follow or the activity network.
pub fn flag_distance_profile(
    g: &DirectedGraph,
    corpus: &EventCorpus,
    max_hop: usize,
    sample_size: usize,
    seed: u64,
) -> Result<DistanceProfile> {
    check_inputs(g, corpus, max_hop)?;
    let idx = |id| corpus.user_index(id).expect("validated corpus");
    let mut flaggers = vec![Vec::new(); g.node_count()];
    for f in corpus.flags().iter().filter(|f| f.valid) {
        flaggers[idx(&f.reportee)].push(idx(&f.reporter));
    }
    sorted_sets(&mut flaggers);
    let flagged: Vec<usize> = (0..flaggers.len()).filter(|&u| !flaggers[u].is_empty()).collect();
    Ok(related_profile(g, &flaggers, &flagged, max_hop, sample_size, seed))
}

/// `delta = k * sigma` of the scores.
pub fn sigma_delta(scores: &[f64], k: f64) -> f64 {
    k * variance(scores).sqrt()
}

/// Probability that an h-hop follower has a score within `delta` of the
/// user's own score.
pub fn deviance_similarity_profile(
    ff: &DirectedGraph,
    scores: &[f64],
    delta: f64,
    max_hop: usize,
    sample_size: usize,
    seed: u64,
) -> Result<DistanceProfile> {
    if scores.len() != ff.node_count() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: ff.node_count(),
        });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig {
            field: "delta",
            message: format!("must be positive, got {delta}"),
        });
    }
    if max_hop == 0 {
        return Err(Error::InvalidConfig {
            field: "max_hop",
            message: "must be at least 1".into(),
        });
    }
    let all: Vec<usize> = (0..ff.node_count()).collect();
    let sources = sample_nodes(&all, sample_size, seed);
    let per_user = per_user_hop_fractions(ff, &sources, max_hop, |u, v| (scores[u] - scores[v]).abs() < delta);
    Ok(aggregate(&per_user, max_hop))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramVariant {
    Observed,
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDistanceHistogram {
    pub variant: HistogramVariant,
    /// Percentage of pairs at hop 1..=H (index 0 is hop 1).
    pub percentages: Vec<f64>,
    /// Percentage of pairs farther than H hops or disconnected.
    pub unreachable: f64,
    pub n_pairs: usize,
}

impl ReportDistanceHistogram {
    pub fn max_hop(&self) -> usize {
        self.percentages.len()
    }

    /// Percentage of pairs within `h` hops.
    pub fn mass_within(&self, h: usize) -> f64 {
        self.percentages.iter().take(h).sum()
    }

    pub fn total(&self) -> f64 {
        self.percentages.iter().sum::<f64>() + self.unreachable
    }
}

/// Bounded hop distance from each pair's first to second node, grouped by
/// source so each source is searched once.
pub fn pair_distances(
    g: &DirectedGraph,
    pairs: &[(usize, usize)],
    max_hop: usize,
    orientation: Orientation,
) -> Vec<Option<usize>> {
    let mut by_source: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &(s, _)) in pairs.iter().enumerate() {
        by_source.entry(s).or_default().push(i);
    }
    let groups: Vec<(usize, Vec<usize>)> = by_source.into_iter().collect();
    let n = g.node_count();
    let found: Vec<Vec<(usize, Option<usize>)>> = groups
        .par_iter()
        .map_init(
            || BfsWorkspace::new(n),
            |ws, (s, members)| {
                ws.run(g, *s, max_hop, orientation);
                members.iter().map(|&i| (i, ws.distance(pairs[i].1))).collect()
            },
        )
        .collect();
    let mut out = vec![None; pairs.len()];
    for (i, d) in found.into_iter().flatten() {
        out[i] = d;
    }
    out
}

fn histogram(variant: HistogramVariant, distances: &[Option<usize>], max_hop: usize) -> ReportDistanceHistogram {
    let n = distances.len();
    let mut counts = vec![0usize; max_hop];
    let mut unreachable = 0usize;
    for d in distances {
        match d {
            Some(h) if (1..=max_hop).contains(h) => counts[h - 1] += 1,
            _ => unreachable += 1,
        }
    }
    let pct = |c: usize| 100.0 * c as f64 / n as f64;
    ReportDistanceHistogram {
        variant,
        percentages: counts.into_iter().map(pct).collect(),
        unreachable: pct(unreachable),
        n_pairs: n,
    }
}

/// Distance from reporter to reportee for each flag (observed), or for as
/// many uniformly drawn distinct node pairs (null).
pub fn report_distance_histogram(
    g: &DirectedGraph,
    flags: &[FlagEvent],
    variant: HistogramVariant,
    max_hop: usize,
    orientation: Orientation,
    seed: u64,
) -> Result<ReportDistanceHistogram> {
    if flags.is_empty() {
        return Err(Error::EmptySample);
    }
    if max_hop == 0 {
        return Err(Error::InvalidConfig {
            field: "max_hop",
            message: "must be at least 1".into(),
        });
    }
    let n = g.node_count();
    if n < 2 {
        return Err(Error::InsufficientData("report distances need at least 2 nodes".into()));
    }
    let pairs: Vec<(usize, usize)> = match variant {
        HistogramVariant::Observed => flags
            .iter()
            .map(|f| {
                let r = g.index_of(&f.reporter).ok_or_else(|| Error::UnknownNode(f.reporter.to_string()))?;
                let t = g.index_of(&f.reportee).ok_or_else(|| Error::UnknownNode(f.reportee.to_string()))?;
                Ok((r, t))
            })
            .collect::<Result<_>>()?,
        HistogramVariant::Null => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..flags.len())
                .map(|_| {
                    let r = rng.random_range(0..n);
                    let mut t = rng.random_range(0..n - 1);
                    if t >= r {
                        t += 1;
                    }
                    (r, t)
                })
                .collect()
        }
    };
    let distances = pair_distances(g, &pairs, max_hop, orientation);
    Ok(histogram(variant, &distances, max_hop))
}

/// Pearson correlation of the attribute across the endpoints of every
/// directed edge.
pub fn attribute_assortativity(g: &DirectedGraph, attr: &[f64]) -> Result<f64> {
    if attr.len() != g.node_count() {
        return Err(Error::LengthMismatch {
            left: attr.len(),
            right: g.node_count(),
        });
    }
    if g.edge_count() == 0 {
        return Err(Error::InsufficientData("assortativity needs at least one edge".into()));
    }
    let (src, dst): (Vec<f64>, Vec<f64>) = g.edges().map(|(u, v)| (attr[u], attr[v])).unzip();
    pearson(&src, &dst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::corpus::{build_activity_network, build_ff_network, EventCorpus};
    use approx::assert_relative_eq;

    #[test]
    fn both_followers_answered() {
        // b, c follow a; both answer a's question; d follows b.
        let c = EventCorpus::new(
            vec![user("a", false), user("b", false), user("c", false), user("d", false)],
            vec![question("q", "a", 0), answer("x", "b", "q", 1), answer("y", "c", "q", 2)],
            vec![],
            vec![follow("b", "a"), follow("c", "a"), follow("d", "b")],
        )
        .unwrap();
        let ff = build_ff_network(&c);
        let p = answer_distance_profile(&ff, &c, 2, 100, 1).unwrap();
        assert_relative_eq!(p.points[0].probability, 1.0);
        assert_eq!(p.points[0].n_users, 1);
        assert!(p.points[1].probability < 1e-5);
    }

    #[test]
    fn one_flagger_of_four_followers() {
        let users = ["a", "b", "c", "d", "e"].iter().map(|u| user(u, false)).collect();
        let follows = ["b", "c", "d", "e"].iter().map(|f| follow(f, "a")).collect();
        let c = EventCorpus::new(users, vec![question("q", "a", 0)], vec![flag("b", "a", "q", 1, Some(2))], follows)
            .unwrap();
        let p = flag_distance_profile(&build_ff_network(&c), &c, 1, 100, 1).unwrap();
        assert_relative_eq!(p.points[0].probability, 0.25, epsilon = 1e-5);
    }

    #[test]
    fn no_flags_profile_is_epsilon() {
        let c = three_user();
        let mut c2 = EventCorpus::new(c.users().to_vec(), c.posts().to_vec(), vec![], c.follows().to_vec()).unwrap();
        let p = flag_distance_profile(&build_ff_network(&c2), &c2, 3, 10, 1).unwrap();
        assert!(p.points.iter().all(|x| x.probability == DEFAULT_EPSILON && x.n_users == 0));
        c2 = three_user();
        assert!(flag_distance_profile(&build_activity_network(&c2), &c2, 0, 10, 1).is_err());
    }

    #[test]
    fn direct_reports_are_one_hop() {
        let c = three_user();
        let g = DirectedGraph::new(c.sorted_user_ids().to_vec(), [(2, 1)]);
        let h = report_distance_histogram(&g, c.flags(), HistogramVariant::Observed, 3, Orientation::Forward, 0)
            .unwrap();
        assert_eq!(h.percentages, vec![100.0, 0.0, 0.0]);
        let empty = DirectedGraph::new(c.sorted_user_ids().to_vec(), []);
        let null = report_distance_histogram(&empty, c.flags(), HistogramVariant::Null, 3, Orientation::Forward, 9)
            .unwrap();
        assert_eq!(null.unreachable, 100.0);
        assert_relative_eq!(null.total(), 100.0);
    }

    #[test]
    fn assortativity_signs() {
        let attr = [1.0, 1.0, 5.0, 5.0];
        let same = DirectedGraph::from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)]);
        assert_relative_eq!(attribute_assortativity(&same, &attr).unwrap(), 1.0);
        let cross = DirectedGraph::from_edges(4, [(0, 2), (2, 0), (1, 3), (3, 1)]);
        assert!(attribute_assortativity(&cross, &attr).unwrap() < 0.0);
        let none = DirectedGraph::from_edges(4, []);
        assert!(attribute_assortativity(&none, &attr).is_err());
    }

    #[test]
    fn similarity_all_equal_and_tiny_delta() {
        let g = DirectedGraph::from_edges(4, [(1, 0), (2, 1), (3, 2)]);
        let p = deviance_similarity_profile(&g, &[0.5; 4], 0.1, 2, 10, 0).unwrap();
        assert!(p.points.iter().all(|x| x.probability == 1.0));
        let p = deviance_similarity_profile(&g, &[0.1, 0.2, 0.3, 0.4], 1e-9, 2, 10, 0).unwrap();
        assert!(p.points.iter().all(|x| x.probability < 1e-5));
        assert!(deviance_similarity_profile(&g, &[0.1; 4], 0.0, 2, 10, 0).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_sorted() {
        let c: Vec<usize> = (0..100).collect();
        let a = sample_nodes(&c, 10, 3);
        assert_eq!(a, sample_nodes(&c, 10, 3));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_nodes(&c, 200, 3), c);
    }
}
