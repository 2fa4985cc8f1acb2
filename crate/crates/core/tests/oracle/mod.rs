//! Brute-force reference implementations used to cross-check the library.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use rand::Rng;

/// Random simple digraph: no loops, no duplicate edges, with a share of
/// edges reciprocated.
pub fn random_digraph(rng: &mut impl Rng, n: usize, mean_out: f64, recip: f64) -> Vec<(usize, usize)> {
    let m = (n as f64 * mean_out) as usize;
    let mut set = BTreeSet::new();
    for _ in 0..m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        set.insert((u, v));
        if rng.random_bool(recip) {
            set.insert((v, u));
        }
    }
    set.into_iter().collect()
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for &(u, v) in edges {
        if u != v {
            a[u][v] = true;
        }
    }
    a
}

pub fn reciprocity(n: usize, edges: &[(usize, usize)]) -> f64 {
    let a = adjacency(n, edges);
    let (mut total, mut mutual) = (0usize, 0usize);
    for u in 0..n {
        for v in 0..n {
            if a[u][v] {
                total += 1;
                mutual += usize::from(a[v][u]);
            }
        }
    }
    mutual as f64 / total as f64
}

/// Weak components by repeated label propagation, as sorted node lists in
/// sorted order.
pub fn weak_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for &(u, v) in edges {
            let m = label[u].min(label[v]);
            if label[u] != m || label[v] != m {
                label[u] = m;
                label[v] = m;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, l) in label.into_iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Clustering on mutual edges straight from the adjacency matrix.
pub fn mutual_clustering(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let a = adjacency(n, edges);
    let mutual = |u: usize, v: usize| a[u][v] && a[v][u];
    (0..n)
        .map(|u| {
            let nb: Vec<usize> = (0..n).filter(|&v| mutual(u, v)).collect();
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0;
            for i in 0..k {
                for j in i + 1..k {
                    links += usize::from(mutual(nb[i], nb[j]));
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

#[derive(Clone, Copy)]
pub enum Walk {
    Out,
    In,
    Both,
}

/// Bellman-Ford style relaxation of unit-weight distances, cut at `max_depth`.
pub fn hop_distances(n: usize, edges: &[(usize, usize)], source: usize, max_depth: usize, walk: Walk) -> Vec<Option<usize>> {
    let arcs: Vec<(usize, usize)> = match walk {
        Walk::Out => edges.to_vec(),
        Walk::In => edges.iter().map(|&(u, v)| (v, u)).collect(),
        Walk::Both => edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect(),
    };
    let mut d = vec![usize::MAX; n];
    d[source] = 0;
    loop {
        let mut changed = false;
        for &(u, v) in &arcs {
            if d[u] != usize::MAX && d[u] + 1 < d[v] {
                d[v] = d[u] + 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d.into_iter().map(|x| (x <= max_depth).then_some(x)).collect()
}

/// Pearson correlation over edge endpoints from raw moment sums.
pub fn edge_correlation(edges: &[(usize, usize)], attr: &[f64]) -> f64 {
    let uniq: HashSet<(usize, usize)> = edges.iter().copied().filter(|(u, v)| u != v).collect();
    let m = uniq.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, v) in &uniq {
        let (x, y) = (attr[u], attr[v]);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let cov = sxy / m - (sx / m) * (sy / m);
    let vx = sxx / m - (sx / m).powi(2);
    let vy = syy / m - (sy / m).powi(2);
    cov / (vx * vy).sqrt()
}

/// Intercept and slope from the 2x2 normal equations by Cramer's rule.
pub fn normal_equations(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    ((sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det)
}

/// Two-sample KS distance as the sup over every pooled value, counting
/// from scratch at each point.
pub fn ks_sup(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&t| (cdf(a, t) - cdf(b, t)).abs())
        .fold(0.0, f64::max)
}

/// One-sample KS distance against Uniform(0, 1).
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &p)| {
            let p = p.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - p).max(p - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Continuous power law on `[x_min, inf)` with density exponent `alpha`,
/// by inverse transform.
pub fn power_law_samples(rng: &mut impl Rng, n: usize, alpha: f64, x_min: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            x_min * (1.0 - u).powf(-1.0 / (alpha - 1.0))
        })
        .collect()
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    2.0 * precision * recall / (precision + recall)
}
