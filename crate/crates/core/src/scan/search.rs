//! Maximization of a scan statistic over a subset family.

use std::cmp::Ordering;

use super::{
    normalizer, stat_known_from_counts, stat_unknown_from_counts, ScanConfig, ScanOutcome,
    ScanSearch, SizeTrace, SubsetFamily,
};
use crate::combinations::for_each_combination;
use crate::entropy::surplus;
use crate::error::{Error, Result};
use crate::graph::{edges_within_unchecked, EdgeProbabilityModel, GraphSample};

enum Kind<'a> {
    Known(&'a EdgeProbabilityModel),
    Unknown,
}

pub(super) struct Evaluator<'a> {
    g: &'a GraphSample,
    kind: Kind<'a>,
}

impl<'a> Evaluator<'a> {
    pub(super) fn known(model: &'a EdgeProbabilityModel, g: &'a GraphSample) -> Self {
        Self {
            g,
            kind: Kind::Known(model),
        }
    }

    pub(super) fn unknown(g: &'a GraphSample) -> Self {
        Self {
            g,
            kind: Kind::Unknown,
        }
    }

    fn n(&self) -> usize {
        self.g.n()
    }

    fn stat(&self, set: &[usize], within: u64) -> f64 {
        let n = self.n();
        match self.kind {
            Kind::Known(model) => {
                stat_known_from_counts(model.expected_edges_unchecked(set), within, n, set.len())
            }
            Kind::Unknown => {
                let degree_sum = set.iter().map(|&v| self.g.adjacency.degree(v) as u64).sum();
                stat_unknown_from_counts(self.g.total_edges(), degree_sum, within, n, set.len())
            }
        }
    }

    /// Lower bound on the normalizing expectation over all `k`-sets. The
    /// statistic is decreasing in that expectation for fixed `e(D)`.
    fn expectation_lower_bound(&self, k: usize) -> f64 {
        match self.kind {
            Kind::Known(model) => model.expected_edges_lower_bound(k),
            Kind::Unknown => super::estimator_floor(k, self.n()),
        }
    }
}

/// Best subset found so far under the order (statistic desc, size asc,
/// lexicographic asc).
struct Best {
    stat: f64,
    set: Vec<usize>,
}

impl Best {
    fn offer(&mut self, stat: f64, set: &[usize]) -> bool {
        let better = match stat.total_cmp(&self.stat) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => (set.len(), set) < (self.set.len(), self.set.as_slice()),
        };
        if better {
            self.stat = stat;
            self.set.clear();
            self.set.extend_from_slice(set);
        }
        better
    }
}

pub(super) fn run(eval: &Evaluator<'_>, cfg: &ScanConfig, threshold: f64) -> Result<ScanOutcome> {
    let n = eval.n();
    let mut warnings = Vec::new();
    if 2 * cfg.r >= n {
        warnings.push(format!(
            "r = {} >= n/2: the ln(n/|D|) normalization is small and the scan is outside its intended regime",
            cfg.r
        ));
    }
    let (best, trace, evaluated, exact) = match (&cfg.family, cfg.search) {
        (SubsetFamily::Exhaustive { min_size, max_size }, ScanSearch::Enumerate) => {
            let count = cfg.family.count(n);
            if count > cfg.budget as f64 {
                return Err(Error::budget(
                    format!("exhaustive scan over {}", cfg.family),
                    count,
                    cfg.budget,
                ));
            }
            let (best, trace, evaluated) = enumerate(eval, *min_size, *max_size);
            (best, trace, evaluated, true)
        }
        (SubsetFamily::Exhaustive { min_size, max_size }, ScanSearch::Certified) => {
            certified(eval, *min_size, *max_size, threshold, cfg.budget)?
        }
        (
            SubsetFamily::WeightPrefix {
                ordered,
                min_size,
                max_size,
            },
            _,
        ) => {
            let sets = (*min_size..=*max_size)
                .map(|k| crate::graph::vertex_set(ordered[..k].iter().copied()));
            let (best, trace, evaluated) = listed(eval, sets);
            (best, trace, evaluated, true)
        }
        (SubsetFamily::Explicit { sets }, _) => {
            let (best, trace, evaluated) = listed(eval, sets.iter().cloned());
            (best, trace, evaluated, true)
        }
    };
    Ok(ScanOutcome {
        statistic: best.stat,
        subset: best.set,
        threshold,
        reject: best.stat >= threshold,
        family: cfg.family.to_string(),
        epsilon: cfg.epsilon,
        r: cfg.r,
        trace,
        certified_exact: exact,
        evaluated,
        warnings,
    })
}

fn enumerate(eval: &Evaluator<'_>, min: usize, max: usize) -> (Best, Vec<SizeTrace>, u64) {
    let adj = &eval.g.adjacency;
    let mut best = Best {
        stat: f64::NEG_INFINITY,
        set: Vec::new(),
    };
    let mut trace = Vec::new();
    let mut evaluated = 0u64;
    for k in min..=max {
        let mut size_best = f64::NEG_INFINITY;
        for_each_combination(eval.n(), k, |set| {
            let stat = eval.stat(set, edges_within_unchecked(adj, set));
            evaluated += 1;
            size_best = size_best.max(stat);
            // Sizes and sets arrive in increasing order, so only a strictly
            // larger value can displace the incumbent.
            if stat > best.stat {
                best.stat = stat;
                best.set.clear();
                best.set.extend_from_slice(set);
            }
        });
        trace.push(SizeTrace {
            size: k,
            statistic: size_best,
            exact: true,
        });
    }
    (best, trace, evaluated)
}

fn listed(
    eval: &Evaluator<'_>,
    sets: impl Iterator<Item = Vec<usize>>,
) -> (Best, Vec<SizeTrace>, u64) {
    let adj = &eval.g.adjacency;
    let mut best = Best {
        stat: f64::NEG_INFINITY,
        set: Vec::new(),
    };
    let mut per_size: std::collections::BTreeMap<usize, f64> = Default::default();
    let mut evaluated = 0u64;
    for set in sets {
        let stat = eval.stat(&set, edges_within_unchecked(adj, &set));
        evaluated += 1;
        let slot = per_size.entry(set.len()).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(stat);
        best.offer(stat, &set);
    }
    let trace = per_size
        .into_iter()
        .map(|(size, statistic)| SizeTrace {
            size,
            statistic,
            exact: true,
        })
        .collect();
    (best, trace, evaluated)
}

/// Pruned exhaustive search.
///
/// For each size `k` the bar `beta = max(threshold, incumbent)` and the lower
/// bound on the expectation give a minimum edge count `e_min`. A `k`-set with
/// at most `mu = C(k,2) - e_min` missing pairs contains a clique of size
/// `ceil(k^2 / (k + 2 mu))` (Turan's bound on the complement), so the search
/// enumerates those cliques and grows each one while the missing-pair budget
/// lasts.
fn certified(
    eval: &Evaluator<'_>,
    min: usize,
    max: usize,
    threshold: f64,
    budget: u64,
) -> Result<(Best, Vec<SizeTrace>, u64, bool)> {
    let n = eval.n();
    let adj = &eval.g.adjacency;
    let seed: Vec<usize> = (0..min).collect();
    let mut best = Best {
        stat: eval.stat(&seed, edges_within_unchecked(adj, &seed)),
        set: seed,
    };
    let mut trace = Vec::new();
    let mut nodes = 0u64;
    for k in min..=max {
        let bar = threshold.max(best.stat);
        let pairs = (k * (k - 1) / 2) as u64;
        let need = bar * normalizer(n, k) * (1.0 - 1e-12);
        let lower = eval.expectation_lower_bound(k).max(f64::MIN_POSITIVE);
        let Some(e_min) = (0..=pairs).find(|&e| surplus(e as f64, lower) >= need) else {
            trace.push(SizeTrace {
                size: k,
                statistic: 0.0,
                exact: false,
            });
            continue;
        };
        let mu = (pairs - e_min) as usize;
        let q = (k * k).div_ceil(k + 2 * mu).clamp(1, k);
        let mut search = Grow {
            eval,
            k,
            mu,
            bar,
            nodes: &mut nodes,
            budget,
            size_best: f64::NEG_INFINITY,
            best: &mut best,
            hits: vec![0; n],
            touched: Vec::new(),
        };
        let mut all = vec![0u64; adj.words_per_row()];
        for v in 0..n {
            all[v / 64] |= 1 << (v % 64);
        }
        let mut clique = Vec::with_capacity(k);
        search.cliques(&mut clique, &all, 0, q)?;
        let size_best = search.size_best;
        trace.push(SizeTrace {
            size: k,
            statistic: size_best.max(0.0),
            exact: size_best >= bar,
        });
    }
    let exact = best.stat >= threshold;
    Ok((best, trace, nodes, exact))
}

struct Grow<'a, 'e> {
    eval: &'a Evaluator<'e>,
    k: usize,
    mu: usize,
    bar: f64,
    nodes: &'a mut u64,
    budget: u64,
    size_best: f64,
    best: &'a mut Best,
    // Scratch space for neighbour counts into the current clique.
    hits: Vec<u32>,
    touched: Vec<usize>,
}

impl Grow<'_, '_> {
    fn tick(&mut self) -> Result<()> {
        *self.nodes += 1;
        if *self.nodes > self.budget {
            return Err(Error::budget(
                "certified scan search",
                *self.nodes as f64,
                self.budget,
            ));
        }
        Ok(())
    }

    /// Enumerates `q`-cliques with increasing vertex order; `cand` holds the
    /// common neighbours of `clique` above its last vertex.
    fn cliques(
        &mut self,
        clique: &mut Vec<usize>,
        cand: &[u64],
        from: usize,
        q: usize,
    ) -> Result<()> {
        self.tick()?;
        if clique.len() == q {
            return self.start_growth(clique);
        }
        let adj = &self.eval.g.adjacency;
        let mut next = vec![0u64; cand.len()];
        for word in from / 64..cand.len() {
            let mut bits = cand[word];
            if word == from / 64 {
                bits &= u64::MAX << (from % 64);
            }
            while bits != 0 {
                let v = word * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                for (w, (c, r)) in next.iter_mut().zip(cand.iter().zip(adj.row(v))) {
                    *w = c & r;
                }
                clique.push(v);
                self.cliques(clique, &next, v + 1, q)?;
                clique.pop();
            }
        }
        Ok(())
    }

    fn start_growth(&mut self, clique: &[usize]) -> Result<()> {
        let adj = &self.eval.g.adjacency;
        let n = self.eval.n();
        let q = clique.len();
        // Penalty of v is q minus its neighbours in the clique; only
        // neighbours of the clique can have penalty below q.
        for &u in clique {
            for (word, &bits) in adj.row(u).iter().enumerate() {
                let mut bits = bits;
                while bits != 0 {
                    let v = word * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if self.hits[v] == 0 {
                        self.touched.push(v);
                    }
                    self.hits[v] += 1;
                }
            }
        }
        let mut explicit: Vec<(usize, usize)> = self
            .touched
            .iter()
            .filter(|v| !clique.contains(v))
            .map(|&v| (v, q - self.hits[v] as usize))
            .filter(|&(_, pen)| pen <= self.mu)
            .collect();
        explicit.sort_unstable_by_key(|&(v, pen)| (pen, v));
        let mut tail = vec![0u64; adj.words_per_row()];
        if q <= self.mu {
            for v in 0..n {
                if self.hits[v] == 0 {
                    tail[v / 64] |= 1 << (v % 64);
                }
            }
            for &v in clique {
                tail[v / 64] &= !(1 << (v % 64));
            }
        }
        for v in self.touched.drain(..) {
            self.hits[v] = 0;
        }
        let mut set = clique.to_vec();
        self.grow(&mut set, 0, &explicit, &tail)
    }

    /// Candidates are `explicit`, sorted by penalty (non-neighbours in `set`),
    /// followed by the `tail` bitset of vertices adjacent to nothing in `set`,
    /// whose penalty is `set.len()`. Vertices are added in that order, so
    /// every completion of `set` is reached exactly once from this node.
    fn grow(
        &mut self,
        set: &mut Vec<usize>,
        missing: usize,
        explicit: &[(usize, usize)],
        tail: &[u64],
    ) -> Result<()> {
        self.tick()?;
        let need = self.k - set.len();
        if need == 0 {
            let pairs = (self.k * (self.k - 1) / 2) as u64;
            let within = pairs - missing as u64;
            let mut sorted = set.clone();
            sorted.sort_unstable();
            let stat = self.eval.stat(&sorted, within);
            if stat >= self.bar {
                self.size_best = self.size_best.max(stat);
                self.best.offer(stat, &sorted);
            }
            return Ok(());
        }
        let slack = self.mu - missing;
        let tail_pen = set.len();
        let tail_count: usize = tail.iter().map(|w| w.count_ones() as usize).sum();
        let adj = &self.eval.g.adjacency;
        // Each added vertex costs at least its current penalty and penalties
        // are non-decreasing along the order, so once the cheapest window from
        // a position is too expensive every later position is too.
        let window = |start: usize| -> Option<usize> {
            let from_explicit = explicit.len().saturating_sub(start).min(need);
            let from_tail = need - from_explicit;
            if from_tail > tail_count {
                return None;
            }
            let head: usize = explicit[start.min(explicit.len())..][..from_explicit]
                .iter()
                .map(|c| c.1)
                .sum();
            Some(head + from_tail * tail_pen)
        };
        for (idx, &(v, pen)) in explicit.iter().enumerate() {
            match window(idx) {
                Some(cost) if cost <= slack => {}
                _ => return Ok(()),
            }
            let left = slack - pen;
            let row = adj.row(v);
            let mut child: Vec<(usize, usize)> = explicit[idx + 1..]
                .iter()
                .map(|&(u, p)| (u, p + !adj.has_edge(u, v) as usize))
                .filter(|&(_, p)| p <= left)
                .collect();
            let mut child_tail = vec![0u64; tail.len()];
            for (word, (&t, &r)) in tail.iter().zip(row).enumerate() {
                let mut hit = t & r;
                while hit != 0 {
                    let u = word * 64 + hit.trailing_zeros() as usize;
                    hit &= hit - 1;
                    if tail_pen <= left {
                        child.push((u, tail_pen));
                    }
                }
                if tail_pen < left {
                    child_tail[word] = t & !r;
                }
            }
            child.sort_unstable_by_key(|&(u, p)| (p, u));
            set.push(v);
            self.grow(set, missing + pen, &child, &child_tail)?;
            set.pop();
        }
        // Tail vertices in index order; all explicit candidates precede them.
        let start = explicit.len();
        let mut rest = tail.to_vec();
        for word in 0..tail.len() {
            while rest[word] != 0 {
                match window(start) {
                    Some(cost) if cost <= slack && tail_pen <= slack => {}
                    _ => return Ok(()),
                }
                let v = word * 64 + rest[word].trailing_zeros() as usize;
                rest[word] &= rest[word] - 1;
                let left = slack - tail_pen;
                let row = adj.row(v);
                let mut child = Vec::new();
                let mut child_tail = vec![0u64; tail.len()];
                for (w, (&t, &r)) in rest.iter().zip(row).enumerate() {
                    let mut hit = t & r;
                    while hit != 0 {
                        let u = w * 64 + hit.trailing_zeros() as usize;
                        hit &= hit - 1;
                        if tail_pen <= left {
                            child.push((u, tail_pen));
                        }
                    }
                    if tail_pen < left {
                        child_tail[w] = t & !r;
                    }
                }
                child.sort_unstable_by_key(|&(u, p)| (p, u));
                set.push(v);
                self.grow(set, missing + tail_pen, &child, &child_tail)?;
                set.pop();
            }
        }
        Ok(())
    }
}
