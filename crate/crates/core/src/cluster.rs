//! Agglomerative hierarchical clustering over a precomputed pairwise
//! distance matrix, plus dendrogram cuts by cluster count or merge height.
//!
//! Merged clusters are numbered like the leaves they grow from: leaves are
//! `0..n`, the cluster created by merge `i` is `n + i`. Ties between equal
//! distances break on the smallest `(a, b)` id pair, so the merge sequence
//! is fully deterministic.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("distance matrix must be finite (NaN or infinity at [{i}, {j}])")]
    NonFinite { i: usize, j: usize },
    #[error("distance matrix must be symmetric with a zero diagonal (at [{i}, {j}])")]
    NotSymmetric { i: usize, j: usize },
    #[error("distance matrix must be non-negative (at [{i}, {j}])")]
    Negative { i: usize, j: usize },
    #[error("need at least 2 points to cluster, got {0}")]
    TooFew(usize),
    #[error("cut count {k} outside 1..={n}")]
    BadCount { k: usize, n: usize },
}

/// Symmetric pairwise distances with zero diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal, finiteness and non-negativity.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, ClusterError> {
        assert_eq!(entries.len(), n * n, "entries must be n*n");
        for i in 0..n {
            for j in 0..n {
                let v = entries[i * n + j];
                if !v.is_finite() {
                    return Err(ClusterError::NonFinite { i, j });
                }
                if v < 0.0 {
                    return Err(ClusterError::Negative { i, j });
                }
                if i != j && v != entries[j * n + i] {
                    return Err(ClusterError::NotSymmetric { i, j });
                }
            }
            if entries[i * n + i] != 0.0 {
                return Err(ClusterError::NotSymmetric { i, j: i });
            }
        }
        Ok(DistanceMatrix { n, entries })
    }

    /// Builds from the upper triangle of a symmetric function.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, ClusterError> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self::new(n, entries)
    }

    /// Squared Euclidean distances between embedding rows.
    pub fn squared_euclidean(points: &[Vec<f64>]) -> Result<Self, ClusterError> {
        Self::from_fn(points.len(), |i, j| {
            points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Average,
    Complete,
    Single,
}

impl std::str::FromStr for Linkage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(format!("unknown linkage {other:?} (average|complete|single)")),
        }
    }
}

/// One agglomeration step: clusters `a` and `b` merged at `height` into a
/// cluster of `size` leaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Ordered merge list; leaves are `0..n`, merge `i` creates cluster `n + i`.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn max_height(&self) -> f64 {
        self.merges.iter().map(|m| m.height).fold(0.0, f64::max)
    }

    pub fn min_height(&self) -> f64 {
        self.merges
            .iter()
            .map(|m| m.height)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Agglomerative clustering with Lance–Williams distance updates.
pub fn ahc(d: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram, ClusterError> {
    let n = d.len();
    if n < 2 {
        return Err(ClusterError::TooFew(n));
    }
    // working copy indexed by slot; a merged cluster reuses the lower slot
    let mut work = d.entries.clone();
    let mut active: Vec<bool> = vec![true; n];
    let mut sizes: Vec<usize> = vec![1; n];
    let mut ids: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        // global minimum over active pairs, ties on smallest (id_lo, id_hi)
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for si in 0..n {
            if !active[si] {
                continue;
            }
            for sj in (si + 1)..n {
                if !active[sj] {
                    continue;
                }
                let dist = work[si * n + sj];
                let (lo, hi) = ordered(ids[si], ids[sj]);
                best = match best {
                    Some(cur) if (cur.0, cur.1, cur.2) <= (dist, lo, hi) => Some(cur),
                    _ => Some((dist, lo, hi, si, sj)),
                };
            }
        }
        let (height, id_lo, id_hi, si, sj) = best.expect("at least one active pair");

        let new_size = sizes[si] + sizes[sj];
        merges.push(Merge {
            a: id_lo,
            b: id_hi,
            height,
            size: new_size,
        });

        // Lance-Williams update of distances to the merged cluster
        let (wa, wb) = (sizes[si] as f64, sizes[sj] as f64);
        for sk in 0..n {
            if !active[sk] || sk == si || sk == sj {
                continue;
            }
            let dik = work[si * n + sk];
            let djk = work[sj * n + sk];
            let merged = match linkage {
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
                Linkage::Average => (wa * dik + wb * djk) / (wa + wb),
            };
            work[si * n + sk] = merged;
            work[sk * n + si] = merged;
        }
        active[sj] = false;
        sizes[si] = new_size;
        ids[si] = n + step;
    }

    if linkage == Linkage::Average {
        for w in merges.windows(2) {
            debug_assert!(
                w[1].height >= w[0].height - 1e-12 * w[0].height.abs().max(1.0),
                "average-linkage heights must be non-decreasing"
            );
        }
    }
    Ok(Dendrogram { n, merges })
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.parent[ra] = rb;
    }
}

fn labels_from_applied(dendrogram: &Dendrogram, applied: usize) -> Vec<usize> {
    let n = dendrogram.n;
    let mut uf = UnionFind::new(2 * n - 1);
    for (i, m) in dendrogram.merges.iter().take(applied).enumerate() {
        uf.union(m.a, n + i);
        uf.union(m.b, n + i);
    }
    // labels in order of first leaf appearance
    let mut label_of_root: Vec<Option<usize>> = vec![None; 2 * n - 1];
    let mut next = 0;
    let mut labels = Vec::with_capacity(n);
    for leaf in 0..n {
        let root = uf.find(leaf);
        let label = *label_of_root[root].get_or_insert_with(|| {
            let l = next;
            next += 1;
            l
        });
        labels.push(label);
    }
    labels
}

/// Undoes the last `k - 1` merges: exactly `k` clusters, labeled `0..k` in
/// order of first leaf appearance.
pub fn cut_by_count(dendrogram: &Dendrogram, k: usize) -> Result<Vec<usize>, ClusterError> {
    let n = dendrogram.n;
    if k < 1 || k > n {
        return Err(ClusterError::BadCount { k, n });
    }
    Ok(labels_from_applied(dendrogram, n - k))
}

/// Applies every merge with height strictly below `t`.
pub fn cut_by_threshold(dendrogram: &Dendrogram, t: f64) -> Vec<usize> {
    let applied = dendrogram.merges.iter().take_while(|m| m.height < t).count();
    labels_from_applied(dendrogram, applied)
}

/// Largest cluster in a labeling; ties break toward the smaller cluster id.
pub fn largest_cluster(labels: &[usize]) -> (usize, Vec<usize>) {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let best = (0..k)
        .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
        .unwrap_or(0);
    let members = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == best)
        .map(|(i, _)| i)
        .collect();
    (best, members)
}
