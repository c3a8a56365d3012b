//! Transmission-motif census, per-node motif degrees, and significance
//! testing against degree-preserving null models.
//!
//! Five undirected motif shapes are counted, always as induced subgraphs:
//!
//! * `Mt31` — triangle
//! * `Mt32` — open wedge (path on three nodes)
//! * `Mt41` — 4-clique
//! * `Mt42` — diamond (4-clique minus one edge)
//! * `Mt43` — paw (triangle with a pendant edge)
//!
//! The fast census walks edges `(a, b)`, intersects the two neighborhoods,
//! and extends the intersection to a fourth node; every unordered node set
//! is visited exactly once. A subset-enumeration oracle with the same
//! output contract guards the counting logic.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{from_index_edges, Graph};

/// Brute-force census guard: subsets of larger graphs are too many.
pub const BRUTEFORCE_NODE_LIMIT: usize = 64;

/// The five transmission motif shapes, in vector-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MotifKind {
    Mt31,
    Mt32,
    Mt41,
    Mt42,
    Mt43,
}

impl MotifKind {
    pub const ALL: [MotifKind; 5] = [
        MotifKind::Mt31,
        MotifKind::Mt32,
        MotifKind::Mt41,
        MotifKind::Mt42,
        MotifKind::Mt43,
    ];

    pub fn index(self) -> usize {
        match self {
            MotifKind::Mt31 => 0,
            MotifKind::Mt32 => 1,
            MotifKind::Mt41 => 2,
            MotifKind::Mt42 => 3,
            MotifKind::Mt43 => 4,
        }
    }

    /// Number of nodes in the shape.
    pub fn order(self) -> usize {
        match self {
            MotifKind::Mt31 | MotifKind::Mt32 => 3,
            _ => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MotifKind::Mt31 => "mt31",
            MotifKind::Mt32 => "mt32",
            MotifKind::Mt41 => "mt41",
            MotifKind::Mt42 => "mt42",
            MotifKind::Mt43 => "mt43",
        }
    }
}

/// Per-node motif degrees: how many instances of each shape contain the node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NmdVector {
    pub counts: [u64; 5],
}

impl NmdVector {
    pub fn get(&self, kind: MotifKind) -> u64 {
        self.counts[kind.index()]
    }
}

/// Full census result: per-node degrees plus whole-graph instance totals.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifCensus {
    pub per_node: Vec<NmdVector>,
    pub totals: [u64; 5],
}

impl MotifCensus {
    fn new(n: usize) -> Self {
        MotifCensus {
            per_node: vec![NmdVector::default(); n],
            totals: [0; 5],
        }
    }

    fn record(&mut self, kind: MotifKind, members: &[usize]) {
        let k = kind.index();
        self.totals[k] += 1;
        for &v in members {
            self.per_node[v].counts[k] += 1;
        }
    }
}

fn adj(g: &Graph, u: usize, v: usize) -> bool {
    g.neighbors(u).binary_search(&v).is_ok()
}

/// Sorted intersection of two strictly sorted slices.
fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Neighborhood-search census of all five motifs.
///
/// Wedges enumerate per center; triangles per edge with the third node
/// above both endpoints; the 4-node shapes extend each triangle (4-clique,
/// paw) or each edge's common neighborhood (diamond). Each unordered
/// instance is recorded exactly once.
pub fn motif_census(g: &Graph) -> MotifCensus {
    let mut census = MotifCensus::new(g.node_count());

    // Wedges: unique center, unordered leaf pair without the closing edge.
    for center in 0..g.node_count() {
        let nbrs = g.neighbors(center);
        for (xi, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[xi + 1..] {
                if !adj(g, x, y) {
                    census.record(MotifKind::Mt32, &[x, center, y]);
                }
            }
        }
    }

    for (a, b, _) in g.edges() {
        debug_assert!(a < b);
        let inse = intersect(g.neighbors(a), g.neighbors(b));

        // Diamonds: (a, b) is the hub edge, the rim pair stays unconnected.
        for (ci, &c) in inse.iter().enumerate() {
            for &d in &inse[ci + 1..] {
                if !adj(g, c, d) {
                    census.record(MotifKind::Mt42, &[a, b, c, d]);
                }
            }
        }

        // Triangles: third node above both endpoints, then extend.
        for &c in &inse {
            if c <= b {
                continue;
            }
            census.record(MotifKind::Mt31, &[a, b, c]);

            // 4-cliques: fourth node adjacent to all three, above c.
            for &d in &inse {
                if d > c && adj(g, c, d) {
                    census.record(MotifKind::Mt41, &[a, b, c, d]);
                }
            }

            // Paws: pendant adjacent to exactly one triangle vertex.
            let tri = [a, b, c];
            for (ti, &t) in tri.iter().enumerate() {
                let others = [tri[(ti + 1) % 3], tri[(ti + 2) % 3]];
                for &d in g.neighbors(t) {
                    if d != others[0]
                        && d != others[1]
                        && !adj(g, d, others[0])
                        && !adj(g, d, others[1])
                    {
                        census.record(MotifKind::Mt43, &[a, b, c, d]);
                    }
                }
            }
        }
    }

    census
}

/// Per-node motif degrees via the neighborhood-search census.
pub fn count_nmd(g: &Graph) -> Vec<NmdVector> {
    motif_census(g).per_node
}

/// Subset-enumeration oracle: classify every induced 3- and 4-subset.
///
/// Output contract is identical to [`count_nmd`]; rejected above
/// [`BRUTEFORCE_NODE_LIMIT`] nodes.
pub fn count_nmd_bruteforce(g: &Graph) -> Result<Vec<NmdVector>> {
    Ok(motif_census_bruteforce(g)?.per_node)
}

/// Brute-force variant of [`motif_census`], including totals.
pub fn motif_census_bruteforce(g: &Graph) -> Result<MotifCensus> {
    let n = g.node_count();
    if n > BRUTEFORCE_NODE_LIMIT {
        return Err(Error::GraphTooLarge {
            nodes: n,
            limit: BRUTEFORCE_NODE_LIMIT,
        });
    }
    let mut census = MotifCensus::new(n);

    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let edges =
                    adj(g, a, b) as u32 + adj(g, a, c) as u32 + adj(g, b, c) as u32;
                match edges {
                    3 => census.record(MotifKind::Mt31, &[a, b, c]),
                    2 => census.record(MotifKind::Mt32, &[a, b, c]),
                    _ => {}
                }
                for d in c + 1..n {
                    if let Some(kind) = classify_quad(g, [a, b, c, d]) {
                        census.record(kind, &[a, b, c, d]);
                    }
                }
            }
        }
    }
    Ok(census)
}

/// Classify the induced subgraph on four nodes, if it is one of the shapes.
fn classify_quad(g: &Graph, nodes: [usize; 4]) -> Option<MotifKind> {
    let mut degs = [0u32; 4];
    let mut edges = 0u32;
    for i in 0..4 {
        for j in i + 1..4 {
            if adj(g, nodes[i], nodes[j]) {
                edges += 1;
                degs[i] += 1;
                degs[j] += 1;
            }
        }
    }
    match edges {
        6 => Some(MotifKind::Mt41),
        5 => Some(MotifKind::Mt42),
        4 => {
            degs.sort_unstable();
            // paw is (1,2,2,3); the 4-cycle (2,2,2,2) is not a counted shape
            (degs == [1, 2, 2, 3]).then_some(MotifKind::Mt43)
        }
        _ => None,
    }
}

/// Degree-preserving randomization by repeated double-edge swaps.
///
/// `swaps` counts attempted proposals; proposals that would create a
/// self-loop or duplicate edge are rejected, so the result is always a
/// simple graph with the exact degree multiset of the input. Edge kind
/// tags do not survive (endpoints are remixed); the result carries plain
/// unit-weight edges.
pub fn rewire_null_model(g: &Graph, swaps: usize, seed: u64) -> Result<Graph> {
    let mut edges: Vec<(usize, usize)> = g.edges().map(|(u, v, _)| (u, v)).collect();
    if edges.len() < 2 {
        return Err(Error::TooFewEdges { edges: edges.len() });
    }
    let mut present: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = edges.len();

    for _ in 0..swaps {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (c, d) = edges[j];
        let (f1, f2) = if rng.random::<bool>() {
            (ordered_pair(a, c), ordered_pair(b, d))
        } else {
            (ordered_pair(a, d), ordered_pair(b, c))
        };
        if f1.0 == f1.1 || f2.0 == f2.1 || f1 == f2 {
            continue;
        }
        let old = [edges[i], edges[j]];
        let duplicate = |e: (usize, usize)| present.contains(&e) && !old.contains(&e);
        if duplicate(f1) || duplicate(f2) {
            continue;
        }
        present.remove(&old[0]);
        present.remove(&old[1]);
        present.insert(f1);
        present.insert(f2);
        edges[i] = f1;
        edges[j] = f2;
    }

    Ok(from_index_edges(g.node_ids(), &edges))
}

fn ordered_pair(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Cutoffs for motif significance: over-representation is tested with a
/// z-score cutoff plus minimum-frequency and relative-excess guards.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignificanceThresholds {
    /// Minimum z-score for over-representation.
    pub z_cutoff: f64,
    /// Minimum absolute frequency in the original graph.
    pub u_min: u64,
    /// Minimum relative excess over the null mean.
    pub d_ratio: f64,
}

impl Default for SignificanceThresholds {
    fn default() -> Self {
        SignificanceThresholds {
            z_cutoff: 2.0,
            u_min: 4,
            d_ratio: 0.1,
        }
    }
}

/// Outcome of one motif's significance test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub motif: MotifKind,
    pub f_ori: u64,
    pub f_rand_mean: f64,
    pub f_rand_std: f64,
    /// `(f_ori - mean) / std`; signed infinity when the null ensemble is
    /// degenerate (std 0) and the frequencies differ, see `std_degenerate`.
    pub z_score: f64,
    pub std_degenerate: bool,
    pub passes_p: bool,
    pub passes_u: bool,
    pub passes_d: bool,
}

/// Test one motif against `ensemble` rewired null-model graphs.
///
/// Null frequencies use the population standard deviation; each ensemble
/// member is rewired with `10 * edge_count` swap attempts and a seed
/// derived from `seed` and the member index.
pub fn motif_significance(
    g: &Graph,
    motif: MotifKind,
    ensemble: usize,
    seed: u64,
    thresholds: SignificanceThresholds,
) -> Result<SignificanceReport> {
    if ensemble < 2 {
        return Err(Error::EnsembleTooSmall { ensemble });
    }
    let f_ori = motif_census(g).totals[motif.index()];
    let swaps = 10 * g.edge_count();
    let mut freqs = Vec::with_capacity(ensemble);
    for k in 0..ensemble {
        let rewired = rewire_null_model(g, swaps, seed.wrapping_add(k as u64))?;
        freqs.push(motif_census(&rewired).totals[motif.index()] as f64);
    }
    let mean = freqs.iter().sum::<f64>() / ensemble as f64;
    let var = freqs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / ensemble as f64;
    let std = var.sqrt();

    let (z_score, std_degenerate) = if std > 0.0 {
        ((f_ori as f64 - mean) / std, false)
    } else {
        let diff = f_ori as f64 - mean;
        let z = if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        (z, true)
    };

    Ok(SignificanceReport {
        motif,
        f_ori,
        f_rand_mean: mean,
        f_rand_std: std,
        z_score,
        std_degenerate,
        passes_p: z_score >= thresholds.z_cutoff,
        passes_u: f_ori >= thresholds.u_min,
        passes_d: f_ori as f64 - mean > thresholds.d_ratio * mean,
    })
}

/// Write the per-node motif degrees as CSV: `node_id,mt31,...,mt43`.
pub fn write_nmd_csv<W: Write>(g: &Graph, nmd: &[NmdVector], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "mt31", "mt32", "mt41", "mt42", "mt43"])
        .map_err(|e| Error::csv("<nmd>", e))?;
    for (v, vec) in nmd.iter().enumerate() {
        let mut record = vec![g.node_id(v).to_string()];
        record.extend(vec.counts.iter().map(|c| c.to_string()));
        w.write_record(&record).map_err(|e| Error::csv("<nmd>", e))?;
    }
    w.flush().map_err(|e| Error::io("<nmd>", e))?;
    Ok(())
}
