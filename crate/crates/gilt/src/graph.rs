//! Incremental word-level dependency graph and graph-feature extraction.
//!
//! A [`WordGraph`] holds directed head→dependent edges over words
//! `1..=num_words` plus a virtual root at index 0. Graphs grow one word at
//! a time during decoding; all update operations are pure (they return a
//! new graph and leave the input untouched), so any number of beam
//! hypotheses can share ancestors safely.
//!
//! Three features are read off the partial graph for every token
//! position and stacked into a [`FeatureTape`]:
//! - degree: `m_out * c_out + m_in * c_in` of the column's word,
//! - distance: cheapest path from the current token's word to the
//!   column's word, paying `m_out` along an edge direction and `m_in`
//!   against it,
//! - depth: undirected hop count from the root plus one, with 0 reserved
//!   for words not (yet) connected to the root.

use std::collections::BTreeSet;
use std::collections::BinaryHeap;
use std::cmp::Reverse;

use crate::{Error, Result};

/// Virtual root index.
pub const ROOT: usize = 0;

/// In/out edge weights used by the degree and distance features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeatureWeights {
    pub m_in: u64,
    pub m_out: u64,
}

impl FeatureWeights {
    pub fn new(m_in: u64, m_out: u64) -> Self {
        FeatureWeights { m_in, m_out }
    }

    /// Unweighted variant used by the ablations.
    pub fn unweighted() -> Self {
        FeatureWeights { m_in: 1, m_out: 1 }
    }
}

impl Default for FeatureWeights {
    fn default() -> Self {
        FeatureWeights { m_in: 1, m_out: 10 }
    }
}

/// Upper bounds for bucketed tape values. Each feature row is clamped to
/// `[0, cap]`; unreachable distances land in the dedicated bucket
/// `cap + 1`, so embedding tables need `cap + 2` rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeatureCaps {
    pub degree_cap: u64,
    pub distance_cap: u64,
    pub depth_cap: u64,
}

impl FeatureCaps {
    pub fn unreachable_bucket(&self) -> u64 {
        self.distance_cap + 1
    }
}

impl Default for FeatureCaps {
    fn default() -> Self {
        FeatureCaps {
            degree_cap: 64,
            distance_cap: 64,
            depth_cap: 32,
        }
    }
}

/// Which tape rows / weightings are disabled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AblationFlags {
    pub no_degree: bool,
    pub no_distance: bool,
    pub no_depth: bool,
    pub unweight_degree: bool,
    pub unweight_distance: bool,
}

impl AblationFlags {
    pub fn degree_weights(&self, base: FeatureWeights) -> FeatureWeights {
        if self.unweight_degree {
            FeatureWeights::unweighted()
        } else {
            base
        }
    }

    pub fn distance_weights(&self, base: FeatureWeights) -> FeatureWeights {
        if self.unweight_distance {
            FeatureWeights::unweighted()
        } else {
            base
        }
    }

    pub fn any(&self) -> bool {
        self.no_degree
            || self.no_distance
            || self.no_depth
            || self.unweight_degree
            || self.unweight_distance
    }
}

/// Directed word-level dependency graph with a virtual root.
///
/// Invariants enforced by [`WordGraph::add_dependencies`]: the root is
/// never a dependent, no self-loops, endpoints within `0..=num_words`.
/// The edge set is ordered, so iteration (and therefore every tie-break
/// built on it) is deterministic.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordGraph {
    num_words: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl WordGraph {
    pub fn new(num_words: usize) -> Self {
        WordGraph {
            num_words,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a graph without invariant checks, for diagnostics on raw
    /// input ([`validate_edge_list`] is the checked path for corpora).
    pub fn from_edges_unchecked(num_words: usize, edges: &[(usize, usize)]) -> Self {
        WordGraph {
            num_words,
            edges: edges.iter().copied().collect(),
        }
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges.iter().copied().collect()
    }

    pub fn contains_edge(&self, head: usize, dep: usize) -> bool {
        self.edges.contains(&(head, dep))
    }

    /// Returns a copy with the word count grown to `num_words` (no-op if
    /// already that large). New words start isolated.
    pub fn with_words(&self, num_words: usize) -> WordGraph {
        WordGraph {
            num_words: self.num_words.max(num_words),
            edges: self.edges.clone(),
        }
    }

    /// Pure update: returns a new graph containing the union of the old
    /// and new edges. Re-adding an existing edge is a no-op.
    pub fn add_dependencies(&self, new_edges: &[(usize, usize)]) -> Result<WordGraph> {
        let mut out = self.clone();
        for &(head, dep) in new_edges {
            if dep == ROOT {
                return Err(Error::InvalidEdge {
                    head,
                    dep,
                    num_words: self.num_words,
                    reason: "root cannot be a dependent",
                });
            }
            if head == dep {
                return Err(Error::InvalidEdge {
                    head,
                    dep,
                    num_words: self.num_words,
                    reason: "self-loop",
                });
            }
            if head > self.num_words || dep > self.num_words {
                return Err(Error::InvalidEdge {
                    head,
                    dep,
                    num_words: self.num_words,
                    reason: "endpoint out of range",
                });
            }
            out.edges.insert((head, dep));
        }
        Ok(out)
    }

    /// Restriction to `root + words 1..=max_word`: keeps edges with both
    /// endpoints in range and sets the word count to `max_word`.
    pub fn prefix(&self, max_word: usize) -> WordGraph {
        WordGraph {
            num_words: max_word,
            edges: self
                .edges
                .iter()
                .copied()
                .filter(|&(h, d)| h <= max_word && d <= max_word)
                .collect(),
        }
    }

    pub fn validate(&self) -> Vec<GraphViolation> {
        validate_edge_list(self.num_words, &self.edge_list())
    }

    /// `m_out * c_out + m_in * c_in` for `word` (root allowed).
    pub fn weighted_degree(&self, word: usize, w: FeatureWeights) -> Result<u64> {
        if word > self.num_words {
            return Err(Error::WordOutOfRange {
                word,
                num_words: self.num_words,
            });
        }
        let mut c_in = 0u64;
        let mut c_out = 0u64;
        for &(h, d) in &self.edges {
            if h == word {
                c_out += 1;
            }
            if d == word {
                c_in += 1;
            }
        }
        Ok(w.m_out * c_out + w.m_in * c_in)
    }

    /// Cheapest path cost from `src` to `dst`, traversing each edge in
    /// both directions: `m_out` along the edge, `m_in` against it.
    /// `None` means no path exists.
    pub fn weighted_distance(
        &self,
        src: usize,
        dst: usize,
        w: FeatureWeights,
    ) -> Result<Option<u64>> {
        if src > self.num_words {
            return Err(Error::WordOutOfRange {
                word: src,
                num_words: self.num_words,
            });
        }
        if dst > self.num_words {
            return Err(Error::WordOutOfRange {
                word: dst,
                num_words: self.num_words,
            });
        }
        Ok(self.distances_from(src, w)[dst])
    }

    /// Dijkstra from `src` over the bidirectionally-traversable graph;
    /// one call serves a whole tape column sweep.
    pub fn distances_from(&self, src: usize, w: FeatureWeights) -> Vec<Option<u64>> {
        let n = self.num_words + 1;
        let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for &(h, d) in &self.edges {
            adj[h].push((d, w.m_out));
            adj[d].push((h, w.m_in));
        }
        let mut dist: Vec<Option<u64>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[src] = Some(0);
        heap.push(Reverse((0u64, src)));
        while let Some(Reverse((cost, node))) = heap.pop() {
            if dist[node] != Some(cost) {
                continue;
            }
            for &(next, step) in &adj[node] {
                let cand = cost + step;
                if dist[next].map_or(true, |cur| cand < cur) {
                    dist[next] = Some(cand);
                    heap.push(Reverse((cand, next)));
                }
            }
        }
        dist
    }

    /// Depth of every node: undirected BFS hop count from the root plus
    /// one. Index 0 is the root itself (depth 1); disconnected words get
    /// 0. Each word is visited exactly once.
    pub fn all_depths(&self) -> Vec<u64> {
        let n = self.num_words + 1;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(h, d) in &self.edges {
            adj[h].push(d);
            adj[d].push(h);
        }
        let mut depth = vec![0u64; n];
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        visited[ROOT] = true;
        depth[ROOT] = 1;
        queue.push_back(ROOT);
        while let Some(node) = queue.pop_front() {
            for &next in &adj[node] {
                if !visited[next] {
                    visited[next] = true;
                    depth[next] = depth[node] + 1;
                    queue.push_back(next);
                }
            }
        }
        depth
    }
}

/// Diagnostic findings from gold-graph validation. Predicted graphs are
/// not required to be acyclic; gold graphs are.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphViolation {
    RootAsDependent { head: usize },
    SelfLoop { word: usize },
    OutOfRange { head: usize, dep: usize },
    Duplicate { head: usize, dep: usize },
    Cycle { witness: Vec<usize> },
}

impl std::fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphViolation::RootAsDependent { head } => {
                write!(f, "edge ({head},0) makes the root a dependent")
            }
            GraphViolation::SelfLoop { word } => write!(f, "self-loop at word {word}"),
            GraphViolation::OutOfRange { head, dep } => {
                write!(f, "edge ({head},{dep}) has an endpoint out of range")
            }
            GraphViolation::Duplicate { head, dep } => {
                write!(f, "edge ({head},{dep}) listed more than once")
            }
            GraphViolation::Cycle { witness } => write!(f, "cycle through words {witness:?}"),
        }
    }
}

/// Validates a raw edge list as a gold graph: reports root-as-dependent,
/// self-loops, out-of-range endpoints, duplicates and directed cycles.
/// An empty result means the list is a valid DAG annotation.
pub fn validate_edge_list(num_words: usize, edges: &[(usize, usize)]) -> Vec<GraphViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for &(h, d) in edges {
        if d == ROOT {
            out.push(GraphViolation::RootAsDependent { head: h });
        }
        if h == d {
            out.push(GraphViolation::SelfLoop { word: h });
        }
        if h > num_words || d > num_words {
            out.push(GraphViolation::OutOfRange { head: h, dep: d });
        }
        if !seen.insert((h, d)) {
            out.push(GraphViolation::Duplicate { head: h, dep: d });
        }
    }
    // Cycle check over in-range, non-degenerate edges.
    let n = num_words + 1;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(h, d) in &seen {
        if h <= num_words && d <= num_words && h != d {
            adj[h].push(d);
        }
    }
    // Iterative DFS with colors; records one witness cycle if any.
    let mut color = vec![0u8; n]; // 0 white, 1 gray, 2 black
    let mut parent = vec![usize::MAX; n];
    'outer: for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        color[start] = 1;
        while let Some(&mut (node, ref mut idx)) = stack.last_mut() {
            if *idx < adj[node].len() {
                let next = adj[node][*idx];
                *idx += 1;
                match color[next] {
                    0 => {
                        color[next] = 1;
                        parent[next] = node;
                        stack.push((next, 0));
                    }
                    1 => {
                        let mut witness = vec![next];
                        let mut cur = node;
                        while cur != next && cur != usize::MAX {
                            witness.push(cur);
                            cur = parent[cur];
                        }
                        witness.reverse();
                        out.push(GraphViolation::Cycle { witness });
                        break 'outer;
                    }
                    _ => {}
                }
            } else {
                color[node] = 2;
                stack.pop();
            }
        }
    }
    out
}

/// Clamp a feature value to `[0, cap]`; unreachable maps to the
/// dedicated bucket `cap + 1`.
pub fn bucketize(value: Option<u64>, cap: u64) -> u64 {
    match value {
        Some(v) => v.min(cap),
        None => cap + 1,
    }
}

/// Token-to-word alignment for one sentence. Tokens are indexed
/// `1..=num_tokens` (position 0 is the BOS sentinel), words
/// `1..=num_words`; spans are contiguous and cover all tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordAlignment {
    word_of_token: Vec<usize>,
    first_token: Vec<usize>,
}

impl WordAlignment {
    /// Builds from half-open token spans `[start, end)` (1-based, in
    /// word order).
    pub fn from_spans(spans: &[(usize, usize)]) -> Result<Self> {
        let mut word_of_token = vec![0usize]; // slot for BOS
        let mut first_token = vec![0usize]; // slot for root
        let mut expected_start = 1usize;
        for (w, &(start, end)) in spans.iter().enumerate() {
            let word = w + 1;
            if start != expected_start || end <= start {
                return Err(Error::CorpusInvalid {
                    id: 0,
                    msg: format!("word span {word} = [{start},{end}) not contiguous"),
                });
            }
            first_token.push(start);
            for _ in start..end {
                word_of_token.push(word);
            }
            expected_start = end;
        }
        Ok(WordAlignment {
            word_of_token,
            first_token,
        })
    }

    pub fn num_tokens(&self) -> usize {
        self.word_of_token.len() - 1
    }

    pub fn num_words(&self) -> usize {
        self.first_token.len() - 1
    }

    /// Word of token `t` (t in 1..=num_tokens).
    pub fn word_of_token(&self, t: usize) -> usize {
        self.word_of_token[t]
    }

    /// First token of word `w` (w in 1..=num_words).
    pub fn first_token(&self, w: usize) -> usize {
        self.first_token[w]
    }

    pub fn is_word_start(&self, t: usize) -> bool {
        let w = self.word_of_token[t];
        self.first_token[w] == t
    }

    /// Index of the last token belonging to word `w`.
    pub fn last_token(&self, w: usize) -> usize {
        if w == self.num_words() {
            self.num_tokens()
        } else {
            self.first_token[w + 1] - 1
        }
    }
}

/// A 3×(k+1) matrix of bucketed graph features for one token position.
/// Column 0 is the BOS sentinel (all zeros); column j describes the word
/// of token j. Row order: degree, distance, depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureTape {
    cols: Vec<[u64; 3]>,
}

impl FeatureTape {
    pub fn from_columns(cols: Vec<[u64; 3]>) -> Self {
        FeatureTape { cols }
    }

    /// Number of columns including the BOS sentinel.
    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn column(&self, j: usize) -> [u64; 3] {
        self.cols[j]
    }

    pub fn columns(&self) -> &[[u64; 3]] {
        &self.cols
    }

    /// Rows as (degree, distance, depth) vectors, handy for display.
    pub fn rows(&self) -> [Vec<u64>; 3] {
        let mut rows = [Vec::new(), Vec::new(), Vec::new()];
        for col in &self.cols {
            for r in 0..3 {
                rows[r].push(col[r]);
            }
        }
        rows
    }
}

/// Builds the feature tape for `current_token` (1..=k; 0 gives the
/// BOS-only tape). The graph must already contain every edge of words up
/// to and including `word(current_token)` that the conditioning assumes.
///
/// Column j for token x_j holds
/// `(bucket(degree of word(x_j)), bucket(distance word(current) →
/// word(x_j)), bucket(depth of word(x_j)))`; columns of tokens sharing a
/// word are identical, and the current word's distance entry is 0.
pub fn build_feature_tape(
    graph: &WordGraph,
    alignment: &WordAlignment,
    current_token: usize,
    weights: FeatureWeights,
    caps: FeatureCaps,
    flags: AblationFlags,
) -> Result<FeatureTape> {
    if current_token > alignment.num_tokens() {
        return Err(Error::TokenOutOfRange {
            token: current_token,
            num_tokens: alignment.num_tokens(),
        });
    }
    let mut cols = Vec::with_capacity(current_token + 1);
    cols.push([0, 0, 0]); // BOS sentinel
    if current_token == 0 {
        return Ok(FeatureTape { cols });
    }
    let cur_word = alignment.word_of_token(current_token);
    if cur_word > graph.num_words() {
        return Err(Error::WordOutOfRange {
            word: cur_word,
            num_words: graph.num_words(),
        });
    }
    let depths = graph.all_depths();
    let dists = graph.distances_from(cur_word, flags.distance_weights(weights));
    let deg_w = flags.degree_weights(weights);
    // Degrees cached per word; same-word columns share the triple.
    let mut degree_cache: Vec<Option<u64>> = vec![None; graph.num_words() + 1];
    for t in 1..=current_token {
        let w = alignment.word_of_token(t);
        if w > graph.num_words() {
            return Err(Error::WordOutOfRange {
                word: w,
                num_words: graph.num_words(),
            });
        }
        let degree = match degree_cache[w] {
            Some(d) => d,
            None => {
                let d = graph.weighted_degree(w, deg_w)?;
                degree_cache[w] = Some(d);
                d
            }
        };
        let col = [
            if flags.no_degree {
                0
            } else {
                bucketize(Some(degree), caps.degree_cap)
            },
            if flags.no_distance {
                0
            } else {
                bucketize(dists[w], caps.distance_cap)
            },
            if flags.no_depth {
                0
            } else {
                bucketize(Some(depths[w]), caps.depth_cap)
            },
        ];
        cols.push(col);
    }
    Ok(FeatureTape { cols })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights() -> FeatureWeights {
        FeatureWeights::new(1, 10)
    }

    #[test]
    fn add_single_edge() {
        let g = WordGraph::new(1);
        let g2 = g.add_dependencies(&[(0, 1)]).unwrap();
        assert!(g2.contains_edge(0, 1));
        assert_eq!(g2.edge_count(), 1);
        assert_eq!(g.edge_count(), 0, "input graph unchanged");
    }

    #[test]
    fn add_empty_is_identity() {
        let g = WordGraph::new(3).add_dependencies(&[(1, 2)]).unwrap();
        let g2 = g.add_dependencies(&[]).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn add_is_idempotent() {
        let g = WordGraph::new(2).add_dependencies(&[(1, 2)]).unwrap();
        let g2 = g.add_dependencies(&[(1, 2)]).unwrap();
        assert_eq!(g2.edge_count(), 1);
    }

    #[test]
    fn add_rejects_root_dependent_and_self_loop_and_range() {
        let g = WordGraph::new(3);
        assert!(g.add_dependencies(&[(1, 0)]).is_err());
        assert!(g.add_dependencies(&[(2, 2)]).is_err());
        assert!(g.add_dependencies(&[(1, 4)]).is_err());
    }

    #[test]
    fn degree_cases() {
        let g = WordGraph::new(3);
        assert_eq!(g.weighted_degree(1, weights()).unwrap(), 0);
        let g = g.add_dependencies(&[(2, 1)]).unwrap();
        // c_in = 1, c_out = 0
        assert_eq!(g.weighted_degree(1, weights()).unwrap(), 1);
        let g = g.add_dependencies(&[(1, 2), (1, 3)]).unwrap();
        // c_in = 1, c_out = 2
        assert_eq!(g.weighted_degree(1, weights()).unwrap(), 21);
        assert!(g.weighted_degree(9, weights()).is_err());
    }

    #[test]
    fn distance_chain() {
        // h=1 → a=2 → b=3
        let g = WordGraph::new(3)
            .add_dependencies(&[(1, 2), (2, 3)])
            .unwrap();
        assert_eq!(g.weighted_distance(1, 3, weights()).unwrap(), Some(20));
        assert_eq!(g.weighted_distance(3, 1, weights()).unwrap(), Some(2));
        assert_eq!(g.weighted_distance(2, 2, weights()).unwrap(), Some(0));
    }

    #[test]
    fn distance_unreachable() {
        let g = WordGraph::new(4).add_dependencies(&[(1, 2)]).unwrap();
        assert_eq!(g.weighted_distance(1, 3, weights()).unwrap(), None);
    }

    #[test]
    fn depths_basic() {
        let g = WordGraph::new(1).add_dependencies(&[(0, 1)]).unwrap();
        assert_eq!(g.all_depths()[1], 2);

        let g = WordGraph::new(3);
        assert_eq!(&g.all_depths()[1..], &[0, 0, 0]);

        // root→w1, w2→w1: depth(w2) = 3 via root–w1–w2 undirected.
        let g = WordGraph::new(2)
            .add_dependencies(&[(0, 1), (2, 1)])
            .unwrap();
        let d = g.all_depths();
        assert_eq!(d[1], 2);
        assert_eq!(d[2], 3);
    }

    #[test]
    fn bucketize_cases() {
        assert_eq!(bucketize(Some(3), 64), 3);
        assert_eq!(bucketize(Some(200), 64), 64);
        assert_eq!(bucketize(None, 64), 65);
    }

    #[test]
    fn validate_cases() {
        assert!(validate_edge_list(3, &[]).is_empty());
        let v = validate_edge_list(3, &[(1, 2), (2, 1)]);
        assert!(v.iter().any(|x| matches!(x, GraphViolation::Cycle { .. })));
        let v = validate_edge_list(3, &[(3, 0)]);
        assert!(v
            .iter()
            .any(|x| matches!(x, GraphViolation::RootAsDependent { .. })));
        let v = validate_edge_list(3, &[(1, 2), (1, 2)]);
        assert!(v
            .iter()
            .any(|x| matches!(x, GraphViolation::Duplicate { .. })));
    }

    #[test]
    fn tape_one_word_empty_graph() {
        let g = WordGraph::new(1);
        let al = WordAlignment::from_spans(&[(1, 2)]).unwrap();
        let tape = build_feature_tape(
            &g,
            &al,
            1,
            weights(),
            FeatureCaps::default(),
            AblationFlags::default(),
        )
        .unwrap();
        assert_eq!(tape.len(), 2);
        assert_eq!(tape.column(0), [0, 0, 0]);
        assert_eq!(tape.column(1), [0, 0, 0]);
    }

    #[test]
    fn tape_same_word_columns_identical() {
        // one word over three tokens, second word single token
        let al = WordAlignment::from_spans(&[(1, 4), (4, 5)]).unwrap();
        let g = WordGraph::new(2).add_dependencies(&[(0, 2), (2, 1)]).unwrap();
        let tape = build_feature_tape(
            &g,
            &al,
            4,
            weights(),
            FeatureCaps::default(),
            AblationFlags::default(),
        )
        .unwrap();
        assert_eq!(tape.column(1), tape.column(2));
        assert_eq!(tape.column(2), tape.column(3));
        // current word distance entry is 0
        assert_eq!(tape.column(4)[1], 0);
    }

    #[test]
    fn tape_ablation_zeroes_distance_row() {
        let al = WordAlignment::from_spans(&[(1, 2), (2, 3)]).unwrap();
        let g = WordGraph::new(2).add_dependencies(&[(2, 1)]).unwrap();
        let flags = AblationFlags {
            no_distance: true,
            ..Default::default()
        };
        let tape = build_feature_tape(&g, &al, 2, weights(), FeatureCaps::default(), flags)
            .unwrap();
        for j in 0..tape.len() {
            assert_eq!(tape.column(j)[1], 0);
        }
        // other rows unaffected
        assert_eq!(tape.column(1)[0], 1);
    }

    #[test]
    fn alignment_accessors() {
        let al = WordAlignment::from_spans(&[(1, 2), (2, 5), (5, 6)]).unwrap();
        assert_eq!(al.num_tokens(), 5);
        assert_eq!(al.num_words(), 3);
        assert_eq!(al.word_of_token(3), 2);
        assert_eq!(al.first_token(2), 2);
        assert!(al.is_word_start(2));
        assert!(!al.is_word_start(3));
        assert_eq!(al.last_token(2), 4);
        assert_eq!(al.last_token(3), 5);
        assert!(WordAlignment::from_spans(&[(1, 2), (3, 4)]).is_err());
    }
}
