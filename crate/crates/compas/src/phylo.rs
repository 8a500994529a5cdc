//! Unrooted trees from distance matrices via neighbor joining, with Newick
//! import and export.
//!
//! The agglomeration is the standard one. Everything is deterministic: ties
//! in the join criterion resolve to the smallest node-id pair, children are
//! emitted in min-leaf order, and lengths print with six decimals, so equal
//! matrices yield byte-identical Newick text.

use thiserror::Error;

use crate::similarity::DistanceMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum PhyloError {
    #[error("neighbor joining needs at least 3 labels, got {got}")]
    TooFewLabels { got: usize },
    #[error("newick parse error at byte {pos}: {msg}")]
    Newick { msg: String, pos: usize },
}

/// An unrooted tree with labeled leaves and non-negative edge lengths.
/// Nodes `0..leaf_count` are the leaves, in label order; higher ids are
/// internal.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    labels: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
    node_count: usize,
}

impl PhyloTree {
    fn new(labels: Vec<String>, edges: Vec<(usize, usize, f64)>, node_count: usize) -> PhyloTree {
        debug_assert!(edges.iter().all(|&(u, v, w)| u < node_count && v < node_count && w >= 0.0));
        PhyloTree { labels, edges, node_count }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// `(node, node, length)` list; orientation is arbitrary.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }

    /// Pairwise path lengths between leaves. Exactly symmetric with a zero
    /// diagonal: each pair is computed once and mirrored.
    pub fn path_length_matrix(&self) -> Vec<Vec<f64>> {
        let adj = self.adjacency();
        let k = self.leaf_count();
        let mut m = vec![vec![0.0; k]; k];
        for i in 0..k {
            // Depth-first accumulation from leaf i.
            let mut dist = vec![f64::NAN; self.node_count];
            let mut stack = vec![i];
            dist[i] = 0.0;
            while let Some(u) = stack.pop() {
                for &(v, w) in &adj[u] {
                    if dist[v].is_nan() {
                        dist[v] = dist[u] + w;
                        stack.push(v);
                    }
                }
            }
            for j in (i + 1)..k {
                m[i][j] = dist[j];
                m[j][i] = dist[j];
            }
        }
        m
    }

    /// Leaf bipartitions, one per edge: the sorted leaf ids on the side not
    /// containing leaf 0. Leaf-adjacent edges give singletons.
    pub fn splits(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut out = Vec::with_capacity(self.edges.len());
        for &(u, v, _) in &self.edges {
            // Collect leaves reachable from v without crossing back over u.
            let mut side = Vec::new();
            let mut seen = vec![false; self.node_count];
            seen[u] = true;
            seen[v] = true;
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                if x < self.leaf_count() {
                    side.push(x);
                }
                for &(y, _) in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            side.sort_unstable();
            if side.contains(&0) {
                let mut other: Vec<usize> =
                    (0..self.leaf_count()).filter(|l| !side.contains(l)).collect();
                other.sort_unstable();
                out.push(other);
            } else {
                out.push(side);
            }
        }
        out
    }

    /// Whether removing one edge separates exactly `leaves` (given as leaf
    /// indices) from the rest.
    pub fn has_leaf_split(&self, leaves: &[usize]) -> bool {
        let mut target: Vec<usize> = leaves.to_vec();
        target.sort_unstable();
        target.dedup();
        let complement: Vec<usize> =
            (0..self.leaf_count()).filter(|l| !target.contains(l)).collect();
        self.splits().iter().any(|s| *s == target || *s == complement)
    }
}

/// Count of edges the construction had to clamp up to zero length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NjDiagnostics {
    pub clamped_edges: usize,
}

fn clamp_length(len: f64, diag: &mut NjDiagnostics) -> f64 {
    if len < 0.0 {
        diag.clamped_edges += 1;
        0.0
    } else {
        len
    }
}

/// Standard neighbor joining. Ties on the join criterion resolve to the
/// smallest node-id pair, so the output is deterministic. Negative branch
/// lengths (possible on non-additive input) are clamped to zero and counted.
pub fn neighbor_joining(d: &DistanceMatrix) -> Result<(PhyloTree, NjDiagnostics), PhyloError> {
    let leaves = d.size();
    if leaves < 3 {
        return Err(PhyloError::TooFewLabels { got: leaves });
    }
    let total_nodes = 2 * leaves - 2;
    let mut dist = vec![vec![0.0f64; total_nodes]; total_nodes];
    for (i, row) in dist.iter_mut().take(leaves).enumerate() {
        for (j, cell) in row.iter_mut().take(leaves).enumerate() {
            *cell = d.get(i, j);
        }
    }

    let mut active: Vec<usize> = (0..leaves).collect();
    let mut next_id = leaves;
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(total_nodes - 1);
    let mut diag = NjDiagnostics::default();

    while active.len() > 3 {
        let m = active.len() as f64;
        let r: Vec<f64> =
            active.iter().map(|&i| active.iter().map(|&j| dist[i][j]).sum()).collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..active.len() {
            for b in (a + 1)..active.len() {
                let q = (m - 2.0) * dist[active[a]][active[b]] - r[a] - r[b];
                if best.is_none_or(|(bq, _, _)| q < bq) {
                    best = Some((q, a, b));
                }
            }
        }
        let (_, a, b) = best.expect("at least two active nodes");
        let (i, j) = (active[a], active[b]);
        let dij = dist[i][j];
        let li = dij / 2.0 + (r[a] - r[b]) / (2.0 * (m - 2.0));
        let lj = dij - li;
        let u = next_id;
        next_id += 1;
        edges.push((u, i, clamp_length(li, &mut diag)));
        edges.push((u, j, clamp_length(lj, &mut diag)));
        for &k in &active {
            if k != i && k != j {
                let duk = (dist[i][k] + dist[j][k] - dij) / 2.0;
                dist[u][k] = duk;
                dist[k][u] = duk;
            }
        }
        active.retain(|&k| k != i && k != j);
        active.push(u);
    }

    let (x, y, z) = (active[0], active[1], active[2]);
    let (dxy, dxz, dyz) = (dist[x][y], dist[x][z], dist[y][z]);
    let center = next_id;
    next_id += 1;
    edges.push((center, x, clamp_length((dxy + dxz - dyz) / 2.0, &mut diag)));
    edges.push((center, y, clamp_length((dxy + dyz - dxz) / 2.0, &mut diag)));
    edges.push((center, z, clamp_length((dxz + dyz - dxy) / 2.0, &mut diag)));

    let tree = PhyloTree::new(d.labels().to_vec(), edges, next_id);
    Ok((tree, diag))
}

// ── Newick text ──

/// Serializes a tree as Newick with six-decimal branch lengths. The text is
/// rooted at the internal neighbor of the lowest-index leaf and children are
/// ordered by the smallest leaf index in their subtree, so equal trees print
/// identically.
pub fn to_newick(tree: &PhyloTree) -> String {
    let adj = tree.adjacency();
    let root = adj[0][0].0; // lowest-index leaf hangs off the root

    // (rendered subtree, min leaf id within it)
    fn render(
        node: usize,
        parent: usize,
        tree: &PhyloTree,
        adj: &[Vec<(usize, f64)>],
    ) -> (String, usize) {
        if node < tree.leaf_count() {
            return (tree.labels()[node].clone(), node);
        }
        let mut children: Vec<(String, usize)> = adj[node]
            .iter()
            .filter(|&&(child, _)| child != parent)
            .map(|&(child, w)| {
                let (text, min_leaf) = render(child, node, tree, adj);
                (format!("{text}:{w:.6}"), min_leaf)
            })
            .collect();
        children.sort_by_key(|&(_, min_leaf)| min_leaf);
        let min_leaf = children.iter().map(|&(_, m)| m).min().expect("internal node has children");
        let inner: Vec<String> = children.into_iter().map(|(t, _)| t).collect();
        (format!("({})", inner.join(",")), min_leaf)
    }

    let mut children: Vec<(String, usize)> = adj[root]
        .iter()
        .map(|&(child, w)| {
            let (text, min_leaf) = render(child, root, tree, &adj);
            (format!("{text}:{w:.6}"), min_leaf)
        })
        .collect();
    children.sort_by_key(|&(_, min_leaf)| min_leaf);
    let inner: Vec<String> = children.into_iter().map(|(t, _)| t).collect();
    format!("({});", inner.join(","))
}

struct NewickParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

// Temporary parse nodes; ids are remapped once leaf count is known.
enum ParseNode {
    Leaf(String),
    Internal(Vec<(usize, f64)>),
}

impl<'a> NewickParser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PhyloError> {
        Err(PhyloError::Newick { msg: msg.into(), pos: self.pos })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), PhyloError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {:?}", c as char))
        }
    }

    fn name(&mut self) -> Result<String, PhyloError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, b'_' | b'.' | b'-'))
        {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected a leaf name");
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn length(&mut self) -> Result<f64, PhyloError> {
        self.expect(b':')?;
        self.skip_ws();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || matches!(c, b'.' | b'+' | b'-' | b'e' | b'E'))
        {
            self.pos += 1;
        }
        let token = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
            _ => self.err(format!("bad branch length {token:?}")),
        }
    }

    /// Parses one subtree, returning its node id in `nodes`.
    fn subtree(&mut self, nodes: &mut Vec<ParseNode>) -> Result<usize, PhyloError> {
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let mut children = Vec::new();
            loop {
                let child = self.subtree(nodes)?;
                let w = self.length()?;
                children.push((child, w));
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.err("expected ',' or ')'"),
                }
            }
            if children.len() < 2 {
                return self.err("internal node needs at least 2 children");
            }
            nodes.push(ParseNode::Internal(children));
            Ok(nodes.len() - 1)
        } else {
            let label = self.name()?;
            nodes.push(ParseNode::Leaf(label));
            Ok(nodes.len() - 1)
        }
    }
}

/// Parses Newick text with mandatory branch lengths (the shape [`to_newick`]
/// emits): plain unquoted leaf names, an unlabeled root with no length.
pub fn parse_newick(text: &str) -> Result<PhyloTree, PhyloError> {
    let mut p = NewickParser { bytes: text.as_bytes(), pos: 0 };
    if p.peek() != Some(b'(') {
        return p.err("tree must start with '('");
    }
    let mut nodes: Vec<ParseNode> = Vec::new();
    p.subtree(&mut nodes)?;
    p.expect(b';')?;
    if p.peek().is_some() {
        return p.err("trailing text after ';'");
    }

    // Remap ids: leaves first in encounter order, then internal nodes.
    let mut labels = Vec::new();
    let mut id_map = vec![0usize; nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        if let ParseNode::Leaf(label) = node {
            if labels.contains(label) {
                return Err(PhyloError::Newick {
                    msg: format!("duplicate leaf name {label:?}"),
                    pos: 0,
                });
            }
            id_map[i] = labels.len();
            labels.push(label.clone());
        }
    }
    let mut next_internal = labels.len();
    for (i, node) in nodes.iter().enumerate() {
        if matches!(node, ParseNode::Internal(_)) {
            id_map[i] = next_internal;
            next_internal += 1;
        }
    }
    let mut edges = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        if let ParseNode::Internal(children) = node {
            for &(child, w) in children {
                edges.push((id_map[i], id_map[child], w));
            }
        }
    }
    if labels.is_empty() {
        return Err(PhyloError::Newick { msg: "tree has no leaves".into(), pos: 0 });
    }
    Ok(PhyloTree::new(labels, edges, next_internal))
}
