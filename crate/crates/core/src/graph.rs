//! Immutable undirected graphs with optional node attributes and labels.
//!
//! External files identify nodes by string; internally nodes are dense indices
//! `0..n` in first-seen order. The id list is kept so every report can print
//! the mapping.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng::substream;

/// Categorical node labels, class indices assigned in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub classes: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Labels {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// One-hot |V|×C indicator matrix.
    pub fn one_hot(&self) -> Array2<f64> {
        let mut y = Array2::zeros((self.classes.len(), self.class_count()));
        for (u, &c) in self.classes.iter().enumerate() {
            y[[u, c]] = 1.0;
        }
        y
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    attributes: Option<Array2<f64>>,
    labels: Option<Labels>,
}

impl Graph {
    /// Builds a graph from ids and index pairs. Pairs are symmetrized and
    /// deduplicated; self-loops are rejected.
    pub fn new(node_ids: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = node_ids.len();
        let mut index = HashMap::with_capacity(n);
        for (i, id) in node_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate node id {id:?}")));
            }
        }
        let mut seen = BTreeSet::new();
        let mut kept = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Validation(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop on node {:?}", node_ids[a])));
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                kept.push(key);
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &kept {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for row in &mut neighbors {
            row.sort_unstable();
        }
        Ok(Graph {
            node_ids,
            index,
            neighbors,
            edges: kept,
            attributes: None,
            labels: None,
        })
    }

    pub fn with_attributes(mut self, x: Array2<f64>) -> Result<Self> {
        if x.nrows() != self.node_count() {
            return Err(Error::Validation(format!(
                "attribute matrix has {} rows for {} nodes",
                x.nrows(),
                self.node_count()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("attribute matrix contains non-finite values".into()));
        }
        self.attributes = Some(x);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.classes.len() != self.node_count() {
            return Err(Error::Validation(format!(
                "label vector has {} entries for {} nodes",
                labels.classes.len(),
                self.node_count()
            )));
        }
        if let Some(&bad) = labels.classes.iter().find(|&&c| c >= labels.class_count()) {
            return Err(Error::Validation(format!(
                "label index {bad} outside [0, {})",
                labels.class_count()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Undirected edges as `(u, v)` with `u < v`, in first-seen order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn attributes(&self) -> Option<&Array2<f64>> {
        self.attributes.as_ref()
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    /// SHA-256 over ids, edges, attributes and labels, as lowercase hex.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for id in &self.node_ids {
            h.update(id.as_bytes());
            h.update([0u8]);
        }
        for &(a, b) in &self.edges {
            h.update((a as u64).to_le_bytes());
            h.update((b as u64).to_le_bytes());
        }
        if let Some(x) = &self.attributes {
            h.update(b"attributes");
            for v in x.iter() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        if let Some(y) = &self.labels {
            h.update(b"labels");
            for &c in &y.classes {
                h.update((c as u64).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃` the degree matrix of `A + I`.
    pub fn normalized_adjacency_with_self_loops(&self) -> SparseRows {
        let scale: Vec<f64> = self
            .neighbors
            .iter()
            .map(|nb| 1.0 / ((nb.len() + 1) as f64).sqrt())
            .collect();
        let rows = self
            .neighbors
            .iter()
            .enumerate()
            .map(|(u, nb)| {
                let mut row: Vec<(usize, f64)> = nb.iter().map(|&v| (v, scale[u] * scale[v])).collect();
                let at = row.partition_point(|&(v, _)| v < u);
                row.insert(at, (u, scale[u] * scale[u]));
                row
            })
            .collect();
        SparseRows { n: self.node_count(), rows }
    }
}

/// Row-sparse square matrix; each row holds `(column, value)` sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        let row = &self.rows[u];
        match row.binary_search_by_key(&v, |&(c, _)| c) {
            Ok(i) => row[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n, self.n));
        for (u, row) in self.rows.iter().enumerate() {
            for &(v, x) in row {
                m[[u, v]] = x;
            }
        }
        m
    }

    /// `self · x` for a dense `n×c` matrix.
    pub fn mul_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, x.ncols()));
        for (u, row) in self.rows.iter().enumerate() {
            let mut dst = out.row_mut(u);
            for &(v, w) in row {
                dst.scaled_add(w, &x.row(v));
            }
        }
        out
    }
}

/// Role of a node set in coherence sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Query,
    Target,
}

/// Sorted, distinct, nonempty set of node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet {
    nodes: Vec<usize>,
    role: NodeRole,
}

impl NodeSet {
    pub fn new(mut nodes: Vec<usize>, node_count: usize, role: NodeRole) -> Result<Self> {
        nodes.sort_unstable();
        let len = nodes.len();
        nodes.dedup();
        if nodes.len() != len {
            return Err(Error::Parameter("node set contains duplicates".into()));
        }
        if nodes.is_empty() {
            return Err(Error::Parameter("node set is empty".into()));
        }
        if let Some(&bad) = nodes.iter().find(|&&u| u >= node_count) {
            return Err(Error::Parameter(format!("node index {bad} out of range")));
        }
        Ok(NodeSet { nodes, role })
    }

    pub fn all(node_count: usize, role: NodeRole) -> Result<Self> {
        Self::new((0..node_count).collect(), node_count, role)
    }

    /// Uniform subsample of `ceil(fraction · n)` nodes (at least one).
    pub fn sample(node_count: usize, fraction: f64, seed: u64, role: NodeRole) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Parameter(format!("node fraction {fraction} outside (0, 1]")));
        }
        if fraction >= 1.0 {
            return Self::all(node_count, role);
        }
        let m = ((fraction * node_count as f64).ceil() as usize).clamp(1, node_count.max(1));
        let mut rng = substream(seed, "node-set", role as u64);
        let picked = sample(&mut rng, node_count, m).into_vec();
        Self::new(picked, node_count, role)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn role(&self) -> NodeRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, u: usize) -> bool {
        self.nodes.binary_search(&u).is_ok()
    }
}

fn split_tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Loads an edge list plus optional attribute and label tables.
///
/// Edge lines hold two tokens separated by whitespace or a comma. A line with a
/// single token declares an isolated node. Lines starting with `#` are skipped.
/// The graph is stored undirected, so `directed_input` only documents that
/// reciprocal lines are expected; either direction yields the same edge.
pub fn load_graph(
    edge_path: &Path,
    attr_path: Option<&Path>,
    label_path: Option<&Path>,
    directed_input: bool,
) -> Result<Graph> {
    let _ = directed_input;
    let text = fs::read_to_string(edge_path).map_err(|e| Error::io(edge_path, e))?;
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |tok: &str, ids: &mut Vec<String>| -> usize {
        *index.entry(tok.to_string()).or_insert_with(|| {
            ids.push(tok.to_string());
            ids.len() - 1
        })
    };
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks = split_tokens(trimmed);
        match toks.as_slice() {
            [a] => {
                intern(a, &mut ids);
            }
            [a, b] => {
                if a == b {
                    return Err(Error::Validation(format!(
                        "{}:{}: self-loop on node {a:?}",
                        edge_path.display(),
                        lineno + 1
                    )));
                }
                let ia = intern(a, &mut ids);
                let ib = intern(b, &mut ids);
                edges.push((ia, ib));
            }
            _ => {
                return Err(Error::parse(
                    edge_path,
                    lineno + 1,
                    format!("expected one or two node tokens, found {}", toks.len()),
                ))
            }
        }
    }
    let mut g = Graph::new(ids, &edges)?;
    if let Some(p) = attr_path {
        let x = read_attributes(p, &g)?;
        g = g.with_attributes(x)?;
    }
    if let Some(p) = label_path {
        let y = read_labels(p, &g)?;
        g = g.with_labels(y)?;
    }
    Ok(g)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Reads `node,f1,...,fD` rows; every graph node must appear exactly once.
pub(crate) fn read_node_table(path: &Path, g: &Graph) -> Result<(Vec<String>, Array2<f64>)> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if headers.len() < 2 || headers.get(0) != Some("node") {
        return Err(Error::parse(path, 1, "header must start with `node` followed by value columns"));
    }
    let dim = headers.len() - 1;
    let n = g.node_count();
    let mut x = Array2::zeros((n, dim));
    let mut seen = vec![false; n];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(path, line, e.to_string())
        })?;
        let line = record_line(&rec);
        if rec.len() != dim + 1 {
            return Err(Error::parse(path, line, format!("expected {} fields, found {}", dim + 1, rec.len())));
        }
        let id = &rec[0];
        let u = g
            .node_index(id)
            .ok_or_else(|| Error::Reference(format!("{}:{line}: node {id:?} is not in the graph", path.display())))?;
        if seen[u] {
            return Err(Error::parse(path, line, format!("node {id:?} listed twice")));
        }
        seen[u] = true;
        for j in 0..dim {
            let v: f64 = rec[j + 1]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad number {:?}", &rec[j + 1])))?;
            x[[u, j]] = v;
        }
    }
    if let Some(u) = seen.iter().position(|s| !s) {
        return Err(Error::Reference(format!(
            "{}: node {:?} has no row",
            path.display(),
            g.node_ids()[u]
        )));
    }
    let names = headers.iter().skip(1).map(str::to_string).collect();
    Ok((names, x))
}

fn read_attributes(path: &Path, g: &Graph) -> Result<Array2<f64>> {
    read_node_table(path, g).map(|(_, x)| x)
}

fn read_labels(path: &Path, g: &Graph) -> Result<Labels> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if headers.len() != 2 || headers.get(0) != Some("node") || headers.get(1) != Some("label") {
        return Err(Error::parse(path, 1, "header must be `node,label`"));
    }
    let n = g.node_count();
    let mut classes = vec![usize::MAX; n];
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(path, line, e.to_string())
        })?;
        let line = record_line(&rec);
        let id = &rec[0];
        let u = g
            .node_index(id)
            .ok_or_else(|| Error::Reference(format!("{}:{line}: node {id:?} is not in the graph", path.display())))?;
        if classes[u] != usize::MAX {
            return Err(Error::parse(path, line, format!("node {id:?} listed twice")));
        }
        let label = rec[1].to_string();
        let next = class_names.len();
        let c = *class_index.entry(label.clone()).or_insert_with(|| {
            class_names.push(label);
            next
        });
        classes[u] = c;
    }
    if let Some(u) = classes.iter().position(|&c| c == usize::MAX) {
        return Err(Error::Reference(format!(
            "{}: node {:?} has no label",
            path.display(),
            g.node_ids()[u]
        )));
    }
    Ok(Labels { classes, class_names })
}

fn io(p: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(p, e)
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

/// Writes the graph back in the formats `load_graph` reads.
pub fn save_graph(g: &Graph, edge_path: &Path, attr_path: Option<&Path>, label_path: Option<&Path>) -> Result<()> {
    let mut w = create(edge_path)?;
    // Node declarations first so that reloading reproduces the index order.
    for id in g.node_ids() {
        writeln!(w, "{id}").map_err(io(edge_path))?;
    }
    for &(a, b) in g.edges() {
        writeln!(w, "{} {}", g.node_ids()[a], g.node_ids()[b]).map_err(io(edge_path))?;
    }
    w.flush().map_err(io(edge_path))?;

    if let (Some(p), Some(x)) = (attr_path, g.attributes()) {
        let mut w = create(p)?;
        let header: Vec<String> = std::iter::once("node".to_string())
            .chain((1..=x.ncols()).map(|j| format!("f{j}")))
            .collect();
        writeln!(w, "{}", header.join(",")).map_err(io(p))?;
        for (u, row) in x.outer_iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{},{}", g.node_ids()[u], vals.join(",")).map_err(io(p))?;
        }
        w.flush().map_err(io(p))?;
    }
    if let (Some(p), Some(y)) = (label_path, g.labels()) {
        let mut w = create(p)?;
        writeln!(w, "node,label").map_err(io(p))?;
        for (u, &c) in y.classes.iter().enumerate() {
            writeln!(w, "{},{}", g.node_ids()[u], y.class_names[c]).map_err(io(p))?;
        }
        w.flush().map_err(io(p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn path_graph_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.txt", "# path\na b\nb,c\n");
        let g = load_graph(&p, None, None, false).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        assert_eq!(g.node_ids(), ["a", "b", "c"]);
    }

    #[test]
    fn reciprocal_directed_lines_collapse() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.txt", "a b\nb a\n");
        let g = load_graph(&p, None, None, true).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn self_loop_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.txt", "a a\n");
        assert!(matches!(load_graph(&p, None, None, false), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.txt", "a b\n\na b c\n");
        match load_graph(&p, None, None, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_node_is_a_reference_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "a b\n");
        let l = write(dir.path(), "l.csv", "node,label\na,x\nb,y\nzz,x\n");
        assert!(matches!(load_graph(&e, None, Some(&l), false), Err(Error::Reference(_))));
    }

    #[test]
    fn isolated_node_declared_in_edge_file() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "a b\nc\n");
        let l = write(dir.path(), "l.csv", "node,label\na,x\nb,y\nc,x\n");
        let g = load_graph(&e, None, Some(&l), false).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.degree(2), 0);
        assert_eq!(g.labels().unwrap().classes, vec![0, 1, 0]);
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let ids: Vec<String> = ["n0", "n1", "n2", "n3", "n4"].iter().map(|s| s.to_string()).collect();
        let g = Graph::new(ids, &[(3, 1), (0, 2), (2, 1)])
            .unwrap()
            .with_attributes(ndarray::array![[0.1, -2.0], [1.0 / 3.0, 0.0], [5.5, 1e-17], [0.0, 0.0], [2.0, 7.25]])
            .unwrap()
            .with_labels(Labels {
                classes: vec![1, 0, 1, 2, 0],
                class_names: vec!["p".into(), "q".into(), "r".into()],
            })
            .unwrap();
        let (e, a, l) = (dir.path().join("e"), dir.path().join("a"), dir.path().join("l"));
        save_graph(&g, &e, Some(&a), Some(&l)).unwrap();
        let h = load_graph(&e, Some(&a), Some(&l), false).unwrap();
        assert_eq!(h.node_ids(), g.node_ids());
        let set = |g: &Graph| g.edges().iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(set(&h), set(&g));
        assert_eq!(h.attributes(), g.attributes());
        let names = |g: &Graph| {
            let y = g.labels().unwrap();
            y.classes.iter().map(|&c| y.class_names[c].clone()).collect::<Vec<_>>()
        };
        assert_eq!(names(&h), names(&g));
    }

    #[test]
    fn normalized_adjacency_examples() {
        let ids = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let single = Graph::new(ids(2), &[(0, 1)]).unwrap().normalized_adjacency_with_self_loops();
        for u in 0..2 {
            for v in 0..2 {
                assert_abs_diff_eq!(single.get(u, v), 0.5, epsilon = 1e-15);
            }
        }
        let iso = Graph::new(ids(3), &[(0, 1)]).unwrap().normalized_adjacency_with_self_loops();
        assert_eq!(iso.get(2, 2), 1.0);
        let path = Graph::new(ids(3), &[(0, 1), (1, 2)]).unwrap().normalized_adjacency_with_self_loops();
        assert_abs_diff_eq!(path.get(0, 1), 1.0 / 6f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(path.get(0, 1), 0.40825, epsilon = 1e-5);
        assert_eq!(path.get(0, 2), 0.0);
    }

    #[test]
    fn node_set_sampling() {
        let s = NodeSet::sample(100, 0.25, 3, NodeRole::Query).unwrap();
        assert_eq!(s.len(), 25);
        assert!(s.nodes().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, NodeSet::sample(100, 0.25, 3, NodeRole::Query).unwrap());
        assert!(NodeSet::new(vec![], 3, NodeRole::Target).is_err());
        assert!(NodeSet::new(vec![1, 1], 3, NodeRole::Target).is_err());
    }
}
