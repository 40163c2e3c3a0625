//! Undirected simple graphs in compressed sparse row form.
//!
//! Node ids are dense `0..n`. Every node also carries an external label,
//! which is what the edge-list reader sees and what the writers emit.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

/// Statistics collected while reading an edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub edge_lines: usize,
    pub duplicate_edges: usize,
    pub comment_lines: usize,
}

impl Graph {
    /// Builds a graph on nodes `0..n` labelled by their decimal id.
    ///
    /// Duplicate edges (in either orientation) are collapsed. Self-loops are
    /// rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::build(labels, edges).map(|(g, _)| g)
    }

    fn build(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<(Self, usize)> {
        let n = labels.len();
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop {
                    label: labels[u].clone(),
                    line: None,
                });
            }
            degree[u] += 1;
            degree[v] += 1;
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0usize; offsets[n]];
        for &(u, v) in edges {
            targets[fill[u]] = v;
            fill[u] += 1;
            targets[fill[v]] = u;
            fill[v] += 1;
        }

        // Sort and deduplicate each neighbour list, then compact.
        let mut compact = Vec::with_capacity(targets.len());
        let mut new_offsets = Vec::with_capacity(n + 1);
        new_offsets.push(0);
        for u in 0..n {
            let list = &mut targets[offsets[u]..offsets[u + 1]];
            list.sort_unstable();
            let mut prev = None;
            for &v in list.iter() {
                if prev != Some(v) {
                    compact.push(v);
                    prev = Some(v);
                }
            }
            new_offsets.push(compact.len());
        }
        let duplicates = edges.len() - compact.len() / 2;

        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok((
            Graph {
                offsets: new_offsets,
                targets: compact,
                labels,
                index,
            },
            duplicates,
        ))
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Degree of `v`, checked against the node range.
    pub fn degree(&self, v: usize) -> Result<usize> {
        self.check_node(v)?;
        Ok(self.offsets[v + 1] - self.offsets[v])
    }

    /// Sorted neighbours of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                id: v,
                n: self.node_count(),
            })
        }
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Internal id of an external label.
    pub fn node_id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Undirected edges `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Subgraph induced by the nodes with `keep[v] == true`.
    ///
    /// Returns the subgraph (labels preserved) and, for each new id, the id
    /// it had in `self`.
    pub fn induced_subgraph(&self, keep: &[bool]) -> (Graph, Vec<usize>) {
        assert_eq!(keep.len(), self.node_count());
        let old_ids: Vec<usize> = (0..self.node_count()).filter(|&v| keep[v]).collect();
        let mut new_id = vec![usize::MAX; self.node_count()];
        for (i, &v) in old_ids.iter().enumerate() {
            new_id[v] = i;
        }
        let edges: Vec<(usize, usize)> = self
            .edges()
            .filter(|&(u, v)| keep[u] && keep[v])
            .map(|(u, v)| (new_id[u], new_id[v]))
            .collect();
        let labels = old_ids.iter().map(|&v| self.labels[v].clone()).collect();
        let (g, _) = Self::build(labels, &edges).expect("induced subgraph of a valid graph");
        (g, old_ids)
    }

    /// Writes the graph as an edge list, one `u v` label pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{} {}", self.labels[u], self.labels[v])?;
        }
        Ok(())
    }
}

/// Reads a whitespace-separated edge list.
///
/// Labels are re-indexed densely in order of first appearance. Lines that
/// are blank or start with `#` are skipped.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<(Graph, LoadReport)> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut report = LoadReport::default();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            report.comment_lines += 1;
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    reason: format!("expected two node labels, got `{trimmed}`"),
                })
            }
        };
        if a == b {
            return Err(Error::SelfLoop {
                label: a.to_string(),
                line: Some(lineno),
            });
        }
        let mut intern = |label: &str| -> usize {
            if let Some(&id) = index.get(label) {
                return id;
            }
            let id = labels.len();
            labels.push(label.to_string());
            index.insert(label.to_string(), id);
            id
        };
        let u = intern(a);
        let v = intern(b);
        edges.push((u, v));
        report.edge_lines += 1;
    }

    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (graph, duplicates) = Graph::build(labels, &edges)?;
    report.duplicate_edges = duplicates;
    Ok((graph, report))
}

/// Multi-source BFS from `seeds`.
///
/// Returns every node with no path to any seed, in ascending order. An
/// empty result means every node can be absorbed.
pub fn check_seed_reachability(g: &Graph, seeds: &[usize]) -> Result<Vec<usize>> {
    if seeds.is_empty() {
        return Err(Error::EmptySeedSet);
    }
    let mut seen = vec![false; g.node_count()];
    let mut queue = VecDeque::new();
    for &s in seeds {
        g.check_node(s)?;
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    Ok((0..g.node_count()).filter(|&v| !seen[v]).collect())
}
