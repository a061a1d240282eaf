use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Undirected simple graph over nodes `0..node_count`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    node_count: usize,
    // Sorted, each pair stored once with u < v.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    coordinates: Option<Vec<[f64; 2]>>,
}

impl Graph {
    /// Builds a graph from an edge list. Self-edges are rejected; repeated
    /// pairs are merged.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::Precondition(format!("self-edge at node {u}")));
            }
            if u >= node_count || v >= node_count {
                return Err(Error::Precondition(format!(
                    "edge ({u}, {v}) outside {node_count} nodes"
                )));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        list.dedup();
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &list {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        adjacency.iter_mut().for_each(|a| a.sort_unstable());
        Ok(Graph {
            node_count,
            edges: list,
            adjacency,
            coordinates: None,
        })
    }

    pub fn with_coordinates(mut self, coordinates: Vec<[f64; 2]>) -> Result<Self> {
        if coordinates.len() != self.node_count {
            return Err(Error::dims("coordinates", self.node_count, coordinates.len()));
        }
        self.coordinates = Some(coordinates);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.node_count == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.node_count as f64
        }
    }

    pub fn coordinates(&self) -> Option<&[[f64; 2]]> {
        self.coordinates.as_deref()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Unweighted shortest-path distances from `source`; `usize::MAX` marks
    /// unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Result<Vec<usize>> {
        if source >= self.node_count {
            return Err(Error::Precondition(format!(
                "source {source} outside {} nodes",
                self.node_count
            )));
        }
        let mut dist = vec![usize::MAX; self.node_count];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// All-pairs distances by repeated BFS; row `i` holds distances from `i`.
    pub fn distance_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.node_count)
            .map(|s| self.bfs_distances(s).expect("source in range"))
            .collect()
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.node_count];
        let mut out = Vec::new();
        for s in 0..self.node_count {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.node_count <= 1 || self.components().len() == 1
    }

    /// Subgraph induced by `nodes` (sorted), relabelled `0..nodes.len()` in
    /// the given order. Coordinates follow their nodes.
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut label = vec![usize::MAX; self.node_count];
        for (new, &old) in nodes.iter().enumerate() {
            label[old] = new;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(u, v)| label[*u] != usize::MAX && label[*v] != usize::MAX)
            .map(|&(u, v)| (label[u], label[v]));
        let mut g = Graph::new(nodes.len(), edges).expect("relabelled edges are valid");
        g.coordinates = self
            .coordinates
            .as_ref()
            .map(|c| nodes.iter().map(|&i| c[i]).collect());
        g
    }

    /// Largest connected component (ties go to the one with the smallest node).
    pub fn giant_component(&self) -> Graph {
        let comps = self.components();
        let best = comps
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
            .map(|(_, c)| c.clone())
            .unwrap_or_default();
        self.induced(&best)
    }

    /// Edge-list text: a `nodes <N>` header (`nodes <N> coordinates` when
    /// positions are present, followed by `N` lines of `x y`), then one
    /// `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        match &self.coordinates {
            Some(coords) => {
                writeln!(s, "nodes {} coordinates", self.node_count).unwrap();
                for [x, y] in coords {
                    writeln!(s, "{x} {y}").unwrap();
                }
            }
            None => writeln!(s, "nodes {}", self.node_count).unwrap(),
        }
        for (u, v) in &self.edges {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        Self::parse_edge_list(&fs::read_to_string(path)?, path)
    }

    pub fn parse_edge_list(text: &str, path: &Path) -> Result<Graph> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| err(1, "missing `nodes <N>` header".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let (n, with_coords) = match toks[..] {
            ["nodes", n] => (n, false),
            ["nodes", n, "coordinates"] => (n, true),
            _ => return Err(err(hline, format!("bad header {header:?}"))),
        };
        let n: usize = n.parse().map_err(|e| err(hline, format!("node count: {e}")))?;
        let mut coords = Vec::new();
        if with_coords {
            for _ in 0..n {
                let (ln, l) = lines.next().ok_or_else(|| err(hline, "missing coordinate lines".into()))?;
                let xy: Vec<f64> = l
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| err(ln, format!("coordinate: {e}")))?;
                let [x, y] = xy[..] else {
                    return Err(err(ln, "expected `x y`".into()));
                };
                coords.push([x, y]);
            }
        }
        let mut edges = Vec::new();
        for (ln, l) in lines {
            let uv: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(ln, format!("edge: {e}")))?;
            let [u, v] = uv[..] else {
                return Err(err(ln, "expected `u v`".into()));
            };
            if u >= n || v >= n || u == v {
                return Err(err(ln, format!("invalid edge ({u}, {v})")));
            }
            edges.push((u, v));
        }
        let g = Graph::new(n, edges)?;
        if with_coords {
            g.with_coordinates(coords)
        } else {
            Ok(g)
        }
    }
}
