//! Communication graphs and consensus mixing matrices.

mod jacobi;
mod mixing;

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use jacobi::{symmetric_eigen, SymmetricEigen};
pub use mixing::{MixingMatrix, SpectralConstants};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("{topology} needs at least {min} agents, got {m}")]
    TooFewAgents { topology: &'static str, min: usize, m: usize },
    #[error("adjacency is not square: row {row} has {len} entries, expected {m}")]
    NotSquare { row: usize, len: usize, m: usize },
    #[error("adjacency is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("self loop at node {0}")]
    SelfLoop(usize),
    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(usize),
    #[error("edge ({u}, {v}) references a node outside 0..{m}")]
    NodeOutOfRange { u: usize, v: usize, m: usize },
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("reading edge list: {0}")]
    Io(#[from] std::io::Error),
    #[error("step size kappa must lie in (0, 1], got {0}")]
    InvalidKappa(f64),
    #[error("mixing matrix row {row} sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },
    #[error("jacobi eigensolver did not converge within {sweeps} sweeps")]
    EigenNotConverged { sweeps: usize },
    #[error(
        "no spectral gap: |lambda_{index}| = {value} is not below 1; \
         use a smaller kappa or a connected, non-bipartite graph"
    )]
    SpectralGap { index: usize, value: f64 },
}

/// Named topologies understood by [`Graph::build`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Cycle,
    Complete,
    Star,
    Path,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Cycle => "cycle",
            Topology::Complete => "complete",
            Topology::Star => "star",
            Topology::Path => "path",
        })
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cycle" | "ring" => Ok(Topology::Cycle),
            "complete" => Ok(Topology::Complete),
            "star" => Ok(Topology::Star),
            "path" | "line" => Ok(Topology::Path),
            other => Err(format!("unknown topology '{other}'")),
        }
    }
}

/// Undirected, unweighted, connected communication graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<bool>>,
}

impl Graph {
    /// Builds a named topology on `m` agents.
    ///
    /// A complete graph on a single agent is accepted: it has no edges and
    /// yields the identity mixing matrix.
    pub fn build(topology: Topology, m: usize) -> Result<Self, TopologyError> {
        let min = match topology {
            Topology::Cycle => 3,
            Topology::Complete => 1,
            Topology::Star | Topology::Path => 2,
        };
        if m < min {
            return Err(TopologyError::TooFewAgents {
                topology: match topology {
                    Topology::Cycle => "cycle",
                    Topology::Complete => "complete",
                    Topology::Star => "star",
                    Topology::Path => "path",
                },
                min,
                m,
            });
        }
        let mut adj = vec![vec![false; m]; m];
        let mut link = |u: usize, v: usize| {
            adj[u][v] = true;
            adj[v][u] = true;
        };
        match topology {
            Topology::Cycle => (0..m).for_each(|i| link(i, (i + 1) % m)),
            Topology::Complete => {
                for i in 0..m {
                    for j in i + 1..m {
                        link(i, j);
                    }
                }
            }
            Topology::Star => (1..m).for_each(|i| link(0, i)),
            Topology::Path => (0..m - 1).for_each(|i| link(i, i + 1)),
        }
        Ok(Self { adjacency: adj })
    }

    /// Validates an explicit adjacency matrix.
    pub fn from_adjacency(adjacency: Vec<Vec<bool>>) -> Result<Self, TopologyError> {
        let m = adjacency.len();
        if m < 2 {
            return Err(TopologyError::TooFewAgents { topology: "custom", min: 2, m });
        }
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != m {
                return Err(TopologyError::NotSquare { row: i, len: row.len(), m });
            }
            if row[i] {
                return Err(TopologyError::SelfLoop(i));
            }
        }
        for (i, row) in adjacency.iter().enumerate() {
            for j in i + 1..m {
                if row[j] != adjacency[j][i] {
                    return Err(TopologyError::NotSymmetric(i, j));
                }
            }
        }
        let g = Self { adjacency };
        g.check_connected()?;
        Ok(g)
    }

    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        let mut adj = vec![vec![false; m]; m];
        for &(u, v) in edges {
            if u >= m || v >= m {
                return Err(TopologyError::NodeOutOfRange { u, v, m });
            }
            if u == v {
                return Err(TopologyError::SelfLoop(u));
            }
            adj[u][v] = true;
            adj[v][u] = true;
        }
        Self::from_adjacency(adj)
    }

    /// Parses the plain-text edge-list format: the first line holds the
    /// agent count `M`, every following line one `u v` pair (0-indexed).
    /// Blank lines and `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, first) = lines.next().ok_or(TopologyError::Parse { line: 1, msg: "missing agent count".into() })?;
        let m: usize = first
            .parse()
            .map_err(|_| TopologyError::Parse { line, msg: format!("expected agent count, found '{first}'") })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let mut it = l.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize, TopologyError> {
                tok.and_then(|t| t.parse().ok())
                    .ok_or(TopologyError::Parse { line, msg: format!("expected 'u v', found '{l}'") })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(TopologyError::Parse { line, msg: format!("trailing tokens in '{l}'") });
            }
            edges.push((u, v));
        }
        Self::from_edges(m, &edges)
    }

    pub fn load_edge_list(path: &Path) -> Result<Self, TopologyError> {
        Self::parse_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u][v]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].iter().filter(|&&e| e).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.len()).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i].iter().enumerate().filter(|(_, &e)| e).map(|(j, _)| j)
    }

    fn check_connected(&self) -> Result<(), TopologyError> {
        let m = self.len();
        let mut seen = vec![false; m];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(TopologyError::Disconnected(i)),
            None => Ok(()),
        }
    }
}
