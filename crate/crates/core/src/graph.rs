//! The directed transfer graph on the divisor lattice of `d`.
//!
//! Fix a divisor `x0` of `d` that is coprime to its cofactor `y0 = d/x0`.
//! Vertices are all divisors of `d`; two divisors differing by one prime
//! factor `p` are joined by an edge, directed toward the smaller divisor
//! when `p` divides `x0` and toward the larger when `p` divides `y0`.
//! Every directed walk from `v_x0` to `v_y0` then has exactly
//! `L = sum of prime exponents` edges, and the number of such paths is the
//! multinomial `L! / prod(r_u!)`. Each path selects the vertex state
//! families the coefficient sweep moves mass through.

use serde::{Deserialize, Serialize};

use crate::hilbert::{CVector, DftPair};
use crate::numtheory::{gcd, DimensionProfile};
use crate::purestates::{PureStateLabel, VertexStateSet};
use crate::{Error, Result};

/// Default bound on the number of enumerated paths.
pub const DEFAULT_PATH_CAP: usize = 100_000;

/// One directed edge; `from * to` differ by the single prime `prime`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphEdge {
    pub from: u64,
    pub to: u64,
    pub prime: u64,
}

/// A start-to-end walk, serialized as `{"x0": ..., "vertices": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphPath {
    pub x0: u64,
    pub vertices: Vec<u64>,
}

impl GraphPath {
    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }
}

/// The directed divisor graph for a coprime factorization `d = x0 * y0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorGraph {
    d: u64,
    x0: u64,
    y0: u64,
    vertices: Vec<u64>,
    exponents: Vec<Vec<u32>>,
    edges: Vec<GraphEdge>,
}

impl DivisorGraph {
    /// Builds the graph, rejecting `x0` that does not divide `d` or is not
    /// coprime to `d / x0`.
    pub fn build(profile: &DimensionProfile, x0: u64) -> Result<Self> {
        if !profile.is_divisor(x0) {
            return Err(Error::NotADivisor {
                value: x0,
                d: profile.d(),
            });
        }
        let y0 = profile.d() / x0;
        if gcd(x0, y0) != 1 {
            return Err(Error::CoprimalityViolation { x0, y0 });
        }
        let vertices = profile.divisors().to_vec();
        let exponents = vertices
            .iter()
            .map(|&v| {
                profile
                    .primes()
                    .iter()
                    .map(|pp| {
                        let mut v = v;
                        let mut e = 0;
                        while v % pp.prime == 0 {
                            v /= pp.prime;
                            e += 1;
                        }
                        e
                    })
                    .collect()
            })
            .collect();
        let mut edges = Vec::new();
        for &v in &vertices {
            for pp in profile.primes() {
                if v % pp.prime == 0 {
                    let smaller = v / pp.prime;
                    let (from, to) = if x0 % pp.prime == 0 {
                        (v, smaller)
                    } else {
                        (smaller, v)
                    };
                    edges.push(GraphEdge {
                        from,
                        to,
                        prime: pp.prime,
                    });
                }
            }
        }
        edges.sort_unstable_by_key(|e| (e.from, e.to));
        Ok(DivisorGraph {
            d: profile.d(),
            x0,
            y0,
            vertices,
            exponents,
            edges,
        })
    }

    /// The dimension `d`.
    pub fn d(&self) -> u64 {
        self.d
    }

    /// The start vertex.
    pub fn x0(&self) -> u64 {
        self.x0
    }

    /// The end vertex `y0 = d / x0`.
    pub fn y0(&self) -> u64 {
        self.y0
    }

    /// All vertices in ascending divisor order.
    pub fn vertices(&self) -> &[u64] {
        &self.vertices
    }

    /// All directed edges sorted by `(from, to)`.
    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    /// Cached per-prime exponent vector of a vertex.
    pub fn vertex_exponents(&self, v: u64) -> Option<&[u32]> {
        self.vertices
            .binary_search(&v)
            .ok()
            .map(|idx| self.exponents[idx].as_slice())
    }

    /// Whether `(from, to)` is a directed edge.
    pub fn has_edge(&self, from: u64, to: u64) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    /// Out-neighbors of a vertex in ascending order.
    pub fn successors(&self, v: u64) -> Vec<u64> {
        self.edges
            .iter()
            .filter(|e| e.from == v)
            .map(|e| e.to)
            .collect()
    }

    /// Enumerates every directed path from `v_x0` to `v_y0` under the
    /// default cap.
    pub fn enumerate_paths(&self) -> Result<Vec<GraphPath>> {
        self.enumerate_paths_capped(DEFAULT_PATH_CAP)
    }

    /// Enumerates every directed path from `v_x0` to `v_y0` by
    /// depth-first search, failing once more than `cap` paths exist.
    pub fn enumerate_paths_capped(&self, cap: usize) -> Result<Vec<GraphPath>> {
        let mut paths = Vec::new();
        let mut stack = vec![self.x0];
        self.dfs(&mut stack, &mut paths, cap)?;
        Ok(paths)
    }

    fn dfs(&self, stack: &mut Vec<u64>, paths: &mut Vec<GraphPath>, cap: usize) -> Result<()> {
        let current = *stack.last().expect("stack never empty");
        if current == self.y0 {
            if paths.len() == cap {
                return Err(Error::PathCapExceeded { cap });
            }
            paths.push(GraphPath {
                x0: self.x0,
                vertices: stack.clone(),
            });
            return Ok(());
        }
        for next in self.successors(current) {
            stack.push(next);
            self.dfs(stack, paths, cap)?;
            stack.pop();
        }
        Ok(())
    }

    /// The closed-form path count `L! / prod(r_u!)`.
    pub fn expected_path_count(&self, profile: &DimensionProfile) -> u128 {
        let mut count: u128 = 1;
        let mut placed: u128 = 0;
        for pp in profile.primes() {
            for i in 1..=u128::from(pp.exponent) {
                placed += 1;
                count = count * placed / i;
            }
        }
        count
    }

    /// The canonical start-to-end path: divide out the primes of `x0` one
    /// exponent at a time in ascending prime order, then multiply in the
    /// primes of `y0` the same way.
    pub fn canonical_path(&self, profile: &DimensionProfile) -> GraphPath {
        let mut vertices = vec![self.x0];
        let mut current = self.x0;
        for pp in profile.primes() {
            if self.x0 % pp.prime == 0 {
                while current % pp.prime == 0 {
                    current /= pp.prime;
                    vertices.push(current);
                }
            }
        }
        for pp in profile.primes() {
            if self.y0 % pp.prime == 0 {
                for _ in 0..pp.exponent {
                    current *= pp.prime;
                    vertices.push(current);
                }
            }
        }
        GraphPath {
            x0: self.x0,
            vertices,
        }
    }

    /// Validates that `path` starts at `x0`, ends at `y0`, and follows
    /// directed edges.
    pub fn validate_path(&self, path: &GraphPath) -> Result<()> {
        if path.vertices.first() != Some(&self.x0) {
            return Err(Error::InvalidPath {
                detail: format!("path must start at {}", self.x0),
            });
        }
        if path.vertices.last() != Some(&self.y0) {
            return Err(Error::InvalidPath {
                detail: format!("path must end at {}", self.y0),
            });
        }
        for pair in path.vertices.windows(2) {
            if !self.has_edge(pair[0], pair[1]) {
                return Err(Error::InvalidPath {
                    detail: format!("no directed edge {} -> {}", pair[0], pair[1]),
                });
            }
        }
        Ok(())
    }

    /// GraphViz DOT rendering with deterministic ordering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph divisor_transfer {\n  rankdir=LR;\n");
        for &v in &self.vertices {
            let role = if v == self.x0 {
                " [shape=doublecircle]"
            } else if v == self.y0 {
                " [shape=doubleoctagon]"
            } else {
                ""
            };
            out.push_str(&format!("  \"{v}\"{role};\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
                e.from, e.to, e.prime
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// The labeled states of every vertex on a path, flattened in path order.
pub fn path_state_union(
    profile: &DimensionProfile,
    pair: &DftPair,
    path: &GraphPath,
) -> Result<Vec<(PureStateLabel, CVector)>> {
    let mut out = Vec::new();
    for &x in &path.vertices {
        let set = VertexStateSet::new(profile, pair, x)?;
        out.extend(
            set.labels()
                .iter()
                .copied()
                .zip(set.states().iter().cloned()),
        );
    }
    Ok(out)
}
