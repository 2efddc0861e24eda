//! Dinic max-flow on float capacities, used for exact min-cut seam labeling.

use std::collections::VecDeque;

const FLOW_EPS: f64 = 1e-12;

#[derive(Clone, Debug)]
struct FlowEdge {
    to: usize,
    cap: f64,
}

/// Directed flow network. Every add_edge call creates the edge and its
/// residual twin at consecutive indices.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    edges: Vec<FlowEdge>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds u -> v with capacity cap and v -> u with rev_cap. Symmetric
    /// capacities model undirected links.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, rev_cap: f64) {
        assert!(cap >= 0.0 && rev_cap >= 0.0);
        let id = self.edges.len();
        self.edges.push(FlowEdge { to: v, cap });
        self.edges.push(FlowEdge { to: u, cap: rev_cap });
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
    }

    fn bfs_levels(&self, s: usize, t: usize) -> Option<Vec<i32>> {
        let mut level = vec![-1i32; self.nodes()];
        let mut q = VecDeque::new();
        level[s] = 0;
        q.push_back(s);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if edge.cap > FLOW_EPS && level[edge.to] < 0 {
                    level[edge.to] = level[u] + 1;
                    q.push_back(edge.to);
                }
            }
        }
        if level[t] >= 0 {
            Some(level)
        } else {
            None
        }
    }

    fn dfs_push(
        &mut self,
        u: usize,
        t: usize,
        pushed: f64,
        level: &[i32],
        iter: &mut [usize],
    ) -> f64 {
        if u == t {
            return pushed;
        }
        while iter[u] < self.adj[u].len() {
            let e = self.adj[u][iter[u]];
            let (to, cap) = (self.edges[e].to, self.edges[e].cap);
            if cap > FLOW_EPS && level[to] == level[u] + 1 {
                let d = self.dfs_push(to, t, pushed.min(cap), level, iter);
                if d > FLOW_EPS {
                    self.edges[e].cap -= d;
                    self.edges[e ^ 1].cap += d;
                    return d;
                }
            }
            iter[u] += 1;
        }
        0.0
    }

    /// Runs Dinic to completion and returns the max-flow value. Capacities
    /// are left in their residual state for min_cut_side.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        assert_ne!(s, t);
        let mut total = 0.0;
        while let Some(level) = self.bfs_levels(s, t) {
            let mut iter = vec![0usize; self.nodes()];
            loop {
                let pushed = self.dfs_push(s, t, f64::INFINITY, &level, &mut iter);
                if pushed <= FLOW_EPS {
                    break;
                }
                total += pushed;
            }
        }
        total
    }

    /// Source side of the min cut: nodes reachable from s in the residual
    /// graph. Call after max_flow.
    pub fn min_cut_side(&self, s: usize) -> Vec<bool> {
        let mut side = vec![false; self.nodes()];
        let mut q = VecDeque::new();
        side[s] = true;
        q.push_back(s);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if edge.cap > FLOW_EPS && !side[edge.to] {
                    side[edge.to] = true;
                    q.push_back(edge.to);
                }
            }
        }
        side
    }
}
