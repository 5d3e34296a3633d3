//! Real-valued network flow: Dinic max-flow and successive-shortest-path
//! min-cost flow. Both are small, allocation-per-call solvers.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

/// Capacities below this are treated as saturated.
const EPS: f64 = 1e-15;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: f64,
    cost: f64,
}

/// Directed graph with residual edges.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    adj: Vec<Vec<Edge>>,
}

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        self.add_edge_with_cost(from, to, cap, 0.0);
    }

    pub fn add_edge_with_cost(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        let rev_from = self.adj[to].len() + usize::from(from == to);
        let rev_to = self.adj[from].len();
        self.adj[from].push(Edge {
            to,
            rev: rev_from,
            cap,
            cost,
        });
        self.adj[to].push(Edge {
            to: from,
            rev: rev_to,
            cap: 0.0,
            cost: -cost,
        });
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for e in &self.adj[v] {
                if e.cap > EPS && level[e.to] == usize::MAX {
                    level[e.to] = level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        (level[t] != usize::MAX).then_some(level)
    }

    fn push(&mut self, v: usize, t: usize, limit: f64, level: &[usize], iter: &mut [usize]) -> f64 {
        if v == t {
            return limit;
        }
        while iter[v] < self.adj[v].len() {
            let i = iter[v];
            let (to, cap) = (self.adj[v][i].to, self.adj[v][i].cap);
            if cap > EPS && level[to] == level[v] + 1 {
                let pushed = self.push(to, t, limit.min(cap), level, iter);
                if pushed > EPS {
                    self.adj[v][i].cap -= pushed;
                    let rev = self.adj[v][i].rev;
                    self.adj[to][rev].cap += pushed;
                    return pushed;
                }
            }
            iter[v] += 1;
        }
        0.0
    }

    /// Maximum flow from `s` to `t` (Dinic).
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while let Some(level) = self.levels(s, t) {
            let mut iter = vec![0; self.adj.len()];
            loop {
                let f = self.push(s, t, f64::INFINITY, &level, &mut iter);
                if f <= EPS {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Sends up to `amount` units from `s` to `t` at minimum cost; returns
    /// `(flow, cost)`. Costs must be non-negative on forward edges.
    pub fn min_cost_flow(&mut self, s: usize, t: usize, amount: f64) -> (f64, f64) {
        let n = self.adj.len();
        let mut potential = vec![0.0; n];
        let (mut flow, mut cost) = (0.0, 0.0);
        while amount - flow > EPS {
            let mut dist = vec![f64::INFINITY; n];
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            dist[s] = 0.0;
            let mut heap = BinaryHeap::new();
            heap.push(State { dist: 0.0, node: s });
            while let Some(State { dist: d, node: v }) = heap.pop() {
                if d > dist[v] {
                    continue;
                }
                for (i, e) in self.adj[v].iter().enumerate() {
                    if e.cap <= EPS {
                        continue;
                    }
                    let reduced = (e.cost + potential[v] - potential[e.to]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[e.to] {
                        dist[e.to] = nd;
                        prev[e.to] = Some((v, i));
                        heap.push(State { dist: nd, node: e.to });
                    }
                }
            }
            if !dist[t].is_finite() {
                break;
            }
            for (p, d) in potential.iter_mut().zip(&dist) {
                if d.is_finite() {
                    *p += d;
                }
            }
            let mut push = amount - flow;
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                push = push.min(self.adj[u][i].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                let e = &mut self.adj[u][i];
                e.cap -= push;
                cost += push * e.cost;
                let (to, rev) = (e.to, e.rev);
                self.adj[to][rev].cap += push;
                v = u;
            }
            flow += push;
        }
        (flow, cost)
    }
}

#[derive(PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| self.node.cmp(&other.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_flow_small_network() {
        // classic 6-node example with max flow 23
        let mut g = FlowGraph::new(6);
        for &(a, b, c) in &[
            (0, 1, 16.0),
            (0, 2, 13.0),
            (1, 2, 10.0),
            (2, 1, 4.0),
            (1, 3, 12.0),
            (3, 2, 9.0),
            (2, 4, 14.0),
            (4, 3, 7.0),
            (3, 5, 20.0),
            (4, 5, 4.0),
        ] {
            g.add_edge(a, b, c);
        }
        assert!((g.max_flow(0, 5) - 23.0).abs() < 1e-12);
    }

    #[test]
    fn min_cost_flow_assignment() {
        // 2x2 assignment with costs [[1, 3], [2, 5]]: the anti-diagonal 1/2 * (3 + 2) wins
        let mut g = FlowGraph::new(6);
        g.add_edge_with_cost(0, 1, 0.5, 0.0);
        g.add_edge_with_cost(0, 2, 0.5, 0.0);
        g.add_edge_with_cost(3, 5, 0.5, 0.0);
        g.add_edge_with_cost(4, 5, 0.5, 0.0);
        g.add_edge_with_cost(1, 3, 1.0, 1.0);
        g.add_edge_with_cost(1, 4, 1.0, 3.0);
        g.add_edge_with_cost(2, 3, 1.0, 2.0);
        g.add_edge_with_cost(2, 4, 1.0, 5.0);
        let (flow, cost) = g.min_cost_flow(0, 5, 1.0);
        assert!((flow - 1.0).abs() < 1e-12);
        assert!((cost - 2.5).abs() < 1e-12, "{cost}");
    }
}
