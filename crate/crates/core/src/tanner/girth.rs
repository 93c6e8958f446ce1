//! Shortest cycles in bipartite graphs by breadth-first search.

use std::collections::VecDeque;

use super::TannerGraph;

/// Scratch state for repeated BFS over a bipartite graph with node ids
/// `0..n` for variables and `n..n+m` for checks.
pub(crate) struct Bfs {
    dist: Vec<u32>,
    parent: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
    queue: VecDeque<u32>,
}

impl Bfs {
    pub(crate) fn new(nodes: usize) -> Self {
        Bfs {
            dist: vec![0; nodes],
            parent: vec![u32::MAX; nodes],
            stamp: vec![0; nodes],
            epoch: 0,
            queue: VecDeque::new(),
        }
    }

    fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.queue.clear();
    }

    fn visit(&mut self, v: u32, d: u32, p: u32) {
        self.stamp[v as usize] = self.epoch;
        self.dist[v as usize] = d;
        self.parent[v as usize] = p;
        self.queue.push_back(v);
    }

    fn seen(&self, v: u32) -> bool {
        self.stamp[v as usize] == self.epoch
    }

    /// Length of the shortest cycle through `root`, if shorter than `bound`.
    pub(crate) fn cycle_through_node(
        &mut self,
        var_adj: &[Vec<usize>],
        chk_adj: &[Vec<usize>],
        root: usize,
        bound: usize,
    ) -> Option<usize> {
        let n = var_adj.len();
        self.reset();
        self.visit(root as u32, 0, u32::MAX);
        let mut best = bound;
        while let Some(u) = self.queue.pop_front() {
            let du = self.dist[u as usize] as usize;
            if 2 * du + 1 >= best {
                break;
            }
            let pu = self.parent[u as usize];
            let nbrs: &[usize] = if (u as usize) < n {
                &var_adj[u as usize]
            } else {
                &chk_adj[u as usize - n]
            };
            let offset = if (u as usize) < n { n } else { 0 };
            for &w in nbrs {
                let w = (w + offset) as u32;
                if w == pu {
                    continue;
                }
                if self.seen(w) {
                    let len = du + self.dist[w as usize] as usize + 1;
                    best = best.min(len);
                } else {
                    self.visit(w, du as u32 + 1, u);
                }
            }
        }
        (best < bound).then_some(best)
    }

    /// Shortest cycle containing edge `(var, check)`, if shorter than `bound`.
    pub(crate) fn cycle_through_edge(
        &mut self,
        var_adj: &[Vec<usize>],
        chk_adj: &[Vec<usize>],
        var: usize,
        check: usize,
        bound: usize,
    ) -> Option<usize> {
        let n = var_adj.len();
        let target = (n + check) as u32;
        self.reset();
        self.visit(var as u32, 0, u32::MAX);
        while let Some(u) = self.queue.pop_front() {
            let du = self.dist[u as usize] as usize;
            // a path of length du + 1 to the target closes a cycle of du + 2
            if du + 2 >= bound {
                break;
            }
            let is_var = (u as usize) < n;
            let nbrs: &[usize] = if is_var {
                &var_adj[u as usize]
            } else {
                &chk_adj[u as usize - n]
            };
            for &w in nbrs {
                let w = if is_var { (w + n) as u32 } else { w as u32 };
                if u as usize == var && w == target {
                    continue;
                }
                if w == target {
                    return Some(du + 2);
                }
                if !self.seen(w) {
                    self.visit(w, du as u32 + 1, u);
                }
            }
        }
        None
    }
}

/// Girth of the graph, `None` for forests.
pub fn girth(graph: &TannerGraph) -> Option<usize> {
    girth_of(&graph.var_adj, &graph.chk_adj)
}

pub(crate) fn girth_of(var_adj: &[Vec<usize>], chk_adj: &[Vec<usize>]) -> Option<usize> {
    let nodes = var_adj.len() + chk_adj.len();
    let mut bfs = Bfs::new(nodes);
    let mut best = usize::MAX;
    // every cycle passes through some variable node
    for root in 0..var_adj.len() {
        if let Some(c) = bfs.cycle_through_node(var_adj, chk_adj, root, best) {
            best = c;
            if best == 4 {
                break;
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

/// Shortest cycle through the edge `(var, check)`, `None` if the edge is a bridge.
pub fn shortest_cycle_through_edge(graph: &TannerGraph, var: usize, check: usize) -> Option<usize> {
    let mut bfs = Bfs::new(graph.n() + graph.m());
    bfs.cycle_through_edge(&graph.var_adj, &graph.chk_adj, var, check, usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tanner::example1_graph;

    // Oracle: exhaustive search over simple cycles by DFS, fine for tiny graphs.
    fn girth_by_dfs(g: &TannerGraph) -> Option<usize> {
        let n = g.n();
        let total = n + g.m();
        let nbrs = |u: usize| -> Vec<usize> {
            if u < n {
                g.var_neighbors(u).iter().map(|&j| j + n).collect()
            } else {
                g.check_neighbors(u - n).to_vec()
            }
        };
        fn dfs(
            start: usize,
            u: usize,
            depth: usize,
            on_path: &mut Vec<bool>,
            best: &mut usize,
            nbrs: &dyn Fn(usize) -> Vec<usize>,
        ) {
            if depth >= *best {
                return;
            }
            for w in nbrs(u) {
                if w == start && depth >= 2 {
                    *best = (*best).min(depth + 1);
                } else if !on_path[w] && w > start {
                    on_path[w] = true;
                    dfs(start, w, depth + 1, on_path, best, nbrs);
                    on_path[w] = false;
                }
            }
        }
        let mut best = usize::MAX;
        for s in 0..total {
            let mut on_path = vec![false; total];
            on_path[s] = true;
            dfs(s, s, 0, &mut on_path, &mut best, &nbrs);
        }
        (best != usize::MAX).then_some(best)
    }

    #[test]
    fn four_cycle() {
        let g = TannerGraph::from_dense_matrix(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(girth(&g), Some(4));
        assert_eq!(shortest_cycle_through_edge(&g, 0, 0), Some(4));
    }

    #[test]
    fn tree_has_no_cycle() {
        let h = vec![vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 1, 1]];
        let g = TannerGraph::from_dense_matrix(&h).unwrap();
        assert_eq!(girth(&g), None);
        assert_eq!(shortest_cycle_through_edge(&g, 1, 0), None);
    }

    #[test]
    fn example1_girth_matches_dfs_oracle() {
        let g = example1_graph();
        let expected = girth_by_dfs(&g);
        assert_eq!(girth(&g), expected);
        assert_eq!(expected, Some(6));
    }

    #[test]
    fn hexagon() {
        // 3 variables, 3 checks in a single 6-cycle
        let h = vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]];
        let g = TannerGraph::from_dense_matrix(&h).unwrap();
        assert_eq!(girth(&g), Some(6));
        assert_eq!(girth_by_dfs(&g), Some(6));
        assert_eq!(shortest_cycle_through_edge(&g, 0, 0), Some(6));
    }
}
