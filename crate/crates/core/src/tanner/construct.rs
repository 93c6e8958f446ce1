//! Random (dv, dc)-regular graphs from the configuration model, with
//! parallel-edge repair and short-cycle breaking by edge swaps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::girth::{girth_of, Bfs};
use super::{TannerError, TannerGraph};

/// Independent resamples before giving up.
pub const DEFAULT_ATTEMPTS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionParams {
    pub n: usize,
    pub dv: usize,
    pub dc: usize,
    pub girth_min: usize,
    pub seed: u64,
    pub attempts: usize,
}

impl ConstructionParams {
    pub fn new(n: usize, dv: usize, dc: usize, girth_min: usize, seed: u64) -> Self {
        ConstructionParams {
            n,
            dv,
            dc,
            girth_min,
            seed,
            attempts: DEFAULT_ATTEMPTS,
        }
    }
}

/// Random regular graph with girth at least `girth_min`, deterministic in `seed`.
pub fn build_regular_graph(
    n: usize,
    dv: usize,
    dc: usize,
    girth_min: usize,
    seed: u64,
) -> Result<TannerGraph, TannerError> {
    ConstructionParams::new(n, dv, dc, girth_min, seed).build()
}

impl ConstructionParams {
    pub fn build(&self) -> Result<TannerGraph, TannerError> {
        let ConstructionParams {
            n,
            dv,
            dc,
            girth_min,
            ..
        } = *self;
        if n == 0 || dv == 0 || dc == 0 {
            return Err(TannerError::Parameter("n, dv and dc must be positive".into()));
        }
        if (n * dv) % dc != 0 {
            return Err(TannerError::Parameter(format!(
                "n·dv = {} is not divisible by dc = {dc}",
                n * dv
            )));
        }
        if girth_min < 4 || girth_min % 2 != 0 {
            return Err(TannerError::Parameter(format!(
                "girth_min must be even and at least 4, got {girth_min}"
            )));
        }
        let m = n * dv / dc;
        if dc > n || dv > m {
            return Err(TannerError::Parameter(format!(
                "degrees ({dv}, {dc}) do not fit n = {n}, m = {m} without parallel edges"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut best = 0;
        for _ in 0..self.attempts.max(1) {
            let mut edges = Sampler::configuration(n, m, dv, dc, &mut rng);
            if !edges.repair_parallel(&mut rng) {
                continue;
            }
            edges.break_short_cycles(girth_min, &mut rng);
            let g = girth_of(&edges.var_adj, &edges.chk_adj).unwrap_or(usize::MAX);
            if g >= girth_min {
                return TannerGraph::from_check_lists(n, edges.chk_adj);
            }
            best = best.max(g);
        }
        Err(TannerError::Construction {
            target: girth_min,
            attempts: self.attempts.max(1),
            best,
        })
    }
}

struct Sampler {
    /// Edge list `(var, check)`; adjacency lists are kept in sync.
    edges: Vec<(usize, usize)>,
    var_adj: Vec<Vec<usize>>,
    chk_adj: Vec<Vec<usize>>,
}

impl Sampler {
    fn configuration(n: usize, m: usize, dv: usize, dc: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut sockets: Vec<usize> = (0..m).flat_map(|j| std::iter::repeat_n(j, dc)).collect();
        sockets.shuffle(rng);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| std::iter::repeat_n(i, dv))
            .zip(sockets)
            .collect();
        let mut var_adj = vec![Vec::with_capacity(dv); n];
        let mut chk_adj = vec![Vec::with_capacity(dc); m];
        for &(i, j) in &edges {
            var_adj[i].push(j);
            chk_adj[j].push(i);
        }
        Sampler {
            edges,
            var_adj,
            chk_adj,
        }
    }

    fn multiplicity(&self, i: usize, j: usize) -> usize {
        self.var_adj[i].iter().filter(|&&k| k == j).count()
    }

    fn remove(&mut self, i: usize, j: usize) {
        let p = self.var_adj[i].iter().position(|&k| k == j).unwrap();
        self.var_adj[i].swap_remove(p);
        let p = self.chk_adj[j].iter().position(|&k| k == i).unwrap();
        self.chk_adj[j].swap_remove(p);
    }

    fn insert(&mut self, i: usize, j: usize) {
        self.var_adj[i].push(j);
        self.chk_adj[j].push(i);
    }

    /// Rewires edges `a = (i, j)` and `b = (i2, j2)` into `(i, j2)` and `(i2, j)`.
    fn swap(&mut self, a: usize, b: usize) {
        let (i, j) = self.edges[a];
        let (i2, j2) = self.edges[b];
        self.remove(i, j);
        self.remove(i2, j2);
        self.insert(i, j2);
        self.insert(i2, j);
        self.edges[a] = (i, j2);
        self.edges[b] = (i2, j);
    }

    fn swap_is_simple(&self, a: usize, b: usize) -> bool {
        let (i, j) = self.edges[a];
        let (i2, j2) = self.edges[b];
        i != i2 && j != j2 && self.multiplicity(i, j2) == 0 && self.multiplicity(i2, j) == 0
    }

    fn repair_parallel(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let budget = 100 * self.edges.len() + 100;
        let mut tries = 0;
        loop {
            let bad: Vec<usize> = (0..self.edges.len())
                .filter(|&e| {
                    let (i, j) = self.edges[e];
                    self.multiplicity(i, j) > 1
                })
                .collect();
            if bad.is_empty() {
                return true;
            }
            for a in bad {
                let (i, j) = self.edges[a];
                if self.multiplicity(i, j) < 2 {
                    continue;
                }
                loop {
                    tries += 1;
                    if tries > budget {
                        return false;
                    }
                    let b = rng.random_range(0..self.edges.len());
                    if self.swap_is_simple(a, b) {
                        self.swap(a, b);
                        break;
                    }
                }
            }
        }
    }

    /// Swaps edges that sit on cycles shorter than `girth_min`. A swap is kept
    /// only if both new edges lie on no short cycle, so the set of short
    /// cycles shrinks monotonically.
    fn break_short_cycles(&mut self, girth_min: usize, rng: &mut ChaCha8Rng) {
        let nodes = self.var_adj.len() + self.chk_adj.len();
        let mut bfs = Bfs::new(nodes);
        let num_edges = self.edges.len();
        let budget = 200 * num_edges + 1000;
        let mut tries = 0;
        let mut pending: Vec<usize> = (0..num_edges).collect();
        while let Some(a) = pending.pop() {
            let (i, j) = self.edges[a];
            if bfs
                .cycle_through_edge(&self.var_adj, &self.chk_adj, i, j, girth_min)
                .is_none()
            {
                continue;
            }
            loop {
                tries += 1;
                if tries > budget {
                    return;
                }
                let b = rng.random_range(0..num_edges);
                if !self.swap_is_simple(a, b) {
                    continue;
                }
                self.swap(a, b);
                let (p, q) = self.edges[a];
                let (r, s) = self.edges[b];
                let ok = bfs
                    .cycle_through_edge(&self.var_adj, &self.chk_adj, p, q, girth_min)
                    .is_none()
                    && bfs
                        .cycle_through_edge(&self.var_adj, &self.chk_adj, r, s, girth_min)
                        .is_none();
                if ok {
                    break;
                }
                self.swap(a, b);
            }
        }
    }
}
