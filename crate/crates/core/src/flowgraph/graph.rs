//! Staged information flow graphs and integral max-flow.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{RepairBudget, SystemParams};

/// One repair stage: `failed[i]` is rebuilt from the nodes in `helpers[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRepair {
    pub failed: Vec<usize>,
    pub helpers: Vec<Vec<usize>>,
}

impl StageRepair {
    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if self.failed.len() != p.r {
            return bad(format!("{} failed nodes, expected r = {}", self.failed.len(), p.r));
        }
        if self.helpers.len() != self.failed.len() {
            return bad("one helper set per newcomer required".into());
        }
        if !distinct_in_range(&self.failed, p.n) {
            return bad(format!("failed set {:?} invalid", self.failed));
        }
        for (i, h) in self.failed.iter().zip(&self.helpers) {
            if h.len() != p.d {
                return bad(format!("newcomer {i} has {} helpers, expected d = {}", h.len(), p.d));
            }
            if !distinct_in_range(h, p.n) {
                return bad(format!("helper set {h:?} invalid"));
            }
            if h.iter().any(|x| self.failed.contains(x)) {
                return bad(format!("helper set {h:?} overlaps failed set {:?}", self.failed));
            }
        }
        Ok(())
    }
}

/// `k` nodes read at the end of `stage`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataCollector {
    pub stage: usize,
    pub nodes: Vec<usize>,
}

pub(crate) fn distinct_in_range(xs: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    xs.iter().all(|&x| x < n && !std::mem::replace(&mut seen[x], true))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Source,
    In(usize, usize),
    Mid(usize, usize),
    Out(usize, usize),
    Sink,
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Source => f.write_str("src"),
            Vertex::In(s, i) => write!(f, "in:{s}:{i}"),
            Vertex::Mid(s, i) => write!(f, "mid:{s}:{i}"),
            Vertex::Out(s, i) => write!(f, "out:{s}:{i}"),
            Vertex::Sink => f.write_str("dc"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Capacity {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(c) => write!(f, "{c}"),
            Capacity::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub cap: Capacity,
}

/// An information flow graph truncated at the data collector's stage, in the
/// form where every node keeps an `out` vertex at every stage (unrepaired
/// nodes are carried forward by infinite edges).
#[derive(Clone, Debug)]
pub struct InfoFlowGraph {
    pub params: SystemParams,
    pub budget: RepairBudget,
    pub schedule: Vec<StageRepair>,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    sink: usize,
}

/// Builds the graph with an infinite edge from each collector node to the sink.
pub fn build_graph(
    p: &SystemParams,
    budget: &RepairBudget,
    schedule: &[StageRepair],
    dc: &DataCollector,
) -> Result<InfoFlowGraph> {
    if dc.nodes.len() != p.k || !distinct_in_range(&dc.nodes, p.n) {
        return Err(Error::InvalidSchedule(format!(
            "data collector needs k = {} distinct nodes, got {:?}",
            p.k, dc.nodes
        )));
    }
    let demands: Vec<(usize, Capacity)> = dc.nodes.iter().map(|&i| (i, Capacity::Infinite)).collect();
    build_with_sink(p, budget, schedule, dc.stage, &demands)
}

/// Builds the graph with a sink fed by `h[i]` units from node `i` at `stage`.
pub fn build_demand_graph(
    p: &SystemParams,
    budget: &RepairBudget,
    schedule: &[StageRepair],
    stage: usize,
    h: &[u64],
) -> Result<InfoFlowGraph> {
    if h.len() != p.n {
        return Err(Error::Dimension(format!("demand has {} entries, n = {}", h.len(), p.n)));
    }
    let demands: Vec<(usize, Capacity)> = h
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0)
        .map(|(i, &x)| (i, Capacity::Finite(x)))
        .collect();
    build_with_sink(p, budget, schedule, stage, &demands)
}

fn build_with_sink(
    p: &SystemParams,
    budget: &RepairBudget,
    schedule: &[StageRepair],
    stage: usize,
    demands: &[(usize, Capacity)],
) -> Result<InfoFlowGraph> {
    if stage > schedule.len() {
        return Err(Error::InvalidSchedule(format!(
            "collector at stage {stage} but only {} stages scheduled",
            schedule.len()
        )));
    }
    let schedule = &schedule[..stage];
    for st in schedule {
        st.validate(p)?;
    }
    let mut vertices = vec![Vertex::Source];
    let mut edges = Vec::new();
    let mut out: Vec<usize> = Vec::with_capacity(p.n);
    for i in 0..p.n {
        vertices.push(Vertex::Out(0, i));
        out.push(vertices.len() - 1);
        edges.push(Edge { from: 0, to: vertices.len() - 1, cap: Capacity::Finite(budget.alpha) });
    }
    for (idx, st) in schedule.iter().enumerate() {
        let s = idx + 1;
        let base_in = vertices.len();
        for &i in &st.failed {
            vertices.push(Vertex::In(s, i));
        }
        let base_mid = vertices.len();
        for &i in &st.failed {
            vertices.push(Vertex::Mid(s, i));
        }
        for (a, helpers) in st.helpers.iter().enumerate() {
            for &h in helpers {
                edges.push(Edge { from: out[h], to: base_in + a, cap: Capacity::Finite(budget.beta1) });
            }
        }
        for a in 0..st.failed.len() {
            for b in 0..st.failed.len() {
                let cap = if a == b { Capacity::Infinite } else { Capacity::Finite(budget.beta2) };
                edges.push(Edge { from: base_in + a, to: base_mid + b, cap });
            }
        }
        let mut next = Vec::with_capacity(p.n);
        for i in 0..p.n {
            vertices.push(Vertex::Out(s, i));
            let v = vertices.len() - 1;
            match st.failed.iter().position(|&f| f == i) {
                Some(a) => edges.push(Edge { from: base_mid + a, to: v, cap: Capacity::Finite(budget.alpha) }),
                None => edges.push(Edge { from: out[i], to: v, cap: Capacity::Infinite }),
            }
            next.push(v);
        }
        out = next;
    }
    vertices.push(Vertex::Sink);
    let sink = vertices.len() - 1;
    for &(i, cap) in demands {
        edges.push(Edge { from: out[i], to: sink, cap });
    }
    Ok(InfoFlowGraph {
        params: *p,
        budget: *budget,
        schedule: schedule.to_vec(),
        vertices,
        edges,
        sink,
    })
}

impl InfoFlowGraph {
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn stage_count(&self) -> usize {
        self.schedule.len()
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        self.vertices.iter().position(|&x| x == v)
    }

    /// Stand-in for `∞`: one more than all finite capacities together.
    pub fn infinity(&self) -> u64 {
        1 + self
            .edges
            .iter()
            .map(|e| match e.cap {
                Capacity::Finite(c) => c,
                Capacity::Infinite => 0,
            })
            .sum::<u64>()
    }

    /// `from to capacity` per line, with symbolic vertex names.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", self.vertices[e.from], self.vertices[e.to], e.cap);
        }
        s
    }

    /// Total capacity of edges leaving `source_side` for its complement.
    pub fn cut_value(&self, source_side: &[bool]) -> u64 {
        let inf = self.infinity();
        self.edges
            .iter()
            .filter(|e| source_side[e.from] && !source_side[e.to])
            .map(|e| match e.cap {
                Capacity::Finite(c) => c,
                Capacity::Infinite => inf,
            })
            .sum()
    }
}

/// Maximum flow value and the source side of a minimum cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowResult {
    pub value: u64,
    pub source_side: Vec<bool>,
}

pub fn max_flow(g: &InfoFlowGraph) -> u64 {
    max_flow_with_cut(g, g.sink).value
}

/// Dinic's algorithm from the source to `sink`.
pub fn max_flow_with_cut(g: &InfoFlowGraph, sink: usize) -> FlowResult {
    let inf = g.infinity();
    let mut net = Dinic::new(g.vertices.len());
    for e in &g.edges {
        let c = match e.cap {
            Capacity::Finite(c) => c,
            Capacity::Infinite => inf,
        };
        net.add_edge(e.from, e.to, c);
    }
    let value = net.run(0, sink);
    let source_side = net.reachable(0);
    FlowResult { value, source_side }
}

struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new(), level: vec![0; n], iter: vec![0; n] }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: u64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0);
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, limit: u64) -> u64 {
        if u == t {
            return limit;
        }
        while self.iter[u] < self.head[u].len() {
            let e = self.head[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.cap[e]));
                if pushed > 0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    fn run(&mut self, s: usize, t: usize) -> u64 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, u64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p6432() -> SystemParams {
        SystemParams::new(6, 4, 3, 2).unwrap()
    }

    /// Nodes {0,1} then {2,3} repaired; collector reads 0, 1 and 2 after stage 2.
    fn fig6() -> (Vec<StageRepair>, DataCollector) {
        let sched = vec![
            StageRepair { failed: vec![0, 1], helpers: vec![vec![2, 3, 4, 5], vec![2, 3, 4, 5]] },
            StageRepair { failed: vec![2, 3], helpers: vec![vec![0, 1, 4, 5], vec![0, 1, 4, 5]] },
        ];
        (sched, DataCollector { stage: 2, nodes: vec![0, 1, 2] })
    }

    #[test]
    fn fig6_flow_is_19() {
        let (sched, dc) = fig6();
        let b = RepairBudget::new(19, 7, 2, 1).unwrap();
        let g = build_graph(&p6432(), &b, &sched, &dc).unwrap();
        let res = max_flow_with_cut(&g, g.sink());
        assert_eq!(res.value, 19);
        assert_eq!(g.cut_value(&res.source_side), 19);
    }

    #[test]
    fn stage_zero_collector() {
        let p = p6432();
        let b = RepairBudget::new(1, 7, 2, 1).unwrap();
        let g = build_graph(&p, &b, &[], &DataCollector { stage: 0, nodes: vec![3, 4, 5] }).unwrap();
        assert_eq!(max_flow(&g), 21);
    }

    #[test]
    fn fig2_topology() {
        let p = SystemParams::new(5, 3, 2, 2).unwrap();
        let b = RepairBudget::new(1, 3, 2, 1).unwrap();
        let sched = vec![StageRepair { failed: vec![1, 2], helpers: vec![vec![0, 3, 4], vec![0, 3, 4]] }];
        let g = build_graph(&p, &b, &sched, &DataCollector { stage: 1, nodes: vec![0, 1] }).unwrap();
        // src + 5 outs + 2 ins + 2 mids + 5 outs + dc
        assert_eq!(g.vertices().len(), 16);
        let count = |pred: &dyn Fn(&Edge) -> bool| g.edges().iter().filter(|e| pred(e)).count();
        assert_eq!(count(&|e| e.cap == Capacity::Finite(2)), 6);
        assert_eq!(count(&|e| e.cap == Capacity::Finite(1)), 2);
        let list = g.to_edge_list();
        assert!(list.contains("out:0:0 in:1:1 2\n"));
        assert!(list.contains("in:1:1 mid:1:2 1\n"));
        assert!(list.contains("in:1:1 mid:1:1 inf\n"));
        assert!(list.contains("out:0:3 out:1:3 inf\n"));
        assert!(list.contains("out:1:0 dc inf\n"));
    }

    #[test]
    fn schedule_validation() {
        let p = p6432();
        let b = RepairBudget::new(1, 7, 2, 1).unwrap();
        let dc = DataCollector { stage: 1, nodes: vec![0, 1, 2] };
        let overlap = StageRepair { failed: vec![0, 1], helpers: vec![vec![1, 2, 3, 4], vec![2, 3, 4, 5]] };
        assert!(build_graph(&p, &b, &[overlap], &dc).is_err());
        let short = StageRepair { failed: vec![0, 1], helpers: vec![vec![2, 3, 4], vec![2, 3, 4, 5]] };
        assert!(build_graph(&p, &b, &[short], &dc).is_err());
        let wrong_r = StageRepair { failed: vec![0], helpers: vec![vec![2, 3, 4, 5]] };
        assert!(build_graph(&p, &b, &[wrong_r], &dc).is_err());
        let bad_dc = DataCollector { stage: 0, nodes: vec![0, 0, 1] };
        assert!(build_graph(&p, &b, &[], &bad_dc).is_err());
    }

    /// Minimum over all source/sink bipartitions, by brute force.
    fn brute_min_cut(g: &InfoFlowGraph) -> u64 {
        let nv = g.vertices().len();
        let free: Vec<usize> = (1..nv).filter(|&v| v != g.sink()).collect();
        let mut best = u64::MAX;
        for mask in 0u64..(1 << free.len()) {
            let mut side = vec![false; nv];
            side[0] = true;
            for (b, &v) in free.iter().enumerate() {
                side[v] = mask >> b & 1 == 1;
            }
            best = best.min(g.cut_value(&side));
        }
        best
    }

    #[test]
    fn max_flow_matches_brute_force_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = SystemParams::new(4, 2, 2, 2).unwrap();
        for _ in 0..12 {
            let mut ids: Vec<usize> = (0..4).collect();
            ids.shuffle(&mut rng);
            let failed = vec![ids[0], ids[1]];
            let helpers = vec![vec![ids[2], ids[3]], vec![ids[2], ids[3]]];
            let sched = vec![StageRepair { failed, helpers }];
            let mut nodes: Vec<usize> = (0..4).collect();
            nodes.shuffle(&mut rng);
            let b = RepairBudget::new(
                1,
                rand::Rng::gen_range(&mut rng, 1..6),
                rand::Rng::gen_range(&mut rng, 0..4),
                rand::Rng::gen_range(&mut rng, 0..4),
            )
            .unwrap();
            let g = build_graph(&p, &b, &sched, &DataCollector { stage: 1, nodes: nodes[..2].to_vec() })
                .unwrap();
            assert_eq!(max_flow(&g), brute_min_cut(&g), "{b:?} {sched:?}");
        }
    }

    proptest! {
        #[test]
        fn relabeling_preserves_flow(seed in any::<u64>(), alpha in 1u64..10, b1 in 0u64..4, b2 in 0u64..4) {
            let p = p6432();
            let b = RepairBudget::new(1, alpha, b1, b2).unwrap();
            let (sched, dc) = fig6();
            let mut perm: Vec<usize> = (0..6).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let map = |v: &Vec<usize>| v.iter().map(|&x| perm[x]).collect::<Vec<_>>();
            let relabeled: Vec<StageRepair> = sched
                .iter()
                .map(|s| StageRepair { failed: map(&s.failed), helpers: s.helpers.iter().map(map).collect() })
                .collect();
            let dc2 = DataCollector { stage: dc.stage, nodes: map(&dc.nodes) };
            let f1 = max_flow(&build_graph(&p, &b, &sched, &dc).unwrap());
            let f2 = max_flow(&build_graph(&p, &b, &relabeled, &dc2).unwrap());
            prop_assert_eq!(f1, f2);
        }
    }
}
