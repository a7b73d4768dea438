use std::cmp::Ordering as CmpOrdering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use dashmap::{DashMap, DashSet};

use super::tree::{solution_key, MatchContext, PartialTree};
use super::{Query, SearchConfig, SearchOutcome, SearchStats, Solution, StopReason};
use crate::graph::{EdgeId, Graph, NodeId};

/// A queued (tree, edge) pair; the edge is incident to the tree's root.
struct Pair {
    tree: Arc<PartialTree>,
    edge: EdgeId,
    matched: u32,
    specificity: f64,
}

impl Pair {
    fn new(tree: Arc<PartialTree>, edge: EdgeId, graph: &Graph) -> Pair {
        Pair {
            matched: tree.coverage().count_ones(),
            specificity: graph.specificity(edge),
            tree,
            edge,
        }
    }
}

impl Ord for Pair {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        self.matched
            .cmp(&other.matched)
            .then_with(|| other.tree.size().cmp(&self.tree.size()))
            .then_with(|| self.specificity.total_cmp(&other.specificity))
            .then_with(|| other.tree.signature().cmp(&self.tree.signature()))
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

impl PartialOrd for Pair {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Pair {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == CmpOrdering::Equal
    }
}

impl Eq for Pair {}

/// Trees sharing a root and the same merge summary.
struct Group {
    coverage: u64,
    solo: u64,
    classes: Box<[NodeId]>,
    trees: Vec<Arc<PartialTree>>,
}

#[derive(Default)]
struct Counters {
    trees_built: AtomicU64,
    partial_trees: AtomicU64,
    grow_attempts: AtomicU64,
    merges: AtomicU64,
    steals: AtomicU64,
}

struct Found {
    list: Vec<Solution>,
    first: Option<Duration>,
    last: Option<Duration>,
}

pub(crate) type Sink<'a> = &'a (dyn Fn(&Solution) + Sync);

/// Shared state of one query evaluation.
pub struct Search<'g> {
    ctx: MatchContext<'g>,
    config: SearchConfig,
    history: DashSet<u128>,
    trees_by_root: DashMap<NodeId, Vec<Group>>,
    queues: Vec<Mutex<BinaryHeap<Pair>>>,
    queue_lens: Vec<AtomicUsize>,
    pending: AtomicUsize,
    stop: AtomicBool,
    reason: Mutex<Option<StopReason>>,
    solution_keys: DashSet<u128>,
    found: Mutex<Found>,
    counters: Counters,
    seeds: usize,
    start: Instant,
}

impl<'g> Search<'g> {
    /// Builds the search state and seeds it: one single-node tree per
    /// matching node, and its incident edges spread round-robin over the
    /// worker queues.
    pub fn new(graph: &'g Graph, query: &Query, config: SearchConfig) -> Search<'g> {
        let workers = config.workers.max(1);
        let ctx = MatchContext::new(graph, query.keywords());
        let mut search = Search {
            ctx,
            config: SearchConfig { workers, ..config },
            history: DashSet::new(),
            trees_by_root: DashMap::new(),
            queues: (0..workers).map(|_| Mutex::new(BinaryHeap::new())).collect(),
            queue_lens: (0..workers).map(|_| AtomicUsize::new(0)).collect(),
            pending: AtomicUsize::new(0),
            stop: AtomicBool::new(false),
            reason: Mutex::new(None),
            solution_keys: DashSet::new(),
            found: Mutex::new(Found {
                list: Vec::new(),
                first: None,
                last: None,
            }),
            counters: Counters::default(),
            seeds: 0,
            start: Instant::now(),
        };
        search.seed();
        search
    }

    fn seed(&mut self) {
        let nodes = self.ctx.matching_nodes();
        self.seeds = nodes.len();
        let mut next_queue = 0usize;
        for n in nodes {
            let tree = Arc::new(PartialTree::seed(&self.ctx, n));
            self.history.insert(tree.signature());
            self.counters.trees_built.fetch_add(1, Ordering::Relaxed);
            if tree.coverage() == self.ctx.full {
                self.record(&tree, None);
                continue;
            }
            self.counters.partial_trees.fetch_add(1, Ordering::Relaxed);
            for nb in self.ctx.graph.neighbors(n) {
                let pair = Pair::new(Arc::clone(&tree), nb.edge, self.ctx.graph);
                self.queues[next_queue].get_mut().unwrap().push(pair);
                self.queue_lens[next_queue].fetch_add(1, Ordering::Relaxed);
                self.pending.fetch_add(1, Ordering::Relaxed);
                next_queue = (next_queue + 1) % self.queues.len();
            }
        }
    }

    /// Number of single-node trees created at seeding.
    pub fn seed_count(&self) -> usize {
        self.seeds
    }

    /// Current length of every worker queue.
    pub fn queue_lengths(&self) -> Vec<usize> {
        self.queue_lens.iter().map(|l| l.load(Ordering::SeqCst)).collect()
    }

    /// Total number of queued pairs.
    pub fn queued_pairs(&self) -> usize {
        self.queue_lengths().iter().sum()
    }

    /// Runs to a stop condition.
    pub fn run(self) -> SearchOutcome {
        self.run_streaming(None, &|_| {})
    }

    /// Runs to a stop condition, calling `sink` on each solution in
    /// discovery order. Setting `cancel` stops the workers at their next
    /// check.
    pub fn run_streaming(self, cancel: Option<&AtomicBool>, sink: Sink<'_>) -> SearchOutcome {
        {
            let found = self.found.lock().unwrap();
            for s in &found.list {
                sink(s);
            }
        }
        if self.limit_reached() {
            self.halt(StopReason::MaxSolutions);
        }
        if self.config.timeout == Some(Duration::ZERO) {
            self.halt(StopReason::Timeout);
        }
        let workers = self.queues.len();
        std::thread::scope(|scope| {
            for i in 0..workers {
                let this = &self;
                scope.spawn(move || this.worker(i, cancel, sink));
            }
        });
        let total = self.start.elapsed();
        let reason = self.reason.lock().unwrap().unwrap_or(StopReason::Exhausted);
        let found = self.found.into_inner().unwrap();
        let stats = SearchStats {
            first_solution: found.first,
            last_solution: found.last,
            total,
            solutions: found.list.len(),
            seeds: self.seeds,
            trees_built: self.counters.trees_built.load(Ordering::Relaxed),
            partial_trees: self.counters.partial_trees.load(Ordering::Relaxed),
            grow_attempts: self.counters.grow_attempts.load(Ordering::Relaxed),
            merges: self.counters.merges.load(Ordering::Relaxed),
            steals: self.counters.steals.load(Ordering::Relaxed),
            workers,
            stop: reason,
        };
        SearchOutcome {
            solutions: found.list,
            stats,
        }
    }

    fn halt(&self, reason: StopReason) {
        let mut r = self.reason.lock().unwrap();
        if r.is_none() {
            *r = Some(reason);
        }
        self.stop.store(true, Ordering::SeqCst);
    }

    fn limit_reached(&self) -> bool {
        match self.config.max_solutions {
            Some(m) => self.found.lock().unwrap().list.len() >= m,
            None => false,
        }
    }

    fn should_stop(&self, cancel: Option<&AtomicBool>) -> bool {
        if self.stop.load(Ordering::SeqCst) {
            return true;
        }
        if cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
            self.halt(StopReason::Cancelled);
            return true;
        }
        if let Some(t) = self.config.timeout {
            if self.start.elapsed() >= t {
                self.halt(StopReason::Timeout);
                return true;
            }
        }
        false
    }

    fn worker(&self, i: usize, cancel: Option<&AtomicBool>, sink: Sink<'_>) {
        let mut idle_rounds = 0u32;
        loop {
            if self.should_stop(cancel) {
                return;
            }
            match self.pop(i) {
                Some(pair) => {
                    idle_rounds = 0;
                    self.process(pair, i, sink);
                    self.pending.fetch_sub(1, Ordering::SeqCst);
                }
                None => {
                    if self.pending.load(Ordering::SeqCst) == 0 {
                        return;
                    }
                    idle_rounds += 1;
                    if idle_rounds < 64 {
                        std::thread::yield_now();
                    } else {
                        std::thread::sleep(Duration::from_micros(50));
                    }
                }
            }
        }
    }

    fn pop(&self, i: usize) -> Option<Pair> {
        if let Some(p) = self.queues[i].lock().unwrap().pop() {
            self.queue_lens[i].fetch_sub(1, Ordering::SeqCst);
            return Some(p);
        }
        let victim = self
            .queue_lens
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, l)| (j, l.load(Ordering::SeqCst)))
            .filter(|(_, l)| *l > 0)
            .max_by_key(|(j, l)| (*l, std::cmp::Reverse(*j)))?
            .0;
        let p = self.queues[victim].lock().unwrap().pop()?;
        self.queue_lens[victim].fetch_sub(1, Ordering::SeqCst);
        self.counters.steals.fetch_add(1, Ordering::Relaxed);
        Some(p)
    }

    fn push_grows(&self, tree: &Arc<PartialTree>, i: usize) {
        let g = self.ctx.graph;
        let pairs: Vec<Pair> = g
            .neighbors(tree.root())
            .filter(|nb| !tree.contains_node(nb.other))
            .map(|nb| Pair::new(Arc::clone(tree), nb.edge, g))
            .collect();
        if pairs.is_empty() {
            return;
        }
        self.pending.fetch_add(pairs.len(), Ordering::SeqCst);
        let n = pairs.len();
        let mut q = self.queues[i].lock().unwrap();
        q.extend(pairs);
        self.queue_lens[i].fetch_add(n, Ordering::SeqCst);
    }

    fn process(&self, pair: Pair, i: usize, sink: Sink<'_>) {
        self.counters.grow_attempts.fetch_add(1, Ordering::Relaxed);
        let Some(grown) = pair.tree.grow(pair.edge, &self.ctx) else {
            return;
        };
        if !self.history.insert(grown.signature()) {
            return;
        }
        self.counters.trees_built.fetch_add(1, Ordering::Relaxed);
        let grown = Arc::new(grown);
        if grown.coverage() == self.ctx.full {
            self.record(&grown, Some(sink));
            return;
        }
        self.counters.partial_trees.fetch_add(1, Ordering::Relaxed);
        self.push_grows(&grown, i);

        let mut worklist = vec![grown];
        while let Some(tree) = worklist.pop() {
            if self.stop.load(Ordering::Relaxed) {
                return;
            }
            for partner in self.register(&tree) {
                let Some(merged) = PartialTree::merge(&tree, &partner, &self.ctx) else {
                    continue;
                };
                self.counters.merges.fetch_add(1, Ordering::Relaxed);
                if !self.history.insert(merged.signature()) {
                    continue;
                }
                self.counters.trees_built.fetch_add(1, Ordering::Relaxed);
                let merged = Arc::new(merged);
                if merged.coverage() == self.ctx.full {
                    self.record(&merged, Some(sink));
                } else {
                    self.counters.partial_trees.fetch_add(1, Ordering::Relaxed);
                    self.push_grows(&merged, i);
                    worklist.push(merged);
                }
            }
        }
    }

    /// Adds `tree` to treesByRoot and returns the trees it may merge with,
    /// as of the moment of insertion.
    fn register(&self, tree: &Arc<PartialTree>) -> Vec<Arc<PartialTree>> {
        let mut entry = self.trees_by_root.entry(tree.root()).or_default();
        let groups = entry.value_mut();
        let (cov, solo, classes) = (tree.coverage(), tree.solo(), tree.classes());
        let mut partners = Vec::new();
        let mut placed = false;
        for group in groups.iter_mut() {
            if !placed && group.coverage == cov && group.solo == solo && &*group.classes == classes {
                group.trees.push(Arc::clone(tree));
                placed = true;
            }
            if PartialTree::summaries_compatible(cov, solo, classes, group.coverage, group.solo, &group.classes) {
                partners.extend(
                    group
                        .trees
                        .iter()
                        .filter(|t| !Arc::ptr_eq(t, tree))
                        .cloned(),
                );
            }
        }
        if !placed {
            groups.push(Group {
                coverage: cov,
                solo,
                classes: classes.into(),
                trees: vec![Arc::clone(tree)],
            });
        }
        partners
    }

    fn record(&self, tree: &Arc<PartialTree>, sink: Option<Sink<'_>>) {
        if !tree.is_minimal_answer(&self.ctx) {
            return;
        }
        if !self
            .solution_keys
            .insert(solution_key(tree.root(), tree.edge_hash(), tree.size()))
        {
            return;
        }
        let mut found = self.found.lock().unwrap();
        if let Some(m) = self.config.max_solutions {
            if found.list.len() >= m {
                drop(found);
                self.halt(StopReason::MaxSolutions);
                return;
            }
        }
        let at = self.start.elapsed();
        let solution = Solution {
            root: tree.root(),
            edges: tree.edges(),
            nodes: tree.nodes(),
            found_at: at,
            sequence: found.list.len(),
        };
        found.first.get_or_insert(at);
        found.last = Some(at);
        if let Some(sink) = sink {
            sink(&solution);
        }
        found.list.push(solution);
        let reached = self.config.max_solutions.is_some_and(|m| found.list.len() >= m);
        drop(found);
        if reached {
            self.halt(StopReason::MaxSolutions);
        }
    }
}
