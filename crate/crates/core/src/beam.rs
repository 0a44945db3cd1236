//! Bounded beam search.
//!
//! Level `i` of the search tree holds yards reached with exactly `i`
//! reshuffles. Every node of a level is expanded by moving the topmost
//! blocker to each non-full stack; each child gets an upper bound from a
//! greedy playout and a lower bound. Children are ranked by upper bound, then
//! lower bound, and the `beta` best form the next level, minus those whose
//! lower bound shows they cannot beat the incumbent.
//!
//! The incumbent is always a concrete move list: the path to a child followed
//! by that child's playout.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::bounds::{lower_bound, LbKind};
use crate::policies::{playout, playout_until, PolicyId};
use crate::yard::{Move, Yard};

/// Beam width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Beta {
    /// Chosen from the block count by [`schedule_beta`].
    #[default]
    Auto,
    Width(usize),
    /// No truncation.
    Unbounded,
}

/// Policy used for the upper bound of each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UbPolicy {
    /// Chosen from the block count by [`schedule_policy`].
    #[default]
    Auto,
    Fixed(PolicyId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub beta: Beta,
    pub ub_policy: UbPolicy,
    pub lb_kind: LbKind,
    /// `None` runs until the search ends by itself.
    pub time_limit: Option<Duration>,
    /// Drop duplicate yards within a level.
    pub dedup: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beta: Beta::Auto,
            ub_policy: UbPolicy::Auto,
            lb_kind: LbKind::Ubalb,
            time_limit: Some(Duration::from_secs(1)),
            dedup: false,
        }
    }
}

impl BeamConfig {
    /// No truncation and no time limit: the search becomes exact.
    pub fn exhaustive() -> Self {
        BeamConfig {
            beta: Beta::Unbounded,
            time_limit: None,
            ..Self::default()
        }
    }

    pub fn resolved_beta(&self, blocks: usize) -> usize {
        match self.beta {
            Beta::Auto => schedule_beta(blocks),
            Beta::Width(w) => w.max(1),
            Beta::Unbounded => usize::MAX,
        }
    }

    pub fn resolved_policy(&self, blocks: usize) -> PolicyId {
        match self.ub_policy {
            UbPolicy::Auto => schedule_policy(blocks),
            UbPolicy::Fixed(p) => p,
        }
    }
}

/// Beam width by block count.
pub fn schedule_beta(blocks: usize) -> usize {
    match blocks {
        0..=39 => 800,
        40..=59 => 500,
        60..=79 => 300,
        80..=99 => 200,
        100..=119 => 100,
        _ => 50,
    }
}

/// Upper-bound policy by block count.
pub fn schedule_policy(blocks: usize) -> PolicyId {
    match blocks {
        0..=999 => PolicyId::Lookahead1,
        1000..=9999 => PolicyId::Difference1,
        _ => PolicyId::GroupAssign,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionStatus {
    Feasible,
    /// No complete move sequence was found.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolutionStatus,
    pub reshuffles: usize,
    /// Reshuffles and retrievals, replayable from the input yard.
    pub moves: Vec<Move>,
    pub proven_optimal: bool,
    pub levels_expanded: usize,
    pub nodes_generated: usize,
    pub nodes_pruned: usize,
    pub elapsed: Duration,
    /// Incumbent value at the start and after each level.
    pub cub_history: Vec<usize>,
}

impl Solution {
    pub fn is_feasible(&self) -> bool {
        self.status == SolutionStatus::Feasible
    }

    pub(crate) fn infeasible(elapsed: Duration) -> Self {
        Solution {
            status: SolutionStatus::Infeasible,
            reshuffles: 0,
            moves: Vec::new(),
            proven_optimal: false,
            levels_expanded: 0,
            nodes_generated: 0,
            nodes_pruned: 0,
            elapsed,
            cub_history: Vec::new(),
        }
    }
}

const INF: usize = usize::MAX;

struct Node {
    yard: Yard,
    ub: usize,
    lb: usize,
    trace: usize,
    seq: usize,
}

/// Moves leading from a parent node: one reshuffle plus the retrievals it
/// unlocked.
struct TraceEntry {
    parent: Option<usize>,
    moves: Vec<Move>,
}

fn path(trace: &[TraceEntry], mut at: usize) -> Vec<Move> {
    let mut chunks = Vec::new();
    loop {
        let entry = &trace[at];
        chunks.push(&entry.moves);
        match entry.parent {
            Some(p) => at = p,
            None => break,
        }
    }
    chunks.into_iter().rev().flatten().copied().collect()
}

/// Runs the bounded beam search on `yard`.
pub fn solve_bbs(yard: &Yard, config: &BeamConfig) -> Solution {
    let start = Instant::now();
    let deadline = config.time_limit.map(|d| start + d);
    let expired = || deadline.is_some_and(|d| Instant::now() >= d);

    let blocks = yard.len();
    let beta = config.resolved_beta(blocks);
    let policy = config.resolved_policy(blocks);

    let root_playout = playout(policy, yard, None);
    let mut cub = root_playout.ub();
    let mut incumbent = root_playout.completed.then_some(root_playout.moves);

    let mut root_yard = yard.clone();
    let mut root_moves = Vec::new();
    root_yard.retrieve_ready(&mut root_moves);
    let Ok(root_lb) = lower_bound(config.lb_kind, &root_yard) else {
        // Relaxed infeasibility implies the yard cannot be emptied.
        return Solution::infeasible(start.elapsed());
    };

    let mut trace = vec![TraceEntry {
        parent: None,
        moves: root_moves,
    }];
    let mut level = vec![Node {
        yard: root_yard,
        ub: cub,
        lb: root_lb,
        trace: 0,
        seq: 0,
    }];
    let mut seq = 1;
    let mut depth = 0;
    let mut truncated = false;
    let mut timed_out = false;
    let mut nodes_generated = 1;
    let mut nodes_pruned = 0;
    let mut levels_expanded = 0;
    let mut cub_history = vec![cub];

    if cub == root_lb {
        level.clear();
    }

    'search: while !level.is_empty() {
        let mut candidates = Vec::new();
        for node in &level {
            let Some((_, src, _)) = node.yard.pending_reshuffle() else {
                continue;
            };
            for to in 0..node.yard.width() {
                if to == src || node.yard.is_full(to) {
                    continue;
                }
                if expired() {
                    timed_out = true;
                    break 'search;
                }
                let mut child = node.yard.clone();
                let mut moves = vec![child.reshuffle_pending(to).expect("eligible stack")];
                child.retrieve_ready(&mut moves);
                let rollout = playout_until(policy, &child, None, deadline);
                if !rollout.completed && expired() {
                    timed_out = true;
                    break 'search;
                }
                let ub = rollout.ub();
                let lb = lower_bound(config.lb_kind, &child).unwrap_or(INF);
                trace.push(TraceEntry {
                    parent: Some(node.trace),
                    moves,
                });
                let at = trace.len() - 1;
                nodes_generated += 1;
                if ub != INF && ub + depth + 1 < cub {
                    cub = ub + depth + 1;
                    let mut full = path(&trace, at);
                    full.extend(rollout.moves);
                    incumbent = Some(full);
                }
                candidates.push(Node {
                    yard: child,
                    ub,
                    lb,
                    trace: at,
                    seq,
                });
                seq += 1;
            }
        }
        levels_expanded += 1;
        depth += 1;

        candidates.sort_by_key(|n| (n.ub, n.lb, n.seq));
        if config.dedup {
            let mut seen = HashSet::new();
            let before = candidates.len();
            candidates.retain(|n| seen.insert(n.yard.clone()));
            nodes_pruned += before - candidates.len();
        }
        let hopeless = |n: &Node| n.lb == INF || n.lb + depth >= cub;
        if candidates.len() > beta {
            if candidates[beta..].iter().any(|n| !hopeless(n)) {
                truncated = true;
            }
            nodes_pruned += candidates.len() - beta;
            candidates.truncate(beta);
        }
        let before = candidates.len();
        candidates.retain(|n| !hopeless(n));
        nodes_pruned += before - candidates.len();
        cub_history.push(cub);
        level = candidates;
    }

    let elapsed = start.elapsed();
    let Some(moves) = incumbent else {
        let mut out = Solution::infeasible(elapsed);
        out.levels_expanded = levels_expanded;
        out.nodes_generated = nodes_generated;
        out.nodes_pruned = nodes_pruned;
        return out;
    };
    if timed_out {
        cub_history.push(cub);
    }
    Solution {
        status: SolutionStatus::Feasible,
        reshuffles: cub,
        moves,
        proven_optimal: (!timed_out && !truncated) || cub == root_lb,
        levels_expanded,
        nodes_generated,
        nodes_pruned,
        elapsed,
        cub_history,
    }
}
