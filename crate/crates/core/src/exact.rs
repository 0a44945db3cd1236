//! Depth-first branch and bound for small instances.

use std::time::{Duration, Instant};

use crate::beam::{Solution, SolutionStatus};
use crate::bounds::{lower_bound, LbKind};
use crate::policies::{playout, PolicyId};
use crate::yard::{Move, Yard};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStatus {
    /// The tree was exhausted; `best` is optimal.
    Optimal,
    /// The node cap stopped the search with a solution in hand.
    FeasibleBound,
    /// The tree was exhausted without finding any solution.
    Infeasible,
    /// The time limit stopped the search.
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub status: ExactStatus,
    pub best: Option<Solution>,
    /// Best proven global lower bound.
    pub lower_bound: usize,
    pub nodes: usize,
}

impl ExactResult {
    pub fn optimum(&self) -> Option<usize> {
        match (self.status, &self.best) {
            (ExactStatus::Optimal, Some(s)) => Some(s.reshuffles),
            _ => None,
        }
    }
}

enum Stop {
    Time,
    Nodes,
}

struct Search {
    lb_kind: LbKind,
    deadline: Option<Instant>,
    node_cap: Option<usize>,
    nodes: usize,
    best: usize,
    best_moves: Option<Vec<Move>>,
    path: Vec<Move>,
}

impl Search {
    fn visit(&mut self, yard: &Yard, depth: usize) -> Result<(), Stop> {
        self.nodes += 1;
        if self.node_cap.is_some_and(|cap| self.nodes > cap) {
            return Err(Stop::Nodes);
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Stop::Time);
        }
        if yard.is_empty() {
            if depth < self.best {
                self.best = depth;
                self.best_moves = Some(self.path.clone());
            }
            return Ok(());
        }
        let Some((_, src, _)) = yard.pending_reshuffle() else {
            unreachable!("nodes are kept post-retrieval");
        };
        let mut children = Vec::new();
        for to in 0..yard.width() {
            if to == src || yard.is_full(to) {
                continue;
            }
            let mut child = yard.clone();
            let mut moves = vec![child.reshuffle_pending(to).expect("eligible stack")];
            child.retrieve_ready(&mut moves);
            let Ok(lb) = lower_bound(self.lb_kind, &child) else {
                continue;
            };
            children.push((lb, to, child, moves));
        }
        children.sort_by_key(|c| (c.0, c.1));
        for (lb, _, child, moves) in children {
            if depth + 1 + lb >= self.best {
                continue;
            }
            let mark = self.path.len();
            self.path.extend(moves);
            let outcome = self.visit(&child, depth + 1);
            self.path.truncate(mark);
            outcome?;
        }
        Ok(())
    }
}

/// Exact search. The first incumbent comes from a min-max playout; when that
/// dead-ends the other policies are tried. Without any incumbent the depth is
/// capped at `blocks × height` reshuffles.
pub fn solve_exact(
    yard: &Yard,
    lb_kind: LbKind,
    time_limit: Option<Duration>,
    node_cap: Option<usize>,
) -> ExactResult {
    let start = Instant::now();
    let mut root = yard.clone();
    let mut root_moves = Vec::new();
    root.retrieve_ready(&mut root_moves);

    let Ok(root_lb) = lower_bound(lb_kind, &root) else {
        return ExactResult {
            status: ExactStatus::Infeasible,
            best: None,
            lower_bound: 0,
            nodes: 1,
        };
    };

    let seed = std::iter::once(PolicyId::MinMax)
        .chain(PolicyId::ALL)
        .map(|p| playout(p, yard, None))
        .find(|p| p.completed);
    let (best, best_moves) = match seed {
        Some(p) => (p.reshuffles, Some(p.moves)),
        None => (yard.len() * yard.height() + 1, None),
    };

    let mut search = Search {
        lb_kind,
        deadline: time_limit.map(|d| start + d),
        node_cap,
        nodes: 0,
        best,
        best_moves: None,
        path: root_moves,
    };
    let outcome = if root_lb >= best {
        Ok(())
    } else {
        search.visit(&root, 0)
    };

    let found = search.best_moves.take().or(best_moves);
    let status = match (&outcome, &found) {
        (Ok(()), Some(_)) => ExactStatus::Optimal,
        (Ok(()), None) => ExactStatus::Infeasible,
        (Err(Stop::Time), _) => ExactStatus::Timeout,
        (Err(Stop::Nodes), Some(_)) => ExactStatus::FeasibleBound,
        (Err(Stop::Nodes), None) => ExactStatus::Timeout,
    };
    let optimal = status == ExactStatus::Optimal;
    let elapsed = start.elapsed();
    let best = found.map(|moves| Solution {
        status: SolutionStatus::Feasible,
        reshuffles: moves.iter().filter(|m| m.is_reshuffle()).count(),
        moves,
        proven_optimal: optimal,
        levels_expanded: 0,
        nodes_generated: search.nodes,
        nodes_pruned: 0,
        elapsed,
        cub_history: Vec::new(),
    });
    let lower_bound = match &best {
        Some(s) if optimal => s.reshuffles,
        _ => root_lb,
    };
    ExactResult {
        status,
        best,
        lower_bound,
        nodes: search.nodes.max(1),
    }
}
