//! Lower bounds on the number of reshuffles.
//!
//! Every bound here has the same shape: walk the retrieval-step
//! decomposition and, for each target, add the number of blocks covering it
//! plus a relaxation term counting how many of those blockers must end up
//! blocking again once relocated onto the rest of the yard. The bounds differ
//! only in the relaxation:
//!
//! * [`lb1`]: the term is zero.
//! * [`lb3`]: order and capacity of the destination stacks are ignored
//!   ([`g_z`]).
//! * [`lb_ubalb`]: capacity is kept, the relocation order is ignored. The
//!   term is solved exactly by a greedy assignment ([`solve_gmbip_b`]).
//! * [`lb4_bruteforce`]: order is kept, capacity is ignored. Exponential;
//!   evaluated by enumeration for small yards only ([`g_t_bruteforce`]).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::yard::{Priority, RetrievalStep, StepWalk, Yard};

/// Enumeration oracles refuse instances whose search space exceeds this many
/// leaves.
pub const BRUTE_FORCE_LEAF_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("{needed} blocks to place but only {available} free slots")]
    Infeasible { needed: usize, available: usize },
    #[error(
        "instance infeasible at retrieval step {target}: {needed} blockers, {available} free slots"
    )]
    InfeasibleAtStep {
        target: Priority,
        needed: usize,
        available: usize,
    },
    #[error("enumeration over {blocks} blocks and {stacks} stacks exceeds the oracle guard")]
    TooLarge { blocks: usize, stacks: usize },
}

/// Which bound to use inside the search procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LbKind {
    Lb1,
    Lb3,
    #[default]
    Ubalb,
}

impl LbKind {
    pub fn name(self) -> &'static str {
        match self {
            LbKind::Lb1 => "lb1",
            LbKind::Lb3 => "lb3",
            LbKind::Ubalb => "ubalb",
        }
    }
}

impl fmt::Display for LbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown lower bound {0:?} (expected lb1, lb3 or ubalb)")]
pub struct ParseLbKindError(String);

impl FromStr for LbKind {
    type Err = ParseLbKindError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lb1" => Ok(LbKind::Lb1),
            "lb3" => Ok(LbKind::Lb3),
            "ubalb" => Ok(LbKind::Ubalb),
            _ => Err(ParseLbKindError(s.to_string())),
        }
    }
}

/// Placement of a set of blocks onto stacks with given free slots and minima.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentInstance {
    pub blocks: Vec<Priority>,
    /// Free slots per stack.
    pub free: Vec<usize>,
    /// Minimum priority per stack, `Priority::INF` when empty.
    pub mins: Vec<Priority>,
}

impl AssignmentInstance {
    pub fn new(blocks: Vec<Priority>, free: Vec<usize>, mins: Vec<Priority>) -> Self {
        assert_eq!(
            free.len(),
            mins.len(),
            "one free count and one minimum per stack"
        );
        AssignmentInstance { blocks, free, mins }
    }

    /// The instance of placing `blocks` onto the stacks of `yard`.
    pub fn from_yard(yard: &Yard, blocks: &[Priority]) -> Self {
        AssignmentInstance {
            blocks: blocks.to_vec(),
            free: (0..yard.width()).map(|s| yard.free_slots(s)).collect(),
            mins: yard.mins().to_vec(),
        }
    }

    /// The assignment instance of a decomposition step.
    pub fn from_step(step: &RetrievalStep) -> Self {
        Self::from_yard(&step.reduced, &step.blockers)
    }

    pub fn width(&self) -> usize {
        self.free.len()
    }

    fn check_capacity(&self) -> Result<(), BoundError> {
        let available: usize = self.free.iter().sum();
        if self.blocks.len() > available {
            return Err(BoundError::Infeasible {
                needed: self.blocks.len(),
                available,
            });
        }
        Ok(())
    }

    /// Cost of an explicit assignment: blocks placed over a smaller minimum.
    pub fn cost_of(&self, stacks: &[usize]) -> usize {
        self.blocks
            .iter()
            .zip(stacks)
            .filter(|&(&b, &s)| b > self.mins[s])
            .count()
    }
}

/// Optimal order-free assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub cost: usize,
    /// Destination stack of `blocks[k]`, same indexing as the instance.
    pub stacks: Vec<usize>,
}

/// Relaxation term of one retrieval step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepBound {
    pub target: Priority,
    pub blockers: usize,
    pub relax: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundBreakdown {
    pub steps: Vec<StepBound>,
    pub total: usize,
}

impl BoundBreakdown {
    fn push(&mut self, target: Priority, blockers: usize, relax: usize) {
        self.steps.push(StepBound {
            target,
            blockers,
            relax,
        });
        self.total += blockers + relax;
    }
}

/// Number of blocking blocks.
pub fn lb1(yard: &Yard) -> usize {
    yard.blocking_count()
}

/// Blockers that are necessarily blocking whatever stack of the reduced yard
/// receives them, with capacity and order relaxed: every stack is nonempty
/// and has a smaller minimum. Empty stacks absorb anything.
pub fn g_z(step: &RetrievalStep) -> usize {
    let max_min = step
        .reduced
        .mins()
        .iter()
        .copied()
        .max()
        .unwrap_or(Priority(0));
    step.blockers.iter().filter(|&&b| b > max_min).count()
}

/// Greedy optimal assignment of blocks to stacks when the relocation order
/// is free.
///
/// Blocks are taken from largest to smallest. A block goes to the stack with
/// the largest minimum among those whose minimum exceeds it and that still
/// have room; when there is none it goes, at cost one, to the open stack with
/// the smallest minimum. Stack minima are not updated as blocks land.
/// Ties go to the lowest stack index.
pub fn solve_gmbip_b(instance: &AssignmentInstance) -> Result<Assignment, BoundError> {
    instance.check_capacity()?;

    let mut order: Vec<usize> = (0..instance.blocks.len()).collect();
    order.sort_by(|&a, &b| instance.blocks[b].cmp(&instance.blocks[a]));

    // Minimum descending, index ascending.
    let mut stacks: Vec<usize> = (0..instance.width())
        .filter(|&s| instance.free[s] > 0)
        .collect();
    stacks.sort_by(|&a, &b| instance.mins[b].cmp(&instance.mins[a]).then(a.cmp(&b)));

    let mut left: Vec<usize> = instance.free.clone();
    let mut front = 0;
    let mut back = stacks.len();
    let mut cost = 0;
    let mut placed = vec![0; instance.blocks.len()];
    for k in order {
        let block = instance.blocks[k];
        while left[stacks[front]] == 0 {
            front += 1;
        }
        while left[stacks[back - 1]] == 0 {
            back -= 1;
        }
        let j = if instance.mins[stacks[front]] > block {
            stacks[front]
        } else {
            // All open minima are below `block`, hence finite and distinct.
            cost += 1;
            stacks[back - 1]
        };
        left[j] -= 1;
        placed[k] = j;
    }
    Ok(Assignment {
        cost,
        stacks: placed,
    })
}

/// Minimum over every capacity-respecting assignment, by enumeration.
pub fn g_b_bruteforce(instance: &AssignmentInstance) -> Result<usize, BoundError> {
    instance.check_capacity()?;
    guard(instance.blocks.len(), instance.width())?;

    fn search(
        inst: &AssignmentInstance,
        k: usize,
        left: &mut [usize],
        cost: usize,
        best: &mut usize,
    ) {
        if cost >= *best {
            return;
        }
        if k == inst.blocks.len() {
            *best = cost;
            return;
        }
        let b = inst.blocks[k];
        for s in 0..left.len() {
            if left[s] == 0 {
                continue;
            }
            left[s] -= 1;
            search(
                inst,
                k + 1,
                left,
                cost + usize::from(b > inst.mins[s]),
                best,
            );
            left[s] += 1;
        }
    }

    let mut best = usize::MAX;
    search(instance, 0, &mut instance.free.clone(), 0, &mut best);
    Ok(best)
}

/// Capacity-free relaxation that keeps the relocation order.
///
/// Blockers are placed top to bottom, each one on any stack of the reduced
/// yard; a block is blocking when it lands above a smaller block, whether
/// that block was already in the stack or placed earlier in the step.
pub fn g_t_bruteforce(step: &RetrievalStep) -> Result<usize, BoundError> {
    let blocks = &step.blockers;
    if blocks.is_empty() {
        return Ok(0);
    }
    let width = step.reduced.width();
    if width == 0 {
        return Err(BoundError::Infeasible {
            needed: blocks.len(),
            available: 0,
        });
    }
    guard(blocks.len(), width)?;

    fn search(blocks: &[Priority], k: usize, mins: &mut [Priority], cost: usize, best: &mut usize) {
        if cost >= *best {
            return;
        }
        if k == blocks.len() {
            *best = cost;
            return;
        }
        let b = blocks[k];
        for s in 0..mins.len() {
            let prev = mins[s];
            mins[s] = prev.min(b);
            search(blocks, k + 1, mins, cost + usize::from(b > prev), best);
            mins[s] = prev;
        }
    }

    let mut best = usize::MAX;
    search(blocks, 0, &mut step.reduced.mins().to_vec(), 0, &mut best);
    Ok(best)
}

fn guard(blocks: usize, stacks: usize) -> Result<(), BoundError> {
    let leaves = (stacks as u64).checked_pow(blocks as u32);
    match leaves {
        Some(l) if l <= BRUTE_FORCE_LEAF_LIMIT => Ok(()),
        _ => Err(BoundError::TooLarge { blocks, stacks }),
    }
}

pub fn lb3(yard: &Yard) -> BoundBreakdown {
    let mut out = BoundBreakdown::default();
    walk_lb3(yard, |target, blockers, relax| {
        out.push(target, blockers, relax)
    });
    out
}

pub fn lb_ubalb(yard: &Yard) -> Result<BoundBreakdown, BoundError> {
    let mut out = BoundBreakdown::default();
    walk_ubalb(yard, |target, blockers, relax| {
        out.push(target, blockers, relax)
    })?;
    Ok(out)
}

/// Order-preserving, capacity-free bound. Only for small yards.
pub fn lb4_bruteforce(yard: &Yard) -> Result<BoundBreakdown, BoundError> {
    let mut out = BoundBreakdown::default();
    for step in yard.decompose() {
        let relax = g_t_bruteforce(&step).map_err(|e| at_step(e, step.target))?;
        out.push(step.target, step.blockers.len(), relax);
    }
    Ok(out)
}

/// Total of the selected bound, without the breakdown.
pub fn lower_bound(kind: LbKind, yard: &Yard) -> Result<usize, BoundError> {
    let mut total = 0;
    let mut add = |_, blockers: usize, relax: usize| total += blockers + relax;
    match kind {
        LbKind::Lb1 => return Ok(lb1(yard)),
        LbKind::Lb3 => walk_lb3(yard, add),
        LbKind::Ubalb => walk_ubalb(yard, &mut add)?,
    }
    Ok(total)
}

fn at_step(err: BoundError, target: Priority) -> BoundError {
    match err {
        BoundError::Infeasible { needed, available } => BoundError::InfeasibleAtStep {
            target,
            needed,
            available,
        },
        other => other,
    }
}

type Key = (Priority, usize);

/// Stack minima and free slots kept in ordered sets so each step only
/// touches the source stack.
struct SortedStacks {
    all: BTreeSet<Key>,
    open: BTreeSet<Key>,
}

impl SortedStacks {
    fn new(yard: &Yard) -> Self {
        let mut sorted = SortedStacks {
            all: BTreeSet::new(),
            open: BTreeSet::new(),
        };
        for s in 0..yard.width() {
            sorted.insert(yard, s);
        }
        sorted
    }

    fn insert(&mut self, yard: &Yard, s: usize) {
        let key = (yard.min_of(s), s);
        self.all.insert(key);
        if yard.free_slots(s) > 0 {
            self.open.insert(key);
        }
    }

    fn remove(&mut self, key: Key) {
        self.all.remove(&key);
        self.open.remove(&key);
    }

    /// Lowest-index stack among those sharing the largest open minimum.
    fn best_open(&self) -> Option<Key> {
        let &(m, _) = self.open.last()?;
        self.open.range((m, 0)..).next().copied()
    }
}

fn walk_lb3(yard: &Yard, mut emit: impl FnMut(Priority, usize, usize)) {
    let mut walk = StepWalk::new(yard);
    let mut sorted = SortedStacks::new(yard);
    let mut before = yard.mins().to_vec();
    while let Some(step) = walk.advance() {
        let t = step.source;
        sorted.remove((before[t], t));
        let max_min = sorted.all.last().map_or(Priority(0), |&(m, _)| m);
        let relax = step.blockers.iter().filter(|&&b| b > max_min).count();
        emit(step.target, step.blockers.len(), relax);
        sorted.insert(walk.yard(), t);
        before[t] = walk.yard().min_of(t);
    }
}

fn walk_ubalb(yard: &Yard, mut emit: impl FnMut(Priority, usize, usize)) -> Result<(), BoundError> {
    let mut walk = StepWalk::new(yard);
    let mut sorted = SortedStacks::new(yard);
    let mut before = yard.mins().to_vec();
    let mut blockers = Vec::new();
    let mut used: Vec<(usize, usize)> = Vec::new();
    let mut closed: Vec<Key> = Vec::new();
    while let Some(step) = walk.advance() {
        let t = step.source;
        sorted.remove((before[t], t));
        blockers.clear();
        blockers.extend_from_slice(&step.blockers);
        blockers.sort_unstable_by(|a, b| b.cmp(a));
        used.clear();
        closed.clear();
        let current = walk.yard();
        let mut relax = 0;
        for &b in &blockers {
            let Some(best) = sorted.best_open() else {
                let available = (0..current.width())
                    .filter(|&s| s != t)
                    .map(|s| current.free_slots(s))
                    .sum();
                return Err(BoundError::InfeasibleAtStep {
                    target: step.target,
                    needed: step.blockers.len(),
                    available,
                });
            };
            let chosen = if best.0 > b {
                best
            } else {
                relax += 1;
                *sorted.open.first().expect("open set is nonempty")
            };
            let j = chosen.1;
            let slot = match used.iter_mut().find(|(s, _)| *s == j) {
                Some((_, u)) => {
                    *u += 1;
                    *u
                }
                None => {
                    used.push((j, 1));
                    1
                }
            };
            if slot == current.free_slots(j) {
                sorted.open.remove(&chosen);
                closed.push(chosen);
            }
        }
        for &key in &closed {
            sorted.open.insert(key);
        }
        emit(step.target, step.blockers.len(), relax);
        sorted.insert(current, t);
        before[t] = current.min_of(t);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yard(h: usize, stacks: &[&[u32]]) -> Yard {
        Yard::new(h, stacks.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    fn p(v: &[u32]) -> Vec<Priority> {
        v.iter().map(|&x| Priority(x)).collect()
    }

    fn inst(blocks: &[u32], mins: &[Option<u32>], free: &[usize]) -> AssignmentInstance {
        AssignmentInstance::new(
            p(blocks),
            free.to_vec(),
            mins.iter()
                .map(|m| m.map_or(Priority::INF, Priority))
                .collect(),
        )
    }

    fn step(blockers: &[u32], reduced: Yard) -> RetrievalStep {
        RetrievalStep {
            target: Priority(1),
            source: 0,
            blockers: p(blockers),
            reduced,
        }
    }

    #[test]
    fn lb1_examples() {
        assert_eq!(lb1(&yard(3, &[&[1, 6], &[3, 2, 5], &[4]])), 2);
        assert_eq!(lb1(&yard(3, &[&[1, 4, 5], &[3, 2], &[6, 7]])), 3);
        assert_eq!(lb1(&Yard::empty(3, 3).unwrap()), 0);
    }

    #[test]
    fn g_z_examples() {
        assert_eq!(g_z(&step(&[3], yard(2, &[&[2]]))), 1);
        assert_eq!(g_z(&step(&[5, 4], yard(3, &[&[3, 2], &[6, 7]]))), 0);
        assert_eq!(g_z(&step(&[], yard(3, &[&[3, 2]]))), 0);
        // An empty stack absorbs everything.
        assert_eq!(g_z(&step(&[9], yard(3, &[&[3, 2], &[]]))), 0);
    }

    #[test]
    fn lb3_examples() {
        let b = lb3(&yard(2, &[&[1, 3], &[2]]));
        assert_eq!(b.total, 2);
        assert_eq!(
            b.steps[0],
            StepBound {
                target: Priority(1),
                blockers: 1,
                relax: 1
            }
        );
        assert_eq!(lb3(&yard(3, &[&[1, 4, 5], &[3, 2], &[6, 7]])).total, 3);
        assert_eq!(lb3(&yard(3, &[&[3, 2, 1], &[5, 4]])).total, 0);
    }

    #[test]
    fn lb3_walk_matches_decomposition() {
        let y = yard(4, &[&[5, 1, 9, 7], &[2, 8], &[6, 3, 10], &[4]]);
        let via_steps: usize = y
            .decompose()
            .iter()
            .map(|s| s.blockers.len() + g_z(s))
            .sum();
        assert_eq!(lb3(&y).total, via_steps);
    }

    #[test]
    fn gmbip_b_examples_agree_with_enumeration() {
        let cases = [
            (inst(&[5, 3], &[Some(4), Some(6)], &[1, 1]), 0),
            (inst(&[7], &[Some(5), Some(6)], &[1, 1]), 1),
            (inst(&[5, 4], &[Some(2), Some(6)], &[1, 1]), 1),
        ];
        for (instance, expected) in cases {
            let solved = solve_gmbip_b(&instance).unwrap();
            assert_eq!(solved.cost, expected);
            assert_eq!(instance.cost_of(&solved.stacks), expected);
            assert_eq!(g_b_bruteforce(&instance).unwrap(), expected);
        }
        let solved = solve_gmbip_b(&inst(&[5, 3], &[Some(4), Some(6)], &[1, 1])).unwrap();
        assert_eq!(solved.stacks, vec![1, 0]);
        let solved = solve_gmbip_b(&inst(&[5, 4], &[Some(2), Some(6)], &[1, 1])).unwrap();
        assert_eq!(solved.stacks, vec![1, 0]);
    }

    #[test]
    fn gmbip_b_trivial_and_infeasible() {
        assert_eq!(g_b_bruteforce(&inst(&[], &[Some(3)], &[0])).unwrap(), 0);
        assert_eq!(g_b_bruteforce(&inst(&[2], &[None], &[1])).unwrap(), 0);
        assert_eq!(solve_gmbip_b(&inst(&[2], &[None], &[1])).unwrap().cost, 0);
        let full = inst(&[4, 5], &[Some(3), Some(6)], &[1, 0]);
        assert_eq!(
            solve_gmbip_b(&full),
            Err(BoundError::Infeasible {
                needed: 2,
                available: 1
            })
        );
        assert!(matches!(
            g_b_bruteforce(&full),
            Err(BoundError::Infeasible { .. })
        ));
    }

    #[test]
    fn gmbip_b_ties_go_to_lowest_index() {
        let solved = solve_gmbip_b(&inst(&[3], &[None, Some(9), None], &[2, 1, 2])).unwrap();
        assert_eq!(solved.stacks, vec![0]);
    }

    #[test]
    fn brute_force_guard() {
        let big = inst(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10], &[None; 6], &[10; 6]);
        assert_eq!(
            g_b_bruteforce(&big),
            Err(BoundError::TooLarge {
                blocks: 10,
                stacks: 6
            })
        );
    }

    #[test]
    fn ubalb_examples() {
        assert_eq!(lb_ubalb(&yard(2, &[&[1, 3], &[2]])).unwrap().total, 2);
        let b = lb_ubalb(&yard(3, &[&[1, 4, 5], &[3, 2], &[6, 7]])).unwrap();
        assert_eq!(b.total, 4);
        assert_eq!(b.steps[0].relax, 1);
        assert_eq!(lb_ubalb(&yard(3, &[&[3, 2, 1], &[5, 4]])).unwrap().total, 0);
        assert_eq!(
            lb_ubalb(&yard(3, &[&[1, 6], &[3, 2, 5], &[4]]))
                .unwrap()
                .total,
            3
        );
    }

    #[test]
    fn ubalb_walk_matches_per_step_algorithm() {
        let y = yard(4, &[&[5, 1, 9, 7], &[2, 8], &[6, 3, 10], &[4, 11, 12]]);
        let via_steps: usize = y
            .decompose()
            .iter()
            .map(|s| {
                s.blockers.len()
                    + solve_gmbip_b(&AssignmentInstance::from_step(s))
                        .unwrap()
                        .cost
            })
            .sum();
        assert_eq!(lb_ubalb(&y).unwrap().total, via_steps);
    }

    #[test]
    fn ubalb_infeasible_single_stack() {
        let err = lb_ubalb(&yard(3, &[&[1, 2]])).unwrap_err();
        assert_eq!(
            err,
            BoundError::InfeasibleAtStep {
                target: Priority(1),
                needed: 1,
                available: 0
            }
        );
        assert_eq!(lower_bound(LbKind::Ubalb, &yard(3, &[&[1, 2]])), Err(err));
    }

    #[test]
    fn g_t_examples() {
        let sigmas = yard(3, &[&[3, 2], &[6]]);
        assert_eq!(g_t_bruteforce(&step(&[5, 4], sigmas)).unwrap(), 0);
        assert_eq!(g_t_bruteforce(&step(&[4, 5], yard(3, &[&[6]]))).unwrap(), 1);
        assert_eq!(g_t_bruteforce(&step(&[], yard(3, &[&[6]]))).unwrap(), 0);
        assert!(matches!(
            g_t_bruteforce(&step(&[4], Yard::empty(0, 3).unwrap())),
            Err(BoundError::Infeasible { .. })
        ));
    }

    #[test]
    fn lb4_examples() {
        assert_eq!(lb4_bruteforce(&yard(3, &[&[3, 2, 1]])).unwrap().total, 0);
        let y = yard(3, &[&[1, 4, 5], &[3, 2], &[6, 7]]);
        assert!(lb4_bruteforce(&y).unwrap().total >= lb3(&y).total);
    }

    #[test]
    fn lower_bound_totals_match_breakdowns() {
        let y = yard(4, &[&[5, 1, 9, 7], &[2, 8], &[6, 3, 10], &[4, 11, 12]]);
        assert_eq!(lower_bound(LbKind::Lb1, &y).unwrap(), lb1(&y));
        assert_eq!(lower_bound(LbKind::Lb3, &y).unwrap(), lb3(&y).total);
        assert_eq!(
            lower_bound(LbKind::Ubalb, &y).unwrap(),
            lb_ubalb(&y).unwrap().total
        );
    }

    #[test]
    fn lb_kind_names() {
        for kind in [LbKind::Lb1, LbKind::Lb3, LbKind::Ubalb] {
            assert_eq!(kind.name().parse::<LbKind>(), Ok(kind));
        }
        assert!("lb4".parse::<LbKind>().is_err());
    }
}
