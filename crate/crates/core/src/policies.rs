//! Greedy relocation rules and full greedy playouts.
//!
//! Each policy answers one question: the next target is covered, where does
//! the topmost block above it go? Playing a policy until the yard is empty
//! gives a feasible solution whose reshuffle count is the upper bound used by
//! the beam search.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::yard::{Move, Priority, Yard};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyId {
    /// Most free slots.
    LowestPosition,
    /// Fewest blocks that leave before the moved block.
    ReshuffleIndex,
    /// Smallest stack minimum above the block, else the largest minimum.
    MinMax,
    /// Min-max first choice, then the closest smaller top, then the smallest top.
    Difference1,
    /// Min-max refined by the cost of placing the next blocker as well.
    Lookahead1,
    /// Plans the whole pile above the target and takes the first placement.
    GroupAssign,
}

impl PolicyId {
    pub const ALL: [PolicyId; 6] = [
        PolicyId::LowestPosition,
        PolicyId::ReshuffleIndex,
        PolicyId::MinMax,
        PolicyId::Difference1,
        PolicyId::Lookahead1,
        PolicyId::GroupAssign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyId::LowestPosition => "lowest-position",
            PolicyId::ReshuffleIndex => "reshuffle-index",
            PolicyId::MinMax => "min-max",
            PolicyId::Difference1 => "difference1",
            PolicyId::Lookahead1 => "lookahead1",
            PolicyId::GroupAssign => "group-assign",
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown policy {0:?}")]
pub struct ParsePolicyError(String);

impl FromStr for PolicyId {
    type Err = ParsePolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ParsePolicyError(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("the next target is not covered, nothing to relocate")]
    NotBlocked,
    #[error("no stack can receive the block (dead end)")]
    DeadEnd,
}

/// Result of running a policy to the end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Playout {
    pub reshuffles: usize,
    pub moves: Vec<Move>,
    /// `false` on a dead end or when the reshuffle budget ran out.
    pub completed: bool,
}

impl Playout {
    /// Reshuffle count as an upper bound; `usize::MAX` when not completed.
    pub fn ub(&self) -> usize {
        if self.completed {
            self.reshuffles
        } else {
            usize::MAX
        }
    }
}

/// Destination chosen by `policy` for the topmost block above the next target.
pub fn choose_stack(policy: PolicyId, yard: &Yard) -> Result<usize, PolicyError> {
    let (_, src, block) = yard.pending_reshuffle().ok_or(PolicyError::NotBlocked)?;
    let ctx = Context { yard, src, block };
    let choice = match policy {
        PolicyId::LowestPosition => ctx.lowest_position(),
        PolicyId::ReshuffleIndex => ctx.reshuffle_index(),
        PolicyId::MinMax => ctx.min_max(),
        PolicyId::Difference1 => ctx.difference1(),
        PolicyId::Lookahead1 => ctx.lookahead1(),
        PolicyId::GroupAssign => ctx.group_assign(),
    };
    choice.ok_or(PolicyError::DeadEnd)
}

/// Alternates retrievals and policy-driven reshuffles until the yard is
/// empty, a dead end is reached, or `max_reshuffles` is exhausted.
pub fn playout(policy: PolicyId, yard: &Yard, max_reshuffles: Option<usize>) -> Playout {
    playout_until(policy, yard, max_reshuffles, None)
}

/// [`playout`] that also gives up, incomplete, once `deadline` has passed.
pub(crate) fn playout_until(
    policy: PolicyId,
    yard: &Yard,
    max_reshuffles: Option<usize>,
    deadline: Option<Instant>,
) -> Playout {
    let mut work = yard.clone();
    let mut moves = Vec::new();
    let mut reshuffles = 0;
    loop {
        work.retrieve_ready(&mut moves);
        if work.is_empty() {
            return Playout {
                reshuffles,
                moves,
                completed: true,
            };
        }
        if max_reshuffles.is_some_and(|cap| reshuffles >= cap) {
            break;
        }
        if reshuffles % 32 == 31 && deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let Ok(to) = choose_stack(policy, &work) else {
            break;
        };
        let mv = work
            .reshuffle_pending(to)
            .expect("policies only return eligible stacks");
        moves.push(mv);
        reshuffles += 1;
    }
    Playout {
        reshuffles,
        moves,
        completed: false,
    }
}

struct Context<'a> {
    yard: &'a Yard,
    src: usize,
    block: Priority,
}

impl Context<'_> {
    fn eligible(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.yard.width()).filter(move |&s| s != self.src && !self.yard.is_full(s))
    }

    /// First eligible stack minimising `key`.
    fn argmin_by<K: Ord>(&self, key: impl Fn(usize) -> K) -> Option<usize> {
        let mut best: Option<(K, usize)> = None;
        for s in self.eligible() {
            let k = key(s);
            if best.as_ref().is_none_or(|(bk, _)| k < *bk) {
                best = Some((k, s));
            }
        }
        best.map(|(_, s)| s)
    }

    fn lowest_position(&self) -> Option<usize> {
        self.argmin_by(|s| std::cmp::Reverse(self.yard.free_slots(s)))
    }

    fn reshuffle_index(&self) -> Option<usize> {
        self.argmin_by(|s| {
            self.yard
                .stack(s)
                .iter()
                .filter(|&&b| b < self.block)
                .count()
        })
    }

    fn min_max(&self) -> Option<usize> {
        self.argmin_by(|s| min_max_key(self.yard.min_of(s), self.block))
    }

    fn difference1(&self) -> Option<usize> {
        let u = self.block;
        let top = |s: usize| self.yard.top(s).map_or(0, Priority::get);
        self.argmin_by(|s| {
            let sigma = self.yard.min_of(s);
            if sigma > u {
                (0, sigma.get())
            } else if top(s) < u.get() {
                (1, u.get() - top(s))
            } else {
                (2, top(s))
            }
        })
    }

    fn lookahead1(&self) -> Option<usize> {
        let yard = self.yard;
        let u = self.block;
        let stack = yard.stack(self.src);
        let below = stack[stack.len() - 2];
        // The next blocker exists only if it still covers the target.
        let (target, _) = yard.target().expect("yard is nonempty");
        let next = (below != target).then_some(below);

        let Some(next) = next else {
            return self.min_max();
        };
        // Stacks other than the source that would take `next` without
        // blocking, counted before `u` moves.
        let mut good = 0usize;
        let mut first_good = usize::MAX;
        let mut open = 0usize;
        for s in self.eligible() {
            open += 1;
            if yard.min_of(s) > next {
                good += 1;
                first_good = first_good.min(s);
            }
        }
        const DEAD: usize = 3;
        self.argmin_by(|s| {
            let first = usize::from(u > yard.min_of(s));
            let room_here = yard.free_slots(s) >= 2;
            let good_elsewhere = good >= 2 || (good == 1 && first_good != s);
            let second = if good_elsewhere || (yard.min_of(s).min(u) > next && room_here) {
                0
            } else if open >= 2 || room_here {
                1
            } else {
                DEAD
            };
            (first + second, min_max_key(yard.min_of(s), u))
        })
    }

    fn group_assign(&self) -> Option<usize> {
        let yard = self.yard;
        let (target, _) = yard.target().expect("yard is nonempty");
        let stack = yard.stack(self.src);
        let pos = stack
            .iter()
            .position(|&b| b == target)
            .expect("target in source");
        let pile = stack[pos + 1..].iter().rev();

        let mut mins = yard.mins().to_vec();
        let mut free: Vec<usize> = (0..yard.width()).map(|s| yard.free_slots(s)).collect();
        free[self.src] = 0;
        let mut first = None;
        for &b in pile {
            let mut over: Option<usize> = None;
            let mut under: Option<usize> = None;
            for s in 0..free.len() {
                if free[s] == 0 {
                    continue;
                }
                if mins[s] > b && over.is_none_or(|o| mins[s] > mins[o]) {
                    over = Some(s);
                }
                if under.is_none_or(|o| mins[s] < mins[o]) {
                    under = Some(s);
                }
            }
            let Some(j) = over.or(under) else {
                break;
            };
            mins[j] = mins[j].min(b);
            free[j] -= 1;
            first.get_or_insert(j);
        }
        first
    }
}

/// Min-max preference: stacks whose minimum exceeds the block first, smallest
/// such minimum best; otherwise the largest minimum.
fn min_max_key(sigma: Priority, block: Priority) -> (u8, i64) {
    if sigma > block {
        (0, i64::from(sigma.get()))
    } else {
        (1, -i64::from(sigma.get()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yard(h: usize, stacks: &[&[u32]]) -> Yard {
        Yard::new(h, stacks.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    fn example() -> Yard {
        yard(3, &[&[1, 6], &[3, 2, 5], &[4]])
    }

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyId::ALL {
            assert_eq!(p.name().parse::<PolicyId>(), Ok(p));
        }
        assert!("chainf".parse::<PolicyId>().is_err());
    }

    #[test]
    fn min_max_forced_single_candidate() {
        assert_eq!(choose_stack(PolicyId::MinMax, &example()), Ok(2));
    }

    #[test]
    fn min_max_prefers_smallest_sigma_above() {
        // u = 4 on top of 1; candidate minima 5, 7, 2.
        let y = yard(4, &[&[1, 4], &[5], &[7], &[2]]);
        assert_eq!(choose_stack(PolicyId::MinMax, &y), Ok(1));
        // No minimum above 8: fall back to the largest.
        let y = yard(4, &[&[1, 8], &[5], &[7], &[2]]);
        assert_eq!(choose_stack(PolicyId::MinMax, &y), Ok(2));
    }

    #[test]
    fn difference1_criteria() {
        // u = 5, no minimum above 5, tops 3 and 4: closest smaller top wins.
        let y = yard(4, &[&[1, 5], &[2, 3], &[4]]);
        assert_eq!(choose_stack(PolicyId::Difference1, &y), Ok(2));
        // Criterion (i) beats the others.
        let y = yard(4, &[&[1, 5], &[2, 3], &[7]]);
        assert_eq!(choose_stack(PolicyId::Difference1, &y), Ok(2));
        // Criterion (iii): every top above u, every minimum below.
        let y = yard(4, &[&[1, 5], &[2, 9], &[3, 8]]);
        assert_eq!(choose_stack(PolicyId::Difference1, &y), Ok(2));
    }

    #[test]
    fn lowest_position_and_reshuffle_index() {
        let y = yard(4, &[&[1, 6], &[2, 3, 4], &[5]]);
        assert_eq!(choose_stack(PolicyId::LowestPosition, &y), Ok(2));
        // Blocks below 6: stack 1 has three, stack 2 has one.
        assert_eq!(choose_stack(PolicyId::ReshuffleIndex, &y), Ok(2));
        let y = yard(4, &[&[1, 6], &[], &[5, 2]]);
        assert_eq!(choose_stack(PolicyId::LowestPosition, &y), Ok(1));
    }

    #[test]
    fn lookahead1_without_second_blocker_is_min_max() {
        let y = yard(4, &[&[1, 8], &[5], &[7], &[2]]);
        assert_eq!(
            choose_stack(PolicyId::Lookahead1, &y),
            choose_stack(PolicyId::MinMax, &y)
        );
    }

    #[test]
    fn lookahead1_accounts_for_the_next_blocker() {
        // Pile above 1 is [7, 4], top first. No minimum exceeds 7. Min-max
        // sends 7 onto the largest minimum (5), which then leaves nothing
        // above 4. Lookahead pays for 7 on the minimum-3 stack instead and
        // keeps the minimum-5 stack for 4.
        let y = yard(3, &[&[1, 4, 7], &[6, 5], &[8, 3]]);
        assert_eq!(choose_stack(PolicyId::MinMax, &y), Ok(1));
        assert_eq!(choose_stack(PolicyId::Lookahead1, &y), Ok(2));
    }

    #[test]
    fn lookahead1_keeps_free_placements() {
        let y = yard(3, &[&[1, 3, 8], &[9], &[4]]);
        assert_eq!(choose_stack(PolicyId::Lookahead1, &y), Ok(1));
    }

    #[test]
    fn group_assign_plans_whole_pile() {
        let y = yard(3, &[&[1, 4, 5], &[3, 2], &[6, 7]]);
        // 5 first: largest minimum above 5 is 6 on stack 2.
        assert_eq!(choose_stack(PolicyId::GroupAssign, &y), Ok(2));
    }

    #[test]
    fn choose_errors() {
        let y = yard(2, &[&[1], &[2]]);
        assert_eq!(
            choose_stack(PolicyId::MinMax, &y),
            Err(PolicyError::NotBlocked)
        );
        let y = yard(2, &[&[1, 2], &[3, 4]]);
        for p in PolicyId::ALL {
            assert_eq!(choose_stack(p, &y), Err(PolicyError::DeadEnd));
        }
    }

    #[test]
    fn playout_example() {
        let out = playout(PolicyId::MinMax, &example(), None);
        assert!(out.completed);
        assert_eq!(out.reshuffles, 3);
        assert!(example().replay(&out.moves).unwrap().is_empty());
    }

    #[test]
    fn playout_trivial_cases() {
        let out = playout(PolicyId::MinMax, &yard(3, &[&[3, 2, 1], &[5, 4]]), None);
        assert_eq!((out.completed, out.reshuffles), (true, 0));
        let out = playout(PolicyId::MinMax, &yard(2, &[&[2, 1]]), None);
        assert_eq!((out.completed, out.reshuffles), (true, 0));
    }

    #[test]
    fn playout_dead_end_and_budget() {
        let out = playout(PolicyId::MinMax, &yard(2, &[&[1, 2], &[3, 4]]), None);
        assert!(!out.completed);
        assert_eq!(out.ub(), usize::MAX);
        let out = playout(PolicyId::MinMax, &example(), Some(1));
        assert!(!out.completed);
        assert_eq!(out.reshuffles, 1);
    }
}
