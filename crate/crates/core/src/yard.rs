//! Yard model for the restricted block relocation problem.
//!
//! A [`Yard`] is a row of stacks with a common height. Each stack is stored
//! bottom to top. Blocks are identified by their retrieval [`Priority`]:
//! priority 1 leaves first. Retrieved blocks are dropped from the yard, so a
//! yard only ever holds the blocks still waiting to leave.
//!
//! Stack indices in this API are 0-based. Text formats (instance files, move
//! listings) use 1-based stacks and tiers.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Retrieval priority of a block. Smaller leaves earlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Priority(pub u32);

impl Priority {
    /// Sentinel larger than every real priority; the minimum of an empty stack.
    pub const INF: Priority = Priority(u32::MAX);

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_inf(self) -> bool {
        self == Self::INF
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl From<u32> for Priority {
    fn from(value: u32) -> Self {
        Priority(value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum YardError {
    #[error("yard height must be at least 1")]
    ZeroHeight,
    #[error("priority 0 is not a valid block")]
    ZeroPriority,
    #[error("block {0} appears more than once")]
    DuplicateBlock(Priority),
    #[error("stack {stack} holds {len} blocks but the height is {height}")]
    StackOverHeight {
        stack: usize,
        len: usize,
        height: usize,
    },
    #[error("stack index {index} out of range for a yard of width {width}")]
    StackOutOfRange { index: usize, width: usize },
    #[error("the yard is empty")]
    Empty,
    #[error("the next block to retrieve is not blocked")]
    NotBlocked,
    #[error("destination stack {0} is the source stack")]
    SameStack(usize),
    #[error("destination stack {0} is full")]
    StackFull(usize),
    #[error("move {index} ({mv}) is illegal: {reason}")]
    IllegalMove {
        index: usize,
        mv: Move,
        reason: &'static str,
    },
}

/// A single crane operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    /// Move `block` from the top of `from` onto the top of `to`.
    Reshuffle {
        block: Priority,
        from: usize,
        to: usize,
    },
    /// Take `block` out of the yard from the top of `from`.
    Retrieve { block: Priority, from: usize },
}

impl Move {
    pub fn block(&self) -> Priority {
        match *self {
            Move::Reshuffle { block, .. } | Move::Retrieve { block, .. } => block,
        }
    }

    pub fn is_reshuffle(&self) -> bool {
        matches!(self, Move::Reshuffle { .. })
    }
}

/// `R block from to` or `T block from`, stacks 1-based.
impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Move::Reshuffle { block, from, to } => write!(f, "R {} {} {}", block, from + 1, to + 1),
            Move::Retrieve { block, from } => write!(f, "T {} {}", block, from + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse move from {0:?}")]
pub struct ParseMoveError(String);

impl FromStr for Move {
    type Err = ParseMoveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseMoveError(s.to_string());
        let mut fields = s.split_whitespace();
        let kind = fields.next().ok_or_else(err)?;
        let mut number = || -> Result<u32, ParseMoveError> {
            fields
                .next()
                .ok_or_else(err)?
                .parse::<u32>()
                .map_err(|_| err())
        };
        let block = Priority(number()?);
        let stack = |v: u32| v.checked_sub(1).map(|v| v as usize).ok_or_else(err);
        let mv = match kind {
            "R" => {
                let from = stack(number()?)?;
                let to = stack(number()?)?;
                Move::Reshuffle { block, from, to }
            }
            "T" => Move::Retrieve {
                block,
                from: stack(number()?)?,
            },
            _ => return Err(err()),
        };
        if fields.next().is_some() {
            return Err(err());
        }
        Ok(mv)
    }
}

/// The state of the stacking area.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Yard {
    height: usize,
    stacks: Vec<Vec<Priority>>,
    // Cached minimum per stack, `Priority::INF` when empty.
    mins: Vec<Priority>,
    len: usize,
}

impl Yard {
    /// Builds a yard from stacks listed bottom to top.
    pub fn new(height: usize, stacks: Vec<Vec<u32>>) -> Result<Self, YardError> {
        if height == 0 {
            return Err(YardError::ZeroHeight);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(stacks.len());
        for (index, stack) in stacks.into_iter().enumerate() {
            if stack.len() > height {
                return Err(YardError::StackOverHeight {
                    stack: index,
                    len: stack.len(),
                    height,
                });
            }
            let mut converted = Vec::with_capacity(height);
            for value in stack {
                if value == 0 || value == u32::MAX {
                    return Err(YardError::ZeroPriority);
                }
                if !seen.insert(value) {
                    return Err(YardError::DuplicateBlock(Priority(value)));
                }
                converted.push(Priority(value));
            }
            out.push(converted);
        }
        Ok(Self::from_checked(height, out))
    }

    /// An empty yard with `width` stacks.
    pub fn empty(width: usize, height: usize) -> Result<Self, YardError> {
        Self::new(height, vec![Vec::new(); width])
    }

    pub(crate) fn from_checked(height: usize, stacks: Vec<Vec<Priority>>) -> Self {
        let mins = stacks.iter().map(|s| stack_min(s)).collect();
        let len = stacks.iter().map(Vec::len).sum();
        Yard {
            height,
            stacks,
            mins,
            len,
        }
    }

    pub fn width(&self) -> usize {
        self.stacks.len()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of blocks currently in the yard.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stacks(&self) -> &[Vec<Priority>] {
        &self.stacks
    }

    /// Stack `s`, bottom to top. Panics when `s` is out of range.
    pub fn stack(&self, s: usize) -> &[Priority] {
        &self.stacks[s]
    }

    pub fn free_slots(&self, s: usize) -> usize {
        self.height - self.stacks[s].len()
    }

    pub fn is_full(&self, s: usize) -> bool {
        self.stacks[s].len() >= self.height
    }

    pub fn top(&self, s: usize) -> Option<Priority> {
        self.stacks[s].last().copied()
    }

    /// Minimum priority per stack, with `Priority::INF` for empty stacks.
    pub fn mins(&self) -> &[Priority] {
        &self.mins
    }

    #[inline]
    pub(crate) fn min_of(&self, s: usize) -> Priority {
        self.mins[s]
    }

    /// Largest priority present, if any.
    pub fn max_priority(&self) -> Option<Priority> {
        self.stacks.iter().flatten().copied().max()
    }

    /// Every block that sits above a block of smaller priority in its stack.
    pub fn blocking_blocks(&self) -> BTreeSet<Priority> {
        let mut out = BTreeSet::new();
        for stack in &self.stacks {
            let mut below = Priority::INF;
            for &b in stack {
                if b > below {
                    out.insert(b);
                }
                below = below.min(b);
            }
        }
        out
    }

    /// Number of blocking blocks, without building the set.
    pub fn blocking_count(&self) -> usize {
        self.stacks
            .iter()
            .map(|stack| {
                let mut below = Priority::INF;
                stack
                    .iter()
                    .filter(|&&b| {
                        let blocking = b > below;
                        below = below.min(b);
                        blocking
                    })
                    .count()
            })
            .sum()
    }

    /// Minimum priority of stack `s`, `Priority::INF` when it is empty.
    pub fn sigma(&self, s: usize) -> Result<Priority, YardError> {
        self.mins.get(s).copied().ok_or(YardError::StackOutOfRange {
            index: s,
            width: self.width(),
        })
    }

    /// The block that has to leave next.
    pub fn next_target(&self) -> Result<Priority, YardError> {
        self.target().map(|(b, _)| b).ok_or(YardError::Empty)
    }

    /// Next target and the stack holding it.
    pub(crate) fn target(&self) -> Option<(Priority, usize)> {
        let mut best: Option<(Priority, usize)> = None;
        for (s, &m) in self.mins.iter().enumerate() {
            if !m.is_inf() && best.is_none_or(|(b, _)| m < b) {
                best = Some((m, s));
            }
        }
        best
    }

    /// When the next target is covered, returns `(target, source stack,
    /// block to move)`. `None` when the yard is empty or the target is on top.
    pub(crate) fn pending_reshuffle(&self) -> Option<(Priority, usize, Priority)> {
        let (target, src) = self.target()?;
        let top = *self.stacks[src].last()?;
        (top != target).then_some((target, src, top))
    }

    /// Retrieves blocks for as long as the next target is on top of its stack.
    pub fn apply_retrievals(&self) -> (Yard, Vec<Move>) {
        let mut yard = self.clone();
        let mut moves = Vec::new();
        yard.retrieve_ready(&mut moves);
        (yard, moves)
    }

    /// Moves the topmost block above the next target onto stack `to`.
    pub fn apply_reshuffle(&self, to: usize) -> Result<Yard, YardError> {
        let mut yard = self.clone();
        yard.reshuffle_pending(to)?;
        Ok(yard)
    }

    /// Retrieval-step decomposition: for each target in priority order, the
    /// blocks above it and the rest of the yard once its stack is set aside.
    pub fn decompose(&self) -> Vec<RetrievalStep> {
        let mut walk = StepWalk::new(self);
        let mut out = Vec::new();
        while let Some(step) = walk.advance() {
            let reduced = walk.yard().without_stack(step.source);
            out.push(RetrievalStep {
                target: step.target,
                source: step.source,
                blockers: step.blockers,
                reduced,
            });
        }
        out
    }

    /// Replays `moves` under restricted-BRP rules and returns the final yard.
    pub fn replay(&self, moves: &[Move]) -> Result<Yard, YardError> {
        let mut yard = self.clone();
        for (index, &mv) in moves.iter().enumerate() {
            let illegal = |reason| YardError::IllegalMove { index, mv, reason };
            let (target, src) = yard.target().ok_or_else(|| illegal("the yard is empty"))?;
            match mv {
                Move::Retrieve { block, from } => {
                    if block != target || from != src {
                        return Err(illegal("block is not the next target"));
                    }
                    if yard.top(from) != Some(block) {
                        return Err(illegal("target is covered"));
                    }
                    yard.pop(from);
                }
                Move::Reshuffle { block, from, to } => {
                    if from != src {
                        return Err(illegal("only blocks above the next target may move"));
                    }
                    if yard.top(from) != Some(block) || block == target {
                        return Err(illegal("block is not the topmost blocker"));
                    }
                    if to >= yard.width() || to == from || yard.is_full(to) {
                        return Err(illegal("destination unavailable"));
                    }
                    yard.pop(from);
                    yard.push(to, block);
                }
            }
        }
        Ok(yard)
    }

    /// The same yard with stack `s` taken out.
    pub fn without_stack(&self, s: usize) -> Yard {
        let stacks = self
            .stacks
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != s)
            .map(|(_, st)| st.clone())
            .collect();
        Yard::from_checked(self.height, stacks)
    }

    pub(crate) fn pop(&mut self, s: usize) -> Option<Priority> {
        let b = self.stacks[s].pop()?;
        if b == self.mins[s] {
            self.mins[s] = stack_min(&self.stacks[s]);
        }
        self.len -= 1;
        Some(b)
    }

    pub(crate) fn push(&mut self, s: usize, b: Priority) {
        debug_assert!(!self.is_full(s));
        self.stacks[s].push(b);
        self.mins[s] = self.mins[s].min(b);
        self.len += 1;
    }

    /// In-place cascade of retrievals; appends the moves to `log`.
    pub(crate) fn retrieve_ready(&mut self, log: &mut Vec<Move>) -> usize {
        let mut count = 0;
        while let Some((target, src)) = self.target() {
            if self.top(src) != Some(target) {
                break;
            }
            self.pop(src);
            log.push(Move::Retrieve {
                block: target,
                from: src,
            });
            count += 1;
        }
        count
    }

    /// In-place reshuffle of the topmost blocker onto `to`.
    pub(crate) fn reshuffle_pending(&mut self, to: usize) -> Result<Move, YardError> {
        let (_, src, block) = self.pending_reshuffle().ok_or(YardError::NotBlocked)?;
        if to >= self.width() {
            return Err(YardError::StackOutOfRange {
                index: to,
                width: self.width(),
            });
        }
        if to == src {
            return Err(YardError::SameStack(to));
        }
        if self.is_full(to) {
            return Err(YardError::StackFull(to));
        }
        self.pop(src);
        self.push(to, block);
        Ok(Move::Reshuffle {
            block,
            from: src,
            to,
        })
    }
}

fn stack_min(stack: &[Priority]) -> Priority {
    stack.iter().copied().min().unwrap_or(Priority::INF)
}

/// One term of the retrieval-step decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalStep {
    pub target: Priority,
    /// Stack holding the target, indexed in the yard the step was taken from.
    pub source: usize,
    /// Blocks above the target, top to bottom. This is also the order in
    /// which they would have to be relocated.
    pub blockers: Vec<Priority>,
    /// The yard after removing target and blockers, with the source stack
    /// set aside.
    pub reduced: Yard,
}

pub(crate) struct StepInfo {
    pub target: Priority,
    pub source: usize,
    pub blockers: Vec<Priority>,
}

/// Streams the decomposition without materialising reduced yards.
///
/// After `advance` returns a step, `yard()` is the yard with the target and
/// its blockers already removed. Stacks other than `source` are untouched by
/// the step.
pub(crate) struct StepWalk {
    yard: Yard,
    location: Vec<u32>,
    cursor: usize,
}

const ABSENT: u32 = u32::MAX;

impl StepWalk {
    pub fn new(yard: &Yard) -> Self {
        let max = yard.max_priority().map_or(0, |p| p.get() as usize);
        let mut location = vec![ABSENT; max + 1];
        for (s, stack) in yard.stacks().iter().enumerate() {
            for b in stack {
                location[b.get() as usize] = s as u32;
            }
        }
        StepWalk {
            yard: yard.clone(),
            location,
            cursor: 1,
        }
    }

    pub fn yard(&self) -> &Yard {
        &self.yard
    }

    pub fn advance(&mut self) -> Option<StepInfo> {
        while self.cursor < self.location.len() && self.location[self.cursor] == ABSENT {
            self.cursor += 1;
        }
        if self.cursor >= self.location.len() {
            return None;
        }
        let target = Priority(self.cursor as u32);
        let source = self.location[self.cursor] as usize;
        let mut blockers = Vec::new();
        loop {
            let b = self.yard.pop(source).expect("target is in its stack");
            self.location[b.get() as usize] = ABSENT;
            if b == target {
                break;
            }
            blockers.push(b);
        }
        Some(StepInfo {
            target,
            source,
            blockers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yard(h: usize, stacks: &[&[u32]]) -> Yard {
        Yard::new(h, stacks.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    fn set(v: &[u32]) -> BTreeSet<Priority> {
        v.iter().map(|&p| Priority(p)).collect()
    }

    fn example() -> Yard {
        yard(3, &[&[1, 6], &[3, 2, 5], &[4]])
    }

    fn blockers(step: &RetrievalStep) -> Vec<u32> {
        step.blockers.iter().map(|b| b.get()).collect()
    }

    #[test]
    fn blocking_blocks_examples() {
        assert_eq!(example().blocking_blocks(), set(&[5, 6]));
        assert_eq!(yard(3, &[&[3, 2, 1]]).blocking_blocks(), set(&[]));
        assert_eq!(yard(3, &[&[1, 2, 3]]).blocking_blocks(), set(&[2, 3]));
        assert_eq!(example().blocking_count(), 2);
    }

    #[test]
    fn blocking_matches_pair_scan() {
        let y = yard(4, &[&[4, 9, 2, 3], &[7, 1], &[8, 6, 5]]);
        let mut brute = BTreeSet::new();
        for stack in y.stacks() {
            for (k, &b) in stack.iter().enumerate() {
                if stack[..k].iter().any(|&below| below < b) {
                    brute.insert(b);
                }
            }
        }
        assert_eq!(y.blocking_blocks(), brute);
    }

    #[test]
    fn sigma_examples() {
        let y = yard(3, &[&[3, 2, 5], &[], &[4]]);
        assert_eq!(y.sigma(0), Ok(Priority(2)));
        assert_eq!(y.sigma(1), Ok(Priority::INF));
        assert_eq!(y.sigma(2), Ok(Priority(4)));
        assert!(Priority::INF > Priority(u32::MAX - 1));
        assert_eq!(
            y.sigma(3),
            Err(YardError::StackOutOfRange { index: 3, width: 3 })
        );
    }

    #[test]
    fn next_target_examples() {
        assert_eq!(example().next_target(), Ok(Priority(1)));
        let y = yard(2, &[&[3], &[4, 5]]);
        assert_eq!(y.next_target(), Ok(Priority(3)));
        assert_eq!(yard(1, &[&[7]]).next_target(), Ok(Priority(7)));
        assert_eq!(
            Yard::empty(2, 2).unwrap().next_target(),
            Err(YardError::Empty)
        );
    }

    #[test]
    fn retrievals_cascade() {
        let (after, moves) = yard(2, &[&[1], &[2, 5]]).apply_retrievals();
        // 1 is on top; then 5 covers 2, so the cascade stops.
        assert_eq!(moves.len(), 1);
        assert_eq!(after.len(), 2);

        let (after, moves) = yard(2, &[&[1], &[5, 2]]).apply_retrievals();
        assert!(after.is_empty());
        assert_eq!(
            moves.iter().map(|m| m.block().get()).collect::<Vec<_>>(),
            vec![1, 2, 5]
        );
    }

    #[test]
    fn retrievals_noop_when_blocked_or_empty() {
        let (after, moves) = example().apply_retrievals();
        assert_eq!(after, example());
        assert!(moves.is_empty());
        let empty = Yard::empty(3, 3).unwrap();
        let (after, moves) = empty.apply_retrievals();
        assert_eq!(after, empty);
        assert!(moves.is_empty());
    }

    #[test]
    fn reshuffle_examples() {
        let moved = example().apply_reshuffle(2).unwrap();
        assert_eq!(moved, yard(3, &[&[1], &[3, 2, 5], &[4, 6]]));
        assert_eq!(example().apply_reshuffle(1), Err(YardError::StackFull(1)));
        assert_eq!(example().apply_reshuffle(0), Err(YardError::SameStack(0)));
        assert_eq!(
            yard(2, &[&[1], &[2]]).apply_reshuffle(1),
            Err(YardError::NotBlocked)
        );
    }

    #[test]
    fn decompose_small() {
        let steps = yard(2, &[&[1, 3], &[2]]).decompose();
        assert_eq!(steps.len(), 2);
        assert_eq!((steps[0].target, steps[0].source), (Priority(1), 0));
        assert_eq!(blockers(&steps[0]), vec![3]);
        assert_eq!(steps[0].reduced, yard(2, &[&[2]]));
        assert_eq!((steps[1].target, steps[1].source), (Priority(2), 1));
        assert!(steps[1].blockers.is_empty());
    }

    #[test]
    fn decompose_skips_removed_blockers() {
        let steps = yard(3, &[&[1, 4, 5], &[3, 2], &[6, 7]]).decompose();
        let summary: Vec<(u32, Vec<u32>)> = steps
            .iter()
            .map(|s| (s.target.get(), blockers(s)))
            .collect();
        assert_eq!(
            summary,
            vec![(1, vec![5, 4]), (2, vec![]), (3, vec![]), (6, vec![7])]
        );
        assert_eq!(steps[0].reduced, yard(3, &[&[3, 2], &[6, 7]]));
    }

    #[test]
    fn decompose_ordered_yard_has_no_blockers() {
        let steps = yard(3, &[&[6, 4, 1], &[5, 3, 2]]).decompose();
        assert_eq!(steps.len(), 6);
        assert!(steps.iter().all(|s| s.blockers.is_empty()));
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            Yard::new(2, vec![vec![1, 2, 3]]),
            Err(YardError::StackOverHeight {
                stack: 0,
                len: 3,
                height: 2
            })
        );
        assert_eq!(
            Yard::new(2, vec![vec![1], vec![1]]),
            Err(YardError::DuplicateBlock(Priority(1)))
        );
        assert_eq!(Yard::new(2, vec![vec![0]]), Err(YardError::ZeroPriority));
        assert_eq!(Yard::new(0, vec![]), Err(YardError::ZeroHeight));
    }

    #[test]
    fn move_text_round_trip() {
        let r = Move::Reshuffle {
            block: Priority(6),
            from: 0,
            to: 2,
        };
        let t = Move::Retrieve {
            block: Priority(1),
            from: 0,
        };
        assert_eq!(r.to_string(), "R 6 1 3");
        assert_eq!(t.to_string(), "T 1 1");
        assert_eq!("R 6 1 3".parse::<Move>(), Ok(r));
        assert_eq!("T 1 1".parse::<Move>(), Ok(t));
        assert!("R 6 0 3".parse::<Move>().is_err());
        assert!("X 1 1".parse::<Move>().is_err());
        assert!("T 1 1 4".parse::<Move>().is_err());
    }

    #[test]
    fn replay_rejects_unrestricted_moves() {
        // Moving 5 is legal in the unrestricted problem, not here: 1 is next.
        let bad = [Move::Reshuffle {
            block: Priority(5),
            from: 1,
            to: 2,
        }];
        assert!(matches!(
            example().replay(&bad),
            Err(YardError::IllegalMove { index: 0, .. })
        ));
        let good = [
            Move::Reshuffle {
                block: Priority(6),
                from: 0,
                to: 2,
            },
            Move::Retrieve {
                block: Priority(1),
                from: 0,
            },
        ];
        assert_eq!(
            example().replay(&good).unwrap(),
            yard(3, &[&[], &[3, 2, 5], &[4, 6]])
        );
    }
}
