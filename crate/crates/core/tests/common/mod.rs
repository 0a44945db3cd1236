//! Test-side oracles. They work on plain vectors and share no code with the
//! library beyond constructing a `Yard` for the caller.
#![allow(dead_code)]

use std::collections::HashSet;

use brp_core::Yard;
use rand::seq::SliceRandom;
use rand::Rng;

/// Bottom-to-top stacks of plain priorities.
pub type Raw = Vec<Vec<u32>>;

pub fn to_yard(h: usize, raw: &Raw) -> Yard {
    Yard::new(h, raw.clone()).unwrap()
}

/// Uniform placement of `n` shuffled blocks onto random non-full stacks.
pub fn random_raw<R: Rng>(rng: &mut R, w: usize, h: usize, n: usize) -> Raw {
    assert!(n <= w * h);
    let mut blocks: Vec<u32> = (1..=n as u32).collect();
    blocks.shuffle(rng);
    let mut stacks = vec![Vec::new(); w];
    for b in blocks {
        loop {
            let s = rng.random_range(0..w);
            if stacks[s].len() < h {
                stacks[s].push(b);
                break;
            }
        }
    }
    stacks
}

/// Random yard that is always solvable: at most `w*h - h + 1` blocks, so a
/// reshuffle never runs out of room.
pub fn random_solvable<R: Rng>(
    rng: &mut R,
    max_w: usize,
    max_h: usize,
    max_n: usize,
) -> (usize, Raw) {
    let w = rng.random_range(2..=max_w);
    let h = rng.random_range(2..=max_h);
    let cap = (w * h - h + 1).min(max_n);
    let n = rng.random_range(1..=cap);
    (h, random_raw(rng, w, h, n))
}

fn retrieve_all(raw: &mut Raw) {
    loop {
        let Some(min) = raw.iter().flatten().min().copied() else {
            return;
        };
        match raw.iter_mut().find(|s| s.last() == Some(&min)) {
            Some(s) => {
                s.pop();
            }
            None => return,
        }
    }
}

/// Successors of a normalised state under the restricted rule: the top of the
/// stack holding the smallest block moves to another non-full stack.
fn successors(raw: &Raw, h: usize) -> Vec<Raw> {
    let min = *raw.iter().flatten().min().unwrap();
    let src = raw.iter().position(|s| s.contains(&min)).unwrap();
    let mut out = Vec::new();
    for to in 0..raw.len() {
        if to == src || raw[to].len() >= h {
            continue;
        }
        let mut next = raw.clone();
        let b = next[src].pop().unwrap();
        next[to].push(b);
        retrieve_all(&mut next);
        out.push(next);
    }
    out
}

/// Minimum number of reshuffles by breadth-first search, `None` if the yard
/// cannot be emptied.
pub fn bfs_optimum(h: usize, raw: &Raw) -> Option<usize> {
    let mut start = raw.clone();
    retrieve_all(&mut start);
    let mut seen: HashSet<Raw> = HashSet::new();
    let mut frontier = vec![start.clone()];
    seen.insert(start);
    let mut depth = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for state in frontier {
            if state.iter().all(|s| s.is_empty()) {
                return Some(depth);
            }
            for s in successors(&state, h) {
                if seen.insert(s.clone()) {
                    next.push(s);
                }
            }
        }
        frontier = next;
        depth += 1;
    }
    None
}

/// Minimum blocking cost over every capacity-respecting assignment of
/// `blocks` to stacks, a block costing 1 when it lands on a stack whose
/// minimum is smaller. `u32::MAX` marks an empty stack. `None` if infeasible.
pub fn assignment_optimum(blocks: &[u32], free: &[usize], mins: &[u32]) -> Option<usize> {
    fn rec(
        k: usize,
        blocks: &[u32],
        free: &mut [usize],
        mins: &[u32],
        cost: usize,
        best: &mut Option<usize>,
    ) {
        if k == blocks.len() {
            if best.is_none_or(|b| cost < b) {
                *best = Some(cost);
            }
            return;
        }
        for s in 0..free.len() {
            if free[s] == 0 {
                continue;
            }
            free[s] -= 1;
            let c = usize::from(blocks[k] > mins[s]);
            rec(k + 1, blocks, free, mins, cost + c, best);
            free[s] += 1;
        }
    }
    let mut best = None;
    rec(0, blocks, &mut free.to_vec(), mins, 0, &mut best);
    best
}

/// Retrievability condition of the generator, restated.
pub fn condition_holds(yard: &Yard) -> bool {
    let (w, h, n) = (yard.width(), yard.height(), yard.len());
    yard.stacks().iter().all(|stack| {
        stack.iter().enumerate().all(|(k, b)| {
            let tier = k + 1;
            h - tier <= w * h - n + (b.get() as usize - 1)
        })
    })
}
