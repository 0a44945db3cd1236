//! Instance files, the random generator and dataset manifests.
//!
//! Instance format, ASCII, one record per line:
//!
//! ```text
//! w h n
//! c_1 p_1 ... p_c1      (stack 1, bottom to top)
//! ...
//! c_w p_1 ... p_cw      (stack w)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored on input.
//!
//! Manifest format: one tab-separated record `id path w h n seed` per line,
//! `#` comments allowed. Relative paths resolve against the manifest's
//! directory.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::yard::{Priority, Yard, YardError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceSource {
    Generated,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMeta {
    pub id: String,
    pub w: usize,
    pub h: usize,
    pub n: usize,
    pub seed: u64,
    pub source: InstanceSource,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("block {0} appears more than once")]
    DuplicatePriority(u32),
    #[error("block {value} outside 1..={n}")]
    PriorityOutOfRange { value: u32, n: usize },
    #[error("stack {stack} holds {len} blocks, height is {height}")]
    StackOverHeight {
        stack: usize,
        len: usize,
        height: usize,
    },
    #[error("{found} blocks listed, header declares {declared}")]
    CountMismatch { declared: usize, found: usize },
    #[error("header declares {declared} stacks, {found} listed")]
    StackCountMismatch { declared: usize, found: usize },
    #[error(transparent)]
    Yard(#[from] YardError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses an instance file.
pub fn read_instance(text: &str) -> Result<(Yard, InstanceMeta), ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let numbers = |line: usize, l: &str| -> Result<Vec<u64>, ParseError> {
        l.split_whitespace()
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|_| syntax(line, format!("not a nonnegative integer: {t:?}")))
            })
            .collect()
    };

    let (hline, header) = lines.next().ok_or_else(|| syntax(1, "missing header"))?;
    let header = numbers(hline, header)?;
    let [w, h, n] = header[..] else {
        return Err(syntax(hline, "header must be `w h n`"));
    };
    let (w, h, n) = (w as usize, h as usize, n as usize);
    if h == 0 {
        return Err(syntax(hline, "height must be at least 1"));
    }

    let mut seen = vec![false; n + 1];
    let mut stacks = Vec::with_capacity(w);
    let mut found = 0;
    for (line, l) in lines {
        let values = numbers(line, l)?;
        let (&count, blocks) = values
            .split_first()
            .ok_or_else(|| syntax(line, "empty stack record"))?;
        if count as usize != blocks.len() {
            return Err(syntax(
                line,
                format!("stack declares {count} blocks, lists {}", blocks.len()),
            ));
        }
        if stacks.len() == w {
            return Err(ParseError::StackCountMismatch {
                declared: w,
                found: stacks.len() + 1,
            });
        }
        if blocks.len() > h {
            return Err(ParseError::StackOverHeight {
                stack: stacks.len() + 1,
                len: blocks.len(),
                height: h,
            });
        }
        let mut stack = Vec::with_capacity(blocks.len());
        for &b in blocks {
            if b == 0 || b as usize > n {
                return Err(ParseError::PriorityOutOfRange {
                    value: b.min(u64::from(u32::MAX)) as u32,
                    n,
                });
            }
            if std::mem::replace(&mut seen[b as usize], true) {
                return Err(ParseError::DuplicatePriority(b as u32));
            }
            stack.push(b as u32);
        }
        found += stack.len();
        stacks.push(stack);
    }
    if stacks.len() != w {
        return Err(ParseError::StackCountMismatch {
            declared: w,
            found: stacks.len(),
        });
    }
    if found != n {
        return Err(ParseError::CountMismatch { declared: n, found });
    }
    let yard = Yard::new(h, stacks)?;
    let meta = InstanceMeta {
        id: String::new(),
        w,
        h,
        n,
        seed: 0,
        source: InstanceSource::File,
    };
    Ok((yard, meta))
}

/// Canonical text of a yard.
pub fn write_instance(yard: &Yard) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", yard.width(), yard.height(), yard.len());
    for stack in yard.stacks() {
        let _ = write!(out, "{}", stack.len());
        for b in stack {
            let _ = write!(out, " {b}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("{n} blocks do not fit in {w} stacks of height {h}")]
    TooManyBlocks { w: usize, h: usize, n: usize },
    #[error("no yard satisfying the retrievability condition after {0} attempts")]
    Exhausted(usize),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Attempts before the generator gives up.
pub const MAX_ATTEMPTS: usize = 1_000_000;

/// The retrievability condition on a block `i` at tier `tier` (1 = bottom).
pub fn tier_condition_holds(w: usize, h: usize, n: usize, block: u32, tier: usize) -> bool {
    h - tier <= w * h - n + (block as usize - 1)
}

/// Whether every block of `yard` satisfies [`tier_condition_holds`], with
/// `n` the number of blocks in the yard.
pub fn satisfies_condition(yard: &Yard) -> bool {
    let (w, h, n) = (yard.width(), yard.height(), yard.len());
    yard.stacks().iter().all(|stack| {
        stack
            .iter()
            .enumerate()
            .all(|(k, b)| tier_condition_holds(w, h, n, b.get(), k + 1))
    })
}

/// Random yard with `n` blocks in `w` stacks of height `h`.
///
/// Blocks are shuffled and dropped one by one onto a uniformly chosen
/// non-full stack. Yards violating the retrievability condition are thrown
/// away and redrawn from the same stream. ChaCha8 seeded with `seed`.
pub fn generate(w: usize, h: usize, n: usize, seed: u64) -> Result<Yard, GenerateError> {
    if h == 0 || n > w * h {
        return Err(GenerateError::TooManyBlocks { w, h, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<u32> = (1..=n as u32).collect();
    for _ in 0..MAX_ATTEMPTS {
        order.shuffle(&mut rng);
        let mut stacks: Vec<Vec<Priority>> = vec![Vec::with_capacity(h); w];
        let mut open: Vec<usize> = (0..w).collect();
        let mut ok = true;
        for &b in &order {
            let k = rng.random_range(0..open.len());
            let s = open[k];
            stacks[s].push(Priority(b));
            let tier = stacks[s].len();
            if tier == h {
                open.swap_remove(k);
            }
            if !tier_condition_holds(w, h, n, b, tier) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Yard::from_checked(h, stacks));
        }
    }
    Err(GenerateError::Exhausted(MAX_ATTEMPTS))
}

/// SplitMix64 finaliser, used to derive per-instance seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `(w, h, n)` triples of the large-instance set: `n` ranges over the last
/// `h` values below full capacity.
pub fn lbri_triples() -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for w in [50, 100, 500, 1000] {
        for h in [4, 7, 10] {
            for n in w * h - h..w * h {
                out.push((w, h, n));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub w: usize,
    pub h: usize,
    pub n: usize,
    pub seed: u64,
}

impl ManifestEntry {
    pub fn meta(&self, source: InstanceSource) -> InstanceMeta {
        InstanceMeta {
            id: self.id.clone(),
            w: self.w,
            h: self.h,
            n: self.n,
            seed: self.seed,
            source,
        }
    }

    /// Reads and parses the instance file.
    pub fn load(&self) -> Result<Yard, LoadError> {
        let text =
            fs::read_to_string(&self.path).map_err(|e| LoadError::Io(self.path.clone(), e))?;
        let (yard, _) = read_instance(&text).map_err(|e| LoadError::Parse(self.path.clone(), e))?;
        Ok(yard)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(PathBuf, io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.tsv";

impl Manifest {
    /// Manifest text. Paths are written relative to `base` when possible.
    pub fn to_text(&self, base: &Path) -> String {
        let mut out = String::from("# id\tpath\tw\th\tn\tseed\n");
        for e in &self.entries {
            let path = e.path.strip_prefix(base).unwrap_or(&e.path);
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.id,
                path.display(),
                e.w,
                e.h,
                e.n,
                e.seed
            );
        }
        out
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, GenerateError> {
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| GenerateError::Manifest {
                line: k + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, path, w, h, n, seed] = fields[..] else {
                return Err(bad("expected 6 tab-separated fields"));
            };
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer"));
            let path = Path::new(path);
            entries.push(ManifestEntry {
                id: id.to_string(),
                path: if path.is_absolute() {
                    path.to_path_buf()
                } else {
                    base.join(path)
                },
                w: int(w)?,
                h: int(h)?,
                n: int(n)?,
                seed: seed.parse().map_err(|_| bad("bad seed"))?,
            });
        }
        Ok(Manifest { entries })
    }

    pub fn read(path: &Path) -> Result<Self, GenerateError> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }
}

/// Generates `count` instances per triple into `out_dir` and writes
/// `manifest.tsv` next to them. Seeds are derived from `seed` and the running
/// instance index, so each instance can be regenerated on its own.
pub fn generate_manifest(
    out_dir: &Path,
    triples: &[(usize, usize, usize)],
    count: usize,
    seed: u64,
    prefix: &str,
) -> Result<Manifest, GenerateError> {
    for &(w, h, n) in triples {
        if h == 0 || n > w * h {
            return Err(GenerateError::TooManyBlocks { w, h, n });
        }
    }
    fs::create_dir_all(out_dir)?;
    let mut entries = Vec::with_capacity(triples.len() * count);
    let mut index = 0u64;
    for &(w, h, n) in triples {
        for k in 0..count {
            let inst_seed = mix_seed(seed, index);
            index += 1;
            let yard = generate(w, h, n, inst_seed)?;
            let id = format!("{prefix}_w{w}_h{h}_n{n}_{k:03}");
            let path = out_dir.join(format!("{id}.txt"));
            fs::write(&path, write_instance(&yard))?;
            entries.push(ManifestEntry {
                id,
                path,
                w,
                h,
                n,
                seed: inst_seed,
            });
        }
    }
    let manifest = Manifest { entries };
    fs::write(out_dir.join(MANIFEST_FILE), manifest.to_text(out_dir))?;
    Ok(manifest)
}

/// The large-instance set: `count_per_config` instances per triple of
/// [`lbri_triples`].
pub fn generate_lbri_manifest(
    out_dir: &Path,
    count_per_config: usize,
    seed: u64,
) -> Result<Manifest, GenerateError> {
    generate_manifest(out_dir, &lbri_triples(), count_per_config, seed, "lbri")
}
