//! Finite partition checks over embedding sets.
//!
//! Colorings of the A-copies in an ambient structure are enumerated up to
//! color renaming: the first copy gets color 0 and every later copy stays
//! within one above the running maximum. A refusal is issued before
//! enumeration whenever the canonical coloring count exceeds the budget, so
//! callers can distinguish "too big" from "false".

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::config::SearchConfig;
use crate::error::CoreError;
use crate::outcome::{CheckOutcome, Verdict};
use crate::respect::{is_family_type_respecting, is_type_respecting, PlusEmbedding};
use crate::structures::{enumerate_embeddings, HereditaryFamily, Structure};
use crate::typetrees::{meet_closure_shape, ShapeCode};

/// A coloring of the canonical embedding list, replayable against a fresh
/// enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowsWitness {
    pub colors: Vec<usize>,
}

/// Number of canonical colorings of `m` items with at most `k` colors.
fn canonical_coloring_count(m: usize, k: usize) -> u128 {
    if m == 0 {
        return 1;
    }
    // ways[j]: strings over the prefix using exactly j colors.
    let mut ways = vec![0u128; k + 1];
    ways[1] = 1;
    for _ in 1..m {
        let mut next = vec![0u128; k + 1];
        for j in 1..=k {
            next[j] = ways[j]
                .saturating_mul(j as u128)
                .saturating_add(if j > 1 { ways[j - 1] } else { 0 });
        }
        ways = next;
    }
    ways.iter().fold(0u128, |acc, w| acc.saturating_add(*w))
}

/// Visit canonical colorings in numeric order until the visitor yields a
/// value.
fn for_each_canonical_coloring<R>(
    m: usize,
    k: usize,
    mut visit: impl FnMut(&[usize]) -> Option<R>,
) -> (Option<R>, u64) {
    let mut explored: u64 = 0;
    if m == 0 {
        explored += 1;
        return (visit(&[]), explored);
    }
    let mut v = vec![0usize; m];
    loop {
        explored += 1;
        if let Some(r) = visit(&v) {
            return (Some(r), explored);
        }
        let mut i = m;
        loop {
            if i == 0 {
                return (None, explored);
            }
            i -= 1;
            let prefix_cap = v[..i].iter().copied().max().map(|x| x + 1).unwrap_or(0);
            let cap = prefix_cap.min(k - 1);
            if v[i] < cap {
                v[i] += 1;
                for x in &mut v[i + 1..] {
                    *x = 0;
                }
                break;
            }
        }
    }
}

fn is_canonical_coloring(v: &[usize], k: usize) -> bool {
    let mut max_seen: Option<usize> = None;
    for &c in v {
        let cap = max_seen.map(|x| x + 1).unwrap_or(0);
        if c > cap || c >= k {
            return false;
        }
        max_seen = Some(max_seen.map_or(c, |x| x.max(c)));
    }
    true
}

struct CopyTable {
    a_count: usize,
    /// Per B-copy, which A-copy indices it contains.
    contained: Vec<Vec<usize>>,
}

fn copy_table(c: &Structure, b: &Structure, a: &Structure) -> Result<CopyTable, CoreError> {
    let embs_a = enumerate_embeddings(a, c)?;
    let embs_b = enumerate_embeddings(b, c)?;
    let index: HashMap<&[usize], usize> =
        embs_a.iter().enumerate().map(|(i, e)| (e.map.as_slice(), i)).collect();
    let inner = enumerate_embeddings(a, b)?;
    let mut contained = Vec::with_capacity(embs_b.len());
    for be in &embs_b {
        let mut copies = Vec::with_capacity(inner.len());
        for al in &inner {
            let composite: Vec<usize> = al.map.iter().map(|&v| be.map[v]).collect();
            copies.push(*index.get(composite.as_slice()).ok_or_else(|| {
                CoreError::input("composed copy missing from the enumeration")
            })?);
        }
        contained.push(copies);
    }
    Ok(CopyTable { a_count: embs_a.len(), contained })
}

fn distinct_colors(colors: &[usize], copies: &[usize]) -> usize {
    let mut mask = 0u128;
    for &i in copies {
        mask |= 1 << colors[i];
    }
    mask.count_ones() as usize
}

fn check_color_budget(m: usize, k: usize, cfg: &SearchConfig) -> Result<(), CoreError> {
    let count = canonical_coloring_count(m, k);
    if count > cfg.budget as u128 {
        return Err(CoreError::budget(format!(
            "{count} canonical colorings exceed the budget of {}",
            cfg.budget
        )));
    }
    Ok(())
}

fn validate_color_args(k: usize, l: usize) -> Result<(), CoreError> {
    if k == 0 {
        return Err(CoreError::input("at least one color is required"));
    }
    if k > 128 {
        return Err(CoreError::input("more than 128 colors is not supported"));
    }
    if l == 0 {
        return Err(CoreError::input("the color bound must be at least 1"));
    }
    Ok(())
}

/// Does every `k`-coloring of the A-copies in `c` leave some B-copy with at
/// most `l` colors? `Fails` carries the first bad coloring in canonical
/// order.
pub fn arrows(
    c: &Structure,
    b: &Structure,
    a: &Structure,
    k: usize,
    l: usize,
    cfg: &SearchConfig,
) -> Result<CheckOutcome<ArrowsWitness>, CoreError> {
    validate_color_args(k, l)?;
    let table = copy_table(c, b, a)?;
    let k_eff = k.min(table.a_count.max(1));
    check_color_budget(table.a_count, k_eff, cfg)?;
    let (bad, explored) = for_each_canonical_coloring(table.a_count, k_eff, |colors| {
        let good = table
            .contained
            .iter()
            .any(|copies| distinct_colors(colors, copies) <= l);
        if good {
            None
        } else {
            Some(ArrowsWitness { colors: colors.to_vec() })
        }
    });
    Ok(match bad {
        Some(w) => CheckOutcome::fails(w).with_explored(explored),
        None => CheckOutcome::holds().with_explored(explored),
    })
}

/// Replay a coloring against a fresh enumeration: is it canonical, within
/// `k` colors, and does it defeat every B-copy?
pub fn verify_arrows_witness(
    c: &Structure,
    b: &Structure,
    a: &Structure,
    k: usize,
    l: usize,
    witness: &ArrowsWitness,
) -> Result<bool, CoreError> {
    validate_color_args(k, l)?;
    let table = copy_table(c, b, a)?;
    if witness.colors.len() != table.a_count || !is_canonical_coloring(&witness.colors, k) {
        return Ok(false);
    }
    Ok(table
        .contained
        .iter()
        .all(|copies| distinct_colors(&witness.colors, copies) > l))
}

/// The least `l` such that every `k`-coloring of the A-copies leaves a full
/// copy of `c` with at most `l` colors; in other words, the worst-case color
/// count forced onto `c` itself.
pub fn finite_degree(
    c: &Structure,
    a: &Structure,
    k: usize,
    cfg: &SearchConfig,
) -> Result<usize, CoreError> {
    validate_color_args(k, 1)?;
    let table = copy_table(c, c, a)?;
    let k_eff = k.min(table.a_count.max(1));
    check_color_budget(table.a_count, k_eff, cfg)?;
    let mut worst = 0usize;
    let (_, _explored) = for_each_canonical_coloring::<()>(table.a_count, k_eff, |colors| {
        let best = table
            .contained
            .iter()
            .map(|copies| distinct_colors(colors, copies))
            .min()
            .unwrap_or(0);
        worst = worst.max(best);
        None
    });
    Ok(worst)
}

/// A coloring of the A-copies in `u` by the canonical code of the meet
/// closure their image generates. Palette in code order.
#[derive(Debug, Clone, Serialize)]
pub struct SierpinskiColoring {
    pub embeddings: Vec<Vec<usize>>,
    pub colors: Vec<usize>,
    pub palette: Vec<ShapeCode>,
}

pub fn sierpinski_coloring(
    u: &Structure,
    a: &Structure,
    _cfg: &SearchConfig,
) -> Result<SierpinskiColoring, CoreError> {
    let embs = enumerate_embeddings(a, u)?;
    let mut codes = Vec::with_capacity(embs.len());
    for e in &embs {
        codes.push(meet_closure_shape(u, &e.image())?);
    }
    let palette: Vec<ShapeCode> = {
        let mut p: Vec<ShapeCode> = codes.clone();
        p.sort();
        p.dedup();
        p
    };
    let colors = codes
        .iter()
        .map(|code| palette.binary_search(code).expect("code in palette"))
        .collect();
    Ok(SierpinskiColoring {
        embeddings: embs.into_iter().map(|e| e.map).collect(),
        colors,
        palette,
    })
}

/// Copies for the type-respecting variant: a level of `c` together with an
/// embedding of `a` into that initial segment, kept when its canonical
/// plus-embedding respects the family.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeveledCopy {
    pub level: usize,
    pub map: Vec<usize>,
}

/// Partition check over family-respecting copies. The colored objects are
/// leveled A-copies whose canonical plus-embedding into the level's initial
/// segment respects `family`; the spanning copies are type-respecting
/// embeddings of `b`, each contributing the leveled copies it carries. Any
/// membership question the bounded check cannot settle makes the whole
/// answer inconclusive.
#[allow(clippy::too_many_arguments)]
pub fn arrows_type_respecting(
    c: &Structure,
    b: &Structure,
    a: &Structure,
    k: usize,
    l: usize,
    family: &HereditaryFamily,
    strict: bool,
    cfg: &SearchConfig,
) -> Result<CheckOutcome<ArrowsWitness>, CoreError> {
    validate_color_args(k, l)?;
    let depth = cfg.depth;

    let mut domain: Vec<LeveledCopy> = Vec::new();
    for level in 0..=c.size {
        let segment = c.initial_segment(level)?;
        for beta in enumerate_embeddings(a, &segment)? {
            let h = PlusEmbedding::canonical(a.clone(), segment.clone(), beta.map.clone())?;
            match is_family_type_respecting(&h, family, depth, cfg)?.verdict {
                Verdict::Holds => domain.push(LeveledCopy { level, map: beta.map }),
                Verdict::Fails => {}
                Verdict::Inconclusive => {
                    return Ok(CheckOutcome::inconclusive(format!(
                        "membership of a level-{level} copy could not be settled at depth {depth}"
                    )));
                }
            }
        }
    }
    let index: HashMap<&LeveledCopy, usize> =
        domain.iter().enumerate().map(|(i, d)| (d, i)).collect();

    let mut spans: Vec<Vec<usize>> = Vec::new();
    for f in enumerate_embeddings(b, c)? {
        if !is_type_respecting(&f, cfg)? {
            continue;
        }
        if strict {
            let h = PlusEmbedding::canonical(b.clone(), c.clone(), f.map.clone())?;
            match is_family_type_respecting(&h, family, depth, cfg)?.verdict {
                Verdict::Holds => {}
                Verdict::Fails => continue,
                Verdict::Inconclusive => {
                    return Ok(CheckOutcome::inconclusive(format!(
                        "a spanning copy's family membership could not be settled at depth {depth}"
                    )));
                }
            }
        }
        let mut inside = Vec::new();
        for i in 0..=b.size {
            let level = if i == 0 { 0 } else { f.map[i - 1] + 1 };
            let segment = b.initial_segment(i)?;
            for alpha in enumerate_embeddings(a, &segment)? {
                let composite = LeveledCopy {
                    level,
                    map: alpha.map.iter().map(|&v| f.map[v]).collect(),
                };
                if let Some(&idx) = index.get(&composite) {
                    inside.push(idx);
                }
            }
        }
        inside.sort_unstable();
        inside.dedup();
        spans.push(inside);
    }

    let m = domain.len();
    let k_eff = k.min(m.max(1));
    check_color_budget(m, k_eff, cfg)?;
    let (bad, explored) = for_each_canonical_coloring(m, k_eff, |colors| {
        let good = spans.iter().any(|inside| distinct_colors(colors, inside) <= l);
        if good {
            None
        } else {
            Some(ArrowsWitness { colors: colors.to_vec() })
        }
    });
    Ok(match bad {
        Some(w) => CheckOutcome::fails(w).with_explored(explored),
        None => CheckOutcome::holds().with_explored(explored),
    })
}
