//! Trees of 1-types over initial segments.
//!
//! Two vertices `u, v ≥ n` have the same 1-type at level `n` when the induced
//! structures on `{0..n-1} ∪ {u}` and `{0..n-1} ∪ {v}` coincide after the
//! distinguished vertex is renamed to a placeholder. The classes at all
//! levels, ordered by level and reverse inclusion of members, form a forest
//! whose down-sets are chains; [`meet_closure_shape`] summarises how a set of
//! vertices sits inside that forest as a canonical, comparable code.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::structures::Structure;

/// Entry of a star tuple: a concrete vertex of the initial segment, or the
/// distinguished vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StarEntry {
    Base(usize),
    Star,
}

pub type StarTuples = Vec<BTreeSet<Vec<StarEntry>>>;

/// All relation tuples over `{0..level-1} ∪ {v}` that mention `v`, with `v`
/// replaced by [`StarEntry::Star`]. Tuples entirely inside the initial
/// segment are common to every vertex at this level and are omitted.
pub fn star_tuples(u: &Structure, v: usize, level: usize) -> Result<StarTuples, CoreError> {
    if v >= u.size {
        return Err(CoreError::input(format!("vertex {v} out of range for size {}", u.size)));
    }
    if v < level {
        return Err(CoreError::input(format!("vertex {v} lies inside the level-{level} segment")));
    }
    let mut out: StarTuples = vec![BTreeSet::new(); u.language.symbol_count()];
    for (idx, tuples) in u.relations.iter().enumerate() {
        for t in tuples {
            if t.contains(&v) && t.iter().all(|&x| x < level || x == v) {
                let star: Vec<StarEntry> = t
                    .iter()
                    .map(|&x| if x == v { StarEntry::Star } else { StarEntry::Base(x) })
                    .collect();
                out[idx].insert(star);
            }
        }
    }
    Ok(out)
}

/// Do `u` and `v` have the same 1-type at level `n`? Both must lie at or
/// above the level.
pub fn same_type(s: &Structure, u: usize, v: usize, n: usize) -> Result<bool, CoreError> {
    Ok(star_tuples(s, u, n)? == star_tuples(s, v, n)?)
}

/// A 1-type class: its level, the star tuples every member realises, and the
/// members themselves in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OneType {
    pub level: usize,
    pub shape: StarTuples,
    pub members: Vec<usize>,
}

/// The 1-type classes of level `n`, ordered by least member.
pub fn one_type_classes(s: &Structure, n: usize) -> Result<Vec<OneType>, CoreError> {
    if n > s.size {
        return Err(CoreError::input(format!("level {n} out of range for size {}", s.size)));
    }
    let mut classes: Vec<OneType> = Vec::new();
    for v in n..s.size {
        let shape = star_tuples(s, v, n)?;
        match classes.iter_mut().find(|c| c.shape == shape) {
            Some(c) => c.members.push(v),
            None => classes.push(OneType { level: n, shape, members: vec![v] }),
        }
    }
    Ok(classes)
}

/// Tree order: deeper classes with fewer members sit above their coarser
/// restrictions. `x ≤ y` means `x` is at or below `y`.
pub fn type_le(x: &OneType, y: &OneType) -> bool {
    x.level <= y.level && y.members.iter().all(|m| x.members.binary_search(m).is_ok())
}

/// The classes of every level of `s`, level by level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeTree {
    pub levels: Vec<Vec<OneType>>,
}

pub fn type_tree(s: &Structure) -> Result<TypeTree, CoreError> {
    let mut levels = Vec::with_capacity(s.size);
    for n in 0..s.size {
        levels.push(one_type_classes(s, n)?);
    }
    Ok(TypeTree { levels })
}

impl TypeTree {
    pub fn node(&self, level: usize, idx: usize) -> &OneType {
        &self.levels[level][idx]
    }

    /// Index of the level-`n-1` class sitting directly below the given class.
    pub fn parent_of(&self, level: usize, idx: usize) -> Option<usize> {
        if level == 0 {
            return None;
        }
        let least = self.levels[level][idx].members[0];
        self.levels[level - 1]
            .iter()
            .position(|c| c.members.binary_search(&least).is_ok())
    }

    pub fn class_of(&self, v: usize, level: usize) -> Option<usize> {
        self.levels
            .get(level)?
            .iter()
            .position(|c| c.members.binary_search(&v).is_ok())
    }
}

/// Entry of a code shape: a closure level identified by its rank, or the
/// node's own vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CodeEntry {
    Base(usize),
    Star,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ShapeNode {
    pub parent: Option<usize>,
    pub level_rank: usize,
    pub shape: Vec<BTreeSet<Vec<CodeEntry>>>,
}

/// Canonical description of how a vertex set sits in the type forest:
/// the meet closure of the members' own classes, each node annotated with its
/// parent inside the closure, the rank of its level among closure levels, and
/// its star tuples restricted to closure levels. Absolute vertex numbers
/// never appear, so order-alike copies in different positions can be
/// compared directly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ShapeCode {
    pub nodes: Vec<ShapeNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ClosureNode {
    level: usize,
    members: Vec<usize>,
}

fn class_node(s: &Structure, v: usize, level: usize) -> Result<ClosureNode, CoreError> {
    let shape = star_tuples(s, v, level)?;
    let mut members = Vec::new();
    for u in level..s.size {
        if star_tuples(s, u, level)? == shape {
            members.push(u);
        }
    }
    Ok(ClosureNode { level, members })
}

/// Deepest common ancestor of two closure nodes, if they share one.
fn meet(s: &Structure, x: &ClosureNode, y: &ClosureNode) -> Result<Option<ClosureNode>, CoreError> {
    let u = x.members[0];
    let v = y.members[0];
    let top = x.level.min(y.level);
    for m in (0..=top).rev() {
        if same_type(s, u, v, m)? {
            return Ok(Some(class_node(s, u, m)?));
        }
    }
    Ok(None)
}

pub fn meet_closure_shape(s: &Structure, copy: &[usize]) -> Result<ShapeCode, CoreError> {
    if copy.is_empty() {
        return Ok(ShapeCode { nodes: Vec::new() });
    }
    if !copy.windows(2).all(|w| w[0] < w[1]) {
        return Err(CoreError::input(format!("copy {copy:?} is not strictly increasing")));
    }
    if let Some(&v) = copy.iter().find(|&&v| v >= s.size) {
        return Err(CoreError::input(format!("vertex {v} out of range for size {}", s.size)));
    }

    let mut closure: BTreeSet<ClosureNode> = BTreeSet::new();
    for &v in copy {
        closure.insert(class_node(s, v, v)?);
    }
    loop {
        let snapshot: Vec<ClosureNode> = closure.iter().cloned().collect();
        let before = closure.len();
        for i in 0..snapshot.len() {
            for j in i + 1..snapshot.len() {
                if let Some(m) = meet(s, &snapshot[i], &snapshot[j])? {
                    closure.insert(m);
                }
            }
        }
        if closure.len() == before {
            break;
        }
    }

    let levels: Vec<usize> = closure
        .iter()
        .map(|n| n.level)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let level_rank = |lv: usize| levels.binary_search(&lv).unwrap();

    // Place nodes level by level; within a level order by parent index, then
    // by restricted shape.
    let mut placed: Vec<(ClosureNode, ShapeNode)> = Vec::new();
    for &lv in &levels {
        let mut batch: Vec<(ClosureNode, ShapeNode)> = Vec::new();
        for node in closure.iter().filter(|n| n.level == lv) {
            let parent = placed
                .iter()
                .enumerate()
                .filter(|(_, (p, _))| {
                    p.level < node.level && node.members.iter().all(|m| p.members.binary_search(m).is_ok())
                })
                .max_by_key(|(_, (p, _))| p.level)
                .map(|(i, _)| i);
            let rep = node.members[0];
            let raw = star_tuples(s, rep, node.level)?;
            let shape: Vec<BTreeSet<Vec<CodeEntry>>> = raw
                .iter()
                .map(|tuples| {
                    tuples
                        .iter()
                        .filter_map(|t| {
                            t.iter()
                                .map(|e| match e {
                                    StarEntry::Star => Some(CodeEntry::Star),
                                    StarEntry::Base(b) => {
                                        if levels.binary_search(b).is_ok() && *b < node.level {
                                            Some(CodeEntry::Base(level_rank(*b)))
                                        } else {
                                            None
                                        }
                                    }
                                })
                                .collect::<Option<Vec<CodeEntry>>>()
                        })
                        .collect()
                })
                .collect();
            batch.push((
                node.clone(),
                ShapeNode { parent, level_rank: level_rank(node.level), shape },
            ));
        }
        batch.sort_by(|a, b| (a.1.parent, &a.1.shape).cmp(&(b.1.parent, &b.1.shape)));
        placed.extend(batch);
    }

    Ok(ShapeCode { nodes: placed.into_iter().map(|(_, code)| code).collect() })
}
