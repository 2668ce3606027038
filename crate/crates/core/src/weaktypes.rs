//! Weak types over an initial segment and the structures built from them.
//!
//! A weak type over a base structure records, per relation symbol, which
//! mixed tuples hold between the base and a bounded stock of abstract type
//! vertices `t0, t1, …` (one fewer than the maximal arity). Mixed tuples must
//! touch the base and use an initial segment of the type vertices; tuples
//! entirely among type vertices are never recorded. Restricting a weak type
//! to its first `d` type vertices yields its depth-`d` approximation; the
//! distinct approximations of all weak types, layered by depth, form the
//! plus-structure of the base.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::SearchConfig;
use crate::error::CoreError;
use crate::structures::{Language, Structure};

/// Entry of a mixed tuple: a base vertex or an abstract type vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatEntry {
    Base(usize),
    Type(usize),
}

pub type Pattern = Vec<PatEntry>;

/// At least one base entry, type entries forming a nonempty initial segment
/// `t0..t{k-1}` with `k ≤ width`, base entries in range. Repeated base
/// entries are always fine; repeated type entries are rejected only under
/// `strict_repeats`.
pub fn is_admissible(pattern: &[PatEntry], base_size: usize, width: usize, strict_repeats: bool) -> bool {
    let mut has_base = false;
    let mut type_indices = BTreeSet::new();
    let mut type_entries = 0usize;
    for e in pattern {
        match e {
            PatEntry::Base(b) => {
                if *b >= base_size {
                    return false;
                }
                has_base = true;
            }
            PatEntry::Type(i) => {
                if *i >= width {
                    return false;
                }
                type_indices.insert(*i);
                type_entries += 1;
            }
        }
    }
    if !has_base || type_indices.is_empty() {
        return false;
    }
    if strict_repeats && type_entries != type_indices.len() {
        return false;
    }
    type_indices.iter().copied().eq(0..type_indices.len())
}

fn tuples_over(entries: &[PatEntry], arity: usize) -> Vec<Pattern> {
    let mut out: Vec<Pattern> = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|p| {
                entries.iter().map(move |e| {
                    let mut q = p.clone();
                    q.push(*e);
                    q
                })
            })
            .collect();
    }
    out
}

/// The admissible mixed tuples per symbol, with type vertices drawn from
/// `t0..t{depth-1}`, in lexicographic order.
pub fn admissible_patterns(
    lang: &Language,
    base_size: usize,
    depth: usize,
    strict_repeats: bool,
) -> Vec<Vec<Pattern>> {
    let entries: Vec<PatEntry> = (0..base_size)
        .map(PatEntry::Base)
        .chain((0..depth).map(PatEntry::Type))
        .collect();
    lang.relations
        .iter()
        .map(|rel| {
            let mut ps: Vec<Pattern> = tuples_over(&entries, rel.arity)
                .into_iter()
                .filter(|p| is_admissible(p, base_size, depth.min(lang.width()), strict_repeats))
                .collect();
            ps.sort();
            ps
        })
        .collect()
}

/// A weak type: a base together with one admissible-tuple set per symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeakType {
    pub base: Structure,
    pub width: usize,
    pub patterns: Vec<BTreeSet<Pattern>>,
}

impl WeakType {
    pub fn empty(base: Structure) -> WeakType {
        let width = base.language.width();
        let n = base.language.symbol_count();
        WeakType { base, width, patterns: vec![BTreeSet::new(); n] }
    }

    pub fn validate(&self, strict_repeats: bool) -> Result<(), CoreError> {
        self.base.validate()?;
        if self.patterns.len() != self.base.language.symbol_count() {
            return Err(CoreError::input("pattern sets do not match the language"));
        }
        for (idx, rel) in self.base.language.relations.iter().enumerate() {
            for p in &self.patterns[idx] {
                if p.len() != rel.arity {
                    return Err(CoreError::input(format!(
                        "pattern {p:?} has length {} but {} has arity {}",
                        p.len(),
                        rel.name,
                        rel.arity
                    )));
                }
                if !is_admissible(p, self.base.size, self.width, strict_repeats) {
                    return Err(CoreError::input(format!("pattern {p:?} is not admissible")));
                }
            }
        }
        Ok(())
    }

    /// Keep only patterns whose type vertices lie in `t0..t{d-1}`.
    pub fn restrict_depth(&self, d: usize) -> Vec<BTreeSet<Pattern>> {
        restrict_patterns_depth(&self.patterns, d)
    }

    pub fn pattern_count(&self) -> usize {
        self.patterns.iter().map(|s| s.len()).sum()
    }
}

pub fn restrict_patterns_depth(patterns: &[BTreeSet<Pattern>], d: usize) -> Vec<BTreeSet<Pattern>> {
    patterns
        .iter()
        .map(|set| {
            set.iter()
                .filter(|p| {
                    p.iter().all(|e| match e {
                        PatEntry::Type(i) => *i < d,
                        PatEntry::Base(_) => true,
                    })
                })
                .cloned()
                .collect()
        })
        .collect()
}

/// Restrict a weak type to a shorter initial segment of its base: the base is
/// truncated and patterns mentioning dropped base vertices disappear.
/// Type vertices are untouched.
pub fn restrict_weak_type_level(t: &WeakType, level: usize) -> Result<WeakType, CoreError> {
    let base = t.base.initial_segment(level)?;
    let patterns = t
        .patterns
        .iter()
        .map(|set| {
            set.iter()
                .filter(|p| {
                    p.iter().all(|e| match e {
                        PatEntry::Base(b) => *b < level,
                        PatEntry::Type(_) => true,
                    })
                })
                .cloned()
                .collect()
        })
        .collect();
    Ok(WeakType { base, width: t.width, patterns })
}

/// All weak types over `base`: every subset of the admissible-tuple universe,
/// in bitmask order over the sorted universe. Refuses when the count exceeds
/// the budget.
pub fn enumerate_weak_types(base: &Structure, cfg: &SearchConfig) -> Result<Vec<WeakType>, CoreError> {
    base.validate()?;
    let width = base.language.width();
    let universe = admissible_patterns(&base.language, base.size, width, cfg.strict_type_vertex_repeats);
    let flat: Vec<(usize, &Pattern)> = universe
        .iter()
        .enumerate()
        .flat_map(|(sym, ps)| ps.iter().map(move |p| (sym, p)))
        .collect();
    let n = flat.len();
    if n >= 63 || (1u64 << n) > cfg.budget {
        return Err(CoreError::budget(format!(
            "2^{n} weak types over a base of size {} exceeds the budget",
            base.size
        )));
    }
    let mut out = Vec::with_capacity(1usize << n);
    for mask in 0..(1u64 << n) {
        let mut t = WeakType::empty(base.clone());
        for (bit, (sym, p)) in flat.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                t.patterns[*sym].insert((*p).clone());
            }
        }
        out.push(t);
    }
    Ok(out)
}

/// Do two weak types over the same base agree once restricted to their first
/// `n` type vertices?
pub fn agree_as_n_types(a: &WeakType, b: &WeakType, n: usize) -> Result<bool, CoreError> {
    if a.base != b.base {
        return Err(CoreError::input("weak types over different bases cannot be compared"));
    }
    Ok(a.restrict_depth(n) == b.restrict_depth(n))
}

/// The weak type realised by a tuple of vertices above a level: pull every
/// admissible pattern back along `t_i ↦ tuple[i]` and test it in `a`.
/// Tuple entries beyond the width contribute nothing and are dropped.
pub fn weak_type_of_tuple(
    a: &Structure,
    level: usize,
    tuple: &[usize],
    cfg: &SearchConfig,
) -> Result<WeakType, CoreError> {
    a.validate()?;
    if level > a.size {
        return Err(CoreError::input(format!("level {level} out of range for size {}", a.size)));
    }
    if !tuple.windows(2).all(|w| w[0] < w[1]) {
        return Err(CoreError::input(format!("tuple {tuple:?} is not strictly increasing")));
    }
    if let Some(&v) = tuple.iter().find(|&&v| v < level || v >= a.size) {
        return Err(CoreError::input(format!(
            "tuple entry {v} outside the range {level}..{}",
            a.size
        )));
    }
    let width = a.language.width();
    let depth = tuple.len().min(width);
    let base = a.initial_segment(level)?;
    let universe = admissible_patterns(&a.language, level, depth, cfg.strict_type_vertex_repeats);
    let mut patterns: Vec<BTreeSet<Pattern>> = vec![BTreeSet::new(); a.language.symbol_count()];
    for (sym, ps) in universe.iter().enumerate() {
        for p in ps {
            let concrete: Vec<usize> = p
                .iter()
                .map(|e| match e {
                    PatEntry::Base(b) => *b,
                    PatEntry::Type(i) => tuple[*i],
                })
                .collect();
            if a.relations[sym].contains(&concrete) {
                patterns[sym].insert(p.clone());
            }
        }
    }
    Ok(WeakType { base, width, patterns })
}

/// A depth-`d` equivalence class of weak types, represented by the common
/// restriction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeNode {
    pub depth: usize,
    pub patterns: Vec<BTreeSet<Pattern>>,
}

impl TypeNode {
    pub fn of_weak_type(t: &WeakType, depth: usize) -> TypeNode {
        TypeNode { depth, patterns: t.restrict_depth(depth) }
    }

    pub fn parent(&self) -> Option<TypeNode> {
        if self.depth <= 1 {
            None
        } else {
            Some(TypeNode { depth: self.depth - 1, patterns: restrict_patterns_depth(&self.patterns, self.depth - 1) })
        }
    }

    pub fn restrict(&self, depth: usize) -> TypeNode {
        TypeNode { depth, patterns: restrict_patterns_depth(&self.patterns, depth) }
    }

    pub fn empty(lang: &Language, depth: usize) -> TypeNode {
        TypeNode { depth, patterns: vec![BTreeSet::new(); lang.symbol_count()] }
    }

    pub fn pattern_count(&self) -> usize {
        self.patterns.iter().map(|s| s.len()).sum()
    }

    /// Largest type index mentioned, plus one; zero for the empty node.
    pub fn effective_depth(&self) -> usize {
        self.patterns
            .iter()
            .flatten()
            .flat_map(|p| p.iter())
            .filter_map(|e| match e {
                PatEntry::Type(i) => Some(i + 1),
                PatEntry::Base(_) => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// The plus-structure of a base: one vertex per depth-`d` node for each depth
/// `1..=width`, on top of the base itself.
#[derive(Debug, Clone)]
pub struct PlusStructure {
    pub base: Structure,
    /// `levels[d-1]` lists every depth-`d` node, in bitmask order over the
    /// sorted admissible universe of that depth.
    pub levels: Vec<Vec<TypeNode>>,
    index: Vec<BTreeMap<Vec<BTreeSet<Pattern>>, usize>>,
}

pub fn plus_structure(base: &Structure, cfg: &SearchConfig) -> Result<PlusStructure, CoreError> {
    base.validate()?;
    let width = base.language.width();
    let mut levels = Vec::new();
    let mut index = Vec::new();
    let mut total: u64 = base.size as u64;
    for d in 1..=width {
        let universe = admissible_patterns(&base.language, base.size, d, cfg.strict_type_vertex_repeats);
        let flat: Vec<(usize, &Pattern)> = universe
            .iter()
            .enumerate()
            .flat_map(|(sym, ps)| ps.iter().map(move |p| (sym, p)))
            .collect();
        let n = flat.len();
        if n >= 63 || total.saturating_add(1u64 << n) > cfg.budget {
            return Err(CoreError::budget(format!(
                "plus-structure of a size-{} base needs 2^{n} depth-{d} nodes, over budget",
                base.size
            )));
        }
        total += 1u64 << n;
        let mut level = Vec::with_capacity(1usize << n);
        let mut idx = BTreeMap::new();
        for mask in 0..(1u64 << n) {
            let mut patterns: Vec<BTreeSet<Pattern>> = vec![BTreeSet::new(); base.language.symbol_count()];
            for (bit, (sym, p)) in flat.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    patterns[*sym].insert((*p).clone());
                }
            }
            idx.insert(patterns.clone(), level.len());
            level.push(TypeNode { depth: d, patterns });
        }
        levels.push(level);
        index.push(idx);
    }
    Ok(PlusStructure { base: base.clone(), levels, index })
}

impl PlusStructure {
    pub fn width(&self) -> usize {
        self.levels.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.base.size + self.levels.iter().map(|l| l.len()).sum::<usize>()
    }

    /// Vertex number of a node: base vertices first, then depth levels in
    /// order.
    pub fn node_vertex(&self, depth: usize, idx: usize) -> usize {
        self.base.size + self.levels[..depth - 1].iter().map(|l| l.len()).sum::<usize>() + idx
    }

    pub fn find(&self, node: &TypeNode) -> Option<(usize, usize)> {
        let d = node.depth;
        if d == 0 || d > self.levels.len() {
            return None;
        }
        self.index[d - 1].get(&node.patterns).map(|&i| (d, i))
    }

    pub fn parent_index(&self, depth: usize, idx: usize) -> Option<(usize, usize)> {
        let node = &self.levels[depth - 1][idx];
        let p = node.parent()?;
        self.find(&p)
    }

    /// Materialise the plus-structure as a plain structure: base tuples plus,
    /// for every node and every pattern peaking at the node's depth, the
    /// tuple through the node's ancestor chain.
    pub fn as_structure(&self) -> Structure {
        let mut s = Structure::empty(self.base.language.clone(), self.vertex_count());
        for (sym, tuples) in self.base.relations.iter().enumerate() {
            for t in tuples {
                s.relations[sym].insert(t.clone());
            }
        }
        for (li, level) in self.levels.iter().enumerate() {
            let d = li + 1;
            for node in level.iter() {
                // Ancestor chain: vertex for each depth 1..=d.
                let mut chain = Vec::with_capacity(d);
                for anc_d in 1..=d {
                    let anc = node.restrict(anc_d);
                    let (ad, ai) = self.find(&anc).expect("ancestors of nodes are nodes");
                    chain.push(self.node_vertex(ad, ai));
                }
                for (sym, ps) in node.patterns.iter().enumerate() {
                    for p in ps {
                        let peak = p
                            .iter()
                            .filter_map(|e| match e {
                                PatEntry::Type(i) => Some(*i),
                                PatEntry::Base(_) => None,
                            })
                            .max()
                            .expect("admissible patterns mention a type vertex");
                        if peak + 1 != d {
                            continue;
                        }
                        let tuple: Vec<usize> = p
                            .iter()
                            .map(|e| match e {
                                PatEntry::Base(b) => *b,
                                PatEntry::Type(i) => chain[*i],
                            })
                            .collect();
                        s.relations[sym].insert(tuple);
                    }
                }
            }
        }
        s
    }
}

/// The deduplicated weak types realised by tuples of `u` at every level,
/// ordered by level and then by pattern sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakTypeTree {
    pub nodes: Vec<WeakType>,
}

/// Containment order on realised weak types: `a ≤ b` when `a` is `b`
/// restricted to `a`'s level.
pub fn weak_type_le(a: &WeakType, b: &WeakType) -> bool {
    if a.base.size > b.base.size || !b.base.extends_initial(&a.base) {
        return false;
    }
    match restrict_weak_type_level(b, a.base.size) {
        Ok(r) => r.patterns == a.patterns,
        Err(_) => false,
    }
}

pub fn tree_of_weak_types(u: &Structure, cfg: &SearchConfig) -> Result<WeakTypeTree, CoreError> {
    u.validate()?;
    let width = u.language.width();
    let mut seen = BTreeSet::new();
    let mut nodes = Vec::new();
    for level in 0..=u.size {
        let above: Vec<usize> = (level..u.size).collect();
        for len in 1..=width.min(above.len()) {
            for tuple in increasing_tuples(&above, len) {
                let t = weak_type_of_tuple(u, level, &tuple, cfg)?;
                if seen.insert((t.base.size, t.patterns.clone())) {
                    nodes.push(t);
                }
            }
        }
    }
    nodes.sort_by(|a, b| (a.base.size, &a.patterns).cmp(&(b.base.size, &b.patterns)));
    Ok(WeakTypeTree { nodes })
}

/// Strictly increasing `len`-tuples over an increasing vertex list.
pub fn increasing_tuples(vertices: &[usize], len: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    vertices.iter().copied().combinations(len).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::path3;

    fn cfg() -> SearchConfig {
        SearchConfig::default()
    }

    #[test]
    fn admissibility_basics() {
        use PatEntry::*;
        // Graph width is 1.
        assert!(is_admissible(&[Base(0), Type(0)], 1, 1, false));
        assert!(is_admissible(&[Type(0), Base(0)], 1, 1, false));
        assert!(!is_admissible(&[Base(0), Base(0)], 1, 1, false), "no type vertex");
        assert!(!is_admissible(&[Type(0), Type(0)], 1, 2, false), "no base vertex");
        assert!(!is_admissible(&[Base(0), Type(1)], 1, 2, false), "skips t0");
        assert!(is_admissible(&[Base(0), Type(0), Type(0)], 1, 2, false));
        assert!(!is_admissible(&[Base(0), Type(0), Type(0)], 1, 2, true));
        assert!(is_admissible(&[Base(0), Type(1), Type(0)], 1, 2, true));
    }

    #[test]
    fn weak_type_counts_over_small_graph_bases() {
        let one = Structure::empty(Language::graph(), 1);
        assert_eq!(enumerate_weak_types(&one, &cfg()).unwrap().len(), 4);
        let two = Structure::empty(Language::graph(), 2);
        assert_eq!(enumerate_weak_types(&two, &cfg()).unwrap().len(), 16);
        let none = Structure::empty(Language::graph(), 0);
        assert_eq!(enumerate_weak_types(&none, &cfg()).unwrap().len(), 1);
    }

    #[test]
    fn empty_base_has_one_weak_type_in_any_language() {
        for lang in [
            Language::graph(),
            Language::new(&[("E", 2), ("H", 3)]).unwrap(),
            Language::new(&[("U", 1)]).unwrap(),
            Language::new(&[("Q", 4)]).unwrap(),
        ] {
            let base = Structure::empty(lang, 0);
            assert_eq!(enumerate_weak_types(&base, &cfg()).unwrap().len(), 1);
        }
    }

    #[test]
    fn path_tuple_types() {
        use PatEntry::*;
        let p = path3();
        let t = weak_type_of_tuple(&p, 1, &[1, 2], &cfg()).unwrap();
        let expected: BTreeSet<Pattern> =
            [vec![Base(0), Type(0)], vec![Type(0), Base(0)]].into_iter().collect();
        assert_eq!(t.patterns[0], expected, "only the edges between 0 and 1 are recorded");

        let t2 = weak_type_of_tuple(&p, 1, &[2], &cfg()).unwrap();
        assert!(t2.patterns[0].is_empty());
        assert_ne!(t.patterns, t2.patterns);
    }

    #[test]
    fn level_zero_tuple_type_is_empty() {
        let p = path3();
        for tuple in [vec![0], vec![1], vec![2]] {
            let t = weak_type_of_tuple(&p, 0, &tuple, &cfg()).unwrap();
            assert_eq!(t.pattern_count(), 0);
        }
    }

    #[test]
    fn tuple_validation() {
        let p = path3();
        assert!(weak_type_of_tuple(&p, 1, &[2, 1], &cfg()).is_err());
        assert!(weak_type_of_tuple(&p, 2, &[1], &cfg()).is_err());
        assert!(weak_type_of_tuple(&p, 1, &[3], &cfg()).is_err());
    }

    #[test]
    fn plus_sizes_for_small_graph_bases() {
        let one = Structure::empty(Language::graph(), 1);
        assert_eq!(plus_structure(&one, &cfg()).unwrap().vertex_count(), 5);
        let two = Structure::empty(Language::graph(), 2);
        assert_eq!(plus_structure(&two, &cfg()).unwrap().vertex_count(), 18);
    }

    #[test]
    fn empty_base_plus_is_a_chain() {
        let lang = Language::new(&[("E", 2), ("H", 3)]).unwrap();
        let base = Structure::empty(lang, 0);
        let plus = plus_structure(&base, &cfg()).unwrap();
        assert_eq!(plus.vertex_count(), 2);
        assert_eq!(plus.levels[0].len(), 1);
        assert_eq!(plus.levels[1].len(), 1);
        assert_eq!(plus.parent_index(2, 0), Some((1, 0)));

        let g = Structure::empty(Language::graph(), 0);
        assert_eq!(plus_structure(&g, &cfg()).unwrap().vertex_count(), 1);
    }

    #[test]
    fn tuple_entries_beyond_width_are_dropped() {
        let p = path3();
        let full = weak_type_of_tuple(&p, 0, &[0, 1, 2], &cfg()).unwrap();
        let prefix = weak_type_of_tuple(&p, 0, &[0], &cfg()).unwrap();
        assert_eq!(full, prefix);
    }

    #[test]
    fn weak_type_tree_of_path_contains_distinct_level_one_nodes() {
        let tree = tree_of_weak_types(&path3(), &cfg()).unwrap();
        let level1: Vec<&WeakType> = tree.nodes.iter().filter(|t| t.base.size == 1).collect();
        assert_eq!(level1.len(), 2);
        assert!(weak_type_le(&tree.nodes[0], &tree.nodes[0]));
    }

    #[test]
    fn restriction_order_on_tree_nodes() {
        let tree = tree_of_weak_types(&path3(), &SearchConfig::default()).unwrap();
        for a in &tree.nodes {
            for b in &tree.nodes {
                if weak_type_le(a, b) && weak_type_le(b, a) {
                    assert_eq!(a, b);
                }
            }
        }
    }
}
