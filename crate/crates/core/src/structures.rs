//! Finite enumerated relational structures.
//!
//! Vertices are `0..size` and the linear order on them is the numeric order;
//! it is never stored as a relation. Embeddings are strictly increasing maps
//! that preserve and reflect every relation. Monomorphisms (used by
//! forbidden-substructure families in [`FamilyMode::Monomorphism`] mode) are
//! only injective and only preserve relations forward.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
}

/// A finite relational signature. The order relation is implicit and never
/// listed here.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Language {
    pub relations: Vec<Relation>,
}

impl Language {
    pub fn new(relations: &[(&str, usize)]) -> Result<Language, CoreError> {
        let lang = Language {
            relations: relations
                .iter()
                .map(|(name, arity)| Relation { name: name.to_string(), arity: *arity })
                .collect(),
        };
        lang.validate()?;
        Ok(lang)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let mut seen = BTreeSet::new();
        for rel in &self.relations {
            if rel.arity == 0 {
                return Err(CoreError::input(format!("relation {} has arity 0", rel.name)));
            }
            if !seen.insert(rel.name.as_str()) {
                return Err(CoreError::input(format!("duplicate relation name {}", rel.name)));
            }
        }
        Ok(())
    }

    /// Single binary symbol `E`; directed graphs. An undirected edge is stored
    /// as both orientations.
    pub fn graph() -> Language {
        Language::new(&[("E", 2)]).unwrap()
    }

    pub fn max_arity(&self) -> usize {
        self.relations.iter().map(|r| r.arity).max().unwrap_or(0)
    }

    /// Number of retained type vertices for weak types: arity − 1, or 0 for
    /// unary-only and empty languages.
    pub fn width(&self) -> usize {
        self.max_arity().saturating_sub(1)
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn symbol_count(&self) -> usize {
        self.relations.len()
    }
}

/// A finite enumerated structure: vertex set `0..size`, one tuple set per
/// relation symbol of the language, positionally aligned with
/// `language.relations`. Tuples may repeat vertices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Structure {
    pub language: Language,
    pub size: usize,
    pub relations: Vec<BTreeSet<Vec<usize>>>,
}

impl Structure {
    pub fn empty(language: Language, size: usize) -> Structure {
        let n = language.symbol_count();
        Structure { language, size, relations: vec![BTreeSet::new(); n] }
    }

    /// Builds and validates a structure from `(symbol name, tuples)` pairs.
    pub fn with_tuples(
        language: Language,
        size: usize,
        tuples: &[(&str, &[&[usize]])],
    ) -> Result<Structure, CoreError> {
        let mut s = Structure::empty(language, size);
        for (name, ts) in tuples {
            let idx = s
                .language
                .symbol_index(name)
                .ok_or_else(|| CoreError::input(format!("unknown relation symbol {name}")))?;
            for t in *ts {
                s.add_tuple(idx, t.to_vec())?;
            }
        }
        Ok(s)
    }

    pub fn add_tuple(&mut self, symbol: usize, tuple: Vec<usize>) -> Result<(), CoreError> {
        let rel = self
            .language
            .relations
            .get(symbol)
            .ok_or_else(|| CoreError::input(format!("relation index {symbol} out of range")))?;
        if tuple.len() != rel.arity {
            return Err(CoreError::input(format!(
                "tuple {:?} has length {} but {} has arity {}",
                tuple,
                tuple.len(),
                rel.name,
                rel.arity
            )));
        }
        if let Some(&v) = tuple.iter().find(|&&v| v >= self.size) {
            return Err(CoreError::input(format!(
                "tuple {:?} for {} mentions vertex {} but size is {}",
                tuple, rel.name, v, self.size
            )));
        }
        self.relations[symbol].insert(tuple);
        Ok(())
    }

    pub fn has_tuple(&self, symbol: usize, tuple: &[usize]) -> bool {
        self.relations[symbol].contains(tuple)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        self.language.validate()?;
        if self.relations.len() != self.language.symbol_count() {
            return Err(CoreError::input(format!(
                "{} tuple sets for {} relation symbols",
                self.relations.len(),
                self.language.symbol_count()
            )));
        }
        for (idx, rel) in self.language.relations.iter().enumerate() {
            for t in &self.relations[idx] {
                if t.len() != rel.arity {
                    return Err(CoreError::input(format!(
                        "tuple {:?} has length {} but {} has arity {}",
                        t,
                        t.len(),
                        rel.name,
                        rel.arity
                    )));
                }
                if let Some(&v) = t.iter().find(|&&v| v >= self.size) {
                    return Err(CoreError::input(format!(
                        "tuple {:?} for {} mentions vertex {} but size is {}",
                        t, rel.name, v, self.size
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.iter().map(|r| r.len()).sum()
    }

    /// The substructure induced on a strictly increasing vertex list,
    /// relabeled to `0..vertices.len()`.
    pub fn induced_substructure(&self, vertices: &[usize]) -> Result<Structure, CoreError> {
        if !vertices.windows(2).all(|w| w[0] < w[1]) {
            return Err(CoreError::input(format!("vertex list {vertices:?} is not strictly increasing")));
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= self.size) {
            return Err(CoreError::input(format!("vertex {v} out of range for size {}", self.size)));
        }
        let mut out = Structure::empty(self.language.clone(), vertices.len());
        for (idx, tuples) in self.relations.iter().enumerate() {
            for t in tuples {
                if let Some(relabeled) = t
                    .iter()
                    .map(|v| vertices.binary_search(v).ok())
                    .collect::<Option<Vec<usize>>>()
                {
                    out.relations[idx].insert(relabeled);
                }
            }
        }
        Ok(out)
    }

    /// The initial segment on vertices `0..v`.
    pub fn initial_segment(&self, v: usize) -> Result<Structure, CoreError> {
        if v > self.size {
            return Err(CoreError::input(format!("initial segment {v} out of range for size {}", self.size)));
        }
        let vertices: Vec<usize> = (0..v).collect();
        self.induced_substructure(&vertices)
    }

    /// Does `self` restricted to `0..small.size` equal `small`?
    pub fn extends_initial(&self, small: &Structure) -> bool {
        small.size <= self.size
            && self.language == small.language
            && self.initial_segment(small.size).map(|s| s == *small).unwrap_or(false)
    }
}

/// A strictly increasing map preserving and reflecting every relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub source: Structure,
    pub target: Structure,
    pub map: Vec<usize>,
}

impl Embedding {
    pub fn new(source: Structure, target: Structure, map: Vec<usize>) -> Result<Embedding, CoreError> {
        if source.language != target.language {
            return Err(CoreError::language("embedding endpoints use different languages"));
        }
        if !is_embedding_map(&source, &target, &map) {
            return Err(CoreError::input(format!("map {map:?} is not an embedding")));
        }
        Ok(Embedding { source, target, map })
    }

    pub fn identity(s: &Structure) -> Embedding {
        Embedding { source: s.clone(), target: s.clone(), map: (0..s.size).collect() }
    }

    pub fn image(&self) -> Vec<usize> {
        self.map.clone()
    }

    /// `other ∘ self`, requiring `self.target == other.source`.
    pub fn then(&self, other: &Embedding) -> Result<Embedding, CoreError> {
        if self.target != other.source {
            return Err(CoreError::input("embedding composition endpoints do not match"));
        }
        Ok(Embedding {
            source: self.source.clone(),
            target: other.target.clone(),
            map: self.map.iter().map(|&v| other.map[v]).collect(),
        })
    }
}

/// Strictly increasing, in range, with `t ∈ R^source ⟺ map(t) ∈ R^target`
/// for every symbol and tuple.
pub fn is_embedding_map(source: &Structure, target: &Structure, map: &[usize]) -> bool {
    if map.len() != source.size {
        return false;
    }
    if !map.windows(2).all(|w| w[0] < w[1]) {
        return false;
    }
    if map.iter().any(|&v| v >= target.size) {
        return false;
    }
    match target.induced_substructure(map) {
        Ok(induced) => induced.relations == source.relations,
        Err(_) => false,
    }
}

/// All embeddings of `a` into `b`, ordered lexicographically by vertex map.
pub fn enumerate_embeddings(a: &Structure, b: &Structure) -> Result<Vec<Embedding>, CoreError> {
    if a.language != b.language {
        return Err(CoreError::language("embedding enumeration across different languages"));
    }
    let mut out = Vec::new();
    if a.size > b.size {
        return Ok(out);
    }
    for combo in (0..b.size).combinations(a.size) {
        if b.induced_substructure(&combo)?.relations == a.relations {
            out.push(Embedding { source: a.clone(), target: b.clone(), map: combo });
        }
    }
    Ok(out)
}

fn monomorphism_search(
    f: &Structure,
    a: &Structure,
    assignment: &mut Vec<usize>,
    used: &mut Vec<bool>,
) -> bool {
    let v = assignment.len();
    if v == f.size {
        return true;
    }
    'cand: for w in 0..a.size {
        if used[w] {
            continue;
        }
        assignment.push(w);
        used[w] = true;
        // Reject as soon as a fully assigned forbidden tuple has no image.
        for (idx, tuples) in f.relations.iter().enumerate() {
            for t in tuples {
                if t.iter().all(|&x| x < assignment.len()) && t.contains(&v) {
                    let image: Vec<usize> = t.iter().map(|&x| assignment[x]).collect();
                    if !a.relations[idx].contains(&image) {
                        assignment.pop();
                        used[w] = false;
                        continue 'cand;
                    }
                }
            }
        }
        if monomorphism_search(f, a, assignment, used) {
            return true;
        }
        assignment.pop();
        used[w] = false;
    }
    false
}

/// Is there an injective map `f → a` carrying every tuple of `f` to a tuple
/// of `a`? Neither monotone nor reflecting.
pub fn exists_monomorphism(f: &Structure, a: &Structure) -> bool {
    if f.size > a.size {
        return false;
    }
    let mut assignment = Vec::with_capacity(f.size);
    let mut used = vec![false; a.size];
    monomorphism_search(f, a, &mut assignment, &mut used)
}

fn embedding_search(f: &Structure, a: &Structure, assignment: &mut Vec<usize>) -> bool {
    let v = assignment.len();
    if v == f.size {
        return true;
    }
    let lo = assignment.last().map(|&w| w + 1).unwrap_or(0);
    'cand: for w in lo..a.size {
        if a.size - w < f.size - v {
            break;
        }
        assignment.push(w);
        // Preserve: tuples of f that just became fully assigned must land in a.
        for (idx, tuples) in f.relations.iter().enumerate() {
            for t in tuples {
                if t.contains(&v) && t.iter().all(|&x| x <= v) {
                    let image: Vec<usize> = t.iter().map(|&x| assignment[x]).collect();
                    if !a.relations[idx].contains(&image) {
                        assignment.pop();
                        continue 'cand;
                    }
                }
            }
        }
        // Reflect: tuples of a that just fell inside the image must pull back.
        for (idx, tuples) in a.relations.iter().enumerate() {
            for t in tuples {
                if t.contains(&w) && t.iter().all(|x| assignment.binary_search(x).is_ok()) {
                    let pre: Vec<usize> =
                        t.iter().map(|x| assignment.binary_search(x).unwrap()).collect();
                    if !f.relations[idx].contains(&pre) {
                        assignment.pop();
                        continue 'cand;
                    }
                }
            }
        }
        if embedding_search(f, a, assignment) {
            return true;
        }
        assignment.pop();
    }
    false
}

pub fn exists_embedding(f: &Structure, a: &Structure) -> bool {
    if f.size > a.size {
        return false;
    }
    let mut assignment = Vec::with_capacity(f.size);
    embedding_search(f, a, &mut assignment)
}

/// Every pair of vertices co-occurs in some relation tuple. With
/// `distinct_only` the quantifier skips the diagonal; otherwise each vertex
/// must itself appear in some tuple.
pub fn is_irreducible(a: &Structure, distinct_only: bool) -> bool {
    for u in 0..a.size {
        for v in u..a.size {
            if u == v && distinct_only {
                continue;
            }
            let covered = a
                .relations
                .iter()
                .flatten()
                .any(|t| t.contains(&u) && t.contains(&v));
            if !covered {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FamilyMode {
    /// Members admit no embedding from a forbidden structure.
    Embedding,
    /// Members admit no monomorphism from a forbidden structure.
    Monomorphism,
}

/// A forbidden-substructure family. An empty forbidden list is the
/// unconstrained class of all structures over the language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HereditaryFamily {
    pub language: Language,
    pub forbidden: Vec<Structure>,
    pub mode: FamilyMode,
}

impl HereditaryFamily {
    pub fn new(
        language: Language,
        forbidden: Vec<Structure>,
        mode: FamilyMode,
    ) -> Result<HereditaryFamily, CoreError> {
        for f in &forbidden {
            if f.language != language {
                return Err(CoreError::language("forbidden structure over a different language"));
            }
            f.validate()?;
        }
        Ok(HereditaryFamily { language, forbidden, mode })
    }

    pub fn unconstrained(language: Language) -> HereditaryFamily {
        HereditaryFamily { language, forbidden: Vec::new(), mode: FamilyMode::Embedding }
    }

    /// Reducible forbidden structures make embedding-mode families behave
    /// oddly (membership is still well defined); callers may surface these.
    pub fn irreducibility_warnings(&self, distinct_only: bool) -> Vec<String> {
        if self.mode != FamilyMode::Embedding {
            return Vec::new();
        }
        self.forbidden
            .iter()
            .enumerate()
            .filter(|(_, f)| !is_irreducible(f, distinct_only))
            .map(|(i, _)| format!("forbidden structure #{i} is not irreducible"))
            .collect()
    }

    pub fn all_forbidden_irreducible(&self, distinct_only: bool) -> bool {
        self.forbidden.iter().all(|f| is_irreducible(f, distinct_only))
    }

    pub fn member(&self, a: &Structure) -> Result<bool, CoreError> {
        if a.language != self.language {
            return Err(CoreError::language("membership test across different languages"));
        }
        for f in &self.forbidden {
            let hit = match self.mode {
                FamilyMode::Embedding => exists_embedding(f, a),
                FamilyMode::Monomorphism => exists_monomorphism(f, a),
            };
            if hit {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Convenience alias mirroring the operation vocabulary used by the CLI.
pub fn family_member(k: &HereditaryFamily, a: &Structure) -> Result<bool, CoreError> {
    k.member(a)
}

/// A complete graph: all ordered pairs of distinct vertices.
pub fn complete_graph(n: usize) -> Structure {
    let mut s = Structure::empty(Language::graph(), n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                s.relations[0].insert(vec![u, v]);
            }
        }
    }
    s
}

/// The two-edge path 0 – 1 – 2 (both orientations of each edge).
pub fn path3() -> Structure {
    Structure::with_tuples(Language::graph(), 3, &[("E", &[&[0, 1], &[1, 0], &[1, 2], &[2, 1]])])
        .unwrap()
}
