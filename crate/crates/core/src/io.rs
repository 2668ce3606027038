//! Versioned JSON documents for every object the tools exchange, plus DOT
//! renderings of the tree-shaped ones.
//!
//! Serialization is canonical: relation symbols and tuples are emitted in
//! sorted order, type vertices are written `"t0"`, `"t1"`, ... and parsing
//! re-validates everything, so `parse ∘ serialize` is the identity on valid
//! objects and parse errors name the offending tuple.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::amalgamation::AmalgamationInstance;
use crate::error::CoreError;
use crate::respect::PlusEmbedding;
use crate::structures::{FamilyMode, HereditaryFamily, Language, Structure};
use crate::typetrees::{StarEntry, TypeTree};
use crate::weaktypes::{PatEntry, Pattern, PlusStructure, TypeNode, WeakTypeTree};

pub const FORMAT_VERSION: u32 = 1;

fn check_version(version: u32) -> Result<(), CoreError> {
    if version != FORMAT_VERSION {
        return Err(CoreError::input(format!(
            "unsupported document version {version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationDoc {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureDoc {
    pub version: u32,
    /// Free-form label, kept through document round-trips, ignored by checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub language: Vec<RelationDoc>,
    pub size: usize,
    pub relations: BTreeMap<String, Vec<Vec<usize>>>,
}

impl StructureDoc {
    pub fn of(s: &Structure) -> StructureDoc {
        StructureDoc {
            version: FORMAT_VERSION,
            name: None,
            comment: None,
            language: s
                .language
                .relations
                .iter()
                .map(|r| RelationDoc { name: r.name.clone(), arity: r.arity })
                .collect(),
            size: s.size,
            relations: s
                .language
                .relations
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    (r.name.clone(), s.relations[i].iter().cloned().collect::<Vec<_>>())
                })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<Structure, CoreError> {
        check_version(self.version)?;
        let spec: Vec<(&str, usize)> =
            self.language.iter().map(|r| (r.name.as_str(), r.arity)).collect();
        let lang = Language::new(&spec)?;
        let mut s = Structure::empty(lang.clone(), self.size);
        for (name, tuples) in &self.relations {
            let sym = lang
                .symbol_index(name)
                .ok_or_else(|| CoreError::input(format!("unknown relation symbol {name:?}")))?;
            for t in tuples {
                s.add_tuple(sym, t.clone()).map_err(|e| {
                    CoreError::input(format!("tuple {t:?} under symbol {name:?}: {e}"))
                })?;
            }
        }
        Ok(s)
    }
}

pub fn structure_to_json(s: &Structure) -> Result<String, CoreError> {
    Ok(serde_json::to_string_pretty(&StructureDoc::of(s))?)
}

pub fn parse_structure(text: &str) -> Result<Structure, CoreError> {
    let doc: StructureDoc = serde_json::from_str(text)?;
    doc.build()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyDoc {
    pub version: u32,
    pub language: Vec<RelationDoc>,
    pub mode: FamilyMode,
    pub forbidden: Vec<StructureDoc>,
}

impl FamilyDoc {
    pub fn of(k: &HereditaryFamily) -> FamilyDoc {
        FamilyDoc {
            version: FORMAT_VERSION,
            language: k
                .language
                .relations
                .iter()
                .map(|r| RelationDoc { name: r.name.clone(), arity: r.arity })
                .collect(),
            mode: k.mode,
            forbidden: k.forbidden.iter().map(StructureDoc::of).collect(),
        }
    }

    pub fn build(&self) -> Result<HereditaryFamily, CoreError> {
        check_version(self.version)?;
        let spec: Vec<(&str, usize)> =
            self.language.iter().map(|r| (r.name.as_str(), r.arity)).collect();
        let lang = Language::new(&spec)?;
        let forbidden = self
            .forbidden
            .iter()
            .map(|d| d.build())
            .collect::<Result<Vec<_>, _>>()?;
        HereditaryFamily::new(lang, forbidden, self.mode)
    }
}

pub fn family_to_json(k: &HereditaryFamily) -> Result<String, CoreError> {
    Ok(serde_json::to_string_pretty(&FamilyDoc::of(k))?)
}

pub fn parse_family(text: &str) -> Result<HereditaryFamily, CoreError> {
    let doc: FamilyDoc = serde_json::from_str(text)?;
    doc.build()
}

/// A pattern entry in a document: a base vertex number, or a type vertex
/// written `"t0"`, `"t1"`, ...
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryDoc {
    Base(usize),
    Type(String),
}

impl EntryDoc {
    fn of(e: &PatEntry) -> EntryDoc {
        match e {
            PatEntry::Base(b) => EntryDoc::Base(*b),
            PatEntry::Type(i) => EntryDoc::Type(format!("t{i}")),
        }
    }

    fn build(&self) -> Result<PatEntry, CoreError> {
        match self {
            EntryDoc::Base(b) => Ok(PatEntry::Base(*b)),
            EntryDoc::Type(s) => {
                let idx = s
                    .strip_prefix('t')
                    .and_then(|rest| rest.parse::<usize>().ok())
                    .ok_or_else(|| {
                        CoreError::input(format!("bad type vertex {s:?}, expected \"t0\", \"t1\", ..."))
                    })?;
                Ok(PatEntry::Type(idx))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeNodeDoc {
    pub depth: usize,
    pub patterns: BTreeMap<String, Vec<Vec<EntryDoc>>>,
}

impl TypeNodeDoc {
    pub fn of(lang: &Language, node: &TypeNode) -> TypeNodeDoc {
        TypeNodeDoc {
            depth: node.depth,
            patterns: lang
                .relations
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    (
                        r.name.clone(),
                        node.patterns[i]
                            .iter()
                            .map(|p| p.iter().map(EntryDoc::of).collect())
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn build(&self, lang: &Language) -> Result<TypeNode, CoreError> {
        let mut patterns = vec![std::collections::BTreeSet::new(); lang.symbol_count()];
        for (name, ps) in &self.patterns {
            let sym = lang
                .symbol_index(name)
                .ok_or_else(|| CoreError::input(format!("unknown relation symbol {name:?}")))?;
            for p in ps {
                let pattern: Pattern =
                    p.iter().map(EntryDoc::build).collect::<Result<_, _>>().map_err(|e| {
                        CoreError::input(format!("pattern under {name:?}: {e}"))
                    })?;
                patterns[sym].insert(pattern);
            }
        }
        Ok(TypeNode { depth: self.depth, patterns })
    }
}

/// A plus-embedding with implied endpoints: just the base map and the pins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapDoc {
    pub base_map: Vec<usize>,
    pub pins: Vec<PinDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PinDoc {
    pub node: TypeNodeDoc,
    pub image: TypeNodeDoc,
}

impl MapDoc {
    pub fn of(h: &PlusEmbedding) -> MapDoc {
        let lang = &h.source.language;
        MapDoc {
            base_map: h.base_map.clone(),
            pins: h
                .pins
                .iter()
                .map(|(n, y)| PinDoc {
                    node: TypeNodeDoc::of(lang, n),
                    image: TypeNodeDoc::of(lang, y),
                })
                .collect(),
        }
    }

    pub fn build(&self, source: &Structure, target: &Structure) -> Result<PlusEmbedding, CoreError> {
        let lang = &source.language;
        let pins = self
            .pins
            .iter()
            .map(|p| Ok((p.node.build(lang)?, p.image.build(lang)?)))
            .collect::<Result<Vec<_>, CoreError>>()?;
        PlusEmbedding::new(source.clone(), target.clone(), self.base_map.clone(), pins)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlusEmbeddingDoc {
    pub version: u32,
    pub source: StructureDoc,
    pub target: StructureDoc,
    pub map: MapDoc,
}

impl PlusEmbeddingDoc {
    pub fn of(h: &PlusEmbedding) -> PlusEmbeddingDoc {
        PlusEmbeddingDoc {
            version: FORMAT_VERSION,
            source: StructureDoc::of(&h.source),
            target: StructureDoc::of(&h.target),
            map: MapDoc::of(h),
        }
    }

    pub fn build(&self) -> Result<PlusEmbedding, CoreError> {
        check_version(self.version)?;
        let source = self.source.build()?;
        let target = self.target.build()?;
        self.map.build(&source, &target)
    }
}

pub fn plus_embedding_to_json(h: &PlusEmbedding) -> Result<String, CoreError> {
    Ok(serde_json::to_string_pretty(&PlusEmbeddingDoc::of(h))?)
}

pub fn parse_plus_embedding(text: &str) -> Result<PlusEmbedding, CoreError> {
    let doc: PlusEmbeddingDoc = serde_json::from_str(text)?;
    doc.build()
}

/// An amalgamation square: family, the three bases, and the three maps with
/// implied endpoints (`f: A⁺ → B⁺`, `f2: A⁺ → B′⁺`, `g: B⁺ → B′⁺`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub version: u32,
    pub family: FamilyDoc,
    pub a: StructureDoc,
    pub b: StructureDoc,
    pub b2: StructureDoc,
    pub f: MapDoc,
    pub f2: MapDoc,
    pub g: MapDoc,
}

impl InstanceDoc {
    pub fn of(inst: &AmalgamationInstance) -> InstanceDoc {
        InstanceDoc {
            version: FORMAT_VERSION,
            family: FamilyDoc::of(&inst.family),
            a: StructureDoc::of(&inst.a),
            b: StructureDoc::of(&inst.b),
            b2: StructureDoc::of(&inst.b2),
            f: MapDoc::of(&inst.f),
            f2: MapDoc::of(&inst.f2),
            g: MapDoc::of(&inst.g),
        }
    }

    pub fn build(&self) -> Result<AmalgamationInstance, CoreError> {
        check_version(self.version)?;
        let family = self.family.build()?;
        let a = self.a.build()?;
        let b = self.b.build()?;
        let b2 = self.b2.build()?;
        let f = self.f.build(&a, &b)?;
        let f2 = self.f2.build(&a, &b2)?;
        let g = self.g.build(&b, &b2)?;
        let inst = AmalgamationInstance { family, a, b, b2, f, f2, g };
        inst.validate()?;
        Ok(inst)
    }
}

pub fn instance_to_json(inst: &AmalgamationInstance) -> Result<String, CoreError> {
    Ok(serde_json::to_string_pretty(&InstanceDoc::of(inst))?)
}

pub fn parse_instance(text: &str) -> Result<AmalgamationInstance, CoreError> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    doc.build()
}

pub fn pattern_string(lang: &Language, sym: usize, p: &Pattern) -> String {
    let entries: Vec<String> = p
        .iter()
        .map(|e| match e {
            PatEntry::Base(b) => b.to_string(),
            PatEntry::Type(i) => format!("t{i}"),
        })
        .collect();
    format!("{}({})", lang.relations[sym].name, entries.join(","))
}

pub fn node_label(lang: &Language, node: &TypeNode) -> String {
    let mut parts = Vec::new();
    for (sym, set) in node.patterns.iter().enumerate() {
        for p in set {
            parts.push(pattern_string(lang, sym, p));
        }
    }
    if parts.is_empty() {
        "{}".to_string()
    } else {
        format!("{{{}}}", parts.join(", "))
    }
}

fn star_tuple_string(lang: &Language, sym: usize, t: &[StarEntry]) -> String {
    let entries: Vec<String> = t
        .iter()
        .map(|e| match e {
            StarEntry::Base(b) => b.to_string(),
            StarEntry::Star => "*".to_string(),
        })
        .collect();
    format!("{}({})", lang.relations[sym].name, entries.join(","))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// The level-by-level class tree of a structure, one node per class, edges
/// from parent classes to their refinements.
pub fn type_tree_dot(lang: &Language, tree: &TypeTree) -> String {
    let mut out = String::from("digraph type_tree {\n  rankdir=TB;\n  node [shape=box];\n");
    for (level, classes) in tree.levels.iter().enumerate() {
        for (idx, class) in classes.iter().enumerate() {
            let members: Vec<String> = class.members.iter().map(|m| m.to_string()).collect();
            let mut shape_parts = Vec::new();
            for (sym, set) in class.shape.iter().enumerate() {
                for t in set {
                    shape_parts.push(star_tuple_string(lang, sym, t));
                }
            }
            let label = format!(
                "level {level}: {{{}}}{}",
                members.join(","),
                if shape_parts.is_empty() {
                    String::new()
                } else {
                    format!("\\n{}", shape_parts.join(", "))
                }
            );
            let _ = writeln!(out, "  n{level}_{idx} [label=\"{}\"];", dot_escape(&label));
            if let Some(p) = tree.parent_of(level, idx) {
                let _ = writeln!(out, "  n{}_{} -> n{level}_{idx};", level - 1, p);
            }
        }
    }
    out.push_str("}\n");
    out
}

/// The realised weak types of a structure under restriction order, edges on
/// covering pairs.
pub fn weak_type_tree_dot(lang: &Language, tree: &WeakTypeTree) -> String {
    use crate::weaktypes::weak_type_le;
    let mut out = String::from("digraph weak_type_tree {\n  rankdir=TB;\n  node [shape=box];\n");
    for (i, t) in tree.nodes.iter().enumerate() {
        let node = TypeNode { depth: t.width, patterns: t.patterns.clone() };
        let label = format!("base {}: {}", t.base.size, node_label(lang, &node));
        let _ = writeln!(out, "  w{i} [label=\"{}\"];", dot_escape(&label));
    }
    for (i, a) in tree.nodes.iter().enumerate() {
        for (j, b) in tree.nodes.iter().enumerate() {
            if i == j || !weak_type_le(a, b) || a == b {
                continue;
            }
            let covered = tree.nodes.iter().enumerate().any(|(m, c)| {
                m != i && m != j && weak_type_le(a, c) && weak_type_le(c, b) && c != a && c != b
            });
            if !covered {
                let _ = writeln!(out, "  w{i} -> w{j};");
            }
        }
    }
    out.push_str("}\n");
    out
}

/// The plus-structure over a base: base vertices, then one node per depth
/// and pattern set, edges to parents.
pub fn plus_dot(p: &PlusStructure) -> String {
    let lang = &p.base.language;
    let mut out = String::from("digraph plus_structure {\n  rankdir=BT;\n  node [shape=box];\n");
    for v in 0..p.base.size {
        let _ = writeln!(out, "  b{v} [label=\"{v}\", shape=circle];");
    }
    for (li, level) in p.levels.iter().enumerate() {
        let depth = li + 1;
        for (idx, node) in level.iter().enumerate() {
            let label = format!("d{depth} {}", node_label(lang, node));
            let _ = writeln!(out, "  t{depth}_{idx} [label=\"{}\"];", dot_escape(&label));
            if let Some((pd, pi)) = p.parent_index(depth, idx) {
                let _ = writeln!(out, "  t{depth}_{idx} -> t{pd}_{pi};");
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amalgamation::ternary_counterexample;
    use crate::config::SearchConfig;
    use crate::structures::path3;
    use crate::typetrees::type_tree;
    use crate::weaktypes::{plus_structure, tree_of_weak_types};

    #[test]
    fn structure_documents_round_trip() {
        let s = path3();
        let json = structure_to_json(&s).unwrap();
        assert_eq!(parse_structure(&json).unwrap(), s);
        assert!(json.contains("\"E\""));
    }

    #[test]
    fn bad_tuples_are_named_in_errors() {
        let text = r#"{
            "version": 1,
            "language": [{"name": "E", "arity": 2}],
            "size": 2,
            "relations": {"E": [[0, 5]]}
        }"#;
        let err = parse_structure(text).unwrap_err();
        assert!(err.to_string().contains("[0, 5]"), "got: {err}");
    }

    #[test]
    fn instance_documents_round_trip() {
        let inst = ternary_counterexample().unwrap();
        let json = instance_to_json(&inst).unwrap();
        let back = parse_instance(&json).unwrap();
        assert_eq!(back.b2, inst.b2);
        assert!(back.g.equivalent(&inst.g));
        assert!(json.contains("\"t0\""), "type vertices render as t0, t1");
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let s = path3();
        let json = structure_to_json(&s).unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(parse_structure(&json).is_err());
    }

    #[test]
    fn dot_outputs_mention_every_node() {
        let s = path3();
        let tree = type_tree(&s).unwrap();
        let dot = type_tree_dot(&s.language, &tree);
        assert!(dot.contains("level 1"));
        let cfg = SearchConfig::default();
        let pd = plus_dot(&plus_structure(&s, &cfg).unwrap());
        assert!(pd.starts_with("digraph"));
        let wt = weak_type_tree_dot(&s.language, &tree_of_weak_types(&s, &cfg).unwrap());
        assert!(wt.contains("base 0"));
    }
}
