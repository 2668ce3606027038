//! Embeddings between plus-structures, kept symbolic, and the
//! type-respecting checks built on them.
//!
//! A plus-structure usually has far too many type nodes to write down, so an
//! embedding is stored as a base map plus finitely many pinned node images.
//! Every unpinned node takes its canonical image: the image of its parent
//! together with the transported copies of its own deepest patterns. Pins are
//! closed upward and must be trace-consistent, which makes evaluation total
//! and the represented embedding unique.
//!
//! `is_type_respecting` decides the per-vertex condition exactly. The
//! family-level check `is_family_type_respecting` is a bounded search over
//! extensions of the source base; it reports `Holds` only with a completeness
//! argument (an unconstrained or irreducibly forbidden family over an empty
//! base, or the small-extension cutoff for inclusion-based maps), reports
//! `Fails` only with a witness whose rejection is candidate-independent, and
//! says `Inconclusive` otherwise.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::SearchConfig;
use crate::error::CoreError;
use crate::outcome::CheckOutcome;
use crate::structures::{
    enumerate_embeddings, is_embedding_map, Embedding, FamilyMode,
    HereditaryFamily, Structure,
};
use crate::weaktypes::{
    admissible_patterns, increasing_tuples, is_admissible, weak_type_of_tuple, PatEntry, Pattern,
    PlusStructure, TypeNode,
};

fn pattern_peak(p: &Pattern) -> Option<usize> {
    p.iter()
        .filter_map(|e| match e {
            PatEntry::Type(i) => Some(*i),
            PatEntry::Base(_) => None,
        })
        .max()
}

fn transport_pattern(p: &Pattern, base_map: &[usize]) -> Pattern {
    p.iter()
        .map(|e| match e {
            PatEntry::Base(b) => PatEntry::Base(base_map[*b]),
            PatEntry::Type(i) => PatEntry::Type(*i),
        })
        .collect()
}

fn transport_patterns(sets: &[BTreeSet<Pattern>], base_map: &[usize]) -> Vec<BTreeSet<Pattern>> {
    sets.iter()
        .map(|set| set.iter().map(|p| transport_pattern(p, base_map)).collect())
        .collect()
}

/// The patterns of `node` whose base vertices all lie in the image of
/// `base_map`, pulled back to the source base.
pub fn trace_node(base_map: &[usize], node: &TypeNode) -> TypeNode {
    let bound = node_base_bound(node).max(base_map.iter().map(|&v| v + 1).max().unwrap_or(0));
    let mut inverse = vec![None; bound];
    for (i, &v) in base_map.iter().enumerate() {
        inverse[v] = Some(i);
    }
    let patterns = node
        .patterns
        .iter()
        .map(|set| {
            set.iter()
                .filter_map(|p| {
                    p.iter()
                        .map(|e| match e {
                            PatEntry::Type(i) => Some(PatEntry::Type(*i)),
                            PatEntry::Base(b) => inverse.get(*b).copied().flatten().map(PatEntry::Base),
                        })
                        .collect::<Option<Pattern>>()
                })
                .collect()
        })
        .collect();
    TypeNode { depth: node.depth, patterns }
}

fn node_base_bound(node: &TypeNode) -> usize {
    node.patterns
        .iter()
        .flatten()
        .flat_map(|p| p.iter())
        .filter_map(|e| match e {
            PatEntry::Base(b) => Some(b + 1),
            PatEntry::Type(_) => None,
        })
        .max()
        .unwrap_or(0)
}

fn validate_node(node: &TypeNode, base_size: usize, symbols: usize, width: usize) -> Result<(), CoreError> {
    if node.depth == 0 || node.depth > width {
        return Err(CoreError::input(format!(
            "type node depth {} outside 1..={width}",
            node.depth
        )));
    }
    if node.patterns.len() != symbols {
        return Err(CoreError::input("type node pattern sets do not match the language"));
    }
    for set in &node.patterns {
        for p in set {
            if !is_admissible(p, base_size, node.depth, false) {
                return Err(CoreError::input(format!("pattern {p:?} invalid at depth {}", node.depth)));
            }
        }
    }
    Ok(())
}

/// An embedding of plus-structures in finite form: a base embedding plus a
/// trace-consistent, upward-closed set of pinned node images. Everything
/// outside the pins evaluates canonically.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct PlusEmbedding {
    pub source: Structure,
    pub target: Structure,
    pub base_map: Vec<usize>,
    #[serde(serialize_with = "pins_as_pairs")]
    pub pins: BTreeMap<TypeNode, TypeNode>,
}

fn pins_as_pairs<S: serde::Serializer>(
    pins: &BTreeMap<TypeNode, TypeNode>,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_seq(pins.iter())
}

impl PlusEmbedding {
    pub fn new(
        source: Structure,
        target: Structure,
        base_map: Vec<usize>,
        pins: Vec<(TypeNode, TypeNode)>,
    ) -> Result<PlusEmbedding, CoreError> {
        source.validate()?;
        target.validate()?;
        if source.language != target.language {
            return Err(CoreError::language("plus-embedding endpoints use different languages"));
        }
        if !is_embedding_map(&source, &target, &base_map) {
            return Err(CoreError::input(format!(
                "base map {base_map:?} is not an embedding of the bases"
            )));
        }
        let width = source.language.width();
        let symbols = source.language.symbol_count();
        let mut closed: BTreeMap<TypeNode, TypeNode> = BTreeMap::new();
        let mut queue = pins;
        while let Some((n, y)) = queue.pop() {
            validate_node(&n, source.size, symbols, width)?;
            validate_node(&y, target.size, symbols, width)?;
            if n.depth != y.depth {
                return Err(CoreError::input(format!(
                    "pin maps depth {} to depth {}",
                    n.depth, y.depth
                )));
            }
            if trace_node(&base_map, &y) != n {
                return Err(CoreError::input(format!(
                    "pin image {:?} does not trace back to {:?}",
                    y.patterns, n.patterns
                )));
            }
            match closed.get(&n) {
                Some(prev) if *prev != y => {
                    return Err(CoreError::input("conflicting pins for one node"));
                }
                Some(_) => continue,
                None => {
                    if let (Some(np), Some(yp)) = (n.parent(), y.parent()) {
                        queue.push((np, yp));
                    }
                    closed.insert(n, y);
                }
            }
        }
        Ok(PlusEmbedding { source, target, base_map, pins: closed })
    }

    pub fn identity(s: &Structure) -> PlusEmbedding {
        PlusEmbedding {
            source: s.clone(),
            target: s.clone(),
            base_map: (0..s.size).collect(),
            pins: BTreeMap::new(),
        }
    }

    /// The pin-free embedding over a given base embedding.
    pub fn canonical(source: Structure, target: Structure, base_map: Vec<usize>) -> Result<PlusEmbedding, CoreError> {
        PlusEmbedding::new(source, target, base_map, Vec::new())
    }

    pub fn is_inclusion_base(&self) -> bool {
        self.base_map.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Image of a source node: the pinned value, or the parent's image
    /// extended by the transported deepest patterns.
    pub fn eval(&self, node: &TypeNode) -> TypeNode {
        if let Some(y) = self.pins.get(node) {
            return y.clone();
        }
        match node.parent() {
            None => TypeNode {
                depth: node.depth,
                patterns: transport_patterns(&node.patterns, &self.base_map),
            },
            Some(parent) => {
                let mut patterns = self.eval(&parent).patterns;
                for (sym, set) in node.patterns.iter().enumerate() {
                    for p in set {
                        if pattern_peak(p) == Some(node.depth - 1) {
                            patterns[sym].insert(transport_pattern(p, &self.base_map));
                        }
                    }
                }
                TypeNode { depth: node.depth, patterns }
            }
        }
    }

    /// Node of the target that would map back onto `y`, if `y` is in the
    /// image.
    pub fn preimage(&self, y: &TypeNode) -> Option<TypeNode> {
        let candidate = trace_node(&self.base_map, y);
        if self.eval(&candidate) == *y {
            Some(candidate)
        } else {
            None
        }
    }

    pub fn image_contains(&self, y: &TypeNode) -> bool {
        self.preimage(y).is_some()
    }

    /// `g ∘ self`. Pins are taken on the closure of this map's pin domain and
    /// the pulled-back pin domain of `g`.
    pub fn then(&self, g: &PlusEmbedding) -> Result<PlusEmbedding, CoreError> {
        if self.target != g.source {
            return Err(CoreError::input("plus-embedding composition endpoints do not match"));
        }
        let mut domain: BTreeSet<TypeNode> = self.pins.keys().cloned().collect();
        for mu in g.pins.keys() {
            let nu = trace_node(&self.base_map, mu);
            if self.eval(&nu) == *mu {
                domain.insert(nu);
            }
        }
        let base_map: Vec<usize> = self.base_map.iter().map(|&v| g.base_map[v]).collect();
        let pins = domain
            .into_iter()
            .map(|nu| {
                let val = g.eval(&self.eval(&nu));
                (nu, val)
            })
            .collect();
        PlusEmbedding::new(self.source.clone(), g.target.clone(), base_map, pins)
    }

    /// Do two embeddings agree everywhere? Pins differing only by canonical
    /// values are still equal.
    pub fn equivalent(&self, other: &PlusEmbedding) -> bool {
        self.source == other.source
            && self.target == other.target
            && self.base_map == other.base_map
            && self
                .pins
                .keys()
                .chain(other.pins.keys())
                .all(|n| self.eval(n) == other.eval(n))
    }

    /// Materialise as a vertex map between explicit plus-structures.
    pub fn to_vertex_map(
        &self,
        src: &PlusStructure,
        tgt: &PlusStructure,
    ) -> Result<Vec<usize>, CoreError> {
        if src.base != self.source || tgt.base != self.target {
            return Err(CoreError::input("plus-structures do not match the embedding endpoints"));
        }
        let mut map = self.base_map.clone();
        for level in &src.levels {
            for node in level {
                let image = self.eval(node);
                let (d, i) = tgt
                    .find(&image)
                    .ok_or_else(|| CoreError::input("image node missing from the target plus-structure"))?;
                map.push(tgt.node_vertex(d, i));
            }
        }
        Ok(map)
    }
}

/// A materialised plus-structure embedding: images of base vertices and of
/// every node, level by level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlusMap {
    pub base: Vec<usize>,
    pub nodes: Vec<Vec<usize>>,
}

/// Enumerate every embedding between two explicit plus-structures: monotone
/// and two-way relation-preserving on the bases, depth- and
/// parent-preserving on nodes, two-way tuple-preserving overall.
pub fn plus_embeddings(
    a: &PlusStructure,
    b: &PlusStructure,
    cfg: &SearchConfig,
) -> Result<Vec<PlusMap>, CoreError> {
    if a.base.language != b.base.language {
        return Err(CoreError::language("plus-structures over different languages"));
    }
    let mut estimate: u64 = 1;
    for (la, lb) in a.levels.iter().zip(b.levels.iter()) {
        for i in 0..la.len() as u64 {
            estimate = estimate.saturating_mul((lb.len() as u64).saturating_sub(i).max(1));
            if estimate > cfg.budget {
                return Err(CoreError::budget("plus-embedding enumeration over budget"));
            }
        }
    }
    if a.levels.len() != b.levels.len() {
        return Ok(Vec::new());
    }

    let a_struct = a.as_structure();
    let b_struct = b.as_structure();
    let base_embeddings = enumerate_embeddings(&a.base, &b.base)?;

    let order: Vec<(usize, usize)> = a
        .levels
        .iter()
        .enumerate()
        .flat_map(|(li, level)| (0..level.len()).map(move |i| (li + 1, i)))
        .collect();

    let mut found = Vec::new();
    for be in &base_embeddings {
        let mut nodes: Vec<Vec<usize>> = a.levels.iter().map(|l| vec![usize::MAX; l.len()]) .collect();
        let mut used: Vec<Vec<bool>> = b.levels.iter().map(|l| vec![false; l.len()]).collect();
        search_plus_maps(
            a, b, &a_struct, &b_struct, &be.map, &order, 0, &mut nodes, &mut used, &mut found,
        );
    }
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn search_plus_maps(
    a: &PlusStructure,
    b: &PlusStructure,
    a_struct: &Structure,
    b_struct: &Structure,
    base: &[usize],
    order: &[(usize, usize)],
    pos: usize,
    nodes: &mut Vec<Vec<usize>>,
    used: &mut Vec<Vec<bool>>,
    found: &mut Vec<PlusMap>,
) {
    if pos == order.len() {
        let m = PlusMap { base: base.to_vec(), nodes: nodes.clone() };
        if plus_map_valid(b, a_struct, b_struct, &m) {
            found.push(m);
        }
        return;
    }
    let (depth, idx) = order[pos];
    let parent_target = a.parent_index(depth, idx).map(|(pd, pi)| nodes[pd - 1][pi]);
    for cand in 0..b.levels[depth - 1].len() {
        if used[depth - 1][cand] {
            continue;
        }
        if let Some(pt) = parent_target {
            if !nodes_parent_matches(b, depth, cand, pt) {
                continue;
            }
        }
        nodes[depth - 1][idx] = cand;
        used[depth - 1][cand] = true;
        search_plus_maps(a, b, a_struct, b_struct, base, order, pos + 1, nodes, used, found);
        used[depth - 1][cand] = false;
        nodes[depth - 1][idx] = usize::MAX;
    }
}

fn nodes_parent_matches(b: &PlusStructure, depth: usize, cand: usize, parent_image_idx: usize) -> bool {
    match b.parent_index(depth, cand) {
        Some((pd, pi)) => pd == depth - 1 && pi == parent_image_idx,
        None => depth == 1,
    }
}

fn plus_map_valid(
    b: &PlusStructure,
    a_struct: &Structure,
    b_struct: &Structure,
    m: &PlusMap,
) -> bool {
    let mut vmap = m.base.clone();
    for (li, level) in m.nodes.iter().enumerate() {
        for &target in level {
            vmap.push(b.node_vertex(li + 1, target));
        }
    }
    let image: BTreeSet<usize> = vmap.iter().copied().collect();
    if image.len() != vmap.len() {
        return false;
    }
    for (sym, tuples) in a_struct.relations.iter().enumerate() {
        for t in tuples {
            let im: Vec<usize> = t.iter().map(|&v| vmap[v]).collect();
            if !b_struct.relations[sym].contains(&im) {
                return false;
            }
        }
    }
    for (sym, tuples) in b_struct.relations.iter().enumerate() {
        for t in tuples {
            if t.iter().all(|v| image.contains(v)) {
                let pre: Vec<usize> = t
                    .iter()
                    .map(|v| vmap.iter().position(|x| x == v).unwrap())
                    .collect();
                if !a_struct.relations[sym].contains(&pre) {
                    return false;
                }
            }
        }
    }
    true
}

/// Exact per-vertex test: below every vertex there must be a base embedding
/// under which the weak types realised above the vertex trace back
/// functionally.
pub fn is_type_respecting(h: &Embedding, cfg: &SearchConfig) -> Result<bool, CoreError> {
    let width = h.source.language.width();
    for v in 0..h.source.size {
        let hv = h.map[v];
        let x = h.source.initial_segment(v)?;
        let y = h.target.initial_segment(hv)?;
        let above: Vec<usize> = h.map.iter().copied().filter(|&u| u > hv).collect();
        let mut required: Vec<TypeNode> = Vec::new();
        for len in 1..=width.min(above.len()) {
            for s in increasing_tuples(&above, len) {
                let wt = weak_type_of_tuple(&h.target, hv, &s, cfg)?;
                required.push(TypeNode { depth: len, patterns: wt.patterns });
            }
        }
        if required.is_empty() {
            continue;
        }
        let mut satisfied = false;
        for beta in enumerate_embeddings(&x, &y)? {
            let mut assignment: BTreeMap<TypeNode, &TypeNode> = BTreeMap::new();
            let mut functional = true;
            for node in &required {
                let key = trace_node(&beta.map, node);
                match assignment.get(&key) {
                    Some(prev) if **prev != *node => {
                        functional = false;
                        break;
                    }
                    _ => {
                        assignment.insert(key, node);
                    }
                }
            }
            if functional {
                satisfied = true;
                break;
            }
        }
        if !satisfied {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Witness of a failed family-level check: the extension that cannot be
/// completed, both as an extension of the source base and as its added part
/// alone.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FamilyWitness {
    pub ambient: Structure,
    pub added_part: Structure,
}

enum NodeValue {
    Exact(TypeNode),
    Floor(TypeNode),
}

impl NodeValue {
    fn node(&self) -> &TypeNode {
        match self {
            NodeValue::Exact(n) | NodeValue::Floor(n) => n,
        }
    }
    fn exact(&self) -> bool {
        matches!(self, NodeValue::Exact(_))
    }
}

enum Valuation<'a> {
    /// A concrete plus-embedding: every node has an exact image.
    Full(&'a PlusEmbedding),
    /// Only pinned nodes are exact; elsewhere the value is the guaranteed
    /// lower bound shared by every embedding with these pins.
    Pinned {
        base_map: &'a [usize],
        pins: &'a BTreeMap<TypeNode, TypeNode>,
    },
}

impl Valuation<'_> {
    fn base_map(&self) -> &[usize] {
        match self {
            Valuation::Full(h) => &h.base_map,
            Valuation::Pinned { base_map, .. } => base_map,
        }
    }

    fn value(&self, node: &TypeNode) -> NodeValue {
        match self {
            Valuation::Full(h) => NodeValue::Exact(h.eval(node)),
            Valuation::Pinned { base_map, pins } => {
                if let Some(y) = pins.get(node) {
                    return NodeValue::Exact(y.clone());
                }
                match node.parent() {
                    None => NodeValue::Floor(TypeNode {
                        depth: node.depth,
                        patterns: transport_patterns(&node.patterns, base_map),
                    }),
                    Some(parent) => {
                        let below = self.value(&parent);
                        let mut patterns = below.node().patterns.clone();
                        for (sym, set) in node.patterns.iter().enumerate() {
                            for p in set {
                                if pattern_peak(p) == Some(node.depth - 1) {
                                    patterns[sym].insert(transport_pattern(p, base_map));
                                }
                            }
                        }
                        NodeValue::Floor(TypeNode { depth: node.depth, patterns })
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShapeFate {
    DeadCertified,
    DeadUncertified,
    Survives,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ExtensionFate {
    Pass { via_default_shape: bool },
    DeadCertified,
    DeadUncertified,
}

/// The per-scan constants of an extension probe: the admissible-pattern
/// universes over the target, the base-part comparison shared by every
/// default shape, and whether the valuation is a pin-free inclusion whose
/// node images are the nodes themselves.
struct ProbeCtx<'a> {
    target: &'a Structure,
    valuation: &'a Valuation<'a>,
    family: &'a HereditaryFamily,
    cfg: &'a SearchConfig,
    full_mode: bool,
    inclusion: bool,
    universes: Vec<Vec<Vec<Pattern>>>,
    base_part_matches: bool,
    identity_valuation: bool,
}

impl<'a> ProbeCtx<'a> {
    fn new(
        source: &Structure,
        target: &'a Structure,
        valuation: &'a Valuation<'a>,
        family: &'a HereditaryFamily,
        cfg: &'a SearchConfig,
        full_mode: bool,
        inclusion: bool,
    ) -> Result<ProbeCtx<'a>, CoreError> {
        let lang = &target.language;
        let universes = (1..=lang.width())
            .map(|len| admissible_patterns(lang, target.size, len, cfg.strict_type_vertex_repeats))
            .collect();
        // Extensions never touch the base part, so the default-shape
        // placement comparison is the same for every extension.
        let base_part_matches =
            target.induced_substructure(valuation.base_map())?.relations == source.relations;
        let identity_valuation = match valuation {
            Valuation::Full(h) => h.is_inclusion_base() && h.pins.is_empty(),
            Valuation::Pinned { .. } => false,
        };
        Ok(ProbeCtx {
            target,
            valuation,
            family,
            cfg,
            full_mode,
            inclusion,
            universes,
            base_part_matches,
            identity_valuation,
        })
    }
}

/// One placement of an extension over the target: the first `j` added
/// vertices go to chosen free target positions, the rest above the target.
fn probe_shape(
    a_prime: &Structure,
    x_size: usize,
    slots: &[usize],
    ctx: &ProbeCtx,
) -> Result<ShapeFate, CoreError> {
    let (target, valuation) = (ctx.target, ctx.valuation);
    let (family, cfg) = (ctx.family, ctx.cfg);
    let (full_mode, inclusion) = (ctx.full_mode, ctx.inclusion);
    let lang = &a_prime.language;
    let width = lang.width();
    let k_added = a_prime.size - x_size;
    let j = slots.len();
    let y_size = target.size;
    let base_map = valuation.base_map();

    // Full map of the candidate completion embedding.
    let mut gmap: Vec<usize> = base_map.to_vec();
    gmap.extend_from_slice(slots);
    for t in 0..k_added - j {
        gmap.push(y_size + t);
    }

    // Placed part: the target must look exactly like the extension there.
    if j == 0 {
        if !ctx.base_part_matches {
            return Ok(ShapeFate::DeadCertified);
        }
    } else {
        let in_target: Vec<usize> = gmap[..x_size + j].to_vec();
        let reflected = target.induced_substructure(&in_target)?;
        let declared = a_prime.induced_substructure(&(0..x_size + j).collect::<Vec<_>>())?;
        if reflected.relations != declared.relations {
            return Ok(ShapeFate::DeadCertified);
        }
    }

    let mut b2 = Structure {
        language: lang.clone(),
        size: y_size + (k_added - j),
        relations: target.relations.clone(),
    };
    let mut uncertified_gap = false;

    // In strict-repeat mode wider languages abstract away tuples repeating a
    // top vertex, which the shortcut would wrongly keep.
    let direct_transport =
        ctx.identity_valuation && (width <= 1 || !cfg.strict_type_vertex_repeats);
    if direct_transport && j == 0 {
        // Node images equal the nodes themselves, so the valuation replay
        // reduces to transporting the extension's own tuples.
        for (sym, tuples) in a_prime.relations.iter().enumerate() {
            for t in tuples {
                if t.iter().any(|&e| e >= x_size) {
                    b2.relations[sym].insert(t.iter().map(|&e| gmap[e]).collect());
                }
            }
        }
    } else {
        let mut inv_image: Vec<Option<usize>> = vec![None; y_size];
        for (i, &v) in gmap.iter().enumerate() {
            if v < y_size {
                inv_image[v] = Some(i);
            }
        }

        // Tuples entirely among the top vertices transport directly.
        for (sym, tuples) in a_prime.relations.iter().enumerate() {
            for t in tuples {
                if t.iter().all(|&e| e >= x_size + j) {
                    b2.relations[sym].insert(t.iter().map(|&e| gmap[e]).collect());
                }
            }
        }

        let tops_a: Vec<usize> = (x_size + j..x_size + k_added).collect();
        for len in 1..=width.min(tops_a.len()) {
            let universe = &ctx.universes[len - 1];
            for s_a in increasing_tuples(&tops_a, len) {
                let wt = weak_type_of_tuple(a_prime, x_size, &s_a, cfg)?;
                let nu = TypeNode { depth: len, patterns: wt.patterns };
                let value = valuation.value(&nu);
                for (sym, ps) in universe.iter().enumerate() {
                    for p in ps {
                        let present_val = value.node().patterns[sym].contains(p);
                        let image_based: Option<Vec<usize>> = p
                            .iter()
                            .map(|e| match e {
                                PatEntry::Base(b) => inv_image[*b],
                                PatEntry::Type(i) => Some(s_a[*i]),
                            })
                            .collect();
                        if let Some(pre) = image_based {
                            let required = a_prime.relations[sym].contains(&pre);
                            if required != present_val {
                                let certifiable = value.exact() || (present_val && !required);
                                if certifiable {
                                    return Ok(ShapeFate::DeadCertified);
                                }
                                uncertified_gap = true;
                            }
                            if required {
                                b2.relations[sym].insert(
                                    p.iter().map(|e| concrete_entry(e, &gmap, &s_a)).collect(),
                                );
                            }
                        }
                        if present_val {
                            b2.relations[sym]
                                .insert(p.iter().map(|e| concrete_entry(e, &gmap, &s_a)).collect());
                        }
                    }
                }
            }
        }
    }

    if uncertified_gap {
        // Some candidate could still bridge the gap; nothing certified, and
        // this concrete completion is broken.
        return Ok(if full_mode { ShapeFate::DeadUncertified } else { ShapeFate::Survives });
    }

    let in_family = match (full_mode, family.mode) {
        (true, _) | (false, FamilyMode::Monomorphism) => family.member(&b2)?,
        // Floor values cannot certify an embedding-mode exclusion.
        (false, FamilyMode::Embedding) => true,
    };
    if !in_family {
        return Ok(ShapeFate::DeadCertified);
    }
    if !full_mode {
        return Ok(ShapeFate::Survives);
    }

    let g = match Embedding::new(a_prime.clone(), b2, gmap) {
        Ok(g) => g,
        Err(_) => return Ok(ShapeFate::DeadUncertified),
    };
    if !(inclusion && j == 0) && !is_type_respecting(&g, cfg)? {
        return Ok(ShapeFate::DeadUncertified);
    }
    Ok(ShapeFate::Survives)
}

fn concrete_entry(e: &PatEntry, gmap: &[usize], s_a: &[usize]) -> usize {
    match e {
        PatEntry::Base(b) => *b,
        PatEntry::Type(i) => gmap[s_a[*i]],
    }
}

fn probe_extension(
    a_prime: &Structure,
    x_size: usize,
    ctx: &ProbeCtx,
) -> Result<ExtensionFate, CoreError> {
    let base_map = ctx.valuation.base_map();
    let floor = base_map.last().map(|&v| v + 1).unwrap_or(0);
    let free: Vec<usize> = (floor..ctx.target.size)
        .filter(|p| !base_map.contains(p))
        .collect();
    let k_added = a_prime.size - x_size;

    let mut all_certified = true;
    for j in 0..=k_added.min(free.len()) {
        for slots in increasing_tuples(&free, j) {
            match probe_shape(a_prime, x_size, &slots, ctx)? {
                ShapeFate::Survives => {
                    if ctx.full_mode {
                        return Ok(ExtensionFate::Pass { via_default_shape: j == 0 });
                    }
                    return Ok(ExtensionFate::DeadUncertified);
                }
                ShapeFate::DeadUncertified => all_certified = false,
                ShapeFate::DeadCertified => {}
            }
        }
    }
    if all_certified {
        Ok(ExtensionFate::DeadCertified)
    } else {
        Ok(ExtensionFate::DeadUncertified)
    }
}

/// All relation cells an extension by `k` vertices can switch on: tuples over
/// the enlarged vertex set touching at least one added vertex, ordered by
/// symbol and then lexicographically.
fn extension_cells(base: &Structure, k: usize) -> Vec<(usize, Vec<usize>)> {
    let n = base.size + k;
    let mut cells = Vec::new();
    for (sym, rel) in base.language.relations.iter().enumerate() {
        let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..rel.arity {
            stack = stack
                .into_iter()
                .flat_map(|t| {
                    (0..n).map(move |v| {
                        let mut u = t.clone();
                        u.push(v);
                        u
                    })
                })
                .collect();
        }
        for t in stack {
            if t.iter().any(|&v| v >= base.size) {
                cells.push((sym, t));
            }
        }
    }
    cells
}

/// Visit extensions of `base` by up to `k_max` vertices, ordered by total
/// added tuple count, then by number of added vertices, then lexicographically
/// by switched-on cells. Stops early when the visitor returns a value or the
/// budget runs out.
fn visit_extensions<R>(
    base: &Structure,
    k_max: usize,
    budget: u64,
    mut visit: impl FnMut(usize, Structure) -> Result<Option<R>, CoreError>,
) -> Result<(Option<R>, u64, bool), CoreError> {
    use itertools::Itertools;
    let mut explored: u64 = 0;

    let cells: Vec<Vec<(usize, Vec<usize>)>> = (1..=k_max).map(|k| extension_cells(base, k)).collect();
    let max_tc = cells.iter().map(|c| c.len()).max().unwrap_or(0);
    let widened: Vec<Structure> = (1..=k_max)
        .map(|k| Structure {
            language: base.language.clone(),
            size: base.size + k,
            relations: base.relations.clone(),
        })
        .collect();

    if explored >= budget {
        return Ok((None, explored, false));
    }
    explored += 1;
    if let Some(r) = visit(0, base.clone())? {
        return Ok((Some(r), explored, false));
    }

    for tc in 0..=max_tc {
        for k in 1..=k_max {
            let cell_list = &cells[k - 1];
            if tc > cell_list.len() {
                continue;
            }
            for combo in (0..cell_list.len()).combinations(tc) {
                if explored >= budget {
                    return Ok((None, explored, false));
                }
                explored += 1;
                let mut a_prime = widened[k - 1].clone();
                for &ci in &combo {
                    let (sym, t) = &cell_list[ci];
                    a_prime.relations[*sym].insert(t.clone());
                }
                if let Some(r) = visit(k, a_prime)? {
                    return Ok((Some(r), explored, false));
                }
            }
        }
    }
    Ok((None, explored, true))
}

fn witness_for(x_size: usize, a_prime: &Structure) -> Result<FamilyWitness, CoreError> {
    let added: Vec<usize> = (x_size..a_prime.size).collect();
    Ok(FamilyWitness {
        ambient: a_prime.clone(),
        added_part: a_prime.induced_substructure(&added)?,
    })
}

/// Bounded check that a plus-embedding respects a hereditary family: every
/// family member extending the source base by at most `depth` vertices must
/// embed, type-respectingly and with its realised types covered, into a
/// family member extending the target base.
pub fn is_family_type_respecting(
    h: &PlusEmbedding,
    family: &HereditaryFamily,
    depth: usize,
    cfg: &SearchConfig,
) -> Result<CheckOutcome<FamilyWitness>, CoreError> {
    if family.language != h.source.language {
        return Err(CoreError::language("family and embedding use different languages"));
    }
    if !family.member(&h.source)? {
        return Err(CoreError::input("the source base is not a family member"));
    }
    if !family.member(&h.target)? {
        return Err(CoreError::input("the target base is not a family member"));
    }

    if family.forbidden.is_empty() {
        return Ok(CheckOutcome::holds()
            .with_depth(depth)
            .with_note("unconstrained family: the layered completion over the target always exists"));
    }
    let lang = &h.source.language;
    let empty_types_land_trivially = (1..=lang.width())
        .all(|d| h.eval(&TypeNode::empty(lang, d)).pattern_count() == 0);
    if h.source.size == 0 && empty_types_land_trivially && family.all_forbidden_irreducible(true) {
        return Ok(CheckOutcome::holds().with_depth(depth).with_note(
            "empty base, pattern-free images, irreducible forbidden structures: completions split over the target",
        ));
    }

    let inclusion = h.is_inclusion_base();
    let valuation = Valuation::Full(h);
    let ctx = ProbeCtx::new(&h.source, &h.target, &valuation, family, cfg, true, inclusion)?;
    let cutoff = family
        .forbidden
        .iter()
        .map(|f| f.size.saturating_sub(1))
        .max()
        .unwrap_or(0);

    // Small-extension phase: complete success below the cutoff is conclusive
    // for inclusion-based maps, because any forbidden hit in a completion
    // restricts to a hit for an extension this small.
    if inclusion && depth >= cutoff {
        let mut all_default = true;
        let mut uncertified: Option<Structure> = None;
        let (kill, explored, complete) =
            visit_extensions(&h.source, cutoff, cfg.budget, |_k, a_prime| {
                if !family.member(&a_prime)? {
                    return Ok(None);
                }
                match probe_extension(&a_prime, h.source.size, &ctx)? {
                    ExtensionFate::Pass { via_default_shape } => {
                        if !via_default_shape {
                            all_default = false;
                        }
                        Ok(None)
                    }
                    ExtensionFate::DeadCertified => Ok(Some(a_prime)),
                    ExtensionFate::DeadUncertified => {
                        if uncertified.is_none() {
                            uncertified = Some(a_prime);
                        }
                        Ok(None)
                    }
                }
            })?;
        if let Some(a_prime) = kill {
            return Ok(CheckOutcome::fails(witness_for(h.source.size, &a_prime)?)
                .with_depth(depth)
                .with_explored(explored));
        }
        if complete && uncertified.is_none() && all_default {
            return Ok(CheckOutcome::holds()
                .with_depth(depth)
                .with_explored(explored)
                .with_note(format!(
                    "complete up to {cutoff} added vertices; larger extensions reduce to these"
                )));
        }
    }

    // General bounded scan: can fail with a certificate or stay inconclusive.
    let mut uncertified: Option<Structure> = None;
    let (kill, explored, complete) = visit_extensions(&h.source, depth, cfg.budget, |_k, a_prime| {
        if !family.member(&a_prime)? {
            return Ok(None);
        }
        match probe_extension(&a_prime, h.source.size, &ctx)? {
            ExtensionFate::Pass { .. } => Ok(None),
            ExtensionFate::DeadCertified => Ok(Some(a_prime)),
            ExtensionFate::DeadUncertified => {
                if uncertified.is_none() {
                    uncertified = Some(a_prime);
                }
                Ok(None)
            }
        }
    })?;
    if let Some(a_prime) = kill {
        return Ok(CheckOutcome::fails(witness_for(h.source.size, &a_prime)?)
            .with_depth(depth)
            .with_explored(explored));
    }
    let note = if let Some(u) = &uncertified {
        format!(
            "an extension of size {} admits no completion of size at most {}, but larger targets were not ruled out",
            u.size,
            h.target.size + depth
        )
    } else if complete {
        format!(
            "every family extension by at most {depth} vertices completes (targets up to {} vertices); no certificate beyond that depth",
            h.target.size + depth
        )
    } else {
        "budget exhausted before the extension scan finished".to_string()
    };
    Ok(CheckOutcome::inconclusive(note).with_depth(depth).with_explored(explored))
}

/// Hunt for one extension that defeats every plus-embedding carrying the
/// given pins. Used to certify family-level failure for all candidate
/// completions at once.
pub(crate) fn certified_universal_failure(
    source: &Structure,
    target: &Structure,
    base_map: &[usize],
    pins: &BTreeMap<TypeNode, TypeNode>,
    family: &HereditaryFamily,
    depth: usize,
    cfg: &SearchConfig,
) -> Result<(Option<FamilyWitness>, u64, bool), CoreError> {
    let valuation = Valuation::Pinned { base_map, pins };
    let ctx = ProbeCtx::new(source, target, &valuation, family, cfg, false, false)?;
    let x_size = source.size;
    let (kill, explored, complete) = visit_extensions(source, depth, cfg.budget, |_k, a_prime| {
        if !family.member(&a_prime)? {
            return Ok(None);
        }
        match probe_extension(&a_prime, x_size, &ctx)? {
            ExtensionFate::DeadCertified => Ok(Some(a_prime)),
            _ => Ok(None),
        }
    })?;
    let witness = match kill {
        Some(a_prime) => Some(witness_for(x_size, &a_prime)?),
        None => None,
    };
    Ok((witness, explored, complete))
}

/// Completion operator for binary languages: extend a square of embeddings
/// over a one-point target extension to the whole plus-structure. Image
/// nodes keep their prescribed images; every other node is completed without
/// relations to the new point.
pub fn binary_completion(
    f: &PlusEmbedding,
    f2: &PlusEmbedding,
    g: &PlusEmbedding,
    family: &HereditaryFamily,
    cfg: &SearchConfig,
) -> Result<PlusEmbedding, CoreError> {
    let lang = &f.source.language;
    if lang.max_arity() > 2 {
        return Err(CoreError::unsupported(
            "the completion operator is only available for languages of arity at most 2",
        ));
    }
    if family.mode != FamilyMode::Embedding {
        return Err(CoreError::input("the completion operator expects an embedding-mode family"));
    }
    if !family.all_forbidden_irreducible(cfg.irreducible_distinct_only) {
        return Err(CoreError::input("the completion operator expects irreducible forbidden structures"));
    }
    let b = &g.source;
    let b2 = &g.target;
    if b2.size != b.size + 1 || !b2.extends_initial(b) {
        return Err(CoreError::input("the extended target must add exactly one final vertex"));
    }
    if !g.is_inclusion_base() {
        return Err(CoreError::input("the middle map must fix the smaller target"));
    }
    if f.target != *b || f2.target != *b2 || f.source != f2.source {
        return Err(CoreError::input("the embedding square endpoints do not line up"));
    }
    if !f.then(g)?.equivalent(f2) {
        return Err(CoreError::input("the square does not commute"));
    }

    let mut domain: BTreeSet<TypeNode> = f.pins.keys().cloned().collect();
    domain.extend(f2.pins.keys().cloned());
    let pins: Vec<(TypeNode, TypeNode)> = domain
        .into_iter()
        .map(|nu| (f.eval(&nu), f2.eval(&nu)))
        .collect();
    PlusEmbedding::new(b.clone(), b2.clone(), (0..b.size).collect(), pins)
}

/// Insert one vertex at a position, shifting later vertices up, and add the
/// supplied tuples through the new vertex.
pub fn one_point_extension(
    a: &Structure,
    position: usize,
    plus_data: &[(usize, Vec<Vec<usize>>)],
) -> Result<Structure, CoreError> {
    if position > a.size {
        return Err(CoreError::input(format!("insert position {position} out of range")));
    }
    let mut out = Structure::empty(a.language.clone(), a.size + 1);
    for (sym, tuples) in a.relations.iter().enumerate() {
        for t in tuples {
            out.relations[sym]
                .insert(t.iter().map(|&v| if v >= position { v + 1 } else { v }).collect());
        }
    }
    for (sym, tuples) in plus_data {
        for t in tuples {
            if !t.contains(&position) {
                return Err(CoreError::input(format!(
                    "tuple {t:?} does not pass through the new vertex {position}"
                )));
            }
            out.add_tuple(*sym, t.clone())?;
        }
    }
    Ok(out)
}
