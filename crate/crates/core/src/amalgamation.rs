//! Amalgamation-square checking over a hereditary family.
//!
//! An instance is a commuting square of plus-embeddings `f: A⁺ → B⁺`,
//! `f2: A⁺ → B′⁺`, `g: B⁺ → B′⁺` where `B′` extends `B` by one final vertex
//! and `g` fixes `B` pointwise. The question is whether some
//! family-type-respecting `g′: B⁺ → B′⁺` closes the square in place of `g`.
//! `check_instance` answers it three ways: by verifying a concrete candidate,
//! by certifying that every candidate dies on a single extension of `B`, or
//! by giving up with a bounded-search note.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{run_with_jobs, SearchConfig};
use crate::error::CoreError;
use crate::outcome::{CheckOutcome, Verdict};
use crate::respect::{
    binary_completion, certified_universal_failure, is_family_type_respecting, FamilyWitness,
    PlusEmbedding,
};
use crate::structures::{
    enumerate_embeddings, FamilyMode, HereditaryFamily, Language, Structure,
};
use crate::weaktypes::{admissible_patterns, PatEntry, TypeNode};

/// A commuting square of plus-embeddings over a hereditary family, with the
/// target extended by one vertex.
#[derive(Debug, Clone)]
pub struct AmalgamationInstance {
    pub family: HereditaryFamily,
    pub a: Structure,
    pub b: Structure,
    pub b2: Structure,
    pub f: PlusEmbedding,
    pub f2: PlusEmbedding,
    pub g: PlusEmbedding,
}

impl AmalgamationInstance {
    /// Check every structural clause and name the first one violated.
    pub fn validate(&self) -> Result<(), CoreError> {
        let lang = &self.family.language;
        for (name, s) in [("A", &self.a), ("B", &self.b), ("B'", &self.b2)] {
            s.validate()?;
            if s.language != *lang {
                return Err(CoreError::language(format!("{name} is not over the family language")));
            }
            if !self.family.member(s)? {
                return Err(CoreError::input(format!("{name} is not a member of the family")));
            }
        }
        if self.b2.size != self.b.size + 1 || !self.b2.extends_initial(&self.b) {
            return Err(CoreError::input("B' must extend B by exactly one final vertex"));
        }
        if self.f.source != self.a || self.f.target != self.b {
            return Err(CoreError::input("f must run from A's to B's plus-structure"));
        }
        if self.f2.source != self.a || self.f2.target != self.b2 {
            return Err(CoreError::input("f2 must run from A's to B''s plus-structure"));
        }
        if self.g.source != self.b || self.g.target != self.b2 {
            return Err(CoreError::input("g must run from B's to B''s plus-structure"));
        }
        if !self.g.is_inclusion_base() {
            return Err(CoreError::input("g must fix B pointwise"));
        }
        if !self.f.then(&self.g)?.equivalent(&self.f2) {
            return Err(CoreError::input("the square g ∘ f = f2 does not commute"));
        }
        Ok(())
    }

    /// The images every candidate completion is forced to take: pinned nodes
    /// of `f` and `f2`, pushed into `B`'s plus-structure.
    pub fn forced_pins(&self) -> BTreeMap<TypeNode, TypeNode> {
        let mut domain: BTreeSet<TypeNode> = self.f.pins.keys().cloned().collect();
        domain.extend(self.f2.pins.keys().cloned());
        domain
            .into_iter()
            .map(|nu| (self.f.eval(&nu), self.f2.eval(&nu)))
            .collect()
    }

    /// The pin-only completion candidate: forced images, canonical elsewhere.
    /// For binary languages this is exactly what `binary_completion` returns.
    pub fn canonical_candidate(&self) -> Result<PlusEmbedding, CoreError> {
        let pins = self.forced_pins().into_iter().collect();
        PlusEmbedding::new(
            self.b.clone(),
            self.b2.clone(),
            (0..self.b.size).collect(),
            pins,
        )
    }
}

/// Decide one amalgamation instance.
///
/// `Holds` carries a verified completion as its certificate. `Fails` carries
/// one extension that defeats every completion compatible with the forced
/// pins: either an extension of `A` on which `f2` itself dies (any completion
/// closing the square composes with `f` to give `f2`, so such an extension
/// rules them all out at once), or an extension of `B` killed under every
/// admissible base map. Premises are checked first: a refuted `f` is an input
/// error, and an unverified premise caps the verdict at `Inconclusive`.
pub fn check_instance(
    inst: &AmalgamationInstance,
    depth: usize,
    cfg: &SearchConfig,
) -> Result<CheckOutcome<FamilyWitness, PlusEmbedding>, CoreError> {
    inst.validate()?;
    let mut explored: u64 = 0;

    let premise_f = is_family_type_respecting(&inst.f, &inst.family, depth, cfg)?;
    explored += premise_f.explored;
    if premise_f.verdict == Verdict::Fails {
        return Err(CoreError::input("f does not respect the family, so the instance is vacuous"));
    }
    let premise_f2 = is_family_type_respecting(&inst.f2, &inst.family, depth, cfg)?;
    explored += premise_f2.explored;
    if premise_f2.verdict == Verdict::Fails {
        let witness = premise_f2.witness.expect("a failing family check carries its extension");
        let outcome = if premise_f.verdict == Verdict::Holds {
            CheckOutcome::fails(witness).with_note(
                "any completion closing the square composes with f to give f2, and this extension defeats f2",
            )
        } else {
            CheckOutcome::inconclusive(
                "f2 dies on an extension but f was not settled, so the refutation does not transfer",
            )
        };
        return Ok(outcome.with_depth(depth).with_explored(explored));
    }
    let premises_settled =
        premise_f.verdict == Verdict::Holds && premise_f2.verdict == Verdict::Holds;

    let mut candidates: Vec<(&str, PlusEmbedding)> = vec![("the supplied map", inst.g.clone())];
    match inst.canonical_candidate() {
        Ok(cand) if !cand.equivalent(&inst.g) => candidates.push(("the forced-pin completion", cand)),
        _ => {}
    }

    let mut candidate_notes: Vec<String> = Vec::new();
    for (label, cand) in &candidates {
        if !inst.f.then(cand)?.equivalent(&inst.f2) {
            candidate_notes.push(format!("{label} does not close the square"));
            continue;
        }
        let out = is_family_type_respecting(cand, &inst.family, depth, cfg)?;
        explored += out.explored;
        match out.verdict {
            Verdict::Holds => {
                let note = format!(
                    "{label} respects the family{}",
                    out.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
                );
                let outcome = if premises_settled {
                    CheckOutcome::holds()
                } else {
                    CheckOutcome::inconclusive(
                        "a completion was verified, but the premises were only checked to the given depth",
                    )
                };
                return Ok(outcome
                    .with_certificate(cand.clone())
                    .with_depth(depth)
                    .with_explored(explored)
                    .with_note(note));
            }
            Verdict::Fails => candidate_notes.push(format!("{label} fails on an extension")),
            Verdict::Inconclusive => {
                candidate_notes.push(format!("{label} could not be settled"))
            }
        }
    }

    // No candidate verified; hunt one extension that rules them all out.
    let pins = inst.forced_pins();
    let mut bases: Vec<Vec<usize>> = Vec::new();
    for beta in enumerate_embeddings(&inst.b, &inst.b2)? {
        let compatible = inst
            .f
            .base_map
            .iter()
            .zip(inst.f2.base_map.iter())
            .all(|(&fb, &f2b)| beta.map[fb] == f2b);
        if !compatible {
            continue;
        }
        let pin_list: Vec<(TypeNode, TypeNode)> = pins.clone().into_iter().collect();
        if PlusEmbedding::new(inst.b.clone(), inst.b2.clone(), beta.map.clone(), pin_list).is_ok() {
            bases.push(beta.map);
        }
    }

    if !bases.is_empty() {
        if let Some(shared) = shared_witness(inst, &bases, &pins, depth, cfg)? {
            return Ok(CheckOutcome::fails(shared)
                .with_depth(depth)
                .with_explored(explored)
                .with_note("no completion compatible with the forced images survives this extension"));
        }
    }

    let mut note = String::from("no candidate completion verified and no shared refutation found");
    if !candidate_notes.is_empty() {
        note.push_str(": ");
        note.push_str(&candidate_notes.join("; "));
    }
    Ok(CheckOutcome::inconclusive(note).with_depth(depth).with_explored(explored))
}

/// The first extension certified dead under the first admissible base, if
/// the scans for every other base reject it too.
fn shared_witness(
    inst: &AmalgamationInstance,
    bases: &[Vec<usize>],
    pins: &BTreeMap<TypeNode, TypeNode>,
    depth: usize,
    cfg: &SearchConfig,
) -> Result<Option<FamilyWitness>, CoreError> {
    let (first, rest) = bases.split_first().expect("at least one base");
    let (witness, _, _) = certified_universal_failure(
        &inst.b, &inst.b2, first, pins, &inst.family, depth, cfg,
    )?;
    let Some(w) = witness else { return Ok(None) };
    for base in rest {
        let (found, _, _) = certified_universal_failure(
            &inst.b, &inst.b2, base, pins, &inst.family, depth, cfg,
        )?;
        if found.is_none_or(|other| other.ambient != w.ambient) {
            return Ok(None);
        }
    }
    Ok(Some(w))
}

/// The two-symbol language with one binary and one ternary relation used by
/// the shipped counterexample.
pub fn mixed_language() -> Language {
    Language::new(&[("E", 2), ("H", 3)]).expect("static language")
}

/// Four vertices: a centre out-adjacent to every other vertex, and one
/// ternary tuple through the non-centre vertices. Irreducible, and the seed
/// of the forbidden family below.
pub fn claw_with_hyperedge() -> Structure {
    Structure::with_tuples(
        mixed_language(),
        4,
        &[("E", &[&[1, 0], &[1, 2], &[1, 3]]), ("H", &[&[0, 2, 3]])],
    )
    .expect("static structure")
}

/// An amalgamation square over the ternary language that no
/// family-type-respecting map can close: the forced images of the two empty
/// types pin every fresh vertex to the out-star of the edge's source, so an
/// extension with one ternary tuple through three distinct vertices rebuilds
/// the forbidden claw.
pub fn ternary_counterexample() -> Result<AmalgamationInstance, CoreError> {
    use PatEntry::*;
    let lang = mixed_language();
    let family = HereditaryFamily::new(
        lang.clone(),
        vec![claw_with_hyperedge()],
        FamilyMode::Monomorphism,
    )?;
    let a = Structure::empty(lang.clone(), 0);
    let b = Structure::empty(lang.clone(), 1);
    let b2 = Structure::with_tuples(lang.clone(), 2, &[("E", &[&[0, 1]])])?;

    let node = |depth: usize, e: &[&[PatEntry]], h: &[&[PatEntry]]| TypeNode {
        depth,
        patterns: vec![
            e.iter().map(|p| p.to_vec()).collect(),
            h.iter().map(|p| p.to_vec()).collect(),
        ],
    };
    let empty1 = TypeNode::empty(&lang, 1);
    let empty2 = TypeNode::empty(&lang, 2);
    let hyper2 = node(2, &[], &[&[Base(0), Type(0), Type(1)]]);
    let adj1 = node(1, &[&[Base(1), Type(0)]], &[]);
    let adj2 = node(2, &[&[Base(1), Type(0)]], &[]);
    let adj_hyper2 = node(2, &[&[Base(1), Type(0)]], &[&[Base(0), Type(0), Type(1)]]);

    let f = PlusEmbedding::canonical(a.clone(), b.clone(), vec![])?;
    let f2 = PlusEmbedding::new(
        a.clone(),
        b2.clone(),
        vec![],
        vec![(empty1.clone(), adj1.clone()), (empty2.clone(), adj2.clone())],
    )?;
    let g = PlusEmbedding::new(
        b.clone(),
        b2.clone(),
        vec![0],
        vec![
            (empty1, adj1),
            (empty2, adj2),
            (hyper2, adj_hyper2),
        ],
    )?;
    Ok(AmalgamationInstance { family, a, b, b2, f, f2, g })
}

/// What the counterexample scan reports: a single ternary tuple through
/// three fresh vertices over the empty source.
pub fn ternary_counterexample_witness() -> FamilyWitness {
    let lang = mixed_language();
    let ambient =
        Structure::with_tuples(lang, 3, &[("H", &[&[0, 1, 2]])]).expect("static structure");
    FamilyWitness { added_part: ambient.clone(), ambient }
}

/// One instance outcome that contradicts the expected transfer behaviour.
#[derive(Debug, Clone, Serialize)]
pub struct ConformanceFinding {
    pub target: Structure,
    pub a_size: usize,
    pub f_variant: usize,
    pub g_variant: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ConformanceReport {
    pub instances: u64,
    pub holds: u64,
    pub inconclusive: u64,
    pub skipped: u64,
    pub findings: Vec<ConformanceFinding>,
}

struct ConformanceCase {
    b2: Structure,
    a_size: usize,
    f_variant: usize,
    g_variant: usize,
    f: PlusEmbedding,
    g: PlusEmbedding,
    canonical: bool,
}

enum CaseResult {
    Holds,
    Inconclusive,
    Skipped,
    Finding(String),
}

type FamilyCheckCache = Mutex<HashMap<(Structure, Structure, Vec<usize>, Vec<(TypeNode, TypeNode)>), Verdict>>;

/// Sweep the one-point amalgamation instances of a binary family up to a
/// target size: squares built from initial segments, with the canonical maps
/// and small pin perturbations, must all complete via `binary_completion`.
pub fn check_family_binary(
    family: &HereditaryFamily,
    max_target: usize,
    depth: usize,
    cfg: &SearchConfig,
) -> Result<ConformanceReport, CoreError> {
    if family.language != Language::graph() {
        return Err(CoreError::unsupported(
            "the conformance sweep is defined over the single-binary-symbol language",
        ));
    }
    let mut cases = Vec::new();
    for n in 1..=max_target {
        for mask in 0u64..(1 << (n * (n - 1) / 2)) {
            let b2 = symmetric_graph(n, mask);
            if !family.member(&b2)? {
                continue;
            }
            let b = b2.initial_segment(n - 1)?;
            for a_size in 0..=b.size {
                let a = b.initial_segment(a_size)?;
                let f_variants = pinned_variants(&a, &b, cfg);
                let g_variants = pinned_variants(&b, &b2, cfg);
                for (fi, f) in f_variants.iter().enumerate() {
                    for (gi, g) in g_variants.iter().enumerate() {
                        cases.push(ConformanceCase {
                            b2: b2.clone(),
                            a_size,
                            f_variant: fi,
                            g_variant: gi,
                            f: f.clone(),
                            g: g.clone(),
                            canonical: fi == 0 && gi == 0,
                        });
                    }
                }
            }
        }
    }

    let cache: FamilyCheckCache = Mutex::new(HashMap::new());
    let results: Result<Vec<CaseResult>, CoreError> = run_with_jobs(cfg.jobs, || {
        cases
            .par_iter()
            .map(|case| run_case(case, family, depth, cfg, &cache))
            .collect()
    })?;

    let mut report = ConformanceReport { instances: cases.len() as u64, ..Default::default() };
    for (case, result) in cases.iter().zip(results?) {
        match result {
            CaseResult::Holds => report.holds += 1,
            CaseResult::Inconclusive => report.inconclusive += 1,
            CaseResult::Skipped => report.skipped += 1,
            CaseResult::Finding(detail) => report.findings.push(ConformanceFinding {
                target: case.b2.clone(),
                a_size: case.a_size,
                f_variant: case.f_variant,
                g_variant: case.g_variant,
                detail,
            }),
        }
    }
    Ok(report)
}

fn run_case(
    case: &ConformanceCase,
    family: &HereditaryFamily,
    depth: usize,
    cfg: &SearchConfig,
    cache: &FamilyCheckCache,
) -> Result<CaseResult, CoreError> {
    let f2 = match case.f.then(&case.g) {
        Ok(f2) => f2,
        Err(e) if case.canonical => return Ok(CaseResult::Finding(format!("composition failed: {e}"))),
        Err(_) => return Ok(CaseResult::Skipped),
    };

    for (name, leg) in [("f", &case.f), ("f2", &f2)] {
        match cached_family_verdict(leg, family, depth, cfg, cache)? {
            Verdict::Holds => {}
            v if case.canonical => {
                return Ok(CaseResult::Finding(format!("premise {name} came back {v}")));
            }
            _ => return Ok(CaseResult::Skipped),
        }
    }

    let completion = match binary_completion(&case.f, &f2, &case.g, family, cfg) {
        Ok(c) => c,
        Err(e) => return Ok(CaseResult::Finding(format!("completion failed: {e}"))),
    };
    if !completion.is_inclusion_base() {
        return Ok(CaseResult::Finding("completion moved a vertex of B".into()));
    }
    match case.f.then(&completion) {
        Ok(composed) if composed.equivalent(&f2) => {}
        _ => return Ok(CaseResult::Finding("completion does not close the square".into())),
    }

    match cached_family_verdict(&completion, family, depth, cfg, cache)? {
        Verdict::Holds => Ok(CaseResult::Holds),
        Verdict::Inconclusive => Ok(CaseResult::Inconclusive),
        Verdict::Fails => Ok(CaseResult::Finding("completion fails the family check".into())),
    }
}

fn cached_family_verdict(
    h: &PlusEmbedding,
    family: &HereditaryFamily,
    depth: usize,
    cfg: &SearchConfig,
    cache: &FamilyCheckCache,
) -> Result<Verdict, CoreError> {
    let key = (
        h.source.clone(),
        h.target.clone(),
        h.base_map.clone(),
        h.pins.iter().map(|(k, v)| (k.clone(), v.clone())).collect::<Vec<_>>(),
    );
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let out = is_family_type_respecting(h, family, depth, cfg)?;
    cache.lock().unwrap().insert(key, out.verdict);
    Ok(out.verdict)
}

/// Loopless graph on `n` vertices with both orientations of each selected
/// unordered pair, pairs enumerated lexicographically.
pub fn symmetric_graph(n: usize, mask: u64) -> Structure {
    let mut s = Structure::empty(Language::graph(), n);
    let mut bit = 0;
    for i in 0..n {
        for j in i + 1..n {
            if mask >> bit & 1 == 1 {
                s.relations[0].insert(vec![i, j]);
                s.relations[0].insert(vec![j, i]);
            }
            bit += 1;
        }
    }
    s
}

/// The canonical inclusion lift plus at most two one-pattern pins on the
/// empty depth-1 node, each mentioning a target vertex outside the image so
/// the trace stays empty.
fn pinned_variants(source: &Structure, target: &Structure, cfg: &SearchConfig) -> Vec<PlusEmbedding> {
    let base: Vec<usize> = (0..source.size).collect();
    let mut out = Vec::new();
    if let Ok(h) = PlusEmbedding::canonical(source.clone(), target.clone(), base.clone()) {
        out.push(h);
    }
    let lang = &source.language;
    let empty1 = TypeNode::empty(lang, 1);
    let universe = admissible_patterns(lang, target.size, 1, cfg.strict_type_vertex_repeats);
    let mut added = 0;
    'search: for (sym, ps) in universe.iter().enumerate() {
        for p in ps {
            let outside = p.iter().any(|e| matches!(e, PatEntry::Base(b) if *b >= source.size));
            if !outside {
                continue;
            }
            let mut patterns = vec![BTreeSet::new(); lang.symbol_count()];
            patterns[sym].insert(p.clone());
            let value = TypeNode { depth: 1, patterns };
            if let Ok(h) = PlusEmbedding::new(
                source.clone(),
                target.clone(),
                base.clone(),
                vec![(empty1.clone(), value)],
            ) {
                out.push(h);
                added += 1;
                if added == 2 {
                    break 'search;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::complete_graph;

    fn cfg() -> SearchConfig {
        SearchConfig::default()
    }

    #[test]
    fn counterexample_instance_is_well_formed() {
        let inst = ternary_counterexample().unwrap();
        inst.validate().unwrap();
        assert!(inst.f.then(&inst.g).unwrap().equivalent(&inst.f2));
        assert_eq!(inst.forced_pins().len(), 2);
    }

    #[test]
    fn counterexample_forced_images_are_the_adjacent_types() {
        use PatEntry::*;
        let inst = ternary_counterexample().unwrap();
        let lang = mixed_language();
        for depth in [1, 2] {
            let forced = inst.f2.eval(&TypeNode::empty(&lang, depth));
            let mut expected = TypeNode::empty(&lang, depth);
            expected.patterns[0].insert(vec![Base(1), Type(0)]);
            assert_eq!(forced, expected);
        }
    }

    #[test]
    fn crafted_square_holds_via_forced_pin_completion() {
        use PatEntry::*;
        let lang = Language::graph();
        let family =
            HereditaryFamily::new(lang.clone(), vec![complete_graph(3)], FamilyMode::Embedding)
                .unwrap();
        let a = Structure::empty(lang.clone(), 0);
        let b = Structure::empty(lang.clone(), 1);
        let b2 = complete_graph(2);
        let adj0 = TypeNode {
            depth: 1,
            patterns: vec![[vec![Base(0), Type(0)], vec![Type(0), Base(0)]].into_iter().collect()],
        };
        let all4 = TypeNode {
            depth: 1,
            patterns: vec![[
                vec![Base(0), Type(0)],
                vec![Type(0), Base(0)],
                vec![Base(1), Type(0)],
                vec![Type(0), Base(1)],
            ]
            .into_iter()
            .collect()],
        };
        let f = PlusEmbedding::canonical(a.clone(), b.clone(), vec![]).unwrap();
        let g = PlusEmbedding::new(b.clone(), b2.clone(), vec![0], vec![(adj0, all4)]).unwrap();
        let f2 = f.then(&g).unwrap();
        let inst = AmalgamationInstance { family, a, b, b2, f, f2, g };
        let out = check_instance(&inst, 3, &cfg()).unwrap();
        assert_eq!(out.verdict, Verdict::Holds, "note: {:?}", out.note);
        let cert = out.certificate.unwrap();
        assert!(cert.equivalent(&inst.canonical_candidate().unwrap()));
        assert!(!cert.equivalent(&inst.g), "the supplied map itself is not usable");
    }

    #[test]
    fn conformance_smoke_on_two_vertices() {
        let family = HereditaryFamily::new(
            Language::graph(),
            vec![complete_graph(3)],
            FamilyMode::Embedding,
        )
        .unwrap();
        let report = check_family_binary(&family, 2, 3, &cfg()).unwrap();
        assert!(report.findings.is_empty(), "findings: {:?}", report.findings);
        assert!(report.instances > 0);
        assert_eq!(report.inconclusive, 0);
    }

    #[test]
    fn symmetric_graph_mask_enumeration() {
        let g = symmetric_graph(3, 0b011);
        assert_eq!(g.tuple_count(), 4);
        assert!(g.has_tuple(0, &[0, 1]) && g.has_tuple(0, &[1, 0]));
        assert!(g.has_tuple(0, &[0, 2]) && g.has_tuple(0, &[2, 0]));
    }
}
