//! End-to-end checks of the amalgamation instance checker against
//! independently constructed completions and forbidden-pattern hits.

use trtk_core::amalgamation::{
    check_instance, check_family_binary, claw_with_hyperedge, mixed_language,
    ternary_counterexample, ternary_counterexample_witness,
};
use trtk_core::config::SearchConfig;
use trtk_core::outcome::Verdict;
use trtk_core::respect::is_family_type_respecting;
use trtk_core::structures::{
    complete_graph, exists_monomorphism, FamilyMode, HereditaryFamily, Language, Structure,
};

fn cfg() -> SearchConfig {
    SearchConfig::default()
}

/// The completion the pinned empty types force for an extension of the empty
/// source: the target's edge, one out-edge from the edge's source to every
/// fresh vertex, and the extension's own tuples shifted above the target.
fn forced_core(extension: &Structure) -> Structure {
    let lang = mixed_language();
    let shift = 2;
    let mut relations: Vec<(&str, Vec<Vec<usize>>)> =
        vec![("E", vec![vec![0, 1]]), ("H", Vec::new())];
    for v in 0..extension.size {
        relations[0].1.push(vec![1, v + shift]);
    }
    for (sym, tuples) in extension.relations.iter().enumerate() {
        for t in tuples {
            relations[sym].1.push(t.iter().map(|&e| e + shift).collect());
        }
    }
    let spec: Vec<(&str, Vec<&[usize]>)> = relations
        .iter()
        .map(|(name, ts)| (*name, ts.iter().map(|t| t.as_slice()).collect()))
        .collect();
    let borrowed: Vec<(&str, &[&[usize]])> =
        spec.iter().map(|(name, ts)| (*name, ts.as_slice())).collect();
    Structure::with_tuples(lang, extension.size + shift, &borrowed).unwrap()
}

fn extension(n: usize, h_tuples: &[&[usize]], e_tuples: &[&[usize]]) -> Structure {
    Structure::with_tuples(mixed_language(), n, &[("E", e_tuples), ("H", h_tuples)]).unwrap()
}

#[test]
fn counterexample_fails_with_the_expected_witness() {
    let inst = ternary_counterexample().unwrap();
    let out = check_instance(&inst, 3, &cfg()).unwrap();
    assert_eq!(out.verdict, Verdict::Fails, "note: {:?}", out.note);
    let witness = out.witness.expect("a failing instance carries its witness");
    assert_eq!(witness, ternary_counterexample_witness());
}

#[test]
fn counterexample_premises_split_as_expected() {
    let inst = ternary_counterexample().unwrap();
    assert!(inst.f.then(&inst.g).unwrap().equivalent(&inst.f2));

    let f_check = is_family_type_respecting(&inst.f, &inst.family, 3, &cfg()).unwrap();
    assert_eq!(f_check.verdict, Verdict::Holds, "note: {:?}", f_check.note);

    let f2_check = is_family_type_respecting(&inst.f2, &inst.family, 3, &cfg()).unwrap();
    assert_eq!(f2_check.verdict, Verdict::Fails);
    assert_eq!(f2_check.witness.unwrap(), ternary_counterexample_witness());
}

#[test]
fn witness_core_contains_the_claw_and_is_sharp() {
    let inst = ternary_counterexample().unwrap();
    let witness = ternary_counterexample_witness();
    assert!(inst.family.member(&witness.ambient).unwrap());

    let core = forced_core(&witness.ambient);
    let expected = extension(
        5,
        &[&[2, 3, 4]],
        &[&[0, 1], &[1, 2], &[1, 3], &[1, 4]],
    );
    assert_eq!(core, expected);
    assert!(exists_monomorphism(&claw_with_hyperedge(), &core));
    assert!(!inst.family.member(&core).unwrap());

    let mut without_hyperedge = core.clone();
    without_hyperedge.relations[1].clear();
    assert!(inst.family.member(&without_hyperedge).unwrap());
}

#[test]
fn extensions_earlier_in_the_scan_order_all_complete() {
    let inst = ternary_counterexample().unwrap();
    let earlier: Vec<Structure> = vec![
        extension(1, &[], &[]),
        extension(2, &[], &[]),
        extension(3, &[], &[]),
        extension(1, &[], &[&[0, 0]]),
        extension(1, &[&[0, 0, 0]], &[]),
        extension(2, &[], &[&[0, 1]]),
        extension(2, &[&[0, 0, 1]], &[]),
        extension(2, &[&[0, 1, 1]], &[]),
        extension(2, &[&[1, 0, 1]], &[]),
        extension(3, &[], &[&[0, 1]]),
        extension(3, &[], &[&[2, 0]]),
        extension(3, &[&[0, 0, 0]], &[]),
        extension(3, &[&[0, 0, 1]], &[]),
        extension(3, &[&[0, 0, 2]], &[]),
        extension(3, &[&[0, 1, 0]], &[]),
        extension(3, &[&[0, 1, 1]], &[]),
    ];
    for a_prime in earlier {
        assert!(inst.family.member(&a_prime).unwrap());
        let core = forced_core(&a_prime);
        assert!(
            inst.family.member(&core).unwrap(),
            "extension {a_prime:?} should complete but its core is excluded"
        );
    }
}

#[test]
fn first_distinct_entry_hyperedge_is_the_earliest_killer() {
    let upper = extension(3, &[&[0, 1, 2]], &[]);
    let core = forced_core(&upper);
    assert!(exists_monomorphism(&claw_with_hyperedge(), &core));
}

#[test]
#[ignore = "slow; the acceptance suite runs the full sweep"]
fn triangle_free_conformance_has_no_findings_up_to_four_vertices() {
    let family = HereditaryFamily::new(
        Language::graph(),
        vec![complete_graph(3)],
        FamilyMode::Embedding,
    )
    .unwrap();
    let report = check_family_binary(&family, 4, 3, &cfg()).unwrap();
    assert!(report.findings.is_empty(), "findings: {:?}", report.findings);
    assert_eq!(report.inconclusive, 0);
}

#[test]
fn triangle_free_conformance_has_no_findings_up_to_three_vertices() {
    let family = HereditaryFamily::new(
        Language::graph(),
        vec![complete_graph(3)],
        FamilyMode::Embedding,
    )
    .unwrap();
    let report = check_family_binary(&family, 3, 3, &cfg()).unwrap();
    assert!(report.findings.is_empty(), "findings: {:?}", report.findings);
    assert_eq!(report.inconclusive, 0);
    assert!(report.holds > 0);
}
