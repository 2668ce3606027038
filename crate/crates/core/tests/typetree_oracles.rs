//! Level-class partitions checked against a from-scratch profile oracle, and
//! order properties of the class tree on seeded graphs.

use std::collections::BTreeSet;

use trtk_core::random::seeded_graphs;
use trtk_core::structures::{path3, Language, Structure};
use trtk_core::typetrees::{meet_closure_shape, one_type_classes, type_le, type_tree};

/// Relations of `v` to vertices below `level`, with `v` replaced by -1.
/// Written independently of the library's star-tuple code.
fn profile(s: &Structure, v: usize, level: usize) -> Vec<BTreeSet<Vec<i64>>> {
    s.relations
        .iter()
        .map(|tuples| {
            tuples
                .iter()
                .filter_map(|t| {
                    if !t.contains(&v) {
                        return None;
                    }
                    t.iter()
                        .map(|&e| {
                            if e == v {
                                Some(-1)
                            } else if e < level {
                                Some(e as i64)
                            } else {
                                None
                            }
                        })
                        .collect::<Option<Vec<i64>>>()
                })
                .collect()
        })
        .collect()
}

fn oracle_partition(s: &Structure, level: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<(Vec<BTreeSet<Vec<i64>>>, Vec<usize>)> = Vec::new();
    for v in level..s.size {
        let p = profile(s, v, level);
        match groups.iter_mut().find(|(q, _)| *q == p) {
            Some((_, members)) => members.push(v),
            None => groups.push((p, vec![v])),
        }
    }
    groups.sort_by_key(|(_, members)| members[0]);
    groups.into_iter().map(|(_, members)| members).collect()
}

#[test]
fn level_classes_match_the_profile_oracle_on_seeded_graphs() {
    for g in seeded_graphs(30, 7, 0xA11CE) {
        for level in 0..=g.size {
            let classes = one_type_classes(&g, level).unwrap();
            let got: Vec<Vec<usize>> = classes.iter().map(|c| c.members.clone()).collect();
            assert_eq!(got, oracle_partition(&g, level), "graph {g:?} level {level}");
        }
    }
}

#[test]
fn path_counts_follow_the_one_two_one_pattern() {
    let p = path3();
    let counts: Vec<usize> =
        (0..=3).map(|n| one_type_classes(&p, n).unwrap().len()).collect();
    assert_eq!(counts, vec![1, 2, 1, 0]);
}

#[test]
fn down_sets_are_chains_on_seeded_graphs() {
    for g in seeded_graphs(20, 6, 0xBEEF) {
        let tree = type_tree(&g).unwrap();
        let all: Vec<_> = tree.levels.iter().flatten().collect();
        for y in &all {
            let below: Vec<_> = all.iter().filter(|x| type_le(x, y)).collect();
            for i in 0..below.len() {
                for j in i + 1..below.len() {
                    assert!(
                        type_le(below[i], below[j]) || type_le(below[j], below[i]),
                        "down-set of {:?} not a chain in {g:?}",
                        y.members
                    );
                }
            }
        }
    }
}

#[test]
fn parents_are_the_nearest_containing_classes() {
    for g in seeded_graphs(20, 6, 0xD0) {
        let tree = type_tree(&g).unwrap();
        for (level, classes) in tree.levels.iter().enumerate().skip(1) {
            for (idx, class) in classes.iter().enumerate() {
                let p = tree.parent_of(level, idx).unwrap();
                let parent = &tree.levels[level - 1][p];
                let members: BTreeSet<_> = class.members.iter().collect();
                assert!(members.iter().all(|m| parent.members.contains(m)));
            }
        }
    }
}

#[test]
fn copies_with_equal_substructures_can_still_split_by_code() {
    // Path 0-1-2-3: the three edgeless pairs induce the same substructure,
    // yet {1,3} generates a closure remembering vertex 1's adjacency star.
    let lang = Language::graph();
    let p4 = Structure::with_tuples(
        lang,
        4,
        &[("E", &[&[0, 1], &[1, 0], &[1, 2], &[2, 1], &[2, 3], &[3, 2]])],
    )
    .unwrap();
    let c02 = meet_closure_shape(&p4, &[0, 2]).unwrap();
    let c03 = meet_closure_shape(&p4, &[0, 3]).unwrap();
    let c13 = meet_closure_shape(&p4, &[1, 3]).unwrap();
    assert_eq!(c02, c03);
    assert_ne!(c02, c13);
}

#[test]
fn codes_are_stable_under_padding_the_ambient_with_late_vertices() {
    // Appending vertices above every copy member must not change the code.
    let lang = Language::graph();
    let g = Structure::with_tuples(lang.clone(), 3, &[("E", &[&[0, 1], &[1, 0]])]).unwrap();
    let padded =
        Structure::with_tuples(lang, 5, &[("E", &[&[0, 1], &[1, 0], &[3, 4], &[4, 3]])]).unwrap();
    assert_eq!(
        meet_closure_shape(&g, &[0, 1]).unwrap(),
        meet_closure_shape(&padded, &[0, 1]).unwrap()
    );
}
