//! Partition checks replayed against raw exhaustive enumeration: every
//! canonical-coloring shortcut in the library must agree with brute force
//! over all colorings, and every witness must defeat an independently
//! constructed copy table.

use std::collections::HashSet;

use trtk_core::config::SearchConfig;
use trtk_core::outcome::Verdict;
use trtk_core::ramsey::{arrows, finite_degree, sierpinski_coloring, verify_arrows_witness, ArrowsWitness};
use trtk_core::structures::{complete_graph, enumerate_embeddings, Language, Structure};

fn cfg() -> SearchConfig {
    SearchConfig::default()
}

fn increasing_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

fn triangles(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// Does the pair coloring leave some triangle monochromatic?
fn has_mono_triangle(n: usize, color: impl Fn(usize, usize) -> usize) -> bool {
    triangles(n).iter().any(|t| {
        let c = color(t[0], t[1]);
        color(t[0], t[2]) == c && color(t[1], t[2]) == c
    })
}

#[test]
fn every_two_coloring_of_six_vertices_has_a_mono_triangle() {
    let pairs = increasing_pairs(6);
    for mask in 0u32..1 << 15 {
        let color = |i: usize, j: usize| {
            let idx = pairs.iter().position(|&p| p == (i, j)).unwrap();
            (mask >> idx & 1) as usize
        };
        assert!(has_mono_triangle(6, color), "mask {mask:#x} escaped");
    }

    let out = arrows(&complete_graph(6), &complete_graph(3), &complete_graph(2), 2, 1, &cfg())
        .unwrap();
    assert_eq!(out.verdict, Verdict::Holds);
}

#[test]
fn the_pentagon_coloring_defeats_five_vertices() {
    let c = complete_graph(5);
    let b = complete_graph(3);
    let a = complete_graph(2);
    let pairs = increasing_pairs(5);
    assert_eq!(
        enumerate_embeddings(&a, &c)
            .unwrap()
            .iter()
            .map(|e| (e.map[0], e.map[1]))
            .collect::<Vec<_>>(),
        pairs
    );

    // Cycle edges against chord edges; both classes are triangle-free.
    let pentagon: Vec<usize> = pairs
        .iter()
        .map(|&(i, j)| usize::from(!matches!(j - i, 1 | 4)))
        .collect();
    let color = |i: usize, j: usize| pentagon[pairs.iter().position(|&p| p == (i, j)).unwrap()];
    assert!(!has_mono_triangle(5, color));
    assert!(verify_arrows_witness(&c, &b, &a, 2, 1, &ArrowsWitness { colors: pentagon }).unwrap());

    let out = arrows(&c, &b, &a, 2, 1, &cfg()).unwrap();
    assert_eq!(out.verdict, Verdict::Fails);
    let w = out.witness.unwrap();
    let lib_color = |i: usize, j: usize| w.colors[pairs.iter().position(|&p| p == (i, j)).unwrap()];
    assert!(!has_mono_triangle(5, lib_color));
}

#[test]
fn canonical_enumeration_count_matches_relabelled_brute_force() {
    // Six copies, three colors: relabel every raw coloring by first
    // occurrence and count the distinct results.
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for code in 0..3usize.pow(6) {
        let mut c = code;
        let mut raw = Vec::with_capacity(6);
        for _ in 0..6 {
            raw.push(c % 3);
            c /= 3;
        }
        let mut names: Vec<usize> = Vec::new();
        let relabelled: Vec<usize> = raw
            .iter()
            .map(|&x| {
                if let Some(i) = names.iter().position(|&n| n == x) {
                    i
                } else {
                    names.push(x);
                    names.len() - 1
                }
            })
            .collect();
        seen.insert(relabelled);
    }
    assert_eq!(seen.len(), 122);

    // A run where every coloring is fine visits the whole canonical space.
    let lang = Language::graph();
    let c = Structure::empty(lang.clone(), 4);
    let b = Structure::empty(lang.clone(), 1);
    let a = Structure::empty(lang, 2);
    let out = arrows(&c, &b, &a, 3, 1, &cfg()).unwrap();
    assert_eq!(out.verdict, Verdict::Holds);
    assert_eq!(out.explored, 122);
}

#[test]
fn degree_agrees_with_raw_worst_case() {
    let cfg = cfg();
    for (c, k) in [
        (complete_graph(3), 3usize),
        (complete_graph(3), 2),
        (Structure::empty(Language::graph(), 3), 2),
    ] {
        let one = complete_graph(1);
        let copies = enumerate_embeddings(&one, &c).unwrap().len();
        let mut worst = 0usize;
        for code in 0..k.pow(copies as u32) {
            let mut x = code;
            let mut colors = Vec::with_capacity(copies);
            for _ in 0..copies {
                colors.push(x % k);
                x /= k;
            }
            let distinct: HashSet<usize> = colors.into_iter().collect();
            worst = worst.max(distinct.len());
        }
        assert_eq!(finite_degree(&c, &one, k, &cfg).unwrap(), worst, "k={k} on {c:?}");
    }
}

#[test]
fn shape_colorings_are_constant_on_homogeneous_ambients() {
    let cfg = cfg();
    let cases = [
        (complete_graph(4), complete_graph(2)),
        (Structure::empty(Language::graph(), 4), Structure::empty(Language::graph(), 2)),
    ];
    for (u, a) in cases {
        let coloring = sierpinski_coloring(&u, &a, &cfg).unwrap();
        assert_eq!(coloring.embeddings.len(), 6);
        assert_eq!(coloring.palette.len(), 1, "ambient {u:?}");
        assert!(coloring.colors.iter().all(|&c| c == 0));
    }
}
