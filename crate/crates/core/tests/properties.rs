use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dcdc::closure::{admits, ear_roles, explore_closure, is_relevant, local_exchange, relevantize, EarRole};
use dcdc::ear::{find_super_robust, SearchOutcome};
use dcdc::gadget::build_h;
use dcdc::gen::{random_cubic, random_planar_trigraph, random_trigraph};
use dcdc::graph::{named, VertexId};
use dcdc::mixed::{Arc, MixedGraph};
use dcdc::reduce::{apply, enumerate_correct_reductions, extract_dcdc, verify_dcdc};
use dcdc::search::planar_ccr;

fn interior(a: &Arc) -> BTreeSet<VertexId> {
    let n = a.expansion.len();
    a.expansion[..n.saturating_sub(1)]
        .iter()
        .map(|d| d.head)
        .collect()
}

/// Random ccr along a random robust trigraph; `f` sees every state.
fn random_run(seed: u64, mut f: impl FnMut(&MixedGraph)) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_trigraph(4, 30, &mut rng);
    let mut m = MixedGraph::from_graph(&t.graph);
    for ear in t.ed.ears.iter().rev() {
        let all = enumerate_correct_reductions(&m, ear.internal()).unwrap();
        let Some(c) = all.choose(&mut rng) else { return };
        m = apply(&m, c).unwrap().graph;
        f(&m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn degree_discipline_after_every_apply(seed in any::<u64>()) {
        random_run(seed, |m| m.check_degree_discipline().unwrap());
    }

    #[test]
    fn forbidden_iff_expansions_share_a_reduced_vertex(seed in any::<u64>()) {
        random_run(seed, |m| {
            let arcs: Vec<&Arc> = m.arcs().collect();
            for (i, a) in arcs.iter().enumerate() {
                for b in &arcs[i + 1..] {
                    let share = !interior(a).is_disjoint(&interior(b));
                    assert_eq!(m.is_forbidden(a.id, b.id), share, "{} {}", a.id, b.id);
                }
            }
        });
    }

    #[test]
    fn boundary_is_symmetric(seed in any::<u64>(), pick in any::<u64>()) {
        random_run(seed, |m| {
            let vs: Vec<VertexId> = m.vertices().collect();
            let set: BTreeSet<VertexId> = vs
                .iter()
                .enumerate()
                .filter(|(i, _)| pick >> (i % 64) & 1 == 1)
                .map(|(_, v)| *v)
                .collect();
            let rest: BTreeSet<VertexId> = vs.iter().copied().filter(|v| !set.contains(v)).collect();
            let (a, b) = (m.boundary(&set), m.boundary(&rest));
            let mut ea = a.edges.clone();
            let mut eb = b.edges.clone();
            ea.sort();
            eb.sort();
            assert_eq!(ea, eb);
            assert_eq!(a.arcs_in, b.arcs_out);
            assert_eq!(a.arcs_out, b.arcs_in);
        });
    }

    #[test]
    fn enumeration_is_duplicate_free(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_trigraph(4, 30, &mut rng);
        let mut m = MixedGraph::from_graph(&t.graph);
        for ear in t.ed.ears.iter().rev() {
            let all = enumerate_correct_reductions(&m, ear.internal()).unwrap();
            let distinct: BTreeSet<_> = all.iter().map(|c| c.transitions(&m)).collect();
            prop_assert_eq!(distinct.len(), all.len());
            let Some(c) = all.choose(&mut rng) else { break };
            m = apply(&m, c).unwrap().graph;
        }
    }

    #[test]
    fn super_robust_search_is_certified(seed in any::<u64>(), half in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(g) = random_cubic(2 * half, &mut rng, 200) else { return Ok(()) };
        if let SearchOutcome::Found(ed) = find_super_robust(&g, 200_000).unwrap() {
            prop_assert!(ed.is_super_robust(&g));
            prop_assert!(ed.is_robust(&g));
        }
    }

    #[test]
    fn descendants_avoid_the_built_part(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_trigraph(4, 30, &mut rng);
        for (i, ear) in t.ed.ears.iter().enumerate() {
            let built = t.ed.vertices_upto(Some(i));
            for c in t.ed.descendant_components(&t.graph, i, ear.internal()) {
                prop_assert!(c.is_disjoint(&built));
            }
        }
    }

    #[test]
    fn planar_facial_covers_verify(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_planar_trigraph(4, 40, &mut rng);
        let trace = planar_ccr(&t.graph, &t.ed, t.rot.as_ref().unwrap()).unwrap();
        let (_, bad) = trace.discipline_audit();
        prop_assert!(bad.is_empty());
        let fam = extract_dcdc(&trace).unwrap();
        prop_assert!(verify_dcdc(&t.graph, &fam).ok);
    }
}

fn ear_key(e: &dcdc::ear::Ear) -> (dcdc::ear::EarKind, Vec<VertexId>) {
    let r = e.reversed();
    e.signature().min(r.signature())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn closure_members_keep_the_structure(seed in any::<u64>(), which in 0usize..3) {
        let g = [named::k4(), named::prism(), named::k33()][which].clone();
        let SearchOutcome::Found(ed) = find_super_robust(&g, 100_000).unwrap() else { panic!() };
        let tc = build_h(&g, &ed).unwrap();
        let c = explore_closure(&tc, &tc.h, &tc.canonical, 40, 3, seed).unwrap();
        let s = tc.fixed_paths();
        for m in &c.members {
            prop_assert!(admits(&m.ed, &s));
            prop_assert!(tc.contracts_to_gp(&m.h));
            for ear in m.ed.ears.iter().filter(|e| e.is_k_ear(3)) {
                let inside = ear.internal().iter().copied().collect::<BTreeSet<_>>();
                prop_assert!(tc
                    .gadgets
                    .iter()
                    .any(|r| inside.is_subset(&r.vertices().into_iter().collect())));
            }
            let roles = ear_roles(&m.ed);
            for (i, role) in roles.iter().enumerate() {
                if *role != Some(EarRole::Antenna) || !m.ed.ears[i].is_k_ear(3) {
                    continue;
                }
                let Ok(ex) = local_exchange(&m.h, &m.ed, i) else { continue };
                let before: Vec<_> = m.ed.ears.iter().map(ear_key).collect();
                let after: Vec<_> = ex.ed.ears.iter().map(ear_key).collect();
                let gone = before.iter().filter(|k| !after.contains(k)).count();
                prop_assert_eq!(gone, 2);
                prop_assert_eq!(after.iter().filter(|k| !before.contains(k)).count(), 2);
            }
            if let Ok(r) = relevantize(&tc, &m.h, &m.ed, None) {
                prop_assert!(is_relevant(&tc, &r.ed));
            }
        }
    }
}
