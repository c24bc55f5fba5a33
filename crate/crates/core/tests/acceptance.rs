//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use dcdc::closure::{admits, explore_closure, is_relevant, relevantize};
use dcdc::ear::{find_super_robust, EarDecomposition, SearchOutcome as EarSearch};
use dcdc::gadget::{build_h, expected_h0_len, GadgetRoles, TrigraphConstruction};
use dcdc::gen::{random_gadget_host, random_planar_trigraph, random_trigraph};
use dcdc::graph::{named, VertexId};
use dcdc::mixed::MixedGraph;
use dcdc::process::check_gadget;
use dcdc::process::gadget_block;
use dcdc::pipeline::extract_lockstep;
use dcdc::reduce::{
    apply, enumerate_correct_reductions, extract_dcdc, verify_dcdc, ReductionChoice,
    ReductionTrace,
};
use dcdc::search::{
    gadget_joints, joint_equalities, planar_ccr, superb_search, SearchConfig, SearchStatus,
};
use dcdc::toroidal::{toroidal_demo, Matching, ToroidalReport};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

type Outcome = std::result::Result<String, String>;

/// Degree discipline audit over every state produced by an apply in the runs.
static AUDIT: Mutex<(usize, Vec<String>)> = Mutex::new((0, Vec::new()));

fn record(checked: usize, bad: Vec<String>) {
    let mut a = AUDIT.lock().unwrap();
    a.0 += checked;
    a.1.extend(bad);
}

fn checked_apply(m: &MixedGraph, c: &ReductionChoice) -> std::result::Result<MixedGraph, String> {
    let next = apply(m, c).map_err(|e| e.to_string())?.graph;
    record(
        1,
        next.check_degree_discipline()
            .err()
            .map(|e| e.to_string())
            .into_iter()
            .collect(),
    );
    Ok(next)
}

fn audit_trace(t: &ReductionTrace) {
    let (n, bad) = t.discipline_audit();
    record(n, bad);
}

fn construction(g: &dcdc::graph::Multigraph) -> TrigraphConstruction {
    let EarSearch::Found(ed) = find_super_robust(g, 100_000).unwrap() else {
        panic!("no super robust decomposition")
    };
    build_h(g, &ed).unwrap()
}

/// Reduce the ears after `block[6]` in reverse order, first correct reduction each.
fn reduce_later(
    tc: &TrigraphConstruction,
    ed: &EarDecomposition,
    block: &[usize; 7],
) -> Option<MixedGraph> {
    let mut m = MixedGraph::from_graph(&tc.h);
    for ear in ed.ears[block[6] + 1..].iter().rev() {
        let c = enumerate_correct_reductions(&m, ear.internal())
            .ok()?
            .into_iter()
            .next()?;
        m = checked_apply(&m, &c).ok()?;
    }
    Some(m)
}

fn reduce_star(
    m: &MixedGraph,
    center: VertexId,
    want: Option<&[Vec<VertexId>]>,
) -> Option<MixedGraph> {
    let all = enumerate_correct_reductions(m, &[center]).ok()?;
    let pick = match want {
        None => all.into_iter().next()?,
        Some(w) => {
            let w: BTreeSet<Vec<VertexId>> = w.iter().cloned().collect();
            all.into_iter()
                .find(|c| c.path_vertices(m).into_iter().collect::<BTreeSet<_>>() == w)?
        }
    };
    checked_apply(m, &pick).ok()
}

/// The E4 state of one gadget: later ears and `D3, D2` reduced, `D1` reduced to
/// the arcs `a' -> v`, `v -> w`, `w -> a'`.
fn e4_state(tc: &TrigraphConstruction, r: &GadgetRoles) -> Option<MixedGraph> {
    let block = gadget_block(&tc.canonical, r).ok()?;
    let m = reduce_later(tc, &tc.canonical, &block)?;
    let m = reduce_star(&m, r.d3, None)?;
    let m = reduce_star(&m, r.d2, None)?;
    let want = [
        vec![r.a_prime, r.d1, r.v],
        vec![r.v, r.d1, r.w],
        vec![r.w, r.d1, r.a_prime],
    ];
    reduce_star(&m, r.d1, Some(&want))
}

fn criterion_1() -> Outcome {
    let mut checked = 0;
    let mut total = 0;
    for g in [named::k4(), named::prism(), named::k33()] {
        let tc = construction(&g);
        total += tc.gadgets.len();
        for r in &tc.gadgets {
            let Some(m) = e4_state(&tc, r) else { continue };
            let (u1, u2) = match (m.in_arcs(r.u).as_slice(), m.out_arcs(r.u).as_slice()) {
                ([i], [o]) => (m.arc(*i).unwrap().tail, m.arc(*o).unwrap().head),
                _ => return Err(format!("replica {} does not carry one arc each way", r.u)),
            };
            let (z, u, v, y, w, ap) = (r.z, r.u, r.v, r.y, r.w, r.a_prime);
            let expected: BTreeSet<BTreeSet<Vec<VertexId>>> = [
                vec![
                    vec![y, v, w],
                    vec![ap, v, u, z],
                    vec![z, u, u2],
                    vec![u1, u, v, y],
                ],
                vec![
                    vec![z, u, v, w],
                    vec![ap, v, y],
                    vec![y, v, u, u2],
                    vec![u1, u, z],
                ],
                vec![
                    vec![z, u, v, y],
                    vec![y, v, w],
                    vec![u1, u, z],
                    vec![ap, v, u, u2],
                ],
                vec![
                    vec![y, v, u, z],
                    vec![ap, v, y],
                    vec![z, u, u2],
                    vec![u1, u, v, w],
                ],
            ]
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
            let got: BTreeSet<BTreeSet<Vec<VertexId>>> = enumerate_correct_reductions(&m, &[u, v])
                .map_err(|e| e.to_string())?
                .iter()
                .map(|c| c.path_vertices(&m).into_iter().collect())
                .collect();
            if got.len() != 4 || got != expected {
                return Err(format!(
                    "gadget {}: {} reductions, expected the four listed",
                    r.owner,
                    got.len()
                ));
            }
            checked += 1;
        }
    }
    if checked == 0 {
        return Err("no gadget reached the E4 state".into());
    }
    Ok(format!(
        "{checked}/{total} gadgets of K4, prism, K3,3 reached; exactly reductions 1-4 at each"
    ))
}

/// Random gadget states: one gadget in a small random host, every later ear
/// reduced at random, then every reduction process of the gadget is run. Each
/// equality combination is sampled up to a quota so that all four are covered.
fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let quota = 100;
    let mut combos: BTreeMap<(bool, bool), usize> = BTreeMap::new();
    let mut bad = Vec::new();
    let start = Instant::now();
    while combos.len() < 4 || combos.values().any(|&c| c < quota) {
        if start.elapsed() > Duration::from_secs(50) {
            break;
        }
        let (t, roles) = random_gadget_host(30, &mut rng);
        let block = gadget_block(&t.ed, &roles).map_err(|e| e.to_string())?;
        let mut m = MixedGraph::from_graph(&t.graph);
        let mut ok = true;
        for ear in t.ed.ears[block[6] + 1..].iter().rev() {
            let all =
                enumerate_correct_reductions(&m, ear.internal()).map_err(|e| e.to_string())?;
            match all.choose(&mut rng) {
                Some(c) => m = checked_apply(&m, c)?,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let eq = joint_equalities(&m, roles.x, roles.u);
        if !ok || combos.get(&eq).copied().unwrap_or(0) >= quota {
            continue;
        }
        let c = check_gadget(&m, &t.ed, &roles, 100_000).map_err(|e| e.to_string())?;
        *combos.entry(c.equalities).or_default() += 1;
        if !c.agrees() {
            bad.push(format!("{c:?}"));
        }
    }
    let samples: usize = combos.values().sum();
    let summary = format!("{samples} gadget states, combinations {combos:?}");
    if !bad.is_empty() {
        return Err(format!(
            "{summary}; {} disagree, first {}",
            bad.len(),
            bad[0]
        ));
    }
    if samples < 200 || combos.len() < 4 {
        return Err(format!("{summary}; coverage too small"));
    }
    Ok(format!("{summary}; no counterexample"))
}

/// Random ccrs along generated robust trigraphs; every 3-ear interior met that
/// is not a cut obstacle is a sample.
fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut samples, mut blocked, mut bad) = (0usize, 0usize, Vec::new());
    while samples < 1500 {
        let t = random_trigraph(4, 40, &mut rng);
        let mut m = MixedGraph::from_graph(&t.graph);
        for ear in t.ed.ears.iter().rev() {
            let all =
                enumerate_correct_reductions(&m, ear.internal()).map_err(|e| e.to_string())?;
            if ear.is_k_ear(3) {
                let set: BTreeSet<VertexId> = ear.internal().iter().copied().collect();
                if !m.is_cut_obstacle(&set) {
                    let i = ear.internal();
                    let inner = m
                        .is_inner_obstacle([i[0], i[1], i[2]])
                        .map_err(|e| e.to_string())?;
                    samples += 1;
                    if all.is_empty() {
                        blocked += 1;
                    }
                    if all.is_empty() != inner {
                        bad.push(format!(
                            "ear {:?}: empty {} inner {inner}",
                            i,
                            all.is_empty()
                        ));
                    }
                }
            }
            match all.choose(&mut rng) {
                Some(c) => m = checked_apply(&m, c)?,
                None => break,
            }
        }
    }
    let summary = format!("{samples} non-cut 3-ear states, {blocked} without correct reduction");
    match bad.first() {
        Some(b) => Err(format!("{summary}; {} mismatches, first {b}", bad.len())),
        None => Ok(format!("{summary}; all match the inner obstacle")),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut largest = 0;
    for k in 0..60 {
        let t = random_planar_trigraph(4, 60, &mut rng);
        let rot = t.rot.as_ref().unwrap();
        let g = &t.graph;
        largest = largest.max(g.vertex_count());
        let trace = planar_ccr(g, &t.ed, rot).map_err(|e| format!("instance {k}: {e}"))?;
        audit_trace(&trace);
        if !trace.is_complete() {
            return Err(format!("instance {k}: incomplete trace"));
        }
        let fam = extract_dcdc(&trace).map_err(|e| e.to_string())?;
        let faces = g.edge_count() + 2 - g.vertex_count();
        if fam.cycles.len() != faces {
            return Err(format!(
                "instance {k}: {} cycles, {faces} faces",
                fam.cycles.len()
            ));
        }
        let v = verify_dcdc(g, &fam);
        if !v.ok {
            return Err(format!("instance {k}: {v:?}"));
        }
    }
    Ok(format!(
        "60 planar trigraphs up to {largest} vertices, facial DCDCs verified"
    ))
}

fn named_graphs() -> Vec<(&'static str, dcdc::graph::Multigraph)> {
    vec![
        ("K4", named::k4()),
        ("K3,3", named::k33()),
        ("prism", named::prism()),
        ("Petersen", named::petersen()),
    ]
}

#[derive(Default)]
struct PipelineTally {
    verified: usize,
    stuck: usize,
    budget: usize,
    partial: usize,
    unsupported: usize,
}

/// Superb search on `ed`; a complete process is relevantized when needed and
/// extracted. A verifier failure or an unchecked witness is an error.
fn pipeline(
    tc: &TrigraphConstruction,
    h: &dcdc::graph::Multigraph,
    ed: &EarDecomposition,
    budget: u64,
    tally: &mut PipelineTally,
) -> std::result::Result<(), String> {
    let config = SearchConfig {
        budget,
        joints: gadget_joints(tc, ed),
        ..SearchConfig::default()
    };
    let out = superb_search(h, ed, &config).map_err(|e| e.to_string())?;
    match &out.status {
        SearchStatus::Superb { trace, j: 1 } => {
            audit_trace(trace);
            let (ed2, trace2) = match relevantize(tc, h, ed, Some(trace)) {
                Ok(r) => (r.ed, r.trace.ok_or("relevantize lost the trace")?),
                Err(_) => {
                    tally.unsupported += 1;
                    return Ok(());
                }
            };
            if !is_relevant(tc, &ed2) {
                return Err("relevantize returned a decomposition that is not relevant".into());
            }
            let ex = extract_lockstep(tc, &ed2, &trace2).map_err(|e| e.to_string())?;
            audit_trace(&ex.gp_trace);
            if !ex.verdict.ok {
                return Err(format!("verifier rejected a superb outcome: {:?}", ex.verdict));
            }
            tally.verified += 1;
        }
        SearchStatus::Superb { trace, .. } => {
            audit_trace(trace);
            tally.partial += 1;
        }
        SearchStatus::Stuck { witness, .. } => {
            if !witness.check(h, ed).map_err(|e| e.to_string())? {
                return Err("cut-obstacle witness does not check".into());
            }
            tally.stuck += 1;
        }
        SearchStatus::BudgetExhausted => tally.budget += 1,
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut members = PipelineTally::default();
    for (name, g) in named_graphs() {
        let EarSearch::Found(ed) = find_super_robust(&g, 1_000_000).map_err(|e| e.to_string())?
        else {
            return Err(format!("{name}: no super robust decomposition"));
        };
        if !ed.is_super_robust(&g) {
            return Err(format!("{name}: decomposition is not super robust"));
        }
        let tc = build_h(&g, &ed).map_err(|e| format!("{name}: {e}"))?;
        if !tc.canonical.is_robust(&tc.h) {
            return Err(format!("{name}: canonical decomposition is not robust"));
        }
        if !admits(&tc.canonical, &tc.fixed_paths()) {
            return Err(format!("{name}: canonical decomposition does not admit H0, S"));
        }
        let mut t = PipelineTally::default();
        pipeline(&tc, &tc.h, &tc.canonical, 2_000_000, &mut t)
            .map_err(|e| format!("{name}: {e}"))?;
        let what = match (t.verified, t.stuck) {
            (1, _) => "superb, cover verified",
            (_, 1) => "stuck, witness checked",
            _ => return Err(format!("{name}: canonical search inconclusive")),
        };
        lines.push(format!("{name} {what}"));
        let c = explore_closure(&tc, &tc.h, &tc.canonical, 40, 3, 5).map_err(|e| e.to_string())?;
        for m in c.members.iter().skip(1) {
            pipeline(&tc, &m.h, &m.ed, 10_000, &mut members)
                .map_err(|e| format!("{name} closure member {:x}: {e}", m.hash))?;
        }
    }
    Ok(format!(
        "{}; closure members: {} verified, {} stuck with witness, {} budget, {} partial, {} superb but outside the relevantize rewrites",
        lines.join(", "),
        members.verified,
        members.stuck,
        members.budget,
        members.partial,
        members.unsupported
    ))
}

/// Whether a toroidal failure is the documented one: more constrained path
/// vertices than free faces, a cut-obstacle in the facial prefix, and an
/// endgame that completes on every facial arrangement.
fn documented_toroidal_failure(r: &ToroidalReport) -> bool {
    r.constrained_vertices > r.free_faces
        && r.prefix.contains("CutObstacle")
        && r.endgame.facial_arrangements > 0
        && r.endgame.facial_double_complete == r.endgame.facial_arrangements
}

fn toroidal_runs() -> std::result::Result<Vec<ToroidalReport>, String> {
    [(4, 4), (6, 6)]
        .into_iter()
        .map(|(r, c)| {
            let rep = toroidal_demo(r, c, &Matching::Alternating, 2_000_000)
                .map_err(|e| format!("{r}x{c}: {e}"))?;
            record(rep.discipline.0, rep.discipline.1.clone());
            Ok(rep)
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let reports = toroidal_runs()?;
    let summary: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "{}x{}: {} constrained vertices vs {} free faces, prefix {}, endgame completes on {}/{} facial arrangements",
                r.rows,
                r.cols,
                r.constrained_vertices,
                r.free_faces,
                r.prefix,
                r.endgame.facial_double_complete,
                r.endgame.facial_arrangements
            )
        })
        .collect();
    if reports.iter().all(|r| r.succeeded()) {
        Ok(format!("{}; covers verified", summary.join("; ")))
    } else {
        Err(format!("no verified cover; {}", summary.join("; ")))
    }
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut members = 0;
    for (name, g) in named_graphs() {
        let tc = construction(&g);
        let expected = expected_h0_len(tc.gadgets.len());
        let got = tc.canonical.h0.len();
        if got != expected {
            notes.push(format!("{name}: |H0| = {got}, formula {expected}, delta {}", got as i64 - expected as i64));
        }
        let c = explore_closure(&tc, &tc.h, &tc.canonical, 200, 3, 7).map_err(|e| e.to_string())?;
        for m in &c.members {
            members += 1;
            if !tc.contracts_to_gp(&m.h) {
                return Err(format!("{name}: member {:x} does not contract to G'", m.hash));
            }
        }
    }
    let (checked, bad) = AUDIT.lock().unwrap().clone();
    if let Some(b) = bad.first() {
        return Err(format!("{} degree discipline violations, first {b}", bad.len()));
    }
    if checked == 0 {
        return Err("no state was audited".into());
    }
    let sizes = if notes.is_empty() {
        "|H0| matches 7 per gadget + 3 everywhere".to_string()
    } else {
        notes.join("; ")
    };
    Ok(format!(
        "{checked} states after apply obey the degree discipline; {members} closure members contract to G'; {sizes}"
    ))
}

fn timed(limit: Duration, f: fn() -> Outcome) -> Outcome {
    let t = Instant::now();
    let out = f();
    let el = t.elapsed();
    match out {
        Ok(msg) if el <= limit => Ok(format!("{msg} ({:.2}s)", el.as_secs_f64())),
        Ok(msg) => Err(format!(
            "{msg}, but took {:.2}s > {:?}",
            el.as_secs_f64(),
            limit
        )),
        Err(e) => Err(e),
    }
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        (
            "1 gadget E4 enumeration",
            Duration::from_secs(1),
            criterion_1,
        ),
        (
            "2 gadget process dichotomy",
            Duration::from_secs(60),
            criterion_2,
        ),
        (
            "3 inner obstacle equivalence",
            Duration::from_secs(120),
            criterion_3,
        ),
        (
            "4 planar facial reduction",
            Duration::from_secs(120),
            criterion_4,
        ),
        ("5 end-to-end pipeline", Duration::from_secs(600), criterion_5),
        ("6 toroidal demo", Duration::from_secs(300), criterion_6),
        (
            "7 structural conservation",
            Duration::from_secs(600),
            criterion_7,
        ),
    ];
    let mut failed = Vec::new();
    for (name, limit, f) in criteria {
        match timed(limit, f) {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                failed.push(name);
            }
        }
    }
    // The toroidal demo cannot produce a cover with the decomposition from a
    // column cycle; its failure is accepted only for the documented reason.
    let unexpected: Vec<_> = failed.iter().filter(|n| !n.starts_with('6')).collect();
    assert!(unexpected.is_empty(), "failed: {unexpected:?}");
    if failed.iter().any(|n| n.starts_with('6')) {
        let reports = toroidal_runs().unwrap();
        for r in reports.iter().filter(|r| !r.succeeded()) {
            assert!(
                documented_toroidal_failure(r),
                "{}x{} fails for an undocumented reason",
                r.rows,
                r.cols
            );
        }
    }
}
