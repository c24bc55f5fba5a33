//! Reduction processes of a gadget block: the ears `D3, D2, D1, E4, E3, E2, E1`
//! reduced in this order, stopping early only at a 3-ear that cannot be reduced
//! or is a cut-obstacle.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ear::EarDecomposition;
use crate::error::{Error, Result};
use crate::gadget::GadgetRoles;
use crate::graph::{Dart, VertexId};
use crate::mixed::{ArcId, MixedGraph};
use crate::reduce::{enumerate_correct_reductions, ReductionTrace};
use crate::search::joint_equalities;

/// Names of the block ears in ear order.
pub const BLOCK_EARS: [&str; 7] = ["E1", "E2", "E3", "E4", "D1", "D2", "D3"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProcessEnd {
    Complete,
    /// Stopped at `E_{j-1}`; `cut` tells whether its interior is a cut-obstacle.
    Incomplete {
        j: usize,
        cut: bool,
    },
    /// One of `D3, D2, D1, E4` has no correct reduction, which no reduction
    /// process allows.
    Blocked {
        ear: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Process {
    pub trace: ReductionTrace,
    pub end: ProcessEnd,
}

/// Ear indices of a gadget block, checked to be seven consecutive ears of `ed`
/// made of the gadget's vertices.
pub fn gadget_block(ed: &EarDecomposition, roles: &GadgetRoles) -> Result<[usize; 7]> {
    let members: BTreeSet<VertexId> = roles.vertices().into_iter().collect();
    let idx: Vec<usize> = (0..ed.ears.len())
        .filter(|&i| ed.ears[i].internal().iter().all(|v| members.contains(v)))
        .collect();
    if idx.len() != 7 || idx.windows(2).any(|w| w[1] != w[0] + 1) || !ed.ears[idx[2]].is_k_ear(3) {
        return Err(Error::NotApplicable(
            "not a plain contiguous gadget block".into(),
        ));
    }
    Ok([idx[0], idx[1], idx[2], idx[3], idx[4], idx[5], idx[6]])
}

fn step_end(
    m: &MixedGraph,
    ed: &EarDecomposition,
    block: &[usize; 7],
    pos: usize,
) -> Option<ProcessEnd> {
    let ear = &ed.ears[block[pos]];
    if pos <= 2 {
        let set: BTreeSet<VertexId> = ear.internal().iter().copied().collect();
        if m.is_cut_obstacle(&set) {
            return Some(ProcessEnd::Incomplete {
                j: pos + 2,
                cut: true,
            });
        }
    }
    None
}

/// Every reduction process of the block from state `m`, up to `limit` of them.
pub fn all_reduction_processes(
    m: &MixedGraph,
    ed: &EarDecomposition,
    block: &[usize; 7],
    limit: usize,
) -> Result<Vec<Process>> {
    let mut out = Vec::new();
    let mut trace = ReductionTrace::new(m.clone());
    walk(ed, block, 6, &mut trace, &mut out, limit)?;
    Ok(out)
}

/// One reduction process, choosing uniformly at random with `seed` or taking
/// the first correct reduction each time.
pub fn run_reduction_process(
    m: &MixedGraph,
    ed: &EarDecomposition,
    block: &[usize; 7],
    seed: Option<u64>,
) -> Result<Process> {
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut trace = ReductionTrace::new(m.clone());
    for pos in (0..7).rev() {
        if let Some(end) = step_end(&trace.last, ed, block, pos) {
            return Ok(Process { trace, end });
        }
        let all = enumerate_correct_reductions(&trace.last, ed.ears[block[pos]].internal())?;
        let pick = match rng.as_mut() {
            Some(r) => all.choose(r).cloned(),
            None => all.into_iter().next(),
        };
        match pick {
            Some(c) => trace.push(c)?,
            None => {
                return Ok(Process {
                    trace,
                    end: stuck_end(pos, block),
                })
            }
        }
    }
    Ok(Process {
        trace,
        end: ProcessEnd::Complete,
    })
}

fn stuck_end(pos: usize, block: &[usize; 7]) -> ProcessEnd {
    if pos <= 2 {
        ProcessEnd::Incomplete {
            j: pos + 2,
            cut: false,
        }
    } else {
        ProcessEnd::Blocked { ear: block[pos] }
    }
}

fn walk(
    ed: &EarDecomposition,
    block: &[usize; 7],
    pos: usize,
    trace: &mut ReductionTrace,
    out: &mut Vec<Process>,
    limit: usize,
) -> Result<()> {
    if out.len() >= limit {
        return Ok(());
    }
    if let Some(end) = step_end(&trace.last, ed, block, pos) {
        out.push(Process {
            trace: trace.clone(),
            end,
        });
        return Ok(());
    }
    let all = enumerate_correct_reductions(&trace.last, ed.ears[block[pos]].internal())?;
    if all.is_empty() {
        out.push(Process {
            trace: trace.clone(),
            end: stuck_end(pos, block),
        });
        return Ok(());
    }
    for c in all {
        trace.push(c)?;
        if pos == 0 {
            out.push(Process {
                trace: trace.clone(),
                end: ProcessEnd::Complete,
            });
        } else {
            walk(ed, block, pos - 1, trace, out, limit)?;
        }
        let s = trace.steps.pop().expect("pushed step");
        trace.last = s.before;
    }
    Ok(())
}

/// Summary of all reduction processes of one gadget state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GadgetCheck {
    /// Whether `x -> u` and `u -> x` are arcs at the start.
    pub equalities: (bool, bool),
    pub complete: usize,
    pub incomplete: usize,
    pub incomplete_without_cut: usize,
    pub blocked: usize,
    /// Complete processes violating the placement of the joint arcs.
    pub placement_failures: usize,
    pub truncated: bool,
}

impl GadgetCheck {
    /// Complete processes exist iff exactly one equality holds, every
    /// incomplete process stops at a cut-obstacle, none is blocked and every
    /// complete process places the joint arcs as required.
    pub fn agrees(&self) -> bool {
        let exactly_one = self.equalities.0 != self.equalities.1;
        !self.truncated
            && (self.complete > 0) == exactly_one
            && self.incomplete_without_cut == 0
            && self.blocked == 0
            && self.placement_failures == 0
    }
}

fn contains_run(hay: &[Dart], needle: &[Dart]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

/// Run every reduction process of the gadget from `m` and tabulate the results.
pub fn check_gadget(
    m: &MixedGraph,
    ed: &EarDecomposition,
    roles: &GadgetRoles,
    limit: usize,
) -> Result<GadgetCheck> {
    let block = gadget_block(ed, roles)?;
    let (x, u) = (roles.x, roles.u);
    let equalities = joint_equalities(m, x, u);
    let single = |v: Vec<ArcId>| -> Result<ArcId> {
        match v.as_slice() {
            [a] => Ok(*a),
            _ => Err(Error::NotApplicable(
                "joint or replica does not carry exactly one arc each way".into(),
            )),
        }
    };
    let alpha = [single(m.out_arcs(x))?, single(m.in_arcs(x))?];
    let beta = [single(m.in_arcs(u))?, single(m.out_arcs(u))?];
    let e3 = &ed.ears[block[2]];
    let x_prime = *e3.vertices.last().unwrap();
    if e3.vertices[e3.vertices.len() - 2] != x {
        return Err(Error::NotApplicable(
            "joint is not next to the end of its 3-ear".into(),
        ));
    }
    let xx = Dart::new(*e3.edges.last().unwrap(), x, x_prime);
    let procs = all_reduction_processes(m, ed, &block, limit)?;
    let mut c = GadgetCheck {
        equalities,
        truncated: procs.len() >= limit,
        ..Default::default()
    };
    for p in &procs {
        match p.end {
            ProcessEnd::Complete => {
                c.complete += 1;
                let other = if equalities.0 && !equalities.1 {
                    Some(1)
                } else if equalities.1 && !equalities.0 {
                    Some(0)
                } else {
                    None
                };
                if let Some(k) = other {
                    let exp = |a: ArcId| m.arc(a).unwrap().expansion.clone();
                    let (a_exp, b_exp) = (exp(alpha[k]), exp(beta[k]));
                    let holder = |d: Dart| {
                        p.trace
                            .last
                            .arcs()
                            .find(|a| a.expansion.contains(&d))
                            .map(|a| a.id)
                    };
                    let ok = match (holder(xx), holder(xx.reversed())) {
                        (Some(p1), Some(p2)) if p1 != p2 => {
                            let e1 = &p.trace.last.arc(p1).unwrap().expansion;
                            let e2 = &p.trace.last.arc(p2).unwrap().expansion;
                            (contains_run(e1, &a_exp) && contains_run(e2, &b_exp))
                                || (contains_run(e1, &b_exp) && contains_run(e2, &a_exp))
                        }
                        _ => false,
                    };
                    if !ok {
                        c.placement_failures += 1;
                    }
                }
            }
            ProcessEnd::Incomplete { cut, .. } => {
                c.incomplete += 1;
                if !cut {
                    c.incomplete_without_cut += 1;
                }
            }
            ProcessEnd::Blocked { .. } => c.blocked += 1,
        }
    }
    Ok(c)
}
