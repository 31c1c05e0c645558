//! Elimination-order heuristics behind a common trait, selected by name.
//!
//! Static orders fix the whole sequence up front; dynamic orders (`regex`,
//! `dpen`) re-rank the remaining states against the current matrix after
//! every elimination. Ties always break towards the smallest state id, which
//! keeps every run reproducible.

use std::collections::{BTreeSet, VecDeque};

use crate::models::ParametricModel;
use crate::ratfunc::RationalFunction;

use super::FlexibleMatrix;

/// Everything an ordering may inspect before elimination starts.
pub struct OrderContext<'a> {
    pub model: &'a ParametricModel,
    pub matrix: &'a FlexibleMatrix,
    pub initial: usize,
    pub eligible: &'a [usize],
    pub target: &'a BTreeSet<usize>,
}

/// A heuristic for picking the next state to eliminate.
pub trait EliminationOrder: Send + Sync {
    fn name(&self) -> &'static str;
    fn begin(&self, ctx: &OrderContext) -> Box<dyn OrderRun>;
}

/// Per-computation state of an ordering.
pub trait OrderRun {
    /// Picks the next state from `remaining`; called once per elimination.
    fn next_state(&mut self, matrix: &FlexibleMatrix, remaining: &BTreeSet<usize>) -> usize;
}

pub fn order_names() -> &'static [&'static str] {
    &[
        "forward",
        "forward-reversed",
        "backward",
        "backward-reversed",
        "scc",
        "regex",
        "spen",
        "dpen",
    ]
}

pub fn order_by_name(name: &str) -> Option<Box<dyn EliminationOrder>> {
    match name {
        "forward" => Some(Box::new(StaticOrder {
            name: "forward",
            kind: StaticKind::Forward,
            reversed: false,
        })),
        "forward-reversed" => Some(Box::new(StaticOrder {
            name: "forward-reversed",
            kind: StaticKind::Forward,
            reversed: true,
        })),
        "backward" => Some(Box::new(StaticOrder {
            name: "backward",
            kind: StaticKind::Backward,
            reversed: false,
        })),
        "backward-reversed" => Some(Box::new(StaticOrder {
            name: "backward-reversed",
            kind: StaticKind::Backward,
            reversed: true,
        })),
        "scc" => Some(Box::new(SccOrder)),
        "regex" => Some(Box::new(RegexOrder)),
        "spen" => Some(Box::new(StaticPenaltyOrder)),
        "dpen" => Some(Box::new(DynamicPenaltyOrder)),
        _ => None,
    }
}

/// A fixed sequence; remaining states not in the sequence follow by id.
struct FixedRun {
    seq: Vec<usize>,
    cursor: usize,
}

impl OrderRun for FixedRun {
    fn next_state(&mut self, _matrix: &FlexibleMatrix, remaining: &BTreeSet<usize>) -> usize {
        while self.cursor < self.seq.len() {
            let s = self.seq[self.cursor];
            self.cursor += 1;
            if remaining.contains(&s) {
                return s;
            }
        }
        *remaining.iter().next().expect("remaining states exist")
    }
}

#[derive(Clone, Copy)]
enum StaticKind {
    Forward,
    Backward,
}

struct StaticOrder {
    name: &'static str,
    kind: StaticKind,
    reversed: bool,
}

/// Breadth-first order from the initial state along the model's edges.
fn forward_positions(model: &ParametricModel) -> Vec<usize> {
    let mut order = Vec::with_capacity(model.num_states);
    let mut seen = vec![false; model.num_states];
    let mut queue = VecDeque::from([model.initial]);
    seen[model.initial] = true;
    while let Some(s) = queue.pop_front() {
        order.push(s);
        for act in &model.actions[s] {
            for &(succ, _) in &act.row {
                if !seen[succ] {
                    seen[succ] = true;
                    queue.push_back(succ);
                }
            }
        }
    }
    for s in 0..model.num_states {
        if !seen[s] {
            order.push(s);
        }
    }
    order
}

/// Breadth-first order from the target set along reversed edges.
fn backward_order(model: &ParametricModel, target: &BTreeSet<usize>) -> Vec<usize> {
    let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); model.num_states];
    for (s, acts) in model.actions.iter().enumerate() {
        for act in acts {
            for &(succ, _) in &act.row {
                preds[succ].insert(s);
            }
        }
    }
    let mut order = Vec::with_capacity(model.num_states);
    let mut seen = vec![false; model.num_states];
    let mut queue: VecDeque<usize> = target.iter().copied().collect();
    for &t in target {
        seen[t] = true;
    }
    while let Some(s) = queue.pop_front() {
        order.push(s);
        for &p in &preds[s] {
            if !seen[p] {
                seen[p] = true;
                queue.push_back(p);
            }
        }
    }
    for s in 0..model.num_states {
        if !seen[s] {
            order.push(s);
        }
    }
    order
}

impl EliminationOrder for StaticOrder {
    fn name(&self) -> &'static str {
        self.name
    }

    fn begin(&self, ctx: &OrderContext) -> Box<dyn OrderRun> {
        let base = match self.kind {
            StaticKind::Forward => forward_positions(ctx.model),
            StaticKind::Backward => backward_order(ctx.model, ctx.target),
        };
        let eligible: BTreeSet<usize> = ctx.eligible.iter().copied().collect();
        let mut seq: Vec<usize> = base.into_iter().filter(|s| eligible.contains(s)).collect();
        if self.reversed {
            seq.reverse();
        }
        Box::new(FixedRun { seq, cursor: 0 })
    }
}

/// Eliminates strongly connected components of the transient graph in
/// topological order; inside a component states follow the forward order.
struct SccOrder;

impl EliminationOrder for SccOrder {
    fn name(&self) -> &'static str {
        "scc"
    }

    fn begin(&self, ctx: &OrderContext) -> Box<dyn OrderRun> {
        let eligible: BTreeSet<usize> = ctx.eligible.iter().copied().collect();
        let sccs = tarjan_sccs(ctx.matrix, &eligible);
        let fwd = forward_positions(ctx.model);
        let mut pos = vec![usize::MAX; ctx.model.num_states];
        for (i, &s) in fwd.iter().enumerate() {
            pos[s] = i;
        }
        // Tarjan emits components in reverse topological order of the
        // condensation; reverse to process sources first.
        let mut seq = Vec::with_capacity(ctx.eligible.len());
        for comp in sccs.into_iter().rev() {
            let mut comp = comp;
            comp.sort_by_key(|&s| (pos[s], s));
            seq.extend(comp);
        }
        Box::new(FixedRun { seq, cursor: 0 })
    }
}

/// Iterative Tarjan over the sub-graph induced by `nodes`.
fn tarjan_sccs(matrix: &FlexibleMatrix, nodes: &BTreeSet<usize>) -> Vec<Vec<usize>> {
    #[derive(Clone)]
    struct NodeData {
        index: Option<usize>,
        lowlink: usize,
        on_stack: bool,
    }
    let n = matrix.num_states();
    let mut data = vec![
        NodeData {
            index: None,
            lowlink: 0,
            on_stack: false,
        };
        n
    ];
    let mut next_index = 0;
    let mut stack: Vec<usize> = Vec::new();
    let mut components: Vec<Vec<usize>> = Vec::new();

    for &root in nodes {
        if data[root].index.is_some() {
            continue;
        }
        // explicit DFS stack: (node, neighbour iterator position)
        let mut work: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        let push_node = |s: usize,
                         data: &mut Vec<NodeData>,
                         next_index: &mut usize,
                         stack: &mut Vec<usize>| {
            data[s].index = Some(*next_index);
            data[s].lowlink = *next_index;
            *next_index += 1;
            stack.push(s);
            data[s].on_stack = true;
        };
        push_node(root, &mut data, &mut next_index, &mut stack);
        let succs = |s: usize| -> Vec<usize> {
            matrix.row(s)
                .keys()
                .copied()
                .filter(|t| nodes.contains(t))
                .collect()
        };
        work.push((root, succs(root), 0));
        while let Some((node, neighbours, mut idx)) = work.pop() {
            let mut descended = false;
            while idx < neighbours.len() {
                let next = neighbours[idx];
                idx += 1;
                if data[next].index.is_none() {
                    work.push((node, neighbours.clone(), idx));
                    push_node(next, &mut data, &mut next_index, &mut stack);
                    work.push((next, succs(next), 0));
                    descended = true;
                    break;
                } else if data[next].on_stack {
                    data[node].lowlink = data[node].lowlink.min(data[next].index.unwrap());
                }
            }
            if descended {
                continue;
            }
            if data[node].lowlink == data[node].index.unwrap() {
                let mut comp = Vec::new();
                while let Some(top) = stack.pop() {
                    data[top].on_stack = false;
                    comp.push(top);
                    if top == node {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
            if let Some(&mut (parent, _, _)) = work.last_mut() {
                data[parent].lowlink = data[parent].lowlink.min(data[node].lowlink);
            }
        }
    }
    components
}

/// Dynamic order by minimal in-degree times out-degree.
struct RegexOrder;

struct RegexRun;

impl EliminationOrder for RegexOrder {
    fn name(&self) -> &'static str {
        "regex"
    }

    fn begin(&self, _ctx: &OrderContext) -> Box<dyn OrderRun> {
        Box::new(RegexRun)
    }
}

impl OrderRun for RegexRun {
    fn next_state(&mut self, matrix: &FlexibleMatrix, remaining: &BTreeSet<usize>) -> usize {
        remaining
            .iter()
            .copied()
            .min_by_key(|&s| {
                (
                    matrix.predecessors(s).len() * matrix.row(s).len(),
                    s,
                )
            })
            .expect("remaining states exist")
    }
}

/// Complexity of a rational function: term counts plus total degrees of both
/// polynomials.
fn complexity(f: &RationalFunction) -> usize {
    let (dn, dd, tn, td) = f.stats();
    dn as usize + dd as usize + tn + td
}

fn penalty(matrix: &FlexibleMatrix, s: usize) -> usize {
    let mut acc = 0;
    for f in matrix.row(s).values() {
        acc += complexity(f);
    }
    for &p in matrix.predecessors(s) {
        if p != s {
            if let Some(f) = matrix.entry(p, s) {
                acc += complexity(f);
            }
        }
    }
    acc
}

/// Static penalty order: complexity of incident functions on the initial
/// matrix, ascending.
struct StaticPenaltyOrder;

impl EliminationOrder for StaticPenaltyOrder {
    fn name(&self) -> &'static str {
        "spen"
    }

    fn begin(&self, ctx: &OrderContext) -> Box<dyn OrderRun> {
        let mut scored: Vec<(usize, usize)> = ctx
            .eligible
            .iter()
            .map(|&s| (penalty(ctx.matrix, s), s))
            .collect();
        scored.sort();
        Box::new(FixedRun {
            seq: scored.into_iter().map(|(_, s)| s).collect(),
            cursor: 0,
        })
    }
}

/// Dynamic penalty order: same score recomputed against the current matrix.
struct DynamicPenaltyOrder;

struct DynamicPenaltyRun;

impl EliminationOrder for DynamicPenaltyOrder {
    fn name(&self) -> &'static str {
        "dpen"
    }

    fn begin(&self, _ctx: &OrderContext) -> Box<dyn OrderRun> {
        Box::new(DynamicPenaltyRun)
    }
}

impl OrderRun for DynamicPenaltyRun {
    fn next_state(&mut self, matrix: &FlexibleMatrix, remaining: &BTreeSet<usize>) -> usize {
        remaining
            .iter()
            .copied()
            .min_by_key(|&s| (penalty(matrix, s), s))
            .expect("remaining states exist")
    }
}
