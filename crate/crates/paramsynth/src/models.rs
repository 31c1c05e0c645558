//! Explicit-state parametric Markov chains and MDPs.
//!
//! Models are parsed from a line-oriented text format, instantiated at rational
//! points, analysed qualitatively (reachability of targets on the
//! nonzero-transition graph), and checked exactly once instantiated: Gaussian
//! elimination over the rationals for chains, policy iteration over the
//! rationals for decision processes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::ratfunc::{
    parse_rational_constant, parse_rational_function_at, rational_to_string, Evaluated,
    ParseError, Rational, RationalFunction, Var,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("instantiation is not well-defined: {0}")]
    NotWellDefined(String),
    #[error("expected reward diverges: target unreachable with positive probability")]
    RewardDiverges,
    #[error("model has no reward function")]
    NoRewards,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Pmc,
    Pmdp,
}

/// One enabled action of a state: a label and its sparse successor row.
#[derive(Debug, Clone)]
pub struct Action {
    pub label: String,
    /// Sparse `(successor, probability function)` pairs, ascending by state.
    pub row: Vec<(usize, RationalFunction)>,
}

/// Explicit sparse pMC or pMDP. Rows are kept per state and action; a pMC has
/// exactly one action per state. Immutable after parsing.
#[derive(Debug, Clone)]
pub struct ParametricModel {
    pub kind: ModelKind,
    pub num_states: usize,
    pub initial: usize,
    pub params: Vec<Var>,
    pub actions: Vec<Vec<Action>>,
    /// Optional state(-action) rewards, indexed like `actions`.
    pub rewards: Option<Vec<Vec<RationalFunction>>>,
    pub labels: BTreeMap<String, BTreeSet<usize>>,
}

/// Assignment of a rational to every parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instantiation {
    pub values: BTreeMap<Var, Rational>,
}

impl Instantiation {
    pub fn new(values: BTreeMap<Var, Rational>) -> Self {
        Instantiation { values }
    }

    pub fn get(&self, v: Var) -> Option<&Rational> {
        self.values.get(&v)
    }

    /// Parses `p=2/5,q=7/10`.
    pub fn parse(src: &str, params: &[Var]) -> Result<Instantiation, ModelError> {
        let mut values = BTreeMap::new();
        for part in src.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (name, val) = part.split_once('=').ok_or_else(|| ModelError::Format {
                line: 1,
                msg: format!("expected `name=value`, found `{}`", part),
            })?;
            values.insert(Var::intern(name.trim()), parse_rational_constant(val.trim())?);
        }
        for &p in params {
            if !values.contains_key(&p) {
                return Err(ModelError::Invalid(format!(
                    "point misses parameter `{}`",
                    p.name()
                )));
            }
        }
        Ok(Instantiation { values })
    }
}

impl fmt::Display for Instantiation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(v, r)| format!("{}={}", v.name(), rational_to_string(r)))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Less,
    Leq,
    Greater,
    Geq,
}

impl Relation {
    pub fn holds(&self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Less => lhs < rhs,
            Relation::Leq => lhs <= rhs,
            Relation::Greater => lhs > rhs,
            Relation::Geq => lhs >= rhs,
        }
    }

    /// The relation describing the violation of `self`.
    pub fn negated(&self) -> Relation {
        match self {
            Relation::Less => Relation::Geq,
            Relation::Leq => Relation::Greater,
            Relation::Greater => Relation::Leq,
            Relation::Geq => Relation::Less,
        }
    }

    pub fn is_upper_bound(&self) -> bool {
        matches!(self, Relation::Less | Relation::Leq)
    }

    pub fn is_strict(&self) -> bool {
        matches!(self, Relation::Less | Relation::Greater)
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::Leq => "<=",
            Relation::Greater => ">",
            Relation::Geq => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    ReachProb,
    BoundedReachProb(usize),
    ExpReward,
}

/// Threshold specification against a labelled target set, e.g.
/// `P <= 2/5 reach target` or `E <= 5 reach done`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specification {
    pub kind: SpecKind,
    pub relation: Relation,
    pub threshold: Rational,
    pub target: String,
}

impl Specification {
    pub fn parse(src: &str) -> Result<Specification, ModelError> {
        let toks: Vec<&str> = src.split_whitespace().collect();
        let fail = |msg: &str| ModelError::Format {
            line: 1,
            msg: format!("bad specification `{}`: {}", src, msg),
        };
        if toks.len() < 4 {
            return Err(fail(
                "expected `P|E <rel> <threshold> [within <n>] reach <label>`",
            ));
        }
        let is_prob = match toks[0] {
            "P" => true,
            "E" => false,
            _ => return Err(fail("must start with `P` or `E`")),
        };
        let relation = match toks[1] {
            "<" => Relation::Less,
            "<=" => Relation::Leq,
            ">" => Relation::Greater,
            ">=" => Relation::Geq,
            other => return Err(fail(&format!("unknown relation `{}`", other))),
        };
        let threshold = parse_rational_constant(toks[2])?;
        let mut idx = 3;
        let mut bound = None;
        if toks[idx] == "within" {
            if !is_prob {
                return Err(fail("`within` is only supported for P specifications"));
            }
            let n: usize = toks
                .get(idx + 1)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| fail("expected a step bound after `within`"))?;
            bound = Some(n);
            idx += 2;
        }
        if toks.get(idx) != Some(&"reach") {
            return Err(fail("expected `reach`"));
        }
        let target = toks
            .get(idx + 1)
            .ok_or_else(|| fail("expected a target label"))?
            .to_string();
        if toks.len() > idx + 2 {
            return Err(fail("trailing input"));
        }
        let kind = if !is_prob {
            SpecKind::ExpReward
        } else if let Some(n) = bound {
            SpecKind::BoundedReachProb(n)
        } else {
            SpecKind::ReachProb
        };
        if matches!(kind, SpecKind::ReachProb | SpecKind::BoundedReachProb(_))
            && (threshold < Rational::zero() || threshold > Rational::one())
        {
            return Err(fail("probability threshold must be in [0, 1]"));
        }
        Ok(Specification {
            kind,
            relation,
            threshold,
            target,
        })
    }

    pub fn is_probability(&self) -> bool {
        !matches!(self.kind, SpecKind::ExpReward)
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = if self.is_probability() { "P" } else { "E" };
        write!(
            f,
            "{} {} {}",
            head,
            self.relation.symbol(),
            rational_to_string(&self.threshold)
        )?;
        if let SpecKind::BoundedReachProb(n) = self.kind {
            write!(f, " within {}", n)?;
        }
        write!(f, " reach {}", self.target)
    }
}

impl ParametricModel {
    /// Parses the line-oriented model format (`#` starts a comment):
    ///
    /// ```text
    /// pmc|pmdp
    /// parameters p q
    /// states N init I
    /// label target 3 5
    /// transition <from> [<action>] <to> <expr>
    /// reward <state> [<action>] <expr>
    /// ```
    pub fn parse(src: &str) -> Result<ParametricModel, ModelError> {
        let mut kind = None;
        let mut params: Vec<Var> = Vec::new();
        let mut num_states = None;
        let mut initial = None;
        let mut labels: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        let mut transitions: Vec<(usize, usize, Option<String>, usize, RationalFunction)> =
            Vec::new();
        let mut rewards: Vec<(usize, usize, Option<String>, RationalFunction)> = Vec::new();

        for (lineno, raw) in src.lines().enumerate() {
            let lineno = lineno + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ModelError::Format { line: lineno, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "pmc" | "pmdp" if toks.len() == 1 => {
                    if kind.is_some() {
                        return Err(err("duplicate model kind line".into()));
                    }
                    kind = Some(if toks[0] == "pmc" {
                        ModelKind::Pmc
                    } else {
                        ModelKind::Pmdp
                    });
                }
                "parameters" => {
                    for name in &toks[1..] {
                        let v = Var::intern(name);
                        if params.contains(&v) {
                            return Err(err(format!("duplicate parameter `{}`", name)));
                        }
                        params.push(v);
                    }
                }
                "states" => {
                    if toks.len() != 4 || toks[2] != "init" {
                        return Err(err("expected `states N init I`".into()));
                    }
                    num_states = Some(
                        toks[1]
                            .parse::<usize>()
                            .map_err(|_| err("bad state count".into()))?,
                    );
                    initial = Some(
                        toks[3]
                            .parse::<usize>()
                            .map_err(|_| err("bad initial state".into()))?,
                    );
                }
                "label" => {
                    if toks.len() < 3 {
                        return Err(err("expected `label <name> <state>...`".into()));
                    }
                    let entry = labels.entry(toks[1].to_string()).or_default();
                    for t in &toks[2..] {
                        entry.insert(t.parse::<usize>().map_err(|_| err("bad state id".into()))?);
                    }
                }
                "transition" => {
                    let is_mdp = kind == Some(ModelKind::Pmdp);
                    let min_toks = if is_mdp { 5 } else { 4 };
                    if toks.len() < min_toks {
                        return Err(err(if is_mdp {
                            "expected `transition <from> <action> <to> <expr>`".into()
                        } else {
                            "expected `transition <from> <to> <expr>`".into()
                        }));
                    }
                    let from: usize =
                        toks[1].parse().map_err(|_| err("bad source state".into()))?;
                    let (action, to_idx) = if is_mdp {
                        (Some(toks[2].to_string()), 3)
                    } else {
                        (None, 2)
                    };
                    let to: usize = toks[to_idx]
                        .parse()
                        .map_err(|_| err("bad target state".into()))?;
                    let expr_start = nth_field_start(line, to_idx + 1);
                    let expr = parse_rational_function_at(&line[expr_start..], lineno)?;
                    transitions.push((lineno, from, action, to, expr));
                }
                "reward" => {
                    let is_mdp = kind == Some(ModelKind::Pmdp);
                    let min_toks = if is_mdp { 4 } else { 3 };
                    if toks.len() < min_toks {
                        return Err(err("bad reward line".into()));
                    }
                    let state: usize = toks[1].parse().map_err(|_| err("bad state id".into()))?;
                    let (action, expr_field) = if is_mdp {
                        (Some(toks[2].to_string()), 3)
                    } else {
                        (None, 2)
                    };
                    let expr_start = nth_field_start(line, expr_field);
                    let expr = parse_rational_function_at(&line[expr_start..], lineno)?;
                    rewards.push((lineno, state, action, expr));
                }
                other => {
                    return Err(err(format!("unknown directive `{}`", other)));
                }
            }
        }

        let kind = kind.ok_or(ModelError::Format {
            line: 1,
            msg: "missing `pmc` or `pmdp` header".into(),
        })?;
        let num_states = num_states.ok_or(ModelError::Format {
            line: 1,
            msg: "missing `states` line".into(),
        })?;
        let initial = initial.unwrap_or(0);
        if initial >= num_states {
            return Err(ModelError::Invalid("initial state out of range".into()));
        }

        // Assemble per-state actions; action order is first-appearance order.
        let mut actions: Vec<Vec<Action>> = vec![Vec::new(); num_states];
        for (line, from, action, to, expr) in transitions {
            let err = |msg: String| ModelError::Format { line, msg };
            if from >= num_states || to >= num_states {
                return Err(err("state id out of range".into()));
            }
            if expr.is_zero() {
                return Err(err("stored transition function must not be zero".into()));
            }
            let label = action.unwrap_or_default();
            let acts = &mut actions[from];
            let act = match acts.iter_mut().find(|a| a.label == label) {
                Some(a) => a,
                None => {
                    acts.push(Action {
                        label,
                        row: Vec::new(),
                    });
                    acts.last_mut().unwrap()
                }
            };
            if act.row.iter().any(|&(s, _)| s == to) {
                return Err(err(format!("duplicate transition to state {}", to)));
            }
            act.row.push((to, expr));
        }
        for acts in &mut actions {
            for act in acts.iter_mut() {
                act.row.sort_by_key(|&(s, _)| s);
            }
        }
        for (s, acts) in actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(ModelError::Invalid(format!(
                    "state {} has no enabled action (deadlock states are absent)",
                    s
                )));
            }
            if kind == ModelKind::Pmc && acts.len() != 1 {
                return Err(ModelError::Invalid(format!(
                    "pMC state {} has {} actions",
                    s,
                    acts.len()
                )));
            }
        }

        let rewards = if rewards.is_empty() {
            None
        } else {
            let mut table: Vec<Vec<RationalFunction>> = actions
                .iter()
                .map(|acts| vec![RationalFunction::zero(); acts.len()])
                .collect();
            for (line, state, action, expr) in rewards {
                let err = |msg: String| ModelError::Format { line, msg };
                if state >= num_states {
                    return Err(err("state id out of range".into()));
                }
                match action {
                    Some(label) => {
                        let idx = actions[state]
                            .iter()
                            .position(|a| a.label == label)
                            .ok_or_else(|| err(format!("unknown action `{}`", label)))?;
                        table[state][idx] = expr;
                    }
                    None => {
                        for slot in &mut table[state] {
                            *slot = expr.clone();
                        }
                    }
                }
            }
            Some(table)
        };

        Ok(ParametricModel {
            kind,
            num_states,
            initial,
            params,
            actions,
            rewards,
            labels,
        })
    }

    pub fn target_states(&self, label: &str) -> Result<BTreeSet<usize>, ModelError> {
        self.labels
            .get(label)
            .cloned()
            .ok_or_else(|| ModelError::UnknownLabel(label.to_string()))
    }

    /// Parameters occurring in the outgoing functions of `state` under `action`.
    pub fn params_at(&self, state: usize, action: usize) -> Vec<Var> {
        let mut vars = Vec::new();
        for (_, f) in &self.actions[state][action].row {
            for v in f.variables() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        vars.sort();
        vars
    }

    /// Substitutes every transition function at `u`. The result is flagged
    /// rather than rejected when it is not a stochastic model.
    pub fn instantiate(&self, u: &Instantiation) -> ConcreteModel {
        let mut defect = None;
        let mut actions: Vec<Vec<ConcreteAction>> = Vec::with_capacity(self.num_states);
        for (s, acts) in self.actions.iter().enumerate() {
            let mut concrete_acts = Vec::with_capacity(acts.len());
            for act in acts {
                let mut row = Vec::with_capacity(act.row.len());
                let mut sum = Rational::zero();
                for (succ, f) in &act.row {
                    match f.evaluate(&u.values) {
                        Ok(Evaluated::Value(v)) => {
                            if v.is_negative() || v > Rational::one() {
                                defect.get_or_insert(format!(
                                    "transition value {} at state {} outside [0,1]",
                                    rational_to_string(&v),
                                    s
                                ));
                            }
                            sum += &v;
                            row.push((*succ, v));
                        }
                        Ok(Evaluated::Undefined) => {
                            defect.get_or_insert(format!(
                                "transition denominator vanishes at state {}",
                                s
                            ));
                            row.push((*succ, Rational::zero()));
                        }
                        Err(e) => {
                            defect.get_or_insert(e.to_string());
                            row.push((*succ, Rational::zero()));
                        }
                    }
                }
                if !sum.is_one() {
                    defect.get_or_insert(format!("row sum at state {} is not 1", s));
                }
                concrete_acts.push(ConcreteAction { row });
            }
            actions.push(concrete_acts);
        }
        let rewards = self.rewards.as_ref().map(|table| {
            table
                .iter()
                .enumerate()
                .map(|(s, per_action)| {
                    per_action
                        .iter()
                        .map(|f| match f.evaluate(&u.values) {
                            Ok(Evaluated::Value(v)) => {
                                if v.is_negative() {
                                    defect
                                        .get_or_insert(format!("negative reward at state {}", s));
                                }
                                v
                            }
                            _ => {
                                defect.get_or_insert(format!("reward undefined at state {}", s));
                                Rational::zero()
                            }
                        })
                        .collect()
                })
                .collect()
        });
        ConcreteModel {
            kind: self.kind,
            num_states: self.num_states,
            initial: self.initial,
            actions,
            rewards,
            labels: self.labels.clone(),
            defect,
        }
    }

    /// True iff `u` is well-defined and every nonzero transition function
    /// stays nonzero at `u`.
    pub fn is_graph_preserving_point(&self, u: &Instantiation) -> bool {
        for acts in &self.actions {
            for act in acts {
                for (_, f) in &act.row {
                    match f.evaluate(&u.values) {
                        Ok(Evaluated::Value(v)) if !v.is_zero() => {}
                        _ => return false,
                    }
                }
            }
        }
        self.instantiate(u).is_well_defined()
    }

    /// `(◊T, ¬◊T)`: the states that can reach `target` on the
    /// nonzero-transition graph, and those that cannot. For graph-preserving
    /// analysis this is independent of the parameter values.
    pub fn reach_states(&self, target: &BTreeSet<usize>) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); self.num_states];
        for (s, acts) in self.actions.iter().enumerate() {
            for act in acts {
                for &(succ, _) in &act.row {
                    preds[succ].push(s);
                }
            }
        }
        let mut can: BTreeSet<usize> = target.clone();
        let mut queue: VecDeque<usize> = target.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            for &p in &preds[s] {
                if can.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        let cannot: BTreeSet<usize> = (0..self.num_states).filter(|s| !can.contains(s)).collect();
        (can, cannot)
    }

    /// States reachable from the initial state on the nonzero graph.
    pub fn reachable_from_initial(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        seen.insert(self.initial);
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            for act in &self.actions[s] {
                for &(succ, _) in &act.row {
                    if seen.insert(succ) {
                        queue.push_back(succ);
                    }
                }
            }
        }
        seen
    }
}

/// Byte offset of the `n`-th whitespace-separated field of `line` (0-based).
fn nth_field_start(line: &str, n: usize) -> usize {
    let mut field = 0;
    let mut in_field = false;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            in_field = false;
        } else if !in_field {
            if field == n {
                return i;
            }
            field += 1;
            in_field = true;
        }
    }
    line.len()
}

#[derive(Debug, Clone)]
pub struct ConcreteAction {
    pub row: Vec<(usize, Rational)>,
}

/// Instantiated model with exact rational transition values.
#[derive(Debug, Clone)]
pub struct ConcreteModel {
    pub kind: ModelKind,
    pub num_states: usize,
    pub initial: usize,
    pub actions: Vec<Vec<ConcreteAction>>,
    pub rewards: Option<Vec<Vec<Rational>>>,
    pub labels: BTreeMap<String, BTreeSet<usize>>,
    /// `Some(reason)` when the instantiation was not well-defined.
    pub defect: Option<String>,
}

/// Exact outcome of a concrete check; expected rewards may diverge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckValue {
    Finite(Rational),
    Infinite,
}

impl CheckValue {
    pub fn finite(self) -> Option<Rational> {
        match self {
            CheckValue::Finite(v) => Some(v),
            CheckValue::Infinite => None,
        }
    }

    /// Compares against a specification threshold; `Infinite` exceeds every
    /// finite threshold.
    pub fn satisfies(&self, relation: Relation, threshold: &Rational) -> bool {
        match self {
            CheckValue::Finite(v) => relation.holds(v, threshold),
            CheckValue::Infinite => !relation.is_upper_bound(),
        }
    }
}

impl fmt::Display for CheckValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckValue::Finite(v) => write!(f, "{}", rational_to_string(v)),
            CheckValue::Infinite => write!(f, "inf"),
        }
    }
}

/// Optimization direction for MDP checks; ignored for chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptDir {
    Min,
    Max,
}

impl ConcreteModel {
    pub fn is_well_defined(&self) -> bool {
        self.defect.is_none()
    }

    fn target_states(&self, label: &str) -> Result<BTreeSet<usize>, ModelError> {
        self.labels
            .get(label)
            .cloned()
            .ok_or_else(|| ModelError::UnknownLabel(label.to_string()))
    }

    /// Exact measured value of the initial state for `spec`.
    pub fn check(&self, spec: &Specification, dir: OptDir) -> Result<CheckValue, ModelError> {
        if let Some(reason) = &self.defect {
            return Err(ModelError::NotWellDefined(reason.clone()));
        }
        let target = self.target_states(&spec.target)?;
        match spec.kind {
            SpecKind::ReachProb => Ok(CheckValue::Finite(self.reach_probability(&target, dir)?)),
            SpecKind::BoundedReachProb(n) => {
                Ok(CheckValue::Finite(self.bounded_reach(&target, n, dir)))
            }
            SpecKind::ExpReward => self.expected_reward(&target, dir),
        }
    }

    /// Graph analysis on nonzero transitions: states that can reach `target`,
    /// optionally restricted to the rows of a fixed policy.
    fn can_reach(&self, target: &BTreeSet<usize>, policy: Option<&[usize]>) -> BTreeSet<usize> {
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); self.num_states];
        for (s, acts) in self.actions.iter().enumerate() {
            match policy {
                None => {
                    for act in acts {
                        for &(succ, ref v) in &act.row {
                            if !v.is_zero() {
                                preds[succ].push(s);
                            }
                        }
                    }
                }
                Some(policy) => {
                    for &(succ, ref v) in &acts[policy[s]].row {
                        if !v.is_zero() {
                            preds[succ].push(s);
                        }
                    }
                }
            }
        }
        let mut can = target.clone();
        let mut queue: VecDeque<usize> = target.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            for &p in &preds[s] {
                if can.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        can
    }

    fn reach_probability(
        &self,
        target: &BTreeSet<usize>,
        dir: OptDir,
    ) -> Result<Rational, ModelError> {
        match self.kind {
            ModelKind::Pmc => {
                let values = self.solve_mc_reach(target, None, &BTreeSet::new())?;
                Ok(values[self.initial].clone())
            }
            ModelKind::Pmdp => {
                let (values, _) = self.optimize_reach(target, dir, None)?;
                Ok(values[self.initial].clone())
            }
        }
    }

    /// States from which some strategy avoids `target` forever (their minimal
    /// reachability probability is zero). Greatest fixpoint of
    /// `X = {s ∉ T | ∃α: succ(s,α) ⊆ X}`.
    fn prob0_exists(&self, target: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut x: BTreeSet<usize> = (0..self.num_states)
            .filter(|s| !target.contains(s))
            .collect();
        loop {
            let keep: BTreeSet<usize> = x
                .iter()
                .copied()
                .filter(|&s| {
                    self.actions[s].iter().any(|act| {
                        act.row
                            .iter()
                            .all(|&(succ, ref v)| v.is_zero() || x.contains(&succ))
                    })
                })
                .collect();
            if keep.len() == x.len() {
                return x;
            }
            x = keep;
        }
    }

    /// Solves the Bellman system of the (induced) chain exactly. Returns the
    /// full vector: 1 on targets, 0 on states that cannot reach the target
    /// and on `pinned_zero` states.
    fn solve_mc_reach(
        &self,
        target: &BTreeSet<usize>,
        policy: Option<&[usize]>,
        pinned_zero: &BTreeSet<usize>,
    ) -> Result<Vec<Rational>, ModelError> {
        let can = self.can_reach(target, policy);
        let unknowns: Vec<usize> = (0..self.num_states)
            .filter(|s| can.contains(s) && !target.contains(s) && !pinned_zero.contains(s))
            .collect();
        let index: BTreeMap<usize, usize> =
            unknowns.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let n = unknowns.len();
        let mut matrix: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n + 1]; n];
        for (i, &s) in unknowns.iter().enumerate() {
            let row = &self.actions[s][policy.map(|p| p[s]).unwrap_or(0)].row;
            matrix[i][i] = Rational::one();
            for &(succ, ref v) in row {
                if v.is_zero() {
                    continue;
                }
                if target.contains(&succ) {
                    let cell = matrix[i][n].clone() + v;
                    matrix[i][n] = cell;
                } else if let Some(&j) = index.get(&succ) {
                    let cell = matrix[i][j].clone() - v;
                    matrix[i][j] = cell;
                }
                // successors outside ◊T contribute 0
            }
        }
        let solution = gaussian_solve(matrix).ok_or_else(|| {
            ModelError::Invalid("singular reachability system (model not stochastic?)".into())
        })?;
        let mut values = vec![Rational::zero(); self.num_states];
        for t in target {
            values[*t] = Rational::one();
        }
        for (i, &s) in unknowns.iter().enumerate() {
            values[s] = solution[i].clone();
        }
        Ok(values)
    }

    /// Exact policy iteration for reachability: returns the optimal value
    /// vector and a witnessing memoryless policy. Initialization is the
    /// first enabled action (or `start`); switching happens on strict
    /// improvement only. For the minimizing direction, states with an
    /// avoiding strategy are pinned to zero first (improvement alone cannot
    /// discover them).
    pub fn optimize_reach(
        &self,
        target: &BTreeSet<usize>,
        dir: OptDir,
        start: Option<Vec<usize>>,
    ) -> Result<(Vec<Rational>, Vec<usize>), ModelError> {
        let pinned_zero = match dir {
            OptDir::Min => self.prob0_exists(target),
            OptDir::Max => BTreeSet::new(),
        };
        let mut policy = self.initial_policy(start);
        loop {
            let values = self.solve_mc_reach(target, Some(&policy), &pinned_zero)?;
            let mut improved = false;
            for s in 0..self.num_states {
                if target.contains(&s) || pinned_zero.contains(&s) {
                    continue;
                }
                let mut best = policy[s];
                let mut best_val = action_value(&self.actions[s][policy[s]].row, &values);
                for (a, act) in self.actions[s].iter().enumerate() {
                    if a == policy[s] {
                        continue;
                    }
                    let val = action_value(&act.row, &values);
                    let better = match dir {
                        OptDir::Max => val > best_val,
                        OptDir::Min => val < best_val,
                    };
                    if better {
                        best = a;
                        best_val = val;
                    }
                }
                if best != policy[s] {
                    policy[s] = best;
                    improved = true;
                }
            }
            if !improved {
                let values = self.solve_mc_reach(target, Some(&policy), &pinned_zero)?;
                return Ok((values, policy));
            }
        }
    }

    fn initial_policy(&self, start: Option<Vec<usize>>) -> Vec<usize> {
        match start {
            Some(p)
                if p.len() == self.num_states
                    && p.iter().enumerate().all(|(s, &a)| a < self.actions[s].len()) =>
            {
                p
            }
            _ => vec![0; self.num_states],
        }
    }

    /// Exact policy iteration for expected rewards. The caller must have
    /// ruled out divergence: every policy reaches the target almost surely.
    pub fn optimize_reward(
        &self,
        target: &BTreeSet<usize>,
        dir: OptDir,
        start: Option<Vec<usize>>,
    ) -> Result<(Vec<Rational>, Vec<usize>), ModelError> {
        let rewards = self.rewards.as_ref().ok_or(ModelError::NoRewards)?;
        let mut policy = self.initial_policy(start);
        loop {
            let values = self.solve_mc_reward(target, rewards, Some(&policy))?;
            let mut improved = false;
            for s in 0..self.num_states {
                if target.contains(&s) {
                    continue;
                }
                let mut best = policy[s];
                let mut best_val = &rewards[s][policy[s]]
                    + &action_value(&self.actions[s][policy[s]].row, &values);
                for (a, act) in self.actions[s].iter().enumerate() {
                    if a == policy[s] {
                        continue;
                    }
                    let val = &rewards[s][a] + &action_value(&act.row, &values);
                    let better = match dir {
                        OptDir::Max => val > best_val,
                        OptDir::Min => val < best_val,
                    };
                    if better {
                        best = a;
                        best_val = val;
                    }
                }
                if best != policy[s] {
                    policy[s] = best;
                    improved = true;
                }
            }
            if !improved {
                let values = self.solve_mc_reward(target, rewards, Some(&policy))?;
                return Ok((values, policy));
            }
        }
    }

    fn bounded_reach(&self, target: &BTreeSet<usize>, n: usize, dir: OptDir) -> Rational {
        let mut x: Vec<Rational> = (0..self.num_states)
            .map(|s| {
                if target.contains(&s) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        for _ in 0..n {
            let mut next = x.clone();
            for s in 0..self.num_states {
                if target.contains(&s) {
                    continue;
                }
                let mut vals: Vec<Rational> = self.actions[s]
                    .iter()
                    .map(|act| action_value(&act.row, &x))
                    .collect();
                vals.sort();
                next[s] = match dir {
                    OptDir::Min => vals.first().cloned().unwrap(),
                    OptDir::Max => vals.last().cloned().unwrap(),
                };
            }
            x = next;
        }
        x[self.initial].clone()
    }

    fn expected_reward(
        &self,
        target: &BTreeSet<usize>,
        dir: OptDir,
    ) -> Result<CheckValue, ModelError> {
        let rewards = self.rewards.as_ref().ok_or(ModelError::NoRewards)?;
        // Divergence check: a state reachable from the initial state before
        // absorption in T from which T is unreachable makes the expectation
        // infinite (for chains, and for the maximizing player).
        let can = self.can_reach(target, None);
        let mut reachable = BTreeSet::from([self.initial]);
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            if target.contains(&s) {
                continue;
            }
            for act in &self.actions[s] {
                for &(succ, ref v) in &act.row {
                    if !v.is_zero() && reachable.insert(succ) {
                        queue.push_back(succ);
                    }
                }
            }
        }
        if reachable.iter().any(|s| !can.contains(s)) {
            return if self.kind == ModelKind::Pmc || dir == OptDir::Max {
                Ok(CheckValue::Infinite)
            } else {
                // Min mode could avoid divergence only by restricting to
                // proper policies; out of scope for the shipped models.
                Err(ModelError::RewardDiverges)
            };
        }
        match self.kind {
            ModelKind::Pmc => {
                let values = self.solve_mc_reward(target, rewards, None)?;
                Ok(CheckValue::Finite(values[self.initial].clone()))
            }
            ModelKind::Pmdp => {
                let (values, _) = self.optimize_reward(target, dir, None)?;
                Ok(CheckValue::Finite(values[self.initial].clone()))
            }
        }
    }

    /// Solves `x = rew + P x` on the non-target states, 0 on targets.
    fn solve_mc_reward(
        &self,
        target: &BTreeSet<usize>,
        rewards: &[Vec<Rational>],
        policy: Option<&[usize]>,
    ) -> Result<Vec<Rational>, ModelError> {
        let unknowns: Vec<usize> = (0..self.num_states)
            .filter(|s| !target.contains(s))
            .collect();
        let index: BTreeMap<usize, usize> =
            unknowns.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let n = unknowns.len();
        let mut matrix: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n + 1]; n];
        for (i, &s) in unknowns.iter().enumerate() {
            let a = policy.map(|p| p[s]).unwrap_or(0);
            matrix[i][i] = Rational::one();
            matrix[i][n] = rewards[s][a].clone();
            for &(succ, ref v) in &self.actions[s][a].row {
                if v.is_zero() || target.contains(&succ) {
                    continue;
                }
                let j = index[&succ];
                let cell = matrix[i][j].clone() - v;
                matrix[i][j] = cell;
            }
        }
        let solution = gaussian_solve(matrix)
            .ok_or_else(|| ModelError::Invalid("singular reward system".into()))?;
        let mut values = vec![Rational::zero(); self.num_states];
        for (i, &s) in unknowns.iter().enumerate() {
            values[s] = solution[i].clone();
        }
        Ok(values)
    }
}

fn action_value(row: &[(usize, Rational)], values: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for &(succ, ref v) in row {
        if !v.is_zero() {
            acc += v * &values[succ];
        }
    }
    acc
}

/// Dense Gaussian elimination over the rationals with row-swap pivoting on
/// zero pivots. `matrix` is `n x (n+1)` augmented; returns the solution or
/// `None` when singular.
pub fn gaussian_solve(mut matrix: Vec<Vec<Rational>>) -> Option<Vec<Rational>> {
    let n = matrix.len();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| !matrix[r][col].is_zero())?;
        matrix.swap(col, pivot_row);
        let pivot = matrix[col][col].clone();
        for cell in matrix[col][col..].iter_mut() {
            *cell /= &pivot;
        }
        for r in 0..n {
            if r == col || matrix[r][col].is_zero() {
                continue;
            }
            let factor = matrix[r][col].clone();
            for c in col..=n {
                let delta = &factor * &matrix[col][c];
                matrix[r][c] -= delta;
            }
        }
    }
    Some((0..n).map(|i| matrix[i][n].clone()).collect())
}

#[cfg(test)]
mod tests;
