//! FLP reduct, answer-set oracle, unfounded sets and the unfounded-set
//! search.
//!
//! A set X of program atoms is unfounded wrt. a complete interpretation A iff
//! every rule with a head atom in X satisfies one of:
//!
//!   (i)   some body literal is false under A,
//!   (ii)  some body literal is false under A with all of X forced false,
//!   (iii) some head atom outside X is true under A.
//!
//! A model is an answer set exactly when no unfounded set meets its true
//! atoms, which licenses restricting the search domain to true atoms: forcing
//! already-false atoms false changes nothing, so X unfounded implies X ∩ A^T
//! unfounded.
//!
//! The search enumerates candidates by increasing cardinality with a
//! lexicographic tie-break (iterative deepening over a DFS that tries
//! inclusion before exclusion). Subtrees are pruned when some active rule can
//! no longer satisfy any condition, when a single mandatory rescue atom can
//! be propagated, or when the required-hit set is out of reach.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::bits::AtomSet;
use crate::depgraph::DependencyGraph;
use crate::error::{HexError, Result};
use crate::interp::{satisfies_view, Interpretation, OverrideView};
use crate::oracle::{OracleRegistry, TruthView};
use crate::syntax::{Constant, InputTerm, OrdinaryAtom, Program, Rule};

/// The rules of a program whose entire body is true under an interpretation.
#[derive(Clone, Debug)]
pub struct FlpReduct {
    pub rule_indices: Vec<usize>,
}

impl FlpReduct {
    pub fn rules<'a>(&self, program: &'a Program) -> Vec<&'a Rule> {
        self.rule_indices.iter().map(|&i| &program.rules()[i]).collect()
    }

    pub fn to_program(&self, program: &Program) -> Result<Program> {
        Program::from_rules(self.rules(program).into_iter().cloned().collect())
    }
}

pub fn flp_reduct(
    program: &Program,
    interp: &Interpretation,
    registry: &OracleRegistry,
) -> Result<FlpReduct> {
    let mut rule_indices = Vec::new();
    'rules: for (i, rule) in program.rules().iter().enumerate() {
        for lit in &rule.body {
            if !satisfies_view(interp, lit, registry)? {
                continue 'rules;
            }
        }
        rule_indices.push(i);
    }
    Ok(FlpReduct { rule_indices })
}

/// Exhaustive subset descent: is `interp` a minimal complete model of its own
/// FLP reduct? This is the independent semantic oracle the rest of the
/// pipeline is validated against, so it stays deliberately naive.
pub fn is_flp_answer_set(
    program: &Program,
    interp: &Interpretation,
    registry: &OracleRegistry,
    atom_cap: usize,
) -> Result<bool> {
    assert!(
        Arc::ptr_eq(interp.universe(), program.universe())
            || interp.universe().atoms() == program.universe().atoms(),
        "interpretation must range over the program's atom universe"
    );
    let n = program.universe().len();
    if n > atom_cap {
        return Err(HexError::CapExceeded {
            what: "answer-set oracle universe",
            size: n,
            cap: atom_cap,
        });
    }
    let reduct = flp_reduct(program, interp, registry)?;
    // A model of the program is exactly a model of its own reduct.
    if !crate::interp::is_model(program, interp, registry)? {
        return Ok(false);
    }
    let support: Vec<usize> = interp.true_set().iter().collect();
    let m = support.len();
    let reduct_rules = reduct.rules(program);
    for mask in 0..((1usize << m).saturating_sub(1)) {
        let mut trues = AtomSet::new(n);
        for (k, &atom) in support.iter().enumerate() {
            if mask & (1 << k) != 0 {
                trues.insert(atom);
            }
        }
        let candidate = Interpretation::from_true_set(interp.universe().clone(), trues);
        let mut is_model = true;
        'rules: for rule in &reduct_rules {
            for lit in &rule.body {
                if !satisfies_view(&candidate, lit, registry)? {
                    continue 'rules;
                }
            }
            if !rule.head.iter().any(|h| TruthView::is_true(&candidate, h)) {
                is_model = false;
                break;
            }
        }
        if is_model {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Direct check of the three unfounded-set conditions for every rule whose
/// head meets `x`. Atoms of `x` that head no rule of the program (in
/// particular atoms outside a subprogram) constrain nothing.
pub fn is_unfounded_set(
    program: &Program,
    interp: &Interpretation,
    x: &BTreeSet<OrdinaryAtom>,
    registry: &OracleRegistry,
) -> Result<bool> {
    let width = interp.universe().len();
    let mut forced = AtomSet::new(width);
    for atom in x {
        if let Some(id) = interp.universe().id(atom) {
            forced.insert(id);
        }
    }
    let overlaid = OverrideView {
        base: interp,
        forced_false: &forced,
    };

    'rules: for rule in program.rules() {
        if !rule.head.iter().any(|h| x.contains(h)) {
            continue;
        }
        // (iii)
        if rule
            .head
            .iter()
            .any(|h| !x.contains(h) && TruthView::is_true(interp, h))
        {
            continue;
        }
        for lit in &rule.body {
            // (i) then (ii)
            if !satisfies_view(interp, lit, registry)? || !satisfies_view(&overlaid, lit, registry)? {
                continue 'rules;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// An unfounded-set search instance.
pub struct UfsQuery<'a> {
    pub program: &'a Program,
    /// Restrict the rule set (component program view); `None` means all.
    pub rule_indices: Option<&'a [usize]>,
    pub interp: &'a Interpretation,
    /// Candidate atoms; the search itself further restricts to true atoms.
    pub domain: BTreeSet<OrdinaryAtom>,
    /// When nonempty, every witness must intersect this set.
    pub required_hit: BTreeSet<OrdinaryAtom>,
    /// Hard error above this effective-domain size.
    pub domain_cap: usize,
}

pub const DEFAULT_UFS_DOMAIN_CAP: usize = 20;

impl<'a> UfsQuery<'a> {
    /// Query over the whole program with domain = all true program atoms.
    pub fn global(program: &'a Program, interp: &'a Interpretation) -> Self {
        let domain = program
            .universe()
            .atoms()
            .iter()
            .filter(|a| TruthView::is_true(interp, a))
            .cloned()
            .collect();
        UfsQuery {
            program,
            rule_indices: None,
            interp,
            domain,
            required_hit: BTreeSet::new(),
            domain_cap: DEFAULT_UFS_DOMAIN_CAP,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct UfsOutcome {
    pub witness: Option<BTreeSet<OrdinaryAtom>>,
    /// Search-tree nodes expanded, accumulated over all deepening passes.
    pub nodes_expanded: u64,
    /// Complete candidate sets submitted to the exact condition check.
    pub candidates_tested: u64,
}

struct CompiledExt {
    name: Arc<str>,
    inputs: Vec<InputTerm>,
    outputs: Vec<Constant>,
    naf: bool,
    /// Predicate-input atoms inside the search domain (interp-universe ids).
    domain_inputs: Vec<usize>,
}

struct CompiledRule {
    /// Head atoms inside the domain (activation watch).
    heads: Vec<usize>,
    /// Head atoms true under A; all inside the domain after compile filters.
    head_true: Vec<usize>,
    /// Positive ordinary body atoms inside the domain (all true under A).
    rescue_ord: Vec<usize>,
    /// Indices into the external pool.
    exts: Vec<usize>,
}

struct Search<'a> {
    interp: &'a Interpretation,
    registry: &'a OracleRegistry,
    domain: Vec<usize>,
    rules: Vec<CompiledRule>,
    exts: Vec<CompiledExt>,
    rules_of_head: HashMap<usize, Vec<usize>>,
    required_hit: AtomSet,
    has_required_hit: bool,

    in_set: AtomSet,
    decided: AtomSet,
    active: Vec<usize>,
    is_active: Vec<bool>,
    limit: usize,
    cutoff: bool,
    nodes: u64,
    tested: u64,
}

impl<'a> Search<'a> {
    fn ext_is_false_now(&self, ei: usize) -> Result<bool> {
        let ext = &self.exts[ei];
        let view = OverrideView {
            base: self.interp,
            forced_false: &self.in_set,
        };
        let value = self
            .registry
            .evaluate(&ext.name, &view, &ext.inputs, &ext.outputs)?;
        let lit_true = if ext.naf { !value } else { value };
        Ok(!lit_true)
    }

    /// A rule is dead when no extension of the current partial candidate can
    /// satisfy any of the three conditions: condition (i) was ruled out at
    /// compile time, every true head atom is already inside the candidate,
    /// no positive-body rescue atom is inside or still undecided, and every
    /// external literal is pinned to its (true) value. Dead rules prune the
    /// whole subtree, which realizes superset pruning for the pattern that
    /// killed the candidate.
    fn rule_is_dead(&self, ri: usize) -> Result<bool> {
        let r = &self.rules[ri];
        if r.rescue_ord
            .iter()
            .any(|&b| self.in_set.contains(b) || !self.decided.contains(b))
        {
            return Ok(false);
        }
        if r.head_true.iter().any(|&h| !self.in_set.contains(h)) {
            return Ok(false);
        }
        for &ei in &r.exts {
            if self.exts[ei]
                .domain_inputs
                .iter()
                .any(|&a| !self.decided.contains(a))
            {
                return Ok(false); // value can still change
            }
            if self.ext_is_false_now(ei)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn include(&mut self, atom: usize, activated: &mut Vec<usize>) {
        self.in_set.insert(atom);
        self.decided.insert(atom);
        if let Some(ris) = self.rules_of_head.get(&atom) {
            for &ri in ris {
                if !self.is_active[ri] {
                    self.is_active[ri] = true;
                    self.active.push(ri);
                    activated.push(ri);
                }
            }
        }
    }

    fn undo(&mut self, included: &[usize], activated: &[usize]) {
        for &a in included {
            self.in_set.remove(a);
            self.decided.remove(a);
        }
        for &ri in activated {
            self.is_active[ri] = false;
        }
        self.active.truncate(self.active.len() - activated.len());
    }

    fn required_hit_reachable(&self) -> bool {
        if !self.has_required_hit {
            return true;
        }
        if self.required_hit.intersects(&self.in_set) {
            return true;
        }
        // some required atom still undecided?
        self.required_hit.iter().any(|a| !self.decided.contains(a))
    }

    fn required_hit_met(&self) -> bool {
        !self.has_required_hit || self.required_hit.intersects(&self.in_set)
    }

    /// Exact unfounded-set conditions for the current complete candidate.
    fn leaf_check(&mut self) -> Result<bool> {
        if self.in_set.is_empty() || !self.required_hit_met() {
            return Ok(false);
        }
        self.tested += 1;
        for idx in 0..self.active.len() {
            let ri = self.active[idx];
            let r = &self.rules[ri];
            if r.rescue_ord.iter().any(|&b| self.in_set.contains(b)) {
                continue;
            }
            if r.head_true.iter().any(|&h| !self.in_set.contains(h)) {
                continue;
            }
            let mut saved = false;
            for &ei in &r.exts {
                if self.ext_is_false_now(ei)? {
                    saved = true;
                    break;
                }
            }
            if !saved {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn dfs(&mut self, mut pos: usize) -> Result<Option<AtomSet>> {
        self.nodes += 1;

        for idx in 0..self.active.len() {
            if self.rule_is_dead(self.active[idx])? {
                return Ok(None);
            }
        }

        if !self.required_hit_reachable() {
            return Ok(None);
        }

        if self.in_set.count() == self.limit {
            if self.leaf_check()? {
                return Ok(Some(self.in_set.clone()));
            }
            if self.domain.iter().any(|&a| !self.decided.contains(a)) {
                self.cutoff = true;
            }
            return Ok(None);
        }

        // advance to the next undecided domain atom
        while pos < self.domain.len() && self.decided.contains(self.domain[pos]) {
            pos += 1;
        }
        if pos == self.domain.len() {
            // complete candidate smaller than the current cardinality bound:
            // already tested in an earlier deepening pass
            return Ok(None);
        }
        let atom = self.domain[pos];

        // include-first keeps the enumeration lexicographic per cardinality
        let mut branch_activated = Vec::new();
        self.include(atom, &mut branch_activated);
        let found = self.dfs(pos + 1)?;
        self.undo(&[atom], &branch_activated);
        if found.is_some() {
            return Ok(found);
        }

        self.decided.insert(atom);
        let found = self.dfs(pos + 1)?;
        self.decided.remove(atom);
        Ok(found)
    }
}

/// Search for a nonempty unfounded set within the query domain (restricted
/// to atoms true under the interpretation), intersecting the required-hit
/// set when one is given. Witnesses are found smallest-first with a
/// lexicographic tie-break; `None` in the outcome means no such set exists.
pub fn find_unfounded_set(query: &UfsQuery, registry: &OracleRegistry) -> Result<UfsOutcome> {
    let program = query.program;
    let interp = query.interp;
    let width = interp.universe().len();

    for atom in &query.domain {
        if program.atom_id(atom).is_none() {
            return Err(HexError::UnknownAtom(atom.to_string()));
        }
    }

    // effective domain: given domain ∩ A^T, as sorted interp-universe ids
    let mut domain: Vec<usize> = query
        .domain
        .iter()
        .filter_map(|a| interp.universe().id(a))
        .filter(|&id| interp.true_set().contains(id))
        .collect();
    domain.sort_unstable();
    domain.dedup();

    if domain.len() > query.domain_cap {
        return Err(HexError::CapExceeded {
            what: "unfounded-set search domain",
            size: domain.len(),
            cap: query.domain_cap,
        });
    }

    let mut outcome = UfsOutcome::default();
    if domain.is_empty() {
        return Ok(outcome);
    }

    let domain_bits = AtomSet::from_indices(width, domain.iter().copied());
    let mut required_hit = AtomSet::new(width);
    for a in &query.required_hit {
        if let Some(id) = interp.universe().id(a) {
            required_hit.insert(id);
        }
    }
    let has_required_hit = !query.required_hit.is_empty();
    if has_required_hit && !required_hit.intersects(&domain_bits) {
        // no candidate can hit the required set
        return Ok(outcome);
    }

    // compile the rule set
    let all_indices: Vec<usize>;
    let rule_indices: &[usize] = match query.rule_indices {
        Some(ris) => ris,
        None => {
            all_indices = (0..program.rules().len()).collect();
            &all_indices
        }
    };

    let mut rules = Vec::new();
    let mut exts = Vec::new();
    'rules: for &ri in rule_indices {
        let rule = &program.rules()[ri];
        let heads: Vec<usize> = rule
            .head
            .iter()
            .filter_map(|h| interp.universe().id(h))
            .filter(|&id| domain_bits.contains(id))
            .collect();
        if heads.is_empty() {
            continue; // never activated by any X ⊆ domain
        }
        // condition (i) is assignment-only: precompute once
        for lit in &rule.body {
            if !satisfies_view(interp, lit, registry)? {
                continue 'rules; // satisfied forever
            }
        }
        // a true head atom outside the domain satisfies (iii) forever
        let mut head_true = Vec::new();
        for h in &rule.head {
            if TruthView::is_true(interp, h) {
                let id = interp.universe().id(h).expect("true atom has an id");
                if !domain_bits.contains(id) {
                    continue 'rules;
                }
                head_true.push(id);
            }
        }
        let mut rescue_ord: Vec<usize> = rule
            .positive_body_atoms()
            .filter_map(|a| interp.universe().id(a))
            .filter(|&id| domain_bits.contains(id))
            .collect();
        rescue_ord.sort_unstable();
        rescue_ord.dedup();
        let mut ext_idxs = Vec::new();
        for lit in rule.external_literals() {
            let eref = lit.external().unwrap();
            let mut domain_inputs: Vec<usize> = Vec::new();
            for input in &eref.inputs {
                if let InputTerm::Predicate(q) = input {
                    for &aid_prog in program.universe().atoms_of_predicate(q) {
                        let atom = program.universe().atom(aid_prog);
                        if let Some(aid) = interp.universe().id(atom) {
                            if domain_bits.contains(aid) {
                                domain_inputs.push(aid);
                            }
                        }
                    }
                }
            }
            domain_inputs.sort_unstable();
            domain_inputs.dedup();
            if domain_inputs.is_empty() {
                // value pinned to its (true) value under A: never a rescue
                continue;
            }
            ext_idxs.push(exts.len());
            exts.push(CompiledExt {
                name: eref.name.clone(),
                inputs: eref.inputs.clone(),
                outputs: eref.output_constants(),
                naf: lit.is_naf(),
                domain_inputs,
            });
        }
        rules.push(CompiledRule {
            heads,
            head_true,
            rescue_ord,
            exts: ext_idxs,
        });
    }

    let mut rules_of_head: HashMap<usize, Vec<usize>> = HashMap::new();
    for (ri, r) in rules.iter().enumerate() {
        for &h in &r.heads {
            rules_of_head.entry(h).or_default().push(ri);
        }
    }

    let nrules = rules.len();
    let mut search = Search {
        interp,
        registry,
        domain,
        rules,
        exts,
        rules_of_head,
        required_hit,
        has_required_hit,
        in_set: AtomSet::new(width),
        decided: AtomSet::new(width),
        active: Vec::new(),
        is_active: vec![false; nrules],
        limit: 0,
        cutoff: false,
        nodes: 0,
        tested: 0,
    };

    for k in 1..=search.domain.len() {
        search.limit = k;
        search.cutoff = false;
        let found = search.dfs(0)?;
        if let Some(bits) = found {
            outcome.witness = Some(
                bits.iter()
                    .map(|id| interp.universe().atom(id).clone())
                    .collect(),
            );
            break;
        }
        if !search.cutoff {
            break; // pass was exhaustive: nothing larger can exist
        }
    }
    outcome.nodes_expanded = search.nodes;
    outcome.candidates_tested = search.tested;
    Ok(outcome)
}

/// No unfounded set meets the true atoms of `interp`.
pub fn is_unfounded_free(
    program: &Program,
    interp: &Interpretation,
    registry: &OracleRegistry,
    domain_cap: usize,
) -> Result<bool> {
    let mut query = UfsQuery::global(program, interp);
    query.domain_cap = domain_cap;
    Ok(find_unfounded_set(&query, registry)?.witness.is_none())
}

/// Cut conditions: no e-edge from inside the unfounded set into the cut, and
/// no ordinary edge in either direction across the cut boundary.
pub fn is_cut(
    graph: &DependencyGraph,
    unfounded: &BTreeSet<OrdinaryAtom>,
    cut: &BTreeSet<OrdinaryAtom>,
) -> bool {
    if !cut.is_subset(unfounded) {
        return false;
    }
    let id = |a: &OrdinaryAtom| graph.universe().id(a);
    for a in cut {
        let Some(aid) = id(a) else { continue };
        for b in unfounded {
            let Some(bid) = id(b) else { continue };
            if graph.has_e_edge(bid, aid) {
                return false;
            }
            if !cut.contains(b)
                && (graph.has_ordinary_edge(bid, aid) || graph.has_ordinary_edge(aid, bid))
            {
                return false;
            }
        }
    }
    true
}

/// Remove a cut from an unfounded set; the remainder is again unfounded.
pub fn reduce_by_cut(
    program: &Program,
    interp: &Interpretation,
    unfounded: &BTreeSet<OrdinaryAtom>,
    cut: &BTreeSet<OrdinaryAtom>,
    registry: &OracleRegistry,
) -> Result<BTreeSet<OrdinaryAtom>> {
    let graph = DependencyGraph::build(program)?;
    if !is_unfounded_set(program, interp, unfounded, registry)? {
        return Err(HexError::Precondition(
            "reduce_by_cut: the given set is not unfounded".into(),
        ));
    }
    if !is_cut(&graph, unfounded, cut) {
        return Err(HexError::Precondition(
            "reduce_by_cut: the given subset is not a cut".into(),
        ));
    }
    let remainder: BTreeSet<OrdinaryAtom> = unfounded.difference(cut).cloned().collect();
    debug_assert!(is_unfounded_set(program, interp, &remainder, registry)?);
    Ok(remainder)
}
