//! Atom dependency analysis: ordinary edges (head to positive ordinary body
//! atom) and e-edges (head to every occurring atom of an external-atom
//! predicate input, positive or naf). The derived relation for cycle
//! questions adds the inverses of the ordinary edges.
//!
//! An e-cycle is a cycle under the derived relation that traverses an
//! e-edge. Where a scope has no e-cycle, the unfounded-set check performed by
//! the ordinary solver on the guessing program is already conclusive, so the
//! explicit search can be skipped there; cyclic input atoms further restrict
//! which sets a search must consider at all.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::bits::AtomSet;
use crate::error::Result;
use crate::syntax::{InputTerm, Program, Universe};

#[derive(Clone)]
pub struct DependencyGraph {
    universe: Arc<Universe>,
    ordinary: BTreeSet<(usize, usize)>,
    external: BTreeSet<(usize, usize)>,
}

impl DependencyGraph {
    /// Graph over the full rule set.
    pub fn build(program: &Program) -> Result<DependencyGraph> {
        let all: Vec<usize> = (0..program.rules().len()).collect();
        DependencyGraph::build_filtered(program, &all)
    }

    /// Graph over a rule subset (e.g. a component program), sharing the
    /// parent atom universe. Edge targets outside the subset's own atoms are
    /// harmless: nothing points back out of them.
    pub fn build_filtered(program: &Program, rule_indices: &[usize]) -> Result<DependencyGraph> {
        program.ensure_ground("dependency analysis")?;
        let universe = program.universe().clone();
        let mut ordinary = BTreeSet::new();
        let mut external = BTreeSet::new();
        for &ri in rule_indices {
            let rule = &program.rules()[ri];
            for h in &rule.head {
                let hid = universe.id(h).expect("head atom in universe");
                for b in rule.positive_body_atoms() {
                    ordinary.insert((hid, universe.id(b).expect("body atom in universe")));
                }
                for lit in rule.external_literals() {
                    let eref = lit.external().unwrap();
                    for input in &eref.inputs {
                        if let InputTerm::Predicate(q) = input {
                            for &aid in universe.atoms_of_predicate(q) {
                                external.insert((hid, aid));
                            }
                        }
                    }
                }
            }
        }
        Ok(DependencyGraph {
            universe,
            ordinary,
            external,
        })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn ordinary_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ordinary.iter().copied()
    }

    pub fn e_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.external.iter().copied()
    }

    pub fn has_e_edge(&self, from: usize, to: usize) -> bool {
        self.external.contains(&(from, to))
    }

    pub fn has_ordinary_edge(&self, from: usize, to: usize) -> bool {
        self.ordinary.contains(&(from, to))
    }

    fn adjacency(&self, dual: bool, scope: Option<&AtomSet>) -> Vec<Vec<usize>> {
        let n = self.universe.len();
        let inside = |i: usize| scope.map(|s| s.contains(i)).unwrap_or(true);
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &self.ordinary {
            if inside(u) && inside(v) {
                adj[u].push(v);
                if dual {
                    adj[v].push(u);
                }
            }
        }
        for &(u, v) in &self.external {
            if inside(u) && inside(v) {
                adj[u].push(v);
            }
        }
        adj
    }

    /// SCC ids under the plain relation (ordinary ∪ e-edges), the partition
    /// base of program decomposition.
    pub fn sccs_plain(&self) -> Vec<usize> {
        tarjan(&self.adjacency(false, None))
    }

    /// SCC ids under the derived relation (ordinary ∪ inverse ∪ e-edges),
    /// optionally restricted to a scope.
    pub fn sccs_dual(&self, scope: Option<&AtomSet>) -> Vec<usize> {
        tarjan(&self.adjacency(true, scope))
    }

    /// Does the scope contain a cycle under the derived relation that uses an
    /// e-edge? Equivalent formulation: some in-scope e-edge has both
    /// endpoints in one SCC of the scope-restricted derived relation.
    pub fn has_e_cycle(&self, scope: Option<&AtomSet>) -> bool {
        if self.external.is_empty() {
            return false;
        }
        let comp = self.sccs_dual(scope);
        let inside = |i: usize| scope.map(|s| s.contains(i)).unwrap_or(true);
        self.external
            .iter()
            .any(|&(u, v)| inside(u) && inside(v) && comp[u] == comp[v])
    }

    /// Atoms `a` with an incoming e-edge from some `b` reachable from `a`
    /// under the derived relation (the e-edge itself closes the path, so
    /// this is exactly co-membership in a derived-relation SCC).
    pub fn cyclic_input_atoms(&self) -> AtomSet {
        let n = self.universe.len();
        let mut ca = AtomSet::new(n);
        if self.external.is_empty() {
            return ca;
        }
        let comp = self.sccs_dual(None);
        for &(b, a) in &self.external {
            if comp[a] == comp[b] {
                ca.insert(a);
            }
        }
        ca
    }
}

/// Iterative Tarjan SCC over an adjacency list. Returns a component id per
/// node; ids are assigned in discovery order and have no further meaning.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0usize;
    let mut ncomp = 0usize;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            if *ei == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *ei < adj[v].len() {
                let w = adj[v][*ei];
                *ei += 1;
                if index[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    comp
}

/// One SCC of the plain relation together with its associated subprogram and
/// criterion data.
#[derive(Clone)]
pub struct Component {
    /// The atoms of the strongly connected component.
    pub atoms: AtomSet,
    /// Indices of the rules with a head atom in the component.
    pub rule_indices: Vec<usize>,
    /// E-cycle within the component scope; when false the component never
    /// needs an explicit unfounded-set search.
    pub needs_ufs_check: bool,
    /// Cyclic input atoms of the component program, intersected with the
    /// component.
    pub cyclic_inputs: AtomSet,
}

pub struct ComponentPartition {
    pub components: Vec<Component>,
    /// Edges of the acyclic component dependency graph (indices into
    /// `components`).
    pub dag_edges: BTreeSet<(usize, usize)>,
}

impl ComponentPartition {
    pub fn build(program: &Program, graph: &DependencyGraph) -> Result<ComponentPartition> {
        let n = graph.universe().len();
        let comp_raw = graph.sccs_plain();

        // stable order: by minimal atom id
        let mut by_id: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (atom, &comp) in comp_raw.iter().enumerate() {
            by_id.entry(comp).or_default().push(atom);
        }
        let mut groups: Vec<Vec<usize>> = by_id.into_values().collect();
        groups.sort_by_key(|g| g[0]);
        let mut comp_of = vec![usize::MAX; n];
        for (ci, g) in groups.iter().enumerate() {
            for &a in g {
                comp_of[a] = ci;
            }
        }

        let mut components = Vec::with_capacity(groups.len());
        for g in &groups {
            let atoms = AtomSet::from_indices(n, g.iter().copied());
            let rule_indices: Vec<usize> = program
                .rules()
                .iter()
                .enumerate()
                .filter(|(_, r)| {
                    r.head
                        .iter()
                        .any(|h| program.atom_id(h).map(|i| atoms.contains(i)).unwrap_or(false))
                })
                .map(|(i, _)| i)
                .collect();
            let needs_ufs_check = graph.has_e_cycle(Some(&atoms));
            let sub = DependencyGraph::build_filtered(program, &rule_indices)?;
            let mut cyclic_inputs = sub.cyclic_input_atoms();
            cyclic_inputs.intersect_with(&atoms);
            components.push(Component {
                atoms,
                rule_indices,
                needs_ufs_check,
                cyclic_inputs,
            });
        }

        let mut dag_edges = BTreeSet::new();
        for (u, v) in graph.ordinary_edges().chain(graph.e_edges()) {
            if comp_of[u] != comp_of[v] {
                dag_edges.insert((comp_of[u], comp_of[v]));
            }
        }

        Ok(ComponentPartition {
            components,
            dag_edges,
        })
    }

    /// The component dependency graph must be acyclic; exposed for tests.
    pub fn dag_is_acyclic(&self) -> bool {
        let n = self.components.len();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &self.dag_edges {
            adj[u].push(v);
        }
        let comp = tarjan(&adj);
        let mut seen = BTreeSet::new();
        for c in comp {
            if !seen.insert(c) {
                return false;
            }
        }
        // distinct component ids for all nodes, plus no self loops
        self.dag_edges.iter().all(|&(u, v)| u != v)
    }
}

/// Predicate-level conservative pre-check: if the predicate dependency graph
/// has no e-cycle, the atom-level graph cannot have one either.
pub fn predicate_precheck(program: &Program) -> Result<bool> {
    program.ensure_ground("predicate-level analysis")?;

    fn intern(index: &mut BTreeMap<Arc<str>, usize>, name: &Arc<str>) -> usize {
        if let Some(&i) = index.get(name) {
            i
        } else {
            let i = index.len();
            index.insert(name.clone(), i);
            i
        }
    }

    let mut index: BTreeMap<Arc<str>, usize> = BTreeMap::new();
    let mut ordinary = BTreeSet::new();
    let mut external = BTreeSet::new();
    for rule in program.rules() {
        for h in &rule.head {
            let hid = intern(&mut index, &h.predicate);
            for b in rule.positive_body_atoms() {
                let bid = intern(&mut index, &b.predicate);
                ordinary.insert((hid, bid));
            }
            for lit in rule.external_literals() {
                for input in &lit.external().unwrap().inputs {
                    if let InputTerm::Predicate(q) = input {
                        let qid = intern(&mut index, q);
                        external.insert((hid, qid));
                    }
                }
            }
        }
    }

    let n = index.len();
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &ordinary {
        adj[u].push(v);
        adj[v].push(u);
    }
    for &(u, v) in &external {
        adj[u].push(v);
    }
    let comp = tarjan(&adj);
    Ok(external.iter().any(|&(u, v)| comp[u] == comp[v]))
}

#[derive(Serialize)]
pub struct ComponentReport {
    pub atoms: Vec<String>,
    pub needs_ufs_check: bool,
    pub cyclic_input_atoms: Vec<String>,
}

/// Criterion report for a program: edges, components, per-component and
/// global e-cycle flags, cyclic input atoms, predicate-level pre-check.
#[derive(Serialize)]
pub struct CriterionReport {
    pub atom_count: usize,
    pub ordinary_edges: Vec<(String, String)>,
    pub e_edges: Vec<(String, String)>,
    pub predicate_level_e_cycle: bool,
    pub global_e_cycle: bool,
    pub global_cyclic_input_atoms: Vec<String>,
    pub components: Vec<ComponentReport>,
}

impl CriterionReport {
    pub fn needs_ufs_check(&self) -> bool {
        self.global_e_cycle
    }
}

pub fn analyze(program: &Program) -> Result<CriterionReport> {
    let graph = DependencyGraph::build(program)?;
    let partition = ComponentPartition::build(program, &graph)?;
    let u = graph.universe();
    let name = |i: usize| u.atom(i).to_string();
    let set_names = |s: &AtomSet| -> Vec<String> {
        let mut v: Vec<String> = s.iter().map(name).collect();
        v.sort();
        v
    };
    Ok(CriterionReport {
        atom_count: u.len(),
        ordinary_edges: graph.ordinary_edges().map(|(a, b)| (name(a), name(b))).collect(),
        e_edges: graph.e_edges().map(|(a, b)| (name(a), name(b))).collect(),
        predicate_level_e_cycle: predicate_precheck(program)?,
        global_e_cycle: graph.has_e_cycle(None),
        global_cyclic_input_atoms: set_names(&graph.cyclic_input_atoms()),
        components: partition
            .components
            .iter()
            .map(|c| ComponentReport {
                atoms: set_names(&c.atoms),
                needs_ufs_check: c.needs_ufs_check,
                cyclic_input_atoms: set_names(&c.cyclic_inputs),
            })
            .collect(),
    })
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "atoms: {}", self.atom_count)?;
        let fmt_edges = |edges: &[(String, String)], arrow: &str| -> String {
            edges
                .iter()
                .map(|(a, b)| format!("{a} {arrow} {b}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        writeln!(f, "ordinary edges: {}", fmt_edges(&self.ordinary_edges, "->"))?;
        writeln!(f, "e-edges: {}", fmt_edges(&self.e_edges, "~>"))?;
        writeln!(f, "components:")?;
        for c in &self.components {
            write!(f, "  {{{}}}: ", c.atoms.join(", "))?;
            if c.needs_ufs_check {
                write!(f, "UFS check: required")?;
                if !c.cyclic_input_atoms.is_empty() {
                    write!(f, "; cyclic input atoms: {{{}}}", c.cyclic_input_atoms.join(", "))?;
                }
                writeln!(f)?;
            } else {
                writeln!(f, "UFS check: skippable (no e-cycle)")?;
            }
        }
        writeln!(
            f,
            "cyclic input atoms: {{{}}}",
            self.global_cyclic_input_atoms.join(", ")
        )?;
        writeln!(
            f,
            "predicate-level e-cycle: {}",
            if self.predicate_level_e_cycle { "yes" } else { "no" }
        )?;
        if self.global_e_cycle {
            writeln!(f, "UFS check: required (e-cycle present)")
        } else {
            writeln!(f, "UFS check: skippable (no e-cycle)")
        }
    }
}
