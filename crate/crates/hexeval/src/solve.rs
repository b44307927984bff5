//! Ordinary-ASP machinery: GL reduct, answer-set enumeration (exhaustive and
//! propagation engines) and compatible-set verification.
//!
//! Both engines enumerate exactly the interpretations that are models of
//! their own GL reduct with no strictly smaller model of that reduct, in the
//! same deterministic order (false-first, lexicographic by atom rank). The
//! exhaustive engine iterates all interpretations and proves minimality by
//! plain subset enumeration; the propagation engine searches models with unit
//! propagation and proves minimality by a second propagation search. The two
//! routes are independent and cross-checked in tests.

use std::ops::ControlFlow;

use crate::bits::AtomSet;
use crate::error::{HexError, Result};
use crate::guess::GuessingProgram;
use crate::interp::{all_interpretations, Interpretation};
use crate::oracle::OracleRegistry;
use crate::syntax::{Program, Rule};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Engine {
    Exhaustive,
    Propagate,
}

impl std::str::FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exhaustive" => Ok(Engine::Exhaustive),
            "propagate" => Ok(Engine::Propagate),
            other => Err(format!("unknown engine '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveCaps {
    /// Largest atom universe the exhaustive engine will iterate.
    pub exhaustive_atoms: usize,
}

impl Default for SolveCaps {
    fn default() -> Self {
        SolveCaps {
            exhaustive_atoms: 24,
        }
    }
}

/// GL reduct of an ordinary program: delete every rule with a naf-atom true
/// in `interp`, strip naf literals from the rest.
pub fn gl_reduct(program: &Program, interp: &Interpretation) -> Result<Program> {
    ensure_ordinary(program)?;
    program.ensure_ground("GL reduct")?;
    let mut rules = Vec::new();
    for r in program.rules() {
        if r.negative_body_atoms()
            .any(|a| crate::oracle::TruthView::is_true(interp, a))
        {
            continue;
        }
        rules.push(Rule::new(
            r.head.clone(),
            r.body
                .iter()
                .filter(|l| !l.is_naf())
                .cloned()
                .collect(),
        ));
    }
    Program::from_rules(rules)
}

fn ensure_ordinary(program: &Program) -> Result<()> {
    for r in program.rules() {
        if let Some(lit) = r.external_literals().next() {
            return Err(HexError::UnexpectedExternal(lit.to_string()));
        }
    }
    Ok(())
}

/// Id-based view of an ordinary rule.
struct IdRule {
    head: Vec<usize>,
    pos: Vec<usize>,
    neg: Vec<usize>,
}

fn compile(program: &Program) -> Vec<IdRule> {
    program
        .rules()
        .iter()
        .map(|r| IdRule {
            head: r
                .head
                .iter()
                .map(|a| program.atom_id(a).expect("head atom in universe"))
                .collect(),
            pos: r
                .positive_body_atoms()
                .map(|a| program.atom_id(a).expect("body atom in universe"))
                .collect(),
            neg: r
                .negative_body_atoms()
                .map(|a| program.atom_id(a).expect("body atom in universe"))
                .collect(),
        })
        .collect()
}

fn is_classical_model(rules: &[IdRule], trues: &AtomSet) -> bool {
    rules.iter().all(|r| {
        let body_true =
            r.pos.iter().all(|&b| trues.contains(b)) && r.neg.iter().all(|&b| !trues.contains(b));
        !body_true || r.head.iter().any(|&h| trues.contains(h))
    })
}

/// The positive reduct wrt `trues`, restricted to atoms of `trues`:
/// rules whose naf part is satisfied and whose positive body lies inside
/// `trues`, with head atoms outside `trues` dropped (they cannot help a
/// smaller model). Every returned clause is satisfied by `trues` itself.
fn reduct_within(rules: &[IdRule], trues: &AtomSet) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    for r in rules {
        if r.neg.iter().any(|&b| trues.contains(b)) {
            continue;
        }
        if !r.pos.iter().all(|&b| trues.contains(b)) {
            continue;
        }
        let head: Vec<usize> = r
            .head
            .iter()
            .copied()
            .filter(|&h| trues.contains(h))
            .collect();
        out.push((head, r.pos.clone()));
    }
    out
}

/// Subset enumeration with early exit: is there a model of the reduct whose
/// true atoms form a proper subset of `trues`?
fn has_smaller_reduct_model_naive(rules: &[IdRule], trues: &AtomSet, n: usize) -> bool {
    let reduct = reduct_within(rules, trues);
    let support: Vec<usize> = trues.iter().collect();
    let m = support.len();
    debug_assert!(m < usize::BITS as usize);
    // all proper subsets of the true set
    for mask in 0..((1usize << m) - 1) {
        let mut s = AtomSet::new(n);
        for (k, &atom) in support.iter().enumerate() {
            if mask & (1 << k) != 0 {
                s.insert(atom);
            }
        }
        let ok = reduct.iter().all(|(head, body)| {
            !body.iter().all(|&b| s.contains(b)) || head.iter().any(|&h| s.contains(h))
        });
        if ok {
            return true;
        }
    }
    false
}

/// Propagation search for the same question as
/// [`has_smaller_reduct_model_naive`]: assignments range over the true atoms
/// of the candidate (everything else stays false) and at least one of them
/// must become false.
fn has_smaller_reduct_model_search(rules: &[IdRule], trues: &AtomSet) -> bool {
    let support: Vec<usize> = trues.iter().collect();
    let m = support.len();
    if m == 0 {
        return false;
    }
    let rank: std::collections::HashMap<usize, usize> = support
        .iter()
        .enumerate()
        .map(|(k, &a)| (a, k))
        .collect();
    // clause representation: positive head literals, negated body literals
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    for (head, body) in reduct_within(rules, trues) {
        let mut cl: Vec<i32> = Vec::new();
        for h in head {
            cl.push(rank[&h] as i32 + 1);
        }
        for b in body {
            cl.push(-(rank[&b] as i32 + 1));
        }
        clauses.push(cl);
    }
    // require at least one atom false
    clauses.push((0..m).map(|k| -(k as i32 + 1)).collect());
    let mut dpll = Dpll::new(m, clauses);
    let mut found = false;
    dpll.enumerate(&mut |_| {
        found = true;
        ControlFlow::Break(())
    });
    found
}

/// Minimal DPLL-style model enumerator over clause sets.
struct Dpll {
    clauses: Vec<Vec<i32>>,
    assign: Vec<Option<bool>>,
}

impl Dpll {
    fn new(n: usize, clauses: Vec<Vec<i32>>) -> Self {
        Dpll {
            clauses,
            assign: vec![None; n],
        }
    }

    fn lit_value(&self, lit: i32) -> Option<bool> {
        let v = lit.unsigned_abs() as usize - 1;
        self.assign[v].map(|b| if lit > 0 { b } else { !b })
    }

    /// Unit propagation to fixpoint. Returns false on conflict. Assigned
    /// variables are pushed onto `trail`.
    fn propagate(&mut self, trail: &mut Vec<usize>) -> bool {
        loop {
            let mut changed = false;
            for ci in 0..self.clauses.len() {
                let mut unassigned: Option<i32> = None;
                let mut count = 0usize;
                let mut satisfied = false;
                for k in 0..self.clauses[ci].len() {
                    let lit = self.clauses[ci][k];
                    match self.lit_value(lit) {
                        Some(true) => {
                            satisfied = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            unassigned = Some(lit);
                            count += 1;
                        }
                    }
                }
                if satisfied {
                    continue;
                }
                match count {
                    0 => return false,
                    1 => {
                        let lit = unassigned.unwrap();
                        let v = lit.unsigned_abs() as usize - 1;
                        self.assign[v] = Some(lit > 0);
                        trail.push(v);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn enumerate(&mut self, visit: &mut impl FnMut(&[Option<bool>]) -> ControlFlow<()>) {
        let _ = self.rec(visit);
    }

    fn rec(&mut self, visit: &mut impl FnMut(&[Option<bool>]) -> ControlFlow<()>) -> ControlFlow<()> {
        let mut trail = Vec::new();
        if !self.propagate(&mut trail) {
            for v in trail {
                self.assign[v] = None;
            }
            return ControlFlow::Continue(());
        }
        let next = self.assign.iter().position(Option::is_none);
        let flow = match next {
            None => visit(&self.assign),
            Some(v) => {
                let mut flow = ControlFlow::Continue(());
                for val in [false, true] {
                    self.assign[v] = Some(val);
                    flow = self.rec(visit);
                    self.assign[v] = None;
                    if flow.is_break() {
                        break;
                    }
                }
                flow
            }
        };
        for v in trail {
            self.assign[v] = None;
        }
        flow
    }
}

/// Stream the answer sets of an ordinary program in deterministic order.
pub fn enumerate_answer_sets(
    program: &Program,
    engine: Engine,
    caps: SolveCaps,
    visit: &mut impl FnMut(&Interpretation) -> ControlFlow<()>,
) -> Result<()> {
    ensure_ordinary(program)?;
    program.ensure_ground("answer-set enumeration")?;
    let rules = compile(program);
    let n = program.universe().len();
    match engine {
        Engine::Exhaustive => {
            if n > caps.exhaustive_atoms {
                return Err(HexError::CapExceeded {
                    what: "exhaustive enumeration universe",
                    size: n,
                    cap: caps.exhaustive_atoms,
                });
            }
            for interp in all_interpretations(program.universe()) {
                if is_classical_model(&rules, interp.true_set())
                    && !has_smaller_reduct_model_naive(&rules, interp.true_set(), n)
                    && visit(&interp).is_break()
                {
                    break;
                }
            }
            Ok(())
        }
        Engine::Propagate => {
            let mut clauses: Vec<Vec<i32>> = Vec::new();
            for r in &rules {
                let mut cl = Vec::new();
                for &h in &r.head {
                    cl.push(h as i32 + 1);
                }
                for &b in &r.pos {
                    cl.push(-(b as i32 + 1));
                }
                for &b in &r.neg {
                    cl.push(b as i32 + 1);
                }
                clauses.push(cl);
            }
            let mut dpll = Dpll::new(n, clauses);
            let universe = program.universe().clone();
            dpll.enumerate(&mut |assign| {
                let mut trues = AtomSet::new(n);
                for (v, val) in assign.iter().enumerate() {
                    if *val == Some(true) {
                        trues.insert(v);
                    }
                }
                if has_smaller_reduct_model_search(&rules, &trues) {
                    return ControlFlow::Continue(());
                }
                let interp = Interpretation::from_true_set(universe.clone(), trues);
                visit(&interp)
            });
            Ok(())
        }
    }
}

pub fn answer_sets(program: &Program, engine: Engine, caps: SolveCaps) -> Result<Vec<Interpretation>> {
    let mut out = Vec::new();
    enumerate_answer_sets(program, engine, caps, &mut |i| {
        out.push(i.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// An answer set of the guessing program whose replacement-atom guesses
/// coincide with the oracle values.
#[derive(Clone, Debug)]
pub struct CompatibleSet {
    pub hat: Interpretation,
}

impl CompatibleSet {
    pub fn projected(&self, g: &GuessingProgram) -> Interpretation {
        g.project(&self.hat)
    }
}

/// Value-coincidence check: for every external occurrence class, the oracle
/// value under the projected interpretation equals the replacement-atom
/// guess.
pub fn check_compatible(
    g: &GuessingProgram,
    hat: &Interpretation,
    registry: &OracleRegistry,
) -> Result<bool> {
    let projected = g.project(hat);
    for c in g.classes() {
        let guessed = crate::oracle::TruthView::is_true(hat, &c.replacement);
        let actual = registry.evaluate(
            &c.name,
            &projected,
            &c.eref.inputs,
            &c.eref.output_constants(),
        )?;
        if guessed != actual {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Stream the compatible sets of a program: answer sets of the guessing
/// program filtered through [`check_compatible`].
pub fn enumerate_compatible_sets(
    g: &GuessingProgram,
    registry: &OracleRegistry,
    engine: Engine,
    caps: SolveCaps,
    visit: &mut impl FnMut(&CompatibleSet) -> ControlFlow<()>,
) -> Result<()> {
    let mut err = None;
    enumerate_answer_sets(g.program(), engine, caps, &mut |hat| {
        match check_compatible(g, hat, registry) {
            Ok(true) => visit(&CompatibleSet { hat: hat.clone() }),
            Ok(false) => ControlFlow::Continue(()),
            Err(e) => {
                err = Some(e);
                ControlFlow::Break(())
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn compatible_sets(
    g: &GuessingProgram,
    registry: &OracleRegistry,
    engine: Engine,
    caps: SolveCaps,
) -> Result<Vec<CompatibleSet>> {
    let mut out = Vec::new();
    enumerate_compatible_sets(g, registry, engine, caps, &mut |c| {
        out.push(c.clone());
        ControlFlow::Continue(())
    })?;
    Ok(out)
}
