//! Ground HEX-program data model.
//!
//! A program is a set of rules `a1 | ... | ak :- b1, ..., bm, not c1, ..., not cn`
//! where body members are ordinary atoms or external atoms `&g[inputs](outputs)`.
//! External atom inputs are typed at bind time: each position is either a
//! predicate name (the source reads its extension) or a plain constant.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{HexError, Result};

macro_rules! fmt_debug_via_display {
    () => {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "{self}")
        }
    };
}

/// An interned constant token: lowercase identifier, quoted string or integer.
/// Two constants are equal exactly when their surface tokens are equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant(pub Arc<str>);

impl Constant {
    pub fn new(tok: impl AsRef<str>) -> Self {
        Constant(Arc::from(tok.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Argument term: a constant, or a variable prior to instantiation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Constant(Constant),
    Variable(Arc<str>),
}

impl Term {
    pub fn is_ground(&self) -> bool {
        matches!(self, Term::Constant(_))
    }

    pub fn constant(&self) -> Option<&Constant> {
        match self {
            Term::Constant(c) => Some(c),
            Term::Variable(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(c) => write!(f, "{c}"),
            Term::Variable(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// An ordinary atom `p(c1, ..., cl)`. `strong_neg` marks a classical-negation
/// prefix `-p(...)`; it must be compiled away (see
/// [`Program::rewrite_strong_negation`]) before evaluation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrdinaryAtom {
    pub strong_neg: bool,
    pub predicate: Arc<str>,
    pub args: Vec<Term>,
}

impl OrdinaryAtom {
    pub fn new(predicate: impl AsRef<str>, args: Vec<Term>) -> Self {
        OrdinaryAtom {
            strong_neg: false,
            predicate: Arc::from(predicate.as_ref()),
            args,
        }
    }

    /// 0-ary atom from a bare name.
    pub fn named(predicate: impl AsRef<str>) -> Self {
        OrdinaryAtom::new(predicate, Vec::new())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl fmt::Display for OrdinaryAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.strong_neg {
            write!(f, "-")?;
        }
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for OrdinaryAtom {
    fmt_debug_via_display!();
}

/// One bound input position of an external atom.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputTerm {
    /// The external source reads the extension of this predicate.
    Predicate(Arc<str>),
    /// A plain constant passed through to the source.
    Constant(Constant),
    /// A variable in a constant-kind position; eliminated by instantiation.
    Variable(Arc<str>),
}

impl InputTerm {
    pub fn token(&self) -> &str {
        match self {
            InputTerm::Predicate(p) => p,
            InputTerm::Constant(c) => c.as_str(),
            InputTerm::Variable(v) => v,
        }
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, InputTerm::Variable(_))
    }
}

impl fmt::Display for InputTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

impl fmt::Debug for InputTerm {
    fmt_debug_via_display!();
}

/// External atom `&g[p1,...,pk](c1,...,cl)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExternalAtomRef {
    pub name: Arc<str>,
    pub inputs: Vec<InputTerm>,
    pub outputs: Vec<Term>,
}

impl ExternalAtomRef {
    pub fn is_ground(&self) -> bool {
        self.outputs.iter().all(Term::is_ground) && self.inputs.iter().all(InputTerm::is_ground)
    }

    /// Ground output tuple; only valid on ground refs.
    pub fn output_constants(&self) -> Vec<Constant> {
        self.outputs
            .iter()
            .map(|t| t.constant().expect("ground external atom").clone())
            .collect()
    }
}

impl fmt::Display for ExternalAtomRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "&{}[", self.name)?;
        for (i, t) in self.inputs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "](")?;
        for (i, t) in self.outputs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for ExternalAtomRef {
    fmt_debug_via_display!();
}

/// Body literal payload.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    Ordinary(OrdinaryAtom),
    External(ExternalAtomRef),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Polarity {
    Positive,
    Naf,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BodyLiteral {
    pub polarity: Polarity,
    pub payload: Payload,
}

impl BodyLiteral {
    pub fn positive(payload: Payload) -> Self {
        BodyLiteral {
            polarity: Polarity::Positive,
            payload,
        }
    }

    pub fn naf(payload: Payload) -> Self {
        BodyLiteral {
            polarity: Polarity::Naf,
            payload,
        }
    }

    pub fn is_naf(&self) -> bool {
        self.polarity == Polarity::Naf
    }

    pub fn ordinary(&self) -> Option<&OrdinaryAtom> {
        match &self.payload {
            Payload::Ordinary(a) => Some(a),
            Payload::External(_) => None,
        }
    }

    pub fn external(&self) -> Option<&ExternalAtomRef> {
        match &self.payload {
            Payload::External(e) => Some(e),
            Payload::Ordinary(_) => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match &self.payload {
            Payload::Ordinary(a) => a.is_ground(),
            Payload::External(e) => e.is_ground(),
        }
    }
}

impl fmt::Display for BodyLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_naf() {
            write!(f, "not ")?;
        }
        match &self.payload {
            Payload::Ordinary(a) => write!(f, "{a}"),
            Payload::External(e) => write!(f, "{e}"),
        }
    }
}

impl fmt::Debug for BodyLiteral {
    fmt_debug_via_display!();
}

/// A rule. The head is kept sorted and duplicate-free; an empty head is a
/// constraint. Source rules satisfy `|head| + |body| > 0` (enforced by the
/// parser); reducts may degenerate further.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Vec<OrdinaryAtom>,
    pub body: Vec<BodyLiteral>,
}

impl Rule {
    pub fn new(mut head: Vec<OrdinaryAtom>, body: Vec<BodyLiteral>) -> Self {
        head.sort();
        head.dedup();
        Rule { head, body }
    }

    pub fn fact(atom: OrdinaryAtom) -> Self {
        Rule::new(vec![atom], Vec::new())
    }

    pub fn constraint(body: Vec<BodyLiteral>) -> Self {
        Rule::new(Vec::new(), body)
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_empty()
    }

    pub fn is_ground(&self) -> bool {
        self.head.iter().all(OrdinaryAtom::is_ground) && self.body.iter().all(BodyLiteral::is_ground)
    }

    /// Positive ordinary body atoms.
    pub fn positive_body_atoms(&self) -> impl Iterator<Item = &OrdinaryAtom> {
        self.body
            .iter()
            .filter(|l| !l.is_naf())
            .filter_map(BodyLiteral::ordinary)
    }

    /// Naf-negated ordinary body atoms.
    pub fn negative_body_atoms(&self) -> impl Iterator<Item = &OrdinaryAtom> {
        self.body
            .iter()
            .filter(|l| l.is_naf())
            .filter_map(BodyLiteral::ordinary)
    }

    /// External body literals with their polarity.
    pub fn external_literals(&self) -> impl Iterator<Item = &BodyLiteral> {
        self.body.iter().filter(|l| l.external().is_some())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{h}")?;
        }
        if !self.body.is_empty() {
            if !self.head.is_empty() {
                write!(f, " ")?;
            }
            write!(f, ":- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        write!(f, ".")
    }
}

impl fmt::Debug for Rule {
    fmt_debug_via_display!();
}

/// The ground-atom universe of a program: every ordinary atom occurring in a
/// head or ordinary body literal, in sorted order. Atom ids are ranks in that
/// order, so id order is the deterministic enumeration order used everywhere.
pub struct Universe {
    atoms: Vec<OrdinaryAtom>,
    index: HashMap<OrdinaryAtom, usize>,
    by_pred: BTreeMap<Arc<str>, Vec<usize>>,
}

impl Universe {
    fn from_atoms(set: BTreeSet<OrdinaryAtom>) -> Self {
        let atoms: Vec<OrdinaryAtom> = set.into_iter().collect();
        let index = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut by_pred: BTreeMap<Arc<str>, Vec<usize>> = BTreeMap::new();
        for (i, a) in atoms.iter().enumerate() {
            by_pred.entry(a.predicate.clone()).or_default().push(i);
        }
        Universe {
            atoms,
            index,
            by_pred,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom(&self, id: usize) -> &OrdinaryAtom {
        &self.atoms[id]
    }

    pub fn atoms(&self) -> &[OrdinaryAtom] {
        &self.atoms
    }

    pub fn id(&self, atom: &OrdinaryAtom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    pub fn atoms_of_predicate(&self, pred: &str) -> &[usize] {
        self.by_pred.get(pred).map(Vec::as_slice).unwrap_or(&[])
    }
}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.atoms.iter()).finish()
    }
}

/// A program: deduplicated rules plus derived caches (atom universe,
/// constant universe, predicate arity table).
#[derive(Clone)]
pub struct Program {
    rules: Vec<Rule>,
    universe: Arc<Universe>,
    constants: Vec<Constant>,
    pred_arity: BTreeMap<Arc<str>, usize>,
    ground: bool,
}

impl Program {
    /// Build a program from rules: deduplicates syntactically identical rules
    /// (after head normalization), checks predicate arity consistency, and
    /// derives the atom and constant universes.
    pub fn from_rules(rules: Vec<Rule>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut deduped = Vec::new();
        for r in rules {
            let r = Rule::new(r.head, r.body);
            if seen.insert(r.clone()) {
                deduped.push(r);
            }
        }

        let mut pred_arity: BTreeMap<Arc<str>, usize> = BTreeMap::new();
        let mut note = |atom: &OrdinaryAtom| -> Result<()> {
            match pred_arity.get(&atom.predicate) {
                Some(&n) if n != atom.arity() => Err(HexError::ArityMismatch {
                    predicate: atom.predicate.to_string(),
                    expected: n,
                    found: atom.arity(),
                }),
                Some(_) => Ok(()),
                None => {
                    pred_arity.insert(atom.predicate.clone(), atom.arity());
                    Ok(())
                }
            }
        };

        let mut atom_set = BTreeSet::new();
        let mut const_set = BTreeSet::new();
        let mut ground = true;
        for r in &deduped {
            for h in &r.head {
                note(h)?;
                if h.is_ground() {
                    atom_set.insert(h.clone());
                } else {
                    ground = false;
                }
                for t in &h.args {
                    match t {
                        Term::Constant(c) => {
                            const_set.insert(c.clone());
                        }
                        Term::Variable(_) => ground = false,
                    }
                }
            }
            for l in &r.body {
                match &l.payload {
                    Payload::Ordinary(a) => {
                        note(a)?;
                        if a.is_ground() {
                            atom_set.insert(a.clone());
                        } else {
                            ground = false;
                        }
                        for t in &a.args {
                            match t {
                                Term::Constant(c) => {
                                    const_set.insert(c.clone());
                                }
                                Term::Variable(_) => ground = false,
                            }
                        }
                    }
                    Payload::External(e) => {
                        for inp in &e.inputs {
                            match inp {
                                InputTerm::Constant(c) => {
                                    const_set.insert(c.clone());
                                }
                                InputTerm::Variable(_) => ground = false,
                                InputTerm::Predicate(_) => {}
                            }
                        }
                        for t in &e.outputs {
                            match t {
                                Term::Constant(c) => {
                                    const_set.insert(c.clone());
                                }
                                Term::Variable(_) => ground = false,
                            }
                        }
                    }
                }
            }
        }

        Ok(Program {
            rules: deduped,
            universe: Arc::new(Universe::from_atoms(atom_set)),
            constants: const_set.into_iter().collect(),
            pred_arity,
            ground,
        })
    }

    pub fn empty() -> Self {
        Program::from_rules(Vec::new()).expect("empty program")
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn atom_id(&self, atom: &OrdinaryAtom) -> Option<usize> {
        self.universe.id(atom)
    }

    /// Constant universe in sorted order.
    pub fn constants(&self) -> &[Constant] {
        &self.constants
    }

    pub fn predicate_arity(&self, pred: &str) -> Option<usize> {
        self.pred_arity.get(pred).copied()
    }

    pub fn is_ground(&self) -> bool {
        self.ground
    }

    pub fn ensure_ground(&self, ctx: &str) -> Result<()> {
        if self.ground {
            Ok(())
        } else {
            Err(HexError::NotGround(ctx.to_string()))
        }
    }

    /// Replace every classically negated atom `-p(t...)` by a fresh atom
    /// `neg_p(t...)` and add, once per distinct negated atom, the exclusion
    /// constraint `:- p(t...), neg_p(t...)`.
    pub fn rewrite_strong_negation(&self) -> Result<Program> {
        let mut negated: BTreeSet<(Arc<str>, Vec<Term>)> = BTreeSet::new();
        let mut collect = |a: &OrdinaryAtom| {
            if a.strong_neg {
                negated.insert((a.predicate.clone(), canonical_args(&a.args)));
            }
        };
        for r in &self.rules {
            r.head.iter().for_each(&mut collect);
            for l in &r.body {
                if let Payload::Ordinary(a) = &l.payload {
                    collect(a);
                }
            }
        }
        if negated.is_empty() {
            return Ok(self.clone());
        }

        // Fresh predicate names must not clash with anything already present.
        for (pred, _) in &negated {
            let fresh: Arc<str> = Arc::from(format!("neg_{pred}").as_str());
            if self.pred_arity.contains_key(&fresh) {
                return Err(HexError::RewriteCollision(fresh.to_string()));
            }
        }

        let flip = |a: &OrdinaryAtom| -> OrdinaryAtom {
            if a.strong_neg {
                OrdinaryAtom {
                    strong_neg: false,
                    predicate: Arc::from(format!("neg_{}", a.predicate).as_str()),
                    args: a.args.clone(),
                }
            } else {
                a.clone()
            }
        };

        let mut rules: Vec<Rule> = self
            .rules
            .iter()
            .map(|r| {
                Rule::new(
                    r.head.iter().map(flip).collect(),
                    r.body
                        .iter()
                        .map(|l| BodyLiteral {
                            polarity: l.polarity,
                            payload: match &l.payload {
                                Payload::Ordinary(a) => Payload::Ordinary(flip(a)),
                                Payload::External(e) => Payload::External(e.clone()),
                            },
                        })
                        .collect(),
                )
            })
            .collect();

        for (pred, args) in negated {
            let pos = OrdinaryAtom {
                strong_neg: false,
                predicate: pred.clone(),
                args: args.clone(),
            };
            let neg = OrdinaryAtom {
                strong_neg: false,
                predicate: Arc::from(format!("neg_{pred}").as_str()),
                args,
            };
            rules.push(Rule::constraint(vec![
                BodyLiteral::positive(Payload::Ordinary(pos)),
                BodyLiteral::positive(Payload::Ordinary(neg)),
            ]));
        }
        Program::from_rules(rules)
    }

    /// Ground all rules over the given constant universe. Desk-scale safety:
    /// every variable of a rule must occur in a positive ordinary body atom.
    pub fn instantiate(&self, universe: &[Constant]) -> Result<Program> {
        if self.ground {
            return Ok(self.clone());
        }
        let mut out = Vec::new();
        for r in &self.rules {
            let vars = rule_variables(r);
            if vars.is_empty() {
                out.push(r.clone());
                continue;
            }
            let mut safe: BTreeSet<Arc<str>> = BTreeSet::new();
            for a in r.positive_body_atoms() {
                for t in &a.args {
                    if let Term::Variable(v) = t {
                        safe.insert(v.clone());
                    }
                }
            }
            for v in &vars {
                if !safe.contains(v) {
                    return Err(HexError::UnsafeVariable {
                        rule: r.to_string(),
                        variable: v.to_string(),
                    });
                }
            }
            let vars: Vec<Arc<str>> = vars.into_iter().collect();
            let mut binding: HashMap<Arc<str>, Constant> = HashMap::new();
            ground_rec(r, &vars, 0, universe, &mut binding, &mut out);
        }
        Program::from_rules(out)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Program {
    fmt_debug_via_display!();
}

fn canonical_args(args: &[Term]) -> Vec<Term> {
    let mut map: HashMap<Arc<str>, usize> = HashMap::new();
    args.iter()
        .map(|t| match t {
            Term::Constant(c) => Term::Constant(c.clone()),
            Term::Variable(v) => {
                let n = map.len();
                let k = *map.entry(v.clone()).or_insert(n);
                Term::Variable(Arc::from(format!("V{k}").as_str()))
            }
        })
        .collect()
}

fn collect_term_vars(ts: &[Term], vars: &mut BTreeSet<Arc<str>>) {
    for t in ts {
        if let Term::Variable(v) = t {
            vars.insert(v.clone());
        }
    }
}

fn rule_variables(r: &Rule) -> BTreeSet<Arc<str>> {
    let mut vars = BTreeSet::new();
    for h in &r.head {
        collect_term_vars(&h.args, &mut vars);
    }
    for l in &r.body {
        match &l.payload {
            Payload::Ordinary(a) => collect_term_vars(&a.args, &mut vars),
            Payload::External(e) => {
                collect_term_vars(&e.outputs, &mut vars);
                for inp in &e.inputs {
                    if let InputTerm::Variable(v) = inp {
                        vars.insert(v.clone());
                    }
                }
            }
        }
    }
    vars
}

fn ground_rec(
    r: &Rule,
    vars: &[Arc<str>],
    i: usize,
    universe: &[Constant],
    binding: &mut HashMap<Arc<str>, Constant>,
    out: &mut Vec<Rule>,
) {
    if i == vars.len() {
        out.push(substitute_rule(r, binding));
        return;
    }
    for c in universe {
        binding.insert(vars[i].clone(), c.clone());
        ground_rec(r, vars, i + 1, universe, binding, out);
    }
    binding.remove(&vars[i]);
}

fn substitute_rule(r: &Rule, binding: &HashMap<Arc<str>, Constant>) -> Rule {
    let subst_terms = |ts: &[Term]| -> Vec<Term> {
        ts.iter()
            .map(|t| match t {
                Term::Constant(c) => Term::Constant(c.clone()),
                Term::Variable(v) => Term::Constant(binding[v].clone()),
            })
            .collect()
    };
    Rule::new(
        r.head
            .iter()
            .map(|h| OrdinaryAtom {
                strong_neg: h.strong_neg,
                predicate: h.predicate.clone(),
                args: subst_terms(&h.args),
            })
            .collect(),
        r.body
            .iter()
            .map(|l| BodyLiteral {
                polarity: l.polarity,
                payload: match &l.payload {
                    Payload::Ordinary(a) => Payload::Ordinary(OrdinaryAtom {
                        strong_neg: a.strong_neg,
                        predicate: a.predicate.clone(),
                        args: subst_terms(&a.args),
                    }),
                    Payload::External(e) => Payload::External(ExternalAtomRef {
                        name: e.name.clone(),
                        inputs: e
                            .inputs
                            .iter()
                            .map(|i| match i {
                                InputTerm::Variable(v) => InputTerm::Constant(binding[v].clone()),
                                other => other.clone(),
                            })
                            .collect(),
                        outputs: subst_terms(&e.outputs),
                    }),
                },
            })
            .collect(),
    )
}
