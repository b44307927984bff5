//! Assignments, interpretations and rule satisfaction.
//!
//! An assignment is a consistent set of signed literals over ordinary atoms.
//! An interpretation is a complete assignment over a fixed atom universe and
//! is identified with its set of true atoms; atoms outside the universe are
//! false.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::bits::AtomSet;
use crate::error::Result;
use crate::oracle::{OracleRegistry, TruthView};
use crate::syntax::{BodyLiteral, Constant, OrdinaryAtom, Payload, Program, Universe};

/// A partial, consistent signed-literal set over a universe.
#[derive(Clone)]
pub struct Assignment {
    universe: Arc<Universe>,
    pos: AtomSet,
    neg: AtomSet,
}

impl Assignment {
    pub fn new(universe: Arc<Universe>) -> Self {
        let n = universe.len();
        Assignment {
            universe,
            pos: AtomSet::new(n),
            neg: AtomSet::new(n),
        }
    }

    pub fn from_literals<'a, I>(universe: Arc<Universe>, literals: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a OrdinaryAtom, bool)>,
    {
        let mut a = Assignment::new(universe);
        for (atom, sign) in literals {
            let id = a
                .universe
                .id(atom)
                .ok_or_else(|| crate::error::HexError::UnknownAtom(atom.to_string()))?;
            if sign {
                assert!(!a.neg.contains(id), "inconsistent literal T{atom}");
                a.pos.insert(id);
            } else {
                assert!(!a.pos.contains(id), "inconsistent literal F{atom}");
                a.neg.insert(id);
            }
        }
        Ok(a)
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn is_true(&self, atom: &OrdinaryAtom) -> bool {
        self.universe
            .id(atom)
            .map(|i| self.pos.contains(i))
            .unwrap_or(false)
    }

    pub fn is_false(&self, atom: &OrdinaryAtom) -> bool {
        self.universe
            .id(atom)
            .map(|i| self.neg.contains(i))
            .unwrap_or(false)
    }

    pub fn true_atoms(&self) -> impl Iterator<Item = &OrdinaryAtom> {
        self.pos.iter().map(|i| self.universe.atom(i))
    }

    pub fn false_atoms(&self) -> impl Iterator<Item = &OrdinaryAtom> {
        self.neg.iter().map(|i| self.universe.atom(i))
    }

    /// `A ∪̇¬ X`: force every atom of `X` false, leaving the rest unchanged.
    /// Consistency is preserved; atoms of `X` outside the universe are
    /// ignored (they cannot carry a true literal).
    pub fn override_false<'a, I: IntoIterator<Item = &'a OrdinaryAtom>>(&self, x: I) -> Assignment {
        let mut out = self.clone();
        for atom in x {
            if let Some(i) = self.universe.id(atom) {
                out.pos.remove(i);
                out.neg.insert(i);
            }
        }
        out
    }

    /// Extension of a predicate: argument tuples of its true atoms, sorted.
    pub fn extension(&self, predicate: &str) -> Vec<Vec<Constant>> {
        extension_from(&self.universe, &self.pos, predicate)
    }

    pub fn is_complete(&self) -> bool {
        self.pos.count() + self.neg.count() == self.universe.len()
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        write!(f, "{{")?;
        for a in self.true_atoms() {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "T{a}")?;
            first = false;
        }
        for a in self.false_atoms() {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "F{a}")?;
            first = false;
        }
        write!(f, "}}")
    }
}

fn extension_from(universe: &Universe, trues: &AtomSet, predicate: &str) -> Vec<Vec<Constant>> {
    let mut tuples: Vec<Vec<Constant>> = universe
        .atoms_of_predicate(predicate)
        .iter()
        .filter(|&&i| trues.contains(i))
        .map(|&i| {
            universe
                .atom(i)
                .args
                .iter()
                .map(|t| t.constant().expect("ground universe atom").clone())
                .collect()
        })
        .collect();
    tuples.sort();
    tuples
}

/// A complete assignment, identified with its true-atom set.
#[derive(Clone)]
pub struct Interpretation {
    universe: Arc<Universe>,
    trues: AtomSet,
}

impl PartialEq for Interpretation {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.universe, &other.universe)
            || self.universe.atoms() == other.universe.atoms())
            && self.trues == other.trues
    }
}

impl Eq for Interpretation {}

impl Interpretation {
    pub fn empty(universe: Arc<Universe>) -> Self {
        let n = universe.len();
        Interpretation {
            universe,
            trues: AtomSet::new(n),
        }
    }

    pub fn from_true_set(universe: Arc<Universe>, trues: AtomSet) -> Self {
        debug_assert_eq!(trues.capacity(), universe.len());
        Interpretation { universe, trues }
    }

    pub fn from_true_atoms<'a, I: IntoIterator<Item = &'a OrdinaryAtom>>(
        universe: Arc<Universe>,
        atoms: I,
    ) -> Result<Self> {
        let mut s = AtomSet::new(universe.len());
        for a in atoms {
            let id = universe
                .id(a)
                .ok_or_else(|| crate::error::HexError::UnknownAtom(a.to_string()))?;
            s.insert(id);
        }
        Ok(Interpretation {
            universe,
            trues: s,
        })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn true_set(&self) -> &AtomSet {
        &self.trues
    }

    pub fn is_true_id(&self, id: usize) -> bool {
        self.trues.contains(id)
    }

    pub fn true_count(&self) -> usize {
        self.trues.count()
    }

    pub fn true_atoms(&self) -> impl Iterator<Item = &OrdinaryAtom> {
        self.trues.iter().map(|i| self.universe.atom(i))
    }

    /// `A ∪̇¬ X` on a complete assignment: the result is again complete.
    pub fn override_false<'a, I: IntoIterator<Item = &'a OrdinaryAtom>>(
        &self,
        x: I,
    ) -> Interpretation {
        let mut trues = self.trues.clone();
        for atom in x {
            if let Some(i) = self.universe.id(atom) {
                trues.remove(i);
            }
        }
        Interpretation {
            universe: self.universe.clone(),
            trues,
        }
    }

    pub fn override_false_set(&self, x: &AtomSet) -> Interpretation {
        let mut trues = self.trues.clone();
        trues.subtract(x);
        Interpretation {
            universe: self.universe.clone(),
            trues,
        }
    }

    pub fn extension(&self, predicate: &str) -> Vec<Vec<Constant>> {
        extension_from(&self.universe, &self.trues, predicate)
    }

    /// Sorted display names of the true atoms.
    pub fn true_atom_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.true_atoms().map(|a| a.to_string()).collect();
        v.sort();
        v
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.true_atom_names().join(", "))
    }
}

impl fmt::Debug for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl TruthView for Interpretation {
    fn is_true(&self, atom: &OrdinaryAtom) -> bool {
        self.universe
            .id(atom)
            .map(|i| self.trues.contains(i))
            .unwrap_or(false)
    }

    fn true_atoms_of(&self, predicate: &str) -> Vec<OrdinaryAtom> {
        self.universe
            .atoms_of_predicate(predicate)
            .iter()
            .filter(|&&i| self.trues.contains(i))
            .map(|&i| self.universe.atom(i).clone())
            .collect()
    }
}

/// Zero-copy view of `A ∪̇¬ X` for oracle calls during unfounded-set checks.
pub struct OverrideView<'a> {
    pub base: &'a Interpretation,
    pub forced_false: &'a AtomSet,
}

impl TruthView for OverrideView<'_> {
    fn is_true(&self, atom: &OrdinaryAtom) -> bool {
        self.base
            .universe()
            .id(atom)
            .map(|i| self.base.true_set().contains(i) && !self.forced_false.contains(i))
            .unwrap_or(false)
    }

    fn true_atoms_of(&self, predicate: &str) -> Vec<OrdinaryAtom> {
        self.base
            .universe()
            .atoms_of_predicate(predicate)
            .iter()
            .filter(|&&i| self.base.true_set().contains(i) && !self.forced_false.contains(i))
            .map(|&i| self.base.universe().atom(i).clone())
            .collect()
    }
}

/// Truth of one body literal under a view. Ordinary atoms are looked up,
/// external payloads are delegated to the registry, naf inverts.
pub fn satisfies_view(
    view: &dyn TruthView,
    lit: &BodyLiteral,
    registry: &OracleRegistry,
) -> Result<bool> {
    let value = match &lit.payload {
        Payload::Ordinary(a) => view.is_true(a),
        Payload::External(e) => {
            registry.evaluate(&e.name, view, &e.inputs, &e.output_constants())?
        }
    };
    Ok(if lit.is_naf() { !value } else { value })
}

/// Truth of one body literal under a complete interpretation.
pub fn satisfies(
    interp: &Interpretation,
    lit: &BodyLiteral,
    registry: &OracleRegistry,
) -> Result<bool> {
    satisfies_view(interp, lit, registry)
}

/// Classical satisfaction: every rule whose body is true has a true head
/// atom; constraints require a false body.
pub fn is_model(program: &Program, interp: &Interpretation, registry: &OracleRegistry) -> Result<bool> {
    for rule in program.rules() {
        let mut body_true = true;
        for lit in &rule.body {
            if !satisfies(interp, lit, registry)? {
                body_true = false;
                break;
            }
        }
        if body_true && !rule.head.iter().any(|h| TruthView::is_true(interp, h)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All complete interpretations over a universe, in deterministic order:
/// ascending by the true-set read as a binary word with the first atom as the
/// most significant bit (false-first, lexicographic by atom rank).
pub fn all_interpretations(universe: &Arc<Universe>) -> impl Iterator<Item = Interpretation> + '_ {
    let n = universe.len();
    assert!(n < usize::BITS as usize, "universe too large to enumerate");
    (0usize..(1 << n)).map(move |mask| {
        let mut s = AtomSet::new(n);
        for i in 0..n {
            if mask & (1 << (n - 1 - i)) != 0 {
                s.insert(i);
            }
        }
        Interpretation::from_true_set(universe.clone(), s)
    })
}

/// Convenience: the set of true atoms as a sorted set, for tests.
pub fn atom_set_names(atoms: &BTreeSet<OrdinaryAtom>) -> Vec<String> {
    atoms.iter().map(|a| a.to_string()).collect()
}
