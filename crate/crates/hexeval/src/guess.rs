//! Guessing-program transformation.
//!
//! Every external atom occurrence class `&g[inputs](outputs)` is replaced by
//! an ordinary replacement atom `__e_g_...(outputs)` with companion
//! `__ne_g_...(outputs)`, and one guess rule `e | ne.` is added per class.
//! The reserved `__e_` / `__ne_` prefixes may not occur in source programs;
//! collisions are hard errors so output stays reproducible.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{HexError, Result};
use crate::interp::Interpretation;
use crate::oracle::OracleRegistry;
use crate::syntax::{
    BodyLiteral, Constant, ExternalAtomRef, OrdinaryAtom, Payload, Program, Rule, Term,
};

pub const E_PREFIX: &str = "__e_";
pub const NE_PREFIX: &str = "__ne_";

/// One external-atom occurrence class and its replacement atoms.
#[derive(Clone, Debug)]
pub struct ExternalClass {
    pub name: Arc<str>,
    pub eref: ExternalAtomRef,
    pub replacement: OrdinaryAtom,
    pub companion: OrdinaryAtom,
}

/// An ordinary program together with the bijection between external atom
/// occurrence classes and their replacement atoms.
pub struct GuessingProgram {
    source: Program,
    guessing: Program,
    classes: Vec<ExternalClass>,
}

fn sanitize(tok: &str) -> String {
    tok.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn class_stem(eref: &ExternalAtomRef) -> String {
    let mut stem = sanitize(&eref.name);
    for i in &eref.inputs {
        stem.push('_');
        stem.push_str(&sanitize(i.token()));
    }
    stem
}

impl GuessingProgram {
    pub fn build(program: &Program) -> Result<GuessingProgram> {
        program.ensure_ground("guessing-program construction")?;

        for atom in program.universe().atoms() {
            if atom.predicate.starts_with(E_PREFIX) || atom.predicate.starts_with(NE_PREFIX) {
                return Err(HexError::ReservedCollision(atom.predicate.to_string()));
            }
        }

        // Collect occurrence classes in deterministic order.
        let mut classes: BTreeMap<ExternalAtomRef, ExternalClass> = BTreeMap::new();
        for rule in program.rules() {
            for lit in rule.external_literals() {
                let eref = lit.external().unwrap();
                if classes.contains_key(eref) {
                    continue;
                }
                let stem = class_stem(eref);
                let args: Vec<Term> = eref.outputs.clone();
                let replacement = OrdinaryAtom::new(format!("{E_PREFIX}{stem}"), args.clone());
                let companion = OrdinaryAtom::new(format!("{NE_PREFIX}{stem}"), args);
                classes.insert(
                    eref.clone(),
                    ExternalClass {
                        name: eref.name.clone(),
                        eref: eref.clone(),
                        replacement,
                        companion,
                    },
                );
            }
        }

        // Distinct classes must flatten to distinct replacement atoms.
        {
            let mut seen = BTreeMap::new();
            for c in classes.values() {
                if let Some(other) = seen.insert(c.replacement.clone(), c.eref.clone()) {
                    if other != c.eref {
                        return Err(HexError::ReservedCollision(format!(
                            "replacement atom '{}' stands for both '{}' and '{}'",
                            c.replacement, other, c.eref
                        )));
                    }
                }
            }
        }

        let mut rules: Vec<Rule> = program
            .rules()
            .iter()
            .map(|r| {
                Rule::new(
                    r.head.clone(),
                    r.body
                        .iter()
                        .map(|lit| match &lit.payload {
                            Payload::Ordinary(_) => lit.clone(),
                            Payload::External(e) => BodyLiteral {
                                polarity: lit.polarity,
                                payload: Payload::Ordinary(classes[e].replacement.clone()),
                            },
                        })
                        .collect(),
                )
            })
            .collect();
        for c in classes.values() {
            rules.push(Rule::new(
                vec![c.replacement.clone(), c.companion.clone()],
                Vec::new(),
            ));
        }

        Ok(GuessingProgram {
            source: program.clone(),
            guessing: Program::from_rules(rules)?,
            classes: classes.into_values().collect(),
        })
    }

    pub fn source(&self) -> &Program {
        &self.source
    }

    /// The ordinary guessing program.
    pub fn program(&self) -> &Program {
        &self.guessing
    }

    pub fn classes(&self) -> &[ExternalClass] {
        &self.classes
    }

    /// Project an interpretation over the guessing program onto the source
    /// atom universe, dropping replacement and companion atoms.
    pub fn project(&self, hat: &Interpretation) -> Interpretation {
        let trues: Vec<&OrdinaryAtom> = hat
            .true_atoms()
            .filter(|a| self.source.atom_id(a).is_some())
            .collect();
        Interpretation::from_true_atoms(self.source.universe().clone(), trues)
            .expect("projection stays inside the source universe")
    }

    /// Lift an interpretation of the source program to the guessing-program
    /// universe, guessing each replacement atom exactly as the oracle values
    /// it. The result satisfies the value-coincidence half of compatibility
    /// by construction.
    pub fn oracle_extension(
        &self,
        interp: &Interpretation,
        registry: &OracleRegistry,
    ) -> Result<Interpretation> {
        let mut trues: Vec<OrdinaryAtom> = interp.true_atoms().cloned().collect();
        for c in &self.classes {
            let out: Vec<Constant> = c.eref.output_constants();
            if registry.evaluate(&c.name, interp, &c.eref.inputs, &out)? {
                trues.push(c.replacement.clone());
            } else {
                trues.push(c.companion.clone());
            }
        }
        Interpretation::from_true_atoms(self.guessing.universe().clone(), trues.iter())
    }
}
