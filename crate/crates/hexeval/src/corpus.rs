//! Deterministic random ground programs for cross-validation suites.
//!
//! Instances stay deliberately tiny (0-ary atoms, a handful of rules, up to
//! two table oracles) so that exhaustive brute-force oracles remain cheap
//! while still covering disjunction, naf, constraints and nonmonotonic
//! external atoms with cyclic input dependencies.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::oracle::{InputKind, OracleRegistry, OracleSignature, TableEntry, TableOracle};
use crate::syntax::{
    BodyLiteral, ExternalAtomRef, InputTerm, OrdinaryAtom, Payload, Polarity, Program, Rule,
};

const ATOM_NAMES: [&str; 12] = [
    "a", "b", "c", "d", "e", "f", "g", "h", "u", "v", "w", "x",
];

/// One generated instance: the program plus a registry holding the builtins
/// and the generated table oracles.
pub struct CorpusInstance {
    pub program: Program,
    pub registry: OracleRegistry,
}

/// Deterministic in the seed.
pub fn random_instance(seed: u64) -> CorpusInstance {
    random_instance_bounded(seed, 8)
}

/// Like [`random_instance`] with a custom atom bound, for stress runs.
pub fn random_instance_bounded(seed: u64, max_atoms: usize) -> CorpusInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_atoms = rng.gen_range(2..=max_atoms.min(ATOM_NAMES.len()));
    let atoms: Vec<&str> = ATOM_NAMES[..n_atoms].to_vec();

    let mut registry = OracleRegistry::with_builtins();
    let n_oracles = rng.gen_range(0..=2usize);
    let mut oracle_inputs: Vec<(String, Vec<&str>)> = Vec::new();
    for oi in 0..n_oracles {
        let n_inputs = rng.gen_range(1..=2usize);
        let mut inputs: Vec<&str> = Vec::new();
        while inputs.len() < n_inputs {
            let cand = atoms[rng.gen_range(0..atoms.len())];
            if !inputs.contains(&cand) {
                inputs.push(cand);
            }
        }
        let n_entries = rng.gen_range(1..=3usize);
        let mut entries = Vec::new();
        for _ in 0..n_entries {
            let mut require = Vec::new();
            let mut forbid = Vec::new();
            for &p in &inputs {
                match rng.gen_range(0..3u8) {
                    0 => require.push(OrdinaryAtom::named(p)),
                    1 => forbid.push(OrdinaryAtom::named(p)),
                    _ => {}
                }
            }
            entries.push(TableEntry {
                require,
                forbid,
                outputs: vec![Vec::new()],
            });
        }
        let name = format!("t{oi}");
        registry
            .register(
                OracleSignature {
                    name: name.clone(),
                    input_kinds: vec![InputKind::Predicate; inputs.len()],
                    output_arity: 0,
                },
                Arc::new(TableOracle::new(name.clone(), entries)),
            )
            .expect("fresh oracle name");
        oracle_inputs.push((name, inputs));
    }

    let pick_atom = |rng: &mut ChaCha8Rng| OrdinaryAtom::named(atoms[rng.gen_range(0..atoms.len())]);
    let pick_polarity = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.3) {
            Polarity::Naf
        } else {
            Polarity::Positive
        }
    };

    let n_rules = rng.gen_range(1..=10usize);
    let mut rules = Vec::new();
    for _ in 0..n_rules {
        let head_size = match rng.gen_range(0..100u8) {
            0..=14 => 0,
            15..=74 => 1,
            _ => 2,
        };
        let mut head: BTreeSet<OrdinaryAtom> = BTreeSet::new();
        while head.len() < head_size {
            head.insert(pick_atom(&mut rng));
        }
        let min_body = usize::from(head.is_empty());
        let body_size = rng.gen_range(min_body..=3usize);
        let mut body = Vec::new();
        for _ in 0..body_size {
            let external = !oracle_inputs.is_empty() && rng.gen_bool(0.3);
            let payload = if external {
                let (name, inputs) = &oracle_inputs[rng.gen_range(0..oracle_inputs.len())];
                Payload::External(ExternalAtomRef {
                    name: Arc::from(name.as_str()),
                    inputs: inputs
                        .iter()
                        .map(|p| InputTerm::Predicate(Arc::from(*p)))
                        .collect(),
                    outputs: Vec::new(),
                })
            } else {
                Payload::Ordinary(pick_atom(&mut rng))
            };
            body.push(BodyLiteral {
                polarity: pick_polarity(&mut rng),
                payload,
            });
        }
        if head.is_empty() && body.is_empty() {
            continue;
        }
        rules.push(Rule::new(head.into_iter().collect(), body));
    }
    if rules.is_empty() {
        rules.push(Rule::fact(OrdinaryAtom::named(atoms[0])));
    }

    let program = Program::from_rules(rules).expect("generated rules are arity-consistent");
    CorpusInstance { program, registry }
}
