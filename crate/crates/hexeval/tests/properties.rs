//! Invariant and property tests beyond the acceptance criteria: round-trips,
//! satisfaction cross-checks, compatibility inclusions, oracle contracts,
//! analysis invariants and the search-restriction equivalences.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use proptest::prelude::*;

use hexeval::bits::AtomSet;
use hexeval::corpus::{random_instance, CorpusInstance};
use hexeval::depgraph::{analyze, predicate_precheck, ComponentPartition, DependencyGraph};
use hexeval::guess::GuessingProgram;
use hexeval::interp::{all_interpretations, is_model, satisfies, Interpretation};
use hexeval::oracle::{OracleRegistry, TruthView};
use hexeval::parser::{parse_atom, parse_program};
use hexeval::pipeline::{evaluate, EvaluationOptions, Mode};
use hexeval::solve::{answer_sets, enumerate_compatible_sets, Engine, SolveCaps};
use hexeval::syntax::{Constant, OrdinaryAtom, Program};
use hexeval::ufs::{find_unfounded_set, is_flp_answer_set, is_unfounded_set, UfsQuery};

fn registry() -> OracleRegistry {
    OracleRegistry::with_builtins()
}

fn interp_from_mask(program: &Program, mask: u64) -> Interpretation {
    let n = program.universe().len();
    let mut s = AtomSet::new(n);
    for b in 0..n {
        if mask & (1 << b) != 0 {
            s.insert(b);
        }
    }
    Interpretation::from_true_set(program.universe().clone(), s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_print_round_trip(seed in 0u64..100_000) {
        let CorpusInstance { program, registry } = random_instance(seed);
        let printed = program.to_string();
        let reparsed = parse_program(&printed, &registry).unwrap();
        prop_assert_eq!(&printed, &reparsed.to_string());
        prop_assert_eq!(program.rules(), reparsed.rules());
    }

    #[test]
    fn override_false_equals_its_true_restriction(seed in 0u64..100_000, mask: u64, xmask: u64) {
        let CorpusInstance { program, .. } = random_instance(seed);
        let interp = interp_from_mask(&program, mask);
        let n = program.universe().len();
        let x: Vec<OrdinaryAtom> = (0..n)
            .filter(|b| xmask & (1 << b) != 0)
            .map(|b| program.universe().atom(b).clone())
            .collect();
        let direct = interp.override_false(x.iter());
        let restricted: Vec<&OrdinaryAtom> = x
            .iter()
            .filter(|a| TruthView::is_true(&interp, a))
            .collect();
        let via_restriction = interp.override_false(restricted.into_iter());
        prop_assert_eq!(&direct, &via_restriction);
        // consistency: an atom is never both true and false
        for atom in program.universe().atoms() {
            let t = TruthView::is_true(&direct, atom);
            prop_assert!(!(t && x.contains(atom) && TruthView::is_true(&interp, atom)));
        }
    }

    #[test]
    fn model_check_agrees_with_literal_by_literal_evaluation(seed in 0u64..100_000, mask: u64) {
        let CorpusInstance { program, registry } = random_instance(seed);
        let interp = interp_from_mask(&program, mask);
        // independent evaluator: fold literal truth values rule by rule
        let mut expected = true;
        for rule in program.rules() {
            let mut body = true;
            for lit in &rule.body {
                body &= satisfies(&interp, lit, &registry).unwrap();
            }
            let head = rule.head.iter().any(|h| {
                interp.true_atoms().any(|a| a == h)
            });
            if body && !head {
                expected = false;
            }
        }
        prop_assert_eq!(is_model(&program, &interp, &registry).unwrap(), expected);
    }
}

#[test]
fn every_flp_answer_set_extends_to_a_compatible_set() {
    for seed in 0..200u64 {
        let CorpusInstance { program, registry } = random_instance(seed);
        let guessing = GuessingProgram::build(&program).unwrap();
        let mut projections: BTreeSet<Vec<String>> = BTreeSet::new();
        enumerate_compatible_sets(
            &guessing,
            &registry,
            Engine::Propagate,
            SolveCaps::default(),
            &mut |cs| {
                projections.insert(cs.projected(&guessing).true_atom_names());
                ControlFlow::Continue(())
            },
        )
        .unwrap();
        for interp in all_interpretations(program.universe()) {
            if is_flp_answer_set(&program, &interp, &registry, 24).unwrap() {
                assert!(
                    projections.contains(&interp.true_atom_names()),
                    "answer set without compatible extension: seed={seed} A={interp}"
                );
            }
        }
    }

    // the converse inclusion is strict: the id-loop program has a compatible
    // set whose projection is not an answer set
    let reg = registry();
    let p = parse_program("p :- &id[p]().", &reg).unwrap();
    let report = evaluate(
        &p,
        &reg,
        &EvaluationOptions {
            engine: Engine::Exhaustive,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(report.compatible_sets, 2);
    assert_eq!(report.answer_sets, 1);
}

#[test]
fn oracle_input_locality_for_builtins() {
    let reg = registry();
    let p = parse_program("s1(a). s1(b). s2(a). junk.", &reg).unwrap();
    let junk = parse_atom("junk").unwrap();
    for mask in 0..16u64 {
        let with_junk = interp_from_mask(&p, mask | 8);
        let without: Vec<&OrdinaryAtom> = p
            .universe()
            .atoms()
            .iter()
            .filter(|a| TruthView::is_true(&with_junk, a) && **a != junk)
            .collect();
        let restricted =
            Interpretation::from_true_atoms(p.universe().clone(), without).unwrap();
        for tok in ["a", "b"] {
            let out = [Constant::new(tok)];
            let inputs = [
                hexeval::syntax::InputTerm::Predicate("s1".into()),
                hexeval::syntax::InputTerm::Predicate("s2".into()),
            ];
            assert_eq!(
                reg.evaluate("diff", &with_junk, &inputs, &out).unwrap(),
                reg.evaluate("diff", &restricted, &inputs, &out).unwrap()
            );
        }
    }
}

#[test]
fn external_extension_matches_pointwise_evaluation() {
    for seed in 0..60u64 {
        let CorpusInstance { program, registry } = random_instance(seed);
        let universe = program.constants().to_vec();
        for interp in all_interpretations(program.universe()).take(8) {
            for rule in program.rules() {
                for lit in rule.external_literals() {
                    let eref = lit.external().unwrap();
                    let ext = registry
                        .external_extension(&eref.name, &interp, &eref.inputs, &universe)
                        .unwrap();
                    let arity = eref.outputs.len();
                    // pointwise: 0-ary corpus oracles have the single tuple ()
                    assert!(arity == 0);
                    let direct = registry
                        .evaluate(&eref.name, &interp, &eref.inputs, &[])
                        .unwrap();
                    assert_eq!(direct, ext.contains(&Vec::new()));
                }
            }
        }
    }
}

#[test]
fn guessing_answer_sets_pick_exactly_one_of_each_pair() {
    for seed in 0..100u64 {
        let CorpusInstance { program, .. } = random_instance(seed);
        let guessing = GuessingProgram::build(&program).unwrap();
        for set in answer_sets(guessing.program(), Engine::Propagate, SolveCaps::default())
            .unwrap()
        {
            for class in guessing.classes() {
                let e = TruthView::is_true(&set, &class.replacement);
                let ne = TruthView::is_true(&set, &class.companion);
                assert!(e ^ ne, "seed={seed} set={set}");
            }
        }
    }
}

#[test]
fn component_dag_is_acyclic_and_partition_exact() {
    for seed in 0..200u64 {
        let CorpusInstance { program, .. } = random_instance(seed);
        let graph = DependencyGraph::build(&program).unwrap();
        let partition = ComponentPartition::build(&program, &graph).unwrap();
        assert!(partition.dag_is_acyclic(), "seed={seed}");
        // exact partition of the universe
        let mut seen = AtomSet::new(program.universe().len());
        let mut total = 0usize;
        for c in &partition.components {
            total += c.atoms.count();
            seen.union_with(&c.atoms);
        }
        assert_eq!(total, program.universe().len());
        assert_eq!(seen.count(), program.universe().len());
    }
}

#[test]
fn predicate_precheck_is_conservative() {
    for seed in 0..300u64 {
        let CorpusInstance { program, .. } = random_instance(seed);
        let graph = DependencyGraph::build(&program).unwrap();
        if graph.has_e_cycle(None) {
            assert!(
                predicate_precheck(&program).unwrap(),
                "atom-level e-cycle without predicate-level e-cycle: seed={seed}"
            );
        }
    }
}

#[test]
fn e_cycle_exists_iff_cyclic_input_atoms_nonempty() {
    for seed in 0..300u64 {
        let CorpusInstance { program, .. } = random_instance(seed);
        let graph = DependencyGraph::build(&program).unwrap();
        assert_eq!(
            graph.has_e_cycle(None),
            !graph.cyclic_input_atoms().is_empty(),
            "seed={seed}"
        );
    }
}

#[test]
fn criterion_false_programs_skip_all_searches_soundly() {
    let mut skipped_programs = 0;
    for seed in 0..400u64 {
        let CorpusInstance { program, registry } = random_instance(seed);
        let report = analyze(&program).unwrap();
        if report.needs_ufs_check() {
            continue;
        }
        skipped_programs += 1;
        let full = evaluate(
            &program,
            &registry,
            &EvaluationOptions {
                engine: Engine::Propagate,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(full.ufs_searches_run, 0, "seed={seed}");
        let brute = evaluate(
            &program,
            &registry,
            &EvaluationOptions {
                mode: Mode::Brute,
                engine: Engine::Propagate,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            full.answer_set_family(),
            brute.answer_set_family(),
            "skip was unsound on seed {seed}"
        );
    }
    assert!(skipped_programs >= 50, "corpus lacks e-cycle-free programs");
}

#[test]
fn ca_restriction_preserves_existence_and_results() {
    for seed in 0..300u64 {
        let CorpusInstance { program, registry } = random_instance(seed);
        let base = EvaluationOptions {
            engine: Engine::Propagate,
            ..Default::default()
        };
        let with = evaluate(&program, &registry, &base).unwrap();
        let without = evaluate(
            &program,
            &registry,
            &EvaluationOptions {
                ca_restriction: false,
                ..base
            },
        )
        .unwrap();
        assert_eq!(with.answer_set_family(), without.answer_set_family());
        assert_eq!(with.rejected_by_ufs, without.rejected_by_ufs);
    }
}

/// Every nonempty unfounded set within the true atoms that avoids all cyclic
/// input atoms is already visible on the guessing program.
#[test]
fn cyclic_input_avoiding_sets_are_detected_on_guessing_program() {
    let mut count = 0;
    for seed in 0..600u64 {
        let CorpusInstance { program, registry } = random_instance(seed);
        let graph = DependencyGraph::build(&program).unwrap();
        let ca = graph.cyclic_input_atoms();
        let guessing = GuessingProgram::build(&program).unwrap();
        let n = program.universe().len();
        for interp in all_interpretations(program.universe()).take(12) {
            let hat = guessing.oracle_extension(&interp, &registry).unwrap();
            for mask in 1usize..(1 << n) {
                let ids: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
                if ids.iter().any(|&i| ca.contains(i)) {
                    continue;
                }
                if !ids.iter().all(|&i| interp.is_true_id(i)) {
                    continue;
                }
                let x: BTreeSet<OrdinaryAtom> =
                    ids.iter().map(|&i| program.universe().atom(i).clone()).collect();
                if !is_unfounded_set(&program, &interp, &x, &registry).unwrap() {
                    continue;
                }
                let outcome =
                    find_unfounded_set(&UfsQuery::global(guessing.program(), &hat), &registry)
                        .unwrap();
                assert!(
                    outcome.witness.is_some(),
                    "undetected set avoiding cyclic inputs: seed={seed} X={x:?}"
                );
                count += 1;
            }
        }
        if count > 300 {
            break;
        }
    }
    assert!(count >= 100, "property was instantiated only {count} times");
}

/// The compiled search and the direct condition check agree on membership.
#[test]
fn search_witnesses_check_out_and_absences_are_real() {
    for seed in 0..250u64 {
        let CorpusInstance { program, registry } = random_instance(seed);
        for interp in all_interpretations(program.universe()).take(10) {
            let query = UfsQuery::global(&program, &interp);
            let outcome = find_unfounded_set(&query, &registry).unwrap();
            match outcome.witness {
                Some(w) => {
                    assert!(is_unfounded_set(&program, &interp, &w, &registry).unwrap());
                    assert!(w.iter().all(|a| TruthView::is_true(&interp, a)));
                }
                None => {
                    // brute force confirms absence within the true atoms
                    let n = program.universe().len();
                    for mask in 1usize..(1 << n) {
                        let x: BTreeSet<OrdinaryAtom> = (0..n)
                            .filter(|b| mask & (1 << b) != 0)
                            .map(|b| program.universe().atom(b).clone())
                            .collect();
                        if !x.iter().all(|a| TruthView::is_true(&interp, a)) {
                            continue;
                        }
                        assert!(
                            !is_unfounded_set(&program, &interp, &x, &registry).unwrap(),
                            "search missed {x:?} on seed {seed}"
                        );
                    }
                }
            }
        }
    }
}

/// Mode effort is monotone on the benchmark family across sizes and seeds.
#[test]
fn effort_is_monotone_on_benchmark_family() {
    let registry = registry();
    for (m, k, s, seed) in [
        (2usize, 1usize, 1usize, 0u64),
        (3, 1, 2, 1),
        (4, 2, 2, 2),
        (5, 1, 3, 3),
    ] {
        let spec = hexeval::pipeline::InstanceSpec {
            components: m,
            e_cyclic: k,
            atoms_per_component: s,
            seed,
        };
        let program = hexeval::pipeline::generate_instance(&spec).unwrap();
        let run = |mode: Mode| {
            evaluate(
                &program,
                &registry,
                &EvaluationOptions {
                    mode,
                    engine: Engine::Propagate,
                    ufs_domain_cap: 64,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let full = run(Mode::Full);
        let nodecomp = run(Mode::NoDecomposition);
        let nocrit = run(Mode::NoCriterion);
        assert!(
            full.search_node_expansions <= nodecomp.search_node_expansions
                && nodecomp.search_node_expansions <= nocrit.search_node_expansions,
            "m={m} k={k} s={s}: {} / {} / {}",
            full.search_node_expansions,
            nodecomp.search_node_expansions,
            nocrit.search_node_expansions
        );
    }
}

#[test]
fn table_oracle_file_round_trip_through_cli_surface() {
    let mut reg = OracleRegistry::with_builtins();
    let text = "oracle picky inputs predicate,predicate out_arity 0\n\
                require a ; forbid b ; out ()\n\
                require b ; forbid ; out ()\n";
    reg.load_table_oracle(text).unwrap();
    let program = parse_program("x :- &picky[a,b](). a. b :- x.", &reg).unwrap();
    let report = evaluate(
        &program,
        &reg,
        &EvaluationOptions {
            engine: Engine::Exhaustive,
            ..Default::default()
        },
    )
    .unwrap();
    let brute = evaluate(
        &program,
        &reg,
        &EvaluationOptions {
            mode: Mode::Brute,
            engine: Engine::Exhaustive,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(report.answer_set_family(), brute.answer_set_family());
}

/// Compatible sets equal the brute-force filter over all interpretations of
/// the guessing program, with answer-set-hood decided from the public reduct
/// and model-check operations rather than the solver internals.
#[test]
fn compatible_sets_equal_definitional_filter() {
    for seed in 0..80u64 {
        let CorpusInstance { program, registry } = random_instance(seed);
        let guessing = GuessingProgram::build(&program).unwrap();
        let hat_program = guessing.program();
        if hat_program.universe().len() > 14 {
            continue;
        }
        let mut streamed: Vec<Vec<String>> = Vec::new();
        enumerate_compatible_sets(
            &guessing,
            &registry,
            Engine::Propagate,
            SolveCaps::default(),
            &mut |cs| {
                streamed.push(cs.hat.true_atom_names());
                ControlFlow::Continue(())
            },
        )
        .unwrap();

        let mut filtered: Vec<Vec<String>> = Vec::new();
        for hat in all_interpretations(hat_program.universe()) {
            let reduct = hexeval::solve::gl_reduct(hat_program, &hat).unwrap();
            if !is_model(&reduct, &hat, &registry).unwrap() {
                continue;
            }
            let trues: Vec<&hexeval::syntax::OrdinaryAtom> = hat.true_atoms().collect();
            let mut minimal = true;
            'subsets: for mask in 0usize..(1usize << trues.len()).saturating_sub(1) {
                let subset: Vec<&hexeval::syntax::OrdinaryAtom> = trues
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask & (1 << k) != 0)
                    .map(|(_, a)| *a)
                    .collect();
                let smaller =
                    Interpretation::from_true_atoms(hat_program.universe().clone(), subset)
                        .unwrap();
                if is_model(&reduct, &smaller, &registry).unwrap() {
                    minimal = false;
                    break 'subsets;
                }
            }
            if minimal && hexeval::solve::check_compatible(&guessing, &hat, &registry).unwrap() {
                filtered.push(hat.true_atom_names());
            }
        }
        assert_eq!(streamed, filtered, "seed={seed}");
    }
}

/// Counters are bit-identical across repeated runs of the same evaluation.
#[test]
fn evaluation_counters_are_deterministic() {
    let registry = registry();
    let spec = hexeval::pipeline::InstanceSpec {
        components: 4,
        e_cyclic: 2,
        atoms_per_component: 2,
        seed: 9,
    };
    let program = hexeval::pipeline::generate_instance(&spec).unwrap();
    for mode in [Mode::Full, Mode::NoDecomposition, Mode::NoCriterion] {
        let options = EvaluationOptions {
            mode,
            engine: Engine::Propagate,
            ufs_domain_cap: 64,
            ..Default::default()
        };
        let a = evaluate(&program, &registry, &options).unwrap();
        let b = evaluate(&program, &registry, &options).unwrap();
        assert_eq!(a.answer_set_list, b.answer_set_list);
        assert_eq!(a.compatible_sets, b.compatible_sets);
        assert_eq!(a.rejected_by_ufs, b.rejected_by_ufs);
        assert_eq!(a.ufs_searches_run, b.ufs_searches_run);
        assert_eq!(a.ufs_searches_skipped, b.ufs_searches_skipped);
        assert_eq!(a.search_node_expansions, b.search_node_expansions);
        assert_eq!(a.ufs_candidates_tested, b.ufs_candidates_tested);
    }
}

#[test]
fn shared_types_are_send_and_sync() {
    fn check<T: Send + Sync>() {}
    check::<Program>();
    check::<Interpretation>();
    check::<OracleRegistry>();
    check::<DependencyGraph>();
}

/// Oracle-extension interpretations satisfy the value-coincidence side of
/// compatibility by construction.
#[test]
fn oracle_extension_is_value_coincident() {
    for seed in 0..100u64 {
        let CorpusInstance { program, registry } = random_instance(seed);
        let guessing = GuessingProgram::build(&program).unwrap();
        for interp in all_interpretations(program.universe()).take(6) {
            let hat = guessing.oracle_extension(&interp, &registry).unwrap();
            assert!(hexeval::solve::check_compatible(&guessing, &hat, &registry).unwrap());
        }
    }
}
