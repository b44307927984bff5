//! End-to-end evaluation: guess, verify against the sources, then check
//! candidates for foundedness — skipping or narrowing the unfounded-set
//! search according to the dependency analysis.

use std::collections::BTreeSet;
use std::ops::ControlFlow;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::depgraph::{ComponentPartition, DependencyGraph};
use crate::error::{HexError, Result};
use crate::guess::GuessingProgram;
use crate::interp::all_interpretations;
use crate::oracle::OracleRegistry;
use crate::solve::{enumerate_compatible_sets, Engine, SolveCaps};
use crate::syntax::{
    BodyLiteral, ExternalAtomRef, InputTerm, OrdinaryAtom, Payload, Program, Rule,
};
use crate::ufs::{find_unfounded_set, is_flp_answer_set, UfsQuery};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    /// Decomposition + criterion: search only e-cyclic components, domain and
    /// required-hit restricted per component.
    Full,
    /// Single global search per candidate, skipped when the whole program has
    /// no e-cycle, required-hit = global cyclic input atoms.
    NoDecomposition,
    /// Unconditional unrestricted global search per candidate.
    NoCriterion,
    /// No guessing pipeline: filter all interpretations through the
    /// answer-set oracle.
    Brute,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "no-decomposition" => Ok(Mode::NoDecomposition),
            "no-criterion" => Ok(Mode::NoCriterion),
            "brute" => Ok(Mode::Brute),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::Full => "full",
            Mode::NoDecomposition => "no-decomposition",
            Mode::NoCriterion => "no-criterion",
            Mode::Brute => "brute",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvaluationOptions {
    pub mode: Mode,
    pub engine: Engine,
    /// Restrict searches to sets meeting the cyclic input atoms.
    pub ca_restriction: bool,
    pub max_answers: Option<usize>,
    pub exhaustive_cap: usize,
    pub ufs_domain_cap: usize,
    /// Fault injection for validation: invert every criterion verdict.
    pub flip_criterion: bool,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        EvaluationOptions {
            mode: Mode::Full,
            engine: Engine::Propagate,
            ca_restriction: true,
            max_answers: None,
            exhaustive_cap: 24,
            ufs_domain_cap: crate::ufs::DEFAULT_UFS_DOMAIN_CAP,
            flip_criterion: false,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PhaseTimes {
    pub analysis_ms: f64,
    pub enumeration_ms: f64,
    pub ufs_ms: f64,
    pub total_ms: f64,
}

/// Counters and answer sets of one evaluation run. A search is eligible when
/// its domain meets the candidate's true atoms; eligible searches are either
/// run or skipped by the criterion, so `ufs_searches_run +
/// ufs_searches_skipped` equals the eligible count.
#[derive(Clone, Debug, Serialize)]
pub struct EvaluationReport {
    pub mode: String,
    pub engine: String,
    /// Sorted atom names per answer set, in emission order.
    pub answer_set_list: Vec<Vec<String>>,
    pub answer_sets: u64,
    pub compatible_sets: u64,
    pub rejected_by_ufs: u64,
    pub ufs_searches_run: u64,
    pub ufs_searches_skipped: u64,
    pub ufs_checks_eligible: u64,
    pub components_total: u64,
    pub components_ecyclic: u64,
    pub search_node_expansions: u64,
    pub ufs_candidates_tested: u64,
    pub phase_times_ms: PhaseTimes,
}

impl EvaluationReport {
    fn new(mode: Mode, engine: Engine) -> Self {
        EvaluationReport {
            mode: mode.to_string(),
            engine: format!("{engine:?}").to_lowercase(),
            answer_set_list: Vec::new(),
            answer_sets: 0,
            compatible_sets: 0,
            rejected_by_ufs: 0,
            ufs_searches_run: 0,
            ufs_searches_skipped: 0,
            ufs_checks_eligible: 0,
            components_total: 0,
            components_ecyclic: 0,
            search_node_expansions: 0,
            ufs_candidates_tested: 0,
            phase_times_ms: PhaseTimes::default(),
        }
    }

    /// Flat stats document with stable field names.
    pub fn stats_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": self.mode,
            "engine": self.engine,
            "answer_sets": self.answer_sets,
            "compatible_sets": self.compatible_sets,
            "rejected_by_ufs": self.rejected_by_ufs,
            "ufs_searches_run": self.ufs_searches_run,
            "ufs_searches_skipped": self.ufs_searches_skipped,
            "ufs_checks_eligible": self.ufs_checks_eligible,
            "components_total": self.components_total,
            "components_ecyclic": self.components_ecyclic,
            "search_node_expansions": self.search_node_expansions,
            "ufs_candidates_tested": self.ufs_candidates_tested,
            "phase_times_ms": {
                "analysis": self.phase_times_ms.analysis_ms,
                "enumeration": self.phase_times_ms.enumeration_ms,
                "ufs": self.phase_times_ms.ufs_ms,
                "total": self.phase_times_ms.total_ms,
            },
        })
    }

    pub fn answer_set_family(&self) -> BTreeSet<Vec<String>> {
        self.answer_set_list.iter().cloned().collect()
    }
}

fn ms(from: Instant) -> f64 {
    from.elapsed().as_secs_f64() * 1e3
}

/// Evaluate a ground program under the given options.
pub fn evaluate(
    program: &Program,
    registry: &OracleRegistry,
    options: &EvaluationOptions,
) -> Result<EvaluationReport> {
    program.ensure_ground("evaluation")?;
    let total_start = Instant::now();
    let mut report = EvaluationReport::new(options.mode, options.engine);

    if options.mode == Mode::Brute {
        let n = program.universe().len();
        if n > options.exhaustive_cap {
            return Err(HexError::CapExceeded {
                what: "brute-mode universe",
                size: n,
                cap: options.exhaustive_cap,
            });
        }
        let enum_start = Instant::now();
        for interp in all_interpretations(program.universe()) {
            if is_flp_answer_set(program, &interp, registry, options.exhaustive_cap)? {
                report.answer_set_list.push(interp.true_atom_names());
                if let Some(max) = options.max_answers {
                    if report.answer_set_list.len() >= max {
                        break;
                    }
                }
            }
        }
        report.answer_sets = report.answer_set_list.len() as u64;
        report.phase_times_ms.enumeration_ms = ms(enum_start);
        report.phase_times_ms.total_ms = ms(total_start);
        return Ok(report);
    }

    let analysis_start = Instant::now();
    let guessing = GuessingProgram::build(program)?;
    let graph = DependencyGraph::build(program)?;
    let partition = ComponentPartition::build(program, &graph)?;
    let global_needs_raw = graph.has_e_cycle(None);
    let global_needs = global_needs_raw != options.flip_criterion;
    let global_ca: BTreeSet<OrdinaryAtom> = graph
        .cyclic_input_atoms()
        .iter()
        .map(|i| program.universe().atom(i).clone())
        .collect();
    let component_domains: Vec<BTreeSet<OrdinaryAtom>> = partition
        .components
        .iter()
        .map(|c| {
            c.atoms
                .iter()
                .map(|i| program.universe().atom(i).clone())
                .collect()
        })
        .collect();
    let component_hits: Vec<BTreeSet<OrdinaryAtom>> = partition
        .components
        .iter()
        .map(|c| {
            c.cyclic_inputs
                .iter()
                .map(|i| program.universe().atom(i).clone())
                .collect()
        })
        .collect();
    report.components_total = partition.components.len() as u64;
    report.components_ecyclic = partition
        .components
        .iter()
        .filter(|c| c.needs_ufs_check)
        .count() as u64;
    report.phase_times_ms.analysis_ms = ms(analysis_start);

    let caps = SolveCaps {
        exhaustive_atoms: options.exhaustive_cap,
    };
    let enum_start = Instant::now();
    let mut ufs_time = 0.0f64;
    let mut deferred: Option<HexError> = None;

    enumerate_compatible_sets(&guessing, registry, options.engine, caps, &mut |cs| {
        report.compatible_sets += 1;
        let candidate = guessing.project(&cs.hat);
        let ufs_start = Instant::now();

        let step2 = |report: &mut EvaluationReport| -> Result<bool> {
            let mut rejected = false;
            match options.mode {
                Mode::Full => {
                    for (ci, comp) in partition.components.iter().enumerate() {
                        if !comp.atoms.intersects(candidate.true_set()) {
                            continue; // nothing of this component is true
                        }
                        report.ufs_checks_eligible += 1;
                        let needs = comp.needs_ufs_check != options.flip_criterion;
                        if !needs {
                            report.ufs_searches_skipped += 1;
                            continue;
                        }
                        report.ufs_searches_run += 1;
                        let query = UfsQuery {
                            program,
                            rule_indices: Some(&comp.rule_indices),
                            interp: &candidate,
                            domain: component_domains[ci].clone(),
                            required_hit: if options.ca_restriction {
                                component_hits[ci].clone()
                            } else {
                                BTreeSet::new()
                            },
                            domain_cap: options.ufs_domain_cap,
                        };
                        let outcome = find_unfounded_set(&query, registry)?;
                        report.search_node_expansions += outcome.nodes_expanded;
                        report.ufs_candidates_tested += outcome.candidates_tested;
                        if outcome.witness.is_some() {
                            rejected = true;
                        }
                    }
                }
                Mode::NoDecomposition | Mode::NoCriterion => {
                    if candidate.true_count() == 0 {
                        return Ok(false);
                    }
                    report.ufs_checks_eligible += 1;
                    let search = options.mode == Mode::NoCriterion || global_needs;
                    if !search {
                        report.ufs_searches_skipped += 1;
                        return Ok(false);
                    }
                    report.ufs_searches_run += 1;
                    let mut query = UfsQuery::global(program, &candidate);
                    query.domain_cap = options.ufs_domain_cap;
                    if options.mode == Mode::NoDecomposition && options.ca_restriction {
                        query.required_hit = global_ca.clone();
                    }
                    let outcome = find_unfounded_set(&query, registry)?;
                    report.search_node_expansions += outcome.nodes_expanded;
                    report.ufs_candidates_tested += outcome.candidates_tested;
                    rejected = outcome.witness.is_some();
                }
                Mode::Brute => unreachable!(),
            }
            Ok(rejected)
        };

        let rejected = match step2(&mut report) {
            Ok(r) => r,
            Err(e) => {
                deferred = Some(e);
                return ControlFlow::Break(());
            }
        };
        ufs_time += ms(ufs_start);
        if rejected {
            report.rejected_by_ufs += 1;
            return ControlFlow::Continue(());
        }
        report.answer_set_list.push(candidate.true_atom_names());
        if let Some(max) = options.max_answers {
            if report.answer_set_list.len() >= max {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    if let Some(e) = deferred {
        return Err(e);
    }

    debug_assert_eq!(
        report.ufs_searches_run + report.ufs_searches_skipped,
        report.ufs_checks_eligible
    );
    report.answer_sets = report.answer_set_list.len() as u64;
    report.phase_times_ms.ufs_ms = ufs_time;
    report.phase_times_ms.enumeration_ms = (ms(enum_start) - ufs_time).max(0.0);
    report.phase_times_ms.total_ms = ms(total_start);
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct Discrepancy {
    pub answer_set: Vec<String>,
    pub in_full: bool,
    pub in_brute: bool,
}

/// Cross-validate the full pipeline against the brute-force oracle. An empty
/// list means both agree on the answer-set family.
pub fn verify(
    program: &Program,
    registry: &OracleRegistry,
    options: &EvaluationOptions,
) -> Result<Vec<Discrepancy>> {
    let mut full_opts = *options;
    full_opts.mode = Mode::Full;
    full_opts.max_answers = None;
    let mut brute_opts = full_opts;
    brute_opts.mode = Mode::Brute;
    brute_opts.flip_criterion = false;

    let full = evaluate(program, registry, &full_opts)?;
    let brute = evaluate(program, registry, &brute_opts)?;
    let f = full.answer_set_family();
    let b = brute.answer_set_family();
    let mut out = Vec::new();
    for set in f.union(&b) {
        let in_full = f.contains(set);
        let in_brute = b.contains(set);
        if in_full != in_brute {
            out.push(Discrepancy {
                answer_set: set.clone(),
                in_full,
                in_brute,
            });
        }
    }
    Ok(out)
}

/// Deterministic benchmark-family instance: `components` ordinary atom
/// cycles of length `atoms_per_component`, each switched by a disjunctive
/// selector pair, and `e_cyclic` of them additionally closed through an
/// `id`-oracle loop. The seed picks which cycles carry the oracle loop and
/// shuffles rule order; the semantics depends only on (m, k, s).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceSpec {
    pub components: usize,
    pub e_cyclic: usize,
    pub atoms_per_component: usize,
    pub seed: u64,
}

impl InstanceSpec {
    /// Parse `m=8,k=1,s=3[,seed=7]`.
    pub fn parse(text: &str) -> Result<InstanceSpec> {
        let mut spec = InstanceSpec {
            components: 0,
            e_cyclic: 0,
            atoms_per_component: 1,
            seed: 0,
        };
        for part in text.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| HexError::InvalidInstanceSpec(format!("bad part '{part}'")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| HexError::InvalidInstanceSpec(format!("bad number in '{part}'")))?;
            match key.trim() {
                "m" => spec.components = value as usize,
                "k" => spec.e_cyclic = value as usize,
                "s" => spec.atoms_per_component = value as usize,
                "seed" => spec.seed = value,
                other => {
                    return Err(HexError::InvalidInstanceSpec(format!(
                        "unknown key '{other}'"
                    )))
                }
            }
        }
        Ok(spec)
    }
}

pub fn generate_instance(spec: &InstanceSpec) -> Result<Program> {
    if spec.e_cyclic > spec.components {
        return Err(HexError::InvalidInstanceSpec(format!(
            "e_cyclic {} exceeds components {}",
            spec.e_cyclic, spec.components
        )));
    }
    if spec.atoms_per_component == 0 {
        return Err(HexError::InvalidInstanceSpec(
            "atoms_per_component must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chain_ids: Vec<usize> = (0..spec.components).collect();
    chain_ids.shuffle(&mut rng);
    let e_chains: BTreeSet<usize> = chain_ids.into_iter().take(spec.e_cyclic).collect();

    let atom = |i: usize, j: usize| OrdinaryAtom::named(format!("c{i:02}_{j:02}"));
    let mut rules = Vec::new();
    for i in 0..spec.components {
        let sel = OrdinaryAtom::named(format!("sel{i:02}"));
        let nsel = OrdinaryAtom::named(format!("nsel{i:02}"));
        rules.push(Rule::new(vec![sel.clone(), nsel], Vec::new()));
        rules.push(Rule::new(
            vec![atom(i, 0)],
            vec![BodyLiteral::positive(Payload::Ordinary(sel))],
        ));
        let s = spec.atoms_per_component;
        for j in 0..s {
            rules.push(Rule::new(
                vec![atom(i, j)],
                vec![BodyLiteral::positive(Payload::Ordinary(atom(i, (j + 1) % s)))],
            ));
        }
        if e_chains.contains(&i) {
            let eref = ExternalAtomRef {
                name: std::sync::Arc::from("id"),
                inputs: vec![InputTerm::Predicate(atom(i, 0).predicate.clone())],
                outputs: Vec::new(),
            };
            rules.push(Rule::new(
                vec![atom(i, 0)],
                vec![BodyLiteral::positive(Payload::External(eref))],
            ));
        }
    }
    rules.shuffle(&mut rng);
    Program::from_rules(rules)
}
