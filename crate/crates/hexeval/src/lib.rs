//! Ground HEX-program evaluator.
//!
//! Programs couple ordinary disjunctive ASP rules with external atoms whose
//! truth is delegated to registered Boolean oracles. Answer sets follow the
//! FLP semantics: a candidate must be a subset-minimal model of the reduct
//! formed by the rules whose bodies it satisfies. Evaluation runs in two
//! steps: external atoms are replaced by guessed replacement atoms, the
//! resulting ordinary program is solved and every answer set is verified
//! against the sources; survivors then face an unfounded-set search, which is
//! skipped or narrowed wherever the atom dependency graph shows no cycle
//! through external-atom inputs.
//!
//! ```
//! use hexeval::oracle::OracleRegistry;
//! use hexeval::parser::parse_program;
//! use hexeval::pipeline::{evaluate, EvaluationOptions};
//!
//! let registry = OracleRegistry::with_builtins();
//! // the self-supporting oracle loop: the guess that &id fires survives the
//! // compatibility check but is unfounded, leaving only the empty answer set
//! let program = parse_program("p :- &id[p]().", &registry)?;
//! let report = evaluate(&program, &registry, &EvaluationOptions::default())?;
//! assert_eq!(report.answer_sets, 1);
//! assert_eq!(report.compatible_sets, 2);
//! assert_eq!(report.answer_set_list[0], Vec::<String>::new());
//! # Ok::<(), hexeval::HexError>(())
//! ```

pub mod bits;
pub mod cli;
pub mod corpus;
pub mod depgraph;
pub mod error;
pub mod guess;
pub mod interp;
pub mod oracle;
pub mod parser;
pub mod pipeline;
pub mod solve;
pub mod syntax;
pub mod ufs;

pub use error::{HexError, Result};
