//! External sources: typed signatures, Boolean oracle functions, builtins and
//! the file-defined table oracle.
//!
//! An oracle is a total, deterministic Boolean function of the interpretation
//! (seen through its predicate inputs only), the bound input terms, and an
//! output tuple. Implementations must be pure: equal arguments give equal
//! results, and the value may depend on the interpretation only through the
//! extensions of the predicate inputs.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{HexError, Result};
use crate::syntax::{Constant, ExternalAtomRef, InputTerm, OrdinaryAtom, Term};

/// Kind of one external-atom input position.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InputKind {
    Predicate,
    Constant,
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputKind::Predicate => write!(f, "predicate"),
            InputKind::Constant => write!(f, "constant"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleSignature {
    pub name: String,
    pub input_kinds: Vec<InputKind>,
    pub output_arity: usize,
}

/// Read access to an interpretation during oracle evaluation. Atoms outside
/// the underlying universe are false.
pub trait TruthView {
    fn is_true(&self, atom: &OrdinaryAtom) -> bool;
    /// All true atoms of the given predicate.
    fn true_atoms_of(&self, predicate: &str) -> Vec<OrdinaryAtom>;
}

/// Extension of a predicate under a view: the argument tuples of its true
/// atoms, sorted.
pub fn extension_of(view: &dyn TruthView, predicate: &str) -> Vec<Vec<Constant>> {
    let mut tuples: Vec<Vec<Constant>> = view
        .true_atoms_of(predicate)
        .iter()
        .map(|a| {
            a.args
                .iter()
                .map(|t| t.constant().expect("ground atom").clone())
                .collect()
        })
        .collect();
    tuples.sort();
    tuples.dedup();
    tuples
}

pub trait Oracle: Send + Sync {
    fn evaluate(
        &self,
        view: &dyn TruthView,
        inputs: &[InputTerm],
        output: &[Constant],
    ) -> Result<bool>;

    /// Native output enumeration, if the source supports one. Tuples may lie
    /// outside the program's constant universe; the caller filters.
    fn enumerate(
        &self,
        _view: &dyn TruthView,
        _inputs: &[InputTerm],
    ) -> Result<Option<Vec<Vec<Constant>>>> {
        Ok(None)
    }

    /// Extra per-binding validation beyond signature conformance.
    fn check_binding(&self, _eref: &ExternalAtomRef) -> Result<()> {
        Ok(())
    }
}

fn predicate_input<'a>(inputs: &'a [InputTerm], i: usize, name: &str) -> Result<&'a str> {
    match inputs.get(i) {
        Some(InputTerm::Predicate(p)) => Ok(p),
        _ => Err(HexError::SignatureMismatch {
            name: name.to_string(),
            msg: format!("input position {i} must be a predicate"),
        }),
    }
}

fn constant_input<'a>(inputs: &'a [InputTerm], i: usize, name: &str) -> Result<&'a Constant> {
    match inputs.get(i) {
        Some(InputTerm::Constant(c)) => Ok(c),
        _ => Err(HexError::SignatureMismatch {
            name: name.to_string(),
            msg: format!("input position {i} must be a constant"),
        }),
    }
}

/// `&id[p]()`: true iff the 0-ary atom `p` is true.
struct IdOracle;

impl Oracle for IdOracle {
    fn evaluate(
        &self,
        view: &dyn TruthView,
        inputs: &[InputTerm],
        _output: &[Constant],
    ) -> Result<bool> {
        let p = predicate_input(inputs, 0, "id")?;
        Ok(view.is_true(&OrdinaryAtom::named(p)))
    }

    fn enumerate(
        &self,
        view: &dyn TruthView,
        inputs: &[InputTerm],
    ) -> Result<Option<Vec<Vec<Constant>>>> {
        let p = predicate_input(inputs, 0, "id")?;
        if view.is_true(&OrdinaryAtom::named(p)) {
            Ok(Some(vec![Vec::new()]))
        } else {
            Ok(Some(Vec::new()))
        }
    }
}

/// `&diff[s1,s2](x)`: set difference of the unary extensions of `s1`, `s2`.
struct DiffOracle;

impl Oracle for DiffOracle {
    fn evaluate(
        &self,
        view: &dyn TruthView,
        inputs: &[InputTerm],
        output: &[Constant],
    ) -> Result<bool> {
        let s1 = predicate_input(inputs, 0, "diff")?;
        let s2 = predicate_input(inputs, 1, "diff")?;
        let arg = vec![Term::Constant(output[0].clone())];
        let in1 = view.is_true(&OrdinaryAtom::new(s1, arg.clone()));
        let in2 = view.is_true(&OrdinaryAtom::new(s2, arg));
        Ok(in1 && !in2)
    }

    fn enumerate(
        &self,
        view: &dyn TruthView,
        inputs: &[InputTerm],
    ) -> Result<Option<Vec<Vec<Constant>>>> {
        let s1 = predicate_input(inputs, 0, "diff")?;
        let s2: BTreeSet<Vec<Constant>> = extension_of(view, predicate_input(inputs, 1, "diff")?)
            .into_iter()
            .collect();
        Ok(Some(
            extension_of(view, s1)
                .into_iter()
                .filter(|t| t.len() == 1 && !s2.contains(t))
                .collect(),
        ))
    }
}

fn unquote(tok: &str) -> &str {
    tok.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(tok)
}

/// `&concat[x,y](z)`: true iff `z` is the string concatenation of the
/// constant inputs `x` and `y` (quotes stripped for comparison).
struct ConcatOracle;

impl Oracle for ConcatOracle {
    fn evaluate(
        &self,
        _view: &dyn TruthView,
        inputs: &[InputTerm],
        output: &[Constant],
    ) -> Result<bool> {
        let x = constant_input(inputs, 0, "concat")?;
        let y = constant_input(inputs, 1, "concat")?;
        let joined = format!("{}{}", unquote(x.as_str()), unquote(y.as_str()));
        Ok(unquote(output[0].as_str()) == joined)
    }

    fn enumerate(
        &self,
        _view: &dyn TruthView,
        inputs: &[InputTerm],
    ) -> Result<Option<Vec<Vec<Constant>>>> {
        let x = constant_input(inputs, 0, "concat")?;
        let y = constant_input(inputs, 1, "concat")?;
        let joined = format!("{}{}", unquote(x.as_str()), unquote(y.as_str()));
        let tok = if joined
            .chars()
            .next()
            .map(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
            .unwrap_or(false)
            && joined.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            joined
        } else {
            format!("\"{joined}\"")
        };
        Ok(Some(vec![vec![Constant::new(tok)]]))
    }
}

/// A file-defined source. The value for an output tuple is true iff some
/// entry listing that tuple matches the interpretation: all required atoms
/// true and all forbidden atoms false.
#[derive(Clone, Debug)]
pub struct TableEntry {
    pub require: Vec<OrdinaryAtom>,
    pub forbid: Vec<OrdinaryAtom>,
    pub outputs: Vec<Vec<Constant>>,
}

#[derive(Clone, Debug)]
pub struct TableOracle {
    name: String,
    entries: Vec<TableEntry>,
}

impl TableOracle {
    pub fn new(name: impl Into<String>, entries: Vec<TableEntry>) -> Self {
        TableOracle {
            name: name.into(),
            entries,
        }
    }

    fn entry_matches(&self, entry: &TableEntry, view: &dyn TruthView) -> bool {
        entry.require.iter().all(|a| view.is_true(a))
            && entry.forbid.iter().all(|a| !view.is_true(a))
    }
}

impl Oracle for TableOracle {
    fn evaluate(
        &self,
        view: &dyn TruthView,
        _inputs: &[InputTerm],
        output: &[Constant],
    ) -> Result<bool> {
        Ok(self.entries.iter().any(|e| {
            e.outputs.iter().any(|t| t.as_slice() == output) && self.entry_matches(e, view)
        }))
    }

    fn enumerate(
        &self,
        view: &dyn TruthView,
        _inputs: &[InputTerm],
    ) -> Result<Option<Vec<Vec<Constant>>>> {
        let mut out: Vec<Vec<Constant>> = self
            .entries
            .iter()
            .filter(|e| self.entry_matches(e, view))
            .flat_map(|e| e.outputs.iter().cloned())
            .collect();
        out.sort();
        out.dedup();
        Ok(Some(out))
    }

    fn check_binding(&self, eref: &ExternalAtomRef) -> Result<()> {
        let bound: BTreeSet<&str> = eref
            .inputs
            .iter()
            .filter_map(|i| match i {
                InputTerm::Predicate(p) => Some(&**p),
                _ => None,
            })
            .collect();
        for e in &self.entries {
            for a in e.require.iter().chain(&e.forbid) {
                if !bound.contains(&*a.predicate) {
                    return Err(HexError::OracleTable(format!(
                        "entry atom '{a}' of '&{}' uses predicate '{}' which is not among the bound predicate inputs",
                        self.name, a.predicate
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Registry of external sources. Immutable after setup.
pub struct OracleRegistry {
    entries: std::collections::BTreeMap<String, (OracleSignature, Arc<dyn Oracle>)>,
}

impl Default for OracleRegistry {
    fn default() -> Self {
        OracleRegistry::with_builtins()
    }
}

impl OracleRegistry {
    pub fn new() -> Self {
        OracleRegistry {
            entries: Default::default(),
        }
    }

    /// Registry with the builtin sources `id`, `diff` and `concat`.
    pub fn with_builtins() -> Self {
        let mut r = OracleRegistry::new();
        r.register(
            OracleSignature {
                name: "id".into(),
                input_kinds: vec![InputKind::Predicate],
                output_arity: 0,
            },
            Arc::new(IdOracle),
        )
        .unwrap();
        r.register(
            OracleSignature {
                name: "diff".into(),
                input_kinds: vec![InputKind::Predicate, InputKind::Predicate],
                output_arity: 1,
            },
            Arc::new(DiffOracle),
        )
        .unwrap();
        r.register(
            OracleSignature {
                name: "concat".into(),
                input_kinds: vec![InputKind::Constant, InputKind::Constant],
                output_arity: 1,
            },
            Arc::new(ConcatOracle),
        )
        .unwrap();
        r
    }

    pub fn register(&mut self, sig: OracleSignature, oracle: Arc<dyn Oracle>) -> Result<()> {
        let name = sig.name.clone();
        if self.entries.contains_key(&name) {
            return Err(HexError::DuplicateOracle(name));
        }
        self.entries.insert(name, (sig, oracle));
        Ok(())
    }

    pub fn signature(&self, name: &str) -> Option<&OracleSignature> {
        self.entries.get(name).map(|(s, _)| s)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Per-binding validation hook used by the parser once signature
    /// conformance is established.
    pub fn check_binding(&self, eref: &ExternalAtomRef) -> Result<()> {
        let (_, oracle) = self
            .entries
            .get(&*eref.name)
            .ok_or_else(|| HexError::UnknownOracle(eref.name.to_string()))?;
        oracle.check_binding(eref)
    }

    /// Evaluate the oracle function for one output tuple.
    pub fn evaluate(
        &self,
        name: &str,
        view: &dyn TruthView,
        inputs: &[InputTerm],
        output: &[Constant],
    ) -> Result<bool> {
        let (sig, oracle) = self
            .entries
            .get(name)
            .ok_or_else(|| HexError::UnknownOracle(name.to_string()))?;
        if inputs.len() != sig.input_kinds.len() || output.len() != sig.output_arity {
            return Err(HexError::SignatureMismatch {
                name: name.to_string(),
                msg: format!(
                    "expected {} inputs and {} outputs, found {} and {}",
                    sig.input_kinds.len(),
                    sig.output_arity,
                    inputs.len(),
                    output.len()
                ),
            });
        }
        oracle.evaluate(view, inputs, output)
    }

    /// All true output tuples over the given constant universe.
    pub fn external_extension(
        &self,
        name: &str,
        view: &dyn TruthView,
        inputs: &[InputTerm],
        universe: &[Constant],
    ) -> Result<Vec<Vec<Constant>>> {
        let (sig, oracle) = self
            .entries
            .get(name)
            .ok_or_else(|| HexError::UnknownOracle(name.to_string()))?;
        let arity = sig.output_arity;
        if let Some(native) = oracle.enumerate(view, inputs)? {
            let allowed: BTreeSet<&Constant> = universe.iter().collect();
            let mut out: Vec<Vec<Constant>> = native
                .into_iter()
                .filter(|t| t.len() == arity && t.iter().all(|c| allowed.contains(c)))
                .collect();
            out.sort();
            out.dedup();
            return Ok(out);
        }
        let total = universe.len().checked_pow(arity as u32);
        match total {
            Some(n) if n <= 1 << 20 => {}
            _ => {
                return Err(HexError::EnumerationUnsupported {
                    name: name.to_string(),
                    msg: format!(
                        "no native enumeration and universe^{arity} is too large ({} constants)",
                        universe.len()
                    ),
                })
            }
        }
        let mut out = Vec::new();
        let mut tuple = vec![
            universe
                .first()
                .cloned()
                .unwrap_or_else(|| Constant::new("x"));
            arity
        ];
        enumerate_tuples(universe, arity, 0, &mut tuple, &mut |t| {
            if self.evaluate(name, view, inputs, t)? {
                out.push(t.to_vec());
            }
            Ok(())
        })?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Parse and register a table oracle from its file text. Header:
    /// `oracle NAME inputs KIND,KIND,... out_arity N`; then one entry per
    /// line: `require a(x) & b ; forbid c ; out (t1) (t2)`.
    pub fn load_table_oracle(&mut self, text: &str) -> Result<String> {
        let (sig, oracle) = parse_table_oracle(text)?;
        let name = sig.name.clone();
        self.register(sig, Arc::new(oracle))?;
        Ok(name)
    }
}

fn enumerate_tuples(
    universe: &[Constant],
    arity: usize,
    pos: usize,
    tuple: &mut Vec<Constant>,
    f: &mut impl FnMut(&[Constant]) -> Result<()>,
) -> Result<()> {
    if pos == arity {
        return f(&tuple[..arity]);
    }
    for c in universe {
        tuple[pos] = c.clone();
        enumerate_tuples(universe, arity, pos + 1, tuple, f)?;
    }
    Ok(())
}

fn table_err(line_no: usize, msg: impl Into<String>) -> HexError {
    HexError::OracleTable(format!("line {}: {}", line_no, msg.into()))
}

fn parse_table_atom(tok: &str, line_no: usize) -> Result<OrdinaryAtom> {
    crate::parser::parse_atom(tok).map_err(|e| table_err(line_no, format!("bad atom '{tok}': {e}")))
}

/// Parse a table-oracle definition (see [`OracleRegistry::load_table_oracle`]).
pub fn parse_table_oracle(text: &str) -> Result<(OracleSignature, TableOracle)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| HexError::OracleTable("empty oracle file".into()))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() != 6 || words[0] != "oracle" || words[2] != "inputs" || words[4] != "out_arity" {
        return Err(table_err(
            hline,
            "expected header 'oracle NAME inputs KIND,... out_arity N'",
        ));
    }
    let name = words[1].to_string();
    let input_kinds: Vec<InputKind> = words[3]
        .split(',')
        .map(|k| match k.trim() {
            "predicate" => Ok(InputKind::Predicate),
            "constant" => Ok(InputKind::Constant),
            other => Err(table_err(hline, format!("unknown input kind '{other}'"))),
        })
        .collect::<Result<_>>()?;
    let output_arity: usize = words[5]
        .parse()
        .map_err(|_| table_err(hline, "out_arity must be a number"))?;

    let mut entries = Vec::new();
    for (ln, line) in lines {
        let sections: Vec<&str> = line.split(';').map(str::trim).collect();
        if sections.len() != 3 {
            return Err(table_err(ln, "expected 'require ... ; forbid ... ; out ...'"));
        }
        let require = parse_atom_section(sections[0], "require", ln)?;
        let forbid = parse_atom_section(sections[1], "forbid", ln)?;
        let out_body = sections[2]
            .strip_prefix("out")
            .ok_or_else(|| table_err(ln, "third section must start with 'out'"))?
            .trim();
        let outputs = parse_tuples(out_body, output_arity, ln)?;
        if outputs.is_empty() {
            return Err(table_err(ln, "entry lists no output tuples"));
        }
        entries.push(TableEntry {
            require,
            forbid,
            outputs,
        });
    }

    Ok((
        OracleSignature {
            name: name.clone(),
            input_kinds,
            output_arity,
        },
        TableOracle::new(name, entries),
    ))
}

fn parse_atom_section(section: &str, keyword: &str, line_no: usize) -> Result<Vec<OrdinaryAtom>> {
    let body = section
        .strip_prefix(keyword)
        .ok_or_else(|| table_err(line_no, format!("section must start with '{keyword}'")))?
        .trim();
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('&')
        .map(str::trim)
        .map(|tok| parse_table_atom(tok, line_no))
        .collect()
}

fn parse_tuples(body: &str, arity: usize, line_no: usize) -> Result<Vec<Vec<Constant>>> {
    let mut tuples = Vec::new();
    let mut rest = body;
    while !rest.is_empty() {
        if !rest.starts_with('(') {
            return Err(table_err(line_no, "output tuples must be parenthesized"));
        }
        let close = rest
            .find(')')
            .ok_or_else(|| table_err(line_no, "unclosed output tuple"))?;
        let inner = &rest[1..close];
        let tuple: Vec<Constant> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|c| Constant::new(c.trim()))
                .collect()
        };
        if tuple.len() != arity {
            return Err(table_err(
                line_no,
                format!("tuple arity {} does not match out_arity {arity}", tuple.len()),
            ));
        }
        tuples.push(tuple);
        rest = rest[close + 1..].trim_start();
    }
    Ok(tuples)
}
