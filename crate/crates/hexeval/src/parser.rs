//! Program text parser.
//!
//! Grammar (UTF-8, `%` line comments):
//!
//! ```text
//! program := (rule ".")*
//! rule    := head | head ":-" body | ":-" body
//! head    := atom ("|" atom)*
//! body    := literal ("," literal)*
//! literal := ["not"] (atom | extatom)
//! extatom := "&" ident "[" term ("," term)* "]" "(" [const ("," const)*] ")"
//! atom    := ["-"] ident ["(" term ("," term)* ")"]
//! ```
//!
//! Identifiers starting lowercase are constants/predicates, uppercase are
//! variables (only meaningful if the program is instantiated afterwards).
//! External atom input terms are typed against the registry signature: a
//! position declared `predicate` must be a plain identifier and is resolved
//! as a predicate name, otherwise the token is taken as a constant.

use std::sync::Arc;

use crate::error::{HexError, Result};
use crate::oracle::{InputKind, OracleRegistry};
use crate::syntax::{
    BodyLiteral, Constant, ExternalAtomRef, InputTerm, OrdinaryAtom, Payload, Polarity, Program,
    Rule, Term,
};

#[derive(Debug, Clone, Copy, PartialEq)]
enum InputShape {
    Ident,
    Variable,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(String),
    Str(String),
    Amp,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Dot,
    Pipe,
    Minus,
    If, // ":-"
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    macro_rules! err {
        ($l:expr, $c:expr, $($m:tt)*) => {
            return Err(HexError::Syntax { line: $l, col: $c, msg: format!($($m)*) })
        };
    }

    while let Some(&ch) = chars.peek() {
        let (tl, tc) = (line, col);
        match ch {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '"' => {
                let mut s = String::from('"');
                chars.next();
                col += 1;
                loop {
                    match chars.next() {
                        Some('"') => {
                            col += 1;
                            s.push('"');
                            break;
                        }
                        Some('\n') | None => err!(tl, tc, "unterminated string literal"),
                        Some(c) => {
                            col += 1;
                            s.push(c);
                        }
                    }
                }
                out.push(Lexed {
                    tok: Tok::Str(s),
                    line: tl,
                    col: tc,
                });
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Lexed {
                    tok: Tok::Int(s),
                    line: tl,
                    col: tc,
                });
            }
            c if c.is_ascii_lowercase() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Lexed {
                    tok: Tok::Ident(s),
                    line: tl,
                    col: tc,
                });
            }
            c if c.is_ascii_uppercase() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                out.push(Lexed {
                    tok: Tok::Var(s),
                    line: tl,
                    col: tc,
                });
            }
            ':' => {
                chars.next();
                col += 1;
                match chars.peek() {
                    Some('-') => {
                        chars.next();
                        col += 1;
                        out.push(Lexed {
                            tok: Tok::If,
                            line: tl,
                            col: tc,
                        });
                    }
                    _ => err!(tl, tc, "expected ':-'"),
                }
            }
            '&' | '[' | ']' | '(' | ')' | ',' | '.' | '|' | '-' => {
                chars.next();
                col += 1;
                let tok = match ch {
                    '&' => Tok::Amp,
                    '[' => Tok::LBrack,
                    ']' => Tok::RBrack,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '|' => Tok::Pipe,
                    '-' => Tok::Minus,
                    _ => unreachable!(),
                };
                out.push(Lexed {
                    tok,
                    line: tl,
                    col: tc,
                });
            }
            c => err!(tl, tc, "unexpected character '{c}'"),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Lexed>,
    pos: usize,
    registry: &'a OracleRegistry,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|l| (l.line, l.col))
            .unwrap_or((1, 1))
    }

    fn error(&self, msg: impl Into<String>) -> HexError {
        let (line, col) = self.here();
        HexError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|l| l.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn program(&mut self) -> Result<Vec<Rule>> {
        let mut rules = Vec::new();
        while self.peek().is_some() {
            rules.push(self.rule()?);
        }
        Ok(rules)
    }

    fn rule(&mut self) -> Result<Rule> {
        let mut head = Vec::new();
        if !matches!(self.peek(), Some(Tok::If)) {
            head.push(self.atom()?);
            while self.eat(&Tok::Pipe) {
                head.push(self.atom()?);
            }
        }
        let mut body = Vec::new();
        if self.eat(&Tok::If) {
            body.push(self.literal()?);
            while self.eat(&Tok::Comma) {
                body.push(self.literal()?);
            }
        }
        self.expect(Tok::Dot, "'.'")?;
        if head.is_empty() && body.is_empty() {
            return Err(self.error("rule with empty head and empty body"));
        }
        Ok(Rule::new(head, body))
    }

    fn literal(&mut self) -> Result<BodyLiteral> {
        let naf = matches!(self.peek(), Some(Tok::Ident(s)) if s == "not");
        if naf {
            self.pos += 1;
        }
        let payload = if matches!(self.peek(), Some(Tok::Amp)) {
            Payload::External(self.external_atom()?)
        } else {
            Payload::Ordinary(self.atom()?)
        };
        Ok(BodyLiteral {
            polarity: if naf { Polarity::Naf } else { Polarity::Positive },
            payload,
        })
    }

    fn atom(&mut self) -> Result<OrdinaryAtom> {
        let strong_neg = self.eat(&Tok::Minus);
        let name = match self.bump() {
            Some(Tok::Ident(s)) if s != "not" => s,
            _ => {
                self.pos -= 1;
                return Err(self.error("expected atom name"));
            }
        };
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            args.push(self.term()?);
            while self.eat(&Tok::Comma) {
                args.push(self.term()?);
            }
            self.expect(Tok::RParen, "')'")?;
        }
        Ok(OrdinaryAtom {
            strong_neg,
            predicate: Arc::from(name.as_str()),
            args,
        })
    }

    fn term(&mut self) -> Result<Term> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(Term::Constant(Constant::new(s))),
            Some(Tok::Int(s)) => Ok(Term::Constant(Constant::new(s))),
            Some(Tok::Str(s)) => Ok(Term::Constant(Constant::new(s))),
            Some(Tok::Var(s)) => Ok(Term::Variable(Arc::from(s.as_str()))),
            _ => {
                self.pos -= 1;
                Err(self.error("expected term"))
            }
        }
    }

    fn external_atom(&mut self) -> Result<ExternalAtomRef> {
        self.expect(Tok::Amp, "'&'")?;
        let name = match self.bump() {
            Some(Tok::Ident(s)) => s,
            _ => {
                self.pos -= 1;
                return Err(self.error("expected external source name"));
            }
        };
        let sig = self
            .registry
            .signature(&name)
            .ok_or_else(|| HexError::UnknownOracle(name.clone()))?
            .clone();

        self.expect(Tok::LBrack, "'['")?;
        let mut raw_inputs = Vec::new();
        if !matches!(self.peek(), Some(Tok::RBrack)) {
            raw_inputs.push(self.input_token()?);
            while self.eat(&Tok::Comma) {
                raw_inputs.push(self.input_token()?);
            }
        }
        self.expect(Tok::RBrack, "']'")?;

        if raw_inputs.len() != sig.input_kinds.len() {
            return Err(HexError::SignatureMismatch {
                name: name.clone(),
                msg: format!(
                    "expected {} input terms, found {}",
                    sig.input_kinds.len(),
                    raw_inputs.len()
                ),
            });
        }
        let mut inputs = Vec::new();
        for ((tok, shape), kind) in raw_inputs.into_iter().zip(&sig.input_kinds) {
            match (kind, shape) {
                (InputKind::Predicate, InputShape::Ident) => {
                    inputs.push(InputTerm::Predicate(Arc::from(tok.as_str())));
                }
                (InputKind::Predicate, _) => {
                    return Err(HexError::SignatureMismatch {
                        name: name.clone(),
                        msg: format!("input '{tok}' must be a predicate name"),
                    });
                }
                (InputKind::Constant, InputShape::Variable) => {
                    inputs.push(InputTerm::Variable(Arc::from(tok.as_str())));
                }
                (InputKind::Constant, _) => inputs.push(InputTerm::Constant(Constant::new(tok))),
            }
        }

        self.expect(Tok::LParen, "'('")?;
        let mut outputs = Vec::new();
        if !matches!(self.peek(), Some(Tok::RParen)) {
            outputs.push(self.term()?);
            while self.eat(&Tok::Comma) {
                outputs.push(self.term()?);
            }
        }
        self.expect(Tok::RParen, "')'")?;
        if outputs.len() != sig.output_arity {
            return Err(HexError::SignatureMismatch {
                name: name.clone(),
                msg: format!(
                    "expected {} output terms, found {}",
                    sig.output_arity,
                    outputs.len()
                ),
            });
        }

        let eref = ExternalAtomRef {
            name: Arc::from(name.as_str()),
            inputs,
            outputs,
        };
        self.registry.check_binding(&eref)?;
        Ok(eref)
    }

    /// Input term token and its syntactic shape. Variables are only legal in
    /// constant-kind positions (resolved against the signature by the caller).
    fn input_token(&mut self) -> Result<(String, InputShape)> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok((s, InputShape::Ident)),
            Some(Tok::Int(s)) => Ok((s, InputShape::Other)),
            Some(Tok::Str(s)) => Ok((s, InputShape::Other)),
            Some(Tok::Var(s)) => Ok((s, InputShape::Variable)),
            _ => {
                self.pos -= 1;
                Err(self.error("expected constant or predicate name in input list"))
            }
        }
    }
}

/// Parse program text against the given oracle registry. External atom input
/// positions are typed by the registered signature.
pub fn parse_program(text: &str, registry: &OracleRegistry) -> Result<Program> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        registry,
    };
    let rules = p.program()?;
    Program::from_rules(rules)
}

/// Parse a single ground atom, e.g. for interpretation literals on the CLI.
pub fn parse_atom(text: &str) -> Result<OrdinaryAtom> {
    let toks = lex(text)?;
    let registry = OracleRegistry::new();
    let mut p = Parser {
        toks,
        pos: 0,
        registry: &registry,
    };
    let atom = p.atom()?;
    if p.peek().is_some() {
        return Err(p.error("trailing input after atom"));
    }
    if !atom.is_ground() {
        return Err(HexError::NotGround(format!("atom '{atom}'")));
    }
    Ok(atom)
}
