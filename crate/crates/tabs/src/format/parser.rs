//! Lexer and recursive-descent parser for the `.ta` network DSL.
//!
//! ```text
//! network    := automaton+
//! automaton  := "automaton" ID "{" decls init location+ transition* "}"
//! decls      := ("clock" ID ("," ID)* ";")? ("int" ID ("," ID)* ";")?
//! init       := "init" ID ";"
//! location   := "location" ID ("inv" constraint ("&&" constraint)*)? ";"
//! transition := ID "->" ID ("on" ("!"|"?")? ID)?
//!               ("when" constraint ("&&" constraint)*)?
//!               ("do" ID ":=" linexp ("," ID ":=" linexp)*)? ";"
//! constraint := linexp rel linexp
//! rel        := "<=" | "<" | "==" | "!=" | ">" | ">="
//! linexp     := "-"? term (("+"|"-") term)* ; term := integer ("*" ID)? | ID
//! ```
//!
//! `//` starts a line comment. Negation of compound constraints is not
//! part of the grammar; only atom-level relations exist.

use std::collections::BTreeMap;
use std::fmt;

use crate::constraint::{Atom, ConstraintSet, LinearTerm, Rel, Var, VarKind};
use crate::model::{Event, Location, Network, Polarity, Severity, TimedAutomaton, Transition};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseDiagnostic {
    pub span: SourceSpan,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {}: {}", self.span, kind, self.message)
    }
}

/// Successful parse: a validated network plus any non-fatal warnings.
#[derive(Debug)]
pub struct Parsed {
    pub network: Network,
    pub warnings: Vec<ParseDiagnostic>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Int(i64),
    LBrace,
    RBrace,
    Semi,
    Comma,
    Arrow,  // ->
    Assign, // :=
    Bang,
    Question,
    Star,
    Plus,
    Minus,
    Le,
    Lt,
    EqEq,
    NeRel, // !=
    Ge,
    Gt,
    AndAnd,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Question => f.write_str("`?`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Le => f.write_str("`<=`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::NeRel => f.write_str("`!=`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::AndAnd => f.write_str("`&&`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
    file: String,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, file: &str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            column: 1,
            file: file.to_string(),
        }
    }

    fn span(&self) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            line: self.line,
            column: self.column,
        }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek_byte()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(b)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_byte() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while let Some(b) = self.peek_byte() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, SourceSpan), ParseDiagnostic> {
        self.skip_trivia();
        let span = self.span();
        let Some(b) = self.peek_byte() else {
            return Ok((Tok::Eof, span));
        };
        let two = |lex: &Lexer<'a>| lex.src.get(lex.pos + 1).copied();
        let tok = match b {
            b'{' => {
                self.bump();
                Tok::LBrace
            }
            b'}' => {
                self.bump();
                Tok::RBrace
            }
            b';' => {
                self.bump();
                Tok::Semi
            }
            b',' => {
                self.bump();
                Tok::Comma
            }
            b'*' => {
                self.bump();
                Tok::Star
            }
            b'+' => {
                self.bump();
                Tok::Plus
            }
            b'?' => {
                self.bump();
                Tok::Question
            }
            b'-' => {
                self.bump();
                if self.peek_byte() == Some(b'>') {
                    self.bump();
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            b':' if two(self) == Some(b'=') => {
                self.bump();
                self.bump();
                Tok::Assign
            }
            b'<' => {
                self.bump();
                if self.peek_byte() == Some(b'=') {
                    self.bump();
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            b'>' => {
                self.bump();
                if self.peek_byte() == Some(b'=') {
                    self.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            b'=' if two(self) == Some(b'=') => {
                self.bump();
                self.bump();
                Tok::EqEq
            }
            b'!' => {
                self.bump();
                if self.peek_byte() == Some(b'=') {
                    self.bump();
                    Tok::NeRel
                } else {
                    Tok::Bang
                }
            }
            b'&' if two(self) == Some(b'&') => {
                self.bump();
                self.bump();
                Tok::AndAnd
            }
            b'0'..=b'9' => {
                let mut n: i64 = 0;
                while let Some(d) = self.peek_byte() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add((d - b'0') as i64))
                        .ok_or_else(|| ParseDiagnostic {
                            span: span.clone(),
                            message: "integer literal overflows".into(),
                            severity: Severity::Error,
                        })?;
                    self.bump();
                }
                Tok::Int(n)
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let mut s = String::new();
                while let Some(c) = self.peek_byte() {
                    if c.is_ascii_alphanumeric() || c == b'_' {
                        s.push(c as char);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => {
                return Err(ParseDiagnostic {
                    span,
                    message: format!("unexpected character `{}`", other as char),
                    severity: Severity::Error,
                })
            }
        };
        Ok((tok, span))
    }
}

struct Parser {
    tokens: Vec<(Tok, SourceSpan)>,
    pos: usize,
    diags: Vec<ParseDiagnostic>,
    /// Declared variables of the automaton currently being parsed.
    scope: BTreeMap<String, Var>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn peek_span(&self) -> SourceSpan {
        self.tokens[self.pos].1.clone()
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&mut self, span: SourceSpan, message: impl Into<String>) {
        self.diags.push(ParseDiagnostic {
            span,
            message: message.into(),
            severity: Severity::Error,
        });
    }

    fn fail<T>(&mut self, message: impl Into<String>) -> Result<T, ()> {
        let span = self.peek_span();
        self.error_at(span, message);
        Err(())
    }

    fn expect(&mut self, want: Tok) -> Result<SourceSpan, ()> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            let got = self.peek().clone();
            self.fail(format!("expected {want}, found {got}"))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<SourceSpan, ()> {
        match self.peek().clone() {
            Tok::Ident(s) if s == kw => Ok(self.bump().1),
            got => self.fail(format!("expected `{kw}`, found {got}")),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, SourceSpan), ()> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.bump().1;
                Ok((s, span))
            }
            got => self.fail(format!("expected {what}, found {got}")),
        }
    }

    /// Resolve a declared variable; undeclared names are reported and
    /// stood in for by an integer variable so parsing can continue.
    fn resolve_var(&mut self, name: &str, span: SourceSpan) -> Var {
        if let Some(v) = self.scope.get(name) {
            v.clone()
        } else {
            self.error_at(span, format!("undeclared variable `{name}`"));
            Var::int(name)
        }
    }

    fn parse_network(&mut self) -> Result<Network, ()> {
        let mut components = Vec::new();
        if !self.at_keyword("automaton") {
            return self.fail("expected `automaton`");
        }
        while self.at_keyword("automaton") {
            components.push(self.parse_automaton()?);
        }
        if *self.peek() != Tok::Eof {
            let got = self.peek().clone();
            return self.fail(format!("expected `automaton` or end of input, found {got}"));
        }
        Ok(Network { components })
    }

    fn parse_automaton(&mut self) -> Result<TimedAutomaton, ()> {
        self.expect_keyword("automaton")?;
        let (name, _) = self.expect_ident("automaton name")?;
        self.expect(Tok::LBrace)?;

        self.scope.clear();
        let mut vars = Vec::new();
        for (kw, kind) in [("clock", VarKind::Clock), ("int", VarKind::Int)] {
            if self.at_keyword(kw) {
                self.bump();
                loop {
                    let (id, span) = self.expect_ident("variable name")?;
                    let v = Var {
                        name: id.clone(),
                        kind,
                    };
                    if self.scope.insert(id.clone(), v.clone()).is_some() {
                        self.error_at(span, format!("duplicate variable `{id}`"));
                    } else {
                        vars.push(v);
                    }
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Semi)?;
            }
        }

        self.expect_keyword("init")?;
        let (initial, init_span) = self.expect_ident("initial location")?;
        self.expect(Tok::Semi)?;

        let mut locations: Vec<Location> = Vec::new();
        while self.at_keyword("location") {
            self.bump();
            let (id, span) = self.expect_ident("location name")?;
            let invariant = if self.at_keyword("inv") {
                self.bump();
                self.parse_conjunction()?
            } else {
                ConstraintSet::truth()
            };
            self.expect(Tok::Semi)?;
            if locations.iter().any(|l| l.id == id) {
                self.error_at(span, format!("duplicate location `{id}`"));
            } else {
                locations.push(Location::new(id, invariant));
            }
        }
        if locations.is_empty() {
            return self.fail("expected `location`");
        }
        if !locations.iter().any(|l| l.id == initial) {
            self.error_at(
                init_span,
                format!("initial location `{initial}` is not declared"),
            );
        }

        let mut transitions = Vec::new();
        let mut events = std::collections::BTreeSet::new();
        while matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) {
            let (source, src_span) = self.expect_ident("location name")?;
            self.expect(Tok::Arrow)?;
            let (target, tgt_span) = self.expect_ident("location name")?;
            for (id, span) in [(&source, src_span), (&target, tgt_span)] {
                if !locations.iter().any(|l| l.id == *id) {
                    self.error_at(span, format!("unknown location `{id}`"));
                }
            }

            let event = if self.at_keyword("on") {
                self.bump();
                let polarity = match self.peek() {
                    Tok::Bang => {
                        self.bump();
                        Polarity::Send
                    }
                    Tok::Question => {
                        self.bump();
                        Polarity::Receive
                    }
                    _ => Polarity::Internal,
                };
                let (channel, _) = self.expect_ident("channel name")?;
                events.insert(channel.clone());
                Some(Event { channel, polarity })
            } else {
                None
            };

            let guard = if self.at_keyword("when") {
                self.bump();
                self.parse_conjunction()?
            } else {
                ConstraintSet::truth()
            };

            let mut resets = Vec::new();
            if self.at_keyword("do") {
                self.bump();
                loop {
                    let (id, span) = self.expect_ident("variable name")?;
                    let var = self.resolve_var(&id, span);
                    self.expect(Tok::Assign)?;
                    let value = self.parse_linexp()?;
                    resets.push((var, value));
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::Semi)?;

            transitions.push(Transition {
                id: transitions.len(),
                source,
                target,
                event,
                guard,
                resets,
            });
        }

        self.expect(Tok::RBrace)?;
        Ok(TimedAutomaton {
            name,
            locations,
            initial,
            events,
            vars,
            transitions,
        })
    }

    fn parse_conjunction(&mut self) -> Result<ConstraintSet, ()> {
        let mut atoms = vec![self.parse_constraint()?];
        while *self.peek() == Tok::AndAnd {
            self.bump();
            atoms.push(self.parse_constraint()?);
        }
        Ok(ConstraintSet::from_atoms(atoms))
    }

    fn parse_constraint(&mut self) -> Result<Atom, ()> {
        let lhs = self.parse_linexp()?;
        let rel = self.bump();
        let rhs = self.parse_linexp()?;
        Ok(match rel.0 {
            Tok::Le => Atom::le(lhs, rhs),
            Tok::Lt => Atom::lt(lhs, rhs),
            Tok::Ge => Atom::le(rhs, lhs),
            Tok::Gt => Atom::lt(rhs, lhs),
            Tok::EqEq => Atom::eq(lhs, rhs),
            Tok::NeRel => Atom::new(lhs.sub(&rhs), Rel::Ne),
            got => {
                self.error_at(rel.1, format!("expected a relation, found {got}"));
                return Err(());
            }
        })
    }

    fn parse_linexp(&mut self) -> Result<LinearTerm, ()> {
        let mut negate = false;
        if *self.peek() == Tok::Minus {
            self.bump();
            negate = true;
        }
        let mut term = self.parse_term()?;
        if negate {
            term = term.neg();
        }
        loop {
            let sub = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_term()?;
            term = if sub { term.sub(&rhs) } else { term.add(&rhs) };
        }
        Ok(term)
    }

    fn parse_term(&mut self) -> Result<LinearTerm, ()> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if *self.peek() == Tok::Star {
                    self.bump();
                    let (id, span) = self.expect_ident("variable name")?;
                    let v = self.resolve_var(&id, span);
                    Ok(LinearTerm::scaled_var(n, v))
                } else {
                    Ok(LinearTerm::constant(n))
                }
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.bump().1;
                let v = self.resolve_var(&s, span);
                Ok(LinearTerm::var(v))
            }
            got => self.fail(format!("expected a variable or integer, found {got}")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "automaton" | "clock" | "int" | "init" | "location" | "inv" | "on" | "when" | "do"
    )
}

/// Parse a network description, running all model-level validation.
pub fn parse(source: &str, file: &str) -> Result<Parsed, Vec<ParseDiagnostic>> {
    let mut lexer = Lexer::new(source, file);
    let mut tokens = Vec::new();
    loop {
        match lexer.next() {
            Ok((tok, span)) => {
                let eof = tok == Tok::Eof;
                tokens.push((tok, span));
                if eof {
                    break;
                }
            }
            Err(d) => return Err(vec![d]),
        }
    }

    let mut parser = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
        scope: BTreeMap::new(),
    };
    let network = parser.parse_network();
    let mut diags = parser.diags;
    let network = match network {
        Ok(n) => n,
        Err(()) => return Err(diags),
    };
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(diags);
    }

    // structural validation; these diagnostics have no better anchor
    // than the start of the input
    let origin = SourceSpan {
        file: file.to_string(),
        line: 1,
        column: 1,
    };
    for a in &network.components {
        for d in a.validate() {
            diags.push(ParseDiagnostic {
                span: origin.clone(),
                message: d.message,
                severity: d.severity,
            });
        }
    }
    for d in network.validate() {
        diags.push(ParseDiagnostic {
            span: origin.clone(),
            message: d.message,
            severity: d.severity,
        });
    }
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(diags);
    }
    Ok(Parsed {
        network,
        warnings: diags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Atom, LinearTerm, Var};
    use crate::format::printer::pretty_print_network;

    const EXAMPLE: &str = "automaton A { clock x, y; init l0; \
        location l0 inv y <= 1; location l1 inv x <= y; location l2; \
        l0 -> l0 do x := 0; l0 -> l1; l1 -> l2 when y < x; }";

    #[test]
    fn parses_the_three_location_example() {
        let parsed = parse(EXAMPLE, "ex.ta").unwrap();
        let a = &parsed.network.components[0];
        assert_eq!(a.locations.len(), 3);
        let expected = ConstraintSet::from_atoms([Atom::le(
            LinearTerm::var(Var::clock("y")),
            LinearTerm::constant(1),
        )]);
        assert_eq!(a.location("l0").unwrap().original_invariant, expected);
        assert_eq!(a.transitions.len(), 3);
        assert_eq!(a.transitions[0].resets.len(), 1);
    }

    #[test]
    fn empty_input_reports_expected_automaton() {
        let err = parse("", "empty.ta").unwrap_err();
        assert!(err[0].message.contains("expected `automaton`"));
    }

    #[test]
    fn undeclared_guard_variable_is_named_with_a_span() {
        let src = "automaton A { clock x; init l0; location l0; l0 -> l0 when z < x; }";
        let err = parse(src, "bad.ta").unwrap_err();
        assert!(err.iter().any(|d| d.message.contains("`z`")));
        assert_eq!(err[0].span.line, 1);
        assert!(err[0].span.column > 1);
    }

    #[test]
    fn duplicate_location_is_rejected() {
        let src = "automaton A { init l0; location l0; location l0; }";
        let err = parse(src, "dup.ta").unwrap_err();
        assert!(err.iter().any(|d| d.message.contains("duplicate location")));
    }

    #[test]
    fn shared_variable_across_components_is_rejected() {
        let src = "automaton A { clock x; init l0; location l0; } \
                   automaton B { clock x; init s0; location s0; }";
        assert!(parse(src, "shared.ta").is_err());
    }

    #[test]
    fn round_trips_through_the_pretty_printer() {
        for src in [
            EXAMPLE,
            include_str!("../../fixtures/ex1.ta"),
            include_str!("../../fixtures/ex2.ta"),
            "automaton A { clock x; int n; init l0; location l0 inv 2 * n + x <= 3; \
             l0 -> l0 on !a when n >= 1 && x < 2 do n := n - 1, x := 0; }",
        ] {
            let first = parse(src, "rt.ta").unwrap().network;
            let printed = pretty_print_network(&first);
            let second = parse(&printed, "rt.ta").unwrap().network;
            assert_eq!(first, second, "round-trip changed the model:\n{printed}");
        }
    }
}
