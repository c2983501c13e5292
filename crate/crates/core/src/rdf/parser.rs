use std::collections::BTreeMap;

use super::{Format, Graph, Term, Triple};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Iri(String),
    PName(String, String),
    Literal(String, Option<Box<Tok>>),
    Placeholder,
    A,
    PrefixKw,
    Dot,
    Semicolon,
    Comma,
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn syntax<T>(pos: Pos, message: impl Into<String>) -> Result<T> {
    Err(Error::Syntax {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    })
}

fn is_pn_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '.'
}

struct Lexer {
    chars: Vec<char>,
    at: usize,
    line: usize,
    column: usize,
    format: Format,
}

impl Lexer {
    fn new(text: &str, format: Format) -> Self {
        Self {
            chars: text.chars().collect(),
            at: 0,
            line: 1,
            column: 1,
            format,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.at += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(|&c| pred(c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while !matches!(self.bump(), Some('\n') | None) {}
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<(Tok, Pos)>> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let turtle = self.format == Format::TurtleSubset;
        let tok = match c {
            '<' => Tok::Iri(self.iri_ref()?),
            '"' => self.literal()?,
            '.' => {
                self.bump();
                Tok::Dot
            }
            ';' if turtle => {
                self.bump();
                Tok::Semicolon
            }
            ',' if turtle => {
                self.bump();
                Tok::Comma
            }
            '?' => {
                let marks = self.take_while(|c| c == '?');
                if marks.len() != 3 || self.peek().is_some_and(is_pn_char) {
                    return syntax(pos, "placeholder must be exactly `???`");
                }
                Tok::Placeholder
            }
            '@' if turtle => {
                self.bump();
                match self.take_while(|c| c.is_ascii_alphabetic()).as_str() {
                    "prefix" => Tok::PrefixKw,
                    other => return syntax(pos, format!("unsupported directive @{other}")),
                }
            }
            c if turtle && (c.is_alphanumeric() || c == ':' || c == '_') => self.name()?,
            c => return syntax(pos, format!("unexpected character {c:?}")),
        };
        Ok(Some((tok, pos)))
    }

    fn iri_ref(&mut self) -> Result<String> {
        let pos = self.pos();
        self.bump();
        let mut iri = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(iri),
                Some(c) if c.is_whitespace() || c == '<' || c == '"' => {
                    return syntax(pos, format!("illegal character {c:?} in IRI"))
                }
                Some(c) => iri.push(c),
                None => return syntax(pos, "unterminated IRI"),
            }
        }
    }

    fn literal(&mut self) -> Result<Tok> {
        let pos = self.pos();
        self.bump();
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => lexical.push(self.escape(pos)?),
                Some('\n') | None => return syntax(pos, "unterminated literal"),
                Some(c) => lexical.push(c),
            }
        }
        match self.peek() {
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') {
                    return syntax(pos, "expected `^^` before datatype");
                }
                let dt_pos = self.pos();
                let dt = match self.peek() {
                    Some('<') => Tok::Iri(self.iri_ref()?),
                    Some(_) if self.format == Format::TurtleSubset => match self.name()? {
                        tok @ Tok::PName(..) => tok,
                        _ => return syntax(dt_pos, "datatype must be an IRI"),
                    },
                    _ => return syntax(dt_pos, "datatype must be an IRI"),
                };
                Ok(Tok::Literal(lexical, Some(Box::new(dt))))
            }
            Some('@') => syntax(self.pos(), "language tags are not supported"),
            _ => Ok(Tok::Literal(lexical, None)),
        }
    }

    fn escape(&mut self, pos: Pos) -> Result<char> {
        let c = match self.bump() {
            Some('t') => '\t',
            Some('b') => '\u{8}',
            Some('n') => '\n',
            Some('r') => '\r',
            Some('f') => '\u{c}',
            Some('"') => '"',
            Some('\'') => '\'',
            Some('\\') => '\\',
            Some(u @ ('u' | 'U')) => {
                let width = if u == 'u' { 4 } else { 8 };
                let hex: String = (0..width).filter_map(|_| self.bump()).collect();
                let code = u32::from_str_radix(&hex, 16)
                    .ok()
                    .filter(|_| hex.len() == width);
                match code.and_then(char::from_u32) {
                    Some(c) => c,
                    None => return syntax(pos, format!("bad unicode escape \\{u}{hex}")),
                }
            }
            other => return syntax(pos, format!("bad escape sequence after `\\`: {other:?}")),
        };
        Ok(c)
    }

    /// Prefixed name or the keyword `a`.
    fn name(&mut self) -> Result<Tok> {
        let pos = self.pos();
        let prefix = self.take_while(is_pn_char);
        if self.peek() != Some(':') {
            return match prefix.as_str() {
                "a" => Ok(Tok::A),
                _ => syntax(pos, format!("bare word `{prefix}` is not a term")),
            };
        }
        self.bump();
        if prefix.ends_with('.') {
            return syntax(pos, "prefix may not end with `.`");
        }
        let start = self.at;
        let mut end = start;
        while self.chars.get(end).copied().is_some_and(|c| is_pn_char(c) || c == ':') {
            end += 1;
        }
        // Trailing dots terminate the statement rather than the name.
        while end > start && self.chars[end - 1] == '.' {
            end -= 1;
        }
        let local: String = self.chars[start..end].iter().collect();
        while self.at < end {
            self.bump();
        }
        Ok(Tok::PName(prefix, local))
    }
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    at: usize,
    eof: Pos,
    prefixes: BTreeMap<String, String>,
    next_slot: u32,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.tokens.get(self.at).map(|(_, p)| *p).unwrap_or(self.eof)
    }

    fn next(&mut self) -> Result<(Tok, Pos)> {
        match self.tokens.get(self.at) {
            Some(tp) => {
                self.at += 1;
                Ok(tp.clone())
            }
            None => syntax(self.eof, "unexpected end of input"),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let (tok, pos) = self.next()?;
        if tok != want {
            return syntax(pos, format!("expected {what}, found {}", describe(&tok)));
        }
        Ok(())
    }

    fn resolve(&self, prefix: &str, local: &str, pos: Pos) -> Result<String> {
        match self.prefixes.get(prefix) {
            Some(ns) => Ok(format!("{ns}{local}")),
            None => Err(Error::UnresolvedPrefix {
                prefix: prefix.to_owned(),
                line: pos.line,
                column: pos.column,
            }),
        }
    }

    fn iri(&self, tok: &Tok, pos: Pos) -> Result<Option<String>> {
        Ok(match tok {
            Tok::Iri(iri) => Some(iri.clone()),
            Tok::PName(p, l) => Some(self.resolve(p, l, pos)?),
            _ => None,
        })
    }

    fn term(&mut self, tok: Tok, pos: Pos) -> Result<Term> {
        if let Some(iri) = self.iri(&tok, pos)? {
            return Ok(Term::Iri(iri));
        }
        match tok {
            Tok::Literal(lexical, dt) => {
                let datatype = match dt {
                    Some(dt) => self.iri(&dt, pos)?,
                    None => None,
                };
                Ok(Term::Literal { lexical, datatype })
            }
            Tok::Placeholder => {
                let id = self.next_slot;
                self.next_slot += 1;
                Ok(Term::Placeholder(id))
            }
            other => syntax(pos, format!("expected a term, found {}", describe(&other))),
        }
    }

    fn subject(&mut self) -> Result<Term> {
        let (tok, pos) = self.next()?;
        if matches!(tok, Tok::Literal(..)) {
            return Err(Error::LiteralSubject {
                line: pos.line,
                column: pos.column,
            });
        }
        self.term(tok, pos)
    }

    fn predicate(&mut self) -> Result<Term> {
        let (tok, pos) = self.next()?;
        if tok == Tok::A {
            return Ok(Term::iri(crate::ns::RDF_TYPE));
        }
        match self.iri(&tok, pos)? {
            Some(iri) => Ok(Term::Iri(iri)),
            None => syntax(pos, format!("predicate must be an IRI, found {}", describe(&tok))),
        }
    }

    fn object(&mut self) -> Result<Term> {
        let (tok, pos) = self.next()?;
        self.term(tok, pos)
    }

    fn prefix_directive(&mut self) -> Result<()> {
        let (tok, pos) = self.next()?;
        let Tok::PName(prefix, local) = tok else {
            return syntax(pos, "expected `prefix:` after @prefix");
        };
        if !local.is_empty() {
            return syntax(pos, "expected `prefix:` after @prefix");
        }
        let (tok, pos) = self.next()?;
        let Tok::Iri(ns) = tok else {
            return syntax(pos, "expected <namespace IRI> in @prefix");
        };
        self.expect(Tok::Dot, "`.` after @prefix")?;
        self.prefixes.insert(prefix, ns);
        Ok(())
    }

    fn statements(&mut self, format: Format, graph: &mut Graph) -> Result<()> {
        while let Some(tok) = self.peek() {
            if *tok == Tok::PrefixKw {
                self.at += 1;
                self.prefix_directive()?;
                continue;
            }
            let subject = self.subject()?;
            loop {
                let predicate = self.predicate()?;
                loop {
                    let object = self.object()?;
                    graph.insert(Triple::new(subject.clone(), predicate.clone(), object)?);
                    if format == Format::TurtleSubset && self.peek() == Some(&Tok::Comma) {
                        self.at += 1;
                        continue;
                    }
                    break;
                }
                if format == Format::TurtleSubset && self.peek() == Some(&Tok::Semicolon) {
                    self.at += 1;
                    // `;` directly before `.` is allowed
                    if self.peek() == Some(&Tok::Dot) {
                        break;
                    }
                    continue;
                }
                break;
            }
            let pos = self.pos();
            match self.next() {
                Ok((Tok::Dot, _)) => {}
                Ok((tok, pos)) => {
                    return syntax(pos, format!("expected `.`, found {}", describe(&tok)))
                }
                Err(_) => return syntax(pos, "expected `.` before end of input"),
            }
        }
        Ok(())
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Iri(i) => format!("<{i}>"),
        Tok::PName(p, l) => format!("{p}:{l}"),
        Tok::Literal(l, _) => format!("literal {l:?}"),
        Tok::Placeholder => "`???`".into(),
        Tok::A => "`a`".into(),
        Tok::PrefixKw => "@prefix".into(),
        Tok::Dot => "`.`".into(),
        Tok::Semicolon => "`;`".into(),
        Tok::Comma => "`,`".into(),
    }
}

/// Parses N-Triples or the supported Turtle subset. Each `???` in subject or
/// object position becomes a placeholder with slot ids in document order.
pub fn parse(text: &str, format: Format) -> Result<Graph> {
    let mut lexer = Lexer::new(text, format);
    let mut tokens = Vec::new();
    while let Some(tp) = lexer.next_token()? {
        tokens.push(tp);
    }
    let mut parser = Parser {
        tokens,
        at: 0,
        eof: lexer.pos(),
        prefixes: BTreeMap::new(),
        next_slot: 0,
    };
    let mut graph = Graph::new();
    parser.statements(format, &mut graph)?;
    for (p, ns) in parser.prefixes {
        graph.set_prefix(p, ns);
    }
    Ok(graph)
}

/// Parses a single N-Triples term (`<iri>`, `"lex"^^<dt>`, `"lex"` or `???`).
pub fn parse_term(text: &str) -> Result<Term> {
    let mut lexer = Lexer::new(text, Format::NTriples);
    let (tok, pos) = match lexer.next_token()? {
        Some(tp) => tp,
        None => return syntax(lexer.pos(), "empty term"),
    };
    if let Some((extra, pos)) = lexer.next_token()? {
        return syntax(pos, format!("trailing {} after term", describe(&extra)));
    }
    let mut parser = Parser {
        tokens: Vec::new(),
        at: 0,
        eof: pos,
        prefixes: BTreeMap::new(),
        next_slot: 0,
    };
    parser.term(tok, pos)
}
