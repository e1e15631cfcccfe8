//! Grammar-level checker for the DOT language subset a digraph may use:
//! `[strict] digraph [ID] { stmt_list }` with node, edge, attribute and
//! `ID = ID` statements. Written from the Graphviz grammar, independent of
//! the exporter.

use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    Semi,
    Comma,
    Colon,
    Arrow,
    UndirectedEdge,
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '{' => { out.push(Tok::LBrace); i += 1 }
            '}' => { out.push(Tok::RBrace); i += 1 }
            '[' => { out.push(Tok::LBracket); i += 1 }
            ']' => { out.push(Tok::RBracket); i += 1 }
            '=' => { out.push(Tok::Eq); i += 1 }
            ';' => { out.push(Tok::Semi); i += 1 }
            ',' => { out.push(Tok::Comma); i += 1 }
            ':' => { out.push(Tok::Colon); i += 1 }
            '-' if chars.get(i + 1) == Some(&'>') => { out.push(Tok::Arrow); i += 2 }
            '-' if chars.get(i + 1) == Some(&'-') => { out.push(Tok::UndirectedEdge); i += 2 }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('"') => { i += 1; break }
                        Some('\\') if matches!(chars.get(i + 1), Some('"') | Some('\\')) => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some('\n') => return Err("newline inside string".into()),
                        Some(&ch) => { s.push(ch); i += 1 }
                    }
                }
                out.push(Tok::Id(s));
            }
            c if c.is_ascii_alphabetic() || c == '_' || !c.is_ascii() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || !chars[i].is_ascii()) {
                    i += 1;
                }
                out.push(Tok::Id(chars[start..i].iter().collect()));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                if s.matches('.').count() > 1 || s == "-" || s == "." {
                    return Err(format!("bad numeral `{s}`"));
                }
                out.push(Tok::Id(s));
            }
            other => return Err(format!("unexpected character `{other}` at {i}")),
        }
    }
    Ok(out)
}

#[derive(Debug, Default)]
pub struct DotGraph {
    pub nodes: BTreeSet<String>,
    pub node_statements: usize,
    /// (from, to, label)
    pub edges: Vec<(String, String, Option<String>)>,
    /// (node, shape)
    pub shapes: Vec<(String, String)>,
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(format!("expected {want:?}, found {other:?}")),
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Tok::Id(s)) => Ok(s),
            other => Err(format!("expected ID, found {other:?}")),
        }
    }

    fn keyword(s: &str, kw: &str) -> bool {
        s.eq_ignore_ascii_case(kw)
    }

    fn attr_lists(&mut self) -> Result<Vec<(String, String)>, String> {
        let mut attrs = Vec::new();
        while self.peek() == Some(&Tok::LBracket) {
            self.next();
            while self.peek() != Some(&Tok::RBracket) {
                let k = self.id()?;
                self.expect(Tok::Eq)?;
                let v = self.id()?;
                attrs.push((k, v));
                if matches!(self.peek(), Some(Tok::Comma) | Some(Tok::Semi)) {
                    self.next();
                }
            }
            self.expect(Tok::RBracket)?;
        }
        Ok(attrs)
    }

    fn node_id(&mut self) -> Result<String, String> {
        let id = self.id()?;
        if self.peek() == Some(&Tok::Colon) {
            self.next();
            self.id()?;
            if self.peek() == Some(&Tok::Colon) {
                self.next();
                self.id()?;
            }
        }
        Ok(id)
    }

    fn graph(&mut self) -> Result<DotGraph, String> {
        let mut g = DotGraph::default();
        let mut first = self.id()?;
        if Self::keyword(&first, "strict") {
            first = self.id()?;
        }
        if !Self::keyword(&first, "digraph") {
            return Err(format!("expected `digraph`, found `{first}`"));
        }
        if let Some(Tok::Id(_)) = self.peek() {
            self.next();
        }
        self.expect(Tok::LBrace)?;
        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.next();
                    break;
                }
                None => return Err("missing closing brace".into()),
                _ => {}
            }
            let head = self.id()?;
            if ["graph", "node", "edge"].iter().any(|k| Self::keyword(&head, k)) && self.peek() == Some(&Tok::LBracket) {
                self.attr_lists()?;
            } else if self.peek() == Some(&Tok::Eq) {
                self.next();
                self.id()?;
            } else {
                self.pos -= 1;
                let from = self.node_id()?;
                if self.peek() == Some(&Tok::UndirectedEdge) {
                    return Err("`--` edge in a digraph".into());
                }
                if self.peek() == Some(&Tok::Arrow) {
                    let mut chain = vec![from];
                    while self.peek() == Some(&Tok::Arrow) {
                        self.next();
                        chain.push(self.node_id()?);
                    }
                    let attrs = self.attr_lists()?;
                    let label = attrs.iter().find(|(k, _)| k == "label").map(|(_, v)| v.clone());
                    for pair in chain.windows(2) {
                        g.nodes.insert(pair[0].clone());
                        g.nodes.insert(pair[1].clone());
                        g.edges.push((pair[0].clone(), pair[1].clone(), label.clone()));
                    }
                } else {
                    let attrs = self.attr_lists()?;
                    if let Some((_, shape)) = attrs.iter().find(|(k, _)| k == "shape") {
                        g.shapes.push((from.clone(), shape.clone()));
                    }
                    g.nodes.insert(from);
                    g.node_statements += 1;
                }
            }
            if self.peek() == Some(&Tok::Semi) {
                self.next();
            }
        }
        if self.pos != self.toks.len() {
            return Err("trailing tokens after graph".into());
        }
        Ok(g)
    }
}

pub fn parse_dot(text: &str) -> Result<DotGraph, String> {
    Parser { toks: lex(text)?, pos: 0 }.graph()
}

#[test]
fn checker_accepts_and_rejects() {
    let g = parse_dot("digraph G { a; \"b c\" [shape=box]; a -> \"b c\" -> d [label=\"x\"]; }").unwrap();
    assert_eq!(g.nodes.len(), 3);
    assert_eq!(g.edges.len(), 2);
    assert_eq!(g.node_statements, 2);
    assert!(parse_dot("digraph { a -- b }").is_err());
    assert!(parse_dot("digraph { a -> }").is_err());
    assert!(parse_dot("graph { a }").is_err());
    assert!(parse_dot("digraph { \"open }").is_err());
    assert!(parse_dot("digraph { a [shape] }").is_err());
}
