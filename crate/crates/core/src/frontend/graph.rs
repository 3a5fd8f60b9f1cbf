//! Proof graphs in the textual form
//! `-> inv [l1:P:sup1, sup2; l2:sup3 {hint}] { smp : pre | post }`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which consecution premises an annotation applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PremiseClass {
    /// Same-thread consecution (acting thread is one of the formula's).
    N,
    /// Fresh-thread consecution.
    E,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocSel {
    Any,
    At(u32),
}

impl LocSel {
    pub fn matches(self, loc: u32) -> bool {
        match self {
            LocSel::Any => true,
            LocSel::At(l) => l == loc,
        }
    }
}

/// A tactic hint `{ smp : pre | post }`, kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TacticHint {
    pub raw: String,
    pub smp: Option<String>,
    pub pre: Vec<String>,
    pub post: Vec<String>,
}

impl TacticHint {
    pub fn parse(raw: &str) -> TacticHint {
        let raw = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        let (smp, rest) = match raw.split_once(':') {
            Some((a, b)) => (Some(a.trim().to_string()).filter(|s| !s.is_empty()), b),
            None => (None, raw.as_str()),
        };
        let (pre, post) = match rest.split_once('|') {
            Some((a, b)) => (a, b),
            None => (rest, ""),
        };
        let toks = |s: &str| -> Vec<String> {
            s.split([',', ' ']).map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
        };
        TacticHint { smp, pre: toks(pre), post: toks(post), raw: raw.clone() }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.pre.iter().chain(self.post.iter()).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub loc: LocSel,
    pub class: PremiseClass,
    pub supports: Vec<String>,
    pub hint: Option<TacticHint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub name: String,
    pub annotations: Vec<Annotation>,
    pub hint: Option<TacticHint>,
}

impl GraphNode {
    /// Distinct support names in order of first mention.
    pub fn supports(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in &self.annotations {
            for s in &a.supports {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofGraph {
    pub nodes: Vec<GraphNode>,
}

impl ProofGraph {
    pub fn node(&self, name: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Support edges `(from, to)`: `from` supports `to`.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for s in n.supports() {
                out.push((s, n.name.clone()));
            }
        }
        out
    }

    /// Node order in which every acyclic support precedes its user.
    /// Members of cycles keep file order.
    pub fn schedule(&self) -> Vec<String> {
        let mut done: BTreeSet<String> = BTreeSet::new();
        let mut out = Vec::new();
        let mut remaining: Vec<&GraphNode> = self.nodes.iter().collect();
        while !remaining.is_empty() {
            let pos = remaining
                .iter()
                .position(|n| n.supports().iter().all(|s| s == &n.name || done.contains(s)))
                .unwrap_or(0);
            let n = remaining.remove(pos);
            done.insert(n.name.clone());
            out.push(n.name.clone());
        }
        out
    }
}

struct Cursor<'a> {
    chars: Vec<char>,
    i: usize,
    origin: &'a str,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.chars.len() {
            let c = self.chars[self.i];
            if c == '#' {
                while self.i < self.chars.len() && self.chars[self.i] != '\n' {
                    self.i += 1;
                }
            } else if c.is_whitespace() {
                self.i += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.i).copied()
    }

    fn pos(&self) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.chars[..self.i.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn err(&self, expected: &str) -> Error {
        let (l, c) = self.pos();
        let found = match self.chars.get(self.i) {
            Some(c) => format!("`{c}`"),
            None => "end of input".into(),
        };
        Error::parse(self.origin, l, c, format!("{expected}, found {found}"))
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("`{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.i;
        while self.i < self.chars.len() && (self.chars[self.i].is_alphanumeric() || self.chars[self.i] == '_') {
            self.i += 1;
        }
        if start == self.i || self.chars[start].is_ascii_digit() {
            self.i = start;
            return Err(self.err("identifier"));
        }
        Ok(self.chars[start..self.i].iter().collect())
    }

    fn hint(&mut self) -> Result<Option<TacticHint>> {
        if !self.eat('{') {
            return Ok(None);
        }
        let start = self.i;
        while self.i < self.chars.len() && self.chars[self.i] != '}' {
            if self.chars[self.i] == '{' {
                return Err(self.err("`}`"));
            }
            self.i += 1;
        }
        let raw: String = self.chars[start..self.i].iter().collect();
        self.expect('}')?;
        Ok(Some(TacticHint::parse(&raw)))
    }

    fn loc_sel(&mut self) -> Result<LocSel> {
        if self.eat('*') {
            return Ok(LocSel::Any);
        }
        self.skip_ws();
        let start = self.i;
        while self.i < self.chars.len() && self.chars[self.i].is_ascii_digit() {
            self.i += 1;
        }
        let text: String = self.chars[start..self.i].iter().collect();
        match text.parse::<u32>() {
            Ok(l) if l >= 1 => Ok(LocSel::At(l)),
            _ => {
                self.i = start;
                Err(self.err("location or `*`"))
            }
        }
    }

    fn annotation(&mut self) -> Result<Annotation> {
        let loc = self.loc_sel()?;
        self.expect(':')?;
        let save = self.i;
        let mut class = PremiseClass::All;
        if let Ok(word) = self.ident() {
            if self.eat(':') {
                class = match word.as_str() {
                    "N" => PremiseClass::N,
                    "E" => PremiseClass::E,
                    _ => {
                        self.i = save;
                        self.skip_ws();
                        return Err(self.err("premise class `N` or `E`"));
                    }
                };
            } else {
                self.i = save;
            }
        } else {
            self.i = save;
        }
        let mut supports = vec![self.ident()?];
        while self.eat(',') {
            supports.push(self.ident()?);
        }
        let hint = self.hint()?;
        Ok(Annotation { loc, class, supports, hint })
    }
}

pub fn parse_proof_graph(src: &str, origin: &str) -> Result<ProofGraph> {
    let mut c = Cursor { chars: src.chars().collect(), i: 0, origin };
    let mut g = ProofGraph::default();
    while c.peek().is_some() {
        c.expect('-')?;
        if c.chars.get(c.i) != Some(&'>') {
            return Err(c.err("`->`"));
        }
        c.i += 1;
        let name = c.ident()?;
        if g.node(&name).is_some() {
            return Err(c.err(&format!("a new node instead of duplicate `{name}`")));
        }
        let mut annotations = Vec::new();
        if c.eat('[') {
            if !c.eat(']') {
                loop {
                    annotations.push(c.annotation()?);
                    if c.eat(';') {
                        if c.eat(']') {
                            break;
                        }
                        continue;
                    }
                    c.expect(']')?;
                    break;
                }
            }
        }
        let hint = c.hint()?;
        g.nodes.push(GraphNode { name, annotations, hint });
    }
    for n in &g.nodes {
        for s in n.supports() {
            if g.node(&s).is_none() {
                return Err(Error::DanglingSupportName(s));
            }
        }
    }
    Ok(g)
}

impl fmt::Display for TacticHint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.raw)
    }
}

impl fmt::Display for ProofGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            write!(f, "-> {}", n.name)?;
            if !n.annotations.is_empty() {
                f.write_str(" [")?;
                for (k, a) in n.annotations.iter().enumerate() {
                    if k > 0 {
                        f.write_str(";\n    ")?;
                    }
                    match a.loc {
                        LocSel::Any => f.write_str("*:")?,
                        LocSel::At(l) => write!(f, "{l}:")?,
                    }
                    match a.class {
                        PremiseClass::N => f.write_str("N:")?,
                        PremiseClass::E => f.write_str("E:")?,
                        PremiseClass::All => {}
                    }
                    f.write_str(&a.supports.join(", "))?;
                    if let Some(h) = &a.hint {
                        write!(f, " {h}")?;
                    }
                }
                f.write_str("]")?;
            }
            if let Some(h) = &n.hint {
                write!(f, " {h}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_node_with_hint() {
        let g = parse_proof_graph("-> fullDisjoint {pruning:reduce2|simpl}", "g").unwrap();
        assert_eq!(g.nodes.len(), 1);
        let n = &g.nodes[0];
        assert!(n.annotations.is_empty());
        let h = n.hint.as_ref().unwrap();
        assert_eq!(h.raw, "pruning:reduce2|simpl");
        assert_eq!(h.smp.as_deref(), Some("pruning"));
        assert_eq!(h.pre, ["reduce2"]);
        assert_eq!(h.post, ["simpl"]);
    }

    #[test]
    fn annotated_node_yields_edges() {
        let src = "-> fullNext\n-> fullLock [28:N:fullNext;\n 29:N:fullNext\n ] {pruning:reduce2|simpl}";
        let g = parse_proof_graph(src, "g").unwrap();
        let lock = g.node("fullLock").unwrap();
        assert_eq!(lock.annotations[0].loc, LocSel::At(28));
        assert_eq!(lock.annotations[0].class, PremiseClass::N);
        assert_eq!(g.edges(), vec![("fullNext".to_string(), "fullLock".to_string())]);
    }

    #[test]
    fn premise_letter_is_optional() {
        let g = parse_proof_graph("-> a\n-> b [3:a {x}; *:E:a, b]", "g").unwrap();
        let b = g.node("b").unwrap();
        assert_eq!(b.annotations[0].class, PremiseClass::All);
        assert_eq!(b.annotations[0].hint.as_ref().unwrap().raw, "x");
        assert_eq!(b.annotations[1].loc, LocSel::Any);
        assert_eq!(b.supports(), ["a", "b"]);
    }

    #[test]
    fn empty_and_dangling() {
        assert_eq!(parse_proof_graph("  # nothing\n", "g").unwrap(), ProofGraph::default());
        assert!(matches!(parse_proof_graph("-> a [1:N:ghost]", "g"), Err(Error::DanglingSupportName(s)) if s == "ghost"));
        assert!(matches!(parse_proof_graph("-> a [1:Q:a]", "g"), Err(Error::Parse { .. })));
    }

    #[test]
    fn schedule_puts_supports_first_and_tolerates_cycles() {
        let g = parse_proof_graph("-> c [*:b]\n-> b [*:a]\n-> a\n-> x [*:y]\n-> y [*:x]", "g").unwrap();
        assert_eq!(g.schedule(), ["a", "b", "c", "x", "y"]);
    }

    #[test]
    fn display_round_trips() {
        let src = "-> a {s:p|q}\n-> b [3:N:a, b {h}; *:a] {z}\n";
        let g = parse_proof_graph(src, "g").unwrap();
        assert_eq!(parse_proof_graph(&g.to_string(), "g").unwrap(), g);
    }
}
