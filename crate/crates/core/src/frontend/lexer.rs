use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// `@3`, a concrete thread id.
    TidLit(u32),
    Assign,
    Semi,
    Colon,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    DotDot,
    Prime,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Not,
    And,
    Or,
    Implies,
    Union,
    SetMinus,
    Empty,
    In,
    Always,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::TidLit(n) => format!("`@{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("{other:?}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn lex(src: &str, origin: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let peek = chars.get(i + 1).copied();
        let mut push = |tok: Tok, width: usize, i: &mut usize, col: &mut usize| {
            out.push(Token { tok, line: tl, col: tc });
            *i += width;
            *col += width;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text.parse::<i64>().map_err(|_| Error::parse(origin, tl, tc, "integer literal in range"))?;
                col += i - start;
                out.push(Token { tok: Tok::Int(n), line: tl, col: tc });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start;
                let tok = match text.as_str() {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    "in" => Tok::In,
                    "union" => Tok::Union,
                    "minus" => Tok::SetMinus,
                    _ => Tok::Ident(text),
                };
                out.push(Token { tok, line: tl, col: tc });
            }
            '@' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j == start {
                    return Err(Error::parse(origin, tl, tc, "thread id after `@`"));
                }
                let text: String = chars[start..j].iter().collect();
                let n = text.parse::<u32>().map_err(|_| Error::parse(origin, tl, tc, "thread id in range"))?;
                out.push(Token { tok: Tok::TidLit(n), line: tl, col: tc });
                col += j - i;
                i = j;
            }
            ':' if peek == Some('=') => push(Tok::Assign, 2, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '{' => push(Tok::LBrace, 1, &mut i, &mut col),
            '}' => push(Tok::RBrace, 1, &mut i, &mut col),
            '[' if peek == Some(']') => push(Tok::Always, 2, &mut i, &mut col),
            '[' => push(Tok::LBrack, 1, &mut i, &mut col),
            ']' => push(Tok::RBrack, 1, &mut i, &mut col),
            '.' if peek == Some('.') => push(Tok::DotDot, 2, &mut i, &mut col),
            '\'' => push(Tok::Prime, 1, &mut i, &mut col),
            '=' if peek == Some('>') => push(Tok::Implies, 2, &mut i, &mut col),
            '=' if peek == Some('=') => push(Tok::Eq, 2, &mut i, &mut col),
            '=' => push(Tok::Eq, 1, &mut i, &mut col),
            '!' if peek == Some('=') => push(Tok::Ne, 2, &mut i, &mut col),
            '!' => push(Tok::Not, 1, &mut i, &mut col),
            '<' if peek == Some('=') => push(Tok::Le, 2, &mut i, &mut col),
            '<' => push(Tok::Lt, 1, &mut i, &mut col),
            '>' if peek == Some('=') => push(Tok::Ge, 2, &mut i, &mut col),
            '>' => push(Tok::Gt, 1, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '-' if peek == Some('>') => push(Tok::Implies, 2, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '&' if peek == Some('&') => push(Tok::And, 2, &mut i, &mut col),
            '|' if peek == Some('|') => push(Tok::Or, 2, &mut i, &mut col),
            '\\' => push(Tok::SetMinus, 1, &mut i, &mut col),
            '≠' => push(Tok::Ne, 1, &mut i, &mut col),
            '≤' => push(Tok::Le, 1, &mut i, &mut col),
            '≥' => push(Tok::Ge, 1, &mut i, &mut col),
            '∧' => push(Tok::And, 1, &mut i, &mut col),
            '∨' => push(Tok::Or, 1, &mut i, &mut col),
            '¬' => push(Tok::Not, 1, &mut i, &mut col),
            '→' | '⟹' | '⇒' => push(Tok::Implies, 1, &mut i, &mut col),
            '∪' => push(Tok::Union, 1, &mut i, &mut col),
            '∖' => push(Tok::SetMinus, 1, &mut i, &mut col),
            '∅' => push(Tok::Empty, 1, &mut i, &mut col),
            '∈' => push(Tok::In, 1, &mut i, &mut col),
            '□' => push(Tok::Always, 1, &mut i, &mut col),
            _ => return Err(Error::parse(origin, tl, tc, format!("a token, found `{c}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s, "t").unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn ascii_and_unicode_operators_agree() {
        assert_eq!(toks("a != b && !c -> d"), toks("a ≠ b ∧ ¬c → d"));
        assert_eq!(toks("x <= 1 || y >= 2"), toks("x ≤ 1 ∨ y ≥ 2"));
    }

    #[test]
    fn comments_and_positions() {
        let t = lex("# header\n  x := 1", "t").unwrap();
        assert_eq!(t[0].tok, Tok::Ident("x".into()));
        assert_eq!((t[0].line, t[0].col), (2, 3));
        assert_eq!(t[1].tok, Tok::Assign);
    }

    #[test]
    fn tid_literal_and_always_box() {
        assert_eq!(toks("[] @2"), vec![Tok::Always, Tok::TidLit(2), Tok::Eof]);
    }

    #[test]
    fn rejects_stray_character() {
        let e = lex("x $ y", "f.prg").unwrap_err();
        assert!(e.to_string().starts_with("f.prg:1:3"), "{e}");
    }
}
