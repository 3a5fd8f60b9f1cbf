//! S-expressions as printed by SMT solvers, and an evaluator for the
//! ground terms that appear in models.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExp {
    Atom(String),
    List(Vec<SExp>),
}

impl SExp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExp::Atom(a) => Some(a),
            SExp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExp]> {
        match self {
            SExp::List(xs) => Some(xs),
            SExp::Atom(_) => None,
        }
    }
}

impl fmt::Display for SExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExp::Atom(a) => write!(f, "{a}"),
            SExp::List(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parses a sequence of s-expressions. Quoted symbols lose their bars.
pub fn parse_all(src: &str) -> Result<Vec<SExp>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut stack: Vec<Vec<SExp>> = vec![Vec::new()];
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or("unbalanced `)`")?;
                stack.last_mut().unwrap().push(SExp::List(done));
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '|' | '"' => {
                let end = chars[i + 1..].iter().position(|&d| d == c).ok_or("unterminated quoted token")?;
                let tok: String = chars[i + 1..i + 1 + end].iter().collect();
                stack.last_mut().unwrap().push(SExp::Atom(tok));
                i += end + 2;
            }
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"()|\";".contains(chars[i]) {
                    i += 1;
                }
                stack.last_mut().unwrap().push(SExp::Atom(chars[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MVal {
    Int(i64),
    Bool(bool),
    Array(Arr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arr {
    Const(Box<MVal>),
    Store(Box<Arr>, i64, Box<MVal>),
    Lambda(String, SExp, BTreeMap<String, MVal>),
    Fun(String),
}

/// The `define-fun` entries of a model.
#[derive(Clone, Debug, Default)]
pub struct ModelDefs {
    pub defs: BTreeMap<String, (Vec<String>, SExp)>,
}

impl ModelDefs {
    /// Collects every `(define-fun name (params) sort body)` in the output.
    pub fn from_output(items: &[SExp]) -> ModelDefs {
        let mut defs = BTreeMap::new();
        fn walk(e: &SExp, defs: &mut BTreeMap<String, (Vec<String>, SExp)>) {
            let Some(xs) = e.list() else { return };
            if xs.len() == 5 && xs[0].atom() == Some("define-fun") {
                if let (Some(name), Some(params)) = (xs[1].atom(), xs[2].list()) {
                    let ps = params
                        .iter()
                        .filter_map(|p| p.list().and_then(|p| p.first()).and_then(SExp::atom).map(String::from))
                        .collect();
                    defs.insert(name.to_string(), (ps, xs[4].clone()));
                }
                return;
            }
            xs.iter().for_each(|x| walk(x, defs));
        }
        items.iter().for_each(|e| walk(e, &mut defs));
        ModelDefs { defs }
    }

    pub fn value_of(&self, name: &str) -> Option<Result<MVal, String>> {
        let (params, body) = self.defs.get(name)?;
        if !params.is_empty() {
            return Some(Err(format!("`{name}` is a function")));
        }
        Some(self.eval(body, &BTreeMap::new(), 0))
    }

    pub fn select(&self, a: &Arr, i: i64, depth: usize) -> Result<MVal, String> {
        match a {
            Arr::Const(v) => Ok((**v).clone()),
            Arr::Store(base, j, v) => {
                if *j == i {
                    Ok((**v).clone())
                } else {
                    self.select(base, i, depth)
                }
            }
            Arr::Lambda(x, body, env) => {
                let mut env = env.clone();
                env.insert(x.clone(), MVal::Int(i));
                self.eval(body, &env, depth + 1)
            }
            Arr::Fun(f) => self.apply(f, vec![MVal::Int(i)], depth + 1),
        }
    }

    fn apply(&self, f: &str, args: Vec<MVal>, depth: usize) -> Result<MVal, String> {
        let (params, body) = self.defs.get(f).ok_or_else(|| format!("unknown function `{f}`"))?;
        if params.len() != args.len() {
            return Err(format!("arity mismatch applying `{f}`"));
        }
        let env = params.iter().cloned().zip(args).collect();
        self.eval(body, &env, depth + 1)
    }

    pub fn eval(&self, e: &SExp, env: &BTreeMap<String, MVal>, depth: usize) -> Result<MVal, String> {
        if depth > 256 {
            return Err("model term nests too deeply".into());
        }
        let xs = match e {
            SExp::Atom(a) => {
                if let Some(v) = env.get(a) {
                    return Ok(v.clone());
                }
                return match a.as_str() {
                    "true" => Ok(MVal::Bool(true)),
                    "false" => Ok(MVal::Bool(false)),
                    _ => match a.parse::<i64>() {
                        Ok(n) => Ok(MVal::Int(n)),
                        Err(_) => self.apply(a, Vec::new(), depth),
                    },
                };
            }
            SExp::List(xs) => xs,
        };
        let (head, args) = xs.split_first().ok_or("empty application")?;
        if let Some(h) = head.list() {
            if h.len() == 3 && h[0].atom() == Some("as") && h[1].atom() == Some("const") && args.len() == 1 {
                let v = self.eval(&args[0], env, depth + 1)?;
                return Ok(MVal::Array(Arr::Const(Box::new(v))));
            }
            return Err(format!("unsupported head `{head}`"));
        }
        let head = head.atom().unwrap();
        match head {
            "_" if args.len() == 2 && args[0].atom() == Some("as-array") => {
                Ok(MVal::Array(Arr::Fun(args[1].atom().ok_or("bad as-array")?.to_string())))
            }
            "lambda" => {
                let params = args.first().and_then(SExp::list).ok_or("bad lambda")?;
                let x = match params {
                    [p] => p.list().and_then(|p| p.first()).and_then(SExp::atom).ok_or("bad lambda binder")?,
                    _ => return Err("only unary lambdas are supported".into()),
                };
                Ok(MVal::Array(Arr::Lambda(x.to_string(), args.get(1).ok_or("bad lambda")?.clone(), env.clone())))
            }
            "let" => {
                let binds = args.first().and_then(SExp::list).ok_or("bad let")?;
                let mut inner = env.clone();
                for b in binds {
                    let b = b.list().filter(|b| b.len() == 2).ok_or("bad let binding")?;
                    let name = b[0].atom().ok_or("bad let binding")?;
                    inner.insert(name.to_string(), self.eval(&b[1], env, depth + 1)?);
                }
                self.eval(args.get(1).ok_or("bad let")?, &inner, depth + 1)
            }
            "ite" if args.len() == 3 => match self.eval(&args[0], env, depth + 1)? {
                MVal::Bool(true) => self.eval(&args[1], env, depth + 1),
                MVal::Bool(false) => self.eval(&args[2], env, depth + 1),
                _ => Err("non-Bool ite condition".into()),
            },
            _ => {
                let vals = args.iter().map(|a| self.eval(a, env, depth + 1)).collect::<Result<Vec<_>, _>>()?;
                self.builtin(head, vals, depth)
            }
        }
    }

    fn builtin(&self, head: &str, vals: Vec<MVal>, depth: usize) -> Result<MVal, String> {
        let ints = || -> Result<Vec<i64>, String> {
            vals.iter()
                .map(|v| match v {
                    MVal::Int(n) => Ok(*n),
                    _ => Err(format!("non-integer argument to `{head}`")),
                })
                .collect()
        };
        let bools = || -> Result<Vec<bool>, String> {
            vals.iter()
                .map(|v| match v {
                    MVal::Bool(b) => Ok(*b),
                    _ => Err(format!("non-Bool argument to `{head}`")),
                })
                .collect()
        };
        let overflow = || format!("overflow in `{head}`");
        Ok(match head {
            "-" => {
                let xs = ints()?;
                match xs.as_slice() {
                    [x] => MVal::Int(x.checked_neg().ok_or_else(overflow)?),
                    [x, rest @ ..] => {
                        MVal::Int(rest.iter().try_fold(*x, |a, b| a.checked_sub(*b)).ok_or_else(overflow)?)
                    }
                    [] => return Err("empty `-`".into()),
                }
            }
            "+" => MVal::Int(ints()?.iter().try_fold(0i64, |a, b| a.checked_add(*b)).ok_or_else(overflow)?),
            "*" => MVal::Int(ints()?.iter().try_fold(1i64, |a, b| a.checked_mul(*b)).ok_or_else(overflow)?),
            "<" | "<=" | ">" | ">=" => {
                let xs = ints()?;
                MVal::Bool(xs.windows(2).all(|w| match head {
                    "<" => w[0] < w[1],
                    "<=" => w[0] <= w[1],
                    ">" => w[0] > w[1],
                    _ => w[0] >= w[1],
                }))
            }
            "=" => MVal::Bool(vals.windows(2).all(|w| w[0] == w[1])),
            "distinct" => MVal::Bool((0..vals.len()).all(|i| (i + 1..vals.len()).all(|j| vals[i] != vals[j]))),
            "not" => MVal::Bool(!*bools()?.first().ok_or("empty `not`")?),
            "and" => MVal::Bool(bools()?.iter().all(|b| *b)),
            "or" => MVal::Bool(bools()?.iter().any(|b| *b)),
            "=>" => {
                let bs = bools()?;
                MVal::Bool(!bs[0] || bs[1])
            }
            "select" => match vals.as_slice() {
                [MVal::Array(a), MVal::Int(i)] => self.select(a, *i, depth)?,
                _ => return Err("bad select".into()),
            },
            "store" => match vals.as_slice() {
                [MVal::Array(a), MVal::Int(i), v] => MVal::Array(Arr::Store(Box::new(a.clone()), *i, Box::new(v.clone()))),
                _ => return Err("bad store".into()),
            },
            f if self.defs.contains_key(f) => self.apply(f, vals, depth)?,
            other => return Err(format!("unsupported operator `{other}`")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z3_OUTPUT: &str = r#"sat
(
  (define-fun |min| () Int
    (- 3))
  (define-fun bag () (Array Int Bool)
    (store ((as const (Array Int Bool)) false) 1 true))
  (define-fun bag!next () (Array Int Bool)
    (_ as-array k!0))
  (define-fun k!0 ((x!0 Int)) Bool
    (ite (= x!0 2) true (ite (= x!0 5) true false)))
  (define-fun s () (Array Int Bool)
    (lambda ((x!1 Int)) (let ((a!1 (+ x!1 1))) (or (= a!1 4) (> x!1 10)))))
)
"#;

    fn model() -> ModelDefs {
        ModelDefs::from_output(&parse_all(Z3_OUTPUT).unwrap())
    }

    fn member(m: &ModelDefs, set: &str, i: i64) -> bool {
        match m.value_of(set).unwrap().unwrap() {
            MVal::Array(a) => m.select(&a, i, 0).unwrap() == MVal::Bool(true),
            _ => panic!(),
        }
    }

    #[test]
    fn ints_and_quoted_symbols() {
        assert_eq!(model().value_of("min"), Some(Ok(MVal::Int(-3))));
    }

    #[test]
    fn arrays_in_every_shape() {
        let m = model();
        assert!(member(&m, "bag", 1) && !member(&m, "bag", 2));
        assert!(member(&m, "bag!next", 5) && !member(&m, "bag!next", 1));
        assert!(member(&m, "s", 3) && member(&m, "s", 11) && !member(&m, "s", 4));
    }

    #[test]
    fn unbalanced_input_is_rejected() {
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
    }
}
