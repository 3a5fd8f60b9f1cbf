//! Turning solver output into a valuation of concrete variables.

use std::collections::BTreeSet;

use super::sexpr::{parse_all, MVal, ModelDefs};
use super::smt::SmtScript;
use crate::eval::{Valuation, Value};
use crate::ir::Sort;

fn default_value(s: &Sort) -> Option<Value> {
    Some(match s {
        Sort::Int => Value::Int(0),
        Sort::Bool => Value::Bool(false),
        Sort::Loc => Value::Loc(1),
        Sort::Tid => Value::Tid(0),
        Sort::SetInt => Value::Set(BTreeSet::new()),
        Sort::Uninterpreted(_) => return None,
    })
}

fn int(v: MVal, name: &str) -> Result<i64, String> {
    match v {
        MVal::Int(n) => Ok(n),
        _ => Err(format!("`{name}` is not an integer in the model")),
    }
}

/// Reads the model that follows `sat`. Sets are observed on a finite
/// window: model values of Int constants, the VC's literals, and their
/// sums and differences.
pub fn extract_model(output: &str, script: &SmtScript) -> Result<Valuation, String> {
    let defs = ModelDefs::from_output(&parse_all(output)?);
    let mut env = Valuation::new();
    let mut ints: BTreeSet<i64> = script.literals.clone();
    let mut sets = Vec::new();
    for (sym, var, sort) in &script.symbols {
        let raw = defs.value_of(sym.trim_matches('|')).transpose()?;
        let Some(raw) = raw else {
            env.insert(var.clone(), default_value(sort).ok_or("uninterpreted sort in model")?);
            continue;
        };
        let value = match sort {
            Sort::Int => {
                let n = int(raw, sym)?;
                ints.insert(n);
                Value::Int(n)
            }
            Sort::Bool => match raw {
                MVal::Bool(b) => Value::Bool(b),
                _ => return Err(format!("`{sym}` is not Boolean in the model")),
            },
            Sort::Loc => Value::Loc(u32::try_from(int(raw, sym)?).map_err(|_| format!("`{sym}` out of range"))?),
            Sort::Tid => Value::Tid(u32::try_from(int(raw, sym)?).map_err(|_| format!("`{sym}` out of range"))?),
            Sort::SetInt => match raw {
                MVal::Array(a) => {
                    sets.push((var.clone(), a));
                    continue;
                }
                _ => return Err(format!("`{sym}` is not an array in the model")),
            },
            Sort::Uninterpreted(_) => return Err("uninterpreted sort in model".into()),
        };
        env.insert(var.clone(), value);
    }
    for (sym, _) in &script.setmins {
        if let Some(v) = defs.value_of(sym).transpose()? {
            ints.insert(int(v, sym)?);
        }
    }
    let base: Vec<i64> = ints.iter().copied().collect();
    for &a in &base {
        for &b in &script.literals {
            ints.extend(a.checked_add(b));
            ints.extend(a.checked_sub(b));
        }
    }
    for (var, arr) in sets {
        let mut s = BTreeSet::new();
        for &i in &ints {
            if defs.select(&arr, i, 0)? == MVal::Bool(true) {
                s.insert(i);
            }
        }
        env.insert(var, Value::Set(s));
    }
    Ok(env)
}
