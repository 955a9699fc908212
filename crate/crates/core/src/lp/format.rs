//! CPLEX-style LP text: writer and a reader for the subset the writer emits.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use super::problem::{LpProblem, Relation, Sense, Symbol, VarId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("problem has no columns")]
    Empty,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: column name {name:?} is not a known symbol")]
    UnknownName { line: usize, name: String },
}

const TERMS_PER_LINE: usize = 6;

fn number(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    for (k, (name, a)) in terms.enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a.is_sign_negative() { '-' } else { '+' };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", number(a), name);
        } else {
            let _ = write!(out, " {} {} {}", sign, number(a.abs()), name);
        }
    }
}

/// Renders `problem`. The objective lists every column, zeros included, so a
/// reader recovers the column order.
pub fn write_lp(problem: &LpProblem) -> Result<String, FormatError> {
    if problem.is_empty() {
        return Err(FormatError::Empty);
    }
    let mut out = String::new();
    out.push_str(match problem.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_terms(&mut out, problem.variables.iter().zip(&problem.objective).map(|(v, &c)| (v.name.clone(), c)));
    out.push_str("\nSubject To\n");
    for c in &problem.constraints {
        let _ = write!(out, " {}:", c.name);
        if c.terms.is_empty() {
            let _ = write!(out, " 0 {}", problem.variables[0].name);
        }
        write_terms(&mut out, c.terms.iter().map(|&(v, a)| (problem.variables[v.0].name.clone(), a)));
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", number(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &problem.variables {
        match (v.lower, v.upper) {
            (lo, hi) if lo == 0.0 && hi == f64::INFINITY => {}
            (lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => {
                let _ = writeln!(out, " {} free", v.name);
            }
            (lo, hi) if lo == hi => {
                let _ = writeln!(out, " {} = {}", v.name, number(lo));
            }
            (lo, hi) => {
                let _ = writeln!(out, " {} <= {} <= {}", number(lo), v.name, number(hi));
            }
        }
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Bounds,
    Done,
}

fn parse_number(tok: &str, line: usize) -> Result<f64, FormatError> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| FormatError::Syntax { line, message: format!("expected a number, found {tok:?}") }),
    }
}

struct Statement {
    line: usize,
    tokens: Vec<String>,
}

/// Reads a linear expression `[+|-] a name ...` from the front of `tokens`,
/// stopping at a relation operator.
fn parse_expr(tokens: &[String], line: usize) -> Result<(Vec<(String, f64)>, usize), FormatError> {
    let mut terms = Vec::new();
    let mut i = 0;
    while i < tokens.len() && !matches!(tokens[i].as_str(), "<=" | ">=" | "=" | "<" | ">" | "=<" | "=>") {
        let mut sign = 1.0;
        if tokens[i] == "+" || tokens[i] == "-" {
            if tokens[i] == "-" {
                sign = -1.0;
            }
            i += 1;
        }
        let tok = tokens.get(i).ok_or(FormatError::Syntax { line, message: "dangling sign".into() })?;
        let (coef, name) = match parse_number(tok, line) {
            Ok(a) => {
                i += 1;
                let name = tokens.get(i).ok_or(FormatError::Syntax { line, message: "coefficient without a column".into() })?;
                (a, name.clone())
            }
            Err(_) => (1.0, tok.clone()),
        };
        i += 1;
        terms.push((name, sign * coef));
    }
    Ok((terms, i))
}

fn relation(tok: &str, line: usize) -> Result<Relation, FormatError> {
    match tok {
        "<=" | "<" | "=<" => Ok(Relation::Le),
        ">=" | ">" | "=>" => Ok(Relation::Ge),
        "=" => Ok(Relation::Eq),
        _ => Err(FormatError::Syntax { line, message: format!("expected a relation, found {tok:?}") }),
    }
}

/// Parses text produced by [`write_lp`]. Every column must be named by a
/// [`Symbol`] and appear in the objective.
pub fn parse_lp(text: &str) -> Result<LpProblem, FormatError> {
    let mut sense = None;
    let mut section = Section::None;
    let mut statements: [Vec<Statement>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('\\').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let lower = body.to_ascii_lowercase();
        let keyword = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some((Section::Objective, Some(Sense::Minimize))),
            "maximize" | "maximise" | "max" => Some((Section::Objective, Some(Sense::Maximize))),
            "subject to" | "such that" | "st" | "s.t." => Some((Section::Rows, None)),
            "bounds" => Some((Section::Bounds, None)),
            "end" => Some((Section::Done, None)),
            _ => None,
        };
        if let Some((s, dir)) = keyword {
            if dir.is_some() {
                sense = dir;
            }
            section = s;
            continue;
        }
        let idx = match section {
            Section::Objective => 0,
            Section::Rows => 1,
            Section::Bounds => 2,
            Section::None | Section::Done => {
                return Err(FormatError::Syntax { line, message: "text outside any section".into() })
            }
        };
        let tokens: Vec<String> = body.split_whitespace().map(ToString::to_string).collect();
        // A line that does not open a labelled row continues the previous one,
        // except in the bounds section where each line stands alone.
        let opens = idx == 2 || tokens[0].ends_with(':') || statements[idx].is_empty();
        if opens {
            statements[idx].push(Statement { line, tokens });
        } else {
            statements[idx].last_mut().expect("non-empty").tokens.extend(tokens);
        }
    }
    let sense = sense.ok_or(FormatError::Syntax { line: 1, message: "missing objective section".into() })?;
    let mut problem = LpProblem::new(sense);
    let mut lookup: BTreeMap<String, VarId> = BTreeMap::new();

    let [obj, rows, bounds] = statements;
    if obj.len() != 1 {
        return Err(FormatError::Syntax { line: 1, message: "expected exactly one objective row".into() });
    }
    let st = &obj[0];
    let toks = if st.tokens[0].ends_with(':') { &st.tokens[1..] } else { &st.tokens[..] };
    let (terms, used) = parse_expr(toks, st.line)?;
    if used != toks.len() {
        return Err(FormatError::Syntax { line: st.line, message: "relation in objective".into() });
    }
    for (name, c) in terms {
        let symbol = Symbol::parse(&name).ok_or(FormatError::UnknownName { line: st.line, name: name.clone() })?;
        if let Some(&v) = lookup.get(&name) {
            problem.objective[v.0] += c;
        } else {
            lookup.insert(name, problem.add_var(symbol, 0.0, f64::INFINITY, c));
        }
    }
    if problem.is_empty() {
        return Err(FormatError::Empty);
    }
    let column = |name: &str, line: usize, lookup: &BTreeMap<String, VarId>| {
        lookup.get(name).copied().ok_or(FormatError::UnknownName { line, name: name.into() })
    };

    for (k, st) in rows.iter().enumerate() {
        let (name, toks) = match st.tokens[0].strip_suffix(':') {
            Some(n) => (n.to_string(), &st.tokens[1..]),
            None => (format!("r{k}"), &st.tokens[..]),
        };
        let (terms, used) = parse_expr(toks, st.line)?;
        if toks.len() != used + 2 {
            return Err(FormatError::Syntax { line: st.line, message: "expected `<relation> <rhs>` after the row".into() });
        }
        let rel = relation(&toks[used], st.line)?;
        let rhs = parse_number(&toks[used + 1], st.line)?;
        let terms = terms
            .into_iter()
            .map(|(n, a)| Ok((column(&n, st.line, &lookup)?, a)))
            .collect::<Result<Vec<_>, FormatError>>()?;
        problem.add_constraint(name, terms, rel, rhs);
    }

    for st in &bounds {
        let t: Vec<&str> = st.tokens.iter().map(String::as_str).collect();
        let syntax = || FormatError::Syntax { line: st.line, message: format!("unreadable bound {:?}", t.join(" ")) };
        match t.as_slice() {
            [name, free] if free.eq_ignore_ascii_case("free") => {
                let v = column(name, st.line, &lookup)?;
                problem.variables[v.0].lower = f64::NEG_INFINITY;
                problem.variables[v.0].upper = f64::INFINITY;
            }
            [lo, "<=", name, "<=", hi] => {
                let v = column(name, st.line, &lookup)?;
                problem.variables[v.0].lower = parse_number(lo, st.line)?;
                problem.variables[v.0].upper = parse_number(hi, st.line)?;
            }
            [name, op, value] => {
                let v = column(name, st.line, &lookup)?;
                let x = parse_number(value, st.line)?;
                match relation(op, st.line)? {
                    Relation::Le => problem.variables[v.0].upper = x,
                    Relation::Ge => problem.variables[v.0].lower = x,
                    Relation::Eq => {
                        problem.variables[v.0].lower = x;
                        problem.variables[v.0].upper = x;
                    }
                }
            }
            _ => return Err(syntax()),
        }
    }
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::simplex::solve;
    use crate::model::{FlowId, Job};

    #[test]
    fn one_column_round_trip() {
        let mut p = LpProblem::new(Sense::Maximize);
        let x = p.add_var(Symbol::Completion(Job::Dummy(0)), 0.0, 3.0, 1.0);
        p.add_constraint("cap", alloc::vec![(x, 1.0)], Relation::Le, 2.5);
        let text = write_lp(&p).unwrap();
        assert_eq!(parse_lp(&text).unwrap(), p);
    }

    #[test]
    fn long_rows_and_odd_bounds_round_trip() {
        let mut p = LpProblem::new(Sense::Minimize);
        let f = FlowId::new(1, 2);
        let vars: Vec<VarId> = (0..20)
            .map(|l| p.add_var(Symbol::Progress { flow: f, interval: l }, -(l as f64) / 3.0, 1.0 + l as f64, 0.1 * l as f64))
            .collect();
        let free = p.add_other(f64::NEG_INFINITY, f64::INFINITY, -1.0);
        let fixed = p.add_other(2.0, 2.0, 0.0);
        p.add_constraint("wide", vars.iter().map(|&v| (v, -1.0 / 7.0)).collect(), Relation::Ge, -3.0);
        p.add_constraint("pair", alloc::vec![(free, 1.0), (fixed, -2.0)], Relation::Eq, 0.0);
        let text = write_lp(&p).unwrap();
        assert!(text.lines().all(|l| l.len() < 255));
        let back = parse_lp(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(solve(&back).unwrap().objective, solve(&p).unwrap().objective);
    }

    #[test]
    fn empty_problem_is_an_error() {
        assert_eq!(write_lp(&LpProblem::new(Sense::Minimize)), Err(FormatError::Empty));
    }

    #[test]
    fn rejects_foreign_names() {
        let text = "Minimize\n obj: x + y\nSubject To\n c1: x + y >= 1\nEnd\n";
        assert!(matches!(parse_lp(text), Err(FormatError::UnknownName { .. })));
    }
}
