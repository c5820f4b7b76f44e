use std::collections::BTreeMap;

use super::{Loading, Param, SemModel};
use crate::error::{Error, Result};
use crate::questionnaire::Questionnaire;

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

/// One logical statement and the line it starts on.
struct Statement {
    line: usize,
    text: String,
}

/// Strips an optional `name <- '...'` wrapper, comments and line continuations.
fn statements(text: &str) -> (Option<String>, Vec<Statement>) {
    let mut name = None;
    let mut out: Vec<Statement> = Vec::new();
    let mut continues = false;
    for (i, raw) in text.lines().enumerate() {
        let mut line = raw.split('#').next().unwrap_or("").to_string();
        if name.is_none() && out.is_empty() {
            if let Some((lhs, rhs)) = line.split_once("<-") {
                name = Some(lhs.trim().to_string());
                line = rhs.to_string();
            }
        }
        let line = line.replace('\'', "");
        for part in line.split(';') {
            let t = part.trim();
            if t.is_empty() {
                continue;
            }
            if continues || t.starts_with('+') {
                if let Some(last) = out.last_mut() {
                    last.text.push(' ');
                    last.text.push_str(t);
                    continues = t.ends_with('+');
                    continue;
                }
            }
            continues = t.ends_with('+');
            out.push(Statement {
                line: i + 1,
                text: t.to_string(),
            });
        }
    }
    (name, out)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

/// Splits `0.5*name` into a fixed value and a name.
fn modifier(term: &str, line: usize) -> Result<(Option<f64>, String)> {
    match term.split_once('*') {
        Some((v, name)) => {
            let v: f64 = v.trim().parse().map_err(|_| syntax(line, format!("invalid fixed value in `{term}`")))?;
            Ok((Some(v), name.trim().to_string()))
        }
        None => Ok((None, term.trim().to_string())),
    }
}

/// Parses model text of the form
///
/// ```text
/// extraversion <- 'Sociability =~ E0 + E1 + E2 + E3
///                  Assertiveness =~ E4 + E5 + E6 + E7
///                  Sociability ~~ 0*Assertiveness'
/// ```
///
/// `=~` lines declare free loadings (or fixed ones with a `value*item` prefix); `~~` lines
/// between two factors fix (`0*`, `1*`) or free their covariance. A line starting with or
/// following a trailing `+` continues the previous statement.
pub fn parse_model(text: &str, q: &Questionnaire) -> Result<SemModel> {
    let (name, stmts) = statements(text);
    let mut factors: Vec<String> = Vec::new();
    let mut raw_loadings: Vec<(String, usize, Param, usize)> = Vec::new();
    let mut covs: Vec<(String, String, Param, usize)> = Vec::new();

    for st in &stmts {
        if let Some((lhs, rhs)) = st.text.split_once("=~") {
            let f = lhs.trim();
            if !is_identifier(f) {
                return Err(syntax(st.line, format!("invalid factor name `{f}`")));
            }
            if q.item(f).is_some() {
                return Err(syntax(st.line, format!("`{f}` is an item, not a factor")));
            }
            let fi = match factors.iter().position(|x| x == f) {
                Some(i) => i,
                None => {
                    factors.push(f.to_string());
                    factors.len() - 1
                }
            };
            let terms: Vec<&str> = rhs.split('+').map(str::trim).collect();
            if terms.iter().any(|t| t.is_empty()) {
                return Err(syntax(st.line, "empty term in loading list"));
            }
            for t in terms {
                let (fixed, item) = modifier(t, st.line)?;
                if q.item(&item).is_none() {
                    return Err(syntax(st.line, format!("unknown item `{item}`")));
                }
                if raw_loadings.iter().any(|(i, f, _, _)| *i == item && *f == fi) {
                    return Err(syntax(st.line, format!("duplicate loading of `{item}` on `{}`", factors[fi])));
                }
                let param = fixed.map(Param::Fixed).unwrap_or(Param::Free);
                raw_loadings.push((item, fi, param, st.line));
            }
        } else if let Some((lhs, rhs)) = st.text.split_once("~~") {
            let a = lhs.trim().to_string();
            let (fixed, b) = modifier(rhs, st.line)?;
            if a == b && q.item(&a).is_some() && fixed.is_none() {
                // Residual variances are always free.
                continue;
            }
            let param = fixed.map(Param::Fixed).unwrap_or(Param::Free);
            covs.push((a, b, param, st.line));
        } else {
            return Err(syntax(st.line, format!("expected `=~` or `~~` in `{}`", st.text)));
        }
    }
    if factors.is_empty() {
        return Err(syntax(stmts.first().map(|s| s.line).unwrap_or(1), "model declares no factors"));
    }

    let mut factor_covariances = BTreeMap::new();
    for (a, b, param, line) in covs {
        let find = |n: &str| {
            factors
                .iter()
                .position(|f| f == n)
                .ok_or_else(|| syntax(line, format!("unknown factor `{n}`")))
        };
        let (fa, fb) = (find(&a)?, find(&b)?);
        if fa == fb {
            if param != Param::Fixed(1.0) {
                return Err(syntax(line, format!("factor variance of `{a}` is fixed to 1")));
            }
            continue;
        }
        let key = (fa.min(fb), fa.max(fb));
        if factor_covariances.insert(key, param).is_some() {
            return Err(syntax(line, format!("duplicate covariance between `{a}` and `{b}`")));
        }
    }

    let mut used: Vec<&crate::questionnaire::Item> =
        q.items.iter().filter(|it| raw_loadings.iter().any(|(i, _, _, _)| *i == it.id)).collect();
    used.sort_by_key(|it| q.structural_rank(it));
    let items: Vec<String> = used.iter().map(|it| it.id.clone()).collect();
    let loadings = raw_loadings
        .into_iter()
        .map(|(item, factor, param, _)| Loading {
            item: items.iter().position(|i| *i == item).expect("item collected above"),
            factor,
            param,
        })
        .collect();
    Ok(SemModel {
        name: name.unwrap_or_else(|| "model".to_string()),
        items,
        factors,
        loadings,
        factor_covariances,
    })
}
