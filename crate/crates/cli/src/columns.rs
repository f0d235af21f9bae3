//! Column-selection mini-grammar.
//!
//! A selection is a comma list of items; an item is a column name or an
//! inclusive range `first:last` over header order. Spaces in multi-space
//! flags are separated by `|`, and pairs of spaces by `;`.

use crate::CliError;

/// Resolve a selection against `header`. Exact names win over range syntax,
/// so a column literally named `a:b` can still be selected.
pub fn parse_columns(selection: &str, header: &[String]) -> Result<Vec<String>, CliError> {
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(imbal_core::Error::UnknownColumn(name.to_string())))
    };
    let mut out: Vec<String> = Vec::new();
    for item in selection.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(CliError::Usage(format!("empty item in column selection {selection:?}")));
        }
        if header.iter().any(|h| h == item) {
            out.push(item.to_string());
            continue;
        }
        match item.split_once(':') {
            Some((a, b)) => {
                let (lo, hi) = (position(a.trim())?, position(b.trim())?);
                if lo > hi {
                    return Err(CliError::Usage(format!("range {item:?} runs backwards in header order")));
                }
                out.extend(header[lo..=hi].iter().cloned());
            }
            None => {
                position(item)?;
            }
        }
    }
    if let Some(dup) = out.iter().enumerate().find_map(|(i, c)| out[..i].contains(c).then_some(c)) {
        return Err(CliError::Usage(format!("column {dup} selected twice in {selection:?}")));
    }
    Ok(out)
}

/// Split `A|B;C|D` into pairs of selections.
pub fn parse_pairs(spec: &str) -> Result<Vec<(String, String)>, CliError> {
    spec.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|pair| match pair.split('|').collect::<Vec<_>>()[..] {
            [a, b] => Ok((a.trim().to_string(), b.trim().to_string())),
            _ => Err(CliError::Usage(format!("pair {pair:?} must be two spaces separated by '|'"))),
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(
            |pairs| {
                if pairs.is_empty() {
                    Err(CliError::Usage("no space pairs given".into()))
                } else {
                    Ok(pairs)
                }
            },
        )
}

/// Integer lags: a comma list of values and inclusive `lo:hi` ranges.
pub fn parse_lags(spec: &str) -> Result<Vec<i64>, CliError> {
    let int = |s: &str| s.trim().parse::<i64>().map_err(|_| CliError::Usage(format!("invalid lag {s:?} in {spec:?}")));
    let mut lags = Vec::new();
    for item in spec.split(',').map(str::trim) {
        // A leading minus belongs to the first bound, so split after it.
        let split = item.char_indices().skip(1).find(|&(_, c)| c == ':').map(|(i, _)| i);
        match split {
            Some(i) => {
                let (lo, hi) = (int(&item[..i])?, int(&item[i + 1..])?);
                if lo > hi {
                    return Err(CliError::Usage(format!("lag range {item:?} runs backwards")));
                }
                lags.extend(lo..=hi);
            }
            None => lags.push(int(item)?),
        }
    }
    Ok(lags)
}
