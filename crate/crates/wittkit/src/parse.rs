//! Parser for the metric-group text format.
//!
//! ```text
//! # a nondegenerate form on Z/2 x Z/4
//! group 2 4
//! q 1/4 1/8
//! b 1/2
//! ```
//!
//! Line 1 lists the cyclic factor orders, line 2 the form on each generator,
//! line 3 (required only when there are at least two factors) the pairings of
//! distinct generators, upper-triangular row-major. `#` starts a comment.
//! All fractions are reduced mod 1 on read.

use thiserror::Error;

use crate::group::FinAbGroup;
use crate::metric::{MetricError, PreMetricGroup};
use crate::rational::RationalMod1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

/// (line, column, token) for every whitespace-separated token, with comments
/// stripped. Lines and columns are 1-based.
fn tokenize(text: &str) -> Vec<Vec<(usize, usize, &str)>> {
    let mut lines = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, ch) in content.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push((lineno + 1, s + 1, &content[s..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            tokens.push((lineno + 1, s + 1, &content[s..]));
        }
        if !tokens.is_empty() {
            lines.push(tokens);
        }
    }
    lines
}

fn parse_fraction(line: usize, col: usize, token: &str) -> Result<RationalMod1, ParseError> {
    let (num_str, den_str) = match token.split_once('/') {
        Some((n, d)) => (n, d),
        None => (token, "1"),
    };
    let num: i128 = num_str
        .parse()
        .map_err(|_| syntax(line, col, format!("invalid numerator `{}`", num_str)))?;
    let den: i128 = den_str
        .parse()
        .map_err(|_| syntax(line, col, format!("invalid denominator `{}`", den_str)))?;
    if den == 0 {
        return Err(syntax(line, col, "zero denominator"));
    }
    Ok(RationalMod1::new(num, den))
}

pub fn parse_metric_group(text: &str, cap: u64) -> Result<PreMetricGroup, ParseError> {
    let lines = tokenize(text);
    let mut iter = lines.into_iter();

    let group_line = iter
        .next()
        .ok_or_else(|| syntax(1, 1, "expected `group` line"))?;
    let (gl, gc, kw) = group_line[0];
    if kw != "group" {
        return Err(syntax(gl, gc, format!("expected `group`, found `{}`", kw)));
    }
    let mut orders = Vec::new();
    for &(l, c, tok) in &group_line[1..] {
        let n: u64 = tok
            .parse()
            .map_err(|_| syntax(l, c, format!("invalid factor order `{}`", tok)))?;
        if n < 2 {
            return Err(syntax(l, c, format!("factor order {} must be >= 2", n)));
        }
        orders.push(n);
    }
    let rank = orders.len();
    let group = FinAbGroup::new(orders).map_err(|e| syntax(gl, gc, e.to_string()))?;

    let mut q_gen = Vec::new();
    let q_line = match iter.next() {
        Some(line) => Some(line),
        None if rank == 0 => None, // bare `q` line is optional for the trivial group
        None => return Err(syntax(gl + 1, 1, "expected `q` line")),
    };
    if let Some(q_line) = q_line {
        let (ql, qc, kw) = q_line[0];
        if kw != "q" {
            return Err(syntax(ql, qc, format!("expected `q`, found `{}`", kw)));
        }
        if q_line.len() - 1 != rank {
            return Err(syntax(
                ql,
                qc,
                format!("expected {} q values, found {}", rank, q_line.len() - 1),
            ));
        }
        for &(l, c, tok) in &q_line[1..] {
            q_gen.push(parse_fraction(l, c, tok)?);
        }
    }

    let pairs = rank * rank.saturating_sub(1) / 2;
    let mut b_gen = Vec::new();
    if rank >= 2 {
        let b_line = iter
            .next()
            .ok_or_else(|| syntax(gl + 2, 1, "expected `b` line"))?;
        let (bl, bc, kw) = b_line[0];
        if kw != "b" {
            return Err(syntax(bl, bc, format!("expected `b`, found `{}`", kw)));
        }
        if b_line.len() - 1 != pairs {
            return Err(syntax(
                bl,
                bc,
                format!("expected {} pairing values, found {}", pairs, b_line.len() - 1),
            ));
        }
        for &(l, c, tok) in &b_line[1..] {
            b_gen.push(parse_fraction(l, c, tok)?);
        }
    }

    if let Some(extra) = iter.next() {
        let (l, c, tok) = extra[0];
        return Err(syntax(l, c, format!("unexpected extra line starting `{}`", tok)));
    }

    Ok(PreMetricGroup::build_with_cap(group, q_gen, b_gen, cap)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_ENUMERATION_CAP as CAP;

    #[test]
    fn parses_with_comments_and_blank_lines() {
        let text = "# standard generator\n\ngroup 2\nq 1/4  # i\n";
        let c = parse_metric_group(text, CAP).unwrap();
        assert_eq!(c.group().factor_orders(), &[2]);
        assert_eq!(c.q_on_generators()[0], RationalMod1::new(1, 4));
    }

    #[test]
    fn parses_pairings_and_negative_fractions() {
        let text = "group 2 2\nq 0 0\nb -1/2\n";
        let c = parse_metric_group(text, CAP).unwrap();
        assert_eq!(c.pairings()[0], RationalMod1::HALF);
    }

    #[test]
    fn error_positions() {
        let err = parse_metric_group("group 2\nq 1/x\n", CAP).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, col: 3, .. }), "{err}");

        let err = parse_metric_group("grp 2\n", CAP).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, col: 1, .. }));

        let err = parse_metric_group("group 2 2\nq 0 0\n", CAP).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, col: 1, .. }), "{err}");

        let err = parse_metric_group("group 2\nq 1/4 1/4\n", CAP).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 2, col: 1, .. }));
    }

    #[test]
    fn ill_formed_data_propagates() {
        let err = parse_metric_group("group 2\nq 1/3\n", CAP).unwrap_err();
        assert!(matches!(err, ParseError::Metric(MetricError::IllFormed(_))));
    }

    #[test]
    fn trivial_group() {
        let c = parse_metric_group("group\nq\n", CAP).unwrap();
        assert!(c.group().is_trivial());
        let c2 = parse_metric_group("group\n", CAP).unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn crlf_line_endings() {
        let c = parse_metric_group("group 2 2\r\nq 0 0\r\nb 1/2\r\n", CAP).unwrap();
        assert_eq!(c.pairings()[0], RationalMod1::HALF);
    }
}
