//! Problem files.
//!
//! One problem per file, one `key = value` per line, `#` starts a comment.
//!
//! ```text
//! initial_value = 1
//! forcing = constant 0                  # or: piecewise [bps] [values]
//! history = table [-1, 0] [0.5, 1]      # or: table [xs] [ys]
//! term.coefficient = constant 1         # starts a new delay term
//! term.delay = lag 1/3                  # or: table [ts] [h(t)]
//! impulses.points = [1/3, 2/3, 1]
//! impulses.multipliers = [1/6, 1/6, 1/6]
//! impulses.jumps = [0, 0, 0]            # optional, zeros by default
//! impulses.periodic = 1 20 0.5          # period, count, multiplier
//! ```
//!
//! Numbers may be written as fractions such as `1/3`. `initial_value` is
//! required; everything else defaults to zero or empty.

use std::fmt;

use idde_core::model::{
    validate, DelayTerm, DeviationDescriptor, FunctionDescriptor, ImpulseSchedule, Location,
    ProblemSpec, ValidatedSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// 1-based line, when the problem can be pinned to one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn at(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line: Some(line), message: message.into() }
}

/// A plain number or a fraction `p/q`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            p / q
        }
        None => s.parse().map_err(|_| format!("bad number `{s}`"))?,
    };
    if !value.is_finite() {
        return Err(format!("`{s}` is not a finite number"));
    }
    Ok(value)
}

/// Splits `[a, b] [c]` into bracketed lists; anything outside brackets is an
/// error.
fn parse_lists(s: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut lists = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('[').ok_or_else(|| format!("expected `[` at `{rest}`"))?;
        let end = body.find(']').ok_or("unclosed `[`")?;
        let inner = body[..end].trim();
        let items = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(parse_number).collect::<Result<Vec<_>, _>>()?
        };
        lists.push(items);
        rest = body[end + 1..].trim_start();
    }
    Ok(lists)
}

fn exactly<const N: usize>(s: &str) -> Result<[Vec<f64>; N], String> {
    let lists = parse_lists(s)?;
    let found = lists.len();
    lists.try_into().map_err(|_| format!("expected {N} list(s), found {found}"))
}

fn parse_function(value: &str) -> Result<FunctionDescriptor, String> {
    let (kind, rest) = value.split_once(char::is_whitespace).unwrap_or((value, ""));
    match kind {
        "constant" => Ok(FunctionDescriptor::Constant(parse_number(rest)?)),
        "piecewise" => {
            let [breakpoints, values] = exactly::<2>(rest)?;
            Ok(FunctionDescriptor::PiecewiseConstant { breakpoints, values })
        }
        "table" => {
            let [abscissae, values] = exactly::<2>(rest)?;
            Ok(FunctionDescriptor::Tabulated { abscissae, values })
        }
        _ => Err(format!("unknown function kind `{kind}` (constant, piecewise, table)")),
    }
}

fn parse_deviation(value: &str) -> Result<DeviationDescriptor, String> {
    let (kind, rest) = value.split_once(char::is_whitespace).unwrap_or((value, ""));
    match kind {
        "lag" => Ok(DeviationDescriptor::ConstantLag(parse_number(rest)?)),
        "table" => {
            let [abscissae, values] = exactly::<2>(rest)?;
            Ok(DeviationDescriptor::Tabulated { abscissae, values })
        }
        _ => Err(format!("unknown delay kind `{kind}` (lag, table)")),
    }
}

/// Line numbers of the keys, used to place validation errors.
#[derive(Default)]
struct Lines {
    initial_value: Option<usize>,
    forcing: Option<usize>,
    history: Option<usize>,
    coefficients: Vec<usize>,
    delays: Vec<Option<usize>>,
    impulses: Option<usize>,
}

impl Lines {
    fn of(&self, location: Location) -> Option<usize> {
        match location {
            Location::Forcing => self.forcing,
            Location::History => self.history,
            Location::Coefficient(i) => self.coefficients.get(i).copied(),
            Location::Delay(i) => self.delays.get(i).copied().flatten(),
            Location::Impulses => self.impulses,
            Location::InitialValue => self.initial_value,
        }
    }
}

#[derive(Default)]
struct Draft {
    initial_value: Option<f64>,
    forcing: Option<FunctionDescriptor>,
    history: Option<FunctionDescriptor>,
    terms: Vec<(FunctionDescriptor, Option<DeviationDescriptor>)>,
    points: Option<Vec<f64>>,
    multipliers: Option<Vec<f64>>,
    jumps: Option<Vec<f64>>,
    periodic: Option<(f64, usize, f64)>,
}

fn set_once<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(at(line, format!("`{key}` given twice")));
    }
    *slot = Some(value);
    Ok(())
}

fn single_list(value: &str) -> Result<Vec<f64>, String> {
    let [v] = exactly::<1>(value)?;
    Ok(v)
}

/// Parses and validates a problem file.
pub fn parse_problem_file(text: &str) -> Result<ValidatedSpec, ParseError> {
    let mut d = Draft::default();
    let mut lines = Lines::default();

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| at(n, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |msg: String| at(n, format!("{key}: {msg}"));
        match key {
            "initial_value" => {
                set_once(&mut d.initial_value, parse_number(value).map_err(bad)?, key, n)?;
                lines.initial_value = Some(n);
            }
            "forcing" => {
                set_once(&mut d.forcing, parse_function(value).map_err(bad)?, key, n)?;
                lines.forcing = Some(n);
            }
            "history" => {
                set_once(&mut d.history, parse_function(value).map_err(bad)?, key, n)?;
                lines.history = Some(n);
            }
            "term.coefficient" => {
                d.terms.push((parse_function(value).map_err(bad)?, None));
                lines.coefficients.push(n);
                lines.delays.push(None);
            }
            "term.delay" => {
                let delay = parse_deviation(value).map_err(bad)?;
                let Some(term) = d.terms.last_mut() else {
                    return Err(at(n, "`term.delay` before any `term.coefficient`"));
                };
                set_once(&mut term.1, delay, key, n)?;
                *lines.delays.last_mut().unwrap() = Some(n);
            }
            "impulses.points" => {
                set_once(&mut d.points, single_list(value).map_err(bad)?, key, n)?;
                lines.impulses = Some(n);
            }
            "impulses.multipliers" => {
                set_once(&mut d.multipliers, single_list(value).map_err(bad)?, key, n)?;
                lines.impulses.get_or_insert(n);
            }
            "impulses.jumps" => {
                set_once(&mut d.jumps, single_list(value).map_err(bad)?, key, n)?;
                lines.impulses.get_or_insert(n);
            }
            "impulses.periodic" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                let [period, count, mult] = parts[..] else {
                    return Err(bad("expected `period count multiplier`".into()));
                };
                let count: usize = count.parse().map_err(|_| bad(format!("bad count `{count}`")))?;
                let triple =
                    (parse_number(period).map_err(bad)?, count, parse_number(mult).map_err(bad)?);
                set_once(&mut d.periodic, triple, key, n)?;
                lines.impulses = Some(n);
            }
            _ => return Err(at(n, format!("unknown key `{key}`"))),
        }
    }

    let initial_value = d.initial_value.ok_or(ParseError { line: None, message: "missing initial_value".into() })?;
    let mut spec = ProblemSpec::new(initial_value);
    if let Some(f) = d.forcing {
        spec = spec.with_forcing(f);
    }
    if let Some(h) = d.history {
        spec = spec.with_history(h);
    }
    for (i, (coefficient, delay)) in d.terms.into_iter().enumerate() {
        let delay = delay.ok_or_else(|| at(lines.coefficients[i], format!("term {} has no `term.delay`", i + 1)))?;
        spec = spec.with_term(DelayTerm::new(coefficient, delay));
    }
    let impulses = match (d.periodic, d.points) {
        (Some(_), Some(_)) => {
            return Err(at(lines.impulses.unwrap_or(0), "`impulses.periodic` and `impulses.points` are exclusive"))
        }
        (Some((period, count, mult)), None) => {
            if d.multipliers.is_some() {
                return Err(at(lines.impulses.unwrap_or(0), "`impulses.periodic` already sets the multipliers"));
            }
            let mut s = ImpulseSchedule::periodic(period, count, mult);
            if let Some(j) = d.jumps {
                s.jumps = j;
            }
            s
        }
        (None, Some(points)) => {
            let multipliers = d
                .multipliers
                .ok_or_else(|| at(lines.impulses.unwrap_or(0), "`impulses.points` needs `impulses.multipliers`"))?;
            let jumps = d.jumps.unwrap_or_else(|| vec![0.0; points.len()]);
            ImpulseSchedule::new(points, multipliers, jumps)
        }
        (None, None) => {
            if d.multipliers.is_some() || d.jumps.is_some() {
                return Err(at(lines.impulses.unwrap_or(0), "impulse data without `impulses.points`"));
            }
            ImpulseSchedule::empty()
        }
    };
    spec = spec.with_impulses(impulses);

    validate(spec).map_err(|errors| {
        let first = errors.iter().next().map(|v| lines.of(v.location()));
        ParseError { line: first.flatten(), message: errors.to_string() }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "\
# sign-changing example
initial_value = 1
term.coefficient = constant 1
term.delay = lag 1/3
impulses.points = [1/3, 2/3, 1]
impulses.multipliers = [1/6, 1/6, 1/6]
";

    #[test]
    fn numbers_and_fractions() {
        assert_eq!(parse_number("0.25"), Ok(0.25));
        assert_eq!(parse_number(" -1/4 "), Ok(-0.25));
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("x").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_lists("[1, 2] []"), Ok(vec![vec![1.0, 2.0], vec![]]));
        assert!(parse_lists("[1, 2").is_err());
        assert!(parse_lists("1, 2").is_err());
        assert!(exactly::<2>("[1]").is_err());
    }

    #[test]
    fn example_file() {
        let spec = parse_problem_file(EXAMPLE).unwrap();
        assert_eq!(spec.terms.len(), 1);
        assert_eq!(spec.terms[0].delay, DeviationDescriptor::ConstantLag(1.0 / 3.0));
        assert_eq!(spec.impulses.points, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(spec.impulses.jumps, vec![0.0; 3]);
        assert_eq!(spec.forcing, FunctionDescriptor::Constant(0.0));
    }

    #[test]
    fn every_kind() {
        let text = "\
initial_value = 0.5
forcing = piecewise [1] [1, -1]
history = table [-1, 0] [0, 1]
term.coefficient = table [0, 2] [1, 0.5]
term.delay = table [0, 1] [-0.5, 0.5]
term.coefficient = constant 0.2
term.delay = lag 0
impulses.periodic = 1 3 0.5
impulses.jumps = [0.1, 0.2, 0.3]
";
        let spec = parse_problem_file(text).unwrap();
        assert_eq!(spec.terms.len(), 2);
        assert_eq!(spec.impulses.multipliers, vec![0.5; 3]);
        assert_eq!(spec.impulses.jumps, vec![0.1, 0.2, 0.3]);
        assert_eq!(spec.history.eval(-0.5), 0.5);
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_problem_file("").unwrap_err();
        assert_eq!(e.to_string(), "missing initial_value");
        let e = parse_problem_file("initial_value = 1\nimpulses.points = [0.5, 0.2]\nimpulses.multipliers = [1, 1]\n")
            .unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("not strictly increasing"), "{e}");
        let e = parse_problem_file("initial_value = 1\nspeed = 3\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_problem_file("initial_value = 1\nterm.delay = lag 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_problem_file("initial_value = 1\nterm.coefficient = constant 1\n").unwrap_err();
        assert!(e.message.contains("no `term.delay`"));
        let e = parse_problem_file("initial_value = 1\nterm.coefficient = constant 1\nterm.delay = lag -1\n")
            .unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = parse_problem_file("initial_value = 1\ninitial_value = 2\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_problem_file("initial_value = 1\nimpulses.points = [1, 2\n").unwrap_err();
        assert_eq!(e.line, Some(2));
    }
}
