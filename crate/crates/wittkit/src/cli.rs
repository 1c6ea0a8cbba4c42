//! Command-line front end. Exit codes: 0 success, 1 user error (bad
//! arguments, unreadable or ill-formed input, caps), 2 internal assertion
//! (a computation contradicted an invariant it was supposed to certify).

use std::fmt::Write as _;
use std::io::Write;

use crate::etale::{self, EtaleError};
use crate::group::{Element, GroupError, DEFAULT_ENUMERATION_CAP};
use crate::metric::{GaussArgument, MetricError, PreMetricGroup};
use crate::parse::{parse_metric_group, ParseError};
use crate::presentation::{self, ElementOrder};
use crate::selftest;
use crate::sl2::{self, PointedPartClass, Sl2Error};
use crate::witt::{self, WittClassHandle, WittError, WittOrder, DEFAULT_MAX_ORDER_SEARCH};

const USAGE: &str = "\
usage: wittkit <command>

commands:
  witt class FILE...            Witt-class report for each metric-group file
  witt order FILE               order of the class under orthogonal sum
  witt aniso FILE               anisotropic representative (metric-group format)
  witt add FILE FILE...         orthogonal direct sum (metric-group format)
  witt eq FILE FILE             Witt equality of two classes
  switt eq FILE FILE            equality modulo the order-8 pointed subgroup
  sl2 data K                    twists, dimensions, central charge at level K
  sl2 condense K                local modules of the regular algebra (K = 0 mod 4)
  etale enumerate FILE FILE     connected etale algebras in the product
  presentation --max-level K    the group presented by the level classes
  selftest [--quick]            run the acceptance suite

Metric-group files: `group n1 n2 ...`, `q a1/b1 ...`, `b c/d ...` (pairings,
upper-triangular; required for two or more factors). `#` starts a comment.
The environment variable WITTKIT_CAP overrides the enumeration cap (default 1048576).
";

enum CliError {
    /// Malformed command line; the usage text is printed.
    Usage(String),
    /// Bad input data (files, caps, domains).
    User(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::User(m) | CliError::Internal(m) => m,
        }
    }
}

fn usage_error(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn user(msg: impl Into<String>) -> CliError {
    CliError::User(msg.into())
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> CliError {
        match e {
            MetricError::IllFormed(_) | MetricError::Group(_) | MetricError::NotIsotropic(_) => {
                CliError::User(e.to_string())
            }
            MetricError::SnapFailed { .. } | MetricError::Snf(_) | MetricError::Internal(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> CliError {
        CliError::User(e.to_string())
    }
}

impl From<WittError> for CliError {
    fn from(e: WittError) -> CliError {
        match e {
            WittError::Degenerate { .. } => CliError::User(e.to_string()),
            WittError::Metric(m) => m.into(),
            WittError::Internal(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<EtaleError> for CliError {
    fn from(e: EtaleError) -> CliError {
        match e {
            EtaleError::Metric(m) => m.into(),
            EtaleError::TheoremViolation(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<Sl2Error> for CliError {
    fn from(e: Sl2Error) -> CliError {
        match e {
            Sl2Error::Metric(m) => m.into(),
            _ => CliError::User(e.to_string()),
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> CliError {
        match e {
            ParseError::Syntax { .. } => CliError::User(e.to_string()),
            ParseError::Metric(m) => m.into(),
        }
    }
}

/// Runs one command; output goes to `out`, the return value is the exit code.
pub fn run(args: &[String], out: &mut dyn Write) -> i32 {
    match dispatch(args) {
        Ok(report) => {
            let _ = out.write_all(report.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(out, "error: {}", e.message());
            if matches!(e, CliError::Usage(_)) {
                let _ = out.write_all(USAGE.as_bytes());
            }
            e.code()
        }
    }
}

fn cap_from_env() -> Result<u64, CliError> {
    match std::env::var("WITTKIT_CAP") {
        Ok(value) => value
            .parse::<u64>()
            .map_err(|_| user(format!("WITTKIT_CAP is not a valid integer: `{}`", value))),
        Err(_) => Ok(DEFAULT_ENUMERATION_CAP),
    }
}

fn dispatch(args: &[String]) -> Result<String, CliError> {
    let cap = cap_from_env()?;
    let mut it = args.iter().map(String::as_str);
    match it.next() {
        Some("witt") => witt_command(&args[1..], cap),
        Some("switt") => switt_command(&args[1..], cap),
        Some("sl2") => sl2_command(&args[1..]),
        Some("etale") => etale_command(&args[1..], cap),
        Some("presentation") => presentation_command(&args[1..]),
        Some("selftest") => selftest_command(&args[1..]),
        Some(other) => Err(usage_error(format!("unknown command `{}`", other))),
        None => Err(usage_error("no command given")),
    }
}

fn load_form(path: &str, cap: u64) -> Result<PreMetricGroup, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| user(format!("cannot read `{}`: {}", path, e)))?;
    parse_metric_group(&text, cap).map_err(|e| match e.into() {
        CliError::Usage(m) | CliError::User(m) => CliError::User(format!("{}: {}", path, m)),
        CliError::Internal(m) => CliError::Internal(format!("{}: {}", path, m)),
    })
}

fn require<'a>(args: &'a [String], n: usize, what: &str) -> Result<&'a [String], CliError> {
    if args.len() != n {
        return Err(usage_error(format!(
            "expected {} argument(s) for {}, got {}",
            n,
            what,
            args.len()
        )));
    }
    Ok(args)
}

fn witt_command(args: &[String], cap: u64) -> Result<String, CliError> {
    let Some(verb) = args.first() else {
        return Err(usage_error("witt needs a subcommand: class, order, aniso, add, eq"));
    };
    let rest = &args[1..];
    match verb.as_str() {
        "class" => {
            if rest.is_empty() {
                return Err(usage_error("witt class needs at least one file"));
            }
            let mut report = String::new();
            for (i, path) in rest.iter().enumerate() {
                if i > 0 {
                    report.push('\n');
                }
                let form = load_form(path, cap)?;
                class_report(&form, cap, &mut report)?;
            }
            Ok(report)
        }
        "order" => {
            let rest = require(rest, 1, "witt order")?;
            let form = load_form(&rest[0], cap)?;
            let handle = WittClassHandle::new_with_cap(form, cap)?;
            match witt::witt_order(&handle, DEFAULT_MAX_ORDER_SEARCH, cap)? {
                WittOrder::Finite(n) => Ok(format!("order = {}\n", n)),
                WittOrder::NotFoundUpTo(m) => Ok(format!("order not found up to {}\n", m)),
            }
        }
        "aniso" => {
            let rest = require(rest, 1, "witt aniso")?;
            let form = load_form(&rest[0], cap)?;
            let kernel = witt::anisotropic_kernel(&form, cap)?;
            Ok(format!("{}\n", kernel))
        }
        "add" => {
            if rest.is_empty() {
                return Err(usage_error("witt add needs at least one file"));
            }
            let mut sum = load_form(&rest[0], cap)?;
            for path in &rest[1..] {
                sum = sum.direct_sum(&load_form(path, cap)?, cap)?;
            }
            Ok(format!("{}\n", sum))
        }
        "eq" => {
            let rest = require(rest, 2, "witt eq")?;
            let x = WittClassHandle::new_with_cap(load_form(&rest[0], cap)?, cap)?;
            let y = WittClassHandle::new_with_cap(load_form(&rest[1], cap)?, cap)?;
            let equal = witt::witt_equal(&x, &y, cap)?;
            Ok(format!("witt equal: {}\n", if equal { "yes" } else { "no" }))
        }
        other => Err(usage_error(format!("unknown witt subcommand `{}`", other))),
    }
}

fn class_report(form: &PreMetricGroup, cap: u64, report: &mut String) -> Result<(), CliError> {
    let handle = WittClassHandle::new_with_cap(form.clone(), cap)?;
    let gauss = form.gauss_sum()?;
    let _ = writeln!(report, "{}", form);
    let _ = writeln!(report, "order of group: {}", form.order());
    let _ = writeln!(report, "gauss magnitude_sq: {:.12}", gauss.magnitude_sq);
    match gauss.argument {
        GaussArgument::Snapped(a) => {
            let _ = writeln!(report, "gauss argument: {}", a);
        }
        GaussArgument::Unsnapped(raw) => {
            let _ = writeln!(report, "gauss argument (unsnapped): {:.12}", raw);
        }
    }
    let _ = writeln!(report, "anisotropic representative:");
    let _ = writeln!(report, "{}", handle.anisotropic());
    let _ = writeln!(
        report,
        "witt trivial: {}",
        if handle.is_trivial() { "yes" } else { "no" }
    );
    Ok(())
}

fn switt_command(args: &[String], cap: u64) -> Result<String, CliError> {
    match args.first().map(String::as_str) {
        Some("eq") => {
            let rest = require(&args[1..], 2, "switt eq")?;
            let x = WittClassHandle::new_with_cap(load_form(&rest[0], cap)?, cap)?;
            let y = WittClassHandle::new_with_cap(load_form(&rest[1], cap)?, cap)?;
            let equal = witt::switt_equal(&x, &y, cap)?;
            Ok(format!("switt equal: {}\n", if equal { "yes" } else { "no" }))
        }
        Some(other) => Err(usage_error(format!("unknown switt subcommand `{}`", other))),
        None => Err(usage_error("switt needs a subcommand: eq")),
    }
}

fn parse_level(token: &str) -> Result<u64, CliError> {
    let k = token
        .parse::<u64>()
        .map_err(|_| usage_error(format!("invalid level `{}`", token)))?;
    // the data verbs materialize tables of k+1 entries
    if k > 1_000_000 {
        return Err(user(format!("level {} is too large to tabulate", k)));
    }
    Ok(k)
}

fn sl2_command(args: &[String]) -> Result<String, CliError> {
    match args.first().map(String::as_str) {
        Some("data") => {
            let rest = require(&args[1..], 1, "sl2 data")?;
            let k = parse_level(&rest[0])?;
            let data = sl2::Sl2Data::new(k)?;
            let mut report = String::new();
            let _ = writeln!(report, "level {}", k);
            let _ = writeln!(report, "simple objects {}", k + 1);
            let _ = writeln!(report, "twists:");
            for j in data.labels() {
                let _ = writeln!(report, "[{}]: {}", j, data.twists[j as usize]);
            }
            let _ = writeln!(report, "fpdims:");
            for j in data.labels() {
                let _ = writeln!(report, "[{}]: {:.12}", j, data.fpdims[j as usize]);
            }
            let _ = writeln!(report, "fpdim category: {:.12}", sl2::fpdim_category(k)?);
            let _ = writeln!(
                report,
                "central charge: {}",
                sl2::central_charge_additive(k)?
            );
            let _ = writeln!(report, "xi exponent: {}", data.central_charge);
            let class = match sl2::classify_level(k)? {
                PointedPartClass::Nondegenerate => "nondegenerate",
                PointedPartClass::Tannakian => "tannakian",
                PointedPartClass::Super => "super",
            };
            let _ = writeln!(report, "pointed part: {}", class);
            Ok(report)
        }
        Some("condense") => {
            let rest = require(&args[1..], 1, "sl2 condense")?;
            let k = parse_level(&rest[0])?;
            let set = sl2::local_modules(k)?;
            let mut report = String::new();
            let _ = writeln!(report, "level {}", k);
            let _ = writeln!(report, "regular algebra: [0]+[{}]", k);
            for orbit in &set.orbits {
                let name = if orbit.split {
                    format!("{{{}}}", orbit.low)
                } else {
                    format!("{{{},{}}}", orbit.low, orbit.high)
                };
                let status = match (orbit.local, orbit.split) {
                    (true, true) => "local, splits",
                    (true, false) => "local",
                    (false, _) => "not local",
                };
                let _ = writeln!(report, "orbit {}: {}", name, status);
            }
            let _ = writeln!(report, "simple local modules: {}", set.simples.len());
            for simple in &set.simples {
                let _ = writeln!(
                    report,
                    "{}: dim {:.12} twist {}",
                    simple.label, simple.dim, simple.twist
                );
            }
            let total: f64 = set.simples.iter().map(|s| s.dim * s.dim).sum();
            let _ = writeln!(report, "sum of dim^2: {:.12} (= fpdim/4)", total);
            Ok(report)
        }
        Some(other) => Err(usage_error(format!("unknown sl2 subcommand `{}`", other))),
        None => Err(usage_error("sl2 needs a subcommand: data, condense")),
    }
}

fn format_element(e: &Element) -> String {
    let coords: Vec<String> = e.coords().iter().map(u64::to_string).collect();
    format!("({})", coords.join(","))
}

fn etale_command(args: &[String], cap: u64) -> Result<String, CliError> {
    match args.first().map(String::as_str) {
        Some("enumerate") => {
            let rest = require(&args[1..], 2, "etale enumerate")?;
            let c1 = load_form(&rest[0], cap)?;
            let c2 = load_form(&rest[1], cap)?;
            let found = etale::enumerate_etale(&c1, &c2, cap)?;
            let mut report = String::new();
            let _ = writeln!(report, "connected etale algebras: {}", found.len());
            for (i, (algebra, datum)) in found.iter().enumerate() {
                let _ = writeln!(report, "algebra {}: order {}", i + 1, algebra.order());
                let elements: Vec<String> =
                    algebra.elements().iter().map(format_element).collect();
                let _ = writeln!(report, "  elements: {}", elements.join(" "));
                let _ = writeln!(
                    report,
                    "  h1 order {}, h2 order {}, graph order {}",
                    datum.h1.order(),
                    datum.h2.order(),
                    datum.b1.order()
                );
                if datum.b1.order() > 1 {
                    let pairs: Vec<String> = datum
                        .phi
                        .iter()
                        .filter(|(a, _)| !a.is_identity())
                        .map(|(a, b)| format!("{} -> {}", format_element(a), format_element(b)))
                        .collect();
                    let _ = writeln!(report, "  phi: {}", pairs.join(", "));
                }
            }
            Ok(report)
        }
        Some(other) => Err(usage_error(format!("unknown etale subcommand `{}`", other))),
        None => Err(usage_error("etale needs a subcommand: enumerate")),
    }
}

fn presentation_command(args: &[String]) -> Result<String, CliError> {
    let max_level = match args {
        [flag, value] if flag == "--max-level" => value
            .parse::<usize>()
            .map_err(|_| usage_error(format!("invalid level `{}`", value)))?,
        _ => return Err(usage_error("presentation needs --max-level K")),
    };
    if max_level == 0 {
        return Err(usage_error("--max-level must be at least 1"));
    }
    let p = presentation::sl2_witt_presentation(max_level);
    let s = p
        .analyze()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut report = String::new();
    let _ = writeln!(report, "generators: {}", p.generator_names.len());
    let _ = writeln!(report, "relations: {}", p.relations.len());
    let factors: Vec<String> = s.invariant_factors.iter().map(u64::to_string).collect();
    let _ = writeln!(
        report,
        "invariant factors: {}",
        if factors.is_empty() {
            "none".to_string()
        } else {
            factors.join(" ")
        }
    );
    let _ = writeln!(report, "free rank: {}", s.free_rank);
    let _ = writeln!(report, "orders:");
    for (i, name) in p.generator_names.iter().enumerate() {
        let mut vector = vec![0i128; p.generator_names.len()];
        vector[i] = 1;
        match s.element_order(&vector) {
            ElementOrder::Finite(n) => {
                let _ = writeln!(report, "{} = {}", name, n);
            }
            ElementOrder::Infinite => {
                let _ = writeln!(report, "{} = infinite", name);
            }
        }
    }
    Ok(report)
}

fn selftest_command(args: &[String]) -> Result<String, CliError> {
    let quick = match args {
        [] => false,
        [flag] if flag == "--quick" => true,
        _ => return Err(usage_error("selftest accepts only --quick")),
    };
    let outcomes = selftest::run_all(quick);
    let mut report = String::new();
    for outcome in &outcomes {
        let _ = writeln!(report, "{}", outcome.line());
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let _ = writeln!(report, "selftest: {}/{} passed", passed, outcomes.len());
    if passed != outcomes.len() {
        return Err(CliError::Internal(format!(
            "{} acceptance criterion(s) failed\n{}",
            outcomes.len() - passed,
            report
        )));
    }
    Ok(report)
}
