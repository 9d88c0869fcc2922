//! Parameter tables, config files and argument parsing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "DYADIC_OUT";
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CommandKind {
    Simulate,
    SelfSimilar,
    Gamma,
    Radius,
    Series,
    Verify,
    Decay,
    Blowup,
    Coalesce,
}

impl CommandKind {
    pub const ALL: [CommandKind; 9] = [
        CommandKind::Simulate,
        CommandKind::SelfSimilar,
        CommandKind::Gamma,
        CommandKind::Radius,
        CommandKind::Series,
        CommandKind::Verify,
        CommandKind::Decay,
        CommandKind::Blowup,
        CommandKind::Coalesce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::SelfSimilar => "selfsimilar",
            CommandKind::Gamma => "gamma",
            CommandKind::Radius => "radius",
            CommandKind::Series => "series",
            CommandKind::Verify => "verify",
            CommandKind::Decay => "decay",
            CommandKind::Blowup => "blowup",
            CommandKind::Coalesce => "coalesce",
        }
    }

    fn about(self) -> &'static str {
        match self {
            CommandKind::Simulate => "Integrate the truncated model from a preset",
            CommandKind::SelfSimilar => "Build a self-similar profile",
            CommandKind::Gamma => "Compute the critical initial value gamma",
            CommandKind::Radius => "Locate the zero R of the auxiliary series",
            CommandKind::Series => "Tabulate the generating-function coefficients",
            CommandKind::Verify => "Run the numerical lemma checks",
            CommandKind::Decay => "Decay-rate and dissipation experiments",
            CommandKind::Blowup => "Blow-up of negative self-similar data",
            CommandKind::Coalesce => "Analytic versus Galerkin energy for negative data",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn params(self) -> Vec<Param> {
        use Kind::*;
        let mut p = Vec::new();
        let integration = [
            Param::new("rtol", Float, "1e-10", "relative tolerance"),
            Param::new("atol", Float, "1e-14", "absolute tolerance"),
            Param::new(
                "method",
                Choice(&["rosenbrock", "dopri5"]),
                "rosenbrock",
                "stepper",
            ),
        ];
        let terms = Param::new("terms", Count, "200", "number of series coefficients");
        match self {
            CommandKind::Simulate => {
                p.push(Param::new(
                    "preset",
                    Choice(PRESETS),
                    "selfsimilar",
                    "initial data",
                ));
                p.push(Param::new("n0", Count, "0", "profile index shift"));
                p.push(Param::new("t0", Float, "-1", "profile singular time"));
                p.push(Param::new("modes", Count, "28", "truncation level N"));
                p.push(Param::new(
                    "amplitude",
                    Float,
                    "1",
                    "level L of the flat preset",
                ));
                p.push(Param::new("t_start", Float, "1", "initial time"));
                p.push(Param::new("t_end", Float, "50", "final time"));
                p.push(Param::new(
                    "record_every",
                    Float,
                    "0.5",
                    "sampling interval",
                ));
                p.push(Param::new(
                    "check_modes",
                    Count,
                    "22",
                    "modes compared with the profile",
                ));
                p.push(terms);
                p.extend(integration);
            }
            CommandKind::SelfSimilar => {
                p.push(Param::new("n0", Count, "0", "index shift"));
                p.push(Param::new("t0", Float, "-1", "singular time"));
                p.push(Param::new("modes", Count, "60", "number of coefficients"));
                p.push(terms);
            }
            CommandKind::Gamma => {
                p.push(Param::new(
                    "method",
                    Choice(&["series", "shooting", "both"]),
                    "both",
                    "route",
                ));
                p.push(Param::new("tol", Float, "1e-9", "bracket width"));
                p.push(terms);
            }
            CommandKind::Radius => {
                p.push(Param::new("tol", Float, "1e-10", "bracket width"));
                p.push(terms);
            }
            CommandKind::Series => p.push(terms),
            CommandKind::Verify => {
                p.push(Param::new("suite", Choice(SUITES), "all", "checks to run"));
                p.push(Param::new("grid", Count, "3600", "circle grid points"));
                p.push(Param::new("k_max", Count, "60", "largest alpha index"));
                p.push(Param::new("points", Count, "100", "real-axis grid points"));
                p.push(terms);
            }
            CommandKind::Decay => {
                p.push(Param::new(
                    "kind",
                    Choice(&["upper", "lower", "dissipation"]),
                    "upper",
                    "experiment",
                ));
                p.push(Param::new(
                    "preset",
                    Choice(&["selfsimilar", "single", "flat"]),
                    "selfsimilar",
                    "initial data (upper, lower)",
                ));
                p.push(Param::new("n0", Count, "0", "profile index shift"));
                p.push(Param::new("t0", Float, "-1", "profile singular time"));
                p.push(Param::new("modes", Count, "28", "truncation level N"));
                p.push(Param::new("t_start", Float, "0", "initial time"));
                p.push(Param::new("t_max", Float, "1000", "final time"));
                p.push(Param::new("n", Count, "3", "mode index of the lower bound"));
                p.push(Param::new("amplitude", Float, "1", "flat level L"));
                p.push(Param::new("m", Count, "1", "first dissipative mode M"));
                p.push(Param::new("eps", Float, "1", "budget fraction"));
                p.push(terms);
                p.extend(integration);
            }
            CommandKind::Blowup => {
                p.push(Param::new("n0", Count, "0", "profile index shift"));
                p.push(Param::new("t0", Float, "1", "blow-up time"));
                p.push(Param::new(
                    "modes",
                    Count,
                    "28",
                    "Galerkin contrast truncation",
                ));
                p.push(terms);
            }
            CommandKind::Coalesce => {
                p.push(Param::new("n0", Count, "0", "profile index shift"));
                p.push(Param::new("t0", Float, "1", "blow-up time"));
                p.push(Param::new("modes", Count, "28", "truncation level N"));
                p.push(terms);
                p.extend(integration);
            }
        }
        p
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const PRESETS: &[&str] = &["selfsimilar", "flat", "single", "negative-selfsimilar"];
pub const SUITES: &[&str] = &[
    "all",
    "alpha",
    "rouche",
    "h-identity",
    "psi",
    "tail",
    "g-closed",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Count,
    Float,
    Choice(&'static [&'static str]),
    Path,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    /// Config-file key; the flag is the same with `-` for `_`.
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

impl Param {
    const fn new(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Self {
        Param {
            key,
            kind,
            default,
            help,
        }
    }

    pub fn flag(&self) -> String {
        self.key.replace('_', "-")
    }

    pub fn parse(&self, raw: &str) -> Result<Value, String> {
        let raw = raw.trim();
        match self.kind {
            Kind::Count => raw
                .parse::<usize>()
                .map(Value::Count)
                .map_err(|_| format!("{}: expected a nonnegative integer, got `{raw}`", self.key)),
            Kind::Float => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Value::Float(v)),
                _ => Err(format!(
                    "{}: expected a finite number, got `{raw}`",
                    self.key
                )),
            },
            Kind::Choice(opts) => {
                if opts.contains(&raw) {
                    Ok(Value::Str(raw.to_string()))
                } else {
                    Err(format!(
                        "{}: expected one of {}, got `{raw}`",
                        self.key,
                        opts.join("|")
                    ))
                }
            }
            Kind::Path => {
                if raw.is_empty() {
                    Err(format!("{}: empty path", self.key))
                } else {
                    Ok(Value::Path(PathBuf::from(raw)))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Count(usize),
    Float(f64),
    Str(String),
    Path(PathBuf),
}

impl Value {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Count(v) => (*v).into(),
            Value::Float(v) => (*v).into(),
            Value::Str(s) => s.clone().into(),
            Value::Path(p) => p.display().to_string().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: BTreeMap<String, Value>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn count(&self, key: &str) -> usize {
        match self.params.get(key) {
            Some(Value::Count(v)) => *v,
            other => panic!("parameter {key} is not a count: {other:?}"),
        }
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.params.get(key) {
            Some(Value::Float(v)) => *v,
            other => panic!("parameter {key} is not a number: {other:?}"),
        }
    }

    pub fn string(&self, key: &str) -> &str {
        match self.params.get(key) {
            Some(Value::Str(v)) => v,
            other => panic!("parameter {key} is not a string: {other:?}"),
        }
    }

    pub fn params_json(&self) -> serde_json::Value {
        dyadic::output::object(self.params.iter().map(|(k, v)| (k.clone(), v.to_json())))
    }
}

/// Result of a parse that did not produce a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseExit {
    /// Usage text requested; print and exit 0.
    Help(String),
    /// Malformed input; one-line diagnostic, exit 2.
    Malformed(String),
}

/// Flat `key = value` text with `#` comments. Keys may use `-` or `_`.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        let v = v.trim();
        let v = v
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(v);
        if out.iter().any(|(k, _)| *k == key) {
            return Err(format!("config line {}: duplicate key `{key}`", i + 1));
        }
        out.push((key, v.to_string()));
    }
    Ok(out)
}

fn out_dir_param() -> Param {
    Param::new("out_dir", Kind::Path, DEFAULT_OUT, "artifact directory")
}

pub fn cli() -> Command {
    let mut root = Command::new("dyadic")
        .about("Numerical laboratory for the inviscid dyadic shell model")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("key = value file; flags take precedence"),
        )
        .arg(
            Arg::new("out_dir")
                .long("out-dir")
                .global(true)
                .value_name("DIR")
                .help(format!(
                    "artifact directory [env: {OUT_ENV}] [default: {DEFAULT_OUT}]"
                )),
        );
    for kind in CommandKind::ALL {
        let mut sub = Command::new(kind.name()).about(kind.about());
        for p in kind.params() {
            let help = match p.kind {
                Kind::Choice(opts) => {
                    format!("{} ({}) [default: {}]", p.help, opts.join("|"), p.default)
                }
                _ => format!("{} [default: {}]", p.help, p.default),
            };
            sub = sub.arg(
                Arg::new(p.key)
                    .long(p.flag())
                    .value_name(p.key.to_uppercase())
                    .allow_negative_numbers(true)
                    .action(ArgAction::Set)
                    .help(help),
            );
        }
        root = root.subcommand(sub);
    }
    root
}

fn one_line(err: &clap::Error) -> String {
    let text = err.to_string();
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments")
        .trim();
    line.strip_prefix("error: ").unwrap_or(line).to_string()
}

/// Builds a configuration from `argv` (without the program name), the
/// contents of the config file if one was named, and `DYADIC_OUT`.
///
/// Precedence: flags, then config file, then defaults. The output directory
/// is taken from `--out-dir`, then `DYADIC_OUT`, then the config file.
pub fn parse_with<F>(
    argv: &[String],
    read_config: F,
    env_out: Option<&str>,
) -> Result<RunConfig, ParseExit>
where
    F: FnOnce(&str) -> Result<String, String>,
{
    let args = std::iter::once("dyadic".to_string()).chain(argv.iter().cloned());
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind::*;
            return Err(match e.kind() {
                DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand => {
                    ParseExit::Help(e.to_string())
                }
                _ => ParseExit::Malformed(one_line(&e)),
            });
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let command = CommandKind::from_name(name).expect("registered subcommand");
    build(command, sub, read_config, env_out).map_err(ParseExit::Malformed)
}

fn build<F>(
    command: CommandKind,
    m: &ArgMatches,
    read_config: F,
    env_out: Option<&str>,
) -> Result<RunConfig, String>
where
    F: FnOnce(&str) -> Result<String, String>,
{
    let table = command.params();
    let mut file_values: BTreeMap<String, String> = BTreeMap::new();
    if let Some(path) = m.get_one::<String>("config") {
        let text = read_config(path).map_err(|e| format!("config {path}: {e}"))?;
        for (k, v) in parse_config_text(&text)? {
            if k != "out_dir" && !table.iter().any(|p| p.key == k) {
                return Err(format!("unknown key `{k}` for command {command}"));
            }
            file_values.insert(k, v);
        }
    }
    let mut params = BTreeMap::new();
    for p in &table {
        let raw = m
            .get_one::<String>(p.key)
            .map(String::as_str)
            .or(file_values.get(p.key).map(String::as_str))
            .unwrap_or(p.default);
        params.insert(p.key.to_string(), p.parse(raw)?);
    }
    let od = out_dir_param();
    let raw_out = m
        .get_one::<String>("out_dir")
        .map(String::as_str)
        .or(env_out.filter(|s| !s.is_empty()))
        .or(file_values.get("out_dir").map(String::as_str))
        .unwrap_or(DEFAULT_OUT);
    let out_dir = match od.parse(raw_out)? {
        Value::Path(p) => p,
        _ => unreachable!(),
    };
    Ok(RunConfig {
        command,
        params,
        out_dir,
    })
}

/// [`parse_with`] reading the named file and the process environment.
pub fn parse(argv: &[String]) -> Result<RunConfig, ParseExit> {
    let env = std::env::var(OUT_ENV).ok();
    parse_with(
        argv,
        |p| std::fs::read_to_string(p).map_err(|e| e.to_string()),
        env.as_deref(),
    )
}
