//! Experiment configuration: flat `key = value` files or a JSON object, merged with flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use cfpoisson::{BranchLaw, MeasureLaw, TargetFamily};
use serde_json::{json, Map, Value};

/// Invalid configuration (exit status 1).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Doeblin,
    Tuples,
    Pattern,
    NegControl,
    Renewal,
    LemmaRatio,
    Escape,
    Laplace,
    HittingTime,
    Spectrum,
    Mixing,
    ShortRet,
    Renyi,
    Digits,
    Measure,
}

pub const COMMANDS: [Command; 15] = [
    Command::Doeblin,
    Command::Tuples,
    Command::Pattern,
    Command::NegControl,
    Command::Renewal,
    Command::LemmaRatio,
    Command::Escape,
    Command::Laplace,
    Command::HittingTime,
    Command::Spectrum,
    Command::Mixing,
    Command::ShortRet,
    Command::Renyi,
    Command::Digits,
    Command::Measure,
];

const FAMILY_KEYS: &[&str] = &["family", "theta", "m", "exponent"];

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Doeblin => "doeblin",
            Command::Tuples => "tuples",
            Command::Pattern => "pattern",
            Command::NegControl => "negcontrol",
            Command::Renewal => "renewal",
            Command::LemmaRatio => "lemma-ratio",
            Command::Escape => "escape",
            Command::Laplace => "laplace",
            Command::HittingTime => "hitting-time",
            Command::Spectrum => "spectrum",
            Command::Mixing => "mixing",
            Command::ShortRet => "shortret",
            Command::Renyi => "renyi",
            Command::Digits => "digits",
            Command::Measure => "measure",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        COMMANDS
            .iter()
            .copied()
            .find(|c| c.name() == name.trim())
            .map_or_else(|| bad(format!("unknown command {name:?}")), Ok)
    }

    /// Short description written into every output.
    pub fn tag(self) -> &'static str {
        match self {
            Command::Doeblin => "Doeblin: occurrences of a large partial quotient",
            Command::Tuples => "runs of m consecutive large partial quotients",
            Command::Pattern => "occurrences of the pattern [j, j]",
            Command::NegControl => "negative control [1, n] or [n, 1]",
            Command::Renewal => "renewal chain visits to a tail set",
            Command::LemmaRatio => "perturbed leading eigenvalue ratio",
            Command::Escape => "escape rate of the open system",
            Command::Laplace => "Laplace transform prediction from lambda_n^n",
            Command::HittingTime => "first hitting time against Exp(1)",
            Command::Spectrum => "unperturbed Ulam spectrum",
            Command::Mixing => "decay of correlations",
            Command::ShortRet => "short return bound for cylinders",
            Command::Renyi => "Renyi distortion bound",
            Command::Digits => "certified continued fraction digits",
            Command::Measure => "target measure",
        }
    }

    /// Keys that may be set for this command, besides `command`, `out` and `threads`.
    fn keys(self) -> Vec<&'static str> {
        let mut k: Vec<&str> = match self {
            Command::Doeblin | Command::Tuples | Command::Pattern | Command::NegControl | Command::HittingTime => {
                vec!["n", "trials", "law", "seed", "reference"]
            }
            Command::Renewal => vec!["n", "trials", "seed", "branch", "threshold"],
            Command::LemmaRatio | Command::Laplace => vec!["n", "s", "grid"],
            Command::Escape => vec!["n", "grid"],
            Command::Spectrum => vec!["grid"],
            Command::Mixing => vec!["grid", "gaps", "a", "b"],
            Command::ShortRet => vec!["max_len", "max_digit"],
            Command::Renyi => vec!["max_len", "max_digit", "samples"],
            Command::Digits => vec!["count", "lo", "hi", "seed", "trial", "law"],
            Command::Measure => vec!["n", "law"],
        };
        if self.has_family() {
            k.extend_from_slice(FAMILY_KEYS);
        }
        if self == Command::HittingTime {
            k.retain(|&x| x != "reference");
        }
        k
    }

    fn has_family(self) -> bool {
        !matches!(
            self,
            Command::Renewal | Command::Spectrum | Command::Mixing | Command::ShortRet | Command::Renyi | Command::Digits
        )
    }

    fn defaults(self) -> Vec<(&'static str, &'static str)> {
        match self {
            Command::Doeblin => vec![("family", "tail"), ("n", "1000"), ("trials", "100000"), ("law", "lebesgue"), ("reference", "limit")],
            Command::Tuples => vec![("family", "tuple"), ("m", "2"), ("n", "4000"), ("trials", "100000"), ("law", "lebesgue"), ("reference", "limit")],
            Command::Pattern => vec![("family", "pattern"), ("n", "10000"), ("trials", "100000"), ("law", "lebesgue"), ("reference", "limit")],
            Command::NegControl => {
                vec![("family", "negcontrol"), ("n", "500"), ("trials", "100000"), ("law", "gauss"), ("reference", "t_hat")]
            }
            Command::Renewal => vec![("n", "2000"), ("trials", "100000"), ("branch", "calibrated"), ("threshold", "3")],
            Command::LemmaRatio => vec![("family", "tail"), ("n", "200,400,800"), ("s", "1"), ("grid", "8192")],
            Command::Escape => vec![("family", "tail"), ("n", "200,400,800"), ("grid", "8192")],
            Command::Laplace => vec![("family", "tail"), ("n", "800"), ("s", "1"), ("grid", "8192")],
            Command::HittingTime => vec![("family", "tail"), ("n", "2000"), ("trials", "100000"), ("law", "gauss")],
            Command::Spectrum => vec![("grid", "4096,8192")],
            Command::Mixing => vec![("grid", "8192"), ("gaps", "2..32"), ("a", "1"), ("b", "0:1/2")],
            Command::ShortRet => vec![("max_len", "4"), ("max_digit", "20")],
            Command::Renyi => vec![("max_len", "4"), ("max_digit", "20"), ("samples", "17")],
            Command::Digits => vec![("count", "20"), ("trial", "0"), ("law", "gauss")],
            Command::Measure => vec![("family", "tail"), ("n", "100"), ("law", "gauss")],
        }
    }
}

/// Raw `key -> value` pairs before validation.
pub type Raw = BTreeMap<String, String>;

pub fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

fn json_scalar(key: &str, v: &Value) -> Result<String, ConfigError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Array(items) => {
            let parts: Result<Vec<String>, _> = items.iter().map(|x| json_scalar(key, x)).collect();
            Ok(parts?.join(","))
        }
        _ => bad(format!("config key {key:?} must be a string, number or list")),
    }
}

/// Parses a config file: a single JSON object, or `key = value` lines with `#` comments.
pub fn parse_file(text: &str) -> Result<Raw, ConfigError> {
    let mut raw = Raw::new();
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(|e| ConfigError(format!("config is not valid JSON: {e}")))?;
        let obj = v.as_object().ok_or_else(|| ConfigError("config JSON must be an object".into()))?;
        for (k, v) in obj {
            raw.insert(normalize_key(k), json_scalar(k, v)?);
        }
        return Ok(raw);
    }
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return bad(format!("config line {}: expected key = value", i + 1));
        };
        let key = normalize_key(k);
        if key.is_empty() {
            return bad(format!("config line {}: empty key", i + 1));
        }
        if raw.insert(key.clone(), v.trim().to_string()).is_some() {
            return bad(format!("config line {}: duplicate key {key:?}", i + 1));
        }
    }
    Ok(raw)
}

/// Fully validated settings of one run.
#[derive(Clone, Debug)]
pub struct Config {
    pub command: Command,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Resolved values of the keys that apply to `command`.
    values: BTreeMap<String, String>,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim().parse().map_err(|_| ConfigError(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return bad(format!("{key}: empty list"));
    }
    items.iter().map(|s| parse_num(key, s)).collect()
}

/// `p/q` or an integer, as `(p, q)`.
pub fn parse_ratio(key: &str, v: &str) -> Result<(i64, i64), ConfigError> {
    let (p, q) = match v.split_once('/') {
        Some((p, q)) => (parse_num(key, p)?, parse_num(key, q)?),
        None => (parse_num(key, v)?, 1),
    };
    if q <= 0 || p < 0 {
        return bad(format!("{key}: {v:?} must be a nonnegative fraction p/q"));
    }
    Ok((p, q))
}

impl Config {
    /// Merges `file` and `flags` (flags win), fills defaults and validates every value.
    pub fn resolve(command: Command, file: &Raw, flags: &Raw) -> Result<Self, ConfigError> {
        let mut merged = file.clone();
        for (k, v) in flags {
            merged.insert(k.clone(), v.clone());
        }
        if let Some(c) = merged.remove("command") {
            if Command::parse(&c)? != command {
                return bad(format!("config is for {c:?}, not {}", command.name()));
            }
        }
        let out = merged.remove("out").map(PathBuf::from);
        let threads = match merged.remove("threads") {
            Some(t) => Some(parse_threads(&t)?),
            None => None,
        };
        let allowed = command.keys();
        let mut values = BTreeMap::new();
        for (k, v) in command.defaults() {
            values.insert(k.to_string(), v.to_string());
        }
        if allowed.contains(&"seed") {
            values.insert("seed".into(), "1".into());
        }
        for (k, v) in merged {
            if !allowed.contains(&k.as_str()) {
                return bad(format!("key {k:?} does not apply to {}", command.name()));
            }
            values.insert(k, v);
        }
        values.retain(|k, _| allowed.contains(&k.as_str()));
        if command == Command::Digits && values.contains_key("lo") {
            for k in ["seed", "trial", "law"] {
                values.remove(k);
            }
        }
        let cfg = Config { command, out, threads, values };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.command.has_family() {
            self.family()?;
        }
        for key in self.values.keys() {
            match key.as_str() {
                "n" => {
                    if self.ns()?.contains(&0) {
                        return bad("n: values must be at least 1");
                    }
                }
                "trials" => {
                    if self.u64("trials")? == 0 {
                        return bad("trials must be at least 1");
                    }
                }
                "seed" | "trial" | "count" | "max_len" | "max_digit" | "samples" | "threshold" => {
                    self.u64(key)?;
                }
                "s" => {
                    if self.s_values()?.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                        return bad("s: values must be finite and nonnegative");
                    }
                }
                "grid" => {
                    if self.grids()?.iter().any(|&g| g < 2) {
                        return bad("grid: sizes must be at least 2");
                    }
                }
                "gaps" => {
                    self.gaps()?;
                }
                "law" => {
                    self.law()?;
                }
                "branch" => {
                    self.branch()?;
                }
                "reference" => {
                    let r = self.str("reference");
                    if r != "limit" && r != "t_hat" {
                        return bad(format!("reference must be limit or t_hat, got {r:?}"));
                    }
                }
                "a" => {
                    self.word("a")?;
                }
                "b" => {
                    self.b_interval()?;
                }
                "lo" | "hi" => {
                    parse_ratio(key, self.str(key))?;
                }
                _ => {}
            }
        }
        if self.values.contains_key("lo") != self.values.contains_key("hi") {
            return bad("lo and hi must be given together");
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map_or("", String::as_str)
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        parse_num(key, self.str(key))
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        parse_num(key, self.str(key))
    }

    pub fn seed(&self) -> u64 {
        self.u64("seed").unwrap_or(1)
    }

    pub fn ns(&self) -> Result<Vec<u64>, ConfigError> {
        parse_list("n", self.str("n"))
    }

    pub fn s_values(&self) -> Result<Vec<f64>, ConfigError> {
        parse_list("s", self.str("s"))
    }

    pub fn grids(&self) -> Result<Vec<usize>, ConfigError> {
        parse_list("grid", self.str("grid"))
    }

    /// Integer list with `a..b` inclusive ranges allowed.
    pub fn gaps(&self) -> Result<Vec<u64>, ConfigError> {
        let mut out = Vec::new();
        for part in self.str("gaps").split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match part.split_once("..") {
                Some((a, b)) => {
                    let (a, b): (u64, u64) = (parse_num("gaps", a)?, parse_num("gaps", b)?);
                    if a > b {
                        return bad(format!("gaps: empty range {part}"));
                    }
                    out.extend(a..=b);
                }
                None => out.push(parse_num("gaps", part)?),
            }
        }
        if out.is_empty() {
            return bad("gaps: empty list");
        }
        Ok(out)
    }

    pub fn law(&self) -> Result<MeasureLaw, ConfigError> {
        self.str("law").parse().map_err(|e: cfpoisson::Error| ConfigError(format!("law: {e}")))
    }

    pub fn word(&self, key: &str) -> Result<Vec<u64>, ConfigError> {
        let w: Vec<u64> = parse_list(key, self.str(key))?;
        if w.contains(&0) {
            return bad(format!("{key}: digits must be positive"));
        }
        Ok(w)
    }

    /// `lo:hi` with fractions `p/q`.
    pub fn b_interval(&self) -> Result<((i64, i64), (i64, i64)), ConfigError> {
        let v = self.str("b");
        let Some((lo, hi)) = v.split_once(':') else {
            return bad(format!("b: expected lo:hi, got {v:?}"));
        };
        let (lo, hi) = (parse_ratio("b", lo)?, parse_ratio("b", hi)?);
        if !((lo.0 as i128) * (hi.1 as i128) < (hi.0 as i128) * (lo.1 as i128) && hi.0 <= hi.1) {
            return bad(format!("b: need 0 <= lo < hi <= 1, got {v:?}"));
        }
        Ok((lo, hi))
    }

    pub fn family(&self) -> Result<TargetFamily, ConfigError> {
        let theta = || -> Result<f64, ConfigError> {
            let t = if self.has("theta") { self.f64("theta")? } else { 1.0 };
            if !(t.is_finite() && t > 0.0) {
                return bad("theta must be positive");
            }
            Ok(t)
        };
        let fam = match self.str("family") {
            "tail" => TargetFamily::TailSet { theta: theta()? },
            "tuple" => {
                let m = if self.has("m") { self.u64("m")? } else { 2 };
                if m == 0 {
                    return bad("m must be at least 1");
                }
                TargetFamily::TupleSet { m: m as usize, theta: theta()? }
            }
            "pattern" => {
                let (p, q) = if self.has("exponent") { parse_ratio("exponent", self.str("exponent"))? } else { (1, 4) };
                if p == 0 {
                    return bad("exponent must be positive");
                }
                TargetFamily::PatternSet { exponent: (p as u32, q as u32) }
            }
            "negcontrol" => TargetFamily::NegControl,
            other => return bad(format!("unknown family {other:?} (tail, tuple, pattern, negcontrol)")),
        };
        let extra: Vec<&str> = match fam {
            TargetFamily::TailSet { .. } => vec!["m", "exponent"],
            TargetFamily::TupleSet { .. } => vec!["exponent"],
            TargetFamily::PatternSet { .. } => vec!["theta", "m"],
            TargetFamily::NegControl => vec!["theta", "m", "exponent"],
        };
        if let Some(k) = extra.iter().find(|k| self.has(k)) {
            return bad(format!("key {k:?} does not apply to family {}", self.str("family")));
        }
        Ok(fam)
    }

    /// `calibrated`, `default`, `poisson:L`, `geometric:P` or `power:A`.
    pub fn branch(&self) -> Result<Option<BranchLaw>, ConfigError> {
        let v = self.str("branch");
        let law = match v.split_once(':') {
            None if v == "calibrated" => return Ok(None),
            None if v == "default" => BranchLaw::default(),
            Some(("poisson", x)) => BranchLaw::PoissonIntensity(parse_num("branch", x)?),
            Some(("geometric", x)) => BranchLaw::Geometric(parse_num("branch", x)?),
            Some(("power", x)) => BranchLaw::Power(parse_num("branch", x)?),
            _ => return bad(format!("branch: unknown law {v:?}")),
        };
        Ok(Some(law))
    }

    /// The resolved configuration as echoed into outputs.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command.name()));
        for (k, v) in &self.values {
            m.insert(k.clone(), json!(v));
        }
        Value::Object(m)
    }
}

pub fn parse_threads(v: &str) -> Result<usize, ConfigError> {
    match v.trim().parse::<usize>() {
        Ok(t) if t >= 1 => Ok(t),
        _ => bad(format!("threads must be a positive integer, got {v:?}")),
    }
}
