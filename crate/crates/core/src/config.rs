//! Sectioned `key = value` config files.
//!
//! ```text
//! [grid]     n
//! [params]   beta, delta, r, h_floor?, newton_tol?, max_inner_iters?
//! [forcing]  f1?, bound?
//! [run]      t_end, dt0?, scheme?, output_every?
//! [init]     h0 | h0_file
//! ```
//!
//! `#` and `;` start comments. Every error carries the offending line; a missing
//! key points at its section header, a missing section at the end of the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::forcing::ForcingSpec;
use crate::grid::PeriodicGrid;
use crate::params::{validate_params, InitialSpec, RawParams, RunConfig, Scheme};
use crate::scaling::PhysicalParams;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

/// A parsed but uninterpreted document.
#[derive(Debug, Clone)]
pub struct ConfigDoc {
    file: String,
    sections: BTreeMap<String, Section>,
    last_line: usize,
}

impl ConfigDoc {
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Config {
            file: file.to_string(),
            line,
            msg,
        };
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        let mut last_line = 1;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let body = raw.split(['#', ';']).next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("malformed section header `{body}`")))?
                    .trim()
                    .to_ascii_lowercase();
                if sections.contains_key(&name) {
                    return Err(err(line, format!("duplicate section [{name}]")));
                }
                sections.insert(
                    name.clone(),
                    Section {
                        line,
                        entries: BTreeMap::new(),
                    },
                );
                current = Some(name);
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{body}`")))?;
            let key = k.trim().to_ascii_lowercase();
            let sec = current
                .as_ref()
                .ok_or_else(|| err(line, format!("`{key}` appears before any section")))?;
            let entries = &mut sections
                .get_mut(sec)
                .expect("current section exists")
                .entries;
            if entries.contains_key(&key) {
                return Err(err(line, format!("duplicate key `{key}` in [{sec}]")));
            }
            entries.insert(
                key,
                Entry {
                    value: v.trim().to_string(),
                    line,
                },
            );
        }
        Ok(Self {
            file: file.to_string(),
            sections,
            last_line,
        })
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Config {
            file: self.file.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn section(&self, name: &str) -> Result<&Section> {
        self.sections
            .get(name)
            .ok_or_else(|| self.err(self.last_line, format!("missing section [{name}]")))
    }

    fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    fn optional(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.sections.get(sec).and_then(|s| s.entries.get(key))
    }

    fn required(&self, sec: &str, key: &str) -> Result<&Entry> {
        let s = self.section(sec)?;
        s.entries
            .get(key)
            .ok_or_else(|| self.err(s.line, format!("missing key `{key}` in [{sec}]")))
    }

    fn number(&self, e: &Entry, key: &str) -> Result<f64> {
        let v: f64 = e.value.parse().map_err(|_| {
            self.err(
                e.line,
                format!("`{key}` must be a number, got `{}`", e.value),
            )
        })?;
        if !v.is_finite() {
            return Err(self.err(e.line, format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    fn integer(&self, e: &Entry, key: &str) -> Result<usize> {
        e.value.parse().map_err(|_| {
            self.err(
                e.line,
                format!("`{key}` must be a nonnegative integer, got `{}`", e.value),
            )
        })
    }

    fn req_f64(&self, sec: &str, key: &str) -> Result<f64> {
        let e = self.required(sec, key)?;
        self.number(e, key)
    }

    fn opt_f64(&self, sec: &str, key: &str) -> Result<Option<f64>> {
        self.optional(sec, key)
            .map(|e| self.number(e, key))
            .transpose()
    }

    fn opt_usize(&self, sec: &str, key: &str) -> Result<Option<usize>> {
        self.optional(sec, key)
            .map(|e| self.integer(e, key))
            .transpose()
    }

    /// Rewraps a semantic error at `line`.
    fn at(&self, line: usize, e: Error) -> Error {
        match e {
            Error::Config { .. } => e,
            other => self.err(line, other.to_string()),
        }
    }
}

/// Reads and validates a run configuration. Relative `h0_file` paths resolve
/// against the config's directory.
pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_run_config(&text, &path.display().to_string(), path.parent())
}

pub fn parse_run_config(text: &str, file: &str, base: Option<&Path>) -> Result<RunConfig> {
    let doc = ConfigDoc::parse(text, file)?;

    let n_entry = doc.required("grid", "n")?;
    let grid =
        PeriodicGrid::new(doc.integer(n_entry, "n")?).map_err(|e| doc.at(n_entry.line, e))?;

    let mut raw = RawParams::new(
        doc.req_f64("params", "beta")?,
        doc.req_f64("params", "delta")?,
        doc.req_f64("params", "r")?,
    );
    if let Some(v) = doc.opt_f64("params", "h_floor")? {
        raw.h_floor = v;
    }
    if let Some(v) = doc.opt_f64("params", "newton_tol")? {
        raw.newton_tol = v;
    }
    if let Some(v) = doc.opt_usize("params", "max_inner_iters")? {
        raw.max_inner_iters = v;
    }

    if doc.has_section("forcing") {
        let bound = doc.opt_f64("forcing", "bound")?;
        if let Some(e) = doc.optional("forcing", "f1") {
            let f1 = Expr::parse(&e.value).map_err(|err| doc.at(e.line, err))?;
            raw.forcing = ForcingSpec::new(f1, bound);
        }
    }
    let params_line = doc.section("params")?.line;
    let params = validate_params(raw).map_err(|e| doc.at(params_line, e))?;

    let t_end_entry = doc.required("run", "t_end")?;
    let t_end = doc.number(t_end_entry, "t_end")?;
    let scheme = match doc.optional("run", "scheme") {
        Some(e) => e
            .value
            .parse::<Scheme>()
            .map_err(|err| doc.at(e.line, err))?,
        None => Scheme::Bdf2,
    };
    let output_every = doc.opt_usize("run", "output_every")?.unwrap_or(1);

    let initial = match (doc.optional("init", "h0"), doc.optional("init", "h0_file")) {
        (Some(_), Some(e)) => return Err(doc.err(e.line, "give either h0 or h0_file, not both")),
        (Some(e), None) => {
            InitialSpec::Expr(Expr::parse(&e.value).map_err(|err| doc.at(e.line, err))?)
        }
        (None, Some(e)) => {
            let p = PathBuf::from(&e.value);
            let p = match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            };
            InitialSpec::Table(read_table(&p).map_err(|err| doc.at(e.line, err))?)
        }
        (None, None) => {
            let s = doc.section("init")?;
            return Err(doc.err(s.line, "missing key `h0` (or `h0_file`) in [init]"));
        }
    };
    let init_line = doc.section("init")?.line;
    let h0 = initial.evaluate(grid).map_err(|e| doc.at(init_line, e))?;

    params.forcing().check(t_end).map_err(|e| {
        doc.at(
            doc.sections.get("forcing").map_or(params_line, |s| s.line),
            e,
        )
    })?;

    let dt0 = match doc.optional("run", "dt0") {
        Some(e) => doc.number(e, "dt0")?,
        None => RunConfig::default_dt0(grid, &params, &h0),
    };
    let config = RunConfig {
        grid,
        params,
        dt0,
        t_end,
        scheme,
        output_every,
        initial,
    };
    config.validate().map_err(|e| doc.at(t_end_entry.line, e))?;
    Ok(config)
}

/// One height per line; with commas, the last column is taken. A header line is skipped.
pub fn read_table(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.rsplit(',').next().unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::InvalidParam(format!(
                    "{}: line {}: not a number: `{cell}`",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

/// Reads a `[physical]` section with keys `rho_f rho_s mu V L H E b nu D`.
pub fn parse_physical(text: &str, file: &str) -> Result<PhysicalParams> {
    let doc = ConfigDoc::parse(text, file)?;
    let g = |k: &str| doc.req_f64("physical", &k.to_ascii_lowercase());
    let p = PhysicalParams {
        rho_f: g("rho_f")?,
        rho_s: g("rho_s")?,
        mu: g("mu")?,
        V: g("V")?,
        L: g("L")?,
        H: g("H")?,
        E: g("E")?,
        b: g("b")?,
        nu: g("nu")?,
        D: g("D")?,
    };
    let line = doc.section("physical")?.line;
    p.validate().map_err(|e| doc.at(line, e))?;
    Ok(p)
}

pub fn load_physical(path: &Path) -> Result<PhysicalParams> {
    let text = std::fs::read_to_string(path)?;
    parse_physical(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# decay of a single mode
[grid]
n = 32

[params]
beta = 12
delta = 0   ; inactive
r = 1

[run]
t_end = 1e-4
dt0 = 1e-6
scheme = be
output_every = 5

[init]
h0 = 1 + 0.3*sin(2*pi*x)
";

    fn line_of(e: Error) -> (usize, String) {
        match e {
            Error::Config { line, msg, .. } => (line, msg),
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn parses_full_file() {
        let c = parse_run_config(GOOD, "good.ini", None).unwrap();
        assert_eq!(c.grid.n(), 32);
        assert_eq!(c.params.beta(), 12.0);
        assert_eq!(c.scheme, Scheme::Be);
        assert_eq!(c.output_every, 5);
        assert_eq!(c.dt0, 1e-6);
        assert!(c.params.forcing().is_zero());
    }

    #[test]
    fn missing_beta_points_at_section() {
        let text = GOOD.replace("beta = 12\n", "");
        let (line, msg) = line_of(parse_run_config(&text, "bad.ini", None).unwrap_err());
        assert_eq!(line, 5);
        assert!(msg.contains("beta"), "{msg}");
    }

    #[test]
    fn bad_value_points_at_line() {
        let text = GOOD.replace("r = 1", "r = one");
        assert_eq!(
            line_of(parse_run_config(&text, "bad.ini", None).unwrap_err()).0,
            8
        );
        let text = GOOD.replace("r = 1", "r = 4");
        assert_eq!(
            line_of(parse_run_config(&text, "bad.ini", None).unwrap_err()).0,
            5
        );
        let text = GOOD.replace("h0 = 1 + 0.3*sin(2*pi*x)", "h0 = 1 + * x");
        assert_eq!(
            line_of(parse_run_config(&text, "bad.ini", None).unwrap_err()).0,
            17
        );
        let text = GOOD.replace("scheme = be", "scheme = rk4");
        assert_eq!(
            line_of(parse_run_config(&text, "bad.ini", None).unwrap_err()).0,
            13
        );
    }

    #[test]
    fn missing_section_and_defaults() {
        let text = GOOD.replace("[run]", "[other]");
        let (line, msg) = line_of(parse_run_config(&text, "bad.ini", None).unwrap_err());
        assert!(msg.contains("[run]"));
        assert_eq!(line, GOOD.lines().count());
        let text = GOOD
            .replace("dt0 = 1e-6\n", "")
            .replace("scheme = be\n", "");
        let c = parse_run_config(&text, "x.ini", None).unwrap();
        assert_eq!(c.scheme, Scheme::Bdf2);
        assert!(c.dt0 > 0.0);
    }

    #[test]
    fn forcing_section() {
        let text = format!("{GOOD}\n[forcing]\nf1 = 12\nbound = 20\n");
        let c = parse_run_config(&text, "f.ini", None).unwrap();
        assert_eq!(c.params.forcing().f1().as_constant(), Some(12.0));
        let text = format!("{GOOD}\n[forcing]\nf1 = 12\nbound = 5\n");
        let (line, _) = line_of(parse_run_config(&text, "f.ini", None).unwrap_err());
        assert_eq!(line, GOOD.lines().count() + 2);
    }

    #[test]
    fn table_initial_profile() {
        let dir = std::env::temp_dir().join(format!("sixfilm-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rows: String = (0..32)
            .map(|j| format!("{},{}\n", j as f64 / 32.0, 1.0 + 0.01 * j as f64))
            .collect();
        std::fs::write(dir.join("h0.csv"), format!("x,h\n{rows}")).unwrap();
        let text = GOOD.replace("h0 = 1 + 0.3*sin(2*pi*x)", "h0_file = h0.csv");
        let c = parse_run_config(&text, "t.ini", Some(&dir)).unwrap();
        match c.initial {
            InitialSpec::Table(v) => assert_eq!(v.len(), 32),
            other => panic!("{other:?}"),
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn physical_file() {
        let text = "[physical]\nrho_f = 1\nrho_s = 1\nmu = 1\nV = 1\nL = 1\nH = 0.1\nE = 12\nb = 1\nnu = 0\nD = 2\n";
        let p = parse_physical(text, "p.ini").unwrap();
        assert_eq!(p.E, 12.0);
        let (line, _) =
            line_of(parse_physical(&text.replace("nu = 0", "nu = 0.7"), "p.ini").unwrap_err());
        assert_eq!(line, 1);
    }
}
