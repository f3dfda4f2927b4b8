//! Plain-text run configurations: `key = value` lines, `#` comments, and one
//! `[run]` section per parameter row. The format is diff-friendly and parsed
//! without dependencies.
//!
//! ```text
//! problem = tv
//! size = 64
//! mu = 1000
//! seed = 1
//! outdir = out
//!
//! [run]
//! tau = 0.0
//! theta = 1.0
//!
//! [run]
//! tau = 0.8
//! theta = 1.12
//! sigma_tilde = 0.074
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use sympadmm::region::{self, sigma_tilde_default};

#[derive(Debug)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn diag(line: Option<usize>, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone)]
pub enum ProblemKind {
    Tv {
        image: Option<PathBuf>,
        rows: usize,
        cols: usize,
    },
    QpFixture {
        n: usize,
        p: usize,
        m: usize,
    },
}

#[derive(Debug, Clone)]
pub struct RunRow {
    pub tau: f64,
    pub theta: f64,
    pub sigma_tilde: Option<f64>,
    pub line: usize,
}

impl RunRow {
    /// σ̃: the override when present, the default rule otherwise.
    pub fn resolve_sigma_tilde(&self) -> Result<f64, String> {
        match self.sigma_tilde {
            Some(v) => Ok(v),
            None => sigma_tilde_default(self.tau, self.theta).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub mu: f64,
    pub kernel_size: usize,
    pub kernel_std: f64,
    pub noise_variance: f64,
    pub seed: u64,
    pub beta: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: Option<usize>,
    pub sigma_hat: Option<f64>,
    pub monitors: bool,
    pub outdir: PathBuf,
    pub ref_tol: f64,
    pub ref_max_outer: usize,
    pub ref_max_inner: usize,
    pub rows: Vec<RunRow>,
}

struct Entry {
    value: String,
    line: usize,
}

fn parse_sections(
    text: &str,
) -> Result<(HashMap<String, Entry>, Vec<(usize, HashMap<String, Entry>)>), Diagnostic> {
    let mut globals: HashMap<String, Entry> = HashMap::new();
    let mut runs: Vec<(usize, HashMap<String, Entry>)> = Vec::new();
    let mut in_run = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line == "[run]" {
                runs.push((lineno, HashMap::new()));
                in_run = true;
                continue;
            }
            return Err(diag(Some(lineno), format!("unknown section {line}")));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| diag(Some(lineno), "expected key = value"))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if value.is_empty() {
            return Err(diag(Some(lineno), format!("empty value for {key}")));
        }
        let target = if in_run {
            &mut runs.last_mut().expect("open run section").1
        } else {
            &mut globals
        };
        if target.insert(key.clone(), Entry { value, line: lineno }).is_some() {
            return Err(diag(Some(lineno), format!("duplicate key {key}")));
        }
    }
    Ok((globals, runs))
}

fn take<T: std::str::FromStr>(
    map: &mut HashMap<String, Entry>,
    key: &str,
    default: T,
) -> Result<T, Diagnostic>
where
    T::Err: fmt::Display,
{
    match map.remove(key) {
        None => Ok(default),
        Some(e) => e
            .value
            .parse()
            .map_err(|err| diag(Some(e.line), format!("bad value for {key}: {err}"))),
    }
}

fn take_opt<T: std::str::FromStr>(
    map: &mut HashMap<String, Entry>,
    key: &str,
) -> Result<Option<(T, usize)>, Diagnostic>
where
    T::Err: fmt::Display,
{
    match map.remove(key) {
        None => Ok(None),
        Some(e) => e
            .value
            .parse()
            .map(|v| Some((v, e.line)))
            .map_err(|err| diag(Some(e.line), format!("bad value for {key}: {err}"))),
    }
}

pub fn parse(text: &str) -> Result<RunConfig, Diagnostic> {
    let (mut globals, run_sections) = parse_sections(text)?;

    let problem_kind = match globals.remove("problem") {
        None => "tv".to_string(),
        Some(e) => e.value,
    };
    let problem = match problem_kind.as_str() {
        "tv" => {
            let image = globals.remove("image").map(|e| PathBuf::from(e.value));
            let (rows, cols) = match globals.remove("size") {
                None => (64, 64),
                Some(e) => {
                    let s = e.value.clone();
                    let parse_dim = |t: &str| {
                        t.trim().parse::<usize>().map_err(|err| {
                            diag(Some(e.line), format!("bad size component {t:?}: {err}"))
                        })
                    };
                    match s.split_once('x') {
                        Some((a, b)) => (parse_dim(a)?, parse_dim(b)?),
                        None => {
                            let v = parse_dim(&s)?;
                            (v, v)
                        }
                    }
                }
            };
            ProblemKind::Tv { image, rows, cols }
        }
        "qp-fixture" => ProblemKind::QpFixture {
            n: take(&mut globals, "qp_n", 5)?,
            p: take(&mut globals, "qp_p", 4)?,
            m: take(&mut globals, "qp_m", 3)?,
        },
        other => {
            return Err(diag(
                None,
                format!("unknown problem kind {other:?} (expected tv or qp-fixture)"),
            ))
        }
    };

    let sigma_hat = take_opt::<f64>(&mut globals, "sigma_hat")?.map(|(v, _)| v);
    let monitors = match globals.remove("monitors") {
        None => false,
        Some(e) => match e.value.as_str() {
            "on" | "true" => true,
            "off" | "false" => false,
            other => {
                return Err(diag(
                    Some(e.line),
                    format!("monitors must be on/off, got {other:?}"),
                ))
            }
        },
    };

    let config = RunConfig {
        problem,
        mu: take(&mut globals, "mu", 1e3)?,
        kernel_size: take(&mut globals, "kernel_size", 9)?,
        kernel_std: take(&mut globals, "kernel_std", 5.0)?,
        noise_variance: take(&mut globals, "noise_variance", 1e-4)?,
        seed: take(&mut globals, "seed", 1)?,
        beta: take(&mut globals, "beta", 1.0)?,
        tol: take(&mut globals, "tol", 1e-2)?,
        max_outer: take(&mut globals, "max_outer", 2000)?,
        max_inner: take_opt::<usize>(&mut globals, "max_inner")?.map(|(v, _)| v),
        sigma_hat,
        monitors,
        outdir: PathBuf::from(take(&mut globals, "outdir", "out".to_string())?),
        ref_tol: take(&mut globals, "ref_tol", 1e-4)?,
        ref_max_outer: take(&mut globals, "ref_max_outer", 60_000)?,
        ref_max_inner: take(&mut globals, "ref_max_inner", 8_000)?,
        rows: Vec::new(),
    };

    if let Some((key, e)) = globals.into_iter().next() {
        return Err(diag(Some(e.line), format!("unknown key {key}")));
    }

    let mut rows = Vec::new();
    for (section_line, mut map) in run_sections {
        let tau = take_opt::<f64>(&mut map, "tau")?
            .ok_or_else(|| diag(Some(section_line), "run section is missing tau"))?
            .0;
        let theta = take_opt::<f64>(&mut map, "theta")?
            .ok_or_else(|| diag(Some(section_line), "run section is missing theta"))?
            .0;
        let sigma_tilde = take_opt::<f64>(&mut map, "sigma_tilde")?.map(|(v, _)| v);
        if let Some((key, e)) = map.into_iter().next() {
            return Err(diag(Some(e.line), format!("unknown run key {key}")));
        }
        rows.push(RunRow {
            tau,
            theta,
            sigma_tilde,
            line: section_line,
        });
    }

    Ok(RunConfig { rows, ..config })
}

/// All validation diagnostics for a parsed config: region membership for
/// every row (with σ̃ resolved), file existence, positivity checks. Nothing
/// is executed.
pub fn validate(config: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if !(config.beta > 0.0) {
        out.push(diag(None, format!("beta must be positive, got {}", config.beta)));
    }
    if let Some(sh) = config.sigma_hat {
        if !(0.0..1.0).contains(&sh) {
            out.push(diag(None, format!("sigma_hat must lie in [0,1), got {sh}")));
        }
    }
    match &config.problem {
        ProblemKind::Tv { image, rows, cols } => {
            if *rows == 0 || *cols == 0 {
                out.push(diag(None, "image size must be positive"));
            }
            if let Some(path) = image {
                if !path.exists() {
                    out.push(diag(None, format!("image file not found: {}", path.display())));
                }
            }
            if config.kernel_size % 2 == 0 {
                out.push(diag(
                    None,
                    format!("kernel size must be odd, got {}", config.kernel_size),
                ));
            }
            if !(config.mu > 0.0) {
                out.push(diag(None, format!("mu must be positive, got {}", config.mu)));
            }
            if config.noise_variance < 0.0 {
                out.push(diag(None, "noise variance must be nonnegative"));
            }
        }
        ProblemKind::QpFixture { n, p, m } => {
            if *n == 0 || *p == 0 || *m == 0 {
                out.push(diag(None, "qp fixture dimensions must be positive"));
            }
            if *m > n + p {
                out.push(diag(
                    None,
                    format!("qp fixture needs m <= n+p for a solvable constraint, got {m} > {n}+{p}"),
                ));
            }
        }
    }
    for row in &config.rows {
        match row.resolve_sigma_tilde() {
            Err(e) => {
                out.push(diag(Some(row.line), e));
                // name the region conditions violated even when the default
                // rule has no value to offer (checked at sigma_tilde = 0)
                for violation in region::region_violations(row.tau, row.theta, 0.0) {
                    out.push(diag(
                        Some(row.line),
                        format!("(tau={}, theta={}) violates: {violation}", row.tau, row.theta),
                    ));
                }
            }
            Ok(st) => {
                for violation in region::region_violations(row.tau, row.theta, st) {
                    out.push(diag(
                        Some(row.line),
                        format!(
                            "(tau={}, theta={}, sigma_tilde={st}) violates: {violation}",
                            row.tau, row.theta
                        ),
                    ));
                }
            }
        }
    }
    out
}
