//! INI run configuration.
//!
//! ```ini
//! [problem]
//! T = 1
//! a = "1"
//! a1 = "-1"
//! f = "sin(2*pi*t)"
//!
//! [grid]
//! nx = 33
//! nt = 32
//!
//! [solve]
//! strategy = auto
//!
//! [manufactured]
//! w_star = "exp(x)*(2+sin(2*pi*t))"
//!
//! [sweep]
//! eps = 0, 0.01, 0.02
//! ```
//!
//! Expression values may be double-quoted. Unknown sections and keys are
//! rejected so that typos do not silently fall back to defaults.

use std::path::Path;
use std::str::FromStr;

use hyperperiodic::diagnostics::{manufacture, ManufacturedProblem};
use hyperperiodic::expr::parse;
use hyperperiodic::problem::COEFFICIENT_NAMES;
use hyperperiodic::{GridSpec, ProblemSpec, SolveOptions, Strategy};
use ini::{Ini, ParseOption, Properties};

use crate::error::CliError;

const SECTIONS: [(&str, &[&str]); 6] = [
    ("problem", &["T", "k", "eps", "a", "a1", "a2", "a3", "f", "r0", "r1"]),
    ("grid", &["nx", "nt"]),
    ("solve", &["strategy", "tol_abs", "max_iter", "relaxation"]),
    ("manufactured", &["w_star"]),
    ("sweep", &["eps"]),
    ("kernel", &["rel_threshold"]),
];

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Problem as written; with a manufactured section, `f`, `r0` and `r1`
    /// are replaced by the derived data.
    pub spec: ProblemSpec,
    pub grid: GridSpec,
    pub solve: SolveOptions,
    pub manufactured: Option<ManufacturedProblem>,
    pub sweep_eps: Option<Vec<f64>>,
    pub kernel_threshold: f64,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn number<T: FromStr>(props: &Properties, section: &str, key: &str) -> Result<Option<T>, CliError> {
    props
        .get(key)
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| config_err(format!("[{section}] {key}: cannot parse `{v}`")))
        })
        .transpose()
}

/// Parses `NXxNT`, e.g. `65x64`.
pub fn parse_grid(text: &str) -> Result<GridSpec, CliError> {
    let bad = || config_err(format!("grid `{text}` is not of the form NXxNT"));
    let (nx, nt) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let nx = nx.trim().parse().map_err(|_| bad())?;
    let nt = nt.trim().parse().map_err(|_| bad())?;
    Ok(GridSpec::new(nx, nt)?)
}

impl RunConfig {
    pub fn load(path: &Path, grid_override: Option<GridSpec>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_str(&text, grid_override)
    }

    pub fn from_str(text: &str, grid_override: Option<GridSpec>) -> Result<Self, CliError> {
        let opt = ParseOption {
            enabled_quote: true,
            enabled_escape: false,
            ..Default::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| config_err(format!("config: {e}")))?;
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.is_empty() {
                    continue;
                }
                return Err(config_err("keys outside a section"));
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                return Err(config_err(format!("unknown section [{name}]")));
            };
            if let Some((key, _)) = props.iter().find(|(k, _)| !keys.contains(k)) {
                return Err(config_err(format!("[{name}] unknown key `{key}`")));
            }
        }
        let empty = Properties::new();
        let section = |name: &str| ini.section(Some(name)).unwrap_or(&empty);

        let problem = ini
            .section(Some("problem"))
            .ok_or_else(|| config_err("missing [problem] section"))?;
        let period = number::<f64>(problem, "problem", "T")?.unwrap_or(1.0);
        let mut builder = ProblemSpec::builder(period);
        for name in COEFFICIENT_NAMES {
            if let Some(v) = problem.get(name) {
                builder = builder.set(name, v);
            }
        }
        if let Some(k) = number(problem, "problem", "k")? {
            builder = builder.k(k);
        }
        if let Some(eps) = number(problem, "problem", "eps")? {
            builder = builder.eps(eps);
        }
        let spec = builder.build()?;

        let grid = match grid_override {
            Some(g) => g,
            None => {
                let g = ini
                    .section(Some("grid"))
                    .ok_or_else(|| config_err("missing [grid] section"))?;
                let nx = number(g, "grid", "nx")?.ok_or_else(|| config_err("[grid] nx is required"))?;
                let nt = number(g, "grid", "nt")?.ok_or_else(|| config_err("[grid] nt is required"))?;
                GridSpec::new(nx, nt)?
            }
        };

        let s = section("solve");
        let defaults = SolveOptions::default();
        let solve = SolveOptions {
            strategy: s
                .get("strategy")
                .map(Strategy::from_str)
                .transpose()?
                .unwrap_or_default(),
            tol_abs: number(s, "solve", "tol_abs")?.unwrap_or(defaults.tol_abs),
            max_iter: number(s, "solve", "max_iter")?.unwrap_or(defaults.max_iter),
            relaxation: number(s, "solve", "relaxation")?.unwrap_or(defaults.relaxation),
        };
        solve.check()?;

        let manufactured = match ini.section(Some("manufactured")) {
            None => None,
            Some(m) => {
                if let Some(name) = ["f", "r0", "r1"].iter().find(|n| problem.contains_key(n)) {
                    return Err(config_err(format!(
                        "[problem] {name} is derived from [manufactured] w_star and must not be set"
                    )));
                }
                let text = m
                    .get("w_star")
                    .ok_or_else(|| config_err("[manufactured] w_star is required"))?;
                let w_star = parse(text).map_err(|source| hyperperiodic::Error::Parse {
                    field: "w_star".into(),
                    source,
                })?;
                Some(manufacture(&w_star, &spec, grid)?)
            }
        };
        let spec = manufactured.as_ref().map_or(spec, |m| m.spec.clone());

        let sweep_eps = section("sweep")
            .get("eps")
            .map(|list| {
                list.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| config_err(format!("[sweep] eps: cannot parse `{v}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;

        let kernel_threshold = number(section("kernel"), "kernel", "rel_threshold")?.unwrap_or(1e-8);
        if !(kernel_threshold > 0.0 && kernel_threshold < 1.0) {
            return Err(config_err("[kernel] rel_threshold must lie in (0, 1)"));
        }

        Ok(RunConfig {
            spec,
            grid,
            solve,
            manufactured,
            sweep_eps,
            kernel_threshold,
        })
    }
}
