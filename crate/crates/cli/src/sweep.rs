//! Cartesian parameter sweeps. Grid points run on a bounded worker pool and
//! are collected back in grid order before anything is written.

use std::path::Path;

use rayon::prelude::*;
use trustdyn_core::finite::{build_chain, FiniteConfig};
use trustdyn_core::io::{fmt_f64, write_finite_rows, write_numeric_table, write_q_trace, FiniteRow, NumericTable};
use trustdyn_core::params::GAME_KEYS;
use trustdyn_core::qlearn::{run_experiment, LearningTrace};
use trustdyn_core::replicator::{integrate, ReplicatorState, Variant};
use trustdyn_core::{GameParams, UserStrategy};

use crate::commands::finite_row;
use crate::output::OutputDir;
use crate::{CliError, Settings, SweepArgs};

const FINITE_AXES: [&str; 3] = ["Z_u", "Z_c", "beta"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Finite,
    Replicator,
    Qlearn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    /// Sorted ascending, without duplicates.
    pub values: Vec<f64>,
}

impl Axis {
    /// `name=a,b,c` or `name=start:end:points`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let (name, values) = text
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("axis {text:?}: expected name=values")))?;
        let name = name.trim().to_string();
        let num = |s: &str| -> Result<f64, CliError> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Config(format!("axis {name}: {s:?} is not a number")))
        };
        let mut vals: Vec<f64> = if values.contains(':') {
            let parts: Vec<&str> = values.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::Config(format!("axis {name}: expected start:end:points")));
            }
            let (a, b) = (num(parts[0])?, num(parts[1])?);
            let n: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("axis {name}: bad point count {:?}", parts[2])))?;
            match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
            }
        } else if values.trim().is_empty() {
            Vec::new()
        } else {
            values.split(',').map(num).collect::<Result<_, _>>()?
        };
        if vals.is_empty() {
            return Err(CliError::Config(format!("axis {name} has no values")));
        }
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        Ok(Self { name, values: vals })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub mode: Mode,
    /// Which of with-trust (`true`) and without-trust (`false`) to run.
    pub trust: Vec<bool>,
}

impl SweepSpec {
    pub fn parse(args: &SweepArgs) -> Result<Self, CliError> {
        let mode = match args.mode.as_str() {
            "finite" => Mode::Finite,
            "replicator" => Mode::Replicator,
            "qlearn" => Mode::Qlearn,
            m => return Err(CliError::Config(format!("unknown sweep mode {m:?}"))),
        };
        let trust = match args.trust_variants.as_str() {
            "both" => vec![true, false],
            "with" => vec![true],
            "without" => vec![false],
            t => return Err(CliError::Config(format!("trust variants must be both, with or without, got {t:?}"))),
        };
        let axis1 = Axis::parse(&args.axis1)?;
        let axis2 = match args.axis2.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(text) => Some(Axis::parse(text)?),
        };
        let spec = Self { axis1, axis2, mode, trust };
        for axis in spec.axes() {
            let finite_key = FINITE_AXES.contains(&axis.name.as_str());
            if !GAME_KEYS.contains(&axis.name.as_str()) && !finite_key {
                return Err(CliError::Config(format!("unknown sweep parameter {}", axis.name)));
            }
            if finite_key && mode != Mode::Finite {
                return Err(CliError::Config(format!("{} only applies to finite sweeps", axis.name)));
            }
        }
        if spec.axis2.as_ref().is_some_and(|a| a.name == spec.axis1.name) {
            return Err(CliError::Config("both axes sweep the same parameter".into()));
        }
        Ok(spec)
    }

    pub fn axes(&self) -> Vec<&Axis> {
        std::iter::once(&self.axis1).chain(&self.axis2).collect()
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.axes().iter().map(|a| a.name.clone()).collect()
    }

    /// Grid points in row order: first axis outer, second inner.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for &a in &self.axis1.values {
            match &self.axis2 {
                Some(ax) => out.extend(ax.values.iter().map(|&b| vec![a, b])),
                None => out.push(vec![a]),
            }
        }
        out
    }
}

fn apply(names: &[String], point: &[f64], s: &Settings) -> Result<(GameParams, FiniteConfig), CliError> {
    let mut params = s.params;
    let mut cfg = s.finite;
    for (name, &x) in names.iter().zip(point) {
        let as_size = || -> Result<usize, CliError> {
            if x.fract() != 0.0 || x < 0.0 {
                return Err(CliError::Config(format!("{name} = {x} must be a non-negative integer")));
            }
            Ok(x as usize)
        };
        match name.as_str() {
            "Z_u" => cfg.user_pop = as_size()?,
            "Z_c" => cfg.creator_pop = as_size()?,
            "beta" => cfg.beta = x,
            key => params.set(key, x)?,
        }
    }
    params.validate()?;
    cfg.validate()?;
    Ok((params, cfg))
}

fn trust_tag(trust: bool) -> &'static str {
    if trust {
        "with_trust"
    } else {
        "without_trust"
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn run_sweep(spec: &SweepSpec, s: &Settings, out: &Path, jobs: Option<usize>) -> Result<(), CliError> {
    let names = spec.axis_names();
    let points = spec.points();
    // Resolve every point first so a bad axis value fails before any work.
    let resolved: Vec<(GameParams, FiniteConfig)> =
        points.iter().map(|p| apply(&names, p, s)).collect::<Result<_, _>>()?;
    let pool = pool(jobs)?;
    let mut dir = OutputDir::create(out)?;

    match spec.mode {
        Mode::Finite => {
            let extra_axes: Vec<String> = names.iter().filter(|n| *n != "eps" && *n != "v").cloned().collect();
            let extras = |point: &[f64]| -> Vec<f64> {
                names.iter().zip(point).filter(|(n, _)| *n != "eps" && *n != "v").map(|(_, &x)| x).collect()
            };
            let mut adoption: Vec<Vec<f64>> = Vec::new();
            for &trust in &spec.trust {
                let rows: Vec<FiniteRow> = pool.install(|| {
                    points
                        .par_iter()
                        .zip(&resolved)
                        .map(|(pt, (params, cfg))| {
                            let cfg = FiniteConfig { trust_enabled: trust, ..*cfg };
                            let chain = build_chain(params, &cfg)?;
                            Ok(finite_row(&chain, params, trust, extras(pt)))
                        })
                        .collect::<Result<Vec<_>, CliError>>()
                })?;
                let states = if trust { 10 } else { 6 };
                let name = format!("finite_{}.csv", trust_tag(trust));
                dir.csv(&format!("finite_{}", trust_tag(trust)), &name, |w| {
                    write_finite_rows(w, &extra_axes, states, &rows)
                })?;
                adoption.push(rows.iter().map(|r| r.adoption_level).collect());
            }
            if spec.trust.len() == 2 {
                let mut header = names.clone();
                header.extend(["adoption_with_trust", "adoption_without_trust", "difference"].map(String::from));
                let rows = points
                    .iter()
                    .enumerate()
                    .map(|(i, pt)| {
                        let mut row = pt.clone();
                        row.extend([adoption[0][i], adoption[1][i], adoption[0][i] - adoption[1][i]]);
                        row
                    })
                    .collect();
                let table = NumericTable { header, rows };
                dir.csv("adoption_difference", "adoption_difference.csv", |w| write_numeric_table(w, &table))?;
            }
        }
        Mode::Replicator => {
            for &trust in &spec.trust {
                let variant = if trust { Variant::Five } else { Variant::Three };
                let start = match s.init {
                    Some(state) if s.variant == variant => state,
                    _ => ReplicatorState::uniform(variant),
                };
                let rows: Vec<Vec<f64>> = pool.install(|| {
                    points
                        .par_iter()
                        .zip(&resolved)
                        .map(|(pt, (params, _))| {
                            let traj = integrate(&start, params, variant, &s.integration)?;
                            let f = traj.final_state();
                            let mut row = pt.clone();
                            row.extend(f.users());
                            row.extend([f.alpha, traj.alpha_tail.0, traj.alpha_tail.1]);
                            Ok(row)
                        })
                        .collect::<Result<Vec<_>, CliError>>()
                })?;
                let mut header = names.clone();
                header.extend(["x", "y", "z", "w", "dtg", "alpha", "alpha_tail_min", "alpha_tail_max"].map(String::from));
                let table = NumericTable { header, rows };
                let kind = format!("replicator_{}", trust_tag(trust));
                dir.csv(&kind, &format!("{kind}.csv"), |w| write_numeric_table(w, &table))?;
            }
        }
        Mode::Qlearn => {
            let traces: Vec<LearningTrace> = pool.install(|| {
                resolved
                    .par_iter()
                    .map(|(params, _)| Ok(run_experiment(params, &s.q)?))
                    .collect::<Result<Vec<_>, CliError>>()
            })?;
            let mut header = names.clone();
            header.extend(UserStrategy::ALL.iter().map(|u| format!("user_{u}")));
            header.push("creator_coop_fraction".into());
            let rows = points
                .iter()
                .zip(&traces)
                .map(|(pt, t)| {
                    let mut row = pt.clone();
                    row.extend(t.last_users());
                    row.push(t.last_creators()[0]);
                    row
                })
                .collect();
            let table = NumericTable { header, rows };
            dir.csv("qlearn_final", "qlearn_final.csv", |w| write_numeric_table(w, &table))?;
            for (i, t) in traces.iter().enumerate() {
                dir.csv(&format!("qlearn_trace.{i}"), &format!("qlearn_trace_{i}.csv"), |w| write_q_trace(w, t))?;
            }
        }
    }

    let join = |a: &Axis| a.values.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
    let mut extra = vec![
        ("mode".to_string(), format!("{:?}", spec.mode).to_lowercase()),
        ("trust_variants".to_string(), spec.trust.iter().map(|t| trust_tag(*t)).collect::<Vec<_>>().join(",")),
        ("points".to_string(), points.len().to_string()),
        ("axis1_name".to_string(), spec.axis1.name.clone()),
        ("axis1_values".to_string(), join(&spec.axis1)),
    ];
    if let Some(a) = &spec.axis2 {
        extra.push(("axis2_name".into(), a.name.clone()));
        extra.push(("axis2_values".into(), join(a)));
    }
    println!("{} grid points, {:?} mode, written to {}", points.len(), spec.mode, out.display());
    dir.finish("sweep", s, &extra)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_syntax() {
        let a = Axis::parse("eps=0:1:21").unwrap();
        assert_eq!(a.values.len(), 21);
        assert_eq!((a.values[0], a.values[20]), (0.0, 1.0));
        assert!((a.values[2] - 0.1).abs() < 1e-15);
        assert_eq!(Axis::parse("v=1, 0.1,0.5,0.5").unwrap().values, vec![0.1, 0.5, 1.0]);
        assert_eq!(Axis::parse("c=0.3:0.9:1").unwrap().values, vec![0.3]);
        for bad in ["eps", "eps=", "eps=a", "eps=0:1", "eps=0:1:0", "eps=0:1:x"] {
            assert!(Axis::parse(bad).is_err(), "{bad}");
        }
    }

    fn args(axis1: &str, axis2: Option<&str>, mode: &str) -> SweepArgs {
        SweepArgs {
            axis1: axis1.into(),
            axis2: axis2.map(String::from),
            mode: mode.into(),
            trust_variants: "both".into(),
            jobs: None,
        }
    }

    #[test]
    fn grid_order_and_validation() {
        let spec = SweepSpec::parse(&args("eps=0.5,0", Some("v=1,0.1"), "finite")).unwrap();
        assert_eq!(spec.points(), vec![vec![0.0, 0.1], vec![0.0, 1.0], vec![0.5, 0.1], vec![0.5, 1.0]]);
        assert_eq!(SweepSpec::parse(&args("eps=0:1:3", Some(""), "finite")).unwrap().points().len(), 3);
        assert!(SweepSpec::parse(&args("gamma=1", None, "finite")).is_err());
        assert!(SweepSpec::parse(&args("beta=1", None, "replicator")).is_err());
        assert!(SweepSpec::parse(&args("eps=1", Some("eps=2"), "finite")).is_err());
        assert!(SweepSpec::parse(&args("eps=1", None, "other")).is_err());
    }
}
