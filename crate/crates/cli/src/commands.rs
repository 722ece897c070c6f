//! The single-run subcommands.

use std::path::Path;

use trustdyn_core::finite::{
    build_chain, chain_metrics, monte_carlo_run, risk_dominance_report, MonomorphicChain, MonteCarloSpec,
};
use trustdyn_core::io::{write_equilibria, write_finite_rows, write_numeric_table, write_q_trace, write_trajectory};
use trustdyn_core::io::{FiniteRow, NumericTable};
use trustdyn_core::qlearn::run_experiment;
use trustdyn_core::replicator::equilibria::{
    equilibrium_catalog, lemma_check, lemma_expectations, lemma_grid, tabulated_mismatch, EquilibriumRecord,
    Stability,
};
use trustdyn_core::replicator::{integrate, Variant};
use trustdyn_core::{CreatorStrategy, GameParams, UserStrategy};

use crate::output::OutputDir;
use crate::{CliError, Settings};

pub fn finite_row(chain: &MonomorphicChain, params: &GameParams, trust_enabled: bool, extra: Vec<f64>) -> FiniteRow {
    let m = chain_metrics(chain, params);
    FiniteRow {
        eps: params.monitoring_cost,
        v: params.punishment,
        extra,
        trust_enabled,
        stationary: chain.stationary.clone(),
        coop_freq: m.coop_freq,
        adoption_level: m.adoption_level,
    }
}

pub fn finite(s: &Settings, out: &Path) -> Result<(), CliError> {
    let chain = build_chain(&s.params, &s.finite)?;
    let row = finite_row(&chain, &s.params, s.finite.trust_enabled, Vec::new());
    let n = chain.states.len();

    let mut dir = OutputDir::create(out)?;
    dir.csv("finite", "finite.csv", |w| write_finite_rows(w, &[], n, std::slice::from_ref(&row)))?;
    let fixation = NumericTable {
        header: chain.states.iter().map(|s| s.label()).collect(),
        rows: chain.fixation.to_rows(),
    };
    dir.csv("fixation", "fixation.csv", |w| write_numeric_table(w, &fixation))?;

    println!("state        stationary");
    for (st, p) in chain.states.iter().zip(&chain.stationary) {
        println!("{:<12} {p:.6}", st.label());
    }
    println!("cooperation frequency  {:.6}", row.coop_freq);
    println!("adoption level         {:.6}", row.adoption_level);
    println!();
    println!("risk dominance");
    for rc in risk_dominance_report(&s.params) {
        println!("{:>3}  {:<24} {:<32} {}", rc.row, rc.transition, rc.condition, if rc.holds { "holds" } else { "fails" });
    }

    if s.mc_steps > 0 {
        let mut spec = MonteCarloSpec::new(s.mutation_rate, s.mc_steps, s.seed);
        spec.record_every = s.mc_record_every;
        let run = monte_carlo_run(&s.params, &s.finite, &spec)?;
        let strategies = s.finite.user_strategies();
        let mut header = vec!["step".to_string()];
        header.extend(strategies.iter().map(|u| format!("n_{u}")));
        header.extend(CreatorStrategy::ALL.iter().map(|c| format!("n_{c}")));
        let rows = run
            .records
            .iter()
            .map(|r| {
                let mut row = vec![r.step as f64];
                row.extend(r.users.iter().map(|&k| k as f64));
                row.extend(r.creators.iter().map(|&k| k as f64));
                row
            })
            .collect();
        let counts = NumericTable { header, rows };
        dir.csv("monte_carlo", "monte_carlo.csv", |w| write_numeric_table(w, &counts))?;
        println!();
        println!("simulation occupancy over {} monomorphic steps", run.monomorphic_steps);
        for (i, st) in chain.states.iter().enumerate() {
            println!(
                "{:<12} {:.6} +- {:.6}   chain {:.6}",
                st.label(),
                run.occupancy[i],
                run.occupancy_std_error[i],
                chain.stationary[i]
            );
        }
    }
    dir.finish("finite", s, &[])
}

pub fn replicator(s: &Settings, out: &Path) -> Result<(), CliError> {
    let traj = integrate(&s.initial_state(), &s.params, s.variant, &s.integration)?;
    let mut dir = OutputDir::create(out)?;
    dir.csv("trajectory", "trajectory.csv", |w| write_trajectory(w, &traj))?;
    let f = traj.final_state();
    let users = f.users();
    println!("{} strategies, t_end = {}", s.variant.name(), s.integration.t_end);
    for (u, share) in UserStrategy::ALL.iter().zip(users) {
        println!("{:<5} {share:.6}", u.name());
    }
    println!("alpha {:.6}", f.alpha);
    println!("modal user strategy {}", UserStrategy::ALL[f.modal_user()]);
    println!("alpha range over trailing window [{:.6}, {:.6}]", traj.alpha_tail.0, traj.alpha_tail.1);
    println!("largest simplex drift before renormalising {:.3e}", traj.max_drift);
    dir.finish("replicator", s, &[])
}

pub fn qlearn(s: &Settings, out: &Path) -> Result<(), CliError> {
    let trace = run_experiment(&s.params, &s.q)?;
    let mut dir = OutputDir::create(out)?;
    dir.csv("qlearn", "qlearn_trace.csv", |w| write_q_trace(w, &trace))?;
    println!("final shares after {} episodes, {} runs", s.q.episodes, s.q.runs);
    for (u, share) in UserStrategy::ALL.iter().zip(trace.last_users()) {
        println!("user {:<5} {share:.4}", u.name());
    }
    println!("creator cooperation {:.4}", trace.last_creators()[0]);
    dir.finish("qlearn", s, &[])
}

fn desirable(label: &str, variant: Variant) -> bool {
    matches!((label, variant), ("p9", Variant::Five) | ("q6", Variant::Three))
}

/// Human-readable catalogue with the analytic expectation next to each
/// verdict. Returns the number of disagreements.
pub fn report(catalog: &[EquilibriumRecord], p: &GameParams, variant: Variant) -> usize {
    let expectations = lemma_expectations(p, variant);
    let mut disagreements = 0;
    println!("{:<10} {:<8} {:<22} {:<10} {:<10} {:<30} note", "point", "feasible", "stability", "max|rhs|", "vs closed", "expected");
    for rec in catalog {
        let rhs = if rec.feasible { format!("{:.1e}", rec.max_rhs) } else { "-".into() };
        let closed = tabulated_mismatch(rec, p).map_or("-".to_string(), |d| format!("{d:.1e}"));
        let mut expected = String::from("-");
        let mut note = String::new();
        if let Some(e) = expectations.iter().find(|e| e.label == rec.label) {
            let word = if e.expect_stable { "stable" } else { "not stable" };
            expected = format!("{word} ({})", e.condition);
            if e.expect_stable != (rec.stability == Stability::Stable) {
                disagreements += 1;
                note.push_str("DISAGREES ");
            }
        }
        if desirable(&rec.label, variant) && rec.stability == Stability::Stable {
            note.push_str("desirable equilibrium");
        }
        if !rec.feasible {
            note.push_str(&rec.reason);
        }
        println!(
            "{:<10} {:<8} {:<22} {:<10} {:<10} {:<30} {}",
            rec.display_label(),
            if rec.feasible { "yes" } else { "no" },
            rec.stability.name(),
            rhs,
            closed,
            expected,
            note.trim_end()
        );
    }
    disagreements
}

pub fn equilibria(s: &Settings, out: &Path, grid: bool) -> Result<(), CliError> {
    let catalog = equilibrium_catalog(&s.params, s.variant)?;
    let mut dir = OutputDir::create(out)?;
    dir.csv("equilibria", "equilibria.csv", |w| write_equilibria(w, &catalog))?;
    let mut disagreements = report(&catalog, &s.params, s.variant);
    if grid {
        let checks = lemma_check(&lemma_grid(&s.params), s.variant)?;
        let bad: Vec<_> = checks.iter().filter(|c| !c.agrees()).collect();
        println!();
        println!("grid check: {} verdicts, {} disagreements", checks.len(), bad.len());
        for c in &bad {
            println!(
                "  c={} v={} mu={}: {} is {}, expected {} ({})",
                c.params.safety_cost,
                c.params.punishment,
                c.params.risk,
                c.label,
                c.stability,
                if c.expect_stable { "stable" } else { "not stable" },
                c.condition
            );
        }
        disagreements += bad.len();
    }
    dir.finish("equilibria", s, &[("grid".into(), grid.to_string())])?;
    if disagreements > 0 {
        return Err(CliError::LemmaDisagreement(disagreements));
    }
    Ok(())
}
