mod common;

use common::fig;
use proptest::prelude::*;
use trustdyn_core::finite::{build_chain, chain_metrics, FiniteConfig};
use trustdyn_core::io::*;
use trustdyn_core::qlearn::{run_experiment, LearningTrace, QConfig};
use trustdyn_core::replicator::equilibria::equilibrium_catalog;
use trustdyn_core::replicator::{integrate, IntegrationSpec, ReplicatorState, Variant};

proptest! {
    #[test]
    fn floats_round_trip_exactly(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn numeric_tables_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e300f64..1e300, 3), 0..20)) {
        let table = NumericTable { header: vec!["a".into(), "b".into(), "c".into()], rows };
        let mut buf = Vec::new();
        write_numeric_table(&mut buf, &table).unwrap();
        prop_assert_eq!(read_numeric_table(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn q_traces_round_trip(rows in prop::collection::vec((prop::array::uniform5(0.0f64..1.0), 0.0f64..1.0), 1..30)) {
        let trace = LearningTrace {
            users: rows.iter().map(|r| r.0).collect(),
            creators: rows.iter().map(|r| [r.1, 1.0 - r.1]).collect(),
        };
        let mut buf = Vec::new();
        write_q_trace(&mut buf, &trace).unwrap();
        prop_assert_eq!(read_q_trace(buf.as_slice()).unwrap(), trace);
    }
}

#[test]
fn trajectory_round_trip() {
    let spec = IntegrationSpec { t_end: 5.0, record_every: 10, ..IntegrationSpec::default() };
    let traj = integrate(&ReplicatorState::uniform(Variant::Five), &fig(0.3, 0.5), Variant::Five, &spec).unwrap();
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &traj).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("t,x,y,z,w,dtg,alpha\n"));
    assert!(!text.contains('\r'));
    let back = read_trajectory(buf.as_slice()).unwrap();
    assert_eq!(back.len(), traj.states.len());
    for ((t, s), (t0, s0)) in back.iter().zip(traj.times.iter().zip(&traj.states)) {
        assert_eq!(t, t0);
        assert_eq!(s, s0);
    }
}

#[test]
fn equilibrium_table_round_trip() {
    let p = fig(0.5, 0.5);
    let cat = equilibrium_catalog(&p, Variant::Five).unwrap();
    let mut buf = Vec::new();
    write_equilibria(&mut buf, &cat).unwrap();
    let rows = read_equilibria(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), cat.len());
    for (row, rec) in rows.iter().zip(&cat) {
        assert_eq!(row.label, rec.display_label());
        assert_eq!(row.feasible, rec.feasible);
        assert_eq!(row.stability, rec.stability);
        assert_eq!(row.eigenvalues, rec.eigenvalues);
        assert_eq!(row.reason, rec.reason);
        let s = rec.state;
        let same = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        assert!(row.coords.iter().zip([s.x, s.y, s.z, s.w, s.alpha]).all(|(a, b)| same(*a, b)));
    }
}

#[test]
fn finite_rows_round_trip_from_chain() {
    let mut rows = Vec::new();
    for trust in [true, false] {
        let p = fig(0.2, 0.7);
        let cfg = FiniteConfig { trust_enabled: trust, ..FiniteConfig::reference() };
        let chain = build_chain(&p, &cfg).unwrap();
        let m = chain_metrics(&chain, &p);
        let mut stationary = chain.stationary.clone();
        stationary.resize(10, 0.0);
        rows.push(FiniteRow {
            eps: 0.2,
            v: 0.7,
            extra: vec![p.safety_cost],
            trust_enabled: trust,
            stationary,
            coop_freq: m.coop_freq,
            adoption_level: m.adoption_level,
        });
    }
    let axes = vec!["c".to_string()];
    let mut buf = Vec::new();
    write_finite_rows(&mut buf, &axes, 10, &rows).unwrap();
    let (back_axes, back) = read_finite_rows(buf.as_slice()).unwrap();
    assert_eq!(back_axes, axes);
    assert_eq!(back, rows);
}

#[test]
fn learning_output_round_trip() {
    let cfg = QConfig { user_pop: 10, creator_pop: 10, episodes: 50, runs: 2, ..QConfig::default() };
    let trace = run_experiment(&fig(0.1, 0.5), &cfg).unwrap();
    let mut buf = Vec::new();
    write_q_trace(&mut buf, &trace).unwrap();
    assert_eq!(read_q_trace(buf.as_slice()).unwrap(), trace);
}
