#![allow(dead_code)]

use proptest::prelude::*;
use trustdyn_core::GameParams;

/// Arbitrary valid parameters, with positive benefits.
pub fn params() -> impl Strategy<Value = GameParams> {
    (1u32..=20)
        .prop_flat_map(|r| {
            (
                (0.1f64..5.0, 0.1f64..5.0, 0.0f64..2.0, 0.0f64..2.0, -2.0f64..1.0),
                (0.0f64..2.0, 0.0f64..=1.0, 0.0f64..=1.0, 0..=r, 0..=r),
                Just(r),
            )
        })
        .prop_map(|((bu, bc, c, v, mu), (eps, pt, pd, tt, td), r)| GameParams {
            user_benefit: bu,
            creator_benefit: bc,
            safety_cost: c,
            punishment: v,
            risk: mu,
            monitoring_cost: eps,
            trust_check_prob: pt,
            distrust_check_prob: pd,
            trust_threshold: tt,
            distrust_threshold: td,
            rounds: r,
        })
}

/// A point of the 5-simplex from positive weights.
pub fn simplex5() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(0.0f64..1.0).prop_filter("non-degenerate", |w| w.iter().sum::<f64>() > 1e-3).prop_map(|w| {
        let s: f64 = w.iter().sum();
        let mut out = w.map(|x| x / s);
        out[4] = 1.0 - out[0] - out[1] - out[2] - out[3];
        if out[4] < 0.0 {
            out[4] = 0.0;
        }
        out
    })
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * 1f64.max(a.abs()).max(b.abs())
}

/// The reference constants with the given monitoring cost and punishment.
pub fn fig(eps: f64, v: f64) -> GameParams {
    GameParams::reference().with_monitoring_cost(eps).with_punishment(v)
}
