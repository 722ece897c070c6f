//! Two-population replicator dynamics in the infinite-population limit.
//!
//! Users follow `x_i' = x_i (f_i - f_bar)` on the strategy simplex and the
//! creators' cooperation frequency follows `a' = a (1 - a)(f_C - f_D)`.
//! The five-strategy variant tracks `(x, y, z, w, a)` for AllA, AllN, TFT
//! and TUA, with DtG taking the remainder. The three-strategy variant drops
//! TUA and DtG and tracks `(x, y, a)`, with TFT taking the remainder.

pub mod equilibria;

use crate::error::{Error, Result};
use crate::game::{creator_fitness, user_fitness, PayoffTable, PopulationMix};
use crate::params::GameParams;

/// Tolerance for accepting a state as lying on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;
const BLOW_UP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Five,
    Three,
}

impl Variant {
    /// Number of independent coordinates.
    pub fn dim(self) -> usize {
        match self {
            Variant::Five => 5,
            Variant::Three => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Five => "five",
            Variant::Three => "three",
        }
    }

    pub fn trust_enabled(self) -> bool {
        self == Variant::Five
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "five" | "5" => Ok(Variant::Five),
            "three" | "3" => Ok(Variant::Three),
            _ => Err(Error::Config(format!("unknown variant {s:?}; expected five or three"))),
        }
    }
}

/// A point `(x, y, z, w, alpha)`. The DtG share is `1 - x - y - z - w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicatorState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub alpha: f64,
}

impl ReplicatorState {
    pub fn new(x: f64, y: f64, z: f64, w: f64, alpha: f64) -> Self {
        Self { x, y, z, w, alpha }
    }

    /// Equal shares for every active user strategy and `alpha = 0.5`.
    pub fn uniform(variant: Variant) -> Self {
        match variant {
            Variant::Five => Self::new(0.2, 0.2, 0.2, 0.2, 0.5),
            Variant::Three => Self::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.5),
        }
    }

    pub fn dtg(&self) -> f64 {
        1.0 - self.x - self.y - self.z - self.w
    }

    /// User shares in strategy order, DtG last.
    pub fn users(&self) -> [f64; 5] {
        [self.x, self.y, self.z, self.w, self.dtg()]
    }

    /// The independent coordinates for `variant`.
    pub fn coords(&self, variant: Variant) -> Vec<f64> {
        match variant {
            Variant::Five => vec![self.x, self.y, self.z, self.w, self.alpha],
            Variant::Three => vec![self.x, self.y, self.alpha],
        }
    }

    pub fn from_coords(variant: Variant, c: &[f64]) -> Self {
        assert_eq!(c.len(), variant.dim());
        match variant {
            Variant::Five => Self::new(c[0], c[1], c[2], c[3], c[4]),
            Variant::Three => Self::new(c[0], c[1], 1.0 - c[0] - c[1], 0.0, c[2]),
        }
    }

    /// Checks the simplex and interval constraints within `tol`.
    pub fn validate(&self, variant: Variant, tol: f64) -> Result<()> {
        let named = [("x", self.x), ("y", self.y), ("z", self.z), ("w", self.w), ("dtg", self.dtg()), ("alpha", self.alpha)];
        for (name, v) in named {
            if !v.is_finite() || v < -tol || v > 1.0 + tol {
                return Err(Error::OffSimplex(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if variant == Variant::Three && (self.w.abs() > tol || self.dtg().abs() > tol) {
            return Err(Error::OffSimplex(format!(
                "three-strategy state has w = {} and dtg = {}",
                self.w,
                self.dtg()
            )));
        }
        Ok(())
    }

    /// Index of the most common user strategy.
    pub fn modal_user(&self) -> usize {
        let u = self.users();
        (0..5).fold(0, |best, i| if u[i] > u[best] { i } else { best })
    }
}

/// Time derivative of the independent coordinates of `state`.
pub fn rhs(state: &ReplicatorState, params: &GameParams, variant: Variant) -> Result<Vec<f64>> {
    state.validate(variant, SIMPLEX_TOL)?;
    let table = PayoffTable::new(params)?;
    Ok(rhs_coords(&state.coords(variant), &table, variant))
}

/// The replicator field on raw coordinates with no simplex check, so that
/// finite differences may step slightly outside the domain.
pub fn rhs_coords(c: &[f64], table: &PayoffTable, variant: Variant) -> Vec<f64> {
    let (users, alpha) = match variant {
        Variant::Five => ([c[0], c[1], c[2], c[3], 1.0 - c[0] - c[1] - c[2] - c[3]], c[4]),
        Variant::Three => ([c[0], c[1], 1.0 - c[0] - c[1], 0.0, 0.0], c[2]),
    };
    let mix = PopulationMix::unchecked(users, alpha);
    let f = user_fitness(&mix, table);
    let mean: f64 = users.iter().zip(&f).map(|(s, fi)| s * fi).sum();
    let fc = creator_fitness(&mix, table);
    let da = alpha * (1.0 - alpha) * (fc[0] - fc[1]);
    match variant {
        Variant::Five => {
            let mut out: Vec<f64> = (0..4).map(|i| users[i] * (f[i] - mean)).collect();
            out.push(da);
            out
        }
        Variant::Three => vec![users[0] * (f[0] - mean), users[1] * (f[1] - mean), da],
    }
}

/// The same field written out as explicit polynomials in the coordinates,
/// kept as an independent route for cross-checking [`rhs_coords`].
pub fn rhs_explicit(c: &[f64], p: &GameParams, variant: Variant) -> Vec<f64> {
    let bu = p.user_benefit;
    let bc = p.creator_benefit;
    let cost = p.safety_cost;
    let v = p.punishment;
    let mu = p.risk;
    let e = p.monitoring_cost;
    let pt = p.trust_check_prob;
    let pd = p.distrust_check_prob;
    let tt = p.trust_threshold as f64;
    let td = p.distrust_threshold as f64;
    let r = p.r();
    match variant {
        Variant::Five => {
            let (x, y, z, w, a) = (c[0], c[1], c[2], c[3], c[4]);
            let s = w + x + y + z - 1.0;
            let monitoring = e
                * (-r * (a + a * (pt - 2.0) * w + w - a * (x + y + z) + z) + a * tt * (pt - 1.0) * w
                    - (a - 1.0) * pd * (r - td) * s
                    - (a - 1.0) * td * s)
                / r;
            let common = -(a - 1.0) * bu * mu * (-r * x + x + y - 1.0) / r + a * bu * (y - 1.0) - monitoring;
            let dx = x * (bu * (a * (-mu) + a + mu) + common);
            let dy = y * common;
            let dz = z
                * (-(a - 1.0) * bu * mu * (-r * x + x + y)
                    + a * bu * r * y
                    + e * (r * (a + a * (pt - 2.0) * w + (a - 1.0) * pd * s + w - a * (x + y + z) + z - 1.0)
                        - a * tt * (pt - 1.0) * w
                        - (a - 1.0) * td * (pd - 1.0) * s))
                / r;
            let dw = w
                * (-(a - 1.0) * bu * mu * (-r * x + x + y)
                    + a * bu * r * y
                    + e * (r * (a * (pt - 2.0) * w - a * (pt + x + y + z - 2.0) + (a - 1.0) * pd * s + w + z - 1.0)
                        - a * tt * (pt - 1.0) * (w - 1.0)
                        - (a - 1.0) * td * (pd - 1.0) * s))
                / r;
            let da = (a - 1.0) * a * (bc * (r - 1.0) * (x + y - 1.0) + cost * r + v * (-r * x + x + y - 1.0)) / r;
            vec![dx, dy, dz, dw, da]
        }
        Variant::Three => {
            let (x, y, a) = (c[0], c[1], c[2]);
            let dx = x * ((a - 1.0) * bu * mu * ((r - 1.0) * (x - 1.0) - y) / r + a * bu * y - e * (x + y - 1.0));
            let dy = y * (-(a - 1.0) * bu * mu * (-r * x + x + y - 1.0) / r + a * bu * (y - 1.0) - e * (x + y - 1.0));
            let da = (a - 1.0) * a * (bc * (r - 1.0) * (x + y - 1.0) + cost * r + v * (-r * x + x + y - 1.0)) / r;
            vec![dx, dy, da]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    pub dt: f64,
    pub t_end: f64,
    /// Store every n-th step (the initial and final states are always kept).
    pub record_every: usize,
    /// Fraction of the run, counted from the end, over which the range of
    /// `alpha` is reported.
    pub tail_fraction: f64,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self { dt: 0.01, t_end: 500.0, record_every: 1, tail_fraction: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub variant: Variant,
    pub params: GameParams,
    pub times: Vec<f64>,
    pub states: Vec<ReplicatorState>,
    /// Largest `|sum of user shares - 1|` seen after a step and before
    /// renormalisation.
    pub max_drift: f64,
    /// Minimum and maximum of `alpha` over the trailing window.
    pub alpha_tail: (f64, f64),
}

impl Trajectory {
    pub fn final_state(&self) -> &ReplicatorState {
        self.states.last().expect("trajectories hold the initial state")
    }
}

/// Fixed-step classical Runge-Kutta integration. After each step negative
/// coordinates are set to 0, `alpha` is capped at 1 and the user shares are
/// rescaled to sum to 1.
pub fn integrate(
    initial: &ReplicatorState,
    params: &GameParams,
    variant: Variant,
    spec: &IntegrationSpec,
) -> Result<Trajectory> {
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(Error::InvalidParams(format!("time step must be positive, got {}", spec.dt)));
    }
    if !(spec.t_end >= 0.0 && spec.t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("end time must be finite and >= 0, got {}", spec.t_end)));
    }
    if !(0.0..=1.0).contains(&spec.tail_fraction) {
        return Err(Error::InvalidParams(format!("tail fraction {} outside [0, 1]", spec.tail_fraction)));
    }
    initial.validate(variant, SIMPLEX_TOL)?;
    let table = PayoffTable::new(params)?;
    let n = variant.dim();
    let steps = (spec.t_end / spec.dt).round() as usize;
    let record_every = spec.record_every.max(1);
    let tail_start = ((1.0 - spec.tail_fraction) * steps as f64).floor() as usize;

    let mut y = initial.coords(variant);
    let mut times = vec![0.0];
    let mut states = vec![ReplicatorState::from_coords(variant, &y)];
    let mut max_drift = 0.0_f64;
    let mut tail = (f64::INFINITY, f64::NEG_INFINITY);
    if tail_start == 0 {
        tail = (y[n - 1], y[n - 1]);
    }
    let field = |c: &[f64]| rhs_coords(c, &table, variant);
    let axpy = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> { base.iter().zip(k).map(|(b, k)| b + h * k).collect() };

    for step in 1..=steps {
        let dt = spec.dt;
        let k1 = field(&y);
        let k2 = field(&axpy(&y, &k1, dt / 2.0));
        let k3 = field(&axpy(&y, &k2, dt / 2.0));
        let k4 = field(&axpy(&y, &k3, dt));
        for i in 0..n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = step as f64 * dt;
        if let Some(bad) = y.iter().position(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(Error::BlowUp { time: t, detail: format!("coordinate {bad} reached {}", y[bad]) });
        }
        let mut users = ReplicatorState::from_coords(variant, &y).users();
        let sum: f64 = users.iter().sum();
        max_drift = max_drift.max((sum - 1.0).abs());
        users.iter_mut().for_each(|u| *u = u.max(0.0));
        let total: f64 = users.iter().sum();
        users.iter_mut().for_each(|u| *u /= total);
        let alpha = y[n - 1].clamp(0.0, 1.0);
        y = match variant {
            Variant::Five => vec![users[0], users[1], users[2], users[3], alpha],
            Variant::Three => vec![users[0], users[1], alpha],
        };
        if step >= tail_start {
            tail = (tail.0.min(alpha), tail.1.max(alpha));
        }
        if step % record_every == 0 || step == steps {
            times.push(t);
            states.push(ReplicatorState::from_coords(variant, &y));
        }
    }
    Ok(Trajectory { variant, params: *params, times, states, max_drift, alpha_tail: tail })
}
