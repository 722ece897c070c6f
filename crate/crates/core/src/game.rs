//! Payoffs and fitness of the repeated user-creator game.
//!
//! Payoffs are per-round averages over the `r` rounds of one repeated game.
//! Fitness is the expected payoff against the other population's current
//! mixture. Users only meet creators and vice versa, so a user's fitness
//! depends on the creators' cooperation frequency alone and a creator's
//! fitness on the user mixture alone.

use crate::error::{Error, Result};
use crate::params::{CreatorStrategy, GameParams, UserStrategy};

const SIMPLEX_TOL: f64 = 1e-12;

/// The 5x2 payoff matrices for users and creators.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTable {
    user: [[f64; 2]; 5],
    creator: [[f64; 2]; 5],
    params: GameParams,
}

impl PayoffTable {
    pub fn new(params: &GameParams) -> Result<Self> {
        params.validate()?;
        let bu = params.user_benefit;
        let bc = params.creator_benefit;
        let c = params.safety_cost;
        let v = params.punishment;
        let mu = params.risk;
        let eps = params.monitoring_cost;
        let r = params.r();
        let trust = params.trust_monitoring();
        let distrust = params.distrust_monitoring();

        // Conditional strategies only adopt in the first round against a
        // defector, hence the 1/r scaling in the D column.
        let user = [
            [bu, mu * bu],
            [0.0, 0.0],
            [bu - eps, mu * bu / r - eps],
            [bu - trust, mu * bu / r - eps],
            [bu - eps, mu * bu / r - distrust],
        ];
        let conditional = [bc - c, (bc - v) / r];
        let creator = [[bc - c, bc - v], [-c, 0.0], conditional, conditional, conditional];
        Ok(Self { user, creator, params: *params })
    }

    pub fn user(&self, u: UserStrategy, c: CreatorStrategy) -> f64 {
        self.user[u.index()][c.index()]
    }

    pub fn creator(&self, u: UserStrategy, c: CreatorStrategy) -> f64 {
        self.creator[u.index()][c.index()]
    }

    pub fn user_rows(&self) -> &[[f64; 2]; 5] {
        &self.user
    }

    pub fn creator_rows(&self) -> &[[f64; 2]; 5] {
        &self.creator
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }
}

/// Strategy frequencies in both populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationMix {
    users: [f64; 5],
    creator_coop: f64,
}

impl PopulationMix {
    /// `users` is indexed by [`UserStrategy::index`]; `creator_coop` is the
    /// fraction of creators playing C.
    pub fn new(users: [f64; 5], creator_coop: f64) -> Result<Self> {
        if let Some(f) = users.iter().find(|f| !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(*f)) {
            return Err(Error::OffSimplex(format!("user frequency {f} outside [0, 1]")));
        }
        let users = users.map(|f| f.clamp(0.0, 1.0));
        let total: f64 = users.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::OffSimplex(format!("user frequencies sum to {total}")));
        }
        if !(0.0..=1.0).contains(&creator_coop) {
            return Err(Error::OffSimplex(format!("creator cooperation {creator_coop} outside [0, 1]")));
        }
        Ok(Self { users, creator_coop })
    }

    /// Builds a mix from `(x, y, z, w)`; DtG takes the remainder.
    pub fn from_xyzw(x: f64, y: f64, z: f64, w: f64, creator_coop: f64) -> Result<Self> {
        Self::new([x, y, z, w, 1.0 - x - y - z - w], creator_coop)
    }

    pub fn monomorphic(user: UserStrategy, creator: CreatorStrategy) -> Self {
        let mut users = [0.0; 5];
        users[user.index()] = 1.0;
        let creator_coop = match creator {
            CreatorStrategy::C => 1.0,
            CreatorStrategy::D => 0.0,
        };
        Self { users, creator_coop }
    }

    /// Skips validation. Used by numerical routines that probe points just
    /// outside the simplex.
    pub(crate) fn unchecked(users: [f64; 5], creator_coop: f64) -> Self {
        Self { users, creator_coop }
    }

    pub fn users(&self) -> &[f64; 5] {
        &self.users
    }

    pub fn user_freq(&self, u: UserStrategy) -> f64 {
        self.users[u.index()]
    }

    pub fn creator_coop(&self) -> f64 {
        self.creator_coop
    }
}

/// `f_X = alpha P(X, C) + (1 - alpha) P(X, D)` for every user strategy.
pub fn user_fitness(mix: &PopulationMix, table: &PayoffTable) -> [f64; 5] {
    let a = mix.creator_coop;
    table.user.map(|[vs_c, vs_d]| a * vs_c + (1.0 - a) * vs_d)
}

/// Creator fitness `[f_C, f_D]` against the user mixture.
pub fn creator_fitness(mix: &PopulationMix, table: &PayoffTable) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (freq, row) in mix.users.iter().zip(&table.creator) {
        out[0] += freq * row[0];
        out[1] += freq * row[1];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    User(UserStrategy),
    Creator(CreatorStrategy),
}

/// Fitness of `first` minus fitness of `second`, evaluated from the
/// hand-derived closed forms rather than the payoff table.
pub fn fitness_difference(
    first: Strategy,
    second: Strategy,
    mix: &PopulationMix,
    params: &GameParams,
) -> Result<f64> {
    match (first, second) {
        (Strategy::User(a), Strategy::User(b)) => Ok(user_difference(a, b, mix, params)),
        (Strategy::Creator(a), Strategy::Creator(b)) => {
            let d = creator_difference(mix, params);
            Ok(match (a, b) {
                (CreatorStrategy::C, CreatorStrategy::D) => d,
                (CreatorStrategy::D, CreatorStrategy::C) => -d,
                _ => 0.0,
            })
        }
        _ => Err(Error::UnsupportedPair(format!(
            "{first:?} and {second:?} belong to different populations"
        ))),
    }
}

fn user_difference(a: UserStrategy, b: UserStrategy, mix: &PopulationMix, p: &GameParams) -> f64 {
    use UserStrategy::*;
    if a == b {
        return 0.0;
    }
    if a > b {
        return -user_difference(b, a, mix, p);
    }
    let alpha = mix.creator_coop;
    let defect = 1.0 - alpha;
    let bu = p.user_benefit;
    let mu = p.risk;
    let eps = p.monitoring_cost;
    let r = p.r();
    let trust = p.trust_monitoring();
    let distrust = p.distrust_monitoring();
    // Loss of an unconditional adopter relative to a one-round adopter.
    let exposure = mu * bu - mu * bu / r;
    match (a, b) {
        (AllA, AllN) => alpha * bu + defect * mu * bu,
        (AllA, Tft) => alpha * eps + defect * (exposure + eps),
        (AllA, Tua) => alpha * trust + defect * (exposure + eps),
        (AllA, Dtg) => alpha * eps + defect * (exposure + distrust),
        (AllN, Tft) => -alpha * (bu - eps) - defect * (mu * bu / r - eps),
        (AllN, Tua) => -alpha * (bu - trust) - defect * (mu * bu / r - eps),
        (AllN, Dtg) => -alpha * (bu - eps) - defect * (mu * bu / r - distrust),
        (Tft, Tua) => alpha * trust - alpha * eps,
        (Tft, Dtg) => defect * (-eps + distrust),
        (Tua, Dtg) => alpha * (eps - trust) + defect * (distrust - eps),
        _ => unreachable!("pairs are ordered"),
    }
}

fn creator_difference(mix: &PopulationMix, p: &GameParams) -> f64 {
    let x = mix.user_freq(UserStrategy::AllA);
    let y = mix.user_freq(UserStrategy::AllN);
    let bc = p.creator_benefit;
    let v = p.punishment;
    (bc * (1.0 - y) - p.safety_cost) - (x * (bc - v) + (1.0 - x - y) * (bc - v) / p.r())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMetrics {
    /// Expected fraction of the `r` rounds in which the user adopts.
    pub adoption_rate: f64,
    /// Whether the creator develops safely.
    pub cooperating: bool,
}

/// Adoption and cooperation of one monomorphic pairing.
///
/// Conditional users facing a defector adopt in the opening round only,
/// giving an adoption rate of `1/r`.
pub fn per_state_metrics(u: UserStrategy, c: CreatorStrategy, params: &GameParams) -> StateMetrics {
    let adoption_rate = match (u, c) {
        (UserStrategy::AllA, _) => 1.0,
        (UserStrategy::AllN, _) => 0.0,
        (_, CreatorStrategy::C) => 1.0,
        (_, CreatorStrategy::D) => 1.0 / params.r(),
    };
    StateMetrics { adoption_rate, cooperating: c == CreatorStrategy::C }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CreatorStrategy::{C, D};
    use UserStrategy::*;

    fn params_at() -> GameParams {
        GameParams::reference().with_monitoring_cost(0.1)
    }

    #[test]
    fn table_cells_at_reference_params() {
        let t = PayoffTable::new(&params_at()).unwrap();
        assert_eq!(t.user(AllA, C), 4.0);
        assert_eq!(t.creator(AllA, C), 3.5);
        assert_eq!(t.user(AllN, C), 0.0);
        assert_eq!(t.user(AllN, D), 0.0);
        assert_eq!(t.creator(AllN, C), -0.5);
        assert_eq!(t.creator(AllN, D), 0.0);
    }

    #[test]
    fn table_cells_with_unit_monitoring_cost() {
        let t = PayoffTable::new(&GameParams::reference().with_monitoring_cost(1.0)).unwrap();
        assert!((t.user(Tua, C) - 3.525).abs() < 1e-15);
        assert!((t.user(Tft, D) - (-1.08)).abs() < 1e-15);
        assert!((t.creator(Dtg, D) - 0.39).abs() < 1e-15);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = GameParams { risk: 2.0, ..GameParams::reference() };
        assert!(matches!(PayoffTable::new(&p), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn free_monitoring_equalises_adopters() {
        let t = PayoffTable::new(&GameParams::reference()).unwrap();
        for u in [AllA, Tft, Tua, Dtg] {
            assert_eq!(t.user(u, C), 4.0);
        }
    }

    #[test]
    fn trust_and_distrust_deductions_mirror() {
        let p = GameParams { trust_check_prob: 0.4, distrust_check_prob: 0.4, ..params_at() };
        let t = PayoffTable::new(&p).unwrap();
        let trust_deduction = p.user_benefit - t.user(Tua, C);
        let distrust_deduction = p.risk * p.user_benefit / p.r() - t.user(Dtg, D);
        assert!((trust_deduction - distrust_deduction).abs() < 1e-15);
    }

    #[test]
    fn user_fitness_degenerate_mixtures() {
        let t = PayoffTable::new(&params_at()).unwrap();
        let uniform = [0.2; 5];
        let at_c = user_fitness(&PopulationMix::new(uniform, 1.0).unwrap(), &t);
        let at_d = user_fitness(&PopulationMix::new(uniform, 0.0).unwrap(), &t);
        for u in UserStrategy::ALL {
            assert_eq!(at_c[u.index()], t.user(u, C));
            assert_eq!(at_d[u.index()], t.user(u, D));
        }
        let half = user_fitness(&PopulationMix::new(uniform, 0.5).unwrap(), &t);
        assert!((half[0] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn creator_fitness_examples() {
        let p = params_at();
        let t = PayoffTable::new(&p).unwrap();
        let all_n = creator_fitness(&PopulationMix::monomorphic(AllN, C), &t);
        assert_eq!(all_n, [-0.5, 0.0]);
        let all_a = creator_fitness(&PopulationMix::monomorphic(AllA, D), &t);
        assert_eq!(all_a, [3.5, 3.9]);
        let uniform = creator_fitness(&PopulationMix::new([0.2; 5], 0.3).unwrap(), &t);
        assert!((uniform[1] - 1.014).abs() < 1e-14);
        // f_C = (b_c - c) - y b_c
        assert!((uniform[0] - (3.5 - 0.2 * 4.0)).abs() < 1e-14);
    }

    #[test]
    fn closed_form_examples() {
        let p = GameParams::reference().with_monitoring_cost(1.0);
        let coop = PopulationMix::new([0.2; 5], 1.0).unwrap();
        let d = fitness_difference(Strategy::User(AllA), Strategy::User(AllN), &coop, &p).unwrap();
        assert_eq!(d, 4.0);
        let d = fitness_difference(Strategy::User(Tft), Strategy::User(Tua), &coop, &p).unwrap();
        // (3 + 7 * 0.25) / 10 - 1: TFT pays one check per round, TUA fewer.
        assert!((d - (0.475 - 1.0)).abs() < 1e-15);
        let d = fitness_difference(Strategy::User(Tua), Strategy::User(Tft), &coop, &p).unwrap();
        assert!((d - 0.525).abs() < 1e-15);

        let fig = params_at();
        let pure_a = PopulationMix::monomorphic(AllA, C);
        let d = fitness_difference(
            Strategy::Creator(CreatorStrategy::C),
            Strategy::Creator(CreatorStrategy::D),
            &pure_a,
            &fig,
        )
        .unwrap();
        assert!((d - (-0.4)).abs() < 1e-15);
    }

    #[test]
    fn cross_population_pair_is_rejected() {
        let mix = PopulationMix::monomorphic(AllA, C);
        let err = fitness_difference(Strategy::User(AllA), Strategy::Creator(C), &mix, &params_at());
        assert!(matches!(err, Err(Error::UnsupportedPair(_))));
    }

    #[test]
    fn mix_validation() {
        assert!(PopulationMix::new([0.5, 0.5, 0.1, 0.0, 0.0], 0.5).is_err());
        assert!(PopulationMix::new([1.2, -0.2, 0.0, 0.0, 0.0], 0.5).is_err());
        assert!(PopulationMix::new([0.2; 5], 1.5).is_err());
        assert!(PopulationMix::from_xyzw(0.1, 0.2, 0.3, 0.4, 0.0).is_ok());
    }

    #[test]
    fn state_metrics() {
        let p = GameParams::reference();
        let m = per_state_metrics(AllA, D, &p);
        assert_eq!((m.adoption_rate, m.cooperating), (1.0, false));
        let m = per_state_metrics(Tft, D, &p);
        assert_eq!((m.adoption_rate, m.cooperating), (0.1, false));
        let m = per_state_metrics(Dtg, C, &p);
        assert_eq!((m.adoption_rate, m.cooperating), (1.0, true));
        assert_eq!(per_state_metrics(AllN, C, &p).adoption_rate, 0.0);
    }
}
