//! Stochastic dynamics in two finite populations.
//!
//! Agents revise their strategy by pairwise comparison with the Fermi rule.
//! In the limit of rare mutations each population is monomorphic almost all
//! the time, so the process reduces to a Markov chain over pairs
//! (user strategy, creator strategy) whose transitions are fixation
//! probabilities of single mutants.

mod monte_carlo;

pub use monte_carlo::{
    invasion_frequency, monte_carlo_run, InvasionEstimate, MonteCarloRun, MonteCarloSpec,
};

use crate::error::{Error, Result};
use crate::game::{creator_fitness, per_state_metrics, user_fitness, PayoffTable, PopulationMix};
use crate::linalg::{solve, Matrix};
use crate::params::{CreatorStrategy, GameParams, UserStrategy};

/// Population sizes, selection strength and the strategy set for users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteConfig {
    pub user_pop: usize,
    pub creator_pop: usize,
    /// Selection strength; 0 is neutral drift.
    pub beta: f64,
    /// With trust strategies users choose among all five strategies,
    /// otherwise among AllA, AllN and TFT.
    pub trust_enabled: bool,
}

impl FiniteConfig {
    pub fn new(user_pop: usize, creator_pop: usize, beta: f64, trust_enabled: bool) -> Result<Self> {
        let cfg = Self { user_pop, creator_pop, beta, trust_enabled };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Z = 100 in both populations, beta = 0.1, trust strategies enabled.
    pub fn reference() -> Self {
        Self { user_pop: 100, creator_pop: 100, beta: 0.1, trust_enabled: true }
    }

    pub fn validate(&self) -> Result<()> {
        for z in [self.user_pop, self.creator_pop] {
            if z < 2 {
                return Err(Error::DegeneratePopulation(z));
            }
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn user_strategies(&self) -> &'static [UserStrategy] {
        UserStrategy::active(self.trust_enabled)
    }
}

impl Default for FiniteConfig {
    fn default() -> Self {
        Self::reference()
    }
}

/// Probability that an agent with fitness `f_a` imitates a model with
/// fitness `f_b`.
pub fn fermi_probability(f_a: f64, f_b: f64, beta: f64) -> f64 {
    let s = beta * (f_b - f_a);
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Fixation probability of a single mutant given the fitness advantage of
/// the mutant over the resident at each mutant count.
///
/// `gaps[j - 1]` is `f_mutant(j) - f_resident(j)` for `j = 1..Z-1`, so the
/// population size is `gaps.len() + 1`. The sum of products of
/// `T-(j)/T+(j) = exp(-beta gap_j)` is evaluated in log space.
pub fn fixation_from_gaps(gaps: &[f64], beta: f64) -> f64 {
    let mut exponents = Vec::with_capacity(gaps.len() + 1);
    let mut cumulative = 0.0;
    exponents.push(0.0);
    for g in gaps {
        cumulative -= beta * g;
        exponents.push(cumulative);
    }
    let peak = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|t| (t - peak).exp()).sum();
    (-peak).exp() / sum
}

/// A single mutant entering a monomorphic population while the other
/// population stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invasion {
    User { resident: UserStrategy, mutant: UserStrategy, creators: CreatorStrategy },
    Creator { resident: CreatorStrategy, mutant: CreatorStrategy, users: UserStrategy },
}

impl Invasion {
    /// The transition between monomorphic states this invasion causes.
    pub fn between(from: MonomorphicState, to: MonomorphicState) -> Option<Self> {
        if from.user != to.user && from.creator == to.creator {
            Some(Self::User { resident: from.user, mutant: to.user, creators: from.creator })
        } else if from.user == to.user && from.creator != to.creator {
            Some(Self::Creator { resident: from.creator, mutant: to.creator, users: from.user })
        } else {
            None
        }
    }

    pub fn population(&self, cfg: &FiniteConfig) -> usize {
        match self {
            Self::User { .. } => cfg.user_pop,
            Self::Creator { .. } => cfg.creator_pop,
        }
    }

    /// Fitness of mutant and resident with `k` of `z` agents being mutants,
    /// using frequencies `k/z` in the invaded population.
    pub fn fitness_pair(&self, table: &PayoffTable, k: usize, z: usize) -> (f64, f64) {
        let share = k as f64 / z as f64;
        match *self {
            Self::User { resident, mutant, creators } => {
                let mut users = [0.0; 5];
                users[mutant.index()] += share;
                users[resident.index()] += 1.0 - share;
                let coop = if creators == CreatorStrategy::C { 1.0 } else { 0.0 };
                let f = user_fitness(&PopulationMix::unchecked(users, coop), table);
                (f[mutant.index()], f[resident.index()])
            }
            Self::Creator { resident, mutant, users } => {
                let coop = match mutant {
                    CreatorStrategy::C => share,
                    CreatorStrategy::D => 1.0 - share,
                };
                let mut mix = [0.0; 5];
                mix[users.index()] = 1.0;
                let f = creator_fitness(&PopulationMix::unchecked(mix, coop), table);
                (f[mutant.index()], f[resident.index()])
            }
        }
    }

    /// `f_mutant(j) - f_resident(j)` for `j = 1..z-1`.
    pub fn gaps(&self, table: &PayoffTable, z: usize) -> Vec<f64> {
        (1..z)
            .map(|k| {
                let (m, r) = self.fitness_pair(table, k, z);
                m - r
            })
            .collect()
    }
}

/// Probability that a single mutant takes over its population.
pub fn fixation_probability(table: &PayoffTable, invasion: Invasion, cfg: &FiniteConfig) -> Result<f64> {
    cfg.validate()?;
    let z = invasion.population(cfg);
    Ok(fixation_from_gaps(&invasion.gaps(table, z), cfg.beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonomorphicState {
    pub user: UserStrategy,
    pub creator: CreatorStrategy,
}

impl MonomorphicState {
    pub fn new(user: UserStrategy, creator: CreatorStrategy) -> Self {
        Self { user, creator }
    }

    /// `2 * user index + creator index`.
    pub fn index(&self) -> usize {
        2 * self.user.index() + self.creator.index()
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.user, self.creator)
    }
}

/// All monomorphic states in index order: 10 with trust strategies, 6
/// without.
pub fn monomorphic_states(trust_enabled: bool) -> Vec<MonomorphicState> {
    UserStrategy::active(trust_enabled)
        .iter()
        .flat_map(|&u| CreatorStrategy::ALL.map(|c| MonomorphicState::new(u, c)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonomorphicChain {
    pub states: Vec<MonomorphicState>,
    /// `fixation[(i, j)]` is the probability that a mutant moving the
    /// system from state `i` to state `j` fixates; 0 for non-neighbours.
    pub fixation: Matrix,
    pub transition: Matrix,
    pub stationary: Vec<f64>,
}

pub fn build_chain(params: &GameParams, cfg: &FiniteConfig) -> Result<MonomorphicChain> {
    cfg.validate()?;
    let table = PayoffTable::new(params)?;
    let states = monomorphic_states(cfg.trust_enabled);
    let n = states.len();
    let user_count = cfg.user_strategies().len();
    let mut fixation = Matrix::zeros(n, n);
    let mut transition = Matrix::zeros(n, n);
    for (i, &from) in states.iter().enumerate() {
        for (j, &to) in states.iter().enumerate() {
            let Some(invasion) = Invasion::between(from, to) else { continue };
            let rho = fixation_probability(&table, invasion, cfg)?;
            let mutating = match invasion {
                Invasion::User { .. } => user_count,
                Invasion::Creator { .. } => CreatorStrategy::ALL.len(),
            };
            fixation[(i, j)] = rho;
            transition[(i, j)] = rho / (2.0 * (mutating - 1) as f64);
        }
        let off: f64 = transition.row(i).iter().sum();
        transition[(i, i)] = 1.0 - off;
    }
    let stationary = stationary_distribution(&transition)?;
    Ok(MonomorphicChain { states, fixation, transition, stationary })
}

const STATIONARY_RESIDUAL: f64 = 1e-12;
const POWER_TOL: f64 = 1e-14;
const POWER_MAX_ITER: usize = 10_000_000;

/// Left eigenvector of a row-stochastic matrix for eigenvalue 1,
/// normalised to sum to 1.
///
/// The balance equations are solved directly with one equation replaced by
/// the normalisation. Under strong selection the exit probabilities can be
/// tiny, so each state's row is first divided by its exit probability (the
/// embedded jump chain) and the result weighted back by the mean holding
/// time. If that system is singular the chain has no unique stationary
/// distribution and an error is returned. If the solve succeeds but is
/// inaccurate, power iteration takes over.
pub fn stationary_distribution(transition: &Matrix) -> Result<Vec<f64>> {
    let n = transition.rows();
    let singular =
        || Error::NonErgodicChain("balance equations are singular; the stationary distribution is not unique".into());
    let exit: Vec<f64> = (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| transition[(i, j)]).sum()).collect();
    if n > 1 && exit.iter().any(|&e| e.is_nan() || e <= 0.0) {
        return Err(singular());
    }
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(j, i)] = if i == j { -1.0 } else { transition[(i, j)] / exit[i] };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let jump = solve(&a, &rhs).ok_or_else(singular)?;
    let mut pi: Vec<f64> = if n > 1 { jump.iter().zip(&exit).map(|(p, e)| p / e).collect() } else { jump };
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    if is_stationary(transition, &pi, STATIONARY_RESIDUAL) {
        return Ok(pi.iter().map(|p| p.max(0.0)).collect());
    }
    power_iteration(transition, pi)
}

fn is_stationary(transition: &Matrix, pi: &[f64], tol: f64) -> bool {
    if pi.iter().any(|p| !p.is_finite() || *p < -tol) {
        return false;
    }
    let next = transition.left_mul(pi);
    next.iter().zip(pi).all(|(a, b)| (a - b).abs() <= tol)
}

fn power_iteration(transition: &Matrix, start: Vec<f64>) -> Result<Vec<f64>> {
    let n = start.len();
    let mut pi: Vec<f64> = start.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    if total.is_nan() || total <= 0.0 {
        pi = vec![1.0 / n as f64; n];
    } else {
        pi.iter_mut().for_each(|p| *p /= total);
    }
    for _ in 0..POWER_MAX_ITER {
        let next = transition.left_mul(&pi);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change < POWER_TOL {
            return Ok(pi);
        }
    }
    Err(Error::NonErgodicChain(format!("power iteration did not converge in {POWER_MAX_ITER} steps")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMetrics {
    /// Stationary mass on states where creators cooperate.
    pub coop_freq: f64,
    /// Stationary average of the per-state adoption rate.
    pub adoption_level: f64,
}

pub fn chain_metrics(chain: &MonomorphicChain, params: &GameParams) -> ChainMetrics {
    distribution_metrics(&chain.states, &chain.stationary, params)
}

/// Cooperation and adoption for an arbitrary distribution over states.
pub fn distribution_metrics(states: &[MonomorphicState], dist: &[f64], params: &GameParams) -> ChainMetrics {
    assert_eq!(states.len(), dist.len());
    let mut coop_freq = 0.0;
    let mut adoption_level = 0.0;
    for (s, p) in states.iter().zip(dist) {
        let m = per_state_metrics(s.user, s.creator, params);
        if m.cooperating {
            coop_freq += p;
        }
        adoption_level += p * m.adoption_rate;
    }
    ChainMetrics { coop_freq, adoption_level }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskCondition {
    pub row: u8,
    pub transition: &'static str,
    pub condition: &'static str,
    pub holds: bool,
}

/// Conditions under which each listed transition is risk-dominant.
/// In rows 3-5 the benefit `b` is the creator's.
pub fn risk_dominance_report(params: &GameParams) -> Vec<RiskCondition> {
    let bu = params.user_benefit;
    let b = params.creator_benefit;
    let c = params.safety_cost;
    let v = params.punishment;
    let mu = params.risk;
    let eps = params.monitoring_cost;
    let r = params.r();
    let tt = params.trust_threshold as f64;
    let td = params.distrust_threshold as f64;
    let repeated = b * (1.0 - r) + r * c > v;
    let rows: [(&str, &str, bool); 11] = [
        ("(AllA,C) -> (AllA,D)", "c > v", c > v),
        ("(AllN,C) -> (AllN,D)", "c > 0", c > 0.0),
        ("(TFT,C) -> (TFT,D)", "b_c(1-r) + rc > v", repeated),
        ("(TUA,C) -> (TUA,D)", "b_c(1-r) + rc > v", repeated),
        ("(DtG,C) -> (DtG,D)", "b_c(1-r) + rc > v", repeated),
        ("(AllA,C) -> (AllN,C)", "b_u > 0", bu > 0.0),
        ("(AllA,C) -> (TFT,C)", "eps > 0", eps > 0.0),
        (
            "(TFT,C) -> (TUA,C)",
            "eps[r - (r-theta_T)p_T] < theta_T c",
            eps * (r - (r - tt) * params.trust_check_prob) < tt * c,
        ),
        ("(AllA,D) -> (AllN,D)", "mu b_u > 0", mu * bu > 0.0),
        ("(AllA,D) -> (TFT,D)", "r eps > mu b_u(1-r)", r * eps > mu * bu * (1.0 - r)),
        (
            "(TFT,D) -> (DtG,D)",
            "eps[r - (r-theta_D)p_D] < theta_D c",
            eps * (r - (r - td) * params.distrust_check_prob) < td * c,
        ),
    ];
    rows.iter()
        .enumerate()
        .map(|(i, &(transition, condition, holds))| RiskCondition {
            row: i as u8 + 1,
            transition,
            condition,
            holds,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_at(v: f64, eps: f64) -> GameParams {
        GameParams::reference().with_punishment(v).with_monitoring_cost(eps)
    }

    #[test]
    fn fermi_values() {
        assert_eq!(fermi_probability(1.0, 1.0, 0.3), 0.5);
        assert_eq!(fermi_probability(-5.0, 7.0, 0.0), 0.5);
        assert!((fermi_probability(0.0, 10.0, 0.1) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert_eq!(fermi_probability(0.0, 1e6, 1.0), 1.0);
        assert_eq!(fermi_probability(1e6, 0.0, 1.0), 0.0);
        assert!(fermi_probability(0.0, -800.0, 1.0) >= 0.0);
    }

    #[test]
    fn fixation_examples() {
        assert_eq!(fixation_from_gaps(&[3.0; 9], 0.0), 0.1);
        assert!((fixation_from_gaps(&[500.0; 9], 0.1) - 1.0).abs() < 1e-15);
        let expected = 1.0 / (0..10).map(|i| (-0.1 * i as f64).exp()).sum::<f64>();
        assert!((fixation_from_gaps(&[1.0; 9], 0.1) - expected).abs() < 1e-15);
        assert!((expected - 0.150_545).abs() < 1e-6);
        // A strongly disadvantaged mutant underflows to 0 rather than NaN.
        assert_eq!(fixation_from_gaps(&[-1e4; 99], 1.0), 0.0);
    }

    #[test]
    fn neutral_chain_is_uniform() {
        let cfg = FiniteConfig::new(50, 50, 0.0, true).unwrap();
        let chain = build_chain(&params_at(0.1, 0.1), &cfg).unwrap();
        for p in &chain.stationary {
            assert!((p - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_without_trust_has_six_states() {
        let cfg = FiniteConfig { trust_enabled: false, ..FiniteConfig::reference() };
        let chain = build_chain(&params_at(1.0, 0.1), &cfg).unwrap();
        assert_eq!(chain.states.len(), 6);
        for i in 0..6 {
            let off = (0..6).filter(|&j| j != i && chain.transition[(i, j)] > 0.0).count();
            assert_eq!(off, 3);
        }
    }

    #[test]
    fn state_indices() {
        let states = monomorphic_states(true);
        for (i, s) in states.iter().enumerate() {
            assert_eq!(s.index(), i);
        }
        assert_eq!(states[3].label(), "AllN-D");
    }

    #[test]
    fn point_mass_and_uniform_metrics() {
        let p = params_at(0.1, 0.1);
        let states = monomorphic_states(true);
        let mut dist = vec![0.0; 10];
        dist[3] = 1.0;
        let m = distribution_metrics(&states, &dist, &p);
        assert_eq!((m.coop_freq, m.adoption_level), (0.0, 0.0));
        dist = vec![0.0; 10];
        dist[0] = 1.0;
        let m = distribution_metrics(&states, &dist, &p);
        assert_eq!((m.coop_freq, m.adoption_level), (1.0, 1.0));
        let m = distribution_metrics(&states, &[0.1; 10], &p);
        assert!((m.coop_freq - 0.5).abs() < 1e-15);
        assert!((m.adoption_level - 0.53).abs() < 1e-15);
    }

    #[test]
    fn risk_rows() {
        let rows = risk_dominance_report(&params_at(0.1, 0.1));
        assert_eq!(rows.len(), 11);
        assert!(rows[0].holds);
        assert!(!rows[2].holds);
        assert!(!risk_dominance_report(&params_at(0.5, 0.1))[0].holds);
    }

    #[test]
    fn tiny_exit_rates_are_solved() {
        let t = Matrix::from_rows(&[vec![1.0 - 1e-40, 1e-40], vec![2e-40, 1.0 - 2e-40]]);
        let pi = stationary_distribution(&t).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-15 && (pi[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn singular_chain_is_reported() {
        let t = Matrix::identity(3);
        assert!(matches!(stationary_distribution(&t), Err(Error::NonErgodicChain(_))));
    }

    #[test]
    fn degenerate_population() {
        assert_eq!(FiniteConfig::new(1, 10, 0.1, true), Err(Error::DegeneratePopulation(1)));
    }
}
