//! Two populations of stateless Q-learners playing the game against each
//! other.
//!
//! Each episode every user is paired with a distinct creator. Both sides
//! pick a strategy epsilon-greedily, receive their payoff-table entry as
//! reward and move the value of the chosen strategy towards it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::PayoffTable;
use crate::params::{CreatorStrategy, GameParams, UserStrategy};

/// How the per-episode strategy shares are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Census {
    /// Each agent's greedy strategy after its update; ties split the agent's
    /// weight equally.
    Greedy,
    /// The strategy each agent actually played.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QConfig {
    pub learn_rate: f64,
    pub explore_rate: f64,
    pub user_pop: usize,
    pub creator_pop: usize,
    pub episodes: usize,
    pub runs: usize,
    pub seed: u64,
    pub census: Census,
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            learn_rate: 0.05,
            explore_rate: 0.05,
            user_pop: 100,
            creator_pop: 100,
            episodes: 5000,
            runs: 10,
            seed: 1,
            census: Census::Greedy,
        }
    }
}

impl QConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.learn_rate) {
            return Err(Error::InvalidParams(format!("learn rate {} outside [0, 1]", self.learn_rate)));
        }
        if !(0.0..=1.0).contains(&self.explore_rate) {
            return Err(Error::InvalidParams(format!("explore rate {} outside [0, 1]", self.explore_rate)));
        }
        if self.user_pop != self.creator_pop {
            return Err(Error::PopulationMismatch { users: self.user_pop, creators: self.creator_pop });
        }
        if self.user_pop == 0 {
            return Err(Error::InvalidParams("populations must be non-empty".into()));
        }
        if self.episodes == 0 || self.runs == 0 {
            return Err(Error::InvalidParams("episodes and runs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QAgent {
    pub q_values: Vec<f64>,
}

impl QAgent {
    pub fn new(actions: usize) -> Self {
        Self { q_values: vec![0.0; actions] }
    }

    /// Indices of the largest values.
    pub fn greedy_actions(&self) -> Vec<usize> {
        let best = self.q_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..self.q_values.len()).filter(|&a| self.q_values[a] == best).collect()
    }

    /// `explore/|A| + [a greedy] (1 - explore)/|greedy|` for every action.
    pub fn action_probabilities(&self, explore_rate: f64) -> Vec<f64> {
        let n = self.q_values.len() as f64;
        let greedy = self.greedy_actions();
        let mut p = vec![explore_rate / n; self.q_values.len()];
        for &a in &greedy {
            p[a] += (1.0 - explore_rate) / greedy.len() as f64;
        }
        p
    }

    pub fn select_action<R: Rng>(&self, explore_rate: f64, rng: &mut R) -> usize {
        if rng.gen::<f64>() < explore_rate {
            rng.gen_range(0..self.q_values.len())
        } else {
            *self.greedy_actions().choose(rng).expect("at least one action")
        }
    }

    /// `Q(a) <- Q(a) + rate (reward - Q(a))`.
    pub fn update(&mut self, action: usize, reward: f64, learn_rate: f64) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::NonFiniteReward(reward));
        }
        let q = &mut self.q_values[action];
        *q += learn_rate * (reward - *q);
        Ok(())
    }
}

/// One pairing within an episode, kept for auditing rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub episode: usize,
    pub user: UserStrategy,
    pub creator: CreatorStrategy,
    pub user_reward: f64,
    pub creator_reward: f64,
}

/// Per-episode strategy shares.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningTrace {
    /// `users[e][s]` is the share of users counted under strategy `s` after
    /// episode `e + 1`.
    pub users: Vec<[f64; 5]>,
    pub creators: Vec<[f64; 2]>,
}

impl LearningTrace {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn creator_coop(&self, episode: usize) -> f64 {
        self.creators[episode][0]
    }

    pub fn last_users(&self) -> [f64; 5] {
        *self.users.last().expect("trace is non-empty")
    }

    pub fn last_creators(&self) -> [f64; 2] {
        *self.creators.last().expect("trace is non-empty")
    }

    fn average(traces: &[LearningTrace]) -> LearningTrace {
        let k = traces.len() as f64;
        let episodes = traces[0].len();
        let mut users = vec![[0.0; 5]; episodes];
        let mut creators = vec![[0.0; 2]; episodes];
        for t in traces {
            for (acc, row) in users.iter_mut().zip(&t.users) {
                acc.iter_mut().zip(row).for_each(|(a, x)| *a += x / k);
            }
            for (acc, row) in creators.iter_mut().zip(&t.creators) {
                acc.iter_mut().zip(row).for_each(|(a, x)| *a += x / k);
            }
        }
        LearningTrace { users, creators }
    }
}

fn census_shares(agents: &[QAgent], played: &[usize], census: Census, out: &mut [f64]) {
    let weight = 1.0 / agents.len() as f64;
    out.iter_mut().for_each(|x| *x = 0.0);
    for (agent, &a) in agents.iter().zip(played) {
        match census {
            Census::Greedy => {
                let greedy = agent.greedy_actions();
                for g in &greedy {
                    out[*g] += weight / greedy.len() as f64;
                }
            }
            Census::Sampled => out[a] += weight,
        }
    }
}

/// Runs one independent learning run. `run` selects the random stream, so
/// runs with the same seed and index are identical.
pub fn run_single(
    params: &GameParams,
    cfg: &QConfig,
    run: usize,
    mut log: Option<&mut Vec<Interaction>>,
) -> Result<LearningTrace> {
    cfg.validate()?;
    let table = PayoffTable::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(run as u64);
    let n = cfg.user_pop;
    let mut users = vec![QAgent::new(5); n];
    let mut creators = vec![QAgent::new(2); n];
    let mut partners: Vec<usize> = (0..n).collect();
    let mut user_played = vec![0; n];
    let mut creator_played = vec![0; n];
    let mut trace = LearningTrace { users: Vec::with_capacity(cfg.episodes), creators: Vec::with_capacity(cfg.episodes) };

    for episode in 1..=cfg.episodes {
        partners.shuffle(&mut rng);
        for (i, &j) in partners.iter().enumerate() {
            let ua = users[i].select_action(cfg.explore_rate, &mut rng);
            let ca = creators[j].select_action(cfg.explore_rate, &mut rng);
            let (u, c) = (UserStrategy::ALL[ua], CreatorStrategy::ALL[ca]);
            let user_reward = table.user(u, c);
            let creator_reward = table.creator(u, c);
            users[i].update(ua, user_reward, cfg.learn_rate)?;
            creators[j].update(ca, creator_reward, cfg.learn_rate)?;
            user_played[i] = ua;
            creator_played[j] = ca;
            if let Some(log) = log.as_deref_mut() {
                log.push(Interaction { episode, user: u, creator: c, user_reward, creator_reward });
            }
        }
        let mut us = [0.0; 5];
        let mut cs = [0.0; 2];
        census_shares(&users, &user_played, cfg.census, &mut us);
        census_shares(&creators, &creator_played, cfg.census, &mut cs);
        trace.users.push(us);
        trace.creators.push(cs);
    }
    Ok(trace)
}

/// Runs `cfg.runs` independent runs in parallel and averages them in run
/// order.
pub fn run_experiment(params: &GameParams, cfg: &QConfig) -> Result<LearningTrace> {
    cfg.validate()?;
    let traces = (0..cfg.runs)
        .into_par_iter()
        .map(|run| run_single(params, cfg, run, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(LearningTrace::average(&traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_probabilities() {
        let mut agent = QAgent::new(5);
        agent.q_values[2] = 1.0;
        let p = agent.action_probabilities(0.05);
        assert!((p[2] - 0.96).abs() < 1e-15);
        assert!(p.iter().enumerate().all(|(i, &x)| i == 2 || (x - 0.01).abs() < 1e-15));
        assert!(agent.action_probabilities(1.0).iter().all(|&x| (x - 0.2).abs() < 1e-15));
        assert_eq!(QAgent::new(2).action_probabilities(0.05), vec![0.5, 0.5]);
    }

    #[test]
    fn update_rule() {
        let mut agent = QAgent::new(2);
        agent.update(0, 4.0, 0.05).unwrap();
        assert!((agent.q_values[0] - 0.2).abs() < 1e-15);
        assert_eq!(agent.q_values[1], 0.0);
        let before = agent.clone();
        agent.update(0, 0.2, 0.05).unwrap();
        assert_eq!(agent, before);
        agent.update(1, 3.5, 1.0).unwrap();
        assert_eq!(agent.q_values[1], 3.5);
        assert!(matches!(agent.update(1, f64::NAN, 0.1), Err(Error::NonFiniteReward(_))));
    }

    #[test]
    fn sampled_selection_matches_policy() {
        let mut agent = QAgent::new(5);
        agent.q_values = vec![1.0, 3.0, 3.0, 0.0, -1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 5];
        let n = 200_000;
        for _ in 0..n {
            counts[agent.select_action(0.2, &mut rng)] += 1;
        }
        let p = agent.action_probabilities(0.2);
        for a in 0..5 {
            let freq = counts[a] as f64 / n as f64;
            let se = (p[a] * (1.0 - p[a]) / n as f64).sqrt();
            assert!((freq - p[a]).abs() < 4.0 * se, "action {a}: {freq} vs {}", p[a]);
        }
    }

    #[test]
    fn mismatched_populations_rejected() {
        let cfg = QConfig { creator_pop: 50, ..QConfig::default() };
        assert_eq!(
            run_experiment(&GameParams::reference(), &cfg).unwrap_err(),
            Error::PopulationMismatch { users: 100, creators: 50 }
        );
    }
}
