//! Agent-based simulation of the imitation and mutation process. It is used
//! as an independent check on the analytic chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fermi_probability, FiniteConfig, Invasion, MonomorphicState};
use crate::error::{Error, Result};
use crate::game::{creator_fitness, user_fitness, PayoffTable, PopulationMix};
use crate::params::{CreatorStrategy, GameParams, UserStrategy};

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSpec {
    /// Probability that a revising agent mutates instead of imitating.
    pub mutation_rate: f64,
    pub steps: u64,
    pub seed: u64,
    /// Keep one count record every this many steps; 0 keeps none.
    pub record_every: u64,
    pub initial: MonomorphicState,
    /// Number of equal blocks used for batch-means error estimates.
    pub batches: usize,
}

impl MonteCarloSpec {
    pub fn new(mutation_rate: f64, steps: u64, seed: u64) -> Self {
        Self {
            mutation_rate,
            steps,
            seed,
            record_every: 1,
            initial: MonomorphicState::new(UserStrategy::AllN, CreatorStrategy::D),
            batches: 20,
        }
    }
}

/// Strategy counts after a given step. `users` is indexed like the active
/// user strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub step: u64,
    pub users: Vec<usize>,
    pub creators: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub records: Vec<CountRecord>,
    /// Fraction of monomorphic time spent in each monomorphic state,
    /// indexed like [`super::monomorphic_states`].
    pub occupancy: Vec<f64>,
    /// Standard error of each occupancy entry from batch means.
    pub occupancy_std_error: Vec<f64>,
    /// Steps after which both populations were monomorphic.
    pub monomorphic_steps: u64,
}

struct Populations<'a> {
    table: &'a PayoffTable,
    user_set: &'a [UserStrategy],
    users: Vec<usize>,
    creators: [usize; 2],
    user_pop: usize,
    creator_pop: usize,
}

impl Populations<'_> {
    fn mix(&self) -> PopulationMix {
        let mut freqs = [0.0; 5];
        for (s, n) in self.user_set.iter().zip(&self.users) {
            freqs[s.index()] = *n as f64 / self.user_pop as f64;
        }
        PopulationMix::unchecked(freqs, self.creators[0] as f64 / self.creator_pop as f64)
    }

    /// Index into `counts` of a uniformly drawn agent, optionally excluding
    /// one agent of strategy `skip`.
    fn draw(counts: &[usize], skip: Option<usize>, rng: &mut ChaCha8Rng) -> usize {
        let total: usize = counts.iter().sum::<usize>() - usize::from(skip.is_some());
        let mut pick = rng.gen_range(0..total);
        for (i, &n) in counts.iter().enumerate() {
            let n = if Some(i) == skip { n - 1 } else { n };
            if pick < n {
                return i;
            }
            pick -= n;
        }
        unreachable!("pick is below the total count")
    }

    fn step(&mut self, beta: f64, mutation_rate: f64, rng: &mut ChaCha8Rng) {
        let revise_users = rng.gen::<f64>() < 0.5;
        let mutate = rng.gen::<f64>() < mutation_rate;
        if revise_users {
            let focal = Self::draw(&self.users, None, rng);
            let target = if mutate {
                other_index(focal, self.users.len(), rng)
            } else {
                let model = Self::draw(&self.users, Some(focal), rng);
                if model == focal {
                    return;
                }
                let f = user_fitness(&self.mix(), self.table);
                let (fa, fb) = (f[self.user_set[focal].index()], f[self.user_set[model].index()]);
                if rng.gen::<f64>() >= fermi_probability(fa, fb, beta) {
                    return;
                }
                model
            };
            self.users[focal] -= 1;
            self.users[target] += 1;
        } else {
            let focal = Self::draw(&self.creators, None, rng);
            let target = if mutate {
                1 - focal
            } else {
                let model = Self::draw(&self.creators, Some(focal), rng);
                if model == focal {
                    return;
                }
                let f = creator_fitness(&self.mix(), self.table);
                if rng.gen::<f64>() >= fermi_probability(f[focal], f[model], beta) {
                    return;
                }
                model
            };
            self.creators[focal] -= 1;
            self.creators[target] += 1;
        }
    }

    fn monomorphic_index(&self) -> Option<usize> {
        let u = self.users.iter().position(|&n| n == self.user_pop)?;
        let c = self.creators.iter().position(|&n| n == self.creator_pop)?;
        Some(2 * u + c)
    }
}

fn other_index(current: usize, n: usize, rng: &mut ChaCha8Rng) -> usize {
    let k = rng.gen_range(0..n - 1);
    if k >= current {
        k + 1
    } else {
        k
    }
}

/// Simulates both populations agent by agent. Each step one population is
/// chosen with probability 1/2 and one of its agents revises: with
/// probability `mutation_rate` it switches to a uniformly drawn other
/// strategy, otherwise it compares itself with a random other agent of its
/// population and imitates it with the Fermi probability.
pub fn monte_carlo_run(params: &GameParams, cfg: &FiniteConfig, spec: &MonteCarloSpec) -> Result<MonteCarloRun> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&spec.mutation_rate) {
        return Err(Error::InvalidParams(format!("mutation rate {} outside [0, 1]", spec.mutation_rate)));
    }
    if spec.batches == 0 {
        return Err(Error::InvalidParams("at least one batch is needed".into()));
    }
    let table = PayoffTable::new(params)?;
    let user_set = cfg.user_strategies();
    let start_user = user_set
        .iter()
        .position(|&u| u == spec.initial.user)
        .ok_or_else(|| Error::InvalidParams(format!("{} is not an active strategy", spec.initial.user)))?;
    let mut users = vec![0; user_set.len()];
    users[start_user] = cfg.user_pop;
    let mut creators = [0; 2];
    creators[spec.initial.creator.index()] = cfg.creator_pop;
    let mut pops = Populations { table: &table, user_set, users, creators, user_pop: cfg.user_pop, creator_pop: cfg.creator_pop };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_states = 2 * user_set.len();
    let mut batch_counts = vec![vec![0u64; n_states]; spec.batches];
    let mut records = Vec::new();
    let batch_len = spec.steps.div_ceil(spec.batches as u64).max(1);
    for step in 1..=spec.steps {
        pops.step(cfg.beta, spec.mutation_rate, &mut rng);
        if let Some(s) = pops.monomorphic_index() {
            batch_counts[((step - 1) / batch_len) as usize][s] += 1;
        }
        if spec.record_every > 0 && step % spec.record_every == 0 {
            records.push(CountRecord { step, users: pops.users.clone(), creators: pops.creators });
        }
    }

    let totals: Vec<u64> = (0..n_states).map(|s| batch_counts.iter().map(|b| b[s]).sum()).collect();
    let monomorphic_steps: u64 = totals.iter().sum();
    let occupancy: Vec<f64> = totals
        .iter()
        .map(|&t| if monomorphic_steps == 0 { 0.0 } else { t as f64 / monomorphic_steps as f64 })
        .collect();
    let batch_means: Vec<Vec<f64>> = batch_counts
        .iter()
        .filter(|b| b.iter().sum::<u64>() > 0)
        .map(|b| {
            let total = b.iter().sum::<u64>() as f64;
            b.iter().map(|&n| n as f64 / total).collect()
        })
        .collect();
    let occupancy_std_error = (0..n_states)
        .map(|s| {
            let k = batch_means.len();
            if k < 2 {
                return f64::INFINITY;
            }
            let mean = batch_means.iter().map(|b| b[s]).sum::<f64>() / k as f64;
            let var = batch_means.iter().map(|b| (b[s] - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        })
        .collect();
    Ok(MonteCarloRun { records, occupancy, occupancy_std_error, monomorphic_steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvasionEstimate {
    pub trials: u64,
    pub fixations: u64,
    pub frequency: f64,
    /// Binomial standard error of `frequency`.
    pub std_error: f64,
}

/// Fraction of `trials` in which a single mutant took over, each trial run
/// agent by agent without mutation until one type is lost.
pub fn invasion_frequency(
    table: &PayoffTable,
    invasion: Invasion,
    cfg: &FiniteConfig,
    trials: u64,
    seed: u64,
) -> Result<InvasionEstimate> {
    cfg.validate()?;
    let z = invasion.population(cfg);
    let fitness: Vec<(f64, f64)> = (0..=z).map(|k| invasion.fitness_pair(table, k, z)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fixations = 0;
    for _ in 0..trials {
        let mut k = 1;
        while k > 0 && k < z {
            let focal_is_mutant = rng.gen_range(0..z) < k;
            let others_like_focal = if focal_is_mutant { k - 1 } else { z - k - 1 };
            let model_differs = rng.gen_range(0..z - 1) >= others_like_focal;
            if !model_differs {
                continue;
            }
            let (fm, fr) = fitness[k];
            if focal_is_mutant {
                if rng.gen::<f64>() < fermi_probability(fm, fr, cfg.beta) {
                    k -= 1;
                }
            } else if rng.gen::<f64>() < fermi_probability(fr, fm, cfg.beta) {
                k += 1;
            }
        }
        if k == z {
            fixations += 1;
        }
    }
    let frequency = fixations as f64 / trials as f64;
    let std_error = (frequency * (1.0 - frequency) / trials as f64).sqrt();
    Ok(InvasionEstimate { trials, fixations, frequency, std_error })
}
