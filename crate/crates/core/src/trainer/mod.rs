//! Small deterministic Q-learning harness for comparing MSE and Logistic losses.
//!
//! Each epoch runs `steps_per_epoch` ε-greedy environment steps from state 0; after every
//! step (once the replay buffer holds a full batch) one minibatch update is made on the
//! chosen loss against a Polyak-averaged target network. At the end of the epoch a batch of
//! Bellman errors `r + γ·max Q(s′) − Q(s,a)` is logged together with the greedy return.

mod network;
mod replay;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use network::{Adam, QFunctionKind, QNetwork};
pub use replay::{ReplayBuffer, Transition};

use crate::dist::{fit_mle, format_float, Family, SampleBatch};
use crate::error::{Error, Result};
use crate::fit::{ks_statistic, KsMode};
use crate::loss::{l_loss, l_loss_grad, mse_loss, mse_loss_grad, LossConfig};
use crate::rng;
use crate::tabular::{QTable, TabularMdp};

/// Regression loss on the Bellman error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LossKind {
    Mse,
    #[serde(rename = "lloss")]
    LLoss { sigma: f64 },
}

impl LossKind {
    pub fn label(&self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::LLoss { .. } => "lloss",
        }
    }

    /// Loss value and its gradient with respect to each error.
    pub fn value_and_grad(&self, errors: &[f64]) -> Result<(f64, Vec<f64>)> {
        match *self {
            LossKind::Mse => Ok((mse_loss(errors)?, mse_loss_grad(errors)?)),
            LossKind::LLoss { sigma } => {
                let cfg = LossConfig::new(sigma)?;
                Ok((l_loss(errors, &cfg)?, l_loss_grad(errors, &cfg)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub q_function: QFunctionKind,
    pub batch_size: usize,
    pub lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub reward_scale: f64,
    pub max_epochs: usize,
    pub steps_per_epoch: usize,
    /// ε falls linearly from 1 to `final_epsilon` over this many epochs
    pub explore_epochs: usize,
    pub final_epsilon: f64,
    /// stop after this many epochs without a new lowest mean loss
    pub patience: Option<usize>,
    pub replay_capacity: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Mse,
            q_function: QFunctionKind::Tabular,
            batch_size: 256,
            lr: 3e-4,
            gamma: 0.99,
            tau: 0.005,
            reward_scale: 1.0,
            max_epochs: 500,
            steps_per_epoch: 50,
            explore_epochs: 100,
            final_epsilon: 0.05,
            patience: Some(50),
            replay_capacity: 100_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be at least 1"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::domain(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::domain(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::domain(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !self.reward_scale.is_finite() || self.reward_scale == 0.0 {
            return Err(Error::domain("reward_scale must be finite and non-zero"));
        }
        if self.max_epochs == 0 || self.steps_per_epoch == 0 {
            return Err(Error::domain("max_epochs and steps_per_epoch must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.final_epsilon) {
            return Err(Error::domain("final_epsilon must lie in [0, 1]"));
        }
        if let LossKind::LLoss { sigma } = self.loss {
            LossConfig::new(sigma)?;
        }
        Ok(())
    }

    fn epsilon(&self, epoch: usize) -> f64 {
        if self.explore_epochs == 0 || epoch >= self.explore_epochs {
            return self.final_epsilon;
        }
        1.0 + (self.final_epsilon - 1.0) * epoch as f64 / self.explore_epochs as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub epsilon: f64,
    /// undiscounted, unscaled return of the greedy policy from state 0
    pub greedy_return: f64,
    /// mean minibatch loss over the epoch (NaN before the first update)
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    /// Bellman errors of one replay batch per epoch, `None` while the buffer is short
    pub bellman_errors: Vec<Option<SampleBatch>>,
    pub final_policy: Vec<usize>,
    pub stopped_early: bool,
}

impl TrainLog {
    /// Mean greedy return over all epochs.
    pub fn average_reward(&self) -> f64 {
        self.epochs.iter().map(|e| e.greedy_return).sum::<f64>() / self.epochs.len() as f64
    }

    /// Mean Bellman error over every logged batch.
    pub fn mean_bellman_error(&self) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for b in self.bellman_errors.iter().flatten() {
            sum += b.values().iter().sum::<f64>();
            n += b.len();
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// CSV with columns `epoch,epsilon,greedy_return,mean_loss`.
    pub fn write_reward_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["epoch", "epsilon", "greedy_return", "mean_loss"])?;
        for e in &self.epochs {
            out.write_record([
                e.epoch.to_string(),
                format_float(e.epsilon),
                format_float(e.greedy_return),
                format_float(e.mean_loss),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Undiscounted return of the greedy policy from state 0, capped at `n_states` steps.
fn greedy_return(env: &TabularMdp, q: &QNetwork) -> f64 {
    let mut s = Some(0);
    let mut total = 0.0;
    for _ in 0..env.n_states() {
        let Some(cur) = s else { break };
        let a = q.greedy(cur);
        total += env.reward(cur, a);
        s = env.next(cur, a);
    }
    total
}

fn bellman_errors(q: &QNetwork, batch: &[Transition], gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| t.r + gamma * q.max_value(t.s_next) - q.value(t.s, t.a))
        .collect()
}

/// Train a Q-function on `env` (which must be acyclic; episodes start in state 0).
///
/// Random streams of `cfg.seed`: 0 for exploration, 1 for network initialization,
/// 2 for replay sampling, 3 for logged batches.
pub fn run_training(env: &TabularMdp, cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    if env.has_cycle() {
        return Err(Error::Precondition("training needs an episodic (acyclic) environment".into()));
    }
    let (ns, na) = (env.n_states(), env.n_actions());
    let mut online = QNetwork::new(cfg.q_function, ns, na, cfg.seed)?;
    let mut target = online.clone();
    let mut opt = Adam::new(online.params().len(), cfg.lr);
    let mut replay = ReplayBuffer::new(cfg.replay_capacity);
    let mut explore = rng::stream(cfg.seed, 0);
    let mut sampler = rng::stream(cfg.seed, 2);
    let mut logger = rng::stream(cfg.seed, 3);
    let mut grad = vec![0.0; online.params().len()];

    let mut epochs = Vec::new();
    let mut logged = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0usize;
    let mut stopped_early = false;
    let mut state = 0usize;

    for epoch in 0..cfg.max_epochs {
        let eps = cfg.epsilon(epoch);
        let (mut loss_sum, mut updates) = (0.0, 0usize);
        for _ in 0..cfg.steps_per_epoch {
            let a = if rng::open01(&mut explore) < eps { rng::index(&mut explore, na) } else { online.greedy(state) };
            let s_next = env.next(state, a);
            replay.push(Transition { s: state, a, r: cfg.reward_scale * env.reward(state, a), s_next });
            state = s_next.unwrap_or(0);

            if replay.len() < cfg.batch_size {
                continue;
            }
            let batch = replay.sample(cfg.batch_size, &mut sampler);
            let errors: Vec<f64> = batch
                .iter()
                .map(|t| t.r + cfg.gamma * target.max_value(t.s_next) - online.value(t.s, t.a))
                .collect();
            let (loss, dl_de) = cfg.loss.value_and_grad(&errors)?;
            if !loss.is_finite() {
                return Err(Error::Training { epoch, last_good: epoch.checked_sub(1) });
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            // the error is target − Q(s,a), so ∂loss/∂Q = −∂loss/∂error
            for (t, g) in batch.iter().zip(&dl_de) {
                online.accumulate_grad(t.s, t.a, -g, &mut grad);
            }
            opt.update(online.params_mut(), &grad);
            target.polyak_from(&online, cfg.tau);
            loss_sum += loss;
            updates += 1;
        }
        if online.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Training { epoch, last_good: epoch.checked_sub(1) });
        }
        let mean_loss = if updates > 0 { loss_sum / updates as f64 } else { f64::NAN };
        logged.push(if replay.len() >= cfg.batch_size {
            let batch = replay.sample(cfg.batch_size, &mut logger);
            Some(SampleBatch::new(bellman_errors(&online, &batch, cfg.gamma), Some(cfg.seed))?)
        } else {
            None
        });
        epochs.push(EpochRecord { epoch, epsilon: eps, greedy_return: greedy_return(env, &online), mean_loss });

        if updates > 0 {
            if mean_loss < best_loss {
                best_loss = mean_loss;
                since_best = 0;
            } else {
                since_best += 1;
            }
            if cfg.patience.is_some_and(|p| since_best >= p) {
                stopped_early = true;
                break;
            }
        }
    }
    let final_policy = (0..ns).map(|s| online.greedy(s)).collect();
    Ok(TrainLog { config: cfg.clone(), epochs, bellman_errors: logged, final_policy, stopped_early })
}

/// Whether `policy` picks an optimal action in every state reachable from state 0.
pub fn policy_is_optimal(env: &TabularMdp, qstar: &QTable, policy: &[usize]) -> bool {
    let reach = env.reachable_from(0);
    (0..env.n_states()).filter(|&s| reach[s]).all(|s| {
        let best = qstar.max_value(Some(s));
        qstar.get(s, policy[s]) >= best - 1e-9 * best.abs().max(1.0)
    })
}

/// `(R_L − R_M) / R_M`.
pub fn enhancement(r_lloss: f64, r_mse: f64) -> Result<f64> {
    if r_mse == 0.0 || !r_mse.is_finite() || !r_lloss.is_finite() {
        return Err(Error::Numeric(format!("enhancement undefined for baseline {r_mse}")));
    }
    Ok((r_lloss - r_mse) / r_mse)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub mse_average_reward: f64,
    pub lloss_average_reward: f64,
    pub mse_policy: Vec<usize>,
    pub lloss_policy: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossComparison {
    pub per_seed: Vec<SeedComparison>,
    pub mean_mse_reward: f64,
    pub mean_lloss_reward: f64,
    /// `None` when the MSE baseline averages to zero
    pub enhancement: Option<f64>,
    /// logged (seed, arm, epoch) batches where the Logistic fit has KS no larger than Normal
    pub logistic_ks_wins: usize,
    pub ks_cells: usize,
}

/// Train both arms for every seed and compare rewards and Bellman-error fits.
pub fn compare_losses(env: &TabularMdp, base: &TrainConfig, seeds: &[u64]) -> Result<LossComparison> {
    if seeds.len() < 2 {
        return Err(Error::domain("comparison needs at least two seeds"));
    }
    let sigma = match base.loss {
        LossKind::LLoss { sigma } => sigma,
        LossKind::Mse => 1.0,
    };
    let mut per_seed = Vec::with_capacity(seeds.len());
    let (mut wins, mut cells) = (0usize, 0usize);
    for &seed in seeds {
        let mse = run_training(env, &TrainConfig { loss: LossKind::Mse, seed, ..base.clone() })?;
        let ll = run_training(env, &TrainConfig { loss: LossKind::LLoss { sigma }, seed, ..base.clone() })?;
        for batch in mse.bellman_errors.iter().chain(&ll.bellman_errors).flatten() {
            if let Some(win) = logistic_fits_better(batch) {
                cells += 1;
                wins += usize::from(win);
            }
        }
        per_seed.push(SeedComparison {
            seed,
            mse_average_reward: mse.average_reward(),
            lloss_average_reward: ll.average_reward(),
            mse_policy: mse.final_policy,
            lloss_policy: ll.final_policy,
        });
    }
    let n = per_seed.len() as f64;
    let mean_mse_reward = per_seed.iter().map(|p| p.mse_average_reward).sum::<f64>() / n;
    let mean_lloss_reward = per_seed.iter().map(|p| p.lloss_average_reward).sum::<f64>() / n;
    Ok(LossComparison {
        enhancement: enhancement(mean_lloss_reward, mean_mse_reward).ok(),
        per_seed,
        mean_mse_reward,
        mean_lloss_reward,
        logistic_ks_wins: wins,
        ks_cells: cells,
    })
}

/// `Some(KS_logistic ≤ KS_normal)`, or `None` when either fit is impossible.
pub fn logistic_fits_better(batch: &SampleBatch) -> Option<bool> {
    let l = fit_mle(Family::Logistic, batch).ok()?;
    let n = fit_mle(Family::Normal, batch).ok()?;
    Some(ks_statistic(batch, &l, KsMode::TwoSided) <= ks_statistic(batch, &n, KsMode::TwoSided))
}
