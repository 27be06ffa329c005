//! Deterministic finite MDPs, hard-max Q-iteration and error snapshots.
//!
//! Transitions are deterministic. `None` in the transition table is the terminal
//! sentinel, whose value is 0. Every iterate is compared against the fixed point `Q*`
//! through the gap `ε^t = Q̂ − Q*` and the Bellman error
//! `ε = [r + γ·max Q̂(s′,·)] − Q̂(s,a)` (target minus estimate).

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{format_float, DistSpec, Family};
use crate::error::{Error, Result};
use crate::rng;
use crate::special::norm_isf;

/// Deterministic MDP with `n_states × n_actions` transitions and rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpFile", into = "MdpFile")]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    next: Vec<Option<usize>>,
    reward: Vec<f64>,
}

/// On-disk layout: row-per-state nested arrays, `null` marks the terminal.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MdpFile {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    transitions: Vec<Vec<Option<usize>>>,
    rewards: Vec<Vec<f64>>,
}

impl TryFrom<MdpFile> for TabularMdp {
    type Error = Error;

    fn try_from(f: MdpFile) -> Result<Self> {
        if f.transitions.len() != f.n_states || f.rewards.len() != f.n_states {
            return Err(Error::Parse(format!(
                "expected {} rows of transitions and rewards, got {} and {}",
                f.n_states,
                f.transitions.len(),
                f.rewards.len()
            )));
        }
        if f.transitions.iter().any(|r| r.len() != f.n_actions)
            || f.rewards.iter().any(|r| r.len() != f.n_actions)
        {
            return Err(Error::Parse(format!("every row must have {} actions", f.n_actions)));
        }
        TabularMdp::new(
            f.n_states,
            f.n_actions,
            f.gamma,
            f.transitions.into_iter().flatten().collect(),
            f.rewards.into_iter().flatten().collect(),
        )
    }
}

impl From<TabularMdp> for MdpFile {
    fn from(m: TabularMdp) -> Self {
        let a = m.n_actions;
        MdpFile {
            n_states: m.n_states,
            n_actions: a,
            gamma: m.gamma,
            transitions: m.next.chunks(a).map(<[_]>::to_vec).collect(),
            rewards: m.reward.chunks(a).map(<[_]>::to_vec).collect(),
        }
    }
}

impl TabularMdp {
    /// Build from flat row-major tables.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        next: Vec<Option<usize>>,
        reward: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::domain("an MDP needs at least one state and one action"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::domain(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        let cells = n_states * n_actions;
        if next.len() != cells || reward.len() != cells {
            return Err(Error::domain(format!(
                "tables must have {cells} cells, got {} transitions and {} rewards",
                next.len(),
                reward.len()
            )));
        }
        if let Some(bad) = next.iter().flatten().find(|&&s| s >= n_states) {
            return Err(Error::domain(format!("successor {bad} is not a state")));
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::domain("rewards must be finite"));
        }
        Ok(Self { n_states, n_actions, gamma, next, reward })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Successor of `(s, a)`, `None` for the terminal.
    #[inline]
    pub fn next(&self, s: usize, a: usize) -> Option<usize> {
        self.next[s * self.n_actions + a]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn reward_row(&self, s: usize) -> &[f64] {
        &self.reward[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Copy with every reward multiplied by `k`.
    pub fn scale_rewards(&self, k: f64) -> Result<Self> {
        let reward = self.reward.iter().map(|r| r * k).collect();
        Self::new(self.n_states, self.n_actions, self.gamma, self.next.clone(), reward)
    }

    /// Whether some trajectory can revisit a state.
    pub fn has_cycle(&self) -> bool {
        // 0 unvisited, 1 on stack, 2 done
        let mut mark = vec![0u8; self.n_states];
        for root in 0..self.n_states {
            if mark[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            mark[root] = 1;
            while let Some(&mut (s, ref mut a)) = stack.last_mut() {
                if *a == self.n_actions {
                    mark[s] = 2;
                    stack.pop();
                    continue;
                }
                let succ = self.next(s, *a);
                *a += 1;
                if let Some(t) = succ {
                    match mark[t] {
                        1 => return true,
                        0 => {
                            mark[t] = 1;
                            stack.push((t, 0));
                        }
                        _ => {}
                    }
                }
            }
        }
        false
    }

    /// States some action sequence from `start` can visit (including `start`).
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n_states];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(s) = stack.pop() {
            for a in 0..self.n_actions {
                if let Some(t) = self.next(s, a) {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        seen
    }

    pub fn from_json_reader<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }

    pub fn to_json_writer<W: Write>(&self, w: W) -> Result<()> {
        Ok(serde_json::to_writer_pretty(w, self)?)
    }
}

/// Five states, 5000 actions, every action of `s_i` leads to `s_{i+1}`, `s₅` ends the
/// episode, reward 1 everywhere, γ = 0.99.
pub fn make_example1() -> TabularMdp {
    make_constant_chain(5, 5000, 1.0, 0.99).expect("fixed parameters are valid")
}

/// `n_states` in a line, all `n_actions` actions advance, reward `r` everywhere.
pub fn make_constant_chain(n_states: usize, n_actions: usize, r: f64, gamma: f64) -> Result<TabularMdp> {
    let mut next = Vec::with_capacity(n_states * n_actions);
    for s in 0..n_states {
        let succ = if s + 1 < n_states { Some(s + 1) } else { None };
        next.extend(std::iter::repeat(succ).take(n_actions));
    }
    TabularMdp::new(n_states, n_actions, gamma, next, vec![r; n_states * n_actions])
}

/// Advance-or-quit chain with mixed-sign rewards.
///
/// Action 0 advances (reward −0.1, or +1 on the last state, which then terminates) and
/// action 1 quits to the terminal with reward 0. For γ = 0.99 and `n ≤ 10` advancing is
/// optimal everywhere.
pub fn make_chain(n: usize, gamma: f64) -> Result<TabularMdp> {
    if n == 0 {
        return Err(Error::domain("chain needs at least one state"));
    }
    let mut next = Vec::with_capacity(2 * n);
    let mut reward = Vec::with_capacity(2 * n);
    for s in 0..n {
        if s + 1 < n {
            next.push(Some(s + 1));
            reward.push(-0.1);
        } else {
            next.push(None);
            reward.push(1.0);
        }
        next.push(None);
        reward.push(0.0);
    }
    TabularMdp::new(n, 2, gamma, next, reward)
}

/// Random episodic DAG in which every state is reachable from state 0.
///
/// States are visited in index order; state `s ≥ 1` is first wired into a free action slot of a
/// uniformly chosen earlier state. Remaining slots lead to a uniformly chosen later state or,
/// with probability 1/(remaining + 1), to the terminal. Rewards are uniform on [−1, 1].
pub fn make_random_dag(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> Result<TabularMdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::domain("an MDP needs at least one state and one action"));
    }
    let mut r = rng::stream(seed, 0);
    let cells = n_states * n_actions;
    let mut next: Vec<Option<Option<usize>>> = vec![None; cells];
    for s in 1..n_states {
        // s·n_actions earlier slots hold at most s − 1 forced edges, so a free one exists
        let free: Vec<usize> = (0..s * n_actions).filter(|&i| next[i].is_none()).collect();
        next[free[rng::index(&mut r, free.len())]] = Some(Some(s));
    }
    let mut reward = Vec::with_capacity(cells);
    for i in 0..cells {
        let s = i / n_actions;
        let later = n_states - s - 1;
        if next[i].is_none() {
            let pick = rng::index(&mut r, later + 1);
            next[i] = Some(if pick == later { None } else { Some(s + 1 + pick) });
        }
        reward.push(r.gen_range(-1.0..=1.0));
    }
    TabularMdp::new(n_states, n_actions, gamma, next.into_iter().map(Option::unwrap).collect(), reward)
}

/// Full `n_actions`-ary tree of `depth` levels: every `(s, a)` has its own successor,
/// leaves end the episode. State 0 is the root; states are numbered level by level.
pub fn make_injective_tree(n_actions: usize, depth: usize, r: f64, gamma: f64) -> Result<TabularMdp> {
    if depth == 0 || n_actions == 0 {
        return Err(Error::domain("tree needs depth >= 1 and at least one action"));
    }
    let mut level_start = vec![0usize];
    let mut width = 1usize;
    for _ in 0..depth {
        let last = *level_start.last().unwrap();
        level_start.push(last + width);
        width = width
            .checked_mul(n_actions)
            .ok_or_else(|| Error::domain("tree is too large"))?;
    }
    let n_states = level_start[depth];
    if n_states.saturating_mul(n_actions) > 50_000_000 {
        return Err(Error::domain(format!("tree with {n_states} states is too large")));
    }
    let mut next = Vec::with_capacity(n_states * n_actions);
    for d in 0..depth {
        for k in 0..level_start[d + 1] - level_start[d] {
            for a in 0..n_actions {
                next.push(if d + 1 < depth { Some(level_start[d + 1] + k * n_actions + a) } else { None });
            }
        }
    }
    TabularMdp::new(n_states, n_actions, gamma, next, vec![r; n_states * n_actions])
}

/// Q-values and the iteration count that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    iteration: usize,
}

impl QTable {
    pub fn zeros(mdp: &TabularMdp) -> Self {
        Self::from_values(mdp, vec![0.0; mdp.n_states * mdp.n_actions]).expect("shape matches")
    }

    pub fn from_values(mdp: &TabularMdp, values: Vec<f64>) -> Result<Self> {
        if values.len() != mdp.n_states * mdp.n_actions {
            return Err(Error::domain(format!(
                "Q-table needs {} values, got {}",
                mdp.n_states * mdp.n_actions,
                values.len()
            )));
        }
        Ok(Self { n_states: mdp.n_states, n_actions: mdp.n_actions, values, iteration: 0 })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// `max_a Q(s, a)`, or 0 for the terminal.
    #[inline]
    pub fn max_value(&self, s: Option<usize>) -> f64 {
        match s {
            Some(s) => self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max),
            None => 0.0,
        }
    }

    /// First maximizing action of each state.
    pub fn greedy_policy(&self) -> Vec<usize> {
        (0..self.n_states)
            .map(|s| {
                let row = self.row(s);
                let mut best = 0;
                for (a, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect()
    }

    /// `max |self − other|`.
    pub fn sup_distance(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_shape(&self, mdp: &TabularMdp) -> Result<()> {
        if self.n_states != mdp.n_states || self.n_actions != mdp.n_actions {
            return Err(Error::domain(format!(
                "Q-table is {}x{}, MDP is {}x{}",
                self.n_states, self.n_actions, mdp.n_states, mdp.n_actions
            )));
        }
        Ok(())
    }
}

/// Every cell drawn i.i.d. from `init` (Normal or Gumbel) on stream 0 of `seed`.
pub fn init_q(mdp: &TabularMdp, init: &DistSpec, seed: u64) -> Result<QTable> {
    if init.family() == Family::Logistic {
        return Err(Error::domain("initial Q-values must be Normal or Gumbel"));
    }
    let batch = init.sample(mdp.n_states * mdp.n_actions, seed)?;
    QTable::from_values(mdp, batch.into_values())
}

/// `Q′(s,a) = r(s,a) + γ·max_{a′} Q(𝒯(s,a), a′)`.
pub fn bellman_step(mdp: &TabularMdp, q: &QTable) -> Result<QTable> {
    q.check_shape(mdp)?;
    let row_max: Vec<f64> = (0..mdp.n_states).map(|s| q.max_value(Some(s))).collect();
    let values = (0..mdp.n_states * mdp.n_actions)
        .map(|i| {
            let tail = mdp.next[i].map_or(0.0, |s| row_max[s]);
            mdp.reward[i] + mdp.gamma * tail
        })
        .collect();
    Ok(QTable { n_states: q.n_states, n_actions: q.n_actions, values, iteration: q.iteration + 1 })
}

pub const QSTAR_TOL: f64 = 1e-12;
pub const QSTAR_BUDGET: usize = 1_000_000;

/// Fixed point of [`bellman_step`] from `Q ≡ 0`.
///
/// Stops when the contraction bound `γ/(1−γ)·‖ΔQ‖` drops below `1e-12` or the update
/// reaches the rounding floor of the table.
pub fn solve_qstar(mdp: &TabularMdp) -> Result<QTable> {
    let mut q = QTable::zeros(mdp);
    let g = mdp.gamma;
    let mut delta = f64::INFINITY;
    for _ in 0..QSTAR_BUDGET {
        let next = bellman_step(mdp, &q)?;
        delta = next.sup_distance(&q);
        let scale = next.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        q = next;
        if delta == 0.0 || g / (1.0 - g) * delta <= QSTAR_TOL || delta <= 4.0 * f64::EPSILON * scale {
            return Ok(q);
        }
    }
    Err(Error::Convergence { iterations: QSTAR_BUDGET, residual: delta })
}

/// Per-cell gap and Bellman error for a subset of state rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSnapshot {
    pub t: usize,
    pub n_actions: usize,
    /// state index of each stored row
    pub states: Vec<usize>,
    /// `Q̂ − Q*`, row-major over `states × actions`
    pub eps_gap: Vec<f64>,
    /// `r + γ·max Q̂(s′,·) − Q̂(s,a)`
    pub bellman_err: Vec<f64>,
}

impl ErrorSnapshot {
    /// `(eps_gap, bellman_err)` of the `k`-th stored row.
    pub fn row(&self, k: usize) -> (&[f64], &[f64]) {
        let r = k * self.n_actions..(k + 1) * self.n_actions;
        (&self.eps_gap[r.clone()], &self.bellman_err[r])
    }

    /// Restriction to a single state, if that state is stored.
    pub fn by_state(&self, s: usize) -> Option<(&[f64], &[f64])> {
        self.states.iter().position(|&x| x == s).map(|k| self.row(k))
    }

    /// CSV with columns `t,state,action,eps_gap,bellman_err`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["t", "state", "action", "eps_gap", "bellman_err"])?;
        for (k, &s) in self.states.iter().enumerate() {
            let (gap, err) = self.row(k);
            for a in 0..self.n_actions {
                out.write_record([
                    self.t.to_string(),
                    s.to_string(),
                    a.to_string(),
                    format_float(gap[a]),
                    format_float(err[a]),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Gap and Bellman error of every cell.
pub fn snapshot_errors(mdp: &TabularMdp, q: &QTable, qstar: &QTable) -> Result<ErrorSnapshot> {
    snapshot_rows(mdp, q, qstar, &(0..mdp.n_states).collect::<Vec<_>>())
}

/// Gap and Bellman error of the listed state rows.
pub fn snapshot_rows(mdp: &TabularMdp, q: &QTable, qstar: &QTable, states: &[usize]) -> Result<ErrorSnapshot> {
    q.check_shape(mdp)?;
    qstar.check_shape(mdp)?;
    if let Some(bad) = states.iter().find(|&&s| s >= mdp.n_states) {
        return Err(Error::domain(format!("state {bad} out of range")));
    }
    let cap = states.len() * mdp.n_actions;
    let mut eps_gap = Vec::with_capacity(cap);
    let mut bellman_err = Vec::with_capacity(cap);
    for &s in states {
        for a in 0..mdp.n_actions {
            let est = q.get(s, a);
            eps_gap.push(est - qstar.get(s, a));
            bellman_err.push(mdp.reward(s, a) + mdp.gamma * q.max_value(mdp.next(s, a)) - est);
        }
    }
    Ok(ErrorSnapshot { t: q.iteration, n_actions: mdp.n_actions, states: states.to_vec(), eps_gap, bellman_err })
}

/// Predicted Gumbel law of `γ·max Q*(s′) + ε^t(s,a)`: location `C_t(s,a)`, scale `β_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GumbelPrediction {
    pub t: usize,
    pub n_actions: usize,
    pub c_t: Vec<f64>,
    pub beta_t: f64,
    /// every state has the same reward multiset, so `C_t` has the simple closed form
    pub degenerate: bool,
}

impl GumbelPrediction {
    pub fn c(&self, s: usize, a: usize) -> f64 {
        self.c_t[s * self.n_actions + a]
    }

    /// Predicted mean of `ε^t(s,a)`: `C_t − γ·max Q*(s′) + β_t·v`.
    pub fn gap_mean(&self, mdp: &TabularMdp, qstar: &QTable, s: usize, a: usize) -> f64 {
        self.c(s, a) - mdp.gamma * qstar.max_value(mdp.next(s, a)) + self.beta_t * crate::special::EULER_GAMMA
    }
}

/// `C_t` and `β_t` from `C₁ = c1`, `β₁ = beta1`.
///
/// `C₂ = γ(C₁ + β₁ ln Σ_{a′} e^{r(s′,a′)/β₁})`, and for `t ≥ 3`
/// `C_t = γ·β_{t−1} ln Σ_{a′} e^{(r(s′,a′) + C_{t−1}(s′,a′))/β_{t−1}}`, with `s′ = 𝒯(s,a)`.
/// Cells whose successor is the terminal get `C_t = 0`. The sum depends only on `s′`, so it
/// is computed once per state.
pub fn predict_gumbel(mdp: &TabularMdp, t: usize, c1: f64, beta1: f64) -> Result<GumbelPrediction> {
    if t == 0 {
        return Err(Error::domain("prediction needs t >= 1"));
    }
    if !(beta1 > 0.0) || !beta1.is_finite() {
        return Err(Error::domain(format!("beta1 must be positive, got {beta1}")));
    }
    let (ns, na, g) = (mdp.n_states, mdp.n_actions, mdp.gamma);
    let mut c = vec![c1; ns * na];
    let mut beta = beta1;
    for step in 2..=t {
        let per_state: Vec<f64> = (0..ns)
            .map(|s| {
                let terms: Vec<f64> = (0..na)
                    .map(|a| {
                        let extra = if step == 2 { 0.0 } else { c[s * na + a] };
                        (mdp.reward(s, a) + extra) / beta
                    })
                    .collect();
                let lse = beta * crate::special::log_sum_exp(&terms);
                if step == 2 {
                    lse + c1
                } else {
                    lse
                }
            })
            .collect();
        c = mdp.next.iter().map(|n| n.map_or(0.0, |s| g * per_state[s])).collect();
        beta *= g;
    }
    Ok(GumbelPrediction { t, n_actions: na, c_t: c, beta_t: beta, degenerate: shares_reward_multiset(mdp) })
}

fn shares_reward_multiset(mdp: &TabularMdp) -> bool {
    let sorted = |s: usize| {
        let mut r = mdp.reward_row(s).to_vec();
        r.sort_by(f64::total_cmp);
        r
    };
    let first = sorted(0);
    (1..mdp.n_states).all(|s| sorted(s) == first)
}

/// Exact sampler for the root row of [`make_injective_tree`] with constant reward.
///
/// On the tree every `(s, a)` owns a disjoint subtree, so after `t` iterations
/// `Q^t(root, a) = r·Σ_{k<t} γ^k + γ^t·M_a` where `M_a` is the maximum of `n^t` independent
/// initial values. Such a maximum is drawn directly: `F⁻¹(U^{1/K})` for a Normal start (via
/// the upper tail `1 − U^{1/K}`), `μ + s·(ln K + G)` for a Gumbel start. This gives the root
/// row of an arbitrarily wide tree without materializing it.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeRowSampler {
    pub n_actions: usize,
    pub depth: usize,
    pub reward: f64,
    pub gamma: f64,
    pub init: DistSpec,
}

impl TreeRowSampler {
    pub fn new(n_actions: usize, depth: usize, reward: f64, gamma: f64, init: DistSpec) -> Result<Self> {
        if n_actions == 0 || depth == 0 {
            return Err(Error::domain("sampler needs depth >= 1 and at least one action"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::domain(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if init.family() == Family::Logistic {
            return Err(Error::domain("initial Q-values must be Normal or Gumbel"));
        }
        Ok(Self { n_actions, depth, reward, gamma, init })
    }

    /// Five levels, 5000 actions, reward 1, γ = 0.99.
    pub fn example1(init: DistSpec) -> Result<Self> {
        Self::new(5000, 5, 1.0, 0.99, init)
    }

    fn partial_return(&self, steps: usize) -> f64 {
        (0..steps).map(|k| self.reward * self.gamma.powi(k as i32)).sum()
    }

    /// `Q*` of a node at 1-based level `level`.
    pub fn qstar_at_level(&self, level: usize) -> f64 {
        self.partial_return(self.depth + 1 - level)
    }

    /// One draw of the maximum of `n^k` initial values.
    fn draw_max<R: rand::RngCore>(&self, k: usize, r: &mut R) -> f64 {
        let ln_k = k as f64 * (self.n_actions as f64).ln();
        let u = rng::open01(r);
        let (mu, s) = (self.init.location(), self.init.scale());
        match self.init.family() {
            Family::Gumbel => mu + s * (ln_k - (-u.ln()).ln()),
            _ => {
                // 1 − U^{1/K}
                let q = -(u.ln() * (-ln_k).exp()).exp_m1();
                mu + s * norm_isf(q)
            }
        }
    }

    /// Root row at iteration `t`, drawn from stream `t` of `seed`.
    pub fn sample_root(&self, t: usize, seed: u64) -> Result<ErrorSnapshot> {
        if t == 0 {
            return Err(Error::domain("sample the root at t >= 1; Q⁰ is the initial table"));
        }
        let mut r = rng::stream(seed, t as u64);
        let g = self.gamma;
        let qstar_root = self.qstar_at_level(1);
        let gt = g.powi(t as i32);
        let n = self.n_actions;
        let mut eps_gap = Vec::with_capacity(n);
        let mut bellman_err = Vec::with_capacity(n);
        for _ in 0..n {
            // estimate at the root and the best estimate one level down
            let est = if t < self.depth {
                self.partial_return(t) + gt * self.draw_max(t, &mut r)
            } else {
                qstar_root
            };
            let child_best = if t + 1 < self.depth {
                self.partial_return(t) + gt * self.draw_max(t + 1, &mut r)
            } else if self.depth > 1 {
                self.qstar_at_level(2)
            } else {
                0.0
            };
            eps_gap.push(est - qstar_root);
            bellman_err.push(self.reward + g * child_best - est);
        }
        Ok(ErrorSnapshot { t, n_actions: n, states: vec![0], eps_gap, bellman_err })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{ks_sorted, KsMode};

    fn two_state_chain() -> TabularMdp {
        make_constant_chain(2, 1, 1.0, 0.5).unwrap()
    }

    #[test]
    fn hand_rolled_iteration() {
        let m = two_state_chain();
        let q1 = bellman_step(&m, &QTable::zeros(&m)).unwrap();
        assert_eq!(q1.values(), &[1.0, 1.0]);
        let q2 = bellman_step(&m, &q1).unwrap();
        assert_eq!(q2.values(), &[1.5, 1.0]);
        assert_eq!(q2.iteration(), 2);
    }

    #[test]
    fn zero_rewards_are_a_fixed_point() {
        let m = make_constant_chain(4, 3, 0.0, 0.9).unwrap();
        let q = bellman_step(&m, &QTable::zeros(&m)).unwrap();
        assert!(q.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn example1_qstar() {
        let m = make_example1();
        assert_eq!((m.n_states(), m.n_actions()), (5, 5000));
        assert!(m.reward.iter().all(|&r| r == 1.0));
        let q = solve_qstar(&m).unwrap();
        for i in 0..5 {
            let expect: f64 = (0..5 - i).map(|k| 0.99f64.powi(k as i32)).sum();
            assert!(q.row(i).iter().all(|&v| (v - expect).abs() < 1e-12));
        }
        assert!((q.get(0, 0) - 4.900_995_01).abs() < 1e-12);
        assert_eq!(q.get(4, 17), 1.0);
        let again = bellman_step(&m, &q).unwrap();
        assert!(again.sup_distance(&q) < 1e-15);
    }

    #[test]
    fn absorbing_state() {
        let m = TabularMdp::new(1, 2, 0.99, vec![Some(0), Some(0)], vec![1.0, 1.0]).unwrap();
        let q = solve_qstar(&m).unwrap();
        assert!((q.get(0, 1) - 100.0).abs() < 1e-9);
        assert!(m.has_cycle());
        assert!(!make_example1().has_cycle());
        let chain = make_constant_chain(4, 2, 0.0, 0.5).unwrap();
        assert_eq!(chain.reachable_from(1), vec![false, true, true, true]);
    }

    fn backward_induction(m: &TabularMdp) -> Vec<f64> {
        // successors have larger indices in a generated DAG
        let mut v = vec![0.0; m.n_states()];
        let mut q = vec![0.0; m.n_states() * m.n_actions()];
        for s in (0..m.n_states()).rev() {
            for a in 0..m.n_actions() {
                q[s * m.n_actions() + a] = m.reward(s, a) + m.gamma() * m.next(s, a).map_or(0.0, |t| v[t]);
            }
            v[s] = q[s * m.n_actions()..(s + 1) * m.n_actions()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        q
    }

    #[test]
    fn random_dags_match_backward_induction() {
        for seed in 0..5 {
            let m = make_random_dag(10, 10, 0.95, seed).unwrap();
            assert!(!m.has_cycle());
            assert!(m.reachable_from(0).iter().all(|&x| x));
            let q = solve_qstar(&m).unwrap();
            let oracle = backward_induction(&m);
            let d = q.values().iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 1e-10, "seed {seed}: {d}");
        }
    }

    #[test]
    fn contraction_at_every_step() {
        for seed in 0..4 {
            let m = make_random_dag(12, 4, 0.9, seed).unwrap();
            let qs = solve_qstar(&m).unwrap();
            let mut q = init_q(&m, &DistSpec::normal(0.0, 3.0).unwrap(), seed).unwrap();
            for _ in 0..15 {
                let next = bellman_step(&m, &q).unwrap();
                assert!(next.sup_distance(&qs) <= m.gamma() * q.sup_distance(&qs) + 1e-12);
                q = next;
            }
        }
    }

    #[test]
    fn init_is_seeded_and_distributed() {
        let m = make_example1();
        let g = DistSpec::gumbel(0.0, 1.0).unwrap();
        let a = init_q(&m, &g, 1).unwrap();
        assert_eq!(a, init_q(&m, &g, 1).unwrap());
        let b = init_q(&m, &g, 2).unwrap();
        let differ = a.values().iter().zip(b.values()).filter(|(x, y)| x != y).count();
        assert!(differ as f64 >= 0.99 * 25_000.0);
        let mut v = a.values().to_vec();
        v.sort_by(f64::total_cmp);
        assert!(ks_sorted(&v, |x| g.cdf(x), KsMode::TwoSided) < 0.01);
        assert!(init_q(&m, &DistSpec::logistic(0.0, 1.0).unwrap(), 1).is_err());
    }

    #[test]
    fn snapshot_at_optimum_is_zero() {
        let m = make_random_dag(6, 3, 0.9, 11).unwrap();
        let q = solve_qstar(&m).unwrap();
        let snap = snapshot_errors(&m, &q, &q).unwrap();
        assert!(snap.eps_gap.iter().all(|&e| e == 0.0));
        assert!(snap.bellman_err.iter().all(|&e| e.abs() < 1e-12));
    }

    #[test]
    fn raising_one_row_makes_its_bellman_error_negative() {
        let m = make_random_dag(8, 3, 0.9, 4).unwrap();
        let qs = solve_qstar(&m).unwrap();
        let mut q = qs.clone();
        for a in 0..3 {
            q.set(0, a, q.get(0, a) + 0.5);
        }
        let snap = snapshot_rows(&m, &q, &qs, &[0]).unwrap();
        let mean: f64 = snap.bellman_err.iter().sum::<f64>() / 3.0;
        assert!(mean < 0.0);
    }

    #[test]
    fn json_round_trip() {
        let m = make_random_dag(4, 2, 0.8, 3).unwrap();
        let mut buf = Vec::new();
        m.to_json_writer(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"transitions\"") && text.contains("null"));
        assert_eq!(TabularMdp::from_json_reader(&buf[..]).unwrap(), m);
        let bad = r#"{"n_states":1,"n_actions":1,"gamma":0.9,"transitions":[[3]],"rewards":[[0.0]]}"#;
        assert!(TabularMdp::from_json_reader(bad.as_bytes()).is_err());
    }

    #[test]
    fn snapshot_csv_layout() {
        let m = two_state_chain();
        let qs = solve_qstar(&m).unwrap();
        let q = bellman_step(&m, &QTable::zeros(&m)).unwrap();
        let mut buf = Vec::new();
        snapshot_errors(&m, &q, &qs).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,state,action,eps_gap,bellman_err"));
        assert_eq!(lines.next(), Some("1,0,0,-0.5,0.5"));
        assert_eq!(lines.next(), Some("1,1,0,0.0,0.0"));
    }

    #[test]
    fn prediction_base_case_and_constant_reward_form() {
        let m = make_example1();
        let p1 = predict_gumbel(&m, 1, 0.3, 2.0).unwrap();
        assert!(p1.c_t.iter().all(|&c| c == 0.3) && p1.beta_t == 2.0);
        assert!(p1.degenerate);
        let g = 0.99;
        let (c1, b1) = (0.3, 2.0);
        let n = 5000f64;
        let p2 = predict_gumbel(&m, 2, c1, b1).unwrap();
        let expect = g * (c1 + b1 * n.ln() + 1.0);
        assert!((p2.c(0, 0) - expect).abs() < 1e-12);
        assert_eq!(p2.c(4, 0), 0.0);
        assert!((p2.beta_t - g * b1).abs() < 1e-15);
        // with constant rewards the additive and nested forms of the step coincide
        let p3 = predict_gumbel(&m, 3, c1, b1).unwrap();
        let b2 = g * b1;
        assert!((p3.c(0, 0) - g * (p2.c(1, 0) + b2 * n.ln() + 1.0)).abs() < 1e-11);
        assert!(predict_gumbel(&m, 0, 0.0, 1.0).is_err());
        assert!(!predict_gumbel(&make_random_dag(5, 3, 0.9, 0).unwrap(), 2, 0.0, 1.0).unwrap().degenerate);
    }

    #[test]
    fn literal_example1_rows_collapse() {
        let m = make_example1();
        let q0 = init_q(&m, &DistSpec::normal(0.0, 1.0).unwrap(), 9).unwrap();
        let q1 = bellman_step(&m, &q0).unwrap();
        let row = q1.row(0);
        assert!(row.iter().all(|&v| v == row[0]));
    }

    #[test]
    fn tree_geometry() {
        let m = make_injective_tree(3, 3, 1.0, 0.9).unwrap();
        assert_eq!(m.n_states(), 1 + 3 + 9);
        let mut seen = std::collections::HashSet::new();
        for s in 0..m.n_states() {
            for a in 0..3 {
                if let Some(t) = m.next(s, a) {
                    assert!(seen.insert(t), "{t} reached twice");
                }
            }
        }
        assert_eq!(seen.len(), 12);
    }

    /// The closed-form root sampler and brute-force iteration on a materialized tree must
    /// produce the same laws.
    #[test]
    fn tree_sampler_matches_materialized_tree() {
        let (n, depth, g) = (3usize, 4usize, 0.9);
        let m = make_injective_tree(n, depth, 1.0, g).unwrap();
        let qs = solve_qstar(&m).unwrap();
        for init in [DistSpec::normal(0.0, 1.0).unwrap(), DistSpec::gumbel(0.5, 2.0).unwrap()] {
            let sampler = TreeRowSampler::new(n, depth, 1.0, g, init).unwrap();
            assert!((sampler.qstar_at_level(1) - qs.get(0, 0)).abs() < 1e-12);
            for t in 1..=depth {
                let (mut brute_gap, mut brute_err, mut fast_gap, mut fast_err) = (vec![], vec![], vec![], vec![]);
                for seed in 0..1500u64 {
                    let mut q = init_q(&m, &init, seed).unwrap();
                    for _ in 0..t {
                        q = bellman_step(&m, &q).unwrap();
                    }
                    let s = snapshot_rows(&m, &q, &qs, &[0]).unwrap();
                    brute_gap.extend(s.eps_gap);
                    brute_err.extend(s.bellman_err);
                    let f = sampler.sample_root(t, 10_000 + seed).unwrap();
                    fast_gap.extend(f.eps_gap);
                    fast_err.extend(f.bellman_err);
                }
                for (x, y) in [(&mut brute_gap, &mut fast_gap), (&mut brute_err, &mut fast_err)] {
                    x.sort_by(f64::total_cmp);
                    y.sort_by(f64::total_cmp);
                    let d = two_sample_ks(x, y);
                    // critical value at 1e-4 for 4500 vs 4500 draws is about 0.04
                    assert!(d < 0.045, "t={t} init={init:?}: {d}");
                }
            }
        }
    }

    fn two_sample_ks(x: &[f64], y: &[f64]) -> f64 {
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < x.len() && j < y.len() {
            let v = x[i].min(y[j]);
            while i < x.len() && x[i] <= v {
                i += 1;
            }
            while j < y.len() && y[j] <= v {
                j += 1;
            }
            d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
        }
        d
    }
}
