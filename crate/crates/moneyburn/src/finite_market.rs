//! Finite-market simulation: sampled discrete markets, an exact serial
//! dictatorship, an exact VCG (externality payments burned), and Monte
//! Carlo estimates of the SD/VCG residual-surplus ratio with optional
//! within-agent or between-agent value correlation.

use crate::benchmarks::{rs_sd, rs_vcg};
use crate::distributions::{Dist, Marginal};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A sampled market: `values[i][k]` is agent `i`'s value for object
/// `k`; `capacities[k]` is the integer supply of object `k`.
#[derive(Debug, Clone)]
pub struct FiniteMarket {
    pub values: Vec<Vec<f64>>,
    pub capacities: Vec<u32>,
}

impl FiniteMarket {
    pub fn num_agents(&self) -> usize {
        self.values.len()
    }

    pub fn num_objects(&self) -> usize {
        self.capacities.len()
    }

    pub fn total_slots(&self) -> usize {
        self.capacities.iter().map(|&m| m as usize).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::DomainViolation("market needs at least one agent".into()));
        }
        if self.capacities.is_empty() {
            return Err(Error::DomainViolation("market needs at least one object".into()));
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != self.num_objects() {
                return Err(Error::DomainViolation(format!(
                    "agent {i} has {} values for {} objects",
                    row.len(),
                    self.num_objects()
                )));
            }
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::DomainViolation(format!(
                        "agent {i} has invalid value {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Correlation structure for sampled values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correlation {
    /// All `I × K` values independent.
    Iid,
    /// Per agent: with the mixing probability one common draw is used
    /// for both objects, otherwise the two values are independent
    /// (needs exactly 2 objects).
    WithinAgent,
    /// Per market: with the mixing probability each object's value is
    /// common across both agents, otherwise all values are independent
    /// (needs exactly 2 agents).
    BetweenAgent,
}

/// Sampling configuration for a finite market.
#[derive(Debug, Clone)]
pub struct MarketConfig {
    pub agents: usize,
    pub capacities: Vec<u32>,
    pub marginal: Marginal,
    pub correlation: Correlation,
    /// Weight of the perfectly-correlated mixture component.
    pub mix_prob: f64,
    pub seed: u64,
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::DomainViolation("market needs at least one agent".into()));
        }
        if self.capacities.is_empty() {
            return Err(Error::DomainViolation("market needs at least one object".into()));
        }
        self.marginal.validate()?;
        if !(0.0..=1.0).contains(&self.mix_prob) {
            return Err(Error::DomainViolation(format!(
                "mixing probability must lie in [0, 1], got {}",
                self.mix_prob
            )));
        }
        match self.correlation {
            Correlation::Iid => {}
            Correlation::WithinAgent => {
                if self.capacities.len() != 2 {
                    return Err(Error::DomainViolation(
                        "within-agent correlation needs exactly 2 objects".into(),
                    ));
                }
            }
            Correlation::BetweenAgent => {
                if self.agents != 2 {
                    return Err(Error::DomainViolation(
                        "between-agent correlation needs exactly 2 agents".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Serial-dictatorship outcome: assigned object per agent and the
/// residual surplus (gross value, nothing is burned).
#[derive(Debug, Clone)]
pub struct SdOutcome {
    pub assignment: Vec<Option<usize>>,
    pub rs: f64,
}

/// VCG outcome: efficient assignment, externality payments (burned),
/// gross surplus, and residual surplus `gross − Σ payments`.
#[derive(Debug, Clone)]
pub struct VcgOutcome {
    pub assignment: Vec<Option<usize>>,
    pub payments: Vec<f64>,
    pub gross: f64,
    pub rs: f64,
}

/// Monte Carlo comparison summary.
#[derive(Debug, Clone, Copy)]
pub struct SimResult {
    pub trials: usize,
    pub mean_rs_sd: f64,
    pub mean_rs_vcg: f64,
    /// `mean(rs_sd) / mean(rs_vcg)`.
    pub ratio: f64,
    /// Batch-means standard error of the ratio (100 batches).
    pub stderr: f64,
}

/// Draws one market from `cfg` using the provided RNG state.
pub fn sample_market(cfg: &MarketConfig, rng: &mut impl Rng) -> Result<FiniteMarket> {
    cfg.validate()?;
    let draw = |rng: &mut dyn rand::RngCore| -> Result<f64> {
        cfg.marginal.quantile(rng.gen::<f64>())
    };
    let i = cfg.agents;
    let k = cfg.capacities.len();
    let mut values = vec![vec![0.0; k]; i];
    match cfg.correlation {
        Correlation::Iid => {
            for row in values.iter_mut() {
                for v in row.iter_mut() {
                    *v = draw(rng)?;
                }
            }
        }
        Correlation::WithinAgent => {
            for row in values.iter_mut() {
                if rng.gen::<f64>() < cfg.mix_prob {
                    let common = draw(rng)?;
                    row[0] = common;
                    row[1] = common;
                } else {
                    row[0] = draw(rng)?;
                    row[1] = draw(rng)?;
                }
            }
        }
        Correlation::BetweenAgent => {
            if rng.gen::<f64>() < cfg.mix_prob {
                for obj in 0..k {
                    let common = draw(rng)?;
                    values[0][obj] = common;
                    values[1][obj] = common;
                }
            } else {
                for row in values.iter_mut() {
                    for v in row.iter_mut() {
                        *v = draw(rng)?;
                    }
                }
            }
        }
    }
    Ok(FiniteMarket {
        values,
        capacities: cfg.capacities.clone(),
    })
}

/// Runs serial dictatorship under the given priority order: each agent
/// in turn takes an available object maximizing their value, ties going
/// to the lowest object index.
pub fn run_sd(market: &FiniteMarket, priority: &[usize]) -> Result<SdOutcome> {
    market.validate()?;
    let i = market.num_agents();
    if priority.len() != i {
        return Err(Error::DomainViolation(format!(
            "priority length {} for {i} agents",
            priority.len()
        )));
    }
    let mut seen = vec![false; i];
    for &a in priority {
        if a >= i || seen[a] {
            return Err(Error::DomainViolation(
                "priority must be a permutation of the agents".into(),
            ));
        }
        seen[a] = true;
    }
    let mut remaining = market.capacities.clone();
    let mut assignment = vec![None; i];
    let mut rs = 0.0;
    for &a in priority {
        let mut best: Option<(usize, f64)> = None;
        for (obj, &cap) in remaining.iter().enumerate() {
            if cap == 0 {
                continue;
            }
            let v = market.values[a][obj];
            let better = match best {
                None => true,
                Some((_, bv)) => v > bv,
            };
            if better {
                best = Some((obj, v));
            }
        }
        if let Some((obj, v)) = best {
            remaining[obj] -= 1;
            assignment[a] = Some(obj);
            rs += v;
        }
    }
    Ok(SdOutcome { assignment, rs })
}

/// Slot-expanded assignment state for the Hungarian algorithm: rows are
/// object slots, columns are agents plus zero-value dummies (at least
/// one dummy keeps an augmenting path available when a column is banned
/// during externality re-solves).
struct AssignmentState {
    rows: usize,
    cols: usize,
    real_cols: usize,
    /// Object index of each slot row.
    slot_object: Vec<usize>,
    u: Vec<f64>,
    v: Vec<f64>,
    row_of_col: Vec<Option<usize>>,
    col_of_row: Vec<Option<usize>>,
}

impl AssignmentState {
    fn new(market: &FiniteMarket) -> Self {
        let mut slot_object = Vec::with_capacity(market.total_slots());
        for (obj, &cap) in market.capacities.iter().enumerate() {
            for _ in 0..cap {
                slot_object.push(obj);
            }
        }
        let rows = slot_object.len();
        let real_cols = market.num_agents();
        let cols = real_cols.max(rows) + 1;
        AssignmentState {
            rows,
            cols,
            real_cols,
            slot_object,
            u: vec![0.0; rows],
            v: vec![0.0; cols],
            row_of_col: vec![None; cols],
            col_of_row: vec![None; rows],
        }
    }

    /// Minimization cost of assigning slot `row` to column `col`.
    fn cost(&self, market: &FiniteMarket, row: usize, col: usize) -> f64 {
        if col < self.real_cols {
            -market.values[col][self.slot_object[row]]
        } else {
            0.0
        }
    }

    /// One augmentation phase assigning free row `r0`, optionally with a
    /// banned column, preserving dual feasibility and complementary
    /// slackness (shortest alternating path with potential updates).
    fn augment(&mut self, market: &FiniteMarket, r0: usize, banned: Option<usize>) {
        const ROOT: usize = usize::MAX;
        let mut used = vec![false; self.cols];
        let mut min_slack = vec![f64::INFINITY; self.cols];
        let mut slack_from = vec![ROOT; self.cols];
        let mut cur_row = r0;
        let mut cur_from = ROOT;
        loop {
            let mut delta = f64::INFINITY;
            let mut next_col = ROOT;
            for j in 0..self.cols {
                if used[j] || Some(j) == banned {
                    continue;
                }
                let slack = self.cost(market, cur_row, j) - self.u[cur_row] - self.v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    slack_from[j] = cur_from;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    next_col = j;
                }
            }
            debug_assert!(next_col != ROOT, "no admissible column remains");
            self.u[r0] += delta;
            for j in 0..self.cols {
                if used[j] {
                    self.u[self.row_of_col[j].expect("tree column is matched")] += delta;
                    self.v[j] -= delta;
                } else if Some(j) != banned {
                    min_slack[j] -= delta;
                }
            }
            used[next_col] = true;
            match self.row_of_col[next_col] {
                Some(r) => {
                    cur_row = r;
                    cur_from = next_col;
                }
                None => {
                    // Augment along the recorded predecessor chain.
                    let mut j = next_col;
                    loop {
                        let from = slack_from[j];
                        if from == ROOT {
                            self.row_of_col[j] = Some(r0);
                            self.col_of_row[r0] = Some(j);
                            break;
                        }
                        let r = self.row_of_col[from].expect("chain column is matched");
                        self.row_of_col[j] = Some(r);
                        self.col_of_row[r] = Some(j);
                        j = from;
                    }
                    return;
                }
            }
        }
    }

    /// Matching welfare, summed in agent-index order — the canonical
    /// grouping, since permuting agents among slots of one object is
    /// the same assignment and must give a bitwise-equal total.
    fn welfare(&self, market: &FiniteMarket) -> f64 {
        let mut total = 0.0;
        for c in 0..self.real_cols {
            if let Some(r) = self.row_of_col[c] {
                total += market.values[c][self.slot_object[r]];
            }
        }
        total
    }
}

/// Runs VCG exactly: a maximum-welfare slot assignment plus per-agent
/// externality payments (burned), so `rs = gross − Σ payments`.
pub fn run_vcg(market: &FiniteMarket) -> Result<VcgOutcome> {
    market.validate()?;
    let i = market.num_agents();
    let mut state = AssignmentState::new(market);
    for r in 0..state.rows {
        state.augment(market, r, None);
    }
    let gross = state.welfare(market);
    let mut assignment = vec![None; i];
    for r in 0..state.rows {
        if let Some(c) = state.col_of_row[r] {
            if c < state.real_cols {
                assignment[c] = Some(state.slot_object[r]);
            }
        }
    }
    let mut payments = vec![0.0; i];
    let saved_u = state.u.clone();
    let saved_v = state.v.clone();
    let saved_roc = state.row_of_col.clone();
    let saved_cor = state.col_of_row.clone();
    for a in 0..i {
        // Unmatched agents impose no externality: dropping them leaves
        // the optimum untouched.
        let Some(row) = saved_roc[a] else {
            continue;
        };
        state.row_of_col[a] = None;
        state.col_of_row[row] = None;
        state.augment(market, row, Some(a));
        let welfare_without = state.welfare(market);
        let own_value = market.values[a][state.slot_object[row]];
        // Externality: the difference in floating-point groupings of the
        // two welfare sums can leave a ±1e-16 residue on a true zero.
        payments[a] = (welfare_without - (gross - own_value)).max(0.0);
        state.u.copy_from_slice(&saved_u);
        state.v.copy_from_slice(&saved_v);
        state.row_of_col.copy_from_slice(&saved_roc);
        state.col_of_row.copy_from_slice(&saved_cor);
    }
    let burned: f64 = payments.iter().sum();
    Ok(VcgOutcome {
        assignment,
        payments,
        gross,
        rs: gross - burned,
    })
}

/// Monte Carlo estimate of `mean(rs_sd) / mean(rs_vcg)` over sampled
/// markets; SD draws a fresh uniform priority each trial. Trials use
/// independent RNG streams keyed by trial index, so results are
/// reproducible for a fixed seed regardless of execution order.
pub fn mc_ratio(cfg: &MarketConfig, trials: usize) -> Result<SimResult> {
    cfg.validate()?;
    if trials < 1_000 {
        return Err(Error::DomainViolation(format!(
            "need at least 1000 trials for batch-means errors, got {trials}"
        )));
    }
    const BATCHES: usize = 100;
    let base = trials / BATCHES;
    let rem = trials % BATCHES;
    let mut batch_sd = [0.0f64; BATCHES];
    let mut batch_vcg = [0.0f64; BATCHES];
    let mut trial = 0usize;
    for b in 0..BATCHES {
        let size = base + usize::from(b < rem);
        for _ in 0..size {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial as u64);
            let market = sample_market(cfg, &mut rng)?;
            let mut priority: Vec<usize> = (0..cfg.agents).collect();
            priority.shuffle(&mut rng);
            let sd = run_sd(&market, &priority)?;
            let vcg = run_vcg(&market)?;
            debug_assert!(
                vcg.gross >= sd.rs - 1e-9,
                "efficient assignment below SD: {} < {}",
                vcg.gross,
                sd.rs
            );
            batch_sd[b] += sd.rs;
            batch_vcg[b] += vcg.rs;
            trial += 1;
        }
    }
    let total_sd: f64 = batch_sd.iter().sum();
    let total_vcg: f64 = batch_vcg.iter().sum();
    if !(total_vcg > 0.0) {
        return Err(Error::DomainViolation(format!(
            "VCG residual surplus mean {} is not positive; ratio undefined",
            total_vcg / trials as f64
        )));
    }
    let ratio = total_sd / total_vcg;
    let mut batch_ratios = [0.0f64; BATCHES];
    for b in 0..BATCHES {
        if !(batch_vcg[b] > 0.0) {
            return Err(Error::DomainViolation(
                "a batch has nonpositive VCG surplus; ratio standard error undefined".into(),
            ));
        }
        batch_ratios[b] = batch_sd[b] / batch_vcg[b];
    }
    let mean_r: f64 = batch_ratios.iter().sum::<f64>() / BATCHES as f64;
    let var: f64 = batch_ratios
        .iter()
        .map(|r| (r - mean_r) * (r - mean_r))
        .sum::<f64>()
        / (BATCHES as f64 - 1.0);
    let stderr = (var / BATCHES as f64).sqrt();
    Ok(SimResult {
        trials,
        mean_rs_sd: total_sd / trials as f64,
        mean_rs_vcg: total_vcg / trials as f64,
        ratio,
        stderr,
    })
}

/// Continuum counterpart of `mc_ratio`: the ratio of no-screening to
/// full-screening residual surplus for the reduced distribution.
pub fn continuum_ratio(g: Marginal, k: u32, m_bar: f64) -> Result<f64> {
    Ok(rs_sd(g, k, m_bar)? / rs_vcg(g, k, m_bar)?)
}
