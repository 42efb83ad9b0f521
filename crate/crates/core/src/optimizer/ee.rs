//! Energy-efficient power allocation across users sharing a power budget.
//!
//! Maximises `Σ B_i log2(1 + g_i p_i / (N0_i B_i)) / (Σ p_i + P_c)` subject
//! to `Σ p_i ≤ P_max`, `p_i ≥ 0`. The ratio is quasi-concave, so the
//! Dinkelbach iteration converges to the global optimum; each subtractive
//! subproblem `max R(p) − λ Σ p` is solved exactly by water-filling.

use std::f64::consts::LN_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::OptimizeError;

pub const DEFAULT_MAX_ITERATIONS: usize = 100;
/// Slack allowed on the power budget.
pub const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EeUser {
    pub bandwidth_hz: f64,
    pub channel_gain: f64,
    pub noise_psd: f64,
}

impl EeUser {
    /// Noise power referred to the transmitter, `N0 B / g`.
    fn noise_floor(&self) -> f64 {
        self.noise_psd * self.bandwidth_hz / self.channel_gain
    }

    pub fn rate(&self, power: f64) -> f64 {
        self.bandwidth_hz * (power / self.noise_floor()).ln_1p() / LN_2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EeProblem {
    pub users: Vec<EeUser>,
    pub power_budget_w: f64,
    /// Static power drawn regardless of the allocation. Zero reproduces the
    /// plain sum-rate over sum-power ratio.
    #[serde(default)]
    pub circuit_power_w: f64,
}

impl EeProblem {
    /// Users sharing one noise PSD and no circuit power.
    pub fn new(bandwidths: &[f64], gains: &[f64], noise_psd: f64, power_budget_w: f64) -> Self {
        EeProblem {
            users: bandwidths
                .iter()
                .zip(gains)
                .map(|(&bandwidth_hz, &channel_gain)| EeUser {
                    bandwidth_hz,
                    channel_gain,
                    noise_psd,
                })
                .collect(),
            power_budget_w,
            circuit_power_w: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if self.users.is_empty() {
            return Err(OptimizeError::InvalidProblem("no users".into()));
        }
        for (i, u) in self.users.iter().enumerate() {
            if !(positive(u.bandwidth_hz) && positive(u.channel_gain) && positive(u.noise_psd)) {
                return Err(OptimizeError::InvalidProblem(format!(
                    "user {i}: bandwidth, gain and noise PSD must be positive"
                )));
            }
        }
        if !positive(self.power_budget_w) {
            return Err(OptimizeError::InvalidProblem("power budget must be positive".into()));
        }
        if !(self.circuit_power_w.is_finite() && self.circuit_power_w >= 0.0) {
            return Err(OptimizeError::InvalidProblem("circuit power must be non-negative".into()));
        }
        Ok(())
    }

    pub fn rate(&self, powers: &[f64]) -> f64 {
        self.users.iter().zip(powers).map(|(u, &p)| u.rate(p)).sum()
    }

    pub fn consumed(&self, powers: &[f64]) -> f64 {
        powers.iter().sum::<f64>() + self.circuit_power_w
    }

    /// Rate over consumed power; zero when nothing is consumed.
    pub fn energy_efficiency(&self, powers: &[f64]) -> f64 {
        let d = self.consumed(powers);
        if d > 0.0 {
            self.rate(powers) / d
        } else {
            0.0
        }
    }

    pub fn allocation(&self, powers: Vec<f64>) -> Allocation {
        Allocation {
            rate_bps: self.rate(&powers),
            total_power_w: powers.iter().sum(),
            energy_efficiency: self.energy_efficiency(&powers),
            powers,
        }
    }

    pub fn equal_split(&self) -> Allocation {
        let n = self.users.len() as f64;
        self.allocation(vec![self.power_budget_w / n; self.users.len()])
    }

    /// Exact maximiser of `R(p) − λ Σ p` over the budget simplex.
    pub fn water_fill(&self, lambda: f64) -> Vec<f64> {
        let floors: Vec<f64> = self.users.iter().map(EeUser::noise_floor).collect();
        let level_powers = |level: f64| -> Vec<f64> {
            self.users
                .iter()
                .zip(&floors)
                .map(|(u, a)| (u.bandwidth_hz * level - a).max(0.0))
                .collect()
        };
        if lambda > 0.0 {
            let free = level_powers(1.0 / (lambda * LN_2));
            if free.iter().sum::<f64>() <= self.power_budget_w {
                return free;
            }
        }
        // budget binds: find the water level with Σ B_i (w − a_i/B_i)^+ = P_max
        let mut order: Vec<usize> = (0..self.users.len()).collect();
        order.sort_by(|&i, &j| {
            let bi = floors[i] / self.users[i].bandwidth_hz;
            let bj = floors[j] / self.users[j].bandwidth_hz;
            bi.total_cmp(&bj)
        });
        let (mut sum_b, mut sum_a) = (0.0, 0.0);
        let mut level = 0.0;
        for (k, &i) in order.iter().enumerate() {
            sum_b += self.users[i].bandwidth_hz;
            sum_a += floors[i];
            level = (self.power_budget_w + sum_a) / sum_b;
            let next = order
                .get(k + 1)
                .map(|&j| floors[j] / self.users[j].bandwidth_hz);
            if next.is_none_or(|b| level <= b) {
                break;
            }
        }
        let mut p = level_powers(level);
        // rounding can leave the sum a hair over budget
        let total: f64 = p.iter().sum();
        if total > self.power_budget_w {
            let scale = self.power_budget_w / total;
            p.iter_mut().for_each(|x| *x *= scale);
        }
        p
    }

    pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<EeProblem>, OptimizeError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| OptimizeError::InvalidProblem(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| OptimizeError::InvalidProblem(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub powers: Vec<f64>,
    pub rate_bps: f64,
    pub total_power_w: f64,
    /// bit/J
    pub energy_efficiency: f64,
}

/// Solver output with the ratio sequence `λ_0 ≤ λ_1 ≤ …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachRun {
    pub allocation: Allocation,
    pub lambdas: Vec<f64>,
    pub iterations: usize,
}

pub fn solve_ee(problem: &EeProblem, tol: f64) -> Result<Allocation, OptimizeError> {
    solve_ee_traced(problem, tol, DEFAULT_MAX_ITERATIONS).map(|r| r.allocation)
}

/// Dinkelbach iteration from the equal split. Stops once the subproblem
/// value `F(λ) = R − λ D` is below `tol · max(1, R)` and, relative to the
/// achieved ratio, below `tol · λ D`.
pub fn solve_ee_traced(
    problem: &EeProblem,
    tol: f64,
    max_iterations: usize,
) -> Result<DinkelbachRun, OptimizeError> {
    problem.validate()?;
    if !(tol > 0.0) {
        return Err(OptimizeError::InvalidProblem("tolerance must be positive".into()));
    }
    let mut powers = problem.equal_split().powers;
    let mut lambda = problem.energy_efficiency(&powers);
    let mut lambdas = vec![lambda];
    for it in 1..=max_iterations {
        let candidate = problem.water_fill(lambda);
        let rate = problem.rate(&candidate);
        let consumed = problem.consumed(&candidate);
        let gap = rate - lambda * consumed;
        if consumed <= 0.0 {
            // only reachable with no circuit power once λ hits the
            // small-power limit; the current iterate is the best ratio
            return Ok(finish(problem, powers, lambdas, it));
        }
        let next = rate / consumed;
        if next >= lambda {
            powers = candidate;
            lambda = next;
        }
        lambdas.push(lambda);
        if gap <= tol * rate.max(1.0) && gap <= tol * lambda * consumed {
            return Ok(finish(problem, powers, lambdas, it));
        }
    }
    Err(OptimizeError::NonConvergence {
        iterations: max_iterations,
        last: problem.allocation(powers),
    })
}

fn finish(problem: &EeProblem, powers: Vec<f64>, lambdas: Vec<f64>, iterations: usize) -> DinkelbachRun {
    DinkelbachRun {
        allocation: problem.allocation(powers),
        lambdas,
        iterations,
    }
}

/// Exhaustive search over the grid `{0, s, 2s, …}^n ∩ {Σ p ≤ P_max}` for up
/// to three users. Among equal ratios the lexicographically smallest power
/// vector wins.
pub fn brute_force_ee(problem: &EeProblem, grid_step: f64) -> Result<Allocation, OptimizeError> {
    problem.validate()?;
    let n = problem.users.len();
    if n > 3 {
        return Err(OptimizeError::TooManyUsers(n));
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(OptimizeError::InvalidProblem("grid step must be positive".into()));
    }
    let levels = (problem.power_budget_w / grid_step + 1e-9).floor() as usize;
    let rates: Vec<Vec<f64>> = problem
        .users
        .iter()
        .map(|u| (0..=levels).map(|k| u.rate(k as f64 * grid_step)).collect())
        .collect();
    let pc = problem.circuit_power_w;
    let ratio = |rate: f64, units: usize| {
        let d = units as f64 * grid_step + pc;
        if d > 0.0 {
            rate / d
        } else {
            0.0
        }
    };
    let mut best = (f64::NEG_INFINITY, [0usize; 3]);
    let mut consider = |ee: f64, idx: [usize; 3]| {
        if ee > best.0 {
            best = (ee, idx);
        }
    };
    match n {
        1 => {
            for a in 0..=levels {
                consider(ratio(rates[0][a], a), [a, 0, 0]);
            }
        }
        2 => {
            for a in 0..=levels {
                for b in 0..=levels - a {
                    consider(ratio(rates[0][a] + rates[1][b], a + b), [a, b, 0]);
                }
            }
        }
        _ => {
            for a in 0..=levels {
                for b in 0..=levels - a {
                    let partial = rates[0][a] + rates[1][b];
                    for c in 0..=levels - a - b {
                        consider(ratio(partial + rates[2][c], a + b + c), [a, b, c]);
                    }
                }
            }
        }
    }
    let powers = best.1[..n].iter().map(|&k| k as f64 * grid_step).collect();
    Ok(problem.allocation(powers))
}
