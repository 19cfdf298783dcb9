//! Exact sums over all strings of a finite-state weighted model.
//!
//! Every finite-order model in this crate (a base autoregressive LM, its
//! locally renormalized adaptation, or the unnormalized weights of a global
//! adaptor) is a set of context states. State `s` emits symbol `x` with
//! weight `w[s][x]`; a non-EOS symbol moves to `next[s][x]`, EOS stops.
//! Sums over the infinite string set then reduce to linear systems
//! `(I - A) u = b` where `A[s][s'] = sum of w[s][x]` over moves `s -> s'`.
//! The Neumann series behind those solves converges iff the spectral
//! radius of `A` is below one, which is checked separately from the solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lm::alphabet::Symbol;
use crate::numeric::ln0;

/// Per-state emission weights plus the context transition table.
#[derive(Debug, Clone)]
pub struct WeightedAutomaton {
    pub(crate) start: usize,
    pub(crate) eos: Symbol,
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) next: Vec<Vec<Option<usize>>>,
}

/// Result of an enumeration of all strings up to a length cutoff.
#[derive(Debug, Clone)]
pub struct Enumerated {
    /// `(string, log weight)` in lexicographic order.
    pub entries: Vec<(Vec<Symbol>, f64)>,
    /// Total weight of all prefixes of length `max_len + 1`.
    pub surviving_weight: f64,
    /// Surviving prefix weight per length `0..=max_len + 1`.
    pub surviving_by_len: Vec<f64>,
}

/// Totals of `W(y)`, `W(y) f(y)` and `W(y) f(y)^2` over all strings, for an
/// additive cost `f(y) = sum_t cost(s_t, y_t)` (the EOS step included).
#[derive(Debug, Clone, Copy)]
pub struct AdditiveTotals {
    pub total: f64,
    pub first: f64,
    pub second: f64,
}

impl AdditiveTotals {
    pub fn mean(&self) -> f64 {
        self.first / self.total
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.second / self.total - m * m).max(0.0)
    }
}

impl WeightedAutomaton {
    pub fn new(start: usize, eos: Symbol, weights: Vec<Vec<f64>>, next: Vec<Vec<Option<usize>>>) -> Self {
        WeightedAutomaton { start, eos, weights, next }
    }

    pub fn states(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self, state: usize) -> &[f64] {
        &self.weights[state]
    }

    pub fn next(&self, state: usize, symbol: Symbol) -> Option<usize> {
        self.next[state][symbol]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// States reachable from the start through positive-weight moves.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states()];
        let mut stack = vec![self.start];
        seen[self.start] = true;
        while let Some(s) = stack.pop() {
            for (x, &w) in self.weights[s].iter().enumerate() {
                if x == self.eos || w <= 0.0 {
                    continue;
                }
                if let Some(t) = self.next[s][x] {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        seen
    }

    /// Weight of a string, in log space. `-inf` when a step has zero weight
    /// or leaves the table.
    pub fn log_weight(&self, string: &[Symbol]) -> f64 {
        let mut s = self.start;
        let mut total = 0.0;
        for &x in string {
            if x >= self.weights[s].len() || x == self.eos {
                return f64::NEG_INFINITY;
            }
            let w = self.weights[s][x];
            if w <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += w.ln();
            match self.next[s][x] {
                Some(t) => s = t,
                None => return f64::NEG_INFINITY,
            }
        }
        total + ln0(self.weights[s][self.eos])
    }

    fn compact(&self) -> (Vec<usize>, Vec<Option<usize>>) {
        let reach = self.reachable();
        let mut order = Vec::new();
        let mut position = vec![None; self.states()];
        for (s, &r) in reach.iter().enumerate() {
            if r {
                position[s] = Some(order.len());
                order.push(s);
            }
        }
        (order, position)
    }

    /// Move matrix over reachable states, with weights raised to `power`.
    fn move_matrix(&self, order: &[usize], position: &[Option<usize>], power: f64) -> DMatrix<f64> {
        let n = order.len();
        let mut a = DMatrix::zeros(n, n);
        for (i, &s) in order.iter().enumerate() {
            for (x, &w) in self.weights[s].iter().enumerate() {
                if x == self.eos || w <= 0.0 {
                    continue;
                }
                if let Some(j) = self.next[s][x].and_then(|t| position[t]) {
                    a[(i, j)] += w.powf(power);
                }
            }
        }
        a
    }

    fn stop_vector(&self, order: &[usize], power: f64) -> DVector<f64> {
        DVector::from_iterator(
            order.len(),
            order.iter().map(|&s| {
                let w = self.weights[s][self.eos];
                if w > 0.0 {
                    w.powf(power)
                } else {
                    0.0
                }
            }),
        )
    }

    /// Whether the total weight is finite (spectral radius of the move
    /// matrix below one).
    pub fn is_convergent(&self) -> bool {
        let (order, position) = self.compact();
        spectral_radius_below_one(&self.move_matrix(&order, &position, 1.0))
    }

    /// Solve `(I - A) u = b` over reachable states after checking
    /// convergence. Returns `u` indexed like `order`.
    fn solve(
        &self,
        power: f64,
        rhs: &DVector<f64>,
        order: &[usize],
        position: &[Option<usize>],
    ) -> Option<DVector<f64>> {
        let a = self.move_matrix(order, position, power);
        if !spectral_radius_below_one(&a) {
            return None;
        }
        let n = order.len();
        let m = DMatrix::identity(n, n) - a;
        m.lu().solve(rhs)
    }

    /// Total weight `Z = sum_y W(y)`.
    pub fn total_weight(&self) -> Result<f64> {
        self.power_sum(1.0).ok_or_else(|| Error::NonTight("weight series over strings diverges".into()))
    }

    /// `sum_y W(y)^power`, or `None` when the series diverges.
    pub fn power_sum(&self, power: f64) -> Option<f64> {
        let (order, position) = self.compact();
        let e = self.stop_vector(&order, power);
        let u = self.solve(power, &e, &order, &position)?;
        let start = position[self.start].expect("start is reachable");
        Some(u[start].max(0.0))
    }

    /// Total weight of all completions from every state; zero for states
    /// unreachable from the start.
    pub fn completion_weights(&self) -> Result<Vec<f64>> {
        let (order, position) = self.compact();
        let e = self.stop_vector(&order, 1.0);
        let u = self
            .solve(1.0, &e, &order, &position)
            .ok_or_else(|| Error::NonTight("weight series over strings diverges".into()))?;
        Ok(position.iter().map(|p| p.map_or(0.0, |i| u[i].max(0.0))).collect())
    }

    /// Totals for an additive per-step cost. `cost` is only called on
    /// positive-weight steps.
    pub fn additive_totals<F>(&self, cost: F) -> Result<AdditiveTotals>
    where
        F: Fn(usize, Symbol) -> f64,
    {
        let (order, position) = self.compact();
        let n = order.len();
        let e = self.stop_vector(&order, 1.0);
        let z = self
            .solve(1.0, &e, &order, &position)
            .ok_or_else(|| Error::NonTight("weight series over strings diverges".into()))?;

        let mut b1 = DVector::zeros(n);
        for (i, &s) in order.iter().enumerate() {
            let mut acc = 0.0;
            for (x, &w) in self.weights[s].iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                let c = cost(s, x);
                if x == self.eos {
                    acc += w * c;
                } else if let Some(j) = self.next[s][x].and_then(|t| position[t]) {
                    acc += w * c * z[j];
                }
            }
            b1[i] = acc;
        }
        let f1 = self.solve(1.0, &b1, &order, &position).expect("convergence checked");

        let mut b2 = DVector::zeros(n);
        for (i, &s) in order.iter().enumerate() {
            let mut acc = 0.0;
            for (x, &w) in self.weights[s].iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                let c = cost(s, x);
                if x == self.eos {
                    acc += w * c * c;
                } else if let Some(j) = self.next[s][x].and_then(|t| position[t]) {
                    acc += w * (c * c * z[j] + 2.0 * c * f1[j]);
                }
            }
            b2[i] = acc;
        }
        let f2 = self.solve(1.0, &b2, &order, &position).expect("convergence checked");

        let st = position[self.start].expect("start is reachable");
        Ok(AdditiveTotals { total: z[st], first: f1[st], second: f2[st] })
    }

    /// Upper bound on the total weight still to come from any state,
    /// `max_s sum_{y} W_s(y)`, derived from matrix powers alone (no solve):
    /// if `||A^k|| = q < 1` then `||(I - A)^-1|| <= sum_{j<k} ||A^j|| / (1 - q)`.
    /// `None` when no power up to 64 certifies contraction.
    pub fn completion_bound(&self) -> Option<f64> {
        let (order, position) = self.compact();
        let a = self.move_matrix(&order, &position, 1.0);
        let e = self.stop_vector(&order, 1.0);
        let e_max = e.iter().copied().fold(0.0, f64::max);
        let n = order.len();
        let mut power = DMatrix::identity(n, n);
        let mut partial = 0.0;
        for _ in 0..64 {
            let norm = inf_norm(&power);
            if norm < 1.0 && partial > 0.0 {
                return Some(e_max * partial / (1.0 - norm));
            }
            partial += norm;
            power = &power * &a;
            if !partial.is_finite() {
                return None;
            }
        }
        None
    }

    /// Enumerate all strings of length `<= max_len` with positive weight.
    pub fn enumerate(&self, max_len: usize, max_entries: usize) -> Result<Enumerated> {
        let mut entries = Vec::new();
        let mut surviving_by_len = vec![0.0; max_len + 2];
        let mut prefix = Vec::new();
        self.dfs(self.start, 0.0, &mut prefix, max_len, max_entries, &mut entries, &mut surviving_by_len)?;
        Ok(Enumerated { entries, surviving_weight: surviving_by_len[max_len + 1], surviving_by_len })
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        s: usize,
        logw: f64,
        prefix: &mut Vec<Symbol>,
        max_len: usize,
        max_entries: usize,
        entries: &mut Vec<(Vec<Symbol>, f64)>,
        surviving: &mut [f64],
    ) -> Result<()> {
        surviving[prefix.len()] += logw.exp();
        let stop = self.weights[s][self.eos];
        if stop > 0.0 {
            if entries.len() >= max_entries {
                return Err(Error::EnumerationTooLarge(max_entries));
            }
            entries.push((prefix.clone(), logw + stop.ln()));
        }
        for (x, &w) in self.weights[s].iter().enumerate() {
            if x == self.eos || w <= 0.0 {
                continue;
            }
            if prefix.len() == max_len {
                surviving[max_len + 1] += (logw + w.ln()).exp();
                continue;
            }
            let t = match self.next[s][x] {
                Some(t) => t,
                None => continue,
            };
            prefix.push(x);
            self.dfs(t, logw + w.ln(), prefix, max_len, max_entries, entries, surviving)?;
            prefix.pop();
        }
        Ok(())
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Certify `rho(A) < 1` for a non-negative matrix by repeated squaring:
/// `||A^(2^j)|| < 1` for some `j` is sufficient, and when `rho >= 1` every
/// power keeps norm at least one.
pub fn spectral_radius_below_one(a: &DMatrix<f64>) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    let mut m = a.clone();
    for _ in 0..64 {
        let norm = inf_norm(&m);
        if !norm.is_finite() || norm > 1e250 {
            return false;
        }
        if norm < 1.0 {
            return true;
        }
        m = &m * &m;
    }
    false
}
