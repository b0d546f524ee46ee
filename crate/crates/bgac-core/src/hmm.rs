//! Discrete-emission hidden Markov models: scaled forward likelihood and
//! multi-sequence Baum-Welch training over left-to-right or ergodic
//! topologies.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    LeftToRight,
    Ergodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub n_states: usize,
    pub n_symbols: usize,
    pub topology: Topology,
    /// Initial distribution, length `n_states`.
    pub initial: Vec<f64>,
    /// Row-stochastic transition matrix, row-major `n_states × n_states`.
    pub transitions: Vec<f64>,
    /// Row-stochastic emission matrix, row-major `n_states × n_symbols`.
    pub emissions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HmmError {
    SymbolOutOfRange { symbol: u16, n_symbols: usize },
    EmptySequence,
    SequenceTooShort { len: usize, n_states: usize },
    NoSequences,
}

impl core::fmt::Display for HmmError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HmmError::SymbolOutOfRange { symbol, n_symbols } => {
                write!(f, "symbol {symbol} outside alphabet of {n_symbols}")
            }
            HmmError::EmptySequence => write!(f, "empty observation sequence"),
            HmmError::SequenceTooShort { len, n_states } => {
                write!(f, "sequence of length {len} shorter than {n_states} states")
            }
            HmmError::NoSequences => write!(f, "no training sequences"),
        }
    }
}

impl HmmModel {
    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.transitions[i * self.n_states + j]
    }

    #[inline]
    pub fn b(&self, i: usize, sym: usize) -> f64 {
        self.emissions[i * self.n_symbols + sym]
    }

    /// Deterministic seeded initial model: left-to-right rows get
    /// self-transition 0.6 / advance 0.4 (the last state absorbs),
    /// ergodic rows are uniform; emissions are uniform with ±1% jitter
    /// to break symmetry, renormalized.
    pub fn seeded_init(n_states: usize, n_symbols: usize, topology: Topology, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut transitions = vec![0.0; n_states * n_states];
        let mut initial = vec![0.0; n_states];
        match topology {
            Topology::LeftToRight => {
                initial[0] = 1.0;
                for i in 0..n_states {
                    if i + 1 < n_states {
                        transitions[i * n_states + i] = 0.6;
                        transitions[i * n_states + i + 1] = 0.4;
                    } else {
                        transitions[i * n_states + i] = 1.0;
                    }
                }
            }
            Topology::Ergodic => {
                let u = 1.0 / n_states as f64;
                initial.fill(u);
                transitions.fill(u);
            }
        }
        let mut emissions = vec![0.0; n_states * n_symbols];
        let u = 1.0 / n_symbols as f64;
        for row in emissions.chunks_mut(n_symbols) {
            let mut sum = 0.0;
            for p in row.iter_mut() {
                *p = u * (1.0 + 0.01 * (2.0 * rng.next_f64() - 1.0));
                sum += *p;
            }
            for p in row.iter_mut() {
                *p /= sum;
            }
        }
        HmmModel {
            n_states,
            n_symbols,
            topology,
            initial,
            transitions,
            emissions,
        }
    }

    /// Floor every emission probability at `floor`, then renormalize each
    /// row. Keeps spotting robust against symbols unseen in training.
    pub fn floor_emissions(&mut self, floor: f64) {
        for row in self.emissions.chunks_mut(self.n_symbols) {
            let mut sum = 0.0;
            for p in row.iter_mut() {
                if *p < floor {
                    *p = floor;
                }
                sum += *p;
            }
            for p in row.iter_mut() {
                *p /= sum;
            }
        }
    }

    /// Check the stochastic invariants within `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), String> {
        let sum: f64 = self.initial.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(alloc::format!("initial sums to {sum}"));
        }
        for (i, row) in self.transitions.chunks(self.n_states).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(alloc::format!("transition row {i} sums to {s}"));
            }
        }
        for (i, row) in self.emissions.chunks(self.n_symbols).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(alloc::format!("emission row {i} sums to {s}"));
            }
        }
        if self.topology == Topology::LeftToRight {
            for i in 0..self.n_states {
                for j in 0..self.n_states {
                    if (j < i || j > i + 1) && self.a(i, j) != 0.0 {
                        return Err(alloc::format!("left-to-right A[{i}][{j}] nonzero"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// log P(obs | model) by the scaled forward recursion.
pub fn forward_log_likelihood(model: &HmmModel, obs: &[u16]) -> Result<f64, HmmError> {
    if obs.is_empty() {
        return Err(HmmError::EmptySequence);
    }
    for &s in obs {
        if s as usize >= model.n_symbols {
            return Err(HmmError::SymbolOutOfRange {
                symbol: s,
                n_symbols: model.n_symbols,
            });
        }
    }
    let n = model.n_states;
    let mut alpha = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    let mut log_l = 0.0f64;

    for i in 0..n {
        alpha[i] = model.initial[i] * model.b(i, obs[0] as usize);
    }
    log_l += scale(&mut alpha)?;

    for &sym in &obs[1..] {
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += alpha[i] * model.a(i, j);
            }
            next[j] = acc * model.b(j, sym as usize);
        }
        core::mem::swap(&mut alpha, &mut next);
        log_l += scale(&mut alpha)?;
    }
    Ok(log_l)
}

fn scale(alpha: &mut [f64]) -> Result<f64, HmmError> {
    let c: f64 = alpha.iter().sum();
    if c <= 0.0 {
        // Zero-probability observation under this model.
        return Ok(f64::NEG_INFINITY);
    }
    for a in alpha.iter_mut() {
        *a /= c;
    }
    Ok(libm::log(c))
}

pub struct TrainOptions {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    /// Applied once after the final iteration.
    pub emission_floor: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_iterations: 200,
            rel_tolerance: 1e-6,
            emission_floor: 1e-5,
            seed: 0,
        }
    }
}

pub struct TrainResult {
    pub model: HmmModel,
    /// Total log-likelihood after each iteration, pre-flooring.
    pub log_likelihoods: Vec<f64>,
}

/// Multi-sequence Baum-Welch. Topology zeros are preserved; training is a
/// pure function of sequences, options, and seed.
pub fn baum_welch_train(
    sequences: &[&[u16]],
    n_states: usize,
    n_symbols: usize,
    topology: Topology,
    opts: &TrainOptions,
) -> Result<TrainResult, HmmError> {
    if sequences.is_empty() {
        return Err(HmmError::NoSequences);
    }
    for seq in sequences {
        if seq.len() < n_states {
            return Err(HmmError::SequenceTooShort {
                len: seq.len(),
                n_states,
            });
        }
        for &s in *seq {
            if s as usize >= n_symbols {
                return Err(HmmError::SymbolOutOfRange {
                    symbol: s,
                    n_symbols,
                });
            }
        }
    }

    let mut model = HmmModel::seeded_init(n_states, n_symbols, topology, opts.seed);
    let n = n_states;
    let mut log_likelihoods = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;

    for _iter in 0..opts.max_iterations {
        let mut init_acc = vec![0.0f64; n];
        let mut trans_num = vec![0.0f64; n * n];
        let mut trans_den = vec![0.0f64; n];
        let mut emit_num = vec![0.0f64; n * n_symbols];
        let mut emit_den = vec![0.0f64; n];
        let mut total_ll = 0.0f64;

        for seq in sequences {
            let t_len = seq.len();
            // Scaled forward.
            let mut alpha = vec![0.0f64; t_len * n];
            let mut scales = vec![0.0f64; t_len];
            for i in 0..n {
                alpha[i] = model.initial[i] * model.b(i, seq[0] as usize);
            }
            scales[0] = normalize_row(&mut alpha[0..n]);
            for t in 1..t_len {
                let (prev, cur) = alpha.split_at_mut(t * n);
                let prev = &prev[(t - 1) * n..];
                let cur = &mut cur[..n];
                for j in 0..n {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += prev[i] * model.a(i, j);
                    }
                    cur[j] = acc * model.b(j, seq[t] as usize);
                }
                scales[t] = normalize_row(cur);
            }
            let seq_ll: f64 = scales.iter().map(|&c| libm::log(c)).sum();
            total_ll += seq_ll;

            // Scaled backward with the same per-frame scales.
            let mut beta = vec![0.0f64; t_len * n];
            for i in 0..n {
                beta[(t_len - 1) * n + i] = 1.0 / scales[t_len - 1];
            }
            for t in (0..t_len - 1).rev() {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += model.a(i, j)
                            * model.b(j, seq[t + 1] as usize)
                            * beta[(t + 1) * n + j];
                    }
                    beta[t * n + i] = acc / scales[t];
                }
            }

            // Accumulate sufficient statistics.
            for t in 0..t_len {
                // gamma_t(i) ∝ alpha_t(i) * beta_t(i); with this scaling
                // the product times scales[t] is already normalized.
                for i in 0..n {
                    let gamma = alpha[t * n + i] * beta[t * n + i] * scales[t];
                    if t == 0 {
                        init_acc[i] += gamma;
                    }
                    emit_num[i * n_symbols + seq[t] as usize] += gamma;
                    emit_den[i] += gamma;
                    if t + 1 < t_len {
                        trans_den[i] += gamma;
                    }
                }
                if t + 1 < t_len {
                    for i in 0..n {
                        for j in 0..n {
                            let a_ij = model.a(i, j);
                            if a_ij == 0.0 {
                                continue;
                            }
                            let xi = alpha[t * n + i]
                                * a_ij
                                * model.b(j, seq[t + 1] as usize)
                                * beta[(t + 1) * n + j];
                            trans_num[i * n + j] += xi;
                        }
                    }
                }
            }
        }

        log_likelihoods.push(total_ll);

        // Re-estimate.
        let n_seq = sequences.len() as f64;
        match topology {
            Topology::LeftToRight => {
                // The topology pins the initial distribution.
            }
            Topology::Ergodic => {
                for i in 0..n {
                    model.initial[i] = init_acc[i] / n_seq;
                }
            }
        }
        for i in 0..n {
            if trans_den[i] > 0.0 {
                for j in 0..n {
                    model.transitions[i * n + j] = trans_num[i * n + j] / trans_den[i];
                }
                // Guard tiny numerical drift off row-stochasticity.
                let s: f64 = model.transitions[i * n..(i + 1) * n].iter().sum();
                if s > 0.0 {
                    for j in 0..n {
                        model.transitions[i * n + j] /= s;
                    }
                }
            }
            if emit_den[i] > 0.0 {
                for k in 0..n_symbols {
                    model.emissions[i * n_symbols + k] = emit_num[i * n_symbols + k] / emit_den[i];
                }
            }
        }

        if prev_ll.is_finite() {
            let rel = (total_ll - prev_ll).abs() / (1.0 + prev_ll.abs());
            if rel < opts.rel_tolerance {
                break;
            }
        }
        prev_ll = total_ll;
    }

    model.floor_emissions(opts.emission_floor);
    Ok(TrainResult {
        model,
        log_likelihoods,
    })
}

fn normalize_row(row: &mut [f64]) -> f64 {
    let s: f64 = row.iter().sum();
    if s <= 0.0 {
        // Degenerate: spread uniformly to keep the recursion alive.
        let u = 1.0 / row.len() as f64;
        for v in row.iter_mut() {
            *v = u;
        }
        return f64::MIN_POSITIVE;
    }
    for v in row.iter_mut() {
        *v /= s;
    }
    s
}
