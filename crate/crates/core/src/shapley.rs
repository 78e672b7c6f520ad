//! Exact and permutation-sampled Shapley values over source coalitions.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::proxy::{CacheStats, ProxyProblem};

/// Largest player count accepted by [`shapley_exact`].
pub const MAX_EXACT_PLAYERS: usize = 12;
pub const DEFAULT_PERMUTATIONS: usize = 64;

/// A cooperative game over players `0..n_players()`.
pub trait CoalitionValue {
    fn n_players(&self) -> usize;
    /// Value of the coalition; `members` is sorted and duplicate-free.
    fn value(&self, members: &[usize]) -> Result<f64>;
}

impl CoalitionValue for ProxyProblem {
    fn n_players(&self) -> usize {
        self.n_sources()
    }

    fn value(&self, members: &[usize]) -> Result<f64> {
        Ok(self.value_of_subset(members)?.value)
    }
}

/// A game defined by a closure.
pub struct FnGame<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[usize]) -> f64> FnGame<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnGame { n, f }
    }
}

impl<F: Fn(&[usize]) -> f64> CoalitionValue for FnGame<F> {
    fn n_players(&self) -> usize {
        self.n
    }

    fn value(&self, members: &[usize]) -> Result<f64> {
        Ok((self.f)(members))
    }
}

/// Every coalition value multiplied by a constant, e.g. the proxy-to-target
/// scaling factor.
pub struct Scaled<'a, G: ?Sized> {
    pub inner: &'a G,
    pub factor: f64,
}

impl<G: CoalitionValue + ?Sized> CoalitionValue for Scaled<'_, G> {
    fn n_players(&self) -> usize {
        self.inner.n_players()
    }

    fn value(&self, members: &[usize]) -> Result<f64> {
        Ok(self.factor * self.inner.value(members)?)
    }
}

fn members_of(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// Exact Shapley values by enumerating all `2ⁿ` coalitions.
pub fn shapley_exact<G: CoalitionValue + ?Sized>(game: &G) -> Result<Vec<f64>> {
    let n = game.n_players();
    if n > MAX_EXACT_PLAYERS {
        return Err(Error::invalid(format!(
            "exact Shapley supports at most {MAX_EXACT_PLAYERS} players, got {n}"
        )));
    }
    let values = (0..1usize << n)
        .map(|mask| game.value(&members_of(mask, n)))
        .collect::<Result<Vec<f64>>>()?;
    let mut fact = vec![1.0f64; n + 1];
    for k in 1..=n {
        fact[k] = fact[k - 1] * k as f64;
    }
    let mut phi = vec![0.0; n];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        for mask in 0..1usize << n {
            if mask & (1 << i) != 0 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let weight = fact[s] * fact[n - s - 1] / fact[n];
            *phi_i += weight * (values[mask | (1 << i)] - values[mask]);
        }
    }
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapleyEstimate {
    pub phi: Vec<f64>,
    pub permutations_used: usize,
    /// One marginal contribution per permutation for every player.
    pub marginal_samples: Vec<Vec<f64>>,
    pub cache_stats: CacheStats,
    pub empty_value: f64,
    pub full_value: f64,
    /// `Σᵢ δᵢ` of each sampled permutation.
    pub permutation_totals: Vec<f64>,
}

impl ShapleyEstimate {
    /// Sample standard error of each player's estimate.
    pub fn standard_errors(&self) -> Vec<f64> {
        self.marginal_samples
            .iter()
            .zip(&self.phi)
            .map(|(s, mean)| {
                if s.len() < 2 {
                    return f64::NAN;
                }
                let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
                (var / s.len() as f64).sqrt()
            })
            .collect()
    }
}

struct CachedGame<'a, G: ?Sized> {
    game: &'a G,
    cache: HashMap<Vec<usize>, f64>,
    stats: CacheStats,
}

impl<G: CoalitionValue + ?Sized> CachedGame<'_, G> {
    fn value(&mut self, members: &[usize]) -> Result<f64> {
        if let Some(v) = self.cache.get(members) {
            self.stats.hits += 1;
            return Ok(*v);
        }
        self.stats.evaluations += 1;
        let v = self.game.value(members)?;
        self.cache.insert(members.to_vec(), v);
        Ok(v)
    }
}

/// Permutation-sampling estimate from `permutations` seeded shuffles. Each
/// permutation yields one marginal contribution for every player.
pub fn shapley_monte_carlo<G: CoalitionValue + ?Sized>(
    game: &G,
    permutations: usize,
    seed: u64,
) -> Result<ShapleyEstimate> {
    if permutations == 0 {
        return Err(Error::invalid("need at least one permutation"));
    }
    let n = game.n_players();
    let mut cached = CachedGame {
        game,
        cache: HashMap::new(),
        stats: CacheStats::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![Vec::with_capacity(permutations); n];
    let mut totals = Vec::with_capacity(permutations);
    let empty_value = cached.value(&[])?;
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..permutations {
        order.shuffle(&mut rng);
        let mut coalition: Vec<usize> = Vec::with_capacity(n);
        let mut prev = empty_value;
        let mut total = 0.0;
        for &player in &order {
            let pos = coalition.binary_search(&player).unwrap_err();
            coalition.insert(pos, player);
            let cur = cached.value(&coalition)?;
            samples[player].push(cur - prev);
            total += cur - prev;
            prev = cur;
        }
        totals.push(total);
    }
    let full_value = cached.value(&(0..n).collect::<Vec<_>>())?;
    let phi = samples
        .iter()
        .map(|s| s.iter().sum::<f64>() / s.len() as f64)
        .collect();
    Ok(ShapleyEstimate {
        phi,
        permutations_used: permutations,
        marginal_samples: samples,
        cache_stats: cached.stats,
        empty_value,
        full_value,
        permutation_totals: totals,
    })
}
