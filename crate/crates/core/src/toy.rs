//! Small tabular MDPs driven by the same planner as the SFC environment.
//! Used to verify the transfer bounds empirically: exact distances and
//! optimal Q-values are computable by enumeration here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::search::{ActionSig, SearchEnv, StateKey};

/// Tabular MDP with mean rewards `reward[s][a]`, kernel
/// `transition[s][a][s']` and optional uniform reward noise.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub reward: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub gamma: f64,
    /// Half-width of uniform noise added to sampled rewards.
    pub reward_noise: f64,
    pub absorbing: Vec<bool>,
}

impl TabularMdp {
    pub fn n_states(&self) -> usize {
        self.reward.len()
    }

    pub fn n_actions(&self) -> usize {
        self.reward[0].len()
    }

    /// Random MDP with rewards in [-1, 1] and dense random kernels.
    pub fn random(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reward = (0..n_states)
            .map(|_| (0..n_actions).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let transition = (0..n_states)
            .map(|_| {
                (0..n_actions)
                    .map(|_| {
                        let raw: Vec<f64> =
                            (0..n_states).map(|_| rng.random_range(0.05..1.0)).collect();
                        let total: f64 = raw.iter().sum();
                        raw.into_iter().map(|p| p / total).collect()
                    })
                    .collect()
            })
            .collect();
        TabularMdp {
            reward,
            transition,
            gamma,
            reward_noise: 0.1,
            absorbing: vec![false; n_states],
        }
    }

    /// A nearby MDP: rewards shifted by up to `eps` (clamped to [-1, 1]) and
    /// kernels remixed by up to `eps` of probability mass.
    pub fn perturbed(&self, eps: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for row in &mut out.reward {
            for r in row {
                *r = (*r + rng.random_range(-eps..=eps)).clamp(-1.0, 1.0);
            }
        }
        for per_state in &mut out.transition {
            for dist in per_state {
                let n = dist.len();
                for p in dist.iter_mut() {
                    *p += rng.random_range(0.0..eps) / n as f64;
                }
                let total: f64 = dist.iter().sum();
                for p in dist.iter_mut() {
                    *p /= total;
                }
            }
        }
        out
    }

    /// Exact MDP distance under the uniform reference measure over
    /// (s, a, s') triples: E_U[|R - R'| + kappa * |P - P'|].
    pub fn exact_distance(&self, other: &TabularMdp, kappa: f64) -> f64 {
        let s_n = self.n_states();
        let a_n = self.n_actions();
        assert_eq!(s_n, other.n_states());
        assert_eq!(a_n, other.n_actions());
        let mut total = 0.0;
        for s in 0..s_n {
            for a in 0..a_n {
                for s2 in 0..s_n {
                    let dr = (self.reward[s][a] - other.reward[s][a]).abs();
                    let dp = (self.transition[s][a][s2] - other.transition[s][a][s2]).abs();
                    total += dr + kappa * dp;
                }
            }
        }
        total / (s_n * a_n * s_n) as f64
    }

    /// Optimal Q-values by value iteration.
    pub fn optimal_q(&self, iterations: usize) -> Vec<Vec<f64>> {
        let s_n = self.n_states();
        let a_n = self.n_actions();
        let mut v = vec![0.0; s_n];
        let mut q = vec![vec![0.0; a_n]; s_n];
        for _ in 0..iterations {
            for s in 0..s_n {
                for a in 0..a_n {
                    let future: f64 = if self.absorbing[s] {
                        0.0
                    } else {
                        (0..s_n).map(|s2| self.transition[s][a][s2] * v[s2]).sum()
                    };
                    q[s][a] = self.reward[s][a] + self.gamma * future;
                }
            }
            for s in 0..s_n {
                v[s] = if self.absorbing[s] {
                    0.0
                } else {
                    q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
                };
            }
        }
        q
    }

    fn sample_next(&self, s: usize, a: usize, rng: &mut ChaCha8Rng) -> usize {
        let dist = &self.transition[s][a];
        let draw: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        for (s2, p) in dist.iter().enumerate() {
            acc += p;
            if draw < acc {
                return s2;
            }
        }
        dist.len() - 1
    }
}

/// Two-armed bandit: one decision state, two arms with the given mean
/// rewards, then an absorbing state.
pub fn two_armed_bandit(mean_a: f64, mean_b: f64, noise: f64) -> TabularMdp {
    TabularMdp {
        reward: vec![vec![mean_a, mean_b], vec![0.0, 0.0]],
        transition: vec![
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        ],
        gamma: 0.5,
        reward_noise: noise,
        absorbing: vec![false, true],
    }
}

impl SearchEnv for TabularMdp {
    type State = usize;
    type Action = usize;

    fn legal_actions(&self, s: &usize) -> Vec<usize> {
        if self.absorbing[*s] {
            Vec::new()
        } else {
            (0..self.n_actions()).collect()
        }
    }

    fn action_sig(&self, _s: &usize, a: &usize) -> ActionSig {
        ActionSig(format!("a{a}"))
    }

    fn apply(&self, s: &usize, a: &usize, rng: &mut ChaCha8Rng) -> (usize, f64) {
        let next = self.sample_next(*s, *a, rng);
        let mut reward = self.reward[*s][*a];
        if self.reward_noise > 0.0 {
            reward += rng.random_range(-self.reward_noise..=self.reward_noise);
        }
        (next, reward)
    }

    fn state_key(&self, s: &usize) -> StateKey {
        StateKey(format!("s{s}"))
    }

    fn is_terminal(&self, s: &usize) -> bool {
        self.absorbing[*s]
    }

    fn rollout_action(&self, _s: &usize, rng: &mut ChaCha8Rng) -> usize {
        rng.random_range(0..self.n_actions())
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn resample_edges(&self) -> bool {
        true
    }
}
