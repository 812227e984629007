#![allow(dead_code)]

use cohabitat::hrl::{
    q_value, run_subroutine, update_from_trajectory, DecomposedQ, Environment, Hierarchy, LearnerConfig, NodeId, NodeKind,
    RunConfig, Table, TaskGraph, ROOT,
};
use cohabitat::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DONE: u8 = 3;
pub const A: NodeId = 1;
pub const B: NodeId = 2;

/// Three-state chain: `a` ends the episode with a state-dependent payoff,
/// `b` walks right (and is penalised in the last state). The optimal first
/// move depends on the discount.
pub struct Chain {
    graph: TaskGraph,
}

impl Chain {
    pub fn new() -> Self {
        let graph = TaskGraph::new(vec![
            ("root".into(), NodeKind::Composite, vec![A, B]),
            ("a".into(), NodeKind::Primitive, vec![]),
            ("b".into(), NodeKind::Primitive, vec![]),
        ])
        .unwrap();
        Chain { graph }
    }

    pub fn step(s: u8, a: NodeId) -> (u8, f64) {
        match (s, a) {
            (0, A) => (DONE, 1.0),
            (1, A) => (DONE, 0.0),
            (2, A) => (DONE, 3.0),
            (2, B) => (DONE, -1.0),
            (s, _) => (s + 1, 0.0),
        }
    }
}

impl Hierarchy for Chain {
    type State = u8;
    type Key = u8;
    fn graph(&self) -> &TaskGraph {
        &self.graph
    }
    fn key(&self, _: Table, _: NodeId, s: &u8) -> u8 {
        *s
    }
    fn is_terminated(&self, _: NodeId, s: &u8) -> bool {
        *s == DONE
    }
}

impl Environment for Chain {
    fn execute<R: Rng>(&mut self, p: NodeId, s: &u8, _: &mut R) -> Result<(u8, f64)> {
        Ok(Chain::step(*s, p))
    }
}

/// Brute-force value iteration over the chain.
pub fn value_iteration(gamma: f64) -> ([f64; 3], [NodeId; 3]) {
    let mut v = [0.0; 4];
    for _ in 0..1000 {
        for s in 0..3u8 {
            v[s as usize] = [A, B]
                .iter()
                .map(|&a| {
                    let (n, r) = Chain::step(s, a);
                    r + gamma * v[n as usize]
                })
                .fold(f64::MIN, f64::max);
        }
    }
    let mut policy = [A; 3];
    for s in 0..3u8 {
        let q = |a| {
            let (n, r) = Chain::step(s, a);
            r + gamma * v[n as usize]
        };
        policy[s as usize] = if q(B) > q(A) { B } else { A };
    }
    ([v[0], v[1], v[2]], policy)
}

pub fn train(gamma: f64, seed: u64, episodes: u32) -> (Chain, DecomposedQ<u8>) {
    let mut env = Chain::new();
    let mut q = DecomposedQ::new();
    let config = LearnerConfig { gamma, ..LearnerConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for ep in 0..episodes {
        let start = rng.gen_range(0..3u8);
        let run = RunConfig { epsilon: config.epsilon(ep).max(0.1), gamma, max_steps: 10 };
        let out = run_subroutine(&q, &mut env, ROOT, start, &run, &mut rng, 0).unwrap();
        update_from_trajectory(&env, &mut q, &out.trajectory, &config);
    }
    (env, q)
}

pub fn greedy_policy(env: &Chain, q: &DecomposedQ<u8>) -> [NodeId; 3] {
    let mut p = [A; 3];
    for s in 0..3u8 {
        let qa = q_value(env, q, ROOT, &s, A).unwrap();
        let qb = q_value(env, q, ROOT, &s, B).unwrap();
        p[s as usize] = if qb > qa { B } else { A };
    }
    p
}
