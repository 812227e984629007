mod common;

use cohabitat::hrl::{q_value, update_from_trajectory, DecomposedQ, LearnerConfig, Transition, ROOT};
use common::{greedy_policy, train, value_iteration, Chain, A, B, DONE};
use proptest::prelude::*;

#[test]
fn oracle_policies_differ_by_discount() {
    assert_eq!(value_iteration(0.9).1, [B, B, A]);
    assert_eq!(value_iteration(0.5).1, [A, B, A]);
    let (v, _) = value_iteration(0.9);
    assert!((v[0] - 2.43).abs() < 1e-9 && (v[1] - 2.7).abs() < 1e-9 && (v[2] - 3.0).abs() < 1e-9);
}

#[test]
fn degenerate_hierarchy_matches_value_iteration() {
    for gamma in [0.9, 0.5] {
        let (v_star, pi_star) = value_iteration(gamma);
        for seed in 0..30 {
            let (env, q) = train(gamma, seed, 5000);
            assert_eq!(greedy_policy(&env, &q), pi_star, "gamma {gamma} seed {seed}");
            for s in 0..3u8 {
                let v = q_value(&env, &q, ROOT, &s, pi_star[s as usize]).unwrap();
                assert!((v - v_star[s as usize]).abs() < 0.05, "gamma {gamma} seed {seed} state {s}: {v}");
            }
        }
    }
}

fn transition() -> impl Strategy<Value = (u8, bool)> {
    (0u8..3, any::<bool>())
}

proptest! {
    /// With one level, Q_r + Q_c follows exactly the flat Q-learning update.
    #[test]
    fn flat_q_learning_equivalence(steps in prop::collection::vec(prop::collection::vec(transition(), 1..6), 1..20), alpha in 0.05f64..1.0) {
        let env = Chain::new();
        let config = LearnerConfig { alpha, ..LearnerConfig::default() };
        let mut q = DecomposedQ::new();
        let mut flat = [[0.0f64; 3]; 4];
        for episode in steps {
            let mut traj = Vec::new();
            for (s, b) in episode {
                let a = if b { B } else { A };
                let (n, r) = Chain::step(s, a);
                traj.push(Transition { node: ROOT, state: s, action: a, reward: r, duration: 1, next_state: n, exited: n == DONE });
            }
            update_from_trajectory(&env, &mut q, &traj, &config);
            for tr in traj.iter().rev() {
                let next = if tr.exited { 0.0 } else {
                    let (fa, fb) = (flat[tr.next_state as usize][A], flat[tr.next_state as usize][B]);
                    // Ties resolve to the lower node, as in the hierarchy.
                    if fb > fa { fb } else { fa }
                };
                let cell = &mut flat[tr.state as usize][tr.action];
                *cell += alpha * (tr.reward + config.gamma * next - *cell);
            }
        }
        for s in 0..3u8 {
            for a in [A, B] {
                prop_assert!((q_value(&env, &q, ROOT, &s, a).unwrap() - flat[s as usize][a]).abs() < 1e-9);
            }
        }
    }
}
