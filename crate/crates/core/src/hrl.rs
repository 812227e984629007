//! Discounted, hierarchically optimal MAXQ learning over arbitrary task
//! graphs.
//!
//! The action value of choosing child `a` in subroutine `i` is decomposed as
//! `Q_r(a, s) + Q_c(i, s, a) + Q_e(i, s, a)`: the reward earned while `a`
//! runs, the reward earned in `i` after `a` returns until `i` exits, and the
//! reward earned after `i` exits. The root has no exit term.
//!
//! Two executors share the same transition records and learning rule:
//! [`run_subroutine`] recursively drives a self-contained [`Environment`],
//! while [`Executor`] is a resumable stack machine for agents that act one
//! primitive at a time inside a larger simulation loop.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt::{Debug, Display};
use std::hash::{BuildHasherDefault, Hash};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub const ROOT: NodeId = 0;
pub const MAX_DEPTH: usize = 16;

/// Hash map with a fixed hasher, so iteration order only depends on the
/// insertion history.
pub(crate) type StableMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Composite,
    Primitive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskNode {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

/// A rooted task tree. Node 0 is the root; children are listed in
/// ascending id order, which is also the tie-break order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskGraph {
    nodes: Vec<TaskNode>,
}

impl TaskGraph {
    /// Builds a graph from `(name, kind, children)` triples indexed by id.
    pub fn new(spec: Vec<(String, NodeKind, Vec<NodeId>)>) -> Result<Self> {
        let n = spec.len();
        if n == 0 {
            return Err(Error::Graph("graph has no nodes".into()));
        }
        let mut parent = vec![None; n];
        for (id, (_, kind, children)) in spec.iter().enumerate() {
            match kind {
                NodeKind::Primitive if !children.is_empty() => {
                    return Err(Error::Graph(format!("primitive node {id} has children")));
                }
                NodeKind::Composite if children.is_empty() => {
                    return Err(Error::Graph(format!("composite node {id} has no children")));
                }
                _ => {}
            }
            for &c in children {
                if c >= n || c == ROOT {
                    return Err(Error::Graph(format!("node {id} has invalid child {c}")));
                }
                if let Some(p) = parent[c] {
                    return Err(Error::Graph(format!("node {c} has two parents ({p} and {id})")));
                }
                parent[c] = Some(id);
            }
            if children.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Graph(format!("children of node {id} are not strictly ascending")));
            }
        }
        if spec[ROOT].1 != NodeKind::Composite {
            return Err(Error::Graph("root must be composite".into()));
        }
        // Every node must be reachable from the root, which with unique
        // parents rules out cycles.
        let mut seen = vec![false; n];
        let mut stack = vec![ROOT];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::Graph(format!("cycle through node {id}")));
            }
            stack.extend(spec[id].2.iter().copied());
        }
        if let Some(id) = seen.iter().position(|s| !s) {
            return Err(Error::Graph(format!("node {id} is unreachable from the root")));
        }
        let nodes = spec
            .into_iter()
            .enumerate()
            .map(|(id, (name, kind, children))| TaskNode {
                id,
                name,
                kind,
                children,
                parent: parent[id],
            })
            .collect();
        Ok(TaskGraph { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &TaskNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TaskNode] {
        &self.nodes
    }

    pub fn is_primitive(&self, id: NodeId) -> bool {
        self.nodes[id].kind == NodeKind::Primitive
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn depth(&self, mut id: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[id].parent {
            id = p;
            d += 1;
        }
        d
    }
}

/// Which decomposed table a state key is being computed for. Each table may
/// abstract away a different part of the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Table {
    Reward,
    Completion,
    Exit,
}

/// The task structure an agent learns over.
///
/// Composite children are only entered when admissible; termination of a
/// subroutine is tested after each of its children returns.
pub trait Hierarchy {
    type State: Clone + Debug;
    type Key: Clone + Eq + Hash + Ord + Display + Debug;

    fn graph(&self) -> &TaskGraph;

    fn key(&self, table: Table, node: NodeId, state: &Self::State) -> Self::Key;

    /// Children of `node` that may be chosen in `state`, ascending.
    fn admissible(&self, node: NodeId, _state: &Self::State, out: &mut Vec<NodeId>) {
        out.clear();
        out.extend_from_slice(self.graph().children(node));
    }

    fn is_terminated(&self, node: NodeId, state: &Self::State) -> bool;
}

/// A hierarchy that can also execute its own primitives.
pub trait Environment: Hierarchy {
    fn execute<R: Rng>(&mut self, primitive: NodeId, state: &Self::State, rng: &mut R) -> Result<(Self::State, f64)>;
}

/// How the learning rate of a table entry evolves with its update count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Always `alpha`.
    Constant,
    /// `max(alpha, 1/n)` on the n-th update of an entry: a running average
    /// until it reaches the floor.
    Visits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub alpha_mode: AlphaMode,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            gamma: 0.9,
            alpha: 0.1,
            alpha_mode: AlphaMode::Constant,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 0.99,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) || !unit(self.epsilon_decay) {
            return Err(Error::Config("epsilon schedule parameters must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Learning rate of the `n`-th update (1-based) of one entry.
    pub fn step_size(&self, n: u32) -> f64 {
        match self.alpha_mode {
            AlphaMode::Constant => self.alpha,
            AlphaMode::Visits => self.alpha.max(1.0 / n.max(1) as f64),
        }
    }

    /// Exploration rate for a 0-based episode counter.
    pub fn epsilon(&self, episode: u32) -> f64 {
        (self.epsilon_start * self.epsilon_decay.powf(episode as f64)).max(self.epsilon_end)
    }
}

/// A stored value and the number of learning updates it has received.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Entry {
    value: f64,
    updates: u32,
}

/// The three decomposed value tables. Missing entries read as zero.
#[derive(Debug, Clone)]
pub struct DecomposedQ<K> {
    q_r: StableMap<(NodeId, K), Entry>,
    q_c: StableMap<(NodeId, K, NodeId), Entry>,
    q_e: StableMap<(NodeId, K, NodeId), Entry>,
}

impl<K> Default for DecomposedQ<K> {
    fn default() -> Self {
        DecomposedQ {
            q_r: StableMap::default(),
            q_c: StableMap::default(),
            q_e: StableMap::default(),
        }
    }
}

impl<K: Clone + Eq + Hash + Ord + Display> DecomposedQ<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reward(&self, primitive: NodeId, key: &K) -> f64 {
        // Tuple keys force a clone for lookup; keys are small.
        self.q_r.get(&(primitive, key.clone())).map_or(0.0, |e| e.value)
    }

    pub fn completion(&self, node: NodeId, key: &K, action: NodeId) -> f64 {
        self.q_c.get(&(node, key.clone(), action)).map_or(0.0, |e| e.value)
    }

    pub fn exit(&self, node: NodeId, key: &K, action: NodeId) -> f64 {
        if node == ROOT {
            return 0.0;
        }
        self.q_e.get(&(node, key.clone(), action)).map_or(0.0, |e| e.value)
    }

    pub fn set_reward(&mut self, primitive: NodeId, key: K, value: f64) {
        self.q_r.entry((primitive, key)).or_default().value = value;
    }

    pub fn set_completion(&mut self, node: NodeId, key: K, action: NodeId, value: f64) {
        self.q_c.entry((node, key, action)).or_default().value = value;
    }

    /// Writes to the root's exit table are ignored: the root has none.
    pub fn set_exit(&mut self, node: NodeId, key: K, action: NodeId, value: f64) {
        if node != ROOT {
            self.q_e.entry((node, key, action)).or_default().value = value;
        }
    }

    fn learn_reward(&mut self, primitive: NodeId, key: K, target: f64, config: &LearnerConfig) {
        learn(self.q_r.entry((primitive, key)).or_default(), target, config);
    }

    fn learn_completion(&mut self, node: NodeId, key: K, action: NodeId, target: f64, config: &LearnerConfig) {
        learn(self.q_c.entry((node, key, action)).or_default(), target, config);
    }

    fn learn_exit(&mut self, node: NodeId, key: K, action: NodeId, target: f64, config: &LearnerConfig) {
        if node != ROOT {
            learn(self.q_e.entry((node, key, action)).or_default(), target, config);
        }
    }

    pub fn len(&self) -> usize {
        self.q_r.len() + self.q_c.len() + self.q_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.q_r.values().chain(self.q_c.values()).chain(self.q_e.values()).all(|e| e.value.is_finite())
    }

    /// Stored completion values of `node`, ordered by key then action.
    pub fn completion_values(&self, node: NodeId) -> Vec<f64> {
        sorted_values(self.q_c.iter().filter(|((n, _, _), _)| *n == node).map(|((_, k, a), e)| ((k, *a), e.value)))
    }

    pub fn exit_values(&self, node: NodeId) -> Vec<f64> {
        sorted_values(self.q_e.iter().filter(|((n, _, _), _)| *n == node).map(|((_, k, a), e)| ((k, *a), e.value)))
    }

    /// Sorted text snapshot, one `table(node,key,action) value` line per
    /// non-zero entry. Primitive rewards use `-` for the action column.
    pub fn snapshot(&self) -> String {
        let mut lines: Vec<String> = Vec::with_capacity(self.len());
        for ((n, k), Entry { value: v, .. }) in &self.q_r {
            if *v != 0.0 {
                lines.push(format!("q_r({n},{k},-) {v:?}"));
            }
        }
        for ((n, k, a), Entry { value: v, .. }) in &self.q_c {
            if *v != 0.0 {
                lines.push(format!("q_c({n},{k},{a}) {v:?}"));
            }
        }
        for ((n, k, a), Entry { value: v, .. }) in &self.q_e {
            if *v != 0.0 {
                lines.push(format!("q_e({n},{k},{a}) {v:?}"));
            }
        }
        finish_snapshot(lines)
    }
}

fn learn(entry: &mut Entry, target: f64, config: &LearnerConfig) {
    entry.updates = entry.updates.saturating_add(1);
    let alpha = config.step_size(entry.updates);
    entry.value = (1.0 - alpha) * entry.value + alpha * target;
}

fn sorted_values<'a, K: Ord + 'a>(it: impl Iterator<Item = ((&'a K, NodeId), f64)>) -> Vec<f64> {
    let mut entries: Vec<_> = it.collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries.into_iter().map(|(_, v)| v).collect()
}

pub(crate) fn finish_snapshot(mut lines: Vec<String>) -> String {
    lines.sort_unstable();
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

/// One executed child of a subroutine: `node` chose `action` in `state`,
/// which ran for `duration` primitive steps and left the agent in
/// `next_state`. `reward` is only meaningful for primitive actions.
/// `exited` records whether `node` itself terminated in `next_state`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub node: NodeId,
    pub state: S,
    pub action: NodeId,
    pub reward: f64,
    pub duration: u32,
    pub next_state: S,
    pub exited: bool,
}

/// Internal value of running `node` from `state`: its primitive reward, or
/// for a composite the reward of its greedy child plus completion.
pub fn value<H: Hierarchy>(h: &H, q: &DecomposedQ<H::Key>, node: NodeId, state: &H::State) -> f64 {
    let mut buf = Vec::new();
    value_with(h, q, node, state, &mut buf)
}

fn value_with<H: Hierarchy>(
    h: &H,
    q: &DecomposedQ<H::Key>,
    node: NodeId,
    state: &H::State,
    buf: &mut Vec<NodeId>,
) -> f64 {
    if h.graph().is_primitive(node) {
        return q.reward(node, &h.key(Table::Reward, node, state));
    }
    match greedy_with(h, q, node, state, buf) {
        Some((a, _)) => {
            let mut inner = Vec::new();
            value_with(h, q, a, state, &mut inner) + q.completion(node, &h.key(Table::Completion, node, state), a)
        }
        None => 0.0,
    }
}

fn q_value_unchecked<H: Hierarchy>(
    h: &H,
    q: &DecomposedQ<H::Key>,
    node: NodeId,
    state: &H::State,
    action: NodeId,
    kc: &H::Key,
    ke: Option<&H::Key>,
) -> f64 {
    let mut buf = Vec::new();
    let base = value_with(h, q, action, state, &mut buf) + q.completion(node, kc, action);
    match ke {
        Some(ke) => base + q.exit(node, ke, action),
        None => base,
    }
}

/// Full action value: `Q_r + Q_c` at the root, `Q_r + Q_c + Q_e` elsewhere.
pub fn q_value<H: Hierarchy>(
    h: &H,
    q: &DecomposedQ<H::Key>,
    node: NodeId,
    state: &H::State,
    action: NodeId,
) -> Result<f64> {
    if !h.graph().children(node).contains(&action) {
        return Err(Error::NotAChild { node, action });
    }
    let kc = h.key(Table::Completion, node, state);
    let ke = (node != ROOT).then(|| h.key(Table::Exit, node, state));
    Ok(q_value_unchecked(h, q, node, state, action, &kc, ke.as_ref()))
}

fn greedy_with<H: Hierarchy>(
    h: &H,
    q: &DecomposedQ<H::Key>,
    node: NodeId,
    state: &H::State,
    buf: &mut Vec<NodeId>,
) -> Option<(NodeId, f64)> {
    h.admissible(node, state, buf);
    if buf.is_empty() {
        return None;
    }
    let kc = h.key(Table::Completion, node, state);
    let ke = (node != ROOT).then(|| h.key(Table::Exit, node, state));
    let mut best: Option<(NodeId, f64)> = None;
    for &a in buf.iter() {
        let v = q_value_unchecked(h, q, node, state, a, &kc, ke.as_ref());
        // Strict comparison keeps the lowest index on ties.
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((a, v));
        }
    }
    best
}

/// Greedy child of `node` with its action value; `None` if no child is
/// admissible.
pub fn greedy<H: Hierarchy>(
    h: &H,
    q: &DecomposedQ<H::Key>,
    node: NodeId,
    state: &H::State,
) -> Option<(NodeId, f64)> {
    greedy_with(h, q, node, state, &mut Vec::new())
}

/// Epsilon-greedy choice among the admissible children of `node`.
pub fn select_action<H: Hierarchy, R: Rng + ?Sized>(
    h: &H,
    q: &DecomposedQ<H::Key>,
    node: NodeId,
    state: &H::State,
    epsilon: f64,
    rng: &mut R,
) -> Option<NodeId> {
    let mut buf = Vec::new();
    h.admissible(node, state, &mut buf);
    if buf.is_empty() {
        return None;
    }
    // Draw the exploration coin on every call so the random stream does not
    // depend on table contents.
    let explore = rng.gen::<f64>() < epsilon;
    if explore {
        return Some(buf[rng.gen_range(0..buf.len())]);
    }
    greedy_with(h, q, node, state, &mut buf).map(|(a, _)| a)
}

/// Value of the parent of `node` in `state` after `node` has exited.
fn parent_value<H: Hierarchy>(h: &H, q: &DecomposedQ<H::Key>, node: NodeId, state: &H::State) -> f64 {
    let Some(parent) = h.graph().parent(node) else {
        return 0.0;
    };
    if h.is_terminated(parent, state) {
        return 0.0;
    }
    greedy(h, q, parent, state).map_or(0.0, |(_, v)| v)
}

/// Sample backups for every transition, latest first.
///
/// Primitive actions move `Q_r` toward the observed reward. Each transition
/// moves `Q_c(i, s, a)` toward the discounted internal value of continuing
/// `i` from `s'` (zero once `i` exited), and `Q_e(i, s, a)` toward the
/// discounted exit value carried forward within `i`, or toward the parent's
/// value once `i` exited.
pub fn update_from_trajectory<H: Hierarchy>(
    h: &H,
    q: &mut DecomposedQ<H::Key>,
    trajectory: &[Transition<H::State>],
    config: &LearnerConfig,
) {
    let graph = h.graph();
    let mut buf = Vec::new();
    for tr in trajectory.iter().rev() {
        if graph.is_primitive(tr.action) {
            let k = h.key(Table::Reward, tr.action, &tr.state);
            q.learn_reward(tr.action, k, tr.reward, config);
        }

        let disc = config.gamma.powi(tr.duration as i32);
        let is_root = tr.node == ROOT;
        let (target_c, target_e) = if tr.exited {
            let e = if is_root { 0.0 } else { disc * parent_value(h, q, tr.node, &tr.next_state) };
            (0.0, e)
        } else {
            match greedy_with(h, q, tr.node, &tr.next_state, &mut buf) {
                Some((next, _)) => {
                    let kc = h.key(Table::Completion, tr.node, &tr.next_state);
                    let c = disc * (value(h, q, next, &tr.next_state) + q.completion(tr.node, &kc, next));
                    let e = if is_root {
                        0.0
                    } else {
                        let ke = h.key(Table::Exit, tr.node, &tr.next_state);
                        disc * q.exit(tr.node, &ke, next)
                    };
                    (c, e)
                }
                // A subroutine left with nothing to do behaves as if it exited.
                None => {
                    let e = if is_root { 0.0 } else { disc * parent_value(h, q, tr.node, &tr.next_state) };
                    (0.0, e)
                }
            }
        };

        let kc = h.key(Table::Completion, tr.node, &tr.state);
        q.learn_completion(tr.node, kc, tr.action, target_c, config);
        if !is_root {
            let ke = h.key(Table::Exit, tr.node, &tr.state);
            q.learn_exit(tr.node, ke, tr.action, target_e, config);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub epsilon: f64,
    pub gamma: f64,
    pub max_steps: u32,
}

#[derive(Debug, Clone)]
pub struct Outcome<S> {
    pub state: S,
    pub steps: u32,
    /// Reward discounted from the start of the subroutine.
    pub reward: f64,
    pub trajectory: Vec<Transition<S>>,
}

/// Runs subroutine `node` from `state` until it terminates, has no
/// admissible child, or the step budget is spent.
pub fn run_subroutine<E: Environment, R: Rng>(
    q: &DecomposedQ<E::Key>,
    env: &mut E,
    node: NodeId,
    state: E::State,
    config: &RunConfig,
    rng: &mut R,
    depth: usize,
) -> Result<Outcome<E::State>> {
    let mut budget = config.max_steps;
    let mut trajectory = Vec::new();
    let (state, steps, reward) = run_inner(q, env, node, state, config, rng, depth, &mut budget, &mut trajectory)?;
    Ok(Outcome {
        state,
        steps,
        reward,
        trajectory,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_inner<E: Environment, R: Rng>(
    q: &DecomposedQ<E::Key>,
    env: &mut E,
    node: NodeId,
    mut state: E::State,
    config: &RunConfig,
    rng: &mut R,
    depth: usize,
    budget: &mut u32,
    trajectory: &mut Vec<Transition<E::State>>,
) -> Result<(E::State, u32, f64)> {
    if depth > MAX_DEPTH {
        return Err(Error::DepthExceeded(MAX_DEPTH));
    }
    if env.graph().is_primitive(node) {
        return Err(Error::Graph(format!("run_subroutine called on primitive node {node}")));
    }
    let mut steps = 0u32;
    let mut reward = 0.0;
    while *budget > 0 {
        let Some(action) = select_action(&*env, q, node, &state, config.epsilon, rng) else {
            break;
        };
        let start = state.clone();
        let discount = config.gamma.powi(steps as i32);
        let (next, duration, r) = if env.graph().is_primitive(action) {
            let (next, r) = env.execute(action, &state, rng)?;
            *budget -= 1;
            (next, 1, r)
        } else {
            let (next, d, r) = run_inner(q, env, action, state, config, rng, depth + 1, budget, trajectory)?;
            (next, d, r)
        };
        let exited = env.is_terminated(node, &next);
        trajectory.push(Transition {
            node,
            state: start,
            action,
            reward: if env.graph().is_primitive(action) { r } else { 0.0 },
            duration,
            next_state: next.clone(),
            exited,
        });
        reward += discount * r;
        steps += duration;
        state = next;
        if exited {
            break;
        }
    }
    Ok((state, steps, reward))
}

#[derive(Debug, Clone)]
struct Frame<S> {
    node: NodeId,
    /// Child currently running, the state it started in, and the step
    /// counter at that moment.
    running: Option<(NodeId, S, u32)>,
}

/// Resumable hierarchical execution: call [`Executor::next_primitive`] with
/// the current state whenever the agent may act, execute the returned
/// primitive elsewhere, then report its reward with
/// [`Executor::record_reward`].
#[derive(Debug, Clone)]
pub struct Executor<S> {
    frames: Vec<Frame<S>>,
    pending_reward: f64,
    steps: u32,
    trajectory: Vec<Transition<S>>,
}

impl<S: Clone + Debug> Executor<S> {
    pub fn new() -> Self {
        Executor {
            frames: vec![Frame {
                node: ROOT,
                running: None,
            }],
            pending_reward: 0.0,
            steps: 0,
            trajectory: Vec::new(),
        }
    }

    pub fn is_finished(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Active subroutines from the root down.
    pub fn stack(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.frames.iter().map(|f| f.node)
    }

    pub fn trajectory(&self) -> &[Transition<S>] {
        &self.trajectory
    }

    pub fn take_trajectory(&mut self) -> Vec<Transition<S>> {
        std::mem::take(&mut self.trajectory)
    }

    pub fn record_reward(&mut self, reward: f64) {
        self.pending_reward = reward;
    }

    /// Closes the running primitive (if any) at `state` and pops every
    /// subroutine that has terminated.
    pub fn observe<H: Hierarchy<State = S>>(&mut self, h: &H, state: &S) {
        let graph = h.graph();
        if let Some(top) = self.frames.last_mut() {
            if let Some((action, start, _)) = top.running.take_if(|(a, _, _)| graph.is_primitive(*a)) {
                self.steps += 1;
                self.trajectory.push(Transition {
                    node: top.node,
                    state: start,
                    action,
                    reward: std::mem::take(&mut self.pending_reward),
                    duration: 1,
                    next_state: state.clone(),
                    exited: h.is_terminated(top.node, state),
                });
            } else {
                return;
            }
        }
        while let Some(top) = self.frames.last() {
            if !h.is_terminated(top.node, state) {
                break;
            }
            self.pop(h, state);
        }
    }

    fn pop<H: Hierarchy<State = S>>(&mut self, h: &H, state: &S) {
        self.frames.pop();
        if let Some(parent) = self.frames.last_mut() {
            if let Some((action, start, started_at)) = parent.running.take() {
                self.trajectory.push(Transition {
                    node: parent.node,
                    state: start,
                    action,
                    reward: 0.0,
                    duration: self.steps - started_at,
                    next_state: state.clone(),
                    exited: h.is_terminated(parent.node, state),
                });
            }
        }
    }

    /// Chooses the next primitive to execute in `state`, descending through
    /// composite children as needed. `None` once the root is done.
    pub fn next_primitive<H, R>(
        &mut self,
        h: &H,
        q: &DecomposedQ<H::Key>,
        state: &S,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<Option<NodeId>>
    where
        H: Hierarchy<State = S>,
        R: Rng + ?Sized,
    {
        self.observe(h, state);
        loop {
            if self.frames.len() > MAX_DEPTH + 1 {
                return Err(Error::DepthExceeded(MAX_DEPTH));
            }
            let Some(top) = self.frames.last_mut() else {
                return Ok(None);
            };
            match select_action(h, q, top.node, state, epsilon, rng) {
                None => self.pop(h, state),
                Some(action) => {
                    top.running = Some((action, state.clone(), self.steps));
                    if h.graph().is_primitive(action) {
                        return Ok(Some(action));
                    }
                    self.frames.push(Frame {
                        node: action,
                        running: None,
                    });
                }
            }
        }
    }
}

impl<S: Clone + Debug> Default for Executor<S> {
    fn default() -> Self {
        Self::new()
    }
}
