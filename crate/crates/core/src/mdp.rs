//! Finite MDPs with reachability value iteration and qualitative analyses.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::error::MdpError;
use crate::model::Optimization;
use crate::scalar::Scalar;

/// A frozen MDP in compressed layout. Every state has at least one action.
#[derive(Clone, Debug)]
pub struct Mdp {
    state_start: Vec<usize>,
    action_start: Vec<usize>,
    action_label: Vec<u32>,
    labels: Vec<String>,
    succ: Vec<usize>,
    prob: Vec<Rational64>,
    targets: Vec<bool>,
    /// Predecessor lists in compressed layout, built on first use.
    pred: OnceLock<(Vec<usize>, Vec<u32>)>,
}

type LabelledDistribution = (u32, Vec<(usize, Rational64)>);

#[derive(Default)]
pub struct MdpBuilder {
    actions: Vec<Vec<LabelledDistribution>>,
    labels: Vec<String>,
    label_ids: HashMap<String, u32>,
    targets: Vec<bool>,
}

impl MdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_states(n: usize) -> Self {
        let mut b = Self::new();
        for _ in 0..n {
            b.add_state();
        }
        b
    }

    pub fn add_state(&mut self) -> usize {
        self.actions.push(Vec::new());
        self.targets.push(false);
        self.actions.len() - 1
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn set_target(&mut self, s: usize) {
        self.targets[s] = true;
    }

    /// Adds an action; successors listed twice are merged.
    pub fn add_action(&mut self, s: usize, label: &str, dist: impl IntoIterator<Item = (usize, Rational64)>) {
        let id = match self.label_ids.get(label) {
            Some(&id) => id,
            None => {
                let id = self.labels.len() as u32;
                self.labels.push(label.to_string());
                self.label_ids.insert(label.to_string(), id);
                id
            }
        };
        let mut merged: Vec<(usize, Rational64)> = Vec::new();
        for (t, p) in dist {
            match merged.iter_mut().find(|(u, _)| *u == t) {
                Some(e) => e.1 += p,
                None => merged.push((t, p)),
            }
        }
        self.actions[s].push((id, merged));
    }

    /// Checks distributions and gives action-less states a self-loop.
    pub fn build(self) -> Result<Mdp, MdpError> {
        let n = self.actions.len();
        let mut labels = self.labels;
        let self_loop = labels.len() as u32;
        labels.push("loop".to_string());
        let mut m = Mdp {
            state_start: vec![0],
            action_start: vec![0],
            action_label: Vec::new(),
            labels,
            succ: Vec::new(),
            prob: Vec::new(),
            targets: self.targets,
            pred: OnceLock::new(),
        };
        for (s, actions) in self.actions.into_iter().enumerate() {
            let actions = if actions.is_empty() { vec![(self_loop, vec![(s, Rational64::one())])] } else { actions };
            for (label, dist) in actions {
                let sum: Rational64 = dist.iter().map(|d| d.1).sum();
                if sum != Rational64::one() || dist.iter().any(|d| d.1 <= Rational64::zero()) {
                    return Err(MdpError::BadDistribution { state: s, sum: sum.to_string() });
                }
                for (t, p) in dist {
                    if t >= n {
                        return Err(MdpError::UnknownSuccessor { state: s, succ: t });
                    }
                    m.succ.push(t);
                    m.prob.push(p);
                }
                m.action_label.push(label);
                m.action_start.push(m.succ.len());
            }
            m.state_start.push(m.action_label.len());
        }
        Ok(m)
    }
}

/// Result of value iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T> {
    pub values: Vec<T>,
    pub sweeps: usize,
    pub residual: f64,
}

impl Mdp {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self) -> &[bool] {
        &self.targets
    }

    pub fn transitions(&self) -> usize {
        self.succ.len()
    }

    pub fn actions(&self, s: usize) -> std::ops::Range<usize> {
        self.state_start[s]..self.state_start[s + 1]
    }

    pub fn action_label(&self, a: usize) -> &str {
        &self.labels[self.action_label[a] as usize]
    }

    /// `(successor, probability)` pairs of action `a`.
    pub fn distribution(&self, a: usize) -> impl Iterator<Item = (usize, Rational64)> + '_ {
        let r = self.action_start[a]..self.action_start[a + 1];
        self.succ[r.clone()].iter().copied().zip(self.prob[r].iter().copied())
    }

    fn succs(&self, a: usize) -> &[usize] {
        &self.succ[self.action_start[a]..self.action_start[a + 1]]
    }

    fn predecessors(&self, t: usize) -> &[u32] {
        let (start, pred) = self.pred.get_or_init(|| {
            let n = self.len();
            let mut count = vec![0usize; n + 1];
            let mut edges = Vec::new();
            for s in 0..n {
                let mut seen: Vec<usize> = self.actions(s).flat_map(|a| self.succs(a).iter().copied()).collect();
                seen.sort_unstable();
                seen.dedup();
                for t in seen {
                    count[t + 1] += 1;
                    edges.push((t, s as u32));
                }
            }
            for i in 0..n {
                count[i + 1] += count[i];
            }
            let mut fill = count.clone();
            let mut pred = vec![0u32; edges.len()];
            for (t, s) in edges {
                pred[fill[t]] = s;
                fill[t] += 1;
            }
            (count, pred)
        });
        &pred[start[t]..start[t + 1]]
    }

    /// Backward closure of `seed`: a state joins when `enter(state, in_set)`
    /// holds, re-examined whenever one of its successors joins.
    fn backward_closure(&self, seed: &[bool], mut enter: impl FnMut(usize, &[bool]) -> bool) -> Vec<bool> {
        let mut set = seed.to_vec();
        let mut stack: Vec<usize> = (0..self.len()).filter(|&s| set[s]).collect();
        while let Some(t) = stack.pop() {
            for &s in self.predecessors(t) {
                let s = s as usize;
                if !set[s] && enter(s, &set) {
                    set[s] = true;
                    stack.push(s);
                }
            }
        }
        set
    }

    /// States from which no strategy reaches the target.
    pub fn prob0_max(&self) -> Vec<bool> {
        let reach = self.backward_closure(&self.targets, |_, _| true);
        reach.into_iter().map(|r| !r).collect()
    }

    /// States from which some strategy reaches the target almost surely.
    pub fn prob1_max(&self) -> Vec<bool> {
        self.prob1_max_counted().0
    }

    /// [`Mdp::prob1_max`] together with the number of outer iterations.
    pub fn prob1_max_counted(&self) -> (Vec<bool>, usize) {
        let mut u = vec![true; self.len()];
        let mut iterations = 0;
        loop {
            iterations += 1;
            let r = self.backward_closure(&self.targets, |s, r| {
                self.actions(s).any(|a| self.succs(a).iter().all(|&t| u[t]) && self.succs(a).iter().any(|&t| r[t]))
            });
            let r: Vec<bool> = r.iter().zip(&u).map(|(a, b)| *a && *b).collect();
            if r == u {
                return (u, iterations);
            }
            u = r;
        }
    }

    /// States from which some strategy avoids the target forever.
    pub fn prob0_min(&self) -> Vec<bool> {
        let forced = self.backward_closure(&self.targets, |s, set| {
            self.actions(s).all(|a| self.succs(a).iter().any(|&t| set[t]))
        });
        forced.into_iter().map(|f| !f).collect()
    }

    /// States from which every strategy reaches the target almost surely.
    pub fn prob1_min(&self) -> Vec<bool> {
        let zero = self.prob0_min();
        let targets = &self.targets;
        let escape = self.backward_closure(&zero, |s, _| !targets[s]);
        escape.into_iter().map(|e| !e).collect()
    }

    /// Optimal probabilities of reaching the target, from below, with
    /// Gauss-Seidel sweeps in state order. Qualitative sets are fixed first.
    pub fn value_iteration<T: Scalar>(
        &self,
        opt: Optimization,
        epsilon: f64,
        max_sweeps: usize,
    ) -> Result<Solution<T>, MdpError> {
        let (zero, one) = match opt {
            Optimization::Max => (self.prob0_max(), self.prob1_max()),
            Optimization::Min => (self.prob0_min(), self.prob1_min()),
        };
        let probs: Vec<T> = self.prob.iter().map(T::from_ratio).collect();
        let mut v: Vec<T> = one.iter().map(|&o| if o { T::one() } else { T::zero() }).collect();
        let open: Vec<usize> = (0..self.len()).filter(|&s| !zero[s] && !one[s]).collect();
        let mut sweeps = 0;
        let mut residual = 0.0;
        if open.is_empty() {
            return Ok(Solution { values: v, sweeps, residual });
        }
        loop {
            if sweeps >= max_sweeps {
                return Err(MdpError::NotConverged { sweeps, residual });
            }
            sweeps += 1;
            residual = 0.0;
            for &s in &open {
                let mut best: Option<T> = None;
                for a in self.actions(s) {
                    let mut sum = T::zero();
                    for k in self.action_start[a]..self.action_start[a + 1] {
                        sum = sum + probs[k].clone() * v[self.succ[k]].clone();
                    }
                    best = Some(match best {
                        None => sum,
                        Some(b) => match opt {
                            Optimization::Max if sum > b => sum,
                            Optimization::Min if sum < b => sum,
                            _ => b,
                        },
                    });
                }
                let new = best.expect("every state has an action");
                let diff = (new.clone() - v[s].clone()).abs().to_f64();
                if diff > residual {
                    residual = diff;
                }
                v[s] = new;
            }
            if residual <= epsilon {
                return Ok(Solution { values: v, sweeps, residual });
            }
        }
    }

    /// One line per transition: `state action probability successor`.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for s in 0..self.len() {
            for a in self.actions(s) {
                for (t, p) in self.distribution(a) {
                    let _ = writeln!(out, "{s} {} {p} {t}", self.action_label(a));
                }
            }
        }
        out
    }
}
