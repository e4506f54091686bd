use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// One slack-rescaling constraint `Δ · (1 − w·dpsi) ≤ ξ_example`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub example: usize,
    /// `Ψ(gold) − Ψ(ŷ)`, sorted by feature id, zeros dropped.
    pub dpsi: Vec<(usize, i64)>,
    pub loss: f64,
    pub tp: usize,
    pub fp: usize,
}

/// Signed amount by which `constraint` is violated at `weights` given the
/// example's current slack.
pub fn violation_at(weights: &[f64], constraint: &Constraint, slack: f64) -> f64 {
    let margin: f64 = constraint.dpsi.iter().map(|&(k, v)| weights[k] * v as f64).sum();
    constraint.loss * (1.0 - margin) - slack
}

/// Result of a restricted QP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub weights: Vec<f64>,
    pub slacks: Vec<f64>,
    /// `½‖w‖² + (C/n) Σ ξ`.
    pub objective: f64,
    /// Dual value; equals `objective` at the optimum.
    pub dual: f64,
    pub passes: usize,
}

/// Example index, sorted feature difference and loss bits.
type ConstraintKey = (usize, Vec<(usize, i64)>, u64);

/// Constraints gathered so far, with their dual variables kept between
/// solves so each re-solve starts from the previous optimum.
#[derive(Debug, Clone)]
pub struct WorkingSet {
    num_examples: usize,
    dim: usize,
    constraints: Vec<Constraint>,
    // Δ·dpsi
    z: Vec<Vec<(usize, f64)>>,
    alpha: Vec<f64>,
    blocks: Vec<Vec<usize>>,
    seen: HashSet<ConstraintKey>,
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

fn dense_dot(z: &[(usize, f64)], w: &[f64]) -> f64 {
    z.iter().map(|&(k, v)| w[k] * v).sum()
}

impl WorkingSet {
    pub fn new(num_examples: usize, dim: usize) -> Self {
        WorkingSet {
            num_examples,
            dim,
            constraints: Vec::new(),
            z: Vec::new(),
            alpha: Vec::new(),
            blocks: vec![Vec::new(); num_examples],
            seen: HashSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraints_for(&self, example: usize) -> impl Iterator<Item = &Constraint> {
        self.blocks[example].iter().map(|&k| &self.constraints[k])
    }

    /// Adds `c` unless it duplicates a stored constraint or carries no loss.
    pub fn add(&mut self, c: Constraint) -> bool {
        assert!(c.example < self.num_examples, "example index out of range");
        if !c.loss.is_finite() || c.loss <= 0.0 {
            return false;
        }
        let mut dpsi = c.dpsi.clone();
        dpsi.sort_unstable();
        dpsi.retain(|&(_, v)| v != 0);
        if !self.seen.insert((c.example, dpsi.clone(), c.loss.to_bits())) {
            return false;
        }
        assert!(dpsi.iter().all(|&(k, _)| k < self.dim), "feature index out of range");
        let k = self.constraints.len();
        self.z.push(dpsi.iter().map(|&(f, v)| (f, c.loss * v as f64)).collect());
        self.alpha.push(0.0);
        self.blocks[c.example].push(k);
        self.constraints.push(Constraint { dpsi, ..c });
        true
    }

    fn weights_from_alpha(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim];
        for (z, &a) in self.z.iter().zip(&self.alpha) {
            if a != 0.0 {
                for &(k, v) in z {
                    w[k] += a * v;
                }
            }
        }
        w
    }

    /// Solves the dual of the restricted program
    ///
    /// `max Σ α_k Δ_k − ½‖Σ α_k Δ_k dpsi_k‖²  s.t.  α ≥ 0, Σ_{k of i} α_k ≤ C/n`
    ///
    /// by pairwise coordinate ascent inside each example's block, where an
    /// implicit zero-gradient variable takes up the unused budget. Stops
    /// when no block has a KKT gap above `tolerance`.
    pub fn solve(&mut self, c: f64, tolerance: f64, max_passes: usize) -> QpSolution {
        let n = self.num_examples.max(1);
        let cap = c / n as f64;
        let mut w = self.weights_from_alpha();
        let mut passes = 0;
        while passes < max_passes {
            passes += 1;
            let mut worst = 0.0f64;
            for block in &self.blocks {
                if block.is_empty() {
                    continue;
                }
                for step in 0..100 {
                    let used: f64 = block.iter().map(|&k| self.alpha[k]).sum();
                    let spare = (cap - used).max(0.0);
                    // None stands for the zero-gradient budget variable
                    let grads: Vec<(Option<usize>, f64, f64)> = block
                        .iter()
                        .map(|&k| (Some(k), self.constraints[k].loss - dense_dot(&self.z[k], &w), self.alpha[k]))
                        .chain(std::iter::once((None, 0.0, spare)))
                        .collect();
                    let &(p, gp, _) = grads
                        .iter()
                        .max_by(|a, b| a.1.total_cmp(&b.1))
                        .expect("non-empty");
                    let Some(&(q, gq, aq)) = grads
                        .iter()
                        .filter(|g| g.2 > 0.0)
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                    else {
                        break;
                    };
                    let gap = gp - gq;
                    if step == 0 {
                        worst = worst.max(gap);
                    }
                    if gap <= tolerance || p == q {
                        break;
                    }
                    let zp: &[(usize, f64)] = p.map_or(&[], |k| &self.z[k]);
                    let zq: &[(usize, f64)] = q.map_or(&[], |k| &self.z[k]);
                    let d2 = sparse_dot(zp, zp) + sparse_dot(zq, zq) - 2.0 * sparse_dot(zp, zq);
                    let t = if d2 > 0.0 { (gap / d2).min(aq) } else { aq };
                    if t <= 0.0 {
                        break;
                    }
                    for &(k, v) in zp {
                        w[k] += t * v;
                    }
                    for &(k, v) in zq {
                        w[k] -= t * v;
                    }
                    if let Some(p) = p {
                        self.alpha[p] += t;
                    }
                    if let Some(q) = q {
                        self.alpha[q] = (self.alpha[q] - t).max(0.0);
                    }
                }
            }
            if worst <= tolerance {
                break;
            }
        }
        // refresh to remove accumulated drift
        let w = self.weights_from_alpha();
        let slacks: Vec<f64> = self
            .blocks
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|&k| self.constraints[k].loss - dense_dot(&self.z[k], &w))
                    .fold(0.0, f64::max)
            })
            .collect();
        let norm2: f64 = w.iter().map(|v| v * v).sum();
        let objective = 0.5 * norm2 + cap * slacks.iter().sum::<f64>();
        let linear: f64 = self
            .constraints
            .iter()
            .zip(&self.alpha)
            .map(|(c, a)| a * c.loss)
            .sum();
        QpSolution {
            weights: w,
            slacks,
            objective,
            dual: linear - 0.5 * norm2,
            passes,
        }
    }
}

/// Solves the restricted program from scratch (or from the working set's
/// current duals) and returns `(w, ξ)`.
pub fn solve_restricted_qp(
    working_set: &mut WorkingSet,
    c: f64,
    tolerance: f64,
    max_passes: usize,
) -> (Vec<f64>, Vec<f64>) {
    let s = working_set.solve(c, tolerance, max_passes);
    (s.weights, s.slacks)
}
