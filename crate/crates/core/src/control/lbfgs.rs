use std::collections::VecDeque;

use crate::sparse::dot;

/// Curvature pairs `(s, y, 1/sᵀy)` for the two-loop recursion.
#[derive(Debug, Clone)]
pub(crate) struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        LbfgsMemory {
            capacity: capacity.max(1),
            pairs: VecDeque::with_capacity(capacity),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Length of the stored vectors, if any.
    pub fn dim(&self) -> Option<usize> {
        self.pairs.front().map(|(s, _, _)| s.len())
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores the pair unless it violates the curvature condition.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        let scale = (dot(&s, &s) * dot(&y, &y)).sqrt();
        if !(sy > 1e-10 * scale) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    /// Two-loop recursion: returns `-H g` with `H0 = (sᵀy / yᵀy) I` from the newest pair.
    pub fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alpha = vec![0.0; self.pairs.len()];
        for (k, (s, y, rho)) in self.pairs.iter().enumerate().rev() {
            let a = rho * dot(s, &q);
            alpha[k] = a;
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        }
        for (k, (s, y, rho)) in self.pairs.iter().enumerate() {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (alpha[k] - b) * si);
        }
        q.iter_mut().for_each(|qi| *qi = -*qi);
        q
    }
}
