use std::collections::BTreeMap;

use super::FormulationError;

/// Pieces smaller than this are dropped.
const PIECE_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-9;

/// Weighted path-sequences whose per-step marginals reproduce a fractional
/// path assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexCombination<P> {
    /// Sequences in creation order; `sequences[i].0[j]` is the path at the
    /// `j`-th step of the input.
    pub sequences: Vec<(Vec<P>, f64)>,
}

impl<P: Ord + Clone> ConvexCombination<P> {
    /// Total weight of sequences using `p` at step index `step`.
    pub fn marginal(&self, step: usize, p: &P) -> f64 {
        self.sequences.iter().filter(|(s, _)| &s[step] == p).map(|(_, w)| w).sum()
    }

    /// Weighted number of path changes inside the sequences.
    pub fn weighted_changes(&self) -> f64 {
        self.sequences.iter().map(|(s, w)| w * s.windows(2).filter(|p| p[0] != p[1]).count() as f64).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.sequences.iter().map(|(_, w)| w).sum()
    }
}

/// Decomposes per-step path weights `x[j]` (each summing to 1) into a convex
/// combination of path-sequences.
///
/// Sequences are first extended with the path they already end on, as far as
/// that path has room; the leftover shares are then routed to paths that still
/// need weight. Paths are visited in ascending order and sequences in creation
/// order, which makes the output deterministic.
pub fn dantzig_wolfe_decompose<P: Ord + Clone>(
    x: &[BTreeMap<P, f64>],
) -> Result<ConvexCombination<P>, FormulationError> {
    for (j, step) in x.iter().enumerate() {
        if let Some(&w) = step.values().find(|&&w| w < 0.0 || !w.is_finite()) {
            return Err(FormulationError::NegativeWeight(w));
        }
        let sum: f64 = step.values().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(FormulationError::WeightSum { step: j + 1, sum });
        }
    }
    let Some(first) = x.first() else {
        return Ok(ConvexCombination { sequences: Vec::new() });
    };
    let mut seqs: Vec<(Vec<P>, f64)> =
        first.iter().filter(|(_, &w)| w > PIECE_TOL).map(|(p, &w)| (vec![p.clone()], w)).collect();

    for step in &x[1..] {
        let mut need: BTreeMap<&P, f64> = step.iter().filter(|(_, &w)| w > PIECE_TOL).map(|(p, &w)| (p, w)).collect();
        let mut left: Vec<f64> = seqs.iter().map(|(_, w)| *w).collect();
        let mut children: Vec<Vec<(Vec<P>, f64)>> = vec![Vec::new(); seqs.len()];
        let extend = |i: usize, p: &P, amount: f64, children: &mut Vec<Vec<(Vec<P>, f64)>>| {
            let mut s = seqs[i].0.clone();
            s.push(p.clone());
            children[i].push((s, amount));
        };

        for (p, room) in need.iter_mut() {
            for i in 0..seqs.len() {
                if *room <= PIECE_TOL {
                    break;
                }
                if seqs[i].0.last() != Some(*p) || left[i] <= PIECE_TOL {
                    continue;
                }
                let take = left[i].min(*room);
                extend(i, p, take, &mut children);
                left[i] -= take;
                *room -= take;
            }
        }
        for i in 0..seqs.len() {
            for (p, room) in need.iter_mut() {
                if left[i] <= PIECE_TOL {
                    break;
                }
                if *room <= PIECE_TOL {
                    continue;
                }
                let take = left[i].min(*room);
                extend(i, p, take, &mut children);
                left[i] -= take;
                *room -= take;
            }
        }
        seqs = children.into_iter().flatten().filter(|(_, w)| *w > PIECE_TOL).collect();
    }
    Ok(ConvexCombination { sequences: seqs })
}
