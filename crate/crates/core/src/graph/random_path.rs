use rand::seq::SliceRandom;
use rand::Rng;

use super::{ArcId, DynamicGraph, GraphError, NodeId, Path};

/// Randomized depth-first search for a simple path over arcs whose
/// `remaining` capacity is positive. Neighbours of each newly reached node are
/// visited in a random order.
pub fn random_simple_path<R: Rng + ?Sized>(
    graph: &DynamicGraph,
    remaining: &[f64],
    source: NodeId,
    target: NodeId,
    rng: &mut R,
) -> Result<Option<Path>, GraphError> {
    if source == target {
        return Err(GraphError::SameEndpoints(source));
    }
    let mut visited = vec![false; graph.node_count()];
    visited[source.0] = true;
    let shuffled = |v: NodeId, rng: &mut R| {
        let mut arcs: Vec<ArcId> = graph.out_arcs(v).iter().copied().filter(|a| remaining[a.0] > 0.0).collect();
        arcs.shuffle(rng);
        arcs
    };
    // Each frame: (arcs to try, next index); `path` holds the arcs taken.
    let mut stack: Vec<(Vec<ArcId>, usize)> = vec![(shuffled(source, rng), 0)];
    let mut path: Vec<ArcId> = Vec::new();
    while let Some((arcs, idx)) = stack.last_mut() {
        if *idx == arcs.len() {
            stack.pop();
            path.pop();
            continue;
        }
        let a = arcs[*idx];
        *idx += 1;
        let w = graph.arc(a).1;
        if visited[w.0] {
            continue;
        }
        visited[w.0] = true;
        path.push(a);
        if w == target {
            return Ok(Some(Path::from_arcs_unchecked(path)));
        }
        let next = shuffled(w, rng);
        stack.push((next, 0));
    }
    Ok(None)
}
