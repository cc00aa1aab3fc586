//! Primal network simplex for the uncapacitated transportation problem.
//!
//! Sources `0..m`, sinks `m..m+n`, plus an artificial root joined to every
//! node, which gives a strongly feasible starting tree. Arc costs are
//! computed on demand, so memory is linear in the number of atoms. The
//! leaving arc is the last blocking arc of the cycle (strongly feasible
//! rule), which prevents cycling on degenerate pivots.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

pub(crate) struct Solution {
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

struct Tree {
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// Pred arc points from the node to its parent.
    up: Vec<bool>,
    flow: Vec<f64>,
    pi: Vec<f64>,
    depth: Vec<u32>,
    children: Vec<Vec<usize>>,
}

fn detach(children: &mut [Vec<usize>], p: usize, c: usize) {
    if let Some(k) = children[p].iter().position(|&x| x == c) {
        children[p].swap_remove(k);
    }
}

/// Solves `min Σ c(i,j) x_ij` subject to row sums `supply` and column sums
/// `demand`. `max_cost` must bound every `c(i,j)`.
pub(crate) fn solve<C>(supply: &[f64], demand: &[f64], cost: C, max_cost: f64) -> Result<Solution>
where
    C: Fn(usize, usize) -> f64,
{
    let (m, n) = (supply.len(), demand.len());
    let nodes = m + n;
    let root = nodes;
    let mn = m * n;
    let art = max_cost + 1.0;
    let tol = 1e-12 * art;

    let mut t = Tree {
        parent: vec![root; nodes + 1],
        pred: (0..=nodes).map(|k| mn + k).collect(),
        up: (0..=nodes).map(|k| k < m).collect(),
        flow: supply.iter().chain(demand).copied().chain([0.0]).collect(),
        pi: (0..=nodes).map(|k| if k < m { -art } else { art }).collect(),
        depth: vec![1; nodes + 1],
        children: vec![Vec::new(); nodes + 1],
    };
    t.parent[root] = NONE;
    t.pi[root] = 0.0;
    t.depth[root] = 0;
    t.children[root] = (0..nodes).collect();

    let arc_cost = |a: usize| if a < mn { cost(a / n, a % n) } else { art };
    let block = ((mn as f64).sqrt().ceil() as usize).max(10).min(mn);
    let (mut ni, mut nj) = (0usize, 0usize);
    let mut path = Vec::new();
    let mut saved = Vec::new();
    let mut stack = Vec::new();

    loop {
        // block search pricing
        let mut best = NONE;
        let mut min_rc = -tol;
        let mut left = block;
        for _ in 0..mn {
            let (i, j) = (ni, nj);
            nj += 1;
            if nj == n {
                nj = 0;
                ni += 1;
                if ni == m {
                    ni = 0;
                }
            }
            let rc = cost(i, j) + t.pi[i] - t.pi[m + j];
            if rc < min_rc {
                min_rc = rc;
                best = i * n + j;
            }
            left -= 1;
            if left == 0 {
                if best != NONE {
                    break;
                }
                left = block;
            }
        }
        if best == NONE {
            break;
        }

        let first = best / n;
        let second = m + best % n;
        let join = {
            let (mut u, mut v) = (first, second);
            while u != v {
                if t.depth[u] >= t.depth[v] {
                    u = t.parent[u];
                } else {
                    v = t.parent[v];
                }
            }
            u
        };

        let mut delta = f64::INFINITY;
        let mut u_out = NONE;
        let mut side = 0;
        let mut u = first;
        while u != join {
            if t.up[u] && t.flow[u] < delta {
                delta = t.flow[u];
                u_out = u;
                side = 1;
            }
            u = t.parent[u];
        }
        let mut u = second;
        while u != join {
            if !t.up[u] && t.flow[u] <= delta {
                delta = t.flow[u];
                u_out = u;
                side = 2;
            }
            u = t.parent[u];
        }
        if side == 0 {
            return Err(Error::Numerical("unbounded transportation cycle".into()));
        }

        if delta > 0.0 {
            let mut u = first;
            while u != join {
                t.flow[u] = (t.flow[u] + if t.up[u] { -delta } else { delta }).max(0.0);
                u = t.parent[u];
            }
            let mut u = second;
            while u != join {
                t.flow[u] = (t.flow[u] + if t.up[u] { delta } else { -delta }).max(0.0);
                u = t.parent[u];
            }
        }

        let (u_in, v_in) = if side == 1 { (first, second) } else { (second, first) };
        path.clear();
        let mut w = u_in;
        loop {
            path.push(w);
            if w == u_out {
                break;
            }
            w = t.parent[w];
        }
        detach(&mut t.children, t.parent[u_out], u_out);
        saved.clear();
        saved.extend(path.iter().map(|&w| (t.pred[w], t.up[w], t.flow[w])));
        for k in 1..path.len() {
            let (pk, pk1) = (path[k], path[k - 1]);
            let (arc, up, flow) = saved[k - 1];
            t.parent[pk] = pk1;
            t.pred[pk] = arc;
            t.up[pk] = !up;
            t.flow[pk] = flow;
            detach(&mut t.children, pk, pk1);
            t.children[pk1].push(pk);
        }
        t.parent[u_in] = v_in;
        t.pred[u_in] = best;
        t.up[u_in] = u_in == first;
        t.flow[u_in] = delta;
        t.children[v_in].push(u_in);

        stack.clear();
        stack.push(u_in);
        while let Some(w) = stack.pop() {
            let p = t.parent[w];
            let c = arc_cost(t.pred[w]);
            t.pi[w] = if t.up[w] { t.pi[p] - c } else { t.pi[p] + c };
            t.depth[w] = t.depth[p] + 1;
            stack.extend_from_slice(&t.children[w]);
        }
    }

    let mut flows = Vec::with_capacity(nodes);
    let mut total = 0.0;
    let mut artificial: f64 = 0.0;
    for w in 0..nodes {
        let a = t.pred[w];
        if a >= mn {
            artificial = artificial.max(t.flow[w]);
        } else if t.flow[w] > 0.0 {
            flows.push((a / n, a % n, t.flow[w]));
            total += t.flow[w] * cost(a / n, a % n);
        }
    }
    if artificial > 1e-12 {
        return Err(Error::Numerical(format!("transport solver left {artificial} mass on artificial arcs")));
    }
    flows.sort_by_key(|&(i, j, _)| (i, j));
    Ok(Solution { flows, cost: total })
}
