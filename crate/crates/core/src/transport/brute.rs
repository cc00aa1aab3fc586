//! Exhaustive W1 for tiny measures, used as a test oracle.

use std::collections::HashMap;

use super::{ground_cost, is_uniform, DiscreteMeasure};
use crate::error::{Error, Result};

pub const MAX_PERMUTATION_ATOMS: usize = 8;
pub const MAX_VERTEX_ATOMS: usize = 6;

/// Exact W1 by enumeration: all matchings for equal-size uniform inputs with
/// at most 8 atoms, otherwise all vertices of the transportation polytope
/// (at most 6 atoms per side).
pub fn w1_bruteforce(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    super::check_pair(mu, nu)?;
    let (m, n) = (mu.len(), nu.len());
    let c: Vec<Vec<f64>> = (0..m).map(|i| (0..n).map(|j| ground_cost(mu.point(i), nu.point(j))).collect()).collect();
    if m == n && m <= MAX_PERMUTATION_ATOMS && is_uniform(mu) && is_uniform(nu) {
        return Ok(permutations(&c));
    }
    if m.max(n) > MAX_VERTEX_ATOMS {
        return Err(Error::SizeCap { atoms: m.max(n), cap: MAX_VERTEX_ATOMS });
    }
    Ok(vertices(&mu.weights, &nu.weights, &c))
}

/// Minimum average matching cost over all `n!` permutations (Heap's order).
fn permutations(c: &[Vec<f64>]) -> f64 {
    let n = c.len();
    let mut p: Vec<usize> = (0..n).collect();
    let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| c[i][j]).sum::<f64>();
    let mut best = total(&p);
    let mut stack = vec![0usize; n];
    let mut k = 1;
    while k < n {
        if stack[k] < k {
            if k % 2 == 0 {
                p.swap(0, k);
            } else {
                p.swap(stack[k], k);
            }
            best = best.min(total(&p));
            stack[k] += 1;
            k = 1;
        } else {
            stack[k] = 0;
            k += 1;
        }
    }
    best / n as f64
}

struct Search<'a> {
    c: &'a [Vec<f64>],
    best: f64,
    seen: HashMap<(u8, u8, Vec<u64>), f64>,
}

const RESIDUAL_ZERO: f64 = 1e-14;

/// Every vertex of the transportation polytope has a forest support and can
/// be peeled leaf by leaf: pick a cell, ship `min(a_i, b_j)`, drop the
/// exhausted row or column. Enumerating every pick reaches every vertex;
/// states already reached at lower cost are skipped, and branches whose
/// cost plus a lower bound cannot beat the incumbent are cut.
fn vertices(a: &[f64], b: &[f64], c: &[Vec<f64>]) -> f64 {
    let mut s = Search { c, best: f64::INFINITY, seen: HashMap::new() };
    let rows = (1u8 << a.len()) - 1;
    let cols = (1u8 << b.len()) - 1;
    s.visit(a.to_vec(), b.to_vec(), rows, cols, 0.0);
    s.best
}

impl Search<'_> {
    fn visit(&mut self, ra: Vec<f64>, rb: Vec<f64>, rows: u8, cols: u8, acc: f64) {
        if rows == 0 || cols == 0 {
            self.best = self.best.min(acc);
            return;
        }
        let key_bits = ra
            .iter()
            .enumerate()
            .filter(|(i, _)| rows >> i & 1 == 1)
            .chain(rb.iter().enumerate().filter(|(j, _)| cols >> j & 1 == 1))
            .map(|(_, x)| x.to_bits())
            .collect();
        let key = (rows, cols, key_bits);
        if let Some(&prev) = self.seen.get(&key) {
            if prev <= acc {
                return;
            }
        }
        self.seen.insert(key, acc);
        // every remaining unit of mass pays at least its cheapest active cell
        let row_bound: f64 = (0..ra.len())
            .filter(|i| rows >> i & 1 == 1)
            .map(|i| ra[i] * (0..rb.len()).filter(|j| cols >> j & 1 == 1).map(|j| self.c[i][j]).fold(f64::INFINITY, f64::min))
            .sum();
        let col_bound: f64 = (0..rb.len())
            .filter(|j| cols >> j & 1 == 1)
            .map(|j| rb[j] * (0..ra.len()).filter(|i| rows >> i & 1 == 1).map(|i| self.c[i][j]).fold(f64::INFINITY, f64::min))
            .sum();
        if acc + row_bound.max(col_bound) * (1.0 - 1e-12) >= self.best {
            return;
        }
        let mut cells: Vec<(usize, usize)> = (0..ra.len())
            .filter(|i| rows >> i & 1 == 1)
            .flat_map(|i| (0..rb.len()).filter(move |j| cols >> j & 1 == 1).map(move |j| (i, j)))
            .collect();
        cells.sort_by(|p, q| self.c[p.0][p.1].total_cmp(&self.c[q.0][q.1]));
        for (i, j) in cells {
            let x = ra[i].min(rb[j]);
            let (mut na, mut nb) = (ra.clone(), rb.clone());
            na[i] -= x;
            nb[j] -= x;
            let mut nr = rows;
            let mut nc = cols;
            if na[i] <= RESIDUAL_ZERO {
                nr &= !(1 << i);
            }
            if nb[j] <= RESIDUAL_ZERO {
                nc &= !(1 << j);
            }
            self.visit(na, nb, nr, nc, acc + x * self.c[i][j]);
        }
    }
}
