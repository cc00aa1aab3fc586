//! Dense linear assignment (Jonker-Volgenant) with costs computed on demand.

const NONE: usize = usize::MAX;

/// Returns `rowsol` with `rowsol[i]` the column matched to row `i`.
pub(crate) fn solve<C>(n: usize, cost: C) -> Vec<usize>
where
    C: Fn(usize, usize) -> f64,
{
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![0];
    }
    let mut rowsol = vec![NONE; n];
    let mut colsol = vec![NONE; n];
    let mut v = vec![0.0; n];
    let mut matches = vec![0u32; n];

    // column reduction
    for j in (0..n).rev() {
        let (mut min, mut imin) = (cost(0, j), 0);
        for i in 1..n {
            let c = cost(i, j);
            if c < min {
                min = c;
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            rowsol[imin] = j;
            colsol[j] = imin;
        } else if v[j] < v[rowsol[imin]] {
            let j1 = rowsol[imin];
            rowsol[imin] = j;
            colsol[j] = imin;
            colsol[j1] = NONE;
        } else {
            colsol[j] = NONE;
        }
    }

    // reduction transfer
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        match matches[i] {
            0 => free.push(i),
            1 => {
                let j1 = rowsol[i];
                let min = (0..n).filter(|&j| j != j1).map(|j| cost(i, j) - v[j]).fold(f64::INFINITY, f64::min);
                v[j1] -= min;
            }
            _ => {}
        }
    }

    // augmenting row reduction, two passes with a restart budget
    let mut budget = 4 * n;
    for _ in 0..2 {
        let previous = std::mem::take(&mut free);
        let mut queue = previous;
        let mut k = 0;
        while k < queue.len() {
            let i = queue[k];
            k += 1;
            let (mut umin, mut j1) = (cost(i, 0) - v[0], 0);
            let (mut usubmin, mut j2) = (f64::INFINITY, NONE);
            for j in 1..n {
                let h = cost(i, j) - v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            let mut i0 = colsol[j1];
            let strict = umin < usubmin;
            if strict {
                v[j1] -= usubmin - umin;
            } else if i0 != NONE {
                j1 = j2;
                i0 = colsol[j2];
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if i0 != NONE {
                rowsol[i0] = NONE;
                if strict && budget > 0 {
                    budget -= 1;
                    k -= 1;
                    queue[k] = i0;
                } else {
                    free.push(i0);
                }
            }
        }
    }

    // shortest augmenting paths
    let mut d = vec![0.0; n];
    let mut pred = vec![0usize; n];
    let mut collist: Vec<usize> = (0..n).collect();
    for &freerow in &free {
        for j in 0..n {
            d[j] = cost(freerow, j) - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        let (mut low, mut up) = (0usize, 0usize);
        let mut last = 0usize;
        let mut min = 0.0;
        let endofpath;
        'search: loop {
            if up == low {
                last = low;
                min = d[collist[up]];
                up += 1;
                for k in up..n {
                    let j = collist[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                }
                for &j in &collist[low..up] {
                    if colsol[j] == NONE {
                        endofpath = j;
                        break 'search;
                    }
                }
            }
            let j1 = collist[low];
            low += 1;
            let i = colsol[j1];
            let h = cost(i, j1) - v[j1] - min;
            let mut k = up;
            while k < n {
                let j = collist[k];
                let v2 = cost(i, j) - v[j] - h;
                if v2 < d[j] {
                    pred[j] = i;
                    if v2 == min {
                        if colsol[j] == NONE {
                            d[j] = v2;
                            endofpath = j;
                            break 'search;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                    d[j] = v2;
                }
                k += 1;
            }
        }
        // columns scanned before the last minimum update are ready
        for &j in &collist[..last] {
            v[j] += d[j] - min;
        }
        let mut end = endofpath;
        loop {
            let i = pred[end];
            colsol[end] = i;
            let j1 = end;
            end = rowsol[i];
            rowsol[i] = j1;
            if i == freerow {
                break;
            }
        }
    }
    rowsol
}
