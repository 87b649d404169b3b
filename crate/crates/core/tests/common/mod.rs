//! Brute-force oracles shared by the integration tests. None of them call the
//! engines they are compared against.

#![allow(dead_code)]

use lamplighter::exact::ratio;
use lamplighter::graph::{Graph, GraphSpec, WalkKernel};
use num_rational::BigRational;
use num_traits::{One, Zero};

pub fn whole(text: &str, root: &str) -> Graph {
    let spec = GraphSpec::parse(text).unwrap();
    spec.materialize(&spec.parse_label(root).unwrap(), None).unwrap()
}

pub fn ball(text: &str, radius: usize) -> Graph {
    let spec = GraphSpec::parse(text).unwrap();
    spec.materialize(&spec.default_root(), Some(radius)).unwrap()
}

/// The finite graph induced by the radius-`r` ball of `z2` at the origin.
pub fn z2_ball_graph(r: usize) -> Graph {
    let host = ball("z2", r + 1);
    let spec = host.induced(&host.ball(0, r), &format!("z2-ball-{r}")).unwrap();
    spec.materialize(&spec.parse_label("0,0").unwrap(), None).unwrap()
}

pub fn is_connected(g: &Graph, set: &[usize]) -> bool {
    if set.is_empty() {
        return false;
    }
    let mut seen = vec![set[0]];
    let mut head = 0;
    while head < seen.len() {
        let v = seen[head];
        head += 1;
        for &w in set {
            if !seen.contains(&w) && g.is_adjacent(v, w) {
                seen.push(w);
            }
        }
    }
    seen.len() == set.len()
}

fn combinations(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..pool.len() {
        cur.push(pool[i]);
        combinations(pool, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Connected vertex sets containing `root` with at most `max` vertices, by
/// testing every subset of the ball of radius `max − 1`.
pub fn brute_animals(g: &Graph, root: usize, max: usize) -> Vec<Vec<usize>> {
    let others: Vec<usize> = g
        .ball(root, max.saturating_sub(1))
        .into_iter()
        .filter(|&v| v != root)
        .collect();
    let mut found = Vec::new();
    for k in 0..max.min(others.len() + 1) {
        let mut subsets = Vec::new();
        combinations(&others, k, 0, &mut Vec::new(), &mut subsets);
        for mut s in subsets {
            s.push(root);
            s.sort_unstable();
            if is_connected(g, &s) {
                found.push(s);
            }
        }
    }
    found
}

pub fn counts_by_size(sets: &[Vec<usize>], max: usize) -> Vec<usize> {
    let mut c = vec![0; max];
    for s in sets {
        c[s.len() - 1] += 1;
    }
    c
}

/// `(T_S^n)(root, root)` by exact rational vector iteration inside `set`.
pub fn truncated_return(k: &WalkKernel<'_>, set: &[usize], root: usize, n: u32) -> BigRational {
    let pos = |v: usize| set.iter().position(|&u| u == v);
    let mut cur = vec![BigRational::zero(); set.len()];
    cur[pos(root).unwrap()] = BigRational::one();
    for _ in 0..n {
        let mut next = vec![BigRational::zero(); set.len()];
        for (i, &x) in set.iter().enumerate() {
            if cur[i].is_zero() {
                continue;
            }
            for &y in k.graph().neighbours(x) {
                if let Some(j) = pos(y) {
                    next[j] += &cur[i] * k.prob_exact(x, y);
                }
            }
        }
        cur = next;
    }
    cur[pos(root).unwrap()].clone()
}

/// Lamplighter return probability from its path expansion: every closed
/// path from `root` of length `n`, weighted by its kernel product and
/// `m^{−(distinct vertices)}`.
pub fn lamplighter_by_paths(k: &WalkKernel<'_>, root: usize, m: u32, n: u32) -> BigRational {
    if n == 0 {
        return BigRational::one();
    }
    fn walk(k: &WalkKernel<'_>, root: usize, m: u32, path: &mut Vec<usize>, left: u32, w: BigRational) -> BigRational {
        let at = *path.last().unwrap();
        if left == 0 {
            if at != root {
                return BigRational::zero();
            }
            let mut distinct = path.clone();
            distinct.sort_unstable();
            distinct.dedup();
            return w * num_traits::pow(ratio(1, m), distinct.len());
        }
        let mut acc = BigRational::zero();
        for &y in k.graph().neighbours(at) {
            let step = &w * k.prob_exact(at, y);
            path.push(y);
            acc += walk(k, root, m, path, left - 1, step);
            path.pop();
        }
        acc
    }
    walk(k, root, m, &mut vec![root], n, BigRational::one())
}

/// `𝔼 p_C⁽ⁿ⁾(root, root)` by summing over all `2^|V|` open/closed site
/// assignments of a finite graph.
pub fn expected_return_by_site_configurations(k: &WalkKernel<'_>, root: usize, p: &BigRational, n: u32) -> BigRational {
    let g = k.graph();
    let v = g.len();
    assert!(v <= 16, "exhaustive oracle limited to 16 vertices");
    let q = BigRational::one() - p;
    let mut total = BigRational::zero();
    for mask in 0u32..(1 << v) {
        let open = |x: usize| mask & (1 << x) != 0;
        let k_open = mask.count_ones() as usize;
        let weight = num_traits::pow(p.clone(), k_open) * num_traits::pow(q.clone(), v - k_open);
        if !open(root) {
            if n == 0 {
                total += weight;
            }
            continue;
        }
        let mut cluster = vec![root];
        let mut head = 0;
        while head < cluster.len() {
            let x = cluster[head];
            head += 1;
            for &y in g.neighbours(x) {
                if open(y) && !cluster.contains(&y) {
                    cluster.push(y);
                }
            }
        }
        total += weight * truncated_return(k, &cluster, root, n);
    }
    total
}
