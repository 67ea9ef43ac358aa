//! Exhaustive oracles. They recompute costs from raw coordinates and
//! sizes rather than reusing library code.
#![allow(dead_code)]

use motif_core::cop::InstanceData;
use motif_core::Instance;

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn permutations(items: &[usize], out: &mut Vec<Vec<usize>>) {
    fn rec(cur: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for k in 0..rest.len() {
            let x = rest.remove(k);
            cur.push(x);
            rec(cur, rest, out);
            cur.pop();
            rest.insert(k, x);
        }
    }
    rec(&mut Vec::new(), &mut items.to_vec(), out);
}

pub fn all_permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    permutations(items, &mut out);
    out
}

/// Minimum closed tour length over every tour starting at city 0.
pub fn tsp_optimum(coords: &[[f64; 2]]) -> (f64, Vec<usize>) {
    let n = coords.len();
    let rest: Vec<usize> = (1..n).collect();
    let mut best = (f64::INFINITY, Vec::new());
    for p in all_permutations(&rest) {
        let mut tour = vec![0];
        tour.extend(p);
        let len: f64 = (0..n).map(|k| dist(coords[tour[k]], coords[tour[(k + 1) % n]])).sum();
        if len < best.0 {
            best = (len, tour);
        }
    }
    best
}

/// Minimum total route length: every customer order combined with every
/// way of cutting it into consecutive routes.
pub fn cvrp_optimum(inst: &Instance) -> (f64, Vec<Vec<usize>>) {
    let InstanceData::Cvrp { coords, demands, capacity, .. } = &inst.data else { panic!("cvrp expected") };
    let n = coords.len() - 1;
    let customers: Vec<usize> = (1..=n).collect();
    let mut best = (f64::INFINITY, Vec::new());
    for order in all_permutations(&customers) {
        for mask in 0..(1u32 << (n - 1)) {
            let mut routes = vec![vec![order[0]]];
            for k in 1..n {
                if mask & (1 << (k - 1)) != 0 {
                    routes.push(Vec::new());
                }
                routes.last_mut().unwrap().push(order[k]);
            }
            if routes.iter().any(|r| r.iter().map(|&c| demands[c]).sum::<f64>() > *capacity + 1e-9) {
                continue;
            }
            let len: f64 = routes
                .iter()
                .map(|r| {
                    let mut l = dist(coords[0], coords[r[0]]) + dist(coords[*r.last().unwrap()], coords[0]);
                    for w in r.windows(2) {
                        l += dist(coords[w[0]], coords[w[1]]);
                    }
                    l
                })
                .sum();
            if len < best.0 {
                best = (len, routes);
            }
        }
    }
    best
}

/// Fewest bins, by branch and bound over canonical assignments.
pub fn bpp_optimum(sizes: &[f64], capacity: f64) -> (usize, Vec<usize>) {
    fn rec(k: usize, sizes: &[f64], cap: f64, loads: &mut Vec<f64>, labels: &mut Vec<usize>, best: &mut (usize, Vec<usize>)) {
        if loads.len() >= best.0 {
            return;
        }
        if k == sizes.len() {
            *best = (loads.len(), labels.clone());
            return;
        }
        for b in 0..loads.len() {
            if loads[b] + sizes[k] <= cap + 1e-9 {
                loads[b] += sizes[k];
                labels[k] = b;
                rec(k + 1, sizes, cap, loads, labels, best);
                loads[b] -= sizes[k];
            }
        }
        loads.push(sizes[k]);
        labels[k] = loads.len() - 1;
        rec(k + 1, sizes, cap, loads, labels, best);
        loads.pop();
    }
    let mut best = (usize::MAX, Vec::new());
    rec(0, sizes, capacity, &mut Vec::new(), &mut vec![0; sizes.len()], &mut best);
    best
}

/// Largest total prize over every capacity-respecting assignment.
pub fn mkp_optimum(prizes: &[f64], weights: &[Vec<f64>], capacities: &[f64]) -> (f64, Vec<Option<usize>>) {
    let (m, n) = (capacities.len(), prizes.len());
    let mut best = (0.0, vec![None; n]);
    let mut code = vec![0usize; n];
    loop {
        let mut loads = vec![0.0; m];
        let mut profit = 0.0;
        for j in 0..n {
            if code[j] > 0 {
                loads[code[j] - 1] += weights[code[j] - 1][j];
                profit += prizes[j];
            }
        }
        if loads.iter().zip(capacities).all(|(l, c)| *l <= c + 1e-9) && profit > best.0 {
            best = (profit, code.iter().map(|&c| if c == 0 { None } else { Some(c - 1) }).collect());
        }
        let mut k = 0;
        while k < n {
            code[k] += 1;
            if code[k] <= m {
                break;
            }
            code[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    best
}

/// Largest prize over every simple path from the depot within budget.
pub fn op_optimum(coords: &[[f64; 2]], prizes: &[f64], budget: f64) -> (f64, Vec<usize>) {
    fn rec(cur: usize, len: f64, prize: f64, path: &mut Vec<usize>, c: &[[f64; 2]], p: &[f64], b: f64, best: &mut (f64, Vec<usize>)) {
        if prize > best.0 {
            *best = (prize, path.clone());
        }
        for j in 0..c.len() {
            if path.contains(&j) {
                continue;
            }
            let l = len + dist(c[cur], c[j]);
            if l <= b + 1e-9 {
                path.push(j);
                rec(j, l, prize + p[j], path, c, p, b, best);
                path.pop();
            }
        }
    }
    let mut best = (prizes[0], vec![0]);
    rec(0, 0.0, prizes[0], &mut vec![0], coords, prizes, budget, &mut best);
    best
}
