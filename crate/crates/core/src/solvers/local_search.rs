//! Best-improvement 2-opt plus single-city relocate on a closed tour.

use crate::Scalar;

#[derive(Debug, Clone, Copy)]
enum Move {
    /// Reverse `tour[i+1..=j]`.
    TwoOpt(usize, usize),
    /// Move the city at position `i` to just after position `j`.
    Relocate(usize, usize),
}

fn two_opt_delta<S: Scalar>(dist: &impl Fn(usize, usize) -> S, t: &[usize], i: usize, j: usize) -> Option<S> {
    let n = t.len();
    if j < i + 2 || (i == 0 && j == n - 1) {
        return None;
    }
    let (a, b, c, e) = (t[i], t[i + 1], t[j], t[(j + 1) % n]);
    Some(dist(a, c) + dist(b, e) - dist(a, b) - dist(c, e))
}

fn relocate_delta<S: Scalar>(dist: &impl Fn(usize, usize) -> S, t: &[usize], i: usize, j: usize) -> Option<S> {
    let n = t.len();
    if j == i || j == (i + n - 1) % n {
        return None;
    }
    let c = t[i];
    let p = t[(i + n - 1) % n];
    let q = t[(i + 1) % n];
    let x = t[j];
    let y = t[(j + 1) % n];
    Some(dist(p, q) - dist(p, c) - dist(c, q) + dist(x, c) + dist(c, y) - dist(x, y))
}

fn apply(t: &mut Vec<usize>, mv: Move) {
    match mv {
        Move::TwoOpt(i, j) => t[i + 1..=j].reverse(),
        Move::Relocate(i, j) => {
            let c = t.remove(i);
            let at = if j > i { j } else { j + 1 };
            t.insert(at, c);
        }
    }
}

struct Best<S> {
    delta: S,
    mv: Option<Move>,
}

impl<S: Scalar> Best<S> {
    fn offer(&mut self, delta: Option<S>, mv: Move) {
        if let Some(d) = delta {
            if d < self.delta {
                self.delta = d;
                self.mv = Some(mv);
            }
        }
    }
}

/// Most improving 2-opt move and its delta, if any move exists.
pub fn best_two_opt_delta<S: Scalar>(dist: &impl Fn(usize, usize) -> S, tour: &[usize]) -> Option<(S, usize, usize)> {
    let n = tour.len();
    let mut best: Option<(S, usize, usize)> = None;
    for i in 0..n {
        for j in i + 2..n {
            if let Some(d) = two_opt_delta(dist, tour, i, j) {
                if best.is_none_or(|(b, _, _)| d < b) {
                    best = Some((d, i, j));
                }
            }
        }
    }
    best
}

fn full_pass<S: Scalar>(dist: &impl Fn(usize, usize) -> S, t: &[usize]) -> Best<S> {
    let n = t.len();
    let mut best = Best { delta: -S::improvement_tolerance(), mv: None };
    for i in 0..n {
        for j in i + 2..n {
            best.offer(two_opt_delta(dist, t, i, j), Move::TwoOpt(i, j));
        }
    }
    for i in 0..n {
        for j in 0..n {
            best.offer(relocate_delta(dist, t, i, j), Move::Relocate(i, j));
        }
    }
    best
}

fn focused_pass<S: Scalar>(dist: &impl Fn(usize, usize) -> S, t: &[usize], focus: &[usize]) -> Best<S> {
    let n = t.len();
    let mut pos = vec![usize::MAX; n.max(focus.iter().copied().max().map_or(0, |m| m + 1))];
    for (p, &c) in t.iter().enumerate() {
        pos[c] = p;
    }
    // Edge e runs from position e to e + 1; keep the ones touching a focus city.
    let mut edges: Vec<usize> = Vec::new();
    for &c in focus {
        let p = pos[c];
        if p == usize::MAX {
            continue;
        }
        edges.push((p + n - 1) % n);
        edges.push(p);
    }
    edges.sort_unstable();
    edges.dedup();
    let movers: Vec<usize> = edges.iter().flat_map(|&e| [e, (e + 1) % n]).collect();

    let mut best = Best { delta: -S::improvement_tolerance(), mv: None };
    for &e in &edges {
        for other in 0..n {
            let (i, j) = if e < other { (e, other) } else { (other, e) };
            best.offer(two_opt_delta(dist, t, i, j), Move::TwoOpt(i, j));
        }
    }
    for &i in &movers {
        for j in 0..n {
            best.offer(relocate_delta(dist, t, i, j), Move::Relocate(i, j));
        }
    }
    for i in 0..n {
        for &j in &edges {
            best.offer(relocate_delta(dist, t, i, j), Move::Relocate(i, j));
        }
    }
    best
}

fn descend<S: Scalar>(tour: &mut Vec<usize>, mut pass: impl FnMut(&[usize]) -> Best<S>) -> usize {
    if tour.len() < 4 {
        return 0;
    }
    let cap = 50 * tour.len() * tour.len();
    let mut moves = 0;
    while moves < cap {
        match pass(tour).mv {
            Some(mv) => {
                apply(tour, mv);
                moves += 1;
            }
            None => break,
        }
    }
    moves
}

/// Runs to a local optimum over the whole tour. Returns the number of moves applied.
pub fn local_search<S: Scalar>(dist: &impl Fn(usize, usize) -> S, tour: &mut Vec<usize>) -> usize {
    descend(tour, |t| full_pass(dist, t))
}

/// Runs to a local optimum over moves that remove an edge incident to one
/// of the `focus` cities.
pub fn local_search_around<S: Scalar>(dist: &impl Fn(usize, usize) -> S, tour: &mut Vec<usize>, focus: &[usize]) -> usize {
    descend(tour, |t| focused_pass(dist, t, focus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cop::tour_length;
    use crate::matrix::Matrix;

    fn square() -> Matrix<f64> {
        let c = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        Matrix::from_fn(4, 4, |i, j| {
            let (dx, dy): (f64, f64) = (c[i][0] - c[j][0], c[i][1] - c[j][1]);
            (dx * dx + dy * dy).sqrt()
        })
    }

    #[test]
    fn uncrosses_a_square() {
        let d = square();
        let mut t = vec![0, 2, 1, 3];
        local_search(&|i, j| d[(i, j)], &mut t);
        assert!((tour_length(&d, &t) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn relocate_keeps_permutation() {
        for (i, j) in [(0, 2), (3, 0), (1, 3), (2, 0)] {
            let mut t = vec![0, 1, 2, 3, 4];
            apply(&mut t, Move::Relocate(i, j));
            let mut s = t.clone();
            s.sort_unstable();
            assert_eq!(s, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn focused_search_fixes_crossing_near_focus() {
        let d = square();
        let mut t = vec![0, 2, 1, 3];
        local_search_around(&|i, j| d[(i, j)], &mut t, &[0, 2]);
        assert!((tour_length(&d, &t) - 4.0).abs() < 1e-12);
    }
}
