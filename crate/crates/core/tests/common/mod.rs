#![allow(dead_code)]

use maxosc::systems::{ShiftSystem, ToralSystem};
use nalgebra::{DMatrix, DVector};

/// Longest shortest edge-path (of length ≥ 1) between two symbols.
pub fn bfs_max_gap(sys: &ShiftSystem) -> u64 {
    let rows = sys.transition_rows();
    let n = rows.len();
    let mut worst = 0;
    for a in 0..n {
        let mut dist = vec![u64::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for b in 0..n {
            if rows[a][b] {
                dist[b] = 1;
                queue.push_back(b);
            }
        }
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if rows[u][v] && dist[v] == u64::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        worst = worst.max(*dist.iter().max().unwrap());
    }
    worst
}

/// Solves `w_{n+1} = L w_n + e_n` (indices mod `p`) as one dense system.
pub fn dense_periodic_corrections(sys: &ToralSystem, errors: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let p = errors.len();
    let l = sys.matrix();
    let mut a = DMatrix::<f64>::zeros(2 * p, 2 * p);
    let mut rhs = DVector::<f64>::zeros(2 * p);
    for n in 0..p {
        let m = (n + 1) % p;
        for r in 0..2 {
            for c in 0..2 {
                a[(2 * n + r, 2 * n + c)] += l[r][c] as f64;
            }
            a[(2 * n + r, 2 * m + r)] -= 1.0;
            rhs[2 * n + r] = -errors[n][r];
        }
    }
    let w = a.lu().solve(&rhs).expect("hyperbolic system is invertible");
    (0..p).map(|n| [w[2 * n], w[2 * n + 1]]).collect()
}

/// Occurrences of `w` starting in one period of the cycle, read with wrap.
pub fn cyclic_count(cycle: &[u8], w: &[u8]) -> u64 {
    let p = cycle.len();
    (0..p)
        .filter(|&i| w.iter().enumerate().all(|(k, &s)| cycle[(i + k) % p] == s))
        .count() as u64
}
