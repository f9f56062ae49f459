#![allow(dead_code)]

use motion_sync::dp::CostOracle;

/// Row-major random grid in [0, 1).
pub fn random_grid(rows: usize, cols: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..rows * cols).map(|_| rng.random::<f64>()).collect()
}

pub fn oracle(rows: usize, cols: usize, values: &[f64]) -> CostOracle<'static> {
    CostOracle::from_matrix(rows, cols, values.to_vec())
}

/// Minimum over every monotone lattice path from (0,0) to (rows−1, cols−1)
/// passing through all `through` cells, found by explicit enumeration.
pub fn brute_force(rows: usize, cols: usize, values: &[f64], through: &[(usize, usize)]) -> f64 {
    fn walk(
        i: usize,
        j: usize,
        acc: f64,
        seen: usize,
        rows: usize,
        cols: usize,
        values: &[f64],
        through: &[(usize, usize)],
        best: &mut f64,
    ) {
        let acc = acc + values[i * cols + j];
        let seen = if seen < through.len() && through[seen] == (i, j) { seen + 1 } else { seen };
        if seen < through.len() && (through[seen].0 < i || through[seen].1 < j) {
            return;
        }
        if i == rows - 1 && j == cols - 1 {
            if seen == through.len() && acc < *best {
                *best = acc;
            }
            return;
        }
        if i + 1 < rows && j + 1 < cols {
            walk(i + 1, j + 1, acc, seen, rows, cols, values, through, best);
        }
        if i + 1 < rows {
            walk(i + 1, j, acc, seen, rows, cols, values, through, best);
        }
        if j + 1 < cols {
            walk(i, j + 1, acc, seen, rows, cols, values, through, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(0, 0, 0.0, 0, rows, cols, values, through, &mut best);
    best
}

/// Sum of grid values along a path.
pub fn path_cost(cols: usize, values: &[f64], path: &[(usize, usize)]) -> f64 {
    path.iter().map(|&(i, j)| values[i * cols + j]).sum()
}
