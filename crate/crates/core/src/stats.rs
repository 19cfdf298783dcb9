//! Correlation and association statistics.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, DefaultHasher, Hash};

use crate::error::{Error, Result};

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Input(format!("series lengths differ: {} and {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite value in series".into()));
    }
    Ok(())
}

// fixed keys, so iteration and summation order repeat across runs
type StableMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // a series whose spread is pure rounding noise counts as constant
    let tiny = |s: f64, m: f64| s <= (1e-13 * m.abs().max(f64::MIN_POSITIVE)).powi(2) * xs.len() as f64;
    if tiny(sxx, mx) || tiny(syy, my) {
        return Err(Error::UndefinedCorrelation("constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation: Pearson of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Cramér's V of a dense contingency table, without bias correction. Rows
/// and columns with zero marginals are ignored; fewer than two of either
/// gives 0.
pub fn cramers_v(table: &[Vec<u64>]) -> f64 {
    let mut cells = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                cells.push(((i, j), c));
            }
        }
    }
    cramers_v_sparse(cells)
}

/// Cramér's V from the non-zero cells of a table, keyed by (row, column).
pub fn cramers_v_sparse<R, C>(cells: impl IntoIterator<Item = ((R, C), u64)>) -> f64
where
    R: Eq + Hash + Clone,
    C: Eq + Hash + Clone,
{
    let mut rows: StableMap<R, f64> = StableMap::default();
    let mut cols: StableMap<C, f64> = StableMap::default();
    let mut nonzero = Vec::new();
    let mut n = 0.0;
    for ((r, c), count) in cells {
        if count == 0 {
            continue;
        }
        let w = count as f64;
        *rows.entry(r.clone()).or_insert(0.0) += w;
        *cols.entry(c.clone()).or_insert(0.0) += w;
        nonzero.push((r, c, w));
        n += w;
    }
    let k = rows.len().min(cols.len());
    if k < 2 || n == 0.0 {
        return 0.0;
    }
    // chi^2 = n (sum O^2 / (R C) - 1), which only touches non-zero cells
    let s: f64 = nonzero.iter().map(|(r, c, o)| o * o / (rows[r] * cols[c])).sum();
    let chi2 = (n * (s - 1.0)).max(0.0);
    (chi2 / (n * (k - 1) as f64)).sqrt().min(1.0)
}

/// Cramér's V between consecutive elements of a sequence.
pub fn lag_one_cramers_v<T: Eq + Hash + Clone>(seq: &[T]) -> f64 {
    let mut counts: StableMap<(T, T), u64> = StableMap::default();
    for w in seq.windows(2) {
        *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
    }
    cramers_v_sparse(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // deviations (-1.5,-0.5,0.5,1.5) both sides, permuted: sxy = 4, sxx = syy = 5
        assert!((pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::UndefinedCorrelation(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_cases() {
        assert!((spearman(&[1.0, 5.0, 9.0], &[0.1, 0.2, 7.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 5.0, 9.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4): sxy = 4.5, sxx = 4.5, syy = 5
        let want = 4.5 / (4.5f64.sqrt() * 5f64.sqrt());
        assert!((spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap() - want).abs() < 1e-15);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn cramers_v_cases() {
        assert_eq!(cramers_v(&[vec![25, 25], vec![25, 25]]), 0.0);
        assert!((cramers_v(&[vec![50, 0], vec![0, 50]]) - 1.0).abs() < 1e-15);
        // expected 20 everywhere: chi^2 = 4 * 100 / 20 = 20, V = sqrt(20 / 80)
        assert!((cramers_v(&[vec![30, 10], vec![10, 30]]) - 0.5).abs() < 1e-15);
        assert_eq!(cramers_v(&[vec![5, 7]]), 0.0);
    }

    #[test]
    fn lag_one() {
        let alt: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        assert!((lag_one_cramers_v(&alt) - 1.0).abs() < 1e-12);
        assert_eq!(lag_one_cramers_v(&[3u8; 10]), 0.0);
    }
}
