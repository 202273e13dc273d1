//! Reference implementations used as oracles. Each follows the textbook
//! definition directly and shares no code with the library path it checks.
#![allow(dead_code)]

use rand::Rng;

/// All candidates sorted by (distance, time), self excluded, first `k` kept.
pub fn brute_force_neighbors(
    points: &[(usize, Vec<f64>)],
    query_time: usize,
    library: &[usize],
    k: usize,
) -> Option<(Vec<usize>, Vec<f64>)> {
    let query = &points.iter().find(|(t, _)| *t == query_time)?.1;
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .filter(|(t, _)| *t != query_time && library.contains(t))
        .map(|(t, p)| {
            let d2: f64 = p.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum();
            (d2.sqrt(), *t)
        })
        .collect();
    if all.len() < k {
        return None;
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    Some((all.iter().map(|p| p.1).collect(), all.iter().map(|p| p.0).collect()))
}

/// Pearson correlation from raw sums: (nΣxy − ΣxΣy) / √((nΣx² − (Σx)²)(nΣy² − (Σy)²)).
pub fn raw_sum_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// Residuals of the least-squares fit `v ≈ α + β c`.
pub fn residuals(v: &[f64], c: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mc = c.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let scc: f64 = c.iter().map(|x| (x - mc).powi(2)).sum();
    let scv: f64 = c.iter().zip(v).map(|(x, y)| (x - mc) * (y - mv)).sum();
    let beta = scv / scc;
    let alpha = mv - beta * mc;
    v.iter().zip(c).map(|(y, x)| y - alpha - beta * x).collect()
}

/// Partial correlation as the correlation of regression residuals.
pub fn residual_regression_partial(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let ra = residuals(a, c);
    let rb = residuals(b, c);
    let dot: f64 = ra.iter().zip(&rb).map(|(x, y)| x * y).sum();
    let na: f64 = ra.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = rb.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Delay vectors by explicit index shifting on a 0-based slice; returned
/// times are 1-based.
pub fn index_shift_embed(values: &[f64], dim: usize, tau: usize) -> Vec<(usize, Vec<f64>)> {
    let span = (dim - 1) * tau;
    let mut out = Vec::new();
    let mut i = span;
    while i < values.len() {
        let mut v = Vec::with_capacity(dim);
        for lag in 0..dim {
            v.push(values[i - lag * tau]);
        }
        out.push((i + 1, v));
        i += 1;
    }
    out
}

/// Explicit exp(−d/d₁) normalization.
pub fn exp_weights(distances: &[f64]) -> Vec<f64> {
    let u: Vec<f64> = distances.iter().map(|d| (-d / distances[0]).exp()).collect();
    let s: f64 = u.iter().sum();
    u.iter().map(|x| x / s).collect()
}

pub fn random_points<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<(usize, Vec<f64>)> {
    (1..=n)
        .map(|t| (t, (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect()
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, i) in idx.into_iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    raw_sum_pearson(&ranks(a), &ranks(b))
}

/// Logistic map trajectory with `burn` discarded iterations.
pub fn logistic(r: f64, x0: f64, n: usize, burn: usize) -> Vec<f64> {
    let mut x = x0;
    for _ in 0..burn {
        x = r * x * (1.0 - x);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(x);
        x = r * x * (1.0 - x);
    }
    out
}
