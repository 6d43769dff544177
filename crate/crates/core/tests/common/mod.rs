#![allow(dead_code)]

use stackdec_core::EffectSet;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Least-squares coefficients of `z` on the columns via the normal equations.
pub fn lstsq(columns: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
    let p = columns.len();
    let gram = (0..p)
        .map(|i| (0..p).map(|j| dot(&columns[i], &columns[j])).collect())
        .collect();
    let rhs = columns.iter().map(|c| dot(c, z)).collect();
    solve(gram, rhs)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn combine(columns: &[Vec<f64>], coef: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; columns[0].len()];
    for (c, w) in columns.iter().zip(coef) {
        out.iter_mut().zip(c).for_each(|(o, x)| *o += w * x);
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn mean(a: &[f64]) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64
}

pub fn sd(a: &[f64]) -> f64 {
    let m = mean(a);
    (a.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

/// Direct transcription of the descending-level projection with explicit
/// normal-equation solves. `bases[0]` is the ones column.
pub fn oracle(set: &EffectSet, bases: &[Vec<Vec<f64>>], weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut f: Vec<Vec<f64>> = bases.iter().zip(weights).map(|(b, w)| combine(b, w)).collect();
    let mut levels = set.levels();
    levels.reverse();
    for k in levels {
        let lower: Vec<usize> = (0..bases.len())
            .filter(|&s| s == 0 || set.terms()[s - 1].level() < k)
            .collect();
        let actual: Vec<usize> = (1..bases.len()).filter(|&s| set.terms()[s - 1].level() == k).collect();
        let cols: Vec<Vec<f64>> = lower.iter().flat_map(|&s| bases[s].clone()).collect();
        let mut gamma_sum = vec![0.0; cols.len()];
        for &a in &actual {
            let g = lstsq(&cols, &f[a]);
            let fit = combine(&cols, &g);
            f[a].iter_mut().zip(&fit).for_each(|(v, p)| *v -= p);
            gamma_sum.iter_mut().zip(&g).for_each(|(s, x)| *s += x);
        }
        let mut off = 0;
        for &s in &lower {
            let w = bases[s].len();
            let add = combine(&bases[s], &gamma_sum[off..off + w]);
            f[s].iter_mut().zip(&add).for_each(|(v, a)| *v += a);
            off += w;
        }
    }
    let mut moved = 0.0;
    for v in f.iter_mut().skip(1) {
        let m = mean(v);
        v.iter_mut().for_each(|x| *x -= m);
        moved += m;
    }
    f[0].iter_mut().for_each(|x| *x += moved);
    f
}
