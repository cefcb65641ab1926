use std::f64::consts::PI;

/// Solves `a x = b` for a symmetric positive definite `a` by Cholesky.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).max(1e-300).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

/// Ridge regression with an unpenalized intercept: returns `(w, b)` per
/// output column. `lambda = 0` is ordinary least squares.
pub fn ridge_fit(x: &[Vec<f64>], y: &[Vec<f64>], lambda: f64) -> Vec<(Vec<f64>, f64)> {
    let n = x.len();
    let d = x[0].len();
    let xm: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut gram = vec![vec![0.0; d]; d];
    for r in x {
        for i in 0..d {
            for j in 0..d {
                gram[i][j] += (r[i] - xm[i]) * (r[j] - xm[j]);
            }
        }
    }
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += lambda + 1e-12;
    }
    (0..y[0].len())
        .map(|o| {
            let ym = y.iter().map(|r| r[o]).sum::<f64>() / n as f64;
            let rhs: Vec<f64> = (0..d)
                .map(|i| x.iter().zip(y).map(|(r, t)| (r[i] - xm[i]) * (t[o] - ym)).sum())
                .collect();
            let w = cholesky_solve(&gram, &rhs);
            let b = ym - w.iter().zip(&xm).map(|(a, m)| a * m).sum::<f64>();
            (w, b)
        })
        .collect()
}

pub fn ridge_predict(model: &[(Vec<f64>, f64)], x: &[f64]) -> Vec<f64> {
    model
        .iter()
        .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

/// Test RMSE of a least-squares fit trained on `(x_train, y_train)`.
pub fn least_squares_rmse(x_train: &[Vec<f64>], y_train: &[f64], x_test: &[Vec<f64>], y_test: &[f64]) -> f64 {
    let y: Vec<Vec<f64>> = y_train.iter().map(|v| vec![*v]).collect();
    let model = ridge_fit(x_train, &y, 0.0);
    let se: f64 = x_test
        .iter()
        .zip(y_test)
        .map(|(r, t)| (ridge_predict(&model, r)[0] - t).powi(2))
        .sum();
    (se / y_test.len() as f64).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Direct DFT magnitude peak over `[lo, hi]` Hz in 0.1 Hz steps, refined by a
/// golden-section search. Independent of any FFT library.
pub fn dominant_frequency(x: &[f32], sr: f64, lo: f64, hi: f64) -> f64 {
    let power = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, v) in x.iter().enumerate() {
            let a = 2.0 * PI * f * n as f64 / sr;
            re += *v as f64 * a.cos();
            im -= *v as f64 * a.sin();
        }
        re * re + im * im
    };
    let mut best = lo;
    let mut best_p = f64::MIN;
    let mut f = lo;
    while f <= hi {
        let p = power(f);
        if p > best_p {
            best_p = p;
            best = f;
        }
        f += 1.0;
    }
    let (mut a, mut b) = (best - 1.0, best + 1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if power(c) > power(d) {
            b = d;
        } else {
            a = c;
        }
    }
    (a + b) / 2.0
}

/// Reverberation time from Schroeder backward integration, fitting the
/// energy decay curve between -5 dB and -25 dB and extrapolating to -60 dB.
pub fn schroeder_t60(ir: &[f32], sr: f64) -> f64 {
    let mut edc = vec![0.0f64; ir.len()];
    let mut acc = 0.0;
    for i in (0..ir.len()).rev() {
        acc += (ir[i] as f64).powi(2);
        edc[i] = acc;
    }
    let total = edc[0];
    let db: Vec<f64> = edc.iter().map(|e| 10.0 * (e / total).max(1e-30).log10()).collect();
    let pts: Vec<(f64, f64)> = db
        .iter()
        .enumerate()
        .filter(|(_, d)| (-25.0..=-5.0).contains(*d))
        .map(|(i, d)| (i as f64 / sr, *d))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let md = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - md)).sum::<f64>() / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    -60.0 / slope
}
