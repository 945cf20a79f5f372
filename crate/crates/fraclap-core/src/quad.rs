//! Gauss–Legendre nodes/weights (Newton iteration on P_n) and small
//! quadrature helpers shared by the singular-integral, extension and
//! model-verification modules.

/// Nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(z) and P'_n(z)
            let mut p0 = 1.0f64;
            let mut p1 = 0.0f64;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let d = 0.5 * (b + a);
    (
        x.iter().map(|&t| c * t + d).collect(),
        w.iter().map(|&t| c * t).collect(),
    )
}

/// Integrate f over [a, b] with an n-point rule.
pub fn integrate<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, mut f: F) -> f64 {
    let (x, w) = gauss_legendre_on(n, a, b);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

/// Ordinary least squares for a small column set; returns coefficients.
/// Normal equations with full pivoting are plenty for <= 5 columns.
pub fn lstsq(columns: &[Vec<f64>], rhs: &[f64], weights: Option<&[f64]>) -> Vec<f64> {
    let p = columns.len();
    let n = rhs.len();
    let wt = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut ata = vec![vec![0.0f64; p]; p];
    let mut atb = vec![0.0f64; p];
    for i in 0..n {
        let w2 = wt(i) * wt(i);
        for a in 0..p {
            atb[a] += w2 * columns[a][i] * rhs[i];
            for b in a..p {
                ata[a][b] += w2 * columns[a][i] * columns[b][i];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            ata[a][b] = ata[b][a];
        }
    }
    // Gaussian elimination with partial pivoting
    let mut m = ata;
    let mut v = atb;
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        v.swap(col, piv);
        let d = m[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for r in col + 1..p {
            let f = m[r][col] / d;
            for c in col..p {
                m[r][c] -= f * m[col][c];
            }
            v[r] -= f * v[col];
        }
    }
    let mut beta = vec![0.0f64; p];
    for col in (0..p).rev() {
        let mut s = v[col];
        for c in col + 1..p {
            s -= m[col][c] * beta[c];
        }
        beta[col] = if m[col][col].abs() < 1e-300 {
            0.0
        } else {
            s / m[col][col]
        };
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        // n-point GL is exact through degree 2n-1
        let v = integrate(8, -1.0, 3.0, |x| x.powi(12) - 2.0 * x.powi(5) + 1.0);
        let exact = (3.0f64.powi(13) - (-1.0f64).powi(13)) / 13.0
            - 2.0 * (3.0f64.powi(6) - 1.0) / 6.0
            + 4.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn gl_weights_sum_to_interval() {
        for n in [2, 5, 16, 48, 64] {
            let (_, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn lstsq_recovers_coefficients() {
        let x: Vec<f64> = (0..50).map(|i| 0.1 + i as f64 * 0.07).collect();
        let c0 = 2.5;
        let c1 = -1.25;
        let y: Vec<f64> = x.iter().map(|&t| c0 * t.powf(1.3) + c1).collect();
        let cols = vec![x.iter().map(|&t| t.powf(1.3)).collect(), vec![1.0; 50]];
        let beta = lstsq(&cols, &y, None);
        assert!((beta[0] - c0).abs() < 1e-10);
        assert!((beta[1] - c1).abs() < 1e-10);
    }
}
