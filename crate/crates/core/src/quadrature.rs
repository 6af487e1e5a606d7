//! Fixed-grid quadrature rules.

/// Composite Simpson rule over `[a, b]` with `n` subintervals (rounded up to even).
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = n.max(2);
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Trapezoid rule on uniformly spaced samples with spacing `h`.
pub fn trapezoid_uniform(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = crate::exec::pairwise_sum(&values[1..n - 1]);
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Tensor-product trapezoid rule on a row-major `n1 x n2` grid.
///
/// `values[i * n2 + j]` is the sample at `(x1_i, x2_j)`.
pub fn trapezoid_2d(values: &[f64], n1: usize, n2: usize, h1: f64, h2: f64) -> f64 {
    assert_eq!(values.len(), n1 * n2);
    let weight = |i: usize, n: usize| {
        if n == 1 {
            1.0
        } else if i == 0 || i == n - 1 {
            0.5
        } else {
            1.0
        }
    };
    let h1 = if n1 == 1 { 1.0 } else { h1 };
    let h2 = if n2 == 1 { 1.0 } else { h2 };
    let rows: Vec<f64> = (0..n1)
        .map(|i| {
            let row: Vec<f64> = (0..n2).map(|j| weight(j, n2) * values[i * n2 + j]).collect();
            weight(i, n1) * crate::exec::pairwise_sum(&row)
        })
        .collect();
    crate::exec::pairwise_sum(&rows) * h1 * h2
}

/// `n` uniformly spaced points covering `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn simpson_odd_n_is_rounded_up() {
        let v = simpson(f64::sin, 0.0, std::f64::consts::PI, 7);
        assert!((v - 2.0).abs() < 1e-3);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let xs = linspace(0.0, 1.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid_uniform(&ys, 0.1) - 2.5).abs() < 1e-14);
        assert_eq!(trapezoid_uniform(&[4.0], 0.1), 0.0);
    }

    #[test]
    fn trapezoid_2d_bilinear_exact() {
        let n1 = 5;
        let n2 = 7;
        let x1 = linspace(0.0, 1.0, n1);
        let x2 = linspace(0.0, 2.0, n2);
        let mut v = Vec::new();
        for a in &x1 {
            for b in &x2 {
                v.push(a * b + 1.0);
            }
        }
        // integral of xy + 1 over [0,1]x[0,2] = 1 + 2
        let got = trapezoid_2d(&v, n1, n2, 0.25, 2.0 / 6.0);
        assert!((got - 3.0).abs() < 1e-12);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.1, 0.7, 4);
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[3], 0.7);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
