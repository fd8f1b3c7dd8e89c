//! Sample statistics and distribution-distance helpers.

/// Standard normal CDF.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2))
}

/// Population central moments up to order four.
pub(crate) fn central_moments_4(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

/// Excess kurtosis `m4/m2² − 3` of a sample.
#[allow(dead_code)]
pub(crate) fn excess_kurtosis(xs: &[f64]) -> f64 {
    let (_, m2, _, m4) = central_moments_4(xs);
    m4 / (m2 * m2) - 3.0
}

/// Asymptotic standard error of the sample excess kurtosis for a symmetric
/// distribution with known central moments (delta method).
pub(crate) fn kurtosis_se_symmetric(mu2: f64, mu4: f64, mu6: f64, mu8: f64, n: usize) -> f64 {
    let var = (mu8 - mu4 * mu4) / powi(mu2, 4) + 4.0 * mu4 * mu4 * (mu4 - mu2 * mu2) / powi(mu2, 6)
        - 4.0 * mu4 * (mu6 - mu2 * mu4) / powi(mu2, 5);
    libm::sqrt(var.max(0.0) / n as f64)
}

fn powi(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Kolmogorov-Smirnov distance between a sample and the Gaussian fitted to
/// its own mean and variance. Sorts the input.
pub(crate) fn ks_to_fitted_gaussian(samples: &mut [f64]) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let (mean, m2, _, _) = central_moments_4(samples);
    let sd = libm::sqrt(m2);
    if sd == 0.0 {
        return 1.0;
    }
    samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let mut d: f64 = 0.0;
    for (i, x) in samples.iter().enumerate() {
        let phi = normal_cdf((x - mean) / sd);
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        d = d.max((phi - lo).abs()).max((hi - phi).abs());
    }
    d
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in points {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[allow(dead_code)]
pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
