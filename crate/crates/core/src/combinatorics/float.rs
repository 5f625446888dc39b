use alloc::vec;
use alloc::vec::Vec;

/// `C(2n, n) / 4^n` for `n = 0..=n_max`.
pub fn normalized_central_binomials(n_max: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n_max + 1);
    let mut x = 1.0f64;
    for n in 0..=n_max {
        g.push(x);
        x *= (2 * n + 1) as f64 / (2 * n + 2) as f64;
    }
    g
}

/// `G_i(n) = F(n, i) / i^{2n}` for `n = 0..=n_max`, in double precision.
///
/// `G_2` and `G_3` come from stable forward recurrences; higher `i` use
/// `G_i(n) = sum_j b(j)^2 G_{i-1}(j)` with `b` the Binomial(n, (i-1)/i)
/// probability mass, truncated where `b(j)^2` is negligible.
pub fn normalized_abelian_squares(i: usize, n_max: usize) -> Vec<f64> {
    match i {
        0 => vec![0.0; n_max + 1],
        1 => vec![1.0; n_max + 1],
        2 => normalized_central_binomials(n_max),
        3 => normalized_f3(n_max),
        _ => {
            let prev = normalized_abelian_squares(i - 1, n_max);
            let p = (i - 1) as f64 / i as f64;
            (0..=n_max).map(|n| squared_binomial_average(n, p, &prev)).collect()
        }
    }
}

fn normalized_f3(n_max: usize) -> Vec<f64> {
    // F(m) = 9^m G(m) turns the recurrence for F(m, 3) into
    // 81 (m+2)^2 G(m+2) = 9 (10m^2 + 30m + 23) G(m+1) - 9 (m+1)^2 G(m).
    let mut g = vec![1.0, 3.0 / 9.0];
    for m in 2..=n_max {
        let k = (m - 2) as f64;
        let next = (9.0 * (10.0 * k * k + 30.0 * k + 23.0) * g[m - 1] - 9.0 * (k + 1.0) * (k + 1.0) * g[m - 2])
            / (81.0 * (k + 2.0) * (k + 2.0));
        g.push(next);
    }
    g.truncate(n_max + 1);
    g
}

fn squared_binomial_average(n: usize, p: f64, weights: &[f64]) -> f64 {
    if n == 0 {
        return weights[0];
    }
    let q = 1.0 - p;
    let nf = n as f64;
    let mode = (((nf + 1.0) * p) as usize).min(n);
    let ln_pmf = |j: usize| -> f64 {
        let jf = j as f64;
        libm::lgamma(nf + 1.0) - libm::lgamma(jf + 1.0) - libm::lgamma(nf - jf + 1.0)
            + jf * libm::log(p)
            + (nf - jf) * libm::log(q)
    };
    // b(j)^2 ~ exp(-(j - np)^2 / (npq)); 13 standard deviations of that
    // profile leave a relative tail below 1e-36.
    let half_width = (13.0 * libm::sqrt(nf * p * q / 2.0)) as usize + 2;
    let lo = mode.saturating_sub(half_width);
    let hi = (mode + half_width).min(n);
    let b_mode = libm::exp(ln_pmf(mode));
    let mut acc = b_mode * b_mode * weights[mode];
    let mut b = b_mode;
    for j in (mode + 1)..=hi {
        b *= (nf - j as f64 + 1.0) / j as f64 * (p / q);
        acc += b * b * weights[j];
    }
    b = b_mode;
    for j in (lo..mode).rev() {
        b *= (j as f64 + 1.0) / (nf - j as f64) * (q / p);
        acc += b * b * weights[j];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::abelian_square_table;
    use crate::scalar::rational_to_f64;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    #[test]
    fn float_tables_match_exact_counts() {
        for i in 2..=5usize {
            let exact = abelian_square_table(120, i).unwrap();
            let approx = normalized_abelian_squares(i, 120);
            for (n, f) in exact.iter().enumerate() {
                let scale = num_traits::pow(BigInt::from(i * i), n);
                let e = rational_to_f64(&BigRational::new(f.clone(), scale));
                assert!((approx[n] - e).abs() <= 1e-11 * e, "i={i} n={n}: {} vs {e}", approx[n]);
            }
        }
    }
}
