//! Binomial tail probabilities that stay accurate far into the tails.
//!
//! Terms are formed in the log domain and summed with Neumaier compensated
//! summation. Tails are always summed on the small side so that results
//! like 1e-30 are never the difference of two numbers close to one.

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// ln C(n, k) by accumulating ln((n - k + i) / i).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    let k = k.min(n - k);
    let mut acc = CompensatedSum::default();
    for i in 1..=k {
        acc.add(((n - k + i) as f64).ln());
        acc.add(-(i as f64).ln());
    }
    acc.value()
}

/// Exact C(n, k) when it fits in a u128 (always true for n <= 127).
pub fn choose_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        // c * m is divisible by i; split i between the two factors first.
        let m = n as u128 - k as u128 + i;
        let g = gcd(c, i);
        c = (c / g).checked_mul(m / (i / g))?;
    }
    Some(c)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// P(X = i) for X ~ Bin(n, p), 0 < p < 1.
fn pmf(n: u64, i: u64, ln_p: f64, ln_q: f64) -> f64 {
    (ln_choose(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q).exp()
}

/// P(X >= k) for X ~ Bin(n, p).
pub fn upper_tail(n: u64, k: u64, p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p = {p}");
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mean = n as f64 * p;
    if (k as f64) > mean {
        let mut s = CompensatedSum::default();
        for i in k..=n {
            s.add(pmf(n, i, ln_p, ln_q));
        }
        s.value().min(1.0)
    } else {
        1.0 - lower_tail(n, k - 1, p)
    }
}

/// P(X <= k) for X ~ Bin(n, p).
pub fn lower_tail(n: u64, k: u64, p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p = {p}");
    if k >= n {
        return 1.0;
    }
    if p == 0.0 {
        return 1.0;
    }
    if p == 1.0 {
        return 0.0;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mean = n as f64 * p;
    if (k as f64) < mean {
        let mut s = CompensatedSum::default();
        for i in 0..=k {
            s.add(pmf(n, i, ln_p, ln_q));
        }
        s.value().min(1.0)
    } else {
        1.0 - upper_tail(n, k + 1, p)
    }
}

/// P(X >= k) for X ~ Bin(n, 1/2), exact up to one final rounding for n <= 127.
pub fn fair_upper_tail(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= 127 {
        let count: u128 = (k..=n).map(|i| choose_u128(n, i).expect("n <= 127")).sum();
        // count < 2^128; scale by 2^-n exactly via exponent arithmetic.
        return count as f64 * 2f64.powi(-(n as i32));
    }
    upper_tail(n, k, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(choose_u128(32, 4), Some(35960));
        assert!(choose_u128(127, 63).is_some());
        assert!((ln_choose(64, 10) - (151473214816.0f64).ln()).abs() < 1e-12);
        // P(Bin(2, 0.5) >= 1) = 3/4
        assert!((upper_tail(2, 1, 0.5) - 0.75).abs() < 1e-15);
        assert!((lower_tail(2, 0, 0.5) - 0.25).abs() < 1e-15);
        assert_eq!(fair_upper_tail(8, 6), 37.0 / 256.0);
    }

    #[test]
    fn edges() {
        assert_eq!(upper_tail(10, 0, 0.3), 1.0);
        assert_eq!(upper_tail(10, 11, 0.3), 0.0);
        assert_eq!(upper_tail(10, 3, 0.0), 0.0);
        assert_eq!(upper_tail(10, 3, 1.0), 1.0);
        assert_eq!(lower_tail(10, 10, 0.3), 1.0);
    }

    #[test]
    fn deep_tail_leading_term() {
        // Dominated by C(32,5) p^5 at p = 1e-4.
        let t = upper_tail(32, 5, 1e-4);
        let lead = 201_376.0 * 1e-20 * (1.0f64 - 1e-4).powi(27);
        assert!((t / lead - 1.0).abs() < 1e-3, "{t} {lead}");
    }

    #[test]
    fn tails_complement() {
        for &(n, p) in &[(32u64, 0.05), (64, 0.3), (16, 0.9)] {
            for k in 0..=n {
                let s = lower_tail(n, k, p) + upper_tail(n, k + 1, p);
                assert!((s - 1.0).abs() < 1e-12, "{n} {k} {p} {s}");
            }
        }
    }
}
