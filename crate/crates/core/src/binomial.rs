//! Binomial probabilities for exact two-arm computations.
//!
//! The mass function is built outward from the mode with the ratio
//! `f(k+1)/f(k) = (n-k)/(k+1) * p/(1-p)` and normalized over the window of
//! non-negligible terms, so nothing underflows even for n in the tens of
//! thousands. Terms below `CUTOFF` times the modal weight are dropped.

const CUTOFF: f64 = 1e-22;

/// Binomial(n, p) mass over the window `[start, start + len)`, with cumulative
/// sums from both ends.
#[derive(Debug, Clone)]
pub struct Binomial {
    start: usize,
    pmf: Vec<f64>,
    // lower[i] = P(X <= start + i); upper[i] = P(X >= start + i)
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Binomial {
    pub fn new(n: usize, p: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p));
        if p <= 0.0 {
            return Self::point(0);
        }
        if p >= 1.0 {
            return Self::point(n);
        }
        let odds = p / (1.0 - p);
        let mode = (((n + 1) as f64 * p).floor() as usize).min(n);

        let mut above = Vec::new();
        let mut w = 1.0;
        for k in mode..n {
            w *= (n - k) as f64 / (k + 1) as f64 * odds;
            if w < CUTOFF {
                break;
            }
            above.push(w);
        }
        let mut below = Vec::new();
        let mut w = 1.0;
        for k in (1..=mode).rev() {
            // f(k-1)/f(k) = k / (n-k+1) / odds
            w *= k as f64 / (n - k + 1) as f64 / odds;
            if w < CUTOFF {
                break;
            }
            below.push(w);
        }
        let start = mode - below.len();
        let mut pmf: Vec<f64> = below.into_iter().rev().collect();
        pmf.push(1.0);
        pmf.extend(above);

        // Sum smallest-first from each tail.
        let mut lower = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &x in &pmf {
            acc += x;
            lower.push(acc);
        }
        let mut upper = vec![0.0; pmf.len()];
        let mut acc = 0.0;
        for i in (0..pmf.len()).rev() {
            acc += pmf[i];
            upper[i] = acc;
        }
        let total = lower[lower.len() - 1].max(upper[0]);
        for v in pmf.iter_mut().chain(lower.iter_mut()).chain(upper.iter_mut()) {
            *v /= total;
        }
        Self { start, pmf, lower, upper }
    }

    fn point(at: usize) -> Self {
        Self { start: at, pmf: vec![1.0], lower: vec![1.0], upper: vec![1.0] }
    }

    /// One past the largest index with retained mass.
    pub fn end(&self) -> usize {
        self.start + self.pmf.len()
    }

    pub fn pmf(&self, k: usize) -> f64 {
        if k < self.start || k >= self.end() {
            0.0
        } else {
            self.pmf[k - self.start]
        }
    }

    /// Retained `(k, P(X = k))` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.pmf.iter().enumerate().map(move |(i, &p)| (self.start + i, p))
    }

    /// `P(X >= k)`.
    pub fn upper_tail(&self, k: usize) -> f64 {
        if k <= self.start {
            1.0
        } else if k >= self.end() {
            0.0
        } else {
            self.upper[k - self.start]
        }
    }

    /// `P(X < k)`.
    pub fn lower_tail_strict(&self, k: usize) -> f64 {
        if k <= self.start {
            0.0
        } else if k >= self.end() {
            1.0
        } else {
            self.lower[k - 1 - self.start]
        }
    }
}
