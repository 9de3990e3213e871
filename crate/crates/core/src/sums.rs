//! Deterministic summation primitives.
//!
//! Norms and exact-identity checks use compensated (Neumaier) summation;
//! Monte Carlo reductions use fixed-size chunks combined pairwise in index
//! order, so totals do not depend on the number of worker threads.

use rayon::prelude::*;

/// Neumaier variant of Kahan summation: the running compensation also
/// captures the case where the addend dominates the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if t.is_finite() {
            if self.sum.abs() >= x.abs() {
                self.comp += (self.sum - t) + x;
            } else {
                self.comp += (x - t) + self.sum;
            }
        }
        // On overflow the compensation would be inf - inf = NaN; keep the
        // infinite sum instead so the result propagates as +-inf.
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn compensated_total(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.total()
}

/// Pairwise reduction in index order: deterministic for a fixed input,
/// independent of thread count because it runs on one slice.
pub fn pairwise_total(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return compensated_total(xs);
    }
    let mid = xs.len() / 2;
    pairwise_total(&xs[..mid]) + pairwise_total(&xs[mid..])
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct MeanStats {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
}

impl MeanStats {
    /// Delta-method statistics for sqrt(mean).
    pub fn sqrt_stats(&self) -> MeanStats {
        let root = self.mean.max(0.0).sqrt();
        let se = if root > 0.0 {
            self.std_error / (2.0 * root)
        } else {
            self.std_error
        };
        MeanStats {
            mean: root,
            std_error: se,
            count: self.count,
        }
    }
}

/// Number of Monte Carlo items evaluated per sequential chunk. Fixed so that
/// the reduction tree never depends on the worker count.
pub const MC_CHUNK: u64 = 1024;

/// Evaluates `eval(i)` for `i in 0..n` in fixed chunks, in parallel, and
/// returns mean and standard error. Chunk partials are combined pairwise in
/// chunk order.
pub fn chunked_mean<F>(n: u64, eval: F) -> MeanStats
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = n.div_ceil(MC_CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * MC_CHUNK;
            let hi = ((c + 1) * MC_CHUNK).min(n);
            let mut s = CompensatedSum::new();
            let mut s2 = CompensatedSum::new();
            for i in lo..hi {
                let x = eval(i);
                s.add(x);
                s2.add(x * x);
            }
            (s.total(), s2.total())
        })
        .collect();
    stats_from_partials(&partials, n)
}

/// Same scheme for item evaluations that produce several statistics at once:
/// `eval(i, acc)` adds its contributions into `acc` (one slot per statistic).
/// Returns per-slot (sum, sum of squares) folded pairwise in chunk order.
pub fn chunked_multi<F>(n: u64, slots: usize, eval: F) -> Vec<MeanStats>
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    let chunks = n.div_ceil(MC_CHUNK);
    let partials: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * MC_CHUNK;
            let hi = ((c + 1) * MC_CHUNK).min(n);
            let mut sums = vec![(CompensatedSum::new(), CompensatedSum::new()); slots];
            let mut buf = vec![0.0; slots];
            for i in lo..hi {
                buf.fill(0.0);
                eval(i, &mut buf);
                for (acc, &x) in sums.iter_mut().zip(buf.iter()) {
                    acc.0.add(x);
                    acc.1.add(x * x);
                }
            }
            sums.iter().map(|(a, b)| (a.total(), b.total())).collect()
        })
        .collect();
    (0..slots)
        .map(|k| {
            let slot: Vec<(f64, f64)> = partials.iter().map(|p| p[k]).collect();
            stats_from_partials(&slot, n)
        })
        .collect()
}

fn stats_from_partials(partials: &[(f64, f64)], n: u64) -> MeanStats {
    let sums: Vec<f64> = partials.iter().map(|p| p.0).collect();
    let sqs: Vec<f64> = partials.iter().map(|p| p.1).collect();
    let total = pairwise_total(&sums);
    let total_sq = pairwise_total(&sqs);
    let nf = n as f64;
    let mean = total / nf;
    let var = if n > 1 {
        ((total_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    MeanStats {
        mean,
        std_error: (var / nf).sqrt(),
        count: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_handles_cancellation() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.total(), 2.0);
    }

    #[test]
    fn pairwise_matches_simple_sum_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_total(&xs), 499_500.0);
    }

    #[test]
    fn chunked_mean_is_exact_on_constants() {
        let stats = chunked_mean(10_000, |_| 3.5);
        assert_eq!(stats.mean, 3.5);
        assert_eq!(stats.std_error, 0.0);
        assert_eq!(stats.count, 10_000);
    }

    #[test]
    fn chunked_mean_matches_sequential_reference() {
        let n = 4321u64;
        let f = |i: u64| ((i * 2654435761) % 1000) as f64 / 997.0;
        let stats = chunked_mean(n, f);
        let xs: Vec<f64> = (0..n).map(f).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((stats.mean - mean).abs() < 1e-12);
    }

    #[test]
    fn chunked_multi_slots_are_independent() {
        let stats = chunked_multi(5000, 2, |i, acc| {
            acc[0] = 1.0;
            acc[1] = i as f64;
        });
        assert_eq!(stats[0].mean, 1.0);
        assert!((stats[1].mean - 2499.5).abs() < 1e-9);
    }
}
