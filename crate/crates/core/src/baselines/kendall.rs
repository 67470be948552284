//! Kendall's τ-b between relation similarity and negated embedding distance.

use rand::seq::index;

use super::{check_rows, normalized, InterpretationScore, Method, PreparedScorer};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::relations::SimilarityMatrix;
use crate::rng::substream;

pub const DEFAULT_PAIR_SAMPLE: usize = 100_000;

/// Tie-corrected Kendall rank correlation, `O(n log n)` (Knight's algorithm).
///
/// Both sequences constant is an undefined-correlation error; when only one
/// is constant there is no association to measure and the result is 0.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Parameter(format!(
            "sequence lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::UndefinedCorrelation(format!("{n} observations")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |t: u64| t * t.saturating_sub(1) / 2;
    let n0 = pairs(n as u64);
    let (mut tied_x, mut tied_xy) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                tied_xy += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs(run_x);
            tied_xy += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs(run_x);
    tied_xy += pairs(run_xy);

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            tied_y += pairs(run_y);
            run_y = 1;
        }
    }
    tied_y += pairs(run_y);

    if tied_x == n0 && tied_y == n0 {
        return Err(Error::UndefinedCorrelation(
            "similarities and distances are both constant".into(),
        ));
    }
    if tied_x == n0 || tied_y == n0 {
        return Ok(0.0);
    }
    let numerator = n0 as i128 - tied_x as i128 - tied_y as i128 + tied_xy as i128 - 2 * swaps as i128;
    let denominator = (((n0 - tied_x) as f64) * ((n0 - tied_y) as f64)).sqrt();
    Ok((numerator as f64 / denominator).clamp(-1.0, 1.0))
}

/// Stable merge sort returning the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Node pairs scored by the ranking test. Unordered `u < v` pairs for
/// symmetric relations, ordered pairs from stored rows otherwise. Exhaustive
/// when the candidate count is at most `pair_sample`, else a uniform sample
/// without replacement, returned in canonical order.
pub fn sample_pairs(s: &SimilarityMatrix, pair_sample: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = s.node_count();
    if n < 2 {
        return Vec::new();
    }
    let symmetric = s.is_symmetric() && s.is_full();
    let rows = s.sources();
    let total = if symmetric { n * (n - 1) / 2 } else { rows.len() * (n - 1) };
    let decode = |k: usize| -> (usize, usize) {
        if symmetric {
            // row u holds pairs (u, u+1..n); find u by walking the offsets
            let mut u = triangular_row(n, k);
            let mut start = u * (2 * n - u - 1) / 2;
            while start > k {
                u -= 1;
                start = u * (2 * n - u - 1) / 2;
            }
            while start + (n - 1 - u) <= k {
                start += n - 1 - u;
                u += 1;
            }
            (u, u + 1 + (k - start))
        } else {
            let u = rows[k / (n - 1)];
            let v = k % (n - 1);
            (u, if v >= u { v + 1 } else { v })
        }
    };
    if total <= pair_sample {
        return (0..total).map(decode).collect();
    }
    let mut rng = substream(seed, "kendall-pairs", 0);
    let mut picked = index::sample(&mut rng, total, pair_sample).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(decode).collect()
}

/// Approximate row of the `k`-th upper-triangle entry; corrected by the caller.
fn triangular_row(n: usize, k: usize) -> usize {
    let nf = n as f64;
    let b = 2.0 * nf - 1.0;
    let u = ((b - (b * b - 8.0 * k as f64).max(0.0).sqrt()) / 2.0).floor();
    (u.max(0.0) as usize).min(n - 2)
}

/// Pair sample and similarity values for one relation.
pub struct KendallPrepared<'s> {
    s: &'s SimilarityMatrix,
    pairs: Vec<(usize, usize)>,
    similarity: Vec<f64>,
    seed: u64,
}

impl<'s> KendallPrepared<'s> {
    pub fn new(s: &'s SimilarityMatrix, pair_sample: usize, seed: u64) -> Result<Self> {
        if s.node_count() < 2 {
            return Err(Error::Parameter("ranking test needs at least 2 nodes".into()));
        }
        if pair_sample == 0 {
            return Err(Error::Parameter("pair_sample must be >= 1".into()));
        }
        let pairs = sample_pairs(s, pair_sample, seed);
        let similarity = pairs.iter().map(|&(u, v)| s.get(u, v)).collect();
        Ok(KendallPrepared {
            s,
            pairs,
            similarity,
            seed,
        })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

impl PreparedScorer for KendallPrepared<'_> {
    fn score(&self, z: &EmbeddingMatrix) -> Result<InterpretationScore> {
        check_rows(z, self.s)?;
        let z = normalized(z);
        let neg_distance: Vec<f64> = self.pairs.iter().map(|&(u, v)| -z.pairwise_distance(u, v)).collect();
        let value = kendall_tau_b(&self.similarity, &neg_distance).map_err(|e| match e {
            Error::UndefinedCorrelation(m) => Error::UndefinedCorrelation(format!("{}: {m}", self.s.name())),
            e => e,
        })?;
        Ok(InterpretationScore {
            method: Method::KendallTau,
            relation: self.s.name(),
            value,
            samples: self.pairs.len(),
            seed: self.seed,
        })
    }
}

/// τ-b between `S_r(u, v)` and `−d(z_u, z_v)` over sampled pairs.
pub fn kendall_tau_score(z: &EmbeddingMatrix, s: &SimilarityMatrix, pair_sample: usize, seed: u64) -> Result<f64> {
    Ok(KendallPrepared::new(s, pair_sample, seed)?.score(z)?.value)
}
