//! Choosing base weights that make `Emb[phi]` small.

use elastica::emb::{estimate_emb, EmbOptions};
use elastica::Result;

use crate::spine::Lifted;

/// `Emb[phi]` upper estimate for base weights `alpha`.
pub fn emb_upper(l: &Lifted, alpha: &[f64], opts: &EmbOptions) -> Result<f64> {
    let ve = l.endomorphism(alpha)?;
    Ok(estimate_emb(&ve.map, None, opts)?.upper)
}

/// Search directions: every sign pattern on up to `k` of the free edges.
fn directions(n: usize, k: usize) -> Vec<Vec<i8>> {
    let mut out: Vec<Vec<i8>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|d| [-1i8, 0, 1].into_iter().map(move |s| {
                let mut d = d.clone();
                d.push(s);
                d
            }))
            .collect();
    }
    out.retain(|d| {
        let nz = d.iter().filter(|s| **s != 0).count();
        nz > 0 && nz <= k
    });
    out.sort_by_key(|d| d.iter().filter(|s| **s != 0).count());
    out
}

/// Pattern search in log-weights over the edges in `free`; other edges keep
/// their weight from `alpha`. Moves change up to three weights at once, since
/// the minimum usually sits where several edges fill equally. Weights are
/// rescaled so the largest free one is 1.
pub fn fit(l: &Lifted, alpha: &[f64], free: &[usize], opts: &EmbOptions, min_step: f64) -> Result<(Vec<f64>, f64)> {
    let mut best = alpha.to_vec();
    let mut val = emb_upper(l, &best, opts)?;
    let mut step: f64 = 0.5;
    while step > min_step {
        let mut improved = false;
        for d in directions(free.len(), 3) {
            let mut a = best.clone();
            for (k, &e) in free.iter().enumerate() {
                a[e] *= (step * d[k] as f64).exp();
            }
            let v = emb_upper(l, &a, opts)?;
            if v < val - 1e-13 {
                val = v;
                best = a;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let top = free.iter().map(|&e| best[e]).fold(0.0, f64::max);
    for &e in free {
        best[e] /= top;
    }
    Ok((best, val))
}
