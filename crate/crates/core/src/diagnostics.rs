//! Convergence diagnostics and posterior summaries.
//!
//! Quantiles use linear interpolation between order statistics (type 7).
//! Convergence is judged by the classic Gelman-Rubin statistic on every
//! estimated scalar; per-site abundances are summarized but never gate
//! convergence.

use serde::{Deserialize, Serialize};

use crate::mcmc::ChainOutput;

pub const DEFAULT_RHAT_THRESHOLD: f64 = 1.1;

/// Type-7 quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rhat {
    pub value: f64,
    /// Set when some chain has zero within-chain variance. The value is then
    /// 1.0 if all chains sit on the same constant and `+inf` otherwise.
    pub degenerate: bool,
}

/// Classic Gelman-Rubin potential scale reduction factor. Chains are cut to
/// the shortest length.
pub fn rhat(chains: &[&[f64]]) -> Rhat {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if m < 2 || n < 2 {
        return Rhat {
            value: f64::NAN,
            degenerate: false,
        };
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c[..n].iter().sum::<f64>() / nf).collect();
    let vars: Vec<f64> = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..n].iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .collect();
    let w = vars.iter().sum::<f64>() / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let b = nf * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    if vars.contains(&0.0) {
        let spread = means.iter().any(|mu| mu != &means[0]);
        if w == 0.0 {
            return Rhat {
                value: if spread { f64::INFINITY } else { 1.0 },
                degenerate: true,
            };
        }
        return Rhat {
            value: psrf(nf, w, b),
            degenerate: true,
        };
    }
    Rhat {
        value: psrf(nf, w, b),
        degenerate: false,
    }
}

/// `sqrt(var+ / W)`, floored at 1: with fewer between-chain differences
/// than sampling noise predicts, the raw ratio dips just below 1.
fn psrf(n: f64, w: f64, b: f64) -> f64 {
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt().max(1.0)
}

/// Effective sample size from the multi-chain autocorrelation, truncated by
/// Geyer's initial monotone sequence.
pub fn ess(chains: &[&[f64]]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if m == 0 || n < 4 {
        return f64::NAN;
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c[..n].iter().sum::<f64>() / nf).collect();
    let centered: Vec<Vec<f64>> = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..n].iter().map(|x| x - mu).collect())
        .collect();
    // Mean over chains of the biased lag autocovariance.
    let acov = |lag: usize| {
        centered
            .iter()
            .map(|d| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / nf)
            .sum::<f64>()
            / m as f64
    };
    let w = acov(0) * nf / (nf - 1.0);
    let var_plus = if m > 1 {
        let grand = means.iter().sum::<f64>() / m as f64;
        let b = nf * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        (nf - 1.0) / nf * w + b / nf
    } else {
        w * (nf - 1.0) / nf
    };
    if var_plus <= 0.0 || !var_plus.is_finite() {
        return f64::NAN;
    }
    let rho = |lag: usize| 1.0 - (w - acov(lag)) / var_plus;
    // Sum of consecutive pairs, kept while positive and forced monotone.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    let total = m as f64 * nf;
    total / tau.max(1.0 / total.log10())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub parameter: String,
    pub median: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub ci_width: f64,
    pub rhat: f64,
    pub rhat_degenerate: bool,
    pub ess: f64,
    pub draws: usize,
}

impl PosteriorSummary {
    pub fn covers(&self, truth: f64) -> bool {
        self.ci_lower <= truth && truth <= self.ci_upper
    }
}

/// Pooled 2.5%, 50% and 97.5% quantiles, with R-hat and ESS attached.
pub fn summarize(parameter: &str, chains: &[&[f64]]) -> PosteriorSummary {
    let mut pooled: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    pooled.sort_by(f64::total_cmp);
    let ci_lower = quantile_sorted(&pooled, 0.025);
    let ci_upper = quantile_sorted(&pooled, 0.975);
    let r = rhat(chains);
    PosteriorSummary {
        parameter: parameter.to_string(),
        median: quantile_sorted(&pooled, 0.5),
        ci_lower,
        ci_upper,
        ci_width: ci_upper - ci_lower,
        rhat: r.value,
        rhat_degenerate: r.degenerate,
        ess: ess(chains),
        draws: pooled.len(),
    }
}

/// Summaries of every estimated scalar, then total abundance over the
/// active sites, then (on request) each site's abundance as `N[site]`.
pub fn summarize_output(out: &ChainOutput, per_site: bool) -> Vec<PosteriorSummary> {
    let mut rows: Vec<PosteriorSummary> = out
        .params
        .iter()
        .map(|&p| summarize(p.name(), &out.scalar(p).expect("listed parameter")))
        .collect();
    let total = out.total_abundance();
    let refs: Vec<&[f64]> = total.iter().map(Vec::as_slice).collect();
    rows.push(summarize("N_total", &refs));
    if per_site {
        for (i, site) in out.sites.iter().enumerate() {
            let series: Vec<Vec<f64>> = out
                .chains
                .iter()
                .map(|c| c.abundance[i].iter().map(|&x| f64::from(x)).collect())
                .collect();
            let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
            rows.push(summarize(&format!("N[{site}]"), &refs));
        }
    }
    rows
}

/// True iff every scalar parameter's R-hat is below `threshold`. Abundance
/// rows (`N_total`, `N[..]`) are ignored.
pub fn converged(summaries: &[PosteriorSummary], threshold: f64) -> bool {
    summaries
        .iter()
        .filter(|s| !s.parameter.starts_with('N'))
        .all(|s| s.rhat < threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bias {
    /// Percent relative bias, or plain `estimate - truth` when `absolute`.
    pub value: f64,
    pub absolute: bool,
}

pub fn relative_bias(estimate: f64, truth: f64) -> Bias {
    if truth == 0.0 {
        Bias {
            value: estimate - truth,
            absolute: true,
        }
    } else {
        Bias {
            value: 100.0 * (estimate - truth) / truth,
            absolute: false,
        }
    }
}
