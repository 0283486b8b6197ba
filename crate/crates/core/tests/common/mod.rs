#![allow(dead_code)]

use eprb::model::{ModelParams, Setting};
use eprb::sim::ExperimentConfig;

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Every legal one-to-one matching between two time lists under `|t2 - t1| <= w`,
/// as `match_of[i] = Some(j)`.
pub fn all_matchings(t1: &[f64], t2: &[f64], w: f64) -> Vec<Vec<Option<usize>>> {
    fn go(i: usize, t1: &[f64], t2: &[f64], w: f64, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if i == t1.len() {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        go(i + 1, t1, t2, w, used, cur, out);
        cur.pop();
        for j in 0..t2.len() {
            if !used[j] && (t2[j] - t1[i]).abs() <= w {
                used[j] = true;
                cur.push(Some(j));
                go(i + 1, t1, t2, w, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, t1, t2, w, &mut vec![false; t2.len()], &mut Vec::new(), &mut out);
    out
}

/// Earliest-first nearest-neighbour preference as a total order on matchings:
/// compare station-1 events in time order by (unmatched, gap, partner time).
pub fn preferred_matching(t1: &[f64], t2: &[f64], w: f64) -> Vec<Option<usize>> {
    let key = |m: &Vec<Option<usize>>| -> Vec<(u8, f64, f64)> {
        m.iter()
            .enumerate()
            .map(|(i, j)| match j {
                Some(j) => (0, (t2[*j] - t1[i]).abs(), t2[*j]),
                None => (1, 0.0, 0.0),
            })
            .collect()
    };
    all_matchings(t1, t2, w)
        .into_iter()
        .min_by(|a, b| {
            key(a)
                .iter()
                .zip(key(b).iter())
                .map(|(x, y)| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.total_cmp(&y.2)))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap()
}

pub fn chsh_config(d: f64, t0: f64, window: f64, n_pairs: u64, seed: u64) -> ExperimentConfig {
    let q = eprb::ChshQuadruple::default();
    ExperimentConfig::new(ModelParams::new(d, t0, window).unwrap(), q.station1(), q.station2(), n_pairs, seed)
}

pub fn single_setting_config(d: f64, t0: f64, window: f64, a1: f64, a2: f64, n_pairs: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(
        ModelParams::new(d, t0, window).unwrap(),
        vec![Setting(a1)],
        vec![Setting(a2)],
        n_pairs,
        seed,
    )
}
