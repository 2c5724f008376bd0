//! Ensemble estimation: occupation fractions, hit probabilities,
//! growth-exponent fits and regime verification.

use rayon::prelude::*;

use crate::alpha::{classify_regime, AlphaField, MinStructure, RegimeKind, RegimePrediction};
use crate::error::{domain, Error, Result};
use crate::intervals::IntervalUnion;
use crate::rng::RandomStream;
use crate::sim::{simulate_growth, simulate_time_changed, GrowthTrace, PathStatus, SimConfig};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Experiments abort when more than this fraction of paths is incomplete.
pub const MAX_INCOMPLETE_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSummary {
    /// Completed paths that entered the statistics.
    pub n_paths: usize,
    pub n_incomplete: usize,
    pub t_grid: Vec<f64>,
    pub occ_mean: Vec<f64>,
    pub occ_ci_halfwidth: Vec<f64>,
    pub hit_prob: Vec<f64>,
    pub hit_ci_halfwidth: Vec<f64>,
}

impl EnsembleSummary {
    /// 95% interval for the mean occupation, clipped to [0, 1].
    pub fn occ_ci(&self, j: usize) -> (f64, f64) {
        clip_ci(self.occ_mean[j], self.occ_ci_halfwidth[j])
    }

    pub fn hit_ci(&self, j: usize) -> (f64, f64) {
        clip_ci(self.hit_prob[j], self.hit_ci_halfwidth[j])
    }

    /// Index of the grid point closest to `t` in log scale.
    pub fn index_of(&self, t: f64) -> usize {
        let mut best = 0;
        for (j, &tj) in self.t_grid.iter().enumerate() {
            if (tj.ln() - t.ln()).abs() < (self.t_grid[best].ln() - t.ln()).abs() {
                best = j;
            }
        }
        best
    }
}

fn clip_ci(m: f64, hw: f64) -> (f64, f64) {
    ((m - hw).clamp(0.0, 1.0), (m + hw).clamp(0.0, 1.0))
}

/// Per-path occupation and hit indicators on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome {
    pub occupation: Vec<f64>,
    pub hits: Vec<bool>,
    pub status: PathStatus,
}

/// Sum after sorting, so the result does not depend on path order.
fn sorted_sum(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Mean and 95% normal-CI half-width (`+inf` for a single value).
pub fn mean_ci(values: &mut [f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = sorted_sum(values) / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let mut dev: Vec<f64> = values.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = sorted_sum(&mut dev) / (n - 1) as f64;
    (mean, Z95 * (var / n as f64).sqrt())
}

/// Aggregates per-path outcomes; incomplete paths are excluded and counted.
pub fn summarize(t_grid: &[f64], outcomes: &[PathOutcome]) -> Result<EnsembleSummary> {
    let complete: Vec<&PathOutcome> = outcomes
        .iter()
        .filter(|o| o.status == PathStatus::Complete)
        .collect();
    let n_incomplete = outcomes.len() - complete.len();
    if outcomes.is_empty() || n_incomplete as f64 > MAX_INCOMPLETE_FRACTION * outcomes.len() as f64 {
        return Err(Error::TooManyIncomplete {
            incomplete: n_incomplete,
            total: outcomes.len(),
        });
    }
    let n = complete.len();
    let mut occ_mean = Vec::with_capacity(t_grid.len());
    let mut occ_hw = Vec::with_capacity(t_grid.len());
    let mut hit_prob = Vec::with_capacity(t_grid.len());
    let mut hit_hw = Vec::with_capacity(t_grid.len());
    for j in 0..t_grid.len() {
        let mut column: Vec<f64> = complete.iter().map(|o| o.occupation[j]).collect();
        let (m, hw) = mean_ci(&mut column);
        occ_mean.push(m.clamp(0.0, 1.0));
        occ_hw.push(hw);
        let hits = complete.iter().filter(|o| o.hits[j]).count();
        let p = hits as f64 / n as f64;
        hit_prob.push(p);
        hit_hw.push(if n < 2 {
            f64::INFINITY
        } else {
            Z95 * (p * (1.0 - p) / n as f64).sqrt()
        });
    }
    Ok(EnsembleSummary {
        n_paths: n,
        n_incomplete,
        t_grid: t_grid.to_vec(),
        occ_mean,
        occ_ci_halfwidth: occ_hw,
        hit_prob,
        hit_ci_halfwidth: hit_hw,
    })
}

/// Simulates `n_paths` independent paths (stream id = path index) and
/// records occupation of `target_set` on `t_grid`.
pub fn run_ensemble_outcomes(
    field: &AlphaField,
    config: &SimConfig,
    t_grid: &[f64],
    n_paths: usize,
    target_set: &IntervalUnion,
    base_seed: u64,
) -> Result<Vec<PathOutcome>> {
    let sets = [target_set.clone()];
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RandomStream::new(base_seed, i);
            let p = simulate_time_changed(field, config, t_grid, &sets, &mut stream)?;
            let mut occupation = p.occupation.into_iter().next().unwrap();
            let mut hits = p.hits.into_iter().next().unwrap();
            occupation.resize(t_grid.len(), f64::NAN);
            hits.resize(t_grid.len(), false);
            Ok(PathOutcome {
                occupation,
                hits,
                status: p.status,
            })
        })
        .collect()
}

pub fn run_ensemble(
    field: &AlphaField,
    config: &SimConfig,
    t_grid: &[f64],
    n_paths: usize,
    target_set: &IntervalUnion,
    base_seed: u64,
) -> Result<EnsembleSummary> {
    if n_paths < 1 {
        return domain("ensemble needs at least one path");
    }
    let outcomes = run_ensemble_outcomes(field, config, t_grid, n_paths, target_set, base_seed)?;
    summarize(t_grid, &outcomes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthQuantity {
    /// `H_t`, internal occupation time of the split set.
    Occupation,
    /// `sigma_1(H_t)`.
    Sigma1OfH,
    /// `sigma_2(t - H_t)`.
    Sigma2OfRest,
    /// `sigma(t)`.
    Sigma,
}

impl GrowthQuantity {
    pub fn name(self) -> &'static str {
        match self {
            Self::Occupation => "H_t",
            Self::Sigma1OfH => "sigma1_of_H",
            Self::Sigma2OfRest => "sigma2_of_rest",
            Self::Sigma => "sigma",
        }
    }

    fn values(self, tr: &GrowthTrace) -> &[f64] {
        match self {
            Self::Occupation => &tr.occupation,
            Self::Sigma1OfH => &tr.sigma1,
            Self::Sigma2OfRest => &tr.sigma2,
            Self::Sigma => &tr.sigma,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub quantity: String,
    pub log_t: Vec<f64>,
    /// Mean over paths of `ln q` at each grid point.
    pub log_q: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
    /// Median of the per-path slopes.
    pub median_slope: f64,
    pub n_paths_used: usize,
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn check_fit_grid(t: &[f64]) -> Result<()> {
    let decades = if t.len() >= 2 && t[0] > 0.0 {
        (t[t.len() - 1] / t[0]).log10()
    } else {
        0.0
    };
    if t.len() < 10 || !(decades >= 2.0 - 1e-9) {
        return Err(Error::InsufficientRange {
            decades,
            points: t.len(),
        });
    }
    Ok(())
}

/// Log-log slope of `quantity` against internal time, averaged over paths.
///
/// Least squares is linear in the response, so the slope of the path-mean
/// of `ln q` equals the mean of per-path slopes; the standard error is taken
/// from the spread of the per-path slopes. Paths with a nonpositive value at
/// any grid point are skipped.
pub fn fit_growth_exponent(traces: &[GrowthTrace], quantity: GrowthQuantity) -> Result<SlopeFit> {
    let Some(first) = traces.first() else {
        return domain("no traces to fit");
    };
    let t = &first.internal_times;
    check_fit_grid(t)?;
    let log_t: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let mut slopes = Vec::new();
    let mut sum_log = vec![0.0; t.len()];
    for tr in traces {
        let q = quantity.values(tr);
        if tr.internal_times.len() != t.len() || q.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            continue;
        }
        let lq: Vec<f64> = q.iter().map(|v| v.ln()).collect();
        slopes.push(ols_slope(&log_t, &lq));
        for (s, l) in sum_log.iter_mut().zip(&lq) {
            *s += l;
        }
    }
    let n = slopes.len();
    if n == 0 {
        return domain(format!("no path has positive {} on the whole grid", quantity.name()));
    }
    let log_q: Vec<f64> = sum_log.iter().map(|s| s / n as f64).collect();
    let slope = ols_slope(&log_t, &log_q);
    let mut sorted = slopes.clone();
    sorted.sort_by(f64::total_cmp);
    let median_slope = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let slope_stderr = if n > 1 {
        let m = slopes.iter().sum::<f64>() / n as f64;
        let var = slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(SlopeFit {
        quantity: quantity.name().to_string(),
        log_t,
        log_q,
        slope,
        slope_stderr,
        median_slope,
        n_paths_used: n,
    })
}

/// Growth traces for `n_paths` paths on a common internal grid.
pub fn run_growth_ensemble(
    field: &AlphaField,
    config: &SimConfig,
    split: &IntervalUnion,
    internal_grid: &[f64],
    n_paths: usize,
    base_seed: u64,
) -> Result<Vec<GrowthTrace>> {
    let results: Vec<(GrowthTrace, PathStatus)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RandomStream::new(base_seed, i);
            simulate_growth(field, config, split, internal_grid, &mut stream)
        })
        .collect::<Result<_>>()?;
    let incomplete = results.iter().filter(|(_, s)| *s != PathStatus::Complete).count();
    if incomplete as f64 > MAX_INCOMPLETE_FRACTION * n_paths as f64 {
        return Err(Error::TooManyIncomplete {
            incomplete,
            total: n_paths,
        });
    }
    Ok(results
        .into_iter()
        .filter(|(_, s)| *s == PathStatus::Complete)
        .map(|(t, _)| t)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeOptions {
    /// Checkpoints in external time (ascending, typically decades).
    pub checkpoints: Vec<f64>,
    /// Half-width of the box `[-K, K]` added to the target under delocalization.
    pub k_box: f64,
    /// Level-set offset used for `A_beta`.
    pub beta: f64,
    pub threshold_high: f64,
    pub threshold_low: f64,
    /// Verdicts need final CI half-widths at most this large.
    pub max_ci_halfwidth: f64,
    pub base_seed: u64,
}

impl Default for RegimeOptions {
    fn default() -> Self {
        Self {
            checkpoints: vec![1e3, 1e4, 1e5, 1e6],
            k_box: 10.0,
            beta: 0.01,
            threshold_high: 0.8,
            threshold_low: 0.2,
            max_ci_halfwidth: 0.1,
            base_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport {
    pub prediction: RegimePrediction,
    /// The set whose occupation was measured.
    pub measured_set: IntervalUnion,
    pub occ_final: f64,
    pub hit_final: f64,
    /// Whether the occupation moved in the predicted direction over the
    /// last three decades of checkpoints.
    pub trend: bool,
    pub verdict: Verdict,
    pub summary: EnsembleSummary,
}

/// `true` when no consecutive step moves against `increasing` by more than
/// the combined 95% half-widths of the two estimates.
pub fn monotone_trend(means: &[f64], halfwidths: &[f64], increasing: bool) -> bool {
    means.windows(2).zip(halfwidths.windows(2)).all(|(m, h)| {
        let change = if increasing { m[1] - m[0] } else { m[0] - m[1] };
        change >= -(h[0] + h[1])
    })
}

/// Checkpoints within three decades of the last one.
fn last_three_decades(t: &[f64]) -> usize {
    let last = *t.last().unwrap();
    t.iter().position(|&x| x >= last / 1e3 * (1.0 - 1e-12)).unwrap_or(0)
}

/// Runs the ensemble implied by the predicted regime and checks the
/// finite-time surrogate of the corresponding limit statement.
pub fn verify_regime(
    field: &AlphaField,
    structure: &MinStructure,
    config: &SimConfig,
    n_paths: usize,
    opts: &RegimeOptions,
) -> Result<RegimeReport> {
    let prediction = classify_regime(structure);
    if prediction.kind == RegimeKind::Critical {
        return Err(Error::Precondition(
            "critical case (equality) has no predicted limit; refusing to verify".into(),
        ));
    }
    if n_paths < 2 {
        return Err(Error::Precondition("regime verification needs at least two paths".into()));
    }
    if opts.checkpoints.is_empty() {
        return domain("no checkpoints");
    }
    let measured_set = match prediction.kind {
        RegimeKind::Delocalize => {
            let beta = opts.beta.min(0.5 * (1.0 - structure.alpha_star));
            let a_beta = field.level_set(beta)?;
            a_beta.union(&IntervalUnion::single(-opts.k_box, opts.k_box))
        }
        _ => prediction.target_set.clone(),
    };
    let summary = run_ensemble(field, config, &opts.checkpoints, n_paths, &measured_set, opts.base_seed)?;
    let last = summary.t_grid.len() - 1;
    let occ_final = summary.occ_mean[last];
    let hit_final = summary.hit_prob[last];
    let from = last_three_decades(&summary.t_grid);
    let increasing = prediction.kind != RegimeKind::Delocalize;
    let trend = monotone_trend(
        &summary.occ_mean[from..],
        &summary.occ_ci_halfwidth[from..],
        increasing,
    );
    let mut ci_ok = summary.occ_ci_halfwidth[last] <= opts.max_ci_halfwidth;
    if prediction.kind == RegimeKind::LocalizeProbability {
        ci_ok &= summary.hit_ci_halfwidth[last] <= opts.max_ci_halfwidth;
    }
    let verdict = if !ci_ok {
        Verdict::Inconclusive
    } else {
        let ok = match prediction.kind {
            RegimeKind::LocalizeOccupation => trend && occ_final > opts.threshold_high,
            RegimeKind::LocalizeProbability => {
                trend && occ_final > opts.threshold_high && hit_final > opts.threshold_high
            }
            RegimeKind::Delocalize => trend && occ_final < opts.threshold_low,
            RegimeKind::Critical => unreachable!(),
        };
        if ok {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        }
    };
    Ok(RegimeReport {
        prediction,
        measured_set,
        occ_final,
        hit_final,
        trend,
        verdict,
        summary,
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic p-value of the KS distance `d` at sample size `n`
/// (Stephens' small-sample adjustment).
pub fn ks_pvalue(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lam * lam).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::geometric_grid;

    #[test]
    fn full_space_target_is_always_occupied() {
        let f = AlphaField::constant(0.6).unwrap();
        let cfg = SimConfig::new(0.01, 100.0);
        let grid = geometric_grid(1.0, 100.0, 10).unwrap();
        let s = run_ensemble(&f, &cfg, &grid, 20, &IntervalUnion::real_line(), 3).unwrap();
        assert!(s.occ_mean.iter().all(|&m| m == 1.0));
        assert!(s.hit_prob.iter().all(|&p| p == 1.0));
        assert_eq!(s.n_paths, 20);
    }

    #[test]
    fn single_path_has_infinite_ci() {
        let f = AlphaField::constant(0.6).unwrap();
        let cfg = SimConfig::new(0.01, 10.0);
        let s = run_ensemble(&f, &cfg, &[1.0, 10.0], 1, &IntervalUnion::single(-1.0, 1.0), 3).unwrap();
        assert!(s.occ_ci_halfwidth.iter().all(|h| h.is_infinite()));
        assert!(s.hit_ci_halfwidth.iter().all(|h| h.is_infinite()));
        let st = f.min_structure();
        assert!(st.is_err(), "a constant field has no proper minimum set");
        let two = AlphaField::two_level(0.3, 0.0, 1.0, 0.7).unwrap();
        let r = verify_regime(&two, &two.min_structure().unwrap(), &cfg, 1, &RegimeOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn critical_case_is_refused() {
        let f = AlphaField::two_level(0.35, 0.0, 1.0, 0.7).unwrap();
        let cfg = SimConfig::new(0.01, 10.0);
        let r = verify_regime(&f, &f.min_structure().unwrap(), &cfg, 10, &RegimeOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn summary_is_order_independent() {
        let f = AlphaField::two_level(0.3, 0.0, 1.0, 0.7).unwrap();
        let cfg = SimConfig::new(0.05, 200.0).with_x0(0.5);
        let grid = geometric_grid(1.0, 200.0, 8).unwrap();
        let a = IntervalUnion::single(0.0, 1.0);
        let mut outs = run_ensemble_outcomes(&f, &cfg, &grid, 40, &a, 9).unwrap();
        let s1 = summarize(&grid, &outs).unwrap();
        outs.reverse();
        outs.swap(3, 17);
        let s2 = summarize(&grid, &outs).unwrap();
        assert_eq!(s1, s2);
        for j in 0..grid.len() {
            assert!((0.0..=1.0).contains(&s1.occ_mean[j]));
            let (lo, hi) = s1.occ_ci(j);
            assert!(0.0 <= lo && hi <= 1.0);
        }
    }

    #[test]
    fn incomplete_paths_are_counted_and_can_abort() {
        let f = AlphaField::constant(0.9).unwrap();
        let cfg = SimConfig::new(0.01, 1e9).with_max_steps(50);
        let r = run_ensemble(&f, &cfg, &[1e9], 10, &IntervalUnion::real_line(), 1);
        assert!(matches!(r, Err(Error::TooManyIncomplete { incomplete: 10, total: 10 })));
    }

    #[test]
    fn ols_recovers_exact_slope() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.7 * v - 2.0).collect();
        assert!((ols_slope(&x, &y) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn fit_requires_two_decades() {
        let tr = GrowthTrace {
            internal_times: (1..=12).map(|i| i as f64).collect(),
            occupation: vec![1.0; 12],
            sigma1: vec![1.0; 12],
            sigma2: vec![1.0; 12],
            sigma: vec![1.0; 12],
        };
        assert!(matches!(
            fit_growth_exponent(&[tr], GrowthQuantity::Occupation),
            Err(Error::InsufficientRange { .. })
        ));
    }

    #[test]
    fn fit_on_synthetic_power_law() {
        let t = geometric_grid(1e2, 1e5, 30).unwrap();
        let traces: Vec<GrowthTrace> = (0..5)
            .map(|p| {
                let q: Vec<f64> = t.iter().map(|v| (p as f64 + 1.0) * v.powf(0.75)).collect();
                GrowthTrace {
                    internal_times: t.clone(),
                    occupation: q.clone(),
                    sigma1: q.clone(),
                    sigma2: q.clone(),
                    sigma: q,
                }
            })
            .collect();
        let fit = fit_growth_exponent(&traces, GrowthQuantity::Occupation).unwrap();
        assert!((fit.slope - 0.75).abs() < 1e-12);
        assert!((fit.median_slope - 0.75).abs() < 1e-12);
        assert_eq!(fit.n_paths_used, 5);
    }

    #[test]
    fn ks_accepts_uniforms_and_rejects_shift() {
        let mut s = RandomStream::new(2, 0);
        let u: Vec<f64> = (0..20_000).map(|_| s.uniform_open()).collect();
        let d = ks_statistic(&u, |x| x.clamp(0.0, 1.0));
        assert!(ks_pvalue(u.len(), d) > 1e-3);
        let d = ks_statistic(&u, |x| (x * 1.05).clamp(0.0, 1.0));
        assert!(ks_pvalue(u.len(), d) < 1e-6);
        // Q(1.36) is about 0.05
        assert!((ks_pvalue(1_000_000, 1.36e-3) - 0.049).abs() < 0.003);
    }

    #[test]
    fn trend_tolerates_noise_but_not_reversal() {
        assert!(monotone_trend(&[0.5, 0.55, 0.54, 0.6], &[0.02; 4], true));
        assert!(!monotone_trend(&[0.5, 0.55, 0.40, 0.6], &[0.02; 4], true));
        assert!(monotone_trend(&[0.5, 0.3, 0.2], &[0.02; 3], false));
    }
}
