//! Correlation estimates, CHSH statistics and window sweeps.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coincidence::{
    filter_paired, find_coincidences, pair_events, stream_match, CoincidencePair, MatchPolicy,
};
use crate::error::{Error, Result};
use crate::model::{normalize_angle, Outcome, Setting};
use crate::rng::Substreams;
use crate::sim::{experiment_pair, run_experiment, EmissionTimes, EventLog, ExperimentConfig};

/// Outcome counts for one setting combination.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl CellCounts {
    pub fn new(pp: u64, pm: u64, mp: u64, mm: u64) -> Self {
        CellCounts { pp, pm, mp, mm }
    }

    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }

    pub fn record(&mut self, x1: Outcome, x2: Outcome) {
        match (x1, x2) {
            (Outcome::Plus, Outcome::Plus) => self.pp += 1,
            (Outcome::Plus, Outcome::Minus) => self.pm += 1,
            (Outcome::Minus, Outcome::Plus) => self.mp += 1,
            (Outcome::Minus, Outcome::Minus) => self.mm += 1,
        }
    }

    fn merge(&mut self, other: &CellCounts) {
        self.pp += other.pp;
        self.pm += other.pm;
        self.mp += other.mp;
        self.mm += other.mm;
    }

    /// `E = (N++ + N-- - N+- - N-+) / N` with standard error `sqrt((1 - E^2) / N)`;
    /// `None` for an empty cell.
    pub fn estimate(&self) -> Option<Estimate> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let agree = (self.pp + self.mm) as f64;
        let disagree = (self.pm + self.mp) as f64;
        let value = (agree - disagree) / n as f64;
        let stderr = ((1.0 - value * value).max(0.0) / n as f64).sqrt();
        Some(Estimate {
            value,
            stderr,
            count: n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub count: u64,
}

/// Per setting-combination outcome counts, indexed by the stations' setting indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    settings1: Vec<Setting>,
    settings2: Vec<Setting>,
    /// Row-major over `(setting_index1, setting_index2)`.
    cells: Vec<CellCounts>,
}

/// One serialized row of a [`CorrelationTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub setting_index1: usize,
    pub setting_index2: usize,
    pub angle1_rad: f64,
    pub angle2_rad: f64,
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    pub n_total: u64,
    pub correlation: Option<f64>,
    pub stderr: Option<f64>,
}

impl CorrelationTable {
    pub fn empty(settings1: Vec<Setting>, settings2: Vec<Setting>) -> Self {
        let cells = vec![CellCounts::default(); settings1.len() * settings2.len()];
        CorrelationTable {
            settings1,
            settings2,
            cells,
        }
    }

    /// Builds a table from explicit counts, row-major over the two setting lists.
    pub fn from_counts(
        settings1: Vec<Setting>,
        settings2: Vec<Setting>,
        cells: Vec<CellCounts>,
    ) -> Result<Self> {
        if cells.len() != settings1.len() * settings2.len() {
            return Err(Error::invalid(
                "counts",
                format!(
                    "{} cells for a {}x{} table",
                    cells.len(),
                    settings1.len(),
                    settings2.len()
                ),
            ));
        }
        Ok(CorrelationTable {
            settings1,
            settings2,
            cells,
        })
    }

    pub fn settings1(&self) -> &[Setting] {
        &self.settings1
    }

    pub fn settings2(&self) -> &[Setting] {
        &self.settings2
    }

    fn slot(&self, i: usize, j: usize) -> Result<usize> {
        if i < self.settings1.len() && j < self.settings2.len() {
            Ok(i * self.settings2.len() + j)
        } else {
            Err(Error::MissingCombination(i, j))
        }
    }

    pub fn counts(&self, i: usize, j: usize) -> Result<CellCounts> {
        Ok(self.cells[self.slot(i, j)?])
    }

    fn counts_mut(&mut self, i: usize, j: usize) -> Result<&mut CellCounts> {
        let k = self.slot(i, j)?;
        Ok(&mut self.cells[k])
    }

    /// Correlation estimate for a setting combination; [`Error::EmptyCell`] if it saw no coincidences.
    pub fn correlation(&self, i: usize, j: usize) -> Result<Estimate> {
        self.counts(i, j)?.estimate().ok_or(Error::EmptyCell(i, j))
    }

    /// Setting combinations with zero coincidences.
    pub fn empty_cells(&self) -> Vec<(usize, usize)> {
        self.index_pairs()
            .filter(|&(i, j)| self.cells[i * self.settings2.len() + j].total() == 0)
            .collect()
    }

    /// Total number of coincidences in the table.
    pub fn total(&self) -> u64 {
        self.cells.iter().map(CellCounts::total).sum()
    }

    fn index_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n2 = self.settings2.len();
        (0..self.settings1.len()).flat_map(move |i| (0..n2).map(move |j| (i, j)))
    }

    pub fn rows(&self) -> Vec<CorrelationRow> {
        self.index_pairs()
            .map(|(i, j)| {
                let c = self.cells[i * self.settings2.len() + j];
                let est = c.estimate();
                CorrelationRow {
                    setting_index1: i,
                    setting_index2: j,
                    angle1_rad: self.settings1[i].angle(),
                    angle2_rad: self.settings2[j].angle(),
                    n_pp: c.pp,
                    n_pm: c.pm,
                    n_mp: c.mp,
                    n_mm: c.mm,
                    n_total: c.total(),
                    correlation: est.map(|e| e.value),
                    stderr: est.map(|e| e.stderr),
                }
            })
            .collect()
    }

    fn merge(&mut self, other: &CorrelationTable) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.merge(b);
        }
    }

    /// Index of `setting` in a station's list, comparing orientations modulo π.
    pub fn setting_index(&self, station: u8, setting: Setting) -> Result<usize> {
        let list = if station == 1 { &self.settings1 } else { &self.settings2 };
        setting_position(list, setting).ok_or(Error::UnknownSetting {
            station,
            angle: setting.angle(),
        })
    }
}

/// Position of `setting` in `list`, comparing orientations modulo π.
pub fn setting_position(list: &[Setting], setting: Setting) -> Option<usize> {
    const TOL: f64 = 1e-9;
    let target = setting.normalized();
    list.iter().position(|s| {
        let d = (s.normalized() - target).abs();
        d < TOL || (std::f64::consts::PI - d) < TOL
    })
}

/// Counts coincidences by setting combination and outcome pair.
pub fn tabulate(coincidences: &[CoincidencePair], config: &ExperimentConfig) -> Result<CorrelationTable> {
    if coincidences.is_empty() {
        return Err(Error::NoCoincidences);
    }
    let mut table = CorrelationTable::empty(config.settings1.clone(), config.settings2.clone());
    for c in coincidences {
        let (i, j) = (c.event1.setting_index, c.event2.setting_index);
        table
            .counts_mut(i, j)
            .map_err(|_| {
                Error::invalid(
                    "setting_index",
                    format!("combination ({i}, {j}) outside the configured setting lists"),
                )
            })?
            .record(c.event1.outcome, c.event2.outcome);
    }
    Ok(table)
}

/// CHSH angles `(a, a', b, b')`: `a, a'` at station 1, `b, b'` at station 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshQuadruple {
    pub a: Setting,
    pub a_prime: Setting,
    pub b: Setting,
    pub b_prime: Setting,
}

impl Default for ChshQuadruple {
    /// `(0, π/4, π/8, 3π/8)`, where the singlet correlation violates CHSH maximally.
    fn default() -> Self {
        ChshQuadruple {
            a: Setting(0.0),
            a_prime: Setting(FRAC_PI_4),
            b: Setting(FRAC_PI_8),
            b_prime: Setting(3.0 * FRAC_PI_8),
        }
    }
}

impl ChshQuadruple {
    pub fn station1(&self) -> Vec<Setting> {
        vec![self.a, self.a_prime]
    }

    pub fn station2(&self) -> Vec<Setting> {
        vec![self.b, self.b_prime]
    }

    /// The four `(station 1, station 2)` setting combinations, in CHSH term order.
    pub fn combinations(&self) -> [(Setting, Setting); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshValue {
    pub s: f64,
    pub stderr: f64,
}

/// `S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|` from four correlations in CHSH term order.
pub fn chsh_from_correlations(e: [f64; 4]) -> f64 {
    (e[0] - e[1] + e[2] + e[3]).abs()
}

/// CHSH statistic of a table, with the four standard errors added in quadrature.
pub fn chsh(table: &CorrelationTable, quadruple: &ChshQuadruple) -> Result<ChshValue> {
    let mut values = [0.0; 4];
    let mut var = 0.0;
    for (k, (s1, s2)) in quadruple.combinations().into_iter().enumerate() {
        let i = table.setting_index(1, s1)?;
        let j = table.setting_index(2, s2)?;
        let est = table.correlation(i, j)?;
        values[k] = est.value;
        var += est.stderr * est.stderr;
    }
    Ok(ChshValue {
        s: chsh_from_correlations(values),
        stderr: var.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub window: f64,
    pub s: f64,
    pub stderr: f64,
    pub coincidence_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Windows `(W_k, W_{k+1})` between which `S - level` changes sign.
    pub fn crossings(&self, level: f64) -> Vec<(f64, f64)> {
        self.rows
            .windows(2)
            .filter(|w| (w[0].s - level).signum() != (w[1].s - level).signum())
            .map(|w| (w[0].window, w[1].window))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub quadruple: ChshQuadruple,
    pub matcher: MatchPolicy,
    /// Run a fresh experiment per window instead of re-filtering one event log.
    pub independent: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            quadruple: ChshQuadruple::default(),
            matcher: MatchPolicy::Paired,
            independent: false,
        }
    }
}

fn check_windows(windows: &[f64]) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::invalid("windows", "need at least one window"));
    }
    if let Some(w) = windows.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::invalid("windows", format!("window {w} is not >= 0")));
    }
    if windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("windows", "windows must be strictly increasing"));
    }
    Ok(())
}

/// Seed of the `k`-th independent sweep run.
pub fn sweep_seed(seed: u64, k: usize) -> u64 {
    // splitmix64 finalizer, so neighbouring runs do not share a root seed pattern
    let mut z = seed.wrapping_add((k as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn sweep_row(
    window: f64,
    coincidences: &[CoincidencePair],
    log: &EventLog,
    quadruple: &ChshQuadruple,
) -> Result<SweepRow> {
    let table = tabulate(coincidences, &log.config)?;
    let value = chsh(&table, quadruple)?;
    Ok(SweepRow {
        window,
        s: value.s,
        stderr: value.stderr,
        coincidence_rate: coincidences.len() as f64 / log.n_pairs() as f64,
    })
}

/// CHSH `S` as a function of the coincidence window.
///
/// By default one event log is generated and re-filtered at every window; with
/// `independent` each window gets its own run seeded by [`sweep_seed`].
pub fn window_sweep(
    config: &ExperimentConfig,
    windows: &[f64],
    options: &SweepOptions,
) -> Result<SweepResult> {
    check_windows(windows)?;
    if !options.independent {
        let log = run_experiment(config)?;
        return sweep_log(&log, windows, options);
    }
    let rows = windows
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let log = run_experiment(&config.clone().with_seed(sweep_seed(config.seed, k)))?;
            let c = find_coincidences(&log, w, options.matcher)?;
            sweep_row(w, &c, &log, &options.quadruple)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// Sweeps an existing event log, e.g. one read back from time-tag files.
pub fn sweep_log(log: &EventLog, windows: &[f64], options: &SweepOptions) -> Result<SweepResult> {
    check_windows(windows)?;
    let rows = match options.matcher {
        MatchPolicy::Paired => {
            let pairs = pair_events(log)?;
            windows
                .iter()
                .map(|&w| sweep_row(w, &filter_paired(&pairs, w), log, &options.quadruple))
                .collect::<Result<Vec<_>>>()?
        }
        MatchPolicy::Stream => windows
            .par_iter()
            .map(|&w| sweep_row(w, &stream_match(log, w)?, log, &options.quadruple))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(SweepResult { rows })
}

/// Generates the experiment pair by pair and tabulates window-filtered
/// coincidences for every window, without keeping the event log in memory.
///
/// Produces the same tables as `run_experiment` followed by `pair_filter` and
/// `tabulate` at each window.
pub fn simulate_tables(config: &ExperimentConfig, windows: &[f64]) -> Result<Vec<CorrelationTable>> {
    check_windows(windows)?;
    config.validate()?;
    let streams = Substreams::new(config.seed);
    let emission = EmissionTimes::new(config, &streams);
    let blank = || vec![CorrelationTable::empty(config.settings1.clone(), config.settings2.clone()); windows.len()];
    let tables = (0..config.n_pairs)
        .into_par_iter()
        .fold(blank, |mut tables, id| {
            let (e1, e2) = experiment_pair(config, &streams, &emission, id);
            let gap = (e2.time_tag - e1.time_tag).abs();
            let first = windows.partition_point(|&w| w < gap);
            for table in &mut tables[first..] {
                let k = table.slot(e1.setting_index, e2.setting_index).expect("index within lists");
                table.cells[k].record(e1.outcome, e2.outcome);
            }
            tables
        })
        .reduce(blank, |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
            a
        });
    Ok(tables)
}

/// Angle difference `a2 - a1` folded into `[0, π)`, for reporting.
pub fn folded_difference(a1: Setting, a2: Setting) -> f64 {
    normalize_angle(a2.angle() - a1.angle())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn table_with(cells: [CellCounts; 4]) -> CorrelationTable {
        let q = ChshQuadruple::default();
        CorrelationTable::from_counts(q.station1(), q.station2(), cells.to_vec()).unwrap()
    }

    #[test]
    fn estimate_examples() {
        let e = CellCounts::new(10, 0, 0, 10).estimate().unwrap();
        assert_eq!(e.value, 1.0);
        let e = CellCounts::new(0, 10, 10, 0).estimate().unwrap();
        assert_eq!(e.value, -1.0);
        let e = CellCounts::new(5, 5, 5, 5).estimate().unwrap();
        assert_eq!(e.value, 0.0);
        assert!((e.stderr - (1.0f64 / 20.0).sqrt()).abs() < 1e-15);
        assert!(CellCounts::default().estimate().is_none());
    }

    #[test]
    fn empty_cell_reported() {
        let c = CellCounts::new(5, 5, 5, 5);
        let t = table_with([c, c, CellCounts::default(), c]);
        assert_eq!(t.empty_cells(), vec![(1, 0)]);
        assert!(matches!(t.correlation(1, 0), Err(Error::EmptyCell(1, 0))));
        assert!(matches!(chsh(&t, &ChshQuadruple::default()), Err(Error::EmptyCell(1, 0))));
        assert!(matches!(t.counts(2, 0), Err(Error::MissingCombination(2, 0))));
    }

    #[test]
    fn tabulate_needs_coincidences() {
        let params = crate::model::ModelParams::new(4.0, 1.0, 0.1).unwrap();
        let q = ChshQuadruple::default();
        let config = ExperimentConfig::new(params, q.station1(), q.station2(), 10, 0);
        assert!(matches!(tabulate(&[], &config), Err(Error::NoCoincidences)));
    }

    #[test]
    fn zero_table_gives_zero_s() {
        let c = CellCounts::new(5, 5, 5, 5);
        let v = chsh(&table_with([c; 4]), &ChshQuadruple::default()).unwrap();
        assert_eq!(v.s, 0.0);
        assert!((v.stderr - (4.0f64 / 20.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chsh_of_closed_form_correlations() {
        let q = ChshQuadruple::default();
        let singlet = q.combinations().map(|(a, b)| -(2.0 * (a.angle() - b.angle())).cos());
        assert!((chsh_from_correlations(singlet) - 2.0 * SQRT_2).abs() < 1e-12);
        let mixed = singlet.map(|e| 0.5 * e);
        assert!((chsh_from_correlations(mixed) - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn quadruple_lookup_uses_orientation() {
        let t = table_with([CellCounts::new(1, 0, 0, 0); 4]);
        assert_eq!(t.setting_index(1, Setting(std::f64::consts::PI)).unwrap(), 0);
        assert!(matches!(
            t.setting_index(2, Setting(0.3)),
            Err(Error::UnknownSetting { station: 2, .. })
        ));
    }

    #[test]
    fn windows_must_increase() {
        assert!(check_windows(&[]).is_err());
        assert!(check_windows(&[1.0, 1.0]).is_err());
        assert!(check_windows(&[2.0, 1.0]).is_err());
        assert!(check_windows(&[-1.0]).is_err());
        assert!(check_windows(&[0.0, 1.0]).is_ok());
    }

    #[test]
    fn crossing_detection() {
        let row = |window, s| SweepRow { window, s, stderr: 0.0, coincidence_rate: 1.0 };
        let r = SweepResult { rows: vec![row(1.0, 2.8), row(2.0, 2.1), row(3.0, 1.9), row(4.0, 1.5)] };
        assert_eq!(r.crossings(2.0), vec![(2.0, 3.0)]);
    }
}
