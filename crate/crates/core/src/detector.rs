//! Convergence-based causality detection.
//!
//! Testing "cause → effect" embeds the *effect* series (together with θ for
//! BPM) and cross-maps the *cause*: if the cause drives the effect, the
//! effect's reconstructed attractor carries enough information to recover the
//! cause, and the recovery improves as the library grows.
//!
//! For each library size L and replicate r a library is drawn uniformly
//! without replacement from the manifold, using a ChaCha stream keyed by
//! `(seed, L, r)`. Every manifold point is then cross-mapped and scored.
//! Cells are independent and run in parallel; results are assembled by key.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossmap::{cross_map_series, CrossMapOptions, LibrarySample};
use crate::data::{format_real, Dataset, TimeSeries};
use crate::embedding::{check_dimension_bound, embed_bivariate, embed_univariate, EmbeddingConfig, ShadowManifold};
use crate::error::{Error, Result};
use crate::stats::skill;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Convergent cross mapping: univariate manifold, Pearson skill.
    Ccm,
    /// Bivariate partial mapping: manifold of (effect, θ), partial correlation given θ.
    Bpm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ccm => "ccm",
            Method::Bpm => "bpm",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds turning a convergence curve into a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCriteria {
    pub min_final_skill: f64,
    /// Largest tolerated |slope| of skill per unit L.
    pub max_slope: f64,
    /// Number of trailing grid points used for the plateau slope.
    pub window: usize,
}

impl Default for ConvergenceCriteria {
    fn default() -> Self {
        Self {
            min_final_skill: 0.5,
            max_slope: 5e-5,
            window: 3,
        }
    }
}

pub const DEFAULT_REPLICATES: usize = 16;
pub const DEFAULT_GRID_MIN: usize = 50;
pub const DEFAULT_GRID_MAX: usize = 2000;
pub const DEFAULT_GRID_STEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub method: Method,
    /// Total embedding dimension E.
    pub embed_dim: usize,
    pub tau: usize,
    /// Library sizes; `None` selects [`default_grid`] for the manifold size.
    pub l_grid: Option<Vec<usize>>,
    pub replicates: usize,
    pub seed: u64,
    pub convergence: ConvergenceCriteria,
    pub respect_trials: bool,
    pub theiler_window: usize,
    /// Optional attractor dimension, only used to warn about small E.
    pub m_hint: Option<usize>,
}

impl DetectionConfig {
    /// E = 2, τ = 1.
    pub fn ccm() -> Self {
        Self {
            method: Method::Ccm,
            embed_dim: 2,
            tau: 1,
            l_grid: None,
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            convergence: ConvergenceCriteria::default(),
            respect_trials: true,
            theiler_window: 0,
            m_hint: None,
        }
    }

    /// E = 4 (two lagged (effect, θ) pairs), τ = 1.
    pub fn bpm() -> Self {
        Self {
            method: Method::Bpm,
            embed_dim: 4,
            ..Self::ccm()
        }
    }

    pub fn for_method(method: Method) -> Self {
        match method {
            Method::Ccm => Self::ccm(),
            Method::Bpm => Self::bpm(),
        }
    }

    fn embedding(&self) -> EmbeddingConfig {
        EmbeddingConfig {
            dim: self.embed_dim,
            tau: self.tau,
            respect_trials: self.respect_trials,
        }
    }

    fn neighbors(&self) -> usize {
        self.embed_dim + 1
    }

    /// Library sizes to use for a manifold of `points` points.
    pub fn resolve_grid(&self, points: usize) -> Result<Vec<usize>> {
        let grid = match &self.l_grid {
            Some(g) => g.clone(),
            None => default_grid(self.neighbors() + 1, points),
        };
        if grid.is_empty() {
            return Err(Error::Config("library grid is empty".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("library sizes must be strictly increasing".into()));
        }
        let min_usable = self.neighbors() + 1;
        if grid[0] < min_usable {
            return Err(Error::Config(format!(
                "library size {} is too small; E + 1 = {} neighbors need L >= {min_usable}",
                grid[0],
                self.neighbors()
            )));
        }
        let largest = *grid.last().unwrap();
        if largest > points {
            return Err(Error::Config(format!(
                "library size {largest} exceeds the data; max usable L is {points}"
            )));
        }
        Ok(grid)
    }
}

/// Ten log-spaced library sizes from 50 to `min(2000, points)`, clipped
/// below at `floor`.
pub fn default_grid(floor: usize, points: usize) -> Vec<usize> {
    let hi = points.min(DEFAULT_GRID_MAX);
    let lo = DEFAULT_GRID_MIN.min(hi).max(floor);
    log_grid(lo, hi, DEFAULT_GRID_STEPS)
}

/// `steps` integers spaced evenly in log between `lo` and `hi` inclusive,
/// with duplicates from rounding removed.
pub fn log_grid(lo: usize, hi: usize, steps: usize) -> Vec<usize> {
    if hi <= lo || steps < 2 {
        return vec![hi.max(lo)];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..steps)
        .map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp().round() as usize)
        .collect();
    grid[0] = lo;
    grid[steps - 1] = hi;
    grid.dedup();
    grid
}

/// Cross-map skill as a function of library size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub method: Method,
    pub cause: String,
    pub effect: String,
    pub l_values: Vec<usize>,
    pub mean_skill: Vec<f64>,
    /// Sample standard deviation across replicates (0 for a single replicate).
    pub std_skill: Vec<f64>,
    pub replicates: usize,
    /// `skills[i][r]` is replicate `r` at `l_values[i]`.
    pub skills: Vec<Vec<f64>>,
}

impl ConvergenceCurve {
    pub fn len(&self) -> usize {
        self.l_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l_values.is_empty()
    }

    pub fn final_skill(&self) -> Option<f64> {
        self.mean_skill.last().copied()
    }
}

/// Decision for one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityVerdict {
    pub method: Method,
    pub cause: String,
    pub effect: String,
    pub converged: bool,
    pub final_skill: f64,
    /// Least-squares slope of mean skill over the trailing window.
    pub tail_slope: f64,
    /// Least-squares slope of mean skill over the whole grid.
    pub trend_slope: f64,
    pub thresholds: ConvergenceCriteria,
}

fn stream_id(library_size: usize, replicate: usize) -> u64 {
    ((library_size as u64) << 32) | replicate as u64
}

fn library_rng(seed: u64, library_size: usize, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(library_size, replicate));
    rng
}

fn is_constant(s: &TimeSeries) -> bool {
    s.values().iter().all(|&v| v == s.values()[0])
}

fn effect_manifold(
    effect: &TimeSeries,
    theta: Option<&TimeSeries>,
    cfg: &DetectionConfig,
) -> Result<ShadowManifold> {
    match (cfg.method, theta) {
        (Method::Ccm, _) => {
            check_dimension_bound(cfg.embed_dim, 1, cfg.m_hint);
            embed_univariate(effect, &cfg.embedding())
        }
        (Method::Bpm, Some(theta)) => {
            check_dimension_bound(cfg.embed_dim, 2, cfg.m_hint);
            embed_bivariate(effect, theta, &cfg.embedding())
        }
        (Method::Bpm, None) => Err(Error::Config("BPM requires a θ series".into())),
    }
}

/// Convergence curve for the hypothesis "`cause` drives `effect`".
pub fn run_direction(
    dataset: &Dataset,
    cause: &str,
    effect: &str,
    theta: Option<&str>,
    cfg: &DetectionConfig,
) -> Result<ConvergenceCurve> {
    if cfg.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let cause_series = dataset.get(cause)?;
    let effect_series = dataset.get(effect)?;
    let theta_series = match cfg.method {
        Method::Ccm => None,
        Method::Bpm => {
            let name = theta.ok_or_else(|| Error::Config("BPM requires a θ series".into()))?;
            let s = dataset.get(name)?;
            if is_constant(s) {
                return Err(Error::ControlDegenerate);
            }
            Some(s)
        }
    };
    let manifold = effect_manifold(effect_series, theta_series, cfg)?;
    let grid = cfg.resolve_grid(manifold.len())?;
    let opts = CrossMapOptions {
        neighbors: None,
        theiler_window: cfg.theiler_window,
    };

    let cells: Vec<(usize, usize)> = grid
        .iter()
        .flat_map(|&l| (0..cfg.replicates).map(move |r| (l, r)))
        .collect();
    let scores = cells
        .par_iter()
        .map(|&(l, r)| {
            let library = LibrarySample::random(&manifold, l, &mut library_rng(cfg.seed, l, r))?;
            let mapped = cross_map_series(&manifold, cause_series, theta_series, &library, &opts)?;
            Ok(skill(&mapped.estimates, &mapped.actuals, mapped.control.as_deref())?.value)
        })
        .collect::<Result<Vec<f64>>>()?;

    let skills: Vec<Vec<f64>> = scores.chunks(cfg.replicates).map(<[f64]>::to_vec).collect();
    let (mean_skill, std_skill) = skills.iter().map(|s| mean_std(s)).unzip();
    Ok(ConvergenceCurve {
        method: cfg.method,
        cause: cause.to_owned(),
        effect: effect.to_owned(),
        l_values: grid,
        mean_skill,
        std_skill,
        replicates: cfg.replicates,
        skills,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

fn ls_slope(xs: &[usize], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Converged when the final skill clears the threshold, the trailing window
/// is flat, and the curve as a whole is not declining.
pub fn assess(curve: &ConvergenceCurve, criteria: &ConvergenceCriteria) -> Result<CausalityVerdict> {
    let window = criteria.window;
    if window < 2 {
        return Err(Error::Config("convergence window must be at least 2".into()));
    }
    if curve.len() < window || curve.mean_skill.len() != curve.len() {
        return Err(Error::Config(format!(
            "curve has {} grid points; the convergence window needs {window}",
            curve.len()
        )));
    }
    let n = curve.len();
    let final_skill = curve.mean_skill[n - 1];
    let tail_slope = ls_slope(&curve.l_values[n - window..], &curve.mean_skill[n - window..]);
    let trend_slope = ls_slope(&curve.l_values, &curve.mean_skill);
    let converged = final_skill >= criteria.min_final_skill
        && tail_slope.abs() <= criteria.max_slope
        && trend_slope >= -criteria.max_slope;
    Ok(CausalityVerdict {
        method: curve.method,
        cause: curve.cause.clone(),
        effect: curve.effect.clone(),
        converged,
        final_skill,
        tail_slope,
        trend_slope,
        thresholds: *criteria,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub curve: ConvergenceCurve,
    pub verdict: CausalityVerdict,
}

/// Both directions between two series, sharing library draws per (L, replicate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub x_to_y: DirectionResult,
    pub y_to_x: DirectionResult,
}

impl PairwiseResult {
    pub fn directions(&self) -> [&DirectionResult; 2] {
        [&self.x_to_y, &self.y_to_x]
    }
}

pub fn run_pairwise(
    dataset: &Dataset,
    x: &str,
    y: &str,
    theta: Option<&str>,
    cfg: &DetectionConfig,
) -> Result<PairwiseResult> {
    let run = |cause, effect| -> Result<DirectionResult> {
        let curve = run_direction(dataset, cause, effect, theta, cfg)?;
        let verdict = assess(&curve, &cfg.convergence)?;
        Ok(DirectionResult { curve, verdict })
    };
    Ok(PairwiseResult {
        x_to_y: run(x, y)?,
        y_to_x: run(y, x)?,
    })
}

/// `method,cause,effect,L,replicate_mean,replicate_std`, one row per grid point.
pub fn write_curves_csv<'a, W: Write>(
    curves: impl IntoIterator<Item = &'a ConvergenceCurve>,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["method", "cause", "effect", "L", "replicate_mean", "replicate_std"])?;
    for c in curves {
        for i in 0..c.len() {
            wtr.write_record([
                c.method.as_str(),
                &c.cause,
                &c.effect,
                &c.l_values[i].to_string(),
                &format_real(c.mean_skill[i]),
                &format_real(c.std_skill[i]),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// `method,cause,effect,L,replicate,skill`, one row per (L, replicate) cell.
pub fn write_replicates_csv<'a, W: Write>(
    curves: impl IntoIterator<Item = &'a ConvergenceCurve>,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["method", "cause", "effect", "L", "replicate", "skill"])?;
    for c in curves {
        for (l, skills) in c.l_values.iter().zip(&c.skills) {
            for (r, s) in skills.iter().enumerate() {
                wtr.write_record([
                    c.method.as_str(),
                    &c.cause,
                    &c.effect,
                    &l.to_string(),
                    &r.to_string(),
                    &format_real(*s),
                ])?;
            }
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Settings echoed next to each verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictConfig {
    #[serde(rename = "E")]
    pub embed_dim: usize,
    pub tau: usize,
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub thresholds: ConvergenceCriteria,
}

/// Serialized verdict: `{method, cause, effect, converged, final_skill, config}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub method: Method,
    pub cause: String,
    pub effect: String,
    pub converged: bool,
    pub final_skill: f64,
    pub config: VerdictConfig,
}

impl VerdictReport {
    pub fn new(result: &DirectionResult, cfg: &DetectionConfig) -> Self {
        let v = &result.verdict;
        Self {
            method: v.method,
            cause: v.cause.clone(),
            effect: v.effect.clone(),
            converged: v.converged,
            final_skill: v.final_skill,
            config: VerdictConfig {
                embed_dim: cfg.embed_dim,
                tau: cfg.tau,
                l_grid: result.curve.l_values.clone(),
                replicates: cfg.replicates,
                seed: cfg.seed,
                thresholds: v.thresholds,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{simulate, Case, SystemSpec};

    fn curve(l: &[usize], skill: &[f64]) -> ConvergenceCurve {
        ConvergenceCurve {
            method: Method::Ccm,
            cause: "a".into(),
            effect: "b".into(),
            l_values: l.to_vec(),
            mean_skill: skill.to_vec(),
            std_skill: vec![0.0; l.len()],
            replicates: 1,
            skills: skill.iter().map(|&s| vec![s]).collect(),
        }
    }

    const GRID: [usize; 10] = [50, 75, 113, 171, 258, 388, 585, 881, 1327, 2000];

    #[test]
    fn flat_curve_converges() {
        let criteria = ConvergenceCriteria {
            min_final_skill: 0.5,
            max_slope: 1e-4,
            window: 3,
        };
        let v = assess(&curve(&GRID, &[0.95; 10]), &criteria).unwrap();
        assert!(v.converged);
        assert!(v.tail_slope.abs() < 1e-15);
    }

    #[test]
    fn descending_curve_does_not_converge() {
        let skill: Vec<f64> = (0..10).map(|i| 0.9 - 0.7 * i as f64 / 9.0).collect();
        let v = assess(&curve(&GRID, &skill), &ConvergenceCriteria::default()).unwrap();
        assert!(!v.converged);
        assert!((v.final_skill - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rising_then_plateau_converges() {
        // Saturating rise 0.1 → 0.85 with time constant 150 samples.
        let skill: Vec<f64> = GRID
            .iter()
            .map(|&l| 0.85 - 0.75 * (-((l - 50) as f64) / 150.0).exp())
            .collect();
        let v = assess(&curve(&GRID, &skill), &ConvergenceCriteria::default()).unwrap();
        assert!(v.tail_slope.abs() < 5e-5, "{}", v.tail_slope);
        assert!(v.converged);
    }

    #[test]
    fn still_rising_curve_is_not_converged() {
        let skill: Vec<f64> = GRID.iter().map(|&l| 0.3 + 0.0003 * l as f64).collect();
        let v = assess(&curve(&GRID, &skill), &ConvergenceCriteria::default()).unwrap();
        assert!(v.final_skill > 0.5);
        assert!(!v.converged);
    }

    #[test]
    fn too_few_points_is_config_error() {
        let err = assess(&curve(&[50, 100], &[0.9, 0.9]), &ConvergenceCriteria::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(default_grid(6, 2999), GRID.to_vec());
        let g = default_grid(6, 300);
        assert_eq!((g[0], *g.last().unwrap()), (50, 300));
        assert_eq!(log_grid(10, 10, 5), vec![10]);
        let small = default_grid(6, 8);
        assert_eq!(small, vec![8]);
    }

    fn case3() -> Dataset {
        let mut spec = SystemSpec::new(Case::Case3, (0.2, 0.2));
        spec.steps = 400;
        simulate(&spec).unwrap()
    }

    #[test]
    fn grid_validation_errors() {
        let d = case3();
        let mut cfg = DetectionConfig::ccm();
        cfg.l_grid = Some(vec![50, 500]);
        let err = run_direction(&d, "X", "Y", None, &cfg).unwrap_err();
        assert!(err.to_string().contains("max usable L is 399"), "{err}");
        cfg.l_grid = Some(vec![100, 50]);
        assert!(matches!(run_direction(&d, "X", "Y", None, &cfg), Err(Error::Config(_))));
        cfg.l_grid = Some(vec![3, 50]);
        assert!(matches!(run_direction(&d, "X", "Y", None, &cfg), Err(Error::Config(_))));
        cfg.l_grid = Some(vec![50]);
        cfg.replicates = 0;
        assert!(matches!(run_direction(&d, "X", "Y", None, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn bpm_requires_varying_theta() {
        let d = case3();
        let cfg = DetectionConfig::bpm();
        assert!(matches!(run_direction(&d, "X", "Y", None, &cfg), Err(Error::Config(_))));
        let mut d2 = Dataset::new(vec![d.get("X").unwrap().clone(), d.get("Y").unwrap().clone()]).unwrap();
        d2.insert(TimeSeries::new("flat", vec![0.5; d.len()]).unwrap()).unwrap();
        assert!(matches!(
            run_direction(&d2, "X", "Y", Some("flat"), &cfg),
            Err(Error::ControlDegenerate)
        ));
    }

    #[test]
    fn pairwise_shapes_and_export() {
        let d = case3();
        let mut cfg = DetectionConfig::bpm();
        cfg.l_grid = Some(vec![20, 60, 120]);
        cfg.replicates = 2;
        let res = run_pairwise(&d, "X", "Y", Some("theta"), &cfg).unwrap();
        assert_eq!(res.x_to_y.curve.cause, "X");
        assert_eq!(res.y_to_x.curve.cause, "Y");
        for dir in res.directions() {
            assert_eq!(dir.curve.len(), 3);
            assert!(dir.curve.std_skill.iter().all(|s| *s >= 0.0));
            assert!(dir.curve.mean_skill.iter().all(|s| s.is_finite()));
        }
        let mut buf = Vec::new();
        write_replicates_csv(res.directions().map(|d| &d.curve), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 3 * 2 * 2);
        let mut buf = Vec::new();
        write_curves_csv(res.directions().map(|d| &d.curve), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,cause,effect,L,replicate_mean,replicate_std\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 2);

        let report = VerdictReport::new(&res.x_to_y, &cfg);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["method"], "bpm");
        assert_eq!(json["config"]["E"], 4);
        assert_eq!(json["config"]["L_grid"][2], 120);
        assert_eq!(json["config"]["thresholds"]["window"], 3);
    }
}
