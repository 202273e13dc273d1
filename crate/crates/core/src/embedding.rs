//! Delay-coordinate shadow manifolds.
//!
//! A univariate manifold stacks `E` lagged copies of one series. A bivariate
//! manifold interleaves `E/2` lagged pairs of a primary series and a control
//! series: `(x(t), θ(t), x(t−τ), θ(t−τ), …)`. Time indices are 1-based.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{format_real, TimeSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Total embedded dimension E.
    pub dim: usize,
    /// Lag τ in samples.
    pub tau: usize,
    /// Drop points whose lag window straddles two trials.
    pub respect_trials: bool,
}

impl EmbeddingConfig {
    pub fn new(dim: usize, tau: usize) -> Self {
        Self {
            dim,
            tau,
            respect_trials: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("E must be at least 1".into()));
        }
        if self.tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lagged-coordinate points with the time index each was built at.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowManifold {
    coords: Vec<f64>,
    times: Vec<usize>,
    dim: usize,
    tau: usize,
    variables: Vec<String>,
}

impl ShadowManifold {
    /// Builds a manifold from explicit points, mostly useful in tests.
    ///
    /// `times` must be strictly increasing and every point must have `dim`
    /// coordinates.
    pub fn from_points(points: Vec<(usize, Vec<f64>)>, tau: usize) -> Result<Self> {
        let dim = points.first().map_or(0, |(_, p)| p.len());
        if dim == 0 {
            return Err(Error::Config("manifold needs at least one non-empty point".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        let mut times = Vec::with_capacity(points.len());
        for (t, p) in points {
            if p.len() != dim {
                return Err(Error::Config(format!(
                    "point at t={t} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if times.last().is_some_and(|&last| t <= last) || t == 0 {
                return Err(Error::Config("point times must be positive and strictly increasing".into()));
            }
            coords.extend(p);
            times.push(t);
        }
        Ok(Self {
            coords,
            times,
            dim,
            tau,
            variables: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    /// Point by storage position.
    pub fn point(&self, index: usize) -> &[f64] {
        &self.coords[index * self.dim..(index + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.times.iter().copied().zip(self.coords.chunks_exact(self.dim))
    }

    /// Storage position of the point built at time `t`.
    pub fn index_of(&self, t: usize) -> Option<usize> {
        self.times.binary_search(&t).ok()
    }

    pub fn point_at(&self, t: usize) -> Option<&[f64]> {
        self.index_of(t).map(|i| self.point(i))
    }

    /// One row per point: the time index, then the E coordinates.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_owned()];
        header.extend((1..=self.dim).map(|i| format!("c{i}")));
        wtr.write_record(&header)?;
        for (t, p) in self.points() {
            let mut row = vec![t.to_string()];
            row.extend(p.iter().map(|&v| format_real(v)));
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

/// Candidate times `t` in `first..=len` whose window `[t - span, t]` stays
/// inside one trial when trial restriction is on.
fn valid_times<'a>(
    len: usize,
    span: usize,
    trials: Option<&'a [i64]>,
    respect_trials: bool,
) -> impl Iterator<Item = usize> + 'a {
    let trials = trials.filter(|_| respect_trials);
    (1 + span..=len).filter(move |&t| trials.is_none_or(|ids| ids[t - 1] == ids[t - 1 - span]))
}

/// Classic delay embedding `(x(t), x(t−τ), …, x(t−(E−1)τ))`.
pub fn embed_univariate(series: &TimeSeries, cfg: &EmbeddingConfig) -> Result<ShadowManifold> {
    cfg.validate()?;
    let span = (cfg.dim - 1) * cfg.tau;
    let required = 1 + span;
    if series.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: series.len(),
        });
    }
    let mut coords = Vec::new();
    let mut times = Vec::new();
    for t in valid_times(series.len(), span, series.trial_ids(), cfg.respect_trials) {
        coords.extend((0..cfg.dim).map(|k| series.at(t - k * cfg.tau)));
        times.push(t);
    }
    Ok(ShadowManifold {
        coords,
        times,
        dim: cfg.dim,
        tau: cfg.tau,
        variables: vec![series.name().to_owned()],
    })
}

/// Interleaved two-variable embedding `(x(t), θ(t), x(t−τ), θ(t−τ), …)` with
/// `E/2` lagged pairs.
pub fn embed_bivariate(
    primary: &TimeSeries,
    control: &TimeSeries,
    cfg: &EmbeddingConfig,
) -> Result<ShadowManifold> {
    cfg.validate()?;
    if !cfg.dim.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "E must be even for a bivariate embedding, got {}",
            cfg.dim
        )));
    }
    if primary.len() != control.len() {
        return Err(Error::LengthMismatch {
            name: control.name().to_owned(),
            expected: primary.len(),
            found: control.len(),
        });
    }
    let trials = match (primary.trial_ids(), control.trial_ids()) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::InvalidTrials {
                name: control.name().to_owned(),
                reason: format!("trial ids differ from those of `{}`", primary.name()),
            })
        }
        (a, b) => a.or(b),
    };
    let lags = cfg.dim / 2;
    let span = (lags - 1) * cfg.tau;
    let required = 1 + span;
    if primary.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: primary.len(),
        });
    }
    let mut coords = Vec::new();
    let mut times = Vec::new();
    for t in valid_times(primary.len(), span, trials, cfg.respect_trials) {
        for k in 0..lags {
            let s = t - k * cfg.tau;
            coords.push(primary.at(s));
            coords.push(control.at(s));
        }
        times.push(t);
    }
    Ok(ShadowManifold {
        coords,
        times,
        dim: cfg.dim,
        tau: cfg.tau,
        variables: vec![primary.name().to_owned(), control.name().to_owned()],
    })
}

/// Raised when an embedding has fewer coordinates than `2m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionWarning {
    pub embedded: usize,
    pub required: usize,
}

impl fmt::Display for DimensionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "embedding dimension {} is below 2m+1 = {}; reconstruction may not be an embedding",
            self.embedded, self.required
        )
    }
}

/// Checks `n·d ≥ 2m + 1` where `d = E_total / n`. Without a hint for the
/// attractor dimension `m` there is nothing to check.
pub fn check_dimension_bound(
    e_total: usize,
    n_vars: usize,
    m_hint: Option<usize>,
) -> Option<DimensionWarning> {
    let m = m_hint?;
    if n_vars == 0 {
        return None;
    }
    let embedded = n_vars * (e_total / n_vars);
    let required = 2 * m + 1;
    if embedded < required {
        let w = DimensionWarning { embedded, required };
        log::warn!("{w}");
        Some(w)
    } else {
        None
    }
}
