//! Simplex-projection cross mapping.
//!
//! For every point of a shadow manifold, the `E + 1` nearest library points
//! are located and the target series is estimated as an exponentially
//! distance-weighted average of its values at the neighbors' times.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::data::{format_real, TimeSeries};
use crate::embedding::ShadowManifold;
use crate::error::{Error, Result};

/// Nearest neighbors of a query point, closest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub times: Vec<usize>,
    pub distances: Vec<f64>,
}

/// Manifold times eligible to serve as neighbors. Stored sorted, so two
/// samples holding the same set compare equal regardless of draw order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibrarySample {
    times: Vec<usize>,
}

impl LibrarySample {
    pub fn new(mut times: Vec<usize>) -> Result<Self> {
        times.sort_unstable();
        if times.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("library times must be distinct".into()));
        }
        Ok(Self { times })
    }

    /// Every point of the manifold.
    pub fn full(manifold: &ShadowManifold) -> Self {
        Self {
            times: manifold.times().to_vec(),
        }
    }

    /// `size` manifold times drawn uniformly without replacement.
    pub fn random<R: Rng + ?Sized>(manifold: &ShadowManifold, size: usize, rng: &mut R) -> Result<Self> {
        if size > manifold.len() {
            return Err(Error::Config(format!(
                "library size {size} exceeds the {} manifold points",
                manifold.len()
            )));
        }
        let mut times: Vec<usize> = rand::seq::index::sample(rng, manifold.len(), size)
            .into_iter()
            .map(|i| manifold.times()[i])
            .collect();
        times.sort_unstable();
        Ok(Self { times })
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn size(&self) -> usize {
        self.times.len()
    }

    fn resolve(&self, manifold: &ShadowManifold) -> Result<Vec<usize>> {
        self.times
            .iter()
            .map(|&t| manifold.index_of(t).ok_or(Error::UnknownTime(t)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CrossMapOptions {
    /// Neighbor count; `None` means E + 1.
    pub neighbors: Option<usize>,
    /// Candidates with `|t - query| <= theiler_window` are excluded. The
    /// query itself is always excluded.
    pub theiler_window: usize,
}

impl CrossMapOptions {
    fn k(&self, manifold: &ShadowManifold) -> usize {
        self.neighbors.unwrap_or(manifold.dim() + 1)
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Exhaustive k-nearest search over library storage positions `library`.
/// Ties in distance go to the smaller time index.
fn nearest(
    manifold: &ShadowManifold,
    query: usize,
    library: &[usize],
    k: usize,
    exclusion: usize,
) -> Result<NeighborSet> {
    if k == 0 {
        return Err(Error::Config("neighbor count must be at least 1".into()));
    }
    let times = manifold.times();
    let qt = times[query];
    let q = manifold.point(query);
    // (distance, time), kept sorted ascending
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    let mut candidates = 0usize;
    for &idx in library {
        let t = times[idx];
        if t.abs_diff(qt) <= exclusion {
            continue;
        }
        candidates += 1;
        let d = distance(q, manifold.point(idx));
        if best.len() == k {
            let (wd, wt) = best[k - 1];
            if d > wd || (d == wd && t > wt) {
                continue;
            }
        }
        let pos = best.partition_point(|&(bd, bt)| bd < d || (bd == d && bt < t));
        best.insert(pos, (d, t));
        best.truncate(k);
    }
    if candidates < k {
        return Err(Error::InsufficientLibrary {
            required: k,
            available: candidates,
        });
    }
    Ok(NeighborSet {
        times: best.iter().map(|&(_, t)| t).collect(),
        distances: best.iter().map(|&(d, _)| d).collect(),
    })
}

/// The `k` library points closest to the point at `query_time`, excluding
/// the query itself.
pub fn find_neighbors(
    manifold: &ShadowManifold,
    query_time: usize,
    library: &LibrarySample,
    k: usize,
) -> Result<NeighborSet> {
    let query = manifold
        .index_of(query_time)
        .ok_or(Error::UnknownTime(query_time))?;
    nearest(manifold, query, &library.resolve(manifold)?, k, 0)
}

/// Exponential simplex weights `u_k = exp(-d_k / d_1)`, normalized to sum to 1.
///
/// When the nearest distance is zero the mass is spread uniformly over the
/// exact matches.
pub fn simplex_weights(distances: &[f64]) -> Result<Vec<f64>> {
    let Some(&nearest) = distances.first() else {
        return Err(Error::Domain("simplex weights need at least one distance".into()));
    };
    if let Some(d) = distances.iter().find(|d| !d.is_finite() || **d < 0.0) {
        return Err(Error::Domain(format!("distances must be finite and non-negative, got {d}")));
    }
    if distances.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("distances must be non-decreasing".into()));
    }
    if nearest == 0.0 {
        let exact = distances.iter().filter(|&&d| d == 0.0).count();
        let w = 1.0 / exact as f64;
        return Ok(distances
            .iter()
            .map(|&d| if d == 0.0 { w } else { 0.0 })
            .collect());
    }
    let u: Vec<f64> = distances.iter().map(|d| (-d / nearest).exp()).collect();
    let total: f64 = u.iter().sum();
    Ok(u.into_iter().map(|v| v / total).collect())
}

fn estimate_at(
    manifold: &ShadowManifold,
    target: &TimeSeries,
    query: usize,
    library: &[usize],
    opts: &CrossMapOptions,
) -> Result<f64> {
    let neighbors = nearest(manifold, query, library, opts.k(manifold), opts.theiler_window)?;
    let weights = simplex_weights(&neighbors.distances)?;
    Ok(weights
        .iter()
        .zip(&neighbors.times)
        .map(|(w, &t)| w * target.at(t))
        .sum())
}

fn check_covers(manifold: &ShadowManifold, series: &TimeSeries) -> Result<()> {
    match manifold.times().last() {
        Some(&last) if last > series.len() => Err(Error::InsufficientData {
            required: last,
            available: series.len(),
        }),
        _ => Ok(()),
    }
}

/// Simplex estimate of `target` at `query_time` from its E + 1 nearest
/// library neighbors on `manifold`.
pub fn cross_map_estimate(
    manifold: &ShadowManifold,
    target: &TimeSeries,
    query_time: usize,
    library: &LibrarySample,
) -> Result<f64> {
    check_covers(manifold, target)?;
    let query = manifold
        .index_of(query_time)
        .ok_or(Error::UnknownTime(query_time))?;
    estimate_at(
        manifold,
        target,
        query,
        &library.resolve(manifold)?,
        &CrossMapOptions::default(),
    )
}

/// Estimates, observed values and (optionally) control values, aligned by
/// manifold time.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMapSeries {
    pub times: Vec<usize>,
    pub estimates: Vec<f64>,
    pub actuals: Vec<f64>,
    pub control: Option<Vec<f64>>,
}

impl CrossMapSeries {
    /// Columns `t,actual,estimate` plus `theta` when a control is present.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["t", "actual", "estimate"];
        if self.control.is_some() {
            header.push("theta");
        }
        wtr.write_record(&header)?;
        for i in 0..self.times.len() {
            let mut row = vec![
                self.times[i].to_string(),
                format_real(self.actuals[i]),
                format_real(self.estimates[i]),
            ];
            if let Some(c) = &self.control {
                row.push(format_real(c[i]));
            }
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

/// Cross-maps `target` at every manifold point, drawing neighbors only from
/// `library`. Queries run in parallel; output order follows manifold time.
pub fn cross_map_series(
    manifold: &ShadowManifold,
    target: &TimeSeries,
    control: Option<&TimeSeries>,
    library: &LibrarySample,
    opts: &CrossMapOptions,
) -> Result<CrossMapSeries> {
    check_covers(manifold, target)?;
    if let Some(c) = control {
        check_covers(manifold, c)?;
    }
    let lib = library.resolve(manifold)?;
    let estimates = (0..manifold.len())
        .into_par_iter()
        .map(|q| estimate_at(manifold, target, q, &lib, opts))
        .collect::<Result<Vec<f64>>>()?;
    let times = manifold.times().to_vec();
    let actuals = times.iter().map(|&t| target.at(t)).collect();
    let control = control.map(|c| times.iter().map(|&t| c.at(t)).collect());
    Ok(CrossMapSeries {
        times,
        estimates,
        actuals,
        control,
    })
}
