//! Standard Hough Transform over binary edge maps: voting, iterative peak
//! extraction with neighborhood suppression, and segment extraction with
//! gap filling and minimum-length filtering.
//!
//! Coordinates follow the accumulator formula `ρ = x·cosθ + y·sinθ` with
//! x = column and y = row (growing downward), θ quantized over [0°, 180°).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dog::EdgeMap;
use crate::error::{Error, Result};
use crate::image::write_png;

/// Full parameter set of the Hough pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughParams {
    /// θ quantization in degrees.
    pub theta_step: f64,
    /// ρ quantization in pixels.
    pub rho_step: f64,
    /// Maximum number of peaks to extract.
    pub num_peaks: u32,
    /// Minimum accumulator votes for a peak.
    pub threshold: u32,
    /// Suppression window in accumulator cells as (ρ cells, θ cells), both
    /// odd; `None` picks the smallest odd values ≥ (nρ/50, nθ/50).
    pub nhood: Option<(u32, u32)>,
    /// Largest projected gap (px) merged into one segment.
    pub fill_gap: f64,
    /// Shortest segment length (px) kept.
    pub min_length: f64,
}

impl HoughParams {
    /// Degree/pixel resolution 1 with an automatic suppression window.
    pub fn new(num_peaks: u32, threshold: u32, fill_gap: f64, min_length: f64) -> Self {
        HoughParams {
            theta_step: 1.0,
            rho_step: 1.0,
            num_peaks,
            threshold,
            nhood: None,
            fill_gap,
            min_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_step > 0.0) {
            return Err(Error::param("theta_step must be positive"));
        }
        if !(self.rho_step > 0.0) {
            return Err(Error::param("rho_step must be positive"));
        }
        if self.num_peaks < 1 {
            return Err(Error::param("num_peaks must be >= 1"));
        }
        if let Some((nr, nt)) = self.nhood {
            if nr % 2 == 0 || nt % 2 == 0 {
                return Err(Error::param("nhood dims must be odd"));
            }
        }
        if !(self.fill_gap >= 0.0) {
            return Err(Error::param("fill_gap must be >= 0"));
        }
        if !(self.min_length >= 1.0) {
            return Err(Error::param("min_length must be >= 1"));
        }
        Ok(())
    }
}

/// Vote counts over the quantized (θ, ρ) plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoughAccumulator {
    theta_step: f64,
    rho_step: f64,
    ntheta: u32,
    nrho: u32,
    /// θ-major bins: index = theta_idx · nrho + rho_idx.
    bins: Vec<u32>,
    edge_count: u64,
}

impl HoughAccumulator {
    /// Builds an accumulator from raw bins, e.g. for synthetic peak tests.
    pub fn from_bins(
        theta_step: f64,
        rho_step: f64,
        ntheta: u32,
        nrho: u32,
        bins: Vec<u32>,
        edge_count: u64,
    ) -> Result<HoughAccumulator> {
        if bins.len() != ntheta as usize * nrho as usize {
            return Err(Error::param("bin count must equal ntheta * nrho"));
        }
        if nrho % 2 == 0 {
            return Err(Error::param("nrho must be odd (symmetric rho axis)"));
        }
        Ok(HoughAccumulator {
            theta_step,
            rho_step,
            ntheta,
            nrho,
            bins,
            edge_count,
        })
    }

    pub fn ntheta(&self) -> u32 {
        self.ntheta
    }

    pub fn nrho(&self) -> u32 {
        self.nrho
    }

    pub fn theta_step(&self) -> f64 {
        self.theta_step
    }

    pub fn rho_step(&self) -> f64 {
        self.rho_step
    }

    pub fn bins(&self) -> &[u32] {
        &self.bins
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    #[inline]
    pub fn votes(&self, theta_idx: u32, rho_idx: u32) -> u32 {
        self.bins[theta_idx as usize * self.nrho as usize + rho_idx as usize]
    }

    pub fn total_votes(&self) -> u64 {
        self.bins.iter().map(|&v| v as u64).sum()
    }

    /// θ value of a column, in degrees.
    pub fn theta_deg(&self, theta_idx: u32) -> f64 {
        theta_idx as f64 * self.theta_step
    }

    /// ρ value of a row, in pixels (signed, zero at the center row).
    pub fn rho_value(&self, rho_idx: u32) -> f64 {
        (rho_idx as i64 - (self.nrho / 2) as i64) as f64 * self.rho_step
    }

    /// Bin index of a continuous ρ; in range for any in-image pixel.
    #[inline]
    pub fn rho_index(&self, rho: f64) -> u32 {
        ((rho / self.rho_step).round() as i64 + (self.nrho / 2) as i64) as u32
    }

    /// Suppression window used when none is given: smallest odd values
    /// ≥ (nρ/50, nθ/50).
    pub fn default_nhood(&self) -> (u32, u32) {
        (odd_at_least(self.nrho.div_ceil(50)), odd_at_least(self.ntheta.div_ceil(50)))
    }

    /// Writes the accumulator as a 16-bit PNG heatmap (rows = ρ, cols = θ,
    /// votes scaled to the full range).
    pub fn save_png16(&self, path: &Path) -> Result<()> {
        let max = self.bins.iter().copied().max().unwrap_or(0).max(1) as f64;
        let mut bytes = Vec::with_capacity(self.bins.len() * 2);
        for r in 0..self.nrho {
            for t in 0..self.ntheta {
                let q = (self.votes(t, r) as f64 / max * 65535.0).round() as u16;
                bytes.extend_from_slice(&q.to_be_bytes());
            }
        }
        write_png(
            path,
            self.ntheta,
            self.nrho,
            png::ColorType::Grayscale,
            png::BitDepth::Sixteen,
            &bytes,
        )
    }
}

fn odd_at_least(n: u32) -> u32 {
    let n = n.max(1);
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

/// Votes every edge pixel into the bin nearest `ρ = x·cosθ + y·sinθ` for
/// every quantized θ. Parallel over θ columns; each column owns its bins,
/// so the result is identical for any thread count.
pub fn hough_transform(edges: &EdgeMap, theta_step: f64, rho_step: f64) -> Result<HoughAccumulator> {
    if !(theta_step > 0.0) || !(rho_step > 0.0) {
        return Err(Error::param("theta_step and rho_step must be positive"));
    }
    let ntheta = (180.0 / theta_step).ceil() as u32;
    let w = edges.width().max(1) as f64 - 1.0;
    let h = edges.height().max(1) as f64 - 1.0;
    let half = (w.hypot(h) / rho_step).ceil() as u32;
    let nrho = 2 * half + 1;

    let pixels = edges.edge_pixels();
    let mut bins = vec![0u32; ntheta as usize * nrho as usize];
    bins.par_chunks_mut(nrho as usize)
        .enumerate()
        .for_each(|(t, row)| {
            let theta = (t as f64 * theta_step).to_radians();
            let (sin, cos) = theta.sin_cos();
            for &(x, y) in &pixels {
                let rho = x as f64 * cos + y as f64 * sin;
                let j = ((rho / rho_step).round() as i64 + half as i64) as usize;
                row[j] += 1;
            }
        });
    Ok(HoughAccumulator {
        theta_step,
        rho_step,
        ntheta,
        nrho,
        bins,
        edge_count: pixels.len() as u64,
    })
}

/// One extracted accumulator maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Peak {
    pub theta_idx: u32,
    pub rho_idx: u32,
    pub votes: u32,
}

/// Iteratively selects the global maximum bin while it holds at least
/// `threshold` votes, zeroing the suppression window around each pick.
///
/// Ties break to the smallest θ index, then the smallest ρ index. The
/// window wraps in θ modulo 180° with the ρ axis mirrored across the seam,
/// since (θ+180°, ρ) ≡ (θ, −ρ).
pub fn hough_peaks(
    acc: &HoughAccumulator,
    num_peaks: u32,
    threshold: u32,
    nhood: Option<(u32, u32)>,
) -> Result<Vec<Peak>> {
    let (nh_rho, nh_theta) = nhood.unwrap_or_else(|| acc.default_nhood());
    if nh_rho % 2 == 0 || nh_theta % 2 == 0 {
        return Err(Error::param("nhood dims must be odd"));
    }
    let ntheta = acc.ntheta as usize;
    let nrho = acc.nrho as usize;
    let mut bins = acc.bins.clone();

    // Per-θ cache of (max votes, smallest ρ index attaining it).
    let row_best = |row: &[u32]| -> (u32, usize) {
        let mut best = (0u32, 0usize);
        for (j, &v) in row.iter().enumerate() {
            if v > best.0 {
                best = (v, j);
            }
        }
        best
    };
    let mut cache: Vec<(u32, usize)> = bins.chunks(nrho).map(row_best).collect();

    let hr = (nh_rho / 2) as i64;
    let ht = (nh_theta / 2) as i64;
    let mut peaks = Vec::new();
    while (peaks.len() as u32) < num_peaks {
        let mut best = (0u32, 0usize, 0usize);
        for (t, &(v, j)) in cache.iter().enumerate() {
            if v > best.0 {
                best = (v, t, j);
            }
        }
        let (votes, t, r) = best;
        if votes == 0 || votes < threshold {
            break;
        }
        peaks.push(Peak {
            theta_idx: t as u32,
            rho_idx: r as u32,
            votes,
        });

        let mut dirty: Vec<usize> = Vec::with_capacity((2 * ht + 1) as usize);
        for dt in -ht..=ht {
            let raw = t as i64 + dt;
            let row = raw.rem_euclid(ntheta as i64) as usize;
            let mirrored = raw.div_euclid(ntheta as i64).rem_euclid(2) == 1;
            let center = if mirrored {
                (nrho - 1 - r) as i64
            } else {
                r as i64
            };
            let lo = (center - hr).max(0) as usize;
            let hi = (center + hr).min(nrho as i64 - 1) as usize;
            bins[row * nrho + lo..=row * nrho + hi].fill(0);
            dirty.push(row);
        }
        dirty.sort_unstable();
        dirty.dedup();
        for row in dirty {
            cache[row] = row_best(&bins[row * nrho..(row + 1) * nrho]);
        }
    }
    Ok(peaks)
}

/// One detected line segment. `scale` is the σc of the source edge map,
/// stamped by pipelines that track it; 0 when extracted standalone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    /// First endpoint as (col, row).
    pub p1: (u32, u32),
    /// Last endpoint as (col, row).
    pub p2: (u32, u32),
    /// θ of the generating bin, degrees.
    pub theta_deg: f64,
    /// ρ of the generating bin, pixels.
    pub rho: f64,
    /// Euclidean endpoint distance, pixels.
    pub length: f64,
    pub scale: f64,
}

/// Collects the edge pixels voting for each peak bin, orders them along
/// the line direction, splits runs at projected gaps wider than
/// `fill_gap`, and keeps segments at least `min_length` long.
pub fn hough_lines(
    edges: &EdgeMap,
    acc: &HoughAccumulator,
    peaks: &[Peak],
    fill_gap: f64,
    min_length: f64,
) -> Vec<LineSegment> {
    // Group peak slots per θ so each group scans the edge pixels once.
    let mut by_theta: BTreeMap<u32, Vec<(usize, u32)>> = BTreeMap::new();
    for (slot, p) in peaks.iter().enumerate() {
        by_theta.entry(p.theta_idx).or_default().push((slot, p.rho_idx));
    }
    let pixels = edges.edge_pixels();
    let groups: Vec<(u32, Vec<(usize, u32)>)> = by_theta.into_iter().collect();

    let mut per_slot: Vec<(usize, Vec<LineSegment>)> = groups
        .par_iter()
        .flat_map_iter(|(theta_idx, slots)| {
            let theta = acc.theta_deg(*theta_idx).to_radians();
            let (sin, cos) = theta.sin_cos();
            let mut wanted: HashMap<u32, usize> = HashMap::with_capacity(slots.len());
            for (k, (_, rho_idx)) in slots.iter().enumerate() {
                wanted.insert(*rho_idx, k);
            }
            let mut buckets: Vec<Vec<(f64, u32, u32)>> = vec![Vec::new(); slots.len()];
            for &(x, y) in &pixels {
                let rho = x as f64 * cos + y as f64 * sin;
                let j = acc.rho_index(rho);
                if let Some(&k) = wanted.get(&j) {
                    // Projection onto the line direction (−sinθ, cosθ).
                    let t = -(x as f64) * sin + y as f64 * cos;
                    buckets[k].push((t, x, y));
                }
            }
            slots
                .iter()
                .zip(buckets)
                .map(|((slot, rho_idx), mut bucket)| {
                    bucket.sort_unstable_by(|a, b| {
                        a.0.partial_cmp(&b.0)
                            .unwrap()
                            .then(a.1.cmp(&b.1))
                            .then(a.2.cmp(&b.2))
                    });
                    let segs = split_runs(
                        &bucket,
                        fill_gap,
                        min_length,
                        acc.theta_deg(*theta_idx),
                        acc.rho_value(*rho_idx),
                    );
                    (*slot, segs)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    per_slot.sort_unstable_by_key(|(slot, _)| *slot);
    per_slot.into_iter().flat_map(|(_, segs)| segs).collect()
}

fn split_runs(
    sorted: &[(f64, u32, u32)],
    fill_gap: f64,
    min_length: f64,
    theta_deg: f64,
    rho: f64,
) -> Vec<LineSegment> {
    let mut segs = Vec::new();
    if sorted.is_empty() {
        return segs;
    }
    let mut start = 0usize;
    let mut close = |a: usize, b: usize, segs: &mut Vec<LineSegment>| {
        let (_, x1, y1) = sorted[a];
        let (_, x2, y2) = sorted[b];
        let length = (x2 as f64 - x1 as f64).hypot(y2 as f64 - y1 as f64);
        if length >= min_length {
            segs.push(LineSegment {
                p1: (x1, y1),
                p2: (x2, y2),
                theta_deg,
                rho,
                length,
                scale: 0.0,
            });
        }
    };
    for i in 1..sorted.len() {
        if sorted[i].0 - sorted[i - 1].0 > fill_gap {
            close(start, i - 1, &mut segs);
            start = i;
        }
    }
    close(start, sorted.len() - 1, &mut segs);
    segs
}
