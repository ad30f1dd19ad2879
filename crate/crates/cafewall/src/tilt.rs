//! Tilt statistics: perceptual segment angles, classification around the
//! four reference orientations, and per-scale aggregation.
//!
//! Angles are measured in a y-up frame, so positive means rising to the
//! right; each reference orientation owns a half-open ±22.5° deviation
//! interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hough::LineSegment;

/// One of the four reference orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrientationClass {
    /// Horizontal, 0°.
    H,
    /// Vertical, ±90° with wraparound.
    V,
    /// Positive diagonal, +45°.
    D1,
    /// Negative diagonal, −45°.
    D2,
}

impl OrientationClass {
    pub const ALL: [OrientationClass; 4] = [
        OrientationClass::H,
        OrientationClass::V,
        OrientationClass::D1,
        OrientationClass::D2,
    ];

    pub fn index(self) -> usize {
        match self {
            OrientationClass::H => 0,
            OrientationClass::V => 1,
            OrientationClass::D1 => 2,
            OrientationClass::D2 => 3,
        }
    }
}

impl std::fmt::Display for OrientationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrientationClass::H => write!(f, "H"),
            OrientationClass::V => write!(f, "V"),
            OrientationClass::D1 => write!(f, "D1"),
            OrientationClass::D2 => write!(f, "D2"),
        }
    }
}

/// Angle of a segment in degrees, counter-clockwise from the positive
/// x-axis with y up (row delta negated), folded into [−90, 90).
pub fn segment_angle(seg: &LineSegment) -> Result<f64> {
    if seg.p1 == seg.p2 {
        return Err(Error::param("degenerate segment: endpoints coincide"));
    }
    let dx = seg.p2.0 as f64 - seg.p1.0 as f64;
    let dy_up = -(seg.p2.1 as f64 - seg.p1.1 as f64);
    let mut angle = dy_up.atan2(dx).to_degrees();
    if angle >= 90.0 {
        angle -= 180.0;
    } else if angle < -90.0 {
        angle += 180.0;
    }
    Ok(angle)
}

/// Nearest reference orientation and the signed deviation from it, with V
/// wrapping across ±90°. Total on [−90, 90); deviations lie in
/// [−22.5, 22.5).
pub fn classify(angle_deg: f64) -> (OrientationClass, f64) {
    debug_assert!((-90.0..90.0).contains(&angle_deg));
    if angle_deg < -67.5 {
        (OrientationClass::V, angle_deg + 90.0)
    } else if angle_deg < -22.5 {
        (OrientationClass::D2, angle_deg + 45.0)
    } else if angle_deg < 22.5 {
        (OrientationClass::H, angle_deg)
    } else if angle_deg < 67.5 {
        (OrientationClass::D1, angle_deg - 45.0)
    } else {
        (OrientationClass::V, angle_deg - 90.0)
    }
}

/// One classified line segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltRecord {
    /// σc of the edge map the segment came from.
    pub scale: f64,
    pub class: OrientationClass,
    /// Signed deviation from the class orientation, degrees.
    pub deviation_deg: f64,
    /// Segment length in pixels.
    pub length: f64,
    /// Index of the sample (crop) the segment came from.
    pub sample_id: u32,
}

/// Classifies one segment into a record.
pub fn record_for_segment(seg: &LineSegment, sample_id: u32) -> Result<TiltRecord> {
    let angle = segment_angle(seg)?;
    let (class, deviation_deg) = classify(angle);
    Ok(TiltRecord {
        scale: seg.scale,
        class,
        deviation_deg,
        length: seg.length,
        sample_id,
    })
}

/// Statistics of one populated (scale, class) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltCell {
    pub n: u64,
    /// Mean of |deviation| in degrees.
    pub mean_abs_dev: f64,
    /// Sample std of |deviation| over √n; 0.0 when n = 1.
    pub std_err: f64,
}

/// Per (scale, class) tilt table; `None` cells had no lines and render as
/// "NaN".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltStats {
    pub scales: Vec<f64>,
    /// One row per scale, cells ordered H, V, D1, D2.
    pub cells: Vec<[Option<TiltCell>; 4]>,
}

impl TiltStats {
    pub fn cell(&self, scale: f64, class: OrientationClass) -> Option<&TiltCell> {
        let i = self.scales.iter().position(|&s| s == scale)?;
        self.cells[i][class.index()].as_ref()
    }

    /// CSV in the tilt-table layout: one row per σc, one
    /// `mean±stderr` column plus a raw-count column per class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma_c,H,H_n,V,V_n,D1,D1_n,D2,D2_n\n");
        for (scale, row) in self.scales.iter().zip(&self.cells) {
            out.push_str(&format_scale(*scale));
            for cell in row {
                match cell {
                    Some(c) => out.push_str(&format!(
                        ",{:05.2}±{:.2},{}",
                        c.mean_abs_dev, c.std_err, c.n
                    )),
                    None => out.push_str(",NaN,0"),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn format_scale(scale: f64) -> String {
    if scale.fract() == 0.0 {
        format!("{}", scale as i64)
    } else {
        format!("{scale}")
    }
}

/// Mean and standard error of a sample, summed over sorted values so the
/// result does not depend on input order. n = 1 yields (v, 0.0).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    if sorted.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = {
        let mut devs: Vec<f64> = sorted.iter().map(|v| (v - mean) * (v - mean)).collect();
        devs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        devs.iter().sum()
    };
    let var = ss / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates records into the per (scale, class) table over an explicit
/// scale grid, so scales with no lines still appear (as absent cells).
/// Lines are weighted equally regardless of length.
pub fn aggregate(records: &[TiltRecord], scales: &[f64]) -> Result<TiltStats> {
    let index_of = |s: f64| -> Result<usize> {
        scales
            .iter()
            .position(|&g| g == s)
            .ok_or_else(|| Error::param(format!("record scale {s} not in the scale grid")))
    };
    let mut buckets: Vec<[Vec<f64>; 4]> = (0..scales.len()).map(|_| Default::default()).collect();
    for r in records {
        buckets[index_of(r.scale)?][r.class.index()].push(r.deviation_deg.abs());
    }
    let cells = buckets
        .into_iter()
        .map(|row| {
            row.map(|vals| {
                if vals.is_empty() {
                    None
                } else {
                    let (mean_abs_dev, std_err) = mean_and_stderr(&vals);
                    Some(TiltCell {
                        n: vals.len() as u64,
                        mean_abs_dev,
                        std_err,
                    })
                }
            })
        })
        .collect();
    Ok(TiltStats {
        scales: scales.to_vec(),
        cells,
    })
}

/// Per-scale deviation histogram of one orientation class. Bin `k` covers
/// `[k·bin_width, (k+1)·bin_width)` degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationHistogram {
    pub class: OrientationClass,
    pub bin_width: f64,
    /// Signed index of the first bin.
    pub lo_idx: i64,
    pub scales: Vec<f64>,
    /// `counts[scale][bin]`; fractional after normalization.
    pub counts: Vec<Vec<f64>>,
    pub normalized: bool,
}

impl DeviationHistogram {
    pub fn nbins(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Lower edge of bin `i` in degrees.
    pub fn bin_lo(&self, i: usize) -> f64 {
        (self.lo_idx + i as i64) as f64 * self.bin_width
    }

    /// CSV with one row per bin and one column per scale.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi");
        for s in &self.scales {
            out.push_str(&format!(",sigma_{}", format_scale(*s)));
        }
        out.push('\n');
        for i in 0..self.nbins() {
            out.push_str(&format!("{},{}", self.bin_lo(i), self.bin_lo(i + 1)));
            for row in &self.counts {
                if self.normalized {
                    out.push_str(&format!(",{:.6}", row[i]));
                } else {
                    out.push_str(&format!(",{}", row[i]));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Histograms the deviations of one class over the scale grid.
pub fn histogram(
    records: &[TiltRecord],
    class: OrientationClass,
    bin_width: f64,
    normalized: bool,
    scales: &[f64],
) -> Result<DeviationHistogram> {
    if !(bin_width > 0.0) {
        return Err(Error::param("bin_width must be positive"));
    }
    let lo_idx = (-22.5 / bin_width).floor() as i64;
    let hi_idx = (22.5 / bin_width).ceil() as i64;
    let nbins = (hi_idx - lo_idx) as usize;
    let mut counts = vec![vec![0.0; nbins]; scales.len()];
    for r in records {
        if r.class != class {
            continue;
        }
        let si = scales
            .iter()
            .position(|&g| g == r.scale)
            .ok_or_else(|| Error::param(format!("record scale {} not in the scale grid", r.scale)))?;
        let k = (r.deviation_deg / bin_width).floor() as i64;
        let k = k.clamp(lo_idx, hi_idx - 1);
        counts[si][(k - lo_idx) as usize] += 1.0;
    }
    if normalized {
        for row in &mut counts {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                for c in row.iter_mut() {
                    *c /= total;
                }
            }
        }
    }
    Ok(DeviationHistogram {
        class,
        bin_width,
        lo_idx,
        scales: scales.to_vec(),
        counts,
        normalized,
    })
}

/// One (scale, class) row of a local-vs-global comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scale: f64,
    pub class: OrientationClass,
    /// One cell per local (foveal) set, in label order.
    pub local: Vec<Option<TiltCell>>,
    pub global: Option<TiltCell>,
    /// local mean − global mean; absent when either cell is absent.
    pub delta_mean: Vec<Option<f64>>,
}

/// Side-by-side local (foveal) and global tilt tables with deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGlobalComparison {
    pub labels: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

impl LocalGlobalComparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma_c,class");
        for l in &self.labels {
            out.push_str(&format!(",{l}_mean,{l}_stderr,{l}_n"));
        }
        out.push_str(",global_mean,global_stderr,global_n");
        for l in &self.labels {
            out.push_str(&format!(",{l}_delta"));
        }
        out.push('\n');
        let cell_cols = |cell: &Option<TiltCell>| match cell {
            Some(c) => format!(",{:.2},{:.2},{}", c.mean_abs_dev, c.std_err, c.n),
            None => ",NaN,NaN,0".to_string(),
        };
        for row in &self.rows {
            out.push_str(&format!("{},{}", format_scale(row.scale), row.class));
            for cell in &row.local {
                out.push_str(&cell_cols(cell));
            }
            out.push_str(&cell_cols(&row.global));
            for d in &row.delta_mean {
                match d {
                    Some(v) => out.push_str(&format!(",{v:.2}")),
                    None => out.push_str(",NaN"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Aligns local (foveal) stats against a global table on a shared scale
/// grid and reports per-cell mean deltas.
pub fn compare_local_global(
    local: &[(String, TiltStats)],
    global: &TiltStats,
) -> Result<LocalGlobalComparison> {
    for (label, stats) in local {
        if stats.scales != global.scales {
            return Err(Error::param(format!(
                "scale grid of '{label}' does not match the global grid"
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, &scale) in global.scales.iter().enumerate() {
        for class in OrientationClass::ALL {
            let local_cells: Vec<Option<TiltCell>> = local
                .iter()
                .map(|(_, s)| s.cells[i][class.index()])
                .collect();
            let global_cell = global.cells[i][class.index()];
            let delta_mean = local_cells
                .iter()
                .map(|lc| match (lc, &global_cell) {
                    (Some(l), Some(g)) => Some(l.mean_abs_dev - g.mean_abs_dev),
                    _ => None,
                })
                .collect();
            rows.push(ComparisonRow {
                scale,
                class,
                local: local_cells,
                global: global_cell,
                delta_mean,
            });
        }
    }
    Ok(LocalGlobalComparison {
        labels: local.iter().map(|(l, _)| l.clone()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(p1: (u32, u32), p2: (u32, u32)) -> LineSegment {
        LineSegment {
            p1,
            p2,
            theta_deg: 0.0,
            rho: 0.0,
            length: (p2.0 as f64 - p1.0 as f64).hypot(p2.1 as f64 - p1.1 as f64),
            scale: 8.0,
        }
    }

    fn rec(scale: f64, class: OrientationClass, dev: f64) -> TiltRecord {
        TiltRecord {
            scale,
            class,
            deviation_deg: dev,
            length: 100.0,
            sample_id: 0,
        }
    }

    #[test]
    fn segment_angle_conventions() {
        assert_eq!(segment_angle(&seg((0, 0), (100, 0))).unwrap(), 0.0);
        assert_eq!(segment_angle(&seg((0, 0), (100, 100))).unwrap(), -45.0);
        assert_eq!(segment_angle(&seg((0, 0), (0, 50))).unwrap(), -90.0);
        // Endpoint order does not change the folded angle.
        assert_eq!(segment_angle(&seg((100, 0), (0, 0))).unwrap(), 0.0);
        assert!((segment_angle(&seg((0, 50), (100, 0))).unwrap() - 26.565051177077994).abs() < 1e-12);
        assert!(matches!(
            segment_angle(&seg((5, 5), (5, 5))),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn classify_examples_and_boundaries() {
        assert_eq!(classify(7.0), (OrientationClass::H, 7.0));
        assert_eq!(classify(-40.0), (OrientationClass::D2, 5.0));
        assert_eq!(classify(85.0), (OrientationClass::V, -5.0));
        assert_eq!(classify(-22.5), (OrientationClass::H, -22.5));
        assert_eq!(classify(22.5), (OrientationClass::D1, -22.5));
        assert_eq!(classify(67.5), (OrientationClass::V, -22.5));
        assert_eq!(classify(-67.5), (OrientationClass::D2, -22.5));
        assert_eq!(classify(-90.0), (OrientationClass::V, 0.0));
    }

    #[test]
    fn classify_is_total_with_bounded_deviation() {
        let mut angle = -90.0;
        while angle < 90.0 {
            let (_, dev) = classify(angle);
            assert!((-22.5..22.5).contains(&dev), "angle {angle} dev {dev}");
            angle += 0.173;
        }
    }

    #[test]
    fn aggregate_matches_hand_arithmetic() {
        let records = [
            rec(8.0, OrientationClass::H, 6.0),
            rec(8.0, OrientationClass::H, -7.0),
            rec(8.0, OrientationClass::H, 8.0),
        ];
        let stats = aggregate(&records, &[8.0]).unwrap();
        let cell = stats.cell(8.0, OrientationClass::H).unwrap();
        assert_eq!(cell.n, 3);
        assert!((cell.mean_abs_dev - 7.0).abs() < 1e-12);
        assert!((cell.std_err - 1.0 / 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn absent_and_degenerate_cells() {
        let records = [rec(8.0, OrientationClass::H, 4.0)];
        let stats = aggregate(&records, &[8.0, 20.0]).unwrap();
        let single = stats.cell(8.0, OrientationClass::H).unwrap();
        assert_eq!((single.n, single.mean_abs_dev, single.std_err), (1, 4.0, 0.0));
        assert!(stats.cell(20.0, OrientationClass::H).is_none());
        let csv = stats.to_csv();
        assert!(csv.contains("04.00±0.00,1"));
        assert!(csv.lines().nth(2).unwrap().contains("NaN"));
    }

    #[test]
    fn unknown_scale_rejected() {
        let records = [rec(6.0, OrientationClass::H, 1.0)];
        assert!(matches!(
            aggregate(&records, &[8.0]),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn aggregate_is_order_independent() {
        let mut records: Vec<TiltRecord> = (0..40)
            .map(|i| {
                rec(
                    if i % 2 == 0 { 4.0 } else { 8.0 },
                    if i % 3 == 0 {
                        OrientationClass::H
                    } else {
                        OrientationClass::D1
                    },
                    (i as f64 * 0.37).sin() * 20.0,
                )
            })
            .collect();
        let a = aggregate(&records, &[4.0, 8.0]).unwrap();
        records.reverse();
        records.swap(0, 17);
        let b = aggregate(&records, &[4.0, 8.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_layout_matches_table_format() {
        let records = [
            rec(4.0, OrientationClass::H, 4.5),
            rec(4.0, OrientationClass::H, -4.5),
        ];
        let stats = aggregate(&records, &[4.0]).unwrap();
        let csv = stats.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "sigma_c,H,H_n,V,V_n,D1,D1_n,D2,D2_n");
        assert_eq!(lines.next().unwrap(), "4,04.50±0.00,2,NaN,0,NaN,0,NaN,0");
    }

    #[test]
    fn histogram_bins_and_normalization() {
        let empty = histogram(&[], OrientationClass::H, 1.0, false, &[4.0]).unwrap();
        assert!(empty.counts[0].iter().all(|&c| c == 0.0));
        assert_eq!(empty.nbins(), 46);

        let records = [rec(4.0, OrientationClass::H, 7.0)];
        let hist = histogram(&records, OrientationClass::H, 1.0, false, &[4.0]).unwrap();
        let bin = hist
            .counts[0]
            .iter()
            .enumerate()
            .find(|(_, &c)| c > 0.0)
            .unwrap()
            .0;
        assert_eq!(hist.bin_lo(bin), 7.0);
        assert_eq!(hist.bin_lo(bin + 1), 8.0);
        assert_eq!(hist.counts[0][bin], 1.0);

        let records: Vec<TiltRecord> = (0..5)
            .map(|i| rec(4.0, OrientationClass::H, i as f64 - 2.0))
            .collect();
        let norm = histogram(&records, OrientationClass::H, 1.0, true, &[4.0]).unwrap();
        let total: f64 = norm.counts[0].iter().sum();
        assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn comparison_table_aligns_cells() {
        let foveal = aggregate(
            &[rec(8.0, OrientationClass::H, 7.0), rec(8.0, OrientationClass::H, 7.0)],
            &[4.0, 8.0],
        )
        .unwrap();
        let global = aggregate(
            &[rec(8.0, OrientationClass::H, 7.5), rec(8.0, OrientationClass::H, 7.5)],
            &[4.0, 8.0],
        )
        .unwrap();
        let cmp = compare_local_global(&[("crop".into(), foveal.clone())], &global).unwrap();
        let row = cmp
            .rows
            .iter()
            .find(|r| r.scale == 8.0 && r.class == OrientationClass::H)
            .unwrap();
        assert!((row.delta_mean[0].unwrap() + 0.5).abs() < 1e-12);
        // Absent in both inputs stays absent in the delta.
        let empty_row = cmp
            .rows
            .iter()
            .find(|r| r.scale == 4.0 && r.class == OrientationClass::H)
            .unwrap();
        assert!(empty_row.delta_mean[0].is_none());

        let identical = compare_local_global(&[("same".into(), global.clone())], &global).unwrap();
        for row in &identical.rows {
            for d in row.delta_mean.iter().flatten() {
                assert_eq!(*d, 0.0);
            }
        }

        let other_grid = aggregate(&[], &[4.0]).unwrap();
        assert!(matches!(
            compare_local_global(&[("bad".into(), other_grid)], &global),
            Err(Error::Param(_))
        ));
    }
}
