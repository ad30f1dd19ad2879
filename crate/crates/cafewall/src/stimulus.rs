//! Café Wall stimulus generation and the three sampling regimes.
//!
//! A wall is `rows × cols` alternating dark/light tiles with horizontal
//! mortar strips between tile rows. Odd-indexed rows are phase-shifted to
//! the right; the shifted tile sequence wraps so the canvas stays
//! rectangular at `cols·T` pixels wide.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{CropWindow, GrayImage};

/// Identifier of the RNG backing every seeded sampling method.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Full parametric description of a Café Wall stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CafeWallSpec {
    pub rows: u32,
    pub cols: u32,
    /// Tile side length T in pixels.
    pub tile_px: u32,
    /// Mortar strip thickness M in pixels.
    pub mortar_px: u32,
    pub tile_dark: f64,
    pub tile_light: f64,
    pub mortar_lum: f64,
    /// Horizontal phase offset of odd-indexed rows, in pixels.
    pub row_shift_px: u32,
}

impl CafeWallSpec {
    /// Spec with the default half-tile shift and 0 / 0.5 / 1 luminances.
    pub fn new(rows: u32, cols: u32, tile_px: u32, mortar_px: u32) -> Self {
        CafeWallSpec {
            rows,
            cols,
            tile_px,
            mortar_px,
            tile_dark: 0.0,
            tile_light: 1.0,
            mortar_lum: 0.5,
            row_shift_px: tile_px / 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 1 {
            return Err(Error::param("rows must be >= 1"));
        }
        if self.cols < 1 {
            return Err(Error::param("cols must be >= 1"));
        }
        if self.tile_px < 1 {
            return Err(Error::param("tile_px must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.tile_dark)
            || !(0.0..=1.0).contains(&self.tile_light)
            || !(self.tile_dark < self.mortar_lum && self.mortar_lum < self.tile_light)
        {
            return Err(Error::param(
                "luminances must satisfy 0 <= tile_dark < mortar_lum < tile_light <= 1",
            ));
        }
        if self.row_shift_px >= self.tile_px {
            return Err(Error::param("row_shift_px must satisfy 0 <= shift < tile_px"));
        }
        let w = self.cols as u64 * self.tile_px as u64;
        let h = self.rows as u64 * self.tile_px as u64
            + (self.rows as u64 - 1) * self.mortar_px as u64;
        if w > i32::MAX as u64 || h > i32::MAX as u64 {
            return Err(Error::param("stimulus dimensions exceed supported size"));
        }
        Ok(())
    }

    pub fn width_px(&self) -> u32 {
        self.cols * self.tile_px
    }

    pub fn height_px(&self) -> u32 {
        self.rows * self.tile_px + (self.rows - 1) * self.mortar_px
    }

    /// Number of mortar strips (one between each adjacent pair of rows).
    pub fn mortar_count(&self) -> u32 {
        self.rows - 1
    }

    /// Kind of mortar strip `i` (counted from the top).
    ///
    /// The row below mortar `i` is row `i+1`; odd rows carry the phase
    /// offset, and an offset row below makes the mortar Falling.
    pub fn mortar_kind(&self, i: u32) -> MortarKind {
        if i % 2 == 0 {
            MortarKind::Falling
        } else {
            MortarKind::Rising
        }
    }

    /// Half-open pixel rows `[y0, y1)` occupied by mortar strip `i`.
    pub fn mortar_band(&self, i: u32) -> (u32, u32) {
        let y0 = (i + 1) * self.tile_px + i * self.mortar_px;
        (y0, y0 + self.mortar_px)
    }
}

/// Direction of the tilt a mortar line induces: Falling goes down toward
/// the right, Rising up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MortarKind {
    Falling,
    Rising,
}

impl std::fmt::Display for MortarKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MortarKind::Falling => write!(f, "falling"),
            MortarKind::Rising => write!(f, "rising"),
        }
    }
}

/// Renders the stimulus described by `spec`.
pub fn generate_cafe_wall(spec: &CafeWallSpec) -> Result<GrayImage> {
    spec.validate()?;
    let (w, h) = (spec.width_px(), spec.height_px());
    let t = spec.tile_px as i64;

    // One luminance row per phase; tile color at x comes from the parity of
    // the tile index in the infinite alternating sequence anchored at the
    // row's phase offset.
    let tile_row = |phase: i64| -> Vec<f64> {
        (0..w as i64)
            .map(|x| {
                if (x - phase).div_euclid(t) % 2 == 0 {
                    spec.tile_dark
                } else {
                    spec.tile_light
                }
            })
            .collect()
    };
    let even_row = tile_row(0);
    let odd_row = tile_row(spec.row_shift_px as i64);
    let mortar_row = vec![spec.mortar_lum; w as usize];

    let mut data = Vec::with_capacity(w as usize * h as usize);
    for r in 0..spec.rows {
        let row = if r % 2 == 0 { &even_row } else { &odd_row };
        for _ in 0..spec.tile_px {
            data.extend_from_slice(row);
        }
        if r + 1 < spec.rows {
            for _ in 0..spec.mortar_px {
                data.extend_from_slice(&mortar_row);
            }
        }
    }
    GrayImage::from_vec(w, h, data)
}

/// How a [`SampleSet`]'s windows were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SampleMethod {
    Systematic { step_px: u32 },
    Random,
    MortarCentered { mortar: MortarKind },
}

/// An ordered batch of crop windows over one source image, with the
/// sampling method and RNG provenance recorded for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub source_width: u32,
    pub source_height: u32,
    pub method: SampleMethod,
    pub windows: Vec<CropWindow>,
    /// Seed for the seeded methods; absent for the deterministic one.
    pub seed: Option<u64>,
    pub rng_algorithm: String,
}

impl SampleSet {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::to_writer_pretty(BufWriter::new(file), self).map_err(|e| Error::Codec {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load_json(path: &Path) -> Result<SampleSet> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Codec {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Windows of size `(2T+M) × 4.5T` vertically centered on the first mortar
/// of the requested kind, starting flush left and advancing right by
/// `offset_px` per step.
pub fn mortar_centered_windows(
    spec: &CafeWallSpec,
    kind: MortarKind,
    count: u32,
    offset_px: u32,
) -> Result<SampleSet> {
    spec.validate()?;
    if count < 1 {
        return Err(Error::param("count must be >= 1"));
    }
    let mortar_index = match kind {
        MortarKind::Falling if spec.mortar_count() >= 1 => 0,
        MortarKind::Rising if spec.mortar_count() >= 2 => 1,
        _ => {
            return Err(Error::range(format!(
                "wall with {} mortar strips has no {kind} mortar",
                spec.mortar_count()
            )))
        }
    };
    let t = spec.tile_px;
    let crop_w = 9 * t / 2;
    let crop_h = 2 * t + spec.mortar_px;
    let (w, h) = (spec.width_px(), spec.height_px());
    if crop_w > w || crop_h > h {
        return Err(Error::range(format!(
            "crop {crop_w}x{crop_h} exceeds {w}x{h} pattern"
        )));
    }
    let travel = (count as u64 - 1) * offset_px as u64;
    if travel + crop_w as u64 > w as u64 {
        return Err(Error::range(format!(
            "{count} windows at offset {offset_px} overrun pattern width {w}"
        )));
    }
    let top = mortar_index * (t + spec.mortar_px);
    let windows = (0..count)
        .map(|k| CropWindow::new(k * offset_px, top, crop_w, crop_h))
        .collect();
    Ok(SampleSet {
        source_width: w,
        source_height: h,
        method: SampleMethod::MortarCentered { mortar: kind },
        windows,
        seed: None,
        rng_algorithm: "none".into(),
    })
}

/// `count` windows sharing a seeded random top-left, each shifted right by
/// `step_px` from the previous one.
pub fn systematic_windows(
    image_dims: (u32, u32),
    crop_dims: (u32, u32),
    count: u32,
    step_px: u32,
    seed: u64,
) -> Result<SampleSet> {
    let (w, h) = image_dims;
    let (cw, ch) = crop_dims;
    if count < 1 {
        return Err(Error::param("count must be >= 1"));
    }
    if cw < 1 || ch < 1 {
        return Err(Error::param("crop dims must be >= 1"));
    }
    let travel = (count as u64 - 1) * step_px as u64;
    if ch > h || (cw as u64 + travel) > w as u64 {
        return Err(Error::range(format!(
            "crop {cw}x{ch} with {travel}px travel does not fit {w}x{h} image"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let left0 = rng.gen_range(0..=(w - cw - travel as u32));
    let top = rng.gen_range(0..=(h - ch));
    let windows = (0..count)
        .map(|k| CropWindow::new(left0 + k * step_px, top, cw, ch))
        .collect();
    Ok(SampleSet {
        source_width: w,
        source_height: h,
        method: SampleMethod::Systematic { step_px },
        windows,
        seed: Some(seed),
        rng_algorithm: RNG_ALGORITHM.into(),
    })
}

/// `count` windows with top-left corners drawn uniformly over all
/// in-bounds positions.
pub fn random_windows(
    image_dims: (u32, u32),
    crop_dims: (u32, u32),
    count: u32,
    seed: u64,
) -> Result<SampleSet> {
    let (w, h) = image_dims;
    let (cw, ch) = crop_dims;
    if count < 1 {
        return Err(Error::param("count must be >= 1"));
    }
    if cw < 1 || ch < 1 {
        return Err(Error::param("crop dims must be >= 1"));
    }
    if cw > w || ch > h {
        return Err(Error::range(format!(
            "crop {cw}x{ch} exceeds {w}x{h} image"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let windows = (0..count)
        .map(|_| {
            let left = rng.gen_range(0..=(w - cw));
            let top = rng.gen_range(0..=(h - ch));
            CropWindow::new(left, top, cw, ch)
        })
        .collect();
    Ok(SampleSet {
        source_width: w,
        source_height: h,
        method: SampleMethod::Random,
        windows,
        seed: Some(seed),
        rng_algorithm: RNG_ALGORITHM.into(),
    })
}

/// Pixel dimensions of a crop covering `tile_rows × tile_cols` whole tiles:
/// `tile_cols·T` wide and `tile_rows·T + (tile_rows−1)·M` tall.
pub fn crop_dims_tiles(spec: &CafeWallSpec, tile_rows: u32, tile_cols: u32) -> (u32, u32) {
    (
        tile_cols * spec.tile_px,
        tile_rows * spec.tile_px + tile_rows.saturating_sub(1) * spec.mortar_px,
    )
}
