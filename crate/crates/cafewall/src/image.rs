//! Grayscale rasters and PNG I/O.
//!
//! [`GrayImage`] is the common currency of the crate: stimuli, crops and
//! filter inputs are all row-major `f64` luminance grids in `[0, 1]`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major grayscale raster with luminance values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, fill: f64) -> Self {
        GrayImage {
            width,
            height,
            data: vec![fill; width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::param(format!(
                "data length {} does not match {}x{} image",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param("luminance values must lie in [0, 1]"));
        }
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn row(&self, y: u32) -> &[f64] {
        let w = self.width as usize;
        &self.data[y as usize * w..(y as usize + 1) * w]
    }

    /// Exact pixel copy of `window`.
    pub fn crop(&self, window: &CropWindow) -> Result<GrayImage> {
        window.check_inside(self.width, self.height)?;
        let mut data = Vec::with_capacity(window.width as usize * window.height as usize);
        for y in window.top..window.top + window.height {
            let row = self.row(y);
            data.extend_from_slice(
                &row[window.left as usize..(window.left + window.width) as usize],
            );
        }
        Ok(GrayImage {
            width: window.width,
            height: window.height,
            data,
        })
    }

    /// Left-right mirror.
    pub fn mirrored_horizontal(&self) -> GrayImage {
        let w = self.width as usize;
        let mut data = self.data.clone();
        for row in data.chunks_mut(w) {
            row.reverse();
        }
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Writes an 8-bit grayscale PNG (luminance scaled by 255, rounded).
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        write_png(
            path,
            self.width,
            self.height,
            png::ColorType::Grayscale,
            png::BitDepth::Eight,
            &bytes,
        )
    }

    /// Reads a PNG as luminance in `[0, 1]`. Accepts 8/16-bit grayscale and
    /// 8-bit RGB(A); color is reduced with Rec. 709 weights.
    pub fn load_png(path: &Path) -> Result<GrayImage> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut decoder = png::Decoder::new(file);
        decoder.set_transformations(png::Transformations::IDENTITY);
        let mut reader = decoder.read_info().map_err(|e| Error::Codec {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut buf = vec![0u8; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf).map_err(|e| Error::Codec {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        buf.truncate(info.buffer_size());
        let (w, h) = (info.width, info.height);
        let n = w as usize * h as usize;
        let data: Vec<f64> = match (info.color_type, info.bit_depth) {
            (png::ColorType::Grayscale, png::BitDepth::One) => {
                let row_bytes = (w as usize + 7) / 8;
                let mut v = Vec::with_capacity(n);
                for y in 0..h as usize {
                    for x in 0..w as usize {
                        let bit = (buf[y * row_bytes + x / 8] >> (7 - x % 8)) & 1;
                        v.push(bit as f64);
                    }
                }
                v
            }
            (png::ColorType::Grayscale, png::BitDepth::Eight) => {
                buf.iter().map(|&b| b as f64 / 255.0).collect()
            }
            (png::ColorType::Grayscale, png::BitDepth::Sixteen) => buf
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
                .collect(),
            (png::ColorType::GrayscaleAlpha, png::BitDepth::Eight) => buf
                .chunks_exact(2)
                .map(|c| c[0] as f64 / 255.0)
                .collect(),
            (png::ColorType::Rgb, png::BitDepth::Eight) => buf
                .chunks_exact(3)
                .map(|c| luma709(c[0], c[1], c[2]))
                .collect(),
            (png::ColorType::Rgba, png::BitDepth::Eight) => buf
                .chunks_exact(4)
                .map(|c| luma709(c[0], c[1], c[2]))
                .collect(),
            (ct, bd) => {
                return Err(Error::Codec {
                    path: path.to_path_buf(),
                    message: format!("unsupported PNG format {ct:?}/{bd:?}"),
                })
            }
        };
        if data.len() != n {
            return Err(Error::Codec {
                path: path.to_path_buf(),
                message: "decoded size mismatch".into(),
            });
        }
        Ok(GrayImage {
            width: w,
            height: h,
            data,
        })
    }
}

fn luma709(r: u8, g: u8, b: u8) -> f64 {
    (0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64) / 255.0
}

/// Rectangular pixel window inside a source image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropWindow {
    pub left: u32,
    pub top: u32,
    pub width: u32,
    pub height: u32,
}

impl CropWindow {
    pub fn new(left: u32, top: u32, width: u32, height: u32) -> Self {
        CropWindow {
            left,
            top,
            width,
            height,
        }
    }

    pub fn check_inside(&self, img_width: u32, img_height: u32) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::range("crop window must be non-empty"));
        }
        let right = self.left as u64 + self.width as u64;
        let bottom = self.top as u64 + self.height as u64;
        if right > img_width as u64 || bottom > img_height as u64 {
            return Err(Error::range(format!(
                "window {}x{}+{}+{} exceeds {}x{} image",
                self.width, self.height, self.left, self.top, img_width, img_height
            )));
        }
        Ok(())
    }
}

/// 8-bit RGB raster used for diagnostic renderings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// Interleaved RGB bytes, row-major.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        RgbImage {
            width,
            height,
            data: vec![0; width as usize * height as usize * 3],
        }
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        write_png(
            path,
            self.width,
            self.height,
            png::ColorType::Rgb,
            png::BitDepth::Eight,
            &self.data,
        )
    }
}

pub(crate) fn write_png(
    path: &Path,
    width: u32,
    height: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    bytes: &[u8],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width, height);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let mut writer = encoder.write_header().map_err(|e| Error::Codec {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    writer.write_image_data(bytes).map_err(|e| Error::Codec {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(())
}
