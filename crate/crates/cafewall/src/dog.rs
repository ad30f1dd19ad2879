//! Difference-of-Gaussians filtering: kernels, convolution, binary edge
//! maps, and multi-scale stacks.
//!
//! The DoG response is the difference of two normalized Gaussian blurs,
//! `I*G(σc) − I*G(s·σc)`, both sampled over the same window of side
//! `h·σc + 1`. The production path is separable; a direct 2-D convolution
//! is kept as an independent reference route.

use std::fs::File;
use std::io::{BufRead, BufReader, Write as IoWrite};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{write_png, GrayImage};

/// Scale parameters of one DoG filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoGParams {
    /// Center Gaussian scale σc in pixels.
    pub sigma_c: f64,
    /// Surround ratio s = σ_surround / σ_center.
    pub surround_ratio: f64,
    /// Window ratio h; kernel side is h·σc + 1.
    pub window_ratio: f64,
}

impl DoGParams {
    /// Params with the default s = 2, h = 8.
    pub fn new(sigma_c: f64) -> Self {
        DoGParams {
            sigma_c,
            surround_ratio: 2.0,
            window_ratio: 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_c > 0.0) || !self.sigma_c.is_finite() {
            return Err(Error::param("sigma_c must be positive"));
        }
        if !(self.surround_ratio > 1.0) {
            return Err(Error::param("surround_ratio must exceed 1"));
        }
        if !(self.window_ratio >= 2.0) {
            return Err(Error::param("window_ratio must be >= 2"));
        }
        Ok(())
    }

    /// Kernel side h·σc + 1, bumped up by one when h·σc is odd so the
    /// window stays symmetric.
    pub fn kernel_side(&self) -> u32 {
        let m = (self.window_ratio * self.sigma_c).round() as i64;
        let side = m + 1;
        (if side % 2 == 0 { side + 1 } else { side }) as u32
    }
}

/// Square odd-sided convolution kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    side: u32,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> f64 {
        self.weights[row as usize * self.side as usize + col as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// How convolution treats pixels past the image border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorderPolicy {
    /// Mirror the image at its edges (edge pixel duplicated). Requires the
    /// kernel half-width to be at most the image extent on each axis.
    #[default]
    Reflect,
    /// Treat everything outside the image as zero.
    Zero,
}

impl std::str::FromStr for BorderPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reflect" => Ok(BorderPolicy::Reflect),
            "zero" => Ok(BorderPolicy::Zero),
            other => Err(Error::param(format!(
                "unknown border policy '{other}' (expected reflect or zero)"
            ))),
        }
    }
}

impl std::fmt::Display for BorderPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BorderPolicy::Reflect => write!(f, "reflect"),
            BorderPolicy::Zero => write!(f, "zero"),
        }
    }
}

/// Normalized 1-D Gaussian sampled at integer offsets from the window
/// center.
pub fn gaussian_kernel_1d(sigma: f64, side: u32) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma must be positive"));
    }
    if side % 2 == 0 || side == 0 {
        return Err(Error::param(format!("kernel side {side} must be odd")));
    }
    let half = (side / 2) as i64;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let raw: Vec<f64> = (-half..=half)
        .map(|d| (-(d * d) as f64 * inv).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / sum).collect())
}

/// Normalized 2-D isotropic Gaussian sampled on the integer grid.
pub fn gaussian_kernel(sigma: f64, side: u32) -> Result<Kernel> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma must be positive"));
    }
    if side % 2 == 0 || side == 0 {
        return Err(Error::param(format!("kernel side {side} must be odd")));
    }
    let half = (side / 2) as i64;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut weights = Vec::with_capacity(side as usize * side as usize);
    for dy in -half..=half {
        for dx in -half..=half {
            weights.push((-((dx * dx + dy * dy) as f64) * inv).exp());
        }
    }
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    Ok(Kernel { side, weights })
}

/// Center-minus-surround kernel: both Gaussians normalized over the shared
/// window before subtraction, so the result sums to zero.
pub fn dog_kernel(params: &DoGParams) -> Result<Kernel> {
    params.validate()?;
    let side = params.kernel_side();
    let center = gaussian_kernel(params.sigma_c, side)?;
    let surround = gaussian_kernel(params.surround_ratio * params.sigma_c, side)?;
    let weights = center
        .weights
        .iter()
        .zip(&surround.weights)
        .map(|(c, s)| c - s)
        .collect();
    Ok(Kernel { side, weights })
}

/// Signed filter response, same dimensions as the input image.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl ResponseMap {
    pub fn from_vec(width: u32, height: u32, values: Vec<f64>) -> ResponseMap {
        assert_eq!(values.len(), width as usize * height as usize);
        ResponseMap {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if self.values.is_empty() {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    pub fn mirrored_horizontal(&self) -> ResponseMap {
        let w = self.width as usize;
        let mut values = self.values.clone();
        for row in values.chunks_mut(w) {
            row.reverse();
        }
        ResponseMap {
            width: self.width,
            height: self.height,
            values,
        }
    }

    /// Writes a 16-bit grayscale PNG, affine-scaled to the value range;
    /// offset and scale land in a `<path>.scale.txt` sidecar so the signed
    /// values can be reconstructed as `offset + scale·q`.
    pub fn save_png16(&self, path: &Path) -> Result<()> {
        let (lo, hi) = self.min_max();
        let scale = if hi > lo { (hi - lo) / 65535.0 } else { 0.0 };
        let bytes: Vec<u8> = self
            .values
            .iter()
            .flat_map(|&v| {
                let q = if scale > 0.0 {
                    ((v - lo) / scale).round().clamp(0.0, 65535.0) as u16
                } else {
                    0
                };
                q.to_be_bytes()
            })
            .collect();
        write_png(
            path,
            self.width,
            self.height,
            png::ColorType::Grayscale,
            png::BitDepth::Sixteen,
            &bytes,
        )?;
        let sidecar = sidecar_path(path);
        let mut f = File::create(&sidecar).map_err(|source| Error::Io {
            path: sidecar.clone(),
            source,
        })?;
        write!(f, "offset {lo:.17e}\nscale {scale:.17e}\n").map_err(|source| Error::Io {
            path: sidecar,
            source,
        })?;
        Ok(())
    }

    /// Writes the raw float grid as text: a `width height` header line,
    /// then one line of full-precision values per pixel row.
    pub fn save_raw(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.width, self.height));
        for row in self.values.chunks(self.width as usize) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&format!("{v:.17e}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(io_err)
    }

    pub fn load_raw(path: &Path) -> Result<ResponseMap> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let codec = |message: String| Error::Codec {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| codec(e.to_string()))?
            .ok_or_else(|| codec("empty file".into()))?;
        let mut dims = header.split_whitespace();
        let width: u32 = dims
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| codec("bad header".into()))?;
        let height: u32 = dims
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| codec("bad header".into()))?;
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for line in lines {
            let line = line.map_err(|e| codec(e.to_string()))?;
            for tok in line.split_whitespace() {
                values.push(tok.parse().map_err(|_| codec("bad float".into()))?);
            }
        }
        if values.len() != width as usize * height as usize {
            return Err(codec("value count does not match header".into()));
        }
        Ok(ResponseMap {
            width,
            height,
            values,
        })
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".scale.txt");
    std::path::PathBuf::from(s)
}

/// Binary edge map: 1 where the response was positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: u32,
    height: u32,
    bits: Vec<u8>,
}

impl EdgeMap {
    pub fn from_bits(width: u32, height: u32, bits: Vec<u8>) -> EdgeMap {
        assert_eq!(bits.len(), width as usize * height as usize);
        assert!(bits.iter().all(|&b| b <= 1));
        EdgeMap {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|&b| b as u64).sum()
    }

    /// Edge pixel coordinates `(x, y)` in row-major order.
    pub fn edge_pixels(&self) -> Vec<(u32, u32)> {
        let mut px = Vec::new();
        for y in 0..self.height {
            let row = &self.bits[y as usize * self.width as usize..][..self.width as usize];
            for (x, &b) in row.iter().enumerate() {
                if b == 1 {
                    px.push((x as u32, y));
                }
            }
        }
        px
    }

    pub fn mirrored_horizontal(&self) -> EdgeMap {
        let w = self.width as usize;
        let mut bits = self.bits.clone();
        for row in bits.chunks_mut(w) {
            row.reverse();
        }
        EdgeMap {
            width: self.width,
            height: self.height,
            bits,
        }
    }

    /// Writes a 1-bit grayscale PNG (1 = white).
    pub fn save_png1(&self, path: &Path) -> Result<()> {
        let row_bytes = (self.width as usize + 7) / 8;
        let mut packed = vec![0u8; row_bytes * self.height as usize];
        for y in 0..self.height as usize {
            let row = &self.bits[y * self.width as usize..][..self.width as usize];
            for (x, &b) in row.iter().enumerate() {
                if b == 1 {
                    packed[y * row_bytes + x / 8] |= 0x80 >> (x % 8);
                }
            }
        }
        write_png(
            path,
            self.width,
            self.height,
            png::ColorType::Grayscale,
            png::BitDepth::One,
            &packed,
        )
    }
}

/// Thresholds a response at zero: strictly positive pixels become edges.
pub fn binarize(response: &ResponseMap) -> EdgeMap {
    EdgeMap {
        width: response.width,
        height: response.height,
        bits: response
            .values
            .iter()
            .map(|&v| if v > 0.0 { 1 } else { 0 })
            .collect(),
    }
}

fn check_reflect_fits(side: u32, width: u32, height: u32) -> Result<()> {
    let half = side / 2;
    if half > width || half > height {
        return Err(Error::range(format!(
            "kernel half-width {half} exceeds {width}x{height} image under reflect padding"
        )));
    }
    Ok(())
}

/// Maps an out-of-range index into `[0, n)` by mirroring at the edges
/// (edge sample duplicated). Valid for overhang up to `n`.
#[inline]
fn reflect_index(i: i64, n: i64) -> usize {
    let j = if i < 0 {
        -1 - i
    } else if i >= n {
        2 * n - 1 - i
    } else {
        i
    };
    j as usize
}

/// Fills `pad` (length n + 2·half) with the row extended per the policy;
/// zero-policy overhang is written as 0.
fn pad_line(src: &[f64], half: usize, border: BorderPolicy, pad: &mut [f64]) {
    let n = src.len() as i64;
    match border {
        BorderPolicy::Reflect => {
            for (k, slot) in pad.iter_mut().enumerate() {
                *slot = src[reflect_index(k as i64 - half as i64, n)];
            }
        }
        BorderPolicy::Zero => {
            pad[..half].fill(0.0);
            pad[half..half + src.len()].copy_from_slice(src);
            pad[half + src.len()..].fill(0.0);
        }
    }
}

/// Dot product of a padded window with a symmetric kernel, summed in
/// mirror-symmetric pairs so horizontally flipped inputs produce exactly
/// flipped outputs.
#[inline]
fn symmetric_dot(pad: &[f64], center: usize, kernel: &[f64], half: usize) -> f64 {
    let mut acc = kernel[half] * pad[center];
    for d in 1..=half {
        acc += kernel[half + d] * (pad[center - d] + pad[center + d]);
    }
    acc
}

/// Separable blur with a symmetric 1-D kernel applied along both axes.
fn separable_blur(
    values: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
    border: BorderPolicy,
) -> Vec<f64> {
    let half = kernel.len() / 2;
    // Horizontal pass.
    let mut hpass = vec![0.0; values.len()];
    let mut pad = vec![0.0; width + 2 * half];
    for (src, dst) in values.chunks(width).zip(hpass.chunks_mut(width)) {
        pad_line(src, half, border, &mut pad);
        for x in 0..width {
            dst[x] = symmetric_dot(&pad, x + half, kernel, half);
        }
    }
    // Vertical pass: accumulate whole rows, pairing mirror-symmetric taps.
    let mut out = vec![0.0; values.len()];
    let n = height as i64;
    let src_row = |i: i64| -> Option<&[f64]> {
        match border {
            BorderPolicy::Reflect => {
                let j = reflect_index(i, n);
                Some(&hpass[j * width..(j + 1) * width])
            }
            BorderPolicy::Zero => {
                if i < 0 || i >= n {
                    None
                } else {
                    Some(&hpass[i as usize * width..(i as usize + 1) * width])
                }
            }
        }
    };
    for y in 0..height as i64 {
        let dst = &mut out[y as usize * width..(y as usize + 1) * width];
        let w0 = kernel[half];
        if let Some(row) = src_row(y) {
            for (d, s) in dst.iter_mut().zip(row) {
                *d = w0 * s;
            }
        }
        for d in 1..=half as i64 {
            let w = kernel[half + d as usize];
            match (src_row(y - d), src_row(y + d)) {
                (Some(top), Some(bot)) => {
                    for ((o, a), b) in dst.iter_mut().zip(top).zip(bot) {
                        *o += w * (a + b);
                    }
                }
                (Some(row), None) | (None, Some(row)) => {
                    for (o, a) in dst.iter_mut().zip(row) {
                        *o += w * (a + 0.0);
                    }
                }
                (None, None) => {}
            }
        }
    }
    out
}

/// Direct 2-D convolution. Quadratic in kernel side; kept as the reference
/// route for the separable path.
pub fn convolve(image: &GrayImage, kernel: &Kernel, border: BorderPolicy) -> Result<ResponseMap> {
    let (w, h) = (image.width() as i64, image.height() as i64);
    if border == BorderPolicy::Reflect {
        check_reflect_fits(kernel.side(), image.width(), image.height())?;
    }
    let half = (kernel.side() / 2) as i64;
    let data = image.data();
    let mut values = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -half..=half {
                let sy = y + dy;
                for dx in -half..=half {
                    let sx = x + dx;
                    let sample = match border {
                        BorderPolicy::Reflect => {
                            data[reflect_index(sy, h) * w as usize + reflect_index(sx, w)]
                        }
                        BorderPolicy::Zero => {
                            if sx < 0 || sx >= w || sy < 0 || sy >= h {
                                0.0
                            } else {
                                data[(sy * w + sx) as usize]
                            }
                        }
                    };
                    acc += kernel.get((dy + half) as u32, (dx + half) as u32) * sample;
                }
            }
            values.push(acc);
        }
    }
    Ok(ResponseMap {
        width: image.width(),
        height: image.height(),
        values,
    })
}

/// DoG response via the separable fast path: the difference of two
/// separable Gaussian blurs over the shared window.
pub fn dog_response(
    image: &GrayImage,
    params: &DoGParams,
    border: BorderPolicy,
) -> Result<ResponseMap> {
    params.validate()?;
    let side = params.kernel_side();
    if border == BorderPolicy::Reflect {
        check_reflect_fits(side, image.width(), image.height())?;
    }
    let (w, h) = (image.width() as usize, image.height() as usize);
    let center = gaussian_kernel_1d(params.sigma_c, side)?;
    let surround = gaussian_kernel_1d(params.surround_ratio * params.sigma_c, side)?;
    let blur_c = separable_blur(image.data(), w, h, &center, border);
    let blur_s = separable_blur(image.data(), w, h, &surround, border);
    let values = blur_c
        .into_iter()
        .zip(blur_s)
        .map(|(c, s)| c - s)
        .collect();
    Ok(ResponseMap {
        width: image.width(),
        height: image.height(),
        values,
    })
}

/// Per-scale responses and binary edge maps, finest scale first.
#[derive(Debug, Clone)]
pub struct EdgeMapStack {
    pub scales: Vec<f64>,
    pub layers: Vec<(ResponseMap, EdgeMap)>,
}

/// Filters `image` at every σc in `scales` (strictly increasing) and
/// binarizes each response.
pub fn edge_map_stack(
    image: &GrayImage,
    scales: &[f64],
    surround_ratio: f64,
    window_ratio: f64,
    border: BorderPolicy,
) -> Result<EdgeMapStack> {
    if scales.is_empty() {
        return Err(Error::param("scales must be non-empty"));
    }
    if scales.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::param("scales must be strictly increasing"));
    }
    let mut layers = Vec::with_capacity(scales.len());
    for &sigma_c in scales {
        let params = DoGParams {
            sigma_c,
            surround_ratio,
            window_ratio,
        };
        let response = dog_response(image, &params, border)?;
        let edges = binarize(&response);
        layers.push((response, edges));
    }
    Ok(EdgeMapStack {
        scales: scales.to_vec(),
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: u32, h: u32, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w as usize * h as usize)
            .map(|_| rng.gen_range(0.0..=1.0))
            .collect();
        GrayImage::from_vec(w, h, data).unwrap()
    }

    #[test]
    fn paper_grid_gaussian_sums_to_one() {
        let k = gaussian_kernel(4.0, 33).unwrap();
        assert_eq!(k.side(), 33);
        assert!((k.sum() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn center_weight_is_strict_max() {
        for sigma in [0.7, 2.0, 5.0] {
            let k = gaussian_kernel(sigma, 9).unwrap();
            let c = k.get(4, 4);
            let max_off = k
                .weights()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != 4 * 9 + 4)
                .map(|(_, w)| *w)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(c > max_off);
        }
    }

    #[test]
    fn unit_sigma_3x3_matches_hand_evaluation() {
        // exp(0) center, exp(-1/2) on the four edges, exp(-1) on the four
        // corners, then normalized.
        let k = gaussian_kernel(1.0, 3).unwrap();
        let e5 = (-0.5f64).exp();
        let e1 = (-1.0f64).exp();
        let sum = 1.0 + 4.0 * e5 + 4.0 * e1;
        let expect = [
            e1 / sum,
            e5 / sum,
            e1 / sum,
            e5 / sum,
            1.0 / sum,
            e5 / sum,
            e1 / sum,
            e5 / sum,
            e1 / sum,
        ];
        for (w, e) in k.weights().iter().zip(expect) {
            assert!((w - e).abs() <= 1e-15);
        }
    }

    #[test]
    fn even_side_rejected() {
        assert!(matches!(gaussian_kernel(1.0, 4), Err(Error::Param(_))));
        assert!(matches!(gaussian_kernel_1d(1.0, 0), Err(Error::Param(_))));
    }

    #[test]
    fn gaussian_symmetric_under_rotation_and_reflection() {
        let k = gaussian_kernel(2.5, 11).unwrap();
        let n = k.side();
        for r in 0..n {
            for c in 0..n {
                assert_eq!(k.get(r, c), k.get(c, r));
                assert_eq!(k.get(r, c), k.get(n - 1 - r, c));
                assert_eq!(k.get(r, c), k.get(c, n - 1 - r));
            }
        }
    }

    #[test]
    fn dog_kernel_paper_case() {
        let k = dog_kernel(&DoGParams::new(8.0)).unwrap();
        assert_eq!(k.side(), 65);
        assert!(k.sum().abs() <= 1e-6);
        assert!(k.get(32, 32) > 0.0);
    }

    #[test]
    fn dog_kernel_near_unit_ratio_vanishes() {
        let params = DoGParams {
            sigma_c: 4.0,
            surround_ratio: 1.0 + 1e-6,
            window_ratio: 8.0,
        };
        let k = dog_kernel(&params).unwrap();
        let max_abs = k.weights().iter().fold(0.0f64, |m, w| m.max(w.abs()));
        assert!(max_abs < 1e-5);
    }

    #[test]
    fn dog_kernel_center_surround_signs() {
        let k = dog_kernel(&DoGParams::new(4.0)).unwrap();
        let c = (k.side() / 2) as i64;
        for dy in -c..=c {
            for dx in -c..=c {
                let r2 = dx * dx + dy * dy;
                let w = k.get((c + dy) as u32, (c + dx) as u32);
                if r2 <= 16 {
                    assert!(w > 0.0, "expected positive disc at r²={r2}");
                }
                if (100..=256).contains(&r2) {
                    assert!(w < 0.0, "expected negative annulus at r²={r2}");
                }
            }
        }
    }

    #[test]
    fn odd_window_product_bumped_to_odd_side() {
        let params = DoGParams {
            sigma_c: 1.5,
            surround_ratio: 2.0,
            window_ratio: 3.0,
        };
        // h·σc = 4.5 rounds to 5 (odd), so the side bumps from 6 to 7.
        assert_eq!(params.kernel_side(), 7);
        assert_eq!(DoGParams::new(4.0).kernel_side(), 33);
    }

    #[test]
    fn constant_image_annihilated() {
        let img = GrayImage::new(40, 40, 0.7);
        let params = DoGParams::new(2.0);
        for border in [BorderPolicy::Reflect, BorderPolicy::Zero] {
            let resp = dog_response(&img, &params, border).unwrap();
            let half = (params.kernel_side() / 2) as u32;
            for y in 0..40 {
                for x in 0..40 {
                    let interior =
                        x >= half && y >= half && x < 40 - half && y < 40 - half;
                    if border == BorderPolicy::Reflect || interior {
                        assert!(resp.get(x, y).abs() <= 1e-6, "at ({x},{y}) {border:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn response_is_linear_in_luminance() {
        let img = random_image(16, 16, 3);
        let scaled = GrayImage::from_vec(
            16,
            16,
            img.data().iter().map(|v| 0.5 * v).collect(),
        )
        .unwrap();
        let k = dog_kernel(&DoGParams {
            sigma_c: 1.0,
            surround_ratio: 2.0,
            window_ratio: 4.0,
        })
        .unwrap();
        let a = convolve(&img, &k, BorderPolicy::Reflect).unwrap();
        let b = convolve(&scaled, &k, BorderPolicy::Reflect).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((0.5 * x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn step_edge_lobes_straddle_the_step() {
        // 1-D oracle: brute-force convolution of a step signal with a 1-D
        // DoG, zero-padded.
        let n = 64usize;
        let step = 32usize;
        let signal: Vec<f64> = (0..n).map(|i| if i < step { 0.0 } else { 1.0 }).collect();
        let side = 17u32;
        let g_c = gaussian_kernel_1d(1.5, side).unwrap();
        let g_s = gaussian_kernel_1d(3.0, side).unwrap();
        let dog: Vec<f64> = g_c.iter().zip(&g_s).map(|(c, s)| c - s).collect();
        let half = (side / 2) as i64;
        let brute: Vec<f64> = (0..n as i64)
            .map(|i| {
                let mut acc = 0.0;
                for d in -half..=half {
                    let j = i + d;
                    if (0..n as i64).contains(&j) {
                        acc += dog[(d + half) as usize] * signal[j as usize];
                    }
                }
                acc
            })
            .collect();
        // Positive lobe on the bright side, negative on the dark side,
        // extrema adjacent to the step.
        let (mut arg_min, mut arg_max) = (0, 0);
        for (i, v) in brute.iter().enumerate() {
            if *v < brute[arg_min] {
                arg_min = i;
            }
            if *v > brute[arg_max] {
                arg_max = i;
            }
        }
        assert!(brute[step] > 0.0 && brute[step - 1] < 0.0);
        assert_eq!(arg_max, step);
        assert_eq!(arg_min, step - 1);

        // The 2-D separable path shows the same structure across a
        // vertical step edge.
        let mut img = GrayImage::new(64, 16, 0.0);
        for y in 0..16 {
            for x in 32..64 {
                img.set(x, y, 1.0);
            }
        }
        let resp = dog_response(
            &img,
            &DoGParams {
                sigma_c: 1.5,
                surround_ratio: 2.0,
                window_ratio: 8.0,
            },
            BorderPolicy::Reflect,
        )
        .unwrap();
        assert!(resp.get(32, 8) > 0.0);
        assert!(resp.get(31, 8) < 0.0);
    }

    #[test]
    fn separable_equals_direct() {
        let img = random_image(24, 24, 11);
        for border in [BorderPolicy::Reflect, BorderPolicy::Zero] {
            for (sigma_c, s, h) in [(1.5, 2.0, 8.0), (1.0, 3.0, 6.0), (2.0, 1.4, 4.0)] {
                let params = DoGParams {
                    sigma_c,
                    surround_ratio: s,
                    window_ratio: h,
                };
                let fast = dog_response(&img, &params, border).unwrap();
                let reference = convolve(&img, &dog_kernel(&params).unwrap(), border).unwrap();
                let max_abs = fast
                    .values()
                    .iter()
                    .zip(reference.values())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(max_abs <= 1e-6, "{border:?} σc={sigma_c} s={s} h={h}: {max_abs}");
            }
        }
    }

    #[test]
    fn flip_equivariance_is_exact() {
        let img = random_image(31, 17, 5);
        let params = DoGParams {
            sigma_c: 1.5,
            surround_ratio: 2.0,
            window_ratio: 8.0,
        };
        let flipped_then_filtered =
            dog_response(&img.mirrored_horizontal(), &params, BorderPolicy::Reflect).unwrap();
        let filtered_then_flipped = dog_response(&img, &params, BorderPolicy::Reflect)
            .unwrap()
            .mirrored_horizontal();
        assert_eq!(flipped_then_filtered, filtered_then_flipped);
        assert_eq!(
            binarize(&flipped_then_filtered),
            binarize(&filtered_then_flipped)
        );
    }

    #[test]
    fn reflect_rejects_oversized_kernel() {
        let img = GrayImage::new(10, 10, 0.5);
        let err = dog_response(&img, &DoGParams::new(4.0), BorderPolicy::Reflect).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
        assert!(dog_response(&img, &DoGParams::new(4.0), BorderPolicy::Zero).is_ok());
    }

    #[test]
    fn binarize_rules() {
        let all_neg = ResponseMap::from_vec(2, 2, vec![-0.5, -0.1, -2.0, -1e-9]);
        assert_eq!(binarize(&all_neg).count_ones(), 0);
        let all_pos = ResponseMap::from_vec(2, 2, vec![1e-12; 4]);
        assert_eq!(binarize(&all_pos).count_ones(), 4);
        let zeros = ResponseMap::from_vec(2, 2, vec![0.0; 4]);
        assert_eq!(binarize(&zeros).count_ones(), 0);
    }

    #[test]
    fn stack_structure() {
        let img = random_image(32, 32, 9);
        let stack = edge_map_stack(&img, &[1.0, 2.0], 2.0, 8.0, BorderPolicy::Reflect).unwrap();
        assert_eq!(stack.layers.len(), 2);
        assert_eq!(stack.scales, vec![1.0, 2.0]);
        let single = edge_map_stack(&img, &[1.5], 2.0, 8.0, BorderPolicy::Reflect).unwrap();
        assert_eq!(single.layers.len(), 1);
        assert!(matches!(
            edge_map_stack(&img, &[2.0, 1.0], 2.0, 8.0, BorderPolicy::Reflect),
            Err(Error::Param(_))
        ));
        assert!(matches!(
            edge_map_stack(&img, &[1.0, 1.0], 2.0, 8.0, BorderPolicy::Reflect),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn response_raw_roundtrip_and_png16_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let resp = ResponseMap::from_vec(3, 2, vec![-1.5, 0.0, 2.25, 0.125, -0.75, 1.0]);
        let raw = dir.path().join("r.txt");
        resp.save_raw(&raw).unwrap();
        assert_eq!(ResponseMap::load_raw(&raw).unwrap(), resp);
        let png = dir.path().join("r.png");
        resp.save_png16(&png).unwrap();
        let sidecar = std::fs::read_to_string(dir.path().join("r.png.scale.txt")).unwrap();
        assert!(sidecar.starts_with("offset "));
        assert!(sidecar.contains("\nscale "));
    }

    #[test]
    fn edge_map_png1_roundtrip_dimensions() {
        let dir = tempfile::tempdir().unwrap();
        let em = EdgeMap::from_bits(10, 3, {
            let mut b = vec![0u8; 30];
            b[0] = 1;
            b[29] = 1;
            b
        });
        let path = dir.path().join("e.png");
        em.save_png1(&path).unwrap();
        let back = GrayImage::load_png(&path).unwrap();
        assert_eq!((back.width(), back.height()), (10, 3));
        assert_eq!(back.get(0, 0), 1.0);
        assert_eq!(back.get(9, 2), 1.0);
        assert_eq!(back.get(5, 1), 0.0);
    }
}
