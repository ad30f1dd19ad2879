//! Diagnostic renderings: the jetwhite response colormap and green
//! segment overlays on binary edge maps.

use crate::dog::{EdgeMap, ResponseMap};
use crate::hough::LineSegment;
use crate::image::RgbImage;

/// jetwhite color of a normalized response value in [−1, 1]: white at
/// zero, warm hues for positive, cool hues for negative. Negation swaps
/// the red and blue channels exactly.
pub fn jetwhite(u: f64) -> [u8; 3] {
    let warm = warm_ramp(u.abs().min(1.0));
    if u >= 0.0 {
        warm
    } else {
        [warm[2], warm[1], warm[0]]
    }
}

/// Piecewise-linear ramp white → orange → red → dark red.
fn warm_ramp(m: f64) -> [u8; 3] {
    let (r, g, b) = if m <= 0.3 {
        let t = m / 0.3;
        (1.0, 1.0 - 0.25 * t, 1.0 - t)
    } else if m <= 0.7 {
        let t = (m - 0.3) / 0.4;
        (1.0, 0.75 * (1.0 - t), 0.0)
    } else {
        let t = (m - 0.7) / 0.3;
        (1.0 - 0.5 * t, 0.0, 0.0)
    };
    [byte(r), byte(g), byte(b)]
}

fn byte(c: f64) -> u8 {
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Renders a signed response with the value range mapped symmetrically
/// about zero, so zero is always white.
pub fn render_jetwhite(response: &ResponseMap) -> RgbImage {
    let (lo, hi) = response.min_max();
    let amp = lo.abs().max(hi.abs());
    let mut img = RgbImage::new(response.width(), response.height());
    for y in 0..response.height() {
        for x in 0..response.width() {
            let u = if amp > 0.0 {
                response.get(x, y) / amp
            } else {
                0.0
            };
            img.put(x, y, jetwhite(u));
        }
    }
    img
}

/// Draws a straight pixel line (Bresenham).
pub fn draw_line(img: &mut RgbImage, p1: (u32, u32), p2: (u32, u32), rgb: [u8; 3]) {
    let (mut x, mut y) = (p1.0 as i64, p1.1 as i64);
    let (x2, y2) = (p2.0 as i64, p2.1 as i64);
    let dx = (x2 - x).abs();
    let dy = -(y2 - y).abs();
    let sx = if x < x2 { 1 } else { -1 };
    let sy = if y < y2 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width && (y as u32) < img.height {
            img.put(x as u32, y as u32, rgb);
        }
        if x == x2 && y == y2 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Detected segments in green over the binary edge map (edges white on
/// black).
pub fn overlay_segments(edges: &EdgeMap, segments: &[LineSegment]) -> RgbImage {
    let mut img = RgbImage::new(edges.width(), edges.height());
    for y in 0..edges.height() {
        for x in 0..edges.width() {
            if edges.get(x, y) == 1 {
                img.put(x, y, [255, 255, 255]);
            }
        }
    }
    for seg in segments {
        draw_line(&mut img, seg.p1, seg.p2, [0, 255, 0]);
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dog::EdgeMap;

    #[test]
    fn zero_response_renders_white() {
        let resp = ResponseMap::from_vec(3, 2, vec![0.0; 6]);
        let img = render_jetwhite(&resp);
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(img.get(x, y), [255, 255, 255]);
            }
        }
    }

    #[test]
    fn negation_swaps_channels_exactly() {
        let values = vec![-0.8, -0.1, 0.0, 0.3, 0.55, 1.7];
        let resp = ResponseMap::from_vec(3, 2, values.clone());
        let neg = ResponseMap::from_vec(3, 2, values.iter().map(|v| -v).collect());
        let a = render_jetwhite(&resp);
        let b = render_jetwhite(&neg);
        for y in 0..2 {
            for x in 0..3 {
                let [r, g, bl] = a.get(x, y);
                assert_eq!(b.get(x, y), [bl, g, r], "at ({x},{y})");
            }
        }
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(jetwhite(0.0), [255, 255, 255]);
        assert_eq!(jetwhite(1.0), [128, 0, 0]);
        assert_eq!(jetwhite(-1.0), [0, 0, 128]);
        assert_eq!(jetwhite(0.3), [255, 191, 0]);
        assert_eq!(jetwhite(-0.3), [0, 191, 255]);
    }

    #[test]
    fn overlay_paints_segment_green_on_edges() {
        let mut bits = vec![0u8; 100];
        for x in 0..10 {
            bits[5 * 10 + x] = 1;
        }
        let edges = EdgeMap::from_bits(10, 10, bits);
        let seg = LineSegment {
            p1: (0, 5),
            p2: (9, 5),
            theta_deg: 90.0,
            rho: 5.0,
            length: 9.0,
            scale: 1.0,
        };
        let img = overlay_segments(&edges, &[seg]);
        for x in 0..10 {
            assert_eq!(img.get(x, 5), [0, 255, 0]);
        }
        assert_eq!(img.get(0, 0), [0, 0, 0]);
        assert_eq!(img.get(3, 4), [0, 0, 0]);
    }
}
