use font8x8::UnicodeFonts;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};

pub type Rgb = [u8; 3];

/// RGB raster with clipped drawing primitives.
pub struct Canvas {
    w: u32,
    h: u32,
    buf: Vec<u8>,
}

pub fn text_width(s: &str, scale: i32) -> i32 {
    s.chars().count() as i32 * 8 * scale
}

impl Canvas {
    pub fn new(w: u32, h: u32, bg: Rgb) -> Self {
        let mut buf = Vec::with_capacity((w * h * 3) as usize);
        for _ in 0..w * h {
            buf.extend_from_slice(&bg);
        }
        Self { w, h, buf }
    }

    pub fn width(&self) -> u32 {
        self.w
    }

    pub fn height(&self) -> u32 {
        self.h
    }

    pub fn set(&mut self, x: i32, y: i32, c: Rgb) {
        if x < 0 || y < 0 || x >= self.w as i32 || y >= self.h as i32 {
            return;
        }
        let i = ((y as u32 * self.w + x as u32) * 3) as usize;
        self.buf[i..i + 3].copy_from_slice(&c);
    }

    pub fn hline(&mut self, x0: i32, x1: i32, y: i32, c: Rgb) {
        for x in x0.min(x1)..=x0.max(x1) {
            self.set(x, y, c);
        }
    }

    pub fn vline(&mut self, x: i32, y0: i32, y1: i32, c: Rgb) {
        for y in y0.min(y1)..=y0.max(y1) {
            self.set(x, y, c);
        }
    }

    /// Bresenham.
    pub fn line(&mut self, (mut x0, mut y0): (i32, i32), (x1, y1): (i32, i32), c: Rgb) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.set(x0, y0, c);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    pub fn thick_line(&mut self, a: (i32, i32), b: (i32, i32), c: Rgb) {
        self.line(a, b, c);
        self.line((a.0, a.1 + 1), (b.0, b.1 + 1), c);
    }

    pub fn dot(&mut self, x: i32, y: i32, r: i32, c: Rgb) {
        for dy in -r..=r {
            for dx in -r..=r {
                self.set(x + dx, y + dy, c);
            }
        }
    }

    /// Small filled marker triangle pointing at (x, y ± 8).
    pub fn triangle(&mut self, x: i32, y: i32, pointing_down: bool, c: Rgb) {
        for row in 0..7 {
            let half = if pointing_down { 6 - row } else { row };
            let yy = y - 3 + row;
            self.hline(x - half, x + half, yy, c);
        }
    }

    pub fn text(&mut self, x: i32, y: i32, s: &str, c: Rgb, scale: i32) {
        for (k, ch) in s.chars().enumerate() {
            let glyph = font8x8::BASIC_FONTS
                .get(ch)
                .or_else(|| font8x8::BASIC_FONTS.get('?'))
                .unwrap_or([0; 8]);
            let ox = x + k as i32 * 8 * scale;
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..8 {
                    if bits >> col & 1 == 1 {
                        for sy in 0..scale {
                            for sx in 0..scale {
                                self.set(
                                    ox + col * scale + sx,
                                    y + row as i32 * scale + sy,
                                    c,
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn to_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        PngEncoder::new(&mut out)
            .write_image(&self.buf, self.w, self.h, ExtendedColorType::Rgb8)
            .expect("in-memory png encoding");
        out
    }
}
