//! RGB images in `[0, 1]`, PPM (P6) and PNG I/O, box-filter downsizing and
//! montages.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("pixel buffer has {found} values, expected {expected}")]
    Size { expected: usize, found: usize },
    #[error("pixel value {0} outside [0, 1]")]
    Range(f64),
    #[error("{}: {reason}", path.display())]
    Decode { path: PathBuf, reason: String },
    #[error("unsupported image format: {}", .0.display())]
    UnsupportedFormat(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ImageError + '_ {
    move |source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Rectangular RGB image, height × width × 3, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, ImageError> {
        let expected = width * height * 3;
        if pixels.len() != expected || expected == 0 {
            return Err(ImageError::Size {
                expected,
                found: pixels.len(),
            });
        }
        if let Some(&bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ImageError::Range(bad));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// 8-bit samples, `round(value · 255)`.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self, ImageError> {
        Self::new(
            width,
            height,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.to_rgb8())?;
        w.flush()
    }

    pub fn save_ppm(&self, path: &Path) -> Result<(), ImageError> {
        let file = File::create(path).map_err(io_err(path))?;
        self.write_ppm(BufWriter::new(file)).map_err(io_err(path))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut encoder =
            png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let encode_err = |e: png::EncodingError| ImageError::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        };
        let mut writer = encoder.write_header().map_err(encode_err)?;
        writer
            .write_image_data(&self.to_rgb8())
            .map_err(encode_err)?;
        writer.finish().map_err(encode_err)
    }

    /// Saves as PNG when the extension says so, PPM otherwise.
    pub fn save(&self, path: &Path) -> Result<(), ImageError> {
        match extension(path).as_deref() {
            Some("png") => self.save_png(path),
            _ => self.save_ppm(path),
        }
    }

    /// Area-averaging resize to `size × size`. Each target pixel averages the
    /// source pixels whose index range maps onto it.
    pub fn box_resize(&self, size: usize) -> CoverImage {
        let mut out = Vec::with_capacity(size * size * 3);
        for ty in 0..size {
            let (y0, y1) = source_span(ty, size, self.height);
            for tx in 0..size {
                let (x0, x1) = source_span(tx, size, self.width);
                let mut acc = [0.0f64; 3];
                for y in y0..y1 {
                    for x in x0..x1 {
                        let base = (y * self.width + x) * 3;
                        for (a, v) in acc.iter_mut().zip(&self.pixels[base..base + 3]) {
                            *a += v;
                        }
                    }
                }
                let count = ((y1 - y0) * (x1 - x0)) as f64;
                out.extend(acc.iter().map(|a| (a / count).clamp(0.0, 1.0)));
            }
        }
        CoverImage { size, pixels: out }
    }
}

fn source_span(target: usize, target_len: usize, source_len: usize) -> (usize, usize) {
    let start = target * source_len / target_len;
    let end = ((target + 1) * source_len / target_len).max(start + 1);
    (start.min(source_len - 1), end.min(source_len))
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

/// Square cover image, size × size × 3.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverImage {
    size: usize,
    pixels: Vec<f64>,
}

impl CoverImage {
    pub fn new(size: usize, pixels: Vec<f64>) -> Result<Self, ImageError> {
        RgbImage::new(size, size, pixels).map(Self::from)
    }

    /// Caller guarantees length and range (e.g. sigmoid outputs).
    pub(crate) fn from_trusted(size: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), size * size * 3);
        Self { size, pixels }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn to_rgb(&self) -> RgbImage {
        RgbImage {
            width: self.size,
            height: self.size,
            pixels: self.pixels.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ImageError> {
        self.to_rgb().save(path)
    }

    pub fn max_abs_diff(&self, other: &CoverImage) -> f64 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn mean_abs_diff(&self, other: &CoverImage) -> f64 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / self.pixels.len() as f64
    }
}

impl From<RgbImage> for CoverImage {
    fn from(img: RgbImage) -> Self {
        if img.width == img.height {
            CoverImage {
                size: img.width,
                pixels: img.pixels,
            }
        } else {
            img.box_resize(img.width.max(img.height))
        }
    }
}

/// Tiles equally sized covers left to right, `columns` per row, with a
/// `gap`-pixel white border.
pub fn montage(covers: &[CoverImage], columns: usize, gap: usize) -> Option<RgbImage> {
    let size = covers.first()?.size;
    if covers.iter().any(|c| c.size != size) || columns == 0 {
        return None;
    }
    let cols = columns.min(covers.len());
    let rows = covers.len().div_ceil(cols);
    let width = cols * size + (cols + 1) * gap;
    let height = rows * size + (rows + 1) * gap;
    let mut pixels = vec![1.0; width * height * 3];
    for (i, cover) in covers.iter().enumerate() {
        let ox = gap + (i % cols) * (size + gap);
        let oy = gap + (i / cols) * (size + gap);
        for y in 0..size {
            let src = &cover.pixels[y * size * 3..(y + 1) * size * 3];
            let start = ((oy + y) * width + ox) * 3;
            pixels[start..start + size * 3].copy_from_slice(src);
        }
    }
    Some(RgbImage {
        width,
        height,
        pixels,
    })
}

fn read_ppm_token<R: BufRead>(r: &mut R) -> std::io::Result<String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0] as char;
        if c == '#' && token.is_empty() {
            let mut comment = String::new();
            r.read_line(&mut comment)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(c);
    }
    Ok(token)
}

pub fn read_ppm<R: BufRead>(mut r: R) -> Result<RgbImage, String> {
    let magic = read_ppm_token(&mut r).map_err(|e| e.to_string())?;
    if magic != "P6" {
        return Err(format!("expected P6 magic, found '{magic}'"));
    }
    let mut next_number = |what: &str| -> Result<usize, String> {
        read_ppm_token(&mut r)
            .map_err(|e| e.to_string())?
            .parse::<usize>()
            .map_err(|_| format!("bad {what}"))
    };
    let width = next_number("width")?;
    let height = next_number("height")?;
    let maxval = next_number("maxval")?;
    if maxval != 255 {
        return Err(format!("only 8-bit PPM supported (maxval {maxval})"));
    }
    let mut bytes = vec![0u8; width * height * 3];
    r.read_exact(&mut bytes).map_err(|e| e.to_string())?;
    RgbImage::from_rgb8(width, height, &bytes).map_err(|e| e.to_string())
}

fn read_png(path: &Path) -> Result<RgbImage, String> {
    let file = File::open(path).map_err(|e| e.to_string())?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0u8; reader.output_buffer_size().ok_or("image too large")?];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let bytes = &buf[..info.buffer_size()];
    let (w, h) = (info.width as usize, info.height as usize);
    let rgb: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => bytes.to_vec(),
        png::ColorType::Rgba => bytes
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect(),
        png::ColorType::Grayscale => bytes.iter().flat_map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => bytes
            .chunks_exact(2)
            .flat_map(|p| [p[0], p[0], p[0]])
            .collect(),
        other => return Err(format!("unsupported PNG color type {other:?}")),
    };
    RgbImage::from_rgb8(w, h, &rgb).map_err(|e| e.to_string())
}

/// Reads a PPM (P6) or PNG file.
pub fn read_image(path: &Path) -> Result<RgbImage, ImageError> {
    let decode = |reason: String| ImageError::Decode {
        path: path.to_path_buf(),
        reason,
    };
    match extension(path).as_deref() {
        Some("ppm") => {
            let file = File::open(path).map_err(io_err(path))?;
            read_ppm(BufReader::new(file)).map_err(decode)
        }
        Some("png") => read_png(path).map_err(decode),
        _ => Err(ImageError::UnsupportedFormat(path.to_path_buf())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_is_p6_with_rounded_bytes() {
        let img = RgbImage::new(2, 1, vec![0.0, 0.5, 1.0, 0.2, 0.998, 0.001]).unwrap();
        let mut out = Vec::new();
        img.write_ppm(&mut out).unwrap();
        let header = b"P6\n2 1\n255\n";
        assert_eq!(&out[..header.len()], header);
        assert_eq!(&out[header.len()..], &[0, 128, 255, 51, 254, 0]);
        let back = read_ppm(out.as_slice()).unwrap();
        assert_eq!(back.to_rgb8(), img.to_rgb8());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = RgbImage::from_rgb8(
            3,
            2,
            &[
                10, 20, 30, 40, 50, 60, 70, 80, 90, 1, 2, 3, 4, 5, 6, 7, 8, 9,
            ],
        )
        .unwrap();
        img.save(&path).unwrap();
        assert_eq!(read_image(&path).unwrap(), img);
    }

    #[test]
    fn box_resize_averages_blocks() {
        // 4×4 image, left half black, right half white → 2×2 keeps the split
        let mut px = Vec::new();
        for _y in 0..4 {
            for x in 0..4 {
                let v = if x < 2 { 0.0 } else { 1.0 };
                px.extend([v, v, v]);
            }
        }
        let img = RgbImage::new(4, 4, px).unwrap();
        let small = img.box_resize(2);
        assert_eq!(
            small.pixels(),
            &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
        );
        let one = img.box_resize(1);
        assert_eq!(one.pixels(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn montage_layout() {
        let a = CoverImage::new(2, vec![0.0; 12]).unwrap();
        let m = montage(&[a.clone(), a.clone(), a], 2, 1).unwrap();
        assert_eq!((m.width(), m.height()), (7, 7));
    }

    #[test]
    fn out_of_range_pixels_rejected() {
        assert!(CoverImage::new(1, vec![0.0, 1.2, 0.0]).is_err());
        assert!(CoverImage::new(2, vec![0.0; 3]).is_err());
    }
}
