//! Depth-buffered point rendering and binary PPM output.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cloud::{quantize_channel, PointCloud, ViewPlane};
use crate::projection::{project_point, ImageSize, RayParams};
use crate::{Error, Result};

/// Depth stored for pixels no point reached.
pub const BACKGROUND_DEPTH: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorMode {
    /// Scanned point colors.
    Real,
    /// Label colors from a [`Palette`].
    Semantic,
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorMode::Real => "real",
            ColorMode::Semantic => "semantic",
        })
    }
}

/// Label to RGB lookup. Pure black is reserved for empty pixels and is
/// rejected; labels past the end wrap around.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    colors: Vec<[f64; 3]>,
}

const DEFAULT_PALETTE: [[u8; 3]; 20] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
    [174, 199, 232],
    [255, 187, 120],
    [152, 223, 138],
    [255, 152, 150],
    [197, 176, 213],
    [196, 156, 148],
    [247, 182, 210],
    [199, 199, 199],
    [219, 219, 141],
    [158, 218, 229],
];

impl Palette {
    pub fn new(colors: Vec<[f64; 3]>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::invalid("palette must contain at least one color"));
        }
        if let Some(i) = colors.iter().position(|c| c.iter().all(|&v| v <= 0.0)) {
            return Err(Error::invalid(format!(
                "palette entry {i} is black, which is reserved for empty pixels"
            )));
        }
        if colors.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("palette channels must lie in [0, 1]"));
        }
        Ok(Palette { colors })
    }

    pub fn color(&self, label: usize) -> [f64; 3] {
        self.colors[label % self.colors.len()]
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            colors: DEFAULT_PALETTE
                .iter()
                .map(|c| c.map(|v| f64::from(v) / 255.0))
                .collect(),
        }
    }
}

/// An `H x W` RGB image with a per-pixel depth buffer.
///
/// In semantic mode a pixel is black exactly when its depth is
/// [`BACKGROUND_DEPTH`]. Real-mode renders may contain black points.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    size: ImageSize,
    mode: ColorMode,
    pixels: Vec<[f64; 3]>,
    depth: Vec<f64>,
}

impl RasterImage {
    pub fn blank(size: ImageSize, mode: ColorMode) -> Self {
        let n = size.pixel_count();
        RasterImage {
            size,
            mode,
            pixels: vec![[0.0; 3]; n],
            depth: vec![BACKGROUND_DEPTH; n],
        }
    }

    /// Builds an image directly from row-major pixels, all at background depth
    /// unless non-black.
    pub fn from_pixels(size: ImageSize, mode: ColorMode, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != size.pixel_count() {
            return Err(Error::invalid(format!(
                "expected {} pixels, got {}",
                size.pixel_count(),
                pixels.len()
            )));
        }
        let depth = pixels
            .iter()
            .map(|p| if is_black(p) { BACKGROUND_DEPTH } else { 0.0 })
            .collect();
        Ok(RasterImage {
            size,
            mode,
            pixels,
            depth,
        })
    }

    pub fn size(&self) -> ImageSize {
        self.size
    }

    pub fn height(&self) -> usize {
        self.size.height
    }

    pub fn width(&self) -> usize {
        self.size.width
    }

    pub fn mode(&self) -> ColorMode {
        self.mode
    }

    /// Row-major pixels, top row first.
    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn depths(&self) -> &[f64] {
        &self.depth
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        self.pixels[row * self.size.width + col]
    }

    pub fn depth_at(&self, row: usize, col: usize) -> f64 {
        self.depth[row * self.size.width + col]
    }

    /// Number of non-black pixels.
    pub fn semantic_pixel_count(&self) -> usize {
        self.pixels.iter().filter(|p| !is_black(p)).count()
    }
}

fn is_black(p: &[f64; 3]) -> bool {
    p.iter().all(|&v| v == 0.0)
}

/// Renders `subset` of a normalized cloud through `ray` onto `plane`.
///
/// One point covers one pixel. A point overwrites a pixel when its depth is
/// strictly smaller than the stored one, or equal with a lower point index,
/// so the result does not depend on the order of `subset`. Out-of-frame points
/// are dropped.
pub fn render_view(
    cloud: &PointCloud,
    subset: &[usize],
    plane: &ViewPlane,
    ray: &RayParams,
    size: ImageSize,
    mode: ColorMode,
    palette: &Palette,
) -> Result<RasterImage> {
    rasterize(cloud, subset, plane, ray, size, mode, palette).map(|(img, _)| img)
}

/// Index of the point shown in each pixel (row-major), `None` for background.
pub fn pixel_owners(
    cloud: &PointCloud,
    subset: &[usize],
    plane: &ViewPlane,
    ray: &RayParams,
    size: ImageSize,
) -> Result<Vec<Option<usize>>> {
    let (_, owner) = rasterize(
        cloud,
        subset,
        plane,
        ray,
        size,
        ColorMode::Real,
        &Palette::default(),
    )?;
    Ok(owner
        .into_iter()
        .map(|o| (o != usize::MAX).then_some(o))
        .collect())
}

fn rasterize(
    cloud: &PointCloud,
    subset: &[usize],
    plane: &ViewPlane,
    ray: &RayParams,
    size: ImageSize,
    mode: ColorMode,
    palette: &Palette,
) -> Result<(RasterImage, Vec<usize>)> {
    if let Some(&bad) = subset.iter().find(|&&i| i >= cloud.len()) {
        return Err(Error::invalid(format!("point index {bad} out of range")));
    }
    if mode == ColorMode::Semantic {
        if let Some(&index) = subset.iter().find(|&&i| cloud.point(i).label.is_none()) {
            return Err(Error::MissingLabel { index });
        }
    }

    let mut img = RasterImage::blank(size, mode);
    let mut owner = vec![usize::MAX; size.pixel_count()];
    for &i in subset {
        let point = cloud.point(i);
        let coord = project_point(point, plane, ray, size);
        let Some((row, col)) = coord.cell else {
            continue;
        };
        let k = row * size.width + col;
        let stored = img.depth[k];
        if coord.depth < stored || (coord.depth == stored && i < owner[k]) {
            img.depth[k] = coord.depth;
            owner[k] = i;
            img.pixels[k] = match mode {
                ColorMode::Real => point.color,
                ColorMode::Semantic => palette.color(point.label.expect("checked above")),
            };
        }
    }
    Ok((img, owner))
}

/// `true` where the pixel is exactly `(0, 0, 0)`.
pub fn black_mask(img: &RasterImage) -> Vec<bool> {
    img.pixels.iter().map(is_black).collect()
}

/// Binary PPM (`P6`, maxval 255), row-major, top row first. Each channel is
/// written as `round(v * 255)` after clamping to `[0, 1]`.
pub fn encode_ppm(img: &RasterImage) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels.len() * 3);
    out.extend_from_slice(header.as_bytes());
    for p in &img.pixels {
        out.extend(p.map(quantize_channel));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{Axis, Point, Side};

    fn plane() -> ViewPlane {
        ViewPlane::facing(1, Axis::X, Side::Positive)
    }

    fn small() -> ImageSize {
        ImageSize::new(8, 8).unwrap()
    }

    fn decode_ppm(bytes: &[u8]) -> (usize, usize, Vec<[u8; 3]>) {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            let start = pos;
            while !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).unwrap().to_owned());
            pos += 1;
        }
        assert_eq!(fields[0], "P6");
        assert_eq!(fields[3], "255");
        let w: usize = fields[1].parse().unwrap();
        let h: usize = fields[2].parse().unwrap();
        let px = bytes[pos..]
            .chunks(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect::<Vec<_>>();
        assert_eq!(px.len(), w * h);
        (w, h, px)
    }

    #[test]
    fn empty_subset_is_black() {
        let cloud = PointCloud::new(vec![Point::new([0.1, 0.0, 0.0], [1.0; 3], Some(0))]);
        let img = render_view(
            &cloud,
            &[],
            &plane(),
            &RayParams::straight(),
            small(),
            ColorMode::Real,
            &Palette::default(),
        )
        .unwrap();
        assert!(black_mask(&img).iter().all(|&b| b));
        assert!(img.depths().iter().all(|&d| d == BACKGROUND_DEPTH));
    }

    #[test]
    fn nearest_point_wins() {
        let red = Point::new([0.2, 0.0, 0.0], [1.0, 0.0, 0.0], None);
        let blue = Point::new([0.4, 0.0, 0.0], [0.0, 0.0, 1.0], None);
        for points in [vec![red, blue], vec![blue, red]] {
            let cloud = PointCloud::new(points);
            let img = render_view(
                &cloud,
                &[0, 1],
                &plane(),
                &RayParams::straight(),
                small(),
                ColorMode::Real,
                &Palette::default(),
            )
            .unwrap();
            assert_eq!(img.pixel(4, 4), [1.0, 0.0, 0.0]);
            assert_eq!(img.depth_at(4, 4), 0.2);
            assert_eq!(img.semantic_pixel_count(), 1);
        }
    }

    #[test]
    fn equal_depth_goes_to_lower_index() {
        let a = Point::new([0.2, 0.0, 0.0], [1.0, 0.0, 0.0], None);
        let b = Point::new([0.2, 0.0, 0.0], [0.0, 1.0, 0.0], None);
        let cloud = PointCloud::new(vec![a, b]);
        for subset in [[0, 1], [1, 0]] {
            let img = render_view(
                &cloud,
                &subset,
                &plane(),
                &RayParams::straight(),
                small(),
                ColorMode::Real,
                &Palette::default(),
            )
            .unwrap();
            assert_eq!(img.pixel(4, 4), [1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn single_visible_point_leaves_one_hole_in_mask() {
        let cloud = PointCloud::new(vec![Point::new([0.3, -0.2, 0.1], [1.0, 0.0, 0.0], Some(3))]);
        let img = render_view(
            &cloud,
            &[0],
            &plane(),
            &RayParams::straight(),
            small(),
            ColorMode::Semantic,
            &Palette::default(),
        )
        .unwrap();
        assert_eq!(black_mask(&img).iter().filter(|&&b| !b).count(), 1);
        assert_eq!(img.semantic_pixel_count(), 1);
        let lit = img.pixels().iter().find(|p| **p != [0.0; 3]).unwrap();
        assert_eq!(*lit, Palette::default().color(3));
    }

    #[test]
    fn semantic_mode_requires_labels() {
        let cloud = PointCloud::new(vec![
            Point::new([0.3, 0.0, 0.0], [1.0; 3], Some(1)),
            Point::new([0.3, 0.1, 0.0], [1.0; 3], None),
        ]);
        let err = render_view(
            &cloud,
            &[0, 1],
            &plane(),
            &RayParams::straight(),
            small(),
            ColorMode::Semantic,
            &Palette::default(),
        );
        assert!(matches!(err, Err(Error::MissingLabel { index: 1 })));
    }

    #[test]
    fn out_of_frame_points_are_dropped() {
        let cloud = PointCloud::new(vec![Point::new([0.5, 0.0, 0.4], [1.0; 3], Some(0))]);
        let ray = RayParams::new(2.0, 0.0, -5.0, 5.0).unwrap();
        let img = render_view(
            &cloud,
            &[0],
            &plane(),
            &ray,
            small(),
            ColorMode::Semantic,
            &Palette::default(),
        )
        .unwrap();
        assert_eq!(img.semantic_pixel_count(), 0);
    }

    #[test]
    fn palette_rejects_black() {
        assert!(Palette::new(vec![[0.2, 0.3, 0.4], [0.0, 0.0, 0.0]]).is_err());
        assert!(Palette::new(vec![]).is_err());
        let p = Palette::new(vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(p.color(3), [0.0, 1.0, 0.0]);
        assert!(DEFAULT_PALETTE.iter().all(|c| c.iter().any(|&v| v > 0)));
    }

    #[test]
    fn ppm_format() {
        let size = ImageSize::new(1, 1).unwrap();
        let black = RasterImage::blank(size, ColorMode::Real);
        let mut expected = b"P6\n1 1\n255\n".to_vec();
        expected.extend([0, 0, 0]);
        assert_eq!(encode_ppm(&black), expected);

        let red = RasterImage::from_pixels(size, ColorMode::Real, vec![[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(&encode_ppm(&red)[11..], &[0xFF, 0x00, 0x00]);

        let two = RasterImage::from_pixels(
            ImageSize::new(1, 2).unwrap(),
            ColorMode::Real,
            vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        )
        .unwrap();
        let bytes = encode_ppm(&two);
        assert!(bytes.starts_with(b"P6\n2 1\n255\n"));
        assert_eq!(&bytes[11..], &[255, 0, 0, 0, 0, 255]);
    }

    #[test]
    fn ppm_decodes_to_quantized_pixels() {
        let size = ImageSize::new(3, 2).unwrap();
        let q: Vec<[u8; 3]> = (0..6u8).map(|i| [i * 40, 255 - i, i]).collect();
        let pixels = q.iter().map(|c| c.map(|v| f64::from(v) / 255.0)).collect();
        let img = RasterImage::from_pixels(size, ColorMode::Semantic, pixels).unwrap();
        let (w, h, decoded) = decode_ppm(&encode_ppm(&img));
        assert_eq!((w, h), (2, 3));
        assert_eq!(decoded, q);
    }

    #[test]
    fn faint_pixel_is_not_black() {
        let img = RasterImage::from_pixels(
            ImageSize::new(1, 2).unwrap(),
            ColorMode::Semantic,
            vec![[1.0 / 255.0, 0.0, 0.0], [0.0; 3]],
        )
        .unwrap();
        assert_eq!(black_mask(&img), vec![false, true]);
    }
}
