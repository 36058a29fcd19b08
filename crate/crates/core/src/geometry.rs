//! Unit-disk domain, inclusion phantoms and the pixel partition.
//!
//! Pixels are the cells of an `M x M` Cartesian grid over `[-1, 1]^2`,
//! clipped to the unit disk. Each pixel carries a quadrature rule built
//! from a uniform sub-grid whose cut sub-cells are weighted by their exact
//! clipped area, so that the weights of a pixel sum to its exact area.

use nalgebra::Point2;

use crate::error::{Error, Result};

pub type Point = Point2<f64>;

/// Sub-grid resolution (per axis) of the clipping quadrature.
pub const DEFAULT_SUBGRID: usize = 16;
/// Cells whose clipped area falls below this fraction of the full cell are dropped.
pub const DEFAULT_AREA_FLOOR: f64 = 1e-3;
/// Samples per axis used by [`classify_pixel`] by default.
pub const DEFAULT_CLASS_SAMPLES: usize = 8;

/// Tolerance for "inside the closed unit disk" checks on user points.
const DISK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        center: Point,
        radius: f64,
    },
    Rectangle {
        lower_left: Point,
        upper_right: Point,
    },
    Ellipse {
        center: Point,
        semi_x: f64,
        semi_y: f64,
    },
}

impl Shape {
    /// Closed-set membership.
    pub fn contains(&self, p: &Point) -> bool {
        match *self {
            Shape::Disk { center, radius } => (p - center).norm_squared() <= radius * radius,
            Shape::Rectangle {
                lower_left,
                upper_right,
            } => {
                p.x >= lower_left.x
                    && p.x <= upper_right.x
                    && p.y >= lower_left.y
                    && p.y <= upper_right.y
            }
            Shape::Ellipse {
                center,
                semi_x,
                semi_y,
            } => {
                let dx = (p.x - center.x) / semi_x;
                let dy = (p.y - center.y) / semi_y;
                dx * dx + dy * dy <= 1.0
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Disk { center, radius } => {
                finite_point(&center) && radius.is_finite() && radius > 0.0
            }
            Shape::Rectangle {
                lower_left,
                upper_right,
            } => {
                finite_point(&lower_left)
                    && finite_point(&upper_right)
                    && lower_left.x < upper_right.x
                    && lower_left.y < upper_right.y
            }
            Shape::Ellipse {
                center,
                semi_x,
                semi_y,
            } => {
                finite_point(&center)
                    && semi_x.is_finite()
                    && semi_y.is_finite()
                    && semi_x > 0.0
                    && semi_y > 0.0
            }
        };
        if !ok {
            return Err(Error::Domain(format!("degenerate shape {self:?}")));
        }
        if self.max_norm() >= 1.0 {
            return Err(Error::Domain(format!(
                "shape {self:?} is not strictly inside the unit disk"
            )));
        }
        Ok(())
    }

    /// Largest distance from the origin over the closed shape.
    pub fn max_norm(&self) -> f64 {
        match *self {
            Shape::Disk { center, radius } => center.coords.norm() + radius,
            Shape::Rectangle {
                lower_left,
                upper_right,
            } => {
                let xs = [lower_left.x, upper_right.x];
                let ys = [lower_left.y, upper_right.y];
                xs.iter()
                    .flat_map(|&x| ys.iter().map(move |&y| x.hypot(y)))
                    .fold(0.0, f64::max)
            }
            Shape::Ellipse { .. } => {
                // Dense scan of the boundary, then golden-section refinement
                // around the best sample.
                let n = 2048;
                let h = std::f64::consts::TAU / n as f64;
                let f = |t: f64| self.boundary_point(t).coords.norm();
                let best = (0..n)
                    .map(|i| i as f64 * h)
                    .max_by(|a, b| f(*a).total_cmp(&f(*b)))
                    .unwrap_or(0.0);
                let (mut lo, mut hi) = (best - h, best + h);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let m1 = hi - g * (hi - lo);
                    let m2 = lo + g * (hi - lo);
                    if f(m1) < f(m2) {
                        lo = m1;
                    } else {
                        hi = m2;
                    }
                }
                f(0.5 * (lo + hi)).max(f(best))
            }
        }
    }

    /// Point on the boundary at parameter `t` in `[0, 2pi)`.
    pub fn boundary_point(&self, t: f64) -> Point {
        match *self {
            Shape::Disk { center, radius } => {
                Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
            }
            Shape::Ellipse {
                center,
                semi_x,
                semi_y,
            } => Point::new(center.x + semi_x * t.cos(), center.y + semi_y * t.sin()),
            Shape::Rectangle {
                lower_left,
                upper_right,
            } => {
                // Perimeter walk, counterclockwise from the lower-left corner.
                let w = upper_right.x - lower_left.x;
                let h = upper_right.y - lower_left.y;
                let s = (t / std::f64::consts::TAU).rem_euclid(1.0) * 2.0 * (w + h);
                if s < w {
                    Point::new(lower_left.x + s, lower_left.y)
                } else if s < w + h {
                    Point::new(upper_right.x, lower_left.y + (s - w))
                } else if s < 2.0 * w + h {
                    Point::new(upper_right.x - (s - w - h), upper_right.y)
                } else {
                    Point::new(lower_left.x, upper_right.y - (s - 2.0 * w - h))
                }
            }
        }
    }

    fn interior_point(&self) -> Point {
        match *self {
            Shape::Disk { center, .. } | Shape::Ellipse { center, .. } => center,
            Shape::Rectangle {
                lower_left,
                upper_right,
            } => nalgebra::center(&lower_left, &upper_right),
        }
    }

    /// Closed convex shapes overlap iff a boundary sample of one lies in the
    /// other or one contains an interior point of the other. Boundaries are
    /// sampled at 4096 points.
    fn overlaps(&self, other: &Shape) -> bool {
        if self.contains(&other.interior_point()) || other.contains(&self.interior_point()) {
            return true;
        }
        let n = 4096;
        (0..n).any(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            other.contains(&self.boundary_point(t)) || self.contains(&other.boundary_point(t))
        })
    }
}

fn finite_point(p: &Point) -> bool {
    p.x.is_finite() && p.y.is_finite()
}

/// One inclusion: the conductivity is `1 + contrast` on the shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inclusion {
    pub shape: Shape,
    pub contrast: f64,
}

/// A conductivity `1 + sum_i gamma_i * chi_{D_i}` on the unit disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Phantom {
    inclusions: Vec<Inclusion>,
}

impl Phantom {
    /// Validates that every shape lies strictly inside the disk, the shapes
    /// are pairwise disjoint and every contrast is positive.
    pub fn new(inclusions: Vec<Inclusion>) -> Result<Self> {
        for (i, inc) in inclusions.iter().enumerate() {
            inc.shape.validate()?;
            if !(inc.contrast.is_finite() && inc.contrast > 0.0) {
                return Err(Error::Domain(format!(
                    "inclusion {i}: contrast must be positive, got {}",
                    inc.contrast
                )));
            }
        }
        for i in 0..inclusions.len() {
            for j in i + 1..inclusions.len() {
                if inclusions[i].shape.overlaps(&inclusions[j].shape) {
                    return Err(Error::Domain(format!("inclusions {i} and {j} overlap")));
                }
            }
        }
        Ok(Self { inclusions })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn inclusions(&self) -> &[Inclusion] {
        &self.inclusions
    }

    pub fn is_empty(&self) -> bool {
        self.inclusions.is_empty()
    }

    /// Smallest contrast over all inclusions, `None` for the empty phantom.
    pub fn min_contrast(&self) -> Option<f64> {
        self.inclusions
            .iter()
            .map(|i| i.contrast)
            .min_by(f64::total_cmp)
    }

    /// Index of the inclusion containing `p`, if any.
    pub fn inclusion_at(&self, p: &Point) -> Option<usize> {
        self.inclusions.iter().position(|i| i.shape.contains(p))
    }

    /// Conductivity at `p`, which must lie in the closed unit disk.
    pub fn sigma_at(&self, p: &Point) -> Result<f64> {
        sigma_at(self, p)
    }
}

pub fn sigma_at(phantom: &Phantom, p: &Point) -> Result<f64> {
    if !finite_point(p) || p.coords.norm() > 1.0 + DISK_SLACK {
        return Err(Error::Domain(format!(
            "point ({}, {}) lies outside the closed unit disk",
            p.x, p.y
        )));
    }
    Ok(match phantom.inclusion_at(p) {
        Some(i) => 1.0 + phantom.inclusions[i].contrast,
        None => 1.0,
    })
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Cell {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Exact area of the cell intersected with the unit disk.
    pub fn clipped_area(&self) -> f64 {
        clipped_area(self)
    }
}

/// Antiderivative of `sqrt(1 - x^2)` on `[-1, 1]`.
fn half_chord_integral(x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    0.5 * (x * (1.0 - x * x).sqrt() + x.asin())
}

/// Exact area of `cell ∩ {|p| <= 1}`.
///
/// The integrand `max(0, min(y1, s(x)) - max(y0, -s(x)))` with
/// `s(x) = sqrt(1 - x^2)` is piecewise of the form `const` or `±s(x)`
/// between the abscissae where `s(x) = |y0|` or `s(x) = |y1|`; each piece is
/// integrated in closed form.
pub fn clipped_area(cell: &Cell) -> f64 {
    let a = cell.x0.max(-1.0);
    let b = cell.x1.min(1.0);
    if a >= b {
        return 0.0;
    }
    let mut breaks = vec![a, b];
    for y in [cell.y0, cell.y1] {
        if y.abs() < 1.0 {
            let x = (1.0 - y * y).sqrt();
            for c in [-x, x] {
                if c > a && c < b {
                    breaks.push(c);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);

    let mut area = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let s = (1.0 - mid * mid).max(0.0).sqrt();
        let top_is_circle = cell.y1 >= 1.0 || s < cell.y1;
        let bottom_is_circle = cell.y0 <= -1.0 || -s > cell.y0;
        let top = if top_is_circle { s } else { cell.y1 };
        let bottom = if bottom_is_circle { -s } else { cell.y0 };
        if top <= bottom {
            continue;
        }
        let arc = half_chord_integral(hi) - half_chord_integral(lo);
        let width = hi - lo;
        let upper = if top_is_circle { arc } else { cell.y1 * width };
        let lower = if bottom_is_circle {
            -arc
        } else {
            cell.y0 * width
        };
        area += upper - lower;
    }
    area
}

/// Largest sub-grid refinement factor for sliver pixels.
const MAX_REFINE: usize = 16;

/// Weighted quadrature node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadNode {
    pub point: Point,
    pub weight: f64,
}

/// One cell of the partition clipped to the unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Pixel {
    pub id: usize,
    /// Grid column (x index) and row (y index, from the bottom).
    pub grid: (usize, usize),
    pub cell: Cell,
    /// Exact clipped area.
    pub area: f64,
    /// Quadrature rule over the clipped cell; weights sum to `area`.
    pub quadrature: Vec<QuadNode>,
}

impl Pixel {
    /// Builds a pixel from a cell, with a `subgrid x subgrid` clipped rule.
    /// Cut cells whose rule keeps fewer than a quarter of the `subgrid^2`
    /// nodes are re-sampled on doubled sub-grids (at most 16 times finer),
    /// so slivers still carry enough distinct nodes.
    pub fn from_cell(id: usize, grid: (usize, usize), cell: Cell, subgrid: usize) -> Self {
        let target = (subgrid * subgrid).div_ceil(4);
        let mut n = subgrid;
        let mut quadrature = clipped_quadrature(&cell, n);
        while quadrature.len() < target && n < MAX_REFINE * subgrid {
            n *= 2;
            quadrature = clipped_quadrature(&cell, n);
        }
        Self {
            id,
            grid,
            cell,
            area: clipped_area(&cell),
            quadrature,
        }
    }

    /// Whether the whole cell lies inside the closed unit disk.
    pub fn is_unclipped(&self) -> bool {
        let c = &self.cell;
        [(c.x0, c.y0), (c.x0, c.y1), (c.x1, c.y0), (c.x1, c.y1)]
            .iter()
            .all(|(x, y)| x.hypot(*y) <= 1.0)
    }
}

/// Midpoint rule on a uniform `n x n` sub-grid. Sub-cells fully inside the
/// disk get their full area; cut sub-cells get their exact clipped area,
/// placed at the sub-cell center.
pub fn clipped_quadrature(cell: &Cell, n: usize) -> Vec<QuadNode> {
    let hx = (cell.x1 - cell.x0) / n as f64;
    let hy = (cell.y1 - cell.y0) / n as f64;
    let mut nodes = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let sub = Cell {
                x0: cell.x0 + ix as f64 * hx,
                x1: cell.x0 + (ix + 1) as f64 * hx,
                y0: cell.y0 + iy as f64 * hy,
                y1: cell.y0 + (iy + 1) as f64 * hy,
            };
            let far = sub
                .x0
                .abs()
                .max(sub.x1.abs())
                .hypot(sub.y0.abs().max(sub.y1.abs()));
            let weight = if far <= 1.0 {
                sub.area()
            } else {
                clipped_area(&sub)
            };
            if weight > 0.0 {
                nodes.push(QuadNode {
                    point: sub.center(),
                    weight,
                });
            }
        }
    }
    nodes
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOptions {
    pub subgrid: usize,
    pub area_floor: f64,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            subgrid: DEFAULT_SUBGRID,
            area_floor: DEFAULT_AREA_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelPartition {
    pub resolution: usize,
    pub pixels: Vec<Pixel>,
}

impl PixelPartition {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.pixels.iter().map(|p| p.area).sum()
    }

    /// Width of one grid cell.
    pub fn cell_size(&self) -> f64 {
        2.0 / self.resolution as f64
    }

    /// Pixel containing `p`, if any.
    pub fn locate(&self, p: &Point) -> Option<&Pixel> {
        if p.coords.norm() >= 1.0 {
            return None;
        }
        let h = self.cell_size();
        let ix = (((p.x + 1.0) / h).floor() as isize).clamp(0, self.resolution as isize - 1);
        let iy = (((p.y + 1.0) / h).floor() as isize).clamp(0, self.resolution as isize - 1);
        let grid = (ix as usize, iy as usize);
        self.pixels.iter().find(|px| px.grid == grid)
    }
}

pub fn build_partition(resolution: usize) -> Result<PixelPartition> {
    build_partition_with(resolution, &PartitionOptions::default())
}

/// Cells of the `M x M` grid over `[-1, 1]^2` whose clipped area exceeds
/// `area_floor * cell area`, in row-major order from the bottom-left.
pub fn build_partition_with(resolution: usize, opts: &PartitionOptions) -> Result<PixelPartition> {
    if resolution < 2 {
        return Err(Error::Config(format!(
            "partition resolution must be >= 2, got {resolution}"
        )));
    }
    if opts.subgrid == 0 {
        return Err(Error::Config("partition subgrid must be >= 1".into()));
    }
    if !(opts.area_floor >= 0.0 && opts.area_floor < 1.0) {
        return Err(Error::Config(format!(
            "partition area floor must lie in [0, 1), got {}",
            opts.area_floor
        )));
    }
    let h = 2.0 / resolution as f64;
    let mut pixels = Vec::new();
    for iy in 0..resolution {
        for ix in 0..resolution {
            let cell = Cell {
                x0: -1.0 + ix as f64 * h,
                x1: -1.0 + (ix + 1) as f64 * h,
                y0: -1.0 + iy as f64 * h,
                y1: -1.0 + (iy + 1) as f64 * h,
            };
            let area = clipped_area(&cell);
            if area > 0.0 && area >= opts.area_floor * cell.area() {
                let id = pixels.len();
                pixels.push(Pixel::from_cell(id, (ix, iy), cell, opts.subgrid));
            }
        }
    }
    Ok(PixelPartition { resolution, pixels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelClass {
    Inside,
    Outside,
    Boundary,
}

impl PixelClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PixelClass::Inside => "inside",
            PixelClass::Outside => "outside",
            PixelClass::Boundary => "boundary",
        }
    }
}

impl std::fmt::Display for PixelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies a pixel by a `samples x samples` cell-centered sub-grid,
/// restricted to points inside the unit disk.
pub fn classify_pixel(pixel: &Pixel, phantom: &Phantom, samples: usize) -> Result<PixelClass> {
    if samples < 4 {
        return Err(Error::Config(format!(
            "classification needs >= 4 samples per axis, got {samples}"
        )));
    }
    let c = &pixel.cell;
    let (mut hit, mut total) = (0usize, 0usize);
    for iy in 0..samples {
        for ix in 0..samples {
            let p = Point::new(
                c.x0 + (ix as f64 + 0.5) / samples as f64 * (c.x1 - c.x0),
                c.y0 + (iy as f64 + 0.5) / samples as f64 * (c.y1 - c.y0),
            );
            if p.coords.norm() >= 1.0 {
                continue;
            }
            total += 1;
            if phantom.inclusion_at(&p).is_some() {
                hit += 1;
            }
        }
    }
    Ok(if hit == 0 {
        PixelClass::Outside
    } else if hit == total {
        PixelClass::Inside
    } else {
        PixelClass::Boundary
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn figure1() -> Phantom {
        Phantom::new(vec![
            Inclusion {
                shape: Shape::Disk {
                    center: Point::new(-0.4, -0.5),
                    radius: 0.1,
                },
                contrast: 3.0,
            },
            Inclusion {
                shape: Shape::Rectangle {
                    lower_left: Point::new(0.3, -0.65),
                    upper_right: Point::new(0.45, -0.4),
                },
                contrast: 1.0,
            },
            Inclusion {
                shape: Shape::Ellipse {
                    center: Point::new(0.1, 0.4),
                    semi_x: 0.3,
                    semi_y: 0.1,
                },
                contrast: 2.0,
            },
        ])
        .unwrap()
    }

    #[test]
    fn sigma_of_empty_phantom_is_one() {
        assert_eq!(sigma_at(&Phantom::empty(), &Point::origin()).unwrap(), 1.0);
    }

    #[test]
    fn sigma_on_figure1_shapes() {
        let ph = figure1();
        assert_eq!(ph.sigma_at(&Point::new(-0.4, -0.5)).unwrap(), 4.0);
        assert_eq!(ph.sigma_at(&Point::new(0.375, -0.5)).unwrap(), 2.0);
        assert_eq!(ph.sigma_at(&Point::new(0.1, 0.4)).unwrap(), 3.0);
        assert_eq!(ph.sigma_at(&Point::new(0.9, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn sigma_rejects_points_outside_disk() {
        assert!(matches!(
            sigma_at(&Phantom::empty(), &Point::new(1.0, 0.1)),
            Err(Error::Domain(_))
        ));
        assert!(sigma_at(&Phantom::empty(), &Point::new(1.0, 0.0)).is_ok());
    }

    #[test]
    fn phantom_validation() {
        let disk = |x: f64, r: f64| Inclusion {
            shape: Shape::Disk {
                center: Point::new(x, 0.0),
                radius: r,
            },
            contrast: 1.0,
        };
        assert!(
            Phantom::new(vec![disk(0.5, 0.5)]).is_err(),
            "touches boundary"
        );
        assert!(Phantom::new(vec![disk(0.0, 0.3), disk(0.5, 0.25)]).is_err());
        assert!(Phantom::new(vec![disk(-0.3, 0.2), disk(0.3, 0.2)]).is_ok());
        let mut neg = disk(0.0, 0.2);
        neg.contrast = -0.5;
        assert!(Phantom::new(vec![neg]).is_err());
        let wide = Inclusion {
            shape: Shape::Ellipse {
                center: Point::new(0.3, 0.0),
                semi_x: 0.71,
                semi_y: 0.1,
            },
            contrast: 1.0,
        };
        assert!(Phantom::new(vec![wide]).is_err());
    }

    #[test]
    fn clipped_area_matches_known_regions() {
        let full = Cell {
            x0: -1.0,
            x1: 1.0,
            y0: -1.0,
            y1: 1.0,
        };
        assert_relative_eq!(clipped_area(&full), PI, epsilon = 1e-14);
        let quadrant = Cell {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        };
        assert_relative_eq!(clipped_area(&quadrant), PI / 4.0, epsilon = 1e-14);
        let inner = Cell {
            x0: -0.1,
            x1: 0.2,
            y0: 0.3,
            y1: 0.5,
        };
        assert_relative_eq!(clipped_area(&inner), 0.06, epsilon = 1e-15);
        let outside = Cell {
            x0: 0.9,
            x1: 1.0,
            y0: 0.9,
            y1: 1.0,
        };
        assert_eq!(clipped_area(&outside), 0.0);
        // Strip 0.5 <= y <= 1: circular segment of half-angle pi/3.
        let strip = Cell {
            x0: -1.0,
            x1: 1.0,
            y0: 0.5,
            y1: 1.0,
        };
        let segment = PI / 3.0 - (PI / 3.0).sin() * 0.5;
        assert_relative_eq!(clipped_area(&strip), segment, epsilon = 1e-14);
    }

    #[test]
    fn clipped_area_agrees_with_fine_counting() {
        // Oracle: center-in-disk counting on a 2000x2000 grid.
        let cell = Cell {
            x0: 0.55,
            x1: 0.8,
            y0: 0.45,
            y1: 0.7,
        };
        let n = 2000;
        let h = 0.25 / n as f64;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let x = cell.x0 + (i as f64 + 0.5) * h;
                let y = cell.y0 + (j as f64 + 0.5) * h;
                if x * x + y * y < 1.0 {
                    count += 1;
                }
            }
        }
        let approx = count as f64 * h * h;
        assert!((clipped_area(&cell) - approx).abs() < 2e-6);
    }

    #[test]
    fn two_by_two_partition_is_four_quarters() {
        let part = build_partition(2).unwrap();
        assert_eq!(part.len(), 4);
        for px in &part.pixels {
            assert_relative_eq!(px.area, PI / 4.0, epsilon = 1e-14);
            let qsum: f64 = px.quadrature.iter().map(|q| q.weight).sum();
            assert_relative_eq!(qsum, PI / 4.0, epsilon = 1e-12);
        }
        assert_relative_eq!(part.total_area(), PI, epsilon = 1e-12);
    }

    #[test]
    fn partition_rejects_small_resolution() {
        assert!(matches!(build_partition(1), Err(Error::Config(_))));
    }

    #[test]
    fn partition_16_matches_enumeration() {
        // Oracle: a cell meets the open disk iff its closest point to the
        // origin has norm < 1; slivers below the floor are counted by a fine
        // midpoint area estimate.
        let m = 16;
        let h = 2.0 / m as f64;
        let mut expected = 0;
        for iy in 0..m {
            for ix in 0..m {
                let (x0, y0) = (-1.0 + ix as f64 * h, -1.0 + iy as f64 * h);
                let cx = 0f64.clamp(x0, x0 + h);
                let cy = 0f64.clamp(y0, y0 + h);
                if cx.hypot(cy) >= 1.0 {
                    continue;
                }
                let k = 400;
                let s = h / k as f64;
                let mut inside = 0usize;
                for a in 0..k {
                    for b in 0..k {
                        let x = x0 + (a as f64 + 0.5) * s;
                        let y = y0 + (b as f64 + 0.5) * s;
                        if x * x + y * y < 1.0 {
                            inside += 1;
                        }
                    }
                }
                if inside as f64 / (k * k) as f64 >= DEFAULT_AREA_FLOOR {
                    expected += 1;
                }
            }
        }
        let part = build_partition(m).unwrap();
        assert_eq!(part.len(), expected);
        let interior = part.pixels.iter().filter(|p| p.is_unclipped()).count();
        assert!(interior < part.len());
    }

    #[test]
    fn partition_area_sums_to_pi() {
        for m in [8, 16, 32] {
            let part = build_partition(m).unwrap();
            // Slivers dropped by the floor are bounded by floor * cell area each.
            let dropped_bound = 4.0 * m as f64 * DEFAULT_AREA_FLOOR * (2.0 / m as f64).powi(2);
            let err = (part.total_area() - PI).abs();
            assert!(err <= 1e-6 || err <= dropped_bound, "M={m}: err {err}");
            let quad: f64 = part
                .pixels
                .iter()
                .flat_map(|p| p.quadrature.iter().map(|q| q.weight))
                .sum();
            assert_relative_eq!(quad, part.total_area(), epsilon = 1e-12);
        }
    }

    #[test]
    fn partition_pixels_are_disjoint_and_positive() {
        let part = build_partition(12).unwrap();
        for (i, a) in part.pixels.iter().enumerate() {
            assert!(a.area > 0.0);
            assert_eq!(a.id, i);
            for b in &part.pixels[i + 1..] {
                let ox = (a.cell.x1.min(b.cell.x1) - a.cell.x0.max(b.cell.x0)).max(0.0);
                let oy = (a.cell.y1.min(b.cell.y1) - a.cell.y0.max(b.cell.y0)).max(0.0);
                assert_eq!(ox * oy, 0.0);
            }
        }
    }

    #[test]
    fn classification_examples() {
        let ph = figure1();
        let far = Pixel::from_cell(
            0,
            (0, 0),
            Cell {
                x0: -0.1,
                x1: 0.0,
                y0: -0.1,
                y1: 0.0,
            },
            4,
        );
        assert_eq!(classify_pixel(&far, &ph, 8).unwrap(), PixelClass::Outside);

        let in_ball = Pixel::from_cell(
            1,
            (0, 0),
            Cell {
                x0: -0.43,
                x1: -0.37,
                y0: -0.53,
                y1: -0.47,
            },
            4,
        );
        assert_eq!(
            classify_pixel(&in_ball, &ph, 8).unwrap(),
            PixelClass::Inside
        );
        assert!(classify_pixel(&in_ball, &ph, 3).is_err());
    }

    #[test]
    fn straddling_ellipse_is_boundary() {
        let ph = figure1();
        let ellipse = ph.inclusions()[2].shape;
        let cell = Cell {
            x0: 0.3,
            x1: 0.45,
            y0: 0.35,
            y1: 0.5,
        };
        // (0.31, 0.4) is inside E near its right tip; the corner (0.45, 0.5) is not.
        let inner = Point::new(0.31, 0.4);
        assert!(cell.contains(&inner) && ellipse.contains(&inner));
        let corner = Point::new(0.45, 0.5);
        assert!(cell.contains(&corner) && !ellipse.contains(&corner));
        let px = Pixel::from_cell(0, (0, 0), cell, 4);
        assert_eq!(classify_pixel(&px, &ph, 8).unwrap(), PixelClass::Boundary);
    }

    #[test]
    fn locate_finds_owning_pixel() {
        let part = build_partition(16).unwrap();
        let p = Point::new(0.3, -0.2);
        let px = part.locate(&p).unwrap();
        assert!(px.cell.contains(&p));
        assert!(part.locate(&Point::new(0.99, 0.99)).is_none());
    }

    #[test]
    fn slivers_keep_a_quarter_of_the_nodes() {
        for m in [8, 16, 32] {
            let part = build_partition(m).unwrap();
            for px in &part.pixels {
                assert!(px.quadrature.len() >= 64, "M={m} pixel {}", px.id);
                let w: f64 = px.quadrature.iter().map(|q| q.weight).sum();
                assert!((w - px.area).abs() <= 1e-14, "M={m} pixel {}", px.id);
            }
        }
    }
}
