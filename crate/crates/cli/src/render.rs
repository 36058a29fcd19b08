//! Grayscale PGM and CSV output for reconstructions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use eit_core::geometry::{PixelPartition, Point};

use crate::error::CliError;

/// Longest line written to a plain PGM.
const PGM_LINE: usize = 70;

/// Gray level per raster cell, row 0 at the top (`y = 1`). Raster cells whose
/// center lies outside the unit disk, or in no pixel, are 0.
pub fn raster(
    coefficients: &[f64],
    partition: &PixelPartition,
    scale: f64,
    width: usize,
    height: usize,
) -> Vec<u8> {
    let m = partition.resolution;
    let mut lookup = vec![None; m * m];
    for px in &partition.pixels {
        lookup[px.grid.1 * m + px.grid.0] = Some(px.id);
    }
    let level = |a: f64| -> u8 {
        if scale > 0.0 {
            (255.0 * a / scale).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    };
    let h = partition.cell_size();
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        let y = 1.0 - (row as f64 + 0.5) * 2.0 / height as f64;
        for col in 0..width {
            let x = -1.0 + (col as f64 + 0.5) * 2.0 / width as f64;
            let p = Point::new(x, y);
            let value = if p.coords.norm() >= 1.0 {
                0
            } else {
                let ix = (((x + 1.0) / h).floor() as usize).min(m - 1);
                let iy = (((y + 1.0) / h).floor() as usize).min(m - 1);
                lookup[iy * m + ix].map_or(0, |k| level(coefficients[k]))
            };
            out.push(value);
        }
    }
    out
}

/// Plain (P2) PGM text with maxval 255, lines wrapped at 70 characters.
pub fn pgm_text(levels: &[u8], width: usize, height: usize) -> String {
    let mut s = format!("P2\n{width} {height}\n255\n");
    for row in levels.chunks(width) {
        let mut line_len = 0;
        for &v in row {
            let token = v.to_string();
            if line_len > 0 && line_len + 1 + token.len() > PGM_LINE {
                s.push('\n');
                line_len = 0;
            }
            if line_len > 0 {
                s.push(' ');
                line_len += 1;
            }
            s.push_str(&token);
            line_len += token.len();
        }
        s.push('\n');
    }
    s
}

/// `x_center,y_center,a_hat` per pixel, centers of the unclipped cells.
pub fn csv_text(coefficients: &[f64], partition: &PixelPartition) -> String {
    let mut s = String::from("x_center,y_center,a_hat\n");
    for (px, a) in partition.pixels.iter().zip(coefficients) {
        let c = px.cell.center();
        writeln!(s, "{:.6},{:.6},{:.16e}", c.x, c.y, a).expect("write to string");
    }
    s
}

/// Writes `<stem>.pgm` and `<stem>.csv` into `dir`.
#[allow(clippy::too_many_arguments)]
pub fn render_image(
    coefficients: &[f64],
    partition: &PixelPartition,
    scale: f64,
    width: usize,
    height: usize,
    dir: &Path,
    stem: &str,
) -> Result<(), CliError> {
    let levels = raster(coefficients, partition, scale, width, height);
    let pgm = dir.join(format!("{stem}.pgm"));
    fs::write(&pgm, pgm_text(&levels, width, height)).map_err(|e| CliError::io(&pgm, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, csv_text(coefficients, partition)).map_err(|e| CliError::io(&csv, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use eit_core::geometry::build_partition;

    #[test]
    fn zero_coefficients_give_black_image() {
        let part = build_partition(4).unwrap();
        let img = raster(&vec![0.0; part.len()], &part, 0.5, 16, 16);
        assert!(img.iter().all(|&v| v == 0));
    }

    #[test]
    fn single_full_pixel_paints_its_cell() {
        let part = build_partition(2).unwrap();
        // Pixel 3 is the top-right quarter.
        let mut a = vec![0.0; 4];
        a[3] = 0.5;
        let img = raster(&a, &part, 0.5, 8, 8);
        for row in 0..8 {
            for col in 0..8 {
                let x = -1.0 + (col as f64 + 0.5) / 4.0;
                let y = 1.0 - (row as f64 + 0.5) / 4.0;
                let expected = if x > 0.0 && y > 0.0 && x * x + y * y < 1.0 {
                    255
                } else {
                    0
                };
                assert_eq!(img[row * 8 + col], expected, "({row},{col})");
            }
        }
    }

    #[test]
    fn levels_round_and_clamp() {
        let part = build_partition(2).unwrap();
        let img = raster(&[0.25, -1.0, 2.0, 0.1], &part, 0.5, 2, 2);
        // Row 0 is the top half: pixels 2 (left) and 3 (right).
        assert_eq!(img, vec![255, 51, 128, 0]);
    }

    #[test]
    fn pgm_lines_stay_short() {
        let text = pgm_text(&[255; 100], 100, 1);
        assert!(text.lines().all(|l| l.len() <= PGM_LINE));
        assert!(text.starts_with("P2\n100 1\n255\n"));
        let values: Vec<&str> = text.lines().skip(3).flat_map(|l| l.split(' ')).collect();
        assert_eq!(values.len(), 100);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let part = build_partition(2).unwrap();
        let text = csv_text(&[0.0, 0.1, 0.2, 0.3], &part);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x_center,y_center,a_hat");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("-0.500000,-0.500000,"));
    }
}
