//! Output files: CSV tables, PPM cell maps and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tessellation::{AssignmentGrid, Deployment};

/// Write `bytes` to a temporary sibling and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Comma-separated table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

fn palette(i: u32) -> [u8; 3] {
    // golden-angle hue steps keep neighbouring indices apart
    let hue = (i as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let (s, v) = (0.55, 0.95);
    let c = v * s;
    let x = c * (1.0 - (hue % 2.0 - 1.0).abs());
    let (r, g, b) = match hue as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|t| ((t + m) * 255.0).round() as u8)
}

/// Binary PPM of the cell ownership raster, north up, with a black square
/// marking each UAV's ground position. Points outside the region are white.
pub fn cell_map_ppm(cells: &AssignmentGrid, deployment: &Deployment) -> Vec<u8> {
    let spec = *cells.grid().spec();
    let (nx, ny) = (spec.nx, spec.ny);
    let mut pixels = vec![255u8; nx * ny * 3];
    let put = |pixels: &mut Vec<u8>, ix: usize, iy: usize, rgb: [u8; 3]| {
        let row = ny - 1 - iy;
        let at = (row * nx + ix) * 3;
        pixels[at..at + 3].copy_from_slice(&rgb);
    };
    for (k, owner) in cells.owner_raster().into_iter().enumerate() {
        if let Some(o) = owner {
            put(&mut pixels, k % nx, k / nx, palette(o));
        }
    }
    let half = (nx.max(ny) / 128).max(1) as isize;
    for p in &deployment.ground {
        let cx = ((p.x - spec.origin.x) / spec.dx).floor() as isize;
        let cy = ((p.y - spec.origin.y) / spec.dy).floor() as isize;
        for dy in -half..=half {
            for dx in -half..=half {
                let (ix, iy) = (cx + dx, cy + dy);
                if ix >= 0 && iy >= 0 && (ix as usize) < nx && (iy as usize) < ny {
                    put(&mut pixels, ix as usize, iy as usize, [0, 0, 0]);
                }
            }
        }
    }
    let mut out = format!("P6\n{nx} {ny}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{Point, Polygon};
    use crate::power::PowerParams;
    use crate::tessellation::{assign_cells, RegionGrid};

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn csv_layout() {
        let mut t = Csv::new(&["a", "b"]);
        t.row(&["1".into(), "2".into()]);
        assert_eq!(t.into_bytes(), b"a,b\n1,2\n");
    }

    #[test]
    fn ppm_header_and_size() {
        let grid = Arc::new(RegionGrid::new(&Polygon::square(1.0).unwrap(), 16).unwrap());
        let d = Deployment::with_common_height(vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)], 0.3).unwrap();
        let cells = assign_cells(&d, &grid, &PowerParams::normalized(2.0, 1.0, 0.1).unwrap()).unwrap();
        let img = cell_map_ppm(&cells, &d);
        let header = b"P6\n16 16\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert_eq!(img.len(), header.len() + 16 * 16 * 3);
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
