//! Heatmap files: a 16-byte little-endian header (`BEVH`, rows, cols,
//! cell size) followed by row-major `f32` values, plus an 8-bit PGM view.

use std::io::{self, Read, Write};

use super::{GridSpec, Heatmap};

pub const HEATMAP_MAGIC: &[u8; 4] = b"BEVH";

pub fn write_heatmap<W: Write>(mut out: W, hm: &Heatmap) -> io::Result<()> {
    out.write_all(HEATMAP_MAGIC)?;
    out.write_all(&(hm.spec.n_rows as u32).to_le_bytes())?;
    out.write_all(&(hm.spec.n_cols as u32).to_le_bytes())?;
    out.write_all(&(hm.spec.cell_size_x as f32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(hm.values.len() * 4);
    for &v in &hm.values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out.write_all(&buf)
}

/// Reads a heatmap file. The header only carries one cell size, so the
/// returned grid has square cells and its origin at zero.
pub fn read_heatmap<R: Read>(mut input: R) -> io::Result<Heatmap> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if &header[..4] != HEATMAP_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "missing BEVH magic"));
    }
    let word = |i: usize| [header[i], header[i + 1], header[i + 2], header[i + 3]];
    let rows = u32::from_le_bytes(word(4)) as usize;
    let cols = u32::from_le_bytes(word(8)) as usize;
    let cell = f32::from_le_bytes(word(12)) as f64;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != rows * cols * 4 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("expected {} value bytes, found {}", rows * cols * 4, body.len()),
        ));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Heatmap {
        spec: GridSpec {
            origin_x: 0.0,
            origin_y: 0.0,
            cell_size_x: cell,
            cell_size_y: cell,
            n_rows: rows,
            n_cols: cols,
        },
        values,
    })
}

/// Binary PGM (`P5`), values scaled by 255.
pub fn write_pgm<W: Write>(mut out: W, hm: &Heatmap) -> io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", hm.spec.n_cols, hm.spec.n_rows)?;
    let bytes: Vec<u8> = hm
        .values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let spec = GridSpec::new(0.0, 0.0, 0.025, 0.025, 2, 3).unwrap();
        let mut hm = Heatmap::zeros(spec);
        hm.set(1, 2, 0.75);
        let mut buf = Vec::new();
        write_heatmap(&mut buf, &hm).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 4);
        assert_eq!(&buf[..4], b"BEVH");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &3u32.to_le_bytes());
        assert_eq!(&buf[12..16], &0.025f32.to_le_bytes());
        assert_eq!(&buf[36..40], &0.75f32.to_le_bytes());
        let back = read_heatmap(&buf[..]).unwrap();
        assert_eq!(back.values, hm.values);
        assert_eq!((back.spec.n_rows, back.spec.n_cols), (2, 3));
        assert!(read_heatmap(&buf[..20]).is_err());
        assert!(read_heatmap(&b"XXXX000000000000"[..]).is_err());
    }

    #[test]
    fn pgm_layout() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 1.0, 1, 2).unwrap();
        let mut hm = Heatmap::zeros(spec);
        hm.set(0, 1, 1.0);
        let mut buf = Vec::new();
        write_pgm(&mut buf, &hm).unwrap();
        assert_eq!(buf, b"P5\n2 1\n255\n\x00\xff");
    }
}
