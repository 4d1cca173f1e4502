//! Ground-truth encoding, focal loss and heatmap export on the BEV grid.
//!
//! `cargo run --example bev_heatmap -- [out_dir]`

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use mvcardboard::bev::{
    encode_gaussian_gt, extract_peaks, focal_loss, focal_positive_term, read_heatmap, write_heatmap, write_pgm,
    FocalParams, GridSpec, Heatmap,
};
use mvcardboard::geometry::WorldPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "bev_out".into()));
    std::fs::create_dir_all(&dir)?;

    let grid = GridSpec::wildtrack();
    let people = [WorldPoint::ground(4.0, 3.0), WorldPoint::ground(4.6, 3.2), WorldPoint::ground(20.0, 9.0)];
    let gt = encode_gaussian_gt(&people, &grid, 3.0);
    println!("grid {}x{} cells, gt max {:.3}", grid.n_cols, grid.n_rows, gt.max());

    let params = FocalParams::default();
    println!("positive term at p=0.5: {:.7}", focal_positive_term(0.5, &params));
    let blank = Heatmap::zeros(grid);
    println!("loss of an empty prediction: {:.3e}", focal_loss(&blank, &gt, &params)?);
    println!("loss of the target itself:   {:.3e}", focal_loss(&gt, &gt, &params)?);

    for p in extract_peaks(&gt, 0.5, 0.5) {
        println!("peak at ({:.3}, {:.3})", p.x(), p.y());
    }

    let bin = dir.join("gt.bin");
    write_heatmap(BufWriter::new(File::create(&bin)?), &gt)?;
    write_pgm(BufWriter::new(File::create(dir.join("gt.pgm"))?), &gt)?;
    let back = read_heatmap(File::open(&bin)?)?;
    // values are stored as f32
    let err = back.values.iter().zip(&gt.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("read back {}x{} cells, max error {err:.1e}", back.spec.n_cols, back.spec.n_rows);
    Ok(())
}
