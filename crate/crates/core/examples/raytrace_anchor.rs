//! Back-project a detection to the ground and recover the pedestrian's
//! height from the top of its box.
//!
//! `cargo run --example raytrace_anchor`

use nalgebra::Vector3;

use mvcardboard::cardboard::{BBox, Detection};
use mvcardboard::geometry::{CameraModel, Extrinsics, Intrinsics, WorldPoint};
use mvcardboard::raytrace::{anchor_from_detection, head_pixel, intersect_ground, pixel_ray, AnchorOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cam = CameraModel::new(
        "C0",
        Intrinsics::new(1400.0, 1400.0, 960.0, 540.0)?,
        Extrinsics::look_at(Vector3::new(-4.0, -6.0, 5.0), Vector3::new(6.0, 4.0, 0.0))?,
        1920,
        1080,
    )?;

    let feet = WorldPoint::ground(5.0, 3.0);
    let head = WorldPoint::new(5.0, 3.0, 1.75);
    let standing_px = cam.project(&feet)?;
    let top_px = cam.project(&head)?;
    println!("feet project to ({:.1}, {:.1}), head to ({:.1}, {:.1})", standing_px.u, standing_px.v, top_px.u, top_px.v);

    let hit = intersect_ground(&pixel_ray(&cam, &standing_px))?;
    println!("ground hit ({:.6}, {:.6}, {:.1})", hit.x(), hit.y(), hit.z());

    // the head pixel sits on the projected vertical through the feet at the box top
    let on_vertical = head_pixel(&cam, &hit, top_px.v)?;
    println!("head pixel on the vertical: ({:.1}, {:.1})", on_vertical.u, on_vertical.v);

    let bbox = BBox::new(top_px.u - 40.0, top_px.v, top_px.u + 40.0, standing_px.v)?;
    let det = Detection::new("C0", bbox, standing_px);
    let anchor = anchor_from_detection(&cam, &det, &AnchorOptions::default())?;
    println!(
        "anchor: standing ({:.3}, {:.3}), height {:.6} m, depths {:.2}..{:.2} m",
        anchor.standing_world.x(),
        anchor.standing_world.y(),
        anchor.height,
        anchor.head_depth,
        anchor.standing_depth
    );
    Ok(())
}
