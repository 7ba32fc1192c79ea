//! Writing and reading datasets and reconstructions with their provenance.

use ism_core::container::{self, IsmContainer};
use ism_core::optics::{psf_stack, OpticalConfig, ScanGrid};
use ism_core::reconstruct::sum_image;
use ism_core::simulate::{add_poisson, forward, make_phantom, PhantomParams};
use serde_json::{json, Map};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("ism_container_example");
    std::fs::create_dir_all(&dir)?;

    let grid = ScanGrid::square(32, 40.0)?;
    let stack = psf_stack(&OpticalConfig::default(), &grid, true)?;
    let phantom = make_phantom(
        &PhantomParams::random_points(&grid, 4, 300.0, 1, 1e4),
        &grid,
    )?;
    let mut ds = add_poisson(&forward(&phantom.image, &stack)?, 1)?;
    ds.provenance
        .insert("note".into(), json!("example dataset"));

    let path = dir.join("dataset.ism");
    container::write(&IsmContainer::from_dataset(&ds), &path)?;
    let back = container::read(&path)?;
    println!(
        "{}: {:?} {:?} {:?}",
        path.display(),
        back.header.kind,
        back.header.dtype,
        back.header.dims
    );
    assert_eq!(back.to_dataset()?.data, ds.data);

    let mut prov = Map::new();
    prov.insert("source".into(), json!(path.display().to_string()));
    let image_path = dir.join("sum.ism");
    container::write(
        &IsmContainer::from_recon(&sum_image(&ds), prov),
        &image_path,
    )?;
    let image = container::read(&image_path)?;
    println!(
        "{}: method {:?}, header {}",
        image_path.display(),
        image.header.method,
        serde_json::to_string(&image.header.provenance)?
    );
    Ok(())
}
