//! PSF stack, fingerprint and theoretical shift vectors for the default 5×5 array.

use ism_core::optics::{
    fingerprint_from_psf, psf_stack, shift_vectors_from_psf, OpticalConfig, ScanGrid,
};

fn main() -> ism_core::Result<()> {
    let cfg = OpticalConfig::default();
    let grid = ScanGrid::square(64, 20.0)?;
    let stack = psf_stack(&cfg, &grid, true)?;

    println!(
        "pitch {:.1} nm, pinhole {:.1} nm, excitation FWHM {:.1} nm",
        cfg.pitch_nm(),
        cfg.pinhole_side_nm(),
        cfg.excitation_fwhm_nm()
    );

    let fp = fingerprint_from_psf(&stack);
    println!("fingerprint (fraction of total):");
    for row in fp.values.rows() {
        let cells: Vec<String> = row
            .iter()
            .map(|v| format!("{:.4}", v / fp.total()))
            .collect();
        println!("  {}", cells.join(" "));
    }

    let shifts = shift_vectors_from_psf(&stack);
    println!("channel  x_d (nm)           mu (nm)            |mu|/|x_d|");
    for (c, (x, y)) in stack.detector.positions().into_iter().enumerate() {
        let s = shifts.vectors[c];
        let ratio = if c == stack.detector.central_index().unwrap() {
            0.0
        } else {
            s.norm() / x.hypot(y)
        };
        println!(
            "{c:>7}  ({x:>7.1}, {y:>7.1})  ({:>7.1}, {:>7.1})  {ratio:.3}",
            s.x, s.y
        );
    }
    Ok(())
}
