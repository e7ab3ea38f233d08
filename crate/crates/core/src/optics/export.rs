//! Profile export: CSV for analysis, binary PGM for a screen-like rendering.

use std::io::{self, Write};

use super::detect::DetectorProfile;

/// Height of the rendered PGM band in rows.
pub const PGM_BAND_HEIGHT: usize = 64;

/// Write `x_mm,intensity` rows, positions in millimetres, ten significant
/// digits.
pub fn write_profile_csv<W: Write>(profile: &DetectorProfile, out: &mut W) -> io::Result<()> {
    writeln!(out, "x_mm,intensity")?;
    for (x, i) in profile.positions().iter().zip(profile.intensity()) {
        writeln!(out, "{:.9e},{:.9e}", x * 1e3, i)?;
    }
    Ok(())
}

/// Render the profile as a binary PGM band: [`PGM_BAND_HEIGHT`] identical
/// rows, intensity scaled so the peak maps to 255. Visually this extrudes the
/// 1-D profile into the line/dot bands seen on a camera screen.
pub fn write_profile_pgm<W: Write>(profile: &DetectorProfile, out: &mut W) -> io::Result<()> {
    let width = profile.len();
    let peak = profile.intensity().iter().fold(0.0_f64, |m, &v| m.max(v));
    let row: Vec<u8> = profile
        .intensity()
        .iter()
        .map(|&i| {
            if peak > 0.0 {
                (i / peak * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();

    write!(out, "P5\n{} {}\n255\n", width, PGM_BAND_HEIGHT)?;
    for _ in 0..PGM_BAND_HEIGHT {
        out.write_all(&row)?;
    }
    Ok(())
}
