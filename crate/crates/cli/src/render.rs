//! False-color and gray renders for phase and gradient maps.

use fringe_core::{Grid, PhaseMap};

/// Fully saturated hue wheel: 0 deg red, 120 green, 240 blue. Invalid pixels
/// are black.
pub fn phase_to_rgb(phase: &PhaseMap) -> Vec<u8> {
    let mut rgb = Vec::with_capacity(phase.degrees.data().len() * 3);
    for (&deg, &valid) in phase.degrees.data().iter().zip(&phase.valid) {
        if !valid {
            rgb.extend_from_slice(&[0, 0, 0]);
            continue;
        }
        let h = deg.rem_euclid(360.0) / 60.0;
        let x = 1.0 - (h % 2.0 - 1.0).abs();
        let (r, g, b) = match h as u32 {
            0 => (1.0, x, 0.0),
            1 => (x, 1.0, 0.0),
            2 => (0.0, 1.0, x),
            3 => (0.0, x, 1.0),
            4 => (x, 0.0, 1.0),
            _ => (1.0, 0.0, x),
        };
        rgb.extend([r, g, b].map(|c: f64| (c * 255.0).round() as u8));
    }
    rgb
}

pub fn gray_to_rgb(grid: &Grid) -> Vec<u8> {
    grid.data()
        .iter()
        .flat_map(|&v| {
            let b = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            [b, b, b]
        })
        .collect()
}
