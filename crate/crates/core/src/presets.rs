//! Named parameter presets.

use crate::mathcore::{HermitianMatrix, C64};

/// Nominal number of looks of the Flevoland AIRSAR scene.
pub const FLEVOLAND_NOMINAL_LOOKS: f64 = 4.0;

/// Sample covariance of the Flevoland agricultural region "B1" (HH, HV, VV).
pub fn flevoland_b1() -> HermitianMatrix {
    HermitianMatrix::from_upper(
        3,
        &[
            C64::new(9.528e-3, 0.0),
            C64::new(-3.469e-4, 1.048e-4),
            C64::new(1.439e-3, 1.164e-3),
            C64::new(1.794e-3, 0.0),
            C64::new(8.551e-5, -1.608e-5),
            C64::new(4.955e-3, 0.0),
        ],
    )
    .expect("preset is well formed")
}

/// Looks up a covariance preset by its CLI name.
pub fn by_name(name: &str) -> Option<HermitianMatrix> {
    match name {
        "flevoland-b1" | "b1" => Some(flevoland_b1()),
        _ => None,
    }
}
