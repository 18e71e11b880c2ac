//! Conventional half-duplex beam alignment by exhaustive codebook search.

use crate::array::{beam_gain, Codebook, SteeringDirection};
use crate::channels::LosChannel;
use crate::error::{Result, SteerError};
use crate::linkmetrics::snr_with_beam;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentResult {
    pub beam_index: usize,
    pub direction: SteeringDirection,
    pub snr_nom: f64,
}

/// Gains within this relative margin of the running best count as a tie.
const TIE_TOLERANCE: f64 = 1e-12;

/// Pick the codebook beam with the largest `|h* f|²`; ties (to within
/// 1e-12 relative) go to the lowest index.
pub fn align(codebook: &Codebook, channel: &LosChannel, snrbar_db: f64) -> Result<AlignmentResult> {
    if codebook.is_empty() {
        return Err(SteerError::config("cannot align with an empty codebook"));
    }
    let h = channel.vector();
    let mut best = 0;
    let mut best_gain = f64::NEG_INFINITY;
    for (k, beam) in codebook.beams().iter().enumerate() {
        let g = beam_gain(h, beam);
        if k == 0 || g > best_gain + TIE_TOLERANCE * best_gain.abs() {
            best = k;
            best_gain = g;
        }
    }
    Ok(AlignmentResult {
        beam_index: best,
        direction: codebook.directions()[best],
        snr_nom: snr_with_beam(snrbar_db, channel, &codebook.beams()[best])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{build_codebook, CodebookSpec, UpaGeometry};
    use crate::channels::los_channel;
    use crate::linkmetrics::db_to_linear;

    fn setup() -> (UpaGeometry, Codebook) {
        let g = UpaGeometry::half_wavelength(16, 16).unwrap();
        let cb = build_codebook(&g, CodebookSpec::PRESET_28GHZ).unwrap();
        (g, cb)
    }

    #[test]
    fn user_on_grid_selects_that_beam() {
        let (g, cb) = setup();
        let d = SteeringDirection::new(24.0, -8.0).unwrap();
        let r = align(&cb, &los_channel(&g, d), 12.0).unwrap();
        assert_eq!(r.direction, d);
        assert_eq!(cb.directions()[r.beam_index], d);
        assert!((r.snr_nom - db_to_linear(12.0)).abs() < 1e-9);
    }

    #[test]
    fn off_grid_user_matches_brute_force_scan() {
        let (g, cb) = setup();
        let h = los_channel(&g, SteeringDirection::new(4.0, 0.0).unwrap());
        let r = align(&cb, &h, 10.0).unwrap();
        // Independent scan: recompute every gain as a plain sum and take
        // the first maximum.
        let gains: Vec<f64> = cb
            .beams()
            .iter()
            .map(|b| {
                let s: num_complex::Complex64 = h
                    .vector()
                    .iter()
                    .zip(b.as_slice())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                s.norm_sqr()
            })
            .collect();
        let max = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let want = gains.iter().position(|&x| x == max).unwrap();
        assert_eq!(r.beam_index, want);
        assert!(r.snr_nom <= db_to_linear(10.0));
    }

    #[test]
    fn exact_tie_goes_to_lower_index() {
        // A 1×2 array at broadside sees azimuths ±8° with identical gain.
        let g = UpaGeometry::half_wavelength(1, 2).unwrap();
        let cb = build_codebook(
            &g,
            CodebookSpec {
                azimuth_range_deg: (-8.0, 8.0),
                elevation_range_deg: (0.0, 0.0),
                spacing_deg: 16.0,
            },
        )
        .unwrap();
        let h = los_channel(&g, SteeringDirection::broadside());
        let gains: Vec<f64> = cb.beams().iter().map(|b| beam_gain(h.vector(), b)).collect();
        assert!((gains[0] - gains[1]).abs() < 1e-12);
        assert_eq!(align(&cb, &h, 0.0).unwrap().beam_index, 0);
    }
}
