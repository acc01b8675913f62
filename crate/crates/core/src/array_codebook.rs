//! ULA steering vectors, grid codebooks and nearest-beam quantization.
//!
//! A half-wavelength uniform linear array responds to a plane wave from
//! angle `x` with the phase ramp `exp(-j*pi*k*cos(x))` across elements
//! `k = 0..N-1`. Codebooks place the `N` pointing angles uniformly in
//! cosine space, `arccos(1 - 2(j-1)/(N-1))`, so the grid covers `[0, pi]`
//! with both endpoints included exactly.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{idx, lit, Real};

/// Unit-norm array response vector of an `N`-element ULA.
///
/// Element `k` is `(1/sqrt(N)) * exp(-j*pi*k*cos(angle))`, so the vector has
/// Euclidean norm 1 and every element has modulus `1/sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector<T: Real> {
    elements: DVector<Complex<T>>,
}

impl<T: Real> SteeringVector<T> {
    /// The complex response, one entry per antenna element.
    pub fn elements(&self) -> &DVector<Complex<T>> {
        &self.elements
    }

    /// Number of antenna elements.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Array response vector for an `n_antennas`-element ULA pointed at `angle`.
///
/// Any finite angle is accepted; only its cosine enters the phase ramp.
pub fn steering_vector<T: Real>(angle: T, n_antennas: usize) -> Result<SteeringVector<T>> {
    if n_antennas == 0 {
        return Err(Error::InvalidArgument(
            "steering vector needs at least one antenna".into(),
        ));
    }
    let scale = T::one() / idx::<T>(n_antennas).sqrt();
    let cos_angle = angle.cos();
    let elements = DVector::from_fn(n_antennas, |k, _| {
        let phase = -T::pi() * idx::<T>(k) * cos_angle;
        Complex::new(phase.cos() * scale, phase.sin() * scale)
    });
    Ok(SteeringVector { elements })
}

/// Grid codebook over `[0, pi]`: pointing angles plus their steering vectors.
#[derive(Debug, Clone)]
pub struct Codebook<T: Real> {
    pointing_angles: Vec<T>,
    beams: Vec<SteeringVector<T>>,
    n_antennas: usize,
}

impl<T: Real> Codebook<T> {
    /// Pointing angles in radians, strictly increasing from 0 to pi.
    pub fn pointing_angles(&self) -> &[T] {
        &self.pointing_angles
    }

    /// Steering vector of beam `index`.
    pub fn beam(&self, index: usize) -> &SteeringVector<T> {
        &self.beams[index]
    }

    pub fn beams(&self) -> &[SteeringVector<T>] {
        &self.beams
    }

    /// Number of beams (equals the number of antennas for this grid).
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    /// All beams stacked as columns of an `N x len` complex matrix.
    pub fn beam_matrix(&self) -> DMatrix<Complex<T>> {
        DMatrix::from_fn(self.n_antennas, self.beams.len(), |r, c| {
            self.beams[c].elements[r]
        })
    }
}

/// Build the `n_antennas`-beam grid codebook.
///
/// Beam `j` (1-based) points at `arccos(1 - 2(j-1)/(N-1))`; the first and
/// last angles are exactly 0 and pi.
pub fn make_codebook<T: Real>(n_antennas: usize) -> Result<Codebook<T>> {
    if n_antennas < 2 {
        return Err(Error::InvalidArgument(format!(
            "codebook needs at least 2 antennas, got {n_antennas}"
        )));
    }
    let denom = idx::<T>(n_antennas - 1);
    let mut pointing_angles = Vec::with_capacity(n_antennas);
    let mut beams = Vec::with_capacity(n_antennas);
    for j in 0..n_antennas {
        let cos_val = T::one() - lit::<T>(2.0) * idx::<T>(j) / denom;
        let angle = cos_val.acos();
        beams.push(steering_vector(angle, n_antennas)?);
        pointing_angles.push(angle);
    }
    Ok(Codebook {
        pointing_angles,
        beams,
        n_antennas,
    })
}

/// Index of the codebook beam closest to `steering_vector(angle)` in squared
/// Frobenius distance. Ties break toward the lowest index.
///
/// For a ULA the distance is a function of `|cos(grid) - cos(angle)|`, but
/// the scan is kept on the vectors themselves.
pub fn nearest_beam<T: Real>(codebook: &Codebook<T>, angle: T) -> usize {
    let target = steering_vector(angle, codebook.n_antennas)
        .expect("codebook guarantees n_antennas >= 2");
    let mut best = 0;
    let mut best_dist = (&codebook.beams[0].elements - &target.elements).norm_squared();
    for (j, beam) in codebook.beams.iter().enumerate().skip(1) {
        let dist = (&beam.elements - &target.elements).norm_squared();
        if dist < best_dist {
            best = j;
            best_dist = dist;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const TOL: f64 = 1e-12;

    fn cb(n: usize) -> Codebook<f64> {
        make_codebook(n).unwrap()
    }

    /// Independent scan used as the oracle for `nearest_beam`.
    fn nearest_by_scan(codebook: &Codebook<f64>, angle: f64) -> usize {
        let target = steering_vector(angle, codebook.n_antennas()).unwrap();
        let dists: Vec<f64> = codebook
            .beams()
            .iter()
            .map(|b| (b.elements() - target.elements()).norm_squared())
            .collect();
        let mut best = 0;
        for (j, d) in dists.iter().enumerate() {
            if *d < dists[best] {
                best = j;
            }
        }
        best
    }

    #[test]
    fn steering_vector_broadside_two_elements() {
        // cos(pi/2) = 0: both elements are 1/sqrt(2).
        let sv = steering_vector(PI / 2.0, 2).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(sv.elements()[0].re, s, epsilon = TOL);
        assert_abs_diff_eq!(sv.elements()[0].im, 0.0, epsilon = TOL);
        assert_abs_diff_eq!(sv.elements()[1].re, s, epsilon = TOL);
        assert_abs_diff_eq!(sv.elements()[1].im, 0.0, epsilon = TOL);
    }

    #[test]
    fn steering_vector_endfire_two_elements() {
        // cos(0) = 1: exp(-j*pi) = -1, so [1, -1]/sqrt(2).
        let sv = steering_vector(0.0, 2).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(sv.elements()[0].re, s, epsilon = TOL);
        assert_abs_diff_eq!(sv.elements()[1].re, -s, epsilon = TOL);
        assert_abs_diff_eq!(sv.elements()[1].im, 0.0, epsilon = TOL);
    }

    #[test]
    fn steering_vector_sixty_degrees_four_elements() {
        // cos(pi/3) = 1/2: phases e^{-j*pi*k/2} cycle 1, -j, -1, j.
        let sv = steering_vector(PI / 3.0, 4).unwrap();
        let expected = [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)];
        for (k, (re, im)) in expected.iter().enumerate() {
            assert_abs_diff_eq!(sv.elements()[k].re, re * 0.5, epsilon = TOL);
            assert_abs_diff_eq!(sv.elements()[k].im, im * 0.5, epsilon = TOL);
        }
    }

    #[test]
    fn steering_vector_rejects_zero_antennas() {
        assert!(steering_vector(1.0, 0).is_err());
    }

    #[test]
    fn steering_vector_unit_norm_and_element_modulus() {
        for n in [1usize, 2, 3, 16, 64] {
            for angle in [0.0, 0.3, PI / 2.0, 2.7, PI] {
                let sv = steering_vector(angle, n).unwrap();
                assert_abs_diff_eq!(sv.elements().norm(), 1.0, epsilon = TOL);
                let m = 1.0 / (n as f64).sqrt();
                for e in sv.elements().iter() {
                    assert_abs_diff_eq!(e.norm(), m, epsilon = TOL);
                }
            }
        }
    }

    #[test]
    fn codebook_three_antennas_angles() {
        let cb = cb(3);
        assert_eq!(cb.pointing_angles()[0], 0.0);
        assert_abs_diff_eq!(cb.pointing_angles()[1], PI / 2.0, epsilon = TOL);
        assert_eq!(cb.pointing_angles()[2], PI);
    }

    #[test]
    fn codebook_sixteen_antennas_endpoints_exact() {
        let cb = cb(16);
        assert_eq!(cb.pointing_angles()[0], 0.0);
        assert_eq!(cb.pointing_angles()[15], PI);
    }

    #[test]
    fn codebook_sixteen_antennas_second_angle() {
        // j = 2 (1-based): arccos(1 - 2/15) = arccos(13/15).
        let cb = cb(16);
        assert_abs_diff_eq!(
            cb.pointing_angles()[1],
            (13.0f64 / 15.0).acos(),
            epsilon = TOL
        );
        assert_abs_diff_eq!(cb.pointing_angles()[1], 0.5222, epsilon = 1e-4);
    }

    #[test]
    fn codebook_rejects_single_antenna() {
        assert!(make_codebook::<f64>(1).is_err());
        assert!(make_codebook::<f64>(0).is_err());
    }

    #[test]
    fn codebook_angles_strictly_increasing_and_symmetric() {
        for n in [2usize, 3, 16, 33, 64] {
            let cb = cb(n);
            let a = cb.pointing_angles();
            for j in 1..n {
                assert!(a[j] > a[j - 1], "angles not increasing at {j} for N={n}");
            }
            // cos arguments are negatives of each other across the midpoint.
            for j in 0..n {
                assert_abs_diff_eq!(a[j] + a[n - 1 - j], PI, epsilon = TOL);
            }
        }
    }

    #[test]
    fn codebook_beams_match_their_angles() {
        let cb = cb(16);
        for (j, angle) in cb.pointing_angles().iter().enumerate() {
            let direct = steering_vector(*angle, 16).unwrap();
            assert!((cb.beam(j).elements() - direct.elements()).norm() < TOL);
            assert_abs_diff_eq!(cb.beam(j).elements().norm(), 1.0, epsilon = TOL);
        }
    }

    #[test]
    fn nearest_beam_grid_angle_is_itself() {
        let cb = cb(16);
        let angle = cb.pointing_angles()[5];
        assert_eq!(nearest_beam(&cb, angle), 5);
    }

    #[test]
    fn nearest_beam_three_antennas_quarter_pi() {
        // |cos(pi/4) - 1| < |cos(pi/4) - 0|, and the three-element distance
        // kernel is monotone over this range: the angle-0 beam wins.
        let cb = cb(3);
        assert_eq!(nearest_beam(&cb, PI / 4.0), nearest_by_scan(&cb, PI / 4.0));
        assert_eq!(nearest_beam(&cb, PI / 4.0), 0);
    }

    #[test]
    fn nearest_beam_matches_scan_oracle_on_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cb = cb(16);
        for _ in 0..100 {
            let angle: f64 = rng.random::<f64>() * PI;
            assert_eq!(nearest_beam(&cb, angle), nearest_by_scan(&cb, angle));
        }
    }

    #[test]
    fn nearest_beam_tie_breaks_to_lowest_index() {
        // For N = 2 the two grid beams coincide (phases +/-pi); every query
        // ties and must resolve to index 0.
        let cb = cb(2);
        let d = (cb.beam(0).elements() - cb.beam(1).elements()).norm();
        assert!(d < TOL, "N=2 grid beams expected to coincide");
        assert_eq!(nearest_beam(&cb, 1.234), 0);
    }
}
