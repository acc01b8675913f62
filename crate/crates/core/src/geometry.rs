//! Scenario geometry: node locations, bounded location errors, angles and
//! uncertainty half-angles.
//!
//! Locations are 2-D points in meters. Each observer (BS or UE) sees every
//! path endpoint through an independent error uniform on a disk whose radius
//! is the maximum location error for that endpoint. Angles follow the
//! `pi/2 - arctan(dx/dy)` convention with the principal arctan branch, which
//! maps every direction into `[0, pi]`, the angular support of the grid
//! codebooks.

use nalgebra::{ComplexField, Vector2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Which node observes (and therefore which error radii apply).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observer {
    Bs,
    Ue,
}

/// True node coordinates and per-observer maximum location-error radii.
///
/// Path 0 is the LOS path; paths `1..M-1` go through the reflectors in
/// listed order. `r_bs[m]` / `r_ue[m]` is the maximum position error of the
/// path-`m` endpoint as seen by the BS / UE; entry 0 refers to the opposite
/// node. The BS position is known perfectly everywhere (`r_ue[0] = 0`),
/// while the UE additionally carries a self-position radius `r_ue_self`.
#[derive(Debug, Clone)]
pub struct Scenario<T: Real> {
    pub bs_location: Vector2<T>,
    pub ue_location: Vector2<T>,
    pub reflector_locations: Vec<Vector2<T>>,
    pub r_bs: Vec<T>,
    pub r_ue: Vec<T>,
    pub r_ue_self: T,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        bs_location: Vector2<T>,
        ue_location: Vector2<T>,
        reflector_locations: Vec<Vector2<T>>,
        r_bs: Vec<T>,
        r_ue: Vec<T>,
        r_ue_self: T,
    ) -> Result<Self> {
        let m = 1 + reflector_locations.len();
        if r_bs.len() != m || r_ue.len() != m {
            return Err(Error::InvalidArgument(format!(
                "scenario has {m} paths but {} BS radii and {} UE radii",
                r_bs.len(),
                r_ue.len()
            )));
        }
        if r_bs.iter().chain(r_ue.iter()).any(|r| *r < T::zero()) || r_ue_self < T::zero() {
            return Err(Error::InvalidArgument(
                "location-error radii must be nonnegative".into(),
            ));
        }
        if r_ue[0] != T::zero() {
            return Err(Error::InvalidArgument(
                "the BS position is perfectly known: r_ue[0] must be 0".into(),
            ));
        }
        Ok(Self {
            bs_location,
            ue_location,
            reflector_locations,
            r_bs,
            r_ue,
            r_ue_self,
        })
    }

    /// Number of propagation paths `M` (LOS plus reflectors).
    pub fn n_paths(&self) -> usize {
        1 + self.reflector_locations.len()
    }

    /// True location of the path-`m` endpoint as seen by `observer`:
    /// the opposite node for `m = 0`, reflector `m` otherwise.
    pub fn endpoint(&self, observer: Observer, m: usize) -> Vector2<T> {
        if m == 0 {
            match observer {
                Observer::Bs => self.ue_location,
                Observer::Ue => self.bs_location,
            }
        } else {
            self.reflector_locations[m - 1]
        }
    }

    /// Error radii applying to `observer`.
    pub fn radii(&self, observer: Observer) -> &[T] {
        match observer {
            Observer::Bs => &self.r_bs,
            Observer::Ue => &self.r_ue,
        }
    }
}

/// Noisy location information held by one observer.
///
/// `points[m]` estimates the path-`m` endpoint; `self_estimate` is the
/// observer's own position (exact for the BS, perturbed within `r_ue_self`
/// for the UE).
#[derive(Debug, Clone)]
pub struct LocationEstimate<T: Real> {
    pub observer: Observer,
    pub points: Vec<Vector2<T>>,
    pub self_estimate: Vector2<T>,
}

/// Offset uniform on the disk of radius `radius`, via the area-uniform
/// construction `rho = r*sqrt(u)`, angle uniform on `[0, 2pi)`.
///
/// Draws two `f64` values from `rng` in a fixed order (radius fraction,
/// then angle), so the stream layout is scalar-type independent.
fn uniform_disk_offset<T: Real, R: Rng + ?Sized>(radius: T, rng: &mut R) -> Vector2<T> {
    let u: f64 = rng.random();
    let psi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let rho = radius * lit::<T>(u.sqrt());
    Vector2::new(rho * lit::<T>(psi.cos()), rho * lit::<T>(psi.sin()))
}

/// Sample the location information one observer would hold for `scenario`.
///
/// Each endpoint estimate is the true point plus a fresh uniform-disk offset
/// of the matching radius; the UE also perturbs its own position. Points are
/// drawn in path order, self-position last.
pub fn sample_location_estimate<T: Real, R: Rng + ?Sized>(
    scenario: &Scenario<T>,
    observer: Observer,
    rng: &mut R,
) -> LocationEstimate<T> {
    let radii = scenario.radii(observer);
    let points = (0..scenario.n_paths())
        .map(|m| scenario.endpoint(observer, m) + uniform_disk_offset(radii[m], rng))
        .collect();
    let self_estimate = match observer {
        Observer::Bs => scenario.bs_location,
        Observer::Ue => scenario.ue_location + uniform_disk_offset(scenario.r_ue_self, rng),
    };
    LocationEstimate {
        observer,
        points,
        self_estimate,
    }
}

/// Angle of the direction `from -> to` in `[0, pi]`.
///
/// Computed as `pi/2 - arctan(dx/dy)` on the principal branch. The `dy = 0`
/// limit resolves by the sign of `dx`: 0 when `dx > 0`, pi when `dx < 0`.
/// Coincident points have no direction and are rejected.
pub fn angle_from_to<T: Real>(from: Vector2<T>, to: Vector2<T>) -> Result<T> {
    let d = to - from;
    if d.x == T::zero() && d.y == T::zero() {
        return Err(Error::DegenerateGeometry(
            "angle undefined for coincident points".into(),
        ));
    }
    if d.y == T::zero() {
        return Ok(if d.x > T::zero() { T::zero() } else { T::pi() });
    }
    Ok(T::frac_pi_2() - (d.x / d.y).atan())
}

/// Euclidean distance between two points.
pub fn distance<T: Real>(from: Vector2<T>, to: Vector2<T>) -> T {
    (to - from).norm()
}

/// Half-angle of the uncertainty region subtended at an observer by a disk
/// of radius `radius` around a point at estimated distance `distance` and
/// estimated angle `angle_hat`.
///
/// Uses the boundary-point construction
/// `arctan((d*sin(a) + r) / (d*cos(a))) - a` where it is geometrically
/// valid (`d*cos(a) > 0` and a nonnegative result); otherwise falls back to
/// the exact disk subtense `arcsin(min(1, r/d))`. The result is clamped to
/// `[0, pi]`.
pub fn half_angle<T: Real>(distance: T, angle_hat: T, radius: T) -> Result<T> {
    if distance <= T::zero() {
        return Err(Error::DegenerateGeometry(
            "half-angle undefined at zero distance".into(),
        ));
    }
    if radius < T::zero() {
        return Err(Error::InvalidArgument(
            "location-error radius must be nonnegative".into(),
        ));
    }
    let x = distance * angle_hat.cos();
    if x > T::zero() {
        let eps = ((distance * angle_hat.sin() + radius) / x).atan() - angle_hat;
        if eps >= T::zero() {
            return Ok(eps.min(T::pi()));
        }
    }
    let ratio = (radius / distance).min(T::one());
    Ok(ratio.asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn v(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    fn section_v_scenario() -> Scenario<f64> {
        Scenario::new(
            v(0.0, 0.0),
            v(100.0, 0.0),
            vec![v(50.0, 50.0), v(50.0, -50.0)],
            vec![13.0, 11.0, 15.0],
            vec![0.0, 18.0, 17.0],
            7.0,
        )
        .unwrap()
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::new(
            v(0.0, 0.0),
            v(1.0, 0.0),
            vec![],
            vec![1.0, 2.0],
            vec![0.0],
            0.0
        )
        .is_err());
        assert!(Scenario::new(
            v(0.0, 0.0),
            v(1.0, 0.0),
            vec![],
            vec![-1.0],
            vec![0.0],
            0.0
        )
        .is_err());
        // r_ue[0] must be zero: the BS position is perfectly known.
        assert!(Scenario::new(
            v(0.0, 0.0),
            v(1.0, 0.0),
            vec![],
            vec![1.0],
            vec![0.5],
            0.0
        )
        .is_err());
        assert_eq!(section_v_scenario().n_paths(), 3);
    }

    #[test]
    fn angle_to_upper_reflector_is_quarter_pi() {
        let a = angle_from_to(v(0.0, 0.0), v(50.0, 50.0)).unwrap();
        assert_abs_diff_eq!(a, PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_to_lower_reflector_is_three_quarter_pi() {
        // arctan(50 / -50) = -pi/4, so pi/2 + pi/4.
        let a = angle_from_to(v(0.0, 0.0), v(50.0, -50.0)).unwrap();
        assert_abs_diff_eq!(a, 3.0 * PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn angle_on_axis_limits() {
        assert_eq!(angle_from_to(v(0.0, 0.0), v(100.0, 0.0)).unwrap(), 0.0);
        assert_eq!(angle_from_to(v(100.0, 0.0), v(0.0, 0.0)).unwrap(), PI);
        // Negative-zero dy must behave like dy = 0.
        assert_eq!(angle_from_to(v(0.0, 0.0), v(100.0, -0.0)).unwrap(), 0.0);
    }

    #[test]
    fn angle_rejects_coincident_points() {
        assert!(angle_from_to(v(1.0, 2.0), v(1.0, 2.0)).is_err());
    }

    proptest! {
        #[test]
        fn angle_always_in_zero_pi(x in -500.0..500.0f64, y in -500.0..500.0f64) {
            prop_assume!(x != 0.0 || y != 0.0);
            let a = angle_from_to(v(0.0, 0.0), v(x, y)).unwrap();
            prop_assert!((0.0..=PI).contains(&a));
        }
    }

    #[test]
    fn distance_examples() {
        assert_abs_diff_eq!(
            distance(v(0.0, 0.0), v(50.0, 50.0)),
            5000.0f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(distance(v(0.0, 0.0), v(50.0, 50.0)), 70.7107, epsilon = 1e-4);
        assert_eq!(distance(v(0.0, 0.0), v(0.0, 0.0)), 0.0);
        assert_eq!(distance(v(0.0, 0.0), v(100.0, 0.0)), 100.0);
    }

    #[test]
    fn half_angle_reflector_one_from_bs() {
        // d*sin(pi/4) = 50, so arctan(61/50) - pi/4 with the exact distance.
        let d = 5000.0f64.sqrt();
        let eps = half_angle(d, PI / 4.0, 11.0).unwrap();
        let expected = (61.0f64 / 50.0).atan() - PI / 4.0;
        assert_abs_diff_eq!(eps, expected, epsilon = 1e-10);
        assert_abs_diff_eq!(eps, 0.0990, epsilon = 1e-3);
    }

    #[test]
    fn half_angle_ue_from_bs() {
        let eps = half_angle(100.0, 0.0, 13.0).unwrap();
        assert_abs_diff_eq!(eps, 0.13f64.atan(), epsilon = 1e-12);
        assert_abs_diff_eq!(eps, 0.12925, epsilon = 1e-4);
    }

    #[test]
    fn half_angle_zero_radius_collapses() {
        for a in [0.0, 0.3, PI / 2.0, 2.0, PI] {
            assert_abs_diff_eq!(half_angle(70.0, a, 0.0).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn half_angle_falls_back_past_broadside() {
        // cos(3pi/4) < 0: the boundary formula is invalid, expect the disk
        // subtense arcsin(r/d).
        let eps = half_angle(70.0, 3.0 * PI / 4.0, 15.0).unwrap();
        assert_abs_diff_eq!(eps, (15.0f64 / 70.0).asin(), epsilon = 1e-12);
        // Radius beyond the distance saturates at pi/2.
        let eps = half_angle(10.0, 3.0 * PI / 4.0, 25.0).unwrap();
        assert_abs_diff_eq!(eps, PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn half_angle_rejects_degenerate_inputs() {
        assert!(half_angle(0.0, 0.3, 1.0).is_err());
        assert!(half_angle(-1.0, 0.3, 1.0).is_err());
        assert!(half_angle(10.0, 0.3, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn half_angle_monotone_in_radius(
            d in 1.0..300.0f64,
            a in 0.0..PI,
            r1 in 0.0..80.0f64,
            r2 in 0.0..80.0f64,
        ) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let e_lo = half_angle(d, a, lo).unwrap();
            let e_hi = half_angle(d, a, hi).unwrap();
            prop_assert!(e_hi >= e_lo - 1e-12);
        }

        /// True angle containment: for any endpoint estimated within radius
        /// `r` of the truth, the true angle lies inside the interval of
        /// half-angle `half_angle(d_true, angle_hat, 2r)`.
        #[test]
        fn half_angle_covers_true_angle(
            ex in -200.0..200.0f64,
            ey in -200.0..200.0f64,
            r_frac in 0.0..0.33f64,
            off_frac in 0.0..1.0f64,
            off_dir in 0.0..std::f64::consts::TAU,
        ) {
            let observer = v(0.0, 0.0);
            let endpoint = v(ex, ey);
            let d_true = distance(observer, endpoint);
            prop_assume!(d_true > 5.0);
            let r = r_frac * d_true;
            let offset = v(
                r * off_frac * off_dir.cos(),
                r * off_frac * off_dir.sin(),
            );
            let est = endpoint + offset;
            prop_assume!(distance(observer, est) > 1e-6);
            let a_true = angle_from_to(observer, endpoint).unwrap();
            let a_hat = angle_from_to(observer, est).unwrap();
            let eps = half_angle(d_true, a_hat, 2.0 * r).unwrap();
            prop_assert!(
                (a_true - a_hat).abs() <= eps + 1e-9,
                "true {a_true} hat {a_hat} eps {eps}"
            );
        }
    }

    #[test]
    fn estimate_exact_when_radii_zero() {
        let scenario = Scenario::new(
            v(0.0, 0.0),
            v(100.0, 0.0),
            vec![v(50.0, 50.0)],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            0.0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for observer in [Observer::Bs, Observer::Ue] {
            let est = sample_location_estimate(&scenario, observer, &mut rng);
            for m in 0..scenario.n_paths() {
                assert_eq!(est.points[m], scenario.endpoint(observer, m));
            }
        }
        let est = sample_location_estimate(&scenario, Observer::Ue, &mut rng);
        assert_eq!(est.self_estimate, scenario.ue_location);
    }

    #[test]
    fn estimate_respects_radii_and_disk_mean() {
        // Uniform-disk offsets: the norm never exceeds r and its mean is
        // 2r/3 (integrate rho * 2rho/r^2 over [0, r]).
        let scenario = section_v_scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 10_000;
        let mut mean = vec![0.0f64; scenario.n_paths()];
        for _ in 0..n {
            let est = sample_location_estimate(&scenario, Observer::Bs, &mut rng);
            for m in 0..scenario.n_paths() {
                let off = distance(est.points[m], scenario.endpoint(Observer::Bs, m));
                assert!(off <= scenario.r_bs[m] + 1e-12);
                mean[m] += off;
            }
            assert_eq!(est.self_estimate, scenario.bs_location);
        }
        for m in 0..scenario.n_paths() {
            mean[m] /= n as f64;
            let expected = 2.0 * scenario.r_bs[m] / 3.0;
            assert!(
                (mean[m] - expected).abs() / expected < 0.02,
                "path {m}: mean offset {} vs expected {expected}",
                mean[m]
            );
        }
    }

    #[test]
    fn estimate_deterministic_under_fixed_seed() {
        let scenario = section_v_scenario();
        let a = sample_location_estimate(&scenario, Observer::Ue, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_location_estimate(&scenario, Observer::Ue, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.points, b.points);
        assert_eq!(a.self_estimate, b.self_estimate);
    }

    #[test]
    fn ue_self_estimate_within_radius() {
        let scenario = section_v_scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let est = sample_location_estimate(&scenario, Observer::Ue, &mut rng);
            assert!(distance(est.self_estimate, scenario.ue_location) <= scenario.r_ue_self + 1e-12);
            // The BS is seen exactly from the UE (radius 0).
            assert_eq!(est.points[0], scenario.bs_location);
        }
    }
}
