//! Multipath channel synthesis and rate evaluation.
//!
//! The downlink channel is the sum of `M` rank-one terms,
//! `H = sqrt(Nt*Nr) * sum_m alpha_m * a_r(theta_m) * a_t(phi_m)^H`,
//! with per-path AOA/AOD taken from the scenario geometry and complex gains
//! drawn circularly-symmetric Gaussian. Rates are `log2(1 + SNR*|u^H H v|^2)`
//! for a beam pair `(u, v)`; only the ratio `Es/sigma^2` ever enters.

use nalgebra::{Complex, ComplexField, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array_codebook::{steering_vector, Codebook, SteeringVector};
use crate::error::{Error, Result};
use crate::geometry::{angle_from_to, Observer, Scenario};
use crate::scalar::{idx, lit, Real};

/// Per-path channel parameters: AODs at the BS, AOAs at the UE, complex
/// gains, and the array sizes.
#[derive(Debug, Clone)]
pub struct ChannelParams<T: Real> {
    pub aod: Vec<T>,
    pub aoa: Vec<T>,
    pub gains: Vec<Complex<T>>,
    pub n_tx: usize,
    pub n_rx: usize,
}

impl<T: Real> ChannelParams<T> {
    pub fn new(
        aod: Vec<T>,
        aoa: Vec<T>,
        gains: Vec<Complex<T>>,
        n_tx: usize,
        n_rx: usize,
    ) -> Result<Self> {
        if aod.len() != aoa.len() || aod.len() != gains.len() || aod.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "path vectors must share a nonzero length: {} AODs, {} AOAs, {} gains",
                aod.len(),
                aoa.len(),
                gains.len()
            )));
        }
        if n_tx == 0 || n_rx == 0 {
            return Err(Error::InvalidArgument(
                "antenna counts must be positive".into(),
            ));
        }
        Ok(Self {
            aod,
            aoa,
            gains,
            n_tx,
            n_rx,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.aod.len()
    }
}

/// A realized channel: the parameters plus the dense `Nr x Nt` matrix.
#[derive(Debug, Clone)]
pub struct ChannelInstance<T: Real> {
    pub params: ChannelParams<T>,
    pub matrix: DMatrix<Complex<T>>,
}

/// Draw the true channel parameters for `scenario`.
///
/// AOD/AOA of path `m` point at the path endpoint (the opposite node for
/// `m = 0`, reflector `m` otherwise) from the true node positions. Gain `m`
/// is `CN(0, gain_variances[m])`, drawn as two normals (re then im) per path.
pub fn true_params_from_scenario<T: Real, R: Rng + ?Sized>(
    scenario: &Scenario<T>,
    gain_variances: &[T],
    n_tx: usize,
    n_rx: usize,
    rng: &mut R,
) -> Result<ChannelParams<T>> {
    let m_paths = scenario.n_paths();
    if gain_variances.len() != m_paths {
        return Err(Error::InvalidArgument(format!(
            "{} gain variances for {m_paths} paths",
            gain_variances.len()
        )));
    }
    if gain_variances.iter().any(|v| *v < T::zero()) {
        return Err(Error::InvalidArgument(
            "gain variances must be nonnegative".into(),
        ));
    }
    let mut aod = Vec::with_capacity(m_paths);
    let mut aoa = Vec::with_capacity(m_paths);
    let mut gains = Vec::with_capacity(m_paths);
    for m in 0..m_paths {
        aod.push(angle_from_to(
            scenario.bs_location,
            scenario.endpoint(Observer::Bs, m),
        )?);
        aoa.push(angle_from_to(
            scenario.ue_location,
            scenario.endpoint(Observer::Ue, m),
        )?);
        let half = (gain_variances[m] / lit::<T>(2.0)).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        gains.push(Complex::new(half * lit::<T>(re), half * lit::<T>(im)));
    }
    ChannelParams::new(aod, aoa, gains, n_tx, n_rx)
}

/// Assemble the dense channel matrix from per-path parameters.
pub fn build_channel<T: Real>(params: ChannelParams<T>) -> Result<ChannelInstance<T>> {
    let scale = (idx::<T>(params.n_tx) * idx::<T>(params.n_rx)).sqrt();
    let mut matrix = DMatrix::zeros(params.n_rx, params.n_tx);
    for m in 0..params.n_paths() {
        let ar = steering_vector(params.aoa[m], params.n_rx)?;
        let at = steering_vector(params.aod[m], params.n_tx)?;
        let coeff = params.gains[m] * Complex::new(scale, T::zero());
        matrix += (ar.elements() * at.elements().adjoint()) * coeff;
    }
    Ok(ChannelInstance { params, matrix })
}

fn check_pair_dims<T: Real>(
    u: &SteeringVector<T>,
    v: &SteeringVector<T>,
    h: &ChannelInstance<T>,
) -> Result<()> {
    if u.len() != h.matrix.nrows() || v.len() != h.matrix.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "beam pair ({}, {}) against {}x{} channel",
            u.len(),
            v.len(),
            h.matrix.nrows(),
            h.matrix.ncols()
        )));
    }
    Ok(())
}

/// Downlink rate `log2(1 + SNR * |u^H H v|^2)` in bits/s/Hz.
pub fn downlink_rate<T: Real>(
    u: &SteeringVector<T>,
    v: &SteeringVector<T>,
    h: &ChannelInstance<T>,
    es_over_sigma2: T,
) -> Result<T> {
    check_pair_dims(u, v, h)?;
    if es_over_sigma2 < T::zero() {
        return Err(Error::InvalidArgument("SNR must be nonnegative".into()));
    }
    let g = (u.elements().adjoint() * &h.matrix * v.elements())[(0, 0)];
    Ok((T::one() + es_over_sigma2 * g.norm_sqr()).log2())
}

/// Uplink rate `log2(1 + SNR * |v^T H^T u*|^2)`; numerically identical to
/// [`downlink_rate`] for the same beam pair.
pub fn uplink_rate<T: Real>(
    v: &SteeringVector<T>,
    u: &SteeringVector<T>,
    h: &ChannelInstance<T>,
    es_over_sigma2: T,
) -> Result<T> {
    check_pair_dims(u, v, h)?;
    if es_over_sigma2 < T::zero() {
        return Err(Error::InvalidArgument("SNR must be nonnegative".into()));
    }
    let g = (v.elements().transpose() * h.matrix.transpose() * u.elements().conjugate())[(0, 0)];
    Ok((T::one() + es_over_sigma2 * g.norm_sqr()).log2())
}

/// Precomputed `|u_j^H H v_k|^2` for every codebook beam pair.
///
/// One dense product `U^H H V` replaces per-pair evaluation; the alignment
/// schemes and the Monte-Carlo harness read all their rates from it.
#[derive(Debug, Clone)]
pub struct BeamGainTable<T: Real> {
    gain_abs2: DMatrix<T>,
}

impl<T: Real> BeamGainTable<T> {
    pub fn new(
        h: &ChannelInstance<T>,
        bs_codebook: &Codebook<T>,
        ue_codebook: &Codebook<T>,
    ) -> Result<Self> {
        if ue_codebook.n_antennas() != h.matrix.nrows()
            || bs_codebook.n_antennas() != h.matrix.ncols()
        {
            return Err(Error::DimensionMismatch(format!(
                "codebooks ({}, {}) against {}x{} channel",
                ue_codebook.n_antennas(),
                bs_codebook.n_antennas(),
                h.matrix.nrows(),
                h.matrix.ncols()
            )));
        }
        let g = ue_codebook.beam_matrix().adjoint() * &h.matrix * bs_codebook.beam_matrix();
        Ok(Self {
            gain_abs2: g.map(|c| c.norm_sqr()),
        })
    }

    /// Number of UE beams (rows).
    pub fn n_ue_beams(&self) -> usize {
        self.gain_abs2.nrows()
    }

    /// Number of BS beams (columns).
    pub fn n_bs_beams(&self) -> usize {
        self.gain_abs2.ncols()
    }

    /// `|u_j^H H v_k|^2` for UE beam `j` and BS beam `k`.
    pub fn gain_abs2(&self, ue_beam: usize, bs_beam: usize) -> T {
        self.gain_abs2[(ue_beam, bs_beam)]
    }

    /// Downlink rate of the pair at the given SNR.
    pub fn rate(&self, ue_beam: usize, bs_beam: usize, es_over_sigma2: T) -> T {
        (T::one() + es_over_sigma2 * self.gain_abs2(ue_beam, bs_beam)).log2()
    }

    /// Beam pair with the largest gain, scanning BS beams in the outer loop;
    /// ties keep the lowest BS index, then the lowest UE index.
    pub fn argmax_pair(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut best_gain = self.gain_abs2[(0, 0)];
        for k in 0..self.n_bs_beams() {
            for j in 0..self.n_ue_beams() {
                let g = self.gain_abs2[(j, k)];
                if g > best_gain {
                    best = (j, k);
                    best_gain = g;
                }
            }
        }
        best
    }
}
