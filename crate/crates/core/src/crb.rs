//! Cramér-Rao machinery for channel-parameter estimation: likelihood,
//! Fisher information, CRB covariance, Jacobian propagation to a
//! channel-entry error covariance, and the estimation-error-aware rate.
//!
//! The parameter vector is `theta = [phi_0.., theta_0.., alpha_0..]` with
//! angles in radians and gains as real amplitudes. Gains here are
//! *effective* amplitudes: the `sqrt(Nt*Nr)` channel prefactor is folded in
//! at the module boundary (see [`ParamVector::from_channel_params`]), so the
//! vectorized channel is `h = sum_m alpha_m (a_t*(phi_m) kron a_r(theta_m))`
//! and the measurement mean is `m = A h` with `A = V^T kron U^H`.
//!
//! The Fisher information is assembled from the mean derivatives,
//! `J[i,j] = (2 Es/sigma^2) Re{ dm_i^H dm_j }`, which reproduces the
//! same-path closed forms (trace/Kronecker expressions) and extends them to
//! cross-path entries with the identical derivative structure.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array_codebook::{steering_vector, Codebook};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::scalar::{idx, lit, Real};

/// Condition-number ceiling beyond which the FIM is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Real parameter vector `[phi_0.., theta_0.., alpha_0..]` with the array
/// sizes needed to rebuild steering vectors.
#[derive(Debug, Clone)]
pub struct ParamVector<T: Real> {
    pub aod: Vec<T>,
    pub aoa: Vec<T>,
    /// Effective real amplitudes (channel prefactor folded in).
    pub gains: Vec<T>,
    pub n_tx: usize,
    pub n_rx: usize,
}

impl<T: Real> ParamVector<T> {
    pub fn new(aod: Vec<T>, aoa: Vec<T>, gains: Vec<T>, n_tx: usize, n_rx: usize) -> Result<Self> {
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

    /// Boundary conversion from a channel draw: angles carry over, each
    /// complex gain becomes the real amplitude `sqrt(Nt*Nr) * |alpha_m|`
    /// (the estimation model differentiates a real gain; the phase is
    /// dropped here).
    pub fn from_channel_params(params: &ChannelParams<T>) -> Self {
        let scale = (idx::<T>(params.n_tx) * idx::<T>(params.n_rx)).sqrt();
        Self {
            aod: params.aod.clone(),
            aoa: params.aoa.clone(),
            gains: params.gains.iter().map(|g| scale * g.norm()).collect(),
            n_tx: params.n_tx,
            n_rx: params.n_rx,
        }
    }

    pub fn n_paths(&self) -> usize {
        self.aod.len()
    }

    /// Length of the flat parameter vector, `3M`.
    pub fn dim(&self) -> usize {
        3 * self.n_paths()
    }

    /// Parameters flattened in `[phi.., theta.., alpha..]` order.
    pub fn flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&self.aod);
        out.extend_from_slice(&self.aoa);
        out.extend_from_slice(&self.gains);
        out
    }

    /// Rebuild from a flat `[phi.., theta.., alpha..]` vector.
    pub fn from_flat(flat: &[T], n_tx: usize, n_rx: usize) -> Result<Self> {
        if flat.len() % 3 != 0 || flat.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "flat parameter vector length {} is not a positive multiple of 3",
                flat.len()
            )));
        }
        let m = flat.len() / 3;
        Self::new(
            flat[..m].to_vec(),
            flat[m..2 * m].to_vec(),
            flat[2 * m..].to_vec(),
            n_tx,
            n_rx,
        )
    }
}

/// Kronecker product of two column vectors, `out[i*len(b)+j] = a[i]*b[j]`.
fn kron_vec<T: Real>(a: &DVector<Complex<T>>, b: &DVector<Complex<T>>) -> DVector<Complex<T>> {
    let mut out = DVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Derivative-weighted steering vector: element `k` is
/// `k * exp(-j*pi*k*cos(angle)) / sqrt(n)`.
fn weighted_steering<T: Real>(angle: T, n: usize) -> DVector<Complex<T>> {
    let scale = T::one() / idx::<T>(n).sqrt();
    let cos_angle = angle.cos();
    DVector::from_fn(n, |k, _| {
        let phase = -T::pi() * idx::<T>(k) * cos_angle;
        let w = idx::<T>(k) * scale;
        Complex::new(phase.cos() * w, phase.sin() * w)
    })
}

/// Vectorized channel `h = sum_m alpha_m (a_t*(phi_m) kron a_r(theta_m))`.
pub fn h_vector<T: Real>(params: &ParamVector<T>) -> DVector<Complex<T>> {
    let mut h = DVector::zeros(params.n_tx * params.n_rx);
    for m in 0..params.n_paths() {
        let at = steering_vector(params.aod[m], params.n_tx)
            .expect("positive antenna count")
            .elements()
            .conjugate();
        let ar = steering_vector(params.aoa[m], params.n_rx)
            .expect("positive antenna count")
            .elements()
            .clone();
        let alpha = Complex::new(params.gains[m], T::zero());
        h += kron_vec(&at, &ar) * alpha;
    }
    h
}

/// Measurement operator `A = V^T kron U^H` for stacked receive beams `U`
/// (`Nr x Q`) and transmit beams `V` (`Nt x P`); `A` is `(P*Q) x (Nt*Nr)`.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix<T: Real> {
    pub a: DMatrix<Complex<T>>,
    pub u: DMatrix<Complex<T>>,
    pub v: DMatrix<Complex<T>>,
}

impl<T: Real> MeasurementMatrix<T> {
    pub fn new(u: DMatrix<Complex<T>>, v: DMatrix<Complex<T>>) -> Result<Self> {
        if u.ncols() == 0 || v.ncols() == 0 || u.nrows() == 0 || v.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "measurement needs at least one beam on each side".into(),
            ));
        }
        let a = v.transpose().kronecker(&u.adjoint());
        Ok(Self { a, u, v })
    }

    /// Every beam of both codebooks (exhaustive measurement).
    pub fn from_codebooks(bs_codebook: &Codebook<T>, ue_codebook: &Codebook<T>) -> Result<Self> {
        Self::new(ue_codebook.beam_matrix(), bs_codebook.beam_matrix())
    }

    /// Selected beams of both codebooks, e.g. the uncertainty-region
    /// subsets concatenated across paths.
    pub fn from_beam_indices(
        bs_codebook: &Codebook<T>,
        ue_codebook: &Codebook<T>,
        bs_beams: &[usize],
        ue_beams: &[usize],
    ) -> Result<Self> {
        if bs_beams.iter().any(|k| *k >= bs_codebook.len())
            || ue_beams.iter().any(|j| *j >= ue_codebook.len())
        {
            return Err(Error::InvalidArgument(
                "beam index outside the codebook".into(),
            ));
        }
        if bs_beams.is_empty() || ue_beams.is_empty() {
            return Err(Error::InvalidArgument(
                "measurement needs at least one beam on each side".into(),
            ));
        }
        let nr = ue_codebook.n_antennas();
        let nt = bs_codebook.n_antennas();
        let u = DMatrix::from_fn(nr, ue_beams.len(), |r, c| {
            ue_codebook.beam(ue_beams[c]).elements()[r]
        });
        let v = DMatrix::from_fn(nt, bs_beams.len(), |r, c| {
            bs_codebook.beam(bs_beams[c]).elements()[r]
        });
        Self::new(u, v)
    }

    /// Number of measurements `P*Q`.
    pub fn n_measurements(&self) -> usize {
        self.a.nrows()
    }

    fn check_params(&self, params: &ParamVector<T>) -> Result<()> {
        if self.a.ncols() != params.n_tx * params.n_rx
            || self.u.nrows() != params.n_rx
            || self.v.nrows() != params.n_tx
        {
            return Err(Error::DimensionMismatch(format!(
                "measurement over {} antennas against parameters for {}x{}",
                self.a.ncols(),
                params.n_rx,
                params.n_tx
            )));
        }
        Ok(())
    }
}

/// Noise-free measurement mean `m = A h(params)`.
pub fn mean_vector<T: Real>(
    params: &ParamVector<T>,
    a: &MeasurementMatrix<T>,
) -> Result<DVector<Complex<T>>> {
    a.check_params(params)?;
    Ok(&a.a * h_vector(params))
}

/// Log-likelihood of an observation under the Gaussian measurement model:
/// `-PQ*ln(pi*sigma^2) - |y - m|^2 / sigma^2`.
pub fn log_likelihood<T: Real>(
    y: &DVector<Complex<T>>,
    params: &ParamVector<T>,
    a: &MeasurementMatrix<T>,
    sigma2: T,
) -> Result<T> {
    if sigma2 <= T::zero() {
        return Err(Error::InvalidArgument(
            "noise variance must be positive".into(),
        ));
    }
    let m = mean_vector(params, a)?;
    if y.len() != m.len() {
        return Err(Error::DimensionMismatch(format!(
            "observation length {} against {} measurements",
            y.len(),
            m.len()
        )));
    }
    let pq = idx::<T>(m.len());
    let resid = (y - m).norm_squared();
    Ok(-pq * (T::pi() * sigma2).ln() - resid / sigma2)
}

/// Columns of `dh/dtheta` in `[phi.., theta.., alpha..]` order:
///
/// - `dh/dphi_m   = -alpha_m * j*pi*sin(phi_m) * (conj(at~) kron a_r)`
/// - `dh/dtheta_m = +alpha_m * j*pi*sin(theta_m) * (a_t* kron ar~)`
/// - `dh/dalpha_m = a_t* kron a_r`
///
/// where `at~`, `ar~` are the derivative-weighted steering vectors. The
/// conjugations follow `h = sum alpha (a_t* kron a_r)` so every column is
/// the exact derivative of [`h_vector`].
pub fn jacobian_t<T: Real>(params: &ParamVector<T>) -> DMatrix<Complex<T>> {
    let m_paths = params.n_paths();
    let dim = params.n_tx * params.n_rx;
    let mut t = DMatrix::zeros(dim, 3 * m_paths);
    let pi = T::pi();
    for m in 0..m_paths {
        let at = steering_vector(params.aod[m], params.n_tx)
            .expect("positive antenna count")
            .elements()
            .conjugate();
        let ar = steering_vector(params.aoa[m], params.n_rx)
            .expect("positive antenna count")
            .elements()
            .clone();
        let at_w = weighted_steering(params.aod[m], params.n_tx).conjugate();
        let ar_w = weighted_steering(params.aoa[m], params.n_rx);
        let alpha = params.gains[m];

        let d_phi = kron_vec(&at_w, &ar)
            * Complex::new(T::zero(), -alpha * pi * params.aod[m].sin());
        let d_theta = kron_vec(&at, &ar_w)
            * Complex::new(T::zero(), alpha * pi * params.aoa[m].sin());
        let d_alpha = kron_vec(&at, &ar);

        t.set_column(m, &d_phi);
        t.set_column(m_paths + m, &d_theta);
        t.set_column(2 * m_paths + m, &d_alpha);
    }
    t
}

/// Fisher information over the `3M` parameters at SNR `Es/sigma^2`.
#[derive(Debug, Clone)]
pub struct FisherInformation<T: Real> {
    /// Symmetric PSD `3M x 3M` information matrix.
    pub j: DMatrix<T>,
    /// The `Es/sigma^2` the matrix was evaluated at; every entry scales
    /// linearly with it.
    pub scale: T,
}

/// Assemble the Fisher information, `J[i,j] = 2*SNR*Re{dm_i^H dm_j}` with
/// `dm_i = A * (dh/dtheta_i)`.
pub fn fim<T: Real>(
    params: &ParamVector<T>,
    a: &MeasurementMatrix<T>,
    es_over_sigma2: T,
) -> Result<FisherInformation<T>> {
    a.check_params(params)?;
    if es_over_sigma2 < T::zero() {
        return Err(Error::InvalidArgument("SNR must be nonnegative".into()));
    }
    let d = &a.a * jacobian_t(params);
    let gram = d.adjoint() * d;
    let two_snr = lit::<T>(2.0) * es_over_sigma2;
    let j = DMatrix::from_fn(gram.nrows(), gram.ncols(), |r, c| two_snr * gram[(r, c)].re);
    Ok(FisherInformation {
        j,
        scale: es_over_sigma2,
    })
}

fn eigen_bounds<T: Real>(eigenvalues: &DVector<T>) -> (T, T) {
    let mut min = eigenvalues[0];
    let mut max = eigenvalues[0];
    for e in eigenvalues.iter() {
        min = min.min(*e);
        max = max.max(*e);
    }
    (min, max)
}

/// CRB covariance `Sigma_theta = J^{-1}`.
///
/// Fails with [`Error::SingularInformation`] when the spectrum spans more
/// than [`CONDITION_LIMIT`] (or is not positive); callers may then enlarge
/// the beam set or fall back to [`pseudo_inverse_psd`].
pub fn crb_covariance<T: Real>(info: &FisherInformation<T>) -> Result<DMatrix<T>> {
    let eig = info.j.clone().symmetric_eigen();
    let (min, max) = eigen_bounds(&eig.eigenvalues);
    let limit = lit::<T>(CONDITION_LIMIT);
    let singular = min <= T::zero() || max > min * limit;
    if singular {
        let cond = if min <= T::zero() {
            f64::INFINITY
        } else {
            (max / min).to_f64().unwrap_or(f64::INFINITY)
        };
        return Err(Error::SingularInformation {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    let inv_diag = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|e| T::one() / *e),
    );
    let q = eig.eigenvectors;
    Ok(&q * DMatrix::from_diagonal(&inv_diag) * q.transpose())
}

/// Moore-Penrose style inverse of a PSD information matrix: eigenvalues
/// below `rel_tol * lambda_max` (or negative) contribute nothing. The
/// regularization option for near-singular geometries, e.g. a LOS path
/// sitting almost exactly on the array axis.
pub fn pseudo_inverse_psd<T: Real>(info: &FisherInformation<T>, rel_tol: T) -> DMatrix<T> {
    let eig = info.j.clone().symmetric_eigen();
    let (_, max) = eigen_bounds(&eig.eigenvalues);
    let cutoff = max * rel_tol;
    let inv_diag = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|e| {
            if *e > cutoff && *e > T::zero() {
                T::one() / *e
            } else {
                T::zero()
            }
        }),
    );
    let q = eig.eigenvectors;
    &q * DMatrix::from_diagonal(&inv_diag) * q.transpose()
}

/// Channel-entry error covariance `Sigma_H = T Sigma_theta T^H` together
/// with the Jacobian that produced it.
#[derive(Debug, Clone)]
pub struct ChannelErrorCovariance<T: Real> {
    pub sigma_h: DMatrix<Complex<T>>,
    pub jacobian: DMatrix<Complex<T>>,
}

/// Propagate the parameter covariance to the vectorized channel entries.
/// The conjugate transpose keeps `Sigma_H` Hermitian PSD.
pub fn sigma_h<T: Real>(
    jacobian: &DMatrix<Complex<T>>,
    sigma_theta: &DMatrix<T>,
) -> Result<ChannelErrorCovariance<T>> {
    if jacobian.ncols() != sigma_theta.nrows() || !sigma_theta.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian {}x{} against covariance {}x{}",
            jacobian.nrows(),
            jacobian.ncols(),
            sigma_theta.nrows(),
            sigma_theta.ncols()
        )));
    }
    let sigma_c = sigma_theta.map(|x| Complex::new(x, T::zero()));
    let raw = jacobian * sigma_c * jacobian.adjoint();
    let half = Complex::new(lit::<T>(0.5), T::zero());
    let sym = (&raw + raw.adjoint()) * half;
    Ok(ChannelErrorCovariance {
        sigma_h: sym,
        jacobian: jacobian.clone(),
    })
}

/// Analytic `E[|u^H E v|^2]` for `vec(E) ~ CN(0, Sigma_H)`: the quadratic
/// form `(v* kron u)^H Sigma_H (v* kron u)`.
pub fn error_quadratic_form<T: Real>(
    u: &DVector<Complex<T>>,
    v: &DVector<Complex<T>>,
    cov: &ChannelErrorCovariance<T>,
) -> Result<T> {
    if u.len() * v.len() != cov.sigma_h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "beam pair ({}, {}) against {}-dim channel covariance",
            u.len(),
            v.len(),
            cov.sigma_h.nrows()
        )));
    }
    let q = kron_vec(&v.conjugate(), u);
    let val = (q.adjoint() * &cov.sigma_h * q)[(0, 0)];
    Ok(val.re)
}

/// Draw channel-error matrices with `vec(E) ~ CN(0, Sigma_H)` via the
/// eigenfactor of the covariance (negative eigenvalues clamp to zero).
pub fn sample_channel_errors<T: Real, R: Rng + ?Sized>(
    cov: &ChannelErrorCovariance<T>,
    n_rx: usize,
    n_tx: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<DMatrix<Complex<T>>>> {
    if n_rx * n_tx != cov.sigma_h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} channel against {}-dim covariance",
            n_rx,
            n_tx,
            cov.sigma_h.nrows()
        )));
    }
    let eig = cov.sigma_h.clone().symmetric_eigen();
    let sqrt_diag = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|e| {
            let clamped = e.max(T::zero()).sqrt();
            Complex::new(clamped, T::zero())
        }),
    );
    let factor = eig.eigenvectors * DMatrix::from_diagonal(&sqrt_diag);
    let dim = cov.sigma_h.nrows();
    let half = lit::<T>(0.5).sqrt();
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z = DVector::from_fn(dim, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(half * lit::<T>(re), half * lit::<T>(im))
        });
        let e_vec = &factor * z;
        out.push(DMatrix::from_fn(n_rx, n_tx, |r, c| e_vec[c * n_rx + r]));
    }
    Ok(out)
}

/// How the estimation-error penalty of [`estimated_rate`] is evaluated.
pub enum ErrorModel<'a, T: Real> {
    /// Analytic quadratic form from the channel error covariance.
    Covariance(&'a ChannelErrorCovariance<T>),
    /// Monte-Carlo average over explicit error-matrix samples.
    Samples(&'a [DMatrix<Complex<T>>]),
}

/// Rate computed with an estimated channel: the estimation-error power
/// enters the effective noise floor,
/// `log2(1 + SNR*|u^H H_hat v|^2 / (1 + SNR*E[|u^H E v|^2]))`.
pub fn estimated_rate<T: Real>(
    u: &DVector<Complex<T>>,
    v: &DVector<Complex<T>>,
    h_estimate: &DMatrix<Complex<T>>,
    error: ErrorModel<'_, T>,
    es_over_sigma2: T,
) -> Result<T> {
    if u.len() != h_estimate.nrows() || v.len() != h_estimate.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "beam pair ({}, {}) against {}x{} channel estimate",
            u.len(),
            v.len(),
            h_estimate.nrows(),
            h_estimate.ncols()
        )));
    }
    let penalty = match error {
        ErrorModel::Covariance(cov) => error_quadratic_form(u, v, cov)?,
        ErrorModel::Samples(samples) => {
            if samples.is_empty() {
                return Err(Error::InvalidArgument(
                    "error-sample set must be nonempty".into(),
                ));
            }
            let mut acc = T::zero();
            for e in samples {
                if e.nrows() != h_estimate.nrows() || e.ncols() != h_estimate.ncols() {
                    return Err(Error::DimensionMismatch(
                        "error sample shape differs from the channel".into(),
                    ));
                }
                let g = (u.adjoint() * e * v)[(0, 0)];
                acc += g.norm_sqr();
            }
            acc / idx::<T>(samples.len())
        }
    };
    let g = (u.adjoint() * h_estimate * v)[(0, 0)].norm_sqr();
    Ok((T::one() + es_over_sigma2 * g / (T::one() + es_over_sigma2 * penalty)).log2())
}
