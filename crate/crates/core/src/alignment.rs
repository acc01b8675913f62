//! Uncertainty-region beam subsets, search windows, the coordinated
//! alignment protocol, baselines, and effective-rate accounting.
//!
//! A block of `N` slots carries one channel realization. Alignment spends
//! `N_a` of them: one for location estimation, one per initial beam-pair
//! check, and one per window measurement phase (a phase processes up to
//! `N_b` beams). The effective rate discounts the achieved rate by the
//! fraction of the block spent aligning, floored at zero.
//!
//! Per path, the protocol alternates UE-side and BS-side phases. Each phase
//! keeps the opposite beam fixed, measures the unmeasured beams inside a
//! window of the uncertainty-region subset centered on the side's current
//! local optimum, and re-centers on the phase argmax; beams are measured at
//! most once per side per path, so successive windows advance in the
//! direction of improvement. A side stalls when its window holds no new
//! beams; the path is abandoned when both sides stall.

use std::ops::RangeInclusive;

use crate::array_codebook::{nearest_beam, steering_vector, Codebook};
use crate::channel::{BeamGainTable, ChannelInstance};
use crate::error::{Error, Result};
use crate::geometry::{angle_from_to, distance, half_angle, LocationEstimate, Observer};
use crate::scalar::{idx, Real};

/// Which end of the link a beam subset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bs,
    Ue,
}

/// Contiguous run of codebook beams whose pointing angles fall inside one
/// path's angular uncertainty interval.
#[derive(Debug, Clone)]
pub struct BeamSubset {
    pub side: Side,
    pub path: usize,
    /// Codebook beam indices, contiguous and ascending; never empty.
    pub indices: Vec<usize>,
}

impl BeamSubset {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Beams whose grid pointing angle lies in `[angle_hat - half_angle,
/// angle_hat + half_angle]` (inclusive). When no grid angle falls inside
/// the interval, the subset degenerates to the single nearest beam so the
/// search always has something to measure.
pub fn beam_subset<T: Real>(
    codebook: &Codebook<T>,
    angle_hat: T,
    half_angle: T,
    side: Side,
    path: usize,
) -> BeamSubset {
    let lo = angle_hat - half_angle;
    let hi = angle_hat + half_angle;
    let mut indices: Vec<usize> = codebook
        .pointing_angles()
        .iter()
        .enumerate()
        .filter(|(_, a)| **a >= lo && **a <= hi)
        .map(|(j, _)| j)
        .collect();
    if indices.is_empty() {
        indices.push(nearest_beam(codebook, angle_hat));
    }
    BeamSubset {
        side,
        path,
        indices,
    }
}

/// Window of positions (1-based, inclusive) inside a subset of size
/// `subset_size`, centered on position `center_index`.
///
/// The full subset is returned when the window is at least as large;
/// otherwise the window clips to the first or last `window` positions when
/// the center sits within half a window of either end, and is centered on
/// `center_index` in between. For even window sizes the extra position is
/// dropped on the right and the range is clamped into the subset.
pub fn search_window(
    subset_size: usize,
    center_index: usize,
    window: usize,
) -> Result<RangeInclusive<usize>> {
    let (b, i, w) = (subset_size, center_index, window);
    if b == 0 {
        return Err(Error::InvalidArgument("window over an empty subset".into()));
    }
    if w == 0 {
        return Err(Error::InvalidArgument("window size must be positive".into()));
    }
    if i < 1 || i > b {
        return Err(Error::InvalidArgument(format!(
            "center index {i} outside [1, {b}]"
        )));
    }
    if w >= b {
        return Ok(1..=b);
    }
    if 2 * (b - i) < w {
        return Ok((b - w + 1)..=b);
    }
    if 2 * i < w {
        return Ok(1..=w);
    }
    let start = i.saturating_sub(w / 2).clamp(1, b - w + 1);
    Ok(start..=(start + w - 1))
}

/// Alignment budget: target rate, slots per block, and beams per slot.
/// The search-window size equals `beams_per_slot`.
#[derive(Debug, Clone, Copy)]
pub struct AlignmentConfig<T: Real> {
    pub target_rate: T,
    pub n_slots: usize,
    pub beams_per_slot: usize,
}

impl<T: Real> AlignmentConfig<T> {
    pub fn new(target_rate: T, n_slots: usize, beams_per_slot: usize) -> Result<Self> {
        if n_slots == 0 {
            return Err(Error::InvalidArgument("a block needs at least one slot".into()));
        }
        if beams_per_slot == 0 {
            return Err(Error::InvalidArgument(
                "at least one beam must be processable per slot".into(),
            ));
        }
        Ok(Self {
            target_rate,
            n_slots,
            beams_per_slot,
        })
    }

    /// Search-window size `W`.
    pub fn window(&self) -> usize {
        self.beams_per_slot
    }
}

/// Whether window phases measure `W`-beam windows or sweep the whole subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    Windowed,
    FullSubset,
}

/// Result of one alignment run within a block.
#[derive(Debug, Clone)]
pub struct AlignmentOutcome<T: Real> {
    /// Selected BS beam index (into the BS codebook).
    pub v_index: usize,
    /// Selected UE beam index (into the UE codebook).
    pub u_index: usize,
    /// Slots consumed by alignment, `N_a`.
    pub n_alignment_slots: usize,
    /// Downlink rate of the selected pair, bits/s/Hz.
    pub achieved_rate: T,
    /// Overhead-discounted rate, bits/s/Hz.
    pub effective_rate: T,
    pub met_target: bool,
    /// Path whose search produced the selected pair, when applicable.
    pub path_used: Option<usize>,
}

/// Rate discounted by the alignment-overhead fraction:
/// `max(0, (1 - n_a/n) * rate)`.
pub fn effective_rate<T: Real>(rate: T, n_alignment_slots: usize, n_slots: usize) -> T {
    assert!(n_slots >= 1, "a block has at least one slot");
    let frac = T::one() - idx::<T>(n_alignment_slots) / idx::<T>(n_slots);
    (frac * rate).max(T::zero())
}

/// Everything the protocol derives from one path's location estimates:
/// estimated angles and distances, uncertainty half-angles, the two beam
/// subsets, and the initial beam choices.
#[derive(Debug, Clone)]
pub struct PathBeamSets<T: Real> {
    pub aod_hat: T,
    pub aoa_hat: T,
    pub dist_bs: T,
    pub dist_ue: T,
    pub epsilon: T,
    pub delta: T,
    pub bs_subset: BeamSubset,
    pub ue_subset: BeamSubset,
    /// Position (0-based, within the subset) of the beam closest to the
    /// estimated angle; where the first window is centered.
    pub initial_bs_position: usize,
    pub initial_ue_position: usize,
    /// Full-codebook nearest beams to the estimated angles, used by the
    /// position-only baseline.
    pub nearest_bs: usize,
    pub nearest_ue: usize,
}

impl<T: Real> PathBeamSets<T> {
    /// Build the beam sets for one path directly from estimated angles,
    /// half-angles and distances.
    #[allow(clippy::too_many_arguments)]
    pub fn from_angles(
        bs_codebook: &Codebook<T>,
        ue_codebook: &Codebook<T>,
        aod_hat: T,
        epsilon: T,
        aoa_hat: T,
        delta: T,
        dist_bs: T,
        dist_ue: T,
        path: usize,
    ) -> Self {
        let bs_subset = beam_subset(bs_codebook, aod_hat, epsilon, Side::Bs, path);
        let ue_subset = beam_subset(ue_codebook, aoa_hat, delta, Side::Ue, path);
        let initial_bs_position = nearest_position_in_subset(bs_codebook, &bs_subset, aod_hat);
        let initial_ue_position = nearest_position_in_subset(ue_codebook, &ue_subset, aoa_hat);
        Self {
            aod_hat,
            aoa_hat,
            dist_bs,
            dist_ue,
            epsilon,
            delta,
            bs_subset,
            ue_subset,
            initial_bs_position,
            initial_ue_position,
            nearest_bs: nearest_beam(bs_codebook, aod_hat),
            nearest_ue: nearest_beam(ue_codebook, aoa_hat),
        }
    }
}

fn nearest_position_in_subset<T: Real>(
    codebook: &Codebook<T>,
    subset: &BeamSubset,
    angle: T,
) -> usize {
    let target = steering_vector(angle, codebook.n_antennas())
        .expect("codebook guarantees n_antennas >= 2");
    let mut best = 0usize;
    let mut best_dist = T::max_value().unwrap_or_else(T::one);
    for (pos, j) in subset.indices.iter().enumerate() {
        let d = (codebook.beam(*j).elements() - target.elements()).norm_squared();
        if d < best_dist {
            best = pos;
            best_dist = d;
        }
    }
    best
}

/// Derive angles, half-angles and beam subsets for every path from the two
/// observers' location estimates. Truth never enters: only estimates and
/// the known maximum error radii.
pub fn path_beam_sets<T: Real>(
    bs_estimate: &LocationEstimate<T>,
    ue_estimate: &LocationEstimate<T>,
    r_bs: &[T],
    r_ue: &[T],
    bs_codebook: &Codebook<T>,
    ue_codebook: &Codebook<T>,
) -> Result<Vec<PathBeamSets<T>>> {
    if bs_estimate.observer != Observer::Bs || ue_estimate.observer != Observer::Ue {
        return Err(Error::InvalidArgument(
            "estimates must come from the BS and the UE respectively".into(),
        ));
    }
    let m_paths = bs_estimate.points.len();
    if ue_estimate.points.len() != m_paths || r_bs.len() != m_paths || r_ue.len() != m_paths {
        return Err(Error::InvalidArgument(format!(
            "inconsistent path counts: {} BS points, {} UE points, {} BS radii, {} UE radii",
            m_paths,
            ue_estimate.points.len(),
            r_bs.len(),
            r_ue.len()
        )));
    }
    let mut out = Vec::with_capacity(m_paths);
    for m in 0..m_paths {
        let aod_hat = angle_from_to(bs_estimate.self_estimate, bs_estimate.points[m])?;
        let dist_bs = distance(bs_estimate.self_estimate, bs_estimate.points[m]);
        let epsilon = half_angle(dist_bs, aod_hat, r_bs[m])?;
        let aoa_hat = angle_from_to(ue_estimate.self_estimate, ue_estimate.points[m])?;
        let dist_ue = distance(ue_estimate.self_estimate, ue_estimate.points[m]);
        let delta = half_angle(dist_ue, aoa_hat, r_ue[m])?;
        out.push(PathBeamSets::from_angles(
            bs_codebook,
            ue_codebook,
            aod_hat,
            epsilon,
            aoa_hat,
            delta,
            dist_bs,
            dist_ue,
            m,
        ));
    }
    Ok(out)
}

/// What one protocol phase did; used by tests and diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhaseKind {
    LocationEstimation,
    InitialPair,
    UeWindow,
    BsWindow,
}

#[derive(Debug, Clone)]
pub struct PhaseRecord<T: Real> {
    pub kind: PhaseKind,
    pub path: usize,
    /// Subset positions (0-based) covered by the phase's window.
    pub window: Vec<usize>,
    /// Positions measured for the first time in this phase (on the side
    /// that measured; the initial pair marks one position on each side).
    pub newly_measured: Vec<usize>,
    pub center_before: usize,
    pub center_after: usize,
    /// In-subset positions of the current pair after the phase.
    pub ue_position: usize,
    pub bs_position: usize,
    /// Rate of the current beam pair after the phase.
    pub pair_rate: T,
    pub slots_after: usize,
}

#[derive(Debug, Clone, Default)]
pub struct AlignmentTrace<T: Real> {
    pub phases: Vec<PhaseRecord<T>>,
}

struct BestPair<T: Real> {
    ue: usize,
    bs: usize,
    rate: T,
    path: usize,
}

fn update_best<T: Real>(best: &mut Option<BestPair<T>>, ue: usize, bs: usize, rate: T, path: usize) {
    let better = match best {
        Some(b) => rate > b.rate,
        None => true,
    };
    if better {
        *best = Some(BestPair { ue, bs, rate, path });
    }
}

fn engine_window(
    subset_size: usize,
    center: usize,
    window: usize,
    mode: WindowMode,
) -> Vec<usize> {
    let range = match mode {
        WindowMode::FullSubset => 1..=subset_size,
        WindowMode::Windowed => search_window(subset_size, center + 1, window)
            .expect("engine keeps the center inside the subset"),
    };
    range.map(|p| p - 1).collect()
}

/// The coordinated protocol, driven by a precomputed gain table.
///
/// Returns the outcome together with a phase-by-phase trace.
pub fn coordinated_alignment_traced_with_table<T: Real>(
    table: &BeamGainTable<T>,
    paths: &[PathBeamSets<T>],
    config: &AlignmentConfig<T>,
    es_over_sigma2: T,
    mode: WindowMode,
) -> Result<(AlignmentOutcome<T>, AlignmentTrace<T>)> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no paths to align on".into()));
    }
    for p in paths {
        if p.ue_subset.indices.iter().any(|j| *j >= table.n_ue_beams())
            || p.bs_subset.indices.iter().any(|k| *k >= table.n_bs_beams())
        {
            return Err(Error::DimensionMismatch(
                "beam subset index outside the gain table".into(),
            ));
        }
    }
    let w = config.window();
    let budget = config.n_slots;
    let r0 = config.target_rate;
    let snr = es_over_sigma2;
    let mut trace = AlignmentTrace::default();
    let mut slots = 1usize; // slot 1: location estimation
    trace.phases.push(PhaseRecord {
        kind: PhaseKind::LocationEstimation,
        path: 0,
        window: vec![],
        newly_measured: vec![],
        center_before: 0,
        center_after: 0,
        ue_position: 0,
        bs_position: 0,
        pair_rate: T::zero(),
        slots_after: slots,
    });
    let mut best: Option<BestPair<T>> = None;

    'paths: for (m, p) in paths.iter().enumerate() {
        let ue_sub = &p.ue_subset.indices;
        let bs_sub = &p.bs_subset.indices;
        let mut pos_ue = p.initial_ue_position;
        let mut pos_bs = p.initial_bs_position;
        if slots + 1 > budget {
            break 'paths;
        }
        slots += 1;
        let mut meas_ue = vec![false; ue_sub.len()];
        let mut meas_bs = vec![false; bs_sub.len()];
        meas_ue[pos_ue] = true;
        meas_bs[pos_bs] = true;
        let mut pair_rate = table.rate(ue_sub[pos_ue], bs_sub[pos_bs], snr);
        update_best(&mut best, ue_sub[pos_ue], bs_sub[pos_bs], pair_rate, m);
        trace.phases.push(PhaseRecord {
            kind: PhaseKind::InitialPair,
            path: m,
            window: vec![],
            newly_measured: vec![],
            center_before: pos_ue,
            center_after: pos_ue,
            ue_position: pos_ue,
            bs_position: pos_bs,
            pair_rate,
            slots_after: slots,
        });
        if pair_rate >= r0 {
            break 'paths;
        }

        let mut ue_turn = true;
        let mut ue_stalled = false;
        let mut bs_stalled = false;
        while !(ue_stalled && bs_stalled) {
            let (sub, meas, pos, fixed_beam) = if ue_turn {
                (ue_sub, &mut meas_ue, &mut pos_ue, bs_sub[pos_bs])
            } else {
                (bs_sub, &mut meas_bs, &mut pos_bs, ue_sub[pos_ue])
            };
            let window = engine_window(sub.len(), *pos, w, mode);
            let new: Vec<usize> = window.iter().copied().filter(|q| !meas[*q]).collect();
            if new.is_empty() {
                // The window repeats with no new beams: this side stalls.
                if ue_turn {
                    ue_stalled = true;
                } else {
                    bs_stalled = true;
                }
                ue_turn = !ue_turn;
                continue;
            }
            let cost = match mode {
                WindowMode::Windowed => 1,
                WindowMode::FullSubset => new.len().div_ceil(config.beams_per_slot),
            };
            if slots + cost > budget {
                break 'paths;
            }
            slots += cost;
            let center_before = *pos;
            let mut chosen = *pos;
            let mut chosen_rate = pair_rate;
            for q in &new {
                meas[*q] = true;
                // UE phases measure downlink against the fixed BS beam; BS
                // phases measure uplink against the fixed UE beam. By
                // reciprocity both read the same pairwise gain.
                let r = if ue_turn {
                    table.rate(sub[*q], fixed_beam, snr)
                } else {
                    table.rate(fixed_beam, sub[*q], snr)
                };
                if r > chosen_rate {
                    chosen = *q;
                    chosen_rate = r;
                }
            }
            *pos = chosen;
            pair_rate = chosen_rate;
            let (u_idx, v_idx) = (ue_sub[pos_ue], bs_sub[pos_bs]);
            update_best(&mut best, u_idx, v_idx, pair_rate, m);
            trace.phases.push(PhaseRecord {
                kind: if ue_turn {
                    PhaseKind::UeWindow
                } else {
                    PhaseKind::BsWindow
                },
                path: m,
                window,
                newly_measured: new,
                center_before,
                center_after: chosen,
                ue_position: pos_ue,
                bs_position: pos_bs,
                pair_rate,
                slots_after: slots,
            });
            if pair_rate >= r0 {
                break 'paths;
            }
            ue_turn = !ue_turn;
        }
    }

    let measured_any = best.is_some();
    let (u_index, v_index, achieved_rate, path_used) = match best {
        Some(b) => (b.ue, b.bs, b.rate, Some(b.path)),
        None => {
            // The budget did not even cover the first check; fall back to the
            // initial pair of the first path as the operating choice.
            let p = &paths[0];
            let u = p.ue_subset.indices[p.initial_ue_position];
            let v = p.bs_subset.indices[p.initial_bs_position];
            (u, v, table.rate(u, v, snr), Some(0))
        }
    };
    let outcome = AlignmentOutcome {
        v_index,
        u_index,
        n_alignment_slots: slots,
        achieved_rate,
        effective_rate: effective_rate(achieved_rate, slots, budget),
        met_target: measured_any && achieved_rate >= r0,
        path_used,
    };
    Ok((outcome, trace))
}

/// [`coordinated_alignment_traced_with_table`] without the trace.
pub fn coordinated_alignment_with_table<T: Real>(
    table: &BeamGainTable<T>,
    paths: &[PathBeamSets<T>],
    config: &AlignmentConfig<T>,
    es_over_sigma2: T,
    mode: WindowMode,
) -> Result<AlignmentOutcome<T>> {
    coordinated_alignment_traced_with_table(table, paths, config, es_over_sigma2, mode)
        .map(|(outcome, _)| outcome)
}

/// Run the coordinated protocol for one block.
///
/// Beam measurements come from the true channel `h`; beam selection uses
/// only the noisy location estimates and the known error radii.
#[allow(clippy::too_many_arguments)]
pub fn coordinated_alignment<T: Real>(
    h: &ChannelInstance<T>,
    bs_estimate: &LocationEstimate<T>,
    ue_estimate: &LocationEstimate<T>,
    r_bs: &[T],
    r_ue: &[T],
    bs_codebook: &Codebook<T>,
    ue_codebook: &Codebook<T>,
    config: &AlignmentConfig<T>,
    es_over_sigma2: T,
    mode: WindowMode,
) -> Result<AlignmentOutcome<T>> {
    let table = BeamGainTable::new(h, bs_codebook, ue_codebook)?;
    let paths = path_beam_sets(
        bs_estimate,
        ue_estimate,
        r_bs,
        r_ue,
        bs_codebook,
        ue_codebook,
    )?;
    coordinated_alignment_with_table(&table, &paths, config, es_over_sigma2, mode)
}

/// Exhaustive-search baseline driven by a precomputed gain table: the global
/// argmax over all beam pairs, charged `ceil(Nt*Nr / N_b)` slots.
pub fn exhaustive_search_with_table<T: Real>(
    table: &BeamGainTable<T>,
    config: &AlignmentConfig<T>,
    es_over_sigma2: T,
) -> AlignmentOutcome<T> {
    let (u_index, v_index) = table.argmax_pair();
    let achieved_rate = table.rate(u_index, v_index, es_over_sigma2);
    let n_a = (table.n_ue_beams() * table.n_bs_beams()).div_ceil(config.beams_per_slot);
    AlignmentOutcome {
        v_index,
        u_index,
        n_alignment_slots: n_a,
        achieved_rate,
        effective_rate: effective_rate(achieved_rate, n_a, config.n_slots),
        met_target: achieved_rate >= config.target_rate,
        path_used: None,
    }
}

/// Exhaustive search over the full codebook product.
pub fn exhaustive_search<T: Real>(
    h: &ChannelInstance<T>,
    bs_codebook: &Codebook<T>,
    ue_codebook: &Codebook<T>,
    config: &AlignmentConfig<T>,
    es_over_sigma2: T,
) -> Result<AlignmentOutcome<T>> {
    let table = BeamGainTable::new(h, bs_codebook, ue_codebook)?;
    Ok(exhaustive_search_with_table(&table, config, es_over_sigma2))
}

/// Position-only baseline: transmit on the nearest beams to the estimated
/// angles, best path wins, no search. Charged the location slot plus one
/// measurement slot.
pub fn position_only_with_table<T: Real>(
    table: &BeamGainTable<T>,
    paths: &[PathBeamSets<T>],
    config: &AlignmentConfig<T>,
    es_over_sigma2: T,
) -> Result<AlignmentOutcome<T>> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no paths to align on".into()));
    }
    let mut best_m = 0usize;
    let mut best_rate = T::zero();
    let mut first = true;
    for (m, p) in paths.iter().enumerate() {
        let rate = table.rate(p.nearest_ue, p.nearest_bs, es_over_sigma2);
        if first || rate > best_rate {
            best_m = m;
            best_rate = rate;
            first = false;
        }
    }
    let n_a = 2;
    Ok(AlignmentOutcome {
        v_index: paths[best_m].nearest_bs,
        u_index: paths[best_m].nearest_ue,
        n_alignment_slots: n_a,
        achieved_rate: best_rate,
        effective_rate: effective_rate(best_rate, n_a, config.n_slots),
        met_target: best_rate >= config.target_rate,
        path_used: Some(best_m),
    })
}

/// Position-only baseline from channel and estimates.
#[allow(clippy::too_many_arguments)]
pub fn position_only_baseline<T: Real>(
    h: &ChannelInstance<T>,
    bs_estimate: &LocationEstimate<T>,
    ue_estimate: &LocationEstimate<T>,
    r_bs: &[T],
    r_ue: &[T],
    bs_codebook: &Codebook<T>,
    ue_codebook: &Codebook<T>,
    config: &AlignmentConfig<T>,
    es_over_sigma2: T,
) -> Result<AlignmentOutcome<T>> {
    let table = BeamGainTable::new(h, bs_codebook, ue_codebook)?;
    let paths = path_beam_sets(
        bs_estimate,
        ue_estimate,
        r_bs,
        r_ue,
        bs_codebook,
        ue_codebook,
    )?;
    position_only_with_table(&table, &paths, config, es_over_sigma2)
}
