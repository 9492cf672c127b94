//! Lehmann-representation response functions and the kernel of the response map.
//!
//! A potential direction `v` (real coefficients over the probes) enters through
//! the pair amplitudes `a_KL = sum_j q_j^KL v_j`. For a monotone ensemble the
//! direction is a kernel candidate iff `a_KL = 0` for every pair outside the
//! extended degenerate subspace; candidates then have to pass a sufficiency
//! check that only involves degenerate states with different weights.

use std::sync::Arc;

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    check_monotone, extended_degenerate_structure, Ensemble, EnsembleKind, ExtendedDegenerateStructure,
};
use crate::error::{Error, Result};
use crate::fock::{number_operator, ManyBodyOperator};
use crate::linalg::{
    columns, commutator, complement_within, distance_to_span, hermitian_norm, null_space_abs, null_space_scaled,
    principal_angles, CMat, NullSpace, RMat, C64, I,
};
use crate::par;
use crate::probes::{commutant_basis, density_matrix, ProbeSet, DEFAULT_TOL_RANK};
use crate::spectrum::SpectralDecomposition;

/// Relative tolerance for the sufficiency residuals.
pub const DEFAULT_TOL_SUFFICIENCY: f64 = 1e-10;
/// Principal-angle tolerance when comparing kernel and commutant.
pub const SUBSPACE_ANGLE_TOL: f64 = 1e-8;

/// `q[i][(K, L)] = <Psi_K| Q_i |Psi_L>`.
#[derive(Debug, Clone)]
pub struct TransitionMoments {
    q: Vec<CMat>,
}

impl TransitionMoments {
    pub fn n_probes(&self) -> usize {
        self.q.len()
    }

    pub fn dim(&self) -> usize {
        self.q.first().map_or(0, |m| m.nrows())
    }

    pub fn probe(&self, i: usize) -> &CMat {
        &self.q[i]
    }

    pub fn get(&self, i: usize, k: usize, l: usize) -> C64 {
        self.q[i][(k, l)]
    }

    /// `l^KL = sum_j q_j^KL v_j`.
    pub fn direction(&self, v: &[f64]) -> CMat {
        assert_eq!(v.len(), self.q.len(), "direction length must match the probe count");
        let d = self.dim();
        let mut out = CMat::zeros(d, d);
        for (q, &c) in self.q.iter().zip(v) {
            if c != 0.0 {
                out += q * C64::new(c, 0.0);
            }
        }
        out
    }
}

pub fn transition_moments(probes: &ProbeSet, spec: &SpectralDecomposition) -> Result<TransitionMoments> {
    if probes.basis().as_ref() != spec.generator().basis().as_ref() {
        return Err(Error::invalid("probes", "probes and spectrum live on different bases"));
    }
    let q = par::map_slice(probes.probes(), |p| spec.in_eigenbasis(p.op.matrix()));
    Ok(TransitionMoments { q })
}

/// Everything the response functions need, computed once.
#[derive(Debug, Clone)]
pub struct ResponseSetup {
    ens: Ensemble,
    probes: ProbeSet,
    moments: TransitionMoments,
    eds: ExtendedDegenerateStructure,
    scale: f64,
}

impl ResponseSetup {
    pub fn new(probes: &ProbeSet, ens: &Ensemble) -> Result<Self> {
        let moments = transition_moments(probes, ens.spectrum())?;
        Ok(ResponseSetup {
            eds: extended_degenerate_structure(ens),
            ens: ens.clone(),
            probes: probes.clone(),
            moments,
            scale: probes.scale(),
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ens
    }

    pub fn spectrum(&self) -> &Arc<SpectralDecomposition> {
        self.ens.spectrum()
    }

    pub fn probes(&self) -> &ProbeSet {
        &self.probes
    }

    pub fn moments(&self) -> &TransitionMoments {
        &self.moments
    }

    pub fn structure(&self) -> &ExtendedDegenerateStructure {
        &self.eds
    }

    /// `max_i ||Q_i||`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn check_direction(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.probes.len() {
            return Err(Error::invalid(
                "direction",
                format!("{} coefficients for {} probes", v.len(), self.probes.len()),
            ));
        }
        Ok(())
    }

    fn require_monotone(&self) -> Result<()> {
        let pairs = check_monotone(&self.ens);
        if pairs.is_empty() {
            Ok(())
        } else {
            Err(Error::NonMonotone { pairs })
        }
    }

    /// `w_L exp(i Omega_KL tau)` for every `(K, L)`.
    fn phase_weights(&self, tau: f64) -> CMat {
        let spec = self.spectrum();
        let n = spec.dim();
        CMat::from_fn(n, n, |k, l| C64::from_polar(self.ens.weight(l), spec.omega(k, l) * tau))
    }

    /// Full response matrix `chi_ij(tau)`; zero for `tau < 0`, the `0+` limit at `tau = 0`.
    pub fn chi_time(&self, tau: f64) -> RMat {
        let p = self.probes.len();
        if tau < 0.0 {
            return RMat::zeros(p, p);
        }
        let phase = self.phase_weights(tau);
        let entries = par::map_indexed(p * p, |idx| {
            let (i, j) = (idx / p, idx % p);
            let (qi, qj) = (self.moments.probe(i), self.moments.probe(j));
            let mut acc = C64::new(0.0, 0.0);
            for (ph, (a, b)) in phase.iter().zip(qi.iter().zip(qj.iter())) {
                acc += ph * b.conj() * a;
            }
            -2.0 * acc.im
        });
        RMat::from_row_slice(p, p, &entries)
    }

    /// `chi_iv(m dt) = sum_j chi_ij(m dt) v_j` for `m = 0..=n_lags`, indexed `[i][m]`.
    pub fn chi_direction_lags(&self, v: &[f64], dt: f64, n_lags: usize) -> Result<Vec<Vec<f64>>> {
        self.check_direction(v)?;
        let spec = self.spectrum();
        let n = spec.dim();
        let l = self.moments.direction(v);
        // e^{i Omega_KL tau} = e^{i E_K tau} e^{-i E_L tau}; energies are snapped, so degenerate
        // partners get identical phases
        let energies: Vec<f64> = (0..n).map(|k| spec.energy(k)).collect();
        let out = par::map_indexed(self.probes.len(), |i| {
            let qi = self.moments.probe(i);
            let c = CMat::from_fn(n, n, |k, ll| l[(ll, k)] * qi[(k, ll)] * self.ens.weight(ll));
            (0..=n_lags)
                .map(|m| {
                    let tau = m as f64 * dt;
                    let right = DVector::from_iterator(n, energies.iter().map(|&e| C64::from_polar(1.0, -e * tau)));
                    let cv = &c * right;
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, &e) in energies.iter().enumerate() {
                        acc += C64::from_polar(1.0, e * tau) * cv[k];
                    }
                    -2.0 * acc.im
                })
                .collect()
        });
        Ok(out)
    }

    /// Pairs outside the extended degenerate subspace and their moment rows.
    pub fn necessary_map(&self) -> Result<NecessaryMap> {
        self.require_monotone()?;
        let spec = self.spectrum();
        let n = spec.dim();
        let pairs: Vec<(usize, usize)> = (1..n)
            .flat_map(|k| (0..k).map(move |l| (k, l)))
            .filter(|&(k, l)| !self.eds.in_d(k, l))
            .collect();
        let p = self.probes.len();
        let rows = par::map_slice(&pairs, |&(k, l)| {
            (0..p).map(|j| self.moments.get(j, k, l)).collect::<Vec<_>>()
        });
        let mut complex = CMat::zeros(pairs.len(), p);
        let mut realified = RMat::zeros(2 * pairs.len(), p);
        for (r, row) in rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                complex[(r, j)] = *z;
                realified[(2 * r, j)] = z.re;
                realified[(2 * r + 1, j)] = z.im;
            }
        }
        let max_w = self.ens.weights().iter().fold(0.0_f64, |a, &b| a.max(b));
        let tol_pair = 1e-14 * max_w * spec.bandwidth();
        let weak_pairs = pairs
            .iter()
            .filter(|&&(k, l)| (self.ens.weight(l) - self.ens.weight(k)) * spec.omega(k, l) <= tol_pair)
            .count();
        Ok(NecessaryMap {
            pairs,
            complex,
            realified,
            weak_pairs,
            scale: self.scale,
        })
    }

    /// `sum_{K>L} (w_L - w_K) Omega_KL / (s^2 + Omega_KL^2) |a_KL|^2`.
    pub fn necessary_value(&self, v: &[f64], s: f64) -> Result<f64> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::invalid("s", format!("Laplace variable must be positive, got {s}")));
        }
        self.check_direction(v)?;
        self.require_monotone()?;
        let spec = self.spectrum();
        let a = self.moments.direction(v);
        let mut total = 0.0;
        for k in 1..spec.dim() {
            for l in 0..k {
                let om = spec.omega(k, l);
                if om == 0.0 {
                    continue;
                }
                let dw = self.ens.weight(l) - self.ens.weight(k);
                total += dw * om / (s * s + om * om) * a[(k, l)].norm_sqr();
            }
        }
        Ok(total)
    }

    /// Pairwise and commutator forms of the sufficiency residual for direction `v`.
    pub fn sufficiency_residual(&self, v: &[f64]) -> Result<SufficiencyResidual> {
        self.check_direction(v)?;
        let l = self.moments.direction(v);
        let spec = self.spectrum();
        let n = spec.dim();
        let pairwise = par::map_indexed(self.probes.len(), |i| {
            let qi = self.moments.probe(i);
            let mut acc = 0.0;
            for lo in 0..n {
                for &k in &self.eds.dr[lo] {
                    if k > lo {
                        let dw = self.ens.weight(lo) - self.ens.weight(k);
                        acc += -2.0 * dw * (qi[(lo, k)] * l[(k, lo)]).im;
                    }
                }
            }
            acc
        });
        let rho = density_matrix(&self.ens);
        let lv = self.probes.combination(v);
        let commutator_form = par::map_slice(self.probes.probes(), |p| {
            let c = commutator(p.op.matrix(), &lv);
            // i Tr(rho [Q_i, L]) is real for Hermitian Q_i, L
            (I * (&rho * c).trace()).re
        });
        let scale = self.scale * hermitian_norm(&lv);
        let max_pairwise = pairwise.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let max_mismatch = pairwise
            .iter()
            .zip(&commutator_form)
            .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        Ok(SufficiencyResidual {
            passes: max_pairwise <= DEFAULT_TOL_SUFFICIENCY * scale,
            pairwise,
            commutator: commutator_form,
            max_pairwise,
            max_mismatch,
            scale,
        })
    }

    /// Assemble the full kernel analysis.
    pub fn compute_kernel(&self, options: &KernelOptions) -> Result<KernelReport> {
        let map = self.necessary_map()?;
        let candidates = candidate_kernel(&map, options.tol_rank);
        let p = self.probes.len();
        let cand_vectors = columns(&candidates.basis);

        let residuals: Vec<SufficiencyResidual> = cand_vectors
            .iter()
            .map(|v| self.sufficiency_residual(v))
            .collect::<Result<_>>()?;
        let skipped = self.ens.kind().is_energy_only();
        let (kernel, sufficiency_singular_values) = if skipped || candidates.dim() == 0 {
            (candidates.basis.clone(), Vec::new())
        } else {
            // residuals are linear in v: restrict to the null space of the residual matrix
            let mut r = RMat::zeros(p, candidates.dim());
            for (c, res) in residuals.iter().enumerate() {
                for i in 0..p {
                    r[(i, c)] = res.pairwise[i];
                }
            }
            let scale = residuals.iter().fold(0.0_f64, |a, x| a.max(x.scale)).max(f64::MIN_POSITIVE);
            let ns = null_space_abs(&r, options.tol_sufficiency * scale);
            (&candidates.basis * &ns.basis, ns.singular_values)
        };

        let commutant = commutant_basis(self.spectrum().generator(), &self.probes, options.tol_rank)?;
        let angles = principal_angles(&kernel, &commutant.basis);
        let same_dim = kernel.ncols() == commutant.dim();
        let max_angle = if same_dim {
            angles.iter().copied().fold(0.0, f64::max)
        } else {
            std::f64::consts::FRAC_PI_2
        };
        let equals = same_dim && max_angle <= SUBSPACE_ANGLE_TOL;
        let excess = complement_within(&kernel, &commutant.basis, SUBSPACE_ANGLE_TOL).ncols();
        let missing = complement_within(&commutant.basis, &kernel, SUBSPACE_ANGLE_TOL).ncols();

        let spec = self.spectrum();
        Ok(KernelReport {
            ensemble_kind: self.ens.kind().name().to_string(),
            probe_labels: self.probes.labels(),
            pair_count: map.pairs.len(),
            weak_pair_count: map.weak_pairs,
            tolerances: KernelTolerances {
                tol_rank: options.tol_rank,
                tol_sufficiency: options.tol_sufficiency,
                tol_weight: self.ens.tol_weight(),
                tol_energy: spec.tol_energy(),
                subspace_angle: SUBSPACE_ANGLE_TOL,
            },
            necessary: SingularSpectrum::from_null_space(&candidates),
            candidate_dim: candidates.dim(),
            candidate_basis: cand_vectors,
            sufficiency: SufficiencySummary {
                skipped,
                residuals,
                singular_values: sufficiency_singular_values,
                rejected_dim: candidates.dim() - kernel.ncols(),
            },
            kernel_dim: kernel.ncols(),
            kernel_basis: columns(&kernel),
            commutant_dim: commutant.dim(),
            commutant: SingularSpectrum::from_null_space(&commutant),
            commutant_basis: columns(&commutant.basis),
            principal_angles: angles,
            max_principal_angle: max_angle,
            kernel_equals_commutant: equals,
            commutant_theorem: skipped.then_some(equals),
            excess_over_commutant: excess,
            missing_from_kernel: missing,
        })
    }
}

/// Rows of the necessary-condition map, one per pair `K > L` with `L` outside `D(K)`.
#[derive(Debug, Clone)]
pub struct NecessaryMap {
    pub pairs: Vec<(usize, usize)>,
    /// `complex[(r, j)] = q_j^KL` for pair `r = (K, L)`.
    pub complex: CMat,
    /// Real and imaginary parts interleaved: rows `2r`, `2r + 1`.
    pub realified: RMat,
    /// Pairs whose factor `(w_L - w_K) Omega_KL` is below the pair threshold (thermal
    /// ensembles with underflowed weights).
    pub weak_pairs: usize,
    /// `max_i ||Q_i||`, the floor for the rank threshold.
    pub scale: f64,
}

impl NecessaryMap {
    /// `||A v||`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        (&self.realified * DVector::from_column_slice(v)).norm()
    }
}

pub fn necessary_map(probes: &ProbeSet, ens: &Ensemble) -> Result<NecessaryMap> {
    ResponseSetup::new(probes, ens)?.necessary_map()
}

/// Null space of the realified necessary map.
pub fn candidate_kernel(map: &NecessaryMap, tol_rank: f64) -> NullSpace {
    null_space_scaled(&map.realified, tol_rank, map.scale)
}

pub fn chi_time(probes: &ProbeSet, ens: &Ensemble, tau: f64) -> Result<RMat> {
    Ok(ResponseSetup::new(probes, ens)?.chi_time(tau))
}

pub fn necessary_value(v: &[f64], s: f64, probes: &ProbeSet, ens: &Ensemble) -> Result<f64> {
    ResponseSetup::new(probes, ens)?.necessary_value(v, s)
}

pub fn sufficiency_residual(v: &[f64], probes: &ProbeSet, ens: &Ensemble) -> Result<SufficiencyResidual> {
    ResponseSetup::new(probes, ens)?.sufficiency_residual(v)
}

pub fn compute_kernel(probes: &ProbeSet, ens: &Ensemble, options: &KernelOptions) -> Result<KernelReport> {
    ResponseSetup::new(probes, ens)?.compute_kernel(options)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub tol_rank: f64,
    pub tol_sufficiency: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            tol_rank: DEFAULT_TOL_RANK,
            tol_sufficiency: DEFAULT_TOL_SUFFICIENCY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyResidual {
    /// Sum over degenerate pairs with different weights.
    pub pairwise: Vec<f64>,
    /// `i Tr(rho [Q_i, L_v])` from matrix commutators.
    pub commutator: Vec<f64>,
    pub max_pairwise: f64,
    pub max_mismatch: f64,
    /// `max_i ||Q_i|| * ||L_v||`.
    pub scale: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencySummary {
    pub skipped: bool,
    /// One entry per candidate basis vector.
    pub residuals: Vec<SufficiencyResidual>,
    pub singular_values: Vec<f64>,
    pub rejected_dim: usize,
}

/// Singular values behind a rank decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    pub smallest_retained: Option<f64>,
    pub largest_discarded: Option<f64>,
}

impl SingularSpectrum {
    fn from_null_space(ns: &NullSpace) -> Self {
        let retained = ns.singular_values.iter().copied().filter(|&s| s > ns.threshold);
        let discarded = ns.singular_values.iter().copied().filter(|&s| s <= ns.threshold);
        SingularSpectrum {
            singular_values: ns.singular_values.clone(),
            threshold: ns.threshold,
            smallest_retained: retained.reduce(f64::min),
            largest_discarded: discarded.reduce(f64::max),
        }
    }

    /// Ratio of smallest retained to largest discarded singular value.
    pub fn gap(&self) -> Option<f64> {
        match (self.smallest_retained, self.largest_discarded) {
            (Some(r), Some(d)) if d > 0.0 => Some(r / d),
            (Some(_), Some(_)) => Some(f64::INFINITY),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTolerances {
    pub tol_rank: f64,
    pub tol_sufficiency: f64,
    pub tol_weight: f64,
    pub tol_energy: f64,
    pub subspace_angle: f64,
}

/// Result of [`compute_kernel`]; basis vectors are probe-coefficient lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub ensemble_kind: String,
    pub probe_labels: Vec<String>,
    pub pair_count: usize,
    pub weak_pair_count: usize,
    pub tolerances: KernelTolerances,
    pub necessary: SingularSpectrum,
    pub candidate_dim: usize,
    pub candidate_basis: Vec<Vec<f64>>,
    pub sufficiency: SufficiencySummary,
    pub kernel_dim: usize,
    pub kernel_basis: Vec<Vec<f64>>,
    pub commutant_dim: usize,
    pub commutant: SingularSpectrum,
    pub commutant_basis: Vec<Vec<f64>>,
    pub principal_angles: Vec<f64>,
    pub max_principal_angle: f64,
    pub kernel_equals_commutant: bool,
    /// For thermal ensembles: whether the kernel equals the commutant.
    pub commutant_theorem: Option<bool>,
    /// Kernel directions outside the commutant.
    pub excess_over_commutant: usize,
    /// Commutant directions outside the kernel.
    pub missing_from_kernel: usize,
}

impl KernelReport {
    pub fn kernel_matrix(&self) -> RMat {
        crate::linalg::from_columns(&self.kernel_basis, self.probe_labels.len())
    }

    pub fn commutant_matrix(&self) -> RMat {
        crate::linalg::from_columns(&self.commutant_basis, self.probe_labels.len())
    }

    pub fn candidate_matrix(&self) -> RMat {
        crate::linalg::from_columns(&self.candidate_basis, self.probe_labels.len())
    }

    /// Euclidean distance from `v` to the kernel span.
    pub fn distance_to_kernel(&self, v: &[f64]) -> f64 {
        distance_to_span(&self.kernel_matrix(), &DVector::from_column_slice(v))
    }
}

/// Thermal ensemble used by the static response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThermalKind {
    Canonical { beta: f64 },
    GrandCanonical { beta: f64, mu: f64 },
}

impl TryFrom<EnsembleKind> for ThermalKind {
    type Error = Error;

    fn try_from(kind: EnsembleKind) -> Result<Self> {
        match kind {
            EnsembleKind::Canonical { beta } => Ok(ThermalKind::Canonical { beta }),
            EnsembleKind::GrandCanonical { beta, mu } => Ok(ThermalKind::GrandCanonical { beta, mu }),
            other => Err(Error::invalid(
                "ensemble.kind",
                format!("static response needs a thermal ensemble, got {}", other.name()),
            )),
        }
    }
}

pub const DEFAULT_STATIC_STEP: f64 = 1e-5;

fn thermal_expectations(generator: &CMat, beta: f64, probes: &ProbeSet) -> Vec<f64> {
    let eig = SymmetricEigen::new(generator.clone());
    let e0 = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = eig.eigenvalues.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = raw.iter().sum();
    let d = generator.nrows();
    let mut rho = CMat::zeros(d, d);
    for (k, w) in raw.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        rho += col * col.adjoint() * C64::new(w / z, 0.0);
    }
    probes
        .probes()
        .iter()
        .map(|p| (&rho * p.op.matrix()).trace().re)
        .collect()
}

/// Central finite-difference derivative of `Tr[rho(H + lambda L_v) Q_i]` at `lambda = 0`,
/// with the weights of the thermal state re-evaluated at `+-step`.
pub fn static_thermal_response(
    h: &ManyBodyOperator,
    probes: &ProbeSet,
    kind: ThermalKind,
    v: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::invalid("step", "finite-difference step must be positive"));
    }
    if v.len() != probes.len() {
        return Err(Error::invalid("direction", "direction length must match the probe count"));
    }
    let (beta, generator) = match kind {
        ThermalKind::Canonical { beta } => (beta, h.matrix().clone()),
        ThermalKind::GrandCanonical { beta, mu } => {
            let n = number_operator(h.basis());
            (beta, h.matrix() - n.matrix() * C64::new(mu, 0.0))
        }
    };
    let l = probes.combination(v);
    let plus = thermal_expectations(&(&generator + &l * C64::new(step, 0.0)), beta, probes);
    let minus = thermal_expectations(&(&generator - &l * C64::new(step, 0.0)), beta, probes);
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * step)).collect())
}

/// Static response matrix: column `j` is the derivative along probe `j`.
pub fn static_response_matrix(h: &ManyBodyOperator, probes: &ProbeSet, kind: ThermalKind, step: f64) -> Result<RMat> {
    let p = probes.len();
    let cols = par::map_indexed(p, |j| {
        let mut v = vec![0.0; p];
        v[j] = 1.0;
        static_thermal_response(h, probes, kind, &v, step)
    });
    let mut m = RMat::zeros(p, p);
    for (j, c) in cols.into_iter().enumerate() {
        m.set_column(j, &DVector::from_vec(c?));
    }
    Ok(m)
}

/// Directions whose static response stays below `1e-7 * max_i ||Q_i||`.
pub fn static_kernel(h: &ManyBodyOperator, probes: &ProbeSet, kind: ThermalKind, step: f64) -> Result<NullSpace> {
    let m = static_response_matrix(h, probes, kind, step)?;
    Ok(null_space_abs(&m, 1e-7 * probes.scale()))
}
