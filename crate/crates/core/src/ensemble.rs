//! Ensemble weights and the extended degenerate structure built on them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fock::{number_operator, ManyBodyOperator, Sector};
use crate::spectrum::{diagonalize, SpectralDecomposition};

/// Weight-equality tolerance, relative to the largest weight.
pub const DEFAULT_TOL_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleKind {
    Pure,
    Custom,
    Canonical { beta: f64 },
    GrandCanonical { beta: f64, mu: f64 },
}

impl EnsembleKind {
    /// Weights are a function of the energy alone (thermal ensembles).
    pub fn is_energy_only(&self) -> bool {
        matches!(self, EnsembleKind::Canonical { .. } | EnsembleKind::GrandCanonical { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::Pure => "pure",
            EnsembleKind::Custom => "custom",
            EnsembleKind::Canonical { .. } => "canonical",
            EnsembleKind::GrandCanonical { .. } => "grand_canonical",
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            EnsembleKind::Canonical { beta } | EnsembleKind::GrandCanonical { beta, .. } => Some(*beta),
            _ => None,
        }
    }
}

/// Normalized, non-negative weights attached to the eigenstates of a spectrum.
#[derive(Debug, Clone)]
pub struct Ensemble {
    spectrum: Arc<SpectralDecomposition>,
    weights: Vec<f64>,
    kind: EnsembleKind,
    tol_weight: f64,
}

impl Ensemble {
    pub fn spectrum(&self) -> &Arc<SpectralDecomposition> {
        &self.spectrum
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn tol_weight(&self) -> f64 {
        self.tol_weight
    }

    pub fn with_tol_weight(mut self, tol: f64) -> Self {
        self.tol_weight = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn absolute_tol(&self) -> f64 {
        self.tol_weight * self.weights.iter().fold(0.0_f64, |a, &b| a.max(b))
    }

    /// Whether states `k` and `l` carry the same weight.
    ///
    /// For thermal kinds this is decided from the kind tag: Boltzmann weights are
    /// equal exactly when the energies are (or everywhere at infinite temperature),
    /// which stays correct after `exp` underflows to zero.
    pub fn equal_weights(&self, k: usize, l: usize) -> bool {
        match self.kind {
            EnsembleKind::Canonical { beta } | EnsembleKind::GrandCanonical { beta, .. } => {
                beta == 0.0 || self.spectrum.same_group(k, l)
            }
            _ => (self.weights[k] - self.weights[l]).abs() <= self.absolute_tol(),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::invalid("ensemble.beta", format!("must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

fn boltzmann(energies: &[f64], beta: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

/// Weight one on a non-degenerate ground state.
pub fn pure_ground_state(spec: &Arc<SpectralDecomposition>) -> Result<Ensemble> {
    let g = spec.degeneracy_groups()[0].len();
    if g > 1 {
        return Err(Error::invalid(
            "ensemble.kind",
            format!("ground state is {g}-fold degenerate; use custom weights over the degenerate manifold"),
        ));
    }
    let mut weights = vec![0.0; spec.dim()];
    weights[0] = 1.0;
    Ok(Ensemble {
        spectrum: spec.clone(),
        weights,
        kind: EnsembleKind::Pure,
        tol_weight: DEFAULT_TOL_WEIGHT,
    })
}

/// `w_K = exp(-beta (E_K - E_0)) / Z`.
pub fn canonical_weights(spec: &Arc<SpectralDecomposition>, beta: f64) -> Result<Ensemble> {
    check_beta(beta)?;
    Ok(Ensemble {
        spectrum: spec.clone(),
        weights: boltzmann(spec.energies(), beta),
        kind: EnsembleKind::Canonical { beta },
        tol_weight: DEFAULT_TOL_WEIGHT,
    })
}

/// `H - mu N`, rejecting Hamiltonians that do not conserve particle number.
pub fn shifted_generator(h: &ManyBodyOperator, mu: f64) -> Result<ManyBodyOperator> {
    if !mu.is_finite() {
        return Err(Error::invalid("ensemble.mu", "must be finite"));
    }
    let n = number_operator(h.basis());
    let comm = h.commutator_norm(&n)?;
    if comm > 1e-12 * h.matrix().norm().max(1.0) {
        return Err(Error::invalid(
            "model",
            format!("Hamiltonian does not conserve particle number (||[H, N]|| = {comm:e})"),
        ));
    }
    h.add_scaled(-mu, &n)
}

/// Diagonalize `H - mu N` on the full Fock space.
pub fn diagonalize_grand_canonical(
    h: &ManyBodyOperator,
    mu: f64,
    tol_energy: f64,
) -> Result<SpectralDecomposition> {
    if h.basis().sector() != Sector::Full {
        return Err(Error::invalid("sector", "grand canonical ensembles need the full Fock space"));
    }
    let shifted = shifted_generator(h, mu)?;
    Ok(diagonalize(&shifted, tol_energy)?.with_chemical_potential(mu))
}

/// `w_K = exp(-beta E'_K) / Z` over the spectrum of the shifted generator.
pub fn grand_canonical_weights(spec: &Arc<SpectralDecomposition>, beta: f64, mu: f64) -> Result<Ensemble> {
    check_beta(beta)?;
    if spec.generator().basis().sector() != Sector::Full {
        return Err(Error::invalid("sector", "grand canonical ensembles need the full Fock space"));
    }
    if spec.chemical_potential() != mu {
        return Err(Error::invalid(
            "ensemble.mu",
            format!(
                "spectrum was computed for mu = {}, not {mu}; use diagonalize_grand_canonical",
                spec.chemical_potential()
            ),
        ));
    }
    Ok(Ensemble {
        spectrum: spec.clone(),
        weights: boltzmann(spec.energies(), beta),
        kind: EnsembleKind::GrandCanonical { beta, mu },
        tol_weight: DEFAULT_TOL_WEIGHT,
    })
}

/// Normalized copy of user-supplied weights.
pub fn custom_weights(spec: &Arc<SpectralDecomposition>, w: &[f64]) -> Result<Ensemble> {
    if w.len() != spec.dim() {
        return Err(Error::invalid(
            "ensemble.weights",
            format!("{} weights for {} states", w.len(), spec.dim()),
        ));
    }
    if let Some(i) = w.iter().position(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid(
            format!("ensemble.weights[{i}]"),
            format!("weight {} is negative or not finite", w[i]),
        ));
    }
    let sum: f64 = w.iter().sum();
    if sum <= 0.0 {
        return Err(Error::invalid("ensemble.weights", "weights sum to zero"));
    }
    Ok(Ensemble {
        spectrum: spec.clone(),
        weights: w.iter().map(|x| x / sum).collect(),
        kind: EnsembleKind::Custom,
        tol_weight: DEFAULT_TOL_WEIGHT,
    })
}

/// Pairs `(K, L)` with `E_K > E_L` but `w_K > w_L` beyond tolerance.
pub fn check_monotone(ens: &Ensemble) -> Vec<(usize, usize)> {
    let spec = ens.spectrum();
    let mut out = Vec::new();
    for k in 1..ens.dim() {
        for l in 0..k {
            if spec.omega(k, l) > 0.0 && !ens.equal_weights(k, l) && ens.weight(k) > ens.weight(l) {
                out.push((k, l));
            }
        }
    }
    out
}

/// Per-state index sets `D(K)` (same energy or same weight) and
/// `D^r(K)` (same energy, different weight).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedDegenerateStructure {
    pub d: Vec<Vec<usize>>,
    pub dr: Vec<Vec<usize>>,
}

impl ExtendedDegenerateStructure {
    pub fn in_d(&self, k: usize, l: usize) -> bool {
        self.d[k].binary_search(&l).is_ok()
    }

    pub fn in_dr(&self, k: usize, l: usize) -> bool {
        self.dr[k].binary_search(&l).is_ok()
    }

    /// True when no state has a reduced degenerate partner.
    pub fn dr_is_empty(&self) -> bool {
        self.dr.iter().all(Vec::is_empty)
    }
}

pub fn extended_degenerate_structure(ens: &Ensemble) -> ExtendedDegenerateStructure {
    let spec = ens.spectrum();
    let n = ens.dim();
    let mut d = vec![Vec::new(); n];
    let mut dr = vec![Vec::new(); n];
    for k in 0..n {
        for l in 0..n {
            let same_energy = spec.same_group(k, l);
            let same_weight = ens.equal_weights(k, l);
            if same_energy || same_weight {
                d[k].push(l);
            }
            if same_energy && !same_weight {
                dr[k].push(l);
            }
        }
    }
    ExtendedDegenerateStructure { d, dr }
}
