//! Probe-operator families, ensemble 1RDMs and natural orbitals, and the commutant
//! of a Hamiltonian inside a probe span.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::fock::{
    apply_hop, one_body_operator, FockBasis, ManyBodyOperator, OneBodyCoefficients, Provenance, Spin,
};
use crate::linalg::{commutator, hermitian_norm, null_space_scaled, realify, CMat, NullSpace, RMat, C64, I, ONE, ZERO};
use crate::par;

/// Occupation tolerance for declaring natural occupations 0, 1 or degenerate.
pub const DEFAULT_TOL_OCC: f64 = 1e-8;
/// Relative singular-value threshold for null spaces.
pub const DEFAULT_TOL_RANK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanKind {
    SiteDensity,
    OneBodyFull,
    Custom,
}

#[derive(Debug, Clone)]
pub struct Probe {
    pub label: String,
    pub op: ManyBodyOperator,
}

/// Ordered list of Hermitian probe operators on a common basis.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    basis: Arc<FockBasis>,
    probes: Vec<Probe>,
    span_kind: SpanKind,
}

impl ProbeSet {
    pub fn new(basis: Arc<FockBasis>, probes: Vec<Probe>, span_kind: SpanKind) -> Result<Self> {
        for (i, p) in probes.iter().enumerate() {
            if probes[..i].iter().any(|q| q.label == p.label) {
                return Err(Error::invalid("probes", format!("duplicate probe label {}", p.label)));
            }
            if p.op.basis().as_ref() != basis.as_ref() {
                return Err(Error::invalid("probes", format!("probe {} is on a different basis", p.label)));
            }
        }
        Ok(ProbeSet {
            basis,
            probes,
            span_kind,
        })
    }

    /// Probes built from plain matrices (checked for Hermiticity).
    pub fn from_matrices(basis: &Arc<FockBasis>, items: Vec<(String, CMat)>) -> Result<Self> {
        let probes = items
            .into_iter()
            .map(|(label, m)| {
                Ok(Probe {
                    label,
                    op: ManyBodyOperator::from_matrix(basis.clone(), m, Provenance::Composite)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(basis.clone(), probes, SpanKind::Custom)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    pub fn span_kind(&self) -> SpanKind {
        self.span_kind
    }

    pub fn labels(&self) -> Vec<String> {
        self.probes.iter().map(|p| p.label.clone()).collect()
    }

    /// `sum_j v_j Q_j` as a matrix.
    pub fn combination(&self, v: &[f64]) -> CMat {
        assert_eq!(v.len(), self.len(), "direction length must match the probe count");
        let d = self.basis.dim();
        let mut out = CMat::zeros(d, d);
        for (p, &c) in self.probes.iter().zip(v) {
            if c != 0.0 {
                out += p.op.matrix() * C64::new(c, 0.0);
            }
        }
        out
    }

    /// `max_i ||Q_i||` (spectral norm), the natural scale for response tolerances.
    pub fn scale(&self) -> f64 {
        par::map_slice(&self.probes, |p| hermitian_norm(p.op.matrix()))
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// One-body coefficient matrices of every probe, if all probes are one-body.
    pub fn coefficient_matrices(&self) -> Option<Vec<CMat>> {
        self.probes
            .iter()
            .map(|p| match p.op.provenance() {
                Provenance::OneBody(h) => Some(h.matrix().clone()),
                _ => None,
            })
            .collect()
    }
}

/// `n(site) = sum_spin c^dagger c` for every site.
pub fn site_density_probes(basis: &Arc<FockBasis>) -> Result<ProbeSet> {
    let orb = basis.orbitals();
    if !orb.has_sites() {
        return Err(Error::invalid("probes", "site-density probes need site labels"));
    }
    let m = orb.len();
    let probes = orb
        .sites()
        .into_iter()
        .map(|s| {
            let mut h = CMat::zeros(m, m);
            for (p, l) in orb.labels().iter().enumerate() {
                if l.site == Some(s) {
                    h[(p, p)] = ONE;
                }
            }
            Ok(Probe {
                label: format!("n({s})"),
                op: one_body_operator(&OneBodyCoefficients::new(h)?, basis)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ProbeSet::new(basis.clone(), probes, SpanKind::SiteDensity)
}

/// The `M^2` Hermitian coefficient matrices spanning all one-body potentials:
/// diagonals `E_pp`, symmetric `E_pq + E_qp` and antisymmetric `i(E_pq - E_qp)` for `p < q`.
pub fn one_body_coefficient_basis(m: usize) -> Vec<(String, CMat)> {
    let mut out = Vec::with_capacity(m * m);
    for p in 0..m {
        let mut h = CMat::zeros(m, m);
        h[(p, p)] = ONE;
        out.push((format!("E_{p}_{p}"), h));
    }
    for p in 0..m {
        for q in p + 1..m {
            let mut h = CMat::zeros(m, m);
            h[(p, q)] = ONE;
            h[(q, p)] = ONE;
            out.push((format!("S_{p}_{q}"), h));
        }
    }
    for p in 0..m {
        for q in p + 1..m {
            let mut h = CMat::zeros(m, m);
            h[(p, q)] = I;
            h[(q, p)] = -I;
            out.push((format!("A_{p}_{q}"), h));
        }
    }
    out
}

/// Real expansion coefficients of a Hermitian `h` in [`one_body_coefficient_basis`].
pub fn expand_in_one_body_basis(h: &CMat) -> Vec<f64> {
    one_body_coefficient_basis(h.nrows())
        .iter()
        .map(|(_, b)| {
            (b.adjoint() * h).trace().re / (b.adjoint() * b).trace().re
        })
        .collect()
}

pub fn one_body_hermitian_basis(basis: &Arc<FockBasis>) -> ProbeSet {
    let probes = par::map_slice(&one_body_coefficient_basis(basis.n_orbitals()), |(label, h)| Probe {
        label: label.clone(),
        op: one_body_operator(&OneBodyCoefficients::new(h.clone()).unwrap(), basis).unwrap(),
    });
    ProbeSet::new(basis.clone(), probes, SpanKind::OneBodyFull).expect("labels are unique")
}

/// Custom probes from one-body coefficient matrices.
pub fn custom_probes(basis: &Arc<FockBasis>, items: Vec<(String, OneBodyCoefficients)>) -> Result<ProbeSet> {
    let probes = items
        .into_iter()
        .map(|(label, h)| {
            Ok(Probe {
                label,
                op: one_body_operator(&h, basis)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ProbeSet::new(basis.clone(), probes, SpanKind::Custom)
}

/// A named one-body symmetry generator and its expansion in the full one-body basis.
#[derive(Debug, Clone)]
pub struct SymmetryProbe {
    pub label: String,
    pub op: ManyBodyOperator,
    pub coefficients: Vec<f64>,
}

fn spin_pairs(basis: &FockBasis) -> Vec<(usize, usize)> {
    let orb = basis.orbitals();
    orb.sites()
        .into_iter()
        .filter_map(|s| Some((orb.index_of(s, Some(Spin::Up))?, orb.index_of(s, Some(Spin::Down))?)))
        .collect()
}

fn symmetry_coefficients(basis: &FockBasis) -> Vec<(String, CMat)> {
    let m = basis.n_orbitals();
    let mut out = vec![("N".to_string(), CMat::identity(m, m))];
    if !basis.orbitals().has_spin() || !basis.orbitals().has_sites() {
        return out;
    }
    let half = C64::new(0.5, 0.0);
    let mut sx = CMat::zeros(m, m);
    let mut sy = CMat::zeros(m, m);
    let mut sz = CMat::zeros(m, m);
    for (u, d) in spin_pairs(basis) {
        sx[(u, d)] = half;
        sx[(d, u)] = half;
        sy[(u, d)] = -I * half;
        sy[(d, u)] = I * half;
        sz[(u, u)] = half;
        sz[(d, d)] = -half;
    }
    out.push(("Sx".into(), sx));
    out.push(("Sy".into(), sy));
    out.push(("Sz".into(), sz));
    out
}

/// `N` and, when spin labels are present, `S_x`, `S_y`, `S_z`.
pub fn symmetry_probes(basis: &Arc<FockBasis>) -> Vec<SymmetryProbe> {
    symmetry_coefficients(basis)
        .into_iter()
        .map(|(label, h)| SymmetryProbe {
            coefficients: expand_in_one_body_basis(&h),
            op: one_body_operator(&OneBodyCoefficients::new(h).unwrap(), basis).unwrap(),
            label,
        })
        .collect()
}

/// Spin-resolved particle numbers `N_up`, `N_down` (empty without spin labels).
pub fn spin_number_probes(basis: &Arc<FockBasis>) -> Vec<SymmetryProbe> {
    let orb = basis.orbitals();
    if !orb.has_spin() {
        return Vec::new();
    }
    let m = orb.len();
    [(Spin::Up, "N_up"), (Spin::Down, "N_down")]
        .into_iter()
        .map(|(spin, label)| {
            let mut h = CMat::zeros(m, m);
            for (p, l) in orb.labels().iter().enumerate() {
                if l.spin == Some(spin) {
                    h[(p, p)] = ONE;
                }
            }
            SymmetryProbe {
                label: label.into(),
                coefficients: expand_in_one_body_basis(&h),
                op: one_body_operator(&OneBodyCoefficients::new(h).unwrap(), basis).unwrap(),
            }
        })
        .collect()
}

/// Ensemble 1RDM `gamma_pq = sum_K w_K <Psi_K| c_q^dagger c_p |Psi_K>` and its eigen-decomposition.
#[derive(Debug, Clone)]
pub struct NaturalOrbitalData {
    pub gamma: CMat,
    /// Natural occupations, descending.
    pub occupations: Vec<f64>,
    /// Natural orbitals as columns in the orbital basis.
    pub no_vectors: CMat,
    pub tol_occ: f64,
}

/// Density matrix `sum_K w_K |Psi_K><Psi_K|` in the Fock basis.
pub fn density_matrix(ens: &Ensemble) -> CMat {
    let v = ens.spectrum().eigenvectors();
    let d = ens.dim();
    let mut rho = CMat::zeros(d, d);
    for (k, &w) in ens.weights().iter().enumerate() {
        if w != 0.0 {
            let col = v.column(k);
            rho += col * col.adjoint() * C64::new(w, 0.0);
        }
    }
    rho
}

pub fn ensemble_1rdm(ens: &Ensemble) -> NaturalOrbitalData {
    one_rdm_from_density(&density_matrix(ens), ens.spectrum().generator().basis(), DEFAULT_TOL_OCC)
}

/// 1RDM of an arbitrary many-body density matrix.
pub fn one_rdm_from_density(rho: &CMat, basis: &FockBasis, tol_occ: f64) -> NaturalOrbitalData {
    let m = basis.n_orbitals();
    let mut gamma = CMat::zeros(m, m);
    for p in 0..m {
        for q in 0..m {
            let mut acc = ZERO;
            for (s, &w) in basis.states().iter().enumerate() {
                if let Some((sign, w2)) = apply_hop(q, p, w) {
                    if let Some(s2) = basis.index_of(w2) {
                        acc += rho[(s, s2)] * sign;
                    }
                }
            }
            gamma[(p, q)] = acc;
        }
    }
    let eig = SymmetricEigen::new(gamma.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let occupations = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut no_vectors = CMat::zeros(m, m);
    for (c, &i) in order.iter().enumerate() {
        no_vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    NaturalOrbitalData {
        gamma,
        occupations,
        no_vectors,
        tol_occ,
    }
}

/// Generators of potentials predicted to lie in the zero-temperature 1RDM kernel.
#[derive(Debug, Clone)]
pub struct PathologicalPrediction {
    pub generators: Vec<(String, OneBodyCoefficients)>,
    /// Interacting two-particle states have paired NOs whose couplings are also
    /// in the kernel; those are detected numerically, not predicted here.
    pub two_electron_pairing: bool,
}

fn block_generators(tag: &str, block: &[usize], u: &CMat, out: &mut Vec<(String, OneBodyCoefficients)>) {
    let m = u.nrows();
    let mut push = |label: String, g: CMat| {
        let h = u * g * u.adjoint();
        // symmetrize away rounding so the Hermiticity check is exact
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        out.push((label, OneBodyCoefficients::new(h).expect("Hermitian by construction")));
    };
    for &a in block {
        let mut g = CMat::zeros(m, m);
        g[(a, a)] = ONE;
        push(format!("{tag}:E_{a}_{a}"), g);
    }
    for (i, &a) in block.iter().enumerate() {
        for &b in &block[i + 1..] {
            let mut g = CMat::zeros(m, m);
            g[(a, b)] = ONE;
            g[(b, a)] = ONE;
            push(format!("{tag}:S_{a}_{b}"), g);
            let mut g = CMat::zeros(m, m);
            g[(a, b)] = I;
            g[(b, a)] = -I;
            push(format!("{tag}:A_{a}_{b}"), g);
        }
    }
}

/// Couplings inside the empty-NO block, the fully-occupied block and, for
/// non-interacting systems, inside blocks of degenerate fractional occupations.
pub fn predict_pathological_generators(
    nodata: &NaturalOrbitalData,
    interacting: bool,
    n_particles: Option<usize>,
) -> PathologicalPrediction {
    let n = &nodata.occupations;
    let tol = nodata.tol_occ;
    let empty: Vec<usize> = (0..n.len()).filter(|&k| n[k] <= tol).collect();
    let full: Vec<usize> = (0..n.len()).filter(|&k| n[k] >= 1.0 - tol).collect();
    let mut out = Vec::new();
    if !full.is_empty() {
        block_generators("occupied", &full, &nodata.no_vectors, &mut out);
    }
    if !empty.is_empty() {
        block_generators("unoccupied", &empty, &nodata.no_vectors, &mut out);
    }
    if !interacting {
        let frac: Vec<usize> = (0..n.len()).filter(|&k| n[k] > tol && n[k] < 1.0 - tol).collect();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for &k in &frac {
            match blocks.last_mut() {
                Some(b) if (n[*b.last().unwrap()] - n[k]).abs() <= tol => b.push(k),
                _ => blocks.push(vec![k]),
            }
        }
        for (i, b) in blocks.iter().filter(|b| b.len() > 1).enumerate() {
            block_generators(&format!("degenerate{i}"), b, &nodata.no_vectors, &mut out);
        }
    }
    PathologicalPrediction {
        generators: out,
        two_electron_pairing: interacting && n_particles == Some(2),
    }
}

/// Realified `[H, Q_j]` for every probe as the columns of a real matrix.
pub fn commutator_map(h: &ManyBodyOperator, probes: &ProbeSet) -> RMat {
    let cols = par::map_slice(probes.probes(), |p| {
        let c = commutator(h.matrix(), p.op.matrix());
        realify(c.as_slice())
    });
    let rows = cols.first().map_or(0, Vec::len);
    let mut a = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        a.set_column(j, &nalgebra::DVector::from_column_slice(c));
    }
    a
}

/// Real directions `v` with `[H, sum_j v_j Q_j] = 0`.
pub fn commutant_basis(h: &ManyBodyOperator, probes: &ProbeSet, tol_rank: f64) -> Result<NullSpace> {
    if h.basis().as_ref() != probes.basis().as_ref() {
        return Err(Error::invalid("probes", "probes and Hamiltonian live on different bases"));
    }
    let reference = hermitian_norm(h.matrix()) * probes.scale();
    Ok(null_space_scaled(&commutator_map(h, probes), tol_rank, reference))
}
