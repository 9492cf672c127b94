//! Exact diagonalization with tolerance-based degeneracy grouping.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::fock::ManyBodyOperator;
use crate::linalg::{hermitian_norm, CMat, C64};

pub const DEFAULT_TOL_ENERGY: f64 = 1e-9;

/// Eigenpairs of a Hermitian generator, ascending, with degenerate groups.
///
/// Energies inside a degeneracy group are snapped to the group mean, so
/// `omega(k, l)` is exactly zero for degenerate partners.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    generator: ManyBodyOperator,
    chemical_potential: f64,
    energies: Vec<f64>,
    eigenvectors: CMat,
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    tol_energy: f64,
    max_residual: f64,
}

/// Diagonalize `h`; `tol_energy` is the relative degeneracy tolerance.
pub fn diagonalize(h: &ManyBodyOperator, tol_energy: f64) -> Result<SpectralDecomposition> {
    if !(tol_energy > 0.0) {
        return Err(Error::invalid("tol_energy", "must be positive"));
    }
    let dim = h.dim();
    if dim == 0 {
        return Err(Error::invalid("basis", "empty Hilbert space"));
    }
    let eig = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, 100_000).ok_or_else(|| {
        Error::Eigensolver {
            message: "QR iteration did not converge".into(),
            max_residual: f64::NAN,
        }
    })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let raw: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(dim, dim);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }

    let norm_h = hermitian_norm(h.matrix()).max(f64::MIN_POSITIVE);
    let hv = h.matrix() * &vecs;
    let max_residual = (0..dim)
        .map(|k| (hv.column(k) - vecs.column(k) * C64::new(raw[k], 0.0)).norm())
        .fold(0.0, f64::max);
    let gram_err = (vecs.adjoint() * &vecs - CMat::identity(dim, dim)).norm();
    if max_residual > 1e-10 * norm_h.max(1.0) || gram_err > 1e-12 * (dim as f64).max(1.0) {
        return Err(Error::Eigensolver {
            message: format!("eigenpairs failed verification (orthonormality error {gram_err:e})"),
            max_residual,
        });
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 0..dim {
        let joins = k > 0 && raw[k] - raw[k - 1] <= tol_energy * raw[k - 1].abs().max(1.0);
        if joins {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
    }
    let mut energies = raw.clone();
    let mut group_of = vec![0; dim];
    for (g, members) in groups.iter().enumerate() {
        let mean = members.iter().map(|&k| raw[k]).sum::<f64>() / members.len() as f64;
        for &k in members {
            energies[k] = mean;
            group_of[k] = g;
        }
    }

    Ok(SpectralDecomposition {
        generator: h.clone(),
        chemical_potential: 0.0,
        energies,
        eigenvectors: vecs,
        groups,
        group_of,
        tol_energy,
        max_residual,
    })
}

impl SpectralDecomposition {
    pub(crate) fn with_chemical_potential(mut self, mu: f64) -> Self {
        self.chemical_potential = mu;
        self
    }

    /// The operator that was diagonalized (`H - mu N` for grand canonical use).
    pub fn generator(&self) -> &ManyBodyOperator {
        &self.generator
    }

    /// Chemical potential absorbed into the generator (zero when unshifted).
    pub fn chemical_potential(&self) -> f64 {
        self.chemical_potential
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.energies[k]
    }

    /// Eigenvectors as columns, in the order of [`Self::energies`].
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn degeneracy_groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, k: usize) -> usize {
        self.group_of[k]
    }

    pub fn same_group(&self, k: usize, l: usize) -> bool {
        self.group_of[k] == self.group_of[l]
    }

    pub fn tol_energy(&self) -> f64 {
        self.tol_energy
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// `E_k - E_l`, exactly zero for degenerate partners.
    pub fn omega(&self, k: usize, l: usize) -> f64 {
        if self.same_group(k, l) {
            0.0
        } else {
            self.energies[k] - self.energies[l]
        }
    }

    /// Largest excitation energy `E_max - E_min`.
    pub fn bandwidth(&self) -> f64 {
        self.energies[self.dim() - 1] - self.energies[0]
    }

    /// `<Psi_k| op |Psi_l>` for every pair, as a matrix.
    pub fn in_eigenbasis(&self, op: &CMat) -> CMat {
        self.eigenvectors.adjoint() * op * &self.eigenvectors
    }
}

/// Excitation energies `E_k - E_l` for `k > l` in packed lower-triangular storage.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    n: usize,
    values: Vec<f64>,
}

impl GapTable {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        assert!(k > l && k < self.n, "gap index ({k}, {l}) requires k > l");
        self.values[k * (k - 1) / 2 + l]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(k, l, omega)` triples with `k > l`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..self.n).flat_map(move |k| (0..k).map(move |l| (k, l, self.get(k, l))))
    }
}

pub fn excitation_gaps(spec: &SpectralDecomposition) -> GapTable {
    let n = spec.dim();
    let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for k in 1..n {
        for l in 0..k {
            values.push(spec.omega(k, l));
        }
    }
    GapTable { n, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_model, model_basis, ModelSpec, Sector};

    fn dimer(sector: Sector) -> ManyBodyOperator {
        let spec = ModelSpec::HubbardChain {
            sites: 2,
            t: 1.0,
            u: 2.0,
            periodic: false,
        };
        build_model(&spec, &model_basis(&spec, sector).unwrap()).unwrap()
    }

    #[test]
    fn dimer_singlet_sector_energies() {
        let s = diagonalize(&dimer(Sector::FixedNSz { n: 2, twice_sz: 0 }), DEFAULT_TOL_ENERGY).unwrap();
        let r5 = 5f64.sqrt();
        let expected = [1.0 - r5, 0.0, 2.0, 1.0 + r5];
        for (e, x) in s.energies().iter().zip(expected) {
            assert!((e - x).abs() < 1e-12, "{e} vs {x}");
        }
        let gaps = excitation_gaps(&s);
        assert!((gaps.get(1, 0) - (r5 - 1.0)).abs() < 1e-12);
        assert_eq!(gaps.get(3, 0), s.energy(3) - s.energy(0));
        assert_eq!(gaps.len(), 6);
    }

    #[test]
    fn triplet_grouped() {
        let s = diagonalize(&dimer(Sector::FixedN(2)), DEFAULT_TOL_ENERGY).unwrap();
        assert_eq!(s.dim(), 6);
        let sizes: Vec<usize> = s.degeneracy_groups().iter().map(|g| g.len()).collect();
        assert_eq!(sizes, vec![1, 3, 1, 1]);
        let gaps = excitation_gaps(&s);
        assert_eq!(gaps.get(2, 1), 0.0);
        assert_eq!(gaps.get(3, 1), 0.0);
    }

    #[test]
    fn zero_operator_single_group() {
        let h = dimer(Sector::FixedN(2)).scaled(0.0);
        let s = diagonalize(&h, DEFAULT_TOL_ENERGY).unwrap();
        assert!(s.energies().iter().all(|&e| e == 0.0));
        assert_eq!(s.degeneracy_groups().len(), 1);
    }

    #[test]
    fn reconstruction_and_trace() {
        let h = dimer(Sector::Full);
        let s = diagonalize(&h, DEFAULT_TOL_ENERGY).unwrap();
        let v = s.eigenvectors();
        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            s.dim(),
            s.energies().iter().map(|&e| C64::new(e, 0.0)),
        ));
        let rec = v * d * v.adjoint();
        let scale = h.matrix().norm();
        assert!((rec - h.matrix()).norm() <= 1e-10 * scale);
        let tr: f64 = s.energies().iter().sum();
        assert!((tr - h.matrix().trace().re).abs() <= 1e-10 * scale);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(diagonalize(&dimer(Sector::FixedN(1)), 0.0).is_err());
    }
}
