//! Occupation-number bases and second-quantized operators.
//!
//! Orbital `p` is bit `p` of an occupation word. Creation and annihilation signs
//! count the occupied orbitals strictly below `p`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_deviation, max_abs, CMat, C64, ONE, ZERO};

/// Largest supported number of spin-orbitals (one `u64` word per state).
pub const MAX_ORBITALS: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    /// Twice the spin projection.
    pub fn twice_sz(self) -> i32 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrbitalLabel {
    pub site: Option<usize>,
    pub spin: Option<Spin>,
}

impl fmt::Display for OrbitalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.site, self.spin) {
            (Some(s), Some(Spin::Up)) => write!(f, "{s}u"),
            (Some(s), Some(Spin::Down)) => write!(f, "{s}d"),
            (Some(s), None) => write!(f, "{s}"),
            (None, Some(Spin::Up)) => write!(f, "u"),
            (None, Some(Spin::Down)) => write!(f, "d"),
            (None, None) => write!(f, "?"),
        }
    }
}

/// The one-particle orbitals of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalSet {
    labels: Vec<OrbitalLabel>,
}

impl OrbitalSet {
    pub fn new(labels: Vec<OrbitalLabel>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("orbitals", "at least one orbital is required"));
        }
        if labels.len() > MAX_ORBITALS {
            return Err(Error::invalid(
                "orbitals",
                format!("{} orbitals exceed the limit of {MAX_ORBITALS}", labels.len()),
            ));
        }
        for (i, a) in labels.iter().enumerate() {
            if a.site.is_none() && a.spin.is_none() {
                continue;
            }
            if labels[..i].contains(a) {
                return Err(Error::invalid("orbitals", format!("duplicate orbital label {a}")));
            }
        }
        Ok(OrbitalSet { labels })
    }

    /// Two spin-orbitals per site; orbital `2 * site + (0 | 1)` for up/down.
    pub fn spinful(sites: usize) -> Result<Self> {
        Self::new(
            (0..sites)
                .flat_map(|s| {
                    [Spin::Up, Spin::Down].map(|spin| OrbitalLabel {
                        site: Some(s),
                        spin: Some(spin),
                    })
                })
                .collect(),
        )
    }

    /// One orbital per site.
    pub fn spinless(sites: usize) -> Result<Self> {
        Self::new(
            (0..sites)
                .map(|s| OrbitalLabel {
                    site: Some(s),
                    spin: None,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[OrbitalLabel] {
        &self.labels
    }

    pub fn has_spin(&self) -> bool {
        self.labels.iter().all(|l| l.spin.is_some())
    }

    pub fn has_sites(&self) -> bool {
        self.labels.iter().all(|l| l.site.is_some())
    }

    /// Distinct site indices in ascending order.
    pub fn sites(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.labels.iter().filter_map(|l| l.site).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn index_of(&self, site: usize, spin: Option<Spin>) -> Option<usize> {
        self.labels
            .iter()
            .position(|l| l.site == Some(site) && l.spin == spin)
    }
}

/// Which occupation words belong to a Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Full,
    FixedN(usize),
    /// Fixed particle number and spin projection (stored as `2 Sz`).
    FixedNSz { n: usize, twice_sz: i32 },
}

impl Sector {
    pub fn particle_number(&self) -> Option<usize> {
        match self {
            Sector::Full => None,
            Sector::FixedN(n) | Sector::FixedNSz { n, .. } => Some(*n),
        }
    }
}

/// Sorted occupation words of a sector.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    orbitals: OrbitalSet,
    sector: Sector,
    states: Vec<u64>,
}

impl FockBasis {
    pub fn build(orbitals: OrbitalSet, sector: Sector) -> Result<Self> {
        let m = orbitals.len();
        if let Some(n) = sector.particle_number() {
            if n > m {
                return Err(Error::invalid(
                    "sector.N",
                    format!("particle number {n} exceeds the {m} available orbitals"),
                ));
            }
        }
        if let Sector::FixedNSz { n, twice_sz } = sector {
            if !orbitals.has_spin() {
                return Err(Error::invalid(
                    "sector.Sz",
                    "a spin-projection sector needs spin labels on every orbital",
                ));
            }
            if (n as i32 - twice_sz).rem_euclid(2) != 0 || twice_sz.unsigned_abs() as usize > n {
                return Err(Error::invalid(
                    "sector.Sz",
                    format!("Sz = {} is incompatible with N = {n}", twice_sz as f64 / 2.0),
                ));
            }
        }
        let spin_of: Vec<i32> = orbitals
            .labels()
            .iter()
            .map(|l| l.spin.map_or(0, Spin::twice_sz))
            .collect();
        let twice_sz_of = |w: u64| -> i32 {
            (0..m).filter(|&p| w >> p & 1 == 1).map(|p| spin_of[p]).sum()
        };
        let states: Vec<u64> = (0..1u64 << m)
            .filter(|&w| match sector {
                Sector::Full => true,
                Sector::FixedN(n) => w.count_ones() as usize == n,
                Sector::FixedNSz { n, twice_sz } => {
                    w.count_ones() as usize == n && twice_sz_of(w) == twice_sz
                }
            })
            .collect();
        Ok(FockBasis {
            orbitals,
            sector,
            states,
        })
    }

    pub fn orbitals(&self) -> &OrbitalSet {
        &self.orbitals
    }

    pub fn n_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, word: u64) -> Option<usize> {
        self.states.binary_search(&word).ok()
    }

    /// Occupation word as a string with orbital 0 first, e.g. `1000`.
    pub fn ket(&self, idx: usize) -> String {
        let w = self.states[idx];
        (0..self.n_orbitals())
            .map(|p| if w >> p & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

fn sign_below(p: usize, word: u64) -> f64 {
    let below = word & ((1u64 << p) - 1);
    if below.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `c_p^dagger |word>`: `None` when orbital `p` is already occupied.
pub fn apply_creation(p: usize, word: u64) -> Option<(f64, u64)> {
    if word >> p & 1 == 1 {
        None
    } else {
        Some((sign_below(p, word), word | 1 << p))
    }
}

/// `c_p |word>`: `None` when orbital `p` is empty.
pub fn apply_annihilation(p: usize, word: u64) -> Option<(f64, u64)> {
    if word >> p & 1 == 0 {
        None
    } else {
        Some((sign_below(p, word), word & !(1 << p)))
    }
}

/// `c_p^dagger c_q |word>`.
pub fn apply_hop(p: usize, q: usize, word: u64) -> Option<(f64, u64)> {
    let (s1, w1) = apply_annihilation(q, word)?;
    let (s2, w2) = apply_creation(p, w1)?;
    Some((s1 * s2, w2))
}

/// Hermitian one-particle coefficient matrix `h_pq` of `sum_pq h_pq c_p^dagger c_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyCoefficients(CMat);

impl OneBodyCoefficients {
    pub fn new(h: CMat) -> Result<Self> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(Error::invalid("h", "coefficient matrix must be square and non-empty"));
        }
        let dev = hermitian_deviation(&h);
        if dev > 1e-14 * max_abs(&h).max(1.0) {
            return Err(Error::invalid(
                "h",
                format!("coefficient matrix is not Hermitian (deviation {dev:e})"),
            ));
        }
        Ok(OneBodyCoefficients(h))
    }

    pub fn from_real(h: &nalgebra::DMatrix<f64>) -> Result<Self> {
        Self::new(h.map(|x| C64::new(x, 0.0)))
    }

    pub fn identity(m: usize) -> Self {
        OneBodyCoefficients(CMat::identity(m, m))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }
}

/// Where an operator came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    OneBody(OneBodyCoefficients),
    TwoBody,
    Composite,
}

/// Hermitian operator represented densely on a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct ManyBodyOperator {
    basis: Arc<FockBasis>,
    matrix: CMat,
    provenance: Provenance,
}

impl ManyBodyOperator {
    pub fn from_matrix(basis: Arc<FockBasis>, matrix: CMat, provenance: Provenance) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::invalid(
                "matrix",
                format!(
                    "{}x{} matrix on a basis of dimension {}",
                    matrix.nrows(),
                    matrix.ncols(),
                    basis.dim()
                ),
            ));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > 1e-12 * max_abs(&matrix).max(1.0) {
            return Err(Error::invalid(
                "matrix",
                format!("operator is not Hermitian (deviation {dev:e})"),
            ));
        }
        Ok(ManyBodyOperator {
            basis,
            matrix,
            provenance,
        })
    }

    pub fn zero(basis: Arc<FockBasis>) -> Self {
        let d = basis.dim();
        ManyBodyOperator {
            basis,
            matrix: CMat::zeros(d, d),
            provenance: Provenance::Composite,
        }
    }

    pub fn identity(basis: Arc<FockBasis>) -> Self {
        let d = basis.dim();
        ManyBodyOperator {
            basis,
            matrix: CMat::identity(d, d),
            provenance: Provenance::Composite,
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check_same_basis(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis {
            Ok(())
        } else {
            Err(Error::invalid("basis", "operators live on different bases"))
        }
    }

    /// `self + alpha * other`; one-body provenance is kept when both sides have it.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Result<Self> {
        self.check_same_basis(other)?;
        let provenance = match (&self.provenance, &other.provenance) {
            (Provenance::OneBody(a), Provenance::OneBody(b)) => Provenance::OneBody(
                OneBodyCoefficients(a.matrix() + b.matrix() * C64::new(alpha, 0.0)),
            ),
            _ => Provenance::Composite,
        };
        Ok(ManyBodyOperator {
            basis: self.basis.clone(),
            matrix: &self.matrix + &other.matrix * C64::new(alpha, 0.0),
            provenance,
        })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let provenance = match &self.provenance {
            Provenance::OneBody(h) => {
                Provenance::OneBody(OneBodyCoefficients(h.matrix() * C64::new(alpha, 0.0)))
            }
            p => p.clone(),
        };
        ManyBodyOperator {
            basis: self.basis.clone(),
            matrix: &self.matrix * C64::new(alpha, 0.0),
            provenance,
        }
    }

    /// Frobenius norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &Self) -> Result<f64> {
        self.check_same_basis(other)?;
        Ok(crate::linalg::commutator(&self.matrix, &other.matrix).norm())
    }
}

/// `sum_pq h_pq c_p^dagger c_q` on `basis` (projected onto the sector).
pub fn one_body_operator(h: &OneBodyCoefficients, basis: &Arc<FockBasis>) -> Result<ManyBodyOperator> {
    let m = basis.n_orbitals();
    if h.dim() != m {
        return Err(Error::invalid(
            "h",
            format!("{}x{} coefficients for {m} orbitals", h.dim(), h.dim()),
        ));
    }
    let d = basis.dim();
    let mut mat = CMat::zeros(d, d);
    let hm = h.matrix();
    for (col, &w) in basis.states().iter().enumerate() {
        for q in 0..m {
            if w >> q & 1 == 0 {
                continue;
            }
            for p in 0..m {
                let c = hm[(p, q)];
                if c == ZERO {
                    continue;
                }
                if let Some((s, w2)) = apply_hop(p, q, w) {
                    if let Some(row) = basis.index_of(w2) {
                        mat[(row, col)] += c * s;
                    }
                }
            }
        }
    }
    Ok(ManyBodyOperator {
        basis: basis.clone(),
        matrix: mat,
        provenance: Provenance::OneBody(h.clone()),
    })
}

/// Total particle-number operator.
pub fn number_operator(basis: &Arc<FockBasis>) -> ManyBodyOperator {
    one_body_operator(&OneBodyCoefficients::identity(basis.n_orbitals()), basis)
        .expect("identity coefficients match the basis")
}

/// One term `u * n_p * n_q` of a density-density interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPair {
    pub p: usize,
    pub q: usize,
    pub u: f64,
}

/// Diagonal operator `sum u_pq n_p n_q` (with `n_p n_p = n_p`).
pub fn two_body_density_interaction(
    pairs: &[DensityPair],
    basis: &Arc<FockBasis>,
) -> Result<ManyBodyOperator> {
    let m = basis.n_orbitals();
    for (i, pr) in pairs.iter().enumerate() {
        if pr.p >= m || pr.q >= m {
            return Err(Error::invalid(
                format!("interaction[{i}]"),
                format!("orbital index out of range for {m} orbitals"),
            ));
        }
        if !pr.u.is_finite() {
            return Err(Error::invalid(format!("interaction[{i}]"), "coefficient is not finite"));
        }
    }
    let d = basis.dim();
    let mut mat = CMat::zeros(d, d);
    for (i, &w) in basis.states().iter().enumerate() {
        let v: f64 = pairs
            .iter()
            .filter(|pr| w >> pr.p & 1 == 1 && w >> pr.q & 1 == 1)
            .map(|pr| pr.u)
            .sum();
        mat[(i, i)] = C64::new(v, 0.0);
    }
    Ok(ManyBodyOperator {
        basis: basis.clone(),
        matrix: mat,
        provenance: Provenance::TwoBody,
    })
}

/// Named lattice models.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// Spinful Hubbard chain: hopping `-t` between neighbours, on-site `U n_up n_down`.
    HubbardChain {
        sites: usize,
        t: f64,
        u: f64,
        periodic: bool,
    },
    /// Arbitrary one-body part plus density-density interaction.
    Custom {
        sites: usize,
        spinful: bool,
        h: OneBodyCoefficients,
        interaction: Vec<DensityPair>,
    },
}

impl ModelSpec {
    pub fn orbitals(&self) -> Result<OrbitalSet> {
        match self {
            ModelSpec::HubbardChain { sites, .. } => {
                if *sites == 0 {
                    return Err(Error::invalid("model.sites", "must be at least 1"));
                }
                OrbitalSet::spinful(*sites)
            }
            ModelSpec::Custom { sites, spinful, .. } => {
                if *sites == 0 {
                    return Err(Error::invalid("model.sites", "must be at least 1"));
                }
                if *spinful {
                    OrbitalSet::spinful(*sites)
                } else {
                    OrbitalSet::spinless(*sites)
                }
            }
        }
    }

    /// Coefficients of the one-body part.
    pub fn one_body(&self) -> Result<OneBodyCoefficients> {
        match self {
            ModelSpec::HubbardChain {
                sites, t, periodic, ..
            } => {
                if !t.is_finite() {
                    return Err(Error::invalid("model.t", "must be finite"));
                }
                let m = 2 * sites;
                let mut h = CMat::zeros(m, m);
                let mut bonds: Vec<(usize, usize)> = (1..*sites).map(|i| (i - 1, i)).collect();
                // a ring needs at least three sites to add a distinct bond
                if *periodic && *sites > 2 {
                    bonds.push((sites - 1, 0));
                }
                for (a, b) in bonds {
                    for s in 0..2 {
                        h[(2 * a + s, 2 * b + s)] -= C64::new(*t, 0.0);
                        h[(2 * b + s, 2 * a + s)] -= C64::new(*t, 0.0);
                    }
                }
                OneBodyCoefficients::new(h)
            }
            ModelSpec::Custom {
                sites, spinful, h, ..
            } => {
                let m = if *spinful { 2 * sites } else { *sites };
                if h.dim() != m {
                    return Err(Error::invalid(
                        "model.h",
                        format!("expected a {m}x{m} matrix, got {0}x{0}", h.dim()),
                    ));
                }
                Ok(h.clone())
            }
        }
    }

    pub fn interaction(&self) -> Result<Vec<DensityPair>> {
        match self {
            ModelSpec::HubbardChain { sites, u, .. } => {
                if !u.is_finite() {
                    return Err(Error::invalid("model.U", "must be finite"));
                }
                if *u == 0.0 {
                    return Ok(Vec::new());
                }
                Ok((0..*sites)
                    .map(|s| DensityPair {
                        p: 2 * s,
                        q: 2 * s + 1,
                        u: *u,
                    })
                    .collect())
            }
            ModelSpec::Custom { interaction, .. } => Ok(interaction.clone()),
        }
    }

    /// True when the two-body part vanishes identically.
    pub fn is_interacting(&self) -> bool {
        match self {
            ModelSpec::HubbardChain { u, .. } => *u != 0.0,
            ModelSpec::Custom { interaction, .. } => interaction.iter().any(|p| p.u != 0.0),
        }
    }
}

/// Build the model's basis for `sector`.
pub fn model_basis(spec: &ModelSpec, sector: Sector) -> Result<Arc<FockBasis>> {
    Ok(Arc::new(FockBasis::build(spec.orbitals()?, sector)?))
}

/// Assemble the Hamiltonian of `spec` on `basis`.
pub fn build_model(spec: &ModelSpec, basis: &Arc<FockBasis>) -> Result<ManyBodyOperator> {
    let orbitals = spec.orbitals()?;
    if orbitals != *basis.orbitals() {
        return Err(Error::invalid("model", "basis orbitals do not match the model"));
    }
    let kinetic = one_body_operator(&spec.one_body()?, basis)?;
    let pairs = spec.interaction()?;
    if pairs.is_empty() {
        return Ok(kinetic);
    }
    let interaction = two_body_density_interaction(&pairs, basis)?;
    let mut h = kinetic.add_scaled(1.0, &interaction)?;
    h.provenance = Provenance::Composite;
    Ok(h)
}

/// Matrix of `c_p^dagger c_q` on the full Fock space of `m` orbitals (test helper,
/// also used by the 1RDM).
pub fn hop_matrix(p: usize, q: usize, basis: &FockBasis) -> CMat {
    let d = basis.dim();
    let mut mat = CMat::zeros(d, d);
    for (col, &w) in basis.states().iter().enumerate() {
        if let Some((s, w2)) = apply_hop(p, q, w) {
            if let Some(row) = basis.index_of(w2) {
                mat[(row, col)] = ONE * s;
            }
        }
    }
    mat
}
