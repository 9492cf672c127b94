//! Time-domain check of the linear response: propagate every ensemble member under a
//! weak pulse and compare with the Lehmann convolution.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::fock::ManyBodyOperator;
use crate::linalg::{orth, CMat, RMat, C64};
use crate::par;
use crate::probes::ProbeSet;
use crate::response_kernel::ResponseSetup;

pub const DEFAULT_AMPLITUDE: f64 = 1e-4;
pub const MIN_STEPS: usize = 100;
pub const STEPS_PER_PERIOD: f64 = 20.0;
/// Kernel directions must stay below this multiple of `max_i ||Q_i||` in `max_t |dQ| / lambda`.
pub const KERNEL_RESPONSE_TOL: f64 = 1e-6;
/// Directions outside the kernel must reach this multiple of `max_i ||Q_i||`.
pub const NON_KERNEL_RESPONSE_MIN: f64 = 1e-2;
pub const CONVOLUTION_REL_TOL: f64 = 1e-3;

/// Members are propagated in fixed-size chunks so the summation order does not depend
/// on the thread count.
const MEMBER_CHUNK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseShape {
    Sinusoid { omega: f64 },
    Gaussian { center: f64, width: f64 },
    Step,
}

impl PulseShape {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            PulseShape::Sinusoid { omega } => (omega * t).sin(),
            PulseShape::Gaussian { center, width } => (-(t - center).powi(2) / (2.0 * width * width)).exp(),
            PulseShape::Step => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `dv_j(t) = amplitude * f(t) * direction_j` on the grid `t_m = m t_end / n_steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub amplitude: f64,
    pub direction: Vec<f64>,
    pub t_end: f64,
    pub n_steps: usize,
}

impl PulseSpec {
    pub fn new(shape: PulseShape, amplitude: f64, direction: Vec<f64>, t_end: f64, n_steps: usize) -> Result<Self> {
        let p = PulseSpec {
            shape,
            amplitude,
            direction,
            t_end,
            n_steps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitude == 0.0 || !self.amplitude.is_finite() {
            return Err(Error::invalid("pulse.amplitude", "must be finite and nonzero"));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::invalid("pulse.t_end", "must be positive"));
        }
        if self.n_steps < MIN_STEPS {
            return Err(Error::invalid("pulse.n_steps", format!("must be at least {MIN_STEPS}")));
        }
        if self.direction.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("pulse.direction", "entries must be finite"));
        }
        match self.shape {
            PulseShape::Sinusoid { omega } if !omega.is_finite() => {
                Err(Error::invalid("pulse.shape.omega", "must be finite"))
            }
            PulseShape::Gaussian { width, center } if !(width > 0.0) || !center.is_finite() => {
                Err(Error::invalid("pulse.shape.width", "width must be positive and center finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|m| m as f64 * self.dt()).collect()
    }

    pub fn with_direction(&self, direction: Vec<f64>) -> Self {
        PulseSpec {
            direction,
            ..self.clone()
        }
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        PulseSpec {
            amplitude,
            ..self.clone()
        }
    }
}

/// Smallest step count giving `STEPS_PER_PERIOD` steps per period of `omega_max`.
pub fn required_steps(omega_max: f64, t_end: f64) -> usize {
    ((STEPS_PER_PERIOD * t_end * omega_max / (2.0 * PI)).ceil() as usize).max(MIN_STEPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMethod {
    Propagation,
    Convolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseTrajectory {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `delta_q[i][m]` for probe `i` at `times[m]`.
    pub delta_q: Vec<Vec<f64>>,
    pub pulse: PulseSpec,
    pub method: ResponseMethod,
    /// Largest `| ||psi_K(t)|| - 1 |` over members and times (zero for convolutions).
    pub max_norm_drift: f64,
}

impl ResponseTrajectory {
    /// `max_{i,t} |dQ_i(t)|`.
    pub fn max_abs(&self) -> f64 {
        self.delta_q.iter().flatten().fold(0.0_f64, |a, b| a.max(b.abs()))
    }

    /// `||self - other||_2 / ||other||_2` over all probes and times.
    pub fn relative_l2(&self, other: &ResponseTrajectory) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in self.delta_q.iter().flatten().zip(other.delta_q.iter().flatten()) {
            num += (a - b) * (a - b);
            den += b * b;
        }
        if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (num / den).sqrt()
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| Error::invalid("output.trajectory", e.to_string());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().cloned());
        out.write_record(&header).map_err(io)?;
        for (m, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.14e}")];
            row.extend(self.delta_q.iter().map(|q| format!("{:.14e}", q[m])));
            out.write_record(&row).map_err(io)?;
        }
        out.flush().map_err(|e| Error::invalid("output.trajectory", e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::invalid("output.trajectory", e.to_string()))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        crate::write_atomic(path, text.as_bytes())
    }
}

/// Nonzero entries of a dense operator.
#[derive(Debug, Clone)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &CMat) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                if z.re != 0.0 || z.im != 0.0 {
                    entries.push((r, c, z));
                }
            }
        }
        SparseOp { entries }
    }

    /// `out += alpha * A x`.
    fn apply_add(&self, alpha: C64, x: &DVector<C64>, out: &mut DVector<C64>) {
        for &(r, c, z) in &self.entries {
            out[r] += alpha * z * x[c];
        }
    }

    fn expectation(&self, x: &DVector<C64>) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(r, c, z) in &self.entries {
            acc += x[r].conj() * z * x[c];
        }
        acc.re
    }
}

/// Time-dependent generator `H0 - c + lambda f(t) L`.
struct Generator<'a> {
    h0: &'a SparseOp,
    shift: f64,
    l: &'a SparseOp,
    amplitude: f64,
    shape: PulseShape,
}

impl Generator<'_> {
    /// `-i H(t) x`.
    fn rhs(&self, t: f64, x: &DVector<C64>) -> DVector<C64> {
        let mi = C64::new(0.0, -1.0);
        let mut out = x * C64::new(0.0, self.shift);
        self.h0.apply_add(mi, x, &mut out);
        let f = self.amplitude * self.shape.value(t);
        if f != 0.0 {
            self.l.apply_add(mi * f, x, &mut out);
        }
        out
    }

    fn rk4_step(&self, t: f64, dt: f64, x: &DVector<C64>) -> DVector<C64> {
        let k1 = self.rhs(t, x);
        let k2 = self.rhs(t + 0.5 * dt, &(x + &k1 * C64::new(0.5 * dt, 0.0)));
        let k3 = self.rhs(t + 0.5 * dt, &(x + &k2 * C64::new(0.5 * dt, 0.0)));
        let k4 = self.rhs(t + dt, &(x + &k3 * C64::new(dt, 0.0)));
        x + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
    }
}

/// Per-chunk accumulation: `sum_K w_K (<Q_i>_K(t) - <Q_i>_K(0))` and the worst norm drift.
struct ChunkResult {
    delta: Vec<Vec<f64>>,
    drift: f64,
}

/// Propagate each weighted member of `ens` under `h0 + lambda f(t) sum_j v_j Q_j` with
/// fixed-step RK4 and return the weighted first-order change of every probe.
pub fn propagate_response(h0: &ManyBodyOperator, ens: &Ensemble, probes: &ProbeSet, pulse: &PulseSpec) -> Result<ResponseTrajectory> {
    pulse.validate()?;
    if pulse.direction.len() != probes.len() {
        return Err(Error::invalid("pulse.direction", "direction length must match the probe count"));
    }
    if h0.basis().as_ref() != probes.basis().as_ref() || h0.basis().as_ref() != ens.spectrum().generator().basis().as_ref() {
        return Err(Error::invalid("probes", "Hamiltonian, ensemble and probes live on different bases"));
    }
    let spec = ens.spectrum();
    let vecs = spec.eigenvectors();
    let members: Vec<usize> = (0..spec.dim()).filter(|&k| ens.weight(k) > 0.0).collect();

    // members must be stationary under h0 for the reference to be their initial expectation
    let scale = crate::linalg::hermitian_norm(h0.matrix()).max(1.0);
    let mut member_energies = Vec::with_capacity(members.len());
    for &k in &members {
        let psi = vecs.column(k).into_owned();
        let hpsi = h0.matrix() * &psi;
        let e = psi.dotc(&hpsi).re;
        let res = (hpsi - &psi * C64::new(e, 0.0)).norm();
        if res > 1e-9 * scale {
            return Err(Error::invalid(
                "model",
                format!("ensemble state {k} is not an eigenstate of the propagated Hamiltonian (residual {res:.3e})"),
            ));
        }
        member_energies.push(e);
    }
    let (lo, hi) = member_energies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
    let omega_max = (hi - lo).max(0.0);
    let required = required_steps(omega_max, pulse.t_end);
    if pulse.n_steps < required {
        return Err(Error::UnderResolved {
            n_steps: pulse.n_steps,
            required,
        });
    }

    let h_sparse = SparseOp::from_dense(h0.matrix());
    let l_sparse = SparseOp::from_dense(&probes.combination(&pulse.direction));
    let q_sparse: Vec<SparseOp> = probes.probes().iter().map(|p| SparseOp::from_dense(p.op.matrix())).collect();
    let gen = Generator {
        h0: &h_sparse,
        shift: 0.5 * (lo + hi),
        l: &l_sparse,
        amplitude: pulse.amplitude,
        shape: pulse.shape,
    };
    let n_t = pulse.n_steps + 1;
    let dt = pulse.dt();
    let chunks: Vec<&[usize]> = members.chunks(MEMBER_CHUNK).collect();

    let results = par::map_slice(&chunks, |chunk| {
        let mut delta = vec![vec![0.0; n_t]; q_sparse.len()];
        let mut drift = 0.0_f64;
        for &k in chunk.iter() {
            let w = ens.weight(k);
            let mut psi = vecs.column(k).into_owned();
            let psi_norm0 = psi.norm();
            psi /= C64::new(psi_norm0, 0.0);
            let reference: Vec<f64> = q_sparse.iter().map(|q| q.expectation(&psi)).collect();
            for m in 1..n_t {
                psi = gen.rk4_step((m - 1) as f64 * dt, dt, &psi);
                let norm_sq = psi.norm_squared();
                drift = drift.max((norm_sq.sqrt() - 1.0).abs());
                for (i, q) in q_sparse.iter().enumerate() {
                    delta[i][m] += w * (q.expectation(&psi) / norm_sq - reference[i]);
                }
            }
        }
        ChunkResult { delta, drift }
    });

    let mut delta_q = vec![vec![0.0; n_t]; q_sparse.len()];
    let mut max_drift = 0.0_f64;
    for r in results {
        max_drift = max_drift.max(r.drift);
        for (acc, part) in delta_q.iter_mut().zip(r.delta) {
            for (a, b) in acc.iter_mut().zip(part) {
                *a += b;
            }
        }
    }
    Ok(ResponseTrajectory {
        times: pulse.times(),
        labels: probes.labels(),
        delta_q,
        pulse: pulse.clone(),
        method: ResponseMethod::Propagation,
        max_norm_drift: max_drift,
    })
}

/// Trapezoidal quadrature of `lambda * int_0^t chi_iv(t - t') f(t') dt'` on the pulse grid.
///
/// Each Lehmann term factorizes into `exp(i E_K t) exp(-i E_L t)`, so the quadrature
/// reduces to running sums per state pair.
pub fn convolution_reference(probes: &ProbeSet, ens: &Ensemble, pulse: &PulseSpec) -> Result<ResponseTrajectory> {
    pulse.validate()?;
    let setup = ResponseSetup::new(probes, ens)?;
    convolution_with_setup(&setup, pulse)
}

pub fn convolution_with_setup(setup: &ResponseSetup, pulse: &PulseSpec) -> Result<ResponseTrajectory> {
    pulse.validate()?;
    let probes = setup.probes();
    if pulse.direction.len() != probes.len() {
        return Err(Error::invalid("pulse.direction", "direction length must match the probe count"));
    }
    let spec = setup.spectrum();
    let ens = setup.ensemble();
    let n = spec.dim();
    let n_t = pulse.n_steps + 1;
    let dt = pulse.dt();
    let l = setup.moments().direction(&pulse.direction);
    let times = pulse.times();
    let f: Vec<f64> = times.iter().map(|&t| pulse.shape.value(t)).collect();
    // phase[k][m] = exp(i E_k t_m)
    let phase: Vec<Vec<C64>> = (0..n)
        .map(|k| times.iter().map(|&t| C64::from_polar(1.0, spec.energy(k) * t)).collect())
        .collect();

    let delta_q = par::map_indexed(probes.len(), |i| {
        let qi = setup.moments().probe(i);
        let mut out = vec![0.0; n_t];
        for k in 0..n {
            for ll in 0..n {
                let c = l[(ll, k)] * qi[(k, ll)] * ens.weight(ll);
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                // g_m = f_m exp(-i Omega_KL t_m)
                let g0 = phase[k][0].conj() * phase[ll][0] * f[0];
                let mut running = g0;
                for m in 1..n_t {
                    let fwd = phase[k][m] * phase[ll][m].conj();
                    let gm = fwd.conj() * f[m];
                    running += gm;
                    let integral = (running - (g0 + gm) * 0.5) * dt;
                    out[m] += (c * fwd * integral).im;
                }
            }
        }
        out.iter().map(|x| -2.0 * pulse.amplitude * x).collect()
    });
    Ok(ResponseTrajectory {
        times,
        labels: probes.labels(),
        delta_q,
        pulse: pulse.clone(),
        method: ResponseMethod::Convolution,
        max_norm_drift: 0.0,
    })
}

/// Pulse parameters shared by every direction in a certification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTemplate {
    pub shape: PulseShape,
    pub amplitude: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl Default for PulseTemplate {
    fn default() -> Self {
        PulseTemplate {
            shape: PulseShape::Sinusoid { omega: 1.0 },
            amplitude: DEFAULT_AMPLITUDE,
            t_end: 10.0,
            n_steps: 4000,
        }
    }
}

impl PulseTemplate {
    pub fn pulse(&self, direction: Vec<f64>) -> Result<PulseSpec> {
        PulseSpec::new(self.shape, self.amplitude, direction, self.t_end, self.n_steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionCertificate {
    pub direction: Vec<f64>,
    pub in_kernel: bool,
    /// `max_{i,t} |dQ_i(t)| / lambda`.
    pub max_response: f64,
    pub threshold: f64,
    pub passes: bool,
    pub max_norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsCertification {
    pub pulse: PulseTemplate,
    pub scale: f64,
    pub directions: Vec<DirectionCertificate>,
    /// Relative L2 gap between propagation and convolution for the non-kernel direction.
    pub convolution_relative_l2: Option<f64>,
    pub convolution_passes: Option<bool>,
    pub all_pass: bool,
}

/// A unit vector orthogonal to the span of `kernel`, drawn from a seeded generator.
pub fn random_non_kernel_direction(kernel: &RMat, n: usize, seed: u64) -> Option<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = orth(kernel, 1e-10);
    for _ in 0..16 {
        let x = DVector::from_iterator(n, (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0));
        let proj = if q.ncols() > 0 { &q * (q.transpose() * &x) } else { DVector::zeros(n) };
        let r = x - proj;
        let norm = r.norm();
        if norm > 1e-6 {
            return Some((r / norm).iter().copied().collect());
        }
    }
    None
}

/// Propagate every kernel vector and an optional non-kernel vector and check their
/// response against the kernel thresholds.
pub fn certify_kernel(
    h0: &ManyBodyOperator,
    setup: &ResponseSetup,
    kernel_basis: &[Vec<f64>],
    non_kernel: Option<Vec<f64>>,
    template: &PulseTemplate,
) -> Result<DynamicsCertification> {
    let scale = setup.scale();
    let ens = setup.ensemble();
    let probes = setup.probes();
    let mut directions = Vec::new();
    for v in kernel_basis {
        let traj = propagate_response(h0, ens, probes, &template.pulse(v.clone())?)?;
        let max_response = traj.max_abs() / template.amplitude.abs();
        let threshold = KERNEL_RESPONSE_TOL * scale;
        directions.push(DirectionCertificate {
            direction: v.clone(),
            in_kernel: true,
            max_response,
            threshold,
            passes: max_response <= threshold,
            max_norm_drift: traj.max_norm_drift,
        });
    }
    let (mut rel, mut conv_pass) = (None, None);
    if let Some(v) = non_kernel {
        let pulse = template.pulse(v.clone())?;
        let traj = propagate_response(h0, ens, probes, &pulse)?;
        let conv = convolution_with_setup(setup, &pulse)?;
        let r = traj.relative_l2(&conv);
        rel = Some(r);
        conv_pass = Some(r <= CONVOLUTION_REL_TOL);
        let max_response = traj.max_abs() / template.amplitude.abs();
        let threshold = NON_KERNEL_RESPONSE_MIN * scale;
        directions.push(DirectionCertificate {
            direction: v,
            in_kernel: false,
            max_response,
            threshold,
            passes: max_response >= threshold,
            max_norm_drift: traj.max_norm_drift,
        });
    }
    let all_pass = directions.iter().all(|d| d.passes) && conv_pass.unwrap_or(true);
    Ok(DynamicsCertification {
        pulse: *template,
        scale,
        directions,
        convolution_relative_l2: rel,
        convolution_passes: conv_pass,
        all_pass,
    })
}
