//! Dense state vectors over a periodic chain and the local kernels that act
//! on them.
//!
//! Site 0 is the slowest-varying digit of the flat index. A two-site operator
//! on bond `j` acts on sites `j` and `(j + 1) % n` with site `j` as the slow
//! factor of the operator, so the wraparound bond `n - 1` pairs the last
//! site with site 0 in that order.
//!
//! Spin-1 digits encode `m = 1, 0, -1` as `0, 1, 2`. In the qubit encoding
//! each site is a pair of qubits `(a, b)` with `a` the slower digit and
//! `|0>` the spin-up state, giving a site dimension of 4.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, norm_sqr, CMatrix, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiteEncoding {
    /// One qutrit per site.
    Spin1,
    /// Two qubits per site, the spin-1 living in their triplet sector.
    QubitPair,
}

impl SiteEncoding {
    /// Hilbert-space dimension of one chain site.
    pub fn site_dim(self) -> usize {
        match self {
            SiteEncoding::Spin1 => 3,
            SiteEncoding::QubitPair => 4,
        }
    }

    /// Dimension of one physical carrier (qutrit or qubit).
    pub fn local_dim(self) -> usize {
        match self {
            SiteEncoding::Spin1 => 3,
            SiteEncoding::QubitPair => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SiteEncoding::Spin1 => "spin1:m=+1,0,-1",
            SiteEncoding::QubitPair => "qubit-pair:ab,0=up",
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            SiteEncoding::Spin1 => 0,
            SiteEncoding::QubitPair => 1,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(SiteEncoding::Spin1),
            1 => Some(SiteEncoding::QubitPair),
            _ => None,
        }
    }
}

/// Single-site ket used to build product states.
#[derive(Debug, Clone)]
pub enum LocalKet {
    Index(usize),
    Vector(Vec<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    sites: usize,
    encoding: SiteEncoding,
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps raw amplitudes and normalizes them.
    pub fn from_amplitudes(sites: usize, encoding: SiteEncoding, amps: Vec<C64>) -> Result<Self> {
        let expected = encoding.site_dim().pow(sites as u32);
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: amps.len(),
            });
        }
        let mut state = StateVector {
            sites,
            encoding,
            amps,
        };
        if state.normalize() == 0.0 {
            return Err(Error::NormUnderflow);
        }
        Ok(state)
    }

    /// Normalized tensor product of the same local ket on every site.
    pub fn product(sites: usize, encoding: SiteEncoding, ket: &LocalKet) -> Result<Self> {
        StateVector::product_of(encoding, &vec![ket.clone(); sites])
    }

    /// Normalized tensor product with one ket per site, site 0 first.
    pub fn product_of(encoding: SiteEncoding, kets: &[LocalKet]) -> Result<Self> {
        let d = encoding.site_dim();
        let mut amps = vec![ONE];
        for ket in kets {
            let local: Vec<C64> = match ket {
                LocalKet::Index(i) if *i < d => {
                    let mut v = vec![ZERO; d];
                    v[*i] = ONE;
                    v
                }
                LocalKet::Index(i) => {
                    return Err(Error::InvalidKet(format!(
                        "index {i} out of range for site dimension {d}"
                    )))
                }
                LocalKet::Vector(v) if v.len() == d && norm_sqr(v) > 0.0 => v.clone(),
                LocalKet::Vector(v) => {
                    return Err(Error::InvalidKet(format!(
                        "vector of length {} (norm^2 {}) for site dimension {d}",
                        v.len(),
                        norm_sqr(v)
                    )))
                }
            };
            amps = amps
                .iter()
                .flat_map(|a| local.iter().map(move |b| a * b))
                .collect();
        }
        StateVector::from_amplitudes(kets.len(), encoding, amps)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn encoding(&self) -> SiteEncoding {
        self.encoding
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|z| *z *= inv);
        }
        n
    }

    pub fn same_shape(&self, other: &StateVector) -> bool {
        self.sites == other.sites && self.encoding == other.encoding
    }

    fn check_shape(&self, other: &StateVector) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            })
        }
    }

    fn stride(&self, site: usize) -> usize {
        self.encoding
            .site_dim()
            .pow((self.sites - 1 - site) as u32)
    }

    /// Applies `op` to sites `(bond, bond + 1 mod n)` in place. The result is
    /// not renormalized.
    pub fn apply_two_site(&mut self, op: &CMatrix, bond: usize) -> Result<()> {
        let d = self.encoding.site_dim();
        let dd = d * d;
        if op.nrows() != dd || op.ncols() != dd {
            return Err(Error::DimensionMismatch {
                expected: dd,
                actual: op.nrows(),
            });
        }
        if bond >= self.sites || self.sites < 2 {
            return Err(Error::DimensionMismatch {
                expected: self.sites,
                actual: bond,
            });
        }
        let sa = self.stride(bond);
        let sb = self.stride((bond + 1) % self.sites);
        let dense: Vec<C64> = crate::linalg::to_row_major(op);
        let offsets: Vec<usize> = (0..dd).map(|k| (k / d) * sa + (k % d) * sb).collect();
        let mut buf = [ZERO; 16];
        for base in 0..self.amps.len() {
            if !(base / sa).is_multiple_of(d) || !(base / sb).is_multiple_of(d) {
                continue;
            }
            for (k, off) in offsets.iter().enumerate() {
                buf[k] = self.amps[base + off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let row = &dense[r * dd..(r + 1) * dd];
                self.amps[base + off] = row.iter().zip(&buf[..dd]).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }

    /// Applies a single-site operator in place. Not renormalized.
    pub fn apply_one_site(&mut self, op: &CMatrix, site: usize) -> Result<()> {
        let d = self.encoding.site_dim();
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: op.nrows(),
            });
        }
        if site >= self.sites {
            return Err(Error::DimensionMismatch {
                expected: self.sites,
                actual: site,
            });
        }
        let s = self.stride(site);
        let mut buf = [ZERO; 4];
        for base in 0..self.amps.len() {
            if !(base / s).is_multiple_of(d) {
                continue;
            }
            for (k, slot) in buf.iter_mut().enumerate().take(d) {
                *slot = self.amps[base + k * s];
            }
            for r in 0..d {
                self.amps[base + r * s] = (0..d).map(|k| op[(r, k)] * buf[k]).sum();
            }
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        self.check_shape(other)?;
        Ok(inner(&self.amps, &other.amps))
    }

    /// `<self|op_bond|self>`.
    pub fn bond_expectation(&self, op: &CMatrix, bond: usize) -> Result<C64> {
        let mut image = self.clone();
        image.apply_two_site(op, bond)?;
        Ok(inner(&self.amps, &image.amps))
    }

    /// Multiplies every amplitude by `e^{i alpha}`.
    pub fn rotate_phase(&mut self, alpha: f64) {
        let p = C64::from_polar(1.0, alpha);
        self.amps.iter_mut().for_each(|z| *z *= p);
    }

    /// Fixes the global phase so the largest-magnitude amplitude (lowest
    /// index on ties) is real and positive.
    pub fn canonicalize_phase(&mut self) {
        let mut best = 0;
        for (i, z) in self.amps.iter().enumerate() {
            if z.norm() > self.amps[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let z = self.amps[best];
        if z.norm() > 0.0 {
            let p = z.conj() / z.norm();
            self.amps.iter_mut().for_each(|a| *a *= p);
            self.amps[best] = C64::new(self.amps[best].re, 0.0);
        }
    }
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.overlap(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Two-outcome Kraus pair acting on one bond.
#[derive(Debug, Clone)]
pub struct KrausPair {
    pub m0: CMatrix,
    pub m1: CMatrix,
}

impl KrausPair {
    /// `max |M0^dag M0 + M1^dag M1 - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self.m0.adjoint() * &self.m0 + self.m1.adjoint() * &self.m1;
        crate::linalg::max_abs_diff(&sum, &crate::linalg::identity(sum.nrows()))
    }
}

/// Outcome of one Born-sampled weak measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub outcome: u8,
    pub p0: f64,
    pub p1: f64,
}

/// Samples an outcome `q` with probability `||M_q psi||^2` and replaces the
/// state with the normalized post-measurement state.
pub fn born_sample<R: Rng + ?Sized>(
    kraus: &KrausPair,
    bond: usize,
    state: &mut StateVector,
    rng: &mut R,
) -> Result<Measurement> {
    let mut branch0 = state.clone();
    branch0.apply_two_site(&kraus.m0, bond)?;
    let mut branch1 = state.clone();
    branch1.apply_two_site(&kraus.m1, bond)?;
    let w0 = norm_sqr(&branch0.amps);
    let w1 = norm_sqr(&branch1.amps);
    let total = w0 + w1;
    if !(total > 0.0) {
        return Err(Error::ZeroOutcomeNorm);
    }
    let p0 = w0 / total;
    let p1 = w1 / total;
    let u: f64 = rng.random();
    let (outcome, mut next) = if u < p0 { (0, branch0) } else { (1, branch1) };
    next.normalize();
    *state = next;
    Ok(Measurement { outcome, p0, p1 })
}
