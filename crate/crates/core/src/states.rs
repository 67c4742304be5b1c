//! Two-qudit pure states, their Schmidt data, and electron-pair resources.
//!
//! Basis index `i` of a qudit of dimension `d` carries magnetic quantum
//! number `m = I - i` with `I = (d-1)/2`. A two-qudit state is stored as its
//! `d_a x d_b` coefficient matrix; local operators act as `O_a ψ O_bᵀ`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::kernel::{c, svd, CMatrix, C64, EPS_RANK, ONE};

/// Pure two-qudit state, possibly sub-normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQuditState {
    psi: CMatrix,
}

impl TwoQuditState {
    pub fn new(psi: CMatrix) -> Result<Self> {
        if !psi.is_finite() {
            return invalid("state has non-finite coefficients");
        }
        let n = psi.norm_sqr();
        if n <= 0.0 || n > 1.0 + 1e-9 {
            return invalid(format!("squared norm {n} outside (0, 1]"));
        }
        Ok(Self { psi })
    }

    /// Product state from two single-qudit amplitude vectors.
    pub fn product(a: &[C64], b: &[C64]) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return invalid("empty local state");
        }
        Self::new(CMatrix::from_fn(a.len(), b.len(), |i, k| a[i] * b[k]))
    }

    pub fn psi(&self) -> &CMatrix {
        &self.psi
    }

    pub fn d_a(&self) -> usize {
        self.psi.rows()
    }

    pub fn d_b(&self) -> usize {
        self.psi.cols()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.norm_sqr()
    }

    pub fn normalized(&self) -> Self {
        Self { psi: self.psi.scale_real(1.0 / self.norm_sqr().sqrt()) }
    }

    /// Applies local operators: `ψ -> O_a ψ O_bᵀ`.
    pub fn apply_local(&self, oa: &CMatrix, ob: &CMatrix) -> Result<Self> {
        let psi = oa.try_mul(&self.psi)?.try_mul(&ob.transpose())?;
        Self::new(psi)
    }

    /// State vector in the `|i_a⟩ ⊗ |i_b⟩` ordering.
    pub fn to_vector(&self) -> Vec<C64> {
        self.psi.data().to_vec()
    }
}

#[derive(Clone, Debug)]
pub struct SchmidtData {
    /// `√χ_k`, descending, truncated to the rank.
    pub coefficients: Vec<f64>,
    /// Columns are the Schmidt vectors of node a.
    pub left_basis: CMatrix,
    /// Columns are the Schmidt vectors of node b.
    pub right_basis: CMatrix,
    pub rank: usize,
}

impl SchmidtData {
    /// Squared Schmidt coefficients `χ_k`.
    pub fn chis(&self) -> Vec<f64> {
        self.coefficients.iter().map(|s| s * s).collect()
    }
}

pub fn schmidt(state: &TwoQuditState) -> Result<SchmidtData> {
    let dec = svd(state.psi())?;
    let smax = dec.singular_values.first().copied().unwrap_or(0.0);
    if smax <= EPS_RANK {
        return invalid("Schmidt decomposition of a zero state");
    }
    let rank = dec.rank();
    Ok(SchmidtData {
        coefficients: dec.singular_values[..rank].to_vec(),
        left_basis: dec.u.leading_columns(rank),
        right_basis: dec.vh.transpose().leading_columns(rank),
        rank,
    })
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_bits(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// Schmidt weights below this are treated as zero.
const WEIGHT_FLOOR: f64 = 1e-30;

/// Entropy of entanglement of a normalized state, in ebits.
pub fn entanglement(state: &TwoQuditState) -> Result<f64> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > 1e-6 {
        return invalid(format!("entanglement of an unnormalized state (norm² = {n})"));
    }
    let dec = svd(state.psi())?;
    let chis: Vec<f64> = dec.singular_values.iter().map(|s| s * s).filter(|&w| w > WEIGHT_FLOOR).collect();
    Ok(shannon_bits(&chis).max(0.0))
}

/// Binary entropy of `(p, 1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    shannon_bits(&[p, 1.0 - p])
}

/// Named two-qubit resource states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResourceKind {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
    Cluster,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 5] =
        [Self::PsiPlus, Self::PsiMinus, Self::PhiPlus, Self::PhiMinus, Self::Cluster];

    pub fn resource(self) -> TwoQubitResource {
        match self {
            Self::PsiPlus => TwoQubitResource::psi_plus(),
            Self::PsiMinus => TwoQubitResource::psi_minus(),
            Self::PhiPlus => TwoQubitResource::phi_plus(),
            Self::PhiMinus => TwoQubitResource::phi_minus(),
            Self::Cluster => TwoQubitResource::cluster(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PsiPlus => "psi+",
            Self::PsiMinus => "psi-",
            Self::PhiPlus => "phi+",
            Self::PhiMinus => "phi-",
            Self::Cluster => "cluster",
        }
    }

    /// Ψ± resources, for which the splitting ratio cancels.
    pub fn is_psi(self) -> bool {
        matches!(self, Self::PsiPlus | Self::PsiMinus)
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResourceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psi+" => Ok(Self::PsiPlus),
            "psi-" => Ok(Self::PsiMinus),
            "phi+" => Ok(Self::PhiPlus),
            "phi-" => Ok(Self::PhiMinus),
            "cluster" | "phic" => Ok(Self::Cluster),
            other => invalid(format!("unknown resource '{other}'")),
        }
    }
}

/// Electron-pair state as the 2x2 matrix of coefficients `c_{ja jb}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitResource {
    phi_ee: CMatrix,
}

impl TwoQubitResource {
    pub fn new(phi_ee: CMatrix) -> Result<Self> {
        if phi_ee.shape() != (2, 2) {
            return Err(Error::Dimension("resource matrix must be 2x2".into()));
        }
        let n = phi_ee.norm_sqr();
        if (n - 1.0).abs() > 1e-10 || !n.is_finite() {
            return invalid(format!("resource squared norm {n} is not 1"));
        }
        Ok(Self { phi_ee })
    }

    fn real(m: [[f64; 2]; 2]) -> Self {
        let phi_ee = CMatrix::from_fn(2, 2, |i, j| c(m[i][j], 0.0));
        Self { phi_ee }
    }

    pub fn psi_plus() -> Self {
        Self::real([[0.0, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, 0.0]])
    }

    pub fn psi_minus() -> Self {
        Self::real([[0.0, FRAC_1_SQRT_2], [-FRAC_1_SQRT_2, 0.0]])
    }

    pub fn phi_plus() -> Self {
        Self::real([[FRAC_1_SQRT_2, 0.0], [0.0, FRAC_1_SQRT_2]])
    }

    pub fn phi_minus() -> Self {
        Self::real([[FRAC_1_SQRT_2, 0.0], [0.0, -FRAC_1_SQRT_2]])
    }

    /// `(|0+⟩ + |1−⟩)/√2`.
    pub fn cluster() -> Self {
        Self::real([[0.5, 0.5], [0.5, -0.5]])
    }

    pub fn product00() -> Self {
        Self::real([[1.0, 0.0], [0.0, 0.0]])
    }

    /// `cos θ |00⟩ + sin θ |11⟩` with `θ ∈ [0, π/4]` chosen to carry `ebits` of entanglement.
    pub fn with_entanglement(ebits: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ebits) {
            return invalid(format!("resource entanglement {ebits} outside [0, 1]"));
        }
        // binary entropy of sin²θ is increasing on [0, π/4]
        let (mut lo, mut hi) = (0.0_f64, std::f64::consts::FRAC_PI_4);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if binary_entropy(mid.sin().powi(2)) < ebits {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        Ok(Self::real([[t.cos(), 0.0], [0.0, t.sin()]]))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.phi_ee
    }

    pub fn coeff(&self, ja: usize, jb: usize) -> C64 {
        self.phi_ee[(ja, jb)]
    }

    pub fn det(&self) -> C64 {
        let m = &self.phi_ee;
        m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
    }

    /// Squared Schmidt coefficients `λ±`.
    pub fn lambdas(&self) -> (f64, f64) {
        let d2 = self.det().norm_sqr();
        let r = (0.25 - d2).max(0.0).sqrt();
        (0.5 + r, 0.5 - r)
    }

    /// Applies local single-qubit operators `φ -> O_a φ O_bᵀ`.
    pub fn apply_local(&self, oa: &CMatrix, ob: &CMatrix) -> Result<Self> {
        Self::new(oa.try_mul(&self.phi_ee)?.try_mul(&ob.transpose())?)
    }

    pub fn is_maximally_entangled(&self) -> bool {
        (self.det().norm() - 0.5).abs() < 1e-9
    }
}

/// Electron-pair entanglement from `|det φ_ee|`.
pub fn two_qubit_entanglement(res: &TwoQubitResource) -> f64 {
    let (lp, _) = res.lambdas();
    binary_entropy(lp)
}

/// `|+_d⟩`: uniform amplitudes `1/√d`.
pub fn plus_qudit(d: usize) -> Result<Vec<C64>> {
    if d < 2 {
        return invalid(format!("qudit dimension {d} < 2"));
    }
    Ok(vec![c(1.0 / (d as f64).sqrt(), 0.0); d])
}

/// `|+_d⟩ ⊗ |+_d⟩`.
pub fn plus_state(d: usize) -> Result<TwoQuditState> {
    let p = plus_qudit(d)?;
    TwoQuditState::product(&p, &p)
}

/// `I_d/√d`, the maximally entangled two-qudit state.
pub fn qudit_bell(d: usize) -> Result<TwoQuditState> {
    if d < 2 {
        return invalid(format!("qudit dimension {d} < 2"));
    }
    TwoQuditState::new(CMatrix::identity(d).scale_real(1.0 / (d as f64).sqrt()))
}

/// Computational basis product state `|i⟩ ⊗ |k⟩`.
pub fn basis_state(d_a: usize, d_b: usize, i: usize, k: usize) -> Result<TwoQuditState> {
    if i >= d_a || k >= d_b {
        return invalid("basis index out of range");
    }
    let mut m = CMatrix::zeros(d_a, d_b);
    m[(i, k)] = ONE;
    TwoQuditState::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::unitarity_defect;

    #[test]
    fn schmidt_examples() {
        let bell = qudit_bell(2).unwrap();
        let s = schmidt(&bell).unwrap();
        assert_eq!(s.rank, 2);
        for x in &s.coefficients {
            assert!((x - FRAC_1_SQRT_2).abs() < 1e-12);
        }

        let prod = plus_state(3).unwrap();
        assert_eq!(schmidt(&prod).unwrap().rank, 1);

        let diag = CMatrix::from_real_diag(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]);
        let s = schmidt(&TwoQuditState::new(diag.clone()).unwrap()).unwrap();
        let want = [0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()];
        for (x, w) in s.coefficients.iter().zip(want) {
            assert!((x - w).abs() < 1e-12);
        }
        let rebuilt = &(&s.left_basis * &CMatrix::from_real_diag(&s.coefficients)) * &s.right_basis.transpose();
        assert!(rebuilt.distance(&diag) < 1e-10);
    }

    #[test]
    fn schmidt_rejects_zero() {
        // a zero matrix cannot be a state, so go through the decomposition directly
        let st = TwoQuditState { psi: CMatrix::zeros(2, 2) };
        assert!(schmidt(&st).is_err());
    }

    #[test]
    fn entanglement_examples() {
        assert!((entanglement(&qudit_bell(2).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!(entanglement(&plus_state(4).unwrap()).unwrap().abs() < 1e-12);
        let st = TwoQuditState::new(CMatrix::from_real_diag(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()])).unwrap();
        // −Σ χ log2 χ for χ = (0.5, 0.3, 0.2)
        let oracle = -(0.5f64 * 0.5f64.log2() + 0.3 * 0.3f64.log2() + 0.2 * 0.2f64.log2());
        assert!((oracle - 1.48548).abs() < 1e-4);
        assert!((entanglement(&st).unwrap() - oracle).abs() < 1e-12);
        assert!((entanglement(&qudit_bell(3).unwrap()).unwrap() - 3f64.log2()).abs() < 1e-12);
        assert!((entanglement(&qudit_bell(4).unwrap()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn entanglement_requires_normalization() {
        let st = TwoQuditState::new(CMatrix::identity(2).scale_real(0.5)).unwrap();
        assert!(entanglement(&st).is_err());
        assert!(entanglement(&st.normalized()).is_ok());
    }

    #[test]
    fn resources() {
        for kind in ResourceKind::ALL {
            let r = kind.resource();
            assert!((two_qubit_entanglement(&r) - 1.0).abs() < 1e-12, "{kind}");
            let as_state = TwoQuditState::new(r.matrix().clone()).unwrap();
            assert!((entanglement(&as_state).unwrap() - two_qubit_entanglement(&r)).abs() < 1e-10);
        }
        assert_eq!(two_qubit_entanglement(&TwoQubitResource::product00()), 0.0);
        let r = TwoQubitResource::with_entanglement(0.6).unwrap();
        assert!((two_qubit_entanglement(&r) - 0.6).abs() < 1e-12);
        assert!(TwoQubitResource::new(CMatrix::identity(2)).is_err());
    }

    #[test]
    fn resource_names_round_trip() {
        for kind in ResourceKind::ALL {
            assert_eq!(kind.name().parse::<ResourceKind>().unwrap(), kind);
        }
        assert!("bell".parse::<ResourceKind>().is_err());
    }

    #[test]
    fn plus_and_bell() {
        let p = plus_state(2).unwrap();
        for z in p.psi().data() {
            assert!((z.re - 0.5).abs() < 1e-15);
        }
        assert!(plus_state(1).is_err());
        assert_eq!(schmidt(&plus_state(8).unwrap()).unwrap().rank, 1);
        let b = qudit_bell(2).unwrap();
        assert!(b.psi().distance(TwoQubitResource::phi_plus().matrix()) < 1e-15);
        assert!(unitarity_defect(&b.psi().scale_real(2f64.sqrt())).unwrap() < 1e-12);
    }
}
