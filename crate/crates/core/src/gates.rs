//! Conditional phase gates and the effective transfer gate.
//!
//! One iteration prepares an electron pair in a resource state, lets each
//! electron imprint a conditional Z rotation on its nuclear qudit, and then
//! measures both electrons in the X basis. The outcome `(j_a, j_b)` selects
//! one of four effective (non-unitary) gates acting on the qudit pair.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::kernel::{cis, kron, CMatrix, C64, ZERO};
use crate::states::{entanglement, TwoQubitResource, TwoQuditState};

/// Branches whose conditional probability falls below this are dropped.
pub const PROB_FLOOR: f64 = 1e-20;

/// Diagonal correction to the conditional Hamiltonians, per basis index,
/// in units of the net Ising coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalCorrection {
    pub h: [Vec<f64>; 2],
}

impl ConditionalCorrection {
    pub fn dim(&self) -> usize {
        self.h[0].len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeParams {
    pub d: usize,
    /// Splitting ratio `ξ = Δ / A_net`.
    pub xi: f64,
    pub correction: Option<ConditionalCorrection>,
}

impl NodeParams {
    pub fn new(d: usize, xi: f64) -> Result<Self> {
        if d < 2 {
            return invalid(format!("qudit dimension {d} < 2"));
        }
        if !xi.is_finite() {
            return invalid("splitting ratio must be finite");
        }
        Ok(Self { d, xi, correction: None })
    }

    pub fn with_correction(mut self, corr: ConditionalCorrection) -> Result<Self> {
        if corr.h[0].len() != self.d || corr.h[1].len() != self.d {
            return Err(Error::Dimension(format!(
                "correction of length {} for a qudit of dimension {}",
                corr.dim(),
                self.d
            )));
        }
        self.correction = Some(corr);
        Ok(self)
    }

    /// Magnetic quantum number of basis index `i`.
    pub fn m(&self, i: usize) -> f64 {
        (self.d as f64 - 1.0) / 2.0 - i as f64
    }
}

/// Diagonal of `U_j(φ)`: `exp(−iφ[(−1)^j (m + ξ)/2 + h_j(m)])`.
pub fn conditional_phases(node: &NodeParams, j: usize, phi: f64) -> Vec<C64> {
    let sign = if j == 0 { 1.0 } else { -1.0 };
    (0..node.d)
        .map(|i| {
            let corr = node.correction.as_ref().map_or(0.0, |c| c.h[j][i]);
            cis(-phi * (sign * (node.m(i) + node.xi) / 2.0 + corr))
        })
        .collect()
}

pub fn conditional_unitary(node: &NodeParams, j: usize, phi: f64) -> CMatrix {
    CMatrix::from_diag(&conditional_phases(node, j, phi))
}

/// `η_{jj'} = −1` for `(j, j') = (0, 1)`, else `+1`.
pub fn eta(j: usize, jp: usize) -> f64 {
    if j == 0 && jp == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `T_{ja jb} = ½ Σ η η c U_{a,j'} ⊗ U_{b,j'}` for general (not necessarily diagonal) gates.
pub fn transfer_gate(
    res: &TwoQubitResource,
    ua: [&CMatrix; 2],
    ub: [&CMatrix; 2],
    ja: usize,
    jb: usize,
) -> Result<CMatrix> {
    let da = ua[0].rows();
    let db = ub[0].rows();
    for u in ua {
        if u.shape() != (da, da) {
            return Err(Error::Dimension("node a gates must be square and equal-sized".into()));
        }
    }
    for u in ub {
        if u.shape() != (db, db) {
            return Err(Error::Dimension("node b gates must be square and equal-sized".into()));
        }
    }
    let mut t = CMatrix::zeros(da * db, da * db);
    for jpa in 0..2 {
        for jpb in 0..2 {
            let w = res.coeff(jpa, jpb) * eta(ja, jpa) * eta(jb, jpb) * 0.5;
            if w == ZERO {
                continue;
            }
            t = &t + &kron(ua[jpa], ub[jpb]).scale(w);
        }
    }
    Ok(t)
}

/// Diagonal entries of `T_{ja jb}` for diagonal gates, arranged as a `d_a x d_b` matrix.
pub fn transfer_diagonal(
    res: &TwoQubitResource,
    ua: [&[C64]; 2],
    ub: [&[C64]; 2],
    ja: usize,
    jb: usize,
) -> CMatrix {
    let (da, db) = (ua[0].len(), ub[0].len());
    let mut w = [[ZERO; 2]; 2];
    for (jpa, row) in w.iter_mut().enumerate() {
        for (jpb, x) in row.iter_mut().enumerate() {
            *x = res.coeff(jpa, jpb) * eta(ja, jpa) * eta(jb, jpb) * 0.5;
        }
    }
    CMatrix::from_fn(da, db, |i, k| {
        let mut s = ZERO;
        for (jpa, row) in w.iter().enumerate() {
            for (jpb, x) in row.iter().enumerate() {
                if *x != ZERO {
                    s += x * ua[jpa][i] * ub[jpb][k];
                }
            }
        }
        s
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Postselect {
    #[default]
    None,
    Equal,
    Unequal,
    Explicit(Vec<(usize, usize)>),
}

impl Postselect {
    pub fn accepts(&self, ja: usize, jb: usize) -> bool {
        match self {
            Self::None => true,
            Self::Equal => ja == jb,
            Self::Unequal => ja != jb,
            Self::Explicit(set) => set.contains(&(ja, jb)),
        }
    }
}

impl fmt::Display for Postselect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("none"),
            Self::Equal => f.write_str("equal"),
            Self::Unequal => f.write_str("unequal"),
            Self::Explicit(set) => {
                let parts: Vec<String> = set.iter().map(|(a, b)| format!("{a}{b}")).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

impl FromStr for Postselect {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "equal" => Ok(Self::Equal),
            "unequal" => Ok(Self::Unequal),
            other => invalid(format!("unknown postselection rule '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationSpec {
    pub resource: TwoQubitResource,
    pub phi_a: f64,
    pub phi_b: f64,
    pub postselect: Postselect,
}

impl IterationSpec {
    /// Same phase on both nodes.
    pub fn symmetric(resource: TwoQubitResource, phi: f64, postselect: Postselect) -> Self {
        Self { resource, phi_a: phi, phi_b: phi, postselect }
    }
}

#[derive(Clone, Debug)]
pub struct OutcomeNode {
    pub record: Vec<(usize, usize)>,
    pub probability: f64,
    pub state: TwoQuditState,
    pub ebits: f64,
}

impl OutcomeNode {
    pub fn root(state: &TwoQuditState) -> Result<Self> {
        let state = state.normalized();
        let ebits = entanglement(&state)?;
        Ok(Self { record: Vec::new(), probability: 1.0, state, ebits })
    }

    /// Record as a string of outcome digits, e.g. `"00_11"`.
    pub fn record_label(&self) -> String {
        self.record.iter().map(|(a, b)| format!("{a}{b}")).collect::<Vec<_>>().join("_")
    }
}

/// Unnormalized branch matrices for all four outcomes, in record order.
fn branches(
    psi: &CMatrix,
    spec: &IterationSpec,
    nodes: (&NodeParams, &NodeParams),
) -> Result<Vec<((usize, usize), CMatrix)>> {
    let (na, nb) = nodes;
    if psi.shape() != (na.d, nb.d) {
        return Err(Error::Dimension(format!(
            "state is {}x{} but nodes have d = ({}, {})",
            psi.rows(),
            psi.cols(),
            na.d,
            nb.d
        )));
    }
    let ua = [conditional_phases(na, 0, spec.phi_a), conditional_phases(na, 1, spec.phi_a)];
    let ub = [conditional_phases(nb, 0, spec.phi_b), conditional_phases(nb, 1, spec.phi_b)];
    let mut out = Vec::with_capacity(4);
    for ja in 0..2 {
        for jb in 0..2 {
            let t = transfer_diagonal(&spec.resource, [&ua[0], &ua[1]], [&ub[0], &ub[1]], ja, jb);
            let m = CMatrix::from_fn(psi.rows(), psi.cols(), |i, k| t[(i, k)] * psi[(i, k)]);
            out.push(((ja, jb), m));
        }
    }
    Ok(out)
}

/// Unnormalized branch states `(1/2)Σ η η c U_a ψ U_bᵀ` for all four outcomes (no postselection).
pub fn branch_states(
    state: &TwoQuditState,
    spec: &IterationSpec,
    nodes: (&NodeParams, &NodeParams),
) -> Result<Vec<((usize, usize), CMatrix)>> {
    branches(state.psi(), spec, nodes)
}

/// Children of one outcome node after a further iteration.
pub fn extend(
    parent: &OutcomeNode,
    spec: &IterationSpec,
    nodes: (&NodeParams, &NodeParams),
) -> Result<Vec<OutcomeNode>> {
    let mut children = Vec::with_capacity(4);
    for ((ja, jb), m) in branches(parent.state.psi(), spec, nodes)? {
        if !spec.postselect.accepts(ja, jb) {
            continue;
        }
        let p = m.norm_sqr();
        if p < PROB_FLOOR {
            continue;
        }
        let state = TwoQuditState::new(m.scale_real(1.0 / p.sqrt()))?;
        let ebits = entanglement(&state)?;
        let mut record = parent.record.clone();
        record.push((ja, jb));
        children.push(OutcomeNode { record, probability: parent.probability * p, state, ebits });
    }
    Ok(children)
}

pub fn apply_iteration(
    state: &TwoQuditState,
    spec: &IterationSpec,
    nodes: (&NodeParams, &NodeParams),
) -> Result<Vec<OutcomeNode>> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return invalid(format!("iteration input must be normalized (norm² = {n})"));
    }
    extend(&OutcomeNode::root(state)?, spec, nodes)
}

/// Leaves after running every iteration of `scheme`, in lexicographic record order.
pub fn outcome_tree(
    initial: &TwoQuditState,
    scheme: &[IterationSpec],
    nodes: (&NodeParams, &NodeParams),
) -> Result<Vec<OutcomeNode>> {
    let n = initial.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return invalid(format!("initial state must be normalized (norm² = {n})"));
    }
    let mut layer = vec![OutcomeNode::root(initial)?];
    for spec in scheme {
        let mut next = Vec::with_capacity(layer.len() * 4);
        for node in &layer {
            next.extend(extend(node, spec, nodes)?);
        }
        layer = next;
    }
    Ok(layer)
}

/// `(success probability, ⟨E⟩ conditioned on survival)`.
pub fn expected_ebits(leaves: &[OutcomeNode]) -> (f64, f64) {
    let p: f64 = leaves.iter().map(|l| l.probability).sum();
    if p == 0.0 {
        return (0.0, 0.0);
    }
    let e: f64 = leaves.iter().map(|l| l.probability * l.ebits).sum();
    (p, e / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::plus_state;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn node(d: usize, xi: f64) -> NodeParams {
        NodeParams::new(d, xi).unwrap()
    }

    #[test]
    fn conditional_unitary_examples() {
        let n = node(4, 3.7);
        for j in 0..2 {
            let u = conditional_unitary(&n, j, 0.0);
            assert!(u.distance(&CMatrix::identity(4)) < 1e-15);
        }
        let u = conditional_unitary(&node(2, 0.0), 0, PI);
        assert!((u[(0, 0)] - cis(-FRAC_PI_4)).norm() < 1e-15);
        assert!((u[(1, 1)] - cis(FRAC_PI_4)).norm() < 1e-15);
        for (d, xi, phi) in [(3, 20.0, 0.3), (5, -1.25, 2.0), (8, 0.0, 7.0)] {
            let n = node(d, xi);
            let u0 = conditional_unitary(&n, 0, phi);
            let u1 = conditional_unitary(&n, 1, phi);
            assert!((&u1 * &u0).distance(&CMatrix::identity(d)) < 1e-13);
            assert!(u1.distance(&u0.conj()) < 1e-15);
        }
    }

    #[test]
    fn transfer_gate_identity_examples() {
        let id = CMatrix::identity(3);
        let r = TwoQubitResource::psi_plus();
        let t = |ja, jb| transfer_gate(&r, [&id, &id], [&id, &id], ja, jb).unwrap();
        let i9 = CMatrix::identity(9);
        assert!(t(0, 0).distance(&i9.scale_real(-FRAC_1_SQRT_2)) < 1e-15);
        assert!(t(0, 1).frobenius_norm() < 1e-15);
        assert!(t(1, 0).frobenius_norm() < 1e-15);
        assert!(t(1, 1).distance(&i9.scale_real(FRAC_1_SQRT_2)) < 1e-15);

        let r = TwoQubitResource::product00();
        for ja in 0..2 {
            for jb in 0..2 {
                let g = transfer_gate(&r, [&id, &id], [&id, &id], ja, jb).unwrap();
                assert!((g[(0, 0)].norm() - 0.5).abs() < 1e-15);
                assert!(g.distance(&i9.scale(g[(0, 0)])) < 1e-15);
            }
        }
    }

    #[test]
    fn eta_table() {
        assert_eq!(eta(0, 1), -1.0);
        assert_eq!(eta(0, 0), 1.0);
        assert_eq!(eta(1, 0), 1.0);
        assert_eq!(eta(1, 1), 1.0);
    }

    #[test]
    fn transfer_gate_matches_diagonal_form() {
        let na = node(3, 1.3);
        let nb = node(4, -0.4);
        let r = TwoQubitResource::cluster();
        let ua: Vec<CMatrix> = (0..2).map(|j| conditional_unitary(&na, j, 0.7)).collect();
        let ub: Vec<CMatrix> = (0..2).map(|j| conditional_unitary(&nb, j, 1.9)).collect();
        let da: Vec<Vec<C64>> = ua.iter().map(|u| u.diagonal()).collect();
        let db: Vec<Vec<C64>> = ub.iter().map(|u| u.diagonal()).collect();
        for ja in 0..2 {
            for jb in 0..2 {
                let full = transfer_gate(&r, [&ua[0], &ua[1]], [&ub[0], &ub[1]], ja, jb).unwrap();
                let diag = transfer_diagonal(&r, [&da[0], &da[1]], [&db[0], &db[1]], ja, jb);
                for i in 0..3 {
                    for k in 0..4 {
                        assert!((full[(i * 4 + k, i * 4 + k)] - diag[(i, k)]).norm() < 1e-15);
                    }
                }
            }
        }
        let bad = CMatrix::identity(2);
        assert!(transfer_gate(&r, [&ua[0], &bad], [&ub[0], &ub[1]], 0, 0).is_err());
    }

    #[test]
    fn bell_resource_d8_first_round() {
        let n = node(8, 20.0);
        let init = plus_state(8).unwrap();
        for k in 1..8 {
            let phi = 2.0 * PI * k as f64 / 8.0;
            let spec = IterationSpec::symmetric(TwoQubitResource::psi_plus(), phi, Postselect::None);
            let leaves = apply_iteration(&init, &spec, (&n, &n)).unwrap();
            let (p, e) = expected_ebits(&leaves);
            assert!((p - 1.0).abs() < 1e-12);
            assert!((e - 1.0).abs() < 1e-9, "k={k}: {e}");
        }
        for phi in [0.3, 1.1, 2.9] {
            let spec = IterationSpec::symmetric(TwoQubitResource::psi_plus(), phi, Postselect::None);
            for leaf in apply_iteration(&init, &spec, (&n, &n)).unwrap() {
                if leaf.record[0].0 != leaf.record[0].1 {
                    assert!((leaf.ebits - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn complete_transfer_gives_quarter_probabilities() {
        let n = node(4, 7.3);
        let spec = IterationSpec::symmetric(TwoQubitResource::cluster(), PI, Postselect::None);
        let leaves = apply_iteration(&plus_state(4).unwrap(), &spec, (&n, &n)).unwrap();
        assert_eq!(leaves.len(), 4);
        for l in &leaves {
            assert!((l.probability - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_scheme_is_a_single_leaf() {
        let n = node(3, 0.0);
        let init = plus_state(3).unwrap();
        let leaves = outcome_tree(&init, &[], (&n, &n)).unwrap();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].probability, 1.0);
        assert!(leaves[0].state.psi().distance(init.psi()) < 1e-15);
    }

    #[test]
    fn postselected_d3_bell_state() {
        let n = node(3, 20.0);
        let scheme: Vec<IterationSpec> = [PI, PI / 2.0]
            .iter()
            .map(|&phi| IterationSpec::symmetric(TwoQubitResource::psi_plus(), phi, Postselect::Equal))
            .collect();
        let leaves = outcome_tree(&plus_state(3).unwrap(), &scheme, (&n, &n)).unwrap();
        let (p, _) = expected_ebits(&leaves);
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
        for l in &leaves {
            assert!((l.ebits - 3f64.log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn d4_two_rounds_all_leaves_maximal() {
        let n = node(4, 0.0);
        let scheme: Vec<IterationSpec> = [PI / 2.0, PI]
            .iter()
            .map(|&phi| IterationSpec::symmetric(TwoQubitResource::psi_plus(), phi, Postselect::None))
            .collect();
        let leaves = outcome_tree(&plus_state(4).unwrap(), &scheme, (&n, &n)).unwrap();
        assert_eq!(leaves.len(), 16);
        for l in &leaves {
            assert!((l.ebits - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = IterationSpec::symmetric(TwoQubitResource::psi_plus(), 1.0, Postselect::None);
        let n = node(4, 0.0);
        assert!(apply_iteration(&plus_state(3).unwrap(), &spec, (&n, &n)).is_err());
    }

    #[test]
    fn correction_shifts_phases() {
        let corr = ConditionalCorrection { h: [vec![0.0, 0.1, 0.1], vec![-0.1, -0.2, -0.1]] };
        let n = node(3, 0.0).with_correction(corr).unwrap();
        let u = conditional_phases(&n, 1, 2.0);
        // m = 0 entry: exp(−i·2·(−0/2 − 0.2))
        assert!((u[1] - cis(0.4)).norm() < 1e-15);
        assert!(node(2, 0.0)
            .with_correction(ConditionalCorrection { h: [vec![0.0; 3], vec![0.0; 3]] })
            .is_err());
    }
}
