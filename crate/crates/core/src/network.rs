//! Photonic entangling of electron pairs and multi-node accumulation.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::gates::{conditional_phases, transfer_diagonal, IterationSpec, NodeParams, PROB_FLOOR};
use crate::kernel::{c, CMatrix, C64, ZERO};
use crate::states::{plus_qudit, TwoQubitResource};

/// Largest multi-node amplitude vector accepted.
pub const MAX_AMPLITUDES: usize = 1 << 16;

/// Single-photon interferometer with two cavity-coupled electron spins.
///
/// Amplitudes are indexed by `|ph₁ ph₂ e_a e_b⟩` as `8 ph₁ + 4 ph₂ + 2 e_a + e_b`;
/// weight that leaks out of a cavity is collected in `lost`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferometerState {
    pub amplitudes: [C64; 16],
    pub lost: f64,
}

fn index(ph1: usize, ph2: usize, ea: usize, eb: usize) -> usize {
    8 * ph1 + 4 * ph2 + 2 * ea + eb
}

/// Electron initial states `|±⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinSign {
    Plus,
    Minus,
}

impl SpinSign {
    fn amplitudes(self) -> [f64; 2] {
        match self {
            Self::Plus => [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            Self::Minus => [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        }
    }
}

impl FromStr for SpinSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Self::Plus),
            "-" | "minus" => Ok(Self::Minus),
            other => invalid(format!("unknown spin sign '{other}'")),
        }
    }
}

impl fmt::Display for SpinSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if *self == Self::Plus { "+" } else { "-" })
    }
}

impl InterferometerState {
    /// Photon in the first input port, electrons in `|sign_a⟩|sign_b⟩`.
    pub fn input(sign_a: SpinSign, sign_b: SpinSign) -> Self {
        let (a, b) = (sign_a.amplitudes(), sign_b.amplitudes());
        let mut amplitudes = [ZERO; 16];
        for ea in 0..2 {
            for eb in 0..2 {
                amplitudes[index(1, 0, ea, eb)] = c(a[ea] * b[eb], 0.0);
            }
        }
        Self { amplitudes, lost: 0.0 }
    }

    pub fn total_probability(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() + self.lost
    }

    /// Single-photon beam splitter; the minus sign sits on the `1 → 2` element if `upper`, else on `2 → 2`.
    fn beam_splitter(&mut self, upper: bool) {
        let s = FRAC_1_SQRT_2;
        let m = if upper { [[s, s], [-s, s]] } else { [[s, s], [s, -s]] };
        let mut out = [ZERO; 16];
        for ea in 0..2 {
            for eb in 0..2 {
                let in1 = self.amplitudes[index(1, 0, ea, eb)];
                let in2 = self.amplitudes[index(0, 1, ea, eb)];
                // m[out][in]
                out[index(1, 0, ea, eb)] = in1 * m[0][0] + in2 * m[0][1];
                out[index(0, 1, ea, eb)] = in1 * m[1][0] + in2 * m[1][1];
                out[index(0, 0, ea, eb)] = self.amplitudes[index(0, 0, ea, eb)];
                out[index(1, 1, ea, eb)] = self.amplitudes[index(1, 1, ea, eb)];
            }
        }
        self.amplitudes = out;
    }

    /// Photon in mode 1 meets cavity a, mode 2 meets cavity b: spin 0 reflects with a π phase, spin 1 loses the photon.
    fn cavities(&mut self) {
        for ea in 0..2 {
            for eb in 0..2 {
                for (ph1, ph2, e) in [(1, 0, ea), (0, 1, eb)] {
                    let i = index(ph1, ph2, ea, eb);
                    if e == 0 {
                        self.amplitudes[i] = -self.amplitudes[i];
                    } else {
                        self.lost += self.amplitudes[i].norm_sqr();
                        self.amplitudes[i] = ZERO;
                    }
                }
            }
        }
    }

    /// Electron amplitudes with the photon in the given mode, as a 2x2 matrix.
    pub fn electron_block(&self, ph1: usize, ph2: usize) -> CMatrix {
        CMatrix::from_fn(2, 2, |ea, eb| self.amplitudes[index(ph1, ph2, ea, eb)])
    }

    fn port_probability(&self, ph1: usize, ph2: usize) -> f64 {
        self.electron_block(ph1, ph2).norm_sqr()
    }
}

#[derive(Clone, Debug)]
pub struct PhotonicOutcome {
    /// Normalized electron state after a dark-port click.
    pub resource: TwoQubitResource,
    pub success_probability: f64,
    pub bright_probability: f64,
    pub lost_probability: f64,
    /// State after the cavities, before the second beam splitter.
    pub after_cavities: InterferometerState,
}

/// Beam splitter, spin-dependent cavity reflection, beam splitter and detection in the dark port.
pub fn run_photonic(sign_a: SpinSign, sign_b: SpinSign) -> Result<PhotonicOutcome> {
    let mut st = InterferometerState::input(sign_a, sign_b);
    st.beam_splitter(false);
    st.cavities();
    let after_cavities = st.clone();
    st.beam_splitter(true);
    let dark = st.electron_block(0, 1);
    let p = dark.norm_sqr();
    let resource = TwoQubitResource::new(dark.scale_real(1.0 / p.sqrt()))?;
    Ok(PhotonicOutcome {
        resource,
        success_probability: p,
        bright_probability: st.port_probability(1, 0),
        lost_probability: st.lost,
        after_cavities,
    })
}

/// `|⟨target|state⟩|²` for two-qubit states.
pub fn resource_fidelity(state: &TwoQubitResource, target: &TwoQubitResource) -> f64 {
    let a = state.matrix();
    let b = target.matrix();
    let overlap: C64 = a.data().iter().zip(b.data()).map(|(x, y)| y.conj() * x).sum();
    overlap.norm_sqr()
}

/// Optional drive on electron b after a successful click.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Drive {
    None,
    Pi,
    PiHalf,
}

impl FromStr for Drive {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "pi" => Ok(Self::Pi),
            "pi-half" | "pi_half" | "pi/2" => Ok(Self::PiHalf),
            other => invalid(format!("unknown drive '{other}'")),
        }
    }
}

/// Turns a `Ψ±` click state into a `Φ±` (π pulse) or cluster-type (π/2 pulse) resource.
pub fn resource_from_photonic(base: &TwoQubitResource, drive: Drive) -> Result<TwoQubitResource> {
    let m = base.matrix();
    if m[(0, 0)].norm() > 1e-9 || m[(1, 1)].norm() > 1e-9 || !base.is_maximally_entangled() {
        return invalid("photonic drive expects a Ψ-type Bell state");
    }
    let s = FRAC_1_SQRT_2;
    let op = match drive {
        Drive::None => return Ok(base.clone()),
        Drive::Pi => CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])?,
        Drive::PiHalf => CMatrix::from_real_rows(&[&[s, s], &[-s, s]])?,
    };
    base.apply_local(&CMatrix::identity(2), &op)
}

/// Pure state of `M` qudits; node 0 is the most significant digit of the amplitude index.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiQuditState {
    nodes: usize,
    d: usize,
    amplitudes: Vec<C64>,
}

fn capacity(nodes: usize, d: usize) -> Result<usize> {
    if nodes == 0 {
        return invalid("at least one node is required");
    }
    if d < 2 {
        return invalid(format!("qudit dimension {d} < 2"));
    }
    let mut n: usize = 1;
    for _ in 0..nodes {
        n = n.saturating_mul(d);
        if n > MAX_AMPLITUDES {
            return Err(Error::Capacity(format!("{d}^{nodes} amplitudes exceed {MAX_AMPLITUDES}")));
        }
    }
    Ok(n)
}

impl MultiQuditState {
    pub fn new(nodes: usize, d: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let n = capacity(nodes, d)?;
        if amplitudes.len() != n {
            return Err(Error::Dimension(format!("expected {n} amplitudes, got {}", amplitudes.len())));
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !norm.is_finite() || norm <= 0.0 || norm > 1.0 + 1e-9 {
            return invalid(format!("squared norm {norm} outside (0, 1]"));
        }
        Ok(Self { nodes, d, amplitudes })
    }

    pub fn product(factors: &[Vec<C64>]) -> Result<Self> {
        let d = factors.first().map_or(0, Vec::len);
        if factors.iter().any(|f| f.len() != d) {
            return Err(Error::Dimension("all factors must have the same dimension".into()));
        }
        let n = capacity(factors.len(), d)?;
        let mut amps = vec![ZERO; n];
        for (idx, a) in amps.iter_mut().enumerate() {
            let mut rest = idx;
            let mut v = c(1.0, 0.0);
            for f in factors.iter().rev() {
                v *= f[rest % d];
                rest /= d;
            }
            *a = v;
        }
        Self::new(factors.len(), d, amps)
    }

    /// `|+_d⟩^⊗M`.
    pub fn plus(nodes: usize, d: usize) -> Result<Self> {
        let plus = plus_qudit(d)?;
        Self::product(&vec![plus; nodes])
    }

    /// `(1/√d) Σ_i |i⟩^⊗M`.
    pub fn ghz(nodes: usize, d: usize) -> Result<Self> {
        let n = capacity(nodes, d)?;
        let mut amps = vec![ZERO; n];
        let stride: usize = (n - 1) / (d - 1);
        for i in 0..d {
            amps[i * stride] = c(1.0 / (d as f64).sqrt(), 0.0);
        }
        Self::new(nodes, d, amps)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Basis digit of `node` in amplitude index `idx`.
    pub fn digit(&self, idx: usize, node: usize) -> usize {
        (idx / self.d.pow((self.nodes - 1 - node) as u32)) % self.d
    }

    /// Two-node state as a `d x d` matrix (only for `M = 2`).
    pub fn as_matrix(&self) -> Result<CMatrix> {
        if self.nodes != 2 {
            return invalid("matrix view needs exactly two nodes");
        }
        CMatrix::new(self.d, self.d, self.amplitudes.clone())
    }
}

/// Outcome leaf of a multi-node run.
#[derive(Clone, Debug)]
pub struct MultiLeaf {
    /// One `(j_K, j_K')` pair per applied iteration.
    pub record: Vec<(usize, usize)>,
    pub probability: f64,
    pub state: MultiQuditState,
}

/// Applies one iteration to nodes `pair.0` and `pair.1`, identity on the rest.
pub fn apply_pair_iteration(
    state: &MultiQuditState,
    pair: (usize, usize),
    spec: &IterationSpec,
    node: &NodeParams,
) -> Result<Vec<MultiLeaf>> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return invalid(format!("iteration input must be normalized (norm² = {n})"));
    }
    let root = MultiLeaf { record: Vec::new(), probability: 1.0, state: state.clone() };
    extend_pair(&root, pair, spec, node)
}

fn extend_pair(
    parent: &MultiLeaf,
    pair: (usize, usize),
    spec: &IterationSpec,
    node: &NodeParams,
) -> Result<Vec<MultiLeaf>> {
    let st = &parent.state;
    let (k, kp) = pair;
    if k == kp || k >= st.nodes || kp >= st.nodes {
        return invalid(format!("invalid node pair ({k}, {kp}) for {} nodes", st.nodes));
    }
    if node.d != st.d {
        return Err(Error::Dimension(format!("node has d = {} but state has d = {}", node.d, st.d)));
    }
    let ua = [conditional_phases(node, 0, spec.phi_a), conditional_phases(node, 1, spec.phi_a)];
    let ub = [conditional_phases(node, 0, spec.phi_b), conditional_phases(node, 1, spec.phi_b)];
    let mut out = Vec::with_capacity(4);
    for ja in 0..2 {
        for jb in 0..2 {
            if !spec.postselect.accepts(ja, jb) {
                continue;
            }
            let t = transfer_diagonal(&spec.resource, [&ua[0], &ua[1]], [&ub[0], &ub[1]], ja, jb);
            let amps: Vec<C64> = st
                .amplitudes
                .iter()
                .enumerate()
                .map(|(idx, a)| t[(st.digit(idx, k), st.digit(idx, kp))] * a)
                .collect();
            let p: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            if p < PROB_FLOOR {
                continue;
            }
            let scale = 1.0 / p.sqrt();
            let state = MultiQuditState::new(st.nodes, st.d, amps.iter().map(|z| z * scale).collect())?;
            let mut record = parent.record.clone();
            record.push((ja, jb));
            out.push(MultiLeaf { record, probability: parent.probability * p, state });
        }
    }
    Ok(out)
}

/// Runs a sequence of pair iterations; leaves are in lexicographic record order.
pub fn multi_outcome_tree(
    initial: &MultiQuditState,
    steps: &[((usize, usize), IterationSpec)],
    node: &NodeParams,
) -> Result<Vec<MultiLeaf>> {
    let n = initial.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return invalid(format!("initial state must be normalized (norm² = {n})"));
    }
    let mut layer = vec![MultiLeaf { record: Vec::new(), probability: 1.0, state: initial.clone() }];
    for (pair, spec) in steps {
        let mut next = Vec::with_capacity(layer.len() * 4);
        for leaf in &layer {
            next.extend(extend_pair(leaf, *pair, spec, node)?);
        }
        layer = next;
    }
    Ok(layer)
}

/// `|⟨GHZ_{M,d}|ψ⟩|²`.
pub fn ghz_fidelity(state: &MultiQuditState) -> f64 {
    let n = state.amplitudes.len();
    let stride = (n - 1) / (state.d - 1);
    let overlap: C64 = (0..state.d).map(|i| state.amplitudes[i * stride]).sum();
    overlap.norm_sqr() / state.d as f64
}

/// Chain protocol: the full scheme on `(0,1)`, then `(1,2)`, ... along `order`.
pub fn chain_steps(
    order: &[(usize, usize)],
    scheme: &[IterationSpec],
) -> Vec<((usize, usize), IterationSpec)> {
    order.iter().flat_map(|&p| scheme.iter().map(move |s| (p, s.clone()))).collect()
}
