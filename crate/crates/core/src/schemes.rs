//! Phase sets, named protocols, summary statistics and phase optimization.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::gates::{expected_ebits, outcome_tree, ConditionalCorrection, IterationSpec, NodeParams, OutcomeNode, Postselect};
use crate::kernel::{c, cis, CMatrix, EPS_GROUP};
use crate::states::{plus_state, ResourceKind, TwoQubitResource, TwoQuditState};

/// `⌊log₂ d⌋`.
pub fn floor_log2(d: usize) -> usize {
    assert!(d >= 1);
    (usize::BITS - 1 - d.leading_zeros()) as usize
}

/// `⌈log₂ d⌉`.
pub fn ceil_log2(d: usize) -> usize {
    let f = floor_log2(d);
    if d.is_power_of_two() {
        f
    } else {
        f + 1
    }
}

/// Ordered list of iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct Scheme {
    pub iterations: Vec<IterationSpec>,
}

impl Scheme {
    /// Same resource and postselection in every round, symmetric phases.
    pub fn uniform(resource: &TwoQubitResource, phases: &[f64], postselect: Postselect) -> Self {
        let iterations = phases
            .iter()
            .map(|&phi| IterationSpec::symmetric(resource.clone(), phi, postselect.clone()))
            .collect();
        Self { iterations }
    }

    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.phi_a).collect()
    }

    /// Runs the scheme with both nodes at dimension `d` and splitting ratio `xi`.
    pub fn run(&self, initial: &TwoQuditState, xi: f64) -> Result<Vec<OutcomeNode>> {
        self.run_with(initial, &NodeParams::new(initial.d_a(), xi)?)
    }

    /// Runs the scheme with identical parameters on both nodes.
    pub fn run_with(&self, initial: &TwoQuditState, node: &NodeParams) -> Result<Vec<OutcomeNode>> {
        if initial.d_a() != initial.d_b() {
            return invalid("symmetric run needs equal qudit dimensions");
        }
        outcome_tree(initial, &self.iterations, (node, node))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeStats {
    /// `⟨E⟩`, conditioned on survival when postselecting.
    pub expected_ebits: f64,
    /// `E_d = log₂ d`.
    pub max_ebits: f64,
    pub distinct_e_count: usize,
    /// Probability-weighted standard deviation of `E`.
    pub std_dev: f64,
    pub success_probability: f64,
    pub leaf_count: usize,
    /// Number of leaf classes with equal `(P, E)`.
    pub group_count: usize,
}

/// Number of distinct values when values closer than `tol` are merged.
pub fn distinct_count(values: &[f64], tol: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for x in v {
        if x - last > tol {
            count += 1;
            last = x;
        }
    }
    count
}

pub fn stats(leaves: &[OutcomeNode], d: usize) -> SchemeStats {
    let (success, mean) = expected_ebits(leaves);
    let var = if success > 0.0 {
        leaves.iter().map(|l| l.probability * (l.ebits - mean).powi(2)).sum::<f64>() / success
    } else {
        0.0
    };
    let energies: Vec<f64> = leaves.iter().map(|l| l.ebits).collect();
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for l in leaves {
        let known = groups
            .iter()
            .any(|&(p, e)| (p - l.probability).abs() < EPS_GROUP && (e - l.ebits).abs() < EPS_GROUP);
        if !known {
            groups.push((l.probability, l.ebits));
        }
    }
    let distinct = distinct_count(&energies, EPS_GROUP);
    SchemeStats {
        expected_ebits: mean,
        max_ebits: (d as f64).log2(),
        distinct_e_count: distinct,
        std_dev: if distinct <= 1 { 0.0 } else { var.max(0.0).sqrt() },
        success_probability: success,
        leaf_count: leaves.len(),
        group_count: groups.len(),
    }
}

/// `φ_ν = 2^ν π / d` for `ν = 1..⌊log₂ d⌋`.
pub fn deterministic_phase_set(d: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return invalid(format!("qudit dimension {d} < 2"));
    }
    Ok((1..=floor_log2(d)).map(|nu| (1u64 << nu) as f64 * PI / d as f64).collect())
}

/// `φ_ν = (2π / 2^ν)(2p_ν + 1)` for `ν = 1..⌈log₂ d⌉`; missing `p` entries are zero.
pub fn power_of_two_phase_set(d: usize, p: &[u64]) -> Result<Vec<f64>> {
    if d < 2 {
        return invalid(format!("qudit dimension {d} < 2"));
    }
    let n = ceil_log2(d);
    if p.len() > n {
        return invalid(format!("{} offsets given for {n} rounds", p.len()));
    }
    Ok((1..=n)
        .map(|nu| {
            let off = p.get(nu - 1).copied().unwrap_or(0);
            2.0 * PI / (1u64 << nu) as f64 * (2 * off + 1) as f64
        })
        .collect())
}

/// Whether the constructed d=3 protocol is tuned.
#[derive(Clone, Debug, PartialEq)]
pub enum Tuning {
    Tuned,
    /// `ξ` is not an even integer; carries the predicted `1 − E/E_d` on survivors.
    Detuned { predicted_shortfall: f64 },
}

#[derive(Clone, Debug)]
pub struct ConstructedScheme {
    pub scheme: Scheme,
    pub initial: TwoQuditState,
    pub xi: f64,
    pub tuning: Tuning,
}

impl ConstructedScheme {
    /// Ψ⁻ in round one with the unequal outcomes kept instead.
    pub fn psi_minus_variant(&self) -> Scheme {
        let mut s = self.scheme.clone();
        s.iterations[0].resource = TwoQubitResource::psi_minus();
        s.iterations[0].postselect = Postselect::Unequal;
        s
    }

    pub fn run(&self) -> Result<Vec<OutcomeNode>> {
        self.scheme.run(&self.initial, self.xi)
    }
}

/// Product state `(1/√3)(1,1,1) ⊗ (1, −√2 e^{iθ}, 1)/2` that the constructed d=3 protocol starts from.
pub fn constructed_d3_initial(theta: f64) -> TwoQuditState {
    let a = vec![c(1.0 / 3f64.sqrt(), 0.0); 3];
    let b = [c(0.5, 0.0), cis(theta) * (-(2f64.sqrt()) / 2.0), c(0.5, 0.0)];
    TwoQuditState::product(&a, &b).expect("normalized by construction")
}

/// Target state after the first round of the constructed protocol.
pub fn constructed_d3_intermediate(theta: f64) -> CMatrix {
    let s = 1.0 / 6f64.sqrt();
    let mut m = CMatrix::zeros(3, 3);
    m[(0, 0)] = c(-s, 0.0);
    m[(0, 2)] = c(s, 0.0);
    m[(2, 0)] = c(s, 0.0);
    m[(2, 2)] = c(-s, 0.0);
    m[(1, 1)] = cis(theta) * (2f64.sqrt() * s);
    m
}

/// Two-round d=3 protocol: Ψ⁺ at φ=π keeping equal outcomes, then the cluster resource at φ=π/2.
pub fn constructed_d3_scheme(xi: f64) -> Result<ConstructedScheme> {
    if !xi.is_finite() {
        return invalid("splitting ratio must be finite");
    }
    let scheme = Scheme {
        iterations: vec![
            IterationSpec::symmetric(TwoQubitResource::psi_plus(), PI, Postselect::Equal),
            IterationSpec::symmetric(TwoQubitResource::cluster(), PI / 2.0, Postselect::None),
        ],
    };
    let initial = constructed_d3_initial(0.0);
    let even = (xi / 2.0 - (xi / 2.0).round()).abs() < 1e-9;
    let mut out = ConstructedScheme { scheme, initial, xi, tuning: Tuning::Tuned };
    if !even {
        let st = stats(&out.run()?, 3);
        out.tuning = Tuning::Detuned { predicted_shortfall: 1.0 - st.expected_ebits / st.max_ebits };
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResourceFamily {
    Bell,
    Cluster,
}

impl FromStr for ResourceFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bell" => Ok(Self::Bell),
            "cluster" => Ok(Self::Cluster),
            other => invalid(format!("unknown resource family '{other}'")),
        }
    }
}

impl fmt::Display for ResourceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bell => "bell",
            Self::Cluster => "cluster",
        })
    }
}

/// Checks that `xi` is an integer multiple of `2^(ν_max − 1)`.
pub fn check_xi_rule(d: usize, xi: f64) -> Result<()> {
    let unit = (1u64 << (ceil_log2(d).max(1) - 1)) as f64;
    let r = xi / unit;
    if (r - r.round()).abs() > 1e-9 {
        return Err(Error::XiTuning(format!(
            "d = {d} needs xi to be an integer multiple of {unit}, got {xi}"
        )));
    }
    Ok(())
}

/// Smallest integer multiple of `2^(ν_max − 1)` that is at least 20.
pub fn table1_default_xi(d: usize) -> f64 {
    let unit = 1u64 << (ceil_log2(d).max(1) - 1);
    (20u64.div_ceil(unit) * unit) as f64
}

/// Power-of-two phase set without postselection, for any named resource.
pub fn phase_set_stats(d: usize, kind: ResourceKind, xi: f64) -> Result<SchemeStats> {
    if !kind.is_psi() {
        check_xi_rule(d, xi)?;
    }
    let phases = power_of_two_phase_set(d, &[])?;
    let scheme = Scheme::uniform(&kind.resource(), &phases, Postselect::None);
    Ok(stats(&scheme.run(&plus_state(d)?, xi)?, d))
}

/// One row of the phase-set summary table.
pub fn table1_row(d: usize, family: ResourceFamily, xi: f64) -> Result<SchemeStats> {
    let kind = match family {
        ResourceFamily::Bell => ResourceKind::PsiPlus,
        ResourceFamily::Cluster => ResourceKind::Cluster,
    };
    phase_set_stats(d, kind, xi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Unconditional `⟨E⟩`.
    ExpectedE,
    /// `⟨E⟩` conditioned on the postselected outcomes.
    PostselectedE,
}

#[derive(Clone, Debug)]
pub struct OptimizeProblem {
    pub d: usize,
    pub resource: TwoQubitResource,
    pub xi: f64,
    pub objective: Objective,
    /// Defaults to the power-of-two phase set.
    pub seed: Option<Vec<f64>>,
    /// Per-round rules; empty means none for `ExpectedE` and equal for `PostselectedE`.
    pub postselect: Vec<Postselect>,
    /// Coordinates held at their seed value.
    pub fixed: Vec<bool>,
    /// Second-order correction applied on both nodes.
    pub correction: Option<ConditionalCorrection>,
}

impl OptimizeProblem {
    pub fn new(d: usize, resource: TwoQubitResource, xi: f64, objective: Objective) -> Self {
        Self { d, resource, xi, objective, seed: None, postselect: Vec::new(), fixed: Vec::new(), correction: None }
    }

    fn rules(&self, rounds: usize) -> Vec<Postselect> {
        if self.postselect.is_empty() {
            let r = match self.objective {
                Objective::ExpectedE => Postselect::None,
                Objective::PostselectedE => Postselect::Equal,
            };
            vec![r; rounds]
        } else {
            self.postselect.clone()
        }
    }

    fn scheme(&self, phases: &[f64]) -> Scheme {
        let rules = self.rules(phases.len());
        let iterations = phases
            .iter()
            .zip(rules)
            .map(|(&phi, rule)| IterationSpec::symmetric(self.resource.clone(), phi, rule))
            .collect();
        Scheme { iterations }
    }

    /// Statistics at the given phases.
    pub fn evaluate(&self, phases: &[f64]) -> Result<SchemeStats> {
        let mut node = NodeParams::new(self.d, self.xi)?;
        if let Some(corr) = &self.correction {
            node = node.with_correction(corr.clone())?;
        }
        let leaves = self.scheme(phases).run_with(&plus_state(self.d)?, &node)?;
        Ok(stats(&leaves, self.d))
    }

    fn score(&self, phases: &[f64]) -> f64 {
        match self.evaluate(phases) {
            Ok(s) if s.success_probability > 0.0 => s.expected_ebits,
            _ => f64::NEG_INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub phases: Vec<f64>,
    pub stats: SchemeStats,
    pub objective: f64,
    pub seed_objective: f64,
    pub improved: bool,
}

const SCAN_HALF_WIDTH: f64 = PI / 4.0;
const SCAN_INTERVALS: usize = 64;

/// Local maximization: coordinate scans with golden-section refinement, then a simplex polish.
pub fn optimize_phases(problem: &OptimizeProblem) -> Result<OptimizeResult> {
    let seed = match &problem.seed {
        Some(s) => s.clone(),
        None => power_of_two_phase_set(problem.d, &[])?,
    };
    if !problem.postselect.is_empty() && problem.postselect.len() != seed.len() {
        return invalid("one postselection rule per round is required");
    }
    if !problem.fixed.is_empty() && problem.fixed.len() != seed.len() {
        return invalid("fixed mask must have one entry per round");
    }
    let free: Vec<usize> =
        (0..seed.len()).filter(|&i| !problem.fixed.get(i).copied().unwrap_or(false)).collect();

    let seed_objective = problem.score(&seed);
    let mut x = seed.clone();
    let mut fx = seed_objective;

    for _sweep in 0..60 {
        let before = fx;
        for &i in &free {
            let (xi, fi) = coordinate_step(problem, &x, i, fx);
            x[i] = xi;
            fx = fi;
        }
        if fx - before < 1e-13 {
            break;
        }
    }

    if !free.is_empty() {
        let (xp, fp) = nelder_mead(problem, &x, &free, fx);
        if fp > fx {
            x = xp;
            fx = fp;
        }
    }

    let stats = problem.evaluate(&x)?;
    Ok(OptimizeResult { phases: x, stats, objective: fx, seed_objective, improved: fx > seed_objective + 1e-12 })
}

fn coordinate_step(problem: &OptimizeProblem, x: &[f64], i: usize, fx: f64) -> (f64, f64) {
    let mut trial = x.to_vec();
    let mut eval = |v: f64| {
        trial[i] = v;
        problem.score(&trial)
    };
    let h = 2.0 * SCAN_HALF_WIDTH / SCAN_INTERVALS as f64;
    let x0 = x[i];
    let (mut best_x, mut best_f) = (x0, fx);
    for k in 0..=SCAN_INTERVALS {
        let v = x0 - SCAN_HALF_WIDTH + k as f64 * h;
        let f = eval(v);
        if f > best_f {
            best_x = v;
            best_f = f;
        }
    }
    let (gx, gf) = golden_max(&mut eval, best_x - h, best_x + h, 80);
    if gf > best_f {
        (gx, gf)
    } else {
        (best_x, best_f)
    }
}

fn golden_max(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn nelder_mead(problem: &OptimizeProblem, x0: &[f64], free: &[usize], f0: f64) -> (Vec<f64>, f64) {
    let n = free.len();
    let embed = |y: &[f64]| {
        let mut full = x0.to_vec();
        for (k, &i) in free.iter().enumerate() {
            full[i] = y[k];
        }
        full
    };
    // minimize the negated objective
    let cost = |y: &[f64]| -problem.score(&embed(y));
    let start: Vec<f64> = free.iter().map(|&i| x0[i]).collect();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), -f0)];
    for k in 0..n {
        let mut y = start.clone();
        y[k] += 1e-3;
        let fy = cost(&y);
        simplex.push((y, fy));
    }
    for _ in 0..400 * n.max(1) {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < 1e-15 {
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = cost(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = cost(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let xc = along(-0.5);
            let fc = cost(&xc);
            if fc < worst.1 {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let y: Vec<f64> = best.iter().zip(&p.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fy = cost(&y);
                    *p = (y, fy);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (embed(&simplex[0].0), -simplex[0].1)
}

#[derive(Clone, Debug)]
pub struct LeafSample {
    pub record: String,
    pub probability: f64,
    pub ebits: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub phi: f64,
    /// Sum of all phases applied so far, including `phi`.
    pub accumulated: f64,
    pub expected: f64,
    pub success: f64,
    pub leaves: Vec<LeafSample>,
}

/// Sweeps the phase of round `fixed.len() + 1` over `[0, 2π]` with earlier phases held fixed.
pub fn sweep_expected_e(
    d: usize,
    resource: &TwoQubitResource,
    xi: f64,
    fixed: &[f64],
    points: usize,
    postselect: Postselect,
) -> Result<Vec<SweepRow>> {
    if points < 2 {
        return invalid("a sweep needs at least two grid points");
    }
    let init = plus_state(d)?;
    let prefix: f64 = fixed.iter().sum();
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let phi = 2.0 * PI * k as f64 / (points - 1) as f64;
        let mut phases = fixed.to_vec();
        phases.push(phi);
        let scheme = Scheme::uniform(resource, &phases, postselect.clone());
        let leaves = scheme.run(&init, xi)?;
        let (success, expected) = expected_ebits(&leaves);
        rows.push(SweepRow {
            phi,
            accumulated: prefix + phi,
            expected,
            success,
            leaves: leaves
                .iter()
                .map(|l| LeafSample { record: l.record_label(), probability: l.probability, ebits: l.ebits })
                .collect(),
        });
    }
    Ok(rows)
}

/// Global-phase-aligned distance between two state matrices.
pub fn state_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    a.distance_up_to_phase(b)
}
