//! Transferability conditions.
//!
//! Checks for complete deterministic transfer, the allowed phase indices of
//! the deterministic scheme, and the conditions for deterministically
//! reaching maximal entanglement in a final iteration.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::gates::OutcomeNode;
use crate::kernel::{cis, complete_columns, svd, unitarity_defect, CMatrix, C64, EPS_COND};
use crate::states::{schmidt, TwoQubitResource, TwoQuditState};

/// Outcome of the complete-transfer test.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferCheck {
    pub ok: bool,
    pub residual_a: f64,
    pub residual_b: f64,
    pub reason: Option<String>,
}

/// `‖V_K† U_{K,0}† U_{K,1} V_K‖_F < 1e-9` for both nodes, with `V_K` the Schmidt vectors of `prev`.
pub fn check_complete_transfer(
    prev: &TwoQuditState,
    ua: [&CMatrix; 2],
    ub: [&CMatrix; 2],
) -> Result<TransferCheck> {
    let (da, db) = (prev.d_a(), prev.d_b());
    if ua.iter().any(|u| u.shape() != (da, da)) || ub.iter().any(|u| u.shape() != (db, db)) {
        return Err(Error::Dimension("gate sizes do not match the state".into()));
    }
    let sd = schmidt(&prev.normalized())?;
    let residual = |u: [&CMatrix; 2], v: &CMatrix| -> f64 {
        let m = &(&(&v.adjoint() * &u[0].adjoint()) * u[1]) * v;
        m.frobenius_norm()
    };
    let residual_a = residual(ua, &sd.left_basis);
    let residual_b = residual(ub, &sd.right_basis);
    if sd.rank > da.min(db) / 2 {
        return Ok(TransferCheck {
            ok: false,
            residual_a,
            residual_b,
            reason: Some(format!("rank exceeds d/2 (rank {})", sd.rank)),
        });
    }
    let ok = residual_a < EPS_COND && residual_b < EPS_COND;
    Ok(TransferCheck { ok, residual_a, residual_b, reason: None })
}

/// `Σ_{m=-I..I} exp(−i m θ)` for a qudit of dimension `d`.
fn ladder_sum(d: usize, theta: f64) -> C64 {
    let top = (d as f64 - 1.0) / 2.0;
    (0..d).map(|i| cis(-(top - i as f64) * theta)).sum()
}

/// Indices `k ∈ 1..d−1` whose phase `2πk/d` keeps every earlier sign combination orthogonal.
pub fn allowed_indices(d: usize, previous: &[usize]) -> BTreeSet<usize> {
    let n = previous.len();
    let combos = 3usize.pow(n as u32);
    (1..d)
        .filter(|&k| {
            (0..combos).all(|mut code| {
                let mut total = k as f64;
                for &kp in previous {
                    let tau = (code % 3) as f64 - 1.0;
                    code /= 3;
                    total += tau * kp as f64;
                }
                ladder_sum(d, 2.0 * PI * total / d as f64).norm() < EPS_COND
            })
        })
        .collect()
}

/// Pairing of `S↓` diagonal entries around `1/d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingReport {
    /// `ε_i = s_i − 1/d` for the upper half.
    pub paired_epsilons: Vec<f64>,
    pub has_central_element: bool,
    pub pairing_ok: bool,
    pub residual: f64,
}

pub fn pairing_report(s_desc: &[f64]) -> PairingReport {
    let d = s_desc.len();
    let inv = 1.0 / d as f64;
    let mut residual: f64 = 0.0;
    let mut eps = Vec::new();
    for i in 0..d / 2 {
        residual = residual.max((s_desc[i] + s_desc[d - 1 - i] - 2.0 * inv).abs());
        eps.push(s_desc[i] - inv);
    }
    let central = d % 2 == 1;
    if central {
        residual = residual.max((s_desc[d / 2] - inv).abs());
    }
    PairingReport { paired_epsilons: eps, has_central_element: central, pairing_ok: residual < EPS_COND, residual }
}

/// Degenerate blocks of `S↓` and the block-antidiagonal test of the `𝒰` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockStructureReport {
    /// Half-open index ranges of runs of equal entries.
    pub blocks: Vec<(usize, usize)>,
    pub antidiagonal_ok: [bool; 2],
    pub leakage: [f64; 2],
}

pub fn degenerate_blocks(s_desc: &[f64]) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=s_desc.len() {
        if i == s_desc.len() || (s_desc[i] - s_desc[start]).abs() > EPS_COND {
            blocks.push((start, i));
            start = i;
        }
    }
    blocks
}

/// Norm of the entries of `u` that connect non-mirrored levels of `S↓`.
fn antidiagonal_leakage(s_desc: &[f64], u: &CMatrix) -> f64 {
    let d = s_desc.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            if (s_desc[i] - s_desc[d - 1 - j]).abs() > EPS_COND {
                acc += u[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Real form of a resource: `φ = [[σ00 c, σ01 s], [σ10 s, σ11 c]]` with `s = √(1/2 − c²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceForm {
    pub c: f64,
    pub sigma: [[f64; 2]; 2],
    /// Relative phase absorbed into `𝒰_a` and `𝒰_b` by the realifying rotation.
    pub phase_a: f64,
    pub phase_b: f64,
    /// Whether the resource has the required shape (`|c00| = |c11|`, `|c01| = |c10|`).
    pub shape_ok: bool,
    pub kappa_sigma: f64,
    pub kappa_c: f64,
    /// `σ̄_c`.
    pub sigma_bar: f64,
}

/// Rotates a resource to real coefficients by local phases and reads off `c` and the signs.
pub fn resource_form(res: &TwoQubitResource) -> Result<ResourceForm> {
    let m = res.matrix();
    let arg = |i: usize, j: usize| m[(i, j)].arg();
    let nz = |i: usize, j: usize| m[(i, j)].norm() > 1e-12;
    let mut alpha = [None::<f64>; 2];
    let mut beta = [None::<f64>; 2];
    let (mut p, mut q) = (0, 0);
    for i in 0..2 {
        for j in 0..2 {
            if m[(i, j)].norm() > m[(p, q)].norm() {
                p = i;
                q = j;
            }
        }
    }
    alpha[p] = Some(0.0);
    beta[q] = Some(-arg(p, q));
    let (pp, qq) = (1 - p, 1 - q);
    if nz(p, qq) {
        beta[qq] = Some(-arg(p, qq));
    }
    if nz(pp, q) {
        alpha[pp] = Some(-arg(pp, q) - beta[q].unwrap());
    }
    if nz(pp, qq) {
        match (alpha[pp], beta[qq]) {
            (None, Some(b)) => alpha[pp] = Some(-arg(pp, qq) - b),
            (Some(a), None) => beta[qq] = Some(-arg(pp, qq) - a),
            (None, None) => alpha[pp] = Some(-arg(pp, qq)),
            _ => {}
        }
    }
    let alpha = [alpha[0].unwrap_or(0.0), alpha[1].unwrap_or(0.0)];
    let beta = [beta[0].unwrap_or(0.0), beta[1].unwrap_or(0.0)];
    let mut real = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let z = m[(i, j)] * cis(alpha[i] + beta[j]);
            if z.im.abs() > 1e-9 {
                return invalid("resource cannot be made real by local phases");
            }
            real[i][j] = z.re;
        }
    }
    let cc = real[0][0].abs();
    let s = real[0][1].abs();
    let shape_ok = (real[1][1].abs() - cc).abs() < 1e-9
        && (real[1][0].abs() - s).abs() < 1e-9
        && (cc * cc + s * s - 0.5).abs() < 1e-9;
    let sign = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    let mut sigma = [[sign(real[0][0]), sign(real[0][1])], [sign(real[1][0]), sign(real[1][1])]];
    // a vanishing coefficient leaves its sign free; fix it so that the product of all four is −1
    let prod = sigma[0][0] * sigma[0][1] * sigma[1][0] * sigma[1][1];
    if prod > 0.0 {
        if cc < 1e-12 {
            sigma[1][1] = -sigma[1][1];
        } else if s < 1e-12 {
            sigma[1][0] = -sigma[1][0];
        }
    }
    let kappa_sigma = (sigma[0][0] * sigma[1][1] + sigma[0][1] * sigma[1][0]) / 2.0;
    let kappa_c = cc * (0.5 - cc * cc).max(0.0).sqrt();
    let sigma_bar = if cc > 1e-12 { sigma[0][0] * sigma[1][1] } else { -sigma[0][1] * sigma[1][0] };
    Ok(ResourceForm {
        c: cc,
        sigma,
        phase_a: alpha[1] - alpha[0],
        phase_b: beta[1] - beta[0],
        shape_ok,
        kappa_sigma,
        kappa_c,
        sigma_bar,
    })
}

/// Residuals of the two remaining matrix constraints for one ordering of the nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Gen3Residuals {
    /// `‖κ_c √(S↓S↑) [𝒰_a, (𝒰_b + 𝒰_b†)ᵀ]‖`.
    pub commutator: f64,
    /// Deviation of `√(S↓S↑)[c²𝒰_a𝒰_bᵀ − (½ − c²)𝒰_a𝒰_b* + h.c.]` from a multiple of the identity.
    pub scalar: f64,
    /// Equal-outcome probability implied by the scalar.
    pub p_eq: f64,
}

/// Blockwise check for one pair of mirrored blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCheck {
    pub epsilon_bar: f64,
    /// Outermost blocks of a rank-deficient previous state carry no constraint.
    pub unconstrained: bool,
    pub zeta: f64,
    /// Largest deviation of the real parts of the relevant eigenvalues from their target.
    pub eigen_residual: f64,
    /// Residual of the extra cluster-resource equation (zero otherwise).
    pub cluster_residual: f64,
}

#[derive(Clone, Debug)]
pub struct MaxEntReport {
    pub resource_maximal: bool,
    pub form: ResourceForm,
    pub pairing: PairingReport,
    pub blocks: BlockStructureReport,
    /// `‖𝒰_K† S↓ 𝒰_K − S↑‖` for K = a, b.
    pub main_residual: [f64; 2],
    /// Index 0 is the given ordering, index 1 has nodes a and b swapped.
    pub gen3: [Gen3Residuals; 2],
    /// Per-block checks when a specialized form applies (`c ∈ {0, 1/2, 1/√2}`).
    pub block_checks: Vec<BlockCheck>,
    /// Whether the previous state had full rank.
    pub full_rank: bool,
    pub passed: bool,
}

fn sqrt_prod(s_desc: &[f64]) -> Vec<f64> {
    let d = s_desc.len();
    (0..d).map(|i| (s_desc[i] * s_desc[d - 1 - i]).max(0.0).sqrt()).collect()
}

fn left_diag(v: &[f64], m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * v[i])
}

fn gen3(s_desc: &[f64], ua: &CMatrix, ub: &CMatrix, form: &ResourceForm) -> Gen3Residuals {
    let d = s_desc.len();
    let sp = sqrt_prod(s_desc);
    let sum_b = (ub + &ub.adjoint()).transpose();
    let comm = &(ua * &sum_b) - &(&sum_b * ua);
    let commutator = form.kappa_c * left_diag(&sp, &comm).frobenius_norm();

    let c2 = form.c * form.c;
    let inner = &(ua * &ub.transpose()).scale_real(c2) - &(ua * &ub.conj()).scale_real(0.5 - c2);
    let l = left_diag(&sp, &(&inner + &inner.adjoint()));
    let mean = l.trace() / d as f64;
    let scalar = l.distance(&CMatrix::identity(d).scale(mean));
    let p_eq = (d as f64 * mean.re / form.sigma_bar + 1.0) / 2.0;
    Gen3Residuals { commutator, scalar, p_eq }
}

fn to_na(m: &CMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn eigen_real_parts(m: &CMatrix) -> Vec<f64> {
    let schur = to_na(m).schur();
    let (_, t) = schur.unpack();
    (0..m.rows()).map(|i| t[(i, i)].re).collect()
}

fn block_checks(
    s_desc: &[f64],
    ua: &CMatrix,
    ub: &CMatrix,
    form: &ResourceForm,
    p_eq: f64,
    full_rank: bool,
) -> Vec<BlockCheck> {
    let d = s_desc.len();
    let inv = 1.0 / d as f64;
    let blocks = degenerate_blocks(s_desc);
    let nb = blocks.len();
    let idx = |b: (usize, usize)| (b.0..b.1).collect::<Vec<_>>();
    let is = |x: f64, y: f64| (x - y).abs() < 1e-12;
    let mut out = Vec::new();
    for (bi, &blk) in blocks.iter().enumerate() {
        let mirror = blocks[nb - 1 - bi];
        let rows = idx(blk);
        let cols = idx(mirror);
        let eps_bar = s_desc[blk.0] - inv;
        let eps = eps_bar.abs();
        // blocks of 𝒰 for this ε̄ and for −ε̄
        let a_p = ua.select(&rows, &cols);
        let a_m = ua.select(&cols, &rows);
        let b_p = ub.select(&rows, &cols);
        let b_m = ub.select(&cols, &rows);
        let unconstrained = !full_rank && (eps - inv).abs() < EPS_COND;
        let zeta = if unconstrained {
            0.0
        } else {
            form.sigma_bar * (p_eq - 0.5) / (1.0 - (d as f64 * eps).powi(2)).max(0.0).sqrt()
        };
        let (target, mat, cluster) = if is(form.c, std::f64::consts::FRAC_1_SQRT_2) {
            (zeta, &a_p * &b_p.transpose(), None)
        } else if is(form.c, 0.0) {
            (zeta, &a_p * &b_m.conj(), None)
        } else if is(form.c, 0.5) {
            let diff = (&b_p - &b_m.adjoint()).transpose();
            let sum_l = (&b_p + &b_m.adjoint()).transpose();
            let sum_r = (&b_m + &b_p.adjoint()).transpose();
            let extra = &(&a_p * &sum_l) - &(&sum_r * &a_m);
            (2.0 * zeta, &a_p * &diff, Some(extra.frobenius_norm()))
        } else {
            return Vec::new();
        };
        let (eigen_residual, cluster_residual) = if unconstrained {
            (0.0, 0.0)
        } else {
            let er = eigen_real_parts(&mat).iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
            (er, cluster.unwrap_or(0.0))
        };
        out.push(BlockCheck { epsilon_bar: eps_bar, unconstrained, zeta, eigen_residual, cluster_residual });
    }
    out
}

/// Checks the maximal-entanglement conditions for a final iteration.
pub fn check_maxent_conditions(
    s_desc: &[f64],
    u_cal_a: &CMatrix,
    u_cal_b: &CMatrix,
    resource: &TwoQubitResource,
) -> Result<MaxEntReport> {
    let d = s_desc.len();
    if u_cal_a.shape() != (d, d) || u_cal_b.shape() != (d, d) {
        return Err(Error::Dimension(format!("𝒰 matrices must be {d}x{d}")));
    }
    if (s_desc.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return invalid("diagonal of S must sum to 1");
    }
    if s_desc.windows(2).any(|w| w[1] > w[0] + 1e-12) || s_desc.iter().any(|&x| x < -1e-12) {
        return invalid("diagonal of S must be non-negative and descending");
    }
    for u in [u_cal_a, u_cal_b] {
        if unitarity_defect(u)? > 1e-9 {
            return invalid("𝒰 matrices must be unitary");
        }
    }
    let form = resource_form(resource)?;
    let ua = u_cal_a.scale(cis(-form.phase_a));
    let ub = u_cal_b.scale(cis(-form.phase_b));

    let pairing = pairing_report(s_desc);
    let blocks = degenerate_blocks(s_desc);
    let leakage = [antidiagonal_leakage(s_desc, &ua), antidiagonal_leakage(s_desc, &ub)];
    let s_down = CMatrix::from_real_diag(s_desc);
    let rev: Vec<f64> = s_desc.iter().rev().copied().collect();
    let s_up = CMatrix::from_real_diag(&rev);
    let main = |u: &CMatrix| (&(&u.adjoint() * &s_down) * u).distance(&s_up);
    let main_residual = [main(&ua), main(&ub)];

    let g = [gen3(s_desc, &ua, &ub, &form), gen3(s_desc, &ub, &ua, &form)];
    let full_rank = s_desc.iter().all(|&x| x > 1e-12);
    let p_eq = if full_rank { g[0].p_eq } else { 0.5 };
    let checks = block_checks(s_desc, &ua, &ub, &form, p_eq, full_rank);
    let swapped = block_checks(s_desc, &ub, &ua, &form, p_eq, full_rank);

    let resource_maximal = resource.is_maximally_entangled();
    let blocks_ok = checks.iter().chain(&swapped).all(|b| b.eigen_residual < EPS_COND && b.cluster_residual < EPS_COND);
    let passed = resource_maximal
        && form.shape_ok
        && pairing.pairing_ok
        && leakage.iter().all(|&x| x < EPS_COND)
        && main_residual.iter().all(|&x| x < EPS_COND)
        && g.iter().all(|r| r.commutator < EPS_COND && r.scalar < EPS_COND)
        && (full_rank || (g[0].p_eq - 0.5).abs() < EPS_COND)
        && blocks_ok;

    let mut block_checks = checks;
    block_checks.extend(swapped);
    Ok(MaxEntReport {
        resource_maximal,
        form,
        pairing,
        blocks: BlockStructureReport {
            blocks,
            antidiagonal_ok: [leakage[0] < EPS_COND, leakage[1] < EPS_COND],
            leakage,
        },
        main_residual,
        gen3: g,
        block_checks,
        full_rank,
        passed,
    })
}

/// `S↓` and `𝒰_a`, `𝒰_b` for a previous state and the final iteration's gates.
#[derive(Clone, Debug)]
pub struct ConditionInputs {
    pub s_desc: Vec<f64>,
    pub u_cal_a: CMatrix,
    pub u_cal_b: CMatrix,
}

fn frame(v: &CMatrix, u0: &CMatrix, u1: &CMatrix) -> Result<CMatrix> {
    let d = u0.rows();
    let r = v.cols();
    let first = u0.try_mul(v)?;
    let second = u1.try_mul(v)?;
    let mut q = CMatrix::zeros(d, d);
    for j in 0..r {
        q.set_column(j, &first.column(j));
    }
    let mut filled = r;
    for j in 0..r {
        if filled == d {
            break;
        }
        let mut cand = second.column(j);
        for _ in 0..2 {
            for k in 0..filled {
                let col = q.column(k);
                let ov: C64 = col.iter().zip(&cand).map(|(x, y)| x.conj() * y).sum();
                for (x, y) in cand.iter_mut().zip(&col) {
                    *x -= ov * y;
                }
            }
        }
        let nrm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-9 {
            let col: Vec<C64> = cand.iter().map(|z| z / nrm).collect();
            q.set_column(filled, &col);
            filled += 1;
        }
    }
    let missing: Vec<usize> = (filled..d).collect();
    complete_columns(&mut q, &missing);
    Ok(q)
}

/// Builds `𝒰_K = Q_K† U_{K,1} U_{K,0}† Q_K` with `Q_K = [U_{K,0} V_K | complement of U_{K,1} V_K]`.
pub fn condition_inputs(prev: &TwoQuditState, ua: [&CMatrix; 2], ub: [&CMatrix; 2]) -> Result<ConditionInputs> {
    let d = prev.d_a();
    if prev.d_b() != d {
        return invalid("condition inputs need equal qudit dimensions");
    }
    let sd = schmidt(&prev.normalized())?;
    let qa = frame(&sd.left_basis, ua[0], ua[1])?;
    let qb = frame(&sd.right_basis, ub[0], ub[1])?;
    let cal = |q: &CMatrix, u: [&CMatrix; 2]| &(&(&q.adjoint() * u[1]) * &u[0].adjoint()) * q;
    let mut s_desc = sd.chis();
    s_desc.resize(d, 0.0);
    Ok(ConditionInputs { s_desc, u_cal_a: cal(&qa, ua), u_cal_b: cal(&qb, ub) })
}

/// Solutions of `c² cos(ξ_aφ_a + ξ_bφ_b) − (½ − c²) cos(ξ_aφ_a − ξ_bφ_b) = 0` on `c ∈ [0, 1/√2]`.
#[derive(Clone, Debug, PartialEq)]
pub enum CSolution {
    None,
    One(f64),
    All,
}

pub fn solve_resource_c(xi_a: f64, xi_b: f64, phi_a: f64, phi_b: f64) -> CSolution {
    let a = (xi_a * phi_a + xi_b * phi_b).cos();
    let b = (xi_a * phi_a - xi_b * phi_b).cos();
    if a.abs() < 1e-9 && b.abs() < 1e-9 {
        return CSolution::All;
    }
    if (a + b).abs() < 1e-9 {
        return CSolution::None;
    }
    let c2 = b / (2.0 * (a + b));
    if (-1e-12..=0.5 + 1e-12).contains(&c2) {
        CSolution::One(c2.clamp(0.0, 0.5).sqrt())
    } else {
        CSolution::None
    }
}

/// Leaf spectra equal `{λ₊χ_k} ∪ {λ₋χ_k}` as multisets.
pub fn schmidt_product_check(prev_chi: &[f64], resource: &TwoQubitResource, leaves: &[OutcomeNode]) -> Result<bool> {
    let (lp, lm) = resource.lambdas();
    let mut want: Vec<f64> = prev_chi.iter().flat_map(|&x| [lp * x, lm * x]).collect();
    want.sort_by(|a, b| b.total_cmp(a));
    for leaf in leaves {
        let dec = svd(leaf.state.psi())?;
        let mut got: Vec<f64> = dec.singular_values.iter().map(|s| s * s).collect();
        got.resize(got.len().max(want.len()), 0.0);
        let mut w = want.clone();
        w.resize(got.len(), 0.0);
        if got.iter().zip(&w).any(|(x, y)| (x - y).abs() > 1e-9) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `𝒰` for the single-element-block d=3 case: `e^{iξπ/2}[[0,0,e^{iα}],[0,1,0],[−e^{−iα},0,0]]`.
pub fn d3_u_cal_quarter(xi: f64, alpha: f64) -> CMatrix {
    let g = cis(xi * PI / 2.0);
    let mut m = CMatrix::zeros(3, 3);
    m[(0, 2)] = g * cis(alpha);
    m[(1, 1)] = g;
    m[(2, 0)] = -g * cis(-alpha);
    m
}

/// `𝒰` for the φ=π solution: `e^{iξπ}[[0,0,e^{iα}],[0,−1,0],[e^{−iα},0,0]]`.
pub fn d3_u_cal_half(xi: f64, alpha: f64) -> CMatrix {
    let g = cis(xi * PI);
    let mut m = CMatrix::zeros(3, 3);
    m[(0, 2)] = g * cis(alpha);
    m[(1, 1)] = -g;
    m[(2, 0)] = g * cis(-alpha);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{apply_iteration, conditional_unitary, IterationSpec, NodeParams, Postselect};
    use crate::kernel::ONE;
    use crate::states::{plus_state, TwoQubitResource};

    fn gates(d: usize, xi: f64, phi: f64) -> [CMatrix; 2] {
        let n = NodeParams::new(d, xi).unwrap();
        [conditional_unitary(&n, 0, phi), conditional_unitary(&n, 1, phi)]
    }

    #[test]
    fn complete_transfer_examples() {
        for d in [3, 4, 8] {
            for k in 1..d {
                let u = gates(d, 20.0, 2.0 * PI * k as f64 / d as f64);
                let r = check_complete_transfer(&plus_state(d).unwrap(), [&u[0], &u[1]], [&u[0], &u[1]]).unwrap();
                assert!(r.ok, "d={d} k={k}");
            }
        }
        let u = gates(4, 0.0, PI / 3.0);
        let r = check_complete_transfer(&plus_state(4).unwrap(), [&u[0], &u[1]], [&u[0], &u[1]]).unwrap();
        assert!(!r.ok);
        // |⟨+₄|U₀†U₁|+₄⟩| = |Σ_m e^{iφm}| / 4
        let direct: f64 = (0..4).map(|i| cis((i as f64 - 1.5) * PI / 3.0)).sum::<C64>().norm() / 4.0;
        assert!((r.residual_a - direct).abs() < 1e-12);

        let prev = TwoQuditState::new(CMatrix::from_real_diag(&[0.6f64.sqrt(), 0.3f64.sqrt(), 0.1f64.sqrt(), 0.0])).unwrap();
        let u = gates(4, 0.0, PI);
        let r = check_complete_transfer(&prev, [&u[0], &u[1]], [&u[0], &u[1]]).unwrap();
        assert!(!r.ok);
        assert!(r.reason.unwrap().contains("rank exceeds d/2"));
    }

    #[test]
    fn allowed_index_examples() {
        assert_eq!(allowed_indices(8, &[1]), BTreeSet::from([2, 3, 4, 5, 6]));
        assert!(allowed_indices(6, &[1, 2]).is_empty());
        assert_eq!(allowed_indices(5, &[]), (1..5).collect());
    }

    #[test]
    fn pairing_examples() {
        assert!(pairing_report(&[2.0 / 3.0, 1.0 / 3.0, 0.0]).pairing_ok);
        assert!(!pairing_report(&[0.5, 0.5, 0.0]).pairing_ok);
        for lp in [0.5, 0.7, 0.93] {
            assert!(pairing_report(&[lp, 1.0 - lp]).pairing_ok);
        }
    }

    #[test]
    fn d3_quarter_solution_passes_for_even_xi() {
        let s = [2.0 / 3.0, 1.0 / 3.0, 0.0];
        for xi in [0.0, 2.0, 20.0] {
            let u = d3_u_cal_quarter(xi, 0.4);
            let r = check_maxent_conditions(&s, &u, &u, &TwoQubitResource::cluster()).unwrap();
            assert!(r.passed, "xi={xi}: {r:?}");
        }
        let u = d3_u_cal_quarter(21.0, 0.4);
        let r = check_maxent_conditions(&s, &u, &u, &TwoQubitResource::cluster()).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn d3_equal_pair_fails_pairing() {
        let u = d3_u_cal_quarter(0.0, 0.0);
        let r = check_maxent_conditions(&[0.5, 0.5, 0.0], &u, &u, &TwoQubitResource::cluster()).unwrap();
        assert!(!r.pairing.pairing_ok);
        assert!(!r.passed);
    }

    #[test]
    fn derived_inputs_match_the_constructed_scheme() {
        let init = crate::schemes::constructed_d3_initial(0.0);
        let n = NodeParams::new(3, 20.0).unwrap();
        let spec = IterationSpec::symmetric(TwoQubitResource::psi_plus(), PI, Postselect::Equal);
        let leaves = apply_iteration(&init, &spec, (&n, &n)).unwrap();
        let u = gates(3, 20.0, PI / 2.0);
        for leaf in &leaves {
            let inp = condition_inputs(&leaf.state, [&u[0], &u[1]], [&u[0], &u[1]]).unwrap();
            assert!((inp.s_desc[0] - 2.0 / 3.0).abs() < 1e-12);
            let r = check_maxent_conditions(&inp.s_desc, &inp.u_cal_a, &inp.u_cal_b, &TwoQubitResource::cluster())
                .unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn resource_c_solver() {
        match solve_resource_c(20.0, 20.0, PI / 2.0, PI / 2.0) {
            CSolution::One(cv) => assert!((cv - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(solve_resource_c(21.0, 21.0, PI / 2.0, PI / 2.0), CSolution::None);
        assert_eq!(solve_resource_c(20.0, 21.0, PI / 2.0, PI / 2.0), CSolution::All);
    }

    #[test]
    fn resource_forms() {
        let f = resource_form(&TwoQubitResource::cluster()).unwrap();
        assert!((f.c - 0.5).abs() < 1e-12 && f.shape_ok);
        assert_eq!(f.kappa_sigma, 0.0);
        assert!((f.kappa_c - 0.25).abs() < 1e-12);
        let f = resource_form(&TwoQubitResource::psi_plus()).unwrap();
        assert!(f.c.abs() < 1e-12 && f.shape_ok && f.kappa_c.abs() < 1e-12);
        let rotated = TwoQubitResource::phi_plus()
            .apply_local(&CMatrix::from_diag(&[ONE, cis(0.7)]), &CMatrix::identity(2))
            .unwrap();
        let f = resource_form(&rotated).unwrap();
        assert!(f.shape_ok);
        assert!((f.phase_a + 0.7).abs() < 1e-12);
    }

    #[test]
    fn schmidt_products() {
        let n = NodeParams::new(4, 3.0).unwrap();
        let r = TwoQubitResource::with_entanglement(0.6).unwrap();
        let spec = IterationSpec::symmetric(r.clone(), PI / 2.0, Postselect::None);
        let leaves = apply_iteration(&plus_state(4).unwrap(), &spec, (&n, &n)).unwrap();
        assert!(schmidt_product_check(&[1.0], &r, &leaves).unwrap());
        assert!(!schmidt_product_check(&[1.0], &TwoQubitResource::psi_plus(), &leaves).unwrap());
    }
}
