#![allow(dead_code)]

use std::f64::consts::PI;

use qudit_accum::gates::{conditional_unitary, NodeParams, OutcomeNode};
use qudit_accum::kernel::{c, cis, svd, CMatrix, C64};
use qudit_accum::states::{plus_qudit, TwoQubitResource, TwoQuditState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
}

/// Unitary polar factor of a random matrix.
pub fn random_unitary(r: &mut impl Rng, n: usize) -> CMatrix {
    let dec = svd(&random_matrix(r, n, n)).unwrap();
    &dec.u * &dec.vh
}

pub fn normalize(m: &CMatrix) -> CMatrix {
    m.scale_real(1.0 / m.frobenius_norm())
}

pub fn random_state(r: &mut impl Rng, da: usize, db: usize) -> TwoQuditState {
    TwoQuditState::new(normalize(&random_matrix(r, da, db))).unwrap()
}

/// Random state of Schmidt rank `rank`.
pub fn random_rank_state(r: &mut impl Rng, d: usize, rank: usize) -> TwoQuditState {
    let a = random_matrix(r, d, rank);
    let b = random_matrix(r, rank, d);
    TwoQuditState::new(normalize(&(&a * &b))).unwrap()
}

pub fn random_resource(r: &mut impl Rng) -> TwoQubitResource {
    TwoQubitResource::new(normalize(&random_matrix(r, 2, 2))).unwrap()
}

/// Random resource with `|det φ|` at least `min_det`.
pub fn random_entangled_resource(r: &mut impl Rng, min_det: f64) -> TwoQubitResource {
    loop {
        let res = random_resource(r);
        if res.det().norm() >= min_det {
            return res;
        }
    }
}

/// `(P, E)` pairs sorted for multiset comparison.
pub fn leaf_pairs(leaves: &[OutcomeNode]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = leaves.iter().map(|l| (l.probability, l.ebits)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

/// Multiset equality with tolerance: every element of `a` is matched to a distinct close element of `b`.
pub fn multisets_close(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let hit = b
            .iter()
            .enumerate()
            .position(|(k, y)| !used[k] && (x.0 - y.0).abs() < tol && (x.1 - y.1).abs() < tol);
        match hit {
            Some(k) => {
                used[k] = true;
                true
            }
            None => false,
        }
    })
}

/// Direct simulation of one iteration on the full qudit-qudit-electron-electron vector.
///
/// The electrons start in `φ_ee`; electron `K` in state `j` applies
/// `exp(−iφ(−1)^j(m+ξ)/2)` to its qudit; both electrons are then measured in the
/// basis `⟨j| = Σ_j' η_{jj'}⟨j'|/√2`. Returns the unnormalized qudit state for `(ja, jb)`.
pub fn brute_force_branch(
    psi: &CMatrix,
    res: &TwoQubitResource,
    phi: (f64, f64),
    xi: (f64, f64),
    ja: usize,
    jb: usize,
) -> CMatrix {
    let (da, db) = psi.shape();
    let idx = |i: usize, k: usize, ea: usize, eb: usize| ((i * db + k) * 2 + ea) * 2 + eb;
    let mut v = vec![c(0.0, 0.0); da * db * 4];
    for i in 0..da {
        for k in 0..db {
            for ea in 0..2 {
                for eb in 0..2 {
                    v[idx(i, k, ea, eb)] = psi[(i, k)] * res.coeff(ea, eb);
                }
            }
        }
    }
    let phase = |d: usize, i: usize, j: usize, phi: f64, xi: f64| {
        let m = (d as f64 - 1.0) / 2.0 - i as f64;
        let s = if j == 0 { 1.0 } else { -1.0 };
        cis(-phi * s * (m + xi) / 2.0)
    };
    for i in 0..da {
        for k in 0..db {
            for ea in 0..2 {
                for eb in 0..2 {
                    v[idx(i, k, ea, eb)] *= phase(da, i, ea, phi.0, xi.0) * phase(db, k, eb, phi.1, xi.1);
                }
            }
        }
    }
    let meas = |j: usize, jp: usize| if j == 0 && jp == 1 { -1.0 } else { 1.0 } / 2f64.sqrt();
    CMatrix::from_fn(da, db, |i, k| {
        let mut acc = C64::new(0.0, 0.0);
        for ea in 0..2 {
            for eb in 0..2 {
                acc += v[idx(i, k, ea, eb)] * meas(ja, ea) * meas(jb, eb);
            }
        }
        acc
    })
}

/// Singular-value rank with a relative cutoff.
pub fn rank(m: &CMatrix, rel: f64) -> usize {
    let s = svd(m).unwrap().singular_values;
    let top = s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > rel * top).count()
}

/// `v_σ = Π_μ U_{σ_μ}(φ_μ)|+⟩` for every choice of branch in earlier rounds.
pub fn branch_vectors(d: usize, previous: &[f64], xi: f64) -> Vec<Vec<C64>> {
    let node = NodeParams::new(d, xi).unwrap();
    let mut out = vec![plus_qudit(d).unwrap()];
    for &phi in previous {
        let mut next = Vec::new();
        for v in &out {
            for j in 0..2 {
                let u = conditional_unitary(&node, j, phi);
                next.push((0..d).map(|i| u[(i, i)] * v[i]).collect());
            }
        }
        out = next;
    }
    out
}

/// Whether round `k` keeps every pair of earlier branches orthogonal.
pub fn orthogonality_oracle(d: usize, previous: &[usize], k: usize) -> bool {
    let xi = 0.37;
    let phis: Vec<f64> = previous.iter().map(|&p| 2.0 * PI * p as f64 / d as f64).collect();
    let vs = branch_vectors(d, &phis, xi);
    let node = NodeParams::new(d, xi).unwrap();
    let phi = 2.0 * PI * k as f64 / d as f64;
    let u0 = conditional_unitary(&node, 0, phi);
    let u1 = conditional_unitary(&node, 1, phi);
    vs.iter().all(|a| {
        vs.iter().all(|b| {
            let s: C64 = (0..d).map(|i| (u0[(i, i)] * a[i]).conj() * u1[(i, i)] * b[i]).sum();
            s.norm() < 1e-9
        })
    })
}
