//! Library results checked against independent brute-force computations.

mod common;

use std::f64::consts::PI;

use common::*;
use qudit_accum::conditions::{
    allowed_indices, check_complete_transfer, check_maxent_conditions, condition_inputs,
};
use qudit_accum::gates::{
    apply_iteration, branch_states, conditional_unitary, outcome_tree, IterationSpec, NodeParams, Postselect,
};
use qudit_accum::kernel::{c, cis, CMatrix};
use qudit_accum::schemes::{constructed_d3_scheme, deterministic_phase_set, Scheme};
use qudit_accum::states::{plus_state, two_qubit_entanglement, ResourceKind, TwoQubitResource};
use rand::Rng;

#[test]
fn branches_match_full_electron_simulation() {
    let mut r = rng(11);
    for _ in 0..60 {
        let (da, db) = (r.gen_range(2..6), r.gen_range(2..6));
        let psi = random_state(&mut r, da, db);
        let res = random_resource(&mut r);
        let phi = (r.gen_range(0.0..2.0 * PI), r.gen_range(0.0..2.0 * PI));
        let xi = (r.gen_range(-5.0..25.0), r.gen_range(-5.0..25.0));
        let na = NodeParams::new(da, xi.0).unwrap();
        let nb = NodeParams::new(db, xi.1).unwrap();
        let spec = IterationSpec { resource: res.clone(), phi_a: phi.0, phi_b: phi.1, postselect: Postselect::None };
        let got = branch_states(&psi, &spec, (&na, &nb)).unwrap();
        for ((ja, jb), m) in got {
            let want = brute_force_branch(psi.psi(), &res, phi, xi, ja, jb);
            assert!(m.distance(&want) < 1e-12, "outcome {ja}{jb}");
        }
    }
}

#[test]
fn allowed_indices_match_orthogonality_oracle() {
    for d in 2..=10 {
        let mut prefixes: Vec<Vec<usize>> = vec![vec![]];
        for k1 in 1..d {
            prefixes.push(vec![k1]);
            for k2 in 1..d {
                prefixes.push(vec![k1, k2]);
            }
        }
        for prev in &prefixes {
            let allowed = allowed_indices(d, prev);
            for k in 1..d {
                assert_eq!(allowed.contains(&k), orthogonality_oracle(d, prev, k), "d={d} prev={prev:?} k={k}");
            }
        }
    }
}

#[test]
fn complete_transfer_adds_resource_entanglement() {
    let mut r = rng(5);
    for _ in 0..20 {
        let e = r.gen_range(0.05..0.95);
        let res = TwoQubitResource::with_entanglement(e).unwrap();
        let e_ee = two_qubit_entanglement(&res);
        let d = [4usize, 8][r.gen_range(0..2)];
        let xi = r.gen_range(0.0..30.0);
        let node = NodeParams::new(d, xi).unwrap();
        let mut parents = vec![qudit_accum::gates::OutcomeNode::root(&plus_state(d).unwrap()).unwrap()];
        for phi in deterministic_phase_set(d).unwrap() {
            let u = [conditional_unitary(&node, 0, phi), conditional_unitary(&node, 1, phi)];
            let spec = IterationSpec::symmetric(res.clone(), phi, Postselect::None);
            let mut next = Vec::new();
            for p in &parents {
                let ok = check_complete_transfer(&p.state, [&u[0], &u[1]], [&u[0], &u[1]]).unwrap().ok;
                assert!(ok);
                for child in apply_iteration(&p.state, &spec, (&node, &node)).unwrap() {
                    assert!((child.probability - 0.25).abs() < 1e-9);
                    assert!((child.ebits - p.ebits - e_ee).abs() < 1e-9);
                    let mut grown = child.clone();
                    grown.probability *= p.probability;
                    next.push(grown);
                }
            }
            parents = next;
        }
    }
}

#[test]
fn complete_transfer_verdict_ignores_xi() {
    let mut r = rng(8);
    for _ in 0..50 {
        let d = r.gen_range(2..9);
        let rank = r.gen_range(1..=d);
        let st = random_rank_state(&mut r, d, rank);
        let k = r.gen_range(1..d);
        let phi = if r.gen_bool(0.5) { 2.0 * PI * k as f64 / d as f64 } else { r.gen_range(0.0..2.0 * PI) };
        let verdict = |xi: f64| {
            let n = NodeParams::new(d, xi).unwrap();
            let u = [conditional_unitary(&n, 0, phi), conditional_unitary(&n, 1, phi)];
            check_complete_transfer(&st, [&u[0], &u[1]], [&u[0], &u[1]]).unwrap().ok
        };
        let base = verdict(0.0);
        for _ in 0..4 {
            assert_eq!(verdict(r.gen_range(-40.0..40.0)), base);
        }
    }
}

#[test]
fn passing_final_round_conditions_reach_maximal_entanglement() {
    // deterministic schemes: the last round of every power-of-two d
    let mut passes = 0;
    for d in [2usize, 4, 8] {
        for kind in [ResourceKind::PsiPlus, ResourceKind::Cluster, ResourceKind::PhiMinus] {
            let xi = 4.0;
            let phases = deterministic_phase_set(d).unwrap();
            let node = NodeParams::new(d, xi).unwrap();
            let (head, last) = phases.split_at(phases.len() - 1);
            let head_scheme = Scheme::uniform(&kind.resource(), head, Postselect::None);
            let parents = head_scheme.run(&plus_state(d).unwrap(), xi).unwrap();
            let u = [conditional_unitary(&node, 0, last[0]), conditional_unitary(&node, 1, last[0])];
            for p in &parents {
                let inp = condition_inputs(&p.state, [&u[0], &u[1]], [&u[0], &u[1]]).unwrap();
                let rep = check_maxent_conditions(&inp.s_desc, &inp.u_cal_a, &inp.u_cal_b, &kind.resource()).unwrap();
                let spec = IterationSpec::symmetric(kind.resource(), last[0], Postselect::None);
                let leaves = apply_iteration(&p.state, &spec, (&node, &node)).unwrap();
                let maximal = leaves.iter().all(|l| (l.ebits - (d as f64).log2()).abs() < 1e-9);
                if rep.passed {
                    passes += 1;
                    assert!(maximal, "d={d} {kind:?}");
                }
            }
        }
    }
    assert!(passes > 0);
    // constructed d=3 protocol: the second round passes and reaches log₂3
    let cs = constructed_d3_scheme(20.0).unwrap();
    let node = NodeParams::new(3, 20.0).unwrap();
    let first = outcome_tree(&cs.initial, &cs.scheme.iterations[..1], (&node, &node)).unwrap();
    let second = &cs.scheme.iterations[1];
    let u = [conditional_unitary(&node, 0, second.phi_a), conditional_unitary(&node, 1, second.phi_a)];
    for p in &first {
        let inp = condition_inputs(&p.state, [&u[0], &u[1]], [&u[0], &u[1]]).unwrap();
        let rep = check_maxent_conditions(&inp.s_desc, &inp.u_cal_a, &inp.u_cal_b, &second.resource).unwrap();
        assert!(rep.passed);
        for l in apply_iteration(&p.state, second, (&node, &node)).unwrap() {
            assert!((l.ebits - 3f64.log2()).abs() < 1e-9);
        }
    }
}

#[test]
fn odd_xi_breaks_the_d3_cluster_round() {
    let cs = constructed_d3_scheme(21.0).unwrap();
    let node = NodeParams::new(3, 21.0).unwrap();
    let first = outcome_tree(&cs.initial, &cs.scheme.iterations[..1], (&node, &node)).unwrap();
    let second = &cs.scheme.iterations[1];
    let u = [conditional_unitary(&node, 0, second.phi_a), conditional_unitary(&node, 1, second.phi_a)];
    for p in &first {
        let inp = condition_inputs(&p.state, [&u[0], &u[1]], [&u[0], &u[1]]).unwrap();
        let rep = check_maxent_conditions(&inp.s_desc, &inp.u_cal_a, &inp.u_cal_b, &second.resource).unwrap();
        assert!(!rep.passed);
        let leaves = apply_iteration(&p.state, second, (&node, &node)).unwrap();
        assert!(leaves.iter().any(|l| (l.ebits - 3f64.log2()).abs() > 1e-6));
    }
}

#[test]
fn kron_transfer_gate_matches_brute_force() {
    let mut r = rng(21);
    for _ in 0..20 {
        let d = r.gen_range(2..5);
        let psi = random_state(&mut r, d, d);
        let res = random_resource(&mut r);
        let phi = r.gen_range(0.0..2.0 * PI);
        let xi = r.gen_range(0.0..10.0);
        let n = NodeParams::new(d, xi).unwrap();
        let u = [conditional_unitary(&n, 0, phi), conditional_unitary(&n, 1, phi)];
        for ja in 0..2 {
            for jb in 0..2 {
                let t = qudit_accum::gates::transfer_gate(&res, [&u[0], &u[1]], [&u[0], &u[1]], ja, jb).unwrap();
                let v = CMatrix::new(d * d, 1, psi.to_vector()).unwrap();
                let out = &t * &v;
                let want = brute_force_branch(psi.psi(), &res, (phi, phi), (xi, xi), ja, jb);
                let want = CMatrix::new(d * d, 1, want.data().to_vec()).unwrap();
                assert!(out.distance(&want) < 1e-12);
            }
        }
    }
    let _ = (c(0.0, 0.0), cis(0.0));
}
