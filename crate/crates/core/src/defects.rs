//! Defect-center effective Hamiltonians and second-order hyperfine corrections.

use crate::error::{invalid, Error, Result};
use crate::gates::{ConditionalCorrection, NodeParams, Postselect};
use crate::kernel::{c, CMatrix, C64, ZERO};
use crate::schemes::{optimize_phases, stats, Objective, OptimizeProblem, Scheme, SchemeStats};
use crate::states::{plus_state, TwoQubitResource};

/// `(J_z, J_+)` for spin `j = two_j / 2`, basis ordered by descending `m`.
fn spin_ops(two_j: u32) -> (CMatrix, CMatrix) {
    let j = two_j as f64 / 2.0;
    let n = two_j as usize + 1;
    let m = |i: usize| j - i as f64;
    let jz = CMatrix::from_real_diag(&(0..n).map(m).collect::<Vec<_>>());
    let mut jp = CMatrix::zeros(n, n);
    for i in 1..n {
        jp[(i - 1, i)] = c((j * (j + 1.0) - m(i) * (m(i) + 1.0)).sqrt(), 0.0);
    }
    (jz, jp)
}

fn twice(x: f64, what: &str) -> Result<u32> {
    let t = 2.0 * x;
    if x < 0.5 || (t - t.round()).abs() > 1e-12 {
        return invalid(format!("{what} must be a positive multiple of 1/2, got {x}"));
    }
    Ok(t.round() as u32)
}

/// NV-type center: `D S_z² + γB S_z + A_∥ S_z I_z + (A_⊥/2)(S₊I₋ + S₋I₊)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NVTypeParams {
    pub s: f64,
    pub i: f64,
    pub d_zfs: f64,
    pub gamma_b: f64,
    pub a_par: f64,
    pub a_perp: f64,
    /// `(m_s, m_s')` of the electron qubit states `|0⟩`, `|1⟩`.
    pub qubit_levels: (f64, f64),
    /// Keep the Zeeman term in the energy denominators.
    pub zeeman_in_denominators: bool,
}

impl NVTypeParams {
    /// ¹⁴N at an NV center in MHz (literature hyperfine and zero-field values), qubit on `m_s ∈ {+1, 0}`.
    pub fn nv14() -> Self {
        Self {
            s: 1.0,
            i: 1.0,
            d_zfs: 2870.0,
            gamma_b: 0.0,
            a_par: -2.14,
            a_perp: -2.70,
            qubit_levels: (1.0, 0.0),
            zeeman_in_denominators: false,
        }
    }

    /// `ζ = A_⊥² / (A_∥ D)`.
    pub fn zeta(&self) -> f64 {
        self.a_perp * self.a_perp / (self.a_par * self.d_zfs)
    }

    /// Ising coupling difference between the two qubit levels.
    pub fn a_net(&self) -> f64 {
        self.a_par * (self.qubit_levels.0 - self.qubit_levels.1)
    }

    fn validate(&self) -> Result<(u32, u32)> {
        let two_s = twice(self.s, "electron spin")?;
        let two_i = twice(self.i, "nuclear spin")?;
        let (a, b) = self.qubit_levels;
        for ms in [a, b] {
            let k = self.s - ms;
            if ms.abs() > self.s + 1e-12 || (k - k.round()).abs() > 1e-12 {
                return invalid(format!("m_s = {ms} is not a level of spin {}", self.s));
            }
        }
        if (a - b).abs() < 1e-12 {
            return invalid("qubit levels must differ");
        }
        if [self.d_zfs, self.gamma_b, self.a_par, self.a_perp].iter().any(|x| !x.is_finite()) {
            return invalid("parameters must be finite");
        }
        Ok((two_s, two_i))
    }

    fn energy(&self, ms: f64) -> f64 {
        let z = if self.zeeman_in_denominators { self.gamma_b * ms } else { 0.0 };
        self.d_zfs * ms * ms + z
    }
}

fn level_name(ms: f64, m: f64) -> String {
    format!("(m_s={ms}, m_I={m})")
}

/// Second-order energy shifts `H⁽²⁾(m_s, m_I)` for both qubit levels, in the units of the parameters.
///
/// The flip-flop term conserves `m_s + m_I`, so the shifts are diagonal in `m_I`.
pub fn second_order_shifts(p: &NVTypeParams) -> Result<[Vec<f64>; 2]> {
    let (two_s, two_i) = p.validate()?;
    let (s, i) = (two_s as f64 / 2.0, two_i as f64 / 2.0);
    let n = two_i as usize + 1;
    let quarter = p.a_perp * p.a_perp / 4.0;
    let levels = [p.qubit_levels.0, p.qubit_levels.1];
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for (j, &ms) in levels.iter().enumerate() {
        for k in 0..n {
            let m = i - k as f64;
            let mut acc = 0.0;
            // S₊I₋ raises m_s and lowers m_I, S₋I₊ the reverse
            for (dl, dm) in [(1.0, -1.0), (-1.0, 1.0)] {
                let (l, ml) = (ms + dl, m + dm);
                if l.abs() > s + 1e-12 || ml.abs() > i + 1e-12 {
                    continue;
                }
                let se = s * (s + 1.0) - ms * l;
                let ie = i * (i + 1.0) - m * ml;
                let v2 = quarter * se * ie;
                if v2 == 0.0 {
                    continue;
                }
                let denom = p.energy(ms) - p.energy(l);
                if denom.abs() < 1e-12 * (p.d_zfs.abs() + p.gamma_b.abs()).max(1.0) {
                    return Err(Error::Singular { left: level_name(ms, m), right: level_name(l, ml) });
                }
                acc += v2 / denom;
            }
            out[j][k] = acc;
        }
    }
    Ok(out)
}

/// Second-order shifts in units of the net Ising coupling, ready for the conditional gates.
pub fn second_order_correction(p: &NVTypeParams) -> Result<ConditionalCorrection> {
    let a_net = p.a_net();
    if a_net == 0.0 {
        return invalid("net Ising coupling vanishes");
    }
    let h = second_order_shifts(p)?;
    Ok(ConditionalCorrection { h: h.map(|v| v.into_iter().map(|x| x / a_net).collect()) })
}

/// Model with `A_∥ = 1`, `|D| = 1` and `A_⊥ = √|ζ|`, so that `A_⊥²/(A_∥D) = ζ`.
pub fn zeta_model(d: usize, zeta: f64) -> Result<NVTypeParams> {
    if d < 2 {
        return invalid(format!("qudit dimension {d} < 2"));
    }
    if !zeta.is_finite() {
        return invalid("ζ must be finite");
    }
    Ok(NVTypeParams {
        s: 1.0,
        i: (d as f64 - 1.0) / 2.0,
        d_zfs: if zeta < 0.0 { -1.0 } else { 1.0 },
        gamma_b: 0.0,
        a_par: 1.0,
        a_perp: zeta.abs().sqrt(),
        qubit_levels: (1.0, 0.0),
        zeeman_in_denominators: false,
    })
}

/// Statistics of `scheme` from `|+_d⟩|+_d⟩` with the second-order correction for `ζ`.
pub fn perturbed_stats(d: usize, scheme: &Scheme, zeta: f64, xi: f64) -> Result<SchemeStats> {
    let corr = second_order_correction(&zeta_model(d, zeta)?)?;
    let node = NodeParams::new(d, xi)?.with_correction(corr)?;
    Ok(stats(&scheme.run_with(&plus_state(d)?, &node)?, d))
}

/// Relative loss `1 − ⟨E⟩_ζ / ⟨E⟩_0` caused by the exchange hyperfine term.
pub fn entanglement_reduction(d: usize, scheme: &Scheme, zeta: f64, xi: f64) -> Result<f64> {
    let ideal = stats(&scheme.run(&plus_state(d)?, xi)?, d).expected_ebits;
    if ideal <= 0.0 {
        return invalid("scheme produces no entanglement");
    }
    let pert = perturbed_stats(d, scheme, zeta, xi)?.expected_ebits;
    Ok(1.0 - pert / ideal)
}

/// Phases re-optimized under the correction and the remaining `1 − ⟨E⟩/E_d`.
pub fn reoptimized_shortfall(
    d: usize,
    resource: &TwoQubitResource,
    seed: &[f64],
    postselect: &[Postselect],
    zeta: f64,
    xi: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut problem = OptimizeProblem::new(d, resource.clone(), xi, Objective::PostselectedE);
    problem.seed = Some(seed.to_vec());
    problem.postselect = postselect.to_vec();
    problem.correction = Some(second_order_correction(&zeta_model(d, zeta)?)?);
    let r = optimize_phases(&problem)?;
    Ok((r.phases, 1.0 - r.stats.expected_ebits / r.stats.max_ebits))
}

/// GeV⁻ ground manifold with strain `ε = α − iβ` and a spin-9/2 nucleus.
#[derive(Clone, Debug, PartialEq)]
pub struct GeVParams {
    pub lambda: f64,
    pub strain: C64,
    pub gamma_b: f64,
    pub a_par: f64,
    pub a_perp: f64,
    pub nuclear_spin: f64,
}

impl GeVParams {
    pub fn new(lambda: f64, strain: C64, gamma_b: f64, a_par: f64, a_perp: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid("spin-orbit coupling must be positive");
        }
        if !(strain.re.is_finite() && strain.im.is_finite() && gamma_b.is_finite() && a_par.is_finite() && a_perp.is_finite())
        {
            return invalid("parameters must be finite");
        }
        Ok(Self { lambda, strain, gamma_b, a_par, a_perp, nuclear_spin: 4.5 })
    }
}

#[derive(Clone, Debug)]
pub struct GeVReport {
    /// Full Hamiltonian on `{e₊↑, e₋↓, e₋↑, e₊↓} ⊗ nucleus`.
    pub hamiltonian: CMatrix,
    /// Lower doublet `{e₋↑, e₊↓} ⊗ nucleus` after eliminating the upper doublet.
    pub first_order: CMatrix,
    /// `A_ij` read off from `first_order`.
    pub tensor: [[f64; 3]; 3],
    /// Diagonal of the doublet Hamiltonian after removing the remaining spin flips.
    pub effective: Vec<f64>,
    pub target: Vec<f64>,
    pub residual: f64,
    pub hamiltonian_norm: f64,
    pub warnings: Vec<String>,
}

/// Embeds a 4x4 electron operator given by its nonzero entries, each times a nuclear operator.
fn electron_embed(n: usize, entries: &[(usize, usize, CMatrix)]) -> CMatrix {
    let mut h = CMatrix::zeros(4 * n, 4 * n);
    for (a, b, op) in entries {
        for k in 0..n {
            for l in 0..n {
                h[(a * n + k, b * n + l)] += op[(k, l)];
            }
        }
    }
    h
}

fn block(h: &CMatrix, rows: &[usize], cols: &[usize], n: usize) -> CMatrix {
    let expand = |e: &[usize]| e.iter().flat_map(|&a| (0..n).map(move |k| a * n + k)).collect::<Vec<_>>();
    h.select(&expand(rows), &expand(cols))
}

/// Eliminates the upper orbital doublet, then the residual electron flips, and compares with
/// `γB S_z + A_∥ S_z I_z` on the remaining doublet.
pub fn gev_effective(p: &GeVParams) -> Result<GeVReport> {
    let two_i = twice(p.nuclear_spin, "nuclear spin")?;
    let n = two_i as usize + 1;
    let (iz, ip) = spin_ops(two_i);
    let im = ip.adjoint();
    let id = CMatrix::identity(n);
    let (l, g, eps) = (p.lambda, p.gamma_b, p.strain);

    let diag_e = [(l + g) / 2.0, (l - g) / 2.0, (-l + g) / 2.0, (-l - g) / 2.0];
    let ms = [0.5, -0.5, 0.5, -0.5];
    let h0 = electron_embed(
        n,
        &(0..4).map(|a| (a, a, &id.scale_real(diag_e[a]) + &iz.scale_real(p.a_par * ms[a]))).collect::<Vec<_>>(),
    );
    let hs = electron_embed(
        n,
        &[(0, 2, id.scale(eps)), (2, 0, id.scale(eps.conj())), (1, 3, id.scale(eps.conj())), (3, 1, id.scale(eps))],
    );
    let half = p.a_perp / 2.0;
    let hp = electron_embed(
        n,
        &[
            (0, 3, im.scale_real(half)),
            (3, 0, ip.scale_real(half)),
            (2, 1, im.scale_real(half)),
            (1, 2, ip.scale_real(half)),
        ],
    );
    let hamiltonian = &(&h0 + &hs) + &hp;

    let (pp, qq) = ([0usize, 1], [2usize, 3]);
    let vs = block(&hs, &qq, &pp, n);
    let vp = block(&hp, &qq, &pp, n);
    // strain-strain and strain-hyperfine products only
    let prod = &(&(&vs * &vs.adjoint()) + &(&vs * &vp.adjoint())) + &(&vp * &vs.adjoint());
    let first_order = &block(&(&h0 + &hp), &qq, &qq, n) - &prod.scale_real(1.0 / l);

    let sx = CMatrix::from_real_rows(&[&[0.0, 0.5], &[0.5, 0.0]])?;
    let sy = CMatrix::from_rows(&[vec![ZERO, c(0.0, -0.5)], vec![c(0.0, 0.5), ZERO]])?;
    let sz = CMatrix::from_real_diag(&[0.5, -0.5]);
    let ix = (&ip + &im).scale_real(0.5);
    let iy = (&ip - &im).scale(c(0.0, -0.5));
    let s_ops = [&sx, &sy, &sz];
    let i_ops = [&ix, &iy, &iz];
    let mut tensor = [[0.0; 3]; 3];
    for (a, so) in s_ops.iter().enumerate() {
        for (b, io) in i_ops.iter().enumerate() {
            let op = crate::kernel::kron(so, io);
            let num = (&op * &first_order).trace();
            let den = (&op * &op).trace();
            tensor[a][b] = num.re / den.re;
        }
    }

    let dim = 2 * n;
    let diag: Vec<f64> = (0..dim).map(|a| first_order[(a, a)].re).collect();
    let mut effective = diag.clone();
    for a in 0..dim {
        for b in 0..dim {
            let v = first_order[(a, b)];
            if a == b || v.norm() < 1e-300 {
                continue;
            }
            let denom = diag[a] - diag[b];
            if denom.abs() < 1e-12 * l {
                let name = |x: usize| format!("({}, m_I={})", if x < n { "↑" } else { "↓" }, p.nuclear_spin - (x % n) as f64);
                return Err(Error::Singular { left: name(a), right: name(b) });
            }
            effective[a] += v.norm_sqr() / denom;
        }
    }
    let target: Vec<f64> = (0..dim)
        .map(|a| {
            let s = if a < n { 0.5 } else { -0.5 };
            let m = p.nuclear_spin - (a % n) as f64;
            g * s + p.a_par * s * m
        })
        .collect();
    let offset = effective.iter().zip(&target).map(|(e, t)| e - t).sum::<f64>() / dim as f64;
    let residual = effective.iter().zip(&target).map(|(e, t)| (e - t - offset).powi(2)).sum::<f64>().sqrt();

    let mut warnings = Vec::new();
    if g.abs() >= 0.1 * l {
        warnings.push(format!("|γB| = {} is not small against λ = {l}", g.abs()));
    }
    if eps.norm() >= 0.1 * l {
        warnings.push(format!("|ε| = {} is not small against λ = {l}", eps.norm()));
    }
    let flip = (eps.norm() * p.a_perp / l).powi(2);
    if flip >= 0.1 * (g * p.a_par).abs() {
        warnings.push(format!("(|ε|A_⊥/λ)² = {flip:e} is not small against |γB A_∥|; residual {residual:e}"));
    }

    Ok(GeVReport {
        hamiltonian_norm: hamiltonian.frobenius_norm(),
        hamiltonian,
        first_order,
        tensor,
        effective,
        target,
        residual,
        warnings,
    })
}

/// `A_ij` expected after eliminating the upper doublet: transverse part `−2A_⊥/λ (α, β)` and `A_zz = A_∥`.
pub fn gev_analytic_tensor(p: &GeVParams) -> [[f64; 3]; 3] {
    let (alpha, beta) = (p.strain.re, -p.strain.im);
    let k = 2.0 * p.a_perp / p.lambda;
    [[-alpha * k, -beta * k, 0.0], [beta * k, -alpha * k, 0.0], [0.0, 0.0, p.a_par]]
}

/// Spin-orbit splitting `λ₁₁ᶻ` in GHz.
pub const VSIC_LAMBDA_GHZ: f64 = 529.0;
/// Strain susceptibilities `s₁₁`, `s₁₁'` in THz per unit strain.
pub const VSIC_S11_THZ: f64 = 251.0;
pub const VSIC_S11P_THZ: f64 = 230.0;

/// Mixing angle from strain components: `tan θ = 2ε₁₁ˣ / λ₁₁ᶻ`.
pub fn vsic_theta(eps_xz: f64, eps_xx: f64, eps_yy: f64) -> Result<f64> {
    let e11x = 1e3 * (VSIC_S11_THZ * eps_xz + VSIC_S11P_THZ * (eps_yy - eps_xx) / 2.0);
    let theta = (2.0 * e11x / VSIC_LAMBDA_GHZ).atan();
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return invalid(format!("strain gives θ = {theta}, outside [0, π/2]"));
    }
    Ok(theta)
}

/// Reduced hyperfine constants in MHz.
#[derive(Clone, Debug, PartialEq)]
pub struct VSiCParams {
    pub theta1: f64,
    pub a_z: f64,
    pub a_zpp: f64,
    pub a_x: f64,
    pub a_xp: f64,
    pub a_zp: f64,
}

impl VSiCParams {
    /// `a_z` and `a_zpp` fitted to `a^{zz} = 232 MHz` at `θ = 0` and `201 MHz` at `θ = π/2`; the rest unknown (zero).
    pub fn fitted(theta1: f64) -> Result<Self> {
        let p = Self { theta1, a_z: 201.0, a_zpp: -15.5, a_x: 0.0, a_xp: 0.0, a_zp: 0.0 };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta1) {
            return invalid(format!("θ₁ = {} outside [0, π/2]", self.theta1));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VSiCTensor {
    pub a_zz: f64,
    pub a_zx: f64,
    pub a_xy: f64,
    pub a_xz: f64,
    pub a_xx: f64,
    pub matrix: [[f64; 3]; 3],
    /// Elements that depend on constants without measured values.
    pub unconstrained: Vec<&'static str>,
}

pub fn vsic_hyperfine(p: &VSiCParams) -> Result<VSiCTensor> {
    p.validate()?;
    let (s, co) = p.theta1.sin_cos();
    let a_zz = p.a_z - 2.0 * p.a_zpp * co;
    let a_zx = p.a_xp * s;
    let a_xy = -p.a_x * (1.0 + co);
    let a_xz = p.a_xp * (1.0 - co);
    let a_xx = -p.a_zp * s;
    Ok(VSiCTensor {
        a_zz,
        a_zx,
        a_xy,
        a_xz,
        a_xx,
        matrix: [[a_xx + a_xy, 0.0, a_xz], [0.0, a_xx - a_xy, 0.0], [-a_zx, 0.0, a_zz]],
        unconstrained: vec!["a_zx", "a_xy", "a_xz", "a_xx"],
    })
}
