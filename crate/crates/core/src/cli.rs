//! Command-line front end.
//!
//! Usage errors exit with status 2, physics errors with status 1. Tables are
//! written as CSV with a header row and 12 significant digits.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::conditions::{
    allowed_indices, check_complete_transfer, check_maxent_conditions, condition_inputs, solve_resource_c, CSolution,
};
use crate::defects::{
    entanglement_reduction, gev_effective, perturbed_stats, vsic_hyperfine, GeVParams, NVTypeParams, VSiCParams,
};
use crate::error::{invalid, Error, Result};
use crate::gates::{conditional_unitary, outcome_tree, IterationSpec, NodeParams, OutcomeNode, Postselect};
use crate::kernel::c;
use crate::network::{
    chain_steps, ghz_fidelity, multi_outcome_tree, resource_from_photonic, run_photonic, Drive, MultiQuditState,
    SpinSign,
};
use crate::schemes::{
    constructed_d3_scheme, deterministic_phase_set, power_of_two_phase_set, sweep_expected_e,
    table1_default_xi, table1_row, ResourceFamily, Scheme,
};
use crate::states::{plus_state, ResourceKind, TwoQuditState};

#[derive(Parser, Debug)]
#[command(name = "qaccum", version, about = "Entanglement accumulation between remote qudits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expected entanglement while sweeping the phase of one round.
    Sweep(SweepArgs),
    /// Leaf table of a phase set.
    Scheme(SchemeArgs),
    /// Summary of the power-of-two phase set for d = 2..16.
    Table1(Table1Args),
    /// Transfer and maximal-entanglement condition reports.
    Conditions(SchemeArgs),
    /// Photonic entangling of two electron spins.
    Photonic(PhotonicArgs),
    /// Pairwise accumulation of a GHZ state along a chain.
    Ghz(GhzArgs),
    /// Entanglement shortfall from the exchange hyperfine term.
    Perturbation(PerturbationArgs),
    /// Hyperfine tensors of defect models.
    Defects(DefectArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SetName {
    Deterministic,
    Power2,
    #[value(name = "d3-constructed")]
    D3Constructed,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value = "psi+")]
    resource: ResourceKind,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    xi: f64,
    /// Named phase set.
    #[arg(long, conflicts_with = "phi")]
    set: Option<SetName>,
    /// Explicit phase, repeatable; accepts forms such as `1.57`, `pi`, `pi/2`, `3pi/4`.
    #[arg(long, value_parser = parse_phase, allow_negative_numbers = true)]
    phi: Vec<f64>,
    #[arg(long, default_value = "none")]
    postselect: Postselect,
}

#[derive(Args, Debug)]
struct SchemeArgs {
    #[command(flatten)]
    phases: PhaseArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    phases: PhaseArgs,
    /// 1-based round whose phase is swept; earlier rounds use the phase set.
    #[arg(long, default_value_t = 1)]
    round: usize,
    #[arg(long, default_value_t = 361)]
    points: usize,
    /// One row per leaf instead of one per grid point.
    #[arg(long)]
    leaves: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[arg(long, default_value = "bell")]
    resource: ResourceFamily,
    /// Splitting ratio; defaults to 20, raised for the cluster family to satisfy the tuning rule.
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DriveArg {
    None,
    Pi,
    PiHalf,
}

#[derive(Args, Debug)]
struct PhotonicArgs {
    #[arg(long, value_enum, default_value = "none")]
    drive: DriveArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct GhzArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    nodes: usize,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    xi: f64,
    /// Entangle the chain from the far end.
    #[arg(long)]
    reverse: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct PerturbationArgs {
    #[command(flatten)]
    phases: PhaseArgs,
    /// `A_⊥²/(A_∥ D)`, repeatable.
    #[arg(long, allow_negative_numbers = true)]
    zeta: Vec<f64>,
    /// Add the ¹⁴N value of ζ.
    #[arg(long)]
    nv14: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct DefectArgs {
    /// V:SiC mixing angles, repeatable; defaults to a grid over [0, π/2].
    #[arg(long, value_parser = parse_phase)]
    theta: Vec<f64>,
    #[arg(long, default_value_t = 1000.0)]
    lambda: f64,
    /// Strain `ε = α − iβ`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, default_value_t = 23.0, allow_negative_numbers = true)]
    gamma_b: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    a_par: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    a_perp: f64,
    #[command(flatten)]
    output: Output,
}

/// Parses `1.5`, `pi`, `-pi/2`, `3pi/4` or `3*pi/4`.
pub fn parse_phase(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace('*', "");
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("cannot parse phase '{s}'");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?;
    let k = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(k * PI / den)
}

/// Formats with 12 significant digits, dropping trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (m, e) = s.split_once('e').expect("scientific format");
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{e}")
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Physics(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses `args` (including the program name) and runs the command; returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn emit(out: &Output, text: &str, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let (text, out) = match cmd {
        Command::Sweep(a) => (sweep(&a)?, a.output),
        Command::Scheme(a) => (scheme(&a.phases)?, a.output),
        Command::Table1(a) => (table1(&a)?, a.output),
        Command::Conditions(a) => (conditions(&a.phases)?, a.output),
        Command::Photonic(a) => (photonic(&a)?, a.output),
        Command::Ghz(a) => (ghz(&a)?, a.output),
        Command::Perturbation(a) => (perturbation(&a)?, a.output),
        Command::Defects(a) => (defects(&a)?, a.output),
    };
    emit(&out, &text, stdout)
}

fn row(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

/// Initial state and scheme selected by the phase arguments.
fn resolve(p: &PhaseArgs) -> Result<(TwoQuditState, Scheme)> {
    if p.d < 2 {
        return invalid(format!("qudit dimension {} < 2", p.d));
    }
    if !p.xi.is_finite() {
        return invalid("splitting ratio must be finite");
    }
    if let Some(SetName::D3Constructed) = p.set {
        if p.d != 3 {
            return invalid("the constructed protocol is defined for d = 3");
        }
        let cs = constructed_d3_scheme(p.xi)?;
        return Ok((cs.initial, cs.scheme));
    }
    let phases = match p.set {
        Some(SetName::Deterministic) => deterministic_phase_set(p.d)?,
        Some(SetName::Power2) => power_of_two_phase_set(p.d, &[])?,
        Some(SetName::D3Constructed) => unreachable!(),
        None if !p.phi.is_empty() => p.phi.clone(),
        None if p.d.is_power_of_two() => deterministic_phase_set(p.d)?,
        None => power_of_two_phase_set(p.d, &[])?,
    };
    Ok((plus_state(p.d)?, Scheme::uniform(&p.resource.resource(), &phases, p.postselect.clone())))
}

fn sweep(a: &SweepArgs) -> Result<String> {
    if a.round == 0 {
        return invalid("rounds are numbered from 1");
    }
    let p = &a.phases;
    if let Some(SetName::D3Constructed) = p.set {
        return invalid("sweeps use the deterministic, power2 or explicit phase sets");
    }
    let (_, scheme) = resolve(p)?;
    let phases = scheme.phases();
    if a.round - 1 > phases.len() {
        return invalid(format!("round {} needs {} earlier phases, the set has {}", a.round, a.round - 1, phases.len()));
    }
    let rows = sweep_expected_e(p.d, &p.resource.resource(), p.xi, &phases[..a.round - 1], a.points, p.postselect.clone())?;
    let mut s = String::new();
    if a.leaves {
        s += "phi,accumulated_phi,record,probability,ebits\n";
        for r in &rows {
            for l in &r.leaves {
                s += &row(&[fmt_num(r.phi), fmt_num(r.accumulated), l.record.clone(), fmt_num(l.probability), fmt_num(l.ebits)]);
            }
        }
    } else {
        s += "phi,accumulated_phi,expected_e,success_probability\n";
        for r in &rows {
            s += &row(&[fmt_num(r.phi), fmt_num(r.accumulated), fmt_num(r.expected), fmt_num(r.success)]);
        }
    }
    Ok(s)
}

fn leaf_rows(leaves: &[OutcomeNode]) -> String {
    let mut s = String::from("record,probability,ebits\n");
    for l in leaves {
        s += &row(&[l.record_label(), fmt_num(l.probability), fmt_num(l.ebits)]);
    }
    s
}

fn scheme(p: &PhaseArgs) -> Result<String> {
    let (init, scheme) = resolve(p)?;
    Ok(leaf_rows(&scheme.run(&init, p.xi)?))
}

fn table1(a: &Table1Args) -> Result<String> {
    let mut s = String::from("d,xi,expected_e,distinct_e,std_dev\n");
    for d in 2..=16 {
        let xi = match (a.xi, a.resource) {
            (Some(x), _) => x,
            (None, ResourceFamily::Bell) => 20.0,
            (None, ResourceFamily::Cluster) => table1_default_xi(d),
        };
        let st = table1_row(d, a.resource, xi)?;
        s += &row(&[
            d.to_string(),
            fmt_num(xi),
            fmt_num(st.expected_ebits),
            st.distinct_e_count.to_string(),
            fmt_num(st.std_dev),
        ]);
    }
    Ok(s)
}

fn conditions(p: &PhaseArgs) -> Result<String> {
    let (init, scheme) = resolve(p)?;
    let node = NodeParams::new(p.d, p.xi)?;
    let mut s = String::new();
    let phases = scheme.phases();
    let _ = writeln!(
        s,
        "[scheme]\nd = {}\nxi = {}\nphases = {}\n",
        p.d,
        fmt_num(p.xi),
        phases.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" ")
    );

    s += "[complete-transfer]\nround,parent,ok,residual_a,residual_b,note\n";
    let mut parents = vec![OutcomeNode::root(&init)?];
    for (r, spec) in scheme.iterations.iter().enumerate() {
        let ua = [conditional_unitary(&node, 0, spec.phi_a), conditional_unitary(&node, 1, spec.phi_a)];
        let ub = [conditional_unitary(&node, 0, spec.phi_b), conditional_unitary(&node, 1, spec.phi_b)];
        for parent in &parents {
            let t = check_complete_transfer(&parent.state, [&ua[0], &ua[1]], [&ub[0], &ub[1]])?;
            s += &row(&[
                (r + 1).to_string(),
                parent.record_label(),
                t.ok.to_string(),
                fmt_num(t.residual_a),
                fmt_num(t.residual_b),
                t.reason.unwrap_or_default(),
            ]);
        }
        parents = outcome_tree(&init, &scheme.iterations[..=r], (&node, &node))?;
    }

    s += "\n[allowed-indices]\nround,index,allowed\n";
    let step = 2.0 * PI / p.d as f64;
    let mut previous = Vec::new();
    for (r, phi) in phases.iter().enumerate() {
        let k = (phi / step).round();
        if (phi / step - k).abs() > 1e-9 {
            s += &row(&[(r + 1).to_string(), "-".into(), "phase is not a multiple of 2pi/d".into()]);
            break;
        }
        let k = (k as i64).rem_euclid(p.d as i64) as usize;
        let allowed = allowed_indices(p.d, &previous);
        s += &row(&[(r + 1).to_string(), k.to_string(), allowed.contains(&k).to_string()]);
        previous.push(k);
    }

    if let Some(last) = scheme.iterations.last() {
        s += "\n[maxent]\nparent,passed,pairing,main_a,main_b,commutator,scalar,p_equal\n";
        let penultimate = outcome_tree(&init, &scheme.iterations[..scheme.len() - 1], (&node, &node))?;
        let ua = [conditional_unitary(&node, 0, last.phi_a), conditional_unitary(&node, 1, last.phi_a)];
        let ub = [conditional_unitary(&node, 0, last.phi_b), conditional_unitary(&node, 1, last.phi_b)];
        for parent in &penultimate {
            let inp = condition_inputs(&parent.state, [&ua[0], &ua[1]], [&ub[0], &ub[1]])?;
            match check_maxent_conditions(&inp.s_desc, &inp.u_cal_a, &inp.u_cal_b, &last.resource) {
                Ok(rep) => {
                    s += &row(&[
                        parent.record_label(),
                        rep.passed.to_string(),
                        rep.pairing.pairing_ok.to_string(),
                        fmt_num(rep.main_residual[0]),
                        fmt_num(rep.main_residual[1]),
                        fmt_num(rep.gen3[0].commutator.max(rep.gen3[1].commutator)),
                        fmt_num(rep.gen3[0].scalar.max(rep.gen3[1].scalar)),
                        fmt_num(rep.gen3[0].p_eq),
                    ]);
                }
                Err(e) => s += &row(&[parent.record_label(), format!("not applicable: {e}")]),
            }
        }
        s += "\n[resource-c]\n";
        s += &match solve_resource_c(p.xi, p.xi, last.phi_a, last.phi_b) {
            CSolution::None => "c = none\n".to_string(),
            CSolution::All => "c = any\n".to_string(),
            CSolution::One(v) => format!("c = {}\n", fmt_num(v)),
        };
    }
    Ok(s)
}

fn photonic(a: &PhotonicArgs) -> Result<String> {
    let drive = match a.drive {
        DriveArg::None => Drive::None,
        DriveArg::Pi => Drive::Pi,
        DriveArg::PiHalf => Drive::PiHalf,
    };
    let mut s = String::from(
        "sign_a,sign_b,success_probability,bright_probability,lost_probability,c00_re,c00_im,c01_re,c01_im,c10_re,c10_im,c11_re,c11_im\n",
    );
    for sa in [SpinSign::Plus, SpinSign::Minus] {
        for sb in [SpinSign::Plus, SpinSign::Minus] {
            let o = run_photonic(sa, sb)?;
            let r = resource_from_photonic(&o.resource, drive)?;
            let mut cells = vec![
                sa.to_string(),
                sb.to_string(),
                fmt_num(o.success_probability),
                fmt_num(o.bright_probability),
                fmt_num(o.lost_probability),
            ];
            for z in r.matrix().data() {
                cells.push(fmt_num(z.re));
                cells.push(fmt_num(z.im));
            }
            s += &row(&cells);
        }
    }
    Ok(s)
}

fn ghz(a: &GhzArgs) -> Result<String> {
    if a.nodes < 2 {
        return invalid("a chain needs at least two nodes");
    }
    let node = NodeParams::new(a.d, a.xi)?;
    let scheme: Vec<IterationSpec> = power_of_two_phase_set(a.d, &[])?
        .into_iter()
        .map(|phi| IterationSpec::symmetric(ResourceKind::PsiPlus.resource(), phi, Postselect::Equal))
        .collect();
    let mut order: Vec<(usize, usize)> = (0..a.nodes - 1).map(|k| (k, k + 1)).collect();
    if a.reverse {
        order.reverse();
    }
    let init = MultiQuditState::plus(a.nodes, a.d)?;
    let leaves = multi_outcome_tree(&init, &chain_steps(&order, &scheme), &node)?;
    let mut s = String::from("record,probability,ghz_fidelity\n");
    for l in &leaves {
        let rec = l.record.iter().map(|(x, y)| format!("{x}{y}")).collect::<Vec<_>>().join("_");
        s += &row(&[rec, fmt_num(l.probability), fmt_num(ghz_fidelity(&l.state))]);
    }
    Ok(s)
}

fn perturbation(a: &PerturbationArgs) -> Result<String> {
    let p = &a.phases;
    let (_, scheme) = resolve(p)?;
    if let Some(SetName::D3Constructed) = p.set {
        return invalid("perturbation runs start from the uniform superposition");
    }
    let mut zetas = a.zeta.clone();
    if a.nv14 {
        zetas.push(NVTypeParams::nv14().zeta());
    }
    if zetas.is_empty() {
        return invalid("give at least one --zeta or --nv14");
    }
    let mut s = String::from("d,zeta,reduction,reduction_per_zeta2,expected_e,success_probability\n");
    for z in zetas {
        let red = entanglement_reduction(p.d, &scheme, z, p.xi)?;
        let st = perturbed_stats(p.d, &scheme, z, p.xi)?;
        let per = if z == 0.0 { 0.0 } else { red / (z * z) };
        s += &row(&[
            p.d.to_string(),
            fmt_num(z),
            fmt_num(red),
            fmt_num(per),
            fmt_num(st.expected_ebits),
            fmt_num(st.success_probability),
        ]);
    }
    Ok(s)
}

fn defects(a: &DefectArgs) -> Result<String> {
    let thetas = if a.theta.is_empty() { (0..=6).map(|k| k as f64 * PI / 12.0).collect() } else { a.theta.clone() };
    let mut s = String::from("[vsic]\ntheta,a_zz,a_zx,a_xy,a_xz,a_xx\n");
    for t in thetas {
        let v = vsic_hyperfine(&VSiCParams::fitted(t)?)?;
        s += &row(&[fmt_num(t), fmt_num(v.a_zz), fmt_num(v.a_zx), fmt_num(v.a_xy), fmt_num(v.a_xz), fmt_num(v.a_xx)]);
    }
    s += "unconstrained = a_zx a_xy a_xz a_xx\n";

    let g = gev_effective(&GeVParams::new(a.lambda, c(a.alpha, -a.beta), a.gamma_b, a.a_par, a.a_perp)?)?;
    s += "\n[gev]\n";
    let _ = writeln!(s, "residual = {}", fmt_num(g.residual));
    let _ = writeln!(s, "hamiltonian_norm = {}", fmt_num(g.hamiltonian_norm));
    for (i, r) in g.tensor.iter().enumerate() {
        let _ = writeln!(s, "tensor_row_{} = {}", "xyz".as_bytes()[i] as char, r.map(fmt_num).join(" "));
    }
    for w in &g.warnings {
        let _ = writeln!(s, "warning = {w}");
    }
    let nv = NVTypeParams::nv14();
    let _ = writeln!(s, "\n[nv14]\nzeta = {}", fmt_num(nv.zeta()));
    Ok(s)
}
