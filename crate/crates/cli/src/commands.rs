use std::path::Path;

use nalgebra::DMatrix;
use qmi_core::certificates::{falsify_inclusion, find_alpha, find_alpha_beta, finsler_check, petersen, SearchReport};
use qmi_core::data::{
    build_n, build_phi, check_loop, chi2_quantile, gaussian_informativity, gaussian_phi, simulate, stabilize_full,
    stabilize_reduced, verify_controller, DesignConfig, ExperimentData, NoiseModel, StabilizationResult,
};
use qmi_core::projection::{lift, project};
use qmi_core::random::{ball_columns, rng, uniform};
use qmi_core::sets::{analyze, check_admissible, membership, membership_margin, sample, SampleConfig};
use qmi_core::{Document, PartitionedSym64, QmiError, SetKind, SymMatrix64, Tolerances64};

use crate::io::{load, matrix, partitioned};
use crate::{Command, DesignArgs, Kind, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Affirmative,
    Negative,
}

impl Verdict {
    pub fn code(self) -> u8 {
        match self {
            Verdict::Affirmative => 0,
            Verdict::Negative => 1,
        }
    }

    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Affirmative
        } else {
            Verdict::Negative
        }
    }
}

pub struct Outcome {
    pub report: Document,
    pub verdict: Verdict,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Lib(QmiError),
}

impl Failure {
    /// Exit status. Input problems are usage errors; failed hypotheses and
    /// non-members are negative answers.
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Lib(e) => match e {
                QmiError::Parse { .. }
                | QmiError::Missing(_)
                | QmiError::DimensionMismatch(_)
                | QmiError::InvalidParameter(_)
                | QmiError::InvalidTolerance(_)
                | QmiError::NotSymmetric(_)
                | QmiError::NonFinite(_) => 2,
                QmiError::NotAdmissible(_)
                | QmiError::Hypothesis(_)
                | QmiError::Inapplicable(_)
                | QmiError::NotAMember
                | QmiError::NoWitness(_) => 1,
                QmiError::Indeterminate { .. } => 3,
                QmiError::Numerical(_) | QmiError::Singular(_) | QmiError::NotPsd(_) => 4,
            },
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }

    /// Report printed for non-usage failures so scripts still get a
    /// parseable status line.
    pub fn report(&self, cmd: &Command) -> Option<Document> {
        let status = match self.code() {
            1 => "rejected",
            3 => "indeterminate",
            4 => "numerical-failure",
            _ => return None,
        };
        let mut d = Document::new();
        d.set_text("command", name(cmd)).set_text("status", status).set_text("reason", &one_line(&self.message()));
        if let Failure::Lib(QmiError::Indeterminate { best, upper }) = self {
            d.set_number("best_value", *best).set_number("upper_bound", *upper);
        }
        Some(d)
    }
}

fn one_line(s: &str) -> String {
    s.replace('\n', " ")
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Analyze { .. } => "analyze",
        Command::Sample { .. } => "sample",
        Command::Certify { .. } => "certify",
        Command::Finsler { .. } => "finsler",
        Command::Petersen { .. } => "petersen",
        Command::Project { .. } => "project",
        Command::Simulate { .. } => "simulate",
        Command::Stabilize(_) => "stabilize",
        Command::StabilizeReduced(_) => "stabilize-reduced",
        Command::Gaussian { .. } => "gaussian",
        Command::Verify { .. } => "verify",
    }
}

type Run = Result<Outcome, Failure>;

pub fn dispatch(cmd: &Command, tol: &Tolerances64) -> Run {
    let mut out = match cmd {
        Command::Analyze { pi, split, member, kind } => run_analyze(pi, split.q, split.r, member.as_deref(), *kind, tol),
        Command::Sample { pi, split, count, seed, strict, spread } => {
            run_sample(pi, split.q, split.r, *count, *seed, *strict, *spread, tol)
        }
        Command::Certify { m, n, q, mode, falsify, seed, budget } => {
            run_certify(m, n, *q, *mode, falsify.then_some((seed.unwrap_or(0), *budget)), tol)
        }
        Command::Finsler { m, n, q, mode } => run_finsler(m, n, *q, *mode, tol),
        Command::Petersen { input, mode } => run_petersen(input, *mode, tol),
        Command::Project { pi, w, split, lift, strict } => run_project(pi, w, split.q, split.r, lift.as_deref(), *strict, tol),
        Command::Simulate { system, horizon, noise_eps, seed } => run_simulate(system, *horizon, *noise_eps, *seed),
        Command::Stabilize(args) => run_design(args, false, tol),
        Command::StabilizeReduced(args) => run_design(args, true, tol),
        Command::Gaussian { data, sigma, delta, nonstrict, system } => {
            run_gaussian(data, *sigma, *delta, *nonstrict, system.as_deref(), tol)
        }
        Command::Verify { data, controller, samples, seed, noise, system } => {
            run_verify(data, controller, *samples, *seed, noise.as_deref(), system.as_deref(), tol)
        }
    }?;
    // Command name first, then the body.
    let mut head = Document::new();
    head.set_text("command", name(cmd));
    for key in out.report.keys().map(str::to_string).collect::<Vec<_>>() {
        let v = out.report.get(&key).cloned().expect("key listed by the document");
        insert_value(&mut head, &key, v);
    }
    out.report = head;
    Ok(out)
}

fn insert_value(d: &mut Document, key: &str, v: qmi_core::textfmt::Value) {
    use qmi_core::textfmt::Value;
    match v {
        Value::Number(x) => d.set_number(key, x),
        Value::Text(s) => d.set_text(key, &s),
        Value::Matrix(m) => d.set_matrix(key, &m),
    };
}

fn set_kind(kind: Kind) -> SetKind {
    match kind {
        Kind::Nonstrict => SetKind::Nonstrict,
        Kind::Strict => SetKind::Strict,
        Kind::Zero => SetKind::Zero,
    }
}

fn run_analyze(path: &Path, q: Option<usize>, r: Option<usize>, member: Option<&Path>, kind: Kind, tol: &Tolerances64) -> Run {
    let pi = partitioned(path, "Pi", q, r)?;
    let mut d = Document::new();
    d.set_int("q", pi.q() as i64).set_int("r", pi.r() as i64);
    let rep = check_admissible(&pi, tol)?;
    d.set_bool("admissible", rep.admissible());
    if !rep.admissible() {
        d.set_text("status", "not-admissible").set_text("reason", &one_line(&rep.describe()));
        return Ok(Outcome { report: d, verdict: Verdict::Negative });
    }
    let a = analyze(&pi, tol)?;
    d.set_bool("nonempty", a.nonempty)
        .set_bool("convex", a.convex)
        .set_bool("bounded", a.bounded)
        .set_bool("interior_nonempty", a.interior_nonempty)
        .set_bool("strict_nonempty", a.strict_nonempty)
        .set_bool("zero_nonempty", a.zero_nonempty)
        .set_text("p22_class", a.p22_class.label())
        .set_text("schur_class", a.schur_class.label())
        .set_int("rank_p22", a.rank_p22 as i64)
        .set_int("rank_schur", a.rank_schur as i64)
        .set_matrix("center", &a.center)
        .set_matrix("schur", a.schur.as_matrix());
    let Some(zpath) = member else {
        d.set_text("status", "admissible");
        return Ok(Outcome { report: d, verdict: Verdict::Affirmative });
    };
    let zdoc = load(zpath)?;
    let z = matrix(&zdoc, "Z", zpath)?;
    let is_member = membership(&z, &pi, set_kind(kind), tol)?;
    let (lo, psd, pd) = membership_margin(&z, &pi, tol)?;
    d.set_text("kind", kind_label(kind))
        .set_bool("member", is_member)
        .set_number("form_min_eigenvalue", lo)
        .set_number("psd_margin", psd)
        .set_number("pd_margin", pd)
        .set_text("status", if is_member { "member" } else { "not-member" });
    Ok(Outcome { report: d, verdict: Verdict::from_bool(is_member) })
}

fn kind_label(kind: Kind) -> &'static str {
    match kind {
        Kind::Nonstrict => "nonstrict",
        Kind::Strict => "strict",
        Kind::Zero => "zero",
    }
}

#[allow(clippy::too_many_arguments)]
fn run_sample(
    path: &Path,
    q: Option<usize>,
    r: Option<usize>,
    count: usize,
    seed: u64,
    strict: bool,
    spread: f64,
    tol: &Tolerances64,
) -> Run {
    let pi = partitioned(path, "Pi", q, r)?;
    let zs = sample(&pi, count, seed, &SampleConfig { strict, spread }, tol)?;
    let mut d = Document::new();
    d.set_text("status", "sampled").set_bool("strict", strict).set_int("seed", seed as i64).set_int("count", zs.len() as i64);
    for (i, z) in zs.iter().enumerate() {
        d.set_matrix(&format!("Z{i}"), z);
    }
    Ok(Outcome { report: d, verdict: Verdict::Affirmative })
}

/// Reads `M` and `N` (same order, same split).
fn pair(mpath: &Path, npath: &Path, q: Option<usize>) -> Result<(PartitionedSym64, PartitionedSym64), Failure> {
    let n = partitioned(npath, "N", q, None)?;
    let m = partitioned(mpath, "M", Some(q.unwrap_or(n.q())), None)?;
    if m.r() != n.r() {
        return Err(Failure::Usage(format!("M is split ({}, {}), N is split ({}, {})", m.q(), m.r(), n.q(), n.r())));
    }
    Ok((m, n))
}

fn write_search(d: &mut Document, rep: &SearchReport<f64>) {
    let h = &rep.hypotheses;
    d.set_bool("n_admissible", h.n_admissible)
        .set_bool("slater", h.slater)
        .set_bool("n22_negative_definite", h.n22_negative_definite)
        .set_bool("m22_nsd", h.m22_nsd)
        .set_bool("equivalence", h.equivalence)
        .set_number("best_alpha", rep.best_alpha)
        .set_number("best_value", rep.best_value);
    if let Some(c) = &rep.certificate {
        d.set_text("certificate", c.kind.label()).set_number("alpha", c.alpha);
        if let Some(b) = c.beta {
            d.set_number("beta", b);
        }
        d.set_number("margin", c.margin);
    } else {
        d.set_text("certificate", "none");
    }
}

fn search(m: &PartitionedSym64, n: &PartitionedSym64, mode: Mode, tol: &Tolerances64) -> Result<SearchReport<f64>, Failure> {
    Ok(match mode {
        Mode::Nonstrict => find_alpha(m, n, false, tol)?,
        Mode::Strict => find_alpha(m, n, true, tol)?,
        Mode::AlphaBeta => find_alpha_beta(m, n, tol)?,
    })
}

fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Nonstrict => "nonstrict",
        Mode::Strict => "strict",
        Mode::AlphaBeta => "alpha-beta",
    }
}

fn run_certify(mpath: &Path, npath: &Path, q: Option<usize>, mode: Mode, falsify: Option<(u64, usize)>, tol: &Tolerances64) -> Run {
    let (m, n) = pair(mpath, npath, q)?;
    let rep = search(&m, &n, mode, tol)?;
    let mut d = Document::new();
    d.set_text("mode", mode_label(mode));
    write_search(&mut d, &rep);
    if rep.certificate.is_some() {
        d.set_text("status", "certificate");
        return Ok(Outcome { report: d, verdict: Verdict::Affirmative });
    }
    d.set_text("status", "no-certificate");
    d.set_text(
        "result",
        if mode == Mode::AlphaBeta { "no alpha and beta exist in the search range" } else { "no alpha exists in the search range" },
    );
    if let Some((seed, budget)) = falsify {
        let strict = mode != Mode::Nonstrict;
        match falsify_inclusion(&n, &m, strict, budget, seed, tol)? {
            Some(c) => {
                d.set_text("counterexample", "found").set_matrix("Z", &c.z).set_number("violation", c.violation);
            }
            None => {
                d.set_text("counterexample", "none");
            }
        }
    }
    Ok(Outcome { report: d, verdict: Verdict::Negative })
}

fn run_finsler(mpath: &Path, npath: &Path, q: Option<usize>, mode: Mode, tol: &Tolerances64) -> Run {
    if mode == Mode::AlphaBeta {
        return Err(Failure::Usage("finsler takes --mode nonstrict or strict".into()));
    }
    let (m, n) = pair(mpath, npath, q)?;
    let rep = finsler_check(&m, &n, mode == Mode::Strict, tol)?;
    let mut d = Document::new();
    d.set_text("mode", mode_label(mode))
        .set_bool("m_admissible", rep.m_admissible)
        .set_bool("n_admissible", rep.n_admissible)
        .set_bool("n_schur_zero", rep.n_schur_zero)
        .set_bool("kernel_condition", rep.kernel_condition)
        .set_bool("m22_nsd", rep.m22_nsd)
        .set_bool("hypotheses_hold", rep.hypotheses_hold)
        .set_matrix("theta", rep.theta.as_matrix());
    let found = match &rep.search {
        Some(s) => {
            write_search(&mut d, s);
            s.certificate.is_some()
        }
        None => false,
    };
    d.set_text("status", if found { "certificate" } else if rep.hypotheses_hold { "no-certificate" } else { "hypotheses-fail" });
    Ok(Outcome { report: d, verdict: Verdict::from_bool(found) })
}

fn run_petersen(path: &Path, mode: Mode, tol: &Tolerances64) -> Run {
    if mode == Mode::AlphaBeta {
        return Err(Failure::Usage("petersen takes --mode nonstrict or strict".into()));
    }
    let doc = load(path)?;
    let c = SymMatrix64::new(doc.matrix("C")?)?;
    let e = doc.matrix::<f64>("E")?;
    let fbar = SymMatrix64::new(doc.matrix("Fbar")?)?;
    let g = doc.matrix::<f64>("G")?;
    let res = petersen(&c, &e, &fbar, &g, mode == Mode::Strict, tol)?;
    let mut d = Document::new();
    d.set_text("mode", mode_label(mode));
    let verdict = match res {
        Some(p) => {
            d.set_text("status", "multiplier").set_number("lambda", p.lambda).set_number("alpha", p.alpha).set_number("margin", p.margin);
            Verdict::Affirmative
        }
        None => {
            d.set_text("status", "no-multiplier");
            Verdict::Negative
        }
    };
    Ok(Outcome { report: d, verdict })
}

fn run_project(
    path: &Path,
    wpath: &Path,
    q: Option<usize>,
    r: Option<usize>,
    zpath: Option<&Path>,
    strict: bool,
    tol: &Tolerances64,
) -> Run {
    let pi = partitioned(path, "Pi", q, r)?;
    let wdoc = load(wpath)?;
    let w = matrix(&wdoc, "W", wpath)?;
    let proj = project(&pi, &w, tol)?;
    let mut d = Document::new();
    d.set_int("q", proj.projected.q() as i64)
        .set_int("r", proj.projected.r() as i64)
        .set_matrix("Pi_W", proj.projected.matrix())
        .set_bool("w_full_column_rank", proj.w_full_column_rank)
        .set_bool("p22_nonsingular", proj.p22_nonsingular)
        .set_bool("lift_applicable", proj.lift_applicable(strict));
    let Some(zpath) = zpath else {
        d.set_text("status", "projected");
        return Ok(Outcome { report: d, verdict: Verdict::Affirmative });
    };
    let zdoc = load(zpath)?;
    let zp = matrix(&zdoc, "Z", zpath)?;
    let z = lift(&zp, &proj, strict, tol)?;
    let residual = (&z * &w - &zp).norm();
    d.set_text("status", "lifted").set_matrix("Z", &z).set_number("residual", residual);
    Ok(Outcome { report: d, verdict: Verdict::Affirmative })
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64, Failure> {
    seed.ok_or_else(|| Failure::Usage(format!("{what} is random: pass --seed")))
}

fn run_simulate(path: &Path, horizon: Option<usize>, noise_eps: Option<f64>, seed: Option<u64>) -> Run {
    let doc = load(path)?;
    let a = doc.matrix::<f64>("A")?;
    let b = doc.matrix::<f64>("B")?;
    let n = a.nrows();
    let x0 = if doc.contains("x0") { doc.matrix("x0")? } else { DMatrix::zeros(n, 1) };
    let mut g = None;
    let u = if doc.contains("U") {
        doc.matrix("U")?
    } else {
        let t = horizon.ok_or_else(|| Failure::Usage("no `U` in the file: pass --horizon".into()))?;
        let r = g.insert(rng(need_seed(seed, "input generation")?));
        uniform::<f64>(r, b.ncols(), t)
    };
    let t = u.ncols();
    let w = if doc.contains("W") {
        doc.matrix("W")?
    } else if let Some(eps) = noise_eps {
        if !(eps >= 0.0) {
            return Err(Failure::Usage("--noise-eps must be non-negative".into()));
        }
        let r = match g.as_mut() {
            Some(r) => r,
            None => g.insert(rng(need_seed(seed, "noise generation")?)),
        };
        ball_columns::<f64>(r, n, t, eps)
    } else {
        DMatrix::zeros(n, t)
    };
    let data = simulate(&a, &b, &x0, &u, &w)?;
    let mut d = data.to_document();
    d.set_matrix("W", &w).set_text("status", "simulated");
    if let Some(s) = seed {
        d.set_int("seed", s as i64);
    }
    Ok(Outcome { report: d, verdict: Verdict::Affirmative })
}

/// Experiment data plus its noise bound. The noise description is read
/// from `noise_path` if given, else from the data file itself.
fn experiment(path: &Path, noise_path: Option<&Path>, tol: &Tolerances64) -> Result<(ExperimentData<f64>, PartitionedSym64, String), Failure> {
    let doc = load(path)?;
    let data = ExperimentData::<f64>::from_document(&doc)?;
    let ndoc = match noise_path {
        Some(p) => load(p)?,
        None => doc,
    };
    let label = ndoc
        .text("noise")
        .map_err(|_| Failure::Usage("no noise description: add `noise: <model>` or pass --noise".into()))?
        .to_string();
    let phi = if label == "gaussian" {
        gaussian_phi(&data, ndoc.number("sigma")?, ndoc.number("delta").unwrap_or(0.05), tol)?
    } else {
        build_phi(&NoiseModel::from_document(&ndoc)?, data.n(), data.horizon(), tol)?
    };
    Ok((data, phi, label))
}

fn true_system(path: &Path) -> Result<(DMatrix<f64>, DMatrix<f64>), Failure> {
    let doc = load(path)?;
    Ok((doc.matrix("A")?, doc.matrix("B")?))
}

fn write_design(
    d: &mut Document,
    res: Option<StabilizationResult<f64>>,
    system: Option<&Path>,
    tol: &Tolerances64,
) -> Result<Verdict, Failure> {
    let Some(res) = res else {
        d.set_text("status", "infeasible");
        return Ok(Verdict::Negative);
    };
    d.set_text("status", "feasible");
    let body = res.to_document();
    for key in body.keys() {
        insert_value(d, key, body.get(key).cloned().expect("listed key"));
    }
    if let Some(p) = system {
        let (a, b) = true_system(p)?;
        let chk = check_loop(&res, &a, &b, tol)?;
        d.set_number("true_spectral_radius", chk.spectral_radius)
            .set_number("true_lyapunov_margin", chk.lyapunov_margin)
            .set_bool("true_system_stabilized", chk.passed);
    }
    Ok(Verdict::Affirmative)
}

fn run_design(args: &DesignArgs, reduced: bool, tol: &Tolerances64) -> Run {
    let (data, phi, label) = experiment(&args.data, args.noise.as_deref(), tol)?;
    let nq = build_n(&data, &phi, tol)?;
    let cfg = DesignConfig { tol: *tol, prefer_strict: !args.nonstrict, ..DesignConfig::default() };
    let res = if reduced { stabilize_reduced(&data, &phi, &cfg)? } else { stabilize_full(&data, &phi, &cfg)? };
    let mut d = Document::new();
    d.set_text("noise", &label)
        .set_int("n", data.n() as i64)
        .set_int("m", data.m() as i64)
        .set_int("horizon", data.horizon() as i64)
        .set_bool("data_consistent", nq.consistent);
    let verdict = write_design(&mut d, res, args.system.as_deref(), tol)?;
    Ok(Outcome { report: d, verdict })
}

fn run_gaussian(path: &Path, sigma: f64, delta: f64, nonstrict: bool, system: Option<&Path>, tol: &Tolerances64) -> Run {
    let doc = load(path)?;
    let data = ExperimentData::<f64>::from_document(&doc)?;
    let cfg = DesignConfig { tol: *tol, prefer_strict: !nonstrict, ..DesignConfig::default() };
    let res = gaussian_informativity(&data, sigma, delta, &cfg)?;
    let mut d = Document::new();
    d.set_number("sigma", sigma)
        .set_number("delta", delta)
        .set_number("chi2_quantile", chi2_quantile(data.n() * (data.n() + data.m()), 1.0 - delta)?);
    let verdict = write_design(&mut d, res, system, tol)?;
    Ok(Outcome { report: d, verdict })
}

fn run_verify(
    path: &Path,
    cpath: &Path,
    samples: usize,
    seed: u64,
    noise: Option<&Path>,
    system: Option<&Path>,
    tol: &Tolerances64,
) -> Run {
    let (data, phi, label) = experiment(path, noise, tol)?;
    let ctrl = StabilizationResult::<f64>::from_document(&load(cpath)?)?;
    if ctrl.p.dim() != data.n() || ctrl.k.nrows() != data.m() {
        return Err(Failure::Usage(format!(
            "controller is for n = {}, m = {}, data have n = {}, m = {}",
            ctrl.p.dim(),
            ctrl.k.nrows(),
            data.n(),
            data.m()
        )));
    }
    let rep = verify_controller(&ctrl, &data, &phi, samples, seed, tol)?;
    let mut ok = rep.passed();
    let mut d = Document::new();
    d.set_text("noise", &label)
        .set_int("seed", seed as i64)
        .set_int("checked", rep.checked as i64)
        .set_int("failures", rep.failures.len() as i64)
        .set_number("worst_spectral_radius", rep.worst_radius)
        .set_number("worst_lyapunov_margin", rep.worst_lyapunov);
    if let Some(f) = rep.failures.first() {
        d.set_matrix("failing_A", &f.a).set_matrix("failing_B", &f.b);
    }
    if let Some(p) = system {
        let (a, b) = true_system(p)?;
        let chk = check_loop(&ctrl, &a, &b, tol)?;
        ok &= chk.passed;
        d.set_number("true_spectral_radius", chk.spectral_radius)
            .set_number("true_lyapunov_margin", chk.lyapunov_margin)
            .set_bool("true_system_stabilized", chk.passed);
    }
    d.set_text("status", if ok { "verified" } else { "failed" });
    Ok(Outcome { report: d, verdict: Verdict::from_bool(ok) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_verdict() {
        assert_eq!(Failure::Lib(QmiError::Indeterminate { best: -1e-3, upper: 1e-3 }).code(), 3);
        assert_eq!(Failure::Lib(QmiError::Numerical("x".into())).code(), 4);
        assert_eq!(Failure::Lib(QmiError::NotAMember).code(), 1);
        assert_eq!(Failure::Lib(QmiError::Parse { line: 1, msg: "x".into() }).code(), 2);
        assert_eq!(Failure::Usage("x".into()).code(), 2);
        assert_eq!(Verdict::Affirmative.code(), 0);
        assert_eq!(Verdict::Negative.code(), 1);
    }

    #[test]
    fn indeterminate_report_carries_bounds() {
        let cmd = Command::Petersen { input: "x".into(), mode: Mode::Strict };
        let f = Failure::Lib(QmiError::Indeterminate { best: -0.5, upper: 0.25 });
        let d = f.report(&cmd).unwrap();
        let back = Document::parse(&d.to_string()).unwrap();
        assert_eq!(back.text("status").unwrap(), "indeterminate");
        assert_eq!(back.number("upper_bound").unwrap(), 0.25);
        assert!(Failure::Usage("x".into()).report(&cmd).is_none());
    }
}
