//! Experiment driver: builds the bundled surface zoo, runs the requested
//! verification suites over a resolution ladder, and writes one CSV per
//! suite plus a text summary.
//!
//! Everything here is deterministic: random fields and regions come from a
//! counter-mode generator seeded per (seed, surface, resolution), and report
//! rows are emitted in configuration order, so two runs with the same
//! configuration produce byte-identical files.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    coarea_check, coarea_u_check, kappa_conjectured, kappa_improved, kappa_proved,
    reciprocality_from, ring_probe, Flag, ProductValue, RingProbe,
};
use crate::io::fmt_sig12;
use crate::modulus::{solve_modulus, ModulusResult, SolveOptions};
use crate::potential::build_potential;
use crate::surface::{
    build_collapsed_disk, build_conformal, build_rectangle, EdgeId, FamilySpec, MetricMesh,
    QuadFrame, VertexId,
};
use crate::{Error, Result};

/// One verification suite; each writes its own CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Modulus,
    Reciprocality,
    Coarea,
    Ring,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Modulus,
        Suite::Reciprocality,
        Suite::Coarea,
        Suite::Ring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Modulus => "modulus",
            Suite::Reciprocality => "reciprocality",
            Suite::Coarea => "coarea",
            Suite::Ring => "ring",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        match s {
            "modulus" => Ok(Suite::Modulus),
            "reciprocality" => Ok(Suite::Reciprocality),
            "coarea" => Ok(Suite::Coarea),
            "ring" => Ok(Suite::Ring),
            other => Err(Error::Config(format!(
                "unknown suite '{other}'; available: modulus, reciprocality, coarea, ring, all"
            ))),
        }
    }
}

/// Built-in surface names accepted by [`build_surface`].
pub fn zoo_names() -> &'static [&'static str] {
    &[
        "square",
        "rect2",
        "rect3",
        "conformal_poly",
        "conformal_sine",
        "collapsed_disk",
    ]
}

/// Surfaces whose metric is bounded away from zero; the collapsed disk is
/// the lone degenerate member of the zoo.
pub fn is_smooth(name: &str) -> bool {
    name != "collapsed_disk"
}

/// Builds a zoo surface at resolution `n` (grid cells per unit length).
pub fn build_surface(name: &str, n: usize) -> Result<(MetricMesh<f64>, QuadFrame)> {
    match name {
        "square" => build_rectangle(1.0, 1.0, n),
        "rect2" => build_rectangle(2.0, 1.0, n),
        "rect3" => build_rectangle(3.0, 1.0, n),
        "conformal_poly" => build_conformal(1.0, 1.0, n, |x: f64, y: f64| 1.0 + x * x + y * y),
        "conformal_sine" => build_conformal(1.0, 1.0, n, |x: f64, y: f64| {
            1.0 + 0.5 * (PI * x).sin() * (PI * y).sin()
        }),
        "collapsed_disk" => build_collapsed_disk(1.5, n, 0.5),
        other => Err(Error::Config(format!(
            "unknown surface '{other}'; available: {}",
            zoo_names().join(", ")
        ))),
    }
}

/// Experiment configuration, parsed from `key = value` text.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub surfaces: Vec<String>,
    /// Grid resolutions, strictly increasing.
    pub resolutions: Vec<usize>,
    pub suites: Vec<Suite>,
    pub eps_admissibility: f64,
    pub eps_gap: f64,
    /// Level count for the coarea quadrature.
    pub levels: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            surfaces: zoo_names().iter().map(|s| s.to_string()).collect(),
            resolutions: vec![16, 32],
            suites: Suite::ALL.to_vec(),
            eps_admissibility: 1e-6,
            eps_gap: 1e-6,
            levels: 64,
            seed: 7,
            out_dir: PathBuf::from("reports"),
        }
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are
    /// skipped, later keys override earlier ones. Unknown keys and malformed
    /// values report their line number.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {lineno}: expected 'key = value', got '{line}'"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Config(format!("line {lineno}: {what} '{value}'"));
            match key {
                "surfaces" => {
                    cfg.surfaces = if value == "all" {
                        zoo_names().iter().map(|s| s.to_string()).collect()
                    } else {
                        value.split(',').map(|s| s.trim().to_string()).collect()
                    };
                }
                "resolutions" => {
                    cfg.resolutions = value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("bad resolution list"))?;
                }
                "suites" => {
                    cfg.suites = if value == "all" {
                        Suite::ALL.to_vec()
                    } else {
                        value
                            .split(',')
                            .map(|s| Suite::parse(s.trim()))
                            .collect::<Result<_>>()
                            .map_err(|e| Error::Config(format!("line {lineno}: {e}")))?
                    };
                }
                "eps_adm" => {
                    cfg.eps_admissibility =
                        value.parse().map_err(|_| bad("bad tolerance"))?;
                }
                "eps_gap" => {
                    cfg.eps_gap = value.parse().map_err(|_| bad("bad tolerance"))?;
                }
                "levels" => {
                    cfg.levels = value.parse().map_err(|_| bad("bad level count"))?;
                }
                "seed" => {
                    cfg.seed = value.parse().map_err(|_| bad("bad seed"))?;
                }
                "out" => {
                    cfg.out_dir = PathBuf::from(value);
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {lineno}: unknown key '{other}' (expected surfaces, resolutions, \
                         suites, eps_adm, eps_gap, levels, seed, out)"
                    )));
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.surfaces.is_empty() {
            return Err(Error::Config("no surfaces selected".into()));
        }
        for name in &self.surfaces {
            if !zoo_names().contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown surface '{name}'; available: {}",
                    zoo_names().join(", ")
                )));
            }
        }
        if self.resolutions.is_empty() {
            return Err(Error::Config("no resolutions selected".into()));
        }
        for w in self.resolutions.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Config(format!(
                    "resolutions must be strictly increasing, got {} before {}",
                    w[0], w[1]
                )));
            }
        }
        if self.resolutions[0] == 0 {
            return Err(Error::Config("resolutions must be positive".into()));
        }
        if self.suites.is_empty() {
            return Err(Error::Config("no suites selected".into()));
        }
        if self.levels < 2 {
            return Err(Error::Config("levels must be at least 2".into()));
        }
        for (name, eps) in [
            ("eps_adm", self.eps_admissibility),
            ("eps_gap", self.eps_gap),
        ] {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be finite and positive, got {eps}"
                )));
            }
        }
        Ok(())
    }
}

/// Sub-seed for one (surface, resolution) cell, so the random content of a
/// cell depends only on the configured seed and the cell, not on which other
/// cells run.
fn cell_seed(seed: u64, surface: &str, n: usize) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in surface.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h ^ seed
}

/// A random `lipschitz`-Lipschitz vertex field: the lower envelope of two to
/// four cones `c + L·dist(a, ·)` in the edge-length metric, which satisfies
/// the edge-wise bound `|Δm| ≤ L·ℓ(e)` up to float rounding.
pub fn random_lipschitz_field<R: Rng>(
    mesh: &MetricMesh<f64>,
    lipschitz: f64,
    rng: &mut R,
) -> Vec<f64> {
    let anchors = rng.gen_range(2..=4usize);
    let mut m = vec![f64::INFINITY; mesh.vertex_count()];
    for _ in 0..anchors {
        let a = rng.gen_range(0..mesh.vertex_count());
        let c = rng.gen_range(-1.0..1.0);
        let dist = mesh.length_distances(&[a]);
        for (v, d) in dist.iter().enumerate() {
            if let Some(d) = d {
                m[v] = m[v].min(c + lipschitz * *d);
            }
        }
    }
    for v in &mut m {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    m
}

/// Grows a random connected region of up to `target` interior vertices
/// (vertices on no frame arc), absorbing a uniformly chosen frontier vertex
/// at each step. Stops early if the interior component is exhausted; the
/// result is sorted.
pub fn random_connected_region<R: Rng>(
    mesh: &MetricMesh<f64>,
    frame: &QuadFrame,
    target: usize,
    rng: &mut R,
) -> Result<Vec<VertexId>> {
    if target == 0 {
        return Err(Error::InvalidInput("region target must be positive".into()));
    }
    let mut interior = vec![true; mesh.vertex_count()];
    for arc in frame.arcs() {
        for &v in arc {
            interior[v] = false;
        }
    }
    let candidates: Vec<VertexId> = (0..mesh.vertex_count()).filter(|&v| interior[v]).collect();
    if candidates.is_empty() {
        return Err(Error::InvalidInput(
            "every vertex lies on the frame; no interior region exists".into(),
        ));
    }
    let start = candidates[rng.gen_range(0..candidates.len())];
    let mut in_region = vec![false; mesh.vertex_count()];
    let mut region = vec![start];
    in_region[start] = true;
    let mut frontier: Vec<VertexId> = mesh.neighbors(start).iter().map(|&(_, v)| v).collect();
    while region.len() < target && !frontier.is_empty() {
        let v = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        if in_region[v] || !interior[v] {
            continue;
        }
        in_region[v] = true;
        region.push(v);
        frontier.extend(mesh.neighbors(v).iter().map(|&(_, u)| u));
    }
    region.sort_unstable();
    Ok(region)
}

/// Grows a random connected edge subgraph of up to `target` edges, absorbing
/// a uniformly chosen incident edge at each step; the result is sorted.
pub fn random_connected_subgraph<R: Rng>(
    mesh: &MetricMesh<f64>,
    target: usize,
    rng: &mut R,
) -> Result<Vec<EdgeId>> {
    if target == 0 {
        return Err(Error::InvalidInput(
            "subgraph target must be positive".into(),
        ));
    }
    if mesh.edge_count() == 0 {
        return Err(Error::InvalidInput("mesh has no edges".into()));
    }
    let start = rng.gen_range(0..mesh.edge_count());
    let mut in_sub = vec![false; mesh.edge_count()];
    let mut sub = vec![start];
    in_sub[start] = true;
    let mut frontier: Vec<EdgeId> = Vec::new();
    let absorb = |e: EdgeId, frontier: &mut Vec<EdgeId>| {
        let ed = mesh.edge(e);
        for v in [ed.a, ed.b] {
            frontier.extend(mesh.neighbors(v).iter().map(|&(ne, _)| ne));
        }
    };
    absorb(start, &mut frontier);
    while sub.len() < target && !frontier.is_empty() {
        let e = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        if in_sub[e] {
            continue;
        }
        in_sub[e] = true;
        sub.push(e);
        absorb(e, &mut frontier);
    }
    sub.sort_unstable();
    Ok(sub)
}

/// What a run produced and how it went.
#[derive(Debug)]
pub struct RunOutcome {
    /// Files written, CSVs first, summary last.
    pub files: Vec<PathBuf>,
    /// Hard invariant violations: the product lower bound against the proved
    /// κ, exactness of upper gradients, or a failed solver certificate.
    pub hard_failures: Vec<String>,
    pub rows: usize,
    pub failed_rows: usize,
}

struct Csv {
    buf: String,
    rows: usize,
    failed: usize,
}

impl Csv {
    fn new() -> Self {
        Csv {
            buf: String::from("surface,n,quantity,lhs,rhs,constant,pass\n"),
            rows: 0,
            failed: 0,
        }
    }

    fn row(
        &mut self,
        surface: &str,
        n: usize,
        quantity: &str,
        lhs: &str,
        rhs: &str,
        constant: &str,
        pass: &str,
    ) {
        let _ = writeln!(
            self.buf,
            "{surface},{n},{quantity},{lhs},{rhs},{constant},{pass}"
        );
        self.rows += 1;
        if pass == "fail" {
            self.failed += 1;
        }
    }
}

fn flag_str(f: Flag) -> &'static str {
    match f {
        Flag::Pass => "pass",
        Flag::Fail => "fail",
        Flag::Indeterminate => "indeterminate",
    }
}

fn pass_str(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn fmt_val(x: f64) -> String {
    if x.is_finite() {
        fmt_sig12(x)
    } else {
        "inf".to_string()
    }
}

fn product_str(p: &ProductValue<f64>) -> String {
    match p {
        ProductValue::Finite(v) => fmt_sig12(*v),
        ProductValue::Infinite => "inf".to_string(),
        ProductValue::Indeterminate => "indeterminate".to_string(),
    }
}

fn relative_gap(r: &ModulusResult<f64>) -> f64 {
    if r.primal_value > 0.0 && r.primal_value.is_finite() {
        (r.primal_value - r.dual_value) / r.primal_value
    } else {
        0.0
    }
}

/// Runs the configured suites and writes the report files. Solver
/// certificate failures, upper-gradient violations, and a finite conjugate
/// product below `1/κ_proved` are collected as hard failures; everything
/// else is recorded in the CSVs and summary only.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let solve = SolveOptions {
        eps_admissibility: config.eps_admissibility,
        eps_gap: config.eps_gap,
        max_iterations: None,
    };
    let wants = |s: Suite| config.suites.contains(&s);

    let mut csvs = [Csv::new(), Csv::new(), Csv::new(), Csv::new()];
    let mut hard: Vec<String> = Vec::new();
    let mut summary = String::new();
    let kp: f64 = kappa_proved();
    let ki: f64 = kappa_improved();
    let kc: f64 = kappa_conjectured();
    let _ = writeln!(summary, "conjugate modulus verification summary");
    let _ = writeln!(summary, "surfaces = {}", config.surfaces.join(", "));
    let _ = writeln!(
        summary,
        "resolutions = {}",
        config
            .resolutions
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(
        summary,
        "suites = {}",
        config
            .suites
            .iter()
            .map(|s| s.name())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(
        summary,
        "seed = {}, eps_adm = {}, eps_gap = {}, levels = {}",
        config.seed,
        fmt_sig12(config.eps_admissibility),
        fmt_sig12(config.eps_gap),
        config.levels
    );
    let _ = writeln!(
        summary,
        "kappa_proved = {} (1/kappa = {})",
        fmt_sig12(kp),
        fmt_sig12(kp.recip())
    );
    let _ = writeln!(
        summary,
        "kappa_improved = {} (1/kappa = {})",
        fmt_sig12(ki),
        fmt_sig12(ki.recip())
    );
    let _ = writeln!(
        summary,
        "kappa_conjectured = {} (1/kappa = {})",
        fmt_sig12(kc),
        fmt_sig12(kc.recip())
    );
    let _ = writeln!(summary);

    for surface in &config.surfaces {
        for &n in &config.resolutions {
            let (mesh, frame) = build_surface(surface, n)?;
            let cell = format!("{surface} n={n}");
            let _ = writeln!(summary, "[{cell}]");

            let pair = if wants(Suite::Modulus) || wants(Suite::Reciprocality) || wants(Suite::Coarea)
            {
                let g1 = solve_modulus(&mesh, &FamilySpec::gamma1(), Some(&frame), &solve)?;
                let g2 = solve_modulus(&mesh, &FamilySpec::gamma2(), Some(&frame), &solve)?;
                for (label, r) in [("mod_gamma1", &g1), ("mod_gamma2", &g2)] {
                    if !r.certified {
                        hard.push(format!("{cell}: {label} certificate failed"));
                    }
                }
                Some((g1, g2))
            } else {
                None
            };

            let probe = if wants(Suite::Ring) || wants(Suite::Reciprocality) {
                let p = ring_probe(&mesh, &frame, &solve, None, None)?;
                if !p.certified {
                    hard.push(format!("{cell}: ring probe certificate failed"));
                }
                Some(p)
            } else {
                None
            };

            if wants(Suite::Modulus) {
                let (g1, g2) = pair.as_ref().unwrap();
                modulus_rows(&mut csvs[0], &mut summary, surface, n, g1, g2);
            }
            if wants(Suite::Reciprocality) {
                let (g1, g2) = pair.as_ref().unwrap();
                reciprocality_rows(
                    &mut csvs[1],
                    &mut summary,
                    &mut hard,
                    surface,
                    n,
                    &mesh,
                    g1,
                    g2,
                    probe.as_ref(),
                );
            }
            if wants(Suite::Coarea) {
                let (g1, _) = pair.as_ref().unwrap();
                coarea_rows(
                    &mut csvs[2],
                    &mut summary,
                    &mut hard,
                    &cell,
                    config,
                    &mesh,
                    &frame,
                    surface,
                    n,
                    g1,
                )?;
            }
            if wants(Suite::Ring) {
                ring_rows(&mut csvs[3], &mut summary, surface, n, probe.as_ref().unwrap());
            }
            let _ = writeln!(summary);
        }
    }

    fs::create_dir_all(&config.out_dir)?;
    let mut files = Vec::new();
    let mut rows = 0;
    let mut failed_rows = 0;
    for (suite, csv) in Suite::ALL.iter().zip(csvs.into_iter()) {
        if !wants(*suite) {
            continue;
        }
        rows += csv.rows;
        failed_rows += csv.failed;
        let path = config.out_dir.join(format!("{}.csv", suite.name()));
        fs::write(&path, csv.buf)?;
        files.push(path);
    }
    let _ = writeln!(summary, "rows = {rows}, failed rows = {failed_rows}");
    let _ = writeln!(summary, "hard failures = {}", hard.len());
    for h in &hard {
        let _ = writeln!(summary, "  {h}");
    }
    let path = config.out_dir.join("summary.txt");
    fs::write(&path, summary)?;
    files.push(path);

    Ok(RunOutcome {
        files,
        hard_failures: hard,
        rows,
        failed_rows,
    })
}

fn modulus_rows(
    csv: &mut Csv,
    summary: &mut String,
    surface: &str,
    n: usize,
    g1: &ModulusResult<f64>,
    g2: &ModulusResult<f64>,
) {
    for (label, r) in [("mod_gamma1", g1), ("mod_gamma2", g2)] {
        csv.row(
            surface,
            n,
            label,
            &crate::io::fmt_modulus(&r.value),
            &fmt_val(r.dual_value),
            &fmt_sig12(relative_gap(r)),
            pass_str(r.certified),
        );
        let _ = writeln!(
            summary,
            "  {label} = {} (dual {}, gap {}, {})",
            crate::io::fmt_modulus(&r.value),
            fmt_val(r.dual_value),
            fmt_sig12(relative_gap(r)),
            if r.certified { "certified" } else { "UNCERTIFIED" }
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn reciprocality_rows(
    csv: &mut Csv,
    summary: &mut String,
    hard: &mut Vec<String>,
    surface: &str,
    n: usize,
    mesh: &MetricMesh<f64>,
    g1: &ModulusResult<f64>,
    g2: &ModulusResult<f64>,
    probe: Option<&RingProbe<f64>>,
) {
    let report = reciprocality_from(mesh, g1, g2, probe);
    let product = product_str(&report.product);
    let lower_proved = report.verdicts[0].lower;
    csv.row(
        surface,
        n,
        "product",
        &product,
        &fmt_sig12(kappa_proved::<f64>().recip()),
        &fmt_sig12(kappa_proved()),
        flag_str(lower_proved),
    );
    if lower_proved == Flag::Fail {
        hard.push(format!(
            "{surface} n={n}: conjugate product {product} fell below 1/kappa_proved"
        ));
    }
    for (name, v) in ["kappa_proved", "kappa_improved", "kappa_conjectured"]
        .iter()
        .zip(report.verdicts.iter())
    {
        csv.row(
            surface,
            n,
            &format!("lower_{name}"),
            &fmt_sig12(v.kappa.recip()),
            &product,
            &fmt_sig12(v.kappa),
            flag_str(v.lower),
        );
        csv.row(
            surface,
            n,
            &format!("upper_{name}"),
            &product,
            &fmt_sig12(v.kappa),
            &fmt_sig12(v.kappa),
            flag_str(v.upper),
        );
    }
    if let Some(chain) = &report.chain {
        csv.row(
            surface,
            n,
            "chain_step1",
            &fmt_sig12(1.0),
            &fmt_sig12(chain.factor * chain.cross_term),
            &fmt_sig12(chain.factor),
            pass_str(chain.step1_ok),
        );
        let m1m2 = report.product.finite().unwrap_or(f64::INFINITY);
        csv.row(
            surface,
            n,
            "chain_step2",
            &fmt_sig12(chain.cross_term * chain.cross_term),
            &fmt_val(m1m2),
            "",
            pass_str(chain.step2_ok),
        );
    }
    match report.ring_values.as_slice() {
        [] => csv.row(surface, n, "ring_decay", "", "", "", "indeterminate"),
        values => {
            let v_fourfold = values[1.min(values.len() - 1)].1;
            let v_lo = values[values.len() - 1].1;
            csv.row(
                surface,
                n,
                "ring_decay",
                &fmt_val(v_lo),
                &fmt_val(0.5 * v_fourfold),
                &fmt_sig12(0.5),
                flag_str(report.ring),
            );
        }
    }
    let _ = writeln!(
        summary,
        "  product = {product}; lower/upper vs proved {}/{}, improved {}/{}, conjectured {}/{}",
        flag_str(report.verdicts[0].lower),
        flag_str(report.verdicts[0].upper),
        flag_str(report.verdicts[1].lower),
        flag_str(report.verdicts[1].upper),
        flag_str(report.verdicts[2].lower),
        flag_str(report.verdicts[2].upper),
    );
    if let Some(chain) = &report.chain {
        let _ = writeln!(
            summary,
            "  chain: cross term {}, step1 {}, step2 {}",
            fmt_sig12(chain.cross_term),
            pass_str(chain.step1_ok),
            pass_str(chain.step2_ok),
        );
    }
    let _ = writeln!(summary, "  ring decay: {}", flag_str(report.ring));
}

#[allow(clippy::too_many_arguments)]
fn coarea_rows(
    csv: &mut Csv,
    summary: &mut String,
    hard: &mut Vec<String>,
    cell: &str,
    config: &ExperimentConfig,
    mesh: &MetricMesh<f64>,
    frame: &QuadFrame,
    surface: &str,
    n: usize,
    g1: &ModulusResult<f64>,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(config.seed, surface, n));
    let tol = 1.6 / n as f64;
    let mut passes = 0usize;
    for k in 0..20 {
        let m = random_lipschitz_field(mesh, 1.0, &mut rng);
        let g: Vec<f64> = if k % 2 == 0 {
            vec![1.0; mesh.edge_count()]
        } else {
            (0..mesh.edge_count())
                .map(|_| rng.gen_range(0.1..1.1))
                .collect()
        };
        let rep = coarea_check(mesh, &m, 1.0, &g, config.levels, tol)?;
        if rep.pass {
            passes += 1;
        }
        csv.row(
            surface,
            n,
            &format!("lipschitz_field_{k:02}"),
            &fmt_sig12(rep.lhs),
            &fmt_sig12(rep.rhs),
            &fmt_sig12(rep.constant),
            pass_str(rep.pass),
        );
    }

    let field = build_potential(mesh, frame, &g1.density)?;
    let ones = vec![1.0; mesh.edge_count()];
    let rep = coarea_u_check(mesh, &field, &ones, config.levels, tol)?;
    csv.row(
        surface,
        n,
        "potential_coarea",
        &fmt_sig12(rep.lhs),
        &fmt_sig12(rep.rhs),
        &fmt_sig12(rep.constant),
        pass_str(rep.pass),
    );
    let empirical = rep.empirical_constant.unwrap_or(0.0);
    if is_smooth(surface) {
        let bound = 4.0 / PI * 1.1;
        csv.row(
            surface,
            n,
            "potential_coarea_empirical",
            &fmt_sig12(empirical),
            &fmt_sig12(bound),
            &fmt_sig12(4.0 / PI),
            pass_str(empirical <= bound),
        );
    }
    let violations = field.upper_gradient_violations(mesh);
    csv.row(
        surface,
        n,
        "upper_gradient_violations",
        &violations.len().to_string(),
        "0",
        "",
        pass_str(violations.is_empty()),
    );
    if !violations.is_empty() {
        hard.push(format!(
            "{cell}: {} upper-gradient violations",
            violations.len()
        ));
    }
    let _ = writeln!(
        summary,
        "  coarea: {passes}/20 random fields pass; potential lhs {} vs rhs {}, empirical constant {}",
        fmt_sig12(rep.lhs),
        fmt_sig12(rep.rhs),
        fmt_sig12(empirical),
    );
    let _ = writeln!(
        summary,
        "  upper-gradient violations: {}",
        violations.len()
    );
    Ok(())
}

fn ring_rows(csv: &mut Csv, summary: &mut String, surface: &str, n: usize, probe: &RingProbe<f64>) {
    for (k, &(r, v)) in probe.values.iter().enumerate() {
        let reference = 2.0 * PI / (probe.outer / r).ln();
        csv.row(
            surface,
            n,
            &format!("ring_{}", k + 1),
            &fmt_val(v),
            &fmt_sig12(reference),
            &fmt_sig12(r),
            pass_str(probe.certified && v.is_finite()),
        );
    }
    let v_fourfold = probe.values[1].1;
    let v_lo = probe.values[probe.values.len() - 1].1;
    csv.row(
        surface,
        n,
        "ring_decay",
        &fmt_val(v_lo),
        &fmt_val(0.5 * v_fourfold),
        &fmt_sig12(0.5),
        flag_str(probe.flag),
    );
    let _ = writeln!(
        summary,
        "  ring probe at v{} outer {}: values {} -> {}, decay {}",
        probe.center,
        fmt_sig12(probe.outer),
        fmt_val(probe.values[0].1),
        fmt_val(v_lo),
        flag_str(probe.flag),
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::UnionFind;

    #[test]
    fn config_defaults_and_parsing() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.surfaces.len(), 6);
        assert_eq!(cfg.resolutions, vec![16, 32]);
        assert_eq!(cfg.suites, Suite::ALL.to_vec());
        cfg.validate().unwrap();

        let cfg = ExperimentConfig::from_text(
            "# comment\nsurfaces = square, rect2\nresolutions = 8, 16 # trailing\nsuites = coarea\nseed = 11\nlevels = 32\nout = /tmp/reports\n",
        )
        .unwrap();
        assert_eq!(cfg.surfaces, vec!["square", "rect2"]);
        assert_eq!(cfg.resolutions, vec![8, 16]);
        assert_eq!(cfg.suites, vec![Suite::Coarea]);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.levels, 32);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_input() {
        let err = ExperimentConfig::from_text("bogus = 1").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        assert!(err.to_string().contains("unknown key"), "{err}");

        let err = ExperimentConfig::from_text("resolutions = 32, 16")
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("strictly increasing"), "{err}");

        let err = ExperimentConfig::from_text("surfaces = moebius")
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("collapsed_disk"), "{err}");
        assert!(err.to_string().contains("moebius"), "{err}");

        let err = ExperimentConfig::from_text("suites = modulus, sieve").unwrap_err();
        assert!(err.to_string().contains("unknown suite"), "{err}");
    }

    #[test]
    fn random_field_is_edgewise_lipschitz_and_deterministic() {
        let (mesh, _) = build_surface("collapsed_disk", 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_lipschitz_field(&mesh, 1.0, &mut rng);
        let eps = f64::EPSILON;
        for e in 0..mesh.edge_count() {
            let ed = mesh.edge(e);
            let jump = (m[ed.a] - m[ed.b]).abs();
            let scale = 1.0 + m[ed.a].abs().max(m[ed.b].abs());
            assert!(
                jump <= ed.length * (1.0 + 16.0 * eps) + 64.0 * eps * scale,
                "edge {e}: jump {jump} over length {}",
                ed.length
            );
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(m, random_lipschitz_field(&mesh, 1.0, &mut rng2));
    }

    #[test]
    fn random_region_is_connected_and_interior() {
        let (mesh, frame) = build_surface("square", 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let region = random_connected_region(&mesh, &frame, 12, &mut rng).unwrap();
            assert!(!region.is_empty() && region.len() <= 12);
            for arc in frame.arcs() {
                for v in arc {
                    assert!(!region.contains(v));
                }
            }
            let mut uf = UnionFind::new(mesh.vertex_count());
            let inside: Vec<bool> = {
                let mut m = vec![false; mesh.vertex_count()];
                for &v in &region {
                    m[v] = true;
                }
                m
            };
            for e in 0..mesh.edge_count() {
                let ed = mesh.edge(e);
                if inside[ed.a] && inside[ed.b] {
                    uf.union(ed.a, ed.b);
                }
            }
            for &v in &region {
                assert!(uf.same(region[0], v), "region not connected");
            }
        }
    }

    #[test]
    fn random_subgraph_is_connected() {
        let (mesh, _) = build_surface("rect2", 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let sub = random_connected_subgraph(&mesh, 25, &mut rng).unwrap();
            assert_eq!(sub.len(), 25);
            let mut uf = UnionFind::new(mesh.vertex_count());
            for &e in &sub {
                let ed = mesh.edge(e);
                uf.union(ed.a, ed.b);
            }
            let anchor = mesh.edge(sub[0]).a;
            for &e in &sub {
                assert!(uf.same(anchor, mesh.edge(e).a), "subgraph not connected");
            }
            assert!(sub.windows(2).all(|w| w[0] < w[1]), "not sorted/deduped");
        }
    }

    #[test]
    fn run_writes_five_deterministic_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            surfaces: vec!["square".into()],
            resolutions: vec![4],
            levels: 16,
            out_dir: dir.path().join("a"),
            ..ExperimentConfig::default()
        };
        let out = run(&cfg).unwrap();
        assert_eq!(out.files.len(), 5);
        assert!(out.hard_failures.is_empty(), "{:?}", out.hard_failures);
        let names: Vec<_> = out
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(
            names,
            ["modulus.csv", "reciprocality.csv", "coarea.csv", "ring.csv", "summary.txt"]
        );
        let first: Vec<String> = out
            .files
            .iter()
            .map(|p| fs::read_to_string(p).unwrap())
            .collect();
        for (name, text) in names.iter().zip(first.iter()) {
            if name.ends_with(".csv") {
                assert!(text.starts_with("surface,n,quantity,lhs,rhs,constant,pass\n"));
            }
        }
        assert!(first[4].contains("kappa_proved"));
        assert!(first[4].contains("product"));

        cfg.out_dir = dir.path().join("b");
        let out2 = run(&cfg).unwrap();
        let second: Vec<String> = out2
            .files
            .iter()
            .map(|p| fs::read_to_string(p).unwrap())
            .collect();
        assert_eq!(first, second, "same seed must reproduce byte-identical files");
    }
}
