use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use multdim::constraints::spec_file::SpecFile;
use multdim::constraints::{format_word, parse_word};
use multdim::deterministic::{
    all_equal_dimension, classify, omega_from_f, rigidity_dimension, DeterminismType, TernaryDigitFunction,
};
use multdim::hausdorff::{hausdorff_bounds, solve_t_table, solve_t_table_with_cap, BoundaryMode};
use multdim::measures::{entropy_limit, entropy_series, measure_from_t, sample_prefix, uniform_measure, TreeMeasure};
use multdim::minkowski::{minkowski_bounds, DimensionInterval};
use multdim::{
    compile, count_prefixes, count_prefixes_triangle, is_admissible_word, ExtensionMode, LevelProfile, OmegaSpec,
    PrimeBasis, SemigroupTable,
};

use crate::report::{round_sig, Parameters, Round, RunReport};
use crate::{Command, CountMethod, MeasureArg, ModeArg, SpecArg};

const LOOKAHEAD_WARNING: &str =
    "spec needs lookahead extension checks: counts are upper estimates and only upper bounds are rigorous";

pub struct Output {
    pub report: RunReport,
    pub csv: String,
    /// Set when the run completed but its check did not pass.
    pub failure: Option<String>,
}

struct Loaded {
    spec_file: SpecFile,
    basis: PrimeBasis,
    family: multdim::ConstraintFamily,
    digest: String,
}

fn load(arg: &SpecArg) -> Result<Loaded> {
    let path: &Path = &arg.spec;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec_file = SpecFile::from_json(&text)?;
    let (basis, family) = spec_file.resolve()?;
    let digest = hex::encode(Sha256::digest(spec_file.to_json().as_bytes()));
    Ok(Loaded { spec_file, basis, family, digest })
}

impl Loaded {
    fn compile(&self, depth: usize) -> Result<OmegaSpec> {
        Ok(compile(&self.family, &self.basis, depth)?)
    }
}

fn warnings_for(spec: &OmegaSpec) -> Vec<String> {
    if spec.mode() == ExtensionMode::Lookahead {
        vec![LOOKAHEAD_WARNING.to_string()]
    } else {
        Vec::new()
    }
}

fn report(argv: Vec<String>, digest: Option<String>, parameters: Parameters, results: impl Serialize) -> RunReport {
    RunReport {
        command: argv,
        spec_digest: digest,
        parameters,
        results: serde_json::to_value(results).expect("results serialize"),
        warnings: Vec::new(),
        wall_time_s: None,
    }
}

fn count_value(c: &multdim::BigUint) -> Value {
    match u64::try_from(c) {
        Ok(v) => json!(v),
        Err(_) => json!(c.to_string()),
    }
}

fn counts_csv(counts: &[multdim::BigUint]) -> String {
    let mut csv = String::from("k,A_k\n");
    for (k, c) in counts.iter().enumerate() {
        writeln!(csv, "{},{}", k + 1, c).unwrap();
    }
    csv
}

fn method_name(m: CountMethod) -> &'static str {
    match m {
        CountMethod::Auto => "auto",
        CountMethod::Dfs => "dfs",
        CountMethod::Triangle => "triangle",
    }
}

fn triangle_supported(spec: &OmegaSpec) -> bool {
    spec.basis().len() == 2 && spec.alphabet() == 2 && spec.mode() == ExtensionMode::Local
}

/// Counts by the requested method; `auto` picks the triangle DP when it applies.
fn profile(spec: &OmegaSpec, depth: usize, method: CountMethod) -> Result<(LevelProfile, &'static str)> {
    let use_triangle = match method {
        CountMethod::Auto => triangle_supported(spec),
        CountMethod::Dfs => false,
        CountMethod::Triangle => true,
    };
    if use_triangle {
        let counts = count_prefixes_triangle(spec, depth)?;
        Ok((LevelProfile::from_counts(spec.alphabet(), counts, vec![]), "triangle"))
    } else {
        Ok((count_prefixes(spec, depth)?, "dfs"))
    }
}

#[derive(Serialize)]
struct IntervalOut {
    lower: f64,
    upper: f64,
    width: f64,
    terms_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_ratio_bounds: Option<(f64, f64)>,
    certified: bool,
}

impl From<&DimensionInterval> for IntervalOut {
    fn from(iv: &DimensionInterval) -> Self {
        let lower = round_sig(iv.lower, Round::Down);
        let upper = round_sig(iv.upper, Round::Up);
        Self {
            lower,
            upper,
            width: round_sig(upper - lower, Round::Up),
            terms_used: iv.terms_used,
            tail_ratio_bounds: iv.tail_ratio_bounds,
            certified: iv.certified,
        }
    }
}

fn interval_csv(iv: &IntervalOut) -> String {
    format!("lower,upper,terms_used,certified\n{},{},{},{}\n", iv.lower, iv.upper, iv.terms_used, iv.certified)
}

fn boundary(mode: ModeArg) -> BoundaryMode {
    match mode {
        ModeArg::Lower => BoundaryMode::Lower,
        ModeArg::Upper => BoundaryMode::Upper,
    }
}

fn mode_name(mode: ModeArg) -> &'static str {
    match mode {
        ModeArg::Lower => "lower",
        ModeArg::Upper => "upper",
    }
}

fn measure_name(m: MeasureArg) -> &'static str {
    match m {
        MeasureArg::Uniform => "uniform",
        MeasureArg::Optimal => "optimal",
    }
}

fn build_measure(spec: &OmegaSpec, depth: usize, measure: MeasureArg, mode: ModeArg) -> Result<TreeMeasure> {
    Ok(match measure {
        MeasureArg::Uniform => uniform_measure(spec, depth)?,
        MeasureArg::Optimal => measure_from_t(spec, &solve_t_table(spec, depth, boundary(mode))?)?,
    })
}

pub fn run(command: Command, argv: Vec<String>) -> Result<Output> {
    match command {
        Command::Semigroup { primes, count, bound } => semigroup(argv, primes, count, bound),
        Command::Count { spec, depth, method } => count(argv, &spec, depth, method),
        Command::Minkowski { spec, depth, r, ratio_lo, ratio_hi, method } => {
            minkowski(argv, &spec, depth, r, ratio_lo, ratio_hi, method)
        }
        Command::Hausdorff { spec, depth, table, node_cap } => hausdorff(argv, &spec, depth, table, node_cap),
        Command::Variational { spec, depth, measure, mode } => variational(argv, &spec, depth, measure, mode),
        Command::Sample { spec, length, seed, depth, measure, mode, verify } => {
            sample(argv, &spec, length, seed, depth, measure, mode, verify)
        }
        Command::Verify { spec, word, word_file } => verify(argv, &spec, word, word_file),
        Command::Classify { truth_table, p, q } => classify_cmd(argv, &truth_table, p, q),
    }
}

fn semigroup(argv: Vec<String>, primes: Vec<u64>, count: Option<usize>, bound: Option<u64>) -> Result<Output> {
    let basis = PrimeBasis::new(primes.clone())?;
    let table = match (count, bound) {
        (Some(n), _) => SemigroupTable::with_count(&basis, n)?,
        (None, Some(b)) => SemigroupTable::build(&basis, b)?,
        (None, None) => bail!("one of --count or --bound is required"),
    };
    let elements = match count {
        Some(n) => &table.elements()[..n.min(table.len())],
        None => table.elements(),
    };
    let mut csv = String::from("k,l_k\n");
    for (k, l) in elements.iter().enumerate() {
        writeln!(csv, "{},{}", k + 1, l).unwrap();
    }
    let params = Parameters { primes: Some(primes), count, bound, ..Default::default() };
    let results = json!({ "gamma": round_sig(basis.gamma(), Round::Nearest), "elements": elements });
    Ok(Output { report: report(argv, None, params, results), csv, failure: None })
}

fn count(argv: Vec<String>, arg: &SpecArg, depth: usize, method: CountMethod) -> Result<Output> {
    let loaded = load(arg)?;
    let mut params = Parameters { depth: Some(depth), method: Some(method_name(method).into()), ..Default::default() };
    if depth == 0 {
        let results = json!({ "counts": Vec::<u64>::new(), "exact": true });
        let report = report(argv, Some(loaded.digest), params, results);
        return Ok(Output { report, csv: counts_csv(&[]), failure: None });
    }
    let spec = loaded.compile(depth)?;
    let (profile, used) = profile(&spec, depth, method)?;
    params.method = Some(used.into());
    let mut results = json!({
        "counts": profile.counts().iter().map(count_value).collect::<Vec<_>>(),
        "exact": profile.is_exact(),
    });
    if used == "dfs" {
        results["symmetric_through"] = json!(profile.symmetric_through());
    }
    let mut report = report(argv, Some(loaded.digest), params, results);
    report.warnings = warnings_for(&spec);
    Ok(Output { report, csv: counts_csv(profile.counts()), failure: None })
}

fn minkowski(
    argv: Vec<String>,
    arg: &SpecArg,
    depth: usize,
    r: Option<usize>,
    ratio_lo: Option<f64>,
    ratio_hi: Option<f64>,
    method: CountMethod,
) -> Result<Output> {
    if depth < 2 {
        bail!("--depth must be at least 2");
    }
    let r = r.unwrap_or(depth - 1);
    let loaded = load(arg)?;
    let spec = loaded.compile(depth)?;
    let (profile, used) = profile(&spec, depth, method)?;
    let iv = minkowski_bounds(&profile, spec.table(), r, ratio_lo, ratio_hi)?;
    let out = IntervalOut::from(&iv);
    let params = Parameters {
        depth: Some(depth),
        r: Some(r),
        method: Some(used.into()),
        ratio_lo,
        ratio_hi,
        ..Default::default()
    };
    let csv = interval_csv(&out);
    let mut report = report(argv, Some(loaded.digest), params, out);
    report.warnings = warnings_for(&spec);
    Ok(Output { report, csv, failure: None })
}

fn hausdorff(argv: Vec<String>, arg: &SpecArg, depth: usize, table: bool, node_cap: usize) -> Result<Output> {
    let loaded = load(arg)?;
    let spec = loaded.compile(depth)?;
    let iv = if table {
        let lower = solve_t_table_with_cap(&spec, depth, BoundaryMode::Lower, node_cap)?.log_root();
        let upper = solve_t_table_with_cap(&spec, depth, BoundaryMode::Upper, node_cap)?.log_root();
        let certified = spec.mode() == ExtensionMode::Local;
        DimensionInterval { lower, upper, terms_used: depth, tail_ratio_bounds: None, certified }
    } else {
        hausdorff_bounds(&spec, depth)?
    };
    let out = IntervalOut::from(&iv);
    let params = Parameters {
        depth: Some(depth),
        method: Some(if table { "table" } else { "streaming" }.into()),
        ..Default::default()
    };
    let csv = interval_csv(&out);
    let mut report = report(argv, Some(loaded.digest), params, out);
    report.warnings = warnings_for(&spec);
    Ok(Output { report, csv, failure: None })
}

#[derive(Serialize)]
struct VariationalOut {
    /// Truncated series through `r = depth - 1`.
    series: f64,
    r: usize,
    /// Full series; present for frozen-tail measures.
    #[serde(skip_serializing_if = "Option::is_none")]
    limit: Option<f64>,
}

fn variational(argv: Vec<String>, arg: &SpecArg, depth: usize, measure: MeasureArg, mode: ModeArg) -> Result<Output> {
    if depth == 0 {
        bail!("--depth must be at least 1");
    }
    let loaded = load(arg)?;
    let spec = loaded.compile(depth)?;
    let mu = build_measure(&spec, depth, measure, mode)?;
    let r = depth - 1;
    let series = entropy_series(&mu, spec.table(), r)?;
    let limit = match mu.tail_rule() {
        multdim::measures::TailRule::Frozen => Some(entropy_limit(&mu, spec.table())?),
        multdim::measures::TailRule::Uniform => None,
    };
    let out = VariationalOut {
        series: round_sig(series, Round::Nearest),
        r,
        limit: limit.map(|v| round_sig(v, Round::Nearest)),
    };
    let mut csv = String::from("r,series,limit\n");
    writeln!(csv, "{},{},{}", out.r, out.series, out.limit.map(|v| v.to_string()).unwrap_or_default()).unwrap();
    let mut params =
        Parameters { depth: Some(depth), measure: Some(measure_name(measure).into()), ..Default::default() };
    if measure == MeasureArg::Optimal {
        params.mode = Some(mode_name(mode).into());
    }
    let mut report = report(argv, Some(loaded.digest), params, out);
    report.warnings = warnings_for(&spec);
    Ok(Output { report, csv, failure: None })
}

#[allow(clippy::too_many_arguments)]
fn sample(
    argv: Vec<String>,
    arg: &SpecArg,
    length: u64,
    seed: u64,
    depth: usize,
    measure: MeasureArg,
    mode: ModeArg,
    verify: bool,
) -> Result<Output> {
    if depth == 0 {
        bail!("--depth must be at least 1");
    }
    let loaded = load(arg)?;
    let ranks = SemigroupTable::build(&loaded.basis, length.max(1))?.len();
    let spec = loaded.compile((ranks + 1).max(depth))?;
    let mu = build_measure(&spec, depth, measure, mode)?;
    let word = sample_prefix(&mu, length, seed)?;
    let text = format_word(&word);
    let admissible = if verify { Some(is_admissible_word(&spec, &word)?) } else { None };
    let mut results = json!({ "word": text });
    if let Some(ok) = admissible {
        results["admissible"] = json!(ok);
    }
    let mut params = Parameters {
        depth: Some(depth),
        length: Some(length),
        seed: Some(seed),
        measure: Some(measure_name(measure).into()),
        ..Default::default()
    };
    if measure == MeasureArg::Optimal {
        params.mode = Some(mode_name(mode).into());
    }
    let csv = format!("{text}\n");
    let failure = (admissible == Some(false)).then(|| "sampled word is not admissible".to_string());
    let mut report = report(argv, Some(loaded.digest), params, results);
    report.warnings = warnings_for(&spec);
    Ok(Output { report, csv, failure })
}

fn verify(
    argv: Vec<String>,
    arg: &SpecArg,
    word: Option<String>,
    word_file: Option<std::path::PathBuf>,
) -> Result<Output> {
    let loaded = load(arg)?;
    let text = match (word, word_file) {
        (Some(w), _) => w,
        (None, Some(path)) => std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?,
        (None, None) => bail!("one of --word or --word-file is required"),
    };
    let word = parse_word(text.trim(), loaded.spec_file.alphabet)?;
    let n = word.len() as u64;
    let ranks = SemigroupTable::build(&loaded.basis, n.max(1))?.len();
    let spec = loaded.compile(ranks + 1)?;
    let admissible = is_admissible_word(&spec, &word)?;
    let results = json!({ "length": n, "admissible": admissible });
    let csv = format!("length,admissible\n{n},{admissible}\n");
    let failure = (!admissible).then(|| "word violates the constraints".to_string());
    let params = Parameters { length: Some(n), ..Default::default() };
    Ok(Output { report: report(argv, Some(loaded.digest), params, results), csv, failure })
}

fn classify_cmd(argv: Vec<String>, truth_table: &str, p: Option<u64>, q: Option<u64>) -> Result<Output> {
    let f = TernaryDigitFunction::from_truth_table(truth_table)?;
    let types = classify(&f);
    let names: Vec<String> = types.iter().map(|t| t.to_string()).collect();
    let mut results = json!({
        "truth_table": f.truth_table(),
        "types": names,
        "deterministic": !types.is_empty(),
    });
    let mut warnings = Vec::new();
    let mut csv_dim = String::new();
    if let (Some(p), Some(q)) = (p, q) {
        if types.contains(&DeterminismType::I) {
            let d = rigidity_dimension(p, q)?;
            results["dimension"] = json!(round_sig(d, Round::Nearest));
            csv_dim = round_sig(d, Round::Nearest).to_string();
        } else if f == TernaryDigitFunction::all_equal() {
            let d = all_equal_dimension(p, q)?;
            results["minkowski_dimension"] = json!(round_sig(d, Round::Nearest));
            csv_dim = round_sig(d, Round::Nearest).to_string();
        } else if !types.is_empty() {
            rigidity_dimension(p, q)?;
            warnings.push(format!(
                "no closed form for type {{{}}} without type i; use the count/minkowski/hausdorff pipelines",
                names.join(",")
            ));
        }
        let family = omega_from_f(p, q, &f)?;
        let basis = PrimeBasis::new(vec![p, q]).context("pipeline specs need a prime pair")?;
        results["spec"] = serde_json::to_value(SpecFile::from_parts(&basis, &family))?;
    }
    let csv = format!(
        "truth_table,types,deterministic,dimension\n{},{},{},{}\n",
        f.truth_table(),
        names.join(";"),
        !types.is_empty(),
        csv_dim
    );
    let params = Parameters { truth_table: Some(truth_table.into()), p, q, ..Default::default() };
    let mut report = report(argv, None, params, results);
    report.warnings = warnings;
    Ok(Output { report, csv, failure: None })
}
