use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use coopregen::codes::format::NodeStateFile;
use coopregen::codes::{build_code, Code, Scheme};
use coopregen::cutbound::lp_min_gamma;
use coopregen::flowgraph::{profile, verify_bound, ProfileKind};
use coopregen::gf::Field;
use coopregen::storagesim::{
    compare_repair_modes, repair_store, run_state, AuditPolicy, ClusterState, FailureModel, SimConfig,
};
use coopregen::tradeoff::build_curve;
use coopregen::{Error, Rational, RepairBudget, SystemParams};

#[derive(Parser)]
#[command(name = "coopregen", version, about = "Cooperative regenerating codes: tradeoff, bounds and repair")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone, Copy)]
struct ParamArgs {
    /// Cluster size [default: d + r]
    #[arg(short = 'n', long)]
    n: Option<usize>,
    /// Helpers per newcomer
    #[arg(short = 'd', long)]
    d: usize,
    /// Nodes needed to reconstruct
    #[arg(short = 'k', long)]
    k: usize,
    /// Nodes repaired together
    #[arg(short = 'r', long)]
    r: usize,
}

impl ParamArgs {
    fn params(self) -> Result<SystemParams> {
        Ok(SystemParams::new(self.n.unwrap_or(self.d + self.r), self.d, self.k, self.r)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Vertices of the optimal (γ̃, α̃) tradeoff curve
    Tradeoff {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// CSV only: decimals instead of exact fractions
        #[arg(long)]
        decimal: bool,
    },
    /// Minimum normalized repair bandwidth at a given storage
    Lp {
        #[command(flatten)]
        p: ParamArgs,
        /// Normalized storage, `p/q` or a decimal
        #[arg(long)]
        alpha: String,
        /// Also report values for a file of this size
        #[arg(long)]
        file_size: Option<String>,
    },
    /// Cut-set formula against max-flow on worst-case and random graphs
    BoundVerify {
        #[command(flatten)]
        p: ParamArgs,
        /// `B,alpha,beta1,beta2` in symbols [default: minimum-storage budget]
        #[arg(long)]
        budget: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        max_stages: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Encode a file into a node-state file
    Encode {
        #[arg(long)]
        scheme: Scheme,
        #[command(flatten)]
        p: ParamArgs,
        /// Field order (2^m or prime, at least 256 for byte payloads)
        #[arg(long, default_value_t = 256)]
        q: u64,
        /// GF(2^m) reduction polynomial, 0 for the default
        #[arg(long, default_value_t = 0)]
        poly: u32,
        /// RLNC rank profile, `first:z` or `second:l` [default: second:0]
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Recover the original file from k nodes
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        /// Node ids such as `0,2,3` [default: first k present]
        #[arg(long)]
        nodes: Option<String>,
    },
    /// Rebuild failed nodes of a node-state file
    Repair {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        /// Failed ids such as `3,4` [default: nodes marked absent]
        #[arg(long)]
        failed: Option<String>,
        /// Per-newcomer helper sets such as `0,1,2;0,1,2` [default: first d survivors]
        #[arg(long)]
        helpers: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a multi-stage cluster simulation
    Simulate {
        /// JSON simulation config
        #[arg(long, required_unless_present = "resume")]
        config: Option<PathBuf>,
        /// Continue from a saved state directory
        #[arg(long, conflicts_with = "config")]
        resume: Option<PathBuf>,
        /// Save the final state into this directory
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Random linear repair over many stages, checking regularity each time
    Regularity {
        #[arg(long, default_value_t = 20)]
        stages: usize,
        #[arg(short = 'n', long, default_value_t = 5)]
        n: usize,
        #[arg(short = 'd', long, default_value_t = 3)]
        d: usize,
        #[arg(short = 'k', long, default_value_t = 2)]
        k: usize,
        #[arg(short = 'r', long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 1 << 16)]
        q: u64,
        #[arg(long, default_value = "second:0")]
        profile: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Individual vs one-by-one vs cooperative repair bandwidth
    CompareModes {
        #[arg(short = 'n', long, default_value_t = 7)]
        n: usize,
        #[arg(short = 'k', long, default_value_t = 3)]
        k: usize,
        #[arg(short = 'r', long, default_value_t = 3)]
        r: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn num(r: &Rational) -> Value {
    let exact = if r.is_integer() { r.numer().to_string() } else { r.to_string() };
    json!({ "exact": exact, "decimal": r.to_decimal_string(6) })
}

fn params_json(p: &SystemParams) -> Value {
    json!({ "n": p.n, "d": p.d, "k": p.k, "r": p.r })
}

fn emit(v: &Value) {
    out(&format!("{}\n", serde_json::to_string_pretty(v).expect("json values serialize")));
}

// a closed pipe (e.g. `| head`) is not an error worth a panic
fn out(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn parse_ids(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse().with_context(|| format!("bad node id {x:?}")))
        .collect()
}

fn parse_profile(s: &str) -> Result<ProfileKind> {
    let (kind, idx) = s.split_once(':').ok_or_else(|| anyhow!("profile must look like first:z or second:l"))?;
    let idx: usize = idx.parse().with_context(|| format!("bad profile index {idx:?}"))?;
    match kind {
        "first" => Ok(ProfileKind::FirstType(idx)),
        "second" => Ok(ProfileKind::SecondType(idx)),
        _ => bail!("unknown profile kind {kind:?} (first or second)"),
    }
}

fn parse_budget(s: &str) -> Result<RepairBudget> {
    let v: Vec<u64> = s
        .split(',')
        .map(|x| x.trim().parse().with_context(|| format!("bad budget entry {x:?}")))
        .collect::<Result<_>>()?;
    let [b, alpha, b1, b2] = v[..] else { bail!("budget needs four entries B,alpha,beta1,beta2") };
    Ok(RepairBudget::new(b, alpha, b1, b2)?)
}

fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Tradeoff { p, format, decimal } => {
            let curve = build_curve(&p.params()?);
            match format {
                Format::Csv => out(&curve.to_csv(decimal)),
                Format::Json => emit(&json!({
                    "params": params_json(&curve.params),
                    "vertices": curve.vertices.iter().map(|v| json!({
                        "kind": v.kind.to_string(),
                        "gamma": num(&v.gamma_norm),
                        "alpha": num(&v.alpha_norm),
                    })).collect::<Vec<_>>(),
                    "rays": curve.rays.iter().map(|ray| json!({
                        "origin": ray.origin.kind.to_string(),
                        "direction": ray.direction,
                    })).collect::<Vec<_>>(),
                })),
            }
            Ok(true)
        }
        Command::Lp { p, alpha, file_size } => {
            let params = p.params()?;
            let alpha = Rational::parse(&alpha)?;
            let sol = lp_min_gamma(&params, &alpha)?;
            let mut out = json!({
                "params": params_json(&params),
                "alpha": num(&sol.alpha),
                "beta1": num(&sol.beta1),
                "beta2": num(&sol.beta2),
                "gamma": num(&sol.gamma),
                "tight": sol.tight.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            });
            if let Some(b) = file_size {
                let b = Rational::parse(&b)?;
                if !b.is_positive() {
                    bail!("file size must be positive");
                }
                let [a, b1, b2, g] = sol.scaled(&b);
                out["scaled"] = json!({
                    "file_size": num(&b), "alpha": num(&a), "beta1": num(&b1), "beta2": num(&b2), "gamma": num(&g),
                });
            }
            emit(&out);
            Ok(true)
        }
        Command::BoundVerify { p, budget, trials, max_stages, seed } => {
            let params = p.params()?;
            let budget = match budget {
                Some(s) => parse_budget(&s)?,
                None => profile(ProfileKind::SecondType(0), &params)?.budget,
            };
            let seed = seed_or_random(seed);
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let report = verify_bound(&params, &budget, trials, max_stages, &mut rng)?;
            let ok = report.consistent();
            emit(&json!({
                "params": params_json(&params),
                "budget": budget,
                "seed": seed,
                "report": report,
                "consistent": ok,
            }));
            Ok(ok)
        }
        Command::Encode { scheme, p, q, poly, profile, seed, input, output } => {
            let params = p.params()?;
            let field = Field::from_parts(q, poly)?;
            let kind = profile.as_deref().map(parse_profile).transpose()?;
            let seed = if scheme == Scheme::Rlnc { seed_or_random(seed) } else { seed.unwrap_or(0) };
            let code = build_code(scheme, params, field, kind, seed)?;
            let data = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let state = NodeStateFile::encode(code, &data)?;
            state.write(&output)?;
            emit(&state_summary(&state));
            Ok(true)
        }
        Command::Decode { input, output, nodes } => {
            let state = NodeStateFile::read(&input)?;
            let k = state.code.params().k;
            let ids = match nodes {
                Some(s) => parse_ids(&s)?,
                None => (0..state.present.len()).filter(|&i| state.present[i]).take(k).collect(),
            };
            if ids.len() != k {
                bail!("decoding needs k = {k} nodes, got {}", ids.len());
            }
            match state.decode(&ids) {
                Ok(data) => {
                    std::fs::write(&output, &data).with_context(|| format!("writing {}", output.display()))?;
                    emit(&json!({ "nodes": ids, "bytes": data.len() }));
                    Ok(true)
                }
                Err(Error::Singular) => {
                    eprintln!("nodes {ids:?} do not determine the file");
                    Ok(false)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Repair { input, output, failed, helpers, seed } => {
            let mut state = NodeStateFile::read(&input)?;
            let p = *state.code.params();
            let failed = match failed {
                Some(s) => parse_ids(&s)?,
                None => (0..p.n).filter(|&i| !state.present[i]).collect(),
            };
            if failed.is_empty() {
                bail!("nothing to repair: no --failed ids and every node is present");
            }
            let helpers: Vec<Vec<usize>> = match helpers {
                Some(s) => s.split(';').map(parse_ids).collect::<Result<_>>()?,
                None => {
                    let survivors: Vec<usize> =
                        (0..p.n).filter(|i| state.present[*i] && !failed.contains(i)).take(p.d).collect();
                    vec![survivors; failed.len()]
                }
            };
            let seed = if matches!(state.code, Code::Rlnc(_)) { seed_or_random(seed) } else { 0 };
            let log = repair_store(&mut state, &failed, &helpers, seed)?;
            state.write(&output)?;
            emit(&json!({
                "failed": failed,
                "helpers": helpers,
                "bandwidth": log,
                "per_newcomer": log.per_newcomer(),
                "stage": match &state.code { Code::Rlnc(s) => Some(s.stage), _ => None },
            }));
            Ok(true)
        }
        Command::Simulate { config, resume, save } => {
            let mut state = match (config, resume) {
                (_, Some(dir)) => ClusterState::load(&dir)?,
                (Some(path), None) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let cfg: SimConfig = serde_json::from_str(&text).context("parsing simulation config")?;
                    ClusterState::new(cfg)?
                }
                (None, None) => bail!("--config or --resume is required"),
            };
            let report = run_state(&mut state)?;
            if let Some(dir) = save {
                state.save(&dir)?;
            }
            emit(&serde_json::to_value(&report)?);
            Ok(report.all_passed)
        }
        Command::Regularity { stages, n, d, k, r, q, profile, seed } => {
            let params = SystemParams::new(n, d, k, r)?;
            let kind = parse_profile(&profile)?;
            let seed = seed_or_random(seed);
            let cfg = SimConfig {
                params,
                scheme: Scheme::Rlnc,
                q,
                poly: 0,
                stages,
                failures: FailureModel::Uniform,
                audit: AuditPolicy::Auto,
                seed,
                profile: Some(kind),
                chunks: 1,
            };
            let mut state = ClusterState::new(cfg)?;
            let regular = |s: &ClusterState| matches!(s.code(), Code::Rlnc(st) if st.regularity_check());
            let demands = match state.code() {
                Code::Rlnc(st) => st.demand_count(),
                _ => unreachable!("rlnc scheme"),
            };
            let initial = state.audit();
            let mut rows = vec![json!({
                "stage": 0, "regular": regular(&state), "decodes_ok": initial.passed,
                "subsets_checked": initial.subsets_checked,
            })];
            let mut ok = regular(&state) && initial.passed;
            while state.stage < stages {
                let rep = state.step()?;
                let reg = regular(&state);
                ok &= reg && rep.audit.passed && rep.survivors_untouched;
                rows.push(json!({
                    "stage": rep.stage, "failed": rep.failed, "helpers": rep.helpers, "regular": reg,
                    "decodes_ok": rep.audit.passed, "subsets_checked": rep.audit.subsets_checked,
                }));
            }
            emit(&json!({
                "params": params_json(&params),
                "field": state.code().field().to_string(),
                "profile": profile,
                "seed": seed,
                "demands_checked": demands,
                "stages": rows,
                "all_passed": ok,
            }));
            Ok(ok)
        }
        Command::CompareModes { n, k, r } => {
            let m = compare_repair_modes(n, k, r)?;
            emit(&json!({
                "n": m.n, "k": m.k, "r": m.r,
                "individual": num(&m.individual),
                "one_by_one": num(&m.one_by_one),
                "cooperative": num(&m.cooperative),
            }));
            Ok(true)
        }
    }
}

fn state_summary(s: &NodeStateFile) -> Value {
    let c = &s.code;
    json!({
        "scheme": c.scheme(),
        "params": params_json(c.params()),
        "field": c.field().to_string(),
        "alpha": c.alpha(),
        "file_size": c.file_size(),
        "chunks": s.chunks.len(),
        "payload_bytes": s.payload_len,
    })
}
