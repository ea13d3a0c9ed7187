//! Multi-stage cluster simulation: batched failures, cooperative repair,
//! bandwidth metering and recovery audits.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::Rational;
use crate::codes::format::NodeStateFile;
use crate::codes::{build_code, BandwidthLog, Code, Scheme};
use crate::error::{Error, Result};
use crate::flowgraph::adversary::k_subsets;
use crate::flowgraph::graph::distinct_in_range;
use crate::flowgraph::ProfileKind;
use crate::gf::{Elem, Field};
use crate::params::SystemParams;
use crate::tradeoff::{mscr_point, msr_gamma};

/// Audit everything when there are at most this many `k`-subsets.
pub const EXHAUSTIVE_LIMIT: usize = 500;
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: SystemParams,
    pub scheme: Scheme,
    #[serde(default = "default_q")]
    pub q: u64,
    /// GF(2^m) reduction polynomial; 0 selects the default.
    #[serde(default)]
    pub poly: u32,
    pub stages: usize,
    #[serde(default)]
    pub failures: FailureModel,
    #[serde(default)]
    pub audit: AuditPolicy,
    pub seed: u64,
    /// RLNC rank profile; the minimum-storage profile when absent.
    #[serde(default)]
    pub profile: Option<ProfileKind>,
    /// Independent random chunks stored in the cluster.
    #[serde(default = "default_chunks")]
    pub chunks: usize,
}

fn default_q() -> u64 {
    256
}

fn default_chunks() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureModel {
    /// A uniformly random `r`-subset per stage.
    #[default]
    Uniform,
    Scripted(Vec<ScriptedStage>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedStage {
    pub failed: Vec<usize>,
    /// Per-newcomer helper sets; random (or all survivors for MBCR) if absent.
    #[serde(default)]
    pub helpers: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditPolicy {
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`] subsets, else [`DEFAULT_SAMPLES`] samples.
    #[default]
    Auto,
    Exhaustive,
    Sampled(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditResult {
    pub subsets_checked: usize,
    pub exhaustive: bool,
    pub failed_subsets: Vec<Vec<usize>>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub failed: Vec<usize>,
    pub helpers: Vec<Vec<usize>>,
    /// Traffic for one chunk.
    pub bandwidth: BandwidthLog,
    /// Traffic summed over all chunks.
    pub symbols_moved: u64,
    pub per_newcomer: u64,
    pub survivors_untouched: bool,
    /// Exact schemes: whether every node again holds its original symbols.
    pub exact_restore: Option<bool>,
    pub audit: AuditResult,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalized {
    pub gamma: Rational,
    pub alpha: Rational,
    pub gamma_decimal: String,
    pub alpha_decimal: String,
}

impl Normalized {
    fn new(gamma: Rational, alpha: Rational) -> Self {
        Normalized {
            gamma_decimal: gamma.to_decimal_string(6),
            alpha_decimal: alpha.to_decimal_string(6),
            gamma,
            alpha,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub params: SystemParams,
    pub scheme: Scheme,
    pub field: Field,
    pub alpha: usize,
    pub file_size: usize,
    pub initial_audit: AuditResult,
    pub stages: Vec<StageReport>,
    /// Per-chunk traffic over all stages.
    pub bandwidth: BandwidthLog,
    /// Achieved `(γ/B, α/B)`; γ is measured when any repair ran.
    pub normalized: Normalized,
    pub all_passed: bool,
}

/// The simulated cluster. Node contents live in a [`NodeStateFile`].
#[derive(Clone, Debug)]
pub struct ClusterState {
    pub config: SimConfig,
    pub stage: usize,
    pub store: NodeStateFile,
    pub bandwidth: BandwidthLog,
    source: Vec<Vec<Elem>>,
    rng: ChaCha8Rng,
}

fn source_chunks(config: &SimConfig, field: &Field, b: usize) -> Vec<Vec<Elem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    (0..config.chunks).map(|_| (0..b).map(|_| field.random(&mut rng)).collect()).collect()
}

fn validate_config(c: &SimConfig) -> Result<()> {
    let p = &c.params;
    if c.chunks == 0 {
        return Err(Error::InvalidParams("at least one chunk is required".into()));
    }
    if let FailureModel::Scripted(script) = &c.failures {
        if script.len() < c.stages {
            return Err(Error::InvalidSchedule(format!("{} scripted stages for {} stages", script.len(), c.stages)));
        }
        for (s, st) in script.iter().enumerate() {
            if st.failed.len() > p.r {
                return Err(Error::InvalidSchedule(format!(
                    "stage {}: {} failures exceed the repair threshold r = {}",
                    s + 1,
                    st.failed.len(),
                    p.r
                )));
            }
            if st.failed.len() < p.r || !distinct_in_range(&st.failed, p.n) {
                return Err(Error::InvalidSchedule(format!("stage {}: need r = {} distinct failed ids", s + 1, p.r)));
            }
            if let Some(h) = &st.helpers {
                crate::flowgraph::StageRepair { failed: st.failed.clone(), helpers: h.clone() }.validate(p)?;
            }
        }
    }
    Ok(())
}

impl ClusterState {
    pub fn new(config: SimConfig) -> Result<Self> {
        validate_config(&config)?;
        let field = Field::from_parts(config.q, config.poly)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let code = build_code(config.scheme, config.params, field.clone(), config.profile, rng.gen())?;
        let b = code.file_size();
        let source = source_chunks(&config, &field, b);
        let chunks = source.iter().map(|c| code.encode(c)).collect::<Result<Vec<_>>>()?;
        let n = config.params.n;
        let store = NodeStateFile { code, payload_len: (b * config.chunks) as u64, present: vec![true; n], chunks };
        Ok(ClusterState { config, stage: 0, store, bandwidth: BandwidthLog::default(), source, rng })
    }

    pub fn code(&self) -> &Code {
        &self.store.code
    }

    pub fn params(&self) -> &SystemParams {
        &self.config.params
    }

    fn draw_stage(&mut self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let p = self.config.params;
        let scripted = match &self.config.failures {
            FailureModel::Scripted(s) => Some(s[self.stage].clone()),
            FailureModel::Uniform => None,
        };
        let failed = match &scripted {
            Some(s) => s.failed.clone(),
            None => {
                let mut f = sample(&mut self.rng, p.n, p.r).into_vec();
                f.sort_unstable();
                f
            }
        };
        let survivors: Vec<usize> = (0..p.n).filter(|x| !failed.contains(x)).collect();
        let helpers = match scripted.and_then(|s| s.helpers) {
            Some(h) => h,
            None if self.config.scheme == Scheme::Mbcr => vec![survivors.clone(); p.r],
            None => (0..p.r)
                .map(|_| {
                    let mut h: Vec<usize> =
                        sample(&mut self.rng, survivors.len(), p.d).into_iter().map(|i| survivors[i]).collect();
                    h.sort_unstable();
                    h
                })
                .collect(),
        };
        (failed, helpers)
    }

    /// Fails `r` nodes, repairs them, and audits.
    pub fn step(&mut self) -> Result<StageReport> {
        if self.stage >= self.config.stages {
            return Err(Error::Precondition(format!("all {} stages already ran", self.config.stages)));
        }
        let (failed, helpers) = self.draw_stage();
        let before = self.store.chunks.clone();
        let log = repair_store(&mut self.store, &failed, &helpers, self.rng.gen())?;
        self.stage += 1;
        self.bandwidth += log;

        let n = self.config.params.n;
        let survivors_untouched = (0..n)
            .filter(|i| !failed.contains(i))
            .all(|i| before.iter().zip(&self.store.chunks).all(|(b, a)| b[i] == a[i]));
        let exact_restore = match self.code() {
            Code::Rlnc(_) => None,
            code => Some(
                self.source
                    .iter()
                    .zip(&self.store.chunks)
                    .all(|(src, nodes)| code.encode(src).is_ok_and(|orig| &orig == nodes)),
            ),
        };
        let audit = self.audit();
        Ok(StageReport {
            stage: self.stage,
            failed,
            helpers,
            bandwidth: log,
            symbols_moved: log.total() * self.config.chunks as u64,
            per_newcomer: log.per_newcomer().unwrap_or(0),
            survivors_untouched,
            exact_restore,
            audit,
        })
    }

    /// Audits the current stage according to the configured policy.
    pub fn audit(&self) -> AuditResult {
        let p = self.config.params;
        let total = binomial(p.n, p.k);
        let exhaustive = match self.config.audit {
            AuditPolicy::Exhaustive => true,
            AuditPolicy::Auto => total <= EXHAUSTIVE_LIMIT as u128,
            AuditPolicy::Sampled(_) => false,
        };
        let subsets: Vec<Vec<usize>> = if exhaustive {
            k_subsets(p.n, p.k)
        } else {
            let m = match self.config.audit {
                AuditPolicy::Sampled(m) => m,
                _ => DEFAULT_SAMPLES,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (self.stage as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            rng.set_stream(2);
            (0..m)
                .map(|_| {
                    let mut s = sample(&mut rng, p.n, p.k).into_vec();
                    s.sort_unstable();
                    s
                })
                .collect()
        };
        let failed_subsets: Vec<Vec<usize>> = subsets.iter().filter(|s| !audit_recovery(self, s)).cloned().collect();
        AuditResult { subsets_checked: subsets.len(), exhaustive, passed: failed_subsets.is_empty(), failed_subsets }
    }

    /// Writes `nodes.crgc` and `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.store.write(&dir.join(NODES_FILE))?;
        let manifest = Manifest {
            version: 1,
            config: self.config.clone(),
            stage: self.stage,
            alive: self.store.present.clone(),
            rng: RngState {
                seed: self.config.seed,
                stream: self.rng.get_stream(),
                word_pos: self.rng.get_word_pos().to_string(),
            },
            bandwidth: self.bandwidth,
        };
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        if manifest.version != 1 {
            return Err(Error::Format(format!("unsupported manifest version {}", manifest.version)));
        }
        let config = manifest.config;
        validate_config(&config)?;
        let store = NodeStateFile::read(&dir.join(NODES_FILE))?;
        let code = &store.code;
        if code.scheme() != config.scheme || code.params() != &config.params || code.field().order() != config.q {
            return Err(Error::Format("node file does not match the manifest".into()));
        }
        if let Code::Rlnc(s) = code {
            if s.stage != manifest.stage {
                return Err(Error::Format("node file stage differs from manifest".into()));
            }
        }
        if store.present != manifest.alive || store.chunks.len() != config.chunks {
            return Err(Error::Format("node file liveness or chunk count differs from manifest".into()));
        }
        if manifest.rng.seed != config.seed {
            return Err(Error::Format("manifest seed mismatch".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(manifest.rng.stream);
        rng.set_word_pos(manifest.rng.word_pos.parse().map_err(|_| Error::Format("bad word_pos".into()))?);
        let source = source_chunks(&config, code.field(), code.file_size());
        Ok(ClusterState { stage: manifest.stage, store, bandwidth: manifest.bandwidth, source, rng, config })
    }

    /// Runs the remaining stages.
    pub fn run_to_end(&mut self) -> Result<Vec<StageReport>> {
        let mut out = Vec::new();
        while self.stage < self.config.stages {
            out.push(self.step()?);
        }
        Ok(out)
    }

    fn report(&self, initial_audit: AuditResult, stages: Vec<StageReport>) -> SimReport {
        let code = self.code();
        let b = code.file_size() as i64;
        let gamma = self.bandwidth.per_newcomer().unwrap_or(code.gamma() as u64) as i64;
        let all_passed = initial_audit.passed
            && stages.iter().all(|s| s.audit.passed && s.survivors_untouched && s.exact_restore != Some(false));
        SimReport {
            params: self.config.params,
            scheme: self.config.scheme,
            field: code.field().clone(),
            alpha: code.alpha(),
            file_size: code.file_size(),
            initial_audit,
            stages,
            bandwidth: self.bandwidth,
            normalized: Normalized::new(Rational::frac(gamma, b), Rational::frac(code.alpha() as i64, b)),
            all_passed,
        }
    }
}

pub const NODES_FILE: &str = "nodes.crgc";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    config: SimConfig,
    stage: usize,
    alive: Vec<bool>,
    rng: RngState,
    bandwidth: BandwidthLog,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RngState {
    seed: u64,
    stream: u64,
    /// Decimal `u128`.
    word_pos: String,
}

/// Rebuilds `failed` in every chunk of `store` from `helpers`; nodes not
/// marked present never serve as helpers. RLNC stores advance one stage with
/// local coefficients drawn from `seed`. Returns the traffic of one chunk.
pub fn repair_store(
    store: &mut NodeStateFile,
    failed: &[usize],
    helpers: &[Vec<usize>],
    seed: u64,
) -> Result<BandwidthLog> {
    let p = *store.code.params();
    crate::flowgraph::StageRepair { failed: failed.to_vec(), helpers: helpers.to_vec() }.validate(&p)?;
    if let Some(h) = helpers.iter().flatten().find(|&&h| !store.present[h]) {
        return Err(Error::InvalidSchedule(format!("helper {h} is not present")));
    }
    let mut log = BandwidthLog::default();
    let mut transfer = None;
    let mut next_code = None;
    match &store.code {
        Code::Rlnc(st) => {
            let (next, t, l) = st.repair(failed, helpers, seed)?;
            log = l;
            next_code = Some(Code::Rlnc(next));
            transfer = Some(t);
        }
        Code::Mbcr(c) => {
            if helpers.iter().any(|h| h.len() != c.params.d) {
                return Err(Error::InvalidSchedule("MBCR repair uses all survivors as helpers".into()));
            }
        }
        Code::Mscr(_) => {}
    }
    let mut rebuilt = Vec::with_capacity(store.chunks.len());
    for nodes in &store.chunks {
        let contents: Vec<Option<Vec<Elem>>> = nodes
            .iter()
            .enumerate()
            .map(|(i, c)| (store.present[i] && !failed.contains(&i)).then(|| c.clone()))
            .collect();
        let new = match (&store.code, &transfer) {
            (Code::Mscr(c), _) => {
                let (new, l) = c.repair(&contents, failed, helpers, None)?;
                log = l;
                new
            }
            (Code::Mbcr(c), _) => {
                let (new, l) = c.repair(&contents, failed)?;
                log = l;
                new
            }
            (Code::Rlnc(_), Some(t)) => t.apply(&contents)?,
            (Code::Rlnc(_), None) => unreachable!("transfer drawn above"),
        };
        rebuilt.push(new);
    }
    for (nodes, new) in store.chunks.iter_mut().zip(rebuilt) {
        for (id, c) in new {
            nodes[id] = c;
        }
    }
    if let Some(c) = next_code {
        store.code = c;
    }
    for &i in failed {
        store.present[i] = true;
    }
    Ok(log)
}

/// Encodes, then runs every configured stage.
pub fn run(config: SimConfig) -> Result<SimReport> {
    run_state(&mut ClusterState::new(config)?)
}

/// Audits the current state, then runs its remaining stages.
pub fn run_state(state: &mut ClusterState) -> Result<SimReport> {
    let initial = state.audit();
    let stages = state.run_to_end()?;
    Ok(state.report(initial, stages))
}

/// Whether nodes `subset` (all alive) decode every chunk to the source.
pub fn audit_recovery(state: &ClusterState, subset: &[usize]) -> bool {
    if subset.iter().any(|&i| i >= state.store.present.len() || !state.store.present[i]) {
        return false;
    }
    state.source.iter().zip(&state.store.chunks).all(|(src, nodes)| {
        let sel: Vec<(usize, &[Elem])> = subset.iter().map(|&i| (i, nodes[i].as_slice())).collect();
        state.code().decode(&sel).is_ok_and(|dec| &dec == src)
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// Normalized repair bandwidth when `r` of `n` nodes are lost and rebuilt:
/// individually with `d = n − r`, one after another with `d = n − r, …, n − 1`,
/// and cooperatively with `d = n − r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub individual: Rational,
    pub one_by_one: Rational,
    pub cooperative: Rational,
}

pub fn compare_repair_modes(n: usize, k: usize, r: usize) -> Result<ModeComparison> {
    let d = n.checked_sub(r).filter(|&d| d >= k && r >= 1).ok_or_else(|| {
        Error::InvalidParams(format!("need n - r >= k with r >= 1, got n = {n}, k = {k}, r = {r}"))
    })?;
    let individual = msr_gamma(d, k);
    let sum: Rational = (d..d + r).map(|dd| msr_gamma(dd, k)).sum();
    let one_by_one = sum / Rational::from(r);
    let cooperative = mscr_point(&SystemParams::new(n, d, k, r)?).gamma_norm;
    Ok(ModeComparison { n, k, r, individual, one_by_one, cooperative })
}
