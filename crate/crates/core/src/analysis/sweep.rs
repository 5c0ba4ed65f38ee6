//! Batch evaluation of single-target shocks.
//!
//! Every target `(d, j)` is one scenario; its relative loss at the horizon
//! is recorded for every `(c, i)` cell. Small sweeps can be held in memory
//! as a [`SweepTensor`]; full-scale sweeps are streamed to a directory of
//! chunk files with [`sweep_to_dir`] and read back with [`SweepReader`].
//!
//! # Directory layout
//!
//! * `manifest.json`: model fingerprint, horizon, registry codes, the
//!   ordered target list, chunk length and chunk format.
//! * `chunk-NNNNNN.bin` or `chunk-NNNNNN.csv`: consecutive targets of the
//!   target list. A chunk only becomes visible once complete (written to a
//!   temporary name, then renamed), so an interrupted sweep resumes from the
//!   first missing chunk.
//!
//! Cells whose RL is exactly zero are not stored.
//!
//! Binary chunks are little endian: the magic `FNSWEEP1`, `u64` cell count,
//! `u64` scenario count, then per scenario `u32` shock country, `u32` shock
//! product, `u64` stored-cell count `m`, `m` × `u32` cell index and `m` ×
//! `f64` RL. CSV chunks carry `shock_country,shock_product,country,product,rl`
//! with RL at nine significant digits.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::loss::rl_value;
use crate::engine::{Engine, Workspace};
use crate::error::{Error, Result};
use crate::format;
use crate::parallel::Parallelism;
use crate::tables::{CountryId, ProductId, Registry};

const MAGIC: &[u8; 8] = b"FNSWEEP1";
const MANIFEST: &str = "manifest.json";
const SWEEP_FORMAT_VERSION: u32 = 1;

pub type Target = (CountryId, ProductId);

/// Ordered list of single-target shocks: country-major, registry order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPlan {
    pub targets: Vec<Target>,
}

impl SweepPlan {
    /// All combinations of the given countries and products (all when
    /// `None`). Order follows the registry regardless of argument order.
    pub fn new(registry: &Registry, countries: Option<&[CountryId]>, products: Option<&[ProductId]>) -> Self {
        let keep_c = |c: CountryId| countries.map_or(true, |s| s.contains(&c));
        let keep_p = |p: ProductId| products.map_or(true, |s| s.contains(&p));
        let targets = (0..registry.n_countries())
            .map(CountryId::from)
            .filter(|&c| keep_c(c))
            .flat_map(|c| {
                (0..registry.n_products())
                    .map(ProductId::from)
                    .filter(|&p| keep_p(p))
                    .map(move |p| (c, p))
            })
            .collect();
        SweepPlan { targets }
    }

    pub fn all(registry: &Registry) -> Self {
        SweepPlan::new(registry, None, None)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Evaluates single-target scenarios against a precomputed baseline.
///
/// Every analysis that reports a single-target RL goes through
/// [`ScenarioRunner::rl_into`], so sweep cells, exposure profiles and
/// decompositions agree bit for bit.
#[derive(Debug)]
pub struct ScenarioRunner<'e> {
    engine: &'e Engine,
    baseline: Vec<f64>,
}

impl<'e> ScenarioRunner<'e> {
    pub fn new(engine: &'e Engine) -> Self {
        let mut ws = engine.workspace();
        let baseline = engine.final_amounts(&mut ws, &[], engine.horizon()).to_vec();
        ScenarioRunner { engine, baseline }
    }

    pub fn engine(&self) -> &'e Engine {
        self.engine
    }

    /// Baseline availability at the horizon.
    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    /// Shocked availability at the horizon for a single target.
    pub fn shocked_amounts<'w>(&self, ws: &'w mut Workspace, target: Target) -> &'w [f64] {
        let cell = self.engine.registry().cell(target.0, target.1);
        self.engine.final_amounts(ws, &[cell], self.engine.horizon())
    }

    /// RL of every cell for a single target.
    pub fn rl_into(&self, ws: &mut Workspace, target: Target, out: &mut [f64]) {
        let x = self.shocked_amounts(ws, target);
        for ((o, &b), &s) in out.iter_mut().zip(&self.baseline).zip(x) {
            *o = rl_value(b, s);
        }
    }

    pub fn rl(&self, ws: &mut Workspace, target: Target) -> Vec<f64> {
        let mut out = vec![0.0; self.baseline.len()];
        self.rl_into(ws, target, &mut out);
        out
    }
}

/// Dense in-memory sweep result, `targets × cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTensor {
    pub model_hash: String,
    pub horizon: usize,
    pub n_cells: usize,
    pub targets: Vec<Target>,
    pub values: Vec<f64>,
}

impl SweepTensor {
    pub fn target_index(&self, target: Target) -> Option<usize> {
        self.targets.iter().position(|&t| t == target)
    }

    /// RL of every cell for one target.
    pub fn slice(&self, target: Target) -> Option<&[f64]> {
        self.target_index(target)
            .map(|k| &self.values[k * self.n_cells..(k + 1) * self.n_cells])
    }

    pub fn get(&self, target: Target, cell: usize) -> Option<f64> {
        self.slice(target).map(|s| s[cell])
    }
}

/// Runs every scenario of `plan` and keeps the full tensor in memory.
pub fn full_sweep(engine: &Engine, plan: &SweepPlan, par: Parallelism) -> SweepTensor {
    let runner = ScenarioRunner::new(engine);
    let rows = par.map_init(&plan.targets, || engine.workspace(), |ws, &t| runner.rl(ws, t));
    SweepTensor {
        model_hash: engine.fingerprint().to_owned(),
        horizon: engine.horizon(),
        n_cells: engine.n_cells(),
        targets: plan.targets.clone(),
        values: rows.concat(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChunkFormat {
    #[default]
    Binary,
    Csv,
}

impl ChunkFormat {
    fn extension(self) -> &'static str {
        match self {
            ChunkFormat::Binary => "bin",
            ChunkFormat::Csv => "csv",
        }
    }
}

impl std::str::FromStr for ChunkFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" => Ok(ChunkFormat::Binary),
            "csv" => Ok(ChunkFormat::Csv),
            other => Err(Error::Invalid(format!(
                "chunk format must be 'binary' or 'csv', got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Targets per chunk file; `0` means one chunk per shocked country.
    pub chunk_len: usize,
    pub format: ChunkFormat,
    pub parallelism: Parallelism,
    /// Stop after writing this many new chunks (for staged runs).
    pub max_new_chunks: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            chunk_len: 0,
            format: ChunkFormat::Binary,
            parallelism: Parallelism::default(),
            max_new_chunks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub format_version: u32,
    pub model_hash: String,
    pub horizon: usize,
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub targets: Vec<Target>,
    pub chunk_len: usize,
    pub format: ChunkFormat,
}

impl SweepManifest {
    pub fn n_chunks(&self) -> usize {
        self.targets.len().div_ceil(self.chunk_len.max(1))
    }

    pub fn n_cells(&self) -> usize {
        self.countries.len() * self.products.len()
    }

    pub fn chunk_path(&self, dir: &Path, chunk: usize) -> PathBuf {
        dir.join(format!("chunk-{chunk:06}.{}", self.format.extension()))
    }

    fn chunk_targets(&self, chunk: usize) -> &[Target] {
        let start = chunk * self.chunk_len;
        let end = (start + self.chunk_len).min(self.targets.len());
        &self.targets[start..end]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model_hash: String,
    pub horizon: usize,
    pub scenarios_total: usize,
    pub scenarios_computed: usize,
    pub chunks_total: usize,
    pub chunks_skipped: usize,
    pub chunks_written: usize,
    /// RL values evaluated in this run (`scenarios_computed × cells`).
    pub cells_streamed: u64,
    pub complete: bool,
    pub seconds: f64,
    pub scenarios_per_second: f64,
}

fn json_io(path: &Path) -> impl Fn(serde_json::Error) -> Error + '_ {
    move |source| Error::Json {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs the sweep into `dir`, skipping chunks that already exist.
///
/// An existing manifest must describe exactly the same sweep (model,
/// horizon, targets, chunking and format), otherwise the directory is
/// rejected rather than mixed.
pub fn sweep_to_dir(engine: &Engine, plan: &SweepPlan, dir: &Path, opts: &SweepOptions) -> Result<SweepSummary> {
    let started = Instant::now();
    let reg = engine.registry();
    let chunk_len = if opts.chunk_len == 0 {
        let per_country = plan
            .targets
            .first()
            .map(|&(c, _)| plan.targets.iter().take_while(|t| t.0 == c).count())
            .unwrap_or(1);
        per_country.max(1)
    } else {
        opts.chunk_len
    };
    let manifest = SweepManifest {
        format_version: SWEEP_FORMAT_VERSION,
        model_hash: engine.fingerprint().to_owned(),
        horizon: engine.horizon(),
        countries: reg.countries().iter().map(|e| e.code.clone()).collect(),
        products: reg.products().iter().map(|e| e.code.clone()).collect(),
        targets: plan.targets.clone(),
        chunk_len,
        format: opts.format,
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.exists() {
        let existing = read_manifest(&manifest_path)?;
        if existing != manifest {
            return Err(Error::Invalid(format!(
                "{} holds a different sweep; use an empty directory",
                dir.display()
            )));
        }
    } else {
        let text = serde_json::to_string_pretty(&manifest).map_err(json_io(&manifest_path))?;
        write_atomic(&manifest_path, text.as_bytes())?;
    }

    let n_chunks = manifest.n_chunks();
    let mut pending: Vec<usize> = (0..n_chunks)
        .filter(|&k| !manifest.chunk_path(dir, k).exists())
        .collect();
    let skipped = n_chunks - pending.len();
    if let Some(limit) = opts.max_new_chunks {
        pending.truncate(limit);
    }
    let computed: usize = pending.iter().map(|&k| manifest.chunk_targets(k).len()).sum();

    let runner = ScenarioRunner::new(engine);
    let n_cells = engine.n_cells();
    opts.parallelism.try_for_each_init(
        &pending,
        || (engine.workspace(), vec![0.0; n_cells]),
        |(ws, rl), &chunk| {
            let targets = manifest.chunk_targets(chunk);
            let mut buf = Vec::new();
            match manifest.format {
                ChunkFormat::Binary => {
                    buf.extend_from_slice(MAGIC);
                    buf.extend_from_slice(&(n_cells as u64).to_le_bytes());
                    buf.extend_from_slice(&(targets.len() as u64).to_le_bytes());
                }
                ChunkFormat::Csv => {
                    buf.extend_from_slice(b"shock_country,shock_product,country,product,rl\n");
                }
            }
            for &target in targets {
                runner.rl_into(ws, target, rl);
                encode_scenario(&mut buf, manifest.format, reg, target, rl);
            }
            write_atomic(&manifest.chunk_path(dir, chunk), &buf)
        },
    )?;

    let seconds = started.elapsed().as_secs_f64();
    let written = pending.len();
    Ok(SweepSummary {
        model_hash: manifest.model_hash,
        horizon: manifest.horizon,
        scenarios_total: plan.len(),
        scenarios_computed: computed,
        chunks_total: n_chunks,
        chunks_skipped: skipped,
        chunks_written: written,
        cells_streamed: (computed as u64) * (n_cells as u64),
        complete: skipped + written == n_chunks,
        seconds,
        scenarios_per_second: if seconds > 0.0 { computed as f64 / seconds } else { 0.0 },
    })
}

fn encode_scenario(buf: &mut Vec<u8>, format: ChunkFormat, reg: &Registry, target: Target, rl: &[f64]) {
    match format {
        ChunkFormat::Binary => {
            buf.extend_from_slice(&target.0 .0.to_le_bytes());
            buf.extend_from_slice(&target.1 .0.to_le_bytes());
            let nnz = rl.iter().filter(|&&v| v != 0.0).count();
            buf.extend_from_slice(&(nnz as u64).to_le_bytes());
            for (cell, &v) in rl.iter().enumerate() {
                if v != 0.0 {
                    buf.extend_from_slice(&(cell as u32).to_le_bytes());
                }
            }
            for &v in rl {
                if v != 0.0 {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        ChunkFormat::Csv => {
            let (sc, sp) = (reg.country_code(target.0), reg.product_code(target.1));
            for (cell, &v) in rl.iter().enumerate() {
                if v != 0.0 {
                    let (c, i) = reg.cell_parts(cell);
                    let line = format!(
                        "{sc},{sp},{},{},{}\n",
                        reg.country_code(c),
                        reg.product_code(i),
                        format::sig9(v)
                    );
                    buf.extend_from_slice(line.as_bytes());
                }
            }
        }
    }
}

/// Writes `bytes` to a temporary sibling and renames it into place, so
/// readers never observe a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let result = (|| -> std::io::Result<()> {
        let mut f = BufWriter::new(fs::File::create(&tmp)?);
        f.write_all(bytes)?;
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn read_manifest(path: &Path) -> Result<SweepManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(json_io(path))
}

/// One decoded scenario: sparse RL cells of a single target.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSlice {
    pub target: Target,
    pub cells: Vec<u32>,
    pub values: Vec<f64>,
}

impl ScenarioSlice {
    pub fn dense(&self, n_cells: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_cells];
        for (&c, &v) in self.cells.iter().zip(&self.values) {
            out[c as usize] = v;
        }
        out
    }

    pub fn get(&self, cell: usize) -> f64 {
        match self.cells.binary_search(&(cell as u32)) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }
}

/// Read access to a sweep directory.
#[derive(Debug, Clone)]
pub struct SweepReader {
    dir: PathBuf,
    manifest: SweepManifest,
    registry_codes: (Vec<String>, Vec<String>),
}

impl SweepReader {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let manifest = read_manifest(&dir.join(MANIFEST))?;
        if manifest.format_version != SWEEP_FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported sweep format version {}",
                manifest.format_version
            )));
        }
        let registry_codes = (manifest.countries.clone(), manifest.products.clone());
        Ok(SweepReader {
            dir,
            manifest,
            registry_codes,
        })
    }

    pub fn manifest(&self) -> &SweepManifest {
        &self.manifest
    }

    pub fn is_complete(&self) -> bool {
        (0..self.manifest.n_chunks()).all(|k| self.manifest.chunk_path(&self.dir, k).exists())
    }

    /// Decodes every scenario of one chunk.
    pub fn read_chunk(&self, chunk: usize) -> Result<Vec<ScenarioSlice>> {
        let path = self.manifest.chunk_path(&self.dir, chunk);
        let mut bytes = Vec::new();
        fs::File::open(&path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(&path, e))?;
        match self.manifest.format {
            ChunkFormat::Binary => decode_binary(&path, &bytes, self.manifest.n_cells()),
            ChunkFormat::Csv => self.decode_csv(&path, &bytes, chunk),
        }
    }

    fn decode_csv(&self, path: &Path, bytes: &[u8], chunk: usize) -> Result<Vec<ScenarioSlice>> {
        let (countries, products) = &self.registry_codes;
        let np = products.len();
        let find = |list: &[String], code: &str| list.iter().position(|c| c == code);
        let mut slices: Vec<ScenarioSlice> = self
            .manifest
            .chunk_targets(chunk)
            .iter()
            .map(|&target| ScenarioSlice {
                target,
                cells: Vec::new(),
                values: Vec::new(),
            })
            .collect();
        let mut reader = csv::Reader::from_reader(bytes);
        for row in reader.records() {
            let row = row.map_err(|e| Error::schema(path, 0, e.to_string()))?;
            let bad = || Error::schema(path, row.position().map_or(0, |p| p.line()), "malformed sweep row");
            let sc = find(countries, &row[0]).ok_or_else(bad)?;
            let sp = find(products, &row[1]).ok_or_else(bad)?;
            let c = find(countries, &row[2]).ok_or_else(bad)?;
            let i = find(products, &row[3]).ok_or_else(bad)?;
            let v: f64 = row[4].parse().map_err(|_| bad())?;
            let target = (CountryId::from(sc), ProductId::from(sp));
            let slice = slices.iter_mut().find(|s| s.target == target).ok_or_else(bad)?;
            slice.cells.push((c * np + i) as u32);
            slice.values.push(v);
        }
        Ok(slices)
    }

    /// Dense RL of every cell for one target.
    pub fn slice(&self, target: Target) -> Result<Option<Vec<f64>>> {
        let Some(k) = self.manifest.targets.iter().position(|&t| t == target) else {
            return Ok(None);
        };
        let chunk = k / self.manifest.chunk_len;
        let slices = self.read_chunk(chunk)?;
        Ok(slices
            .into_iter()
            .find(|s| s.target == target)
            .map(|s| s.dense(self.manifest.n_cells())))
    }

    /// RL of one observed cell under every target, in target order.
    pub fn exposure(&self, cell: usize) -> Result<Vec<(Target, f64)>> {
        let mut out = Vec::with_capacity(self.manifest.targets.len());
        for chunk in 0..self.manifest.n_chunks() {
            for s in self.read_chunk(chunk)? {
                out.push((s.target, s.get(cell)));
            }
        }
        Ok(out)
    }
}

fn decode_binary(path: &Path, bytes: &[u8], n_cells: usize) -> Result<Vec<ScenarioSlice>> {
    let bad = |m: &str| Error::schema(path, 0, format!("corrupt sweep chunk: {m}"));
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(s)
    };
    if take(8)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let u64_at = |s: &[u8]| u64::from_le_bytes(s.try_into().expect("8 bytes"));
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
    if u64_at(take(8)?) as usize != n_cells {
        return Err(bad("cell count differs from manifest"));
    }
    let n = u64_at(take(8)?) as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let c = u32_at(take(4)?);
        let p = u32_at(take(4)?);
        let nnz = u64_at(take(8)?) as usize;
        let cells: Vec<u32> = take(4 * nnz)?.chunks_exact(4).map(u32_at).collect();
        let values: Vec<f64> = take(8 * nnz)?
            .chunks_exact(8)
            .map(|s| f64::from_le_bytes(s.try_into().expect("8 bytes")))
            .collect();
        if cells.iter().any(|&c| c as usize >= n_cells) {
            return Err(bad("cell index out of range"));
        }
        out.push(ScenarioSlice {
            target: (CountryId(c), ProductId(p)),
            cells,
            values,
        });
    }
    Ok(out)
}
