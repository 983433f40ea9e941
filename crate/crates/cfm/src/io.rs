//! Dataset, chain and signal file formats.
//!
//! * Long CSV: header `subject,channel,time_index,phase`, one row per value,
//!   zero-based indices, rows in any order.
//! * Column CSV: headerless, one row per time point, one column per channel,
//!   a single subject.
//! * `.cfm` dataset: `"CFM1"`, `u32 n`, `u32 p`, `u32 T`, then `n·p·T`
//!   little-endian `f64` in `[s][k][j]` order.
//! * Chain: `"CFMC"` binary body plus a JSON sidecar with the run settings.
//! * Raw signal CSV: headerless, one row per channel.
//!
//! Datasets read from disk get the default grid, `T` equally spaced points on
//! `[0, 1]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use cfm_core::gibbs::{ChainConfig, Draw, Hyperparams, PosteriorChain, Traces, WrapCounts};
use cfm_core::stats::wrap_phase;
use cfm_core::{BasisSpec, PhaseDataset, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CfmError, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"CFM1";
pub const CHAIN_MAGIC: &[u8; 4] = b"CFMC";
pub const CHAIN_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsvShape {
    #[default]
    Long,
    Column,
}

/// How a phase CSV is laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvLayout {
    pub shape: CsvShape,
    pub subject: String,
    pub channel: String,
    pub time: String,
    pub phase: String,
    /// Reduce values mod 2π instead of rejecting those outside `[0, 2π)`.
    pub wrap_on_load: bool,
}

impl Default for CsvLayout {
    fn default() -> Self {
        Self {
            shape: CsvShape::Long,
            subject: "subject".into(),
            channel: "channel".into(),
            time: "time_index".into(),
            phase: "phase".into(),
            wrap_on_load: false,
        }
    }
}

impl CsvLayout {
    pub fn column() -> Self {
        Self {
            shape: CsvShape::Column,
            ..Self::default()
        }
    }

    pub fn wrapping(mut self, wrap: bool) -> Self {
        self.wrap_on_load = wrap;
        self
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CfmError::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CfmError::io(dir, e))?;
    }
    File::create(path).map_err(|e| CfmError::io(path, e))
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> CfmError {
    CfmError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, err: csv::Error) -> CfmError {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => CfmError::io(path, e),
        kind => parse_error(path, line, format!("{kind:?}")),
    }
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, what: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| parse_error(path, line, format!("{what} {raw:?}: {e}")))
}

fn finish_values(values: Vec<f64>, wrap: bool) -> Vec<f64> {
    if wrap {
        values.into_iter().map(wrap_phase).collect()
    } else {
        values
    }
}

pub fn load_csv(path: impl AsRef<Path>, layout: &CsvLayout) -> Result<PhaseDataset> {
    let path = path.as_ref();
    let reader = BufReader::new(open(path)?);
    match layout.shape {
        CsvShape::Long => load_long(path, reader, layout),
        CsvShape::Column => load_column(path, reader, layout),
    }
}

fn load_long<R: Read>(path: &Path, reader: R, layout: &CsvLayout) -> Result<PhaseDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(path, 1, format!("missing column {name:?}")))
    };
    let cols = [
        column(&layout.subject)?,
        column(&layout.channel)?,
        column(&layout.time)?,
        column(&layout.phase)?,
    ];

    let mut rows = Vec::new();
    let (mut n, mut p, mut t) = (0usize, 0usize, 0usize);
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line());
        let s: usize = parse_field(path, line, "subject", &record[cols[0]])?;
        let k: usize = parse_field(path, line, "channel", &record[cols[1]])?;
        let j: usize = parse_field(path, line, "time_index", &record[cols[2]])?;
        let v: f64 = parse_field(path, line, "phase", &record[cols[3]])?;
        if !v.is_finite() {
            return Err(parse_error(path, line, format!("phase {v} is not finite")));
        }
        n = n.max(s + 1);
        p = p.max(k + 1);
        t = t.max(j + 1);
        rows.push((line, s, k, j, v));
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    let mut values = vec![f64::NAN; n * p * t];
    for &(line, s, k, j, v) in &rows {
        let slot = &mut values[(s * p + k) * t + j];
        if !slot.is_nan() {
            return Err(parse_error(
                path,
                line,
                format!("duplicate entry for subject {s}, channel {k}, time {j}"),
            ));
        }
        *slot = v;
    }
    if let Some(missing) = values.iter().position(|v| v.is_nan()) {
        let (s, k, j) = (missing / (p * t), (missing / t) % p, missing % t);
        return Err(CfmError::Format {
            path: path.to_path_buf(),
            message: format!("no entry for subject {s}, channel {k}, time {j}; expected a full {n}x{p}x{t} grid"),
        });
    }
    let grid = TimeGrid::uniform(t)?;
    Ok(PhaseDataset::new(
        finish_values(values, layout.wrap_on_load),
        n,
        p,
        grid,
    )?)
}

fn load_column<R: Read>(path: &Path, reader: R, layout: &CsvLayout) -> Result<PhaseDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line());
        if columns.is_empty() {
            columns = vec![Vec::new(); record.len()];
        }
        for (k, raw) in record.iter().enumerate() {
            let v: f64 = parse_field(path, line, "phase", raw)?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("phase {v} is not finite")));
            }
            columns[k].push(v);
        }
    }
    let t = columns.first().map_or(0, Vec::len);
    let p = columns.len();
    let values: Vec<f64> = columns.into_iter().flatten().collect();
    let grid = TimeGrid::uniform(t)?;
    Ok(PhaseDataset::new(
        finish_values(values, layout.wrap_on_load),
        1,
        p,
        grid,
    )?)
}

/// Long-format CSV. Values are written in shortest round-trip form.
pub fn save_csv(path: impl AsRef<Path>, data: &PhaseDataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(BufWriter::new(create(path)?));
    let io = |e: csv::Error| csv_error(path, e);
    w.write_record(["subject", "channel", "time_index", "phase"])
        .map_err(io)?;
    for s in 0..data.subjects() {
        for k in 0..data.channels() {
            for (j, v) in data.series(s, k).iter().enumerate() {
                w.write_record([s.to_string(), k.to_string(), j.to_string(), v.to_string()])
                    .map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| CfmError::io(path, e))
}

fn read_u32(path: &Path, r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| truncated(path, e))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s(path: &Path, r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes).map_err(|e| truncated(path, e))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn write_f64s(w: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn truncated(path: &Path, e: std::io::Error) -> CfmError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        CfmError::Format {
            path: path.to_path_buf(),
            message: "file ends early".into(),
        }
    } else {
        CfmError::io(path, e)
    }
}

fn expect_magic(path: &Path, r: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found).map_err(|e| truncated(path, e))?;
    if &found != magic {
        return Err(CfmError::Format {
            path: path.to_path_buf(),
            message: format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&found),
                String::from_utf8_lossy(magic)
            ),
        });
    }
    Ok(())
}

fn expect_end(path: &Path, r: &mut impl Read) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra) {
        Ok(0) => Ok(()),
        Ok(_) => Err(CfmError::Format {
            path: path.to_path_buf(),
            message: "trailing bytes after the payload".into(),
        }),
        Err(e) => Err(CfmError::io(path, e)),
    }
}

fn dim(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| CfmError::Config(format!("{what} {value} does not fit the file header")))
}

pub fn save_binary(path: impl AsRef<Path>, data: &PhaseDataset) -> Result<()> {
    let path = path.as_ref();
    let header = [
        dim(data.subjects(), "subject count")?,
        dim(data.channels(), "channel count")?,
        dim(data.times(), "time count")?,
    ];
    let mut w = BufWriter::new(create(path)?);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        w.write_all(DATASET_MAGIC)?;
        for d in header {
            w.write_all(&d.to_le_bytes())?;
        }
        write_f64s(w, data.values())?;
        w.flush()
    };
    write(&mut w).map_err(|e| CfmError::io(path, e))
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<PhaseDataset> {
    let path = path.as_ref();
    let mut r = BufReader::new(open(path)?);
    expect_magic(path, &mut r, DATASET_MAGIC)?;
    let n = read_u32(path, &mut r)? as usize;
    let p = read_u32(path, &mut r)? as usize;
    let t = read_u32(path, &mut r)? as usize;
    let values = read_f64s(path, &mut r, n * p * t)?;
    expect_end(path, &mut r)?;
    Ok(PhaseDataset::new(values, n, p, TimeGrid::uniform(t)?)?)
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("cfm"))
}

/// Reads `.cfm` files as binary and anything else as CSV.
pub fn load_dataset(path: impl AsRef<Path>, layout: &CsvLayout) -> Result<PhaseDataset> {
    let path = path.as_ref();
    if is_binary(path) {
        let data = load_binary(path)?;
        if layout.wrap_on_load {
            return Ok(PhaseDataset::new_wrapped(
                data.values().to_vec(),
                data.subjects(),
                data.channels(),
                data.grid().clone(),
            )?);
        }
        Ok(data)
    } else {
        load_csv(path, layout)
    }
}

pub fn save_dataset(path: impl AsRef<Path>, data: &PhaseDataset) -> Result<()> {
    let path = path.as_ref();
    if is_binary(path) {
        save_binary(path, data)
    } else {
        save_csv(path, data)
    }
}

/// Run settings stored next to a chain file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSidecar {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub chain: ChainConfig,
    pub hyper: Hyperparams,
    pub basis: BasisSpec,
    pub grid: Vec<f64>,
    pub subjects: usize,
    pub channels: usize,
    pub times: usize,
    pub n_basis: usize,
    pub draws: usize,
    pub z_width: u8,
    /// Dataset the chain was fitted to, if it came from a file.
    pub data: Option<PathBuf>,
}

impl ChainSidecar {
    pub fn new(chain: &PosteriorChain, basis: BasisSpec, grid: &TimeGrid, data: Option<PathBuf>) -> Self {
        Self {
            format: "cfm-chain".into(),
            version: CHAIN_VERSION,
            seed: chain.config().seed,
            chain: chain.config().clone(),
            hyper: *chain.hyper(),
            basis,
            grid: grid.points().to_vec(),
            subjects: chain.subjects(),
            channels: chain.channels(),
            times: chain.n_times(),
            n_basis: chain.n_basis(),
            draws: chain.len(),
            z_width: z_width(chain),
            data,
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(self.grid.clone())?)
    }
}

/// `chain.cfm` → `chain.json`.
pub fn sidecar_path(chain_path: &Path) -> PathBuf {
    chain_path.with_extension("json")
}

fn z_width(chain: &PosteriorChain) -> u8 {
    chain.draws().iter().map(|d| d.z.width()).max().unwrap_or(1) as u8
}

fn write_counts(w: &mut impl Write, z: &WrapCounts, width: u8) -> std::io::Result<()> {
    for i in 0..z.len() {
        let v = z.get(i);
        match width {
            1 => w.write_all(&(v as i8).to_le_bytes())?,
            2 => w.write_all(&(v as i16).to_le_bytes())?,
            _ => w.write_all(&v.to_le_bytes())?,
        }
    }
    Ok(())
}

fn read_counts(path: &Path, r: &mut impl Read, count: usize, width: u8) -> Result<WrapCounts> {
    let mut bytes = vec![0u8; count * width as usize];
    r.read_exact(&mut bytes).map_err(|e| truncated(path, e))?;
    let z: Vec<i32> = match width {
        1 => bytes.iter().map(|&b| b as i8 as i32).collect(),
        2 => bytes
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as i32)
            .collect(),
        _ => bytes
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    };
    Ok(WrapCounts::from_counts(&z))
}

/// Binary layout after the magic: `u32` version, n, p, T, L, draw count,
/// `u8` wrap-count width and three padding bytes; then per draw `σ²`,
/// `a[npL]`, `Z[npT]`; then the β, τ², γ² traces (`draws·L` each) and the
/// σ² trace.
pub fn save_chain(path: impl AsRef<Path>, chain: &PosteriorChain, sidecar: &ChainSidecar) -> Result<()> {
    let path = path.as_ref();
    let width = z_width(chain);
    let header = [
        CHAIN_VERSION,
        dim(chain.subjects(), "subject count")?,
        dim(chain.channels(), "channel count")?,
        dim(chain.n_times(), "time count")?,
        dim(chain.n_basis(), "basis size")?,
        dim(chain.len(), "draw count")?,
    ];
    let mut w = BufWriter::new(create(path)?);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        w.write_all(CHAIN_MAGIC)?;
        for d in header {
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&[width, 0, 0, 0])?;
        for d in chain.draws() {
            w.write_all(&d.sigma2.to_le_bytes())?;
            write_f64s(w, &d.a)?;
            write_counts(w, &d.z, width)?;
        }
        let t = chain.traces();
        write_f64s(w, &t.beta)?;
        write_f64s(w, &t.tau2)?;
        write_f64s(w, &t.gamma2)?;
        write_f64s(w, &t.sigma2)?;
        w.flush()
    };
    write(&mut w).map_err(|e| CfmError::io(path, e))?;

    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(sidecar)?;
    std::fs::write(&side, json).map_err(|e| CfmError::io(&side, e))
}

pub fn load_chain(path: impl AsRef<Path>) -> Result<(PosteriorChain, ChainSidecar)> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| CfmError::io(&side, e))?;
    let sidecar: ChainSidecar = serde_json::from_str(&text)?;

    let mut r = BufReader::new(open(path)?);
    expect_magic(path, &mut r, CHAIN_MAGIC)?;
    let version = read_u32(path, &mut r)?;
    if version != CHAIN_VERSION {
        return Err(CfmError::Format {
            path: path.to_path_buf(),
            message: format!("unsupported chain version {version}"),
        });
    }
    let mut dims = [0usize; 5];
    for d in dims.iter_mut() {
        *d = read_u32(path, &mut r)? as usize;
    }
    let [n, p, t, l, count] = dims;
    let mut pad = [0u8; 4];
    r.read_exact(&mut pad).map_err(|e| truncated(path, e))?;
    let width = pad[0];
    if !matches!(width, 1 | 2 | 4) {
        return Err(CfmError::Format {
            path: path.to_path_buf(),
            message: format!("wrap-count width {width} is not 1, 2 or 4"),
        });
    }
    let described = (
        sidecar.subjects,
        sidecar.channels,
        sidecar.times,
        sidecar.n_basis,
        sidecar.draws,
    );
    if described != (n, p, t, l, count) {
        return Err(CfmError::Format {
            path: path.to_path_buf(),
            message: format!(
                "header dimensions {:?} disagree with the sidecar {described:?}",
                (n, p, t, l, count)
            ),
        });
    }

    let mut draws = Vec::with_capacity(count);
    for _ in 0..count {
        let sigma2 = read_f64s(path, &mut r, 1)?[0];
        let a = read_f64s(path, &mut r, n * p * l)?;
        let z = read_counts(path, &mut r, n * p * t, width)?;
        draws.push(Draw { a, z, sigma2 });
    }
    let traces = Traces {
        beta: read_f64s(path, &mut r, count * l)?,
        tau2: read_f64s(path, &mut r, count * l)?,
        gamma2: read_f64s(path, &mut r, count * l)?,
        sigma2: read_f64s(path, &mut r, count)?,
    };
    expect_end(path, &mut r)?;
    let chain = PosteriorChain::from_parts(n, p, t, l, sidecar.chain.clone(), sidecar.hyper, draws, traces)?;
    Ok((chain, sidecar))
}

/// Raw signal CSV, one row per channel.
pub fn load_signal_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(open(path)?));
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line());
        let row = record
            .iter()
            .map(|raw| parse_field::<f64>(path, line, "sample", raw))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, "no channels"));
    }
    Ok(rows)
}

pub fn save_signal_csv(path: impl AsRef<Path>, rows: &[Vec<f64>]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(create(path)?));
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CfmError::io(path, e))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| CfmError::io(path, e))?;
    w.flush().map_err(|e| CfmError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CfmError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
