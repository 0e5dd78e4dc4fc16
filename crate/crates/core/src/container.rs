//! Binary container for videos, measurements, plans and trace matrices.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "NORA" | u8 version=1 | u8 kind | u16 reserved=0
//! u64 H | u64 W | u64 T | u64 L' | u64 strategy | u64 seed | f64 frame_rate_hz | f64 pixel_pitch_um
//! payload: f32 values, column-major over time
//! u32 CRC32 of the payload bytes
//! ```
//!
//! Kinds: 1 video (`N x T`), 2 measurements (`L'W x T`, plan regenerated
//! from the header), 3 plan (`L' x T` line indices stored as f32), 4 traces
//! (`K x T`, `K` in the `H` slot, `W = 1`).

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{NoraError, Result};
use crate::measurement::MeasurementSet;
use crate::operators::plan::{SamplingPlan, SamplingStrategy};
use crate::video::{FrameGrid, VideoMatrix};

pub const MAGIC: &[u8; 4] = b"NORA";
pub const VERSION: u8 = 1;
const PREAMBLE_LEN: usize = 8;
const HEADER_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ContainerKind {
    Video = 1,
    Measurements = 2,
    Plan = 3,
    Traces = 4,
}

impl ContainerKind {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ContainerKind::Video),
            2 => Ok(ContainerKind::Measurements),
            3 => Ok(ContainerKind::Plan),
            4 => Ok(ContainerKind::Traces),
            other => Err(NoraError::Format(format!("unknown container kind {other}"))),
        }
    }
}

/// A `K x T` matrix of activity traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMatrix {
    pub frame_rate_hz: f64,
    pub data: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Container {
    Video(VideoMatrix),
    Measurements(MeasurementSet),
    Plan(SamplingPlan),
    Traces(TraceMatrix),
}

impl Container {
    pub fn kind(&self) -> ContainerKind {
        match self {
            Container::Video(_) => ContainerKind::Video,
            Container::Measurements(_) => ContainerKind::Measurements,
            Container::Plan(_) => ContainerKind::Plan,
            Container::Traces(_) => ContainerKind::Traces,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Header {
    h: u64,
    w: u64,
    t: u64,
    lines: u64,
    strategy: u64,
    seed: u64,
    frame_rate_hz: f64,
    pixel_pitch_um: f64,
}

impl Header {
    fn for_grid(grid: &FrameGrid, t: usize) -> Self {
        Header {
            h: grid.height_lines as u64,
            w: grid.width_pixels as u64,
            t: t as u64,
            lines: 0,
            strategy: 0,
            seed: 0,
            frame_rate_hz: grid.frame_rate_hz,
            pixel_pitch_um: grid.pixel_pitch_um,
        }
    }

    fn for_plan(plan: &SamplingPlan) -> Self {
        Header {
            lines: plan.lines_per_frame as u64,
            strategy: plan.strategy.code(),
            seed: plan.seed,
            ..Header::for_grid(&plan.grid, plan.frames())
        }
    }

    fn grid(&self) -> Result<FrameGrid> {
        FrameGrid::new(
            to_usize(self.h)?,
            to_usize(self.w)?,
            self.pixel_pitch_um,
            self.frame_rate_hz,
        )
        .map_err(|e| NoraError::Format(format!("invalid grid in header: {e}")))
    }

    fn encode(&self, out: &mut Vec<u8>) {
        for v in [self.h, self.w, self.t, self.lines, self.strategy, self.seed] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.frame_rate_hz.to_le_bytes());
        out.extend_from_slice(&self.pixel_pitch_um.to_le_bytes());
    }

    fn decode(bytes: &[u8]) -> Self {
        let u = |i: usize| u64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().unwrap());
        let f = |i: usize| f64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().unwrap());
        Header {
            h: u(0),
            w: u(1),
            t: u(2),
            lines: u(3),
            strategy: u(4),
            seed: u(5),
            frame_rate_hz: f(6),
            pixel_pitch_um: f(7),
        }
    }
}

fn to_usize(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| NoraError::Format(format!("dimension {v} overflows usize")))
}

fn push_f32(out: &mut Vec<u8>, values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        if !v.is_finite() {
            return Err(NoraError::Argument("cannot store non-finite values".into()));
        }
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(())
}

/// Serialize to the container byte layout.
pub fn encode(object: &Container) -> Result<Vec<u8>> {
    let (header, payload_values): (Header, Box<dyn Iterator<Item = f64> + '_>) = match object {
        Container::Video(v) => (
            Header::for_grid(&v.grid, v.frames()),
            Box::new(v.data.iter().copied()),
        ),
        Container::Measurements(m) => {
            if m.plan.frame_offset != 0 {
                return Err(NoraError::Argument(
                    "only whole plans (frame offset 0) can be stored".into(),
                ));
            }
            (Header::for_plan(&m.plan), Box::new(m.data.iter().copied()))
        }
        Container::Plan(p) => {
            if p.frame_offset != 0 {
                return Err(NoraError::Argument(
                    "only whole plans (frame offset 0) can be stored".into(),
                ));
            }
            if p.grid.height_lines > 1 << 24 {
                return Err(NoraError::Argument("line indices exceed f32 precision".into()));
            }
            (
                Header::for_plan(p),
                Box::new(p.line_indices.iter().flatten().map(|&l| l as f64)),
            )
        }
        Container::Traces(tr) => (
            Header {
                h: tr.data.nrows() as u64,
                w: 1,
                t: tr.data.ncols() as u64,
                lines: 0,
                strategy: 0,
                seed: 0,
                frame_rate_hz: tr.frame_rate_hz,
                pixel_pitch_um: 1.0,
            },
            Box::new(tr.data.iter().copied()),
        ),
    };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(object.kind() as u8);
    out.extend_from_slice(&0u16.to_le_bytes());
    header.encode(&mut out);
    let payload_start = out.len();
    push_f32(&mut out, payload_values)?;
    let crc = crc32fast::hash(&out[payload_start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Parse the container byte layout.
pub fn decode(bytes: &[u8]) -> Result<Container> {
    if bytes.len() < PREAMBLE_LEN + HEADER_LEN + 4 {
        return Err(NoraError::Format(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(NoraError::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    if bytes[4] != VERSION {
        return Err(NoraError::Format(format!("unsupported version {}", bytes[4])));
    }
    let kind = ContainerKind::from_u8(bytes[5])?;
    let header = Header::decode(&bytes[PREAMBLE_LEN..PREAMBLE_LEN + HEADER_LEN]);
    let rows = match kind {
        ContainerKind::Video => header.h.checked_mul(header.w),
        ContainerKind::Measurements => header.lines.checked_mul(header.w),
        ContainerKind::Plan => Some(header.lines),
        ContainerKind::Traces => Some(header.h),
    }
    .ok_or_else(|| NoraError::Format("dimensions overflow".into()))?;
    let rows = to_usize(rows)?;
    let cols = to_usize(header.t)?;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| NoraError::Format("dimensions overflow".into()))?;
    let payload_start = PREAMBLE_LEN + HEADER_LEN;
    let expected = payload_start + count * 4 + 4;
    if bytes.len() != expected {
        return Err(NoraError::Format(format!(
            "expected {expected} bytes for a {rows}x{cols} payload, found {}",
            bytes.len()
        )));
    }
    let payload = &bytes[payload_start..expected - 4];
    let stored = u32::from_le_bytes(bytes[expected - 4..].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(NoraError::Checksum { stored, computed });
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let matrix = DMatrix::from_vec(rows, cols, values);

    Ok(match kind {
        ContainerKind::Video => Container::Video(VideoMatrix::new(header.grid()?, matrix)?),
        ContainerKind::Measurements => {
            let plan = plan_from_header(&header)?;
            Container::Measurements(MeasurementSet::new(plan, matrix)?)
        }
        ContainerKind::Plan => {
            let mut plan = plan_from_header(&header)?;
            let lines: Vec<Vec<usize>> = matrix
                .column_iter()
                .map(|c| c.iter().map(|&v| v as usize).collect())
                .collect();
            if lines != plan.line_indices {
                return Err(NoraError::Format(
                    "stored line indices differ from the plan regenerated from the header".into(),
                ));
            }
            plan.line_indices = lines;
            Container::Plan(plan)
        }
        ContainerKind::Traces => Container::Traces(TraceMatrix {
            frame_rate_hz: header.frame_rate_hz,
            data: matrix,
        }),
    })
}

fn plan_from_header(header: &Header) -> Result<SamplingPlan> {
    let strategy = SamplingStrategy::from_code(header.strategy)
        .ok_or_else(|| NoraError::Format(format!("unknown strategy code {}", header.strategy)))?;
    crate::operators::plan::generate_plan(
        header.grid()?,
        to_usize(header.t)?,
        to_usize(header.lines)?,
        strategy,
        header.seed,
    )
    .map_err(|e| NoraError::Format(format!("cannot regenerate plan: {e}")))
}

/// Write atomically: the bytes go to a sibling temp file that is then renamed.
pub fn write_container(path: impl AsRef<Path>, object: &Container) -> Result<()> {
    let bytes = encode(object)?;
    write_atomic(path.as_ref(), &bytes)
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Container> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| NoraError::io(path, e))?;
    decode(&bytes)
}

pub fn read_video(path: impl AsRef<Path>) -> Result<VideoMatrix> {
    match read_container(path)? {
        Container::Video(v) => Ok(v),
        other => Err(NoraError::Format(format!("expected a video, found {:?}", other.kind()))),
    }
}

pub fn read_measurements(path: impl AsRef<Path>) -> Result<MeasurementSet> {
    match read_container(path)? {
        Container::Measurements(m) => Ok(m),
        other => Err(NoraError::Format(format!(
            "expected measurements, found {:?}",
            other.kind()
        ))),
    }
}

pub fn read_plan(path: impl AsRef<Path>) -> Result<SamplingPlan> {
    match read_container(path)? {
        Container::Plan(p) => Ok(p),
        other => Err(NoraError::Format(format!("expected a plan, found {:?}", other.kind()))),
    }
}

pub fn read_traces(path: impl AsRef<Path>) -> Result<TraceMatrix> {
    match read_container(path)? {
        Container::Traces(t) => Ok(t),
        other => Err(NoraError::Format(format!("expected traces, found {:?}", other.kind()))),
    }
}

/// Write `bytes` to `path` through a temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| NoraError::Argument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(|e| NoraError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| NoraError::io(&tmp, e))?;
    f.sync_all().map_err(|e| NoraError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| NoraError::io(path, e))
}
