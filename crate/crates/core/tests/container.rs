mod common;

use common::gaussian;
use nalgebra::DMatrix;
use nora_core::container::{
    decode, encode, read_container, read_measurements, read_plan, read_traces, read_video, write_container, Container,
    TraceMatrix,
};
use nora_core::operators::{generate_plan, SamplingStrategy};
use nora_core::{FrameGrid, MeasurementSet, NoraError, VideoMatrix};

/// Values that survive the f32 payload exactly.
fn f32_exact(m: DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| v as f32 as f64)
}

#[test]
fn video_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("video.nora");
    let grid = FrameGrid::new(16, 16, 0.75, 15.0).unwrap();
    let video = VideoMatrix::new(grid, f32_exact(gaussian(256, 10, 1))).unwrap();
    write_container(&path, &Container::Video(video.clone())).unwrap();
    let back = read_video(&path).unwrap();
    assert_eq!(back, video);
    assert!(!dir.path().join("video.nora.tmp").exists());
}

#[test]
fn measurements_round_trip_keeps_plan() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("y.nora");
    let grid = FrameGrid::new(12, 9, 1.0, 30.0).unwrap();
    let plan = generate_plan(grid, 7, 4, SamplingStrategy::UniformRandom, 42).unwrap();
    let y = MeasurementSet::new(plan, f32_exact(gaussian(36, 7, 2))).unwrap();
    write_container(&path, &Container::Measurements(y.clone())).unwrap();
    assert_eq!(read_measurements(&path).unwrap(), y);
}

#[test]
fn plan_round_trip_regenerates_identical_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.nora");
    let grid = FrameGrid::new(64, 64, 1.0, 30.0).unwrap();
    for strategy in [SamplingStrategy::UniformRandom, SamplingStrategy::RotatingEvenlySpaced] {
        let plan = generate_plan(grid, 100, 6, strategy, 1).unwrap();
        write_container(&path, &Container::Plan(plan.clone())).unwrap();
        let back = read_plan(&path).unwrap();
        let regenerated = generate_plan(back.grid, back.frames(), back.lines_per_frame, back.strategy, back.seed).unwrap();
        assert_eq!(back, plan);
        assert_eq!(regenerated.line_indices, plan.line_indices);
    }
}

#[test]
fn traces_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traces.nora");
    let traces = TraceMatrix {
        frame_rate_hz: 30.0,
        data: f32_exact(gaussian(5, 40, 3)),
    };
    write_container(&path, &Container::Traces(traces.clone())).unwrap();
    assert_eq!(read_traces(&path).unwrap(), traces);
}

#[test]
fn reencoding_is_byte_identical() {
    let grid = FrameGrid::new(8, 6, 1.0, 30.0).unwrap();
    let video = VideoMatrix::new(grid, gaussian(48, 5, 4)).unwrap();
    let bytes = encode(&Container::Video(video)).unwrap();
    let again = encode(&decode(&bytes).unwrap()).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn corrupted_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let grid = FrameGrid::new(4, 4, 1.0, 30.0).unwrap();
    let bytes = encode(&Container::Video(VideoMatrix::new(grid, gaussian(16, 3, 5)).unwrap())).unwrap();

    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    let path = dir.path().join("bad.nora");
    std::fs::write(&path, &bad_magic).unwrap();
    assert!(matches!(read_container(&path), Err(NoraError::Format(_))));

    let mut flipped = bytes.clone();
    let mid = bytes.len() - 10;
    flipped[mid] ^= 0x40;
    assert!(matches!(decode(&flipped), Err(NoraError::Checksum { .. })));

    assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(NoraError::Format(_))));
    assert!(read_container(dir.path().join("missing.nora")).is_err());
}

#[test]
fn wrong_kind_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.nora");
    let grid = FrameGrid::new(4, 4, 1.0, 30.0).unwrap();
    write_container(&path, &Container::Video(VideoMatrix::zeros(grid, 2))).unwrap();
    assert!(read_plan(&path).is_err());
    assert!(read_video(&path).is_ok());
}
