//! Python bindings. Matrices cross the boundary as lists of rows; a video is
//! `pixels x frames` with pixels in line-major order.

use nalgebra::DMatrix;
use nora_core::analysis;
use nora_core::operators::{estimate_operator_norm, generate_plan};
use nora_core::phantom::{gen_scene, gen_traces, render_clean, ActivityModel};
use nora_core::solver::{self, SolverConfig};
use nora_core::{FrameGrid, MeasurementSet, NoraError, VideoMatrix};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

type Rows = Vec<Vec<f64>>;

fn to_py(err: NoraError) -> PyErr {
    match err {
        NoraError::Io { .. } | NoraError::Format(_) | NoraError::Checksum { .. } => PyIOError::new_err(err.to_string()),
        NoraError::Divergence { .. } | NoraError::Svd { .. } | NoraError::Infeasible { .. } | NoraError::NotBracketed { .. } => {
            PyRuntimeError::new_err(err.to_string())
        }
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn to_matrix(rows: &Rows) -> PyResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|row| row.iter().copied().collect()).collect()
}

fn grid(height: usize, width: usize) -> PyResult<FrameGrid> {
    FrameGrid::new(height, width, 1.0, 30.0).map_err(to_py)
}

/// Point spread function kernel; rows run along the slow axis.
#[pyclass(name = "Psf", from_py_object)]
#[derive(Clone)]
struct PyPsf(nora_core::Psf);

#[pymethods]
impl PyPsf {
    #[staticmethod]
    #[pyo3(signature = (sigma_fast_px, sigma_slow_px, truncation_sigmas = 4.0))]
    fn gaussian(sigma_fast_px: f64, sigma_slow_px: f64, truncation_sigmas: f64) -> PyResult<Self> {
        nora_core::Psf::gaussian(sigma_fast_px, sigma_slow_px, truncation_sigmas)
            .map(PyPsf)
            .map_err(to_py)
    }

    #[staticmethod]
    fn delta() -> Self {
        PyPsf(nora_core::Psf::delta())
    }

    #[staticmethod]
    fn from_kernel(kernel: Rows) -> PyResult<Self> {
        nora_core::Psf::from_kernel(to_matrix(&kernel)?).map(PyPsf).map_err(to_py)
    }

    #[getter]
    fn kernel(&self) -> Rows {
        to_rows(&self.0.kernel)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.rows(), self.0.cols())
    }
}

/// Blur plus per-frame line selection.
#[pyclass(name = "ForwardModel")]
struct PyForwardModel(nora_core::ForwardModel);

#[pymethods]
impl PyForwardModel {
    /// `strategy` is `"rotating"` or `"uniform"`.
    #[new]
    #[pyo3(signature = (height, width, frames, lines_per_frame, psf, strategy = "rotating", seed = 0))]
    fn new(
        height: usize,
        width: usize,
        frames: usize,
        lines_per_frame: usize,
        psf: PyPsf,
        strategy: &str,
        seed: u64,
    ) -> PyResult<Self> {
        let strategy = match strategy {
            "rotating" => nora_core::SamplingStrategy::RotatingEvenlySpaced,
            "uniform" => nora_core::SamplingStrategy::UniformRandom,
            other => return Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
        };
        let g = grid(height, width)?;
        let plan = generate_plan(g, frames, lines_per_frame, strategy, seed).map_err(to_py)?;
        nora_core::ForwardModel::new(psf.0, plan, g).map(PyForwardModel).map_err(to_py)
    }

    #[getter]
    fn line_indices(&self) -> Vec<Vec<usize>> {
        self.0.plan.line_indices.clone()
    }

    #[getter]
    fn measurement_shape(&self) -> (usize, usize) {
        (self.0.plan.measurements_per_frame(), self.0.frames())
    }

    fn apply(&self, x: Rows) -> PyResult<Rows> {
        self.0.apply(&to_matrix(&x)?).map(|m| to_rows(&m)).map_err(to_py)
    }

    fn adjoint(&self, y: Rows) -> PyResult<Rows> {
        self.0.adjoint(&to_matrix(&y)?).map(|m| to_rows(&m)).map_err(to_py)
    }

    /// Power-iteration estimate of the squared operator norm.
    #[pyo3(signature = (iterations = 100, seed = 0))]
    fn operator_norm_sq(&self, iterations: usize, seed: u64) -> PyResult<f64> {
        estimate_operator_norm(&self.0, iterations, seed).map_err(to_py)
    }

    /// Smallest Lagrangian weight whose solution is zero.
    fn lambda_max(&self, y: Rows) -> PyResult<f64> {
        solver::lambda_max(&self.0, &to_matrix(&y)?).map_err(to_py)
    }

    /// Lagrangian solve; returns the estimate and a JSON report.
    #[pyo3(signature = (y, lam, max_iters = 500, rel_tol = 1e-4))]
    fn solve_lagrangian(&self, y: Rows, lam: f64, max_iters: usize, rel_tol: f64) -> PyResult<(Rows, String)> {
        let mut config = SolverConfig::lagrangian(lam);
        config.max_iters = max_iters;
        config.rel_tol = rel_tol;
        self.run(y, &config)
    }

    /// Residual-constrained solve; returns the estimate and a JSON report.
    #[pyo3(signature = (y, epsilon, mu = 0.0, max_iters = 500, rel_tol = 1e-4))]
    fn solve_constrained(
        &self,
        y: Rows,
        epsilon: f64,
        mu: f64,
        max_iters: usize,
        rel_tol: f64,
    ) -> PyResult<(Rows, String)> {
        let mut config = SolverConfig::constrained(epsilon, mu);
        config.max_iters = max_iters;
        config.rel_tol = rel_tol;
        self.run(y, &config)
    }
}

impl PyForwardModel {
    fn run(&self, y: Rows, config: &SolverConfig) -> PyResult<(Rows, String)> {
        let y = MeasurementSet::new(self.0.plan.clone(), to_matrix(&y)?).map_err(to_py)?;
        let (x, report) = solver::solve(&y, &self.0, config).map_err(to_py)?;
        Ok((to_rows(&x.data), report.to_json()))
    }
}

/// Singular value soft-thresholding.
#[pyfunction]
fn svt(m: Rows, tau: f64) -> PyResult<Rows> {
    solver::svt(&to_matrix(&m)?, tau).map(|m| to_rows(&m)).map_err(to_py)
}

/// Synthetic video of `cells` neurons plus background; returns
/// `(video, traces)` with traces `cells x frames`.
#[pyfunction]
#[pyo3(signature = (height, width, frames, cells = 4, seed = 0))]
fn phantom(height: usize, width: usize, frames: usize, cells: usize, seed: u64) -> PyResult<(Rows, Rows)> {
    let g = grid(height, width)?;
    let scene = gen_scene(g, cells, (3.0, 5.0), seed).map_err(to_py)?;
    let activity = ActivityModel {
        seed: seed + 100,
        ..Default::default()
    };
    let traces = gen_traces(&activity, cells, frames, g.frame_rate_hz).map_err(to_py)?;
    let video = render_clean(&scene, &traces).map_err(to_py)?;
    Ok((to_rows(&video.data), to_rows(&traces)))
}

#[pyfunction]
fn relative_error(estimate: Rows, reference: Rows) -> PyResult<f64> {
    analysis::relative_error(&to_matrix(&estimate)?, &to_matrix(&reference)?).map_err(to_py)
}

#[pyfunction]
fn psnr(estimate: Rows, reference: Rows) -> PyResult<f64> {
    analysis::psnr(&to_matrix(&estimate)?, &to_matrix(&reference)?).map_err(to_py)
}

/// Coherence of the rank-`rank` column space of `video` with the blurred
/// line-sampling basis.
#[pyfunction]
fn coherence(video: Rows, height: usize, width: usize, psf: PyPsf, rank: usize) -> PyResult<f64> {
    let v = VideoMatrix::new(grid(height, width)?, to_matrix(&video)?).map_err(to_py)?;
    analysis::coherence_mu_b(&v, &psf.0, rank).map_err(to_py)
}

#[pymodule]
fn nora(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPsf>()?;
    m.add_class::<PyForwardModel>()?;
    m.add_function(wrap_pyfunction!(svt, m)?)?;
    m.add_function(wrap_pyfunction!(phantom, m)?)?;
    m.add_function(wrap_pyfunction!(relative_error, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(coherence, m)?)?;
    Ok(())
}
