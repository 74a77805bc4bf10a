//! Lower-bound estimation of the d-dimensional algebraic connectivity:
//! multi-restart local maximization of the rigidity eigenvalue over
//! configurations.
//!
//! The objective `lambda_{D+1}(L_G(p))` is invariant under translation,
//! rotation, and positive scaling of `p`, so every iterate is gauge-fixed
//! (centered, norm sqrt(n)). It is nonsmooth at eigenvalue crossings and
//! where the affine-hull dimension changes; the ascent therefore uses
//! accept-if-improves steps with halving, no smoothness assumptions.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::graph::Graph;
use crate::linalg;
use crate::rigidity::{Configuration, Framework};
use crate::{Error, Result};

/// How ascent directions are computed. The analytic mode is the
/// default: one eigendecomposition per gradient instead of `2 d n`,
/// with an automatic finite-difference fallback wherever the target
/// eigenvalue is not simple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    /// Central finite differences with a relative step.
    FiniteDifference,
    /// First-order eigenvalue perturbation at simple eigenvalues.
    #[default]
    Analytic,
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub gradient_mode: GradientMode,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Initial ascent step; halved on non-improvement.
    pub initial_step: f64,
    /// Step size below which a restart gives up.
    pub step_floor: f64,
    /// An iteration counts as stalled when it improves by less than this.
    pub convergence_tol: f64,
    /// Consecutive stalled iterations before a restart stops.
    pub convergence_window: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 20,
            seed: 0,
            max_iters: 500,
            gradient_mode: GradientMode::default(),
            fd_step: 1e-6,
            initial_step: 0.1,
            step_floor: 1e-9,
            convergence_tol: 1e-10,
            convergence_window: 10,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidInput("restarts must be at least 1".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        for (name, v) in [
            ("fd_step", self.fd_step),
            ("initial_step", self.initial_step),
            ("step_floor", self.step_floor),
            ("convergence_tol", self.convergence_tol),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        if self.convergence_window < 1 {
            return Err(Error::InvalidInput(
                "convergence_window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, Serialize)]
pub struct RestartTrace {
    pub final_value: f64,
    pub iterations: usize,
}

/// A certified lower bound on `a_d(G)` with the configuration that
/// attains it and the per-restart history.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    /// Best rigidity eigenvalue found; a lower bound on `a_d(G)`.
    pub best_value: f64,
    pub best_config: Configuration,
    pub per_restart: Vec<RestartTrace>,
    /// Classical algebraic connectivity of the graph.
    pub a1: f64,
    /// `a1 - best_value`; nonnegative up to solver tolerance.
    pub certificate: f64,
    /// Set when the estimate exceeds `a1 + 1e-8`, which would contradict
    /// the upper bound and therefore signals an implementation bug.
    pub violation: bool,
}

/// The optimization objective: the rigidity eigenvalue of `(G, p)`.
/// The trivial-motion dimension `D` is recomputed from the affine hull
/// of `p` at every call, so the eigenvalue index can jump along
/// trajectories that pass near degenerate configurations.
pub fn objective(graph: &Graph, p: &Array1<f64>, d: usize) -> Result<f64> {
    let config = Configuration::from_stacked(d, p)?;
    let fw = Framework::new(graph.clone(), config)?;
    fw.rigidity_eigenvalue()
}

/// Minimum gap to neighboring eigenvalues for the analytic gradient.
pub const SIMPLE_GAP: f64 = 1e-7;

fn coincident_edge(fw: &Framework) -> Option<(usize, usize)> {
    fw.graph()
        .edges()
        .iter()
        .copied()
        .find(|&(i, j)| fw.coincident(i, j))
}

/// Gradient of the objective at `p`.
///
/// Finite-difference mode uses central differences with relative step
/// `fd_step`. Analytic mode uses first-order perturbation of a simple
/// eigenvalue and fails with [`Error::NonSimpleEigenvalue`] when the
/// gap to a neighboring eigenvalue is below [`SIMPLE_GAP`]. Both modes
/// refuse configurations where some edge has coincident endpoints: the
/// edge direction is not differentiable there.
pub fn gradient(
    graph: &Graph,
    p: &Array1<f64>,
    d: usize,
    mode: GradientMode,
    fd_step: f64,
) -> Result<Array1<f64>> {
    let config = Configuration::from_stacked(d, p)?;
    let fw = Framework::new(graph.clone(), config)?;
    if let Some((i, j)) = coincident_edge(&fw) {
        return Err(Error::CoincidentPoints { i, j });
    }
    match mode {
        GradientMode::FiniteDifference => {
            let mut g = Array1::zeros(p.len());
            let mut work = p.clone();
            for k in 0..p.len() {
                let h = fd_step * (1.0 + p[k].abs());
                work[k] = p[k] + h;
                let plus = objective(graph, &work, d)?;
                work[k] = p[k] - h;
                let minus = objective(graph, &work, d)?;
                work[k] = p[k];
                g[k] = (plus - minus) / (2.0 * h);
            }
            Ok(g)
        }
        GradientMode::Analytic => {
            let dd = fw.trivial_dim();
            let spec = linalg::eigh(&fw.stiffness_matrix())?;
            let lambda = spec.value(dd);
            let mut gap = f64::INFINITY;
            if dd > 0 {
                gap = lambda - spec.value(dd - 1);
            }
            if dd + 1 < spec.len() {
                gap = gap.min(spec.value(dd + 1) - lambda);
            }
            if gap <= SIMPLE_GAP {
                return Err(Error::NonSimpleEigenvalue { index: dd, gap });
            }
            let u = spec.vector(dd);
            let mut g = Array1::zeros(p.len());
            for &(i, j) in fw.graph().edges() {
                let e = &fw.config().point(i) - &fw.config().point(j);
                let len = e.dot(&e).sqrt();
                let delta = &e / len;
                let mut w = Array1::zeros(d);
                for k in 0..d {
                    w[k] = u[i * d + k] - u[j * d + k];
                }
                let coeff = w.dot(&delta);
                // d/dp of (w^T e / |e|)^2 with the eigenvector frozen.
                for k in 0..d {
                    let term = 2.0 * coeff * (w[k] - coeff * delta[k]) / len;
                    g[i * d + k] += term;
                    g[j * d + k] -= term;
                }
            }
            Ok(g)
        }
    }
}

/// Center each coordinate axis and rescale so `|p| = sqrt(n)`.
/// Returns false when the centered vector is numerically zero.
fn gauge_fix(p: &mut Array1<f64>, d: usize) -> bool {
    let n = p.len() / d;
    for k in 0..d {
        let mean: f64 = (0..n).map(|i| p[i * d + k]).sum::<f64>() / n as f64;
        for i in 0..n {
            p[i * d + k] -= mean;
        }
    }
    let norm = p.dot(p).sqrt();
    if norm < 1e-150 {
        return false;
    }
    let target = (n as f64).sqrt();
    *p *= target / norm;
    true
}

fn gaussian(len: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_shape_fn(len, |_| rng.sample::<f64, _>(StandardNormal))
}

fn perturb(p: &mut Array1<f64>, rng: &mut ChaCha8Rng) {
    let scale = 1e-6 * (1.0 + p.iter().fold(0.0f64, |a, &b| a.max(b.abs())));
    let noise = gaussian(p.len(), rng);
    p.scaled_add(scale, &noise);
}

fn has_coincident_edge(graph: &Graph, p: &Array1<f64>, d: usize) -> Result<bool> {
    let config = Configuration::from_stacked(d, p)?;
    let fw = Framework::new(graph.clone(), config)?;
    Ok(coincident_edge(&fw).is_some())
}

/// One gradient-ascent run from `start`, with the step-halving and
/// stall-window rules from `cfg`. Returns the final value, the final
/// gauge-fixed configuration, and the number of iterations spent.
/// The RNG drives only the perturb-and-retry escape used when an edge
/// collapses onto coincident endpoints.
pub fn ascend_from(
    graph: &Graph,
    d: usize,
    start: &Array1<f64>,
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Array1<f64>, usize)> {
    let mut p = start.clone();
    if !gauge_fix(&mut p, d) {
        return Err(Error::InvalidInput(
            "starting configuration is numerically zero".into(),
        ));
    }
    // Gradient is undefined on edges with coincident endpoints; nudge
    // away before starting (documented perturb-and-retry behavior).
    for _ in 0..16 {
        if !has_coincident_edge(graph, &p, d)? {
            break;
        }
        perturb(&mut p, rng);
        gauge_fix(&mut p, d);
    }

    let mut value = objective(graph, &p, d)?;
    let mut step = cfg.initial_step;
    let mut stall = 0usize;
    let mut iterations = 0usize;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        let grad = match gradient(graph, &p, d, cfg.gradient_mode, cfg.fd_step) {
            Ok(g) => g,
            Err(Error::NonSimpleEigenvalue { .. }) => {
                // Fall back to finite differences at crossings.
                match gradient(graph, &p, d, GradientMode::FiniteDifference, cfg.fd_step) {
                    Ok(g) => g,
                    Err(Error::CoincidentPoints { .. }) => {
                        perturb(&mut p, rng);
                        gauge_fix(&mut p, d);
                        value = objective(graph, &p, d)?;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(Error::CoincidentPoints { .. }) => {
                perturb(&mut p, rng);
                gauge_fix(&mut p, d);
                value = objective(graph, &p, d)?;
                continue;
            }
            Err(e) => return Err(e),
        };

        let gnorm = grad.dot(&grad).sqrt();
        let improved = if gnorm > 1e-14 {
            let mut candidate = &p + &(&grad * (step / gnorm));
            if gauge_fix(&mut candidate, d) {
                let cand_value = objective(graph, &candidate, d)?;
                if cand_value > value {
                    let improvement = cand_value - value;
                    p = candidate;
                    value = cand_value;
                    Some(improvement)
                } else {
                    None
                }
            } else {
                None
            }
        } else {
            None
        };

        match improved {
            Some(improvement) if improvement >= cfg.convergence_tol => stall = 0,
            Some(_) => stall += 1,
            None => {
                step *= 0.5;
                stall += 1;
                if step < cfg.step_floor {
                    break;
                }
            }
        }
        if stall >= cfg.convergence_window {
            break;
        }
    }
    Ok((value, p, iterations))
}

/// Estimate `a_d(G)` by multi-restart ascent. The result is a certified
/// lower bound; the graph's algebraic connectivity caps it from above.
///
/// Restart `r` draws its start (and any retry noise) from an RNG stream
/// derived from `cfg.seed` and `r` alone, so the estimate is fully
/// deterministic and the best value is non-decreasing in the number of
/// restarts for a fixed seed.
pub fn estimate_ad(graph: &Graph, d: usize, cfg: &OptimizerConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    if d < 1 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let n = graph.vertex_count();
    let (a1, _) = graph.algebraic_connectivity()?;

    let mut per_restart = Vec::with_capacity(cfg.restarts);
    let mut best: Option<(f64, Array1<f64>)> = None;

    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64 + 1);
        let mut start = gaussian(d * n, &mut rng);
        while !gauge_fix(&mut start, d) {
            start = gaussian(d * n, &mut rng);
        }
        let (value, point, iterations) = ascend_from(graph, d, &start, cfg, &mut rng)?;
        per_restart.push(RestartTrace { final_value: value, iterations });
        if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
            best = Some((value, point));
        }
    }

    let (raw_best, best_point) = best.expect("restarts >= 1");
    let best_config = Configuration::from_stacked(d, &best_point)?;

    // Recompute independently from the stored configuration.
    let recomputed = Framework::new(graph.clone(), best_config.clone())?.rigidity_eigenvalue()?;
    if (recomputed - raw_best).abs() > 1e-9 {
        return Err(Error::Internal(format!(
            "best value {raw_best} does not reproduce from its configuration ({recomputed})"
        )));
    }
    // The stiffness matrix is positive semidefinite; clip the rounding
    // noise a flexible framework's zero eigenvalue can pick up.
    let best_value = raw_best.max(0.0);

    Ok(EstimateResult {
        best_value,
        best_config,
        per_restart,
        a1,
        certificate: a1 - best_value,
        violation: best_value > a1 + 1e-8,
    })
}
