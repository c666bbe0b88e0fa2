//! Measurement protocols: the 3D torque sweep, the 2D retardation
//! crossover, and the rough-surface ensemble, plus power-law fitting.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::config::Checkpoint;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LinkId};
use crate::linalg::{perturbed_logdet_family, schur_complement, Perturbation, SchurPlan};
use crate::materials::{DielectricModel, MaterialMap};
use crate::operators::assemble_da;
use crate::quadrature::{
    build_grid, closure_indices, select_alpha, FrequencyGrid, SceneSummary, WaveOperator,
};
use crate::scenes::{
    build_disk_pair, build_single_disk, flat_surface, generate_rough_surface,
    particle_footprint, place_probe_particle, DiskPairScene, RoughSurfaceScene,
};

/// Geometric separation ladder (factor sqrt(2)) between r_min = 4 and
/// r_max = L/5, as diagonal step counts d with r = d * sqrt(2).
pub fn separation_ladder(l: usize) -> Vec<usize> {
    let r_max = l as f64 / 5.0;
    let mut r = 4.0f64;
    let mut out: Vec<usize> = Vec::new();
    while r <= r_max {
        let d = (r / std::f64::consts::SQRT_2).round() as usize;
        if d >= 2 && out.last() != Some(&d) {
            out.push(d);
        }
        r *= std::f64::consts::SQRT_2;
    }
    out
}

/// Probe-height ladder for surface runs (factor sqrt(2)) from r_min up to
/// r_max, inclusive endpoints where the rounding lands.
pub fn height_ladder(r_min: usize, r_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut r = r_min as f64;
    while r <= r_max as f64 + 0.5 {
        let ri = r.round() as usize;
        if out.last() != Some(&ri) {
            out.push(ri);
        }
        r *= std::f64::consts::SQRT_2;
    }
    out
}

/// Fit window from the design defaults: drop r < 6 and the two largest
/// points.
pub fn default_fit_window(rs: &[f64]) -> (f64, f64) {
    let mut sorted = rs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let hi = if sorted.len() > 2 {
        sorted[sorted.len() - 3]
    } else {
        *sorted.last().unwrap()
    };
    (6.0, hi + 1e-9)
}

// ---------------------------------------------------------------------------
// Power-law fitting

#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub stderr: f64,
    pub points_used: usize,
}

/// Least squares on (ln r, ln |y|) within the window; all y must share one
/// sign there.
pub fn fit_power_law(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    let sel: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(r, _)| r >= window.0 && r <= window.1)
        .collect();
    if sel.len() < 3 {
        return Err(Error::InvalidFit(format!(
            "need at least 3 points in the window, have {}",
            sel.len()
        )));
    }
    let sign = sel[0].1.signum();
    if sign == 0.0 || sel.iter().any(|&(_, y)| y.signum() != sign) {
        return Err(Error::InvalidFit(
            "window contains zero or sign-changing values".into(),
        ));
    }
    let xs: Vec<f64> = sel.iter().map(|&(r, _)| r.ln()).collect();
    let ys: Vec<f64> = sel.iter().map(|&(_, y)| y.abs().ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidFit("degenerate window: single r value".into()));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let stderr = if sel.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(PowerLawFit {
        exponent: slope,
        amplitude: intercept.exp() * sign,
        stderr,
        points_used: sel.len(),
    })
}

// ---------------------------------------------------------------------------
// Online statistics

/// Welford mean/variance accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanVar {
    n: usize,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance (divides by n).
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

// ---------------------------------------------------------------------------
// Shared Schur-sweep machinery

/// One placement in a multi-configuration sweep: the links it stamps and the
/// model stamped onto them.
#[derive(Debug, Clone)]
struct Placement {
    links: Vec<LinkId>,
    model: DielectricModel,
}

/// Evaluate, for every frequency node, the level-3 log-determinants of all
/// placements against a common base map, with one bulk factorization per
/// node. Returns per-placement sums of `w_k J_k / 2pi * v_k` and the count
/// of bulk factorizations performed.
fn schur_sweep(
    base: &MaterialMap,
    placements: &[Placement],
    grid: &FrequencyGrid,
    operator: WaveOperator,
    c: f64,
    checkpoint: Option<(&Checkpoint, &str)>,
) -> Result<SweepOutput> {
    let lat = base.lattice();
    let all_links: Vec<LinkId> = {
        let mut v: Vec<LinkId> = placements.iter().flat_map(|p| p.links.clone()).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let retained = closure_indices(base, operator, &all_links)?;
    let mut zpos: HashMap<usize, usize> = HashMap::new();
    for (k, &g) in retained.iter().enumerate() {
        zpos.insert(g, k);
    }
    let n = match operator {
        WaveOperator::VectorPotential => lat.links(),
        WaveOperator::MagneticPotential => lat.faces(),
    };
    let plan = SchurPlan::retaining(n, &retained)?;
    let factorizations = AtomicUsize::new(0);

    let key_of = |p: usize| -> String {
        match checkpoint {
            Some((_, prefix)) => format!("{prefix}:p={p}"),
            None => format!("p={p}"),
        }
    };

    let node_results: Vec<Result<Vec<(usize, f64)>>> = grid
        .nodes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|node| {
            // Skip the factorization entirely when every placement's value
            // for this node is already checkpointed.
            if let Some((cp, _)) = checkpoint {
                let cached: Vec<Option<f64>> = (0..placements.len())
                    .map(|p| cp.get(&key_of(p), node.index))
                    .collect();
                if cached.iter().all(|v| v.is_some()) {
                    return Ok(cached
                        .into_iter()
                        .enumerate()
                        .map(|(p, v)| (p, v.unwrap()))
                        .collect());
                }
            }
            let da = crate::quadrature::assemble_operator(base, operator, node.omega, c)
                .map_err(|e| e.at_node(node.index))?;
            let res = schur_complement(&da, &plan).map_err(|e| e.at_node(node.index))?;
            factorizations.fetch_add(1, Ordering::Relaxed);
            if res.x_factor.is_ill_conditioned() {
                log::warn!(
                    "tiny pivot in bulk factorization at node {} (omega {:.6e})",
                    node.index,
                    node.omega
                );
            }
            let perturbations: Vec<Perturbation> = placements
                .iter()
                .map(|p| {
                    footprint_perturbation(base, operator, p, node.omega, c, &zpos)
                })
                .collect::<Result<_>>()
                .map_err(|e| e.at_node(node.index))?;
            let family = perturbed_logdet_family(&res.s, &perturbations)
                .map_err(|e| e.at_node(node.index))?;
            let out: Vec<(usize, f64)> = family.into_iter().enumerate().collect();
            if let Some((cp, _)) = checkpoint {
                for &(p, v) in &out {
                    cp.put(&key_of(p), node.index, v);
                }
            }
            Ok(out)
        })
        .collect();

    let mut per_placement = vec![0.0; placements.len()];
    let mut node_values = Vec::with_capacity(grid.len());
    for (node, res) in grid.nodes().zip(node_results) {
        let vals = res?;
        let mut row = vec![0.0; placements.len()];
        for (p, v) in vals {
            per_placement[p] += node.quadrature_weight() * v;
            row[p] = v;
        }
        node_values.push((node.index, node.omega, row));
    }
    Ok(SweepOutput {
        weighted: per_placement,
        node_values,
        factorizations: factorizations.load(Ordering::Relaxed),
    })
}

struct SweepOutput {
    /// Sum over nodes of `w_k J_k / 2pi * v_k(p)` per placement.
    weighted: Vec<f64>,
    /// (node, omega, v per placement) rows for convergence dumps.
    node_values: Vec<(usize, f64, Vec<f64>)>,
    factorizations: usize,
}

/// Operator-entry deltas produced by stamping `placement` onto the vacuum
/// region of `base`, confined to the retained indices.
fn footprint_perturbation(
    base: &MaterialMap,
    operator: WaveOperator,
    placement: &Placement,
    omega: f64,
    c: f64,
    zpos: &HashMap<usize, usize>,
) -> Result<Perturbation> {
    let lat = base.lattice();
    let eps_new = crate::materials::eval_epsilon(placement.model, omega)?;
    let mut subset: Vec<usize> = Vec::new();
    let mut deltas: Vec<(usize, usize, f64)> = Vec::new();
    match operator {
        WaveOperator::VectorPotential => {
            let k2 = omega * omega / (c * c);
            for &l in &placement.links {
                let eps_old = base.epsilon(l, omega)?;
                let &z = zpos.get(&l.0).ok_or(Error::ClosureViolation { index: l.0 })?;
                subset.push(z);
                deltas.push((z, z, (eps_new - eps_old) * k2));
            }
        }
        WaveOperator::MagneticPotential => {
            for &l in &placement.links {
                let eps_old = base.epsilon(l, omega)?;
                let coef = 1.0 / eps_new - 1.0 / eps_old;
                let faces = lat.faces_of_link(l)?;
                let z: Vec<(usize, f64)> = faces
                    .iter()
                    .map(|&(f, s)| {
                        zpos.get(&f.0)
                            .map(|&z| (z, s))
                            .ok_or(Error::ClosureViolation { index: f.0 })
                    })
                    .collect::<Result<_>>()?;
                for (a, &(za, sa)) in z.iter().enumerate() {
                    subset.push(za);
                    for &(zb, sb) in z.iter().skip(a) {
                        let (lo, hi) = (za.min(zb), za.max(zb));
                        deltas.push((lo, hi, sa * sb * coef));
                    }
                }
            }
        }
    }
    subset.sort_unstable();
    subset.dedup();
    Ok(Perturbation { subset, deltas })
}

// ---------------------------------------------------------------------------
// Torque sweep (3D)

#[derive(Debug, Clone)]
pub struct TorqueCurve {
    pub angles: Vec<f64>,
    /// Self-energy run relative to theta = 0: F_self(theta) - F_self(0).
    pub f_self: Vec<f64>,
    /// Pair run relative to theta = 0.
    pub f_both: Vec<f64>,
    /// Interaction energy, zero at theta = 0.
    pub u: Vec<f64>,
    pub factorizations: usize,
    /// Angles whose factorization failed, with the message.
    pub failed: Vec<(f64, String)>,
}

impl TorqueCurve {
    /// Finite-difference torque -dU/dtheta between adjacent angles,
    /// reported at interval midpoints.
    pub fn torque(&self) -> Vec<(f64, f64)> {
        self.angles
            .windows(2)
            .zip(self.u.windows(2))
            .map(|(th, u)| {
                let mid = 0.5 * (th[0] + th[1]);
                (mid, -(u[1] - u[0]) / (th[1] - th[0]))
            })
            .collect()
    }
}

/// Two full-factorization runs per angle and node: a single rotating disk
/// for the self-energy baseline, then the pair. The interaction is
/// `U(theta) = [F_both(theta) - F_both(0)] - [F_self(theta) - F_self(0)]`.
pub fn run_torque_sweep(
    lat: &Lattice,
    template: &DiskPairScene,
    angles: &[f64],
    grid: &FrequencyGrid,
    c: f64,
    checkpoint: Option<&Checkpoint>,
) -> Result<TorqueCurve> {
    if lat.dim() != 3 {
        return Err(Error::InvalidScene("torque sweeps are 3D".into()));
    }
    let mut thetas: Vec<f64> = Vec::new();
    if angles.first() != Some(&0.0) {
        thetas.push(0.0); // the zero reference is always computed
    }
    thetas.extend_from_slice(angles);
    let factorizations = AtomicUsize::new(0);

    // Task grid: (angle index, pair?, node index) -> logdet.
    let tasks: Vec<(usize, bool, usize)> = (0..thetas.len())
        .flat_map(|a| {
            [false, true]
                .into_iter()
                .flat_map(move |pair| (0..grid.len()).map(move |k| (a, pair, k)))
        })
        .collect();
    let results: Vec<(usize, bool, usize, Result<f64>)> = tasks
        .par_iter()
        .map(|&(a, pair, k)| {
            let theta = thetas[a];
            let run = if pair { "both" } else { "self" };
            let key = format!("theta={theta:.9}:{run}");
            if let Some(cp) = checkpoint {
                if let Some(v) = cp.get(&key, k) {
                    return (a, pair, k, Ok(v));
                }
            }
            let scene = DiskPairScene {
                theta,
                ..*template
            };
            let value = (|| -> Result<f64> {
                let map = if pair {
                    build_disk_pair(&scene, lat)?
                } else {
                    build_single_disk(&scene, lat)?
                };
                let node = grid.node(k);
                let op = assemble_da(lat, &map, node.omega, c).map_err(|e| e.at_node(k))?;
                let f = crate::linalg::factorize(&op).map_err(|e| e.at_node(k))?;
                factorizations.fetch_add(1, Ordering::Relaxed);
                Ok(f.logdet())
            })();
            if let (Some(cp), Ok(v)) = (checkpoint, &value) {
                cp.put(&key, k, *v);
            }
            (a, pair, k, value)
        })
        .collect();

    let mut lds = vec![vec![0.0; grid.len()]; thetas.len()];
    let mut ldb = vec![vec![0.0; grid.len()]; thetas.len()];
    let mut failed_idx: Vec<(usize, String)> = Vec::new();
    for (a, pair, k, res) in results {
        match res {
            Ok(v) => {
                if pair {
                    ldb[a][k] = v;
                } else {
                    lds[a][k] = v;
                }
            }
            Err(e) => failed_idx.push((a, e.to_string())),
        }
    }
    let bad: std::collections::HashSet<usize> =
        failed_idx.iter().map(|&(a, _)| a).collect();
    if bad.contains(&0) {
        // Without the zero reference nothing is defined.
        return Err(Error::InvalidScene(format!(
            "torque reference angle failed: {}",
            failed_idx[0].1
        )));
    }
    let mut out_angles = Vec::new();
    let mut f_self = Vec::new();
    let mut f_both = Vec::new();
    let mut u = Vec::new();
    for a in 0..thetas.len() {
        if bad.contains(&a) {
            continue;
        }
        let ds: f64 = grid
            .nodes()
            .map(|n| n.quadrature_weight() * (lds[a][n.index] - lds[0][n.index]))
            .sum();
        let db: f64 = grid
            .nodes()
            .map(|n| n.quadrature_weight() * (ldb[a][n.index] - ldb[0][n.index]))
            .sum();
        out_angles.push(thetas[a]);
        f_self.push(ds);
        f_both.push(db);
        u.push(db - ds);
    }
    Ok(TorqueCurve {
        angles: out_angles,
        f_self,
        f_both,
        u,
        factorizations: factorizations.load(Ordering::Relaxed),
        failed: failed_idx
            .into_iter()
            .map(|(a, m)| (thetas[a], m))
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Crossover sweep (2D)

#[derive(Debug, Clone)]
pub struct SeparationCurve {
    pub label: String,
    pub alpha: f64,
    /// Diagonal step counts d; separations are r = d * sqrt(2).
    pub d_steps: Vec<usize>,
    pub separations: Vec<f64>,
    pub energies: Vec<f64>,
    /// As plotted in 2D: -U r^5.
    pub scaled: Vec<f64>,
    pub factorizations: usize,
    /// (node, omega, logdet difference per separation) for convergence dumps.
    pub node_values: Vec<(usize, f64, Vec<f64>)>,
}

/// One curve: a particle pinned at the origin, the second moved along the
/// box diagonal; zero of energy at the (L/2, L/2) reference placement.
/// One bulk factorization per frequency node serves every separation.
pub fn run_crossover_sweep(
    lat: &Lattice,
    model: DielectricModel,
    label: &str,
    d_steps: &[usize],
    ng: usize,
    alpha_override: Option<f64>,
    c: f64,
    checkpoint: Option<&Checkpoint>,
) -> Result<SeparationCurve> {
    if lat.dim() != 2 {
        return Err(Error::InvalidScene("crossover sweeps are 2D".into()));
    }
    let l = lat.extent(0);
    let base = MaterialMap::vacuum(*lat).stamp_links(&particle_footprint(lat, [0, 0])?, model)?;
    let mut placements: Vec<Placement> = d_steps
        .iter()
        .map(|&d| {
            Ok(Placement {
                links: particle_footprint(lat, [d, d])?,
                model,
            })
        })
        .collect::<Result<_>>()?;
    // Reference placement defining the zero of energy.
    placements.push(Placement {
        links: particle_footprint(lat, [l / 2, l / 2])?,
        model,
    });

    let separations: Vec<f64> = d_steps
        .iter()
        .map(|&d| d as f64 * std::f64::consts::SQRT_2)
        .collect();
    let char_sep = {
        let lo = separations.first().copied().unwrap_or(4.0);
        let hi = separations.last().copied().unwrap_or(l as f64 / 5.0);
        (lo * hi).sqrt()
    };
    let alpha = alpha_override.unwrap_or_else(|| {
        select_alpha(&SceneSummary {
            separation: Some(char_sep),
            min_pole: model.pole_frequency(),
            c,
        })
    });
    let grid = build_grid(alpha, ng)?;
    let cp = checkpoint.map(|cpn| (cpn, label));
    let sweep = schur_sweep(&base, &placements, &grid, WaveOperator::MagneticPotential, c, cp)?;
    let reference = *sweep.weighted.last().unwrap();
    let energies: Vec<f64> = sweep.weighted[..d_steps.len()]
        .iter()
        .map(|&v| v - reference)
        .collect();
    let scaled: Vec<f64> = separations
        .iter()
        .zip(&energies)
        .map(|(&r, &u)| -u * r.powi(5))
        .collect();
    // Per-separation logdet differences against the reference placement.
    let node_values = sweep
        .node_values
        .into_iter()
        .map(|(k, w, row)| {
            let rref = *row.last().unwrap();
            (k, w, row[..d_steps.len()].iter().map(|v| v - rref).collect())
        })
        .collect();
    Ok(SeparationCurve {
        label: label.to_string(),
        alpha,
        d_steps: d_steps.to_vec(),
        separations,
        energies,
        scaled,
        factorizations: sweep.factorizations,
        node_values,
    })
}

// ---------------------------------------------------------------------------
// Rough-surface ensemble (2D)

#[derive(Debug, Clone)]
pub struct RoughEnsembleResult {
    pub heights: Vec<usize>,
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
    pub u_flat: Vec<f64>,
    pub delta_u: Vec<f64>,
    pub attempted: usize,
    pub effective: usize,
    pub seeds: Vec<u64>,
    pub skipped: Vec<(u64, String)>,
    /// Per-realization energies (seed, U per height).
    pub per_realization: Vec<(u64, Vec<f64>)>,
    pub factorizations: usize,
    pub alpha: f64,
}

/// Interaction of a probe with one surface realization at every ladder
/// height, one bulk factorization per frequency node. The zero of energy is
/// a reference placement at the greatest feasible height.
pub fn run_surface_realization(
    lat: &Lattice,
    scene: &RoughSurfaceScene,
    probe: DielectricModel,
    heights: &[usize],
    grid: &FrequencyGrid,
    c: f64,
    checkpoint: Option<(&Checkpoint, &str)>,
) -> Result<(Vec<f64>, usize)> {
    let l = lat.extent(1);
    let cx = lat.extent(0) / 2;
    let base = scene.build(lat)?;
    // The probe sits a distance r above the local surface, not the nominal
    // fill level: its footprint spans columns cx and cx+1, so the local
    // height is the taller of the two. Measuring from the nominal level
    // would fold the full interface roughness into the separation.
    let h_local = scene.heights[cx].max(scene.heights[(cx + 1) % scene.heights.len()]);
    if h_local < 0 || h_local as usize >= l {
        return Err(Error::InvalidScene(format!(
            "surface height {h_local} under the probe leaves no vacuum"
        )));
    }
    let h_local = h_local as usize;
    // The box is periodic, so the farthest point from the interface is the
    // middle of the local vacuum gap, not the top of the box.
    let r_ref = (l - h_local) / 2;
    let mut placements: Vec<Placement> = Vec::new();
    for &r in heights {
        if r >= r_ref {
            return Err(Error::InvalidScene(format!(
                "probe height {r} reaches the reference height {r_ref}"
            )));
        }
        // Validates clearance from the interface.
        place_probe_particle(&base, h_local, r, probe)?;
        placements.push(Placement {
            links: particle_footprint(lat, [cx, h_local + r])?,
            model: probe,
        });
    }
    place_probe_particle(&base, h_local, r_ref, probe)?;
    placements.push(Placement {
        links: particle_footprint(lat, [cx, h_local + r_ref])?,
        model: probe,
    });
    let sweep = schur_sweep(
        &base,
        &placements,
        grid,
        WaveOperator::MagneticPotential,
        c,
        checkpoint,
    )?;
    let reference = *sweep.weighted.last().unwrap();
    Ok((
        sweep.weighted[..heights.len()]
            .iter()
            .map(|&v| v - reference)
            .collect(),
        sweep.factorizations,
    ))
}

/// Ensemble over solid-on-solid realizations plus the flat baseline in the
/// same box. Realizations whose probe ladder collides with the interface
/// are skipped and logged; the effective count is reported.
#[allow(clippy::too_many_arguments)]
pub fn run_rough_ensemble(
    lat: &Lattice,
    surface_model: DielectricModel,
    probe: DielectricModel,
    heights: &[usize],
    realizations: usize,
    seed0: u64,
    ng: usize,
    alpha_override: Option<f64>,
    c: f64,
    checkpoint: Option<&Checkpoint>,
) -> Result<RoughEnsembleResult> {
    if lat.dim() != 2 {
        return Err(Error::InvalidScene("rough ensembles are 2D".into()));
    }
    let l = lat.extent(0);
    let char_sep = {
        let lo = *heights.first().unwrap() as f64;
        let hi = *heights.last().unwrap() as f64;
        (lo * hi).sqrt()
    };
    let alpha = alpha_override.unwrap_or_else(|| {
        select_alpha(&SceneSummary {
            separation: Some(char_sep),
            min_pole: surface_model.pole_frequency().or(probe.pole_frequency()),
            c,
        })
    });
    let grid = build_grid(alpha, ng)?;

    let flat = flat_surface(l, surface_model);
    let (u_flat, flat_facts) = run_surface_realization(
        lat,
        &flat,
        probe,
        heights,
        &grid,
        c,
        checkpoint.map(|cp| (cp, "flat")),
    )?;

    let seeds: Vec<u64> = (0..realizations as u64).map(|i| seed0 + i).collect();
    let runs: Vec<(u64, Result<(Vec<f64>, usize)>)> = seeds
        .par_iter()
        .map(|&seed| {
            let key = format!("seed={seed}");
            let res = generate_rough_surface(l, seed, surface_model).and_then(|scene| {
                run_surface_realization(
                    lat,
                    &scene,
                    probe,
                    heights,
                    &grid,
                    c,
                    checkpoint.map(|cp| (cp, key.as_str())),
                )
            });
            (seed, res)
        })
        .collect();

    let mut acc: Vec<MeanVar> = vec![MeanVar::default(); heights.len()];
    let mut per_realization = Vec::new();
    let mut skipped = Vec::new();
    let mut factorizations = flat_facts;
    for (seed, res) in runs {
        match res {
            Ok((u, f)) => {
                factorizations += f;
                for (i, &v) in u.iter().enumerate() {
                    acc[i].push(v);
                }
                per_realization.push((seed, u));
            }
            Err(e) => {
                log::info!("realization seed {seed} skipped: {e}");
                skipped.push((seed, e.to_string()));
            }
        }
    }
    let effective = per_realization.len();
    if effective < 2 {
        return Err(Error::InvalidScene(format!(
            "only {effective} usable realizations out of {realizations}"
        )));
    }
    let mean: Vec<f64> = acc.iter().map(|a| a.mean()).collect();
    let sigma: Vec<f64> = acc.iter().map(|a| a.std_dev()).collect();
    let delta_u: Vec<f64> = mean.iter().zip(&u_flat).map(|(m, f)| m - f).collect();
    Ok(RoughEnsembleResult {
        heights: heights.to_vec(),
        mean,
        sigma,
        u_flat,
        delta_u,
        attempted: realizations,
        effective,
        seeds,
        skipped,
        per_realization,
        factorizations,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladders() {
        let d = separation_ladder(256);
        assert!(d.first().copied().unwrap() >= 2);
        assert!(*d.last().unwrap() as f64 * std::f64::consts::SQRT_2 <= 256.0 / 5.0 + 1.0);
        for w in d.windows(2) {
            assert!(w[1] > w[0]);
        }
        let h = height_ladder(8, 32);
        assert_eq!(h.first(), Some(&8));
        assert_eq!(h.last(), Some(&32));
    }

    #[test]
    fn fit_exact_power_laws() {
        let pts: Vec<(f64, f64)> = (2..20).map(|i| (i as f64, (i as f64).powi(-5))).collect();
        let fit = fit_power_law(&pts, (2.0, 20.0)).unwrap();
        assert!((fit.exponent + 5.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = (2..20).map(|i| (i as f64, 3.0 * (i as f64).powi(-4))).collect();
        let fit = fit_power_law(&pts, (2.0, 20.0)).unwrap();
        assert!((fit.exponent + 4.0).abs() < 1e-12);
        assert!((fit.amplitude - 3.0).abs() < 1e-10);
    }

    #[test]
    fn fit_noisy_power_law() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut exps = Vec::new();
        for _ in 0..50 {
            let pts: Vec<(f64, f64)> = (4..40)
                .map(|i| {
                    let r = i as f64;
                    (r, r.powi(-3) * (1.0 + rng.gen_range(-0.01..0.01)))
                })
                .collect();
            exps.push(fit_power_law(&pts, (4.0, 40.0)).unwrap().exponent);
        }
        let mean = exps.iter().sum::<f64>() / exps.len() as f64;
        assert!((mean + 3.0).abs() < 0.05);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let pts = vec![(1.0, 1.0), (2.0, -1.0), (3.0, 1.0)];
        assert!(fit_power_law(&pts, (0.5, 4.0)).is_err());
        let pts = vec![(1.0, 1.0), (2.0, 0.5)];
        assert!(fit_power_law(&pts, (0.5, 4.0)).is_err());
    }

    #[test]
    fn welford_matches_two_pass() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..500).map(|_| rng.gen_range(-2.0..5.0)).collect();
        let mut acc = MeanVar::default();
        for &x in &xs {
            acc.push(x);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((acc.mean() - mean).abs() < 1e-12);
        assert!((acc.variance() - var).abs() < 1e-12);
    }

    #[test]
    fn crossover_small_box() {
        // Desk-scale smoke test: energies are attractive and decay, and the
        // sweep does exactly one factorization per node.
        let lat = Lattice::new_2d(32, 32).unwrap();
        let curve = run_crossover_sweep(
            &lat,
            DielectricModel::constant(8.0),
            "test",
            &[3, 4],
            6,
            None,
            1.0,
            None,
        )
        .unwrap();
        assert_eq!(curve.factorizations, 6);
        assert!(curve.energies[0] < 0.0, "near pair should attract");
        assert!(
            curve.energies[0] < curve.energies[1],
            "|U| must decay with separation: {:?}",
            curve.energies
        );
    }

    #[test]
    fn crossover_matches_direct_subtraction() {
        // Protocol equivalence: Schur-swept energies equal two-configuration
        // free energy differences computed independently.
        let lat = Lattice::new_2d(24, 24).unwrap();
        let model = DielectricModel::single_pole(7.0, 0.5);
        let curve = run_crossover_sweep(&lat, model, "x", &[3], 6, Some(0.2), 1.0, None).unwrap();
        let base = MaterialMap::vacuum(lat)
            .stamp_links(&particle_footprint(&lat, [0, 0]).unwrap(), model)
            .unwrap();
        let near = base
            .stamp_links(&particle_footprint(&lat, [3, 3]).unwrap(), model)
            .unwrap();
        let far = base
            .stamp_links(&particle_footprint(&lat, [12, 12]).unwrap(), model)
            .unwrap();
        let grid = build_grid(0.2, 6).unwrap();
        let direct = crate::quadrature::free_energy_difference_direct(
            &near,
            &far,
            &grid,
            WaveOperator::MagneticPotential,
            1.0,
        )
        .unwrap();
        assert!(
            (curve.energies[0] - direct).abs() < 1e-6 * direct.abs(),
            "{} vs {direct}",
            curve.energies[0]
        );
    }

    #[test]
    fn flat_surface_attracts() {
        let lat = Lattice::new_2d(32, 32).unwrap();
        let eps = DielectricModel::constant(8.0);
        let scene = flat_surface(32, eps);
        let grid = build_grid(0.2, 6).unwrap();
        let (u, facts) =
            run_surface_realization(&lat, &scene, eps, &[4, 6], &grid, 1.0, None).unwrap();
        assert_eq!(facts, 6);
        assert!(u[0] < 0.0);
        assert!(u[0] < u[1]);
    }
}
