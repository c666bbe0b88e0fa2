//! Frequency integration.
//!
//! The semi-infinite frequency integral is mapped to the unit interval with
//! `omega = alpha z / (1 - z)` and evaluated by N_g-point Gauss-Legendre
//! quadrature. Free energy differences are weighted sums of per-node
//! log-determinant differences with prefactor `d omega / 2 pi`; the 1/2pi
//! lives here and nowhere else.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::FaceId;
use crate::linalg::{perturbed_logdet_family, schur_complement, Perturbation, SchurPlan};
use crate::materials::MaterialMap;
use crate::operators::{assemble_da, assemble_dg, SparseOperator};

/// Which wave operator carries the calculation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveOperator {
    /// D_A on links; used in 3D and for cross-validation.
    VectorPotential,
    /// D_G on faces; the 2D production operator.
    MagneticPotential,
}

#[derive(Debug, Clone, Copy)]
pub struct GridNode {
    pub index: usize,
    pub z: f64,
    pub weight: f64,
    pub omega: f64,
    pub jacobian: f64,
}

impl GridNode {
    /// Full quadrature weight for a log-determinant difference:
    /// `w_k J_k / 2 pi`.
    pub fn quadrature_weight(&self) -> f64 {
        self.weight * self.jacobian / (2.0 * PI)
    }
}

#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    alpha: f64,
    nodes: Vec<GridNode>,
}

impl FrequencyGrid {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = GridNode> + '_ {
        self.nodes.iter().copied()
    }

    pub fn node(&self, k: usize) -> GridNode {
        self.nodes[k]
    }
}

/// Gauss-Legendre nodes and weights on (0, 1), by Newton iteration on the
/// Legendre polynomial to 1e-14. Weights sum to one.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Root of P_n on (-1, 1), highest first.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            // Legendre recurrence for P_n(x) and P_n'(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-14 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let wi = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map (-1,1) -> (0,1); x is the (i+1)-th largest root.
        z[n - 1 - i] = 0.5 * (1.0 + x);
        z[i] = 0.5 * (1.0 - x);
        w[n - 1 - i] = 0.5 * wi;
        w[i] = 0.5 * wi;
    }
    (z, w)
}

/// Build the frequency grid for scale `alpha` and `n_g` nodes.
pub fn build_grid(alpha: f64, n_g: usize) -> Result<FrequencyGrid> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidQuadrature(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if n_g < 2 {
        return Err(Error::InvalidQuadrature(format!(
            "need at least 2 quadrature nodes, got {n_g}"
        )));
    }
    let (z, w) = gauss_legendre_unit(n_g);
    let nodes = z
        .iter()
        .zip(w.iter())
        .enumerate()
        .map(|(index, (&zk, &wk))| GridNode {
            index,
            z: zk,
            weight: wk,
            omega: alpha * zk / (1.0 - zk),
            jacobian: alpha / ((1.0 - zk) * (1.0 - zk)),
        })
        .collect();
    Ok(FrequencyGrid { alpha, nodes })
}

/// Characteristic scales of a scene, used to pick alpha.
#[derive(Debug, Clone, Copy)]
pub struct SceneSummary {
    /// Characteristic separation in lattice units, if the scene has one.
    pub separation: Option<f64>,
    /// Smallest finite pole frequency among the materials, if any.
    pub min_pole: Option<f64>,
    pub c: f64,
}

/// `alpha = min(c/d, omega0)` when a dispersive material exists, else `c/d`;
/// falls back to `c` (with a warning) when no scale is available.
pub fn select_alpha(summary: &SceneSummary) -> f64 {
    match (summary.separation, summary.min_pole) {
        (Some(d), Some(w0)) => (summary.c / d).min(w0),
        (Some(d), None) => summary.c / d,
        (None, Some(w0)) => w0,
        (None, None) => {
            log::warn!("no characteristic scale available; falling back to alpha = c");
            summary.c
        }
    }
}

/// Assemble the chosen wave operator at one frequency.
pub fn assemble_operator(
    map: &MaterialMap,
    operator: WaveOperator,
    omega: f64,
    c: f64,
) -> Result<SparseOperator> {
    let lat = *map.lattice();
    match operator {
        WaveOperator::VectorPotential => assemble_da(&lat, map, omega, c),
        WaveOperator::MagneticPotential => assemble_dg(&lat, map, omega, c),
    }
}

/// Matrix indices whose operator entries can change when the given links
/// change material: the links themselves for D_A (material enters only the
/// diagonal), the incident faces for D_G.
pub fn closure_indices(
    map: &MaterialMap,
    operator: WaveOperator,
    links: &[crate::lattice::LinkId],
) -> Result<Vec<usize>> {
    let lat = map.lattice();
    let mut idx: Vec<usize> = match operator {
        WaveOperator::VectorPotential => links.iter().map(|l| l.0).collect(),
        WaveOperator::MagneticPotential => {
            let mut faces: Vec<usize> = Vec::new();
            for &l in links {
                for (f, _) in lat.faces_of_link(l)? {
                    faces.push(f.0);
                }
            }
            faces
        }
    };
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

/// Per-node contribution to a free energy difference.
#[derive(Debug, Clone, Copy)]
pub struct NodeContribution {
    pub node: usize,
    pub omega: f64,
    pub logdet_diff: f64,
    pub weighted: f64,
}

/// Free energy difference `U^{1,2}` between two configurations on the same
/// lattice, evaluated through the Schur path: one bulk factorization per
/// node serves both configurations.
pub fn free_energy_difference(
    cfg1: &MaterialMap,
    cfg2: &MaterialMap,
    grid: &FrequencyGrid,
    operator: WaveOperator,
    c: f64,
) -> Result<f64> {
    Ok(free_energy_difference_detailed(cfg1, cfg2, grid, operator, c)?.0)
}

/// As `free_energy_difference` but also returns per-node contributions for
/// convergence inspection. The configuration pair is canonicalized before
/// evaluation so that swapping arguments flips the sign exactly.
pub fn free_energy_difference_detailed(
    cfg1: &MaterialMap,
    cfg2: &MaterialMap,
    grid: &FrequencyGrid,
    operator: WaveOperator,
    c: f64,
) -> Result<(f64, Vec<NodeContribution>)> {
    let diff = cfg1.differing_links(cfg2)?;
    if diff.is_empty() {
        let nodes = grid
            .nodes()
            .map(|n| NodeContribution {
                node: n.index,
                omega: n.omega,
                logdet_diff: 0.0,
                weighted: 0.0,
            })
            .collect();
        return Ok((0.0, nodes));
    }
    // Canonical order: antisymmetry must hold exactly, so both argument
    // orders evaluate the same base problem and only the sign differs.
    let swap = {
        let key = |m: &MaterialMap| {
            diff.iter()
                .map(|&l| format!("{:?}", m.model_of(l)))
                .collect::<Vec<_>>()
                .join(";")
        };
        key(cfg1) > key(cfg2)
    };
    let (a, b) = if swap { (cfg2, cfg1) } else { (cfg1, cfg2) };
    let sign = if swap { -1.0 } else { 1.0 };

    let retained = closure_indices(a, operator, &diff)?;
    let lat = a.lattice();
    let n = match operator {
        WaveOperator::VectorPotential => lat.links(),
        WaveOperator::MagneticPotential => lat.faces(),
    };
    let plan = SchurPlan::retaining(n, &retained)?;
    let subset: Vec<usize> = (0..retained.len()).collect();
    let mut total = 0.0;
    let mut contributions = Vec::with_capacity(grid.len());
    for node in grid.nodes() {
        let da = assemble_operator(a, operator, node.omega, c)
            .map_err(|e| e.at_node(node.index))?;
        let db = assemble_operator(b, operator, node.omega, c)
            .map_err(|e| e.at_node(node.index))?;
        let res = schur_complement(&da, &plan).map_err(|e| e.at_node(node.index))?;
        if res.x_factor.is_ill_conditioned() {
            log::warn!(
                "tiny pivot in the bulk factorization at frequency node {} (omega = {:.6e})",
                node.index,
                node.omega
            );
        }
        // D_b differs from D_a only inside the retained block.
        let mut deltas = Vec::new();
        for (i, &gi) in retained.iter().enumerate() {
            for (j, &gj) in retained.iter().enumerate().skip(i) {
                let dv = db.get(gi, gj) - da.get(gi, gj);
                if dv != 0.0 {
                    deltas.push((i, j, dv));
                }
            }
        }
        let family = perturbed_logdet_family(
            &res.s,
            &[
                Perturbation {
                    subset: subset.clone(),
                    deltas: Vec::new(),
                },
                Perturbation {
                    subset: subset.clone(),
                    deltas,
                },
            ],
        )
        .map_err(|e| e.at_node(node.index))?;
        let logdet_diff = sign * (family[0] - family[1]);
        let weighted = node.quadrature_weight() * logdet_diff;
        total += weighted;
        contributions.push(NodeContribution {
            node: node.index,
            omega: node.omega,
            logdet_diff,
            weighted,
        });
    }
    Ok((total, contributions))
}

/// Same contract evaluated naively with two full factorizations per node;
/// retained for round-off studies and cross-checks.
pub fn free_energy_difference_direct(
    cfg1: &MaterialMap,
    cfg2: &MaterialMap,
    grid: &FrequencyGrid,
    operator: WaveOperator,
    c: f64,
) -> Result<f64> {
    if cfg1.lattice() != cfg2.lattice() {
        return Err(Error::LatticeMismatch(
            "free energy difference over different lattices".into(),
        ));
    }
    let mut total = 0.0;
    for node in grid.nodes() {
        let d1 = assemble_operator(cfg1, operator, node.omega, c)
            .map_err(|e| e.at_node(node.index))?;
        let d2 = assemble_operator(cfg2, operator, node.omega, c)
            .map_err(|e| e.at_node(node.index))?;
        let l1 = crate::linalg::sparse_logdet(&d1).map_err(|e| e.at_node(node.index))?;
        let l2 = crate::linalg::sparse_logdet(&d2).map_err(|e| e.at_node(node.index))?;
        total += node.quadrature_weight() * (l1 - l2);
    }
    Ok(total)
}

/// Faces bounding the plaquette footprints, exposed for experiment planning.
pub fn faces_touched_by_links(
    map: &MaterialMap,
    links: &[crate::lattice::LinkId],
) -> Result<Vec<FaceId>> {
    let lat = map.lattice();
    let mut faces = Vec::new();
    for &l in links {
        for (f, _) in lat.faces_of_link(l)? {
            faces.push(f);
        }
    }
    faces.sort_unstable();
    faces.dedup();
    Ok(faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::materials::DielectricModel;

    #[test]
    fn two_point_rule() {
        let grid = build_grid(1.0, 2).unwrap();
        let z: Vec<f64> = grid.nodes().map(|n| n.z).collect();
        let w: Vec<f64> = grid.nodes().map(|n| n.weight).collect();
        let s3 = 1.0 / (2.0 * 3f64.sqrt());
        assert!((z[0] - (0.5 - s3)).abs() < 1e-14);
        assert!((z[1] - (0.5 + s3)).abs() < 1e-14);
        assert!((w[0] - 0.5).abs() < 1e-14);
        assert!((w[1] - 0.5).abs() < 1e-14);
        // Exact for cubics: integral of z^2 over (0,1).
        let quad: f64 = grid.nodes().map(|n| n.weight * n.z * n.z).sum();
        assert!((quad - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn substitution_midpoint() {
        let grid = build_grid(2.0, 5).unwrap();
        // omega(z = 1/2) = alpha.
        let omega_at = |z: f64| 2.0 * z / (1.0 - z);
        assert_eq!(omega_at(0.5), 2.0);
        // Nodes strictly interior and increasing.
        let omegas: Vec<f64> = grid.nodes().map(|n| n.omega).collect();
        for k in 1..omegas.len() {
            assert!(omegas[k] > omegas[k - 1]);
            assert!(omegas[k].is_finite() && omegas[k] > 0.0);
        }
        let wsum: f64 = grid.nodes().map(|n| n.weight).sum();
        assert!((wsum - 1.0).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_large_n() {
        for n in [8, 20, 25, 40] {
            let (z, w) = gauss_legendre_unit(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            for k in 1..n {
                assert!(z[k] > z[k - 1]);
            }
            // Exactness for a polynomial of degree 2n-1.
            let p = 2 * n - 1;
            let quad: f64 = z.iter().zip(&w).map(|(&zi, &wi)| wi * zi.powi(p as i32)).sum();
            assert!((quad - 1.0 / (p as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_grid_rejected() {
        assert!(build_grid(0.0, 8).is_err());
        assert!(build_grid(1.0, 1).is_err());
    }

    #[test]
    fn alpha_selection() {
        let c = 1.0;
        let a = select_alpha(&SceneSummary {
            separation: Some(10.0),
            min_pole: None,
            c,
        });
        assert!((a - 0.1).abs() < 1e-15);
        let a = select_alpha(&SceneSummary {
            separation: Some(10.0),
            min_pole: Some(0.01),
            c,
        });
        assert!((a - 0.01).abs() < 1e-15);
        let a = select_alpha(&SceneSummary {
            separation: None,
            min_pole: None,
            c,
        });
        assert_eq!(a, c);
    }

    #[test]
    fn identical_configs_zero() {
        let lat = Lattice::new_2d(6, 6).unwrap();
        let map = MaterialMap::vacuum(lat);
        let grid = build_grid(1.0, 4).unwrap();
        let u =
            free_energy_difference(&map, &map, &grid, WaveOperator::MagneticPotential, 1.0)
                .unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn antisymmetry_exact() {
        let lat = Lattice::new_2d(8, 8).unwrap();
        let vac = MaterialMap::vacuum(lat);
        let eps = DielectricModel::constant(8.0);
        let f1 = lat.encode_face(lat.site_index([2, 2, 0]), 0);
        let f2 = lat.encode_face(lat.site_index([5, 5, 0]), 0);
        let links1: Vec<_> = lat.links_of_face(f1).unwrap().iter().map(|&(l, _)| l).collect();
        let links2: Vec<_> = lat.links_of_face(f2).unwrap().iter().map(|&(l, _)| l).collect();
        let a = vac.stamp_links(&links1, eps).unwrap();
        let b = vac.stamp_links(&links2, eps).unwrap();
        let grid = build_grid(0.5, 6).unwrap();
        let uab =
            free_energy_difference(&a, &b, &grid, WaveOperator::MagneticPotential, 1.0).unwrap();
        let uba =
            free_energy_difference(&b, &a, &grid, WaveOperator::MagneticPotential, 1.0).unwrap();
        assert_eq!(uab, -uba);
    }

    #[test]
    fn symmetry_related_configs_cancel() {
        // Two placements swapped by a lattice translation give zero energy
        // difference within round-off.
        let lat = Lattice::new_2d(8, 8).unwrap();
        let vac = MaterialMap::vacuum(lat);
        let eps = DielectricModel::constant(5.0);
        let place = |x: usize, y: usize| {
            let f = lat.encode_face(lat.site_index([x, y, 0]), 0);
            let links: Vec<_> =
                lat.links_of_face(f).unwrap().iter().map(|&(l, _)| l).collect();
            vac.stamp_links(&links, eps).unwrap()
        };
        let a = place(1, 1);
        let b = place(5, 5);
        let grid = build_grid(0.5, 6).unwrap();
        let u =
            free_energy_difference(&a, &b, &grid, WaveOperator::MagneticPotential, 1.0).unwrap();
        assert!(u.abs() < 1e-10, "u = {u}");
    }

    #[test]
    fn schur_path_matches_direct() {
        // Particle 1 fixed at the origin; particle 2 close vs far, so the
        // energy difference is a genuine pair interaction.
        let lat = Lattice::new_2d(8, 8).unwrap();
        let vac = MaterialMap::vacuum(lat);
        let eps = DielectricModel::single_pole(7.0, 1.0);
        let plaquette = |x: usize, y: usize| -> Vec<_> {
            let f = lat.encode_face(lat.site_index([x, y, 0]), 0);
            lat.links_of_face(f).unwrap().iter().map(|&(l, _)| l).collect()
        };
        let base = vac.stamp_links(&plaquette(0, 0), eps).unwrap();
        let a = base.stamp_links(&plaquette(2, 2), eps).unwrap();
        let b = base.stamp_links(&plaquette(4, 4), eps).unwrap();
        let grid = build_grid(0.8, 8).unwrap();
        let u1 =
            free_energy_difference(&a, &b, &grid, WaveOperator::MagneticPotential, 1.0).unwrap();
        let u2 = free_energy_difference_direct(&a, &b, &grid, WaveOperator::MagneticPotential, 1.0)
            .unwrap();
        assert!(u1.abs() > 1e-8, "pair interaction unexpectedly tiny: {u1}");
        assert!((u1 - u2).abs() < 1e-6 * u1.abs(), "{u1} vs {u2}");
    }
}
