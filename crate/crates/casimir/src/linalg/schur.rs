//! Block Schur elimination.
//!
//! A symmetric operator is split as D = [[X, Y], [Y^T, Z]] with the bulk in
//! X and the retained indices in Z, giving `ln det D = ln det X + ln det S`
//! with `S = Z - Y^T X^{-1} Y`. A further dense level works inside S:
//! configurations that perturb only declared subsets of Z are compared
//! through the log-determinant of the small Schur block over the union of
//! touched indices, so the extensive bulk terms never enter a difference.

use crate::error::{Error, Result};
use crate::operators::SparseOperator;

use super::cholesky::{factorize, CholeskyFactor};
use super::dense::DenseSym;

/// Index partition for block elimination. `z_indices` keeps its given order;
/// every matrix entry that can differ between compared configurations must
/// lie inside the Z block.
#[derive(Debug, Clone)]
pub struct SchurPlan {
    pub x_indices: Vec<usize>,
    pub z_indices: Vec<usize>,
}

impl SchurPlan {
    /// Build a plan from the retained set; X is everything else, in order.
    pub fn retaining(n: usize, z_indices: &[usize]) -> Result<Self> {
        let mut in_z = vec![false; n];
        for &z in z_indices {
            if z >= n {
                return Err(Error::InvalidPartition(format!(
                    "retained index {z} out of range for dimension {n}"
                )));
            }
            if in_z[z] {
                return Err(Error::InvalidPartition(format!(
                    "retained index {z} listed twice"
                )));
            }
            in_z[z] = true;
        }
        let x_indices = (0..n).filter(|&i| !in_z[i]).collect();
        Ok(Self {
            x_indices,
            z_indices: z_indices.to_vec(),
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.x_indices.iter().chain(self.z_indices.iter()) {
            if i >= n || seen[i] {
                return Err(Error::InvalidPartition(format!(
                    "index {i} out of range or duplicated"
                )));
            }
            seen[i] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidPartition(
                "X and Z do not cover every index".into(),
            ));
        }
        Ok(())
    }
}

/// Result of eliminating the bulk block.
pub struct SchurResult {
    pub x_factor: CholeskyFactor,
    /// Dense Schur complement over the retained indices, in plan order.
    pub s: DenseSym,
}

/// Factor X and form `S = Z - U^T U` where `L_x U = Y`.
pub fn schur_complement(a: &SparseOperator, plan: &SchurPlan) -> Result<SchurResult> {
    plan.validate(a.ncols)?;
    let nx = plan.x_indices.len();
    let nz = plan.z_indices.len();
    // pos[i] = position within X (when < nx) or nx + position within Z.
    let mut pos = vec![usize::MAX; a.ncols];
    for (k, &i) in plan.x_indices.iter().enumerate() {
        pos[i] = k;
    }
    for (k, &i) in plan.z_indices.iter().enumerate() {
        pos[i] = nx + k;
    }
    let mut x_triplets = Vec::new();
    let mut y_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nz];
    let mut z_block = DenseSym::zeros(nz);
    for c in 0..a.ncols {
        let pc = pos[c];
        for p in a.colptr[c]..a.colptr[c + 1] {
            let pr = pos[a.rowind[p]];
            let v = a.values[p];
            match (pr < nx, pc < nx) {
                (true, true) => x_triplets.push((pr, pc, v)),
                (true, false) => y_cols[pc - nx].push((pr, v)),
                (false, true) => {} // symmetric image of a Y entry
                (false, false) => {
                    if pr <= pc {
                        z_block.set(pr - nx, pc - nx, v);
                    }
                }
            }
        }
    }
    let x = SparseOperator::from_triplets(nx, nx, &x_triplets, true);
    let x_factor = factorize(&x)?;
    // Forward solves against each Y column, then S = Z - U^T U.
    let mut inv = vec![0usize; nx];
    for (new, &old) in x_factor.permutation().iter().enumerate() {
        inv[old] = new;
    }
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(nz);
    for col in &y_cols {
        let mut b = vec![0f64; nx];
        for &(i, v) in col {
            b[inv[i]] = v;
        }
        x_factor.forward_solve_permuted(&mut b);
        u_cols.push(b);
    }
    let mut s = z_block;
    for i in 0..nz {
        for j in i..nz {
            let dot: f64 = u_cols[i]
                .iter()
                .zip(u_cols[j].iter())
                .map(|(a, b)| a * b)
                .sum();
            let v = s.get(i, j) - dot;
            s.set(i, j, v);
        }
    }
    Ok(SchurResult { x_factor, s })
}

/// Entry perturbation confined to a declared subset of the retained block.
/// Indices are positions within the plan's Z ordering.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub subset: Vec<usize>,
    /// (i, j, delta) with i <= j; the symmetric image is implied.
    pub deltas: Vec<(usize, usize, f64)>,
}

/// Log-determinants of `S_vac + delta_k`, all relative to the same additive
/// constant `ln det` of the untouched complement. Differences between
/// returned values equal differences of full log-determinants exactly.
pub fn perturbed_logdet_family(
    s_vac: &DenseSym,
    perturbations: &[Perturbation],
) -> Result<Vec<f64>> {
    let n = s_vac.dim();
    let mut touched = vec![false; n];
    for p in perturbations {
        let mut in_subset = vec![false; n];
        for &i in &p.subset {
            if i >= n {
                return Err(Error::InvalidPartition(format!(
                    "subset index {i} out of range for S of dimension {n}"
                )));
            }
            in_subset[i] = true;
            touched[i] = true;
        }
        for &(i, j, _) in &p.deltas {
            if i >= n || j >= n {
                return Err(Error::InvalidPartition(format!(
                    "delta entry ({i},{j}) out of range"
                )));
            }
            if !in_subset[i] {
                return Err(Error::ClosureViolation { index: i });
            }
            if !in_subset[j] {
                return Err(Error::ClosureViolation { index: j });
            }
        }
    }
    let union: Vec<usize> = (0..n).filter(|&i| touched[i]).collect();
    let complement: Vec<usize> = (0..n).filter(|&i| !touched[i]).collect();
    // One dense elimination of the untouched complement serves every
    // configuration; each perturbation then only costs a small logdet.
    let core = s_vac.schur_onto(&union, &complement)?;
    let mut upos = vec![usize::MAX; n];
    for (k, &i) in union.iter().enumerate() {
        upos[i] = k;
    }
    let mut out = Vec::with_capacity(perturbations.len());
    for p in perturbations {
        let mut m = core.clone();
        for &(i, j, dv) in &p.deltas {
            let (a, b) = (upos[i], upos[j]);
            m.add(a.min(b), a.max(b), dv);
        }
        out.push(m.logdet()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_spd_dense(n: usize, seed: u64) -> DenseSym {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseSym::zeros(n);
        for i in 0..n {
            m.set(i, i, n as f64 + rng.gen_range(0.0..1.0));
            for j in 0..i {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    fn to_sparse(m: &DenseSym) -> SparseOperator {
        let n = m.dim();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if m.get(i, j) != 0.0 {
                    t.push((i, j, m.get(i, j)));
                }
            }
        }
        SparseOperator::from_triplets(n, n, &t, true)
    }

    #[test]
    fn two_by_two() {
        let a = SparseOperator::from_triplets(
            2,
            2,
            &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)],
            true,
        );
        let plan = SchurPlan::retaining(2, &[1]).unwrap();
        let r = schur_complement(&a, &plan).unwrap();
        assert!((r.s.get(0, 0) - 2.5).abs() < 1e-15);
        let total = r.x_factor.logdet() + r.s.logdet().unwrap();
        assert!((total - 5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn decoupled_blocks_pass_through() {
        // Y = 0: S equals the Z block exactly.
        let mut t = vec![(0, 0, 4.0), (1, 1, 3.0), (2, 2, 5.0), (2, 3, 0.5), (3, 2, 0.5), (3, 3, 2.0)];
        t.push((0, 1, 0.25));
        t.push((1, 0, 0.25));
        let a = SparseOperator::from_triplets(4, 4, &t, true);
        let plan = SchurPlan::retaining(4, &[2, 3]).unwrap();
        let r = schur_complement(&a, &plan).unwrap();
        assert_eq!(r.s.get(0, 0), 5.0);
        assert_eq!(r.s.get(0, 1), 0.5);
        assert_eq!(r.s.get(1, 1), 2.0);
    }

    #[test]
    fn logdet_identity_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for trial in 0..8 {
            let n = rng.gen_range(10..60);
            let dense = random_spd_dense(n, 100 + trial);
            let a = to_sparse(&dense);
            let nz = rng.gen_range(1..n / 2);
            let mut z: Vec<usize> = (0..n).collect();
            for i in 0..n {
                let j = rng.gen_range(0..n);
                z.swap(i, j);
            }
            z.truncate(nz);
            let plan = SchurPlan::retaining(n, &z).unwrap();
            let r = schur_complement(&a, &plan).unwrap();
            let split = r.x_factor.logdet() + r.s.logdet().unwrap();
            let full = factorize(&a).unwrap().logdet();
            assert!(
                (split - full).abs() / full.abs() < 1e-10,
                "trial {trial}: {split} vs {full}"
            );
        }
    }

    #[test]
    fn scalar_perturbation() {
        let s = random_spd_dense(6, 7);
        // Schur value of index 2 after eliminating everything else.
        let keep = [2usize];
        let drop: Vec<usize> = (0..6).filter(|&i| i != 2).collect();
        let sv = s.schur_onto(&keep, &drop).unwrap().get(0, 0);
        let d = 0.75;
        let fam = perturbed_logdet_family(
            &s,
            &[Perturbation {
                subset: vec![2],
                deltas: vec![(2, 2, d)],
            }],
        )
        .unwrap();
        assert!((fam[0] - (sv + d).ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_deltas_zero_difference() {
        let s = random_spd_dense(8, 3);
        let p = Perturbation {
            subset: vec![1, 4],
            deltas: vec![],
        };
        let fam = perturbed_logdet_family(&s, &[p.clone(), p]).unwrap();
        assert_eq!(fam[0], fam[1]);
    }

    #[test]
    fn differences_match_dense_oracle() {
        let s = random_spd_dense(12, 5);
        let p1 = Perturbation {
            subset: vec![0, 3],
            deltas: vec![(0, 0, 0.4), (0, 3, -0.1), (3, 3, 0.2)],
        };
        let p2 = Perturbation {
            subset: vec![7, 8],
            deltas: vec![(7, 7, 0.9), (7, 8, 0.05)],
        };
        let fam = perturbed_logdet_family(&s, &[p1.clone(), p2.clone()]).unwrap();
        let dense_val = |p: &Perturbation| {
            let mut m = s.clone();
            for &(i, j, dv) in &p.deltas {
                m.add(i.min(j), i.max(j), dv);
            }
            m.logdet().unwrap()
        };
        let want = dense_val(&p1) - dense_val(&p2);
        assert!(((fam[0] - fam[1]) - want).abs() < 1e-11);
    }

    #[test]
    fn closure_violation_rejected() {
        let s = random_spd_dense(5, 1);
        let p = Perturbation {
            subset: vec![1],
            deltas: vec![(1, 2, 0.1)],
        };
        match perturbed_logdet_family(&s, &[p]) {
            Err(Error::ClosureViolation { index }) => assert_eq!(index, 2),
            other => panic!("expected closure violation, got {other:?}"),
        }
    }
}
