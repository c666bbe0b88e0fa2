//! Discrete curl pair and the two wave operators at imaginary frequency.
//!
//! `Curl` maps link fields to face fields; `Curl*` is its exact transpose.
//! At imaginary frequency the wave operators are real, symmetric and positive
//! definite:
//!
//! * `D_A = diag(eps * w^2 / c^2) + Curl* Curl` on links,
//! * `D_G = (w^2 / c^2) I + Curl diag(1/eps) Curl*` on faces.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::materials::MaterialMap;

/// Real sparse matrix in compressed column form.
///
/// Row indices are sorted within each column, duplicates are summed during
/// construction and exact zeros are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
    pub symmetric: bool,
}

impl SparseOperator {
    /// Build from (row, col, value) triplets. Duplicates are summed and
    /// entries that cancel exactly are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
        symmetric: bool,
    ) -> Self {
        let mut count = vec![0usize; ncols + 1];
        for &(_, c, _) in triplets {
            count[c + 1] += 1;
        }
        for c in 0..ncols {
            count[c + 1] += count[c];
        }
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![0f64; triplets.len()];
        let mut next = count.clone();
        for &(r, c, v) in triplets {
            let p = next[c];
            rows[p] = r;
            vals[p] = v;
            next[c] += 1;
        }
        // Sort each column, merge duplicates, drop zeros.
        let mut colptr = vec![0usize; ncols + 1];
        let mut rowind = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for c in 0..ncols {
            scratch.clear();
            for p in count[c]..count[c + 1] {
                scratch.push((rows[p], vals[p]));
            }
            scratch.sort_unstable_by_key(|&(r, _)| r);
            let mut i = 0;
            while i < scratch.len() {
                let r = scratch[i].0;
                let mut v = 0.0;
                while i < scratch.len() && scratch[i].0 == r {
                    v += scratch[i].1;
                    i += 1;
                }
                if v != 0.0 {
                    rowind.push(r);
                    values.push(v);
                }
            }
            colptr[c + 1] = rowind.len();
        }
        Self {
            nrows,
            ncols,
            colptr,
            rowind,
            values,
            symmetric,
        }
    }

    pub fn nnz(&self) -> usize {
        self.rowind.len()
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for c in 0..self.ncols {
            for p in self.colptr[c]..self.colptr[c + 1] {
                triplets.push((c, self.rowind[p], self.values[p]));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &triplets, self.symmetric)
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for c in 0..self.ncols {
            let xc = x[c];
            for p in self.colptr[c]..self.colptr[c + 1] {
                y[self.rowind[p]] += self.values[p] * xc;
            }
        }
        y
    }

    /// Entry (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.colptr[j];
        let hi = self.colptr[j + 1];
        match self.rowind[lo..hi].binary_search(&i) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0.0,
        }
    }

    /// Exact transpose equality check for the symmetric flag.
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.transpose() == Self { symmetric: self.symmetric, ..self.clone() }
    }

    /// Debug dump in coordinate text format: one `row col value` line per entry.
    pub fn write_coordinate<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for c in 0..self.ncols {
            for p in self.colptr[c]..self.colptr[c + 1] {
                writeln!(w, "{} {} {:.17e}", self.rowind[p], c, self.values[p])?;
            }
        }
        Ok(())
    }

    /// Dense copy, for oracles and small tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for c in 0..self.ncols {
            for p in self.colptr[c]..self.colptr[c + 1] {
                d[self.rowind[p]][c] = self.values[p];
            }
        }
        d
    }
}

/// Discrete curl: faces x links, entries +-1, four per face.
pub fn assemble_curl(lat: &Lattice) -> SparseOperator {
    let mut triplets = Vec::with_capacity(4 * lat.faces());
    for f in lat.enumerate_faces() {
        for &(l, s) in lat.links_of_face(f).expect("enumerated face").iter() {
            triplets.push((f.0, l.0, s));
        }
    }
    SparseOperator::from_triplets(lat.faces(), lat.links(), &triplets, false)
}

/// Adjoint curl: links x faces, exact transpose of `assemble_curl`.
pub fn assemble_curl_star(lat: &Lattice) -> SparseOperator {
    assemble_curl(lat).transpose()
}

fn check_frequency(omega: f64) -> Result<()> {
    if omega <= 0.0 || !omega.is_finite() {
        return Err(Error::InvalidFrequency(format!(
            "wave operators need omega > 0, got {omega}"
        )));
    }
    Ok(())
}

fn check_map(lat: &Lattice, map: &MaterialMap) -> Result<()> {
    if map.lattice() != lat {
        return Err(Error::LatticeMismatch(
            "material map built on a different lattice".into(),
        ));
    }
    Ok(())
}

/// Vector-potential wave operator on links:
/// `D_A = diag(eps(link, w) w^2 / c^2) + Curl* Curl`.
pub fn assemble_da(lat: &Lattice, map: &MaterialMap, omega: f64, c: f64) -> Result<SparseOperator> {
    check_frequency(omega)?;
    check_map(lat, map)?;
    let eps = map.epsilon_all(omega)?;
    let k2 = omega * omega / (c * c);
    let mut triplets = Vec::with_capacity(16 * lat.faces() + lat.links());
    // Curl* Curl assembled face by face: each face contributes the outer
    // product of its signed boundary links.
    for f in lat.enumerate_faces() {
        let links = lat.links_of_face(f).expect("enumerated face");
        for &(li, si) in links.iter() {
            for &(lj, sj) in links.iter() {
                triplets.push((li.0, lj.0, si * sj));
            }
        }
    }
    for l in lat.enumerate_links() {
        triplets.push((l.0, l.0, eps[l.0] * k2));
    }
    Ok(SparseOperator::from_triplets(
        lat.links(),
        lat.links(),
        &triplets,
        true,
    ))
}

/// Magnetic-potential wave operator on faces:
/// `D_G = (w^2 / c^2) I + Curl diag(1/eps(link, w)) Curl*`.
pub fn assemble_dg(lat: &Lattice, map: &MaterialMap, omega: f64, c: f64) -> Result<SparseOperator> {
    check_frequency(omega)?;
    check_map(lat, map)?;
    let eps = map.epsilon_all(omega)?;
    if let Some(&bad) = eps.iter().find(|&&e| e <= 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "D_G needs eps > 0 on every link, found {bad}"
        )));
    }
    let k2 = omega * omega / (c * c);
    let mut triplets = Vec::with_capacity(8 * lat.links() + lat.faces());
    // Link by link: each link couples the faces it borders with weight 1/eps.
    for l in lat.enumerate_links() {
        let inv_eps = 1.0 / eps[l.0];
        let faces = lat.faces_of_link(l).expect("enumerated link");
        for &(fi, si) in faces.iter() {
            for &(fj, sj) in faces.iter() {
                triplets.push((fi.0, fj.0, si * sj * inv_eps));
            }
        }
    }
    for f in lat.enumerate_faces() {
        triplets.push((f.0, f.0, k2));
    }
    Ok(SparseOperator::from_triplets(
        lat.faces(),
        lat.faces(),
        &triplets,
        true,
    ))
}

/// Discrete gradient of a site scalar, as a link field. Curl of this is zero
/// on a periodic lattice, which pins the sign conventions in tests.
pub fn discrete_gradient(lat: &Lattice, phi: &[f64]) -> Vec<f64> {
    assert_eq!(phi.len(), lat.sites());
    let mut g = vec![0.0; lat.links()];
    for l in lat.enumerate_links() {
        let (site, axis) = lat.decode_link(l);
        g[l.0] = phi[lat.shift_site(site, axis, 1)] - phi[site];
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::DielectricModel;
    use proptest::prelude::*;

    fn rand_phi(n: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn curl_counts_3d() {
        let lat = Lattice::new_3d(4, 4, 4).unwrap();
        let curl = assemble_curl(&lat);
        assert_eq!((curl.nrows, curl.ncols), (192, 192));
        assert_eq!(curl.nnz(), 12 * 64);
    }

    #[test]
    fn curl_counts_2d() {
        let lat = Lattice::new_2d(8, 8).unwrap();
        let curl = assemble_curl(&lat);
        assert_eq!((curl.nrows, curl.ncols), (64, 128));
        assert_eq!(curl.nnz(), 4 * 64);
    }

    #[test]
    fn curl_star_is_transpose() {
        for lat in [Lattice::new_2d(5, 4).unwrap(), Lattice::new_3d(4, 4, 4).unwrap()] {
            let curl = assemble_curl(&lat);
            let star = assemble_curl_star(&lat);
            assert_eq!(star, curl.transpose());
        }
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        for lat in [Lattice::new_2d(6, 5).unwrap(), Lattice::new_3d(4, 5, 4).unwrap()] {
            let curl = assemble_curl(&lat);
            let g = discrete_gradient(&lat, &rand_phi(lat.sites(), 11));
            for y in curl.matvec(&g) {
                assert!(y.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn da_counts() {
        let lat2 = Lattice::new_2d(8, 8).unwrap();
        let da2 = assemble_da(&lat2, &MaterialMap::vacuum(lat2), 0.5, 1.0).unwrap();
        assert_eq!(da2.nnz(), 14 * 64);
        let lat3 = Lattice::new_3d(4, 4, 4).unwrap();
        let da3 = assemble_da(&lat3, &MaterialMap::vacuum(lat3), 0.5, 1.0).unwrap();
        assert_eq!(da3.nnz(), 39 * 64);
    }

    #[test]
    fn dg_counts_2d() {
        let lat = Lattice::new_2d(8, 8).unwrap();
        let dg = assemble_dg(&lat, &MaterialMap::vacuum(lat), 0.5, 1.0).unwrap();
        assert_eq!((dg.nrows, dg.ncols), (64, 64));
        assert_eq!(dg.nnz(), 5 * 64);
    }

    #[test]
    fn dg_vacuum_row_sums() {
        // D_G - (w^2/c^2) I = Curl Curl* in vacuum; its row sums vanish.
        let lat = Lattice::new_2d(6, 6).unwrap();
        let omega = 0.3;
        let dg = assemble_dg(&lat, &MaterialMap::vacuum(lat), omega, 1.0).unwrap();
        let dense = dg.to_dense();
        for (i, row) in dense.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            assert!((sum - omega * omega).abs() < 1e-12, "row {i}");
        }
    }

    #[test]
    fn operators_symmetric() {
        let lat = Lattice::new_2d(6, 4).unwrap();
        let map = MaterialMap::vacuum(lat)
            .stamp_region(|m| m[0] < 3.0, DielectricModel::constant(4.0))
            .unwrap();
        for op in [
            assemble_da(&lat, &map, 0.7, 1.0).unwrap(),
            assemble_dg(&lat, &map, 0.7, 1.0).unwrap(),
        ] {
            assert!(op.symmetric);
            assert_eq!(op.transpose(), op);
        }
    }

    #[test]
    fn nonpositive_frequency_rejected() {
        let lat = Lattice::new_2d(4, 4).unwrap();
        let map = MaterialMap::vacuum(lat);
        assert!(assemble_da(&lat, &map, 0.0, 1.0).is_err());
        assert!(assemble_dg(&lat, &map, -1.0, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn nnz_identities_2d(nx in 4usize..9, ny in 4usize..9) {
            let lat = Lattice::new_2d(nx, ny).unwrap();
            let v = lat.sites();
            let map = MaterialMap::vacuum(lat);
            prop_assert_eq!(assemble_curl(&lat).nnz(), 4 * v);
            prop_assert_eq!(assemble_da(&lat, &map, 0.4, 1.0).unwrap().nnz(), 14 * v);
            prop_assert_eq!(assemble_dg(&lat, &map, 0.4, 1.0).unwrap().nnz(), 5 * v);
        }

        #[test]
        fn nnz_identities_3d(nx in 4usize..7, ny in 4usize..7, nz in 4usize..7) {
            let lat = Lattice::new_3d(nx, ny, nz).unwrap();
            let v = lat.sites();
            let map = MaterialMap::vacuum(lat);
            prop_assert_eq!(assemble_curl(&lat).nnz(), 12 * v);
            prop_assert_eq!(assemble_da(&lat, &map, 0.4, 1.0).unwrap().nnz(), 39 * v);
        }
    }
}
