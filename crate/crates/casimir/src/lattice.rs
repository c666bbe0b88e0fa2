//! Periodic Yee lattices in two and three dimensions.
//!
//! Electric degrees of freedom live on links, magnetic degrees of freedom on
//! faces. Sites, links and faces are enumerated site-major (x fastest), with
//! the orientation index varying last: `link = site * dim + axis`,
//! `face = site * n_orient + normal` where a 2D lattice has one face
//! orientation per site and a 3D lattice has three.

use crate::error::{Error, Result};

/// Cubic lattice with periodic wrap on every axis. Lattice constant is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    extent: [usize; 3],
}

/// Flat index of a link (electric degree of freedom).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

/// Flat index of a face (magnetic degree of freedom).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceId(pub usize);

impl Lattice {
    pub fn new_2d(nx: usize, ny: usize) -> Result<Self> {
        Self::new(2, [nx, ny, 1])
    }

    pub fn new_3d(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        Self::new(3, [nx, ny, nz])
    }

    fn new(dim: usize, extent: [usize; 3]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidLattice(format!("dim {dim} not in {{2,3}}")));
        }
        for axis in 0..dim {
            if extent[axis] < 4 {
                return Err(Error::InvalidLattice(format!(
                    "extent {} on axis {axis} is below the minimum of 4",
                    extent[axis]
                )));
            }
        }
        Ok(Self { dim, extent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.extent[axis]
    }

    /// Number of sites V.
    pub fn sites(&self) -> usize {
        self.extent[..self.dim].iter().product()
    }

    /// Number of links, `dim * V`.
    pub fn links(&self) -> usize {
        self.dim * self.sites()
    }

    /// Number of face orientations per site: 1 in 2D, 3 in 3D.
    pub fn face_orientations(&self) -> usize {
        if self.dim == 2 {
            1
        } else {
            3
        }
    }

    /// Number of faces, `V` in 2D and `3V` in 3D.
    pub fn faces(&self) -> usize {
        self.face_orientations() * self.sites()
    }

    pub fn site_index(&self, coords: [usize; 3]) -> usize {
        let mut idx = 0;
        for axis in (0..self.dim).rev() {
            idx = idx * self.extent[axis] + coords[axis] % self.extent[axis];
        }
        idx
    }

    pub fn site_coords(&self, mut site: usize) -> [usize; 3] {
        let mut coords = [0usize; 3];
        for axis in 0..self.dim {
            coords[axis] = site % self.extent[axis];
            site /= self.extent[axis];
        }
        coords
    }

    /// Neighboring site displaced by `delta` steps along `axis`, with wrap.
    pub fn shift_site(&self, site: usize, axis: usize, delta: isize) -> usize {
        let mut coords = self.site_coords(site);
        let n = self.extent[axis] as isize;
        let x = (coords[axis] as isize + delta).rem_euclid(n);
        coords[axis] = x as usize;
        self.site_index(coords)
    }

    pub fn encode_link(&self, site: usize, axis: usize) -> LinkId {
        debug_assert!(axis < self.dim);
        LinkId(site * self.dim + axis)
    }

    /// (site, axis) of a link.
    pub fn decode_link(&self, l: LinkId) -> (usize, usize) {
        (l.0 / self.dim, l.0 % self.dim)
    }

    pub fn encode_face(&self, site: usize, normal: usize) -> FaceId {
        debug_assert!(normal < self.face_orientations());
        FaceId(site * self.face_orientations() + normal)
    }

    /// (site, normal axis) of a face. In 2D the normal is always 2 (out of plane).
    pub fn decode_face(&self, f: FaceId) -> (usize, usize) {
        let k = self.face_orientations();
        let (site, orient) = (f.0 / k, f.0 % k);
        if self.dim == 2 {
            (site, 2)
        } else {
            (site, orient)
        }
    }

    /// Midpoint of a link in lattice coordinates.
    pub fn link_midpoint(&self, l: LinkId) -> [f64; 3] {
        let (site, axis) = self.decode_link(l);
        let c = self.site_coords(site);
        let mut m = [c[0] as f64, c[1] as f64, c[2] as f64];
        m[axis] += 0.5;
        m
    }

    /// Canonical ordering of all links.
    pub fn enumerate_links(&self) -> impl Iterator<Item = LinkId> {
        (0..self.links()).map(LinkId)
    }

    pub fn enumerate_faces(&self) -> impl Iterator<Item = FaceId> {
        (0..self.faces()).map(FaceId)
    }

    fn check_link(&self, l: LinkId) -> Result<()> {
        if l.0 >= self.links() {
            return Err(Error::IndexOutOfRange {
                kind: "link",
                index: l.0,
                count: self.links(),
            });
        }
        Ok(())
    }

    fn check_face(&self, f: FaceId) -> Result<()> {
        if f.0 >= self.faces() {
            return Err(Error::IndexOutOfRange {
                kind: "face",
                index: f.0,
                count: self.faces(),
            });
        }
        Ok(())
    }

    /// In-plane axes (u, v) of a face with the given normal, right handed so
    /// that (normal, u, v) is a cyclic permutation of (x, y, z).
    fn face_plane(normal: usize) -> (usize, usize) {
        match normal {
            0 => (1, 2),
            1 => (2, 0),
            2 => (0, 1),
            _ => unreachable!("bad face normal"),
        }
    }

    /// Oriented boundary of a face: exactly four (link, sign) pairs.
    ///
    /// The circulation convention is fixed: for a face anchored at site `s`
    /// with in-plane axes (u, v) the boundary reads
    /// `+u@s, +v@(s+u), -u@(s+v), -v@s`.
    pub fn links_of_face(&self, f: FaceId) -> Result<[(LinkId, f64); 4]> {
        self.check_face(f)?;
        let (site, normal) = self.decode_face(f);
        let (u, v) = Self::face_plane(normal);
        let su = self.shift_site(site, u, 1);
        let sv = self.shift_site(site, v, 1);
        Ok([
            (self.encode_link(site, u), 1.0),
            (self.encode_link(su, v), 1.0),
            (self.encode_link(sv, u), -1.0),
            (self.encode_link(site, v), -1.0),
        ])
    }

    /// Faces incident to a link with circulation signs: two in 2D, four in 3D.
    pub fn faces_of_link(&self, l: LinkId) -> Result<Vec<(FaceId, f64)>> {
        self.check_link(l)?;
        let (site, axis) = self.decode_link(l);
        let mut out = Vec::with_capacity(2 * (self.dim - 1));
        for normal in 0..3 {
            if normal == axis {
                continue;
            }
            if self.dim == 2 && normal != 2 {
                continue;
            }
            let enc = if self.dim == 2 { 0 } else { normal };
            let (u, v) = Self::face_plane(normal);
            if axis == u {
                // +u edge of the face at `site`, -u edge of the face at site - v.
                out.push((self.encode_face(site, enc), 1.0));
                out.push((self.encode_face(self.shift_site(site, v, -1), enc), -1.0));
            } else {
                debug_assert_eq!(axis, v);
                out.push((self.encode_face(self.shift_site(site, u, -1), enc), 1.0));
                out.push((self.encode_face(site, enc), -1.0));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_2d() {
        let lat = Lattice::new_2d(4, 4).unwrap();
        assert_eq!(lat.sites(), 16);
        assert_eq!(lat.links(), 32);
        assert_eq!(lat.faces(), 16);
    }

    #[test]
    fn counts_3d() {
        let lat = Lattice::new_3d(4, 4, 4).unwrap();
        assert_eq!(lat.sites(), 64);
        assert_eq!(lat.links(), 192);
        assert_eq!(lat.faces(), 192);
        let lat = Lattice::new_3d(4, 5, 6).unwrap();
        assert_eq!(lat.links(), 3 * 120);
    }

    #[test]
    fn rejects_small_extent() {
        assert!(Lattice::new_2d(3, 8).is_err());
        assert!(Lattice::new_3d(4, 4, 2).is_err());
    }

    #[test]
    fn link_roundtrip() {
        for lat in [Lattice::new_2d(4, 6).unwrap(), Lattice::new_3d(4, 5, 4).unwrap()] {
            for l in lat.enumerate_links() {
                let (site, axis) = lat.decode_link(l);
                assert_eq!(lat.encode_link(site, axis), l);
            }
            for f in lat.enumerate_faces() {
                let (site, normal) = lat.decode_face(f);
                let enc = if lat.dim() == 2 { 0 } else { normal };
                assert_eq!(lat.encode_face(site, enc), f);
            }
        }
    }

    #[test]
    fn face_boundary_signs() {
        let lat = Lattice::new_2d(4, 4).unwrap();
        let signs: Vec<f64> = lat
            .links_of_face(FaceId(0))
            .unwrap()
            .iter()
            .map(|&(_, s)| s)
            .collect();
        assert_eq!(signs, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn incidence_counts() {
        let lat2 = Lattice::new_2d(5, 4).unwrap();
        for l in lat2.enumerate_links() {
            assert_eq!(lat2.faces_of_link(l).unwrap().len(), 2);
        }
        let lat3 = Lattice::new_3d(4, 4, 5).unwrap();
        for l in lat3.enumerate_links() {
            assert_eq!(lat3.faces_of_link(l).unwrap().len(), 4);
        }
    }

    #[test]
    fn incidence_duality() {
        for lat in [Lattice::new_2d(6, 5).unwrap(), Lattice::new_3d(4, 5, 6).unwrap()] {
            for f in lat.enumerate_faces() {
                for &(l, s) in lat.links_of_face(f).unwrap().iter() {
                    let back = lat.faces_of_link(l).unwrap();
                    let hit: Vec<_> = back.iter().filter(|&&(g, _)| g == f).collect();
                    assert_eq!(hit.len(), 1);
                    assert_eq!(hit[0].1, s);
                }
            }
            // And the reverse direction.
            for l in lat.enumerate_links() {
                for &(f, s) in lat.faces_of_link(l).unwrap().iter() {
                    let fwd = lat.links_of_face(f).unwrap();
                    let hit: Vec<_> = fwd.iter().filter(|&&(m, _)| m == l).collect();
                    assert_eq!(hit.len(), 1);
                    assert_eq!(hit[0].1, s);
                }
            }
        }
    }

    #[test]
    fn periodic_wrap() {
        let lat = Lattice::new_2d(4, 4).unwrap();
        // Face in the top-right corner wraps to links in the first row/column.
        let corner = lat.encode_face(lat.site_index([3, 3, 0]), 0);
        let links = lat.links_of_face(corner).unwrap();
        let wrapped_v = lat.encode_link(lat.site_index([0, 3, 0]), 1);
        let wrapped_u = lat.encode_link(lat.site_index([3, 0, 0]), 0);
        assert!(links.iter().any(|&(l, s)| l == wrapped_v && s == 1.0));
        assert!(links.iter().any(|&(l, s)| l == wrapped_u && s == -1.0));
    }

    #[test]
    fn out_of_range_rejected() {
        let lat = Lattice::new_2d(4, 4).unwrap();
        assert!(lat.links_of_face(FaceId(16)).is_err());
        assert!(lat.faces_of_link(LinkId(32)).is_err());
    }
}
