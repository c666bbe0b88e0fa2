//! Dielectric response models at imaginary frequency and per-link material maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LinkId};

/// Dielectric response evaluated at imaginary frequency.
///
/// The single-pole model is `eps(w) = 1 + chi / (1 + w^2 / w0^2)`, real and
/// monotonically decreasing from `1 + chi` at w = 0 towards 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DielectricModel {
    Vacuum,
    Constant { eps: f64 },
    SinglePole { chi: f64, omega0: f64 },
}

impl DielectricModel {
    pub fn constant(eps: f64) -> Self {
        DielectricModel::Constant { eps }
    }

    pub fn single_pole(chi: f64, omega0: f64) -> Self {
        DielectricModel::SinglePole { chi, omega0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DielectricModel::Vacuum => Ok(()),
            DielectricModel::Constant { eps } if eps > 0.0 => Ok(()),
            DielectricModel::Constant { eps } => Err(Error::InvalidMaterial(format!(
                "constant permittivity must be positive, got {eps}"
            ))),
            DielectricModel::SinglePole { chi, omega0 } if chi >= 0.0 && omega0 > 0.0 => Ok(()),
            DielectricModel::SinglePole { chi, omega0 } => Err(Error::InvalidMaterial(format!(
                "single pole needs chi >= 0 and omega0 > 0, got chi={chi}, omega0={omega0}"
            ))),
        }
    }

    /// Smallest finite pole frequency, if the model is dispersive.
    pub fn pole_frequency(&self) -> Option<f64> {
        match *self {
            DielectricModel::SinglePole { omega0, .. } => Some(omega0),
            _ => None,
        }
    }
}

/// eps(omega) for a model at imaginary frequency omega >= 0.
pub fn eval_epsilon(model: DielectricModel, omega: f64) -> Result<f64> {
    if omega < 0.0 {
        return Err(Error::InvalidFrequency(format!(
            "eval_epsilon requires omega >= 0, got {omega}"
        )));
    }
    model.validate()?;
    Ok(match model {
        DielectricModel::Vacuum => 1.0,
        DielectricModel::Constant { eps } => eps,
        DielectricModel::SinglePole { chi, omega0 } => {
            1.0 + chi / (1.0 + (omega / omega0).powi(2))
        }
    })
}

/// Assignment of a dielectric model to every link of a lattice.
///
/// Models are stored in a small table; links carry table indices. Index 0 is
/// always vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    lattice: Lattice,
    models: Vec<DielectricModel>,
    link_model: Vec<u16>,
}

impl MaterialMap {
    /// All-vacuum map.
    pub fn vacuum(lattice: Lattice) -> Self {
        Self {
            lattice,
            models: vec![DielectricModel::Vacuum],
            link_model: vec![0; lattice.links()],
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn model_of(&self, l: LinkId) -> DielectricModel {
        self.models[self.link_model[l.0] as usize]
    }

    pub fn models(&self) -> &[DielectricModel] {
        &self.models
    }

    /// eps on a given link at imaginary frequency omega.
    pub fn epsilon(&self, l: LinkId, omega: f64) -> Result<f64> {
        eval_epsilon(self.model_of(l), omega)
    }

    /// eps for every link at once; model values are evaluated once per model.
    pub fn epsilon_all(&self, omega: f64) -> Result<Vec<f64>> {
        let per_model: Vec<f64> = self
            .models
            .iter()
            .map(|&m| eval_epsilon(m, omega))
            .collect::<Result<_>>()?;
        Ok(self
            .link_model
            .iter()
            .map(|&id| per_model[id as usize])
            .collect())
    }

    fn model_id(&mut self, model: DielectricModel) -> u16 {
        if let Some(i) = self.models.iter().position(|&m| m == model) {
            return i as u16;
        }
        self.models.push(model);
        (self.models.len() - 1) as u16
    }

    /// Reassign exactly the links whose midpoint satisfies the predicate.
    pub fn stamp_region<F>(&self, region: F, model: DielectricModel) -> Result<MaterialMap>
    where
        F: Fn([f64; 3]) -> bool,
    {
        model.validate()?;
        let hits: Vec<LinkId> = self
            .lattice
            .enumerate_links()
            .filter(|&l| region(self.lattice.link_midpoint(l)))
            .collect();
        if hits.is_empty() {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        let id = out.model_id(model);
        for l in hits {
            out.link_model[l.0] = id;
        }
        Ok(out)
    }

    /// Reassign an explicit link set.
    pub fn stamp_links(&self, links: &[LinkId], model: DielectricModel) -> Result<MaterialMap> {
        model.validate()?;
        let mut out = self.clone();
        let id = out.model_id(model);
        for &l in links {
            if l.0 >= self.link_model.len() {
                return Err(Error::IndexOutOfRange {
                    kind: "link",
                    index: l.0,
                    count: self.link_model.len(),
                });
            }
            out.link_model[l.0] = id;
        }
        Ok(out)
    }

    /// Links on which two maps differ.
    pub fn differing_links(&self, other: &MaterialMap) -> Result<Vec<LinkId>> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch(
                "differing_links on maps over different lattices".into(),
            ));
        }
        Ok(self
            .lattice
            .enumerate_links()
            .filter(|&l| self.model_of(l) != other.model_of(l))
            .collect())
    }

    /// Links assigned a non-vacuum model.
    pub fn non_vacuum_links(&self) -> Vec<LinkId> {
        self.lattice
            .enumerate_links()
            .filter(|&l| self.model_of(l) != DielectricModel::Vacuum)
            .collect()
    }

    /// Smallest pole frequency over all assigned models, if any is dispersive.
    pub fn min_pole_frequency(&self) -> Option<f64> {
        self.models
            .iter()
            .filter_map(|m| m.pole_frequency())
            .fold(None, |acc, w| Some(acc.map_or(w, |a: f64| a.min(w))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pole_values() {
        let m = DielectricModel::single_pole(7.0, 1.0);
        assert_eq!(eval_epsilon(m, 0.0).unwrap(), 8.0);
        assert_eq!(eval_epsilon(m, 1.0).unwrap(), 4.5);
        assert_eq!(eval_epsilon(DielectricModel::constant(5.0), 3.7).unwrap(), 5.0);
    }

    #[test]
    fn negative_frequency_rejected() {
        assert!(eval_epsilon(DielectricModel::Vacuum, -0.1).is_err());
    }

    #[test]
    fn single_pole_monotone_and_bounded() {
        let m = DielectricModel::single_pole(3.0, 0.7);
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let w = 0.05 * k as f64;
            let e = eval_epsilon(m, w).unwrap();
            assert!(e >= 1.0);
            assert!(e <= prev + 1e-15);
            prev = e;
        }
    }

    #[test]
    fn stamp_region_half_plane() {
        let lat = Lattice::new_2d(8, 8).unwrap();
        let map = MaterialMap::vacuum(lat);
        let model = DielectricModel::constant(8.0);
        let stamped = map.stamp_region(|m| m[1] < 4.0, model).unwrap();
        for l in lat.enumerate_links() {
            let expect = lat.link_midpoint(l)[1] < 4.0;
            assert_eq!(stamped.model_of(l) == model, expect);
        }
        // Idempotent.
        let again = stamped.stamp_region(|m| m[1] < 4.0, model).unwrap();
        assert_eq!(again, stamped);
    }

    #[test]
    fn stamp_empty_and_full() {
        let lat = Lattice::new_2d(4, 4).unwrap();
        let map = MaterialMap::vacuum(lat);
        let unchanged = map.stamp_region(|_| false, DielectricModel::constant(2.0)).unwrap();
        assert_eq!(unchanged, map);
        let all_vac = map.stamp_region(|_| true, DielectricModel::Vacuum).unwrap();
        assert!(all_vac.non_vacuum_links().is_empty());
    }
}
