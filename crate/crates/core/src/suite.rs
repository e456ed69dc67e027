//! Named benchmark structures and seeded random parameters.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::GraphicalModel;
use crate::rng::{domain, stream};

/// A conditional-independence structure: vertex count plus clique list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    pub name: &'static str,
    pub n: usize,
    pub cliques: Vec<Vec<usize>>,
}

impl Structure {
    pub fn dim(&self) -> usize {
        self.cliques.iter().map(|c| 1usize << c.len()).sum()
    }

    pub fn zeros(&self) -> GraphicalModel {
        GraphicalModel::zeros(self.n, self.cliques.clone()).expect("suite structures are valid")
    }

    /// Model with every parameter drawn uniformly from `[low, high)`.
    pub fn random_model(&self, seed: u64, low: f64, high: f64) -> Result<GraphicalModel> {
        if !(low < high && high <= 0.0 && low.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "parameter range [{low}, {high}) must be nonempty and within (-inf, 0]"
            )));
        }
        let mut rng = stream(seed, domain::MODEL, 0);
        let theta = (0..self.dim()).map(|_| rng.random_range(low..high)).collect();
        GraphicalModel::new(self.n, self.cliques.clone(), theta)
    }

    /// Parameters from `U[-5, 0)`.
    pub fn default_random_model(&self, seed: u64) -> GraphicalModel {
        self.random_model(seed, -5.0, 0.0).expect("default range is valid")
    }
}

fn s(name: &'static str, n: usize, cliques: &[&[usize]]) -> Structure {
    Structure {
        name,
        n,
        cliques: cliques.iter().map(|c| c.to_vec()).collect(),
    }
}

/// The built-in structure suite.
pub fn structures() -> Vec<Structure> {
    vec![
        s("single-vertex", 1, &[&[0]]),
        s("single-edge", 2, &[&[0, 1]]),
        s("chain-3", 3, &[&[0, 1], &[1, 2]]),
        s("star-3", 4, &[&[0, 1], &[0, 2], &[0, 3]]),
        s("triangle", 3, &[&[0, 1, 2]]),
        s("two-edges", 4, &[&[0, 1], &[2, 3]]),
        s("chain-4", 4, &[&[0, 1], &[1, 2], &[2, 3]]),
        s("triangle-pendant", 4, &[&[0, 1, 2], &[2, 3]]),
    ]
}

pub fn structure(name: &str) -> Result<Structure> {
    structures()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| {
            let known: Vec<&str> = structures().iter().map(|s| s.name).collect();
            Error::InvalidConfig(format!(
                "unknown structure {name:?}; known: {}",
                known.join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_valid() {
        for st in structures() {
            let m = st.default_random_model(1);
            assert_eq!(m.dim(), st.dim());
            assert!(m.theta().iter().all(|&t| (-5.0..0.0).contains(&t)));
        }
        assert_eq!(structure("chain-3").unwrap().dim(), 8);
        assert_eq!(structure("triangle").unwrap().dim(), 8);
        assert!(structure("pentagon").is_err());
    }

    #[test]
    fn random_models_are_seeded() {
        let st = structure("chain-4").unwrap();
        assert_eq!(st.default_random_model(3), st.default_random_model(3));
        assert_ne!(st.default_random_model(3), st.default_random_model(4));
        assert!(st.random_model(0, -1.0, 1.0).is_err());
    }
}
