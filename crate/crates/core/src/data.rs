//! Angle data: a cell complex with intersection angles on its edges and
//! cone angles at its vertices.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cellcomplex::{build_complex, CellComplex, ComplexError, ComplexInput};

#[derive(Debug, Clone)]
pub struct AngleData {
    pub complex: CellComplex,
    /// Intersection angle per edge of `complex`.
    pub theta: Vec<f64>,
    /// Cone angle per vertex.
    pub cone: Vec<f64>,
}

/// Serialized angle data: a complex plus `theta` per edge (in edge id
/// order) and optionally `cone` per vertex (default `2 pi`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AngleDataInput {
    #[serde(flatten)]
    pub complex: ComplexInput,
    pub theta: Vec<f64>,
    #[serde(default)]
    pub cone: Option<Vec<f64>>,
}

impl AngleData {
    pub fn new(complex: CellComplex, theta: Vec<f64>, cone: Vec<f64>) -> Result<Self, ComplexError> {
        if theta.len() != complex.n_edges() {
            return Err(ComplexError::InvalidInput(format!("{} angles for {} edges", theta.len(), complex.n_edges())));
        }
        if cone.len() != complex.n_vertices() {
            return Err(ComplexError::InvalidInput(format!("{} cone angles for {} vertices", cone.len(), complex.n_vertices())));
        }
        if theta.iter().chain(&cone).any(|x| !x.is_finite()) {
            return Err(ComplexError::InvalidInput("non-finite angle".into()));
        }
        Ok(AngleData { complex, theta, cone })
    }

    /// Angle data with every cone angle equal to `2 pi`.
    pub fn uniform(complex: CellComplex, theta: Vec<f64>) -> Result<Self, ComplexError> {
        let cone = vec![2.0 * PI; complex.n_vertices()];
        Self::new(complex, theta, cone)
    }

    pub fn from_input(input: &AngleDataInput) -> Result<Self, ComplexError> {
        let complex = build_complex(&input.complex)?;
        let cone = input.cone.clone().unwrap_or_else(|| vec![2.0 * PI; complex.n_vertices()]);
        Self::new(complex, input.theta.clone(), cone)
    }

    /// Serializes back to the input schema with explicit side pairings.
    pub fn to_input(&self) -> AngleDataInput {
        let c = &self.complex;
        let identifications = c
            .edges()
            .iter()
            .map(|e| [[e.sides[0].0, e.sides[0].1], [e.sides[1].0, e.sides[1].1]])
            .collect();
        AngleDataInput {
            complex: ComplexInput {
                faces: c.faces().to_vec(),
                v1: c.v1_vertices(),
                identifications,
                regularity: Some(c.regularity()),
            },
            theta: self.theta.clone(),
            cone: Some(self.cone.clone()),
        }
    }
}
