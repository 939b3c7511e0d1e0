//! Radius fields: where an engine reads the radius of an active vertex.

use std::collections::HashMap;

use crate::keyed::{Channel, KeyedStream};
use crate::law::RadiusLaw;

/// Source of the radius used by `vertex` when it spreads at `step`.
pub trait RadiusField {
    fn radius(&mut self, vertex: i64, step: u64) -> u64;
}

/// A static field: one radius per vertex for the whole run.
pub trait VertexRadii {
    fn radius_at(&self, vertex: i64) -> u64;
}

impl<T: VertexRadii> RadiusField for T {
    #[inline]
    fn radius(&mut self, vertex: i64, _step: u64) -> u64 {
        self.radius_at(vertex)
    }
}

/// The basic model's field `{I_z}`: `I_z = F^{-1}(U_z)` with `U_z` keyed by
/// vertex, so fields for different laws built on one stream are coupled
/// through shared uniforms.
#[derive(Debug, Clone)]
pub struct StaticField {
    law: RadiusLaw,
    stream: KeyedStream,
}

impl StaticField {
    pub fn new(law: RadiusLaw, seed: u64) -> Self {
        Self {
            law,
            stream: KeyedStream::new(seed),
        }
    }

    pub fn law(&self) -> &RadiusLaw {
        &self.law
    }

    pub fn uniform(&self, vertex: i64) -> f64 {
        self.stream.uniform(0, vertex, Channel::Radius)
    }
}

impl VertexRadii for StaticField {
    #[inline]
    fn radius_at(&self, vertex: i64) -> u64 {
        self.law.quantile(self.uniform(vertex))
    }
}

/// Reads `I^n_v` from the reactivation model's keyed family. Driving the
/// basic engine with it reproduces the reactivation process at `p2 = 0`.
#[derive(Debug, Clone)]
pub struct ActivationField {
    law: RadiusLaw,
    stream: KeyedStream,
}

impl ActivationField {
    pub fn new(law: RadiusLaw, stream: KeyedStream) -> Self {
        Self { law, stream }
    }
}

impl RadiusField for ActivationField {
    #[inline]
    fn radius(&mut self, vertex: i64, step: u64) -> u64 {
        self.law
            .quantile(self.stream.uniform(step, vertex, Channel::Radius))
    }
}

/// Explicit radii with a default for unlisted vertices.
#[derive(Debug, Clone, Default)]
pub struct FixedField {
    values: HashMap<i64, u64>,
    default: u64,
}

impl FixedField {
    pub fn new(default: u64) -> Self {
        Self {
            values: HashMap::new(),
            default,
        }
    }

    pub fn with(mut self, vertex: i64, radius: u64) -> Self {
        self.values.insert(vertex, radius);
        self
    }

    pub fn set(&mut self, vertex: i64, radius: u64) {
        self.values.insert(vertex, radius);
    }
}

impl VertexRadii for FixedField {
    fn radius_at(&self, vertex: i64) -> u64 {
        self.values.get(&vertex).copied().unwrap_or(self.default)
    }
}
