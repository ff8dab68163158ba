//! Differentiation engine selection.
//!
//! The default engine evaluates expressions over nested jets, which is
//! exact up to rounding (error budget ~1e-12 on well-scaled fields). The
//! central-difference engine exists for evaluators that cannot be composed
//! analytically; its error budget is O(h^2) per derivative order.

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Engine {
    Exact,
    CentralDiff { h: f64 },
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

impl Default for Engine {
    fn default() -> Self {
        Engine::Exact
    }
}

impl Engine {
    pub fn central_diff() -> Self {
        Engine::CentralDiff { h: DEFAULT_FD_STEP }
    }

    /// Step size scaled to the local coordinate magnitude.
    pub fn step_at(&self, x: &[f64]) -> f64 {
        match self {
            Engine::Exact => 0.0,
            Engine::CentralDiff { h } => {
                let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                h * scale
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::CentralDiff { .. } => "fd",
        }
    }
}
