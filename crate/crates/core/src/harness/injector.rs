use crate::graph::NodeId;
use crate::rng::SplitMix64;

/// Declares selected waypoints non-navigable with probability `p`. Each
/// call to [`DynamicInjector::inject`] consumes exactly one draw.
#[derive(Debug, Clone)]
pub struct DynamicInjector {
    p: f64,
    rng: SplitMix64,
    draws: Vec<(NodeId, bool)>,
}

impl DynamicInjector {
    pub fn new(p: f64, seed: u64) -> Self {
        Self {
            p,
            rng: SplitMix64::new(seed),
            draws: Vec::new(),
        }
    }

    pub fn disabled() -> Self {
        Self::new(0.0, 0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn inject(&mut self, node: NodeId) -> bool {
        let flagged = self.rng.next_f64() < self.p;
        self.draws.push((node, flagged));
        flagged
    }

    /// Every draw so far as `(node, flagged)`.
    pub fn draws(&self) -> &[(NodeId, bool)] {
        &self.draws
    }
}
