//! Per-feature sorted sample lists that are partitioned, not re-sorted, as a
//! tree grows.

use alloc::vec::Vec;

pub(crate) struct NodeSamples {
    /// Sample positions in this node, ascending.
    pub members: Vec<u32>,
    /// For each feature, the members ordered by (value, position).
    pub sorted: Vec<Vec<u32>>,
}

impl NodeSamples {
    pub fn root(n_samples: usize, n_features: usize, value: impl Fn(usize, usize) -> f64) -> Self {
        let members: Vec<u32> = (0..n_samples as u32).collect();
        let sorted = (0..n_features)
            .map(|f| {
                let mut s = members.clone();
                // stable: equal values keep position order
                s.sort_by(|&a, &b| value(a as usize, f).total_cmp(&value(b as usize, f)));
                s
            })
            .collect();
        NodeSamples { members, sorted }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// `goes_left` is indexed by sample position and only read for members.
    pub fn partition(self, goes_left: &[bool]) -> (NodeSamples, NodeSamples) {
        let split = |list: Vec<u32>| -> (Vec<u32>, Vec<u32>) { list.into_iter().partition(|&p| goes_left[p as usize]) };
        let (lm, rm) = split(self.members);
        let (ls, rs): (Vec<_>, Vec<_>) = self.sorted.into_iter().map(split).unzip();
        (
            NodeSamples { members: lm, sorted: ls },
            NodeSamples { members: rm, sorted: rs },
        )
    }
}
