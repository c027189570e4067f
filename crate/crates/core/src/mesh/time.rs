use crate::{Error, Result};

/// Strictly increasing time nodes `0 = t₀ < t₁ < … < t_N = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimePartition {
    nodes: Vec<f64>,
}

impl TimePartition {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::TimePartition("at least one time interval is required".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::TimePartition(format!("first node must be 0, got {}", nodes[0])));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::TimePartition(format!("nodes must be strictly increasing ({} then {})", w[0], w[1])));
        }
        Ok(Self { nodes })
    }

    /// `n` equal intervals on `(0, T)`.
    pub fn uniform(final_time: f64, n: usize) -> Result<Self> {
        if n == 0 || !(final_time > 0.0) {
            return Err(Error::TimePartition(format!(
                "uniform partition needs n ≥ 1 and T > 0 (got n = {n}, T = {final_time})"
            )));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| final_time * i as f64 / n as f64).collect();
        nodes[n] = final_time;
        Self::new(nodes)
    }

    /// Partition geometrically graded towards `t = 0`: `t_n = σ^{N−n}·T`.
    pub fn geometric(final_time: f64, n: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::TimePartition(format!("grading factor must lie in (0, 1), got {sigma}")));
        }
        if n == 0 || !(final_time > 0.0) {
            return Err(Error::TimePartition("graded partition needs N ≥ 1 and T > 0".into()));
        }
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(0.0);
        for k in 1..=n {
            nodes.push(sigma.powi((n - k) as i32) * final_time);
        }
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn final_time(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.nodes[n], self.nodes[n + 1])
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Alias kept for the operation name used in experiment descriptions.
pub fn geometric_time_partition(final_time: f64, n: usize, sigma: f64) -> Result<TimePartition> {
    TimePartition::geometric(final_time, n, sigma)
}

/// Nodes on `(a, b)` graded geometrically towards both end points with
/// `levels` layers on each side: the layer boundaries sit at distance
/// `σ^{levels−k}·(b−a)/2` from the nearest end, `k = 1..levels`.
pub fn symmetric_graded_nodes(a: f64, b: f64, levels: usize, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma < 1.0) || levels == 0 || !(b > a) {
        return Err(Error::InvalidParameter(format!(
            "graded nodes need σ ∈ (0, 1), levels ≥ 1 and a < b (σ = {sigma}, levels = {levels})"
        )));
    }
    let half = 0.5 * (b - a);
    let mut left: Vec<f64> = (1..=levels).map(|k| a + sigma.powi((levels - k) as i32) * half).collect();
    let mid = a + half;
    // the last layer ends at the midpoint
    *left.last_mut().unwrap() = mid;
    let mut nodes = vec![a];
    nodes.extend(left.iter().copied());
    for &x in left.iter().rev().skip(1) {
        nodes.push(b - (x - a));
    }
    nodes.push(b);
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_nodes() {
        let p = TimePartition::geometric(0.1, 3, 0.25).unwrap();
        let expected = [0.0, 0.00625, 0.025, 0.1];
        for (a, b) in p.nodes().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(TimePartition::geometric(1.0, 1, 0.7).unwrap().nodes(), &[0.0, 1.0]);
        let p = TimePartition::geometric(1.0, 2, 0.35).unwrap();
        assert!((p.nodes()[1] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_partitions() {
        assert!(TimePartition::geometric(1.0, 3, 1.0).is_err());
        assert!(TimePartition::geometric(1.0, 3, 0.0).is_err());
        assert!(TimePartition::new(vec![0.0]).is_err());
        assert!(TimePartition::new(vec![0.1, 1.0]).is_err());
        assert!(TimePartition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimePartition::uniform(1.0, 0).is_err());
    }

    #[test]
    fn symmetric_grading() {
        let nodes = symmetric_graded_nodes(0.0, 1.0, 3, 0.35).unwrap();
        let h = 0.5;
        let expected = [0.0, 0.35 * 0.35 * h, 0.35 * h, 0.5, 1.0 - 0.35 * h, 1.0 - 0.35 * 0.35 * h, 1.0];
        assert_eq!(nodes.len(), expected.len());
        for (a, b) in nodes.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(symmetric_graded_nodes(0.0, 1.0, 1, 0.35).unwrap(), vec![0.0, 0.5, 1.0]);
    }
}
