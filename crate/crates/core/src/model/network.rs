//! DC load-flow network matrices.

use serde::{Deserialize, Serialize};

/// A transmission line between two nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Susceptance in 1/Ohm.
    pub susceptance: f64,
    /// Thermal limit in MW.
    pub capacity_mw: f64,
}

/// Susceptance matrix B, transfer matrix H, line limits, and the slack node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionNetwork {
    pub lines: Vec<Line>,
    pub slack: usize,
    /// b[n][n'], 1/Ohm. Symmetric with zero row sums.
    pub b: Vec<Vec<f64>>,
    /// h[l][n], 1/Ohm. Row l has +b at `from` and -b at `to`.
    pub h: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("line {0} endpoints out of range ({1}, {2})")]
    EndpointOutOfRange(usize, usize, usize),
    #[error("line {0} connects node {1} to itself")]
    SelfLoop(usize, usize),
    #[error("line {0} susceptance must be positive, got {1}")]
    NonPositiveSusceptance(usize, f64),
    #[error("line {0} capacity must be positive, got {1}")]
    NonPositiveCapacity(usize, f64),
    #[error("slack node {0} out of range for {1} nodes")]
    SlackOutOfRange(usize, usize),
    #[error("network is disconnected: node {0} unreachable from the slack")]
    Disconnected(usize),
}

impl TransmissionNetwork {
    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    /// Signed line flows H v for an angle vector (MW when scaled by period).
    pub fn line_flows(&self, angles: &[f64]) -> Vec<f64> {
        self.h
            .iter()
            .map(|row| row.iter().zip(angles).map(|(h, v)| h * v).sum())
            .collect()
    }

    /// Net injection B v at each node.
    pub fn injections(&self, angles: &[f64]) -> Vec<f64> {
        self.b
            .iter()
            .map(|row| row.iter().zip(angles).map(|(b, v)| b * v).sum())
            .collect()
    }
}

/// Build B and H from a line list; validates connectivity and positivity.
pub fn build_network(
    num_nodes: usize,
    lines: Vec<Line>,
    slack: usize,
) -> Result<TransmissionNetwork, NetworkError> {
    if slack >= num_nodes {
        return Err(NetworkError::SlackOutOfRange(slack, num_nodes));
    }
    for (l, line) in lines.iter().enumerate() {
        if line.from >= num_nodes || line.to >= num_nodes {
            return Err(NetworkError::EndpointOutOfRange(l, line.from, line.to));
        }
        if line.from == line.to {
            return Err(NetworkError::SelfLoop(l, line.from));
        }
        if line.susceptance <= 0.0 {
            return Err(NetworkError::NonPositiveSusceptance(l, line.susceptance));
        }
        if line.capacity_mw <= 0.0 {
            return Err(NetworkError::NonPositiveCapacity(l, line.capacity_mw));
        }
    }

    // connectivity from the slack
    if num_nodes > 0 {
        let mut seen = vec![false; num_nodes];
        let mut stack = vec![slack];
        seen[slack] = true;
        while let Some(n) = stack.pop() {
            for line in &lines {
                for (a, b) in [(line.from, line.to), (line.to, line.from)] {
                    if a == n && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        if let Some(n) = seen.iter().position(|&s| !s) {
            return Err(NetworkError::Disconnected(n));
        }
    }

    let mut b = vec![vec![0.0; num_nodes]; num_nodes];
    let mut h = vec![vec![0.0; num_nodes]; lines.len()];
    for (l, line) in lines.iter().enumerate() {
        let s = line.susceptance;
        b[line.from][line.from] += s;
        b[line.to][line.to] += s;
        b[line.from][line.to] -= s;
        b[line.to][line.from] -= s;
        h[l][line.from] = s;
        h[l][line.to] = -s;
    }

    Ok(TransmissionNetwork { lines, slack, b, h })
}
