//! Sign-consistency conditions for WMS and AMP message vectors.

use serde::{Deserialize, Serialize};

use crate::msgpass::AmpMessages;
use crate::tanner::{Codeword, TannerGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// All messages leaving a bit share one sign.
    OutgoingSigns,
    /// Each check reply has the sign of the message it answers.
    CheckReply,
    /// The bit's belief has the sign of its outgoing messages.
    Belief,
    /// A message or belief is exactly zero.
    Tie,
}

impl Condition {
    pub fn number(&self) -> u8 {
        match self {
            Condition::OutgoingSigns => 1,
            Condition::CheckReply => 2,
            Condition::Belief => 3,
            Condition::Tie => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub bit: usize,
    pub edge: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub wms_consistent: bool,
    pub violations: Vec<Violation>,
    pub amp_consistent: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub amp_violations: Vec<usize>,
}

impl ConsistencyReport {
    pub fn has_tie(&self) -> bool {
        self.violations.iter().any(|v| v.condition == Condition::Tie)
    }
}

fn visit_violations(
    graph: &TannerGraph,
    llr: &[f64],
    v2c: &[f64],
    c2v: &[f64],
    beta: f64,
    mut found: impl FnMut(Violation) -> bool,
) {
    for (i, &g) in llr.iter().enumerate().take(graph.n()) {
        let r = graph.var_edges(i);
        let first = v2c[r.start];
        let belief = g + beta * c2v[r.clone()].iter().sum::<f64>();
        if belief == 0.0 && found(Violation { condition: Condition::Tie, bit: i, edge: None }) {
            return;
        }
        for e in r {
            let out = v2c[e];
            let back = c2v[e];
            let checks = [
                (out == 0.0 || back == 0.0, Condition::Tie),
                ((out < 0.0) != (first < 0.0), Condition::OutgoingSigns),
                ((back < 0.0) != (out < 0.0), Condition::CheckReply),
                ((belief < 0.0) != (out < 0.0), Condition::Belief),
            ];
            for (bad, condition) in checks {
                if bad && found(Violation { condition, bit: i, edge: Some(e) }) {
                    return;
                }
            }
        }
    }
}

/// Allocation-free yes/no form of [`check_wms_consistency`].
pub fn is_wms_consistent(graph: &TannerGraph, llr: &[f64], v2c: &[f64], c2v: &[f64], beta: f64) -> bool {
    let mut ok = true;
    visit_violations(graph, llr, v2c, c2v, beta, |_| {
        ok = false;
        true
    });
    ok
}

/// Evaluates the three sign conditions on every bit; exact zeros are ties.
pub fn check_wms_consistency(
    graph: &TannerGraph,
    llr: &[f64],
    v2c: &[f64],
    c2v: &[f64],
    beta: f64,
) -> ConsistencyReport {
    let mut violations = Vec::new();
    visit_violations(graph, llr, v2c, c2v, beta, |v| {
        violations.push(v);
        false
    });
    ConsistencyReport {
        wms_consistent: violations.is_empty(),
        violations,
        amp_consistent: None,
        amp_violations: Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmpConsistency {
    pub consistent: bool,
    /// Bits whose edge-wise maximizers disagree.
    pub disagreeing_bits: Vec<usize>,
    /// Edges where `μ(0) = μ(1)`.
    pub tied_edges: Vec<usize>,
    /// Majority of the edge-wise maximizers (ties resolved to 0).
    pub word: Codeword,
    pub in_code: bool,
}

/// Edge-wise maximizer `x*_{i,j} = argmax_x μ_{i→j}(x)`, `None` on ties.
pub fn amp_edge_decisions(mu: &AmpMessages) -> Vec<Option<u8>> {
    mu.v2c0
        .iter()
        .zip(&mu.v2c1)
        .map(|(a, b)| match a.partial_cmp(b) {
            Some(std::cmp::Ordering::Greater) => Some(0),
            Some(std::cmp::Ordering::Less) => Some(1),
            _ => None,
        })
        .collect()
}

/// AMP-consistency: unique edge maximizers that agree per bit and form a codeword.
pub fn check_amp_consistency(graph: &TannerGraph, mu: &AmpMessages) -> AmpConsistency {
    let dec = amp_edge_decisions(mu);
    let tied_edges: Vec<usize> = (0..dec.len()).filter(|&e| dec[e].is_none()).collect();
    let mut disagreeing_bits = Vec::new();
    let mut bits = vec![0u8; graph.n()];
    for (i, bit) in bits.iter_mut().enumerate() {
        let r = graph.var_edges(i);
        let ones = r.clone().filter(|&e| dec[e] == Some(1)).count();
        let zeros = r.clone().filter(|&e| dec[e] == Some(0)).count();
        if ones > 0 && zeros > 0 {
            disagreeing_bits.push(i);
        }
        *bit = u8::from(ones > zeros);
    }
    let word = Codeword::new(bits);
    let in_code = graph.is_codeword(word.bits());
    AmpConsistency {
        consistent: tied_edges.is_empty() && disagreeing_bits.is_empty() && in_code,
        disagreeing_bits,
        tied_edges,
        word,
        in_code,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msgpass::{run, run_amp, wms_c2v, DecoderConfig};
    use crate::tanner::{build_regular_graph, example1_graph};

    #[test]
    fn symmetric_fixed_point_is_consistent() {
        let g = build_regular_graph(36, 3, 6, 6, 1).unwrap();
        let llr = vec![1.0; 36];
        let r = run(&g, &llr, &DecoderConfig::new(0.4, 1000)).unwrap();
        assert!(r.consistency.wms_consistent);

        let mut v2c = r.messages.v2c.clone();
        v2c[4] = -v2c[4];
        let c2v = wms_c2v(&g, &v2c);
        let rep = check_wms_consistency(&g, &llr, &v2c, &c2v, 0.4);
        assert!(!rep.wms_consistent);
        let bit = g.edge(4).0;
        assert!(rep
            .violations
            .iter()
            .any(|v| v.condition == Condition::OutgoingSigns && v.bit == bit));
        assert!(!is_wms_consistent(&g, &llr, &v2c, &c2v, 0.4));
    }

    #[test]
    fn zero_message_is_a_tie() {
        let g = example1_graph();
        let mut v2c = vec![1.0; 36];
        v2c[0] = 0.0;
        let c2v = wms_c2v(&g, &v2c);
        let rep = check_wms_consistency(&g, &[1.0; 12], &v2c, &c2v, 0.5);
        assert!(rep.has_tie());
    }

    #[test]
    fn amp_symmetric_fixed_point() {
        let g = example1_graph();
        let llr = vec![1.0; 12];
        // β (dv − 1)(dc − 1) = 0.6 < 1
        let run = run_amp(&g, &llr, 0.1, 10_000, 1e-12);
        assert!(run.converged);
        let rep = check_amp_consistency(&g, &run.messages);
        assert!(rep.consistent);
        assert!(rep.word.is_zero());
    }

    #[test]
    fn amp_disagreement_and_membership() {
        let g = example1_graph();
        let mut mu = AmpMessages {
            v2c0: vec![1.0; 36],
            v2c1: vec![0.0; 36],
        };
        mu.v2c1[0] = 2.0;
        let rep = check_amp_consistency(&g, &mu);
        assert!(!rep.consistent);
        assert_eq!(rep.disagreeing_bits, vec![0]);

        // every edge of bit 0 prefers 1: agreement, but a weight-1 word is not a codeword
        for e in g.var_edges(0) {
            mu.v2c1[e] = 2.0;
        }
        let rep = check_amp_consistency(&g, &mu);
        assert!(rep.disagreeing_bits.is_empty());
        assert!(!rep.in_code);
        assert!(!rep.consistent);
    }
}
