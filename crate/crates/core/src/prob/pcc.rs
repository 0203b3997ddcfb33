//! Instances whose facts are annotated by gates of a Boolean circuit, and
//! query lineage over them.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use serde_json::{json, Value};

use super::junction::message_passing_prob;
use crate::automata::{lift_boolean, TreeAutomaton};
use crate::circuits::{stitch, sum_decompositions, BoolCircuit, GateId};
use crate::encoding::{encode, KFact, TreeEncoding};
use crate::error::{Error, Result};
use crate::provcirc::{bool_provenance_circuit, NodeInput};
use crate::rational::{format_rational, parse_probability};
use crate::relational::{
    check_hypergraph, decompose_hypergraph, normalize_hypergraph, subinstance, FactValuation, Instance,
    TreeDecomposition,
};

/// An instance, a circuit, the gate `phi[f]` deciding whether fact `f` is
/// present, and a probability for every input gate. Without the
/// probabilities this is a cc-instance.
#[derive(Clone, Debug)]
pub struct PccInstance {
    pub instance: Instance,
    pub circuit: BoolCircuit,
    pub phi: Vec<GateId>,
    pub prob: HashMap<GateId, BigRational>,
}

impl PccInstance {
    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        if self.phi.len() != self.instance.len() {
            return Err(Error::input("one annotation gate per fact is needed"));
        }
        if self.phi.iter().any(|&g| g >= self.circuit.len()) {
            return Err(Error::input("annotation gate out of range"));
        }
        for g in self.circuit.inputs() {
            if !self.prob.contains_key(&g) {
                return Err(Error::PartialValuation(self.circuit.input_name(g).to_string()));
            }
        }
        Ok(())
    }

    /// The possible world of a valuation of the input gates.
    pub fn world(&self, nu: impl Fn(GateId) -> bool) -> Instance {
        let values = self.circuit.eval_all(nu);
        let mut v = FactValuation::new();
        for (f, &g) in self.phi.iter().enumerate() {
            v.set(f, values[g]);
        }
        subinstance(&self.instance, &v).expect("total valuation")
    }

    /// Probability of a valuation of the input gates.
    pub fn valuation_probability(&self, nu: impl Fn(GateId) -> bool) -> BigRational {
        self.circuit
            .inputs()
            .into_iter()
            .map(|g| if nu(g) { self.prob[&g].clone() } else { BigRational::from_integer(1.into()) - &self.prob[&g] })
            .product()
    }

    /// The hypergraph of the joint encoding of instance and circuit:
    /// elements come first, then gate `g` as vertex `num_elements + g`.
    /// Fact hyperedges (the fact's elements and its gate) come first, one
    /// per fact, followed by one hyperedge per gate.
    pub fn hypergraph(&self) -> (usize, Vec<Vec<usize>>) {
        let ne = self.instance.num_elements();
        let mut edges: Vec<Vec<usize>> = self
            .instance
            .facts()
            .iter()
            .zip(&self.phi)
            .map(|(f, &g)| f.args.iter().copied().chain([ne + g]).collect())
            .collect();
        edges.extend(self.circuit.hyperedges().into_iter().map(|e| e.into_iter().map(|g| ne + g).collect()));
        (ne + self.circuit.len(), edges)
    }

    /// A tree decomposition of the joint encoding of width at most `k`.
    pub fn decomposition(&self, k: usize) -> Result<TreeDecomposition> {
        let (nv, edges) = self.hypergraph();
        decompose_hypergraph(nv, &edges, k)
    }

    pub fn to_json(&self) -> Value {
        let prob: BTreeMap<String, String> = self
            .prob
            .iter()
            .map(|(&g, p)| (self.circuit.input_name(g).to_string(), format_rational(p)))
            .collect();
        json!({
            "instance": self.instance.to_json(),
            "circuit": self.circuit.to_json(),
            "phi": self.phi,
            "prob": prob,
        })
    }

    /// Reads `{"instance", "circuit", "phi", "prob"}` where `prob` maps
    /// input gate names to probabilities.
    pub fn from_json(value: &Value) -> Result<Self> {
        let field = |k: &str| value.get(k).ok_or_else(|| Error::input(format!("pcc file: missing {k:?}")));
        let instance = Instance::from_json(field("instance")?)?;
        let circuit = BoolCircuit::from_json(field("circuit")?)?;
        let phi: Vec<GateId> =
            serde_json::from_value(field("phi")?.clone()).map_err(|e| Error::input(format!("pcc file: {e}")))?;
        let names: BTreeMap<String, String> =
            serde_json::from_value(field("prob")?.clone()).map_err(|e| Error::input(format!("pcc file: {e}")))?;
        let mut by_name: HashMap<&str, GateId> = HashMap::new();
        for g in circuit.inputs() {
            if by_name.insert(circuit.input_name(g), g).is_some() {
                return Err(Error::input(format!("duplicate input name {}", circuit.input_name(g))));
            }
        }
        let mut prob = HashMap::new();
        for (name, p) in &names {
            let g = by_name.get(name.as_str()).ok_or_else(|| Error::input(format!("no input named {name}")))?;
            prob.insert(*g, parse_probability(p)?);
        }
        let j = PccInstance { instance, circuit, phi, prob };
        j.validate()?;
        Ok(j)
    }
}

/// A tree encoding of the instance together with a decomposition of the
/// circuit with the same skeleton; `chi[n]` is the gate deciding the fact
/// of node `n`, for fact nodes.
#[derive(Clone, Debug)]
pub struct CcEncoding {
    pub encoding: TreeEncoding,
    pub circuit_decomposition: TreeDecomposition,
    pub chi: Vec<Option<GateId>>,
}

/// Splits a decomposition of the joint encoding (see
/// [`PccInstance::hypergraph`]) into an encoding of the instance and a
/// decomposition of the circuit with the same skeleton.
pub fn cc_encode(j: &PccInstance, t: &TreeDecomposition) -> Result<CcEncoding> {
    let (_, edges) = j.hypergraph();
    if !check_hypergraph(&edges, t) {
        return Err(Error::InvalidDecomposition("not a decomposition of the joint encoding".into()));
    }
    let nf = j.instance.len();
    let tn = normalize_hypergraph(t, &edges[..nf]);
    let ne = j.instance.num_elements();
    let children: Vec<Vec<usize>> = tn.bags.iter().map(|b| b.children.clone()).collect();
    let mut ti = TreeDecomposition::from_parts(
        tn.bags.iter().map(|b| b.dom.iter().copied().filter(|&v| v < ne).collect()).collect(),
        children.clone(),
        tn.root,
    );
    ti.assignment = tn.assignment.clone();
    let tc = TreeDecomposition::from_parts(
        tn.bags.iter().map(|b| b.dom.iter().filter(|&&v| v >= ne).map(|&v| v - ne).collect()).collect(),
        children,
        tn.root,
    );
    let encoding = encode(&j.instance, &ti)?;
    debug_assert_eq!(encoding.tree.len(), tc.len());
    let chi = encoding.node_fact.iter().map(|f| f.map(|f| j.phi[f])).collect();
    Ok(CcEncoding { encoding, circuit_decomposition: tc, chi })
}

/// A circuit over the inputs of a cc-instance, with a decomposition.
#[derive(Clone, Debug)]
pub struct Lineage {
    pub circuit: BoolCircuit,
    pub decomposition: TreeDecomposition,
}

/// Circuit true exactly under the valuations whose possible world the
/// automaton accepts: the instance's circuit stitched below the provenance
/// circuit of the automaton on the cc-encoding.
pub fn lineage_circuit<A>(a: &A, j: &PccInstance, t: &TreeDecomposition, cap: usize) -> Result<Lineage>
where
    A: TreeAutomaton<Label = KFact>,
{
    let cc = cc_encode(j, t)?;
    let tree = &cc.encoding.tree;
    let inputs: Vec<NodeInput> = (0..tree.len())
        .map(|n| match cc.chi[n] {
            Some(_) => NodeInput::Named(format!("n{n}")),
            None => NodeInput::One,
        })
        .collect();
    let res = bool_provenance_circuit(&lift_boolean(a), tree, &inputs, cap)?;
    let binding: HashMap<GateId, GateId> =
        (0..tree.len()).filter_map(|n| res.node_input[n].map(|g| (g, cc.chi[n].unwrap()))).collect();
    let (circuit, image) = stitch(&j.circuit, &res.circuit, &binding)?;
    let decomposition = sum_decompositions(&cc.circuit_decomposition, &res.decomposition, &res.circuit, &image)?;
    Ok(Lineage { circuit, decomposition })
}

/// Probability that the automaton accepts the (encoding of the) random
/// possible world, with the lineage it was computed from.
pub fn query_probability_pcc<A>(a: &A, j: &PccInstance, t: &TreeDecomposition, cap: usize) -> Result<(BigRational, Lineage)>
where
    A: TreeAutomaton<Label = KFact>,
{
    j.validate()?;
    let lineage = lineage_circuit(a, j, t, cap)?;
    let p = message_passing_prob(&lineage.circuit, &lineage.decomposition, &j.prob)?;
    Ok((p, lineage))
}
