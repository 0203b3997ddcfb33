//! Exact probability of circuit gates by message passing on a tree
//! decomposition of the circuit.
//!
//! Every gate contributes one factor: its prior for inputs, the 0/1 table
//! of its function otherwise. The factor of gate `g` lives in a bag
//! containing `g` and its inputs. Tables are sparse: a bag table lists
//! only the assignments of the bag's gates that are consistent with the
//! factors seen so far, which keeps the bags of provenance circuits
//! (large, but mostly deterministic) tractable.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::circuits::{BoolCircuit, GateId, GateKind};
use crate::error::{Error, Result};
use crate::relational::TreeDecomposition;

type Bits = Vec<u64>;

fn get(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn set(bits: &mut [u64], i: usize, v: bool) {
    if v {
        bits[i / 64] |= 1 << (i % 64);
    } else {
        bits[i / 64] &= !(1 << (i % 64));
    }
}

/// A sparse nonnegative function of the listed gates.
#[derive(Clone, Debug)]
struct Factor {
    vars: Vec<GateId>,
    table: HashMap<Bits, BigRational>,
}

struct Junction<'a> {
    c: &'a BoolCircuit,
    t: &'a TreeDecomposition,
    pi: &'a HashMap<GateId, BigRational>,
    /// Gates whose factor lives in each bag, in topological order.
    local: Vec<Vec<GateId>>,
    beta: Vec<usize>,
}

impl<'a> Junction<'a> {
    fn new(c: &'a BoolCircuit, t: &'a TreeDecomposition, pi: &'a HashMap<GateId, BigRational>) -> Result<Self> {
        c.validate()?;
        if t.is_empty() || !c.check_decomposition(t) {
            return Err(Error::InvalidDecomposition("not a tree decomposition of the circuit".into()));
        }
        for g in c.inputs() {
            match pi.get(&g) {
                None => return Err(Error::PartialValuation(c.input_name(g).to_string())),
                Some(p) if p < &BigRational::zero() || p > &BigRational::one() => {
                    return Err(Error::input(format!("probability {p} of {} is not in [0,1]", c.input_name(g))))
                }
                _ => {}
            }
        }
        let mut beta = vec![usize::MAX; c.len()];
        for b in t.postorder() {
            for &g in &t.bags[b].dom {
                if beta[g] == usize::MAX && c.gates[g].inputs.iter().all(|&i| t.bags[b].contains(i)) {
                    beta[g] = b;
                }
            }
        }
        let mut local = vec![Vec::new(); t.len()];
        for (g, &b) in beta.iter().enumerate() {
            local[b].push(g);
        }
        Ok(Junction { c, t, pi, local, beta })
    }

    fn separator(&self, a: usize, b: usize) -> Vec<GateId> {
        self.t.bags[a].dom.iter().copied().filter(|&g| self.t.bags[b].contains(g)).collect()
    }

    /// Sums the product of the bag's local factors and `incoming` over all
    /// bag gates outside `target`.
    fn bag_table(&self, b: usize, incoming: &[&Factor], target: &[GateId]) -> Factor {
        let dom = &self.t.bags[b].dom;
        let pos = |g: GateId| dom.binary_search(&g).expect("gate in bag");
        let words = dom.len().div_ceil(64).max(1);
        let mut assigned = vec![false; dom.len()];
        let mut rows: Vec<(Bits, BigRational)> = vec![(vec![0; words], BigRational::one())];

        fn branch(rows: Vec<(Bits, BigRational)>, i: usize) -> Vec<(Bits, BigRational)> {
            let mut out = Vec::with_capacity(rows.len() * 2);
            for (bits, w) in rows {
                let mut one = bits.clone();
                set(&mut one, i, true);
                out.push((bits, w.clone()));
                out.push((one, w));
            }
            out
        }

        for f in incoming {
            let locals: Vec<usize> = f.vars.iter().map(|&g| pos(g)).collect();
            let shared: Vec<usize> = (0..locals.len()).filter(|&j| assigned[locals[j]]).collect();
            let mut index: HashMap<Vec<bool>, Vec<(&Bits, &BigRational)>> = HashMap::new();
            for (key, w) in &f.table {
                index.entry(shared.iter().map(|&j| get(key, j)).collect()).or_default().push((key, w));
            }
            let mut next = Vec::new();
            for (bits, w) in rows {
                let probe: Vec<bool> = shared.iter().map(|&j| get(&bits, locals[j])).collect();
                for (key, w2) in index.get(&probe).into_iter().flatten() {
                    let mut nb = bits.clone();
                    for (j, &l) in locals.iter().enumerate() {
                        if !assigned[l] {
                            set(&mut nb, l, get(key, j));
                        }
                    }
                    next.push((nb, &w * *w2));
                }
            }
            rows = next;
            for &l in &locals {
                assigned[l] = true;
            }
        }

        for &g in &self.local[b] {
            let gate = &self.c.gates[g];
            for &i in &gate.inputs {
                let l = pos(i);
                if !assigned[l] {
                    rows = branch(rows, l);
                    assigned[l] = true;
                }
            }
            let l = pos(g);
            if gate.kind == GateKind::Input {
                let p1 = &self.pi[&g];
                let p0 = BigRational::one() - p1;
                if !assigned[l] {
                    rows = branch(rows, l);
                    assigned[l] = true;
                }
                for (bits, w) in rows.iter_mut() {
                    *w *= if get(bits, l) { p1 } else { &p0 };
                }
                rows.retain(|(_, w)| !w.is_zero());
                continue;
            }
            let ins: Vec<usize> = gate.inputs.iter().map(|&i| pos(i)).collect();
            let value = |bits: &Bits| match gate.kind {
                GateKind::Not => !get(bits, ins[0]),
                GateKind::And => ins.iter().all(|&i| get(bits, i)),
                GateKind::Or => ins.iter().any(|&i| get(bits, i)),
                GateKind::Input => unreachable!(),
            };
            if assigned[l] {
                rows.retain(|(bits, _)| value(bits) == get(bits, l));
            } else {
                for (bits, _) in rows.iter_mut() {
                    let v = value(bits);
                    set(bits, l, v);
                }
                assigned[l] = true;
            }
        }

        for &g in target {
            let l = pos(g);
            if !assigned[l] {
                rows = branch(rows, l);
                assigned[l] = true;
            }
        }
        let tpos: Vec<usize> = target.iter().map(|&g| pos(g)).collect();
        let mut table: HashMap<Bits, BigRational> = HashMap::new();
        let twords = target.len().div_ceil(64).max(1);
        for (bits, w) in rows {
            let mut key = vec![0u64; twords];
            for (j, &l) in tpos.iter().enumerate() {
                set(&mut key, j, get(&bits, l));
            }
            *table.entry(key).or_insert_with(BigRational::zero) += w;
        }
        Factor { vars: target.to_vec(), table }
    }

    /// Messages from every bag to its parent.
    fn collect(&self) -> Vec<Option<Factor>> {
        let mut up: Vec<Option<Factor>> = vec![None; self.t.len()];
        for b in self.t.postorder() {
            let Some(p) = self.t.bags[b].parent else { continue };
            let incoming: Vec<&Factor> = self.t.bags[b].children.iter().map(|&c| up[c].as_ref().unwrap()).collect();
            up[b] = Some(self.bag_table(b, &incoming, &self.separator(b, p)));
        }
        up
    }

    /// Messages from every parent to the given bags (and their ancestors).
    fn distribute(&self, up: &[Option<Factor>], wanted: &[bool]) -> Vec<Option<Factor>> {
        let mut down: Vec<Option<Factor>> = vec![None; self.t.len()];
        for b in self.t.preorder() {
            for &c in &self.t.bags[b].children {
                if !wanted[c] {
                    continue;
                }
                let mut incoming: Vec<&Factor> = self.t.bags[b]
                    .children
                    .iter()
                    .filter(|&&o| o != c)
                    .map(|&o| up[o].as_ref().unwrap())
                    .collect();
                if let Some(d) = &down[b] {
                    incoming.push(d);
                }
                down[c] = Some(self.bag_table(b, &incoming, &self.separator(c, b)));
            }
        }
        down
    }

    /// Marks the given bags and all their ancestors.
    fn with_ancestors(&self, bags: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut wanted = vec![false; self.t.len()];
        for mut b in bags {
            while !wanted[b] {
                wanted[b] = true;
                match self.t.bags[b].parent {
                    Some(p) => b = p,
                    None => break,
                }
            }
        }
        wanted
    }

    fn marginals(&self, gates: &[GateId]) -> Vec<BigRational> {
        let up = self.collect();
        let bags: Vec<usize> = gates.iter().map(|&g| self.home(g)).collect();
        let down = self.distribute(&up, &self.with_ancestors(bags.iter().copied()));
        let mut by_bag: HashMap<usize, Vec<GateId>> = HashMap::new();
        for (&g, &b) in gates.iter().zip(&bags) {
            let v = by_bag.entry(b).or_default();
            if !v.contains(&g) {
                v.push(g);
            }
        }
        let mut result: HashMap<GateId, BigRational> = HashMap::new();
        for (b, gs) in by_bag {
            let mut incoming: Vec<&Factor> = self.t.bags[b].children.iter().map(|&c| up[c].as_ref().unwrap()).collect();
            if let Some(d) = &down[b] {
                incoming.push(d);
            }
            let f = self.bag_table(b, &incoming, &gs);
            let total: BigRational = f.table.values().sum();
            for (j, &g) in gs.iter().enumerate() {
                let ones: BigRational = f.table.iter().filter(|(k, _)| get(k, j)).map(|(_, w)| w).sum();
                result.insert(g, if total.is_zero() { total.clone() } else { ones / &total });
            }
        }
        gates.iter().map(|g| result[g].clone()).collect()
    }

    /// The root when it holds `g`, else the bag holding `g`'s factor.
    fn home(&self, g: GateId) -> usize {
        if self.t.bags[self.t.root].contains(g) {
            self.t.root
        } else {
            self.beta[g]
        }
    }
}

/// Probability that the output gate is true when every input `g` is true
/// independently with probability `pi[g]`. `t` must be a tree
/// decomposition of the circuit (every gate together with its inputs in
/// some bag).
pub fn message_passing_prob(c: &BoolCircuit, t: &TreeDecomposition, pi: &HashMap<GateId, BigRational>) -> Result<BigRational> {
    let j = Junction::new(c, t, pi)?;
    Ok(j.marginals(&[c.output]).pop().unwrap())
}

/// Probability that each of `gates` is true, by a full two-pass
/// propagation.
pub fn gate_marginals(
    c: &BoolCircuit,
    t: &TreeDecomposition,
    pi: &HashMap<GateId, BigRational>,
    gates: &[GateId],
) -> Result<Vec<BigRational>> {
    if let Some(&g) = gates.iter().find(|&&g| g >= c.len()) {
        return Err(Error::input(format!("no gate {g}")));
    }
    Ok(Junction::new(c, t, pi)?.marginals(gates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::CircuitBuilder;
    use num_bigint::BigInt;

    fn half() -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(2))
    }

    #[test]
    fn single_input_and_product() {
        let mut b = CircuitBuilder::new();
        let x = b.input("x");
        let c = b.finish(x);
        let pi: HashMap<_, _> = [(x, half())].into();
        assert_eq!(message_passing_prob(&c, &TreeDecomposition::single(vec![x]), &pi).unwrap(), half());

        let mut b = CircuitBuilder::new();
        let x = b.input("x");
        let y = b.input("y");
        let a = b.and(vec![x, y]);
        let c = b.finish(a);
        let t = TreeDecomposition::from_parts(vec![vec![x, y, a], vec![x], vec![y]], vec![vec![1, 2], vec![], vec![]], 0);
        let pi: HashMap<_, _> = [(x, half()), (y, half())].into();
        assert_eq!(message_passing_prob(&c, &t, &pi).unwrap(), half() * half());
    }

    #[test]
    fn output_below_the_root() {
        // Output gate only in a leaf bag: needs the downward pass.
        let mut b = CircuitBuilder::new();
        let x = b.input("x");
        let y = b.input("y");
        let n = b.not(x);
        let o = b.or(vec![n, y]);
        let c = b.finish(o);
        let t = TreeDecomposition::from_parts(vec![vec![x, y], vec![x, y, n, o]], vec![vec![1], vec![]], 0);
        let pi: HashMap<_, _> = [(x, half()), (y, half())].into();
        let expect = BigRational::new(BigInt::from(3), BigInt::from(4));
        assert_eq!(message_passing_prob(&c, &t, &pi).unwrap(), expect);
        let m = gate_marginals(&c, &t, &pi, &[x, n, o]).unwrap();
        assert_eq!(m, vec![half(), half(), expect]);
    }

    #[test]
    fn rejects_bad_input() {
        let mut b = CircuitBuilder::new();
        let x = b.input("x");
        let y = b.input("y");
        let a = b.and(vec![x, y]);
        let c = b.finish(a);
        let pi: HashMap<_, _> = [(x, half()), (y, half())].into();
        let bad = TreeDecomposition::from_parts(vec![vec![x, a], vec![y]], vec![vec![1], vec![]], 0);
        assert!(matches!(message_passing_prob(&c, &bad, &pi), Err(Error::InvalidDecomposition(_))));
        let partial: HashMap<_, _> = [(x, half())].into();
        let t = TreeDecomposition::single(vec![x, y, a]);
        assert!(matches!(message_passing_prob(&c, &t, &partial), Err(Error::PartialValuation(_))));
    }
}
