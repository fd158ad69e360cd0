//! The subset recurrences shared by the global engine and the per-block
//! computations of the cascade engine.
//!
//! A rooted graph has `n` ordinary nodes and a root. Subsets are bitmasks over
//! the ordinary nodes. For a subset `A` the boundary is every edge `(u, v)`
//! with `v` in `A` and `u` outside; the root is always outside. The mean of
//! the shortest exponential path from the root into `A` satisfies
//!
//! `E[A] = (1 + sum_{(u,v) in E_A} mu_uv * E[A + u]) / mu_A`, with `E[A + root] = 0`,
//!
//! and the MGF satisfies `F[A](s) = sum mu_uv / (mu_A - s) * F[A + u](s)` with
//! `F[A + root] = 1`. An optional pinned node short-circuits every subset that
//! contains it: for the augmented network that is the source, whose age is
//! exactly exponential with rate lambda.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::par::{map_indexed, Exec};

#[derive(Debug, Clone)]
pub(crate) struct RootedGraph {
    n: usize,
    /// Incoming edges per ordinary node as (tail, rate); `None` is the root.
    incoming: Vec<Vec<(Option<usize>, f64)>>,
    /// Node whose membership fixes the subset's law to Exp(rate).
    pinned: Option<(usize, f64)>,
}

impl RootedGraph {
    pub(crate) fn new(incoming: Vec<Vec<(Option<usize>, f64)>>, pinned: Option<(usize, f64)>) -> Self {
        RootedGraph { n: incoming.len(), incoming, pinned }
    }

    pub(crate) fn node_count(&self) -> usize {
        self.n
    }

    fn is_pinned(&self, mask: u64) -> bool {
        matches!(self.pinned, Some((p, _)) if mask >> p & 1 == 1)
    }

    fn interior_mean(&self, mask: u64, table: &[f64]) -> f64 {
        let mut mu = 0.0;
        let mut acc = 1.0;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            for &(tail, rate) in &self.incoming[v] {
                match tail {
                    None => mu += rate,
                    Some(u) if mask >> u & 1 == 0 => {
                        mu += rate;
                        acc += rate * table[(mask | 1 << u) as usize];
                    }
                    Some(_) => {}
                }
            }
        }
        acc / mu
    }

    /// Dense table of means indexed by mask; entry 0 is unused (NaN).
    ///
    /// Masks are filled in decreasing popcount, so every superset is ready
    /// before it is read. Within one popcount level the entries are
    /// independent and may be computed in parallel; each entry's arithmetic is
    /// the same either way.
    pub(crate) fn mean_table(&self, exec: Exec) -> Vec<f64> {
        let size = 1usize << self.n;
        let mut table = vec![f64::NAN; size];
        let pinned_mean = self.pinned.map(|(_, rate)| 1.0 / rate);
        if exec == Exec::Sequential || self.n < 14 {
            // Adding a node to a mask increases it, so plain descending order
            // already visits supersets first.
            for mask in (1..size as u64).rev() {
                table[mask as usize] = match pinned_mean {
                    Some(m) if self.is_pinned(mask) => m,
                    _ => self.interior_mean(mask, &table),
                };
            }
            return table;
        }
        let mut levels: Vec<Vec<u64>> = vec![Vec::new(); self.n + 1];
        for mask in 1..size as u64 {
            levels[mask.count_ones() as usize].push(mask);
        }
        for level in levels.iter().rev() {
            let values = map_indexed(exec, level.len(), |k| {
                let mask = level[k];
                match pinned_mean {
                    Some(m) if self.is_pinned(mask) => m,
                    _ => self.interior_mean(mask, &table),
                }
            });
            for (&mask, v) in level.iter().zip(values) {
                table[mask as usize] = v;
            }
        }
        table
    }

    /// The subsets reachable from `start` through the recurrence, in an order
    /// where every subset comes after all the subsets it refers to.
    pub(crate) fn plan(&self, start: u64) -> Plan {
        let mut plan = Plan { states: Vec::new(), masks: Vec::new(), index: HashMap::new(), pinned_rate: None };
        self.visit(start, &mut plan);
        plan
    }

    fn visit(&self, mask: u64, plan: &mut Plan) -> usize {
        if let Some(&i) = plan.index.get(&mask) {
            return i;
        }
        let state = if self.is_pinned(mask) {
            plan.pinned_rate = self.pinned.map(|(_, r)| r);
            State::Pinned
        } else {
            let mut mu = 0.0;
            let mut terms = Vec::new();
            let mut rest = mask;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                for &(tail, rate) in &self.incoming[v] {
                    match tail {
                        None => {
                            mu += rate;
                            terms.push((None, rate));
                        }
                        Some(u) if mask >> u & 1 == 0 => {
                            mu += rate;
                            let child = self.visit(mask | 1 << u, plan);
                            terms.push((Some(child), rate));
                        }
                        Some(_) => {}
                    }
                }
            }
            State::Interior { mu, terms }
        };
        let i = plan.states.len();
        plan.states.push(state);
        plan.masks.push(mask);
        plan.index.insert(mask, i);
        i
    }
}

#[derive(Debug, Clone)]
enum State {
    Pinned,
    Interior { mu: f64, terms: Vec<(Option<usize>, f64)> },
}

/// Memoised recurrence restricted to the supersets reachable from one subset.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    states: Vec<State>,
    masks: Vec<u64>,
    index: HashMap<u64, usize>,
    pinned_rate: Option<f64>,
}

impl Plan {
    pub(crate) fn len(&self) -> usize {
        self.states.len()
    }

    pub(crate) fn start_is_pinned(&self) -> bool {
        matches!(self.states.last(), Some(State::Pinned))
    }

    pub(crate) fn pinned_rate(&self) -> Option<f64> {
        self.pinned_rate
    }

    /// Smallest pole of the MGF: the pinned rate and every boundary rate met.
    pub(crate) fn convergence_bound(&self) -> f64 {
        self.states.iter().fold(f64::INFINITY, |b, s| match s {
            State::Pinned => b.min(self.pinned_rate.unwrap_or(f64::INFINITY)),
            State::Interior { mu, .. } => b.min(*mu),
        })
    }

    pub(crate) fn mean(&self) -> f64 {
        let mut vals = Vec::with_capacity(self.states.len());
        for s in &self.states {
            let v = match s {
                State::Pinned => 1.0 / self.pinned_rate.unwrap(),
                State::Interior { mu, terms } => {
                    let mut acc = 1.0;
                    for &(t, rate) in terms {
                        if let Some(c) = t {
                            acc += rate * vals[c];
                        }
                    }
                    acc / mu
                }
            };
            vals.push(v);
        }
        *vals.last().unwrap()
    }

    /// MGF at complex `s`; the caller guarantees `Re(s)` is below the bound.
    pub(crate) fn mgf(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut vals: Vec<Complex64> = Vec::with_capacity(self.states.len());
        for st in &self.states {
            let v = match st {
                State::Pinned => {
                    let rate = self.pinned_rate.unwrap();
                    Complex64::new(rate, 0.0) / (Complex64::new(rate, 0.0) - s)
                }
                State::Interior { mu, terms } => {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(t, rate) in terms {
                        acc += rate * t.map_or(one, |c| vals[c]);
                    }
                    acc / (Complex64::new(*mu, 0.0) - s)
                }
            };
            vals.push(v);
        }
        *vals.last().unwrap()
    }

    /// MGF at real `s`.
    pub(crate) fn mgf_real(&self, s: f64) -> f64 {
        let mut vals = Vec::with_capacity(self.states.len());
        for st in &self.states {
            let v = match st {
                State::Pinned => {
                    let rate = self.pinned_rate.unwrap();
                    rate / (rate - s)
                }
                State::Interior { mu, terms } => {
                    let mut acc = 0.0;
                    for &(t, rate) in terms {
                        acc += rate * t.map_or(1.0, |c| vals[c]);
                    }
                    acc / (mu - s)
                }
            };
            vals.push(v);
        }
        *vals.last().unwrap()
    }

    #[cfg(test)]
    pub(crate) fn masks(&self) -> &[u64] {
        &self.masks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // root -> 0 -> 1 with rates 2 and 3: the path to {1} is Exp(2) + Exp(3).
    fn line() -> RootedGraph {
        RootedGraph::new(vec![vec![(None, 2.0)], vec![(Some(0), 3.0)]], None)
    }

    #[test]
    fn line_means() {
        let t = line().mean_table(Exec::Sequential);
        assert!((t[0b01] - 0.5).abs() < 1e-15);
        assert!((t[0b10] - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
        assert!((t[0b11] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plan_matches_table() {
        let g = line();
        let t = g.mean_table(Exec::Sequential);
        for mask in 1..4u64 {
            let p = g.plan(mask);
            assert_eq!(p.mean(), t[mask as usize]);
            assert_eq!(*p.masks().last().unwrap(), mask);
        }
    }

    #[test]
    fn line_mgf_is_product() {
        let p = line().plan(0b10);
        let s = 0.7;
        let expect = 2.0 / (2.0 - s) * 3.0 / (3.0 - s);
        assert!((p.mgf_real(s) - expect).abs() < 1e-14);
        assert!((p.mgf(Complex64::new(s, 0.0)).re - expect).abs() < 1e-14);
        assert_eq!(p.convergence_bound(), 2.0);
    }

    #[test]
    fn parallel_levels_match_sequential() {
        // 15-node ring-ish graph, large enough to take the levelled path.
        let n = 15;
        let mut incoming = vec![Vec::new(); n];
        incoming[0].push((None, 1.3));
        for (v, inc) in incoming.iter_mut().enumerate().skip(1) {
            inc.push((Some(v - 1), 1.0 + v as f64 * 0.1));
            if v >= 2 {
                inc.push((Some(v - 2), 0.4));
            }
        }
        incoming[0].push((Some(n - 1), 0.7));
        let g = RootedGraph::new(incoming, None);
        let a = g.mean_table(Exec::Sequential);
        let b = g.mean_table(Exec::Parallel);
        assert!(a[1..].iter().zip(&b[1..]).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
