//! Exact stationary age computations by subset recursion.
//!
//! Every quantity here comes from one recurrence over node subsets: the mean
//! age of a subset is driven by the edges entering it from outside and by the
//! means of the subsets one node larger. See [`recurrence`] for the formulas.
//! The cost is exponential in the number of user nodes, so the engine refuses
//! networks above [`ExactLimits::max_nodes`].

mod chernoff;
mod inversion;
pub(crate) mod recurrence;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::{AugmentedNetwork, NodeId, SubsetId};
use crate::par::Exec;
use recurrence::{Plan, RootedGraph};

pub use inversion::CdfValue;

pub const DEFAULT_MAX_EXACT_NODES: usize = 20;
/// Beyond this the dense table would not fit in memory on ordinary machines.
pub const HARD_MAX_EXACT_NODES: usize = 28;
/// Environment variable that overrides the default size limit.
pub const MAX_NODES_ENV: &str = "AOI_MAX_EXACT_NODES";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    max_nodes: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits { max_nodes: DEFAULT_MAX_EXACT_NODES }
    }
}

impl ExactLimits {
    pub fn new(max_nodes: usize) -> Result<Self> {
        if max_nodes > HARD_MAX_EXACT_NODES {
            return Err(Error::InvalidArgument(format!(
                "exact engine limit {max_nodes} exceeds the hard maximum {HARD_MAX_EXACT_NODES}"
            )));
        }
        Ok(ExactLimits { max_nodes })
    }

    /// Reads [`MAX_NODES_ENV`], falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(MAX_NODES_ENV) {
            Ok(v) => {
                let n = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("{MAX_NODES_ENV}={v} is not a node count")))?;
                Self::new(n)
            }
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    fn check(&self, nodes: usize) -> Result<()> {
        if nodes > self.max_nodes {
            return Err(Error::NetworkTooLarge { nodes, limit: self.max_nodes });
        }
        Ok(())
    }
}

/// Mean ages of every non-empty subset of user nodes.
#[derive(Debug, Clone)]
pub struct AgeTable {
    values: Vec<f64>,
    nodes: usize,
    network_hash: u64,
}

impl AgeTable {
    pub fn get(&self, a: &SubsetId) -> Option<f64> {
        let mask = a.mask()?;
        if mask == 0 || mask >> self.nodes != 0 {
            return None;
        }
        Some(self.values[mask as usize])
    }

    pub fn singleton(&self, v: NodeId) -> f64 {
        self.values[1 << v.0]
    }

    pub fn network_hash(&self) -> u64 {
        self.network_hash
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// All (subset mask, mean) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.values.iter().enumerate().skip(1).map(|(m, &v)| (m as u64, v))
    }
}

fn rooted_graph(net: &AugmentedNetwork) -> RootedGraph {
    let tp = net.theta_prime();
    let incoming = net
        .user_nodes()
        .map(|v| net.incoming(v).map(|e| ((e.from != tp).then_some(e.from.0), e.rate)).collect())
        .collect();
    RootedGraph::new(incoming, Some((net.source().0, net.lambda())))
}

fn user_mask(net: &AugmentedNetwork, a: &SubsetId) -> Result<u64> {
    if a.is_empty() {
        return Err(Error::EmptySubset);
    }
    if a.contains(net.theta_prime()) {
        return Err(Error::SubsetContainsVirtualSource);
    }
    match a.mask() {
        Some(m) if m >> net.node_count() == 0 => Ok(m),
        _ => Err(Error::InvalidArgument("subset refers to nodes outside the network".into())),
    }
}

/// Mean age of every non-empty user subset.
pub fn average_age_all(net: &AugmentedNetwork) -> Result<AgeTable> {
    average_age_all_with(net, ExactLimits::default(), Exec::default())
}

pub fn average_age_all_with(net: &AugmentedNetwork, limits: ExactLimits, exec: Exec) -> Result<AgeTable> {
    limits.check(net.node_count())?;
    let values = rooted_graph(net).mean_table(exec);
    Ok(AgeTable { values, nodes: net.node_count(), network_hash: net.fingerprint() })
}

/// Mean age of one subset, touching only the supersets the recursion needs.
pub fn average_age(net: &AugmentedNetwork, a: &SubsetId) -> Result<f64> {
    Ok(ExactLaw::new(net, a)?.mean())
}

/// `E[exp(s * age_A)]` for complex `s` with real part below the convergence bound.
pub fn mgf(net: &AugmentedNetwork, a: &SubsetId, s: Complex64) -> Result<Complex64> {
    ExactLaw::new(net, a)?.mgf(s)
}

pub fn mgf_convergence_bound(net: &AugmentedNetwork, a: &SubsetId) -> Result<f64> {
    Ok(ExactLaw::new(net, a)?.convergence_bound())
}

/// `Pr[age_A <= d]` by numerical inversion of the characteristic function.
pub fn cdf_via_inversion(net: &AugmentedNetwork, a: &SubsetId, d: f64) -> Result<f64> {
    Ok(ExactLaw::new(net, a)?.cdf(d)?.value)
}

/// Chernoff upper bound on `Pr[age_A >= d]`.
pub fn chernoff_bound(net: &AugmentedNetwork, a: &SubsetId, d: f64) -> Result<f64> {
    ExactLaw::new(net, a)?.chernoff(d)
}

/// The stationary law of one subset's age, prepared for repeated queries.
///
/// Building it walks the recursion once; afterwards the mean, the MGF at any
/// argument, CDF points and tail bounds are cheap.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    plan: Plan,
    mean: f64,
    bound: f64,
}

impl ExactLaw {
    pub fn new(net: &AugmentedNetwork, a: &SubsetId) -> Result<Self> {
        Self::with_limits(net, a, ExactLimits::default())
    }

    pub fn with_limits(net: &AugmentedNetwork, a: &SubsetId, limits: ExactLimits) -> Result<Self> {
        let mask = user_mask(net, a)?;
        limits.check(net.node_count())?;
        let plan = rooted_graph(net).plan(mask);
        let mean = plan.mean();
        let bound = plan.convergence_bound();
        Ok(ExactLaw { plan, mean, bound })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Real arguments strictly below this keep every recursion denominator positive.
    pub fn convergence_bound(&self) -> f64 {
        self.bound
    }

    /// Number of subsets the recursion visits from this one.
    pub fn subsets_visited(&self) -> usize {
        self.plan.len()
    }

    pub fn mgf(&self, s: Complex64) -> Result<Complex64> {
        if s.re.is_nan() || s.re >= self.bound {
            return Err(Error::OutsideConvergenceRegion { s: s.re, bound: self.bound });
        }
        Ok(self.plan.mgf(s))
    }

    pub fn mgf_real(&self, s: f64) -> Result<f64> {
        if s.is_nan() || s >= self.bound {
            return Err(Error::OutsideConvergenceRegion { s, bound: self.bound });
        }
        Ok(self.plan.mgf_real(s))
    }

    /// Characteristic function `E[exp(i w age)]`.
    pub fn characteristic(&self, w: f64) -> Complex64 {
        self.plan.mgf(Complex64::new(0.0, w))
    }

    pub fn cdf(&self, d: f64) -> Result<CdfValue> {
        inversion::cdf(self, d)
    }

    pub fn chernoff(&self, d: f64) -> Result<f64> {
        chernoff::bound(self, d)
    }

    /// When the subset contains the source its age is exactly Exp(lambda).
    pub(crate) fn exponential_rate(&self) -> Option<f64> {
        if self.plan.start_is_pinned() {
            self.plan.pinned_rate()
        } else {
            None
        }
    }
}
