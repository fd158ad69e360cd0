//! Chernoff tail bound `Pr[X >= d] <= min_s e^{-sd} F(s)` over `0 < s < bound`.
//!
//! `log F(s) - s d` is convex on the convergence interval, so a coarse
//! log-spaced grid locates the basin and golden-section search refines it.

use super::ExactLaw;
use crate::error::{Error, Result};

const GRID_POINTS: usize = 64;
const EDGE_MARGIN: f64 = 1e-6;
const RELATIVE_WIDTH: f64 = 1e-9;

pub(super) fn bound(law: &ExactLaw, d: f64) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::InvalidArgument(format!("age threshold must be non-negative, got {d}")));
    }
    // The objective's slope at 0 is E[X] - d: no s > 0 improves on 1.
    if d <= law.mean() {
        return Ok(1.0);
    }
    let top = law.convergence_bound() * (1.0 - EDGE_MARGIN);
    let bottom = law.convergence_bound() * EDGE_MARGIN;
    let objective = |s: f64| law.plan.mgf_real(s).ln() - s * d;

    let ratio = (top / bottom).powf(1.0 / (GRID_POINTS - 1) as f64);
    let grid: Vec<f64> =
        (0..GRID_POINTS).map(|k| if k == GRID_POINTS - 1 { top } else { bottom * ratio.powi(k as i32) }).collect();
    let values: Vec<f64> = grid.iter().map(|&s| objective(s)).collect();
    let best = (0..GRID_POINTS).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();

    let mut lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let mut hi = if best == GRID_POINTS - 1 { top } else { grid[best + 1] };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    while hi - lo > RELATIVE_WIDTH * hi {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    let optimum = values[best].min(f1).min(f2);
    Ok(optimum.exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use crate::exact::ExactLaw;
    use crate::topology;

    fn erlang2() -> ExactLaw {
        let net = topology::serial_cascade(1.0, &[1.0]).unwrap();
        ExactLaw::new(&net, &net.subset(&["v1"]).unwrap()).unwrap()
    }

    #[test]
    fn vacuous_below_mean() {
        let law = erlang2();
        assert_eq!(law.chernoff(0.0).unwrap(), 1.0);
        assert_eq!(law.chernoff(2.0).unwrap(), 1.0);
    }

    #[test]
    fn matches_calculus_optimum() {
        // For F(s) = (1 - s)^-2 the minimiser is s = 1 - 2/d, giving e^{2-d} d^2 / 4.
        let law = erlang2();
        for d in [3.0f64, 4.0, 8.0, 10.0, 40.0] {
            let expect = (2.0 - d).exp() * d * d / 4.0;
            let got = law.chernoff(d).unwrap();
            assert!((got - expect).abs() <= 1e-9 * expect, "d={d}: {got} vs {expect}");
        }
    }

    #[test]
    fn dominates_exact_tail() {
        let law = erlang2();
        let d = 10.0f64;
        assert!(law.chernoff(d).unwrap() >= 11.0 * (-d).exp());
    }

    #[test]
    fn decreases_in_d() {
        let net = topology::triangle(1.0, 1.0, 2.0, 3.0).unwrap();
        let law = ExactLaw::new(&net, &net.subset(&["d"]).unwrap()).unwrap();
        let bounds: Vec<f64> = (0..40).map(|k| law.chernoff(0.5 * k as f64).unwrap()).collect();
        assert!(bounds.windows(2).all(|w| w[1] <= w[0]));
        assert!(bounds[39] < 1e-6);
    }
}
