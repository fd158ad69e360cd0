//! Closed-form mean ages for serial cascades, triangles and chains of
//! triangles, plus the survival function of the triangle's shortest path.

use crate::error::{Error, Result};

/// Rates of the triangle `s -> v -> d` with the shortcut `s -> d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleRates {
    pub lambda: f64,
    pub mu_sv: f64,
    pub mu_vd: f64,
    pub mu_sd: f64,
}

impl TriangleRates {
    pub fn new(lambda: f64, mu_sv: f64, mu_vd: f64, mu_sd: f64) -> Result<Self> {
        check_lambda(lambda)?;
        check_rate("s", "v", mu_sv)?;
        check_rate("v", "d", mu_vd)?;
        check_rate("s", "d", mu_sd)?;
        Ok(TriangleRates { lambda, mu_sv, mu_vd, mu_sd })
    }

    fn equal_rates(&self) -> bool {
        (self.mu_sv - self.mu_vd).abs() <= 1e-9 * self.mu_sv.max(self.mu_vd)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::NonPositiveLambda(lambda));
    }
    Ok(())
}

fn check_rate(from: &str, to: &str, rate: f64) -> Result<()> {
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::NonPositiveRate { from: from.into(), to: to.into(), rate });
    }
    Ok(())
}

/// `1/lambda + sum 1/mu_j` for a line of hops.
pub fn serial_cascade_age(lambda: f64, rates: &[f64]) -> Result<f64> {
    check_lambda(lambda)?;
    if rates.is_empty() {
        return Err(Error::InvalidArgument("serial cascade needs at least one hop".into()));
    }
    let mut age = 1.0 / lambda;
    for (j, &r) in rates.iter().enumerate() {
        check_rate(&format!("v{j}"), &format!("v{}", j + 1), r)?;
        age += 1.0 / r;
    }
    Ok(age)
}

/// Mean age at the triangle's destination.
pub fn triangle_age(r: TriangleRates) -> Result<f64> {
    let r = TriangleRates::new(r.lambda, r.mu_sv, r.mu_vd, r.mu_sd)?;
    if r.equal_rates() {
        let s = r.mu_sv + r.mu_sd;
        Ok(1.0 / r.lambda + 2.0 / s - r.mu_sd / (s * s))
    } else {
        Ok(1.0 / r.lambda + triangle_path(r.mu_sv, r.mu_vd, r.mu_sd))
    }
}

fn triangle_path(a: f64, b: f64, c: f64) -> f64 {
    (a + b + c) / ((a + c) * (b + c))
}

/// `P(min(S_sd, S_sv + S_vd) > x)`.
pub fn triangle_min_tail(r: TriangleRates, x: f64) -> Result<f64> {
    let r = TriangleRates::new(r.lambda, r.mu_sv, r.mu_vd, r.mu_sd)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("tail evaluated at negative x = {x}")));
    }
    let direct = (-r.mu_sd * x).exp();
    let relay = if r.equal_rates() {
        let mu = r.mu_sv;
        (1.0 + mu * x) * (-mu * x).exp()
    } else {
        let (a, b) = (r.mu_sv, r.mu_vd);
        (b * (-a * x).exp() - a * (-b * x).exp()) / (b - a)
    };
    Ok(direct * relay)
}

/// Mean age at the last node of a chain of triangles sharing end vertices.
pub fn triangle_cascade_age(lambda: f64, triangles: &[(f64, f64, f64)]) -> Result<f64> {
    check_lambda(lambda)?;
    if triangles.is_empty() {
        return Err(Error::InvalidArgument("triangle cascade needs at least one triangle".into()));
    }
    let mut age = 1.0 / lambda;
    for (i, &(a, b, c)) in triangles.iter().enumerate() {
        let (x, y, z) = (format!("v{}", 2 * i), format!("v{}", 2 * i + 1), format!("v{}", 2 * i + 2));
        check_rate(&x, &y, a)?;
        check_rate(&y, &z, b)?;
        check_rate(&x, &z, c)?;
        age += triangle_path(a, b, c);
    }
    Ok(age)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(lambda: f64, a: f64, b: f64, c: f64) -> TriangleRates {
        TriangleRates::new(lambda, a, b, c).unwrap()
    }

    #[test]
    fn serial_examples() {
        assert!((serial_cascade_age(1.0, &[2.0; 4]).unwrap() - 3.0).abs() < 1e-12);
        assert!((serial_cascade_age(1.0, &[1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((serial_cascade_age(0.5, &[1.0, 4.0]).unwrap() - 3.25).abs() < 1e-12);
        assert!(serial_cascade_age(1.0, &[]).is_err());
        assert!(serial_cascade_age(1.0, &[1.0, 0.0]).is_err());
        assert!(serial_cascade_age(-1.0, &[1.0]).is_err());
    }

    #[test]
    fn triangle_examples() {
        assert!((triangle_age(tri(1.0, 1.0, 2.0, 3.0)).unwrap() - 1.3).abs() < 1e-12);
        assert!((triangle_age(tri(1.0, 1.0, 1.0, 1.0)).unwrap() - 1.75).abs() < 1e-12);
        assert!((triangle_age(tri(2.0, 1.0, 1.0, 1.0)).unwrap() - 1.25).abs() < 1e-12);
        assert!(TriangleRates::new(1.0, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn triangle_branches_continuous() {
        let eq = triangle_age(tri(1.3, 0.7, 0.7, 2.1)).unwrap();
        let near = triangle_age(tri(1.3, 0.7, 0.7 * (1.0 + 1e-6), 2.1)).unwrap();
        assert!((eq - near).abs() < 1e-4);
        for x in [0.0, 0.3, 1.0, 4.0] {
            let a = triangle_min_tail(tri(1.0, 0.7, 0.7, 2.1), x).unwrap();
            let b = triangle_min_tail(tri(1.0, 0.7, 0.7 * (1.0 + 1e-6), 2.1), x).unwrap();
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn tail_examples() {
        let r = tri(1.0, 1.0, 2.0, 3.0);
        assert_eq!(triangle_min_tail(r, 0.0).unwrap(), 1.0);
        let expect = 2.0 * (-4.0f64).exp() - (-5.0f64).exp();
        assert!((triangle_min_tail(r, 1.0).unwrap() - expect).abs() < 1e-12);
        let eq = tri(1.0, 1.0, 1.0, 1.0);
        assert!((triangle_min_tail(eq, 1.0).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!(triangle_min_tail(r, -0.1).is_err());
    }

    #[test]
    fn tail_is_survival() {
        let r = tri(1.0, 0.4, 1.9, 0.6);
        let mut prev = 1.0;
        for k in 0..400 {
            let p = triangle_min_tail(r, k as f64 * 0.1).unwrap();
            assert!(p <= prev + 1e-15 && p >= 0.0);
            prev = p;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn cascade_examples() {
        assert!((triangle_cascade_age(1.0, &[(1.0, 1.0, 1.0)]).unwrap() - 1.75).abs() < 1e-12);
        assert!((triangle_cascade_age(1.0, &[(1.0, 1.0, 1.0); 2]).unwrap() - 2.5).abs() < 1e-12);
        assert!((triangle_cascade_age(1.0, &[(1.0, 1.0, 1.0); 4]).unwrap() - 4.0).abs() < 1e-12);
        assert!(triangle_cascade_age(1.0, &[]).is_err());
    }
}
