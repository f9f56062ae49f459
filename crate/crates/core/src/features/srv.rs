use serde::{Deserialize, Serialize};

use super::{midpoints, ZERO_VELOCITY};
use crate::dp::CostOracle;
use crate::error::{Error, Result};
use crate::motion::Vec3;

/// Square-root velocity samples `q = v / √‖v‖` on the midpoint grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrvCurve {
    pub q: Vec<Vec3>,
    pub times: Vec<f64>,
}

pub fn srvt_r3(positions: &[Vec3], times: &[f64]) -> Result<SrvCurve> {
    if positions.len() < 2 || positions.len() != times.len() {
        return Err(Error::InvalidInput(format!(
            "{} positions with {} times",
            positions.len(),
            times.len()
        )));
    }
    let q = positions
        .windows(2)
        .zip(times.windows(2))
        .map(|(c, t)| {
            let v = (c[1] - c[0]) / (t[1] - t[0]);
            let speed = v.norm();
            if speed < ZERO_VELOCITY {
                Vec3::zeros()
            } else {
                v / speed.sqrt()
            }
        })
        .collect();
    Ok(SrvCurve {
        q,
        times: midpoints(times),
    })
}

/// `c(i, j) = ‖q_a(i) − q_b(j)‖²`.
pub fn srv_cost(a: &SrvCurve, b: &SrvCurve) -> CostOracle<'static> {
    CostOracle::pairwise(a.q.clone(), b.q.clone(), |x, y| (x - y).norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::uniform_times;

    #[test]
    fn unit_speed_line() {
        let t = uniform_times(11);
        let c: Vec<Vec3> = t.iter().map(|&s| Vec3::new(s, 0.0, 0.0)).collect();
        let srv = srvt_r3(&c, &t).unwrap();
        assert_eq!(srv.q.len(), 10);
        for q in &srv.q {
            assert!((q - Vec3::x()).norm() < 1e-12);
        }
        assert!((srv.times[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn constant_curve_is_zero() {
        let t = uniform_times(5);
        let c = vec![Vec3::new(1.0, 2.0, 3.0); 5];
        assert!(srvt_r3(&c, &t).unwrap().q.iter().all(|q| *q == Vec3::zeros()));
    }

    #[test]
    fn parabola_against_analytic() {
        // c(t) = (t², 0, 0): q(t) = (√(2t), 0, 0)
        for &n in &[101usize, 401] {
            let t = uniform_times(n);
            let c: Vec<Vec3> = t.iter().map(|&s| Vec3::new(s * s, 0.0, 0.0)).collect();
            let srv = srvt_r3(&c, &t).unwrap();
            let dt = 1.0 / (n - 1) as f64;
            let worst = srv
                .q
                .iter()
                .zip(&srv.times)
                .map(|(q, &m)| (q.x - (2.0 * m).sqrt()).abs())
                .fold(0.0, f64::max);
            assert!(worst < 2.0 * dt, "n={n} worst={worst}");
        }
    }

    #[test]
    fn cost_values() {
        let a = SrvCurve { q: vec![Vec3::x()], times: vec![0.5] };
        let b = SrvCurve { q: vec![Vec3::y()], times: vec![0.5] };
        assert_eq!(srv_cost(&a, &b).cost(0, 0), 2.0);
        assert_eq!(srv_cost(&a, &a).cost(0, 0), 0.0);
    }
}
