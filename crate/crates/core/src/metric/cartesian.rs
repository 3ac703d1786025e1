use super::{brioschi, is_spd, Christoffel, Metric, Point, Tensor, Vector};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::Jet;
use crate::profile::MAX_ORDER;

/// Metric on a Cartesian `(x, y)` chart with closed-form components.
#[derive(Debug, Clone)]
pub struct CartesianMetric {
    g11: Expr,
    g12: Expr,
    g22: Expr,
    euclidean: bool,
}

impl CartesianMetric {
    /// Components given as expressions in `x` and `y`.
    pub fn new(g11: Expr, g12: Expr, g22: Expr) -> Result<Self> {
        for e in [&g11, &g12, &g22] {
            if e.num_vars() != 2 {
                return Err(Error::Expression(
                    "metric components take the variables x and y".into(),
                ));
            }
        }
        Ok(Self {
            g11,
            g12,
            g22,
            euclidean: false,
        })
    }

    pub fn parse(g11: &str, g12: &str, g22: &str) -> Result<Self> {
        let vars = ["x", "y"];
        Self::new(
            Expr::parse(g11, &vars)?,
            Expr::parse(g12, &vars)?,
            Expr::parse(g22, &vars)?,
        )
    }

    /// `dx^2 + dy^2`.
    pub fn euclidean() -> Self {
        let mut m = Self::parse("1", "0", "1").expect("constant expressions parse");
        m.euclidean = true;
        m
    }

    /// `exp(2 phi) (dx^2 + dy^2)` for a conformal exponent `phi(x, y)`.
    pub fn conformal(phi: &str) -> Result<Self> {
        let c = format!("exp(2*({phi}))");
        Self::parse(&c, "0", &c)
    }

    /// The round sphere of radius 1 in stereographic coordinates.
    pub fn stereographic_sphere() -> Self {
        Self::conformal("ln(2) - ln(1 + x^2 + y^2)").expect("fixed expression parses")
    }

    pub fn components(&self) -> [&Expr; 3] {
        [&self.g11, &self.g12, &self.g22]
    }

    fn jet_tensor<const N: usize>(&self, p: &Point, d: &Vector) -> [Jet<N>; 3] {
        let args = [Jet::line(p.x, d.x), Jet::line(p.y, d.y)];
        [
            self.g11.eval_jet(&args),
            self.g12.eval_jet(&args),
            self.g22.eval_jet(&args),
        ]
    }

    fn checked(&self, p: &Point) -> Result<Tensor> {
        let a = [p.x, p.y];
        let g = Tensor::new(
            self.g11.eval(&a),
            self.g12.eval(&a),
            self.g12.eval(&a),
            self.g22.eval(&a),
        );
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::OutsideChart(p.x, p.y));
        }
        if !is_spd(&g) {
            return Err(Error::DegenerateMetric(p.x, p.y));
        }
        Ok(g)
    }

    fn partials<const N: usize>(&self, p: &Point, d: &Vector) -> Vec<f64> {
        let j = self.jet_tensor::<N>(p, d);
        let mut out = vec![0.0; 3 * N];
        for (c, jet) in j.iter().enumerate() {
            let ds = jet.derivatives();
            out[c * N..(c + 1) * N].copy_from_slice(&ds);
        }
        out
    }
}

fn sym(a: f64, b: f64, c: f64) -> Tensor {
    Tensor::new(a, b, b, c)
}

impl Metric for CartesianMetric {
    fn tensor(&self, p: &Point) -> Result<Tensor> {
        self.checked(p)
    }

    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        let g = self.checked(p)?;
        if self.euclidean {
            return Ok(Christoffel::default());
        }
        let dx = self.partials::<2>(p, &Vector::new(1.0, 0.0));
        let dy = self.partials::<2>(p, &Vector::new(0.0, 1.0));
        let d = [sym(dx[1], dx[3], dx[5]), sym(dy[1], dy[3], dy[5])];
        Christoffel::from_partials(&g, &d)
    }

    fn gauss_curvature(&self, p: &Point) -> Result<f64> {
        let g = self.checked(p)?;
        if self.euclidean {
            return Ok(0.0);
        }
        let dx = self.partials::<3>(p, &Vector::new(1.0, 0.0));
        let dy = self.partials::<3>(p, &Vector::new(0.0, 1.0));
        let dd = self.partials::<3>(p, &Vector::new(1.0, 1.0));
        let d1 = [sym(dx[1], dx[4], dx[7]), sym(dy[1], dy[4], dy[7])];
        // F_xy from the second derivative along the diagonal
        let f_xy = 0.5 * (dd[5] - dx[5] - dy[5]);
        Ok(brioschi(&g, &d1, dy[2], f_xy, dx[8]))
    }

    fn tensor_line_jet(&self, p: &Point, dir: &Vector, order: usize) -> Result<Vec<Tensor>> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooHigh {
                requested: order,
                max: MAX_ORDER,
            });
        }
        self.checked(p)?;
        let j = self.jet_tensor::<{ MAX_ORDER + 1 }>(p, dir);
        let d: Vec<[f64; MAX_ORDER + 1]> = j.iter().map(|v| v.derivatives()).collect();
        Ok((0..=order)
            .map(|k| sym(d[0][k], d[1][k], d[2][k]))
            .collect())
    }

    fn is_euclidean(&self) -> bool {
        self.euclidean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_symbols_vanish() {
        let m = CartesianMetric::parse("1", "0", "1").unwrap();
        let c = m.christoffel(&Point::new(0.3, -0.2)).unwrap();
        assert!(c.gamma.iter().flatten().flatten().all(|v| v.abs() < 1e-15));
        assert_eq!(m.gauss_curvature(&Point::new(0.1, 0.1)).unwrap(), 0.0);
    }

    #[test]
    fn conformal_in_x_symbols() {
        let m = CartesianMetric::conformal("x").unwrap();
        let c = m.christoffel(&Point::new(0.4, 0.7)).unwrap();
        assert_relative_eq!(c.gamma[0][0][0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.gamma[0][1][1], -1.0, epsilon = 1e-14);
        assert_relative_eq!(c.gamma[1][0][1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.gamma[1][1][0], 1.0, epsilon = 1e-14);
        assert!(c.gamma[1][0][0].abs() < 1e-14 && c.gamma[1][1][1].abs() < 1e-14);
        // K = -exp(-2 phi) Lap phi = 0 for linear phi
        assert!(m.gauss_curvature(&Point::new(0.4, 0.7)).unwrap().abs() < 1e-13);
    }

    #[test]
    fn stereographic_sphere_has_unit_curvature() {
        let m = CartesianMetric::stereographic_sphere();
        for p in [
            Point::new(0.0, 0.0),
            Point::new(0.7, -1.3),
            Point::new(2.0, 0.5),
        ] {
            assert_relative_eq!(m.gauss_curvature(&p).unwrap(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn exact_curvature_matches_finite_differences() {
        let m = CartesianMetric::parse("1 + x^2", "0.3*x*y", "2 + sin(y)").unwrap();
        let p = Point::new(0.3, 0.4);
        let exact = m.gauss_curvature(&p).unwrap();
        let fd = super::super::fd_gauss_curvature(&m, &p).unwrap();
        assert_relative_eq!(exact, fd, epsilon = 1e-7);
        let c = m.christoffel(&p).unwrap();
        let g = m.tensor(&p).unwrap();
        let c_fd =
            Christoffel::from_partials(&g, &super::super::fd_partials(&m, &p).unwrap()).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(c.gamma[k][i][j], c_fd.gamma[k][i][j], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn degenerate_and_undefined_points_are_errors() {
        let m = CartesianMetric::parse("x", "0", "1").unwrap();
        assert!(matches!(
            m.tensor(&Point::new(-1.0, 0.0)),
            Err(Error::DegenerateMetric(..))
        ));
        let m = CartesianMetric::parse("ln(x)", "0", "1").unwrap();
        assert!(matches!(
            m.tensor(&Point::new(-1.0, 0.0)),
            Err(Error::OutsideChart(..))
        ));
    }
}
