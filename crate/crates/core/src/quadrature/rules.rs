use crate::geometry::Point2;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Quadrature rule on a triangle; points are barycentric, weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    degree: u32,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl TriangleRule {
    /// The symmetric 13-point degree-7 rule for degree 7, a collapsed
    /// Gauss–Legendre product rule for any other degree.
    pub fn for_degree(degree: u32) -> Self {
        if degree == 7 {
            Self::dunavant7()
        } else {
            Self::conical_product(degree)
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean of `f` over the triangle (multiply by the area for the integral).
    pub fn integrate<const N: usize, F>(&self, a: Point2, b: Point2, c: Point2, f: &F) -> [f64; N]
    where
        F: Fn(Point2) -> [f64; N],
    {
        let mut acc = [0.0; N];
        for (l, &w) in self.points.iter().zip(&self.weights) {
            let q = a * l[0] + b * l[1] + c * l[2];
            for (s, v) in acc.iter_mut().zip(f(q)) {
                *s += w * v;
            }
        }
        acc
    }

    fn dunavant7() -> Self {
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![-0.149_570_044_467_682];
        for (a, w) in [
            (0.260_345_966_079_040, 0.175_615_257_433_208),
            (0.065_130_102_902_216, 0.053_347_235_608_838),
        ] {
            let b = 1.0 - 2.0 * a;
            for p in [[a, a, b], [a, b, a], [b, a, a]] {
                points.push(p);
                weights.push(w);
            }
        }
        let (a, b) = (0.048_690_315_425_316, 0.312_865_496_004_874);
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            points.push(p);
            weights.push(0.077_113_760_890_257);
        }
        Self {
            degree: 7,
            points,
            weights,
        }
    }

    fn conical_product(degree: u32) -> Self {
        // x = u, y = v (1 - u); the Jacobian adds one degree in u
        let nu = (degree as usize + 2).div_ceil(2);
        let nv = (degree as usize + 1).div_ceil(2);
        let (xu, wu) = gauss_legendre(nu);
        let (xv, wv) = gauss_legendre(nv);
        let mut points = Vec::with_capacity(nu * nv);
        let mut weights = Vec::with_capacity(nu * nv);
        for (su, swu) in xu.iter().zip(&wu) {
            let u = 0.5 * (su + 1.0);
            for (sv, swv) in xv.iter().zip(&wv) {
                let v = 0.5 * (sv + 1.0);
                let (x, y) = (u, v * (1.0 - u));
                points.push([1.0 - x - y, x, y]);
                // 0.25 from the two interval maps, 2 normalizes the reference area
                weights.push(2.0 * 0.25 * swu * swv * (1.0 - u));
            }
        }
        Self {
            degree,
            points,
            weights,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Mean of x^a y^b over the reference triangle: 2 a! b! / (a + b + 2)!.
    fn exact_mean(a: u32, b: u32) -> f64 {
        2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn check_exactness(rule: &TriangleRule) {
        let (o, e1, e2) = (Point2::ZERO, Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
        for total in 0..=rule.degree() {
            for a in 0..=total {
                let b = total - a;
                let [v] = rule.integrate(o, e1, e2, &|q: Point2| [q.x.powi(a as i32) * q.y.powi(b as i32)]);
                assert_relative_eq!(v, exact_mean(a, b), epsilon = 1e-14, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn dunavant_is_degree_seven_exact() {
        let rule = TriangleRule::for_degree(7);
        assert_eq!(rule.len(), 13);
        assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        check_exactness(&rule);
    }

    #[test]
    fn conical_rules_are_exact_to_their_degree() {
        for d in [2, 3, 5, 9, 12, 15] {
            check_exactness(&TriangleRule::for_degree(d));
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) as i32 {
                let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
                let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
                assert_relative_eq!(v, exact, epsilon = 1e-14);
            }
        }
    }
}
