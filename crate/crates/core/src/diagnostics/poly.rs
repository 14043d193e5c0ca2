//! Dense real polynomials, just enough to build the cutoff profiles.

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `a + b s`
    pub fn linear(a: f64, b: f64) -> Self {
        Poly(vec![a, b])
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at `s0`.
    pub fn integral_from(&self, s0: f64) -> Poly {
        let mut c = vec![0.0];
        c.extend(self.0.iter().enumerate().map(|(k, &a)| a / (k + 1) as f64));
        let mut p = Poly(c);
        let v = p.eval(s0);
        p.0[0] -= v;
        p
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&0.0) + other.0.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    /// `self(inner(s))`
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.0
            .iter()
            .rev()
            .fold(Poly::constant(0.0), |acc, &c| acc.mul(inner).add(&Poly::constant(c)))
    }

    /// The first `n` derivatives, starting with the polynomial itself.
    pub fn derivatives(&self, n: usize) -> Vec<Poly> {
        let mut out = vec![self.clone()];
        for _ in 1..n {
            let next = out.last().unwrap().derivative();
            out.push(next);
        }
        out
    }
}
