//! Test-side reference computations, written from the model definitions
//! without calling the crate's solvers.
#![allow(dead_code)]

/// Plain model coefficients.
#[derive(Debug, Clone, Copy)]
pub struct Coeffs {
    pub c: f64,
    pub lambda: f64,
    pub r: f64,
    pub t: f64,
    pub eps_bar: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Coeffs {
    pub fn table(t: f64, eps_bar: f64) -> Self {
        Self {
            c: 0.5,
            lambda: 0.75,
            r: 0.7,
            t,
            eps_bar,
            p1: 0.4,
            p2: 0.8,
        }
    }

    fn x(&self, e: f64) -> f64 {
        (e / self.eps_bar).clamp(0.0, 1.0)
    }

    fn margin(&self, p: f64, e: f64, v: f64) -> f64 {
        self.r * e + p - self.c * v - self.c * self.lambda * e
    }

    /// Split between two SPs with `e1 < e2`, unclamped.
    pub fn threshold(&self, e1: f64, v1: f64, e2: f64, v2: f64) -> f64 {
        (v1 - v2 + self.t * (self.x(e2) * e2 - self.x(e1) * e1)) / (self.t * (e2 - e1))
    }

    /// QoS equilibrium for fixed `e1 < e2`, from the two first-order
    /// conditions solved by Cramer's rule.
    ///
    /// SP 1: `2c v1 - c v2 = r e1 + p1 - c lambda e1 - c t (x2 e2 - x1 e1)`
    /// SP 2: `-c v1 + 2c v2 = r e2 + p2 - c lambda e2 - c t (e2 - e1) + c t (x2 e2 - x1 e1)`
    pub fn qos(&self, e1: f64, e2: f64) -> (f64, f64) {
        let c = self.c;
        let k = self.t * (self.x(e2) * e2 - self.x(e1) * e1);
        let b1 = self.r * e1 + self.p1 - c * self.lambda * e1 - c * k;
        let b2 = self.r * e2 + self.p2 - c * self.lambda * e2 - c * self.t * (e2 - e1) + c * k;
        let det = 3.0 * c * c;
        ((2.0 * c * b1 + c * b2) / det, (c * b1 + 2.0 * c * b2) / det)
    }

    /// Profits after the QoS stage, shares clamped to `[0, 1]`.
    pub fn reduced(&self, e1: f64, e2: f64) -> (f64, f64) {
        let (v1, v2) = self.qos(e1, e2);
        let x = self.threshold(e1, v1, e2, v2).clamp(0.0, 1.0);
        (self.margin(self.p1, e1, v1) * x, self.margin(self.p2, e2, v2) * (1.0 - x))
    }

    /// Risk equilibrium: alternating golden-section best responses to get
    /// close, then Newton on the two own-risk derivatives (central differences).
    pub fn equilibrium(&self) -> Equilibrium {
        let h = 1e-5 * self.eps_bar;
        let g = |e1: f64, e2: f64| {
            let d1 = (self.reduced(e1 + h, e2).0 - self.reduced(e1 - h, e2).0) / (2.0 * h);
            let d2 = (self.reduced(e1, e2 + h).1 - self.reduced(e1, e2 - h).1) / (2.0 * h);
            (d1, d2)
        };
        let (mut e1, mut e2) = (0.25 * self.eps_bar, 0.75 * self.eps_bar);
        let gap = 1e-3 * self.eps_bar;
        for _ in 0..40 {
            e1 = golden_max(|e| self.reduced(e, e2).0, 0.0, e2 - gap);
            e2 = golden_max(|e| self.reduced(e1, e).1, e1 + gap, self.eps_bar);
        }
        let k = 1e-4 * self.eps_bar;
        for _ in 0..60 {
            let (f1, f2) = g(e1, e2);
            let (a1, a2) = g(e1 + k, e2);
            let (b1, b2) = g(e1, e2 + k);
            let (j11, j21) = ((a1 - f1) / k, (a2 - f2) / k);
            let (j12, j22) = ((b1 - f1) / k, (b2 - f2) / k);
            let det = j11 * j22 - j12 * j21;
            let d1 = (f1 * j22 - f2 * j12) / det;
            let d2 = (j11 * f2 - j21 * f1) / det;
            e1 -= d1;
            e2 -= d2;
            if d1.abs().max(d2.abs()) < 1e-13 * self.eps_bar {
                break;
            }
        }
        let (v1, v2) = self.qos(e1, e2);
        let x_tau = self.threshold(e1, v1, e2, v2);
        let (pi1, pi2) = self.reduced(e1, e2);
        Equilibrium {
            eps1: e1,
            eps2: e2,
            v1,
            v2,
            x_tau,
            pi1,
            pi2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Equilibrium {
    pub eps1: f64,
    pub eps2: f64,
    pub v1: f64,
    pub v2: f64,
    pub x_tau: f64,
    pub pi1: f64,
    pub pi2: f64,
}

impl Equilibrium {
    pub fn fields(&self) -> [f64; 7] {
        [self.eps1, self.eps2, self.v1, self.v2, self.x_tau, self.pi1, self.pi2]
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) >= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    0.5 * (a + b)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-12)
}

/// Largest absolute residual of the least-squares line through `(x, y)`.
pub fn line_fit_residual(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    x.iter()
        .zip(y)
        .map(|(a, b)| (b - (my + slope * (a - mx))).abs())
        .fold(0.0, f64::max)
}

impl Coeffs {
    /// The three sufficient conditions for the two-SP closed form.
    pub fn feasible(&self) -> bool {
        let alpha = self.r / self.c - self.lambda;
        let ct = self.c * self.t * self.eps_bar;
        let dp = self.p2 - self.p1;
        let ratio = 16.0 * dp / (9.0 * ct);
        let t = self.t;
        let band = (-1.0..=1.0).contains(&ratio)
            && ratio >= (4.0 * alpha - 3.0 * t) / (3.0 * t)
            && ratio <= (4.0 * alpha - t) / (3.0 * t);
        let cover = (12.0 * self.c * alpha * self.eps_bar).powi(2) - (15.0 * ct).powi(2) + 288.0 * ct * (self.p1 + self.p2)
            >= (16.0 * dp).powi(2);
        band && cover
    }

    /// Draws feasible coefficients around the reference example.
    pub fn random_feasible(rng: &mut impl rand::Rng) -> Self {
        loop {
            let mut k = Coeffs::table(rng.gen_range(0.58..0.9), rng.gen_range(3.0..5.0));
            k.p1 = rng.gen_range(0.2..0.6);
            k.p2 = k.p1 + rng.gen_range(0.1..0.6);
            if k.feasible() {
                return k;
            }
        }
    }
}
