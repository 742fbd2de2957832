//! The one-dimensional smooth splice used to build bump functions.
//!
//! `bump1(t) = h(2 - |t|) / (h(2 - |t|) + h(|t| - 1))` with `h(u) = exp(-1/u)`
//! for `u > 0` and `0` otherwise. It equals 1 on `[-1, 1]`, vanishes outside
//! `(-2, 2)` and is C-infinity everywhere. Derivatives of any order are
//! computed with truncated Taylor arithmetic on the closed form, so the
//! symbolic derivative of `bump1_d{k}` is simply `bump1_d{k+1}`.

/// Truncated Taylor series in a local offset `δ`: `c[0] + c[1] δ + ...`.
#[derive(Clone, Debug)]
struct Jet(Vec<f64>);

impl Jet {
    fn linear(value: f64, slope: f64, order: usize) -> Jet {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        if order >= 1 {
            c[1] = slope;
        }
        Jet(c)
    }

    fn zero(order: usize) -> Jet {
        Jet(vec![0.0; order + 1])
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    fn add(&self, other: &Jet) -> Jet {
        Jet(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn mul(&self, other: &Jet) -> Jet {
        let n = self.0.len();
        let mut out = vec![0.0; n];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = (0..=k).map(|j| self.0[j] * other.0[k - j]).sum();
        }
        Jet(out)
    }

    fn recip(&self) -> Jet {
        let n = self.0.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / self.0[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.0[j] * r[k - j]).sum();
            r[k] = -r[0] * s;
        }
        Jet(r)
    }

    fn exp(&self) -> Jet {
        let n = self.0.len();
        let mut e = vec![0.0; n];
        e[0] = self.0[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.0[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    fn neg(&self) -> Jet {
        Jet(self.0.iter().map(|c| -c).collect())
    }
}

// exp(-1/u) underflows to zero below this argument; its jet is then
// negligible in every coefficient.
const UNDERFLOW_ARG: f64 = 1.0 / 740.0;

/// `h(u) = exp(-1/u)` as a jet, for a jet `u` with positive value.
fn transition(u: &Jet) -> Jet {
    if u.0[0] <= UNDERFLOW_ARG {
        return Jet::zero(u.0.len() - 1);
    }
    u.recip().neg().exp()
}

/// `order`-th derivative of `bump1` at `t`.
pub fn bump_derivative(t: f64, order: usize) -> f64 {
    let r = t.abs();
    if r <= 1.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if r >= 2.0 {
        return 0.0;
    }
    // work on |t|; bump1 is even so the k-th derivative picks up (-1)^k
    let outer = transition(&Jet::linear(2.0 - r, -1.0, order));
    let inner = transition(&Jet::linear(r - 1.0, 1.0, order));
    let s = if inner.is_zero() {
        let mut one = Jet::zero(order);
        one.0[0] = 1.0;
        one
    } else if outer.is_zero() {
        Jet::zero(order)
    } else {
        outer.mul(&outer.add(&inner).recip())
    };
    let factorial: f64 = (1..=order).map(|k| k as f64).product();
    let sign = if t < 0.0 && order % 2 == 1 { -1.0 } else { 1.0 };
    sign * factorial * s.0[order]
}
