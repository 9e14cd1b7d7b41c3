//! One-dimensional orthonormal function families.
//!
//! Every family is normalized so that `∫ φ_i φ_j = δ_ij` over its support.
//! Indices are 1-based: `φ_1` is the lowest-order function of each family.
//!
//! | kind               | support      | functions (before normalization)          |
//! |--------------------|--------------|-------------------------------------------|
//! | `HermiteWeighted`  | ℝ            | `e^{-z²/4} He_n(z)`                       |
//! | `Legendre`         | `[-1, 1]`    | `P_n(z)`                                  |
//! | `Fourier`          | `[0, 2π]`    | `1, cos θ, sin θ, cos 2θ, sin 2θ, …`      |
//! | `LaguerreWeighted` | `[0, ∞)`     | `e^{-z/2} L_n(z)`                         |
//!
//! All polynomial families are evaluated with three-term recurrences that carry
//! already-normalized values, so no factorials appear and high orders stay finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default cap on the number of basis functions per dimension.
pub const DEFAULT_MAX_ORDER: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    HermiteWeighted,
    Legendre,
    Fourier,
    LaguerreWeighted,
}

impl BasisKind {
    pub fn support(self) -> Support {
        match self {
            BasisKind::HermiteWeighted => Support::RealLine,
            BasisKind::Legendre => Support::Interval { lo: -1.0, hi: 1.0 },
            BasisKind::Fourier => Support::Circle,
            BasisKind::LaguerreWeighted => Support::HalfLine,
        }
    }
}

/// Domain on which a family is orthonormal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    RealLine,
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Angles in `[0, 2π]`.
    Circle,
    /// `[0, ∞)`.
    HalfLine,
}

impl Support {
    /// Finite bounds of the support, `±inf` where unbounded.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Support::RealLine => (f64::NEG_INFINITY, f64::INFINITY),
            Support::Interval { lo, hi } => (lo, hi),
            Support::Circle => (0.0, std::f64::consts::TAU),
            Support::HalfLine => (0.0, f64::INFINITY),
        }
    }

    pub fn contains(self, z: f64) -> bool {
        if z.is_nan() {
            return false;
        }
        let (lo, hi) = self.bounds();
        match self {
            Support::RealLine => z.is_finite(),
            Support::HalfLine => z.is_finite() && z >= lo,
            _ => z >= lo && z <= hi,
        }
    }
}

impl std::fmt::Display for Support {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Support::RealLine => write!(f, "(-inf, inf)"),
            Support::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            Support::Circle => write!(f, "[0, 2pi]"),
            Support::HalfLine => write!(f, "[0, inf)"),
        }
    }
}

/// Coefficients of `z φ_k(z) = up·φ_{k+1}(z) + down·φ_{k-1}(z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZRecurrence {
    pub up_index: usize,
    pub up: f64,
    /// `None` for `k = 1`, where the lower term is absent.
    pub down_index: Option<usize>,
    /// Zero when `down_index` is `None`.
    pub down: f64,
}

/// A normalized 1-D family together with its order cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisFamily {
    pub kind: BasisKind,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
}

fn default_max_order() -> usize {
    DEFAULT_MAX_ORDER
}

impl BasisFamily {
    pub fn new(kind: BasisKind) -> Self {
        Self {
            kind,
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    pub fn hermite() -> Self {
        Self::new(BasisKind::HermiteWeighted)
    }

    pub fn legendre() -> Self {
        Self::new(BasisKind::Legendre)
    }

    pub fn fourier() -> Self {
        Self::new(BasisKind::Fourier)
    }

    pub fn laguerre() -> Self {
        Self::new(BasisKind::LaguerreWeighted)
    }

    /// Builds a family from an explicit `(kind, support)` pair, rejecting pairs
    /// on which the kind is not orthonormal.
    pub fn with_support(kind: BasisKind, support: Support) -> Result<Self> {
        if kind.support() != support {
            return Err(Error::InvalidParameter(format!(
                "{kind:?} is orthonormal on {}, not on {support}",
                kind.support()
            )));
        }
        Ok(Self::new(kind))
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn support(&self) -> Support {
        self.kind.support()
    }

    pub fn check_point<T: Real>(&self, z: T) -> Result<()> {
        let zf = z.to_f64().unwrap_or(f64::NAN);
        if self.support().contains(zf) {
            Ok(())
        } else {
            Err(Error::Domain {
                value: zf,
                support: self.support().to_string(),
            })
        }
    }

    pub fn check_order(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::Index {
                index: 0,
                valid: format!("1..={}", self.max_order),
            });
        }
        if k > self.max_order {
            return Err(Error::Capacity {
                requested: k,
                max: self.max_order,
            });
        }
        Ok(())
    }

    /// `φ_k(z)`.
    pub fn eval<T: Real>(&self, k: usize, z: T) -> Result<T> {
        self.check_order(k)?;
        self.check_point(z)?;
        let mut values = vec![T::zero(); k];
        self.fill_values(z, &mut values);
        Ok(values[k - 1])
    }

    /// `dφ_k/dz` (with respect to the angle for the Fourier family).
    pub fn eval_grad<T: Real>(&self, k: usize, z: T) -> Result<T> {
        self.check_order(k)?;
        self.check_point(z)?;
        let mut values = vec![T::zero(); k];
        let mut grads = vec![T::zero(); k];
        self.fill(z, &mut values, &mut grads);
        Ok(grads[k - 1])
    }

    /// Evaluates `φ_1..φ_n` at `z` into `values`, `n = values.len()`.
    pub fn eval_all<T: Real>(&self, z: T, values: &mut [T]) -> Result<()> {
        self.check_order(values.len().max(1))?;
        self.check_point(z)?;
        self.fill_values(z, values);
        Ok(())
    }

    /// Evaluates `φ_1..φ_n` and their derivatives at `z`.
    pub fn eval_all_with_grad<T: Real>(&self, z: T, values: &mut [T], grads: &mut [T]) -> Result<()> {
        debug_assert_eq!(values.len(), grads.len());
        self.check_order(values.len().max(1))?;
        self.check_point(z)?;
        self.fill(z, values, grads);
        Ok(())
    }

    /// Recurrence `z φ_k = √k φ_{k+1} + √(k-1) φ_{k-1}`; Hermite only.
    pub fn recurrence_z_phi(&self, k: usize) -> Result<ZRecurrence> {
        if self.kind != BasisKind::HermiteWeighted {
            return Err(Error::NotImplemented("z-recurrence"));
        }
        if k == 0 {
            return Err(Error::Index {
                index: 0,
                valid: "k >= 1".into(),
            });
        }
        let kf = k as f64;
        Ok(ZRecurrence {
            up_index: k + 1,
            up: kf.sqrt(),
            down_index: (k > 1).then(|| k - 1),
            down: (kf - 1.0).sqrt(),
        })
    }

    // Unchecked fillers; callers validate the point and order first.

    pub(crate) fn fill_values<T: Real>(&self, z: T, values: &mut [T]) {
        match self.kind {
            BasisKind::HermiteWeighted => hermite(z, values, None),
            BasisKind::Legendre => legendre(z, values, None),
            BasisKind::Fourier => fourier(z, values, None),
            BasisKind::LaguerreWeighted => laguerre(z, values, None),
        }
    }

    pub(crate) fn fill<T: Real>(&self, z: T, values: &mut [T], grads: &mut [T]) {
        match self.kind {
            BasisKind::HermiteWeighted => hermite(z, values, Some(grads)),
            BasisKind::Legendre => legendre(z, values, Some(grads)),
            BasisKind::Fourier => fourier(z, values, Some(grads)),
            BasisKind::LaguerreWeighted => laguerre(z, values, Some(grads)),
        }
    }
}

fn hermite<T: Real>(z: T, values: &mut [T], grads: Option<&mut [T]>) {
    let n = values.len();
    if n == 0 {
        return;
    }
    let half = T::lit(0.5);
    // (2π)^{-1/4} e^{-z²/4}
    values[0] = T::lit((2.0 * std::f64::consts::PI).powf(-0.25)) * (-(z * z) * T::lit(0.25)).exp();
    if n > 1 {
        values[1] = z * values[0];
    }
    for k in 2..n {
        // φ_{k+1} = (z φ_k − √(k−1) φ_{k−1}) / √k, 1-based k
        let kf = T::from_usize_lossy(k);
        values[k] = (z * values[k - 1] - (kf - T::one()).sqrt() * values[k - 2]) / kf.sqrt();
    }
    if let Some(grads) = grads {
        let zh = z * half;
        grads[0] = -(zh * values[0]);
        for k in 1..n {
            grads[k] = T::from_usize_lossy(k).sqrt() * values[k - 1] - zh * values[k];
        }
    }
}

fn legendre<T: Real>(z: T, values: &mut [T], grads: Option<&mut [T]>) {
    let n = values.len();
    if n == 0 {
        return;
    }
    // Raw P_n first, then scale by √((2n+1)/2).
    let mut p_prev = T::one();
    let mut p_cur = z;
    let mut d_prev = T::zero();
    let mut d_cur = T::one();
    let mut raw = Vec::with_capacity(n);
    let mut draw = Vec::with_capacity(n);
    raw.push(p_prev);
    draw.push(d_prev);
    if n > 1 {
        raw.push(p_cur);
        draw.push(d_cur);
    }
    for m in 1..n.saturating_sub(1) {
        let mf = T::from_usize_lossy(m);
        let two_m1 = mf + mf + T::one();
        let p_next = (two_m1 * z * p_cur - mf * p_prev) / (mf + T::one());
        let d_next = d_prev + two_m1 * p_cur;
        p_prev = p_cur;
        p_cur = p_next;
        d_prev = d_cur;
        d_cur = d_next;
        raw.push(p_cur);
        draw.push(d_cur);
    }
    for (m, (v, &p)) in values.iter_mut().zip(&raw).enumerate() {
        *v = p * legendre_norm::<T>(m);
    }
    if let Some(grads) = grads {
        for (m, (g, &d)) in grads.iter_mut().zip(&draw).enumerate() {
            *g = d * legendre_norm::<T>(m);
        }
    }
}

#[inline]
fn legendre_norm<T: Real>(m: usize) -> T {
    T::lit(((2 * m + 1) as f64 / 2.0).sqrt())
}

fn fourier<T: Real>(theta: T, values: &mut [T], grads: Option<&mut [T]>) {
    let n = values.len();
    if n == 0 {
        return;
    }
    let c0 = T::lit((std::f64::consts::TAU).sqrt().recip());
    let c = T::lit(std::f64::consts::PI.sqrt().recip());
    values[0] = c0;
    for k in 1..n {
        // k (0-based) = 1 → cos θ, 2 → sin θ, 3 → cos 2θ, …
        let m = T::from_usize_lossy(k.div_ceil(2));
        values[k] = if k % 2 == 1 {
            c * (m * theta).cos()
        } else {
            c * (m * theta).sin()
        };
    }
    if let Some(grads) = grads {
        grads[0] = T::zero();
        for k in 1..n {
            let m = T::from_usize_lossy(k.div_ceil(2));
            grads[k] = if k % 2 == 1 {
                -(c * m * (m * theta).sin())
            } else {
                c * m * (m * theta).cos()
            };
        }
    }
}

fn laguerre<T: Real>(z: T, values: &mut [T], grads: Option<&mut [T]>) {
    let n = values.len();
    if n == 0 {
        return;
    }
    let w = (-(z * T::lit(0.5))).exp();
    values[0] = w;
    if n > 1 {
        values[1] = (T::one() - z) * w;
    }
    for m in 1..n.saturating_sub(1) {
        let mf = T::from_usize_lossy(m);
        values[m + 1] = ((mf + mf + T::one() - z) * values[m] - mf * values[m - 1]) / (mf + T::one());
    }
    if let Some(grads) = grads {
        // e^{-z/2} L'_m accumulates −Σ_{j<m} e^{-z/2} L_j
        let half = T::lit(0.5);
        let mut weighted_dl = T::zero();
        grads[0] = -(half * values[0]);
        for m in 1..n {
            weighted_dl -= values[m - 1];
            grads[m] = weighted_dl - half * values[m];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ALL: [BasisKind; 4] = [
        BasisKind::HermiteWeighted,
        BasisKind::Legendre,
        BasisKind::Fourier,
        BasisKind::LaguerreWeighted,
    ];

    #[test]
    fn hermite_low_orders() {
        let h = BasisFamily::hermite();
        let c = (2.0 * std::f64::consts::PI).powf(-0.25);
        assert_relative_eq!(h.eval(1, 0.0).unwrap(), 0.6316187777460647, max_relative = 1e-14);
        assert_relative_eq!(h.eval(2, 1.0).unwrap(), (-0.25f64).exp() * c, max_relative = 1e-14);
        assert_relative_eq!(h.eval(2, 1.0).unwrap(), 0.4919052, epsilon = 1e-7);
    }

    #[test]
    fn legendre_constant_mode() {
        assert_relative_eq!(
            BasisFamily::legendre().eval(1, 0.3).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn derivative_examples() {
        let h = BasisFamily::hermite();
        assert_eq!(h.eval_grad(1, 0.0).unwrap(), 0.0);
        let expected = -(2.0 * std::f64::consts::PI).powf(-0.25) * (-1.0f64).exp();
        assert_relative_eq!(h.eval_grad(1, 2.0).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(h.eval_grad(1, 2.0).unwrap(), -0.2323, epsilon = 1e-4);
        assert_eq!(BasisFamily::fourier().eval_grad(2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn recurrence_coefficients() {
        let h = BasisFamily::hermite();
        let r1 = h.recurrence_z_phi(1).unwrap();
        assert_eq!((r1.up_index, r1.up, r1.down_index, r1.down), (2, 1.0, None, 0.0));
        let r2 = h.recurrence_z_phi(2).unwrap();
        assert_eq!(r2.up_index, 3);
        assert_relative_eq!(r2.up, 2f64.sqrt());
        assert_eq!((r2.down_index, r2.down), (Some(1), 1.0));
        assert_eq!(
            BasisFamily::legendre().recurrence_z_phi(2),
            Err(Error::NotImplemented("z-recurrence"))
        );
    }

    #[test]
    fn recurrence_identity_pointwise() {
        let h = BasisFamily::hermite();
        let z = 0.7;
        let lhs = z * h.eval(3, z).unwrap();
        let rhs = 3f64.sqrt() * h.eval(4, z).unwrap() + 2f64.sqrt() * h.eval(2, z).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
        let mut vals = vec![0.0; 16];
        for &z in &[-3.1, -0.4, 0.0, 1.3, 4.2] {
            h.eval_all(z, &mut vals).unwrap();
            for k in 1..=15 {
                let r = h.recurrence_z_phi(k).unwrap();
                let mut rhs = r.up * vals[r.up_index - 1];
                if let Some(d) = r.down_index {
                    rhs += r.down * vals[d - 1];
                }
                assert!((z * vals[k - 1] - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn high_order_hermite_is_finite() {
        let v: f64 = BasisFamily::hermite().eval(30, 8.0).unwrap();
        assert!(v.is_finite());
        let v: f64 = BasisFamily::hermite().eval(64, 40.0).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn domain_and_capacity_errors() {
        assert!(matches!(
            BasisFamily::legendre().eval(1, 1.5),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            BasisFamily::laguerre().eval(1, -0.1),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(BasisFamily::fourier().eval(1, 7.0), Err(Error::Domain { .. })));
        assert!(matches!(
            BasisFamily::hermite().eval(1, f64::NAN),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            BasisFamily::hermite().eval(65, 0.0),
            Err(Error::Capacity { .. })
        ));
        assert!(BasisFamily::hermite().with_max_order(80).eval(80, 0.0).is_ok());
        assert!(matches!(BasisFamily::hermite().eval(0, 0.0), Err(Error::Index { .. })));
    }

    #[test]
    fn kind_support_pairing() {
        for kind in ALL {
            assert!(BasisFamily::with_support(kind, kind.support()).is_ok());
        }
        assert!(BasisFamily::with_support(BasisKind::Legendre, Support::RealLine).is_err());
        assert!(BasisFamily::with_support(BasisKind::Fourier, Support::HalfLine).is_err());
    }

    #[test]
    fn fourier_ordering() {
        let f = BasisFamily::fourier();
        let th = 0.4f64;
        let c = std::f64::consts::PI.sqrt().recip();
        assert_relative_eq!(f.eval(2, th).unwrap(), c * th.cos());
        assert_relative_eq!(f.eval(3, th).unwrap(), c * th.sin());
        assert_relative_eq!(f.eval(4, th).unwrap(), c * (2.0 * th).cos());
        assert_relative_eq!(f.eval(5, th).unwrap(), c * (2.0 * th).sin());
    }

    #[test]
    fn single_precision_agrees() {
        let h = BasisFamily::hermite();
        for k in 1..=10 {
            let a = h.eval(k, 0.9f32).unwrap() as f64;
            let b = h.eval(k, 0.9f64).unwrap();
            assert!((a - b).abs() < 1e-5, "k={k}");
        }
    }
}
