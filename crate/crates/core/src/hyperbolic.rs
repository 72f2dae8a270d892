//! Two-dimensional hyperbolic models at curvature `-c`: the Lorentz
//! hyperboloid, the Poincaré disk, and the Gaussian manifold (the upper
//! half-plane of univariate Gaussian parameters `(μ, σ)`).
//!
//! The Lorentz model carries the exponential/log maps and parallel transport.
//! The six isometries convert between the three models; each preserves the
//! model's own distance function.

use crate::error::{Error, Result};

/// Denominator guard shared by the isometries and `T_c`.
pub const DENOMINATOR_EPS: f64 = 1e-12;
/// Slack allowed on `arccosh` arguments and manifold constraints.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// Below this the exp/log maps switch to their Taylor branch.
const SERIES_THRESHOLD: f64 = 1e-6;

/// Positive curvature magnitude `c`; the manifold curvature is `-c`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Curvature(c))
        } else {
            Err(Error::domain(
                "Curvature::new",
                format!("c must be positive and finite, got {c}"),
            ))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn sqrt(self) -> f64 {
        self.0.sqrt()
    }
}

impl TryFrom<f64> for Curvature {
    type Error = Error;

    fn try_from(c: f64) -> Result<Self> {
        Curvature::new(c)
    }
}

/// Minkowski bilinear form `-u₀v₀ + u₁v₁ + u₂v₂`.
#[inline]
pub fn lorentz_inner(u: [f64; 3], v: [f64; 3]) -> f64 {
    -u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Point on the upper sheet `{⟨p,p⟩ = -1/c, t > 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl LorentzPoint {
    /// Validates the hyperboloid constraint. The tolerance is relative to
    /// `max(1/c, t²)`, since far from the origin the constraint is a
    /// difference of large squares.
    pub fn new(t: f64, x: f64, y: f64, c: Curvature) -> Result<Self> {
        let p = LorentzPoint { t, x, y };
        if !(t.is_finite() && x.is_finite() && y.is_finite()) {
            return Err(Error::non_finite("LorentzPoint::new", format!("{p:?}")));
        }
        let inv_c = 1.0 / c.get();
        let residual = (lorentz_inner(p.coords(), p.coords()) + inv_c).abs();
        if t < inv_c.sqrt() * (1.0 - CONSTRAINT_TOL) || residual > CONSTRAINT_TOL * inv_c.max(t * t)
        {
            return Err(Error::constraint(
                "LorentzPoint::new",
                format!(
                    "{p:?} is off the hyperboloid for c={} (residual {residual:e})",
                    c.get()
                ),
            ));
        }
        Ok(p)
    }

    /// Lifts spatial coordinates onto the hyperboloid by solving for `t`.
    pub fn from_spatial(x: f64, y: f64, c: Curvature) -> Self {
        let t = x.hypot(y).hypot(1.0 / c.sqrt());
        LorentzPoint { t, x, y }
    }

    /// Raw constructor. Used where non-finite or off-manifold coordinates are
    /// part of what is being measured.
    pub const fn new_unchecked(t: f64, x: f64, y: f64) -> Self {
        LorentzPoint { t, x, y }
    }

    #[inline]
    pub fn coords(&self) -> [f64; 3] {
        [self.t, self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.y.is_finite()
    }
}

/// Tangent vector at `base`, satisfying `⟨base, v⟩ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzTangent {
    pub dt: f64,
    pub dx: f64,
    pub dy: f64,
    pub base: LorentzPoint,
}

impl LorentzTangent {
    pub fn new(dt: f64, dx: f64, dy: f64, base: LorentzPoint) -> Result<Self> {
        let v = LorentzTangent { dt, dx, dy, base };
        let scale = base.t.abs().max(1.0) * (dt.abs() + dx.abs() + dy.abs()).max(1.0);
        let ip = lorentz_inner(base.coords(), v.coords());
        if !ip.is_finite() || ip.abs() > CONSTRAINT_TOL * scale {
            return Err(Error::constraint(
                "LorentzTangent::new",
                format!("vector is not tangent at base (⟨base, v⟩ = {ip:e})"),
            ));
        }
        Ok(v)
    }

    #[inline]
    pub fn coords(&self) -> [f64; 3] {
        [self.dt, self.dx, self.dy]
    }

    /// `⟨v, v⟩_L`, non-negative for tangent vectors up to round-off.
    pub fn norm_sq(&self) -> f64 {
        lorentz_inner(self.coords(), self.coords())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().max(0.0).sqrt()
    }

    pub fn scale(&self, k: f64) -> Self {
        LorentzTangent {
            dt: k * self.dt,
            dx: k * self.dx,
            dy: k * self.dy,
            base: self.base,
        }
    }
}

/// Point of the open disk of radius `1/√c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincarePoint {
    pub x: f64,
    pub y: f64,
}

impl PoincarePoint {
    pub fn new(x: f64, y: f64, c: Curvature) -> Result<Self> {
        let r2 = c.get() * (x * x + y * y);
        if r2.is_finite() && r2 < 1.0 {
            Ok(PoincarePoint { x, y })
        } else {
            Err(Error::domain(
                "PoincarePoint::new",
                format!("({x}, {y}) is not inside the disk of radius 1/√{}", c.get()),
            ))
        }
    }

    /// Raw constructor for boundary probes.
    pub const fn new_unchecked(x: f64, y: f64) -> Self {
        PoincarePoint { x, y }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

/// Point `(μ, σ)` of the Gaussian manifold, `σ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPoint {
    mu: f64,
    sigma: f64,
}

impl GaussianPoint {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::domain(
                "GaussianPoint::new",
                format!("μ must be finite, got {mu}"),
            ));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(
                "GaussianPoint::new",
                format!("σ must be positive, got {sigma}"),
            ));
        }
        Ok(GaussianPoint { mu, sigma })
    }

    /// The point `(0, 1)`, image of the Lorentz origin under `T_c` for every `c`.
    pub const ORIGIN: GaussianPoint = GaussianPoint {
        mu: 0.0,
        sigma: 1.0,
    };

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `(1/√c, 0, 0)`.
pub fn lorentz_origin(c: Curvature) -> LorentzPoint {
    LorentzPoint {
        t: 1.0 / c.sqrt(),
        x: 0.0,
        y: 0.0,
    }
}

/// Embeds a Euclidean 2-vector as the tangent `(0, u₁, u₂)` at the origin.
pub fn lift_tangent(u: [f64; 2], c: Curvature) -> LorentzTangent {
    LorentzTangent {
        dt: 0.0,
        dx: u[0],
        dy: u[1],
        base: lorentz_origin(c),
    }
}

/// `cosh(α)` and `sinh(α)/α`, with the Taylor branch near zero.
#[inline]
fn cosh_and_sinhc(alpha: f64) -> (f64, f64) {
    if alpha.abs() < SERIES_THRESHOLD {
        let a2 = alpha * alpha;
        (1.0 + 0.5 * a2, 1.0 + a2 / 6.0)
    } else {
        (alpha.cosh(), alpha.sinh() / alpha)
    }
}

/// Exponential map without finiteness checks. Overflow in `cosh`/`sinh`
/// shows up as infinite coordinates, which the stability probes count.
pub fn lorentz_exp_unchecked(base: LorentzPoint, v: [f64; 3], c: Curvature) -> LorentzPoint {
    let alpha = (c.get() * lorentz_inner(v, v).max(0.0)).sqrt();
    let (ch, shc) = cosh_and_sinhc(alpha);
    let x = ch * base.x + shc * v[1];
    let y = ch * base.y + shc * v[2];
    LorentzPoint::from_spatial(x, y, c)
}

pub fn lorentz_exp(base: LorentzPoint, v: LorentzTangent, c: Curvature) -> Result<LorentzPoint> {
    if !base.is_finite() || !v.coords().iter().all(|a| a.is_finite()) {
        return Err(Error::non_finite(
            "lorentz_exp",
            "non-finite base or tangent",
        ));
    }
    let nsq = v.norm_sq();
    if nsq < -CONSTRAINT_TOL * (1.0 + v.coords().iter().map(|a| a * a).sum::<f64>()) {
        return Err(Error::constraint(
            "lorentz_exp",
            format!("timelike tangent, ⟨v,v⟩ = {nsq:e}"),
        ));
    }
    let p = lorentz_exp_unchecked(base, v.coords(), c);
    if !p.is_finite() {
        return Err(Error::non_finite(
            "lorentz_exp",
            format!("cosh/sinh overflow at tangent norm {}", nsq.max(0.0).sqrt()),
        ));
    }
    Ok(p)
}

/// Log map. Uses `arccosh(β)/√(β²-1) = asinh(s)/s` with `s = √c‖y-βx‖_L`,
/// which stays accurate when `y` is close to `base`.
pub fn lorentz_log(base: LorentzPoint, y: LorentzPoint, c: Curvature) -> Result<LorentzTangent> {
    let cv = c.get();
    let beta = -cv * lorentz_inner(base.coords(), y.coords());
    if !beta.is_finite() {
        return Err(Error::non_finite("lorentz_log", format!("β = {beta}")));
    }
    if beta < 1.0 - CONSTRAINT_TOL {
        return Err(Error::constraint("lorentz_log", format!("β = {beta} < 1")));
    }
    let beta = beta.max(1.0);
    let mut w = [
        y.t - beta * base.t,
        y.x - beta * base.x,
        y.y - beta * base.y,
    ];
    // Project out round-off along base.
    let drift = cv * lorentz_inner(base.coords(), w);
    for (wi, bi) in w.iter_mut().zip(base.coords()) {
        *wi += drift * bi;
    }
    let s = (cv * lorentz_inner(w, w).max(0.0)).sqrt();
    let k = if s < SERIES_THRESHOLD {
        1.0 - s * s / 6.0
    } else {
        s.asinh() / s
    };
    Ok(LorentzTangent {
        dt: k * w[0],
        dx: k * w[1],
        dy: k * w[2],
        base,
    })
}

/// Levi-Civita transport of `v` (at `v.base`) to `dest`:
/// `v + c⟨dest, v⟩/(1 - c⟨base, dest⟩)·(base + dest)`.
pub fn parallel_transport(v: LorentzTangent, dest: LorentzPoint, c: Curvature) -> LorentzTangent {
    let cv = c.get();
    let src = v.base;
    let coef = cv * lorentz_inner(dest.coords(), v.coords())
        / (1.0 - cv * lorentz_inner(src.coords(), dest.coords()));
    LorentzTangent {
        dt: v.dt + coef * (src.t + dest.t),
        dx: v.dx + coef * (src.x + dest.x),
        dy: v.dy + coef * (src.y + dest.y),
        base: dest,
    }
}

/// Transport from the origin. `v` is re-based at the origin of curvature `c`.
pub fn parallel_transport_from_origin(
    v: LorentzTangent,
    dest: LorentzPoint,
    c: Curvature,
) -> LorentzTangent {
    let v = LorentzTangent {
        base: lorentz_origin(c),
        ..v
    };
    parallel_transport(v, dest, c)
}

/// Clamps an `arccosh` argument that undershoots 1 by round-off.
fn clamp_acosh_arg(op: &'static str, arg: f64) -> Result<f64> {
    if arg.is_nan() {
        return Err(Error::non_finite(op, "arccosh argument is NaN"));
    }
    if arg < 1.0 - CONSTRAINT_TOL {
        return Err(Error::constraint(op, format!("arccosh argument {arg} < 1")));
    }
    Ok(arg.max(1.0))
}

/// `(1/√c)·arccosh(-c⟨p,q⟩)`. Near-coincident points go through
/// `2·asinh(√c‖p-q‖_L/2)` instead.
pub fn lorentz_distance(p: LorentzPoint, q: LorentzPoint, c: Curvature) -> Result<f64> {
    let arg = clamp_acosh_arg(
        "lorentz_distance",
        -c.get() * lorentz_inner(p.coords(), q.coords()),
    )?;
    if arg < 2.0 {
        let d = [p.t - q.t, p.x - q.x, p.y - q.y];
        let chord = lorentz_inner(d, d).max(0.0).sqrt();
        Ok(2.0 * (0.5 * c.sqrt() * chord).asinh() / c.sqrt())
    } else {
        Ok(arg.acosh() / c.sqrt())
    }
}

/// Poincaré-disk distance, evaluated as written. Points on or beyond the
/// boundary give non-finite results; the stability probes rely on that.
pub fn poincare_distance(p: PoincarePoint, q: PoincarePoint, c: Curvature) -> f64 {
    let cv = c.get();
    let (dx, dy) = (p.x - q.x, p.y - q.y);
    let num = 2.0 * cv * (dx * dx + dy * dy);
    let den = (1.0 - cv * p.norm_sq()) * (1.0 - cv * q.norm_sq());
    (1.0 + num / den).acosh() / c.sqrt()
}

/// Half-plane (Fisher-Rao) distance at curvature `-c`. The ratio
/// `(A+B)/(A-B)` is evaluated as `(A+B)²/(4σ₁σ₂)` to avoid cancellation.
pub fn fisher_rao_distance(p: GaussianPoint, q: GaussianPoint, c: Curvature) -> f64 {
    let cdm2 = c.get() * (p.mu - q.mu).powi(2);
    let a = (cdm2 + (p.sigma + q.sigma).powi(2)).sqrt();
    let b = (cdm2 + (p.sigma - q.sigma).powi(2)).sqrt();
    let d = (2.0 * (a + b).ln() - (4.0 * p.sigma * q.sigma).ln()) / c.sqrt();
    d.max(0.0)
}

fn guard(op: &'static str, what: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > DENOMINATOR_EPS {
        Ok(value)
    } else {
        Err(Error::domain(
            op,
            format!("{what} = {value:e} is below {DENOMINATOR_EPS:e}"),
        ))
    }
}

pub fn iso_l_to_p(p: LorentzPoint, c: Curvature) -> Result<PoincarePoint> {
    let den = guard("iso_l_to_p", "√c·t + 1", c.sqrt() * p.t + 1.0)?;
    Ok(PoincarePoint {
        x: p.x / den,
        y: p.y / den,
    })
}

pub fn iso_p_to_l(p: PoincarePoint, c: Curvature) -> Result<LorentzPoint> {
    let r2 = c.get() * p.norm_sq();
    let den = guard("iso_p_to_l", "1 - c‖p‖²", 1.0 - r2)?;
    Ok(LorentzPoint {
        t: (1.0 + r2) / (c.sqrt() * den),
        x: 2.0 * p.x / den,
        y: 2.0 * p.y / den,
    })
}

pub fn iso_p_to_g(p: PoincarePoint, c: Curvature) -> Result<GaussianPoint> {
    let cv = c.get();
    let den = guard(
        "iso_p_to_g",
        "(√c·x - 1)² + c·y²",
        (c.sqrt() * p.x - 1.0).powi(2) + cv * p.y * p.y,
    )?;
    let num_sigma = guard("iso_p_to_g", "1 - c‖p‖²", 1.0 - cv * p.norm_sq())?;
    GaussianPoint::new(-2.0 * p.y / den, num_sigma / den)
}

pub fn iso_g_to_p(g: GaussianPoint, c: Curvature) -> Result<PoincarePoint> {
    let cv = c.get();
    let den = guard(
        "iso_g_to_p",
        "cμ² + (σ + 1)²",
        cv * g.mu * g.mu + (g.sigma + 1.0).powi(2),
    )?;
    Ok(PoincarePoint {
        x: (cv * g.mu * g.mu + g.sigma * g.sigma - 1.0) / (c.sqrt() * den),
        y: -2.0 * g.mu / den,
    })
}

/// `T_c`: Lorentz model to Gaussian manifold.
pub fn iso_l_to_g(p: LorentzPoint, c: Curvature) -> Result<GaussianPoint> {
    let tm = guard("iso_l_to_g", "t - x", p.t - p.x)?;
    let den = c.sqrt() * tm;
    GaussianPoint::new(-p.y / den, 1.0 / den)
}

/// `T_c⁻¹`: Gaussian manifold to Lorentz model.
pub fn iso_g_to_l(g: GaussianPoint, c: Curvature) -> Result<LorentzPoint> {
    let cv = c.get();
    let sigma = guard("iso_g_to_l", "σ", g.sigma)?;
    let den = 2.0 * c.sqrt() * sigma;
    let m2 = cv * g.mu * g.mu + sigma * sigma;
    Ok(LorentzPoint {
        t: (1.0 + m2) / den,
        x: (m2 - 1.0) / den,
        y: -g.mu / sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn curv(c: f64) -> Curvature {
        Curvature::new(c).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn random_gaussian(rng: &mut ChaCha8Rng) -> GaussianPoint {
        let mu = rng.random_range(-5.0..5.0);
        let sigma = rng.random_range(0.05..5.0);
        GaussianPoint::new(mu, sigma).unwrap()
    }

    #[test]
    fn curvature_rejects_nonpositive() {
        assert!(Curvature::new(0.0).is_err());
        assert!(Curvature::new(-1.0).is_err());
        assert!(Curvature::new(f64::INFINITY).is_err());
        assert!(Curvature::new(f64::NAN).is_err());
    }

    #[test]
    fn inner_product_definition() {
        assert_eq!(lorentz_inner([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), -1.0);
        assert_eq!(lorentz_inner([0.0, 1.0, 0.0], [0.0, 1.0, 0.0]), 1.0);
        assert_eq!(lorentz_inner([1.0, 1.0, 0.0], [1.0, 0.0, 1.0]), -1.0);
    }

    #[test]
    fn origin_values() {
        assert_eq!(lorentz_origin(curv(1.0)).coords(), [1.0, 0.0, 0.0]);
        assert_eq!(lorentz_origin(curv(4.0)).coords(), [0.5, 0.0, 0.0]);
        assert!(close(lorentz_origin(curv(0.5)).t, 2f64.sqrt(), 1e-15));
        for c in [0.25, 0.5, 1.0, 3.0] {
            let o = lorentz_origin(curv(c));
            assert!(LorentzPoint::new(o.t, o.x, o.y, curv(c)).is_ok());
        }
    }

    #[test]
    fn lift_tangent_is_tangent() {
        let c = curv(1.0);
        assert_eq!(lift_tangent([0.0, 0.0], c).coords(), [0.0, 0.0, 0.0]);
        let v = lift_tangent([1.0, 0.0], c);
        assert_eq!(v.coords(), [0.0, 1.0, 0.0]);
        assert_eq!(lorentz_inner(v.base.coords(), v.coords()), 0.0);
        let v = lift_tangent([3.0, -4.0], c);
        assert_eq!(v.coords(), [0.0, 3.0, -4.0]);
        assert_eq!(v.norm_sq(), 25.0);
    }

    #[test]
    fn exp_of_zero_is_base() {
        let c = curv(0.7);
        let base = LorentzPoint::from_spatial(1.3, -0.4, c);
        let zero = LorentzTangent::new(0.0, 0.0, 0.0, base).unwrap();
        let p = lorentz_exp(base, zero, c).unwrap();
        assert!(close(p.t, base.t, 1e-15) && p.x == base.x && p.y == base.y);
    }

    #[test]
    fn exp_unit_tangent_at_origin() {
        let c = curv(1.0);
        let p = lorentz_exp(lorentz_origin(c), lift_tangent([1.0, 0.0], c), c).unwrap();
        assert!(close(p.t, 1f64.cosh(), 1e-14));
        assert!(close(p.x, 1f64.sinh(), 1e-14));
        assert_eq!(p.y, 0.0);
        assert!(close(lorentz_inner(p.coords(), p.coords()), -1.0, 1e-12));
        let back = lorentz_log(lorentz_origin(c), p, c).unwrap();
        assert!(close(back.dx, 1.0, 1e-12) && back.dt.abs() < 1e-12 && back.dy.abs() < 1e-12);
        assert!(close(
            lorentz_distance(lorentz_origin(c), p, c).unwrap(),
            1.0,
            1e-12
        ));
    }

    #[test]
    fn exp_rejects_non_finite() {
        let c = curv(1.0);
        let o = lorentz_origin(c);
        let bad = LorentzTangent {
            dt: 0.0,
            dx: f64::NAN,
            dy: 0.0,
            base: o,
        };
        assert!(lorentz_exp(o, bad, c).is_err());
        // Overflow is reported, not returned as a point.
        assert!(lorentz_exp(o, lift_tangent([800.0, 0.0], c), c).is_err());
    }

    #[test]
    fn log_of_base_is_zero() {
        let c = curv(2.0);
        let b = LorentzPoint::from_spatial(0.3, 0.9, c);
        let v = lorentz_log(b, b, c).unwrap();
        assert!(v.coords().iter().all(|a| a.abs() < 1e-15));
    }

    #[test]
    fn log_rejects_constraint_violation() {
        let c = curv(1.0);
        let o = lorentz_origin(c);
        let off = LorentzPoint::new_unchecked(0.5, 0.0, 0.0);
        assert!(matches!(
            lorentz_log(o, off, c),
            Err(Error::Constraint { .. })
        ));
    }

    #[test]
    fn transport_identity_and_known_value() {
        let c = curv(1.0);
        let o = lorentz_origin(c);
        let v = lift_tangent([0.3, -1.2], c);
        let same = parallel_transport_from_origin(v, o, c);
        assert_eq!(same.coords(), v.coords());

        let dest = LorentzPoint::from_spatial(1f64.sinh(), 0.0, c);
        let moved = parallel_transport_from_origin(lift_tangent([1.0, 0.0], c), dest, c);
        assert!(close(moved.dt, 1f64.sinh(), 1e-12));
        assert!(close(moved.dx, 1f64.cosh(), 1e-12));
        assert!(moved.dy.abs() < 1e-15);
        assert!(close(moved.norm_sq(), 1.0, 1e-12));
        assert!(lorentz_inner(dest.coords(), moved.coords()).abs() < 1e-12);
    }

    #[test]
    fn transport_preserves_norm_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let c = curv(rng.random_range(0.25..2.0));
            let v = lift_tangent(
                [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
                c,
            );
            let dest = LorentzPoint::from_spatial(
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                c,
            );
            let moved = parallel_transport_from_origin(v, dest, c);
            assert!((moved.norm_sq() - v.norm_sq()).abs() <= 1e-9);
            assert!(LorentzTangent::new(moved.dt, moved.dx, moved.dy, dest).is_ok());
        }
    }

    #[test]
    fn distance_basics() {
        let c = curv(1.0);
        let p = LorentzPoint::from_spatial(0.4, 2.0, c);
        assert_eq!(lorentz_distance(p, p, c).unwrap(), 0.0);
        let q = LorentzPoint::from_spatial(1f64.sinh(), 0.0, c);
        assert!(close(
            lorentz_distance(lorentz_origin(c), q, c).unwrap(),
            1.0,
            1e-12
        ));
    }

    #[test]
    fn triangle_inequality_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = curv(1.3);
        for _ in 0..100 {
            let mut pt = || {
                LorentzPoint::from_spatial(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    c,
                )
            };
            let (a, b, d) = (pt(), pt(), pt());
            let ab = lorentz_distance(a, b, c).unwrap();
            let bd = lorentz_distance(b, d, c).unwrap();
            let ad = lorentz_distance(a, d, c).unwrap();
            assert!(ad <= ab + bd + 1e-9);
        }
    }

    #[test]
    fn fisher_rao_collapses_to_log_ratio() {
        let c = curv(1.0);
        let p = GaussianPoint::new(0.0, 1.0).unwrap();
        let q = GaussianPoint::new(0.0, std::f64::consts::E).unwrap();
        assert!(close(fisher_rao_distance(p, q, c), 1.0, 1e-14));
        assert_eq!(fisher_rao_distance(p, p, c), 0.0);
        let c = curv(0.5);
        let q = GaussianPoint::new(3.0, 2.0).unwrap();
        let r = GaussianPoint::new(3.0, 0.5).unwrap();
        assert!(close(
            fisher_rao_distance(q, r, c),
            4f64.ln() / 0.5f64.sqrt(),
            1e-13
        ));
    }

    #[test]
    fn gaussian_point_rejects_nonpositive_sigma() {
        assert!(GaussianPoint::new(0.0, 0.0).is_err());
        assert!(GaussianPoint::new(0.0, -1.0).is_err());
        assert!(GaussianPoint::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn isometries_map_origins() {
        for c in [0.25, 0.5, 1.0, 1.5, 2.0, 4.0] {
            let c = curv(c);
            let o = lorentz_origin(c);
            let g = iso_l_to_g(o, c).unwrap();
            assert!(close(g.mu(), 0.0, 1e-15) && close(g.sigma(), 1.0, 1e-15));
            let l = iso_g_to_l(GaussianPoint::ORIGIN, c).unwrap();
            assert!(close(l.t, o.t, 1e-15) && l.x == 0.0 && l.y == 0.0);
            let p = iso_l_to_p(o, c).unwrap();
            assert_eq!((p.x, p.y), (0.0, 0.0));
            let g = iso_p_to_g(PoincarePoint::new(0.0, 0.0, c).unwrap(), c).unwrap();
            assert!(close(g.mu(), 0.0, 1e-15) && close(g.sigma(), 1.0, 1e-15));
            let p = iso_g_to_p(GaussianPoint::ORIGIN, c).unwrap();
            assert!(p.x.abs() < 1e-15 && p.y.abs() < 1e-15);
        }
    }

    #[test]
    fn isometry_guards_raise_typed_errors() {
        let c = curv(1.0);
        let bad = LorentzPoint::new_unchecked(1.0, 1.0, 0.0);
        assert!(matches!(iso_l_to_g(bad, c), Err(Error::Domain { .. })));
        assert!(matches!(
            iso_p_to_l(PoincarePoint::new_unchecked(1.0, 0.0), c),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            iso_p_to_g(PoincarePoint::new_unchecked(1.0, 0.0), c),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn isometries_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let c = curv(rng.random_range(0.25..2.0));
            let l = LorentzPoint::from_spatial(
                rng.random_range(-6.0..6.0),
                rng.random_range(-6.0..6.0),
                c,
            );
            let direct = iso_l_to_g(l, c).unwrap();
            let via = iso_p_to_g(iso_l_to_p(l, c).unwrap(), c).unwrap();
            let tol = 1e-9 * direct.sigma().max(1.0).max(direct.mu().abs());
            assert!(close(direct.mu(), via.mu(), tol), "{direct:?} vs {via:?}");
            assert!(
                close(direct.sigma(), via.sigma(), tol),
                "{direct:?} vs {via:?}"
            );
        }
    }

    #[test]
    fn isometries_preserve_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let c = curv(rng.random_range(0.25..2.0));
            let (g1, g2) = (random_gaussian(&mut rng), random_gaussian(&mut rng));
            let dg = fisher_rao_distance(g1, g2, c);
            let (l1, l2) = (iso_g_to_l(g1, c).unwrap(), iso_g_to_l(g2, c).unwrap());
            assert!(close(lorentz_distance(l1, l2, c).unwrap(), dg, 1e-9));
            let (p1, p2) = (iso_g_to_p(g1, c).unwrap(), iso_g_to_p(g2, c).unwrap());
            assert!(close(poincare_distance(p1, p2, c), dg, 1e-9));
            let (m1, m2) = (iso_p_to_l(p1, c).unwrap(), iso_p_to_l(p2, c).unwrap());
            assert!(close(lorentz_distance(m1, m2, c).unwrap(), dg, 1e-9));
        }
    }

    #[test]
    fn poincare_boundary_probe_blows_up() {
        let zero = PoincarePoint::new_unchecked(0.0, 0.0);
        // 1e-13 from the rim: finite, but round-off in 1 - c‖p‖² is amplified
        // ~1e11-fold relative to the exact 2·atanh(√c‖p‖)/√c.
        let c = curv(0.5);
        let r = (1.0 - 1e-13) / c.sqrt();
        let d = poincare_distance(PoincarePoint::new_unchecked(r, 0.0), zero, c);
        let exact = 2.0 * (c.sqrt() * r).atanh() / c.sqrt();
        assert!(d.is_finite() && ((d - exact) / exact).abs() > 1e-6);
        // Once 1 - δ rounds to 1 the denominator vanishes.
        for c in [1.0, 1.5] {
            let c = curv(c);
            let p = PoincarePoint::new_unchecked((1.0 - 1e-17) / c.sqrt(), 0.0);
            assert!(!poincare_distance(p, zero, c).is_finite());
        }
    }

    proptest! {
        #[test]
        fn exp_log_inverse(c in 0.25f64..2.0, bx in -3.0f64..3.0, by in -3.0f64..3.0,
                           r in 0.0f64..5.0, theta in 0.0f64..std::f64::consts::TAU, phi in -1.0f64..1.0) {
            let c = curv(c);
            let base = LorentzPoint::from_spatial(bx, by, c);
            // Build a tangent at base from a tangent at the origin, then rescale to Lorentz norm r.
            let v0 = lift_tangent([theta.cos(), theta.sin() * phi.signum().max(0.5)], c);
            let v = parallel_transport_from_origin(v0, base, c);
            let v = v.scale(r / v.norm());
            let p = lorentz_exp(base, v, c).unwrap();
            let cv = c.get();
            prop_assert!((lorentz_inner(p.coords(), p.coords()) + 1.0 / cv).abs() <= 1e-9 * p.t * p.t);
            let back = lorentz_log(base, p, c).unwrap();
            for (a, b) in back.coords().iter().zip(v.coords()) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + base.t), "{a} vs {b}");
            }
            prop_assert!(lorentz_inner(base.coords(), back.coords()).abs() <= 1e-9 * (1.0 + base.t * base.t));
        }

        #[test]
        fn poincare_round_trip(c in 0.25f64..2.0, r in 0.0f64..0.99, theta in 0.0f64..std::f64::consts::TAU) {
            let c = curv(c);
            let rad = r / c.sqrt();
            let p = PoincarePoint::new(rad * theta.cos(), rad * theta.sin(), c).unwrap();
            let back = iso_l_to_p(iso_p_to_l(p, c).unwrap(), c).unwrap();
            prop_assert!((back.x - p.x).abs() <= 1e-9 && (back.y - p.y).abs() <= 1e-9);
            let back = iso_g_to_p(iso_p_to_g(p, c).unwrap(), c).unwrap();
            prop_assert!((back.x - p.x).abs() <= 1e-9 && (back.y - p.y).abs() <= 1e-9);
        }

        #[test]
        fn gaussian_round_trip(c in 0.25f64..2.0, mu in -100.0f64..100.0, sigma in 1e-3f64..100.0) {
            let c = curv(c);
            let g = GaussianPoint::new(mu, sigma).unwrap();
            let l = iso_g_to_l(g, c).unwrap();
            prop_assert!(LorentzPoint::new(l.t, l.x, l.y, c).is_ok());
            let back = iso_l_to_g(l, c).unwrap();
            prop_assert!((back.mu() - mu).abs() <= 1e-9 * mu.abs().max(1.0));
            prop_assert!((back.sigma() - sigma).abs() <= 1e-9 * sigma.max(1.0));
        }
    }
}
