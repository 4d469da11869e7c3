//! Closed-form reference flows.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::timeloop::TimeVectorFn;
use crate::{Mat2, Vec2};

pub type PointVectorFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
pub type PointMatrixFn = Arc<dyn Fn(Vec2) -> Mat2 + Send + Sync>;
pub type PointScalarFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;

/// Steady velocity, its gradient `grad[i][j] = ∂u_i/∂x_j`, pressure and the body force
/// for which the triple solves the steady equations.
#[derive(Clone)]
pub struct ExactSolution {
    pub velocity: PointVectorFn,
    pub gradient: PointMatrixFn,
    pub pressure: PointScalarFn,
    pub force: Option<PointVectorFn>,
}

impl ExactSolution {
    /// Velocity as time-dependent Dirichlet data.
    pub fn dirichlet(&self) -> TimeVectorFn {
        let u = self.velocity.clone();
        Arc::new(move |x, _| u(x))
    }

    /// Body force as time-dependent data.
    pub fn time_force(&self) -> Option<TimeVectorFn> {
        self.force.clone().map(|f| Arc::new(move |x: Vec2, _: f64| f(x)) as TimeVectorFn)
    }

    /// Traction `ν ∇u n − p n`.
    pub fn traction(&self, nu: f64, x: Vec2, n: Vec2) -> Vec2 {
        let g = (self.gradient)(x);
        let p = (self.pressure)(x);
        [0, 1].map(|i| nu * (g[i][0] * n[0] + g[i][1] * n[1]) - p * n[i])
    }
}

/// Decay rate `λ = −8π² / (ν⁻¹ + √(ν⁻² + 64π²))` of the Kovasznay field.
pub fn kovasznay_lambda(nu: f64) -> f64 {
    let r = 1.0 / nu;
    -8.0 * PI * PI / (r + (r * r + 64.0 * PI * PI).sqrt())
}

/// Kovasznay flow on `[−½, 3/2] × [0, 2]` with mean-free pressure.
///
/// The field is solenoidal for every `λ`. It balances the convective equations without a
/// body force only if `ν(λ² − 4π²) = λ`, which the rate above does not satisfy, so the
/// residual is returned as `force`.
pub fn kovasznay_exact(nu: f64) -> Result<ExactSolution> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("viscosity must be positive, got {nu}")));
    }
    let lam = kovasznay_lambda(nu);
    let om = 2.0 * PI;
    // mean of −½ e^{2λx} over the domain
    let p_bar = ((3.0 * lam).exp() - (-lam).exp()) / (8.0 * lam);
    let kres = nu * (lam * lam - om * om) - lam;
    Ok(ExactSolution {
        velocity: Arc::new(move |x| {
            let e = (lam * x[0]).exp();
            [1.0 - e * (om * x[1]).cos(), lam / om * e * (om * x[1]).sin()]
        }),
        gradient: Arc::new(move |x| {
            let e = (lam * x[0]).exp();
            let (s, c) = (om * x[1]).sin_cos();
            [[-lam * e * c, om * e * s], [lam * lam / om * e * s, lam * e * c]]
        }),
        pressure: Arc::new(move |x| -0.5 * (2.0 * lam * x[0]).exp() + p_bar),
        force: Some(Arc::new(move |x| {
            let e = (lam * x[0]).exp();
            let (s, c) = (om * x[1]).sin_cos();
            [kres * e * c, -kres * lam / om * e * s]
        })),
    })
}

/// Potential flow around the unit disk, `Ψ = y (1 − 1/r²)`, `u = (∂_y Ψ, −∂_x Ψ)`, `p = 0`.
///
/// The closures evaluate the formula anywhere except the origin so that quadrature points
/// of a polygonal boundary approximation are accepted; [`potential_velocity`] checks.
pub fn potential_exact() -> ExactSolution {
    ExactSolution {
        velocity: Arc::new(potential_formula),
        gradient: Arc::new(|x| {
            let (a, b) = (x[0], x[1]);
            let r2 = a * a + b * b;
            let (r4, r6) = (r2 * r2, r2 * r2 * r2);
            [
                [2.0 * a / r4 - 8.0 * a * b * b / r6, 6.0 * b / r4 - 8.0 * b * b * b / r6],
                [-2.0 * b / r4 + 8.0 * a * a * b / r6, -2.0 * a / r4 + 8.0 * a * b * b / r6],
            ]
        }),
        pressure: Arc::new(|_| 0.0),
        force: None,
    }
}

fn potential_formula(x: Vec2) -> Vec2 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    [1.0 - 1.0 / r2 + 2.0 * x[1] * x[1] / (r2 * r2), -2.0 * x[0] * x[1] / (r2 * r2)]
}

/// Potential-flow velocity; points inside the unit disk are rejected.
pub fn potential_velocity(x: Vec2) -> Result<Vec2> {
    if x[0] * x[0] + x[1] * x[1] < 1.0 - 1e-12 {
        return Err(Error::OutsideDomain(x[0], x[1]));
    }
    Ok(potential_formula(x))
}
