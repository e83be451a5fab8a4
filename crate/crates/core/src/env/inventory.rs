use rand::Rng;

use super::{Environment, Transition};
use crate::error::{Error, Result};
use crate::integrate::adaptive_simpson;

/// Single-item inventory with exponential demand and a normalized linear
/// cost.
///
/// Stock evolves as `s' = clip(s + a - D)`. The cost of the current stock
/// level `C(s_t)` is charged at step `t` (reported as reward `-C(s_t)`), so
/// the discounted return from `s0` under a base-stock policy matches the
/// closed-form [`Inventory::inventory_value`].
#[derive(Clone, Debug, PartialEq)]
pub struct Inventory {
    procurement: f64,
    holding: f64,
    backlog: f64,
    demand_rate: f64,
    discount: f64,
    clip: (f64, f64),
    start: f64,
}

const VALUE_TOL: f64 = 1e-8;

impl Inventory {
    pub fn new(
        procurement: f64,
        holding: f64,
        backlog: f64,
        demand_rate: f64,
        discount: f64,
        clip: (f64, f64),
        start: f64,
    ) -> Result<Self> {
        if !(procurement > 0.0 && holding > 0.0 && backlog > 0.0) {
            return Err(Error::param("inventory costs must be positive"));
        }
        if !(demand_rate > 0.0) {
            return Err(Error::param("demand rate must be positive"));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::param(format!("discount {discount} not in (0,1)")));
        }
        if !(clip.0 < clip.1) || !(clip.0..=clip.1).contains(&start) {
            return Err(Error::param("start state must lie in a nonempty clip interval"));
        }
        Ok(Inventory {
            procurement,
            holding,
            backlog,
            demand_rate,
            discount,
            clip,
            start,
        })
    }

    /// `a_h = 1, a_b = 1, a_p = 1.5, lambda = 0.025, gamma = 0.9`, states
    /// bounded to `[-100, 100]`, start stock 1.
    pub fn reference() -> Self {
        Inventory::new(1.5, 1.0, 1.0, 0.025, 0.9, (-100.0, 100.0), 1.0).unwrap()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn demand_rate(&self) -> f64 {
        self.demand_rate
    }

    pub fn clip(&self) -> (f64, f64) {
        self.clip
    }

    fn procurement_slope(&self) -> f64 {
        self.procurement * (1.0 - self.discount) / self.discount
    }

    /// Normalized per-step cost
    /// `C(s) = a_p s (1-g)/g + a_h s 1{s>=0} - a_b s 1{s<0}`.
    pub fn cost(&self, s: f64) -> f64 {
        let linear = self.procurement_slope() * s;
        if s >= 0.0 {
            linear + self.holding * s
        } else {
            linear - self.backlog * s
        }
    }

    /// Inverse-CDF exponential demand.
    pub fn sample_demand<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        -(1.0 - u).ln() / self.demand_rate
    }

    pub fn inventory_step<R: Rng + ?Sized>(&self, state: f64, order: f64, rng: &mut R) -> Result<(f64, f64)> {
        if !(order >= 0.0) {
            return Err(Error::param(format!("order quantity {order} must be nonnegative")));
        }
        let demand = self.sample_demand(rng);
        let next = (state + order - demand).clamp(self.clip.0, self.clip.1);
        Ok((next, -self.cost(state)))
    }

    /// `E[C(theta - D)]` for `D ~ Exp(lambda)`, by adaptive quadrature.
    pub fn expected_cost_after_order(&self, theta: f64) -> Result<f64> {
        let lambda = self.demand_rate;
        let density = |x: f64| lambda * (-lambda * x).exp();
        let f = |x: f64| density(x) * self.cost(theta - x);
        // The kink of C sits at x = theta; the tail beyond 60/lambda
        // contributes below e^-60 relative.
        let tail = 60.0 / lambda;
        let kink = theta.max(0.0);
        let head = adaptive_simpson(f, 0.0, kink, VALUE_TOL / 2.0)?;
        let rest = adaptive_simpson(f, kink, kink + tail, VALUE_TOL / 2.0)?;
        Ok(head + rest)
    }

    /// Discounted cost of the base-stock policy with level `theta` from the
    /// start stock: `C(s0) + g/(1-g) E[C(theta - D)]`, valid for
    /// `s0 <= theta`.
    pub fn inventory_value(&self, theta: f64) -> Result<f64> {
        if self.start > theta {
            return Err(Error::Domain(format!(
                "closed-form value needs start stock {} <= theta {theta}",
                self.start
            )));
        }
        let g = self.discount;
        Ok(self.cost(self.start) + g / (1.0 - g) * self.expected_cost_after_order(theta)?)
    }

    /// Optimal base-stock level for exponential demand.
    pub fn inventory_optimal_threshold(&self) -> Result<f64> {
        let denom = self.holding + self.procurement_slope();
        let ratio = (self.holding + self.backlog) / denom;
        if !(denom > 0.0) || !(ratio > 0.0) {
            return Err(Error::Domain("optimal threshold log argument is not positive".into()));
        }
        Ok(ratio.ln() / self.demand_rate)
    }

    /// Local Lipschitz constant of the value function below the base-stock
    /// level: `a_h + a_p (1-g)/g`.
    pub fn lipschitz_constant(&self) -> f64 {
        self.holding + self.procurement_slope()
    }
}

impl Environment for Inventory {
    type State = f64;
    type Action = f64;

    fn start_state(&self) -> f64 {
        self.start
    }

    fn step<R: Rng + ?Sized>(&self, state: &f64, action: &f64, rng: &mut R) -> Result<Transition<f64>> {
        let (next, reward) = self.inventory_step(*state, *action, rng)?;
        Ok(Transition {
            next_state: next,
            reward,
            post_state: Some(state + action),
        })
    }

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }
}
