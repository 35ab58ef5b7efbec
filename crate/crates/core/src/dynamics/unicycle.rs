use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{wrap_angle, Bounds, DynamicsError, SystemModel};

/// One unicycle step on `(x, y, θ, v, ω)`. The controls become the next
/// step's velocities.
pub fn step_unicycle(s: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
    let (x, y, th, v, w) = (s[0], s[1], s[2], s[3], s[4]);
    vec![
        x + v * th.cos() * dt,
        y + v * th.sin() * dt,
        wrap_angle(th + w * dt),
        u[0],
        u[1],
    ]
}

#[derive(Clone, Debug)]
pub struct Unicycle {
    state: Bounds,
    control: Bounds,
    dt: f64,
}

impl Unicycle {
    pub const V_MAX: f64 = 0.3;
    pub const W_MAX: f64 = 1.0;

    /// Workspace `[x_min, x_max] × [y_min, y_max]` with the standard
    /// velocity limits.
    pub fn new(
        workspace_min: [f64; 2],
        workspace_max: [f64; 2],
        dt: f64,
    ) -> Result<Self, DynamicsError> {
        let state = Bounds::new(
            vec![
                workspace_min[0],
                workspace_min[1],
                -PI,
                -Self::V_MAX,
                -Self::W_MAX,
            ],
            vec![
                workspace_max[0],
                workspace_max[1],
                PI,
                Self::V_MAX,
                Self::W_MAX,
            ],
        )?;
        let control = Bounds::new(
            vec![-Self::V_MAX, -Self::W_MAX],
            vec![Self::V_MAX, Self::W_MAX],
        )?;
        Self::with_bounds(state, control, dt)
    }

    pub fn with_bounds(state: Bounds, control: Bounds, dt: f64) -> Result<Self, DynamicsError> {
        if state.dim() != 5 || control.dim() != 2 {
            return Err(DynamicsError::Invalid(
                "unicycle needs 5 state and 2 control axes".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(DynamicsError::Invalid("dt must be positive".into()));
        }
        Ok(Unicycle { state, control, dt })
    }
}

impl SystemModel for Unicycle {
    fn name(&self) -> &'static str {
        "unicycle"
    }
    fn state_bounds(&self) -> &Bounds {
        &self.state
    }
    fn control_bounds(&self) -> &Bounds {
        &self.control
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn step(&self, q: &[f64], u: &[f64]) -> Vec<f64> {
        step_unicycle(q, u, self.dt)
    }
    fn jacobian(&self, q: &[f64], _u: &[f64]) -> DMatrix<f64> {
        let (th, v, dt) = (q[2], q[3], self.dt);
        let mut j = DMatrix::zeros(5, 5);
        j[(0, 0)] = 1.0;
        j[(0, 2)] = -v * th.sin() * dt;
        j[(0, 3)] = th.cos() * dt;
        j[(1, 1)] = 1.0;
        j[(1, 2)] = v * th.cos() * dt;
        j[(1, 3)] = th.sin() * dt;
        j[(2, 2)] = 1.0;
        j[(2, 4)] = dt;
        j
    }
    fn angle_axes(&self) -> &[usize] {
        &[2]
    }
}
