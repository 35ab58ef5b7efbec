use nalgebra::{DMatrix, DVector};

use super::{Bounds, DynamicsError, SystemModel};

fn check_dims(
    state: &Bounds,
    control: &Bounds,
    n: usize,
    m: usize,
    dt: f64,
) -> Result<(), DynamicsError> {
    if state.dim() != n || control.dim() != m {
        return Err(DynamicsError::Invalid(format!(
            "expected {n} state and {m} control axes, got {} and {}",
            state.dim(),
            control.dim()
        )));
    }
    if !(dt > 0.0) {
        return Err(DynamicsError::Invalid("dt must be positive".into()));
    }
    Ok(())
}

/// `q′ = q + u·Δt` in any dimension.
#[derive(Clone, Debug)]
pub struct SingleIntegrator {
    state: Bounds,
    control: Bounds,
    dt: f64,
}

impl SingleIntegrator {
    pub fn new(state: Bounds, control: Bounds, dt: f64) -> Result<Self, DynamicsError> {
        let n = state.dim();
        check_dims(&state, &control, n, n, dt)?;
        Ok(SingleIntegrator { state, control, dt })
    }
}

impl SystemModel for SingleIntegrator {
    fn name(&self) -> &'static str {
        "single_integrator"
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
        q.iter().zip(u).map(|(x, v)| x + v * self.dt).collect()
    }
    fn jacobian(&self, q: &[f64], _u: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(q.len(), q.len())
    }
    fn lipschitz(&self) -> Option<f64> {
        Some((1.0 + self.dt * self.dt).sqrt())
    }
    fn connect_seed(&self, q0: &[f64], qf: &[f64], steps: usize) -> Option<Vec<Vec<f64>>> {
        let k = steps as f64 * self.dt;
        let u: Vec<f64> = qf.iter().zip(q0).map(|(b, a)| (b - a) / k).collect();
        Some(vec![u; steps])
    }
}

/// One step of the planar double integrator `(x, y, vx, vy)`.
pub fn step_double_integrator(s: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
    vec![
        s[0] + s[2] * dt,
        s[1] + s[3] * dt,
        s[2] + u[0] * dt,
        s[3] + u[1] * dt,
    ]
}

/// Planar point mass with acceleration control.
#[derive(Clone, Debug)]
pub struct DoubleIntegrator {
    state: Bounds,
    control: Bounds,
    dt: f64,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    lipschitz: f64,
}

impl DoubleIntegrator {
    pub fn new(state: Bounds, control: Bounds, dt: f64) -> Result<Self, DynamicsError> {
        check_dims(&state, &control, 4, 2, dt)?;
        let mut a = DMatrix::identity(4, 4);
        a[(0, 2)] = dt;
        a[(1, 3)] = dt;
        let mut b = DMatrix::zeros(4, 2);
        b[(2, 0)] = dt;
        b[(3, 1)] = dt;
        let mut ab = DMatrix::zeros(4, 6);
        ab.view_mut((0, 0), (4, 4)).copy_from(&a);
        ab.view_mut((0, 4), (4, 2)).copy_from(&b);
        let lipschitz = ab.singular_values().max();
        Ok(DoubleIntegrator {
            state,
            control,
            dt,
            a,
            b,
            lipschitz,
        })
    }
}

impl SystemModel for DoubleIntegrator {
    fn name(&self) -> &'static str {
        "double_integrator"
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
        step_double_integrator(q, u, self.dt)
    }
    fn jacobian(&self, _q: &[f64], _u: &[f64]) -> DMatrix<f64> {
        self.a.clone()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    /// Minimum-norm controls from the controllability matrix.
    fn connect_seed(&self, q0: &[f64], qf: &[f64], steps: usize) -> Option<Vec<Vec<f64>>> {
        if steps == 0 {
            return None;
        }
        let mut c = DMatrix::zeros(4, 2 * steps);
        let mut pow = DMatrix::identity(4, 4);
        for k in (0..steps).rev() {
            c.view_mut((0, 2 * k), (4, 2)).copy_from(&(&pow * &self.b));
            pow = &pow * &self.a;
        }
        let rhs = DVector::from_column_slice(qf) - &pow * DVector::from_column_slice(q0);
        let u = c.svd(true, true).solve(&rhs, 1e-12).ok()?;
        Some((0..steps).map(|k| vec![u[2 * k], u[2 * k + 1]]).collect())
    }
}
