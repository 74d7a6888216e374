use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::fmt::Debug;
use std::sync::Arc;

/// Coefficients of `dX = b(X) dt + σ(X) dB` together with the potential `h`
/// (`∇h = σ⁻¹`) and a Lyapunov function `V` with `(∇V|b) ≤ β₀ - κ₀ V`.
///
/// Matrices are `d×d`, row-major; `grad_h` is the Jacobian `(∂_j h_i)`.
pub trait SdeModel: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn drift(&self, x: &[f64], out: &mut [f64]);
    fn sigma(&self, x: &[f64], out: &mut [f64]);
    fn h(&self, x: &[f64], out: &mut [f64]);
    fn grad_h(&self, x: &[f64], out: &mut [f64]);
    fn lyapunov(&self, x: &[f64]) -> f64;
    fn grad_lyapunov(&self, x: &[f64], out: &mut [f64]);
    fn beta0(&self) -> f64;
    fn kappa0(&self) -> f64;

    /// `sup ‖σ‖` if known.
    fn sigma_bound(&self) -> Option<f64> {
        None
    }

    /// Lipschitz constant of `b` on `B̄(0, r)` if known.
    fn lipschitz_hint(&self, _r: f64) -> Option<f64> {
        None
    }

    /// `h⁻¹(y)` by damped Newton iteration; models with an explicit inverse
    /// override this.
    fn h_inv(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        newton_h_inv(self, y, out)
    }

    /// Drift of `Y = h(X)`: `(∇h b)(h⁻¹(y))`. Along this chart the noise is additive.
    fn chart_drift(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        let mut x = vec![0.0; d];
        self.h_inv(y, &mut x)?;
        chart_drift_at(self, &x, out);
        Ok(())
    }
}

pub type ModelSpec = Arc<dyn SdeModel>;

/// `∇h(x) b(x)`.
pub fn chart_drift_at<M: SdeModel + ?Sized>(m: &M, x: &[f64], out: &mut [f64]) {
    let d = m.dim();
    let mut b = vec![0.0; d];
    let mut j = vec![0.0; d * d];
    m.drift(x, &mut b);
    m.grad_h(x, &mut j);
    for i in 0..d {
        out[i] = (0..d).map(|k| j[i * d + k] * b[k]).sum();
    }
}

fn newton_h_inv<M: SdeModel + ?Sized>(m: &M, y: &[f64], out: &mut [f64]) -> Result<()> {
    let d = m.dim();
    let mut x = y.to_vec();
    let mut hx = vec![0.0; d];
    let mut j = vec![0.0; d * d];
    for _ in 0..60 {
        m.h(&x, &mut hx);
        let r = DVector::from_iterator(d, hx.iter().zip(y).map(|(a, b)| a - b));
        let rn = r.norm();
        if rn <= 1e-14 * (1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            out.copy_from_slice(&x);
            return Ok(());
        }
        m.grad_h(&x, &mut j);
        let jm = DMatrix::from_row_slice(d, d, &j);
        let step = jm.lu().solve(&r).ok_or_else(|| Error::HInverse(y.to_vec()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            m.h(&trial, &mut hx);
            let rt: f64 = hx.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if rt < rn || lambda < 1e-6 {
                x = trial;
                break;
            }
            lambda *= 0.5;
        }
    }
    m.h(&x, &mut hx);
    let rn: f64 = hx.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if rn < 1e-10 * (1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
        out.copy_from_slice(&x);
        Ok(())
    } else {
        Err(Error::HInverse(y.to_vec()))
    }
}

type VecFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A model assembled from closures, for models defined in source.
#[derive(Clone)]
pub struct CustomModel {
    pub name: String,
    pub d: usize,
    pub b: VecFn,
    pub sigma: VecFn,
    pub h: VecFn,
    pub grad_h: VecFn,
    pub v: ScalarFn,
    pub grad_v: VecFn,
    pub beta0: f64,
    pub kappa0: f64,
}

impl Debug for CustomModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomModel").field("name", &self.name).field("d", &self.d).finish()
    }
}

impl CustomModel {
    /// Identity diffusion, `h = id`, `V = 1 + |x|²`, `β₀ = κ₀ = 2`, with drift `b`.
    pub fn additive(name: &str, d: usize, b: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            d,
            b: Arc::new(b),
            sigma: Arc::new(identity),
            h: Arc::new(|x, o| o.copy_from_slice(x)),
            grad_h: Arc::new(identity),
            v: Arc::new(|x| 1.0 + x.iter().map(|v| v * v).sum::<f64>()),
            grad_v: Arc::new(|x, o| o.iter_mut().zip(x).for_each(|(o, x)| *o = 2.0 * x)),
            beta0: 2.0,
            kappa0: 2.0,
        }
    }
}

pub(crate) fn identity(x: &[f64], out: &mut [f64]) {
    let d = x.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
}

impl SdeModel for CustomModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        (self.b)(x, out)
    }
    fn sigma(&self, x: &[f64], out: &mut [f64]) {
        (self.sigma)(x, out)
    }
    fn h(&self, x: &[f64], out: &mut [f64]) {
        (self.h)(x, out)
    }
    fn grad_h(&self, x: &[f64], out: &mut [f64]) {
        (self.grad_h)(x, out)
    }
    fn lyapunov(&self, x: &[f64]) -> f64 {
        (self.v)(x)
    }
    fn grad_lyapunov(&self, x: &[f64], out: &mut [f64]) {
        (self.grad_v)(x, out)
    }
    fn beta0(&self) -> f64 {
        self.beta0
    }
    fn kappa0(&self) -> f64 {
        self.kappa0
    }
}
