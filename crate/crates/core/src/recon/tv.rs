//! Discrete total variation on real channels and its proximal operator.
//!
//! Forward differences with a zero difference at the last row/column
//! (Neumann boundary). The prox is solved on the dual with the fast
//! gradient projection of Beck and Teboulle.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvFlavor {
    #[default]
    Isotropic,
    Anisotropic,
}

/// Dual variable of the TV prox, one value per pixel and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl DualField {
    pub fn zeros(len: usize) -> Self {
        Self {
            dx: vec![0.0; len],
            dy: vec![0.0; len],
        }
    }
}

/// `(Dx x, Dy x)`: horizontal and vertical forward differences.
pub fn gradient(x: &[f64], height: usize, width: usize) -> DualField {
    let mut g = DualField::zeros(x.len());
    gradient_into(x, height, width, &mut g);
    g
}

fn gradient_into(x: &[f64], height: usize, width: usize, g: &mut DualField) {
    for r in 0..height {
        let row = r * width;
        for c in 0..width {
            let i = row + c;
            g.dx[i] = if c + 1 < width { x[i + 1] - x[i] } else { 0.0 };
            g.dy[i] = if r + 1 < height { x[i + width] - x[i] } else { 0.0 };
        }
    }
}

/// `D^T p`, the adjoint of [`gradient`].
pub fn gradient_adjoint(p: &DualField, height: usize, width: usize) -> Vec<f64> {
    let mut out = vec![0.0; height * width];
    adjoint_into(p, height, width, &mut out);
    out
}

fn adjoint_into(p: &DualField, height: usize, width: usize, out: &mut [f64]) {
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            let mut v = 0.0;
            if c + 1 < width {
                v -= p.dx[i];
            }
            if c > 0 {
                v += p.dx[i - 1];
            }
            if r + 1 < height {
                v -= p.dy[i];
            }
            if r > 0 {
                v += p.dy[i - width];
            }
            out[i] = v;
        }
    }
}

pub fn tv_value(x: &[f64], height: usize, width: usize, flavor: TvFlavor) -> f64 {
    tv_of_gradient(&gradient(x, height, width), flavor)
}

fn tv_of_gradient(g: &DualField, flavor: TvFlavor) -> f64 {
    match flavor {
        TvFlavor::Isotropic => g.dx.iter().zip(&g.dy).map(|(a, b)| (a * a + b * b).sqrt()).sum(),
        TvFlavor::Anisotropic => g.dx.iter().zip(&g.dy).map(|(a, b)| a.abs() + b.abs()).sum(),
    }
}

fn project_unit_ball(p: &mut DualField, flavor: TvFlavor) {
    match flavor {
        TvFlavor::Isotropic => {
            for (a, b) in p.dx.iter_mut().zip(p.dy.iter_mut()) {
                let n = (*a * *a + *b * *b).sqrt();
                if n > 1.0 {
                    *a /= n;
                    *b /= n;
                }
            }
        }
        TvFlavor::Anisotropic => {
            for v in p.dx.iter_mut().chain(p.dy.iter_mut()) {
                *v = v.clamp(-1.0, 1.0);
            }
        }
    }
}

const GAP_EVERY: usize = 5;

/// Iteration controls for [`tv_prox`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxOptions {
    pub max_iters: usize,
    /// Stop once the duality gap certifies `||x - x*|| <= tolerance * ||z||`.
    pub tolerance: f64,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tolerance: 1e-10,
        }
    }
}

/// `argmin_x 1/2 ||x - z||^2 + weight * TV(x)` on a real channel.
///
/// `dual` is used as the starting point and receives the final dual
/// iterate, so repeated calls on nearby inputs can warm-start.
pub fn tv_prox(
    z: &[f64],
    height: usize,
    width: usize,
    weight: f64,
    flavor: TvFlavor,
    opts: ProxOptions,
    dual: &mut DualField,
) -> Vec<f64> {
    assert_eq!(z.len(), height * width);
    if weight <= 0.0 {
        return z.to_vec();
    }
    let n = z.len();
    // x = z - weight * D^T p
    let primal = |p: &DualField, out: &mut Vec<f64>| {
        adjoint_into(p, height, width, out);
        for (o, zi) in out.iter_mut().zip(z) {
            *o = zi - weight * *o;
        }
    };
    let step = 1.0 / (8.0 * weight);
    let mut p = dual.clone();
    let mut r = dual.clone();
    let mut next = DualField::zeros(n);
    let mut g = DualField::zeros(n);
    let mut t: f64 = 1.0;
    let mut x = vec![0.0; n];
    let scale = z.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for k in 0..opts.max_iters {
        primal(&r, &mut x);
        gradient_into(&x, height, width, &mut g);
        for i in 0..n {
            next.dx[i] = r.dx[i] + step * g.dx[i];
            next.dy[i] = r.dy[i] + step * g.dy[i];
        }
        project_unit_ball(&mut next, flavor);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        for i in 0..n {
            r.dx[i] = next.dx[i] + beta * (next.dx[i] - p.dx[i]);
            r.dy[i] = next.dy[i] + beta * (next.dy[i] - p.dy[i]);
        }
        std::mem::swap(&mut p, &mut next);
        t = t_next;

        if k % GAP_EVERY == GAP_EVERY - 1 || k + 1 == opts.max_iters {
            // Duality gap w (TV(x) - <Dx, p>) bounds ||x - x*||^2 / 2.
            primal(&p, &mut x);
            gradient_into(&x, height, width, &mut g);
            let pairing: f64 = (0..n).map(|i| g.dx[i] * p.dx[i] + g.dy[i] * p.dy[i]).sum();
            let gap = weight * (tv_of_gradient(&g, flavor) - pairing);
            if (2.0 * gap.max(0.0)).sqrt() <= opts.tolerance * scale {
                *dual = p;
                return x;
            }
        }
    }
    primal(&p, &mut x);
    *dual = p;
    x
}
