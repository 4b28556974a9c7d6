//! Two-body Bethe equations at real and complex coupling.
//!
//! The relative quasi-momentum `k = k2 - k1` of level `n` satisfies
//! `J(g, k) = k + (2/pi) atan(k/g) ∈ Z`. Even levels solve
//! `k sin(pi k/2) - g cos(pi k/2) = 0`, odd levels
//! `k cos(pi k/2) + g sin(pi k/2) = 0`. Both residuals are entire in `(g, k)`,
//! which keeps Newton basins free of the poles of the cot/tan forms.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parity of a level index, of the total momentum and of the Bethe equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn of_kbar(kbar: i64) -> Self {
        if kbar.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Ground level of the family (`n_b`): 0 for even, 1 for odd.
    pub fn ground(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    /// Level index of the `slot`-th member of the family.
    pub fn level(self, slot: usize) -> usize {
        self.ground() + 2 * slot
    }

    /// Real coupling where the ground level meets its mirror image `-k`.
    pub fn real_branch_point(self) -> f64 {
        match self {
            Parity::Even => 0.0,
            Parity::Odd => -FRAC_2_PI,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" | "e" | "0" => Ok(Parity::Even),
            "odd" | "o" | "1" => Ok(Parity::Odd),
            other => Err(Error::Parse(format!("unknown parity `{other}`"))),
        }
    }
}

/// One solution branch `k_n(g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetheState {
    pub n: usize,
    pub g: Complex64,
    pub k: Complex64,
    pub parity: Parity,
}

impl BetheState {
    pub fn new(n: usize, g: Complex64, k: Complex64) -> Self {
        Self {
            n,
            g,
            k,
            parity: Parity::of(n),
        }
    }

    pub fn residual(&self) -> Complex64 {
        bethe_residual(self.parity, self.g, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    pub kbar: i64,
    pub n: usize,
    pub energy: Complex64,
}

/// Value of `J(g, k)`; `on_branch_cut` is set when `k/g` lies on a cut of the
/// principal inverse tangent and the principal value was returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JValue {
    pub value: Complex64,
    pub on_branch_cut: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Newton stops once `|F| <= residual_tol * residual_scale(g, k)`.
    pub residual_tol: f64,
    pub max_newton: usize,
    /// First homotopy step along the real axis.
    pub initial_step: f64,
    pub growth: f64,
    /// Upper bound on homotopy nodes per solve.
    pub max_nodes: usize,
    /// Large-|g| stand-in for g = ±∞.
    pub proxy_infinity: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-12,
            max_newton: 50,
            initial_step: 1e-2,
            growth: 1.5,
            max_nodes: 20_000,
            proxy_infinity: 1e6,
        }
    }
}

pub fn j_function(g: Complex64, k: Complex64) -> Result<JValue> {
    if g == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("J(g, k) is undefined at g = 0".into()));
    }
    let z = k / g;
    let on_branch_cut = z.re.abs() <= 1e-15 * z.norm() && z.im.abs() >= 1.0;
    Ok(JValue {
        value: k + FRAC_2_PI * z.atan(),
        on_branch_cut,
    })
}

pub fn bethe_residual(parity: Parity, g: Complex64, k: Complex64) -> Complex64 {
    let (s, c) = half_angle(k);
    match parity {
        Parity::Even => k * s - g * c,
        Parity::Odd => k * c + g * s,
    }
}

/// `∂F/∂k` of [`bethe_residual`].
pub fn residual_dk(parity: Parity, g: Complex64, k: Complex64) -> Complex64 {
    let (s, c) = half_angle(k);
    match parity {
        Parity::Even => s + k * c * FRAC_PI_2 + g * s * FRAC_PI_2,
        Parity::Odd => c - k * s * FRAC_PI_2 + g * c * FRAC_PI_2,
    }
}

/// `∂F/∂g` of [`bethe_residual`].
pub fn residual_dg(parity: Parity, _g: Complex64, k: Complex64) -> Complex64 {
    let (s, c) = half_angle(k);
    match parity {
        Parity::Even => -c,
        Parity::Odd => s,
    }
}

fn half_angle(k: Complex64) -> (Complex64, Complex64) {
    let x = k * FRAC_PI_2;
    (x.sin(), x.cos())
}

/// `r(g, k) = k² + g² + 2g/π`; vanishes exactly at branch points on shell.
pub fn branch_discriminant(g: Complex64, k: Complex64) -> Complex64 {
    k * k + g * g + g * FRAC_2_PI
}

/// `∂J/∂k = r / (g² + k²)`.
pub fn j_dk(g: Complex64, k: Complex64) -> Complex64 {
    branch_discriminant(g, k) / (g * g + k * k)
}

/// `∂J/∂g = -(2/π) k / (g² + k²)`.
pub fn j_dg(g: Complex64, k: Complex64) -> Complex64 {
    -k * FRAC_2_PI / (g * g + k * k)
}

/// `∂²J/∂k² = -(4/π) g k / (g² + k²)²`.
pub fn j_dkk(g: Complex64, k: Complex64) -> Complex64 {
    let s = g * g + k * k;
    -g * k * (2.0 * FRAC_2_PI) / (s * s)
}

/// First-order predictor `dk/dg = -∂_g J / ∂_k J = (2k/π) / r`.
pub fn predictor(g: Complex64, k: Complex64) -> Complex64 {
    k * FRAC_2_PI / branch_discriminant(g, k)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOutcome {
    pub k: Complex64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Natural size of the terms in the residual at `(g, k)`. Convergence and
/// acceptance are judged relative to it, since for bound states the trig
/// factors grow like `cosh(π Im k / 2)`.
pub fn residual_scale(g: Complex64, k: Complex64) -> f64 {
    g.norm().max(k.norm()).max(1.0) * (0.5 * PI * k.im.abs()).cosh()
}

/// `|F| / residual_scale`.
pub fn relative_residual(parity: Parity, g: Complex64, k: Complex64) -> f64 {
    bethe_residual(parity, g, k).norm() / residual_scale(g, k)
}

/// Complex Newton on the pole-free residual. `max_step` caps each update.
pub(crate) fn newton(
    parity: Parity,
    g: Complex64,
    k0: Complex64,
    tol: f64,
    max_iter: usize,
    max_step: Option<f64>,
) -> NewtonOutcome {
    let mut k = k0;
    let mut f = bethe_residual(parity, g, k);
    for it in 0..=max_iter {
        let target = tol * residual_scale(g, k);
        if f.norm() <= target {
            return NewtonOutcome {
                k,
                iterations: it,
                residual: f.norm(),
                converged: true,
            };
        }
        if it == max_iter {
            break;
        }
        let fk = residual_dk(parity, g, k);
        if fk.norm() == 0.0 || !fk.is_finite() {
            break;
        }
        let mut delta = f / fk;
        if let Some(cap) = max_step {
            let m = delta.norm();
            if m > cap {
                delta *= cap / m;
            }
        }
        k -= delta;
        f = bethe_residual(parity, g, k);
        // Stagnation at the rounding floor.
        if delta.norm() <= 4.0 * f64::EPSILON * k.norm().max(1.0) {
            let converged = f.norm() <= 10.0 * tol * residual_scale(g, k);
            return NewtonOutcome {
                k,
                iterations: it + 1,
                residual: f.norm(),
                converged,
            };
        }
    }
    NewtonOutcome {
        k,
        iterations: max_iter,
        residual: f.norm(),
        converged: false,
    }
}

/// Quasi-momentum of level `n` at real coupling `g`, continued from `k_n(0) = n`.
pub fn solve_k_real(n: usize, g: f64) -> Result<BetheState> {
    solve_k_real_with(n, g, &SolverConfig::default())
}

pub fn solve_k_real_with(n: usize, g: f64, cfg: &SolverConfig) -> Result<BetheState> {
    if !g.is_finite() {
        return Err(Error::Domain(format!("coupling must be finite, got {g}")));
    }
    let parity = Parity::of(n);
    let gc = Complex64::new(g, 0.0);
    if g == 0.0 {
        return Ok(BetheState::new(n, gc, Complex64::new(n as f64, 0.0)));
    }

    let (g_start, k_seed) = match n {
        0 => {
            // k ≈ ±sqrt(2g/π) near the real branch point at g = 0; the bound
            // branch takes Im k < 0.
            let g1 = g.signum() * g.abs().min(1e-6);
            let k1 = if g1 > 0.0 {
                Complex64::new((2.0 * g1 / PI).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, -(2.0 * g1.abs() / PI).sqrt())
            };
            (g1, k1)
        }
        1 if g <= -FRAC_2_PI => {
            let gb = -FRAC_2_PI;
            let delta = (gb - g).min(1e-6);
            if delta == 0.0 {
                return Ok(BetheState::new(n, gc, Complex64::new(0.0, 0.0)));
            }
            // Near g = -2/π: k² ≈ 6 δ / π with δ = -2/π - g.
            (gb - delta, Complex64::new(0.0, -(6.0 * delta / PI).sqrt()))
        }
        _ => (0.0, Complex64::new(n as f64, 0.0)),
    };

    let k_start = if g_start == 0.0 {
        k_seed
    } else {
        let out = newton(
            parity,
            Complex64::new(g_start, 0.0),
            k_seed,
            cfg.residual_tol,
            cfg.max_newton,
            None,
        );
        if !out.converged {
            return Err(Error::NonConvergence {
                n,
                g: Complex64::new(g_start, 0.0),
                last_k: out.k,
                residual: out.residual,
            });
        }
        out.k
    };
    let k = march_real(n, g_start, k_start, g, cfg)?;
    Ok(BetheState::new(n, gc, k))
}

/// Homotopy along the real axis with an Euler predictor and geometric step growth.
fn march_real(n: usize, g_from: f64, k_from: Complex64, g_to: f64, cfg: &SolverConfig) -> Result<Complex64> {
    let parity = Parity::of(n);
    let mut gc = g_from;
    let mut k = k_from;
    let dir = (g_to - g_from).signum();
    // Close to a real branch point the solution varies on the scale of |g|.
    let mut h = cfg
        .initial_step
        .min(0.1 * g_from.abs().max(1e-12))
        .min((g_to - g_from).abs());
    if g_from == 0.0 {
        h = cfg.initial_step.min((g_to - g_from).abs());
    }
    let mut nodes = 0;
    while gc != g_to {
        nodes += 1;
        if nodes > cfg.max_nodes {
            break;
        }
        let remaining = (g_to - gc).abs();
        let (gt, step) = if h >= remaining {
            (g_to, remaining)
        } else {
            (gc + dir * h, h)
        };
        let gcc = Complex64::new(gc, 0.0);
        let slope = -residual_dg(parity, gcc, k) / residual_dk(parity, gcc, k);
        let kp = k + slope * (gt - gc);
        let out = newton(
            parity,
            Complex64::new(gt, 0.0),
            kp,
            cfg.residual_tol,
            cfg.max_newton.min(8),
            None,
        );
        let drift = (out.k - kp).norm();
        let predicted = (kp - k).norm();
        let r_old = branch_discriminant(gcc, k);
        let r_new = branch_discriminant(Complex64::new(gt, 0.0), out.k);
        let r_ok = (r_new - r_old).norm() <= 0.5 * r_old.norm();
        if out.converged
            && out.k.is_finite()
            && r_ok
            && drift <= 0.25 * predicted + 1e-9 * k.norm().max(1.0)
        {
            gc = gt;
            k = out.k;
            if out.iterations <= 3 {
                h = step * cfg.growth;
            }
        } else {
            h = step * 0.5;
            if h < 1e-14 * gc.abs().max(1.0) {
                break;
            }
        }
    }
    if gc != g_to {
        let g = Complex64::new(gc, 0.0);
        return Err(Error::NonConvergence {
            n,
            g,
            last_k: k,
            residual: relative_residual(parity, g, k),
        });
    }
    Ok(k)
}

pub fn energy(kbar: i64, state: &BetheState) -> Result<EnergyLevel> {
    if Parity::of_kbar(kbar) != state.parity {
        return Err(Error::ParityMismatch { kbar, n: state.n });
    }
    let kb = kbar as f64;
    Ok(EnergyLevel {
        kbar,
        n: state.n,
        energy: (state.k * state.k + kb * kb) * 0.5,
    })
}

/// True when level `n` at real `g` is a two-particle bound state (pure imaginary `k`).
pub fn is_bound(n: usize, g: f64) -> bool {
    (n == 0 && g < 0.0) || (n == 1 && g < -FRAC_2_PI)
}
