//! Frame transport `dU/dt = -i U A(g(t)) g'(t)` with a Dormand-Prince 5(4)
//! pair. The quasi-momenta of all retained levels are continued along with the
//! path so that cut crossings follow the branches, not principal values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{connection_from_levels, HolonomyMatrix, Ordering, TransportConfig, TransportDiagnostics, TruncationSpec};
use crate::continuation::{sheet_state, walk_segment, ComplexPath, ContinuationConfig, StepParams, TrackedLevel, Walk};
use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Levels of the truncation on their sheets at `g`.
pub fn initial_levels(g: Complex64, trunc: &TruncationSpec) -> Result<Vec<TrackedLevel>> {
    trunc.levels().into_iter().map(|n| sheet_state(n, g)).collect()
}

/// Continues the retained levels from an accepted anchor to stage points.
struct FrameTracker {
    params: StepParams,
    cfg: ContinuationConfig,
    segment: usize,
}

impl FrameTracker {
    fn frame_at(&self, anchor: &[TrackedLevel], g: Complex64) -> Result<Vec<TrackedLevel>> {
        anchor
            .iter()
            .map(|lv| {
                let mut lv = *lv;
                let mut h = self.params.max_step;
                match walk_segment(&mut lv, g, &mut h, &self.params, &self.cfg, |_, _| {}) {
                    Walk::Reached => Ok(lv),
                    Walk::NearBranchPoint => Err(Error::NearBranchPoint { g: lv.g() }),
                    Walk::Diverged | Walk::Exhausted => Err(Error::CorrectorDiverged {
                        segment: self.segment,
                        g: lv.g(),
                    }),
                }
            })
            .collect()
    }
}

fn rhs(ordering: Ordering, u: &CMat, a: &CMat, dg: Complex64) -> CMat {
    let f = Complex64::new(0.0, -1.0) * dg;
    match ordering {
        Ordering::AntiPathOrdered => (u * a) * f,
        Ordering::PathOrdered => (a * u) * f,
    }
}

fn top_row_norm(a: &CMat) -> f64 {
    let last = a.nrows() - 1;
    a.row(last).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Transport along `path` with the default configuration.
pub fn transport(path: &ComplexPath, trunc: &TruncationSpec) -> Result<HolonomyMatrix> {
    transport_with(path, trunc, &TransportConfig::default())
}

pub fn transport_with(path: &ComplexPath, trunc: &TruncationSpec, cfg: &TransportConfig) -> Result<HolonomyMatrix> {
    let levels = initial_levels(path.start(), trunc)?;
    transport_from(levels, path, trunc, cfg)
}

/// Transport starting from explicitly supplied levels (e.g. the end of a
/// previous contour).
pub fn transport_from(
    levels: Vec<TrackedLevel>,
    path: &ComplexPath,
    trunc: &TruncationSpec,
    cfg: &TransportConfig,
) -> Result<HolonomyMatrix> {
    path.validate()?;
    if levels.len() != trunc.n_levels {
        return Err(Error::Truncation(format!(
            "{} levels supplied for a truncation of {}",
            levels.len(),
            trunc.n_levels
        )));
    }
    if !(cfg.rtol > 0.0 && cfg.atol > 0.0) {
        return Err(Error::Config("transport tolerances must be positive".into()));
    }
    let nl = trunc.n_levels;
    let mut u = CMat::identity(nl, nl);
    let mut anchor = levels;
    let mut diag = TransportDiagnostics::default();
    let mut tracker = FrameTracker {
        params: StepParams {
            max_step: path.max_step,
            min_step: path.min_step,
            shrink: path.shrink,
            grow: path.grow,
        },
        cfg: cfg.continuation.clone(),
        segment: 0,
    };

    let mut h = 0.05;
    let mut prev_len: Option<f64> = None;
    for (seg, (ga, gb)) in path.segments().enumerate() {
        tracker.segment = seg;
        let dg = gb - ga;
        let len = dg.norm();
        if let Some(pl) = prev_len {
            h = (h * pl / len).min(1.0);
        }
        prev_len = Some(len);
        let g_of = |t: f64| if t >= 1.0 { gb } else { ga + dg * t };

        let mut t = 0.0;
        let mut a_t = connection_from_levels(&anchor)?;
        let mut k1 = rhs(cfg.ordering, &u, &a_t, dg);
        while t < 1.0 {
            if diag.accepted_steps + diag.rejected_steps >= cfg.max_steps {
                return Err(Error::StepUnderflow { t, g: g_of(t) });
            }
            let hh = h.min(1.0 - t);
            let mut ks: Vec<CMat> = Vec::with_capacity(7);
            ks.push(k1.clone());
            let mut stage_ok = true;
            let mut last_frame = None;
            let mut last_a = None;
            let mut u_new = u.clone();
            for s in 1..7 {
                let mut y = u.clone();
                for (j, kj) in ks.iter().enumerate() {
                    let c = A[s][j];
                    if c != 0.0 {
                        y += kj * Complex64::new(c * hh, 0.0);
                    }
                }
                let ts = if s >= 5 { t + hh } else { t + C[s] * hh };
                let frame = match tracker.frame_at(&anchor, g_of(ts)) {
                    Ok(f) => f,
                    Err(e) => {
                        if hh * 0.5 < cfg.min_step {
                            return Err(e);
                        }
                        stage_ok = false;
                        break;
                    }
                };
                let a = connection_from_levels(&frame)?;
                ks.push(rhs(cfg.ordering, &y, &a, dg));
                if s == 6 {
                    u_new = y;
                    last_frame = Some(frame);
                    last_a = Some(a);
                }
            }
            if !stage_ok {
                diag.rejected_steps += 1;
                h = hh * 0.5;
                continue;
            }
            // Embedded error estimate.
            let mut err = 0.0f64;
            for i in 0..nl {
                for j in 0..nl {
                    let e: Complex64 = (0..7).map(|s| ks[s][(i, j)] * E[s]).sum::<Complex64>() * hh;
                    let sc = cfg.atol + cfg.rtol * u[(i, j)].norm().max(u_new[(i, j)].norm());
                    err = err.max(e.norm() / sc);
                }
            }
            if err <= 1.0 {
                diag.leakage += top_row_norm(&a_t) * hh * len;
                t = if hh >= 1.0 - t { 1.0 } else { t + hh };
                u = u_new;
                anchor = last_frame.expect("stage 6 ran");
                a_t = last_a.expect("stage 6 ran");
                k1 = ks.pop().expect("seven stages");
                diag.accepted_steps += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if hh == h || fac < 1.0 {
                    h = hh * fac;
                }
            } else {
                diag.rejected_steps += 1;
                h = hh * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < cfg.min_step {
                    return Err(Error::StepUnderflow { t, g: g_of(t) });
                }
            }
        }
        // Pin the anchors exactly on the waypoint.
        for lv in anchor.iter_mut() {
            lv.state.g = gb;
        }
    }

    let mut warnings = Vec::new();
    if diag.leakage > cfg.leakage_warn {
        warnings.push(format!(
            "truncation: top level n={} couples with integrated strength {:.3} (bound {})",
            trunc.top_level(),
            diag.leakage,
            cfg.leakage_warn
        ));
    }
    diag.final_levels = anchor;
    Ok(HolonomyMatrix {
        truncation: *trunc,
        matrix: u,
        contour: Some(path.clone()),
        ordering: cfg.ordering,
        diagnostics: Some(diag),
        warnings,
    })
}
