//! Integration of the planar Hamiltonian systems `u' = v`, `v' = -f(u)/d`.
//!
//! The integrator is Dormand–Prince 5(4) with Hairer's continuous extension.
//! Events (`v = 0`, `u = u₀`, `v = v₀`) are located on the dense output and
//! then polished by re-integrating the final partial step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quadrature::integrate_adaptive;

/// A point of the phase half-plane with its cached energy `v²/2 + F(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub u: f64,
    pub v: f64,
    pub energy: f64,
}

impl PhaseState {
    pub fn new(pot: &Potential, u: f64, v: f64) -> Result<Self> {
        let energy = 0.5 * v * v + pot.value(u)?;
        Ok(Self { u, v, energy })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    /// `u` reached zero at `x`.
    LeftHalfPlane { x: f64 },
    /// `|u|` or `|v|` exceeded the guard at `x`.
    BlowUpGuard { x: f64 },
}

/// Integrator settings. `guard = None` means `100·K⁺` of the potential's
/// landmarks (or `100·K` for a bare potential).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub guard: Option<f64>,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            guard: None,
            max_steps: 500_000,
        }
    }
}

impl FlowOptions {
    fn guard_for(&self, pot: &Potential) -> f64 {
        self.guard.unwrap_or_else(|| {
            100.0 * pot.landmarks().map(|l| l.k_plus).unwrap_or_else(|| pot.k())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone)]
struct Segment {
    s0: f64,
    h: f64,
    rc: [[f64; 2]; 5],
}

impl Segment {
    fn eval(&self, s: f64) -> [f64; 2] {
        let t = (s - self.s0) / self.h;
        let t1 = 1.0 - t;
        let mut y = [0.0; 2];
        for i in 0..2 {
            let r = &self.rc;
            y[i] = r[0][i] + t * (r[1][i] + t1 * (r[2][i] + t * (r[3][i] + t1 * r[4][i])));
        }
        y
    }

    fn eval_derivative(&self, s: f64) -> [f64; 2] {
        let t = (s - self.s0) / self.h;
        let mut y = [0.0; 2];
        for i in 0..2 {
            let [_, a, b, c, d] = [
                self.rc[0][i],
                self.rc[1][i],
                self.rc[2][i],
                self.rc[3][i],
                self.rc[4][i],
            ];
            // y = a t + b t(1−t) + c t²(1−t) + d t²(1−t)²
            let dy = a + b * (1.0 - 2.0 * t) + c * (2.0 * t - 3.0 * t * t)
                + d * (2.0 * t - 6.0 * t * t + 4.0 * t * t * t);
            y[i] = dy / self.h;
        }
        y
    }
}

/// Continuous extension of a flow, evaluable at any `x` it covers.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    x0: f64,
    sign: f64,
    segments: Vec<Segment>,
}

impl DenseOutput {
    fn locate(&self, x: f64) -> Option<(&Segment, f64)> {
        let s = self.sign * (x - self.x0);
        let last = self.segments.last()?;
        let tol = 1e-12 * (1.0 + last.s0.abs() + last.h.abs());
        if s < -tol || s > last.s0 + last.h + tol {
            return None;
        }
        let idx = self
            .segments
            .partition_point(|seg| seg.s0 + seg.h < s)
            .min(self.segments.len() - 1);
        Some((&self.segments[idx], s))
    }

    /// `(u, v)` at `x`, or `None` outside the integrated range.
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        let (seg, s) = self.locate(x)?;
        let y = seg.eval(s);
        Some((y[0], y[1]))
    }

    /// `(du/dx, dv/dx)` of the interpolant at `x`.
    pub fn eval_derivative(&self, x: f64) -> Option<(f64, f64)> {
        let (seg, s) = self.locate(x)?;
        let dy = seg.eval_derivative(s);
        Some((self.sign * dy[0], self.sign * dy[1]))
    }

    /// x-coordinates of the accepted step boundaries.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .segments
            .iter()
            .map(|seg| self.x0 + self.sign * seg.s0)
            .collect();
        if let Some(last) = self.segments.last() {
            out.push(self.x0 + self.sign * (last.s0 + last.h));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub start_x: f64,
    pub end_x: f64,
    pub start: PhaseState,
    pub final_state: PhaseState,
    pub trajectory: Vec<TrajectorySample>,
    pub energy_drift: f64,
    pub termination: Termination,
    pub dense: DenseOutput,
}

impl FlowResult {
    /// Signed flow duration `end_x − start_x`.
    pub fn duration(&self) -> f64 {
        (self.end_x - self.start_x).abs()
    }
}

/// Line crossed by an event-terminated flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    VZero,
    ULine(f64),
    VLine(f64),
}

impl Event {
    fn g(&self, y: [f64; 2]) -> f64 {
        match *self {
            Event::VZero => y[1],
            Event::ULine(u0) => y[0] - u0,
            Event::VLine(v0) => y[1] - v0,
        }
    }

    fn grad(&self) -> [f64; 2] {
        match self {
            Event::VZero | Event::VLine(_) => [0.0, 1.0],
            Event::ULine(_) => [1.0, 0.0],
        }
    }
}

/// Outcome of an event-terminated flow.
#[derive(Debug, Clone)]
pub struct EventHit {
    /// x-duration from the start to the event.
    pub elapsed: f64,
    pub state: PhaseState,
    pub flow: FlowResult,
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Step {
    y_new: [f64; 2],
    k7: [f64; 2],
    err: f64,
    rc: [[f64; 2]; 5],
}

struct Integrator<'a> {
    pot: &'a Potential,
    sign: f64,
    opts: FlowOptions,
}

impl Integrator<'_> {
    fn field(&self, y: [f64; 2]) -> [f64; 2] {
        [self.sign * y[1], -self.sign * self.pot.force(y[0])]
    }

    fn step(&self, y: [f64; 2], k1: [f64; 2], h: f64) -> Step {
        let comb = |ks: &[(f64, [f64; 2])]| {
            let mut out = y;
            for (a, k) in ks {
                out[0] += h * a * k[0];
                out[1] += h * a * k[1];
            }
            out
        };
        let k2 = self.field(comb(&[(A21, k1)]));
        let k3 = self.field(comb(&[(A31, k1), (A32, k2)]));
        let k4 = self.field(comb(&[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = self.field(comb(&[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
        let k6 = self.field(comb(&[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
        let y_new = comb(&[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        let k7 = self.field(y_new);
        let mut err_sq = 0.0;
        let mut rc = [[0.0; 2]; 5];
        for i in 0..2 {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc).powi(2);
            let dy = y_new[i] - y[i];
            let bspl = h * k1[i] - dy;
            rc[0][i] = y[i];
            rc[1][i] = dy;
            rc[2][i] = bspl;
            rc[3][i] = dy - h * k7[i] - bspl;
            rc[4][i] = h
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Step {
            y_new,
            k7,
            err: (err_sq / 2.0).sqrt(),
            rc,
        }
    }

    fn initial_step(&self, y: [f64; 2], k1: [f64; 2], span: f64) -> f64 {
        let sc = |i: usize, y: &[f64; 2]| self.opts.atol + self.opts.rtol * y[i].abs();
        let norm = |v: [f64; 2], y: &[f64; 2]| {
            (((v[0] / sc(0, y)).powi(2) + (v[1] / sc(1, y)).powi(2)) / 2.0).sqrt()
        };
        let d0 = norm(y, &y);
        let d1 = norm(k1, &y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = [y[0] + h0 * k1[0], y[1] + h0 * k1[1]];
        let k2 = self.field(y1);
        let d2 = norm([k2[0] - k1[0], k2[1] - k1[1]], &y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates in `s ∈ [0, s_end]`, stopping early on `event`, on `u < 0`,
    /// or when the guard trips.
    fn run(
        &self,
        x0: f64,
        start: PhaseState,
        s_end: f64,
        event: Option<Event>,
    ) -> Result<(FlowResult, Option<f64>)> {
        let guard = self.opts.guard_for(self.pot);
        let mut y = [start.u, start.v];
        let mut k1 = self.field(y);
        let mut s = 0.0;
        let mut h = self.initial_step(y, k1, s_end);
        let mut segments = Vec::new();
        let mut trajectory = vec![TrajectorySample {
            x: x0,
            u: y[0],
            v: y[1],
        }];
        let mut drift: f64 = 0.0;
        let mut termination = Termination::Completed;
        let mut event_s = None;
        let mut last_g = event.map(|e| e.g(y));
        let mut steps = 0usize;
        let mut rejected_in_row = 0usize;

        while s < s_end {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::Numeric {
                    what: format!("flow exceeded {} steps", self.opts.max_steps),
                    achieved: h,
                });
            }
            let remaining = s_end - s;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let st = self.step(y, k1, h);
            if !st.err.is_finite() || st.y_new.iter().any(|c| !c.is_finite()) {
                h *= 0.2;
                rejected_in_row += 1;
                if rejected_in_row > 60 {
                    return Err(Error::Numeric {
                        what: "flow step produced non-finite values".into(),
                        achieved: f64::INFINITY,
                    });
                }
                continue;
            }
            if st.err > 1.0 {
                h *= (0.9 * st.err.powf(-0.2)).max(0.2);
                rejected_in_row += 1;
                if h < 1e-14 * (1.0 + s) {
                    return Err(Error::Numeric {
                        what: "flow step size underflow".into(),
                        achieved: st.err,
                    });
                }
                continue;
            }
            rejected_in_row = 0;
            let seg = Segment { s0: s, h, rc: st.rc };
            let s_new = if last { s_end } else { s + h };

            // crossing checks on the accepted step
            let mut stop: Option<(f64, [f64; 2], Termination, bool)> = None;
            if st.y_new[0] < 0.0 {
                let sc = locate_on_segment(&seg, s, s_new, |y| y[0]);
                let (sc, yc) = self.polish(&seg, y, k1, s, sc, Event::ULine(0.0));
                stop = Some((sc, yc, Termination::LeftHalfPlane { x: x0 + self.sign * sc }, false));
            }
            if let (Some(ev), Some(g0)) = (event, last_g) {
                let g1 = ev.g(st.y_new);
                let crossed = (g0 != 0.0 && g0.signum() != g1.signum()) || g1 == 0.0;
                if crossed {
                    let se = if g1 == 0.0 {
                        s_new
                    } else {
                        locate_on_segment(&seg, s, s_new, |yy| ev.g(yy))
                    };
                    let earlier = stop.map(|(sc, ..)| se <= sc).unwrap_or(true);
                    if earlier {
                        let (se, ye) = self.polish(&seg, y, k1, s, se, ev);
                        stop = Some((se, ye, Termination::Completed, true));
                    }
                }
                last_g = Some(if g1 == 0.0 { g0 } else { g1 });
            }
            if stop.is_none()
                && (st.y_new[0].abs() > guard || st.y_new[1].abs() > guard)
            {
                stop = Some((s_new, st.y_new, Termination::BlowUpGuard { x: x0 + self.sign * s_new }, false));
            }

            if let Some((s_stop, y_stop, term, is_event)) = stop {
                let h_cut = s_stop - s;
                segments.push(Segment {
                    s0: s,
                    h: if h_cut > 0.0 { h_cut } else { h },
                    rc: if h_cut > 0.0 && h_cut != h {
                        self.step(y, k1, h_cut).rc
                    } else {
                        st.rc
                    },
                });
                let energy = 0.5 * y_stop[1] * y_stop[1] + self.pot.value_raw(y_stop[0].max(0.0));
                if y_stop[0] >= 0.0 {
                    drift = drift.max((energy - start.energy).abs());
                }
                trajectory.push(TrajectorySample {
                    x: x0 + self.sign * s_stop,
                    u: y_stop[0],
                    v: y_stop[1],
                });
                termination = term;
                if is_event {
                    event_s = Some(s_stop);
                }
                y = y_stop;
                s = s_stop;
                break;
            }

            segments.push(seg);
            y = st.y_new;
            k1 = st.k7;
            s = s_new;
            let energy = 0.5 * y[1] * y[1] + self.pot.value_raw(y[0]);
            drift = drift.max((energy - start.energy).abs());
            trajectory.push(TrajectorySample {
                x: x0 + self.sign * s,
                u: y[0],
                v: y[1],
            });
            let fac = if st.err == 0.0 { 10.0 } else { (0.9 * st.err.powf(-0.2)).clamp(0.2, 10.0) };
            h *= fac;
        }

        let final_energy = 0.5 * y[1] * y[1] + self.pot.value_raw(y[0].max(0.0));
        let result = FlowResult {
            start_x: x0,
            end_x: x0 + self.sign * s,
            start,
            final_state: PhaseState {
                u: y[0],
                v: y[1],
                energy: final_energy,
            },
            trajectory,
            energy_drift: drift,
            termination,
            dense: DenseOutput {
                x0,
                sign: self.sign,
                segments,
            },
        };
        Ok((result, event_s))
    }

    /// Re-integrates from the step start to the located crossing and applies
    /// Newton corrections `Δs = −g/ġ` using the exact vector field.
    fn polish(
        &self,
        seg: &Segment,
        y0: [f64; 2],
        k1: [f64; 2],
        s0: f64,
        guess: f64,
        ev: Event,
    ) -> (f64, [f64; 2]) {
        let mut s = guess;
        let grad = ev.grad();
        let mut y = if s > s0 { self.step(y0, k1, s - s0).y_new } else { y0 };
        for _ in 0..4 {
            let g = ev.g(y);
            let f = self.field(y);
            let dg = grad[0] * f[0] + grad[1] * f[1];
            if dg == 0.0 {
                break;
            }
            let ds = -g / dg;
            let next = s + ds;
            if !(next >= s0 && next <= s0 + 1.5 * seg.h) {
                break;
            }
            s = next;
            y = if s > s0 { self.step(y0, k1, s - s0).y_new } else { y0 };
            if ds.abs() <= 1e-14 * (1.0 + s.abs()) {
                break;
            }
        }
        (s, y)
    }
}

/// Illinois-accelerated regula falsi on the dense output of one step.
fn locate_on_segment<G: Fn([f64; 2]) -> f64>(seg: &Segment, a: f64, b: f64, g: G) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let mut glo = g(seg.eval(lo));
    let mut ghi = g(seg.eval(hi));
    if glo == 0.0 {
        return lo;
    }
    if ghi == 0.0 || glo.signum() == ghi.signum() {
        return hi;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        let mut m = (lo * ghi - hi * glo) / (ghi - glo);
        if !(m > lo && m < hi) {
            m = 0.5 * (lo + hi);
        }
        let gm = g(seg.eval(m));
        if gm == 0.0 {
            return m;
        }
        if gm.signum() == glo.signum() {
            lo = m;
            glo = gm;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = m;
            ghi = gm;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    if glo.abs() < ghi.abs() {
        lo
    } else {
        hi
    }
}

/// Integrates the Hamiltonian system of `pot` for an x-duration from `start`
/// located at `start_x`.
///
/// `Backward` integrates the time-reversed field, so x decreases along the
/// returned trajectory.
pub fn flow(
    pot: &Potential,
    start_x: f64,
    start: PhaseState,
    duration: f64,
    direction: Direction,
    opts: &FlowOptions,
) -> Result<FlowResult> {
    if !(start.u >= 0.0) {
        return Err(Error::Domain(format!("flow start needs u >= 0, got {}", start.u)));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "flow duration must be positive, got {duration}"
        )));
    }
    let integ = Integrator {
        pot,
        sign: direction.sign(),
        opts: *opts,
    };
    Ok(integ.run(start_x, start, duration, None)?.0)
}

/// Integrates until `event` is crossed, for at most `max_duration`.
pub fn flow_to_event(
    pot: &Potential,
    start: PhaseState,
    direction: Direction,
    event: Event,
    max_duration: f64,
    opts: &FlowOptions,
) -> Result<EventHit> {
    if !(start.u >= 0.0) {
        return Err(Error::Domain(format!("flow start needs u >= 0, got {}", start.u)));
    }
    let integ = Integrator {
        pot,
        sign: direction.sign(),
        opts: *opts,
    };
    let (flow, hit) = integ.run(0.0, start, max_duration, Some(event))?;
    match hit {
        Some(s) => Ok(EventHit {
            elapsed: s,
            state: flow.final_state,
            flow,
        }),
        None => Err(Error::Numeric {
            what: format!(
                "event {event:?} not reached within x-duration {max_duration} ({:?})",
                flow.termination
            ),
            achieved: f64::NAN,
        }),
    }
}

/// Non-negative branch `+√(2(E − F(u)))` of the level curve `H = E`.
pub fn level_curve_v(pot: &Potential, energy: f64, u: f64) -> Result<f64> {
    let gap = energy - pot.value(u)?;
    if gap < -1e-12 {
        return Err(Error::Domain(format!(
            "energy {energy} lies below the potential F({u}) by {:e}",
            -gap
        )));
    }
    Ok((2.0 * gap.max(0.0)).sqrt())
}

/// x-duration to traverse the level curve `H = E` from `u_from` to `u_to`,
/// `∫ du / √(2(E − F(u)))`.
///
/// Endpoints that are turning points (`E = F`) are handled with the
/// substitution `u = b ∓ t²`, which leaves a bounded integrand.
pub fn transit_time_quadrature(pot: &Potential, u_from: f64, u_to: f64, energy: f64) -> Result<f64> {
    if u_from == u_to {
        return Ok(0.0);
    }
    let (a, b) = if u_from < u_to { (u_from, u_to) } else { (u_to, u_from) };
    let gap = |u: f64| -> f64 { energy - pot.value_raw(u) };
    let scale = energy.abs().max(1.0);
    for i in 1..64 {
        let u = a + (b - a) * i as f64 / 64.0;
        if !(gap(u) > 0.0) {
            return Err(Error::Domain(format!(
                "orbit with energy {energy} does not traverse [{a}, {b}]: E - F({u}) = {:e}",
                gap(u)
            )));
        }
    }
    for end in [a, b] {
        if gap(end) < -1e-12 * scale {
            return Err(Error::Domain(format!(
                "endpoint {end} lies outside the level curve with energy {energy}"
            )));
        }
    }
    let singular_tol = 1e-8 * scale;
    let sing_a = gap(a) < singular_tol;
    let sing_b = gap(b) < singular_tol;
    let tol = 1e-12;
    let plain = |lo: f64, hi: f64| {
        integrate_adaptive(|u| 1.0 / (2.0 * gap(u)).sqrt(), lo, hi, tol, 4000)
    };
    // E − F(c + σ s) near a turning point c; a Taylor expansion for small s
    // avoids the cancellation in F(c) − F(c + σ s).
    let gap_near = |c: f64, sigma: f64, s: f64| -> f64 {
        let base = gap(c).max(0.0);
        if s < 1e-4 * c.abs().max(f64::MIN_POSITIVE) {
            if let Ok([_, f1, f2, f3]) = pot.jet(c) {
                let h = sigma * s;
                return base - h * (f1 + h * (f2 / 2.0 + h * f3 / 6.0));
            }
        }
        gap(c + sigma * s)
    };
    let substituted = |c: f64, sigma: f64, len: f64| {
        integrate_adaptive(
            |t| {
                let g = gap_near(c, sigma, t * t).max(0.0);
                if t == 0.0 || g == 0.0 {
                    0.0
                } else {
                    2.0 * t / (2.0 * g).sqrt()
                }
            },
            0.0,
            len.sqrt(),
            tol,
            4000,
        )
    };
    // turning point at `hi`: u = hi − t²; at `lo`: u = lo + t²
    let near_hi = |lo: f64, hi: f64| substituted(hi, -1.0, hi - lo);
    let near_lo = |lo: f64, hi: f64| substituted(lo, 1.0, hi - lo);
    match (sing_a, sing_b) {
        (false, false) => plain(a, b),
        (true, false) => near_lo(a, b),
        (false, true) => near_hi(a, b),
        (true, true) => {
            let m = 0.5 * (a + b);
            Ok(near_lo(a, m)? + near_hi(m, b)?)
        }
    }
}
