//! Time evolution `i dψ/dt = Hψ`.
//!
//! [`evolve_rk8`] is the Dormand–Prince 8(5,3) embedded pair with Hairer's error norm and
//! step controller. Output times are hit exactly by shortening the step that would cross
//! them; nothing is interpolated and the state is never renormalized.
//!
//! [`ExactPropagator`] diagonalizes small Hamiltonians densely and serves as the oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::eigensolver::{dense_spectrum_oracle, DenseSpectrum};
use crate::error::{Error, Result};
use crate::hilbert::{dot, StateVector, C64};
use crate::math;
use crate::model::PauliTermList;
use crate::operator::Operator;

/// Runs whose norm drifts further than this are flagged.
pub const NORM_DRIFT_FLAG: f64 = 1e-8;
/// Smallest step the integrator will take before giving up.
pub const MIN_STEP: f64 = 1e-14;

/// Constant subtracted from `H` during integration; the phase `e^{−ict}` is restored
/// before every observer call, so observables are unaffected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnergyShift {
    None,
    Fixed(f64),
    /// `⟨ψ0|H|ψ0⟩`, which keeps the occupied part of the spectrum slowly rotating.
    Mean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// `None` picks the first step from the local derivatives.
    pub h_init: Option<f64>,
    pub h_max: f64,
    /// Ascending output times, starting at 0.
    pub t_grid: Vec<f64>,
    pub shift: EnergyShift,
    pub max_steps: usize,
    /// Lund stabilization exponent of the step controller; 0 is the plain controller.
    pub stabilization: f64,
}

impl IntegratorConfig {
    pub fn new(t_grid: Vec<f64>) -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            t_grid,
            shift: EnergyShift::Mean,
            max_steps: 50_000_000,
            stabilization: 0.04,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_shift(mut self, shift: EnergyShift) -> Self {
        self.shift = shift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::param("tolerance", "rtol and atol must be positive"));
        }
        if !(0.0..=0.2).contains(&self.stabilization) {
            return Err(Error::param("stabilization", "must lie in [0, 0.2]"));
        }
        if !(self.h_max > 0.0) {
            return Err(Error::param("h_max", "must be positive"));
        }
        if let Some(h) = self.h_init {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::param("h_init", "must be positive and finite"));
            }
        }
        match self.t_grid.first() {
            Some(&t0) if t0 == 0.0 => {}
            _ => return Err(Error::param("t_grid", "must be non-empty and start at 0")),
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) || !self.t_grid.iter().all(|t| t.is_finite()) {
            return Err(Error::param("t_grid", "must be finite and strictly ascending"));
        }
        Ok(())
    }
}

/// `k · dt` for `k = 0..=round(t_max/dt)`.
pub fn uniform_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !(dt > 0.0) || !t_max.is_finite() {
        return Err(Error::param("t_grid", "t_max and dt must be positive"));
    }
    let steps = t_max / dt;
    let n = math::round(steps);
    if (steps - n).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::param("dt_out", "must divide t_max"));
    }
    Ok((0..=n as usize).map(|k| k as f64 * dt).collect())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `max |‖ψ(t)‖ − 1|` over the output grid.
    pub max_norm_drift: f64,
    pub flagged: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
    pub shift: f64,
}

/// `|1⟩ ⊗ |m⟩` with the impurity on site 0.
pub fn make_initial_state(bath: &StateVector) -> Result<StateVector> {
    let norm = bath.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let mut out = StateVector::zeros(bath.n_spins() + 1);
    for (b, &a) in bath.amplitudes().iter().enumerate() {
        out[(b << 1) | 1] = a;
    }
    Ok(out)
}

/// `⟨ψ|H|ψ⟩` (real part).
pub fn expectation<O: Operator + ?Sized>(op: &O, psi: &StateVector) -> f64 {
    let mut hv = vec![C64::new(0.0, 0.0); psi.dim()];
    op.apply_into(psi.amplitudes(), &mut hv);
    dot(psi.amplitudes(), &hv).re
}

mod tableau {
    pub const A21: f64 = 5.26001519587677318785587544488E-2;
    pub const A31: f64 = 1.97250569845378994544595329183E-2;
    pub const A32: f64 = 5.91751709536136983633785987549E-2;
    pub const A41: f64 = 2.95875854768068491816892993775E-2;
    pub const A43: f64 = 8.87627564304205475450678981324E-2;
    pub const A51: f64 = 2.41365134159266685502369798665E-1;
    pub const A53: f64 = -8.84549479328286085344864962717E-1;
    pub const A54: f64 = 9.24834003261792003115737966543E-1;
    pub const A61: f64 = 3.7037037037037037037037037037E-2;
    pub const A64: f64 = 1.70828608729473871279604482173E-1;
    pub const A65: f64 = 1.25467687566822425016691814123E-1;
    pub const A71: f64 = 3.7109375E-2;
    pub const A74: f64 = 1.70252211019544039314978060272E-1;
    pub const A75: f64 = 6.02165389804559606850219397283E-2;
    pub const A76: f64 = -1.7578125E-2;
    pub const A81: f64 = 3.70920001185047927108779319836E-2;
    pub const A84: f64 = 1.70383925712239993810214054705E-1;
    pub const A85: f64 = 1.07262030446373284651809199168E-1;
    pub const A86: f64 = -1.53194377486244017527936158236E-2;
    pub const A87: f64 = 8.27378916381402288758473766002E-3;
    pub const A91: f64 = 6.24110958716075717114429577812E-1;
    pub const A94: f64 = -3.36089262944694129406857109825E0;
    pub const A95: f64 = -8.68219346841726006818189891453E-1;
    pub const A96: f64 = 2.75920996994467083049415600797E1;
    pub const A97: f64 = 2.01540675504778934086186788979E1;
    pub const A98: f64 = -4.34898841810699588477366255144E1;
    pub const A101: f64 = 4.77662536438264365890433908527E-1;
    pub const A104: f64 = -2.48811461997166764192642586468E0;
    pub const A105: f64 = -5.90290826836842996371446475743E-1;
    pub const A106: f64 = 2.12300514481811942347288949897E1;
    pub const A107: f64 = 1.52792336328824235832596922938E1;
    pub const A108: f64 = -3.32882109689848629194453265587E1;
    pub const A109: f64 = -2.03312017085086261358222928593E-2;
    pub const A111: f64 = -9.3714243008598732571704021658E-1;
    pub const A114: f64 = 5.18637242884406370830023853209E0;
    pub const A115: f64 = 1.09143734899672957818500254654E0;
    pub const A116: f64 = -8.14978701074692612513997267357E0;
    pub const A117: f64 = -1.85200656599969598641566180701E1;
    pub const A118: f64 = 2.27394870993505042818970056734E1;
    pub const A119: f64 = 2.49360555267965238987089396762E0;
    pub const A1110: f64 = -3.0467644718982195003823669022E0;
    pub const A121: f64 = 2.27331014751653820792359768449E0;
    pub const A124: f64 = -1.05344954667372501984066689879E1;
    pub const A125: f64 = -2.00087205822486249909675718444E0;
    pub const A126: f64 = -1.79589318631187989172765950534E1;
    pub const A127: f64 = 2.79488845294199600508499808837E1;
    pub const A128: f64 = -2.85899827713502369474065508674E0;
    pub const A129: f64 = -8.87285693353062954433549289258E0;
    pub const A1210: f64 = 1.23605671757943030647266201528E1;
    pub const A1211: f64 = 6.43392746015763530355970484046E-1;

    pub const B1: f64 = 5.42937341165687622380535766363E-2;
    pub const B6: f64 = 4.45031289275240888144113950566E0;
    pub const B7: f64 = 1.89151789931450038304281599044E0;
    pub const B8: f64 = -5.8012039600105847814672114227E0;
    pub const B9: f64 = 3.1116436695781989440891606237E-1;
    pub const B10: f64 = -1.52160949662516078556178806805E-1;
    pub const B11: f64 = 2.01365400804030348374776537501E-1;
    pub const B12: f64 = 4.47106157277725905176885569043E-2;

    pub const BHH1: f64 = 0.244094488188976377952755905512E+00;
    pub const BHH2: f64 = 0.733846688281611857341361741547E+00;
    pub const BHH3: f64 = 0.220588235294117647058823529412E-01;

    pub const ER1: f64 = 0.1312004499419488073250102996E-01;
    pub const ER6: f64 = -0.1225156446376204440720569753E+01;
    pub const ER7: f64 = -0.4957589496572501915214079952E+00;
    pub const ER8: f64 = 0.1664377182454986536961530415E+01;
    pub const ER9: f64 = -0.3503288487499736816886487290E+00;
    pub const ER10: f64 = 0.3341791187130174790297318841E+00;
    pub const ER11: f64 = 0.8192320648511571246570742613E-01;
    pub const ER12: f64 = -0.2235530786388629525884427845E-01;
}

// controller constants
const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;

/// `out = −i (H − c) y`
fn deriv<O: Operator + ?Sized>(op: &O, c: f64, y: &[C64], out: &mut [C64]) {
    op.apply_into(y, out);
    for (o, yi) in out.iter_mut().zip(y) {
        let v = *o - yi * c;
        *o = C64::new(v.im, -v.re);
    }
}

/// `out = y + h Σ a_j k_j`
#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

fn stage(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    out.copy_from_slice(y);
    for &(a, k) in terms {
        let ha = h * a;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += ki * ha;
        }
    }
}

struct Workspace {
    k: [Vec<C64>; 10],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    view: StateVector,
}

impl Workspace {
    fn new(dim: usize, n_spins: usize) -> Self {
        let z = || vec![C64::new(0.0, 0.0); dim];
        Workspace {
            k: [z(), z(), z(), z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            y_new: z(),
            view: StateVector::zeros(n_spins),
        }
    }
}

/// Adaptive Dormand–Prince 8(5,3) integration of `dψ/dt = −iHψ`.
///
/// `observer(k, t, ψ)` runs once per grid point, `t == cfg.t_grid[k]` exactly.
pub fn evolve_rk8<O, F>(op: &O, psi0: &StateVector, cfg: &IntegratorConfig, mut observer: F) -> Result<TrajectoryRecord>
where
    O: Operator + ?Sized,
    F: FnMut(usize, f64, &StateVector),
{
    use tableau::*;

    cfg.validate()?;
    if psi0.n_spins() != op.n_spins() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: psi0.dim() });
    }
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: norm0 });
    }
    let shift = match cfg.shift {
        EnergyShift::None => 0.0,
        EnergyShift::Fixed(c) => c,
        EnergyShift::Mean => expectation(op, psi0),
    };
    let n = psi0.dim();
    let n_real = (2 * n) as f64;
    let mut ws = Workspace::new(n, psi0.n_spins());
    let mut y: Vec<C64> = psi0.amplitudes().to_vec();
    let mut rec = TrajectoryRecord { shift, ..Default::default() };

    let emit = |k: usize, t: f64, y: &[C64], ws: &mut Workspace, rec: &mut TrajectoryRecord, observer: &mut F| {
        let norm = math::sqrt(y.iter().map(|a| a.norm_sqr()).sum());
        rec.max_norm_drift = rec.max_norm_drift.max((norm - 1.0).abs());
        rec.times.push(t);
        let phase = if shift == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            let (s, c) = math::sin_cos(shift * t);
            C64::new(c, -s)
        };
        for (v, a) in ws.view.amplitudes_mut().iter_mut().zip(y) {
            *v = a * phase;
        }
        observer(k, t, &ws.view);
    };

    emit(0, 0.0, &y, &mut ws, &mut rec, &mut observer);
    if cfg.t_grid.len() == 1 {
        return Ok(rec);
    }

    // k1 = f(y0)
    deriv(op, shift, &y, &mut ws.k[0]);
    rec.evaluations += 1;

    let t_end = *cfg.t_grid.last().unwrap();
    let mut h = match cfg.h_init {
        Some(h) => h,
        None => {
            rec.evaluations += 1;
            initial_step(op, shift, &y, &mut ws, cfg, t_end)
        }
    }
    .min(cfg.h_max);

    let mut t = 0.0;
    let mut next = 1;
    let mut last_rejected = false;
    let mut facold: f64 = 1e-4;
    let beta = cfg.stabilization;
    let expo1 = 1.0 / 8.0 - 0.2 * beta;
    let mut steps = 0usize;

    while next < cfg.t_grid.len() {
        if steps >= cfg.max_steps {
            return Err(Error::TooManySteps(cfg.max_steps));
        }
        if h < MIN_STEP {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        steps += 1;

        // split what is left before the next output time into equal steps no longer than h
        let target = cfg.t_grid[next];
        let remaining = target - t;
        let pieces = math::ceil(remaining / h * (1.0 - 1e-12)).max(1.0);
        let lands_now = pieces == 1.0;
        let h_step = if lands_now { remaining } else { remaining / pieces };

        let err = {
            let [k1, k2, k3, k4, k5, k6, k7, k8, k9, k10] = &mut ws.k;
            let hs = h_step;
            let tmp = &mut ws.tmp;
            stage(tmp, &y, hs, &[(A21, k1.as_slice())]);
            deriv(op, shift, tmp, k2);
            stage(tmp, &y, hs, &[(A31, k1.as_slice()), (A32, k2.as_slice())]);
            deriv(op, shift, tmp, k3);
            stage(tmp, &y, hs, &[(A41, k1.as_slice()), (A43, k3.as_slice())]);
            deriv(op, shift, tmp, k4);
            stage(tmp, &y, hs, &[(A51, k1.as_slice()), (A53, k3.as_slice()), (A54, k4.as_slice())]);
            deriv(op, shift, tmp, k5);
            stage(tmp, &y, hs, &[(A61, k1.as_slice()), (A64, k4.as_slice()), (A65, k5.as_slice())]);
            deriv(op, shift, tmp, k6);
            stage(tmp, &y, hs, &[(A71, k1.as_slice()), (A74, k4.as_slice()), (A75, k5.as_slice()), (A76, k6.as_slice())]);
            deriv(op, shift, tmp, k7);
            stage(tmp, &y, hs, &[(A81, k1.as_slice()), (A84, k4.as_slice()), (A85, k5.as_slice()), (A86, k6.as_slice()), (A87, k7.as_slice())]);
            deriv(op, shift, tmp, k8);
            stage(tmp, &y, hs, &[(A91, k1.as_slice()), (A94, k4.as_slice()), (A95, k5.as_slice()), (A96, k6.as_slice()), (A97, k7.as_slice()), (A98, k8.as_slice())]);
            deriv(op, shift, tmp, k9);
            stage(tmp, &y, hs, &[(A101, k1.as_slice()), (A104, k4.as_slice()), (A105, k5.as_slice()), (A106, k6.as_slice()), (A107, k7.as_slice()), (A108, k8.as_slice()), (A109, k9.as_slice())]);
            deriv(op, shift, tmp, k10);
            // k2 and k3 are free from here on and receive stages 11 and 12
            stage(
                tmp,
                &y,
                hs,
                &[(A111, k1.as_slice()), (A114, k4.as_slice()), (A115, k5.as_slice()), (A116, k6.as_slice()), (A117, k7.as_slice()), (A118, k8.as_slice()), (A119, k9.as_slice()), (A1110, k10.as_slice())],
            );
            let k11 = &mut ws.y_new;
            deriv(op, shift, tmp, k11);
            stage(
                tmp,
                &y,
                hs,
                &[
                    (A121, k1.as_slice()),
                    (A124, k4.as_slice()),
                    (A125, k5.as_slice()),
                    (A126, k6.as_slice()),
                    (A127, k7.as_slice()),
                    (A128, k8.as_slice()),
                    (A129, k9.as_slice()),
                    (A1210, k10.as_slice()),
                    (A1211, k11.as_slice()),
                ],
            );
            // stage 12 goes into k4, after k4's last use above
            deriv(op, shift, tmp, k4);
            rec.evaluations += 11;
            let k12: &[C64] = k4;
            let k11: &[C64] = k11;

            let mut err = 0.0;
            let mut err2 = 0.0;
            for i in 0..n {
                // 8th-order increment, 5th- and 3rd-order error estimators
                let incr = k1[i] * B1
                    + k6[i] * B6
                    + k7[i] * B7
                    + k8[i] * B8
                    + k9[i] * B9
                    + k10[i] * B10
                    + k11[i] * B11
                    + k12[i] * B12;
                let yn = y[i] + incr * hs;
                let e5 = k1[i] * ER1
                    + k6[i] * ER6
                    + k7[i] * ER7
                    + k8[i] * ER8
                    + k9[i] * ER9
                    + k10[i] * ER10
                    + k11[i] * ER11
                    + k12[i] * ER12;
                let e3 = incr - k1[i] * BHH1 - k9[i] * BHH2 - k12[i] * BHH3;
                let sk_re = cfg.atol + cfg.rtol * y[i].re.abs().max(yn.re.abs());
                let sk_im = cfg.atol + cfg.rtol * y[i].im.abs().max(yn.im.abs());
                err += sq(e5.re / sk_re) + sq(e5.im / sk_im);
                err2 += sq(e3.re / sk_re) + sq(e3.im / sk_im);
                tmp[i] = yn;
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            hs * err * math::sqrt(1.0 / (deno * n_real))
        };

        // a shortened step is judged as if it had the proposed length (err ∝ h⁸)
        let (h_base, err_ctrl) = if h_step < h { (h, err * math::powi(h / h_step, 8)) } else { (h_step, err) };
        let fac11 = math::powf(err_ctrl, expo1);
        let fac = (fac11 / math::powf(facold, beta) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h_base / fac;

        if err <= 1.0 {
            facold = err_ctrl.max(1e-4);
            rec.accepted_steps += 1;
            core::mem::swap(&mut y, &mut ws.tmp);
            // first-same-as-last: k1 for the next step
            deriv(op, shift, &y, &mut ws.k[0]);
            rec.evaluations += 1;
            if lands_now {
                t = target;
                emit(next, t, &y, &mut ws, &mut rec, &mut observer);
                next += 1;
            } else {
                t += h_step;
            }
            if last_rejected {
                h_new = h_new.min(h_step);
            }
            last_rejected = false;
        } else {
            let fac11 = math::powf(err, expo1);
            h_new = h_step / (1.0 / FAC_MIN).min(fac11 / SAFE);
            rec.rejected_steps += 1;
            last_rejected = true;
        }
        h = h_new.min(cfg.h_max);
    }
    rec.flagged = rec.max_norm_drift > NORM_DRIFT_FLAG;
    Ok(rec)
}

// Hairer's starting-step heuristic: h⁸ · max(‖f0‖, ‖f'‖) ≈ 0.01 in the weighted norm.
fn initial_step<O: Operator + ?Sized>(op: &O, shift: f64, y: &[C64], ws: &mut Workspace, cfg: &IntegratorConfig, t_end: f64) -> f64 {
    let f0 = &ws.k[0];
    let sk = |a: f64| cfg.atol + cfg.rtol * a.abs();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        dnf += sq(fi.re / sk(yi.re)) + sq(fi.im / sk(yi.im));
        dny += sq(yi.re / sk(yi.re)) + sq(yi.im / sk(yi.im));
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * math::sqrt(dny / dnf) };
    h = h.min(cfg.h_max).min(t_end);
    for (o, (yi, fi)) in ws.tmp.iter_mut().zip(y.iter().zip(f0)) {
        *o = yi + fi * h;
    }
    let [k1, k2, ..] = &mut ws.k;
    deriv(op, shift, &ws.tmp, k2);
    let mut der2 = 0.0;
    for ((a, b), yi) in k2.iter().zip(k1.iter()).zip(y) {
        let d = a - b;
        der2 += sq(d.re / sk(yi.re)) + sq(d.im / sk(yi.im));
    }
    let der2 = math::sqrt(der2) / h;
    let der12 = der2.max(math::sqrt(dnf));
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { math::powf(0.01 / der12, 1.0 / 8.0) };
    (100.0 * h).min(h1).min(cfg.h_max)
}

/// Dense eigendecomposition propagator, `ψ(t) = V e^{−iEt} V† ψ0`.
#[derive(Clone, Debug)]
pub struct ExactPropagator {
    spectrum: DenseSpectrum,
}

impl ExactPropagator {
    /// Fails with [`Error::DenseCapExceeded`] above the dense cap.
    pub fn new(h: &PauliTermList) -> Result<Self> {
        Ok(ExactPropagator { spectrum: dense_spectrum_oracle(h)? })
    }

    pub fn spectrum(&self) -> &DenseSpectrum {
        &self.spectrum
    }

    pub fn evolve(&self, psi0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
        let vecs = &self.spectrum.eigenvectors;
        let dim = vecs.len();
        if psi0.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi0.dim() });
        }
        let coeffs: Vec<C64> = vecs.iter().map(|v| dot(v.amplitudes(), psi0.amplitudes())).collect();
        times
            .iter()
            .map(|&t| {
                let mut out = vec![C64::new(0.0, 0.0); dim];
                for ((v, &c), &e) in vecs.iter().zip(&coeffs).zip(&self.spectrum.energies) {
                    let (s, co) = math::sin_cos(e * t);
                    let ct = c * C64::new(co, -s);
                    for (o, a) in out.iter_mut().zip(v.amplitudes()) {
                        *o += a * ct;
                    }
                }
                StateVector::from_amplitudes(out)
            })
            .collect()
    }
}

pub fn evolve_exact_oracle(h: &PauliTermList, psi0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    ExactPropagator::new(h)?.evolve(psi0, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{lowest_eigenpairs, LanczosConfig};
    use crate::hilbert::{apply_pauli, inner_product, PauliAxis};
    use crate::model::{build_bath_hamiltonian, build_full_hamiltonian, FrequencyMode, ModelParams, SuperSpinForm};
    use crate::operator::CompiledOperator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_level(a: f64, b: f64) -> PauliTermList {
        let mut h = PauliTermList::new(1);
        h.push(a, &[(0, PauliAxis::Z)]).unwrap();
        h.push(b, &[(0, PauliAxis::X)]).unwrap();
        h
    }

    fn rabi_z(a: f64, b: f64, t: f64) -> f64 {
        let w = (a * a + b * b).sqrt();
        1.0 - 2.0 * b * b / (w * w) * (w * t).sin().powi(2)
    }

    fn z_expect(psi: &StateVector) -> f64 {
        inner_product(psi, &apply_pauli(PauliAxis::Z, 0, psi)).re
    }

    fn params(n_s: usize, lambda: f64) -> ModelParams {
        ModelParams::with_bath(n_s, &FrequencyMode::Quantile, lambda).unwrap()
    }

    struct Negated<O>(O);

    impl<O: Operator> Operator for Negated<O> {
        fn n_spins(&self) -> usize {
            self.0.n_spins()
        }

        fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
            self.0.apply_into(psi, out);
            out.iter_mut().for_each(|a| *a = -*a);
        }
    }

    #[test]
    fn initial_state_layout() {
        let mut bath = StateVector::zeros(1);
        bath[0] = C64::new(1.0, 0.0);
        let full = make_initial_state(&bath).unwrap();
        assert_eq!(full[0b01], C64::new(1.0, 0.0));
        assert_eq!(full.norm_sqr(), 1.0);

        let bath = StateVector::random(3, &mut ChaCha8Rng::seed_from_u64(5));
        let full = make_initial_state(&bath).unwrap();
        assert!((z_expect(&full) - 1.0).abs() < 1e-14);
        assert!(full.amplitudes().iter().step_by(2).all(|a| *a == C64::new(0.0, 0.0)));
        assert!((full.norm() - 1.0).abs() < 1e-14);

        let mut unnormalized = StateVector::zeros(2);
        unnormalized[1] = C64::new(1.1, 0.0);
        assert!(matches!(make_initial_state(&unnormalized), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn grid_construction() {
        let g = uniform_grid(100.0, 0.1).unwrap();
        assert_eq!(g.len(), 1001);
        assert_eq!(g[0], 0.0);
        assert!((g[1000] - 100.0).abs() < 1e-12);
        assert!(uniform_grid(1.0, 0.3).is_err());
        assert!(uniform_grid(-1.0, 0.1).is_err());
    }

    #[test]
    fn config_validation() {
        let op = two_level(0.4, 0.1).compile();
        let psi = StateVector::basis(1, 1);
        let bad = [
            IntegratorConfig::new(vec![0.0, 1.0]).with_tolerances(0.0, 1e-12),
            IntegratorConfig::new(vec![0.5, 1.0]),
            IntegratorConfig::new(vec![0.0, 1.0, 1.0]),
            IntegratorConfig::new(vec![]),
        ];
        for cfg in &bad {
            assert!(matches!(evolve_rk8(&op, &psi, cfg, |_, _, _| {}), Err(Error::InvalidParameter { .. })));
        }
        let mut long = StateVector::zeros(1);
        long[0] = C64::new(2.0, 0.0);
        assert!(matches!(
            evolve_rk8(&op, &long, &IntegratorConfig::new(vec![0.0, 1.0]), |_, _, _| {}),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn null_generator_is_identity() {
        let op = PauliTermList::new(3).compile();
        let psi = StateVector::random(3, &mut ChaCha8Rng::seed_from_u64(1));
        let cfg = IntegratorConfig::new(uniform_grid(5.0, 0.5).unwrap());
        let mut seen = 0;
        let rec = evolve_rk8(&op, &psi, &cfg, |k, t, s| {
            assert_eq!(t, cfg.t_grid[k]);
            assert!(s.max_abs_diff(&psi) < 1e-15);
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 11);
        assert_eq!(rec.times, cfg.t_grid);
        assert!(!rec.flagged);
    }

    #[test]
    fn rabi_oscillation_matches_closed_form() {
        let (a, b) = (0.4144, 0.01);
        let op = two_level(a, b).compile();
        let psi0 = StateVector::basis(1, 1);
        for shift in [EnergyShift::None, EnergyShift::Mean, EnergyShift::Fixed(0.3)] {
            let cfg = IntegratorConfig::new(uniform_grid(100.0, 0.1).unwrap()).with_shift(shift);
            let mut worst = 0.0f64;
            let rec = evolve_rk8(&op, &psi0, &cfg, |_, t, s| {
                worst = worst.max((z_expect(s) - rabi_z(a, b, t)).abs());
            })
            .unwrap();
            assert!(worst < 1e-8, "{shift:?}: {worst}");
            assert!(rec.max_norm_drift < 1e-8);
        }
    }

    #[test]
    fn shift_only_changes_global_phase_handling() {
        let h = build_full_hamiltonian(&params(3, 2.0)).unwrap();
        let op = h.compile();
        let psi0 = StateVector::random(4, &mut ChaCha8Rng::seed_from_u64(8));
        let grid = uniform_grid(5.0, 1.0).unwrap();
        let mut plain = Vec::new();
        let mut shifted = Vec::new();
        evolve_rk8(&op, &psi0, &IntegratorConfig::new(grid.clone()).with_shift(EnergyShift::None), |_, _, s| {
            plain.push(s.clone())
        })
        .unwrap();
        evolve_rk8(&op, &psi0, &IntegratorConfig::new(grid).with_shift(EnergyShift::Fixed(-3.0)), |_, _, s| {
            shifted.push(s.clone())
        })
        .unwrap();
        for (p, s) in plain.iter().zip(&shifted) {
            assert!(p.max_abs_diff(s) < 1e-8);
        }
    }

    #[test]
    fn exact_oracle_basics() {
        let (a, b) = (0.4144, 0.01);
        let h = two_level(a, b);
        let psi0 = StateVector::basis(1, 1);
        let times: Vec<f64> = (0..=100).map(|k| k as f64).collect();
        let states = evolve_exact_oracle(&h, &psi0, &times).unwrap();
        assert!(states[0].max_abs_diff(&psi0) < 1e-15);
        for (s, &t) in states.iter().zip(&times) {
            assert!((s.norm() - 1.0).abs() < 1e-13);
            assert!((z_expect(s) - rabi_z(a, b, t)).abs() < 1e-12);
        }
        let big = build_full_hamiltonian(&params(12, 1.0)).unwrap();
        assert!(matches!(ExactPropagator::new(&big), Err(Error::DenseCapExceeded { .. })));
    }

    #[test]
    fn small_bath_matches_exact_propagator() {
        let p = params(6, 2.0);
        let h = build_full_hamiltonian(&p).unwrap();
        let bath = lowest_eigenpairs(&build_bath_hamiltonian(&p).unwrap(), &LanczosConfig::with_n_eig(3)).unwrap();
        let exact = ExactPropagator::new(&h).unwrap();
        let op = SuperSpinForm::new(&p).unwrap();
        for m in 0..3 {
            let psi0 = make_initial_state(&bath.eigenvectors[m]).unwrap();
            let cfg = IntegratorConfig::new(vec![0.0, 50.0, 100.0]);
            let mut last = None;
            let rec = evolve_rk8(&op, &psi0, &cfg, |_, _, s| last = Some(s.clone())).unwrap();
            let want = exact.evolve(&psi0, &[100.0]).unwrap();
            let err = last.unwrap().max_abs_diff(&want[0]);
            assert!(err <= 1e-6, "m={m}: {err}");
            assert!(rec.max_norm_drift <= 1e-8);
        }
    }

    #[test]
    fn error_shrinks_fast_with_tolerance() {
        let p = params(4, 1.0);
        let h = build_full_hamiltonian(&p).unwrap();
        let op = h.compile();
        let psi0 = StateVector::random(5, &mut ChaCha8Rng::seed_from_u64(2));
        let want = evolve_exact_oracle(&h, &psi0, &[20.0]).unwrap().remove(0);
        let err_at = |rtol: f64| {
            let cfg = IntegratorConfig::new(vec![0.0, 20.0]).with_tolerances(rtol, rtol * 1e-2);
            let mut last = None;
            evolve_rk8(&op, &psi0, &cfg, |_, _, s| last = Some(s.clone())).unwrap();
            last.unwrap().max_abs_diff(&want)
        };
        let coarse = err_at(1e-5);
        let fine = err_at(1e-7);
        // two decades of tolerance
        assert!(coarse / fine >= 50.0, "{coarse} -> {fine}");
    }

    #[test]
    fn time_reversal_recovers_initial_state() {
        let p = params(4, 2.0);
        let op = CompiledOperator::new(&build_full_hamiltonian(&p).unwrap());
        let psi0 = StateVector::random(5, &mut ChaCha8Rng::seed_from_u64(6));
        let cfg = IntegratorConfig::new(vec![0.0, 50.0]);
        let mut mid = None;
        evolve_rk8(&op, &psi0, &cfg, |_, _, s| mid = Some(s.clone())).unwrap();
        let mid = mid.unwrap();
        let mut back = None;
        evolve_rk8(&Negated(&op), &mid, &cfg, |_, _, s| back = Some(s.clone())).unwrap();
        assert!(back.unwrap().max_abs_diff(&psi0) <= 1e-6);
    }

    #[test]
    fn energy_is_conserved() {
        let p = params(5, 4.0);
        let op = SuperSpinForm::new(&p).unwrap();
        let psi0 = StateVector::random(6, &mut ChaCha8Rng::seed_from_u64(3));
        let e0 = expectation(&op, &psi0);
        let (lo, hi) = crate::eigensolver::estimate_spectral_interval(&op, 30, 1).unwrap();
        let scale = lo.abs().max(hi.abs());
        let mut worst = 0.0f64;
        let cfg = IntegratorConfig::new(uniform_grid(20.0, 1.0).unwrap());
        evolve_rk8(&op, &psi0, &cfg, |_, _, s| worst = worst.max((expectation(&op, s) - e0).abs())).unwrap();
        assert!(worst <= 1e-7 * scale, "{worst}");
    }

    #[test]
    fn deterministic_records() {
        let p = params(3, 8.0);
        let op = SuperSpinForm::new(&p).unwrap();
        let psi0 = StateVector::random(4, &mut ChaCha8Rng::seed_from_u64(4));
        let cfg = IntegratorConfig::new(uniform_grid(3.0, 0.1).unwrap());
        let run = || {
            let mut out = Vec::new();
            let rec = evolve_rk8(&op, &psi0, &cfg, |_, _, s| out.extend_from_slice(s.amplitudes())).unwrap();
            (rec, out)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn step_underflow_and_budget() {
        let op = two_level(1e3, 1e3).compile();
        let psi0 = StateVector::basis(1, 1);
        let mut cfg = IntegratorConfig::new(vec![0.0, 10.0]).with_shift(EnergyShift::None);
        cfg.max_steps = 10;
        assert_eq!(evolve_rk8(&op, &psi0, &cfg, |_, _, _| {}).unwrap_err(), Error::TooManySteps(10));
        let cfg = IntegratorConfig { h_init: Some(1e-15), ..IntegratorConfig::new(vec![0.0, 1.0]) };
        assert!(matches!(evolve_rk8(&op, &psi0, &cfg, |_, _, _| {}), Err(Error::StepSizeUnderflow { .. })));
    }
}
