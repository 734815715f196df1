//! The five-pulse echo-interference experiment.
//!
//! A write pulse, two data pulses `dt` apart and two read pulses `dt` apart
//! produce three echo bins: (D1|R1) on the left, the overlapping
//! (D2|R1) + (D1|R2) in the centre and (D2|R2) on the right. Scanning one
//! pulse phase and integrating each bin gives the interference fringes.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::{self, Write};

use rayon::prelude::*;

use crate::bloch::{simulate_sequence, Pulse, PulseSequence, Signal};
use crate::ensemble::EnsembleSpec;
use crate::error::{EchoError, Result};
use crate::qubit::{expected_visibility, make_timebin};

/// Largest total data area for which the echo is linear in the data field.
pub const LINEAR_DATA_AREA: f64 = 0.1;

pub const MIN_SCAN_STEPS: usize = 8;

/// α3 values of the four prepared states, in preparation order.
pub const FOUR_STATE_PREPARATIONS: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

pub const PULSE_LABELS: [&str; 5] = ["write", "D1", "D2", "R1", "R2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScannedPhase {
    A2,
    A3,
    A4,
    A5,
}

impl ScannedPhase {
    pub fn name(self) -> &'static str {
        match self {
            ScannedPhase::A2 => "a2",
            ScannedPhase::A3 => "a3",
            ScannedPhase::A4 => "a4",
            ScannedPhase::A5 => "a5",
        }
    }

    /// Index into [`Fig1Params::phases`].
    pub fn index(self) -> usize {
        match self {
            ScannedPhase::A2 => 1,
            ScannedPhase::A3 => 2,
            ScannedPhase::A4 => 3,
            ScannedPhase::A5 => 4,
        }
    }
}

impl std::str::FromStr for ScannedPhase {
    type Err = EchoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a2" => Ok(ScannedPhase::A2),
            "a3" => Ok(ScannedPhase::A3),
            "a4" => Ok(ScannedPhase::A4),
            "a5" => Ok(ScannedPhase::A5),
            other => Err(EchoError::InvalidParameter(format!(
                "scanned phase must be one of a2, a3, a4, a5; got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EchoBin {
    Left,
    Central,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseAreas {
    pub write: f64,
    pub data1: f64,
    pub data2: f64,
    pub read: f64,
}

/// Timing, areas and phases of the five-pulse sequence. Times are pulse start
/// times in ns; `phases` holds α1…α5 for write, D1, D2, R1, R2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig1Params {
    pub t_w: f64,
    pub t_d1: f64,
    pub dt: f64,
    pub t_r1: f64,
    /// Spacing of the read pulses; `None` means equal to `dt`.
    pub read_dt: Option<f64>,
    pub pulse_duration: f64,
    pub areas: PulseAreas,
    pub phases: [f64; 5],
    /// Sampling step of the simulated field, ns.
    pub dt_samp: f64,
}

impl Default for Fig1Params {
    /// 15 ns pulses, first data pulse at 600 ns, 60 ns bin spacing, read
    /// pulses 2 µs after the first data pulse. Read areas are kept at 0.4 rad
    /// so that the first read leaves most of the population grating for the
    /// second one.
    fn default() -> Self {
        Fig1Params {
            t_w: 0.0,
            t_d1: 600.0,
            dt: 60.0,
            t_r1: 2600.0,
            read_dt: None,
            pulse_duration: 15.0,
            areas: PulseAreas { write: FRAC_PI_2, data1: 0.05, data2: 0.05, read: 0.4 },
            phases: [0.0; 5],
            dt_samp: 1.0,
        }
    }
}

impl Fig1Params {
    /// Data areas large enough that four-pulse echoes show up in the side
    /// bins.
    pub fn four_pulse_operating_point() -> Self {
        let mut p = Fig1Params::default();
        p.areas.data1 = 0.5;
        p.areas.data2 = 0.5;
        p
    }

    pub fn read_spacing(&self) -> f64 {
        self.read_dt.unwrap_or(self.dt)
    }

    /// Moves the data pulses to `t_d1` and keeps the data-to-read delay.
    pub fn with_storage_time(mut self, t_d1: f64) -> Self {
        let delay = self.t_r1 - self.t_d1;
        self.t_d1 = t_d1;
        self.t_r1 = t_d1 + delay;
        self
    }

    pub fn with_phase(mut self, which: ScannedPhase, value: f64) -> Self {
        self.phases[which.index()] = value;
        self
    }

    /// Intensity ratio of the two data pulses, `(data1 / data2)²`.
    pub fn ratio(&self) -> f64 {
        (self.areas.data1 / self.areas.data2).powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EchoError::InvalidSequence(msg));
        let pd = self.pulse_duration;
        if !(pd > 0.0) {
            return bad(format!("pulse duration must be positive, got {pd}"));
        }
        if (self.read_spacing() - self.dt).abs() > 1e-9 {
            return bad(format!(
                "read spacing {} ns must equal data spacing {} ns for the echoes to coincide",
                self.read_spacing(),
                self.dt
            ));
        }
        let starts = [self.t_w, self.t_d1, self.t_d1 + self.dt, self.t_r1, self.t_r1 + self.dt];
        for (k, pair) in starts.windows(2).enumerate() {
            if !(pair[1] - pair[0] > pd) {
                return bad(format!(
                    "`{}` at {} ns must start more than one pulse duration after `{}` at {} ns",
                    PULSE_LABELS[k + 1],
                    pair[1],
                    PULSE_LABELS[k],
                    pair[0]
                ));
            }
        }
        if !(self.dt_samp > 0.0) {
            return bad(format!("sampling step must be positive, got {}", self.dt_samp));
        }
        Ok(())
    }
}

pub fn build_fig1_sequence(p: &Fig1Params) -> Result<PulseSequence> {
    p.validate()?;
    let a = &p.areas;
    let starts = [p.t_w, p.t_d1, p.t_d1 + p.dt, p.t_r1, p.t_r1 + p.read_spacing()];
    let areas = [a.write, a.data1, a.data2, a.read, a.read];
    let pulses = (0..5)
        .map(|k| Pulse::with_area(PULSE_LABELS[k], starts[k], p.pulse_duration, areas[k], p.phases[k]))
        .collect::<Result<Vec<_>>>()?;
    PulseSequence::new(pulses)
}

/// Oracle-predicted centres of the left, central and right echo bins: the
/// stimulated-echo law `t_read + t_data − t_write` on pulse mid-points.
pub fn bin_times(p: &Fig1Params) -> Result<[f64; 3]> {
    let seq = build_fig1_sequence(p)?;
    let t: Vec<f64> = seq.pulses().iter().map(Pulse::center).collect();
    Ok([
        crate::pathways::stimulated_echo_time(t[0], t[1], t[3]),
        crate::pathways::stimulated_echo_time(t[0], t[2], t[3]),
        crate::pathways::stimulated_echo_time(t[0], t[2], t[4]),
    ])
}

/// How the background under an echo is estimated before subtraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    None,
    /// Two windows of `width` starting `offset` either side of the centre.
    Flanking { offset: f64, width: f64 },
    /// Explicit `(from, to)` windows.
    Windows { left: (f64, f64), right: (f64, f64) },
}

impl Background {
    /// Windows of two pulse durations starting three pulse durations from
    /// the echo centre.
    pub fn flanking(pulse_duration: f64) -> Self {
        Background::Flanking { offset: 3.0 * pulse_duration, width: 2.0 * pulse_duration }
    }

    fn windows(&self, center: f64) -> Option<[(f64, f64); 2]> {
        match *self {
            Background::None => None,
            Background::Flanking { offset, width } => {
                Some([(center - offset - width, center - offset), (center + offset, center + offset + width)])
            }
            Background::Windows { left, right } => Some([left, right]),
        }
    }
}

fn check_window(sig: &Signal, from: f64, to: f64) -> Result<std::ops::Range<usize>> {
    let tol = 1e-9 * sig.dt_samp;
    if sig.is_empty() || from < sig.t0 - tol || to > sig.t_end() + tol || from > to {
        return Err(EchoError::WindowOutOfRange { from, to, start: sig.t0, end: sig.t_end() });
    }
    let range = sig.index_range(from, to);
    if range.clone().any(|i| sig.in_pulse[i]) {
        return Err(EchoError::WindowOverlapsPulse { from, to });
    }
    Ok(range)
}

/// Background-subtracted integral of `|field|²` over `center ± half_width`.
pub fn echo_area(sig: &Signal, center: f64, half_width: f64, bg: &Background) -> Result<f64> {
    let window = check_window(sig, center - half_width, center + half_width)?;
    let line = match bg.windows(center) {
        None => (0.0, 0.0),
        Some(ws) => {
            let mut pts = Vec::new();
            for (from, to) in ws {
                pts.extend(check_window(sig, from, to)?.map(|i| (sig.time(i), sig.intensity(i))));
            }
            fit_line(&pts)
        }
    };
    let excess: Vec<(f64, f64)> = window
        .map(|i| {
            let t = sig.time(i);
            (t, sig.intensity(i) - (line.0 + line.1 * t))
        })
        .collect();
    Ok(excess.windows(2).map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0)).sum())
}

/// Least-squares `(intercept, slope)`. A single distinct time gives a flat
/// line through the mean.
fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    if pts.is_empty() {
        return (0.0, 0.0);
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    (my - slope * mt, slope)
}

/// Echo areas of the three bins versus one scanned pulse phase.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub scanned: ScannedPhase,
    pub phase_values: Vec<f64>,
    pub central: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl FringeScan {
    pub fn bin(&self, bin: EchoBin) -> &[f64] {
        match bin {
            EchoBin::Left => &self.left,
            EchoBin::Central => &self.central,
            EchoBin::Right => &self.right,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.phase_values.len();
        if [self.central.len(), self.left.len(), self.right.len()].iter().any(|&l| l != n) {
            return Err(EchoError::InvalidParameter("fringe scan columns differ in length".into()));
        }
        if self.phase_values.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(EchoError::InvalidParameter("scan phases must be strictly increasing".into()));
        }
        let span = self.phase_values.last().copied().unwrap_or(0.0) - self.phase_values.first().copied().unwrap_or(0.0);
        if span < TAU - 1e-9 {
            return Err(EchoError::InvalidParameter(format!("scan spans {span} rad, less than 2π")));
        }
        Ok(())
    }

    /// CSV with header `phase_rad,central,left,right`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "phase_rad,central,left,right")?;
        for i in 0..self.phase_values.len() {
            writeln!(out, "{},{},{},{}", self.phase_values[i], self.central[i], self.left[i], self.right[i])?;
        }
        Ok(())
    }
}

/// Signal window covering all three bins and the background windows.
fn scan_window(p: &Fig1Params, bins: &[f64; 3]) -> (f64, f64) {
    let pd = p.pulse_duration;
    (bins[0] - 5.0 * pd - p.dt_samp, bins[2] + 5.0 * pd + p.dt_samp)
}

/// Background windows either side of the side peaks, shared by all bins.
fn scan_background(p: &Fig1Params, bins: &[f64; 3]) -> Background {
    let pd = p.pulse_duration;
    Background::Windows {
        left: (bins[0] - 5.0 * pd, bins[0] - 3.0 * pd),
        right: (bins[2] + 3.0 * pd, bins[2] + 5.0 * pd),
    }
}

/// Simulated field around the three echo bins for one parameter set.
pub fn simulate_bins(p: &Fig1Params, spec: &EnsembleSpec) -> Result<Signal> {
    let bins = bin_times(p)?;
    let seq = build_fig1_sequence(p)?;
    simulate_sequence(&seq, spec, scan_window(p, &bins), p.dt_samp)
}

/// Background-subtracted areas of the left, central and right bins, each
/// integrated over one pulse duration either side of its centre.
pub fn bin_areas(p: &Fig1Params, spec: &EnsembleSpec) -> Result<[f64; 3]> {
    let bins = bin_times(p)?;
    let sig = simulate_bins(p, spec)?;
    let bg = scan_background(p, &bins);
    let hw = p.pulse_duration;
    Ok([
        echo_area(&sig, bins[0], hw, &bg)?,
        echo_area(&sig, bins[1], hw, &bg)?,
        echo_area(&sig, bins[2], hw, &bg)?,
    ])
}

/// `n` equally spaced phases from 0 to 2π inclusive.
pub fn scan_phases(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / (n - 1) as f64).collect()
}

pub fn run_phase_scan(
    p: &Fig1Params,
    spec: &EnsembleSpec,
    scanned: ScannedPhase,
    n_steps: usize,
) -> Result<FringeScan> {
    if n_steps < MIN_SCAN_STEPS {
        return Err(EchoError::InvalidParameter(format!(
            "a phase scan needs at least {MIN_SCAN_STEPS} steps, got {n_steps}"
        )));
    }
    p.validate()?;
    spec.validate()?;
    let phase_values = scan_phases(n_steps);
    let areas = phase_values
        .par_iter()
        .map(|&phi| bin_areas(&p.with_phase(scanned, phi), spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(FringeScan {
        scanned,
        left: areas.iter().map(|a| a[0]).collect(),
        central: areas.iter().map(|a| a[1]).collect(),
        right: areas.iter().map(|a| a[2]).collect(),
        phase_values,
    })
}

/// Fit of `mean·(1 + visibility·cos(φ + phase_offset))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub mean: f64,
    pub visibility: f64,
    pub phase_offset: f64,
    pub rms_residual: f64,
}

impl FringeFit {
    pub fn eval(&self, phi: f64) -> f64 {
        self.mean * (1.0 + self.visibility * (phi + self.phase_offset).cos())
    }
}

pub fn fit_fringe(scan: &FringeScan, bin: EchoBin) -> Result<FringeFit> {
    scan.validate()?;
    fit_sinusoid(&scan.phase_values, scan.bin(bin))
}

/// Linear least squares in `(A, A·V·cos φ₀, A·V·sin φ₀)` via the 3×3 normal
/// equations.
pub fn fit_sinusoid(phases: &[f64], values: &[f64]) -> Result<FringeFit> {
    if phases.len() != values.len() || phases.len() < 3 {
        return Err(EchoError::DegenerateFit(format!(
            "need at least 3 matching points, got {} phases and {} values",
            phases.len(),
            values.len()
        )));
    }
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&phi, &y) in phases.iter().zip(values) {
        let row = [1.0, phi.cos(), -phi.sin()];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let [a, b, c] = solve3(ata, aty)
        .ok_or_else(|| EchoError::DegenerateFit("phases do not determine a sinusoid".into()))?;
    if !(a > 0.0) {
        return Err(EchoError::DegenerateFit(format!("mean level {a} is not positive")));
    }
    let amp = b.hypot(c);
    let rss: f64 = phases
        .iter()
        .zip(values)
        .map(|(&phi, &y)| (y - (a + b * phi.cos() - c * phi.sin())).powi(2))
        .sum();
    Ok(FringeFit {
        mean: a,
        visibility: amp / a,
        phase_offset: if amp > 0.0 { c.atan2(b) } else { 0.0 },
        rms_residual: (rss / phases.len() as f64).sqrt(),
    })
}

/// Cramer's rule; `None` for a (numerically) singular matrix.
fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let scale = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if !(d.abs() > 1e-12 * scale.powi(3)) {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = rhs[row];
        }
        *slot = det(&mc) / d;
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityPoint {
    pub ratio: f64,
    pub v_sim: f64,
    pub v_eq3: f64,
}

/// Data areas `(A·c0, A·c1)` for intensity ratio `ratio`, with
/// `A = hypot(data1, data2)` taken from `p`.
pub fn data_areas_for_ratio(p: &Fig1Params, ratio: f64) -> Result<(f64, f64)> {
    let q = make_timebin(ratio, 0.0, p.dt)?;
    let base = p.areas.data1.hypot(p.areas.data2);
    let (d1, d2) = (base * q.c0, base * q.c1);
    if d1 + d2 > LINEAR_DATA_AREA + 1e-9 {
        return Err(EchoError::InvalidParameter(format!(
            "total data area {} rad exceeds the linear regime ({LINEAR_DATA_AREA} rad)",
            d1 + d2
        )));
    }
    Ok((d1, d2))
}

/// Simulated central-bin visibility against `2√R/(1+R)` for each ratio.
pub fn visibility_curve(
    ratios: &[f64],
    p: &Fig1Params,
    spec: &EnsembleSpec,
    n_steps: usize,
) -> Result<Vec<VisibilityPoint>> {
    ratios
        .iter()
        .map(|&ratio| {
            let (d1, d2) = data_areas_for_ratio(p, ratio)?;
            let mut pr = *p;
            pr.areas.data1 = d1;
            pr.areas.data2 = d2;
            let scan = run_phase_scan(&pr, spec, ScannedPhase::A2, n_steps)?;
            let fit = fit_fringe(&scan, EchoBin::Central)?;
            Ok(VisibilityPoint { ratio, v_sim: fit.visibility, v_eq3: expected_visibility(ratio) })
        })
        .collect()
}

/// CSV with header `R,V_sim,V_eq3`.
pub fn write_visibility_csv<W: Write>(points: &[VisibilityPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "R,V_sim,V_eq3")?;
    for pt in points {
        writeln!(out, "{},{},{}", pt.ratio, pt.v_sim, pt.v_eq3)?;
    }
    Ok(())
}

/// Central-bin fringes versus α5 for the four states α3 ∈ {0, π/2, π, 3π/2},
/// all other phases zero. Requires equal data areas.
pub fn four_state_protocol(p: &Fig1Params, spec: &EnsembleSpec, n_steps: usize) -> Result<[FringeFit; 4]> {
    let (d1, d2) = (p.areas.data1, p.areas.data2);
    if (d1 - d2).abs() > 1e-12 * d1.abs().max(d2.abs()) {
        return Err(EchoError::InvalidParameter(format!(
            "four-state protocol needs equal data areas, got {d1} and {d2}"
        )));
    }
    let mut fits = [FringeFit { mean: 0.0, visibility: 0.0, phase_offset: 0.0, rms_residual: 0.0 }; 4];
    for (slot, &alpha3) in fits.iter_mut().zip(&FOUR_STATE_PREPARATIONS) {
        let mut pk = *p;
        pk.phases = [0.0; 5];
        pk.phases[ScannedPhase::A3.index()] = alpha3;
        let scan = run_phase_scan(&pk, spec, ScannedPhase::A5, n_steps)?;
        *slot = fit_fringe(&scan, EchoBin::Central)?;
    }
    Ok(fits)
}
