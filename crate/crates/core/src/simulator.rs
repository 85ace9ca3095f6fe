//! Renewal cycles of the maintained system and the counting processes of repairs,
//! inspections and failures.
//!
//! A cycle starts as-new with its own inspection schedule `D_1 < D_2 < …` (cumulative
//! gaps). It ends at the first inspection after damage (`V^s = D_{K^r}`) unless the
//! system fails first (`Z^d = Y^s + Y^d ≤ V^s`), in which case an unplanned inspection is
//! made at the failure. Either way the cycle is charged `K^r` inspections.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formulas::Model;
use crate::laws::InspectionLaw;

/// Generator for stream `stream` of `seed`; distinct streams are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleEnd {
    Detected,
    Failed,
}

impl CycleEnd {
    pub fn as_str(&self) -> &'static str {
        match self {
            CycleEnd::Detected => "detected",
            CycleEnd::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub y_s: f64,
    pub y_d: f64,
    /// Planned inspection ages `D_1 < … < D_{K^r}`; the last one is not carried out
    /// when the cycle ends in failure.
    pub inspections: Vec<f64>,
    pub k_r: u32,
    pub v_s: f64,
    pub z_d: f64,
    pub x_r: f64,
    pub end: CycleEnd,
}

impl CycleRecord {
    /// Assembles a cycle from its latent times, drawing gaps until one reaches `y_s`.
    pub fn build(y_s: f64, y_d: f64, mut next_gap: impl FnMut() -> f64) -> Self {
        let mut inspections = Vec::new();
        let mut age = 0.0;
        while age < y_s {
            age += next_gap();
            inspections.push(age);
        }
        let v_s = age;
        let z_d = y_s + y_d;
        // a tie counts as a failure: P_d = P(V^s ≥ Z^d)
        let end = if v_s >= z_d {
            CycleEnd::Failed
        } else {
            CycleEnd::Detected
        };
        Self {
            y_s,
            y_d,
            k_r: inspections.len() as u32,
            inspections,
            v_s,
            z_d,
            x_r: v_s.min(z_d),
            end,
        }
    }

    pub fn failed(&self) -> bool {
        self.end == CycleEnd::Failed
    }

    /// `B̲(age)`: planned inspections carried out at ages `≤ age` within this cycle.
    pub fn planned_by(&self, age: f64) -> u32 {
        self.inspections.partition_point(|&d| d <= age) as u32
    }

    /// Last inspection age that found the system sane (`D_{K-1}`, zero if none).
    pub fn last_clear_inspection(&self) -> f64 {
        if self.k_r >= 2 {
            self.inspections[self.k_r as usize - 2]
        } else {
            0.0
        }
    }
}

pub fn simulate_cycle<R: Rng + ?Sized>(rng: &mut R, model: &Model<f64>) -> CycleRecord {
    let y_s = model.sane.sample(rng);
    let y_d = model.damage.sample(rng);
    let insp = model.inspection;
    CycleRecord::build(y_s, y_d, || insp.sample_gap(rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSnapshot {
    pub t: f64,
    pub n_r: u64,
    pub n_i: u64,
    pub n_f: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: Model<f64>,
    pub horizon: f64,
    pub seed: Option<u64>,
    pub cycles: Vec<CycleRecord>,
    /// Counts at every cycle end and at every requested grid time, by time.
    pub snapshots: Vec<CountSnapshot>,
    ends: Vec<f64>,
    failures_before: Vec<u64>,
    inspections_before: Vec<u64>,
}

/// Simulates whole cycles until their cumulative length reaches `horizon`.
///
/// The run stops at the first cycle end at or after `horizon`, and that time is the
/// trajectory's end. Grid times past the end are rejected.
pub fn simulate_horizon<R: Rng + ?Sized>(
    rng: &mut R,
    model: &Model<f64>,
    horizon: f64,
    grid: &[f64],
) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let mut cycles = Vec::new();
    let mut t = 0.0;
    while t < horizon {
        let cycle = simulate_cycle(rng, model);
        t += cycle.x_r;
        cycles.push(cycle);
    }
    Trajectory::from_cycles(*model, horizon, None, cycles, grid)
}

/// [`simulate_horizon`] on stream 0 of `seed`, recording the seed.
pub fn simulate_seeded(model: &Model<f64>, horizon: f64, grid: &[f64], seed: u64) -> Result<Trajectory> {
    let mut rng = stream_rng(seed, 0);
    let mut traj = simulate_horizon(&mut rng, model, horizon, grid)?;
    traj.seed = Some(seed);
    Ok(traj)
}

impl Trajectory {
    pub fn from_cycles(
        model: Model<f64>,
        horizon: f64,
        seed: Option<u64>,
        cycles: Vec<CycleRecord>,
        grid: &[f64],
    ) -> Result<Self> {
        let mut ends = Vec::with_capacity(cycles.len() + 1);
        let mut failures_before = Vec::with_capacity(cycles.len() + 1);
        let mut inspections_before = Vec::with_capacity(cycles.len() + 1);
        let (mut t, mut nf, mut ni) = (0.0, 0u64, 0u64);
        ends.push(0.0);
        failures_before.push(0);
        inspections_before.push(0);
        for c in &cycles {
            t += c.x_r;
            nf += c.failed() as u64;
            ni += c.k_r as u64;
            ends.push(t);
            failures_before.push(nf);
            inspections_before.push(ni);
        }
        let mut traj = Self {
            model,
            horizon,
            seed,
            cycles,
            snapshots: Vec::new(),
            ends,
            failures_before,
            inspections_before,
        };
        let mut snapshots: Vec<CountSnapshot> = (1..traj.ends.len())
            .map(|i| CountSnapshot {
                t: traj.ends[i],
                n_r: i as u64,
                n_i: traj.inspections_before[i],
                n_f: traj.failures_before[i],
            })
            .collect();
        for &g in grid {
            snapshots.push(traj.counts_at(g)?);
        }
        snapshots.sort_by(|a, b| a.t.total_cmp(&b.t));
        traj.snapshots = snapshots;
        Ok(traj)
    }

    /// Cumulative time at which the last simulated cycle ends.
    pub fn end_time(&self) -> f64 {
        *self.ends.last().expect("ends holds the origin")
    }

    /// Counts at the trajectory's end.
    pub fn final_counts(&self) -> CountSnapshot {
        let i = self.cycles.len();
        CountSnapshot {
            t: self.end_time(),
            n_r: i as u64,
            n_i: self.inspections_before[i],
            n_f: self.failures_before[i],
        }
    }

    /// Index of the cycle open at `t` (= completed cycles by `t`) and its start.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(t >= 0.0) || t > self.end_time() {
            return Err(Error::BeyondHorizon {
                t,
                end: self.end_time(),
            });
        }
        // ends[0] = 0 ≤ t, so at least one entry qualifies
        let completed = self.ends.partition_point(|&e| e <= t) - 1;
        Ok((completed, self.ends[completed]))
    }

    /// `(N^r_t, N^i_t, N^f_t)`. The open cycle contributes its planned inspections so far.
    pub fn counts_at(&self, t: f64) -> Result<CountSnapshot> {
        let (completed, start) = self.locate(t)?;
        let tail = match self.cycles.get(completed) {
            Some(open) => open.planned_by(t - start) as u64,
            None => 0,
        };
        Ok(CountSnapshot {
            t,
            n_r: completed as u64,
            n_i: self.inspections_before[completed] + tail,
            n_f: self.failures_before[completed],
        })
    }

    /// `(A_t, B̲(A_t))`: time since the last repair and planned inspections since.
    pub fn age_and_index(&self, t: f64) -> Result<(f64, u32)> {
        let (completed, start) = self.locate(t)?;
        let age = t - start;
        let index = self.cycles.get(completed).map_or(0, |c| c.planned_by(age));
        Ok((age, index))
    }

    /// Cycles that ended by `t`.
    pub fn completed_by(&self, t: f64) -> &[CycleRecord] {
        let n = self.ends.partition_point(|&e| e <= t) - 1;
        &self.cycles[..n.min(self.cycles.len())]
    }

    pub fn write_event_log<W: Write>(&self, w: W) -> Result<()> {
        write_event_log(w, &self.cycles)
    }

    pub fn write_snapshots<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,n_r,n_i,n_f")?;
        for s in &self.snapshots {
            writeln!(w, "{},{},{},{}", fmt_time(s.t), s.n_r, s.n_i, s.n_f)?;
        }
        Ok(())
    }

    pub fn write_inspection_log<W: Write>(&self, w: W) -> Result<()> {
        write_inspection_log(w, &self.cycles)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_time(x: f64) -> String {
    format!("{x:.16e}")
}

pub const EVENT_LOG_HEADER: &str = "cycle,y_s,y_d,k_r,v_s,z_d,x_r,end";
pub const INSPECTION_LOG_HEADER: &str = "cycle,index,age";

pub fn write_event_log<W: Write>(mut w: W, cycles: &[CycleRecord]) -> Result<()> {
    writeln!(w, "{EVENT_LOG_HEADER}")?;
    for (i, c) in cycles.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            fmt_time(c.y_s),
            fmt_time(c.y_d),
            c.k_r,
            fmt_time(c.v_s),
            fmt_time(c.z_d),
            fmt_time(c.x_r),
            c.end.as_str()
        )?;
    }
    Ok(())
}

/// Every planned inspection age, one row per inspection, for random schedules.
pub fn write_inspection_log<W: Write>(mut w: W, cycles: &[CycleRecord]) -> Result<()> {
    writeln!(w, "{INSPECTION_LOG_HEADER}")?;
    for (i, c) in cycles.iter().enumerate() {
        for (k, d) in c.inspections.iter().enumerate() {
            writeln!(w, "{},{},{}", i + 1, k + 1, fmt_time(*d))?;
        }
    }
    Ok(())
}

fn rows<R: BufRead>(r: R, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    let mut lines = r.lines().enumerate();
    let first = lines.next().map(|(_, l)| l).transpose()?;
    if first.as_deref().map(str::trim) != Some(header) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{header}`"),
        });
    }
    let width = header.split(',').count();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != width {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        out.push((i + 1, fields));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad {name} `{raw}`"),
    })
}

/// Reads an event log back into cycles.
///
/// Deterministic schedules are rebuilt from `k_r`; random schedules need the
/// inspection log written alongside.
pub fn read_event_log<R: BufRead, Q: BufRead>(
    events: R,
    inspection: &InspectionLaw<f64>,
    inspection_log: Option<Q>,
) -> Result<Vec<CycleRecord>> {
    let mut schedules: Vec<Vec<f64>> = Vec::new();
    if let Some(log) = inspection_log {
        for (line, f) in rows(log, INSPECTION_LOG_HEADER)? {
            let cycle: usize = field(line, "cycle", &f[0])?;
            let index: usize = field(line, "index", &f[1])?;
            let age: f64 = field(line, "age", &f[2])?;
            if cycle == 0 || index == 0 {
                return Err(Error::Parse { line, message: "indices start at 1".into() });
            }
            if schedules.len() < cycle {
                schedules.resize(cycle, Vec::new());
            }
            let s = &mut schedules[cycle - 1];
            if s.len() + 1 != index {
                return Err(Error::Parse { line, message: "inspection indices out of order".into() });
            }
            s.push(age);
        }
    } else if let InspectionLaw::Uniform { .. } = inspection {
        return Err(Error::InvalidArgument(
            "random inspection schedules need the inspection log".into(),
        ));
    }

    let mut cycles = Vec::new();
    for (line, f) in rows(events, EVENT_LOG_HEADER)? {
        let idx: usize = field(line, "cycle", &f[0])?;
        if idx != cycles.len() + 1 {
            return Err(Error::Parse { line, message: "cycles out of order".into() });
        }
        let y_s: f64 = field(line, "y_s", &f[1])?;
        let y_d: f64 = field(line, "y_d", &f[2])?;
        let k_r: u32 = field(line, "k_r", &f[3])?;
        let v_s: f64 = field(line, "v_s", &f[4])?;
        let z_d: f64 = field(line, "z_d", &f[5])?;
        let x_r: f64 = field(line, "x_r", &f[6])?;
        let end = match f[7].as_str() {
            "detected" => CycleEnd::Detected,
            "failed" => CycleEnd::Failed,
            other => {
                return Err(Error::Parse { line, message: format!("bad end `{other}`") })
            }
        };
        let inspections = match inspection {
            InspectionLaw::Deterministic { c } => (1..=k_r).map(|k| k as f64 * c).collect(),
            InspectionLaw::Uniform { .. } => schedules.get(idx - 1).cloned().unwrap_or_default(),
        };
        if inspections.len() != k_r as usize {
            return Err(Error::Parse {
                line,
                message: format!("cycle {idx} has {} inspection ages for k_r = {k_r}", inspections.len()),
            });
        }
        cycles.push(CycleRecord { y_s, y_d, inspections, k_r, v_s, z_d, x_r, end });
    }
    Ok(cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{DamageLaw, SaneLaw};

    fn model(h: Option<f64>) -> Model<f64> {
        let insp = match h {
            None => InspectionLaw::deterministic(1000.0).unwrap(),
            Some(h) => InspectionLaw::uniform(1000.0, h).unwrap(),
        };
        Model::new(SaneLaw::new(1, 1e-3).unwrap(), DamageLaw::new(5e-4).unwrap(), insp)
    }

    #[test]
    fn hand_traced_cycles() {
        let c = CycleRecord::build(1500.0, 10_000.0, || 1000.0);
        assert_eq!((c.k_r, c.v_s, c.z_d, c.x_r, c.end), (2, 2000.0, 11_500.0, 2000.0, CycleEnd::Detected));
        let c = CycleRecord::build(1500.0, 100.0, || 1000.0);
        assert_eq!((c.k_r, c.v_s, c.z_d, c.x_r, c.end), (2, 2000.0, 1600.0, 1600.0, CycleEnd::Failed));
        assert_eq!(c.last_clear_inspection(), 1000.0);
        // damage exactly at an inspection is detected there
        let c = CycleRecord::build(1000.0, 5.0, || 1000.0);
        assert_eq!((c.k_r, c.v_s, c.end), (1, 1000.0, CycleEnd::Detected));
        // tie between detection and failure counts as failure
        let c = CycleRecord::build(500.0, 500.0, || 1000.0);
        assert_eq!(c.end, CycleEnd::Failed);
    }

    #[test]
    fn cycle_invariants_hold() {
        let mut rng = stream_rng(11, 0);
        let m = model(Some(100.0));
        for _ in 0..10_000 {
            let c = simulate_cycle(&mut rng, &m);
            let k = c.k_r as usize;
            assert!(k >= 1 && c.inspections.len() == k);
            let prev = if k >= 2 { c.inspections[k - 2] } else { 0.0 };
            assert!(prev < c.y_s && c.y_s <= c.inspections[k - 1]);
            assert_eq!(c.x_r, c.v_s.min(c.z_d));
            assert_eq!(c.failed(), c.v_s >= c.z_d);
            if c.failed() {
                assert!(prev < c.z_d && c.z_d <= c.inspections[k - 1]);
            }
        }
    }

    #[test]
    fn snapshots_reconstruct_from_cycles() {
        let m = model(None);
        let grid = [0.0, 1234.5, 50_000.0, 99_999.0];
        let traj = simulate_seeded(&m, 100_000.0, &grid, 5).unwrap();
        assert!(traj.end_time() >= 100_000.0);
        assert!(traj.end_time() - traj.cycles.last().unwrap().x_r < 100_000.0);
        for s in &traj.snapshots {
            let mut start = 0.0;
            let (mut nr, mut ni, mut nf) = (0, 0, 0);
            for c in &traj.cycles {
                if start + c.x_r <= s.t {
                    nr += 1;
                    ni += c.k_r as u64;
                    nf += c.failed() as u64;
                    start += c.x_r;
                } else {
                    ni += c.planned_by(s.t - start) as u64;
                    break;
                }
            }
            assert_eq!((s.n_r, s.n_i, s.n_f), (nr, ni, nf), "at t = {}", s.t);
            assert!(s.n_f <= s.n_r && s.n_i >= s.n_r);
        }
        assert!(traj.counts_at(traj.end_time() * 1.01).is_err());
    }

    #[test]
    fn age_and_index_examples() {
        let cycles = vec![
            CycleRecord::build(1500.0, 10_000.0, || 1000.0),
            CycleRecord::build(3700.0, 10_000.0, || 1000.0),
        ];
        let traj = Trajectory::from_cycles(model(None), 5000.0, None, cycles, &[]).unwrap();
        assert_eq!(traj.age_and_index(2000.0).unwrap(), (0.0, 0));
        assert_eq!(traj.age_and_index(4500.0).unwrap(), (2500.0, 2));
        let s = traj.counts_at(4500.0).unwrap();
        assert_eq!((s.n_r, s.n_i, s.n_f), (1, 4, 0));
    }

    #[test]
    fn short_horizon_has_no_completed_cycle_at_horizon() {
        let cycles = vec![CycleRecord::build(1500.0, 10_000.0, || 1000.0)];
        let traj = Trajectory::from_cycles(model(None), 500.0, None, cycles, &[500.0]).unwrap();
        let s = traj.counts_at(500.0).unwrap();
        assert_eq!((s.n_r, s.n_i, s.n_f), (0, 0, 0));
        assert!(traj.completed_by(500.0).is_empty());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let m = model(Some(100.0));
        let a = simulate_seeded(&m, 1e6, &[5e5], 42).unwrap();
        let b = simulate_seeded(&m, 1e6, &[5e5], 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_seeded(&m, 1e6, &[5e5], 43).unwrap();
        assert_ne!(a.cycles, c.cycles);
    }

    #[test]
    fn event_log_round_trip() {
        for h in [None, Some(100.0)] {
            let m = model(h);
            let traj = simulate_seeded(&m, 2e5, &[], 8).unwrap();
            let mut events = Vec::new();
            let mut insp = Vec::new();
            traj.write_event_log(&mut events).unwrap();
            traj.write_inspection_log(&mut insp).unwrap();
            let back = read_event_log(&events[..], &m.inspection, Some(&insp[..])).unwrap();
            assert_eq!(back, traj.cycles);
            if h.is_none() {
                let back = read_event_log(&events[..], &m.inspection, None::<&[u8]>).unwrap();
                assert_eq!(back, traj.cycles);
            } else {
                assert!(read_event_log(&events[..], &m.inspection, None::<&[u8]>).is_err());
            }
        }
    }

    #[test]
    fn event_log_header_and_number_format() {
        let cycles = vec![CycleRecord::build(1500.0, 100.0, || 1000.0)];
        let mut out = Vec::new();
        write_event_log(&mut out, &cycles).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(EVENT_LOG_HEADER));
        assert_eq!(
            lines.next(),
            Some("1,1.5000000000000000e3,1.0000000000000000e2,2,2.0000000000000000e3,1.6000000000000000e3,1.6000000000000000e3,failed")
        );
    }
}
